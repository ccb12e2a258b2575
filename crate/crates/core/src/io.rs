//! Event file formats.
//!
//! CSV: an optional header line
//! `# width=<W> height=<H> view=<lateral|rear> trigger_t=<µs|none>`
//! followed by one `t_us,x,y,p` record per line.
//!
//! Binary (`EVS1`): magic, then little-endian `u16 width`, `u16 height`,
//! `u8 view`, `u8 flags` (bit 0: trigger present), optional `u64 trigger_t`,
//! `u64 count`, then `count` records of `u64 t, u16 x, u16 y, i8 p, u8 0`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, View, SENSOR_HEIGHT, SENSOR_WIDTH};

pub const MAGIC: [u8; 4] = *b"EVS1";
const RECORD_LEN: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// Guesses the format from the leading bytes.
    pub fn sniff(bytes: &[u8]) -> Format {
        if bytes.starts_with(&MAGIC) {
            Format::Binary
        } else {
            Format::Csv
        }
    }
}

pub fn parse_events(bytes: &[u8], format: Format) -> Result<EventStream> {
    match format {
        Format::Csv => parse_csv(bytes),
        Format::Binary => parse_binary(bytes),
    }
}

pub fn read_stream(path: &Path) -> Result<EventStream> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_events(&bytes, Format::sniff(&bytes))
}

pub fn write_stream(path: &Path, stream: &EventStream, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Csv => to_csv(stream).into_bytes(),
        Format::Binary => to_binary(stream),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("line {line}"),
        message: msg.into(),
    }
}

fn parse_csv(bytes: &[u8]) -> Result<EventStream> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        location: format!("byte {}", e.valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;
    let mut width = SENSOR_WIDTH;
    let mut height = SENSOR_HEIGHT;
    let mut view = View::Lateral;
    let mut trigger_t = None;
    let mut events = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if i != 0 {
                return Err(parse_error(lineno, "header must be the first line"));
            }
            for field in header.split_whitespace() {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| parse_error(lineno, format!("bad header field '{field}'")))?;
                let bad = |_: std::num::ParseIntError| {
                    parse_error(lineno, format!("bad value for '{key}'"))
                };
                match key {
                    "width" => width = value.parse().map_err(bad)?,
                    "height" => height = value.parse().map_err(bad)?,
                    "view" => {
                        view = value
                            .parse()
                            .map_err(|_| parse_error(lineno, format!("bad value for '{key}'")))?
                    }
                    "trigger_t" => {
                        trigger_t = if value == "none" {
                            None
                        } else {
                            Some(value.parse().map_err(bad)?)
                        }
                    }
                    _ => return Err(parse_error(lineno, format!("unknown header key '{key}'"))),
                }
            }
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields
                .next()
                .map(str::trim)
                .ok_or_else(|| parse_error(lineno, format!("missing field '{name}'")))
        };
        let t: i64 = next("t")?
            .parse()
            .map_err(|_| parse_error(lineno, "bad timestamp"))?;
        let x: u16 = next("x")?
            .parse()
            .map_err(|_| parse_error(lineno, "bad x"))?;
        let y: u16 = next("y")?
            .parse()
            .map_err(|_| parse_error(lineno, "bad y"))?;
        let p: i8 = next("p")?
            .parse()
            .map_err(|_| parse_error(lineno, "bad polarity"))?;
        if fields.next().is_some() {
            return Err(parse_error(lineno, "too many fields"));
        }
        if p != 1 && p != -1 {
            return Err(parse_error(lineno, format!("polarity {p} is not 1 or -1")));
        }
        if x >= width || y >= height {
            return Err(parse_error(
                lineno,
                format!("({x}, {y}) outside {width}x{height} sensor"),
            ));
        }
        if let Some(prev) = events.last().map(|e: &Event| e.t) {
            if t < prev {
                return Err(parse_error(
                    lineno,
                    format!("timestamp {t} precedes {prev}"),
                ));
            }
        }
        events.push(Event::new(t, x, y, p));
    }
    EventStream::new(view, width, height, trigger_t, events)
}

pub fn to_csv(stream: &EventStream) -> String {
    let mut out = format!(
        "# width={} height={} view={} trigger_t={}\n",
        stream.width,
        stream.height,
        stream.view.as_str(),
        stream
            .trigger_t
            .map_or_else(|| "none".to_string(), |t| t.to_string())
    );
    for e in stream.events() {
        use std::fmt::Write;
        let _ = writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.p);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Parse {
                location: format!("byte {}", self.pos),
                message: format!("truncated {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn fail(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            location: format!("byte {offset}"),
            message: message.into(),
        }
    }
}

fn parse_binary(bytes: &[u8]) -> Result<EventStream> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.fail(0, "bad magic, expected EVS1"));
    }
    let width = r.u16("width")?;
    let height = r.u16("height")?;
    let view_at = r.pos;
    let view = match r.u8("view")? {
        0 => View::Lateral,
        1 => View::Rear,
        v => return Err(r.fail(view_at, format!("unknown view code {v}"))),
    };
    let flags_at = r.pos;
    let flags = r.u8("flags")?;
    if flags & !1 != 0 {
        return Err(r.fail(flags_at, format!("reserved flag bits set: {flags:#04x}")));
    }
    let trigger_t = if flags & 1 == 1 {
        Some(r.u64("trigger_t")? as i64)
    } else {
        None
    };
    let count = r.u64("event count")? as usize;
    let remaining = bytes.len() - r.pos;
    if remaining != count * RECORD_LEN {
        return Err(r.fail(
            r.pos,
            format!(
                "expected {count} records ({} bytes), found {remaining} bytes",
                count * RECORD_LEN
            ),
        ));
    }
    let mut events = Vec::with_capacity(count);
    let mut prev = i64::MIN;
    for _ in 0..count {
        let at = r.pos;
        let t = r.u64("t")? as i64;
        let x = r.u16("x")?;
        let y = r.u16("y")?;
        let p = r.u8("p")? as i8;
        let pad = r.u8("pad")?;
        if p != 1 && p != -1 {
            return Err(r.fail(at, format!("polarity {p} is not 1 or -1")));
        }
        if pad != 0 {
            return Err(r.fail(at + RECORD_LEN - 1, "nonzero pad byte"));
        }
        if x >= width || y >= height {
            return Err(r.fail(at, format!("({x}, {y}) outside {width}x{height} sensor")));
        }
        if t < prev {
            return Err(r.fail(at, format!("timestamp {t} precedes {prev}")));
        }
        prev = t;
        events.push(Event::new(t, x, y, p));
    }
    EventStream::new(view, width, height, trigger_t, events)
}

pub fn to_binary(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(30 + stream.len() * RECORD_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&stream.width.to_le_bytes());
    out.extend_from_slice(&stream.height.to_le_bytes());
    out.push(match stream.view {
        View::Lateral => 0,
        View::Rear => 1,
    });
    out.push(stream.trigger_t.is_some() as u8);
    if let Some(t) = stream.trigger_t {
        out.extend_from_slice(&(t as u64).to_le_bytes());
    }
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&(e.t as u64).to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.p as u8);
        out.push(0);
    }
    out
}
