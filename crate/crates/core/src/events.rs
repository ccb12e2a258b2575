//! Event data model, packetization and frame accumulation.
//!
//! Timestamps are integer microseconds on the trial's common time base.
//! Packets are half-open 500 µs bins aligned to absolute multiples of the
//! bin width, so packet indices are comparable across views.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of one event packet in microseconds.
pub const PACKET_US: i64 = 500;

/// Sensor width of the reference camera.
pub const SENSOR_WIDTH: u16 = 1280;
/// Sensor height of the reference camera.
pub const SENSOR_HEIGHT: u16 = 720;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Lateral,
    Rear,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Lateral => "lateral",
            View::Rear => "rear",
        }
    }
}

impl std::str::FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lateral" => Ok(View::Lateral),
            "rear" => Ok(View::Rear),
            other => Err(Error::Invalid(format!("unknown view '{other}'"))),
        }
    }
}

/// One brightness-change record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: i64,
    pub x: u16,
    pub y: u16,
    /// +1 or -1.
    pub p: i8,
}

impl Event {
    pub fn new(t: i64, x: u16, y: u16, p: i8) -> Self {
        Self { t, x, y, p }
    }
}

/// A time-ordered, bounds-checked event sequence from one view.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub view: View,
    pub width: u16,
    pub height: u16,
    pub trigger_t: Option<i64>,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream, validating polarity, sensor bounds and time order.
    pub fn new(
        view: View,
        width: u16,
        height: u16,
        trigger_t: Option<i64>,
        events: Vec<Event>,
    ) -> Result<Self> {
        let mut prev = i64::MIN;
        for (i, e) in events.iter().enumerate() {
            if e.p != 1 && e.p != -1 {
                return Err(Error::Invalid(format!(
                    "event {i}: polarity {} is not +1 or -1",
                    e.p
                )));
            }
            if e.x >= width || e.y >= height {
                return Err(Error::Invalid(format!(
                    "event {i}: ({}, {}) outside {width}x{height} sensor",
                    e.x, e.y
                )));
            }
            if e.t < prev {
                return Err(Error::Invalid(format!(
                    "event {i}: timestamp {} precedes {prev}",
                    e.t
                )));
            }
            prev = e.t;
        }
        Ok(Self {
            view,
            width,
            height,
            trigger_t,
            events,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// First and last timestamps, if any.
    pub fn time_range(&self) -> Option<(i64, i64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    /// Events with `t0 <= t < t1`.
    pub fn window(&self, t0: i64, t1: i64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < t0);
        let hi = self.events.partition_point(|e| e.t < t1);
        if hi <= lo {
            &[]
        } else {
            &self.events[lo..hi]
        }
    }

    /// Returns a copy with every timestamp shifted by `dt`.
    pub fn shifted(&self, dt: i64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| Event { t: e.t + dt, ..*e })
                .collect(),
            trigger_t: self.trigger_t.map(|t| t + dt),
            ..self.clone()
        }
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Packets covering the stream.
    pub fn packets(&self) -> Vec<EventPacket<'_>> {
        packetize(self)
    }
}

/// All events of one 500 µs bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventPacket<'a> {
    pub t_start: i64,
    pub events: &'a [Event],
}

impl EventPacket<'_> {
    pub fn count(&self) -> usize {
        self.events.len()
    }

    pub fn t_end(&self) -> i64 {
        self.t_start + PACKET_US
    }

    pub fn midpoint(&self) -> i64 {
        self.t_start + PACKET_US / 2
    }

    pub fn contains(&self, t: i64) -> bool {
        self.t_start <= t && t < self.t_end()
    }
}

/// Start of the bin containing `t`.
pub fn packet_floor(t: i64) -> i64 {
    t.div_euclid(PACKET_US) * PACKET_US
}

/// Splits the stream into dense, absolutely aligned 500 µs packets. Empty
/// bins between the first and last event are kept with count 0.
pub fn packetize(stream: &EventStream) -> Vec<EventPacket<'_>> {
    let events = stream.events();
    let Some((first, last)) = stream.time_range() else {
        return Vec::new();
    };
    let start = packet_floor(first);
    let n = ((last - start) / PACKET_US + 1) as usize;
    let mut packets = Vec::with_capacity(n);
    let mut lo = 0usize;
    for k in 0..n {
        let t_start = start + k as i64 * PACKET_US;
        let t_end = t_start + PACKET_US;
        let mut hi = lo;
        while hi < events.len() && events[hi].t < t_end {
            hi += 1;
        }
        packets.push(EventPacket {
            t_start,
            events: &events[lo..hi],
        });
        lo = hi;
    }
    packets
}

/// Aligned packets covering `[t0, t1)` of a time-sorted event slice,
/// including empty bins.
pub fn packetize_range(events: &[Event], t0: i64, t1: i64) -> Vec<EventPacket<'_>> {
    let start = packet_floor(t0);
    let mut lo = events.partition_point(|e| e.t < start);
    let mut packets = Vec::new();
    let mut t_start = start;
    while t_start < t1 {
        let t_end = t_start + PACKET_US;
        let mut hi = lo;
        while hi < events.len() && events[hi].t < t_end {
            hi += 1;
        }
        packets.push(EventPacket {
            t_start,
            events: &events[lo..hi],
        });
        lo = hi;
        t_start = t_end;
    }
    packets
}

/// Which events contribute to an accumulated image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarityFilter {
    Positive,
    Negative,
}

/// Per-pixel signed accumulation over a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarityImage {
    pub width: u16,
    pub height: u16,
    pub t_start: i64,
    pub duration: i64,
    data: Vec<i32>,
}

impl PolarityImage {
    pub fn zeros(width: u16, height: u16, t_start: i64, duration: i64) -> Self {
        Self {
            width,
            height,
            t_start,
            duration,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u16, y: u16) -> i32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u16, y: u16, v: i32) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    fn add(&mut self, x: u16, y: u16, v: i32) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] += v;
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    /// Coordinates of all pixels with a strictly positive value, row-major.
    pub fn positive_pixels(&self) -> Vec<(u16, u16)> {
        let w = self.width as usize;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, _)| ((i % w) as u16, (i / w) as u16))
            .collect()
    }

    /// Coordinates of all pixels with a nonzero value, row-major.
    pub fn nonzero_pixels(&self) -> Vec<(u16, u16)> {
        let w = self.width as usize;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| ((i % w) as u16, (i / w) as u16))
            .collect()
    }

    /// Pixel-wise sum; both images must share dimensions.
    pub fn sum(&self, other: &PolarityImage) -> PolarityImage {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let t_start = self.t_start.min(other.t_start);
        let t_end = (self.t_start + self.duration).max(other.t_start + other.duration);
        PolarityImage {
            width: self.width,
            height: self.height,
            t_start,
            duration: t_end - t_start,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Accumulates events in `[t_start, t_start + duration)`. Without a filter
/// the polarities are summed; with a filter, matching events are counted.
pub fn accumulate(
    stream: &EventStream,
    t_start: i64,
    duration: i64,
    filter: Option<PolarityFilter>,
) -> Result<PolarityImage> {
    if duration <= 0 {
        return Err(Error::Invalid(format!(
            "accumulation duration must be positive, got {duration}"
        )));
    }
    let mut img = PolarityImage::zeros(stream.width, stream.height, t_start, duration);
    accumulate_into(&mut img, stream.window(t_start, t_start + duration), filter);
    Ok(img)
}

/// Accumulates an event slice into `img` (no time filtering).
pub fn accumulate_into(img: &mut PolarityImage, events: &[Event], filter: Option<PolarityFilter>) {
    for e in events {
        match filter {
            None => img.add(e.x, e.y, e.p as i32),
            Some(PolarityFilter::Positive) if e.p > 0 => img.add(e.x, e.y, 1),
            Some(PolarityFilter::Negative) if e.p < 0 => img.add(e.x, e.y, 1),
            _ => {}
        }
    }
}
