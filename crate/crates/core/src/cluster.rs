//! Connected-component labelling on sparse pixel sets.

use std::collections::HashMap;

/// Labels pixels so that any two within Chebyshev distance `link` share a
/// component (`link = 1` is 8-connectivity). Labels are dense, assigned in
/// order of each component's first pixel.
pub fn label_components(pixels: &[(i32, i32)], link: i32) -> (Vec<usize>, usize) {
    let index: HashMap<(i32, i32), usize> =
        pixels.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut parent: Vec<usize> = (0..pixels.len()).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for (i, &(x, y)) in pixels.iter().enumerate() {
        for dy in 0..=link {
            for dx in -link..=link {
                if dy == 0 && dx <= 0 {
                    continue;
                }
                if let Some(&j) = index.get(&(x + dx, y + dy)) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }

    let mut dense = HashMap::new();
    let mut labels = Vec::with_capacity(pixels.len());
    for i in 0..pixels.len() {
        let root = find(&mut parent, i);
        let next = dense.len();
        labels.push(*dense.entry(root).or_insert(next));
    }
    (labels, dense.len())
}

/// Groups pixel indices by component label.
pub fn components(pixels: &[(i32, i32)], link: i32) -> Vec<Vec<usize>> {
    let (labels, n) = label_components(pixels, link);
    let mut groups = vec![Vec::new(); n];
    for (i, l) in labels.into_iter().enumerate() {
        groups[l].push(i);
    }
    groups
}
