//! Axis-aligned buildings and segment blockage.

use serde::{Deserialize, Serialize};

use crate::dataset::Point3;

/// Axis-aligned box standing on the ground plane `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub height: f64,
}

impl Building {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64, height: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
            height,
        }
    }

    fn lo(&self) -> [f64; 3] {
        [self.min_x, self.min_y, 0.0]
    }

    fn hi(&self) -> [f64; 3] {
        [self.max_x, self.max_y, self.height]
    }

    /// Closed-box containment; points on a face count as inside.
    pub fn contains(&self, p: &Point3) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        let c = [p.x, p.y, p.z];
        (0..3).all(|k| c[k] >= lo[k] && c[k] <= hi[k])
    }

    /// Whether the segment `a → b` touches the box, by the slab method.
    pub fn intersects_segment(&self, a: &Point3, b: &Point3) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        let o = [a.x, a.y, a.z];
        let d = [b.x - a.x, b.y - a.y, b.z - a.z];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            if d[k] == 0.0 {
                if o[k] < lo[k] || o[k] > hi[k] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[k];
            let (mut ta, mut tb) = ((lo[k] - o[k]) * inv, (hi[k] - o[k]) * inv);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    /// Horizontal footprints overlap once each is grown by `gap / 2`.
    pub(crate) fn footprint_overlaps(&self, other: &Building, gap: f64) -> bool {
        self.min_x < other.max_x + gap
            && other.min_x < self.max_x + gap
            && self.min_y < other.max_y + gap
            && other.min_y < self.max_y + gap
    }

    pub fn roof_center(&self) -> Point3 {
        Point3::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
            self.height,
        )
    }
}

/// Number of distinct buildings the segment `tx → rx` passes through or touches.
pub fn ray_blockage(tx: &Point3, rx: &Point3, buildings: &[Building]) -> usize {
    buildings.iter().filter(|b| b.intersects_segment(tx, rx)).count()
}
