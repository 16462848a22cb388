//! Wide-stencil lattice directions and the orthogonal frames built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One lattice direction `(p, q)` with `gcd(|p|, |q|) = 1`, representing an
/// antipodal pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub lattice: (i32, i32),
    pub unit: [f64; 2],
    /// Euclidean length of the lattice vector, in grid steps.
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct StencilSet {
    width: u32,
    directions: Vec<Direction>,
    frames: Vec<[usize; 2]>,
}

fn gcd(mut a: i32, mut b: i32) -> i32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Canonical representative of `±(p, q)`: `q > 0`, or `q = 0` and `p > 0`.
fn canonical(p: i32, q: i32) -> (i32, i32) {
    if q > 0 || (q == 0 && p > 0) {
        (p, q)
    } else {
        (-p, -q)
    }
}

impl StencilSet {
    pub fn new(width: u32) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidProblem("stencil width must be >= 1".into()));
        }
        let w = width as i32;
        let mut lattice = Vec::new();
        for q in 0..=w {
            for p in -w..=w {
                if (p, q) == (0, 0) || gcd(p, q) != 1 || canonical(p, q) != (p, q) {
                    continue;
                }
                lattice.push((p, q));
            }
        }
        // Order by lattice length, then angle, so the axis frame comes first.
        lattice.sort_by(|a, b| {
            let la = a.0 * a.0 + a.1 * a.1;
            let lb = b.0 * b.0 + b.1 * b.1;
            la.cmp(&lb).then_with(|| {
                let ta = (a.1 as f64).atan2(a.0 as f64);
                let tb = (b.1 as f64).atan2(b.0 as f64);
                ta.total_cmp(&tb)
            })
        });
        let directions: Vec<Direction> = lattice
            .iter()
            .map(|&(p, q)| {
                let length = ((p * p + q * q) as f64).sqrt();
                Direction {
                    lattice: (p, q),
                    unit: [p as f64 / length, q as f64 / length],
                    length,
                }
            })
            .collect();
        let mut frames = Vec::new();
        for (i, &(p, q)) in lattice.iter().enumerate() {
            let perp = canonical(-q, p);
            let j = lattice
                .iter()
                .position(|&d| d == perp)
                .expect("perpendicular of a primitive vector stays primitive and in range");
            if i < j {
                frames.push([i, j]);
            }
        }
        Ok(StencilSet {
            width,
            directions,
            frames,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn frames(&self) -> &[[usize; 2]] {
        &self.frames
    }

    /// Longest nominal arm, in grid steps.
    pub fn reach(&self) -> f64 {
        self.directions
            .iter()
            .map(|d| d.length)
            .fold(0.0, f64::max)
    }

    /// `min over frames of Σ 2/|v|²`: the smallest diagonal weight (in units
    /// of `h⁻²`) a frame puts on its center node at full arms.
    pub fn min_center_weight(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| f.iter().map(|&d| 2.0 / (self.directions[d].length.powi(2))).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<u32> for StencilSet {
    type Error = Error;
    fn try_from(w: u32) -> Result<Self> {
        StencilSet::new(w)
    }
}

impl From<StencilSet> for u32 {
    fn from(s: StencilSet) -> u32 {
        s.width
    }
}
