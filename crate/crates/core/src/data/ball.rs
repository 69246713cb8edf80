//! Anti-aliased disc bouncing inside a rectangular frame.
//!
//! Continuous coordinates span `[0, W] × [0, H]`; pixel `(i, j)` has its
//! center at `(i + 0.5, j + 0.5)`.

use crate::data::{Descriptor, SequenceDataset, Split};
use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;
use crate::rng::{Rng, ALGORITHM};

/// Position and velocity of a moving object, in pixels and pixels per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl MotionState {
    /// Advance one frame, reflecting position and velocity off walls at
    /// `lo[axis]` and `hi[axis]`.
    pub fn advance(&mut self, lo: [f64; 2], hi: [f64; 2]) {
        for axis in 0..2 {
            let mut p = self.position[axis] + self.velocity[axis];
            let mut v = self.velocity[axis];
            // more than one reflection only when speed exceeds the free span
            for _ in 0..8 {
                if p > hi[axis] {
                    p = 2.0 * hi[axis] - p;
                    v = -v;
                } else if p < lo[axis] {
                    p = 2.0 * lo[axis] - p;
                    v = -v;
                } else {
                    break;
                }
            }
            self.position[axis] = p.clamp(lo[axis], hi[axis]);
            self.velocity[axis] = v;
        }
    }
}

/// Draw a per-axis velocity: magnitude uniform in `[min, max]`, random sign.
pub(crate) fn random_velocity(rng: &mut Rng, min: f64, max: f64) -> [f64; 2] {
    let vx = rng.range(min, max) * rng.sign();
    let vy = rng.range(min, max) * rng.sign();
    [vx, vy]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallParams {
    pub count: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub seed: u64,
}

impl Default for BallParams {
    fn default() -> Self {
        BallParams {
            count: 2000,
            frames: 10,
            width: 40,
            height: 40,
            radius_min: 3.0,
            radius_max: 5.0,
            speed_min: 0.5,
            speed_max: 2.5,
            seed: 42,
        }
    }
}

impl BallParams {
    pub fn descriptor(&self, split: Split) -> Descriptor {
        Descriptor::new("bouncing_ball")
            .with("rng", ALGORITHM)
            .with("seed", self.seed)
            .with("count", self.count)
            .with("frames", self.frames)
            .with("width", self.width)
            .with("height", self.height)
            .with("radius_min", self.radius_min)
            .with("radius_max", self.radius_max)
            .with("speed_min", self.speed_min)
            .with("speed_max", self.speed_max)
            .with("split", split)
    }

    fn validate(&self) -> Result<()> {
        let half = self.width.min(self.height) as f64 / 2.0;
        let ok = self.radius_min > 0.0
            && self.radius_min <= self.radius_max
            && self.radius_max < half
            && self.speed_min >= 0.0
            && self.speed_min <= self.speed_max
            && self.speed_max <= 2.0 * (half - self.radius_max)
            && self.frames > 0;
        if !ok {
            return Err(FdtnError::InvalidArgument(format!(
                "infeasible ball settings: radius [{}, {}], speed [{}, {}] in {}x{}",
                self.radius_min,
                self.radius_max,
                self.speed_min,
                self.speed_max,
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

/// `clamp(radius + 0.5 - distance, 0, 1)` at every pixel center.
pub fn render_disc(width: usize, height: usize, center: [f64; 2], radius: f64) -> RealGrid {
    RealGrid::from_fn(width, height, |i, j| {
        let dx = i as f64 + 0.5 - center[0];
        let dy = j as f64 + 0.5 - center[1];
        (radius + 0.5 - dx.hypot(dy)).clamp(0.0, 1.0)
    })
}

pub fn gen_bouncing_ball(p: &BallParams, split: Split) -> Result<SequenceDataset> {
    p.validate()?;
    let (w, h) = (p.width as f64, p.height as f64);
    let split_salt = match split {
        Split::Train => 0,
        Split::Test => 1 << 63,
    };
    let mut sequences = Vec::with_capacity(p.count);
    for s in 0..p.count {
        let mut rng = Rng::substream(p.seed, split_salt | s as u64);
        let radius = rng.range(p.radius_min, p.radius_max);
        let lo = [radius, radius];
        let hi = [w - radius, h - radius];
        let mut state = MotionState {
            position: [rng.range(lo[0], hi[0]), rng.range(lo[1], hi[1])],
            velocity: random_velocity(&mut rng, p.speed_min, p.speed_max),
        };
        let mut frames = Vec::with_capacity(p.frames);
        for t in 0..p.frames {
            if t > 0 {
                state.advance(lo, hi);
            }
            frames.push(render_disc(p.width, p.height, state.position, radius));
        }
        sequences.push(frames);
    }
    SequenceDataset::new(p.descriptor(split), split, sequences)
}
