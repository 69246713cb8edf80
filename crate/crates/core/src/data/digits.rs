//! A single digit glyph bouncing inside the frame, placed with bilinear
//! sub-pixel interpolation. Ships with ten procedurally drawn glyphs so no
//! external files are needed.

use std::f64::consts::PI;

use crate::data::ball::{random_velocity, MotionState};
use crate::data::{Descriptor, SequenceDataset, Split};
use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;
use crate::rng::{Rng, ALGORITHM};

pub const GLYPH_SIZE: usize = 28;

/// Grayscale glyph with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Glyph {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Glyph {
    fn at(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.values[y as usize * self.width + x as usize]
        }
    }

    /// Bilinear sample at a real-valued glyph coordinate; zero outside.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        let (x0, y0) = (u.floor(), v.floor());
        let (fx, fy) = (u - x0, v - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let top = (1.0 - fx) * self.at(x0, y0) + fx * self.at(x0 + 1, y0);
        let bottom = (1.0 - fx) * self.at(x0, y0 + 1) + fx * self.at(x0 + 1, y0 + 1);
        (1.0 - fy) * top + fy * bottom
    }
}

type Stroke = Vec<(f64, f64)>;

fn line(a: (f64, f64), b: (f64, f64)) -> Stroke {
    vec![a, b]
}

/// Elliptical arc, angles in degrees with y pointing down (-90 is the top).
fn arc(center: (f64, f64), radius: (f64, f64), from: f64, to: f64) -> Stroke {
    let segments = 32;
    (0..=segments)
        .map(|s| {
            let a = (from + (to - from) * s as f64 / segments as f64) * PI / 180.0;
            (center.0 + radius.0 * a.cos(), center.1 + radius.1 * a.sin())
        })
        .collect()
}

/// Strokes of each digit in a unit box.
fn digit_strokes(d: usize) -> Vec<Stroke> {
    match d {
        0 => vec![arc((0.5, 0.5), (0.45, 0.5), 0.0, 360.0)],
        1 => vec![
            line((0.55, 0.0), (0.55, 1.0)),
            line((0.25, 0.25), (0.55, 0.0)),
        ],
        2 => vec![
            arc((0.5, 0.28), (0.45, 0.28), 180.0, 400.0),
            line((0.84, 0.46), (0.0, 1.0)),
            line((0.0, 1.0), (1.0, 1.0)),
        ],
        3 => vec![
            arc((0.5, 0.26), (0.42, 0.26), -160.0, 90.0),
            arc((0.5, 0.74), (0.48, 0.26), -90.0, 160.0),
        ],
        4 => vec![
            line((0.72, 1.0), (0.72, 0.0)),
            line((0.72, 0.0), (0.0, 0.68)),
            line((0.0, 0.68), (1.0, 0.68)),
        ],
        5 => vec![
            line((0.92, 0.0), (0.12, 0.0)),
            line((0.12, 0.0), (0.06, 0.45)),
            arc((0.5, 0.68), (0.45, 0.32), -125.0, 155.0),
        ],
        6 => vec![
            arc((0.62, 0.62), (0.55, 0.62), -75.0, -180.0),
            arc((0.5, 0.72), (0.43, 0.28), 0.0, 360.0),
        ],
        7 => vec![line((0.0, 0.0), (1.0, 0.0)), line((1.0, 0.0), (0.35, 1.0))],
        8 => vec![
            arc((0.5, 0.24), (0.36, 0.24), 0.0, 360.0),
            arc((0.5, 0.73), (0.45, 0.27), 0.0, 360.0),
        ],
        9 => vec![
            arc((0.5, 0.3), (0.43, 0.3), 0.0, 360.0),
            line((0.93, 0.3), (0.75, 1.0)),
        ],
        _ => unreachable!("digits are 0-9"),
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Render digit `d` into a 28×28 glyph with anti-aliased strokes.
fn draw_digit(d: usize) -> Glyph {
    let (box_x, box_y, box_w, box_h) = (7.0, 4.0, 14.0, 20.0);
    let half_width = 1.25;
    let strokes: Vec<Stroke> = digit_strokes(d)
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|(x, y)| (box_x + x * box_w, box_y + y * box_h))
                .collect()
        })
        .collect();
    let mut values = vec![0.0; GLYPH_SIZE * GLYPH_SIZE];
    for j in 0..GLYPH_SIZE {
        for i in 0..GLYPH_SIZE {
            let p = (i as f64 + 0.5, j as f64 + 0.5);
            let dist = strokes
                .iter()
                .flat_map(|s| s.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            values[j * GLYPH_SIZE + i] = (half_width + 0.5 - dist).clamp(0.0, 1.0);
        }
    }
    Glyph {
        width: GLYPH_SIZE,
        height: GLYPH_SIZE,
        values,
    }
}

/// The ten built-in glyphs, digits 0 through 9.
pub fn builtin_glyphs() -> Vec<Glyph> {
    (0..10).map(draw_digit).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitParams {
    pub count: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub seed: u64,
    /// Label of the glyph source recorded in the descriptor.
    pub source: String,
}

impl Default for DigitParams {
    fn default() -> Self {
        DigitParams {
            count: 2000,
            frames: 10,
            width: 40,
            height: 40,
            speed_min: 0.5,
            speed_max: 2.5,
            seed: 42,
            source: "builtin".into(),
        }
    }
}

impl DigitParams {
    pub fn descriptor(&self, split: Split) -> Descriptor {
        Descriptor::new("moving_digit")
            .with("rng", ALGORITHM)
            .with("seed", self.seed)
            .with("count", self.count)
            .with("frames", self.frames)
            .with("width", self.width)
            .with("height", self.height)
            .with("speed_min", self.speed_min)
            .with("speed_max", self.speed_max)
            .with("source", &self.source)
            .with("split", split)
    }
}

/// Render `glyph` with its top-left corner at a real-valued `position`.
pub fn place_glyph(glyph: &Glyph, width: usize, height: usize, position: [f64; 2]) -> RealGrid {
    RealGrid::from_fn(width, height, |i, j| {
        glyph
            .sample(i as f64 - position[0], j as f64 - position[1])
            .clamp(0.0, 1.0)
    })
}

pub fn gen_moving_digit(
    p: &DigitParams,
    glyphs: &[Glyph],
    split: Split,
) -> Result<SequenceDataset> {
    if glyphs.is_empty() {
        return Err(FdtnError::InvalidArgument("digit source is empty".into()));
    }
    let gw = glyphs.iter().map(|g| g.width).max().unwrap_or(0) as f64;
    let gh = glyphs.iter().map(|g| g.height).max().unwrap_or(0) as f64;
    let (w, h) = (p.width as f64, p.height as f64);
    if gw > w || gh > h || p.frames == 0 || p.speed_min < 0.0 || p.speed_min > p.speed_max {
        return Err(FdtnError::InvalidArgument(format!(
            "infeasible digit settings: {gw}x{gh} glyphs in {}x{} frames, speed [{}, {}]",
            p.width, p.height, p.speed_min, p.speed_max
        )));
    }
    let split_salt = match split {
        Split::Train => 0,
        Split::Test => 1 << 63,
    };
    let mut sequences = Vec::with_capacity(p.count);
    for s in 0..p.count {
        let mut rng = Rng::substream(p.seed, split_salt | s as u64);
        let glyph = &glyphs[rng.below(glyphs.len() as u64) as usize];
        let lo = [0.0, 0.0];
        let hi = [w - glyph.width as f64, h - glyph.height as f64];
        let mut state = MotionState {
            position: [rng.range(lo[0], hi[0]), rng.range(lo[1], hi[1])],
            velocity: random_velocity(&mut rng, p.speed_min, p.speed_max),
        };
        let mut frames = Vec::with_capacity(p.frames);
        for t in 0..p.frames {
            if t > 0 {
                state.advance(lo, hi);
            }
            frames.push(place_glyph(glyph, p.width, p.height, state.position));
        }
        sequences.push(frames);
    }
    SequenceDataset::new(p.descriptor(split), split, sequences)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_glyphs_are_distinct_and_bounded() {
        let g = builtin_glyphs();
        assert_eq!(g.len(), 10);
        for (a, ga) in g.iter().enumerate() {
            assert!(ga.values.iter().all(|v| (0.0..=1.0).contains(v)));
            let ink: f64 = ga.values.iter().sum();
            assert!(ink > 20.0, "digit {a} has ink {ink}");
            for gb in &g[a + 1..] {
                assert_ne!(ga, gb);
            }
        }
    }

    #[test]
    fn zero_velocity_frames_identical() {
        let p = DigitParams {
            count: 3,
            speed_min: 0.0,
            speed_max: 0.0,
            ..DigitParams::default()
        };
        let ds = gen_moving_digit(&p, &builtin_glyphs(), Split::Train).unwrap();
        for seq in &ds.sequences {
            assert!(seq.iter().all(|f| f == &seq[0]));
        }
    }

    #[test]
    fn integer_motion_is_exact_translation() {
        let glyph = &builtin_glyphs()[3];
        let mut s = MotionState {
            position: [1.25, 2.5],
            velocity: [1.0, 2.0],
        };
        let first = place_glyph(glyph, 40, 40, s.position);
        for t in 1..5 {
            s.advance([0.0, 0.0], [12.0, 12.0]);
            let frame = place_glyph(glyph, 40, 40, s.position);
            assert_eq!(frame, first.shifted(t, 2 * t));
        }
    }

    #[test]
    fn splits_use_their_own_glyphs() {
        let all = builtin_glyphs();
        let (train_pool, test_pool) = all.split_at(5);
        let p = DigitParams {
            count: 20,
            frames: 2,
            ..DigitParams::default()
        };
        let train = gen_moving_digit(&p, train_pool, Split::Train).unwrap();
        let test = gen_moving_digit(&p, test_pool, Split::Test).unwrap();
        let ink = |ds: &SequenceDataset| -> Vec<u64> {
            ds.sequences
                .iter()
                .map(|s| (s[0].values().iter().sum::<f64>() * 1e6).round() as u64)
                .collect()
        };
        let train_ink: Vec<u64> = train_pool
            .iter()
            .map(|g| (g.values.iter().sum::<f64>() * 1e6).round() as u64)
            .collect();
        let test_ink: Vec<u64> = test_pool
            .iter()
            .map(|g| (g.values.iter().sum::<f64>() * 1e6).round() as u64)
            .collect();
        // frames with a glyph fully inside keep its exact ink under bilinear placement
        for v in ink(&train) {
            assert!(train_ink.iter().any(|&g| g.abs_diff(v) < 10), "{v}");
            assert!(!test_ink.iter().any(|&g| g.abs_diff(v) < 10));
        }
        for v in ink(&test) {
            assert!(test_ink.iter().any(|&g| g.abs_diff(v) < 10));
        }
        assert!(gen_moving_digit(&p, &[], Split::Train).is_err());
    }
}
