//! One-dimensional Morse patterns drifting with constant integer velocity
//! on a periodic line.

use crate::data::{Descriptor, SequenceDataset, Split};
use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;
use crate::rng::{Rng, ALGORITHM};

const CODES: [(char, &str); 36] = [
    ('A', ".-"),
    ('B', "-..."),
    ('C', "-.-."),
    ('D', "-.."),
    ('E', "."),
    ('F', "..-."),
    ('G', "--."),
    ('H', "...."),
    ('I', ".."),
    ('J', ".---"),
    ('K', "-.-"),
    ('L', ".-.."),
    ('M', "--"),
    ('N', "-."),
    ('O', "---"),
    ('P', ".--."),
    ('Q', "--.-"),
    ('R', ".-."),
    ('S', "..."),
    ('T', "-"),
    ('U', "..-"),
    ('V', "...-"),
    ('W', ".--"),
    ('X', "-..-"),
    ('Y', "-.--"),
    ('Z', "--.."),
    ('0', "-----"),
    ('1', ".----"),
    ('2', "..---"),
    ('3', "...--"),
    ('4', "....-"),
    ('5', "....."),
    ('6', "-...."),
    ('7', "--..."),
    ('8', "---.."),
    ('9', "----."),
];

/// International Morse code for `A`-`Z` and `0`-`9`.
pub fn morse_code(symbol: char) -> Option<&'static str> {
    let s = symbol.to_ascii_uppercase();
    CODES.iter().find(|(c, _)| *c == s).map(|(_, code)| *code)
}

/// On/off pixels: dot = 1 on, dash = 3 on, one off pixel between elements.
pub fn render_morse(code: &str) -> Vec<f64> {
    let mut out = Vec::new();
    for (idx, element) in code.chars().enumerate() {
        if idx > 0 {
            out.push(0.0);
        }
        let on = if element == '-' { 3 } else { 1 };
        out.extend(std::iter::repeat_n(1.0, on));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseParams {
    pub count: usize,
    pub length: usize,
    pub frames: usize,
    /// Velocities are drawn uniformly from `velocity_min..=velocity_max`.
    pub velocity_min: i64,
    pub velocity_max: i64,
    pub noise_sigma: f64,
    /// Leading frames that receive additive noise.
    pub noisy_frames: usize,
    pub seed: u64,
}

impl Default for MorseParams {
    fn default() -> Self {
        MorseParams {
            count: 2000,
            length: 64,
            frames: 20,
            velocity_min: -3,
            velocity_max: 3,
            noise_sigma: 0.1,
            noisy_frames: 2,
            seed: 42,
        }
    }
}

impl MorseParams {
    pub fn descriptor(&self, split: Split) -> Descriptor {
        Descriptor::new("morse")
            .with("rng", ALGORITHM)
            .with("seed", self.seed)
            .with("count", self.count)
            .with("length", self.length)
            .with("frames", self.frames)
            .with("velocity_min", self.velocity_min)
            .with("velocity_max", self.velocity_max)
            .with("noise_sigma", self.noise_sigma)
            .with("noisy_frames", self.noisy_frames)
            .with("split", split)
    }
}

pub fn gen_morse(p: &MorseParams, split: Split) -> Result<SequenceDataset> {
    let longest = CODES
        .iter()
        .map(|(_, c)| render_morse(c).len())
        .max()
        .unwrap_or(0);
    if longest > p.length {
        return Err(FdtnError::InvalidArgument(format!(
            "pattern of {longest} pixels does not fit a line of {}",
            p.length
        )));
    }
    if p.velocity_min > p.velocity_max || p.frames == 0 || p.noise_sigma < 0.0 {
        return Err(FdtnError::InvalidArgument(
            "morse velocity range, frame count or noise level is invalid".into(),
        ));
    }
    let n = p.length as i64;
    let split_salt = match split {
        Split::Train => 0,
        Split::Test => 1 << 63,
    };
    let span = (p.velocity_max - p.velocity_min + 1) as u64;
    let mut sequences = Vec::with_capacity(p.count);
    for s in 0..p.count {
        let mut rng = Rng::substream(p.seed, split_salt | s as u64);
        let code = CODES[rng.below(CODES.len() as u64) as usize].1;
        let pattern = render_morse(code);
        let offset = rng.below(p.length as u64) as i64;
        let velocity = p.velocity_min + rng.below(span) as i64;
        let mut frames = Vec::with_capacity(p.frames);
        for t in 0..p.frames {
            let start = offset + velocity * t as i64;
            let mut values = vec![0.0; p.length];
            for (k, &v) in pattern.iter().enumerate() {
                values[(start + k as i64).rem_euclid(n) as usize] = v;
            }
            if t < p.noisy_frames && p.noise_sigma > 0.0 {
                for v in &mut values {
                    *v = (*v + p.noise_sigma * rng.normal()).clamp(0.0, 1.0);
                }
            }
            frames.push(RealGrid::new(p.length, 1, values)?);
        }
        sequences.push(frames);
    }
    SequenceDataset::new(p.descriptor(split), split, sequences)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_e_is_single_pulse() {
        assert_eq!(render_morse(morse_code('E').unwrap()), vec![1.0]);
        assert_eq!(
            render_morse(morse_code('a').unwrap()),
            vec![1.0, 0.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(CODES.len(), 36);
        assert!(morse_code('?').is_none());
    }

    #[test]
    fn static_noiseless_frames_identical() {
        let p = MorseParams {
            count: 5,
            velocity_min: 0,
            velocity_max: 0,
            noise_sigma: 0.0,
            ..MorseParams::default()
        };
        let ds = gen_morse(&p, Split::Train).unwrap();
        for seq in &ds.sequences {
            assert!(seq.iter().all(|f| f == &seq[0]));
        }
    }

    #[test]
    fn constant_velocity_is_exact_circular_shift() {
        let p = MorseParams {
            count: 4,
            length: 32,
            velocity_min: 2,
            velocity_max: 2,
            noise_sigma: 0.0,
            ..MorseParams::default()
        };
        let ds = gen_morse(&p, Split::Test).unwrap();
        for seq in &ds.sequences {
            for (t, f) in seq.iter().enumerate() {
                assert_eq!(f, &seq[0].shifted(2 * t as isize, 0));
            }
        }
    }

    #[test]
    fn noise_only_on_seed_frames() {
        let p = MorseParams {
            count: 3,
            ..MorseParams::default()
        };
        let ds = gen_morse(&p, Split::Train).unwrap();
        for seq in &ds.sequences {
            let non_binary = |f: &RealGrid| f.values().iter().any(|&v| v != 0.0 && v != 1.0);
            assert!(non_binary(&seq[0]) && non_binary(&seq[1]));
            assert!(seq[2..].iter().all(|f| !non_binary(f)));
            assert!(seq
                .iter()
                .all(|f| f.values().iter().all(|v| (0.0..=1.0).contains(v))));
        }
    }

    #[test]
    fn rejects_short_line() {
        let p = MorseParams {
            length: 10,
            ..MorseParams::default()
        };
        assert!(gen_morse(&p, Split::Train).is_err());
    }

    #[test]
    fn deterministic_and_split_dependent() {
        let p = MorseParams {
            count: 6,
            ..MorseParams::default()
        };
        assert_eq!(
            gen_morse(&p, Split::Train).unwrap(),
            gen_morse(&p, Split::Train).unwrap()
        );
        assert_ne!(
            gen_morse(&p, Split::Train).unwrap().sequences,
            gen_morse(&p, Split::Test).unwrap().sequences
        );
    }
}
