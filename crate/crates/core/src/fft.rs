//! Discrete Fourier transforms over [`RealGrid`] / [`ComplexGrid`].
//!
//! Power-of-two lengths use an iterative radix-2 Cooley-Tukey kernel; every
//! other length goes through Bluestein's chirp-z algorithm, which turns the
//! transform into a circular convolution evaluated with a padded power-of-two
//! radix-2 transform. Plans are cached per length and shared between threads.
//!
//! Conventions: the forward transform is unnormalized and uses `e^{-2πi kn/N}`;
//! the inverse carries the `1/(W·H)` factor. Two-dimensional transforms run
//! over rows first, then columns.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{FdtnError, Result};
use crate::grid::{ComplexGrid, RealGrid};

/// Upper bound on `width * height` accepted by [`dft_reference`].
pub const DFT_REFERENCE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug)]
struct Radix2 {
    n: usize,
    /// `e^{-2πik/n}` for `k < n/2`.
    twiddles: Vec<Complex64>,
    bit_rev: Vec<usize>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        let bits = n.trailing_zeros();
        let bit_rev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Radix2 {
            n,
            twiddles,
            bit_rev,
        }
    }

    fn process(&self, data: &mut [Complex64], dir: Direction) {
        let n = self.n;
        for i in 0..n {
            let j = self.bit_rev[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug)]
struct Bluestein {
    n: usize,
    /// `e^{-πi k²/n}`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped to length `inner.n`.
    kernel: Vec<Complex64>,
    inner: Radix2,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp argument small for accuracy.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let q = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                Complex64::from_polar(1.0, -PI * q / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.process(&mut kernel, Direction::Forward);
        Bluestein {
            n,
            chirp,
            kernel,
            inner,
        }
    }

    fn process(&self, data: &mut [Complex64], dir: Direction, scratch: &mut Vec<Complex64>) {
        let (n, m) = (self.n, self.inner.n);
        scratch.clear();
        scratch.resize(m, Complex64::new(0.0, 0.0));
        for k in 0..n {
            let x = match dir {
                Direction::Forward => data[k],
                Direction::Inverse => data[k].conj(),
            };
            scratch[k] = x * self.chirp[k];
        }
        self.inner.process(scratch, Direction::Forward);
        for (s, kern) in scratch.iter_mut().zip(&self.kernel) {
            *s *= kern;
        }
        self.inner.process(scratch, Direction::Inverse);
        let scale = 1.0 / m as f64;
        for k in 0..n {
            let y = scratch[k] * self.chirp[k] * scale;
            data[k] = match dir {
                Direction::Forward => y,
                Direction::Inverse => y.conj(),
            };
        }
    }
}

/// One-dimensional transform plan for a fixed length (unnormalized both ways).
#[derive(Debug)]
enum Plan {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

impl Plan {
    fn new(n: usize) -> Self {
        if n == 1 {
            Plan::Trivial
        } else if n.is_power_of_two() {
            Plan::Radix2(Radix2::new(n))
        } else {
            Plan::Bluestein(Bluestein::new(n))
        }
    }

    fn process(&self, data: &mut [Complex64], dir: Direction, scratch: &mut Vec<Complex64>) {
        match self {
            Plan::Trivial => {}
            Plan::Radix2(p) => p.process(data, dir),
            Plan::Bluestein(p) => p.process(data, dir, scratch),
        }
    }
}

fn plan_for(n: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(Plan::new(n)))
        .clone()
}

/// Unnormalized 2-D transform in place: rows, then columns.
fn transform_2d(data: &mut [Complex64], width: usize, height: usize, dir: Direction) {
    let mut scratch = Vec::new();
    if width > 1 {
        let row_plan = plan_for(width);
        for row in data.chunks_exact_mut(width) {
            row_plan.process(row, dir, &mut scratch);
        }
    }
    if height > 1 {
        let col_plan = plan_for(height);
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for i in 0..width {
            for j in 0..height {
                column[j] = data[j * width + i];
            }
            col_plan.process(&mut column, dir, &mut scratch);
            for j in 0..height {
                data[j * width + i] = column[j];
            }
        }
    }
}

/// Unnormalized forward DFT of a real frame.
pub fn fft_forward(frame: &RealGrid) -> ComplexGrid {
    let (w, h) = (frame.width(), frame.height());
    let mut data: Vec<Complex64> = frame
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform_2d(&mut data, w, h, Direction::Forward);
    split(data, w, h)
}

/// Unnormalized forward DFT of a complex grid.
pub fn fft_forward_complex(spectrum: &ComplexGrid) -> ComplexGrid {
    let (w, h) = (spectrum.width(), spectrum.height());
    let mut data = interleave(spectrum);
    transform_2d(&mut data, w, h, Direction::Forward);
    split(data, w, h)
}

/// Inverse DFT with `1/(W·H)` normalization, keeping the complex result.
pub fn fft_inverse_complex(spectrum: &ComplexGrid) -> ComplexGrid {
    let (w, h) = (spectrum.width(), spectrum.height());
    let mut data = interleave(spectrum);
    transform_2d(&mut data, w, h, Direction::Inverse);
    let scale = 1.0 / (w * h) as f64;
    for v in &mut data {
        *v *= scale;
    }
    split(data, w, h)
}

/// Inverse DFT returning the real part.
///
/// For spectra that are conjugate-symmetric (within 1e-9) the discarded
/// imaginary residue is asserted to stay below 1e-6. Spectra that are only
/// approximately symmetric simply lose their imaginary part.
pub fn fft_inverse(spectrum: &ComplexGrid) -> RealGrid {
    let (w, h) = (spectrum.width(), spectrum.height());
    let out = fft_inverse_complex(spectrum);
    if cfg!(debug_assertions) && spectrum.conjugate_symmetry_error() < 1e-9 {
        let residue = out.im.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            residue < 1e-6,
            "inverse of a symmetric spectrum left imaginary residue {residue}"
        );
    }
    RealGrid::new(w, h, out.re).expect("transform preserves dimensions")
}

/// Gradient of a loss with respect to the input of [`fft_forward`], given the
/// gradient with respect to its (re, im) output.
pub fn fft_forward_adjoint(grad: &ComplexGrid) -> RealGrid {
    let (w, h) = (grad.width(), grad.height());
    let mut data = interleave(grad);
    transform_2d(&mut data, w, h, Direction::Inverse);
    let values = data.into_iter().map(|v| v.re).collect();
    RealGrid::new(w, h, values).expect("transform preserves dimensions")
}

/// Gradient with respect to the (re, im) input of [`fft_inverse`], given the
/// gradient with respect to its real output.
pub fn fft_inverse_adjoint(grad: &RealGrid) -> ComplexGrid {
    let (w, h) = (grad.width(), grad.height());
    let mut out = fft_forward(grad);
    let scale = 1.0 / (w * h) as f64;
    out.re
        .iter_mut()
        .chain(out.im.iter_mut())
        .for_each(|v| *v *= scale);
    out
}

/// Direct-summation DFT, used as an independent oracle in tests.
pub fn dft_reference(frame: &RealGrid) -> Result<ComplexGrid> {
    let (w, h) = (frame.width(), frame.height());
    if w * h > DFT_REFERENCE_LIMIT {
        return Err(FdtnError::SizeGuard {
            limit: DFT_REFERENCE_LIMIT,
            actual: w * h,
        });
    }
    // Exact twiddle tables indexed by (k·n) mod N.
    let tw_w: Vec<Complex64> = (0..w)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / w as f64))
        .collect();
    let tw_h: Vec<Complex64> = (0..h)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / h as f64))
        .collect();
    let x = frame.values();
    let mut re = vec![0.0; w * h];
    let mut im = vec![0.0; w * h];
    for kj in 0..h {
        for ki in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..h {
                let row_phase = tw_h[(kj * m) % h];
                let mut row_acc = Complex64::new(0.0, 0.0);
                for n in 0..w {
                    row_acc += tw_w[(ki * n) % w] * x[m * w + n];
                }
                acc += row_acc * row_phase;
            }
            re[kj * w + ki] = acc.re;
            im[kj * w + ki] = acc.im;
        }
    }
    ComplexGrid::new(w, h, re, im)
}

fn interleave(grid: &ComplexGrid) -> Vec<Complex64> {
    grid.re()
        .iter()
        .zip(grid.im())
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect()
}

fn split(data: Vec<Complex64>, w: usize, h: usize) -> ComplexGrid {
    let re = data.iter().map(|c| c.re).collect();
    let im = data.iter().map(|c| c.im).collect();
    ComplexGrid::new(w, h, re, im).expect("transform preserves dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(n: usize, at: usize) -> RealGrid {
        RealGrid::from_fn(n, 1, |i, _| if i == at { 1.0 } else { 0.0 })
    }

    #[test]
    fn delta_transforms_to_constant() {
        let spec = fft_forward(&delta(8, 0));
        for k in 0..8 {
            assert_eq!(spec.get(k, 0), (1.0, 0.0));
        }
    }

    #[test]
    fn constant_is_dc_only() {
        let c = 0.75;
        let spec = fft_forward(&RealGrid::from_fn(4, 1, |_, _| c));
        assert!((spec.get(0, 0).0 - 4.0 * c).abs() < 1e-15);
        for k in 1..4 {
            let (re, im) = spec.get(k, 0);
            assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
        }
    }

    #[test]
    fn all_ones_spectrum_inverts_to_delta() {
        let ones = ComplexGrid::new(8, 1, vec![1.0; 8], vec![0.0; 8]).unwrap();
        let x = fft_inverse(&ones);
        assert!(x.max_abs_diff(&delta(8, 0)) < 1e-15);
    }

    #[test]
    fn reference_spectrum_of_shifted_delta_inverts() {
        let spec = dft_reference(&delta(8, 3)).unwrap();
        let x = fft_inverse(&spec);
        assert!((x.get(3, 0) - 1.0).abs() < 1e-10);
        for i in (0..8).filter(|&i| i != 3) {
            assert!(x.get(i, 0).abs() < 1e-10);
        }
    }

    #[test]
    fn reference_small_cases() {
        let spec = dft_reference(&delta(4, 0)).unwrap();
        for k in 0..4 {
            assert_eq!(spec.get(k, 0), (1.0, 0.0));
        }
        let spec = dft_reference(&RealGrid::from_fn(2, 2, |_, _| 1.0)).unwrap();
        assert_eq!(spec.get(0, 0), (4.0, 0.0));
        for (i, j) in [(1, 0), (0, 1), (1, 1)] {
            let (re, im) = spec.get(i, j);
            assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
        }
    }

    #[test]
    fn reference_of_cosine() {
        let x = RealGrid::from_fn(8, 1, |i, _| (2.0 * PI * i as f64 / 8.0).cos());
        let spec = dft_reference(&x).unwrap();
        for k in 0..8 {
            let (re, im) = spec.get(k, 0);
            let expected = if k == 1 || k == 7 { 4.0 } else { 0.0 };
            assert!((re - expected).abs() < 1e-12, "bin {k}: {re}");
            assert!(im.abs() < 1e-12);
        }
    }

    #[test]
    fn reference_size_guard() {
        let big = RealGrid::zeros(65, 64);
        assert!(matches!(
            dft_reference(&big),
            Err(FdtnError::SizeGuard { .. })
        ));
        assert!(dft_reference(&RealGrid::zeros(64, 64)).is_ok());
    }

    #[test]
    fn bluestein_matches_reference_on_awkward_lengths() {
        for n in [3usize, 5, 7, 12, 40, 63] {
            let x = RealGrid::from_fn(n, 1, |i, _| ((i * 7 + 3) % 11) as f64 * 0.1 - 0.4);
            let fast = fft_forward(&x);
            let slow = dft_reference(&x).unwrap();
            assert!(fast.max_abs_diff(&slow) < 1e-11, "length {n}");
        }
    }

    #[test]
    fn adjoints_satisfy_inner_product_identity() {
        // <F x, g> == <x, F^T g> over the real parameterization.
        let x = RealGrid::from_fn(5, 6, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let g = ComplexGrid::new(
            5,
            6,
            (0..30).map(|k| (k % 4) as f64 - 1.5).collect(),
            (0..30).map(|k| (k % 5) as f64 * 0.3).collect(),
        )
        .unwrap();
        let fx = fft_forward(&x);
        let lhs: f64 = fx.re().iter().zip(g.re()).map(|(a, b)| a * b).sum::<f64>()
            + fx.im().iter().zip(g.im()).map(|(a, b)| a * b).sum::<f64>();
        let adj = fft_forward_adjoint(&g);
        let rhs: f64 = x
            .values()
            .iter()
            .zip(adj.values())
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));

        let y = fft_inverse(&g);
        let r = RealGrid::from_fn(5, 6, |i, j| (i as f64 - j as f64) * 0.25);
        let lhs: f64 = y.values().iter().zip(r.values()).map(|(a, b)| a * b).sum();
        let adj = fft_inverse_adjoint(&r);
        let rhs: f64 = g.re().iter().zip(adj.re()).map(|(a, b)| a * b).sum::<f64>()
            + g.im().iter().zip(adj.im()).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }
}
