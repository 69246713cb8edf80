//! Phase-difference encoding of inter-frame motion and its application.
//!
//! A [`PhaseField`] stores one complex factor per frequency bin. Encoding two
//! spectra yields the per-bin rotation carrying the first onto the second;
//! applying a field multiplies a spectrum by it, which advances the motion by
//! one step (a circular translation is a linear phase ramp).
//!
//! Every differentiable operation here has a `*_backward` companion that maps
//! an upstream gradient on its output to gradients on its inputs.

use crate::error::{FdtnError, Result};
use crate::grid::ComplexGrid;

pub const DEFAULT_EPS: f64 = 1e-8;

/// Per-bin complex rotation factor, row-major like the grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    width: usize,
    height: usize,
    pub(crate) re: Vec<f64>,
    pub(crate) im: Vec<f64>,
}

impl PhaseField {
    pub fn new(width: usize, height: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if width == 0 || height == 0 || re.len() != n || im.len() != n {
            return Err(FdtnError::dims(
                format!("{n} bins for {width}x{height}"),
                format!("re {} / im {}", re.len(), im.len()),
            ));
        }
        Ok(PhaseField {
            width,
            height,
            re,
            im,
        })
    }

    pub fn identity(width: usize, height: usize) -> Self {
        let n = width * height;
        PhaseField {
            width,
            height,
            re: vec![1.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        PhaseField {
            width,
            height,
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        let k = j * self.width + i;
        (self.re[k], self.im[k])
    }

    pub fn set(&mut self, i: usize, j: usize, v: (f64, f64)) {
        let k = j * self.width + i;
        self.re[k] = v.0;
        self.im[k] = v.1;
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.re[k].hypot(self.im[k])
    }

    pub fn max_abs_diff(&self, other: &PhaseField) -> f64 {
        let re = self.re.iter().zip(&other.re).map(|(a, b)| (a - b).abs());
        let im = self.im.iter().zip(&other.im).map(|(a, b)| (a - b).abs());
        re.chain(im).fold(0.0, f64::max)
    }

    /// View as a complex grid (same bins, same values).
    pub fn to_complex(&self) -> ComplexGrid {
        ComplexGrid::new(self.width, self.height, self.re.clone(), self.im.clone())
            .expect("phase field dimensions are valid")
    }

    pub fn from_complex(grid: &ComplexGrid) -> Self {
        PhaseField {
            width: grid.width(),
            height: grid.height(),
            re: grid.re().to_vec(),
            im: grid.im().to_vec(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &PhaseField) {
        self.re.iter_mut().zip(&other.re).for_each(|(a, b)| *a += b);
        self.im.iter_mut().zip(&other.im).for_each(|(a, b)| *a += b);
    }

    fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

fn ensure_shape(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(FdtnError::dims(
            format!("{}x{}", expected.0, expected.1),
            format!("{}x{}", actual.0, actual.1),
        ));
    }
    Ok(())
}

fn grid_shape(g: &ComplexGrid) -> (usize, usize) {
    (g.width(), g.height())
}

/// Per-bin normalized dot and cross products of two complex fields:
/// `R = (a·b, a×b) / (|a||b| + eps)`.
fn normalized_dot_cross(
    a_re: &[f64],
    a_im: &[f64],
    b_re: &[f64],
    b_im: &[f64],
    eps: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = a_re.len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for k in 0..n {
        let (ar, ai, br, bi) = (a_re[k], a_im[k], b_re[k], b_im[k]);
        let denom = ar.hypot(ai) * br.hypot(bi) + eps;
        re.push((ar * br + ai * bi) / denom);
        im.push((ar * bi - ai * br) / denom);
    }
    (re, im)
}

#[allow(clippy::too_many_arguments)]
fn normalized_dot_cross_backward(
    a_re: &[f64],
    a_im: &[f64],
    b_re: &[f64],
    b_im: &[f64],
    eps: f64,
    g_re: &[f64],
    g_im: &[f64],
) -> [Vec<f64>; 4] {
    let n = a_re.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for k in 0..n {
        let (ar, ai, br, bi) = (a_re[k], a_im[k], b_re[k], b_im[k]);
        let (gr, gi) = (g_re[k], g_im[k]);
        let na = ar.hypot(ai);
        let nb = br.hypot(bi);
        let m = na * nb + eps;
        let dot = ar * br + ai * bi;
        let cross = ar * bi - ai * br;
        let s = (gr * dot + gi * cross) / (m * m);
        // d|a|/da is taken as zero at the origin.
        let (ua_r, ua_i) = if na > 0.0 {
            (ar / na, ai / na)
        } else {
            (0.0, 0.0)
        };
        let (ub_r, ub_i) = if nb > 0.0 {
            (br / nb, bi / nb)
        } else {
            (0.0, 0.0)
        };
        out[0][k] = (gr * br + gi * bi) / m - s * nb * ua_r;
        out[1][k] = (gr * bi - gi * br) / m - s * nb * ua_i;
        out[2][k] = (gr * ar - gi * ai) / m - s * na * ub_r;
        out[3][k] = (gr * ai + gi * ar) / m - s * na * ub_i;
    }
    out
}

/// Encode the transformation carrying `h0` onto `h1` as a per-bin phase
/// difference, damped by `eps` where either magnitude is tiny.
pub fn encode_transform(h0: &ComplexGrid, h1: &ComplexGrid, eps: f64) -> Result<PhaseField> {
    ensure_shape(grid_shape(h0), grid_shape(h1))?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(FdtnError::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let (re, im) = normalized_dot_cross(h0.re(), h0.im(), h1.re(), h1.im(), eps);
    PhaseField::new(h0.width(), h0.height(), re, im)
}

/// Gradients of [`encode_transform`] with respect to `h0` and `h1`.
pub fn encode_transform_backward(
    h0: &ComplexGrid,
    h1: &ComplexGrid,
    eps: f64,
    grad: &PhaseField,
) -> Result<(ComplexGrid, ComplexGrid)> {
    ensure_shape(grid_shape(h0), grid_shape(h1))?;
    ensure_shape(grid_shape(h0), grad.shape())?;
    let [d0r, d0i, d1r, d1i] =
        normalized_dot_cross_backward(h0.re(), h0.im(), h1.re(), h1.im(), eps, &grad.re, &grad.im);
    let (w, h) = grid_shape(h0);
    Ok((
        ComplexGrid::new(w, h, d0r, d0i)?,
        ComplexGrid::new(w, h, d1r, d1i)?,
    ))
}

/// Rotate every bin of `h` by the matching factor of `r` (complex product).
pub fn apply_transform(r: &PhaseField, h: &ComplexGrid) -> Result<ComplexGrid> {
    ensure_shape(r.shape(), grid_shape(h))?;
    let n = r.len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for k in 0..n {
        let (rr, ri, hr, hi) = (r.re[k], r.im[k], h.re()[k], h.im()[k]);
        re.push(rr * hr - ri * hi);
        im.push(ri * hr + rr * hi);
    }
    ComplexGrid::new(h.width(), h.height(), re, im)
}

/// Gradients of [`apply_transform`]: `(conj(h)·g, conj(r)·g)` per bin.
pub fn apply_transform_backward(
    r: &PhaseField,
    h: &ComplexGrid,
    grad: &ComplexGrid,
) -> Result<(PhaseField, ComplexGrid)> {
    ensure_shape(r.shape(), grid_shape(h))?;
    ensure_shape(r.shape(), grid_shape(grad))?;
    let n = r.len();
    let (mut dr_re, mut dr_im) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut dh_re, mut dh_im) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let (rr, ri, hr, hi) = (r.re[k], r.im[k], h.re()[k], h.im()[k]);
        let (gr, gi) = (grad.re()[k], grad.im()[k]);
        dr_re.push(gr * hr + gi * hi);
        dr_im.push(gi * hr - gr * hi);
        dh_re.push(gr * rr + gi * ri);
        dh_im.push(gi * rr - gr * ri);
    }
    let (w, hgt) = r.shape();
    Ok((
        PhaseField::new(w, hgt, dr_re, dr_im)?,
        ComplexGrid::new(w, hgt, dh_re, dh_im)?,
    ))
}

/// Average the pairwise encodings of consecutive spectra to suppress noise.
/// The mean is never rescaled upward; bins are capped at unit magnitude.
pub fn encode_transform_multi(spectra: &[ComplexGrid], eps: f64) -> Result<PhaseField> {
    if spectra.len() < 2 {
        return Err(FdtnError::InvalidArgument(format!(
            "need at least two spectra to encode a transformation, got {}",
            spectra.len()
        )));
    }
    let mut acc = encode_transform(&spectra[0], &spectra[1], eps)?;
    for pair in spectra[1..].windows(2) {
        acc.add_assign(&encode_transform(&pair[0], &pair[1], eps)?);
    }
    let scale = 1.0 / (spectra.len() - 1) as f64;
    for k in 0..acc.len() {
        acc.re[k] *= scale;
        acc.im[k] *= scale;
        let mag = acc.magnitude(k);
        if mag > 1.0 {
            acc.re[k] /= mag;
            acc.im[k] /= mag;
        }
    }
    Ok(acc)
}

/// Second-order encoding: the per-bin phase of `r12` minus that of `r01`.
pub fn higher_order(r01: &PhaseField, r12: &PhaseField, eps: f64) -> Result<PhaseField> {
    encode_transform(&r01.to_complex(), &r12.to_complex(), eps)
}

/// Axis along which a velocity component is mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mirror {
    Identity,
    Horizontal,
    Vertical,
    Both,
}

impl Mirror {
    pub const ALL: [Mirror; 4] = [
        Mirror::Identity,
        Mirror::Horizontal,
        Mirror::Vertical,
        Mirror::Both,
    ];
}

/// Remap bins by index negation along the chosen axes: `i -> (W - i) mod W`
/// (horizontal) and/or `j -> (H - j) mod H` (vertical). Applied to a pure
/// translation field this negates the matching velocity component.
pub fn flip(r: &PhaseField, mirror: Mirror) -> PhaseField {
    let (w, h) = r.shape();
    let (flip_i, flip_j) = match mirror {
        Mirror::Identity => return r.clone(),
        Mirror::Horizontal => (true, false),
        Mirror::Vertical => (false, true),
        Mirror::Both => (true, true),
    };
    let mut out = PhaseField::zeros(w, h);
    for j in 0..h {
        let sj = if flip_j { (h - j) % h } else { j };
        for i in 0..w {
            let si = if flip_i { (w - i) % w } else { i };
            out.re[j * w + i] = r.re[sj * w + si];
            out.im[j * w + i] = r.im[sj * w + si];
        }
    }
    out
}

/// `[identity, horizontal mirror, vertical mirror, both]`.
pub fn flip_variants(r: &PhaseField) -> [PhaseField; 4] {
    Mirror::ALL.map(|m| flip(r, m))
}

/// Sum the gradients of the four flip variants back onto the source field.
/// Each flip is a permutation and its own inverse.
pub fn flip_variants_backward(grads: &[PhaseField; 4]) -> PhaseField {
    let mut out = grads[0].clone();
    for (g, m) in grads.iter().zip(Mirror::ALL).skip(1) {
        out.add_assign(&flip(g, m));
    }
    out
}

/// Per-bin convex weights over the four flip variants, bin-major
/// (`values[4 * bin + variant]`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlendWeights {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl BlendWeights {
    pub const TOLERANCE: f64 = 1e-6;

    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if values.len() != 4 * n {
            return Err(FdtnError::dims(
                format!("{} weights for {width}x{height}x4", 4 * n),
                format!("{}", values.len()),
            ));
        }
        for (bin, w) in values.chunks_exact(4).enumerate() {
            let sum: f64 = w.iter().sum();
            if w.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > Self::TOLERANCE {
                return Err(FdtnError::WeightNormalization { bin, sum });
            }
        }
        Ok(BlendWeights {
            width,
            height,
            values,
        })
    }

    /// The same weight vector at every bin.
    pub fn uniform(width: usize, height: usize, weights: [f64; 4]) -> Result<Self> {
        let values = (0..width * height).flat_map(|_| weights).collect();
        BlendWeights::new(width, height, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Per-bin convex combination of the four variants.
pub fn blend_variants(variants: &[PhaseField; 4], weights: &BlendWeights) -> Result<PhaseField> {
    let shape = variants[0].shape();
    for v in &variants[1..] {
        ensure_shape(shape, v.shape())?;
    }
    ensure_shape(shape, (weights.width, weights.height))?;
    Ok(blend_unchecked(variants, &weights.values))
}

pub(crate) fn blend_unchecked(variants: &[PhaseField; 4], weights: &[f64]) -> PhaseField {
    let (w, h) = variants[0].shape();
    let mut out = PhaseField::zeros(w, h);
    for k in 0..w * h {
        let wk = &weights[4 * k..4 * k + 4];
        let mut re = 0.0;
        let mut im = 0.0;
        for v in 0..4 {
            re += wk[v] * variants[v].re[k];
            im += wk[v] * variants[v].im[k];
        }
        out.re[k] = re;
        out.im[k] = im;
    }
    out
}

/// Gradients of the blend with respect to each variant and to the weights
/// (bin-major, like the weights themselves).
pub fn blend_variants_backward(
    variants: &[PhaseField; 4],
    weights: &[f64],
    grad: &PhaseField,
) -> ([PhaseField; 4], Vec<f64>) {
    let (w, h) = variants[0].shape();
    let n = w * h;
    let mut d_variants: [PhaseField; 4] = std::array::from_fn(|_| PhaseField::zeros(w, h));
    let mut d_weights = vec![0.0; 4 * n];
    for k in 0..n {
        let (gr, gi) = (grad.re[k], grad.im[k]);
        for v in 0..4 {
            let wv = weights[4 * k + v];
            d_variants[v].re[k] = wv * gr;
            d_variants[v].im[k] = wv * gi;
            d_weights[4 * k + v] = gr * variants[v].re[k] + gi * variants[v].im[k];
        }
    }
    (d_variants, d_weights)
}
