//! Spatial and frequency-domain grids.
//!
//! Both grids are row-major. A sample or bin is addressed by `(i, j)` where
//! `i` runs along the width (column) and `j` along the height (row), so the
//! flat index is `j * width + i`. One-dimensional signals use `height == 1`.

use crate::error::{FdtnError, Result};

/// Real-valued pixel field.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(FdtnError::dims(
                format!("{} values for {width}x{height}", width * height),
                format!("{} values", values.len()),
            ));
        }
        Ok(RealGrid {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        RealGrid {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut grid = RealGrid::zeros(width, height);
        for j in 0..height {
            for i in 0..width {
                grid.values[j * width + i] = f(i, j);
            }
        }
        grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.width + i] = v;
    }

    pub fn same_shape(&self, other: &RealGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Circular shift by whole pixels: output(i, j) = input(i - dx, j - dy).
    pub fn shifted(&self, dx: isize, dy: isize) -> RealGrid {
        let (w, h) = (self.width as isize, self.height as isize);
        RealGrid::from_fn(self.width, self.height, |i, j| {
            let si = (i as isize - dx).rem_euclid(w) as usize;
            let sj = (j as isize - dy).rem_euclid(h) as usize;
            self.get(si, sj)
        })
    }

    pub fn max_abs_diff(&self, other: &RealGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn shape_string(&self) -> String {
        format!("{}x{}", self.width, self.height)
    }
}

/// Complex-valued bins stored as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    width: usize,
    height: usize,
    pub(crate) re: Vec<f64>,
    pub(crate) im: Vec<f64>,
}

impl ComplexGrid {
    pub fn new(width: usize, height: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        if re.len() != n || im.len() != n {
            return Err(FdtnError::dims(
                format!("{n} bins for {width}x{height}"),
                format!("re {} / im {}", re.len(), im.len()),
            ));
        }
        Ok(ComplexGrid {
            width,
            height,
            re,
            im,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        let n = width * height;
        ComplexGrid {
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

    pub fn same_shape(&self, other: &ComplexGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.re, self.im)
    }

    pub fn max_abs_diff(&self, other: &ComplexGrid) -> f64 {
        let re = self.re.iter().zip(&other.re).map(|(a, b)| (a - b).abs());
        let im = self.im.iter().zip(&other.im).map(|(a, b)| (a - b).abs());
        re.chain(im).fold(0.0, f64::max)
    }

    /// Largest deviation from `H[-i, -j] == conj(H[i, j])`.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut worst: f64 = 0.0;
        for j in 0..h {
            for i in 0..w {
                let (a_re, a_im) = self.get(i, j);
                let (b_re, b_im) = self.get((w - i) % w, (h - j) % h);
                worst = worst.max((a_re - b_re).abs()).max((a_im + b_im).abs());
            }
        }
        worst
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(FdtnError::InvalidArgument(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}
