//! Central finite-difference checks of analytic gradients.

use crate::nn::param::{Grads, ParamSet};

/// Relative error between an analytic and a numeric derivative. Values whose
/// magnitude is below `floor` are compared absolutely against `floor`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(floor);
    (analytic - numeric).abs() / scale
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_gradient(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorReport {
    pub name: String,
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub tensors: Vec<TensorReport>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.max_relative_error < self.tolerance)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.max_relative_error)
            .fold(0.0, f64::max)
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for t in &self.tensors {
            writeln!(
                f,
                "{:<32} rel {:.3e} at {} (analytic {:.6e}, numeric {:.6e})",
                t.name, t.max_relative_error, t.worst_index, t.analytic, t.numeric
            )?;
        }
        write!(
            f,
            "{} at tolerance {:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.tolerance
        )
    }
}

/// Options for [`grad_check`].
#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub step: f64,
    pub tolerance: f64,
    /// Magnitude below which derivatives are compared absolutely.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-4,
            tolerance: 1e-4,
            floor: 1e-6,
        }
    }
}

/// Compare `analytic` against central differences of `loss`, perturbing one
/// parameter scalar at a time. Costs two loss evaluations per scalar.
pub fn grad_check(
    params: &mut ParamSet,
    analytic: &Grads,
    opts: GradCheckOptions,
    mut loss: impl FnMut(&ParamSet) -> f64,
) -> GradCheckReport {
    let mut tensors = Vec::with_capacity(params.len());
    for t in 0..params.len() {
        let len = params.tensors()[t].len();
        let mut report = TensorReport {
            name: params.tensors()[t].name.clone(),
            max_relative_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in 0..len {
            let orig = params.tensors()[t].value[i];
            params.tensors_mut()[t].value[i] = orig + opts.step;
            let up = loss(params);
            params.tensors_mut()[t].value[i] = orig - opts.step;
            let down = loss(params);
            params.tensors_mut()[t].value[i] = orig;
            let numeric = (up - down) / (2.0 * opts.step);
            let a = analytic.bufs[t][i];
            let err = relative_error(a, numeric, opts.floor);
            if err > report.max_relative_error || i == 0 {
                report.max_relative_error = err;
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
        tensors.push(report);
    }
    GradCheckReport {
        tolerance: opts.tolerance,
        tensors,
    }
}
