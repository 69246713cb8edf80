//! The learnable pieces of the predictor: the Transform Model variants that
//! modify the phase field between steps, and the Refine Model that gates the
//! spatial prediction.

use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;
use crate::model::config::{FdtnConfig, TransformVariant};
use crate::nn::{Grads, LayerSpec, ParamSet, Recorded, Sequential};
use crate::phase::{
    blend_unchecked, blend_variants_backward, flip_variants, flip_variants_backward, PhaseField,
};
use crate::rng::Rng;

/// Frequency-domain transformer network: configuration, networks and weights.
#[derive(Debug, Clone)]
pub struct Fdtn {
    config: FdtnConfig,
    params: ParamSet,
    transform: Option<Sequential>,
    refine: Option<Sequential>,
}

/// Intermediate values of one Transform Model application.
#[derive(Debug, Clone)]
pub(crate) enum TransformRecord {
    Identity,
    Blend {
        net: Recorded,
        variants: Box<[PhaseField; 4]>,
        /// Bin-major softmax weights.
        weights: Vec<f64>,
    },
    Morse {
        net: Recorded,
    },
}

/// Intermediate values of one Refine Model application.
#[derive(Debug, Clone)]
pub(crate) struct RefineRecord {
    net: Recorded,
}

impl Fdtn {
    pub fn new(config: FdtnConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        let mut rng = Rng::new(config.init_seed);
        let transform = match transform_specs(&config) {
            Some(specs) => Some(Sequential::build(
                &specs,
                &mut params,
                "transform",
                &mut rng,
            )?),
            None => None,
        };
        if config.transform_variant == TransformVariant::MorseDenoise {
            // zero correction at initialisation
            for t in params
                .tensors_mut()
                .iter_mut()
                .filter(|t| t.name.starts_with("transform.2."))
            {
                t.value.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let refine = if config.refine_enabled {
            let specs = refine_specs(&config);
            let net = Sequential::build(&specs, &mut params, "refine", &mut rng)?;
            // Start as the identity gate: zero weights and unit bias on the
            // last layer. A gain above 1 would compound over the rollout.
            let prefix = format!("refine.{}.", specs.len() - 2);
            for t in params
                .tensors_mut()
                .iter_mut()
                .filter(|t| t.name.starts_with(&prefix))
            {
                let fill = if t.name.ends_with(".bias") { 1.0 } else { 0.0 };
                t.value.iter_mut().for_each(|v| *v = fill);
            }
            Some(net)
        } else {
            None
        };
        Ok(Fdtn {
            config,
            params,
            transform,
            refine,
        })
    }

    pub fn config(&self) -> &FdtnConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    pub fn transform_net(&self) -> Option<&Sequential> {
        self.transform.as_ref()
    }

    pub fn refine_net(&self) -> Option<&Sequential> {
        self.refine.as_ref()
    }

    /// Change the rollout horizon; it does not affect the parameters.
    pub fn set_horizon(&mut self, horizon: usize) -> Result<()> {
        let mut c = self.config.clone();
        c.horizon = horizon;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    pub(crate) fn check_frame(&self, frame: &RealGrid) -> Result<()> {
        if frame.width() != self.config.frame_width || frame.height() != self.config.frame_height {
            return Err(FdtnError::dims(
                format!("{}x{}", self.config.frame_width, self.config.frame_height),
                frame.shape_string(),
            ));
        }
        Ok(())
    }

    fn check_field(&self, r: &PhaseField) -> Result<()> {
        if r.width() != self.config.frame_width || r.height() != self.config.frame_height {
            return Err(FdtnError::dims(
                format!("{}x{}", self.config.frame_width, self.config.frame_height),
                format!("{}x{}", r.width(), r.height()),
            ));
        }
        Ok(())
    }

    fn require_variant(&self, variant: TransformVariant) -> Result<&Sequential> {
        if self.config.transform_variant != variant {
            return Err(FdtnError::InvalidArgument(format!(
                "model is configured with transform variant {}, not {variant}",
                self.config.transform_variant
            )));
        }
        Ok(self.transform.as_ref().expect("variant has a network"))
    }

    /// Fully connected Transform Model: naive frame -> blend weights over the
    /// four flip variants of `r`.
    pub fn transform_step_fc(&self, naive_frame: &RealGrid, r: &PhaseField) -> Result<PhaseField> {
        self.require_variant(TransformVariant::Fc)?;
        Ok(self.transform_recorded(naive_frame, r)?.0)
    }

    /// Convolutional Transform Model with location-dependent layers.
    pub fn transform_step_conv(
        &self,
        naive_frame: &RealGrid,
        r: &PhaseField,
    ) -> Result<PhaseField> {
        self.require_variant(TransformVariant::Conv)?;
        Ok(self.transform_recorded(naive_frame, r)?.0)
    }

    /// Fully connected denoiser on the phase field: `R + mlp(R)`, projected
    /// back to unit modulus.
    pub fn transform_step_morse(&self, r: &PhaseField) -> Result<PhaseField> {
        self.require_variant(TransformVariant::MorseDenoise)?;
        let naive = RealGrid::zeros(self.config.frame_width, self.config.frame_height);
        Ok(self.transform_recorded(&naive, r)?.0)
    }

    /// Dispatch to the configured Transform Model (identity when none).
    pub fn transform_step(&self, naive_frame: &RealGrid, r: &PhaseField) -> Result<PhaseField> {
        Ok(self.transform_recorded(naive_frame, r)?.0)
    }

    pub(crate) fn needs_naive_frame(&self) -> bool {
        matches!(
            self.config.transform_variant,
            TransformVariant::Fc | TransformVariant::Conv
        )
    }

    pub(crate) fn transform_recorded(
        &self,
        naive_frame: &RealGrid,
        r: &PhaseField,
    ) -> Result<(PhaseField, TransformRecord)> {
        self.check_field(r)?;
        let n = self.config.bins();
        match (self.config.transform_variant, &self.transform) {
            (TransformVariant::None, _) | (_, None) => Ok((r.clone(), TransformRecord::Identity)),
            (TransformVariant::Fc | TransformVariant::Conv, Some(net)) => {
                self.check_frame(naive_frame)?;
                let rec = net.forward_recorded(&self.params, naive_frame.values())?;
                let probs = rec.output();
                let mut weights = vec![0.0; 4 * n];
                for v in 0..4 {
                    for k in 0..n {
                        weights[4 * k + v] = probs[v * n + k];
                    }
                }
                let variants = flip_variants(r);
                let out = blend_unchecked(&variants, &weights);
                Ok((
                    out,
                    TransformRecord::Blend {
                        net: rec,
                        variants: Box::new(variants),
                        weights,
                    },
                ))
            }
            (TransformVariant::MorseDenoise, Some(net)) => {
                let mut input = Vec::with_capacity(2 * n);
                input.extend_from_slice(r.re());
                input.extend_from_slice(r.im());
                let rec = net.forward_recorded(&self.params, &input)?;
                let out = rec.output();
                let (re, im) = unit_phase(out, &input, self.config.eps);
                let field =
                    PhaseField::new(self.config.frame_width, self.config.frame_height, re, im)?;
                Ok((field, TransformRecord::Morse { net: rec }))
            }
        }
    }

    /// Returns gradients on `r` and on the naive frame (zero when unused).
    pub(crate) fn transform_backward(
        &self,
        record: &TransformRecord,
        grad: &PhaseField,
        grads: &mut Grads,
    ) -> Result<(PhaseField, Option<Vec<f64>>)> {
        let n = self.config.bins();
        match record {
            TransformRecord::Identity => Ok((grad.clone(), None)),
            TransformRecord::Blend {
                net,
                variants,
                weights,
            } => {
                let (d_variants, d_weights) = blend_variants_backward(variants, weights, grad);
                let d_r = flip_variants_backward(&d_variants);
                let mut d_probs = vec![0.0; 4 * n];
                for v in 0..4 {
                    for k in 0..n {
                        d_probs[v * n + k] = d_weights[4 * k + v];
                    }
                }
                let net_fn = self
                    .transform
                    .as_ref()
                    .expect("blend record implies a network");
                let d_naive = net_fn.backward(&self.params, net, &d_probs, grads)?;
                Ok((d_r, Some(d_naive)))
            }
            TransformRecord::Morse { net } => {
                let d_z = unit_phase_backward(net.output(), net.input(), grad, self.config.eps);
                let net_fn = self
                    .transform
                    .as_ref()
                    .expect("morse record implies a network");
                let d_in = net_fn.backward(&self.params, net, &d_z, grads)?;
                let d_r = PhaseField::new(
                    self.config.frame_width,
                    self.config.frame_height,
                    d_in[..n]
                        .iter()
                        .zip(&d_z[..n])
                        .map(|(d, g)| d + g)
                        .collect(),
                    d_in[n..]
                        .iter()
                        .zip(&d_z[n..])
                        .map(|(d, g)| d + g)
                        .collect(),
                )?;
                Ok((d_r, None))
            }
        }
    }

    /// Refine Model: `frame ⊙ relu-conv-stack(frame)`. Identity when disabled.
    pub fn refine(&self, frame: &RealGrid) -> Result<RealGrid> {
        self.check_frame(frame)?;
        Ok(self.refine_recorded(frame)?.0)
    }

    pub(crate) fn refine_recorded(
        &self,
        frame: &RealGrid,
    ) -> Result<(RealGrid, Option<RefineRecord>)> {
        let Some(net) = &self.refine else {
            return Ok((frame.clone(), None));
        };
        let rec = net.forward_recorded(&self.params, frame.values())?;
        let values = frame
            .values()
            .iter()
            .zip(rec.output())
            .map(|(x, g)| x * g)
            .collect();
        let out = RealGrid::new(frame.width(), frame.height(), values)?;
        Ok((out, Some(RefineRecord { net: rec })))
    }

    /// Gradient on the refine input given the gradient on its output.
    pub(crate) fn refine_backward(
        &self,
        frame: &RealGrid,
        record: Option<&RefineRecord>,
        grad: &[f64],
        grads: &mut Grads,
    ) -> Result<Vec<f64>> {
        let (Some(net), Some(rec)) = (&self.refine, record) else {
            return Ok(grad.to_vec());
        };
        let gate = rec.net.output();
        let d_gate: Vec<f64> = grad
            .iter()
            .zip(frame.values())
            .map(|(g, x)| g * x)
            .collect();
        let mut d_frame = net.backward(&self.params, &rec.net, &d_gate, grads)?;
        d_frame
            .iter_mut()
            .zip(grad.iter().zip(gate))
            .for_each(|(d, (g, m))| *d += g * m);
        Ok(d_frame)
    }
}

fn transform_specs(c: &FdtnConfig) -> Option<Vec<LayerSpec>> {
    let n = c.bins();
    let (w, h) = (c.frame_width, c.frame_height);
    match c.transform_variant {
        TransformVariant::None => None,
        TransformVariant::Fc => Some(vec![
            LayerSpec::Dense {
                fan_in: n,
                fan_out: c.fc_hidden,
            },
            LayerSpec::Sigmoid,
            LayerSpec::Dense {
                fan_in: c.fc_hidden,
                fan_out: 4 * n,
            },
            LayerSpec::Softmax4 { bins: n },
        ]),
        TransformVariant::Conv => {
            let conv = |c_in, c_out| LayerSpec::Conv2d {
                c_in,
                c_out,
                kernel: c.conv_kernel,
                width: w,
                height: h,
                location_dependent: true,
            };
            Some(vec![
                conv(1, c.conv_channels),
                LayerSpec::Relu,
                conv(c.conv_channels, c.conv_channels),
                LayerSpec::Relu,
                conv(c.conv_channels, 4),
                LayerSpec::Softmax4 { bins: n },
            ])
        }
        TransformVariant::MorseDenoise => Some(vec![
            LayerSpec::Dense {
                fan_in: 2 * n,
                fan_out: c.morse_hidden,
            },
            LayerSpec::Sigmoid,
            LayerSpec::Dense {
                fan_in: c.morse_hidden,
                fan_out: 2 * n,
            },
        ]),
    }
}

/// `z = correction + r` (both flattened re-then-im), scaled to unit modulus
/// per bin.
fn unit_phase(correction: &[f64], r: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>) {
    let n = r.len() / 2;
    (0..n)
        .map(|k| {
            let (zr, zi) = (correction[k] + r[k], correction[n + k] + r[n + k]);
            let m = zr.hypot(zi) + eps;
            (zr / m, zi / m)
        })
        .unzip()
}

/// Gradient on `z` given the gradient on the unit-modulus output.
fn unit_phase_backward(correction: &[f64], r: &[f64], grad: &PhaseField, eps: f64) -> Vec<f64> {
    let n = r.len() / 2;
    let mut d = vec![0.0; 2 * n];
    for k in 0..n {
        let (zr, zi) = (correction[k] + r[k], correction[n + k] + r[n + k]);
        let norm = zr.hypot(zi);
        let m = norm + eps;
        let (gr, gi) = (grad.re()[k], grad.im()[k]);
        // d(z/(|z|+eps)) = dz/m - z (z·dz) / (|z| m^2)
        let radial = if norm > 0.0 {
            (zr * gr + zi * gi) / (norm * m * m)
        } else {
            0.0
        };
        d[k] = gr / m - zr * radial;
        d[n + k] = gi / m - zi * radial;
    }
    d
}

fn refine_specs(c: &FdtnConfig) -> Vec<LayerSpec> {
    let conv = |c_in, c_out| LayerSpec::Conv2d {
        c_in,
        c_out,
        kernel: c.refine_kernel,
        width: c.frame_width,
        height: c.frame_height,
        location_dependent: false,
    };
    vec![
        conv(1, c.refine_channels),
        LayerSpec::Relu,
        conv(c.refine_channels, c.refine_channels),
        LayerSpec::Relu,
        conv(c.refine_channels, 1),
        LayerSpec::Relu,
    ]
}
