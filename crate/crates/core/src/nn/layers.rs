//! Dense and convolutional layers, activations, and a sequential container,
//! each with an explicit adjoint.
//!
//! Fields flowing through a stack are flat `Vec<f64>`s. Convolutional fields
//! are channel-major: `data[(c * height + y) * width + x]`.

use crate::error::{FdtnError, Result};
use crate::nn::param::{Grads, ParamId, ParamSet, ParamTensor};
use crate::rng::Rng;

/// Scaled uniform initialization, `±sqrt(6 / (fan_in + fan_out))`.
fn init_uniform(rng: &mut Rng, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.range(-limit, limit)).collect()
}

fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(FdtnError::dims(
            format!("{what} of length {expected}"),
            format!("{actual}"),
        ));
    }
    Ok(())
}

/// Fully connected layer, `out = W·in + b` with `W` shaped `(fan_out, fan_in)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Dense {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let w = init_uniform(rng, fan_in * fan_out, fan_in, fan_out);
        let weight = params.add(ParamTensor::new(
            format!("{name}.weight"),
            vec![fan_out, fan_in],
            w,
        )?)?;
        let bias = params.add(ParamTensor::new(
            format!("{name}.bias"),
            vec![fan_out],
            vec![0.0; fan_out],
        )?)?;
        Ok(Dense {
            fan_in,
            fan_out,
            weight,
            bias,
        })
    }

    pub fn forward(&self, params: &ParamSet, input: &[f64]) -> Result<Vec<f64>> {
        check_len("dense input", self.fan_in, input.len())?;
        Ok(dense_forward(
            input,
            params.value(self.weight),
            params.value(self.bias),
        ))
    }

    pub fn backward(
        &self,
        params: &ParamSet,
        input: &[f64],
        grad_out: &[f64],
        grads: &mut Grads,
    ) -> Vec<f64> {
        let w = params.value(self.weight);
        let mut grad_in = vec![0.0; self.fan_in];
        {
            let gw = grads.get_mut(self.weight);
            for (o, &g) in grad_out.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &mut gw[o * self.fan_in..(o + 1) * self.fan_in];
                row.iter_mut().zip(input).for_each(|(a, x)| *a += g * x);
                let wrow = &w[o * self.fan_in..(o + 1) * self.fan_in];
                grad_in
                    .iter_mut()
                    .zip(wrow)
                    .for_each(|(a, wv)| *a += g * wv);
            }
        }
        grads
            .get_mut(self.bias)
            .iter_mut()
            .zip(grad_out)
            .for_each(|(a, g)| *a += g);
        grad_in
    }
}

/// `output[o] = bias[o] + Σ_i weights[o, i] · input[i]`.
pub fn dense_forward(input: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let fan_in = input.len();
    bias.iter()
        .enumerate()
        .map(|(o, b)| {
            let row = &weights[o * fan_in..(o + 1) * fan_in];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

/// Same-size 2-D cross-correlation with zero padding, per-channel bias and
/// an optional additive per-location bias map.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub width: usize,
    pub height: usize,
    pub weight: ParamId,
    pub bias: ParamId,
    pub location_bias: Option<ParamId>,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        width: usize,
        height: usize,
        location_dependent: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        if kernel.is_multiple_of(2) {
            return Err(FdtnError::InvalidArgument(format!(
                "kernel extent must be odd, got {kernel}"
            )));
        }
        let kk = kernel * kernel;
        let w = init_uniform(rng, c_out * c_in * kk, c_in * kk, c_out * kk);
        let weight = params.add(ParamTensor::new(
            format!("{name}.weight"),
            vec![c_out, c_in, kernel, kernel],
            w,
        )?)?;
        let bias = params.add(ParamTensor::new(
            format!("{name}.bias"),
            vec![c_out],
            vec![0.0; c_out],
        )?)?;
        let location_bias = if location_dependent {
            Some(params.add(ParamTensor::new(
                format!("{name}.location_bias"),
                vec![c_out, height, width],
                vec![0.0; c_out * height * width],
            )?)?)
        } else {
            None
        };
        Ok(Conv2d {
            c_in,
            c_out,
            kernel,
            width,
            height,
            weight,
            bias,
            location_bias,
        })
    }

    fn plane(&self) -> usize {
        self.width * self.height
    }

    pub fn forward(&self, params: &ParamSet, input: &[f64]) -> Result<Vec<f64>> {
        check_len("conv input", self.c_in * self.plane(), input.len())?;
        let loc = self.location_bias.map(|id| params.value(id));
        Ok(conv2d_forward(
            input,
            self.c_in,
            self.width,
            self.height,
            params.value(self.weight),
            self.c_out,
            self.kernel,
            params.value(self.bias),
            loc,
        ))
    }

    pub fn backward(
        &self,
        params: &ParamSet,
        input: &[f64],
        grad_out: &[f64],
        grads: &mut Grads,
    ) -> Vec<f64> {
        let (w, h, k) = (self.width, self.height, self.kernel);
        let plane = self.plane();
        let pad = k / 2;
        let kern = params.value(self.weight);
        let mut grad_in = vec![0.0; self.c_in * plane];
        {
            let gk = grads.get_mut(self.weight);
            for o in 0..self.c_out {
                let g_plane = &grad_out[o * plane..(o + 1) * plane];
                for c in 0..self.c_in {
                    let in_plane = &input[c * plane..(c + 1) * plane];
                    let gi_plane = &mut grad_in[c * plane..(c + 1) * plane];
                    for dy in 0..k {
                        for dx in 0..k {
                            let widx = ((o * self.c_in + c) * k + dy) * k + dx;
                            let wv = kern[widx];
                            let (x0, x1) = valid_range(w, dx, pad);
                            let (y0, y1) = valid_range(h, dy, pad);
                            let mut acc = 0.0;
                            for y in y0..y1 {
                                let sy = y + dy - pad;
                                let g_row = &g_plane[y * w + x0..y * w + x1];
                                let src = sy * w + x0 + dx - pad;
                                let in_row = &in_plane[src..src + (x1 - x0)];
                                acc += g_row.iter().zip(in_row).map(|(a, b)| a * b).sum::<f64>();
                                let gi_row = &mut gi_plane[src..src + (x1 - x0)];
                                gi_row.iter_mut().zip(g_row).for_each(|(a, g)| *a += wv * g);
                            }
                            gk[widx] += acc;
                        }
                    }
                }
            }
        }
        let gb = grads.get_mut(self.bias);
        for o in 0..self.c_out {
            gb[o] += grad_out[o * plane..(o + 1) * plane].iter().sum::<f64>();
        }
        if let Some(id) = self.location_bias {
            grads
                .get_mut(id)
                .iter_mut()
                .zip(grad_out)
                .for_each(|(a, g)| *a += g);
        }
        grad_in
    }
}

/// Output columns `x` for which `x + d - pad` stays inside `0..n`.
fn valid_range(n: usize, d: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(d);
    let hi = (n + pad).saturating_sub(d).min(n);
    (lo, hi.max(lo))
}

/// Cross-correlation of a `c_in × height × width` field with
/// `c_out × c_in × kernel × kernel` kernels, zero padded to the same size.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_forward(
    input: &[f64],
    c_in: usize,
    width: usize,
    height: usize,
    kernels: &[f64],
    c_out: usize,
    kernel: usize,
    bias: &[f64],
    location_bias: Option<&[f64]>,
) -> Vec<f64> {
    let plane = width * height;
    let pad = kernel / 2;
    let mut out = vec![0.0; c_out * plane];
    for o in 0..c_out {
        let out_plane = &mut out[o * plane..(o + 1) * plane];
        out_plane.iter_mut().for_each(|v| *v = bias[o]);
        if let Some(loc) = location_bias {
            out_plane
                .iter_mut()
                .zip(&loc[o * plane..(o + 1) * plane])
                .for_each(|(v, b)| *v += b);
        }
        for c in 0..c_in {
            let in_plane = &input[c * plane..(c + 1) * plane];
            for dy in 0..kernel {
                let (y0, y1) = valid_range(height, dy, pad);
                for dx in 0..kernel {
                    let wv = kernels[((o * c_in + c) * kernel + dy) * kernel + dx];
                    if wv == 0.0 {
                        continue;
                    }
                    let (x0, x1) = valid_range(width, dx, pad);
                    for y in y0..y1 {
                        let sy = y + dy - pad;
                        let src = sy * width + x0 + dx - pad;
                        let in_row = &in_plane[src..src + (x1 - x0)];
                        let out_row = &mut out_plane[y * width + x0..y * width + x1];
                        out_row
                            .iter_mut()
                            .zip(in_row)
                            .for_each(|(a, b)| *a += wv * b);
                    }
                }
            }
        }
    }
    out
}

/// Element-wise or channel-wise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
    /// Softmax across four channel-major planes of `bins` values each.
    Softmax4 {
        bins: usize,
    },
}

impl Activation {
    pub fn forward(self, input: &[f64]) -> Result<Vec<f64>> {
        match self {
            Activation::Sigmoid => Ok(input.iter().map(|&x| sigmoid(x)).collect()),
            Activation::Relu => Ok(input.iter().map(|&x| x.max(0.0)).collect()),
            Activation::Softmax4 { bins } => softmax4(input, bins),
        }
    }

    /// Adjoint expressed in terms of the forward output.
    pub fn backward(self, output: &[f64], grad_out: &[f64]) -> Vec<f64> {
        match self {
            Activation::Sigmoid => output
                .iter()
                .zip(grad_out)
                .map(|(y, g)| g * y * (1.0 - y))
                .collect(),
            Activation::Relu => output
                .iter()
                .zip(grad_out)
                .map(|(&y, &g)| if y > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Softmax4 { bins } => softmax4_backward(output, grad_out, bins),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Normalize each bin's four channel values (channel-major planes) into a
/// probability vector.
pub fn softmax4(logits: &[f64], bins: usize) -> Result<Vec<f64>> {
    if logits.len() != 4 * bins {
        return Err(FdtnError::dims(
            format!("4 channels of {bins} bins"),
            format!("{} values", logits.len()),
        ));
    }
    let mut out = vec![0.0; logits.len()];
    for k in 0..bins {
        let l = [
            logits[k],
            logits[bins + k],
            logits[2 * bins + k],
            logits[3 * bins + k],
        ];
        let max = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = l.map(|v| (v - max).exp());
        let sum: f64 = e.iter().sum();
        for v in 0..4 {
            out[v * bins + k] = e[v] / sum;
        }
    }
    Ok(out)
}

fn softmax4_backward(output: &[f64], grad_out: &[f64], bins: usize) -> Vec<f64> {
    let mut grad_in = vec![0.0; output.len()];
    for k in 0..bins {
        let dot: f64 = (0..4)
            .map(|v| output[v * bins + k] * grad_out[v * bins + k])
            .sum();
        for v in 0..4 {
            let idx = v * bins + k;
            grad_in[idx] = output[idx] * (grad_out[idx] - dot);
        }
    }
    grad_in
}

/// Declarative description of one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense {
        fan_in: usize,
        fan_out: usize,
    },
    Conv2d {
        c_in: usize,
        c_out: usize,
        kernel: usize,
        width: usize,
        height: usize,
        location_dependent: bool,
    },
    Sigmoid,
    Relu,
    Softmax4 {
        bins: usize,
    },
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Activation(Activation),
}

impl Layer {
    fn forward(&self, params: &ParamSet, input: &[f64]) -> Result<Vec<f64>> {
        match self {
            Layer::Dense(d) => d.forward(params, input),
            Layer::Conv2d(c) => c.forward(params, input),
            Layer::Activation(a) => a.forward(input),
        }
    }

    fn backward(
        &self,
        params: &ParamSet,
        input: &[f64],
        output: &[f64],
        grad_out: &[f64],
        grads: &mut Grads,
    ) -> Vec<f64> {
        match self {
            Layer::Dense(d) => d.backward(params, input, grad_out, grads),
            Layer::Conv2d(c) => c.backward(params, input, grad_out, grads),
            Layer::Activation(a) => a.backward(output, grad_out),
        }
    }
}

/// A feed-forward stack of layers sharing one [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Sequential {
    layers: Vec<Layer>,
}

/// Every intermediate field of one forward pass, input first.
#[derive(Debug, Clone)]
pub struct Recorded {
    fields: Vec<Vec<f64>>,
}

impl Recorded {
    pub fn input(&self) -> &[f64] {
        self.fields
            .first()
            .expect("recording holds at least the input")
    }

    pub fn output(&self) -> &[f64] {
        self.fields
            .last()
            .expect("recording holds at least the input")
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.fields
            .pop()
            .expect("recording holds at least the input")
    }
}

impl Sequential {
    pub fn build(
        specs: &[LayerSpec],
        params: &mut ParamSet,
        prefix: &str,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        for (idx, spec) in specs.iter().enumerate() {
            let name = format!("{prefix}.{idx}");
            let layer = match *spec {
                LayerSpec::Dense { fan_in, fan_out } => {
                    Layer::Dense(Dense::new(params, &name, fan_in, fan_out, rng)?)
                }
                LayerSpec::Conv2d {
                    c_in,
                    c_out,
                    kernel,
                    width,
                    height,
                    location_dependent,
                } => Layer::Conv2d(Conv2d::new(
                    params,
                    &name,
                    c_in,
                    c_out,
                    kernel,
                    width,
                    height,
                    location_dependent,
                    rng,
                )?),
                LayerSpec::Sigmoid => Layer::Activation(Activation::Sigmoid),
                LayerSpec::Relu => Layer::Activation(Activation::Relu),
                LayerSpec::Softmax4 { bins } => Layer::Activation(Activation::Softmax4 { bins }),
            };
            layers.push(layer);
        }
        Ok(Sequential { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn forward(&self, params: &ParamSet, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_recorded(params, input)?.into_output())
    }

    pub fn forward_recorded(&self, params: &ParamSet, input: &[f64]) -> Result<Recorded> {
        let mut fields = Vec::with_capacity(self.layers.len() + 1);
        fields.push(input.to_vec());
        for layer in &self.layers {
            let next = layer.forward(params, fields.last().expect("non-empty"))?;
            fields.push(next);
        }
        Ok(Recorded { fields })
    }

    /// Accumulate parameter gradients into `grads`; returns the input gradient.
    pub fn backward(
        &self,
        params: &ParamSet,
        rec: &Recorded,
        grad_out: &[f64],
        grads: &mut Grads,
    ) -> Result<Vec<f64>> {
        if rec.fields.len() != self.layers.len() + 1 {
            return Err(FdtnError::dims(
                format!("{} recorded fields", self.layers.len() + 1),
                format!("{}", rec.fields.len()),
            ));
        }
        check_len("output gradient", rec.output().len(), grad_out.len())?;
        let mut grad = grad_out.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            grad = layer.backward(params, &rec.fields[idx], &rec.fields[idx + 1], &grad, grads);
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_examples() {
        let x = [0.3, -1.2, 2.0];
        let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(dense_forward(&x, &eye, &[0.0; 3]), x.to_vec());
        let b = [0.5, -0.25, 4.0];
        assert_eq!(dense_forward(&x, &[0.0; 9], &b), b.to_vec());
        assert_eq!(
            dense_forward(&[1.0, 1.0], &[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0]),
            vec![3.0, 7.0]
        );
    }

    #[test]
    fn dense_weight_gradient_is_input() {
        let mut params = ParamSet::new();
        let d = Dense::new(&mut params, "d", 3, 2, &mut Rng::new(1)).unwrap();
        let x = [0.5, -2.0, 1.5];
        let mut grads = params.grads();
        d.backward(&params, &x, &[1.0, 1.0], &mut grads);
        let gw = grads.get(d.weight);
        for o in 0..2 {
            assert_eq!(&gw[o * 3..o * 3 + 3], &x);
        }
        assert_eq!(grads.get(d.bias), &[1.0, 1.0]);
    }

    #[test]
    fn conv_identity_kernel() {
        let input: Vec<f64> = (0..20).map(|v| v as f64 * 0.1).collect();
        let out = conv2d_forward(&input, 1, 5, 4, &[1.0], 1, 1, &[0.0], None);
        assert_eq!(out, input);
    }

    #[test]
    fn conv_averaging_kernel_on_constant() {
        let c = 0.9;
        let input = vec![c; 25];
        let out = conv2d_forward(&input, 1, 5, 5, &[1.0 / 9.0; 9], 1, 3, &[0.0], None);
        assert!((out[2 * 5 + 2] - c).abs() < 1e-15);
        for corner in [0, 4, 20, 24] {
            assert!((out[corner] - 4.0 / 9.0 * c).abs() < 1e-15);
        }
        // edge, non-corner: six taps in bounds
        assert!((out[2] - 6.0 / 9.0 * c).abs() < 1e-15);
    }

    #[test]
    fn conv_location_bias_passthrough() {
        let map: Vec<f64> = (0..12).map(|v| v as f64 - 5.0).collect();
        let out = conv2d_forward(
            &[0.7; 6],
            1,
            3,
            2,
            &[0.0; 18],
            2,
            3,
            &[0.0, 0.0],
            Some(&map),
        );
        assert_eq!(out, map);
    }

    #[test]
    fn conv_rejects_even_kernel() {
        let mut params = ParamSet::new();
        assert!(Conv2d::new(&mut params, "c", 1, 1, 2, 4, 4, false, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn activation_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        let r = Activation::Relu.forward(&[-3.2, 1.5]).unwrap();
        assert_eq!(r, vec![0.0, 1.5]);
        let s = softmax4(&[0.0; 4], 1).unwrap();
        assert_eq!(s, vec![0.25; 4]);
        assert!(softmax4(&[0.0; 6], 2).is_err());
        assert!(Activation::Softmax4 { bins: 2 }.forward(&[0.0; 6]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits: Vec<f64> = (0..40).map(|v| ((v * 37) % 11) as f64 - 5.0).collect();
        let p = softmax4(&logits, 10).unwrap();
        for k in 0..10 {
            let s: f64 = (0..4).map(|v| p[v * 10 + k]).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!((0..4).all(|v| p[v * 10 + k] >= 0.0));
        }
    }

    #[test]
    fn sequential_checks_input_size() {
        let mut params = ParamSet::new();
        let net = Sequential::build(
            &[
                LayerSpec::Dense {
                    fan_in: 3,
                    fan_out: 2,
                },
                LayerSpec::Sigmoid,
            ],
            &mut params,
            "net",
            &mut Rng::new(3),
        )
        .unwrap();
        assert!(net.forward(&params, &[1.0, 2.0]).is_err());
        assert_eq!(net.forward(&params, &[1.0, 2.0, 3.0]).unwrap().len(), 2);
        assert_eq!(params.count(), 8);
    }
}
