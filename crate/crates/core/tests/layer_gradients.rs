//! Finite-difference checks of every layer kind and every phase-field
//! operation, on parameters and on inputs.

use fdtn_core::fft::{
    fft_forward_adjoint, fft_forward_complex, fft_inverse_adjoint, fft_inverse_complex,
};
use fdtn_core::nn::gradcheck::relative_error;
use fdtn_core::nn::{
    grad_check, numeric_gradient, GradCheckOptions, LayerSpec, ParamSet, Sequential,
};
use fdtn_core::phase::{
    apply_transform, apply_transform_backward, blend_variants, blend_variants_backward,
    encode_transform, encode_transform_backward, flip_variants, flip_variants_backward,
};
use fdtn_core::rng::Rng;
use fdtn_core::{BlendWeights, ComplexGrid, PhaseField, RealGrid};

const TOL: f64 = 1e-4;
const STEP: f64 = 1e-5;
const FLOOR: f64 = 1e-6;

fn random_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assert_close(what: &str, analytic: &[f64], numeric: &[f64]) {
    for (k, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let err = relative_error(*a, *n, FLOOR);
        assert!(
            err < TOL,
            "{what}[{k}]: analytic {a:e}, numeric {n:e}, rel {err:e}"
        );
    }
}

/// Checks parameter and input gradients of `spec` under a random linear loss.
fn check_layer(spec: LayerSpec, input_len: usize, seed: u64) {
    let mut rng = Rng::new(seed);
    let mut params = ParamSet::new();
    let net = Sequential::build(std::slice::from_ref(&spec), &mut params, "l", &mut rng).unwrap();
    for t in params.tensors_mut() {
        t.value.iter_mut().for_each(|v| *v += 0.1 * rng.normal());
    }
    let x = random_vec(&mut rng, input_len);
    let out_len = net.forward(&params, &x).unwrap().len();
    let c = random_vec(&mut rng, out_len);

    let rec = net.forward_recorded(&params, &x).unwrap();
    let mut grads = params.grads();
    let dx = net.backward(&params, &rec, &c, &mut grads).unwrap();

    let opts = GradCheckOptions {
        step: STEP,
        tolerance: TOL,
        floor: FLOOR,
    };
    let report = grad_check(&mut params, &grads, opts, |p| {
        dot(&net.forward(p, &x).unwrap(), &c)
    });
    assert!(report.passed(), "{spec:?} seed {seed}\n{report}");

    let numeric = numeric_gradient(&x, STEP, |x| dot(&net.forward(&params, x).unwrap(), &c));
    assert_close(&format!("{spec:?} input"), &dx, &numeric);
}

#[test]
fn dense_layer() {
    for seed in 0..20 {
        check_layer(
            LayerSpec::Dense {
                fan_in: 7,
                fan_out: 5,
            },
            7,
            seed,
        );
    }
}

#[test]
fn conv_layer_with_and_without_location_bias() {
    for seed in 0..20 {
        for location_dependent in [false, true] {
            let spec = LayerSpec::Conv2d {
                c_in: 2,
                c_out: 3,
                kernel: 3,
                width: 6,
                height: 5,
                location_dependent,
            };
            check_layer(spec, 2 * 30, seed);
        }
        let wide = LayerSpec::Conv2d {
            c_in: 1,
            c_out: 2,
            kernel: 5,
            width: 4,
            height: 4,
            location_dependent: true,
        };
        check_layer(wide, 16, seed);
    }
}

#[test]
fn activations() {
    for seed in 0..20 {
        check_layer(LayerSpec::Sigmoid, 9, seed);
        check_layer(LayerSpec::Relu, 9, seed);
        check_layer(LayerSpec::Softmax4 { bins: 5 }, 20, seed);
    }
}

fn random_spectrum(rng: &mut Rng, w: usize, h: usize) -> ComplexGrid {
    ComplexGrid::new(w, h, random_vec(rng, w * h), random_vec(rng, w * h)).unwrap()
}

fn random_field(rng: &mut Rng, w: usize, h: usize) -> PhaseField {
    PhaseField::new(w, h, random_vec(rng, w * h), random_vec(rng, w * h)).unwrap()
}

fn complex_flat(g: &ComplexGrid) -> Vec<f64> {
    g.re().iter().chain(g.im()).copied().collect()
}

fn field_flat(f: &PhaseField) -> Vec<f64> {
    f.re().iter().chain(f.im()).copied().collect()
}

fn complex_from(x: &[f64], w: usize, h: usize) -> ComplexGrid {
    let n = w * h;
    ComplexGrid::new(w, h, x[..n].to_vec(), x[n..].to_vec()).unwrap()
}

fn field_from(x: &[f64], w: usize, h: usize) -> PhaseField {
    let n = w * h;
    PhaseField::new(w, h, x[..n].to_vec(), x[n..].to_vec()).unwrap()
}

#[test]
fn encode_transform_gradients() {
    let (w, h, eps) = (4, 3, 1e-8);
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let h0 = random_spectrum(&mut rng, w, h);
        let h1 = random_spectrum(&mut rng, w, h);
        let g = random_field(&mut rng, w, h);
        let (d0, d1) = encode_transform_backward(&h0, &h1, eps, &g).unwrap();
        let loss = |a: &ComplexGrid, b: &ComplexGrid| {
            dot(
                &field_flat(&encode_transform(a, b, eps).unwrap()),
                &field_flat(&g),
            )
        };
        let n0 = numeric_gradient(&complex_flat(&h0), STEP, |x| {
            loss(&complex_from(x, w, h), &h1)
        });
        let n1 = numeric_gradient(&complex_flat(&h1), STEP, |x| {
            loss(&h0, &complex_from(x, w, h))
        });
        assert_close("d/dh0", &complex_flat(&d0), &n0);
        assert_close("d/dh1", &complex_flat(&d1), &n1);
    }
}

#[test]
fn apply_transform_gradients() {
    let (w, h) = (3, 4);
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let r = random_field(&mut rng, w, h);
        let spec = random_spectrum(&mut rng, w, h);
        let g = random_spectrum(&mut rng, w, h);
        let (dr, dh) = apply_transform_backward(&r, &spec, &g).unwrap();
        let loss = |r: &PhaseField, s: &ComplexGrid| {
            dot(
                &complex_flat(&apply_transform(r, s).unwrap()),
                &complex_flat(&g),
            )
        };
        let nr = numeric_gradient(&field_flat(&r), STEP, |x| loss(&field_from(x, w, h), &spec));
        let nh = numeric_gradient(&complex_flat(&spec), STEP, |x| {
            loss(&r, &complex_from(x, w, h))
        });
        assert_close("d/dR", &field_flat(&dr), &nr);
        assert_close("d/dH", &complex_flat(&dh), &nh);
    }
}

#[test]
fn flip_and_blend_gradients() {
    let (w, h) = (5, 4);
    let n = w * h;
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let r = random_field(&mut rng, w, h);
        let gs: [PhaseField; 4] = std::array::from_fn(|_| random_field(&mut rng, w, h));
        let dr = flip_variants_backward(&gs);
        let flip_loss = |x: &[f64]| {
            let v = flip_variants(&field_from(x, w, h));
            (0..4)
                .map(|k| dot(&field_flat(&v[k]), &field_flat(&gs[k])))
                .sum::<f64>()
        };
        assert_close(
            "flip",
            &field_flat(&dr),
            &numeric_gradient(&field_flat(&r), STEP, flip_loss),
        );

        let variants = flip_variants(&r);
        let mut weights: Vec<f64> = (0..4 * n).map(|_| rng.uniform() + 0.1).collect();
        for bin in weights.chunks_mut(4) {
            let s: f64 = bin.iter().sum();
            bin.iter_mut().for_each(|v| *v /= s);
        }
        let g = random_field(&mut rng, w, h);
        let (dv, dw) = blend_variants_backward(&variants, &weights, &g);
        // weights enter linearly, so the unnormalised perturbation is exact
        let blend = |v: &[PhaseField; 4], wts: &[f64]| {
            let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
            for k in 0..n {
                for j in 0..4 {
                    re[k] += wts[4 * k + j] * v[j].re()[k];
                    im[k] += wts[4 * k + j] * v[j].im()[k];
                }
            }
            dot(&re, g.re()) + dot(&im, g.im())
        };
        let checked = BlendWeights::new(w, h, weights.clone()).unwrap();
        let library = blend_variants(&variants, &checked).unwrap();
        assert!(
            (dot(&field_flat(&library), &field_flat(&g)) - blend(&variants, &weights)).abs()
                < 1e-12
        );
        assert_close(
            "blend weights",
            &dw,
            &numeric_gradient(&weights, STEP, |x| blend(&variants, x)),
        );
        for j in 0..4 {
            let nv = numeric_gradient(&field_flat(&variants[j]), STEP, |x| {
                let mut v = variants.clone();
                v[j] = field_from(x, w, h);
                blend(&v, &weights)
            });
            assert_close("blend variant", &field_flat(&dv[j]), &nv);
        }
    }
}

#[test]
fn fft_adjoint_gradients() {
    let (w, h) = (6, 5);
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let x = RealGrid::new(w, h, random_vec(&mut rng, w * h)).unwrap();
        let g = random_spectrum(&mut rng, w, h);
        let analytic = fft_forward_adjoint(&g);
        let numeric = numeric_gradient(x.values(), STEP, |v| {
            let spec =
                fft_forward_complex(&complex_from(&[v, &vec![0.0; w * h][..]].concat(), w, h));
            dot(&complex_flat(&spec), &complex_flat(&g))
        });
        assert_close("fft forward", analytic.values(), &numeric);

        let y = RealGrid::new(w, h, random_vec(&mut rng, w * h)).unwrap();
        let analytic = fft_inverse_adjoint(&y);
        let numeric = numeric_gradient(&complex_flat(&g), STEP, |v| {
            let spatial = fft_inverse_complex(&complex_from(v, w, h));
            dot(spatial.re(), y.values())
        });
        assert_close("fft inverse", &complex_flat(&analytic), &numeric);
    }
}
