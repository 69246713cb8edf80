//! Closed-form checks of the prediction pipeline: exact translation, neutral
//! parameter settings, loss arithmetic and model sizes.

use std::f64::consts::PI;

use fdtn_core::data::{Descriptor, SequenceDataset, Split};
use fdtn_core::model::{copy_last_baseline, evaluate, mse};
use fdtn_core::phase::flip_variants;
use fdtn_core::rng::Rng;
use fdtn_core::{Fdtn, FdtnConfig, PhaseField, RealGrid, TransformVariant};

fn plain_config(w: usize, h: usize, horizon: usize) -> FdtnConfig {
    FdtnConfig {
        transform_variant: TransformVariant::None,
        refine_enabled: false,
        frame_width: w,
        frame_height: h,
        horizon,
        ..FdtnConfig::default()
    }
}

fn set_tensor(model: &mut Fdtn, name: &str, f: impl Fn(usize) -> f64) {
    let t = model
        .params_mut()
        .tensors_mut()
        .iter_mut()
        .find(|t| t.name == name)
        .unwrap_or_else(|| panic!("no tensor {name}"));
    t.value.iter_mut().enumerate().for_each(|(k, v)| *v = f(k));
}

fn gaussian_blob(w: usize, h: usize, cx: f64, cy: f64, sigma: f64) -> RealGrid {
    RealGrid::from_fn(w, h, |i, j| {
        let (dx, dy) = (i as f64 - cx, j as f64 - cy);
        (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
    })
}

/// Band-limited pattern sampled at a real-valued offset, so sub-pixel
/// translation is exact on the grid.
fn synthesized(w: usize, h: usize, terms: &[(i64, i64, f64, f64)], offset: (f64, f64)) -> RealGrid {
    RealGrid::from_fn(w, h, |i, j| {
        terms
            .iter()
            .map(|&(kx, ky, amp, phase)| {
                let x = i as f64 - offset.0;
                let y = j as f64 - offset.1;
                amp * (2.0 * PI * (kx as f64 * x / w as f64 + ky as f64 * y / h as f64) + phase)
                    .cos()
            })
            .sum()
    })
}

fn max_error(pred: &[RealGrid], truth: &[RealGrid]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| p.max_abs_diff(t))
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_blob_shift_is_exact() {
    let (w, h) = (40, 40);
    let model = Fdtn::new(plain_config(w, h, 50)).unwrap();
    // narrow enough that every bin's squared magnitude stays far above eps;
    // wider blobs have spectral tails that the eps damping shrinks each step
    let blob = gaussian_blob(w, h, 12.0, 20.0, 0.8);
    let frames: Vec<RealGrid> = (0..52).map(|t| blob.shifted(3 * t, t)).collect();
    let pred = model.rollout(&frames[..2]).unwrap();
    assert_eq!(pred.len(), 50);
    assert!(max_error(&pred, &frames[2..]) < 1e-5);
}

#[test]
fn integer_shifts_of_random_frames_are_exact() {
    let mut rng = Rng::new(11);
    for (w, h, dx, dy) in [
        (40, 40, 1, -2),
        (32, 24, 5, 3),
        (17, 9, -4, 7),
        (64, 1, 3, 0),
    ] {
        let model = Fdtn::new(plain_config(w, h, 50)).unwrap();
        let base = RealGrid::from_fn(w, h, |_, _| rng.uniform());
        let frames: Vec<RealGrid> = (0..52).map(|t| base.shifted(dx * t, dy * t)).collect();
        let pred = model.rollout(&frames[..2]).unwrap();
        let err = max_error(&pred, &frames[2..]);
        assert!(err < 1e-5, "{w}x{h} shift ({dx},{dy}): {err:e}");
    }
}

#[test]
fn sub_pixel_shifts_of_band_limited_frames_are_exact() {
    let mut rng = Rng::new(12);
    for (w, h, vx, vy) in [
        (40, 40, 0.37, -1.25),
        (32, 20, 2.6, 0.5),
        (21, 15, -0.8, 0.11),
    ] {
        let model = Fdtn::new(plain_config(w, h, 50)).unwrap();
        // strictly below Nyquist so every component is a real sinusoid
        let terms: Vec<(i64, i64, f64, f64)> = (0..12)
            .map(|_| {
                let kx = rng.below(((w - 1) / 2) as u64 + 1) as i64;
                let ky = rng.below(((h - 1) / 2) as u64 + 1) as i64
                    * if rng.uniform() < 0.5 { -1 } else { 1 };
                (kx, ky, rng.range(0.2, 1.0), rng.range(0.0, 2.0 * PI))
            })
            .filter(|&(kx, ky, _, _)| kx != 0 || ky != 0)
            .collect();
        let frames: Vec<RealGrid> = (0..52)
            .map(|t| synthesized(w, h, &terms, (vx * t as f64, vy * t as f64)))
            .collect();
        let pred = model.rollout(&frames[..2]).unwrap();
        let err = max_error(&pred, &frames[2..]);
        assert!(err < 1e-5, "{w}x{h} velocity ({vx},{vy}): {err:e}");
    }
}

#[test]
fn accelerating_motion_is_not_followed() {
    let (w, h) = (40, 40);
    let model = Fdtn::new(plain_config(w, h, 6)).unwrap();
    let blob = gaussian_blob(w, h, 8.0, 20.0, 2.0);
    // displacement grows by one pixel per frame
    let frames: Vec<RealGrid> = (0..8).map(|t| blob.shifted(t * (t + 1) / 2, 0)).collect();
    let pred = model.rollout(&frames[..2]).unwrap();
    let errors: Vec<f64> = (0..6)
        .map(|t| mse(&pred[t..t + 1], &frames[t + 2..t + 3]))
        .collect();
    assert!(errors[5] > errors[0] && errors[5] > 1e-3, "{errors:?}");
}

#[test]
fn shorter_horizon_is_a_prefix() {
    let cfg = FdtnConfig {
        frame_width: 12,
        frame_height: 10,
        ..FdtnConfig::default()
    };
    let mut rng = Rng::new(3);
    for variant in [
        TransformVariant::Fc,
        TransformVariant::Conv,
        TransformVariant::None,
    ] {
        let model = Fdtn::new(FdtnConfig {
            transform_variant: variant,
            ..cfg.clone()
        })
        .unwrap();
        let seeds: Vec<RealGrid> = (0..2)
            .map(|_| RealGrid::from_fn(12, 10, |_, _| rng.uniform()))
            .collect();
        let long = model.rollout_horizon(&seeds, 8).unwrap();
        let short = model.rollout_horizon(&seeds, 1).unwrap();
        assert_eq!(long.len(), 8);
        assert_eq!(short[0], long[0]);
        assert!(long.iter().all(|f| f.width() == 12 && f.height() == 10));
    }
}

fn random_field(rng: &mut Rng, w: usize, h: usize) -> PhaseField {
    let n = w * h;
    let re = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
    let im = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
    PhaseField::new(w, h, re, im).unwrap()
}

#[test]
fn fc_neutral_weight_settings() {
    let (w, h) = (10, 8);
    let n = w * h;
    let mut rng = Rng::new(4);
    let mut model = Fdtn::new(FdtnConfig {
        frame_width: w,
        frame_height: h,
        ..FdtnConfig::default()
    })
    .unwrap();
    let naive = RealGrid::from_fn(w, h, |_, _| rng.uniform());
    let r = random_field(&mut rng, w, h);

    set_tensor(&mut model, "transform.2.weight", |_| 0.0);
    set_tensor(&mut model, "transform.2.bias", |_| 0.0);
    let out = model.transform_step_fc(&naive, &r).unwrap();
    let v = flip_variants(&r);
    let mean_re: Vec<f64> = (0..n)
        .map(|k| v.iter().map(|f| f.re()[k]).sum::<f64>() / 4.0)
        .collect();
    let mean_im: Vec<f64> = (0..n)
        .map(|k| v.iter().map(|f| f.im()[k]).sum::<f64>() / 4.0)
        .collect();
    assert!(out.max_abs_diff(&PhaseField::new(w, h, mean_re, mean_im).unwrap()) < 1e-12);

    // logits are channel-major: the first n entries belong to the identity variant
    set_tensor(&mut model, "transform.2.bias", |k| {
        if k < n {
            60.0
        } else {
            0.0
        }
    });
    let out = model.transform_step_fc(&naive, &r).unwrap();
    assert!(out.max_abs_diff(&r) < 1e-12);
}

#[test]
fn conv_zero_final_layer_is_uniform_blend() {
    let (w, h) = (9, 7);
    let n = w * h;
    let mut rng = Rng::new(5);
    let mut model = Fdtn::new(FdtnConfig {
        transform_variant: TransformVariant::Conv,
        frame_width: w,
        frame_height: h,
        ..FdtnConfig::default()
    })
    .unwrap();
    for name in [
        "transform.4.weight",
        "transform.4.bias",
        "transform.4.location_bias",
    ] {
        set_tensor(&mut model, name, |_| 0.0);
    }
    let naive = RealGrid::from_fn(w, h, |_, _| rng.uniform());
    let r = random_field(&mut rng, w, h);
    let out = model.transform_step_conv(&naive, &r).unwrap();
    let v = flip_variants(&r);
    for k in 0..n {
        let re = v.iter().map(|f| f.re()[k]).sum::<f64>() / 4.0;
        assert!((out.re()[k] - re).abs() < 1e-12);
    }
    assert!(model.transform_step_fc(&naive, &r).is_err());
}

#[test]
fn fresh_morse_denoiser_only_normalises() {
    let n = 16;
    let cfg = FdtnConfig {
        transform_variant: TransformVariant::MorseDenoise,
        frame_width: n,
        frame_height: 1,
        ..FdtnConfig::default()
    };
    let mut model = Fdtn::new(cfg).unwrap();
    let mut rng = Rng::new(6);
    let r = random_field(&mut rng, n, 1);
    let out = model.transform_step_morse(&r).unwrap();
    for k in 0..n {
        let m = r.magnitude(k);
        assert!((out.re()[k] - r.re()[k] / m).abs() < 1e-7);
        assert!((out.im()[k] - r.im()[k] / m).abs() < 1e-7);
    }
    // a unit-modulus field is a fixed point
    assert!(model.transform_step_morse(&out).unwrap().max_abs_diff(&out) < 1e-7);

    // the correction is added before normalising
    set_tensor(&mut model, "transform.2.bias", |k| {
        if k < n {
            3.0
        } else {
            0.0
        }
    });
    let shifted = model
        .transform_step_morse(&PhaseField::identity(n, 1))
        .unwrap();
    assert!(shifted.max_abs_diff(&PhaseField::identity(n, 1)) < 1e-7);
    let turned = model
        .transform_step_morse(&PhaseField::new(n, 1, vec![-1.0; n], vec![0.0; n]).unwrap())
        .unwrap();
    assert!(turned.max_abs_diff(&PhaseField::identity(n, 1)) < 1e-7);

    let flat = Fdtn::new(FdtnConfig::default()).unwrap();
    assert!(flat
        .transform_step_morse(&PhaseField::identity(40, 40))
        .is_err());
    assert!(Fdtn::new(FdtnConfig {
        transform_variant: TransformVariant::MorseDenoise,
        ..FdtnConfig::default()
    })
    .is_err());
}

#[test]
fn refine_gate_extremes() {
    let (w, h) = (8, 6);
    let mut model = Fdtn::new(FdtnConfig {
        frame_width: w,
        frame_height: h,
        ..FdtnConfig::default()
    })
    .unwrap();
    let frame = RealGrid::from_fn(w, h, |i, j| ((i * 3 + j) % 5) as f64 / 4.0);
    set_tensor(&mut model, "refine.4.weight", |_| 0.0);
    set_tensor(&mut model, "refine.4.bias", |_| 1.0);
    assert_eq!(model.refine(&frame).unwrap(), frame);
    set_tensor(&mut model, "refine.4.bias", |_| 0.0);
    assert!(model
        .refine(&frame)
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn mse_arithmetic() {
    let a = RealGrid::from_fn(40, 40, |i, j| (i * j) as f64);
    assert_eq!(mse(std::slice::from_ref(&a), std::slice::from_ref(&a)), 0.0);
    let b = RealGrid::from_fn(40, 40, |i, j| (i * j) as f64 + 0.5);
    assert!((mse(&[a], &[b]) - 0.25).abs() < 1e-15);
    let zero = RealGrid::zeros(40, 40);
    let mut dot = RealGrid::zeros(40, 40);
    dot.set(7, 9, 1.0);
    assert_eq!(mse(&[zero], &[dot]), 1.0 / 1600.0);
}

fn dataset(sequences: Vec<Vec<RealGrid>>) -> SequenceDataset {
    SequenceDataset::new(Descriptor::new("synthetic"), Split::Test, sequences).unwrap()
}

#[test]
fn evaluation_oracles() {
    let (w, h) = (40, 40);
    let model = Fdtn::new(plain_config(w, h, 8)).unwrap();
    let blob = gaussian_blob(w, h, 20.0, 20.0, 3.0);
    let shifted = dataset(
        (0..4)
            .map(|s| {
                (0..10)
                    .map(|t| blob.shifted((s + 1) * t, 2 * t - s))
                    .collect()
            })
            .collect(),
    );
    let ev = evaluate(&model, &shifted).unwrap();
    assert!(ev.mean_mse < 1e-9, "{}", ev.mean_mse);
    assert_eq!(ev.per_step.len(), 8);

    let still = dataset(vec![vec![blob.clone(); 10]; 3]);
    assert_eq!(copy_last_baseline(&model, &still).unwrap().mean_mse, 0.0);
    let short = dataset(vec![vec![blob; 5]]);
    assert!(evaluate(&model, &short).is_err());
}

#[test]
fn default_parameter_counts() {
    let fc = Fdtn::new(FdtnConfig::default()).unwrap().param_count();
    let conv = Fdtn::new(FdtnConfig {
        transform_variant: TransformVariant::Conv,
        ..FdtnConfig::default()
    })
    .unwrap()
    .param_count();
    // first layer 1600·20 + 20, second 20·6400 + 6400, refine 3×3 stack 4-4-1
    let refine = (9 * 4 + 4) + (9 * 16 + 4) + (9 * 4 + 1);
    assert_eq!(fc, 1600 * 20 + 20 + 20 * 6400 + 6400 + refine);
    let conv_expected =
        (25 * 4 + 4 + 4 * 1600) + (25 * 16 + 4 + 4 * 1600) + (25 * 16 + 4 + 4 * 1600) + refine;
    assert_eq!(conv, conv_expected);
    assert!((fc as f64 - 160_000.0).abs() <= 0.2 * 160_000.0);
    assert!((conv as f64 - 22_000.0).abs() <= 0.2 * 22_000.0);
}
