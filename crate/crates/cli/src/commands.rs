use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use fdtn_core::data::{
    builtin_glyphs, export_frames, gen_bouncing_ball, gen_morse, gen_moving_digit, load_idx,
    read_dataset, write_dataset, BallParams, DigitParams, Glyph, MorseParams, SequenceDataset,
    Split,
};
use fdtn_core::model::{
    copy_last_baseline, evaluate, train_bptt, EpochLog, Evaluation, TrainReport,
};
use fdtn_core::nn::{encode_checkpoint, read_checkpoint};
use fdtn_core::{Fdtn, RealGrid, TransformVariant};

use crate::config::{DatasetKind, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{commit_dir, write_atomic};

/// Worker threads from `FDTN_THREADS`; 0 or unset means one per core.
pub fn threads_from_env() -> Result<usize> {
    let requested = match std::env::var("FDTN_THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse::<usize>().map_err(|_| {
            CliError::Invalid(format!("FDTN_THREADS must be an integer, got {v:?}"))
        })?,
        _ => 0,
    };
    Ok(match requested {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    })
}

fn glyphs_for(path: Option<&Path>, log: &mut impl Write) -> Result<(Vec<Glyph>, String)> {
    match path {
        None => Ok((builtin_glyphs(), "builtin".into())),
        Some(p) => {
            let set = load_idx(p)?;
            if let Some(w) = &set.warning {
                writeln!(log, "warning: {}: {w}", p.display())?;
            }
            Ok((set.glyphs, p.display().to_string()))
        }
    }
}

/// Generate both splits from the dataset settings.
pub fn generate(
    cfg: &RunConfig,
    log: &mut impl Write,
) -> Result<(SequenceDataset, SequenceDataset)> {
    let d = &cfg.data;
    let split_counts = [(Split::Train, d.train_count), (Split::Test, d.test_count)];
    let mut out = Vec::with_capacity(2);
    for (split, count) in split_counts {
        let ds = match d.kind {
            DatasetKind::Ball => {
                let p = BallParams {
                    count,
                    frames: d.frames,
                    width: d.width,
                    height: d.height,
                    radius_min: d.radius.0,
                    radius_max: d.radius.1,
                    speed_min: d.speed.0,
                    speed_max: d.speed.1,
                    seed: d.seed,
                };
                gen_bouncing_ball(&p, split)?
            }
            DatasetKind::Digit => {
                let source = match split {
                    Split::Train => d.digit_train_idx.as_deref(),
                    Split::Test => d.digit_test_idx.as_deref(),
                };
                let (glyphs, label) = glyphs_for(source, log)?;
                let p = DigitParams {
                    count,
                    frames: d.frames,
                    width: d.width,
                    height: d.height,
                    speed_min: d.speed.0,
                    speed_max: d.speed.1,
                    seed: d.seed,
                    source: label,
                };
                gen_moving_digit(&p, &glyphs, split)?
            }
            DatasetKind::Morse => {
                if d.height != 1 {
                    return Err(CliError::invalid(
                        "frame_height",
                        "Morse frames need frame_height=1",
                    ));
                }
                let p = MorseParams {
                    count,
                    length: d.width,
                    frames: d.frames,
                    velocity_min: d.velocity.0,
                    velocity_max: d.velocity.1,
                    noise_sigma: d.noise_sigma,
                    noisy_frames: d.noisy_frames,
                    seed: d.seed,
                };
                gen_morse(&p, split)?
            }
        };
        out.push(ds);
    }
    let test = out.pop().expect("two splits");
    let train = out.pop().expect("two splits");
    Ok((train, test))
}

fn encode_dataset(ds: &SequenceDataset) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_dataset(ds, &mut bytes)?;
    Ok(bytes)
}

pub fn cmd_gen(cfg: &RunConfig, log: &mut impl Write) -> Result<()> {
    let (train, test) = generate(cfg, log)?;
    let (train_bytes, test_bytes) = (encode_dataset(&train)?, encode_dataset(&test)?);
    fs::create_dir_all(&cfg.data.dir)?;
    write_atomic(&cfg.data.train_path(), &train_bytes)?;
    if let Err(e) = write_atomic(&cfg.data.test_path(), &test_bytes) {
        let _ = fs::remove_file(cfg.data.train_path());
        return Err(e);
    }
    writeln!(
        log,
        "wrote {} train and {} test sequences of {} frames to {}",
        train.len(),
        test.len(),
        train.frames_per_sequence(),
        cfg.data.dir.display()
    )?;
    Ok(())
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Path(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

pub fn load_split(cfg: &RunConfig, split: Split) -> Result<SequenceDataset> {
    let path = match split {
        Split::Train => cfg.data.train_path(),
        Split::Test => cfg.data.test_path(),
    };
    require_file(&path, "dataset")?;
    let ds = read_dataset(std::io::BufReader::new(fs::File::open(&path)?))?;
    check_dataset(cfg, &ds, &path)?;
    Ok(ds)
}

fn check_dataset(cfg: &RunConfig, ds: &SequenceDataset, path: &Path) -> Result<()> {
    let want = (cfg.model.frame_width, cfg.model.frame_height);
    match ds.frame_size() {
        Some(size) if size == want => Ok(()),
        Some((w, h)) => Err(CliError::Invalid(format!(
            "{} holds {w}x{h} frames but the model expects {}x{}",
            path.display(),
            want.0,
            want.1
        ))),
        None => Err(CliError::Invalid(format!(
            "{} holds no sequences",
            path.display()
        ))),
    }
}

fn check_training_length(cfg: &RunConfig, ds: &SequenceDataset) -> Result<()> {
    let needed = cfg.model.seed_count + cfg.model.horizon;
    if ds.frames_per_sequence() < needed {
        return Err(CliError::Invalid(format!(
            "sequences have {} frames; seed_count + horizon needs {needed}",
            ds.frames_per_sequence()
        )));
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => Ok(fs::create_dir_all(p)?),
        _ => Ok(()),
    }
}

fn format_log_line(e: &EpochLog, timing: bool) -> String {
    let seconds = if timing {
        format!("{:.3}", e.seconds)
    } else {
        "NA".into()
    };
    format!("{}\t{}\t{}\t{seconds}\n", e.epoch, e.train_mse, e.test_mse)
}

pub fn cmd_train(cfg: &RunConfig, log: &mut impl Write) -> Result<TrainReport> {
    let train = load_split(cfg, Split::Train)?;
    let test = load_split(cfg, Split::Test)?;
    check_training_length(cfg, &train)?;
    check_training_length(cfg, &test)?;
    ensure_parent(&cfg.checkpoint)?;
    ensure_parent(&cfg.train_log)?;

    let mut model = Fdtn::new(cfg.model.clone())?;
    writeln!(
        log,
        "{} with {} parameters",
        model_name(&model),
        model.param_count()
    )?;
    let settings = fdtn_core::model::TrainSettings {
        threads: threads_from_env()?,
        ..cfg.train.clone()
    };
    let mut text = String::new();
    let mut echo = Ok(());
    let report = train_bptt(&mut model, &train, &test, &settings, |e| {
        text.push_str(&format_log_line(e, cfg.log_timing));
        if echo.is_ok() {
            echo = writeln!(
                log,
                "epoch {:>3}  train {:.6}  test {:.6}  {:.1}s",
                e.epoch, e.train_mse, e.test_mse, e.seconds
            );
        }
    })?;
    echo?;
    write_atomic(&cfg.checkpoint, &encode_checkpoint(model.params()))?;
    if let Err(e) = write_atomic(&cfg.train_log, text.as_bytes()) {
        let _ = fs::remove_file(&cfg.checkpoint);
        return Err(e);
    }
    writeln!(
        log,
        "wrote {} and {}",
        cfg.checkpoint.display(),
        cfg.train_log.display()
    )?;
    Ok(report)
}

/// Build the configured model and load the checkpoint into it.
pub fn load_model(cfg: &RunConfig) -> Result<Fdtn> {
    require_file(&cfg.checkpoint, "checkpoint")?;
    let stored = read_checkpoint(std::io::BufReader::new(fs::File::open(&cfg.checkpoint)?))?;
    let mut model = Fdtn::new(cfg.model.clone())?;
    model.params_mut().load_from(&stored).map_err(|e| {
        CliError::Invalid(format!(
            "checkpoint {} does not match the configured model: {e}",
            cfg.checkpoint.display()
        ))
    })?;
    Ok(model)
}

pub fn model_name(model: &Fdtn) -> String {
    let c = model.config();
    let base = match c.transform_variant {
        TransformVariant::Fc => "FDTN(FC)",
        TransformVariant::Conv => "FDTN(Conv)",
        TransformVariant::MorseDenoise => "FDTN(Morse)",
        TransformVariant::None => "FDTN w/o Transform",
    };
    if c.refine_enabled {
        base.to_string()
    } else {
        format!("{base} w/o Refine")
    }
}

fn pick_sequence<'a>(cfg: &RunConfig, ds: &'a SequenceDataset) -> Result<&'a [RealGrid]> {
    ds.sequences
        .get(cfg.sequence)
        .map(Vec::as_slice)
        .ok_or_else(|| {
            CliError::invalid(
                "sequence",
                format!(
                    "index {} out of range for {} sequences",
                    cfg.sequence,
                    ds.len()
                ),
            )
        })
}

pub fn cmd_predict(cfg: &RunConfig, log: &mut impl Write) -> Result<()> {
    let model = load_model(cfg)?;
    let ds = load_split(cfg, cfg.split)?;
    let seq = pick_sequence(cfg, &ds)?;
    let seed_count = cfg.model.seed_count;
    if seq.len() < seed_count {
        return Err(CliError::Invalid(format!(
            "sequences have fewer than {seed_count} frames"
        )));
    }
    let horizon = match cfg.predict_horizon {
        0 => cfg.model.horizon,
        h => h,
    };
    let seeds = &seq[..seed_count];
    let predicted = model.rollout_horizon(seeds, horizon)?;
    let targets = &seq[seed_count..seq.len().min(seed_count + horizon)];

    let mut frames: Vec<RealGrid> = seeds.to_vec();
    frames.extend(predicted.iter().cloned());
    let format = cfg.export_format;
    commit_dir(&cfg.output_dir, |dir| {
        let strip = export_frames(&frames, dir, "frame_", format)?;
        let truth = export_frames(targets, dir, "target_", format)?;
        let mut manifest = String::from("frame\trole\tfile\n");
        for (k, path) in strip.iter().enumerate() {
            let role = if k < seed_count { "seed" } else { "predicted" };
            writeln!(manifest, "{k}\t{role}\t{}", file_name(path)).expect("string write");
        }
        for (k, path) in truth.iter().enumerate() {
            writeln!(manifest, "{}\ttarget\t{}", k + seed_count, file_name(path))
                .expect("string write");
        }
        fs::write(dir.join("manifest.tsv"), manifest)?;
        Ok(())
    })?;
    writeln!(
        log,
        "wrote {seed_count} seed and {horizon} predicted frames to {}",
        cfg.output_dir.display()
    )?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Rows printed by `eval`.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub model: String,
    pub params: usize,
    pub dataset: String,
    pub model_eval: Evaluation,
    pub baseline: Evaluation,
}

const REFERENCE_ROWS: [(&str, &str, &str, &str); 4] = [
    ("Conv-PGP", "0.06963", "0.00409", "32K"),
    ("FDTN(Conv)", "0.00316", "0.00092", "22K"),
    ("FDTN(FC)", "0.00285", "0.00086", "160K"),
    ("VLN-ResNet", "0.00544", "0.00107", "1.3M"),
];

pub fn format_eval(s: &EvalSummary) -> String {
    let mut out = String::new();
    let w = 24;
    let _ = writeln!(
        out,
        "dataset: {} ({} sequences)",
        s.dataset, s.model_eval.sequences
    );
    let _ = writeln!(out, "{:<w$}  {:>10}  {:>10}", "model", "mean_mse", "params");
    let _ = writeln!(
        out,
        "{:<w$}  {:>10.6}  {:>10}",
        s.model, s.model_eval.mean_mse, s.params
    );
    let _ = writeln!(
        out,
        "{:<w$}  {:>10.6}  {:>10}",
        "copy-last-seed", s.baseline.mean_mse, 0
    );
    let _ = writeln!(out, "per-step mse:");
    for (t, (m, b)) in s
        .model_eval
        .per_step
        .iter()
        .zip(&s.baseline.per_step)
        .enumerate()
    {
        let _ = writeln!(out, "  step {:>3}  {:.6}  (copy-last {:.6})", t + 1, m, b);
    }
    let _ = writeln!(out, "reference results:");
    let _ = writeln!(
        out,
        "{:<w$}  {:>10}  {:>10}  {:>10}",
        "model", "mnist", "ball", "params"
    );
    for (name, mnist, ball, params) in REFERENCE_ROWS {
        let _ = writeln!(out, "{name:<w$}  {mnist:>10}  {ball:>10}  {params:>10}");
    }
    out
}

pub fn run_eval(cfg: &RunConfig) -> Result<EvalSummary> {
    let model = load_model(cfg)?;
    let ds = load_split(cfg, cfg.split)?;
    check_training_length(cfg, &ds)?;
    Ok(EvalSummary {
        model: model_name(&model),
        params: model.param_count(),
        dataset: format!("{} ({})", ds.descriptor.generator, cfg.split),
        model_eval: evaluate(&model, &ds)?,
        baseline: copy_last_baseline(&model, &ds)?,
    })
}

pub fn cmd_eval(cfg: &RunConfig, log: &mut impl Write) -> Result<EvalSummary> {
    let summary = run_eval(cfg)?;
    log.write_all(format_eval(&summary).as_bytes())?;
    Ok(summary)
}

pub fn cmd_export(cfg: &RunConfig, log: &mut impl Write) -> Result<()> {
    let ds = load_split(cfg, cfg.split)?;
    let seq = pick_sequence(cfg, &ds)?.to_vec();
    let format = cfg.export_format;
    commit_dir(&cfg.output_dir, |dir| {
        let paths = export_frames(&seq, dir, "frame_", format)?;
        let mut manifest = String::from("frame\trole\tfile\n");
        for (k, path) in paths.iter().enumerate() {
            writeln!(manifest, "{k}\tground_truth\t{}", file_name(path)).expect("string write");
        }
        fs::write(dir.join("manifest.tsv"), manifest)?;
        Ok(())
    })?;
    writeln!(
        log,
        "wrote {} frames to {}",
        seq.len(),
        cfg.output_dir.display()
    )?;
    Ok(())
}

pub fn run_command(command: &str, cfg: &RunConfig, log: &mut impl Write) -> Result<()> {
    match command {
        "gen" => cmd_gen(cfg, log),
        "train" => cmd_train(cfg, log).map(|_| ()),
        "predict" => cmd_predict(cfg, log),
        "eval" => cmd_eval(cfg, log).map(|_| ()),
        "export" => cmd_export(cfg, log),
        other => Err(CliError::Invalid(format!("unknown command {other:?}"))),
    }
}
