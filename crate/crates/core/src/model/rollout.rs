//! Multi-step prediction and its reverse pass through the unrolled recurrence.
//!
//! Per step, with `H` the spectrum of the latest frame and `R` the carried
//! phase field:
//!
//! ```text
//! naive  = ifft(R · H)                      (only for fc / conv)
//! R'     = transform(naive, R)
//! frame  = refine(ifft(R' · H))
//! H      = fft(frame), R = R'
//! ```

use crate::error::{FdtnError, Result};
use crate::fft::{fft_forward, fft_forward_adjoint, fft_inverse, fft_inverse_adjoint};
use crate::grid::{ComplexGrid, RealGrid};
use crate::model::network::{Fdtn, RefineRecord, TransformRecord};
use crate::nn::Grads;
use crate::phase::{
    apply_transform, apply_transform_backward, encode_transform, encode_transform_multi, PhaseField,
};

#[derive(Debug, Clone)]
struct StepRecord {
    spectrum: ComplexGrid,
    r_in: PhaseField,
    transform: TransformRecord,
    r_out: PhaseField,
    unrefined: RealGrid,
    refine: Option<RefineRecord>,
}

/// Recorded forward computation of one rollout.
#[derive(Debug, Clone)]
pub struct Tape {
    steps: Vec<StepRecord>,
    outputs: Vec<RealGrid>,
}

impl Tape {
    pub fn outputs(&self) -> &[RealGrid] {
        &self.outputs
    }

    pub fn into_outputs(self) -> Vec<RealGrid> {
        self.outputs
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Carried recurrence state between prediction steps.
#[derive(Debug, Clone)]
pub struct RolloutState {
    pub current_spectrum: ComplexGrid,
    pub current_transform: PhaseField,
    pub step: usize,
}

impl Fdtn {
    /// Encode the seed frames into the initial recurrence state.
    pub fn encode_seeds(&self, seeds: &[RealGrid]) -> Result<RolloutState> {
        let c = self.config();
        if seeds.len() != c.seed_count {
            return Err(FdtnError::InvalidArgument(format!(
                "expected {} seed frames, got {}",
                c.seed_count,
                seeds.len()
            )));
        }
        for s in seeds {
            self.check_frame(s)?;
        }
        let spectra: Vec<ComplexGrid> = seeds.iter().map(fft_forward).collect();
        let r = if spectra.len() == 2 {
            encode_transform(&spectra[0], &spectra[1], c.eps)?
        } else {
            encode_transform_multi(&spectra, c.eps)?
        };
        Ok(RolloutState {
            current_spectrum: spectra.last().expect("at least two seeds").clone(),
            current_transform: r,
            step: 0,
        })
    }

    /// Predict `config().horizon` frames from the seed frames.
    pub fn rollout(&self, seeds: &[RealGrid]) -> Result<Vec<RealGrid>> {
        self.rollout_horizon(seeds, self.config().horizon)
    }

    pub fn rollout_horizon(&self, seeds: &[RealGrid], horizon: usize) -> Result<Vec<RealGrid>> {
        Ok(self.rollout_recorded(seeds, horizon)?.into_outputs())
    }

    pub fn rollout_recorded(&self, seeds: &[RealGrid], horizon: usize) -> Result<Tape> {
        let mut state = self.encode_seeds(seeds)?;
        let mut steps = Vec::with_capacity(horizon);
        let mut outputs = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let (frame, record) = self.step(&state)?;
            if t + 1 < horizon {
                state.current_spectrum = fft_forward(&frame);
            }
            state.current_transform = record.r_out.clone();
            state.step += 1;
            steps.push(record);
            outputs.push(frame);
        }
        Ok(Tape { steps, outputs })
    }

    fn step(&self, state: &RolloutState) -> Result<(RealGrid, StepRecord)> {
        let h = &state.current_spectrum;
        let r = &state.current_transform;
        let naive = if self.needs_naive_frame() {
            fft_inverse(&apply_transform(r, h)?)
        } else {
            RealGrid::zeros(h.width(), h.height())
        };
        let (r_out, transform) = self.transform_recorded(&naive, r)?;
        let unrefined = fft_inverse(&apply_transform(&r_out, h)?);
        let (frame, refine) = self.refine_recorded(&unrefined)?;
        Ok((
            frame,
            StepRecord {
                spectrum: h.clone(),
                r_in: r.clone(),
                transform,
                r_out,
                unrefined,
                refine,
            },
        ))
    }

    /// Reverse pass over a recorded rollout. `output_grads[t]` is the loss
    /// gradient on predicted frame `t`; gradients also flow backward through
    /// the re-encoded spectra and the carried phase field.
    pub fn backward(&self, tape: &Tape, output_grads: &[RealGrid]) -> Result<Grads> {
        let mut grads = self.params().grads();
        self.backward_into(tape, output_grads, &mut grads)?;
        Ok(grads)
    }

    pub fn backward_into(
        &self,
        tape: &Tape,
        output_grads: &[RealGrid],
        grads: &mut Grads,
    ) -> Result<()> {
        if output_grads.len() != tape.steps.len() {
            return Err(FdtnError::dims(
                format!("{} output gradients", tape.steps.len()),
                format!("{}", output_grads.len()),
            ));
        }
        let mut d_r_next: Option<PhaseField> = None;
        let mut d_spectrum_next: Option<ComplexGrid> = None;
        for (rec, g_out) in tape.steps.iter().zip(output_grads).rev() {
            self.check_frame(g_out)?;
            let mut d_frame = g_out.values().to_vec();
            if let Some(ds) = d_spectrum_next.take() {
                let back = fft_forward_adjoint(&ds);
                d_frame
                    .iter_mut()
                    .zip(back.values())
                    .for_each(|(a, b)| *a += b);
            }
            let d_unrefined =
                self.refine_backward(&rec.unrefined, rec.refine.as_ref(), &d_frame, grads)?;
            let d_unrefined =
                RealGrid::new(rec.unrefined.width(), rec.unrefined.height(), d_unrefined)?;
            let d_pred = fft_inverse_adjoint(&d_unrefined);
            let (mut d_r_out, mut d_spectrum) =
                apply_transform_backward(&rec.r_out, &rec.spectrum, &d_pred)?;
            if let Some(d) = d_r_next.take() {
                d_r_out.add_assign(&d);
            }
            let (mut d_r_in, d_naive) = self.transform_backward(&rec.transform, &d_r_out, grads)?;
            if let Some(d_naive) = d_naive {
                let d_naive =
                    RealGrid::new(rec.unrefined.width(), rec.unrefined.height(), d_naive)?;
                let d_naive_pred = fft_inverse_adjoint(&d_naive);
                let (d_r, d_h) = apply_transform_backward(&rec.r_in, &rec.spectrum, &d_naive_pred)?;
                d_r_in.add_assign(&d_r);
                add_complex(&mut d_spectrum, &d_h);
            }
            d_r_next = Some(d_r_in);
            d_spectrum_next = Some(d_spectrum);
        }
        Ok(())
    }
}

fn add_complex(a: &mut ComplexGrid, b: &ComplexGrid) {
    a.re.iter_mut().zip(&b.re).for_each(|(x, y)| *x += y);
    a.im.iter_mut().zip(&b.im).for_each(|(x, y)| *x += y);
}
