use std::fmt;
use std::str::FromStr;

use crate::error::{FdtnError, Result};
use crate::phase::DEFAULT_EPS;

/// Which network (if any) modifies the phase field between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformVariant {
    None,
    Fc,
    Conv,
    MorseDenoise,
}

impl TransformVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformVariant::None => "none",
            TransformVariant::Fc => "fc",
            TransformVariant::Conv => "conv",
            TransformVariant::MorseDenoise => "morse_denoise",
        }
    }
}

impl fmt::Display for TransformVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformVariant {
    type Err = FdtnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TransformVariant::None),
            "fc" => Ok(TransformVariant::Fc),
            "conv" => Ok(TransformVariant::Conv),
            "morse_denoise" => Ok(TransformVariant::MorseDenoise),
            other => Err(FdtnError::InvalidArgument(format!(
                "unknown transform variant {other:?} (expected none, fc, conv or morse_denoise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdtnConfig {
    pub transform_variant: TransformVariant,
    pub refine_enabled: bool,
    pub seed_count: usize,
    pub horizon: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub eps: f64,
    /// Hidden units of the fully connected Transform Model.
    pub fc_hidden: usize,
    /// Channels of the two hidden convolutional Transform Model layers.
    pub conv_channels: usize,
    pub conv_kernel: usize,
    /// Hidden units of the Morse phase-field denoiser.
    pub morse_hidden: usize,
    pub refine_channels: usize,
    pub refine_kernel: usize,
    /// Seed for weight initialization.
    pub init_seed: u64,
}

impl Default for FdtnConfig {
    fn default() -> Self {
        FdtnConfig {
            transform_variant: TransformVariant::Fc,
            refine_enabled: true,
            seed_count: 2,
            horizon: 8,
            frame_width: 40,
            frame_height: 40,
            eps: DEFAULT_EPS,
            fc_hidden: 20,
            conv_channels: 4,
            conv_kernel: 5,
            morse_hidden: 64,
            refine_channels: 4,
            refine_kernel: 3,
            init_seed: 1,
        }
    }
}

impl FdtnConfig {
    pub fn bins(&self) -> usize {
        self.frame_width * self.frame_height
    }

    pub fn is_one_dimensional(&self) -> bool {
        self.frame_height == 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FdtnError::InvalidArgument(msg));
        if self.seed_count < 2 {
            return bad(format!(
                "seed_count must be at least 2, got {}",
                self.seed_count
            ));
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return bad(format!(
                "frame size must be positive, got {}x{}",
                self.frame_width, self.frame_height
            ));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.conv_kernel.is_multiple_of(2) || self.refine_kernel.is_multiple_of(2) {
            return bad("kernel extents must be odd".into());
        }
        match self.transform_variant {
            TransformVariant::MorseDenoise if !self.is_one_dimensional() => {
                return bad(
                    "morse_denoise requires one-dimensional frames (frame_height = 1)".into(),
                )
            }
            TransformVariant::Fc if self.fc_hidden == 0 => {
                return bad("fc_hidden must be positive".into())
            }
            TransformVariant::Conv if self.conv_channels == 0 => {
                return bad("conv_channels must be positive".into())
            }
            TransformVariant::MorseDenoise if self.morse_hidden == 0 => {
                return bad("morse_hidden must be positive".into())
            }
            _ => {}
        }
        if self.refine_enabled && self.refine_channels == 0 {
            return bad("refine_channels must be positive".into());
        }
        Ok(())
    }
}
