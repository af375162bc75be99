use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, KlDirection};
use crate::propagation::DEFAULT_FLOOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    /// Teacher probabilities as they are.
    #[default]
    Plain,
    /// `(2I − γÃ)` applied to the student's probabilities.
    Invkd,
    /// Teacher probabilities after `T` lazy propagation steps.
    Pnd,
    /// As `Pnd`, with training rows pinned to the teacher after every step.
    PndFix,
    /// `Ã` applied to the student's probabilities.
    Conv,
}

impl LossVariant {
    pub const ALL: [LossVariant; 5] =
        [LossVariant::Plain, LossVariant::Invkd, LossVariant::Pnd, LossVariant::PndFix, LossVariant::Conv];

    /// Whether the operator acts on the student side of the divergence.
    pub fn transforms_student(self) -> bool {
        matches!(self, LossVariant::Invkd | LossVariant::Conv)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossVariant::Plain => "plain",
            LossVariant::Invkd => "invkd",
            LossVariant::Pnd => "pnd",
            LossVariant::PndFix => "pnd_fix",
            LossVariant::Conv => "conv",
        }
    }
}

impl std::str::FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        LossVariant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown loss variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherArch {
    #[default]
    Sage,
    Appnp,
}

/// Optimization settings shared by teacher and student runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub patience: usize,
    pub dropout: f64,
    /// Node minibatch size over the loss rows; `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { adam: AdamConfig::default(), max_epochs: 500, patience: 50, dropout: 0.5, batch_size: None, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidParameter("patience and max_epochs must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeacherConfig {
    pub arch: TeacherArch,
    pub hidden: usize,
    /// Propagation strength and step count of the APPNP teacher.
    pub appnp_gamma: f64,
    pub appnp_iterations: usize,
    /// Normalize the APPNP propagation matrix with unit self-loops.
    pub self_loops: bool,
    pub train: TrainConfig,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            arch: TeacherArch::Sage,
            hidden: 128,
            appnp_gamma: 0.9,
            appnp_iterations: 10,
            self_loops: false,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistillConfig {
    pub loss: LossVariant,
    /// Weight of the labeled-node cross-entropy; the divergence gets `1 − alpha`.
    pub alpha: f64,
    pub gamma: f64,
    pub steps: usize,
    pub kl_direction: KlDirection,
    pub temperature: f64,
    /// Clamp applied before renormalizing student-side operator outputs.
    pub floor: f64,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            loss: LossVariant::Plain,
            alpha: 0.0,
            gamma: 0.9,
            steps: 10,
            kl_direction: KlDirection::TargetToPred,
            temperature: 1.0,
            floor: DEFAULT_FLOOR,
            hidden: vec![128],
            train: TrainConfig::default(),
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !(self.temperature > 0.0) || !(self.floor > 0.0) {
            return Err(Error::InvalidParameter("temperature and floor must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_parse() {
        for v in LossVariant::ALL {
            assert_eq!(v.name().parse::<LossVariant>().unwrap(), v);
        }
        assert_eq!("pnd-fix".parse::<LossVariant>().unwrap(), LossVariant::PndFix);
        assert!("ppr".parse::<LossVariant>().is_err());
    }

    #[test]
    fn validation() {
        assert!(DistillConfig::default().validate().is_ok());
        assert!(DistillConfig { alpha: 1.5, ..Default::default() }.validate().is_err());
        let mut c = DistillConfig::default();
        c.train.patience = 0;
        assert!(c.validate().is_err());
    }
}
