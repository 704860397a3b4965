use serde::{Deserialize, Serialize};

use crate::model::{Architecture, Mode, Pooling};

use super::TrainError;

/// Which validation quantity drives early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Monitor {
    /// Classification loss plus the weighted regularizer.
    #[default]
    Objective,
    /// Classification loss alone.
    Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout_rate: f64,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub reg_weight: f64,
    pub mode: Mode,
    /// Subjects per optimizer step; `None` trains on the full training split at once.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub leaky_slope: f64,
    pub pooling: Pooling,
    pub monitor: Monitor,
    /// Multilabel decision threshold on `Z`.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            weight_decay: 0.0001,
            dropout_rate: 0.5,
            hidden_dim: 300,
            num_layers: 2,
            max_epochs: 6000,
            patience: 10,
            reg_weight: 1.0,
            mode: Mode::Multiclass,
            batch_size: None,
            seed: 0,
            leaky_slope: 0.01,
            pooling: Pooling::Attention,
            monitor: Monitor::Objective,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if self.hidden_dim == 0
            || self.num_layers == 0
            || self.max_epochs == 0
            || self.patience == 0
        {
            return fail("hidden_dim, num_layers, max_epochs and patience must all be >= 1".into());
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return fail(format!("reg_weight must be >= 0, got {}", self.reg_weight));
        }
        if self.batch_size == Some(0) {
            return fail("batch_size must be >= 1".into());
        }
        if !self.leaky_slope.is_finite() {
            return fail("leaky_slope must be finite".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            ));
        }
        Ok(())
    }

    pub fn architecture(&self, num_nodes: usize, num_classes: usize) -> Architecture {
        Architecture {
            num_nodes,
            hidden_dim: self.hidden_dim,
            num_layers: self.num_layers,
            num_classes,
            mode: self.mode,
            dropout_rate: self.dropout_rate,
            leaky_slope: self.leaky_slope,
            pooling: self.pooling,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TrainError> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
