use serde::{Deserialize, Serialize};

/// Tracks the best monitored loss; a value counts as an improvement only when
/// strictly below the best so far.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        assert!(patience >= 1);
        Self {
            patience,
            best: None,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records the loss of `epoch` (1-based).
    pub fn observe(&mut self, epoch: usize, loss: f64) -> Verdict {
        match self.best {
            Some(b) if loss >= b => {
                self.stale += 1;
                if self.stale >= self.patience {
                    Verdict::Stop
                } else {
                    Verdict::Continue
                }
            }
            _ => {
                self.best = Some(loss);
                self.best_epoch = epoch;
                self.stale = 0;
                Verdict::Improved
            }
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub epochs_run: usize,
    /// 1-based epoch whose state was returned.
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stopped_early: bool,
}

/// Runs `epoch_fn` for epochs `1..=max_epochs` until the monitored loss it
/// returns stops improving for `patience` epochs, then returns a copy of the
/// state captured right after the best epoch.
pub fn fit<S: Clone, E>(
    state: &mut S,
    max_epochs: usize,
    patience: usize,
    mut epoch_fn: impl FnMut(&mut S, usize) -> Result<f64, E>,
) -> Result<(S, FitSummary), E> {
    let mut stopper = EarlyStopping::new(patience);
    let mut best_state = state.clone();
    let mut epochs_run = 0;
    let mut stopped_early = false;
    for epoch in 1..=max_epochs {
        let loss = epoch_fn(state, epoch)?;
        epochs_run = epoch;
        match stopper.observe(epoch, loss) {
            Verdict::Improved => best_state = state.clone(),
            Verdict::Continue => {}
            Verdict::Stop => {
                stopped_early = true;
                break;
            }
        }
    }
    let summary = FitSummary {
        epochs_run,
        best_epoch: stopper.best_epoch(),
        best_loss: stopper.best().unwrap_or(f64::NAN),
        stopped_early,
    };
    Ok((best_state, summary))
}
