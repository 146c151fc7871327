use serde::{Deserialize, Serialize};

use super::config::StoppingKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    NewBest,
    Stop,
}

/// Patience-based early stopping over periodic metric evaluations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingController {
    kind: StoppingKind,
    patience: usize,
    max_iterations: usize,
    best: Option<(f64, usize)>,
}

impl StoppingController {
    pub fn new(kind: StoppingKind, patience: usize, max_iterations: usize) -> Self {
        Self { kind, patience, max_iterations, best: None }
    }

    pub fn kind(&self) -> StoppingKind {
        self.kind
    }

    /// Best `(value, iteration)` so far.
    pub fn best(&self) -> Option<(f64, usize)> {
        self.best
    }

    fn improves(&self, value: f64) -> bool {
        match self.best {
            None => !value.is_nan(),
            Some((b, _)) if self.kind.lower_is_better() => value < b,
            Some((b, _)) => value > b,
        }
    }

    /// Record the metric observed at `iteration`. The budget check wins over
    /// an improvement, but the improvement is still recorded as the best.
    pub fn step(&mut self, iteration: usize, value: f64) -> StopDecision {
        if self.kind == StoppingKind::Fixed {
            return if iteration >= self.max_iterations { StopDecision::Stop } else { StopDecision::Continue };
        }
        let improved = self.improves(value);
        if improved {
            self.best = Some((value, iteration));
        }
        let since = self.best.map_or(iteration, |(_, at)| iteration - at);
        if iteration >= self.max_iterations || since >= self.patience {
            StopDecision::Stop
        } else if improved {
            StopDecision::NewBest
        } else {
            StopDecision::Continue
        }
    }
}
