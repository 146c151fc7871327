//! Training regimes (WGAN, DPWGAN, GSWGAN), classifier training, early
//! stopping and the evaluation protocol built on them.

mod classifier;
mod config;
mod eval;
mod gan;
mod stopping;

pub use classifier::{train_classifier, train_classifier_dp, ClassifierOutcome, EpochRow};
pub use config::{ClassifierConfig, Lipschitz, Regime, StoppingKind, TrainConfig};
pub use eval::{four_way_eval, four_way_eval_datasets, generate_dataset, stopping_metric, MetricContext, Probe};
pub use gan::{train_dpwgan, train_gan, train_gswgan, train_wgan, GanOutcome, HistoryRow, StopReason, TrainState};
pub use stopping::{StopDecision, StoppingController};

use crate::autodiff::{Gradients, ParamSet, Var};

/// Per-parameter gradients, zero where the parameter was not reached.
pub(crate) fn param_grads(g: &Gradients, vars: &[Var], params: &ParamSet) -> Vec<Vec<f64>> {
    vars.iter()
        .enumerate()
        .map(|(i, &v)| g.get(v).map_or_else(|| vec![0.0; params.values(i).len()], <[f64]>::to_vec))
        .collect()
}

pub(crate) fn flat_grads(g: &Gradients, vars: &[Var], params: &ParamSet) -> Vec<f64> {
    param_grads(g, vars, params).concat()
}

pub(crate) fn split_flat(flat: &[f64], params: &ParamSet) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(params.len());
    let mut at = 0;
    for i in 0..params.len() {
        let len = params.values(i).len();
        out.push(flat[at..at + len].to_vec());
        at += len;
    }
    out
}
