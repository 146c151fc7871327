use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::ClassifierConfig;
use super::{flat_grads, param_grads, split_flat};
use crate::autodiff::{Optimizer, Reduction, StepDecay, Tape};
use crate::data::TimeSeriesDataset;
use crate::error::{arg_err, Result};
use crate::metrics::weighted_f1;
use crate::nets::{Classifier, ClassifierArch};
use crate::privacy::{clip_per_sample, gaussian_sum, RdpAccountant};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
    pub val_loss: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct ClassifierOutcome {
    /// Best-validation parameters.
    pub classifier: Classifier,
    pub best_epoch: usize,
    pub history: Vec<EpochRow>,
    pub accountant: Option<RdpAccountant>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// Stratified split: a `fraction` share of each class (at least one member
/// when the class has two or more) goes to validation.
fn stratified_split(data: &TimeSeriesDataset, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut r = rng::stream(seed, rng::tags::SPLIT);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for mut members in data.class_indices() {
        members.shuffle(&mut r);
        let mut take = (fraction * members.len() as f64).round() as usize;
        if fraction > 0.0 && take == 0 && members.len() >= 2 {
            take = 1;
        }
        val.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn validation(c: &Classifier, val: &TimeSeriesDataset) -> Result<(f64, f64)> {
    let (logits, _) = c.infer(val.samples(), 256)?;
    let mut tape = Tape::new();
    let lv = tape.constant(logits.clone());
    let loss = tape.cross_entropy(lv, val.labels(), Reduction::Mean)?;
    let k = val.num_classes();
    let pred: Vec<usize> = logits
        .data()
        .chunks(k)
        .map(|row| row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i))
        .collect();
    Ok((weighted_f1(val.labels(), &pred, k)?, tape.scalar_value(loss)))
}

/// Cross-entropy training with Adam, returning the best-validation
/// checkpoint. With `cfg.privacy` set, gradients are clipped per sample and
/// noised (DP-SGD).
pub fn train_classifier(data: &TimeSeriesDataset, arch: &ClassifierArch, cfg: &ClassifierConfig) -> Result<ClassifierOutcome> {
    cfg.validate()?;
    if data.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return arg_err("classifier training needs at least two populated classes");
    }
    if arch.num_classes != data.num_classes() || arch.in_channels != data.channels() || arch.length != data.length() {
        return arg_err(format!(
            "classifier arch [{}, {}, K={}] does not fit the data [{}, {}, K={}]",
            arch.in_channels,
            arch.length,
            arch.num_classes,
            data.channels(),
            data.length(),
            data.num_classes()
        ));
    }
    let mut init = rng::stream(cfg.seed, rng::tags::INIT_CLASSIFIER);
    let mut model = Classifier::new(arch.clone(), &mut init)?;
    let (train_idx, val_idx) = stratified_split(data, cfg.validation_fraction, cfg.seed);
    let train = data.subset(&train_idx)?;
    let val = if val_idx.is_empty() { train.clone() } else { data.subset(&val_idx)? };
    let n = train.len();
    let batch = cfg.batch_size.min(n);
    let per_epoch = n / batch;
    let schedule = cfg.lr_schedule.then(|| StepDecay::thirds(cfg.epochs * per_epoch));
    let mut opt = Optimizer::adam(cfg.learning_rate, &model.params)?.with_schedule(schedule);
    let mut train_rng = rng::stream(cfg.seed, rng::tags::TRAIN);
    let mut noise_rng = rng::stream(cfg.seed, rng::tags::NOISE);
    let q = cfg.privacy.as_ref().map(|p| p.sampling_rate_for(batch, n));
    let delta = cfg.privacy.as_ref().map(|p| p.delta_for(n));
    let mut accountant = cfg.privacy.as_ref().map(|_| RdpAccountant::new());

    let (f1, vloss) = validation(&model, &val)?;
    let mut history = vec![EpochRow { epoch: 0, train_loss: f64::NAN, val_f1: f1, val_loss: vloss, epsilon: 0.0 }];
    let mut best = (f1, vloss, 0usize, model.clone());
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut train_rng);
        let mut loss_sum = 0.0;
        for b in 0..per_epoch {
            let idx = &order[b * batch..(b + 1) * batch];
            let x = train.samples().select(idx)?;
            let labels: Vec<usize> = idx.iter().map(|&i| train.labels()[i]).collect();
            let grads = match &cfg.privacy {
                None => {
                    let mut tape = Tape::new();
                    let p = model.params.bind(&mut tape);
                    let xv = tape.constant(x);
                    let out = model.forward(&mut tape, &p, xv)?;
                    let loss = tape.cross_entropy(out.logits, &labels, Reduction::Sum)?;
                    loss_sum += tape.scalar_value(loss);
                    let mut g = param_grads(&tape.backward(loss)?, &p, &model.params);
                    for v in g.iter_mut().flatten() {
                        *v /= batch as f64;
                    }
                    g
                }
                Some(priv_params) => {
                    let mut per_sample = Vec::with_capacity(batch);
                    for (i, &label) in labels.iter().enumerate() {
                        let mut tape = Tape::new();
                        let p = model.params.bind(&mut tape);
                        let xv = tape.constant(x.select(&[i])?);
                        let out = model.forward(&mut tape, &p, xv)?;
                        let loss = tape.cross_entropy(out.logits, &[label], Reduction::Sum)?;
                        loss_sum += tape.scalar_value(loss);
                        per_sample.push(flat_grads(&tape.backward(loss)?, &p, &model.params));
                    }
                    let (clipped, _) = clip_per_sample(per_sample, priv_params.clip_bound);
                    let noised = gaussian_sum(&clipped, priv_params.noise_multiplier, priv_params.clip_bound, &mut noise_rng)?;
                    if let (Some(acct), Some(q)) = (accountant.as_mut(), q) {
                        acct.step(q, priv_params.noise_multiplier)?;
                    }
                    split_flat(&noised, &model.params)
                }
            };
            opt.step(&mut model.params, &grads)?;
        }
        let (f1, vloss) = validation(&model, &val)?;
        let epsilon = match (&accountant, delta) {
            (Some(a), Some(d)) => a.epsilon(d)?,
            _ => 0.0,
        };
        let train_loss = loss_sum / (per_epoch * batch) as f64;
        if !train_loss.is_finite() {
            return Err(crate::Error::Diverged { iteration: epoch, message: format!("classifier loss {train_loss}") });
        }
        history.push(EpochRow { epoch, train_loss, val_f1: f1, val_loss: vloss, epsilon });
        if f1 > best.0 || (f1 == best.0 && vloss < best.1) {
            best = (f1, vloss, epoch, model.clone());
        }
    }
    let epsilon = match (&accountant, delta) {
        (Some(a), Some(d)) => Some(a.epsilon(d)?),
        _ => None,
    };
    Ok(ClassifierOutcome { classifier: best.3, best_epoch: best.2, history, accountant, epsilon, delta })
}

/// [`train_classifier`] with required privacy parameters.
pub fn train_classifier_dp(data: &TimeSeriesDataset, arch: &ClassifierArch, cfg: &ClassifierConfig) -> Result<ClassifierOutcome> {
    if cfg.privacy.is_none() {
        return Err(crate::Error::Config("DP classifier training needs privacy parameters".into()));
    }
    train_classifier(data, arch, cfg)
}
