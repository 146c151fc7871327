use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{Lipschitz, Regime, StoppingKind, TrainConfig};
use super::eval::{MetricContext, Probe};
use super::stopping::{StopDecision, StoppingController};
use super::{flat_grads, param_grads, split_flat};
use crate::autodiff::{gradient_penalty, wasserstein_losses, Optimizer, StepDecay, Tape, Tensor};
use crate::data::{sample_batch, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::nets::{Classifier, Critic, CriticArch, Generator, GeneratorArch};
use crate::privacy::{clip_per_sample, gaussian_sum, sanitize_generator_gradient, weight_clip, PrivacyParams, RdpAccountant};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    /// Means over the generator steps since the previous row.
    pub critic_loss: f64,
    pub generator_loss: f64,
    pub metric: f64,
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    Patience,
    EpsilonCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub regime: Regime,
    pub iteration: usize,
    pub critic_updates: usize,
    pub metric_kind: StoppingKind,
    pub best_value: Option<f64>,
    pub best_iteration: Option<usize>,
    pub history: Vec<HistoryRow>,
    pub accountant: Option<RdpAccountant>,
    pub sampling_rate: Option<f64>,
    pub noise_multiplier: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: f64,
    pub stop_reason: StopReason,
}

#[derive(Clone, Debug)]
pub struct GanOutcome {
    /// Best generator under the stopping metric; the final one for `fixed`.
    pub generator: Generator,
    pub final_generator: Generator,
    pub critic: Critic,
    pub state: TrainState,
}

struct Run<'a> {
    regime: Regime,
    cfg: &'a TrainConfig,
    privacy: Option<&'a PrivacyParams>,
    data: &'a TimeSeriesDataset,
    gen: Generator,
    critic: Critic,
    g_opt: Optimizer,
    c_opt: Optimizer,
    train_rng: Rng,
    noise_rng: Rng,
    accountant: Option<RdpAccountant>,
    q: f64,
}

fn latent(r: &mut Rng, n: usize, z_dim: usize) -> Result<Tensor> {
    Tensor::new(vec![n, z_dim], rng::normal_vec(r, n * z_dim))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl Run<'_> {
    fn weight_bound(&self) -> Option<f64> {
        match self.regime {
            Regime::Dpwgan => Some(self.privacy.and_then(|p| p.weight_clip).unwrap_or(self.cfg.weight_clip)),
            _ => (self.cfg.lipschitz == Lipschitz::WeightClip).then_some(self.cfg.weight_clip),
        }
    }

    fn uses_penalty(&self) -> bool {
        self.regime != Regime::Dpwgan && self.cfg.lipschitz == Lipschitz::GradientPenalty
    }

    /// One critic update; returns the batch critic loss.
    fn critic_step(&mut self) -> Result<f64> {
        let b = self.cfg.batch_size;
        let (real, labels) = sample_batch(self.data, b, &mut self.train_rng, self.cfg.conditional_sampling)?;
        let z = latent(&mut self.train_rng, b, self.gen.arch().z_dim)?;
        let fake = self.gen.generate(&z, &labels)?;
        let critic = &self.critic;
        let params = &critic.params;

        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let xf = tape.constant(fake.clone());
        let sf = critic.forward(&mut tape, &p, xf, &labels)?;
        let fake_scores = tape.data(sf).to_vec();
        let total_f = tape.sum(sf);
        let g_fake = param_grads(&tape.backward(total_f)?, &p, params);

        let (g_real, real_scores) = match (self.regime, self.privacy) {
            (Regime::Dpwgan, Some(pp)) => {
                let mut per_sample = Vec::with_capacity(b);
                let mut scores = Vec::with_capacity(b);
                for i in 0..b {
                    let mut tape = Tape::new();
                    let p = params.bind(&mut tape);
                    let xr = tape.constant(real.select(&[i])?);
                    let s = critic.forward(&mut tape, &p, xr, &labels[i..=i])?;
                    scores.push(tape.data(s)[0]);
                    let total = tape.sum(s);
                    let neg = tape.scale(total, -1.0);
                    per_sample.push(flat_grads(&tape.backward(neg)?, &p, params));
                }
                let (clipped, _) = clip_per_sample(per_sample, pp.clip_bound);
                let noised = gaussian_sum(&clipped, pp.noise_multiplier, pp.clip_bound, &mut self.noise_rng)?;
                (split_flat(&noised, params), scores)
            }
            _ => {
                let mut tape = Tape::new();
                let p = params.bind(&mut tape);
                let xr = tape.constant(real.clone());
                let s = critic.forward(&mut tape, &p, xr, &labels)?;
                let scores = tape.data(s).to_vec();
                let total = tape.sum(s);
                let neg = tape.scale(total, -1.0);
                let mut g = param_grads(&tape.backward(neg)?, &p, params);
                for v in g.iter_mut().flatten() {
                    *v /= b as f64;
                }
                (g, scores)
            }
        };

        let mut grads: Vec<Vec<f64>> = g_fake
            .iter()
            .zip(&g_real)
            .map(|(f, r)| f.iter().zip(r).map(|(a, c)| a / b as f64 + c).collect())
            .collect();
        let mut penalty = 0.0;
        if self.uses_penalty() && self.cfg.gp_lambda > 0.0 {
            let mut tape = Tape::new();
            let p = params.bind(&mut tape);
            let gp = gradient_penalty(
                &mut tape,
                |t, x| critic.forward(t, &p, x, &labels),
                &real,
                &fake,
                self.cfg.gp_lambda,
                &mut self.train_rng,
            )?;
            penalty = tape.scalar_value(gp);
            let g_gp = param_grads(&tape.backward(gp)?, &p, params);
            for (g, extra) in grads.iter_mut().zip(&g_gp) {
                for (v, e) in g.iter_mut().zip(extra) {
                    *v += e;
                }
            }
        }
        self.c_opt.step(&mut self.critic.params, &grads)?;
        if let Some(c) = self.weight_bound() {
            weight_clip(&mut self.critic.params, c)?;
        }
        if self.regime == Regime::Dpwgan {
            let sigma = self.privacy.map_or(0.0, |p| p.noise_multiplier);
            if let Some(a) = self.accountant.as_mut() {
                a.step(self.q, sigma)?;
            }
        }
        Ok(wasserstein_losses(&real_scores, &fake_scores)?.critic + penalty)
    }

    /// One generator update; returns the generator loss.
    fn generator_step(&mut self) -> Result<f64> {
        let b = self.cfg.batch_size;
        let k = self.gen.arch().num_classes;
        let labels: Vec<usize> = (0..b).map(|_| self.train_rng.random_range(0..k)).collect();
        let z = latent(&mut self.train_rng, b, self.gen.arch().z_dim)?;

        let mut tape = Tape::new();
        let p = self.gen.params.bind(&mut tape);
        let zv = tape.constant(z);
        let fake = self.gen.forward(&mut tape, &p, zv, &labels)?;

        let mut ct = Tape::new();
        let cp = self.critic.params.bind_frozen(&mut ct);
        let xv = ct.variable(tape.value(fake).clone());
        let s = self.critic.forward(&mut ct, &cp, xv, &labels)?;
        let gen_loss = -mean(ct.data(s));
        let total = ct.sum(s);
        let neg = ct.scale(total, -1.0);
        let upstream = ct.backward(neg)?.take(xv).expect("input requires grad");

        let (sigma, bound) = match (self.regime, self.privacy) {
            (Regime::Gswgan, Some(pp)) => (pp.noise_multiplier, pp.clip_bound),
            _ => (0.0, self.cfg.generator_clip.unwrap_or(f64::INFINITY)),
        };
        let (seed, _) = sanitize_generator_gradient(&upstream, b, sigma, bound, &mut self.noise_rng)?;
        let grads = param_grads(&tape.backward_from(fake, seed)?, &p, &self.gen.params);
        self.g_opt.step(&mut self.gen.params, &grads)?;
        if self.regime == Regime::Gswgan {
            if let Some(a) = self.accountant.as_mut() {
                a.step(self.q, sigma)?;
            }
        }
        Ok(gen_loss)
    }

    /// Accountant steps spent by one generator iteration.
    fn steps_per_iteration(&self) -> u64 {
        match self.regime {
            Regime::Dpwgan => self.cfg.critic_steps as u64,
            Regime::Gswgan => 1,
            Regime::Wgan => 0,
        }
    }

    fn epsilon(&self, delta: f64) -> Result<f64> {
        self.accountant.as_ref().map_or(Ok(0.0), |a| a.epsilon(delta))
    }
}

/// Train one regime. `monitor` is the frozen baseline classifier behind the
/// fid/is/accuracy metrics; metrics are computed against `data`.
pub fn train_gan(
    regime: Regime,
    data: &TimeSeriesDataset,
    gen_arch: &GeneratorArch,
    critic_arch: &CriticArch,
    cfg: &TrainConfig,
    monitor: Option<&Classifier>,
) -> Result<GanOutcome> {
    let privacy = cfg.validate_for(regime)?.as_ref();
    if gen_arch.num_classes != data.num_classes()
        || critic_arch.num_classes != data.num_classes()
        || gen_arch.out_channels != data.channels()
        || gen_arch.out_length != data.length()
    {
        return Err(Error::Config(format!(
            "architectures do not match the data [{}, {}] with {} classes",
            data.channels(),
            data.length(),
            data.num_classes()
        )));
    }
    if cfg.batch_size > data.len() {
        return Err(Error::Config(format!("batch_size {} exceeds the {} training samples", cfg.batch_size, data.len())));
    }
    let metric_kind = match (cfg.stopping, monitor) {
        (StoppingKind::Fixed, Some(_)) => StoppingKind::Fid,
        (StoppingKind::Fixed, None) => StoppingKind::Loss,
        (k, _) => k,
    };
    let probe = Probe::new(cfg.eval_samples, gen_arch.z_dim, gen_arch.num_classes, cfg.seed)?;
    let ctx = MetricContext::new(metric_kind, monitor, data, probe)?;

    let gen = Generator::new(gen_arch.clone(), &mut rng::stream(cfg.seed, rng::tags::INIT_GENERATOR))?;
    let critic = Critic::new(critic_arch.clone(), &mut rng::stream(cfg.seed, rng::tags::INIT_CRITIC))?;
    let g_sched = cfg.lr_schedule.then(|| StepDecay::thirds(cfg.max_iterations));
    let c_sched = cfg.lr_schedule.then(|| StepDecay::thirds(cfg.max_iterations * cfg.critic_steps));
    let g_opt = Optimizer::new(cfg.optimizer, cfg.lr_generator, &gen.params)?.with_schedule(g_sched);
    let c_opt = Optimizer::new(cfg.optimizer, cfg.lr_critic, &critic.params)?.with_schedule(c_sched);
    let n = data.len();
    let q = privacy.map_or(1.0, |p| p.sampling_rate_for(cfg.batch_size, n));
    let delta = privacy.map(|p| p.delta_for(n));
    let mut run = Run {
        regime,
        cfg,
        privacy,
        data,
        gen,
        critic,
        g_opt,
        c_opt,
        train_rng: rng::stream(cfg.seed, rng::tags::TRAIN),
        noise_rng: rng::stream(cfg.seed, rng::tags::NOISE),
        accountant: privacy.map(|_| RdpAccountant::new()),
        q,
    };

    let mut controller = StoppingController::new(cfg.stopping, cfg.patience, cfg.max_iterations);
    let mut best_gen = run.gen.clone();
    let mut history = Vec::new();
    let (mut c_sum, mut g_sum, mut window) = (0.0, 0.0, 0usize);
    let mut critic_updates = 0;
    let mut iteration = 0;
    let stop_reason = loop {
        if let (Some(cap), Some(d), Some(a)) = (cfg.max_epsilon, delta, &run.accountant) {
            let mut next = a.clone();
            next.step_many(q, privacy.map_or(0.0, |p| p.noise_multiplier), run.steps_per_iteration())?;
            if next.epsilon(d)? > cap {
                break StopReason::EpsilonCap;
            }
        }
        iteration += 1;
        for _ in 0..cfg.critic_steps {
            let loss = run.critic_step()?;
            critic_updates += 1;
            if !loss.is_finite() {
                return Err(Error::Diverged { iteration, message: format!("critic loss {loss} after {critic_updates} critic updates") });
            }
            c_sum += loss;
        }
        let g_loss = run.generator_step()?;
        if !g_loss.is_finite() {
            return Err(Error::Diverged { iteration, message: format!("generator loss {g_loss}") });
        }
        g_sum += g_loss;
        window += 1;

        if iteration % cfg.eval_every == 0 || iteration >= cfg.max_iterations {
            let metric = ctx.evaluate(&run.gen, Some(&run.critic))?;
            let epsilon = delta.map_or(Ok(0.0), |d| run.epsilon(d))?;
            log::debug!("{regime} iteration {iteration}: metric {metric:.6}, ε {epsilon:.4}");
            history.push(HistoryRow {
                iteration,
                critic_loss: c_sum / (window * cfg.critic_steps) as f64,
                generator_loss: g_sum / window as f64,
                metric,
                epsilon,
            });
            (c_sum, g_sum, window) = (0.0, 0.0, 0);
            let decision = controller.step(iteration, metric);
            if controller.best().is_some_and(|(_, at)| at == iteration) {
                best_gen = run.gen.clone();
            }
            if decision == StopDecision::Stop {
                break if iteration >= cfg.max_iterations { StopReason::Budget } else { StopReason::Patience };
            }
        }
    };
    if cfg.stopping == StoppingKind::Fixed {
        best_gen = run.gen.clone();
    }
    let epsilon = delta.map_or(Ok(0.0), |d| run.epsilon(d))?;
    let state = TrainState {
        regime,
        iteration,
        critic_updates,
        metric_kind,
        best_value: controller.best().map(|b| b.0),
        best_iteration: controller.best().map(|b| b.1),
        history,
        accountant: run.accountant,
        sampling_rate: privacy.map(|_| q),
        noise_multiplier: privacy.map(|p| p.noise_multiplier),
        delta,
        epsilon,
        stop_reason,
    };
    Ok(GanOutcome { generator: best_gen, final_generator: run.gen, critic: run.critic, state })
}

/// Non-private WGAN with a gradient-penalty (or weight-clipped) critic.
pub fn train_wgan(
    data: &TimeSeriesDataset,
    gen_arch: &GeneratorArch,
    critic_arch: &CriticArch,
    cfg: &TrainConfig,
    monitor: Option<&Classifier>,
) -> Result<GanOutcome> {
    train_gan(Regime::Wgan, data, gen_arch, critic_arch, cfg, monitor)
}

/// DPWGAN: per-sample clipped, noised critic gradients on the real term,
/// weight clipping, one accountant step per critic update.
pub fn train_dpwgan(
    data: &TimeSeriesDataset,
    gen_arch: &GeneratorArch,
    critic_arch: &CriticArch,
    cfg: &TrainConfig,
    monitor: Option<&Classifier>,
) -> Result<GanOutcome> {
    train_gan(Regime::Dpwgan, data, gen_arch, critic_arch, cfg, monitor)
}

/// GSWGAN: non-private critic, sanitized gradient at the generator output,
/// one accountant step per generator update.
pub fn train_gswgan(
    data: &TimeSeriesDataset,
    gen_arch: &GeneratorArch,
    critic_arch: &CriticArch,
    cfg: &TrainConfig,
    monitor: Option<&Classifier>,
) -> Result<GanOutcome> {
    train_gan(Regime::Gswgan, data, gen_arch, critic_arch, cfg, monitor)
}
