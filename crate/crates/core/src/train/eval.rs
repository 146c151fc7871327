use nalgebra::{DMatrix, DVector};

use super::classifier::train_classifier;
use super::config::{ClassifierConfig, StoppingKind};
use crate::autodiff::Tensor;
use crate::data::{Split, TimeSeriesDataset};
use crate::error::{dim_err, Error, Result};
use crate::metrics::{accuracy, fid_from_moments, inception_score, moments, weighted_f1, FourWayReport};
use crate::nets::{Classifier, ClassifierArch, Critic, Generator};
use crate::rng;

const INFER_CHUNK: usize = 256;

/// Latents and conditioning labels held fixed across evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub z: Tensor,
    pub labels: Vec<usize>,
}

impl Probe {
    /// `n` latents with labels cycling through the classes.
    pub fn new(n: usize, z_dim: usize, num_classes: usize, seed: u64) -> Result<Self> {
        let mut r = rng::stream(seed, rng::tags::EVAL);
        let z = Tensor::new(vec![n, z_dim], rng::normal_vec(&mut r, n * z_dim))?;
        Ok(Self { z, labels: (0..n).map(|i| i % num_classes).collect() })
    }
}

/// Everything a stopping metric needs besides the generator under test.
pub struct MetricContext<'a> {
    kind: StoppingKind,
    classifier: Option<&'a Classifier>,
    real: &'a TimeSeriesDataset,
    real_moments: Option<(DVector<f64>, DMatrix<f64>)>,
    probe: Probe,
}

impl<'a> MetricContext<'a> {
    pub fn new(
        kind: StoppingKind,
        classifier: Option<&'a Classifier>,
        real: &'a TimeSeriesDataset,
        probe: Probe,
    ) -> Result<Self> {
        if kind.needs_classifier() && classifier.is_none() {
            return Err(Error::Config(format!("{kind:?} stopping needs a trained baseline classifier")));
        }
        let real_moments = match (kind, classifier) {
            (StoppingKind::Fid, Some(c)) => Some(moments(&c.infer(real.samples(), INFER_CHUNK)?.1)?),
            _ => None,
        };
        Ok(Self { kind, classifier, real, real_moments, probe })
    }

    pub fn kind(&self) -> StoppingKind {
        self.kind
    }

    pub fn probe(&self) -> &Probe {
        &self.probe
    }

    /// Metric of an explicit labeled sample set.
    pub fn score_samples(&self, samples: &Tensor, labels: &[usize], critic: Option<&Critic>) -> Result<f64> {
        let cls = || self.classifier.ok_or_else(|| Error::Config("metric needs a classifier".into()));
        match self.kind {
            StoppingKind::Fid => {
                let (mu, s) = self.real_moments.as_ref().expect("built with the classifier");
                let (m2, s2) = moments(&cls()?.infer(samples, INFER_CHUNK)?.1)?;
                fid_from_moments(mu, s, &m2, &s2)
            }
            StoppingKind::Is => inception_score(&cls()?.probabilities(samples)?),
            StoppingKind::Accuracy => Ok(accuracy(labels, &cls()?.predict(samples)?)),
            StoppingKind::Loss | StoppingKind::Fixed => {
                let critic = critic.ok_or_else(|| Error::Config("loss metric needs the critic".into()))?;
                let fake = critic.score(samples, labels)?;
                let real = critic.score(self.real.samples(), self.real.labels())?;
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                Ok(mean(&real) - mean(&fake))
            }
        }
    }

    /// Metric of the generator's output on the fixed probe. Parameters are
    /// only read.
    pub fn evaluate(&self, generator: &Generator, critic: Option<&Critic>) -> Result<f64> {
        let samples = generator.generate(&self.probe.z, &self.probe.labels)?;
        self.score_samples(&samples, &self.probe.labels, critic)
    }
}

/// One-shot form of [`MetricContext::evaluate`].
pub fn stopping_metric(
    kind: StoppingKind,
    generator: &Generator,
    classifier: Option<&Classifier>,
    critic: Option<&Critic>,
    real: &TimeSeriesDataset,
    n_gen: usize,
    seed: u64,
) -> Result<f64> {
    if n_gen < 2 {
        return Err(Error::Argument(format!("n_gen must be at least 2, got {n_gen}")));
    }
    let a = generator.arch();
    let probe = Probe::new(n_gen, a.z_dim, a.num_classes, seed)?;
    MetricContext::new(kind, classifier, real, probe)?.evaluate(generator, critic)
}

/// Generate a dataset with the given labels.
pub fn generate_dataset(generator: &Generator, labels: &[usize], class_names: &[String], split: Split, seed: u64) -> Result<TimeSeriesDataset> {
    let z_dim = generator.arch().z_dim;
    let mut r = rng::stream(seed, rng::tags::GENERATE);
    let mut parts = Vec::new();
    for chunk in labels.chunks(INFER_CHUNK) {
        let z = Tensor::new(vec![chunk.len(), z_dim], rng::normal_vec(&mut r, chunk.len() * z_dim))?;
        parts.push(generator.generate(&z, chunk)?);
    }
    let refs: Vec<&Tensor> = parts.iter().collect();
    TimeSeriesDataset::new(Tensor::concat_rows(&refs)?, labels.to_vec(), class_names.to_vec(), split)
}

fn f1_on(c: &Classifier, d: &TimeSeriesDataset) -> Result<f64> {
    weighted_f1(d.labels(), &c.predict(d.samples())?, d.num_classes())
}

/// Four-way protocol on explicit private and public splits. The baseline
/// field repeats m−d−; callers holding a separate baseline overwrite it.
pub fn four_way_eval_datasets(
    private_train: &TimeSeriesDataset,
    private_test: &TimeSeriesDataset,
    public_train: &TimeSeriesDataset,
    public_test: &TimeSeriesDataset,
    arch: &ClassifierArch,
    cfg: &ClassifierConfig,
) -> Result<FourWayReport> {
    for d in [private_test, public_train, public_test] {
        if d.channels() != private_train.channels() || d.length() != private_train.length() {
            return dim_err(format!(
                "dataset shape [{}, {}] does not match private [{}, {}]",
                d.channels(),
                d.length(),
                private_train.channels(),
                private_train.length()
            ));
        }
    }
    let cfg = ClassifierConfig { privacy: None, ..cfg.clone() };
    let m_minus = train_classifier(private_train, arch, &cfg)?.classifier;
    let m_plus = train_classifier(public_train, arch, &cfg)?.classifier;
    let mdm = f1_on(&m_minus, private_test)?;
    Ok(FourWayReport {
        m_minus_d_minus: mdm,
        m_minus_d_plus: f1_on(&m_minus, public_test)?,
        m_plus_d_minus: f1_on(&m_plus, private_test)?,
        m_plus_d_plus: f1_on(&m_plus, public_test)?,
        baseline: mdm,
    })
}

/// Four-way protocol with public splits drawn from `generator`, matching
/// the private splits' sizes and label counts.
pub fn four_way_eval(
    private_train: &TimeSeriesDataset,
    private_test: &TimeSeriesDataset,
    generator: &Generator,
    arch: &ClassifierArch,
    cfg: &ClassifierConfig,
) -> Result<FourWayReport> {
    let names = private_train.class_names();
    let public_train = generate_dataset(generator, private_train.labels(), names, Split::Train, cfg.seed)?;
    let public_test = generate_dataset(generator, private_test.labels(), names, Split::Test, cfg.seed.wrapping_add(1))?;
    four_way_eval_datasets(private_train, private_test, &public_train, &public_test, arch, cfg)
}
