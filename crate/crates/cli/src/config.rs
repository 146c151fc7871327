use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dpts_core::data::{apply_normalizer, fit_normalizer, make_synthetic, parse_csv, parse_ts, Split, SyntheticSpec, TimeSeriesDataset};
use dpts_core::metrics::TsneParams;
use dpts_core::nets::{ClassifierArch, CriticArch, GeneratorArch};
use dpts_core::train::{ClassifierConfig, Regime, TrainConfig};
use dpts_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Ts,
    Csv,
}

/// Train/test files on disk. CSV needs the sample shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default = "ts")]
    pub format: FileFormat,
    #[serde(default)]
    pub channels: Option<usize>,
    #[serde(default)]
    pub length: Option<usize>,
}

fn ts() -> FileFormat {
    FileFormat::Ts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Files(FileSource),
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Standardize then min-max scale with statistics of the train split.
    #[serde(default = "yes")]
    pub normalize: bool,
}

/// Cells of an architecture grid; every combination of the listed values
/// becomes one conv-generator cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub z_dims: Vec<usize>,
    pub filters: Vec<Vec<usize>>,
    pub kernel_sizes: Vec<Vec<usize>>,
}

fn d_multipliers() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 1.5, 2.0]
}
fn d_methods() -> Vec<SweepMethod> {
    vec![SweepMethod::Dp, SweepMethod::Dpwgan, SweepMethod::Gswgan]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMethod {
    /// DP-SGD classifier evaluated directly.
    Dp,
    Dpwgan,
    Gswgan,
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dp => "dp",
            Self::Dpwgan => "dpwgan",
            Self::Gswgan => "gswgan",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "d_multipliers")]
    pub multipliers: Vec<f64>,
    #[serde(default = "d_methods")]
    pub methods: Vec<SweepMethod>,
    /// Classifier settings for the DP row; `classifier_training` when absent.
    #[serde(default)]
    pub dp_classifier_training: Option<ClassifierConfig>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { multipliers: d_multipliers(), methods: d_methods(), dp_classifier_training: None }
    }
}

fn d_overlay() -> usize {
    10
}

/// One JSON document describing a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub method: Option<Regime>,
    #[serde(default)]
    pub generator: Option<GeneratorArch>,
    #[serde(default)]
    pub critic: Option<CriticArch>,
    /// Defaults to the reduced InceptionTime sized to the data.
    #[serde(default)]
    pub classifier: Option<ClassifierArch>,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub classifier_training: ClassifierConfig,
    /// Baseline classifier checkpoint; `output/checkpoints/baseline.dtsf`
    /// when absent.
    #[serde(default)]
    pub baseline: Option<PathBuf>,
    #[serde(default)]
    pub tsne: TsneParams,
    #[serde(default = "d_overlay")]
    pub overlay: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let DatasetSource::Files(f) = &mut cfg.dataset.source {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [&mut f.train, &mut f.test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Seed applied to every stochastic component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.training.seed = seed;
        self.classifier_training.seed = seed;
        self.tsne.seed = seed;
        if let DatasetSource::Synthetic(s) = &mut self.dataset.source {
            s.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let at = |field: &str, e: Error| Error::Config(format!("at `{field}`: {e}"));
        self.training.validate().map_err(|e| at("training", e))?;
        self.classifier_training.validate().map_err(|e| at("classifier_training", e))?;
        if let DatasetSource::Synthetic(s) = &self.dataset.source {
            s.validate().map_err(|e| at("dataset.source.synthetic", e))?;
        }
        if let DatasetSource::Files(f) = &self.dataset.source {
            if f.format == FileFormat::Csv && (f.channels.is_none() || f.length.is_none()) {
                return Err(Error::Config("at `dataset.source.files`: csv needs `channels` and `length`".into()));
            }
        }
        if let Some(g) = &self.grid {
            if g.z_dims.is_empty() || g.filters.is_empty() || g.kernel_sizes.is_empty() {
                return Err(Error::Config("at `grid`: every list needs at least one entry".into()));
            }
        }
        if self.sweep.multipliers.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Config("at `sweep.multipliers`: multipliers must be positive".into()));
        }
        Ok(())
    }

    /// Load both splits, normalized with train statistics when configured.
    pub fn datasets(&self) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
        let (train, test) = match &self.dataset.source {
            DatasetSource::Synthetic(s) => make_synthetic(s)?,
            DatasetSource::Files(f) => {
                let read = |p: &Path, split| -> Result<TimeSeriesDataset> {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                    match f.format {
                        FileFormat::Ts => parse_ts(&text, split),
                        FileFormat::Csv => parse_csv(&text, f.channels.unwrap_or(1), f.length.unwrap_or(1), split),
                    }
                };
                (read(&f.train, Split::Train)?, read(&f.test, Split::Test)?)
            }
        };
        if !self.dataset.normalize {
            return Ok((train, test));
        }
        let meta = fit_normalizer(&train)?;
        Ok((apply_normalizer(&train, &meta)?, apply_normalizer(&test, &meta)?))
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf).or_else(|| self.output.clone()).unwrap_or_else(|| PathBuf::from("runs/default"))
    }

    pub fn classifier_arch(&self, data: &TimeSeriesDataset) -> ClassifierArch {
        self.classifier
            .clone()
            .unwrap_or_else(|| ClassifierArch::new(data.channels(), data.length(), data.num_classes()))
    }

    pub fn generator_arch(&self, data: &TimeSeriesDataset) -> GeneratorArch {
        self.generator.clone().unwrap_or_else(|| {
            GeneratorArch::dense(32, data.num_classes(), vec![128, 128], data.channels(), data.length())
        })
    }

    pub fn critic_arch(&self, data: &TimeSeriesDataset) -> CriticArch {
        self.critic.clone().unwrap_or_else(|| {
            CriticArch::conv(data.channels(), data.length(), data.num_classes(), vec![16, 32], vec![5, 5])
        })
    }
}
