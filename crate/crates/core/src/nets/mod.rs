//! Conditional generators, Wasserstein critics and an InceptionTime-style
//! classifier, built from serializable architecture descriptors.
//!
//! Every network stores its weights in a [`ParamSet`] and exposes a forward
//! map over tape variables bound from that set, in parameter order.

mod checkpoint;
mod classifier;
mod critic;
mod generator;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION, MAGIC};
pub use classifier::{Classifier, ClassifierArch};
pub use critic::{Critic, CriticArch};
pub use generator::{Generator, GeneratorArch};

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamSet, Tape, Tensor, Var};
use crate::error::{dim_err, Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dense,
    Conv,
}

/// Architecture descriptor stored alongside checkpointed weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "network", rename_all = "lowercase")]
pub enum NetworkArch {
    Generator(GeneratorArch),
    Critic(CriticArch),
    Classifier(ClassifierArch),
}

impl NetworkArch {
    pub fn param_specs(&self) -> Result<Vec<ParamSpec>> {
        match self {
            NetworkArch::Generator(a) => Ok(a.plan()?.specs),
            NetworkArch::Critic(a) => a.param_specs(),
            NetworkArch::Classifier(a) => Ok(a.plan()?.specs),
        }
    }
}

/// Name, shape and fan-in of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Zero for biases, which start at zero.
    pub fan_in: usize,
}

pub(crate) struct SpecList(pub Vec<ParamSpec>);

impl SpecList {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn weight(&mut self, name: String, shape: Vec<usize>, fan_in: usize) {
        self.0.push(ParamSpec { name, shape, fan_in });
    }

    pub fn bias(&mut self, name: String, len: usize) {
        self.0.push(ParamSpec { name, shape: vec![len], fan_in: 0 });
    }
}

/// Weights `U(±1/√fan_in)`, biases zero.
pub(crate) fn init_params(specs: &[ParamSpec], rng: &mut Rng) -> ParamSet {
    let mut set = ParamSet::new();
    for s in specs {
        let n: usize = s.shape.iter().product();
        let data = if s.fan_in == 0 {
            vec![0.0; n]
        } else {
            let bound = 1.0 / (s.fan_in as f64).sqrt();
            (0..n).map(|_| bound * (2.0 * rng::uniform(rng) - 1.0)).collect()
        };
        set.push(s.name.clone(), Tensor::new(s.shape.clone(), data).expect("positive extents"));
    }
    set
}

pub(crate) fn check_params(specs: &[ParamSpec], params: &ParamSet) -> Result<()> {
    if specs.len() != params.len() {
        return Err(Error::Architecture(format!(
            "architecture expects {} parameter tensors, found {}",
            specs.len(),
            params.len()
        )));
    }
    for (i, s) in specs.iter().enumerate() {
        if params.names()[i] != s.name || params.shape(i) != s.shape.as_slice() {
            return Err(Error::Architecture(format!(
                "parameter {i} is {} {:?}, architecture expects {} {:?}",
                params.names()[i],
                params.shape(i),
                s.name,
                s.shape
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_bound(params: &ParamSet, vars: &[Var]) -> Result<()> {
    if vars.len() != params.len() {
        return dim_err(format!("{} bound variables for {} parameters", vars.len(), params.len()));
    }
    Ok(())
}

/// One-hot rows `[N × K]` for the conditioning labels.
pub fn one_hot(labels: &[usize], k: usize) -> Result<Tensor> {
    let mut data = vec![0.0; labels.len() * k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::Argument(format!("label {l} out of range for {k} classes")));
        }
        data[i * k + l] = 1.0;
    }
    Tensor::new(vec![labels.len(), k], data)
}

/// Reads consecutive bound parameters during a forward pass.
pub(crate) struct Cursor<'a> {
    vars: &'a [Var],
    at: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(vars: &'a [Var]) -> Self {
        Self { vars, at: 0 }
    }

    pub fn next(&mut self) -> Var {
        let v = self.vars[self.at];
        self.at += 1;
        v
    }

    /// `x·W + b` for rank-2 `x`.
    pub fn linear(&mut self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (w, b) = (self.next(), self.next());
        let y = tape.matmul(x, w)?;
        tape.add_bias(y, b)
    }
}
