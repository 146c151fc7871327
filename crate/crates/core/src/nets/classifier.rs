use serde::{Deserialize, Serialize};

use super::{check_bound, check_params, init_params, Cursor, ParamSpec, SpecList};
use crate::autodiff::{Activation, ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::Rng;

fn default_depth() -> usize {
    6
}
fn default_filters() -> usize {
    32
}
fn default_kernel() -> usize {
    40
}

/// InceptionTime-style classifier without normalization layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierArch {
    pub in_channels: usize,
    pub length: usize,
    pub num_classes: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_filters")]
    pub nb_filters: usize,
    #[serde(default = "default_filters")]
    pub bottleneck: usize,
    #[serde(default = "default_kernel")]
    pub kernel_size: usize,
    #[serde(default = "yes")]
    pub residual: bool,
}

fn yes() -> bool {
    true
}

pub(crate) struct ClsPlan {
    pub specs: Vec<ParamSpec>,
    pub kernels: [usize; 3],
}

impl ClassifierArch {
    pub fn new(in_channels: usize, length: usize, num_classes: usize) -> Self {
        Self {
            in_channels,
            length,
            num_classes,
            depth: default_depth(),
            nb_filters: default_filters(),
            bottleneck: default_filters(),
            kernel_size: default_kernel(),
            residual: true,
        }
    }

    pub fn latent_dim(&self) -> usize {
        4 * self.nb_filters
    }

    /// Branch kernels `{k, k/2, k/4}` with `k` capped at `length − 1`, each
    /// rounded down to an odd size so "same" padding is symmetric.
    pub fn kernels(&self) -> [usize; 3] {
        let k = self.kernel_size.min(self.length.saturating_sub(1)).max(1);
        let odd = |v: usize| if v <= 1 { 1 } else if v % 2 == 0 { v - 1 } else { v };
        [odd(k), odd(k / 2), odd(k / 4)]
    }

    fn uses_bottleneck(cin: usize, bottleneck: usize) -> bool {
        cin > 1 && bottleneck > 0
    }

    pub(crate) fn plan(&self) -> Result<ClsPlan> {
        let arch_err = |m: String| Err(Error::Architecture(m));
        if self.depth == 0 {
            return arch_err("classifier depth must be at least 1".into());
        }
        if self.length < 4 {
            return arch_err(format!("series length {} too short for the classifier (needs ≥ 4)", self.length));
        }
        if self.in_channels == 0 || self.nb_filters == 0 || self.num_classes < 2 || self.kernel_size == 0 {
            return arch_err("classifier needs positive channels/filters/kernel and at least 2 classes".into());
        }
        let kernels = self.kernels();
        let nb = self.nb_filters;
        let mut specs = SpecList::new();
        let mut cin = self.in_channels;
        let mut res_in = cin;
        for d in 0..self.depth {
            let branch_in = if Self::uses_bottleneck(cin, self.bottleneck) {
                specs.weight(format!("block{d}.bottleneck.weight"), vec![self.bottleneck, cin, 1], cin);
                specs.bias(format!("block{d}.bottleneck.bias"), self.bottleneck);
                self.bottleneck
            } else {
                cin
            };
            for (j, &k) in kernels.iter().enumerate() {
                specs.weight(format!("block{d}.conv{j}.weight"), vec![nb, branch_in, k], branch_in * k);
                specs.bias(format!("block{d}.conv{j}.bias"), nb);
            }
            specs.weight(format!("block{d}.pool_conv.weight"), vec![nb, cin, 1], cin);
            specs.bias(format!("block{d}.pool_conv.bias"), nb);
            cin = 4 * nb;
            if self.residual && d % 3 == 2 {
                specs.weight(format!("block{d}.shortcut.weight"), vec![cin, res_in, 1], res_in);
                specs.bias(format!("block{d}.shortcut.bias"), cin);
                res_in = cin;
            }
        }
        specs.weight("head.weight".into(), vec![cin, self.num_classes], cin);
        specs.bias("head.bias".into(), self.num_classes);
        Ok(ClsPlan { specs: specs.0, kernels })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    arch: ClassifierArch,
    pub params: ParamSet,
    kernels: [usize; 3],
}

/// Outputs of one classifier pass.
pub struct ClassifierOutput {
    pub logits: Var,
    pub latent: Var,
}

impl Classifier {
    pub fn new(arch: ClassifierArch, rng: &mut Rng) -> Result<Self> {
        let plan = arch.plan()?;
        let params = init_params(&plan.specs, rng);
        Ok(Self { arch, params, kernels: plan.kernels })
    }

    pub fn from_params(arch: ClassifierArch, params: ParamSet) -> Result<Self> {
        let plan = arch.plan()?;
        check_params(&plan.specs, &params)?;
        Ok(Self { arch, params, kernels: plan.kernels })
    }

    pub fn arch(&self) -> &ClassifierArch {
        &self.arch
    }

    pub fn forward(&self, tape: &mut Tape, p: &[Var], x: Var) -> Result<ClassifierOutput> {
        check_bound(&self.params, p)?;
        let a = &self.arch;
        let s = tape.shape(x).to_vec();
        if s.len() != 3 || s[1] != a.in_channels || s[2] != a.length {
            return Err(Error::Dimension(format!(
                "classifier input {s:?} does not match [N, {}, {}]",
                a.in_channels, a.length
            )));
        }
        let mut cur = Cursor::new(p);
        let mut h = x;
        let mut res = x;
        let mut cin = a.in_channels;
        for d in 0..a.depth {
            let branch_in = if ClassifierArch::uses_bottleneck(cin, a.bottleneck) {
                let (w, b) = (cur.next(), cur.next());
                tape.conv1d(h, w, Some(b), 1, 0)?
            } else {
                h
            };
            let mut branches = Vec::with_capacity(4);
            for &k in &self.kernels {
                let (w, b) = (cur.next(), cur.next());
                branches.push(tape.conv1d(branch_in, w, Some(b), 1, (k - 1) / 2)?);
            }
            let pooled = tape.max_pool1d(h, 3, 1, 1)?;
            let (w, b) = (cur.next(), cur.next());
            branches.push(tape.conv1d(pooled, w, Some(b), 1, 0)?);
            let cat = tape.concat(&branches, 1)?;
            h = tape.activation(Activation::Relu, cat)?;
            cin = 4 * a.nb_filters;
            if a.residual && d % 3 == 2 {
                let (w, b) = (cur.next(), cur.next());
                let short = tape.conv1d(res, w, Some(b), 1, 0)?;
                let sum = tape.add(h, short)?;
                h = tape.activation(Activation::Relu, sum)?;
                res = h;
            }
        }
        let latent = tape.mean_last_axis(h)?;
        let logits = cur.linear(tape, latent)?;
        Ok(ClassifierOutput { logits, latent })
    }

    /// Logits and latent features on frozen parameters, in chunks of `chunk`.
    pub fn infer(&self, x: &Tensor, chunk: usize) -> Result<(Tensor, Tensor)> {
        let n = x.shape()[0];
        let mut logits = Vec::new();
        let mut latents = Vec::new();
        let mut start = 0;
        while start < n {
            let end = (start + chunk.max(1)).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let mut tape = Tape::new();
            let p = self.params.bind_frozen(&mut tape);
            let xv = tape.constant(x.select(&idx)?);
            let out = self.forward(&mut tape, &p, xv)?;
            logits.push(tape.value(out.logits).clone());
            latents.push(tape.value(out.latent).clone());
            start = end;
        }
        let logit_refs: Vec<&Tensor> = logits.iter().collect();
        let latent_refs: Vec<&Tensor> = latents.iter().collect();
        Ok((Tensor::concat_rows(&logit_refs)?, Tensor::concat_rows(&latent_refs)?))
    }

    /// Row-wise class probabilities.
    pub fn probabilities(&self, x: &Tensor) -> Result<Tensor> {
        let (logits, _) = self.infer(x, 256)?;
        let k = logits.shape()[1];
        let mut data = logits.into_data();
        for row in data.chunks_mut(k) {
            crate::autodiff::tape::softmax_in_place(row);
        }
        Tensor::new(vec![data.len() / k, k], data)
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        let (logits, _) = self.infer(x, 256)?;
        let k = logits.shape()[1];
        Ok(logits
            .data()
            .chunks(k)
            .map(|row| row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn ecg5000_shapes() {
        let mut r = rng::seeded(6);
        let c = Classifier::new(ClassifierArch::new(1, 140, 5), &mut r).unwrap();
        let x = Tensor::new(vec![2, 1, 140], rng::normal_vec(&mut r, 280)).unwrap();
        let (logits, latent) = c.infer(&x, 8).unwrap();
        assert_eq!(latent.shape(), [2, 128]);
        assert_eq!(logits.shape(), [2, 5]);
        assert_eq!(c.arch().kernels(), [39, 19, 9]);
    }

    #[test]
    fn degenerate_archs_rejected() {
        let mut a = ClassifierArch::new(1, 64, 2);
        a.depth = 0;
        assert!(matches!(Classifier::new(a, &mut rng::seeded(0)), Err(Error::Architecture(_))));
        let short = ClassifierArch::new(1, 3, 2);
        assert!(matches!(Classifier::new(short, &mut rng::seeded(0)), Err(Error::Architecture(_))));
    }

    #[test]
    fn batch_order_equivariance_and_latent_width() {
        let mut r = rng::seeded(7);
        let mut arch = ClassifierArch::new(2, 10, 3);
        arch.depth = 4;
        arch.nb_filters = 3;
        arch.bottleneck = 2;
        arch.kernel_size = 8;
        let c = Classifier::new(arch, &mut r).unwrap();
        let x = Tensor::new(vec![3, 2, 10], rng::normal_vec(&mut r, 60)).unwrap();
        let (l1, z1) = c.infer(&x, 3).unwrap();
        assert_eq!(z1.shape(), [3, 12]);
        let perm = x.select(&[2, 0, 1]).unwrap();
        let (l2, _) = c.infer(&perm, 1).unwrap();
        assert_eq!(l2.row(0), l1.row(2));
        assert_eq!(l2.row(1), l1.row(0));
        assert_eq!(l2.row(2), l1.row(1));
    }
}
