use serde::{Deserialize, Serialize};

use super::{check_bound, check_params, init_params, one_hot, Cursor, ParamSpec, SpecList, Variant};
use crate::autodiff::{ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Wasserstein critic descriptor. Labels enter as `num_classes` constant
/// one-hot channels (conv) or appended features (dense); the head is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticArch {
    pub variant: Variant,
    pub in_channels: usize,
    pub length: usize,
    pub num_classes: usize,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub filters: Vec<usize>,
    /// One kernel size per filter count; every conv has stride 2.
    #[serde(default)]
    pub kernel_sizes: Vec<usize>,
}

impl CriticArch {
    pub fn dense(in_channels: usize, length: usize, num_classes: usize, hidden: Vec<usize>) -> Self {
        Self { variant: Variant::Dense, in_channels, length, num_classes, hidden, filters: vec![], kernel_sizes: vec![] }
    }

    pub fn conv(in_channels: usize, length: usize, num_classes: usize, filters: Vec<usize>, kernel_sizes: Vec<usize>) -> Self {
        Self { variant: Variant::Conv, in_channels, length, num_classes, hidden: vec![], filters, kernel_sizes }
    }

    /// Temporal extents after each strided conv.
    fn lengths(&self) -> Vec<usize> {
        let mut l = self.length;
        let mut out = Vec::new();
        for &k in &self.kernel_sizes {
            let p = (k - 1) / 2;
            l = (l + 2 * p - k) / 2 + 1;
            out.push(l);
        }
        out
    }

    pub(crate) fn param_specs(&self) -> Result<Vec<ParamSpec>> {
        let arch_err = |m: String| Err(Error::Architecture(m));
        if self.in_channels == 0 || self.length == 0 || self.num_classes == 0 {
            return arch_err("critic in_channels, length and num_classes must be positive".into());
        }
        let mut specs = SpecList::new();
        let head_in = match self.variant {
            Variant::Dense => {
                if self.hidden.contains(&0) {
                    return arch_err("hidden widths must be positive".into());
                }
                let mut width = self.in_channels * self.length + self.num_classes;
                for (i, &h) in self.hidden.iter().enumerate() {
                    specs.weight(format!("hidden{i}.weight"), vec![width, h], width);
                    specs.bias(format!("hidden{i}.bias"), h);
                    width = h;
                }
                width
            }
            Variant::Conv => {
                if self.filters.is_empty() || self.filters.len() != self.kernel_sizes.len() {
                    return arch_err(format!(
                        "conv critic needs one kernel size per filter count ({} vs {})",
                        self.kernel_sizes.len(),
                        self.filters.len()
                    ));
                }
                if self.filters.contains(&0) || self.kernel_sizes.contains(&0) {
                    return arch_err("filters and kernel sizes must be positive".into());
                }
                let mut l = self.length;
                let mut cin = self.in_channels + self.num_classes;
                for (i, (&f, &k)) in self.filters.iter().zip(&self.kernel_sizes).enumerate() {
                    if l + 2 * ((k - 1) / 2) < k {
                        return arch_err(format!("critic kernel {k} longer than its padded input length {l}"));
                    }
                    l = (l + 2 * ((k - 1) / 2) - k) / 2 + 1;
                    specs.weight(format!("down{i}.weight"), vec![f, cin, k], cin * k);
                    specs.bias(format!("down{i}.bias"), f);
                    cin = f;
                }
                cin * l
            }
        };
        specs.weight("head.weight".into(), vec![head_in, 1], head_in);
        specs.bias("head.bias".into(), 1);
        Ok(specs.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    arch: CriticArch,
    pub params: ParamSet,
}

impl Critic {
    pub fn new(arch: CriticArch, rng: &mut Rng) -> Result<Self> {
        let params = init_params(&arch.param_specs()?, rng);
        Ok(Self { arch, params })
    }

    pub fn from_params(arch: CriticArch, params: ParamSet) -> Result<Self> {
        check_params(&arch.param_specs()?, &params)?;
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> &CriticArch {
        &self.arch
    }

    /// Scores `[N]` for samples `x: [N × C × L]`.
    pub fn forward(&self, tape: &mut Tape, p: &[Var], x: Var, labels: &[usize]) -> Result<Var> {
        check_bound(&self.params, p)?;
        let a = &self.arch;
        let n = labels.len();
        if tape.shape(x) != [n, a.in_channels, a.length] {
            return Err(Error::Dimension(format!(
                "critic input {:?} does not match [{n}, {}, {}]",
                tape.shape(x),
                a.in_channels,
                a.length
            )));
        }
        let oh = one_hot(labels, a.num_classes)?;
        let mut cur = Cursor::new(p);
        let features = match a.variant {
            Variant::Dense => {
                let flat = tape.reshape(x, &[n, a.in_channels * a.length])?;
                let ohv = tape.constant(oh);
                let mut h = tape.concat(&[flat, ohv], 1)?;
                for _ in &a.hidden {
                    h = cur.linear(tape, h)?;
                    h = tape.leaky_relu(h)?;
                }
                h
            }
            Variant::Conv => {
                let mut planes = Vec::with_capacity(n * a.num_classes * a.length);
                for row in oh.data().chunks(a.num_classes) {
                    for &v in row {
                        planes.extend(std::iter::repeat_n(v, a.length));
                    }
                }
                let cond = tape.constant(Tensor::new(vec![n, a.num_classes, a.length], planes)?);
                let mut h = tape.concat(&[x, cond], 1)?;
                for &k in &a.kernel_sizes {
                    let (w, b) = (cur.next(), cur.next());
                    h = tape.conv1d(h, w, Some(b), 2, (k - 1) / 2)?;
                    h = tape.leaky_relu(h)?;
                }
                let last = *a.filters.last().expect("validated");
                let l = *a.lengths().last().expect("validated");
                tape.reshape(h, &[n, last * l])?
            }
        };
        let out = cur.linear(tape, features)?;
        tape.reshape(out, &[n])
    }

    /// Scores on frozen parameters.
    pub fn score(&self, x: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let xv = tape.constant(x.clone());
        let out = self.forward(&mut tape, &p, xv, labels)?;
        Ok(tape.data(out).to_vec())
    }
}
