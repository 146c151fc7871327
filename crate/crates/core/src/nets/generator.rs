use serde::{Deserialize, Serialize};

use super::{check_bound, check_params, init_params, one_hot, Cursor, ParamSpec, SpecList, Variant};
use crate::autodiff::{ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Conditional generator descriptor.
///
/// The conv variant projects `[z; onehot]` to `filters[0] × base_length`, then
/// applies one stride-2 transposed convolution per kernel size (each doubling
/// the length), a 1×1 convolution to `out_channels`, a centered crop to
/// `out_length` and a sigmoid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorArch {
    pub variant: Variant,
    pub z_dim: usize,
    pub num_classes: usize,
    pub out_channels: usize,
    pub out_length: usize,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub filters: Vec<usize>,
    #[serde(default)]
    pub kernel_sizes: Vec<usize>,
    /// Temporal extent after the seed projection; derived from `out_length`
    /// when absent.
    #[serde(default)]
    pub base_length: Option<usize>,
}

pub(crate) struct GenPlan {
    pub specs: Vec<ParamSpec>,
    pub base_length: usize,
    /// Length before cropping.
    pub full_length: usize,
}

impl GeneratorArch {
    pub fn dense(z_dim: usize, num_classes: usize, hidden: Vec<usize>, out_channels: usize, out_length: usize) -> Self {
        Self {
            variant: Variant::Dense,
            z_dim,
            num_classes,
            out_channels,
            out_length,
            hidden,
            filters: vec![],
            kernel_sizes: vec![],
            base_length: None,
        }
    }

    pub fn conv(
        z_dim: usize,
        num_classes: usize,
        filters: Vec<usize>,
        kernel_sizes: Vec<usize>,
        out_channels: usize,
        out_length: usize,
    ) -> Self {
        Self {
            variant: Variant::Conv,
            z_dim,
            num_classes,
            out_channels,
            out_length,
            hidden: vec![],
            filters,
            kernel_sizes,
            base_length: None,
        }
    }

    pub(crate) fn plan(&self) -> Result<GenPlan> {
        let arch_err = |m: String| Err(Error::Architecture(m));
        if self.z_dim == 0 || self.num_classes == 0 || self.out_channels == 0 || self.out_length == 0 {
            return arch_err("z_dim, num_classes, out_channels and out_length must be positive".into());
        }
        let input = self.z_dim + self.num_classes;
        let out = self.out_channels * self.out_length;
        let mut specs = SpecList::new();
        match self.variant {
            Variant::Dense => {
                if self.hidden.contains(&0) {
                    return arch_err("hidden widths must be positive".into());
                }
                let mut width = input;
                for (i, &h) in self.hidden.iter().enumerate() {
                    specs.weight(format!("hidden{i}.weight"), vec![width, h], width);
                    specs.bias(format!("hidden{i}.bias"), h);
                    width = h;
                }
                specs.weight("out.weight".into(), vec![width, out], width);
                specs.bias("out.bias".into(), out);
                Ok(GenPlan { specs: specs.0, base_length: 0, full_length: self.out_length })
            }
            Variant::Conv => {
                if self.filters.is_empty() || self.filters.contains(&0) {
                    return arch_err("conv generator needs positive filter counts".into());
                }
                if self.kernel_sizes.len() + 1 != self.filters.len() {
                    return arch_err(format!(
                        "{} kernel sizes for {} filter counts; expected one fewer",
                        self.kernel_sizes.len(),
                        self.filters.len()
                    ));
                }
                if self.kernel_sizes.contains(&0) {
                    return arch_err("kernel sizes must be positive".into());
                }
                let factor = 1usize << self.kernel_sizes.len();
                let base = self.base_length.unwrap_or_else(|| self.out_length.div_ceil(factor));
                if base == 0 {
                    return arch_err("base_length must be positive".into());
                }
                let full = base * factor;
                if full < self.out_length {
                    return arch_err(format!(
                        "output length {} unreachable: base length {base} with {} doublings reaches {full}; achievable lengths are at most base·{factor}, so base_length must be ≥ {}",
                        self.out_length,
                        self.kernel_sizes.len(),
                        self.out_length.div_ceil(factor)
                    ));
                }
                let f0 = self.filters[0];
                specs.weight("seed.weight".into(), vec![input, f0 * base], input);
                specs.bias("seed.bias".into(), f0 * base);
                for (i, &k) in self.kernel_sizes.iter().enumerate() {
                    let (cin, cout) = (self.filters[i], self.filters[i + 1]);
                    specs.weight(format!("up{i}.weight"), vec![cin, cout, k], cin * k);
                    specs.bias(format!("up{i}.bias"), cout);
                }
                let last = *self.filters.last().expect("non-empty");
                specs.weight("out.weight".into(), vec![self.out_channels, last, 1], last);
                specs.bias("out.bias".into(), self.out_channels);
                Ok(GenPlan { specs: specs.0, base_length: base, full_length: full })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    arch: GeneratorArch,
    pub params: ParamSet,
    base_length: usize,
    full_length: usize,
}

impl Generator {
    pub fn new(arch: GeneratorArch, rng: &mut Rng) -> Result<Self> {
        let plan = arch.plan()?;
        let params = init_params(&plan.specs, rng);
        Ok(Self { arch, params, base_length: plan.base_length, full_length: plan.full_length })
    }

    pub fn from_params(arch: GeneratorArch, params: ParamSet) -> Result<Self> {
        let plan = arch.plan()?;
        check_params(&plan.specs, &params)?;
        Ok(Self { arch, params, base_length: plan.base_length, full_length: plan.full_length })
    }

    pub fn arch(&self) -> &GeneratorArch {
        &self.arch
    }

    /// Map `z: [N × z_dim]` and labels to samples `[N × C × L]` in (0, 1).
    pub fn forward(&self, tape: &mut Tape, p: &[Var], z: Var, labels: &[usize]) -> Result<Var> {
        check_bound(&self.params, p)?;
        let a = &self.arch;
        let n = labels.len();
        if tape.shape(z) != [n, a.z_dim] {
            return Err(Error::Dimension(format!("latent {:?} does not match [{n}, {}]", tape.shape(z), a.z_dim)));
        }
        let oh = tape.constant(one_hot(labels, a.num_classes)?);
        let mut h = tape.concat(&[z, oh], 1)?;
        let mut cur = Cursor::new(p);
        let out = match a.variant {
            Variant::Dense => {
                for _ in &a.hidden {
                    h = cur.linear(tape, h)?;
                    h = tape.leaky_relu(h)?;
                }
                let y = cur.linear(tape, h)?;
                tape.reshape(y, &[n, a.out_channels, a.out_length])?
            }
            Variant::Conv => {
                h = cur.linear(tape, h)?;
                h = tape.leaky_relu(h)?;
                h = tape.reshape(h, &[n, a.filters[0], self.base_length])?;
                for &k in &a.kernel_sizes {
                    let (w, b) = (cur.next(), cur.next());
                    let out_pad = k % 2;
                    h = tape.conv_transpose1d(h, w, Some(b), 2, (k - 1) / 2, out_pad)?;
                    h = tape.leaky_relu(h)?;
                }
                let (w, b) = (cur.next(), cur.next());
                let y = tape.conv1d(h, w, Some(b), 1, 0)?;
                if self.full_length == a.out_length {
                    y
                } else {
                    tape.narrow(y, 2, (self.full_length - a.out_length) / 2, a.out_length)?
                }
            }
        };
        tape.sigmoid(out)
    }

    /// Forward on frozen parameters, returning plain values.
    pub fn generate(&self, z: &Tensor, labels: &[usize]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let zv = tape.constant(z.clone());
        let out = self.forward(&mut tape, &p, zv, labels)?;
        Ok(tape.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn dense_parameter_count_matches_hand_count() {
        let g = Generator::new(GeneratorArch::dense(4, 2, vec![8], 1, 4), &mut rng::seeded(0)).unwrap();
        assert_eq!(g.params.count(), (4 + 2) * 8 + 8 + 8 * 4 + 4);
        assert_eq!(g.params.count(), 92);
    }

    #[test]
    fn dense_outputs_in_unit_interval() {
        let mut r = rng::seeded(1);
        let g = Generator::new(GeneratorArch::dense(3, 2, vec![64], 1, 8), &mut r).unwrap();
        let z = Tensor::new(vec![5, 3], rng::normal_vec(&mut r, 15)).unwrap();
        let x = g.generate(&z, &[0, 1, 0, 1, 1]).unwrap();
        assert_eq!(x.shape(), [5, 1, 8]);
        assert!(x.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn table_four_architecture_shape() {
        let mut r = rng::seeded(2);
        let arch = GeneratorArch::conv(32, 2, vec![512, 256, 128, 128, 64, 64], vec![7, 5, 5, 3, 3], 1, 500);
        let g = Generator::new(arch, &mut r).unwrap();
        let z = Tensor::new(vec![2, 32], rng::normal_vec(&mut r, 64)).unwrap();
        let x = g.generate(&z, &[0, 1]).unwrap();
        assert_eq!(x.shape(), [2, 1, 500]);
    }

    #[test]
    fn conv_lengths_and_errors() {
        let mut r = rng::seeded(3);
        for (kernels, len) in [(vec![4, 3], 13), (vec![5], 64), (vec![3, 3, 3], 17)] {
            let filters = vec![4; kernels.len() + 1];
            let g = Generator::new(GeneratorArch::conv(2, 3, filters, kernels, 2, len), &mut r).unwrap();
            let z = Tensor::new(vec![1, 2], vec![0.3, -0.1]).unwrap();
            assert_eq!(g.generate(&z, &[2]).unwrap().shape(), [1, 2, len]);
        }
        let mut arch = GeneratorArch::conv(2, 2, vec![4, 4], vec![3], 1, 20);
        arch.base_length = Some(8);
        let err = Generator::new(arch, &mut r).unwrap_err();
        assert!(matches!(err, Error::Architecture(ref m) if m.contains("unreachable")), "{err}");
        let bad = GeneratorArch::conv(2, 2, vec![4, 4], vec![3, 3], 1, 20);
        assert!(matches!(Generator::new(bad, &mut r), Err(Error::Architecture(_))));
    }
}
