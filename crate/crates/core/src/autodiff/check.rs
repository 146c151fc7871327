//! Central finite-difference gradient checking for tape programs.

use std::rc::Rc;

use rand::Rng as _;

use super::{gradient_penalty, Activation, Reduction, Tape, Tensor, Var, LEAKY_SLOPE};
use crate::error::Result;
use crate::rng::{self, Rng};

pub const STEP: f64 = 1e-5;

pub fn rand_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), rng::normal_vec(rng, n)).unwrap()
}

/// Reduce `out` to a scalar with fixed random weights so every output
/// coordinate contributes.
fn project(tape: &mut Tape, out: Var, weights: &Rc<Vec<f64>>) -> Result<Var> {
    if tape.value(out).numel() == 1 {
        return Ok(out);
    }
    let m = tape.mul_const(out, weights.clone())?;
    Ok(tape.sum(m))
}

fn eval<F>(inputs: &[Tensor], build: &F, weights: &Rc<Vec<f64>>) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
    let out = build(&mut tape, &vars)?;
    let loss = project(&mut tape, out, weights)?;
    Ok(tape.scalar_value(loss))
}

/// Largest norm-wise relative error between analytic and central-difference
/// gradients over all inputs of `build`.
pub fn max_rel_err<F>(inputs: Vec<Tensor>, build: F, seed: u64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
    let out = build(&mut tape, &vars)?;
    let mut r = rng::seeded(seed);
    let weights = Rc::new(rng::normal_vec(&mut r, tape.value(out).numel()));
    let loss = project(&mut tape, out, &weights)?;
    let grads = tape.backward(loss)?;

    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; inputs[i].numel()]);
        let mut numeric = vec![0.0; inputs[i].numel()];
        for j in 0..inputs[i].numel() {
            let mut plus = inputs.clone();
            plus[i].data_mut()[j] += STEP;
            let mut minus = inputs.clone();
            minus[i].data_mut()[j] -= STEP;
            numeric[j] = (eval(&plus, &build, &weights)? - eval(&minus, &build, &weights)?) / (2.0 * STEP);
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(if scale < 1e-12 { diff } else { diff / scale });
    }
    Ok(worst)
}

/// Small conv critic whose input gradient goes through the second-order path.
pub fn tiny_conv_critic(t: &mut Tape, x: Var, w1: Var, b1: Var, w2: Var) -> Result<Var> {
    let n = t.shape(x)[0];
    let l = t.shape(x)[2];
    let label = t.constant(Tensor::full(&[n, 1, l], 1.0));
    let xin = t.concat(&[x, label], 1)?;
    let h = t.conv1d(xin, w1, Some(b1), 2, 1)?;
    let h = t.leaky_relu(h)?;
    let width = t.value(h).numel() / n;
    let flat = t.reshape(h, &[n, width])?;
    let out = t.matmul(flat, w2)?;
    t.reshape(out, &[n])
}

type Case = (String, Vec<Tensor>, Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>);

/// Every tape primitive on shapes drawn from `seed`, as `(name, error)`.
pub fn primitive_suite(seed: u64) -> Result<Vec<(String, f64)>> {
    let mut r = rng::seeded(seed);
    let mut cases: Vec<Case> = Vec::new();
    let (m, k, n) = (r.random_range(1..5), r.random_range(1..5), r.random_range(1..5));
    cases.push(("matmul".into(), vec![rand_tensor(&mut r, &[m, k]), rand_tensor(&mut r, &[k, n])], Box::new(|t, v| t.matmul(v[0], v[1]))));

    let (b, cin, cout) = (r.random_range(1..3), r.random_range(1..4), r.random_range(1..4));
    let (kw, stride, pad) = (r.random_range(1..6), r.random_range(1..4), r.random_range(0..3));
    let l = kw + r.random_range(0..10);
    cases.push((
        format!("conv1d k{kw} s{stride} p{pad}"),
        vec![rand_tensor(&mut r, &[b, cin, l]), rand_tensor(&mut r, &[cout, cin, kw]), rand_tensor(&mut r, &[cout])],
        Box::new(move |t, v| t.conv1d(v[0], v[1], Some(v[2]), stride, pad)),
    ));
    let out_pad = r.random_range(0..stride);
    let lt = r.random_range(2..7);
    let kt = (2 * pad + 1).max(r.random_range(1..6));
    cases.push((
        format!("conv_transpose1d k{kt} s{stride} p{pad} o{out_pad}"),
        vec![rand_tensor(&mut r, &[b, cin, lt]), rand_tensor(&mut r, &[cin, cout, kt]), rand_tensor(&mut r, &[cout])],
        Box::new(move |t, v| t.conv_transpose1d(v[0], v[1], Some(v[2]), stride, pad, out_pad)),
    ));
    let (rows, cols) = (r.random_range(2..5), r.random_range(2..6));
    let pair = |r: &mut Rng| vec![rand_tensor(r, &[rows, cols]), rand_tensor(r, &[rows, cols])];
    let c = Rc::new(rng::normal_vec(&mut r, rows * cols));
    let elementwise: Vec<(&str, Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>)> = vec![
        ("add", Box::new(|t, v| t.add(v[0], v[1]))),
        ("sub", Box::new(|t, v| t.sub(v[0], v[1]))),
        ("mul", Box::new(|t, v| t.mul(v[0], v[1]))),
        ("scale", Box::new(|t, v| Ok(t.scale(v[0], -1.7)))),
        ("add_scalar", Box::new(|t, v| Ok(t.add_scalar(v[1], 0.3)))),
        ("mul_const", Box::new(move |t, v| t.mul_const(v[0], c.clone()))),
        ("square", Box::new(|t, v| Ok(t.square(v[0])))),
        ("sum", Box::new(|t, v| Ok(t.sum(v[0])))),
        ("mean", Box::new(|t, v| Ok(t.mean(v[1])))),
        ("transpose", Box::new(|t, v| t.transpose(v[0]))),
        ("reshape", Box::new(move |t, v| t.reshape(v[0], &[rows * cols]))),
        ("row_norms", Box::new(|t, v| t.row_norms(v[0]))),
        ("mean_last_axis", Box::new(|t, v| t.mean_last_axis(v[0]))),
        ("concat", Box::new(|t, v| t.concat(&[v[1], v[0], v[1]], 1))),
        ("narrow", Box::new(|t, v| t.narrow(v[0], 1, 1, 1))),
        ("pad", Box::new(|t, v| t.pad(v[0], 1, 2, 1))),
        ("fan_out", Box::new(|t, v| {
            let p = t.mul(v[0], v[0])?;
            t.add(p, v[0])
        })),
    ];
    for (name, f) in elementwise {
        cases.push((name.into(), pair(&mut r), f));
    }
    for kind in [Activation::Relu, Activation::LeakyRelu(LEAKY_SLOPE), Activation::Sigmoid, Activation::Tanh, Activation::SoftmaxRows] {
        cases.push((format!("{kind:?}"), vec![rand_tensor(&mut r, &[rows, cols])], Box::new(move |t, v| t.activation(kind, v[0]))));
    }
    cases.push(("add_bias".into(), vec![rand_tensor(&mut r, &[rows, cols]), rand_tensor(&mut r, &[cols])], Box::new(|t, v| t.add_bias(v[0], v[1]))));
    let lp = r.random_range(3..10);
    cases.push(("max_pool1d".into(), vec![rand_tensor(&mut r, &[b, cin, lp])], Box::new(|t, v| t.max_pool1d(v[0], 3, 1, 1))));
    let labels: Vec<usize> = (0..rows).map(|_| r.random_range(0..cols)).collect();
    for red in [Reduction::Sum, Reduction::Mean] {
        let labels = labels.clone();
        cases.push((format!("cross_entropy {red:?}"), vec![rand_tensor(&mut r, &[rows, cols])], Box::new(move |t, v| t.cross_entropy(v[0], &labels, red))));
    }
    let lg = 2 * r.random_range(2..5);
    let real = rand_tensor(&mut r, &[3, 2, lg]);
    let fake = rand_tensor(&mut r, &[3, 2, lg]);
    let width = 3 * ((lg + 2 - 3) / 2 + 1);
    cases.push((
        "gradient_penalty".into(),
        vec![rand_tensor(&mut r, &[3, 3, 3]), rand_tensor(&mut r, &[3]), rand_tensor(&mut r, &[width, 1])],
        Box::new(move |t, v| {
            let (w1, b1, w2) = (v[0], v[1], v[2]);
            let mut eps_rng = rng::seeded(99);
            gradient_penalty(t, |t, x| tiny_conv_critic(t, x, w1, b1, w2), &real, &fake, 10.0, &mut eps_rng)
        }),
    ));

    let mut out = Vec::with_capacity(cases.len());
    for (i, (name, inputs, f)) in cases.into_iter().enumerate() {
        out.push((name, max_rel_err(inputs, f, seed.wrapping_add(i as u64))?));
    }
    Ok(out)
}
