//! Central finite-difference checks for every tape primitive, plus the
//! hand-computed examples for the individual operations.

use std::rc::Rc;

use super::check::{max_rel_err, primitive_suite, rand_tensor, tiny_conv_critic as conv_critic};
use super::*;
use crate::error::Result;
use crate::rng;

#[test]
fn randomized_primitive_suite() {
    for seed in 0..4 {
        for (name, err) in primitive_suite(seed).unwrap() {
            assert!(err < 1e-4, "seed {seed} {name}: {err}");
        }
    }
}

#[test]
fn matmul_gradient_tight() {
    let mut r = rng::seeded(11);
    let err = max_rel_err(vec![rand_tensor(&mut r, &[3, 4]), rand_tensor(&mut r, &[4, 2])], |t, v| t.matmul(v[0], v[1]), 1).unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn conv1d_gradient_tight() {
    let mut r = rng::seeded(12);
    let inputs = vec![rand_tensor(&mut r, &[2, 3, 16]), rand_tensor(&mut r, &[4, 3, 5]), rand_tensor(&mut r, &[4])];
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
    let out = tape.conv1d(vars[0], vars[1], Some(vars[2]), 2, 2).unwrap();
    assert_eq!(tape.shape(out), [2, 4, 8]);
    let err = max_rel_err(inputs, |t, v| t.conv1d(v[0], v[1], Some(v[2]), 2, 2), 2).unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn conv_transpose1d_gradient() {
    let mut r = rng::seeded(13);
    for (stride, pad, out_pad) in [(1, 0, 0), (2, 1, 1), (2, 2, 0), (3, 1, 2)] {
        let inputs = vec![rand_tensor(&mut r, &[2, 3, 5]), rand_tensor(&mut r, &[3, 2, 4]), rand_tensor(&mut r, &[2])];
        let err = max_rel_err(inputs, |t, v| t.conv_transpose1d(v[0], v[1], Some(v[2]), stride, pad, out_pad), 3).unwrap();
        assert!(err < 1e-6, "stride {stride} pad {pad}: {err}");
    }
}

#[test]
fn elementwise_gradients() {
    let mut r = rng::seeded(14);
    let a = rand_tensor(&mut r, &[3, 4]);
    let b = rand_tensor(&mut r, &[3, 4]);
    let c = Rc::new(rng::normal_vec(&mut r, 12));
    let cases: Vec<(&str, Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>)> = vec![
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
        ("reshape", Box::new(|t, v| t.reshape(v[0], &[2, 6]))),
        ("row_norms", Box::new(|t, v| t.row_norms(v[0]))),
        ("mean_last_axis", Box::new(|t, v| t.mean_last_axis(v[0]))),
        ("concat0", Box::new(|t, v| t.concat(&[v[0], v[1]], 0))),
        ("concat1", Box::new(|t, v| t.concat(&[v[1], v[0], v[1]], 1))),
        ("narrow", Box::new(|t, v| t.narrow(v[0], 1, 1, 2))),
        ("pad", Box::new(|t, v| t.pad(v[0], 1, 2, 1))),
        ("fan_out", Box::new(|t, v| {
            let p = t.mul(v[0], v[0])?;
            t.add(p, v[0])
        })),
        ("expand", Box::new(|t, v| {
            let s = t.sum(v[0]);
            t.expand_scalar(s, &[2, 2])
        })),
    ];
    for (name, f) in cases {
        let err = max_rel_err(vec![a.clone(), b.clone()], f, 5).unwrap();
        assert!(err < 1e-4, "{name}: {err}");
    }
}

#[test]
fn bias_and_pool_gradients() {
    let mut r = rng::seeded(15);
    let err = max_rel_err(vec![rand_tensor(&mut r, &[4, 3]), rand_tensor(&mut r, &[3])], |t, v| t.add_bias(v[0], v[1]), 6).unwrap();
    assert!(err < 1e-4, "{err}");
    let err = max_rel_err(vec![rand_tensor(&mut r, &[2, 3, 7])], |t, v| t.max_pool1d(v[0], 3, 1, 1), 7).unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn activation_gradients() {
    let mut r = rng::seeded(16);
    for kind in [
        Activation::Relu,
        Activation::LeakyRelu(LEAKY_SLOPE),
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::SoftmaxRows,
    ] {
        let err = max_rel_err(vec![rand_tensor(&mut r, &[3, 5])], |t, v| t.activation(kind, v[0]), 8).unwrap();
        assert!(err < 1e-4, "{kind:?}: {err}");
    }
}

#[test]
fn cross_entropy_gradient() {
    let mut r = rng::seeded(17);
    for red in [Reduction::Sum, Reduction::Mean] {
        let err = max_rel_err(vec![rand_tensor(&mut r, &[4, 3])], |t, v| t.cross_entropy(v[0], &[0, 2, 1, 2], red), 9).unwrap();
        assert!(err < 1e-4, "{err}");
    }
}

#[test]
fn gradient_penalty_parameter_gradient() {
    let mut r = rng::seeded(18);
    let real = rand_tensor(&mut r, &[3, 2, 6]);
    let fake = rand_tensor(&mut r, &[3, 2, 6]);
    let params = vec![rand_tensor(&mut r, &[3, 3, 3]), rand_tensor(&mut r, &[3]), rand_tensor(&mut r, &[9, 1])];
    let err = max_rel_err(
        params,
        |t, v| {
            let (w1, b1, w2) = (v[0], v[1], v[2]);
            let mut eps_rng = rng::seeded(99);
            gradient_penalty(t, |t, x| conv_critic(t, x, w1, b1, w2), &real, &fake, 10.0, &mut eps_rng)
        },
        10,
    )
    .unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn grad_graph_matches_numeric_input_gradient() {
    let mut r = rng::seeded(19);
    let x = rand_tensor(&mut r, &[2, 2, 6]);
    let w1 = rand_tensor(&mut r, &[3, 3, 3]);
    let b1 = rand_tensor(&mut r, &[3]);
    let w2 = rand_tensor(&mut r, &[9, 1]);
    let mut tape = Tape::new();
    let xv = tape.variable(x.clone());
    let (a, b, c) = (tape.constant(w1.clone()), tape.constant(b1.clone()), tape.constant(w2.clone()));
    let out = conv_critic(&mut tape, xv, a, b, c).unwrap();
    let total = tape.sum(out);
    let graph = tape.grad_graph(total, xv).unwrap();
    let numeric = tape.backward(total).unwrap();
    let direct = numeric.get(xv).unwrap();
    for (g, d) in tape.data(graph).iter().zip(direct) {
        assert!((g - d).abs() < 1e-12);
    }
}

#[test]
fn grad_graph_rejects_smooth_activations() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::from_vec(vec![0.1, 0.2]));
    let s = tape.sigmoid(x).unwrap();
    let total = tape.sum(s);
    assert!(matches!(tape.grad_graph(total, x), Err(crate::Error::Unsupported(_))));
}

#[test]
fn matmul_hand_cases() {
    let mut tape = Tape::new();
    let i = tape.constant(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
    let m = tape.constant(Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
    let p = tape.matmul(i, m).unwrap();
    assert_eq!(tape.data(p), [1.0, 2.0, 3.0, 4.0]);
    let a = tape.constant(Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap());
    let b = tape.constant(Tensor::from_rows(&[vec![3.0], vec![4.0]]).unwrap());
    let p = tape.matmul(a, b).unwrap();
    assert_eq!(tape.data(p), [11.0]);
    let err = tape.matmul(a, a).unwrap_err().to_string();
    assert!(err.contains("[1, 2]"), "{err}");
}

#[test]
fn conv_hand_cases() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap());
    let k = tape.constant(Tensor::new(vec![1, 1, 2], vec![1.0, 1.0]).unwrap());
    let y = tape.conv1d(x, k, None, 1, 0).unwrap();
    assert_eq!(tape.data(y), [3.0, 5.0]);
    let id = tape.constant(Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap());
    let y = tape.conv1d(x, id, None, 1, 0).unwrap();
    assert_eq!(tape.data(y), [1.0, 2.0, 3.0]);
    let y = tape.conv_transpose1d(x, id, None, 1, 0, 0).unwrap();
    assert_eq!(tape.data(y), [1.0, 2.0, 3.0]);

    let ab = tape.constant(Tensor::new(vec![1, 1, 2], vec![0.7, -1.3]).unwrap());
    let y = tape.conv_transpose1d(ab, k, None, 1, 0, 0).unwrap();
    assert_eq!(tape.data(y), [0.7, 0.7 + -1.3, -1.3]);

    let long = tape.constant(Tensor::new(vec![1, 1, 4], vec![1.0; 4]).unwrap());
    assert!(matches!(tape.conv1d(x, long, None, 1, 0), Err(crate::Error::Dimension(_))));
    let one = tape.constant(Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap());
    assert!(matches!(tape.conv_transpose1d(one, id, None, 1, 1, 0), Err(crate::Error::Dimension(_))));
}

/// Dense matrix of `conv1d` with a single channel, stride 1, no padding.
fn conv_matrix(kernel: &[f64], l: usize) -> Vec<Vec<f64>> {
    let l_out = l - kernel.len() + 1;
    (0..l_out)
        .map(|t| (0..l).map(|i| if i >= t && i - t < kernel.len() { kernel[i - t] } else { 0.0 }).collect())
        .collect()
}

#[test]
fn transpose_then_conv_is_gram_operator() {
    let kernel = [0.5, -1.0, 2.0];
    let l = 6;
    let l_out = l - kernel.len() + 1;
    let a = conv_matrix(&kernel, l);
    let mut r = rng::seeded(20);
    let x = rng::normal_vec(&mut r, l_out);

    let mut tape = Tape::new();
    let xv = tape.constant(Tensor::new(vec![1, 1, l_out], x.clone()).unwrap());
    let k = tape.constant(Tensor::new(vec![1, 1, 3], kernel.to_vec()).unwrap());
    let up = tape.conv_transpose1d(xv, k, None, 1, 0, 0).unwrap();
    assert_eq!(tape.shape(up), [1, 1, l]);
    let back = tape.conv1d(up, k, None, 1, 0).unwrap();

    // A·Aᵀ·x with the dense matrix.
    let atx: Vec<f64> = (0..l).map(|i| (0..l_out).map(|t| a[t][i] * x[t]).sum()).collect();
    let gram: Vec<f64> = (0..l_out).map(|t| (0..l).map(|i| a[t][i] * atx[i]).sum()).collect();
    for (g, o) in gram.iter().zip(tape.data(back)) {
        assert!((g - o).abs() < 1e-12);
    }
}

#[test]
fn activation_hand_values() {
    let mut tape = Tape::new();
    let z = tape.constant(Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap());
    let s = tape.sigmoid(z).unwrap();
    assert_eq!(tape.data(s), [0.5, 0.5]);
    let sm = tape.activation(Activation::SoftmaxRows, z).unwrap();
    assert_eq!(tape.data(sm), [0.5, 0.5]);

    let x = tape.variable(Tensor::from_vec(vec![-1.0]));
    let y = tape.leaky_relu(x).unwrap();
    assert_eq!(tape.data(y), [-0.2]);
    let loss = tape.sum(y);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get(x).unwrap(), [0.2]);
}

#[test]
fn cross_entropy_hand_values() {
    let mut tape = Tape::new();
    let u = tape.constant(Tensor::zeros(&[3, 2]));
    let l = tape.cross_entropy(u, &[0, 1, 1], Reduction::Mean).unwrap();
    assert!((tape.scalar_value(l) - std::f64::consts::LN_2).abs() < 1e-15);

    let big = tape.constant(Tensor::from_rows(&[vec![1000.0, -1000.0]]).unwrap());
    let l = tape.cross_entropy(big, &[0], Reduction::Mean).unwrap();
    assert!(tape.scalar_value(l).abs() < 1e-12);

    let rows = [vec![0.2, -1.0, 2.5], vec![1.5, 0.3, -0.7]];
    let labels = [2, 0];
    let logits = tape.constant(Tensor::from_rows(&rows).unwrap());
    let l = tape.cross_entropy(logits, &labels, Reduction::Mean).unwrap();
    let manual: f64 = rows
        .iter()
        .zip(labels)
        .map(|(row, y)| {
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            -(row[y].exp() / z).ln()
        })
        .sum::<f64>()
        / 2.0;
    assert!((tape.scalar_value(l) - manual).abs() < 1e-10);

    assert!(matches!(tape.cross_entropy(logits, &[3, 0], Reduction::Mean), Err(crate::Error::Argument(_))));
}

#[test]
fn backward_basics() {
    let mut tape = Tape::new();
    let x = tape.variable(Tensor::new(vec![2, 3], vec![1.0; 6]).unwrap());
    let s = tape.sum(x);
    let g = tape.backward(s).unwrap();
    assert_eq!(g.get(x).unwrap(), [1.0; 6]);

    let twice = tape.add(x, x).unwrap();
    let s2 = tape.sum(twice);
    let g = tape.backward(s2).unwrap();
    assert_eq!(g.get(x).unwrap(), [2.0; 6]);

    assert!(matches!(tape.backward(twice), Err(crate::Error::Argument(_))));

    // Repeated passes over the same tape give identical results.
    let g1 = tape.backward(s2).unwrap();
    let g2 = tape.backward(s2).unwrap();
    assert_eq!(g1.get(x), g2.get(x));
}
