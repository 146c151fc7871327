use crate::autodiff::ParamSet;
use crate::error::{arg_err, dim_err, Result};
use crate::rng::{self, Rng};

fn l2(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |a, v| a + v * v).sqrt()
}

/// Scale `g` to L2 norm at most `c`; returns the pre-clip norm. Vectors
/// already within the bound are left untouched.
pub fn clip_in_place(g: &mut [f64], c: f64) -> f64 {
    let norm = l2(g);
    if norm > c {
        let f = c / norm;
        for v in g.iter_mut() {
            *v *= f;
        }
    }
    norm
}

/// Clip each per-sample gradient to norm `c`, returning the clipped list and
/// the pre-clip norms.
pub fn clip_per_sample(mut grads: Vec<Vec<f64>>, c: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let norms = grads.iter_mut().map(|g| clip_in_place(g, c)).collect();
    (grads, norms)
}

/// `(Σ g_i + N(0, σ²C²·I)) / batch`. Sums run in list order; no noise is
/// drawn when `σ = 0`.
pub fn gaussian_sum(clipped: &[Vec<f64>], sigma: f64, c: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let Some(first) = clipped.first() else {
        return arg_err("gaussian_sum of an empty batch");
    };
    let d = first.len();
    let mut total = vec![0.0; d];
    for g in clipped {
        if g.len() != d {
            return dim_err(format!("per-sample gradients of lengths {d} and {}", g.len()));
        }
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    if sigma > 0.0 {
        let std = sigma * c;
        for t in total.iter_mut() {
            *t += std * rng::normal(rng);
        }
    }
    let n = clipped.len() as f64;
    for t in total.iter_mut() {
        *t /= n;
    }
    Ok(total)
}

/// Clamp every parameter into `[-c, c]`.
pub fn weight_clip(params: &mut ParamSet, c: f64) -> Result<()> {
    if !(c > 0.0) {
        return arg_err(format!("weight clip must be positive, got {c}"));
    }
    for v in params.iter_values_mut() {
        for w in v.iter_mut() {
            *w = w.clamp(-c, c);
        }
    }
    Ok(())
}

/// Sanitize the gradient arriving at the generator output.
///
/// `upstream` holds `n` per-sample rows. Each row is clipped to norm `c_g`,
/// receives its own `N(0, σ²c_g²·I)` noise draw, and is divided by `n`.
/// Returns the sanitized rows and the pre-clip norms.
pub fn sanitize_generator_gradient(
    upstream: &[f64],
    n: usize,
    sigma: f64,
    c_g: f64,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || upstream.len() % n != 0 || upstream.is_empty() {
        return dim_err(format!("{} upstream values cannot split into {n} samples", upstream.len()));
    }
    let d = upstream.len() / n;
    let mut out = upstream.to_vec();
    let mut norms = Vec::with_capacity(n);
    for row in out.chunks_mut(d) {
        norms.push(clip_in_place(row, c_g));
        if sigma > 0.0 {
            let std = sigma * c_g;
            for v in row.iter_mut() {
                *v += std * rng::normal(rng);
            }
        }
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    Ok((out, norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn clip_hand_cases() {
        let (c, n) = clip_per_sample(vec![vec![3.0, 4.0], vec![0.1, 0.2]], 1.0);
        assert_eq!(n[0], 5.0);
        assert!((c[0][0] - 0.6).abs() < 1e-15 && (c[0][1] - 0.8).abs() < 1e-15);
        assert_eq!(c[1], [0.1, 0.2]);
    }

    #[test]
    fn clipped_norms_within_bound() {
        let mut r = rng::seeded(1);
        let grads: Vec<Vec<f64>> = (0..50).map(|i| rng::normal_vec(&mut r, 7).iter().map(|v| v * i as f64).collect()).collect();
        let (clipped, _) = clip_per_sample(grads, 0.7);
        assert!(clipped.iter().all(|g| l2(g) <= 0.7 + 1e-12));
    }

    #[test]
    fn noise_free_sum_is_the_mean() {
        let g = vec![vec![1.0, 2.0], vec![3.0, -2.0]];
        assert_eq!(gaussian_sum(&g, 0.0, 1.0, &mut rng::seeded(0)).unwrap(), [2.0, 0.0]);
        assert!(gaussian_sum(&[], 1.0, 1.0, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn unit_noise_has_unit_std() {
        let mut r = rng::seeded(2);
        let draws = 100_000;
        let mut sq = 0.0;
        for _ in 0..draws {
            let v = gaussian_sum(&[vec![0.0]], 1.0, 1.0, &mut r).unwrap()[0];
            sq += v * v;
        }
        let std = (sq / draws as f64).sqrt();
        assert!((std - 1.0).abs() < 0.01, "{std}");
        let a = gaussian_sum(&[vec![0.0; 3]], 1.0, 1.0, &mut rng::seeded(3)).unwrap();
        let b = gaussian_sum(&[vec![0.0; 3]], 1.0, 1.0, &mut rng::seeded(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weight_clip_is_a_projection() {
        let mut p = ParamSet::new();
        p.push("w", Tensor::from_vec(vec![-2.0, 0.5]));
        weight_clip(&mut p, 1.0).unwrap();
        assert_eq!(p.values(0), [-1.0, 0.5]);
        let once = p.clone();
        weight_clip(&mut p, 1.0).unwrap();
        assert_eq!(p, once);
    }

    #[test]
    fn sanitization_rules() {
        let up = vec![0.3, 0.4, 6.0, 8.0];
        let (s, norms) = sanitize_generator_gradient(&up, 2, 0.0, 1.0, &mut rng::seeded(0)).unwrap();
        assert_eq!(norms, [0.5, 10.0]);
        assert_eq!(&s[..2], [0.15, 0.2]);
        assert!((l2(&s[2..]) * 2.0 - 1.0).abs() < 1e-15);
    }
}
