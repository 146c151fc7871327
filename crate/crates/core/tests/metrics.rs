use dpts_core::autodiff::Tensor;
use dpts_core::metrics::{conditional_affinities, distance_stats, joint_affinities, tsne, TsneParams};
use dpts_core::rng;

fn gaussian_cloud(n: usize, d: usize, seed: u64) -> Tensor {
    let mut r = rng::seeded(seed);
    Tensor::new(vec![n, d], rng::normal_vec(&mut r, n * d)).unwrap()
}

#[test]
fn every_conditional_row_hits_the_target_entropy() {
    let x = gaussian_cloud(60, 5, 3);
    for perplexity in [2.0, 5.0, 15.0] {
        let (p, _) = conditional_affinities(&x, perplexity).unwrap();
        for row in p.chunks(60) {
            let h: f64 = row.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
            assert!((h - perplexity.ln()).abs() < 1e-5, "entropy {h} vs {}", perplexity.ln());
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn joint_affinities_are_a_symmetric_distribution() {
    let x = gaussian_cloud(40, 3, 9);
    let p = joint_affinities(&x, 10.0).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for i in 0..40 {
        assert_eq!(p[i * 40 + i], 0.0);
        for j in 0..40 {
            assert!(p[i * 40 + j] >= 0.0);
            assert_eq!(p[i * 40 + j], p[j * 40 + i]);
        }
    }
}

fn silhouette(y: &Tensor, labels: &[usize]) -> f64 {
    let n = labels.len();
    let dist = |i: usize, j: usize| {
        y.row(i).iter().zip(y.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let mut total = 0.0;
    for i in 0..n {
        let (mut same, mut ns, mut other, mut no) = (0.0, 0, 0.0, 0);
        for j in 0..n {
            if i == j {
                continue;
            }
            if labels[j] == labels[i] {
                same += dist(i, j);
                ns += 1;
            } else {
                other += dist(i, j);
                no += 1;
            }
        }
        let a = same / ns as f64;
        let b = other / no as f64;
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

#[test]
fn separated_clusters_embed_with_high_silhouette() {
    let (n, d) = (100, 10);
    let mut r = rng::seeded(21);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        labels.push(c);
        for k in 0..d {
            let centre = if c == 1 && k == 0 { 20.0 } else { 0.0 };
            data.push(centre + rng::normal(&mut r));
        }
    }
    let x = Tensor::new(vec![n, d], data).unwrap();
    let y = tsne(&x, &TsneParams { seed: 4, ..TsneParams::default() }).unwrap();
    assert_eq!(y.shape(), &[n, 2]);
    let s = silhouette(&y, &labels);
    assert!(s >= 0.9, "silhouette {s}");
}

#[test]
fn tsne_is_deterministic_for_a_seed() {
    let x = gaussian_cloud(30, 4, 1);
    let params = TsneParams { perplexity: 5.0, iterations: 300, seed: 8, ..TsneParams::default() };
    assert_eq!(tsne(&x, &params).unwrap(), tsne(&x, &params).unwrap());
}

#[test]
fn distance_stats_match_brute_force() {
    let a = gaussian_cloud(50, 7, 5);
    let b = gaussian_cloud(50, 7, 6);
    let brute = |pairs: Vec<(Vec<f64>, Vec<f64>)>| {
        let ds: Vec<f64> = pairs
            .iter()
            .map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
            .collect();
        let min = ds.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ds.iter().cloned().fold(0.0, f64::max);
        (min, ds.iter().sum::<f64>() / ds.len() as f64, max, ds.len())
    };
    let mut within = Vec::new();
    let mut cross = Vec::new();
    for i in 0..50 {
        for j in 0..50 {
            if i < j {
                within.push((a.row(i).to_vec(), a.row(j).to_vec()));
            }
            cross.push((a.row(i).to_vec(), b.row(j).to_vec()));
        }
    }
    for (got, want) in [(distance_stats(&a, None).unwrap(), brute(within)), (distance_stats(&a, Some(&b)).unwrap(), brute(cross))] {
        assert!((got.min - want.0).abs() < 1e-12);
        assert!((got.mean - want.1).abs() < 1e-12);
        assert!((got.max - want.2).abs() < 1e-12);
        assert_eq!(got.pairs, want.3);
    }
}
