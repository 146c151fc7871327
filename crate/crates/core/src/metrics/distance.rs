use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{dim_err, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceScope {
    WithinPrivate,
    WithinPublic,
    Cross,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub pairs: usize,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pairwise L2 statistics over unordered pairs within `a` (self excluded), or
/// over all cross pairs when `b` is given. Rows are flattened samples.
pub fn distance_stats(a: &Tensor, b: Option<&Tensor>) -> Result<DistanceStats> {
    let rows = |t: &Tensor| t.numel() / t.shape()[0];
    let d = rows(a);
    let na = a.shape()[0];
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut push = |v: f64| {
        min = min.min(v);
        max = max.max(v);
        sum += v;
        count += 1;
    };
    match b {
        Some(b) => {
            if rows(b) != d {
                return dim_err(format!("sample dimensions {d} and {} differ", rows(b)));
            }
            for i in 0..na {
                for j in 0..b.shape()[0] {
                    push(dist(a.row(i), b.row(j)));
                }
            }
        }
        None => {
            if na < 2 {
                return dim_err("within-set distances need at least 2 samples");
            }
            for i in 0..na {
                for j in i + 1..na {
                    push(dist(a.row(i), a.row(j)));
                }
            }
        }
    }
    Ok(DistanceStats { min, mean: sum / count as f64, max, pairs: count })
}
