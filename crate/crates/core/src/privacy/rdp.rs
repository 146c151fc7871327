use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

/// Rényi orders: integers 2..=64 plus 128 and 256.
pub const DEFAULT_ORDERS: [u32; 65] = {
    let mut o = [0u32; 65];
    let mut i = 0;
    while i < 63 {
        o[i] = i as u32 + 2;
        i += 1;
    }
    o[63] = 128;
    o[64] = 256;
    o
};

/// RDP of the Gaussian mechanism with noise multiplier `σ` at order `α`.
pub fn rdp_gaussian(sigma: f64, alpha: f64) -> f64 {
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    alpha / (2.0 * sigma * sigma)
}

fn ln_binom(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| (((n - k + i) as f64) / i as f64).ln()).sum()
}

/// `ln(eᶜ − 1)` for `c > 0`.
fn ln_expm1(c: f64) -> f64 {
    if c > 30.0 {
        c + (-(-c).exp()).ln_1p()
    } else {
        c.exp_m1().ln()
    }
}

/// RDP at integer order `α` of the Gaussian mechanism applied to a Poisson
/// subsample with rate `q`:
///
/// `(1/(α−1)) · ln Σⱼ C(α,j) (1−q)^{α−j} qʲ exp(j(j−1)/(2σ²))`.
///
/// Since the binomial weights sum to one, the sum equals
/// `1 + Σ_{j≥2} C(α,j)(1−q)^{α−j}qʲ(exp(j(j−1)/(2σ²)) − 1)`; the tail is
/// accumulated in log space and finished with `ln_1p`, which keeps full
/// relative precision for small `q`.
pub fn rdp_subsampled_gaussian(q: f64, sigma: f64, alpha: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return arg_err(format!("sampling rate must lie in (0, 1], got {q}"));
    }
    if alpha.fract() != 0.0 || alpha < 2.0 || !alpha.is_finite() {
        return arg_err(format!("only integer orders α ≥ 2 are supported, got {alpha}"));
    }
    if !(sigma >= 0.0) {
        return arg_err(format!("noise multiplier must be non-negative, got {sigma}"));
    }
    if q == 1.0 {
        return Ok(rdp_gaussian(sigma, alpha));
    }
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let a = alpha as u64;
    let (lq, l1q) = (q.ln(), (-q).ln_1p());
    let terms: Vec<f64> = (2..=a)
        .map(|j| {
            let c = (j * (j - 1)) as f64 / (2.0 * sigma * sigma);
            ln_binom(a, j) + (a - j) as f64 * l1q + j as f64 * lq + ln_expm1(c)
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_tail = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    let ln_sum = if ln_tail < 30.0 { ln_tail.exp().ln_1p() } else { ln_tail + (-ln_tail).exp().ln_1p() };
    Ok(ln_sum / (alpha - 1.0))
}

/// Composition of subsampled Gaussian mechanisms over a fixed order grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdpAccountant {
    orders: Vec<u32>,
    rdp: Vec<f64>,
    steps: u64,
    #[serde(skip)]
    cache: Option<(f64, f64, Vec<f64>)>,
}

impl Default for RdpAccountant {
    fn default() -> Self {
        Self::new()
    }
}

impl RdpAccountant {
    pub fn new() -> Self {
        Self::with_orders(DEFAULT_ORDERS.to_vec()).expect("default grid is valid")
    }

    pub fn with_orders(orders: Vec<u32>) -> Result<Self> {
        if orders.is_empty() || orders.iter().any(|&a| a < 2) {
            return arg_err("orders must be a non-empty list of integers ≥ 2");
        }
        let n = orders.len();
        Ok(Self { orders, rdp: vec![0.0; n], steps: 0, cache: None })
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn rdp(&self) -> &[f64] {
        &self.rdp
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn per_step(&mut self, q: f64, sigma: f64) -> Result<Vec<f64>> {
        if let Some((cq, cs, v)) = &self.cache {
            if *cq == q && *cs == sigma {
                return Ok(v.clone());
            }
        }
        let v = self
            .orders
            .iter()
            .map(|&a| rdp_subsampled_gaussian(q, sigma, a as f64))
            .collect::<Result<Vec<f64>>>()?;
        self.cache = Some((q, sigma, v.clone()));
        Ok(v)
    }

    /// Compose `count` steps at rate `q` and noise multiplier `σ`.
    pub fn step_many(&mut self, q: f64, sigma: f64, count: u64) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let per = self.per_step(q, sigma)?;
        for (acc, r) in self.rdp.iter_mut().zip(per) {
            *acc += r * count as f64;
        }
        self.steps += count;
        Ok(())
    }

    pub fn step(&mut self, q: f64, sigma: f64) -> Result<()> {
        self.step_many(q, sigma, 1)
    }

    /// `(ε, order)` minimizing `rdp(α) + ln(1/δ)/(α−1)`; zero steps give ε = 0.
    pub fn epsilon_with_order(&self, delta: f64) -> Result<(f64, u32)> {
        if !(delta > 0.0 && delta < 1.0) {
            return arg_err(format!("delta must lie in (0, 1), got {delta}"));
        }
        if self.steps == 0 {
            return Ok((0.0, self.orders[0]));
        }
        let ln_inv = -delta.ln();
        let mut best = (f64::INFINITY, self.orders[0]);
        for (&a, &r) in self.orders.iter().zip(&self.rdp) {
            let eps = r + ln_inv / (a as f64 - 1.0);
            if eps < best.0 {
                best = (eps, a);
            }
        }
        Ok(best)
    }

    pub fn epsilon(&self, delta: f64) -> Result<f64> {
        Ok(self.epsilon_with_order(delta)?.0)
    }
}

fn epsilon_for(sigma: f64, q: f64, steps: u64, delta: f64) -> Result<f64> {
    let mut acct = RdpAccountant::new();
    acct.step_many(q, sigma, steps)?;
    acct.epsilon(delta)
}

/// Smallest noise multiplier in `[1e-2, 1e3]` whose ε after `steps` steps
/// lies within `1e-3` below `target`, found by bisection.
pub fn calibrate_sigma(target: f64, delta: f64, q: f64, steps: u64) -> Result<f64> {
    if !(target > 0.0) || steps == 0 {
        return arg_err("calibration needs a positive target ε and at least one step");
    }
    let (mut lo, mut hi) = (1e-2, 1e3);
    let eps_hi = epsilon_for(hi, q, steps, delta)?;
    if eps_hi > target {
        return Err(Error::Range(format!(
            "target ε = {target} unreachable: σ = 1e3 already gives ε = {eps_hi:.6}"
        )));
    }
    if epsilon_for(lo, q, steps, delta)? <= target {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if epsilon_for(mid, q, steps, delta)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if target - epsilon_for(hi, q, steps, delta)? <= 1e-3 {
            break;
        }
    }
    Ok(hi)
}
