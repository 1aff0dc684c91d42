//! The 0-1 test for chaos, correlation method.
//!
//! For each frequency `c` the series drives the translation variables
//! `p(n) = sum_{j<=n} x_j cos(j c)` and `q(n) = sum_{j<=n} x_j sin(j c)`. The
//! mean-square displacement `M_c(n)` grows linearly when the series is chaotic
//! and stays bounded otherwise. `K_c` is the correlation of `n` with the
//! oscillation-corrected displacement `D_c(n)`, and the reported statistic is
//! the median of `K_c` over random `c`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

pub const MIN_LEN: usize = 1000;
pub const MIN_FREQUENCIES: usize = 10;
pub const DEFAULT_FREQUENCIES: usize = 100;

/// `c` is drawn from `(C_LO, C_HI)`, away from the resonances at 0 and pi.
pub const C_LO: f64 = PI / 5.0;
pub const C_HI: f64 = 4.0 * PI / 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroOneResult {
    /// Median of `K_c`.
    pub k: f64,
    /// `(c, K_c)` in draw order.
    pub per_c: Vec<(f64, f64)>,
}

impl ZeroOneResult {
    /// `c,K_c,median`; the flag marks the draw(s) that define the median.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut order: Vec<usize> = (0..self.per_c.len()).collect();
        order.sort_by(|&a, &b| self.per_c[a].1.total_cmp(&self.per_c[b].1));
        let n = order.len();
        let mut flags = vec![false; n];
        if n > 0 {
            flags[order[(n - 1) / 2]] = true;
            flags[order[n / 2]] = true;
        }
        writeln!(w, "c,K_c,median")?;
        for ((c, k), f) in self.per_c.iter().zip(flags) {
            writeln!(w, "{c},{k},{}", u8::from(f))?;
        }
        Ok(())
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// `K_c` for one frequency.
pub fn k_statistic(series: &[f64], c: f64) -> f64 {
    let n_total = series.len();
    let mean = series.iter().sum::<f64>() / n_total as f64;
    let mut p = Vec::with_capacity(n_total);
    let mut q = Vec::with_capacity(n_total);
    let (mut ps, mut qs) = (0.0, 0.0);
    for (j, x) in series.iter().enumerate() {
        let arg = (j + 1) as f64 * c;
        ps += x * arg.cos();
        qs += x * arg.sin();
        p.push(ps);
        q.push(qs);
    }
    let n_cut = n_total / 10;
    let mut ns = Vec::with_capacity(n_cut);
    let mut d = Vec::with_capacity(n_cut);
    for lag in 1..=n_cut {
        let count = n_total - lag;
        let mut acc = 0.0;
        for j in 0..count {
            let dp = p[j + lag] - p[j];
            let dq = q[j + lag] - q[j];
            acc += dp * dp + dq * dq;
        }
        let msd = acc / count as f64;
        let osc = mean * mean * (1.0 - (lag as f64 * c).cos()) / (1.0 - c.cos());
        ns.push(lag as f64);
        d.push(msd - osc);
    }
    pearson(&ns, &d)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn zero_one_test(series: &[f64], n_c: usize, seed: u64) -> Result<ZeroOneResult> {
    zero_one_test_with(Execution::default(), series, n_c, seed)
}

pub fn zero_one_test_with(
    exec: Execution,
    series: &[f64],
    n_c: usize,
    seed: u64,
) -> Result<ZeroOneResult> {
    if series.len() < MIN_LEN {
        return Err(Error::InvalidParameter(format!(
            "0-1 test needs at least {MIN_LEN} samples, got {}",
            series.len()
        )));
    }
    if n_c < MIN_FREQUENCIES {
        return Err(Error::InvalidParameter(format!(
            "0-1 test needs at least {MIN_FREQUENCIES} frequencies, got {n_c}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series must be finite".into()));
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(Error::Degenerate("constant series has zero variance".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs: Vec<f64> = (0..n_c).map(|_| rng.gen_range(C_LO..C_HI)).collect();
    let ks = map_indexed(exec, n_c, |i| k_statistic(series, cs[i]));
    let per_c: Vec<(f64, f64)> = cs.into_iter().zip(ks.iter().copied()).collect();
    let mut sorted = ks;
    Ok(ZeroOneResult {
        k: median(&mut sorted),
        per_c,
    })
}
