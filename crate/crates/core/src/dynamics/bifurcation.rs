//! One-parameter bifurcation sweep over alpha, observing local maxima of x3.

use serde::{Deserialize, Serialize};

use crate::chaos::{integrate, IntegratorConfig, State7, SystemParams};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

/// State index of the observable (x3, the real part of y).
pub const OBSERVABLE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let r = ParamRange { lo, hi, n };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "range needs lo < hi and n >= 2, got ({}, {}, {})",
                self.lo, self.hi, self.n
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationColumn {
    pub alpha: f64,
    pub maxima: Vec<f64>,
    /// Set when the integration at this alpha diverged; `maxima` is then empty.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationData {
    pub columns: Vec<BifurcationColumn>,
}

impl BifurcationData {
    /// Flat `(alpha, extremum)` rows in alpha order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.columns
            .iter()
            .flat_map(|c| c.maxima.iter().map(move |&m| (c.alpha, m)))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "alpha,extremum")?;
        for (a, m) in self.rows() {
            writeln!(w, "{a},{m}")?;
        }
        Ok(())
    }
}

/// Values `s[i]` with `s[i-1] < s[i] >= s[i+1]`.
pub fn local_maxima(series: &[f64]) -> Vec<f64> {
    series
        .windows(3)
        .filter(|w| w[0] < w[1] && w[1] >= w[2])
        .map(|w| w[1])
        .collect()
}

/// Number of clusters after sorting, where neighbours closer than `tol` merge.
pub fn distinct_values(values: &[f64], tol: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last > tol {
            count += 1;
        }
        last = x;
    }
    count
}

pub fn bifurcation_sweep(
    alpha: ParamRange,
    other: &SystemParams,
    s0: &State7,
    cfg: &IntegratorConfig,
) -> Result<BifurcationData> {
    bifurcation_sweep_with(Execution::default(), alpha, other, s0, cfg)
}

/// For every alpha in the range, integrates past the transient and records the
/// local maxima of x3 over the sample window. All other parameters come from
/// `other`.
pub fn bifurcation_sweep_with(
    exec: Execution,
    alpha: ParamRange,
    other: &SystemParams,
    s0: &State7,
    cfg: &IntegratorConfig,
) -> Result<BifurcationData> {
    alpha.validate()?;
    cfg.validate()?;
    let columns = map_indexed(exec, alpha.n, |i| {
        let a = alpha.value(i);
        let p = SystemParams { alpha: a, ..*other };
        match integrate(s0, &p, cfg) {
            Ok(t) => Ok(BifurcationColumn {
                alpha: a,
                maxima: local_maxima(&t.component(OBSERVABLE)),
                diverged: false,
            }),
            Err(Error::Divergence { .. }) => Ok(BifurcationColumn {
                alpha: a,
                maxima: Vec::new(),
                diverged: true,
            }),
            Err(e) => Err(e),
        }
    });
    Ok(BifurcationData {
        columns: columns.into_iter().collect::<Result<_>>()?,
    })
}
