//! Benettin estimation of the full Lyapunov spectrum.
//!
//! The state and seven tangent vectors are advanced together with one coupled
//! RK4 step (tangents follow `v' = J(s) v`). Every `renorm_interval` steps the
//! tangent basis is re-orthonormalized by modified Gram-Schmidt and the log of
//! each column norm is accumulated.

use serde::{Deserialize, Serialize};

use crate::chaos::{out_of_bounds, Flow, IntegratorConfig, Matrix7, State7, DIM};
use crate::error::{Error, Result};

pub const DEFAULT_RENORM_INTERVAL: usize = 10;
pub const DEFAULT_TOTAL_STEPS: usize = 500_000;

/// Tangent norms below this are treated as a collapsed basis.
const COLLAPSE_NORM: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Sorted descending, units 1/time.
    pub exponents: [f64; DIM],
    pub total_time: f64,
    pub renorm_interval: usize,
}

impl LyapunovSpectrum {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// Exponents with `|le| < tol`.
    pub fn near_zero(&self, tol: f64) -> usize {
        self.exponents.iter().filter(|v| v.abs() < tol).count()
    }

    /// `index,value` with a 1-based exponent index.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,value")?;
        for (i, v) in self.exponents.iter().enumerate() {
            writeln!(w, "{},{v}", i + 1)?;
        }
        Ok(())
    }
}

#[inline]
fn apply(m: &Matrix7, v: &[f64; DIM]) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for (o, row) in out.iter_mut().zip(m.iter()) {
        let mut acc = 0.0;
        for j in 0..DIM {
            acc += row[j] * v[j];
        }
        *o = acc;
    }
    out
}

#[inline]
fn shifted(x: &[f64; DIM], h: f64, k: &[f64; DIM]) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        out[i] = x[i] + h * k[i];
    }
    out
}

type Basis = [[f64; DIM]; DIM];

fn coupled_rk4<F: Flow + ?Sized>(flow: &F, s: &mut [f64; DIM], basis: &mut Basis, dt: f64) {
    let half = 0.5 * dt;

    let j1 = flow.jacobian(s);
    let k1 = flow.field(s);
    let t1: Basis = std::array::from_fn(|c| apply(&j1, &basis[c]));

    let s2 = shifted(s, half, &k1);
    let b2: Basis = std::array::from_fn(|c| shifted(&basis[c], half, &t1[c]));
    let j2 = flow.jacobian(&s2);
    let k2 = flow.field(&s2);
    let t2: Basis = std::array::from_fn(|c| apply(&j2, &b2[c]));

    let s3 = shifted(s, half, &k2);
    let b3: Basis = std::array::from_fn(|c| shifted(&basis[c], half, &t2[c]));
    let j3 = flow.jacobian(&s3);
    let k3 = flow.field(&s3);
    let t3: Basis = std::array::from_fn(|c| apply(&j3, &b3[c]));

    let s4 = shifted(s, dt, &k3);
    let b4: Basis = std::array::from_fn(|c| shifted(&basis[c], dt, &t3[c]));
    let j4 = flow.jacobian(&s4);
    let k4 = flow.field(&s4);
    let t4: Basis = std::array::from_fn(|c| apply(&j4, &b4[c]));

    let w = dt / 6.0;
    for i in 0..DIM {
        s[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    for c in 0..DIM {
        for i in 0..DIM {
            basis[c][i] += w * (t1[c][i] + 2.0 * t2[c][i] + 2.0 * t3[c][i] + t4[c][i]);
        }
    }
}

/// Modified Gram-Schmidt in place; adds `ln |v_c|` to `sums[c]`.
fn orthonormalize(basis: &mut Basis, sums: &mut [f64; DIM]) -> Result<()> {
    for c in 0..DIM {
        for prev in 0..c {
            let dot: f64 = (0..DIM).map(|i| basis[c][i] * basis[prev][i]).sum();
            for i in 0..DIM {
                basis[c][i] -= dot * basis[prev][i];
            }
        }
        let norm = basis[c].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > COLLAPSE_NORM) || !norm.is_finite() {
            return Err(Error::NumericalCollapse(format!(
                "tangent vector {c} has norm {norm:e}"
            )));
        }
        sums[c] += norm.ln();
        for v in basis[c].iter_mut() {
            *v /= norm;
        }
    }
    Ok(())
}

/// Lyapunov spectrum of an arbitrary [`Flow`].
///
/// `cfg.transient_steps` are integrated first without tangents; `total_steps`
/// tangent-propagation steps follow. `cfg.sample_steps` is not used.
pub fn lyapunov_spectrum_of<F: Flow + ?Sized>(
    flow: &F,
    s0: &State7,
    cfg: &IntegratorConfig,
    renorm_interval: usize,
    total_steps: usize,
) -> Result<LyapunovSpectrum> {
    cfg.validate()?;
    if renorm_interval == 0 || total_steps == 0 {
        return Err(Error::InvalidParameter(
            "renorm_interval and total_steps must be positive".into(),
        ));
    }
    let mut s = s0.0;
    for step in 0..cfg.transient_steps {
        s = crate::chaos::rk4_step(flow, &s, cfg.dt);
        if out_of_bounds(&s) {
            return Err(Error::Divergence {
                step: step as u64 + 1,
            });
        }
    }
    let mut basis: Basis = std::array::from_fn(|c| {
        let mut e = [0.0; DIM];
        e[c] = 1.0;
        e
    });
    let mut sums = [0.0; DIM];
    for step in 1..=total_steps {
        coupled_rk4(flow, &mut s, &mut basis, cfg.dt);
        if out_of_bounds(&s) {
            return Err(Error::Divergence {
                step: (cfg.transient_steps + step) as u64,
            });
        }
        if step % renorm_interval == 0 || step == total_steps {
            orthonormalize(&mut basis, &mut sums)?;
        }
    }
    let total_time = total_steps as f64 * cfg.dt;
    let mut exponents = sums.map(|v| v / total_time);
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovSpectrum {
        exponents,
        total_time,
        renorm_interval,
    })
}

/// Lyapunov spectrum of the memristive system.
pub fn lyapunov_spectrum(
    p: &crate::chaos::SystemParams,
    s0: &State7,
    cfg: &IntegratorConfig,
    renorm_interval: usize,
    total_steps: usize,
) -> Result<LyapunovSpectrum> {
    p.validate()?;
    lyapunov_spectrum_of(p, s0, cfg, renorm_interval, total_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::SystemParams;

    /// `x' = -k x`, exponents all equal `-k`.
    struct Decay(f64);

    impl Flow for Decay {
        fn field(&self, s: &[f64; DIM]) -> [f64; DIM] {
            s.map(|v| -self.0 * v)
        }
        fn jacobian(&self, _s: &[f64; DIM]) -> Matrix7 {
            let mut m = [[0.0; DIM]; DIM];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = -self.0;
            }
            m
        }
    }

    /// Diagonal linear system with distinct rates.
    struct Diagonal([f64; DIM]);

    impl Flow for Diagonal {
        fn field(&self, s: &[f64; DIM]) -> [f64; DIM] {
            std::array::from_fn(|i| self.0[i] * s[i])
        }
        fn jacobian(&self, _s: &[f64; DIM]) -> Matrix7 {
            let mut m = [[0.0; DIM]; DIM];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = self.0[i];
            }
            m
        }
    }

    #[test]
    fn linear_decay_exponents() {
        let cfg = IntegratorConfig::new(0.001, 0, 1).unwrap();
        let spec = lyapunov_spectrum_of(&Decay(1.5), &State7::splat(1.0), &cfg, 10, 20_000).unwrap();
        for v in spec.exponents {
            assert!((v + 1.5).abs() < 1e-6, "{v}");
        }
        assert!((spec.total_time - 20.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_rates_sorted() {
        let rates = [0.3, -2.0, 0.0, -0.5, 1.0, -4.0, -1.0];
        let cfg = IntegratorConfig::new(0.001, 0, 1).unwrap();
        let spec =
            lyapunov_spectrum_of(&Diagonal(rates), &State7::ORIGIN, &cfg, 5, 10_000).unwrap();
        let mut want = rates;
        want.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in spec.exponents.iter().zip(want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_zero_interval() {
        let cfg = IntegratorConfig::default();
        assert!(lyapunov_spectrum(&SystemParams::CANONICAL, &State7::splat(0.1), &cfg, 0, 10).is_err());
    }

    #[test]
    fn collapse_is_reported() {
        // RK4 contracts by 0.375 per step here; 1000 steps without renormalization
        // push the tangent norms far below 1e-300.
        let cfg = IntegratorConfig::new(0.001, 0, 1).unwrap();
        let r = lyapunov_spectrum_of(&Decay(1000.0), &State7::splat(1.0), &cfg, 1000, 1000);
        assert!(matches!(r, Err(Error::NumericalCollapse(_))), "{r:?}");
    }
}
