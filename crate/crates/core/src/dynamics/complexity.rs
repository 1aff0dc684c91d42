//! Spectral entropy (SE) and C0 complexity of a scalar series, and the
//! two-parameter (alpha, d) map of both.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::bifurcation::ParamRange;
use crate::chaos::{sampled_component, IntegratorConfig, State7, SystemParams};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

pub const MIN_LEN: usize = 64;

/// Bins with power above `C0_RATIO` times the mean power form the regular part.
pub const C0_RATIO: f64 = 5.0;

/// Mean-removed complex copy of the longest power-of-two prefix.
fn centered_prefix(series: &[f64]) -> Result<Vec<Complex<f64>>> {
    if series.len() < MIN_LEN {
        return Err(Error::InvalidParameter(format!(
            "complexity measures need at least {MIN_LEN} samples, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series must be finite".into()));
    }
    let n = 1usize << (usize::BITS - 1 - series.len().leading_zeros());
    let x = &series[..n];
    let mean = x.iter().sum::<f64>() / n as f64;
    let out: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    let energy: f64 = out.iter().map(|c| c.re * c.re).sum();
    // relative to the raw signal so that round-off of a constant still counts as zero
    let scale: f64 = x.iter().map(|v| v * v).sum();
    if energy == 0.0 || energy <= scale * 1e-28 {
        return Err(Error::Degenerate("series has no fluctuating part".into()));
    }
    Ok(out)
}

fn forward(buf: &mut [Complex<f64>]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// Shannon entropy of the normalized one-sided power spectrum (bins 1..=N/2),
/// divided by `ln(N/2)`; lies in [0, 1].
pub fn spectral_entropy(series: &[f64]) -> Result<f64> {
    let mut buf = centered_prefix(series)?;
    forward(&mut buf);
    let half = buf.len() / 2;
    let power: Vec<f64> = buf[1..=half].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    let h: f64 = power
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum();
    Ok((h / (half as f64).ln()).clamp(0.0, 1.0))
}

/// Energy fraction of the irregular part: spectral bins with power at most
/// `C0_RATIO` times the mean are dropped, the rest inverse-transformed to the
/// regular component, and the residual energy is divided by the total.
pub fn c0_complexity(series: &[f64]) -> Result<f64> {
    let signal = centered_prefix(series)?;
    let n = signal.len();
    let mut spectrum = signal.clone();
    forward(&mut spectrum);
    let mean_power = spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
    for c in spectrum.iter_mut() {
        if c.norm_sqr() <= C0_RATIO * mean_power {
            *c = Complex::new(0.0, 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let inv_n = 1.0 / n as f64;
    let mut residual = 0.0;
    let mut total = 0.0;
    for (x, r) in signal.iter().zip(&spectrum) {
        let regular = r * inv_n;
        residual += (x - regular).norm_sqr();
        total += x.norm_sqr();
    }
    Ok((residual / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCell {
    /// alpha
    pub p1: f64,
    /// d
    pub p2: f64,
    pub se: f64,
    pub c0: f64,
    /// Integration diverged or produced a degenerate series; `se`/`c0` are NaN.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityMap {
    /// Row-major: alpha index outer, d index inner.
    pub cells: Vec<ComplexityCell>,
}

impl ComplexityMap {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "p1,p2,se,c0,diverged")?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{},{}", c.p1, c.p2, c.se, c.c0, u8::from(c.diverged))?;
        }
        Ok(())
    }
}

/// SE and C0 of x1 at one parameter set; x1 taken every `stride` steps.
pub fn complexity_of_x1(
    p: &SystemParams,
    s0: &State7,
    cfg: &IntegratorConfig,
    stride: usize,
) -> Result<(f64, f64)> {
    let x1 = sampled_component(s0, p, cfg, stride, 0)?;
    Ok((spectral_entropy(&x1)?, c0_complexity(&x1)?))
}

pub fn complexity_map(
    alpha: ParamRange,
    d: ParamRange,
    base: &SystemParams,
    s0: &State7,
    cfg: &IntegratorConfig,
    stride: usize,
) -> Result<ComplexityMap> {
    complexity_map_with(Execution::default(), alpha, d, base, s0, cfg, stride)
}

/// Grid evaluation over (alpha, d); every other parameter comes from `base`.
pub fn complexity_map_with(
    exec: Execution,
    alpha: ParamRange,
    d: ParamRange,
    base: &SystemParams,
    s0: &State7,
    cfg: &IntegratorConfig,
    stride: usize,
) -> Result<ComplexityMap> {
    alpha.validate()?;
    d.validate()?;
    cfg.validate()?;
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    if cfg.sample_steps < MIN_LEN {
        return Err(Error::InvalidParameter(format!(
            "complexity map needs at least {MIN_LEN} samples per cell"
        )));
    }
    let cells = map_indexed(exec, alpha.n * d.n, |idx| {
        let (i, j) = (idx / d.n, idx % d.n);
        let p = SystemParams {
            alpha: alpha.value(i),
            d: d.value(j),
            ..*base
        };
        let (se, c0, diverged) = match complexity_of_x1(&p, s0, cfg, stride) {
            Ok((se, c0)) => (se, c0, false),
            Err(_) => (f64::NAN, f64::NAN, true),
        };
        ComplexityCell {
            p1: p.alpha,
            p2: p.d,
            se,
            c0,
            diverged,
        }
    });
    Ok(ComplexityMap { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tone(n: usize, bin: usize) -> Vec<f64> {
        (0..n)
            .map(|k| (2.0 * PI * bin as f64 * k as f64 / n as f64).sin())
            .collect()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()
    }

    #[test]
    fn pure_tone_has_zero_complexity() {
        let x = tone(1024, 37);
        assert!(spectral_entropy(&x).unwrap() < 1e-6);
        assert!(c0_complexity(&x).unwrap() < 1e-9);
    }

    #[test]
    fn white_noise_entropy_is_high() {
        let se = spectral_entropy(&noise(4096, 1)).unwrap();
        assert!(se > 0.9, "{se}");
    }

    #[test]
    fn white_noise_c0_matches_expectation() {
        // Periodogram ordinates of white noise are exponential with mean m: bins
        // above 5m hold a fraction 6 e^-5 of the energy, so C0 -> 1 - 6 e^-5.
        let expected = 1.0 - 6.0 * (-5.0f64).exp();
        let mean: f64 = (0..20)
            .map(|s| c0_complexity(&noise(4096, 100 + s)).unwrap())
            .sum::<f64>()
            / 20.0;
        assert!((mean - expected).abs() < 0.01, "{mean} vs {expected}");
    }

    #[test]
    fn c0_grows_with_noise_level() {
        let t = tone(2048, 50);
        let w = noise(2048, 5);
        let levels = [0.0, 0.05, 0.2, 0.5, 1.0, 3.0];
        let values: Vec<f64> = levels
            .iter()
            .map(|&l| {
                let mix: Vec<f64> = t.iter().zip(&w).map(|(a, b)| a + l * b).collect();
                c0_complexity(&mix).unwrap()
            })
            .collect();
        for pair in values.windows(2) {
            assert!(pair[1] > pair[0], "{values:?}");
        }
    }

    #[test]
    fn amplitude_scaling_invariance() {
        let x = noise(1000, 8);
        let scaled: Vec<f64> = x.iter().map(|v| 10.0 * v + 3.0).collect();
        assert!((spectral_entropy(&x).unwrap() - spectral_entropy(&scaled).unwrap()).abs() < 1e-9);
        assert!((c0_complexity(&x).unwrap() - c0_complexity(&scaled).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_short() {
        assert!(matches!(spectral_entropy(&[0.0; 128]), Err(Error::Degenerate(_))));
        assert!(matches!(c0_complexity(&[2.5; 128]), Err(Error::Degenerate(_))));
        assert!(spectral_entropy(&[1.0; 10]).is_err());
    }

    #[test]
    fn truncates_to_power_of_two() {
        let mut x = noise(100, 3);
        let a = spectral_entropy(&x).unwrap();
        x.truncate(64);
        assert_eq!(a, spectral_entropy(&x).unwrap());
    }
}
