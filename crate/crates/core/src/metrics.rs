//! Quality and security statistics for planes and RGB images.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::cipher::{decrypt_image, encrypt_image};
use crate::error::{Error, Result};
use crate::image::{ImageRGB, PlaneRef};
use crate::keystream::{Key, COMPONENT_NAMES, KEY_COMPONENTS};
use crate::par::{map_indexed, Execution};

pub const DEFAULT_PAIRS: usize = 8000;
pub const DEFAULT_PAIR_SEED: u64 = 2024;
/// Chi-square critical value for 255 degrees of freedom at the 1% level.
pub const CHI_SQUARE_CRITICAL: f64 = 310.46;

fn same_shape(f: &PlaneRef, g: &PlaneRef) -> Result<()> {
    if f.width != g.width || f.height != g.height {
        return Err(Error::Shape(format!(
            "planes differ in shape: {}x{} vs {}x{}",
            f.width, f.height, g.width, g.height
        )));
    }
    Ok(())
}

pub fn mse(f: &PlaneRef, g: &PlaneRef) -> Result<f64> {
    same_shape(f, g)?;
    Ok(sum_sq_diff(f.data, g.data) / f.data.len() as f64)
}

fn sum_sq_diff(f: &[u8], g: &[u8]) -> f64 {
    f.iter()
        .zip(g)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsnrMode {
    /// `10 log10(255^2 / MSE)`.
    #[default]
    Standard,
    /// `20 log10(255 / MSE)`, kept for comparison with published tables.
    Literal,
}

pub fn psnr_from_mse(mse: f64, mode: PsnrMode) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    match mode {
        PsnrMode::Standard => 10.0 * (255.0 * 255.0 / mse).log10(),
        PsnrMode::Literal => 20.0 * (255.0 / mse).log10(),
    }
}

/// Infinite when the planes are identical.
pub fn psnr(f: &PlaneRef, g: &PlaneRef, mode: PsnrMode) -> Result<f64> {
    Ok(psnr_from_mse(mse(f, g)?, mode))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsimConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl SsimConfig {
    const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
    const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

    /// c3 = c2 / 2.
    pub fn standard() -> Self {
        SsimConfig {
            c1: Self::C1,
            c2: Self::C2,
            c3: Self::C2 / 2.0,
        }
    }

    /// c3 = c1 / 2.
    pub fn compat() -> Self {
        SsimConfig {
            c3: Self::C1 / 2.0,
            ..Self::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.c1, self.c2, self.c3].iter().all(|c| c.is_finite() && *c > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("SSIM constants must be positive".into()))
        }
    }
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self::standard()
    }
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

fn moments(x: &[u8], y: &[u8]) -> Moments {
    let n = x.len() as f64;
    let mean_x = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mean_y = y.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a as f64 - mean_x;
        let dy = b as f64 - mean_y;
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    Moments {
        mean_x,
        mean_y,
        var_x: var_x / n,
        var_y: var_y / n,
        cov: cov / n,
    }
}

/// Luminance, contrast and structure terms over the whole plane, with the
/// product clamped to `[0, 1]`.
pub fn ssim(x: &PlaneRef, y: &PlaneRef, cfg: &SsimConfig) -> Result<f64> {
    same_shape(x, y)?;
    cfg.validate()?;
    let m = moments(x.data, y.data);
    let (sx, sy) = (m.var_x.sqrt(), m.var_y.sqrt());
    let l = (2.0 * m.mean_x * m.mean_y + cfg.c1) / (m.mean_x.powi(2) + m.mean_y.powi(2) + cfg.c1);
    let c = (2.0 * sx * sy + cfg.c2) / (m.var_x + m.var_y + cfg.c2);
    let s = (m.cov + cfg.c3) / (sx * sy + cfg.c3);
    Ok((l * c * s).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: [u64; 256],
}

impl Histogram {
    pub fn of(data: &[u8]) -> Self {
        let mut counts = [0u64; 256];
        for &v in data {
            counts[v as usize] += 1;
        }
        Histogram { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Pearson statistic against the uniform expectation `total / 256`.
    pub fn chi_square(&self) -> f64 {
        let expected = self.total() as f64 / 256.0;
        if expected == 0.0 {
            return 0.0;
        }
        self.counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "value,count")?;
        for (v, c) in self.counts.iter().enumerate() {
            writeln!(w, "{v},{c}")?;
        }
        Ok(())
    }
}

pub fn histogram(plane: &[u8]) -> Histogram {
    Histogram::of(plane)
}

/// Shannon entropy in bits over the 256 gray levels.
pub fn shannon_entropy(plane: &[u8]) -> f64 {
    Histogram::of(plane).entropy()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Horizontal, Direction::Vertical, Direction::Diagonal];

    fn offset(self) -> (usize, usize) {
        match self {
            Direction::Horizontal => (0, 1),
            Direction::Vertical => (1, 0),
            Direction::Diagonal => (1, 1),
        }
    }
}

/// Pearson correlation of two equally long samples.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    let n = u.len() as f64;
    let eu = u.iter().sum::<f64>() / n;
    let ev = v.iter().sum::<f64>() / n;
    let (mut du, mut dv, mut cov) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        du += (a - eu) * (a - eu);
        dv += (b - ev) * (b - ev);
        cov += (a - eu) * (b - ev);
    }
    if du == 0.0 || dv == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation sample".into()));
    }
    Ok((cov / (du * dv).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between `n_pairs` randomly placed pixels and their neighbour in
/// `dir`. Positions are drawn with replacement from a ChaCha8 generator seeded
/// with `seed`.
pub fn adjacent_correlation(plane: &PlaneRef, dir: Direction, n_pairs: usize, seed: u64) -> Result<f64> {
    if n_pairs < 2 {
        return Err(Error::InvalidParameter("need at least 2 pixel pairs".into()));
    }
    let (dr, dc) = dir.offset();
    if plane.height <= dr || plane.width <= dc {
        return Err(Error::Shape(format!(
            "{}x{} plane has no {dir:?} neighbours",
            plane.width, plane.height
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (plane.height - dr, plane.width - dc);
    let mut u = Vec::with_capacity(n_pairs);
    let mut v = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let r = rng.gen_range(0..rows);
        let c = rng.gen_range(0..cols);
        u.push(plane.at(r, c) as f64);
        v.push(plane.at(r + dr, c + dc) as f64);
    }
    pearson(&u, &v)
}

fn serialize_db<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_infinite() => s.serialize_str("inf"),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalCorrelation {
    pub horizontal: f64,
    pub vertical: f64,
    pub diagonal: f64,
}

impl DirectionalCorrelation {
    pub fn max_abs(&self) -> f64 {
        self.horizontal.abs().max(self.vertical.abs()).max(self.diagonal.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub width: u32,
    pub height: u32,
    /// R, G, B.
    pub entropy: [f64; 3],
    /// `None` for a constant channel.
    pub correlation: [Option<DirectionalCorrelation>; 3],
    #[serde(skip)]
    pub histogram: [Histogram; 3],
    pub chi_square: [f64; 3],
    /// Against the reference image, when one was given.
    #[serde(serialize_with = "serialize_db")]
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisConfig {
    pub n_pairs: usize,
    pub seed: u64,
    pub psnr_mode: PsnrMode,
    pub ssim: SsimConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            n_pairs: DEFAULT_PAIRS,
            seed: DEFAULT_PAIR_SEED,
            psnr_mode: PsnrMode::Standard,
            ssim: SsimConfig::standard(),
        }
    }
}

/// MSE pooled over all three channels.
pub fn image_mse(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    same_shape(&a.channel(0), &b.channel(0))?;
    let total: f64 = (0..3).map(|c| sum_sq_diff(a.plane(c), b.plane(c))).sum();
    Ok(total / (3 * a.pixel_count()) as f64)
}

/// Mean of the per-channel SSIM values.
pub fn image_ssim(a: &ImageRGB, b: &ImageRGB, cfg: &SsimConfig) -> Result<f64> {
    let mut sum = 0.0;
    for c in 0..3 {
        sum += ssim(&a.channel(c), &b.channel(c), cfg)?;
    }
    Ok(sum / 3.0)
}

pub fn analyze(img: &ImageRGB, reference: Option<&ImageRGB>, cfg: &AnalysisConfig) -> Result<MetricsReport> {
    let histogram: [Histogram; 3] = std::array::from_fn(|c| Histogram::of(img.plane(c)));
    let mut correlation = [None; 3];
    for (c, slot) in correlation.iter_mut().enumerate() {
        let plane = img.channel(c);
        let r = |d| adjacent_correlation(&plane, d, cfg.n_pairs, cfg.seed);
        *slot = match (r(Direction::Horizontal), r(Direction::Vertical), r(Direction::Diagonal)) {
            (Ok(horizontal), Ok(vertical), Ok(diagonal)) => Some(DirectionalCorrelation {
                horizontal,
                vertical,
                diagonal,
            }),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => match e {
                Error::Degenerate(_) | Error::Shape(_) => None,
                other => return Err(other),
            },
        };
    }
    let (psnr, ssim) = match reference {
        Some(r) => (
            Some(psnr_from_mse(image_mse(r, img)?, cfg.psnr_mode)),
            Some(image_ssim(r, img, &cfg.ssim)?),
        ),
        None => (None, None),
    };
    Ok(MetricsReport {
        width: img.width(),
        height: img.height(),
        entropy: std::array::from_fn(|c| histogram[c].entropy()),
        correlation,
        chi_square: std::array::from_fn(|c| histogram[c].chi_square()),
        histogram,
        psnr,
        ssim,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SensitivityOutcome {
    Decrypted {
        /// Pooled over all channels; `None` if either side is constant.
        correlation: Option<f64>,
        /// Per channel.
        entropy: [f64; 3],
        differing_fraction: f64,
    },
    /// The perturbed key left the bounded region; no output was produced.
    Diverged { step: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub component: &'static str,
    pub outcome: SensitivityOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub epsilon: f64,
    pub entries: Vec<SensitivityEntry>,
}

fn compare_decryption(plain: &ImageRGB, wrong: &ImageRGB) -> SensitivityOutcome {
    let n = 3 * plain.pixel_count();
    let differing = (0..3)
        .flat_map(|c| plain.plane(c).iter().zip(wrong.plane(c)))
        .filter(|(a, b)| a != b)
        .count();
    let flat = |img: &ImageRGB| -> Vec<f64> {
        img.planes().iter().flatten().map(|&v| v as f64).collect()
    };
    SensitivityOutcome::Decrypted {
        correlation: pearson(&flat(plain), &flat(wrong)).ok(),
        entropy: std::array::from_fn(|c| shannon_entropy(wrong.plane(c))),
        differing_fraction: differing as f64 / n as f64,
    }
}

pub fn key_sensitivity_report(img: &ImageRGB, key: &Key, epsilon: f64) -> Result<SensitivityReport> {
    key_sensitivity_report_with(Execution::default(), img, key, epsilon)
}

/// Encrypts once with `key`, then decrypts with each of the 13 components
/// shifted by `+epsilon`.
pub fn key_sensitivity_report_with(
    exec: Execution,
    img: &ImageRGB,
    key: &Key,
    epsilon: f64,
) -> Result<SensitivityReport> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let env = encrypt_image(img, key)?;
    let results = map_indexed(exec, KEY_COMPONENTS, |i| -> Result<SensitivityEntry> {
        let wrong_key = key.perturbed(i, epsilon)?;
        let outcome = match decrypt_image(&env, &wrong_key) {
            Ok(wrong) => compare_decryption(img, &wrong),
            Err(Error::Divergence { step }) => SensitivityOutcome::Diverged { step },
            Err(e) => return Err(e),
        };
        Ok(SensitivityEntry {
            component: COMPONENT_NAMES[i],
            outcome,
        })
    });
    Ok(SensitivityReport {
        epsilon,
        entries: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plane(w: usize, h: usize, data: &[u8]) -> PlaneRef<'_> {
        PlaneRef::new(w, h, data).unwrap()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&plane(2, 2, &[0; 4]), &plane(2, 2, &[2; 4])).unwrap(), 4.0);
        assert_eq!(mse(&plane(2, 1, &[0, 255]), &plane(2, 1, &[255, 0])).unwrap(), 65025.0);
        assert!(mse(&plane(2, 1, &[0, 0]), &plane(1, 2, &[0, 0])).is_err());
    }

    #[test]
    fn psnr_examples() {
        let p = plane(2, 1, &[3, 9]);
        assert!(psnr(&p, &p, PsnrMode::Standard).unwrap().is_infinite());
        assert_abs_diff_eq!(psnr_from_mse(65025.0, PsnrMode::Standard), 0.0);
        assert_abs_diff_eq!(psnr_from_mse(4.0, PsnrMode::Standard), 42.110, epsilon = 5e-3);
        assert_abs_diff_eq!(psnr_from_mse(255.0, PsnrMode::Literal), 0.0);
    }

    #[test]
    fn ssim_identity_and_inverse() {
        let x: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        let inv: Vec<u8> = x.iter().map(|v| 255 - v).collect();
        let cfg = SsimConfig::standard();
        assert_abs_diff_eq!(ssim(&plane(8, 8, &x), &plane(8, 8, &x), &cfg).unwrap(), 1.0, epsilon = 1e-12);
        assert!(ssim(&plane(8, 8, &x), &plane(8, 8, &inv), &cfg).unwrap() < 0.05);
        assert!(SsimConfig { c3: 0.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn histogram_and_entropy() {
        let constant = [7u8; 512];
        let h = histogram(&constant);
        assert_eq!(h.total(), 512);
        assert_eq!(h.counts[7], 512);
        assert_abs_diff_eq!(h.chi_square(), 255.0 * 512.0);
        assert_eq!(shannon_entropy(&constant), 0.0);
        let uniform: Vec<u8> = (0..1024).map(|i| (i % 256) as u8).collect();
        assert_abs_diff_eq!(shannon_entropy(&uniform), 8.0, epsilon = 1e-12);
        assert_eq!(histogram(&uniform).chi_square(), 0.0);
    }

    #[test]
    fn correlation_of_duplicated_columns_is_one() {
        let data: Vec<u8> = (0..32 * 32).map(|i| ((i / 2) * 37 % 251) as u8).collect();
        // constant rows: every horizontal pair is (v, v)
        let rows: Vec<u8> = (0..32).flat_map(|r| std::iter::repeat((r * 7) as u8).take(32)).collect();
        let r = adjacent_correlation(&plane(32, 32, &rows), Direction::Horizontal, 500, 1).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        let a = adjacent_correlation(&plane(32, 32, &data), Direction::Diagonal, 500, 9).unwrap();
        let b = adjacent_correlation(&plane(32, 32, &data), Direction::Diagonal, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            adjacent_correlation(&plane(32, 32, &[1; 1024]), Direction::Vertical, 100, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn report_serializes_infinite_psnr() {
        let img = ImageRGB::from_gray(4, 4, &(0..16).map(|i| (i * 16) as u8).collect::<Vec<_>>()).unwrap();
        let rep = analyze(&img, Some(&img), &AnalysisConfig::default()).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"psnr\":\"inf\""), "{json}");
        assert_eq!(rep.ssim, Some(1.0));
    }

    #[test]
    fn zero_epsilon_recovers_exactly() {
        let img = ImageRGB::from_gray(6, 5, &(0..30).map(|i| (i * 8) as u8).collect::<Vec<_>>()).unwrap();
        let rep = key_sensitivity_report(&img, &Key::canonical(), 0.0).unwrap();
        assert_eq!(rep.entries.len(), 13);
        for e in &rep.entries {
            match &e.outcome {
                SensitivityOutcome::Decrypted {
                    differing_fraction, ..
                } => assert_eq!(*differing_fraction, 0.0),
                other => panic!("{other:?}"),
            }
        }
    }
}
