//! Eight statistical tests from NIST SP 800-22: frequency, block frequency,
//! runs, longest run of ones, cumulative sums, discrete Fourier transform,
//! approximate entropy and serial.

use std::f64::consts::{LN_2, SQRT_2};
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::keystream::KeystreamGenerator;
use crate::par::{map_indexed, Execution};

pub const ALPHA: f64 = 0.01;
pub const DEFAULT_BITS: usize = 1_000_000;
pub const DEFAULT_BLOCK_LEN: usize = 128;
pub const DEFAULT_APEN_M: usize = 2;
pub const DEFAULT_SERIAL_M: usize = 2;

/// Bits packed MSB-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bytes: Vec<u8>,
    len: usize,
}

impl BitSequence {
    pub fn from_bytes(bytes: &[u8], n_bits: usize) -> Result<Self> {
        if n_bits > bytes.len() * 8 {
            return Err(Error::InvalidParameter(format!(
                "{n_bits} bits requested from {} bytes",
                bytes.len()
            )));
        }
        let mut bytes = bytes[..n_bits.div_ceil(8)].to_vec();
        if n_bits % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - n_bits % 8);
        }
        Ok(BitSequence { bytes, len: n_bits })
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut bytes = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % 8 == 0 {
                bytes.push(0);
            }
            if b {
                *bytes.last_mut().unwrap() |= 0x80 >> (len % 8);
            }
            len += 1;
        }
        BitSequence { bytes, len }
    }

    /// Parses a string of `0` and `1`; whitespace is skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for (i, ch) in text.chars().filter(|c| !c.is_whitespace()).enumerate() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "bit {i}: expected 0 or 1, found {other:?}"
                    )))
                }
            }
        }
        Ok(Self::from_bits(bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    fn ones(&self) -> usize {
        let full = self.len / 8;
        let mut n: usize = self.bytes[..full].iter().map(|b| b.count_ones() as usize).sum();
        n += (full * 8..self.len).filter(|&i| self.get(i)).count();
        n
    }
}

/// Unpacks `n_bits` MSB-first from successive keystream bytes.
pub fn bits_from_keystream(g: &mut KeystreamGenerator, n_bits: usize) -> Result<BitSequence> {
    if n_bits == 0 {
        return Err(Error::InvalidParameter("n_bits must be positive".into()));
    }
    let mut bytes = vec![0u8; n_bits.div_ceil(8)];
    g.fill(&mut bytes)?;
    BitSequence::from_bytes(&bytes, n_bits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub name: &'static str,
    /// Smallest of `sub_p_values` for tests that report more than one.
    pub p_value: f64,
    pub pass: bool,
    pub sub_p_values: Vec<f64>,
}

impl TestResult {
    fn new(name: &'static str, sub: Vec<f64>) -> Self {
        let sub: Vec<f64> = sub.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        let p_value = sub.iter().copied().fold(1.0, f64::min);
        TestResult {
            name,
            p_value,
            pass: p_value >= ALPHA,
            sub_p_values: sub,
        }
    }
}

fn require(s: &BitSequence, test: &'static str, min: usize) -> Result<()> {
    if s.len() < min {
        return Err(Error::SequenceTooShort {
            test,
            min,
            got: s.len(),
        });
    }
    Ok(())
}

fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn monobit(s: &BitSequence) -> Result<TestResult> {
    require(s, "frequency", 100)?;
    Ok(monobit_unchecked(s))
}

pub(crate) fn monobit_unchecked(s: &BitSequence) -> TestResult {
    let n = s.len() as f64;
    let sum = 2.0 * s.ones() as f64 - n;
    let s_obs = sum.abs() / n.sqrt();
    TestResult::new("frequency", vec![erfc(s_obs / SQRT_2)])
}

pub fn block_frequency(s: &BitSequence, block_len: usize) -> Result<TestResult> {
    require(s, "block frequency", 100)?;
    if block_len == 0 || block_len > s.len() {
        return Err(Error::InvalidParameter(format!(
            "block length {block_len} must be in 1..={}",
            s.len()
        )));
    }
    Ok(block_frequency_unchecked(s, block_len))
}

pub(crate) fn block_frequency_unchecked(s: &BitSequence, m: usize) -> TestResult {
    let blocks = s.len() / m;
    let chi: f64 = (0..blocks)
        .map(|b| {
            let ones = (b * m..(b + 1) * m).filter(|&i| s.get(i)).count();
            let pi = ones as f64 / m as f64 - 0.5;
            pi * pi
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    TestResult::new("block frequency", vec![igamc(blocks as f64 / 2.0, chi / 2.0)])
}

pub fn runs(s: &BitSequence) -> Result<TestResult> {
    require(s, "runs", 100)?;
    Ok(runs_unchecked(s))
}

pub(crate) fn runs_unchecked(s: &BitSequence) -> TestResult {
    let n = s.len() as f64;
    let pi = s.ones() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        // frequency prerequisite failed
        return TestResult::new("runs", vec![0.0]);
    }
    let v = 1 + (1..s.len()).filter(|&i| s.get(i) != s.get(i - 1)).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    TestResult::new("runs", vec![erfc(num / den)])
}

struct LongestRunTable {
    block: usize,
    /// Run length of the first class (`<= lo`); the last class is `>= lo + probs.len() - 1`.
    lo: usize,
    probs: &'static [f64],
}

const LONGEST_RUN_TABLES: [(usize, LongestRunTable); 3] = [
    (
        750_000,
        LongestRunTable {
            block: 10_000,
            lo: 10,
            probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        },
    ),
    (
        6272,
        LongestRunTable {
            block: 128,
            lo: 4,
            probs: &[0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847],
        },
    ),
    (
        128,
        LongestRunTable {
            block: 8,
            lo: 1,
            probs: &[0.21484375, 0.3671875, 0.23046875, 0.1875],
        },
    ),
];

pub fn longest_run(s: &BitSequence) -> Result<TestResult> {
    require(s, "longest run", 128)?;
    let table = &LONGEST_RUN_TABLES
        .iter()
        .find(|(min, _)| s.len() >= *min)
        .expect("length checked")
        .1;
    let blocks = s.len() / table.block;
    let k = table.probs.len();
    let mut nu = vec![0usize; k];
    for b in 0..blocks {
        let (mut run, mut best) = (0usize, 0usize);
        for i in b * table.block..(b + 1) * table.block {
            if s.get(i) {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        nu[best.clamp(table.lo, table.lo + k - 1) - table.lo] += 1;
    }
    let chi: f64 = nu
        .iter()
        .zip(table.probs)
        .map(|(&v, &p)| {
            let e = blocks as f64 * p;
            (v as f64 - e).powi(2) / e
        })
        .sum();
    Ok(TestResult::new(
        "longest run",
        vec![igamc((k - 1) as f64 / 2.0, chi / 2.0)],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumMode {
    Forward,
    Backward,
}

pub fn cumulative_sums(s: &BitSequence, mode: CusumMode) -> Result<f64> {
    require(s, "cumulative sums", 100)?;
    Ok(cusum_unchecked(s, mode))
}

pub(crate) fn cusum_unchecked(s: &BitSequence, mode: CusumMode) -> f64 {
    let n = s.len();
    let step = |i: usize| if s.get(i) { 1i64 } else { -1 };
    let (mut sum, mut z) = (0i64, 0i64);
    for j in 0..n {
        let i = match mode {
            CusumMode::Forward => j,
            CusumMode::Backward => n - 1 - j,
        };
        sum += step(i);
        z = z.max(sum.abs());
    }
    let (ni, nf) = (n as i64, n as f64);
    let zf = z as f64;
    let sq = nf.sqrt();
    // integer bounds truncate toward zero, as in the reference implementation
    let mut sum1 = 0.0;
    for k in (-ni / z + 1) / 4..=(ni / z - 1) / 4 {
        let k = k as f64;
        sum1 += phi((4.0 * k + 1.0) * zf / sq) - phi((4.0 * k - 1.0) * zf / sq);
    }
    let mut sum2 = 0.0;
    for k in (-ni / z - 3) / 4..=(ni / z - 1) / 4 {
        let k = k as f64;
        sum2 += phi((4.0 * k + 3.0) * zf / sq) - phi((4.0 * k + 1.0) * zf / sq);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

fn cusum_result(s: &BitSequence) -> Result<TestResult> {
    Ok(TestResult::new(
        "cumulative sums",
        vec![
            cumulative_sums(s, CusumMode::Forward)?,
            cumulative_sums(s, CusumMode::Backward)?,
        ],
    ))
}

pub fn spectral_fft(s: &BitSequence) -> Result<TestResult> {
    require(s, "dft", 1000)?;
    Ok(spectral_unchecked(s))
}

pub(crate) fn spectral_unchecked(s: &BitSequence) -> TestResult {
    let n = s.len();
    let mut buf: Vec<Complex<f64>> = s
        .iter()
        .map(|b| Complex::new(if b { 1.0 } else { -1.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = (20.0f64.ln() * nf).sqrt();
    let n0 = 0.95 * nf / 2.0;
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let d = (n1 - n0) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    TestResult::new("dft", vec![erfc(d.abs() / SQRT_2)])
}

/// Frequencies of all overlapping `m`-bit patterns, the sequence wrapped
/// around by `m - 1` bits.
fn pattern_counts(s: &BitSequence, m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        return counts;
    }
    let n = s.len();
    let mask = (1usize << m) - 1;
    let mut w = 0usize;
    for i in 0..m - 1 {
        w = (w << 1) | s.get(i) as usize;
    }
    for i in 0..n {
        w = ((w << 1) | s.get((i + m - 1) % n) as usize) & mask;
        counts[w] += 1;
    }
    counts
}

fn max_template_len(n: usize) -> usize {
    (n as f64).log2().floor() as usize
}

pub fn approximate_entropy(s: &BitSequence, m: usize) -> Result<TestResult> {
    require(s, "approximate entropy", 100)?;
    let limit = max_template_len(s.len()).saturating_sub(5);
    if m == 0 || m >= limit.max(1) {
        return Err(Error::InvalidParameter(format!(
            "approximate entropy block length {m} must be in 1..{limit} for n = {}",
            s.len()
        )));
    }
    Ok(apen_unchecked(s, m))
}

pub(crate) fn apen_unchecked(s: &BitSequence, m: usize) -> TestResult {
    let n = s.len() as f64;
    let phi = |m: usize| -> f64 {
        pattern_counts(s, m)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum()
    };
    let apen = phi(m) - phi(m + 1);
    let chi = 2.0 * n * (LN_2 - apen);
    TestResult::new(
        "approximate entropy",
        vec![igamc(2f64.powi(m as i32 - 1), chi / 2.0)],
    )
}

pub fn serial(s: &BitSequence, m: usize) -> Result<TestResult> {
    require(s, "serial", 100)?;
    let limit = max_template_len(s.len()).saturating_sub(2);
    if m < 2 || m >= limit {
        return Err(Error::InvalidParameter(format!(
            "serial block length {m} must be in 2..{limit} for n = {}",
            s.len()
        )));
    }
    Ok(serial_unchecked(s, m))
}

pub(crate) fn serial_unchecked(s: &BitSequence, m: usize) -> TestResult {
    let n = s.len() as f64;
    let psi = |k: usize| -> f64 {
        if k == 0 {
            return 0.0;
        }
        let sq: f64 = pattern_counts(s, k).iter().map(|&c| (c * c) as f64).sum();
        sq * 2f64.powi(k as i32) / n - n
    };
    let (p0, p1, p2) = (psi(m), psi(m - 1), psi(m.saturating_sub(2)));
    let d1 = p0 - p1;
    let d2 = p0 - 2.0 * p1 + p2;
    TestResult::new(
        "serial",
        vec![
            igamc(2f64.powi(m as i32 - 2), d1 / 2.0),
            igamc(2f64.powi(m as i32 - 3), d2 / 2.0),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryConfig {
    pub block_len: usize,
    pub apen_m: usize,
    pub serial_m: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            block_len: DEFAULT_BLOCK_LEN,
            apen_m: DEFAULT_APEN_M,
            serial_m: DEFAULT_SERIAL_M,
        }
    }
}

pub const BATTERY_LEN: usize = 8;

pub fn run_battery(s: &BitSequence, cfg: &BatteryConfig) -> Result<Vec<TestResult>> {
    run_battery_with(Execution::default(), s, cfg)
}

pub fn run_battery_with(exec: Execution, s: &BitSequence, cfg: &BatteryConfig) -> Result<Vec<TestResult>> {
    map_indexed(exec, BATTERY_LEN, |i| match i {
        0 => monobit(s),
        1 => block_frequency(s, cfg.block_len),
        2 => runs(s),
        3 => longest_run(s),
        4 => cusum_result(s),
        5 => spectral_fft(s),
        6 => approximate_entropy(s, cfg.apen_m),
        _ => serial(s, cfg.serial_m),
    })
    .into_iter()
    .collect()
}

pub fn write_csv<W: Write>(results: &[TestResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "test,p_value,pass")?;
    for r in results {
        writeln!(w, "{},{:.6},{}", r.name, r.p_value, r.pass)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keystream::Key;
    use approx::assert_abs_diff_eq;

    const EPS_100: &str = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";
    const EPS_128: &str = "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100111001101101100010110010";

    fn seq(s: &str) -> BitSequence {
        BitSequence::parse(s).unwrap()
    }

    #[test]
    fn packing_is_msb_first() {
        let s = BitSequence::from_bytes(&[0x80, 0xFF], 9).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), [true, false, false, false, false, false, false, false, true]);
        assert_eq!(s.as_bytes(), &[0x80, 0x80]);
        assert_eq!(s.ones(), 2);
    }

    #[test]
    fn keystream_bits_consume_ceiling_bytes() {
        let mut g = KeystreamGenerator::new(&Key::canonical()).unwrap();
        let a = bits_from_keystream(&mut g, 9).unwrap();
        assert_eq!(g.position(), 2);
        let mut g2 = KeystreamGenerator::new(&Key::canonical()).unwrap();
        assert_eq!(bits_from_keystream(&mut g2, 9).unwrap(), a);
    }

    #[test]
    fn worked_examples_100_bits() {
        let s = seq(EPS_100);
        assert_abs_diff_eq!(monobit(&s).unwrap().p_value, 0.109599, epsilon = 1e-6);
        assert_abs_diff_eq!(block_frequency(&s, 10).unwrap().p_value, 0.706438, epsilon = 1e-6);
        assert_abs_diff_eq!(runs(&s).unwrap().p_value, 0.500798, epsilon = 1e-6);
        // 48 of the first 50 moduli fall below the threshold (checked with numpy)
        let d: f64 = 0.5 / (100.0f64 * 0.95 * 0.05 / 4.0).sqrt();
        assert_abs_diff_eq!(spectral_unchecked(&s).p_value, erfc(d / SQRT_2), epsilon = 1e-12);
        assert_abs_diff_eq!(apen_unchecked(&s, 2).p_value, 0.235301, epsilon = 1e-6);
        assert_abs_diff_eq!(cumulative_sums(&s, CusumMode::Forward).unwrap(), 0.219194, epsilon = 1e-6);
        assert_abs_diff_eq!(cumulative_sums(&s, CusumMode::Backward).unwrap(), 0.114866, epsilon = 1e-6);
    }

    #[test]
    fn worked_example_longest_run() {
        assert_abs_diff_eq!(longest_run(&seq(EPS_128)).unwrap().p_value, 0.180609, epsilon = 1e-6);
    }

    #[test]
    fn small_worked_examples() {
        assert_abs_diff_eq!(monobit_unchecked(&seq("1011010101")).p_value, 0.527089, epsilon = 1e-6);
        assert_abs_diff_eq!(runs_unchecked(&seq("1001101011")).p_value, 0.147232, epsilon = 1e-6);
        assert_abs_diff_eq!(
            block_frequency_unchecked(&seq("0110011010"), 3).p_value,
            0.801252,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(apen_unchecked(&seq("0100110101"), 3).p_value, 0.261961, epsilon = 1e-6);
        let r = serial_unchecked(&seq("0011011101"), 3);
        assert_abs_diff_eq!(r.sub_p_values[0], 0.808792, epsilon = 1e-6);
        assert_abs_diff_eq!(r.sub_p_values[1], 0.670320, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_sequences() {
        let zeros = BitSequence::from_bits(std::iter::repeat(false).take(1000));
        let r = monobit(&zeros).unwrap();
        assert!(r.p_value < 1e-12 && !r.pass);
        let alt = BitSequence::from_bits((0..1000).map(|i| i % 2 == 1));
        assert_abs_diff_eq!(monobit(&alt).unwrap().p_value, 1.0);
        assert!(!runs(&alt).unwrap().pass);
    }

    #[test]
    fn length_errors_name_test() {
        let s = seq(EPS_100);
        assert!(matches!(
            longest_run(&s),
            Err(Error::SequenceTooShort { test: "longest run", min: 128, got: 100 })
        ));
        assert!(matches!(spectral_fft(&s), Err(Error::SequenceTooShort { min: 1000, .. })));
        assert!(monobit(&seq("0101")).is_err());
    }
}
