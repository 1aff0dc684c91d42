//! The cubic memristor, the seven-dimensional complex chaotic system built on
//! it, and a fixed-step RK4 integrator.
//!
//! The complex system `x = x1 + j x2`, `y = x3 + j x4`, `z = x5 + j x6`,
//! `phi = x7` split into real and imaginary parts reads
//!
//! ```text
//! x1' = alpha (x3 - x1 + d x1 - W(x7) x1)
//! x2' = alpha (x4 - x2 + d x2 - W(x7) x2)
//! x3' = x1 - x3 + x5
//! x4' = x2 - x4 + x6
//! x5' = r x5 - beta x3
//! x6' = r x6 - beta x4
//! x7' = x1
//! ```
//!
//! with memristance `W(phi) = a + 3 b phi^2`.
//!
//! The trajectory is key material for the cipher, so integration is fixed-step
//! RK4 in `f64` with no fused operations: identical inputs give bit-identical
//! trajectories on every IEEE-754 platform.

use std::io::Write;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIM: usize = 7;

/// States with any `|x_i|` above this bound abort the integration.
pub const DIVERGENCE_BOUND: f64 = 1e12;

pub type Matrix7 = [[f64; DIM]; DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub d: f64,
    /// Linear memristor coefficient.
    pub a: f64,
    /// Cubic memristor coefficient.
    pub b: f64,
}

impl SystemParams {
    /// alpha = 10, beta = 100/7, r = 0.1, d = 9/7, a = 1/7, b = 2/7.
    pub const CANONICAL: SystemParams = SystemParams {
        alpha: 10.0,
        beta: 100.0 / 7.0,
        r: 0.1,
        d: 9.0 / 7.0,
        a: 1.0 / 7.0,
        b: 2.0 / 7.0,
    };

    pub fn new(alpha: f64, beta: f64, r: f64, d: f64, a: f64, b: f64) -> Result<Self> {
        let p = SystemParams {
            alpha,
            beta,
            r,
            d,
            a,
            b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("r", self.r),
            ("d", self.d),
            ("a", self.a),
            ("b", self.b),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.a <= 0.0 || self.b <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "memristor coefficients must be positive (a = {}, b = {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.alpha, self.beta, self.r, self.d, self.a, self.b]
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::CANONICAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State7(pub [f64; DIM]);

impl State7 {
    pub const ORIGIN: State7 = State7([0.0; DIM]);

    pub fn splat(v: f64) -> Self {
        State7([v; DIM])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for State7 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for State7 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<[f64; DIM]> for State7 {
    fn from(v: [f64; DIM]) -> Self {
        State7(v)
    }
}

fn check_memristor_inputs(phi: f64, a: f64, b: f64) -> Result<()> {
    if !(phi.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("memristor input must be finite".into()));
    }
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Domain(format!(
            "memristor coefficients must be positive (a = {a}, b = {b})"
        )));
    }
    Ok(())
}

/// Charge of the cubic memristor, `q(phi) = a phi + b phi^3`.
pub fn memristor_charge(phi: f64, a: f64, b: f64) -> Result<f64> {
    check_memristor_inputs(phi, a, b)?;
    Ok(a * phi + b * phi * phi * phi)
}

/// Memristance `W(phi) = dq/dphi = a + 3 b phi^2`.
pub fn memristance(phi: f64, a: f64, b: f64) -> Result<f64> {
    check_memristor_inputs(phi, a, b)?;
    Ok(a + 3.0 * b * phi * phi)
}

/// A smooth autonomous vector field with an analytic Jacobian.
///
/// Implemented by [`SystemParams`] for the memristive system; the Lyapunov
/// machinery is generic over it so that it can be checked on linear systems.
pub trait Flow: Sync {
    fn field(&self, s: &[f64; DIM]) -> [f64; DIM];
    fn jacobian(&self, s: &[f64; DIM]) -> Matrix7;
}

impl Flow for SystemParams {
    #[inline]
    fn field(&self, s: &[f64; DIM]) -> [f64; DIM] {
        let w = self.a + 3.0 * self.b * s[6] * s[6];
        [
            self.alpha * (s[2] - s[0] + self.d * s[0] - w * s[0]),
            self.alpha * (s[3] - s[1] + self.d * s[1] - w * s[1]),
            s[0] - s[2] + s[4],
            s[1] - s[3] + s[5],
            self.r * s[4] - self.beta * s[2],
            self.r * s[5] - self.beta * s[3],
            s[0],
        ]
    }

    #[inline]
    fn jacobian(&self, s: &[f64; DIM]) -> Matrix7 {
        let w = self.a + 3.0 * self.b * s[6] * s[6];
        let dw = 6.0 * self.b * s[6];
        let diag = self.alpha * (-1.0 + self.d - w);
        let mut m = [[0.0; DIM]; DIM];
        m[0][0] = diag;
        m[0][2] = self.alpha;
        m[0][6] = -self.alpha * dw * s[0];
        m[1][1] = diag;
        m[1][3] = self.alpha;
        m[1][6] = -self.alpha * dw * s[1];
        m[2][0] = 1.0;
        m[2][2] = -1.0;
        m[2][4] = 1.0;
        m[3][1] = 1.0;
        m[3][3] = -1.0;
        m[3][5] = 1.0;
        m[4][2] = -self.beta;
        m[4][4] = self.r;
        m[5][3] = -self.beta;
        m[5][5] = self.r;
        m[6][0] = 1.0;
        m
    }
}

/// Time derivative of the state.
pub fn vector_field(s: &State7, p: &SystemParams) -> Result<State7> {
    if !s.is_finite() {
        return Err(Error::Domain("state must be finite".into()));
    }
    let out = State7(p.field(&s.0));
    if !out.is_finite() {
        return Err(Error::Domain("vector field overflowed".into()));
    }
    Ok(out)
}

/// Analytic 7x7 Jacobian, `m[i][j] = d field_i / d x_j`.
pub fn jacobian(s: &State7, p: &SystemParams) -> Result<Matrix7> {
    if !s.is_finite() {
        return Err(Error::Domain("state must be finite".into()));
    }
    let m = p.jacobian(&s.0);
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("jacobian overflowed".into()));
    }
    Ok(m)
}

#[inline]
fn axpy(x: &[f64; DIM], h: f64, k: &[f64; DIM]) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        out[i] = x[i] + h * k[i];
    }
    out
}

/// One classic fourth-order Runge-Kutta step.
#[inline]
pub fn rk4_step<F: Flow + ?Sized>(flow: &F, s: &[f64; DIM], dt: f64) -> [f64; DIM] {
    let k1 = flow.field(s);
    let k2 = flow.field(&axpy(s, 0.5 * dt, &k1));
    let k3 = flow.field(&axpy(s, 0.5 * dt, &k2));
    let k4 = flow.field(&axpy(s, dt, &k3));
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
pub(crate) fn out_of_bounds(s: &[f64; DIM]) -> bool {
    s.iter().any(|v| !(v.abs() <= DIVERGENCE_BOUND))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub transient_steps: usize,
    pub sample_steps: usize,
}

impl IntegratorConfig {
    pub const DEFAULT_DT: f64 = 0.001;
    pub const DEFAULT_TRANSIENT: usize = 10_000;
    pub const MAX_DT: f64 = 0.01;

    pub fn new(dt: f64, transient_steps: usize, sample_steps: usize) -> Result<Self> {
        let cfg = IntegratorConfig {
            dt,
            transient_steps,
            sample_steps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_samples(sample_steps: usize) -> Self {
        IntegratorConfig {
            sample_steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= Self::MAX_DT) {
            return Err(Error::InvalidParameter(format!(
                "dt must lie in (0, {}], got {}",
                Self::MAX_DT,
                self.dt
            )));
        }
        if self.sample_steps == 0 {
            return Err(Error::InvalidParameter("sample_steps must be positive".into()));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: Self::DEFAULT_DT,
            transient_steps: Self::DEFAULT_TRANSIENT,
            sample_steps: 10_000,
        }
    }
}

/// Stepwise RK4 integrator with divergence detection.
#[derive(Debug, Clone)]
pub struct Integrator<F: Flow = SystemParams> {
    flow: F,
    state: [f64; DIM],
    dt: f64,
    step: u64,
}

impl<F: Flow> Integrator<F> {
    pub fn new(flow: F, s0: [f64; DIM], dt: f64) -> Self {
        Integrator {
            flow,
            state: s0,
            dt,
            step: 0,
        }
    }

    /// Advances one step. `Divergence { step }` names the 1-based index of the
    /// step that left the bounded region.
    #[inline]
    pub fn advance(&mut self) -> Result<&[f64; DIM]> {
        let next = rk4_step(&self.flow, &self.state, self.dt);
        self.step += 1;
        if out_of_bounds(&next) {
            return Err(Error::Divergence { step: self.step });
        }
        self.state = next;
        Ok(&self.state)
    }

    pub fn skip(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.advance()?;
        }
        Ok(())
    }

    pub fn state(&self) -> &[f64; DIM] {
        &self.state
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn flow(&self) -> &F {
        &self.flow
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<State7>,
    pub dt: f64,
    pub params: SystemParams,
}

impl Trajectory {
    /// One state variable (0-based index) across all samples.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.0[i]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.max_abs()))
    }

    /// `step,x1,...,x7`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,x1,x2,x3,x4,x5,x6,x7")?;
        for (i, s) in self.samples.iter().enumerate() {
            write!(w, "{i}")?;
            for v in s.0 {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Integrates `transient_steps + sample_steps` RK4 steps from `s0` and keeps the
/// last `sample_steps` states.
pub fn integrate(s0: &State7, p: &SystemParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    p.validate()?;
    if !s0.is_finite() {
        return Err(Error::Domain("initial state must be finite".into()));
    }
    let mut it = Integrator::new(*p, s0.0, cfg.dt);
    it.skip(cfg.transient_steps)?;
    let mut samples = Vec::with_capacity(cfg.sample_steps);
    for _ in 0..cfg.sample_steps {
        samples.push(State7(*it.advance()?));
    }
    Ok(Trajectory {
        samples,
        dt: cfg.dt,
        params: *p,
    })
}

/// Integrates and returns component `index` of every `stride`-th state after the
/// transient, `cfg.sample_steps` values in total. Used to decimate the densely
/// sampled flow before series analysis.
pub fn sampled_component(
    s0: &State7,
    p: &SystemParams,
    cfg: &IntegratorConfig,
    stride: usize,
    index: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    p.validate()?;
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    if index >= DIM {
        return Err(Error::InvalidParameter(format!("component {index} out of range")));
    }
    let mut it = Integrator::new(*p, s0.0, cfg.dt);
    it.skip(cfg.transient_steps)?;
    let mut out = Vec::with_capacity(cfg.sample_steps);
    for _ in 0..cfg.sample_steps {
        it.skip(stride - 1)?;
        out.push(it.advance()?[index]);
    }
    Ok(out)
}
