//! Secret key, keystream generation and key-space arithmetic.
//!
//! A [`Key`] is the 7 initial conditions plus the 6 system parameters. The
//! generator integrates the system with fixed RK4 (dt = 0.001), discards a
//! 10,000-step transient, and then emits seven bytes per step, one per state
//! variable in ascending order:
//!
//! ```text
//! byte = floor(|x_i| * 1e10) mod 256
//! ```
//!
//! This quantizer, the step size and the transient are part of envelope
//! format version 1.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chaos::{Integrator, State7, SystemParams, DIM};
use crate::error::{Error, Result};

pub const KEYSTREAM_DT: f64 = 0.001;
pub const KEYSTREAM_TRANSIENT: usize = 10_000;
pub const QUANT_SCALE: f64 = 1e10;

/// Initial conditions outside `[-INIT_BOUND, INIT_BOUND]` are rejected.
pub const INIT_BOUND: f64 = 10.0;

pub const KEY_COMPONENTS: usize = 13;

pub const COMPONENT_NAMES: [&str; KEY_COMPONENTS] = [
    "x1", "x2", "x3", "x4", "x5", "x6", "x7", "alpha", "beta", "r", "d", "a", "b",
];

/// Real-to-byte quantizer.
#[inline]
pub fn quantize(x: f64) -> u8 {
    // floor and fmod are exact in binary floating point, so this is exact for
    // every finite |x| * 1e10 (including values beyond u64 range)
    ((x.abs() * QUANT_SCALE).floor() % 256.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Key {
    pub init: State7,
    pub params: SystemParams,
}

impl Key {
    pub fn canonical() -> Self {
        Key {
            init: State7::splat(0.1),
            params: SystemParams::CANONICAL,
        }
    }

    pub fn new(init: State7, params: SystemParams) -> Result<Self> {
        let k = Key { init, params };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(index, reason)| Error::KeyParse { index, reason })
    }

    fn check(&self) -> std::result::Result<(), (usize, String)> {
        for (i, v) in self.components().iter().enumerate() {
            if !v.is_finite() {
                return Err((i, format!("{} must be finite", COMPONENT_NAMES[i])));
            }
        }
        for i in 0..DIM {
            if self.init[i].abs() > INIT_BOUND {
                return Err((
                    i,
                    format!("{} = {} outside [-{INIT_BOUND}, {INIT_BOUND}]", COMPONENT_NAMES[i], self.init[i]),
                ));
            }
        }
        if self.params.a <= 0.0 {
            return Err((11, format!("a = {} must be positive", self.params.a)));
        }
        if self.params.b <= 0.0 {
            return Err((12, format!("b = {} must be positive", self.params.b)));
        }
        Ok(())
    }

    /// `x1..x7, alpha, beta, r, d, a, b`.
    pub fn components(&self) -> [f64; KEY_COMPONENTS] {
        let p = self.params.as_array();
        std::array::from_fn(|i| if i < DIM { self.init[i] } else { p[i - DIM] })
    }

    pub fn from_components(c: [f64; KEY_COMPONENTS]) -> Result<Self> {
        let k = Key {
            init: State7(std::array::from_fn(|i| c[i])),
            params: SystemParams {
                alpha: c[7],
                beta: c[8],
                r: c[9],
                d: c[10],
                a: c[11],
                b: c[12],
            },
        };
        k.validate()?;
        Ok(k)
    }

    /// Copy with component `index` shifted by `delta`.
    pub fn perturbed(&self, index: usize, delta: f64) -> Result<Self> {
        let mut c = self.components();
        c[index] += delta;
        Self::from_components(c)
    }

    /// Parses 13 whitespace-separated numbers; `#` starts a comment running to
    /// the end of the line.
    pub fn from_text(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .collect();
        let mut values = [0.0; KEY_COMPONENTS];
        for i in 0..KEY_COMPONENTS {
            let tok = tokens.get(i).ok_or_else(|| Error::KeyParse {
                index: i,
                reason: format!("expected {KEY_COMPONENTS} numbers, found {}", tokens.len()),
            })?;
            values[i] = tok.parse::<f64>().map_err(|_| Error::KeyParse {
                index: i,
                reason: format!("`{tok}` is not a decimal number"),
            })?;
        }
        if tokens.len() > KEY_COMPONENTS {
            return Err(Error::KeyParse {
                index: KEY_COMPONENTS,
                reason: format!("expected {KEY_COMPONENTS} numbers, found {}", tokens.len()),
            });
        }
        Self::from_components(values)
    }

    /// Shortest round-tripping decimal form of every component.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.components().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            // `{}` on f64 is the shortest string that parses back to the same bits
            write!(out, "{v}").unwrap();
        }
        out
    }
}

pub fn key_from_text(text: &str) -> Result<Key> {
    Key::from_text(text)
}

pub fn key_to_text(key: &Key) -> String {
    key.to_text()
}

/// `n_keys * log2(precision_levels)`.
pub fn key_space_bits(precision_levels: f64, n_keys: u32) -> f64 {
    n_keys as f64 * precision_levels.log2()
}

/// Deterministic byte source driven by the chaotic trajectory.
///
/// Single consumer. Once the trajectory diverges the generator is poisoned and
/// every later call returns the same divergence error.
#[derive(Debug, Clone)]
pub struct KeystreamGenerator {
    integrator: Integrator<SystemParams>,
    current: [u8; DIM],
    /// Next dimension to emit from `current`; `DIM` means a new step is needed.
    cursor: usize,
    failed: Option<u64>,
    emitted: u64,
}

impl KeystreamGenerator {
    /// Integrates and discards the transient.
    pub fn new(key: &Key) -> Result<Self> {
        key.validate()?;
        let mut integrator = Integrator::new(key.params, key.init.0, KEYSTREAM_DT);
        integrator.skip(KEYSTREAM_TRANSIENT)?;
        Ok(KeystreamGenerator {
            integrator,
            current: [0; DIM],
            cursor: DIM,
            failed: None,
            emitted: 0,
        })
    }

    fn refill(&mut self) -> Result<()> {
        if let Some(step) = self.failed {
            return Err(Error::Divergence { step });
        }
        match self.integrator.advance() {
            Ok(s) => {
                self.current = s.map(quantize);
                self.cursor = 0;
                Ok(())
            }
            Err(Error::Divergence { step }) => {
                self.failed = Some(step);
                Err(Error::Divergence { step })
            }
            Err(e) => Err(e),
        }
    }

    #[inline]
    pub fn next_byte(&mut self) -> Result<u8> {
        if self.cursor == DIM {
            self.refill()?;
        }
        let b = self.current[self.cursor];
        self.cursor += 1;
        self.emitted += 1;
        Ok(b)
    }

    pub fn fill(&mut self, out: &mut [u8]) -> Result<()> {
        for b in out.iter_mut() {
            *b = self.next_byte()?;
        }
        Ok(())
    }

    /// Four bytes assembled big-endian.
    pub fn next_u32(&mut self) -> Result<u32> {
        let mut w = [0u8; 4];
        self.fill(&mut w)?;
        Ok(u32::from_be_bytes(w))
    }

    /// Uniform integer in `[0, bound)` by rejection sampling on 32-bit words;
    /// `bound` must lie in `1..=2^32`.
    pub fn next_uint_below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 || bound > 1 << 32 {
            return Err(Error::InvalidParameter(format!(
                "bound must lie in 1..=2^32, got {bound}"
            )));
        }
        let limit = ((1u64 << 32) / bound) * bound;
        loop {
            let u = self.next_u32()? as u64;
            if u < limit {
                return Ok(u % bound);
            }
        }
    }

    /// Drops what is left of the current step so that the next byte is the
    /// x1 byte of a fresh step.
    pub fn align_to_step(&mut self) {
        if self.cursor != DIM && self.cursor != 0 {
            self.emitted += (DIM - self.cursor) as u64;
            self.cursor = DIM;
        }
    }

    /// The seven bytes of the next step, x1 first. Aligns first if the cursor
    /// is mid-step.
    pub fn next_step_bytes(&mut self) -> Result<[u8; DIM]> {
        self.align_to_step();
        if self.cursor == DIM {
            self.refill()?;
        }
        self.cursor = DIM;
        self.emitted += DIM as u64;
        Ok(self.current)
    }

    /// Steps taken after the transient.
    pub fn steps(&self) -> u64 {
        self.integrator.steps_taken() - KEYSTREAM_TRANSIENT as u64
    }

    /// Bytes emitted or skipped so far.
    pub fn position(&self) -> u64 {
        self.emitted
    }
}
