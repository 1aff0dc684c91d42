//! Generalized Arnold cat map on an L x L torus.
//!
//! A cell at (row, col) = (xx, yy) moves to
//!
//! ```text
//! | xx' |   | 1   A      | | xx |   | 1 |
//! | yy' | = | B   AB + 1 | | yy | + | 1 |   (mod L)
//! ```
//!
//! The matrix has determinant 1, so the map is a bijection for any A, B; the
//! inverse uses `[[AB+1, -A], [-B, 1]]` after undoing the translation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArnoldParams {
    pub a: u64,
    pub b: u64,
    pub side: u64,
    pub rounds: u8,
}

impl ArnoldParams {
    pub fn new(a: u64, b: u64, side: u64, rounds: u8) -> Result<Self> {
        let p = ArnoldParams { a, b, side, rounds };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 || self.rounds == 0 {
            return Err(Error::InvalidParameter("Arnold side and rounds must be positive".into()));
        }
        if self.a >= self.side || self.b >= self.side {
            return Err(Error::InvalidParameter(format!(
                "Arnold A = {}, B = {} must be below L = {}",
                self.a, self.b, self.side
            )));
        }
        Ok(())
    }

    fn ab1(&self) -> u64 {
        ((self.a as u128 * self.b as u128 + 1) % self.side as u128) as u64
    }

    #[inline]
    fn mul(x: u64, y: u64, l: u64) -> u64 {
        (x as u128 * y as u128 % l as u128) as u64
    }

    /// Destination of (xx, yy) under one round.
    pub fn forward_point(&self, xx: u64, yy: u64) -> (u64, u64) {
        let l = self.side;
        let x = (xx + Self::mul(self.a, yy, l)) % l;
        let y = (Self::mul(self.b, xx, l) + Self::mul(self.ab1(), yy, l)) % l;
        ((x + 1) % l, (y + 1) % l)
    }

    /// Source of (xx', yy') under one round.
    pub fn inverse_point(&self, xx: u64, yy: u64) -> (u64, u64) {
        let l = self.side;
        let u = (xx + l - 1) % l;
        let v = (yy + l - 1) % l;
        let x = (Self::mul(self.ab1(), u, l) + Self::mul(l - self.a, v, l)) % l;
        let y = (Self::mul(l - self.b, u, l) + v) % l;
        (x, y)
    }
}

fn check_plane(plane: &[u8], ap: &ArnoldParams) -> Result<usize> {
    ap.validate()?;
    let l = ap.side as usize;
    match l.checked_mul(l) {
        Some(n) if n == plane.len() => Ok(l),
        _ => Err(Error::Shape(format!(
            "Arnold map needs a {l}x{l} plane, got {} bytes",
            plane.len()
        ))),
    }
}

/// Flat destination index of every source cell for one round.
fn destination_table(ap: &ArnoldParams, l: usize) -> Vec<usize> {
    let mut dest = Vec::with_capacity(l * l);
    for xx in 0..l as u64 {
        for yy in 0..l as u64 {
            let (x, y) = ap.forward_point(xx, yy);
            dest.push(x as usize * l + y as usize);
        }
    }
    dest
}

fn source_table(ap: &ArnoldParams, l: usize) -> Vec<usize> {
    let mut src = Vec::with_capacity(l * l);
    for xx in 0..l as u64 {
        for yy in 0..l as u64 {
            let (x, y) = ap.inverse_point(xx, yy);
            src.push(x as usize * l + y as usize);
        }
    }
    src
}

/// `ap.rounds` applications of the map to a row-major L x L plane.
pub fn arnold_forward(plane: &[u8], ap: &ArnoldParams) -> Result<Vec<u8>> {
    let l = check_plane(plane, ap)?;
    let dest = destination_table(ap, l);
    let mut cur = plane.to_vec();
    let mut next = vec![0u8; cur.len()];
    for _ in 0..ap.rounds {
        for (i, &d) in dest.iter().enumerate() {
            next[d] = cur[i];
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

pub fn arnold_inverse(plane: &[u8], ap: &ArnoldParams) -> Result<Vec<u8>> {
    let l = check_plane(plane, ap)?;
    let src = source_table(ap, l);
    let mut cur = plane.to_vec();
    let mut next = vec![0u8; cur.len()];
    for _ in 0..ap.rounds {
        for (i, &s) in src.iter().enumerate() {
            next[s] = cur[i];
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}
