//! Keyed Fisher-Yates shuffle.

use crate::error::{Error, Result};
use crate::keystream::KeystreamGenerator;

/// Permutation of `0..n`: for `i` from `n-1` down to 1, swap `i` with
/// `next_uint_below(i + 1)`.
pub fn keyed_permutation(n: usize, g: &mut KeystreamGenerator) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidParameter("permutation size must be positive".into()));
    }
    if n as u64 > 1 << 32 {
        return Err(Error::InvalidParameter(format!("permutation of {n} exceeds 2^32")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = g.next_uint_below(i as u64 + 1)? as usize;
        perm.swap(i, j);
    }
    Ok(perm)
}

/// `out[k] = data[perm[k]]`.
pub fn permute<T: Copy>(data: &[T], perm: &[usize]) -> Vec<T> {
    debug_assert_eq!(data.len(), perm.len());
    perm.iter().map(|&i| data[i]).collect()
}

/// Inverse of [`permute`]: `out[perm[k]] = data[k]`.
pub fn unpermute<T: Copy + Default>(data: &[T], perm: &[usize]) -> Vec<T> {
    debug_assert_eq!(data.len(), perm.len());
    let mut out = vec![T::default(); data.len()];
    for (k, &i) in perm.iter().enumerate() {
        out[i] = data[k];
    }
    out
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &i) in perm.iter().enumerate() {
        inv[i] = k;
    }
    inv
}
