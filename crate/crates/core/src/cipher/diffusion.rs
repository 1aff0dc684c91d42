//! Seven-pass XOR diffusion.
//!
//! Byte `j` of the buffer is paired with keystream step `j` (counted from the
//! step-aligned start of the diffusion block). Pass `p` (0-based) XORs it with
//! the byte quantized from `x_{p+1}` at that step.

use crate::chaos::DIM;
use crate::error::Result;
use crate::keystream::KeystreamGenerator;

pub const NATURAL_ORDER: [usize; DIM] = [0, 1, 2, 3, 4, 5, 6];

/// Per-position keystream bytes, one per dimension.
pub type DiffusionBlock = Vec<[u8; DIM]>;

/// Aligns the generator to a step boundary and draws `len` steps.
pub fn draw_diffusion_block(g: &mut KeystreamGenerator, len: usize) -> Result<DiffusionBlock> {
    g.align_to_step();
    (0..len).map(|_| g.next_step_bytes()).collect()
}

/// Applies the passes in `order`, each pass over the whole buffer.
pub fn apply_passes(buf: &mut [u8], block: &[[u8; DIM]], order: &[usize; DIM]) {
    debug_assert_eq!(buf.len(), block.len());
    for &pass in order {
        for (b, k) in buf.iter_mut().zip(block) {
            *b ^= k[pass];
        }
    }
}

/// Seven passes in natural order with freshly drawn keystream. Applying it
/// twice from the same stream position restores the input.
pub fn diffuse(buf: &[u8], g: &mut KeystreamGenerator) -> Result<Vec<u8>> {
    let block = draw_diffusion_block(g, buf.len())?;
    let mut out = buf.to_vec();
    apply_passes(&mut out, &block, &NATURAL_ORDER);
    Ok(out)
}
