//! Systematic (n, k) erasure coding over GF(2^8) with k = t+1: any k of the
//! n shares reconstruct the message. Messages are length-prefixed inside the
//! padded block, so the decoder needs no out-of-band length.

use crate::core::{BitString, Share};
use thiserror::Error;

/// Field polynomial x^8 + x^4 + x^3 + x^2 + 1.
const POLY: u16 = 0x11D;

/// exp[i] = g^i for generator g = 2, doubled to skip the mod-255 reduction.
static GF_TABLES: GfTables = GfTables::build();

struct GfTables {
    exp: [u8; 512],
    log: [u8; 256],
}

impl GfTables {
    const fn build() -> GfTables {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        let mut i = 0;
        while i < 255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= POLY;
            }
            i += 1;
        }
        while i < 512 {
            exp[i] = exp[i - 255];
            i += 1;
        }
        GfTables { exp, log }
    }
}

#[inline]
fn gf_mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = &GF_TABLES;
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

#[inline]
fn gf_inv(a: u8) -> u8 {
    debug_assert!(a != 0, "zero has no inverse");
    let t = &GF_TABLES;
    t.exp[255 - t.log[a as usize] as usize]
}

#[inline]
fn gf_div(a: u8, b: u8) -> u8 {
    gf_mul(a, gf_inv(b))
}

/// Code geometry: n shares, threshold k, and the share size m in bytes
/// derived from the message length.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    /// Bytes per share: ceil((ell + 32) / (8 k)).
    pub m: usize,
}

impl CodeParams {
    pub fn new(n: usize, k: usize, ell: usize) -> Result<Self, CodecError> {
        if ell == 0 {
            return Err(CodecError::EmptyMessage);
        }
        if n > 255 {
            return Err(CodecError::TooManyShares(n));
        }
        if k == 0 || k > n {
            return Err(CodecError::BadThreshold { k, n });
        }
        Ok(CodeParams { n, k, m: (ell + 32).div_ceil(8 * k) })
    }
}

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum CodecError {
    #[error("message must be at least one bit")]
    EmptyMessage,
    #[error("field supports at most 255 shares, got {0}")]
    TooManyShares(usize),
    #[error("threshold k={k} out of range for n={n}")]
    BadThreshold { k: usize, n: usize },
    #[error("need exactly {need} shares, got {got}")]
    WrongShareCount { need: usize, got: usize },
    #[error("duplicate share index {0}")]
    DuplicateIndex(u8),
    #[error("share index {0} out of range")]
    IndexOutOfRange(u8),
    #[error("share {index} has {got} bytes, expected {want}")]
    WrongShareLength { index: u8, got: usize, want: usize },
}

/// Decode result. A garbage decode means the interpolated data area carried
/// an inconsistent length prefix (only possible when the shares never came
/// from one honest encoding); the raw data area is returned so every caller
/// resolves the same deterministic value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Decoded {
    Message(BitString),
    Garbage(BitString),
}

impl Decoded {
    pub fn into_bits(self) -> BitString {
        match self {
            Decoded::Message(b) | Decoded::Garbage(b) => b,
        }
    }

    pub fn is_garbage(&self) -> bool {
        matches!(self, Decoded::Garbage(_))
    }
}

/// Build the padded data block: 32-bit big-endian bit-length prefix, the
/// message bytes, zero padding up to k*m bytes.
fn data_block(params: &CodeParams, message: &BitString) -> Vec<u8> {
    let mut block = vec![0u8; params.k * params.m];
    block[..4].copy_from_slice(&(message.bit_len() as u32).to_be_bytes());
    block[4..4 + message.bytes().len()].copy_from_slice(message.bytes());
    block
}

/// Encode `message` into n shares; shares 1..=k carry the data block
/// verbatim (systematic), the rest are Lagrange extensions evaluated at the
/// share index.
pub fn ec_encode(n: usize, k: usize, message: &BitString) -> Result<Vec<Share>, CodecError> {
    let params = CodeParams::new(n, k, message.bit_len())?;
    let block = data_block(&params, message);
    let data: Vec<&[u8]> = block.chunks(params.m).collect();

    let mut shares = Vec::with_capacity(n);
    for j in 1..=k {
        shares.push(Share { index: j as u8, data: data[j - 1].to_vec() });
    }
    // Lagrange basis over evaluation points 1..=k, evaluated at x = j.
    for j in (k + 1)..=n {
        let x = j as u8;
        let mut out = vec![0u8; params.m];
        for (i, sym) in data.iter().enumerate() {
            let xi = (i + 1) as u8;
            let mut num = 1u8;
            let mut den = 1u8;
            for (l, _) in data.iter().enumerate() {
                let xl = (l + 1) as u8;
                if xl != xi {
                    num = gf_mul(num, x ^ xl);
                    den = gf_mul(den, xi ^ xl);
                }
            }
            let coeff = gf_div(num, den);
            for (o, &s) in out.iter_mut().zip(sym.iter()) {
                *o ^= gf_mul(coeff, s);
            }
        }
        shares.push(Share { index: x, data: out });
    }
    Ok(shares)
}

/// Reconstruct the data block from exactly k shares with distinct in-range
/// indices, then strip the length prefix. `n` only bounds the index check.
pub fn ec_decode(n: usize, k: usize, shares: &[Share]) -> Result<Decoded, CodecError> {
    if shares.len() != k {
        return Err(CodecError::WrongShareCount { need: k, got: shares.len() });
    }
    let m = shares[0].data.len();
    let mut seen = [false; 256];
    for s in shares {
        if s.index == 0 || s.index as usize > n {
            return Err(CodecError::IndexOutOfRange(s.index));
        }
        if seen[s.index as usize] {
            return Err(CodecError::DuplicateIndex(s.index));
        }
        seen[s.index as usize] = true;
        if s.data.len() != m {
            return Err(CodecError::WrongShareLength { index: s.index, got: s.data.len(), want: m });
        }
    }

    // Lagrange coefficients from the provided points to each data point
    // x = 1..=k; systematic shares short-circuit to identity columns.
    let mut block = vec![0u8; k * m];
    for target in 1..=k {
        let x = target as u8;
        let out = &mut block[(target - 1) * m..target * m];
        if let Some(s) = shares.iter().find(|s| s.index == x) {
            out.copy_from_slice(&s.data);
            continue;
        }
        for s in shares {
            let xi = s.index;
            let mut num = 1u8;
            let mut den = 1u8;
            for other in shares {
                let xl = other.index;
                if xl != xi {
                    num = gf_mul(num, x ^ xl);
                    den = gf_mul(den, xi ^ xl);
                }
            }
            let coeff = gf_div(num, den);
            for (o, &b) in out.iter_mut().zip(s.data.iter()) {
                *o ^= gf_mul(coeff, b);
            }
        }
    }

    let ell = u32::from_be_bytes(block[..4].try_into().expect("prefix")) as usize;
    let consistent = ell >= 1 && (ell + 32).div_ceil(8 * k) == m;
    if !consistent {
        return Ok(Decoded::Garbage(BitString::from_bytes(block)));
    }
    let body = block[4..4 + ell.div_ceil(8)].to_vec();
    Ok(Decoded::Message(BitString::new(body, ell)))
}
