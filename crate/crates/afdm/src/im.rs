//! Bit to chirp-domain symbol mapping for the two index modulation schemes.
//!
//! Scheme I activates `m` of `n` subcarriers independently in each of the
//! `g` groups. Scheme II splits the frame into `L` subblocks of `g` groups
//! and shares one activation pattern across the groups of a subblock, so a
//! pattern choice is spread over `g m` subcarriers.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::transform::DafVector;
use crate::types::{derive_bit_budget, index_bits_per_choice, AfdmParams, ImConfig, ImScheme};
use crate::{AfdmError, Result};

/// Guard on exhaustive codebook enumeration (frame bits).
pub const CODEBOOK_BIT_GUARD: usize = 24;

/// The `m` active subcarrier indices within one group, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    pub indices: Vec<usize>,
}

impl ActivationPattern {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }
}

/// One encoded frame: the chirp-domain vector plus the side information
/// needed to demap it again.
#[derive(Debug, Clone)]
pub struct DafFrame {
    pub x: DafVector,
    /// Per-group activation pattern (`g * L` entries, group-major).
    pub patterns: Vec<ActivationPattern>,
    /// Per-group active-subcarrier symbols, in pattern order.
    pub symbols: Vec<Vec<Complex64>>,
    /// The source bit string.
    pub bits: Vec<bool>,
}

/// Ordered table of the `2^p1` activation patterns used for `(n, m)`.
///
/// The `(4, 2)` case follows the published example order
/// `{0,1}, {1,2}, {2,3}, {0,3}`; every other `(n, m)` takes the first
/// `2^p1` patterns in lexicographic order.
pub fn pattern_table(n: usize, m: usize) -> Result<Vec<ActivationPattern>> {
    if m > n {
        return Err(AfdmError::InvalidConfig(format!("m = {m} exceeds n = {n}")));
    }
    if (n, m) == (4, 2) {
        return Ok(vec![
            ActivationPattern::new(vec![0, 1]),
            ActivationPattern::new(vec![1, 2]),
            ActivationPattern::new(vec![2, 3]),
            ActivationPattern::new(vec![0, 3]),
        ]);
    }
    let count = 1usize << index_bits_per_choice(n, m);
    let mut table = Vec::with_capacity(count);
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        table.push(ActivationPattern::new(current.clone()));
        if table.len() == count {
            break;
        }
        // next combination in lexicographic order
        let mut i = m;
        loop {
            i -= 1;
            if current[i] != i + n - m {
                break;
            }
        }
        current[i] += 1;
        for j in i + 1..m {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(table)
}

fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

fn index_to_bits(mut idx: usize, width: usize) -> Vec<bool> {
    let mut bits = vec![false; width];
    for b in bits.iter_mut().rev() {
        *b = idx & 1 == 1;
        idx >>= 1;
    }
    bits
}

/// Maps a `p`-bit string onto one chirp-domain frame.
pub fn encode(bits: &[bool], im: &ImConfig, params: &AfdmParams) -> Result<DafFrame> {
    im.check_carriers(params.n)?;
    let budget = derive_bit_budget(im)?;
    if bits.len() != budget.total {
        return Err(AfdmError::BitCountMismatch { expected: budget.total, actual: bits.len() });
    }
    let table = pattern_table(im.n, im.m)?;
    let p1 = index_bits_per_choice(im.n, im.m);
    let sym_bits = im.mod_order.trailing_zeros() as usize;

    let mut x = DVector::zeros(params.n);
    let mut patterns = Vec::with_capacity(im.total_groups());
    let mut symbols = Vec::with_capacity(im.total_groups());
    let mut pos = 0usize;

    let place_group = |group: usize,
                           pattern: &ActivationPattern,
                           pos: &mut usize,
                           x: &mut DVector<Complex64>,
                           symbols: &mut Vec<Vec<Complex64>>| {
        let base = group * im.n;
        let mut q = Vec::with_capacity(im.m);
        for &k in &pattern.indices {
            let idx = bits_to_index(&bits[*pos..*pos + sym_bits]);
            *pos += sym_bits;
            let point = im.alphabet[idx];
            x[base + k] = point;
            q.push(point);
        }
        symbols.push(q);
    };

    match im.scheme {
        ImScheme::SchemeI => {
            for group in 0..im.g {
                let pattern = &table[bits_to_index(&bits[pos..pos + p1])];
                pos += p1;
                place_group(group, pattern, &mut pos, &mut x, &mut symbols);
                patterns.push(pattern.clone());
            }
        }
        ImScheme::SchemeII => {
            for block in 0..im.subblocks {
                let pattern = &table[bits_to_index(&bits[pos..pos + p1])];
                pos += p1;
                for i in 0..im.g {
                    place_group(block * im.g + i, pattern, &mut pos, &mut x, &mut symbols);
                    patterns.push(pattern.clone());
                }
            }
        }
    }
    debug_assert_eq!(pos, bits.len());
    Ok(DafFrame { x: DafVector::new(x), patterns, symbols, bits: bits.to_vec() })
}

fn symbol_to_bits(q: Complex64, im: &ImConfig) -> Vec<bool> {
    let sym_bits = im.mod_order.trailing_zeros() as usize;
    let idx = im
        .alphabet
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - q).norm_sqr().partial_cmp(&(b.1 - q).norm_sqr()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    index_to_bits(idx, sym_bits)
}

/// Inverse of [`encode`]: recovers the bit string from detected per-group
/// patterns and symbols.
///
/// Every pattern must be present in the pattern table; detectors are
/// expected to project onto the table before calling this.
pub fn decode(
    patterns: &[ActivationPattern],
    symbols: &[Vec<Complex64>],
    im: &ImConfig,
) -> Result<Vec<bool>> {
    let table = pattern_table(im.n, im.m)?;
    let p1 = index_bits_per_choice(im.n, im.m);
    let groups = im.total_groups();
    if patterns.len() != groups || symbols.len() != groups {
        return Err(AfdmError::LengthMismatch { expected: groups, actual: patterns.len() });
    }
    let lookup = |pat: &ActivationPattern| -> Result<usize> {
        table
            .iter()
            .position(|t| t == pat)
            .ok_or_else(|| AfdmError::PatternNotInTable(pat.indices.clone()))
    };
    let mut bits = Vec::new();
    match im.scheme {
        ImScheme::SchemeI => {
            for group in 0..im.g {
                bits.extend(index_to_bits(lookup(&patterns[group])?, p1));
                for &q in &symbols[group] {
                    bits.extend(symbol_to_bits(q, im));
                }
            }
        }
        ImScheme::SchemeII => {
            for block in 0..im.subblocks {
                bits.extend(index_to_bits(lookup(&patterns[block * im.g])?, p1));
                for i in 0..im.g {
                    for &q in &symbols[block * im.g + i] {
                        bits.extend(symbol_to_bits(q, im));
                    }
                }
            }
        }
    }
    Ok(bits)
}

/// Enumerates all `2^p` frames; the ML detector and the ABEP bound search
/// this list.
pub fn enumerate_codebook(im: &ImConfig, params: &AfdmParams) -> Result<Vec<DafFrame>> {
    let budget = derive_bit_budget(im)?;
    if budget.total > CODEBOOK_BIT_GUARD {
        return Err(AfdmError::CodebookTooLarge { bits: budget.total, limit: CODEBOOK_BIT_GUARD });
    }
    (0..1usize << budget.total)
        .map(|word| encode(&index_to_bits(word, budget.total), im, params))
        .collect()
}
