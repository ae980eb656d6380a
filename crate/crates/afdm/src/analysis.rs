//! Pairwise error probability, average BER upper bound, and diversity
//! order for the effective chirp-domain channel.
//!
//! The PEP conditions on the delay-Doppler profile (the per-path matrices
//! `H_{eps,l}`) and averages over the i.i.d. complex Gaussian path gains,
//! giving the product form over the squared singular values of the
//! codeword-difference matrix `Upsilon_{xi} - Upsilon_{xj}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::im::enumerate_codebook;
use crate::transform::DafVector;
use crate::types::{derive_bit_budget, AfdmParams, ImConfig};
use crate::{AfdmError, Result};

/// Guard on the codebook-pair enumeration (frame bits).
pub const BOUND_BIT_GUARD: usize = 16;
/// Relative singular-value threshold for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Codeword matrix whose columns are `H_{eps,l} x`, ordered antenna-major.
#[derive(Debug, Clone)]
pub struct UpsilonMatrix {
    pub values: DMatrix<Complex64>,
}

/// Ingredients of one evaluated pairwise error probability.
#[derive(Debug, Clone)]
pub struct PepTerms {
    /// Squared singular values of the difference matrix, descending.
    pub kappa_sq: Vec<f64>,
    /// Numerical rank of the difference matrix.
    pub rank: usize,
    pub q1: f64,
    pub q2: f64,
}

/// Builds `Upsilon_x` with column `(eps, l)` equal to `H_{eps,l} x`.
pub fn upsilon(x: &DafVector, eff: &EffectiveChannel) -> UpsilonMatrix {
    let n = x.len();
    let cols: Vec<_> = eff
        .components
        .iter()
        .flat_map(|per_path| per_path.iter().map(|h| h * &x.values))
        .collect();
    let mut values = DMatrix::zeros(n, cols.len());
    for (j, col) in cols.iter().enumerate() {
        values.column_mut(j).copy_from(col);
    }
    UpsilonMatrix { values }
}

fn pep_from_terms(terms: &PepTerms, branches: f64) -> f64 {
    let mut p1 = 1.0 / 12.0;
    let mut p2 = 0.25;
    for &k2 in &terms.kappa_sq {
        p1 /= 1.0 + terms.q1 * k2 / branches;
        p2 /= 1.0 + terms.q2 * k2 / branches;
    }
    p1 + p2
}

fn difference_terms(
    xi: &DafVector,
    xj: &DafVector,
    eff: &EffectiveChannel,
    n0: f64,
) -> Result<PepTerms> {
    let diff = &upsilon(xi, eff).values - &upsilon(xj, eff).values;
    if diff.norm() == 0.0 {
        return Err(AfdmError::InvalidConfig("identical codewords in PEP".into()));
    }
    let mut sv = diff.singular_values().as_slice().to_vec();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rank = sv.iter().filter(|&&s| s > RANK_TOLERANCE * sv[0]).count();
    Ok(PepTerms {
        kappa_sq: sv.iter().map(|s| s * s).collect(),
        rank,
        q1: 1.0 / (4.0 * n0),
        q2: 1.0 / (3.0 * n0),
    })
}

/// Gain-averaged pairwise error probability of confusing `xi` with `xj`.
pub fn unconditional_pep(
    xi: &DafVector,
    xj: &DafVector,
    eff: &EffectiveChannel,
    n0: f64,
) -> Result<f64> {
    let terms = difference_terms(xi, xj, eff, n0)?;
    let branches = (eff.nt * eff.components[0].len()) as f64;
    Ok(pep_from_terms(&terms, branches))
}

fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Union bound on the average bit error probability over the full
/// codebook: `(1/(2^p p)) sum_i sum_j PEP(xi -> xj) N(xi, xj)`.
pub fn abep_upper_bound(
    im: &ImConfig,
    eff: &EffectiveChannel,
    params: &AfdmParams,
    n0: f64,
) -> Result<f64> {
    let budget = derive_bit_budget(im)?;
    if budget.total > BOUND_BIT_GUARD {
        return Err(AfdmError::CodebookTooLarge { bits: budget.total, limit: BOUND_BIT_GUARD });
    }
    let book = enumerate_codebook(im, params)?;
    let p = budget.total as f64;
    let mut sum = 0.0;
    for (i, fi) in book.iter().enumerate() {
        for (j, fj) in book.iter().enumerate() {
            if i == j {
                continue;
            }
            sum += unconditional_pep(&fi.x, &fj.x, eff, n0)? * hamming(&fi.bits, &fj.bits) as f64;
        }
    }
    Ok(sum / (book.len() as f64 * p))
}

/// Minimum rank of `Upsilon_{xi} - Upsilon_{xj}` over ordered codeword
/// pairs; with `im_different_only`, restricted to pairs whose activation
/// patterns differ.
pub fn diversity_order(
    im: &ImConfig,
    eff: &EffectiveChannel,
    params: &AfdmParams,
    im_different_only: bool,
) -> Result<usize> {
    let budget = derive_bit_budget(im)?;
    if budget.total > BOUND_BIT_GUARD {
        return Err(AfdmError::CodebookTooLarge { bits: budget.total, limit: BOUND_BIT_GUARD });
    }
    let book = enumerate_codebook(im, params)?;
    let mut min_rank = usize::MAX;
    for (i, fi) in book.iter().enumerate() {
        for fj in book.iter().skip(i + 1) {
            if im_different_only && fi.patterns == fj.patterns {
                continue;
            }
            let terms = difference_terms(&fi.x, &fj.x, eff, 1.0)?;
            min_rank = min_rank.min(terms.rank);
        }
    }
    if min_rank == usize::MAX {
        return Err(AfdmError::InvalidConfig("no codeword pairs to compare".into()));
    }
    Ok(min_rank)
}
