//! Frame detection from `y = H_eff x + w`: exhaustive ML, double-layer
//! message passing (DLMP), single-layer MP, and MMSE, plus FLOP
//! accounting for the iterative detectors.
//!
//! The message-passing detectors run on a factor graph whose edges are
//! the nonzeros of `H_eff`. DLMP adds a second layer of indicator nodes
//! (one per subcarrier) and constraint nodes (one per group) enforcing
//! the exactly-`m`-active index modulation structure.

mod dlmp;
mod flops;
mod ml;
mod mmse;

pub use dlmp::{
    constraint_update, dlmp_detect, dlmp_diagnostics, indicator_update, mp_detect,
    observation_update, variable_update,
};
pub use flops::{flop_estimate, DetectorKind};
pub use ml::ml_detect;
pub use mmse::mmse_detect;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::im::{decode, pattern_table, ActivationPattern};
use crate::transform::DafVector;
use crate::types::{ImConfig, ImScheme};
use crate::Result;

/// Entries of `H_eff` below this magnitude carry no edge.
pub const EDGE_THRESHOLD: f64 = 1e-12;
/// PMF floor applied before normalization.
pub(crate) const PMF_FLOOR: f64 = 1e-300;

/// Damping, iteration cap, and convergence threshold for the iterative
/// detectors.
#[derive(Debug, Clone, Copy)]
pub struct DetectorOptions {
    /// Damping factor in (0, 1]; 1 disables damping.
    pub damping: f64,
    pub max_iter: usize,
    /// A symbol counts as converged once its maximum marginal reaches
    /// `1 - convergence_tolerance`.
    pub convergence_tolerance: f64,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self { damping: 0.2, max_iter: 20, convergence_tolerance: 0.05 }
    }
}

/// Output of any detector.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub x_hat: DafVector,
    pub patterns: Vec<ActivationPattern>,
    pub symbols: Vec<Vec<Complex64>>,
    pub bits: Vec<bool>,
    pub iterations_used: usize,
    /// FLOP count per the closed-form complexity formulas.
    pub flops: f64,
}

/// Sparse factor graph derived from the nonzero pattern of `H_eff`,
/// with the augmented alphabet `M_B = M_A ∪ {0}` (zero last).
#[derive(Debug, Clone)]
pub struct FactorGraph {
    pub(crate) n: usize,
    /// Augmented alphabet, alphabet points first, zero at index `M`.
    pub(crate) mb: Vec<Complex64>,
    /// Channel coefficient of each edge.
    pub(crate) edge_gain: Vec<Complex64>,
    /// Edge indices of each row (observation node).
    pub(crate) rows: Vec<Vec<usize>>,
    /// Edge indices of each column (variable node).
    pub(crate) cols: Vec<Vec<usize>>,
}

impl FactorGraph {
    pub fn new(h_eff: &DMatrix<Complex64>, alphabet: &[Complex64]) -> Self {
        let n = h_eff.nrows();
        let mut mb = alphabet.to_vec();
        mb.push(Complex64::default());
        let mut edge_gain = Vec::new();
        let mut rows = vec![Vec::new(); n];
        let mut cols = vec![Vec::new(); n];
        for r in 0..n {
            for c in 0..n {
                let h = h_eff[(r, c)];
                if h.norm() > EDGE_THRESHOLD {
                    rows[r].push(edge_gain.len());
                    cols[c].push(edge_gain.len());
                    edge_gain.push(h);
                }
            }
        }
        Self { n, mb, edge_gain, rows, cols }
    }

    /// Alphabet size `M` (without the zero point).
    pub fn alphabet_len(&self) -> usize {
        self.mb.len() - 1
    }
}

/// All working probabilities of one DLMP/MP run.
///
/// PMFs over `M_B` are indexed like [`FactorGraph::mb`]; activation PMFs
/// are `[p(inactive), p(active)]`.
#[derive(Debug, Clone)]
pub struct MessageState {
    /// Observation-to-variable messages, one PMF per edge.
    pub v: Vec<Vec<f64>>,
    /// Variable-to-observation extrinsic PMFs, one per edge.
    pub pr: Vec<Vec<f64>>,
    /// Per-variable activation posteriors `f_c`.
    pub f: Vec<[f64; 2]>,
    /// Constraint-to-indicator messages `u_c`.
    pub u: Vec<[f64; 2]>,
    /// Convergence indicator trajectory.
    pub xi_history: Vec<f64>,
    /// Best-so-far symbol marginals, `N x |M_B|`.
    pub best_marginals: Vec<Vec<f64>>,
    pub iteration: usize,
}

impl MessageState {
    /// Uniform initialization per the detector's first-iteration contract.
    pub fn new(graph: &FactorGraph) -> Self {
        let mb_len = graph.mb.len();
        let uniform = vec![1.0 / mb_len as f64; mb_len];
        Self {
            v: vec![uniform.clone(); graph.edge_gain.len()],
            pr: vec![uniform.clone(); graph.edge_gain.len()],
            f: vec![[0.5, 0.5]; graph.n],
            u: vec![[0.5, 0.5]; graph.n],
            xi_history: Vec::new(),
            best_marginals: vec![uniform; graph.n],
            iteration: 0,
        }
    }
}

pub(crate) fn normalize(pmf: &mut [f64]) {
    for p in pmf.iter_mut() {
        if !p.is_finite() || *p < PMF_FLOOR {
            *p = PMF_FLOOR;
        }
    }
    let sum: f64 = pmf.iter().sum();
    for p in pmf.iter_mut() {
        *p /= sum;
    }
}

/// Picks the `m` highest-scoring positions of `scores`, returned sorted.
pub(crate) fn top_m(scores: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut chosen: Vec<usize> = idx.into_iter().take(m).collect();
    chosen.sort_unstable();
    chosen
}

/// Projects a detected support onto the nearest pattern-table entry
/// (Hamming distance on supports, lowest table index on ties).
pub(crate) fn project_support(support: &[usize], table: &[ActivationPattern]) -> usize {
    table
        .iter()
        .enumerate()
        .min_by_key(|(_, pat)| {
            let overlap = pat.indices.iter().filter(|k| support.contains(k)).count();
            pat.indices.len() + support.len() - 2 * overlap
        })
        .map(|(i, _)| i)
        .unwrap()
}

/// Shared final decision: per-group (Scheme I) or per-subblock-merged
/// (Scheme II) top-`m` supports projected onto the pattern table, then a
/// per-active-carrier symbol decision from `marginals` restricted to the
/// constellation.
pub(crate) fn decide(
    activation_scores: &[f64],
    marginals: &[Vec<f64>],
    im: &ImConfig,
) -> Result<(DafVector, Vec<ActivationPattern>, Vec<Vec<Complex64>>, Vec<bool>)> {
    let table = pattern_table(im.n, im.m)?;
    let m_len = im.mod_order;
    let groups = im.total_groups();
    let mut patterns = Vec::with_capacity(groups);

    match im.scheme {
        ImScheme::SchemeI => {
            for group in 0..groups {
                let base = group * im.n;
                let support = top_m(&activation_scores[base..base + im.n], im.m);
                patterns.push(table[project_support(&support, &table)].clone());
            }
        }
        ImScheme::SchemeII => {
            for block in 0..im.subblocks {
                let mut merged = vec![0.0; im.n];
                for i in 0..im.g {
                    let base = (block * im.g + i) * im.n;
                    for (k, acc) in merged.iter_mut().enumerate() {
                        *acc += activation_scores[base + k];
                    }
                }
                let support = top_m(&merged, im.m);
                let pattern = table[project_support(&support, &table)].clone();
                for _ in 0..im.g {
                    patterns.push(pattern.clone());
                }
            }
        }
    }

    let n_total = im.total_carriers();
    let mut x_hat = DVector::zeros(n_total);
    let mut symbols = Vec::with_capacity(groups);
    for (group, pattern) in patterns.iter().enumerate() {
        let base = group * im.n;
        let mut q = Vec::with_capacity(im.m);
        for &k in &pattern.indices {
            let c = base + k;
            let best = (0..m_len)
                .max_by(|&a, &b| marginals[c][a].partial_cmp(&marginals[c][b]).unwrap())
                .unwrap();
            let point = im.alphabet[best];
            x_hat[c] = point;
            q.push(point);
        }
        symbols.push(q);
    }
    let bits = decode(&patterns, &symbols, im)?;
    Ok((DafVector::new(x_hat), patterns, symbols, bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_m_breaks_ties_low_index() {
        assert_eq!(top_m(&[0.5, 0.5, 0.1, 0.5], 2), vec![0, 1]);
    }

    #[test]
    fn projection_keeps_valid_support() {
        let table = pattern_table(4, 2).unwrap();
        assert_eq!(project_support(&[1, 2], &table), 1);
    }

    #[test]
    fn projection_maps_invalid_support_to_nearest() {
        // {0, 2} is not in the (4,2) table; nearest are {0,1},{1,2},{2,3},{0,3}
        // all at distance 2; lowest index wins.
        let table = pattern_table(4, 2).unwrap();
        assert_eq!(project_support(&[0, 2], &table), 0);
    }

    #[test]
    fn graph_edges_follow_sparsity() {
        let mut h = DMatrix::<Complex64>::zeros(3, 3);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(1, 2)] = Complex64::new(0.0, 1.0);
        let g = FactorGraph::new(&h, &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(g.edge_gain.len(), 2);
        assert_eq!(g.rows[0].len(), 1);
        assert_eq!(g.cols[2].len(), 1);
        assert_eq!(g.mb.len(), 3);
        assert_eq!(g.mb[2], Complex64::default());
    }
}
