//! Double-layer message passing and its single-layer baseline.
//!
//! Layer 1 exchanges symbol PMFs over the augmented alphabet
//! `M_B = M_A ∪ {0}` between observation and variable nodes under a
//! Gaussian interference approximation. Layer 2 (DLMP only) exchanges
//! activation probabilities between per-variable indicator nodes and
//! per-group constraint nodes enforcing exactly `m` active subcarriers.

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::transform::DafVector;
use crate::types::{AfdmParams, ImConfig};
use crate::Result;

use super::flops::{flop_estimate, DetectorKind};
use super::{decide, normalize, DetectionResult, DetectorOptions, FactorGraph, MessageState};

/// Variance floor relative to the noise floor, guarding degenerate
/// noiseless edges.
const VAR_FLOOR_FACTOR: f64 = 1e-12;

fn pmf_mean_var(pmf: &[f64], mb: &[Complex64]) -> (Complex64, f64) {
    let mut mean = Complex64::default();
    let mut second = 0.0;
    for (p, x) in pmf.iter().zip(mb) {
        mean += x * *p;
        second += p * x.norm_sqr();
    }
    (mean, second - mean.norm_sqr())
}

/// Observation-node update: Gaussian-approximate interference per edge,
/// then `v_{r,c}(x) ∝ exp(-|y[r] - mu - h x|^2 / sigma^2)` over `M_B`.
pub fn observation_update(
    graph: &FactorGraph,
    state: &mut MessageState,
    y: &DafVector,
    n0: f64,
) {
    let floor = VAR_FLOOR_FACTOR * n0;
    for r in 0..graph.n {
        let mut mu_total = Complex64::default();
        let mut var_total = 0.0;
        let stats: Vec<(Complex64, f64)> = graph.rows[r]
            .iter()
            .map(|&e| {
                let (mean, var) = pmf_mean_var(&state.pr[e], &graph.mb);
                let h = graph.edge_gain[e];
                let contrib = (h * mean, h.norm_sqr() * var);
                mu_total += contrib.0;
                var_total += contrib.1;
                contrib
            })
            .collect();
        for (&e, &(h_mean, h_var)) in graph.rows[r].iter().zip(&stats) {
            let h = graph.edge_gain[e];
            let mu = mu_total - h_mean;
            let sigma2 = (var_total - h_var + n0).max(floor);
            let residual = y.values[r] - mu;
            let exponents: Vec<f64> = graph
                .mb
                .iter()
                .map(|x| -(residual - h * x).norm_sqr() / sigma2)
                .collect();
            let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (slot, ex) in state.v[e].iter_mut().zip(&exponents) {
                *slot = (ex - shift).exp();
            }
            normalize(&mut state.v[e]);
        }
    }
}

/// Per-column log-products of the incoming `v` messages, `N x |M_B|`.
fn column_log_products(graph: &FactorGraph, state: &MessageState) -> Vec<Vec<f64>> {
    let mb_len = graph.mb.len();
    (0..graph.n)
        .map(|c| {
            let mut acc = vec![0.0; mb_len];
            for &e in &graph.cols[c] {
                for (a, v) in acc.iter_mut().zip(&state.v[e]) {
                    *a += v.ln();
                }
            }
            acc
        })
        .collect()
}

fn exp_normalized(log_pmf: &[f64]) -> Vec<f64> {
    let shift = log_pmf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pmf: Vec<f64> = log_pmf.iter().map(|l| (l - shift).exp()).collect();
    normalize(&mut pmf);
    pmf
}

/// Indicator-node update: activation posterior from the product of the
/// incoming symbol messages, damped against the previous value.
pub fn indicator_update(graph: &FactorGraph, state: &mut MessageState, opts: &DetectorOptions) {
    let m_len = graph.alphabet_len();
    let logs = column_log_products(graph, state);
    for c in 0..graph.n {
        let shift = logs[c].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let active: f64 = logs[c][..m_len].iter().map(|l| (l - shift).exp()).sum();
        let inactive = (logs[c][m_len] - shift).exp();
        let mut f = [inactive, active];
        normalize(&mut f);
        state.f[c][0] = opts.damping * f[0] + (1.0 - opts.damping) * state.f[c][0];
        state.f[c][1] = opts.damping * f[1] + (1.0 - opts.damping) * state.f[c][1];
    }
}

/// Poisson-binomial PMF of the activation count over `probs`.
fn count_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &w) in pmf.iter().enumerate() {
            next[k] += w * (1.0 - p);
            next[k + 1] += w * p;
        }
        pmf = next;
    }
    pmf
}

/// Constraint-node update: leave-one-out activation-count PMFs per group,
/// `u_c(1) ∝ Im_c(m-1)`, `u_c(0) ∝ Im_c(m)`.
pub fn constraint_update(graph: &FactorGraph, state: &mut MessageState, im: &ImConfig) {
    for group in 0..graph.n / im.n {
        let base = group * im.n;
        for c in base..base + im.n {
            let others: Vec<f64> = (base..base + im.n)
                .filter(|&e| e != c)
                .map(|e| state.f[e][1])
                .collect();
            let pmf = count_pmf(&others);
            let active = if im.m >= 1 { pmf[im.m - 1] } else { 0.0 };
            let inactive = if im.m < pmf.len() { pmf[im.m] } else { 0.0 };
            let mut u = [inactive, active];
            normalize(&mut u);
            state.u[c] = u;
        }
    }
}

/// Variable-node update: extrinsic PMFs
/// `Pr_{c,r}(x) ∝ u_c(ς(x)) Π_{e≠r} v_{e,c}(x)`, damped.
pub fn variable_update(graph: &FactorGraph, state: &mut MessageState, opts: &DetectorOptions) {
    let m_len = graph.alphabet_len();
    let logs = column_log_products(graph, state);
    for c in 0..graph.n {
        let log_u = [state.u[c][1].max(super::PMF_FLOOR).ln(), state.u[c][0].max(super::PMF_FLOOR).ln()];
        for &e in &graph.cols[c] {
            let log_pmf: Vec<f64> = logs[c]
                .iter()
                .zip(&state.v[e])
                .enumerate()
                .map(|(x, (total, own))| {
                    total - own.ln() + if x < m_len { log_u[0] } else { log_u[1] }
                })
                .collect();
            let pmf = exp_normalized(&log_pmf);
            for (slot, p) in state.pr[e].iter_mut().zip(&pmf) {
                *slot = opts.damping * p + (1.0 - opts.damping) * *slot;
            }
            normalize(&mut state.pr[e]);
        }
    }
}

/// Full symbol marginals `Pr_c(x) ∝ u_c(ς(x)) Π_r v_{r,c}(x)` and the
/// convergence indicator `ξ` (fraction of carriers whose top marginal
/// reached `1 - tolerance`).
fn marginals_and_xi(
    graph: &FactorGraph,
    state: &MessageState,
    opts: &DetectorOptions,
) -> (Vec<Vec<f64>>, f64) {
    let m_len = graph.alphabet_len();
    let logs = column_log_products(graph, state);
    let mut converged = 0usize;
    let marginals: Vec<Vec<f64>> = (0..graph.n)
        .map(|c| {
            let log_u = [
                state.u[c][1].max(super::PMF_FLOOR).ln(),
                state.u[c][0].max(super::PMF_FLOOR).ln(),
            ];
            let log_pmf: Vec<f64> = logs[c]
                .iter()
                .enumerate()
                .map(|(x, total)| total + if x < m_len { log_u[0] } else { log_u[1] })
                .collect();
            let pmf = exp_normalized(&log_pmf);
            if pmf.iter().cloned().fold(0.0, f64::max) >= 1.0 - opts.convergence_tolerance {
                converged += 1;
            }
            pmf
        })
        .collect();
    (marginals, converged as f64 / graph.n as f64)
}

struct LoopOutcome {
    state: MessageState,
    iterations: usize,
}

fn run_loop(
    graph: &FactorGraph,
    y: &DafVector,
    im: &ImConfig,
    n0: f64,
    opts: &DetectorOptions,
    with_constraint_layer: bool,
) -> LoopOutcome {
    let mut state = MessageState::new(graph);
    let mut xi_prev = -1.0;
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        iterations = iter;
        observation_update(graph, &mut state, y, n0);
        if with_constraint_layer {
            indicator_update(graph, &mut state, opts);
            constraint_update(graph, &mut state, im);
        }
        variable_update(graph, &mut state, opts);
        let (marginals, xi) = marginals_and_xi(graph, &state, opts);
        if xi > xi_prev {
            state.best_marginals = marginals;
        }
        state.xi_history.push(xi);
        state.iteration = iter;
        if xi == 1.0 {
            break;
        }
        xi_prev = xi;
    }
    LoopOutcome { state, iterations }
}

fn path_count(eff: &EffectiveChannel) -> usize {
    eff.components.first().map(|p| p.len()).unwrap_or(0)
}

/// Double-layer message-passing detection.
pub fn dlmp_detect(
    y: &DafVector,
    eff: &EffectiveChannel,
    im: &ImConfig,
    params: &AfdmParams,
    opts: &DetectorOptions,
) -> Result<DetectionResult> {
    let graph = FactorGraph::new(&eff.h_eff, &im.alphabet);
    let out = run_loop(&graph, y, im, params.noise_var, opts, true);
    let scores: Vec<f64> = out.state.f.iter().map(|f| f[1]).collect();
    let (x_hat, patterns, symbols, bits) = decide(&scores, &out.state.best_marginals, im)?;
    Ok(DetectionResult {
        x_hat,
        patterns,
        symbols,
        bits,
        iterations_used: out.iterations,
        flops: flop_estimate(
            DetectorKind::Dlmp,
            params.n,
            path_count(eff),
            eff.nt,
            im.mod_order,
            im.n,
            out.iterations as f64,
        ),
    })
}

/// Single-layer message-passing baseline: no indicator/constraint layer,
/// activation scored by the constellation mass of the marginals.
pub fn mp_detect(
    y: &DafVector,
    eff: &EffectiveChannel,
    im: &ImConfig,
    params: &AfdmParams,
    opts: &DetectorOptions,
) -> Result<DetectionResult> {
    let graph = FactorGraph::new(&eff.h_eff, &im.alphabet);
    let out = run_loop(&graph, y, im, params.noise_var, opts, false);
    let m_len = graph.alphabet_len();
    let scores: Vec<f64> = out
        .state
        .best_marginals
        .iter()
        .map(|pmf| pmf[..m_len].iter().sum())
        .collect();
    let (x_hat, patterns, symbols, bits) = decide(&scores, &out.state.best_marginals, im)?;
    Ok(DetectionResult {
        x_hat,
        patterns,
        symbols,
        bits,
        iterations_used: out.iterations,
        flops: flop_estimate(
            DetectorKind::Mp,
            params.n,
            path_count(eff),
            eff.nt,
            im.mod_order,
            im.n,
            out.iterations as f64,
        ),
    })
}

/// Runs the full DLMP iteration and returns the final message state
/// (marginals, activation posteriors, convergence trajectory) for
/// diagnostics.
pub fn dlmp_diagnostics(
    y: &DafVector,
    eff: &EffectiveChannel,
    im: &ImConfig,
    n0: f64,
    opts: &DetectorOptions,
) -> MessageState {
    let graph = FactorGraph::new(&eff.h_eff, &im.alphabet);
    run_loop(&graph, y, im, n0, opts, true).state
}
