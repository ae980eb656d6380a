//! Linear time-varying channel: path sampling, per-path chirp-domain
//! subchannel matrices, effective channel assembly, full-diversity
//! parameter rules, and the reference time-domain propagation path.
//!
//! With integer Doppler shifts each per-path matrix is a permutation with
//! unit-modulus phases: row `vb` has its single nonzero at column
//! `[vb + loc]_N` with `loc = -alpha + 2 N lambda1 (l + l_eps)`. With
//! fractional Doppler the energy smears over the whole row following the
//! Dirichlet kernel; receivers truncate it to a window of half-width
//! `k_alpha` around the integer-Doppler location.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{PI, TAU};

use crate::transform::{lambda1_frac, TimeVector};
use crate::types::{AfdmParams, ChannelConfig, DopplerMode};
use crate::{AfdmError, Result};

/// One propagation path between a transmit antenna and the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    /// Normalized delay in samples, `0 <= delay <= l_max`.
    pub delay: usize,
    /// Normalized Doppler shift; an exact integer in integer mode.
    pub doppler: f64,
}

/// Per-antenna path sets of one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `per_antenna[eps]` holds the `P` paths of antenna `eps`.
    pub per_antenna: Vec<Vec<Path>>,
}

/// The assembled chirp-domain channel and its per-path components.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// `h_eff = (1/sqrt(Nt)) sum_{eps,l} h_{eps,l} H_{eps,l}`.
    pub h_eff: DMatrix<Complex64>,
    /// `components[eps][l]` is the gain-free matrix `H_{eps,l}`.
    pub components: Vec<Vec<DMatrix<Complex64>>>,
    pub nt: usize,
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Draws complex Gaussian CN(0, var).
fn cn_sample(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Samples one channel realization with independent fading per antenna.
///
/// Integer mode draws `P` distinct `(delay, doppler)` grid points per
/// antenna; fractional mode draws integer delays uniformly and Doppler
/// shifts `alpha_max cos(theta)` with `theta ~ U[-pi, pi]` (Jakes
/// spectrum). Gains are CN(0, 1/P).
pub fn sample_channel(cfg: &ChannelConfig, nt: usize, rng_seed: u64) -> Result<ChannelRealization> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let p = cfg.paths;
    let gain_var = 1.0 / p as f64;
    let mut per_antenna = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut paths = Vec::with_capacity(p);
        match cfg.doppler_mode {
            DopplerMode::Integer => {
                let grid = cfg.max_paths();
                if p > grid {
                    return Err(AfdmError::InvalidConfig(format!(
                        "P = {p} exceeds grid size {grid}"
                    )));
                }
                // partial Fisher-Yates over the flattened (delay, doppler) grid
                let mut cells: Vec<usize> = (0..grid).collect();
                for k in 0..p {
                    let j = rng.random_range(k..grid);
                    cells.swap(k, j);
                    let delay = cells[k] / (2 * cfg.alpha_max + 1);
                    let alpha =
                        (cells[k] % (2 * cfg.alpha_max + 1)) as i64 - cfg.alpha_max as i64;
                    paths.push(Path {
                        gain: cn_sample(&mut rng, gain_var),
                        delay,
                        doppler: alpha as f64,
                    });
                }
            }
            DopplerMode::Fractional => {
                for _ in 0..p {
                    let delay = rng.random_range(0..=cfg.l_max);
                    let theta = rng.random_range(-PI..PI);
                    paths.push(Path {
                        gain: cn_sample(&mut rng, gain_var),
                        delay,
                        doppler: cfg.alpha_max as f64 * theta.cos(),
                    });
                }
            }
        }
        per_antenna.push(paths);
    }
    Ok(ChannelRealization { per_antenna })
}

/// Phase `exp(j 2 pi zeta / N)` with
/// `zeta = N lambda2 (v^2 - vb^2) - v (l + l_eps) + N lambda1 (l + l_eps)^2`,
/// evaluated with the `lambda1` and `v (l + l_eps) / N` terms reduced
/// exactly.
fn zeta_phase(params: &AfdmParams, vb: usize, v: usize, total_delay: usize) -> Complex64 {
    // zeta / N as a fraction of a full turn, term by term:
    let t_lambda2 = params.lambda2 * ((v * v) as f64 - (vb * vb) as f64);
    let t_delay = -(((v * total_delay) % params.n) as f64) / params.n as f64;
    let t_lambda1 = lambda1_frac(params, (total_delay * total_delay) as i64);
    cis(TAU * (t_lambda2 + t_delay + t_lambda1))
}

/// Integer-Doppler support column for row `vb`.
fn integer_support(params: &AfdmParams, alpha: i64, total_delay: usize, vb: usize) -> usize {
    let loc = -alpha + params.two_n_lambda1() * total_delay as i64;
    (vb as i64 + loc).rem_euclid(params.n as i64) as usize
}

/// Dirichlet-kernel factor of the fractional-Doppler kernel:
/// the closed-form geometric sum `sum_n exp(j 2 pi n b / N)` with
/// `b = v - vb + alpha - 2 N lambda1 (l + l_eps)`.
fn kernel_sum(n: usize, b: f64) -> Complex64 {
    let delta = b - (b / n as f64).round() * n as f64;
    if delta.abs() < 1e-12 {
        return Complex64::new(n as f64, 0.0);
    }
    let num = (PI * b).sin();
    let den = (PI * b / n as f64).sin();
    cis(PI * b * (n as f64 - 1.0) / n as f64) * (num / den)
}

/// Untruncated per-path subchannel matrix from the closed-form kernel.
///
/// Valid for any real Doppler; for exact integer Doppler it reduces to the
/// permutation-with-phases matrix. This is the propagation truth in
/// fractional mode.
pub fn subchannel_matrix_exact(
    path: &Path,
    antenna_delay: usize,
    params: &AfdmParams,
) -> DMatrix<Complex64> {
    let n = params.n;
    let total_delay = path.delay + antenna_delay;
    let two_n_l1 = params.two_n_lambda1() as f64;
    DMatrix::from_fn(n, n, |vb, v| {
        let b = v as f64 - vb as f64 + path.doppler - two_n_l1 * total_delay as f64;
        zeta_phase(params, vb, v, total_delay) * kernel_sum(n, b) / n as f64
    })
}

/// Per-path subchannel matrix as seen by the receiver.
///
/// Integer mode: one unit-modulus entry per row. Fractional mode: the
/// exact kernel truncated to the cyclic window of half-width `k_alpha`
/// around the integer-Doppler support.
pub fn subchannel_matrix(
    path: &Path,
    antenna_delay: usize,
    params: &AfdmParams,
    cfg: &ChannelConfig,
) -> DMatrix<Complex64> {
    let n = params.n;
    let total_delay = path.delay + antenna_delay;
    match cfg.doppler_mode {
        DopplerMode::Integer => {
            let alpha = path.doppler.round() as i64;
            let mut h = DMatrix::zeros(n, n);
            for vb in 0..n {
                let v = integer_support(params, alpha, total_delay, vb);
                h[(vb, v)] = zeta_phase(params, vb, v, total_delay);
            }
            h
        }
        DopplerMode::Fractional => {
            let exact = subchannel_matrix_exact(path, antenna_delay, params);
            let alpha_int = path.doppler.round() as i64;
            let mut h = DMatrix::zeros(n, n);
            for vb in 0..n {
                let center = integer_support(params, alpha_int, total_delay, vb) as i64;
                for off in -(cfg.k_alpha as i64)..=cfg.k_alpha as i64 {
                    let v = (center + off).rem_euclid(n as i64) as usize;
                    h[(vb, v)] = exact[(vb, v)];
                }
            }
            h
        }
    }
}

fn assemble(
    real: &ChannelRealization,
    params: &AfdmParams,
    build: impl Fn(&Path, usize) -> DMatrix<Complex64>,
) -> EffectiveChannel {
    let n = params.n;
    let nt = real.per_antenna.len();
    let scale = (nt as f64).sqrt().recip();
    let mut h_eff = DMatrix::<Complex64>::zeros(n, n);
    let mut components = Vec::with_capacity(nt);
    for (eps, paths) in real.per_antenna.iter().enumerate() {
        let mut per_path = Vec::with_capacity(paths.len());
        for path in paths {
            let h = build(path, params.cyclic_delays[eps]);
            h_eff += &h * (path.gain * scale);
            per_path.push(h);
        }
        components.push(per_path);
    }
    EffectiveChannel { h_eff, components, nt }
}

/// Assembles the receiver-side effective channel (truncated kernel in
/// fractional mode).
pub fn effective_channel(
    real: &ChannelRealization,
    params: &AfdmParams,
    cfg: &ChannelConfig,
) -> EffectiveChannel {
    assemble(real, params, |path, d| subchannel_matrix(path, d, params, cfg))
}

/// Assembles the untruncated effective channel (propagation truth).
pub fn effective_channel_exact(real: &ChannelRealization, params: &AfdmParams) -> EffectiveChannel {
    assemble(real, params, |path, d| subchannel_matrix_exact(path, d, params))
}

/// The published chirp-rate setting guaranteeing disjoint per-path
/// supports: `(2 alpha_max + 1)/(2N)` for integer Doppler,
/// `(2 alpha_max + 2 k_alpha + 1)/(2N)` for fractional.
pub fn recommend_lambda1(cfg: &ChannelConfig, n: usize) -> Ratio<i64> {
    let num = match cfg.doppler_mode {
        DopplerMode::Integer => 2 * cfg.alpha_max as i64 + 1,
        DopplerMode::Fractional => 2 * cfg.alpha_max as i64 + 2 * cfg.k_alpha as i64 + 1,
    };
    Ratio::new(num, 2 * n as i64)
}

/// Minimum cyclic delay interval between adjacent antennas under the
/// recommended `lambda1`: `l_max + 1`.
pub fn min_cyclic_delay(cfg: &ChannelConfig, n: usize, lambda1: Ratio<i64>) -> usize {
    // Under the recommended lambda1 the strict separation condition
    // l_max + 2 alpha_max / (2 N lambda1) < delta holds already at l_max + 1.
    let two_n_l1 = lambda1 * Ratio::from_integer(2 * n as i64);
    debug_assert!(
        Ratio::from_integer(2 * cfg.alpha_max as i64) < two_n_l1,
        "lambda1 too small for delta = l_max + 1"
    );
    cfg.l_max + 1
}

/// Whether the delay-Doppler-antenna paths all fit into `N` subcarriers.
pub fn full_diversity_ok(cfg: &ChannelConfig, n: usize, nt: usize) -> bool {
    let per_path = match cfg.doppler_mode {
        DopplerMode::Integer => 2 * cfg.alpha_max + 1,
        DopplerMode::Fractional => 2 * cfg.alpha_max + 2 * cfg.k_alpha + 1,
    };
    (cfg.l_max + 1) * per_path * nt <= n
}

/// Reference time-domain propagation:
/// `r[t] = sum_{eps,l} h s[t - l_eps - l] e^{j 2 pi alpha t / N} + w`,
/// where `s` is the prefixed signal scaled by `1/sqrt(Nt)` and the cyclic
/// delays act as index shifts into the chirp-periodic prefix.
///
/// Returns the received block with the (discarded) prefix region zeroed,
/// ready for `remove_cpp`. `noise_var = 0` gives the noiseless output.
pub fn time_domain_propagate(
    s_cpp: &TimeVector,
    real: &ChannelRealization,
    params: &AfdmParams,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<TimeVector> {
    let n = params.n;
    if s_cpp.prefix_len != params.cpp_len || s_cpp.body_len() != n {
        return Err(AfdmError::LengthMismatch {
            expected: n + params.cpp_len,
            actual: s_cpp.values.len(),
        });
    }
    let nt = real.per_antenna.len();
    let scale = (nt as f64).sqrt().recip();
    let mut r = DVector::<Complex64>::zeros(params.cpp_len + n);
    for (eps, paths) in real.per_antenna.iter().enumerate() {
        let l_eps = params.cyclic_delays[eps];
        for path in paths {
            let shift = (l_eps + path.delay) as isize;
            if shift > params.cpp_len as isize {
                return Err(AfdmError::PrefixTooShort {
                    needed: shift as usize,
                    have: params.cpp_len,
                });
            }
            for t in 0..n {
                let tap = s_cpp.sample(t as isize - shift) * scale;
                r[params.cpp_len + t] +=
                    path.gain * tap * cis(TAU * path.doppler * t as f64 / n as f64);
            }
        }
    }
    if noise_var > 0.0 {
        for t in 0..n {
            r[params.cpp_len + t] += cn_sample(rng, noise_var);
        }
    }
    Ok(TimeVector::new(r, params.cpp_len))
}

/// Serializes a realization to plain-text records
/// `antenna path re_gain im_gain delay doppler`, one per line.
pub fn realization_to_records(real: &ChannelRealization) -> String {
    let mut out = String::new();
    for (eps, paths) in real.per_antenna.iter().enumerate() {
        for (l, path) in paths.iter().enumerate() {
            out.push_str(&format!(
                "{eps} {l} {:.17e} {:.17e} {} {:.17e}\n",
                path.gain.re, path.gain.im, path.delay, path.doppler
            ));
        }
    }
    out
}

/// Parses the record format written by [`realization_to_records`].
pub fn realization_from_records(text: &str) -> Result<ChannelRealization> {
    let mut per_antenna: Vec<Vec<Path>> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(AfdmError::InvalidConfig(format!("bad channel record: {line}")));
        }
        let eps: usize = fields[0]
            .parse()
            .map_err(|_| AfdmError::InvalidConfig(format!("bad antenna index: {line}")))?;
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| AfdmError::InvalidConfig(format!("bad number in record: {line}")))
        };
        let path = Path {
            gain: Complex64::new(parse_f(fields[2])?, parse_f(fields[3])?),
            delay: fields[4]
                .parse()
                .map_err(|_| AfdmError::InvalidConfig(format!("bad delay: {line}")))?,
            doppler: parse_f(fields[5])?,
        };
        if per_antenna.len() <= eps {
            per_antenna.resize(eps + 1, Vec::new());
        }
        per_antenna[eps].push(path);
    }
    if per_antenna.is_empty() {
        return Err(AfdmError::InvalidConfig("empty channel record".into()));
    }
    Ok(ChannelRealization { per_antenna })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{add_cpp, daft, idaft, remove_cpp, DafVector};
    use rand::prelude::*;

    fn params(
        n: usize,
        lambda1: Ratio<i64>,
        cpp: usize,
        delays: Vec<usize>,
    ) -> AfdmParams {
        AfdmParams::new(n, lambda1, 0.0, cpp, delays, 1.0).unwrap()
    }

    fn int_cfg(p: usize, l_max: usize, alpha_max: usize) -> ChannelConfig {
        ChannelConfig::new(p, l_max, alpha_max, DopplerMode::Integer, 0).unwrap()
    }

    #[test]
    fn exhausted_grid_yields_all_pairs() {
        let cfg = int_cfg(3, 0, 1);
        let real = sample_channel(&cfg, 1, 7).unwrap();
        let mut pairs: Vec<(usize, i64)> =
            real.per_antenna[0].iter().map(|p| (p.delay, p.doppler as i64)).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, -1), (0, 0), (0, 1)]);
    }

    #[test]
    fn gain_power_is_unit_per_antenna() {
        let cfg = int_cfg(2, 1, 1);
        let mut total = 0.0;
        let draws = 100_000;
        for seed in 0..draws {
            let real = sample_channel(&cfg, 1, seed).unwrap();
            total += real.per_antenna[0].iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        }
        let mean = total / draws as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean path power {mean}");
    }

    #[test]
    fn fractional_doppler_follows_arcsine_law() {
        let cfg = ChannelConfig::new(1, 0, 1, DopplerMode::Fractional, 1).unwrap();
        let n = 10_000;
        let mut samples: Vec<f64> = (0..n)
            .map(|seed| sample_channel(&cfg, 1, seed).unwrap().per_antenna[0][0].doppler)
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // KS statistic against the arcsine CDF of alpha_max * cos(theta)
        let cdf = |x: f64| 0.5 + (x.clamp(-1.0, 1.0)).asin() / PI;
        let mut d: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        // critical value at p = 0.01 is 1.628 / sqrt(n)
        assert!(d * (n as f64).sqrt() < 1.628, "KS statistic {d}");
    }

    #[test]
    fn worked_example_identity_matrix() {
        // N=4, lambda1=1/8, l=0, l_eps=0, alpha=0 -> identity.
        let p = params(4, Ratio::new(1, 8), 0, vec![0]);
        let path = Path { gain: Complex64::new(1.0, 0.0), delay: 0, doppler: 0.0 };
        let h = subchannel_matrix(&path, 0, &p, &int_cfg(1, 0, 1));
        assert!((h - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn worked_example_phase_diagonal() {
        // N=4, lambda1=1/8, l=0, l_eps=1, alpha=1 ->
        // diag(e^{j pi/4}, e^{-j pi/4}, e^{-j 3 pi/4}, e^{-j 5 pi/4}).
        let p = params(4, Ratio::new(1, 8), 0, vec![0]);
        let path = Path { gain: Complex64::new(1.0, 0.0), delay: 0, doppler: 1.0 };
        let h = subchannel_matrix(&path, 1, &p, &int_cfg(1, 0, 1));
        let want = [PI / 4.0, -PI / 4.0, -3.0 * PI / 4.0, -5.0 * PI / 4.0];
        for (vb, &phase) in want.iter().enumerate() {
            for v in 0..4 {
                let expect = if v == vb { cis(phase) } else { Complex64::default() };
                assert!((h[(vb, v)] - expect).norm() < 1e-12, "entry ({vb},{v})");
            }
        }
    }

    #[test]
    fn fractional_limit_recovers_integer_matrix() {
        let p = params(8, Ratio::new(3, 16), 0, vec![0]);
        let int_path = Path { gain: Complex64::new(1.0, 0.0), delay: 1, doppler: -1.0 };
        let frac_path = Path { doppler: -1.0 + 1e-9, ..int_path };
        let h_int = subchannel_matrix(&int_path, 0, &p, &int_cfg(3, 1, 1));
        let h_frac = subchannel_matrix_exact(&frac_path, 0, &p);
        assert!((h_int - h_frac).norm() < 1e-5);
    }

    #[test]
    fn integer_matrix_is_permutation_with_phases() {
        let p = params(16, Ratio::new(3, 32), 0, vec![0]);
        let path = Path { gain: Complex64::new(1.0, 0.0), delay: 1, doppler: 1.0 };
        let h = subchannel_matrix(&path, 0, &p, &int_cfg(3, 1, 1));
        for vb in 0..16 {
            let row_nnz = (0..16).filter(|&v| h[(vb, v)].norm() > 0.0).count();
            let col_nnz = (0..16).filter(|&v| h[(v, vb)].norm() > 0.0).count();
            assert_eq!(row_nnz, 1);
            assert_eq!(col_nnz, 1);
            let v = (0..16).find(|&v| h[(vb, v)].norm() > 0.0).unwrap();
            assert!((h[(vb, v)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_channel_trivial_cases() {
        let p = params(4, Ratio::new(1, 8), 0, vec![0]);
        let cfg = int_cfg(1, 0, 0);
        let mk = |gain: f64| ChannelRealization {
            per_antenna: vec![vec![Path {
                gain: Complex64::new(gain, 0.0),
                delay: 0,
                doppler: 0.0,
            }]],
        };
        let eff = effective_channel(&mk(1.0), &p, &cfg);
        assert!((&eff.h_eff - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-12);
        // linearity in the gain
        let eff2 = effective_channel(&mk(2.0), &p, &cfg);
        assert!((&eff2.h_eff - &eff.h_eff * Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn disjoint_supports_under_recommended_parameters() {
        for (l_max, alpha_max, nt, n) in [(0usize, 1usize, 2usize, 16usize), (1, 1, 2, 16), (0, 1, 3, 16), (1, 0, 4, 16)] {
            let p_count = (l_max + 1) * (2 * alpha_max + 1);
            let cfg = int_cfg(p_count, l_max, alpha_max);
            let lambda1 = recommend_lambda1(&cfg, n);
            let delta = min_cyclic_delay(&cfg, n, lambda1);
            let delays: Vec<usize> = (0..nt).map(|e| e * delta).collect();
            let cpp = l_max + delays[nt - 1];
            let p = params(n, lambda1, cpp, delays);
            let real = sample_channel(&cfg, nt, 42).unwrap();
            let eff = effective_channel(&real, &p, &cfg);
            let nnz = eff.h_eff.iter().filter(|e| e.norm() > 1e-12).count();
            assert_eq!(nnz, n * nt * p_count, "l_max={l_max} alpha_max={alpha_max} nt={nt}");
        }
    }

    #[test]
    fn recommended_lambda1_values() {
        assert_eq!(recommend_lambda1(&int_cfg(1, 0, 1), 4), Ratio::new(3, 8));
        let frac = ChannelConfig::new(3, 0, 1, DopplerMode::Fractional, 1).unwrap();
        assert_eq!(recommend_lambda1(&frac, 64), Ratio::new(5, 128));
        assert_eq!(recommend_lambda1(&int_cfg(1, 0, 0), 8), Ratio::new(1, 16));
    }

    #[test]
    fn min_cyclic_delay_values() {
        let cfg = int_cfg(1, 0, 1);
        assert_eq!(min_cyclic_delay(&cfg, 4, recommend_lambda1(&cfg, 4)), 1);
        let cfg = int_cfg(3, 2, 1);
        assert_eq!(min_cyclic_delay(&cfg, 32, recommend_lambda1(&cfg, 32)), 3);
        // strict separation inequality over a sweep
        for l_max in 0..4usize {
            for alpha_max in 0..3usize {
                let cfg = int_cfg(1, l_max, alpha_max);
                for n in [16usize, 32, 64] {
                    let l1 = recommend_lambda1(&cfg, n);
                    let two_n_l1 = (l1 * Ratio::from_integer(2 * n as i64)).to_integer() as f64;
                    let delta = min_cyclic_delay(&cfg, n, l1) as f64;
                    assert!(l_max as f64 + 2.0 * alpha_max as f64 / two_n_l1 < delta);
                }
            }
        }
    }

    #[test]
    fn full_diversity_condition() {
        assert!(!full_diversity_ok(&int_cfg(1, 0, 1), 4, 2));
        assert!(full_diversity_ok(&int_cfg(1, 0, 1), 10, 2));
        let frac = ChannelConfig::new(1, 0, 1, DopplerMode::Fractional, 1).unwrap();
        assert!(full_diversity_ok(&frac, 64, 4));
    }

    fn random_daf(n: usize, rng: &mut impl Rng) -> DafVector {
        DafVector::new(DVector::from_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        }))
    }

    #[test]
    fn propagate_identity_channel() {
        let p = params(8, Ratio::new(3, 16), 2, vec![0]);
        let real = ChannelRealization {
            per_antenna: vec![vec![Path {
                gain: Complex64::new(1.0, 0.0),
                delay: 0,
                doppler: 0.0,
            }]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = idaft(&random_daf(8, &mut rng), &p).unwrap();
        let tx = add_cpp(&s, &p).unwrap();
        let r = time_domain_propagate(&tx, &real, &p, 0.0, &mut rng).unwrap();
        let body = remove_cpp(&r, &p).unwrap();
        assert!((body.values - s.values).norm() < 1e-12);
    }

    #[test]
    fn cross_model_equivalence_integer() {
        // daft(remove_cpp(propagate(add_cpp(idaft(x))))) == h_eff x
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for nt in [1usize, 2] {
            let cfg = int_cfg(3, 0, 1);
            let n = 16;
            let lambda1 = recommend_lambda1(&cfg, n);
            let delta = min_cyclic_delay(&cfg, n, lambda1);
            let delays: Vec<usize> = (0..nt).map(|e| e * delta).collect();
            let p = AfdmParams::new(n, lambda1, 1.0 / (4.0 * (n * n) as f64),
                cfg.l_max + delays[nt - 1] + 1, delays, 1.0).unwrap();
            for seed in 0..20 {
                let real = sample_channel(&cfg, nt, seed).unwrap();
                let eff = effective_channel(&real, &p, &cfg);
                let x = random_daf(n, &mut rng);
                let tx = add_cpp(&idaft(&x, &p).unwrap(), &p).unwrap();
                let r = time_domain_propagate(&tx, &real, &p, 0.0, &mut rng).unwrap();
                let y = daft(&remove_cpp(&r, &p).unwrap(), &p).unwrap();
                let model = &eff.h_eff * &x.values;
                let rel = (y.values - &model).norm() / model.norm();
                assert!(rel < 1e-9, "nt={nt} seed={seed} rel={rel}");
            }
        }
    }

    #[test]
    fn cross_model_equivalence_fractional_exact_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = ChannelConfig::new(3, 1, 1, DopplerMode::Fractional, 1).unwrap();
        let n = 16;
        let lambda1 = recommend_lambda1(&cfg, n);
        let p = AfdmParams::new(n, lambda1, 0.0, 4, vec![0, 2], 1.0).unwrap();
        for seed in 0..10 {
            let real = sample_channel(&cfg, 2, seed).unwrap();
            let eff = effective_channel_exact(&real, &p);
            let x = random_daf(n, &mut rng);
            let tx = add_cpp(&idaft(&x, &p).unwrap(), &p).unwrap();
            let r = time_domain_propagate(&tx, &real, &p, 0.0, &mut rng).unwrap();
            let y = daft(&remove_cpp(&r, &p).unwrap(), &p).unwrap();
            let model = &eff.h_eff * &x.values;
            let rel = (y.values - &model).norm() / model.norm();
            assert!(rel < 1e-9, "seed={seed} rel={rel}");
        }
    }

    #[test]
    fn zero_input_noise_variance() {
        let p = params(64, Ratio::new(3, 128), 2, vec![0]);
        let real = ChannelRealization {
            per_antenna: vec![vec![Path {
                gain: Complex64::new(1.0, 0.0),
                delay: 0,
                doppler: 0.0,
            }]],
        };
        let zero = TimeVector::new(DVector::zeros(66), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n0 = 0.5;
        let mut acc = 0.0;
        let trials = 500;
        for _ in 0..trials {
            let r = time_domain_propagate(&zero, &real, &p, n0, &mut rng).unwrap();
            acc += remove_cpp(&r, &p).unwrap().values.norm_squared();
        }
        let var = acc / (trials * 64) as f64;
        assert!((var - n0).abs() < 0.02, "sample variance {var}");
    }

    #[test]
    fn prefix_too_short_detected() {
        let p = params(8, Ratio::new(3, 16), 1, vec![0]);
        let real = ChannelRealization {
            per_antenna: vec![vec![Path {
                gain: Complex64::new(1.0, 0.0),
                delay: 2,
                doppler: 0.0,
            }]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = idaft(&random_daf(8, &mut rng), &p).unwrap();
        let tx = add_cpp(&s, &p).unwrap();
        assert!(matches!(
            time_domain_propagate(&tx, &real, &p, 0.0, &mut rng),
            Err(AfdmError::PrefixTooShort { .. })
        ));
    }

    #[test]
    fn truncation_residual_monotone_and_row_energy_unit() {
        let n = 32;
        let cfg0 = ChannelConfig::new(1, 0, 1, DopplerMode::Fractional, 0).unwrap();
        let p = params(n, recommend_lambda1(&ChannelConfig::new(1, 0, 1, DopplerMode::Fractional, 3).unwrap(), n), 0, vec![0]);
        let path = Path { gain: Complex64::new(1.0, 0.0), delay: 0, doppler: 0.37 };
        let exact = subchannel_matrix_exact(&path, 0, &p);
        // per-row energy of the exact kernel matrix is 1
        for vb in 0..n {
            let e: f64 = (0..n).map(|v| exact[(vb, v)].norm_sqr()).sum();
            assert!((e - 1.0).abs() < 1e-9, "row {vb} energy {e}");
        }
        let mut prev = f64::INFINITY;
        for k in 0..6usize {
            let cfg = ChannelConfig::new(1, 0, 1, DopplerMode::Fractional, k).unwrap();
            let _ = &cfg0;
            let trunc = subchannel_matrix(&path, 0, &p, &cfg);
            let resid = (&exact - &trunc).norm();
            assert!(resid <= prev + 1e-12, "k_alpha={k}");
            prev = resid;
        }
    }

    #[test]
    fn records_roundtrip() {
        let cfg = ChannelConfig::new(3, 1, 1, DopplerMode::Fractional, 1).unwrap();
        let real = sample_channel(&cfg, 2, 11).unwrap();
        let text = realization_to_records(&real);
        let back = realization_from_records(&text).unwrap();
        assert_eq!(real, back);
    }
}
