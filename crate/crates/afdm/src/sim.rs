//! Monte Carlo BER experiment driver: seeded parallel trials per SNR
//! point and detector, with delimited-text result emission.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nalgebra::DVector;
use num_complex::Complex64;
use rand_distr::StandardNormal;

use crate::channel::{
    effective_channel, effective_channel_exact, sample_channel, time_domain_propagate,
};
use crate::detect::{
    dlmp_detect, ml_detect, mmse_detect, mp_detect, DetectorKind, DetectorOptions,
};
use crate::im::encode;
use crate::transform::{add_cpp, daft, idaft, remove_cpp, DafVector};
use crate::types::{derive_bit_budget, AfdmParams, ChannelConfig, DopplerMode, ImConfig, ImScheme};
use crate::{AfdmError, Result};

/// Noise-variance floor for "infinite" SNR points.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Trials processed per parallel batch between stop-condition checks.
const BATCH: usize = 256;

/// One full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: AfdmParams,
    pub im: ImConfig,
    pub channel: ChannelConfig,
    pub opts: DetectorOptions,
    pub detectors: Vec<DetectorKind>,
    pub snr_db_list: Vec<f64>,
    pub trials_per_point: usize,
    /// Early-stop threshold on accumulated bit errors per point.
    pub min_errors: usize,
    pub seed: u64,
    /// Propagate through the sampled time-domain channel instead of the
    /// chirp-domain matrix (integer-mode validation path).
    pub time_domain_check: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.im.check_carriers(self.params.n)?;
        self.params.check_prefix(self.channel.l_max)?;
        if self.detectors.is_empty() {
            return Err(AfdmError::InvalidConfig("no detectors selected".into()));
        }
        if self.snr_db_list.is_empty() {
            return Err(AfdmError::InvalidConfig("empty SNR list".into()));
        }
        Ok(())
    }
}

/// Aggregated outcome of one (detector, SNR) point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub detector: String,
    pub snr_db: f64,
    pub trials: usize,
    pub total_bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub index_bit_errors: usize,
    pub mod_bit_errors: usize,
    pub mean_iterations: f64,
    pub flops_per_detection: f64,
}

pub fn detector_name(kind: DetectorKind) -> &'static str {
    match kind {
        DetectorKind::Ml => "ml",
        DetectorKind::Dlmp => "dlmp",
        DetectorKind::Mp => "mp",
        DetectorKind::Mmse => "mmse",
    }
}

/// splitmix64-style per-trial seed derivation.
fn trial_seed(master: u64, snr_index: usize, trial: usize) -> u64 {
    let mut z = master
        ^ (snr_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// True at positions holding index (activation) bits.
pub fn index_bit_mask(im: &ImConfig) -> Result<Vec<bool>> {
    let budget = derive_bit_budget(im)?;
    let p1 = if budget.index_bits == 0 {
        0
    } else {
        match im.scheme {
            ImScheme::SchemeI => budget.index_bits / im.g,
            ImScheme::SchemeII => budget.index_bits / im.subblocks,
        }
    };
    let sym_bits = im.mod_order.trailing_zeros() as usize;
    let mut mask = Vec::with_capacity(budget.total);
    match im.scheme {
        ImScheme::SchemeI => {
            for _ in 0..im.g {
                mask.extend(std::iter::repeat(true).take(p1));
                mask.extend(std::iter::repeat(false).take(im.m * sym_bits));
            }
        }
        ImScheme::SchemeII => {
            for _ in 0..im.subblocks {
                mask.extend(std::iter::repeat(true).take(p1));
                mask.extend(std::iter::repeat(false).take(im.g * im.m * sym_bits));
            }
        }
    }
    debug_assert_eq!(mask.len(), budget.total);
    Ok(mask)
}

struct TrialOutcome {
    bit_errors: usize,
    index_errors: usize,
    iterations: usize,
    flops: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    params: &AfdmParams,
    detector: DetectorKind,
    index_mask: &[bool],
    seed: u64,
) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = sample_channel(&cfg.channel, params.cyclic_delays.len(), rng.random())?;
    let eff_rx = effective_channel(&real, params, &cfg.channel);

    let budget = derive_bit_budget(&cfg.im)?;
    let bits: Vec<bool> = (0..budget.total).map(|_| rng.random()).collect();
    let frame = encode(&bits, &cfg.im, params)?;

    let n0 = params.noise_var;
    let y = if cfg.time_domain_check {
        let s = add_cpp(&idaft(&frame.x, params)?, params)?;
        let r = time_domain_propagate(&s, &real, params, n0, &mut rng)?;
        daft(&remove_cpp(&r, params)?, params)?
    } else {
        let truth = match cfg.channel.doppler_mode {
            DopplerMode::Integer => eff_rx.h_eff.clone(),
            DopplerMode::Fractional => effective_channel_exact(&real, params).h_eff,
        };
        let sigma = (n0 / 2.0).sqrt();
        let noise = DVector::from_fn(params.n, |_, _| {
            Complex64::new(
                sigma * rng.sample::<f64, _>(StandardNormal),
                sigma * rng.sample::<f64, _>(StandardNormal),
            )
        });
        DafVector::new(truth * &frame.x.values + noise)
    };

    let out = match detector {
        DetectorKind::Ml => ml_detect(&y, &eff_rx, &cfg.im, params)?,
        DetectorKind::Dlmp => dlmp_detect(&y, &eff_rx, &cfg.im, params, &cfg.opts)?,
        DetectorKind::Mp => mp_detect(&y, &eff_rx, &cfg.im, params, &cfg.opts)?,
        DetectorKind::Mmse => mmse_detect(&y, &eff_rx, &cfg.im, params)?,
    };
    let mut bit_errors = 0;
    let mut index_errors = 0;
    for ((a, b), &is_index) in bits.iter().zip(&out.bits).zip(index_mask) {
        if a != b {
            bit_errors += 1;
            if is_index {
                index_errors += 1;
            }
        }
    }
    Ok(TrialOutcome { bit_errors, index_errors, iterations: out.iterations_used, flops: out.flops })
}

/// Runs the full experiment grid; one record per (detector, SNR) pair.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let budget = derive_bit_budget(&cfg.im)?;
    let index_mask = index_bit_mask(&cfg.im)?;
    let mut records = Vec::new();
    for &detector in &cfg.detectors {
        for (si, &snr_db) in cfg.snr_db_list.iter().enumerate() {
            let n0 = 10f64.powf(-snr_db / 10.0).max(NOISE_FLOOR);
            let mut params = cfg.params.clone();
            params.noise_var = n0;

            let mut trials = 0usize;
            let mut bit_errors = 0usize;
            let mut index_errors = 0usize;
            let mut iter_sum = 0usize;
            let mut flop_sum = 0.0;
            while trials < cfg.trials_per_point && bit_errors < cfg.min_errors {
                let batch = BATCH.min(cfg.trials_per_point - trials);
                let outcomes: Result<Vec<TrialOutcome>> = (trials..trials + batch)
                    .into_par_iter()
                    .map(|t| {
                        run_trial(cfg, &params, detector, &index_mask, trial_seed(cfg.seed, si, t))
                    })
                    .collect();
                for o in outcomes? {
                    bit_errors += o.bit_errors;
                    index_errors += o.index_errors;
                    iter_sum += o.iterations;
                    flop_sum += o.flops;
                }
                trials += batch;
            }
            let total_bits = trials * budget.total;
            records.push(BerRecord {
                detector: detector_name(detector).to_string(),
                snr_db,
                trials,
                total_bits,
                bit_errors,
                ber: bit_errors as f64 / total_bits as f64,
                index_bit_errors: index_errors,
                mod_bit_errors: bit_errors - index_errors,
                mean_iterations: iter_sum as f64 / trials as f64,
                flops_per_detection: flop_sum / trials as f64,
            });
        }
    }
    Ok(records)
}

const HEADER: &str = "detector\tsnr_db\ttrials\ttotal_bits\tbit_errors\tber\tindex_bit_errors\tmod_bit_errors\tmean_iterations\tflops_per_detection";

/// Serializes records as tab-delimited text with a header row.
pub fn format_results(records: &[BerRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{}\t{:e}\t{}\t{}\t{}\t{:e}\t{}\t{}\t{:e}\t{:e}\n",
            r.detector,
            r.snr_db,
            r.trials,
            r.total_bits,
            r.bit_errors,
            r.ber,
            r.index_bit_errors,
            r.mod_bit_errors,
            r.mean_iterations,
            r.flops_per_detection
        ));
    }
    out
}

/// Writes [`format_results`] to `path`, overwriting.
pub fn emit_results(records: &[BerRecord], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, format_results(records))?;
    Ok(())
}

/// Parses text produced by [`format_results`].
pub fn parse_results(text: &str) -> Result<Vec<BerRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        _ => return Err(AfdmError::InvalidConfig("missing results header".into())),
    }
    let bad = |line: &str| AfdmError::InvalidConfig(format!("bad record line: {line}"));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 10 {
                return Err(bad(line));
            }
            Ok(BerRecord {
                detector: f[0].to_string(),
                snr_db: f[1].parse().map_err(|_| bad(line))?,
                trials: f[2].parse().map_err(|_| bad(line))?,
                total_bits: f[3].parse().map_err(|_| bad(line))?,
                bit_errors: f[4].parse().map_err(|_| bad(line))?,
                ber: f[5].parse().map_err(|_| bad(line))?,
                index_bit_errors: f[6].parse().map_err(|_| bad(line))?,
                mod_bit_errors: f[7].parse().map_err(|_| bad(line))?,
                mean_iterations: f[8].parse().map_err(|_| bad(line))?,
                flops_per_detection: f[9].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}
