//! Monte Carlo BER simulator for CDD-AFDM with index modulation.
//!
//! Flags mirror a plain `key=value` config file (`--config`); values on
//! the command line override the file. Results are written as delimited
//! text (`--out`) or printed to stdout.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use afdm::analysis::abep_upper_bound;
use afdm::channel::{effective_channel, min_cyclic_delay, recommend_lambda1, sample_channel};
use afdm::detect::{DetectorKind, DetectorOptions};
use afdm::sim::{
    emit_results, format_results, run_experiment, BerRecord, ExperimentConfig, NOISE_FLOOR,
};
use afdm::types::{gray_constellation, AfdmParams, ChannelConfig, DopplerMode, ImConfig, ImScheme};

/// Channel profiles averaged when emitting the theoretical bound.
const BOUND_PROFILES: usize = 200;

#[derive(Parser, Debug)]
#[command(name = "afdm-sim", about = "CDD-AFDM-IM link-level BER simulator")]
struct Cli {
    /// Plain key=value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Index modulation scheme: I, II, or none (all carriers active).
    #[arg(long)]
    scheme: Option<String>,
    /// Subcarriers per IM group.
    #[arg(long)]
    n: Option<usize>,
    /// IM groups (per subblock for scheme II).
    #[arg(long)]
    groups: Option<usize>,
    /// Subblocks (scheme II only).
    #[arg(long)]
    subblocks: Option<usize>,
    /// Active subcarriers per group.
    #[arg(long)]
    m_active: Option<usize>,
    /// Constellation size (2, 4, 8, 16).
    #[arg(long)]
    mod_order: Option<usize>,
    /// Transmit antennas.
    #[arg(long)]
    nt: Option<usize>,
    /// Propagation paths per antenna.
    #[arg(long)]
    paths: Option<usize>,
    /// Maximum normalized delay.
    #[arg(long)]
    lmax: Option<usize>,
    /// Maximum normalized Doppler.
    #[arg(long)]
    alphamax: Option<usize>,
    /// Doppler grid mode: integer or fractional.
    #[arg(long)]
    doppler: Option<String>,
    /// Fractional-Doppler window half-width.
    #[arg(long)]
    k_alpha: Option<usize>,
    /// Comma-separated SNR list in dB.
    #[arg(long)]
    snr_db: Option<String>,
    /// Maximum trials per SNR point.
    #[arg(long)]
    trials: Option<usize>,
    /// Early-stop bit error count per point.
    #[arg(long)]
    min_errors: Option<usize>,
    /// Detector selection (repeatable): ml, dlmp, mp, mmse.
    #[arg(long)]
    detector: Vec<String>,
    /// Message-passing damping factor.
    #[arg(long)]
    damping: Option<f64>,
    /// Message-passing iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Convergence tolerance of the stopping indicator.
    #[arg(long)]
    conv_tol: Option<f64>,
    /// Master RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit the gain-averaged theoretical BER bound per SNR point.
    #[arg(long)]
    emit_bound: bool,
    /// Propagate through the sampled time-domain channel instead of the
    /// chirp-domain matrix.
    #[arg(long)]
    time_domain_check: bool,
}

struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self, String> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| format!("config line {} is not key=value", lineno + 1))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
        }
    }
}

fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

fn required<T>(cli: Option<T>, file: Option<T>, name: &str) -> Result<T, String> {
    cli.or(file).ok_or_else(|| format!("missing required option --{name}"))
}

fn parse_detector(name: &str) -> Result<DetectorKind, String> {
    match name {
        "ml" => Ok(DetectorKind::Ml),
        "dlmp" => Ok(DetectorKind::Dlmp),
        "mp" => Ok(DetectorKind::Mp),
        "mmse" => Ok(DetectorKind::Mmse),
        other => Err(format!("unknown detector {other:?}")),
    }
}

fn parse_snr_list(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad SNR value {s:?}")))
        .collect()
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let file = FileConfig::load(cli.config.as_ref())?;

    let scheme_raw = pick(cli.scheme.clone(), file.get("scheme")?, "I".to_string());
    let group_n = required(cli.n, file.get("n")?, "n")?;
    let groups = pick(cli.groups, file.get("groups")?, 1);
    let subblocks = pick(cli.subblocks, file.get("subblocks")?, 1);
    let m_active = pick(cli.m_active, file.get("m_active")?, 1);
    let mod_order = pick(cli.mod_order, file.get("mod_order")?, 2);
    let alphabet = gray_constellation(mod_order).map_err(|e| e.to_string())?;
    let im = match scheme_raw.as_str() {
        "I" => ImConfig::new(ImScheme::SchemeI, group_n, m_active, groups, 1, alphabet),
        "II" => ImConfig::new(ImScheme::SchemeII, group_n, m_active, groups, subblocks, alphabet),
        // no index modulation: every subcarrier of every group is active
        "none" => ImConfig::new(ImScheme::SchemeI, group_n, group_n, groups, 1, alphabet),
        other => return Err(format!("unknown scheme {other:?} (expected I, II, none)")),
    }
    .map_err(|e| e.to_string())?;
    let n_total = im.total_carriers();

    let nt = pick(cli.nt, file.get("nt")?, 1);
    let paths = pick(cli.paths, file.get("paths")?, 3);
    let lmax = pick(cli.lmax, file.get("lmax")?, 1);
    let alphamax = pick(cli.alphamax, file.get("alphamax")?, 1);
    let doppler_raw = pick(cli.doppler.clone(), file.get("doppler")?, "integer".to_string());
    let doppler_mode = match doppler_raw.as_str() {
        "integer" => DopplerMode::Integer,
        "fractional" => DopplerMode::Fractional,
        other => return Err(format!("unknown doppler mode {other:?}")),
    };
    let k_alpha = pick(
        cli.k_alpha,
        file.get("k_alpha")?,
        if doppler_mode == DopplerMode::Fractional { 1 } else { 0 },
    );
    let channel = ChannelConfig::new(paths, lmax, alphamax, doppler_mode, k_alpha)
        .map_err(|e| e.to_string())?;

    let lambda1 = recommend_lambda1(&channel, n_total);
    let delta = min_cyclic_delay(&channel, n_total, lambda1);
    let cyclic_delays: Vec<usize> = (0..nt).map(|eps| eps * delta).collect();
    let cpp_len = lmax + cyclic_delays.last().copied().unwrap_or(0);
    let lambda2 = 1.0 / (4.0 * (n_total * n_total) as f64);
    let params = AfdmParams::new(n_total, lambda1, lambda2, cpp_len, cyclic_delays, 1.0)
        .map_err(|e| e.to_string())?;

    let detector_names: Vec<String> = if cli.detector.is_empty() {
        file.get::<String>("detector")?
            .map(|raw| raw.split(',').map(|s| s.trim().to_string()).collect())
            .unwrap_or_else(|| vec!["dlmp".to_string()])
    } else {
        cli.detector.clone()
    };
    let detectors = detector_names
        .iter()
        .map(|d| parse_detector(d))
        .collect::<Result<Vec<_>, _>>()?;

    let snr_raw = required(cli.snr_db.clone(), file.get("snr_db")?, "snr-db")?;
    let cfg = ExperimentConfig {
        params,
        im,
        channel,
        opts: DetectorOptions {
            damping: pick(cli.damping, file.get("damping")?, 0.2),
            max_iter: pick(cli.max_iter, file.get("max_iter")?, 20),
            convergence_tolerance: pick(cli.conv_tol, file.get("conv_tol")?, 0.05),
        },
        detectors,
        snr_db_list: parse_snr_list(&snr_raw)?,
        trials_per_point: pick(cli.trials, file.get("trials")?, 10_000),
        min_errors: pick(cli.min_errors, file.get("min_errors")?, 200),
        seed: pick(cli.seed, file.get("seed")?, 0),
        time_domain_check: cli.time_domain_check
            || file.get("time_domain_check")?.unwrap_or(false),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// ABEP bound averaged over sampled delay-Doppler profiles.
fn bound_records(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>, String> {
    let mut records = Vec::new();
    for &snr_db in &cfg.snr_db_list {
        let n0 = 10f64.powf(-snr_db / 10.0).max(NOISE_FLOOR);
        let mut acc = 0.0;
        for k in 0..BOUND_PROFILES {
            let real = sample_channel(
                &cfg.channel,
                cfg.params.cyclic_delays.len(),
                cfg.seed.wrapping_add(0xB0D_u64).wrapping_add(k as u64),
            )
            .map_err(|e| e.to_string())?;
            let eff = effective_channel(&real, &cfg.params, &cfg.channel);
            acc += abep_upper_bound(&cfg.im, &eff, &cfg.params, n0).map_err(|e| e.to_string())?;
        }
        records.push(BerRecord {
            detector: "bound".to_string(),
            snr_db,
            trials: BOUND_PROFILES,
            total_bits: 0,
            bit_errors: 0,
            ber: acc / BOUND_PROFILES as f64,
            index_bit_errors: 0,
            mod_bit_errors: 0,
            mean_iterations: 0.0,
            flops_per_detection: 0.0,
        });
    }
    Ok(records)
}

fn run(cli: &Cli) -> Result<(), String> {
    let cfg = build_config(cli)?;
    let mut records = run_experiment(&cfg).map_err(|e| e.to_string())?;
    if cli.emit_bound {
        records.extend(bound_records(&cfg)?);
    }
    match &cli.out {
        Some(path) => emit_results(&records, path)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{}", format_results(&records)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
