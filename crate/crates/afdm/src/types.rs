//! Shared configuration and value types for the waveform, the index
//! modulation layout, and the channel geometry.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::{AfdmError, Result};

/// Waveform geometry: subcarrier count, chirp rates, prefix, and the
/// per-antenna cyclic delays.
///
/// `lambda1` is stored as an exact rational so that `2 * N * lambda1` is an
/// exact integer; the integer-Doppler support locations depend on it and
/// must not drift in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct AfdmParams {
    /// Number of chirp subcarriers `N`.
    pub n: usize,
    /// First DAFT chirp rate, representable as `p / (2N)`.
    pub lambda1: Ratio<i64>,
    /// Second DAFT chirp parameter.
    pub lambda2: f64,
    /// Chirp-periodic prefix length in samples.
    pub cpp_len: usize,
    /// Number of transmit antennas.
    pub nt: usize,
    /// Normalized cyclic delay of each antenna, `cyclic_delays[0] == 0`,
    /// strictly increasing.
    pub cyclic_delays: Vec<usize>,
    /// Noise variance `N0` (SNR is defined as `1 / N0`).
    pub noise_var: f64,
}

impl AfdmParams {
    pub fn new(
        n: usize,
        lambda1: Ratio<i64>,
        lambda2: f64,
        cpp_len: usize,
        cyclic_delays: Vec<usize>,
        noise_var: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(AfdmError::InvalidConfig("N must be positive".into()));
        }
        if cyclic_delays.is_empty() {
            return Err(AfdmError::InvalidConfig(
                "at least one transmit antenna required".into(),
            ));
        }
        if cyclic_delays[0] != 0 {
            return Err(AfdmError::InvalidConfig(
                "first antenna cyclic delay must be 0".into(),
            ));
        }
        if cyclic_delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AfdmError::InvalidConfig(
                "cyclic delays must be strictly increasing".into(),
            ));
        }
        if !(lambda1 * Ratio::from_integer(2 * n as i64)).is_integer() {
            return Err(AfdmError::InvalidConfig(format!(
                "lambda1 = {lambda1} is not an integer multiple of 1/(2N)"
            )));
        }
        if noise_var <= 0.0 {
            return Err(AfdmError::InvalidConfig("N0 must be positive".into()));
        }
        let nt = cyclic_delays.len();
        Ok(Self { n, lambda1, lambda2, cpp_len, nt, cyclic_delays, noise_var })
    }

    /// The exact integer `2 N lambda1`, used for support-index arithmetic.
    pub fn two_n_lambda1(&self) -> i64 {
        (self.lambda1 * Ratio::from_integer(2 * self.n as i64)).to_integer()
    }

    /// `lambda1` as a float, for phase evaluation.
    pub fn lambda1_f64(&self) -> f64 {
        *self.lambda1.numer() as f64 / *self.lambda1.denom() as f64
    }

    /// Checks that the prefix covers the total delay `l_max + l_{Nt}`.
    pub fn check_prefix(&self, l_max: usize) -> Result<()> {
        let needed = l_max + self.cyclic_delays[self.nt - 1];
        if self.cpp_len < needed {
            return Err(AfdmError::PrefixTooShort { needed, have: self.cpp_len });
        }
        Ok(())
    }
}

/// Index modulation scheme selector.
///
/// Scheme I picks an activation pattern independently per group; Scheme II
/// shares one pattern across the `g` groups of a subblock so that pattern
/// errors spread over more subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImScheme {
    SchemeI,
    SchemeII,
}

/// Index modulation block structure and constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImConfig {
    pub scheme: ImScheme,
    /// Subcarriers per group.
    pub n: usize,
    /// Active subcarriers per group.
    pub m: usize,
    /// Groups (per subblock for Scheme II).
    pub g: usize,
    /// Subblocks (1 for Scheme I).
    pub subblocks: usize,
    /// Constellation size `M`.
    pub mod_order: usize,
    /// `M` unit-average-energy constellation points, Gray ordered.
    pub alphabet: Vec<Complex64>,
}

impl ImConfig {
    pub fn new(
        scheme: ImScheme,
        n: usize,
        m: usize,
        g: usize,
        subblocks: usize,
        alphabet: Vec<Complex64>,
    ) -> Result<Self> {
        if n == 0 || g == 0 || subblocks == 0 {
            return Err(AfdmError::InvalidConfig("n, g, L must be positive".into()));
        }
        if scheme == ImScheme::SchemeI && subblocks != 1 {
            return Err(AfdmError::InvalidConfig("Scheme I requires L = 1".into()));
        }
        if m == 0 || m > n {
            return Err(AfdmError::InvalidConfig(format!("need 1 <= m <= n, got m={m}, n={n}")));
        }
        let mod_order = alphabet.len();
        if mod_order < 2 {
            return Err(AfdmError::InvalidConfig("alphabet needs at least 2 points".into()));
        }
        let power: f64 = alphabet.iter().map(|q| q.norm_sqr()).sum::<f64>() / mod_order as f64;
        if (power - 1.0).abs() > 1e-9 {
            return Err(AfdmError::InvalidConfig(format!(
                "alphabet mean power is {power}, expected 1"
            )));
        }
        Ok(Self { scheme, n, m, g, subblocks, mod_order, alphabet })
    }

    /// Total subcarrier count implied by the block layout (`n g L`).
    pub fn total_carriers(&self) -> usize {
        self.n * self.g * self.subblocks
    }

    /// Number of groups in the whole frame.
    pub fn total_groups(&self) -> usize {
        self.g * self.subblocks
    }

    /// Checks that the block layout tiles exactly `n_carriers` subcarriers.
    pub fn check_carriers(&self, n_carriers: usize) -> Result<()> {
        if self.total_carriers() != n_carriers {
            return Err(AfdmError::InvalidConfig(format!(
                "block layout covers {} subcarriers, waveform has {}",
                self.total_carriers(),
                n_carriers
            )));
        }
        Ok(())
    }
}

/// How Doppler shifts fall on the `1/(NT)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerMode {
    Integer,
    Fractional,
}

/// Channel geometry: path count and delay/Doppler extents.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Paths per antenna.
    pub paths: usize,
    /// Maximum normalized delay (integer samples).
    pub l_max: usize,
    /// Maximum normalized Doppler (integer grid bound).
    pub alpha_max: usize,
    pub doppler_mode: DopplerMode,
    /// Half-width of the fractional-Doppler interference window; 0 in
    /// integer mode.
    pub k_alpha: usize,
}

impl ChannelConfig {
    pub fn new(
        paths: usize,
        l_max: usize,
        alpha_max: usize,
        doppler_mode: DopplerMode,
        k_alpha: usize,
    ) -> Result<Self> {
        if paths == 0 {
            return Err(AfdmError::InvalidConfig("P must be positive".into()));
        }
        match doppler_mode {
            DopplerMode::Integer => {
                if k_alpha != 0 {
                    return Err(AfdmError::InvalidConfig(
                        "k_alpha must be 0 in integer Doppler mode".into(),
                    ));
                }
                let grid = (l_max + 1) * (2 * alpha_max + 1);
                if paths > grid {
                    return Err(AfdmError::InvalidConfig(format!(
                        "P = {paths} exceeds the delay-Doppler grid size {grid}"
                    )));
                }
            }
            DopplerMode::Fractional => {}
        }
        Ok(Self { paths, l_max, alpha_max, doppler_mode, k_alpha })
    }

    /// `(l_max + 1)(2 alpha_max + 1)`: the integer-mode grid size.
    pub fn max_paths(&self) -> usize {
        (self.l_max + 1) * (2 * self.alpha_max + 1)
    }
}

/// Bit budget of one frame, split into index and modulated bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitBudget {
    pub total: usize,
    pub index_bits: usize,
    pub mod_bits: usize,
}

/// Binomial coefficient C(n, m) in u128 to survive intermediate growth.
pub fn binomial(n: usize, m: usize) -> u128 {
    if m > n {
        return 0;
    }
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Index bits per pattern choice: `floor(log2 C(n, m))`.
pub fn index_bits_per_choice(n: usize, m: usize) -> usize {
    let c = binomial(n, m);
    if c <= 1 {
        0
    } else {
        (127 - c.leading_zeros()) as usize
    }
}

/// Splits the frame bit budget into index and modulated bits.
///
/// Scheme I: each of the `g` groups carries `floor(log2 C(n,m))` index bits
/// plus `m log2 M` modulated bits. Scheme II: each of the `L` subblocks
/// carries one shared pattern choice plus `g m log2 M` modulated bits.
pub fn derive_bit_budget(im: &ImConfig) -> Result<BitBudget> {
    if !im.mod_order.is_power_of_two() {
        return Err(AfdmError::InvalidConfig(format!(
            "constellation size {} is not a power of two",
            im.mod_order
        )));
    }
    let bits_per_symbol = im.mod_order.trailing_zeros() as usize;
    let p1_choice = index_bits_per_choice(im.n, im.m);
    let (index_bits, mod_bits) = match im.scheme {
        ImScheme::SchemeI => (im.g * p1_choice, im.g * im.m * bits_per_symbol),
        ImScheme::SchemeII => (
            im.subblocks * p1_choice,
            im.subblocks * im.g * im.m * bits_per_symbol,
        ),
    };
    Ok(BitBudget { total: index_bits + mod_bits, index_bits, mod_bits })
}

/// Gray-mapped unit-average-energy constellation for `M` in {2, 4, 8, 16}.
///
/// BPSK is `{+1, -1}`; QPSK and 16-QAM are square Gray mappings; 8-QAM is
/// the rectangular 4x2 layout.
pub fn gray_constellation(mod_order: usize) -> Result<Vec<Complex64>> {
    // Gray-coded PAM levels per axis for 1 or 2 bits.
    fn pam(bits: usize, idx: usize) -> f64 {
        match bits {
            1 => [1.0, -1.0][idx],
            2 => [-3.0, -1.0, 3.0, 1.0][idx],
            _ => unreachable!(),
        }
    }
    let points: Vec<Complex64> = match mod_order {
        2 => (0..2).map(|i| Complex64::new(pam(1, i), 0.0)).collect(),
        4 => (0..4)
            .map(|i| Complex64::new(pam(1, i >> 1), pam(1, i & 1)))
            .collect(),
        8 => (0..8)
            .map(|i| Complex64::new(pam(2, i >> 1), pam(1, i & 1)))
            .collect(),
        16 => (0..16)
            .map(|i| Complex64::new(pam(2, i >> 2), pam(2, i & 3)))
            .collect(),
        _ => {
            return Err(AfdmError::InvalidConfig(format!(
                "unsupported constellation size {mod_order}"
            )))
        }
    };
    let power: f64 = points.iter().map(|q| q.norm_sqr()).sum::<f64>() / points.len() as f64;
    let scale = power.sqrt().recip();
    Ok(points.into_iter().map(|q| q * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn im(scheme: ImScheme, n: usize, m: usize, g: usize, l: usize, mo: usize) -> ImConfig {
        ImConfig::new(scheme, n, m, g, l, gray_constellation(mo).unwrap()).unwrap()
    }

    #[test]
    fn bit_budget_scheme_i_table_example() {
        // n=4, m=2, M=2, g=1: four index patterns = 2 index bits, 2 mod bits.
        let b = derive_bit_budget(&im(ImScheme::SchemeI, 4, 2, 1, 1, 2)).unwrap();
        assert_eq!(b.index_bits, 2);
        assert_eq!(b.mod_bits, 2);
        assert_eq!(b.total, 4);
    }

    #[test]
    fn bit_budget_no_index_bits() {
        // C(2,2) = 1: all subcarriers active, no index bits.
        let b = derive_bit_budget(&im(ImScheme::SchemeI, 2, 2, 1, 1, 2)).unwrap();
        assert_eq!(b.index_bits, 0);
        assert_eq!(b.total, 2);
    }

    #[test]
    fn bit_budget_scheme_ii() {
        // n=4, m=1, M=4, g=2, L=8: p = 8 * (2 + 2*2) = 48.
        let b = derive_bit_budget(&im(ImScheme::SchemeII, 4, 1, 2, 8, 4)).unwrap();
        assert_eq!(b.total, 48);
        assert_eq!(b.index_bits, 16);
        assert_eq!(b.mod_bits, 32);
    }

    #[test]
    fn index_bits_match_pattern_table_length() {
        // floor(log2 C(n,m)) against direct enumeration for all n <= 16.
        for n in 1..=16usize {
            for m in 1..=n {
                let c = binomial(n, m);
                let mut p1 = 0usize;
                while (1u128 << (p1 + 1)) <= c {
                    p1 += 1;
                }
                assert_eq!(index_bits_per_choice(n, m), p1, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn bit_budget_additive_over_groups() {
        for g in 1..=8usize {
            let b = derive_bit_budget(&im(ImScheme::SchemeI, 4, 2, g, 1, 4)).unwrap();
            let b1 = derive_bit_budget(&im(ImScheme::SchemeI, 4, 2, 1, 1, 4)).unwrap();
            assert_eq!(b.total, g * b1.total);
        }
    }

    #[test]
    fn rejects_non_power_of_two_alphabet() {
        let mut alphabet = gray_constellation(4).unwrap();
        alphabet.pop();
        // renormalize to unit power so construction succeeds
        let p: f64 = alphabet.iter().map(|q| q.norm_sqr()).sum::<f64>() / alphabet.len() as f64;
        let alphabet: Vec<_> = alphabet.into_iter().map(|q| q / p.sqrt()).collect();
        let cfg = ImConfig::new(ImScheme::SchemeI, 4, 1, 1, 1, alphabet).unwrap();
        assert!(derive_bit_budget(&cfg).is_err());
    }

    #[test]
    fn constellations_have_unit_power() {
        for mo in [2usize, 4, 8, 16] {
            let a = gray_constellation(mo).unwrap();
            let p: f64 = a.iter().map(|q| q.norm_sqr()).sum::<f64>() / mo as f64;
            assert!((p - 1.0).abs() < 1e-12, "M={mo}");
        }
    }

    #[test]
    fn params_reject_bad_lambda1() {
        assert!(AfdmParams::new(4, Ratio::new(1, 3), 0.0, 0, vec![0], 1.0).is_err());
        assert!(AfdmParams::new(4, Ratio::new(1, 8), 0.0, 0, vec![0], 1.0).is_ok());
    }

    #[test]
    fn params_reject_bad_delays() {
        assert!(AfdmParams::new(8, Ratio::new(1, 16), 0.0, 4, vec![1, 2], 1.0).is_err());
        assert!(AfdmParams::new(8, Ratio::new(1, 16), 0.0, 4, vec![0, 0], 1.0).is_err());
    }

    #[test]
    fn channel_config_guards() {
        assert!(ChannelConfig::new(4, 0, 1, DopplerMode::Integer, 0).is_err()); // grid = 3
        assert!(ChannelConfig::new(3, 0, 1, DopplerMode::Integer, 1).is_err()); // k_alpha forced 0
        assert!(ChannelConfig::new(3, 0, 1, DopplerMode::Fractional, 1).is_ok());
    }

    #[test]
    fn two_n_lambda1_exact() {
        let p = AfdmParams::new(64, Ratio::new(3, 128), 0.0, 4, vec![0], 1.0).unwrap();
        assert_eq!(p.two_n_lambda1(), 3);
    }
}
