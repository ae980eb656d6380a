//! Linear MMSE equalization followed by energy-based index detection.

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::transform::DafVector;
use crate::types::{AfdmParams, ImConfig};
use crate::Result;

use super::flops::{flop_estimate, DetectorKind};
use super::{decide, DetectionResult};

/// MMSE detection: `x_tilde = (H^H H + N0 I)^{-1} H^H y`, activation
/// scored by `|x_tilde[c]|^2`, then the shared support/symbol decision.
pub fn mmse_detect(
    y: &DafVector,
    eff: &EffectiveChannel,
    im: &ImConfig,
    params: &AfdmParams,
) -> Result<DetectionResult> {
    let n = params.n;
    let h = &eff.h_eff;
    let mut normal = h.adjoint() * h;
    for i in 0..n {
        normal[(i, i)] += Complex64::new(params.noise_var, 0.0);
    }
    let rhs = h.adjoint() * &y.values;
    let x_tilde = normal
        .lu()
        .solve(&rhs)
        .expect("regularized normal matrix is positive definite");

    let scores: Vec<f64> = x_tilde.iter().map(|v| v.norm_sqr()).collect();
    let marginals: Vec<Vec<f64>> = x_tilde
        .iter()
        .map(|v| im.alphabet.iter().map(|a| -(a - v).norm_sqr()).collect())
        .collect();
    let (x_hat, patterns, symbols, bits) = decide(&scores, &marginals, im)?;
    Ok(DetectionResult {
        x_hat,
        patterns,
        symbols,
        bits,
        iterations_used: 0,
        flops: flop_estimate(DetectorKind::Mmse, n, 0, 0, im.mod_order, im.n, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channel, sample_channel};
    use crate::im::enumerate_codebook;
    use crate::types::{gray_constellation, ChannelConfig, DopplerMode, ImScheme};
    use nalgebra::{DMatrix, DVector};
    use num_rational::Ratio;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut impl Rng) -> DVector<Complex64> {
        DVector::from_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// Plain Gaussian elimination with partial pivoting, written against
    /// the normal equations directly.
    fn normal_eq_oracle(
        h: &DMatrix<Complex64>,
        y: &DVector<Complex64>,
        n0: f64,
    ) -> DVector<Complex64> {
        let n = h.nrows();
        let mut a = h.adjoint() * h;
        for i in 0..n {
            a[(i, i)] += Complex64::new(n0, 0.0);
        }
        let mut b = h.adjoint() * y;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().partial_cmp(&a[(j, col)].norm()).unwrap())
                .unwrap();
            if pivot != col {
                a.swap_rows(col, pivot);
                b.swap_rows(col, pivot);
            }
            let d = a[(col, col)];
            for r in col + 1..n {
                let factor = a[(r, col)] / d;
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= factor * v;
                }
                let bv = b[col];
                b[r] -= factor * bv;
            }
        }
        let mut x = DVector::zeros(n);
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc -= a[(r, c)] * x[c];
            }
            x[r] = acc / a[(r, r)];
        }
        x
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 8;
            let h = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let y = random_vec(n, &mut rng);
            let n0 = 0.05;
            let mut normal = h.adjoint() * &h;
            for i in 0..n {
                normal[(i, i)] += Complex64::new(n0, 0.0);
            }
            let got = normal.lu().solve(&(h.adjoint() * &y)).unwrap();
            let want = normal_eq_oracle(&h, &y, n0);
            assert!((got - want).norm() < 1e-9);
        }
    }

    #[test]
    fn noiseless_recovery() {
        let params =
            AfdmParams::new(4, Ratio::new(3, 8), 0.0, 2, vec![0], 1e-8).unwrap();
        let im = ImConfig::new(ImScheme::SchemeI, 4, 1, 1, 1, gray_constellation(2).unwrap())
            .unwrap();
        let cfg = ChannelConfig::new(2, 1, 1, DopplerMode::Integer, 0).unwrap();
        let real = sample_channel(&cfg, 1, 17).unwrap();
        let eff = effective_channel(&real, &params, &cfg);
        for frame in enumerate_codebook(&im, &params).unwrap() {
            let y = DafVector::new(&eff.h_eff * &frame.x.values);
            let out = mmse_detect(&y, &eff, &im, &params).unwrap();
            assert_eq!(out.bits, frame.bits);
        }
    }

    #[test]
    fn identity_channel_low_noise_passes_y_through() {
        let params =
            AfdmParams::new(4, Ratio::new(1, 8), 0.0, 0, vec![0], 1e-12).unwrap();
        let im = ImConfig::new(ImScheme::SchemeI, 4, 1, 1, 1, gray_constellation(2).unwrap())
            .unwrap();
        let eff = EffectiveChannel {
            h_eff: DMatrix::identity(4, 4),
            components: vec![],
            nt: 1,
        };
        let mut y = DVector::zeros(4);
        y[2] = Complex64::new(-1.0, 0.0);
        let out = mmse_detect(&DafVector::new(y), &eff, &im, &params).unwrap();
        assert_eq!(out.patterns[0].indices, vec![2]);
        assert!((out.x_hat.values[2] - Complex64::new(-1.0, 0.0)).norm() < 1e-9);
    }
}
