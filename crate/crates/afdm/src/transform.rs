//! Discrete affine Fourier transform pair and the chirp-periodic prefix.
//!
//! The forward transform is `A = Lambda_{lambda2} F Lambda_{lambda1}` with
//! `A[v, n] = (1/sqrt(N)) exp(-j 2 pi (lambda2 v^2 + v n / N + lambda1 n^2))`,
//! so `s = A^H x` at the transmitter and `y = A r` at the receiver.
//!
//! Phase arguments involving `lambda1 = p/(2N)` and `v n / N` are reduced
//! modulo 1 in exact integer arithmetic before evaluating `exp`, so that
//! support-index phases are reproducible to machine precision even at large
//! `N`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::types::AfdmParams;
use crate::{AfdmError, Result};

/// Chirp-domain symbol vector of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DafVector {
    pub values: DVector<Complex64>,
}

impl DafVector {
    pub fn new(values: DVector<Complex64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }
}

/// Time-domain sample vector, optionally carrying a prefix.
///
/// With `prefix_len = c`, `values[i]` holds the sample at time index
/// `i - c`, i.e. prefix samples occupy negative time indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVector {
    pub values: DVector<Complex64>,
    pub prefix_len: usize,
}

impl TimeVector {
    pub fn new(values: DVector<Complex64>, prefix_len: usize) -> Self {
        Self { values, prefix_len }
    }

    /// Body length (sample count excluding the prefix).
    pub fn body_len(&self) -> usize {
        self.values.len() - self.prefix_len
    }

    /// Sample at time index `n`, valid for `n in [-prefix_len, body_len)`.
    pub fn sample(&self, n: isize) -> Complex64 {
        self.values[(n + self.prefix_len as isize) as usize]
    }
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Fractional part of `lambda1 * k` with `lambda1 = num/den` exact, in [0, 1).
pub(crate) fn lambda1_frac(params: &AfdmParams, k: i64) -> f64 {
    let num = *params.lambda1.numer();
    let den = *params.lambda1.denom();
    (num * k).rem_euclid(den) as f64 / den as f64
}

/// The forward DAFT matrix `A` (unitary).
pub fn daft_matrix(params: &AfdmParams) -> DMatrix<Complex64> {
    let n = params.n;
    let scale = (n as f64).sqrt().recip();
    DMatrix::from_fn(n, n, |v, u| {
        let twiddle = ((v * u) % n) as f64 / n as f64;
        let chirp1 = lambda1_frac(params, (u * u) as i64);
        let chirp2 = params.lambda2 * (v * v) as f64;
        scale * cis(-TAU * (chirp2 + twiddle + chirp1))
    })
}

/// Inverse transform: `s = A^H x`, no prefix attached.
pub fn idaft(x: &DafVector, params: &AfdmParams) -> Result<TimeVector> {
    if x.len() != params.n {
        return Err(AfdmError::LengthMismatch { expected: params.n, actual: x.len() });
    }
    let a = daft_matrix(params);
    Ok(TimeVector::new(a.adjoint() * &x.values, 0))
}

/// Forward transform of a prefix-free received block: `y = A r`.
pub fn daft(r: &TimeVector, params: &AfdmParams) -> Result<DafVector> {
    if r.prefix_len != 0 || r.values.len() != params.n {
        return Err(AfdmError::LengthMismatch { expected: params.n, actual: r.values.len() });
    }
    let a = daft_matrix(params);
    Ok(DafVector::new(a * &r.values))
}

/// Prefix phase factor: the sample at negative time `n` is
/// `s[n + N] * exp(-j 2 pi lambda1 (N^2 + 2 N n))`.
///
/// This is the unique extension satisfying the chirp-periodicity
/// `s[n + N] = s[n] exp(j 2 pi lambda1 (N^2 + 2 N n))` of the sampled
/// chirp waveform, so channel delays act circularly in the chirp domain.
fn cpp_phase(params: &AfdmParams, n: isize) -> Complex64 {
    let big_n = params.n as i64;
    let arg = big_n * big_n + 2 * big_n * n as i64;
    cis(-TAU * lambda1_frac(params, arg))
}

/// Prepends the chirp-periodic prefix.
pub fn add_cpp(s: &TimeVector, params: &AfdmParams) -> Result<TimeVector> {
    if s.prefix_len != 0 || s.values.len() != params.n {
        return Err(AfdmError::LengthMismatch { expected: params.n, actual: s.values.len() });
    }
    let cpp = params.cpp_len;
    let n = params.n;
    let mut out = DVector::zeros(cpp + n);
    for i in 0..cpp {
        let t = i as isize - cpp as isize; // time index in [-cpp, -1]
        out[i] = s.values[(t + n as isize) as usize] * cpp_phase(params, t);
    }
    out.rows_mut(cpp, n).copy_from(&s.values);
    Ok(TimeVector::new(out, cpp))
}

/// Drops the prefix samples.
pub fn remove_cpp(r: &TimeVector, params: &AfdmParams) -> Result<TimeVector> {
    if r.prefix_len != params.cpp_len || r.body_len() != params.n {
        return Err(AfdmError::LengthMismatch {
            expected: params.n + params.cpp_len,
            actual: r.values.len(),
        });
    }
    Ok(TimeVector::new(r.values.rows(r.prefix_len, params.n).into_owned(), 0))
}
