//! Closed-form FLOP counts for the detectors.
//!
//! Complex multiply = 6 flops, complex add = 2, real multiply/add = 1.

/// Which detector's complexity formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Ml,
    Dlmp,
    Mp,
    Mmse,
}

/// FLOP count of one detection.
///
/// `n_total` is the frame length `N`, `p` the path count, `nt` the antenna
/// count, `m_ord` the constellation size, `group_n` the IM group size `n`,
/// and `n_iter_ave` the average iteration count of the iterative detectors
/// (ignored for MMSE, which is non-iterative, and for ML, reported as 0
/// since its exhaustive search has no per-iteration closed form here).
pub fn flop_estimate(
    which: DetectorKind,
    n_total: usize,
    p: usize,
    nt: usize,
    m_ord: usize,
    group_n: usize,
    n_iter_ave: f64,
) -> f64 {
    let n = n_total as f64;
    let pnt = (p * nt) as f64;
    let m = m_ord as f64;
    match which {
        DetectorKind::Ml => 0.0,
        DetectorKind::Mmse => 16.0 * n * n * n + 13.0 * n * n,
        DetectorKind::Mp => (n * pnt * (31.0 * m + 43.0) - 2.0 * n) * n_iter_ave,
        DetectorKind::Dlmp => {
            let gn = group_n as f64;
            let mean_var = pnt * (4.0 * m + 10.0) * n - 2.0 * n + pnt * (9.0 * m + 15.0) * n;
            let observation = 17.0 * pnt * (m + 1.0) * n;
            let variable = pnt * (m + 1.0) * n;
            let indicator = pnt * (m + 1.0) * n - 2.0 * n;
            let constraint = (3.0 * (gn - 1.0) * (gn - 2.0) / 2.0 - 3.0) * n;
            (mean_var + observation + variable + indicator + constraint) * n_iter_ave
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mmse_n64() {
        assert_eq!(flop_estimate(DetectorKind::Mmse, 64, 3, 2, 2, 4, 1.0), 4_247_552.0);
    }

    #[test]
    fn mp_per_iteration_n64() {
        // N*P*Nt*(31M+43) - 2N = 64*6*105 - 128 = 40192.
        assert_eq!(flop_estimate(DetectorKind::Mp, 64, 3, 2, 2, 4, 1.0), 40_192.0);
        assert_eq!(flop_estimate(DetectorKind::Mp, 64, 3, 2, 2, 4, 10.0), 401_920.0);
    }

    #[test]
    fn dlmp_per_iteration_n64() {
        // Term-by-term for N=64, P=3, Nt=2, M=2, n=4:
        //   6*18*64-128 = 6784, 6*33*64 = 12672, 17*6*3*64 = 19584,
        //   6*3*64 = 1152, 6*3*64-128 = 1024, (3*3*2/2-3)*64 = 384.
        let want = 6784.0 + 12672.0 + 19584.0 + 1152.0 + 1024.0 + 384.0;
        assert_eq!(flop_estimate(DetectorKind::Dlmp, 64, 3, 2, 2, 4, 1.0), want);
        assert_eq!(want, 41_600.0);
    }

    #[test]
    fn dlmp_scales_linearly_in_iterations() {
        let one = flop_estimate(DetectorKind::Dlmp, 32, 2, 1, 4, 4, 1.0);
        let five = flop_estimate(DetectorKind::Dlmp, 32, 2, 1, 4, 4, 5.0);
        assert_eq!(five, 5.0 * one);
    }
}
