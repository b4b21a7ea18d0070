//! Scalar math built on [`libm`] so the crate stays `no_std` and produces
//! bit-identical values on every platform.

use alloc::vec::Vec;

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Natural log of the Gamma function for positive arguments.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

#[inline]
pub fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub fn max(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
pub fn min(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

/// Relative difference `|a - b| / max(|a|, |b|, floor)`.
#[inline]
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = max(max(abs(a), abs(b)), f64::MIN_POSITIVE);
    abs(a - b) / scale
}

pub const SQRT_2PI: f64 = 2.5066282746310002;
pub const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal distribution function via `erfc`.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation of the normal quantile (coefficients as
// published; |relative error| < 1.15e-9), tightened to machine precision by
// one Halley step against `erfc`.
const ICDF_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ICDF_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ICDF_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ICDF_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Inverse of the standard normal CDF for `p` in `(0, 1)`.
pub fn inv_norm_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = sqrt(-2.0 * ln(p));
        (((((ICDF_C[0] * q + ICDF_C[1]) * q + ICDF_C[2]) * q + ICDF_C[3]) * q + ICDF_C[4]) * q
            + ICDF_C[5])
            / ((((ICDF_D[0] * q + ICDF_D[1]) * q + ICDF_D[2]) * q + ICDF_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((ICDF_A[0] * r + ICDF_A[1]) * r + ICDF_A[2]) * r + ICDF_A[3]) * r + ICDF_A[4]) * r
            + ICDF_A[5])
            * q
            / (((((ICDF_B[0] * r + ICDF_B[1]) * r + ICDF_B[2]) * r + ICDF_B[3]) * r + ICDF_B[4])
                * r
                + 1.0)
    } else {
        let q = sqrt(-2.0 * ln(1.0 - p));
        -(((((ICDF_C[0] * q + ICDF_C[1]) * q + ICDF_C[2]) * q + ICDF_C[3]) * q + ICDF_C[4]) * q
            + ICDF_C[5])
            / ((((ICDF_D[0] * q + ICDF_D[1]) * q + ICDF_D[2]) * q + ICDF_D[3]) * q + 1.0)
    };

    // Halley refinement: e = Phi(x) - p, u = e / phi(x).
    let e = norm_cdf(x) - p;
    let u = e * SQRT_2PI * exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Quintic smoothstep: 0 at `u <= 0`, 1 at `u >= 1`, C^2 in between.
#[inline]
pub fn smoothstep5(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// First derivative of [`smoothstep5`].
#[inline]
pub fn smoothstep5_d1(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        u * u * (30.0 + u * (-60.0 + 30.0 * u))
    }
}

/// Second derivative of [`smoothstep5`].
#[inline]
pub fn smoothstep5_d2(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        u * (60.0 + u * (-180.0 + 120.0 * u))
    }
}

/// Least-squares line through `(xs, ys)`; returns `(slope, intercept)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Median of a sample (copies and sorts; ties by average of the middle pair).
pub fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in median"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `n` points spaced linearly over `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// `n` points spaced logarithmically over `[a, b]`, `0 < a < b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    debug_assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (ln(a), ln(b));
    linspace(la, lb, n).into_iter().map(exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf_round_trips_through_erfc() {
        for &p in &[1e-12, 1e-6, 0.02, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-9] {
            let x = inv_norm_cdf(p);
            assert!(rel_err(norm_cdf(x), p) < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn inverse_cdf_is_antisymmetric() {
        assert_eq!(inv_norm_cdf(0.5), 0.0);
        for &p in &[0.01, 0.2, 0.45] {
            let a = inv_norm_cdf(p);
            let b = inv_norm_cdf(1.0 - p);
            assert!(abs(a + b) < 1e-13);
        }
    }

    #[test]
    fn smoothstep_is_monotone_with_matching_derivatives() {
        let us = linspace(-0.2, 1.2, 141);
        for w in us.windows(2) {
            assert!(smoothstep5(w[1]) >= smoothstep5(w[0]));
        }
        // Central differences agree with the closed-form derivatives.
        let h = 1e-5;
        for &u in &[0.1, 0.37, 0.5, 0.82] {
            let d1 = (smoothstep5(u + h) - smoothstep5(u - h)) / (2.0 * h);
            assert!(abs(d1 - smoothstep5_d1(u)) < 1e-8);
            let d2 = (smoothstep5_d1(u + h) - smoothstep5_d1(u - h)) / (2.0 * h);
            assert!(abs(d2 - smoothstep5_d2(u)) < 1e-6);
        }
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = linspace(0.0, 5.0, 20);
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.25).collect();
        let (slope, intercept) = fit_line(&xs, &ys);
        assert!(abs(slope - 2.5) < 1e-12);
        assert!(abs(intercept + 1.25) < 1e-12);
    }

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
