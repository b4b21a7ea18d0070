//! Yamada-Watanabe approximation machinery: level sequence `a_n`,
//! mollifiers `psi_n`, smoothed absolute values `phi_n`, spatial bump test
//! functions, and semigroup test functions with their validity checks.
//!
//! The level sequence comes from `int_{a_n}^{a_{n-1}} dx / x = n`, i.e.
//! `a_n = e^{-n(n+1)/2}`. Each `psi_n` is a smooth bump template mapped
//! affinely onto `(a_n, a_{n-1})` and calibrated to unit mass under the
//! hard cap `2/(n x)`; the cap is respected through a smooth soft-min, and
//! the template amplitude is bisected until the capped profile integrates
//! to one. `phi_n` is the double integral of `psi_n`, which sandwiches the
//! absolute value within `a_{n-1}`.

use crate::bessel::TransitionDensity;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::math;
use crate::quad::{self, trapezoid_uniform, Tolerance};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::Serialize;

/// `a_n = e^{-n(n+1)/2}`, with `a_0 = 1`.
pub fn level_value(n: usize) -> f64 {
    math::exp(-((n * (n + 1)) as f64) / 2.0)
}

/// Grid resolution per mollifier level.
const PSI_GRID: usize = 8193;

/// One mollifier level: `psi_n` on `(a_n, a_{n-1})` with its running
/// integrals.
#[derive(Debug, Clone)]
pub struct MollifierLevel {
    pub n: usize,
    /// `a_n`, the lower support endpoint.
    pub a_lower: f64,
    /// `a_{n-1}`, the upper support endpoint.
    pub a_upper: f64,
    /// Trapezoid mass of `psi_n` (calibrated to 1).
    pub mass: f64,
    /// `int_{a_n}^{a_{n-1}} (int psi) dy`, the plateau of `phi_n` minus
    /// the linear part.
    pub phi_plateau: f64,
    /// Calibrated template amplitude.
    lambda: f64,
    step: f64,
    cdf: Vec<f64>,
    phi: Vec<f64>,
}

impl MollifierLevel {
    fn build(n: usize) -> Result<Self> {
        let a_lower = level_value(n);
        let a_upper = level_value(n - 1);
        let half = 0.5 * (a_upper - a_lower);
        let mid = 0.5 * (a_upper + a_lower);
        let step = (a_upper - a_lower) / (PSI_GRID - 1) as f64;
        let xs: Vec<f64> = (0..PSI_GRID).map(|i| a_lower + step * i as f64).collect();

        // Smooth bump template and the pointwise cap 2/(n x).
        let template: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let u = (x - mid) / half;
                if math::abs(u) >= 1.0 {
                    0.0
                } else {
                    math::exp(-1.0 / (1.0 - u * u))
                }
            })
            .collect();
        let cap: Vec<f64> = xs.iter().map(|&x| 2.0 / (n as f64 * x)).collect();

        let mass_for = |lambda: f64| -> f64 {
            let vals: Vec<f64> = template
                .iter()
                .zip(&cap)
                .map(|(&g, &c)| soft_min(lambda * g, c))
                .collect();
            trapezoid_uniform(&vals, step)
        };

        // Bracket the amplitude: mass is increasing in lambda with limit
        // int cap = 2 > 1 over the support.
        let mut lo = 0.0;
        let mut hi = 1.0 / half;
        let mut guard = 0;
        while mass_for(hi) < 1.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Construction {
                    level: n,
                    msg: "capped template cannot reach unit mass",
                });
            }
        }
        for _ in 0..200 {
            let midl = 0.5 * (lo + hi);
            if mass_for(midl) < 1.0 {
                lo = midl;
            } else {
                hi = midl;
            }
        }
        let lambda = 0.5 * (lo + hi);

        let psi: Vec<f64> = template
            .iter()
            .zip(&cap)
            .map(|(&g, &c)| soft_min(lambda * g, c))
            .collect();
        let mass = trapezoid_uniform(&psi, step);

        // Running integrals: cdf(x) = int_{a_n}^x psi, phi-part on the
        // support; outside, phi continues linearly with slope cdf = mass.
        let mut cdf = Vec::with_capacity(PSI_GRID);
        let mut phi = Vec::with_capacity(PSI_GRID);
        let mut c_acc = 0.0;
        let mut p_acc = 0.0;
        cdf.push(0.0);
        phi.push(0.0);
        for i in 1..PSI_GRID {
            let c_prev = c_acc;
            c_acc += 0.5 * (psi[i - 1] + psi[i]) * step;
            p_acc += 0.5 * (c_prev + c_acc) * step;
            cdf.push(c_acc);
            phi.push(p_acc);
        }

        Ok(MollifierLevel {
            n,
            a_lower,
            a_upper,
            mass,
            phi_plateau: p_acc,
            lambda,
            step,
            cdf,
            phi,
        })
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let pos = (x - self.a_lower) / self.step;
        let i = (pos as usize).min(PSI_GRID - 2);
        (i, pos - i as f64)
    }

    /// `psi_n(x)`; zero outside `(a_n, a_{n-1})` exactly. Evaluated from
    /// the calibrated closed form, so the cap holds pointwise (linear
    /// interpolation would overshoot the convex cap between nodes).
    pub fn eval_psi(&self, x: f64) -> f64 {
        if x <= self.a_lower || x >= self.a_upper {
            return 0.0;
        }
        let half = 0.5 * (self.a_upper - self.a_lower);
        let mid = 0.5 * (self.a_upper + self.a_lower);
        let u = (x - mid) / half;
        if math::abs(u) >= 1.0 {
            return 0.0;
        }
        let g = math::exp(-1.0 / (1.0 - u * u));
        soft_min(self.lambda * g, 2.0 / (self.n as f64 * x))
    }

    /// `phi_n'(x) = sgn(x) int_0^{|x|} psi_n`.
    pub fn eval_phi_prime(&self, x: f64) -> f64 {
        let ax = math::abs(x);
        let mag = if ax <= self.a_lower {
            0.0
        } else if ax >= self.a_upper {
            self.mass
        } else {
            let (i, w) = self.locate(ax);
            self.cdf[i] + w * (self.cdf[i + 1] - self.cdf[i])
        };
        math::signum(x) * mag
    }

    /// `phi_n(x) = int_0^{|x|} int_0^y psi_n(z) dz dy`; even, vanishes in a
    /// neighbourhood of zero, and grows with unit slope past the support.
    pub fn eval_phi(&self, x: f64) -> f64 {
        let ax = math::abs(x);
        if ax <= self.a_lower {
            0.0
        } else if ax >= self.a_upper {
            self.phi_plateau + self.mass * (ax - self.a_upper)
        } else {
            let (i, w) = self.locate(ax);
            self.phi[i] + w * (self.phi[i + 1] - self.phi[i])
        }
    }

    /// Exact supremum of `|x| - phi_n(x)`, attained past the support.
    pub fn sup_abs_gap(&self) -> f64 {
        // For |x| >= a_{n-1}: |x| - phi = a_upper - plateau + (1-mass)(|x|-a_upper);
        // mass = 1 to calibration accuracy, so the plateau value is the sup.
        self.a_upper - self.phi_plateau
    }
}

/// Smooth minimum `(a^{-8} + b^{-8})^{-1/8} <= min(a, b)`, used to flatten
/// the bump template against the cap without losing smoothness.
fn soft_min(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let r = lo / hi;
    let r8 = r * r * r * r * r * r * r * r;
    lo / math::powf(1.0 + r8, 0.125)
}

/// Mollifier levels `1..=n_max`.
#[derive(Debug, Clone)]
pub struct MollifierFamily {
    pub levels: Vec<MollifierLevel>,
}

/// Build the family; fails with the offending level if a capped template
/// cannot be calibrated.
pub fn build_family(n_max: usize) -> Result<MollifierFamily> {
    if n_max < 1 {
        return Err(Error::Domain("need at least one mollifier level"));
    }
    let levels = (1..=n_max)
        .map(MollifierLevel::build)
        .collect::<Result<Vec<_>>>()?;
    Ok(MollifierFamily { levels })
}

impl MollifierFamily {
    pub fn level(&self, n: usize) -> Option<&MollifierLevel> {
        self.levels.get(n.checked_sub(1)?)
    }
}

/// Mass of the standard normal inside one standard deviation,
/// `erf(1/sqrt 2) ~ 0.6827`.
pub fn central_gaussian_mass() -> f64 {
    math::erf(math::FRAC_1_SQRT_2)
}

/// Smallest admissible Dirac-rate exponent for a diffusion Holder index.
pub fn eta_threshold(xi: f64) -> f64 {
    1.0 / (2.0 * xi - 1.0)
}

/// Admissible window for the regularity gain `zeta`:
/// `alpha/(2 xi - 1) < zeta < min((1/2 - alpha)/(1 - xi), 1)`; the induced
/// `eta = zeta / alpha` then exceeds `1/(2 xi - 1)`.
pub fn zeta_window(alpha: f64, xi: f64) -> Result<(f64, f64)> {
    if !(0.0 < alpha && alpha < 0.5) {
        return Err(Error::Domain("zeta window needs alpha in (0, 1/2)"));
    }
    if !(xi > 0.5 && xi <= 1.0) {
        return Err(Error::Domain("zeta window needs xi in (1/2, 1]"));
    }
    let lo = alpha / (2.0 * xi - 1.0);
    let hi = if xi == 1.0 {
        1.0
    } else {
        math::min((0.5 - alpha) / (1.0 - xi), 1.0)
    };
    if lo >= hi {
        return Err(Error::Domain("empty zeta window: xi too close to threshold"));
    }
    Ok((lo, hi))
}

/// Spatial bump test function: a Gaussian of width `1/m` under a smooth
/// cutoff whose pad `b_n` is chosen so the Gaussian mass of the cutoff
/// annulus is exactly `a_n / 2`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct BumpTest {
    pub n: usize,
    pub eta: f64,
    /// Dirac rate `m = a_{n-1}^{-1/eta}`.
    pub m: f64,
    /// Cutoff pad solving the annulus-mass equation.
    pub b_n: f64,
    pub center: f64,
    pub a_n: f64,
}

/// Solve the annulus-mass equation and assemble the bump.
pub fn build_bump(n: usize, eta: f64, center: f64) -> Result<BumpTest> {
    if n < 1 {
        return Err(Error::Domain("bump level must be at least 1"));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Domain("eta must be positive"));
    }
    let a_n = level_value(n);
    let a_prev = level_value(n - 1);
    let m = math::powf(a_prev, -1.0 / eta);
    let target = 0.5 * a_n;

    // Annulus mass around the ball of radius 1/m:
    // erf((1 + m b) / sqrt 2) - erf(1 / sqrt 2) = a_n / 2.
    let annulus = |b: f64| math::erf((1.0 + m * b) * math::FRAC_1_SQRT_2) - central_gaussian_mass();
    let mut hi = 1.0 / m;
    let mut guard = 0;
    while annulus(hi) < target {
        hi *= 2.0;
        guard += 1;
        if guard > 100 {
            return Err(Error::Construction {
                level: n,
                msg: "annulus mass equation has no bracketable root",
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if annulus(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b_n = 0.5 * (lo + hi);

    Ok(BumpTest {
        n,
        eta,
        m,
        b_n,
        center,
        a_n,
    })
}

impl BumpTest {
    /// Gaussian factor `m phi(m d)` at distance `d` from the center.
    fn gauss(&self, d: f64) -> f64 {
        self.m * math::norm_pdf(self.m * d)
    }

    /// Smooth cutoff: 1 inside the `1/m` ball, 0 beyond `1/m + b_n`.
    fn cutoff(&self, d: f64) -> f64 {
        1.0 - math::smoothstep5((d - 1.0 / self.m) / self.b_n)
    }

    /// `Phi_x^n(y)`; with identical Gaussian and cutoff factors in both
    /// slots the symmetrized sum collapses to `cutoff * gauss / m_sigma`.
    pub fn eval(&self, y: f64) -> f64 {
        let d = math::abs(y - self.center);
        self.cutoff(d) * self.gauss(d) / central_gaussian_mass()
    }

    pub fn support_radius(&self) -> f64 {
        1.0 / self.m + self.b_n
    }

    /// Gaussian mass of the cutoff annulus, for checking against `a_n/2`.
    pub fn annulus_mass(&self) -> f64 {
        math::erf((1.0 + self.m * self.b_n) * math::FRAC_1_SQRT_2) - central_gaussian_mass()
    }

    /// `int Phi_x^n(0) dx` over the centers (bounded by 2).
    pub fn center_integral(&self) -> Result<f64> {
        let r = self.support_radius();
        let probe = |x: f64| {
            let d = math::abs(x);
            self.cutoff(d) * self.gauss(d) / central_gaussian_mass()
        };
        Ok(quad::integrate(probe, -r, r, Tolerance::rel(1e-10))?.value)
    }

    /// `int Phi_x^n(0)^2 dx` (bounded by a constant times `m`).
    pub fn center_square_integral(&self) -> Result<f64> {
        let r = self.support_radius();
        let probe = |x: f64| {
            let d = math::abs(x);
            let v = self.cutoff(d) * self.gauss(d) / central_gaussian_mass();
            v * v
        };
        Ok(quad::integrate(probe, -r, r, Tolerance::rel(1e-10))?.value)
    }

    /// `|int f(y) Phi_x^n(y) dy - f(x)|` for a smooth probe `f`.
    pub fn dirac_defect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let r = self.support_radius();
        let against = quad::integrate(
            |y| f(y) * self.eval(y),
            self.center - r,
            self.center + r,
            Tolerance::rel(1e-10),
        )?;
        Ok(math::abs(against.value - f(self.center)))
    }
}

/// Plateau cutoff `g_N`: one on `B(0, N)`, zero outside `B(0, N+1)`,
/// quintic in the transition annulus (closed-form derivatives).
#[derive(Debug, Clone, Copy)]
pub struct PlateauCutoff {
    pub big_n: usize,
}

impl PlateauCutoff {
    pub fn eval(&self, x: f64) -> f64 {
        1.0 - math::smoothstep5(math::abs(x) - self.big_n as f64)
    }

    pub fn d1(&self, x: f64) -> f64 {
        -math::signum(x) * math::smoothstep5_d1(math::abs(x) - self.big_n as f64)
    }

    pub fn d2(&self, x: f64) -> f64 {
        -math::smoothstep5_d2(math::abs(x) - self.big_n as f64)
    }

    /// `Delta_theta g = (2/(2+theta)^2) d/dx (|x|^{-theta} g')`; supported
    /// on the annulus `N <= |x| <= N+1`, away from the singular origin.
    pub fn delta_theta(&self, spec: &KernelSpec, x: f64) -> f64 {
        let theta = spec.theta();
        let ax = math::abs(x);
        if ax <= self.big_n as f64 || ax >= self.big_n as f64 + 1.0 {
            return 0.0;
        }
        let coef = 2.0 / ((2.0 + theta) * (2.0 + theta));
        let w = math::powf(ax, -theta);
        let dw = -theta * math::powf(ax, -theta - 1.0) * math::signum(x);
        coef * (dw * self.d1(x) + w * self.d2(x))
    }
}

/// `sup_N [ || |x|^{-theta} g_N' ||_inf + || Delta_theta g_N ||_inf ]` over
/// a list of plateau radii, evaluated on annulus meshes.
pub fn cutoff_family_bound(spec: &KernelSpec, radii: &[usize]) -> Result<f64> {
    if spec.is_degenerate() {
        return Err(Error::UnsupportedBranch("cutoff bound requires alpha > 0"));
    }
    let mut sup = 0.0f64;
    for &n in radii {
        let g = PlateauCutoff { big_n: n };
        let mut level = 0.0f64;
        for &x in math::linspace(n as f64 + 1e-9, n as f64 + 1.0, 2001).iter() {
            let weighted = math::abs(math::powf(x, -spec.theta()) * g.d1(x));
            let dtheta = math::abs(g.delta_theta(spec, x));
            level = math::max(level, weighted + dtheta);
        }
        sup = math::max(sup, level);
    }
    Ok(sup)
}

/// Semigroup test function `Psi(s, x) = (S_{t-s} phi_M)(x) g_N(x)` built
/// from the symmetrized transition density (for even `phi` the semigroup
/// reduces to an integral over the half line).
#[derive(Debug, Clone)]
pub struct SemigroupTest {
    pub big_n: usize,
    pub m_param: usize,
    pub t: f64,
    td: TransitionDensity,
    cutoff: PlateauCutoff,
}

/// Validity report: positivity at the origin, compact support, the
/// weighted-gradient integral, and the exponential tail of the semigroup
/// on the cutoff annulus.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct PsiReport {
    pub psi_zero_min: f64,
    pub psi_zero_positive: bool,
    pub support_radius: f64,
    pub weighted_gradient_integral: f64,
    /// Fitted constant in `|S_{t-s} phi_M(x)| <= C e^{-|x|}` over the
    /// annulus `N < |x| < N+1`.
    pub tail_constant: f64,
    pub tail_decreasing: bool,
}

pub fn build_semigroup_test(
    big_n: usize,
    m_param: usize,
    t: f64,
    spec: KernelSpec,
) -> Result<SemigroupTest> {
    if big_n < 1 {
        return Err(Error::Domain("plateau radius must be at least 1"));
    }
    if m_param < 2 {
        return Err(Error::Domain("Dirac parameter M must be at least 2"));
    }
    if !(t > 0.0 && t <= spec.horizon()) {
        return Err(Error::Domain("test time must lie in (0, T]"));
    }
    let td = TransitionDensity::new(spec)?;
    Ok(SemigroupTest {
        big_n,
        m_param,
        t,
        td,
        cutoff: PlateauCutoff { big_n },
    })
}

impl SemigroupTest {
    /// Even Dirac approximation `phi_M(x) = M e^{-M^2 x^2}` with a smooth
    /// roll-off between `1/M` and `2/M`.
    pub fn phi_m(&self, x: f64) -> f64 {
        let m = self.m_param as f64;
        let ax = math::abs(x);
        if ax >= 2.0 / m {
            return 0.0;
        }
        let roll = 1.0 - math::smoothstep5((ax - 1.0 / m) * m);
        m * math::exp(-m * m * x * x) * roll
    }

    /// `(S_u phi_M)(x) = int_0^inf p_u(|x|, y) phi_M(y) dy`; `S_0` is the
    /// identity.
    pub fn semigroup_apply(&self, u: f64, x: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::Domain("semigroup time must be non-negative"));
        }
        if u == 0.0 {
            return Ok(self.phi_m(x));
        }
        let hi = 2.0 / self.m_param as f64;
        let r = quad::integrate(
            |y| self.td.eval(u, x, y).unwrap_or(f64::NAN) * self.phi_m(y),
            0.0,
            hi,
            Tolerance {
                abs: 1e-14,
                rel: 1e-9,
            },
        )?;
        Ok(r.value)
    }

    /// `Psi(s, x)` for `0 <= s <= t`.
    pub fn eval(&self, s: f64, x: f64) -> Result<f64> {
        if !(0.0..=self.t).contains(&s) {
            return Err(Error::Domain("Psi is defined for s in [0, t]"));
        }
        let g = self.cutoff.eval(x);
        if g == 0.0 {
            return Ok(0.0);
        }
        Ok(self.semigroup_apply(self.t - s, x)? * g)
    }

    /// Relative defect of `S_s (S_t phi) = S_{s+t} phi` at the probe
    /// points, with the inner function tabulated on a dense grid.
    pub fn semigroup_defect(&self, s: f64, u: f64, probes: &[f64]) -> Result<f64> {
        let y_hi = self.td.range_cutoff(u, 2.0 / self.m_param as f64) + 1.0;
        let grid = math::linspace(0.0, y_hi, 2001);
        let inner: Vec<f64> = grid
            .iter()
            .map(|&y| self.semigroup_apply(u, y))
            .collect::<Result<_>>()?;
        let h = grid[1] - grid[0];
        let interp = |y: f64| -> f64 {
            if y >= y_hi {
                return 0.0;
            }
            let pos = y / h;
            let i = (pos as usize).min(grid.len() - 2);
            let w = pos - i as f64;
            inner[i] + w * (inner[i + 1] - inner[i])
        };

        let mut worst = 0.0f64;
        for &x in probes {
            let composed = quad::integrate(
                |y| self.td.eval(s, x, y).unwrap_or(f64::NAN) * interp(y),
                0.0,
                y_hi,
                Tolerance::rel(1e-8),
            )?
            .value;
            let direct = self.semigroup_apply(s + u, x)?;
            worst = math::max(worst, math::rel_err(composed, direct));
        }
        Ok(worst)
    }

    /// Numerical validity check of the test function.
    pub fn validate(&self) -> Result<PsiReport> {
        // (i) positivity at the origin along the time mesh.
        let mut psi_zero_min = f64::INFINITY;
        for &s in math::linspace(0.0, self.t, 9).iter() {
            psi_zero_min = math::min(psi_zero_min, self.eval(s, 0.0)?);
        }

        // (iii) sup_s int |x|^{-theta} (d Psi / dx)^2 dx, gradient by
        // central differences; the integrand vanishes like |x|^{2+theta}
        // at the origin, so skipping the singular node is harmless.
        let theta = self.td.spec().theta();
        let radius = self.big_n as f64 + 1.0;
        let mut weighted = 0.0f64;
        let h = 1e-5;
        for &s in [0.0, 0.5 * self.t, self.t].iter() {
            let xs = math::linspace(5e-3, radius, 401);
            let vals: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    let d =
                        (self.eval(s, x + h).unwrap_or(f64::NAN)
                            - self.eval(s, x - h).unwrap_or(f64::NAN))
                            / (2.0 * h);
                    math::powf(x, -theta) * d * d
                })
                .collect();
            // Even integrand: double the half-line trapezoid.
            let integral = 2.0 * trapezoid_uniform(&vals, xs[1] - xs[0]);
            weighted = math::max(weighted, integral);
        }

        // Exponential tail of the semigroup on the annulus.
        let mut tail_constant = 0.0f64;
        let mut tail_decreasing = true;
        let annulus = math::linspace(self.big_n as f64 + 1e-6, radius - 1e-6, 41);
        let mut prev = f64::INFINITY;
        for &x in annulus.iter() {
            let v = math::abs(self.semigroup_apply(0.5 * self.t, x)?);
            tail_constant = math::max(tail_constant, v * math::exp(x));
            if v > prev * (1.0 + 1e-12) {
                tail_decreasing = false;
            }
            prev = v;
        }

        Ok(PsiReport {
            psi_zero_min,
            psi_zero_positive: psi_zero_min > 0.0,
            support_radius: radius,
            weighted_gradient_integral: weighted,
            tail_constant,
            tail_decreasing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{abs, cos, exp, rel_err};

    #[test]
    fn level_sequence_matches_closed_form() {
        assert_eq!(level_value(0), 1.0);
        assert_eq!(level_value(1), exp(-1.0));
        assert_eq!(level_value(2), exp(-3.0));
        assert!(abs(level_value(1) - 0.36787944117144233) < 1e-16);
        assert!(abs(level_value(2) - 0.049787068367863944) < 1e-16);
        // Strictly decreasing with ratio e^n.
        for n in 1..9 {
            assert!(level_value(n) < level_value(n - 1));
            assert!(rel_err(level_value(n - 1) / level_value(n), exp(n as f64)) < 1e-12);
        }
    }

    #[test]
    fn mollifier_masses_and_caps() {
        let family = build_family(8).unwrap();
        for level in &family.levels {
            assert!(
                abs(level.mass - 1.0) < 1e-8,
                "level {}: mass {}",
                level.n,
                level.mass
            );
            // 0 <= psi <= 2/(n x) on the support; zero outside.
            let n = level.n as f64;
            for &x in math::linspace(level.a_lower, level.a_upper, 1234).iter() {
                let v = level.eval_psi(x);
                assert!(v >= 0.0);
                assert!(v <= 2.0 / (n * x) * (1.0 + 1e-12), "level {}", level.n);
            }
            assert_eq!(level.eval_psi(level.a_lower * 0.5), 0.0);
            assert_eq!(level.eval_psi(level.a_upper * 1.5), 0.0);
        }
    }

    #[test]
    fn phi_properties() {
        let family = build_family(8).unwrap();
        for level in &family.levels {
            // phi(0) = 0, phi'(0) = 0, evenness.
            assert_eq!(level.eval_phi(0.0), 0.0);
            assert_eq!(level.eval_phi_prime(0.0), 0.0);
            for &x in &[0.01, 0.3, 0.9, 2.0] {
                assert_eq!(level.eval_phi(x), level.eval_phi(-x));
                assert!(abs(level.eval_phi_prime(x)) <= 1.0 + 1e-9);
            }
            // Sandwich: 0 <= |x| - phi_n(x) <= a_{n-1} on a dense sweep.
            for &x in math::linspace(-2.0, 2.0, 2001).iter() {
                let gap = abs(x) - level.eval_phi(x);
                assert!(gap >= -1e-12, "level {}: gap {gap}", level.n);
                assert!(
                    gap <= level.a_upper * (1.0 + 1e-9),
                    "level {}: gap {gap}",
                    level.n
                );
            }
            assert!(level.sup_abs_gap() <= level.a_upper);
            assert!(level.sup_abs_gap() >= 0.0);
        }
    }

    #[test]
    fn phi_converges_uniformly() {
        let family = build_family(6).unwrap();
        let mut prev = f64::INFINITY;
        for level in &family.levels {
            let sup = level.sup_abs_gap();
            assert!(sup < prev, "level {}", level.n);
            prev = sup;
        }
    }

    #[test]
    fn bump_mass_identity_and_prop6_bounds() {
        let mut sq_over_m = Vec::new();
        for n in 1..=6 {
            let bump = build_bump(n, 2.0, 0.0).unwrap();
            assert!(
                abs(bump.annulus_mass() - 0.5 * bump.a_n) < 1e-10,
                "n = {n}"
            );
            let mass = bump.center_integral().unwrap();
            assert!(mass <= 2.0, "n = {n}: integral {mass}");
            sq_over_m.push(bump.center_square_integral().unwrap() / bump.m);
        }
        // int Phi(0)^2 dx / m bounded by one constant across levels.
        let bound = sq_over_m.iter().cloned().fold(0.0, math::max);
        assert!(bound < 1.0, "bound = {bound}");
        for v in sq_over_m {
            assert!(v > 0.0);
        }
    }

    #[test]
    fn bump_dirac_behaviour_on_cosine() {
        for &center in &[0.0, 0.5, -1.2] {
            for n in 2..=5 {
                let bump = build_bump(n, 2.0, center).unwrap();
                let defect = bump.dirac_defect(cos).unwrap();
                assert!(
                    defect <= 2.0 / bump.m,
                    "n = {n}, center = {center}: defect {defect}"
                );
            }
        }
    }

    #[test]
    fn bump_m_scale_and_validation() {
        // m = a_{n-1}^{-1/eta} > 1 from level 2 on (m = 1 exactly at n = 1).
        assert_eq!(build_bump(1, 2.0, 0.0).unwrap().m, 1.0);
        for n in 2..=6 {
            assert!(build_bump(n, 2.0, 0.0).unwrap().m > 1.0);
        }
        assert!(build_bump(0, 2.0, 0.0).is_err());
        assert!(build_bump(2, 0.0, 0.0).is_err());
    }

    #[test]
    fn eta_and_zeta_validators() {
        assert_eq!(eta_threshold(0.75), 2.0);
        let (lo, hi) = zeta_window(0.25, 0.75).unwrap();
        assert!(abs(lo - 0.5) < 1e-15);
        assert!(abs(hi - 1.0) < 1e-15);
        // eta = zeta/alpha > 1/(2 xi - 1) across the window.
        for &zeta in math::linspace(lo + 1e-6, hi - 1e-6, 7).iter() {
            assert!(zeta / 0.25 > eta_threshold(0.75));
        }
        // xi at the admissibility edge leaves no room.
        assert!(zeta_window(0.25, 2.0 / 3.0).is_err());
        assert!(zeta_window(0.0, 0.75).is_err());
    }

    #[test]
    fn cutoff_derivative_bound_is_uniform() {
        let spec = KernelSpec::new(0.25, 1.0).unwrap();
        let per_n: Vec<f64> = (1..=6)
            .map(|n| cutoff_family_bound(&spec, &[n]).unwrap())
            .collect();
        let total = cutoff_family_bound(&spec, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert!(total.is_finite() && total > 0.0);
        // The sup over the family is attained at the smallest radius.
        assert!(rel_err(total, per_n[0]) < 1e-12);
        for w in per_n.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9));
        }
    }

    fn quarter_test() -> SemigroupTest {
        let spec = KernelSpec::new(0.25, 1.0).unwrap();
        build_semigroup_test(1, 4, 0.5, spec).unwrap()
    }

    #[test]
    fn psi_at_terminal_time_is_the_plain_product() {
        let st = quarter_test();
        for &x in &[0.0, 0.1, 0.3, 1.2] {
            let psi = st.eval(st.t, x).unwrap();
            let direct = st.phi_m(x) * st.cutoff.eval(x);
            assert_eq!(psi, direct);
        }
    }

    #[test]
    fn psi_validates_and_has_exponential_tail() {
        let st = quarter_test();
        let report = st.validate().unwrap();
        assert!(report.psi_zero_positive, "min = {}", report.psi_zero_min);
        assert!(report.weighted_gradient_integral.is_finite());
        assert!(report.tail_constant.is_finite());
        assert!(report.tail_decreasing);
        assert_eq!(report.support_radius, 2.0);
    }

    #[test]
    fn semigroup_composes() {
        let st = quarter_test();
        let defect = st.semigroup_defect(0.1, 0.15, &[0.0, 0.2, 0.6]).unwrap();
        assert!(defect < 1e-4, "defect = {defect}");
    }
}
