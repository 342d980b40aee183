use super::assemble::{assemble_coefficients, ModelConstants};
use super::flux::FluxLaw;
use super::forcing::{ForcingSample, Regime, TidalForcing};
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};
use std::fmt;

/// Which inequality a sample point violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    FluxOrder,
    FluxNonnegative,
    FluxBound,
    FluxThreshold,
    FluxLipschitz,
    FluxOrigin,
    ThetaPeriodicity,
    TauPeriodicity,
    FieldBound,
    DerivativeBound,
    Freeze,
    ActiveWindow,
}

impl Check {
    pub fn label(self) -> &'static str {
        match self {
            Check::FluxOrder => "flux.order (g_a >= g_c)",
            Check::FluxNonnegative => "flux.nonnegative (g_c >= 0)",
            Check::FluxBound => "flux.bound (g_a <= d)",
            Check::FluxThreshold => "flux.threshold (u >= U_thr => g_a >= G_thr)",
            Check::FluxLipschitz => "flux.lipschitz (|g'| <= d)",
            Check::FluxOrigin => "flux.origin (g_c(0) = g_c'(0) = 0)",
            Check::ThetaPeriodicity => "forcing.theta_periodic",
            Check::TauPeriodicity => "forcing.tau_periodic",
            Check::FieldBound => "forcing.bound (|U|, |M| <= d)",
            Check::DerivativeBound => "forcing.derivative_bound (partials <= d)",
            Check::Freeze => "forcing.freeze (|U| <= U_thr => partials = 0)",
            Check::ActiveWindow => "forcing.active_window (|U| >= U_thr on [theta_a, theta_w])",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: Check,
    pub location: String,
    /// Amount by which the inequality fails (positive).
    pub margin: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} (margin {:.3e})", self.check.label(), self.location, self.margin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// The first [`ValidationReport::MAX_LISTED`] violations in sampling order.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub samples: usize,
    /// Infimum of the `eps`-dependent diffusivity over the active window.
    pub g_tilde_thr: f64,
}

impl ValidationReport {
    pub const MAX_LISTED: usize = 256;

    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }

    fn push(&mut self, check: Check, location: impl FnOnce() -> String, margin: f64) {
        self.violation_count += 1;
        if self.violations.len() < Self::MAX_LISTED {
            self.violations.push(Violation {
                check,
                location: location(),
                margin,
            });
        }
    }

    pub fn count(&self, check: Check) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples: {}", self.samples)?;
        writeln!(f, "violations: {}", self.violation_count)?;
        writeln!(f, "empirical G~_thr: {:.12e}", self.g_tilde_thr)?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        if self.violation_count > self.violations.len() {
            writeln!(f, "  ... {} more", self.violation_count - self.violations.len())?;
        }
        Ok(())
    }
}

const FLUX_SAMPLES: usize = 10_000;
// Tolerances and difference step for f64; other precisions rescale them by
// the ratio of machine epsilons.
const FREEZE_TOL: f64 = 1e-10;
const PERIOD_TOL: f64 = 1e-12;
const DIFF_STEP: f64 = 1e-7;

fn check_flux_law<T: Real>(law: &FluxLaw<T>, report: &mut ValidationReport) -> Result<()> {
    let d = law.d().as_f64();
    let u_max = law.u_thr() * T::lit(10.0);
    let step = u_max / T::from_usize_lossy(FLUX_SAMPLES - 1);
    let lip_tol = d * (1.0 + 1e-9);
    let mut prev: Option<(f64, f64, f64)> = None;
    for i in 0..FLUX_SAMPLES {
        let u = step * T::from_usize_lossy(i);
        let ga = law.eval_ga(u)?.as_f64();
        let gc = law.eval_gc(u)?.as_f64();
        let uf = u.as_f64();
        let at = || format!("u = {uf:.6e}");
        if gc > ga {
            report.push(Check::FluxOrder, at, gc - ga);
        }
        if gc < 0.0 {
            report.push(Check::FluxNonnegative, at, -gc);
        }
        if ga > d {
            report.push(Check::FluxBound, at, ga - d);
        }
        if u >= law.u_thr() && ga < law.g_thr().as_f64() {
            report.push(Check::FluxThreshold, at, law.g_thr().as_f64() - ga);
        }
        if let Some((u_prev, ga_prev, gc_prev)) = prev {
            let h = uf - u_prev;
            let da = ((ga - ga_prev) / h).abs();
            let dc = ((gc - gc_prev) / h).abs();
            if da.max(dc) > lip_tol {
                report.push(Check::FluxLipschitz, at, da.max(dc) - d);
            }
        }
        prev = Some((uf, ga, gc));
    }
    let g0 = law.eval_gc(T::zero())?.as_f64();
    if g0 != 0.0 {
        report.push(Check::FluxOrigin, || "u = 0".into(), g0.abs());
    }
    let ratios: Vec<f64> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&h| Ok(law.eval_gc(T::lit(h))?.as_f64() / h))
        .collect::<Result<_>>()?;
    for w in ratios.windows(2) {
        if w[1] > w[0] {
            report.push(Check::FluxOrigin, || "g_c(h)/h, h -> 0".into(), w[1] - w[0]);
        }
    }
    Ok(())
}

struct Probe<'a, T> {
    forcing: &'a TidalForcing<T>,
    eps: T,
}

impl<T: Real> Probe<'_, T> {
    fn at(&self, c: [T; 5]) -> Result<ForcingSample<T>> {
        self.forcing
            .eval(self.eps, c[0], c[1], c[2], Vec2::new(c[3], c[4]))
    }

    /// Central difference along coordinate `axis` with step `h`; returns
    /// (|dU|, |dM|).
    fn partial(&self, c: [T; 5], axis: usize, h: T) -> Result<(T, T)> {
        let mut plus = c;
        let mut minus = c;
        plus[axis] = plus[axis] + h;
        minus[axis] = minus[axis] - h;
        let (p, m) = (self.at(plus)?, self.at(minus)?);
        let two_h = h + h;
        Ok((
            (p.velocity - m.velocity).norm() / two_h,
            (p.height - m.height).abs() / two_h,
        ))
    }
}

/// Samples the flux law and the forcing on a tensor grid and reports every
/// violated hypothesis. Violations are report entries, never errors.
///
/// `sample_density` sets the number of `theta` samples per period; time,
/// `tau` and each spatial direction use `max(2, sample_density / 8)` samples.
pub fn validate_hypotheses<T: Real>(
    law: &FluxLaw<T>,
    forcing: &TidalForcing<T>,
    consts: &ModelConstants<T>,
    sample_density: usize,
) -> Result<ValidationReport> {
    if sample_density < 16 {
        return Err(Error::Precondition(format!(
            "sample_density must be at least 16, got {sample_density}"
        )));
    }
    let mut report = ValidationReport {
        violations: Vec::new(),
        violation_count: 0,
        samples: 0,
        g_tilde_thr: f64::INFINITY,
    };
    check_flux_law(law, &mut report)?;

    let probe = Probe {
        forcing,
        eps: consts.epsilon,
    };
    let d = law.d().as_f64();
    let u_thr = forcing.u_thr();
    let coarse = (sample_density / 8).max(2);
    let n_tau = if forcing.regime() == Regime::Mean { coarse } else { 1 };
    let (lx, ly) = forcing.domain();
    // central differences: step ~ eps^(1/3), round-off in the quotient ~ eps^(2/3)
    let ratio = T::epsilon().as_f64() / f64::EPSILON;
    let h = T::lit(DIFF_STEP * ratio.cbrt());
    let period_tol = PERIOD_TOL.max(64.0 * T::epsilon().as_f64());
    let freeze_tol = FREEZE_TOL * ratio.cbrt().powi(2);
    let deriv_tol = d * (1.0 + 1e-6);
    let one = T::one();

    let frac = |k: usize, n: usize| T::from_usize_lossy(k) / T::from_usize_lossy(n);
    let centre = |k: usize, n: usize| (T::from_usize_lossy(k) + T::lit(0.5)) / T::from_usize_lossy(n);

    let mut axes: Vec<(usize, T, &'static str)> = vec![(0, h, "t"), (2, h, "theta"), (3, h * lx, "x"), (4, h * ly, "y")];
    if forcing.regime() == Regime::Mean {
        axes.push((1, h, "tau"));
    }

    for it in 0..coarse {
        let t = frac(it, coarse);
        for itau in 0..n_tau {
            let tau = frac(itau, n_tau);
            for ith in 0..sample_density {
                let theta = frac(ith, sample_density);
                for ix in 0..coarse {
                    for iy in 0..coarse {
                        let c = [t, tau, theta, centre(ix, coarse) * lx, centre(iy, coarse) * ly];
                        let loc = || {
                            format!(
                                "(t, tau, theta, x, y) = ({:.4}, {:.4}, {:.4}, {:.4}, {:.4})",
                                c[0].as_f64(),
                                c[1].as_f64(),
                                c[2].as_f64(),
                                c[3].as_f64(),
                                c[4].as_f64()
                            )
                        };
                        report.samples += 1;
                        let base = probe.at(c)?;
                        let speed = base.velocity.norm();
                        let scale = speed.as_f64().max(base.height.abs().as_f64()).max(1.0);

                        let mut shifted = c;
                        shifted[2] = shifted[2] + one;
                        let s = probe.at(shifted)?;
                        let gap = (s.velocity - base.velocity).norm().as_f64() + (s.height - base.height).abs().as_f64();
                        if gap > period_tol * scale {
                            report.push(Check::ThetaPeriodicity, loc, gap);
                        }
                        if forcing.regime() == Regime::Mean {
                            let mut shifted = c;
                            shifted[1] = shifted[1] + one;
                            let s = probe.at(shifted)?;
                            let gap = (s.velocity - base.velocity).norm().as_f64()
                                + (s.height - base.height).abs().as_f64();
                            if gap > period_tol * scale {
                                report.push(Check::TauPeriodicity, loc, gap);
                            }
                        }

                        if speed.as_f64() > d {
                            report.push(Check::FieldBound, loc, speed.as_f64() - d);
                        }
                        if base.height.abs().as_f64() > d {
                            report.push(Check::FieldBound, loc, base.height.abs().as_f64() - d);
                        }

                        let frozen = speed <= u_thr;
                        let mut grad_u_sq = 0.0;
                        let mut grad_m_sq = 0.0;
                        for &(axis, step, _) in &axes {
                            let (du, dm) = probe.partial(c, axis, step)?;
                            let (du, dm) = (du.as_f64(), dm.as_f64());
                            if axis >= 3 {
                                grad_u_sq += du * du;
                                grad_m_sq += dm * dm;
                            } else if du.max(dm) > deriv_tol {
                                report.push(Check::DerivativeBound, loc, du.max(dm) - d);
                            }
                            if frozen && du.max(dm) > freeze_tol {
                                report.push(Check::Freeze, loc, du.max(dm));
                            }
                        }
                        let grad = grad_u_sq.sqrt().max(grad_m_sq.sqrt());
                        if grad > deriv_tol {
                            report.push(Check::DerivativeBound, loc, grad - d);
                        }
                    }
                }
            }
        }
    }

    // Active window: dense theta samples over [theta_alpha, theta_omega].
    let (ta, tw) = forcing.theta_window();
    for it in 0..coarse {
        let t = frac(it, coarse);
        for itau in 0..n_tau {
            let tau = frac(itau, n_tau);
            for k in 0..=sample_density {
                let theta = ta + (tw - ta) * frac(k, sample_density);
                for ix in 0..coarse {
                    for iy in 0..coarse {
                        let x = Vec2::new(centre(ix, coarse) * lx, centre(iy, coarse) * ly);
                        let sample = forcing.eval(consts.epsilon, t, tau, theta, x)?;
                        let speed = sample.velocity.norm();
                        if speed < u_thr {
                            report.push(
                                Check::ActiveWindow,
                                || format!("(t, tau, theta) = ({:.4}, {:.4}, {:.4})", t.as_f64(), tau.as_f64(), theta.as_f64()),
                                (u_thr - speed).as_f64(),
                            );
                        }
                        let coeff = assemble_coefficients(consts, law, forcing, t, tau, theta, x)?;
                        report.g_tilde_thr = report.g_tilde_thr.min(coeff.a_eps.as_f64());
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::forcing::{ForcingParams, SpatialModulation};

    fn law() -> FluxLaw<f64> {
        FluxLaw::new(4.0, 1.0, 2.0, 0.8).unwrap()
    }

    fn consts() -> ModelConstants<f64> {
        ModelConstants::new(1.0, 1.0, 1.0, 0.1, 0.0, 0.0).unwrap()
    }

    #[test]
    fn defaults_pass_in_every_regime() {
        for regime in [Regime::Short, Regime::Mean, Regime::Long] {
            let f = TidalForcing::new(ForcingParams::default_for(regime), 1.0, 1.0, 1.0).unwrap();
            let r = validate_hypotheses(&law(), &f, &consts(), 16).unwrap();
            assert!(r.is_clean(), "{regime:?}: {r}");
            assert!(r.g_tilde_thr >= 2.0 * (1.0 - 0.1 * 0.2 * 1.1) - 1e-12);
        }
    }

    #[test]
    fn unfrozen_slack_is_reported() {
        let mut p = ForcingParams::default_for(Regime::Short);
        p.freeze_width = None;
        let f = TidalForcing::new(p, 1.0, 1.0, 1.0).unwrap();
        let r = validate_hypotheses(&law(), &f, &consts(), 16).unwrap();
        assert!(r.count(Check::Freeze) > 0, "{r}");
    }

    #[test]
    fn fractional_frequency_breaks_periodicity() {
        let mut p = ForcingParams::default_for(Regime::Short);
        p.theta_frequency = 1.25;
        let f = TidalForcing::new(p, 1.0, 1.0, 1.0).unwrap();
        let r = validate_hypotheses(&law(), &f, &consts(), 16).unwrap();
        assert!(r.count(Check::ThetaPeriodicity) > 0);
    }

    #[test]
    fn steep_tide_breaks_derivative_bound() {
        let mut p = ForcingParams::default_for(Regime::Short);
        p.u_peak = 1.0;
        p.modulation = SpatialModulation::Uniform;
        let f = TidalForcing::new(p, 1.0, 1.0, 1.0).unwrap();
        let r = validate_hypotheses(&law(), &f, &consts(), 16).unwrap();
        assert!(r.count(Check::DerivativeBound) > 0);
    }

    #[test]
    fn steep_ramp_breaks_lipschitz_bound() {
        let steep = FluxLaw::new(4.0, 1.0, 2.0, 0.2).unwrap();
        let f = TidalForcing::new(ForcingParams::default_for(Regime::Short), 1.0, 1.0, 1.0).unwrap();
        let r = validate_hypotheses(&steep, &f, &consts(), 16).unwrap();
        assert!(r.count(Check::FluxLipschitz) > 0);
    }

    #[test]
    fn low_density_is_a_precondition_error() {
        let f = TidalForcing::new(ForcingParams::default_for(Regime::Short), 1.0, 1.0, 1.0).unwrap();
        assert!(validate_hypotheses(&law(), &f, &consts(), 8).is_err());
    }
}
