use super::flux::FluxLaw;
use super::forcing::{Regime, TidalForcing};
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Scalar constants of the transport model and its regularizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub epsilon: T,
    /// Added to the diffusivity.
    pub nu: T,
    /// Zeroth-order penalization of the cell problem.
    pub mu: T,
}

impl<T: Real> ModelConstants<T> {
    pub fn new(a: T, b: T, c: T, epsilon: T, nu: T, mu: T) -> Result<Self> {
        if !(a.is_finite() && a > T::zero()) {
            return Err(Error::invalid("a", "must be positive"));
        }
        if !(b.is_finite() && c.is_finite()) {
            return Err(Error::invalid("b/c", "must be finite"));
        }
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return Err(Error::invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
        }
        if !(nu.is_finite() && nu >= T::zero() && mu.is_finite() && mu >= T::zero()) {
            return Err(Error::invalid("nu/mu", "must be finite and nonnegative"));
        }
        Ok(Self {
            a,
            b,
            c,
            epsilon,
            nu,
            mu,
        })
    }

    pub fn with_epsilon(self, epsilon: T) -> Result<Self> {
        Self::new(self.a, self.b, self.c, epsilon, self.nu, self.mu)
    }

    pub fn with_regularization(self, nu: T, mu: T) -> Result<Self> {
        Self::new(self.a, self.b, self.c, self.epsilon, nu, mu)
    }

    /// `eps` for the short and long regimes, `sqrt(eps)` for the mean one.
    pub fn height_factor(&self, regime: Regime) -> T {
        match regime {
            Regime::Mean => self.epsilon.sqrt(),
            Regime::Short | Regime::Long => self.epsilon,
        }
    }

    /// Checks `factor * |b| * sup|M| < 1`, which keeps the diffusivity
    /// nonnegative.
    pub fn check_forcing(&self, forcing: &TidalForcing<T>) -> Result<()> {
        let margin = self.height_factor(forcing.regime()) * self.b.abs() * forcing.height_bound();
        if margin < T::one() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "eps |b| sup|M| = {margin} must stay below 1"
            )))
        }
    }
}

/// Coefficients at one point: the `eps`-dependent diffusivity and drift and
/// their two-scale limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSample<T> {
    pub a_eps: T,
    pub c_eps: Vec2<T>,
    pub a_tilde: T,
    pub c_tilde: Vec2<T>,
}

fn unit_or_zero<T: Real>(v: Vec2<T>) -> (T, Vec2<T>) {
    let speed = v.norm();
    if speed > T::zero() {
        (speed, v.scale(T::one() / speed))
    } else {
        (T::zero(), Vec2::zero())
    }
}

/// Assembles `A = a (1 - b f M) g_a(|U|)` and `C = c (1 - b f M) g_c(|U|) U/|U|`
/// with `f = eps` (short, long) or `sqrt(eps)` (mean), together with the
/// limits `A~ = a g_a(|U|)`, `C~ = c g_c(|U|) U/|U|`. In the long regime
/// the limits use the leading-order velocity `U_0(theta)`. The drift and its
/// limit are exactly zero where the velocity vanishes.
pub fn assemble_coefficients<T: Real>(
    consts: &ModelConstants<T>,
    law: &FluxLaw<T>,
    forcing: &TidalForcing<T>,
    t: T,
    tau: T,
    theta: T,
    x: Vec2<T>,
) -> Result<CoefficientSample<T>> {
    consts.check_forcing(forcing)?;
    let regime = forcing.regime();
    let sample = forcing.eval(consts.epsilon, t, tau, theta, x)?;
    let (speed, dir) = unit_or_zero(sample.velocity);
    let ga = law.eval_ga(speed)?;
    let gc = law.eval_gc(speed)?;
    let damp = T::one() - consts.b * consts.height_factor(regime) * sample.height;
    let a_eps = consts.a * damp * ga;
    let c_eps = dir.scale(consts.c * damp * gc);

    let (a_tilde, c_tilde) = if regime == Regime::Long {
        let (speed0, dir0) = unit_or_zero(forcing.velocity_base(theta));
        let ga0 = law.eval_ga(speed0)?;
        let gc0 = law.eval_gc(speed0)?;
        (consts.a * ga0, dir0.scale(consts.c * gc0))
    } else {
        (consts.a * ga, dir.scale(consts.c * gc))
    };
    Ok(CoefficientSample {
        a_eps,
        c_eps,
        a_tilde,
        c_tilde,
    })
}
