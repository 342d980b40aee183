use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cubic smoothstep on `[0, 1]`, clamped outside.
fn smoothstep<T: Real>(p: T) -> T {
    if p <= T::zero() {
        T::zero()
    } else if p >= T::one() {
        T::one()
    } else {
        p * p * (T::lit(3.0) - T::lit(2.0) * p)
    }
}

/// Inverse of [`smoothstep`] on `[0, 1]` (trigonometric root of the cubic).
fn smoothstep_inverse<T: Real>(q: T) -> T {
    let half = T::lit(0.5);
    let arg = (T::one() - T::lit(2.0) * q).max(-T::one()).min(T::one());
    half - (arg.asin() / T::lit(3.0)).sin()
}

/// Sediment flux laws `g_a` (diffusive) and `g_c` (drift).
///
/// `g_a(u) = d * sigma((u - u0) / w)` with `sigma` the cubic smoothstep
/// mapped onto `[-1, 1]`, so `g_a` vanishes identically for `u <= u0 - w`
/// and saturates at `d` for `u >= u0 + w`. The offset `u0` is calibrated so
/// that `g_a(U_thr) = G_thr`. The drift law is the damped copy
/// `g_c(u) = g_a(u) * u^2 / (u^2 + U_thr^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxLaw<T> {
    d: T,
    u_thr: T,
    g_thr: T,
    ramp_width: T,
    u0: T,
}

impl<T: Real> FluxLaw<T> {
    pub fn new(d: T, u_thr: T, g_thr: T, ramp_width: T) -> Result<Self> {
        let positive = |name, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("d", d)?;
        positive("u_thr", u_thr)?;
        positive("g_thr", g_thr)?;
        positive("ramp_width", ramp_width)?;
        if g_thr > d {
            return Err(Error::invalid(
                "g_thr",
                format!("threshold flux {g_thr} exceeds the bound d = {d}"),
            ));
        }
        let p = smoothstep_inverse(g_thr / d);
        let mut law = Self {
            d,
            u_thr,
            g_thr,
            ramp_width,
            u0: u_thr - ramp_width * (T::lit(2.0) * p - T::one()),
        };
        // Round-off in the inverse can leave g_a(U_thr) a few ulps short of
        // G_thr; shift the ramp left until the threshold inequality holds.
        let mut nudge = law.u0.abs().max(T::one()) * T::epsilon();
        for _ in 0..64 {
            if law.ga_unchecked(u_thr) >= g_thr {
                break;
            }
            law.u0 = law.u0 - nudge;
            nudge = nudge * T::lit(2.0);
        }
        Ok(law)
    }

    pub fn d(&self) -> T {
        self.d
    }

    pub fn u_thr(&self) -> T {
        self.u_thr
    }

    pub fn g_thr(&self) -> T {
        self.g_thr
    }

    pub fn ramp_width(&self) -> T {
        self.ramp_width
    }

    /// Centre of the ramp.
    pub fn ramp_center(&self) -> T {
        self.u0
    }

    /// Speed at and below which `g_a` (and `g_c`) vanish identically.
    pub fn degenerate_below(&self) -> T {
        self.u0 - self.ramp_width
    }

    fn ga_unchecked(&self, u: T) -> T {
        let y = (u - self.u0) / self.ramp_width;
        self.d * smoothstep((y + T::one()) * T::lit(0.5))
    }

    fn check_speed(u: T) -> Result<()> {
        if u.is_nan() || u < T::zero() {
            Err(Error::Domain(format!("flux law evaluated at negative speed {u}")))
        } else {
            Ok(())
        }
    }

    pub fn eval_ga(&self, u: T) -> Result<T> {
        Self::check_speed(u)?;
        Ok(self.ga_unchecked(u))
    }

    pub fn eval_gc(&self, u: T) -> Result<T> {
        Self::check_speed(u)?;
        let u2 = u * u;
        Ok(self.ga_unchecked(u) * u2 / (u2 + self.u_thr * self.u_thr))
    }

    /// Analytic derivative of `g_a`.
    pub fn ga_derivative(&self, u: T) -> T {
        let p = ((u - self.u0) / self.ramp_width + T::one()) * T::lit(0.5);
        if p <= T::zero() || p >= T::one() {
            T::zero()
        } else {
            self.d * T::lit(3.0) * p * (T::one() - p) / self.ramp_width
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_law() -> FluxLaw<f64> {
        FluxLaw::new(4.0, 1.0, 2.0, 0.8).unwrap()
    }

    #[test]
    fn below_ramp_foot_is_degenerate() {
        let law = default_law();
        assert!(law.ramp_center() > law.ramp_width());
        assert_eq!(law.eval_ga(0.0).unwrap(), 0.0);
        assert_eq!(law.eval_ga(law.degenerate_below()).unwrap(), 0.0);
    }

    #[test]
    fn calibration_point_hits_threshold() {
        for &(d, g) in &[(4.0f64, 2.0f64), (1.0, 0.5), (1.0, 0.1), (3.0, 3.0), (2.0, 1.7)] {
            let law = FluxLaw::new(d, 0.7, g, 0.9).unwrap();
            let ga = law.eval_ga(0.7).unwrap();
            assert!(ga >= g, "g_a(U_thr) = {ga} < {g}");
            assert!((ga - g).abs() <= 1e-14 * d, "g_a(U_thr) = {ga} vs {g}");
        }
    }

    #[test]
    fn twice_threshold_stays_between_gthr_and_d() {
        let law = FluxLaw::new(1.0, 1.0, 0.5, 0.8).unwrap();
        // oracle: direct smoothstep evaluation, p = (y + 1)/2 with u0 = U_thr
        let p: f64 = ((2.0 - 1.0) / 0.8 + 1.0) / 2.0;
        let expected = if p >= 1.0 { 1.0 } else { p * p * (3.0 - 2.0 * p) };
        let got = law.eval_ga(2.0).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((0.5..=1.0).contains(&got));
    }

    #[test]
    fn drift_law_is_half_at_threshold() {
        let law = default_law();
        let gc = law.eval_gc(1.0).unwrap();
        assert!((gc - 1.0).abs() < 1e-14, "g_c(U_thr) = {gc}");
        assert_eq!(law.eval_gc(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_speed_is_rejected() {
        let law = default_law();
        assert!(matches!(law.eval_ga(-1e-3), Err(Error::Domain(_))));
        assert!(matches!(law.eval_gc(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constructor_rejects_threshold_above_bound() {
        let err = FluxLaw::new(1.0, 1.0, 1.5, 0.5).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "g_thr", .. }));
        assert!(FluxLaw::new(1.0, -1.0, 0.5, 0.5).is_err());
        assert!(FluxLaw::<f64>::new(1.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let law = default_law();
        for i in 1..200 {
            let u = i as f64 * 0.0123;
            let h = 1e-6;
            let fd = (law.eval_ga(u + h).unwrap() - law.eval_ga(u - h).unwrap()) / (2.0 * h);
            assert!((fd - law.ga_derivative(u)).abs() < 1e-6);
        }
    }

    #[test]
    fn single_precision_law_evaluates() {
        let law = FluxLaw::<f32>::new(4.0, 1.0, 2.0, 0.8).unwrap();
        assert!((law.eval_ga(1.0).unwrap() - 2.0).abs() < 1e-5);
        assert!(law.eval_gc(1.0).unwrap() <= law.eval_ga(1.0).unwrap());
    }
}
