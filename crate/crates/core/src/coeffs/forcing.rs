use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Time-scale regime of the transport model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// One fast variable `theta = t / eps`, diffusion scaled by `1 / eps`.
    Short,
    /// Two fast variables `tau = t / sqrt(eps)` and `theta = t / eps`.
    Mean,
    /// `theta = t / eps`, diffusion scaled by `1 / eps^2`, velocity expanded
    /// in powers of `eps`.
    Long,
}

impl Regime {
    /// Power of `eps` dividing the transport terms of the evolution equation.
    pub fn eps_exponent(self) -> i32 {
        match self {
            Regime::Short | Regime::Mean => 1,
            Regime::Long => 2,
        }
    }
}

/// Bounded, strictly positive multiplier applied to the tide speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialModulation<T> {
    Uniform,
    /// `1 + amplitude * cos(pi x / lx)`.
    CosineX { amplitude: T },
    /// `1 + amplitude * sin(pi x / lx) * sin(pi y / ly)`.
    Bump { amplitude: T },
}

impl<T: Real> SpatialModulation<T> {
    fn amplitude(&self) -> T {
        match *self {
            SpatialModulation::Uniform => T::zero(),
            SpatialModulation::CosineX { amplitude } | SpatialModulation::Bump { amplitude } => {
                amplitude
            }
        }
    }

    pub fn eval(&self, p: Vec2<T>, lx: T, ly: T) -> T {
        let pi = T::PI();
        match *self {
            SpatialModulation::Uniform => T::one(),
            SpatialModulation::CosineX { amplitude } => T::one() + amplitude * (pi * p.x / lx).cos(),
            SpatialModulation::Bump { amplitude } => {
                T::one() + amplitude * (pi * p.x / lx).sin() * (pi * p.y / ly).sin()
            }
        }
    }
}

/// Parameters of the synthetic tide. See [`TidalForcing`] for the formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingParams<T> {
    pub regime: Regime,
    pub u_peak: T,
    pub m_peak: T,
    pub mean_flow: Vec2<T>,
    pub direction: Vec2<T>,
    pub theta_alpha: T,
    pub theta_omega: T,
    pub modulation: SpatialModulation<T>,
    /// Number of tide cycles per unit of `theta`; anything but a positive
    /// integer breaks periodicity (useful for validator fixtures).
    pub theta_frequency: T,
    /// Mean regime only: relative modulation `1 + tau_amplitude cos(2 pi tau)`.
    pub tau_amplitude: T,
    /// Slow modulation `1 + slow_amplitude sin(2 pi t)`.
    pub slow_amplitude: T,
    /// Long regime corrections: `eps U_1` and `eps^2 U_2`, `eps^2 M_2`.
    pub u1_peak: T,
    pub u2_peak: T,
    pub m2_peak: T,
    /// Width of the freeze mollifier, `None` leaves the raw sinusoid.
    pub freeze_width: Option<T>,
}

impl<T: Real> ForcingParams<T> {
    /// Default tide for a regime: non-reversing flood/ebb asymmetry with a
    /// sub-threshold slack clamped by the freeze mollifier.
    pub fn default_for(regime: Regime) -> Self {
        Self {
            regime,
            u_peak: T::lit(0.4),
            m_peak: T::lit(0.2),
            mean_flow: Vec2::new(T::lit(1.2), T::zero()),
            direction: Vec2::new(T::one(), T::zero()),
            theta_alpha: T::zero(),
            theta_omega: T::lit(0.5),
            modulation: if regime == Regime::Long {
                SpatialModulation::Uniform
            } else {
                SpatialModulation::CosineX {
                    amplitude: T::lit(0.3),
                }
            },
            theta_frequency: T::one(),
            tau_amplitude: if regime == Regime::Mean {
                T::lit(0.1)
            } else {
                T::zero()
            },
            slow_amplitude: T::zero(),
            u1_peak: T::zero(),
            u2_peak: T::zero(),
            m2_peak: T::zero(),
            freeze_width: Some(T::lit(0.25)),
        }
    }
}

/// Water velocity and height variation at one point of `(t, tau, theta, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSample<T> {
    pub velocity: Vec2<T>,
    pub height: T,
}

/// Tidal velocity and height fields.
///
/// The signed speed along `direction` is
/// `s = (mean_flow . direction + u_peak sin(2 pi k theta)) * m(x) * ...`
/// (with the regime-specific `tau`, slow-time and long-term corrections) and
/// `M = m_peak cos(2 pi k theta)`. With the freeze mollifier enabled the
/// velocity becomes `direction * (U_thr + phi(s - U_thr))` and the height
/// `M * lambda(s - U_thr)`, where `phi` and `lambda` vanish identically on
/// `s <= U_thr`: every partial derivative of both fields is exactly zero
/// wherever `|U| <= U_thr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TidalForcing<T> {
    params: ForcingParams<T>,
    direction: Vec2<T>,
    u_thr: T,
    lx: T,
    ly: T,
}

impl<T: Real> TidalForcing<T> {
    pub fn new(params: ForcingParams<T>, u_thr: T, lx: T, ly: T) -> Result<Self> {
        let finite_nonneg = |name, v: T| {
            if v.is_finite() && v >= T::zero() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and nonnegative, got {v}")))
            }
        };
        if !(params.u_peak.is_finite() && params.u_peak > T::zero()) {
            return Err(Error::invalid("u_peak", "must be positive"));
        }
        finite_nonneg("m_peak", params.m_peak)?;
        finite_nonneg("tau_amplitude", params.tau_amplitude)?;
        finite_nonneg("slow_amplitude", params.slow_amplitude)?;
        finite_nonneg("u1_peak", params.u1_peak)?;
        finite_nonneg("u2_peak", params.u2_peak)?;
        finite_nonneg("m2_peak", params.m2_peak)?;
        if params.tau_amplitude >= T::one() || params.slow_amplitude >= T::one() {
            return Err(Error::invalid(
                "tau_amplitude/slow_amplitude",
                "relative modulations must stay below 1",
            ));
        }
        if !(u_thr > T::zero() && lx > T::zero() && ly > T::zero()) {
            return Err(Error::invalid("u_thr/lx/ly", "must be positive"));
        }
        let (a, w) = (params.theta_alpha, params.theta_omega);
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !(unit(a) && unit(w)) {
            return Err(Error::invalid("theta_alpha/theta_omega", "must lie in [0, 1]"));
        }
        if a >= w {
            return Err(Error::invalid(
                "theta_omega",
                format!("active window requires theta_alpha < theta_omega, got [{a}, {w}]"),
            ));
        }
        if !(params.theta_frequency.is_finite() && params.theta_frequency > T::zero()) {
            return Err(Error::invalid("theta_frequency", "must be positive"));
        }
        let amp = params.modulation.amplitude();
        if !(amp.is_finite() && amp.abs() < T::one()) {
            return Err(Error::invalid(
                "modulation",
                "amplitude must satisfy |amplitude| < 1",
            ));
        }
        if let Some(width) = params.freeze_width {
            if !(width.is_finite() && width > T::zero()) {
                return Err(Error::invalid("freeze_width", "must be positive"));
            }
        }
        let norm = params.direction.norm();
        if !(norm.is_finite() && norm > T::zero()) {
            return Err(Error::invalid("direction", "must be a nonzero vector"));
        }
        if !params.mean_flow.is_finite() {
            return Err(Error::invalid("mean_flow", "must be finite"));
        }
        Ok(Self {
            params,
            direction: params.direction.scale(T::one() / norm),
            u_thr,
            lx,
            ly,
        })
    }

    pub fn params(&self) -> &ForcingParams<T> {
        &self.params
    }

    pub fn regime(&self) -> Regime {
        self.params.regime
    }

    pub fn direction(&self) -> Vec2<T> {
        self.direction
    }

    pub fn u_thr(&self) -> T {
        self.u_thr
    }

    pub fn domain(&self) -> (T, T) {
        (self.lx, self.ly)
    }

    pub fn theta_window(&self) -> (T, T) {
        (self.params.theta_alpha, self.params.theta_omega)
    }

    pub fn is_frozen(&self) -> bool {
        self.params.freeze_width.is_some()
    }

    /// Upper bound of `|M|` over all arguments (with `eps <= 1`).
    pub fn height_bound(&self) -> T {
        let p = &self.params;
        let tau = if p.regime == Regime::Mean {
            T::one() + p.tau_amplitude
        } else {
            T::one()
        };
        let slow = if p.regime == Regime::Long {
            T::one()
        } else {
            T::one() + p.slow_amplitude
        };
        p.m_peak * tau * slow + p.m2_peak
    }

    pub fn contains(&self, x: Vec2<T>) -> bool {
        let slack_x = self.lx * T::lit(1e-12);
        let slack_y = self.ly * T::lit(1e-12);
        x.x >= -slack_x && x.x <= self.lx + slack_x && x.y >= -slack_y && x.y <= self.ly + slack_y
    }

    fn phase(&self, theta: T) -> T {
        T::TAU() * self.params.theta_frequency * theta
    }

    fn base_speed(&self, theta: T) -> T {
        self.params.mean_flow.dot(self.direction) + self.params.u_peak * self.phase(theta).sin()
    }

    fn signed_speed(&self, eps: T, t: T, tau: T, theta: T, x: Vec2<T>) -> T {
        let p = &self.params;
        let m = p.modulation.eval(x, self.lx, self.ly);
        let slow_phase = T::TAU() * t;
        match p.regime {
            Regime::Short => self.base_speed(theta) * m * (T::one() + p.slow_amplitude * slow_phase.sin()),
            Regime::Mean => {
                self.base_speed(theta)
                    * m
                    * (T::one() + p.tau_amplitude * (T::TAU() * tau).cos())
                    * (T::one() + p.slow_amplitude * slow_phase.sin())
            }
            Regime::Long => {
                let phase = self.phase(theta);
                self.base_speed(theta)
                    + eps * p.u1_peak * phase.cos() * m
                    + eps * eps * p.u2_peak * slow_phase.sin() * phase.sin()
            }
        }
    }

    fn raw_height(&self, eps: T, t: T, tau: T, theta: T) -> T {
        let p = &self.params;
        let c = self.phase(theta).cos();
        let slow = (T::TAU() * t).sin();
        match p.regime {
            Regime::Short => p.m_peak * c * (T::one() + p.slow_amplitude * slow),
            Regime::Mean => {
                p.m_peak
                    * c
                    * (T::one() + p.tau_amplitude * (T::TAU() * tau).sin())
                    * (T::one() + p.slow_amplitude * slow)
            }
            Regime::Long => p.m_peak * c + eps * eps * p.m2_peak * slow * c,
        }
    }

    /// `phi(r) = r^3 / (r^2 + w^2)` for `r > 0`, zero otherwise. `C^2`, with
    /// `0 <= phi' <= 9/8`.
    fn speed_lift(&self, r: T, w: T) -> T {
        if r <= T::zero() {
            T::zero()
        } else {
            r * r * r / (r * r + w * w)
        }
    }

    /// `lambda(r) = r^3 / (r^3 + w^3)` for `r > 0`, zero otherwise.
    fn height_gate(&self, r: T, w: T) -> T {
        if r <= T::zero() {
            T::zero()
        } else {
            let r3 = r * r * r;
            r3 / (r3 + w * w * w)
        }
    }

    fn assemble(&self, s: T, height: T) -> ForcingSample<T> {
        match self.params.freeze_width {
            None => ForcingSample {
                velocity: self.direction.scale(s),
                height,
            },
            Some(w) => {
                let r = s - self.u_thr;
                ForcingSample {
                    velocity: self.direction.scale(self.u_thr + self.speed_lift(r, w)),
                    height: height * self.height_gate(r, w),
                }
            }
        }
    }

    /// Evaluates `(U, M)`. The short regime ignores `tau`; the long regime
    /// returns `U_0(theta) + eps U_1(theta, x) + eps^2 U_2(t, theta, x)` and
    /// `M_1(theta, x) + eps^2 M_2(t, theta, x)`. Other regimes ignore `eps`.
    pub fn eval(&self, eps: T, t: T, tau: T, theta: T, x: Vec2<T>) -> Result<ForcingSample<T>> {
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "point ({}, {}) outside [0, {}] x [0, {}]",
                x.x, x.y, self.lx, self.ly
            )));
        }
        let s = self.signed_speed(eps, t, tau, theta, x);
        let h = self.raw_height(eps, t, tau, theta);
        Ok(self.assemble(s, h))
    }

    /// Leading-order long-term velocity `U_0(theta)` (the `eps = 0` value).
    pub fn velocity_base(&self, theta: T) -> Vec2<T> {
        self.assemble(self.base_speed(theta), T::zero()).velocity
    }
}
