//! Coefficient providers: face values of the diffusivity and the drift as
//! functions of time (for the `eps` problems) or of the fast variable (for
//! cell problems, with the slow time frozen).

use crate::coeffs::{assemble_coefficients, FluxLaw, ModelConstants, Regime, TidalForcing};
use crate::error::Result;
use crate::grid::{FaceField, Grid};
use crate::scalar::{Real, Vec2};
use std::fmt;
use std::sync::Arc;

/// Diffusivity on faces and the normal component of the drift on faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCoefficients<T> {
    pub diffusivity: FaceField<T>,
    pub drift: FaceField<T>,
}

impl<T: Real> FaceCoefficients<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            diffusivity: FaceField::zeros(grid),
            drift: FaceField::zeros(grid),
        }
    }

    /// Samples `(A, C)` at every face midpoint.
    pub fn sample(grid: &Grid<T>, f: impl Fn(Vec2<T>) -> Result<(T, Vec2<T>)>) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut a = FaceField::zeros(grid);
        let mut c = FaceField::zeros(grid);
        for j in 0..ny {
            for i in 0..=nx {
                let (av, cv) = f(grid.x_face(i, j))?;
                let k = j * (nx + 1) + i;
                a.x[k] = av;
                c.x[k] = cv.x;
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let (av, cv) = f(grid.y_face(i, j))?;
                let k = j * nx + i;
                a.y[k] = av;
                c.y[k] = cv.y;
            }
        }
        Ok(Self {
            diffusivity: a,
            drift: c,
        })
    }

    pub fn add_diffusivity(mut self, nu: T) -> Self {
        if !nu.is_zero() {
            self.diffusivity = self.diffusivity.map(|a| a + nu);
        }
        self
    }
}

/// Coefficients of the `eps` problem at time `t`.
pub trait TimeCoefficients<T: Real>: Send + Sync {
    fn at_time(&self, grid: &Grid<T>, t: T) -> Result<FaceCoefficients<T>>;
}

/// Coefficients of a cell problem at fast time `theta`.
pub trait CellCoefficients<T: Real>: Send + Sync {
    fn at_theta(&self, grid: &Grid<T>, theta: T) -> Result<FaceCoefficients<T>>;

    /// The same coefficients with the frozen slow time moved by `dt`, when
    /// they depend on one.
    fn shifted_slow_time(&self, _dt: T) -> Option<Arc<dyn CellCoefficients<T>>> {
        None
    }
}

/// `A^eps(t, x)`, `C^eps(t, x)` from the model: `theta = t / eps` and, in the
/// mean regime, `tau = t / sqrt(eps)`.
#[derive(Debug, Clone, Copy)]
pub struct ModelCoefficients<T> {
    pub consts: ModelConstants<T>,
    pub law: FluxLaw<T>,
    pub forcing: TidalForcing<T>,
}

impl<T: Real> ModelCoefficients<T> {
    pub fn new(consts: ModelConstants<T>, law: FluxLaw<T>, forcing: TidalForcing<T>) -> Result<Self> {
        consts.check_forcing(&forcing)?;
        Ok(Self { consts, law, forcing })
    }

    /// Fast variables `(tau, theta)` seen at time `t`.
    pub fn fast_times(&self, t: T) -> (T, T) {
        let eps = self.consts.epsilon;
        let tau = if self.forcing.regime() == Regime::Mean {
            t / eps.sqrt()
        } else {
            T::zero()
        };
        (tau, t / eps)
    }
}

impl<T: Real> TimeCoefficients<T> for ModelCoefficients<T> {
    fn at_time(&self, grid: &Grid<T>, t: T) -> Result<FaceCoefficients<T>> {
        let (tau, theta) = self.fast_times(t);
        FaceCoefficients::sample(grid, |p| {
            let s = assemble_coefficients(&self.consts, &self.law, &self.forcing, t, tau, theta, p)?;
            Ok((s.a_eps, s.c_eps))
        })
    }
}

/// Which coefficients a model cell problem uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellCoefficientKind {
    /// `A~_eps = a (1 - b f M) g_a(|U|)` and `C~_eps`, with `theta` free.
    Regularized,
    /// The limits `A~ = a g_a(|U|)`, `C~`.
    Limit,
}

/// Model coefficients with the slow time `t` (and `tau`) frozen.
#[derive(Debug, Clone, Copy)]
pub struct ModelCellCoefficients<T> {
    pub consts: ModelConstants<T>,
    pub law: FluxLaw<T>,
    pub forcing: TidalForcing<T>,
    pub t: T,
    pub tau: T,
    pub kind: CellCoefficientKind,
}

impl<T: Real> CellCoefficients<T> for ModelCellCoefficients<T> {
    fn at_theta(&self, grid: &Grid<T>, theta: T) -> Result<FaceCoefficients<T>> {
        FaceCoefficients::sample(grid, |p| {
            let s = assemble_coefficients(&self.consts, &self.law, &self.forcing, self.t, self.tau, theta, p)?;
            Ok(match self.kind {
                CellCoefficientKind::Regularized => (s.a_eps, s.c_eps),
                CellCoefficientKind::Limit => (s.a_tilde, s.c_tilde),
            })
        })
    }

    fn shifted_slow_time(&self, dt: T) -> Option<Arc<dyn CellCoefficients<T>>> {
        Some(Arc::new(Self { t: self.t + dt, ..*self }))
    }
}

type PointFn<T> = dyn Fn(T, Vec2<T>) -> (T, Vec2<T>) + Send + Sync;

/// Coefficients `(A, C)` given by a closure of `(s, x)`, where `s` is `t` or
/// `theta` depending on use.
#[derive(Clone)]
pub struct FnCoefficients<T> {
    f: Arc<PointFn<T>>,
}

impl<T: Real> FnCoefficients<T> {
    pub fn new(f: impl Fn(T, Vec2<T>) -> (T, Vec2<T>) + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// `A = a`, `C = 0`.
    pub fn constant_diffusion(a: T) -> Self {
        Self::new(move |_, _| (a, Vec2::zero()))
    }

    fn sample(&self, grid: &Grid<T>, s: T) -> Result<FaceCoefficients<T>> {
        FaceCoefficients::sample(grid, |p| Ok((self.f)(s, p)))
    }
}

impl<T: Real> fmt::Debug for FnCoefficients<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnCoefficients(..)")
    }
}

impl<T: Real> TimeCoefficients<T> for FnCoefficients<T> {
    fn at_time(&self, grid: &Grid<T>, t: T) -> Result<FaceCoefficients<T>> {
        self.sample(grid, t)
    }
}

impl<T: Real> CellCoefficients<T> for FnCoefficients<T> {
    fn at_theta(&self, grid: &Grid<T>, theta: T) -> Result<FaceCoefficients<T>> {
        self.sample(grid, theta)
    }
}
