//! Shipped default model, initial states and manufactured solutions.

use crate::cell_solver::CellProblem;
use crate::coeffs::{FluxLaw, ForcingParams, ModelConstants, Regime, TidalForcing};
use crate::eps_solver::EpsProblem;
use crate::error::Result;
use crate::grid::{BoundaryData, BoundarySource, Grid, ScalarField};
use crate::scalar::{Real, Vec2};
use crate::schedule::{CellCoefficientKind, FnCoefficients};
use crate::twoscale::{InitialState, TwoScaleProblem};
use std::sync::Arc;

pub const DEFAULT_CELLS: usize = 32;
pub const DEFAULT_EPSILON: f64 = 0.0625;
pub const DEFAULT_T_FINAL: f64 = 1.0;
/// Regularization of the default cell problem.
pub const DEFAULT_CELL_MU: f64 = 0.1;
pub const DEFAULT_CELL_NU: f64 = 0.01;

/// `d = 4`, `U_thr = 1`, `G_thr = 2`, ramp width `0.8`.
pub fn default_law<T: Real>() -> FluxLaw<T> {
    FluxLaw::new(T::lit(4.0), T::one(), T::lit(2.0), T::lit(0.8)).expect("valid defaults")
}

/// `a = b = c = 1`, no regularization.
pub fn default_constants<T: Real>(epsilon: T) -> Result<ModelConstants<T>> {
    ModelConstants::new(T::one(), T::one(), T::one(), epsilon, T::zero(), T::zero())
}

pub fn default_forcing<T: Real>(regime: Regime, grid: &Grid<T>) -> Result<TidalForcing<T>> {
    TidalForcing::new(ForcingParams::default_for(regime), T::one(), grid.lx(), grid.ly())
}

/// `amplitude exp(-|x - centre|^2 / (2 width^2))`: a dune.
pub fn gaussian<T: Real>(grid: Grid<T>, centre: Vec2<T>, width: T, amplitude: T) -> ScalarField<T> {
    ScalarField::from_fn(grid, |p| {
        let d = Vec2::new(p.x - centre.x, p.y - centre.y);
        amplitude * (-d.dot(d) / (T::lit(2.0) * width * width)).exp()
    })
}

/// Bump of width `0.15 min(lx, ly)` and unit height in the middle.
pub fn default_dune<T: Real>(grid: Grid<T>) -> ScalarField<T> {
    let c = Vec2::new(grid.lx() * T::lit(0.5), grid.ly() * T::lit(0.5));
    gaussian(grid, c, T::lit(0.15) * grid.lx().min(grid.ly()), T::one())
}

/// The whole default model for one regime on a `32 x 32` unit square.
#[derive(Debug, Clone, Copy)]
pub struct DefaultModel<T> {
    pub grid: Grid<T>,
    pub consts: ModelConstants<T>,
    pub law: FluxLaw<T>,
    pub forcing: TidalForcing<T>,
}

impl<T: Real> DefaultModel<T> {
    pub fn new(regime: Regime, epsilon: T) -> Result<Self> {
        let grid = Grid::unit_square(DEFAULT_CELLS)?;
        Ok(Self {
            grid,
            consts: default_constants(epsilon)?,
            law: default_law(),
            forcing: default_forcing(regime, &grid)?,
        })
    }

    /// Dune initial state, zero Robin data, `T = 1`, default step.
    pub fn eps_problem(&self) -> Result<EpsProblem<T>> {
        EpsProblem::from_model(
            self.grid,
            self.consts,
            self.law,
            self.forcing,
            default_dune(self.grid),
            BoundarySource::zero(),
            T::lit(DEFAULT_T_FINAL),
            None,
        )
    }

    /// Cell problem at `t = 0` with the regime's exponent and the default
    /// `mu`, `nu`.
    pub fn cell_problem(&self, kind: CellCoefficientKind) -> Result<CellProblem<T>> {
        let i = match self.forcing.regime() {
            Regime::Long => 1,
            Regime::Short | Regime::Mean => 0,
        };
        let mut p =
            CellProblem::from_model(self.grid, self.consts, self.law, self.forcing, T::zero(), T::zero(), kind, i)?;
        p.mu = T::lit(DEFAULT_CELL_MU);
        p.nu = T::lit(DEFAULT_CELL_NU);
        Ok(p)
    }

    pub fn two_scale_problem(&self) -> TwoScaleProblem<T> {
        TwoScaleProblem {
            grid: self.grid,
            consts: self.consts,
            law: self.law,
            forcing: self.forcing,
            g: BoundaryData::zeros(&self.grid),
            initial: InitialState::Field(default_dune(self.grid)),
            t_final: T::lit(DEFAULT_T_FINAL),
            theta_steps: crate::cell_solver::DEFAULT_THETA_STEPS,
            limit_samples: 1,
        }
    }
}

/// Manufactured solution `z(t, x) = exp(-t) (1 + x / lx)` with constant
/// diffusivity `a`. The drift `C = -eps^i exp(-t) (x + x^2 / (2 lx), 0)`
/// supplies `dz/dt` and the Robin data is the exact trace
/// `dz/dn + z`. The profile is linear in space, so the spatial scheme is
/// exact and only the time discretization errs.
pub fn linear_decay<T: Real>(
    grid: Grid<T>,
    a: T,
    epsilon: T,
    i_exponent: u32,
    t_final: T,
    dt: T,
) -> Result<(EpsProblem<T>, impl Fn(T, Vec2<T>) -> T + Clone)> {
    let lx = grid.lx();
    let scale = epsilon.powi(i_exponent as i32);
    let exact = move |t: T, p: Vec2<T>| (-t).exp() * (T::one() + p.x / lx);
    let coeffs = FnCoefficients::new(move |t: T, p: Vec2<T>| {
        let c = -scale * (-t).exp() * (p.x + p.x * p.x / (T::lit(2.0) * lx));
        (a, Vec2::new(c, T::zero()))
    });
    let g = BoundarySource::from_fn(move |t: T, side, p: Vec2<T>| {
        let n = Grid::<T>::normal(side);
        let grad = Vec2::new((-t).exp() / lx, T::zero());
        grad.dot(n) + exact(t, p)
    });
    let z0 = ScalarField::from_fn(grid, |p| exact(T::zero(), p));
    let p = EpsProblem::new(grid, Arc::new(coeffs), epsilon, i_exponent, z0, g, t_final, dt)?;
    Ok((p, exact))
}
