//! Periodic-in-`theta` cell problems
//! `mu S + dS/dtheta - eps^-i div((A + nu) grad S) = eps^-i div C`
//! and the homogenized limit profiles.
//!
//! Periodicity is obtained by Picard iteration on the period map: march one
//! period, restart from the terminal state, stop when the two ends agree.

mod continuation;
mod homogenized;
mod norms;

pub use continuation::{continue_mu_to_zero, continue_nu_to_zero, Continuation};
pub use homogenized::{solve_homogenized_long, solve_homogenized_short, ThresholdSet};
pub use norms::{norm_certificates, slow_time_derivative, ProfileNorms};

use crate::coeffs::{FluxLaw, ModelConstants, TidalForcing};
use crate::error::{Error, Result};
use crate::grid::{l2_norm, BoundaryData, DiffusionOperator, Grid, ScalarField};
use crate::grid::drift_divergence_values;
use crate::linalg::{pcg, ShiftedSystem};
use crate::scalar::{Real, Vec2};
use crate::schedule::{CellCoefficientKind, CellCoefficients, ModelCellCoefficients};
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// Time discretization of the `theta` march.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ThetaScheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
}

pub const DEFAULT_THETA_STEPS: usize = 128;
pub const DEFAULT_TOL_PERIODIC: f64 = 1e-9;
pub const DEFAULT_MAX_PERIODS: usize = 500;

pub struct CellProblem<T> {
    pub grid: Grid<T>,
    pub coefficients: Arc<dyn CellCoefficients<T>>,
    pub epsilon: T,
    /// Power of `1 / eps` in front of the spatial operator, 0 or 1.
    pub i_exponent: u32,
    pub mu: T,
    pub nu: T,
    pub g: BoundaryData<T>,
    pub theta_steps: usize,
    pub scheme: ThetaScheme,
    pub tol_periodic: T,
    pub max_periods: usize,
    /// Starting state of the Picard iteration (zero when `None`).
    pub initial: Option<ScalarField<T>>,
}

impl<T: Real> Clone for CellProblem<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            coefficients: Arc::clone(&self.coefficients),
            epsilon: self.epsilon,
            i_exponent: self.i_exponent,
            mu: self.mu,
            nu: self.nu,
            g: self.g.clone(),
            theta_steps: self.theta_steps,
            scheme: self.scheme,
            tol_periodic: self.tol_periodic,
            max_periods: self.max_periods,
            initial: self.initial.clone(),
        }
    }
}

impl<T: Real> fmt::Debug for CellProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CellProblem")
            .field("grid", &self.grid)
            .field("epsilon", &self.epsilon)
            .field("i_exponent", &self.i_exponent)
            .field("mu", &self.mu)
            .field("nu", &self.nu)
            .field("theta_steps", &self.theta_steps)
            .field("scheme", &self.scheme)
            .finish_non_exhaustive()
    }
}

impl<T: Real> CellProblem<T> {
    pub const MIN_THETA_STEPS: usize = 32;

    pub fn new(grid: Grid<T>, coefficients: Arc<dyn CellCoefficients<T>>, epsilon: T, i_exponent: u32) -> Self {
        Self {
            grid,
            coefficients,
            epsilon,
            i_exponent,
            mu: T::zero(),
            nu: T::zero(),
            g: BoundaryData::zeros(&grid),
            theta_steps: DEFAULT_THETA_STEPS,
            scheme: ThetaScheme::BackwardEuler,
            tol_periodic: T::lit(DEFAULT_TOL_PERIODIC),
            max_periods: DEFAULT_MAX_PERIODS,
            initial: None,
        }
    }

    /// Model cell problem at frozen `(t, tau)`; `mu`, `nu` come from
    /// `consts`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_model(
        grid: Grid<T>,
        consts: ModelConstants<T>,
        law: FluxLaw<T>,
        forcing: TidalForcing<T>,
        t: T,
        tau: T,
        kind: CellCoefficientKind,
        i_exponent: u32,
    ) -> Result<Self> {
        consts.check_forcing(&forcing)?;
        let coeffs = ModelCellCoefficients {
            consts,
            law,
            forcing,
            t,
            tau,
            kind,
        };
        let mut p = Self::new(grid, Arc::new(coeffs), consts.epsilon, i_exponent);
        p.mu = consts.mu;
        p.nu = consts.nu;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_steps < Self::MIN_THETA_STEPS {
            return Err(Error::invalid(
                "theta_steps",
                format!("need at least {} steps per period", Self::MIN_THETA_STEPS),
            ));
        }
        if self.i_exponent > 1 {
            return Err(Error::invalid("i_exponent", "must be 0 or 1"));
        }
        if !(self.epsilon > T::zero() && self.epsilon < T::one()) {
            return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
        }
        if !(self.mu >= T::zero() && self.nu >= T::zero()) {
            return Err(Error::invalid("mu/nu", "must be nonnegative"));
        }
        if self.mu > T::zero() && self.nu.is_zero() {
            return Err(Error::Precondition("mu > 0 requires nu > 0".into()));
        }
        if !(self.tol_periodic > T::zero()) || self.max_periods == 0 {
            return Err(Error::invalid("tol_periodic/max_periods", "must be positive"));
        }
        if !self.g.matches(&self.grid) {
            return Err(Error::Precondition("boundary data does not match the grid".into()));
        }
        if let Some(s) = &self.initial {
            if !s.grid().same_shape(&self.grid) {
                return Err(Error::Precondition("initial state lives on another grid".into()));
            }
        }
        Ok(())
    }

    /// `eps^-i`.
    pub fn kappa(&self) -> T {
        self.epsilon.powi(-(self.i_exponent as i32))
    }

    pub fn dtheta(&self) -> T {
        T::one() / T::from_usize_lossy(self.theta_steps)
    }

    pub fn theta(&self, k: usize) -> T {
        T::from_usize_lossy(k) / T::from_usize_lossy(self.theta_steps)
    }
}

/// One period of a periodic solution sampled at `theta_k = k / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicProfile<T> {
    pub thetas: Vec<T>,
    pub states: Vec<ScalarField<T>>,
    /// `|S(1) - S(0)|_{L2}` of the last period.
    pub periodic_residual: f64,
    /// `max_k |S_k - S_k'|_{L2}` against one further period.
    pub wrap_residual: f64,
    pub periods: usize,
    pub residual_history: Vec<f64>,
    /// Nodes held constant in `theta` by the threshold constraint.
    pub threshold_flags: Vec<bool>,
    /// Relative residual of the stationary solve at each node (zero for
    /// marched profiles).
    pub node_residuals: Vec<f64>,
    pub norms: ProfileNorms,
}

impl<T: Real> PeriodicProfile<T> {
    pub fn theta_steps(&self) -> usize {
        self.states.len()
    }

    pub fn grid(&self) -> &Grid<T> {
        self.states[0].grid()
    }

    /// Linear interpolation in `theta` (periodic).
    pub fn at(&self, theta: T) -> ScalarField<T> {
        let n = self.states.len();
        let s = crate::scalar::frac(theta) * T::from_usize_lossy(n);
        let k = s.floor().to_usize().unwrap_or(0).min(n - 1);
        let w = s - T::from_usize_lossy(k);
        if w.is_zero() {
            self.states[k].clone()
        } else {
            self.states[k].lerp(&self.states[(k + 1) % n], w)
        }
    }

    /// Profile with `states[k] = f(k / n, x)` at cell centres, for
    /// analytic fixtures. Residuals are zero and no norms are computed.
    pub fn sampled(grid: Grid<T>, theta_steps: usize, f: impl Fn(T, Vec2<T>) -> T) -> Self {
        let thetas: Vec<T> = (0..theta_steps)
            .map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(theta_steps))
            .collect();
        let states = thetas.iter().map(|&th| ScalarField::from_fn(grid, |p| f(th, p))).collect();
        Self {
            thetas,
            states,
            periodic_residual: 0.0,
            wrap_residual: 0.0,
            periods: 0,
            residual_history: Vec::new(),
            threshold_flags: vec![false; theta_steps],
            node_residuals: vec![0.0; theta_steps],
            norms: ProfileNorms::default(),
        }
    }

    /// Largest `L2` distance between matching nodes.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| l2_norm(&a.sub(b)).as_f64())
            .fold(0.0, f64::max)
    }
}

/// Per-node operator and source `div C + s_g` at `theta_k`.
pub(crate) struct NodeData<T> {
    pub op: DiffusionOperator<T>,
    pub source: Vec<T>,
}

pub(crate) fn build_nodes<T: Real>(problem: &CellProblem<T>, nu: T) -> Result<Vec<NodeData<T>>> {
    let grid = problem.grid;
    (0..problem.theta_steps)
        .into_par_iter()
        .map(|k| {
            let fc = problem
                .coefficients
                .at_theta(&grid, problem.theta(k))?
                .add_diffusivity(nu);
            if !fc.drift.is_finite() {
                return Err(Error::Contract(format!("non-finite drift at theta node {k}")));
            }
            let op = DiffusionOperator::new(&grid, &fc.diffusivity)?;
            let mut source = drift_divergence_values(&grid, &fc.drift);
            for (s, b) in source.iter_mut().zip(op.boundary_source(&problem.g)) {
                *s += b;
            }
            Ok(NodeData { op, source })
        })
        .collect()
}

/// Marches one period from `start`; returns `S_1, ..., S_n`.
fn march_period<T: Real>(
    problem: &CellProblem<T>,
    nodes: &[NodeData<T>],
    mu: T,
    start: &[T],
) -> Result<Vec<Vec<T>>> {
    let n = nodes.len();
    let len = start.len();
    let h = problem.dtheta();
    let kh = h * problem.kappa();
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(n);
    let mut cur = start.to_vec();
    let mut lcur = vec![T::zero(); len];
    for k in 0..n {
        let next = &nodes[(k + 1) % n];
        let (sys, rhs) = match problem.scheme {
            ThetaScheme::BackwardEuler => {
                let rhs: Vec<T> = cur.iter().zip(&next.source).map(|(&s, &f)| s + kh * f).collect();
                (
                    ShiftedSystem {
                        op: &next.op,
                        alpha: T::one() + mu * h,
                        beta: kh,
                    },
                    rhs,
                )
            }
            ThetaScheme::CrankNicolson => {
                let here = &nodes[k];
                here.op.apply(&cur, &mut lcur);
                let c0 = T::one() - half * mu * h;
                let hk = half * kh;
                let rhs: Vec<T> = (0..len)
                    .map(|m| c0 * cur[m] + hk * lcur[m] + hk * (next.source[m] + here.source[m]))
                    .collect();
                (
                    ShiftedSystem {
                        op: &next.op,
                        alpha: T::one() + half * mu * h,
                        beta: hk,
                    },
                    rhs,
                )
            }
        };
        let mut x = cur.clone();
        pcg(&sys, &rhs, &mut x)?;
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite value {v} at theta node {}", k + 1)));
        }
        out.push(x.clone());
        cur = x;
    }
    Ok(out)
}

fn l2_distance<T: Real>(grid: &Grid<T>, a: &[T], b: &[T]) -> f64 {
    let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    (crate::scalar::pairwise_dot(&d, &d) * grid.cell_area()).sqrt().as_f64()
}

/// Picard iteration on the period map with explicit `mu`, `nu`.
pub(crate) fn periodic_march<T: Real>(problem: &CellProblem<T>, mu: T, nu: T) -> Result<PeriodicProfile<T>> {
    problem.validate()?;
    let grid = problem.grid;
    let nodes = build_nodes(problem, nu)?;
    let mut start = match &problem.initial {
        Some(s) => s.values().to_vec(),
        None => vec![T::zero(); grid.len()],
    };
    // f32 cannot resolve the default tolerance; floor it near round-off.
    let floor = (T::epsilon() * T::lit(1e3)).as_f64();
    let mut history = Vec::new();
    for period in 1..=problem.max_periods {
        let states = march_period(problem, &nodes, mu, &start)?;
        let end = states.last().expect("at least one step");
        let scale = l2_distance(&grid, end, &vec![T::zero(); end.len()]).max(1.0);
        let tol = problem.tol_periodic.as_f64().max(floor * scale);
        let res = l2_distance(&grid, end, &start);
        history.push(res);
        if res <= tol {
            let end = end.clone();
            let next = march_period(problem, &nodes, mu, &end)?;
            let wrap = states
                .iter()
                .zip(&next)
                .map(|(a, b)| l2_distance(&grid, a, b))
                .fold(0.0, f64::max);
            let periodic_residual = l2_distance(&grid, next.last().expect("nonempty"), &end);
            return finish_profile(problem, next, periodic_residual, wrap, period + 1, history);
        }
        if period >= 20 && stagnated(&history) {
            return Err(Error::NonConvergence {
                what: "periodic march",
                detail: format!(
                    "period map is not contracting (residual {res:.3e} after {period} periods); \
                     the operator is degenerate, use nu > 0"
                ),
                history,
            });
        }
        start = end.clone();
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        what: "periodic march",
        detail: format!(
            "residual {last:.3e} above {:.3e} after {} periods",
            problem.tol_periodic.as_f64(),
            problem.max_periods
        ),
        history,
    })
}

/// No progress over the last ten periods.
fn stagnated(history: &[f64]) -> bool {
    let n = history.len();
    n > 10 && history[n - 1] >= history[n - 11] * (1.0 - 1e-6)
}

fn finish_profile<T: Real>(
    problem: &CellProblem<T>,
    states: Vec<Vec<T>>,
    periodic_residual: f64,
    wrap_residual: f64,
    periods: usize,
    history: Vec<f64>,
) -> Result<PeriodicProfile<T>> {
    let n = states.len();
    let grid = problem.grid;
    let mut fields = Vec::with_capacity(n);
    // S_n is the theta = 0 node.
    fields.push(ScalarField::from_values(grid, states[n - 1].clone())?);
    for s in states.into_iter().take(n - 1) {
        fields.push(ScalarField::from_values(grid, s)?);
    }
    let mut profile = PeriodicProfile {
        thetas: (0..n).map(|k| problem.theta(k)).collect(),
        states: fields,
        periodic_residual,
        wrap_residual,
        periods,
        residual_history: history,
        threshold_flags: vec![false; n],
        node_residuals: vec![0.0; n],
        norms: ProfileNorms::default(),
    };
    profile.norms = norm_certificates(&profile, &problem.g);
    Ok(profile)
}

/// Periodic solution of the `(mu, nu)` problem.
pub fn solve_mu_nu<T: Real>(problem: &CellProblem<T>) -> Result<PeriodicProfile<T>> {
    if !(problem.mu > T::zero()) {
        return Err(Error::Precondition(format!("mu must be positive, got {}", problem.mu)));
    }
    if !(problem.nu > T::zero()) {
        return Err(Error::Precondition(format!("nu must be positive, got {}", problem.nu)));
    }
    periodic_march(problem, problem.mu, problem.nu)
}

/// Periodic solution with `mu = 0` and the problem's `nu > 0`.
pub fn solve_nu<T: Real>(problem: &CellProblem<T>) -> Result<PeriodicProfile<T>> {
    if !(problem.nu > T::zero()) {
        return Err(Error::Precondition(format!("nu must be positive, got {}", problem.nu)));
    }
    periodic_march(problem, T::zero(), problem.nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Vec2;
    use crate::schedule::FnCoefficients;
    use std::f64::consts::PI;

    fn scalar_problem(scheme: ThetaScheme, steps: usize) -> CellProblem<f64> {
        // C = (cos(2 pi theta) x, 0): uniform divergence cos(2 pi theta)
        let grid = Grid::unit_square(8).unwrap();
        let coeffs = FnCoefficients::new(|th: f64, p: Vec2<f64>| (0.0, Vec2::new((2.0 * PI * th).cos() * p.x, 0.0)));
        let mut p = CellProblem::new(grid, Arc::new(coeffs), 0.1, 0);
        p.mu = 1.0;
        p.nu = 1e-12;
        p.scheme = scheme;
        p.theta_steps = steps;
        p
    }

    #[test]
    fn homogeneous_problem_has_zero_profile() {
        let grid = Grid::unit_square(8).unwrap();
        let mut p = CellProblem::new(grid, Arc::new(FnCoefficients::constant_diffusion(1.0)), 0.1, 1);
        p.mu = 0.5;
        p.nu = 0.1;
        let prof = solve_mu_nu(&p).unwrap();
        assert_eq!(prof.periodic_residual, 0.0);
        assert!(prof.states.iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn scalar_ode_matches_closed_form() {
        let exact = |th: f64| ((2.0 * PI * th).cos() + 2.0 * PI * (2.0 * PI * th).sin()) / (1.0 + 4.0 * PI * PI);
        let prof = solve_mu_nu(&scalar_problem(ThetaScheme::CrankNicolson, 1024)).unwrap();
        assert!(prof.periodic_residual <= 1e-9);
        let s0 = prof.states[0].get(3, 3);
        assert!((s0 - 1.0 / (1.0 + 4.0 * PI * PI)).abs() < 1e-5, "{s0}");
        for (th, s) in prof.thetas.iter().zip(&prof.states) {
            assert!((s.get(4, 4) - exact(*th)).abs() < 1e-5);
            // uniform in x
            assert!((s.get(0, 0) - s.get(4, 4)).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_euler_is_first_order_in_theta() {
        let exact0 = 1.0 / (1.0 + 4.0 * PI * PI);
        let e1 = (solve_mu_nu(&scalar_problem(ThetaScheme::BackwardEuler, 64)).unwrap().states[0].get(2, 2) - exact0).abs();
        let e2 = (solve_mu_nu(&scalar_problem(ThetaScheme::BackwardEuler, 128)).unwrap().states[0].get(2, 2) - exact0).abs();
        let rate = (e1 / e2).log2();
        assert!((0.8..1.3).contains(&rate), "rate {rate}");
    }

    #[test]
    fn regularization_preconditions() {
        let mut p = scalar_problem(ThetaScheme::BackwardEuler, 32);
        p.mu = 0.0;
        assert!(matches!(solve_mu_nu(&p), Err(Error::Precondition(_))));
        p.mu = 1.0;
        p.nu = 0.0;
        assert!(solve_mu_nu(&p).is_err());
        p.nu = 1e-3;
        p.theta_steps = 16;
        assert!(solve_mu_nu(&p).is_err());
    }

    #[test]
    fn interpolation_hits_nodes_and_midpoints() {
        let prof = solve_mu_nu(&scalar_problem(ThetaScheme::BackwardEuler, 32)).unwrap();
        assert_eq!(prof.at(prof.thetas[5]), prof.states[5]);
        let mid = prof.at(5.5 / 32.0);
        let avg = 0.5 * (prof.states[5].get(1, 1) + prof.states[6].get(1, 1));
        assert!((mid.get(1, 1) - avg).abs() < 1e-15);
        assert_eq!(prof.at(1.0 + prof.thetas[3]), prof.states[3]);
    }
}
