//! Backward-Euler integration of
//! `dz/dt - eps^-i div((A + nu) grad z) = eps^-i div C` with the boundary
//! condition of the grid.

use crate::coeffs::{FluxLaw, ModelConstants};
use crate::error::{Error, Result};
use crate::grid::{
    boundary_flux_integral, drift_boundary_flux, drift_divergence_values, h1_seminorm, l1_norm, l2_norm, mass,
    BoundarySource, DiffusionOperator, Grid,
    ScalarField,
};
use crate::linalg::{pcg, ShiftedSystem};
use crate::scalar::Real;
use crate::schedule::{ModelCoefficients, TimeCoefficients};
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

pub struct EpsProblem<T> {
    pub grid: Grid<T>,
    pub coefficients: Arc<dyn TimeCoefficients<T>>,
    pub epsilon: T,
    /// Power of `1 / eps` in front of the spatial operator: 1 (short, mean)
    /// or 2 (long).
    pub i_exponent: u32,
    pub nu: T,
    pub z0: ScalarField<T>,
    pub g: BoundarySource<T>,
    pub t_final: T,
    pub dt: T,
    /// Keep every `snapshot_stride`-th state (the final state is always kept).
    pub snapshot_stride: usize,
    /// `a d`, used by the accuracy guard [`EpsProblem::dt_max`].
    pub diffusivity_bound: Option<T>,
}

impl<T: Real> Clone for EpsProblem<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            coefficients: Arc::clone(&self.coefficients),
            epsilon: self.epsilon,
            i_exponent: self.i_exponent,
            nu: self.nu,
            z0: self.z0.clone(),
            g: self.g.clone(),
            t_final: self.t_final,
            dt: self.dt,
            snapshot_stride: self.snapshot_stride,
            diffusivity_bound: self.diffusivity_bound,
        }
    }
}

impl<T: Real> fmt::Debug for EpsProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EpsProblem")
            .field("grid", &self.grid)
            .field("epsilon", &self.epsilon)
            .field("i_exponent", &self.i_exponent)
            .field("nu", &self.nu)
            .field("t_final", &self.t_final)
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

/// `min(eps^i / 10, t_final / 256)`.
pub fn default_dt<T: Real>(epsilon: T, i_exponent: u32, t_final: T) -> T {
    let scale = epsilon.powi(i_exponent as i32) * T::lit(0.1);
    let cap = t_final / T::lit(256.0);
    if cap > T::zero() {
        scale.min(cap)
    } else {
        scale
    }
}

impl<T: Real> EpsProblem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Grid<T>,
        coefficients: Arc<dyn TimeCoefficients<T>>,
        epsilon: T,
        i_exponent: u32,
        z0: ScalarField<T>,
        g: BoundarySource<T>,
        t_final: T,
        dt: T,
    ) -> Result<Self> {
        let p = Self {
            grid,
            coefficients,
            epsilon,
            i_exponent,
            nu: T::zero(),
            z0,
            g,
            t_final,
            dt,
            snapshot_stride: 1,
            diffusivity_bound: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Problem for the model coefficients; `i` follows the regime and `nu`
    /// comes from the constants.
    pub fn from_model(
        grid: Grid<T>,
        consts: ModelConstants<T>,
        law: FluxLaw<T>,
        forcing: crate::coeffs::TidalForcing<T>,
        z0: ScalarField<T>,
        g: BoundarySource<T>,
        t_final: T,
        dt: Option<T>,
    ) -> Result<Self> {
        let i = forcing.regime().eps_exponent() as u32;
        let model = ModelCoefficients::new(consts, law, forcing)?;
        let dt = dt.unwrap_or_else(|| default_dt(consts.epsilon, i, t_final));
        let mut p = Self::new(grid, Arc::new(model), consts.epsilon, i, z0, g, t_final, dt)?;
        p.nu = consts.nu;
        p.diffusivity_bound = Some(consts.a * law.d());
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero() && self.epsilon < T::one()) {
            return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
        }
        if !(1..=2).contains(&self.i_exponent) {
            return Err(Error::invalid("i_exponent", "must be 1 or 2"));
        }
        if !(self.t_final >= T::zero() && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final", "must be finite and nonnegative"));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(self.nu >= T::zero()) {
            return Err(Error::invalid("nu", "must be nonnegative"));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::invalid("snapshot_stride", "must be at least 1"));
        }
        if !self.z0.grid().same_shape(&self.grid) {
            return Err(Error::Precondition("initial state lives on another grid".into()));
        }
        if !self.g.matches(&self.grid) {
            return Err(Error::Precondition("boundary data lives on another grid".into()));
        }
        self.z0.check_finite()
    }

    /// `eps^i`.
    pub fn time_scale(&self) -> T {
        self.epsilon.powi(self.i_exponent as i32)
    }

    /// Accuracy guard `eps^i hx hy / (4 a d)`; `None` without a declared
    /// diffusivity bound.
    pub fn dt_max(&self) -> Option<T> {
        self.diffusivity_bound.map(|ad| {
            self.time_scale() * self.grid.cell_area() / (T::lit(4.0) * ad.max(T::min_positive_value()))
        })
    }

    pub fn within_dt_guard(&self) -> bool {
        self.dt_max().map_or(true, |m| self.dt <= m)
    }

    /// Number of steps and the effective step that lands on `t_final`.
    pub fn step_plan(&self) -> (usize, T) {
        if self.t_final.is_zero() {
            return (0, self.dt);
        }
        let ratio = (self.t_final / self.dt).as_f64();
        let n = (ratio * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, self.t_final / T::from_usize_lossy(n))
    }
}

/// Per-step quantities; `boundary_flux` is the rate `eps^-i` times the
/// boundary integral, so `(mass_n - mass_{n-1}) / dt = boundary_flux` up to
/// the solver tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
    pub mass: f64,
    pub boundary_flux: f64,
    /// `|mass_n - mass_{n-1} - dt boundary_flux|` relative to the `L1`
    /// content of the two states.
    pub identity_gap: f64,
    pub cg_iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRun<T> {
    pub times: Vec<T>,
    pub snapshots: Vec<ScalarField<T>>,
    /// One entry per time level, the first for `t = 0`.
    pub diagnostics: Vec<StepDiagnostics>,
    pub dt: T,
    pub epsilon: T,
}

impl<T: Real> SolveRun<T> {
    pub fn final_state(&self) -> &ScalarField<T> {
        self.snapshots.last().expect("a run holds the initial state")
    }

    pub fn sup_l2(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.l2))
    }
}

fn relative_gap(numerator: f64, l1_a: f64, l1_b: f64) -> f64 {
    let den = l1_a.max(l1_b);
    if numerator == 0.0 {
        0.0
    } else if den > 0.0 {
        numerator / den
    } else {
        numerator
    }
}

fn diagnostics_at<T: Real>(
    problem: &EpsProblem<T>,
    z: &ScalarField<T>,
    t: T,
    op: &DiffusionOperator<T>,
    drift_flux: T,
    g: &crate::grid::BoundaryData<T>,
) -> StepDiagnostics {
    let rate = (op.boundary_flux(z.values(), g) + drift_flux) / problem.time_scale();
    StepDiagnostics {
        t: t.as_f64(),
        l2: l2_norm(z).as_f64(),
        h1: h1_seminorm(z).as_f64(),
        mass: mass(z).as_f64(),
        boundary_flux: rate.as_f64(),
        identity_gap: 0.0,
        cg_iterations: 0,
        residual: 0.0,
    }
}

/// One backward-Euler step from `(t_n, z_n)` with step `dt`:
/// `(I - k L) z = z_n + k (div C + s_g)`, `k = dt / eps^i`, every
/// coefficient evaluated at `t_n + dt`.
pub fn step_implicit<T: Real>(
    problem: &EpsProblem<T>,
    z_n: &ScalarField<T>,
    t_n: T,
    dt: T,
) -> Result<(ScalarField<T>, StepDiagnostics)> {
    let grid = problem.grid;
    let t1 = t_n + dt;
    let fc = problem.coefficients.at_time(&grid, t1)?.add_diffusivity(problem.nu);
    if !fc.drift.is_finite() {
        return Err(Error::Contract(format!("non-finite drift at t = {t1}")));
    }
    let g = problem.g.at(&grid, t1);
    let op = DiffusionOperator::new(&grid, &fc.diffusivity)?;
    let k = dt / problem.time_scale();
    let div_c = drift_divergence_values(&grid, &fc.drift);
    let s_g = op.boundary_source(&g);
    let rhs: Vec<T> = z_n
        .values()
        .iter()
        .zip(div_c.iter().zip(&s_g))
        .map(|(&z, (&dc, &sg))| z + k * (dc + sg))
        .collect();
    let sys = ShiftedSystem {
        op: &op,
        alpha: T::one(),
        beta: k,
    };
    let mut z = z_n.values().to_vec();
    let stats = pcg(&sys, &rhs, &mut z)?;
    let z = ScalarField::from_values(grid, z)?;

    let drift_flux = drift_boundary_flux(&grid, &fc.drift);
    let mut d = diagnostics_at(problem, &z, t1, &op, drift_flux, &g);
    let l1_n = l1_norm(z_n).as_f64();
    let l1_1 = l1_norm(&z).as_f64();
    let num = ((mass(&z) - mass(z_n)) - dt * (op.boundary_flux(z.values(), &g) + drift_flux) / problem.time_scale())
        .abs()
        .as_f64();
    d.identity_gap = relative_gap(num, l1_n, l1_1);
    d.cg_iterations = stats.iterations;
    d.residual = stats.residual;
    Ok((z, d))
}

/// Marches `z0` to `t_final`, handing every state (including `z0` at
/// `t = 0`) to `observe`. Returns the per-step diagnostics, `t = 0` first.
pub fn solve_with<T: Real>(
    problem: &EpsProblem<T>,
    mut observe: impl FnMut(usize, T, &ScalarField<T>) -> Result<()>,
) -> Result<Vec<StepDiagnostics>> {
    problem.validate()?;
    let grid = problem.grid;
    let (n, dt) = problem.step_plan();
    let fc0 = problem.coefficients.at_time(&grid, T::zero())?.add_diffusivity(problem.nu);
    let op0 = DiffusionOperator::new(&grid, &fc0.diffusivity)?;
    let g0 = problem.g.at(&grid, T::zero());
    let mut diagnostics = vec![diagnostics_at(
        problem,
        &problem.z0,
        T::zero(),
        &op0,
        drift_boundary_flux(&grid, &fc0.drift),
        &g0,
    )];
    observe(0, T::zero(), &problem.z0)?;
    let mut z = problem.z0.clone();
    for step in 1..=n {
        let t_n = dt * T::from_usize_lossy(step - 1);
        let (z1, d) = step_implicit(problem, &z, t_n, dt).map_err(|e| Error::Step {
            index: step,
            t: t_n.as_f64(),
            source: Box::new(e),
        })?;
        z = z1;
        diagnostics.push(d);
        observe(step, dt * T::from_usize_lossy(step), &z)?;
    }
    Ok(diagnostics)
}

/// Marches `z0` to `t_final`.
pub fn solve<T: Real>(problem: &EpsProblem<T>) -> Result<SolveRun<T>> {
    let (n, dt) = problem.step_plan();
    let stride = problem.snapshot_stride.max(1);
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let diagnostics = solve_with(problem, |step, t, z| {
        if step % stride == 0 || step == n {
            times.push(t);
            snapshots.push(z.clone());
        }
        Ok(())
    })?;
    Ok(SolveRun {
        times,
        snapshots,
        diagnostics,
        dt,
        epsilon: problem.epsilon,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassBalanceRow {
    pub t: f64,
    /// `(mass_n - mass_{n-1}) / dt`.
    pub mass_rate: f64,
    pub boundary_flux: f64,
    pub identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassBalanceReport {
    pub rows: Vec<MassBalanceRow>,
    pub max_identity_gap: f64,
    /// `max |mass_rate|`: zero only when the boundary flux vanishes.
    pub max_raw_drift: f64,
}

/// Compares the discrete mass change with the boundary flux at every step.
pub fn mass_balance_report<T: Real>(run: &SolveRun<T>) -> Result<MassBalanceReport> {
    if run.diagnostics.len() < 2 {
        return Err(Error::Precondition("mass balance needs at least two time levels".into()));
    }
    let dt = run.dt.as_f64();
    let rows: Vec<MassBalanceRow> = run
        .diagnostics
        .windows(2)
        .map(|w| MassBalanceRow {
            t: w[1].t,
            mass_rate: (w[1].mass - w[0].mass) / dt,
            boundary_flux: w[1].boundary_flux,
            identity_gap: w[1].identity_gap,
        })
        .collect();
    Ok(MassBalanceReport {
        max_identity_gap: rows.iter().fold(0.0, |m, r| m.max(r.identity_gap)),
        max_raw_drift: rows.iter().fold(0.0, |m, r| m.max(r.mass_rate.abs())),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBoundRow {
    pub epsilon: f64,
    pub sup_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBoundTable {
    pub rows: Vec<UniformBoundRow>,
    pub max_sup_l2: f64,
    /// `sup_l2[k + 1] / sup_l2[k]` along the ladder.
    pub ratios: Vec<f64>,
}

pub(crate) fn check_ladder<T: Real>(ladder: &[T]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Precondition("empty epsilon ladder".into()));
    }
    if ladder.iter().any(|&e| !(e > T::zero() && e < T::one())) {
        return Err(Error::Precondition("ladder entries must lie in (0, 1)".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// Runs `template(eps)` for each ladder entry (concurrently) and tabulates
/// `sup_t |z^eps|_{L2}`.
pub fn uniform_bound_study<T, F>(template: F, ladder: &[T]) -> Result<UniformBoundTable>
where
    T: Real,
    F: Fn(T) -> Result<EpsProblem<T>> + Sync,
{
    check_ladder(ladder)?;
    let rows: Vec<UniformBoundRow> = ladder
        .par_iter()
        .map(|&eps| {
            let tag = |e| Error::Ladder {
                epsilon: eps.as_f64(),
                source: Box::new(e),
            };
            let run = solve(&template(eps).map_err(tag)?).map_err(tag)?;
            Ok(UniformBoundRow {
                epsilon: eps.as_f64(),
                sup_l2: run.sup_l2(),
            })
        })
        .collect::<Result<_>>()?;
    let ratios = rows
        .windows(2)
        .map(|w| if w[0].sup_l2 > 0.0 { w[1].sup_l2 / w[0].sup_l2 } else if w[1].sup_l2 > 0.0 { f64::INFINITY } else { 1.0 })
        .collect();
    Ok(UniformBoundTable {
        max_sup_l2: rows.iter().fold(0.0, |m, r| m.max(r.sup_l2)),
        rows,
        ratios,
    })
}

/// Boundary integral of the state `z` under the coefficients at `t`,
/// scaled by `eps^-i`.
pub fn boundary_rate<T: Real>(problem: &EpsProblem<T>, z: &ScalarField<T>, t: T) -> Result<T> {
    let fc = problem.coefficients.at_time(&problem.grid, t)?.add_diffusivity(problem.nu);
    let g = problem.g.at(&problem.grid, t);
    Ok(boundary_flux_integral(&problem.grid, &fc.diffusivity, z, &g, &fc.drift)? / problem.time_scale())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::FnCoefficients;
    use crate::scalar::Vec2;

    fn problem(coeffs: FnCoefficients<f64>, z0: ScalarField<f64>, g: BoundarySource<f64>) -> EpsProblem<f64> {
        let grid = *z0.grid();
        EpsProblem::new(grid, Arc::new(coeffs), 0.1, 1, z0, g, 0.1, 0.01).unwrap()
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let grid = Grid::<f64>::unit_square(8).unwrap();
        let p = problem(
            FnCoefficients::constant_diffusion(1.0),
            ScalarField::zeros(grid),
            BoundarySource::zero(),
        );
        let (z, d) = step_implicit(&p, &p.z0, 0.0, p.dt).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        assert_eq!(d.identity_gap, 0.0);
    }

    #[test]
    fn inert_operator_keeps_state() {
        let grid = Grid::<f64>::unit_square(8).unwrap();
        let z0 = ScalarField::from_fn(grid, |p| p.x.sin() + p.y);
        let p = problem(FnCoefficients::constant_diffusion(0.0), z0.clone(), BoundarySource::zero());
        let run = solve(&p).unwrap();
        assert_eq!(run.final_state(), &z0);
    }

    #[test]
    fn energy_decays_without_sources() {
        let grid = Grid::<f64>::unit_square(16).unwrap();
        let z0 = ScalarField::from_fn(grid, |p| (-(p.x - 0.3).powi(2) * 20.0).exp());
        let p = problem(FnCoefficients::constant_diffusion(0.5), z0, BoundarySource::zero());
        let run = solve(&p).unwrap();
        for w in run.diagnostics.windows(2) {
            assert!(w[1].l2 <= w[0].l2);
        }
    }

    #[test]
    fn zero_final_time_keeps_only_initial_state() {
        let grid = Grid::<f64>::unit_square(8).unwrap();
        let mut p = problem(
            FnCoefficients::constant_diffusion(1.0),
            ScalarField::constant(grid, 1.0),
            BoundarySource::zero(),
        );
        p.t_final = 0.0;
        let run = solve(&p).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert_eq!(run.diagnostics.len(), 1);
    }

    #[test]
    fn identity_gap_stays_small_with_drift() {
        let grid = Grid::<f64>::unit_square(16).unwrap();
        let coeffs = FnCoefficients::new(|t, p: Vec2<f64>| (1.0 + p.x, Vec2::new(p.y * (1.0 + t), p.x * p.x)));
        let z0 = ScalarField::from_fn(grid, |p| p.x * p.y);
        let p = problem(coeffs, z0, BoundarySource::from_fn(|t, _, p| t + p.x));
        let run = solve(&p).unwrap();
        let report = mass_balance_report(&run).unwrap();
        assert!(report.max_identity_gap < 1e-10, "{}", report.max_identity_gap);
        assert!(report.max_raw_drift > 1e-3);
    }

    #[test]
    fn ladder_must_decrease() {
        assert!(check_ladder(&[0.1, 0.2]).is_err());
        assert!(check_ladder::<f64>(&[]).is_err());
        assert!(check_ladder(&[0.5, 0.25]).is_ok());
    }
}
