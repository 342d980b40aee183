use super::battery::TestFunction;
use super::pairing::{pair_limit_battery, LimitProfile, SequencePairing};
use crate::cell_solver::{solve_homogenized_long, solve_homogenized_short, CellProblem, ThresholdSet};
use crate::coeffs::{FluxLaw, ModelConstants, Regime, TidalForcing};
use crate::eps_solver::{check_ladder, solve_with, EpsProblem, SolveRun};
use crate::error::{Error, Result};
use crate::grid::{l2_norm, BoundaryData, BoundarySource, Grid, ScalarField};
use crate::scalar::{Real, Vec2};
use crate::schedule::CellCoefficientKind;
use rayon::prelude::*;
use std::io::Write;

/// Shortest ladder accepted by the convergence study.
pub const MIN_LADDER: usize = 3;
/// Largest growth of `sup_t |W_eps|` between successive ladder entries for
/// the corrector to count as bounded.
pub const CORRECTOR_RATIO_BOUND: f64 = 1.25;

/// Initial state of the `eps` problems.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState<T> {
    Field(ScalarField<T>),
    /// `z0 = U(0, 0, .)`, the limit profile at the start of the period.
    WellPrepared,
}

/// Everything an `eps` ladder needs besides `eps` itself: the model, the
/// (time-independent) Robin data and the discretization of the limit.
#[derive(Debug, Clone)]
pub struct TwoScaleProblem<T> {
    pub grid: Grid<T>,
    pub consts: ModelConstants<T>,
    pub law: FluxLaw<T>,
    pub forcing: TidalForcing<T>,
    pub g: BoundaryData<T>,
    pub initial: InitialState<T>,
    pub t_final: T,
    /// Nodes per period of the limit profile; the `eps` problems step with
    /// `dt = eps / theta_steps` so both march the same fast grid.
    pub theta_steps: usize,
    /// Number of slow times at which the limit is solved (uniform on
    /// `[0, T]`, one means `t = 0` only).
    pub limit_samples: usize,
}

impl<T: Real> TwoScaleProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > T::zero() && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if self.theta_steps < super::pairing::MIN_LIMIT_THETA_STEPS {
            return Err(Error::invalid("theta_steps", "must be at least 32"));
        }
        if self.limit_samples == 0 {
            return Err(Error::invalid("limit_samples", "must be at least 1"));
        }
        if !self.g.matches(&self.grid) {
            return Err(Error::Precondition("boundary data lives on another grid".into()));
        }
        self.consts.check_forcing(&self.forcing)
    }

    pub fn dt(&self, epsilon: T) -> T {
        epsilon / T::from_usize_lossy(self.theta_steps)
    }

    pub fn limit_times(&self) -> Vec<T> {
        let n = self.limit_samples;
        if n == 1 {
            return vec![T::zero()];
        }
        (0..n)
            .map(|k| self.t_final * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1))
            .collect()
    }

    /// Homogenized profile at every slow sample. Short and mean regimes use
    /// the parabolic limit (the mean regime at `tau = 0`); the long regime
    /// the elliptic limit with its threshold set.
    pub fn limit_profile(&self) -> Result<LimitProfile<T>> {
        self.validate()?;
        let times = self.limit_times();
        let profiles = times
            .par_iter()
            .map(|&t| {
                let mut cell = CellProblem::from_model(
                    self.grid,
                    self.consts,
                    self.law,
                    self.forcing,
                    t,
                    T::zero(),
                    CellCoefficientKind::Limit,
                    0,
                )?;
                cell.theta_steps = self.theta_steps;
                cell.g = self.g.clone();
                cell.mu = T::zero();
                cell.nu = T::zero();
                match self.forcing.regime() {
                    Regime::Short | Regime::Mean => solve_homogenized_short(&cell),
                    Regime::Long => {
                        let set = ThresholdSet::from_model(
                            &self.consts,
                            &self.law,
                            &self.forcing,
                            &[t],
                            self.theta_steps,
                            None,
                        )?;
                        solve_homogenized_long(&cell, set.row(0))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LimitProfile::new(times, profiles)
    }

    pub fn eps_problem(&self, epsilon: T, limit: &LimitProfile<T>) -> Result<EpsProblem<T>> {
        let z0 = match &self.initial {
            InitialState::Field(z) => z.clone(),
            InitialState::WellPrepared => limit.at(T::zero(), T::zero()),
        };
        self.eps_problem_from(epsilon, z0)
    }

    fn eps_problem_from(&self, epsilon: T, z0: ScalarField<T>) -> Result<EpsProblem<T>> {
        EpsProblem::from_model(
            self.grid,
            self.consts.with_epsilon(epsilon)?,
            self.law,
            self.forcing,
            z0,
            BoundarySource::fixed(self.g.clone()),
            self.t_final,
            Some(self.dt(epsilon)),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingRow {
    pub psi_id: String,
    pub epsilon: f64,
    pub pairing: f64,
    pub limit_pairing: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorRow {
    pub epsilon: f64,
    /// `sup_t |(z^eps - U^eps) / eps|_{L2}`.
    pub sup_corrector_l2: f64,
    /// Ratio to the previous (larger) `eps`; `None` on the first row.
    pub ladder_ratio: Option<f64>,
}

/// Pairing of `W_eps = (z^eps - U^eps) / eps` with one test function: the
/// empirical two-scale limit of the corrector.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorPairingRow {
    pub psi_id: String,
    pub epsilon: f64,
    pub pairing: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwoScaleReport {
    /// Decreasing.
    pub ladder: Vec<f64>,
    pub psi_ids: Vec<String>,
    /// Ordered by ladder entry, then battery position.
    pub pairings: Vec<PairingRow>,
    /// Least-squares slope of `log |P_eps - P_*|` against `log eps`, per
    /// test function; `None` when fewer than two errors are nonzero.
    pub rates: Vec<Option<f64>>,
    /// Errors decrease over the last three ladder entries, per test function.
    pub monotone: Vec<bool>,
    pub monotone_decrease: Option<bool>,
    pub corrector: Vec<CorrectorRow>,
    pub corrector_pairings: Vec<CorrectorPairingRow>,
    pub corrector_bounded: Option<bool>,
}

impl TwoScaleReport {
    /// Errors of one test function along the ladder.
    pub fn errors(&self, psi: usize) -> Vec<f64> {
        let m = self.psi_ids.len();
        (0..self.ladder.len()).map(|k| self.pairings[k * m + psi].abs_error).collect()
    }

    pub fn max_abs_error(&self) -> f64 {
        self.pairings.iter().fold(0.0, |m, r| m.max(r.abs_error))
    }

    pub fn corrector_ratios(&self) -> Vec<f64> {
        self.corrector.iter().filter_map(|r| r.ladder_ratio).collect()
    }

    /// `psi_id,epsilon,pairing,limit_pairing,abs_error`.
    pub fn write_pairings_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "psi_id,epsilon,pairing,limit_pairing,abs_error")?;
        for r in &self.pairings {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e}",
                r.psi_id, r.epsilon, r.pairing, r.limit_pairing, r.abs_error
            )?;
        }
        Ok(())
    }

    /// `epsilon,sup_corrector_l2,ladder_ratio`, the ratio empty on the first
    /// row.
    pub fn write_corrector_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "epsilon,sup_corrector_l2,ladder_ratio")?;
        for r in &self.corrector {
            match r.ladder_ratio {
                Some(q) => writeln!(w, "{:e},{:e},{:e}", r.epsilon, r.sup_corrector_l2, q)?,
                None => writeln!(w, "{:e},{:e},", r.epsilon, r.sup_corrector_l2)?,
            }
        }
        Ok(())
    }

    pub fn write_corrector_pairings_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "psi_id,epsilon,pairing")?;
        for r in &self.corrector_pairings {
            writeln!(w, "{},{:e},{:e}", r.psi_id, r.epsilon, r.pairing)?;
        }
        Ok(())
    }
}

fn fitted_rate(eps: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(err)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&x, &e)| (x.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Strict decrease over the last three entries; errors already at the
/// round-off floor count as decreasing.
fn decreasing_tail(err: &[f64], floor: f64) -> bool {
    let tail = &err[err.len().saturating_sub(3)..];
    tail.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

fn check_runs<T: Real>(runs: &[SolveRun<T>]) -> Result<Vec<f64>> {
    if runs.is_empty() {
        return Err(Error::Precondition("no runs".into()));
    }
    let ladder: Vec<T> = runs.iter().map(|r| r.epsilon).collect();
    check_ladder(&ladder)?;
    Ok(ladder.iter().map(|e| e.as_f64()).collect())
}

fn pairing_report(ladder: Vec<f64>, battery: &[TestFunction], pairings: Vec<Vec<f64>>, limit: &[f64]) -> TwoScaleReport {
    let psi_ids: Vec<String> = battery.iter().map(|p| p.id()).collect();
    let mut rows = Vec::with_capacity(ladder.len() * battery.len());
    for (k, per_eps) in pairings.iter().enumerate() {
        for (m, &p) in per_eps.iter().enumerate() {
            rows.push(PairingRow {
                psi_id: psi_ids[m].clone(),
                epsilon: ladder[k],
                pairing: p,
                limit_pairing: limit[m],
                abs_error: (p - limit[m]).abs(),
            });
        }
    }
    let mut report = TwoScaleReport {
        ladder,
        psi_ids,
        pairings: rows,
        ..TwoScaleReport::default()
    };
    for m in 0..battery.len() {
        let err = report.errors(m);
        report.rates.push(fitted_rate(&report.ladder, &err));
        let floor = 1e-12 * limit[m].abs().max(1.0);
        report.monotone.push(decreasing_tail(&err, floor));
    }
    report.monotone_decrease = Some(report.ladder.len() >= MIN_LADDER && report.monotone.iter().all(|&b| b));
    report
}

/// Pairings of stored runs (ordered by decreasing `eps`) against the limit.
pub fn convergence_from_runs<T: Real>(
    runs: &[SolveRun<T>],
    limit: &LimitProfile<T>,
    battery: &[TestFunction],
) -> Result<TwoScaleReport> {
    let ladder = check_runs(runs)?;
    if battery.is_empty() {
        return Err(Error::Precondition("empty test-function battery".into()));
    }
    let t_final = *runs[0].times.last().expect("runs have snapshots");
    let lim = pair_limit_battery(limit, battery, t_final)?;
    let pairings = runs
        .par_iter()
        .map(|r| super::pairing::pair_battery(r, battery, r.epsilon))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairing_report(ladder, battery, pairings, &lim))
}

/// Solves the `eps` problem for each ladder entry and pairs `z^eps` against
/// the battery, comparing with the homogenized limit.
pub fn convergence_study<T: Real>(
    problem: &TwoScaleProblem<T>,
    battery: &[TestFunction],
    ladder: &[T],
) -> Result<TwoScaleReport> {
    if battery.is_empty() {
        return Err(Error::Precondition("empty test-function battery".into()));
    }
    if ladder.len() < MIN_LADDER {
        return Err(Error::Precondition(format!(
            "ladder needs at least {MIN_LADDER} entries, got {}",
            ladder.len()
        )));
    }
    check_ladder(ladder)?;
    let limit = problem.limit_profile()?;
    convergence_with_limit(problem, battery, ladder, &limit)
}

/// [`convergence_study`] against an already solved limit.
pub fn convergence_with_limit<T: Real>(
    problem: &TwoScaleProblem<T>,
    battery: &[TestFunction],
    ladder: &[T],
    limit: &LimitProfile<T>,
) -> Result<TwoScaleReport> {
    check_ladder(ladder)?;
    let lim = pair_limit_battery(limit, battery, problem.t_final)?;
    let pairings = ladder
        .par_iter()
        .map(|&eps| {
            let tag = |e| Error::Ladder {
                epsilon: eps.as_f64(),
                source: Box::new(e),
            };
            let p = problem.eps_problem(eps, limit).map_err(tag)?;
            let mut acc = SequencePairing::new(&problem.grid, battery, eps, problem.t_final).map_err(tag)?;
            solve_with(&p, |_, t, z| acc.push(t, z)).map_err(tag)?;
            Ok(acc.finish())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairing_report(
        ladder.iter().map(|e| e.as_f64()).collect(),
        battery,
        pairings,
        &lim,
    ))
}

/// Streaming `W_eps(t) = (z(t) - U(t, t / eps)) / eps`.
struct CorrectorAccumulator<'a, T> {
    limit: &'a LimitProfile<T>,
    epsilon: T,
    sup_l2: f64,
    pairing: SequencePairing<T>,
}

impl<'a, T: Real> CorrectorAccumulator<'a, T> {
    fn push(&mut self, t: T, z: &ScalarField<T>) -> Result<()> {
        let u = self.limit.at(t, t / self.epsilon);
        let w = z.sub(&u).scale(T::one() / self.epsilon);
        self.sup_l2 = self.sup_l2.max(l2_norm(&w).as_f64());
        self.pairing.push(t, &w)
    }
}

fn corrector_report(ladder: Vec<f64>, battery: &[TestFunction], members: Vec<(f64, Vec<f64>)>) -> TwoScaleReport {
    let psi_ids: Vec<String> = battery.iter().map(|p| p.id()).collect();
    let mut corrector = Vec::with_capacity(ladder.len());
    let mut corrector_pairings = Vec::new();
    for (k, (sup, pairs)) in members.iter().enumerate() {
        let ladder_ratio = (k > 0).then(|| {
            let prev = members[k - 1].0;
            if prev > 0.0 {
                sup / prev
            } else if *sup > 0.0 {
                f64::INFINITY
            } else {
                1.0
            }
        });
        corrector.push(CorrectorRow {
            epsilon: ladder[k],
            sup_corrector_l2: *sup,
            ladder_ratio,
        });
        for (m, &p) in pairs.iter().enumerate() {
            corrector_pairings.push(CorrectorPairingRow {
                psi_id: psi_ids[m].clone(),
                epsilon: ladder[k],
                pairing: p,
            });
        }
    }
    let bounded = ladder.len() >= 2
        && corrector
            .iter()
            .filter_map(|r| r.ladder_ratio)
            .all(|q| q <= CORRECTOR_RATIO_BOUND);
    TwoScaleReport {
        ladder,
        psi_ids,
        corrector,
        corrector_pairings,
        corrector_bounded: Some(bounded),
        ..TwoScaleReport::default()
    }
}

/// Corrector diagnostics of stored runs against a limit profile.
pub fn corrector_from_runs<T: Real>(
    runs: &[SolveRun<T>],
    limit: &LimitProfile<T>,
    battery: &[TestFunction],
) -> Result<TwoScaleReport> {
    let ladder = check_runs(runs)?;
    let members = runs
        .par_iter()
        .map(|r| {
            let t_final = *r.times.last().expect("runs have snapshots");
            let mut acc = CorrectorAccumulator {
                limit,
                epsilon: r.epsilon,
                sup_l2: 0.0,
                pairing: SequencePairing::new(limit.grid(), battery, r.epsilon, t_final)?,
            };
            for (&t, z) in r.times.iter().zip(&r.snapshots) {
                acc.push(t, z)?;
            }
            Ok((acc.sup_l2, acc.pairing.finish()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(corrector_report(ladder, battery, members))
}

/// First-order corrector study in the short regime. The `eps` problems start
/// from the well-prepared state `U(0, 0, .)` whatever `problem.initial`
/// says: otherwise the initial layer makes `W_eps(0)` of order `1 / eps`.
pub fn corrector_study<T: Real>(
    problem: &TwoScaleProblem<T>,
    battery: &[TestFunction],
    ladder: &[T],
) -> Result<TwoScaleReport> {
    if problem.forcing.regime() != Regime::Short {
        return Err(Error::Precondition("the corrector estimate is stated for the short regime".into()));
    }
    if ladder.len() < 2 {
        return Err(Error::Precondition("corrector ladder needs at least 2 entries".into()));
    }
    check_ladder(ladder)?;
    let limit = problem.limit_profile()?;
    corrector_with_limit(problem, battery, ladder, &limit)
}

/// [`corrector_study`] against an already solved limit.
pub fn corrector_with_limit<T: Real>(
    problem: &TwoScaleProblem<T>,
    battery: &[TestFunction],
    ladder: &[T],
    limit: &LimitProfile<T>,
) -> Result<TwoScaleReport> {
    check_ladder(ladder)?;
    let members = ladder
        .par_iter()
        .map(|&eps| {
            let tag = |e| Error::Ladder {
                epsilon: eps.as_f64(),
                source: Box::new(e),
            };
            let p = problem
                .eps_problem_from(eps, limit.at(T::zero(), T::zero()))
                .map_err(tag)?;
            let mut acc = CorrectorAccumulator {
                limit,
                epsilon: eps,
                sup_l2: 0.0,
                pairing: SequencePairing::new(&problem.grid, battery, eps, problem.t_final).map_err(tag)?,
            };
            solve_with(&p, |_, t, z| acc.push(t, z)).map_err(tag)?;
            Ok((acc.sup_l2, acc.pairing.finish()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(corrector_report(
        ladder.iter().map(|e| e.as_f64()).collect(),
        battery,
        members,
    ))
}

/// A stored "run" `z(t, x) = f(t, x)` sampled every `dt` on `[0, T]`, for
/// synthetic fixtures.
pub fn synthetic_run<T: Real>(
    grid: Grid<T>,
    epsilon: T,
    dt: T,
    t_final: T,
    f: impl Fn(T, Vec2<T>) -> T + Sync,
) -> SolveRun<T> {
    let n = (t_final / dt).ceil().to_usize().unwrap_or(1).max(1);
    let dt = t_final / T::from_usize_lossy(n);
    let times: Vec<T> = (0..=n).map(|k| dt * T::from_usize_lossy(k)).collect();
    let snapshots = times
        .par_iter()
        .map(|&t| ScalarField::from_fn(grid, |p| f(t, p)))
        .collect();
    SolveRun {
        times,
        snapshots,
        diagnostics: Vec::new(),
        dt,
        epsilon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_solver::PeriodicProfile;
    use crate::twoscale::default_battery;
    use std::f64::consts::TAU;

    #[test]
    fn rate_of_a_power_law() {
        let eps = [0.1, 0.05, 0.025];
        let err: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e * e).collect();
        assert!((fitted_rate(&eps, &err).unwrap() - 2.0).abs() < 1e-12);
        assert!(fitted_rate(&eps, &[0.0, 0.0, 1.0]).is_none());
    }

    #[test]
    fn tail_rule() {
        assert!(decreasing_tail(&[5.0, 1.0, 0.5, 0.2], 0.0));
        assert!(!decreasing_tail(&[5.0, 1.0, 0.5, 0.6], 0.0));
        assert!(decreasing_tail(&[1e-16, 2e-16, 1e-16], 1e-12));
    }

    #[test]
    fn exact_profile_has_zero_corrector() {
        let grid = Grid::unit_square(8).unwrap();
        let u = |th: f64, p: Vec2<f64>| (TAU * th).sin() * p.x;
        let limit = LimitProfile::stationary(PeriodicProfile::sampled(grid, 64, u));
        let runs: Vec<_> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|&e| synthetic_run(grid, e, e / 64.0, 1.0, move |t, p| u(t / e, p)))
            .collect();
        let r = corrector_from_runs(&runs, &limit, &default_battery()).unwrap();
        assert!(r.corrector.iter().all(|c| c.sup_corrector_l2 < 1e-9), "{:?}", r.corrector);
        // slow factor 1: whole periods, the trapezoid rule is exact
        let battery: Vec<_> = default_battery()
            .into_iter()
            .filter(|p| p.time == crate::twoscale::TimeFactor::One)
            .collect();
        let c = convergence_from_runs(&runs, &limit, &battery).unwrap();
        assert!(c.max_abs_error() < 1e-12, "{}", c.max_abs_error());
    }
}
