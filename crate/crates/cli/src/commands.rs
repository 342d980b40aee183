use serde_json::json;
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;
use tidal_dunes::cell_solver::{
    continue_mu_to_zero, continue_nu_to_zero, solve_homogenized_long, solve_homogenized_short, solve_mu_nu,
    solve_nu, PeriodicProfile, ThresholdSet,
};
use tidal_dunes::coeffs::{validate_hypotheses, Regime};
use tidal_dunes::eps_solver::solve_with;
use tidal_dunes::twoscale::{
    convergence_study, corrector_from_runs, corrector_study, default_battery, synthetic_run, LimitProfile,
    TwoScaleReport,
};
use tidal_dunes::Vec2;

use crate::config::RunConfig;
use crate::{output, CliError};

/// Sampling density of the hypothesis validator per unit of each variable.
const VALIDATE_DENSITY: usize = 64;
const MIN_STUDY_LADDER: usize = 3;

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("regime".into(), json!(cfg.regime));
    m.insert("seed".into(), json!(cfg.seed));
    m
}

/// Writes the residual history of a failed solve before reporting it.
fn with_history<T>(out: &Path, r: tidal_dunes::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| {
        if let Some(h) = e.residual_history() {
            if let Err(w) = output::residual_history(out, h) {
                eprintln!("warning: {w}");
            }
        }
        CliError::from(e)
    })
}

pub fn validate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let m = cfg.model()?;
    let report = validate_hypotheses(&m.law, &m.forcing, &m.consts, VALIDATE_DENSITY)?;
    let mut w = output::create(out, "validate.txt")?;
    write!(w, "{report}")?;
    w.flush()?;
    let mut s = header(cfg, "validate");
    s.insert(
        "verdicts".into(),
        json!({ "hypotheses_hold": report.is_clean() }),
    );
    s.insert(
        "norms".into(),
        json!({
            "samples": report.samples,
            "violations": report.violation_count,
            "g_tilde_thr": report.g_tilde_thr,
        }),
    );
    output::summary(out, &s.into())?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(CliError::Verdict(format!(
            "{} hypothesis violation(s), see validate.txt",
            report.violation_count
        )))
    }
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let problem = cfg.eps_problem()?;
    let guarded = problem.within_dt_guard();
    if !guarded {
        eprintln!("warning: dt = {} exceeds the accuracy bound eps^i hx hy / (4 a d) = {:?}", problem.dt, problem.dt_max());
    }
    let (steps, _) = problem.step_plan();
    let stride = problem.snapshot_stride;
    let mut index = output::create(out, "snapshots.csv")?;
    writeln!(index, "step,t,file")?;
    let mut io_error = None;
    let diagnostics = solve_with(&problem, |step, t, z| {
        if step % stride == 0 || step == steps {
            let name = format!("z_{step:06}.csv");
            let r = output::field(out, &name, z)
                .and_then(|_| writeln!(index, "{step},{t:e},{name}").map_err(CliError::from));
            if let Err(e) = r {
                io_error = Some(e);
                return Err(tidal_dunes::Error::Precondition("output failed".into()));
            }
        }
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let diagnostics = diagnostics?;
    index.flush()?;
    let mut w = output::create(out, "diagnostics.csv")?;
    writeln!(w, "t,l2,h1,mass,boundary_flux,identity_gap")?;
    for d in &diagnostics {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            d.t, d.l2, d.h1, d.mass, d.boundary_flux, d.identity_gap
        )?;
    }
    w.flush()?;
    let max = |f: fn(&tidal_dunes::eps_solver::StepDiagnostics) -> f64| {
        diagnostics.iter().map(f).fold(0.0f64, f64::max)
    };
    let mut s = header(cfg, "solve");
    s.insert("verdicts".into(), json!({ "completed": true, "within_dt_guard": guarded }));
    s.insert(
        "norms".into(),
        json!({
            "epsilon": problem.epsilon,
            "dt": problem.dt,
            "steps": steps,
            "sup_l2": max(|d| d.l2),
            "sup_h1": max(|d| d.h1),
            "max_identity_gap": max(|d| d.identity_gap),
            "max_cg_residual": max(|d| d.residual),
            "final_mass": diagnostics.last().map(|d| d.mass),
        }),
    );
    output::summary(out, &s.into())
}

fn ladder_csv(out: &Path, name: &str, parameters: &[f64], increments: &[f64]) -> Result<(), CliError> {
    let mut w = output::create(out, name)?;
    writeln!(w, "parameter,increment")?;
    for (k, p) in parameters.iter().enumerate() {
        match k.checked_sub(1).and_then(|j| increments.get(j)) {
            Some(d) => writeln!(w, "{p:e},{d:e}")?,
            None => writeln!(w, "{p:e},")?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cell(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut problem = cfg.cell_problem()?;
    let mut s = header(cfg, "cell");
    let mut verdicts = serde_json::Map::new();
    let mut ladders = serde_json::Map::new();
    let mut profile: Option<PeriodicProfile<f64>> = None;
    if !cfg.cell.mu_ladder.is_empty() {
        let c = with_history(out, continue_mu_to_zero(&problem, &cfg.cell.mu_ladder))?;
        ladder_csv(out, "continuation_mu.csv", &c.parameters, &c.increments)?;
        verdicts.insert("mu_increments_decreasing".into(), json!(c.strictly_decreasing()));
        verdicts.insert("mu_continuation_solved".into(), json!(c.solved));
        ladders.insert("mu_increments".into(), json!(c.increments));
        profile = Some(c.profile().clone());
    }
    if !cfg.cell.nu_ladder.is_empty() {
        problem.mu = 0.0;
        problem.initial = profile.as_ref().map(|p| p.states[0].clone());
        let c = with_history(out, continue_nu_to_zero(&problem, &cfg.cell.nu_ladder))?;
        ladder_csv(out, "continuation_nu.csv", &c.parameters, &c.increments)?;
        verdicts.insert("nu_increments_decreasing".into(), json!(c.strictly_decreasing()));
        verdicts.insert("nu_continuation_solved".into(), json!(c.solved));
        ladders.insert("nu_increments".into(), json!(c.increments));
        profile = Some(c.profile().clone());
    }
    let profile = match profile {
        Some(p) => p,
        None if problem.mu > 0.0 => with_history(out, solve_mu_nu(&problem))?,
        None => with_history(out, solve_nu(&problem))?,
    };
    output::profile(out, &profile)?;
    verdicts.insert(
        "periodic".into(),
        json!(profile.periodic_residual <= cfg.cell.tol_periodic),
    );
    let mut norms = output::profile_norms_json(&profile);
    norms["continuation"] = ladders.into();
    s.insert("verdicts".into(), verdicts.into());
    s.insert("norms".into(), norms);
    output::summary(out, &s.into())
}

pub fn homogenize(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let problem = cfg.homogenized_problem()?;
    let profile = match cfg.regime() {
        Regime::Short | Regime::Mean => with_history(out, solve_homogenized_short(&problem))?,
        Regime::Long => {
            let m = cfg.model()?;
            let set = ThresholdSet::from_model(&m.consts, &m.law, &m.forcing, &[cfg.cell.t], problem.theta_steps, None)?;
            with_history(out, solve_homogenized_long(&problem, set.row(0)))?
        }
    };
    output::profile(out, &profile)?;
    let mut s = header(cfg, "homogenize");
    s.insert(
        "verdicts".into(),
        json!({
            "periodic": profile.periodic_residual <= cfg.cell.tol_periodic,
            "threshold_set_empty": profile.threshold_flags.iter().all(|&b| !b),
        }),
    );
    s.insert("norms".into(), output::profile_norms_json(&profile));
    output::summary(out, &s.into())
}

fn study_ladder(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let ladder = cfg.twoscale.ladder.clone();
    if ladder.len() < MIN_STUDY_LADDER {
        return Err(CliError::Config(format!(
            "twoscale.ladder: need at least {MIN_STUDY_LADDER} entries, got {}",
            ladder.len()
        )));
    }
    if ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "twoscale.ladder: entries must be strictly decreasing in (0, 1)".into(),
        ));
    }
    Ok(ladder)
}

fn report_norms(r: &TwoScaleReport) -> serde_json::Value {
    let rates: serde_json::Map<String, serde_json::Value> =
        r.psi_ids.iter().cloned().zip(r.rates.iter().map(|q| json!(q))).collect();
    json!({
        "ladder": r.ladder,
        "max_abs_error": r.max_abs_error(),
        "rates": rates,
        "monotone_count": r.monotone.iter().filter(|&&b| b).count(),
        "sup_corrector_l2": r.corrector.iter().map(|c| c.sup_corrector_l2).collect::<Vec<_>>(),
        "corrector_ratios": r.corrector_ratios(),
    })
}

fn write_report(cfg: &RunConfig, out: &Path, command: &str, r: &TwoScaleReport) -> Result<(), CliError> {
    let mut w = output::create(out, "twoscale_report.csv")?;
    r.write_pairings_csv(&mut w)?;
    w.flush()?;
    if !r.corrector.is_empty() {
        let mut w = output::create(out, "corrector_report.csv")?;
        r.write_corrector_csv(&mut w)?;
        w.flush()?;
        let mut w = output::create(out, "corrector_pairings.csv")?;
        r.write_corrector_pairings_csv(&mut w)?;
        w.flush()?;
    }
    let mut s = header(cfg, command);
    s.insert(
        "verdicts".into(),
        json!({
            "monotone_decrease": r.monotone_decrease,
            "corrector_bounded": r.corrector_bounded,
        }),
    );
    s.insert("norms".into(), report_norms(r));
    output::summary(out, &s.into())
}

pub fn twoscale(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ladder = study_ladder(cfg)?;
    let problem = cfg.two_scale_problem()?;
    let report = convergence_study(&problem, &default_battery(), &ladder)?;
    write_report(cfg, out, "twoscale", &report)
}

pub fn corrector(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ladder = study_ladder(cfg)?;
    let report = if cfg.twoscale.synthetic {
        synthetic_corrector(cfg, &ladder)?
    } else {
        let problem = cfg.two_scale_problem()?;
        if problem.forcing.regime() != Regime::Short {
            return Err(CliError::Config("corrector: the study needs regime = \"short\"".into()));
        }
        corrector_study(&problem, &default_battery(), &ladder)?
    };
    write_report(cfg, out, "corrector", &report)
}

/// `z^eps = U(t / eps, x) + eps V(t, t / eps, x)` for an analytic `U`
/// sampled on the configured `theta` nodes: the corrector must reproduce
/// `V` and stay flat along the ladder.
fn synthetic_corrector(cfg: &RunConfig, ladder: &[f64]) -> Result<TwoScaleReport, CliError> {
    let grid = cfg.grid()?;
    let (lx, ly) = (grid.lx(), grid.ly());
    let u = move |th: f64, p: Vec2<f64>| {
        (TAU * th).sin() * (PI * p.x / lx).sin() * (PI * p.y / ly).sin() + 0.5 * (TAU * th).cos() * p.x / lx
    };
    let v = move |t: f64, th: f64, p: Vec2<f64>| (TAU * t).cos() * (1.0 + p.x * p.y / (lx * ly)) + 0.3 * (TAU * th).sin();
    let limit = LimitProfile::stationary(PeriodicProfile::sampled(grid, cfg.twoscale.theta_steps, u));
    let t_final = cfg.time.t_final;
    let runs: Vec<_> = ladder
        .iter()
        .map(|&e| synthetic_run(grid, e, e / 100.0, t_final, move |t, p| u(t / e, p) + e * v(t, t / e, p)))
        .collect();
    Ok(corrector_from_runs(&runs, &limit, &default_battery())?)
}
