use super::{build_nodes, norm_certificates, periodic_march, CellProblem, PeriodicProfile, ProfileNorms};
use crate::coeffs::{assemble_coefficients, FluxLaw, ModelConstants, TidalForcing};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::linalg::{pcg, ShiftedSystem};
use crate::scalar::{Real, Vec2};
use rayon::prelude::*;

/// Short-term limit `dU/dtheta - div(A~ grad U) = div C~`: the periodic
/// march with `mu = nu = 0` and no `eps` factor. The problem's coefficients
/// should be the limits.
pub fn solve_homogenized_short<T: Real>(problem: &CellProblem<T>) -> Result<PeriodicProfile<T>> {
    let mut p = problem.clone();
    p.mu = T::zero();
    p.nu = T::zero();
    p.i_exponent = 0;
    periodic_march(&p, T::zero(), T::zero()).map_err(|e| match e {
        Error::NonConvergence { detail, history, .. } => Error::NonConvergence {
            what: "homogenized short-term profile",
            detail: format!("{detail}; retry with a small nu > 0"),
            history,
        },
        other => other,
    })
}

/// Fast times where the limit diffusivity drops below `G~_thr`, sampled on
/// a `(t, theta)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub ts: Vec<f64>,
    pub thetas: Vec<f64>,
    /// `a_tilde[i][k]` at `(ts[i], thetas[k])`.
    pub a_tilde: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
    pub g_tilde_thr: f64,
}

impl ThresholdSet {
    /// Mask from a pointwise limit diffusivity `a(t, theta)`.
    pub fn from_fn<T: Real>(
        ts: &[T],
        theta_steps: usize,
        g_tilde_thr: T,
        a: impl Fn(T, T) -> Result<T>,
    ) -> Result<Self> {
        if ts.is_empty() || theta_steps == 0 {
            return Err(Error::Precondition("threshold set needs t and theta samples".into()));
        }
        let thetas: Vec<T> = (0..theta_steps)
            .map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(theta_steps))
            .collect();
        let mut a_tilde = Vec::with_capacity(ts.len());
        let mut mask = Vec::with_capacity(ts.len());
        for &t in ts {
            let row: Vec<T> = thetas.iter().map(|&th| a(t, th)).collect::<Result<_>>()?;
            mask.push(row.iter().map(|&v| v < g_tilde_thr).collect());
            a_tilde.push(row.iter().map(|v| v.as_f64()).collect());
        }
        Ok(Self {
            ts: ts.iter().map(|t| t.as_f64()).collect(),
            thetas: thetas.iter().map(|t| t.as_f64()).collect(),
            a_tilde,
            mask,
            g_tilde_thr: g_tilde_thr.as_f64(),
        })
    }

    /// Mask of the long-term limit `A~ = a g_a(|U_0(theta)|)`, which is
    /// uniform in space; `g_tilde_thr` defaults to `a G_thr`.
    pub fn from_model<T: Real>(
        consts: &ModelConstants<T>,
        law: &FluxLaw<T>,
        forcing: &TidalForcing<T>,
        ts: &[T],
        theta_steps: usize,
        g_tilde_thr: Option<T>,
    ) -> Result<Self> {
        let thr = g_tilde_thr.unwrap_or(consts.a * law.g_thr());
        let (lx, ly) = forcing.domain();
        let centre = Vec2::new(lx * T::lit(0.5), ly * T::lit(0.5));
        Self::from_fn(ts, theta_steps, thr, |t, th| {
            Ok(assemble_coefficients(consts, law, forcing, t, T::zero(), th, centre)?.a_tilde)
        })
    }

    pub fn row(&self, t_index: usize) -> &[bool] {
        &self.mask[t_index]
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().flatten().filter(|&&m| m).count()
    }
}

/// Long-term limit: `-div(A~ grad U) = div C~` at every active node, `U`
/// held constant in `theta` on masked nodes, equal to the last active node
/// before them (with periodic wrap).
pub fn solve_homogenized_long<T: Real>(problem: &CellProblem<T>, mask: &[bool]) -> Result<PeriodicProfile<T>> {
    problem.validate()?;
    let n = problem.theta_steps;
    if mask.len() != n {
        return Err(Error::Precondition(format!(
            "mask has {} entries for {n} theta nodes",
            mask.len()
        )));
    }
    let Some(first_active) = mask.iter().position(|&m| !m) else {
        return Err(Error::Precondition(
            "every theta node lies in the threshold set; nothing anchors the profile".into(),
        ));
    };
    let grid = problem.grid;
    let nodes = build_nodes(problem, T::zero())?;
    let solved: Vec<Option<(Vec<T>, f64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            if mask[k] {
                return Ok(None);
            }
            let sys = ShiftedSystem {
                op: &nodes[k].op,
                alpha: T::zero(),
                beta: T::one(),
            };
            let mut x = vec![T::zero(); grid.len()];
            pcg(&sys, &nodes[k].source, &mut x).map_err(|e| Error::Step {
                index: k,
                t: problem.theta(k).as_f64(),
                source: Box::new(e),
            })?;
            let res = sys.relative_residual(&nodes[k].source, &x);
            Ok(Some((x, res)))
        })
        .collect::<Result<_>>()?;

    let mut states: Vec<Option<ScalarField<T>>> = vec![None; n];
    let mut node_residuals = vec![0.0; n];
    for (k, s) in solved.into_iter().enumerate() {
        if let Some((x, res)) = s {
            states[k] = Some(ScalarField::from_values(grid, x)?);
            node_residuals[k] = res;
        }
    }
    // Walk once around the period starting at an active node.
    let mut anchor = states[first_active].clone().expect("active node solved");
    for step in 1..=n {
        let k = (first_active + step) % n;
        match &states[k] {
            Some(s) => anchor = s.clone(),
            None => states[k] = Some(anchor.clone()),
        }
    }
    let states: Vec<ScalarField<T>> = states.into_iter().map(|s| s.expect("filled")).collect();
    let mut profile = PeriodicProfile {
        thetas: (0..n).map(|k| problem.theta(k)).collect(),
        states,
        periodic_residual: 0.0,
        wrap_residual: 0.0,
        periods: 0,
        residual_history: Vec::new(),
        threshold_flags: mask.to_vec(),
        node_residuals,
        norms: ProfileNorms::default(),
    };
    profile.norms = norm_certificates(&profile, &problem.g);
    Ok(profile)
}
