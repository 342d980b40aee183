use super::{periodic_march, slow_time_derivative, CellProblem, PeriodicProfile};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Profiles along a regularization ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuation<T> {
    pub parameters: Vec<f64>,
    pub profiles: Vec<PeriodicProfile<T>>,
    /// `max_theta |S_k - S_{k+1}|_{L2}` between successive ladder members.
    pub increments: Vec<f64>,
    /// Last increment at most `10 tol_periodic`.
    pub solved: bool,
}

impl<T: Real> Continuation<T> {
    pub fn profile(&self) -> &PeriodicProfile<T> {
        self.profiles.last().expect("ladders are nonempty")
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.increments.windows(2).all(|w| w[1] < w[0])
    }
}

fn check_ladder<T: Real>(name: &'static str, ladder: &[T]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Precondition(format!("empty {name} ladder")));
    }
    if ladder.iter().any(|&v| !(v > T::zero() && v.is_finite())) {
        return Err(Error::Precondition(format!("{name} ladder entries must be positive")));
    }
    if ladder.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Precondition(format!("{name} ladder must be non-increasing")));
    }
    Ok(())
}

fn run_ladder<T: Real>(
    problem: &CellProblem<T>,
    ladder: &[T],
    set: impl Fn(&mut CellProblem<T>, T),
    what: &'static str,
) -> Result<Continuation<T>> {
    let mut p = problem.clone();
    let mut profiles: Vec<PeriodicProfile<T>> = Vec::with_capacity(ladder.len());
    for &v in ladder {
        set(&mut p, v);
        if let Some(prev) = profiles.last() {
            p.initial = Some(prev.states[0].clone());
        }
        profiles.push(periodic_march(&p, p.mu, p.nu)?);
    }
    let increments: Vec<f64> = profiles.windows(2).map(|w| w[0].max_distance(&w[1])).collect();
    let noise = 10.0 * problem.tol_periodic.as_f64();
    if let Some(k) = (1..increments.len()).find(|&k| increments[k] > increments[k - 1] + noise) {
        return Err(Error::NonConvergence {
            what,
            detail: format!(
                "increment {k} grew from {:.3e} to {:.3e}",
                increments[k - 1],
                increments[k]
            ),
            history: increments,
        });
    }
    let solved = increments.last().map_or(true, |&d| d <= noise);
    Ok(Continuation {
        parameters: ladder.iter().map(|v| v.as_f64()).collect(),
        profiles,
        increments,
        solved,
    })
}

/// Solves the `(mu, nu)` problem along a decreasing `mu` ladder at fixed
/// `nu > 0`, warm-starting each member from the previous one.
pub fn continue_mu_to_zero<T: Real>(problem: &CellProblem<T>, mu_ladder: &[T]) -> Result<Continuation<T>> {
    if !(problem.nu > T::zero()) {
        return Err(Error::Precondition("mu continuation needs nu > 0".into()));
    }
    check_ladder("mu", mu_ladder)?;
    run_ladder(problem, mu_ladder, |p, mu| p.mu = mu, "mu continuation")
}

/// Solves along a decreasing `nu` ladder at the problem's `mu` (usually 0).
/// The last profile carries the slow-time derivative norm when the
/// coefficients depend on a slow time.
pub fn continue_nu_to_zero<T: Real>(problem: &CellProblem<T>, nu_ladder: &[T]) -> Result<Continuation<T>> {
    check_ladder("nu", nu_ladder)?;
    let mut c = run_ladder(problem, nu_ladder, |p, nu| p.nu = nu, "nu continuation")?;
    let nu = *nu_ladder.last().expect("nonempty");
    if problem.coefficients.shifted_slow_time(T::zero()).is_some() {
        let last = c.profiles.last_mut().expect("nonempty");
        let mut p = problem.clone();
        p.nu = nu;
        last.norms.dt_l2 = Some(slow_time_derivative(&p, p.mu, nu, last, T::lit(1e-3))?);
    }
    Ok(c)
}
