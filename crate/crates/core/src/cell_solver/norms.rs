use super::{periodic_march, CellProblem, PeriodicProfile};
use crate::error::{Error, Result};
use crate::grid::{diffusive_divergence, h1_seminorm, l2_norm, mass, BoundaryData, FaceField};
use crate::scalar::Real;

/// Discrete norms of a periodic profile; `_#` norms integrate over one
/// period with the rectangle rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfileNorms {
    /// `|S|_{L2#(L2)}`.
    pub l2: f64,
    /// `|S|_{L2#(H1)}`.
    pub l2_h1: f64,
    /// `max_theta |S|_{L2}`.
    pub linf_l2: f64,
    /// `max_theta |S|_{H1}`.
    pub linf_h1: f64,
    /// `|dS/dtheta|_{L2#(L2)}` from node differences.
    pub dtheta_l2: f64,
    /// `|Laplacian S|_{L2#(L2)}` with the problem's boundary data.
    pub laplacian_l2: f64,
    /// `max_theta |int S dx|`.
    pub sup_abs_mass: f64,
    /// `|dS/dt|_{L2#(L2)}` in the frozen slow time, when computed.
    pub dt_l2: Option<f64>,
}

/// Every norm of [`ProfileNorms`] except the slow-time derivative.
pub fn norm_certificates<T: Real>(profile: &PeriodicProfile<T>, g: &BoundaryData<T>) -> ProfileNorms {
    let n = profile.states.len();
    if n == 0 {
        return ProfileNorms::default();
    }
    let grid = *profile.grid();
    let w = 1.0 / n as f64;
    let unit = FaceField::constant(&grid, T::one());
    let mut out = ProfileNorms {
        dt_l2: profile.norms.dt_l2,
        ..ProfileNorms::default()
    };
    let (mut l2sq, mut h1sq, mut dsq, mut lapsq) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..n {
        let s = &profile.states[k];
        let l2 = l2_norm(s).as_f64();
        let h1 = h1_seminorm(s).as_f64();
        l2sq += w * l2 * l2;
        h1sq += w * (l2 * l2 + h1 * h1);
        out.linf_l2 = out.linf_l2.max(l2);
        out.linf_h1 = out.linf_h1.max((l2 * l2 + h1 * h1).sqrt());
        out.sup_abs_mass = out.sup_abs_mass.max(mass(s).as_f64().abs());
        let d = l2_norm(&profile.states[(k + 1) % n].sub(s)).as_f64() * n as f64;
        dsq += w * d * d;
        if let Ok(lap) = diffusive_divergence(&grid, &unit, s, g) {
            let v = l2_norm(&lap).as_f64();
            lapsq += w * v * v;
        }
    }
    out.l2 = l2sq.sqrt();
    out.l2_h1 = h1sq.sqrt();
    out.dtheta_l2 = dsq.sqrt();
    out.laplacian_l2 = lapsq.sqrt();
    out
}

/// `|S(t + h) - S(t)|_{L2#(L2)} / h`, re-solving the problem with the slow
/// time shifted and the same regularization as `profile`.
pub fn slow_time_derivative<T: Real>(
    problem: &CellProblem<T>,
    mu: T,
    nu: T,
    profile: &PeriodicProfile<T>,
    h: T,
) -> Result<f64> {
    let shifted = problem
        .coefficients
        .shifted_slow_time(h)
        .ok_or_else(|| Error::Precondition("coefficients carry no slow time".into()))?;
    let mut p = problem.clone();
    p.coefficients = shifted;
    p.initial = Some(profile.states[0].clone());
    let other = periodic_march(&p, mu, nu)?;
    let n = profile.states.len();
    let sq: f64 = profile
        .states
        .iter()
        .zip(&other.states)
        .map(|(a, b)| {
            let d = l2_norm(&b.sub(a)).as_f64();
            d * d / n as f64
        })
        .sum();
    Ok(sq.sqrt() / h.as_f64())
}
