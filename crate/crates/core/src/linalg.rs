//! Jacobi-preconditioned conjugate gradients for `alpha I - beta L0`.

use crate::error::{Error, Result};
use crate::grid::DiffusionOperator;
use crate::scalar::{pairwise_dot, Real};

/// Relative residual target of every linear solve.
pub const CG_TOLERANCE: f64 = 1e-12;

/// `alpha z - beta L0 z`, symmetric positive definite for `alpha > 0` or
/// a nonzero boundary coupling.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedSystem<'a, T> {
    pub op: &'a DiffusionOperator<T>,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> ShiftedSystem<'_, T> {
    pub fn apply(&self, z: &[T], out: &mut [T]) {
        self.op.apply(z, out);
        for (o, &zi) in out.iter_mut().zip(z) {
            *o = self.alpha * zi - self.beta * *o;
        }
    }

    pub fn len(&self) -> usize {
        self.op.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Relative residual `|b - M x| / |b|` (absolute when `b = 0`).
    pub fn relative_residual(&self, rhs: &[T], x: &[T]) -> f64 {
        let mut mx = vec![T::zero(); x.len()];
        self.apply(x, &mut mx);
        let r: Vec<T> = rhs.iter().zip(&mx).map(|(&b, &m)| b - m).collect();
        let rn = pairwise_dot(&r, &r).sqrt().as_f64();
        let bn = pairwise_dot(rhs, rhs).sqrt().as_f64();
        if bn > 0.0 {
            rn / bn
        } else {
            rn
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `M x = rhs` starting from the contents of `x`. Fails after
/// `10 n` iterations with the residual history attached.
pub fn pcg<T: Real>(sys: &ShiftedSystem<'_, T>, rhs: &[T], x: &mut [T]) -> Result<CgStats> {
    let n = sys.len();
    let tol = T::solver_tolerance(CG_TOLERANCE);
    let max_iter = 10 * n;
    let bnorm = pairwise_dot(rhs, rhs).sqrt();
    if bnorm.is_zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(CgStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<T> = sys
        .op
        .diagonal()
        .iter()
        .map(|&d| {
            let m = sys.alpha + sys.beta * d;
            if m > T::zero() {
                T::one() / m
            } else {
                T::one()
            }
        })
        .collect();

    let mut r = vec![T::zero(); n];
    sys.apply(x, &mut r);
    for (ri, &b) in r.iter_mut().zip(rhs) {
        *ri = b - *ri;
    }
    let mut history = Vec::new();
    let mut rel = pairwise_dot(&r, &r).sqrt() / bnorm;
    history.push(rel.as_f64());
    if rel <= tol {
        return Ok(CgStats {
            iterations: 0,
            residual: rel.as_f64(),
        });
    }
    let mut zv: Vec<T> = r.iter().zip(&inv_diag).map(|(&a, &b)| a * b).collect();
    let mut p = zv.clone();
    let mut rz = pairwise_dot(&r, &zv);
    let mut q = vec![T::zero(); n];
    for it in 1..=max_iter {
        sys.apply(&p, &mut q);
        let pq = pairwise_dot(&p, &q);
        if !(pq > T::zero()) {
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: rel.as_f64(),
                residual_history: history,
            });
        }
        let alpha = rz / pq;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        rel = pairwise_dot(&r, &r).sqrt() / bnorm;
        history.push(rel.as_f64());
        if !rel.is_finite() {
            return Err(Error::Contract(format!("non-finite residual in iteration {it}")));
        }
        if rel <= tol {
            return Ok(CgStats {
                iterations: it,
                residual: rel.as_f64(),
            });
        }
        for k in 0..n {
            zv[k] = r[k] * inv_diag[k];
        }
        let rz_new = pairwise_dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = zv[k] + beta * p[k];
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: rel.as_f64(),
        residual_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FaceField, Grid};

    #[test]
    fn solves_shifted_laplacian() {
        let g = Grid::<f64>::unit_square(16).unwrap();
        let a = FaceField::from_scalar_fn(&g, |p| 1.0 + p.x * p.y);
        let op = DiffusionOperator::new(&g, &a).unwrap();
        let sys = ShiftedSystem {
            op: &op,
            alpha: 1.0,
            beta: 0.05,
        };
        let xs: Vec<f64> = (0..g.len()).map(|k| ((k * 7) % 13) as f64 - 6.0).collect();
        let mut b = vec![0.0; g.len()];
        sys.apply(&xs, &mut b);
        let mut x = vec![0.0; g.len()];
        let stats = pcg(&sys, &b, &mut x).unwrap();
        assert!(stats.iterations > 0);
        assert!(sys.relative_residual(&b, &x) < 1e-11);
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = Grid::<f64>::unit_square(8).unwrap();
        let op = DiffusionOperator::new(&g, &FaceField::constant(&g, 1.0)).unwrap();
        let sys = ShiftedSystem {
            op: &op,
            alpha: 0.0,
            beta: 1.0,
        };
        let mut x = vec![3.0; g.len()];
        pcg(&sys, &vec![0.0; g.len()], &mut x).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn singular_system_reports_divergence() {
        // no diffusion and no shift: M = 0
        let g = Grid::<f64>::unit_square(8).unwrap();
        let op = DiffusionOperator::new(&g, &FaceField::zeros(&g)).unwrap();
        let sys = ShiftedSystem {
            op: &op,
            alpha: 0.0,
            beta: 1.0,
        };
        let mut x = vec![0.0; g.len()];
        let err = pcg(&sys, &vec![1.0; g.len()], &mut x).unwrap_err();
        assert!(err.residual_history().is_some());
        assert!(err.is_numerical());
    }
}
