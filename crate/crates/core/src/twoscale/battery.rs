use crate::grid::Grid;
use crate::scalar::{frac, Real, Vec2};
use std::fmt;

/// Slow-time factor on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeFactor {
    One,
    /// `t / T`.
    Linear,
    /// `sin^2(pi t / T)`, vanishing at both ends: the compactly supported
    /// surrogate.
    Bump,
}

/// 1-periodic fast factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FastFactor {
    One,
    /// `sin(2 pi k theta)`.
    Sin(u32),
    /// `cos(2 pi k theta)`.
    Cos(u32),
}

/// Spatial factor on `[0, lx] x [0, ly]`, written in the scaled
/// coordinates `(x / lx, y / ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceFactor {
    One,
    X,
    Y,
    /// `sin(pi x) sin(pi y)`.
    SinSin,
    /// `cos(k pi x) cos(l pi y)`.
    CosCos(u32, u32),
    /// `x^k y^l`.
    Monomial(u32, u32),
}

/// Separable test function `psi(t, theta, x) = phi_t(t) phi_theta(theta) phi_x(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TestFunction {
    pub time: TimeFactor,
    pub fast: FastFactor,
    pub space: SpaceFactor,
}

impl TestFunction {
    pub const fn new(time: TimeFactor, fast: FastFactor, space: SpaceFactor) -> Self {
        Self { time, fast, space }
    }

    pub const fn constant() -> Self {
        Self::new(TimeFactor::One, FastFactor::One, SpaceFactor::One)
    }

    pub fn time_factor<T: Real>(&self, t: T, t_final: T) -> T {
        let s = if t_final > T::zero() { t / t_final } else { T::zero() };
        match self.time {
            TimeFactor::One => T::one(),
            TimeFactor::Linear => s,
            TimeFactor::Bump => {
                let v = (T::PI() * s).sin();
                v * v
            }
        }
    }

    /// Evaluated at `frac(theta)`, so the factor is exactly periodic.
    pub fn fast_factor<T: Real>(&self, theta: T) -> T {
        let th = frac(theta);
        match self.fast {
            FastFactor::One => T::one(),
            FastFactor::Sin(k) => (T::TAU() * T::from_u32(k).expect("small integer") * th).sin(),
            FastFactor::Cos(k) => (T::TAU() * T::from_u32(k).expect("small integer") * th).cos(),
        }
    }

    pub fn space_factor<T: Real>(&self, p: Vec2<T>, lx: T, ly: T) -> T {
        let (x, y) = (p.x / lx, p.y / ly);
        let pi = T::PI();
        match self.space {
            SpaceFactor::One => T::one(),
            SpaceFactor::X => x,
            SpaceFactor::Y => y,
            SpaceFactor::SinSin => (pi * x).sin() * (pi * y).sin(),
            SpaceFactor::CosCos(k, l) => {
                (pi * T::from_u32(k).expect("small integer") * x).cos()
                    * (pi * T::from_u32(l).expect("small integer") * y).cos()
            }
            SpaceFactor::Monomial(k, l) => x.powi(k as i32) * y.powi(l as i32),
        }
    }

    pub fn eval<T: Real>(&self, t: T, theta: T, p: Vec2<T>, t_final: T, lx: T, ly: T) -> T {
        self.time_factor(t, t_final) * self.fast_factor(theta) * self.space_factor(p, lx, ly)
    }

    /// `|cell| phi_x(centre)` for every cell: the midpoint rule in space.
    pub fn space_weights<T: Real>(&self, grid: &Grid<T>) -> Vec<T> {
        let area = grid.cell_area();
        (0..grid.ny())
            .flat_map(|j| (0..grid.nx()).map(move |i| (i, j)))
            .map(|(i, j)| area * self.space_factor(grid.center(i, j), grid.lx(), grid.ly()))
            .collect()
    }

    /// Short stable label, e.g. `lin.sin1.sinsin`.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.time {
            TimeFactor::One => "1",
            TimeFactor::Linear => "lin",
            TimeFactor::Bump => "bump",
        };
        write!(f, "{t}.")?;
        match self.fast {
            FastFactor::One => write!(f, "1.")?,
            FastFactor::Sin(k) => write!(f, "sin{k}.")?,
            FastFactor::Cos(k) => write!(f, "cos{k}.")?,
        }
        match self.space {
            SpaceFactor::One => write!(f, "1"),
            SpaceFactor::X => write!(f, "x"),
            SpaceFactor::Y => write!(f, "y"),
            SpaceFactor::SinSin => write!(f, "sinsin"),
            SpaceFactor::CosCos(k, l) => write!(f, "cos{k}cos{l}"),
            SpaceFactor::Monomial(k, l) => write!(f, "x{k}y{l}"),
        }
    }
}

/// The 32 tensor products of `{1, sin 2pi theta, cos 2pi theta, sin 4pi theta}`,
/// `{1, x, y, sin pi x sin pi y}` and `{1, t}`.
pub fn default_battery() -> Vec<TestFunction> {
    let fast = [FastFactor::One, FastFactor::Sin(1), FastFactor::Cos(1), FastFactor::Sin(2)];
    let space = [SpaceFactor::One, SpaceFactor::X, SpaceFactor::Y, SpaceFactor::SinSin];
    let time = [TimeFactor::One, TimeFactor::Linear];
    let mut out = Vec::with_capacity(32);
    for &tf in &time {
        for &ff in &fast {
            for &sf in &space {
                out.push(TestFunction::new(tf, ff, sf));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_factor_is_periodic() {
        for psi in default_battery() {
            for k in 0..200 {
                let th = -3.0 + k as f64 * 0.0371;
                let d = psi.fast_factor(th + 1.0) - psi.fast_factor(th);
                assert!(d.abs() <= 1e-14, "{psi}: {d}");
            }
        }
    }

    #[test]
    fn battery_ids_are_distinct() {
        let ids: std::collections::HashSet<String> = default_battery().iter().map(|p| p.id()).collect();
        assert_eq!(ids.len(), 32);
    }

    #[test]
    fn bump_vanishes_at_the_ends() {
        let psi = TestFunction::new(TimeFactor::Bump, FastFactor::One, SpaceFactor::One);
        assert!(psi.time_factor(0.0f64, 2.0).abs() < 1e-15);
        assert!(psi.time_factor(2.0f64, 2.0).abs() < 1e-15);
        assert!((psi.time_factor(1.0f64, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn space_weights_integrate_monomials() {
        let grid = Grid::new(16, 8, 2.0, 1.0, crate::grid::BoundaryKind::Robin).unwrap();
        let psi = TestFunction::new(TimeFactor::One, FastFactor::One, SpaceFactor::X);
        let s: f64 = psi.space_weights(&grid).iter().sum();
        // int_0^2 int_0^1 x/2 dy dx = 1, exact for the midpoint rule
        assert!((s - 1.0).abs() < 1e-14);
    }
}
