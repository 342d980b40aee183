//! Cell-centred finite volumes on a rectangle `[0, lx] x [0, ly]`.
//!
//! Cells are indexed `(i, j)` with `i` along x and `j` along y; storage is
//! row-major, `k = j * nx + i`. Boundary conditions enter only through the
//! boundary faces, so every operator here is conservative and the cell sum
//! of a divergence equals the corresponding boundary integral.

mod field;
mod io;
mod ops;

pub use field::{BoundaryData, BoundarySource, FaceField, ScalarField};
pub use io::{read_field_csv, write_field_csv};
pub use ops::{DiffusionOperator, drift_boundary_flux, drift_divergence_values, 
    boundary_flux_integral, drift_divergence, diffusive_divergence, h1_seminorm, l1_norm, l2_norm,
    mass,
};

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Boundary condition imposed on every side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryKind {
    /// `dz/dn + z = g`.
    #[default]
    Robin,
    /// `z = g`.
    Dirichlet,
}

/// One side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    lx: T,
    ly: T,
    boundary: BoundaryKind,
}

impl<T: Real> Grid<T> {
    pub const MIN_CELLS: usize = 8;

    pub fn new(nx: usize, ny: usize, lx: T, ly: T, boundary: BoundaryKind) -> Result<Self> {
        if nx < Self::MIN_CELLS || ny < Self::MIN_CELLS {
            return Err(Error::invalid(
                "nx/ny",
                format!("need at least {} cells per direction, got {nx} x {ny}", Self::MIN_CELLS),
            ));
        }
        if !(lx.is_finite() && lx > T::zero() && ly.is_finite() && ly > T::zero()) {
            return Err(Error::invalid("lx/ly", "domain extents must be positive"));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            boundary,
        })
    }

    /// `n x n` Robin grid on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, T::one(), T::one(), BoundaryKind::Robin)
    }

    pub fn with_boundary(mut self, boundary: BoundaryKind) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> T {
        self.lx
    }

    pub fn ly(&self) -> T {
        self.ly
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn hx(&self) -> T {
        self.lx / T::from_usize_lossy(self.nx)
    }

    pub fn hy(&self) -> T {
        self.ly / T::from_usize_lossy(self.ny)
    }

    pub fn cell_area(&self) -> T {
        self.hx() * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2<T> {
        Vec2::new(
            (T::from_usize_lossy(i) + T::lit(0.5)) * self.hx(),
            (T::from_usize_lossy(j) + T::lit(0.5)) * self.hy(),
        )
    }

    /// Midpoint of the x-face left of cell `(i, j)`; `i` runs to `nx`.
    pub fn x_face(&self, i: usize, j: usize) -> Vec2<T> {
        Vec2::new(
            if i == self.nx { self.lx } else { T::from_usize_lossy(i) * self.hx() },
            (T::from_usize_lossy(j) + T::lit(0.5)) * self.hy(),
        )
    }

    /// Midpoint of the y-face below cell `(i, j)`; `j` runs to `ny`.
    pub fn y_face(&self, i: usize, j: usize) -> Vec2<T> {
        Vec2::new(
            (T::from_usize_lossy(i) + T::lit(0.5)) * self.hx(),
            if j == self.ny { self.ly } else { T::from_usize_lossy(j) * self.hy() },
        )
    }

    /// Number of faces on a side.
    pub fn side_len(&self, side: Side) -> usize {
        match side {
            Side::West | Side::East => self.ny,
            Side::South | Side::North => self.nx,
        }
    }

    /// Midpoint of the `k`-th boundary face on `side`.
    pub fn side_face(&self, side: Side, k: usize) -> Vec2<T> {
        match side {
            Side::West => self.x_face(0, k),
            Side::East => self.x_face(self.nx, k),
            Side::South => self.y_face(k, 0),
            Side::North => self.y_face(k, self.ny),
        }
    }

    /// Outward unit normal of `side`.
    pub fn normal(side: Side) -> Vec2<T> {
        match side {
            Side::West => Vec2::new(-T::one(), T::zero()),
            Side::East => Vec2::new(T::one(), T::zero()),
            Side::South => Vec2::new(T::zero(), -T::one()),
            Side::North => Vec2::new(T::zero(), T::one()),
        }
    }

    /// Cell adjacent to the `k`-th boundary face on `side`.
    pub fn side_cell(&self, side: Side, k: usize) -> usize {
        match side {
            Side::West => self.index(0, k),
            Side::East => self.index(self.nx - 1, k),
            Side::South => self.index(k, 0),
            Side::North => self.index(k, self.ny - 1),
        }
    }

    /// Face length and cell width normal to the face, for faces on `side`.
    pub fn side_metrics(&self, side: Side) -> (T, T) {
        match side {
            Side::West | Side::East => (self.hy(), self.hx()),
            Side::South | Side::North => (self.hx(), self.hy()),
        }
    }

    /// Coefficient `R` of the eliminated boundary gradient,
    /// `dz/dn = R (g - z_P)`, for a cell of width `h` normal to the face.
    pub fn boundary_gradient_factor(&self, h: T) -> T {
        let two = T::lit(2.0);
        match self.boundary {
            BoundaryKind::Robin => two / (h + two),
            BoundaryKind::Dirichlet => two / h,
        }
    }

    pub fn same_shape(&self, other: &Grid<T>) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}
