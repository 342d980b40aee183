use super::{Grid, Side};
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};
use std::fmt;
use std::sync::Arc;

/// Cell-centred values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: Grid<T>, k: T) -> Self {
        Self {
            values: vec![k; grid.len()],
            grid,
        }
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(Vec2<T>) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(grid.center(i, j)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let field = Self { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::Contract(format!(
                "non-finite value {} in cell ({}, {})",
                self.values[k],
                k % self.grid.nx(),
                k / self.grid.nx()
            ))),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.grid.same_shape(&other.grid), "fields live on different grids");
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `(1 - w) * self + w * other`.
    pub fn lerp(&self, other: &Self, w: T) -> Self {
        self.zip(other, |a, b| a + (b - a) * w)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Values on cell faces: `x` holds the `(nx + 1) x ny` faces normal to x
/// (index `j * (nx + 1) + i`), `y` the `nx x (ny + 1)` faces normal to y
/// (index `j * nx + i`). Vector quantities store their normal component.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> FaceField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid<T>, k: T) -> Self {
        Self {
            x: vec![k; (grid.nx() + 1) * grid.ny()],
            y: vec![k; grid.nx() * (grid.ny() + 1)],
        }
    }

    /// Samples a scalar at face midpoints.
    pub fn from_scalar_fn(grid: &Grid<T>, f: impl Fn(Vec2<T>) -> T) -> Self {
        Self::from_vector_fn(grid, |p| {
            let v = f(p);
            Vec2::new(v, v)
        })
    }

    /// Samples a vector field at face midpoints and keeps the component
    /// normal to each face.
    pub fn from_vector_fn(grid: &Grid<T>, f: impl Fn(Vec2<T>) -> Vec2<T>) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut x = Vec::with_capacity((nx + 1) * ny);
        for j in 0..ny {
            for i in 0..=nx {
                x.push(f(grid.x_face(i, j)).x);
            }
        }
        let mut y = Vec::with_capacity(nx * (ny + 1));
        for j in 0..=ny {
            for i in 0..nx {
                y.push(f(grid.y_face(i, j)).y);
            }
        }
        Self { x, y }
    }

    pub fn try_from_vector_fn(
        grid: &Grid<T>,
        f: impl Fn(Vec2<T>) -> Result<Vec2<T>>,
    ) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut x = Vec::with_capacity((nx + 1) * ny);
        for j in 0..ny {
            for i in 0..=nx {
                x.push(f(grid.x_face(i, j))?.x);
            }
        }
        let mut y = Vec::with_capacity(nx * (ny + 1));
        for j in 0..=ny {
            for i in 0..nx {
                y.push(f(grid.y_face(i, j))?.y);
            }
        }
        Ok(Self { x, y })
    }

    pub fn matches(&self, grid: &Grid<T>) -> bool {
        self.x.len() == (grid.nx() + 1) * grid.ny() && self.y.len() == grid.nx() * (grid.ny() + 1)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            x: self.x.iter().map(|&v| f(v)).collect(),
            y: self.y.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    /// Value on the `k`-th boundary face of `side`.
    pub fn on_side(&self, grid: &Grid<T>, side: Side, k: usize) -> T {
        let (nx, ny) = (grid.nx(), grid.ny());
        match side {
            Side::West => self.x[k * (nx + 1)],
            Side::East => self.x[k * (nx + 1) + nx],
            Side::South => self.y[k],
            Side::North => self.y[ny * nx + k],
        }
    }
}

/// Boundary values `g` on the boundary faces, per side, in increasing
/// coordinate order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    pub west: Vec<T>,
    pub east: Vec<T>,
    pub south: Vec<T>,
    pub north: Vec<T>,
}

impl<T: Real> BoundaryData<T> {
    pub fn constant(grid: &Grid<T>, k: T) -> Self {
        Self {
            west: vec![k; grid.ny()],
            east: vec![k; grid.ny()],
            south: vec![k; grid.nx()],
            north: vec![k; grid.nx()],
        }
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Samples `f` at boundary face midpoints; the side is passed for
    /// normal-dependent data.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(Side, Vec2<T>) -> T) -> Self {
        let sample = |side| (0..grid.side_len(side)).map(|k| f(side, grid.side_face(side, k))).collect();
        Self {
            west: sample(Side::West),
            east: sample(Side::East),
            south: sample(Side::South),
            north: sample(Side::North),
        }
    }

    pub fn side(&self, side: Side) -> &[T] {
        match side {
            Side::West => &self.west,
            Side::East => &self.east,
            Side::South => &self.south,
            Side::North => &self.north,
        }
    }

    pub fn matches(&self, grid: &Grid<T>) -> bool {
        Side::ALL.iter().all(|&s| self.side(s).len() == grid.side_len(s))
    }

    pub fn is_zero(&self) -> bool {
        Side::ALL.iter().all(|&s| self.side(s).iter().all(|v| v.is_zero()))
    }

    /// Trace of a cell field extrapolated with zero normal slope: the cell
    /// value adjacent to each boundary face.
    pub fn adjacent_values(field: &ScalarField<T>) -> Self {
        let grid = field.grid();
        let sample = |side| {
            (0..grid.side_len(side))
                .map(|k| field.values()[grid.side_cell(side, k)])
                .collect()
        };
        Self {
            west: sample(Side::West),
            east: sample(Side::East),
            south: sample(Side::South),
            north: sample(Side::North),
        }
    }
}

type BoundaryFn<T> = dyn Fn(T, Side, Vec2<T>) -> T + Send + Sync;

/// Time-dependent boundary data `g(t, x)`.
#[derive(Clone)]
pub struct BoundarySource<T> {
    kind: SourceKind<T>,
}

#[derive(Clone)]
enum SourceKind<T> {
    Constant(T),
    Fixed(Arc<BoundaryData<T>>),
    Function(Arc<BoundaryFn<T>>),
}

impl<T: Real> BoundarySource<T> {
    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn constant(k: T) -> Self {
        Self {
            kind: SourceKind::Constant(k),
        }
    }

    /// Time-independent face values.
    pub fn fixed(data: BoundaryData<T>) -> Self {
        Self {
            kind: SourceKind::Fixed(Arc::new(data)),
        }
    }

    /// `f(t, side, x)` evaluated at boundary face midpoints.
    pub fn from_fn(f: impl Fn(T, Side, Vec2<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            kind: SourceKind::Function(Arc::new(f)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            SourceKind::Constant(k) => k.is_zero(),
            SourceKind::Fixed(d) => d.is_zero(),
            SourceKind::Function(_) => false,
        }
    }

    /// False when fixed data was sampled on a different grid.
    pub fn matches(&self, grid: &Grid<T>) -> bool {
        match &self.kind {
            SourceKind::Fixed(d) => d.matches(grid),
            _ => true,
        }
    }

    pub fn at(&self, grid: &Grid<T>, t: T) -> BoundaryData<T> {
        match &self.kind {
            SourceKind::Constant(k) => BoundaryData::constant(grid, *k),
            SourceKind::Fixed(d) => (**d).clone(),
            SourceKind::Function(f) => BoundaryData::from_fn(grid, |side, p| f(t, side, p)),
        }
    }
}

impl<T: Real> fmt::Debug for BoundarySource<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SourceKind::Constant(k) => write!(f, "BoundarySource::Constant({k})"),
            SourceKind::Fixed(_) => f.write_str("BoundarySource::Fixed(..)"),
            SourceKind::Function(_) => write!(f, "BoundarySource::Function(..)"),
        }
    }
}
