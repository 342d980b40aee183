use super::{BoundaryData, FaceField, Grid, ScalarField, Side};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, pairwise_sum_by, Real};

/// Face transmissibilities of `div(A grad .)` with the boundary condition
/// eliminated. For a boundary face the eliminated outward gradient is
/// `R (g - z_P)`, `R = 2 / (h + 2)` (Robin) or `2 / h` (Dirichlet), which
/// is exact for profiles linear across the boundary cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator<T> {
    grid: Grid<T>,
    /// Per x-face: `A / hx^2` inside, `A R / hx` on the boundary.
    cx: Vec<T>,
    cy: Vec<T>,
    /// Sum of the face coefficients around each cell.
    diag: Vec<T>,
}

impl<T: Real> DiffusionOperator<T> {
    pub fn new(grid: &Grid<T>, diffusivity: &FaceField<T>) -> Result<Self> {
        if !diffusivity.matches(grid) {
            return Err(Error::Precondition("face field does not match the grid".into()));
        }
        if let Some(&v) = diffusivity.x.iter().chain(&diffusivity.y).find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::Contract(format!("face diffusivity {v} is negative or non-finite")));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let (hx, hy) = (grid.hx(), grid.hy());
        let (ix2, iy2) = (T::one() / (hx * hx), T::one() / (hy * hy));
        let (bx, by) = (
            grid.boundary_gradient_factor(hx) / hx,
            grid.boundary_gradient_factor(hy) / hy,
        );
        let mut cx = Vec::with_capacity(diffusivity.x.len());
        for _j in 0..ny {
            for i in 0..=nx {
                let a = diffusivity.x[cx.len()];
                cx.push(if i == 0 || i == nx { a * bx } else { a * ix2 });
            }
        }
        let mut cy = Vec::with_capacity(diffusivity.y.len());
        for j in 0..=ny {
            for _i in 0..nx {
                let a = diffusivity.y[cy.len()];
                cy.push(if j == 0 || j == ny { a * by } else { a * iy2 });
            }
        }
        let mut diag = vec![T::zero(); grid.len()];
        for j in 0..ny {
            for i in 0..nx {
                let xw = j * (nx + 1) + i;
                let ys = j * nx + i;
                diag[grid.index(i, j)] = cx[xw] + cx[xw + 1] + cy[ys] + cy[ys + nx];
            }
        }
        Ok(Self {
            grid: *grid,
            cx,
            cy,
            diag,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Diagonal of `-L0`.
    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    /// `out = L0 z`: the discrete `div(A grad z)` with homogeneous boundary data.
    pub fn apply(&self, z: &[T], out: &mut [T]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let zp = z[k];
                let xw = j * (nx + 1) + i;
                let ys = j * nx + i;
                let mut acc = -self.diag[k] * zp;
                if i > 0 {
                    acc += self.cx[xw] * z[k - 1];
                }
                if i + 1 < nx {
                    acc += self.cx[xw + 1] * z[k + 1];
                }
                if j > 0 {
                    acc += self.cy[ys] * z[k - nx];
                }
                if j + 1 < ny {
                    acc += self.cy[ys + nx] * z[k + nx];
                }
                out[k] = acc;
            }
        }
    }

    /// Contribution of the boundary data to `div(A grad z)`.
    pub fn boundary_source(&self, g: &BoundaryData<T>) -> Vec<T> {
        let mut s = vec![T::zero(); self.grid.len()];
        for side in Side::ALL {
            for (k, &gk) in g.side(side).iter().enumerate() {
                let cell = self.grid.side_cell(side, k);
                s[cell] += self.face_coefficient(side, k) * gk;
            }
        }
        s
    }

    fn face_coefficient(&self, side: Side, k: usize) -> T {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        match side {
            Side::West => self.cx[k * (nx + 1)],
            Side::East => self.cx[k * (nx + 1) + nx],
            Side::South => self.cy[k],
            Side::North => self.cy[ny * nx + k],
        }
    }

    /// `sum_f |f| A_f dz/dn` over boundary faces, with the eliminated
    /// gradient.
    pub fn boundary_flux(&self, z: &[T], g: &BoundaryData<T>) -> T {
        let area = self.grid.cell_area();
        let mut terms = Vec::with_capacity(2 * (self.grid.nx() + self.grid.ny()));
        for side in Side::ALL {
            for (k, &gk) in g.side(side).iter().enumerate() {
                let zp = z[self.grid.side_cell(side, k)];
                terms.push(area * self.face_coefficient(side, k) * (gk - zp));
            }
        }
        pairwise_sum(&terms)
    }
}

fn check_boundary<T: Real>(grid: &Grid<T>, g: &BoundaryData<T>) -> Result<()> {
    if g.matches(grid) {
        Ok(())
    } else {
        Err(Error::Precondition("boundary data does not match the grid".into()))
    }
}

/// Discrete `div(A grad z)` with the boundary condition of `grid` and data
/// `g`.
pub fn diffusive_divergence<T: Real>(
    grid: &Grid<T>,
    diffusivity: &FaceField<T>,
    z: &ScalarField<T>,
    g: &BoundaryData<T>,
) -> Result<ScalarField<T>> {
    check_boundary(grid, g)?;
    let op = DiffusionOperator::new(grid, diffusivity)?;
    let mut out = op.boundary_source(g);
    let mut lz = vec![T::zero(); grid.len()];
    op.apply(z.values(), &mut lz);
    for (o, l) in out.iter_mut().zip(lz) {
        *o += l;
    }
    ScalarField::from_values(*grid, out)
}

/// Conservative `div C` from normal face components; boundary faces carry
/// the physical flux.
pub fn drift_divergence<T: Real>(grid: &Grid<T>, drift: &FaceField<T>) -> Result<ScalarField<T>> {
    if !drift.matches(grid) {
        return Err(Error::Precondition("face field does not match the grid".into()));
    }
    ScalarField::from_values(*grid, drift_divergence_values(grid, drift))
}

pub fn drift_divergence_values<T: Real>(grid: &Grid<T>, drift: &FaceField<T>) -> Vec<T> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (ihx, ihy) = (T::one() / grid.hx(), T::one() / grid.hy());
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..ny {
        for i in 0..nx {
            let xw = j * (nx + 1) + i;
            let ys = j * nx + i;
            out.push((drift.x[xw + 1] - drift.x[xw]) * ihx + (drift.y[ys + nx] - drift.y[ys]) * ihy);
        }
    }
    out
}

/// `sum over boundary faces of |f| (A dz/dn + C.n)`: the cell sum of the two
/// divergences weighted by the cell area equals this value.
pub fn boundary_flux_integral<T: Real>(
    grid: &Grid<T>,
    diffusivity: &FaceField<T>,
    z: &ScalarField<T>,
    g: &BoundaryData<T>,
    drift: &FaceField<T>,
) -> Result<T> {
    check_boundary(grid, g)?;
    let op = DiffusionOperator::new(grid, diffusivity)?;
    Ok(op.boundary_flux(z.values(), g) + drift_boundary_flux(grid, drift))
}

pub fn drift_boundary_flux<T: Real>(grid: &Grid<T>, drift: &FaceField<T>) -> T {
    let mut terms = Vec::with_capacity(2 * (grid.nx() + grid.ny()));
    for side in Side::ALL {
        let (len, _) = grid.side_metrics(side);
        let sign = match side {
            Side::West | Side::South => -T::one(),
            Side::East | Side::North => T::one(),
        };
        for k in 0..grid.side_len(side) {
            terms.push(sign * drift.on_side(grid, side, k) * len);
        }
    }
    pairwise_sum(&terms)
}

/// Midpoint rule for `int z`.
pub fn mass<T: Real>(z: &ScalarField<T>) -> T {
    pairwise_sum(z.values()) * z.grid().cell_area()
}

pub fn l1_norm<T: Real>(z: &ScalarField<T>) -> T {
    let v = z.values();
    pairwise_sum_by(v.len(), &|k| v[k].abs()) * z.grid().cell_area()
}

pub fn l2_norm<T: Real>(z: &ScalarField<T>) -> T {
    let v = z.values();
    (pairwise_sum_by(v.len(), &|k| v[k] * v[k]) * z.grid().cell_area()).sqrt()
}

/// `|grad z|_{L2}` from differences across interior faces.
pub fn h1_seminorm<T: Real>(z: &ScalarField<T>) -> T {
    let g = z.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = z.values();
    let (ihx, ihy) = (T::one() / g.hx(), T::one() / g.hy());
    let nxf = (nx - 1) * ny;
    let nyf = nx * (ny - 1);
    let sx = pairwise_sum_by(nxf, &|f| {
        let (j, i) = (f / (nx - 1), f % (nx - 1));
        let d = (v[j * nx + i + 1] - v[j * nx + i]) * ihx;
        d * d
    });
    let sy = pairwise_sum_by(nyf, &|f| {
        let (j, i) = (f / nx, f % nx);
        let d = (v[(j + 1) * nx + i] - v[j * nx + i]) * ihy;
        d * d
    });
    ((sx + sy) * g.cell_area()).sqrt()
}
