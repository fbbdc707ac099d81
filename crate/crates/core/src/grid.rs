//! Uniform cell-centered grids, cell fields, quadrature and the implicit
//! Robin-boundary diffusion solve.

use std::ops::Index;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;

const SOLVER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

/// One face of a boundary cell lying on the container wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    pub side: Side,
    pub area: f64,
}

/// Uniform rectangular grid in one, two or three dimensions.
///
/// Cells are numbered with the first axis varying fastest. In 1D the two
/// end "faces" have unit area, so volumes are lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cells: Vec<usize>,
    spacing: Vec<f64>,
    cell_volume: f64,
    faces: Vec<BoundaryFace>,
}

impl Grid {
    pub fn new(cells: &[usize], extent: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if !(1..=3).contains(&dim) || extent.len() != dim {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!(
                    "need 1 to 3 axes with matching extents, got {} cell counts and {} extents",
                    dim,
                    extent.len()
                ),
            });
        }
        if cells.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "grid.cells",
                reason: "cell counts must be positive".into(),
            });
        }
        if extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "grid.extent",
                reason: "extents must be positive".into(),
            });
        }
        let spacing: Vec<f64> = extent.iter().zip(cells).map(|(e, &n)| e / n as f64).collect();
        let cell_volume = spacing.iter().product();
        let mut grid = Self {
            cells: cells.to_vec(),
            spacing,
            cell_volume,
            faces: Vec::new(),
        };
        grid.faces = grid.enumerate_faces();
        Ok(grid)
    }

    /// Uniform 1D grid on `(0, length)`.
    pub fn line(cells: usize, length: f64) -> Result<Self> {
        Self::new(&[cells], &[length])
    }

    fn enumerate_faces(&self) -> Vec<BoundaryFace> {
        let mut faces = Vec::new();
        for axis in 0..self.dim() {
            let area = self.face_area(axis);
            for side in [Side::Low, Side::High] {
                let fixed = match side {
                    Side::Low => 0,
                    Side::High => self.cells[axis] - 1,
                };
                for cell in 0..self.len() {
                    if self.coord(cell, axis) == fixed {
                        faces.push(BoundaryFace {
                            cell,
                            axis,
                            side,
                            area,
                        });
                    }
                }
            }
        }
        faces
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total volume `|Omega|`.
    pub fn volume(&self) -> f64 {
        self.cell_volume * self.len() as f64
    }

    pub fn face_area(&self, axis: usize) -> f64 {
        (0..self.dim()).filter(|&a| a != axis).map(|a| self.spacing[a]).product()
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    pub fn surface_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }

    fn stride(&self, axis: usize) -> usize {
        self.cells[..axis].iter().product()
    }

    /// Integer coordinate of `cell` along `axis`.
    pub fn coord(&self, cell: usize, axis: usize) -> usize {
        (cell / self.stride(axis)) % self.cells[axis]
    }

    /// Cell-center coordinates.
    pub fn center(&self, cell: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| (self.coord(cell, a) as f64 + 0.5) * self.spacing[a])
            .collect()
    }

    /// Interior faces as `(lower cell, upper cell, axis)`.
    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.dim()).flat_map(move |axis| {
            let stride = self.stride(axis);
            (0..self.len())
                .filter(move |&cell| self.coord(cell, axis) + 1 < self.cells[axis])
                .map(move |cell| (cell, cell + stride, axis))
        })
    }
}

/// One real value per cell of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value in cell {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cellwise map into a field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `||f||_{L²}` with the midpoint rule.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }
}

impl Index<usize> for Field {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Heat-transfer data on the boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinData {
    /// Coefficient per boundary face, in [`Grid::boundary_faces`] order.
    pub h: Vec<f64>,
    /// Exterior temperature per boundary face. Runs use one constant value;
    /// manufactured-solution checks need per-face values.
    pub exterior: Vec<f64>,
}

impl RobinData {
    pub fn uniform(grid: &Grid, h: f64, theta_gamma: f64) -> Self {
        let n = grid.boundary_faces().len();
        Self {
            h: vec![h; n],
            exterior: vec![theta_gamma; n],
        }
    }

    /// Expand per-side (`2 * dim`) or per-face coefficients.
    pub fn from_values(grid: &Grid, values: &[f64], theta_gamma: f64) -> Result<Self> {
        let faces = grid.boundary_faces();
        let h = if values.len() == 1 {
            vec![values[0]; faces.len()]
        } else if values.len() == 2 * grid.dim() {
            faces
                .iter()
                .map(|f| values[2 * f.axis + usize::from(f.side == Side::High)])
                .collect()
        } else if values.len() == faces.len() {
            values.to_vec()
        } else {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!(
                    "expected 1, {} (per side) or {} (per face) values, got {}",
                    2 * grid.dim(),
                    faces.len(),
                    values.len()
                ),
            });
        };
        Ok(Self {
            h,
            exterior: vec![theta_gamma; faces.len()],
        })
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        let n = grid.boundary_faces().len();
        if self.h.len() != n || self.exterior.len() != n {
            return Err(Error::GridMismatch);
        }
        if self.h.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: "heat-transfer coefficients must be nonnegative".into(),
            });
        }
        Ok(())
    }

    /// Heat flowing into the domain, `sum h (theta_ext - theta) area`, W.
    pub fn inflow(&self, grid: &Grid, theta: &Field) -> f64 {
        let per_face: Vec<f64> = grid
            .boundary_faces()
            .iter()
            .zip(self.h.iter().zip(&self.exterior))
            .map(|(f, (h, ext))| h * (ext - theta[f.cell]))
            .collect();
        boundary_integrate(&per_face, grid)
    }
}

/// Midpoint-rule integral `sum f_i * cell_volume`.
pub fn integrate(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}

/// Integral of per-face values over the container wall.
pub fn boundary_integrate(g: &[f64], grid: &Grid) -> f64 {
    debug_assert_eq!(g.len(), grid.boundary_faces().len());
    grid.boundary_faces().iter().zip(g).map(|(f, v)| f.area * v).sum()
}

/// Backward-Euler finite-volume step of `c theta_t - kappa Δtheta = source`
/// with the implicit Robin flux `-kappa ∇theta·n = h (theta - theta_ext)`.
pub fn diffusion_solve(
    theta_old: &Field,
    source: &Field,
    dt: f64,
    c: f64,
    kappa: f64,
    robin: &RobinData,
) -> Result<Field> {
    diffusion_solve_with_sink(theta_old, source, None, dt, c, kappa, robin)
}

/// As [`diffusion_solve`], with an extra implicit term `sink * theta_new`
/// on the left-hand side. `sink` must be nonnegative so the system stays an
/// M-matrix.
pub fn diffusion_solve_with_sink(
    theta_old: &Field,
    source: &Field,
    sink: Option<&Field>,
    dt: f64,
    c: f64,
    kappa: f64,
    robin: &RobinData,
) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    if !theta_old.same_grid(source) || sink.is_some_and(|s| !theta_old.same_grid(s)) {
        return Err(Error::GridMismatch);
    }
    let grid = theta_old.grid().clone();
    robin.check(&grid)?;
    let n = grid.len();
    let vol = grid.cell_volume();
    let mass = c * vol / dt;

    let mut diag = vec![mass; n];
    let mut rhs: Vec<f64> = (0..n).map(|i| mass * theta_old[i] + vol * source[i]).collect();
    if let Some(sink) = sink {
        for i in 0..n {
            debug_assert!(sink[i] >= 0.0);
            diag[i] += vol * sink[i];
        }
    }
    for (face, (h, ext)) in grid.boundary_faces().iter().zip(robin.h.iter().zip(&robin.exterior)) {
        diag[face.cell] += h * face.area;
        rhs[face.cell] += h * face.area * ext;
    }
    let transmissibility: Vec<f64> = (0..grid.dim())
        .map(|a| kappa * grid.face_area(a) / grid.spacing()[a])
        .collect();
    for (lo, hi, axis) in grid.interior_faces() {
        diag[lo] += transmissibility[axis];
        diag[hi] += transmissibility[axis];
    }

    let values = if grid.dim() == 1 {
        let t = transmissibility[0];
        let off = vec![-t; n];
        linalg::solve_tridiagonal(&off, &diag, &off, &rhs)
    } else {
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = diag[i] * x[i];
            }
            for (lo, hi, axis) in grid.interior_faces() {
                let t = transmissibility[axis];
                y[lo] -= t * x[hi];
                y[hi] -= t * x[lo];
            }
        };
        linalg::pcg(apply, &diag, &rhs, theta_old.values(), SOLVER_TOL, 10 * n)?
    };
    Field::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_measures() {
        let g = Grid::new(&[4, 3, 2], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.len(), 24);
        assert!((g.volume() - 1.0).abs() < 1e-14);
        assert!((g.surface_area() - 6.0).abs() < 1e-14);
        assert_eq!(g.boundary_faces().len(), 2 * (3 * 2 + 4 * 2 + 4 * 3));
        let line = Grid::line(10, 2.0).unwrap();
        assert_eq!(line.boundary_faces().len(), 2);
        assert_eq!(line.surface_area(), 2.0);
        assert!((line.volume() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn interior_cells_have_two_dim_neighbors() {
        let g = Grid::new(&[4, 5, 3], &[1.0, 2.0, 3.0]).unwrap();
        let mut neighbors = vec![0usize; g.len()];
        for (lo, hi, _) in g.interior_faces() {
            neighbors[lo] += 1;
            neighbors[hi] += 1;
        }
        let mut walls = vec![0usize; g.len()];
        for f in g.boundary_faces() {
            walls[f.cell] += 1;
        }
        for i in 0..g.len() {
            assert_eq!(neighbors[i] + walls[i], 6);
        }
    }

    #[test]
    fn integrate_examples() {
        let g = Arc::new(Grid::line(7, 2.0).unwrap());
        assert!((integrate(&Field::constant(g, 1.0)) - 2.0).abs() < 1e-14);
        let g = Arc::new(Grid::line(100, 1.0).unwrap());
        let x = Field::from_fn(g.clone(), |p| p[0]);
        assert!((integrate(&x) - 0.5).abs() < 1e-4);
        let y = Field::from_fn(g.clone(), |p| (3.0 * p[0]).sin());
        let combo = Field::new(
            g.clone(),
            x.values().iter().zip(y.values()).map(|(a, b)| 2.0 * a - 3.0 * b).collect(),
        )
        .unwrap();
        let lhs = integrate(&combo);
        let rhs = 2.0 * integrate(&x) - 3.0 * integrate(&y);
        assert!((lhs - rhs).abs() <= 1e-15 * lhs.abs().max(1.0));
    }

    #[test]
    fn boundary_integrate_examples() {
        let cube = Grid::new(&[3, 3, 3], &[1.0, 1.0, 1.0]).unwrap();
        let ones = vec![1.0; cube.boundary_faces().len()];
        assert!((boundary_integrate(&ones, &cube) - 6.0).abs() < 1e-14);
        let line = Grid::line(5, 1.0).unwrap();
        assert_eq!(boundary_integrate(&[1.0, 1.0], &line), 2.0);
        let g = Grid::new(&[2, 5], &[1.0, 3.0]).unwrap();
        let c = vec![2.5; g.boundary_faces().len()];
        assert!((boundary_integrate(&c, &g) - 2.5 * 8.0).abs() < 1e-13);
    }

    #[test]
    fn robin_per_side_expansion() {
        let g = Grid::new(&[2, 3], &[1.0, 1.0]).unwrap();
        let r = RobinData::from_values(&g, &[1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        for (f, h) in g.boundary_faces().iter().zip(&r.h) {
            assert_eq!(*h, (2 * f.axis + usize::from(f.side == Side::High) + 1) as f64);
        }
        assert!(RobinData::from_values(&g, &[1.0, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    fn steady_state_is_preserved() {
        for g in [Grid::line(16, 1.0).unwrap(), Grid::new(&[5, 4, 3], &[1.0, 0.5, 2.0]).unwrap()] {
            let g = Arc::new(g);
            let robin = RobinData::uniform(&g, 3.0, 0.7);
            let theta = Field::constant(g.clone(), 0.7);
            let zero = Field::constant(g.clone(), 0.0);
            let next = diffusion_solve(&theta, &zero, 0.1, 1.0, 2.0, &robin).unwrap();
            for v in next.values() {
                assert!((v - 0.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = Arc::new(Grid::line(4, 1.0).unwrap());
        let other = Arc::new(Grid::line(5, 1.0).unwrap());
        let robin = RobinData::uniform(&g, 1.0, 1.0);
        let a = Field::constant(g.clone(), 1.0);
        let b = Field::constant(other, 0.0);
        assert_eq!(diffusion_solve(&a, &b, 0.1, 1.0, 1.0, &robin), Err(Error::GridMismatch));
        assert!(diffusion_solve(&a, &a, 0.0, 1.0, 1.0, &robin).is_err());
        assert!(Field::new(g.clone(), vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Grid::new(&[0], &[1.0]).is_err());
        assert!(Grid::new(&[1, 1, 1, 1], &[1.0; 4]).is_err());
    }
}
