use super::grid::Grid;
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn check_finite(values: impl IntoIterator<Item = f64>, field: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            field: field.to_string(),
        })
    }
}

/// Cell-centred scalar (density, pressure).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: *grid,
            values: vec![c; grid.num_cells()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::Shape(format!(
                "scalar field needs {} values, got {}",
                grid.num_cells(),
                values.len()
            )));
        }
        Ok(Self {
            grid: *grid,
            values,
        })
    }

    /// Sample `f` at cell centres.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = grid.cell_indices().map(|ijk| f(grid.center(ijk))).collect();
        Self {
            grid: *grid,
            values,
        }
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        check_finite(self.values.iter().copied(), name)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Compensated sum of the values times the cell volume.
    pub fn integral(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }
}

/// Neumaier-compensated summation in a fixed order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Face-normal velocity on a MAC grid; component `a` lives on the faces
/// normal to axis `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let comps = (0..grid.dim()).map(|a| vec![0.0; grid.face_len(a)]).collect();
        Self { grid: *grid, comps }
    }

    pub fn from_components(grid: &Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(Error::Shape(format!(
                "expected {} velocity components, got {}",
                grid.dim(),
                comps.len()
            )));
        }
        for (a, c) in comps.iter().enumerate() {
            if c.len() != grid.face_len(a) {
                return Err(Error::Shape(format!(
                    "component {a} needs {} face values, got {}",
                    grid.face_len(a),
                    c.len()
                )));
            }
        }
        Ok(Self { grid: *grid, comps })
    }

    /// Sample the `a`-th entry of `f` at the faces normal to axis `a`.
    /// Wall faces of box grids are set to zero.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut v = Self::zeros(grid);
        for a in 0..grid.dim() {
            for ijk in grid.face_indices(a) {
                if grid.is_wall_face(a, ijk) {
                    continue;
                }
                let idx = grid.face_index(a, ijk);
                v.comps[a][idx] = f(grid.face_position(a, ijk))[a];
            }
        }
        v
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        check_finite(self.comps.iter().flatten().copied(), name)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn max_abs_component(&self, axis: usize) -> f64 {
        self.comps[axis].iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Average each component to cell centres.
    pub fn to_centers(&self) -> Vec<Vec3> {
        let g = &self.grid;
        let mut out = vec![[0.0; 3]; g.num_cells()];
        for ijk in g.cell_indices() {
            let c = g.index(ijk);
            for a in 0..g.dim() {
                let lo = self.comps[a][g.low_face(a, ijk)];
                let hi = self.comps[a][g.high_face(a, ijk)];
                out[c][a] = 0.5 * (lo + hi);
            }
        }
        out
    }

    /// Force the wall faces of a box grid to exactly zero.
    pub fn zero_walls(&mut self) {
        let g = self.grid;
        if g.is_periodic() {
            return;
        }
        for a in 0..g.dim() {
            for ijk in g.face_indices(a) {
                if g.is_wall_face(a, ijk) {
                    let idx = g.face_index(a, ijk);
                    self.comps[a][idx] = 0.0;
                }
            }
        }
    }

    /// Largest absolute value on wall faces (0 on periodic grids).
    pub fn max_wall_value(&self) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        if g.is_periodic() {
            return m;
        }
        for a in 0..g.dim() {
            for ijk in g.face_indices(a) {
                if g.is_wall_face(a, ijk) {
                    m = m.max(self.comps[a][g.face_index(a, ijk)].abs());
                }
            }
        }
        m
    }

    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in c.iter_mut().zip(o) {
                *x += alpha * y;
            }
        }
    }
}

/// Cell-centred 3-vectors without a length constraint (Laplacians,
/// tensions, director increments).
#[derive(Debug, Clone, PartialEq)]
pub struct Vec3Field {
    pub grid: Grid,
    pub values: Vec<Vec3>,
}

impl Vec3Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            values: vec![[0.0; 3]; grid.num_cells()],
        }
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        check_finite(self.values.iter().flatten().copied(), name)
    }
}

/// Cell-centred unit director field.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    pub grid: Grid,
    pub values: Vec<Vec3>,
    /// Value held by the (virtual) ghost cells of box grids.
    pub boundary: Vec3,
}

impl DirectorField {
    pub fn constant(grid: &Grid, d: Vec3) -> Self {
        Self {
            grid: *grid,
            values: vec![d; grid.num_cells()],
            boundary: d,
        }
    }

    /// Build from raw values; the caller is responsible for unit length, see
    /// [`DirectorField::max_unit_violation`].
    pub fn from_values(grid: &Grid, values: Vec<Vec3>, boundary: Vec3) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::Shape(format!(
                "director field needs {} values, got {}",
                grid.num_cells(),
                values.len()
            )));
        }
        Ok(Self {
            grid: *grid,
            values,
            boundary,
        })
    }

    /// Sample `f` at cell centres and normalise each vector.
    pub fn from_fn_normalized(grid: &Grid, boundary: Vec3, f: impl Fn([f64; 3]) -> Vec3) -> Self {
        let values = grid
            .cell_indices()
            .map(|ijk| {
                let v = f(grid.center(ijk));
                let n = norm(&v);
                [v[0] / n, v[1] / n, v[2] / n]
            })
            .collect();
        Self {
            grid: *grid,
            values,
            boundary,
        }
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        check_finite(self.values.iter().flatten().copied(), name)
    }

    pub fn max_unit_violation(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |m, v| m.max((norm(v) - 1.0).abs()))
    }

    pub fn ensure_unit(&self, tol: f64) -> Result<()> {
        let violation = self.max_unit_violation();
        if violation.is_nan() {
            return Err(Error::NonFinite {
                field: "d".into(),
            });
        }
        if violation > tol {
            return Err(Error::Constraint { violation, tol });
        }
        Ok(())
    }

    /// Value of the neighbour of `idx` along `axis`, resolving ghosts.
    #[inline]
    pub fn neighbor_value(&self, idx: usize, axis: usize, plus: bool) -> Vec3 {
        match self.grid.neighbor(idx, axis, plus) {
            super::grid::Neighbor::Cell(n) => self.values[n],
            super::grid::Neighbor::Ghost => self.boundary,
        }
    }

    /// One scalar component as a [`ScalarField`].
    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v[k]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;

    #[test]
    fn neumaier_beats_naive_sum() {
        let vals = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(vals), 2.0);
    }

    #[test]
    fn shape_errors() {
        let g = Grid::uniform(2, 4, 1.0, Boundary::Periodic).unwrap();
        assert!(ScalarField::from_values(&g, vec![0.0; 3]).is_err());
        assert!(VectorField::from_components(&g, vec![vec![0.0; 16]]).is_err());
        assert!(VectorField::from_components(&g, vec![vec![0.0; 16], vec![0.0; 16]]).is_ok());
        let b = Grid::uniform(2, 4, 1.0, Boundary::DirichletBox).unwrap();
        assert!(VectorField::from_components(&b, vec![vec![0.0; 16], vec![0.0; 16]]).is_err());
        assert!(VectorField::from_components(&b, vec![vec![0.0; 20], vec![0.0; 20]]).is_ok());
    }

    #[test]
    fn from_fn_zeroes_walls() {
        let g = Grid::uniform(2, 6, 1.0, Boundary::DirichletBox).unwrap();
        let v = VectorField::from_fn(&g, |_| [1.0, 2.0, 0.0]);
        assert_eq!(v.max_wall_value(), 0.0);
        assert_eq!(v.max_abs(), 2.0);
    }

    #[test]
    fn unit_violation_detected() {
        let g = Grid::uniform(2, 4, 1.0, Boundary::Periodic).unwrap();
        let mut d = DirectorField::constant(&g, [0.0, 0.0, 1.0]);
        d.values[5] = [0.0, 0.0, 1.1];
        assert!((d.max_unit_violation() - 0.1).abs() < 1e-15);
        assert!(matches!(d.ensure_unit(1e-12), Err(Error::Constraint { .. })));
    }
}
