use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary treatment of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Indices wrap on every axis.
    Periodic,
    /// Closed box: no-slip walls for the velocity, a fixed director on the
    /// walls and zero normal derivative for scalars. The ghost layer is
    /// virtual: out-of-range neighbours resolve to the closure value.
    DirichletBox,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::DirichletBox => "box",
        }
    }
}

/// Neighbour of a cell across one face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    /// Outside a [`Boundary::DirichletBox`] domain.
    Ghost,
}

/// Uniform structured grid in two or three dimensions.
///
/// Unused trailing axes (axis 2 in 2D) carry one cell of unit length so that
/// every loop can run over three nested indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 3],
    length: [f64; 3],
    spacing: [f64; 3],
    boundary: Boundary,
}

impl Grid {
    pub fn new(dim: usize, cells: &[usize], length: &[f64], boundary: Boundary) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if cells.len() != dim || length.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} cell counts and lengths, got {} and {}",
                cells.len(),
                length.len()
            )));
        }
        let mut c = [1usize; 3];
        let mut l = [1.0f64; 3];
        let mut h = [1.0f64; 3];
        for a in 0..dim {
            if cells[a] < 4 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} cells; at least 4 are required",
                    cells[a]
                )));
            }
            if !(length[a].is_finite() && length[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} length must be positive, got {}",
                    length[a]
                )));
            }
            c[a] = cells[a];
            l[a] = length[a];
            h[a] = length[a] / cells[a] as f64;
        }
        Ok(Self {
            dim,
            cells: c,
            length: l,
            spacing: h,
            boundary,
        })
    }

    /// Same cell count and length on every axis.
    pub fn uniform(dim: usize, n: usize, length: f64, boundary: Boundary) -> Result<Self> {
        Self::new(dim, &vec![n; dim], &vec![length; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn length(&self) -> [f64; 3] {
        self.length
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn num_cells(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing[a]).product()
    }

    pub fn domain_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.length[a]).product()
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing[a])
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.cells[0] * (ijk[1] + self.cells[1] * ijk[2])
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.cells[0];
        let r = idx / self.cells[0];
        [i, r % self.cells[1], r / self.cells[1]]
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.cells[0],
            _ => self.cells[0] * self.cells[1],
        }
    }

    /// Physical position of the centre of cell `ijk`.
    pub fn center(&self, ijk: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (ijk[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }

    /// Neighbour of `idx` along `axis`, in the positive direction when `plus`.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, plus: bool) -> Neighbor {
        let s = self.stride(axis);
        let n = self.cells[axis];
        let c = (idx / s) % n;
        if plus {
            if c + 1 < n {
                Neighbor::Cell(idx + s)
            } else if self.is_periodic() {
                Neighbor::Cell(idx + s - n * s)
            } else {
                Neighbor::Ghost
            }
        } else if c > 0 {
            Neighbor::Cell(idx - s)
        } else if self.is_periodic() {
            Neighbor::Cell(idx + n * s - s)
        } else {
            Neighbor::Ghost
        }
    }

    /// Number of faces along `axis` for the MAC component normal to it.
    pub fn faces_along(&self, axis: usize) -> usize {
        match self.boundary {
            Boundary::Periodic => self.cells[axis],
            Boundary::DirichletBox => self.cells[axis] + 1,
        }
    }

    /// Array shape of MAC component `axis`.
    pub fn face_shape(&self, axis: usize) -> [usize; 3] {
        let mut s = self.cells;
        s[axis] = self.faces_along(axis);
        s
    }

    pub fn face_len(&self, axis: usize) -> usize {
        let s = self.face_shape(axis);
        s[0] * s[1] * s[2]
    }

    #[inline]
    pub fn face_index(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let s = self.face_shape(axis);
        ijk[0] + s[0] * (ijk[1] + s[1] * ijk[2])
    }

    #[inline]
    pub fn face_coords(&self, axis: usize, idx: usize) -> [usize; 3] {
        let s = self.face_shape(axis);
        let i = idx % s[0];
        let r = idx / s[0];
        [i, r % s[1], r / s[1]]
    }

    /// Face of `axis` on the low side of cell `ijk`.
    #[inline]
    pub fn low_face(&self, axis: usize, ijk: [usize; 3]) -> usize {
        self.face_index(axis, ijk)
    }

    /// Face of `axis` on the high side of cell `ijk`.
    #[inline]
    pub fn high_face(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let mut f = ijk;
        f[axis] += 1;
        if f[axis] == self.cells[axis] && self.is_periodic() {
            f[axis] = 0;
        }
        self.face_index(axis, f)
    }

    /// Cells on the low and high side of face `ijk` of `axis`.
    #[inline]
    pub fn face_cells(&self, axis: usize, ijk: [usize; 3]) -> (Neighbor, Neighbor) {
        let n = self.cells[axis];
        let mut lo = ijk;
        let hi = ijk;
        let low = if ijk[axis] == 0 {
            if self.is_periodic() {
                lo[axis] = n - 1;
                Neighbor::Cell(self.index(lo))
            } else {
                Neighbor::Ghost
            }
        } else {
            lo[axis] -= 1;
            Neighbor::Cell(self.index(lo))
        };
        let high = if ijk[axis] >= n {
            Neighbor::Ghost
        } else {
            Neighbor::Cell(self.index(hi))
        };
        (low, high)
    }

    /// True when face `ijk` of `axis` lies on a wall of a box grid.
    #[inline]
    pub fn is_wall_face(&self, axis: usize, ijk: [usize; 3]) -> bool {
        !self.is_periodic() && (ijk[axis] == 0 || ijk[axis] == self.cells[axis])
    }

    /// Position of face `ijk` of `axis`.
    pub fn face_position(&self, axis: usize, ijk: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for b in 0..self.dim {
            x[b] = if b == axis {
                ijk[b] as f64 * self.spacing[b]
            } else {
                (ijk[b] as f64 + 0.5) * self.spacing[b]
            };
        }
        x
    }

    /// Iterate over all cell multi-indices in storage order.
    pub fn cell_indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let c = self.cells;
        (0..c[2]).flat_map(move |k| (0..c[1]).flat_map(move |j| (0..c[0]).map(move |i| [i, j, k])))
    }

    /// Iterate over all face multi-indices of `axis` in storage order.
    pub fn face_indices(&self, axis: usize) -> impl Iterator<Item = [usize; 3]> {
        let s = self.face_shape(axis);
        (0..s[2]).flat_map(move |k| (0..s[1]).flat_map(move |j| (0..s[0]).map(move |i| [i, j, k])))
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!("{what}: fields live on different grids")));
        }
        Ok(())
    }
}
