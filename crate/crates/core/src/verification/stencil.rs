//! Padded cell-centred arrays with plain centred differences.
//!
//! Deliberately separate from `fields::ops`: the oracles built on it must not
//! share differencing code with the solver kernels they check.

use crate::fields::Grid;

/// How a box grid fills ghost layers. Periodic grids always wrap.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Ghost {
    /// Mirror copy (zero normal derivative).
    Even,
    /// Negated mirror (zero value on the wall).
    Odd,
    Const(f64),
}

/// Cell-centred array with `w` ghost layers on every active axis.
pub(crate) struct Padded {
    n: [usize; 3],
    w: [usize; 3],
    h: [f64; 3],
    dim: usize,
    data: Vec<f64>,
}

impl Padded {
    pub(crate) fn new(grid: &Grid, values: &[f64], width: usize, ghost: Ghost) -> Self {
        let dim = grid.dim();
        let n = grid.cells();
        let mut w = [0; 3];
        for a in 0..dim {
            w[a] = width;
        }
        let ext = [n[0] + 2 * w[0], n[1] + 2 * w[1], n[2] + 2 * w[2]];
        let mut data = vec![0.0; ext[0] * ext[1] * ext[2]];
        for k in 0..ext[2] {
            for j in 0..ext[1] {
                for i in 0..ext[0] {
                    let p = [i, j, k];
                    let mut src = [0usize; 3];
                    let mut sign = 1.0;
                    let mut fixed = None;
                    for a in 0..3 {
                        let x = p[a] as isize - w[a] as isize;
                        let m = n[a] as isize;
                        src[a] = if (0..m).contains(&x) {
                            x as usize
                        } else if grid.is_periodic() {
                            x.rem_euclid(m) as usize
                        } else {
                            let mirrored = if x < 0 { -1 - x } else { 2 * m - 1 - x };
                            match ghost {
                                Ghost::Even => {}
                                Ghost::Odd => sign = -sign,
                                Ghost::Const(c) => fixed = Some(c),
                            }
                            mirrored as usize
                        };
                    }
                    let idx = (k * ext[1] + j) * ext[0] + i;
                    data[idx] = fixed.unwrap_or_else(|| sign * values[grid.index(src)]);
                }
            }
        }
        Self {
            n,
            w,
            h: grid.spacing(),
            dim,
            data,
        }
    }

    /// Wrap values already laid out on the region of [`cells_with_halo`].
    pub(crate) fn from_halo(grid: &Grid, data: Vec<f64>, width: usize) -> Self {
        let dim = grid.dim();
        let mut w = [0; 3];
        for a in 0..dim {
            w[a] = width;
        }
        Self {
            n: grid.cells(),
            w,
            h: grid.spacing(),
            dim,
            data,
        }
    }

    fn at(&self, p: [isize; 3]) -> f64 {
        let ext = [self.n[0] + 2 * self.w[0], self.n[1] + 2 * self.w[1]];
        let q = [
            (p[0] + self.w[0] as isize) as usize,
            (p[1] + self.w[1] as isize) as usize,
            (p[2] + self.w[2] as isize) as usize,
        ];
        self.data[(q[2] * ext[1] + q[1]) * ext[0] + q[0]]
    }

    fn shift(p: [isize; 3], a: usize, s: isize) -> [isize; 3] {
        let mut q = p;
        q[a] += s;
        q
    }

    /// Centred first derivative along `a` at (possibly ghost) cell `p`.
    pub(crate) fn d1(&self, p: [isize; 3], a: usize) -> f64 {
        (self.at(Self::shift(p, a, 1)) - self.at(Self::shift(p, a, -1))) / (2.0 * self.h[a])
    }

    /// `2·dim + 1` point Laplacian.
    pub(crate) fn lap(&self, p: [isize; 3]) -> f64 {
        let c = self.at(p);
        (0..self.dim)
            .map(|a| {
                (self.at(Self::shift(p, a, 1)) - 2.0 * c + self.at(Self::shift(p, a, -1))) / (self.h[a] * self.h[a])
            })
            .sum()
    }
}

/// Interior cells plus `extra` ghost layers on active axes, in x-fastest order.
pub(crate) fn cells_with_halo(grid: &Grid, extra: isize) -> Vec<[isize; 3]> {
    let n = grid.cells();
    let mut e = [0isize; 3];
    for item in e.iter_mut().take(grid.dim()) {
        *item = extra;
    }
    let mut out = Vec::new();
    for k in -e[2]..n[2] as isize + e[2] {
        for j in -e[1]..n[1] as isize + e[1] {
            for i in -e[0]..n[0] as isize + e[0] {
                out.push([i, j, k]);
            }
        }
    }
    out
}
