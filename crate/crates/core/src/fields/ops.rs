//! Discrete vector calculus on the MAC grid.
//!
//! Cell-centred gradients use centred differences (one-sided second order at
//! box walls). The face gradient [`face_gradient`] and the face-to-cell
//! [`divergence`] are exact negative adjoints of each other, which is what the
//! projection relies on.

use super::field::{dot, sub, DirectorField, ScalarField, Vec3, Vec3Field, VectorField};
use super::grid::{Grid, Neighbor};
use crate::error::Result;

/// Ghost closure for scalar Laplacians on box grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarClosure {
    /// Ghost copies the adjacent interior value (zero normal derivative).
    Neumann,
    /// Ghost holds a fixed value.
    Dirichlet(f64),
}

/// Centred derivative of `vals` along `axis` at every cell.
pub(crate) fn derivative(grid: &Grid, vals: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    let s = grid.stride(axis);
    let inv2h = 0.5 / h;
    let mut out = vec![0.0; vals.len()];
    for (c, o) in out.iter_mut().enumerate() {
        *o = match (grid.neighbor(c, axis, false), grid.neighbor(c, axis, true)) {
            (Neighbor::Cell(m), Neighbor::Cell(p)) => (vals[p] - vals[m]) * inv2h,
            (Neighbor::Ghost, _) => (-3.0 * vals[c] + 4.0 * vals[c + s] - vals[c + 2 * s]) * inv2h,
            (_, Neighbor::Ghost) => (3.0 * vals[c] - 4.0 * vals[c - s] + vals[c - 2 * s]) * inv2h,
        };
    }
    out
}

/// Cell-centred gradient, one [`ScalarField`] per axis.
pub fn gradient(f: &ScalarField) -> Result<Vec<ScalarField>> {
    f.ensure_finite("gradient input")?;
    let g = f.grid;
    Ok((0..g.dim())
        .map(|a| ScalarField {
            grid: g,
            values: derivative(&g, &f.values, a),
        })
        .collect())
}

/// Cell-centred gradient of every director component: `out[axis][cell]`.
pub fn vec3_gradient(grid: &Grid, values: &[Vec3]) -> Vec<Vec<Vec3>> {
    let mut out = vec![vec![[0.0; 3]; values.len()]; grid.dim()];
    for k in 0..3 {
        let comp: Vec<f64> = values.iter().map(|v| v[k]).collect();
        for (a, o) in out.iter_mut().enumerate() {
            for (c, dv) in derivative(grid, &comp, a).into_iter().enumerate() {
                o[c][k] = dv;
            }
        }
    }
    out
}

pub fn director_gradient(d: &DirectorField) -> Result<Vec<Vec<Vec3>>> {
    d.ensure_finite("gradient input")?;
    Ok(vec3_gradient(&d.grid, &d.values))
}

/// Cell-to-face gradient; wall faces of box grids get zero (Neumann).
pub fn face_gradient(p: &ScalarField) -> Result<VectorField> {
    p.ensure_finite("face gradient input")?;
    Ok(face_gradient_values(&p.grid, &p.values))
}

pub(crate) fn face_gradient_values(g: &Grid, p: &[f64]) -> VectorField {
    let mut out = VectorField::zeros(g);
    for a in 0..g.dim() {
        let inv_h = 1.0 / g.spacing()[a];
        for ijk in g.face_indices(a) {
            if let (Neighbor::Cell(lo), Neighbor::Cell(hi)) = g.face_cells(a, ijk) {
                out.comps[a][g.face_index(a, ijk)] = (p[hi] - p[lo]) * inv_h;
            }
        }
    }
    out
}

/// Face-to-cell divergence.
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let g = v.grid;
    for (a, c) in v.comps.iter().enumerate() {
        if c.len() != g.face_len(a) {
            return Err(crate::Error::Shape(format!(
                "velocity component {a} has {} entries, expected {}",
                c.len(),
                g.face_len(a)
            )));
        }
    }
    let mut out = vec![0.0; g.num_cells()];
    divergence_into(v, &mut out);
    Ok(ScalarField { grid: g, values: out })
}

pub(crate) fn divergence_into(v: &VectorField, out: &mut [f64]) {
    let g = v.grid;
    for ijk in g.cell_indices() {
        let c = g.index(ijk);
        let mut s = 0.0;
        for a in 0..g.dim() {
            s += (v.comps[a][g.high_face(a, ijk)] - v.comps[a][g.low_face(a, ijk)]) / g.spacing()[a];
        }
        out[c] = s;
    }
}

/// Standard `2*dim+1` point Laplacian of a scalar.
pub fn laplacian(f: &ScalarField, closure: ScalarClosure) -> Result<ScalarField> {
    f.ensure_finite("laplacian input")?;
    let g = f.grid;
    let mut out = vec![0.0; g.num_cells()];
    for (c, o) in out.iter_mut().enumerate() {
        let fc = f.values[c];
        let mut s = 0.0;
        for a in 0..g.dim() {
            let h2 = g.spacing()[a] * g.spacing()[a];
            for plus in [false, true] {
                let fn_ = match g.neighbor(c, a, plus) {
                    Neighbor::Cell(n) => f.values[n],
                    Neighbor::Ghost => match closure {
                        ScalarClosure::Neumann => fc,
                        ScalarClosure::Dirichlet(v) => v,
                    },
                };
                s += (fn_ - fc) / h2;
            }
        }
        *o = s;
    }
    Ok(ScalarField { grid: g, values: out })
}

/// Laplacian of each director component, ghosts holding the boundary director.
pub fn director_laplacian(d: &DirectorField) -> Result<Vec3Field> {
    d.ensure_finite("laplacian input")?;
    Ok(Vec3Field {
        grid: d.grid,
        values: vec3_laplacian(&d.grid, &d.values, d.boundary),
    })
}

pub(crate) fn vec3_laplacian(g: &Grid, values: &[Vec3], ghost: Vec3) -> Vec<Vec3> {
    let mut out = vec![[0.0; 3]; values.len()];
    for (c, o) in out.iter_mut().enumerate() {
        let dc = values[c];
        let mut s = [0.0; 3];
        for a in 0..g.dim() {
            let inv_h2 = 1.0 / (g.spacing()[a] * g.spacing()[a]);
            for plus in [false, true] {
                let dn = match g.neighbor(c, a, plus) {
                    Neighbor::Cell(n) => values[n],
                    Neighbor::Ghost => ghost,
                };
                for k in 0..3 {
                    s[k] += (dn[k] - dc[k]) * inv_h2;
                }
            }
        }
        *o = s;
    }
    out
}

/// Compact squared director gradient `½ Σ_faces |d_nb - d|² / h²` per cell.
///
/// For unit vectors this satisfies `Δd·d = -|∇d|²` exactly, so the tension
/// `Δd + |∇d|² d` is tangent to the sphere.
pub fn compact_gradient_sq(d: &DirectorField) -> Vec<f64> {
    let g = d.grid;
    let mut out = vec![0.0; g.num_cells()];
    for (c, o) in out.iter_mut().enumerate() {
        let dc = d.values[c];
        let mut s = 0.0;
        for a in 0..g.dim() {
            let inv_h2 = 1.0 / (g.spacing()[a] * g.spacing()[a]);
            for plus in [false, true] {
                let diff = sub(&d.neighbor_value(c, a, plus), &dc);
                s += dot(&diff, &diff) * inv_h2;
            }
        }
        *o = 0.5 * s;
    }
    out
}

/// Harmonic-map tension `Δd + |∇d|² d` with the compact gradient density.
pub fn tension(d: &DirectorField) -> Result<Vec3Field> {
    let lap = director_laplacian(d)?;
    let gsq = compact_gradient_sq(d);
    let values = lap
        .values
        .iter()
        .zip(&d.values)
        .zip(&gsq)
        .map(|((l, dv), s)| [l[0] + s * dv[0], l[1] + s * dv[1], l[2] + s * dv[2]])
        .collect();
    Ok(Vec3Field { grid: d.grid, values })
}

/// Neighbour of MAC face `ijk` (component `a`) along axis `b`.
/// `None` means the neighbour is a ghost outside a box grid.
#[inline]
pub(crate) fn face_shift(g: &Grid, a: usize, ijk: [usize; 3], b: usize, plus: bool) -> Option<[usize; 3]> {
    let n = g.face_shape(a)[b];
    let mut out = ijk;
    if plus {
        if ijk[b] + 1 < n {
            out[b] += 1;
        } else if g.is_periodic() {
            out[b] = 0;
        } else {
            return None;
        }
    } else if ijk[b] > 0 {
        out[b] -= 1;
    } else if g.is_periodic() {
        out[b] = n - 1;
    } else {
        return None;
    }
    Some(out)
}

/// Vector Laplacian of a MAC velocity with no-slip ghosts (antisymmetric
/// about the wall). Wall faces are left at zero.
pub fn velocity_laplacian(u: &VectorField) -> Result<VectorField> {
    u.ensure_finite("velocity laplacian input")?;
    let g = u.grid;
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim() {
        let comp = &u.comps[a];
        for ijk in g.face_indices(a) {
            if g.is_wall_face(a, ijk) {
                continue;
            }
            let f = g.face_index(a, ijk);
            let uf = comp[f];
            let mut s = 0.0;
            for b in 0..g.dim() {
                let inv_h2 = 1.0 / (g.spacing()[b] * g.spacing()[b]);
                for plus in [false, true] {
                    let un = match face_shift(&g, a, ijk, b, plus) {
                        Some(n) => comp[g.face_index(a, n)],
                        None => -uf,
                    };
                    s += (un - uf) * inv_h2;
                }
            }
            out.comps[a][f] = s;
        }
    }
    Ok(out)
}

/// `‖∇u‖₂²` as the discrete Dirichlet form of [`velocity_laplacian`], so
/// that `⟨-Δu, u⟩ = ‖∇u‖₂²` holds exactly.
pub fn velocity_dirichlet(u: &VectorField) -> f64 {
    let g = u.grid;
    let mut total = 0.0;
    for a in 0..g.dim() {
        let comp = &u.comps[a];
        for ijk in g.face_indices(a) {
            let f = g.face_index(a, ijk);
            for b in 0..g.dim() {
                let inv_h2 = 1.0 / (g.spacing()[b] * g.spacing()[b]);
                match face_shift(&g, a, ijk, b, true) {
                    Some(n) => {
                        let d = comp[g.face_index(a, n)] - comp[f];
                        total += d * d * inv_h2;
                    }
                    None if b != a => {
                        // wall edge: ghost is -u, half weight
                        total += 2.0 * comp[f] * comp[f] * inv_h2;
                    }
                    None => {}
                }
                if b != a && !g.is_periodic() && ijk[b] == 0 {
                    total += 2.0 * comp[f] * comp[f] * inv_h2;
                }
            }
        }
    }
    total * g.cell_volume()
}

/// Face-based `‖∇d‖₂²`, including the faces shared with boundary ghosts.
/// Its negative gradient with respect to `d` is `2·Δd·cellVolume`.
pub fn director_dirichlet(d: &DirectorField) -> f64 {
    vec3_dirichlet(&d.grid, &d.values, d.boundary)
}

/// `‖∇(d₁ − d₂)‖₂²` with the face stencil of [`director_dirichlet`]; both
/// fields must share the boundary director, so the difference vanishes on
/// ghosts.
pub(crate) fn vec3_dirichlet_diff(d1: &DirectorField, d2: &DirectorField) -> Result<f64> {
    d1.grid.check_same(&d2.grid, "director difference")?;
    let diff: Vec<Vec3> = d1.values.iter().zip(&d2.values).map(|(a, b)| sub(a, b)).collect();
    Ok(vec3_dirichlet(&d1.grid, &diff, sub(&d1.boundary, &d2.boundary)))
}

pub(crate) fn vec3_dirichlet(g: &Grid, values: &[Vec3], ghost: Vec3) -> f64 {
    let mut total = 0.0;
    for (c, dc) in values.iter().enumerate() {
        for a in 0..g.dim() {
            let inv_h2 = 1.0 / (g.spacing()[a] * g.spacing()[a]);
            match g.neighbor(c, a, true) {
                Neighbor::Cell(n) => {
                    let diff = sub(&values[n], dc);
                    total += dot(&diff, &diff) * inv_h2;
                }
                Neighbor::Ghost => {
                    let diff = sub(&ghost, dc);
                    total += dot(&diff, &diff) * inv_h2;
                }
            }
            if let Neighbor::Ghost = g.neighbor(c, a, false) {
                let diff = sub(&ghost, dc);
                total += dot(&diff, &diff) * inv_h2;
            }
        }
    }
    total * g.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> Grid {
        Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic).unwrap()
    }

    #[test]
    fn constant_has_zero_gradient_and_laplacian() {
        for b in [Boundary::Periodic, Boundary::DirichletBox] {
            let g = Grid::uniform(2, 8, 1.0, b).unwrap();
            let f = ScalarField::constant(&g, 3.5);
            for comp in gradient(&f).unwrap() {
                assert!(comp.max_abs() == 0.0);
            }
            assert_eq!(laplacian(&f, ScalarClosure::Neumann).unwrap().max_abs(), 0.0);
            let d = DirectorField::constant(&g, [0.0, 0.6, 0.8]);
            assert!(director_laplacian(&d)
                .unwrap()
                .values
                .iter()
                .all(|v| *v == [0.0; 3]));
            assert_eq!(director_dirichlet(&d), 0.0);
        }
    }

    #[test]
    fn linear_field_seam() {
        let g = periodic(16);
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let gx = &gradient(&f).unwrap()[0];
        for ijk in g.cell_indices() {
            let v = gx.values[g.index(ijk)];
            if ijk[0] == 0 || ijk[0] == 15 {
                assert!(v < 0.0, "seam cells carry the wrap jump");
            } else {
                assert!((v - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn box_gradient_is_second_order_at_walls() {
        let g = Grid::uniform(2, 10, 1.0, Boundary::DirichletBox).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] * x[0] + 2.0 * x[1]);
        let gr = gradient(&f).unwrap();
        for ijk in g.cell_indices() {
            let x = g.center(ijk);
            let c = g.index(ijk);
            assert!((gr[0].values[c] - 2.0 * x[0]).abs() < 1e-12);
            assert!((gr[1].values[c] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nonfinite_input_rejected() {
        let g = periodic(8);
        let mut f = ScalarField::zeros(&g);
        f.values[3] = f64::NAN;
        assert!(matches!(gradient(&f), Err(crate::Error::NonFinite { .. })));
        assert!(laplacian(&f, ScalarClosure::Neumann).is_err());
    }

    #[test]
    fn divergence_of_uniform_is_zero() {
        for b in [Boundary::Periodic, Boundary::DirichletBox] {
            let g = Grid::uniform(3, 5, 1.0, b).unwrap();
            let mut v = VectorField::zeros(&g);
            v.comps.iter_mut().flatten().for_each(|x| *x = 0.7);
            if b == Boundary::Periodic {
                assert!(divergence(&v).unwrap().max_abs() < 1e-13);
            } else {
                // uniform interior with zero walls: only wall cells see a jump
                v.zero_walls();
                let dv = divergence(&v).unwrap();
                let inner = g.index([2, 2, 2]);
                assert_eq!(dv.values[inner], 0.0);
            }
        }
    }

    #[test]
    fn divergence_rejects_mismatched_shapes() {
        let g = periodic(8);
        let v = VectorField {
            grid: g,
            comps: vec![vec![0.0; 64], vec![0.0; 63]],
        };
        assert!(matches!(divergence(&v), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn compact_identity_holds_exactly() {
        let g = periodic(12);
        let d = DirectorField::from_fn_normalized(&g, [0.0, 0.0, 1.0], |x| {
            [x[0].cos() + 0.3 * x[1].sin(), x[0].sin(), 0.4 + 0.2 * x[1].cos()]
        });
        let lap = director_laplacian(&d).unwrap();
        let gsq = compact_gradient_sq(&d);
        for c in 0..g.num_cells() {
            let r = dot(&lap.values[c], &d.values[c]) + gsq[c];
            assert!(r.abs() < 1e-12 * (1.0 + gsq[c]));
        }
    }

    #[test]
    fn velocity_dirichlet_matches_laplacian_pairing() {
        for b in [Boundary::Periodic, Boundary::DirichletBox] {
            let g = Grid::new(2, &[7, 6], &[1.0, 1.3], b).unwrap();
            let mut u = VectorField::from_fn(&g, |x| {
                [(3.0 * x[0]).sin() * x[1].cos(), (2.0 * x[1] + x[0]).cos(), 0.0]
            });
            u.zero_walls();
            let lap = velocity_laplacian(&u).unwrap();
            let pairing: f64 = lap
                .comps
                .iter()
                .zip(&u.comps)
                .flat_map(|(l, v)| l.iter().zip(v).map(|(a, b)| -a * b))
                .sum::<f64>()
                * g.cell_volume();
            let form = velocity_dirichlet(&u);
            assert!((pairing - form).abs() < 1e-11 * form, "{b:?}: {pairing} vs {form}");
        }
    }

    #[test]
    fn director_dirichlet_gradient_is_laplacian() {
        // directional derivative of ‖∇d‖² along w equals -2⟨Δd, w⟩·vol
        let g = Grid::uniform(2, 6, 1.0, Boundary::DirichletBox).unwrap();
        let d = DirectorField::from_fn_normalized(&g, [0.0, 0.0, 1.0], |x| {
            [x[0] - 0.5, x[1] * 0.3, 1.0]
        });
        let lap = director_laplacian(&d).unwrap();
        let w: Vec<Vec3> = (0..g.num_cells())
            .map(|c| [(c as f64).sin(), (c as f64 * 0.7).cos(), 0.1])
            .collect();
        let eps = 1e-6;
        let shifted = |s: f64| {
            let vals: Vec<Vec3> = d
                .values
                .iter()
                .zip(&w)
                .map(|(a, b)| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]])
                .collect();
            vec3_dirichlet(&g, &vals, d.boundary)
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let exact: f64 = -2.0
            * lap
                .values
                .iter()
                .zip(&w)
                .map(|(l, v)| dot(l, v))
                .sum::<f64>()
            * g.cell_volume();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0));
    }
}
