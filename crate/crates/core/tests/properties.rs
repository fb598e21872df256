//! Randomised structural properties of the discrete operators and steps.

use nematic_core::director::{director_dt_limit, director_step};
use nematic_core::dynamics::pressure_project;
use nematic_core::fields::{divergence, face_gradient, norm, Snapshot};
use nematic_core::transport::{advect_density, advective_dt_limit, total_mass};
use nematic_core::{Boundary, DirectorField, FlowState, Grid, ScalarField, SolverConfig, VectorField};
use proptest::prelude::*;

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Periodic), Just(Boundary::DirichletBox)]
}

fn grid(n: usize, b: Boundary) -> Grid {
    Grid::new(2, &[n, n + 1], &[1.0, 1.3], b).unwrap()
}

/// Deterministic pseudo-random values in `[lo, hi)` from `seed`.
fn values(seed: u64, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| r.gen_range(lo..hi)).collect()
}

fn random_faces(g: &Grid, seed: u64) -> VectorField {
    let mut u = VectorField::zeros(g);
    for a in 0..g.dim() {
        let len = u.comps[a].len();
        u.comps[a] = values(seed + a as u64, len, -1.0, 1.0);
    }
    u.zero_walls();
    u
}

/// Discretely solenoidal field from a random node stream function that
/// vanishes on box walls.
fn solenoidal(g: &Grid, seed: u64) -> VectorField {
    let [nx, ny, _] = g.cells();
    let h = g.spacing();
    let periodic = g.is_periodic();
    let raw = values(seed, (nx + 1) * (ny + 1), -0.3, 0.3);
    let psi = |i: usize, j: usize| -> f64 {
        if periodic {
            raw[(i % nx) * (ny + 1) + j % ny]
        } else if i == 0 || j == 0 || i == nx || j == ny {
            0.0
        } else {
            raw[i * (ny + 1) + j]
        }
    };
    let mut u = VectorField::zeros(g);
    for ijk in g.face_indices(0) {
        let [i, j, _] = ijk;
        u.comps[0][g.face_index(0, ijk)] = (psi(i, j + 1) - psi(i, j)) / h[1];
    }
    for ijk in g.face_indices(1) {
        let [i, j, _] = ijk;
        u.comps[1][g.face_index(1, ijk)] = -(psi(i + 1, j) - psi(i, j)) / h[0];
    }
    u.zero_walls();
    u
}

fn random_director(g: &Grid, seed: u64) -> DirectorField {
    let v = values(seed, 3 * g.num_cells(), -1.0, 1.0);
    let d: Vec<[f64; 3]> = v
        .chunks(3)
        .map(|c| {
            let w = [c[0], c[1], c[2] + 1.5];
            let n = norm(&w);
            [w[0] / n, w[1] / n, w[2] / n]
        })
        .collect();
    DirectorField::from_values(g, d, [0.0, 0.0, 1.0]).unwrap()
}

fn face_dot(u: &VectorField, v: &VectorField) -> f64 {
    u.comps.iter().zip(&v.comps).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn face_gradient_is_minus_adjoint_of_divergence(n in 4usize..10, b in boundary(), seed in any::<u64>()) {
        let g = grid(n, b);
        let p = ScalarField::from_values(&g, values(seed, g.num_cells(), -1.0, 1.0)).unwrap();
        let u = random_faces(&g, seed ^ 1);
        let lhs = face_dot(&face_gradient(&p).unwrap(), &u);
        let div = divergence(&u).unwrap();
        let rhs: f64 = p.values.iter().zip(&div.values).map(|(a, b)| a * b).sum();
        prop_assert!((lhs + rhs).abs() <= 1e-11 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn divergence_is_linear(n in 4usize..10, b in boundary(), seed in any::<u64>(), a in -3.0f64..3.0) {
        let g = grid(n, b);
        let (u, v) = (random_faces(&g, seed), random_faces(&g, seed ^ 7));
        let mut w = u.clone();
        w.axpy(a, &v);
        let (du, dv, dw) = (divergence(&u).unwrap(), divergence(&v).unwrap(), divergence(&w).unwrap());
        for i in 0..g.num_cells() {
            prop_assert!((dw.values[i] - du.values[i] - a * dv.values[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn projection_is_idempotent(n in 4usize..10, b in boundary(), seed in any::<u64>()) {
        let g = grid(n, b);
        let rho = ScalarField::from_values(&g, values(seed, g.num_cells(), 0.5, 2.0)).unwrap();
        let cfg = SolverConfig::default();
        let (pu, _) = pressure_project(&random_faces(&g, seed ^ 3), &rho, &cfg, 1e-2).unwrap();
        prop_assert!(divergence(&pu).unwrap().max_abs() <= 1e-8);
        let (ppu, _) = pressure_project(&pu, &rho, &cfg, 1e-2).unwrap();
        let mut diff = ppu.clone();
        diff.axpy(-1.0, &pu);
        prop_assert!(diff.max_abs() <= 1e-8 * (1.0 + pu.max_abs()));
    }

    #[test]
    fn density_transport_conserves_mass_and_bounds(n in 4usize..12, b in boundary(), seed in any::<u64>(), steps in 1usize..20) {
        let g = grid(n, b);
        let mut rho = ScalarField::from_values(&g, values(seed, g.num_cells(), 0.2, 3.0)).unwrap();
        let (lo, hi) = (rho.min(), rho.max());
        let m0 = total_mass(&rho);
        let u = solenoidal(&g, seed ^ 5);
        let dt = 0.5 * advective_dt_limit(&u).min(1.0);
        for _ in 0..steps {
            rho = advect_density(&rho, &u, dt).unwrap();
            prop_assert!(((total_mass(&rho) - m0) / m0).abs() <= 1e-12);
            prop_assert!(rho.min() >= lo - 1e-12 && rho.max() <= hi + 1e-12);
        }
    }

    #[test]
    fn director_step_keeps_unit_length(n in 4usize..10, b in boundary(), seed in any::<u64>()) {
        let g = grid(n, b);
        let d = random_director(&g, seed);
        let u = solenoidal(&g, seed ^ 9);
        let cfg = SolverConfig::default();
        let dt = 0.5 * director_dt_limit(&g, cfg.gamma).min(advective_dt_limit(&u));
        let mut s = FlowState::new(0.0, ScalarField::constant(&g, 1.0), u, ScalarField::zeros(&g), d).unwrap();
        for _ in 0..5 {
            s.d = director_step(&s, &cfg, dt).unwrap();
            prop_assert!(s.d.max_unit_violation() <= 1e-14);
        }
    }

    #[test]
    fn snapshots_round_trip_bitwise(n in 4usize..8, b in boundary(), seed in any::<u64>(), t in 0.0f64..10.0) {
        let g = grid(n, b);
        let s = FlowState::new(
            t,
            ScalarField::from_values(&g, values(seed, g.num_cells(), 0.0, 2.0)).unwrap(),
            solenoidal(&g, seed),
            ScalarField::from_values(&g, values(seed ^ 2, g.num_cells(), -1.0, 1.0)).unwrap(),
            random_director(&g, seed ^ 4),
        ).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.snap");
        s.to_snapshot().write(&path).unwrap();
        let back = FlowState::from_snapshot(&Snapshot::read(&path).unwrap()).unwrap();
        prop_assert_eq!(back.t.to_bits(), s.t.to_bits());
        prop_assert_eq!(&back.rho.values, &s.rho.values);
        prop_assert_eq!(&back.u.comps, &s.u.comps);
        prop_assert_eq!(&back.p.values, &s.p.values);
        prop_assert_eq!(&back.d.values, &s.d.values);
    }
}
