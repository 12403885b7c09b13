use proptest::prelude::*;

use entlink::entanglement::{
    block_entropy, contiguous_entropy_table, el_matrix, reconstruct_entropy,
};
use entlink::gaussian::{
    fock_oracle_entropy, half_filled_ground_state, FockInitial, GapPolicy, Propagator,
};
use entlink::lattice::{hamiltonian, CouplingKind, CouplingSpec};
use entlink::qpp::{
    initial_fronts, integrate_fronts, integrate_fronts_set, propagate_fronts, DeltaLine, FrontSet,
    InitialKind, QppParams,
};
use entlink::wavesolver::{WaveBoundary, WaveField};
use entlink::Boundary;

fn couplings(bonds: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..1.6, bonds)
}

fn chain(g: Vec<f64>, n: usize, b: Boundary) -> entlink::lattice::SingleParticleHamiltonian {
    hamiltonian(&CouplingSpec::new(CouplingKind::Custom(g), n, b).unwrap()).unwrap()
}

fn subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(any::<bool>(), n).prop_filter_map("empty block", |mask| {
        let s: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
            .collect();
        (!s.is_empty()).then_some(s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn peschel_matches_fock_space(
        g0 in couplings(6),
        g1 in couplings(6),
        block in subset(6),
        t in 0.0f64..3.0,
    ) {
        let h0 = chain(g0, 6, Boundary::Periodic);
        let h1 = chain(g1, 6, Boundary::Periodic);
        let c0 = match half_filled_ground_state(&h0, GapPolicy::Strict) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        let c = Propagator::new(&c0, &h1).unwrap().at(t).unwrap();
        let s = block_entropy(&c, &block).unwrap();
        let initial = FockInitial::GroundState { h: &h0, n_particles: 3 };
        let f = fock_oracle_entropy(&initial, &h1, &block, t).unwrap();
        prop_assert!((s - f).abs() < 1e-9, "{} vs {}", s, f);
    }

    #[test]
    fn evolution_keeps_the_state_pure(g0 in couplings(9), g1 in couplings(9), t in 0.0f64..40.0) {
        let h0 = chain(g0, 10, Boundary::Open);
        let h1 = chain(g1, 10, Boundary::Open);
        let c0 = half_filled_ground_state(&h0, GapPolicy::AllowSmallGap).unwrap();
        let c = Propagator::new(&c0, &h1).unwrap().at(t).unwrap();
        prop_assert!((c.particle_number() - 5.0).abs() < 1e-10);
        prop_assert!(c.idempotency_defect() < 1e-10);
    }

    #[test]
    fn el_matrix_telescopes(g0 in couplings(12), t in 0.0f64..10.0) {
        let n = 12;
        let h0 = chain(g0, n, Boundary::Periodic);
        let h1 = hamiltonian(&CouplingSpec::new(CouplingKind::Homogeneous, n, Boundary::Periodic).unwrap()).unwrap();
        let c0 = match half_filled_ground_state(&h0, GapPolicy::Strict) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        let c = Propagator::new(&c0, &h1).unwrap().at(t).unwrap();
        let table = contiguous_entropy_table(&c, t).unwrap();
        let el = el_matrix(&table);
        for (a, b, s) in table.entries() {
            let r = reconstruct_entropy(&el, &(a..b).collect::<Vec<_>>()).unwrap();
            prop_assert!((r - s).abs() < 1e-10);
        }
    }

    #[test]
    fn fronts_keep_their_weight_on_the_torus(
        kind in prop::sample::select(vec![InitialKind::Dimer, InitialKind::Rainbow, InitialKind::Bridge]),
        t in 0.0f64..200.0,
    ) {
        let p = QppParams::new(0.7, 2.0, 64.0, Boundary::Periodic).unwrap();
        let f0 = initial_fronts(kind, &p);
        let f = propagate_fronts(&f0, t, &p).unwrap();
        let weight = |f: &FrontSet| f.lines.iter().map(|l| l.weight * l.projected_length()).sum::<f64>();
        prop_assert!((weight(&f) - weight(&f0)).abs() < 1e-9);
    }

    #[test]
    fn fronts_are_swap_symmetric(
        kind in prop::sample::select(vec![InitialKind::Dimer, InitialKind::Rainbow, InitialKind::Bridge]),
        open in any::<bool>(),
        t in 0.0f64..100.0,
        a in 0.0f64..64.0,
        len in 0.0f64..64.0,
    ) {
        let b = if open { Boundary::Open } else { Boundary::Periodic };
        let p = QppParams::new(1.0, 2.0, 64.0, b).unwrap();
        let f = propagate_fronts(&initial_fronts(kind, &p), t, &p).unwrap();
        let swapped = FrontSet { lines: f.lines.iter().map(DeltaLine::swapped).collect(), ..f.clone() };
        let hi = (a + len).min(64.0);
        let x = integrate_fronts(&f, a, hi).unwrap();
        let y = integrate_fronts(&swapped, a, hi).unwrap();
        prop_assert!((x - y).abs() < 1e-9);
    }

    #[test]
    fn pure_state_fronts_see_the_complement(
        kind in prop::sample::select(vec![InitialKind::Dimer, InitialKind::Rainbow, InitialKind::Bridge]),
        open in any::<bool>(),
        t in 0.0f64..100.0,
        a in 0.0f64..64.0,
        len in 0.0f64..64.0,
    ) {
        let b = if open { Boundary::Open } else { Boundary::Periodic };
        let p = QppParams::new(1.0, 2.0, 64.0, b).unwrap();
        let f = propagate_fronts(&initial_fronts(kind, &p), t, &p).unwrap();
        let hi = (a + len).min(64.0);
        let s = integrate_fronts(&f, a, hi).unwrap();
        let comp = integrate_fronts_set(&f, &[(0.0, a), (hi, 64.0)]);
        prop_assert!((s - comp).abs() < 1e-9);
    }

    #[test]
    fn propagation_composes(
        kind in prop::sample::select(vec![InitialKind::Dimer, InitialKind::Rainbow, InitialKind::Bridge]),
        open in any::<bool>(),
        t1 in 0.0f64..40.0,
        t2 in 0.0f64..40.0,
        a in 0.0f64..64.0,
        len in 0.0f64..64.0,
    ) {
        let b = if open { Boundary::Open } else { Boundary::Periodic };
        let p = QppParams::new(1.0, 2.0, 64.0, b).unwrap();
        let f0 = initial_fronts(kind, &p);
        let direct = propagate_fronts(&f0, t1 + t2, &p).unwrap();
        let stepped = propagate_fronts(&propagate_fronts(&f0, t1, &p).unwrap(), t1 + t2, &p).unwrap();
        let hi = (a + len).min(64.0);
        let x = integrate_fronts(&direct, a, hi).unwrap();
        let y = integrate_fronts(&stepped, a, hi).unwrap();
        prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
    }

    #[test]
    fn wave_solver_conserves_mass_and_energy(
        seed in prop::collection::vec(-1.0f64..1.0, 16 * 16),
        periodic in any::<bool>(),
    ) {
        let m = 16;
        let mut grid = seed;
        for i in 0..m {
            for j in 0..i {
                grid[j * m + i] = grid[i * m + j];
            }
        }
        let b = if periodic { WaveBoundary::Periodic } else { WaveBoundary::Neumann };
        let f0 = WaveField::from_grid(grid, m, 16.0, 2.0, b, None).unwrap();
        let (m0, e0) = (f0.mass(), f0.energy());
        let mut f = f0;
        for _ in 0..200 {
            f = f.step();
        }
        prop_assert!((f.mass() - m0).abs() < 1e-9 * (1.0 + m0.abs()));
        prop_assert!((f.energy() - e0).abs() < 1e-9 * (1.0 + e0.abs()));
    }
}
