use std::f64::consts::PI;

use fastham::exec::Execution;
use fastham::fidelity::{random_product_state, run_basis};
use fastham::hamiltonian::{
    substitute_boson_with_spin, validate_norm_budget, AncillaPolynomial, HamiltonianSpec, Pauli, Rotation, Schedule,
    Term,
};
use fastham::linalg::I;
use fastham::propagate::{evolve, EvolveOptions, Method};
use fastham::protocols::circuit::LayeredCircuit;
use fastham::protocols::fastcz::{build_fast_cz_schedule, FastCzParams, Realization};
use fastham::protocols::ms::{
    build_fourier_layer_schedule, layer_target, ms_cz_schedule, random_input_ensemble, run_fourier_layer,
    solve_ms_angles, LayerSpec,
};
use fastham::spaces::{build_collective_ops, embed_initial_state, AncillaSpace, CollectiveOps, HybridState};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Segments drawn from a fixed menu of symmetric couplings; `picks` chooses
/// (data string, ancilla polynomial, coefficient, duration) per segment.
fn symmetric_schedule(n: usize, picks: &[(usize, usize, f64, f64)]) -> Schedule {
    let (x, y, z) = (AncillaPolynomial::x(), AncillaPolynomial::y(), AncillaPolynomial::z());
    let polys = [x.clone(), y.clone(), z.clone(), (&x * &x).scale_re(0.2), (&z * &y).hermitize().scale_re(0.2)];
    let datas: [Vec<(usize, Pauli)>; 4] =
        [vec![(0, Pauli::Z)], vec![(1, Pauli::X)], vec![(0, Pauli::Z), (1, Pauli::Z)], vec![(0, Pauli::Y)]];
    let mut s = Schedule::new();
    for &(d, p, c, t) in picks {
        let spec = HamiltonianSpec::new(n + 2, n, 4).with_term(Term::new(c, datas[d % 4].clone(), polys[p % 5].clone()));
        s.push_evolve(spec, t).unwrap();
        s.push_rotations([Rotation::new(d % 2, Pauli::X, c * PI)]);
    }
    s
}

fn picks() -> impl Strategy<Value = Vec<(usize, usize, f64, f64)>> {
    prop::collection::vec((0usize..4, 0usize..5, -1.0f64..1.0, 0.05f64..1.0), 1..5)
}

fn start_state(seed: u64, space: AncillaSpace) -> HybridState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = random_product_state(2, &mut rng);
    embed_initial_state(psi.view(), &[0, 1], space).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fock_operator_identities(cutoff in 1usize..80) {
        let ops = build_collective_ops(AncillaSpace::fock(cutoff).unwrap()).unwrap();
        let CollectiveOps::Boson { b, bdag, x, p, n, .. } = ops else { unreachable!() };
        let bb = bdag.matmul(&b).to_dense();
        let nn = n.to_dense();
        prop_assert_eq!(&bb, &nn);
        for k in 0..=cutoff {
            prop_assert!((nn[[k, k]].re - k as f64).abs() < 1e-12);
        }
        prop_assert!(x.hermiticity_defect() <= 1e-14);
        prop_assert!(p.hermiticity_defect() <= 1e-14);
    }

    #[test]
    fn spin_substitution_stays_hermitian(n in 8usize..48, k_hp in 0usize..4, c in prop::array::uniform3(-1.0f64..1.0)) {
        let xq = AncillaPolynomial::xq();
        let sq = (&AncillaPolynomial::b().pow(2) - &AncillaPolynomial::bdag().pow(2)).scale(I);
        let spec = HamiltonianSpec::new(n + 1, n, 2 * k_hp + 4)
            .with_term(Term::new(c[0], [(0, Pauli::Z)], xq.clone()))
            .with_term(Term::new(c[1], [(0, Pauli::Z)], xq.pow(3)))
            .with_term(Term::new(c[2], [], sq));
        let sub = substitute_boson_with_spin(&spec, k_hp, n, f64::INFINITY).unwrap();
        let ops = build_collective_ops(AncillaSpace::dicke(n).unwrap()).unwrap();
        prop_assert!(!sub.spec.is_boson());
        for t in &sub.spec.terms {
            prop_assert!(t.ancilla.is_hermitian_on(&ops, 1e-12).unwrap());
        }
    }

    #[test]
    fn budget_ignores_ancilla_relabeling(
        w in prop::collection::vec(-0.5f64..0.5, 3..9),
        shift in 1usize..8,
    ) {
        let n = w.len();
        let mut rotated = w.clone();
        rotated.rotate_left(shift % n);
        let spec = |w: Vec<f64>| {
            HamiltonianSpec::new(n + 1, n, 2)
                .with_term(Term::new(1.0, [(0, Pauli::Z)], AncillaPolynomial::weighted(Pauli::X, w)))
        };
        let a = validate_norm_budget(&spec(w));
        let b = validate_norm_budget(&spec(rotated));
        prop_assert_eq!(a.is_ok(), b.is_ok());
        prop_assert!((a.worst_ratio().unwrap() - b.worst_ratio().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn evolution_is_reversible(n in 2usize..12, picks in picks(), seed in any::<u64>()) {
        let s = symmetric_schedule(n, &picks);
        let st = start_state(seed, AncillaSpace::dicke(n).unwrap());
        let opts = EvolveOptions::default();
        let fwd = evolve(&st, &s, &opts).unwrap().state;
        prop_assert!((fwd.norm() - 1.0).abs() < 1e-9);
        let back = evolve(&fwd, &s.reversed(), &opts).unwrap().state;
        prop_assert!(max_diff(back.amplitudes(), st.amplitudes()) < 1e-10);
    }

    #[test]
    fn segments_compose(n in 2usize..12, a in picks(), b in picks(), seed in any::<u64>()) {
        let (sa, sb) = (symmetric_schedule(n, &a), symmetric_schedule(n, &b));
        let mut both = sa.clone();
        both.append(&sb);
        let st = start_state(seed, AncillaSpace::dicke(n).unwrap());
        let opts = EvolveOptions::default();
        let whole = evolve(&st, &both, &opts).unwrap().state;
        let split = evolve(&evolve(&st, &sa, &opts).unwrap().state, &sb, &opts).unwrap().state;
        prop_assert_eq!(whole.amplitudes(), split.amplitudes());
    }

    #[test]
    fn rescaling_preserves_the_unitary(n in 2usize..12, picks in picks(), lambda in 0.05f64..20.0, seed in any::<u64>()) {
        let s = symmetric_schedule(n, &picks);
        let st = start_state(seed, AncillaSpace::dicke(n).unwrap());
        let opts = EvolveOptions::default();
        let a = evolve(&st, &s, &opts).unwrap().state;
        let b = evolve(&st, &s.rescaled(lambda).unwrap(), &opts).unwrap().state;
        prop_assert!(max_diff(a.amplitudes(), b.amplitudes()) < 1e-12);
    }

    #[test]
    fn krylov_converges_with_tolerance(n in 3usize..8, picks in picks(), seed in any::<u64>()) {
        let s = symmetric_schedule(n, &picks);
        let st = start_state(seed, AncillaSpace::full_qubit(n).unwrap());
        let tol = 1e-8;
        let run = |t: f64| {
            let opts = EvolveOptions { method: Method::Krylov, step_tolerance: t, ..EvolveOptions::default() };
            evolve(&st, &s, &opts).unwrap().state.into_amplitudes()
        };
        prop_assert!(max_diff(&run(tol), &run(tol / 2.0)) <= 10.0 * tol);
    }

    #[test]
    fn circuit_then_inverse_is_identity(n in 1usize..5, depth in 0usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = LayeredCircuit::random(n, depth, &mut rng).to_circuit();
        let inv = c.inverse();
        c.append(&inv);
        let u = c.unitary().unwrap();
        let phase = u[[0, 0]];
        prop_assert!((phase.norm() - 1.0).abs() < 1e-10);
        for ((i, j), v) in u.indexed_iter() {
            let expect = if i == j { phase } else { C64::new(0.0, 0.0) };
            prop_assert!((v - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn ms_schedules_meet_the_budget(n in 4usize..160) {
        let s = ms_cz_schedule(&solve_ms_angles(n).unwrap(), 0, 1, 2).unwrap();
        for (spec, _) in s.segments() {
            let v = validate_norm_budget(spec);
            prop_assert!(v.is_ok(), "{}", v);
        }
    }

    #[test]
    fn fourier_layer_schedules_meet_the_budget(n in 4usize..40, gates in 1usize..3) {
        prop_assume!(2 * gates <= n);
        let pairs: Vec<(usize, usize)> = (0..gates).map(|g| (2 * g, 2 * g + 1)).collect();
        let layer = LayerSpec::new(pairs, n).unwrap();
        let ls = build_fourier_layer_schedule(&layer, 2 * gates, &solve_ms_angles(n).unwrap()).unwrap();
        for (spec, _) in ls.schedule.segments() {
            let v = validate_norm_budget(spec);
            prop_assert!(v.is_ok(), "{}", v);
        }
    }

    #[test]
    fn mode_zero_layer_reduces_to_single_cz(n in 4usize..48, seed in any::<u64>()) {
        let angles = solve_ms_angles(n).unwrap();
        let layer = LayerSpec { gates: vec![(0, 1)], modes: vec![0] };
        let a = build_fourier_layer_schedule(&layer, 2, &angles).unwrap().schedule;
        let b = ms_cz_schedule(&angles, 0, 1, 2).unwrap();
        let st = start_state(seed, AncillaSpace::dicke(n).unwrap());
        let opts = EvolveOptions::default();
        let fa = evolve(&st, &a, &opts).unwrap().state;
        let fb = evolve(&st, &b, &opts).unwrap().state;
        prop_assert!(max_diff(fa.amplitudes(), fb.amplitudes()) < 1e-9);
    }
}

#[test]
fn spin_fast_cz_segments_meet_the_budget() {
    for n in [32usize, 64] {
        let s = build_fast_cz_schedule(&FastCzParams::new(n, vec![1]), Realization::Spin).unwrap();
        for (i, (spec, _)) in s.schedule.segments().enumerate() {
            let v = validate_norm_budget(spec);
            assert!(v.is_ok(), "N={n} segment {i}: {v}");
        }
    }
}

#[test]
fn layer_average_error_falls_with_ancillae() {
    let gates = [(0usize, 1usize), (2, 3)];
    let target = layer_target(&gates, 4).unwrap();
    let means: Vec<f64> = [6usize, 8, 10]
        .iter()
        .map(|&n| {
            let (_, out) = run_fourier_layer(n, &EvolveOptions::default()).unwrap();
            random_input_ensemble(&out, &target, 50, 7, Execution::Parallel).error.mean
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn batch_results_do_not_depend_on_execution_mode() {
    let s = ms_cz_schedule(&solve_ms_angles(32).unwrap(), 0, 1, 2).unwrap();
    let space = AncillaSpace::dicke(32).unwrap();
    let run = |execution| {
        run_basis(&s, &[0, 1], space, &EvolveOptions { execution, ..EvolveOptions::default() }).unwrap().outputs
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}
