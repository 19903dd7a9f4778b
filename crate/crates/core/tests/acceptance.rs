//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//! Tests hold a shared lock so the reported runtimes are not inflated by
//! neighbours competing for the same cores.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use fastham::exec::Execution;
use fastham::fidelity::{random_product_state, run_basis};
use fastham::hamiltonian::{
    hp_truncate, validate_norm_budget, AncillaPolynomial, HamiltonianSpec, Pauli, Rotation, Schedule, Term,
};
use fastham::linalg::{spectral_norm, I};
use fastham::oracle::{exact_hp_operator, full_state_evolve};
use fastham::propagate::{evolve, evolve_observed, EvolveOptions};
use fastham::protocols::derived::{
    data_fidelity, light_cone_probe, run_ghz, run_toffoli, run_w, ZzCompiler,
};
use fastham::protocols::fastcz::{run_fast_cz, FastCzParams, Realization};
use fastham::protocols::ms::{
    adversarial_input, build_fourier_layer_schedule, layer_target, random_input_ensemble, run_fourier_layer,
    run_single_cz_exact, solve_ms_angles, twirl_randomize, LayerSpec, RANDOM_INPUTS, TWIRL_SAMPLES,
};
use fastham::spaces::{build_collective_ops, embed_initial_state, hybrid_dicke_to_full, AncillaSpace};
use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

const ROOT_SEED: u64 = 20_240_601;

fn verdict(n: u32, ok: bool, detail: &str, elapsed: Duration, limit_s: f64) {
    let in_time = elapsed.as_secs_f64() <= limit_s;
    let pass = ok && in_time;
    println!(
        "criterion {n}: {} {detail} [{:.2} s, limit {limit_s} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(ok, "criterion {n}: {detail}");
    assert!(in_time, "criterion {n}: runtime {:.2} s over {limit_s} s", elapsed.as_secs_f64());
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn loglog_fit(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn criterion_01_operator_algebra() {
    let _g = lock();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 5, 20, 100] {
        let ops = build_collective_ops(AncillaSpace::dicke(n).unwrap()).unwrap();
        let x = ops.spin(Pauli::X).unwrap().to_dense();
        let y = ops.spin(Pauli::Y).unwrap().to_dense();
        let z = ops.spin(Pauli::Z).unwrap().to_dense();
        let comm = x.dot(&y) - y.dot(&x);
        let two_i_z = z.mapv(|c| c * I * 2.0);
        worst = worst.max(max_abs(&(&comm - &two_i_z)) / max_abs(&two_i_z));
        // collective Pauli sums: X² + Y² + Z² = N(N + 2)
        let casimir = x.dot(&x) + y.dot(&y) + z.dot(&z);
        let expect = (n * (n + 2)) as f64;
        let id = Array2::<C64>::eye(n + 1).mapv(|c| c * expect);
        worst = worst.max(max_abs(&(&casimir - &id)) / expect);
    }
    verdict(1, worst <= 1e-10, &format!("max relative defect {worst:.2e} (tol 1e-10)"), start.elapsed(), 1.0);
}

/// A random permutation-symmetric schedule on data qubits 0, 1 and `n` ancillae.
fn random_symmetric_schedule(n: usize, rng: &mut ChaCha8Rng) -> Schedule {
    let (x, y, z) = (AncillaPolynomial::x(), AncillaPolynomial::y(), AncillaPolynomial::z());
    let polys = [
        x.clone(),
        y.clone(),
        z.clone(),
        (&x * &x).scale_re(0.1),
        (&(&x * &y) + &(&y * &x)).scale_re(0.05),
        (&z * &x).hermitize().scale_re(0.1),
    ];
    let datas: [Vec<(usize, Pauli)>; 6] = [
        vec![],
        vec![(0, Pauli::Z)],
        vec![(1, Pauli::X)],
        vec![(0, Pauli::Z), (1, Pauli::Z)],
        vec![(0, Pauli::Y)],
        vec![(1, Pauli::Z)],
    ];
    let mut sched = Schedule::new();
    for _ in 0..3 {
        let mut spec = HamiltonianSpec::new(n + 2, n, 4);
        for _ in 0..4 {
            let p = &polys[rng.random_range(0..polys.len())];
            let d = datas[rng.random_range(0..datas.len())].clone();
            spec.terms.push(Term::new(rng.random_range(-1.0..1.0) / n as f64, d, p.clone()));
        }
        sched.push_evolve(spec, rng.random_range(0.2..1.0)).unwrap();
        sched.push_rotations([Rotation::new(rng.random_range(0..2), Pauli::X, rng.random_range(-PI..PI))]);
    }
    sched
}

#[test]
fn criterion_02_dicke_matches_full_register() {
    let _g = lock();
    let start = Instant::now();
    let n = 8;
    let data = [0usize, 1];
    let opts = EvolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED);
    let mut worst: f64 = 1.0;
    for _ in 0..6 {
        let sched = random_symmetric_schedule(n, &mut rng);
        let psi = random_product_state(2, &mut rng);
        let st = embed_initial_state(psi.view(), &data, AncillaSpace::dicke(n).unwrap()).unwrap();
        let engine = hybrid_dicke_to_full(&evolve(&st, &sched, &opts).unwrap().state).unwrap();
        let mut input = Array1::zeros(1 << (n + 2));
        for (d, &a) in psi.iter().enumerate() {
            input[d << n] = a;
        }
        let reference = full_state_evolve(&sched, &data, n, input.view(), 1e-13).unwrap();
        let ov = engine.amplitudes().iter().zip(reference.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr();
        worst = worst.min(ov);
    }
    verdict(2, worst >= 1.0 - 1e-8, &format!("min overlap {worst:.12} over 6 random schedules (need ≥ 1 - 1e-8)"), start.elapsed(), 10.0);
}

#[test]
fn criterion_03_squeezing_law() {
    let _g = lock();
    let start = Instant::now();
    let n = 10.0;
    let cutoff = 600;
    let space = AncillaSpace::fock(cutoff).unwrap();
    // i(N/2)(b² - b†²)
    let gen = (&AncillaPolynomial::b().pow(2) - &AncillaPolynomial::bdag().pow(2)).scale(I * (n / 2.0));
    let steps = 8;
    let mut sched = Schedule::new();
    for _ in 0..steps {
        let spec = HamiltonianSpec::new(11, 10, 2).with_term(Term::new(1.0, [], gen.clone()));
        sched.push_evolve(spec, 2.0 / n / steps as f64).unwrap();
    }
    let ops = build_collective_ops(space).unwrap();
    let xq = AncillaPolynomial::xq().to_sparse(&ops).unwrap().to_dense();
    let x2 = xq.dot(&xq);
    let variance = |v: &Array1<C64>| {
        let m1: C64 = v.iter().zip(xq.dot(v).iter()).map(|(a, b)| a.conj() * b).sum();
        let m2: C64 = v.iter().zip(x2.dot(v).iter()).map(|(a, b)| a.conj() * b).sum();
        m2.re - m1.re * m1.re
    };
    let vac = embed_initial_state(Array1::from(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).view(), &[0], space).unwrap();
    let mut worst = (variance(&vac.block(0).to_owned()) - 0.5).abs() / 0.5;
    let opts = EvolveOptions { fock_retry: false, ..EvolveOptions::default() };
    let mut observed = Vec::new();
    evolve_observed(&vac, &sched, &opts, &mut |k, st| observed.push((k, variance(&st.block(0).to_owned()))))
        .unwrap();
    for (k, var) in observed {
        let nt = 2.0 * (k + 1) as f64 / steps as f64;
        let law = 0.5 * (-2.0 * nt).exp();
        worst = worst.max((var - law).abs() / law);
    }
    verdict(3, worst <= 0.01, &format!("max relative deviation {worst:.2e} for Nt in [0,2] (tol 1%)"), start.elapsed(), 5.0);
}

#[test]
fn criterion_04_hp_convergence() {
    let _g = lock();
    let start = Instant::now();
    let n = 100;
    let block = (n as f64).sqrt() as usize + 1;
    let ops = build_collective_ops(AncillaSpace::dicke(n).unwrap()).unwrap();
    let exact = exact_hp_operator(n).unwrap();
    let exact_b = exact.slice(s![..block, ..block]).to_owned();
    let norms: Vec<f64> = (0..=3)
        .map(|k| {
            let t = hp_truncate(k, n).to_sparse(&ops).unwrap().to_dense();
            spectral_norm(&(&t.slice(s![..block, ..block]).to_owned() - &exact_b)).unwrap()
        })
        .collect();
    let ok = norms.windows(2).all(|w| w[1] < w[0]);
    let txt: Vec<String> = norms.iter().map(|x| format!("{x:.3e}")).collect();
    verdict(4, ok, &format!("block norms K_hp=0..3: [{}] strictly decreasing", txt.join(", ")), start.elapsed(), 5.0);
}

#[test]
fn criterion_05_exact_single_cz() {
    let _g = lock();
    let start = Instant::now();
    let opts = EvolveOptions::default();
    let mut pts = Vec::new();
    let mut ok = true;
    let mut worst_res: f64 = 0.0;
    let mut worst_f: f64 = 1.0;
    for n in [64usize, 256, 1024] {
        let (report, _) = run_single_cz_exact(n, &opts).unwrap();
        let residual = report.solved_params["closure_residual"];
        worst_res = worst_res.max(residual);
        worst_f = worst_f.min(report.fidelity);
        ok &= residual <= 1e-10 && report.fidelity >= 1.0 - 1e-8;
        pts.push((n as f64, report.total_time));
    }
    let slope = loglog_fit(&pts);
    ok &= (-0.55..=-0.45).contains(&slope);
    verdict(
        5,
        ok,
        &format!("closure residual ≤ {worst_res:.1e}, min F_pro {worst_f:.12}, slope log T vs log N {slope:.4}"),
        start.elapsed(),
        60.0,
    );
}

#[test]
fn criterion_06_fast_cz_trend() {
    let _g = lock();
    let start = Instant::now();
    let opts = EvolveOptions::default();
    let ns = [32usize, 64, 128, 256];
    let errors: Vec<f64> = ns
        .iter()
        .map(|&n| run_fast_cz(&FastCzParams::new(n, vec![1]), Realization::Spin, &opts).unwrap().0.worst_case_error)
        .collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let slope = loglog_fit(&ns.iter().map(|&n| n as f64).zip(errors.iter().copied()).collect::<Vec<_>>());
    let (boson, _) = run_fast_cz(&FastCzParams::tuned_boson(64, vec![1]), Realization::Boson, &opts).unwrap();
    let txt: Vec<String> = errors.iter().map(|e| format!("{e:.3e}")).collect();
    verdict(
        6,
        monotone && boson.fidelity >= 0.999,
        &format!(
            "spin errors N=32..256 [{}] (empirical slope {slope:.3}), boson F(N=64) = {:.6}",
            txt.join(", "),
            boson.fidelity
        ),
        start.elapsed(),
        600.0,
    );
}

#[test]
fn criterion_07_derived_circuits() {
    let _g = lock();
    let start = Instant::now();
    let opts = EvolveOptions::default();
    let compiler = ZzCompiler::new(FastCzParams::new(256, vec![1]), Realization::Spin, opts).unwrap();

    let toffoli = run_toffoli(2, &compiler).unwrap();
    let eps_t = toffoli.compiled.composite_error;
    let truth_ok = toffoli.fidelities.len() == 8 && toffoli.fidelities.iter().all(|&f| f >= 1.0 - eps_t);

    let ghz = run_ghz(4, &compiler).unwrap();
    let mut ghz_ideal = Array1::zeros(16);
    ghz_ideal[0] = C64::new(0.5f64.sqrt(), 0.0);
    ghz_ideal[15] = C64::new(0.5f64.sqrt(), 0.0);
    let f_ghz = data_fidelity(&ghz.final_states[0], &ghz_ideal);
    let eps_g = ghz.compiled.composite_error;

    let w = run_w(3, &compiler).unwrap();
    let mut w_ideal = Array1::zeros(8);
    for i in [1, 2, 4] {
        w_ideal[i] = C64::new(1.0 / 3f64.sqrt(), 0.0);
    }
    let f_w = data_fidelity(&w.final_states[0], &w_ideal);
    let eps_w = w.compiled.composite_error;

    let ok = truth_ok && eps_g < 0.05 && eps_w < 0.05 && f_ghz >= 1.0 - eps_g && f_w >= 1.0 - eps_w;
    let min_t = toffoli.fidelities.iter().cloned().fold(1.0, f64::min);
    verdict(
        7,
        ok,
        &format!(
            "Toffoli min F {min_t:.5} vs bound {eps_t:.4} ({} calls); GHZ F {f_ghz:.5} bound {eps_g:.4}; W F {f_w:.5} bound {eps_w:.4}",
            toffoli.compiled.invocations.len()
        ),
        start.elapsed(),
        600.0,
    );
}

#[test]
fn criterion_08_parallel_layer() {
    let _g = lock();
    let start = Instant::now();
    let opts = EvolveOptions::default();
    let gates = [(0usize, 1usize), (2, 3)];
    let target = layer_target(&gates, 4).unwrap();
    let mut means = Vec::new();
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [8usize, 12] {
        let (_, out) = run_fourier_layer(n, &opts).unwrap();
        let ens = random_input_ensemble(&out, &target, RANDOM_INPUTS, ROOT_SEED, Execution::Parallel);
        let adv = adversarial_input(&out, &target).unwrap();
        let tw = twirl_randomize(&out, &target, &adv, TWIRL_SAMPLES, ROOT_SEED, Execution::Parallel);
        let gap = (tw.error.mean - ens.error.mean).abs();
        let se = (tw.error.standard_error.powi(2) + ens.error.standard_error.powi(2)).sqrt();
        ok &= gap <= 2.0 * se;
        means.push(ens.fidelity.mean);
        detail.push(format!(
            "N={n}: mean F {:.4}, error {:.4}±{:.4}, twirled {:.4}±{:.4}",
            ens.fidelity.mean, ens.error.mean, ens.error.standard_error, tw.error.mean, tw.error.standard_error
        ));

        if n == 8 {
            // the engine against the site-resolved oracle on one random input
            let layer = LayerSpec::new(gates.to_vec(), n).unwrap();
            let sched = build_fourier_layer_schedule(&layer, 4, &solve_ms_angles(n).unwrap()).unwrap().schedule;
            let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED);
            let psi = random_product_state(4, &mut rng);
            let engine = out.output_for(psi.view());
            let mut input = Array1::zeros(1 << (n + 4));
            for (d, &a) in psi.iter().enumerate() {
                input[d << n] = a;
            }
            let reference = full_state_evolve(&sched, &[0, 1, 2, 3], n, input.view(), 1e-13).unwrap();
            let ov = engine.iter().zip(reference.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr();
            ok &= ov >= 1.0 - 1e-8;
            detail.push(format!("oracle overlap {ov:.12}"));
        }
    }
    ok &= means[1] > means[0];
    verdict(8, ok, &detail.join("; "), start.elapsed(), 900.0);
}

#[test]
fn criterion_09_light_cone() {
    let _g = lock();
    let start = Instant::now();
    let opts = EvolveOptions::default();
    let n_anc = 8;
    let probe = light_cone_probe(n_anc, 0.5, 1, &opts).unwrap();

    // second route: the dense full-register unitary from the site-resolved oracle
    let n_tot = n_anc + 2;
    let dim = 1usize << n_tot;
    let mut u = Array2::<C64>::zeros((dim, dim));
    for j in 0..dim {
        let mut e = Array1::zeros(dim);
        e[j] = C64::new(1.0, 0.0);
        let col = full_state_evolve(&probe.schedule, &[0, 1], n_anc, e.view(), 1e-13).unwrap();
        u.column_mut(j).assign(&col);
    }
    let flip = |bit: usize| {
        let mut m = Array2::<C64>::zeros((dim, dim));
        for i in 0..dim {
            m[[i ^ bit, i]] = C64::new(1.0, 0.0);
        }
        m
    };
    let (x0, x1) = (flip(1 << (n_tot - 1)), flip(1 << (n_tot - 2)));
    let udag = u.t().mapv(|c| c.conj());
    let x0_t = udag.dot(&x0).dot(&u);
    let oracle_comm = spectral_norm(&(x0_t.dot(&x1) - x1.dot(&x0_t))).unwrap();

    let ok = probe.rescale_mismatch <= 1e-12 && probe.commutator >= 1.0 && (probe.commutator - oracle_comm).abs() <= 1e-6;
    verdict(
        9,
        ok,
        &format!(
            "N_tot={n_tot}, lambda {:.4}, rescale mismatch {:.1e}, commutator {:.6} (oracle {oracle_comm:.6}) at T = {:.4}",
            probe.lambda, probe.rescale_mismatch, probe.commutator, probe.rescaled_time
        ),
        start.elapsed(),
        300.0,
    );
}

#[test]
fn criterion_10_budget_validator() {
    let _g = lock();
    let start = Instant::now();
    let zz = |c: f64| {
        HamiltonianSpec::new(4, 0, 2).with_term(Term::new(c, [(0, Pauli::Z), (1, Pauli::Z)], AncillaPolynomial::identity()))
    };
    let n_tot = 6;
    let zzz = |c: f64| {
        HamiltonianSpec::new(n_tot, 0, 3)
            .with_term(Term::new(c, [(0, Pauli::Z), (1, Pauli::Z), (2, Pauli::Z)], AncillaPolynomial::identity()))
    };
    let pass = validate_norm_budget(&zz(1.0));
    let fail = validate_norm_budget(&zz(1.5));
    let k3_ok = validate_norm_budget(&zzz(1.0 / n_tot as f64));
    let k3_bad = validate_norm_budget(&zzz(2.0 / n_tot as f64));
    let ok = pass.is_ok()
        && !fail.is_ok()
        && (fail.worst_ratio().unwrap() - 1.5).abs() < 1e-12
        && k3_ok.is_ok()
        && !k3_bad.is_ok()
        && (k3_bad.worst_ratio().unwrap() - 2.0).abs() < 1e-12;
    verdict(10, ok, &format!("ZZ(1): {pass}; ZZ(1.5): {fail}; ZZZ(2/N_tot): {k3_bad}"), start.elapsed(), 1.0);
}

#[test]
fn batch_modes_agree() {
    let _g = lock();
    let p = FastCzParams::new(32, vec![1]);
    let s = fastham::protocols::fastcz::build_fast_cz_schedule(&p, Realization::Spin).unwrap();
    let space = AncillaSpace::dicke(32).unwrap();
    let a = run_basis(&s.schedule, &p.data_qubits(), space, &EvolveOptions { execution: Execution::Sequential, ..Default::default() })
        .unwrap();
    let b = run_basis(&s.schedule, &p.data_qubits(), space, &EvolveOptions { execution: Execution::Parallel, ..Default::default() })
        .unwrap();
    assert_eq!(a.outputs, b.outputs);
}
