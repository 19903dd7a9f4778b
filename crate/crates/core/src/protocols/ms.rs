//! Four-stage geometric-phase CZ, its Fourier-focused parallel layer, and
//! the Pauli twirl.
//!
//! Stage generators are `+Z_a⊗X`, `+Z_b⊗Y`, `-Z_a⊗X`, `-Z_b⊗Y`. Each is
//! linear in single-ancilla Paulis, so in every data sector the ancillae
//! evolve as a product of identical spin-1/2 rotations `W(z_a, z_b)`.
//! Closure means `⟨1|W|0⟩ = 0`; the sector amplitude is then `W₀₀^N`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::circuit::{Circuit, LayeredCircuit};
use super::{evaluate_gate, ProtocolReport};
use crate::error::{Error, Result};
use crate::exec::{par_map_with, Execution};
use crate::fidelity::{random_product_state, ChannelOutputs};
use crate::hamiltonian::{validate_norm_budget, AncillaPolynomial, HamiltonianSpec, Pauli, Rotation, Schedule, Term};
use crate::linalg::{eigh_hermitian, inner, ZERO};
use crate::propagate::EvolveOptions;
use crate::spaces::AncillaSpace;

pub const MAX_ITERATIONS: usize = 200;
const SOLVER_TOL: f64 = 1e-14;
pub const TWIRL_SAMPLES: usize = 32;
pub const RANDOM_INPUTS: usize = 50;

type M2 = [[C64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `exp(-i θ σ)`
fn spin_rot(axis: Pauli, theta: f64) -> M2 {
    let (c, s) = (theta.cos(), theta.sin());
    let p = axis.matrix();
    let mut u = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { c } else { 0.0 };
            u[i][j] = C64::new(id, 0.0) - C64::new(0.0, s) * p[i][j];
        }
    }
    u
}

/// Single-ancilla propagator of the four stages in data sector `(z_a, z_b)`.
pub fn sector_rotation(t: &[f64; 4], za: f64, zb: f64) -> M2 {
    let stages = [
        spin_rot(Pauli::X, t[0] * za),
        spin_rot(Pauli::Y, t[1] * zb),
        spin_rot(Pauli::X, -t[2] * za),
        spin_rot(Pauli::Y, -t[3] * zb),
    ];
    stages.iter().fold([[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]], |acc, s| mul(s, &acc))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MsAngles {
    pub n: usize,
    pub durations: [f64; 4],
    /// `max_sectors √(1 - |W₀₀|^{2N})`.
    pub closure_residual: f64,
    /// Phase of the `Z_a Z_b = +1` sectors minus that of the `-1` sectors.
    pub phase_achieved: f64,
    /// Small-angle starting value of `T₁ = T₂`.
    pub seed: f64,
    pub iterations: usize,
}

impl MsAngles {
    pub fn total_time(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// `max_μ T_μ √N`.
    pub fn c_const(&self) -> f64 {
        self.durations.iter().cloned().fold(0.0, f64::max) * (self.n as f64).sqrt()
    }

    /// Largest relative change of a duration from the seed.
    pub fn seed_correction(&self) -> f64 {
        self.durations.iter().map(|t| (t - self.seed).abs() / self.seed).fold(0.0, f64::max)
    }

    /// Per-sector phases `N arg W₀₀` in the order `(++), (+-), (-+), (--)`.
    pub fn sector_phases(&self) -> [f64; 4] {
        let n = self.n as f64;
        let mut out = [0.0; 4];
        for (k, (za, zb)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
            out[k] = n * sector_rotation(&self.durations, za, zb)[0][0].arg();
        }
        out
    }
}

fn residual(n: f64, t1: f64, t3: f64, t4: f64) -> [f64; 3] {
    let w = sector_rotation(&[t1, t1, t3, t4], 1.0, 1.0);
    [w[1][0].re, w[1][0].im, n * w[0][0].arg() - FRAC_PI_4]
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *xk = det(&m) / d;
    }
    Some(x)
}

/// Solves the closure and `π/2` phase conditions with `T₁ = T₂`.
///
/// Seed: `T₁ = T₂ = T₃ = T₄ = √(π / (8N))`, from `4 N T₁ T₂ = π/2` at small angles.
pub fn solve_ms_angles(n: usize) -> Result<MsAngles> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("the four-stage CZ needs N ≥ 4 ancillae, got {n}")));
    }
    let nf = n as f64;
    let seed = (PI / (8.0 * nf)).sqrt();
    let mut x = [seed; 3];
    let mut iterations = 0;
    let mut f = residual(nf, x[0], x[1], x[2]);
    while f.iter().map(|v| v.abs()).fold(0.0, f64::max) > SOLVER_TOL {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations, residual: f.iter().map(|v| v.abs()).fold(0.0, f64::max) });
        }
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let h = 1e-6 * x[k];
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (residual(nf, xp[0], xp[1], xp[2]), residual(nf, xm[0], xm[1], xm[2]));
            for i in 0..3 {
                jac[i][k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let dx = solve3(jac, f).ok_or_else(|| Error::Linalg("singular closure Jacobian".into()))?;
        for k in 0..3 {
            x[k] -= dx[k];
        }
        f = residual(nf, x[0], x[1], x[2]);
        iterations += 1;
    }
    if x.iter().any(|&t| t <= 0.0) {
        return Err(Error::NoConvergence { iterations, residual: f.iter().map(|v| v.abs()).fold(0.0, f64::max) });
    }
    let durations = [x[0], x[0], x[1], x[2]];
    let closure_residual = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .into_iter()
        .map(|(za, zb)| {
            let w = sector_rotation(&durations, za, zb);
            let leak = w[1][0].norm_sqr();
            // 1 - (1 - leak)^N without cancellation
            (-(nf * (-leak).ln_1p()).exp_m1()).max(0.0).sqrt()
        })
        .fold(0.0, f64::max);
    let mut angles = MsAngles { n, durations, closure_residual, phase_achieved: 0.0, seed, iterations };
    let ph = angles.sector_phases();
    angles.phase_achieved = ph[0] - ph[1];
    Ok(angles)
}

fn stage_specs(n_tot: usize, n_anc: usize, stages: [Vec<Term>; 4]) -> Vec<HamiltonianSpec> {
    stages
        .into_iter()
        .map(|terms| {
            let mut s = HamiltonianSpec::new(n_tot, n_anc, 2);
            s.terms = terms;
            s
        })
        .collect()
}

/// Four stages on collective `X`, `Y`, then `R_z(π/2)` on both qubits.
pub fn ms_cz_schedule(angles: &MsAngles, a: usize, b: usize, n_data: usize) -> Result<Schedule> {
    let x = AncillaPolynomial::x();
    let y = AncillaPolynomial::y();
    let specs = stage_specs(
        n_data + angles.n,
        angles.n,
        [
            vec![Term::new(1.0, [(a, Pauli::Z)], x.clone())],
            vec![Term::new(1.0, [(b, Pauli::Z)], y.clone())],
            vec![Term::new(-1.0, [(a, Pauli::Z)], x)],
            vec![Term::new(-1.0, [(b, Pauli::Z)], y)],
        ],
    );
    let mut s = Schedule::new();
    for (spec, t) in specs.into_iter().zip(angles.durations) {
        s.push_evolve(spec, t)?;
    }
    s.push_rotations([Rotation::new(a, Pauli::Z, FRAC_PI_2), Rotation::new(b, Pauli::Z, FRAC_PI_2)]);
    Ok(s)
}

pub fn cz_target() -> Array2<C64> {
    let mut c = Circuit::new(2);
    c.cz(0, 1);
    c.unitary().expect("two-qubit CZ")
}

fn angle_params(angles: &MsAngles) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    for (k, t) in angles.durations.iter().enumerate() {
        p.insert(format!("T{}", k + 1), *t);
    }
    p.insert("closure_residual".into(), angles.closure_residual);
    p.insert("phase_achieved".into(), angles.phase_achieved);
    p.insert("C".into(), angles.c_const());
    p.insert("seed_correction".into(), angles.seed_correction());
    p.insert("iterations".into(), angles.iterations as f64);
    p
}

/// Solves the angles and scores the Dicke-space run against CZ.
pub fn run_single_cz_exact(n: usize, opts: &EvolveOptions) -> Result<(ProtocolReport, ChannelOutputs)> {
    let angles = solve_ms_angles(n)?;
    let schedule = ms_cz_schedule(&angles, 0, 1, 2)?;
    let (mut report, out) = evaluate_gate("ms-exact", &schedule, &[0, 1], AncillaSpace::Dicke(n), &cz_target(), opts, 0)?;
    report.solved_params = angle_params(&angles);
    report.solved_params.insert("ancilla_infidelity".into(), 1.0 - out.metrics(&cz_target(), 0)?.min_ancilla_return);
    Ok((report, out))
}

/// Disjoint CZ pairs of one layer and the Fourier mode each one uses.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub gates: Vec<(usize, usize)>,
    pub modes: Vec<usize>,
}

impl LayerSpec {
    /// Gate `g` takes the next free mode `k`, skipping any `k` whose
    /// companion `N - k` is already taken.
    pub fn new(gates: Vec<(usize, usize)>, n_anc: usize) -> Result<Self> {
        if 2 * gates.len() > n_anc {
            return Err(Error::InvalidParameter(format!("{} gates need at least {} ancillae", gates.len(), 2 * gates.len())));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &gates {
            if a == b || !seen.insert(a) || !seen.insert(b) {
                return Err(Error::InvalidParameter(format!("overlapping or degenerate gate ({a}, {b})")));
            }
        }
        let mut used = vec![false; n_anc];
        let mut modes = Vec::with_capacity(gates.len());
        let mut k = 0;
        for _ in &gates {
            while used[(n_anc - k) % n_anc] {
                k += 1;
            }
            used[k] = true;
            modes.push(k);
            k += 1;
        }
        Ok(Self { gates, modes })
    }
}

fn quadrature(n_anc: usize, mode: usize, partner: bool) -> AncillaPolynomial {
    let th: Vec<f64> = (0..n_anc).map(|i| 2.0 * PI * (mode * i) as f64 / n_anc as f64).collect();
    let (wx, wy): (Vec<f64>, Vec<f64>) = if partner {
        th.iter().map(|t| (-t.sin(), t.cos())).unzip()
    } else {
        th.iter().map(|t| (t.cos(), t.sin())).unzip()
    };
    let mut p = AncillaPolynomial::zero();
    for (axis, w) in [(Pauli::X, wx), (Pauli::Y, wy)] {
        if w.iter().any(|v| v.abs() > 1e-15) {
            p = &p + &AncillaPolynomial::weighted(axis, w);
        }
    }
    p
}

#[derive(Clone, Debug)]
pub struct LayerSchedule {
    pub schedule: Schedule,
    /// Global factor dividing every coupling so each stage meets the budget.
    pub normalization: f64,
    pub angles: MsAngles,
}

/// All gates' four stages run simultaneously on their own Fourier
/// quadratures, followed by the `R_z(π/2)` compensation.
pub fn build_fourier_layer_schedule(layer: &LayerSpec, n_data: usize, angles: &MsAngles) -> Result<LayerSchedule> {
    let n = angles.n;
    let mut stages: [Vec<Term>; 4] = Default::default();
    for (&(a, b), &k) in layer.gates.iter().zip(&layer.modes) {
        if a >= n_data || b >= n_data {
            return Err(Error::UnknownQubit(a.max(b)));
        }
        let (g, gp) = (quadrature(n, k, false), quadrature(n, k, true));
        stages[0].push(Term::new(1.0, [(a, Pauli::Z)], g.clone()));
        stages[1].push(Term::new(1.0, [(b, Pauli::Z)], gp.clone()));
        stages[2].push(Term::new(-1.0, [(a, Pauli::Z)], g));
        stages[3].push(Term::new(-1.0, [(b, Pauli::Z)], gp));
    }
    let specs = stage_specs(n_data + n, n, stages);
    let mut norm: f64 = 1.0;
    for s in &specs {
        if let Some(r) = validate_norm_budget(s).worst_ratio() {
            norm = norm.max(r);
        }
    }
    let mut schedule = Schedule::new();
    for (spec, t) in specs.into_iter().zip(angles.durations) {
        schedule.push_evolve(spec.scaled(1.0 / norm), t * norm)?;
    }
    schedule.push_rotations(layer.gates.iter().flat_map(|&(a, b)| {
        [Rotation::new(a, Pauli::Z, FRAC_PI_2), Rotation::new(b, Pauli::Z, FRAC_PI_2)]
    }));
    Ok(LayerSchedule { schedule, normalization: norm, angles: angles.clone() })
}

/// Ideal `Π CZ` over the given disjoint pairs of an `n_data` register.
pub fn layer_target(gates: &[(usize, usize)], n_data: usize) -> Result<Array2<C64>> {
    let mut c = Circuit::new(n_data);
    for &(a, b) in gates {
        c.cz(a, b);
    }
    c.unitary()
}

/// CZ on `(0,1)` and `(2,3)` at once through `N` explicit ancilla qubits.
pub fn run_fourier_layer(n_anc: usize, opts: &EvolveOptions) -> Result<(ProtocolReport, ChannelOutputs)> {
    let gates = vec![(0, 1), (2, 3)];
    let angles = solve_ms_angles(n_anc)?;
    let layer = LayerSpec::new(gates.clone(), n_anc)?;
    let ls = build_fourier_layer_schedule(&layer, 4, &angles)?;
    let space = AncillaSpace::full_qubit(n_anc)?;
    let (mut report, out) = evaluate_gate("fourier-layer", &ls.schedule, &[0, 1, 2, 3], space, &layer_target(&gates, 4)?, opts, 0)?;
    report.solved_params = angle_params(&angles);
    report.solved_params.insert("normalization".into(), ls.normalization);
    Ok((report, out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitAccounting {
    pub total_time: f64,
    pub depth: usize,
    pub gate_count: usize,
    pub n_data: usize,
    pub n_anc: usize,
    /// Per-layer time over `N^{-1/2+δ_T}`.
    pub c_tilde: f64,
    /// `T / (c̃ N^{-1/2+δ_T} D)`; one when every layer uses the same time.
    pub budget_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    pub schedule: Schedule,
    pub accounting: CircuitAccounting,
}

/// One Fourier layer per CZ layer, rotations applied in between.
pub fn compile_circuit_parallel(circuit: &LayeredCircuit, n_anc: usize, delta_t: f64) -> Result<CompiledCircuit> {
    check_delta_t(delta_t)?;
    circuit.validate()?;
    let angles = solve_ms_angles(n_anc)?;
    let mut schedule = Schedule::new();
    let mut layer_time: f64 = 0.0;
    for l in &circuit.layers {
        if !l.cz.is_empty() {
            let spec = LayerSpec::new(l.cz.iter().map(|&[a, b]| (a, b)).collect(), n_anc)?;
            let ls = build_fourier_layer_schedule(&spec, circuit.n_qubits, &angles)?;
            layer_time = layer_time.max(ls.schedule.total_time());
            schedule.append(&ls.schedule);
        }
        schedule.push_rotations(l.rotations.iter().map(|r| Rotation::new(r.qubit, r.axis, r.angle)));
    }
    let depth = circuit.depth();
    let scale = (n_anc as f64).powf(-0.5 + delta_t);
    let c_tilde = layer_time / scale;
    let total_time = schedule.total_time();
    let budget_ratio = if depth == 0 { 0.0 } else { total_time / (c_tilde * scale * depth as f64) };
    Ok(CompiledCircuit {
        schedule,
        accounting: CircuitAccounting {
            total_time,
            depth,
            gate_count: circuit.gate_count(),
            n_data: circuit.n_qubits,
            n_anc,
            c_tilde,
            budget_ratio,
        },
    })
}

pub fn check_delta_t(delta_t: f64) -> Result<()> {
    if delta_t > 0.0 && delta_t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta_T = {delta_t} must lie in the open interval (0, 1)")))
    }
}

/// Mean and standard error of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

impl SampleStats {
    pub fn from_values(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { mean, standard_error: (var / n).sqrt(), samples: v.len() }
    }
}

/// Random-product-input statistics of a deterministic protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct InputEnsemble {
    /// Squared error `‖Ψ(ψ) - e^{iθ}Uψ⊗|0⟩‖²`.
    pub error: SampleStats,
    /// `|⟨Uψ⊗0|Ψ(ψ)⟩|²`.
    pub fidelity: SampleStats,
}

/// Input `j` is drawn from stream `j` of a ChaCha8 generator seeded with `seed`.
pub fn random_input_ensemble(
    out: &ChannelOutputs,
    target: &Array2<C64>,
    samples: usize,
    seed: u64,
    execution: Execution,
) -> InputEnsemble {
    let theta = out.global_phase(target);
    let n = out.data_qubits.len();
    let jobs: Vec<u64> = (0..samples as u64).collect();
    let vals = par_map_with(execution, &jobs, |&j| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j);
        let psi = random_product_state(n, &mut rng);
        let ideal = out.ideal_for(target, 0.0, psi.view());
        let got = out.output_for(psi.view());
        (out.squared_error(target, theta, psi.view()), inner(ideal.view(), got.view()).norm_sqr())
    });
    let (e, f): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
    InputEnsemble { error: SampleStats::from_values(&e), fidelity: SampleStats::from_values(&f) }
}

/// Tensor product of single-qubit Paulis, `0..4 = I, X, Y, Z`.
pub fn pauli_string(codes: &[u8]) -> Array2<C64> {
    let mut m = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for &c in codes {
        let p = match c {
            0 => [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]],
            k => Pauli::ALL[k as usize - 1].matrix(),
        };
        let d = m.nrows();
        m = Array2::from_shape_fn((2 * d, 2 * d), |(r, c)| m[[r / 2, c / 2]] * p[r % 2][c % 2]);
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwirlReport {
    pub seed: u64,
    pub error: SampleStats,
    pub pauli_codes: Vec<Vec<u8>>,
}

/// Pauli-twirled run of a deterministic protocol on input `ψ`: sample
/// `P`, feed `P|ψ⟩`, then undo with `Q† = (U P U†)†`. Sample `j` uses
/// stream `j` of a ChaCha8 generator seeded with `seed`.
pub fn twirl_randomize(
    out: &ChannelOutputs,
    target: &Array2<C64>,
    psi: &Array1<C64>,
    samples: usize,
    seed: u64,
    execution: Execution,
) -> TwirlReport {
    let theta = out.global_phase(target);
    let n = out.data_qubits.len();
    let da = out.anc_dim();
    let ideal = out.ideal_for(target, theta, psi.view());
    let u_dag = target.t().mapv(|c| c.conj());
    let jobs: Vec<u64> = (0..samples as u64).collect();
    let runs = par_map_with(execution, &jobs, |&j| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j);
        let codes: Vec<u8> = (0..n).map(|_| rng.random_range(0..4u8)).collect();
        let p = pauli_string(&codes);
        let q_dag = target.dot(&p).dot(&u_dag).t().mapv(|c| c.conj());
        let raw = out.output_for(p.dot(psi).view());
        let mut corrected = Array1::zeros(raw.len());
        for a in 0..da {
            let slice: Array1<C64> = (0..out.data_dim()).map(|i| raw[i * da + a]).collect();
            let fixed = q_dag.dot(&slice);
            for (i, v) in fixed.into_iter().enumerate() {
                corrected[i * da + a] = v;
            }
        }
        let err: f64 = (&corrected - &ideal).iter().map(|x| x.norm_sqr()).sum();
        (err, codes)
    });
    let (errs, codes): (Vec<f64>, Vec<Vec<u8>>) = runs.into_iter().unzip();
    TwirlReport { seed, error: SampleStats::from_values(&errs), pauli_codes: codes }
}

/// Input maximizing the deterministic protocol's error.
pub fn adversarial_input(out: &ChannelOutputs, target: &Array2<C64>) -> Result<Array1<C64>> {
    let g = out.deviation_gram(target, out.global_phase(target));
    let (_, vecs) = eigh_hermitian(&g)?;
    Ok(vecs.column(vecs.ncols() - 1).to_owned())
}
