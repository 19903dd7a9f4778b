//! Fast CZ bunch `Π_{t∈S} CZ_{c,t}` through one shared boson mode.
//!
//! Amplification: squeeze `i(N/2)(b² - b†²)` for `T_S`, displace
//! `√(2N) Z_c ⊗ p̂` for `T_CD`, antisqueeze for `T_S`; the mode then sits
//! at `x ≈ z_c x₀`. A flat odd potential `Σ_t Z_t ⊗ V(x̂)` for `T_DCZ`
//! imprints `exp(-iφ Z_c Σ_t Z_t)`, and the amplification is undone.
//! The spin realization rewrites every segment with the truncated
//! Holstein-Primakoff series and rescales it onto the coupling budget.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use ndarray::{Array1, Array2};
use ndarray_linalg::{Solve, SVD};
use num_complex::Complex64 as C64;

use super::circuit::Circuit;
use super::ms::check_delta_t;
use super::{evaluate_gate, ProtocolReport};
use crate::error::{Error, Result};
use crate::fidelity::ChannelOutputs;
use crate::hamiltonian::{
    substitute_boson_with_spin, validate_norm_budget, AncillaPolynomial, HamiltonianSpec, Pauli, Rotation, Schedule, Term,
};
use crate::linalg::I;
use crate::propagate::EvolveOptions;
use crate::spaces::{build_collective_ops, default_fock_cutoff, AncillaSpace};

pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Realization {
    /// Single truncated boson mode.
    Boson,
    /// `N` spin-1/2 ancillae in the Dicke manifold.
    Spin,
}

impl Realization {
    pub fn name(&self) -> &'static str {
        match self {
            Realization::Boson => "boson",
            Realization::Spin => "spin",
        }
    }
}

impl std::str::FromStr for Realization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" => Ok(Realization::Boson),
            "spin" => Ok(Realization::Spin),
            _ => Err(Error::InvalidParameter(format!("realization `{s}` is not `boson` or `spin`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FastCzParams {
    /// Ancilla count.
    pub n: usize,
    /// Locality of the spin realization.
    pub k: usize,
    pub delta_t: f64,
    pub control: usize,
    pub targets: Vec<usize>,
    pub v_degree: usize,
    pub flatness: usize,
    /// Squeezing to `e^{2r} = N^{squeeze_exponent}`.
    pub squeeze_exponent: f64,
    /// Wavepacket centre `x₀ = position_scale · N^{position_exponent}`.
    pub position_scale: f64,
    pub position_exponent: f64,
}

impl FastCzParams {
    /// Defaults for the spin realization: a cubic potential fits inside
    /// `K = 9`, squeezing `e^{2r} = N^{1-δ_T}` and `x₀ = N^{(1-δ)/2}` keep
    /// the wavepacket near half the Dicke boundary level.
    pub fn new(n: usize, targets: Vec<usize>) -> Self {
        let delta_t = 0.5;
        Self {
            n,
            k: 9,
            delta_t,
            control: 0,
            targets,
            v_degree: 3,
            flatness: 1,
            squeeze_exponent: 1.0 - delta_t,
            position_scale: 1.0,
            position_exponent: 0.5 - delta_t / 8.0,
        }
    }

    /// Boson defaults: degree-7 potential flat to third order, stronger squeezing.
    pub fn tuned_boson(n: usize, targets: Vec<usize>) -> Self {
        let p = Self::new(n, targets);
        Self { v_degree: 7, flatness: 3, squeeze_exponent: 1.0 - p.delta_t / 2.0, ..p }
    }

    pub fn for_realization(n: usize, targets: Vec<usize>, realization: Realization) -> Self {
        match realization {
            Realization::Boson => Self::tuned_boson(n, targets),
            Realization::Spin => Self::new(n, targets),
        }
    }

    /// Same stage knobs with a new `δ_T`.
    pub fn with_delta_t(mut self, delta_t: f64) -> Self {
        let tuned = self.squeeze_exponent == 1.0 - self.delta_t / 2.0;
        self.delta_t = delta_t;
        self.squeeze_exponent = if tuned { 1.0 - delta_t / 2.0 } else { 1.0 - delta_t };
        self.position_exponent = 0.5 - delta_t / 8.0;
        self
    }

    /// Dicke-boundary exponent `δ = δ_T / 4`.
    pub fn delta(&self) -> f64 {
        self.delta_t / 4.0
    }

    /// `floor(N^{1-δ})`
    pub fn boundary_level(&self) -> usize {
        (self.n as f64).powf(1.0 - self.delta()).floor() as usize
    }

    /// `floor((K - 2) / 2)`
    pub fn k_hp(&self) -> usize {
        self.k.saturating_sub(2) / 2
    }

    pub fn data_qubits(&self) -> Vec<usize> {
        std::iter::once(self.control).chain(self.targets.iter().copied()).collect()
    }

    pub fn time_budget(&self) -> f64 {
        (self.n as f64).powf(-1.0 + self.delta_t)
    }

    pub fn validate(&self) -> Result<()> {
        check_delta_t(self.delta_t)?;
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("N = {} ancillae is too few", self.n)));
        }
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("locality K = {} must be at least 2", self.k)));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidParameter("target set is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::from([self.control]);
        for &t in &self.targets {
            if !seen.insert(t) {
                return Err(Error::InvalidParameter(format!("qubit {t} repeated among control and targets")));
            }
        }
        if self.v_degree % 2 == 0 || self.v_degree < 2 * self.flatness + 1 {
            return Err(Error::InvalidParameter(format!(
                "potential degree {} must be odd and at least 2r+1 = {}",
                self.v_degree,
                2 * self.flatness + 1
            )));
        }
        if !(self.position_scale > 0.0 && self.squeeze_exponent >= 0.0) {
            return Err(Error::InvalidParameter("stage scales must be positive".into()));
        }
        Ok(())
    }
}

/// Odd polynomial `V(x) = Σ_j coeffs[j] x^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub coeffs: Vec<f64>,
    pub x0: f64,
    /// `V(x₀)`
    pub value: f64,
    /// Derivatives `1..=flatness` vanish at `±x₀`.
    pub flatness: usize,
    pub condition: f64,
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `k`-th derivative.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        let mut s = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(k) {
            let f: f64 = ((j - k + 1)..=j).map(|v| v as f64).product();
            s += c * f * x.powi((j - k) as i32);
        }
        s
    }

    /// Time giving phase `φ = T V(x₀)`.
    pub fn phase_time(&self, phi: f64) -> f64 {
        phi.abs() / self.value
    }

    pub fn polynomial(&self) -> AncillaPolynomial {
        let x = AncillaPolynomial::xq();
        let mut p = AncillaPolynomial::zero();
        let mut power = AncillaPolynomial::identity();
        for (j, &c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                power = &power * &x;
            }
            if c != 0.0 {
                p = &p + &power.scale_re(c);
            }
        }
        p
    }
}

/// `V(x) = √(2N) x + …`, odd of degree `d_V`, flat at `±x₀`.
///
/// All `(d_V - 1)/2` free coefficients go into flatness, so the achieved
/// order is `(d_V - 1)/2 ≥ r`. Solved in `u = x/x₀`.
pub fn design_potential(n: usize, x0: f64, d_v: usize, r: usize) -> Result<Potential> {
    if d_v % 2 == 0 || d_v < 2 * r + 1 {
        return Err(Error::InvalidParameter(format!("potential degree {d_v} must be odd and at least 2r+1 = {}", 2 * r + 1)));
    }
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::InvalidParameter(format!("wavepacket centre x0 = {x0} must be positive")));
    }
    let m = (d_v - 1) / 2;
    let fall = |j: usize, k: usize| -> f64 { ((j - k + 1)..=j).map(|v| v as f64).product() };
    // b_1 = 1; unknowns b_3, b_5, …, b_{d_V}; d^k/du^k Σ b_j u^j |_{u=1} = 0
    let mut b = vec![1.0];
    let mut condition = 1.0;
    if m > 0 {
        let a = Array2::from_shape_fn((m, m), |(k, i)| {
            let j = 2 * i + 3;
            let k = k + 1;
            if j >= k {
                fall(j, k)
            } else {
                0.0
            }
        });
        let rhs = Array1::from_shape_fn(m, |k| if k == 0 { -1.0 } else { 0.0 });
        let (_, s, _) = a.svd(false, false)?;
        condition = s[0] / s[m - 1];
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        b.extend(a.solve(&rhs)?.iter());
    }
    let lead = (2.0 * n as f64).sqrt() * x0;
    let mut coeffs = vec![0.0; d_v + 1];
    for (i, bi) in b.iter().enumerate() {
        let j = 2 * i + 1;
        coeffs[j] = lead * bi / x0.powi(j as i32);
    }
    let value = lead * b.iter().sum::<f64>();
    Ok(Potential { coeffs, x0, value, flatness: m, condition })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stages {
    /// Squeezing parameter `r = N T_S`.
    pub squeeze: f64,
    pub t_s: f64,
    pub t_cd: f64,
    pub t_dcz: f64,
    pub potential: Potential,
}

impl Stages {
    pub fn total_time(&self) -> f64 {
        2.0 * (2.0 * self.t_s + self.t_cd) + self.t_dcz
    }
}

/// Stage durations for phase `φ` (boson units).
pub fn solve_stages(p: &FastCzParams, phi: f64) -> Result<Stages> {
    p.validate()?;
    let nf = p.n as f64;
    let squeeze = 0.5 * p.squeeze_exponent * nf.ln();
    let x0 = p.position_scale * nf.powf(p.position_exponent);
    let potential = design_potential(p.n, x0, p.v_degree, p.flatness)?;
    let t_s = squeeze / nf;
    // displacement √(2N) T_CD, magnified by e^{r} on antisqueezing
    let t_cd = x0 * (-squeeze).exp() / (2.0 * nf).sqrt();
    let t_dcz = potential.phase_time(phi);
    Ok(Stages { squeeze, t_s, t_cd, t_dcz, potential })
}

fn boson_specs(p: &FastCzParams, stages: &Stages, phi: f64) -> (HamiltonianSpec, HamiltonianSpec, HamiltonianSpec) {
    let n_tot = p.n + 1 + p.targets.len();
    let nf = p.n as f64;
    let b = AncillaPolynomial::b();
    let bd = AncillaPolynomial::bdag();
    let hs = (&(&b * &b) - &(&bd * &bd)).scale(I);
    let squeeze = HamiltonianSpec::new(n_tot, p.n, p.k).with_term(Term::new(nf / 2.0, [], hs));
    let displace =
        HamiltonianSpec::new(n_tot, p.n, p.k).with_term(Term::new((2.0 * nf).sqrt(), [(p.control, Pauli::Z)], AncillaPolynomial::pq()));
    let v = stages.potential.polynomial();
    let sign = if phi < 0.0 { -1.0 } else { 1.0 };
    let mut phase = HamiltonianSpec::new(n_tot, p.n, p.k);
    for &t in &p.targets {
        phase.push(sign, [(t, Pauli::Z)], v.clone());
    }
    (squeeze, displace, phase)
}

#[derive(Clone, Debug)]
pub struct FastCzSchedule {
    pub schedule: Schedule,
    pub stages: Stages,
    pub realization: Realization,
    /// `Σ_segments T · ‖part removed by the locality cap‖`.
    pub dropped_norm: f64,
    /// Largest factor by which a spin segment's couplings were divided.
    pub max_normalization: f64,
    pub warnings: Vec<String>,
}

impl FastCzSchedule {
    pub fn paper_budget_ok(&self, p: &FastCzParams) -> bool {
        self.schedule.total_time() <= p.time_budget()
    }
}

/// Schedule for `exp(-iφ Z_c Σ_t Z_t)` with no rotations.
pub fn build_zz_schedule(p: &FastCzParams, phi: f64, realization: Realization) -> Result<FastCzSchedule> {
    let stages = solve_stages(p, phi)?;
    let (squeeze, displace, phase) = boson_specs(p, &stages, phi);
    let mut amp = Schedule::new();
    amp.push_evolve(squeeze.clone(), stages.t_s)?;
    amp.push_evolve(displace, stages.t_cd)?;
    amp.push_evolve(squeeze.negated(), stages.t_s)?;
    let mut schedule = amp.clone();
    schedule.push_evolve(phase, stages.t_dcz)?;
    schedule.append(&amp.reversed());
    let mut out = FastCzSchedule { schedule, stages, realization, dropped_norm: 0.0, max_normalization: 1.0, warnings: Vec::new() };
    if realization == Realization::Spin {
        spin_realize(p, &mut out)?;
    }
    Ok(out)
}

fn spin_realize(p: &FastCzParams, out: &mut FastCzSchedule) -> Result<()> {
    let k_hp = p.k_hp();
    let window = p.boundary_level();
    let mut cache: Vec<(HamiltonianSpec, HamiltonianSpec, f64, f64)> = Vec::new();
    let mut dropped = 0.0;
    let mut max_norm: f64 = 0.0;
    let mut warnings = Vec::new();
    let schedule = out.schedule.map_specs(|spec, t| {
        if let Some((_, s, r, d)) = cache.iter().find(|(b, ..)| b == spec) {
            dropped += d * t;
            return Ok((s.clone(), t * r));
        }
        let sub = substitute_boson_with_spin(spec, k_hp, window, f64::INFINITY)?;
        sub.spec.check_locality()?;
        let ratio = validate_norm_budget(&sub.spec).worst_ratio().filter(|r| *r > 0.0).unwrap_or(1.0);
        let normalized = sub.spec.scaled(1.0 / ratio);
        max_norm = max_norm.max(ratio);
        dropped += sub.dropped_norm * t;
        warnings.extend(sub.warning);
        cache.push((spec.clone(), normalized.clone(), ratio, sub.dropped_norm));
        Ok((normalized, t * ratio))
    })?;
    out.schedule = schedule;
    out.dropped_norm = dropped;
    out.max_normalization = max_norm;
    out.warnings = warnings;
    Ok(())
}

/// `Π_{t∈S} CZ_{c,t}`: the ZZ schedule at `φ = π/4` plus `R_z` compensation.
pub fn build_fast_cz_schedule(p: &FastCzParams, realization: Realization) -> Result<FastCzSchedule> {
    let mut s = build_zz_schedule(p, FRAC_PI_4, realization)?;
    s.schedule.push_rotations(cz_compensation(p.control, &p.targets));
    Ok(s)
}

fn cz_compensation(control: usize, targets: &[usize]) -> Vec<Rotation> {
    let mut r: Vec<Rotation> = targets.iter().map(|&t| Rotation::new(t, Pauli::Z, -FRAC_PI_2)).collect();
    r.push(Rotation::new(control, Pauli::Z, -FRAC_PI_2 * targets.len() as f64));
    r
}

/// CNOT from the control onto every target.
pub fn build_fanout_schedule(p: &FastCzParams, realization: Realization) -> Result<FastCzSchedule> {
    let mut s = build_fast_cz_schedule(p, realization)?;
    let h: Vec<Rotation> = p.targets.iter().flat_map(|&t| Rotation::hadamard(t)).collect();
    let mut full = Schedule::new();
    full.push_rotations(h.clone());
    full.append(&s.schedule);
    full.push_rotations(h);
    s.schedule = full;
    Ok(s)
}

pub fn ancilla_space(p: &FastCzParams, realization: Realization) -> AncillaSpace {
    match realization {
        Realization::Boson => AncillaSpace::Fock(default_fock_cutoff(p.n)),
        Realization::Spin => AncillaSpace::Dicke(p.n),
    }
}

fn stage_params(p: &FastCzParams, s: &FastCzSchedule) -> BTreeMap<String, f64> {
    let st = &s.stages;
    BTreeMap::from([
        ("T_S".to_string(), st.t_s),
        ("T_CD".to_string(), st.t_cd),
        ("T_DCZ".to_string(), st.t_dcz),
        ("squeeze_r".to_string(), st.squeeze),
        ("x0".to_string(), st.potential.x0),
        ("V_x0".to_string(), st.potential.value),
        ("V_condition".to_string(), st.potential.condition),
        ("V_flatness".to_string(), st.potential.flatness as f64),
        ("K_hp".to_string(), p.k_hp() as f64),
        ("boundary_level".to_string(), p.boundary_level() as f64),
        ("time_budget".to_string(), p.time_budget()),
        ("max_normalization".to_string(), s.max_normalization),
    ])
}

/// Runs one ZZ-type schedule over every basis input and scores it.
pub fn evaluate_schedule(
    protocol: &str,
    p: &FastCzParams,
    s: &FastCzSchedule,
    target: &Array2<C64>,
    opts: &EvolveOptions,
) -> Result<(ProtocolReport, ChannelOutputs)> {
    let mut opts = opts.clone();
    if s.realization == Realization::Spin {
        opts.boundary_level = Some(p.boundary_level());
    }
    let data = p.data_qubits();
    let (mut report, out) = evaluate_gate(protocol, &s.schedule, &data, ancilla_space(p, s.realization), target, &opts, 0)?;
    report.solved_params = stage_params(p, s);
    report.diagnostics.dropped_norm = s.dropped_norm;
    report.flags.insert("paper_budget_ok".into(), s.paper_budget_ok(p));
    report.flags.insert("paper_budget_infeasible".into(), !s.paper_budget_ok(p));
    report.warnings.extend(s.warnings.iter().cloned());
    Ok((report, out))
}

/// Ideal `Π_t CZ_{c,t}` on the register `[control, targets…]`.
pub fn cz_bunch_target(n_targets: usize) -> Result<Array2<C64>> {
    let mut c = Circuit::new(n_targets + 1);
    c.cz_bunch(0, &(1..=n_targets).collect::<Vec<_>>());
    c.unitary()
}

pub fn run_fast_cz(p: &FastCzParams, realization: Realization, opts: &EvolveOptions) -> Result<(ProtocolReport, ChannelOutputs)> {
    let s = build_fast_cz_schedule(p, realization)?;
    evaluate_schedule("fast-cz", p, &s, &cz_bunch_target(p.targets.len())?, opts)
}

pub fn run_fanout(p: &FastCzParams, realization: Realization, opts: &EvolveOptions) -> Result<(ProtocolReport, ChannelOutputs)> {
    let s = build_fanout_schedule(p, realization)?;
    let mut c = Circuit::new(p.targets.len() + 1);
    c.fanout(0, &(1..=p.targets.len()).collect::<Vec<_>>());
    evaluate_schedule("fanout", p, &s, &c.unitary()?, opts)
}

/// Variance of `T V(x̂)` in the coherent state centred at `x₀`.
pub fn phase_variance(potential: &Potential, t: f64, cutoff: usize) -> Result<f64> {
    let ops = build_collective_ops(AncillaSpace::Fock(cutoff))?;
    let v = potential.polynomial().to_sparse(&ops)?;
    // coherent state |α⟩, α = x₀/√2, built by recursion on Fock amplitudes
    let alpha = potential.x0 / 2f64.sqrt();
    let mut psi = Array1::<C64>::zeros(cutoff + 1);
    psi[0] = C64::new((-alpha * alpha / 2.0).exp(), 0.0);
    for k in 1..=cutoff {
        psi[k] = psi[k - 1] * alpha / (k as f64).sqrt();
    }
    let vpsi = v.apply(psi.view());
    let mean = crate::linalg::inner(psi.view(), vpsi.view()).re;
    let sq = crate::linalg::inner(vpsi.view(), vpsi.view()).re;
    Ok(t * t * (sq - mean * mean))
}
