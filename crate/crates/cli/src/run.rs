//! Protocol dispatch: one config point to one report row.

use std::collections::BTreeMap;

use fastham::exec::Execution;
use fastham::fidelity::ChannelOutputs;
use fastham::hamiltonian::Schedule;
use fastham::oracle::{full_state_evolve, overlap, MAX_ORACLE_QUBITS};
use fastham::propagate::{evolve, EvolveOptions};
use fastham::protocols::circuit::Circuit;
use fastham::protocols::derived::{
    compile_circuit_sequential, data_fidelity, light_cone_probe, run_ghz, run_toffoli, run_w, DerivedRun, ZzCompiler,
};
use fastham::protocols::fastcz::{
    build_fanout_schedule, build_fast_cz_schedule, cz_bunch_target, evaluate_schedule, FastCzParams, Realization,
};
use fastham::protocols::ms::{
    adversarial_input, build_fourier_layer_schedule, compile_circuit_parallel, layer_target, ms_cz_schedule,
    random_input_ensemble, run_fourier_layer, run_single_cz_exact, solve_ms_angles, twirl_randomize, LayerSpec,
    RANDOM_INPUTS, TWIRL_SAMPLES,
};
use fastham::protocols::ProtocolReport;
use fastham::spaces::{basis_vector, embed_initial_state, hybrid_dicke_to_full, AncillaSpace, HybridState};
use fastham::{Error, Result};
use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::config::{Config, Protocol};

pub const SPEC_VERSION: &str = "1.0";

pub const REPORT_HEADER: [&str; 22] = [
    "spec_version",
    "seed",
    "protocol",
    "realization",
    "space",
    "N",
    "K",
    "delta_T",
    "d_V",
    "n",
    "T",
    "fidelity",
    "worst_case_error",
    "probe_error",
    "fock_leakage",
    "dicke_boundary_weight",
    "dropped_norm",
    "paper_budget_ok",
    "time_budget",
    "oracle_overlap",
    "params",
    "warnings",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub seed: u64,
    pub protocol: String,
    pub realization: Option<String>,
    pub space: String,
    pub n_anc: usize,
    pub k: Option<usize>,
    pub delta_t: Option<f64>,
    pub d_v: Option<usize>,
    pub n: Option<usize>,
    pub total_time: f64,
    pub fidelity: Option<f64>,
    pub worst_case_error: Option<f64>,
    pub probe_error: Option<f64>,
    pub fock_leakage: f64,
    pub dicke_boundary_weight: f64,
    pub dropped_norm: f64,
    pub paper_budget_ok: Option<bool>,
    pub time_budget: Option<f64>,
    pub oracle_overlap: Option<f64>,
    pub params: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    pub fn fields(&self) -> Vec<String> {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        vec![
            SPEC_VERSION.to_string(),
            self.seed.to_string(),
            self.protocol.clone(),
            opt(self.realization.clone()),
            self.space.clone(),
            self.n_anc.to_string(),
            opt(self.k),
            opt(self.delta_t),
            opt(self.d_v),
            opt(self.n),
            self.total_time.to_string(),
            opt(self.fidelity),
            opt(self.worst_case_error),
            opt(self.probe_error),
            self.fock_leakage.to_string(),
            self.dicke_boundary_weight.to_string(),
            self.dropped_norm.to_string(),
            opt(self.paper_budget_ok),
            opt(self.time_budget),
            opt(self.oracle_overlap),
            params.join(";"),
            self.warnings.join("; "),
        ]
    }

    /// Sort key `(N, K, δ_T)`.
    pub fn key(&self) -> (usize, usize, u64) {
        (self.n_anc, self.k.unwrap_or(0), self.delta_t.map_or(0, f64::to_bits))
    }
}

/// Final amplitudes for one input, `(data_index, ancilla_index, amplitude)`.
#[derive(Clone, Debug)]
pub struct StateDump {
    pub input: String,
    pub amplitudes: Vec<(usize, usize, C64)>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub row: Row,
    pub schedule: Option<Schedule>,
    pub states: Vec<StateDump>,
}

const DUMP_FLOOR: f64 = 1e-12;

fn dump(input: &str, amps: &Array1<C64>, anc_dim: usize) -> StateDump {
    let amplitudes = amps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > DUMP_FLOOR)
        .map(|(i, &a)| (i / anc_dim, i % anc_dim, a))
        .collect();
    StateDump { input: input.to_string(), amplitudes }
}

fn plus_state(n: usize) -> Array1<C64> {
    let d = 1usize << n;
    Array1::from_elem(d, C64::new(1.0 / (d as f64).sqrt(), 0.0))
}

fn realization(cfg: &Config) -> Result<Realization> {
    cfg.realization.as_deref().unwrap_or("spin").parse()
}

fn fast_params(cfg: &Config, targets: Vec<usize>) -> Result<FastCzParams> {
    let mut p = FastCzParams::for_realization(cfg.n_anc, targets, realization(cfg)?);
    if let Some(dt) = cfg.delta_t {
        p = p.with_delta_t(dt);
    }
    if let Some(k) = cfg.k {
        p.k = k;
    }
    if let Some(dv) = cfg.d_v {
        p.v_degree = dv;
        p.flatness = (dv.max(1) - 1) / 2;
    }
    p.validate()?;
    Ok(p)
}

fn base_row(cfg: &Config, seed: u64, report: &ProtocolReport) -> Row {
    Row {
        seed,
        protocol: cfg.protocol.name().to_string(),
        realization: None,
        space: report.space.clone(),
        n_anc: cfg.n_anc,
        k: cfg.k,
        delta_t: cfg.delta_t,
        d_v: cfg.d_v,
        n: cfg.n,
        total_time: report.total_time,
        fidelity: Some(report.fidelity),
        worst_case_error: Some(report.worst_case_error),
        probe_error: Some(report.probe_error),
        fock_leakage: report.diagnostics.fock_leakage,
        dicke_boundary_weight: report.diagnostics.dicke_boundary_weight,
        dropped_norm: report.diagnostics.dropped_norm,
        paper_budget_ok: report.flag("paper_budget_ok"),
        time_budget: report.param("time_budget"),
        oracle_overlap: None,
        params: report.solved_params.clone(),
        warnings: report.warnings.clone(),
    }
}

fn fast_row(cfg: &Config, seed: u64, p: &FastCzParams, report: &ProtocolReport) -> Row {
    let mut row = base_row(cfg, seed, report);
    row.realization = cfg.realization.clone().or(Some("spin".into()));
    row.k = Some(p.k);
    row.delta_t = Some(p.delta_t);
    row.d_v = Some(p.v_degree);
    row
}

/// Overlap of the Dicke-engine output with the full-register oracle.
fn oracle_check(schedule: &Schedule, data: &[usize], n_anc: usize, psi: &Array1<C64>, opts: &EvolveOptions) -> Result<Option<f64>> {
    if data.len() + n_anc > MAX_ORACLE_QUBITS {
        return Ok(None);
    }
    let st = embed_initial_state(psi.view(), data, AncillaSpace::dicke(n_anc)?)?;
    let engine = hybrid_dicke_to_full(&evolve(&st, schedule, opts)?.state)?;
    let mut input = Array1::zeros(1usize << (data.len() + n_anc));
    for (d, &a) in psi.iter().enumerate() {
        input[d << n_anc] = a;
    }
    let reference = full_state_evolve(schedule, data, n_anc, input.view(), 1e-12)?;
    Ok(Some(overlap(engine.amplitudes().view(), reference.view())))
}

/// Output for the all-`|+⟩` data input.
fn gate_output(cfg: &Config, out: &ChannelOutputs) -> Vec<StateDump> {
    if !cfg.dump_state {
        return Vec::new();
    }
    let plus = plus_state(out.data_qubits.len());
    vec![dump("plus", &out.output_for(plus.view()), out.anc_dim())]
}

fn derived_output(cfg: &Config, seed: u64, run: DerivedRun, p: &FastCzParams) -> RunOutput {
    let mut row = base_row(cfg, seed, &run.report);
    row.realization = cfg.realization.clone().or(Some("spin".into()));
    row.k = Some(p.k);
    row.delta_t = Some(p.delta_t);
    row.d_v = Some(p.v_degree);
    let states = if cfg.dump_state {
        run.final_states.iter().enumerate().map(|(i, s)| dump(&format!("input{i}"), s.amplitudes(), s.space().dim())).collect()
    } else {
        Vec::new()
    };
    RunOutput { row, schedule: Some(run.compiled.schedule), states }
}

fn circuit_fidelity(state: &HybridState, circuit: &Circuit) -> Result<f64> {
    let ideal = circuit.apply(&basis_vector(1 << circuit.n_qubits, 0))?;
    Ok(data_fidelity(state, &ideal))
}

pub fn run(cfg: &Config, seed: u64, oracle: bool, execution: Execution) -> Result<RunOutput> {
    let opts = EvolveOptions { execution, ..EvolveOptions::default() };
    match cfg.protocol {
        Protocol::FastCz | Protocol::Fanout => {
            let n = cfg.n.unwrap_or(1);
            let p = fast_params(cfg, (1..=n).collect())?;
            let real = realization(cfg)?;
            let (s, target) = if cfg.protocol == Protocol::FastCz {
                (build_fast_cz_schedule(&p, real)?, cz_bunch_target(n)?)
            } else {
                let mut c = Circuit::new(n + 1);
                c.fanout(0, &(1..=n).collect::<Vec<_>>());
                (build_fanout_schedule(&p, real)?, c.unitary()?)
            };
            let (report, out) = evaluate_schedule(cfg.protocol.name(), &p, &s, &target, &opts)?;
            let mut row = fast_row(cfg, seed, &p, &report);
            row.n = Some(n);
            if oracle && real == Realization::Spin {
                row.oracle_overlap = oracle_check(&s.schedule, &p.data_qubits(), p.n, &plus_state(n + 1), &opts)?;
            }
            let states = gate_output(cfg, &out);
            Ok(RunOutput { row, schedule: Some(s.schedule), states })
        }
        Protocol::Ghz | Protocol::W | Protocol::Toffoli => {
            let p = fast_params(cfg, vec![1])?;
            let compiler = ZzCompiler::new(p.clone(), realization(cfg)?, opts)?;
            let (n, run) = match cfg.protocol {
                Protocol::Ghz => (cfg.n.unwrap_or(4), run_ghz as fn(usize, &ZzCompiler) -> Result<DerivedRun>),
                Protocol::W => (cfg.n.unwrap_or(3), run_w as fn(usize, &ZzCompiler) -> Result<DerivedRun>),
                _ => (cfg.n.unwrap_or(2), run_toffoli as fn(usize, &ZzCompiler) -> Result<DerivedRun>),
            };
            let mut out = derived_output(cfg, seed, run(n, &compiler)?, &p);
            out.row.n = Some(n);
            Ok(out)
        }
        Protocol::MsExact => {
            let (report, out) = run_single_cz_exact(cfg.n_anc, &opts)?;
            let schedule = ms_cz_schedule(&solve_ms_angles(cfg.n_anc)?, 0, 1, 2)?;
            let mut row = base_row(cfg, seed, &report);
            row.paper_budget_ok = None;
            if oracle {
                row.oracle_overlap = oracle_check(&schedule, &[0, 1], cfg.n_anc, &plus_state(2), &opts)?;
            }
            let states = gate_output(cfg, &out);
            Ok(RunOutput { row, schedule: Some(schedule), states })
        }
        Protocol::FourierLayer => {
            let (report, out) = run_fourier_layer(cfg.n_anc, &opts)?;
            let gates = [(0, 1), (2, 3)];
            let target = layer_target(&gates, 4)?;
            let ens = random_input_ensemble(&out, &target, RANDOM_INPUTS, seed, execution);
            let adv = adversarial_input(&out, &target)?;
            let tw = twirl_randomize(&out, &target, &adv, TWIRL_SAMPLES, seed, execution);
            let mut row = base_row(cfg, seed, &report);
            row.paper_budget_ok = None;
            for (k, v) in [
                ("random_fidelity_mean", ens.fidelity.mean),
                ("random_fidelity_se", ens.fidelity.standard_error),
                ("random_error_mean", ens.error.mean),
                ("random_error_se", ens.error.standard_error),
                ("twirl_error_mean", tw.error.mean),
                ("twirl_error_se", tw.error.standard_error),
            ] {
                row.params.insert(k.to_string(), v);
            }
            let layer = LayerSpec::new(gates.to_vec(), cfg.n_anc)?;
            let schedule = build_fourier_layer_schedule(&layer, 4, &solve_ms_angles(cfg.n_anc)?)?.schedule;
            let states = gate_output(cfg, &out);
            Ok(RunOutput { row, schedule: Some(schedule), states })
        }
        Protocol::CircuitSeq => {
            let circuit = cfg.circuit.as_ref().ok_or_else(|| Error::InvalidParameter("missing circuit".into()))?;
            let p = fast_params(cfg, vec![1])?;
            let compiler = ZzCompiler::new(p.clone(), realization(cfg)?, opts)?;
            let (compiled, acc) = compile_circuit_sequential(circuit, &compiler)?;
            let ideal = circuit.to_circuit();
            let states = compiler.run(&compiled, &[basis_vector(1 << circuit.n_qubits, 0)])?;
            let fid = circuit_fidelity(&states[0], &ideal)?;
            let report = ProtocolReport {
                protocol: "circuit-seq".into(),
                space: compiler.space().kind().to_string(),
                total_time: acc.total_time,
                worst_case_error: compiled.composite_error,
                probe_error: 1.0 - fid,
                fidelity: fid,
                ..Default::default()
            };
            let mut row = fast_row(cfg, seed, &p, &report);
            row.dropped_norm = compiled.dropped_norm;
            row.paper_budget_ok = Some(acc.within_budget);
            row.time_budget = Some(acc.gate_budget);
            row.warnings = compiled.warnings.clone();
            row.params = BTreeMap::from([
                ("depth".to_string(), acc.depth as f64),
                ("gate_count".to_string(), acc.gate_count as f64),
                ("n_data".to_string(), acc.n_data as f64),
                ("overhead".to_string(), acc.overhead),
                ("invocations".to_string(), compiled.invocations.len() as f64),
            ]);
            let dumps = if cfg.dump_state { vec![dump("zero", states[0].amplitudes(), states[0].space().dim())] } else { Vec::new() };
            Ok(RunOutput { row, schedule: Some(compiled.schedule), states: dumps })
        }
        Protocol::CircuitPar => {
            let circuit = cfg.circuit.as_ref().ok_or_else(|| Error::InvalidParameter("missing circuit".into()))?;
            let dt = cfg.delta_t.unwrap_or(0.5);
            let compiled = compile_circuit_parallel(circuit, cfg.n_anc, dt)?;
            let data: Vec<usize> = (0..circuit.n_qubits).collect();
            let space = AncillaSpace::full_qubit(cfg.n_anc)?;
            let st = embed_initial_state(basis_vector(1 << circuit.n_qubits, 0).view(), &data, space)?;
            let fin = evolve(&st, &compiled.schedule, &opts)?.state;
            let fid = circuit_fidelity(&fin, &circuit.to_circuit())?;
            let acc = &compiled.accounting;
            let report = ProtocolReport {
                protocol: "circuit-par".into(),
                space: space.kind().to_string(),
                total_time: acc.total_time,
                worst_case_error: f64::NAN,
                probe_error: 1.0 - fid,
                fidelity: fid,
                ..Default::default()
            };
            let mut row = base_row(cfg, seed, &report);
            row.delta_t = Some(dt);
            row.worst_case_error = None;
            row.paper_budget_ok = Some(acc.budget_ratio <= 1.0 + 1e-9);
            row.params = BTreeMap::from([
                ("depth".to_string(), acc.depth as f64),
                ("gate_count".to_string(), acc.gate_count as f64),
                ("c_tilde".to_string(), acc.c_tilde),
                ("budget_ratio".to_string(), acc.budget_ratio),
            ]);
            let dumps = if cfg.dump_state { vec![dump("zero", fin.amplitudes(), space.dim())] } else { Vec::new() };
            Ok(RunOutput { row, schedule: Some(compiled.schedule), states: dumps })
        }
        Protocol::LrProbe => {
            let alpha = cfg.alpha.unwrap_or(0.5);
            let d = cfg.d.unwrap_or(1);
            let probe = light_cone_probe(cfg.n_anc, alpha, d, &opts)?;
            let row = Row {
                seed,
                protocol: "lr-probe".into(),
                realization: Some("spin".into()),
                space: "full-qubit".into(),
                n_anc: cfg.n_anc,
                k: Some(2),
                delta_t: cfg.delta_t,
                d_v: Some(1),
                n: Some(2),
                total_time: probe.rescaled_time,
                fidelity: None,
                worst_case_error: None,
                probe_error: None,
                fock_leakage: 0.0,
                dicke_boundary_weight: 0.0,
                dropped_norm: 0.0,
                paper_budget_ok: None,
                time_budget: None,
                oracle_overlap: None,
                params: BTreeMap::from([
                    ("alpha".to_string(), alpha),
                    ("d".to_string(), d as f64),
                    ("lambda".to_string(), probe.lambda),
                    ("original_time".to_string(), probe.original_time),
                    ("commutator".to_string(), probe.commutator),
                    ("rescale_mismatch".to_string(), probe.rescale_mismatch),
                ]),
                warnings: Vec::new(),
            };
            Ok(RunOutput { row, schedule: Some(probe.schedule), states: Vec::new() })
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` below two usable points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [64.0, 256.0, 1024.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-0.5))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }
}
