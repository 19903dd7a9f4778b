//! Gate protocols compiled to Hamiltonian schedules.

pub mod circuit;
pub mod derived;
pub mod fastcz;
pub mod ms;

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::fidelity::{run_basis, ChannelOutputs};
use crate::hamiltonian::Schedule;
use crate::propagate::EvolveOptions;
use crate::spaces::AncillaSpace;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportDiagnostics {
    pub fock_leakage: f64,
    /// Largest population above the Dicke boundary level seen at segment ends.
    pub dicke_boundary_weight: f64,
    pub dropped_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProtocolReport {
    pub protocol: String,
    pub space: String,
    pub total_time: f64,
    /// Exact operator-level worst case over data inputs, phase-aligned.
    pub worst_case_error: f64,
    /// Estimate of the same from basis and Haar-random probes.
    pub probe_error: f64,
    pub fidelity: f64,
    pub solved_params: BTreeMap<String, f64>,
    pub diagnostics: ReportDiagnostics,
    pub flags: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
}

impl ProtocolReport {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.solved_params.get(key).copied()
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.flags.get(key).copied()
    }
}

/// Runs every basis input through `schedule` and scores the result
/// against `target`.
pub fn evaluate_gate(
    protocol: &str,
    schedule: &Schedule,
    data_qubits: &[usize],
    space: AncillaSpace,
    target: &Array2<C64>,
    opts: &EvolveOptions,
    seed: u64,
) -> Result<(ProtocolReport, ChannelOutputs)> {
    let outputs = run_basis(schedule, data_qubits, space, opts)?;
    let m = outputs.metrics(target, seed)?;
    let d = &outputs.diagnostics;
    let report = ProtocolReport {
        protocol: protocol.to_string(),
        space: outputs.space.kind().to_string(),
        total_time: schedule.total_time(),
        worst_case_error: m.worst_case_error,
        probe_error: m.probe_error,
        fidelity: m.process_fidelity,
        diagnostics: ReportDiagnostics {
            fock_leakage: d.fock_leakage,
            dicke_boundary_weight: d.boundary_weight,
            dropped_norm: 0.0,
        },
        flags: BTreeMap::from([("fock_cutoff_doubled".to_string(), d.cutoff_doubled)]),
        ..Default::default()
    };
    Ok((report, outputs))
}
