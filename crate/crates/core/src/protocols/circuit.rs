//! Logical circuits: an ideal reference simulator and the layered JSON
//! circuit format.
//!
//! ```json
//! {"n_qubits": 4,
//!  "layers": [{"cz": [[0, 1], [2, 3]],
//!              "rotations": [{"qubit": 0, "axis": "X", "angle": 0.5}]}]}
//! ```
//!
//! Within a layer the CZs act first, then the rotations in list order.
//! A rotation `(axis, angle)` is `exp(-i angle/2 σ_axis)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Pauli, Rotation};
use crate::propagate::rotation_matrix;
use crate::spaces::basis_vector;

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Rotation(Rotation),
    /// `exp(-i φ Z_c Σ_t Z_t)`, the primitive realized by one fast-CZ run.
    ZzPhase { control: usize, targets: Vec<usize>, phi: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn rotate(&mut self, qubit: usize, axis: Pauli, angle: f64) -> &mut Self {
        self.gates.push(Gate::Rotation(Rotation::new(qubit, axis, angle)));
        self
    }

    pub fn rotations(&mut self, rs: impl IntoIterator<Item = Rotation>) -> &mut Self {
        self.gates.extend(rs.into_iter().map(Gate::Rotation));
        self
    }

    pub fn hadamard(&mut self, qubit: usize) -> &mut Self {
        self.rotations(Rotation::hadamard(qubit))
    }

    pub fn x(&mut self, qubit: usize) -> &mut Self {
        self.rotations([Rotation::pauli(qubit, Pauli::X)])
    }

    pub fn zz_phase(&mut self, control: usize, targets: &[usize], phi: f64) -> &mut Self {
        self.gates.push(Gate::ZzPhase { control, targets: targets.to_vec(), phi });
        self
    }

    /// `Π_t CZ_{c,t}` up to global phase.
    pub fn cz_bunch(&mut self, control: usize, targets: &[usize]) -> &mut Self {
        self.zz_phase(control, targets, FRAC_PI_4);
        for &t in targets {
            self.rotate(t, Pauli::Z, -FRAC_PI_2);
        }
        self.rotate(control, Pauli::Z, -FRAC_PI_2 * targets.len() as f64)
    }

    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.cz_bunch(a, &[b])
    }

    /// CNOTs from `control` onto every target.
    pub fn fanout(&mut self, control: usize, targets: &[usize]) -> &mut Self {
        for &t in targets {
            self.hadamard(t);
        }
        self.cz_bunch(control, targets);
        for &t in targets {
            self.hadamard(t);
        }
        self
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.fanout(control, &[target])
    }

    /// Controlled phase `diag(1, 1, 1, e^{iθ})`.
    pub fn controlled_phase(&mut self, a: usize, b: usize, theta: f64) -> &mut Self {
        // diag(1,1,1,e^{iθ}) = e^{iθ/4} e^{iθ/4 Z_a Z_b} e^{-iθ/4 Z_a} e^{-iθ/4 Z_b}
        self.zz_phase(a, &[b], -theta / 4.0);
        self.rotate(a, Pauli::Z, theta / 2.0);
        self.rotate(b, Pauli::Z, theta / 2.0)
    }

    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.gates.extend(other.gates.iter().cloned());
        self
    }

    /// Gates in reverse order with each one inverted.
    pub fn inverse(&self) -> Circuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match g {
                Gate::Rotation(r) => Gate::Rotation(r.inverse()),
                Gate::ZzPhase { control, targets, phi } => Gate::ZzPhase { control: *control, targets: targets.clone(), phi: -phi },
            })
            .collect();
        Circuit { n_qubits: self.n_qubits, gates }
    }

    pub fn zz_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::ZzPhase { .. })).count()
    }

    fn check(&self) -> Result<()> {
        let ok = |q: usize| if q < self.n_qubits { Ok(()) } else { Err(Error::UnknownQubit(q)) };
        for g in &self.gates {
            match g {
                Gate::Rotation(r) => ok(r.qubit)?,
                Gate::ZzPhase { control, targets, .. } => {
                    ok(*control)?;
                    for &t in targets {
                        ok(t)?;
                        if t == *control {
                            return Err(Error::InvalidParameter(format!("qubit {t} is both control and target")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Ideal action on an `n_qubits` statevector (qubit 0 most significant).
    pub fn apply(&self, state: &Array1<C64>) -> Result<Array1<C64>> {
        self.check()?;
        let n = self.n_qubits;
        if state.len() != 1 << n {
            return Err(Error::Dimension { expected: 1 << n, got: state.len() });
        }
        let mut v = state.clone();
        let bit = |q: usize| 1usize << (n - 1 - q);
        for g in &self.gates {
            match g {
                Gate::Rotation(r) => {
                    let u = rotation_matrix(r.axis, r.angle);
                    let m = bit(r.qubit);
                    for z in 0..v.len() {
                        if z & m == 0 {
                            let (a, b) = (v[z], v[z | m]);
                            v[z] = u[0][0] * a + u[0][1] * b;
                            v[z | m] = u[1][0] * a + u[1][1] * b;
                        }
                    }
                }
                Gate::ZzPhase { control, targets, phi } => {
                    let zc = bit(*control);
                    for (z, amp) in v.iter_mut().enumerate() {
                        let sc = if z & zc == 0 { 1.0 } else { -1.0 };
                        let st: f64 = targets.iter().map(|&t| if z & bit(t) == 0 { 1.0 } else { -1.0 }).sum();
                        *amp *= C64::from_polar(1.0, -phi * sc * st);
                    }
                }
            }
        }
        Ok(v)
    }

    pub fn unitary(&self) -> Result<Array2<C64>> {
        let d = 1usize << self.n_qubits;
        let mut u = Array2::zeros((d, d));
        for j in 0..d {
            u.column_mut(j).assign(&self.apply(&basis_vector(d, j))?);
        }
        Ok(u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationEntry {
    pub qubit: usize,
    pub axis: Pauli,
    pub angle: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    #[serde(default)]
    pub cz: Vec<[usize; 2]>,
    #[serde(default)]
    pub rotations: Vec<RotationEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredCircuit {
    pub n_qubits: usize,
    #[serde(default)]
    pub layers: Vec<Layer>,
}

impl LayeredCircuit {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: LayeredCircuit =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.n_qubits];
            for &[a, b] in &layer.cz {
                for q in [a, b] {
                    if q >= self.n_qubits {
                        return Err(Error::UnknownQubit(q));
                    }
                    if used[q] {
                        return Err(Error::InvalidParameter(format!("layer {l}: qubit {q} appears in two CZs")));
                    }
                    used[q] = true;
                }
                if a == b {
                    return Err(Error::InvalidParameter(format!("layer {l}: CZ on ({a}, {a})")));
                }
            }
            if let Some(r) = layer.rotations.iter().find(|r| r.qubit >= self.n_qubits) {
                return Err(Error::UnknownQubit(r.qubit));
            }
        }
        Ok(())
    }

    /// Number of layers that contain at least one CZ.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| !l.cz.is_empty()).count()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.cz.len()).sum()
    }

    pub fn to_circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n_qubits);
        for layer in &self.layers {
            for &[a, b] in &layer.cz {
                c.cz(a, b);
            }
            c.rotations(layer.rotations.iter().map(|r| Rotation::new(r.qubit, r.axis, r.angle)));
        }
        c
    }

    /// `depth` layers, each a random perfect matching of CZs followed by a
    /// random rotation on every qubit.
    pub fn random(n_qubits: usize, depth: usize, rng: &mut impl Rng) -> Self {
        let layers = (0..depth)
            .map(|_| {
                let mut q: Vec<usize> = (0..n_qubits).collect();
                for i in (1..q.len()).rev() {
                    q.swap(i, rng.random_range(0..=i));
                }
                let cz = q.chunks_exact(2).map(|p| [p[0].min(p[1]), p[0].max(p[1])]).collect();
                let rotations = (0..n_qubits)
                    .map(|qubit| RotationEntry {
                        qubit,
                        axis: Pauli::ALL[rng.random_range(0..3)],
                        angle: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                    })
                    .collect();
                Layer { cz, rotations }
            })
            .collect();
        LayeredCircuit { n_qubits, layers }
    }
}
