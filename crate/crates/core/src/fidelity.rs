//! Gate-level figures of merit from the outputs of every computational
//! basis input.
//!
//! With `Ψ_j` the hybrid output for data input `|j⟩`, the protocol acts on
//! an arbitrary input by linearity, `Ψ(ψ) = Σ_j ψ_j Ψ_j`. Kraus operators
//! are `K_a[i][j] = ⟨i, a|Ψ_j⟩`.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::exec::par_map_with;
use crate::hamiltonian::Schedule;
use crate::linalg::{eigh_hermitian, inner, norm, ZERO};
use crate::propagate::{evolve, Diagnostics, EvolveOptions};
use crate::spaces::{basis_vector, embed_initial_state, AncillaSpace};

pub const HAAR_PROBES: usize = 20;

#[derive(Clone, Debug)]
pub struct ChannelOutputs {
    pub data_qubits: Vec<usize>,
    pub space: AncillaSpace,
    /// `outputs[j]` is the hybrid amplitude vector for input `|j⟩ ⊗ |0⟩`.
    pub outputs: Vec<Array1<C64>>,
    pub diagnostics: Diagnostics,
}

fn merge(into: &mut Diagnostics, d: &Diagnostics) {
    into.fock_leakage = into.fock_leakage.max(d.fock_leakage);
    into.boundary_weight = into.boundary_weight.max(d.boundary_weight);
    into.krylov_blocks += d.krylov_blocks;
    into.cutoff_doubled |= d.cutoff_doubled;
    into.fock_cutoff = match (into.fock_cutoff, d.fock_cutoff) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
}

/// Evolves every computational basis input of the data register.
pub fn run_basis(schedule: &Schedule, data_qubits: &[usize], space: AncillaSpace, opts: &EvolveOptions) -> Result<ChannelOutputs> {
    let dim = 1usize << data_qubits.len();
    let inputs: Vec<usize> = (0..dim).collect();
    let run = |space: AncillaSpace, opts: &EvolveOptions| {
        par_map_with(opts.execution, &inputs, |&j| {
            let st = embed_initial_state(basis_vector(dim, j).view(), data_qubits, space)?;
            evolve(&st, schedule, opts)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()
    };
    let mut runs = run(space, opts)?;
    let mut space = space;
    // a cutoff retry on some inputs: redo all of them at the larger cutoff
    if let AncillaSpace::Fock(c) = space {
        if runs.iter().any(|r| r.diagnostics.cutoff_doubled) {
            space = AncillaSpace::Fock(2 * c);
            runs = run(space, &EvolveOptions { fock_retry: false, ..opts.clone() })?;
            for r in &mut runs {
                r.diagnostics.cutoff_doubled = true;
            }
        }
    }
    let mut diagnostics = Diagnostics::default();
    for r in &runs {
        merge(&mut diagnostics, &r.diagnostics);
    }
    Ok(ChannelOutputs {
        data_qubits: data_qubits.to_vec(),
        space,
        outputs: runs.into_iter().map(|r| r.state.into_amplitudes()).collect(),
        diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateMetrics {
    /// `Σ_a |Tr(U† K_a)|² / d²`.
    pub process_fidelity: f64,
    /// `max_ψ ‖Ψ(ψ) - e^{iθ} Uψ ⊗ |0⟩‖` over all normalized data inputs.
    pub worst_case_error: f64,
    /// The same maximum over the basis and Haar-random probe inputs.
    pub probe_error: f64,
    /// `θ = arg Tr(U† K_0)`.
    pub global_phase: f64,
    /// Smallest ancilla return probability over basis inputs.
    pub min_ancilla_return: f64,
}

impl ChannelOutputs {
    pub fn data_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn anc_dim(&self) -> usize {
        self.space.dim()
    }

    /// Hybrid output for an arbitrary data input.
    pub fn output_for(&self, psi: ArrayView1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.outputs[0].len());
        for (j, &c) in psi.iter().enumerate() {
            if c != ZERO {
                out.scaled_add(c, &self.outputs[j]);
            }
        }
        out
    }

    pub fn kraus(&self, a: usize) -> Array2<C64> {
        let (d, da) = (self.data_dim(), self.anc_dim());
        Array2::from_shape_fn((d, d), |(i, j)| self.outputs[j][i * da + a])
    }

    pub fn global_phase(&self, target: &Array2<C64>) -> f64 {
        trace_overlap(target, &self.kraus(0)).arg()
    }

    /// Ideal output `e^{iθ} Uψ ⊗ |0⟩`.
    pub fn ideal_for(&self, target: &Array2<C64>, theta: f64, psi: ArrayView1<C64>) -> Array1<C64> {
        let da = self.anc_dim();
        let u_psi = target.dot(&psi);
        let ph = C64::from_polar(1.0, theta);
        let mut out = Array1::zeros(self.data_dim() * da);
        for (i, &v) in u_psi.iter().enumerate() {
            out[i * da] = v * ph;
        }
        out
    }

    /// `‖Ψ(ψ) - e^{iθ} Uψ ⊗ |0⟩‖²`.
    pub fn squared_error(&self, target: &Array2<C64>, theta: f64, psi: ArrayView1<C64>) -> f64 {
        let diff = self.output_for(psi) - self.ideal_for(target, theta, psi);
        diff.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Gram matrix `G = W†W` of the deviation map `W = Ψ - e^{iθ} U ⊗ |0⟩`.
    pub fn deviation_gram(&self, target: &Array2<C64>, theta: f64) -> Array2<C64> {
        let d = self.data_dim();
        let cols: Vec<Array1<C64>> = (0..d)
            .map(|j| {
                let e = basis_vector(d, j);
                self.outputs[j].clone() - self.ideal_for(target, theta, e.view())
            })
            .collect();
        Array2::from_shape_fn((d, d), |(i, j)| inner(cols[i].view(), cols[j].view()))
    }

    pub fn metrics(&self, target: &Array2<C64>, seed: u64) -> Result<GateMetrics> {
        let d = self.data_dim();
        let da = self.anc_dim();
        let mut fpro = 0.0;
        for a in 0..da {
            fpro += trace_overlap(target, &self.kraus(a)).norm_sqr();
        }
        fpro /= (d * d) as f64;
        let theta = self.global_phase(target);
        let gram = self.deviation_gram(target, theta);
        let (vals, _) = eigh_hermitian(&gram)?;
        let worst = vals.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt();

        let mut probe: f64 = 0.0;
        for j in 0..d {
            probe = probe.max(gram[[j, j]].re.max(0.0).sqrt());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..HAAR_PROBES {
            let psi = haar_state(d, &mut rng);
            probe = probe.max(self.squared_error(target, theta, psi.view()).sqrt());
        }
        let min_return = self
            .outputs
            .iter()
            .map(|o| (0..d).map(|i| o[i * da].norm_sqr()).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        Ok(GateMetrics {
            process_fidelity: fpro.clamp(0.0, 1.0),
            worst_case_error: worst,
            probe_error: probe,
            global_phase: theta,
            min_ancilla_return: min_return,
        })
    }
}

/// `Tr(U† K)`
pub fn trace_overlap(u: &Array2<C64>, k: &Array2<C64>) -> C64 {
    u.iter().zip(k.iter()).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

/// Haar-random pure state of dimension `d`.
pub fn haar_state(d: usize, rng: &mut ChaCha8Rng) -> Array1<C64> {
    let v: Array1<C64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let n = norm(v.view());
    v.mapv(|x| x / n)
}

/// Product of independent Haar-random single-qubit states.
pub fn random_product_state(n_qubits: usize, rng: &mut ChaCha8Rng) -> Array1<C64> {
    let mut v = Array1::from_elem(1, C64::new(1.0, 0.0));
    for _ in 0..n_qubits {
        let q = haar_state(2, rng);
        let mut next = Array1::zeros(v.len() * 2);
        for (i, &a) in v.iter().enumerate() {
            next[2 * i] = a * q[0];
            next[2 * i + 1] = a * q[1];
        }
        v = next;
    }
    v
}

/// Reduced density matrix of the data register, tracing out the ancilla.
pub fn reduced_data_density(amps: ArrayView1<C64>, data_dim: usize) -> Array2<C64> {
    let da = amps.len() / data_dim;
    Array2::from_shape_fn((data_dim, data_dim), |(i, j)| {
        (0..da).fold(ZERO, |acc, a| acc + amps[i * da + a] * amps[j * da + a].conj())
    })
}

/// Von Neumann entropy (nats) of the first qubit of a pure data state.
pub fn first_qubit_entropy(data_state: ArrayView1<C64>) -> Result<f64> {
    let d = data_state.len();
    let half = d / 2;
    let rho = Array2::from_shape_fn((2, 2), |(a, b)| {
        (0..half).fold(ZERO, |acc, r| acc + data_state[a * half + r] * data_state[b * half + r].conj())
    });
    let (vals, _) = eigh_hermitian(&rho)?;
    Ok(vals.iter().filter(|&&p| p > 1e-300).map(|&p| -p * p.ln()).sum())
}
