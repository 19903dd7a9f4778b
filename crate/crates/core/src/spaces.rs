//! Ancilla Hilbert spaces, their collective operators, and the hybrid
//! data ⊗ ancilla state.
//!
//! Qubit registers are indexed most-significant-first: qubit at position `p`
//! of an `n`-qubit register is bit `n - 1 - p` of the basis index, so
//! `|q0 q1 … ⟩` reads as a binary number. The hybrid amplitude index is
//! `data_index * ancilla_dim + ancilla_index`.

use ndarray::{s, Array1, ArrayView1};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Pauli;
use crate::linalg::{norm, SparseOp, I, ONE, ZERO};

pub const MAX_FULL_QUBITS: usize = 16;
pub const MAX_DATA_QUBITS: usize = 14;
pub const MAX_EMBED_QUBITS: usize = 14;

/// Representation of the ancilla register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "size", rename_all = "snake_case")]
pub enum AncillaSpace {
    /// Permutation-symmetric subspace of `N` qubits, basis `m = 0..=N`
    /// with `Z|m⟩ = (N - 2m)|m⟩`.
    Dicke(usize),
    /// Boson mode truncated to occupation `0..=M`.
    Fock(usize),
    /// All `2^N` states of `N` qubits.
    FullQubit(usize),
}

impl AncillaSpace {
    pub fn dicke(n: usize) -> Result<Self> {
        Self::Dicke(n).validated()
    }

    pub fn fock(cutoff: usize) -> Result<Self> {
        Self::Fock(cutoff).validated()
    }

    pub fn full_qubit(n: usize) -> Result<Self> {
        Self::FullQubit(n).validated()
    }

    /// Fock space with the default cutoff `ceil(8√N) + 16` for `N` ancillae.
    pub fn fock_for(n_anc: usize) -> Self {
        Self::Fock(default_fock_cutoff(n_anc))
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Dicke(0) | Self::Fock(0) | Self::FullQubit(0) => {
                Err(Error::InvalidSpace(format!("{self:?}: size must be positive")))
            }
            Self::FullQubit(n) if n > MAX_FULL_QUBITS => Err(Error::SizeGuard {
                what: "full-qubit ancilla count",
                value: n,
                limit: MAX_FULL_QUBITS,
            }),
            s => Ok(s),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::Dicke(n) => n + 1,
            Self::Fock(m) => m + 1,
            Self::FullQubit(n) => 1 << n,
        }
    }

    /// Number of physical ancilla qubits, if the space is qubit-based.
    pub fn n_qubits(&self) -> Option<usize> {
        match *self {
            Self::Dicke(n) | Self::FullQubit(n) => Some(n),
            Self::Fock(_) => None,
        }
    }

    pub fn is_spin(&self) -> bool {
        !matches!(self, Self::Fock(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Dicke(_) => "Dicke",
            Self::Fock(_) => "Fock",
            Self::FullQubit(_) => "full-qubit",
        }
    }

    /// Excitation number of each basis state: `m` (Dicke), `n` (Fock),
    /// popcount (full qubit).
    pub fn excitation(&self, index: usize) -> usize {
        match self {
            Self::Dicke(_) | Self::Fock(_) => index,
            Self::FullQubit(_) => index.count_ones() as usize,
        }
    }
}

pub fn default_fock_cutoff(n_anc: usize) -> usize {
    (8.0 * (n_anc as f64).sqrt()).ceil() as usize + 16
}

/// Collective operators of an ancilla space, stored sparse.
#[derive(Clone, Debug)]
pub enum CollectiveOps {
    /// Dicke or full-qubit collective Pauli sums `X = Σ X_i` etc.
    Spin {
        space: AncillaSpace,
        x: SparseOp,
        y: SparseOp,
        z: SparseOp,
    },
    /// Truncated boson mode.
    Boson {
        cutoff: usize,
        b: SparseOp,
        bdag: SparseOp,
        x: SparseOp,
        p: SparseOp,
        n: SparseOp,
    },
}

pub fn build_collective_ops(space: AncillaSpace) -> Result<CollectiveOps> {
    let space = space.validated()?;
    Ok(match space {
        AncillaSpace::Dicke(n) => {
            let ladder: Vec<(usize, f64)> =
                (0..n).map(|m| (m, (((m + 1) * (n - m)) as f64).sqrt())).collect();
            let x = SparseOp::from_triplets(
                n + 1,
                ladder.iter().flat_map(|&(m, v)| [(m + 1, m, C64::new(v, 0.0)), (m, m + 1, C64::new(v, 0.0))]),
            );
            let y = SparseOp::from_triplets(
                n + 1,
                ladder.iter().flat_map(|&(m, v)| [(m + 1, m, I * v), (m, m + 1, -I * v)]),
            );
            let z = SparseOp::from_diag(
                &(0..=n).map(|m| C64::new(n as f64 - 2.0 * m as f64, 0.0)).collect::<Vec<_>>(),
            );
            CollectiveOps::Spin { space, x, y, z }
        }
        AncillaSpace::FullQubit(n) => {
            let mut x = SparseOp::zeros(1 << n);
            let mut y = SparseOp::zeros(1 << n);
            let mut z = SparseOp::zeros(1 << n);
            for site in 0..n {
                x.add_scaled(&site_pauli(n, site, Pauli::X), ONE);
                y.add_scaled(&site_pauli(n, site, Pauli::Y), ONE);
                z.add_scaled(&site_pauli(n, site, Pauli::Z), ONE);
            }
            CollectiveOps::Spin { space, x, y, z }
        }
        AncillaSpace::Fock(cutoff) => {
            let dim = cutoff + 1;
            let b = SparseOp::from_triplets(
                dim,
                (1..dim).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))),
            );
            let bdag = b.adjoint();
            let r2 = std::f64::consts::FRAC_1_SQRT_2;
            let mut x = b.scale(C64::new(r2, 0.0));
            x.add_scaled(&bdag, C64::new(r2, 0.0));
            let mut p = b.scale(-I * r2);
            p.add_scaled(&bdag, I * r2);
            let n = bdag.matmul(&b);
            CollectiveOps::Boson { cutoff, b, bdag, x, p, n }
        }
    })
}

/// Single-site Pauli on site `site` of an `n`-qubit register (MSB-first).
pub fn site_pauli(n: usize, site: usize, axis: Pauli) -> SparseOp {
    assert!(site < n);
    let bit = 1usize << (n - 1 - site);
    let dim = 1usize << n;
    match axis {
        Pauli::X => SparseOp::from_triplets(dim, (0..dim).map(|i| (i ^ bit, i, ONE))),
        Pauli::Y => SparseOp::from_triplets(
            dim,
            (0..dim).map(|i| (i ^ bit, i, if i & bit == 0 { I } else { -I })),
        ),
        Pauli::Z => SparseOp::from_diag(
            &(0..dim).map(|i| if i & bit == 0 { ONE } else { -ONE }).collect::<Vec<_>>(),
        ),
    }
}

impl CollectiveOps {
    pub fn space(&self) -> AncillaSpace {
        match self {
            Self::Spin { space, .. } => *space,
            Self::Boson { cutoff, .. } => AncillaSpace::Fock(*cutoff),
        }
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    pub fn spin(&self, axis: Pauli) -> Option<&SparseOp> {
        match self {
            Self::Spin { x, y, z, .. } => Some(match axis {
                Pauli::X => x,
                Pauli::Y => y,
                Pauli::Z => z,
            }),
            Self::Boson { .. } => None,
        }
    }

    /// `Σ_i w_i P_i` on the ancilla sites. Dicke spaces only accept uniform
    /// weights.
    pub fn weighted(&self, axis: Pauli, weights: &[f64]) -> Result<SparseOp> {
        let space = self.space();
        match space {
            AncillaSpace::FullQubit(n) => {
                if weights.len() != n {
                    return Err(Error::Dimension { expected: n, got: weights.len() });
                }
                let mut op = SparseOp::zeros(space.dim());
                for (site, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        op.add_scaled(&site_pauli(n, site, axis), C64::new(w, 0.0));
                    }
                }
                Ok(op)
            }
            AncillaSpace::Dicke(n) => {
                if weights.len() != n {
                    return Err(Error::Dimension { expected: n, got: weights.len() });
                }
                let w0 = weights[0];
                if weights.iter().any(|&w| (w - w0).abs() > 1e-14 * (1.0 + w0.abs())) {
                    return Err(Error::Symbol {
                        symbol: "non-uniform weighted collective operator".into(),
                        space: "Dicke",
                    });
                }
                Ok(self.spin(axis).expect("spin ops").scale(C64::new(w0, 0.0)))
            }
            AncillaSpace::Fock(_) => Err(Error::Symbol {
                symbol: format!("weighted {axis:?}"),
                space: "Fock",
            }),
        }
    }
}

/// Complex amplitudes over (data register) ⊗ (ancilla basis).
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    data_qubits: Vec<usize>,
    space: AncillaSpace,
    amplitudes: Array1<C64>,
}

impl HybridState {
    pub fn new(data_qubits: Vec<usize>, space: AncillaSpace, amplitudes: Array1<C64>) -> Result<Self> {
        let space = space.validated()?;
        if data_qubits.len() > MAX_DATA_QUBITS {
            return Err(Error::SizeGuard {
                what: "data qubits",
                value: data_qubits.len(),
                limit: MAX_DATA_QUBITS,
            });
        }
        let mut sorted = data_qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != data_qubits.len() {
            return Err(Error::InvalidParameter("duplicate data qubit label".into()));
        }
        let expected = (1usize << data_qubits.len()) * space.dim();
        if amplitudes.len() != expected {
            return Err(Error::Dimension { expected, got: amplitudes.len() });
        }
        Ok(Self { data_qubits, space, amplitudes })
    }

    pub fn data_qubits(&self) -> &[usize] {
        &self.data_qubits
    }

    pub fn space(&self) -> AncillaSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amplitudes
    }

    pub fn n_data(&self) -> usize {
        self.data_qubits.len()
    }

    pub fn data_dim(&self) -> usize {
        1 << self.data_qubits.len()
    }

    pub fn position(&self, label: usize) -> Result<usize> {
        self.data_qubits
            .iter()
            .position(|&q| q == label)
            .ok_or(Error::UnknownQubit(label))
    }

    /// Bit mask of `label` inside the data index.
    pub fn bit(&self, label: usize) -> Result<usize> {
        Ok(1 << (self.n_data() - 1 - self.position(label)?))
    }

    pub fn norm(&self) -> f64 {
        norm(self.amplitudes.view())
    }

    pub fn block(&self, data_index: usize) -> ArrayView1<'_, C64> {
        let d = self.space.dim();
        self.amplitudes.slice(s![data_index * d..(data_index + 1) * d])
    }

    /// Diagonal of the reduced ancilla density matrix.
    pub fn ancilla_populations(&self) -> Vec<f64> {
        let d = self.space.dim();
        let mut pops = vec![0.0; d];
        for (k, a) in self.amplitudes.iter().enumerate() {
            pops[k % d] += a.norm_sqr();
        }
        pops
    }

    /// Total population on ancilla basis states with excitation above `level`.
    pub fn population_above(&self, level: usize) -> f64 {
        self.ancilla_populations()
            .iter()
            .enumerate()
            .filter(|&(k, _)| self.space.excitation(k) > level)
            .map(|(_, p)| p)
            .sum()
    }

    /// Data-register amplitudes conditioned on ancilla basis state `index`
    /// (unnormalized).
    pub fn data_slice(&self, ancilla_index: usize) -> Array1<C64> {
        let d = self.space.dim();
        (0..self.data_dim()).map(|k| self.amplitudes[k * d + ancilla_index]).collect()
    }

    /// Re-embeds a Fock state into a larger cutoff, padding with zeros.
    pub fn with_fock_cutoff(&self, cutoff: usize) -> Result<Self> {
        let AncillaSpace::Fock(old) = self.space else {
            return Err(Error::InvalidSpace("cutoff change needs a Fock space".into()));
        };
        if cutoff < old {
            return Err(Error::InvalidParameter("cutoff can only grow".into()));
        }
        let (od, nd) = (old + 1, cutoff + 1);
        let mut amps = Array1::zeros(self.data_dim() * nd);
        for k in 0..self.data_dim() {
            for a in 0..od {
                amps[k * nd + a] = self.amplitudes[k * od + a];
            }
        }
        Self::new(self.data_qubits.clone(), AncillaSpace::Fock(cutoff), amps)
    }
}

/// `|ψ⟩ ⊗ |0⟩_anc` where `|0⟩_anc` is the all-zero / vacuum state.
pub fn embed_initial_state(
    data_state: ArrayView1<C64>,
    data_qubits: &[usize],
    space: AncillaSpace,
) -> Result<HybridState> {
    let expected = 1usize << data_qubits.len();
    if data_state.len() != expected {
        return Err(Error::Dimension { expected, got: data_state.len() });
    }
    let nrm = norm(data_state);
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(nrm));
    }
    let d = space.validated()?.dim();
    let mut amps = Array1::zeros(expected * d);
    for (k, &a) in data_state.iter().enumerate() {
        amps[k * d] = a;
    }
    HybridState::new(data_qubits.to_vec(), space, amps)
}

/// Computational basis vector `|index⟩` of dimension `dim`.
pub fn basis_vector(dim: usize, index: usize) -> Array1<C64> {
    let mut v = Array1::from_elem(dim, ZERO);
    v[index] = ONE;
    v
}

/// Maps a Dicke-basis vector onto the full `2^N` register: `|m⟩` becomes the
/// normalized uniform superposition of weight-`m` bitstrings.
pub fn dicke_to_full_embedding(dicke_state: ArrayView1<C64>, n: usize) -> Result<Array1<C64>> {
    if n > MAX_EMBED_QUBITS {
        return Err(Error::SizeGuard { what: "embedding qubits", value: n, limit: MAX_EMBED_QUBITS });
    }
    if dicke_state.len() != n + 1 {
        return Err(Error::Dimension { expected: n + 1, got: dicke_state.len() });
    }
    let norms: Vec<f64> = (0..=n).map(|m| binomial(n, m).sqrt()).collect();
    Ok((0..1usize << n)
        .map(|i| {
            let m = i.count_ones() as usize;
            dicke_state[m] / norms[m]
        })
        .collect())
}

/// Lifts a hybrid Dicke state to data ⊗ full-qubit amplitudes.
pub fn hybrid_dicke_to_full(state: &HybridState) -> Result<HybridState> {
    let AncillaSpace::Dicke(n) = state.space() else {
        return Err(Error::InvalidSpace("expected a Dicke space".into()));
    };
    let full = 1usize << n;
    let mut amps = Array1::zeros(state.data_dim() * full);
    for k in 0..state.data_dim() {
        let lifted = dicke_to_full_embedding(state.block(k), n)?;
        amps.slice_mut(s![k * full..(k + 1) * full]).assign(&lifted);
    }
    HybridState::new(state.data_qubits().to_vec(), AncillaSpace::FullQubit(n), amps)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs_diff};
    use ndarray::Array2;

    fn dense(ops: &CollectiveOps, axis: Pauli) -> Array2<C64> {
        ops.spin(axis).unwrap().to_dense()
    }

    #[test]
    fn dim_matches_mode() {
        assert_eq!(AncillaSpace::Dicke(7).dim(), 8);
        assert_eq!(AncillaSpace::Fock(4).dim(), 5);
        assert_eq!(AncillaSpace::FullQubit(5).dim(), 32);
        assert!(AncillaSpace::full_qubit(17).is_err());
        assert!(AncillaSpace::dicke(0).is_err());
        assert!(build_collective_ops(AncillaSpace::FullQubit(17)).is_err());
    }

    #[test]
    fn single_spin_is_pauli() {
        let ops = build_collective_ops(AncillaSpace::Dicke(1)).unwrap();
        let x = dense(&ops, Pauli::X);
        let y = dense(&ops, Pauli::Y);
        let z = dense(&ops, Pauli::Z);
        assert_eq!(x, ndarray::array![[ZERO, ONE], [ONE, ZERO]]);
        assert_eq!(y, ndarray::array![[ZERO, -I], [I, ZERO]]);
        assert_eq!(z, ndarray::array![[ONE, ZERO], [ZERO, -ONE]]);
    }

    #[test]
    fn polarized_state_has_full_z() {
        for n in [1, 4, 9] {
            let ops = build_collective_ops(AncillaSpace::Dicke(n)).unwrap();
            assert_eq!(ops.spin(Pauli::Z).unwrap().get(0, 0), C64::new(n as f64, 0.0));
        }
    }

    #[test]
    fn dicke_ladder_element() {
        let n = 6;
        let ops = build_collective_ops(AncillaSpace::Dicke(n)).unwrap();
        let x = ops.spin(Pauli::X).unwrap();
        for m in 0..n {
            let want = (((m + 1) * (n - m)) as f64).sqrt();
            assert!((x.get(m + 1, m).re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn dicke_commutator_n5() {
        let ops = build_collective_ops(AncillaSpace::Dicke(5)).unwrap();
        let (x, y, z) = (dense(&ops, Pauli::X), dense(&ops, Pauli::Y), dense(&ops, Pauli::Z));
        let lhs = commutator(&x, &y);
        assert!(max_abs_diff(&lhs, &z.mapv(|v| v * 2.0 * I)) < 1e-12);
    }

    #[test]
    fn full_qubit_matches_dicke_on_symmetric_states() {
        let n = 4;
        let full = build_collective_ops(AncillaSpace::FullQubit(n)).unwrap();
        let dicke = build_collective_ops(AncillaSpace::Dicke(n)).unwrap();
        let v = Array1::from_shape_fn(n + 1, |m| C64::new(1.0 + m as f64, 0.5 * m as f64));
        let v = &v / C64::new(norm(v.view()), 0.0);
        for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
            let lhs = full.spin(axis).unwrap().apply(dicke_to_full_embedding(v.view(), n).unwrap().view());
            let rhs = dicke_to_full_embedding(dicke.spin(axis).unwrap().apply(v.view()).view(), n).unwrap();
            assert!(norm((&lhs - &rhs).view()) < 1e-12);
        }
    }

    #[test]
    fn fock_number_operator() {
        let ops = build_collective_ops(AncillaSpace::Fock(6)).unwrap();
        let CollectiveOps::Boson { b, bdag, n, x, p, .. } = &ops else { panic!() };
        assert_eq!(*n, bdag.matmul(b));
        assert!(x.hermiticity_defect() < 1e-14);
        assert!(p.hermiticity_defect() < 1e-14);
        // [x, p] = i away from the truncation edge
        let c = commutator(&x.to_dense(), &p.to_dense());
        for k in 0..5 {
            assert!((c[[k, k]] - I).norm() < 1e-12);
        }
    }

    #[test]
    fn embed_examples() {
        let s = embed_initial_state(basis_vector(2, 0).view(), &[0], AncillaSpace::Dicke(3)).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert_eq!(s.amplitudes()[0], ONE);
        assert_eq!(s.norm(), 1.0);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Array1::from_elem(2, C64::new(r, 0.0));
        let s = embed_initial_state(plus.view(), &[0], AncillaSpace::Fock(4)).unwrap();
        let nz: Vec<usize> = (0..10).filter(|&k| s.amplitudes()[k] != ZERO).collect();
        assert_eq!(nz, vec![0, 5]);
        assert!((s.amplitudes()[5].re - r).abs() < 1e-15);

        let bad = Array1::from_elem(2, ONE);
        assert!(matches!(
            embed_initial_state(bad.view(), &[0], AncillaSpace::Fock(4)),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn dicke_embedding_examples() {
        let e0 = dicke_to_full_embedding(basis_vector(4, 0).view(), 3).unwrap();
        assert_eq!(e0[0], ONE);
        assert_eq!(norm(e0.view()), 1.0);
        let e1 = dicke_to_full_embedding(basis_vector(4, 1).view(), 3).unwrap();
        let w = 1.0 / 3f64.sqrt();
        for idx in [1, 2, 4] {
            assert!((e1[idx].re - w).abs() < 1e-15);
        }
        assert_eq!(e1.iter().filter(|a| a.norm() > 0.0).count(), 3);
        assert!(dicke_to_full_embedding(basis_vector(16, 0).view(), 15).is_err());
    }
}
