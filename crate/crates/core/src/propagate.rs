//! Time evolution of hybrid states under piecewise-constant schedules.
//!
//! Each segment is applied as an exact `exp(-i H t)`. When every data Pauli
//! is `Z` the generator is block diagonal in the data basis and each block
//! is an ancilla-only operator `Σ_p c_p(z) M_p`; blocks that share the same
//! coefficients share one propagator. On full-qubit ancillae, generators
//! that are linear in single-site Paulis factor into 2x2 rotations.

use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{s, Array1, ArrayView1};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exec::{par_map_with, Execution};
use crate::hamiltonian::{AncillaPolynomial, Atom, HamiltonianSpec, Pauli, Rotation, Schedule, Step};
use crate::linalg::{eigh_hermitian, expmv_lanczos, hermitian_norm_lanczos, HermitianEig, SparseOp, I, ONE, ZERO};
use crate::spaces::{build_collective_ops, AncillaSpace, CollectiveOps, HybridState};

/// Largest generator dimension diagonalized densely; above it Krylov is used.
pub const DENSE_MAX_DIM: usize = 2048;
pub const FOCK_LEAKAGE_THRESHOLD: f64 = 1e-6;
const HERMITIAN_TOL: f64 = 1e-10;
const EIG_CACHE_SIZE: usize = 48;
pub const MAX_COMMUTATOR_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    DenseExpm,
    Krylov,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub method: Method,
    /// Per-segment error allowance of the Krylov route.
    pub step_tolerance: f64,
    /// Redo the run once with a doubled cutoff if Fock leakage is flagged.
    pub fock_retry: bool,
    /// Track the population above this ancilla excitation level.
    pub boundary_level: Option<usize>,
    pub execution: Execution,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            method: Method::DenseExpm,
            step_tolerance: 1e-10,
            fock_retry: true,
            boundary_level: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Max population in the top two Fock levels seen at segment ends.
    pub fock_leakage: f64,
    pub fock_cutoff: Option<usize>,
    pub cutoff_doubled: bool,
    /// Max population above `boundary_level` seen at segment ends.
    pub boundary_weight: f64,
    pub krylov_blocks: usize,
}

impl Diagnostics {
    pub fn leakage_flagged(&self) -> bool {
        self.fock_leakage > FOCK_LEAKAGE_THRESHOLD
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: HybridState,
    pub diagnostics: Diagnostics,
}

pub fn evolve(state: &HybridState, schedule: &Schedule, opts: &EvolveOptions) -> Result<Evolution> {
    evolve_observed(state, schedule, opts, &mut |_, _| {})
}

/// As [`evolve`], calling `observer(step_index, state)` after every step.
/// A Fock cutoff retry replays the observer from the start.
pub fn evolve_observed(
    state: &HybridState,
    schedule: &Schedule,
    opts: &EvolveOptions,
    observer: &mut dyn FnMut(usize, &HybridState),
) -> Result<Evolution> {
    let first = evolve_once(state, schedule, opts, observer)?;
    match state.space() {
        AncillaSpace::Fock(cutoff) if opts.fock_retry && first.diagnostics.leakage_flagged() => {
            let bigger = state.with_fock_cutoff(2 * cutoff)?;
            let mut second = evolve_once(&bigger, schedule, opts, observer)?;
            second.diagnostics.cutoff_doubled = true;
            Ok(second)
        }
        _ => Ok(first),
    }
}

fn evolve_once(
    state: &HybridState,
    schedule: &Schedule,
    opts: &EvolveOptions,
    observer: &mut dyn FnMut(usize, &HybridState),
) -> Result<Evolution> {
    let space = state.space();
    let ops: OnceLock<CollectiveOps> = OnceLock::new();
    let mut amps = state.amplitudes().clone();
    let data = state.data_qubits().to_vec();
    let mut diag = Diagnostics { fock_cutoff: matches!(space, AncillaSpace::Fock(_)).then(|| space.dim() - 1), ..Default::default() };
    for (k, step) in schedule.steps().iter().enumerate() {
        match step {
            Step::Evolve { spec, duration } => {
                if *duration != 0.0 && !spec.terms.is_empty() {
                    amps = apply_segment(&amps, &data, space, &ops, spec, *duration, opts, &mut diag)?;
                }
            }
            Step::Rotate(rots) => {
                for r in rots {
                    apply_rotation(&mut amps, &data, space.dim(), r)?;
                }
            }
        }
        let current = HybridState::new(data.clone(), space, amps)?;
        if let AncillaSpace::Fock(cutoff) = space {
            diag.fock_leakage = diag.fock_leakage.max(current.population_above(cutoff.saturating_sub(2)));
        }
        if let Some(level) = opts.boundary_level {
            diag.boundary_weight = diag.boundary_weight.max(current.population_above(level));
        }
        observer(k, &current);
        amps = current.into_amplitudes();
    }
    Ok(Evolution { state: HybridState::new(data, space, amps)?, diagnostics: diag })
}

/// `exp(-i angle/2 σ)` on one data qubit.
pub fn rotation_matrix(axis: Pauli, angle: f64) -> [[C64; 2]; 2] {
    let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let p = axis.matrix();
    let mut u = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { ONE } else { ZERO };
            u[i][j] = id * c - I * sn * p[i][j];
        }
    }
    u
}

fn data_mask(data: &[usize], label: usize) -> Result<usize> {
    let pos = data.iter().position(|&q| q == label).ok_or(Error::UnknownQubit(label))?;
    Ok(1 << (data.len() - 1 - pos))
}

fn apply_rotation(amps: &mut Array1<C64>, data: &[usize], anc_dim: usize, r: &Rotation) -> Result<()> {
    let bit = data_mask(data, r.qubit)?;
    let u = rotation_matrix(r.axis, r.angle);
    for z in 0..(1usize << data.len()) {
        if z & bit != 0 {
            continue;
        }
        let (o0, o1) = (z * anc_dim, (z | bit) * anc_dim);
        for a in 0..anc_dim {
            let (v0, v1) = (amps[o0 + a], amps[o1 + a]);
            amps[o0 + a] = u[0][0] * v0 + u[0][1] * v1;
            amps[o1 + a] = u[1][0] * v0 + u[1][1] * v1;
        }
    }
    Ok(())
}

/// Distinct ancilla polynomials of a spec and, per term, its index.
fn group_polys(spec: &HamiltonianSpec) -> (Vec<&AncillaPolynomial>, Vec<usize>) {
    let mut uniq: Vec<&AncillaPolynomial> = Vec::new();
    let mut idx = Vec::with_capacity(spec.terms.len());
    for t in &spec.terms {
        match uniq.iter().position(|p| **p == t.ancilla) {
            Some(k) => idx.push(k),
            None => {
                idx.push(uniq.len());
                uniq.push(&t.ancilla);
            }
        }
    }
    (uniq, idx)
}

fn ops_for<'a>(ops: &'a OnceLock<CollectiveOps>, space: AncillaSpace) -> Result<&'a CollectiveOps> {
    if let Some(o) = ops.get() {
        return Ok(o);
    }
    let built = build_collective_ops(space)?;
    Ok(ops.get_or_init(|| built))
}

fn hermitian_matrix(p: &AncillaPolynomial, ops: &CollectiveOps) -> Result<SparseOp> {
    let m = p.to_sparse(ops)?;
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * (1.0 + m.max_abs()) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(m)
}

type EigCache = Mutex<Vec<(AncillaSpace, AncillaPolynomial, Arc<HermitianEig>)>>;

fn eig_cache() -> &'static EigCache {
    static CACHE: OnceLock<EigCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Eigendecomposition of one polynomial's matrix, memoized process-wide.
fn cached_eig(space: AncillaSpace, p: &AncillaPolynomial, m: &SparseOp) -> Result<Arc<HermitianEig>> {
    {
        let cache = eig_cache().lock().unwrap();
        if let Some((_, _, e)) = cache.iter().find(|(s, q, _)| *s == space && q == p) {
            return Ok(e.clone());
        }
    }
    let eig = Arc::new(HermitianEig::new(&m.to_dense())?);
    let mut cache = eig_cache().lock().unwrap();
    if cache.len() >= EIG_CACHE_SIZE {
        cache.remove(0);
    }
    cache.push((space, p.clone(), eig.clone()));
    Ok(eig)
}

#[allow(clippy::too_many_arguments)]
fn apply_segment(
    amps: &Array1<C64>,
    data: &[usize],
    space: AncillaSpace,
    ops: &OnceLock<CollectiveOps>,
    spec: &HamiltonianSpec,
    t: f64,
    opts: &EvolveOptions,
    diag: &mut Diagnostics,
) -> Result<Array1<C64>> {
    for label in spec.data_labels() {
        data_mask(data, label)?;
    }
    if spec.is_data_diagonal() {
        diagonal_segment(amps, data, space, ops, spec, t, opts, diag)
    } else {
        general_segment(amps, data, space, ops, spec, t, opts, diag)
    }
}

/// Per data basis state `z`, the coefficient of each distinct polynomial.
fn block_coefficients(data: &[usize], spec: &HamiltonianSpec, idx: &[usize], r: usize) -> Result<Vec<Vec<f64>>> {
    let masks: Vec<usize> = spec
        .terms
        .iter()
        .map(|t| t.data.keys().map(|&l| data_mask(data, l)).sum::<Result<usize>>())
        .collect::<Result<_>>()?;
    Ok((0..1usize << data.len())
        .map(|z| {
            let mut c = vec![0.0; r];
            for ((t, &m), &p) in spec.terms.iter().zip(&masks).zip(idx) {
                let sign = if (z & m).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                c[p] += sign * t.coeff;
            }
            c
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn diagonal_segment(
    amps: &Array1<C64>,
    data: &[usize],
    space: AncillaSpace,
    ops: &OnceLock<CollectiveOps>,
    spec: &HamiltonianSpec,
    t: f64,
    opts: &EvolveOptions,
    diag: &mut Diagnostics,
) -> Result<Array1<C64>> {
    let (polys, idx) = group_polys(spec);
    let coeffs = block_coefficients(data, spec, &idx, polys.len())?;
    let d = space.dim();
    let blocks: Vec<usize> = (0..coeffs.len()).collect();

    if let AncillaSpace::FullQubit(n) = space {
        if polys.iter().all(|p| p.degree() <= 1) {
            let fields = polys.iter().map(|p| single_site_fields(p, n)).collect::<Result<Vec<_>>>()?;
            let out = par_map_with(opts.execution, &blocks, |&z| {
                product_propagate(amps.slice(s![z * d..(z + 1) * d]), &fields, &coeffs[z], t, n)
            });
            return Ok(concat(out, amps.len()));
        }
    }

    let ops = ops_for(ops, space)?;
    let mats = polys.iter().map(|p| hermitian_matrix(p, ops)).collect::<Result<Vec<_>>>()?;
    let use_krylov = opts.method == Method::Krylov || d > DENSE_MAX_DIM;

    if polys.len() == 1 && !use_krylov {
        let eig = cached_eig(space, polys[0], &mats[0])?;
        let out = par_map_with(opts.execution, &blocks, |&z| {
            let block = amps.slice(s![z * d..(z + 1) * d]);
            let c = coeffs[z][0];
            if c == 0.0 {
                block.to_owned()
            } else {
                eig.propagate(c * t, block)
            }
        });
        return Ok(concat(out, amps.len()));
    }

    // distinct coefficient vectors share a propagator
    let mut keys: Vec<Vec<u64>> = Vec::new();
    let mut key_of = Vec::with_capacity(coeffs.len());
    for c in &coeffs {
        let k: Vec<u64> = c.iter().map(|x| x.to_bits()).collect();
        match keys.iter().position(|q| *q == k) {
            Some(i) => key_of.push(i),
            None => {
                key_of.push(keys.len());
                keys.push(k);
            }
        }
    }
    let generator = |c: &[f64]| {
        let mut h = SparseOp::zeros(d);
        for (m, &ci) in mats.iter().zip(c) {
            if ci != 0.0 {
                h.add_scaled(m, C64::new(ci, 0.0));
            }
        }
        h
    };
    if use_krylov {
        diag.krylov_blocks += blocks.len();
        let out = par_map_with(opts.execution, &blocks, |&z| {
            let h = generator(&coeffs[z]);
            expmv_lanczos(|v| h.apply(v), amps.slice(s![z * d..(z + 1) * d]), t, opts.step_tolerance)
        });
        return Ok(concat(out.into_iter().collect::<Result<Vec<_>>>()?, amps.len()));
    }
    let key_ids: Vec<usize> = (0..keys.len()).collect();
    let eigs = par_map_with(opts.execution, &key_ids, |&k| {
        let z = key_of.iter().position(|&q| q == k).unwrap();
        HermitianEig::new(&generator(&coeffs[z]).to_dense())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let out = par_map_with(opts.execution, &blocks, |&z| eigs[key_of[z]].propagate(t, amps.slice(s![z * d..(z + 1) * d])));
    Ok(concat(out, amps.len()))
}

fn concat(blocks: Vec<Array1<C64>>, len: usize) -> Array1<C64> {
    let mut out = Array1::zeros(len);
    let mut o = 0;
    for b in blocks {
        out.slice_mut(s![o..o + b.len()]).assign(&b);
        o += b.len();
    }
    out
}

/// Identity offset and per-site real field vectors of a polynomial that is
/// linear in single-site Paulis.
struct SiteFields {
    offset: f64,
    fields: Vec<[f64; 3]>,
}

fn single_site_fields(p: &AncillaPolynomial, n: usize) -> Result<SiteFields> {
    let mut f = SiteFields { offset: 0.0, fields: vec![[0.0; 3]; n] };
    for (w, c) in p.terms() {
        if c.im.abs() > HERMITIAN_TOL * (1.0 + c.re.abs()) {
            return Err(Error::NotHermitian(c.im.abs()));
        }
        match w.as_slice() {
            [] => f.offset += c.re,
            [Atom::Weighted { axis, weights }] => {
                if weights.len() != n {
                    return Err(Error::Dimension { expected: n, got: weights.len() });
                }
                for (s, &wt) in weights.iter().enumerate() {
                    f.fields[s][axis.index()] += c.re * wt;
                }
            }
            [a] => {
                let axis = a.spin_axis().ok_or_else(|| Error::Symbol { symbol: a.symbol().into(), space: "full-qubit" })?;
                for s in 0..n {
                    f.fields[s][axis.index()] += c.re;
                }
            }
            _ => unreachable!("degree checked by caller"),
        }
    }
    Ok(f)
}

fn product_propagate(block: ArrayView1<C64>, fields: &[SiteFields], c: &[f64], t: f64, n: usize) -> Array1<C64> {
    let mut v = block.to_owned();
    let offset: f64 = fields.iter().zip(c).map(|(f, &ci)| ci * f.offset).sum();
    for s in 0..n {
        let mut h = [0.0; 3];
        for (f, &ci) in fields.iter().zip(c) {
            for a in 0..3 {
                h[a] += ci * f.fields[s][a];
            }
        }
        let mag = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        if mag == 0.0 {
            continue;
        }
        let (cs, sn) = ((mag * t).cos(), (mag * t).sin());
        let (nx, ny, nz) = (h[0] / mag, h[1] / mag, h[2] / mag);
        // cos - i sin (n·σ)
        let u00 = C64::new(cs, -sn * nz);
        let u11 = C64::new(cs, sn * nz);
        let u01 = C64::new(-sn * ny, -sn * nx);
        let u10 = C64::new(sn * ny, -sn * nx);
        let bit = 1usize << (n - 1 - s);
        for i in 0..v.len() {
            if i & bit != 0 {
                continue;
            }
            let (a0, a1) = (v[i], v[i | bit]);
            v[i] = u00 * a0 + u01 * a1;
            v[i | bit] = u10 * a0 + u11 * a1;
        }
    }
    if offset != 0.0 {
        let ph = C64::from_polar(1.0, -offset * t);
        v.mapv_inplace(|x| x * ph);
    }
    v
}

/// `(flip mask, phase(z))` of a data Pauli string.
fn data_string_action(data: &[usize], string: &std::collections::BTreeMap<usize, Pauli>) -> Result<(usize, Vec<(usize, Pauli)>)> {
    let mut flip = 0;
    let mut factors = Vec::with_capacity(string.len());
    for (&l, &p) in string {
        let m = data_mask(data, l)?;
        if p != Pauli::Z {
            flip |= m;
        }
        factors.push((m, p));
    }
    Ok((flip, factors))
}

fn data_phase(z: usize, factors: &[(usize, Pauli)]) -> C64 {
    factors.iter().fold(ONE, |acc, &(m, p)| {
        let set = z & m != 0;
        acc * match (p, set) {
            (Pauli::X, _) => ONE,
            (Pauli::Y, false) => I,
            (Pauli::Y, true) => -I,
            (Pauli::Z, false) => ONE,
            (Pauli::Z, true) => -ONE,
        }
    })
}

/// Full hybrid generator as a sparse matrix.
pub(crate) fn hybrid_generator(data: &[usize], ops: &CollectiveOps, spec: &HamiltonianSpec) -> Result<SparseOp> {
    let d = ops.dim();
    let nd = 1usize << data.len();
    let (polys, idx) = group_polys(spec);
    let mats = polys.iter().map(|p| p.to_sparse(ops)).collect::<Result<Vec<_>>>()?;
    let mut triplets = Vec::new();
    for (t, &p) in spec.terms.iter().zip(&idx) {
        let (flip, factors) = data_string_action(data, &t.data)?;
        for z in 0..nd {
            let ph = data_phase(z, &factors) * t.coeff;
            let zr = z ^ flip;
            for (a, row) in mats[p].rows().iter().enumerate() {
                for &(b, v) in row {
                    triplets.push((zr * d + a, z * d + b, ph * v));
                }
            }
        }
    }
    let h = SparseOp::from_triplets(nd * d, triplets);
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL * (1.0 + h.max_abs()) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(h)
}

#[allow(clippy::too_many_arguments)]
fn general_segment(
    amps: &Array1<C64>,
    data: &[usize],
    space: AncillaSpace,
    ops: &OnceLock<CollectiveOps>,
    spec: &HamiltonianSpec,
    t: f64,
    opts: &EvolveOptions,
    diag: &mut Diagnostics,
) -> Result<Array1<C64>> {
    let ops = ops_for(ops, space)?;
    let h = hybrid_generator(data, ops, spec)?;
    if opts.method == Method::Krylov || h.dim() > DENSE_MAX_DIM {
        diag.krylov_blocks += 1;
        return expmv_lanczos(|v| h.apply(v), amps.view(), t, opts.step_tolerance);
    }
    let (vals, vecs) = eigh_hermitian(&h.to_dense())?;
    Ok(HermitianEig { values: vals, vectors: vecs }.propagate(t, amps.view()))
}

/// A qubit of the combined data ⊗ full-qubit ancilla register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Data(usize),
    Ancilla(usize),
}

fn site_bit(site: Site, data: &[usize], n_anc: usize) -> Result<usize> {
    Ok(match site {
        Site::Data(l) => data_mask(data, l)? << n_anc,
        Site::Ancilla(s) => {
            if s >= n_anc {
                return Err(Error::InvalidParameter(format!("ancilla site {s} out of range")));
            }
            1 << (n_anc - 1 - s)
        }
    })
}

fn apply_site_pauli(v: ArrayView1<C64>, bit: usize, p: Pauli) -> Array1<C64> {
    let mut out = Array1::zeros(v.len());
    for i in 0..v.len() {
        let set = i & bit != 0;
        let (j, ph) = match (p, set) {
            (Pauli::X, _) => (i ^ bit, ONE),
            (Pauli::Y, false) => (i ^ bit, I),
            (Pauli::Y, true) => (i ^ bit, -I),
            (Pauli::Z, false) => (i, ONE),
            (Pauli::Z, true) => (i, -ONE),
        };
        out[j] = ph * v[i];
    }
    out
}

/// `‖[U† A U, B]‖` for single-qubit Paulis `A`, `B`, with `U` the full
/// schedule, on data qubits ⊗ `FullQubit(n)` ancillae.
pub fn heisenberg_commutator_norm(
    schedule: &Schedule,
    data: &[usize],
    n_anc: usize,
    a: (Site, Pauli),
    b: (Site, Pauli),
    opts: &EvolveOptions,
) -> Result<f64> {
    let n_tot = data.len() + n_anc;
    if n_tot > MAX_COMMUTATOR_QUBITS {
        return Err(Error::SizeGuard { what: "commutator probe qubits", value: n_tot, limit: MAX_COMMUTATOR_QUBITS });
    }
    let space = AncillaSpace::FullQubit(n_anc).validated()?;
    let inverse = schedule.reversed();
    let (bit_a, bit_b) = (site_bit(a.0, data, n_anc)?, site_bit(b.0, data, n_anc)?);
    let run = |v: Array1<C64>, s: &Schedule| -> Result<Array1<C64>> {
        let st = HybridState::new(data.to_vec(), space, v)?;
        Ok(evolve(&st, s, opts)?.state.into_amplitudes())
    };
    // U† A U v
    let heis = |v: ArrayView1<C64>| -> Result<Array1<C64>> {
        let w = run(v.to_owned(), schedule)?;
        let w = apply_site_pauli(w.view(), bit_a, a.1);
        run(w, &inverse)
    };
    // i [A(T), B]
    let err: Mutex<Option<Error>> = Mutex::new(None);
    let apply = |v: ArrayView1<C64>| -> Array1<C64> {
        let res = (|| {
            let bv = apply_site_pauli(v, bit_b, b.1);
            let abv = heis(bv.view())?;
            let av = heis(v)?;
            let bav = apply_site_pauli(av.view(), bit_b, b.1);
            Ok::<_, Error>((abv - bav).mapv(|x| x * I))
        })();
        res.unwrap_or_else(|e| {
            *err.lock().unwrap() = Some(e);
            Array1::zeros(v.len())
        })
    };
    let dim = 1usize << n_tot;
    let seed: Array1<C64> = (0..dim)
        .map(|i| {
            let x = (i as f64 * 0.754_877_666_246_692_8).fract();
            let y = (i as f64 * 0.569_840_290_998_053_2).fract();
            C64::new(x - 0.5, y - 0.5)
        })
        .collect();
    let value = hermitian_norm_lanczos(apply, dim, seed.view(), 80)?;
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Term;
    use crate::linalg::norm;
    use crate::spaces::{basis_vector, embed_initial_state};
    use std::f64::consts::PI;

    #[test]
    fn z_phase_on_one() {
        let mut s = Schedule::new();
        s.push_evolve(HamiltonianSpec::new(1, 0, 2).with_term(Term::new(1.0, [(0, Pauli::Z)], AncillaPolynomial::identity())), PI / 2.0)
            .unwrap();
        let st = embed_initial_state(basis_vector(2, 1).view(), &[0], AncillaSpace::Dicke(1)).unwrap();
        let out = evolve(&st, &s, &EvolveOptions::default()).unwrap().state;
        assert!((out.amplitudes()[2] - I).norm() < 1e-14);
    }

    #[test]
    fn routes_agree_on_mixed_generator() {
        // X_data ⊗ Z + Z_data ⊗ (X + 0.3 Y Z-ish) on a full-qubit register
        let n = 3;
        let poly = &AncillaPolynomial::x() + &(&AncillaPolynomial::y() * &AncillaPolynomial::z()).hermitize().scale_re(0.3);
        let spec = HamiltonianSpec::new(5, n, 4)
            .with_term(Term::new(0.7, [(0, Pauli::Z)], poly))
            .with_term(Term::new(0.4, [(1, Pauli::X)], AncillaPolynomial::z()));
        let mut sched = Schedule::new();
        sched.push_evolve(spec, 0.9).unwrap();
        let data = vec![0, 1];
        let v = Array1::from_shape_fn(4 * 8, |i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
        let v = &v / C64::new(norm(v.view()), 0.0);
        let st = HybridState::new(data, AncillaSpace::FullQubit(n), v).unwrap();
        let dense = evolve(&st, &sched, &EvolveOptions::default()).unwrap().state;
        let kry = evolve(&st, &sched, &EvolveOptions { method: Method::Krylov, step_tolerance: 1e-12, ..Default::default() })
            .unwrap()
            .state;
        let diff = norm((dense.amplitudes() - kry.amplitudes()).view());
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn product_route_matches_dense_route() {
        let n = 4;
        let w: Vec<f64> = (0..n).map(|i| (i as f64 * 0.9).cos()).collect();
        let lin = &AncillaPolynomial::weighted(Pauli::X, w.clone()) + &AncillaPolynomial::y().scale_re(0.2);
        let spec = HamiltonianSpec::new(6, n, 2).with_term(Term::new(0.8, [(0, Pauli::Z)], lin.clone()));
        let mut sched = Schedule::new();
        sched.push_evolve(spec, 0.6).unwrap();
        let st = embed_initial_state(Array1::from_elem(4, C64::new(0.5, 0.0)).view(), &[0, 1], AncillaSpace::FullQubit(n)).unwrap();
        let a = evolve(&st, &sched, &EvolveOptions::default()).unwrap().state;
        // force the general route with a zero-coefficient X data term
        let mut spec2 = HamiltonianSpec::new(6, n, 2).with_term(Term::new(0.8, [(0, Pauli::Z)], lin));
        spec2.push(0.0, [(1, Pauli::X)], AncillaPolynomial::identity());
        let mut sched2 = Schedule::new();
        sched2.push_evolve(spec2, 0.6).unwrap();
        let b = evolve(&st, &sched2, &EvolveOptions::default()).unwrap().state;
        assert!(norm((a.amplitudes() - b.amplitudes()).view()) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_unknown_qubits() {
        let spec = HamiltonianSpec::new(2, 2, 2).with_term(Term::new(1.0, [(0, Pauli::Z)], AncillaPolynomial::x().scale(I)));
        let mut s = Schedule::new();
        s.push_evolve(spec, 1.0).unwrap();
        let st = embed_initial_state(basis_vector(2, 0).view(), &[0], AncillaSpace::Dicke(2)).unwrap();
        assert!(matches!(evolve(&st, &s, &EvolveOptions::default()), Err(Error::NotHermitian(_))));
        let spec = HamiltonianSpec::new(2, 2, 2).with_term(Term::new(1.0, [(7, Pauli::Z)], AncillaPolynomial::x()));
        let mut s = Schedule::new();
        s.push_evolve(spec, 1.0).unwrap();
        assert!(matches!(evolve(&st, &s, &EvolveOptions::default()), Err(Error::UnknownQubit(7))));
    }

    #[test]
    fn commutator_probe_trivial_cases() {
        let data = vec![0, 1];
        let empty = Schedule::new();
        let opts = EvolveOptions::default();
        let v = heisenberg_commutator_norm(&empty, &data, 1, (Site::Data(0), Pauli::X), (Site::Data(1), Pauli::X), &opts).unwrap();
        assert!(v < 1e-12);
        let v = heisenberg_commutator_norm(&empty, &data, 1, (Site::Data(0), Pauli::X), (Site::Data(0), Pauli::Z), &opts).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }
}
