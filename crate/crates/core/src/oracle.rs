//! Brute-force references: site-resolved evolution on the full `2^N_tot`
//! register and the exact Holstein-Primakoff operator.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{Atom, HamiltonianSpec, Pauli, Schedule, Step};
use crate::linalg::{expmv_lanczos, HermitianEig, I};
use crate::propagate::rotation_matrix;
use crate::spaces::{build_collective_ops, AncillaSpace};

pub const MAX_ORACLE_QUBITS: usize = 14;

/// Evolves a full-register vector (data qubits most significant, then
/// `n_anc` ancilla qubits) by applying each segment's Hamiltonian site by
/// site and integrating with Lanczos to tolerance `tol` per segment.
pub fn full_state_evolve(
    schedule: &Schedule,
    data_qubits: &[usize],
    n_anc: usize,
    input: ArrayView1<C64>,
    tol: f64,
) -> Result<Array1<C64>> {
    let n_tot = data_qubits.len() + n_anc;
    if n_tot > MAX_ORACLE_QUBITS {
        return Err(Error::SizeGuard { what: "oracle qubits", value: n_tot, limit: MAX_ORACLE_QUBITS });
    }
    let dim = 1usize << n_tot;
    if input.len() != dim {
        return Err(Error::Dimension { expected: dim, got: input.len() });
    }
    let reg = Register { data: data_qubits.to_vec(), n_anc };
    let mut v = input.to_owned();
    for step in schedule.steps() {
        match step {
            Step::Evolve { spec, duration } => {
                reg.check(spec)?;
                if *duration != 0.0 {
                    v = expmv_lanczos(|x| reg.apply_spec(spec, x), v.view(), *duration, tol)?;
                }
            }
            Step::Rotate(rots) => {
                for r in rots {
                    let bit = reg.data_bit(r.qubit)?;
                    let u = rotation_matrix(r.axis, r.angle);
                    for i in 0..dim {
                        if i & bit == 0 {
                            let (a, b) = (v[i], v[i | bit]);
                            v[i] = u[0][0] * a + u[0][1] * b;
                            v[i | bit] = u[1][0] * a + u[1][1] * b;
                        }
                    }
                }
            }
        }
    }
    Ok(v)
}

struct Register {
    data: Vec<usize>,
    n_anc: usize,
}

impl Register {
    fn data_bit(&self, label: usize) -> Result<usize> {
        let pos = self.data.iter().position(|&q| q == label).ok_or(Error::UnknownQubit(label))?;
        Ok(1 << (self.n_anc + self.data.len() - 1 - pos))
    }

    fn anc_bit(&self, site: usize) -> usize {
        1 << (self.n_anc - 1 - site)
    }

    fn check(&self, spec: &HamiltonianSpec) -> Result<()> {
        for t in &spec.terms {
            for &l in t.data.keys() {
                self.data_bit(l)?;
            }
            for (w, _) in t.ancilla.terms() {
                for a in w {
                    if a.is_boson() {
                        return Err(Error::Symbol { symbol: a.symbol().into(), space: "full-qubit" });
                    }
                    if let Atom::Weighted { weights, .. } = a {
                        if weights.len() != self.n_anc {
                            return Err(Error::Dimension { expected: self.n_anc, got: weights.len() });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_spec(&self, spec: &HamiltonianSpec, v: ArrayView1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(v.len());
        for t in &spec.terms {
            let mut anc = Array1::zeros(v.len());
            for (w, c) in t.ancilla.terms() {
                let mut x = v.to_owned();
                for a in w.iter().rev() {
                    x = self.apply_atom(a, x.view());
                }
                anc.scaled_add(*c, &x);
            }
            for (&l, &p) in &t.data {
                anc = pauli(anc.view(), self.data_bit(l).unwrap(), p);
            }
            out.scaled_add(C64::new(t.coeff, 0.0), &anc);
        }
        out
    }

    fn apply_atom(&self, a: &Atom, v: ArrayView1<C64>) -> Array1<C64> {
        let axis = a.spin_axis().expect("spin atom");
        let mut out = Array1::zeros(v.len());
        for s in 0..self.n_anc {
            let w = match a {
                Atom::Weighted { weights, .. } => weights[s],
                _ => 1.0,
            };
            if w != 0.0 {
                out.scaled_add(C64::new(w, 0.0), &pauli(v, self.anc_bit(s), axis));
            }
        }
        out
    }
}

fn pauli(v: ArrayView1<C64>, bit: usize, p: Pauli) -> Array1<C64> {
    let mut out = Array1::zeros(v.len());
    for i in 0..v.len() {
        let set = i & bit != 0;
        match p {
            Pauli::X => out[i ^ bit] = v[i],
            Pauli::Y => out[i ^ bit] = if set { -I * v[i] } else { I * v[i] },
            Pauli::Z => out[i] = if set { -v[i] } else { v[i] },
        }
    }
    out
}

/// `b = (1/(2√N)) (1 - (N - Z)/(2N))^{-1/2} (X + iY)` on `Dicke(N)`, with
/// the inverse square root taken through an eigendecomposition (its null
/// direction at `m = N` is never reached by the lowering operator).
pub fn exact_hp_operator(n: usize) -> Result<Array2<C64>> {
    let ops = build_collective_ops(AncillaSpace::dicke(n)?)?;
    let x = ops.spin(Pauli::X).unwrap().to_dense();
    let y = ops.spin(Pauli::Y).unwrap().to_dense();
    let z = ops.spin(Pauli::Z).unwrap().to_dense();
    let nf = n as f64;
    let id = Array2::<C64>::eye(n + 1);
    let frac = &id - &((&id * C64::new(nf, 0.0) - &z) / C64::new(2.0 * nf, 0.0));
    let f = HermitianEig::new(&frac)?.map(|l| if l > 1e-12 { C64::new(l.powf(-0.5), 0.0) } else { C64::new(0.0, 0.0) });
    let raising = &x + &(&y * I);
    Ok(f.dot(&raising) / C64::new(2.0 * nf.sqrt(), 0.0))
}

/// Fidelity-style overlap `|⟨a|b⟩|²`.
pub fn overlap(a: ArrayView1<C64>, b: ArrayView1<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y).norm_sqr()
}
