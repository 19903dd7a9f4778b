//! Non-commutative polynomials in collective ancilla operators.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use super::Pauli;
use crate::error::{Error, Result};
use crate::linalg::{SparseOp, ONE};
use crate::spaces::CollectiveOps;

/// A formal operator symbol acting on the ancilla register.
#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    /// Collective spin `Σ_i X_i`.
    X,
    Y,
    Z,
    /// Boson annihilation `b`.
    B,
    /// Boson creation `b†`.
    Bdag,
    /// Position quadrature `(b + b†)/√2`.
    Xq,
    /// Momentum quadrature `(b - b†)/(√2 i)`.
    Pq,
    /// Site-weighted collective Pauli `Σ_i w_i P_i`.
    Weighted { axis: Pauli, weights: Vec<f64> },
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        if let Atom::Weighted { axis, weights } = self {
            axis.hash(state);
            for w in weights {
                w.to_bits().hash(state);
            }
        }
    }
}

impl Atom {
    pub fn is_boson(&self) -> bool {
        matches!(self, Atom::B | Atom::Bdag | Atom::Xq | Atom::Pq)
    }

    pub fn adjoint(&self) -> Atom {
        match self {
            Atom::B => Atom::Bdag,
            Atom::Bdag => Atom::B,
            other => other.clone(),
        }
    }

    /// Pauli letter carried on each ancilla site, for spin atoms.
    pub fn spin_axis(&self) -> Option<Pauli> {
        match self {
            Atom::X => Some(Pauli::X),
            Atom::Y => Some(Pauli::Y),
            Atom::Z => Some(Pauli::Z),
            Atom::Weighted { axis, .. } => Some(*axis),
            _ => None,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Atom::X => "X",
            Atom::Y => "Y",
            Atom::Z => "Z",
            Atom::B => "b",
            Atom::Bdag => "bdag",
            Atom::Xq => "x",
            Atom::Pq => "p",
            Atom::Weighted { .. } => "weighted",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Atom> {
        Some(match s {
            "X" => Atom::X,
            "Y" => Atom::Y,
            "Z" => Atom::Z,
            "b" => Atom::B,
            "bdag" => Atom::Bdag,
            "x" => Atom::Xq,
            "p" => Atom::Pq,
            _ => return None,
        })
    }

    pub fn to_sparse(&self, ops: &CollectiveOps) -> Result<SparseOp> {
        let unsupported = || Error::Symbol { symbol: self.symbol().to_string(), space: ops.space().kind() };
        match (self, ops) {
            (Atom::X | Atom::Y | Atom::Z, CollectiveOps::Spin { .. }) => {
                Ok(ops.spin(self.spin_axis().unwrap()).unwrap().clone())
            }
            (Atom::Weighted { axis, weights }, CollectiveOps::Spin { .. }) => ops.weighted(*axis, weights),
            (Atom::B, CollectiveOps::Boson { b, .. }) => Ok(b.clone()),
            (Atom::Bdag, CollectiveOps::Boson { bdag, .. }) => Ok(bdag.clone()),
            (Atom::Xq, CollectiveOps::Boson { x, .. }) => Ok(x.clone()),
            (Atom::Pq, CollectiveOps::Boson { p, .. }) => Ok(p.clone()),
            _ => Err(unsupported()),
        }
    }
}

pub type Word = Vec<Atom>;

/// `Σ c_w · w` over words `w` of atoms; the empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AncillaPolynomial {
    terms: Vec<(Word, C64)>,
}

impl AncillaPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        Self::from_terms(vec![(Vec::new(), c)])
    }

    pub fn atom(a: Atom) -> Self {
        Self::from_terms(vec![(vec![a], ONE)])
    }

    pub fn x() -> Self {
        Self::atom(Atom::X)
    }
    pub fn y() -> Self {
        Self::atom(Atom::Y)
    }
    pub fn z() -> Self {
        Self::atom(Atom::Z)
    }
    pub fn b() -> Self {
        Self::atom(Atom::B)
    }
    pub fn bdag() -> Self {
        Self::atom(Atom::Bdag)
    }
    pub fn xq() -> Self {
        Self::atom(Atom::Xq)
    }
    pub fn pq() -> Self {
        Self::atom(Atom::Pq)
    }

    pub fn weighted(axis: Pauli, weights: Vec<f64>) -> Self {
        Self::atom(Atom::Weighted { axis, weights })
    }

    pub fn from_terms(terms: Vec<(Word, C64)>) -> Self {
        let mut p = Self { terms };
        p.simplify();
        p
    }

    pub fn terms(&self) -> &[(Word, C64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merges repeated words (keeping first-occurrence order) and drops zeros.
    pub fn simplify(&mut self) {
        let mut index: HashMap<Word, usize> = HashMap::with_capacity(self.terms.len());
        let mut out: Vec<(Word, C64)> = Vec::with_capacity(self.terms.len());
        for (w, c) in self.terms.drain(..) {
            match index.get(&w) {
                Some(&k) => out[k].1 += c,
                None => {
                    index.insert(w.clone(), out.len());
                    out.push((w, c));
                }
            }
        }
        out.retain(|(_, c)| c.norm() > 1e-300);
        self.terms = out;
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(w, _)| w.len()).max().unwrap_or(0)
    }

    pub fn has_boson(&self) -> bool {
        self.terms.iter().flat_map(|(w, _)| w.iter()).any(Atom::is_boson)
    }

    pub fn has_spin(&self) -> bool {
        self.terms.iter().flat_map(|(w, _)| w.iter()).any(|a| !a.is_boson())
    }

    pub fn has_weighted(&self) -> bool {
        self.terms
            .iter()
            .flat_map(|(w, _)| w.iter())
            .any(|a| matches!(a, Atom::Weighted { .. }))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c * s)).collect())
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(w, c)| (w.iter().rev().map(Atom::adjoint).collect(), c.conj()))
                .collect(),
        )
    }

    /// `(P + P†)/2`
    pub fn hermitize(&self) -> Self {
        (self + &self.adjoint()).scale_re(0.5)
    }

    /// Product keeping only words of length `≤ cap`; returns the kept part
    /// and the part with length in `(cap, cap + lookahead]`.
    pub fn mul_capped(&self, rhs: &Self, cap: usize, lookahead: usize) -> (Self, Self) {
        let mut kept = Vec::new();
        let mut spill = Vec::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &rhs.terms {
                let len = wa.len() + wb.len();
                if len > cap + lookahead {
                    continue;
                }
                let mut w = Vec::with_capacity(len);
                w.extend_from_slice(wa);
                w.extend_from_slice(wb);
                if len <= cap {
                    kept.push((w, ca * cb));
                } else {
                    spill.push((w, ca * cb));
                }
            }
        }
        (Self::from_terms(kept), Self::from_terms(spill))
    }

    /// Keeps words of length `≤ cap`; returns (kept, dropped).
    pub fn split_degree(&self, cap: usize) -> (Self, Self) {
        let (kept, dropped): (Vec<_>, Vec<_>) = self.terms.iter().cloned().partition(|(w, _)| w.len() <= cap);
        (Self::from_terms(kept), Self::from_terms(dropped))
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(), |acc, _| &acc * self)
    }

    /// Evaluates to a sparse matrix on the space of `ops`.
    pub fn to_sparse(&self, ops: &CollectiveOps) -> Result<SparseOp> {
        let dim = ops.dim();
        let mut atoms: HashMap<&Atom, SparseOp> = HashMap::new();
        for (w, _) in &self.terms {
            for a in w {
                if !atoms.contains_key(a) {
                    atoms.insert(a, a.to_sparse(ops)?);
                }
            }
        }
        // suffix products are shared between words
        let mut suffix: HashMap<&[Atom], SparseOp> = HashMap::new();
        let mut total = SparseOp::zeros(dim);
        for (w, c) in &self.terms {
            let m = word_product(w, &atoms, &mut suffix, dim);
            total.add_scaled(&m, *c);
        }
        Ok(total)
    }

    /// True if evaluation on `ops` is Hermitian to `tol` (entrywise).
    pub fn is_hermitian_on(&self, ops: &CollectiveOps, tol: f64) -> Result<bool> {
        Ok(self.to_sparse(ops)?.hermiticity_defect() <= tol)
    }
}

fn word_product<'a>(
    w: &'a [Atom],
    atoms: &HashMap<&Atom, SparseOp>,
    cache: &mut HashMap<&'a [Atom], SparseOp>,
    dim: usize,
) -> SparseOp {
    if w.is_empty() {
        return SparseOp::identity(dim);
    }
    if let Some(m) = cache.get(w) {
        return m.clone();
    }
    let m = if w.len() == 1 {
        atoms[&w[0]].clone()
    } else {
        let tail = word_product(&w[1..], atoms, cache, dim);
        atoms[&w[0]].matmul(&tail)
    };
    cache.insert(w, m.clone());
    m
}

impl Add for &AncillaPolynomial {
    type Output = AncillaPolynomial;
    fn add(self, rhs: &AncillaPolynomial) -> AncillaPolynomial {
        AncillaPolynomial::from_terms(self.terms.iter().chain(rhs.terms.iter()).cloned().collect())
    }
}

impl Sub for &AncillaPolynomial {
    type Output = AncillaPolynomial;
    fn sub(self, rhs: &AncillaPolynomial) -> AncillaPolynomial {
        self + &rhs.scale(-ONE)
    }
}

impl Neg for &AncillaPolynomial {
    type Output = AncillaPolynomial;
    fn neg(self) -> AncillaPolynomial {
        self.scale(-ONE)
    }
}

impl Mul for &AncillaPolynomial {
    type Output = AncillaPolynomial;
    fn mul(self, rhs: &AncillaPolynomial) -> AncillaPolynomial {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (wa, ca) in &self.terms {
            for (wb, cb) in &rhs.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.push((w, ca * cb));
            }
        }
        AncillaPolynomial::from_terms(out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for AncillaPolynomial {
            type Output = AncillaPolynomial;
            fn $f(self, rhs: AncillaPolynomial) -> AncillaPolynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
