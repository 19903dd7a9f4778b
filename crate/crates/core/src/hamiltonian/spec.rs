use std::collections::{BTreeMap, BTreeSet};

use super::{AncillaPolynomial, Pauli};
use crate::error::{Error, Result};

/// `coeff · (⊗ data Paulis) ⊗ ancilla`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub data: BTreeMap<usize, Pauli>,
    pub ancilla: AncillaPolynomial,
}

impl Term {
    pub fn new(coeff: f64, data: impl IntoIterator<Item = (usize, Pauli)>, ancilla: AncillaPolynomial) -> Self {
        Self { coeff, data: data.into_iter().collect(), ancilla }
    }

    /// Spatial support size of the largest monomial, for spin terms.
    pub fn locality(&self) -> usize {
        self.data.len() + self.ancilla.degree()
    }

    pub fn is_data_diagonal(&self) -> bool {
        self.data.values().all(|p| *p == Pauli::Z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub n_tot: usize,
    /// Ancilla count `N`; also fixes the boson-spin correspondence.
    pub n_anc: usize,
    /// Locality bound `K`.
    pub locality: usize,
    pub terms: Vec<Term>,
}

impl HamiltonianSpec {
    pub fn new(n_tot: usize, n_anc: usize, locality: usize) -> Self {
        Self { n_tot, n_anc, locality, terms: Vec::new() }
    }

    pub fn with_term(mut self, term: Term) -> Self {
        self.terms.push(term);
        self
    }

    pub fn push(&mut self, coeff: f64, data: impl IntoIterator<Item = (usize, Pauli)>, ancilla: AncillaPolynomial) {
        self.terms.push(Term::new(coeff, data, ancilla));
    }

    pub fn is_boson(&self) -> bool {
        self.terms.iter().any(|t| t.ancilla.has_boson())
    }

    pub fn is_data_diagonal(&self) -> bool {
        self.terms.iter().all(Term::is_data_diagonal)
    }

    pub fn data_labels(&self) -> BTreeSet<usize> {
        self.terms.iter().flat_map(|t| t.data.keys().copied()).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.ancilla.degree()).max().unwrap_or(0)
    }

    /// Rejects spin terms whose support exceeds `K`. Boson terms have no
    /// spatial support and are not checked.
    pub fn check_locality(&self) -> Result<()> {
        if self.locality == 0 {
            return Err(Error::InvalidParameter("locality K must be positive".into()));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.ancilla.has_boson() {
                continue;
            }
            if t.locality() > self.locality {
                return Err(Error::InvalidParameter(format!(
                    "term {i} acts on {} qubits, exceeding K = {}",
                    t.locality(),
                    self.locality
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }
}
