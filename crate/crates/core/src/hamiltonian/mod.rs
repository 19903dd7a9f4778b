//! Hamiltonian specifications on data ⊗ ancilla registers.

mod budget;
mod hp;
pub mod io;
mod poly;
mod schedule;
mod spec;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::linalg::{I, ONE, ZERO};

pub use budget::{validate_norm_budget, BudgetReport, BudgetVerdict, TupleClass};
pub use hp::{hp_series_coefficients, hp_truncate, substitute_boson_with_spin, Substitution};
pub use poly::{AncillaPolynomial, Atom, Word};
pub use schedule::{Rotation, Schedule, Step};
pub use spec::{HamiltonianSpec, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Row-major 2x2 matrix.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        match self {
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// `self · other = phase · result`, with `None` for the identity.
    pub fn mul(self, other: Pauli) -> (C64, Option<Pauli>) {
        use Pauli::*;
        match (self, other) {
            (a, b) if a == b => (ONE, None),
            (X, Y) => (I, Some(Z)),
            (Y, X) => (-I, Some(Z)),
            (Y, Z) => (I, Some(X)),
            (Z, Y) => (-I, Some(X)),
            (Z, X) => (I, Some(Y)),
            (X, Z) => (-I, Some(Y)),
            _ => unreachable!(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_mul(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    #[test]
    fn pauli_products_match_matrices() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (ph, r) = a.mul(b);
                let want = mat_mul(a.matrix(), b.matrix());
                let got = match r {
                    Some(p) => p.matrix(),
                    None => [[ONE, ZERO], [ZERO, ONE]],
                };
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((got[i][j] * ph - want[i][j]).norm() < 1e-15);
                    }
                }
            }
        }
    }
}
