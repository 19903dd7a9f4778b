//! Holstein-Primakoff series: boson symbols rewritten as collective spin
//! polynomials on `N` ancillae.

use std::f64::consts::SQRT_2;

use ndarray::s;
use num_complex::Complex64 as C64;

use super::{AncillaPolynomial, Atom, HamiltonianSpec, Term};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, I};
use crate::spaces::{build_collective_ops, AncillaSpace};

/// Words this many letters past the locality cap are kept aside to
/// measure what the cap drops.
const LOOKAHEAD: usize = 2;

/// Taylor coefficients of `(1 - s)^{-1/2}`: `1, 1/2, 3/8, 5/16, …`.
pub fn hp_series_coefficients(k_hp: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(k_hp + 1);
    c.push(1.0);
    for j in 1..=k_hp {
        let prev = c[j - 1];
        c.push(prev * (2 * j - 1) as f64 / (2 * j) as f64);
    }
    c
}

/// `b ≈ (1/(2√N)) Σ_{j ≤ K_hp} c_j ((N - Z)/(2N))^j (X + iY)`.
pub fn hp_truncate(k_hp: usize, n: usize) -> AncillaPolynomial {
    let nf = n as f64;
    let s = &AncillaPolynomial::scalar(C64::new(0.5, 0.0)) - &AncillaPolynomial::z().scale_re(1.0 / (2.0 * nf));
    let mut series = AncillaPolynomial::zero();
    let mut power = AncillaPolynomial::identity();
    for (j, c) in hp_series_coefficients(k_hp).into_iter().enumerate() {
        if j > 0 {
            power = &power * &s;
        }
        series = &series + &power.scale_re(c);
    }
    let raising = &AncillaPolynomial::x() + &AncillaPolynomial::y().scale(I);
    (&series * &raising).scale_re(1.0 / (2.0 * nf.sqrt()))
}

#[derive(Clone, Debug)]
pub struct Substitution {
    pub spec: HamiltonianSpec,
    /// `Σ_terms |coeff| · ‖dropped part‖` on the excitation window.
    pub dropped_norm: f64,
    pub warning: Option<String>,
}

/// Replaces `b, b†, x̂, p̂` by truncated spin polynomials, Hermitizes, and
/// caps each term's locality at `K`. The dropped norm is measured on Dicke
/// levels `m ≤ window`.
pub fn substitute_boson_with_spin(spec: &HamiltonianSpec, k_hp: usize, window: usize, tolerated: f64) -> Result<Substitution> {
    let n = spec.n_anc;
    if n == 0 {
        return Err(Error::InvalidParameter("spin substitution needs at least one ancilla".into()));
    }
    let b = hp_truncate(k_hp, n);
    let bdag = b.adjoint();
    let xq = (&b + &bdag).scale_re(1.0 / SQRT_2);
    let pq = (&b - &bdag).scale(-I / SQRT_2);
    let replace = |a: &Atom| -> AncillaPolynomial {
        match a {
            Atom::B => b.clone(),
            Atom::Bdag => bdag.clone(),
            Atom::Xq => xq.clone(),
            Atom::Pq => pq.clone(),
            other => AncillaPolynomial::atom(other.clone()),
        }
    };

    let ops = build_collective_ops(AncillaSpace::Dicke(n))?;
    let w = window.min(n);
    let mut norm_cache: Vec<(AncillaPolynomial, f64)> = Vec::new();
    let mut out = HamiltonianSpec::new(spec.n_tot, n, spec.locality);
    let mut dropped_norm = 0.0;
    for t in &spec.terms {
        let cap = spec.locality.checked_sub(t.data.len()).ok_or_else(|| {
            Error::InvalidParameter(format!("term has {} data qubits, exceeding K = {}", t.data.len(), spec.locality))
        })?;
        let mut kept = AncillaPolynomial::zero();
        let mut spill = AncillaPolynomial::zero();
        for (word, a) in t.ancilla.terms() {
            let mut acc_kept = AncillaPolynomial::scalar(*a);
            let mut acc_spill = AncillaPolynomial::zero();
            for atom in word {
                let f = replace(atom);
                let (k1, s1) = acc_kept.mul_capped(&f, cap, LOOKAHEAD);
                let (_, s2) = acc_spill.mul_capped(&f, cap, LOOKAHEAD);
                acc_kept = k1;
                acc_spill = &s1 + &s2;
            }
            kept = &kept + &acc_kept;
            spill = &spill + &acc_spill;
        }
        let kept = kept.hermitize();
        let spill = spill.hermitize();
        if !spill.is_zero() {
            let norm = match norm_cache.iter().find(|(p, _)| *p == spill) {
                Some((_, v)) => *v,
                None => {
                    let m = spill.to_sparse(&ops)?.to_dense();
                    let v = spectral_norm(&m.slice(s![..=w, ..=w]).to_owned())?;
                    norm_cache.push((spill.clone(), v));
                    v
                }
            };
            dropped_norm += t.coeff.abs() * norm;
        }
        if !kept.is_zero() {
            out.terms.push(Term { coeff: t.coeff, data: t.data.clone(), ancilla: kept });
        }
    }
    let warning = (dropped_norm > tolerated).then(|| {
        format!("locality cap K = {} drops weight {dropped_norm:.3e} (tolerated {tolerated:.3e})", spec.locality)
    });
    Ok(Substitution { spec: out, dropped_norm, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Pauli;

    #[test]
    fn series_coefficients_match_rationals() {
        // (2j)! / (4^j (j!)^2)
        let want = [1.0, 0.5, 0.375, 0.3125, 35.0 / 128.0, 63.0 / 256.0, 231.0 / 1024.0, 429.0 / 2048.0, 6435.0 / 32768.0];
        let got = hp_series_coefficients(8);
        for (g, w) in got.iter().zip(want) {
            assert_eq!(*g, w);
        }
    }

    #[test]
    fn squeezing_generator_leading_order() {
        let n = 40;
        let b = AncillaPolynomial::b();
        let bdag = AncillaPolynomial::bdag();
        let hs = (&(&b * &b) - &(&bdag * &bdag)).scale(I * (n as f64 / 2.0));
        let spec = HamiltonianSpec::new(n, n, 2).with_term(Term::new(1.0, [], hs));
        let sub = substitute_boson_with_spin(&spec, 0, n, f64::INFINITY).unwrap();
        let want = (&(&AncillaPolynomial::x() * &AncillaPolynomial::y()) + &(&AncillaPolynomial::y() * &AncillaPolynomial::x()))
            .scale_re(-0.25);
        let got = &sub.spec.terms[0].ancilla;
        let ops = build_collective_ops(AncillaSpace::Dicke(n)).unwrap();
        let diff = (got - &want).to_sparse(&ops).unwrap();
        assert!(diff.max_abs() < 1e-12);
        assert_eq!(sub.dropped_norm, 0.0);
    }

    #[test]
    fn position_at_leading_order() {
        let n = 10;
        let spec = HamiltonianSpec::new(n + 1, n, 2).with_term(Term::new(1.0, [(0, Pauli::Z)], AncillaPolynomial::xq()));
        let sub = substitute_boson_with_spin(&spec, 0, n, f64::INFINITY).unwrap();
        let want = AncillaPolynomial::x().scale_re(1.0 / (2.0 * n as f64).sqrt());
        let ops = build_collective_ops(AncillaSpace::Dicke(n)).unwrap();
        let diff = (&sub.spec.terms[0].ancilla - &want).to_sparse(&ops).unwrap();
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn cap_reports_dropped_weight() {
        let n = 30;
        let spec = HamiltonianSpec::new(n + 1, n, 4).with_term(Term::new(1.0, [(0, Pauli::Z)], AncillaPolynomial::xq().pow(3)));
        let sub = substitute_boson_with_spin(&spec, 1, 5, 1e-12).unwrap();
        assert!(sub.dropped_norm > 0.0);
        assert!(sub.warning.is_some());
        assert!(sub.spec.terms[0].ancilla.degree() <= 3);
    }
}
