//! Schedule documents.
//!
//! ```json
//! {"n_tot": 3, "n_anc": 2, "K": 2, "segments": [
//!   {"duration": "5.0000000000000000e-1",
//!    "terms": [{"coeff": "1.0000000000000000e0", "data_pauli": {"0": "Z"},
//!               "ancilla_poly": [{"coeff": ["1.0e0", "0.0e0"], "word": ["X"]}]}]},
//!   {"rotations": [{"qubit": 0, "axis": "Z", "angle": "1.5707963267948966e0"}]}]}
//! ```
//!
//! Reals are written as decimal strings with 17 significant digits so a
//! round trip is bit-exact; plain JSON numbers are accepted on input.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AncillaPolynomial, Atom, HamiltonianSpec, Pauli, Rotation, Schedule, Step, Term};
use crate::error::{Error, Result};

/// A real number serialized as a 17-significant-digit string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_real(self.0))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                v.trim().parse().map(Real).map_err(|_| E::custom(format!("`{v}` is not a decimal number")))
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffDoc {
    Complex([Real; 2]),
    Real(Real),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AtomDoc {
    Symbol(String),
    Weighted { axis: Pauli, weights: Vec<Real> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialDoc {
    coeff: CoeffDoc,
    word: Vec<AtomDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    coeff: Real,
    #[serde(default)]
    data_pauli: BTreeMap<String, Pauli>,
    #[serde(default)]
    ancilla_poly: Vec<MonomialDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RotationDoc {
    qubit: usize,
    axis: Pauli,
    angle: Real,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SegmentDoc {
    Evolve {
        duration: Real,
        terms: Vec<TermDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_tot: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_anc: Option<usize>,
        #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
    },
    Rotate {
        rotations: Vec<RotationDoc>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    n_tot: usize,
    #[serde(default)]
    n_anc: usize,
    #[serde(rename = "K")]
    k: usize,
    segments: Vec<SegmentDoc>,
}

fn poly_to_doc(p: &AncillaPolynomial) -> Vec<MonomialDoc> {
    p.terms()
        .iter()
        .map(|(w, c)| MonomialDoc {
            coeff: CoeffDoc::Complex([Real(c.re), Real(c.im)]),
            word: w
                .iter()
                .map(|a| match a {
                    Atom::Weighted { axis, weights } => {
                        AtomDoc::Weighted { axis: *axis, weights: weights.iter().copied().map(Real).collect() }
                    }
                    a => AtomDoc::Symbol(a.symbol().to_string()),
                })
                .collect(),
        })
        .collect()
}

fn poly_from_doc(doc: Vec<MonomialDoc>) -> Result<AncillaPolynomial> {
    let mut terms = Vec::with_capacity(doc.len());
    for m in doc {
        let c = match m.coeff {
            CoeffDoc::Complex([re, im]) => C64::new(re.0, im.0),
            CoeffDoc::Real(re) => C64::new(re.0, 0.0),
        };
        let mut word = Vec::with_capacity(m.word.len());
        for a in m.word {
            word.push(match a {
                AtomDoc::Symbol(s) => {
                    Atom::from_symbol(&s).ok_or_else(|| Error::Format(format!("unknown ancilla symbol `{s}`")))?
                }
                AtomDoc::Weighted { axis, weights } => Atom::Weighted { axis, weights: weights.into_iter().map(|r| r.0).collect() },
            });
        }
        terms.push((word, c));
    }
    Ok(AncillaPolynomial::from_terms(terms))
}

fn term_to_doc(t: &Term) -> TermDoc {
    TermDoc {
        coeff: Real(t.coeff),
        data_pauli: t.data.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
        ancilla_poly: poly_to_doc(&t.ancilla),
    }
}

fn term_from_doc(doc: TermDoc) -> Result<Term> {
    let mut data = BTreeMap::new();
    for (k, p) in doc.data_pauli {
        let label: usize = k.trim().parse().map_err(|_| Error::Format(format!("data qubit label `{k}` is not an integer")))?;
        data.insert(label, p);
    }
    Ok(Term { coeff: doc.coeff.0, data, ancilla: poly_from_doc(doc.ancilla_poly)? })
}

pub fn schedule_to_json(schedule: &Schedule) -> Result<String> {
    let first = schedule.segments().next().map(|(s, _)| (s.n_tot, s.n_anc, s.locality));
    let (n_tot, n_anc, k) = first.unwrap_or((0, 0, 2));
    let segments = schedule
        .steps()
        .iter()
        .map(|s| match s {
            Step::Evolve { spec, duration } => SegmentDoc::Evolve {
                duration: Real(*duration),
                terms: spec.terms.iter().map(term_to_doc).collect(),
                n_tot: (spec.n_tot != n_tot).then_some(spec.n_tot),
                n_anc: (spec.n_anc != n_anc).then_some(spec.n_anc),
                k: (spec.locality != k).then_some(spec.locality),
            },
            Step::Rotate(r) => SegmentDoc::Rotate {
                rotations: r.iter().map(|r| RotationDoc { qubit: r.qubit, axis: r.axis, angle: Real(r.angle) }).collect(),
            },
        })
        .collect();
    let doc = ScheduleDoc { n_tot, n_anc, k, segments };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn schedule_from_json(text: &str) -> Result<Schedule> {
    let doc: ScheduleDoc = serde_json::from_str(text)
        .map_err(|e| Error::Format(format!("line {}, column {}: {}", e.line(), e.column(), strip_position(&e))))?;
    let mut schedule = Schedule::new();
    for (i, seg) in doc.segments.into_iter().enumerate() {
        match seg {
            SegmentDoc::Evolve { duration, terms, n_tot, n_anc, k } => {
                let mut spec = HamiltonianSpec::new(n_tot.unwrap_or(doc.n_tot), n_anc.unwrap_or(doc.n_anc), k.unwrap_or(doc.k));
                for t in terms {
                    spec.terms.push(term_from_doc(t).map_err(|e| Error::Format(format!("segment {i}: {e}")))?);
                }
                schedule.push_evolve(spec, duration.0).map_err(|e| Error::Format(format!("segment {i}: {e}")))?;
            }
            SegmentDoc::Rotate { rotations } => {
                schedule.push_rotations(rotations.into_iter().map(|r| Rotation::new(r.qubit, r.axis, r.angle.0)));
            }
        }
    }
    Ok(schedule)
}

fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(p) => msg[..p].to_string(),
        None => msg,
    }
}
