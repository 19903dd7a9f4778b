//! Per-tuple coupling budget of K-local all-to-all Hamiltonians.
//!
//! A collective word `L_1 ⋯ L_k` with `L = Σ_s σ^L_s` expands into Pauli
//! strings on ancilla sites. Uniform words are expanded symbolically: site
//! assignments are grouped by which positions share a site, and only the
//! multiset of resulting single-site Paulis matters by symmetry. Words with
//! site-weighted atoms are expanded site by site.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64 as C64;

use super::{Atom, HamiltonianSpec, Pauli};
use crate::linalg::ONE;

const SLACK: f64 = 1e-9;
const MAX_EXPLICIT_ASSIGNMENTS: f64 = 1e7;

/// Ancilla part of a site tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AncillaTuple {
    /// Any set of this many ancilla sites (all equivalent by symmetry).
    AnyOf(usize),
    Sites(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleClass {
    pub data: Vec<usize>,
    pub ancilla: AncillaTuple,
}

impl TupleClass {
    pub fn k(&self) -> usize {
        self.data.len()
            + match &self.ancilla {
                AncillaTuple::AnyOf(j) => *j,
                AncillaTuple::Sites(s) => s.len(),
            }
    }
}

impl fmt::Display for TupleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let data: Vec<String> = self.data.iter().map(|d| format!("d{d}")).collect();
        write!(f, "{{{}", data.join(","))?;
        match &self.ancilla {
            AncillaTuple::AnyOf(0) => {}
            AncillaTuple::AnyOf(j) => write!(f, "{}any {j} ancilla", if data.is_empty() { "" } else { "; " })?,
            AncillaTuple::Sites(s) => {
                let s: Vec<String> = s.iter().map(|a| format!("a{a}")).collect();
                write!(f, "{}{}", if data.is_empty() { "" } else { "," }, s.join(","))?
            }
        }
        write!(f, "}} (k={})", self.k())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetReport {
    /// `max_tuple Σ|J| / N_tot^{2-k}` over tuples with `k ≥ 2`.
    pub worst_ratio: f64,
    pub worst_tuple: Option<TupleClass>,
    pub tuples_checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BudgetVerdict {
    Ok(BudgetReport),
    Violation(BudgetReport),
    /// Specs with boson symbols have no site expansion.
    NotApplicable(String),
}

impl BudgetVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, BudgetVerdict::Ok(_))
    }

    pub fn report(&self) -> Option<&BudgetReport> {
        match self {
            BudgetVerdict::Ok(r) | BudgetVerdict::Violation(r) => Some(r),
            BudgetVerdict::NotApplicable(_) => None,
        }
    }

    pub fn worst_ratio(&self) -> Option<f64> {
        self.report().map(|r| r.worst_ratio)
    }
}

impl fmt::Display for BudgetVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, tag: &str, r: &BudgetReport| match &r.worst_tuple {
            Some(t) => write!(f, "{tag}: worst tuple {t} uses {:.6} of its budget ({} tuple classes)", r.worst_ratio, r.tuples_checked),
            None => write!(f, "{tag}: no multi-site couplings"),
        };
        match self {
            BudgetVerdict::Ok(r) => line(f, "ok", r),
            BudgetVerdict::Violation(r) => line(f, "violation", r),
            BudgetVerdict::NotApplicable(why) => write!(f, "not applicable: {why}"),
        }
    }
}

type DataString = Vec<(usize, Pauli)>;

/// Checks `Σ_a |J| ≤ N_tot^{2-k}` for every site tuple with `k ≥ 2`.
pub fn validate_norm_budget(spec: &HamiltonianSpec) -> BudgetVerdict {
    if spec.is_boson() {
        return BudgetVerdict::NotApplicable("boson symbols must be substituted by spin operators first".into());
    }
    let n = spec.n_anc;
    let explicit = spec.terms.iter().any(|t| t.ancilla.has_weighted());
    let usage = if explicit { explicit_usage(spec, n) } else { symmetric_usage(spec, n) };
    let usage = match usage {
        Ok(u) => u,
        Err(why) => return BudgetVerdict::NotApplicable(why),
    };

    let n_tot = spec.n_tot.max(1) as f64;
    let mut worst_ratio = 0.0;
    let mut worst_tuple = None;
    let mut checked = 0;
    for (class, total) in usage {
        let k = class.k();
        if k < 2 {
            continue;
        }
        checked += 1;
        let ratio = total / n_tot.powi(2 - k as i32);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_tuple = Some(class);
        }
    }
    let report = BudgetReport { worst_ratio, worst_tuple, tuples_checked: checked };
    if worst_ratio <= 1.0 + SLACK {
        BudgetVerdict::Ok(report)
    } else {
        BudgetVerdict::Violation(report)
    }
}

/// Symmetric expansion state: active blocks per resulting Pauli and the
/// number of blocks that multiplied out to the identity.
type BlockState = ([usize; 3], usize);

fn expand_uniform_word(word: &[Pauli], n: usize) -> HashMap<BlockState, C64> {
    let mut states: HashMap<BlockState, C64> = HashMap::from([(([0; 3], 0), ONE)]);
    for &letter in word {
        let mut next: HashMap<BlockState, C64> = HashMap::with_capacity(states.len() * 3);
        for ((counts, q), c) in states {
            let used = counts.iter().sum::<usize>() + q;
            if used < n {
                let mut nc = counts;
                nc[letter.index()] += 1;
                *next.entry((nc, q)).or_default() += c;
            }
            for p in Pauli::ALL {
                let mult = counts[p.index()];
                if mult == 0 {
                    continue;
                }
                let (phase, r) = p.mul(letter);
                let mut nc = counts;
                nc[p.index()] -= 1;
                let nq = match r {
                    Some(r) => {
                        nc[r.index()] += 1;
                        q
                    }
                    None => q + 1,
                };
                *next.entry((nc, nq)).or_default() += c * phase * mult as f64;
            }
            if q > 0 {
                let mut nc = counts;
                nc[letter.index()] += 1;
                *next.entry((nc, q - 1)).or_default() += c * q as f64;
            }
        }
        states = next;
    }
    // per concrete Pauli string: Π count! · (N-j)(N-j-1)⋯ for identity blocks
    states
        .into_iter()
        .map(|((counts, q), c)| {
            let j: usize = counts.iter().sum();
            let perm: f64 = counts.iter().map(|&m| factorial(m)).product();
            let free = falling_factorial(n.saturating_sub(j) as f64, q);
            ((counts, q), c * perm * free)
        })
        .collect()
}

fn symmetric_usage(spec: &HamiltonianSpec, n: usize) -> Result<BTreeMap<TupleClass, f64>, String> {
    let mut per_string: HashMap<(DataString, [usize; 3]), C64> = HashMap::new();
    for t in &spec.terms {
        let data: DataString = t.data.iter().map(|(&l, &p)| (l, p)).collect();
        for (word, a) in t.ancilla.terms() {
            let letters: Vec<Pauli> = word.iter().map(|x| x.spin_axis().expect("spin word")).collect();
            for ((counts, _), c) in expand_uniform_word(&letters, n) {
                *per_string.entry((data.clone(), counts)).or_default() += c * a * t.coeff;
            }
        }
    }
    let mut usage: BTreeMap<TupleClass, f64> = BTreeMap::new();
    for ((data, counts), c) in per_string {
        let j: usize = counts.iter().sum();
        let arrangements = factorial(j) / counts.iter().map(|&m| factorial(m)).product::<f64>();
        let class = TupleClass { data: data.iter().map(|(l, _)| *l).collect(), ancilla: AncillaTuple::AnyOf(j) };
        *usage.entry(class).or_default() += c.norm() * arrangements;
    }
    Ok(usage)
}

fn explicit_usage(spec: &HamiltonianSpec, n: usize) -> Result<BTreeMap<TupleClass, f64>, String> {
    let mut per_string: HashMap<(DataString, Vec<(usize, Pauli)>), C64> = HashMap::new();
    for t in &spec.terms {
        let data: DataString = t.data.iter().map(|(&l, &p)| (l, p)).collect();
        for (word, a) in t.ancilla.terms() {
            let k = word.len();
            if (n as f64).powi(k as i32) > MAX_EXPLICIT_ASSIGNMENTS {
                return Err(format!("site-weighted word of length {k} on {n} ancillae is too large to expand"));
            }
            let weight = |atom: &Atom, s: usize| match atom {
                Atom::Weighted { weights, .. } => weights.get(s).copied().unwrap_or(0.0),
                _ => 1.0,
            };
            let mut sites = vec![0usize; k];
            loop {
                let mut w = 1.0;
                for (atom, &s) in word.iter().zip(&sites) {
                    w *= weight(atom, s);
                }
                if w != 0.0 {
                    let mut on_site: BTreeMap<usize, Option<Pauli>> = BTreeMap::new();
                    let mut phase = ONE;
                    for (atom, &s) in word.iter().zip(&sites) {
                        let letter = atom.spin_axis().expect("spin word");
                        let cur = on_site.entry(s).or_insert(None);
                        *cur = match *cur {
                            None => Some(letter),
                            Some(p) => {
                                let (ph, r) = p.mul(letter);
                                phase *= ph;
                                r
                            }
                        };
                    }
                    let anc: Vec<(usize, Pauli)> = on_site.into_iter().filter_map(|(s, p)| p.map(|p| (s, p))).collect();
                    *per_string.entry((data.clone(), anc)).or_default() += phase * w * a * t.coeff;
                }
                if !advance(&mut sites, n) {
                    break;
                }
            }
        }
    }
    let mut usage: BTreeMap<TupleClass, f64> = BTreeMap::new();
    for ((data, anc), c) in per_string {
        let class = TupleClass {
            data: data.iter().map(|(l, _)| *l).collect(),
            ancilla: AncillaTuple::Sites(anc.iter().map(|(s, _)| *s).collect()),
        };
        *usage.entry(class).or_default() += c.norm();
    }
    Ok(usage)
}

fn advance(sites: &mut [usize], n: usize) -> bool {
    for s in sites.iter_mut().rev() {
        *s += 1;
        if *s < n {
            return true;
        }
        *s = 0;
    }
    false
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

fn falling_factorial(x: f64, q: usize) -> f64 {
    (0..q).map(|i| x - i as f64).product()
}
