use std::f64::consts::PI;

use super::{HamiltonianSpec, Pauli};
use crate::error::{Error, Result};

/// `exp(-i · angle/2 · σ_axis)` on one data qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub qubit: usize,
    pub axis: Pauli,
    pub angle: f64,
}

impl Rotation {
    pub fn new(qubit: usize, axis: Pauli, angle: f64) -> Self {
        Self { qubit, axis, angle }
    }

    pub fn inverse(&self) -> Self {
        Self { angle: -self.angle, ..*self }
    }

    /// Hadamard up to global phase: `R_y(π/2) R_z(π) = -i H`.
    pub fn hadamard(qubit: usize) -> [Rotation; 2] {
        [Rotation::new(qubit, Pauli::Z, PI), Rotation::new(qubit, Pauli::Y, PI / 2.0)]
    }

    /// Pauli gate up to global phase: `R_σ(π) = -i σ`.
    pub fn pauli(qubit: usize, axis: Pauli) -> Rotation {
        Rotation::new(qubit, axis, PI)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Evolve { spec: HamiltonianSpec, duration: f64 },
    /// Applied in list order.
    Rotate(Vec<Rotation>),
}

/// Time-ordered sequence of piecewise-constant evolutions and instantaneous
/// single-qubit rotations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schedule {
    steps: Vec<Step>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn push_evolve(&mut self, spec: HamiltonianSpec, duration: f64) -> Result<()> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::InvalidParameter(format!("segment duration {duration} must be finite and non-negative")));
        }
        self.steps.push(Step::Evolve { spec, duration });
        Ok(())
    }

    pub fn push_rotations(&mut self, rotations: impl IntoIterator<Item = Rotation>) {
        let r: Vec<_> = rotations.into_iter().collect();
        if !r.is_empty() {
            self.steps.push(Step::Rotate(r));
        }
    }

    pub fn append(&mut self, other: &Schedule) {
        self.steps.extend(other.steps.iter().cloned());
    }

    pub fn total_time(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Evolve { duration, .. } => *duration,
                Step::Rotate(_) => 0.0,
            })
            .sum()
    }

    pub fn n_segments(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Evolve { .. })).count()
    }

    pub fn segments(&self) -> impl Iterator<Item = (&HamiltonianSpec, f64)> {
        self.steps.iter().filter_map(|s| match s {
            Step::Evolve { spec, duration } => Some((spec, *duration)),
            Step::Rotate(_) => None,
        })
    }

    /// The inverse unitary: steps in reverse order, each inverted.
    pub fn reversed(&self) -> Schedule {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Evolve { spec, duration } => Step::Evolve { spec: spec.negated(), duration: *duration },
                Step::Rotate(r) => Step::Rotate(r.iter().rev().map(Rotation::inverse).collect()),
            })
            .collect();
        Schedule { steps }
    }

    /// Same unitary with every Hamiltonian multiplied by `lambda` and every
    /// duration divided by it.
    pub fn rescaled(&self, lambda: f64) -> Result<Schedule> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("rescale factor {lambda} must be positive")));
        }
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                Step::Evolve { spec, duration } => Step::Evolve { spec: spec.scaled(lambda), duration: duration / lambda },
                r => r.clone(),
            })
            .collect();
        Ok(Schedule { steps })
    }

    /// Applies `f` to every segment's spec.
    pub fn map_specs(&self, mut f: impl FnMut(&HamiltonianSpec, f64) -> Result<(HamiltonianSpec, f64)>) -> Result<Schedule> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            steps.push(match s {
                Step::Evolve { spec, duration } => {
                    let (spec, duration) = f(spec, *duration)?;
                    Step::Evolve { spec, duration }
                }
                r => r.clone(),
            });
        }
        Ok(Schedule { steps })
    }
}
