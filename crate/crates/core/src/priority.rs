//! Priority models: strict partial orders on interactions.

use std::collections::{HashMap, HashSet};

use crate::connector::Interaction;
use crate::error::{BipError, Result};

/// A strict partial order given by generating pairs `lower ≺ higher`; the
/// order itself is their transitive closure.
#[derive(Clone, Debug, Default)]
pub struct PriorityModel {
    pairs: Vec<(Interaction, Interaction)>,
    // interaction -> every interaction strictly above it
    above: HashMap<Interaction, HashSet<Interaction>>,
}

impl PriorityModel {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Fails with a definition error when the pairs are not a strict order.
    pub fn new(pairs: Vec<(Interaction, Interaction)>) -> Result<Self> {
        let mut direct: HashMap<Interaction, Vec<Interaction>> = HashMap::new();
        for &(lo, hi) in &pairs {
            if lo == hi {
                return Err(BipError::Definition(format!(
                    "priority pair {lo:?} < {hi:?} is reflexive"
                )));
            }
            direct.entry(lo).or_default().push(hi);
        }
        let mut above = HashMap::new();
        for &lo in direct.keys() {
            let mut seen = HashSet::new();
            let mut stack: Vec<Interaction> = direct[&lo].clone();
            while let Some(x) = stack.pop() {
                if x == lo {
                    return Err(BipError::Definition(format!(
                        "priority model is cyclic through {lo:?}"
                    )));
                }
                if seen.insert(x) {
                    if let Some(next) = direct.get(&x) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            above.insert(lo, seen);
        }
        Ok(Self { pairs, above })
    }

    pub fn pairs(&self) -> &[(Interaction, Interaction)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `a ≺ b` in the closed order.
    pub fn less(&self, a: &Interaction, b: &Interaction) -> bool {
        self.above.get(a).is_some_and(|s| s.contains(b))
    }
}

/// Keeps the interactions of `enabled` that no other enabled interaction
/// dominates.
pub fn apply_priority(enabled: &[Interaction], model: &PriorityModel) -> Vec<Interaction> {
    if model.is_empty() {
        return enabled.to_vec();
    }
    let set: HashSet<&Interaction> = enabled.iter().collect();
    enabled
        .iter()
        .filter(|a| match model.above.get(a) {
            Some(higher) => !higher.iter().any(|h| set.contains(h)),
            None => true,
        })
        .copied()
        .collect()
}
