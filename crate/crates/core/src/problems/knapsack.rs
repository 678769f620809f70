use serde::{Deserialize, Serialize};

use super::block_of;
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, Shape, UtilityBounds, UtilityOracle};

/// Multiple knapsack: every item goes into some knapsack.
///
/// JSON: `{"volumes": [...], "capacities": [...], "rewards": [[...]], "kappa": ...}`
/// with `rewards[i][j]` the reward of item `i` in knapsack `j`. The penalty
/// `kappa` must exceed the sum of all rewards, so an infeasible packing never
/// ties with a feasible one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKnapsack", into = "RawKnapsack")]
pub struct KnapsackSpec {
    volumes: Vec<f64>,
    capacities: Vec<f64>,
    rewards: Vec<Vec<f64>>,
    kappa: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKnapsack {
    volumes: Vec<f64>,
    capacities: Vec<f64>,
    rewards: Vec<Vec<f64>>,
    kappa: f64,
}

impl TryFrom<RawKnapsack> for KnapsackSpec {
    type Error = Error;

    fn try_from(r: RawKnapsack) -> Result<Self> {
        KnapsackSpec::new(r.volumes, r.capacities, r.rewards, r.kappa)
    }
}

impl From<KnapsackSpec> for RawKnapsack {
    fn from(s: KnapsackSpec) -> Self {
        RawKnapsack {
            volumes: s.volumes,
            capacities: s.capacities,
            rewards: s.rewards,
            kappa: s.kappa,
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl KnapsackSpec {
    pub fn new(volumes: Vec<f64>, capacities: Vec<f64>, rewards: Vec<Vec<f64>>, kappa: f64) -> Result<Self> {
        if volumes.is_empty() || capacities.is_empty() {
            return Err(Error::InvalidSpec("need at least one item and one knapsack".into()));
        }
        if let Some(i) = volumes.iter().position(|&v| !positive(v)) {
            return Err(Error::InvalidSpec(format!("volumes[{i}] must be positive")));
        }
        if let Some(j) = capacities.iter().position(|&c| !positive(c)) {
            return Err(Error::InvalidSpec(format!("capacities[{j}] must be positive")));
        }
        if rewards.len() != volumes.len() {
            return Err(Error::InvalidSpec(format!(
                "rewards: expected {} rows (one per item), got {}",
                volumes.len(),
                rewards.len()
            )));
        }
        for (i, row) in rewards.iter().enumerate() {
            if row.len() != capacities.len() {
                return Err(Error::InvalidSpec(format!(
                    "rewards[{i}]: expected {} entries, got {}",
                    capacities.len(),
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&r| !positive(r)) {
                return Err(Error::InvalidSpec(format!("rewards[{i}][{j}] must be positive")));
            }
        }
        let total: f64 = rewards.iter().flatten().sum();
        if !(kappa.is_finite() && kappa > total) {
            return Err(Error::InvalidSpec(format!(
                "kappa ({kappa}) must exceed the total reward ({total})"
            )));
        }
        Ok(KnapsackSpec {
            volumes,
            capacities,
            rewards,
            kappa,
        })
    }

    pub fn items(&self) -> usize {
        self.volumes.len()
    }

    pub fn knapsacks(&self) -> usize {
        self.capacities.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `(m, mK)`.
    pub fn shape(&self) -> Shape {
        Shape::new(self.items(), self.items() * self.knapsacks()).expect("m <= mK")
    }

    pub fn packing(&self, matching: &Matching) -> Vec<usize> {
        let m = self.items();
        matching.assign().iter().map(|&u| block_of(u, m)).collect()
    }

    /// Total reward of an item-to-knapsack assignment, or `None` if some knapsack overflows.
    pub fn reward(&self, knapsack_of: &[usize]) -> Option<f64> {
        let mut fill = vec![0.0; self.knapsacks()];
        let mut reward = 0.0;
        for (item, &j) in knapsack_of.iter().enumerate() {
            fill[j] += self.volumes[item];
            reward += self.rewards[item][j];
        }
        let feasible = fill.iter().zip(&self.capacities).all(|(f, c)| f <= c);
        feasible.then_some(reward)
    }

    pub fn into_instance(self) -> Instance {
        Instance::new(self.shape(), self)
    }
}

/// Total reward when every knapsack fits, `-kappa` otherwise.
pub fn knapsack_utility(spec: &KnapsackSpec, matching: &Matching) -> f64 {
    spec.reward(&spec.packing(matching)).unwrap_or(-spec.kappa)
}

impl UtilityOracle for KnapsackSpec {
    fn evaluate(&self, matching: &Matching) -> f64 {
        knapsack_utility(self, matching)
    }

    fn bounds(&self) -> UtilityBounds {
        let total: f64 = self.rewards.iter().flatten().sum();
        UtilityBounds::new(-self.kappa, total).expect("finite rewards")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item_fits() {
        let spec = KnapsackSpec::new(vec![1.0], vec![2.0], vec![vec![3.0]], 10.0).unwrap();
        assert_eq!(knapsack_utility(&spec, &Matching::identity(spec.shape())), 3.0);
    }

    #[test]
    fn two_items_must_split() {
        let spec = KnapsackSpec::new(
            vec![3.0, 3.0],
            vec![4.0, 4.0],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            5.0,
        )
        .unwrap();
        let s = spec.shape();
        // right vertices 0,1 -> knapsack 0; 2,3 -> knapsack 1
        let together = Matching::new(vec![0, 1], s).unwrap();
        assert_eq!(knapsack_utility(&spec, &together), -5.0);
        let together = Matching::new(vec![3, 2], s).unwrap();
        assert_eq!(knapsack_utility(&spec, &together), -5.0);
        let split = Matching::new(vec![1, 2], s).unwrap();
        assert_eq!(knapsack_utility(&spec, &split), 2.0);
    }

    #[test]
    fn kappa_must_dominate_rewards() {
        let r = vec![vec![2.0, 2.0]];
        assert!(KnapsackSpec::new(vec![1.0], vec![1.0, 1.0], r.clone(), 4.0).is_err());
        assert!(KnapsackSpec::new(vec![1.0], vec![1.0, 1.0], r, 4.5).is_ok());
    }

    #[test]
    fn rejects_nonpositive_data() {
        assert!(KnapsackSpec::new(vec![0.0], vec![1.0], vec![vec![1.0]], 9.0).is_err());
        assert!(KnapsackSpec::new(vec![1.0], vec![-1.0], vec![vec![1.0]], 9.0).is_err());
        assert!(KnapsackSpec::new(vec![1.0], vec![1.0], vec![vec![0.0]], 9.0).is_err());
        assert!(KnapsackSpec::new(vec![1.0], vec![1.0], vec![vec![1.0, 1.0]], 9.0).is_err());
        let json = r#"{"volumes":[1],"capacities":[1],"rewards":[[1]],"kappa":0.5}"#;
        assert!(serde_json::from_str::<KnapsackSpec>(json).is_err());
    }
}
