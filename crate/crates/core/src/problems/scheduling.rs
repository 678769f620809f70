use serde::{Deserialize, Serialize};

use super::block_of;
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, Shape, UtilityBounds, UtilityOracle};

/// `m` jobs on `K` machines; `service[i][j]` is job `i`'s time on machine `j`.
///
/// JSON: `{"jobs": m, "machines": K, "service": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScheduling", into = "RawScheduling")]
pub struct SchedulingSpec {
    machines: usize,
    service: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheduling {
    jobs: usize,
    machines: usize,
    service: Vec<Vec<f64>>,
}

impl TryFrom<RawScheduling> for SchedulingSpec {
    type Error = Error;

    fn try_from(raw: RawScheduling) -> Result<Self> {
        if raw.service.len() != raw.jobs {
            return Err(Error::InvalidSpec(format!(
                "service: expected {} rows (one per job), got {}",
                raw.jobs,
                raw.service.len()
            )));
        }
        SchedulingSpec::new(raw.machines, raw.service)
    }
}

impl From<SchedulingSpec> for RawScheduling {
    fn from(s: SchedulingSpec) -> Self {
        RawScheduling {
            jobs: s.service.len(),
            machines: s.machines,
            service: s.service,
        }
    }
}

impl SchedulingSpec {
    pub fn new(machines: usize, service: Vec<Vec<f64>>) -> Result<Self> {
        if service.is_empty() || machines == 0 {
            return Err(Error::InvalidSpec("need at least one job and one machine".into()));
        }
        for (i, row) in service.iter().enumerate() {
            if row.len() != machines {
                return Err(Error::InvalidSpec(format!(
                    "service[{i}]: expected {machines} entries, got {}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::InvalidSpec(format!(
                    "service[{i}][{j}] must be a finite nonnegative time"
                )));
            }
        }
        Ok(SchedulingSpec { machines, service })
    }

    pub fn jobs(&self) -> usize {
        self.service.len()
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn service(&self, job: usize, machine: usize) -> f64 {
        self.service[job][machine]
    }

    /// `(m, mK)`.
    pub fn shape(&self) -> Shape {
        Shape::new(self.jobs(), self.jobs() * self.machines).expect("m <= mK")
    }

    /// Machine of every job under `matching`.
    pub fn schedule(&self, matching: &Matching) -> Vec<usize> {
        let m = self.jobs();
        matching.assign().iter().map(|&u| block_of(u, m)).collect()
    }

    /// Largest per-machine load of a job-to-machine assignment.
    pub fn makespan(&self, machine_of: &[usize]) -> f64 {
        let mut load = vec![0.0; self.machines];
        for (job, &j) in machine_of.iter().enumerate() {
            load[j] += self.service[job][j];
        }
        load.into_iter().fold(0.0, f64::max)
    }

    pub fn into_instance(self) -> Instance {
        Instance::new(self.shape(), self)
    }
}

/// Negative makespan of the schedule induced by `matching`.
pub fn scheduling_utility(spec: &SchedulingSpec, matching: &Matching) -> f64 {
    -spec.makespan(&spec.schedule(matching))
}

impl UtilityOracle for SchedulingSpec {
    fn evaluate(&self, matching: &Matching) -> f64 {
        scheduling_utility(self, matching)
    }

    fn bounds(&self) -> UtilityBounds {
        let total: f64 = self.service.iter().flatten().sum();
        UtilityBounds::new(-total, 0.0).expect("service times are finite")
    }
}
