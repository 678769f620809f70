use serde::Deserialize;

use crate::error::{Error, Result};
use crate::instance::{Matching, Shape, UtilityBounds, UtilityOracle};

/// Explicit utility for every matching of a small shape.
#[derive(Clone, Debug, PartialEq)]
pub struct TableUtility {
    shape: Shape,
    values: Vec<f64>,
    bounds: UtilityBounds,
}

impl TableUtility {
    /// `values[k]` is the utility of the `k`-th matching in lexicographic order.
    pub fn from_values(shape: Shape, values: Vec<f64>) -> Result<Self> {
        let count = shape.checked_count(crate::instance::DEFAULT_ENUMERATION_CAP)?;
        if values.len() != count {
            return Err(Error::InvalidSpec(format!(
                "table for {shape} needs {count} utilities, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("utility #{bad} is not finite")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(TableUtility {
            shape,
            values,
            bounds: UtilityBounds::new(min, max)?,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl UtilityOracle for TableUtility {
    fn evaluate(&self, matching: &Matching) -> f64 {
        self.values[self.shape.rank(matching)]
    }

    fn bounds(&self) -> UtilityBounds {
        self.bounds
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub assign: Vec<usize>,
    pub utility: f64,
}

/// `{"m": 2, "n": 2, "entries": [{"assign": [0,1], "utility": 0.0}, ...], "default": 0.0}`
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub m: usize,
    pub n: usize,
    pub entries: Vec<TableEntry>,
    /// Utility of matchings without an entry; every matching must be listed otherwise.
    #[serde(default)]
    pub default: Option<f64>,
}

impl TableSpec {
    pub fn into_utility(self) -> Result<TableUtility> {
        let shape = Shape::new(self.m, self.n)?;
        let count = shape.checked_count(crate::instance::DEFAULT_ENUMERATION_CAP)?;
        let mut values: Vec<Option<f64>> = vec![None; count];
        for (k, e) in self.entries.into_iter().enumerate() {
            let mt = Matching::new(e.assign, shape)
                .map_err(|err| Error::InvalidSpec(format!("entries[{k}]: {err}")))?;
            let slot = &mut values[shape.rank(&mt)];
            if slot.is_some() {
                return Err(Error::InvalidSpec(format!("entries[{k}]: duplicate matching {mt}")));
            }
            *slot = Some(e.utility);
        }
        let missing = values.iter().filter(|v| v.is_none()).count();
        let values = match (missing, self.default) {
            (0, _) => values.into_iter().flatten().collect(),
            (_, Some(d)) => values.into_iter().map(|v| v.unwrap_or(d)).collect(),
            (k, None) => {
                return Err(Error::InvalidSpec(format!(
                    "{k} of {count} matchings have no utility and no default is given"
                )))
            }
        };
        TableUtility::from_values(shape, values)
    }
}
