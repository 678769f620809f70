use serde::{Deserialize, Serialize};

use super::block_of;
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, Shape, UtilityBounds, UtilityOracle};

/// Can a simple graph be coloured with `K` colours?
///
/// JSON: `{"vertices": m, "edges": [[i, j], ...], "colors": K, "c": 1}`. When
/// `vertices` is omitted it is one more than the largest endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawColouring", into = "RawColouring")]
pub struct GraphColouringSpec {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    colors: usize,
    reward: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColouring {
    #[serde(default)]
    vertices: Option<usize>,
    edges: Vec<[usize; 2]>,
    colors: usize,
    #[serde(default = "default_reward")]
    c: f64,
}

fn default_reward() -> f64 {
    1.0
}

impl TryFrom<RawColouring> for GraphColouringSpec {
    type Error = Error;

    fn try_from(raw: RawColouring) -> Result<Self> {
        let inferred = raw.edges.iter().flatten().map(|&v| v + 1).max().unwrap_or(0);
        let vertices = raw.vertices.unwrap_or(inferred);
        GraphColouringSpec::new(
            vertices,
            raw.edges.into_iter().map(|[a, b]| (a, b)).collect(),
            raw.colors,
            raw.c,
        )
    }
}

impl From<GraphColouringSpec> for RawColouring {
    fn from(s: GraphColouringSpec) -> Self {
        RawColouring {
            vertices: Some(s.vertices),
            edges: s.edges.into_iter().map(|(a, b)| [a, b]).collect(),
            colors: s.colors,
            c: s.reward,
        }
    }
}

impl GraphColouringSpec {
    /// Edges are undirected; duplicates are dropped, self-loops rejected.
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>, colors: usize, reward: f64) -> Result<Self> {
        if vertices == 0 || colors == 0 {
            return Err(Error::InvalidSpec("need at least one vertex and one colour".into()));
        }
        if !(reward.is_finite() && reward > 0.0) {
            return Err(Error::InvalidSpec(format!("c must be positive, got {reward}")));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for (k, (a, b)) in edges.into_iter().enumerate() {
            if a >= vertices || b >= vertices {
                return Err(Error::InvalidSpec(format!(
                    "edges[{k}] = [{a},{b}] names a vertex >= {vertices}"
                )));
            }
            if a == b {
                return Err(Error::InvalidSpec(format!("edges[{k}] is a self-loop")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        Ok(GraphColouringSpec {
            vertices,
            edges: norm,
            colors,
            reward,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    /// `(m, mK)`.
    pub fn shape(&self) -> Shape {
        Shape::new(self.vertices, self.vertices * self.colors).expect("m <= mK")
    }

    pub fn colouring(&self, matching: &Matching) -> Vec<usize> {
        let m = self.vertices;
        matching.assign().iter().map(|&u| block_of(u, m)).collect()
    }

    pub fn is_proper(&self, colour: &[usize]) -> bool {
        self.edges.iter().all(|&(a, b)| colour[a] != colour[b])
    }

    pub fn into_instance(self) -> Instance {
        Instance::new(self.shape(), self)
    }
}

/// `+c` for a proper colouring, `-c` otherwise.
pub fn colouring_utility(spec: &GraphColouringSpec, matching: &Matching) -> f64 {
    if spec.is_proper(&spec.colouring(matching)) {
        spec.reward
    } else {
        -spec.reward
    }
}

impl UtilityOracle for GraphColouringSpec {
    fn evaluate(&self, matching: &Matching) -> f64 {
        colouring_utility(self, matching)
    }

    fn bounds(&self) -> UtilityBounds {
        UtilityBounds::new(-self.reward, self.reward).expect("positive reward")
    }
}
