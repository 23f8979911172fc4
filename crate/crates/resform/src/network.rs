//! Finite electrical networks: weighted connected graphs with symmetric
//! positive conductances, a root vertex, and the associated vertex measure.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conductances below this are rejected outright; they would make the
/// Laplacian numerically singular.
pub const MIN_CONDUCTANCE: f64 = 1e-300;

/// Absolute tolerance used by validation comparisons.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Raw description of a network, as read from a file or built in code.
/// Vertex identifiers are arbitrary integers; the declaration order fixes
/// the internal indexing and thereby all matrix layouts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub vertices: Vec<u64>,
    pub root: u64,
    /// Unordered weighted edges `(u, v, conductance)`.
    pub edges: Vec<(u64, u64, f64)>,
    /// Optional planar coordinates keyed by vertex id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<HashMap<u64, [f64; 2]>>,
}

/// A validated electrical network. Immutable after construction; safe to
/// share read-only across threads.
#[derive(Debug, Clone)]
pub struct ElectricalNetwork {
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
    /// Per-vertex adjacency, sorted by neighbour index.
    adj: Vec<Vec<(usize, f64)>>,
    /// c(x) = sum of incident conductances.
    vertex_conductance: Vec<f64>,
    root: usize,
    coords: Option<Vec<[f64; 2]>>,
}

/// The measure mu(x) = c(x) associated with a network.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMeasure {
    mass: Vec<f64>,
}

impl VertexMeasure {
    pub fn new(mass: Vec<f64>) -> Self {
        Self { mass }
    }

    pub fn mass(&self, x: usize) -> f64 {
        self.mass[x]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }
}

/// A real-valued function on the vertex set, indexed in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
        }
    }

    /// Indicator of a single vertex.
    pub fn indicator(n: usize, x: usize) -> Self {
        let mut values = vec![0.0; n];
        values[x] = 1.0;
        Self { values }
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Validates a raw spec and builds the network.
pub fn build_network(spec: &NetworkSpec) -> Result<ElectricalNetwork> {
    ElectricalNetwork::from_spec(spec)
}

impl ElectricalNetwork {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        let n = spec.vertices.len();
        if n == 0 {
            return Err(Error::Format("network needs at least one vertex".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, &id) in spec.vertices.iter().enumerate() {
            if index.insert(id, i).is_some() {
                return Err(Error::DuplicateVertex { id });
            }
        }
        let root = *index
            .get(&spec.root)
            .ok_or(Error::UnknownRoot { root: spec.root })?;

        let mut weights: HashMap<(usize, usize), f64> = HashMap::new();
        for &(u, v, c) in &spec.edges {
            if u == v {
                return Err(Error::SelfLoop { vertex: u });
            }
            let iu = *index.get(&u).ok_or(Error::UnknownVertex { id: u })?;
            let iv = *index.get(&v).ok_or(Error::UnknownVertex { id: v })?;
            if !(c.is_finite() && c >= MIN_CONDUCTANCE) {
                return Err(Error::NonPositiveConductance { u, v, value: c });
            }
            let key = (iu.min(iv), iu.max(iv));
            if let Some(&prev) = weights.get(&key) {
                if prev != c {
                    return Err(Error::DuplicateEdge {
                        u,
                        v,
                        first: prev,
                        second: c,
                    });
                }
            } else {
                weights.insert(key, c);
            }
        }

        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(iu, iv), &c) in &weights {
            adj[iu].push((iv, c));
            adj[iv].push((iu, c));
        }
        for row in &mut adj {
            row.sort_unstable_by_key(|&(j, _)| j);
        }
        let vertex_conductance: Vec<f64> = adj
            .iter()
            .map(|row| row.iter().map(|&(_, c)| c).sum())
            .collect();

        // Connectivity check. A single isolated vertex is allowed as the
        // degenerate network (it arises as the trace onto {root}).
        if n > 1 {
            let mut seen = vec![false; n];
            let mut stack = vec![root];
            seen[root] = true;
            let mut count = 1;
            while let Some(x) = stack.pop() {
                for &(y, _) in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        count += 1;
                        stack.push(y);
                    }
                }
            }
            if count < n {
                let missing = (0..n).find(|&i| !seen[i]).unwrap();
                return Err(Error::Disconnected {
                    vertex: spec.vertices[missing],
                    from: spec.root,
                });
            }
        }

        let coords = match &spec.coords {
            None => None,
            Some(map) => {
                let mut list = vec![[f64::NAN, f64::NAN]; n];
                for (&id, &xy) in map {
                    let i = *index.get(&id).ok_or(Error::UnknownVertex { id })?;
                    list[i] = xy;
                }
                Some(list)
            }
        };

        Ok(Self {
            ids: spec.vertices.clone(),
            index,
            adj,
            vertex_conductance,
            root,
            coords,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> u64 {
        self.ids[x]
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adj[x]
    }

    /// Conductance c(x, y); zero when {x, y} is not an edge.
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        match self.adj[x].binary_search_by_key(&y, |&(j, _)| j) {
            Ok(k) => self.adj[x][k].1,
            Err(_) => 0.0,
        }
    }

    /// c(x) = sum over y of c(x, y).
    pub fn vertex_conductance(&self, x: usize) -> f64 {
        self.vertex_conductance[x]
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for x in 0..self.n_vertices() {
            for &(y, c) in &self.adj[x] {
                if x < y {
                    out.push((x, y, c));
                }
            }
        }
        out
    }

    /// The measure associated with the network: mass(x) = c(x).
    pub fn associated_measure(&self) -> VertexMeasure {
        VertexMeasure::new(self.vertex_conductance.clone())
    }

    /// Dirichlet energy form E(f, g) = 1/2 sum c(x,y)(f(x)-f(y))(g(x)-g(y)),
    /// evaluated as a single pass over the edge set.
    pub fn dirichlet_energy(&self, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
        let n = self.n_vertices();
        if f.len() != n {
            return Err(Error::DomainMismatch {
                expected: n,
                got: f.len(),
            });
        }
        if g.len() != n {
            return Err(Error::DomainMismatch {
                expected: n,
                got: g.len(),
            });
        }
        let mut acc = 0.0;
        for x in 0..n {
            for &(y, c) in &self.adj[x] {
                if x < y {
                    acc += c * (f.value(x) - f.value(y)) * (g.value(x) - g.value(y));
                }
            }
        }
        Ok(acc)
    }

    /// Row-stochastic transition matrix P(x, y) = c(x, y) / c(x) of the
    /// discrete-time chain. The degenerate one-vertex network gets the
    /// identity row.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.n_vertices();
        let mut p = DMatrix::zeros(n, n);
        for x in 0..n {
            let cx = self.vertex_conductance[x];
            if cx == 0.0 {
                p[(x, x)] = 1.0;
                continue;
            }
            for &(y, c) in &self.adj[x] {
                p[(x, y)] = c / cx;
            }
        }
        p
    }

    /// Graph Laplacian L(x, x) = c(x), L(x, y) = -c(x, y).
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n_vertices();
        let mut l = DMatrix::zeros(n, n);
        for x in 0..n {
            l[(x, x)] = self.vertex_conductance[x];
            for &(y, c) in &self.adj[x] {
                l[(x, y)] = -c;
            }
        }
        l
    }

    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            vertices: self.ids.clone(),
            root: self.ids[self.root],
            edges: self
                .edges()
                .into_iter()
                .map(|(x, y, c)| (self.ids[x], self.ids[y], c))
                .collect(),
            coords: self.coords.as_ref().map(|list| {
                list.iter()
                    .enumerate()
                    .filter(|(_, xy)| xy.iter().all(|v| v.is_finite()))
                    .map(|(i, &xy)| (self.ids[i], xy))
                    .collect()
            }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    /// Resolves a list of external ids to internal indices.
    pub fn resolve(&self, ids: &[u64]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| self.index_of(id).ok_or(Error::UnknownVertex { id }))
            .collect()
    }
}

/// Convenience constructor used throughout the tests and the CLI: vertices
/// 0..n with the given edges and root 0.
pub fn network_from_edges(n: usize, edges: &[(u64, u64, f64)]) -> Result<ElectricalNetwork> {
    ElectricalNetwork::from_spec(&NetworkSpec {
        vertices: (0..n as u64).collect(),
        root: 0,
        edges: edges.to_vec(),
        coords: None,
    })
}
