//! Network reduction onto a vertex subset: Schur complements of the
//! Laplacian, the hitting-probability route through harmonic extensions,
//! per-vertex measure defects, crossing conductances, and resistance balls.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    dirichlet_extension, dirichlet_extension_multi, grounded_green_matrix, schur_complement,
};
use crate::network::{ElectricalNetwork, NetworkSpec, VertexFunction};

/// Trace conductances below this are treated as roundoff zeros.
const TRACE_EDGE_FLOOR: f64 = 1e-12;

/// Ties |R - r| below this resolve to exclusion from a resistance ball.
pub const BALL_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    /// Schur complement of the Laplacian onto B.
    Schur,
    /// c~(x, y) = c(x) P_x(Y(T_B^+) = y) via harmonic extensions of
    /// indicator boundary data.
    Hitting,
}

/// Result of reducing a network onto a subset B.
#[derive(Debug, Clone)]
pub struct TraceResult {
    /// The reduced network on B (original ids and root preserved).
    pub reduced: ElectricalNetwork,
    /// Sorted original indices forming B; parallel to `reduced`'s vertices.
    pub subset: Vec<usize>,
    /// `defect[k] = c(x_k) - c~(x_k) = c(x_k) P_{x_k}(Y(T_B^+) = x_k)`.
    pub defect: Vec<f64>,
    /// Total conductance on edges crossing out of B (unscaled).
    pub crossing: f64,
    pub method: TraceMethod,
}

/// Energy-minimal extension of boundary data phi on B: agrees with phi on B
/// and is harmonic (L h = 0) off B.
pub fn harmonic_extension(
    net: &ElectricalNetwork,
    b: &[usize],
    phi: &[f64],
) -> Result<VertexFunction> {
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    if b.len() != phi.len() {
        return Err(Error::DomainMismatch {
            expected: b.len(),
            got: phi.len(),
        });
    }
    let h = dirichlet_extension(&net.laplacian(), b, phi)?;
    Ok(VertexFunction::new(h))
}

/// Total conductance of edges with exactly one endpoint in A, divided by
/// `scale`.
pub fn crossing_conductance(net: &ElectricalNetwork, a: &[usize], scale: f64) -> f64 {
    let mut inside = vec![false; net.n_vertices()];
    for &x in a {
        inside[x] = true;
    }
    let mut total = 0.0;
    for &x in a {
        for &(y, c) in net.neighbors(x) {
            if !inside[y] {
                total += c;
            }
        }
    }
    total / scale
}

fn sorted_subset(net: &ElectricalNetwork, b: &[usize]) -> Result<Vec<usize>> {
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = net.n_vertices();
    let mut subset = b.to_vec();
    subset.sort_unstable();
    subset.dedup();
    if let Some(&bad) = subset.iter().find(|&&x| x >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    if subset.binary_search(&net.root()).is_err() {
        return Err(Error::RootOutsideB);
    }
    Ok(subset)
}

/// Reduces the network onto B. Both methods produce the same conductances;
/// `Schur` eliminates the complement block of the Laplacian directly, while
/// `Hitting` assembles c~(x, y) = c(x) P_x(Y(T_B^+) = y) from one Dirichlet
/// solve per target vertex, mirroring the probabilistic identity.
pub fn trace_network(
    net: &ElectricalNetwork,
    b: &[usize],
    method: TraceMethod,
) -> Result<TraceResult> {
    let subset = sorted_subset(net, b)?;
    let k = subset.len();

    // Reduced conductance matrix, c_red[(i, j)] for i != j.
    let mut c_red = DMatrix::zeros(k, k);
    match method {
        TraceMethod::Schur => {
            let s = schur_complement(&net.laplacian(), &subset);
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let c = -s[(i, j)];
                        c_red[(i, j)] = if c > TRACE_EDGE_FLOOR { c } else { 0.0 };
                    }
                }
            }
        }
        TraceMethod::Hitting => {
            let l = net.laplacian();
            // One harmonic extension per target vertex, boundary data the
            // indicator of subset[j] on B, all against one factorization.
            let value_sets: Vec<Vec<f64>> = (0..k)
                .map(|j| {
                    let mut phi = vec![0.0; k];
                    phi[j] = 1.0;
                    phi
                })
                .collect();
            let extensions = dirichlet_extension_multi(&l, &subset, &value_sets)?;
            for (j, h) in extensions.iter().enumerate() {
                for i in 0..k {
                    if i == j {
                        continue;
                    }
                    let x = subset[i];
                    // c(x) P_x(Y(T_B^+) = subset[j]) = sum_z c(x, z) h(z).
                    let mut c = 0.0;
                    for &(z, cxz) in net.neighbors(x) {
                        c += cxz * h[z];
                    }
                    c_red[(i, j)] = if c > TRACE_EDGE_FLOOR { c } else { 0.0 };
                }
            }
            // Symmetrize: the two one-sided assemblies agree up to roundoff.
            for i in 0..k {
                for j in (i + 1)..k {
                    let c = 0.5 * (c_red[(i, j)] + c_red[(j, i)]);
                    c_red[(i, j)] = c;
                    c_red[(j, i)] = c;
                }
            }
        }
    }

    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if c_red[(i, j)] > 0.0 {
                edges.push((net.id(subset[i]), net.id(subset[j]), c_red[(i, j)]));
            }
        }
    }
    let reduced = ElectricalNetwork::from_spec(&NetworkSpec {
        vertices: subset.iter().map(|&x| net.id(x)).collect(),
        root: net.id(net.root()),
        edges,
        coords: None,
    })?;

    let defect: Vec<f64> = subset
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let reduced_mass: f64 = (0..k).map(|j| c_red[(i, j)]).sum();
            net.vertex_conductance(x) - reduced_mass
        })
        .collect();

    let crossing = crossing_conductance(net, &subset, 1.0);

    Ok(TraceResult {
        reduced,
        subset,
        defect,
        crossing,
        method,
    })
}

/// Open resistance ball around the root. Membership is R(root, x) < r with
/// ties |R - r| < 1e-12 excluded; the root itself is always a member.
pub fn resistance_ball(net: &ElectricalNetwork, r: f64) -> Vec<usize> {
    let n = net.n_vertices();
    let g = grounded_green_matrix(&net.laplacian(), net.root());
    let mut ball = Vec::new();
    for x in 0..n {
        if x == net.root() {
            ball.push(x);
            continue;
        }
        // R(root, x) = g[x, x] when the kernel is grounded at the root.
        let dist = g[(x, x)];
        if dist < r && (r - dist) >= BALL_TIE_TOL {
            ball.push(x);
        }
    }
    ball
}

/// Traces the network onto the open resistance ball B_R(root, r).
pub fn ball_trace(net: &ElectricalNetwork, r: f64, method: TraceMethod) -> Result<TraceResult> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "radius",
            value: r,
        });
    }
    let ball = resistance_ball(net, r);
    trace_network(net, &ball, method)
}
