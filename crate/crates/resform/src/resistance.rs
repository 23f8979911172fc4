//! Effective resistance metrics, resistance between sets, fused networks,
//! and the constructive inverse map from resistance matrices to conductances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{grounded_green_matrix, symmetric_pseudoinverse_with_rank, PinnedLaplacian};
use crate::network::{ElectricalNetwork, NetworkSpec};

/// Recovered conductances with magnitude below this are treated as absent
/// edges (pure roundoff).
pub const EDGE_FLOOR: f64 = 1e-12;

/// Recovered off-diagonal Laplacian entries above this are a genuine
/// violation of the resistance-metric property, not roundoff.
pub const METRIC_VIOLATION_TOL: f64 = 1e-9;

/// All-pairs effective resistance matrix on an ordered point set.
#[derive(Debug, Clone)]
pub struct ResistanceMatrix {
    ids: Vec<u64>,
    r: DMatrix<f64>,
}

impl ResistanceMatrix {
    /// Wraps a matrix after checking the metric axioms: zero diagonal,
    /// symmetry, nonnegativity, and the triangle inequality to 1e-9.
    pub fn new(ids: Vec<u64>, r: DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::NotAMetric {
                reason: format!(
                    "matrix is {}x{}, expected {}x{}",
                    r.nrows(),
                    r.ncols(),
                    n,
                    n
                ),
            });
        }
        for i in 0..n {
            if r[(i, i)] != 0.0 {
                return Err(Error::NotAMetric {
                    reason: format!("nonzero diagonal at {i}"),
                });
            }
            for j in 0..n {
                if r[(i, j)] < 0.0 || !r[(i, j)].is_finite() {
                    return Err(Error::NotAMetric {
                        reason: format!("entry ({i}, {j}) = {}", r[(i, j)]),
                    });
                }
                if (r[(i, j)] - r[(j, i)]).abs() > 1e-12 {
                    return Err(Error::NotAMetric {
                        reason: format!("asymmetry at ({i}, {j})"),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if r[(i, j)] > r[(i, k)] + r[(k, j)] + 1e-9 {
                        return Err(Error::NotAMetric {
                            reason: format!("triangle inequality fails on ({i}, {j}, {k})"),
                        });
                    }
                }
            }
        }
        Ok(Self { ids, r })
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.r[(x, y)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Restriction to a subset of indices; the traced network on the subset
    /// realizes exactly these values, so the result is again a resistance
    /// matrix.
    pub fn restrict(&self, subset: &[usize]) -> Self {
        let ids = subset.iter().map(|&i| self.ids[i]).collect();
        let r = self.r.select_rows(subset).select_columns(subset);
        Self { ids, r }
    }
}

/// Effective resistance between two vertices: the reciprocal of the minimal
/// Dirichlet energy among potentials separating them, computed by a pinned
/// Laplacian solve against the unit dipole current.
pub fn effective_resistance(net: &ElectricalNetwork, x: usize, y: usize) -> f64 {
    if x == y {
        return 0.0;
    }
    let l = net.laplacian();
    let pinned = PinnedLaplacian::new(&l, net.root());
    let n = net.n_vertices();
    let mut rhs = DVector::zeros(n);
    rhs[x] = 1.0;
    rhs[y] = -1.0;
    let v = pinned.solve(&rhs);
    v[x] - v[y]
}

/// All-pairs effective resistances from a single factorization: with the
/// Green kernel g grounded at the root, `R(x, y) = g[x,x] + g[y,y] - 2 g[x,y]`.
pub fn resistance_matrix(net: &ElectricalNetwork) -> ResistanceMatrix {
    let n = net.n_vertices();
    let g = grounded_green_matrix(&net.laplacian(), net.root());
    let mut r = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in (x + 1)..n {
            let v = (g[(x, x)] + g[(y, y)] - 2.0 * g[(x, y)]).max(0.0);
            r[(x, y)] = v;
            r[(y, x)] = v;
        }
    }
    ResistanceMatrix {
        ids: net.ids().to_vec(),
        r,
    }
}

/// Effective resistance between vertex sets A and B:
/// (inf { E(f, f) : f = 1 on A, f = 0 on B })^{-1}, zero when they meet.
pub fn resistance_between_sets(net: &ElectricalNetwork, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.iter().any(|x| b.contains(x)) {
        return Ok(0.0);
    }
    let l = net.laplacian();
    let mut boundary = Vec::with_capacity(a.len() + b.len());
    let mut values = Vec::with_capacity(a.len() + b.len());
    for &x in a {
        boundary.push(x);
        values.push(1.0);
    }
    for &x in b {
        boundary.push(x);
        values.push(0.0);
    }
    let h = crate::linalg::dirichlet_extension(&l, &boundary, &values)?;
    let hv = DVector::from_vec(h);
    let energy = (&hv.transpose() * &l * &hv)[(0, 0)];
    Ok(1.0 / energy)
}

/// Rebuilds the unique electrical network whose effective resistances are
/// the given matrix. Centers R, pseudo-inverts the Gram kernel to recover
/// the Laplacian, and reads conductances off the negated off-diagonals.
///
/// The first point becomes the root of the recovered network.
pub fn conductances_from_resistance(rm: &ResistanceMatrix) -> Result<ElectricalNetwork> {
    let n = rm.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    if n == 1 {
        return ElectricalNetwork::from_spec(&NetworkSpec {
            vertices: rm.ids().to_vec(),
            root: rm.ids()[0],
            edges: vec![],
            coords: None,
        });
    }
    let nf = n as f64;
    let r = rm.matrix();
    // K = -1/2 J R J with J the centering projector; K equals the grounded
    // Green kernel of the sought Laplacian, so pinv(K) is the Laplacian.
    let ones = DMatrix::from_element(n, n, 1.0 / nf);
    let j = DMatrix::identity(n, n) - ones;
    let k = -0.5 * (&j * r * &j);
    let (l, rank) = symmetric_pseudoinverse_with_rank(&k, 1e-10);
    // The kernel of K contains the constants; any further rank drop means
    // the metric would need a disconnected (infinite-resistance) network.
    if rank != n - 1 {
        return Err(Error::NotResistanceMetric {
            reason: format!("centered Gram kernel has rank {rank}, expected {}", n - 1),
        });
    }

    let mut edges = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            let c = -l[(x, y)];
            if c < -METRIC_VIOLATION_TOL {
                return Err(Error::NotResistanceMetric {
                    reason: format!("recovered conductance {c} on pair ({x}, {y})"),
                });
            }
            if c > EDGE_FLOOR {
                edges.push((rm.ids()[x], rm.ids()[y], c));
            }
        }
    }
    ElectricalNetwork::from_spec(&NetworkSpec {
        vertices: rm.ids().to_vec(),
        root: rm.ids()[0],
        edges,
        coords: None,
    })
}

/// Shorts the complement of B to a single vertex. The new vertex keeps the
/// conductance mass of all crossing edges: c(x, star) = sum_{y not in B}
/// c(x, y); edges inside B are untouched, edges inside the complement vanish.
///
/// The star vertex gets the smallest id not already in use.
pub fn fuse_complement(net: &ElectricalNetwork, b: &[usize]) -> Result<ElectricalNetwork> {
    let n = net.n_vertices();
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut inside = vec![false; n];
    for &x in b {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, len: n });
        }
        inside[x] = true;
    }
    if inside.iter().all(|&m| m) {
        return Err(Error::FullSet);
    }
    if !inside[net.root()] {
        return Err(Error::RootOutsideB);
    }

    let mut b_sorted: Vec<usize> = b.to_vec();
    b_sorted.sort_unstable();
    b_sorted.dedup();
    let star_id = net.ids().iter().max().copied().unwrap_or(0) + 1;

    let mut vertices: Vec<u64> = b_sorted.iter().map(|&x| net.id(x)).collect();
    vertices.push(star_id);
    let mut edges = Vec::new();
    for &x in &b_sorted {
        let mut to_star = 0.0;
        for &(y, c) in net.neighbors(x) {
            if inside[y] {
                if x < y {
                    edges.push((net.id(x), net.id(y), c));
                }
            } else {
                to_star += c;
            }
        }
        if to_star > 0.0 {
            edges.push((net.id(x), star_id, to_star));
        }
    }
    ElectricalNetwork::from_spec(&NetworkSpec {
        vertices,
        root: net.id(net.root()),
        edges,
        coords: None,
    })
}

/// One row of a fused-metric error report.
#[derive(Debug, Clone)]
pub struct FusedPairReport {
    pub x: u64,
    pub y: u64,
    /// Effective resistance in the full network.
    pub resistance: f64,
    /// Effective resistance after fusing the complement of B.
    pub fused: f64,
    pub gap: f64,
    /// The product-energy bound 2 R(x, B^c)^{-1/2} R(x, y)^{3/2}.
    pub bound: f64,
}

/// Compares R and the fused metric R^(B) on the given pairs and checks the
/// analytic error bound pair by pair. Pairs are indices into `net`, and must
/// lie inside B.
pub fn fused_metric_error_report(
    net: &ElectricalNetwork,
    b: &[usize],
    pairs: &[(usize, usize)],
) -> Result<Vec<FusedPairReport>> {
    let fused_net = fuse_complement(net, b)?;
    let rm = resistance_matrix(net);
    let rm_fused = resistance_matrix(&fused_net);
    let complement: Vec<usize> = (0..net.n_vertices()).filter(|x| !b.contains(x)).collect();

    let mut out = Vec::with_capacity(pairs.len());
    for &(x, y) in pairs {
        if !b.contains(&x) || !b.contains(&y) {
            return Err(Error::IndexOutOfRange {
                index: if b.contains(&x) { y } else { x },
                len: net.n_vertices(),
            });
        }
        let fx = fused_net
            .index_of(net.id(x))
            .expect("B vertex survives the fuse");
        let fy = fused_net
            .index_of(net.id(y))
            .expect("B vertex survives the fuse");
        let r = rm.value(x, y);
        let r_fused = rm_fused.value(fx, fy);
        let r_to_comp = resistance_between_sets(net, &[x], &complement)?;
        let bound = 2.0 * r_to_comp.powf(-0.5) * r.powf(1.5);
        let gap = (r - r_fused).abs();
        if r_fused > r + 1e-10 {
            return Err(Error::BoundViolated {
                what: "fused resistance",
                value: r_fused,
                bound: r,
            });
        }
        if gap > bound + 1e-10 {
            return Err(Error::BoundViolated {
                what: "fused metric gap",
                value: gap,
                bound,
            });
        }
        out.push(FusedPairReport {
            x: net.id(x),
            y: net.id(y),
            resistance: r,
            fused: r_fused,
            gap,
            bound,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::network_from_edges;
    use approx::assert_abs_diff_eq;

    fn unit_triangle() -> ElectricalNetwork {
        network_from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn unit_path() -> ElectricalNetwork {
        network_from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn single_resistor_reciprocal() {
        let net = network_from_edges(2, &[(0, 1, 4.0)]).unwrap();
        assert_abs_diff_eq!(effective_resistance(&net, 0, 1), 0.25, epsilon = 1e-12);
        let rm = resistance_matrix(&net);
        assert_abs_diff_eq!(rm.value(0, 1), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(rm.value(0, 0), 0.0);
    }

    #[test]
    fn series_law_on_path() {
        let net = unit_path();
        assert_abs_diff_eq!(effective_resistance(&net, 0, 2), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_resistance_two_thirds() {
        let net = unit_triangle();
        let rm = resistance_matrix(&net);
        for (x, y) in [(0, 1), (0, 2), (1, 2)] {
            assert_abs_diff_eq!(rm.value(x, y), 2.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn star_series_resistances() {
        // Center 0, leaves 1..3, unit spokes.
        let net = network_from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let rm = resistance_matrix(&net);
        assert_abs_diff_eq!(rm.value(0, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rm.value(1, 2), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn between_sets_matches_pairs_and_overlap_is_zero() {
        let net = unit_path();
        let r = resistance_between_sets(&net, &[0], &[2]).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-12);
        let r = resistance_between_sets(&net, &[0, 1], &[1, 2]).unwrap();
        assert_abs_diff_eq!(r, 0.0);
        assert!(matches!(
            resistance_between_sets(&net, &[], &[0]),
            Err(Error::EmptySet)
        ));
        // Singletons agree with effective_resistance.
        let tri = unit_triangle();
        let r = resistance_between_sets(&tri, &[0], &[1]).unwrap();
        assert_abs_diff_eq!(r, effective_resistance(&tri, 0, 1), epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_single_edge() {
        let rm = ResistanceMatrix::new(
            vec![0, 1],
            DMatrix::from_row_slice(2, 2, &[0.0, 0.25, 0.25, 0.0]),
        )
        .unwrap();
        let net = conductances_from_resistance(&rm).unwrap();
        assert_abs_diff_eq!(net.conductance(0, 1), 4.0, epsilon = 1e-8);
    }

    #[test]
    fn reconstruction_round_trips_triangle() {
        let net = unit_triangle();
        let rm = resistance_matrix(&net);
        let back = conductances_from_resistance(&rm).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(
                    back.conductance(x, y),
                    net.conductance(x, y),
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn series_metric_forces_absent_edge() {
        // Path metric: R(0,2) = R(0,1) + R(1,2) exactly.
        let rm = ResistanceMatrix::new(
            vec![0, 1, 2],
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]),
        )
        .unwrap();
        let net = conductances_from_resistance(&rm).unwrap();
        assert_abs_diff_eq!(net.conductance(0, 2), 0.0);
        assert_abs_diff_eq!(net.conductance(0, 1), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(net.conductance(1, 2), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn non_resistance_metric_detected() {
        // The shortest-path metric of the 4-cycle is a metric but not a
        // resistance metric: no nonnegative conductances realize an
        // opposite/adjacent distance ratio of 2 on four vertices.
        let d = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 2.0, 1.0, //
                1.0, 0.0, 1.0, 2.0, //
                2.0, 1.0, 0.0, 1.0, //
                1.0, 2.0, 1.0, 0.0,
            ],
        );
        let rm = ResistanceMatrix::new(vec![0, 1, 2, 3], d).unwrap();
        assert!(matches!(
            conductances_from_resistance(&rm),
            Err(Error::NotResistanceMetric { .. })
        ));

        // The Euclidean metric of a unit square needs a negative diagonal
        // conductance: the diagonal/side ratio sqrt(2) exceeds the largest
        // realizable ratio 4/3.
        let s = 2.0f64.sqrt();
        let d = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, s, 1.0, //
                1.0, 0.0, 1.0, s, //
                s, 1.0, 0.0, 1.0, //
                1.0, s, 1.0, 0.0,
            ],
        );
        let rm = ResistanceMatrix::new(vec![0, 1, 2, 3], d).unwrap();
        assert!(matches!(
            conductances_from_resistance(&rm),
            Err(Error::NotResistanceMetric { .. })
        ));
    }

    #[test]
    fn fuse_path_keeps_inner_edge() {
        let net = unit_path();
        let fused = fuse_complement(&net, &[0, 1]).unwrap();
        assert_eq!(fused.n_vertices(), 3);
        let star = fused.index_of(3).unwrap();
        let b1 = fused.index_of(1).unwrap();
        let b0 = fused.index_of(0).unwrap();
        assert_abs_diff_eq!(fused.conductance(b1, star), 1.0);
        assert_abs_diff_eq!(fused.conductance(b0, b1), 1.0);
        assert_abs_diff_eq!(fused.conductance(b0, star), 0.0);
    }

    #[test]
    fn fuse_singleton_complement_relabels() {
        let net = unit_triangle();
        let fused = fuse_complement(&net, &[0, 1]).unwrap();
        // Complement {2} relabels to the star; the network is the same
        // triangle, so every resistance is unchanged.
        let rm = resistance_matrix(&fused);
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    assert_abs_diff_eq!(rm.value(x, y), 2.0 / 3.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn fuse_rejects_degenerate_subsets() {
        let net = unit_triangle();
        assert!(matches!(fuse_complement(&net, &[]), Err(Error::EmptySet)));
        assert!(matches!(
            fuse_complement(&net, &[0, 1, 2]),
            Err(Error::FullSet)
        ));
        assert!(matches!(
            fuse_complement(&net, &[1, 2]),
            Err(Error::RootOutsideB)
        ));
    }

    #[test]
    fn fused_error_report_on_triangle() {
        let net = unit_triangle();
        let report = fused_metric_error_report(&net, &[0, 1], &[(0, 1)]).unwrap();
        let row = &report[0];
        assert_abs_diff_eq!(row.resistance, 2.0 / 3.0, epsilon = 1e-12);
        // Fusing a one-vertex complement is a relabelling, so the fused
        // metric coincides with the original one here.
        assert_abs_diff_eq!(row.fused, 2.0 / 3.0, epsilon = 1e-12);
        // Bound: 2 R(0, {2})^{-1/2} R(0,1)^{3/2} with both resistances 2/3.
        let expected_bound = 2.0 * (2.0f64 / 3.0).powf(-0.5) * (2.0f64 / 3.0).powf(1.5);
        assert_abs_diff_eq!(row.bound, expected_bound, epsilon = 1e-12);
        assert!(row.gap <= row.bound);
    }

    #[test]
    fn fused_error_report_full_set_is_error() {
        let net = unit_triangle();
        assert!(matches!(
            fused_metric_error_report(&net, &[0, 1, 2], &[(0, 1)]),
            Err(Error::FullSet)
        ));
    }
}
