//! Finite rooted measured metric spaces: covering numbers, metric-entropy
//! tail sums, restriction to balls, and Hausdorff / Prohorov /
//! Gromov-Hausdorff-Prohorov distances at desk scale.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ElectricalNetwork;
use crate::resistance::resistance_matrix;

/// Hard cap for the exact set-cover search (points fit in a u64 mask).
pub const EXACT_COVER_LIMIT: usize = 64;

/// On-disk shape of a metric-measure space: explicit distance matrix plus
/// per-point masses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub points: Vec<u64>,
    pub root: u64,
    pub d: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<FiniteMetricMeasureSpace> {
        let n = self.points.len();
        if self.d.len() != n || self.d.iter().any(|row| row.len() != n) {
            return Err(Error::Format("distance matrix shape mismatch".into()));
        }
        let root = self
            .points
            .iter()
            .position(|&p| p == self.root)
            .ok_or(Error::UnknownRoot { root: self.root })?;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = self.d[i][j];
            }
        }
        FiniteMetricMeasureSpace::new(self.points.clone(), d, root, self.mass.clone())
    }
}

#[derive(Debug, Clone)]
pub struct FiniteMetricMeasureSpace {
    labels: Vec<u64>,
    d: DMatrix<f64>,
    root: usize,
    mass: Vec<f64>,
}

impl FiniteMetricMeasureSpace {
    pub fn new(labels: Vec<u64>, d: DMatrix<f64>, root: usize, mass: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        if d.nrows() != n || d.ncols() != n || mass.len() != n {
            return Err(Error::NotAMetric {
                reason: "dimension mismatch".into(),
            });
        }
        if root >= n {
            return Err(Error::IndexOutOfRange {
                index: root,
                len: n,
            });
        }
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::NotAMetric {
                    reason: format!("nonzero diagonal at {i}"),
                });
            }
            if !(mass[i] >= 0.0 && mass[i].is_finite()) {
                return Err(Error::NotAMetric {
                    reason: format!("bad mass at {i}"),
                });
            }
            for j in 0..n {
                let v = d[(i, j)];
                if !(v >= 0.0 && v.is_finite()) || (v - d[(j, i)]).abs() > 1e-12 {
                    return Err(Error::NotAMetric {
                        reason: format!("bad entry ({i}, {j})"),
                    });
                }
                for k in 0..n {
                    if v > d[(i, k)] + d[(k, j)] + 1e-9 {
                        return Err(Error::NotAMetric {
                            reason: format!("triangle inequality fails on ({i}, {j}, {k})"),
                        });
                    }
                }
            }
        }
        Ok(Self {
            labels,
            d,
            root,
            mass,
        })
    }

    /// The resistance metric space of a network, carrying its associated
    /// measure and root.
    pub fn from_network(net: &ElectricalNetwork) -> Self {
        let rm = resistance_matrix(net);
        Self {
            labels: net.ids().to_vec(),
            d: rm.matrix().clone(),
            root: net.root(),
            mass: net.associated_measure().as_slice().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.d[(x, y)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn to_spec(&self) -> SpaceSpec {
        let n = self.len();
        SpaceSpec {
            points: self.labels.clone(),
            root: self.labels[self.root],
            d: (0..n)
                .map(|i| (0..n).map(|j| self.d[(i, j)]).collect())
                .collect(),
            mass: self.mass.clone(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.d[(i, j)]);
            }
        }
        best
    }

    /// Maximum distance from the root.
    pub fn root_eccentricity(&self) -> f64 {
        (0..self.len())
            .map(|i| self.d[(self.root, i)])
            .fold(0.0f64, f64::max)
    }

    /// Restriction to the open ball of radius r around the root; the root
    /// always stays, masses and distances restrict.
    pub fn restrict(&self, r: f64) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| i == self.root || self.d[(self.root, i)] < r)
            .collect();
        let labels = keep.iter().map(|&i| self.labels[i]).collect();
        let mass = keep.iter().map(|&i| self.mass[i]).collect();
        let d = self.d.select_rows(&keep).select_columns(&keep);
        let root = keep.iter().position(|&i| i == self.root).unwrap();
        Self {
            labels,
            d,
            root,
            mass,
        }
    }

    pub fn covering_number(&self, epsilon: f64, mode: CoverMode) -> Result<CoveringReport> {
        if epsilon <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        let n = self.len();
        match mode {
            CoverMode::Exact if n > EXACT_COVER_LIMIT => Err(Error::TooLargeForExact {
                points: n,
                limit: EXACT_COVER_LIMIT,
            }),
            CoverMode::Exact => {
                let balls = self.ball_masks(epsilon);
                let centers = exact_cover(&balls, n);
                Ok(CoveringReport {
                    epsilon,
                    count: centers.len(),
                    centers,
                    mode,
                })
            }
            CoverMode::Greedy => {
                let balls = self.ball_masks_vec(epsilon);
                let centers = greedy_cover(&balls, n);
                Ok(CoveringReport {
                    epsilon,
                    count: centers.len(),
                    centers,
                    mode,
                })
            }
        }
    }

    fn ball_masks(&self, epsilon: f64) -> Vec<u64> {
        let n = self.len();
        (0..n)
            .map(|c| {
                let mut mask = 0u64;
                for p in 0..n {
                    if self.d[(c, p)] <= epsilon {
                        mask |= 1 << p;
                    }
                }
                mask
            })
            .collect()
    }

    fn ball_masks_vec(&self, epsilon: f64) -> Vec<Vec<bool>> {
        let n = self.len();
        (0..n)
            .map(|c| (0..n).map(|p| self.d[(c, p)] <= epsilon).collect())
            .collect()
    }

    /// Tail of the metric-entropy series from index m:
    ///   sum_{k >= m} N(2^{-k})^2 exp(-2^{alpha k}),
    /// with the metric divided by `scale` before covering. Covering numbers
    /// saturate at the point count once 2^{-k} drops below the smallest
    /// positive distance; past saturation terms are added until the
    /// geometric remainder bound falls below 1e-15.
    pub fn entropy_tail(&self, alpha: f64, m: usize, scale: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::AlphaOutOfRange { alpha });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::NonPositiveScale { scale });
        }
        let n = self.len();
        let min_pos = {
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = self.d[(i, j)] / scale;
                    if v > 0.0 {
                        best = best.min(v);
                    }
                }
            }
            best
        };

        let ratio_base = 2.0f64.powf(alpha) - 1.0;
        let mut total = 0.0;
        let mut k = m;
        loop {
            let radius = 2.0f64.powi(-(k as i32));
            let count = if radius < min_pos {
                n
            } else {
                self.scaled_cover_count(radius * scale)?
            };
            let weight = (-(2.0f64.powf(alpha * k as f64))).exp();
            total += (count * count) as f64 * weight;

            if radius < min_pos {
                // Saturated: bound the rest by a geometric series.
                let next_exp = 2.0f64.powf(alpha * (k + 1) as f64);
                let next_term = (n * n) as f64 * (-next_exp).exp();
                let q = (-next_exp * ratio_base).exp();
                if next_term / (1.0 - q) < 1e-15 {
                    break;
                }
            }
            k += 1;
            if k > m + 10_000 {
                break; // unreachable at sane parameters
            }
        }
        Ok(total)
    }

    fn scaled_cover_count(&self, epsilon: f64) -> Result<usize> {
        let n = self.len();
        if n <= EXACT_COVER_LIMIT {
            Ok(self.covering_number(epsilon, CoverMode::Exact)?.count)
        } else {
            Ok(self.covering_number(epsilon, CoverMode::Greedy)?.count)
        }
    }

    /// Hausdorff distance between two point subsets; empty sets follow the
    /// infimum-over-the-empty-set convention.
    pub fn hausdorff_distance(&self, a: &[usize], b: &[usize]) -> SetDistance {
        match (a.is_empty(), b.is_empty()) {
            (true, true) => SetDistance::Finite(0.0),
            (true, false) | (false, true) => SetDistance::Infinite,
            (false, false) => {
                let directed = |from: &[usize], to: &[usize]| -> f64 {
                    from.iter()
                        .map(|&x| {
                            to.iter()
                                .map(|&y| self.d[(x, y)])
                                .fold(f64::INFINITY, f64::min)
                        })
                        .fold(0.0f64, f64::max)
                };
                SetDistance::Finite(directed(a, b).max(directed(b, a)))
            }
        }
    }

    /// Exact Prohorov distance between two mass vectors on this space.
    pub fn prohorov_distance(&self, mu: &[f64], nu: &[f64]) -> Result<f64> {
        let n = self.len();
        if mu.len() != n || nu.len() != n {
            return Err(Error::DomainMismatch {
                expected: n,
                got: mu.len().min(nu.len()),
            });
        }
        if mu.iter().chain(nu).any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mass",
                value: f64::NAN,
            });
        }
        Ok(prohorov_exact(&self.d, mu, nu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    Exact,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct CoveringReport {
    pub epsilon: f64,
    pub count: usize,
    /// Ball centers (point indices); closed epsilon-balls around them cover
    /// the space. Minimal in Exact mode.
    pub centers: Vec<usize>,
    pub mode: CoverMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetDistance {
    Finite(f64),
    Infinite,
}

impl SetDistance {
    pub fn finite(self) -> Option<f64> {
        match self {
            SetDistance::Finite(v) => Some(v),
            SetDistance::Infinite => None,
        }
    }
}

/// Greedy set cover: repeatedly the ball covering the most uncovered
/// points, ties toward the lower center index.
fn greedy_cover(balls: &[Vec<bool>], n: usize) -> Vec<usize> {
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut centers = Vec::new();
    while remaining > 0 {
        let mut best = usize::MAX;
        let mut best_gain = 0usize;
        for (c, ball) in balls.iter().enumerate() {
            let gain = ball
                .iter()
                .zip(&covered)
                .filter(|&(&b, &cov)| b && !cov)
                .count();
            if gain > best_gain {
                best_gain = gain;
                best = c;
            }
        }
        debug_assert!(best != usize::MAX, "every point is covered by its own ball");
        centers.push(best);
        for p in 0..n {
            if balls[best][p] && !covered[p] {
                covered[p] = true;
                remaining -= 1;
            }
        }
    }
    centers
}

/// Exact minimum set cover by branch and bound over u64 masks. Dominated
/// balls are dropped, branching picks the uncovered point with the fewest
/// candidate balls, and subtrees are cut with the coverage-rate bound.
fn exact_cover(balls: &[u64], n: usize) -> Vec<usize> {
    let universe: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    // Drop balls contained in another ball (keeping the earliest of equals).
    let mut kept: Vec<(usize, u64)> = Vec::new();
    'outer: for (i, &b) in balls.iter().enumerate() {
        for &(_, other) in &kept {
            if b & !other == 0 {
                continue 'outer;
            }
        }
        kept.retain(|&(_, other)| other & !b != 0);
        kept.push((i, b));
    }

    // Greedy upper bound.
    let greedy: Vec<usize> = {
        let mut covered = 0u64;
        let mut picks = Vec::new();
        while covered != universe {
            let (idx, _) = kept
                .iter()
                .map(|&(i, b)| (i, (b & !covered).count_ones()))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .unwrap();
            let ball = balls[idx];
            covered |= ball;
            picks.push(idx);
        }
        picks
    };

    let max_ball = kept
        .iter()
        .map(|&(_, b)| b.count_ones())
        .max()
        .unwrap_or(1)
        .max(1);

    struct Search<'a> {
        kept: &'a [(usize, u64)],
        universe: u64,
        best: Vec<usize>,
        max_ball: u32,
    }

    impl Search<'_> {
        fn dfs(&mut self, covered: u64, chosen: &mut Vec<usize>) {
            if covered == self.universe {
                if chosen.len() < self.best.len() {
                    self.best = chosen.clone();
                }
                return;
            }
            let uncovered = self.universe & !covered;
            let lower = chosen.len() + uncovered.count_ones().div_ceil(self.max_ball) as usize;
            if lower >= self.best.len() {
                return;
            }
            // The uncovered point with the fewest covering balls.
            let mut pick = 0usize;
            let mut pick_count = u32::MAX;
            let mut bits = uncovered;
            while bits != 0 {
                let p = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let cnt = self
                    .kept
                    .iter()
                    .filter(|&&(_, b)| b & (1 << p) != 0)
                    .count() as u32;
                if cnt < pick_count {
                    pick_count = cnt;
                    pick = p;
                }
            }
            let mut options: Vec<(usize, u64)> = self
                .kept
                .iter()
                .copied()
                .filter(|&(_, b)| b & (1 << pick) != 0)
                .collect();
            options.sort_by_key(|&(_, b)| std::cmp::Reverse((b & !covered).count_ones()));
            for (idx, b) in options {
                chosen.push(idx);
                self.dfs(covered | b, chosen);
                chosen.pop();
            }
        }
    }

    let mut search = Search {
        kept: &kept,
        universe,
        best: greedy,
        max_ball,
    };
    search.dfs(0, &mut Vec::new());
    let mut best = search.best;
    best.sort_unstable();
    best
}

/// Exact Prohorov distance on a (pseudo)metric matrix. The worst-subset
/// discrepancy t(eps) is piecewise constant between consecutive pairwise
/// distances and nonincreasing, so feasibility (t(eps) <= eps) is monotone:
/// binary search over the distance grid brackets the threshold, and the
/// infimum is max(radius, t) on the bracketing interval.
fn prohorov_exact(d: &DMatrix<f64>, mu: &[f64], nu: &[f64]) -> f64 {
    let n = d.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut radii: Vec<f64> = vec![0.0];
    for i in 0..n {
        for j in (i + 1)..n {
            radii.push(d[(i, j)]);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();

    let t_at = |rad: f64| -> f64 {
        max_discrepancy(d, mu, nu, rad)
            .max(max_discrepancy(d, nu, mu, rad))
            .max(0.0)
    };

    // Smallest grid index already feasible at its left endpoint.
    let mut lo = 0usize;
    let mut hi = radii.len(); // "none" sentinel
    while lo < hi {
        let mid = (lo + hi) / 2;
        if t_at(radii[mid]) <= radii[mid] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let k_f = lo;
    if k_f == radii.len() {
        // Never feasible at a left endpoint: the threshold sits in the
        // unbounded last interval.
        let rad = *radii.last().unwrap();
        return rad.max(t_at(rad));
    }
    let mut best = radii[k_f].max(t_at(radii[k_f]));
    if k_f > 0 {
        let rad = radii[k_f - 1];
        let cand = rad.max(t_at(rad));
        // Valid only when it stays inside its own interval.
        if cand < radii[k_f] {
            best = best.min(cand);
        }
    }
    best
}

/// max over subsets A of mu(A) - nu(A^rad), as a maximum-closure problem
/// solved by min cut: picking i gains mu_i and forces every j within rad.
fn max_discrepancy(d: &DMatrix<f64>, mu: &[f64], nu: &[f64], rad: f64) -> f64 {
    let n = d.nrows();
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut flow = MaxFlow::new(2 * n + 2);
    for i in 0..n {
        flow.add_edge(source, i, mu[i]);
        for j in 0..n {
            if d[(i, j)] <= rad {
                flow.add_edge(i, n + j, f64::INFINITY);
            }
        }
    }
    for (j, &mass) in nu.iter().enumerate() {
        flow.add_edge(n + j, sink, mass);
    }
    flow.max_flow(source, sink);
    // Read the optimum off the min cut with the original capacities: the
    // source side S is an optimal subset, and mu(S) - nu(neighbours of S)
    // evaluated from the inputs carries no flow-arithmetic noise.
    let side = flow.source_side(source);
    let mut value = 0.0;
    for i in 0..n {
        if side[i] {
            value += mu[i];
        }
    }
    for j in 0..n {
        if side[n + j] {
            value -= nu[j];
        }
    }
    value
}

/// Plain Edmonds-Karp max flow with f64 capacities.
struct MaxFlow {
    to: Vec<usize>,
    cap: Vec<f64>,
    head: Vec<Vec<usize>>,
}

impl MaxFlow {
    fn new(nodes: usize) -> Self {
        Self {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(cap);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        const EPS: f64 = 1e-12;
        let mut total = 0.0;
        loop {
            let mut prev_edge = vec![usize::MAX; self.head.len()];
            let mut visited = vec![false; self.head.len()];
            let mut queue = std::collections::VecDeque::new();
            visited[s] = true;
            queue.push_back(s);
            'bfs: while let Some(u) = queue.pop_front() {
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if !visited[v] && self.cap[e] > EPS {
                        visited[v] = true;
                        prev_edge[v] = e;
                        if v == t {
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            }
            if !visited[t] {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                bottleneck = bottleneck.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                self.cap[e] -= bottleneck;
                self.cap[e ^ 1] += bottleneck;
                v = self.to[e ^ 1];
            }
            total += bottleneck;
        }
    }

    /// Nodes reachable from `s` in the residual graph (the min-cut source
    /// side once max_flow has run).
    fn source_side(&self, s: usize) -> Vec<bool> {
        const EPS: f64 = 1e-12;
        let mut seen = vec![false; self.head.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if !seen[v] && self.cap[e] > EPS {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GhpBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Lower and certified upper bounds on the rooted Gromov-Hausdorff-Prohorov
/// distance. The upper bound glues the spaces along a correspondence
/// containing the root pair and takes the max of the root, Hausdorff and
/// Prohorov terms in the glued space; the lower bound combines diameter,
/// total-mass and root-eccentricity mismatches.
pub fn ghp_distance_bounds(
    a: &FiniteMetricMeasureSpace,
    b: &FiniteMetricMeasureSpace,
) -> GhpBounds {
    let lower = ((a.diameter() - b.diameter()).abs() / 2.0)
        .max((a.total_mass() - b.total_mass()).abs())
        .max((a.root_eccentricity() - b.root_eccentricity()).abs() / 2.0);

    let n = a.len();
    let m = b.len();
    let mut best = f64::INFINITY;

    if n * m <= 16 {
        // Exhaustive over correspondences containing the root pair, cheapest
        // distortion first; a correspondence cannot beat half its distortion,
        // which prunes almost every full evaluation.
        let root_bit = 1u32 << (a.root() * m + b.root());
        let mut masks: Vec<(f64, u32)> = Vec::new();
        for mask in 1u32..(1u32 << (n * m)) {
            if mask & root_bit == 0 {
                continue;
            }
            if !full_projections(mask, n, m) {
                continue;
            }
            let pairs = mask_pairs(mask, m);
            masks.push((correspondence_distortion(a, b, &pairs), mask));
        }
        masks.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for (dis, mask) in masks {
            if dis / 2.0 >= best {
                break;
            }
            let pairs = mask_pairs(mask, m);
            best = best.min(evaluate_correspondence(a, b, &pairs));
        }
    } else {
        let mut candidates: Vec<Vec<(usize, usize)>> = Vec::new();
        if n == m {
            candidates.push((0..n).map(|i| (i, i)).collect());
        }
        candidates.push(root_profile_matching(a, b));
        let mut seed_best = f64::INFINITY;
        let mut seed = Vec::new();
        for c in &candidates {
            let mut c = c.clone();
            force_root_pair(&mut c, a.root(), b.root());
            let score = evaluate_correspondence(a, b, &c);
            if score < seed_best {
                seed_best = score;
                seed = c;
            }
        }
        best = seed_best;
        best = best.min(hill_climb(a, b, seed, seed_best));
    }

    GhpBounds {
        lower,
        upper: best.max(lower),
    }
}

fn mask_pairs(mask: u32, m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut bits = mask;
    while bits != 0 {
        let k = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        pairs.push((k / m, k % m));
    }
    pairs
}

fn full_projections(mask: u32, n: usize, m: usize) -> bool {
    let mut left = vec![false; n];
    let mut right = vec![false; m];
    let mut bits = mask;
    while bits != 0 {
        let k = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        left[k / m] = true;
        right[k % m] = true;
    }
    left.into_iter().all(|v| v) && right.into_iter().all(|v| v)
}

fn force_root_pair(pairs: &mut Vec<(usize, usize)>, ra: usize, rb: usize) {
    if !pairs.contains(&(ra, rb)) {
        pairs.push((ra, rb));
    }
}

/// Match points by their distance-to-root profile, both ways.
fn root_profile_matching(
    a: &FiniteMetricMeasureSpace,
    b: &FiniteMetricMeasureSpace,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for x in 0..a.len() {
        let dx = a.distance(a.root(), x);
        let y = (0..b.len())
            .min_by(|&p, &q| {
                let dp = (b.distance(b.root(), p) - dx).abs();
                let dq = (b.distance(b.root(), q) - dx).abs();
                dp.partial_cmp(&dq).unwrap()
            })
            .unwrap();
        pairs.push((x, y));
    }
    for y in 0..b.len() {
        let dy = b.distance(b.root(), y);
        let x = (0..a.len())
            .min_by(|&p, &q| {
                let dp = (a.distance(a.root(), p) - dy).abs();
                let dq = (a.distance(a.root(), q) - dy).abs();
                dp.partial_cmp(&dq).unwrap()
            })
            .unwrap();
        if !pairs.contains(&(x, y)) {
            pairs.push((x, y));
        }
    }
    pairs
}

fn hill_climb(
    a: &FiniteMetricMeasureSpace,
    b: &FiniteMetricMeasureSpace,
    mut current: Vec<(usize, usize)>,
    mut score: f64,
) -> f64 {
    for _ in 0..40 {
        let mut improved = false;
        // Try re-targeting each pair.
        for k in 0..current.len() {
            let (x, y0) = current[k];
            for y in 0..b.len() {
                if y == y0 {
                    continue;
                }
                let mut cand = current.clone();
                cand[k] = (x, y);
                force_root_pair(&mut cand, a.root(), b.root());
                if !covers_both(&cand, a.len(), b.len()) {
                    continue;
                }
                let s = evaluate_correspondence(a, b, &cand);
                if s < score - 1e-15 {
                    score = s;
                    current = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    score
}

fn covers_both(pairs: &[(usize, usize)], n: usize, m: usize) -> bool {
    let mut left = vec![false; n];
    let mut right = vec![false; m];
    for &(x, y) in pairs {
        left[x] = true;
        right[y] = true;
    }
    left.into_iter().all(|v| v) && right.into_iter().all(|v| v)
}

fn correspondence_distortion(
    a: &FiniteMetricMeasureSpace,
    b: &FiniteMetricMeasureSpace,
    pairs: &[(usize, usize)],
) -> f64 {
    let mut dis = 0.0f64;
    for &(x1, y1) in pairs {
        for &(x2, y2) in pairs {
            dis = dis.max((a.distance(x1, x2) - b.distance(y1, y2)).abs());
        }
    }
    dis
}

/// Builds the standard glued pseudometric on the disjoint union (cross
/// distances through the correspondence with additive slack dis/2) and
/// evaluates max(root term, Hausdorff term, Prohorov term).
fn evaluate_correspondence(
    a: &FiniteMetricMeasureSpace,
    b: &FiniteMetricMeasureSpace,
    pairs: &[(usize, usize)],
) -> f64 {
    let n = a.len();
    let m = b.len();
    let delta = correspondence_distortion(a, b, pairs) / 2.0;
    let total = n + m;
    let mut d = DMatrix::zeros(total, total);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = a.distance(i, j);
        }
    }
    for i in 0..m {
        for j in 0..m {
            d[(n + i, n + j)] = b.distance(i, j);
        }
    }
    for i in 0..n {
        for j in 0..m {
            let mut cross = f64::INFINITY;
            for &(x, y) in pairs {
                cross = cross.min(a.distance(i, x) + delta + b.distance(y, j));
            }
            d[(i, n + j)] = cross;
            d[(n + j, i)] = cross;
        }
    }

    let root_term = d[(a.root(), n + b.root())];

    let mut hausdorff = 0.0f64;
    for i in 0..n {
        let nearest = (0..m).map(|j| d[(i, n + j)]).fold(f64::INFINITY, f64::min);
        hausdorff = hausdorff.max(nearest);
    }
    for j in 0..m {
        let nearest = (0..n).map(|i| d[(i, n + j)]).fold(f64::INFINITY, f64::min);
        hausdorff = hausdorff.max(nearest);
    }

    let mut mu = vec![0.0; total];
    let mut nu = vec![0.0; total];
    mu[..n].copy_from_slice(a.mass());
    nu[n..].copy_from_slice(b.mass());
    let prohorov = prohorov_exact(&d, &mu, &nu);

    root_term.max(hausdorff).max(prohorov)
}
