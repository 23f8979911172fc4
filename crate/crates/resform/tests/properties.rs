//! Property tests for the structural invariants: detailed balance, energy
//! bilinearity, metric axioms, trace identities, fusing monotonicity, and
//! pathwise occupation identities on randomly generated networks.

mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;

use resform::metric::{CoverMode, FiniteMetricMeasureSpace};
use resform::network::VertexFunction;
use resform::walk::{local_time, occupation_residual, simulate_csrw, simulate_discrete};
use resform::{
    conductances_from_resistance, effective_resistance, fuse_complement, ghp_distance_bounds,
    resistance_between_sets, resistance_matrix, trace_network, ResistanceMatrix, TraceMethod,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detailed_balance_and_laplacian_energy(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 2, 14);
        let n = net.n_vertices();
        let p = net.transition_matrix();
        let mu = net.associated_measure();
        for x in 0..n {
            for y in 0..n {
                prop_assert!((mu.mass(x) * p[(x, y)] - mu.mass(y) * p[(y, x)]).abs() < 1e-12);
            }
        }
        // E(f, g) agrees with f^T L g, and the form is symmetric and bilinear.
        let f = VertexFunction::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
        let g = VertexFunction::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
        let h = VertexFunction::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
        let alpha: f64 = rng.gen_range(-2.0..2.0);
        let l = net.laplacian();
        let quad = {
            let fv = nalgebra::DVector::from_vec(f.as_slice().to_vec());
            let gv = nalgebra::DVector::from_vec(g.as_slice().to_vec());
            (fv.transpose() * &l * gv)[(0, 0)]
        };
        let e_fg = net.dirichlet_energy(&f, &g).unwrap();
        prop_assert!((e_fg - quad).abs() < 1e-10);
        prop_assert!((e_fg - net.dirichlet_energy(&g, &f).unwrap()).abs() < 1e-10);
        let combo = VertexFunction::new(
            (0..n).map(|i| alpha * f.value(i) + h.value(i)).collect(),
        );
        let lhs = net.dirichlet_energy(&combo, &g).unwrap();
        let rhs = alpha * e_fg + net.dirichlet_energy(&h, &g).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        // Zero energy only for constants.
        let constant = VertexFunction::constant(n, 1.7);
        prop_assert!(net.dirichlet_energy(&constant, &constant).unwrap().abs() < 1e-12);
        if n > 1 {
            let spike = VertexFunction::indicator(n, 0);
            prop_assert!(net.dirichlet_energy(&spike, &spike).unwrap() > 0.0);
        }
    }

    #[test]
    fn resistance_matrix_is_metric_and_matches_oracle(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 2, 12);
        let rm = resistance_matrix(&net);
        // Re-validating enforces symmetry, zero diagonal and the triangle
        // inequality at 1e-9.
        prop_assert!(ResistanceMatrix::new(rm.ids().to_vec(), rm.matrix().clone()).is_ok());
        let oracle = pseudoinverse_resistance_oracle(&net);
        for x in 0..net.n_vertices() {
            for y in 0..net.n_vertices() {
                prop_assert!((rm.value(x, y) - oracle[(x, y)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reconstruction_round_trip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 2, 12);
        let rm = resistance_matrix(&net);
        let back = conductances_from_resistance(&rm).unwrap();
        for x in 0..net.n_vertices() {
            for y in 0..net.n_vertices() {
                prop_assert!((back.conductance(x, y) - net.conductance(x, y)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn between_sets_matches_pairwise(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 2, 12);
        let n = net.n_vertices();
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        if x != y {
            let via_sets = resistance_between_sets(&net, &[x], &[y]).unwrap();
            prop_assert!((via_sets - effective_resistance(&net, x, y)).abs() < 1e-10);
        }
    }

    #[test]
    fn fusing_only_shrinks_resistance(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 3, 12);
        let b = random_subset_with_root(&mut rng, net.n_vertices(), net.root(), 1);
        if b.len() == net.n_vertices() {
            return Ok(());
        }
        let fused = fuse_complement(&net, &b).unwrap();
        let rm = resistance_matrix(&net);
        let rm_fused = resistance_matrix(&fused);
        for (i, &x) in b.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                let fx = fused.index_of(net.id(x)).unwrap();
                let fy = fused.index_of(net.id(y)).unwrap();
                prop_assert!(rm_fused.value(fx, fy) <= rm.value(x, y) + 1e-10,
                    "fused R exceeded at pair ({i}, {j})");
            }
        }
    }

    #[test]
    fn trace_methods_agree_and_restrict_resistance(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 3, 16);
        let b = random_subset_with_root(&mut rng, net.n_vertices(), net.root(), 1);
        let schur = trace_network(&net, &b, TraceMethod::Schur).unwrap();
        let hitting = trace_network(&net, &b, TraceMethod::Hitting).unwrap();
        let k = b.len();
        for i in 0..k {
            for j in 0..k {
                prop_assert!((schur.reduced.conductance(i, j)
                    - hitting.reduced.conductance(i, j)).abs() < 1e-10);
            }
            prop_assert!((schur.defect[i] - hitting.defect[i]).abs() < 1e-10);
            // Defect bounds from the return-probability identity.
            let x = schur.subset[i];
            let outside: f64 = net
                .neighbors(x)
                .iter()
                .filter(|&&(y, _)| !schur.subset.contains(&y))
                .map(|&(_, c)| c)
                .sum();
            prop_assert!(schur.defect[i] >= -1e-10);
            prop_assert!(schur.defect[i] <= outside + 1e-10);
        }
        // The reduced resistance is the restriction of the original.
        let rm = resistance_matrix(&net);
        let rm_reduced = resistance_matrix(&schur.reduced);
        for i in 0..k {
            for j in 0..k {
                prop_assert!(
                    (rm_reduced.value(i, j) - rm.value(schur.subset[i], schur.subset[j])).abs()
                        < 1e-9
                );
            }
        }
    }

    #[test]
    fn trace_tower_property(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 4, 14);
        let big = random_subset_with_root(&mut rng, net.n_vertices(), net.root(), 2);
        let first = trace_network(&net, &big, TraceMethod::Schur).unwrap();
        // A nested subset of the traced vertices, still holding the root.
        let inner_orig: Vec<usize> = {
            let root = net.root();
            first
                .subset
                .iter()
                .copied()
                .filter(|&x| x == root || rng.gen_bool(0.6))
                .collect()
        };
        let inner_reduced: Vec<usize> = inner_orig
            .iter()
            .map(|&x| first.reduced.index_of(net.id(x)).unwrap())
            .collect();
        let two_step = trace_network(&first.reduced, &inner_reduced, TraceMethod::Schur).unwrap();
        let direct = trace_network(&net, &inner_orig, TraceMethod::Schur).unwrap();
        for i in 0..inner_orig.len() {
            for j in 0..inner_orig.len() {
                prop_assert!((two_step.reduced.conductance(i, j)
                    - direct.reduced.conductance(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn occupation_identity_every_path(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 2, 10);
        let n = net.n_vertices();
        let f = VertexFunction::new((0..n).map(|_| rng.gen_range(-4.0..4.0)).collect());
        let steps = rng.gen_range(1..60);
        let path = simulate_discrete(&net, net.root(), steps, seed);
        let t = rng.gen_range(0.0..path.horizon);
        prop_assert!(occupation_residual(&path, &net, &f, t).unwrap() < 1e-12);
        let horizon = rng.gen_range(0.5..30.0);
        let cpath = simulate_csrw(&net, net.root(), horizon, seed);
        let ct = rng.gen_range(0.0..cpath.horizon);
        prop_assert!(occupation_residual(&cpath, &net, &f, ct).unwrap() < 1e-12);
        // Total-time identity and monotonicity of local times.
        let grid: Vec<f64> = (0..=8).map(|k| t * k as f64 / 8.0).collect();
        let field = local_time(&path, &net, &grid).unwrap();
        let mu = net.associated_measure();
        for (gi, &gt) in grid.iter().enumerate() {
            let total: f64 = (0..n).map(|x| field.values[x][gi] * mu.mass(x)).sum();
            prop_assert!((total - gt).abs() < 1e-12);
        }
        for x in 0..n {
            for w in field.values[x].windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-15);
            }
        }
    }

    #[test]
    fn covering_greedy_dominates_exact_and_monotone(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let space = random_euclidean_space(&mut rng, 2, 12);
        let eps1: f64 = rng.gen_range(0.05..2.0);
        let eps2 = eps1 * rng.gen_range(1.0..3.0);
        let exact1 = space.covering_number(eps1, CoverMode::Exact).unwrap().count;
        let exact2 = space.covering_number(eps2, CoverMode::Exact).unwrap().count;
        let greedy1 = space.covering_number(eps1, CoverMode::Greedy).unwrap().count;
        let greedy2 = space.covering_number(eps2, CoverMode::Greedy).unwrap().count;
        prop_assert!(greedy1 >= exact1);
        prop_assert!(exact2 <= exact1, "covering numbers grow as eps shrinks");
        prop_assert!(greedy2 <= greedy1, "greedy counts grow as eps shrinks");
    }

    #[test]
    fn restriction_is_monotone_in_radius(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let space = random_euclidean_space(&mut rng, 2, 12);
        let r1: f64 = rng.gen_range(0.1..2.0);
        let r2 = r1 + rng.gen_range(0.0..2.0);
        let s1 = space.restrict(r1);
        let s2 = space.restrict(r2);
        prop_assert!(s1.len() <= s2.len());
        for label in s1.labels() {
            prop_assert!(s2.labels().contains(label));
        }
        let beyond = space.restrict(space.root_eccentricity() + 1.0);
        prop_assert_eq!(beyond.len(), space.len());
    }

    #[test]
    fn prohorov_is_a_metric_on_random_measures(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let space = random_euclidean_space(&mut rng, 2, 8);
        let n = space.len();
        let rand_measure = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect()
        };
        let mu = rand_measure(&mut rng);
        let nu = rand_measure(&mut rng);
        let pi = rand_measure(&mut rng);
        let d_mn = space.prohorov_distance(&mu, &nu).unwrap();
        let d_nm = space.prohorov_distance(&nu, &mu).unwrap();
        prop_assert!((d_mn - d_nm).abs() < 1e-12, "symmetry");
        let d_mp = space.prohorov_distance(&mu, &pi).unwrap();
        let d_pn = space.prohorov_distance(&pi, &nu).unwrap();
        prop_assert!(d_mn <= d_mp + d_pn + 1e-9, "triangle inequality");
        prop_assert!(space.prohorov_distance(&mu, &mu).unwrap() < 1e-12);
    }

    #[test]
    fn ghp_bounds_are_ordered(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a = random_euclidean_space(&mut rng, 1, 6);
        let b = random_euclidean_space(&mut rng, 1, 6);
        let bounds = ghp_distance_bounds(&a, &b);
        prop_assert!(bounds.lower <= bounds.upper + 1e-12);
        let self_bounds = ghp_distance_bounds(&a, &a);
        prop_assert!(self_bounds.lower == 0.0 && self_bounds.upper == 0.0);
    }

    #[test]
    fn entropy_tail_monotonicities(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let space = random_euclidean_space(&mut rng, 2, 10);
        let alpha = rng.gen_range(0.05..0.45);
        let t0 = space.entropy_tail(alpha, 0, 1.0).unwrap();
        let t3 = space.entropy_tail(alpha, 3, 1.0).unwrap();
        prop_assert!(t3 <= t0 + 1e-15, "tail shrinks as the start index grows");
        let scale = rng.gen_range(1.5..8.0);
        let coarse = space.entropy_tail(alpha, 0, scale).unwrap();
        prop_assert!(coarse <= t0 + 1e-12, "dividing the metric shrinks covers");
    }

    #[test]
    fn walks_are_reproducible(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_connected_network(&mut rng, 2, 10);
        let a = simulate_discrete(&net, net.root(), 64, seed);
        let b = simulate_discrete(&net, net.root(), 64, seed);
        prop_assert_eq!(a.states, b.states);
        let c = simulate_csrw(&net, net.root(), 20.0, seed);
        let d = simulate_csrw(&net, net.root(), 20.0, seed);
        prop_assert_eq!(c.states, d.states);
        prop_assert_eq!(c.times, d.times);
    }
}

/// The resistance ball with a radius beyond the eccentricity is everything;
/// FiniteMetricMeasureSpace::from_network matches network data.
#[test]
fn space_from_network_is_consistent() {
    let mut r = rng(7);
    for _ in 0..16 {
        let net = random_connected_network(&mut r, 2, 10);
        let space = FiniteMetricMeasureSpace::from_network(&net);
        assert_eq!(space.len(), net.n_vertices());
        assert_eq!(space.root(), net.root());
        let rm = resistance_matrix(&net);
        for x in 0..net.n_vertices() {
            for y in 0..net.n_vertices() {
                assert!((space.distance(x, y) - rm.value(x, y)).abs() < 1e-15);
            }
        }
        let ball = resform::resistance_ball(&net, space.root_eccentricity() + 1.0);
        assert_eq!(ball.len(), net.n_vertices());
    }
}
