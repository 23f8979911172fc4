//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use resform::metric::FiniteMetricMeasureSpace;
use resform::network::{ElectricalNetwork, NetworkSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected network: a random spanning tree plus extra random edges,
/// conductances uniform in [0.2, 5.0], root 0.
pub fn random_connected_network(
    rng: &mut ChaCha8Rng,
    n_min: usize,
    n_max: usize,
) -> ElectricalNetwork {
    random_connected_network_with(rng, n_min, n_max, 0.2, 5.0)
}

pub fn random_connected_network_with(
    rng: &mut ChaCha8Rng,
    n_min: usize,
    n_max: usize,
    c_lo: f64,
    c_hi: f64,
) -> ElectricalNetwork {
    let n = rng.gen_range(n_min..=n_max);
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let c = rng.gen_range(c_lo..c_hi);
        seen.insert((u, v));
        edges.push((u as u64, v as u64, c));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push((key.0 as u64, key.1 as u64, rng.gen_range(c_lo..c_hi)));
        }
    }
    ElectricalNetwork::from_spec(&NetworkSpec {
        vertices: (0..n as u64).collect(),
        root: 0,
        edges,
        coords: None,
    })
    .expect("generated network is valid")
}

/// Random subset of vertices containing the root, size at least `min_size`.
pub fn random_subset_with_root(
    rng: &mut ChaCha8Rng,
    n: usize,
    root: usize,
    min_size: usize,
) -> Vec<usize> {
    loop {
        let mut subset: Vec<usize> = (0..n).filter(|&x| x == root || rng.gen_bool(0.5)).collect();
        subset.sort_unstable();
        if subset.len() >= min_size {
            return subset;
        }
    }
}

/// Brute-force all-pairs effective resistance through the Laplacian
/// pseudoinverse: R(x, y) = M[x,x] + M[y,y] - 2 M[x,y] with M the
/// eigendecomposition pseudoinverse of L. Independent of the pinned-solve
/// route used by the library.
pub fn pseudoinverse_resistance_oracle(net: &ElectricalNetwork) -> DMatrix<f64> {
    let l = net.laplacian();
    let n = l.nrows();
    let eig = l.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut pinv: DMatrix<f64> = DMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() > 1e-10 * max_abs.max(1.0) {
            let v = eig.eigenvectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    pinv[(i, j)] += v[i] * v[j] / lambda;
                }
            }
        }
    }
    let mut r = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            r[(x, y)] = pinv[(x, x)] + pinv[(y, y)] - 2.0 * pinv[(x, y)];
        }
    }
    r
}

/// Random points in the plane with the Euclidean metric and random masses:
/// a guaranteed metric-measure space.
pub fn random_euclidean_space(
    rng: &mut ChaCha8Rng,
    n_min: usize,
    n_max: usize,
) -> FiniteMetricMeasureSpace {
    let n = rng.gen_range(n_min..=n_max);
    let points: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = ((points[i][0] - points[j][0]).powi(2)
                + (points[i][1] - points[j][1]).powi(2))
            .sqrt();
        }
    }
    let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
    FiniteMetricMeasureSpace::new((0..n as u64).collect(), d, 0, mass).unwrap()
}

/// Exhaustive minimum set cover: tries every subset of centers.
pub fn exhaustive_cover_oracle(space: &FiniteMetricMeasureSpace, eps: f64) -> usize {
    let n = space.len();
    assert!(n <= 20);
    let full: u32 = (1 << n) - 1;
    let balls: Vec<u32> = (0..n)
        .map(|c| {
            let mut mask = 0u32;
            for p in 0..n {
                if space.distance(c, p) <= eps {
                    mask |= 1 << p;
                }
            }
            mask
        })
        .collect();
    let mut best = n;
    for choice in 1u32..(1 << n) {
        if (choice.count_ones() as usize) >= best {
            continue;
        }
        let mut covered = 0u32;
        let mut bits = choice;
        while bits != 0 {
            let c = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            covered |= balls[c];
        }
        if covered == full {
            best = choice.count_ones() as usize;
        }
    }
    best
}

/// Exhaustive Prohorov oracle: candidate epsilons from brute-force
/// worst-subset discrepancies at every distance radius, each candidate
/// verified directly against the definition by full subset enumeration.
pub fn exhaustive_prohorov_oracle(space: &FiniteMetricMeasureSpace, mu: &[f64], nu: &[f64]) -> f64 {
    let n = space.len();
    assert!(n <= 12);
    let d = space.matrix();

    let feasible = |eps: f64| -> bool {
        for mask in 0u32..(1 << n) {
            let mut mu_a = 0.0;
            let mut nu_a = 0.0;
            let mut mu_ae = 0.0;
            let mut nu_ae = 0.0;
            for x in 0..n {
                let in_a = mask & (1 << x) != 0;
                if in_a {
                    mu_a += mu[x];
                    nu_a += nu[x];
                }
                let in_ae = (0..n).any(|y| mask & (1 << y) != 0 && d[(y, x)] <= eps);
                if in_ae {
                    mu_ae += mu[x];
                    nu_ae += nu[x];
                }
            }
            if mu_a > nu_ae + eps + 1e-12 || nu_a > mu_ae + eps + 1e-12 {
                return false;
            }
        }
        true
    };

    let mut radii: Vec<f64> = vec![0.0];
    for i in 0..n {
        for j in (i + 1)..n {
            radii.push(d[(i, j)]);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();

    // Worst-subset discrepancy at a fixed radius, brute force.
    let t_at = |rad: f64| -> f64 {
        let mut worst = 0.0f64;
        for mask in 0u32..(1 << n) {
            let mut mu_a = 0.0;
            let mut nu_a = 0.0;
            let mut mu_ae = 0.0;
            let mut nu_ae = 0.0;
            for x in 0..n {
                if mask & (1 << x) != 0 {
                    mu_a += mu[x];
                    nu_a += nu[x];
                }
                if (0..n).any(|y| mask & (1 << y) != 0 && d[(y, x)] <= rad) {
                    mu_ae += mu[x];
                    nu_ae += nu[x];
                }
            }
            worst = worst.max(mu_a - nu_ae).max(nu_a - mu_ae);
        }
        worst
    };

    let mut candidates: Vec<f64> = Vec::new();
    for &rad in &radii {
        candidates.push(rad);
        candidates.push(rad.max(t_at(rad)));
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    for &eps in &candidates {
        if feasible(eps) {
            return eps;
        }
    }
    unreachable!("the largest candidate is always feasible");
}
