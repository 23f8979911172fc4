//! Random walk simulation on electrical networks: the discrete-time chain,
//! the constant-speed continuous-time walk, exact local-time accumulation,
//! path traces onto subsets, and seeded Monte Carlo diagnostic reports.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::network::{ElectricalNetwork, VertexFunction};
use crate::resistance::{resistance_between_sets, resistance_matrix};
use crate::trace::{resistance_ball, trace_network, TraceMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    Discrete,
    Csrw,
}

/// A realized trajectory. Discrete paths occupy unit time slots
/// (`[k, k+1)` holds `states[k]`); constant-speed paths carry their jump
/// times, with `states[k]` occupying `[times[k-1], times[k])` and `times[-1]`
/// meaning 0.
#[derive(Debug, Clone)]
pub struct WalkPath {
    pub kind: WalkKind,
    pub states: Vec<usize>,
    /// Jump times for csrw paths (strictly increasing, one per transition).
    pub times: Vec<f64>,
    /// The path is fully determined on [0, horizon].
    pub horizon: f64,
    pub seed: u64,
    pub start: usize,
}

impl WalkPath {
    /// Occupation segments (state, t_start, t_end) clipped to [0, t].
    fn segments(&self, t: f64) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let times = &self.times;
        let kind = self.kind;
        self.states
            .iter()
            .enumerate()
            .filter_map(move |(k, &state)| {
                let (lo, hi) = match kind {
                    WalkKind::Discrete => (k as f64, (k + 1) as f64),
                    WalkKind::Csrw => {
                        let lo = if k == 0 { 0.0 } else { times[k - 1] };
                        let hi = if k < times.len() {
                            times[k]
                        } else {
                            f64::INFINITY
                        };
                        (lo, hi)
                    }
                };
                let hi = hi.min(t);
                if hi > lo {
                    Some((state, lo, hi))
                } else {
                    None
                }
            })
    }
}

/// Stable per-sample seed derivation: sample i of a run seeded with s uses
/// hash(s, i), so parallel and serial execution consume identical streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ 0x9E3779B97F4A7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Precomputed cumulative transition rows for inverse-CDF stepping.
struct StepSampler {
    cum: Vec<Vec<f64>>,
    nbr: Vec<Vec<usize>>,
    total: Vec<f64>,
}

impl StepSampler {
    fn new(net: &ElectricalNetwork) -> Self {
        let n = net.n_vertices();
        let mut cum = Vec::with_capacity(n);
        let mut nbr = Vec::with_capacity(n);
        let mut total = Vec::with_capacity(n);
        for x in 0..n {
            let mut acc = 0.0;
            let mut c_row = Vec::new();
            let mut n_row = Vec::new();
            for &(y, c) in net.neighbors(x) {
                acc += c;
                c_row.push(acc);
                n_row.push(y);
            }
            cum.push(c_row);
            nbr.push(n_row);
            total.push(acc);
        }
        Self { cum, nbr, total }
    }

    /// One step from x: the first neighbour whose cumulative conductance
    /// exceeds the draw (ties in the cumulative row resolve to the lower
    /// vertex index).
    fn step(&self, x: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let target = u * self.total[x];
        let row = &self.cum[x];
        let mut lo = 0usize;
        let mut hi = row.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if row[mid] > target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.nbr[x][lo]
    }
}

/// Simulates the discrete-time chain for `steps` transitions.
pub fn simulate_discrete(
    net: &ElectricalNetwork,
    start: usize,
    steps: usize,
    seed: u64,
) -> WalkPath {
    let sampler = StepSampler::new(net);
    let mut rng = rng_for(seed);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(start);
    let mut cur = start;
    for _ in 0..steps {
        if sampler.nbr[cur].is_empty() {
            break; // degenerate one-vertex network
        }
        cur = sampler.step(cur, &mut rng);
        states.push(cur);
    }
    WalkPath {
        kind: WalkKind::Discrete,
        horizon: (states.len() - 1) as f64,
        states,
        times: Vec::new(),
        seed,
        start,
    }
}

/// Simulates the constant-speed random walk up to continuous time `horizon`:
/// jumps follow the discrete chain, holding times are i.i.d. exponential
/// with mean one, sampled as -ln(U) with U in (0, 1].
pub fn simulate_csrw(net: &ElectricalNetwork, start: usize, horizon: f64, seed: u64) -> WalkPath {
    let sampler = StepSampler::new(net);
    let mut rng = rng_for(seed);
    let mut states = vec![start];
    let mut times = Vec::new();
    let mut cur = start;
    let mut clock = 0.0;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
        let hold = -u.ln();
        if clock + hold > horizon || sampler.nbr[cur].is_empty() {
            break;
        }
        clock += hold;
        cur = sampler.step(cur, &mut rng);
        times.push(clock);
        states.push(cur);
    }
    WalkPath {
        kind: WalkKind::Csrw,
        states,
        times,
        horizon,
        seed,
        start,
    }
}

/// Local times of a path evaluated on a time grid:
/// l(x, t) = occupation time of x on [0, t] divided by c(x).
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    pub grid: Vec<f64>,
    /// `values[x][k] = l(x, grid[k])`.
    pub values: Vec<Vec<f64>>,
}

pub fn local_time(
    path: &WalkPath,
    net: &ElectricalNetwork,
    grid: &[f64],
) -> Result<LocalTimeField> {
    let n = net.n_vertices();
    for &t in grid {
        if !(0.0..=path.horizon).contains(&t) {
            return Err(Error::GridOutOfRange {
                t,
                horizon: path.horizon,
            });
        }
    }
    let mut values = vec![vec![0.0; grid.len()]; n];
    for (k, &t) in grid.iter().enumerate() {
        let mut occ = vec![0.0; n];
        for (state, lo, hi) in path.segments(t) {
            occ[state] += hi - lo;
        }
        for x in 0..n {
            let c = net.vertex_conductance(x);
            values[x][k] = if c > 0.0 { occ[x] / c } else { 0.0 };
        }
    }
    Ok(LocalTimeField {
        grid: grid.to_vec(),
        values,
    })
}

/// Residual of the occupation density formula at time t:
/// | int_0^t f(Y(s)) ds  -  sum_y f(y) l(y, t) mu({y}) |.
pub fn occupation_residual(
    path: &WalkPath,
    net: &ElectricalNetwork,
    f: &VertexFunction,
    t: f64,
) -> Result<f64> {
    let n = net.n_vertices();
    if f.len() != n {
        return Err(Error::DomainMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if !(0.0..=path.horizon).contains(&t) {
        return Err(Error::GridOutOfRange {
            t,
            horizon: path.horizon,
        });
    }
    let mut lhs = 0.0;
    for (state, lo, hi) in path.segments(t) {
        lhs += f.value(state) * (hi - lo);
    }
    let field = local_time(path, net, &[t])?;
    let mu = net.associated_measure();
    let mut rhs = 0.0;
    for y in 0..n {
        rhs += f.value(y) * field.values[y][0] * mu.mass(y);
    }
    Ok((lhs - rhs).abs())
}

/// Trace of a discrete path onto B: the path observed at the successive
/// times it occupies a B-vertex different from its current B-position.
/// When no further such time exists within the realized path the trace
/// freezes, repeating its last state.
pub fn trace_path(path: &WalkPath, b: &[usize]) -> Result<WalkPath> {
    if path.kind != WalkKind::Discrete {
        return Err(Error::DiscreteOnly);
    }
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    if !b.contains(&path.start) {
        return Err(Error::StartOutsideB);
    }
    let max_idx = b.iter().max().copied().unwrap_or(0).max(path.start);
    let mut in_b = vec![false; max_idx.max(*path.states.iter().max().unwrap_or(&0)) + 1];
    for &x in b {
        in_b[x] = true;
    }
    let k_steps = path.states.len() - 1;
    let mut states = Vec::with_capacity(path.states.len());
    states.push(path.start);
    let mut cursor = 0usize; // current T~ value
    let mut cur = path.start;
    for _ in 0..k_steps {
        // T~^{k+1} = inf { n >= T~^k + 1 : Y(n) in B \ {Y(T~^k)} }.
        let next = (cursor + 1..path.states.len())
            .find(|&nn| in_b[path.states[nn]] && path.states[nn] != cur);
        // A missing successor freezes the trace at its current value.
        if let Some(nn) = next {
            cursor = nn;
            cur = path.states[nn];
        }
        states.push(cur);
    }
    Ok(WalkPath {
        kind: WalkKind::Discrete,
        horizon: (states.len() - 1) as f64,
        states,
        times: Vec::new(),
        seed: path.seed,
        start: path.start,
    })
}

/// Chi-square comparison of the empirical transition counts of tr_B(Y)
/// against the exact transition law of the trace network.
#[derive(Debug, Clone)]
pub struct CouplingReport {
    /// Subset indices (into the original network), sorted.
    pub subset: Vec<usize>,
    /// `counts[u][v]`: observed trace transitions u -> v (indices into subset).
    pub counts: Vec<Vec<u64>>,
    /// Exact trace-chain transition matrix rows.
    pub expected_law: Vec<Vec<f64>>,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub samples: usize,
    pub steps_per_sample: usize,
}

pub fn verify_trace_coupling(
    net: &ElectricalNetwork,
    b: &[usize],
    steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CouplingReport> {
    let tr = trace_network(net, b, TraceMethod::Schur)?;
    let subset = tr.subset.clone();
    let k = subset.len();
    if k < 2 {
        return Err(Error::SubsetTooSmall { needed: 2, got: k });
    }
    if steps == 0 || n_samples == 0 {
        return Err(Error::InvalidParameter {
            name: "steps/samples",
            value: 0.0,
        });
    }
    let mut pos_in_subset = vec![usize::MAX; net.n_vertices()];
    for (i, &x) in subset.iter().enumerate() {
        pos_in_subset[x] = i;
    }
    let law: Vec<Vec<f64>> = {
        let p = tr.reduced.transition_matrix();
        (0..k)
            .map(|i| (0..k).map(|j| p[(i, j)]).collect())
            .collect()
    };

    let sampler = StepSampler::new(net);
    let root = net.root();
    let in_b: Vec<bool> = {
        let mut v = vec![false; net.n_vertices()];
        for &x in &subset {
            v[x] = true;
        }
        v
    };

    // Each sample walks the full chain until the trace has made `steps`
    // moves, recording the trace transitions it performs.
    let counts = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(derive_seed(seed, i as u64));
            let mut counts = vec![vec![0u64; k]; k];
            let mut trace_cur = root;
            let mut cur = root;
            for _ in 0..steps {
                loop {
                    cur = sampler.step(cur, &mut rng);
                    if in_b[cur] && cur != trace_cur {
                        break;
                    }
                }
                counts[pos_in_subset[trace_cur]][pos_in_subset[cur]] += 1;
                trace_cur = cur;
            }
            counts
        })
        .reduce(
            || vec![vec![0u64; k]; k],
            |mut a, b| {
                for i in 0..k {
                    for j in 0..k {
                        a[i][j] += b[i][j];
                    }
                }
                a
            },
        );

    // Pearson statistic conditioned on the observed row totals; degrees of
    // freedom sum (support size - 1) over visited rows.
    let mut chi_square = 0.0;
    let mut dof = 0usize;
    for i in 0..k {
        let row_total: u64 = counts[i].iter().sum();
        if row_total == 0 {
            continue;
        }
        let support = law[i].iter().filter(|&&p| p > 0.0).count();
        dof += support.saturating_sub(1);
        for j in 0..k {
            if law[i][j] > 0.0 {
                let expected = row_total as f64 * law[i][j];
                let diff = counts[i][j] as f64 - expected;
                chi_square += diff * diff / expected;
            }
        }
    }
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
        1.0 - dist.cdf(chi_square)
    };

    Ok(CouplingReport {
        subset,
        counts,
        expected_law: law,
        chi_square,
        dof,
        p_value,
        samples: n_samples,
        steps_per_sample: steps,
    })
}

/// Monte Carlo exit-time check against the resistance/volume bound
/// P(T <= t) <= 1/lambda + 4 delta / R + 4 t lambda / (mu(B(rho, delta)) (R - delta)),
/// with R the resistance from the root to the complement of the radius-r ball.
#[derive(Debug, Clone)]
pub struct ExitTimeReport {
    pub radius: f64,
    pub delta: f64,
    pub lambda: f64,
    pub t: f64,
    pub resistance_to_complement: f64,
    pub small_ball_mass: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    pub samples: usize,
}

pub fn exit_time_report(
    net: &ElectricalNetwork,
    r: f64,
    delta: f64,
    lambda: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ExitTimeReport> {
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
        });
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
        });
    }
    let ball = resistance_ball(net, r);
    let complement: Vec<usize> = {
        let mut inside = vec![false; net.n_vertices()];
        for &x in &ball {
            inside[x] = true;
        }
        (0..net.n_vertices()).filter(|&x| !inside[x]).collect()
    };
    if complement.is_empty() {
        return Err(Error::EmptyComplement { radius: r });
    }
    let resistance = resistance_between_sets(net, &[net.root()], &complement)?;
    if !(delta > 0.0 && delta < resistance) {
        return Err(Error::DeltaTooLarge {
            delta,
            limit: resistance,
        });
    }
    let small_ball = resistance_ball(net, delta);
    let mu = net.associated_measure();
    let small_ball_mass: f64 = small_ball.iter().map(|&x| mu.mass(x)).sum();

    let bound = 1.0 / lambda
        + 4.0 * delta / resistance
        + 4.0 * t * lambda / (small_ball_mass * (resistance - delta));

    let steps = t.floor() as usize;
    let sampler = StepSampler::new(net);
    let in_complement: Vec<bool> = {
        let mut v = vec![false; net.n_vertices()];
        for &x in &complement {
            v[x] = true;
        }
        v
    };
    let root = net.root();
    let hits: u64 = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(derive_seed(seed, i as u64));
            let mut cur = root;
            for _ in 0..steps {
                cur = sampler.step(cur, &mut rng);
                if in_complement[cur] {
                    return 1u64;
                }
            }
            0u64
        })
        .sum();
    let empirical = hits as f64 / n_samples as f64;
    let std_error = (empirical * (1.0 - empirical) / n_samples as f64).sqrt();

    Ok(ExitTimeReport {
        radius: r,
        delta,
        lambda,
        t,
        resistance_to_complement: resistance,
        small_ball_mass,
        empirical,
        std_error,
        bound,
        samples: n_samples,
    })
}

/// Empirical exceedance of local-time oscillations per dyadic scale.
#[derive(Debug, Clone)]
pub struct DyadicEntry {
    pub level: u32,
    /// Oscillation threshold 2^{-(1/2 - alpha) N} (reference constant 1).
    pub threshold: f64,
    /// Fraction of samples whose near-pair oscillation exceeds it.
    pub exceedance: f64,
}

/// Shape diagnostics for the local-time modulus: the normalized pair
/// oscillation statistic per sample, its survival frequencies on a lambda
/// grid, the fitted log-frequency slope, and per-scale dyadic entries.
#[derive(Debug, Clone)]
pub struct ModulusReport {
    pub r_diam: f64,
    pub m_total: f64,
    pub horizon: f64,
    pub lambdas: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub fitted_slope: f64,
    pub dyadic: Vec<DyadicEntry>,
    pub samples: usize,
}

const DYADIC_LEVELS: u32 = 6;
const LAMBDA_GRID: usize = 8;

pub fn local_time_modulus_report(
    net: &ElectricalNetwork,
    t_param: f64,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ModulusReport> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    if t_param <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_param,
        });
    }
    let n = net.n_vertices();
    let rm = resistance_matrix(net);
    let r_diam = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .map(|(x, y)| rm.value(x, y))
        .fold(0.0f64, f64::max);
    let m_total = net.associated_measure().total();
    let horizon = t_param * m_total * r_diam;
    let steps = horizon.ceil().max(1.0) as usize;

    // Pair weights 1/sqrt(r R(x,y)) for the lambda statistic, and the
    // largest dyadic level each pair qualifies for (r^{-1} R < 2^{-N+1}).
    let mut weight = vec![0.0f64; n * n];
    let mut level = vec![0u32; n * n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let rr = rm.value(x, y);
            weight[x * n + y] = 1.0 / (r_diam * rr).sqrt();
            let ratio = rr / r_diam; // in (0, 1]
                                     // Qualifies at scale N iff ratio < 2^{-N+1}, strictly: the
                                     // largest such N is ceil(1 - log2 ratio) - 1.
            let max_level = (1.0 - ratio.log2()).ceil() - 1.0;
            level[x * n + y] = max_level.clamp(0.0, DYADIC_LEVELS as f64) as u32;
        }
    }

    let conduct: Vec<f64> = (0..n).map(|x| net.vertex_conductance(x)).collect();
    let sampler = StepSampler::new(net);
    let root = net.root();

    struct SampleStat {
        lambda_stat: f64,
        dyadic_stat: [f64; DYADIC_LEVELS as usize + 1],
    }

    let stats: Vec<SampleStat> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(derive_seed(seed, i as u64));
            let mut ell = vec![0.0f64; n];
            let mut cur = root;
            let mut lambda_stat = 0.0f64;
            // best oscillation seen among pairs whose maximal level is l
            let mut best_at_level = [0.0f64; DYADIC_LEVELS as usize + 1];
            for k in 0..steps {
                let duration = (horizon - k as f64).min(1.0);
                if conduct[cur] > 0.0 {
                    ell[cur] += duration / conduct[cur];
                }
                for y in 0..n {
                    if y == cur {
                        continue;
                    }
                    let diff = (ell[cur] - ell[y]).abs();
                    let s = diff * weight[cur * n + y];
                    if s > lambda_stat {
                        lambda_stat = s;
                    }
                    let l = level[cur * n + y] as usize;
                    let osc = diff / r_diam;
                    if osc > best_at_level[l] {
                        best_at_level[l] = osc;
                    }
                }
                if sampler.nbr[cur].is_empty() {
                    break;
                }
                cur = sampler.step(cur, &mut rng);
            }
            // A pair of level l qualifies at every scale N <= l, so the
            // per-scale statistic is the suffix maximum.
            let mut dyadic_stat = [0.0f64; DYADIC_LEVELS as usize + 1];
            let mut running = 0.0f64;
            for l in (0..=DYADIC_LEVELS as usize).rev() {
                running = running.max(best_at_level[l]);
                dyadic_stat[l] = running;
            }
            SampleStat {
                lambda_stat,
                dyadic_stat,
            }
        })
        .collect();

    let lambda_max = stats.iter().map(|s| s.lambda_stat).fold(0.0f64, f64::max);
    let mut lambdas = Vec::with_capacity(LAMBDA_GRID + 1);
    let mut frequencies = Vec::with_capacity(LAMBDA_GRID + 1);
    for j in 0..=LAMBDA_GRID {
        let lam = lambda_max * j as f64 / LAMBDA_GRID as f64;
        let freq =
            stats.iter().filter(|s| s.lambda_stat >= lam).count() as f64 / n_samples.max(1) as f64;
        lambdas.push(lam);
        frequencies.push(freq);
    }

    // Least-squares slope of ln(frequency) against lambda over the grid
    // points with positive frequency.
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(&frequencies)
        .filter(|&(_, &f)| f > 0.0)
        .map(|(&l, &f)| (l, f.ln()))
        .collect();
    let fitted_slope = if pts.len() < 2 || lambda_max == 0.0 {
        0.0
    } else {
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (m * sxy - sx * sy) / (m * sxx - sx * sx)
    };

    let dyadic = (1..=DYADIC_LEVELS)
        .map(|nn| {
            let threshold = 2.0f64.powf(-(0.5 - alpha) * nn as f64);
            let exceed = stats
                .iter()
                .filter(|s| s.dyadic_stat[nn as usize] > threshold)
                .count() as f64
                / n_samples.max(1) as f64;
            DyadicEntry {
                level: nn,
                threshold,
                exceedance: exceed,
            }
        })
        .collect();

    Ok(ModulusReport {
        r_diam,
        m_total,
        horizon,
        lambdas,
        frequencies,
        fitted_slope,
        dyadic,
        samples: n_samples,
    })
}
