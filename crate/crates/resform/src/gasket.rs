//! Sierpinski-gasket approximation networks: windowed builds of the
//! unbounded gasket graph with deterministic or random conductances,
//! coarse-level projection maps, fused resistances, and convergence
//! reports against the renormalization-compatible sequence.
//!
//! Vertices live on the triangular lattice spanned by e1 = (1, 0) and
//! e2 = (1/2, sqrt(3)/2): a level-n vertex is (p e1 + q e2) 2^{-n} with
//! integer p, q >= 0. The window K^(N) is the closed triangle p + q <=
//! 2^{n+N}; squared Euclidean distance in lattice units is p^2 + q^2 + pq,
//! so vertex identity and adjacency are exact integer computations.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ElectricalNetwork, NetworkSpec};
use crate::resistance::{fuse_complement, resistance_matrix, ResistanceMatrix};
use crate::trace::{trace_network, TraceMethod};

/// Largest supported total subdivision depth (level + window).
pub const MAX_DEPTH: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConductanceMode {
    Deterministic,
    Random { lo: f64, hi: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasketSpec {
    /// Graph refinement level n: mesh 2^{-n}.
    pub level: u32,
    /// Window exponent N: vertices restricted to the triangle of side 2^N.
    pub window: u32,
    pub mode: ConductanceMode,
    /// Resistance scaling factor; conductances carry it as the (5/3)^n
    /// prefactor, so built networks are already resistance-scaled.
    pub a_n: f64,
    /// Measure scaling factor b_n = c0 * 3^n with c0 = 1.
    pub b_n: f64,
}

impl GasketSpec {
    pub fn new(level: u32, window: u32, mode: ConductanceMode) -> Self {
        let a_n = (5.0f64 / 3.0).powi(level as i32);
        let b_n = 3.0f64.powi(level as i32);
        Self {
            level,
            window,
            mode,
            a_n,
            b_n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.level + self.window > MAX_DEPTH {
            return Err(Error::InvalidParameter {
                name: "level + window",
                value: (self.level + self.window) as f64,
            });
        }
        if let ConductanceMode::Random { lo, hi, .. } = self.mode {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "conductance range",
                    value: lo,
                });
            }
        }
        Ok(())
    }
}

/// A built gasket network together with its exact lattice coordinates.
#[derive(Debug, Clone)]
pub struct GasketBuild {
    pub net: ElectricalNetwork,
    /// Lattice coordinates (p, q) per vertex index, in units of 2^{-level}.
    pub points: Vec<(i64, i64)>,
    pub spec: GasketSpec,
    index: HashMap<(i64, i64), usize>,
}

/// Builds the level-n gasket network inside the window K^(N).
pub fn build_gasket(spec: &GasketSpec) -> Result<GasketBuild> {
    spec.validate()?;
    let depth = spec.level + spec.window;
    let side = 1i64 << depth;

    // Kept cells of the subdivided triangle: (P, Q) with P + Q < side and
    // P & Q == 0 (the Pascal-mod-2 characterization of the gasket).
    let mut cells = Vec::new();
    for p in 0..side {
        for q in 0..(side - p) {
            if p & q == 0 {
                cells.push((p, q));
            }
        }
    }

    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut points: Vec<(i64, i64)> = Vec::new();
    let mut raw_edges: Vec<((i64, i64), (i64, i64))> = Vec::new();
    for &(p, q) in &cells {
        let corners = [(p, q), (p + 1, q), (p, q + 1)];
        for &c in &corners {
            // Placeholder index, rewritten after the sort below.
            if index.insert(c, 0).is_none() {
                points.push(c);
            }
        }
        raw_edges.push((corners[0], corners[1]));
        raw_edges.push((corners[0], corners[2]));
        raw_edges.push((corners[1], corners[2]));
    }

    // Deterministic vertex order: lexicographic in (p, q).
    points.sort_unstable();
    for (i, &pt) in points.iter().enumerate() {
        index.insert(pt, i);
    }
    // Canonical edge order for reproducible random conductances.
    for e in &mut raw_edges {
        if e.0 > e.1 {
            std::mem::swap(&mut e.0, &mut e.1);
        }
    }
    raw_edges.sort_unstable();
    raw_edges.dedup();

    let base = (5.0f64 / 3.0).powi(spec.level as i32);
    let mut rng = match &spec.mode {
        ConductanceMode::Deterministic => None,
        ConductanceMode::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
    };
    let edges: Vec<(u64, u64, f64)> = raw_edges
        .iter()
        .map(|&(a, b)| {
            let c = match (&spec.mode, &mut rng) {
                (ConductanceMode::Deterministic, _) => base,
                (ConductanceMode::Random { lo, hi, .. }, Some(rng)) => {
                    let u: f64 = rng.gen();
                    base * (lo + u * (hi - lo))
                }
                _ => unreachable!(),
            };
            (index[&a] as u64, index[&b] as u64, c)
        })
        .collect();

    let mesh = 2.0f64.powi(-(spec.level as i32));
    let coords: HashMap<u64, [f64; 2]> = points
        .iter()
        .enumerate()
        .map(|(i, &(p, q))| {
            let x = (p as f64 + q as f64 / 2.0) * mesh;
            let y = q as f64 * 3.0f64.sqrt() / 2.0 * mesh;
            (i as u64, [x, y])
        })
        .collect();

    let net = ElectricalNetwork::from_spec(&NetworkSpec {
        vertices: (0..points.len() as u64).collect(),
        root: index[&(0, 0)] as u64,
        edges,
        coords: Some(coords),
    })?;
    Ok(GasketBuild {
        net,
        points,
        spec: spec.clone(),
        index,
    })
}

impl GasketBuild {
    pub fn vertex_at(&self, p: i64, q: i64) -> Option<usize> {
        self.index.get(&(p, q)).copied()
    }

    /// The three outer corners of the window triangle.
    pub fn corners(&self) -> [usize; 3] {
        let side = 1i64 << (self.spec.level + self.spec.window);
        [
            self.index[&(0, 0)],
            self.index[&(side, 0)],
            self.index[&(0, side)],
        ]
    }

    /// Smallest window exponent j with the vertex inside K^(j).
    pub fn window_level(&self, v: usize) -> u32 {
        let (p, q) = self.points[v];
        let sum = p + q;
        let mut j = 0u32;
        while (1i64 << (self.spec.level + j)) < sum {
            j += 1;
        }
        j
    }

    pub fn in_window(&self, v: usize, j: u32) -> bool {
        let (p, q) = self.points[v];
        p + q <= 1i64 << (self.spec.level + j)
    }

    /// Vertices of the coarser level m (multiples of 2^{n-m} on the lattice),
    /// in vertex-index order.
    pub fn level_vertices(&self, m: u32) -> Result<Vec<usize>> {
        if m > self.spec.level {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m as f64,
            });
        }
        let s = 1i64 << (self.spec.level - m);
        Ok((0..self.points.len())
            .filter(|&v| {
                let (p, q) = self.points[v];
                p % s == 0 && q % s == 0
            })
            .collect())
    }

    /// Projects a vertex to the coarser level m: a corner of its containing
    /// level-m cell, restricted to corners on the same side of every window
    /// boundary, nearest first, ties to the lexicographically smallest
    /// lattice coordinate. The result is within Euclidean distance 2^{-m}.
    pub fn project(&self, v: usize, m: u32) -> Result<usize> {
        if m > self.spec.level {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m as f64,
            });
        }
        let s = 1i64 << (self.spec.level - m);
        let (p, q) = self.points[v];
        if p % s == 0 && q % s == 0 {
            return Ok(v);
        }
        let (cp, cq) = (p / s, q / s);
        let (rp, rq) = (p % s, q % s);
        debug_assert!(rp + rq <= s, "gasket vertices sit in upward cells");
        let corners = [
            (cp * s, cq * s),
            ((cp + 1) * s, cq * s),
            (cp * s, (cq + 1) * s),
        ];
        let wl = self.window_level(v);
        let mut best: Option<((i64, i64), i64)> = None;
        for &(a, b) in &corners {
            let corner_wl = {
                let mut j = 0u32;
                while (1i64 << (self.spec.level + j)) < a + b {
                    j += 1;
                }
                j
            };
            if corner_wl != wl {
                continue;
            }
            let (u, w) = (p - a, q - b);
            let dist2 = u * u + w * w + u * w;
            let better = match best {
                None => true,
                Some((bc, bd)) => dist2 < bd || (dist2 == bd && (a, b) < bc),
            };
            if better {
                best = Some(((a, b), dist2));
            }
        }
        let ((a, b), _) = best.expect("a same-window corner always exists");
        Ok(self.index[&(a, b)])
    }

    /// Fused resistance at coarse level m with window exponent `window`:
    /// trace onto the level-m vertices, then fuse everything outside K^(window)
    /// to a single vertex. With an empty complement no fuse happens and the
    /// plain traced resistance matrix is returned.
    pub fn fused_level_resistance(&self, m: u32, window: u32) -> Result<ResistanceMatrix> {
        let coarse = self.level_vertices(m)?;
        let traced = trace_network(&self.net, &coarse, TraceMethod::Schur)?;
        let keep: Vec<usize> = traced
            .subset
            .iter()
            .enumerate()
            .filter(|&(_, &orig)| self.in_window(orig, window))
            .map(|(i, _)| i)
            .collect();
        if keep.len() == traced.subset.len() {
            return Ok(resistance_matrix(&traced.reduced));
        }
        let fused = fuse_complement(&traced.reduced, &keep)?;
        Ok(resistance_matrix(&fused))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    /// sup over coarse pairs of |R_level - R_reference|, averaged over seeds
    /// in random mode.
    pub sup_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub base_level: u32,
    pub window: u32,
    pub rows: Vec<ConvergenceRow>,
}

/// Compares scaled level-n resistances, restricted to the level-m vertex
/// set, against the deterministic compatible sequence. Deterministic builds
/// are exactly compatible; random builds report the homogenization trend.
pub fn convergence_report(
    levels: &[u32],
    m: u32,
    window: u32,
    mode: &ConductanceMode,
    seeds: &[u64],
) -> Result<ConvergenceReport> {
    let reference = build_gasket(&GasketSpec::new(m, window, ConductanceMode::Deterministic))?;
    let ref_rm = resistance_matrix(&reference.net);

    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        if n < m {
            return Err(Error::InvalidParameter {
                name: "level",
                value: n as f64,
            });
        }
        let deviation = match mode {
            ConductanceMode::Deterministic => {
                sup_deviation_at_level(&GasketSpec::new(n, window, mode.clone()), m, &ref_rm)?
            }
            ConductanceMode::Random { lo, hi, seed } => {
                let seeds: Vec<u64> = if seeds.is_empty() {
                    vec![*seed]
                } else {
                    seeds.to_vec()
                };
                let mut acc = 0.0;
                for &s in &seeds {
                    let spec = GasketSpec::new(
                        n,
                        window,
                        ConductanceMode::Random {
                            lo: *lo,
                            hi: *hi,
                            seed: s,
                        },
                    );
                    acc += sup_deviation_at_level(&spec, m, &ref_rm)?;
                }
                acc / seeds.len() as f64
            }
        };
        rows.push(ConvergenceRow {
            level: n,
            sup_deviation: deviation,
        });
    }
    Ok(ConvergenceReport {
        base_level: m,
        window,
        rows,
    })
}

fn sup_deviation_at_level(spec: &GasketSpec, m: u32, reference: &ResistanceMatrix) -> Result<f64> {
    let build = build_gasket(spec)?;
    let coarse = build.level_vertices(m)?;
    debug_assert_eq!(coarse.len(), reference.len());
    let rm = resistance_matrix(&build.net);
    let mut sup = 0.0f64;
    for (i, &x) in coarse.iter().enumerate() {
        for (j, &y) in coarse.iter().enumerate() {
            sup = sup.max((rm.value(x, y) - reference.value(i, j)).abs());
        }
    }
    Ok(sup)
}
