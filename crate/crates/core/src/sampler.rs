//! Sampling graphs from block models and validating tail probabilities at
//! desk scale: Monte Carlo with counter-based substreams, exact enumeration
//! for tiny instances, and conditional-structure statistics.

use crate::cutnorm::delta_cut_bounds;
use crate::error::{Error, Result};
use crate::graph::FiniteGraph;
use crate::graphon::{StepGraphon, d_average, denominator_lcm, refine_to_uniform};
use crate::rng::CounterRng;

/// Largest supported sampled-graph size.
const MAX_VERTICES: usize = 4096;

/// A labeled graph sampled from a uniform block model.
#[derive(Debug, Clone)]
pub struct SampledGraph {
    kn: usize,
    words: usize,
    bits: Vec<u64>,
    block_of: Vec<usize>,
    seed: u64,
}

impl SampledGraph {
    fn empty(kn: usize, blocks: usize, n: usize, seed: u64) -> Self {
        let words = kn.div_ceil(64);
        SampledGraph {
            kn,
            words,
            bits: vec![0; kn * words],
            block_of: (0..kn).map(|i| (i / n).min(blocks - 1)).collect(),
            seed,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.kn
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_of(&self, vertex: usize) -> usize {
        self.block_of[vertex]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        let mask_i = 1u64 << (j % 64);
        let mask_j = 1u64 << (i % 64);
        if present {
            self.bits[i * self.words + j / 64] |= mask_i;
            self.bits[j * self.words + i / 64] |= mask_j;
        } else {
            self.bits[i * self.words + j / 64] &= !mask_i;
            self.bits[j * self.words + i / 64] &= !mask_j;
        }
    }

    pub fn edge_count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum::<u64>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.kn {
            for j in (i + 1)..self.kn {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// The empirical graphon: `kn` uniform blocks with 0/1 values.
    pub fn empirical_graphon(&self) -> StepGraphon {
        let values: Vec<Vec<f64>> = (0..self.kn)
            .map(|i| {
                (0..self.kn)
                    .map(|j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        StepGraphon::uniform(values).expect("empirical graphon is valid")
    }

    fn adjacency_f64(&self) -> Vec<f64> {
        let n = self.kn;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if self.has_edge(i, j) {
                    a[i * n + j] = 1.0;
                }
            }
        }
        a
    }
}

/// Moves a rational block graphon onto its uniform equipartition; the block
/// count is the denominator lcm of the breakpoints.
fn equipartition(w0: &StepGraphon) -> Result<(StepGraphon, usize)> {
    let l = denominator_lcm(w0).ok_or_else(|| Error::Capacity {
        what: "equipartition denominator".into(),
        limit: "u64".into(),
    })?;
    if l as usize > MAX_VERTICES {
        return Err(Error::Capacity {
            what: format!("equipartition into {l} blocks"),
            limit: MAX_VERTICES.to_string(),
        });
    }
    Ok((refine_to_uniform(w0, l)?, l as usize))
}

fn sample_into(
    uniform: &StepGraphon,
    k: usize,
    n: usize,
    seed: u64,
    stream: u64,
) -> SampledGraph {
    let kn = k * n;
    let mut g = SampledGraph::empty(kn, k, n, seed);
    let mut rng = CounterRng::substream(seed, stream);
    for i in 0..kn {
        for j in (i + 1)..kn {
            let p = uniform.value(g.block_of[i], g.block_of[j]);
            let u = rng.uniform();
            if u < p {
                g.set_edge(i, j, true);
            }
        }
    }
    g
}

/// Samples a graph on `k * n` vertices from the block model: vertex `i`
/// belongs to block `i / n` and pairs get independent Bernoulli edges with
/// the block probabilities. Deterministic in `seed`.
pub fn sample_graph(w0: &StepGraphon, n: usize, seed: u64) -> Result<SampledGraph> {
    if n == 0 {
        return Err(Error::Domain("per-block vertex count must be positive".into()));
    }
    let (uniform, k) = equipartition(w0)?;
    if k * n > MAX_VERTICES {
        return Err(Error::Capacity {
            what: format!("sampled graph on {} vertices", k * n),
            limit: MAX_VERTICES.to_string(),
        });
    }
    Ok(sample_into(&uniform, k, n, seed, 0))
}

/// Homomorphism density of `H` in the empirical graphon of `G`, counting all
/// vertex maps. Cycles go through powers of the adjacency matrix; other
/// patterns are brute-forced with a capacity guard of `kn^v <= 1e8`.
pub fn empirical_density(h: &FiniteGraph, g: &SampledGraph) -> Result<f64> {
    let kn = g.vertex_count();
    let v = h.vertex_count();
    if h.edge_count() == 0 {
        return Ok(1.0);
    }
    if v == 2 && h.edge_count() == 1 {
        return Ok(2.0 * g.edge_count() as f64 / (kn as f64 * kn as f64));
    }
    if h.is_cycle() {
        let len = h.vertex_count();
        let a = g.adjacency_f64();
        let mut power = a.clone();
        for _ in 1..len - 1 {
            power = mat_mul(&power, &a, kn);
        }
        // trace(A^len) without forming the last full product.
        let mut trace = 0.0;
        for i in 0..kn {
            for j in 0..kn {
                trace += power[i * kn + j] * a[j * kn + i];
            }
        }
        return Ok(trace / (kn as f64).powi(len as i32));
    }
    let total = (kn as u128).checked_pow(v as u32).unwrap_or(u128::MAX);
    if total > 100_000_000 {
        return Err(Error::Capacity {
            what: format!("brute-force map enumeration {kn}^{v}"),
            limit: "100000000".into(),
        });
    }
    let mut hits: u64 = 0;
    let mut map = vec![0usize; v];
    'outer: loop {
        let ok = h.edges().iter().all(|&(a, b)| g.has_edge(map[a], map[b]));
        if ok {
            hits += 1;
        }
        let mut pos = 0;
        loop {
            if pos == v {
                break 'outer;
            }
            map[pos] += 1;
            if map[pos] < kn {
                break;
            }
            map[pos] = 0;
            pos += 1;
        }
    }
    Ok(hits as f64 / (kn as f64).powi(v as i32))
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// Provenance of a tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    MonteCarlo,
    ExactEnumeration,
}

/// Estimate of `P(t(H, G) >= t)` with its normalized rate.
#[derive(Debug, Clone)]
pub struct TailEstimate {
    pub target: f64,
    pub kn: usize,
    pub samples: u64,
    pub p_hat: f64,
    /// Wilson 95% interval (zero-width for exact enumeration).
    pub ci: (f64, f64),
    /// `-log(p_hat) / (kn)^2` when the estimate is positive.
    pub rate: Option<f64>,
    /// Rate implied by the upper confidence limit; a lower bound on the true
    /// rate, available even when no hit was observed.
    pub rate_lower_bound: Option<f64>,
    pub mode: TailMode,
    pub seed: Option<u64>,
}

fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn rate_of(p: f64, kn: usize) -> Option<f64> {
    (p > 0.0).then(|| -p.ln() / (kn as f64 * kn as f64))
}

/// Exact tail probability by enumerating every assignment of the free vertex
/// pairs (those with block probability strictly inside (0,1)); masked pairs
/// are forced. Capacity: at most 21 free pairs.
pub fn exact_tail(w0: &StepGraphon, h: &FiniteGraph, t: f64, kn: usize) -> Result<TailEstimate> {
    let (uniform, k) = equipartition(w0)?;
    if kn == 0 || kn % k != 0 {
        return Err(Error::Domain(format!(
            "kn = {kn} must be a positive multiple of the block count {k}"
        )));
    }
    let n = kn / k;
    let mut g = SampledGraph::empty(kn, k, n, 0);
    let mut free = Vec::new();
    for i in 0..kn {
        for j in (i + 1)..kn {
            let p = uniform.value(g.block_of[i], g.block_of[j]);
            if p == 1.0 {
                g.set_edge(i, j, true);
            } else if p > 0.0 {
                free.push((i, j, p));
            }
        }
    }
    if free.len() > 21 {
        return Err(Error::Capacity {
            what: format!("exact enumeration over {} free pairs", free.len()),
            limit: "21".into(),
        });
    }
    let f = free.len();
    let total: u64 = 1 << f;
    let mut weight: f64 = free.iter().map(|&(_, _, p)| 1.0 - p).product();
    let mut p_hat = 0.0;
    let mut prev_gray: u64 = 0;
    for step in 0..total {
        if step > 0 {
            let gray = step ^ (step >> 1);
            let flip = (gray ^ prev_gray).trailing_zeros() as usize;
            let (i, j, p) = free[flip];
            let now_present = gray >> flip & 1 == 1;
            g.set_edge(i, j, now_present);
            weight *= if now_present {
                p / (1.0 - p)
            } else {
                (1.0 - p) / p
            };
            prev_gray = gray;
            if step % 4096 == 0 {
                // Resync the multiplicative weight drift.
                weight = free
                    .iter()
                    .enumerate()
                    .map(|(idx, &(_, _, p))| if gray >> idx & 1 == 1 { p } else { 1.0 - p })
                    .product();
            }
        }
        if empirical_density(h, &g)? >= t - 1e-12 {
            p_hat += weight;
        }
    }
    let p_hat = p_hat.clamp(0.0, 1.0);
    Ok(TailEstimate {
        target: t,
        kn,
        samples: total,
        p_hat,
        ci: (p_hat, p_hat),
        rate: rate_of(p_hat, kn),
        rate_lower_bound: rate_of(p_hat, kn),
        mode: TailMode::ExactEnumeration,
        seed: None,
    })
}

/// Worker count: `GRAPHON_LDP_THREADS` when set, otherwise the available
/// parallelism.
pub fn worker_count() -> usize {
    std::env::var("GRAPHON_LDP_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .min(64)
}

fn parallel_map_reduce<T: Send, F: Fn(u64) -> T + Sync>(
    samples: u64,
    f: F,
) -> Vec<T> {
    let workers = worker_count().min(samples.max(1) as usize);
    if workers <= 1 {
        return (0..samples).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..samples).map(|_| None).collect();
    let chunk = samples.div_ceil(workers as u64);
    std::thread::scope(|scope| {
        for (w, slot) in out.chunks_mut(chunk as usize).enumerate() {
            let f = &f;
            scope.spawn(move || {
                let base = w as u64 * chunk;
                for (off, cell) in slot.iter_mut().enumerate() {
                    *cell = Some(f(base + off as u64));
                }
            });
        }
    });
    out.into_iter().map(|c| c.unwrap()).collect()
}

/// Monte Carlo tail probability with a Wilson interval. Sample `s` draws its
/// graph from substream `s` of the seed, so the result is identical for any
/// worker count.
pub fn tail_estimate(
    w0: &StepGraphon,
    h: &FiniteGraph,
    t: f64,
    kn: usize,
    samples: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if samples < 1000 {
        return Err(Error::Domain(format!(
            "at least 1000 samples required, got {samples}"
        )));
    }
    let (uniform, k) = equipartition(w0)?;
    if kn == 0 || kn % k != 0 {
        return Err(Error::Domain(format!(
            "kn = {kn} must be a positive multiple of the block count {k}"
        )));
    }
    let n = kn / k;
    // Capacity depends only on (kn, H); fail up front rather than inside
    // the sampling loop.
    empirical_density(h, &sample_into(&uniform, k, n, seed, 0))?;
    let hits: Vec<bool> = parallel_map_reduce(samples, |s| {
        let g = sample_into(&uniform, k, n, seed, s);
        match empirical_density(h, &g) {
            Ok(d) => d >= t - 1e-12,
            Err(_) => false,
        }
    });
    let hit_count = hits.iter().filter(|&&b| b).count() as u64;
    let p_hat = hit_count as f64 / samples as f64;
    let ci = wilson_interval(hit_count, samples);
    Ok(TailEstimate {
        target: t,
        kn,
        samples,
        p_hat,
        ci,
        rate: rate_of(p_hat, kn),
        rate_lower_bound: rate_of(ci.1, kn),
        mode: TailMode::MonteCarlo,
        seed: Some(seed),
    })
}

/// Conditional-structure statistics: distribution of the cut-metric upper
/// bound between the block-coarsened empirical graphon of accepted samples
/// and the reference optimizer.
#[derive(Debug, Clone)]
pub struct ConcentrationSummary {
    pub kn: usize,
    pub samples: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub mean: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub seed: u64,
}

pub fn conditional_concentration(
    w0: &StepGraphon,
    h: &FiniteGraph,
    t: f64,
    kn: usize,
    samples: u64,
    optimizer: &StepGraphon,
    seed: u64,
) -> Result<ConcentrationSummary> {
    let (uniform, k) = equipartition(w0)?;
    if kn == 0 || kn % k != 0 {
        return Err(Error::Domain(format!(
            "kn = {kn} must be a positive multiple of the block count {k}"
        )));
    }
    let n = kn / k;
    let widths = w0.widths().to_vec();
    empirical_density(h, &sample_into(&uniform, k, n, seed, 0))?;
    let distances: Vec<Option<f64>> = parallel_map_reduce(samples, |s| {
        let g = sample_into(&uniform, k, n, seed, s);
        let dens = empirical_density(h, &g).ok()?;
        if dens < t - 1e-12 {
            return None;
        }
        let emp = g.empirical_graphon();
        let coarse = d_average(&emp, &widths, 1).ok()?;
        Some(delta_cut_bounds(&coarse, optimizer).upper)
    });
    let mut accepted: Vec<f64> = distances.into_iter().flatten().collect();
    let count = accepted.len() as u64;
    let rate = count as f64 / samples as f64;
    if count < 20 {
        return Err(Error::InsufficientConditioning {
            accepted: count as usize,
            samples: samples as usize,
            rate,
        });
    }
    accepted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| {
        let idx = ((accepted.len() - 1) as f64 * q).round() as usize;
        accepted[idx]
    };
    Ok(ConcentrationSummary {
        kn,
        samples,
        accepted: count,
        acceptance_rate: rate,
        mean: accepted.iter().sum::<f64>() / accepted.len() as f64,
        q10: quantile(0.1),
        median: quantile(0.5),
        q90: quantile(0.9),
        seed,
    })
}
