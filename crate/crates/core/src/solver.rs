//! The finite-dimensional symmetric variational problem: minimal relative
//! entropy over block graphons meeting a density (or operator-norm) target,
//! with phase classification and rate brackets.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::FiniteGraph;
use crate::graphon::{
    BlockTag, OmegaMask, RelevantSet, StepGraphon, f_max_graphon, hom_density, relevant_blocks,
};
use crate::psi::{analyze_psi, bernoulli_kl, minorant_value, on_minorant_profile};
use crate::rng::CounterRng;
use crate::witness::{self, Witness};

/// What the tail event constrains.
#[derive(Debug, Clone)]
pub enum ConstraintKind {
    HomDensity(FiniteGraph),
    OperatorNorm,
}

/// How much of the rate value is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    SymmetricCertified,
    BrokenCertified,
    BracketOnly,
}

/// Solution record of the symmetric variational problem.
#[derive(Debug, Clone)]
pub struct VariationalSolution {
    pub optimizer: StepGraphon,
    pub objective: f64,
    pub target: f64,
    pub t_max: f64,
    pub constraint: ConstraintKind,
    /// `t(optimizer) - target`.
    pub residual: f64,
    pub regime: Regime,
    /// Bracket `(lower, upper)` on the optimal rate.
    pub bracket: (f64, f64),
    /// Max-norm disagreement between restarts (uniqueness diagnostic).
    pub restart_spread: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            restarts: 20,
            seed: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Density polynomial on block values
// ---------------------------------------------------------------------------

/// `t(H, .)` on a fixed block structure, expanded as a polynomial in the
/// upper-triangle block values. Built once per solve from the labeling sum.
struct BlockPoly {
    /// (coefficient, sparse exponent vector over pair indices)
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

fn pair_index(i: usize, j: usize, m: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * m + b - a * (a + 1) / 2
}

impl BlockPoly {
    fn build(h: &FiniteGraph, widths: &[f64]) -> Result<Self> {
        let m = widths.len();
        let v = h.vertex_count();
        let count = (m as u128).checked_pow(v as u32).unwrap_or(u128::MAX);
        if count > 100_000_000 {
            return Err(Error::Capacity {
                what: format!("density polynomial over {m}^{v} labelings"),
                limit: "100000000".into(),
            });
        }
        let n_pairs = m * (m + 1) / 2;
        let mut map: HashMap<Vec<(usize, u32)>, f64> = HashMap::new();
        let mut label = vec![0usize; v];
        loop {
            let mut coeff = 1.0;
            for &idx in &label {
                coeff *= widths[idx];
            }
            if coeff > 0.0 {
                let mut exps = vec![0u32; n_pairs];
                for &(a, b) in h.edges() {
                    exps[pair_index(label[a], label[b], m)] += 1;
                }
                let key: Vec<(usize, u32)> = exps
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(k, &e)| (k, e))
                    .collect();
                *map.entry(key).or_insert(0.0) += coeff;
            }
            let mut pos = 0;
            loop {
                if pos == v {
                    let terms = map.into_iter().map(|(k, c)| (c, k)).collect();
                    return Ok(BlockPoly { terms });
                }
                label[pos] += 1;
                if label[pos] < m {
                    break;
                }
                label[pos] = 0;
                pos += 1;
            }
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, exps) in &self.terms {
            let mut t = *c;
            for &(k, e) in exps {
                t *= x[k].powi(e as i32);
                if t == 0.0 {
                    break;
                }
            }
            total += t;
        }
        total
    }

    /// Value and gradient restricted to `vars`. Decision variables are
    /// bounded below by their base probabilities, so dividing the term value
    /// by `x[var]` is always well defined.
    fn eval_grad(&self, x: &[f64], vars: &[usize], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let mut total = 0.0;
        for (c, exps) in &self.terms {
            let mut t = *c;
            for &(k, e) in exps {
                t *= x[k].powi(e as i32);
            }
            total += t;
            if t == 0.0 {
                continue;
            }
            for (vi, &var) in vars.iter().enumerate() {
                if let Some(&(_, e)) = exps.iter().find(|&&(k, _)| k == var) {
                    grad[vi] += e as f64 * t / x[var];
                }
            }
        }
        total
    }

    /// Hessian restricted to `vars`, row-major into `hess`.
    fn eval_hess(&self, x: &[f64], vars: &[usize], hess: &mut [f64]) {
        let n = vars.len();
        hess.fill(0.0);
        for (c, exps) in &self.terms {
            for (ai, &va) in vars.iter().enumerate() {
                let ea = match exps.iter().find(|&&(k, _)| k == va) {
                    Some(&(_, e)) => e,
                    None => continue,
                };
                for (bi, &vb) in vars.iter().enumerate().skip(ai) {
                    let eb = match exps.iter().find(|&&(k, _)| k == vb) {
                        Some(&(_, e)) => e,
                        None => continue,
                    };
                    let factor = if va == vb {
                        if ea < 2 {
                            continue;
                        }
                        (ea * (ea - 1)) as f64
                    } else {
                        (ea * eb) as f64
                    };
                    let mut t = *c * factor;
                    for &(k, ek) in exps {
                        let mut pw = ek as i32;
                        if k == va {
                            pw -= 1;
                        }
                        if k == vb {
                            pw -= 1;
                        }
                        t *= x[k].powi(pw);
                    }
                    hess[ai * n + bi] += t;
                    if ai != bi {
                        hess[bi * n + ai] += t;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Symmetric minimization
// ---------------------------------------------------------------------------

struct BlockProblem {
    poly: BlockPoly,
    values: Vec<f64>,
    vars: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    wobj: Vec<f64>,
    pbase: Vec<f64>,
    target: f64,
}

impl BlockProblem {
    fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.wobj.iter().zip(self.pbase.iter()))
            .map(|(&xi, (&w, &p))| w * bernoulli_kl(p, xi).unwrap_or(f64::INFINITY))
            .sum()
    }

    fn with_x(&self, x: &[f64]) -> Vec<f64> {
        let mut vals = self.values.clone();
        for (vi, &k) in self.vars.iter().enumerate() {
            vals[k] = x[vi];
        }
        vals
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.poly.eval(&self.with_x(x))
    }

    fn density_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.poly.eval_grad(&self.with_x(x), &self.vars, grad)
    }

    fn clamp(&self, x: &mut [f64]) {
        for (vi, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lo[vi], self.hi[vi]);
        }
    }
}

/// Worst KKT residual with the constraint measured relative to the target.
fn kkt_worst(prob: &BlockProblem, x: &[f64], lambda: f64, tgrad: &mut [f64]) -> f64 {
    let scale = prob.target.abs().max(1e-9);
    let t_val = prob.density_grad(x, tgrad);
    let mut worst = (t_val - prob.target).abs() / scale;
    for vi in 0..prob.vars.len() {
        let dh =
            (x[vi] / prob.pbase[vi]).ln() - ((1.0 - x[vi]) / (1.0 - prob.pbase[vi])).ln();
        let g = prob.wobj[vi] * dh - lambda * tgrad[vi];
        // Box-aware stationarity: gradients pushing into an active bound
        // do not count.
        let active_lo = x[vi] <= prob.lo[vi] + 1e-12 && g > 0.0;
        let active_hi = x[vi] >= prob.hi[vi] - 1e-12 && g < 0.0;
        if !(active_lo || active_hi) {
            worst = worst.max(g.abs());
        }
    }
    worst
}

#[inline]
fn logistic(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

/// Fixed point of the stationarity map at multiplier `lambda`:
/// `x_k = logit^-1( logit(p_k) + lambda * dt_k(x) / w_k )`.
///
/// The map is monotone in `x` and in `lambda`; iterating from the base point
/// walks up to the least fixed point. Returns the density at the fixed point.
fn stationary_point(prob: &BlockProblem, lambda: f64, x: &mut [f64], tgrad: &mut [f64]) -> f64 {
    let n = prob.vars.len();
    let mut t_val = prob.density_grad(x, tgrad);
    for _sweep in 0..5000 {
        let mut delta = 0.0f64;
        for vi in 0..n {
            let logit_p = (prob.pbase[vi] / (1.0 - prob.pbase[vi])).ln();
            let y = logit_p + lambda * tgrad[vi] / prob.wobj[vi];
            let nx = logistic(y).clamp(prob.lo[vi], prob.hi[vi]);
            delta = delta.max((nx - x[vi]).abs());
            x[vi] = nx;
        }
        t_val = prob.density_grad(x, tgrad);
        if delta < 1e-15 {
            break;
        }
    }
    t_val
}

/// Solves the constrained problem through its dual: the density at the
/// stationary point is driven to the target by bisection on the multiplier,
/// then Newton polishes the KKT system. The start point seeds the first
/// fixed-point iteration; later evaluations are warm-started.
fn solve_from(prob: &BlockProblem, x0: Vec<f64>) -> (Vec<f64>, f64) {
    let n = prob.vars.len();
    let mut x = x0;
    prob.clamp(&mut x);
    let mut tgrad = vec![0.0; n];

    // Bracket the multiplier: at lambda = 0 the fixed point is the base
    // graphon (density below target); grow until the target is covered.
    let mut lambda_hi = 1.0f64;
    let mut t_hi = stationary_point(prob, lambda_hi, &mut x, &mut tgrad);
    let mut grow = 0;
    while t_hi < prob.target && grow < 200 {
        lambda_hi *= 2.0;
        t_hi = stationary_point(prob, lambda_hi, &mut x, &mut tgrad);
        grow += 1;
    }
    if t_hi < prob.target {
        // Target only reachable at the saturated corner.
        x.copy_from_slice(&prob.hi);
    } else {
        let mut lo = 0.0f64;
        let mut hi = lambda_hi;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let t_mid = stationary_point(prob, mid, &mut x, &mut tgrad);
            if t_mid < prob.target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        stationary_point(prob, hi, &mut x, &mut tgrad);
    }

    // Multiplier estimate by least squares on the stationarity equations.
    prob.density_grad(&x, &mut tgrad);
    let mut num = 0.0;
    let mut den = 0.0;
    for vi in 0..n {
        let dh =
            (x[vi] / prob.pbase[vi]).ln() - ((1.0 - x[vi]) / (1.0 - prob.pbase[vi])).ln();
        num += prob.wobj[vi] * dh * tgrad[vi];
        den += tgrad[vi] * tgrad[vi];
    }
    let mut lambda = if den > 0.0 { num / den } else { 0.0 };
    newton_polish(prob, &mut x, &mut lambda);
    if kkt_worst(prob, &x, lambda, &mut tgrad) > 1e-9 {
        // Retry on the provably monotone path: cold fixed-point iterations
        // from the base point at every bisection step.
        x.copy_from_slice(&prob.lo);
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut buf = prob.lo.clone();
        while stationary_point(prob, hi, &mut buf, &mut tgrad) < prob.target && hi < 1e60 {
            hi *= 2.0;
            buf.copy_from_slice(&prob.lo);
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            buf.copy_from_slice(&prob.lo);
            if stationary_point(prob, mid, &mut buf, &mut tgrad) < prob.target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        buf.copy_from_slice(&prob.lo);
        stationary_point(prob, hi, &mut buf, &mut tgrad);
        x.copy_from_slice(&buf);
        lambda = hi;
        newton_polish(prob, &mut x, &mut lambda);
    }
    (x, lambda)
}

/// Newton iteration on the KKT equality system over the interior variables.
///
/// Works in constraint-scaled coordinates (`c / target`, `lambda * target`)
/// so the merit balances feasibility against stationarity even when raw
/// densities are tiny.
fn newton_polish(prob: &BlockProblem, x: &mut [f64], lambda: &mut f64) {
    let n = prob.vars.len();
    let s = prob.target.abs().max(1e-9);
    let mut tgrad = vec![0.0; n];
    let mut thess = vec![0.0; n * n];
    // Scaled residual vector at (x, lambda-hat); lambda-hat = lambda * s.
    let residual = |x: &[f64], lhat: f64, tg: &mut Vec<f64>| -> (Vec<f64>, f64) {
        let t_val = prob.density_grad(x, tg);
        let mut res = vec![0.0; n + 1];
        let mut l2 = 0.0;
        for vi in 0..n {
            let dh = (x[vi] / prob.pbase[vi]).ln()
                - ((1.0 - x[vi]) / (1.0 - prob.pbase[vi])).ln();
            res[vi] = prob.wobj[vi] * dh - lhat * tg[vi] / s;
            l2 += res[vi] * res[vi];
        }
        res[n] = (t_val - prob.target) / s;
        l2 += res[n] * res[n];
        (res, l2)
    };
    let mut lhat = *lambda * s;
    for _ in 0..60 {
        let (res, l2) = residual(x, lhat, &mut tgrad);
        let worst = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if worst < 1e-12 {
            break;
        }
        prob.poly.eval_hess(&prob.with_x(x), &prob.vars, &mut thess);
        // Scaled KKT matrix [[H, -g/s], [g^T/s, 0]].
        let dim = n + 1;
        let mut mat = vec![0.0; dim * dim];
        for a in 0..n {
            for b in 0..n {
                mat[a * dim + b] = -lhat * thess[a * n + b] / s;
            }
            let ddh = 1.0 / (x[a] * (1.0 - x[a]));
            mat[a * dim + a] += prob.wobj[a] * ddh;
            mat[a * dim + n] = -tgrad[a] / s;
            mat[n * dim + a] = tgrad[a] / s;
        }
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let Some(delta) = solve_dense(&mut mat, &rhs, dim) else {
            break;
        };
        // Damped update, clamped inside the box; the scaled squared residual
        // is the merit (the Newton direction descends it).
        let mut step = 1.0f64;
        loop {
            let mut xc: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(vi, &xi)| {
                    (xi + step * delta[vi]).clamp(prob.lo[vi] + 1e-15, prob.hi[vi] - 1e-15)
                })
                .collect();
            let lc = lhat + step * delta[n];
            let (_, new_l2) = residual(&xc, lc, &mut tgrad);
            if new_l2 <= l2 * (1.0 - 1e-4 * step) {
                x.swap_with_slice(&mut xc);
                lhat = lc;
                break;
            }
            if step < 1e-8 {
                // No productive step; keep the current iterate.
                *lambda = lhat / s;
                return;
            }
            step *= 0.5;
        }
    }
    *lambda = lhat / s;
}

fn solve_dense(mat: &mut [f64], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut aug: Vec<f64> = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            aug[i * (n + 1) + j] = mat[i * n + j];
        }
        aug[i * (n + 1) + n] = rhs[i];
    }
    for col in 0..n {
        let mut piv = col;
        for row in (col + 1)..n {
            if aug[row * (n + 1) + col].abs() > aug[piv * (n + 1) + col].abs() {
                piv = row;
            }
        }
        if aug[piv * (n + 1) + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..=n {
                aug.swap(col * (n + 1) + k, piv * (n + 1) + k);
            }
        }
        let d = aug[col * (n + 1) + col];
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = aug[row * (n + 1) + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..=n {
                aug[row * (n + 1) + k] -= f * aug[col * (n + 1) + k];
            }
        }
    }
    Some(
        (0..n)
            .map(|i| aug[i * (n + 1) + n] / aug[i * (n + 1) + i])
            .collect(),
    )
}

/// Recognized base-graphon families that admit exact certification.
enum BaseFamily {
    ErdosRenyi { p: f64 },
    Bipartite { p: f64, gamma: f64 },
    Other,
}

fn classify_base(w0: &StepGraphon) -> BaseFamily {
    let c = w0.canonical();
    if c.block_count() == 1 {
        let p = c.value(0, 0);
        if p > 0.0 && p < 1.0 {
            return BaseFamily::ErdosRenyi { p };
        }
    }
    if c.block_count() == 2 {
        let p = c.value(0, 1);
        if c.value(0, 0) == 0.0 && c.value(1, 1) == 0.0 && p > 0.0 && p < 1.0 {
            let gamma = c.widths()[0].to_f64().unwrap();
            return BaseFamily::Bipartite { p, gamma };
        }
    }
    BaseFamily::Other
}

/// Exact rate bracket from the convex-minorant machinery when the base is an
/// Erdos-Renyi or bipartite graphon and the pattern allows it; used to tag
/// certified regimes.
fn certify(
    w0: &StepGraphon,
    h: &FiniteGraph,
    t: f64,
    objective: f64,
) -> Result<(Regime, (f64, f64))> {
    let Some(d) = h.regularity() else {
        return Ok((Regime::BracketOnly, (0.0, objective)));
    };
    if d == 0 {
        return Ok((Regime::BracketOnly, (0.0, objective)));
    }
    let e = h.edge_count() as f64;
    match classify_base(w0) {
        BaseFamily::ErdosRenyi { p } => {
            let r = t.powf(1.0 / e);
            if !(p..=1.0).contains(&r) {
                return Ok((Regime::BracketOnly, (0.0, objective)));
            }
            let profile = analyze_psi(p, d as u32)?;
            if on_minorant_profile(&profile, r) {
                Ok((Regime::SymmetricCertified, (objective, objective)))
            } else {
                let lower = 0.5 * minorant_value(&profile, r.powi(d as i32))?;
                Ok((Regime::BracketOnly, (lower, objective)))
            }
        }
        BaseFamily::Bipartite { p, gamma } => {
            if !h.is_bipartite() {
                return Ok((Regime::BracketOnly, (0.0, objective)));
            }
            let m_half = h.vertex_count() as f64 / 2.0;
            let c = h.component_count() as f64;
            let scale = 2.0f64.powf(c) * (gamma * (1.0 - gamma)).powf(m_half);
            let r = (t / scale).powf(1.0 / (d as f64 * m_half));
            if !(p..=1.0 + 1e-12).contains(&r) {
                return Ok((Regime::BracketOnly, (0.0, objective)));
            }
            let r = r.min(1.0);
            let profile = analyze_psi(p, d as u32)?;
            let lower = gamma * (1.0 - gamma) * minorant_value(&profile, r.powi(d as i32))?;
            if on_minorant_profile(&profile, r) {
                Ok((Regime::SymmetricCertified, (objective, objective)))
            } else {
                Ok((Regime::BracketOnly, (lower.min(objective), objective)))
            }
        }
        BaseFamily::Other => Ok((Regime::BracketOnly, (0.0, objective))),
    }
}

/// Minimizes `I_{W0}` over block graphons with `t(H, g) = t`, `g = W0` on
/// masked and irrelevant blocks and `W0 <= g <= 1` on the relevant free
/// blocks. Augmented Lagrangian with projected-gradient inner steps, Newton
/// polish on the KKT manifold, and restart agreement as the uniqueness
/// certificate.
pub fn symmetric_min(
    w0: &StepGraphon,
    h: &FiniteGraph,
    t: f64,
    opts: SolveOptions,
) -> Result<VariationalSolution> {
    h.require_regular()?;
    let w0 = w0.canonical();
    let m = w0.block_count();
    let t_w0 = hom_density(h, &w0)?;
    let (fmax, t_max) = f_max_graphon(h, &w0)?;
    let constraint = ConstraintKind::HomDensity(h.clone());

    if t > t_max + 1e-12 {
        return Err(Error::Infeasible { t, t_max });
    }
    if t <= t_w0 + 1e-12 {
        return Ok(VariationalSolution {
            optimizer: w0.clone(),
            objective: 0.0,
            target: t,
            t_max,
            constraint,
            residual: t_w0 - t,
            regime: Regime::SymmetricCertified,
            bracket: (0.0, 0.0),
            restart_spread: 0.0,
        });
    }
    if (t - t_max).abs() <= 1e-12 {
        let objective = crate::graphon::relative_entropy(&w0, &fmax);
        return Ok(VariationalSolution {
            optimizer: fmax,
            objective,
            target: t,
            t_max,
            constraint,
            residual: t_max - t,
            regime: Regime::SymmetricCertified,
            bracket: (objective, objective),
            restart_spread: 0.0,
        });
    }

    let mask = OmegaMask::from_graphon(&w0);
    let relevant: RelevantSet = relevant_blocks(h, &w0)?;
    let widths = w0.widths_f64();
    let poly = BlockPoly::build(h, &widths)?;

    let n_pairs = m * (m + 1) / 2;
    let mut values = vec![0.0; n_pairs];
    for i in 0..m {
        for j in i..m {
            values[pair_index(i, j, m)] = w0.value(i, j);
        }
    }
    let mut vars = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut wobj = Vec::new();
    let mut pbase = Vec::new();
    for i in 0..m {
        for j in i..m {
            if mask.tag(i, j) == BlockTag::Free && relevant.contains(i, j) {
                vars.push(pair_index(i, j, m));
                let p = w0.value(i, j);
                lo.push(p);
                // Keep iterates strictly below 1: the entropy gradient blows
                // up at the boundary. Exact saturation only happens at t_max,
                // which is handled before the solve.
                hi.push(1.0 - 1e-12);
                pbase.push(p);
                wobj.push(if i == j {
                    0.5 * widths[i] * widths[i]
                } else {
                    widths[i] * widths[j]
                });
            }
        }
    }
    let prob = BlockProblem {
        poly,
        values,
        vars,
        lo,
        hi,
        wobj,
        pbase,
        target: t,
    };
    let n = prob.vars.len();
    if n == 0 {
        // Fully frozen problem; feasibility was settled by the t_max branch.
        return Err(Error::Infeasible { t, t_max });
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut solutions = Vec::with_capacity(opts.restarts);
    for restart in 0..opts.restarts.max(1) {
        let mut rng = CounterRng::substream(opts.seed, restart as u64);
        let x0: Vec<f64> = (0..n)
            .map(|vi| {
                let u = if restart == 0 { 0.5 } else { rng.uniform() };
                prob.lo[vi] + u * (prob.hi[vi] - prob.lo[vi])
            })
            .collect();
        let (x, _lambda) = solve_from(&prob, x0);
        let c = prob.density(&x) - t;
        if c.abs() > 1e-8 {
            return Err(Error::NonConvergence {
                what: format!("restart {restart} of the symmetric solve (|residual| = {:.2e})", c.abs()),
                iterations: 300,
            });
        }
        let obj = prob.objective(&x);
        let better = match &best {
            None => true,
            Some((bobj, bx)) => obj < *bobj - 1e-15 || (obj <= *bobj + 1e-15 && x < *bx),
        };
        if better {
            best = Some((obj, x.clone()));
        }
        solutions.push(x);
    }
    let (objective, xbest) = best.unwrap();
    let spread = solutions
        .iter()
        .map(|x| {
            x.iter()
                .zip(xbest.iter())
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let mut optimizer = w0.clone();
    for i in 0..m {
        for j in i..m {
            let k = pair_index(i, j, m);
            if let Some(vi) = prob.vars.iter().position(|&v| v == k) {
                optimizer.set_value(i, j, xbest[vi]);
            }
        }
    }
    let residual = prob.density(&xbest) - t;
    let (mut regime, bracket) = certify(&w0, h, t, objective)?;
    if regime == Regime::SymmetricCertified && spread > 1e-6 {
        regime = Regime::BracketOnly;
    }
    Ok(VariationalSolution {
        optimizer,
        objective,
        target: t,
        t_max,
        constraint,
        residual,
        regime,
        bracket,
        restart_spread: spread,
    })
}

/// The symmetric problem for the operator norm on a bipartite base: within
/// the block class the feasible set is the one-parameter family, so the
/// optimizer is closed-form.
pub fn symmetric_min_opnorm(w0: &StepGraphon, t: f64) -> Result<VariationalSolution> {
    let BaseFamily::Bipartite { p, gamma } = classify_base(w0) else {
        return Err(Error::Domain(
            "operator-norm solve requires a two-block bipartite base graphon".into(),
        ));
    };
    let w0c = w0.canonical();
    let scale = (gamma * (1.0 - gamma)).sqrt();
    let t_max = scale;
    let t_w0 = p * scale;
    if t > t_max + 1e-12 {
        return Err(Error::Infeasible { t, t_max });
    }
    let r = (t / scale).clamp(0.0, 1.0);
    if t <= t_w0 + 1e-12 {
        return Ok(VariationalSolution {
            optimizer: w0c.clone(),
            objective: 0.0,
            target: t,
            t_max,
            constraint: ConstraintKind::OperatorNorm,
            residual: t_w0 - t,
            regime: Regime::SymmetricCertified,
            bracket: (0.0, 0.0),
            restart_spread: 0.0,
        });
    }
    let gamma_rat = w0c.widths()[0].clone();
    let optimizer = StepGraphon::bipartite(gamma_rat, r)?;
    let objective = gamma * (1.0 - gamma) * bernoulli_kl(p, r)?;
    let profile = analyze_psi(p, 2)?;
    let lower = gamma * (1.0 - gamma) * minorant_value(&profile, r * r)?;
    let (regime, bracket) = if on_minorant_profile(&profile, r) {
        (Regime::SymmetricCertified, (objective, objective))
    } else {
        (Regime::BracketOnly, (lower.min(objective), objective))
    };
    Ok(VariationalSolution {
        optimizer,
        objective,
        target: t,
        t_max,
        constraint: ConstraintKind::OperatorNorm,
        residual: r * scale - t,
        regime,
        bracket,
        restart_spread: 0.0,
    })
}

/// Rate bracket with witness search.
#[derive(Debug)]
pub struct PhiBracket {
    pub solution: VariationalSolution,
    pub witness: Option<Witness>,
}

/// Computes the symmetric upper bound, certifies the regime where the theory
/// allows it, and tightens the upper bound with an explicit witness when the
/// symmetric optimizer is beaten.
pub fn phi_bracket(
    w0: &StepGraphon,
    h: &FiniteGraph,
    t: f64,
    opts: SolveOptions,
) -> Result<PhiBracket> {
    let mut solution = symmetric_min(w0, h, t, opts)?;
    if solution.regime == Regime::SymmetricCertified {
        return Ok(PhiBracket {
            solution,
            witness: None,
        });
    }
    let w0c = w0.canonical();
    let witness = find_witness(&w0c, h, t)?;
    if let Some(w) = &witness {
        if w.entropy_witness < solution.objective {
            solution.bracket.1 = w.entropy_witness;
            solution.regime = Regime::BrokenCertified;
        }
    }
    Ok(PhiBracket { solution, witness })
}

fn find_witness(w0c: &StepGraphon, h: &FiniteGraph, t: f64) -> Result<Option<Witness>> {
    if w0c.block_count() != 2 {
        return Ok(None);
    }
    let v00 = w0c.value(0, 0);
    let v01 = w0c.value(0, 1);
    let v11 = w0c.value(1, 1);
    if !(v01 > 0.0 && v01 < 1.0) {
        return Ok(None);
    }
    let gamma = w0c.widths()[0].clone();
    let res = if v00 == 0.0 && v11 == 0.0 {
        // Bipartite: g^eps beats the symmetric solution off the minorant.
        let d = match h.regularity() {
            Some(d) if d >= 1 && h.is_bipartite() => d,
            _ => return Ok(None),
        };
        let gamma_f = gamma.to_f64().unwrap();
        let m_half = h.vertex_count() as f64 / 2.0;
        let scale = 2.0f64.powi(h.component_count() as i32)
            * (gamma_f * (1.0 - gamma_f)).powf(m_half);
        let r = (t / scale).powf(1.0 / (d as f64 * m_half));
        witness::witness_geps(
            v01,
            &gamma,
            &ConstraintKind::HomDensity(h.clone()),
            r,
        )
        .map(Some)
    } else if v00 == 0.0 && v11 == v01 {
        witness::witness_clique(witness::PlantedCase::Independent, &gamma, t, h, v01).map(Some)
    } else if v00 == 1.0 && v11 == v01 {
        witness::witness_clique(witness::PlantedCase::Clique, &gamma, t, h, v01).map(Some)
    } else if v00 == 1.0 && v11 == 0.0 {
        witness::witness_planted_for_target(&gamma, t, h, v01).map(Some)
    } else {
        return Ok(None);
    };
    match res {
        Ok(w) => Ok(w),
        Err(Error::WitnessNotFound(_)) | Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Phase of the bipartite problem at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Symmetric,
    Broken,
}

/// Theorem-level phase classification for bipartite bases: symmetric exactly
/// when `(r^d, h_p(r))` lies on the convex minorant, with `d` the pattern
/// degree for density constraints and 2 for the operator norm.
pub fn bipartite_phase(p: f64, _gamma: f64, kind: &ConstraintKind, r: f64) -> Result<Phase> {
    let d_eff = match kind {
        ConstraintKind::HomDensity(h) => h.require_regular()? as u32,
        ConstraintKind::OperatorNorm => 2,
    };
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
    }
    if !(p..=1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} outside [p, 1]")));
    }
    Ok(if crate::psi::on_minorant(p, d_eff, r)? {
        Phase::Symmetric
    } else {
        Phase::Broken
    })
}

/// One row of the phase diagram.
#[derive(Debug, Clone)]
pub struct PhaseScanRow {
    pub r: f64,
    pub t_target: f64,
    pub on_minorant: bool,
    pub symmetric_entropy: f64,
    pub witness_entropy: Option<f64>,
}

/// Sweeps `r` over a grid, reporting the target value, the phase flag, the
/// symmetric objective and (in the broken phase) the witness entropy.
pub fn phase_scan(
    p: f64,
    gamma: &BigRational,
    kind: &ConstraintKind,
    r_grid: &[f64],
) -> Result<Vec<PhaseScanRow>> {
    let gamma_f = gamma.to_f64().unwrap();
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let on = match kind {
            ConstraintKind::HomDensity(h) => {
                crate::psi::on_minorant(p, h.require_regular()? as u32, r)?
            }
            ConstraintKind::OperatorNorm => crate::psi::on_minorant(p, 2, r)?,
        };
        let t_target = match kind {
            ConstraintKind::HomDensity(h) => {
                hom_density(h, &StepGraphon::bipartite(gamma.clone(), r)?)?
            }
            ConstraintKind::OperatorNorm => r * (gamma_f * (1.0 - gamma_f)).sqrt(),
        };
        let symmetric_entropy = gamma_f * (1.0 - gamma_f) * bernoulli_kl(p, r)?;
        let witness_entropy = if on {
            None
        } else {
            match witness::witness_geps(p, gamma, kind, r) {
                Ok(w) => Some(w.entropy_witness),
                Err(Error::WitnessNotFound(_)) => None,
                Err(e) => return Err(e),
            }
        };
        rows.push(PhaseScanRow {
            r,
            t_target,
            on_minorant: on,
            symmetric_entropy,
            witness_entropy,
        });
    }
    Ok(rows)
}
