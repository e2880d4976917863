//! Step-function graphons: exact block structure, densities, entropies and
//! block masks.
//!
//! Block widths are exact rationals so that refinement never invents phantom
//! blocks; block values are `f64`. Every binary operation first moves both
//! operands onto the merged breakpoint grid.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::FiniteGraph;
use crate::psi::bernoulli_kl;

/// Hard cap on labeling enumerations (`m^v`).
const LABELING_CAP: u128 = 100_000_000;

/// A symmetric step function `[0,1]^2 -> [0,1]` with rational block widths.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGraphon {
    widths: Vec<BigRational>,
    /// Row-major `m x m` symmetric matrix of block values.
    values: Vec<f64>,
}

impl StepGraphon {
    pub fn new(widths: Vec<BigRational>, values: Vec<Vec<f64>>) -> Result<Self> {
        let m = widths.len();
        if values.len() != m {
            return Err(Error::ShapeMismatch {
                rows: values.len(),
                widths: m,
            });
        }
        let mut sum = BigRational::zero();
        for w in &widths {
            if !w.is_positive() {
                return Err(Error::NonPositiveWidth(w.to_string()));
            }
            sum += w;
        }
        if !sum.is_one() {
            return Err(Error::WidthSumNotOne(sum.to_string()));
        }
        let mut flat = vec![0.0; m * m];
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::ShapeMismatch {
                    rows: row.len(),
                    widths: m,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) || v.is_nan() {
                    return Err(Error::ValueOutOfRange { i, j, value: v });
                }
                flat[i * m + j] = v;
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if flat[i * m + j] != flat[j * m + i] {
                    return Err(Error::AsymmetricValues {
                        i,
                        j,
                        a: flat[i * m + j],
                        b: flat[j * m + i],
                    });
                }
            }
        }
        Ok(StepGraphon {
            widths,
            values: flat,
        })
    }

    /// Constant graphon of value `p`.
    pub fn constant(p: f64) -> Result<Self> {
        StepGraphon::new(vec![BigRational::one()], vec![vec![p]])
    }

    /// Uniform `k`-block graphon.
    pub fn uniform(values: Vec<Vec<f64>>) -> Result<Self> {
        let k = values.len().max(1);
        let w = BigRational::new(BigInt::from(1), BigInt::from(k as i64));
        StepGraphon::new(vec![w; k], values)
    }

    /// Two-block graphon with diagonal values `p`, `r` and off-diagonal `q`
    /// on widths `(gamma, 1-gamma)`.
    pub fn two_block(gamma: BigRational, p: f64, q: f64, r: f64) -> Result<Self> {
        let one = BigRational::one();
        if !gamma.is_positive() || gamma >= one {
            return Err(Error::Domain(format!(
                "gamma must be in (0,1), got {gamma}"
            )));
        }
        let rest = &one - &gamma;
        StepGraphon::new(vec![gamma, rest], vec![vec![p, q], vec![q, r]])
    }

    /// Bipartite graphon: zero on both diagonal blocks, `p` across.
    pub fn bipartite(gamma: BigRational, p: f64) -> Result<Self> {
        StepGraphon::two_block(gamma, 0.0, p, 0.0)
    }

    pub fn block_count(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[BigRational] {
        &self.widths
    }

    pub fn widths_f64(&self) -> Vec<f64> {
        self.widths.iter().map(|w| w.to_f64().unwrap()).collect()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.block_count() + j]
    }

    pub fn set_value(&mut self, i: usize, j: usize, v: f64) {
        let m = self.block_count();
        self.values[i * m + j] = v;
        self.values[j * m + i] = v;
    }

    pub fn values_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.block_count();
        (0..m)
            .map(|i| self.values[i * m..(i + 1) * m].to_vec())
            .collect()
    }

    /// Right endpoints of the blocks (the last one is exactly 1).
    pub fn breakpoints(&self) -> Vec<BigRational> {
        let mut acc = BigRational::zero();
        self.widths
            .iter()
            .map(|w| {
                acc += w;
                acc.clone()
            })
            .collect()
    }

    /// Pointwise evaluation; block membership resolved with `f64` cumulative
    /// sums, so exact only away from breakpoints (a null set).
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let find = |t: f64| {
            let mut acc = 0.0;
            for (i, w) in self.widths.iter().enumerate() {
                acc += w.to_f64().unwrap();
                if t <= acc {
                    return i;
                }
            }
            self.block_count() - 1
        };
        self.value(find(x), find(y))
    }

    /// Rebuilds this graphon on a refined breakpoint set. `points` must
    /// contain all of this graphon's breakpoints.
    fn refine_to(&self, points: &[BigRational]) -> Result<Self> {
        let own = self.breakpoints();
        // Every breakpoint of self must reappear in the refinement.
        let mut matched = 0;
        for c in points {
            if matched < own.len() && own[matched] == *c {
                matched += 1;
            }
        }
        if matched < own.len() {
            return Err(Error::IncompatibleCoarsening);
        }
        let mut map = Vec::with_capacity(points.len());
        let mut j = 0;
        for c in points {
            while own[j] < *c {
                j += 1;
            }
            map.push(j);
        }
        let mut widths = Vec::with_capacity(points.len());
        let mut prev = BigRational::zero();
        for c in points {
            widths.push(c - &prev);
            prev = c.clone();
        }
        let m = points.len();
        let mut values = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                values[a * m + b] = self.value(map[a], map[b]);
            }
        }
        Ok(StepGraphon { widths, values })
    }

    /// Merges adjacent blocks with identical rows; the function on the square
    /// is unchanged.
    pub fn canonical(&self) -> Self {
        let mut g = self.clone();
        'again: loop {
            let m = g.block_count();
            for i in 0..m.saturating_sub(1) {
                let same = (0..m).all(|k| g.value(i, k) == g.value(i + 1, k));
                if same {
                    let mut widths = g.widths.clone();
                    let w = widths.remove(i + 1);
                    widths[i] += w;
                    let mut values = Vec::with_capacity(m - 1);
                    for a in 0..m {
                        if a == i + 1 {
                            continue;
                        }
                        let mut row = Vec::with_capacity(m - 1);
                        for b in 0..m {
                            if b == i + 1 {
                                continue;
                            }
                            row.push(g.value(a, b));
                        }
                        values.push(row);
                    }
                    g = StepGraphon::new(widths, values).expect("merge keeps invariants");
                    continue 'again;
                }
            }
            return g;
        }
    }

    /// `sum gamma_i gamma_j v_ij^d` — the d-norm of the graphon raised to d.
    pub fn lp_norm_pow(&self, d: u32) -> f64 {
        let w = self.widths_f64();
        let m = self.block_count();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += w[i] * w[j] * self.value(i, j).powi(d as i32);
            }
        }
        s
    }

    /// Edge density `t(E, f)`.
    pub fn one_norm(&self) -> f64 {
        self.lp_norm_pow(1)
    }

    pub fn two_norm(&self) -> f64 {
        self.lp_norm_pow(2).sqrt()
    }
}

/// Moves `f` and `g` onto their merged breakpoint grid; both returned
/// graphons share widths and equal the originals as functions.
pub fn common_refinement(f: &StepGraphon, g: &StepGraphon) -> (StepGraphon, StepGraphon) {
    let mut points: BTreeSet<BigRational> = f.breakpoints().into_iter().collect();
    points.extend(g.breakpoints());
    let points: Vec<BigRational> = points.into_iter().collect();
    let rf = f.refine_to(&points).expect("merged grid refines f");
    let rg = g.refine_to(&points).expect("merged grid refines g");
    (rf, rg)
}

/// Least common multiple of the breakpoint denominators, when it fits u64.
pub fn denominator_lcm(f: &StepGraphon) -> Option<u64> {
    use num_integer::Integer;
    let mut l = BigInt::from(1);
    for bp in f.breakpoints() {
        l = l.lcm(bp.denom());
    }
    l.to_u64()
}

/// Refines onto `l` equal blocks; fails unless every breakpoint of `f` is a
/// multiple of `1/l`.
pub fn refine_to_uniform(f: &StepGraphon, l: u64) -> Result<StepGraphon> {
    if l == 0 {
        return Err(Error::Domain("equipartition size must be positive".into()));
    }
    let points: Vec<BigRational> = (1..=l)
        .map(|k| BigRational::new(BigInt::from(k), BigInt::from(l)))
        .collect();
    f.refine_to(&points)
}

fn labeling_count(m: usize, v: usize) -> Result<u128> {
    let mut n: u128 = 1;
    for _ in 0..v {
        n = n.saturating_mul(m as u128);
        if n > LABELING_CAP {
            return Err(Error::Capacity {
                what: format!("labeling enumeration {m}^{v}"),
                limit: LABELING_CAP.to_string(),
            });
        }
    }
    Ok(n)
}

/// Homomorphism density `t(H, f)` via the interval-labeling sum.
pub fn hom_density(h: &FiniteGraph, f: &StepGraphon) -> Result<f64> {
    let m = f.block_count();
    let v = h.vertex_count();
    labeling_count(m, v)?;
    let w = f.widths_f64();
    let mut total = 0.0;
    let mut label = vec![0usize; v];
    loop {
        let mut term = 1.0;
        for &idx in &label {
            term *= w[idx];
        }
        if term > 0.0 {
            for &(a, b) in h.edges() {
                term *= f.value(label[a], label[b]);
                if term == 0.0 {
                    break;
                }
            }
            total += term;
        }
        // next labeling
        let mut pos = 0;
        loop {
            if pos == v {
                return Ok(total);
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

/// Interval-labeled homomorphism density `t(H, f, Y)`.
pub fn labeled_density(h: &FiniteGraph, f: &StepGraphon, labeling: &[usize]) -> Result<f64> {
    let v = h.vertex_count();
    if labeling.len() != v {
        return Err(Error::LabelingLength {
            got: labeling.len(),
            expected: v,
        });
    }
    let m = f.block_count();
    if let Some(&bad) = labeling.iter().find(|&&y| y >= m) {
        return Err(Error::InvalidLabeling {
            index: bad,
            blocks: m,
        });
    }
    let w = f.widths_f64();
    let mut term = 1.0;
    for &idx in labeling {
        term *= w[idx];
    }
    for &(a, b) in h.edges() {
        term *= f.value(labeling[a], labeling[b]);
    }
    Ok(term)
}

/// Cancellation-free density difference `t(H, f) - t(H, g)`.
///
/// Both graphons are refined to the common grid and the difference is taken
/// labeling by labeling, so labelings on which the two agree contribute an
/// exact zero. Returns `(gap, error_bound)` where the bound covers the
/// floating-point rounding of the nonzero terms.
pub fn hom_density_gap(h: &FiniteGraph, f: &StepGraphon, g: &StepGraphon) -> Result<(f64, f64)> {
    let (rf, rg) = common_refinement(f, g);
    let m = rf.block_count();
    let v = h.vertex_count();
    labeling_count(m, v)?;
    let w = rf.widths_f64();
    let ops = (h.edge_count() + v + 2) as f64;
    let mut gap = 0.0;
    let mut abs_mass = 0.0;
    let mut label = vec![0usize; v];
    loop {
        let mut base = 1.0;
        for &idx in &label {
            base *= w[idx];
        }
        if base > 0.0 {
            let mut pf = base;
            let mut pg = base;
            for &(a, b) in h.edges() {
                pf *= rf.value(label[a], label[b]);
                pg *= rg.value(label[a], label[b]);
            }
            let diff = pf - pg;
            if diff != 0.0 {
                gap += diff;
                abs_mass += pf.abs() + pg.abs();
            }
        }
        let mut pos = 0;
        loop {
            if pos == v {
                let err = abs_mass * ops * f64::EPSILON;
                return Ok((gap, err));
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

/// Block tags induced by a base graphon's zero/one structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockTag {
    Zero,
    One,
    Free,
}

/// The zero/one mask of a base graphon.
#[derive(Debug, Clone)]
pub struct OmegaMask {
    m: usize,
    tags: Vec<BlockTag>,
}

impl OmegaMask {
    pub fn from_graphon(w0: &StepGraphon) -> Self {
        let m = w0.block_count();
        let tags = (0..m * m)
            .map(|k| {
                let v = w0.values[k];
                if v == 0.0 {
                    BlockTag::Zero
                } else if v == 1.0 {
                    BlockTag::One
                } else {
                    BlockTag::Free
                }
            })
            .collect();
        OmegaMask { m, tags }
    }

    pub fn tag(&self, i: usize, j: usize) -> BlockTag {
        self.tags[i * self.m + j]
    }

    pub fn block_count(&self) -> usize {
        self.m
    }

    /// Total measure of the One blocks.
    pub fn one_measure(&self, widths: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                if self.tag(i, j) == BlockTag::One {
                    s += widths[i] * widths[j];
                }
            }
        }
        s
    }

    /// Total measure of the Free blocks.
    pub fn free_measure(&self, widths: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                if self.tag(i, j) == BlockTag::Free {
                    s += widths[i] * widths[j];
                }
            }
        }
        s
    }
}

/// The set of relevant block index pairs, closed under symmetry.
#[derive(Debug, Clone, Default)]
pub struct RelevantSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl RelevantSet {
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.pairs.insert((a, b));
        self.pairs.insert((b, a));
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.pairs.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Upper-triangle representatives `(a, b)` with `a <= b`.
    pub fn upper_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().copied().filter(|&(a, b)| a <= b).collect()
    }
}

/// Blocks that some positive-probability copy of `H` actually uses: a block
/// is relevant when a labeling putting every edge of `H` on a strictly
/// positive block of `w0` places an edge on it. Enumerates `m^v` labelings.
pub fn relevant_blocks(h: &FiniteGraph, w0: &StepGraphon) -> Result<RelevantSet> {
    let m = w0.block_count();
    let v = h.vertex_count();
    labeling_count(m, v)?;
    let mut set = RelevantSet::default();
    if h.edge_count() == 0 {
        return Ok(set);
    }
    let mut label = vec![0usize; v];
    loop {
        let positive = h
            .edges()
            .iter()
            .all(|&(a, b)| w0.value(label[a], label[b]) > 0.0);
        if positive {
            for &(a, b) in h.edges() {
                set.insert(label[a], label[b]);
            }
        }
        let mut pos = 0;
        loop {
            if pos == v {
                return Ok(set);
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

/// The maximizer of `t(H, .)` over the support class: 1 on relevant blocks,
/// `w0` elsewhere. Returns the graphon together with `t_max`.
pub fn f_max_graphon(h: &FiniteGraph, w0: &StepGraphon) -> Result<(StepGraphon, f64)> {
    let relevant = relevant_blocks(h, w0)?;
    let mut fmax = w0.clone();
    for &(a, b) in relevant.iter() {
        fmax.set_value(a, b, 1.0);
    }
    let t_max = hom_density(h, &fmax)?;
    Ok((fmax, t_max))
}

/// Relative entropy `I_{W0}(f)` in block form; `+inf` iff `f` leaves the
/// support class (a Zero/One block of `w0` where `f` differs).
///
/// `tolerance` configures the mask-agreement test: `0.0` demands exact
/// equality (values are set, not measured); a small positive tolerance suits
/// post-optimization checks.
pub fn relative_entropy_tol(w0: &StepGraphon, f: &StepGraphon, tolerance: f64) -> f64 {
    let (rw, rf) = common_refinement(w0, f);
    let m = rw.block_count();
    let w = rw.widths_f64();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = rw.value(i, j);
            let u = rf.value(i, j);
            if p == 0.0 || p == 1.0 {
                if (u - p).abs() > tolerance {
                    return f64::INFINITY;
                }
            } else {
                acc += w[i] * w[j] * bernoulli_kl(p, u).expect("p in (0,1)");
            }
        }
    }
    0.5 * acc
}

/// Relative entropy with the exact-equality mask convention.
pub fn relative_entropy(w0: &StepGraphon, f: &StepGraphon) -> f64 {
    relative_entropy_tol(w0, f, 0.0)
}

/// Cancellation-free entropy difference `I_{W0}(f) - I_{W0}(g)` for two
/// graphons in the support class. Returns `(gap, error_bound)`.
pub fn entropy_gap(w0: &StepGraphon, f: &StepGraphon, g: &StepGraphon) -> Result<(f64, f64)> {
    let (rf, rg) = common_refinement(f, g);
    let (rw, rf) = common_refinement(w0, &rf);
    let (_, rg) = common_refinement(&rw, &rg);
    if !in_omega(w0, f) || !in_omega(w0, g) {
        return Err(Error::Domain(
            "entropy gap requires both graphons in the support class".into(),
        ));
    }
    let m = rw.block_count();
    let w = rw.widths_f64();
    let mut gap = 0.0;
    let mut abs_mass = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = rw.value(i, j);
            if p == 0.0 || p == 1.0 {
                continue;
            }
            let uf = rf.value(i, j);
            let ug = rg.value(i, j);
            if uf != ug {
                let hf = bernoulli_kl(p, uf).expect("p in (0,1)");
                let hg = bernoulli_kl(p, ug).expect("p in (0,1)");
                gap += w[i] * w[j] * (hf - hg);
                abs_mass += w[i] * w[j] * (hf.abs() + hg.abs());
            }
        }
    }
    Ok((0.5 * gap, 0.5 * abs_mass * 8.0 * f64::EPSILON))
}

/// Exact membership in the support class of `w0`.
pub fn in_omega(w0: &StepGraphon, f: &StepGraphon) -> bool {
    in_omega_tol(w0, f, 0.0)
}

/// Membership with a tolerance on masked blocks.
pub fn in_omega_tol(w0: &StepGraphon, f: &StepGraphon, tolerance: f64) -> bool {
    let (rw, rf) = common_refinement(w0, f);
    let m = rw.block_count();
    for i in 0..m {
        for j in 0..m {
            let p = rw.value(i, j);
            if (p == 0.0 || p == 1.0) && (rf.value(i, j) - p).abs() > tolerance {
                return false;
            }
        }
    }
    true
}

/// d-averaged block-constant graphon on a coarsening of `f`'s widths: block
/// `(i,j)` takes the d-norm of `f` restricted to the coarse block.
pub fn d_average(f: &StepGraphon, coarse_widths: &[BigRational], d: u32) -> Result<StepGraphon> {
    if d == 0 {
        return Err(Error::Domain("averaging exponent must be positive".into()));
    }
    let mut sum = BigRational::zero();
    let mut coarse_points = Vec::with_capacity(coarse_widths.len());
    for w in coarse_widths {
        if !w.is_positive() {
            return Err(Error::NonPositiveWidth(w.to_string()));
        }
        sum += w;
        coarse_points.push(sum.clone());
    }
    if !sum.is_one() {
        return Err(Error::WidthSumNotOne(sum.to_string()));
    }
    // Every coarse breakpoint must be a breakpoint of f.
    let own: BTreeSet<BigRational> = f.breakpoints().into_iter().collect();
    if !coarse_points.iter().all(|c| own.contains(c)) {
        return Err(Error::IncompatibleCoarsening);
    }
    // Assign each fine block to its coarse block.
    let fine_points = f.breakpoints();
    let mut owner = Vec::with_capacity(fine_points.len());
    let mut k = 0;
    for c in &fine_points {
        while coarse_points[k] < *c {
            k += 1;
        }
        owner.push(k);
    }
    let n = coarse_widths.len();
    let wf = f.widths_f64();
    let wc: Vec<f64> = coarse_widths.iter().map(|w| w.to_f64().unwrap()).collect();
    let mut acc = vec![0.0; n * n];
    for a in 0..fine_points.len() {
        for b in 0..fine_points.len() {
            acc[owner[a] * n + owner[b]] += wf[a] * wf[b] * f.value(a, b).powi(d as i32);
        }
    }
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            // Use one accumulation order for both triangles: summation order
            // differs between (i,j) and (j,i) and would break exact symmetry.
            let mean = acc[i * n + j] / (wc[i] * wc[j]);
            let v = mean.powf(1.0 / d as f64).clamp(0.0, 1.0);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    StepGraphon::new(coarse_widths.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn half() -> BigRational {
        rat(1, 2)
    }

    fn random_graphon(rng: &mut CounterRng, m: usize, denom: i64) -> StepGraphon {
        // Random rational widths with the given denominator.
        loop {
            let mut cuts: Vec<i64> = (0..m - 1).map(|_| 1 + rng.below(denom as u64 - 1) as i64).collect();
            cuts.sort_unstable();
            cuts.dedup();
            if cuts.len() != m - 1 {
                continue;
            }
            let mut widths = Vec::with_capacity(m);
            let mut prev = 0;
            for &c in &cuts {
                widths.push(rat(c - prev, denom));
                prev = c;
            }
            widths.push(rat(denom - prev, denom));
            let mut values = vec![vec![0.0; m]; m];
            for i in 0..m {
                for j in i..m {
                    let v = rng.uniform();
                    values[i][j] = v;
                    values[j][i] = v;
                }
            }
            return StepGraphon::new(widths, values).unwrap();
        }
    }

    #[test]
    fn constructor_validates() {
        assert!(StepGraphon::new(vec![half(), half()], vec![vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
        assert!(StepGraphon::new(vec![half(), half()], vec![vec![0.1, 1.2], vec![1.2, 0.1]]).is_err());
        assert!(StepGraphon::new(vec![half(), rat(1, 3)], vec![vec![0.0; 2]; 2]).is_err());
        assert!(StepGraphon::new(vec![rat(0, 1), rat(1, 1)], vec![vec![0.0; 2]; 2]).is_err());
    }

    #[test]
    fn refinement_of_constant_against_two_blocks() {
        let f = StepGraphon::constant(0.3).unwrap();
        let g = StepGraphon::new(vec![half(), half()], vec![vec![0.1, 0.2], vec![0.2, 0.9]]).unwrap();
        let (rf, rg) = common_refinement(&f, &g);
        assert_eq!(rf.block_count(), 2);
        assert_eq!(rf.values_matrix(), vec![vec![0.3, 0.3], vec![0.3, 0.3]]);
        assert_eq!(rg.values_matrix(), g.values_matrix());
    }

    #[test]
    fn refinement_is_identity_on_equal_widths() {
        let f = StepGraphon::new(
            vec![rat(1, 3), rat(2, 3)],
            vec![vec![0.4, 0.5], vec![0.5, 0.6]],
        )
        .unwrap();
        let (rf, rg) = common_refinement(&f, &f);
        assert_eq!(rf, f);
        assert_eq!(rg, f);
    }

    #[test]
    fn refinement_preserves_pointwise_values() {
        let f = StepGraphon::new(vec![half(), half()], vec![vec![0.7, 0.2], vec![0.2, 0.1]]).unwrap();
        let g = StepGraphon::new(
            vec![rat(1, 3), rat(2, 3)],
            vec![vec![0.9, 0.3], vec![0.3, 0.5]],
        )
        .unwrap();
        let (rf, rg) = common_refinement(&f, &g);
        assert_eq!(rf.widths(), &[rat(1, 3), rat(1, 6), half()]);
        let mut rng = CounterRng::new(1);
        for _ in 0..10_000 {
            let (x, y) = (rng.uniform(), rng.uniform());
            assert_eq!(f.value_at(x, y), rf.value_at(x, y));
            assert_eq!(g.value_at(x, y), rg.value_at(x, y));
        }
    }

    #[test]
    fn hom_density_single_edge_constant() {
        let f = StepGraphon::constant(0.37).unwrap();
        let t = hom_density(&FiniteGraph::edge(), &f).unwrap();
        assert!((t - 0.37).abs() < 1e-15);
    }

    #[test]
    fn hom_density_c4_bipartite_closed_form() {
        let f = StepGraphon::bipartite(half(), 1.0).unwrap();
        let t = hom_density(&FiniteGraph::cycle(4), &f).unwrap();
        assert!((t - 0.125).abs() < 1e-15, "t = {t}");
    }

    #[test]
    fn hom_density_triangle_matches_monte_carlo() {
        let mut rng = CounterRng::new(5);
        let f = random_graphon(&mut rng, 3, 12);
        let t = hom_density(&FiniteGraph::triangle(), &f).unwrap();
        let n = 1_000_000usize;
        let mut hits = 0.0;
        for _ in 0..n {
            let (x, y, z) = (rng.uniform(), rng.uniform(), rng.uniform());
            hits += f.value_at(x, y) * f.value_at(y, z) * f.value_at(x, z);
        }
        let est = hits / n as f64;
        // Bernoulli-product variance is bounded by 1/4.
        let sigma = 0.5 / (n as f64).sqrt();
        assert!((t - est).abs() < 3.0 * sigma + 1e-3, "t={t} est={est}");
    }

    #[test]
    fn labeled_density_edge_two_block() {
        let f = StepGraphon::new(vec![rat(1, 3), rat(2, 3)], vec![vec![0.5, 0.25], vec![0.25, 0.5]]).unwrap();
        let t = labeled_density(&FiniteGraph::edge(), &f, &[0, 1]).unwrap();
        assert!((t - (1.0 / 3.0) * (2.0 / 3.0) * 0.25).abs() < 1e-15);
    }

    #[test]
    fn labeled_density_zero_block_is_zero() {
        let f = StepGraphon::bipartite(half(), 0.8).unwrap();
        let t = labeled_density(&FiniteGraph::edge(), &f, &[0, 0]).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn labeled_density_rejects_bad_labeling() {
        let f = StepGraphon::constant(0.5).unwrap();
        assert!(labeled_density(&FiniteGraph::edge(), &f, &[0, 3]).is_err());
        assert!(labeled_density(&FiniteGraph::edge(), &f, &[0]).is_err());
    }

    proptest! {
        #[test]
        fn partition_identity(seed in 0u64..500) {
            let mut rng = CounterRng::new(seed);
            let f = random_graphon(&mut rng, 3, 10);
            let h = FiniteGraph::triangle();
            let mut sum = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        sum += labeled_density(&h, &f, &[a, b, c]).unwrap();
                    }
                }
            }
            let t = hom_density(&h, &f).unwrap();
            prop_assert!((sum - t).abs() < 1e-12);
        }

        #[test]
        fn refinement_invariance(seed in 0u64..200) {
            let mut rng = CounterRng::new(seed.wrapping_add(77));
            let f = random_graphon(&mut rng, 3, 12);
            let g = random_graphon(&mut rng, 2, 8);
            let (rf, rg) = common_refinement(&f, &g);
            let h = FiniteGraph::cycle(4);
            let t0 = hom_density(&h, &f).unwrap();
            let t1 = hom_density(&h, &rf).unwrap();
            prop_assert!((t0 - t1).abs() < 1e-12);
            let e0 = relative_entropy(&g, &f);
            let (rg2, rf2) = common_refinement(&g, &rf);
            let e1 = relative_entropy(&rg2, &rf2);
            prop_assert!((e0 - e1).abs() < 1e-12);
            let n0 = crate::opnorm::operator_norm(&f).unwrap();
            let n1 = crate::opnorm::operator_norm(&rf).unwrap();
            prop_assert!((n0 - n1).abs() < 1e-12);
            let d0 = crate::cutnorm::cut_norm_distance(&f, &g).unwrap();
            let d1 = crate::cutnorm::cut_norm_distance(&rf, &rg).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn relevant_blocks_triangle_example() {
        let w0 = StepGraphon::uniform(vec![
            vec![0.0, 0.4, 0.0],
            vec![0.4, 0.0, 0.4],
            vec![0.0, 0.4, 0.4],
        ])
        .unwrap();
        let rel = relevant_blocks(&FiniteGraph::triangle(), &w0).unwrap();
        let pairs: Vec<_> = rel.iter().copied().collect();
        assert_eq!(pairs, vec![(1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn relevant_blocks_positive_graphon_is_everything() {
        let w0 = StepGraphon::uniform(vec![vec![0.2, 0.3], vec![0.3, 0.4]]).unwrap();
        let rel = relevant_blocks(&FiniteGraph::edge(), &w0).unwrap();
        assert_eq!(rel.len(), 4);
    }

    #[test]
    fn relevant_blocks_zero_graphon_is_empty() {
        let w0 = StepGraphon::constant(0.0).unwrap();
        let rel = relevant_blocks(&FiniteGraph::triangle(), &w0).unwrap();
        assert!(rel.is_empty());
    }

    #[test]
    fn f_max_triangle_example() {
        let w0 = StepGraphon::uniform(vec![
            vec![0.0, 0.4, 0.0],
            vec![0.4, 0.0, 0.4],
            vec![0.0, 0.4, 0.4],
        ])
        .unwrap();
        let (fmax, _) = f_max_graphon(&FiniteGraph::triangle(), &w0).unwrap();
        assert_eq!(
            fmax.values_matrix(),
            vec![
                vec![0.0, 0.4, 0.0],
                vec![0.4, 0.0, 1.0],
                vec![0.0, 1.0, 1.0],
            ]
        );
    }

    #[test]
    fn f_max_positive_graphon_saturates() {
        let w0 = StepGraphon::uniform(vec![vec![0.2, 0.3], vec![0.3, 0.4]]).unwrap();
        let (fmax, tmax) = f_max_graphon(&FiniteGraph::cycle(4), &w0).unwrap();
        assert!(fmax.values_matrix().iter().flatten().all(|&v| v == 1.0));
        assert!((tmax - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_max_bipartite_saturates_cross_blocks() {
        let w0 = StepGraphon::bipartite(half(), 0.4).unwrap();
        let (fmax, tmax) = f_max_graphon(&FiniteGraph::cycle(4), &w0).unwrap();
        assert_eq!(
            fmax.values_matrix(),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]]
        );
        assert!((tmax - 0.125).abs() < 1e-15);
    }

    #[test]
    fn entropy_zero_at_base() {
        let w0 = StepGraphon::uniform(vec![vec![0.2, 0.7], vec![0.7, 0.5]]).unwrap();
        assert_eq!(relative_entropy(&w0, &w0), 0.0);
    }

    #[test]
    fn entropy_bipartite_saturation_closed_form() {
        let w0 = StepGraphon::bipartite(half(), 0.5).unwrap();
        let f1 = StepGraphon::bipartite(half(), 1.0).unwrap();
        let i = relative_entropy(&w0, &f1);
        assert!((i - 0.25 * std::f64::consts::LN_2).abs() < 1e-12, "I = {i}");
    }

    #[test]
    fn entropy_infinite_off_mask() {
        let w0 = StepGraphon::bipartite(half(), 0.5).unwrap();
        let f = StepGraphon::constant(0.5).unwrap();
        assert!(relative_entropy(&w0, &f).is_infinite());
        assert!(!in_omega(&w0, &f));
        let g = StepGraphon::bipartite(half(), 0.9).unwrap();
        assert!(in_omega(&w0, &g));
        assert!(relative_entropy(&w0, &g).is_finite());
    }

    #[test]
    fn in_omega_free_base_accepts_everything() {
        let w0 = StepGraphon::constant(0.5).unwrap();
        let f = StepGraphon::uniform(vec![vec![0.0, 1.0], vec![1.0, 0.3]]).unwrap();
        assert!(in_omega(&w0, &f));
    }

    #[test]
    fn d_average_identity_on_coarse_constant() {
        let g = StepGraphon::new(
            vec![half(), half()],
            vec![vec![0.3, 0.6], vec![0.6, 0.2]],
        )
        .unwrap();
        let avg = d_average(&g, &[half(), half()], 3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((avg.value(i, j) - g.value(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn d_average_with_d1_is_plain_average() {
        let f = StepGraphon::new(
            vec![rat(1, 4), rat(1, 4), half()],
            vec![
                vec![0.2, 0.4, 0.1],
                vec![0.4, 0.8, 0.3],
                vec![0.1, 0.3, 0.5],
            ],
        )
        .unwrap();
        let avg = d_average(&f, &[half(), half()], 1).unwrap();
        let expect00 = (0.25 * 0.25 * (0.2 + 0.4 + 0.4 + 0.8)) / 0.25;
        assert!((avg.value(0, 0) - expect00).abs() < 1e-14);
        assert!(d_average(&f, &[rat(1, 3), rat(2, 3)], 1).is_err());
    }

    #[test]
    fn averaging_never_decreases_regular_densities() {
        let mut rng = CounterRng::new(9);
        let h = FiniteGraph::cycle(4);
        for _ in 0..100 {
            let f = random_graphon(&mut rng, 4, 8);
            // Coarsen to two blocks at a breakpoint of f.
            let bp = f.breakpoints();
            let cut = bp[1].clone();
            let coarse = vec![cut.clone(), BigRational::one() - cut];
            let avg = d_average(&f, &coarse, 2).unwrap();
            let t_f = hom_density(&h, &f).unwrap();
            let t_avg = hom_density(&h, &avg).unwrap();
            assert!(t_f <= t_avg + 1e-12, "t(H,f)={t_f} > t(H,f*)={t_avg}");
        }
    }

    #[test]
    fn canonical_merges_split_blocks() {
        let f = StepGraphon::new(
            vec![rat(1, 4), rat(1, 4), half()],
            vec![
                vec![0.2, 0.2, 0.7],
                vec![0.2, 0.2, 0.7],
                vec![0.7, 0.7, 0.4],
            ],
        )
        .unwrap();
        let c = f.canonical();
        assert_eq!(c.block_count(), 2);
        assert_eq!(c.widths(), &[half(), half()]);
        assert_eq!(c.value(0, 1), 0.7);
    }

    #[test]
    fn density_gap_is_exact_zero_for_equal_inputs() {
        let f = StepGraphon::uniform(vec![vec![0.3, 0.6], vec![0.6, 0.1]]).unwrap();
        let (gap, _) = hom_density_gap(&FiniteGraph::cycle(4), &f, &f).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn density_gap_matches_direct_difference() {
        let mut rng = CounterRng::new(11);
        let f = random_graphon(&mut rng, 3, 6);
        let g = random_graphon(&mut rng, 2, 6);
        let h = FiniteGraph::cycle(4);
        let (gap, err) = hom_density_gap(&h, &f, &g).unwrap();
        let direct = hom_density(&h, &f).unwrap() - hom_density(&h, &g).unwrap();
        assert!((gap - direct).abs() < 1e-12 + err);
    }
}
