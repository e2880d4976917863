//! Explicit symmetry-breaking witnesses: graphons that meet or beat the
//! constraint at strictly lower entropy than every symmetric candidate.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::FiniteGraph;
use crate::graphon::{StepGraphon, entropy_gap, hom_density, hom_density_gap, in_omega, relative_entropy};
use crate::opnorm::operator_norm;
use crate::psi::{analyze_psi, bernoulli_kl, limit_entropy_ratio};
use crate::solver::ConstraintKind;

/// Construction identity of a witness.
#[derive(Debug, Clone)]
pub enum WitnessTag {
    /// Strip perturbation of the bipartite plateau.
    GEps { eps: f64, r1: f64, r2: f64, s: f64 },
    /// Clique against the mask of a planted independent set or clique;
    /// ratios are the small-p limits of entropy over `log(1/p)`.
    Clique {
        case: PlantedCase,
        target: f64,
        side: f64,
        ratio_witness: f64,
        ratio_symmetric: f64,
    },
    /// Clique-plus-biclique matching a one-parameter symmetric family.
    PlantedAlpha {
        alpha: f64,
        side: f64,
        ratio_witness: f64,
        ratio_symmetric: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedCase {
    /// Base `f_{0,p,p}`: Erdos-Renyi with a planted independent set.
    Independent,
    /// Base `f_{1,p,p}`: Erdos-Renyi with a planted clique.
    Clique,
}

/// A verified symmetry-breaking witness.
#[derive(Debug, Clone)]
pub struct Witness {
    pub graphon: StepGraphon,
    /// Constrained quantity at the witness (density or operator norm).
    pub constraint_witness: f64,
    /// The same quantity at the best symmetric candidate.
    pub constraint_symmetric: f64,
    pub entropy_witness: f64,
    pub entropy_symmetric: f64,
    /// `constraint_witness` minus the value it must meet or exceed.
    pub constraint_margin: f64,
    /// `entropy_symmetric - entropy_witness`.
    pub entropy_margin: f64,
    pub tag: WitnessTag,
}

/// One accepted epsilon of the strip-construction sweep.
#[derive(Debug, Clone, Copy)]
pub struct GepsPoint {
    pub eps: f64,
    /// Constraint gap over the symmetric candidate (positive).
    pub constraint_gap: f64,
    /// Entropy gap (negative: the witness is cheaper).
    pub entropy_gap: f64,
}

/// Full sweep record of the strip construction.
#[derive(Debug, Clone)]
pub struct GepsSweep {
    pub r1: f64,
    pub r2: f64,
    pub s: f64,
    pub accepted: Vec<GepsPoint>,
    /// Predicted eps^3 coefficient of the density gap (density constraints).
    pub leading_coefficient: Option<f64>,
}

fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Builds the strip perturbation of the bipartite plateau `f_r`: thin strips
/// of widths `gamma*s*eps^2`, `(1-gamma)*s*eps^2`,
/// `(1-gamma)((1-s)eps^2+eps^3)`, `gamma((1-s)eps^2+eps^3)` carry the values
/// `r1` and `r2`; the bulk keeps `r`; the diagonal quadrants stay zero.
pub fn build_geps(
    gamma: &BigRational,
    r: f64,
    r1: f64,
    r2: f64,
    s: f64,
    eps: f64,
) -> Result<StepGraphon> {
    let one = BigRational::one();
    let s_rat = to_rational(s);
    let eps_rat = to_rational(eps);
    let eps2 = &eps_rat * &eps_rat;
    let eps3 = &eps2 * &eps_rat;
    let rest = &one - gamma;
    let a1 = gamma * &s_rat * &eps2;
    let a2 = &rest * &s_rat * &eps2;
    let tail = (&one - &s_rat) * &eps2 + &eps3;
    let a3 = &rest * &tail;
    let a4 = gamma * &tail;
    let left_mid = gamma - &a1 - &a4;
    let right_mid = &rest - &a2 - &a3;
    if !(left_mid > BigRational::zero() && right_mid > BigRational::zero()) {
        return Err(Error::Domain("strip widths exceed the block".into()));
    }
    let widths = vec![a1, left_mid, a4, a2, right_mid, a3];
    // Index layout: 0 strip / 1 bulk / 2 strip on the left side,
    //               3 strip / 4 bulk / 5 strip on the right side.
    let mut values = vec![vec![0.0; 6]; 6];
    for i in 0..3 {
        for j in 3..6 {
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    let mut put = |i: usize, j: usize, v: f64| {
        values[i][j] = v;
        values[j][i] = v;
    };
    put(0, 4, r1);
    put(3, 1, r1);
    put(5, 1, r2);
    put(2, 4, r2);
    StepGraphon::new(widths, values)
}

fn d_effective(kind: &ConstraintKind) -> Result<u32> {
    match kind {
        ConstraintKind::HomDensity(h) => Ok(h.require_regular()? as u32),
        ConstraintKind::OperatorNorm => Ok(2),
    }
}

/// Sweeps the geometric epsilon grid `2^-3 .. 2^-12` for strips that beat the
/// symmetric candidate on both the constraint and the entropy.
///
/// Acceptance demands both strict inequalities with margins at least 1e-12.
/// Near the phase boundary the guaranteed gaps fall below that floor before
/// any grid epsilon works, so when the base grid yields nothing the grid is
/// extended down to `2^-24` and margins are accepted whenever they exceed a
/// certified bound on their own rounding error (the gap evaluations cancel
/// term by term, so this bound is tiny).
pub fn geps_sweep(
    p: f64,
    gamma: &BigRational,
    kind: &ConstraintKind,
    r: f64,
) -> Result<GepsSweep> {
    let d = d_effective(kind)?;
    if !(0.0 < p && p < 1.0 && (p..=1.0).contains(&r)) {
        return Err(Error::Domain(format!(
            "strip construction needs 0 < p <= r <= 1, got p={p} r={r}"
        )));
    }
    let profile = analyze_psi(p, d)?;
    if r <= p || r >= 1.0 {
        // Endpoints are always on the minorant; nothing to sweep.
        return Ok(GepsSweep {
            r1: f64::NAN,
            r2: f64::NAN,
            s: f64::NAN,
            accepted: Vec::new(),
            leading_coefficient: None,
        });
    }
    let gamma_f = gamma.to_f64().unwrap();
    let Some((a, b)) = profile.window else {
        return Ok(GepsSweep {
            r1: f64::NAN,
            r2: f64::NAN,
            s: f64::NAN,
            accepted: Vec::new(),
            leading_coefficient: None,
        });
    };
    let x = r.powi(d as i32);
    let r1 = a.powf(1.0 / d as f64);
    let r2 = b.powf(1.0 / d as f64);
    let s = (b - x) / (b - a);
    let leading_coefficient = match kind {
        ConstraintKind::HomDensity(h) => {
            let m_half = h.vertex_count() as f64 / 2.0;
            let c = h.component_count() as f64;
            Some(
                2.0f64.powf(c + 1.0)
                    * m_half
                    * (gamma_f * (1.0 - gamma_f)).powf(m_half)
                    * r.powi(h.edge_count() as i32 - d as i32)
                    * (b - x),
            )
        }
        ConstraintKind::OperatorNorm => None,
    };
    let mut sweep = GepsSweep {
        r1,
        r2,
        s,
        accepted: Vec::new(),
        leading_coefficient,
    };
    if !(0.0 < s && s < 1.0) {
        return Ok(sweep);
    }
    let w0 = StepGraphon::bipartite(gamma.clone(), p)?;
    let f_r = StepGraphon::bipartite(gamma.clone(), r)?;
    let op_sym = r * (gamma_f * (1.0 - gamma_f)).sqrt();

    let evaluate = |k: u32, floor: f64, sweep: &mut GepsSweep| -> Result<()> {
        let eps = 2.0f64.powi(-(k as i32));
        let Ok(g) = build_geps(gamma, r, r1, r2, s, eps) else {
            return Ok(());
        };
        let (c_gap, c_err) = match kind {
            ConstraintKind::HomDensity(h) => hom_density_gap(h, &g, &f_r)?,
            ConstraintKind::OperatorNorm => {
                let op = operator_norm(&g)?;
                (op - op_sym, 1e-13)
            }
        };
        let (i_gap, i_err) = entropy_gap(&w0, &g, &f_r)?;
        let c_ok = c_gap >= floor.max(16.0 * c_err);
        let i_ok = -i_gap >= floor.max(16.0 * i_err);
        if c_ok && i_ok {
            sweep.accepted.push(GepsPoint {
                eps,
                constraint_gap: c_gap,
                entropy_gap: i_gap,
            });
        }
        Ok(())
    };

    for k in 3..=12 {
        evaluate(k, 1e-12, &mut sweep)?;
    }
    if sweep.accepted.is_empty() {
        for k in 3..=24 {
            evaluate(k, 0.0, &mut sweep)?;
        }
    }
    Ok(sweep)
}

/// Strip witness for an off-minorant radius. Picks the accepted epsilon with
/// the widest entropy margin.
pub fn witness_geps(
    p: f64,
    gamma: &BigRational,
    kind: &ConstraintKind,
    r: f64,
) -> Result<Witness> {
    let d = d_effective(kind)?;
    if crate::psi::on_minorant(p, d, r)? {
        return Err(Error::Domain(format!(
            "(r^d, h_p(r)) lies on the convex minorant at r={r}; no witness exists"
        )));
    }
    let sweep = geps_sweep(p, gamma, kind, r)?;
    let Some(best) = sweep
        .accepted
        .iter()
        .max_by(|a, b| {
            (-a.entropy_gap)
                .partial_cmp(&(-b.entropy_gap))
                .unwrap()
        })
        .copied()
    else {
        return Err(Error::WitnessNotFound(format!(
            "no epsilon in the grid beats the symmetric candidate at r={r}"
        )));
    };
    let gamma_f = gamma.to_f64().unwrap();
    let g = build_geps(gamma, r, sweep.r1, sweep.r2, sweep.s, best.eps)?;
    let w0 = StepGraphon::bipartite(gamma.clone(), p)?;
    let entropy_symmetric = gamma_f * (1.0 - gamma_f) * bernoulli_kl(p, r)?;
    let entropy_witness = relative_entropy(&w0, &g);
    let (cw, cs) = match kind {
        ConstraintKind::HomDensity(h) => {
            let f_r = StepGraphon::bipartite(gamma.clone(), r)?;
            (hom_density(h, &g)?, hom_density(h, &f_r)?)
        }
        ConstraintKind::OperatorNorm => (
            operator_norm(&g)?,
            r * (gamma_f * (1.0 - gamma_f)).sqrt(),
        ),
    };
    Ok(Witness {
        graphon: g,
        constraint_witness: cw,
        constraint_symmetric: cs,
        entropy_witness,
        entropy_symmetric,
        constraint_margin: best.constraint_gap,
        entropy_margin: -best.entropy_gap,
        tag: WitnessTag::GEps {
            eps: best.eps,
            r1: sweep.r1,
            r2: sweep.r2,
            s: sweep.s,
        },
    })
}

/// Minimum over the three-parameter symmetric family `f_{diag,alpha,beta}^z`
/// (`z` either block split) of entropy and of the small-p limit ratio,
/// subject to `t(H, .) >= t` and membership in the support class.
/// Dense grid plus three local refinement rounds.
fn symmetric_family_min(
    w0: &StepGraphon,
    h: &FiniteGraph,
    gamma: &BigRational,
    diag: f64,
    t: f64,
) -> Result<(f64, f64, f64)> {
    let one = BigRational::one();
    let splits = [gamma.clone(), &one - gamma];
    let mut best_entropy = f64::INFINITY;
    let mut best_ratio = f64::INFINITY;
    let mut best_t = f64::NAN;
    let mut eval = |z: &BigRational, alpha: f64, beta: f64| -> Result<()> {
        let cand = match StepGraphon::two_block(z.clone(), diag, alpha, beta) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        if !in_omega(w0, &cand) {
            return Ok(());
        }
        let tc = hom_density(h, &cand)?;
        if tc + 1e-12 < t {
            return Ok(());
        }
        let e = relative_entropy(w0, &cand);
        if e < best_entropy {
            best_entropy = e;
            best_t = tc;
        }
        let ratio = limit_entropy_ratio(w0, &cand)?;
        if ratio < best_ratio {
            best_ratio = ratio;
        }
        Ok(())
    };
    for z in &splits {
        if !z.is_positive() || *z >= one {
            continue;
        }
        // Coarse grid.
        let n = 64usize;
        let mut center = (0.5, 0.5);
        let mut radius = 0.5;
        for round in 0..4 {
            let steps = if round == 0 { n } else { 32 };
            let (ca, cb) = center;
            let mut best_here = (f64::INFINITY, center);
            for ia in 0..=steps {
                for ib in 0..=steps {
                    let alpha = (ca - radius + 2.0 * radius * ia as f64 / steps as f64)
                        .clamp(0.0, 1.0);
                    let beta = (cb - radius + 2.0 * radius * ib as f64 / steps as f64)
                        .clamp(0.0, 1.0);
                    let cand = match StepGraphon::two_block(z.clone(), diag, alpha, beta) {
                        Ok(c) => c,
                        Err(_) => continue,
                    };
                    if !in_omega(w0, &cand) {
                        continue;
                    }
                    let tc = hom_density(h, &cand)?;
                    if tc + 1e-12 < t {
                        continue;
                    }
                    let e = relative_entropy(w0, &cand);
                    if e < best_here.0 {
                        best_here = (e, (alpha, beta));
                    }
                    eval(z, alpha, beta)?;
                }
            }
            center = best_here.1;
            radius *= 0.15;
        }
    }
    if best_entropy.is_infinite() {
        return Err(Error::Domain(
            "no feasible symmetric candidate in the family".into(),
        ));
    }
    Ok((best_entropy, best_ratio, best_t))
}

/// Clique witness against a planted-independent-set or planted-clique base.
///
/// Builds the union of a clique (side `t^{1/v}`, nudged up a hair so the
/// constraint margin is strictly positive) with isolated vertices, placed
/// against the mask, and compares it with the minimized symmetric family
/// both in entropy at the given `p` and in the small-p limit ratio.
pub fn witness_clique(
    case: PlantedCase,
    gamma: &BigRational,
    t: f64,
    h: &FiniteGraph,
    p: f64,
) -> Result<Witness> {
    h.require_regular()?;
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
    }
    let v = h.vertex_count();
    let gamma_f = gamma.to_f64().unwrap();
    let one = BigRational::one();
    let (w0, diag) = match case {
        PlantedCase::Independent => (StepGraphon::two_block(gamma.clone(), 0.0, p, p)?, 0.0),
        PlantedCase::Clique => (StepGraphon::two_block(gamma.clone(), 1.0, p, p)?, 1.0),
    };
    match case {
        PlantedCase::Independent => {
            let t_hi = (1.0 - gamma_f).powi(v as i32);
            if !(0.0 < t && t < t_hi) {
                return Err(Error::Domain(format!(
                    "target {t} outside the admissible range (0, {t_hi}); ranges at or above \
                     t(H, f_(0,0,1)) are refused"
                )));
            }
        }
        PlantedCase::Clique => {
            let t_lo = gamma_f.powi(v as i32);
            if !(t_lo < t && t < 1.0) {
                return Err(Error::Domain(format!(
                    "target {t} outside the admissible range ({t_lo}, 1)"
                )));
            }
        }
    }
    // Clique side, nudged up so the density margin is strictly positive.
    let side = t.powf(1.0 / v as f64) * (1.0 + 1e-13);
    let side_rat = to_rational(side);
    let chi = match case {
        PlantedCase::Independent => {
            if side >= 1.0 - gamma_f {
                return Err(Error::Domain("clique side exceeds the free block".into()));
            }
            StepGraphon::new(
                vec![&one - &side_rat, side_rat.clone()],
                vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            )?
        }
        PlantedCase::Clique => {
            if side <= gamma_f || side >= 1.0 {
                return Err(Error::Domain("clique side incompatible with the mask".into()));
            }
            StepGraphon::new(
                vec![side_rat.clone(), &one - &side_rat],
                vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            )?
        }
    };
    let t_chi = hom_density(h, &chi)?;
    let entropy_witness = relative_entropy(&w0, &chi);
    let ratio_witness = limit_entropy_ratio(&w0, &chi)?;
    let (entropy_symmetric, ratio_symmetric, t_sym) =
        symmetric_family_min(&w0, h, gamma, diag, t)?;
    let entropy_margin = entropy_symmetric - entropy_witness;
    if entropy_margin <= 0.0 {
        return Err(Error::WitnessNotFound(format!(
            "clique witness does not beat the symmetric family at p={p} (margin {entropy_margin:.3e})"
        )));
    }
    Ok(Witness {
        graphon: chi,
        constraint_witness: t_chi,
        constraint_symmetric: t_sym,
        entropy_witness,
        entropy_symmetric,
        constraint_margin: t_chi - t,
        entropy_margin,
        tag: WitnessTag::Clique {
            case,
            target: t,
            side,
            ratio_witness,
            ratio_symmetric,
        },
    })
}

/// Clique-plus-biclique witness matching the symmetric family of a base with
/// a planted clique and independent set. The construction has the same
/// density as `f_{1,alpha,0}` (verified through the independent-set
/// polynomial) with limit ratio `gamma(1-gamma) alpha^d` against the
/// symmetric `gamma(1-gamma) alpha`.
pub fn witness_planted(gamma: &BigRational, alpha: f64, h: &FiniteGraph) -> Result<Witness> {
    let d = h.require_regular()?;
    if d < 2 {
        return Err(Error::Domain(
            "the planted construction separates only for degree >= 2".into(),
        ));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let v = h.vertex_count();
    let gamma_f = gamma.to_f64().unwrap();
    // Density of the symmetric candidate via the independent-set polynomial.
    let s_counts = h.independent_set_counts();
    let mut t_sym = 0.0;
    for (k, &s_k) in s_counts.iter().enumerate() {
        if s_k == 0 {
            continue;
        }
        t_sym += s_k as f64
            * gamma_f.powi((v - k) as i32)
            * (1.0 - gamma_f).powi(k as i32)
            * alpha.powi((d * k) as i32);
    }
    // Witness: all-ones on [0, c]^2 minus the lower-right quadrant, with
    // c = gamma + (1-gamma) alpha^d nudged up a hair.
    let c = (gamma_f + (1.0 - gamma_f) * alpha.powi(d as i32)) * (1.0 + 1e-13);
    if c >= 1.0 {
        return Err(Error::Domain("construction side reaches the boundary".into()));
    }
    let c_rat = to_rational(c);
    let one = BigRational::one();
    let widths = vec![gamma.clone(), &c_rat - gamma, &one - &c_rat];
    let chi = StepGraphon::new(
        widths,
        vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ],
    )?;
    let t_chi = hom_density(h, &chi)?;
    if (t_chi - t_sym).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "independent-set polynomial mismatch: t(H, chi) = {t_chi} vs {t_sym}"
        )));
    }
    let ratio_witness = gamma_f * (1.0 - gamma_f) * alpha.powi(d as i32);
    let ratio_symmetric = gamma_f * (1.0 - gamma_f) * alpha;
    Ok(Witness {
        graphon: chi,
        constraint_witness: t_chi,
        constraint_symmetric: t_sym,
        entropy_witness: ratio_witness,
        entropy_symmetric: ratio_symmetric,
        constraint_margin: t_chi - t_sym,
        entropy_margin: ratio_symmetric - ratio_witness,
        tag: WitnessTag::PlantedAlpha {
            alpha,
            side: c,
            ratio_witness,
            ratio_symmetric,
        },
    })
}

/// Planted witness resolved from a density target: finds the `alpha` with
/// `t(H, f_{1,alpha,0}) = t` and compares actual entropies at the given `p`.
pub fn witness_planted_for_target(
    gamma: &BigRational,
    t: f64,
    h: &FiniteGraph,
    p: f64,
) -> Result<Witness> {
    let d = h.require_regular()?;
    if d < 2 {
        return Err(Error::Domain(
            "the planted construction separates only for degree >= 2".into(),
        ));
    }
    let t_of = |alpha: f64| -> Result<f64> {
        hom_density(h, &StepGraphon::two_block(gamma.clone(), 1.0, alpha, 0.0)?)
    };
    let t_lo = t_of(0.0)?;
    let t_hi = t_of(1.0)?;
    if !(t_lo < t && t < t_hi) {
        return Err(Error::Domain(format!(
            "target {t} outside the admissible range ({t_lo}, {t_hi})"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_of(mid)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let mut w = witness_planted(gamma, alpha, h)?;
    // Replace the limit-ratio entropy fields by actual entropies at p.
    let w0 = StepGraphon::two_block(gamma.clone(), 1.0, p, 0.0)?;
    let sym = StepGraphon::two_block(gamma.clone(), 1.0, alpha, 0.0)?;
    let (gap, _err) = entropy_gap(&w0, &w.graphon, &sym)?;
    w.entropy_witness = relative_entropy(&w0, &w.graphon);
    w.entropy_symmetric = relative_entropy(&w0, &sym);
    w.entropy_margin = -gap;
    if w.entropy_margin <= 0.0 {
        return Err(Error::WitnessNotFound(format!(
            "planted witness does not beat the symmetric candidate at p={p}"
        )));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn half() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    #[test]
    fn geps_witness_mid_window() {
        let h = FiniteGraph::cycle(4);
        let kind = ConstraintKind::HomDensity(h);
        let w = witness_geps(0.05, &half(), &kind, 0.4).unwrap();
        assert!(w.constraint_margin > 0.0);
        assert!(w.entropy_margin > 0.0);
        assert!(w.constraint_witness > w.constraint_symmetric);
        assert!(w.entropy_witness < w.entropy_symmetric);
    }

    #[test]
    fn geps_entropy_gap_matches_closed_form() {
        let p = 0.05;
        let gamma = half();
        let h = FiniteGraph::cycle(4);
        let kind = ConstraintKind::HomDensity(h);
        let r = 0.4;
        let sweep = geps_sweep(p, &gamma, &kind, r).unwrap();
        assert!(!sweep.accepted.is_empty());
        let gf = 0.5;
        let hp = |u: f64| bernoulli_kl(p, u).unwrap();
        for pt in &sweep.accepted {
            let eps = pt.eps;
            let s = sweep.s;
            let expect = 2.0
                * gf
                * (1.0 - gf)
                * (1.0 - eps * eps - eps * eps * eps)
                * eps
                * eps
                * (s * hp(sweep.r1) + (1.0 - s) * hp(sweep.r2) - hp(r)
                    + eps * (hp(sweep.r2) - hp(r)));
            assert!(
                (pt.entropy_gap - expect).abs() < 1e-10,
                "eps={eps}: gap {} vs closed form {expect}",
                pt.entropy_gap
            );
        }
    }

    #[test]
    fn geps_leading_coefficient_within_tolerance() {
        let gamma = half();
        let h = FiniteGraph::cycle(4);
        let kind = ConstraintKind::HomDensity(h);
        let sweep = geps_sweep(0.05, &gamma, &kind, 0.4).unwrap();
        let k_ref = sweep.leading_coefficient.unwrap();
        let mut pts = sweep.accepted.clone();
        pts.sort_by(|a, b| a.eps.partial_cmp(&b.eps).unwrap());
        for pt in pts.iter().take(2) {
            let k_hat = pt.constraint_gap / pt.eps.powi(3);
            assert!(
                (k_hat - k_ref).abs() / k_ref < 0.2,
                "eps={}: {k_hat} vs {k_ref}",
                pt.eps
            );
        }
    }

    #[test]
    fn geps_operator_norm_variant() {
        let gamma = half();
        let w = witness_geps(0.05, &gamma, &ConstraintKind::OperatorNorm, 0.4).unwrap();
        let bound = 0.4 * (0.25f64).sqrt();
        assert!(w.constraint_witness > bound);
        assert!(w.entropy_witness < w.entropy_symmetric);
    }

    #[test]
    fn geps_refuses_on_minorant_radius() {
        let gamma = half();
        let h = FiniteGraph::cycle(4);
        let kind = ConstraintKind::HomDensity(h);
        assert!(witness_geps(0.3, &gamma, &kind, 0.5).is_err());
        // Off-window radius with a non-convex profile: sweep yields nothing.
        let sweep = geps_sweep(0.05, &half(), &kind, 0.06).unwrap();
        assert!(sweep.accepted.is_empty());
    }

    #[test]
    fn clique_witness_density_is_exact() {
        let h = FiniteGraph::cycle(4);
        let t = 0.01;
        let w = witness_clique(PlantedCase::Independent, &half(), t, &h, 1e-4).unwrap();
        assert!((w.constraint_witness - t).abs() < 1e-12);
        assert!(w.constraint_margin > 0.0);
        assert!(w.entropy_margin > 0.0);
        // Limit ratio of the witness is t^(2/v) / 2.
        if let WitnessTag::Clique { ratio_witness, .. } = w.tag {
            assert!((ratio_witness - 0.5 * t.powf(0.5)).abs() < 1e-10);
        } else {
            panic!("wrong tag");
        }
    }

    #[test]
    fn clique_witness_rejects_excluded_range() {
        let h = FiniteGraph::cycle(4);
        // t above t(H, f_(0,0,1)) = (1/2)^4 is refused in the independent case.
        assert!(witness_clique(PlantedCase::Independent, &half(), 0.2, &h, 1e-4).is_err());
        // Clique case needs t above gamma^v.
        assert!(witness_clique(PlantedCase::Clique, &half(), 0.05, &h, 1e-4).is_err());
    }

    #[test]
    fn planted_alpha_identity_and_ratios() {
        let h = FiniteGraph::cycle(4);
        let w = witness_planted(&half(), 0.5, &h).unwrap();
        // Ratio gap gamma (1-gamma) (alpha - alpha^d) with d = 2.
        assert!((w.entropy_margin - 0.25 * (0.5 - 0.25)).abs() < 1e-12);
        assert!(w.constraint_margin >= 0.0);
        // Boundary: ratios coincide as alpha -> 1.
        let w9 = witness_planted(&half(), 0.999999, &h).unwrap();
        assert!(w9.entropy_margin < 1e-5);
    }

    #[test]
    fn planted_rejects_degree_one() {
        let h = FiniteGraph::edge();
        assert!(witness_planted(&half(), 0.5, &h).is_err());
    }
}
