//! Scalar analysis of the Bernoulli relative entropy `h_p` and of
//! `psi_p(x) = h_p(x^{1/d})`: convexity classification, inflection points,
//! the lower common tangent, and the convex minorant used by the phase
//! criteria.

use crate::error::{Error, Result};
use crate::graphon::{BlockTag, OmegaMask, StepGraphon, common_refinement, in_omega};

/// `h_p(u) = u log(u/p) + (1-u) log((1-u)/(1-p))`, with
/// `h_p(0) = log(1/(1-p))` and `h_p(1) = log(1/p)`.
pub fn bernoulli_kl(p: f64, u: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!(
            "relative entropy base must lie in (0,1), got {p}"
        )));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("argument {u} outside [0,1]")));
    }
    if u == 0.0 {
        return Ok(-(1.0 - p).ln());
    }
    if u == 1.0 {
        return Ok(-p.ln());
    }
    Ok(u * (u / p).ln() + (1.0 - u) * ((1.0 - u) / (1.0 - p)).ln())
}

fn kl_d1(p: f64, u: f64) -> f64 {
    (u / p).ln() - ((1.0 - u) / (1.0 - p)).ln()
}

fn kl_d2(u: f64) -> f64 {
    1.0 / u + 1.0 / (1.0 - u)
}

/// `psi_p(x) = h_p(x^{1/d})` with its first two derivatives.
///
/// At `x = 0` with `d > 1` the value is the boundary limit and the
/// derivatives are unbounded one-sided limits (reported as infinities).
pub fn psi_eval(p: f64, d: u32, x: f64) -> Result<(f64, f64, f64)> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
    }
    if d == 0 {
        return Err(Error::Domain("d must be a positive integer".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0,1]")));
    }
    if x == 0.0 {
        let value = bernoulli_kl(p, 0.0)?;
        return Ok((value, f64::NEG_INFINITY, f64::INFINITY));
    }
    let df = d as f64;
    let u = x.powf(1.0 / df);
    let value = bernoulli_kl(p, u)?;
    if u == 1.0 {
        return Ok((value, f64::INFINITY, f64::INFINITY));
    }
    let first = kl_d1(p, u) * u / (df * x);
    let second = x.powf(1.0 / df - 2.0) / (df * df) * (u * kl_d2(u) - (df - 1.0) * kl_d1(p, u));
    Ok((value, first, second))
}

/// The convexity threshold `p_0(d) = (d-1) / (d-1 + e^{d/(d-1)})`.
///
/// For `d = 1` the profile `psi = h_p` is convex for every `p`; the sentinel
/// 0 is returned so that `p < p_0` is never satisfied.
pub fn p_zero(d: u32) -> Result<f64> {
    match d {
        0 => Err(Error::Domain("d must be a positive integer".into())),
        1 => Ok(0.0),
        _ => {
            let dm = (d - 1) as f64;
            Ok(dm / (dm + (d as f64 / dm).exp()))
        }
    }
}

/// Convexity class of `psi_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexityClass {
    StrictlyConvex,
    MarginallyConvex,
    NonConvex,
}

/// Full analysis record of `psi_p(x) = h_p(x^{1/d})`.
///
/// `inflection` holds the zeros `(x1, x2)` of `psi''` and `window` the touch
/// points `(a, b)` of the lower common tangent; the tangent line is the
/// minorant on `(a, b)`. The two pairs are distinct objects: the window
/// always contains the inflection interval.
#[derive(Debug, Clone)]
pub struct PsiProfile {
    pub p: f64,
    pub d: u32,
    pub class: ConvexityClass,
    pub inflection: Option<(f64, f64)>,
    pub window: Option<(f64, f64)>,
    pub tangent_slope: f64,
    pub tangent_intercept: f64,
}

impl PsiProfile {
    pub fn psi(&self, x: f64) -> f64 {
        psi_eval(self.p, self.d, x).map(|(v, _, _)| v).unwrap_or(f64::NAN)
    }
}

// Sign function of psi'' in the u = x^{1/d} coordinate:
// sign(psi''(u^d)) = sign(G(u)), G(u) = 1/(1-u) - (d-1) h_p'(u).
fn curvature_sign_fn(p: f64, d: u32) -> impl Fn(f64) -> f64 {
    let dm = (d - 1) as f64;
    move |u: f64| 1.0 / (1.0 - u) - dm * kl_d1(p, u)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Classifies `psi_p` and, in the non-convex case, locates the inflection
/// points (bisection on the curvature sign, tolerance 1e-12) and the
/// tangency window (slope bisection plus Newton polish on the two-point
/// tangency system, tolerance 1e-11).
pub fn analyze_psi(p: f64, d: u32) -> Result<PsiProfile> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
    }
    if d == 0 {
        return Err(Error::Domain("d must be a positive integer".into()));
    }
    let p0 = p_zero(d)?;
    let trivial = PsiProfile {
        p,
        d,
        class: ConvexityClass::StrictlyConvex,
        inflection: None,
        window: None,
        tangent_slope: f64::NAN,
        tangent_intercept: f64::NAN,
    };
    if d == 1 || p > p0 + 1e-12 {
        return Ok(trivial);
    }
    if (p - p0).abs() <= 1e-12 {
        return Ok(PsiProfile {
            class: ConvexityClass::MarginallyConvex,
            ..trivial
        });
    }

    // Non-convex: G is decreasing then increasing with minimum at
    // u* = (d-1)/d, negative there, so it has exactly two roots.
    let g = curvature_sign_fn(p, d);
    let ustar = (d as f64 - 1.0) / d as f64;
    let u1 = bisect(&g, p, ustar, 1e-15);
    let u2 = bisect(&g, ustar, 1.0 - 1e-13, 1e-15);
    let df = d as f64;
    let x1 = u1.powf(df);
    let x2 = u2.powf(df);

    let psi = |x: f64| psi_eval(p, d, x).unwrap().0;
    let dpsi = |x: f64| psi_eval(p, d, x).unwrap().1;
    let ddpsi = |x: f64| psi_eval(p, d, x).unwrap().2;

    // Tangency window: common tangent touching the left convex branch at
    // a in (p^d, x1) and the right one at b in (x2, 1). Parametrized by the
    // slope, the defect D(s) = psi(b)-psi(a) - s (b-a) is strictly
    // decreasing, so bisection brackets the root; Newton then polishes the
    // 2x2 tangency system.
    let pd = p.powf(df);
    let a_of = |s: f64| bisect(|x| dpsi(x) - s, pd + 1e-15, x1, 1e-15);
    let b_of = |s: f64| bisect(|x| dpsi(x) - s, x2, 1.0 - 1e-14, 1e-15);
    let defect = |s: f64| {
        let a = a_of(s);
        let b = b_of(s);
        psi(b) - psi(a) - s * (b - a)
    };
    let slope = bisect(defect, dpsi(x2), dpsi(x1), 1e-14);
    let mut a = a_of(slope);
    let mut b = b_of(slope);

    // Newton polish of psi'(a) = psi'(b) = (psi(b)-psi(a))/(b-a).
    let mut converged = false;
    for _ in 0..200 {
        let (fa, fpa, fppa) = psi_eval(p, d, a)?;
        let (fb, fpb, fppb) = psi_eval(p, d, b)?;
        let r1 = fpa * (b - a) - (fb - fa);
        let r2 = fpb * (b - a) - (fb - fa);
        if r1.abs() < 1e-11 && r2.abs() < 1e-11 {
            converged = true;
            break;
        }
        let j11 = fppa * (b - a);
        let j12 = fpa - fpb;
        let j21 = fpa - fpb;
        let j22 = fppb * (b - a);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (r1 * j22 - r2 * j12) / det;
        let db = (j11 * r2 - j21 * r1) / det;
        a = (a - da).clamp(pd * 1e-6, x1);
        b = (b - db).clamp(x2, 1.0 - 1e-15);
    }
    if !converged {
        // Fall back to the bisection envelope solution.
        a = a_of(slope);
        b = b_of(slope);
        let r1 = dpsi(a) * (b - a) - (psi(b) - psi(a));
        if r1.abs() > 1e-8 {
            return Err(Error::NonConvergence {
                what: "tangency window".into(),
                iterations: 200,
            });
        }
    }
    let _ = ddpsi; // curvature exposed through psi_eval

    let slope = (psi(b) - psi(a)) / (b - a);
    Ok(PsiProfile {
        p,
        d,
        class: ConvexityClass::NonConvex,
        inflection: Some((x1, x2)),
        window: Some((a, b)),
        tangent_slope: slope,
        tangent_intercept: psi(a) - slope * a,
    })
}

/// Whether `(r^d, h_p(r))` lies on the convex minorant of `psi_p`.
///
/// True exactly when `r^d` is outside the open tangency window, with a
/// 1e-10 boundary tolerance; always true for convex profiles.
pub fn on_minorant(p: f64, d: u32, r: f64) -> Result<bool> {
    let profile = analyze_psi(p, d)?;
    Ok(on_minorant_profile(&profile, r))
}

pub fn on_minorant_profile(profile: &PsiProfile, r: f64) -> bool {
    match profile.window {
        None => true,
        Some((a, b)) => {
            let x = r.powf(profile.d as f64);
            x <= a + 1e-10 || x >= b - 1e-10
        }
    }
}

/// The convex minorant `psi_hat_p(x)`: equals `psi_p` outside the tangency
/// window and the common tangent line inside it.
pub fn minorant_value(profile: &PsiProfile, x: f64) -> Result<f64> {
    match profile.window {
        Some((a, b)) if x > a && x < b => Ok(profile.tangent_intercept + profile.tangent_slope * x),
        _ => Ok(psi_eval(profile.p, profile.d, x)?.0),
    }
}

/// Small-p limit of `I_{W0}(f) / log(1/p)` for a base graphon whose free
/// blocks share a single value: `(t(E,f) - |Omega_1|) / 2`.
pub fn limit_entropy_ratio(w0: &StepGraphon, f: &StepGraphon) -> Result<f64> {
    let (rw, rf) = common_refinement(w0, f);
    let mask = OmegaMask::from_graphon(&rw);
    let m = rw.block_count();
    let mut free_value: Option<f64> = None;
    for i in 0..m {
        for j in 0..m {
            if mask.tag(i, j) == BlockTag::Free {
                let v = rw.value(i, j);
                match free_value {
                    None => free_value = Some(v),
                    Some(prev) if prev != v => {
                        return Err(Error::Domain(format!(
                            "free blocks carry mixed values {prev} and {v}"
                        )))
                    }
                    _ => {}
                }
            }
        }
    }
    if !in_omega(&rw, &rf) {
        return Err(Error::Domain(
            "graphon lies outside the support class of the base".into(),
        ));
    }
    let widths = rw.widths_f64();
    Ok(0.5 * (rf.one_norm() - mask.one_measure(&widths)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn half() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    #[test]
    fn kl_basics() {
        assert_eq!(bernoulli_kl(0.3, 0.3).unwrap(), 0.0);
        let v = bernoulli_kl(0.5, 1.0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(bernoulli_kl(0.0, 0.5).is_err());
        assert!(bernoulli_kl(1.0, 0.5).is_err());
    }

    #[test]
    fn kl_matches_quadrature_of_second_derivative() {
        // h_p(u) = int_p^u int_p^s h''(w) dw ds, evaluated with Simpson.
        let (p, u) = (0.3, 0.7);
        let n = 4000;
        let inner = |s: f64| kl_d1(p, s);
        let mut acc = 0.0;
        let step = (u - p) / n as f64;
        for k in 0..n {
            let a = p + k as f64 * step;
            let b = a + step;
            acc += (inner(a) + 4.0 * inner(0.5 * (a + b)) + inner(b)) * step / 6.0;
        }
        assert!((acc - bernoulli_kl(p, u).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn psi_minimum_at_p_pow_d() {
        let (p, d) = (0.3, 3u32);
        let (v, dv, _) = psi_eval(p, d, p.powi(3)).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(dv.abs() < 1e-10);
    }

    #[test]
    fn psi_d1_is_plain_kl_and_convex() {
        for &x in &[0.1, 0.4, 0.9] {
            let (v, _, dd) = psi_eval(0.25, 1, x).unwrap();
            assert!((v - bernoulli_kl(0.25, x).unwrap()).abs() < 1e-14);
            assert!(dd > 0.0);
        }
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let (p, d, x) = (0.05, 2u32, 0.5);
        let h = 1e-6;
        let f = |x: f64| psi_eval(p, d, x).unwrap().0;
        let fp = |x: f64| psi_eval(p, d, x).unwrap().1;
        let (_, d1, d2) = psi_eval(p, d, x).unwrap();
        let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
        // Second derivative differenced from the first: a plain second
        // difference of values drowns in roundoff at this step size.
        let fd2 = (fp(x + h) - fp(x - h)) / (2.0 * h);
        assert!((d1 - fd1).abs() / d1.abs().max(1.0) < 1e-5);
        assert!((d2 - fd2).abs() / d2.abs().max(1.0) < 1e-5);
    }

    #[test]
    fn p_zero_closed_form_d2() {
        let p0 = p_zero(2).unwrap();
        assert!((p0 - 1.0 / (1.0 + std::f64::consts::E.powi(2))).abs() < 1e-15);
        assert!((p0 - 0.1192029220221175).abs() < 1e-9);
    }

    #[test]
    fn p_zero_monotone_and_matches_sign_scan() {
        let mut prev = 0.0;
        for d in 2..=10u32 {
            let p0 = p_zero(d).unwrap();
            assert!(p0 > prev, "p0 not increasing at d={d}");
            prev = p0;
            // Grid sign-scan at p0 +- 1e-3: curvature dips negative only below p0.
            for (p, expect_dip) in [(p0 - 1e-3, true), (p0 + 1e-3, false)] {
                let g = curvature_sign_fn(p, d);
                let dip = (1..100_000).any(|k| g(k as f64 / 100_000.0) < 0.0);
                assert_eq!(dip, expect_dip, "d={d} p={p}");
            }
        }
    }

    #[test]
    fn analyze_d1_is_trivially_convex() {
        let prof = analyze_psi(0.01, 1).unwrap();
        assert_eq!(prof.class, ConvexityClass::StrictlyConvex);
        assert!(prof.window.is_none());
    }

    #[test]
    fn analyze_above_threshold_is_convex() {
        let prof = analyze_psi(0.3, 2).unwrap();
        assert_eq!(prof.class, ConvexityClass::StrictlyConvex);
        // grid scan confirms positive curvature
        for k in 1..10_000 {
            let x = k as f64 / 10_000.0;
            assert!(psi_eval(0.3, 2, x).unwrap().2 > 0.0);
        }
    }

    #[test]
    fn analyze_non_convex_geometry() {
        let prof = analyze_psi(0.05, 2).unwrap();
        assert_eq!(prof.class, ConvexityClass::NonConvex);
        let (x1, x2) = prof.inflection.unwrap();
        let (a, b) = prof.window.unwrap();
        assert!(a <= x1 && x1 <= x2 && x2 <= b, "a={a} x1={x1} x2={x2} b={b}");
        // Curvature signs around the inflection pair.
        for &(x, positive) in &[(x1 * 0.5, true), (0.5 * (x1 + x2), false), (x2 + 0.5 * (1.0 - x2), true)] {
            let dd = psi_eval(0.05, 2, x).unwrap().2;
            assert_eq!(dd > 0.0, positive, "x={x} psi''={dd}");
        }
        // Tangent touches at a and b and stays below psi on a grid.
        let line = |x: f64| prof.tangent_intercept + prof.tangent_slope * x;
        assert!((line(a) - prof.psi(a)).abs() < 1e-9);
        assert!((line(b) - prof.psi(b)).abs() < 1e-9);
        for k in 0..=10_000 {
            let x = k as f64 / 10_000.0;
            assert!(prof.psi(x) - line(x) > -1e-10, "tangent above psi at {x}");
        }
    }

    #[test]
    fn minorant_below_psi_and_convex() {
        let prof = analyze_psi(0.05, 2).unwrap();
        let n = 10_000;
        let vals: Vec<f64> = (0..=n)
            .map(|k| minorant_value(&prof, k as f64 / n as f64).unwrap())
            .collect();
        for (k, &v) in vals.iter().enumerate() {
            let x = k as f64 / n as f64;
            assert!(v <= prof.psi(x) + 1e-10);
        }
        for k in 1..n {
            assert!(vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-12);
        }
        let (a, b) = prof.window.unwrap();
        assert!((minorant_value(&prof, a).unwrap() - prof.psi(a)).abs() < 1e-9);
        assert!((minorant_value(&prof, b).unwrap() - prof.psi(b)).abs() < 1e-9);
        let mid = 0.5 * (a + b);
        assert!(minorant_value(&prof, mid).unwrap() < prof.psi(mid) - 1e-6);
    }

    #[test]
    fn minorant_equals_psi_when_convex() {
        let prof = analyze_psi(0.3, 2).unwrap();
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            assert_eq!(minorant_value(&prof, x).unwrap(), prof.psi(x));
        }
    }

    #[test]
    fn on_minorant_endpoints_and_window() {
        assert!(on_minorant(0.05, 2, 0.05).unwrap());
        assert!(on_minorant(0.05, 2, 1.0).unwrap());
        let prof = analyze_psi(0.05, 2).unwrap();
        let (a, b) = prof.window.unwrap();
        let r_mid = (0.5 * (a + b)).sqrt();
        assert!(!on_minorant(0.05, 2, r_mid).unwrap());
        // Convex profile: everything on the minorant.
        for k in 0..=100 {
            let r = 0.3 + 0.7 * k as f64 / 100.0;
            assert!(on_minorant(0.3, 2, r).unwrap());
        }
    }

    #[test]
    fn limit_ratio_examples() {
        // Base with p-blocks only: ratio = p * |free| / 2.
        let w0 = StepGraphon::bipartite(half(), 1e-6).unwrap();
        let ratio = limit_entropy_ratio(&w0, &w0).unwrap();
        assert!((ratio - 0.5 * 1e-6 * 0.5).abs() < 1e-18);
        // Direct entropy at p = 1e-6 is within 1% of ratio * log(1/p).
        let i = crate::graphon::relative_entropy(&w0, &w0);
        assert_eq!(i, 0.0); // f = W0 has zero entropy; use a saturated f instead
        let f1 = StepGraphon::bipartite(half(), 1.0).unwrap();
        let ratio1 = limit_entropy_ratio(&w0, &f1).unwrap();
        let i1 = crate::graphon::relative_entropy(&w0, &f1);
        let approx = i1 / (1e-6f64.recip()).ln();
        assert!(((approx - ratio1) / ratio1).abs() < 0.01, "gap {}", (approx - ratio1) / ratio1);
        // Zero everywhere on free blocks, no one blocks: ratio 0.
        let f0 = StepGraphon::bipartite(half(), 0.0).unwrap();
        assert_eq!(limit_entropy_ratio(&w0, &f0).unwrap(), 0.0);
    }

    #[test]
    fn kl_nonnegative_and_strictly_convex_on_grid() {
        for k in 1..500 {
            let p = k as f64 / 500.0;
            if !(0.0 < p && p < 1.0) {
                continue;
            }
            for j in 0..=100 {
                let u = j as f64 / 100.0;
                let h = bernoulli_kl(p, u).unwrap();
                assert!(h >= 0.0);
                if (u - p).abs() > 1e-9 {
                    assert!(h > 0.0);
                }
                if u > 0.0 && u < 1.0 {
                    assert!(kl_d2(u) > 0.0);
                }
            }
        }
    }

    #[test]
    fn psi_monotone_around_its_minimum() {
        let (p, d) = (0.2f64, 3u32);
        let pivot = p.powi(3);
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let x = pivot * k as f64 / 1000.0;
            let v = psi_eval(p, d, x).unwrap().0;
            assert!(v <= prev + 1e-12, "psi not decreasing before p^d");
            prev = v;
        }
        prev = 0.0;
        for k in 0..=1000 {
            let x = pivot + (1.0 - pivot) * k as f64 / 1000.0;
            let v = psi_eval(p, d, x).unwrap().0;
            assert!(v >= prev - 1e-12, "psi not increasing after p^d");
            prev = v;
        }
    }

    #[test]
    fn jensen_step_lower_bounds_entropy() {
        // For f supported on the off-diagonal blocks of a bipartite base,
        // the entropy dominates gamma (1-gamma) psi-hat(z) where z averages
        // f^d over one cross block.
        use crate::graphon::relative_entropy;
        use crate::rng::CounterRng;
        use num_bigint::BigInt;
        let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
        let mut rng = CounterRng::new(0x7e57);
        for trial in 0..100 {
            let p = 0.02 + 0.3 * rng.uniform();
            let d = if trial % 2 == 0 { 2u32 } else { 3 };
            let w0 = StepGraphon::bipartite(half(), p).unwrap();
            let widths = vec![quarter.clone(); 4];
            let mut values = vec![vec![0.0; 4]; 4];
            for i in 0..2 {
                for j in 2..4 {
                    let v = rng.uniform();
                    values[i][j] = v;
                    values[j][i] = v;
                }
            }
            let f = StepGraphon::new(widths, values).unwrap();
            // Block average of f^d over the upper cross block.
            let mut z = 0.0;
            for i in 0..2 {
                for j in 2..4 {
                    z += 0.25 * 0.25 * f.value(i, j).powi(d as i32);
                }
            }
            z /= 0.25;
            let profile = analyze_psi(p, d).unwrap();
            let bound = 0.25 * minorant_value(&profile, z).unwrap();
            let entropy = relative_entropy(&w0, &f);
            assert!(
                entropy >= bound - 1e-12,
                "trial {trial}: entropy {entropy} below Jensen bound {bound}"
            );
        }
    }

    #[test]
    fn limit_ratio_rejects_mixed_free_values() {
        let w0 = StepGraphon::uniform(vec![vec![0.2, 0.4], vec![0.4, 0.2]]).unwrap();
        assert!(limit_entropy_ratio(&w0, &w0).is_err());
    }
}
