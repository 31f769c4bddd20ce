//! Rearrangement-invariant functionals of decreasing step functions.
//!
//! Everything here consumes the exact representations from
//! [`crate::rearrangement`]: plain-power integrals are summed in closed
//! form, logarithmic weights go through the substitution `t = e^{1-u}`
//! (so the integrand becomes a weight times `e^{-u/p}` on a half-line,
//! exactly the shape [`crate::quadrature`] integrates with certified
//! tails), and suprema are resolved per piece by monotonicity analysis,
//! never by grid sampling.

use crate::admissible::AdmissibleFunction;
use crate::quadrature::{exp_poly_integral, exp_weighted_integral, Tolerance};
use crate::rearrangement::{DecreasingStep, PiecewiseHyperbolic};
use crate::InvalidInput;
use serde::{Deserialize, Serialize};

pub use crate::logs::logk;

/// Parameters of the `L^{p,q}` scale; `q` may be infinite (the weak space).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    pub p: f64,
    #[serde(with = "crate::extreal")]
    pub q: f64,
}

impl LorentzParams {
    pub fn new(p: f64, q: f64) -> Result<Self, InvalidInput> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(InvalidInput::Parameter(format!(
                "Lorentz p = {p} must be finite and >= 1"
            )));
        }
        if q.is_nan() || q <= 0.0 {
            return Err(InvalidInput::Parameter(format!(
                "Lorentz q = {q} must be positive"
            )));
        }
        Ok(LorentzParams { p, q })
    }
}

/// `(∫_0^∞ t^{q/p-1} f*(t)^q dt)^{1/q}`, summed in closed form cell by
/// cell. `q = ∞` falls back to [`weak_lorentz_norm`].
pub fn lorentz_norm(f: &DecreasingStep, params: LorentzParams) -> f64 {
    let LorentzParams { p, q } = params;
    if q.is_infinite() {
        return weak_lorentz_norm(f, p);
    }
    let mut total = 0.0;
    for (lo, hi, v) in f.cells() {
        if v > 0.0 {
            total += v.powf(q) * (p / q) * (hi.powf(q / p) - lo.powf(q / p));
        }
    }
    if q == 1.0 {
        total
    } else {
        total.powf(1.0 / q)
    }
}

/// `sup_t t^{1/p} f*(t)`. On each cell the objective increases in `t`, so
/// the sup sits at a right breakpoint and the scan is exact.
pub fn weak_lorentz_norm(f: &DecreasingStep, p: f64) -> f64 {
    assert!(p >= 1.0, "weak Lorentz exponent must be >= 1");
    f.cells()
        .map(|(_, hi, v)| hi.powf(1.0 / p) * v)
        .fold(0.0, f64::max)
}

/// `∫_0^∞ f*(t) (1 + log⁺(1/t))^α dt`. Integer `α` is summed exactly
/// (after `t = e^{1-u}` each cell is a polynomial-times-exponential
/// integral); fractional `α` goes through certified quadrature.
pub fn llogl_norm(f: &DecreasingStep, alpha: f64) -> f64 {
    assert!(
        alpha.is_finite() && alpha >= 0.0,
        "log exponent must be >= 0"
    );
    if alpha == 0.0 {
        return f.integral();
    }
    let tol = Tolerance::default();
    let exact = alpha.fract() == 0.0 && alpha <= 16.0;
    let mut total = 0.0;
    for (lo, hi, v) in f.cells() {
        if v == 0.0 {
            continue;
        }
        if lo < 1.0 {
            // (1 - ln t)^α dt  =  u^α e^{1-u} du under t = e^{1-u}.
            let u_lo = 1.0 - hi.min(1.0).ln();
            let u_hi = if lo == 0.0 {
                f64::INFINITY
            } else {
                1.0 - lo.ln()
            };
            let piece = if exact {
                exp_poly_integral(alpha as u32, 1.0, 1.0, u_lo, u_hi)
            } else {
                exp_weighted_integral(|u| u.powf(alpha), alpha, 1.0, 1.0, u_lo, u_hi, tol)
                    .expect("log-weight quadrature did not converge")
                    .value
            };
            total += v * piece;
        }
        if hi > 1.0 {
            total += v * (hi - lo.max(1.0));
        }
    }
    total
}

/// `∫_0^∞ f*(t) · log_1(1/t) · log_3(1/t) dt`. Both logs equal 1 past
/// `t = 1`; below it the substitution `t = e^{-u}` turns the integrand
/// into `(1+u)(1 + ln(1 + ln(1+u))) e^{-u}`, integrated with a certified
/// tail (the weight sits under `u²` from the cutoff on).
pub fn llogl_log3_norm(f: &DecreasingStep) -> f64 {
    let tol = Tolerance::default();
    let weight = |u: f64| {
        let l3 = 1.0 + (1.0 + (1.0 + u).ln()).ln();
        (1.0 + u) * l3
    };
    let mut total = 0.0;
    for (lo, hi, v) in f.cells() {
        if v == 0.0 {
            continue;
        }
        if lo < 1.0 {
            let u_lo = -hi.min(1.0).ln();
            let u_hi = if lo == 0.0 { f64::INFINITY } else { -lo.ln() };
            let piece = exp_weighted_integral(weight, 2.0, 1.0, 0.0, u_lo, u_hi, tol)
                .expect("iterated-log quadrature did not converge")
                .value;
            total += v * piece;
        }
        if hi > 1.0 {
            total += v * (hi - lo.max(1.0));
        }
    }
    total
}

/// Sup of `obj` over `[lo, hi]` for an objective whose derivative carries
/// the sign of `slope` and changes sign at most once. Endpoint values are
/// supplied by the caller (they may be one-sided limits); an interior
/// maximum shows up as a `(+,-)` sign pattern and is pinned by bisection.
fn piece_sup(
    obj: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    left_value: f64,
    right_value: f64,
) -> f64 {
    let mut best = left_value.max(right_value);
    if slope(lo) > 0.0 && slope(hi) < 0.0 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = if a > 0.0 {
                (a * b).sqrt()
            } else {
                0.5 * (a + b)
            };
            if slope(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        best = best.max(obj(0.5 * (a + b)));
    }
    best
}

/// `sup_{t>0} φ(t) f**(t)` with `φ(t) = t / (1 + log⁺ t)`. Below `t = 1`
/// the objective is the running integral `a + bt` (increasing, so only the
/// cell's right end matters); past it each hyperbolic cell contributes a
/// one-bump objective `(a + bt)/(1 + ln t)` resolved analytically.
pub fn mphi_norm(f: &PiecewiseHyperbolic) -> f64 {
    let mut best = 0.0f64;
    for p in f.pieces() {
        if p.lo < 1.0 {
            best = best.max(p.a + p.b * p.hi.min(1.0));
        }
        let lo = p.lo.max(1.0);
        if p.hi > lo {
            let obj = |t: f64| (p.a + p.b * t) / (1.0 + t.ln());
            let slope = |t: f64| p.b * t * t.ln() - p.a;
            let (probe_hi, right) = if p.hi.is_finite() {
                (p.hi, obj(p.hi))
            } else if p.b > 0.0 {
                (1e300, f64::INFINITY)
            } else {
                (1e300, 0.0)
            };
            best = best.max(piece_sup(obj, slope, lo, probe_hi, obj(lo), right));
        }
    }
    best
}

/// `sup_{0<t<1} f**(t) / (1 + log(1/t))`, per hyperbolic cell. At the
/// origin the flat leading cell tends to 0; a (degenerate) input whose
/// first cell is not flat diverges and reports `∞`.
pub fn lexp_norm(f: &PiecewiseHyperbolic) -> f64 {
    let mut best = 0.0f64;
    for p in f.pieces() {
        if p.lo >= 1.0 {
            break;
        }
        let hi = p.hi.min(1.0);
        let obj = |t: f64| (p.a / t + p.b) / (1.0 - t.ln());
        let slope = |t: f64| p.a * t.ln() + p.b * t;
        let left = if p.lo > 0.0 {
            obj(p.lo)
        } else if p.a > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        best = best.max(piece_sup(obj, slope, p.lo, hi, left, obj(hi)));
    }
    best
}

/// `∫_0^∞ φ(1 + log⁺(1/r)) f*(r) r^{1/p-1} dr`: the `L^{p,1}`-type norm
/// with an extra admissible weight on the logarithmic scale near 0.
/// Under `r = e^{1-u}` the inner part becomes `φ(u) e^{(1-u)/p}`, exact
/// for pure-power weights; past `r = 1` the weight is constant and the
/// power integral is closed-form.
pub fn philog_norm(f: &DecreasingStep, p: f64, phi: &AdmissibleFunction) -> f64 {
    assert!(
        p.is_finite() && p >= 1.0,
        "philog exponent must be finite and >= 1"
    );
    let tol = Tolerance::default();
    let at_one = phi.eval(1.0);
    let mut total = 0.0;
    for (lo, hi, v) in f.cells() {
        if v == 0.0 {
            continue;
        }
        if lo < 1.0 {
            let u_lo = 1.0 - hi.min(1.0).ln();
            let u_hi = if lo == 0.0 {
                f64::INFINITY
            } else {
                1.0 - lo.ln()
            };
            total += v * phi
                .weighted_exp_integral(0, 1.0 / p, 1.0, u_lo, u_hi, tol)
                .value;
        }
        if hi > 1.0 {
            let l = lo.max(1.0);
            total += v * at_one * p * (hi.powf(1.0 / p) - l.powf(1.0 / p));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::rearrangement::StepFunction;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn chi(b: f64) -> DecreasingStep {
        DecreasingStep::new([(b, 1.0)]).unwrap()
    }

    fn zero() -> DecreasingStep {
        DecreasingStep::new([]).unwrap()
    }

    #[test]
    fn lorentz_examples() {
        // χ_(0,4], p=2, q=1: ∫_0^4 t^{-1/2} dt = 4.
        assert_eq!(
            lorentz_norm(&chi(4.0), LorentzParams::new(2.0, 1.0).unwrap()),
            4.0
        );
        // p = q: plain L^p of an indicator.
        assert_relative_eq!(
            lorentz_norm(&chi(8.0), LorentzParams::new(3.0, 3.0).unwrap()),
            2.0,
            max_relative = 1e-12
        );
        assert_eq!(
            lorentz_norm(&zero(), LorentzParams::new(2.0, 1.0).unwrap()),
            0.0
        );
    }

    #[test]
    fn lorentz_with_infinite_q_is_the_weak_norm() {
        let f = DecreasingStep::new([(1.0, 2.0), (4.0, 1.0)]).unwrap();
        let params = LorentzParams::new(2.0, f64::INFINITY).unwrap();
        assert_eq!(lorentz_norm(&f, params), weak_lorentz_norm(&f, 2.0));
    }

    #[test]
    fn weak_lorentz_examples() {
        assert_eq!(weak_lorentz_norm(&chi(1.0), 2.0), 1.0);
        // max(1^{1/2}·2, 4^{1/2}·1) = 2.
        let f = DecreasingStep::new([(1.0, 2.0), (4.0, 1.0)]).unwrap();
        assert_eq!(weak_lorentz_norm(&f, 2.0), 2.0);
        assert_relative_eq!(
            weak_lorentz_norm(&f.scale(3.0), 2.0),
            6.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn llogl_integer_anchors() {
        // ∫_0^1 (1 - ln t) dt = 2, exactly on the polynomial path.
        assert_eq!(llogl_norm(&chi(1.0), 1.0), 2.0);
        // χ_(0,e]: the part past t=1 contributes plain length e - 1.
        assert_abs_diff_eq!(llogl_norm(&chi(E), 1.0), E + 1.0, epsilon = 1e-13);
    }

    #[test]
    fn llogl_at_zero_is_the_plain_integral() {
        let f = DecreasingStep::new([(0.5, 3.0), (2.0, 1.0)]).unwrap();
        assert_eq!(llogl_norm(&f, 0.0), f.integral());
    }

    #[test]
    fn llogl_quadrature_path_matches_the_exact_path() {
        let f = DecreasingStep::new([(0.5, 3.0), (2.0, 1.0)]).unwrap();
        let exact = llogl_norm(&f, 1.0);
        let quad = llogl_norm(&f, 1.0 + 1e-12);
        assert_relative_eq!(exact, quad, max_relative = 1e-7);
    }

    #[test]
    fn llogl_log3_of_zero() {
        assert_eq!(llogl_log3_norm(&zero()), 0.0);
    }

    #[test]
    fn llogl_log3_indicator_cross_checked_in_t_space() {
        let v = llogl_log3_norm(&chi(1.0));
        // The integrand dominates (1 - ln t), whose integral over (0,1) is 2.
        assert!(v > 2.0);
        // Independent oracle: integrate in t directly (the missed mass below
        // 1e-12 is O(1e-9) for this integrand).
        let direct = integrate(
            |t| logk(1, 1.0 / t) * logk(3, 1.0 / t),
            1e-12,
            1.0,
            Tolerance::default(),
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(v, direct, epsilon = 1e-6);
    }

    #[test]
    fn llogl_log3_is_plain_length_past_one() {
        // Both logs are 1 for t >= 1, so widening the support through
        // (1, b] adds exactly the extra length.
        let base = llogl_log3_norm(&chi(1.0));
        let wide = llogl_log3_norm(&chi(7.5));
        assert_abs_diff_eq!(wide - base, 6.5, epsilon = 1e-12);
    }

    #[test]
    fn mphi_of_the_unit_indicator_average() {
        // f** = min(1, 1/t): t·f**/(1+ln t) peaks at t = 1 with value 1.
        assert_eq!(mphi_norm(&chi(1.0).double_star()), 1.0);
        assert_eq!(mphi_norm(&zero().double_star()), 0.0);
    }

    #[test]
    fn mphi_of_a_constant_average_peaks_at_the_support_edge() {
        let t_edge = E * E;
        let f = DecreasingStep::new([(t_edge, 2.0)]).unwrap();
        // On (0, T] the average is 2, so the sup is 2T/(1+ln T) at t = T.
        assert_relative_eq!(
            mphi_norm(&f.double_star()),
            2.0 * t_edge / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lexp_of_the_unit_indicator_average() {
        // sup_{t<1} 1/(1 - ln t) is approached at t → 1⁻.
        assert_eq!(lexp_norm(&chi(1.0).double_star()), 1.0);
        assert_eq!(lexp_norm(&zero().double_star()), 0.0);
    }

    #[test]
    fn philog_identity_weight_anchor() {
        // φ = id, p = 2, χ_(0,1]: ∫_0^1 (1 - ln r) r^{-1/2} dr = 6, exact.
        let v = philog_norm(&chi(1.0), 2.0, &AdmissibleFunction::identity());
        assert_eq!(v, 6.0);
    }

    #[test]
    fn philog_with_trivial_weight_is_lorentz_q1() {
        let f = DecreasingStep::new([(0.25, 4.0), (3.0, 1.5), (10.0, 0.5)]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let a = philog_norm(&f, p, &AdmissibleFunction::one());
            let b = lorentz_norm(&f, LorentzParams::new(p, 1.0).unwrap());
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert_eq!(philog_norm(&zero(), 2.0, &AdmissibleFunction::one()), 0.0);
    }

    #[test]
    fn norms_are_invariant_under_atom_order() {
        use crate::rearrangement::SimpleFunction;
        let a = SimpleFunction::new([(2.0, 0.5), (1.0, 1.0), (3.0, 0.25)]).unwrap();
        let b = SimpleFunction::new([(3.0, 0.25), (1.0, 1.0), (2.0, 0.5)]).unwrap();
        let (fa, fb) = (a.rearrange(), b.rearrange());
        let params = LorentzParams::new(2.0, 1.0).unwrap();
        assert_eq!(lorentz_norm(&fa, params), lorentz_norm(&fb, params));
        assert_eq!(llogl_norm(&fa, 1.0), llogl_norm(&fb, 1.0));
    }

    // ------------------------------------------------------------------
    // Property tests. Dyadic data keeps the step calculus exact, so the
    // comparisons below can use tight tolerances.

    fn dyadic_steps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        // (value, bump, length) triples, all dyadic.
        prop::collection::vec((1u32..=10240, 0u32..=10240, 16u32..=12800), 1..10).prop_map(|raw| {
            raw.into_iter()
                .map(|(v, d, l)| (v as f64 / 1024.0, d as f64 / 1024.0, l as f64 / 128.0))
                .collect()
        })
    }

    fn build_pair(cells: &[(f64, f64, f64)]) -> (DecreasingStep, DecreasingStep) {
        let mut b = 0.0;
        let mut f_pairs = Vec::new();
        let mut g_pairs = Vec::new();
        for &(v, d, l) in cells {
            b += l;
            f_pairs.push((b, v));
            g_pairs.push((b, v + d));
        }
        let f = StepFunction::new(f_pairs).unwrap().rearrange();
        let g = StepFunction::new(g_pairs).unwrap().rearrange();
        (f, g)
    }

    fn all_norms(f: &DecreasingStep) -> Vec<f64> {
        let fss = f.double_star();
        vec![
            lorentz_norm(f, LorentzParams::new(2.0, 1.0).unwrap()),
            lorentz_norm(f, LorentzParams::new(3.0, 2.0).unwrap()),
            weak_lorentz_norm(f, 2.0),
            llogl_norm(f, 1.0),
            llogl_log3_norm(f),
            mphi_norm(&fss),
            lexp_norm(&fss),
            philog_norm(f, 2.0, &AdmissibleFunction::x_log()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norms_are_homogeneous(cells in dyadic_steps(), ck in 1u32..=256) {
            let c = ck as f64 / 16.0;
            let (f, _) = build_pair(&cells);
            let scaled = f.scale(c);
            for (a, b) in all_norms(&scaled).into_iter().zip(all_norms(&f)) {
                prop_assert!((a - c * b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "scaled {a} vs {c} x {b}");
            }
        }

        #[test]
        fn norms_are_lattice_monotone(cells in dyadic_steps()) {
            // g dominates f pointwise, hence g* dominates f*, hence every
            // norm of g dominates the norm of f.
            let (f, g) = build_pair(&cells);
            for (nf, ng) in all_norms(&f).into_iter().zip(all_norms(&g)) {
                prop_assert!(nf <= ng * (1.0 + 1e-9) + 1e-12, "{nf} > {ng}");
            }
        }
    }
}
