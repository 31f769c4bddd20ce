//! The log-weighted Hardy operator pair and its kernel calculus.
//!
//! For exponents `1 <= p0 < p1 <= ∞` and an admissible weight `φ`,
//!
//! ```text
//! P f(t) = t^(-1/p0) ∫_0^t w(1 - log(s/t)) f(s) s^(1/p0 - 1) ds
//! Q f(t) = t^(-1/p1) ∫_t^∞ f(s) s^(1/p1 - 1) ds     (p1 = ∞: ∫_t^∞ f ds/s)
//! R f    = P f + Q f
//! ```
//!
//! where `w(u) = u^δ φ(u)` with the switch `δ ∈ {0, 1}` (the `δ = 1`
//! variant only pairs with `p0 = 1`). Inputs are piecewise-hyperbolic
//! (`a/s + b` per cell), which covers step functions and running averages
//! alike; on each cell the substitution `s = t e^{1-u}` turns `P` into a
//! weight-times-exponential integral on `[1, ∞)`, exact for pure-power
//! weights and certified quadrature otherwise, while `Q` is a closed-form
//! power integral. Everything is deterministic, including the parallel
//! grid sweeps (ordered collection, fixed reduction order).

use crate::admissible::{AdmissibleFunction, PhiDescription};
use crate::quadrature::{integrate, Tolerance};
use crate::rearrangement::{DecreasingStep, HyperbolicPiece, PiecewiseHyperbolic, StepFunction};
use crate::InvalidInput;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exponents, weight and weight-power switch defining the operator triple.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    p0: f64,
    p1: f64,
    phi: AdmissibleFunction,
    delta: u8,
    quad: Tolerance,
}

#[derive(Serialize, Deserialize)]
struct KernelSpecRepr {
    p0: f64,
    #[serde(with = "crate::extreal")]
    p1: f64,
    phi: PhiDescription,
    #[serde(default)]
    delta: u8,
}

impl Serialize for KernelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        KernelSpecRepr {
            p0: self.p0,
            p1: self.p1,
            phi: self.phi.describe(),
            delta: self.delta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = KernelSpecRepr::deserialize(d)?;
        let phi = AdmissibleFunction::from_description(&repr.phi).map_err(D::Error::custom)?;
        KernelSpec::new(repr.p0, repr.p1, phi, repr.delta).map_err(D::Error::custom)
    }
}

impl KernelSpec {
    pub fn new(p0: f64, p1: f64, phi: AdmissibleFunction, delta: u8) -> Result<Self, InvalidInput> {
        if !(p0.is_finite() && p0 >= 1.0) {
            return Err(InvalidInput::Spec(format!(
                "p0 = {p0} must be finite and >= 1"
            )));
        }
        if p1.is_nan() || p1 <= p0 {
            return Err(InvalidInput::Spec(format!(
                "p1 = {p1} must exceed p0 = {p0}"
            )));
        }
        if delta > 1 {
            return Err(InvalidInput::Spec(format!(
                "delta = {delta} must be 0 or 1"
            )));
        }
        if delta == 1 && p0 != 1.0 {
            return Err(InvalidInput::Spec(
                "the delta = 1 weight variant requires p0 = 1".into(),
            ));
        }
        Ok(KernelSpec {
            p0,
            p1,
            phi,
            delta,
            quad: Tolerance::default(),
        })
    }

    pub fn with_tolerance(mut self, quad: Tolerance) -> Self {
        self.quad = quad;
        self
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn phi(&self) -> &AdmissibleFunction {
        &self.phi
    }

    pub fn delta(&self) -> u8 {
        self.delta
    }

    pub fn tolerance(&self) -> Tolerance {
        self.quad
    }

    // ------------------------------------------------------------------
    // The operators.

    /// `P f(t)`. Per cell of `f`, the flat part contributes a
    /// weight-exponential integral at rate `1/p0` and the `a/s` part one at
    /// rate `1/p0 - 1`; both are exact for pure-power weights.
    pub fn apply_p(&self, f: &OperatorInput, t: f64) -> f64 {
        assert!(t > 0.0, "operators act on t > 0");
        let mut total = 0.0;
        for piece in &f.pieces {
            let s_hi = piece.hi.min(t);
            if s_hi <= piece.lo {
                continue;
            }
            // s = t e^{1-u} maps (lo, s_hi] to [1 - log(s_hi/t), 1 - log(lo/t)).
            let u_lo = 1.0 - (s_hi / t).ln();
            let u_hi = if piece.lo == 0.0 {
                f64::INFINITY
            } else {
                1.0 - (piece.lo / t).ln()
            };
            if piece.b != 0.0 {
                let rate = 1.0 / self.p0;
                total += piece.b
                    * self
                        .phi
                        .weighted_exp_integral(self.delta, rate, 1.0, u_lo, u_hi, self.quad)
                        .value;
            }
            if piece.a != 0.0 {
                // Hyperbolic cells never touch the origin, so this range is
                // finite and the nonpositive rate is harmless.
                debug_assert!(u_hi.is_finite());
                let rate = 1.0 / self.p0 - 1.0;
                total += piece.a / t
                    * self
                        .phi
                        .weighted_exp_integral(self.delta, rate, 1.0, u_lo, u_hi, self.quad)
                        .value;
            }
        }
        total
    }

    /// `Q f(t)`, in closed form (power integrals per cell; logarithmic for
    /// `p1 = ∞`). A cell of positive level extending to `∞` makes the
    /// integral diverge, reported as `∞`.
    pub fn apply_q(&self, f: &OperatorInput, t: f64) -> f64 {
        assert!(t > 0.0, "operators act on t > 0");
        let mut total = 0.0;
        for piece in &f.pieces {
            let s_lo = piece.lo.max(t);
            if piece.hi <= s_lo {
                continue;
            }
            if self.p1.is_finite() {
                let e = 1.0 / self.p1;
                if piece.b != 0.0 {
                    if !piece.hi.is_finite() {
                        return f64::INFINITY;
                    }
                    total += piece.b * self.p1 * (piece.hi.powf(e) - s_lo.powf(e));
                }
                if piece.a != 0.0 {
                    let at_hi = if piece.hi.is_finite() {
                        piece.hi.powf(e - 1.0)
                    } else {
                        0.0
                    };
                    total += piece.a * (at_hi - s_lo.powf(e - 1.0)) / (e - 1.0);
                }
            } else {
                if piece.b != 0.0 {
                    if !piece.hi.is_finite() {
                        return f64::INFINITY;
                    }
                    total += piece.b * (piece.hi / s_lo).ln();
                }
                if piece.a != 0.0 {
                    let at_hi = if piece.hi.is_finite() {
                        1.0 / piece.hi
                    } else {
                        0.0
                    };
                    total += piece.a * (1.0 / s_lo - at_hi);
                }
            }
        }
        if self.p1.is_finite() {
            total * t.powf(-1.0 / self.p1)
        } else {
            total
        }
    }

    /// `R f(t) = P f(t) + Q f(t)`.
    pub fn apply_r(&self, f: &OperatorInput, t: f64) -> f64 {
        self.apply_p(f, t) + self.apply_q(f, t)
    }

    // ------------------------------------------------------------------
    // Kernel calculus.

    /// The integral kernel: `R f(t) = ∫_0^∞ k(t, r) f(r) dr`.
    pub fn kernel(&self, t: f64, r: f64) -> f64 {
        assert!(t > 0.0 && r > 0.0);
        if r < t {
            let x = r / t;
            self.phi.weight_eval(self.delta, 1.0 - x.ln()) * x.powf(1.0 / self.p0) / r
        } else if self.p1.is_finite() {
            (r / t).powf(1.0 / self.p1) / r
        } else {
            1.0 / r
        }
    }

    /// `κ(x) = ∫_0^{xt} k(t, r) dr`, a function of `x = s/t` alone.
    fn kappa(&self, x: f64) -> f64 {
        if x <= 1.0 {
            let u_lo = 1.0 - x.ln();
            self.phi
                .weighted_exp_integral(
                    self.delta,
                    1.0 / self.p0,
                    1.0,
                    u_lo,
                    f64::INFINITY,
                    self.quad,
                )
                .value
        } else {
            let inner = self.weight_constant();
            let outer = if self.p1.is_finite() {
                self.p1 * (x.powf(1.0 / self.p1) - 1.0)
            } else {
                x.ln()
            };
            inner + outer
        }
    }

    /// `∫_0^s k(t, r) dr`. Scale-invariant: depends only on `s/t`.
    pub fn kernel_cumulative(&self, t: f64, s: f64) -> f64 {
        assert!(t > 0.0 && s > 0.0);
        self.kappa(s / t)
    }

    /// `∫_0^1 w(1 - log u) u^{1/p0 - 1} du`, the weight mass the kernel puts
    /// below the diagonal; finite by the envelope `φ(x) <= x^β`.
    pub fn weight_constant(&self) -> f64 {
        self.phi
            .weighted_exp_integral(
                self.delta,
                1.0 / self.p0,
                1.0,
                1.0,
                f64::INFINITY,
                self.quad,
            )
            .value
    }

    /// `sup_{t,s} (t/s)^{1/p} ∫_0^s k(t,r) dr` for `p ∈ (p0, p1]`. The
    /// objective depends only on `x = s/t`, so the two grids collapse to a
    /// ratio sweep, refined by golden-section search and completed with the
    /// analytic end limits (`x → 0` gives 0; `x → ∞` gives `p1` iff `p = p1`).
    pub fn kernel_norm(&self, p: f64, t_grid: &[f64], s_grid: &[f64]) -> f64 {
        assert!(
            p.is_finite() && p > self.p0 && p <= self.p1,
            "kernel_norm needs p in (p0, p1], got {p}"
        );
        assert!(!t_grid.is_empty() && !s_grid.is_empty());
        let mut ratios: Vec<f64> = t_grid
            .iter()
            .flat_map(|&t| s_grid.iter().map(move |&s| s / t))
            .collect();
        ratios.sort_unstable_by(f64::total_cmp);
        ratios.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-12);
        let obj = |x: f64| x.powf(-1.0 / p) * self.kappa(x);

        let values: Vec<f64> = ratios.par_iter().map(|&x| obj(x)).collect();
        let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
        for (i, &v) in values.iter().enumerate() {
            if v > best {
                best = v;
                best_i = i;
            }
        }

        // Golden-section refinement in log x between the neighbours of the
        // best scan point.
        let lo = ratios[best_i.saturating_sub(1)].ln();
        let hi = ratios[(best_i + 1).min(ratios.len() - 1)].ln();
        if hi > lo {
            const INV_PHI: f64 = 0.618_033_988_749_894_8;
            let (mut a, mut b) = (lo, hi);
            let mut m1 = b - (b - a) * INV_PHI;
            let mut m2 = a + (b - a) * INV_PHI;
            let mut f1 = obj(m1.exp());
            let mut f2 = obj(m2.exp());
            for _ in 0..90 {
                if f1 >= f2 {
                    b = m2;
                    m2 = m1;
                    f2 = f1;
                    m1 = b - (b - a) * INV_PHI;
                    f1 = obj(m1.exp());
                } else {
                    a = m1;
                    m1 = m2;
                    f1 = f2;
                    m2 = a + (b - a) * INV_PHI;
                    f2 = obj(m2.exp());
                }
            }
            best = best.max(f1).max(f2);
        }

        if p == self.p1 {
            best = best.max(self.p1);
        }
        best
    }

    /// Closed-form majorant for [`KernelSpec::kernel_norm`]:
    /// `2 p1 β0^{β0} φ(1/(1/p0 - 1/p))` with `β0 = max(1, β)`.
    pub fn kernel_norm_bound(&self, p: f64) -> f64 {
        assert!(
            self.delta == 0,
            "the kernel norm bound covers the plain weight only"
        );
        assert!(self.p1.is_finite() && p > self.p0 && p <= self.p1);
        let b0 = self.phi.beta0();
        let arg = 1.0 / (1.0 / self.p0 - 1.0 / p);
        2.0 * self.p1 * b0.powf(b0) * self.phi.eval(arg)
    }

    // ------------------------------------------------------------------
    // Derived computations.

    /// Evaluates both routes of the dilation identity:
    /// `(R(f(λ·))(t), R f(λt))`. They agree up to quadrature error.
    pub fn dilation_check(&self, f: &StepFunction, lambda: f64, t: f64) -> (f64, f64) {
        assert!(lambda > 0.0 && t > 0.0);
        let dilated = OperatorInput::from(&f.dilate(lambda));
        let plain = OperatorInput::from(f);
        (self.apply_r(&dilated, t), self.apply_r(&plain, lambda * t))
    }

    /// Samples `R f` once per grid cell (at geometric midpoints, in
    /// parallel but order-preserving). The profile rearranges into an
    /// approximate `(Rf)*` with grid-level accuracy.
    pub fn profile(&self, f: &StepFunction, grid: &[f64]) -> OperatorProfile {
        assert!(
            grid.windows(2).all(|w| w[0] < w[1]) && grid.first().is_none_or(|&g| g > 0.0),
            "profile grid must be strictly increasing and positive"
        );
        let input = OperatorInput::from(f);
        let half_step = if grid.len() >= 2 {
            (grid[1] / grid[0]).sqrt()
        } else {
            1.0
        };
        let mids: Vec<f64> = grid
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                if i == 0 {
                    g / half_step
                } else {
                    (grid[i - 1] * g).sqrt()
                }
            })
            .collect();
        let values: Vec<f64> = mids.par_iter().map(|&m| self.apply_r(&input, m)).collect();
        OperatorProfile::new(grid.to_vec(), values)
    }

    /// Running average of the operator output over a decreasing input:
    /// `t ↦ (1/t) ∫_0^t R f*(s) ds` at each requested `t` (ascending).
    ///
    /// On `(0, b1]` (before the first breakpoint) `R f*` has the closed form
    /// `A + B s^{-1/p1}` (logarithmic for `p1 = ∞`), so that part of the
    /// integral is exact; past `b1` the integral is accumulated once over
    /// the merged knot list (breakpoints and requested points) by adaptive
    /// quadrature, and each `t` reuses the prefix.
    pub fn r_running_average(&self, fstar: &DecreasingStep, ts: &[f64]) -> Vec<f64> {
        assert!(
            ts.windows(2).all(|w| w[0] < w[1]) && ts.first().is_none_or(|&t| t > 0.0),
            "evaluation points must be ascending and positive"
        );
        if fstar.is_empty() {
            return vec![0.0; ts.len()];
        }
        let input = OperatorInput::from(fstar);
        let b1 = fstar.breaks()[0];
        let v1 = fstar.values()[0];
        let w = self.weight_constant();

        // R f*(s) on (0, b1]: the P part is the constant v1·w, and the Q part
        // is t^{-1/p1} (C_tot - v1 p1 s^{1/p1}) resp. D - v1 ln s.
        let closed_prefix: Box<dyn Fn(f64) -> f64> = if self.p1.is_finite() {
            let e = 1.0 / self.p1;
            let c_tot: f64 = fstar
                .cells()
                .map(|(lo, hi, v)| v * self.p1 * (hi.powf(e) - lo.powf(e)))
                .sum();
            let a = v1 * (w - self.p1);
            Box::new(move |c: f64| a * c + c_tot * c.powf(1.0 - e) / (1.0 - e))
        } else {
            let d: f64 = fstar
                .cells()
                .map(|(lo, hi, v)| {
                    if lo == 0.0 {
                        v * hi.ln()
                    } else {
                        v * (hi / lo).ln()
                    }
                })
                .sum();
            let a = v1 * w + d;
            Box::new(move |c: f64| a * c - v1 * (c * c.ln() - c))
        };

        let mut knots: Vec<f64> = fstar
            .breaks()
            .iter()
            .chain(ts.iter())
            .copied()
            .filter(|&x| x > b1)
            .collect();
        knots.sort_unstable_by(f64::total_cmp);
        knots.dedup();
        // Tight per-segment tolerance keeps the accumulated prefix error
        // well under the identity-check threshold.
        let tol = Tolerance::new(1e-12, 1e-10);
        let mut prefix = Vec::with_capacity(knots.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        let mut lo = b1;
        for &k in &knots {
            acc += integrate(|s| self.apply_r(&input, s), lo, k, tol)
                .expect("running-average quadrature did not converge")
                .value;
            prefix.push(acc);
            lo = k;
        }

        ts.iter()
            .map(|&t| {
                if t <= b1 {
                    closed_prefix(t) / t
                } else {
                    let i = knots.partition_point(|&k| k <= t);
                    (closed_prefix(b1) + prefix[i]) / t
                }
            })
            .collect()
    }
}

/// Piecewise-hyperbolic operator input: consecutive cells `a/s + b`.
/// Step functions load as flat cells; running averages load as they are.
#[derive(Clone, Debug)]
pub struct OperatorInput {
    pieces: Vec<HyperbolicPiece>,
}

impl OperatorInput {
    pub fn pieces(&self) -> &[HyperbolicPiece] {
        &self.pieces
    }
}

impl From<&StepFunction> for OperatorInput {
    fn from(f: &StepFunction) -> Self {
        OperatorInput {
            pieces: f
                .cells()
                .map(|(lo, hi, v)| HyperbolicPiece {
                    lo,
                    hi,
                    a: 0.0,
                    b: v,
                })
                .collect(),
        }
    }
}

impl From<&DecreasingStep> for OperatorInput {
    fn from(f: &DecreasingStep) -> Self {
        OperatorInput::from(f.as_step())
    }
}

impl From<&PiecewiseHyperbolic> for OperatorInput {
    fn from(f: &PiecewiseHyperbolic) -> Self {
        debug_assert!(
            f.pieces().first().is_none_or(|p| p.a == 0.0),
            "running averages start with a flat cell"
        );
        OperatorInput {
            pieces: f.pieces().to_vec(),
        }
    }
}

/// Operator output sampled over a log grid: cell right-edges plus one value
/// per cell (taken inside the cell). Rearranging the samples yields an
/// approximate decreasing rearrangement of the output.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl OperatorProfile {
    fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert!(
            values.iter().all(|&v| v >= 0.0 && v.is_finite()),
            "profile values must be finite"
        );
        OperatorProfile { grid, values }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rearrange(&self) -> DecreasingStep {
        StepFunction::new(self.grid.iter().copied().zip(self.values.iter().copied()))
            .expect("profile grid is already validated")
            .rearrange()
    }
}

/// Log grid covering `[10^-pad · b_first, 10^pad · b_last]` around the
/// support of `f` at the given resolution; empty for the zero function.
pub fn profile_grid(f: &StepFunction, pad_decades: f64, points_per_decade: usize) -> Vec<f64> {
    assert!(pad_decades >= 0.0 && points_per_decade >= 2);
    let Some((first, last)) = f.support_scales() else {
        return Vec::new();
    };
    let lo = first * 10f64.powf(-pad_decades);
    let hi = last * 10f64.powf(pad_decades);
    let decades = (hi / lo).log10();
    let n = (decades * points_per_decade as f64).ceil() as usize + 1;
    crate::log_grid(lo, hi, n.max(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn spec_24_one() -> KernelSpec {
        KernelSpec::new(2.0, 4.0, AdmissibleFunction::one(), 0).unwrap()
    }

    fn chi(b: f64) -> DecreasingStep {
        DecreasingStep::new([(b, 1.0)]).unwrap()
    }

    #[test]
    fn spec_validation() {
        let phi = AdmissibleFunction::one();
        assert!(KernelSpec::new(2.0, 4.0, phi.clone(), 0).is_ok());
        assert!(KernelSpec::new(2.0, f64::INFINITY, phi.clone(), 0).is_ok());
        assert!(KernelSpec::new(0.5, 4.0, phi.clone(), 0).is_err());
        assert!(KernelSpec::new(2.0, 2.0, phi.clone(), 0).is_err());
        assert!(KernelSpec::new(2.0, 4.0, phi.clone(), 1).is_err()); // delta needs p0 = 1
        assert!(KernelSpec::new(1.0, 4.0, phi, 1).is_ok());
    }

    #[test]
    fn spec_serde_round_trip() {
        let spec = KernelSpec::new(2.0, f64::INFINITY, AdmissibleFunction::x_log(), 0).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"inf\""));
        let back: KernelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.p0(), 2.0);
        assert!(back.p1().is_infinite());
        assert_eq!(back.phi().describe(), spec.phi().describe());
    }

    #[test]
    fn p_of_the_unit_indicator() {
        // ∫_0^1 s^{-1/2} ds = 2, reproduced exactly by the power path.
        let f = OperatorInput::from(&chi(1.0));
        assert_eq!(spec_24_one().apply_p(&f, 1.0), 2.0);
        // With φ = id the weight integral doubles up: value 6.
        let spec = KernelSpec::new(2.0, 4.0, AdmissibleFunction::identity(), 0).unwrap();
        assert_eq!(spec.apply_p(&f, 1.0), 6.0);
        // Inside the flat cell P is constant.
        assert_eq!(spec_24_one().apply_p(&f, 0.7), 2.0);
        // Zero input.
        let zero = OperatorInput::from(&DecreasingStep::new([]).unwrap());
        assert_eq!(spec_24_one().apply_p(&zero, 1.0), 0.0);
    }

    #[test]
    fn q_examples() {
        let f = OperatorInput::from(&chi(1.0));
        // t = 1/2: 4 (2^{1/4} - 1) after the outer power.
        let expected = 4.0 * (2f64.powf(0.25) - 1.0);
        assert_relative_eq!(
            spec_24_one().apply_q(&f, 0.5),
            expected,
            max_relative = 1e-13
        );
        assert_abs_diff_eq!(spec_24_one().apply_q(&f, 0.5), 0.75683, epsilon = 1e-5);
        // Beyond the support Q vanishes identically.
        assert_eq!(spec_24_one().apply_q(&f, 1.0), 0.0);
        assert_eq!(spec_24_one().apply_q(&f, 3.0), 0.0);
        // p1 = ∞ turns Q into the conjugate Hardy integral.
        let spec = KernelSpec::new(2.0, f64::INFINITY, AdmissibleFunction::one(), 0).unwrap();
        assert_relative_eq!(spec.apply_q(&f, 0.5), 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn q_diverges_on_a_positive_infinite_tail() {
        let f = OperatorInput {
            pieces: vec![HyperbolicPiece {
                lo: 0.0,
                hi: f64::INFINITY,
                a: 0.0,
                b: 1.0,
            }],
        };
        assert_eq!(spec_24_one().apply_q(&f, 1.0), f64::INFINITY);
    }

    #[test]
    fn r_examples() {
        let f = OperatorInput::from(&chi(1.0));
        assert_eq!(spec_24_one().apply_r(&f, 1.0), 2.0);
        let expected = 2.0 + 4.0 * (2f64.powf(0.25) - 1.0);
        assert_relative_eq!(
            spec_24_one().apply_r(&f, 0.5),
            expected,
            max_relative = 1e-13
        );
    }

    #[test]
    fn classical_reduction_matches_hardy_closed_forms() {
        // p0 = 1, p1 = ∞, φ ≡ 1: P f(t) = (1/t)∫_0^t f, Q f(t) = ∫_t^∞ f ds/s.
        let spec = KernelSpec::new(1.0, f64::INFINITY, AdmissibleFunction::one(), 0).unwrap();
        let f = StepFunction::new([(1.0, 2.0), (3.0, 0.5)]).unwrap();
        let input = OperatorInput::from(&f);
        let mass_below = |t: f64| {
            if t <= 1.0 {
                2.0 * t
            } else {
                2.0 + 0.5 * (t.min(3.0) - 1.0)
            }
        };
        let log_tail = |t: f64| {
            let from_first = if t < 1.0 { 2.0 * (1.0 / t).ln() } else { 0.0 };
            let lo = t.clamp(1.0, 3.0);
            from_first + 0.5 * (3.0 / lo).ln()
        };
        for t in [0.5, 2.0, 5.0] {
            assert_relative_eq!(
                spec.apply_p(&input, t),
                mass_below(t) / t,
                max_relative = 1e-12
            );
            assert_abs_diff_eq!(spec.apply_q(&input, t), log_tail(t), epsilon = 1e-14);
        }
    }

    #[test]
    fn kernel_point_values() {
        let classical = KernelSpec::new(1.0, f64::INFINITY, AdmissibleFunction::one(), 0).unwrap();
        assert_eq!(classical.kernel(2.0, 1.0), 0.5);
        // On the diagonal the second branch gives 1/t.
        assert_eq!(classical.kernel(2.0, 2.0), 0.5);
        assert_eq!(spec_24_one().kernel(3.0, 3.0), 1.0 / 3.0);
        // φ = id, p0 = 2, r/t = e^{-1}: φ(2) e^{-1/2} / r.
        let spec = KernelSpec::new(2.0, 4.0, AdmissibleFunction::identity(), 0).unwrap();
        let r = 3.0;
        let t = r * std::f64::consts::E;
        assert_relative_eq!(
            spec.kernel(t, r),
            2.0 * (-0.5f64).exp() / r,
            max_relative = 1e-14
        );
    }

    #[test]
    fn kernel_cumulative_examples() {
        let spec = spec_24_one();
        assert_eq!(spec.kernel_cumulative(7.0, 7.0), 2.0);
        // s = 16 t: 2 + 4 (16^{1/4} - 1) = 6.
        assert_eq!(spec.kernel_cumulative(1.0, 16.0), 6.0);
        assert!(spec.kernel_cumulative(1.0, 1e-280) < 1e-30);
    }

    #[test]
    fn kernel_cumulative_matches_direct_kernel_quadrature() {
        let spec = KernelSpec::new(2.0, 4.0, AdmissibleFunction::x_log(), 0).unwrap();
        for s in [0.3f64, 1.0, 5.0] {
            // r = y^2 tames the r^{-1/2} edge so the oracle converges.
            let below = integrate(
                |y| spec.kernel(1.0, y * y) * 2.0 * y,
                1e-14,
                s.min(1.0).sqrt(),
                Tolerance::default(),
            )
            .unwrap()
            .value;
            let direct = below
                + if s > 1.0 {
                    integrate(|r| spec.kernel(1.0, r), 1.0, s, Tolerance::default())
                        .unwrap()
                        .value
                } else {
                    0.0
                };
            assert_relative_eq!(spec.kernel_cumulative(1.0, s), direct, max_relative = 1e-6);
        }
    }

    #[test]
    fn weight_constant_anchors() {
        let id = AdmissibleFunction::identity();
        assert_eq!(
            KernelSpec::new(2.0, 4.0, id, 0).unwrap().weight_constant(),
            6.0
        );
        assert_eq!(spec_24_one().weight_constant(), 2.0);
        let one = AdmissibleFunction::one();
        assert_eq!(
            KernelSpec::new(1.0, 4.0, one, 0).unwrap().weight_constant(),
            1.0
        );
    }

    #[test]
    fn kernel_norm_at_the_upper_exponent() {
        // For p = p1 the sup is the x → ∞ limit, exactly p1.
        let grid = crate::log_grid(1e-3, 1e3, 120);
        let ak = spec_24_one().kernel_norm(4.0, &grid, &grid);
        assert_abs_diff_eq!(ak, 4.0, epsilon = 1e-3);
        assert!(ak <= spec_24_one().kernel_norm_bound(4.0));
        assert_eq!(spec_24_one().kernel_norm_bound(4.0), 8.0);
    }

    #[test]
    fn kernel_norm_dominates_the_two_dimensional_scan() {
        let spec = KernelSpec::new(2.0, 4.0, AdmissibleFunction::identity(), 0).unwrap();
        let t_grid = crate::log_grid(1e-2, 1e2, 40);
        let s_grid = crate::log_grid(1e-2, 1e2, 40);
        for p in [3.0, 4.0] {
            let swept = spec.kernel_norm(p, &t_grid, &s_grid);
            let mut brute = 0.0f64;
            for &t in &t_grid {
                for &s in &s_grid {
                    brute = brute.max((t / s).powf(1.0 / p) * spec.kernel_cumulative(t, s));
                }
            }
            assert!(
                swept >= brute * (1.0 - 1e-9),
                "sweep {swept} under brute {brute}"
            );
            assert!(swept <= spec.kernel_norm_bound(p) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn below_diagonal_branch_peaks_at_the_diagonal() {
        // Restricted to x <= 1 with p = p1 the objective x^{-1/p1} κ(x)
        // increases up to κ(1).
        let spec = spec_24_one();
        let sup = crate::log_grid(1e-6, 1.0, 60)
            .into_iter()
            .map(|x| x.powf(-0.25) * spec.kernel_cumulative(1.0, x))
            .fold(0.0f64, f64::max);
        assert_relative_eq!(sup, spec.weight_constant(), max_relative = 1e-12);
    }

    #[test]
    fn dilation_identity_on_the_indicator() {
        let spec = spec_24_one();
        let f = StepFunction::new([(1.0, 1.0)]).unwrap();
        let (lhs, rhs) = spec.dilation_check(&f, 2.0, 0.25);
        let expected = 2.0 + 4.0 * (2f64.powf(0.25) - 1.0);
        assert_relative_eq!(lhs, expected, max_relative = 1e-10);
        assert_relative_eq!(rhs, expected, max_relative = 1e-10);
        // λ = 1 compares a value with itself.
        let (a, b) = spec.dilation_check(&f, 1.0, 0.8);
        assert_eq!(a, b);
        // Zero input.
        let zero = StepFunction::new([]).unwrap();
        assert_eq!(spec.dilation_check(&zero, 2.0, 1.0), (0.0, 0.0));
    }

    #[test]
    fn running_average_of_r_closed_form_anchor() {
        // χ_(0,1], spec (2,4,φ≡1), t = 1: (1/1)∫_0^1 (4 s^{-1/4} - 2) ds = 10/3,
        // and the same value comes out of R applied to the running average.
        let spec = spec_24_one();
        let f = chi(1.0);
        let lhs = spec.r_running_average(&f, &[1.0])[0];
        assert_relative_eq!(lhs, 10.0 / 3.0, max_relative = 1e-14);
        let rhs = spec.apply_r(&OperatorInput::from(&f.double_star()), 1.0);
        assert_relative_eq!(rhs, 10.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn running_average_identity_holds_off_the_anchor() {
        // Mixed breakpoints, general weight, both t-regimes.
        let spec = KernelSpec::new(1.5, 4.0, AdmissibleFunction::x_log(), 0).unwrap();
        let f = DecreasingStep::new([(0.5, 3.0), (2.0, 1.25), (8.0, 0.25)]).unwrap();
        let ts: Vec<f64> = crate::log_grid(0.05, 50.0, 24);
        let lhs = spec.r_running_average(&f, &ts);
        let avg_input = OperatorInput::from(&f.double_star());
        for (i, &t) in ts.iter().enumerate() {
            let rhs = spec.apply_r(&avg_input, t);
            assert!(
                (lhs[i] - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()),
                "t = {t}: {} vs {rhs}",
                lhs[i]
            );
        }
    }

    #[test]
    fn profile_of_a_decreasing_input_is_already_decreasing() {
        let spec = spec_24_one();
        let f = StepFunction::new([(1.0, 2.0), (4.0, 1.0)]).unwrap();
        let grid = profile_grid(&f, 1.0, 64);
        let prof = spec.profile(&f, &grid);
        assert!(prof.values().windows(2).all(|w| w[0] >= w[1]));
        let rearranged = prof.rearrange();
        for (a, b) in rearranged.values().iter().zip(prof.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn profile_of_zero_is_empty() {
        let spec = spec_24_one();
        let f = StepFunction::new([]).unwrap();
        let grid = profile_grid(&f, 2.0, 512);
        assert!(grid.is_empty());
        assert!(spec.profile(&f, &grid).rearrange().is_empty());
    }

    // ------------------------------------------------------------------
    // Structural properties on dyadic staircases.

    fn dyadic_staircase() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((1u32..=10240, 2u32..=12800), 1..8).prop_map(|raw| {
            let mut b = 0.0;
            raw.into_iter()
                .map(|(v, l)| {
                    b += l as f64 / 128.0;
                    (b, v as f64 / 1024.0)
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn r_is_homogeneous(pairs in dyadic_staircase(), ck in 1u32..=64, tk in 1u32..=400) {
            let spec = spec_24_one();
            let c = ck as f64 / 8.0;
            let t = tk as f64 / 4.0;
            let f = StepFunction::new(pairs).unwrap();
            let scaled = f.scale(c);
            let a = spec.apply_r(&OperatorInput::from(&scaled), t);
            let b = spec.apply_r(&OperatorInput::from(&f), t);
            prop_assert!((a - c * b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn r_is_monotone_and_additive(
            pairs in dyadic_staircase(),
            bumps in prop::collection::vec(0u32..=10240, 8),
            tk in 1u32..=400,
        ) {
            let spec = KernelSpec::new(1.5, 6.0, AdmissibleFunction::identity(), 0).unwrap();
            let t = tk as f64 / 4.0;
            let f = StepFunction::new(pairs.clone()).unwrap();
            let bumped: Vec<(f64, f64)> = pairs
                .iter()
                .zip(&bumps)
                .map(|(&(b, v), &d)| (b, v + d as f64 / 1024.0))
                .collect();
            let g = StepFunction::new(bumped.clone()).unwrap();
            let bump_only: Vec<(f64, f64)> = pairs
                .iter()
                .zip(&bumps)
                .map(|(&(b, _), &d)| (b, d as f64 / 1024.0))
                .collect();
            let h = StepFunction::new(bump_only).unwrap();

            let rf = spec.apply_r(&OperatorInput::from(&f), t);
            let rg = spec.apply_r(&OperatorInput::from(&g), t);
            let rh = spec.apply_r(&OperatorInput::from(&h), t);
            // Monotone: g = f + h >= f pointwise.
            prop_assert!(rf <= rg * (1.0 + 1e-12) + 1e-12);
            // Additive on the nonnegative cone (sublinearity holds with equality).
            prop_assert!((rg - (rf + rh)).abs() <= 1e-10 * (1.0 + rg.abs()));
        }
    }
}
