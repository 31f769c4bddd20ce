//! Admissible weight functions on `[1, ∞)`.
//!
//! A weight `φ` is admissible when `φ(1) = 1`, `log φ` is concave, and the
//! logarithmic derivative is pinched between `γ/x` and `β/x` for some
//! `0 ≤ γ ≤ β`. The two consequences used constantly downstream are
//! `x^γ ≤ φ(x) ≤ x^β` and the submultiplicative bound `φ(xy) ≤ x^β φ(y)`.
//!
//! The built-in family is `φ(x) = x^γ · Π_k (log_k x)^{β_k}` over the
//! iterated shifted logarithms; its certified envelope exponent is
//! `β = γ + Σ β_k`. Arbitrary evaluation maps are accepted too, carrying
//! user-certified `γ` and `β`, and can be screened with [`AdmissibleFunction::check`].

use crate::logs::logk;
use crate::quadrature::{exp_poly_integral, exp_weighted_integral, QuadratureResult, Tolerance};
use crate::InvalidInput;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Clone)]
enum PhiKind {
    Example {
        gamma: f64,
        log_exponents: Vec<f64>,
    },
    Custom {
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        gamma: f64,
        beta: f64,
    },
}

/// An admissible weight: either the built-in log-power family or a custom
/// evaluation map with certified envelope exponents.
#[derive(Clone)]
pub struct AdmissibleFunction {
    kind: PhiKind,
}

impl fmt::Debug for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PhiKind::Example {
                gamma,
                log_exponents,
            } => f
                .debug_struct("AdmissibleFunction")
                .field("gamma", gamma)
                .field("log_exponents", log_exponents)
                .finish(),
            PhiKind::Custom { gamma, beta, .. } => f
                .debug_struct("AdmissibleFunction")
                .field("custom", &true)
                .field("gamma", gamma)
                .field("beta", beta)
                .finish(),
        }
    }
}

/// Serializable description of a weight (the custom closure is represented
/// by its certified exponents only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiDescription {
    Example {
        gamma: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        log_exponents: Vec<f64>,
    },
    Custom {
        custom: bool,
        gamma: f64,
        beta: f64,
    },
}

impl AdmissibleFunction {
    /// The built-in family `x^γ Π_k (log_k x)^{β_k}`.
    pub fn example(gamma: f64, log_exponents: Vec<f64>) -> Result<Self, InvalidInput> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(InvalidInput::Parameter(format!(
                "gamma {gamma} must be >= 0"
            )));
        }
        if log_exponents.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(InvalidInput::Parameter("log exponents must be >= 0".into()));
        }
        Ok(AdmissibleFunction {
            kind: PhiKind::Example {
                gamma,
                log_exponents,
            },
        })
    }

    /// `φ ≡ 1`.
    pub fn one() -> Self {
        Self::example(0.0, vec![]).unwrap()
    }

    /// `φ(x) = x`.
    pub fn identity() -> Self {
        Self::example(1.0, vec![]).unwrap()
    }

    /// `φ(x) = x · log_1 x`.
    pub fn x_log() -> Self {
        Self::example(1.0, vec![1.0]).unwrap()
    }

    /// Custom evaluation map with user-certified envelope exponents.
    pub fn custom(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma: f64,
        beta: f64,
    ) -> Result<Self, InvalidInput> {
        if !(gamma.is_finite() && gamma >= 0.0 && beta.is_finite() && beta >= gamma) {
            return Err(InvalidInput::Parameter(format!(
                "need 0 <= gamma <= beta (got gamma {gamma}, beta {beta})"
            )));
        }
        Ok(AdmissibleFunction {
            kind: PhiKind::Custom {
                eval: Arc::new(eval),
                gamma,
                beta,
            },
        })
    }

    pub fn describe(&self) -> PhiDescription {
        match &self.kind {
            PhiKind::Example {
                gamma,
                log_exponents,
            } => PhiDescription::Example {
                gamma: *gamma,
                log_exponents: log_exponents.clone(),
            },
            PhiKind::Custom { gamma, beta, .. } => PhiDescription::Custom {
                custom: true,
                gamma: *gamma,
                beta: *beta,
            },
        }
    }

    pub fn from_description(d: &PhiDescription) -> Result<Self, InvalidInput> {
        match d {
            PhiDescription::Example {
                gamma,
                log_exponents,
            } => Self::example(*gamma, log_exponents.clone()),
            PhiDescription::Custom { .. } => Err(InvalidInput::Parameter(
                "custom weights cannot be reconstructed from a description".into(),
            )),
        }
    }

    /// Lower envelope exponent `γ`.
    pub fn gamma(&self) -> f64 {
        match &self.kind {
            PhiKind::Example { gamma, .. } => *gamma,
            PhiKind::Custom { gamma, .. } => *gamma,
        }
    }

    /// Certified upper envelope exponent `β` (for the built-in family,
    /// `γ + Σ β_k`).
    pub fn beta(&self) -> f64 {
        match &self.kind {
            PhiKind::Example {
                gamma,
                log_exponents,
            } => gamma + log_exponents.iter().sum::<f64>(),
            PhiKind::Custom { beta, .. } => *beta,
        }
    }

    /// `β₀ = max(1, β)`, the exponent entering the kernel norm bound.
    pub fn beta0(&self) -> f64 {
        self.beta().max(1.0)
    }

    /// `γ = 0` weights grow slower than every power; kernels accept them,
    /// the theorem constants do not.
    pub fn is_degenerate(&self) -> bool {
        self.gamma() == 0.0
    }

    /// True exactly for the constant weight 1 (the degenerate case that the
    /// lower-bound suites still accept).
    pub fn is_identically_one(&self) -> bool {
        matches!(
            &self.kind,
            PhiKind::Example { gamma, log_exponents }
                if *gamma == 0.0 && log_exponents.iter().all(|&b| b == 0.0)
        )
    }

    /// Evaluate at `x ∈ [1, ∞]`.
    pub fn eval(&self, x: f64) -> f64 {
        assert!(x >= 1.0, "admissible functions live on [1, ∞) (got {x})");
        if x.is_infinite() {
            return if self.beta() == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
        }
        match &self.kind {
            PhiKind::Example {
                gamma,
                log_exponents,
            } => {
                let mut out = if *gamma == 0.0 { 1.0 } else { x.powf(*gamma) };
                for (k, bk) in log_exponents.iter().enumerate() {
                    if *bk != 0.0 {
                        out *= logk(k as u32 + 1, x).powf(*bk);
                    }
                }
                out
            }
            PhiKind::Custom { eval, .. } => eval(x),
        }
    }

    // ------------------------------------------------------------------
    // Operator-weight helpers: the kernels use `w(u) = u^δ φ(u)`.

    /// `u^δ φ(u)` for `δ ∈ {0, 1}`.
    pub fn weight_eval(&self, delta: u8, u: f64) -> f64 {
        debug_assert!(delta <= 1);
        if delta == 0 {
            self.eval(u)
        } else {
            u * self.eval(u)
        }
    }

    /// Power envelope of the δ-weight: `u^δ φ(u) ≤ u^{δ+β}` on `[1, ∞)`.
    pub fn weight_envelope(&self, delta: u8) -> f64 {
        self.beta() + f64::from(delta)
    }

    /// When the δ-weight is exactly `u^m` for integer `m`, the operator layer
    /// takes a closed-form path instead of quadrature.
    pub fn weight_poly_degree(&self, delta: u8) -> Option<u32> {
        match &self.kind {
            PhiKind::Example {
                gamma,
                log_exponents,
            } if log_exponents.iter().all(|b| *b == 0.0)
                && gamma.fract() == 0.0
                && *gamma <= 16.0 =>
            {
                Some(*gamma as u32 + u32::from(delta))
            }
            _ => None,
        }
    }

    /// `∫_lo^hi u^δ φ(u) e^{rate (shift - u)} du`, exact when the δ-weight is
    /// a pure power, certified-truncation quadrature otherwise.
    pub fn weighted_exp_integral(
        &self,
        delta: u8,
        rate: f64,
        shift: f64,
        lo: f64,
        hi: f64,
        tol: Tolerance,
    ) -> QuadratureResult {
        if let Some(m) = self.weight_poly_degree(delta) {
            if rate != 0.0 || hi.is_finite() {
                let value = exp_poly_integral(m, rate, shift, lo, hi);
                return QuadratureResult {
                    value,
                    error_estimate: 0.0,
                    evaluations: 0,
                };
            }
        }
        exp_weighted_integral(
            |u| self.weight_eval(delta, u),
            self.weight_envelope(delta),
            rate,
            shift,
            lo,
            hi,
            tol,
        )
        .expect("weighted exponential integral did not converge")
    }

    // ------------------------------------------------------------------
    // Admissibility screening.

    /// Run the four admissibility checks over a grid of sample points
    /// (all `>= 1`): normalization, log-concavity on sampled triples, the
    /// logarithmic-derivative envelope (skipped when `γ = 0`), and
    /// submultiplicativity on sampled pairs.
    pub fn check(&self, grid: &[f64]) -> AdmissibilityReport {
        assert!(grid.len() >= 2 && grid.iter().all(|&x| x >= 1.0));
        let gamma = self.gamma();
        let beta = self.beta();

        let normalization_error = (self.eval(1.0) - 1.0).abs();

        // Log-concavity: ln φ(θx + (1-θ)y) >= θ ln φ(x) + (1-θ) ln φ(y).
        let mut concavity_margin = f64::INFINITY;
        for (i, &x) in grid.iter().enumerate() {
            for &y in grid.iter().skip(i + 1).step_by(3) {
                for theta in [0.25, 0.5, 0.75] {
                    let mid = theta * x + (1.0 - theta) * y;
                    let lhs = self.eval(mid).ln();
                    let rhs = theta * self.eval(x).ln() + (1.0 - theta) * self.eval(y).ln();
                    // Overflowed samples say nothing; a -inf from a vanishing
                    // weight still counts as a failure.
                    if lhs == f64::INFINITY || rhs == f64::INFINITY || rhs.is_nan() {
                        continue;
                    }
                    concavity_margin = concavity_margin.min(lhs - rhs);
                }
            }
        }

        // Envelope γ/x <= φ'/φ <= β/x via central differences, meaningful
        // only for nondegenerate weights.
        let envelope_margin = if gamma > 0.0 {
            let mut low = f64::INFINITY;
            let mut high = f64::INFINITY;
            let h = 1e-5;
            for &x in grid.iter().filter(|&&x| x > 1.0 + 2.0 * h) {
                let d = (self.eval(x * (1.0 + h)) - self.eval(x * (1.0 - h)))
                    / (2.0 * x * h)
                    / self.eval(x);
                low = low.min(x * d - gamma);
                high = high.min(beta - x * d);
            }
            Some((low, high))
        } else {
            None
        };

        // Submultiplicativity φ(xy) <= x^β φ(y), relative margin.
        let mut submult_margin = f64::INFINITY;
        for &x in grid.iter().step_by(2) {
            for &y in grid.iter().step_by(2) {
                let bound = x.powf(beta) * self.eval(y);
                if bound.is_finite() {
                    submult_margin = submult_margin.min((bound - self.eval(x * y)) / bound);
                }
            }
        }

        let envelope_tol = 1e-4 * beta.max(1.0);
        let envelope_ok =
            envelope_margin.is_none_or(|(l, h)| l >= -envelope_tol && h >= -envelope_tol);
        let passed = normalization_error <= 1e-12
            && concavity_margin >= -1e-9
            && envelope_ok
            && submult_margin >= -1e-9;

        AdmissibilityReport {
            normalization_error,
            concavity_margin,
            envelope_margin,
            submult_margin,
            degenerate: self.is_degenerate(),
            passed,
        }
    }

    // ------------------------------------------------------------------
    // The infimum lemma: inf_{q >= q0} φ(q) e^{-x/q}.

    /// Closed-form upper bound for the infimum: `φ(q0) e^{-x/q0}` when
    /// `x >= 0`, and `q0^β e^{1/q0} φ(1 - x)` when `x < 0` (obtained at
    /// `q = q0(1-x)` via submultiplicativity).
    pub fn infimum_bound(&self, q0: f64, x: f64) -> f64 {
        assert!(q0 >= 1.0 && x.is_finite());
        if x >= 0.0 {
            self.eval(q0) * (-x / q0).exp()
        } else {
            q0.powf(self.beta()) * (1.0 / q0).exp() * self.eval(1.0 - x)
        }
    }

    /// Numerical minimization of `φ(q) e^{-x/q}` over `[q0, max(q0, 10(1+|x|))]`:
    /// a log-spaced scan (plus the closed-form candidate point) refined by
    /// golden-section search. Deterministic.
    pub fn infimum_numeric(&self, q0: f64, x: f64) -> f64 {
        assert!(q0 >= 1.0 && x.is_finite());
        let objective = |q: f64| self.eval(q) * (-x / q).exp();
        let qmax = q0.max(10.0 * (1.0 + x.abs()));
        if qmax <= q0 {
            return objective(q0);
        }
        let (llo, lhi) = (q0.ln(), qmax.ln());
        let n = 96;
        let mut best_val = f64::INFINITY;
        let mut best_i = 0usize;
        for i in 0..=n {
            let q = (llo + (lhi - llo) * i as f64 / n as f64).exp();
            let v = objective(q);
            if v < best_val {
                best_val = v;
                best_i = i;
            }
        }
        // The candidate realizing the closed-form bound, when inside range.
        if x < 0.0 {
            let cand = (q0 * (1.0 - x)).min(qmax);
            best_val = best_val.min(objective(cand));
        }
        // Golden-section refinement around the best scan point.
        let mut lo = llo + (lhi - llo) * best_i.saturating_sub(1) as f64 / n as f64;
        let mut hi = llo + (lhi - llo) * (best_i + 1).min(n) as f64 / n as f64;
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut m1 = hi - (hi - lo) * INV_PHI;
        let mut m2 = lo + (hi - lo) * INV_PHI;
        let mut f1 = objective(m1.exp());
        let mut f2 = objective(m2.exp());
        for _ in 0..120 {
            if f1 <= f2 {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - (hi - lo) * INV_PHI;
                f1 = objective(m1.exp());
            } else {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + (hi - lo) * INV_PHI;
                f2 = objective(m2.exp());
            }
        }
        best_val.min(f1).min(f2)
    }
}

/// Outcome of [`AdmissibleFunction::check`]. Margins are signed; negative
/// means the corresponding inequality failed somewhere on the grid.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub normalization_error: f64,
    pub concavity_margin: f64,
    /// `(min x·φ'/φ - γ, min β - x·φ'/φ)`; `None` when `γ = 0` (degenerate
    /// weights skip the envelope check).
    pub envelope_margin: Option<(f64, f64)>,
    pub submult_margin: f64,
    pub degenerate: bool,
    pub passed: bool,
}

/// Default screening grid: 120 log-spaced points on `[1, 10^6]`.
pub fn default_check_grid() -> Vec<f64> {
    crate::log_grid(1.0, 1e6, 120)
}
