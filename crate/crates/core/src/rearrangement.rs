//! Exact calculus of simple and step functions on `(0, ∞)` and their
//! decreasing rearrangements.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * a step function takes value `v_i` on the half-open cell `(b_{i-1}, b_i]`
//!   (with `b_0 = 0`) and 0 past its last breakpoint;
//! * the distribution function counts strict super-level mass,
//!   `λ_f(y) = |{ |f| > y }|`;
//! * masses and values are summed in one canonical order (values descending)
//!   so that a function and its rearrangement produce bitwise-identical
//!   distribution values, not merely close ones.
//!
//! Evaluation at a breakpoint follows the cell convention above. Every
//! quantity computed downstream is an integral or a supremum, so the choice
//! at the countably many breakpoints never influences a reported number.

use crate::InvalidInput;
use serde::{Deserialize, Serialize};

// ----------------------------------------------------------------------
// Simple functions.

/// One atom of a simple function: `value` attained on a set of measure `mass`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub mass: f64,
}

/// Nonnegative simple function, stored as atoms in canonical order
/// (value descending, mass ascending, equal values merged).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleFunction {
    atoms: Vec<Atom>,
}

impl SimpleFunction {
    /// Build from `(value, mass)` pairs in any order.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, InvalidInput> {
        let mut atoms = Vec::new();
        for (value, mass) in pairs {
            if !(value.is_finite() && value >= 0.0) {
                return Err(InvalidInput::Function(format!(
                    "atom value {value} out of range"
                )));
            }
            if !(mass.is_finite() && mass > 0.0) {
                return Err(InvalidInput::Function(format!(
                    "atom mass {mass} must be positive"
                )));
            }
            atoms.push(Atom { value, mass });
        }
        atoms.sort_by(|x, y| {
            y.value
                .partial_cmp(&x.value)
                .unwrap()
                .then(x.mass.partial_cmp(&y.mass).unwrap())
        });
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.value == a.value => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        let total: f64 = merged.iter().map(|a| a.mass).sum();
        if !total.is_finite() {
            return Err(InvalidInput::Function("total mass overflows".into()));
        }
        Ok(SimpleFunction { atoms: merged })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Strict super-level mass `λ_f(y) = |{ f > y }|`.
    ///
    /// Summation runs over the canonical order, and the partial sums are the
    /// very same floats that become breakpoints under `rearrange`.
    pub fn distribution(&self, y: f64) -> f64 {
        assert!(y >= 0.0, "distribution level must be nonnegative");
        let mut acc = 0.0;
        for a in &self.atoms {
            if a.value > y {
                acc += a.mass;
            } else {
                break;
            }
        }
        acc
    }

    /// Decreasing rearrangement: sort values descending, lay the masses out
    /// from the origin. Atoms of value 0 contribute no support.
    pub fn rearrange(&self) -> DecreasingStep {
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        let mut acc = 0.0;
        for a in &self.atoms {
            if a.value > 0.0 {
                acc += a.mass;
                breaks.push(acc);
                values.push(a.value);
            }
        }
        DecreasingStep(StepFunction { breaks, values })
    }

    /// `∫ f = Σ value · mass`, summed in canonical order.
    pub fn integral(&self) -> f64 {
        self.atoms.iter().map(|a| a.value * a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Pointwise multiple `c·f`, `c > 0`.
    pub fn scale(&self, c: f64) -> SimpleFunction {
        assert!(c.is_finite() && c > 0.0, "scale factor must be positive");
        // Scaling by c > 0 preserves the canonical order, so rebuild directly.
        SimpleFunction {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    value: c * a.value,
                    mass: a.mass,
                })
                .collect(),
        }
    }
}

// ----------------------------------------------------------------------
// Step functions.

/// Nonnegative step function with finitely many cells `(b_{i-1}, b_i]`.
///
/// Canonical form: strictly increasing positive breakpoints, adjacent equal
/// values merged, trailing zero cells absorbed into the implicit tail.
/// Interior zero cells are kept; the function need not be monotone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Build from `(breakpoint, value)` pairs with strictly increasing
    /// breakpoints; `value` is taken on the cell ending at `breakpoint`.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, InvalidInput> {
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        let mut prev = 0.0;
        for (b, v) in pairs {
            if !(b.is_finite() && b > prev) {
                return Err(InvalidInput::Function(format!(
                    "breakpoints must be finite and strictly increasing (got {b} after {prev})"
                )));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(InvalidInput::Function(format!(
                    "cell value {v} out of range"
                )));
            }
            breaks.push(b);
            values.push(v);
            prev = b;
        }
        Ok(Self::canonical(breaks, values))
    }

    fn canonical(breaks: Vec<f64>, values: Vec<f64>) -> StepFunction {
        let mut cb: Vec<f64> = Vec::with_capacity(breaks.len());
        let mut cv: Vec<f64> = Vec::with_capacity(values.len());
        for (b, v) in breaks.into_iter().zip(values) {
            if cv.last() == Some(&v) {
                *cb.last_mut().unwrap() = b; // merge equal neighbours
            } else {
                cb.push(b);
                cv.push(v);
            }
        }
        while cv.last() == Some(&0.0) {
            cv.pop();
            cb.pop();
        }
        StepFunction {
            breaks: cb,
            values: cv,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cells as `(lo, hi, value)` triples.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breaks.iter().enumerate().map(move |(i, &hi)| {
            let lo = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            (lo, hi, self.values[i])
        })
    }

    /// Value at `t > 0` under the `(lo, hi]` cell convention; 0 past support.
    pub fn eval(&self, t: f64) -> f64 {
        assert!(t > 0.0, "step functions live on (0, ∞)");
        let i = self.breaks.partition_point(|&b| b < t);
        if i < self.values.len() {
            self.values[i]
        } else {
            0.0
        }
    }

    /// Smallest and largest breakpoint, if the function is not identically 0.
    pub fn support_scales(&self) -> Option<(f64, f64)> {
        if self.breaks.is_empty() {
            None
        } else {
            Some((self.breaks[0], *self.breaks.last().unwrap()))
        }
    }

    /// Strict super-level mass, summed in the same descending-value order
    /// used by `rearrange` so the two sides of equimeasurability agree
    /// exactly.
    pub fn distribution(&self, y: f64) -> f64 {
        assert!(y >= 0.0, "distribution level must be nonnegative");
        let mut acc = 0.0;
        for &i in &self.descending_order() {
            if self.values[i] > y {
                let lo = if i == 0 { 0.0 } else { self.breaks[i - 1] };
                acc += self.breaks[i] - lo;
            }
        }
        acc
    }

    fn descending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&i, &j| self.values[j].partial_cmp(&self.values[i]).unwrap());
        idx
    }

    /// Decreasing rearrangement. A function that is already nonincreasing is
    /// returned unchanged (exact fixed point, original breakpoints kept).
    pub fn rearrange(&self) -> DecreasingStep {
        // Canonical form has no trailing zeros and no equal neighbours, so
        // strictly-decreasing values already mean "rearranged".
        if self.values.windows(2).all(|w| w[0] > w[1]) {
            return DecreasingStep(self.clone());
        }
        let mut breaks = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for &i in &self.descending_order() {
            let v = self.values[i];
            if v <= 0.0 {
                break;
            }
            let lo = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            acc += self.breaks[i] - lo;
            if values.last() == Some(&v) {
                *breaks.last_mut().unwrap() = acc;
            } else {
                breaks.push(acc);
                values.push(v);
            }
        }
        DecreasingStep(StepFunction { breaks, values })
    }

    pub fn integral(&self) -> f64 {
        self.cells().map(|(lo, hi, v)| v * (hi - lo)).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        assert!(c.is_finite() && c > 0.0, "scale factor must be positive");
        StepFunction::canonical(
            self.breaks.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    /// `t ↦ f(λt)`: breakpoints shrink by `λ`, values unchanged.
    pub fn dilate(&self, lambda: f64) -> StepFunction {
        assert!(
            lambda.is_finite() && lambda > 0.0,
            "dilation factor must be positive"
        );
        StepFunction {
            breaks: self.breaks.iter().map(|b| b / lambda).collect(),
            values: self.values.clone(),
        }
    }
}

// ----------------------------------------------------------------------
// Decreasing step functions.

/// A step function whose values are strictly decreasing in canonical form;
/// the shape every rearrangement takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecreasingStep(StepFunction);

impl DecreasingStep {
    /// Validating constructor for externally supplied data.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, InvalidInput> {
        let step = StepFunction::new(pairs)?;
        if step.values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(InvalidInput::Function(
                "values must be nonincreasing".into(),
            ));
        }
        Ok(DecreasingStep(step))
    }

    pub fn as_step(&self) -> &StepFunction {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.0.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.0.cells()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.eval(t)
    }

    pub fn integral(&self) -> f64 {
        self.0.integral()
    }

    pub fn max_value(&self) -> f64 {
        self.0.values.first().copied().unwrap_or(0.0)
    }

    pub fn support_scales(&self) -> Option<(f64, f64)> {
        self.0.support_scales()
    }

    pub fn scale(&self, c: f64) -> DecreasingStep {
        DecreasingStep(self.0.scale(c))
    }

    /// Super-level mass by breakpoint lookup: for a decreasing step the set
    /// `{f > y}` is the interval `(0, b_i]` for the last cell with value
    /// above `y`, so no summation (and no rounding) is involved.
    pub fn distribution(&self, y: f64) -> f64 {
        assert!(y >= 0.0, "distribution level must be nonnegative");
        let n = self.0.values.partition_point(|&v| v > y);
        if n == 0 {
            0.0
        } else {
            self.0.breaks[n - 1]
        }
    }

    /// Running average `f**(t) = (1/t) ∫_0^t f`, stored exactly as
    /// hyperbolic cells `a/t + b`.
    pub fn double_star(&self) -> PiecewiseHyperbolic {
        let mut pieces = Vec::with_capacity(self.0.values.len() + 1);
        let mut mass = 0.0; // ∫_0^{lo} f
        for (lo, hi, v) in self.cells() {
            pieces.push(HyperbolicPiece {
                lo,
                hi,
                a: mass - v * lo,
                b: v,
            });
            mass += v * (hi - lo);
        }
        if mass > 0.0 {
            let lo = *self.0.breaks.last().unwrap();
            pieces.push(HyperbolicPiece {
                lo,
                hi: f64::INFINITY,
                a: mass,
                b: 0.0,
            });
        }
        PiecewiseHyperbolic { pieces }
    }

    /// Split at level `f(t)`: returns `(g, h)` with
    /// `g = (f - f(t))⁺ · χ_{{f > f(t)}}` and `h = min(f, f(t))`,
    /// both already decreasing. All arithmetic is plain subtraction of the
    /// stored values, so dyadic inputs split exactly.
    pub fn gh_split(&self, t: f64) -> (DecreasingStep, DecreasingStep) {
        assert!(t > 0.0);
        let y0 = self.eval(t);
        let mut g_breaks = Vec::new();
        let mut g_values = Vec::new();
        let mut h_breaks = Vec::new();
        let mut h_values = Vec::new();
        for (i, &v) in self.0.values.iter().enumerate() {
            let b = self.0.breaks[i];
            if v > y0 {
                g_breaks.push(b);
                g_values.push(v - y0);
            }
            let hv = v.min(y0);
            if h_values.last() == Some(&hv) {
                *h_breaks.last_mut().unwrap() = b;
            } else {
                h_breaks.push(b);
                h_values.push(hv);
            }
        }
        while h_values.last() == Some(&0.0) {
            h_values.pop();
            h_breaks.pop();
        }
        (
            DecreasingStep(StepFunction {
                breaks: g_breaks,
                values: g_values,
            }),
            DecreasingStep(StepFunction {
                breaks: h_breaks,
                values: h_values,
            }),
        )
    }
}

// ----------------------------------------------------------------------
// Piecewise hyperbolic functions.

/// One cell of a piecewise function of the form `t ↦ a/t + b` on `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPiece {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
}

impl HyperbolicPiece {
    pub fn eval(&self, t: f64) -> f64 {
        self.a / t + self.b
    }
}

/// Continuous nonincreasing function built from hyperbolic cells; the exact
/// carrier for running averages `f**`. The last cell of a nonzero function
/// extends to `hi = ∞` with `b = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseHyperbolic {
    pieces: Vec<HyperbolicPiece>,
}

impl PiecewiseHyperbolic {
    pub fn pieces(&self) -> &[HyperbolicPiece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        assert!(t > 0.0, "piecewise hyperbolic functions live on (0, ∞)");
        let i = self.pieces.partition_point(|p| p.hi < t);
        if i < self.pieces.len() {
            self.pieces[i].eval(t)
        } else {
            0.0
        }
    }

    /// Value in the limit `t → 0⁺` (the flat level of the first cell).
    pub fn value_at_origin(&self) -> f64 {
        match self.pieces.first() {
            Some(p) => {
                debug_assert_eq!(p.a, 0.0, "first cell of a running average is flat");
                p.b
            }
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn simple(pairs: &[(f64, f64)]) -> SimpleFunction {
        SimpleFunction::new(pairs.iter().copied()).unwrap()
    }

    fn step(pairs: &[(f64, f64)]) -> StepFunction {
        StepFunction::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn distribution_counts_strict_super_level_mass() {
        let f = simple(&[(3.0, 0.5), (1.0, 1.0), (2.0, 0.25)]);
        assert_eq!(f.distribution(1.5), 0.75);
        assert_eq!(f.distribution(0.0), 1.75);
        assert_eq!(f.distribution(3.0), 0.0);
    }

    #[test]
    fn rearrange_sorts_and_accumulates() {
        let f = simple(&[(3.0, 0.5), (1.0, 1.0), (2.0, 0.25)]);
        let fstar = f.rearrange();
        assert_eq!(fstar.breaks(), &[0.5, 0.75, 1.75]);
        assert_eq!(fstar.values(), &[3.0, 2.0, 1.0]);
        // Cell convention: value on (lo, hi].
        assert_eq!(fstar.eval(0.5), 3.0);
        assert_eq!(fstar.eval(0.6), 2.0);
        assert_eq!(fstar.eval(2.0), 0.0);
    }

    #[test]
    fn rearrange_merges_ties_and_drops_zero_atoms() {
        let f = simple(&[(2.0, 0.5), (2.0, 0.25), (1.0, 1.0), (0.0, 9.0)]);
        let fstar = f.rearrange();
        assert_eq!(fstar.breaks(), &[0.75, 1.75]);
        assert_eq!(fstar.values(), &[2.0, 1.0]);
        assert_eq!(f.distribution(0.0), 1.75); // zero atoms carry no level mass
    }

    #[test]
    fn step_rearrange_example() {
        let f = step(&[(1.0, 2.0), (1.5, 3.0), (3.0, 1.0)]);
        let fstar = f.rearrange();
        assert_eq!(fstar.breaks(), &[0.5, 1.5, 3.0]);
        assert_eq!(fstar.values(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn decreasing_step_is_a_fixed_point_of_rearrange() {
        let f = step(&[(0.5, 3.0), (0.75, 2.0), (1.75, 1.0)]);
        let fstar = f.rearrange();
        assert_eq!(fstar.as_step(), &f);
    }

    #[test]
    fn single_cell_rearranges_to_itself() {
        let f = step(&[(2.5, 4.0)]);
        assert_eq!(f.rearrange().as_step(), &f);
    }

    #[test]
    fn interior_zero_cells_shrink_support() {
        // 1 on (0,1], 0 on (1,2], 2 on (2,3] → support length 2.
        let f = step(&[(1.0, 1.0), (2.0, 0.0), (3.0, 2.0)]);
        let fstar = f.rearrange();
        assert_eq!(fstar.breaks(), &[1.0, 2.0]);
        assert_eq!(fstar.values(), &[2.0, 1.0]);
    }

    #[test]
    fn double_star_of_indicator() {
        let f = DecreasingStep::new([(1.0, 1.0)]).unwrap();
        let avg = f.double_star();
        assert_eq!(avg.pieces().len(), 2);
        assert_eq!(avg.eval(0.5), 1.0);
        assert_eq!(avg.eval(1.0), 1.0);
        assert_eq!(avg.eval(2.0), 0.5);
        assert_eq!(avg.value_at_origin(), 1.0);
    }

    #[test]
    fn double_star_two_cells() {
        // f* = 2 on (0,1], 1 on (1,2]: f**(2) = (2 + 1)/2.
        let f = DecreasingStep::new([(1.0, 2.0), (2.0, 1.0)]).unwrap();
        let avg = f.double_star();
        assert_eq!(avg.eval(2.0), 1.5);
        assert_eq!(avg.eval(1.0), 2.0);
        assert_abs_diff_eq!(avg.eval(1.5), (2.0 + 0.5) / 1.5, epsilon = 1e-15);
        assert_eq!(avg.eval(6.0), 0.5);
    }

    #[test]
    fn double_star_of_constant_is_flat_then_hyperbolic() {
        let f = DecreasingStep::new([(4.0, 2.5)]).unwrap();
        let avg = f.double_star();
        assert_eq!(avg.eval(3.0), 2.5);
        assert_eq!(avg.eval(8.0), 2.5 * 4.0 / 8.0);
    }

    #[test]
    fn gh_split_inside_support() {
        let f = DecreasingStep::new([(1.0, 2.0), (2.0, 1.0)]).unwrap();
        let (g, h) = f.gh_split(1.5);
        assert_eq!(g.breaks(), &[1.0]);
        assert_eq!(g.values(), &[1.0]);
        assert_eq!(h.breaks(), &[2.0]);
        assert_eq!(h.values(), &[1.0]);
    }

    #[test]
    fn gh_split_past_support_gives_g_equals_f() {
        let f = DecreasingStep::new([(1.0, 2.0), (2.0, 1.0)]).unwrap();
        let (g, h) = f.gh_split(5.0);
        assert_eq!(&g, &f);
        assert!(h.is_empty());
    }

    #[test]
    fn gh_split_of_constant_has_empty_g() {
        let f = DecreasingStep::new([(3.0, 2.0)]).unwrap();
        let (g, h) = f.gh_split(1.0);
        assert!(g.is_empty());
        assert_eq!(&h, &f);
    }

    // ------------------------------------------------------------------
    // Properties. Dyadic grids keep every sum exact in binary floating
    // point, which is what lets the equality assertions below be exact.

    fn dyadic_value() -> impl Strategy<Value = f64> {
        (0u32..=10_240).prop_map(|k| k as f64 / 1024.0)
    }

    fn dyadic_mass() -> impl Strategy<Value = f64> {
        (2u32..=12_800).prop_map(|k| k as f64 / 128.0)
    }

    fn dyadic_simple() -> impl Strategy<Value = SimpleFunction> {
        prop::collection::vec((dyadic_value(), dyadic_mass()), 1..24)
            .prop_map(|pairs| SimpleFunction::new(pairs).unwrap())
    }

    proptest! {
        #[test]
        fn equimeasurable_with_rearrangement(f in dyadic_simple(), yk in 0u32..=11_000) {
            let y = yk as f64 / 1024.0;
            let fstar = f.rearrange();
            prop_assert_eq!(f.distribution(y), fstar.distribution(y));
        }

        #[test]
        fn rearrangement_is_invariant_under_atom_order(f in dyadic_simple(), seed in 0u64..1000) {
            let mut pairs: Vec<(f64, f64)> =
                f.atoms().iter().map(|a| (a.value, a.mass)).collect();
            // Cheap deterministic shuffle.
            let n = pairs.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                pairs.swap(i, (s >> 33) as usize % (i + 1));
            }
            let g = SimpleFunction::new(pairs).unwrap();
            prop_assert_eq!(f.rearrange(), g.rearrange());
        }

        #[test]
        fn rearrangement_values_strictly_decrease(f in dyadic_simple()) {
            let fstar = f.rearrange();
            for w in fstar.values().windows(2) {
                prop_assert!(w[0] > w[1]);
            }
            for w in fstar.breaks().windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn mass_and_integral_are_conserved(f in dyadic_simple()) {
            let fstar = f.rearrange();
            // Dyadic inputs: no rounding anywhere, so equality is exact.
            prop_assert_eq!(f.distribution(0.0), fstar.distribution(0.0));
            let direct = f.integral();
            let rearranged = fstar.integral();
            prop_assert!((direct - rearranged).abs() <= 1e-12 * direct.abs().max(1.0));
        }

        #[test]
        fn scaling_commutes_with_rearrangement(f in dyadic_simple(), ck in 1u32..=64) {
            let c = ck as f64 / 16.0;
            prop_assert_eq!(f.scale(c).rearrange(), f.rearrange().scale(c));
        }

        #[test]
        fn double_star_dominates_and_decreases(f in dyadic_simple(), tk in 1u32..=4000) {
            let fstar = f.rearrange();
            let avg = fstar.double_star();
            let t = tk as f64 / 100.0;
            prop_assert!(avg.eval(t) + 1e-12 * avg.value_at_origin() >= fstar.eval(t));
            prop_assert!(avg.eval(t) >= avg.eval(t + 0.25) - 1e-12 * avg.value_at_origin());
        }

        #[test]
        fn gh_split_reconstructs_f(f in dyadic_simple(), tk in 1u32..=4000) {
            let fstar = f.rearrange();
            let t = tk as f64 / 100.0;
            let (g, h) = fstar.gh_split(t);
            let y0 = fstar.eval(t);
            // Probe strictly inside (0, t) and at breakpoints below t.
            let mut probes = vec![t * 0.5, t * 0.99];
            probes.extend(fstar.breaks().iter().copied().filter(|&b| b < t));
            for s in probes {
                let expect_g = (fstar.eval(s) - y0).max(0.0);
                prop_assert_eq!(g.eval(s), expect_g);
                prop_assert_eq!(h.eval(s), fstar.eval(s).min(y0));
                prop_assert_eq!(g.eval(s) + h.eval(s), fstar.eval(s));
            }
        }
    }
}
