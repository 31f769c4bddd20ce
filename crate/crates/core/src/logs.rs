//! Iterated truncated logarithms, all floored at 1.

/// `log_1 t = 1 + max(ln t, 0)`, and `log_k t = log_1(log_{k-1} t)` for k > 1.
///
/// Every stage maps `(0, ∞)` into `[1, ∞)`, so the recursion never leaves the
/// domain; for `t <= 1` the whole tower collapses to 1.
pub fn logk(k: u32, t: f64) -> f64 {
    assert!(k >= 1, "logk: k starts at 1");
    assert!(t > 0.0, "logk: t must be positive");
    let mut v = log1(t);
    for _ in 1..k {
        v = log1(v);
    }
    v
}

#[inline]
pub fn log1(t: f64) -> f64 {
    1.0 + t.ln().max(0.0)
}
