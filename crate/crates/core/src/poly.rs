//! Small dense-polynomial helpers for density parts.
//!
//! Coefficients are stored lowest degree first.

pub(crate) fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficients of `u ↦ p(shift + u)`.
pub(crate) fn taylor_shift(coeffs: &[f64], shift: f64) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    // Repeated synthetic division by (x - shift).
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            out[j] += shift * out[j + 1];
        }
    }
    out
}

/// `∫_0^u p(v) dv` for coefficients already expressed in `v`.
pub(crate) fn integral_from_zero(coeffs: &[f64], u: f64) -> f64 {
    let acc = coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * u + c / (i as f64 + 1.0));
    acc * u
}

/// Bernstein coefficients of `x ↦ p(width·x)` on `[0, 1]`.
fn bernstein(coeffs: &[f64], width: f64) -> Vec<f64> {
    let n = coeffs.len().saturating_sub(1);
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * width.powi(i as i32))
        .collect();
    (0..=n)
        .map(|j| {
            (0..=j)
                .map(|i| binomial(j, i) / binomial(n, i) * scaled[i])
                .sum()
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn split_half(b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    let mut work = b.to_vec();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    left.push(work[0]);
    right.push(work[n - 1]);
    for level in 1..n {
        for i in 0..n - level {
            work[i] = 0.5 * (work[i] + work[i + 1]);
        }
        left.push(work[0]);
        right.push(work[n - level - 1]);
    }
    right.reverse();
    (left, right)
}

/// Whether `p(u) >= 0` for all `u` in `[0, width]`, decided by Bernstein
/// subdivision. Coefficients are in the shifted variable `u`.
pub(crate) fn nonnegative_on(coeffs: &[f64], width: f64) -> bool {
    if coeffs.is_empty() {
        return true;
    }
    let b = bernstein(coeffs, width);
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    nonnegative_rec(&b, 1e-13 * scale, 0)
}

fn nonnegative_rec(b: &[f64], tol: f64, depth: u32) -> bool {
    let first = b[0];
    let last = b[b.len() - 1];
    // Endpoint Bernstein coefficients are actual polynomial values.
    if first < -tol || last < -tol {
        return false;
    }
    if b.iter().all(|&v| v >= -tol) {
        return true;
    }
    if depth >= 48 {
        return true;
    }
    let (l, r) = split_half(b);
    nonnegative_rec(&l, tol, depth + 1) && nonnegative_rec(&r, tol, depth + 1)
}
