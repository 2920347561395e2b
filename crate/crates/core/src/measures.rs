//! Finite atomless Borel measures on the half-line built from density and
//! Cantor parts: distribution functions, the sup-convention generalized
//! inverse, monotone transport between two measures and inverse-transform
//! quadrature.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly;
use crate::spectrum::ContinuousPart;

pub const DEFAULT_CANTOR_DEPTH: u32 = 40;
pub const MAX_CANTOR_DEPTH: u32 = 63;

/// Absolute bisection tolerance of [`MeasureSpec::quantile`], 2^-48.
pub const QUANTILE_TOL: f64 = 3.552713678800501e-15;

/// The Cantor function truncated to `depth` ternary digits.
///
/// The digits of `x` are extracted exactly from its binary representation, so
/// the result equals `C(x')` where `x'` is `x` truncated to `depth` ternary
/// digits. In particular the result is monotone in `x` and within `2^-depth`
/// of the exact Cantor function.
pub fn cantor_function(x: f64, depth: u32) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let depth = depth.min(MAX_CANTOR_DEPTH);
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mantissa, exponent) = if biased == 0 {
        (frac as u128, -1074_i64)
    } else {
        ((frac | (1u64 << 52)) as u128, biased - 1075)
    };
    // x = mantissa / 2^shift with shift > 0 because x < 1.
    let mut shift = -exponent;
    const MAX_SHIFT: i64 = 125;
    if shift > MAX_SHIFT {
        let drop = shift - MAX_SHIFT;
        mantissa = if drop >= 128 { 0 } else { mantissa >> drop };
        shift = MAX_SHIFT;
    }
    let shift = shift as u32;

    let mut num = mantissa;
    let mut acc: u64 = 0;
    for i in 1..=depth {
        num *= 3;
        let digit = num >> shift;
        num -= digit << shift;
        let bit = 1u64 << (depth - i);
        match digit {
            0 => {}
            1 => {
                acc += bit;
                break;
            }
            _ => acc += bit,
        }
    }
    acc as f64 / (1u64 << depth) as f64
}

#[derive(Debug, Clone, PartialEq)]
enum Prepared {
    /// Density coefficients re-expanded around the left support endpoint.
    Density { a: f64, b: f64, shifted: Vec<f64> },
    Cantor { a: f64, b: f64, mass: f64 },
}

impl Prepared {
    fn from_part(part: &ContinuousPart) -> Self {
        match part {
            ContinuousPart::Density { support, coeffs } => Prepared::Density {
                a: support[0],
                b: support[1],
                shifted: poly::taylor_shift(coeffs, support[0]),
            },
            ContinuousPart::Cantor { support, mass } => Prepared::Cantor {
                a: support[0],
                b: support[1],
                mass: *mass,
            },
        }
    }

    fn cdf(&self, t: f64, depth: u32) -> f64 {
        match self {
            Prepared::Density { a, b, shifted } => {
                if t <= *a {
                    0.0
                } else {
                    poly::integral_from_zero(shifted, t.min(*b) - a)
                }
            }
            Prepared::Cantor { a, b, mass } => {
                if t <= *a {
                    0.0
                } else if t >= *b {
                    *mass
                } else {
                    mass * cantor_function((t - a) / (b - a), depth)
                }
            }
        }
    }

    fn density_at(&self, t: f64) -> Option<f64> {
        match self {
            Prepared::Density { a, b, shifted } => {
                Some(if t < *a || t > *b { 0.0 } else { poly::eval(shifted, t - a) })
            }
            Prepared::Cantor { .. } => None,
        }
    }
}

/// A finite atomless measure given as a sum of parts, optionally restricted
/// to a window `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSpec {
    parts: Vec<ContinuousPart>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<[f64; 2]>,
    total_mass: f64,
    #[serde(skip)]
    prepared: Vec<Prepared>,
    #[serde(skip)]
    support: (f64, f64),
    #[serde(skip)]
    cantor_depth: u32,
    /// Base distribution function at the left end of the window.
    #[serde(skip)]
    window_offset: f64,
}

impl MeasureSpec {
    pub fn new(parts: Vec<ContinuousPart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Domain("measure needs at least one part".into()));
        }
        for p in &parts {
            p.validate_measure()?;
        }
        let prepared = parts.iter().map(Prepared::from_part).collect();
        let support = parts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let (a, b) = p.support();
            (lo.min(a), hi.max(b))
        });
        let total_mass = parts.iter().map(ContinuousPart::mass).sum();
        Ok(MeasureSpec {
            parts,
            window: None,
            total_mass,
            prepared,
            support,
            cantor_depth: DEFAULT_CANTOR_DEPTH,
            window_offset: 0.0,
        })
    }

    pub fn from_part(part: ContinuousPart) -> Result<Self> {
        MeasureSpec::new(vec![part])
    }

    pub fn lebesgue(a: f64, b: f64) -> Self {
        MeasureSpec::from_part(ContinuousPart::lebesgue(a, b)).expect("valid interval")
    }

    pub fn with_cantor_depth(mut self, depth: u32) -> Self {
        self.cantor_depth = depth.clamp(1, MAX_CANTOR_DEPTH);
        if let Some([lo, hi]) = self.window {
            self.window_offset = self.base_cdf(lo);
            self.total_mass = self.base_cdf(hi) - self.window_offset;
        }
        self
    }

    pub fn parts(&self) -> &[ContinuousPart] {
        &self.parts
    }

    pub fn window(&self) -> Option<[f64; 2]> {
        self.window
    }

    pub fn has_singular_part(&self) -> bool {
        self.parts
            .iter()
            .any(|p| matches!(p, ContinuousPart::Cantor { .. }))
    }

    /// `μ(ℝ)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Envelope of the support: smallest interval outside which the measure
    /// vanishes (as declared by the parts, intersected with the window).
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    fn base_cdf(&self, t: f64) -> f64 {
        self.prepared
            .iter()
            .map(|p| p.cdf(t, self.cantor_depth))
            .sum()
    }

    /// Distribution function `t ↦ μ([0, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self.window {
            None => self.base_cdf(t),
            Some([lo, hi]) => {
                if t <= lo {
                    0.0
                } else {
                    self.base_cdf(t.min(hi)) - self.window_offset
                }
            }
        }
    }

    /// `μ([s, t])`.
    pub fn interval_mass(&self, s: f64, t: f64) -> f64 {
        self.cdf(t) - self.cdf(s)
    }

    /// Density with respect to Lebesgue measure, or `None` if a singular part
    /// is present.
    pub fn density(&self, t: f64) -> Option<f64> {
        if let Some([lo, hi]) = self.window {
            if t < lo || t > hi {
                return Some(0.0);
            }
        }
        self.prepared.iter().map(|p| p.density_at(t)).sum()
    }

    /// Generalized inverse `sup{x : F(x) <= u}` for `u` in `[0, M]`, found by
    /// bisection on the support envelope. At `u = M` the supremum is clamped
    /// to the right end of the support.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        let m = self.total_mass;
        if !(0.0..=m).contains(&u) {
            return Err(Error::Range(format!("level {u} outside [0, {m}]")));
        }
        let (mut lo, mut hi) = self.support;
        if u >= m {
            return Ok(hi);
        }
        // Invariant: F(lo) <= u < F(hi).
        while hi - lo > QUANTILE_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// The measure restricted to `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let (lo, hi) = match self.window {
            Some([wl, wh]) => (lo.max(wl), hi.min(wh)),
            None => (lo, hi),
        };
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty restriction window [{lo}, {hi}]")));
        }
        let mut out = self.clone();
        out.window = Some([lo, hi]);
        out.support = (self.support.0.max(lo), self.support.1.min(hi));
        out.window_offset = self.base_cdf(lo);
        out.total_mass = self.base_cdf(hi) - out.window_offset;
        if !(out.total_mass > 0.0) || !(out.support.0 < out.support.1) {
            return Err(Error::Domain(format!(
                "restriction to [{lo}, {hi}] carries no mass"
            )));
        }
        Ok(out)
    }

    /// Inverse-transform nodes: quantiles at the midpoints of a uniform level
    /// grid on `[F(s), F(t)]`, together with the common level weight.
    pub fn quadrature_nodes(&self, s: f64, t: f64, nodes: usize) -> (Vec<f64>, f64) {
        let u0 = self.cdf(s);
        let u1 = self.cdf(t).max(u0);
        let n = nodes.max(1);
        let du = (u1 - u0) / n as f64;
        let xs = (0..n)
            .map(|i| {
                let u = (u0 + (i as f64 + 0.5) * du).clamp(0.0, self.total_mass);
                self.quantile(u).expect("level clamped into range")
            })
            .collect();
        (xs, du)
    }

    /// `∫_{[s,t]} h dμ` by the inverse-transform midpoint rule.
    pub fn integrate(&self, integrand: impl Fn(f64) -> f64, s: f64, t: f64, nodes: usize) -> f64 {
        let (xs, du) = self.quadrature_nodes(s, t, nodes);
        xs.into_iter().map(integrand).sum::<f64>() * du
    }
}

/// `G_{μ,ν} = F_μ^{-1} ∘ (M_μ/M_ν)·F_ν`, carrying `supp ν` onto `supp μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    source: MeasureSpec,
    target: MeasureSpec,
    ratio: f64,
}

impl TransportMap {
    /// Map from the target's support into the source's support.
    pub fn new(source: MeasureSpec, target: MeasureSpec) -> Self {
        let ratio = source.total_mass() / target.total_mass();
        TransportMap {
            source,
            target,
            ratio,
        }
    }

    pub fn source(&self) -> &MeasureSpec {
        &self.source
    }

    pub fn target(&self) -> &MeasureSpec {
        &self.target
    }

    /// Source level matched to `t`. Levels are clamped to `[0, M_μ]`.
    pub fn level(&self, t: f64) -> f64 {
        (self.ratio * self.target.cdf(t)).clamp(0.0, self.source.total_mass())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.source
            .quantile(self.level(t))
            .expect("level clamped into range")
    }
}

pub fn transport_map(source: &MeasureSpec, target: &MeasureSpec) -> TransportMap {
    TransportMap::new(source.clone(), target.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushforwardReport {
    pub intervals: usize,
    pub max_residual: f64,
    pub worst_interval: Option<[f64; 2]>,
}

/// Interval form of `ν = (M_ν/M_μ)·μ∘G`: the largest
/// `|ν(I) − (M_ν/M_μ)·μ([G(s), G(t)])|` over the given intervals.
pub fn pushforward_check(
    source: &MeasureSpec,
    target: &MeasureSpec,
    map: &TransportMap,
    intervals: &[[f64; 2]],
) -> PushforwardReport {
    let scale = target.total_mass() / source.total_mass();
    let mut report = PushforwardReport {
        intervals: intervals.len(),
        max_residual: 0.0,
        worst_interval: None,
    };
    for &[s, t] in intervals {
        let lhs = target.interval_mass(s, t);
        let rhs = scale * source.interval_mass(map.eval(s), map.eval(t));
        let r = (lhs - rhs).abs();
        if report.worst_interval.is_none() || r > report.max_residual {
            report.max_residual = r;
            report.worst_interval = Some([s, t]);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor01() -> MeasureSpec {
        MeasureSpec::from_part(ContinuousPart::cantor(0.0, 1.0, 1.0)).unwrap()
    }

    /// Cantor function via floating ternary expansion, used as an oracle at
    /// modest depth where the float digits are still exact.
    fn cantor_oracle(mut x: f64, depth: u32) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        let mut acc = 0.0;
        let mut w = 0.5;
        for _ in 0..depth {
            x *= 3.0;
            let d = x.floor();
            x -= d;
            if d == 1.0 {
                return acc + w;
            }
            if d == 2.0 {
                acc += w;
            }
            w *= 0.5;
        }
        acc
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(MeasureSpec::lebesgue(1.0, 2.0).total_mass(), 1.0);
        let lin = MeasureSpec::from_part(ContinuousPart::density(0.5, 1.0, vec![0.0, 2.0])).unwrap();
        assert!((lin.total_mass() - 0.75).abs() < 1e-15);
        let mixed = MeasureSpec::new(vec![
            ContinuousPart::cantor(1.0, 2.0, 1.0),
            ContinuousPart::lebesgue(2.0, 3.0),
        ])
        .unwrap();
        assert_eq!(mixed.total_mass(), 2.0);
    }

    #[test]
    fn cdf_examples() {
        let leb = MeasureSpec::lebesgue(1.0, 2.0);
        assert_eq!(leb.cdf(1.25), 0.25);
        assert_eq!(leb.cdf(0.0), 0.0);
        assert_eq!(leb.cdf(5.0), 1.0);
        // The f64 nearest 1/3 lies 1.9e-17 below it, which the exact digit
        // expansion resolves: C drops by about (1.9e-17)^(ln2/ln3).
        assert!((cantor01().cdf(1.0 / 3.0) - 0.5).abs() < 1e-10);
        assert_eq!(cantor01().cdf(0.5), 0.5);
    }

    #[test]
    fn cantor_function_matches_float_oracle() {
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let exact = cantor_function(x, 20);
            let oracle = cantor_oracle(x, 20);
            // the float oracle drifts by a digit at most past ~30 steps; depth 20 is safe
            assert!((exact - oracle).abs() <= 2f64.powi(-19), "x={x}");
        }
        assert!((cantor_function(0.25, 40) + cantor_function(0.75, 40) - 1.0).abs() < 1e-11);
        assert!((cantor_function(0.25, 40) - 1.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn quantile_examples() {
        let leb = MeasureSpec::lebesgue(1.0, 2.0);
        assert!((leb.quantile(0.25).unwrap() - 1.25).abs() < 1e-14);
        assert_eq!(leb.quantile(0.0).unwrap(), 1.0);
        assert_eq!(leb.quantile(1.0).unwrap(), 2.0);
        assert!(matches!(leb.quantile(1.5), Err(Error::Range(_))));
        assert!(matches!(leb.quantile(-0.1), Err(Error::Range(_))));
        let q = cantor01().quantile(0.5).unwrap();
        assert!((q - 2.0 / 3.0).abs() < 2f64.powi(-20));
    }

    #[test]
    fn cantor_plateau_sup_by_scan() {
        // sup{x : F(x) <= 1/2} by a uniform scan of the depth-20 Cantor cdf.
        let m = cantor01().with_cantor_depth(20);
        let n = 1 << 22;
        let scan = (0..=n)
            .map(|i| i as f64 / n as f64)
            .filter(|&x| m.cdf(x) <= 0.5)
            .fold(0.0, f64::max);
        assert!((scan - 2.0 / 3.0).abs() < 2f64.powi(-20));
    }

    #[test]
    fn transport_examples() {
        let unit = MeasureSpec::lebesgue(0.0, 1.0);
        let wide = MeasureSpec::lebesgue(0.0, 2.0);
        let g = transport_map(&unit, &wide);
        for i in 0..=20 {
            let t = i as f64 * 0.1;
            assert!((g.eval(t) - t / 2.0).abs() < 1e-13);
        }

        let leb = MeasureSpec::lebesgue(1.0, 2.0);
        let id = transport_map(&leb, &leb);
        for i in 0..=10 {
            let t = 1.0 + i as f64 * 0.1;
            assert!((id.eval(t) - t).abs() < 1e-13);
        }

        // F_μ(G) = F_ν(t): G - 1 = (t - 1)^2.
        let ramp =
            MeasureSpec::from_part(ContinuousPart::density(1.0, 2.0, vec![-2.0, 2.0])).unwrap();
        let g = transport_map(&leb, &ramp);
        for i in 0..10 {
            let t = 1.05 + i as f64 * 0.1;
            assert!((g.eval(t) - (1.0 + (t - 1.0).powi(2))).abs() < 1e-13);
        }
    }

    #[test]
    fn pushforward_examples() {
        let unit = MeasureSpec::lebesgue(0.0, 1.0);
        let wide = MeasureSpec::lebesgue(0.0, 2.0);
        let g = transport_map(&unit, &wide);
        let r = pushforward_check(&unit, &wide, &g, &[[0.0, 0.8]]);
        assert!(r.max_residual < 1e-14);

        let leb = MeasureSpec::lebesgue(1.0, 2.0);
        let id = transport_map(&leb, &leb);
        let r = pushforward_check(&leb, &leb, &id, &[[1.1, 1.7], [1.0, 2.0]]);
        assert!(r.max_residual < 1e-14);
    }

    #[test]
    fn integrate_examples() {
        let leb = MeasureSpec::lebesgue(1.0, 2.0);
        for n in [1, 7, 100] {
            assert!((leb.integrate(|_| 1.0, 1.0, 2.0, n) - 1.0).abs() < 1e-15);
        }
        assert!((leb.integrate(|t| t, 1.0, 2.0, 1000) - 1.5).abs() < 1e-6);
        assert!((cantor01().integrate(|t| t, 0.0, 1.0, 4096) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn restriction_keeps_mass_and_cdf() {
        let leb = MeasureSpec::lebesgue(1.0, 2.0);
        let cell = leb.restrict(1.25, 1.5).unwrap();
        assert!((cell.total_mass() - 0.25).abs() < 1e-15);
        assert_eq!(cell.cdf(1.0), 0.0);
        assert!((cell.cdf(1.3) - 0.05).abs() < 1e-15);
        assert!((cell.cdf(3.0) - 0.25).abs() < 1e-15);
        assert_eq!(cell.support(), (1.25, 1.5));
        assert!(leb.restrict(3.0, 4.0).is_err());
    }
}
