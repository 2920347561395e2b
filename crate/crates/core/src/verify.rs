//! Numerical checks of witness properties and finite-dimensional facts about
//! ellipsoids.
//!
//! Every check returns a [`VerificationReport`] (or a short list of them)
//! whose `pass` flag is exactly `worst_residual <= threshold`. Sampling is
//! driven by a ChaCha stream derived from the seed and a per-check stream id,
//! so a report depends only on its inputs and seed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::pushforward_check;
use crate::spectrum::{values_coincide, SpectralDescriptor};
use crate::witness::{apply_shift, CellSample, ShiftVector, ShiftWitness, TransportWitness, Witness};

pub const SHIFT_THRESHOLD: f64 = 1e-12;
pub const DENSITY_THRESHOLD: f64 = 1e-5;
pub const CANTOR_THRESHOLD: f64 = 1e-3;
pub const MIN_CONTRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    /// Contraction margin `1 − ‖Tx‖` of the exhibited unit vector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl VerificationReport {
    pub fn new(name: &str, samples: usize, worst_residual: f64, threshold: f64, seed: u64) -> Self {
        VerificationReport {
            name: name.to_string(),
            samples,
            worst_residual,
            threshold,
            pass: worst_residual <= threshold,
            seed,
            delta: None,
        }
    }
}

/// Sample counts and seed shared by a batch of checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub samples: usize,
    /// Quadrature nodes per cell for transport witnesses.
    pub nodes: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: 1000,
            nodes: 4096,
            seed: 0,
        }
    }
}

mod stream {
    pub const FORM: u64 = 1;
    pub const NONEXPANSIVE: u64 = 2;
    pub const RAYLEIGH: u64 = 3;
    pub const MIN_ATTAINED: u64 = 4;
    pub const FINITE_DIM: u64 = 5;
    pub const EXTREMAL: u64 = 6;
    pub const ISOMETRY: u64 = 7;
    pub const PUSHFORWARD: u64 = 8;
}

pub fn check_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A uniformly distributed unit vector in `R^n`.
pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Eigenbasis coordinates of a finite truncation of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedQuadraticSpace {
    lambdas: Vec<f64>,
}

impl TruncatedQuadraticSpace {
    pub fn from_diagonal(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Precondition("empty truncation".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Domain(format!("eigenvalue {l} is not positive")));
        }
        Ok(TruncatedQuadraticSpace { lambdas })
    }

    pub fn from_descriptor(
        d: &SpectralDescriptor,
        per_sequence: u32,
        replication: Option<usize>,
    ) -> Result<Self> {
        let lambdas = d
            .enumerate_points(per_sequence, replication)
            .into_iter()
            .flat_map(|p| std::iter::repeat_n(p.value, p.multiplicity))
            .collect();
        Self::from_diagonal(lambdas)
    }

    pub fn dimension(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn min_lambda(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `q(x) = ⟨x, Ax⟩`.
    pub fn q(&self, x: &[f64]) -> f64 {
        self.lambdas.iter().zip(x).map(|(l, v)| l * v * v).sum()
    }

    /// `⟪x, y⟫ = ⟨x, Ay⟩`.
    pub fn modified_product(&self, x: &[f64], y: &[f64]) -> f64 {
        self.lambdas
            .iter()
            .zip(x.iter().zip(y))
            .map(|(l, (a, b))| l * a * b)
            .sum()
    }

    pub fn modified_norm(&self, x: &[f64]) -> f64 {
        self.q(x).sqrt()
    }

    pub fn in_ellipsoid(&self, x: &[f64]) -> bool {
        self.q(x) <= 1.0
    }

    pub fn on_sphere(&self, x: &[f64], tol: f64) -> bool {
        (self.q(x) - 1.0).abs() <= tol
    }

    /// Indices of `H_t = Ker(A − t)`.
    pub fn eigen_group(&self, t: f64) -> Vec<usize> {
        (0..self.dimension())
            .filter(|&i| values_coincide(self.lambdas[i], t))
            .collect()
    }

    /// Index groups of equal eigenvalues, in order of first appearance.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, &l) in self.lambdas.iter().enumerate() {
            match groups.iter_mut().find(|(v, _)| values_coincide(*v, l)) {
                Some((_, g)) => g.push(i),
                None => groups.push((l, vec![i])),
            }
        }
        groups.into_iter().map(|(_, g)| g).collect()
    }

    /// `A^{-1/2} U A^{1/2}`, which preserves `q` for every orthogonal `U`.
    pub fn conjugate(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dimension();
        DMatrix::from_fn(n, n, |i, j| {
            u[(i, j)] * (self.lambdas[j] / self.lambdas[i]).sqrt()
        })
    }
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// `T_θ = A^{-1/2} R_θ A^{1/2}` for a 2×2 diagonal `A` and rotation `R_θ`.
pub fn rotation_conjugate(l1: f64, l2: f64, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let space = TruncatedQuadraticSpace { lambdas: vec![l1, l2] };
    space.conjugate(&DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_vec(n, n, gaussian_vec(rng, n * n));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn random_block_orthogonal(rng: &mut impl Rng, groups: &[Vec<usize>], n: usize) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n, n);
    for g in groups {
        let block = random_orthogonal(rng, g.len());
        for (a, &i) in g.iter().enumerate() {
            for (b, &j) in g.iter().enumerate() {
                u[(i, j)] = block[(a, b)];
            }
        }
    }
    u
}

fn euclid(v: &DVector<f64>) -> f64 {
    v.norm()
}

// ---------------------------------------------------------------- witnesses

fn random_window_vector(rng: &mut impl Rng, w: &ShiftWitness) -> ShiftVector {
    let mut x = ShiftVector::zeros(w.window);
    // Supported on k >= -K + 1 so every coefficient stays in the window.
    for c in x.chain.iter_mut().skip(1) {
        *c = rng.sample(StandardNormal);
    }
    let tail_len = rng.random_range(0..4);
    x.tail = (0..tail_len)
        .map(|_| (rng.random_range(w.r..=w.big_r), rng.sample(StandardNormal)))
        .collect();
    let norm = x.norm();
    x.chain.iter_mut().for_each(|c| *c /= norm);
    x.tail.iter_mut().for_each(|(_, c)| *c /= norm);
    x
}

/// Basis vectors of the window first, then random vectors.
fn shift_probes(w: &ShiftWitness, samples: usize, seed: u64, stream: u64) -> Vec<ShiftVector> {
    let mut rng = check_rng(seed, stream);
    let k = w.window as i64;
    let mut out: Vec<ShiftVector> = (-k + 1..=k)
        .map(|i| ShiftVector::basis(w.window, i))
        .take(samples)
        .collect();
    while out.len() < samples {
        out.push(random_window_vector(&mut rng, w));
    }
    out
}

fn shift_form(w: &ShiftWitness, b: Budget) -> VerificationReport {
    let probes = shift_probes(w, b.samples, b.seed, stream::FORM);
    let worst = probes
        .iter()
        .map(|x| (w.image_form(x) - w.quadratic_form(x)).abs())
        .fold(0.0, f64::max);
    VerificationReport::new("form_preservation", probes.len(), worst, SHIFT_THRESHOLD, b.seed)
}

fn shift_nonexpansive(w: &ShiftWitness, b: Budget) -> VerificationReport {
    let probes = shift_probes(w, b.samples, b.seed, stream::NONEXPANSIVE);
    let factor_excess = w.factors.iter().map(|f| f - 1.0).fold(0.0, f64::max);
    let worst = probes
        .iter()
        .map(|x| (apply_shift(w, x).norm() - x.norm()) / x.norm())
        .fold(factor_excess, f64::max);
    VerificationReport::new("nonexpansive", probes.len(), worst, SHIFT_THRESHOLD, b.seed)
}

fn shift_contraction(w: &ShiftWitness, seed: u64) -> VerificationReport {
    let image = apply_shift(w, &ShiftVector::basis(w.window, 1)).norm();
    strict_contraction_report(image, seed)
}

fn strict_contraction_report(image_norm: f64, seed: u64) -> VerificationReport {
    let mut r = VerificationReport::new("strict_contraction", 1, image_norm, 1.0 - MIN_CONTRACTION, seed);
    r.delta = Some(1.0 - image_norm);
    r
}

fn transport_threshold(w: &TransportWitness) -> f64 {
    if w.measure().has_singular_part() {
        CANTOR_THRESHOLD
    } else {
        DENSITY_THRESHOLD
    }
}

/// Random trigonometric polynomial of degree 4 in the cell coordinate.
fn random_cell_function(rng: &mut impl Rng, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let coeffs: Vec<f64> = gaussian_vec(rng, 9);
    let width = hi - lo;
    move |s: f64| {
        let u = std::f64::consts::PI * (s - lo) / width;
        coeffs[0]
            + (1..5)
                .map(|j| {
                    let a = j as f64 * u;
                    coeffs[2 * j - 1] * a.cos() + coeffs[2 * j] * a.sin()
                })
                .sum::<f64>()
    }
}

/// Runs `f(step, probe)` on `per_cell` normalized random functions in every
/// cell that has an in-window image, returning the largest value.
fn transport_sweep(
    w: &TransportWitness,
    per_cell: usize,
    b: Budget,
    stream: u64,
    mut f: impl FnMut(&crate::witness::TransportStep, &CellSample) -> Result<f64>,
) -> Result<(usize, f64)> {
    let mut rng = check_rng(b.seed, stream);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for step in w.steps(b.nodes)?.iter() {
        let k = step.cell;
        for _ in 0..per_cell {
            let g = random_cell_function(&mut rng, w.endpoint(k), w.endpoint(k + 1));
            let values = step.source.nodes.iter().map(|&s| g(s)).collect();
            let probe = CellSample {
                grid: step.source.clone(),
                values,
            };
            let norm = probe.norm_sq().sqrt();
            let r = f(step, &probe.scaled(1.0 / norm))?;
            worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
            count += 1;
        }
    }
    Ok((count, worst))
}

fn per_cell(w: &TransportWitness, samples: usize) -> usize {
    let cells = w.map_range().count().max(1);
    samples.div_ceil(cells).max(1)
}

fn transport_form(w: &TransportWitness, b: Budget) -> Result<VerificationReport> {
    let (n, worst) = transport_sweep(w, per_cell(w, b.samples), b, stream::FORM, |step, f| {
        Ok((step.apply(f)?.form() - f.form()).abs())
    })?;
    Ok(VerificationReport::new("form_preservation", n, worst, transport_threshold(w), b.seed))
}

fn transport_nonexpansive(w: &TransportWitness, b: Budget) -> Result<VerificationReport> {
    let (n, worst) = transport_sweep(w, per_cell(w, b.samples), b, stream::NONEXPANSIVE, |step, f| {
        Ok(step.apply(f)?.norm_sq().sqrt() - 1.0)
    })?;
    Ok(VerificationReport::new("nonexpansive", n, worst, transport_threshold(w), b.seed))
}

fn transport_contraction(w: &TransportWitness, nodes: usize, seed: u64) -> Result<VerificationReport> {
    let probe = w.sample(0, nodes, |_| 1.0)?;
    let norm = probe.norm_sq().sqrt();
    let image = w.apply_transport(&probe.scaled(1.0 / norm))?;
    Ok(strict_contraction_report(image.norm_sq().sqrt(), seed))
}

/// Norm preservation of `H_k f = f∘G_k·√(M_k/M_{k+1})` with `per_cell` random
/// unit functions in every cell.
pub fn check_transport_isometry(w: &TransportWitness, per_cell: usize, b: Budget) -> Result<VerificationReport> {
    let (n, worst) = transport_sweep(w, per_cell, b, stream::ISOMETRY, |step, f| {
        Ok((step.apply_isometry(f)?.norm_sq().sqrt() - 1.0).abs())
    })?;
    Ok(VerificationReport::new("transport_isometry", n, worst, transport_threshold(w), b.seed))
}

/// `0 < ĝ_k(s)² < 1` at the quadrature nodes of every cell with a map.
pub fn check_multiplier_bounds(w: &TransportWitness, nodes: usize, seed: u64) -> Result<VerificationReport> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in w.map_range() {
        for s in w.grid(k, nodes)?.nodes {
            let g = w.multiplier_sq(k, s)?;
            worst = if g > 0.0 { worst.max(g) } else { f64::INFINITY };
            count += 1;
        }
    }
    Ok(VerificationReport::new("multiplier_bounds", count, worst, 1.0 - f64::EPSILON, seed))
}

/// Pushforward identity between adjacent cells on random sub-intervals.
pub fn check_cell_pushforward(w: &TransportWitness, samples: usize, seed: u64) -> Result<VerificationReport> {
    let mut rng = check_rng(seed, stream::PUSHFORWARD);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let cells: Vec<i64> = w.map_range().collect();
    for i in 0..samples {
        let k = cells[i % cells.len()];
        let (lo, hi) = (w.endpoint(k + 1), w.endpoint(k + 2));
        let mut ends = [rng.random_range(lo..=hi), rng.random_range(lo..=hi)];
        ends.sort_by(f64::total_cmp);
        let rep = pushforward_check(w.cell(k)?, w.cell(k + 1)?, w.map(k)?, &[ends]);
        worst = worst.max(rep.max_residual);
        count += 1;
    }
    let threshold = if w.measure().has_singular_part() { 1e-6 } else { 1e-9 };
    Ok(VerificationReport::new("pushforward", count, worst, threshold, seed))
}

/// `|q(Tx) − q(x)|` over probes. Shift probes are window-supported; transport
/// probes are unit functions on cells with an in-window image.
pub fn check_form_preservation(w: &Witness, b: Budget) -> Result<VerificationReport> {
    match w {
        Witness::Shift(s) => Ok(shift_form(s, b)),
        Witness::Transport(t) => transport_form(t, b),
    }
}

/// `(‖Tx‖ − ‖x‖)/‖x‖` over probes; shifts also require every factor `<= 1`.
pub fn check_nonexpansive(w: &Witness, b: Budget) -> Result<VerificationReport> {
    match w {
        Witness::Shift(s) => Ok(shift_nonexpansive(s, b)),
        Witness::Transport(t) => transport_nonexpansive(t, b),
    }
}

/// Exhibits a unit vector with `‖Tx‖ <= 1 − δ`: `e_{n_1}` for shifts and the
/// normalized indicator of `Δ_0` for transports. The residual is `‖Tx‖`.
pub fn check_strict_contraction(w: &Witness, b: Budget) -> Result<VerificationReport> {
    match w {
        Witness::Shift(s) => Ok(shift_contraction(s, b.seed)),
        Witness::Transport(t) => transport_contraction(t, b.nodes, b.seed),
    }
}

// ------------------------------------------------------ spectral truncations

/// Largest escape of sampled Rayleigh quotients from `[min λ, max λ]`.
pub fn check_rayleigh_bounds(space: &TruncatedQuadraticSpace, samples: usize, seed: u64) -> VerificationReport {
    let mut rng = check_rng(seed, stream::RAYLEIGH);
    let (lo, hi) = (space.min_lambda(), space.max_lambda());
    let worst = (0..samples)
        .map(|_| {
            let x = random_unit_vector(&mut rng, space.dimension());
            let r = space.q(&x);
            (lo - r).max(r - hi).max(0.0)
        })
        .fold(0.0, f64::max);
    VerificationReport::new("rayleigh_bounds", samples, worst, 1e-12, seed)
}

/// How close the sampled extremes of the Rayleigh quotient come to the
/// spectral bounds, relative to `max λ − min λ`. This measures sampling
/// coverage rather than a property of `A`: a simple extreme eigenvalue in
/// dimension 8 is approached within 5% by roughly one sample in 10^5.
/// The CLI does not run it.
pub fn check_rayleigh_approach(space: &TruncatedQuadraticSpace, samples: usize, seed: u64) -> VerificationReport {
    let mut rng = check_rng(seed, stream::RAYLEIGH);
    let (lo, hi) = (space.min_lambda(), space.max_lambda());
    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let r = space.q(&random_unit_vector(&mut rng, space.dimension()));
        smin = smin.min(r);
        smax = smax.max(r);
    }
    let range = hi - lo;
    let worst = if range > 0.0 {
        (smin - lo).max(hi - smax) / range
    } else {
        0.0
    };
    VerificationReport::new("rayleigh_approach", samples, worst, 0.05, seed)
}

/// Unit vectors inside the bottom eigenspace attain `min λ`; any vector with
/// mass `m` outside it exceeds `min λ` by at least `gap·m`.
pub fn check_min_attained(space: &TruncatedQuadraticSpace, samples: usize, seed: u64) -> Result<VerificationReport> {
    let n = space.dimension();
    if n < 2 {
        return Err(Error::Precondition("need at least two dimensions".into()));
    }
    let mut rng = check_rng(seed, stream::MIN_ATTAINED);
    let lo = space.min_lambda();
    let bottom = space.eigen_group(lo);
    let gap = space
        .lambdas()
        .iter()
        .filter(|&&l| !values_coincide(l, lo))
        .fold(f64::INFINITY, |m, &l| m.min(l))
        - lo;
    let gap = if gap.is_finite() { gap } else { 0.0 };
    let scale = space.max_lambda().max(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let inner = random_unit_vector(&mut rng, bottom.len());
        let mut x = vec![0.0; n];
        for (&i, v) in bottom.iter().zip(inner) {
            x[i] = v;
        }
        worst = worst.max((space.q(&x) - lo).abs() / scale);

        let y = random_unit_vector(&mut rng, n);
        let outside: f64 = (0..n)
            .filter(|i| !bottom.contains(i))
            .map(|i| y[i] * y[i])
            .sum();
        worst = worst.max((lo + gap * outside - space.q(&y)) / scale);
    }
    Ok(VerificationReport::new("min_attained", 2 * samples, worst, 1e-12, seed))
}

/// Samples `T = A^{-1/2} U A^{1/2}` with `U` Haar-orthogonal (odd trials) or
/// block-orthogonal on the eigenvalue groups (even trials). Reports:
/// form preservation, `‖T‖ >= 1`, contraction implies isometry, and `‖T‖ = 1`
/// for block-diagonal `U`.
pub fn check_finite_dim_plasticity(
    space: &TruncatedQuadraticSpace,
    trials: usize,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    let n = space.dimension();
    if !(2..=8).contains(&n) {
        return Err(Error::Precondition(format!("dimension {n} outside 2..=8")));
    }
    let mut rng = check_rng(seed, stream::FINITE_DIM);
    let groups = space.groups();
    let (mut form, mut lower, mut iso, mut block) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut accepted, mut blocks) = (0, 0);
    for trial in 0..trials {
        let is_block = trial % 2 == 0;
        let u = if is_block {
            random_block_orthogonal(&mut rng, &groups, n)
        } else {
            random_orthogonal(&mut rng, n)
        };
        let t = space.conjugate(&u);
        let norm = operator_norm(&t);
        let probes: Vec<DVector<f64>> = (0..8)
            .map(|_| DVector::from_vec(random_unit_vector(&mut rng, n)))
            .collect();
        for x in &probes {
            let tx = &t * x;
            let qx = space.q(x.as_slice());
            form = form.max((space.q(tx.as_slice()) - qx).abs() / qx);
        }
        lower = lower.max(1.0 - norm);
        if norm <= 1.0 + 1e-10 {
            accepted += 1;
            for x in &probes {
                iso = iso.max((euclid(&(&t * x)) - 1.0).abs());
            }
        }
        if is_block {
            blocks += 1;
            block = block.max((norm - 1.0).abs());
        }
    }
    Ok(vec![
        VerificationReport::new("finite_dim_form", trials, form, 1e-10, seed),
        VerificationReport::new("finite_dim_norm_lower_bound", trials, lower, 1e-10, seed),
        VerificationReport::new("finite_dim_contraction_isometry", accepted, iso, 1e-8, seed),
        VerificationReport::new("finite_dim_block_norm", blocks, block, 1e-10, seed),
    ])
}

fn projector(n: usize, group: &[usize]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for &i in group {
        p[(i, i)] = 1.0;
    }
    p
}

/// For form-preserving contractions `T`, checks `T P = P T` and that `T`
/// is isometric on the bottom and top eigenspaces.
pub fn check_extremal_invariance(
    space: &TruncatedQuadraticSpace,
    trials: usize,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    let n = space.dimension();
    if n < 2 {
        return Err(Error::Precondition("need at least two dimensions".into()));
    }
    let mut rng = check_rng(seed, stream::EXTREMAL);
    let groups = space.groups();
    let extremes = [
        ("extremal_invariance_min", space.eigen_group(space.min_lambda())),
        ("extremal_invariance_max", space.eigen_group(space.max_lambda())),
    ];
    let projectors: Vec<DMatrix<f64>> = extremes.iter().map(|(_, g)| projector(n, g)).collect();
    let mut worst = [0.0f64; 2];
    let mut accepted = 0;
    for trial in 0..trials {
        let u = if trial % 4 == 3 {
            random_orthogonal(&mut rng, n)
        } else {
            random_block_orthogonal(&mut rng, &groups, n)
        };
        let t = space.conjugate(&u);
        if operator_norm(&t) > 1.0 + 1e-10 {
            continue;
        }
        accepted += 1;
        for (slot, ((_, group), p)) in extremes.iter().zip(&projectors).enumerate() {
            let comm = operator_norm(&(&t * p - p * &t));
            let inner = random_unit_vector(&mut rng, group.len());
            let mut x = DVector::zeros(n);
            for (&i, v) in group.iter().zip(inner) {
                x[i] = v;
            }
            let drift = (euclid(&(&t * &x)) - 1.0).abs();
            worst[slot] = worst[slot].max(comm).max(drift);
        }
    }
    Ok(extremes
        .iter()
        .zip(worst)
        .map(|((name, _), w)| VerificationReport::new(name, accepted, w, 1e-8, seed))
        .collect())
}

/// The three witness checks, plus multiplier bounds for transports.
pub fn witness_checks(w: &Witness, b: Budget) -> Result<Vec<VerificationReport>> {
    let mut out = vec![
        check_form_preservation(w, b)?,
        check_nonexpansive(w, b)?,
        check_strict_contraction(w, b)?,
    ];
    if let Witness::Transport(t) = w {
        out.push(check_multiplier_bounds(t, b.nodes.min(256), b.seed)?);
    }
    Ok(out)
}
