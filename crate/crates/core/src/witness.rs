//! Witness operators for non-plastic ellipsoids.
//!
//! For eigenvalue certificates the witness is a weighted bilateral shift
//! `T e_{n_k} = √(λ_{n_k}/λ_{n_{k-1}}) e_{n_{k-1}}` along a chain of
//! eigenvectors, identity elsewhere. For a continuous part it is the
//! multiplication-operator construction: the support is cut into a bilateral
//! sequence of cells `Δ_k`, `Δ_k` is transported onto `Δ_{k+1}` by the
//! monotone map between the restricted measures, and a multiplier restores
//! the quadratic form.
//!
//! Both are represented on a finite window `k ∈ {-K, …, K}`.

use std::borrow::Cow;
use std::sync::OnceLock;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::measures::{MeasureSpec, TransportMap};
use crate::plasticity::{ComponentRef, Rule, ViolationCertificate};
use crate::spectrum::{ContinuousPart, EigenSequence, SpectralDescriptor};

/// Identifies the eigenvector `e_{n_k}`: the component it comes from, the
/// sequence term (for sequences) and the ordinal inside the eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisLabel {
    pub component: ComponentRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<u32>,
    pub ordinal: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftWitness {
    pub window: usize,
    pub rule: Rule,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `λ_{n_k}` for `k = -K, …, K`.
    pub lambdas: Vec<f64>,
    /// `√(λ_{n_k}/λ_{n_{k-1}})` for `k = -K+1, …, K`.
    pub factors: Vec<f64>,
    pub labels: Vec<BasisLabel>,
}

/// A vector in the span of the chain `e_{n_k}` plus finitely many other
/// eigenvectors, each tail entry carrying `(eigenvalue, coefficient)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVector {
    pub chain: Vec<f64>,
    pub tail: Vec<(f64, f64)>,
}

impl ShiftVector {
    pub fn zeros(window: usize) -> Self {
        ShiftVector {
            chain: vec![0.0; 2 * window + 1],
            tail: Vec::new(),
        }
    }

    /// Unit coordinate vector `e_{n_k}`.
    pub fn basis(window: usize, k: i64) -> Self {
        let mut v = ShiftVector::zeros(window);
        v.chain[(k + window as i64) as usize] = 1.0;
        v
    }

    pub fn norm_sq(&self) -> f64 {
        self.chain.iter().map(|x| x * x).sum::<f64>()
            + self.tail.iter().map(|(_, c)| c * c).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

fn terms_where(
    seq: &EigenSequence,
    count: usize,
    accept: impl Fn(f64) -> bool,
) -> Result<Vec<(u32, f64)>> {
    const SEARCH_LIMIT: u32 = 10_000_000;
    let mut j = 1;
    while !accept(seq.term(j)) {
        j += 1;
        if j > SEARCH_LIMIT {
            return Err(Error::Capacity(format!(
                "no term of the sequence with limit {} meets the chain bound",
                seq.limit
            )));
        }
    }
    let out: Vec<(u32, f64)> = (0..count as u32).map(|i| (j + i, seq.term(j + i))).collect();
    // Terms must stay distinct from each other and from the limit in f64.
    for w in out.windows(2) {
        if w[0].1 == w[1].1 || w[1].1 == seq.limit {
            return Err(Error::Capacity(format!(
                "sequence with limit {} collapses in floating point at term {}",
                seq.limit, w[1].0
            )));
        }
    }
    Ok(out)
}

fn component_index(cert: &ViolationCertificate, pos: usize) -> Result<ComponentRef> {
    cert.components
        .get(pos)
        .copied()
        .ok_or_else(|| Error::Precondition("certificate is missing components".into()))
}

impl ShiftWitness {
    fn idx(&self, k: i64) -> usize {
        (k + self.window as i64) as usize
    }

    pub fn lambda(&self, k: i64) -> f64 {
        self.lambdas[self.idx(k)]
    }

    /// Weight of `e_{n_k} ↦ e_{n_{k-1}}`, for `k` in `-K+1..=K`.
    pub fn factor(&self, k: i64) -> f64 {
        self.factors[self.idx(k) - 1]
    }

    /// `λ_{n_k}/λ_{n_{k-1}}`, the exact square of [`factor`](Self::factor).
    pub fn ratio(&self, k: i64) -> f64 {
        self.lambda(k) / self.lambda(k - 1)
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.window as i64)..=self.window as i64
    }

    /// `q(x) = ⟨x, Ax⟩`.
    pub fn quadratic_form(&self, x: &ShiftVector) -> f64 {
        let chain: f64 = self
            .lambdas
            .iter()
            .zip(&x.chain)
            .map(|(l, c)| l * c * c)
            .sum();
        chain + x.tail.iter().map(|(l, c)| l * c * c).sum::<f64>()
    }

    /// `q(Tx)` computed from the ratios `λ_{n_k}/λ_{n_{k-1}}` rather than the
    /// rounded factors.
    pub fn image_form(&self, x: &ShiftVector) -> f64 {
        let k_max = self.window as i64;
        let chain: f64 = (-k_max + 1..=k_max)
            .map(|k| {
                let c = x.chain[self.idx(k)];
                self.lambda(k - 1) * self.ratio(k) * c * c
            })
            .sum();
        chain + x.tail.iter().map(|(l, c)| l * c * c).sum::<f64>()
    }

    fn check_invariants(&self) -> Result<()> {
        let k_max = self.window as i64;
        let bad = |msg: String| Err(Error::Capacity(msg));
        if self.lambdas.len() != 2 * self.window + 1 || self.factors.len() != 2 * self.window {
            return bad("window size mismatch".into());
        }
        for k in -k_max + 1..=k_max {
            if self.lambda(k) > self.lambda(k - 1) {
                return bad(format!("λ increases at k = {k}"));
            }
        }
        if !(self.lambda(1) < self.lambda(0)) {
            return bad("λ_{n_1} is not below λ_{n_0}".into());
        }
        let mid = 0.5 * (self.r + self.big_r);
        if (1..=k_max).any(|k| !(self.lambda(k) < mid)) {
            return bad("chain below the midpoint reaches (r + R)/2".into());
        }
        if self.factors.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return bad("factor outside (0, 1]".into());
        }
        for (i, a) in self.labels.iter().enumerate() {
            if self.labels[i + 1..].contains(a) {
                return bad("basis labels repeat".into());
            }
        }
        Ok(())
    }
}

pub fn build_shift_witness(
    d: &SpectralDescriptor,
    cert: &ViolationCertificate,
    window: usize,
) -> Result<ShiftWitness> {
    if !cert.rule.is_eigenvalue_rule() {
        return Err(Error::Precondition(
            "shift witness needs an eigenvalue certificate".into(),
        ));
    }
    if window == 0 {
        return Err(Error::Precondition("window must be at least 1".into()));
    }
    let k = window;
    let mid = 0.5 * (cert.r + cert.big_r);

    let atom_chain = |c: ComponentRef, len: usize| -> Result<Vec<(f64, BasisLabel)>> {
        match c {
            ComponentRef::Atom { index, .. } => {
                let atom = d
                    .atoms
                    .get(index)
                    .ok_or_else(|| Error::Precondition("certificate atom out of range".into()))?;
                if !atom.multiplicity.is_infinite() {
                    return Err(Error::Capacity(format!(
                        "atom {} has finite multiplicity",
                        atom.value
                    )));
                }
                Ok((0..len as u64)
                    .map(|ordinal| {
                        (
                            atom.value,
                            BasisLabel {
                                component: c,
                                term: None,
                                ordinal,
                            },
                        )
                    })
                    .collect())
            }
            _ => Err(Error::Precondition("expected an atom component".into())),
        }
    };
    let seq_chain = |c: ComponentRef,
                     len: usize,
                     accept: &dyn Fn(f64) -> bool|
     -> Result<Vec<(f64, BasisLabel)>> {
        match c {
            ComponentRef::Sequence { index, .. } => {
                let seq = d.sequences.get(index).ok_or_else(|| {
                    Error::Precondition("certificate sequence out of range".into())
                })?;
                Ok(terms_where(seq, len, accept)?
                    .into_iter()
                    .map(|(j, v)| {
                        (
                            v,
                            BasisLabel {
                                component: c,
                                term: Some(j),
                                ordinal: 0,
                            },
                        )
                    })
                    .collect())
            }
            _ => Err(Error::Precondition("expected a sequence component".into())),
        }
    };

    // `lower` holds k = 1, 2, …, K; `upper` holds k = 0, -1, …, -K.
    let (lower, upper) = match cert.rule {
        Rule::TwoInfiniteAtoms => (
            atom_chain(component_index(cert, 0)?, k)?,
            atom_chain(component_index(cert, 1)?, k + 1)?,
        ),
        Rule::InfiniteMinNoMax => {
            let lower = atom_chain(component_index(cert, 0)?, k)?;
            let mu = lower[0].0;
            let upper = seq_chain(component_index(cert, 1)?, k + 1, &|v| v > mu)?;
            (lower, upper)
        }
        Rule::NoMinInfiniteMax => {
            let upper = atom_chain(component_index(cert, 1)?, k + 1)?;
            let lower = seq_chain(component_index(cert, 0)?, k, &|v| v < mid)?;
            (lower, upper)
        }
        Rule::NoMinNoMax => {
            let lower = seq_chain(component_index(cert, 0)?, k, &|v| v < mid)?;
            let first = lower[0].0;
            let upper = seq_chain(component_index(cert, 1)?, k + 1, &|v| v > first)?;
            (lower, upper)
        }
        Rule::Continuous => unreachable!("rejected above"),
    };

    let chain: Vec<(f64, BasisLabel)> = upper.into_iter().rev().chain(lower).collect();
    let lambdas: Vec<f64> = chain.iter().map(|(l, _)| *l).collect();
    let labels = chain.into_iter().map(|(_, b)| b).collect();
    let factors = lambdas.windows(2).map(|w| (w[1] / w[0]).sqrt()).collect();

    let w = ShiftWitness {
        window,
        rule: cert.rule,
        r: cert.r,
        big_r: cert.big_r,
        lambdas,
        factors,
        labels,
    };
    w.check_invariants()?;
    Ok(w)
}

/// `(Tx)_{k-1} = factor(k)·x_k` on the chain, identity on the tail. The
/// coefficient at `k = -K` leaves the window and the image at `k = K` is 0.
pub fn apply_shift(w: &ShiftWitness, x: &ShiftVector) -> ShiftVector {
    let mut out = ShiftVector {
        chain: vec![0.0; x.chain.len()],
        tail: x.tail.clone(),
    };
    for k in -(w.window as i64) + 1..=w.window as i64 {
        out.chain[w.idx(k - 1)] = w.factor(k) * x.chain[w.idx(k)];
    }
    out
}

/// Bilateral quantile partition: normalized levels `s_k` and endpoints
/// `a_k = F^{-1}(M·s_k)` for `k = -K, …, K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub window: usize,
    pub levels: Vec<f64>,
    pub endpoints: Vec<f64>,
}

/// `s_k = 2^{k-1}` for `k <= 0` and `1 - 2^{-k-1}` for `k >= 1`.
pub fn partition_level(k: i64) -> f64 {
    if k <= 0 {
        2f64.powi((k - 1) as i32)
    } else {
        1.0 - 2f64.powi((-k - 1) as i32)
    }
}

pub fn build_partition(m: &MeasureSpec, window: usize) -> Result<Partition> {
    if window == 0 {
        return Err(Error::Precondition("window must be at least 1".into()));
    }
    let k = window as i64;
    let levels: Vec<f64> = (-k..=k).map(partition_level).collect();
    let endpoints = levels
        .iter()
        .map(|&s| m.quantile(m.total_mass() * s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition {
        window,
        levels,
        endpoints,
    })
}

#[derive(Debug, Clone)]
pub struct TransportWitness {
    measure: MeasureSpec,
    partition: Partition,
    cells: Vec<MeasureSpec>,
    /// `G_k : Δ_{k+1} → Δ_k`.
    maps: Vec<TransportMap>,
    /// `G_k^{-1} : Δ_k → Δ_{k+1}`.
    inverse_maps: Vec<TransportMap>,
    /// Steps for every map cell at the first node count requested.
    steps_cache: OnceLock<(usize, Vec<TransportStep>)>,
}

/// Quadrature grid on one cell: inverse-transform nodes and the level weight.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub cell: i64,
    pub nodes: Vec<f64>,
    pub weight: f64,
}

/// A function on `Δ_k` sampled at the nodes of a [`CellGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellSample {
    pub grid: CellGrid,
    pub values: Vec<f64>,
}

impl CellSample {
    /// `∫_{Δ_k} |f|² dμ`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.weight
    }

    /// `∫_{Δ_k} t |f(t)|² dμ`.
    pub fn form(&self) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(t, v)| t * v * v)
            .sum::<f64>()
            * self.grid.weight
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self
    }
}

/// Precomputed action of `T` from `Δ_k` to `Δ_{k+1}` on fixed grids.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportStep {
    pub cell: i64,
    pub source: CellGrid,
    pub target: CellGrid,
    /// `G_k(t_i)` for each target node.
    pub images: Vec<f64>,
    /// Source node index whose level matches each target node.
    pub source_index: Vec<usize>,
    /// `√(G_k(t_i)/t_i)·√(M_k/M_{k+1})`.
    pub gains: Vec<f64>,
    /// `√(M_k/M_{k+1})`.
    pub normalization: f64,
}

impl TransportStep {
    fn check_source(&self, f: &CellSample) -> Result<()> {
        if f.grid.cell != self.cell || f.values.len() != self.source.nodes.len() {
            return Err(Error::Range(format!(
                "sample on cell {} with {} nodes does not match step from cell {}",
                f.grid.cell,
                f.values.len(),
                self.cell
            )));
        }
        Ok(())
    }

    /// `Tf = g_k · H_k f` on the target grid.
    pub fn apply(&self, f: &CellSample) -> Result<CellSample> {
        self.check_source(f)?;
        let values = self
            .source_index
            .iter()
            .zip(&self.gains)
            .map(|(&i, &g)| g * f.values[i])
            .collect();
        Ok(CellSample {
            grid: self.target.clone(),
            values,
        })
    }

    /// `H_k f = f∘G_k · √(M_k/M_{k+1})`, the norm-preserving part of `T`.
    pub fn apply_isometry(&self, f: &CellSample) -> Result<CellSample> {
        self.check_source(f)?;
        let values = self
            .source_index
            .iter()
            .map(|&i| self.normalization * f.values[i])
            .collect();
        Ok(CellSample {
            grid: self.target.clone(),
            values,
        })
    }
}

impl TransportWitness {
    pub fn from_measure(measure: MeasureSpec, window: usize) -> Result<Self> {
        let partition = build_partition(&measure, window)?;
        let cells = partition
            .endpoints
            .windows(2)
            .map(|w| measure.restrict(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let maps = cells
            .windows(2)
            .map(|w| TransportMap::new(w[0].clone(), w[1].clone()))
            .collect();
        let inverse_maps = cells
            .windows(2)
            .map(|w| TransportMap::new(w[1].clone(), w[0].clone()))
            .collect();
        Ok(TransportWitness {
            measure,
            partition,
            cells,
            maps,
            inverse_maps,
            steps_cache: OnceLock::new(),
        })
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn window(&self) -> usize {
        self.partition.window
    }

    /// Cells `Δ_k`, `k = -K, …, K-1`.
    pub fn cell_range(&self) -> std::ops::RangeInclusive<i64> {
        let k = self.window() as i64;
        -k..=k - 1
    }

    /// Cells `k` for which `G_k : Δ_{k+1} → Δ_k` exists inside the window.
    pub fn map_range(&self) -> std::ops::RangeInclusive<i64> {
        let k = self.window() as i64;
        -k..=k - 2
    }

    fn cell_idx(&self, k: i64) -> Result<usize> {
        if self.cell_range().contains(&k) {
            Ok((k + self.window() as i64) as usize)
        } else {
            Err(Error::Range(format!("cell {k} outside the window")))
        }
    }

    fn map_idx(&self, k: i64) -> Result<usize> {
        if self.map_range().contains(&k) {
            Ok((k + self.window() as i64) as usize)
        } else {
            Err(Error::Range(format!("no transport map from cell {}", k + 1)))
        }
    }

    /// `a_k` for `k = -K, …, K`.
    pub fn endpoint(&self, k: i64) -> f64 {
        self.partition.endpoints[(k + self.window() as i64) as usize]
    }

    pub fn cell(&self, k: i64) -> Result<&MeasureSpec> {
        Ok(&self.cells[self.cell_idx(k)?])
    }

    /// `M_k = μ(Δ_k)`.
    pub fn mass(&self, k: i64) -> Result<f64> {
        Ok(self.cell(k)?.total_mass())
    }

    pub fn map(&self, k: i64) -> Result<&TransportMap> {
        Ok(&self.maps[self.map_idx(k)?])
    }

    pub fn inverse_map(&self, k: i64) -> Result<&TransportMap> {
        Ok(&self.inverse_maps[self.map_idx(k)?])
    }

    /// `ĝ_k(s)² = s / G_k^{-1}(s)` for `s ∈ Δ_k`.
    pub fn multiplier_sq(&self, k: i64, s: f64) -> Result<f64> {
        Ok(s / self.inverse_map(k)?.eval(s))
    }

    pub fn multiplier(&self, k: i64, s: f64) -> Result<f64> {
        self.multiplier_sq(k, s).map(f64::sqrt)
    }

    /// `g_k(t) = √(G_k(t)/t)` for `t ∈ Δ_{k+1}`.
    pub fn gain(&self, k: i64, t: f64) -> Result<f64> {
        Ok((self.map(k)?.eval(t) / t).sqrt())
    }

    /// `(Tf)(t) = g_k(t)·f(G_k(t))·√(M_k/M_{k+1})` for `f` supported on `Δ_k`.
    pub fn apply_fn<'a>(
        &'a self,
        k: i64,
        f: impl Fn(f64) -> f64 + 'a,
    ) -> Result<impl Fn(f64) -> f64 + 'a> {
        let map = self.map(k)?;
        let norm = (self.mass(k)? / self.mass(k + 1)?).sqrt();
        Ok(move |t: f64| {
            let s = map.eval(t);
            (s / t).sqrt() * f(s) * norm
        })
    }

    pub fn grid(&self, k: i64, nodes: usize) -> Result<CellGrid> {
        let cell = self.cell(k)?;
        let (lo, hi) = cell.support();
        let (nodes, weight) = cell.quadrature_nodes(lo, hi, nodes);
        Ok(CellGrid {
            cell: k,
            nodes,
            weight,
        })
    }

    pub fn sample(&self, k: i64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<CellSample> {
        let grid = self.grid(k, nodes)?;
        let values = grid.nodes.iter().map(|&t| f(t)).collect();
        Ok(CellSample { grid, values })
    }

    pub fn step(&self, k: i64, nodes: usize) -> Result<TransportStep> {
        self.step_from(self.grid(k, nodes)?)
    }

    fn step_from(&self, source: CellGrid) -> Result<TransportStep> {
        let k = source.cell;
        let map = self.map(k)?;
        let n = source.nodes.len();
        let target = self.grid(k + 1, n)?;
        let target_cell = self.cell(k + 1)?;
        let norm = (self.mass(k)? / self.mass(k + 1)?).sqrt();
        let (lo, hi) = (self.endpoint(k), self.endpoint(k + 1));
        let slack = 1e-12 * hi.abs().max(1.0);
        let mut images = Vec::with_capacity(n);
        let mut source_index = Vec::with_capacity(n);
        let mut gains = Vec::with_capacity(n);
        for &t in &target.nodes {
            let s = map.eval(t);
            if s < lo - slack || s > hi + slack {
                return Err(Error::Range(format!(
                    "image {s} of node {t} lies outside cell [{lo}, {hi}]"
                )));
            }
            let level = target_cell.cdf(t) / target_cell.total_mass();
            let i = ((level * n as f64).floor() as usize).min(n - 1);
            images.push(s);
            source_index.push(i);
            gains.push((s / t).sqrt() * norm);
        }
        Ok(TransportStep {
            cell: k,
            source,
            target,
            images,
            source_index,
            gains,
            normalization: norm,
        })
    }

    /// Steps for all cells in [`map_range`](Self::map_range), in order. The
    /// first node count requested is memoized.
    pub fn steps(&self, nodes: usize) -> Result<Cow<'_, [TransportStep]>> {
        let build = || {
            self.map_range()
                .map(|k| self.step(k, nodes))
                .collect::<Result<Vec<_>>>()
        };
        match self.steps_cache.get() {
            Some((n, steps)) if *n == nodes => Ok(Cow::Borrowed(steps)),
            Some(_) => Ok(Cow::Owned(build()?)),
            None => {
                let steps = build()?;
                let (_, cached) = self.steps_cache.get_or_init(|| (nodes, steps));
                Ok(Cow::Borrowed(cached))
            }
        }
    }

    /// Applies `T` to a function sampled on `Δ_k`, giving samples on `Δ_{k+1}`.
    pub fn apply_transport(&self, f: &CellSample) -> Result<CellSample> {
        self.step_from(f.grid.clone())?.apply(f)
    }

    /// Serializable summary; multiplier tables only when `full` is set.
    pub fn summary(&self, full: bool) -> serde_json::Value {
        let masses: Vec<f64> = self
            .cells
            .iter()
            .map(MeasureSpec::total_mass)
            .collect();
        let mut doc = json!({
            "kind": "transport",
            "window": self.window(),
            "measure": self.measure,
            "levels": self.partition.levels,
            "endpoints": self.partition.endpoints,
            "masses": masses,
        });
        if full {
            const SAMPLES: usize = 16;
            let tables: Vec<serde_json::Value> = self
                .map_range()
                .map(|k| {
                    let (a, b) = (self.endpoint(k), self.endpoint(k + 1));
                    let points: Vec<[f64; 2]> = (0..SAMPLES)
                        .map(|i| {
                            let s = a + (b - a) * (i as f64 + 0.5) / SAMPLES as f64;
                            [s, self.multiplier_sq(k, s).expect("k in map range")]
                        })
                        .collect();
                    json!({ "cell": k, "multiplier_sq": points })
                })
                .collect();
            doc["multipliers"] = serde_json::Value::Array(tables);
        }
        doc
    }
}

pub fn build_transport_witness(part: &ContinuousPart, window: usize) -> Result<TransportWitness> {
    TransportWitness::from_measure(MeasureSpec::from_part(part.clone())?, window)
}

#[derive(Debug, Clone)]
pub enum Witness {
    Shift(ShiftWitness),
    Transport(TransportWitness),
}

impl Witness {
    /// Builds the witness matching the certificate's mechanism.
    pub fn build(
        d: &SpectralDescriptor,
        cert: &ViolationCertificate,
        window: usize,
    ) -> Result<Self> {
        match cert.rule {
            Rule::Continuous => {
                let index = match cert.components.first() {
                    Some(ComponentRef::Continuous { index }) => *index,
                    _ => return Err(Error::Precondition("certificate lacks a continuous part".into())),
                };
                let part = d
                    .continuous
                    .get(index)
                    .ok_or_else(|| Error::Precondition("continuous part out of range".into()))?;
                build_transport_witness(part, window).map(Witness::Transport)
            }
            _ => build_shift_witness(d, cert, window).map(Witness::Shift),
        }
    }

    pub fn summary(&self, full: bool) -> serde_json::Value {
        match self {
            Witness::Shift(w) => {
                let mut v = serde_json::to_value(w).expect("shift witness serializes");
                v["kind"] = json!("shift");
                v
            }
            Witness::Transport(w) => w.summary(full),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plasticity::violating_subset;
    use crate::spectrum::EigenAtom;

    fn two_atoms() -> (SpectralDescriptor, ViolationCertificate) {
        let d = SpectralDescriptor::new(
            vec![EigenAtom::infinite(1.0), EigenAtom::infinite(2.0)],
            vec![],
            vec![],
        )
        .unwrap();
        let c = violating_subset(&d).unwrap();
        (d, c)
    }

    #[test]
    fn two_atom_chain() {
        let (d, c) = two_atoms();
        let w = build_shift_witness(&d, &c, 2).unwrap();
        assert_eq!(w.lambdas, vec![2.0, 2.0, 2.0, 1.0, 1.0]);
        assert_eq!(w.factors, vec![1.0, 1.0, 0.5f64.sqrt(), 1.0]);
    }

    #[test]
    fn infinite_min_chain() {
        let d = SpectralDescriptor::new(
            vec![EigenAtom::infinite(1.0)],
            vec![EigenSequence::increasing(2.0, 1.0, 0.5)],
            vec![],
        )
        .unwrap();
        let c = violating_subset(&d).unwrap();
        let w = build_shift_witness(&d, &c, 1).unwrap();
        assert_eq!(w.lambdas, vec![1.75, 1.5, 1.0]);
        assert_eq!(w.factors, vec![(1.5f64 / 1.75).sqrt(), (1.0f64 / 1.5).sqrt()]);
    }

    #[test]
    fn no_min_infinite_max_chain_stays_below_midpoint() {
        let d = SpectralDescriptor::new(
            vec![EigenAtom::infinite(2.0)],
            vec![EigenSequence::decreasing(1.0, 1.0, 0.5)],
            vec![],
        )
        .unwrap();
        let c = violating_subset(&d).unwrap();
        let w = build_shift_witness(&d, &c, 3).unwrap();
        // D-terms 1.5, 1.25, … ; midpoint 1.5 excludes the first.
        assert_eq!(&w.lambdas[..4], &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(&w.lambdas[4..], &[1.25, 1.125, 1.0625]);
    }

    #[test]
    fn apply_shift_examples() {
        let (d, c) = two_atoms();
        let w = build_shift_witness(&d, &c, 2).unwrap();
        let img = apply_shift(&w, &ShiftVector::basis(2, 1));
        assert_eq!(img.chain, ShiftVector::basis(2, 0).chain.iter().map(|x| x * 0.5f64.sqrt()).collect::<Vec<_>>());

        let tail = ShiftVector {
            chain: vec![0.0; 5],
            tail: vec![(3.0, 0.7), (5.0, -0.2)],
        };
        assert_eq!(apply_shift(&w, &tail), tail);

        let top = apply_shift(&w, &ShiftVector::basis(2, 2));
        assert_eq!(top.chain[3], w.factor(2));
        assert_eq!(top.chain[4], 0.0);
        // Nothing in the window maps onto e_{n_K}.
        for k in -2..=2 {
            assert_eq!(apply_shift(&w, &ShiftVector::basis(2, k)).chain[4], 0.0);
        }
    }

    #[test]
    fn rejects_continuous_certificate() {
        let d = SpectralDescriptor::new(vec![], vec![], vec![ContinuousPart::lebesgue(1.0, 2.0)])
            .unwrap();
        let c = violating_subset(&d).unwrap();
        assert!(matches!(
            build_shift_witness(&d, &c, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sequence_collapse_is_a_capacity_error() {
        let d = SpectralDescriptor::new(
            vec![EigenAtom::infinite(1.0)],
            vec![EigenSequence::increasing(2.0, 1.0, 0.5)],
            vec![],
        )
        .unwrap();
        let c = violating_subset(&d).unwrap();
        assert!(matches!(
            build_shift_witness(&d, &c, 80),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn lebesgue_partition() {
        let p = build_partition(&MeasureSpec::lebesgue(1.0, 2.0), 2).unwrap();
        let expect = [1.125, 1.25, 1.5, 1.75, 1.875];
        for (a, e) in p.endpoints.iter().zip(expect) {
            assert!((a - e).abs() < 1e-14, "{a} vs {e}");
        }
        assert_eq!(partition_level(0), 0.5);
        assert_eq!(partition_level(1), 0.75);
    }

    #[test]
    fn cantor_partition_hits_plateau_sup() {
        let m = MeasureSpec::from_part(ContinuousPart::cantor(0.0, 1.0, 1.0)).unwrap();
        let p = build_partition(&m, 1).unwrap();
        assert!((p.endpoints[1] - 2.0 / 3.0).abs() < 2f64.powi(-20));
    }

    #[test]
    fn endpoint_multipliers() {
        let w = build_transport_witness(&ContinuousPart::lebesgue(1.0, 2.0), 4).unwrap();
        let (a0, a1) = (w.endpoint(0), w.endpoint(1));
        assert_eq!((a0, a1), (1.5, 1.75));
        assert!((w.multiplier_sq(0, a0).unwrap() - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_isolates_gain() {
        let w = build_transport_witness(&ContinuousPart::lebesgue(1.0, 2.0), 4).unwrap();
        let tf = w.apply_fn(0, |_| 1.0).unwrap();
        let norm = (w.mass(0).unwrap() / w.mass(1).unwrap()).sqrt();
        let (a0, a1, a2) = (w.endpoint(0), w.endpoint(1), w.endpoint(2));
        for i in 0..10 {
            let t = a1 + (a2 - a1) * (i as f64 + 0.5) / 10.0;
            let g = a0 + (t - a1) * (a1 - a0) / (a2 - a1);
            assert!((tf(t) - (g / t).sqrt() * norm).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_apply_matches_closure() {
        let w = build_transport_witness(&ContinuousPart::lebesgue(1.0, 2.0), 4).unwrap();
        let f = |s: f64| (3.0 * s).sin() + 0.5;
        let sample = w.sample(-1, 64, f).unwrap();
        let image = w.apply_transport(&sample).unwrap();
        let tf = w.apply_fn(-1, f).unwrap();
        assert_eq!(image.grid.cell, 0);
        for (t, v) in image.grid.nodes.iter().zip(&image.values) {
            assert!((tf(*t) - v).abs() < 1e-12);
        }
        assert!(matches!(
            w.step(w.window() as i64 - 1, 8),
            Err(Error::Range(_))
        ));
    }
}
