//! Finite descriptors for the spectrum of a bounded positive self-adjoint
//! operator: eigenvalue atoms, geometric eigenvalue sequences and atomless
//! continuous parts.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly;

/// Relative tolerance under which two spectral values are the same eigenvalue.
const COINCIDENCE_RTOL: f64 = 1e-12;

pub(crate) fn values_coincide(a: f64, b: f64) -> bool {
    (a - b).abs() <= COINCIDENCE_RTOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u64),
    Infinite,
}

impl Multiplicity {
    pub fn is_infinite(self) -> bool {
        matches!(self, Multiplicity::Infinite)
    }

    /// Number of basis vectors used for this eigenvalue in a finite truncation.
    pub fn truncated(self, replication: usize) -> usize {
        match self {
            Multiplicity::Finite(m) => m as usize,
            Multiplicity::Infinite => replication,
        }
    }
}

impl std::ops::Add for Multiplicity {
    type Output = Multiplicity;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a + b),
            _ => Multiplicity::Infinite,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(m) => write!(f, "{m}"),
            Multiplicity::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(m) => s.serialize_u64(*m),
            Multiplicity::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct MultVisitor;

        impl Visitor<'_> for MultVisitor {
            type Value = Multiplicity;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or the string \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Multiplicity, E> {
                Ok(Multiplicity::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Multiplicity, E> {
                u64::try_from(v)
                    .map(Multiplicity::Finite)
                    .map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Multiplicity, E> {
                if v == "inf" {
                    Ok(Multiplicity::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(MultVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenAtom {
    pub value: f64,
    pub multiplicity: Multiplicity,
}

impl EigenAtom {
    pub fn new(value: f64, multiplicity: Multiplicity) -> Self {
        EigenAtom { value, multiplicity }
    }

    pub fn infinite(value: f64) -> Self {
        EigenAtom::new(value, Multiplicity::Infinite)
    }

    pub fn finite(value: f64, multiplicity: u64) -> Self {
        EigenAtom::new(value, Multiplicity::Finite(multiplicity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "inc")]
    Increasing,
    #[serde(rename = "dec")]
    Decreasing,
}

/// Eigenvalues `limit ∓ offset·ratio^j`, `j = 1, 2, …`, each with the same
/// finite multiplicity. The limit itself is not an eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSequence {
    pub limit: f64,
    pub direction: Direction,
    pub offset: f64,
    pub ratio: f64,
    #[serde(rename = "multiplicity")]
    pub per_term_multiplicity: u64,
}

impl EigenSequence {
    pub fn increasing(limit: f64, offset: f64, ratio: f64) -> Self {
        EigenSequence {
            limit,
            direction: Direction::Increasing,
            offset,
            ratio,
            per_term_multiplicity: 1,
        }
    }

    pub fn decreasing(limit: f64, offset: f64, ratio: f64) -> Self {
        EigenSequence {
            limit,
            direction: Direction::Decreasing,
            offset,
            ratio,
            per_term_multiplicity: 1,
        }
    }

    pub fn with_multiplicity(mut self, m: u64) -> Self {
        self.per_term_multiplicity = m;
        self
    }

    /// Distance of term `j` from the limit.
    pub fn gap(&self, j: u32) -> f64 {
        self.offset * self.ratio.powi(j as i32)
    }

    /// The `j`-th term, `j >= 1`.
    pub fn term(&self, j: u32) -> f64 {
        match self.direction {
            Direction::Increasing => self.limit - self.gap(j),
            Direction::Decreasing => self.limit + self.gap(j),
        }
    }

    /// Term index whose value coincides with `value`, if any.
    pub fn index_of(&self, value: f64) -> Option<u32> {
        let dist = match self.direction {
            Direction::Increasing => self.limit - value,
            Direction::Decreasing => value - self.limit,
        };
        if !(dist > 0.0) {
            return None;
        }
        let guess = ((dist / self.offset).ln() / self.ratio.ln()).round();
        if !guess.is_finite() {
            return None;
        }
        let guess = guess.clamp(1.0, u32::MAX as f64 - 2.0) as u32;
        (guess.saturating_sub(1).max(1)..=guess + 1).find(|&j| values_coincide(self.term(j), value))
    }

    /// Smallest and largest value over all terms and the limit.
    pub fn envelope(&self) -> (f64, f64) {
        match self.direction {
            Direction::Increasing => (self.term(1), self.limit),
            Direction::Decreasing => (self.limit, self.term(1)),
        }
    }

    fn sort_key(&self) -> (Direction, f64, f64, f64) {
        (self.direction, self.limit, self.offset, self.ratio)
    }

    fn same_terms(&self, other: &EigenSequence) -> bool {
        self.sort_key() == other.sort_key()
    }
}

/// An atomless finite measure on a positive interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ContinuousPart {
    /// Polynomial density `Σ coeffs[i]·t^i` on the support.
    Density { support: [f64; 2], coeffs: Vec<f64> },
    /// The Cantor measure carried affinely onto the support, scaled to `mass`.
    Cantor { support: [f64; 2], mass: f64 },
}

impl ContinuousPart {
    pub fn lebesgue(a: f64, b: f64) -> Self {
        ContinuousPart::Density {
            support: [a, b],
            coeffs: vec![1.0],
        }
    }

    pub fn density(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        ContinuousPart::Density {
            support: [a, b],
            coeffs,
        }
    }

    pub fn cantor(a: f64, b: f64, mass: f64) -> Self {
        ContinuousPart::Cantor {
            support: [a, b],
            mass,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            ContinuousPart::Density { support, .. } | ContinuousPart::Cantor { support, .. } => {
                (support[0], support[1])
            }
        }
    }

    /// Total mass of the part; closed form for densities.
    pub fn mass(&self) -> f64 {
        match self {
            ContinuousPart::Density { support, coeffs } => {
                let shifted = poly::taylor_shift(coeffs, support[0]);
                poly::integral_from_zero(&shifted, support[1] - support[0])
            }
            ContinuousPart::Cantor { mass, .. } => *mass,
        }
    }

    /// Checks the part is a valid finite atomless measure with `a >= 0`.
    pub fn validate_measure(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("support [{a}, {b}] is not finite")));
        }
        if a < 0.0 || a >= b {
            return Err(Error::Domain(format!(
                "support [{a}, {b}] must satisfy 0 <= a < b"
            )));
        }
        match self {
            ContinuousPart::Density { coeffs, .. } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain(
                        "density coefficients must be a non-empty list of finite numbers".into(),
                    ));
                }
                let shifted = poly::taylor_shift(coeffs, a);
                if !poly::nonnegative_on(&shifted, b - a) {
                    return Err(Error::Domain(format!(
                        "density is negative somewhere on [{a}, {b}]"
                    )));
                }
                let mass = self.mass();
                if !(mass > 0.0) {
                    return Err(Error::Domain(format!(
                        "density has non-positive mass {mass} on [{a}, {b}]"
                    )));
                }
            }
            ContinuousPart::Cantor { mass, .. } => {
                if !(mass.is_finite() && *mass > 0.0) {
                    return Err(Error::Domain(format!("cantor mass {mass} must be positive")));
                }
            }
        }
        Ok(())
    }

    fn sort_cmp(&self, other: &Self) -> Ordering {
        let rank = |p: &ContinuousPart| match p {
            ContinuousPart::Density { .. } => 0,
            ContinuousPart::Cantor { .. } => 1,
        };
        let (a0, b0) = self.support();
        let (a1, b1) = other.support();
        rank(self)
            .cmp(&rank(other))
            .then(a0.total_cmp(&a1))
            .then(b0.total_cmp(&b1))
            .then_with(|| match (self, other) {
                (
                    ContinuousPart::Density { coeffs: c0, .. },
                    ContinuousPart::Density { coeffs: c1, .. },
                ) => c0
                    .iter()
                    .zip(c1)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(c0.len().cmp(&c1.len())),
                (
                    ContinuousPart::Cantor { mass: m0, .. },
                    ContinuousPart::Cantor { mass: m1, .. },
                ) => m0.total_cmp(m1),
                _ => Ordering::Equal,
            })
    }
}

/// A finite atom that coincides with a sequence term, folded into that term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermOverlay {
    pub sequence: usize,
    pub term: u32,
    pub multiplicity: u64,
}

/// A truncated spectral point: eigenvalue and the number of basis vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "DescriptorDoc", into = "DescriptorDoc")]
pub struct SpectralDescriptor {
    pub atoms: Vec<EigenAtom>,
    pub sequences: Vec<EigenSequence>,
    pub continuous: Vec<ContinuousPart>,
    /// Extra multiplicity on sequence terms from folded finite atoms.
    pub overlay: Vec<TermOverlay>,
}

/// Wire form of a descriptor, field names as in the JSON schema.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorDoc {
    #[serde(default)]
    pub atoms: Vec<EigenAtom>,
    #[serde(default)]
    pub sequences: Vec<EigenSequence>,
    #[serde(default)]
    pub continuous: Vec<ContinuousPart>,
}

impl TryFrom<DescriptorDoc> for SpectralDescriptor {
    type Error = Error;

    fn try_from(doc: DescriptorDoc) -> Result<Self> {
        SpectralDescriptor::new(doc.atoms, doc.sequences, doc.continuous)
    }
}

impl From<SpectralDescriptor> for DescriptorDoc {
    fn from(d: SpectralDescriptor) -> Self {
        let mut atoms = d.atoms.clone();
        atoms.extend(d.overlay.iter().map(|o| {
            EigenAtom::finite(d.sequences[o.sequence].term(o.term), o.multiplicity)
        }));
        atoms.sort_by(|x, y| x.value.total_cmp(&y.value));
        DescriptorDoc {
            atoms,
            sequences: d.sequences,
            continuous: d.continuous,
        }
    }
}

/// Parses and canonicalizes a JSON descriptor document.
pub fn parse_descriptor(document: &str) -> Result<SpectralDescriptor> {
    let doc: DescriptorDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    SpectralDescriptor::try_from(doc)
}

pub fn serialize_descriptor(d: &SpectralDescriptor) -> String {
    serde_json::to_string(&DescriptorDoc::from(d.clone())).expect("descriptor serializes")
}

impl SpectralDescriptor {
    /// Validates the components and returns the canonical descriptor.
    pub fn new(
        atoms: Vec<EigenAtom>,
        sequences: Vec<EigenSequence>,
        continuous: Vec<ContinuousPart>,
    ) -> Result<Self> {
        let d = SpectralDescriptor {
            atoms,
            sequences,
            continuous,
            overlay: Vec::new(),
        };
        d.validate()?;
        Ok(d.canonicalize())
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
            && self.sequences.is_empty()
            && self.continuous.is_empty()
            && self.overlay.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Domain("empty descriptor".into()));
        }
        for atom in &self.atoms {
            if !(atom.value.is_finite() && atom.value > 0.0) {
                return Err(Error::Domain(format!(
                    "atom value {} must be positive and finite",
                    atom.value
                )));
            }
            if atom.multiplicity == Multiplicity::Finite(0) {
                return Err(Error::Domain(format!(
                    "atom {} has multiplicity 0",
                    atom.value
                )));
            }
        }
        for s in &self.sequences {
            if !(s.limit.is_finite() && s.limit > 0.0) {
                return Err(Error::Domain(format!(
                    "sequence limit {} must be positive and finite",
                    s.limit
                )));
            }
            if !(s.offset.is_finite() && s.offset > 0.0) {
                return Err(Error::Domain(format!(
                    "sequence offset {} must be positive and finite",
                    s.offset
                )));
            }
            if !(s.ratio > 0.0 && s.ratio < 1.0) {
                return Err(Error::Domain(format!(
                    "sequence ratio {} must lie in (0, 1)",
                    s.ratio
                )));
            }
            if s.per_term_multiplicity == 0 {
                return Err(Error::Domain("sequence multiplicity must be >= 1".into()));
            }
            if s.direction == Direction::Increasing && !(s.term(1) > 0.0) {
                return Err(Error::Domain(format!(
                    "increasing sequence has non-positive first term {}",
                    s.term(1)
                )));
            }
        }
        for part in &self.continuous {
            part.validate_measure()?;
            let (a, _) = part.support();
            if a <= 0.0 {
                return Err(Error::Domain(format!(
                    "continuous support must start above 0, got {a}"
                )));
            }
        }
        for o in &self.overlay {
            if o.sequence >= self.sequences.len() || o.term == 0 || o.multiplicity == 0 {
                return Err(Error::Domain("dangling term overlay".into()));
            }
        }
        Ok(())
    }

    /// Canonical form: atoms merged and sorted, identical sequences merged,
    /// components sorted, and finite atoms sitting on a sequence term folded
    /// into that term as an overlay.
    pub fn canonicalize(self) -> Self {
        let SpectralDescriptor {
            mut atoms,
            sequences,
            mut continuous,
            overlay,
        } = self;

        // Unfold any existing overlay so repeated canonicalization is stable.
        atoms.extend(overlay.iter().map(|o| {
            EigenAtom::finite(sequences[o.sequence].term(o.term), o.multiplicity)
        }));

        atoms.sort_by(|x, y| x.value.total_cmp(&y.value));
        let mut merged: Vec<EigenAtom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if values_coincide(last.value, atom.value) => {
                    last.multiplicity = last.multiplicity + atom.multiplicity;
                }
                _ => merged.push(atom),
            }
        }

        let mut seqs = sequences;
        seqs.sort_by(|x, y| {
            let (dx, lx, ox, rx) = x.sort_key();
            let (dy, ly, oy, ry) = y.sort_key();
            dx.cmp(&dy)
                .then(lx.total_cmp(&ly))
                .then(ox.total_cmp(&oy))
                .then(rx.total_cmp(&ry))
        });
        let mut merged_seqs: Vec<EigenSequence> = Vec::with_capacity(seqs.len());
        for s in seqs {
            match merged_seqs.last_mut() {
                Some(last) if last.same_terms(&s) => {
                    last.per_term_multiplicity += s.per_term_multiplicity;
                }
                _ => merged_seqs.push(s),
            }
        }

        continuous.sort_by(|x, y| x.sort_cmp(y));

        let mut kept = Vec::with_capacity(merged.len());
        let mut overlay = Vec::new();
        for atom in merged {
            let hit = match atom.multiplicity {
                Multiplicity::Finite(m) => merged_seqs
                    .iter()
                    .enumerate()
                    .find_map(|(i, s)| s.index_of(atom.value).map(|j| (i, j, m))),
                Multiplicity::Infinite => None,
            };
            match hit {
                Some((sequence, term, multiplicity)) => overlay.push(TermOverlay {
                    sequence,
                    term,
                    multiplicity,
                }),
                None => kept.push(atom),
            }
        }
        overlay.sort_by_key(|o| (o.sequence, o.term));

        SpectralDescriptor {
            atoms: kept,
            sequences: merged_seqs,
            continuous,
            overlay,
        }
    }

    /// Infimum and supremum of the spectrum.
    pub fn spectral_bounds(&self) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut widen = |a: f64, b: f64| {
            lo = lo.min(a);
            hi = hi.max(b);
        };
        for atom in &self.atoms {
            widen(atom.value, atom.value);
        }
        for s in &self.sequences {
            let (a, b) = s.envelope();
            widen(a, b);
        }
        for p in &self.continuous {
            let (a, b) = p.support();
            widen(a, b);
        }
        if lo.is_finite() && hi.is_finite() {
            Ok((lo, hi))
        } else {
            Err(Error::EmptyDescriptor)
        }
    }

    /// Finite truncation of the point spectrum, sorted ascending with equal
    /// values merged. Infinite multiplicities become `replication` copies,
    /// defaulting to `2·per_sequence`.
    pub fn enumerate_points(
        &self,
        per_sequence: u32,
        replication: Option<usize>,
    ) -> Vec<SpectralPoint> {
        let replication = replication.unwrap_or(2 * per_sequence as usize);
        let mut raw: Vec<SpectralPoint> = Vec::new();
        raw.extend(self.atoms.iter().map(|a| SpectralPoint {
            value: a.value,
            multiplicity: a.multiplicity.truncated(replication),
        }));
        for s in &self.sequences {
            raw.extend((1..=per_sequence).map(|j| SpectralPoint {
                value: s.term(j),
                multiplicity: s.per_term_multiplicity as usize,
            }));
        }
        raw.extend(self.overlay.iter().map(|o| SpectralPoint {
            value: self.sequences[o.sequence].term(o.term),
            multiplicity: o.multiplicity as usize,
        }));
        raw.sort_by(|x, y| x.value.total_cmp(&y.value));

        let mut out: Vec<SpectralPoint> = Vec::with_capacity(raw.len());
        for p in raw.into_iter().filter(|p| p.multiplicity > 0) {
            match out.last_mut() {
                Some(last) if values_coincide(last.value, p.value) => {
                    last.multiplicity += p.multiplicity;
                }
                _ => out.push(p),
            }
        }
        out
    }

    pub fn infinite_atoms(&self) -> impl Iterator<Item = (usize, &EigenAtom)> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.multiplicity.is_infinite())
    }

    pub fn sequences_in(&self, direction: Direction) -> impl Iterator<Item = (usize, &EigenSequence)> {
        self.sequences
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.direction == direction)
    }

    /// Whether the operator has any eigenvalue.
    pub fn has_point_spectrum(&self) -> bool {
        !(self.atoms.is_empty() && self.sequences.is_empty() && self.overlay.is_empty())
    }
}
