//! Plasticity decision for descriptor spectra.
//!
//! The ellipsoid of `A` is LEC-plastic iff `A` has no continuous spectrum and
//! every subset of eigenvalues with more than one element has a maximum of
//! finite multiplicity or a minimum of finite multiplicity. Over descriptors
//! that condition fails exactly when one of four component patterns occurs,
//! since a set of eigenvalues without a minimum must contain infinitely many
//! terms of one decreasing sequence (and symmetrically for maxima).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::{Direction, SpectralDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    Continuous,
    TwoInfiniteAtoms,
    InfiniteMinNoMax,
    NoMinInfiniteMax,
    NoMinNoMax,
}

impl Rule {
    pub fn is_eigenvalue_rule(self) -> bool {
        self != Rule::Continuous
    }
}

/// A descriptor component, by index into the canonical descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ComponentRef {
    Atom { index: usize, value: f64 },
    Sequence { index: usize, limit: f64, direction: Direction },
    Continuous { index: usize },
}

/// A set `B` of spectral data that rules out plasticity. For eigenvalue
/// rules `r = inf B < R = sup B`; for the continuous rule `[r, R]` is the
/// support of the offending part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationCertificate {
    pub rule: Rule,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub components: Vec<ComponentRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub plastic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ViolationCertificate>,
}

fn atom_ref(d: &SpectralDescriptor, index: usize) -> ComponentRef {
    ComponentRef::Atom {
        index,
        value: d.atoms[index].value,
    }
}

fn seq_ref(d: &SpectralDescriptor, index: usize) -> ComponentRef {
    let s = &d.sequences[index];
    ComponentRef::Sequence {
        index,
        limit: s.limit,
        direction: s.direction,
    }
}

/// Increasing sequence with the largest limit (first on ties).
fn top_increasing(d: &SpectralDescriptor) -> Option<(usize, f64)> {
    d.sequences_in(Direction::Increasing)
        .map(|(i, s)| (i, s.limit))
        .fold(None, |best, (i, l)| match best {
            Some((_, bl)) if bl >= l => best,
            _ => Some((i, l)),
        })
}

/// Decreasing sequence with the smallest limit (first on ties).
fn bottom_decreasing(d: &SpectralDescriptor) -> Option<(usize, f64)> {
    d.sequences_in(Direction::Decreasing)
        .map(|(i, s)| (i, s.limit))
        .fold(None, |best, (i, l)| match best {
            Some((_, bl)) if bl <= l => best,
            _ => Some((i, l)),
        })
}

/// The certificate of the first rule that fires, or `None` if the ellipsoid
/// is plastic. Rules are tried in the order of [`Rule`].
pub fn violating_subset(d: &SpectralDescriptor) -> Option<ViolationCertificate> {
    if let Some(part) = d.continuous.first() {
        let (a, b) = part.support();
        return Some(ViolationCertificate {
            rule: Rule::Continuous,
            r: a,
            big_r: b,
            components: vec![ComponentRef::Continuous { index: 0 }],
        });
    }

    // Atoms are sorted, so the first and last infinite atoms are extreme.
    let infinite: Vec<usize> = d.infinite_atoms().map(|(i, _)| i).collect();
    if let (Some(&lo), Some(&hi)) = (infinite.first(), infinite.last()) {
        if lo != hi {
            return Some(ViolationCertificate {
                rule: Rule::TwoInfiniteAtoms,
                r: d.atoms[lo].value,
                big_r: d.atoms[hi].value,
                components: vec![atom_ref(d, lo), atom_ref(d, hi)],
            });
        }
    }

    let inc = top_increasing(d);
    let dec = bottom_decreasing(d);

    if let Some(&ai) = infinite.first() {
        let mu = d.atoms[ai].value;
        if let Some((si, s)) = inc.filter(|&(_, s)| s > mu) {
            return Some(ViolationCertificate {
                rule: Rule::InfiniteMinNoMax,
                r: mu,
                big_r: s,
                components: vec![atom_ref(d, ai), seq_ref(d, si)],
            });
        }
        if let Some((si, dd)) = dec.filter(|&(_, dd)| dd < mu) {
            return Some(ViolationCertificate {
                rule: Rule::NoMinInfiniteMax,
                r: dd,
                big_r: mu,
                components: vec![seq_ref(d, si), atom_ref(d, ai)],
            });
        }
    }

    if let (Some((di, dd)), Some((ii, s))) = (dec, inc) {
        if dd < s {
            return Some(ViolationCertificate {
                rule: Rule::NoMinNoMax,
                r: dd,
                big_r: s,
                components: vec![seq_ref(d, di), seq_ref(d, ii)],
            });
        }
    }
    None
}

/// A threshold `τ` splitting the eigenvalues of a plastic descriptor into a
/// part above `τ` that is well-ordered by `>=` and a part below `τ` that is
/// well-ordered by `<=`, with no infinite multiplicity on either side.
pub fn find_tau(d: &SpectralDescriptor) -> Result<f64> {
    if let Some(cert) = violating_subset(d) {
        return Err(Error::Precondition(format!(
            "descriptor is not plastic (rule {:?})",
            cert.rule
        )));
    }
    if !d.has_point_spectrum() {
        return Err(Error::Precondition("descriptor has no eigenvalues".into()));
    }
    if let Some((_, atom)) = d.infinite_atoms().next() {
        return Ok(atom.value);
    }
    if let Some((_, s)) = top_increasing(d) {
        return Ok(s);
    }
    if let Some((_, dd)) = bottom_decreasing(d) {
        return Ok(dd);
    }
    d.atoms
        .first()
        .map(|a| a.value)
        .ok_or_else(|| Error::Precondition("descriptor has no eigenvalues".into()))
}

pub fn classify(d: &SpectralDescriptor) -> Verdict {
    match violating_subset(d) {
        Some(cert) => Verdict {
            plastic: false,
            tau: None,
            certificate: Some(cert),
        },
        None => Verdict {
            plastic: true,
            tau: find_tau(d).ok(),
            certificate: None,
        },
    }
}
