//! Trust triples and the neighborhood of a peer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lang::ast::{Constraint, ConstraintOwner};
use crate::lang::System;
use crate::relational::PeerId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustLevel {
    Less,
    Same,
}

impl fmt::Display for TrustLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrustLevel::Less => "less",
            TrustLevel::Same => "same",
        })
    }
}

/// `(subject, level, object)`: the subject trusts itself `level` than the object.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TrustTriple {
    pub subject: PeerId,
    pub level: TrustLevel,
    pub object: PeerId,
}

impl TrustTriple {
    pub fn new(subject: impl Into<PeerId>, level: TrustLevel, object: impl Into<PeerId>) -> Self {
        TrustTriple {
            subject: subject.into(),
            level,
            object: object.into(),
        }
    }
}

impl fmt::Display for TrustTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.level, self.object)
    }
}

/// Checks that the level is a function of `(subject, object)` and that no
/// peer rates itself.
pub fn validate_trust<'a>(triples: impl IntoIterator<Item = &'a TrustTriple>) -> Result<()> {
    let mut levels: BTreeMap<(&PeerId, &PeerId), BTreeSet<TrustLevel>> = BTreeMap::new();
    for t in triples {
        levels.entry((&t.subject, &t.object)).or_default().insert(t.level);
    }
    let bad: Vec<(PeerId, PeerId)> = levels
        .into_iter()
        .filter(|((s, o), ls)| s == o || ls.len() > 1)
        .map(|((s, o), _)| (s.clone(), o.clone()))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::TrustViolation(bad))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Neighborhood {
    pub peer: PeerId,
    pub less: BTreeSet<PeerId>,
    pub same: BTreeSet<PeerId>,
    /// Relation names of the extended schema.
    pub extended_schema: BTreeSet<String>,
    pub less_decs: Vec<Constraint>,
    pub same_decs: Vec<Constraint>,
    pub warnings: Vec<String>,
}

impl Neighborhood {
    /// Relations of the extended schema owned by one of `peers`.
    pub fn relations_of(&self, system: &System, peers: &BTreeSet<PeerId>) -> BTreeSet<String> {
        self.extended_schema
            .iter()
            .filter(|r| system.owner_of(r).is_some_and(|o| peers.contains(o)))
            .cloned()
            .collect()
    }
}

pub fn neighborhood(system: &System, peer: &PeerId) -> Result<Neighborhood> {
    let p = system.peer(peer)?;
    validate_trust(system.trust())?;
    let mut n = Neighborhood {
        peer: peer.clone(),
        extended_schema: p.relation_names(),
        ..Neighborhood::default()
    };
    let declared: BTreeMap<&PeerId, TrustLevel> = system
        .trust()
        .iter()
        .filter(|t| &t.subject == peer)
        .map(|t| (&t.object, t.level))
        .collect();
    for (q, level) in &declared {
        match level {
            TrustLevel::Less => n.less.insert((*q).clone()),
            TrustLevel::Same => n.same.insert((*q).clone()),
        };
    }
    for dec in system.decs_of(peer) {
        let ConstraintOwner::Dec { to, .. } = &dec.owner else {
            continue;
        };
        n.extended_schema
            .extend(dec.relations().into_iter().map(str::to_string));
        let level = match declared.get(to) {
            Some(l) => *l,
            None => {
                let w = format!("no trust declared from {peer} to {to}; treating {to} as same");
                if !n.warnings.contains(&w) {
                    n.warnings.push(w);
                }
                n.same.insert(to.clone());
                TrustLevel::Same
            }
        };
        match level {
            TrustLevel::Less => n.less_decs.push(dec.clone()),
            TrustLevel::Same => n.same_decs.push(dec.clone()),
        }
    }
    Ok(n)
}
