use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Constraint, ConstraintOwner};
use crate::error::{Error, Result};
use crate::relational::{Atom, Constant, Instance, PeerId, RelationSymbol, Schema};
use crate::trust::TrustTriple;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peer {
    pub id: PeerId,
    pub relations: Vec<RelationSymbol>,
    pub instance: Instance,
    pub ics: Vec<Constraint>,
}

impl Peer {
    pub fn relation_names(&self) -> BTreeSet<String> {
        self.relations.iter().map(|r| r.name.clone()).collect()
    }
}

/// A resolved peer-to-peer data exchange system.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct System {
    peers: BTreeMap<PeerId, Peer>,
    schema: Schema,
    trust: Vec<TrustTriple>,
    decs: Vec<Constraint>,
}

impl System {
    pub fn peers(&self) -> &BTreeMap<PeerId, Peer> {
        &self.peers
    }

    pub fn peer(&self, id: &PeerId) -> Result<&Peer> {
        self.peers
            .get(id)
            .ok_or_else(|| Error::UnknownPeer(id.to_string()))
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn relation(&self, name: &str) -> Option<&RelationSymbol> {
        self.schema.get(name)
    }

    pub fn owner_of(&self, relation: &str) -> Option<&PeerId> {
        self.schema.get(relation).map(|r| &r.owner)
    }

    pub fn trust(&self) -> &[TrustTriple] {
        &self.trust
    }

    pub fn decs(&self) -> &[Constraint] {
        &self.decs
    }

    /// Σ(peer): the exchange constraints owned by `peer`.
    pub fn decs_of<'a>(&'a self, peer: &'a PeerId) -> impl Iterator<Item = &'a Constraint> + 'a {
        self.decs
            .iter()
            .filter(move |c| matches!(&c.owner, ConstraintOwner::Dec { from, .. } if from == peer))
    }

    /// The union of all peers' instances over the full schema.
    pub fn global_instance(&self) -> Instance {
        let atoms = self
            .peers
            .values()
            .flat_map(|p| p.instance.atoms().iter().cloned());
        Instance::from_atoms(self.schema.clone(), atoms).expect("peer instances are validated")
    }

    /// Constants mentioned by constraints (exchange and local).
    pub fn constraint_constants(&self) -> BTreeSet<Constant> {
        self.decs
            .iter()
            .chain(self.peers.values().flat_map(|p| &p.ics))
            .flat_map(|c| c.constants())
            .collect()
    }

    /// Builds a system programmatically; runs the same checks as the parser.
    pub fn build(
        peers: Vec<(PeerId, Vec<(String, usize)>, Vec<Atom>, Vec<Constraint>)>,
        trust: Vec<TrustTriple>,
        decs: Vec<Constraint>,
    ) -> Result<System> {
        RawSystem {
            peers: peers
                .into_iter()
                .map(|(id, relations, atoms, ics)| RawPeer {
                    name: id.to_string(),
                    relations,
                    atoms,
                    ics,
                })
                .collect(),
            trust,
            decs,
        }
        .resolve()
    }
}

#[derive(Default)]
pub(crate) struct RawPeer {
    pub name: String,
    pub relations: Vec<(String, usize)>,
    pub atoms: Vec<Atom>,
    pub ics: Vec<Constraint>,
}

#[derive(Default)]
pub(crate) struct RawSystem {
    pub peers: Vec<RawPeer>,
    pub trust: Vec<TrustTriple>,
    pub decs: Vec<Constraint>,
}

fn check_constraint(c: &Constraint, schema: &Schema, allowed: &BTreeSet<&PeerId>) -> Result<()> {
    for a in c.body_atoms().chain(c.head_atoms()) {
        let rel = schema
            .get(&a.relation)
            .ok_or_else(|| Error::UnknownRelation(a.relation.clone()))?;
        if rel.arity != a.terms.len() {
            return Err(Error::ArityMismatch {
                relation: a.relation.clone(),
                expected: rel.arity,
                found: a.terms.len(),
            });
        }
        if !allowed.contains(&rel.owner) {
            return Err(Error::InvalidDec(format!(
                "relation `{}` of peer `{}` is outside the constraint's signature",
                a.relation, rel.owner
            )));
        }
    }
    Ok(())
}

impl RawSystem {
    pub(crate) fn resolve(self) -> Result<System> {
        let mut schema = Schema::new();
        let mut ids = BTreeSet::new();
        for p in &self.peers {
            let id = PeerId::new(p.name.clone());
            if !ids.insert(id.clone()) {
                return Err(Error::DuplicatePeer(p.name.clone()));
            }
            for (name, arity) in &p.relations {
                if schema.contains_key(name) {
                    return Err(Error::DuplicateRelation(name.clone()));
                }
                schema.insert(name.clone(), RelationSymbol::new(name.clone(), *arity, id.clone()));
            }
        }
        let mut peers = BTreeMap::new();
        for p in self.peers {
            let id = PeerId::new(p.name);
            let own: Schema = schema
                .iter()
                .filter(|(_, r)| r.owner == id)
                .map(|(n, r)| (n.clone(), r.clone()))
                .collect();
            let mut instance = Instance::new(own.clone());
            for a in p.atoms {
                instance.insert(a)?;
            }
            let allowed = BTreeSet::from([&id]);
            for ic in &p.ics {
                check_constraint(ic, &schema, &allowed)?;
            }
            let relations = p
                .relations
                .iter()
                .map(|(n, _)| schema[n].clone())
                .collect();
            peers.insert(
                id.clone(),
                Peer {
                    id,
                    relations,
                    instance,
                    ics: p.ics,
                },
            );
        }
        for t in &self.trust {
            for p in [&t.subject, &t.object] {
                if !peers.contains_key(p) {
                    return Err(Error::UnknownPeer(p.to_string()));
                }
            }
        }
        for dec in &self.decs {
            let ConstraintOwner::Dec { from, to } = &dec.owner else {
                return Err(Error::InvalidDec("exchange constraint without peers".into()));
            };
            for p in [from, to] {
                if !peers.contains_key(p) {
                    return Err(Error::UnknownPeer(p.to_string()));
                }
            }
            if from == to {
                return Err(Error::InvalidDec(format!("`{from} -> {to}` relates a peer to itself")));
            }
            check_constraint(dec, &schema, &BTreeSet::from([from, to]))?;
        }
        Ok(System {
            peers,
            schema,
            trust: self.trust,
            decs: self.decs,
        })
    }
}
