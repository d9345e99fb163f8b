//! Relational substrate: constants, relation symbols, ground atoms and
//! instances, together with the symmetric-difference distance between
//! instances and the closeness order it induces.
//!
//! Every collection here is a `BTreeSet`/`BTreeMap`, so iteration follows
//! the canonical order (relation name, then argument tuple) and all derived
//! output is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// An uninterpreted domain value. Ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Constant(String);

impl Constant {
    pub fn new(value: impl Into<String>) -> Self {
        let value = value.into();
        assert!(!value.is_empty(), "constants are nonempty tokens");
        Constant(value)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the token can be written bare in the surface syntaxes.
    pub fn is_plain(&self) -> bool {
        self.0.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && self.0.chars().next().is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Constant {
    fn from(s: &str) -> Self {
        Constant::new(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PeerId(String);

impl PeerId {
    pub fn new(id: impl Into<String>) -> Self {
        PeerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PeerId {
    fn from(s: &str) -> Self {
        PeerId::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
    pub owner: PeerId,
}

impl RelationSymbol {
    pub fn new(name: impl Into<String>, arity: usize, owner: impl Into<PeerId>) -> Self {
        RelationSymbol {
            name: name.into(),
            arity,
            owner: owner.into(),
        }
    }
}

/// A ground atom. The relation is referred to by name; the owning
/// [`Instance`] carries the full symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Constant>,
}

impl Atom {
    pub fn new<I, C>(relation: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<Constant>,
    {
        Atom {
            relation: relation.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, c) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_constant(f, c)?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub(crate) fn write_constant(f: &mut impl fmt::Write, c: &Constant) -> fmt::Result {
    if c.is_plain() {
        f.write_str(c.as_str())
    } else {
        write!(f, "'{}'", c.as_str().replace('\'', "\\'"))
    }
}

pub type Schema = BTreeMap<String, RelationSymbol>;

/// A finite set of ground atoms over an explicit schema.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Instance {
    schema: Schema,
    atoms: BTreeSet<Atom>,
}

impl Instance {
    pub fn new(schema: Schema) -> Self {
        Instance {
            schema,
            atoms: BTreeSet::new(),
        }
    }

    pub fn from_atoms(schema: Schema, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let mut inst = Instance::new(schema);
        for a in atoms {
            inst.insert(a)?;
        }
        Ok(inst)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<()> {
        let rel = self
            .schema
            .get(&atom.relation)
            .ok_or_else(|| Error::UnknownRelation(atom.relation.clone()))?;
        if rel.arity != atom.args.len() {
            return Err(Error::ArityMismatch {
                relation: atom.relation.clone(),
                expected: rel.arity,
                found: atom.args.len(),
            });
        }
        Ok(())
    }

    pub fn insert(&mut self, atom: Atom) -> Result<bool> {
        self.check_atom(&atom)?;
        Ok(self.atoms.insert(atom))
    }

    pub fn remove(&mut self, atom: &Atom) -> bool {
        self.atoms.remove(atom)
    }

    /// Atoms of one relation, in canonical order.
    pub fn tuples<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a Atom> + 'a {
        let start = Atom {
            relation: relation.to_string(),
            args: Vec::new(),
        };
        self.atoms
            .range(start..)
            .take_while(move |a| a.relation == relation)
    }

    /// Replace the atom set, keeping the schema. Atoms are assumed valid.
    pub(crate) fn with_atoms(&self, atoms: BTreeSet<Atom>) -> Instance {
        Instance {
            schema: self.schema.clone(),
            atoms,
        }
    }

    /// Every constant in the instance.
    pub fn constants(&self) -> BTreeSet<Constant> {
        self.atoms.iter().flat_map(|a| a.args.iter().cloned()).collect()
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl PartialOrd for Instance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Instance {
    /// Canonical order on instances: lexicographic on the sorted atom lists.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.atoms
            .iter()
            .cmp(other.atoms.iter())
            .then_with(|| self.schema.cmp(&other.schema))
    }
}

/// Symmetric difference between two instances, split by direction.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Delta {
    pub inserted: BTreeSet<Atom>,
    pub deleted: BTreeSet<Atom>,
}

impl Delta {
    pub fn is_empty(&self) -> bool {
        self.inserted.is_empty() && self.deleted.is_empty()
    }

    pub fn len(&self) -> usize {
        self.inserted.len() + self.deleted.len()
    }

    pub fn is_subset(&self, other: &Delta) -> bool {
        self.inserted.is_subset(&other.inserted) && self.deleted.is_subset(&other.deleted)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubschemaRef {
    pub relations: BTreeSet<String>,
}

impl SubschemaRef {
    pub fn new<I, S>(relations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SubschemaRef {
            relations: relations.into_iter().map(Into::into).collect(),
        }
    }
}

pub fn sigma(instance: &Instance) -> &BTreeSet<Atom> {
    instance.atoms()
}

fn same_schema(r1: &Instance, r2: &Instance) -> Result<()> {
    if r1.schema != r2.schema {
        let left: Vec<_> = r1.schema.keys().cloned().collect();
        let right: Vec<_> = r2.schema.keys().cloned().collect();
        return Err(Error::SchemaMismatch(format!(
            "{{{}}} vs {{{}}}",
            left.join(","),
            right.join(",")
        )));
    }
    Ok(())
}

pub fn delta(r1: &Instance, r2: &Instance) -> Result<Delta> {
    same_schema(r1, r2)?;
    Ok(Delta {
        inserted: r2.atoms.difference(&r1.atoms).cloned().collect(),
        deleted: r1.atoms.difference(&r2.atoms).cloned().collect(),
    })
}

/// `r1 ≤_base r2`: the changes leading to `r1` are among those leading to `r2`.
pub fn closer_or_equal(base: &Instance, r1: &Instance, r2: &Instance) -> Result<bool> {
    same_schema(base, r1)?;
    same_schema(base, r2)?;
    let d1 = delta(base, r1)?;
    let d2 = delta(base, r2)?;
    Ok(d1.is_subset(&d2))
}

pub fn restrict(r: &Instance, s: &SubschemaRef) -> Result<Instance> {
    let mut schema = Schema::new();
    for name in &s.relations {
        let rel = r
            .schema
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
        schema.insert(name.clone(), rel.clone());
    }
    let atoms = r
        .atoms
        .iter()
        .filter(|a| s.relations.contains(&a.relation))
        .cloned()
        .collect();
    Ok(Instance { schema, atoms })
}

pub fn active_domain<'a>(
    instances: impl IntoIterator<Item = &'a Instance>,
    constants: impl IntoIterator<Item = Constant>,
) -> BTreeSet<Constant> {
    let mut dom: BTreeSet<Constant> = constants.into_iter().collect();
    for inst in instances {
        dom.extend(inst.constants());
    }
    dom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        [("R", 1), ("S", 2)]
            .into_iter()
            .map(|(n, a)| (n.to_string(), RelationSymbol::new(n, a, "P")))
            .collect()
    }

    fn inst(atoms: &[Atom]) -> Instance {
        Instance::from_atoms(schema(), atoms.iter().cloned()).unwrap()
    }

    #[test]
    fn delta_identity_and_direction() {
        let a = Atom::new("R", ["a"]);
        let b = Atom::new("R", ["b"]);
        let r = inst(std::slice::from_ref(&a));
        assert!(delta(&r, &r).unwrap().is_empty());
        let d = delta(&r, &inst(&[b.clone()])).unwrap();
        assert_eq!(d.inserted, BTreeSet::from([b]));
        assert_eq!(d.deleted, BTreeSet::from([a]));
    }

    #[test]
    fn closer_or_equal_examples() {
        let a = Atom::new("R", ["a"]);
        let b = Atom::new("R", ["b"]);
        let c = Atom::new("R", ["c"]);
        let base = inst(&[a.clone()]);
        assert!(closer_or_equal(&base, &base, &inst(&[b.clone()])).unwrap());
        assert!(closer_or_equal(&base, &inst(&[a.clone(), b.clone()]), &inst(&[a.clone(), b.clone(), c])).unwrap());
        assert!(!closer_or_equal(&base, &inst(&[]), &inst(&[a, b])).unwrap());
    }

    #[test]
    fn arity_and_unknown_relation_rejected() {
        let mut r = Instance::new(schema());
        assert!(matches!(r.insert(Atom::new("R", ["a", "b"])), Err(Error::ArityMismatch { .. })));
        assert!(matches!(r.insert(Atom::new("T", ["a"])), Err(Error::UnknownRelation(_))));
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let r = inst(&[]);
        let other = Instance::new(Schema::new());
        assert!(matches!(delta(&r, &other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn restrict_filters_and_rejects_unknown() {
        let r = inst(&[Atom::new("R", ["a"]), Atom::new("S", ["a", "b"])]);
        let only_s = restrict(&r, &SubschemaRef::new(["S"])).unwrap();
        assert_eq!(only_s.len(), 1);
        assert!(restrict(&r, &SubschemaRef::new(["T"])).is_err());
        assert_eq!(restrict(&r, &SubschemaRef::new(["R", "S"])).unwrap(), r);
    }

    #[test]
    fn tuples_of_relation() {
        let r = inst(&[Atom::new("R", ["a"]), Atom::new("S", ["a", "b"]), Atom::new("R", ["b"])]);
        assert_eq!(r.tuples("R").count(), 2);
        assert_eq!(r.tuples("S").count(), 1);
        assert_eq!(r.tuples("Q").count(), 0);
    }

    #[test]
    fn quoted_constants_render() {
        let a = Atom::new("R", ["Big"]);
        assert_eq!(a.to_string(), "R('Big')");
    }
}
