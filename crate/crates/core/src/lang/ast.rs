use std::collections::BTreeSet;
use std::fmt;

use crate::relational::{write_constant, Constant, PeerId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Constant),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(c: impl Into<Constant>) -> Self {
        Term::Const(c.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write_constant(f, c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Neq,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Neq,
            CmpOp::Neq => CmpOp::Eq,
        }
    }

    pub fn holds(self, left: &Constant, right: &Constant) -> bool {
        match self {
            CmpOp::Eq => left == right,
            CmpOp::Neq => left != right,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "!=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Builtin {
    pub op: CmpOp,
    pub left: Term,
    pub right: Term,
}

impl Builtin {
    pub fn new(op: CmpOp, left: Term, right: Term) -> Self {
        Builtin { op, left, right }
    }

    pub fn negated(&self) -> Builtin {
        Builtin {
            op: self.op.negate(),
            ..self.clone()
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op, self.right)
    }
}

/// A term in formula syntax, where bare identifiers are variables and
/// constants other than numerals are quoted.
struct Fo<'a>(&'a Term);

impl fmt::Display for Fo<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) if c.is_plain() && c.as_str().starts_with(|ch: char| ch.is_ascii_digit()) => {
                f.write_str(c.as_str())
            }
            Term::Const(c) => write!(f, "'{}'", c.as_str().replace('\'', "\\'")),
        }
    }
}

struct FoCmp<'a>(&'a Builtin);

impl fmt::Display for FoCmp<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", Fo(&self.0.left), self.0.op, Fo(&self.0.right))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomPattern {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl AtomPattern {
    pub fn new(relation: impl Into<String>, terms: Vec<Term>) -> Self {
        AtomPattern {
            relation: relation.into(),
            terms,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", Fo(t))?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Conjunct {
    Atom(AtomPattern),
    Builtin(Builtin),
}

impl Conjunct {
    pub fn as_atom(&self) -> Option<&AtomPattern> {
        match self {
            Conjunct::Atom(a) => Some(a),
            Conjunct::Builtin(_) => None,
        }
    }

    pub fn as_builtin(&self) -> Option<&Builtin> {
        match self {
            Conjunct::Builtin(b) => Some(b),
            Conjunct::Atom(_) => None,
        }
    }

    fn terms(&self) -> Vec<&Term> {
        match self {
            Conjunct::Atom(a) => a.terms.iter().collect(),
            Conjunct::Builtin(b) => vec![&b.left, &b.right],
        }
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conjunct::Atom(a) => write!(f, "{a}"),
            Conjunct::Builtin(b) => write!(f, "{}", FoCmp(b)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintOwner {
    /// A data exchange constraint in Σ(from, to).
    Dec { from: PeerId, to: PeerId },
    /// A local integrity constraint of one peer.
    Local(PeerId),
    #[default]
    Unowned,
}

/// A constraint in prenex `∀x̄ ∃ȳ (body → head)` form. An empty head is a
/// denial: the body must never hold.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub universal: Vec<String>,
    pub existential: Vec<String>,
    pub body: Vec<Conjunct>,
    pub head: Vec<Conjunct>,
    pub owner: ConstraintOwner,
}

impl Constraint {
    pub fn body_atoms(&self) -> impl Iterator<Item = &AtomPattern> {
        self.body.iter().filter_map(Conjunct::as_atom)
    }

    pub fn head_atoms(&self) -> impl Iterator<Item = &AtomPattern> {
        self.head.iter().filter_map(Conjunct::as_atom)
    }

    pub fn body_builtins(&self) -> impl Iterator<Item = &Builtin> {
        self.body.iter().filter_map(Conjunct::as_builtin)
    }

    pub fn head_builtins(&self) -> impl Iterator<Item = &Builtin> {
        self.head.iter().filter_map(Conjunct::as_builtin)
    }

    pub fn is_denial(&self) -> bool {
        self.head.is_empty()
    }

    /// Relations mentioned anywhere in the constraint.
    pub fn relations(&self) -> BTreeSet<&str> {
        self.body_atoms()
            .chain(self.head_atoms())
            .map(|a| a.relation.as_str())
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        self.body
            .iter()
            .chain(&self.head)
            .flat_map(|c| c.terms())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// Universal variables occurring in the head, in order of first occurrence.
    pub fn head_universal_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.head {
            for t in c.terms() {
                if let Term::Var(v) = t {
                    if self.universal.contains(v) && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, conj: &[Conjunct]) -> fmt::Result {
    for (i, c) in conj.iter().enumerate() {
        if i > 0 {
            f.write_str(" & ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for Constraint {
    /// Renders in the surface syntax accepted by `parse_constraint`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.universal.is_empty() {
            write!(f, "forall {} ", self.universal.join(","))?;
        }
        if !self.existential.is_empty() {
            write!(f, "exists {} ", self.existential.join(","))?;
        }
        f.write_str("(")?;
        write_conj(f, &self.body)?;
        f.write_str(" -> ")?;
        if self.head.is_empty() {
            f.write_str("false")?;
        } else {
            write_conj(f, &self.head)?;
        }
        f.write_str(")")
    }
}

/// First-order query formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(AtomPattern),
    Cmp(Builtin),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add = |t: &Term, bound: &Vec<String>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Formula::Atom(a) => a.terms.iter().for_each(|t| add(t, bound)),
            Formula::Cmp(b) => {
                add(&b.left, bound);
                add(&b.right, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(vs, f) | Formula::Forall(vs, f) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                f.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub fn relations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            out.insert(a.relation.clone());
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        let mut out = BTreeSet::new();
        let mut add = |t: &Term| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        };
        self.visit(&mut |f| match f {
            Formula::Atom(a) => a.terms.iter().for_each(&mut add),
            Formula::Cmp(b) => {
                add(&b.left);
                add(&b.right);
            }
            _ => {}
        });
        out
    }

    pub fn visit_atoms(&self, g: &mut impl FnMut(&AtomPattern)) {
        self.visit(&mut |f| {
            if let Formula::Atom(a) = f {
                g(a)
            }
        });
    }

    fn visit(&self, g: &mut impl FnMut(&Formula)) {
        g(self);
        match self {
            Formula::Atom(_) | Formula::Cmp(_) => {}
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.visit(g),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(g)),
            Formula::Implies(a, b) => {
                a.visit(g);
                b.visit(g);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Cmp(b) => write!(f, "{}", FoCmp(b)),
            Formula::Not(g) => write!(f, "~{}", Paren(g)),
            Formula::And(gs) => join(f, gs, " & "),
            Formula::Or(gs) => join(f, gs, " | "),
            Formula::Implies(a, b) => write!(f, "{} -> {}", Paren(a), Paren(b)),
            Formula::Exists(vs, g) => write!(f, "exists {} {}", vs.join(","), Paren(g)),
            Formula::Forall(vs, g) => write!(f, "forall {} {}", vs.join(","), Paren(g)),
        }
    }
}

struct Paren<'a>(&'a Formula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Formula::Atom(_) | Formula::Cmp(_) | Formula::Not(_) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, gs: &[Formula], sep: &str) -> fmt::Result {
    for (i, g) in gs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{}", Paren(g))?;
    }
    Ok(())
}

/// `Name(x̄) := formula`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub name: String,
    pub head: Vec<String>,
    pub formula: Formula,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) := {}", self.name, self.head.join(","), self.formula)
    }
}
