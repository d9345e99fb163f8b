use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::lang::ast::{Builtin, Term};
use crate::relational::Atom;

/// A possibly classically negated atom over program terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    pub fn pos(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Literal {
            predicate: predicate.into(),
            args,
            negated: false,
        }
    }

    pub fn neg(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Literal {
            negated: true,
            ..Literal::pos(predicate, args)
        }
    }

    pub fn complement(&self) -> Literal {
        Literal {
            negated: !self.negated,
            ..self.clone()
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }

    /// Predicate key that distinguishes `p` from `-p`.
    pub fn key(&self) -> String {
        if self.negated {
            format!("-{}", self.predicate)
        } else {
            self.predicate.clone()
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("-")?;
        }
        f.write_str(&self.predicate)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// `choice((keys),(chosen))`: one value of `chosen` per value of `keys`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChoiceGoal {
    pub keys: Vec<String>,
    pub chosen: Vec<String>,
}

impl fmt::Display for ChoiceGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "choice(({}),", self.keys.join(","))?;
        if self.chosen.len() == 1 {
            write!(f, "{})", self.chosen[0])
        } else {
            write!(f, "({}))", self.chosen.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BodyElem {
    Pos(Literal),
    Naf(Literal),
    Cmp(Builtin),
    Choice(ChoiceGoal),
}

impl fmt::Display for BodyElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyElem::Pos(l) => write!(f, "{l}"),
            BodyElem::Naf(l) => write!(f, "not {l}"),
            BodyElem::Cmp(b) => write!(f, "{b}"),
            BodyElem::Choice(c) => write!(f, "{c}"),
        }
    }
}

/// `h1 v ... v hn :- body.`; an empty head is a denial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Vec<Literal>,
    pub body: Vec<BodyElem>,
}

impl Rule {
    pub fn new(head: Vec<Literal>, body: Vec<BodyElem>) -> Self {
        Rule { head, body }
    }

    pub fn denial(body: Vec<BodyElem>) -> Self {
        Rule { head: Vec::new(), body }
    }

    pub fn positive(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter_map(|b| match b {
            BodyElem::Pos(l) => Some(l),
            _ => None,
        })
    }

    pub fn negative(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter_map(|b| match b {
            BodyElem::Naf(l) => Some(l),
            _ => None,
        })
    }

    pub fn choices(&self) -> impl Iterator<Item = &ChoiceGoal> {
        self.body.iter().filter_map(|b| match b {
            BodyElem::Choice(c) => Some(c),
            _ => None,
        })
    }

    pub fn is_disjunctive(&self) -> bool {
        self.head.len() > 1
    }

    /// Every variable must occur in a positive body literal.
    pub fn check_safe(&self) -> Result<()> {
        let bound: BTreeSet<&str> = self.positive().flat_map(Literal::vars).collect();
        let mut needed: Vec<&str> = Vec::new();
        needed.extend(self.head.iter().flat_map(Literal::vars));
        for b in &self.body {
            match b {
                BodyElem::Pos(_) => {}
                BodyElem::Naf(l) => needed.extend(l.vars()),
                BodyElem::Cmp(c) => needed.extend([&c.left, &c.right].into_iter().filter_map(|t| t.as_var())),
                BodyElem::Choice(c) => needed.extend(c.keys.iter().chain(&c.chosen).map(String::as_str)),
            }
        }
        match needed.into_iter().find(|v| !bound.contains(v)) {
            Some(v) => Err(Error::UnsafeRule(format!("variable {v} in `{self}`"))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" v ")?;
            }
            write!(f, "{h}")?;
        }
        if !self.body.is_empty() {
            f.write_str(if self.head.is_empty() { ":- " } else { " :- " })?;
            for (i, b) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{b}")?;
            }
        }
        f.write_str(".")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    LegalInstance,
    Repair,
}

impl Layer {
    fn title(self) -> &'static str {
        match self {
            Layer::LegalInstance => "legal instances",
            Layer::Repair => "repairs",
        }
    }
}

/// How to read a solution relation back from an answer set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutputMap {
    pub predicate: String,
    pub relation: String,
}

/// Which projected answer sets count as solutions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Minimality {
    /// Every answer set.
    #[default]
    Any,
    /// Those whose change from the base instance is ⊆-minimal.
    Final,
    /// Two stages: the stage-one contents must be a ⊆-minimal answer of
    /// `first`, and the final contents ⊆-minimal among answer sets sharing
    /// those stage-one contents.
    Staged(Box<Program>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub facts: BTreeSet<Atom>,
    pub rules: Vec<Rule>,
    /// One label per rule, present only for layered programs.
    pub layers: Option<Vec<Layer>>,
    /// Solution relations by the predicate holding their final contents.
    pub outputs: BTreeMap<String, OutputMap>,
    /// Solution tuples carry a trailing `tss` annotation.
    pub annotated: bool,
    pub minimality: Minimality,
    pub warnings: Vec<String>,
}

impl Program {
    pub fn push(&mut self, rule: Rule) {
        if !self.rules.contains(&rule) {
            self.rules.push(rule);
        }
    }

    /// Appends `rule` labelled with `layer`; the label is kept only for
    /// layered programs.
    pub fn push_in(&mut self, rule: Rule, layer: Option<Layer>) {
        if self.rules.contains(&rule) {
            return;
        }
        self.rules.push(rule);
        if let (Some(ls), Some(l)) = (self.layers.as_mut(), layer) {
            ls.push(l);
        }
    }

    pub fn layer_of(&self, i: usize) -> Option<Layer> {
        self.layers.as_ref().and_then(|ls| ls.get(i).copied())
    }

    pub fn has_choice(&self) -> bool {
        self.rules.iter().any(|r| r.choices().next().is_some())
    }

    pub fn check_safe(&self) -> Result<()> {
        self.rules.iter().try_for_each(Rule::check_safe)
    }

    /// All predicate names used in facts or rules.
    pub fn predicates(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.facts.iter().map(|a| a.relation.clone()).collect();
        for r in &self.rules {
            out.extend(r.head.iter().map(|l| l.predicate.clone()));
            for b in &r.body {
                if let BodyElem::Pos(l) | BodyElem::Naf(l) = b {
                    out.insert(l.predicate.clone());
                }
            }
        }
        out
    }
}

impl fmt::Display for Program {
    /// Facts first, then rules in emission order; layered programs get a
    /// comment line at each layer boundary.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.facts {
            writeln!(f, "{a}.")?;
        }
        let mut current = None;
        for (i, r) in self.rules.iter().enumerate() {
            if let Some(layers) = &self.layers {
                let l = layers[i];
                if current != Some(l) {
                    writeln!(f, "% {}", l.title())?;
                    current = Some(l);
                }
            }
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
