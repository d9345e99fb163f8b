//! Grounder and answer-set enumeration.

mod ground;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use ground::{ground, GroundLiteral, GroundProgram, GroundRule};

use crate::asp::{unfold_choice, Minimality, Program};
use crate::error::Result;
use crate::oracle::{minimal_among, SolutionSet};
use crate::query::TupleSet;
use crate::relational::{Atom, Instance};

/// A stable model, as its set of true ground literals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnswerSet {
    pub literals: BTreeSet<GroundLiteral>,
}

impl AnswerSet {
    pub fn contains(&self, l: &GroundLiteral) -> bool {
        self.literals.contains(l)
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Literal strings in canonical order.
    pub fn strings(&self) -> Vec<String> {
        self.literals.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.strings().join(", "))
    }
}

/// Answer sets of a choice-free program, in canonical order.
pub fn answer_sets(p: &Program) -> Result<Vec<AnswerSet>> {
    let g = ground(p)?;
    Ok(models_of(&g))
}

pub fn models_of(g: &GroundProgram) -> Vec<AnswerSet> {
    let mut out: Vec<AnswerSet> = search::enumerate(g)
        .into_iter()
        .map(|m| AnswerSet {
            literals: m.into_iter().map(|i| g.atoms[i].clone()).collect(),
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// The reduct of `g` wrt `i`: rules blocked by `i` are removed and the
/// remaining default negations are dropped.
pub fn reduct(g: &GroundProgram, i: &BTreeSet<GroundLiteral>) -> GroundProgram {
    let holds = |id: &usize| i.contains(&g.atoms[*id]);
    GroundProgram {
        atoms: g.atoms.clone(),
        index: g.index.clone(),
        rules: g
            .rules
            .iter()
            .filter(|r| !r.neg.iter().any(holds))
            .map(|r| GroundRule {
                head: r.head.clone(),
                pos: r.pos.clone(),
                neg: Vec::new(),
            })
            .collect(),
    }
}

/// Checks by plain backtracking, independently of the search, that `m` is
/// coherent, satisfies every rule of `g`, and is a ⊆-minimal model of the
/// reduct of `g` wrt `m`.
pub fn verify_answer_set(g: &GroundProgram, m: &AnswerSet) -> bool {
    if m.literals.iter().any(|l| m.contains(&l.complement())) {
        return false;
    }
    let mut ids = Vec::new();
    for l in &m.literals {
        match g.id(l) {
            Some(i) => ids.push(i),
            None => return false,
        }
    }
    let inside: BTreeSet<usize> = ids.iter().copied().collect();
    let satisfied = |r: &GroundRule, set: &dyn Fn(usize) -> bool| {
        let body = r.pos.iter().all(|&a| set(a)) && r.neg.iter().all(|&a| !inside.contains(&a));
        !body || r.head.iter().any(|&h| set(h))
    };
    if !g.rules.iter().all(|r| satisfied(r, &|a| inside.contains(&a))) {
        return false;
    }
    let red = reduct(g, &m.literals);
    // Search subsets of m for another model of the reduct.
    let order: Vec<usize> = inside.iter().copied().collect();
    fn smaller(red: &GroundProgram, order: &[usize], chosen: &mut Vec<bool>, k: usize) -> bool {
        let decided = |a: usize| order.binary_search(&a).ok().map(|i| i < k);
        let value = |a: usize, chosen: &[bool]| order.binary_search(&a).is_ok_and(|i| chosen[i]);
        // Reject as soon as a rule with fully decided atoms is violated.
        for r in &red.rules {
            let all_decided = r
                .pos
                .iter()
                .chain(&r.head)
                .all(|&a| decided(a).unwrap_or(true));
            if all_decided {
                let body = r.pos.iter().all(|&a| value(a, chosen));
                if body && !r.head.iter().any(|&h| value(h, chosen)) {
                    return false;
                }
            }
        }
        if k == order.len() {
            return chosen.iter().any(|c| !c);
        }
        for v in [false, true] {
            chosen[k] = v;
            if smaller(red, order, chosen, k + 1) {
                return true;
            }
        }
        chosen[k] = true;
        false
    }
    let mut chosen = vec![true; order.len()];
    !smaller(&red, &order, &mut chosen, 0)
}

/// Result of skeptical reasoning over all answer sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cautious {
    pub answers: TupleSet,
    /// No answer set exists.
    pub incoherent: bool,
}

/// Tuples `t̄` with `ans(t̄)` in every answer set.
pub fn cautious_answers(p: &Program, ans: &str) -> Result<Cautious> {
    let models = answer_sets(p)?;
    Ok(cautious_over(&models, ans))
}

pub fn cautious_over(models: &[AnswerSet], ans: &str) -> Cautious {
    let extension = |m: &AnswerSet| -> BTreeSet<Vec<crate::relational::Constant>> {
        m.literals
            .iter()
            .filter(|l| l.predicate == ans && !l.negated)
            .map(|l| l.args.clone())
            .collect()
    };
    let mut iter = models.iter();
    let Some(first) = iter.next() else {
        return Cautious {
            answers: TupleSet::default(),
            incoherent: true,
        };
    };
    let mut rows = extension(first);
    for m in iter {
        let e = extension(m);
        rows.retain(|r| e.contains(r));
    }
    let arity = rows
        .iter()
        .next()
        .map(Vec::len)
        .or_else(|| first.literals.iter().find(|l| l.predicate == ans).map(|l| l.args.len()))
        .unwrap_or(0);
    Cautious {
        answers: TupleSet { arity, rows },
        incoherent: false,
    }
}

fn project(m: &AnswerSet, p: &Program, kept: &[Atom], base: &Instance) -> Result<Instance> {
    let mut inst = Instance::from_atoms(base.schema().clone(), kept.iter().cloned())?;
    for l in &m.literals {
        if l.negated {
            continue;
        }
        let Some(out) = p.outputs.get(&l.predicate) else {
            continue;
        };
        let mut args = l.args.clone();
        if p.annotated {
            if args.last().map(|c| c.as_str()) != Some(crate::asp::lav::TSS) {
                continue;
            }
            args.pop();
        }
        inst.insert(Atom::new(out.relation.clone(), args))?;
    }
    Ok(inst)
}

/// Atoms of `base` over relations that `p` does not output.
fn kept_atoms(p: &Program, base: &Instance) -> Vec<Atom> {
    let replaced: BTreeSet<&str> = p.outputs.values().map(|o| o.relation.as_str()).collect();
    base.atoms()
        .iter()
        .filter(|a| !replaced.contains(a.relation.as_str()))
        .cloned()
        .collect()
}

/// Reads each model back as a global instance: relations with an output
/// predicate take that predicate's extension (only `tss` tuples when the
/// program is annotated), and every other relation keeps its contents in
/// `base`.
pub fn solutions_from_models(models: &[AnswerSet], p: &Program, base: &Instance) -> Result<SolutionSet> {
    let kept = kept_atoms(p, base);
    let mut solutions = Vec::new();
    for m in models {
        solutions.push(project(m, p, &kept, base)?);
    }
    solutions.sort();
    solutions.dedup();
    Ok(SolutionSet {
        solutions,
        stage1_repairs: Vec::new(),
        warnings: p.warnings.clone(),
    })
}

/// The models of `p` whose readings pass the program's minimality filter.
pub fn minimal_models(models: Vec<AnswerSet>, p: &Program, base: &Instance) -> Result<Vec<AnswerSet>> {
    let kept = kept_atoms(p, base);
    let readings: Vec<Instance> = models.iter().map(|m| project(m, p, &kept, base)).collect::<Result<_>>()?;
    let keep: Vec<bool> = match &p.minimality {
        Minimality::Any => vec![true; models.len()],
        Minimality::Final => {
            let best: BTreeSet<Instance> = minimal_among(base, distinct(&readings))?.into_iter().collect();
            readings.iter().map(|r| best.contains(r)).collect()
        }
        Minimality::Staged(first) => {
            let first_kept = kept_atoms(first, base);
            let stage1: Vec<Instance> = answer_sets(&unfold_choice(first))?
                .iter()
                .map(|m| project(m, first, &first_kept, base))
                .collect::<Result<_>>()?;
            let repairs: BTreeSet<Instance> = minimal_among(base, distinct(&stage1))?.into_iter().collect();
            let mut groups: BTreeMap<Instance, Vec<usize>> = BTreeMap::new();
            for (i, m) in models.iter().enumerate() {
                let r1 = project(m, first, &first_kept, base)?;
                if repairs.contains(&r1) {
                    groups.entry(r1).or_default().push(i);
                }
            }
            let mut keep = vec![false; models.len()];
            for (r1, members) in groups {
                let finals: Vec<Instance> = members.iter().map(|&i| readings[i].clone()).collect();
                let best: BTreeSet<Instance> = minimal_among(&r1, distinct(&finals))?.into_iter().collect();
                for i in members {
                    keep[i] = best.contains(&readings[i]);
                }
            }
            keep
        }
    };
    Ok(models.into_iter().zip(keep).filter(|(_, k)| *k).map(|(m, _)| m).collect())
}

fn distinct(xs: &[Instance]) -> Vec<Instance> {
    let set: BTreeSet<&Instance> = xs.iter().collect();
    set.into_iter().cloned().collect()
}
