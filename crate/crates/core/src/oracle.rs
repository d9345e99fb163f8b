//! Brute-force minimal repairs and two-stage peer solutions.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lang::ast::Constraint;
use crate::lang::eval::{self, builtin_holds, instantiate, Binding};
use crate::lang::{classify_dec, System};
use crate::relational::{active_domain, delta, Atom, Constant, Delta, Instance, PeerId};
use crate::trust::neighborhood;

/// Where existential witnesses come from when an insertion repairs a violation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WitnessPolicy {
    /// Values that make the fixed head atoms true; the active domain otherwise.
    #[default]
    MatchingFixedTuples,
    /// Any constant of the active domain.
    ActiveDomain,
}

#[derive(Clone, Debug)]
pub struct RepairProblem {
    pub base: Instance,
    pub constraints: Vec<Constraint>,
    pub fixed: BTreeSet<String>,
    pub flexible: BTreeSet<String>,
    pub witness_policy: WitnessPolicy,
    /// Upper bound on inserted atoms per repair; `None` is unbounded.
    pub max_new_atoms: Option<usize>,
}

impl RepairProblem {
    /// A problem where `flexible` may change and every other relation of the
    /// base schema is fixed.
    pub fn new(base: Instance, constraints: Vec<Constraint>, flexible: BTreeSet<String>) -> Self {
        let fixed = base
            .schema()
            .keys()
            .filter(|r| !flexible.contains(*r))
            .cloned()
            .collect();
        RepairProblem {
            base,
            constraints,
            fixed,
            flexible,
            witness_policy: WitnessPolicy::default(),
            max_new_atoms: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(r) = self.fixed.intersection(&self.flexible).next() {
            return Err(Error::SchemaMismatch(format!("relation `{r}` is both fixed and flexible")));
        }
        for c in &self.constraints {
            if !classify_dec(c).is_supported() {
                return Err(Error::Unsupported(c.to_string()));
            }
            for r in c.relations() {
                if !self.base.schema().contains_key(r) {
                    return Err(Error::UnknownRelation(r.to_string()));
                }
                if !self.fixed.contains(r) && !self.flexible.contains(r) {
                    return Err(Error::SchemaMismatch(format!(
                        "relation `{r}` is neither fixed nor flexible"
                    )));
                }
            }
        }
        Ok(())
    }
}

struct Search<'a> {
    p: &'a RepairProblem,
    domain: Vec<Constant>,
    visited: HashSet<BTreeSet<Atom>>,
    leaves: Vec<BTreeSet<Atom>>,
}

struct Node {
    atoms: BTreeSet<Atom>,
    inserted: BTreeSet<Atom>,
    deleted: BTreeSet<Atom>,
}

impl Search<'_> {
    fn first_violation(&self, inst: &Instance) -> Option<(&Constraint, Binding)> {
        self.p
            .constraints
            .iter()
            .find_map(|c| eval::violations(c, inst).into_iter().next().map(|b| (c, b)))
    }

    /// Extensions of `b` to the existential variables under the witness policy.
    fn witnesses(&self, c: &Constraint, inst: &Instance, b: &Binding) -> Vec<Binding> {
        let mut starts = vec![b.clone()];
        if self.p.witness_policy == WitnessPolicy::MatchingFixedTuples {
            let fixed: Vec<_> = c
                .head_atoms()
                .filter(|a| self.p.fixed.contains(&a.relation))
                .collect();
            if !fixed.is_empty() {
                starts = eval::join(fixed, inst, b.clone());
            }
        }
        let mut out = Vec::new();
        for s in starts {
            let free: Vec<&String> = c.existential.iter().filter(|v| !s.contains_key(*v)).collect();
            let mut frontier = vec![s];
            for v in free {
                frontier = frontier
                    .into_iter()
                    .flat_map(|e| {
                        self.domain.iter().map(move |k| {
                            let mut e = e.clone();
                            e.insert(v.clone(), k.clone());
                            e
                        })
                    })
                    .collect();
            }
            out.extend(frontier);
        }
        out.retain(|e| c.head_builtins().all(|bi| builtin_holds(bi, e)));
        out.sort();
        out.dedup();
        out
    }

    fn run(&mut self, node: Node) -> Result<()> {
        if !self.visited.insert(node.atoms.clone()) {
            return Ok(());
        }
        let inst = self.p.base.with_atoms(node.atoms.clone());
        let Some((c, b)) = self.first_violation(&inst) else {
            self.leaves.push(node.atoms);
            return Ok(());
        };
        let mut children = Vec::new();
        for pat in c.body_atoms() {
            if !self.p.flexible.contains(&pat.relation) {
                continue;
            }
            let a = instantiate(pat, &b);
            if node.atoms.contains(&a) && !node.inserted.contains(&a) {
                let mut child = Node {
                    atoms: node.atoms.clone(),
                    inserted: node.inserted.clone(),
                    deleted: node.deleted.clone(),
                };
                child.atoms.remove(&a);
                child.deleted.insert(a);
                children.push(child);
            }
        }
        if c.head_atoms().next().is_some() {
            'witness: for e in self.witnesses(c, &inst, &b) {
                let mut new = Vec::new();
                for pat in c.head_atoms() {
                    let a = instantiate(pat, &e);
                    if node.atoms.contains(&a) {
                        continue;
                    }
                    if !self.p.flexible.contains(&pat.relation) || node.deleted.contains(&a) {
                        continue 'witness;
                    }
                    new.push(a);
                }
                if new.is_empty() {
                    continue;
                }
                let mut child = Node {
                    atoms: node.atoms.clone(),
                    inserted: node.inserted.clone(),
                    deleted: node.deleted.clone(),
                };
                for a in new {
                    child.atoms.insert(a.clone());
                    child.inserted.insert(a);
                }
                if let Some(cap) = self.p.max_new_atoms {
                    if child.inserted.len() > cap {
                        return Err(Error::SearchCapExceeded { cap });
                    }
                }
                children.push(child);
            }
        }
        for child in children {
            self.run(child)?;
        }
        Ok(())
    }
}

/// Keeps the instances whose difference from `base` is ⊆-minimal.
pub fn minimal_among(base: &Instance, candidates: Vec<Instance>) -> Result<Vec<Instance>> {
    let deltas: Vec<Delta> = candidates
        .iter()
        .map(|c| delta(base, c))
        .collect::<Result<_>>()?;
    let mut out: Vec<Instance> = candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            !deltas
                .iter()
                .enumerate()
                .any(|(j, d)| j != *i && d != &deltas[*i] && d.is_subset(&deltas[*i]))
        })
        .map(|(_, c)| c.clone())
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// All ⊆-minimal repairs of `p.base` within the active domain.
pub fn repairs(p: &RepairProblem) -> Result<Vec<Instance>> {
    p.validate()?;
    let constants = p.constraints.iter().flat_map(|c| c.constants());
    let domain = active_domain([&p.base], constants).into_iter().collect();
    let mut search = Search {
        p,
        domain,
        visited: HashSet::new(),
        leaves: Vec::new(),
    };
    search.run(Node {
        atoms: p.base.atoms().clone(),
        inserted: BTreeSet::new(),
        deleted: BTreeSet::new(),
    })?;
    let leaves = search
        .leaves
        .into_iter()
        .map(|atoms| p.base.with_atoms(atoms))
        .collect();
    minimal_among(&p.base, leaves)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleOptions {
    pub max_new_atoms: Option<usize>,
    pub witness_policy: WitnessPolicy,
    /// Worker threads for the second stage; 0 or 1 runs inline.
    pub threads: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolutionSet {
    pub solutions: Vec<Instance>,
    pub stage1_repairs: Vec<Instance>,
    pub warnings: Vec<String>,
}

impl SolutionSet {
    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

fn owned_by(system: &System, peers: &BTreeSet<PeerId>) -> BTreeSet<String> {
    system
        .schema()
        .values()
        .filter(|r| peers.contains(&r.owner))
        .map(|r| r.name.clone())
        .collect()
}

/// The solutions for `peer` under direct (non-transitive) semantics.
pub fn solutions_direct(system: &System, peer: &PeerId, opts: &OracleOptions) -> Result<SolutionSet> {
    let n = neighborhood(system, peer)?;
    let own = owned_by(system, &BTreeSet::from([peer.clone()]));
    let mut stage2_flexible = own.clone();
    stage2_flexible.extend(owned_by(system, &n.same));
    let ics = system.peer(peer)?.ics.clone();
    for c in n.less_decs.iter().chain(&n.same_decs).chain(&ics) {
        if !classify_dec(c).is_supported() {
            return Err(Error::Unsupported(c.to_string()));
        }
    }
    let problem = |base: Instance, constraints: Vec<Constraint>, flexible: &BTreeSet<String>| {
        let mut p = RepairProblem::new(base, constraints, flexible.clone());
        p.witness_policy = opts.witness_policy;
        p.max_new_atoms = opts.max_new_atoms;
        p
    };
    let global = system.global_instance();
    let stage1 = repairs(&problem(global, n.less_decs.clone(), &own))?;
    let mut both = n.less_decs.clone();
    both.extend(n.same_decs.iter().cloned());
    let stage2 = |r1: &Instance| repairs(&problem(r1.clone(), both.clone(), &stage2_flexible));
    let nested: Vec<Vec<Instance>> = if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
        pool.install(|| stage1.par_iter().map(stage2).collect::<Result<_>>())?
    } else {
        stage1.iter().map(stage2).collect::<Result<_>>()?
    };
    let mut solutions: Vec<Instance> = nested
        .into_iter()
        .flatten()
        .filter(|s| eval::satisfies_all(&ics, s))
        .collect();
    solutions.sort();
    solutions.dedup();
    Ok(SolutionSet {
        solutions,
        stage1_repairs: stage1,
        warnings: n.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_constraint, parse_system};
    use crate::relational::{RelationSymbol, Schema};

    fn render(set: &[Instance]) -> Vec<String> {
        set.iter().map(|i| i.to_string()).collect()
    }

    #[test]
    fn fd_repair_pair() {
        let mut schema = Schema::new();
        schema.insert("R".into(), RelationSymbol::new("R", 2, "P"));
        let base = Instance::from_atoms(schema, [Atom::new("R", ["a", "b"]), Atom::new("R", ["a", "c"])]).unwrap();
        let fd = parse_constraint("forall x,y,z (R(x,y) & R(x,z) -> y = z)").unwrap();
        let p = RepairProblem::new(base, vec![fd], BTreeSet::from(["R".to_string()]));
        assert_eq!(render(&repairs(&p).unwrap()), ["{R(a,b)}", "{R(a,c)}"]);
    }

    #[test]
    fn three_peer_solutions() {
        let s = parse_system(include_str!("../../../fixtures/fix_a.p2p")).unwrap();
        let sol = solutions_direct(&s, &PeerId::new("P1"), &OracleOptions::default()).unwrap();
        assert_eq!(
            render(&sol.stage1_repairs),
            ["{R1(a,b), R1(a,e), R1(c,d), R1(s,t), R2(a,e), R2(c,d), R3(a,f), R3(s,u)}"]
        );
        assert_eq!(
            render(&sol.solutions),
            [
                "{R1(a,b), R1(a,e), R1(c,d), R1(s,t), R2(a,e), R2(c,d)}",
                "{R1(a,b), R1(a,e), R1(c,d), R2(a,e), R2(c,d), R3(s,u)}",
            ]
        );
    }

    #[test]
    fn mixed_referential_solutions() {
        let s = parse_system(include_str!("../../../fixtures/fix_b.p2p")).unwrap();
        let sol = solutions_direct(&s, &PeerId::new("P"), &OracleOptions::default()).unwrap();
        assert_eq!(
            render(&sol.solutions),
            [
                "{R1(a,b), R2(a,e), S1(c,b), S2(c,e), S2(c,f)}",
                "{R1(a,b), R2(a,f), S1(c,b), S2(c,e), S2(c,f)}",
                "{S1(c,b), S2(c,e), S2(c,f)}",
            ]
        );
    }

    #[test]
    fn cap_is_reported() {
        let s = parse_system(include_str!("../../../fixtures/fix_a.p2p")).unwrap();
        let opts = OracleOptions {
            max_new_atoms: Some(1),
            ..OracleOptions::default()
        };
        assert_eq!(
            solutions_direct(&s, &PeerId::new("P1"), &opts),
            Err(Error::SearchCapExceeded { cap: 1 })
        );
    }

    #[test]
    fn threads_do_not_change_output() {
        let s = parse_system(include_str!("../../../fixtures/fix_a.p2p")).unwrap();
        let one = solutions_direct(&s, &PeerId::new("P1"), &OracleOptions::default()).unwrap();
        let four = solutions_direct(
            &s,
            &PeerId::new("P1"),
            &OracleOptions {
                threads: 4,
                ..OracleOptions::default()
            },
        )
        .unwrap();
        assert_eq!(one, four);
    }
}
