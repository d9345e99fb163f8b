//! Branch-and-propagate enumeration of answer sets over a ground program.

use std::collections::BTreeSet;

use super::ground::{GroundProgram, GroundRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    Unknown,
    True,
    False,
}

struct Solver<'a> {
    g: &'a GroundProgram,
    /// Rules by atom occurrence: head, positive body, negative body.
    in_head: Vec<Vec<usize>>,
    in_body: Vec<Vec<usize>>,
    /// Rules by positive body occurrence, once per rule.
    in_pos: Vec<Vec<usize>>,
    models: Vec<BTreeSet<usize>>,
}

fn lit_true(v: &[Val], r: &GroundRule) -> (usize, usize, usize) {
    let mut t = 0;
    let mut f = 0;
    let mut u = 0;
    for &a in &r.pos {
        match v[a] {
            Val::True => t += 1,
            Val::False => f += 1,
            Val::Unknown => u += 1,
        }
    }
    for &a in &r.neg {
        match v[a] {
            Val::False => t += 1,
            Val::True => f += 1,
            Val::Unknown => u += 1,
        }
    }
    (t, f, u)
}

impl<'a> Solver<'a> {
    fn new(g: &'a GroundProgram) -> Self {
        let n = g.atoms.len();
        let mut in_head = vec![Vec::new(); n];
        let mut in_body = vec![Vec::new(); n];
        let mut in_pos = vec![Vec::new(); n];
        for (i, r) in g.rules.iter().enumerate() {
            for &a in &r.pos {
                in_pos[a].push(i);
            }
            for &a in &r.head {
                in_head[a].push(i);
            }
            for &a in r.pos.iter().chain(&r.neg) {
                in_body[a].push(i);
            }
        }
        Solver {
            g,
            in_head,
            in_body,
            in_pos,
            models: Vec::new(),
        }
    }

    fn set(v: &mut [Val], a: usize, val: Val, queue: &mut Vec<usize>) -> bool {
        match v[a] {
            Val::Unknown => {
                v[a] = val;
                queue.push(a);
                true
            }
            current => current == val,
        }
    }

    /// Applies one rule's consequences; false on conflict.
    fn propagate_rule(&self, v: &mut [Val], ri: usize, queue: &mut Vec<usize>) -> bool {
        let r = &self.g.rules[ri];
        let (_, bf, bu) = lit_true(v, r);
        if bf > 0 {
            return true;
        }
        let head_true = r.head.iter().any(|&h| v[h] == Val::True);
        if head_true {
            return true;
        }
        let open_heads: Vec<usize> = r.head.iter().copied().filter(|&h| v[h] == Val::Unknown).collect();
        if bu == 0 {
            return match open_heads.len() {
                0 => false,
                1 => Self::set(v, open_heads[0], Val::True, queue),
                _ => true,
            };
        }
        if bu == 1 && open_heads.is_empty() {
            for &a in &r.pos {
                if v[a] == Val::Unknown {
                    return Self::set(v, a, Val::False, queue);
                }
            }
            for &a in &r.neg {
                if v[a] == Val::Unknown {
                    return Self::set(v, a, Val::True, queue);
                }
            }
        }
        true
    }

    /// Whether rule `ri` could still support atom `a`.
    fn can_support(&self, v: &[Val], ri: usize, a: usize) -> bool {
        let r = &self.g.rules[ri];
        let (_, bf, _) = lit_true(v, r);
        bf == 0 && r.head.iter().all(|&h| h == a || v[h] != Val::True)
    }

    fn check_support(&self, v: &mut [Val], a: usize, queue: &mut Vec<usize>) -> bool {
        if v[a] == Val::False {
            return true;
        }
        let supported = self.in_head[a].iter().any(|&ri| self.can_support(v, ri, a));
        if supported {
            return true;
        }
        if v[a] == Val::True {
            return false;
        }
        Self::set(v, a, Val::False, queue)
    }

    fn propagate(&self, v: &mut [Val], mut queue: Vec<usize>) -> bool {
        loop {
            if !self.propagate_local(v, std::mem::take(&mut queue)) {
                return false;
            }
            if !self.unfounded(v, &mut queue) {
                return false;
            }
            if queue.is_empty() {
                return true;
            }
        }
    }

    /// Falsifies atoms outside the greatest set derivable from rules whose
    /// bodies are not yet false; false if such an atom is already true.
    fn unfounded(&self, v: &mut [Val], queue: &mut Vec<usize>) -> bool {
        let g = self.g;
        let mut possible = vec![false; v.len()];
        let mut missing: Vec<usize> = Vec::with_capacity(g.rules.len());
        let mut ready = Vec::new();
        for (ri, r) in g.rules.iter().enumerate() {
            let dead = r.pos.iter().any(|&a| v[a] == Val::False) || r.neg.iter().any(|&a| v[a] == Val::True);
            missing.push(if dead { usize::MAX } else { r.pos.len() });
            if !dead && r.pos.is_empty() {
                ready.push(ri);
            }
        }
        while let Some(ri) = ready.pop() {
            for &h in &g.rules[ri].head {
                if v[h] == Val::False || possible[h] {
                    continue;
                }
                possible[h] = true;
                for &rj in &self.in_pos[h] {
                    if missing[rj] != usize::MAX {
                        missing[rj] -= 1;
                        if missing[rj] == 0 {
                            ready.push(rj);
                        }
                    }
                }
            }
        }
        for a in 0..v.len() {
            if !possible[a] {
                match v[a] {
                    Val::True => return false,
                    Val::Unknown => {
                        v[a] = Val::False;
                        queue.push(a);
                    }
                    Val::False => {}
                }
            }
        }
        true
    }

    fn propagate_local(&self, v: &mut [Val], mut queue: Vec<usize>) -> bool {
        while let Some(a) = queue.pop() {
            let mut rules: Vec<usize> = self.in_head[a].clone();
            rules.extend(&self.in_body[a]);
            for &ri in &rules {
                if !self.propagate_rule(v, ri, &mut queue) {
                    return false;
                }
            }
            // Atoms whose support may have been withdrawn.
            let mut touched: BTreeSet<usize> = BTreeSet::new();
            for &ri in &rules {
                touched.extend(&self.g.rules[ri].head);
            }
            for t in touched {
                if !self.check_support(v, t, &mut queue) {
                    return false;
                }
            }
        }
        true
    }

    fn initial(&self) -> Option<Vec<Val>> {
        let mut v = vec![Val::Unknown; self.g.atoms.len()];
        let mut queue = Vec::new();
        for ri in 0..self.g.rules.len() {
            if !self.propagate_rule(&mut v, ri, &mut queue) {
                return None;
            }
        }
        for a in 0..v.len() {
            if !self.check_support(&mut v, a, &mut queue) {
                return None;
            }
        }
        self.propagate(&mut v, queue).then_some(v)
    }

    /// Prefers head atoms of rules whose positive bodies already hold, then
    /// atoms those rules negate by default.
    fn branch_atom(&self, v: &[Val]) -> Option<usize> {
        let mut negated = None;
        for r in &self.g.rules {
            if !r.pos.iter().all(|&a| v[a] == Val::True) || r.neg.iter().any(|&a| v[a] == Val::True) {
                continue;
            }
            if r.head.iter().any(|&h| v[h] == Val::True) {
                continue;
            }
            if let Some(&h) = r.head.iter().find(|&&h| v[h] == Val::Unknown) {
                return Some(h);
            }
            if negated.is_none() {
                negated = r.neg.iter().copied().find(|&a| v[a] == Val::Unknown);
            }
        }
        negated.or_else(|| v.iter().position(|x| *x == Val::Unknown))
    }

    fn search(&mut self, v: Vec<Val>) {
        let Some(a) = self.branch_atom(&v) else {
            let model: BTreeSet<usize> = (0..v.len()).filter(|&i| v[i] == Val::True).collect();
            if is_answer_set(self.g, &model) {
                self.models.push(model);
            }
            return;
        };
        for val in [Val::True, Val::False] {
            let mut w = v.clone();
            w[a] = val;
            if self.propagate(&mut w, vec![a]) {
                self.search(w);
            }
        }
    }
}

/// Every rule is satisfied by `m`.
fn is_model(g: &GroundProgram, m: &BTreeSet<usize>) -> bool {
    g.rules.iter().all(|r| {
        let body = r.pos.iter().all(|a| m.contains(a)) && r.neg.iter().all(|a| !m.contains(a));
        !body || r.head.iter().any(|h| m.contains(h))
    })
}

/// `m` is a ⊆-minimal model of the reduct of `g` wrt `m`.
pub(crate) fn is_answer_set(g: &GroundProgram, m: &BTreeSet<usize>) -> bool {
    if !is_model(g, m) {
        return false;
    }
    // Reduct rules that can constrain subsets of m, as clauses over m.
    let reduct: Vec<(Vec<usize>, Vec<usize>)> = g
        .rules
        .iter()
        .filter(|r| r.neg.iter().all(|a| !m.contains(a)))
        .filter(|r| r.pos.iter().all(|a| m.contains(a)))
        .map(|r| {
            let heads: Vec<usize> = r.head.iter().copied().filter(|h| m.contains(h)).collect();
            (r.pos.clone(), heads)
        })
        .collect();
    if reduct.iter().all(|(_, h)| h.len() <= 1) {
        let mut least: BTreeSet<usize> = BTreeSet::new();
        loop {
            let mut changed = false;
            for (pos, head) in &reduct {
                if pos.iter().all(|a| least.contains(a)) {
                    match head.first() {
                        Some(&h) => changed |= least.insert(h),
                        None => return false,
                    }
                }
            }
            if !changed {
                break;
            }
        }
        return &least == m;
    }
    !has_smaller_model(&reduct, m)
}

/// Looks for a model of the positive clauses strictly inside `m`.
fn has_smaller_model(reduct: &[(Vec<usize>, Vec<usize>)], m: &BTreeSet<usize>) -> bool {
    let atoms: Vec<usize> = m.iter().copied().collect();
    let pos_of = |a: usize| atoms.binary_search(&a).expect("atom of m");
    let mut v = vec![Val::Unknown; atoms.len()];
    fn go(
        reduct: &[(Vec<usize>, Vec<usize>)],
        pos_of: &dyn Fn(usize) -> usize,
        v: &mut Vec<Val>,
    ) -> bool {
        // Unit propagation over `pos -> head` clauses.
        let mut trail = Vec::new();
        loop {
            let mut changed = false;
            for (pos, head) in reduct {
                let mut body_unknown = None;
                let mut body_false = false;
                let mut n_unknown_body = 0;
                for &a in pos {
                    match v[pos_of(a)] {
                        Val::False => body_false = true,
                        Val::Unknown => {
                            n_unknown_body += 1;
                            body_unknown = Some(a);
                        }
                        Val::True => {}
                    }
                }
                if body_false || head.iter().any(|&h| v[pos_of(h)] == Val::True) {
                    continue;
                }
                let open: Vec<usize> = head.iter().copied().filter(|&h| v[pos_of(h)] == Val::Unknown).collect();
                match (n_unknown_body, open.len()) {
                    (0, 0) => {
                        for i in trail {
                            v[i] = Val::Unknown;
                        }
                        return false;
                    }
                    (0, 1) => {
                        let i = pos_of(open[0]);
                        v[i] = Val::True;
                        trail.push(i);
                        changed = true;
                    }
                    (1, 0) => {
                        let i = pos_of(body_unknown.expect("one unknown body atom"));
                        v[i] = Val::False;
                        trail.push(i);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        let result = match v.iter().position(|x| *x == Val::Unknown) {
            None => v.contains(&Val::False),
            Some(i) => {
                let mut found = false;
                for val in [Val::False, Val::True] {
                    v[i] = val;
                    if go(reduct, pos_of, v) {
                        found = true;
                        break;
                    }
                }
                v[i] = Val::Unknown;
                found
            }
        };
        for i in trail {
            v[i] = Val::Unknown;
        }
        result
    }
    go(reduct, &pos_of, &mut v)
}

/// All answer sets of `g`, as sets of atom ids.
pub fn enumerate(g: &GroundProgram) -> Vec<BTreeSet<usize>> {
    let mut s = Solver::new(g);
    if let Some(v) = s.initial() {
        s.search(v);
    }
    s.models
}
