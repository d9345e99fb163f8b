//! Recursive-descent parsers for the system file, constraint and query syntaxes.

use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{Cursor, Tok};
use super::saferange::safe_range_check;
use super::system::{RawPeer, RawSystem, System};
use crate::error::{Error, Result};
use crate::relational::{Atom, Constant, PeerId};
use crate::trust::{TrustLevel, TrustTriple};

pub fn parse_system(text: &str) -> Result<System> {
    let mut cur = Cursor::new(text)?;
    let mut raw = RawSystem::default();
    while !cur.at_end() {
        if cur.eat_keyword("peer") {
            raw.peers.push(peer_decl(&mut cur)?);
        } else if cur.eat_keyword("trust") {
            let subject = cur.ident("peer name")?;
            let level = if cur.eat_keyword("less") {
                TrustLevel::Less
            } else if cur.eat_keyword("same") {
                TrustLevel::Same
            } else {
                return Err(cur.error("expected `less` or `same`"));
            };
            let object = cur.ident("peer name")?;
            cur.expect(&Tok::Semi)?;
            raw.trust.push(TrustTriple::new(subject.as_str(), level, object.as_str()));
        } else if cur.eat_keyword("dec") {
            let from = cur.ident("peer name")?;
            cur.expect(&Tok::Arrow)?;
            let to = cur.ident("peer name")?;
            cur.expect(&Tok::Colon)?;
            let mut c = constraint(&mut cur)?;
            c.owner = ConstraintOwner::Dec {
                from: PeerId::new(from),
                to: PeerId::new(to),
            };
            cur.expect(&Tok::Semi)?;
            raw.decs.push(c);
        } else {
            return Err(cur.error("expected `peer`, `trust` or `dec`"));
        }
    }
    raw.resolve()
}

fn peer_decl(cur: &mut Cursor) -> Result<RawPeer> {
    let name = cur.ident("peer name")?;
    cur.expect(&Tok::LBrace)?;
    cur.expect_keyword("schema")?;
    let mut relations = Vec::new();
    loop {
        let rel = cur.ident("relation name")?;
        cur.expect(&Tok::Slash)?;
        let arity_text = cur.ident("arity")?;
        let arity: usize = arity_text
            .parse()
            .map_err(|_| cur.error(format!("arity must be a natural number, found `{arity_text}`")))?;
        relations.push((rel, arity));
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(&Tok::Semi)?;
    let mut atoms = Vec::new();
    if cur.eat_keyword("instance") {
        loop {
            atoms.push(ground_atom(cur)?);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(&Tok::Semi)?;
    }
    let mut ics = Vec::new();
    while cur.eat_keyword("ic") {
        let mut c = constraint(cur)?;
        c.owner = ConstraintOwner::Local(PeerId::new(name.clone()));
        cur.expect(&Tok::Semi)?;
        ics.push(c);
    }
    cur.expect(&Tok::RBrace)?;
    Ok(RawPeer {
        name,
        relations,
        atoms,
        ics,
    })
}

fn ground_atom(cur: &mut Cursor) -> Result<Atom> {
    let rel = cur.ident("relation name")?;
    cur.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    if !cur.eat(&Tok::RParen) {
        loop {
            match cur.next() {
                Some(Tok::Ident(s)) | Some(Tok::Quoted(s)) => args.push(Constant::new(s)),
                _ => return Err(cur.error("expected a constant")),
            }
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    Ok(Atom::new(rel, args))
}

fn var_list(cur: &mut Cursor) -> Result<Vec<String>> {
    let mut vars = vec![cur.ident("variable")?];
    while cur.eat(&Tok::Comma) {
        vars.push(cur.ident("variable")?);
    }
    Ok(vars)
}

/// Parse a standalone constraint (no owner attached).
pub fn parse_constraint(text: &str) -> Result<Constraint> {
    let mut cur = Cursor::new(text)?;
    let c = constraint(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("unexpected input after constraint"));
    }
    Ok(c)
}

fn constraint(cur: &mut Cursor) -> Result<Constraint> {
    let mut universal: Vec<String> = Vec::new();
    let mut existential: Vec<String> = Vec::new();
    loop {
        if cur.eat_keyword("forall") {
            if !existential.is_empty() {
                return Err(cur.error("constraints must be in prenex forall-exists form"));
            }
            universal.extend(var_list(cur)?);
        } else if cur.eat_keyword("exists") {
            existential.extend(var_list(cur)?);
        } else {
            break;
        }
    }
    let mut declared = BTreeSet::new();
    for v in universal.iter().chain(&existential) {
        if !declared.insert(v.clone()) {
            return Err(cur.error(format!("variable `{v}` is quantified twice")));
        }
    }
    let paren = cur.eat(&Tok::LParen);
    let body = conjunction(cur, &declared)?;
    let head = if cur.eat(&Tok::Arrow) {
        if cur.eat_keyword("false") {
            Vec::new()
        } else {
            conjunction(cur, &declared)?
        }
    } else {
        Vec::new()
    };
    if paren {
        cur.expect(&Tok::RParen)?;
    }
    let c = Constraint {
        universal,
        existential,
        body,
        head,
        owner: ConstraintOwner::Unowned,
    };
    check_constraint_vars(&c)?;
    Ok(c)
}

fn check_constraint_vars(c: &Constraint) -> Result<()> {
    let mut body_atom_vars = BTreeSet::new();
    for a in c.body_atoms() {
        body_atom_vars.extend(a.vars().map(str::to_string));
    }
    if c.body_atoms().next().is_none() {
        return Err(Error::InvalidConstraint(
            "the body needs at least one atom".into(),
        ));
    }
    let vars_of = |conj: &[Conjunct]| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for cj in conj {
            match cj {
                Conjunct::Atom(a) => out.extend(a.vars().map(str::to_string)),
                Conjunct::Builtin(b) => {
                    out.extend([&b.left, &b.right].into_iter().filter_map(Term::as_var).map(str::to_string))
                }
            }
        }
        out
    };
    for v in vars_of(&c.body) {
        if c.existential.contains(&v) {
            return Err(Error::ExistentialInBody(v));
        }
    }
    for v in &c.universal {
        if !body_atom_vars.contains(v) {
            return Err(Error::UnboundVariable(v.clone()));
        }
    }
    let mut head_atom_vars = BTreeSet::new();
    for a in c.head_atoms() {
        head_atom_vars.extend(a.vars().map(str::to_string));
    }
    for v in &c.existential {
        if !head_atom_vars.contains(v) {
            return Err(Error::UnboundVariable(v.clone()));
        }
    }
    Ok(())
}

fn conjunction(cur: &mut Cursor, declared: &BTreeSet<String>) -> Result<Vec<Conjunct>> {
    let mut out = vec![conjunct(cur, declared)?];
    while cur.eat(&Tok::Amp) {
        out.push(conjunct(cur, declared)?);
    }
    Ok(out)
}

fn conjunct(cur: &mut Cursor, declared: &BTreeSet<String>) -> Result<Conjunct> {
    if matches!(cur.peek(), Some(Tok::Ident(_))) && cur.peek_at(1) == Some(&Tok::LParen) {
        let rel = cur.ident("relation name")?;
        let terms = term_args(cur, &|cur, name| constraint_term(cur, name, declared))?;
        return Ok(Conjunct::Atom(AtomPattern::new(rel, terms)));
    }
    let left = term(cur, &|cur, name| constraint_term(cur, name, declared))?;
    let op = comparison(cur)?;
    let right = term(cur, &|cur, name| constraint_term(cur, name, declared))?;
    Ok(Conjunct::Builtin(Builtin::new(op, left, right)))
}

type IdentRule<'a> = dyn Fn(&Cursor, String) -> Result<Term> + 'a;

fn constraint_term(cur: &Cursor, name: String, declared: &BTreeSet<String>) -> Result<Term> {
    if declared.contains(&name) {
        Ok(Term::Var(name))
    } else if name.starts_with(|c: char| c.is_ascii_digit()) {
        Ok(Term::Const(Constant::new(name)))
    } else {
        let _ = cur;
        Err(Error::UnboundVariable(name))
    }
}

fn query_term(_cur: &Cursor, name: String) -> Result<Term> {
    if name.starts_with(|c: char| c.is_ascii_digit()) {
        Ok(Term::Const(Constant::new(name)))
    } else {
        Ok(Term::Var(name))
    }
}

fn term(cur: &mut Cursor, on_ident: &IdentRule<'_>) -> Result<Term> {
    match cur.peek().cloned() {
        Some(Tok::Quoted(s)) => {
            cur.next();
            Ok(Term::Const(Constant::new(s)))
        }
        Some(Tok::Ident(s)) => {
            let t = on_ident(cur, s)?;
            cur.next();
            Ok(t)
        }
        _ => Err(cur.error("expected a term")),
    }
}

fn term_args(cur: &mut Cursor, on_ident: &IdentRule<'_>) -> Result<Vec<Term>> {
    cur.expect(&Tok::LParen)?;
    let mut terms = Vec::new();
    if cur.eat(&Tok::RParen) {
        return Ok(terms);
    }
    loop {
        terms.push(term(cur, on_ident)?);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(&Tok::RParen)?;
    Ok(terms)
}

fn comparison(cur: &mut Cursor) -> Result<CmpOp> {
    if cur.eat(&Tok::Eq) {
        Ok(CmpOp::Eq)
    } else if cur.eat(&Tok::Neq) {
        Ok(CmpOp::Neq)
    } else {
        Err(cur.error("expected `=` or `!=`"))
    }
}

/// Parse `Name(x̄) := formula` and reject queries that are not safe-range.
pub fn parse_query(text: &str) -> Result<Query> {
    let q = parse_query_unchecked(text)?;
    if !safe_range_check(&q) {
        return Err(Error::NotSafeRange(format!(
            "some answer variable of `{q}` is not bound by a positive atom in every disjunct"
        )));
    }
    Ok(q)
}

pub(crate) fn parse_query_unchecked(text: &str) -> Result<Query> {
    let mut cur = Cursor::new(text)?;
    let name = cur.ident("query name")?;
    cur.expect(&Tok::LParen)?;
    let mut head = Vec::new();
    if !cur.eat(&Tok::RParen) {
        head = var_list(&mut cur)?;
        cur.expect(&Tok::RParen)?;
    }
    let mut seen = BTreeSet::new();
    for v in &head {
        if !seen.insert(v) {
            return Err(cur.error(format!("answer variable `{v}` repeated")));
        }
    }
    cur.expect(&Tok::Define)?;
    let formula = implication(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("unexpected input after query"));
    }
    Ok(Query { name, head, formula })
}

/// Parse a bare first-order formula.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut cur = Cursor::new(text)?;
    let f = implication(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("unexpected input after formula"));
    }
    Ok(f)
}

fn implication(cur: &mut Cursor) -> Result<Formula> {
    let left = disjunction(cur)?;
    if cur.eat(&Tok::Arrow) {
        let right = implication(cur)?;
        Ok(Formula::Implies(Box::new(left), Box::new(right)))
    } else {
        Ok(left)
    }
}

fn disjunction(cur: &mut Cursor) -> Result<Formula> {
    let mut parts = vec![conj_formula(cur)?];
    while cur.eat(&Tok::Pipe) {
        parts.push(conj_formula(cur)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::Or(parts)
    })
}

fn conj_formula(cur: &mut Cursor) -> Result<Formula> {
    let mut parts = vec![unary(cur)?];
    while cur.eat(&Tok::Amp) {
        parts.push(unary(cur)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::And(parts)
    })
}

fn unary(cur: &mut Cursor) -> Result<Formula> {
    if cur.eat(&Tok::Tilde) {
        return Ok(Formula::Not(Box::new(unary(cur)?)));
    }
    if cur.eat_keyword("exists") {
        let vars = var_list(cur)?;
        return Ok(Formula::Exists(vars, Box::new(unary(cur)?)));
    }
    if cur.eat_keyword("forall") {
        let vars = var_list(cur)?;
        return Ok(Formula::Forall(vars, Box::new(unary(cur)?)));
    }
    if cur.eat(&Tok::LParen) {
        let f = implication(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(f);
    }
    if matches!(cur.peek(), Some(Tok::Ident(_))) && cur.peek_at(1) == Some(&Tok::LParen) {
        let rel = cur.ident("relation name")?;
        let terms = term_args(cur, &query_term)?;
        return Ok(Formula::Atom(AtomPattern::new(rel, terms)));
    }
    let left = term(cur, &query_term)?;
    let op = comparison(cur)?;
    let right = term(cur, &query_term)?;
    Ok(Formula::Cmp(Builtin::new(op, left, right)))
}
