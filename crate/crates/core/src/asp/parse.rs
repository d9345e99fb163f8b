use super::program::{BodyElem, ChoiceGoal, Literal, Program, Rule};
use crate::error::Result;
use crate::lang::ast::{Builtin, CmpOp, Term};
use crate::lang::lexer::{Cursor, Tok};
use crate::relational::{Atom, Constant};

/// Parse program text. Ground positive bodiless rules become facts.
pub fn parse_program(text: &str) -> Result<Program> {
    let mut cur = Cursor::new(text)?;
    let mut prog = Program::default();
    while !cur.at_end() {
        let rule = rule(&mut cur)?;
        rule.check_safe()?;
        match as_fact(&rule) {
            Some(a) => {
                prog.facts.insert(a);
            }
            None => prog.push(rule),
        }
    }
    Ok(prog)
}

fn as_fact(r: &Rule) -> Option<Atom> {
    if !r.body.is_empty() || r.head.len() != 1 || r.head[0].negated {
        return None;
    }
    let l = &r.head[0];
    let args: Option<Vec<Constant>> = l
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(_) => None,
        })
        .collect();
    Some(Atom::new(l.predicate.clone(), args?))
}

fn rule(cur: &mut Cursor) -> Result<Rule> {
    let mut head = Vec::new();
    if !matches!(cur.peek(), Some(Tok::If)) {
        head.push(literal(cur)?);
        loop {
            if cur.eat(&Tok::Pipe) {
                head.push(literal(cur)?);
            } else if cur.is_keyword("v") && !matches!(cur.peek_at(1), Some(Tok::LParen | Tok::Dot | Tok::If)) {
                cur.next();
                head.push(literal(cur)?);
            } else {
                break;
            }
        }
    }
    let mut body = Vec::new();
    if cur.eat(&Tok::If) {
        loop {
            body.push(body_elem(cur)?);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        if head.is_empty() && body.is_empty() {
            return Err(cur.error("empty rule"));
        }
    } else if head.is_empty() {
        return Err(cur.error("expected a rule"));
    }
    cur.expect(&Tok::Dot)?;
    Ok(Rule::new(head, body))
}

fn term(cur: &mut Cursor) -> Result<Term> {
    match cur.next() {
        Some(Tok::Quoted(s)) => Ok(Term::Const(Constant::new(s))),
        Some(Tok::Ident(s)) if s.starts_with(|c: char| c.is_uppercase() || c == '_') => Ok(Term::Var(s)),
        Some(Tok::Ident(s)) => Ok(Term::Const(Constant::new(s))),
        _ => {
            let err = cur.error("expected a term");
            Err(err)
        }
    }
}

fn literal(cur: &mut Cursor) -> Result<Literal> {
    let negated = cur.eat(&Tok::Minus);
    let name = cur.ident("predicate")?;
    if name.starts_with(|c: char| c.is_uppercase()) {
        return Err(cur.error(format!("predicate `{name}` must start in lowercase")));
    }
    let mut args = Vec::new();
    if cur.eat(&Tok::LParen) {
        loop {
            args.push(term(cur)?);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    Ok(Literal {
        predicate: name,
        args,
        negated,
    })
}

fn var_group(cur: &mut Cursor) -> Result<Vec<String>> {
    let mut vars = Vec::new();
    if cur.eat(&Tok::LParen) {
        if cur.eat(&Tok::RParen) {
            return Ok(vars);
        }
        loop {
            vars.push(cur.ident("variable")?);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    } else {
        vars.push(cur.ident("variable")?);
    }
    Ok(vars)
}

fn body_elem(cur: &mut Cursor) -> Result<BodyElem> {
    if cur.is_keyword("not") && !matches!(cur.peek_at(1), Some(Tok::LParen | Tok::Comma | Tok::Dot)) {
        cur.next();
        return Ok(BodyElem::Naf(literal(cur)?));
    }
    if cur.is_keyword("choice") && cur.peek_at(1) == Some(&Tok::LParen) && cur.peek_at(2) == Some(&Tok::LParen) {
        cur.next();
        cur.expect(&Tok::LParen)?;
        let keys = var_group(cur)?;
        cur.expect(&Tok::Comma)?;
        let chosen = var_group(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(BodyElem::Choice(ChoiceGoal { keys, chosen }));
    }
    let is_cmp = match cur.peek() {
        Some(Tok::Quoted(_)) => true,
        Some(Tok::Ident(_)) => matches!(cur.peek_at(1), Some(Tok::Eq | Tok::Neq)),
        _ => false,
    };
    if is_cmp {
        let left = term(cur)?;
        let op = if cur.eat(&Tok::Eq) {
            CmpOp::Eq
        } else if cur.eat(&Tok::Neq) {
            CmpOp::Neq
        } else {
            return Err(cur.error("expected `=` or `!=`"));
        };
        let right = term(cur)?;
        return Ok(BodyElem::Cmp(Builtin::new(op, left, right)));
    }
    Ok(BodyElem::Pos(literal(cur)?))
}
