use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::ast::{CmpOp, Constraint, ConstraintOwner, Term};

/// Shape class of an exchange constraint or local integrity constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecClass {
    FullInclusion,
    UniversalBuiltinHead,
    Referential,
    MixedReferential,
    LocalFd,
    LocalDenial,
    Unsupported,
}

impl DecClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DecClass::FullInclusion => "full-inclusion",
            DecClass::UniversalBuiltinHead => "universal-builtin-head",
            DecClass::Referential => "referential",
            DecClass::MixedReferential => "mixed-referential",
            DecClass::LocalFd => "local-fd",
            DecClass::LocalDenial => "local-denial",
            DecClass::Unsupported => "unsupported",
        }
    }

    pub fn is_supported(self) -> bool {
        self != DecClass::Unsupported
    }
}

impl fmt::Display for DecClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_fd_head(c: &Constraint) -> bool {
    !c.head.is_empty()
        && c.head_atoms().next().is_none()
        && c.head_builtins().all(|b| {
            b.op == CmpOp::Eq && matches!((&b.left, &b.right), (Term::Var(_), Term::Var(_)))
        })
}

pub fn classify_dec(c: &Constraint) -> DecClass {
    match &c.owner {
        ConstraintOwner::Local(_) => {
            if c.is_denial() {
                DecClass::LocalDenial
            } else if is_fd_head(c) {
                DecClass::LocalFd
            } else {
                DecClass::Unsupported
            }
        }
        ConstraintOwner::Unowned if is_fd_head(c) => DecClass::LocalFd,
        ConstraintOwner::Unowned if c.is_denial() => DecClass::LocalDenial,
        _ => classify_exchange(c),
    }
}

fn classify_exchange(c: &Constraint) -> DecClass {
    let head_atoms: Vec<_> = c.head_atoms().collect();
    if head_atoms.is_empty() {
        return DecClass::UniversalBuiltinHead;
    }
    if c.head_builtins().next().is_some() {
        return DecClass::Unsupported;
    }
    let body_atoms: Vec<_> = c.body_atoms().collect();
    if c.existential.is_empty()
        && body_atoms.len() == 1
        && head_atoms.len() == 1
        && c.body_builtins().next().is_none()
    {
        let b = &body_atoms[0].terms;
        let h = &head_atoms[0].terms;
        let distinct: BTreeSet<_> = b.iter().collect();
        if b == h && distinct.len() == b.len() && b.iter().all(|t| matches!(t, Term::Var(_))) {
            return DecClass::FullInclusion;
        }
    }
    if head_atoms.len() == 1 {
        return DecClass::Referential;
    }
    let shared = c.existential.iter().any(|v| {
        head_atoms
            .iter()
            .filter(|a| a.vars().any(|x| x == v))
            .count()
            >= 2
    });
    if shared {
        DecClass::MixedReferential
    } else {
        DecClass::Unsupported
    }
}
