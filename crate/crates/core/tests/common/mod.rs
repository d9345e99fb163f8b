#![allow(dead_code)]

use std::path::PathBuf;

use peerdx::lang::{parse_system, System};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> System {
    parse_system(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

const DOMAIN: [&str; 5] = ["a", "b", "c", "d", "e"];

struct Rel {
    name: String,
    arity: usize,
    peer: usize,
}

fn vars(n: usize) -> Vec<String> {
    ["x", "y", "z", "v"][..n].iter().map(|s| s.to_string()).collect()
}

fn dec(rng: &mut ChaCha8Rng, rels: &[Rel], from: usize, to: usize) -> Option<String> {
    let side = |p: usize, arity: Option<usize>| -> Vec<&Rel> {
        rels.iter()
            .filter(|r| r.peer == p && arity.is_none_or(|a| r.arity == a))
            .collect()
    };
    let pick = |rng: &mut ChaCha8Rng, v: Vec<&Rel>| v.choose(rng).map(|r| (r.name.clone(), r.arity));
    let (a_peer, b_peer) = if rng.gen_bool(0.5) { (from, to) } else { (to, from) };
    match rng.gen_range(0..5) {
        0 => {
            let (a, k) = pick(rng, side(a_peer, None))?;
            let (b, _) = pick(rng, side(b_peer, Some(k)))?;
            let v = vars(k).join(",");
            Some(format!("forall {v} ({a}({v}) -> {b}({v}))"))
        }
        1 => {
            let (a, _) = pick(rng, side(a_peer, Some(2)))?;
            let (b, _) = pick(rng, side(b_peer, Some(2)))?;
            Some(format!("forall x,y,z ({a}(x,y) & {b}(x,z) -> y = z)"))
        }
        2 => {
            let (a, ka) = pick(rng, side(a_peer, None))?;
            let (b, kb) = pick(rng, side(b_peer, None))?;
            let va = vars(ka);
            let mut vb = vec!["x".to_string()];
            if kb == 2 {
                vb.push("z".into());
            }
            let mut all = va.clone();
            for v in &vb {
                if !all.contains(v) {
                    all.push(v.clone());
                }
            }
            Some(format!(
                "forall {} ({a}({}) & {b}({}) -> false)",
                all.join(","),
                va.join(","),
                vb.join(",")
            ))
        }
        3 => {
            let (a, ka) = pick(rng, side(a_peer, None))?;
            let (b, _) = pick(rng, side(b_peer, Some(2)))?;
            let va = vars(ka).join(",");
            Some(format!("forall {va} exists w ({a}({va}) -> {b}(x,w))"))
        }
        _ => {
            let (r1, _) = pick(rng, side(from, Some(2)))?;
            let (r2, _) = pick(rng, side(from, Some(2)))?;
            let (s1, _) = pick(rng, side(to, Some(2)))?;
            let (s2, _) = pick(rng, side(to, Some(2)))?;
            Some(format!(
                "forall x,y,z exists w ({r1}(x,y) & {s1}(z,y) -> {r2}(x,w) & {s2}(z,w))"
            ))
        }
    }
}

/// A random system text: up to 3 peers, one or two exchange constraints of
/// the supported shapes, up to 8 atoms over a domain of at most 5
/// constants.
pub fn random_system(rng: &mut ChaCha8Rng) -> String {
    let n_peers = rng.gen_range(2..=3);
    let mut rels = Vec::new();
    for p in 0..n_peers {
        for k in 0..rng.gen_range(1..=2) {
            rels.push(Rel {
                name: format!("{}{}", ["A", "B"][k], p + 1),
                arity: rng.gen_range(1..=2),
                peer: p,
            });
        }
    }
    let domain = &DOMAIN[..rng.gen_range(2..=5)];
    let n_atoms = rng.gen_range(0..=8);
    let mut facts: Vec<Vec<String>> = vec![Vec::new(); rels.len()];
    for _ in 0..n_atoms {
        let i = rng.gen_range(0..rels.len());
        let args: Vec<&str> = (0..rels[i].arity).map(|_| *domain.choose(rng).unwrap()).collect();
        let atom = format!("{}({})", rels[i].name, args.join(","));
        if !facts[i].contains(&atom) {
            facts[i].push(atom);
        }
    }
    let mut text = String::new();
    for p in 0..n_peers {
        text.push_str(&format!("peer P{} {{\n  schema ", p + 1));
        let mine: Vec<(usize, &Rel)> = rels.iter().enumerate().filter(|(_, r)| r.peer == p).collect();
        let schema: Vec<String> = mine.iter().map(|(_, r)| format!("{}/{}", r.name, r.arity)).collect();
        text.push_str(&schema.join(", "));
        text.push_str(";\n");
        let inst: Vec<String> = mine.iter().flat_map(|(i, _)| facts[*i].clone()).collect();
        if !inst.is_empty() {
            text.push_str(&format!("  instance {};\n", inst.join(", ")));
        }
        if rng.gen_bool(0.15) {
            if let Some((_, r)) = mine.iter().find(|(_, r)| r.arity == 2) {
                let n = &r.name;
                text.push_str(&format!("  ic forall x,y,z ({n}(x,y) & {n}(x,z) -> y = z);\n"));
            }
        }
        text.push_str("}\n");
    }
    for p in 0..n_peers {
        for q in 0..n_peers {
            if p != q && rng.gen_bool(0.8) {
                let level = if rng.gen_bool(0.6) { "less" } else { "same" };
                text.push_str(&format!("trust P{} {level} P{};\n", p + 1, q + 1));
            }
        }
    }
    let wanted = rng.gen_range(1..=2);
    let mut made = 0;
    for _ in 0..20 {
        if made == wanted {
            break;
        }
        let from = rng.gen_range(0..n_peers);
        let mut to = rng.gen_range(0..n_peers - 1);
        if to >= from {
            to += 1;
        }
        if let Some(c) = dec(rng, &rels, from, to) {
            text.push_str(&format!("dec P{} -> P{} : {c};\n", from + 1, to + 1));
            made += 1;
        }
    }
    text
}
