//! Literal transcription of the operator truth table plus a fixture that
//! maps 8-bit abstract states onto the shipped domain.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use oprl_core::domain::{parse_domain, DomainSource, STACK_INSERT_DOMAIN};
use oprl_core::symbolic::{binding, Binding, Instance, Object, TruthAssignment};

pub const OPS: [&str; 7] = ["open", "close", "reach", "lift", "move", "stack", "insert"];
pub const VARS: [&str; 8] = [
    "openGripper", "graspable", "onTable", "lifted", "moving", "above", "onTop", "inSlot",
];

// Rows are state variables, columns are (pre, eff) per operator.
// "-" is a don't-care cell; the single-binding view collapses the
// disjunctive `above` cells to plain literals.
#[rustfmt::skip]
pub const TABLE: [[&str; 14]; 8] = [
    ["F", "T", "T", "F", "T", "-", "F", "F", "F", "F", "F", "T", "F", "T"],
    ["F", "-", "T", "-", "F", "T", "T", "-", "T", "-", "T", "-", "T", "-"],
    ["T", "-", "T", "-", "T", "T", "T", "F", "F", "-", "-", "F", "-", "F"],
    ["-", "-", "-", "-", "-", "-", "-", "T", "T", "T", "T", "-", "T", "-"],
    ["-", "-", "-", "-", "-", "-", "-", "-", "-", "T", "T", "-", "-", "-"],
    ["T", "-", "-", "-", "-", "-", "-", "-", "F", "-", "T", "-", "T", "-"],
    ["-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "T", "-", "-"],
    ["-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "F", "T"],
];

pub fn cell(var: usize, op: usize, effect: bool) -> Option<bool> {
    match TABLE[var][2 * op + effect as usize] {
        "T" => Some(true),
        "F" => Some(false),
        _ => None,
    }
}

/// Effect cell, with the shipped domain's `move` also asserting `above`.
pub fn effect_cell(var: usize, op: usize) -> Option<bool> {
    if OPS[op] == "move" && VARS[var] == "above" {
        return Some(true);
    }
    cell(var, op, true)
}

pub fn oracle_applicable(op: usize, bits: u8) -> bool {
    (0..8).all(|v| cell(v, op, false).is_none_or(|want| (bits >> v & 1 == 1) == want))
}

pub fn oracle_apply(op: usize, bits: u8) -> u8 {
    let mut out = bits;
    for v in 0..8 {
        if let Some(val) = effect_cell(v, op) {
            out = if val { out | 1 << v } else { out & !(1 << v) };
        }
    }
    out
}

pub fn oracle_bfs(init: u8, goal_var: usize) -> Option<Vec<&'static str>> {
    let mut seen = HashSet::from([init]);
    let mut q = VecDeque::from([(init, Vec::new())]);
    while let Some((s, path)) = q.pop_front() {
        if s >> goal_var & 1 == 1 {
            return Some(path);
        }
        for (i, name) in OPS.iter().enumerate() {
            if oracle_applicable(i, s) {
                let n = oracle_apply(i, s);
                if seen.insert(n) {
                    let mut p = path.clone();
                    p.push(*name);
                    q.push_back((n, p));
                }
            }
        }
    }
    None
}

pub struct Fixture {
    pub inst: Instance,
}

impl Fixture {
    pub fn new() -> Self {
        let d = parse_domain(&DomainSource::inline(STACK_INSERT_DOMAIN)).unwrap();
        let objects = vec![
            Object::new("g", "gripper"),
            Object::new("t", "table"),
            Object::new("b", "block"),
            Object::new("c", "block"),
            Object::new("s", "slot"),
        ];
        Self {
            inst: Instance::new(Arc::new(d), objects).unwrap(),
        }
    }

    pub fn binding(&self, op: &str) -> Binding {
        let x = if op == "insert" { "s" } else { "c" };
        let mut b = binding([("?g", "g"), ("?b", "b"), ("?t", "t")]);
        if matches!(op, "move" | "stack" | "insert") {
            b.insert("?x".into(), x.into());
        }
        b
    }

    pub fn atoms(&self, var: usize) -> Vec<usize> {
        let i = &self.inst;
        match var {
            0 => vec![i.atom("openGripper", &["g"]).unwrap()],
            1 => vec![i.atom("graspable", &["g", "b"]).unwrap()],
            2 => vec![i.atom("onTable", &["b", "t"]).unwrap()],
            3 => vec![i.atom("lifted", &["b"]).unwrap()],
            4 => vec![i.atom("moving", &["b"]).unwrap()],
            5 => vec![
                i.atom("above", &["b", "c"]).unwrap(),
                i.atom("above", &["b", "s"]).unwrap(),
            ],
            6 => vec![i.atom("onTop", &["b", "c"]).unwrap()],
            7 => vec![i.atom("inSlot", &["b", "s"]).unwrap()],
            _ => unreachable!(),
        }
    }

    pub fn state(&self, bits: u8) -> TruthAssignment {
        let mut s = self.inst.empty_state();
        for v in 0..8 {
            for a in self.atoms(v) {
                s.set(a, bits >> v & 1 == 1);
            }
        }
        s
    }

    pub fn bits(&self, s: &TruthAssignment) -> u8 {
        (0..8).fold(0, |acc, v| acc | ((s.get(self.atoms(v)[0]) as u8) << v))
    }
}

/// Applicability mismatches between the domain and the table over every
/// operator and all 256 abstract states.
pub fn applicability_mismatches() -> usize {
    let fx = Fixture::new();
    let mut mismatches = 0;
    for (oi, op) in OPS.iter().enumerate() {
        for bits in 0..=255u8 {
            let got = fx.inst.is_applicable(op, &fx.state(bits), &fx.binding(op)).unwrap();
            if got != oracle_applicable(oi, bits) {
                mismatches += 1;
            }
        }
    }
    mismatches
}
