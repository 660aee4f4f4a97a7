//! Seeded generators for parser and reward fuzzing.

use std::panic::{catch_unwind, AssertUnwindSafe};

use oprl_core::domain::{check_domain, parse_domain, parse_problem, serialize_domain, DomainSource, Severity, STACK_INSERT_DOMAIN, STACK_PROBLEM};
use oprl_core::grounding::{OperatorId, Target};
use oprl_core::rewards::{element, element_range, RewardConfig, TransitionCtx, COMPOSITION};
use oprl_core::sim::{step, ActionVec, BlockState, EnvState, SimConfig, N_BLOCKS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOKENS: &[&str] = &[
    "(", ")", "(:operator", ":parameters", ":precondition", ":effect", "(and", "(not", "(or", "?b", "?x", "- block",
    "onTable", "lifted", "bogus", "\"", ";", "\n", "-", "(define", ":types", ":predicates", "\u{e9}", "\0",
];

pub fn mutate(src: &str, rng: &mut ChaCha8Rng) -> String {
    let mut s: Vec<char> = src.chars().collect();
    for _ in 0..rng.random_range(1..=4) {
        if s.is_empty() {
            break;
        }
        let at = rng.random_range(0..s.len());
        match rng.random_range(0..6) {
            0 => {
                let end = (at + rng.random_range(1..40)).min(s.len());
                s.drain(at..end);
            }
            1 => {
                let t = TOKENS.choose(rng).unwrap();
                s.splice(at..at, t.chars());
            }
            2 => s[at] = rng.random_range(0x20u8..0x7f) as char,
            3 => s.truncate(at),
            4 => {
                let end = (at + rng.random_range(1..60)).min(s.len());
                let chunk: Vec<char> = s[at..end].to_vec();
                let to = rng.random_range(0..s.len());
                s.splice(to..to, chunk);
            }
            _ => {
                let nest = rng.random_range(1..300);
                let open: String = "(".repeat(nest);
                s.splice(at..at, open.chars());
            }
        }
    }
    s.into_iter().collect()
}

/// Valid variant: operators dropped or reordered, whitespace and comments
/// rewritten.
pub fn valid_variant(rng: &mut ChaCha8Rng) -> String {
    let d = parse_domain(&DomainSource::inline(STACK_INSERT_DOMAIN)).unwrap();
    let mut d = d;
    let keep = rng.random_range(1..=d.operators.len());
    while d.operators.len() > keep {
        let i = rng.random_range(0..d.operators.len());
        d.operators.remove(i);
    }
    for i in (1..d.operators.len()).rev() {
        d.operators.swap(i, rng.random_range(0..=i));
    }
    let text = serialize_domain(&d);
    let mut out = String::new();
    for tok in text.split_whitespace() {
        out.push_str(tok);
        out.push_str(match rng.random_range(0..4) {
            0 => "\n",
            1 => "  ",
            2 => " ; note\n",
            _ => " ",
        });
    }
    out
}

pub fn random_state(rng: &mut ChaCha8Rng, cfg: &SimConfig) -> EnvState {
    let mut s = oprl_core::sim::reset(rng.random(), cfg);
    let pt = |r: &mut ChaCha8Rng| -> [f64; 3] {
        [0, 1, 2].map(|i| r.random_range(cfg.workspace_min[i]..=cfg.workspace_max[i]))
    };
    if rng.random_bool(0.7) {
        s.ee = pt(rng);
        for b in 0..N_BLOCKS {
            let v = |r: &mut ChaCha8Rng| [0; 3].map(|_| r.random_range(-2.0..2.0) * if r.random_bool(0.1) { 50.0 } else { 1.0 });
            s.blocks[b] = BlockState { pos: pt(rng), vel: v(rng), prev_vel: v(rng) };
        }
        s.gap = rng.random_range(0.0..=cfg.gripper_open_gap);
        s.attached = if rng.random_bool(0.3) { Some(rng.random_range(0..N_BLOCKS)) } else { None };
    }
    s
}

pub fn random_action(rng: &mut ChaCha8Rng) -> ActionVec {
    let mut c = || match rng.random_range(0..10) {
        0 => f64::NAN,
        1 => rng.random_range(-1e6..1e6),
        2 => if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        _ => rng.random_range(-1.0..=1.0),
    };
    ActionVec::new(c(), c(), c(), c())
}


#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ParserFuzz {
    pub crashes: usize,
    pub valid: usize,
    pub invalid: usize,
    /// Rejections lacking an error diagnostic with an in-bounds span.
    pub bad_diagnostics: usize,
    pub round_trip_failures: usize,
}

/// Parses `cases` seeded inputs: every fifth one a valid variant of the
/// shipped domain, the rest mutations of it.
pub fn parser_fuzz(cases: usize, seed: u64) -> ParserFuzz {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ParserFuzz::default();
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for case in 0..cases {
        let text = if case % 5 == 0 { valid_variant(&mut rng) } else { mutate(STACK_INSERT_DOMAIN, &mut rng) };
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let (model, diags) = check_domain(&DomainSource::inline(text.clone()));
            match model {
                Some(d) => {
                    let _ = parse_problem(&DomainSource::inline(STACK_PROBLEM), &d);
                    let again = parse_domain(&DomainSource::inline(serialize_domain(&d)));
                    (true, again.ok().as_ref() == Some(&d), true)
                }
                None => {
                    let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
                    let spans_ok = !errors.is_empty()
                        && errors.iter().all(|e| {
                            e.span.start <= e.span.end && e.span.end <= text.len() && e.span.line >= 1 && e.span.column >= 1
                        });
                    (false, true, spans_ok)
                }
            }
        }));
        match outcome {
            Ok((valid, round_trip, spans_ok)) => {
                if valid {
                    out.valid += 1;
                } else {
                    out.invalid += 1;
                }
                out.round_trip_failures += !round_trip as usize;
                out.bad_diagnostics += !spans_ok as usize;
            }
            Err(_) => out.crashes += 1,
        }
    }
    std::panic::set_hook(hook);
    out
}

/// Number of reward element values checked and how many fell outside their
/// declared range, over `transitions` fuzzed transitions.
pub fn reward_fuzz(transitions: u32, seed: u64) -> (u64, u64) {
    let cfg = SimConfig::default();
    let rc = RewardConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut violations) = (0u64, 0u64);
    let mut prev = random_state(&mut rng, &cfg);
    for i in 0..transitions {
        if i % 50 == 0 {
            prev = random_state(&mut rng, &cfg);
        }
        let next = step(&prev, random_action(&mut rng), &cfg);
        let block = rng.random_range(0..N_BLOCKS);
        let target = Target::new(block, 1 - block, rng.random_range(0..2));
        let ctx = TransitionCtx { prev: &prev, action: next.last_action, next: &next, target };
        for op in OperatorId::ALL {
            for &id in COMPOSITION[op.index()] {
                let v = element(id, op, &ctx, &cfg, &rc);
                let (lo, hi) = element_range(id);
                checked += 1;
                violations += !(v >= lo && v <= hi) as u64;
            }
        }
        prev = next;
    }
    (checked, violations)
}
