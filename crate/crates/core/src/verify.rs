//! Experiments checking the axioms against behavioural congruence:
//! soundness over random closed instances of every axiom, completeness for
//! repetition-free terms by exhaustive enumeration.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::canon::{canonical_form, Level};
use crate::equivalence::{bcong_with, context_seq, first_form, ContextBounds, CongruenceWitness, Interpretation};
use crate::extract::extract;
use crate::register::{RegisterInstr, UnaryBoolFn};
use crate::seq::InstrSeq;
use crate::syntax::{BasicInstruction, Instr, Term};
use crate::thread::{bisimilar_with, minimize_with, ActionSemantics, RegularThread};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("terms need at least one instruction")]
    ZeroLength,
}

/// Basic instructions used by the experiments: `a` and `b`, or the sixteen
/// register instructions `f.p/q`.
pub fn basic_instructions(interp: Interpretation) -> Vec<BasicInstruction> {
    match interp {
        Interpretation::Generic => vec![BasicInstruction::symbol("a"), BasicInstruction::symbol("b")],
        Interpretation::BoolReg => UnaryBoolFn::ALL
            .iter()
            .flat_map(|&p| {
                UnaryBoolFn::ALL
                    .iter()
                    .map(move |&q| BasicInstruction::Register(RegisterInstr::new("f", p, q)))
            })
            .collect(),
    }
}

/// `a, +a, -a` for each basic instruction, then `#0..#jump_bound`, then `!`.
pub fn primitive_instructions(basics: &[BasicInstruction], jump_bound: usize) -> Vec<Instr> {
    let mut out = Vec::with_capacity(3 * basics.len() + jump_bound + 2);
    for a in basics {
        out.push(Instr::Plain(a.clone()));
        out.push(Instr::PosTest(a.clone()));
        out.push(Instr::NegTest(a.clone()));
    }
    out.extend((0..=jump_bound).map(Instr::Jump));
    out.push(Instr::Halt);
    out
}

/// All right-nested concatenations of `1..=max_len` primitive instructions,
/// shorter terms first, each length in lexicographic order of
/// [`primitive_instructions`].
pub fn enumerate_terms(basics: &[BasicInstruction], max_len: usize, jump_bound: usize) -> Result<Vec<Term>, VerifyError> {
    if max_len == 0 {
        return Err(VerifyError::ZeroLength);
    }
    let prims = primitive_instructions(basics, jump_bound);
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut idx = vec![0; len];
        loop {
            out.push(Term::seq(idx.iter().map(|&i| prims[i].clone())).expect("nonempty"));
            // odometer increment, last position fastest
            let mut p = len;
            loop {
                if p == 0 {
                    break;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < prims.len() {
                    break;
                }
                idx[p] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Random closed terms and instructions.
pub struct TermGen {
    rng: ChaCha8Rng,
    basics: Vec<BasicInstruction>,
    jump_bound: usize,
}

impl TermGen {
    pub fn new(seed: u64, basics: Vec<BasicInstruction>, jump_bound: usize) -> Self {
        TermGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            basics,
            jump_bound,
        }
    }

    pub fn basic(&mut self) -> BasicInstruction {
        self.basics.choose(&mut self.rng).expect("nonempty alphabet").clone()
    }

    pub fn instr(&mut self) -> Instr {
        match self.rng.gen_range(0..6) {
            0 => Instr::Plain(self.basic()),
            1 => Instr::PosTest(self.basic()),
            2 => Instr::NegTest(self.basic()),
            3 | 4 => Instr::Jump(self.rng.gen_range(0..=self.jump_bound)),
            _ => Instr::Halt,
        }
    }

    pub fn instrs(&mut self, k: usize) -> Vec<Term> {
        (0..k).map(|_| Term::instr(self.instr())).collect()
    }

    /// A term with `1..=max_instrs` instructions; may contain repetition
    /// when `repeat` is set.
    pub fn term(&mut self, max_instrs: usize, repeat: bool) -> Term {
        let n = self.rng.gen_range(1..=max_instrs.max(1));
        self.term_of(n, repeat)
    }

    fn term_of(&mut self, n: usize, repeat: bool) -> Term {
        let t = if n == 1 {
            Term::instr(self.instr())
        } else {
            let left = self.rng.gen_range(1..n);
            let l = self.term_of(left, repeat);
            let r = self.term_of(n - left, repeat);
            Term::concat(l, r)
        };
        if repeat && self.rng.gen_bool(0.2) {
            Term::repeat(t)
        } else {
            t
        }
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("nonempty")
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }
}

fn cat(parts: Vec<Term>) -> Term {
    parts
        .into_iter()
        .rev()
        .reduce(|acc, t| Term::concat(t, acc))
        .expect("nonempty concatenation")
}

fn j(l: usize) -> Term {
    Term::instr(Instr::Jump(l))
}

fn halt() -> Term {
    Term::instr(Instr::Halt)
}

fn with(mut parts: Vec<Term>, tail: Vec<Term>) -> Vec<Term> {
    parts.extend(tail);
    parts
}

/// Instruction on `a` of the given polarity: 0 plain, 1 positive, 2 negative.
fn on(a: &BasicInstruction, polarity: usize) -> Term {
    Term::instr(match polarity {
        0 => Instr::Plain(a.clone()),
        1 => Instr::PosTest(a.clone()),
        _ => Instr::NegTest(a.clone()),
    })
}

const SUBTERM: usize = 4;

/// A closed instance `(lhs, rhs)` of PGA`n`. The `i`-th instance cycles
/// through `k, k', l` in `0..=3`.
fn pga_instance(n: u8, i: usize, g: &mut TermGen) -> (Term, Term) {
    let k = i % 4;
    let k2 = (i / 4) % 4;
    let l = (i / 16) % 4;
    let a = g.basic();
    // polarity of the test in the paired positive/negative axioms
    let pol = |n: u8, pos: u8| if n == pos { 1 } else { 2 };
    match n {
        1 => {
            let (x, y, z) = (g.term(SUBTERM, true), g.term(SUBTERM, true), g.term(SUBTERM, true));
            (
                Term::concat(Term::concat(x.clone(), y.clone()), z.clone()),
                Term::concat(x, Term::concat(y, z)),
            )
        }
        2 => {
            let x = g.term(SUBTERM, true);
            (Term::repeat(x.power(1 + i % 3)), Term::repeat(x))
        }
        3 => {
            let (x, y) = (g.term(SUBTERM, true), g.term(SUBTERM, true));
            (Term::concat(Term::repeat(x.clone()), y), Term::repeat(x))
        }
        4 => {
            let (x, y) = (g.term(SUBTERM, true), g.term(SUBTERM, true));
            (
                Term::repeat(Term::concat(x.clone(), y.clone())),
                Term::concat(x.clone(), Term::repeat(Term::concat(y, x))),
            )
        }
        5 => {
            let us = g.instrs(k);
            (
                cat(with(with(vec![j(k + 1)], us.clone()), vec![j(0)])),
                cat(with(with(vec![j(0)], us), vec![j(0)])),
            )
        }
        6 => {
            let us = g.instrs(k);
            (
                cat(with(with(vec![j(k + 1)], us.clone()), vec![j(l)])),
                cat(with(with(vec![j(l + k + 1)], us), vec![j(l)])),
            )
        }
        7 => {
            let us = g.instrs(k);
            (
                Term::repeat(cat(with(vec![j(l + k + 1)], us.clone()))),
                Term::repeat(cat(with(vec![j(l)], us))),
            )
        }
        8 => {
            let us = g.instrs(k);
            let vs = Term::repeat(cat(g.instrs(k2 + 1)));
            (
                cat(with(with(vec![j(l + k + k2 + 2)], us.clone()), vec![vs.clone()])),
                cat(with(with(vec![j(l + k + 1)], us), vec![vs])),
            )
        }
        9 | 10 => (
            cat(vec![on(&a, pol(n, 9)), j(0), j(0)]),
            cat(vec![on(&a, 0), j(0), j(0)]),
        ),
        11 | 12 => (cat(vec![on(&a, pol(n, 11)), j(1)]), cat(vec![on(&a, 0), j(1)])),
        13 | 14 => (
            cat(vec![on(&a, pol(n, 13)), j(l + 2), j(l + 1)]),
            cat(vec![on(&a, 0), j(l + 2), j(l + 1)]),
        ),
        15 | 16 => (
            cat(vec![on(&a, pol(n, 15)), halt(), halt()]),
            cat(vec![on(&a, 0), halt(), halt()]),
        ),
        17 | 18 => {
            let u = Term::repeat(Term::instr(g.instr()));
            (
                Term::concat(on(&a, pol(n, 17)), u.clone()),
                Term::concat(on(&a, 0), u),
            )
        }
        19 | 20 => {
            let us = g.instrs(k);
            let t = on(&a, pol(n, 19));
            (
                cat(with(with(vec![j(k + 3), j(k + 3), j(k + 3)], us.clone()), vec![t.clone()])),
                cat(with(with(vec![t.clone(), j(k + 3), j(k + 3)], us), vec![t])),
            )
        }
        21 => {
            let us = g.instrs(k);
            (
                cat(with(with(vec![j(k + 2), j(k + 2)], us.clone()), vec![on(&a, 0)])),
                cat(with(with(vec![on(&a, 0), j(k + 2)], us), vec![on(&a, 0)])),
            )
        }
        22 | 23 => {
            let t = on(&a, pol(n, 22));
            let us = g.instrs(k);
            let vs = g.instrs(k2);
            let body = with(
                with(with(us, vec![t.clone(), j(k2 + 3), j(k2 + 3)]), vs),
                vec![t],
            );
            (
                cat(with(vec![j(k + k2 + 4)], body.clone())),
                cat(with(vec![j(k + 1)], body)),
            )
        }
        24 => {
            let us = g.instrs(k);
            let vs = g.instrs(k2);
            let body = with(with(with(us, vec![on(&a, 0), j(k2 + 2)]), vs), vec![on(&a, 0)]);
            (cat(with(vec![j(k + k2 + 3)], body.clone())), cat(with(vec![j(k + 1)], body)))
        }
        25 => {
            let us = g.instrs(k);
            (
                cat(with(with(vec![j(k + 1)], us.clone()), vec![halt()])),
                cat(with(with(vec![halt()], us), vec![halt()])),
            )
        }
        26 => {
            let us = g.instrs(k);
            let u = Term::instr(g.instr());
            (
                Term::concat(j(k + 1), Term::repeat(cat(with(us.clone(), vec![u.clone()])))),
                Term::repeat(cat(with(vec![u], us))),
            )
        }
        27..=29 => {
            let us = g.instrs(k);
            let last = on(&a, match n {
                27 => 1,
                28 => 2,
                _ => 0,
            });
            (
                Term::repeat(cat(with(with(vec![j(k + 2), j(k + 1)], us.clone()), vec![last]))),
                Term::repeat(cat(with(with(vec![on(&a, 0), j(k + 1)], us), vec![on(&a, 0)]))),
            )
        }
        30 => {
            let len = k + 1;
            // positions performing a; at least one
            let mut performs: Vec<bool> = (0..len).map(|_| g.range(0, 2) > 0).collect();
            let anchor = g.range(0, len - 1);
            performs[anchor] = true;
            let body = (0..len)
                .map(|p| {
                    if performs[p] {
                        on(&a, g.range(0, 2))
                    } else {
                        let choices: Vec<usize> = (1..len).filter(|d| performs[(p + d) % len]).collect();
                        j(g.pick(&choices))
                    }
                })
                .collect();
            (Term::repeat(cat(body)), Term::repeat(on(&a, 0)))
        }
        _ => unreachable!("no axiom PGA{n}"),
    }
}

fn register(p: UnaryBoolFn, q: UnaryBoolFn) -> BasicInstruction {
    BasicInstruction::Register(RegisterInstr::new("f", p, q))
}

/// A closed instance of PGAbr`n`, bare on even `i`, inside a random
/// context `X;_;Y` on odd `i`.
fn pgabr_instance(n: u8, i: usize, g: &mut TermGen) -> (Term, Term) {
    use UnaryBoolFn::*;
    let p = g.pick(&UnaryBoolFn::ALL);
    let q = g.pick(&UnaryBoolFn::ALL);
    let (x, y) = match n {
        1 => (Instr::PosTest(register(F, p)), Instr::NegTest(register(T, p))),
        2 => (Instr::PosTest(register(T, p)), Instr::NegTest(register(F, p))),
        3 => (Instr::PosTest(register(I, p)), Instr::NegTest(register(C, p))),
        4 => (Instr::PosTest(register(C, p)), Instr::NegTest(register(I, p))),
        _ => (Instr::PosTest(register(T, p)), Instr::Plain(register(q, p))),
    };
    let (x, y) = (Term::instr(x), Term::instr(y));
    if i.is_multiple_of(2) {
        (x, y)
    } else {
        let before = g.term(SUBTERM, false);
        let after = g.term(SUBTERM, true);
        (
            cat(vec![before.clone(), x, after.clone()]),
            cat(vec![before, y, after]),
        )
    }
}

/// A closed instance of BTAbr`n` over threads of random terms.
fn btabr_instance(n: u8, g: &mut TermGen) -> (RegularThread, RegularThread) {
    use UnaryBoolFn::*;
    let x = extract(&first_form(&g.term(SUBTERM, true)));
    let y = extract(&first_form(&g.term(SUBTERM, true)));
    let q = g.pick(&UnaryBoolFn::ALL);
    let p = g.pick(&UnaryBoolFn::ALL);
    let c = RegularThread::compose;
    match n {
        1 => (c(register(F, q), &x, &y), c(register(T, q), &y, &x)),
        2 => (c(register(I, q), &x, &y), c(register(C, q), &y, &x)),
        _ => (c(register(T, q), &x, &y), c(register(p, q), &x, &x)),
    }
}

#[derive(Debug, Clone)]
pub struct SoundnessConfig {
    pub interp: Interpretation,
    /// Instances per axiom.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SoundnessConfig {
    fn default() -> Self {
        SoundnessConfig {
            interp: Interpretation::Generic,
            samples: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub lhs: String,
    pub rhs: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CongruenceWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub instances: usize,
    pub failures: usize,
    pub counterexamples: Vec<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub alphabet: &'static str,
    pub seed: u64,
    pub axioms: Vec<AxiomResult>,
}

impl SoundnessReport {
    pub fn instances(&self) -> usize {
        self.axioms.iter().map(|a| a.instances).sum()
    }

    pub fn failures(&self) -> usize {
        self.axioms.iter().map(|a| a.failures).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("soundness (alphabet {}, seed {})\n", self.alphabet, self.seed);
        for a in &self.axioms {
            let status = if a.failures == 0 { "ok" } else { "FAIL" };
            let _ = writeln!(out, "  {:<8} {:>4} instances {:>4} failures  {status}", a.axiom, a.instances, a.failures);
            for c in &a.counterexamples {
                let _ = write!(out, "    {} = {}", c.lhs, c.rhs);
                if let Some(w) = c.witness {
                    let _ = write!(out, "  (l={}, n={}, depth={})", w.l, w.n, w.depth);
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "total: {} instances, {} failures", self.instances(), self.failures());
        out
    }
}

enum Instance {
    Terms(Term, Term),
    Threads(RegularThread, RegularThread),
}

fn alphabet_name(interp: Interpretation) -> &'static str {
    match interp {
        Interpretation::Generic => "generic",
        Interpretation::BoolReg => "br",
    }
}

/// Checks random closed instances of PGA1-PGA30 (and in register mode
/// PGAbr1-PGAbr5 and BTAbr1-BTAbr3) for behavioural congruence.
pub fn soundness_experiment(config: &SoundnessConfig) -> SoundnessReport {
    let basics = basic_instructions(config.interp);
    let sem = config.interp.semantics();
    let mut groups: Vec<(String, Vec<Instance>)> = Vec::new();
    let gen_for = |index: u64| {
        TermGen::new(
            config.seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15),
            basics.clone(),
            6,
        )
    };
    for n in 1..=30u8 {
        let mut g = gen_for(n as u64);
        let instances = (0..config.samples)
            .map(|i| {
                let (l, r) = pga_instance(n, i, &mut g);
                Instance::Terms(l, r)
            })
            .collect();
        groups.push((format!("PGA{n}"), instances));
    }
    if config.interp == Interpretation::BoolReg {
        for n in 1..=5u8 {
            let mut g = gen_for(100 + n as u64);
            let instances = (0..config.samples)
                .map(|i| {
                    let (l, r) = pgabr_instance(n, i, &mut g);
                    Instance::Terms(l, r)
                })
                .collect();
            groups.push((format!("PGAbr{n}"), instances));
        }
        for n in 1..=3u8 {
            let mut g = gen_for(200 + n as u64);
            let instances = (0..config.samples)
                .map(|_| {
                    let (x, y) = btabr_instance(n, &mut g);
                    Instance::Threads(x, y)
                })
                .collect();
            groups.push((format!("BTAbr{n}"), instances));
        }
    }
    let axioms = groups
        .into_iter()
        .map(|(axiom, instances)| {
            let counterexamples: Vec<Counterexample> = instances
                .par_iter()
                .filter_map(|inst| match inst {
                    Instance::Terms(l, r) => bcong_with(l, r, sem).map(|w| Counterexample {
                        lhs: l.to_string(),
                        rhs: r.to_string(),
                        witness: Some(w),
                    }),
                    Instance::Threads(x, y) => (!bisimilar_with(x, y, sem)).then(|| Counterexample {
                        lhs: x.to_string(),
                        rhs: y.to_string(),
                        witness: None,
                    }),
                })
                .collect();
            AxiomResult {
                axiom,
                instances: instances.len(),
                failures: counterexamples.len(),
                counterexamples,
            }
        })
        .collect();
    SoundnessReport {
        alphabet: alphabet_name(config.interp),
        seed: config.seed,
        axioms,
    }
}

/// For every term, the bisimilarity class of its behaviour inside each
/// context `#l;_;!^n` up to fixed bounds. Classes are interned minimal
/// threads, so comparing two terms in a context is an integer comparison.
pub struct ProfileTable {
    bounds: ContextBounds,
    forms: Vec<InstrSeq>,
    behaviour: Vec<u32>,
    contexts: Vec<u32>,
    classes: usize,
}

impl ProfileTable {
    pub fn build(forms: Vec<InstrSeq>, bounds: ContextBounds, sem: &dyn ActionSemantics) -> Self {
        let mut intern: HashMap<RegularThread, u32> = HashMap::new();
        let mut behaviour = Vec::with_capacity(forms.len());
        let cells = (bounds.max_l + 1) * (bounds.max_n + 1);
        let mut contexts = Vec::with_capacity(forms.len() * cells);
        for chunk in forms.chunks(512) {
            let threads: Vec<Vec<RegularThread>> = chunk
                .par_iter()
                .map(|s| {
                    let mut v = Vec::with_capacity(cells + 1);
                    v.push(minimize_with(&extract(s), sem));
                    for l in 0..=bounds.max_l {
                        for n in 0..=bounds.max_n {
                            v.push(minimize_with(&extract(&context_seq(s, l, n)), sem));
                        }
                    }
                    v
                })
                .collect();
            for v in threads {
                let mut ids = v.into_iter().map(|t| {
                    let fresh = intern.len() as u32;
                    *intern.entry(t).or_insert(fresh)
                });
                behaviour.push(ids.next().expect("behaviour"));
                contexts.extend(ids);
            }
        }
        ProfileTable {
            bounds,
            forms,
            behaviour,
            contexts,
            classes: intern.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn form(&self, i: usize) -> &InstrSeq {
        &self.forms[i]
    }

    /// Number of distinct behaviours seen.
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Class of the behaviour of term `i` without context.
    pub fn behaviour(&self, i: usize) -> u32 {
        self.behaviour[i]
    }

    fn cell(&self, i: usize, l: usize, n: usize) -> u32 {
        let width = self.bounds.max_n + 1;
        let cells = (self.bounds.max_l + 1) * width;
        self.contexts[i * cells + l * width + n]
    }

    /// Least separating context of terms `i` and `j` within the bounds the
    /// congruence check uses for this pair.
    pub fn separating_context(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        self.separating_context_within(i, j, ContextBounds::for_pair(&self.forms[i], &self.forms[j]))
    }

    pub fn separating_context_within(&self, i: usize, j: usize, bounds: ContextBounds) -> Option<(usize, usize)> {
        assert!(
            bounds.max_l <= self.bounds.max_l && bounds.max_n <= self.bounds.max_n,
            "pair bounds exceed the table"
        );
        let max_n = if self.forms[i].is_finite() || self.forms[j].is_finite() {
            bounds.max_n
        } else {
            0
        };
        (0..=bounds.max_l)
            .flat_map(|l| (0..=max_n).map(move |n| (l, n)))
            .find(|&(l, n)| self.cell(i, l, n) != self.cell(j, l, n))
    }
}

#[derive(Debug, Clone)]
pub struct CompletenessConfig {
    pub interp: Interpretation,
    pub max_len: usize,
    pub jump_bound: usize,
    pub seed: u64,
    /// Random cross-group pairs when the full cross product is too large.
    pub samples: usize,
    /// Largest `max_len` checked with the full cross product.
    pub full_cross_max_len: usize,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig {
            interp: Interpretation::Generic,
            max_len: 3,
            jump_bound: 4,
            seed: 0,
            samples: 100_000,
            full_cross_max_len: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Same canonical form, yet a context separates the terms.
    Soundness,
    /// Distinct canonical forms, yet no context separates the terms.
    Completeness,
    /// Canonicalization failed.
    Canonicalization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t1: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CongruenceWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletenessReport {
    pub alphabet: &'static str,
    pub max_len: usize,
    pub jump_bound: usize,
    pub seed: u64,
    pub terms: usize,
    pub groups: usize,
    pub within_pairs: u64,
    /// `full` or `sampled`.
    pub cross_mode: &'static str,
    pub cross_pairs: u64,
    pub near_miss_pairs: u64,
    pub violations: Vec<Violation>,
}

impl CompletenessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "completeness (alphabet {}, max-len {}, jump-bound {}, seed {})\n",
            self.alphabet, self.max_len, self.jump_bound, self.seed
        );
        let _ = writeln!(out, "  terms:             {}", self.terms);
        let _ = writeln!(out, "  canonical groups:  {}", self.groups);
        let _ = writeln!(out, "  within-group pairs {}", self.within_pairs);
        let _ = writeln!(out, "  cross-group pairs  {} ({})", self.cross_pairs, self.cross_mode);
        if self.cross_mode == "sampled" {
            let _ = writeln!(out, "  near-miss pairs    {}", self.near_miss_pairs);
        }
        for v in &self.violations {
            let _ = write!(out, "  {:?}: {}", v.kind, v.t1);
            if let Some(t2) = &v.t2 {
                let _ = write!(out, " vs {t2}");
            }
            if let Some(w) = v.witness {
                let _ = write!(out, "  (l={}, n={}, depth={})", w.l, w.n, w.depth);
            }
            if let Some(d) = &v.detail {
                let _ = write!(out, "  {d}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "violations: {}", self.violations.len());
        out
    }
}

/// Enumerates repetition-free terms, groups them by minimized third
/// canonical form and checks that congruence coincides with sharing a
/// group: every pair within a group is congruent, pairs from different
/// groups are not (all pairs up to `full_cross_max_len`, otherwise random
/// pairs plus pairs of groups whose forms differ in one position).
pub fn completeness_experiment(config: &CompletenessConfig) -> Result<CompletenessReport, VerifyError> {
    let basics = basic_instructions(config.interp);
    let terms = enumerate_terms(&basics, config.max_len, config.jump_bound)?;
    let norm = config.interp.normalizer();
    let sem = config.interp.semantics();

    let canon: Vec<Result<InstrSeq, String>> = terms
        .par_iter()
        .map(|t| canonical_form(t, Level::Third, norm).map(|(s, _)| s).map_err(|e| e.to_string()))
        .collect();
    let mut violations = Vec::new();
    let mut key_ids: HashMap<&InstrSeq, usize> = HashMap::new();
    let mut keys: Vec<&InstrSeq> = Vec::new();
    let mut group_of = vec![usize::MAX; terms.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, c) in canon.iter().enumerate() {
        match c {
            Ok(s) => {
                let id = *key_ids.entry(s).or_insert_with(|| {
                    keys.push(s);
                    members.push(Vec::new());
                    keys.len() - 1
                });
                group_of[i] = id;
                members[id].push(i);
            }
            Err(e) => violations.push(Violation {
                kind: ViolationKind::Canonicalization,
                t1: terms[i].to_string(),
                t2: None,
                witness: None,
                detail: Some(e.clone()),
            }),
        }
    }

    let max_l = config.max_len + 2;
    let bounds = ContextBounds {
        max_l,
        max_n: max_l + config.jump_bound + 2,
    };
    let forms: Vec<InstrSeq> = terms.iter().map(first_form).collect();
    let table = ProfileTable::build(forms, bounds, sem);

    let report = |kind, i: usize, j: usize| Violation {
        kind,
        t1: terms[i].to_string(),
        t2: Some(terms[j].to_string()),
        witness: bcong_with(&terms[i], &terms[j], sem),
        detail: None,
    };

    // within groups
    let within: Vec<(usize, usize)> = members
        .iter()
        .flat_map(|m| (0..m.len()).flat_map(move |x| (x + 1..m.len()).map(move |y| (m[x], m[y]))))
        .collect();
    let within_pairs = within.len() as u64;
    violations.extend(
        within
            .par_iter()
            .filter(|&&(i, j)| table.separating_context(i, j).is_some())
            .map(|&(i, j)| report(ViolationKind::Soundness, i, j))
            .collect::<Vec<_>>(),
    );

    let grouped: Vec<usize> = (0..terms.len()).filter(|&i| group_of[i] != usize::MAX).collect();
    let congruent_across = |i: usize, j: usize| group_of[i] != group_of[j] && table.separating_context(i, j).is_none();
    let (cross_mode, cross_pairs, near_miss_pairs);
    if config.max_len <= config.full_cross_max_len {
        cross_mode = "full";
        let found: Vec<(usize, usize)> = grouped
            .par_iter()
            .enumerate()
            .flat_map_iter(|(x, &i)| {
                grouped[x + 1..]
                    .iter()
                    .filter(move |&&j| congruent_across(i, j))
                    .map(move |&j| (i, j))
            })
            .collect();
        let n = grouped.len() as u64;
        cross_pairs = n * n.saturating_sub(1) / 2 - within_pairs;
        near_miss_pairs = 0;
        violations.extend(found.into_iter().map(|(i, j)| report(ViolationKind::Completeness, i, j)));
    } else {
        cross_mode = "sampled";
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut pairs = Vec::with_capacity(config.samples);
        if members.len() > 1 {
            while pairs.len() < config.samples {
                let i = *grouped.choose(&mut rng).expect("terms");
                let j = *grouped.choose(&mut rng).expect("terms");
                if group_of[i] != group_of[j] {
                    pairs.push((i, j));
                }
            }
        }
        cross_pairs = pairs.len() as u64;
        // groups whose canonical forms differ in exactly one position,
        // compared through their first members
        // (prefix length, period length, masked position, masked window)
        type Bucket<'a> = (usize, usize, usize, Vec<Option<&'a Instr>>);
        let mut buckets: HashMap<Bucket, Vec<usize>> = HashMap::new();
        for (id, key) in keys.iter().enumerate() {
            let window: Vec<&Instr> = key.window().collect();
            for p in 0..window.len() {
                let masked = window
                    .iter()
                    .enumerate()
                    .map(|(q, u)| (q != p).then_some(*u))
                    .collect();
                buckets
                    .entry((key.prefix_len(), key.period_len(), p, masked))
                    .or_default()
                    .push(id);
            }
        }
        let mut buckets: Vec<Vec<usize>> = buckets.into_values().filter(|b| b.len() > 1).collect();
        buckets.sort();
        let mut near = Vec::new();
        for b in &buckets {
            for x in 0..b.len() {
                for y in x + 1..b.len() {
                    near.push((members[b[x]][0], members[b[y]][0]));
                }
            }
        }
        near_miss_pairs = near.len() as u64;
        pairs.extend(near);
        let found: Vec<(usize, usize)> = pairs.par_iter().copied().filter(|&(i, j)| congruent_across(i, j)).collect();
        violations.extend(found.into_iter().map(|(i, j)| report(ViolationKind::Completeness, i, j)));
    }

    Ok(CompletenessReport {
        alphabet: alphabet_name(config.interp),
        max_len: config.max_len,
        jump_bound: config.jump_bound,
        seed: config.seed,
        terms: terms.len(),
        groups: members.len(),
        within_pairs,
        cross_mode,
        cross_pairs,
        near_miss_pairs,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::bcong;
    use crate::syntax::{parse, Alphabet};

    fn generic() -> Vec<BasicInstruction> {
        basic_instructions(Interpretation::Generic)
    }

    #[test]
    fn enumeration_counts_and_order() {
        let a = vec![BasicInstruction::symbol("a")];
        let terms = enumerate_terms(&a, 1, 2).unwrap();
        let shown: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
        assert_eq!(shown, ["a", "+a", "-a", "#0", "#1", "#2", "!"]);
        assert_eq!(enumerate_terms(&generic(), 2, 3).unwrap().len(), 11 + 11 * 11);
        assert_eq!(enumerate_terms(&a, 0, 2), Err(VerifyError::ZeroLength));
        let two = enumerate_terms(&a, 2, 0).unwrap();
        assert_eq!(two[5].to_string(), "a;a");
        assert_eq!(two[6].to_string(), "a;+a");
    }

    #[test]
    fn soundness_examples() {
        let t = |s: &str| parse(s, &Alphabet::any()).unwrap();
        assert!(bcong(&t("+b;!;!"), &t("b;!;!")));
        assert!(bcong(&t("(a)*;b"), &t("(a)*")));
        assert!(bcong(&t("(a;+a)*"), &t("(a)*")));
    }

    #[test]
    fn axiom_instances_have_the_expected_shape() {
        let mut g = TermGen::new(1, generic(), 6);
        for i in 0..16 {
            let (l, r) = pga_instance(30, i, &mut g);
            assert!(!l.is_repetition_free() && !r.is_repetition_free());
            let (l, r) = pga_instance(22, i, &mut g);
            assert_eq!(l.len().unwrap(), r.len().unwrap());
        }
    }

    #[test]
    fn small_soundness_run_passes_and_is_deterministic() {
        let config = SoundnessConfig {
            samples: 12,
            seed: 7,
            ..Default::default()
        };
        let a = soundness_experiment(&config);
        assert_eq!(a.failures(), 0, "{}", a.to_text());
        assert_eq!(a.axioms.len(), 30);
        assert_eq!(a.to_text(), soundness_experiment(&config).to_text());
    }

    #[test]
    fn register_soundness_covers_register_axioms() {
        let config = SoundnessConfig {
            interp: Interpretation::BoolReg,
            samples: 8,
            seed: 3,
        };
        let r = soundness_experiment(&config);
        assert_eq!(r.axioms.len(), 38);
        assert_eq!(r.failures(), 0, "{}", r.to_text());
    }

    #[test]
    fn singletons_are_pairwise_distinct() {
        let config = CompletenessConfig {
            max_len: 1,
            jump_bound: 2,
            ..Default::default()
        };
        let a = vec![BasicInstruction::symbol("a")];
        let terms = enumerate_terms(&a, 1, 2).unwrap();
        let forms: Vec<InstrSeq> = terms.iter().map(first_form).collect();
        let table = ProfileTable::build(forms, ContextBounds { max_l: 3, max_n: 7 }, &crate::thread::Syntactic);
        for i in 0..7 {
            for j in i + 1..7 {
                assert!(table.separating_context(i, j).is_some());
            }
        }
        let report = completeness_experiment(&config).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn profile_verdicts_match_direct_congruence() {
        let terms = enumerate_terms(&generic(), 2, 3).unwrap();
        let forms: Vec<InstrSeq> = terms.iter().map(first_form).collect();
        let table = ProfileTable::build(forms, ContextBounds { max_l: 4, max_n: 9 }, &crate::thread::Syntactic);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..400 {
            let i = rng.gen_range(0..terms.len());
            let j = rng.gen_range(0..terms.len());
            let direct = crate::equivalence::bcong_witness(&terms[i], &terms[j]).map(|w| (w.l, w.n));
            assert_eq!(table.separating_context(i, j), direct, "{} vs {}", terms[i], terms[j]);
        }
    }

    #[test]
    fn sampled_protocol_runs() {
        let config = CompletenessConfig {
            max_len: 2,
            jump_bound: 2,
            samples: 500,
            full_cross_max_len: 1,
            ..Default::default()
        };
        let report = completeness_experiment(&config).unwrap();
        assert_eq!(report.cross_mode, "sampled");
        assert_eq!(report.cross_pairs, 500);
        assert!(report.near_miss_pairs > 0);
        assert!(report.passed(), "{}", report.to_text());
    }
}
