//! Canonical forms of instruction sequences.
//!
//! * first canonical form: a flat prefix with an optional repeating part;
//! * second canonical form: additionally no chained jumps and jumps into the
//!   repeating part as short as possible;
//! * third canonical form: additionally no redex of the control-flow
//!   simplification rules PGA9-PGA30.
//!
//! Every transformation is recorded as a [`RewriteTrace`] of axiom
//! applications. Steps on instruction sequences can be replayed.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::seq::InstrSeq;
use crate::syntax::{BasicInstruction, Instr, Term};

/// Justification of one rewrite step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    /// PGA1-PGA30.
    Pga(u8),
    /// PGAbr1-PGAbr5, instruction-level Boolean register axioms.
    PgaBr(u8),
    /// `X* = X;X*`, moving the first repeated instruction into the prefix.
    Unfold,
    /// Replacement by the shortest prefix and period denoting the same
    /// sequence.
    Minimize,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Pga(n) => write!(f, "PGA{n}"),
            Axiom::PgaBr(n) => write!(f, "PGAbr{n}"),
            Axiom::Unfold => f.write_str("unfold"),
            Axiom::Minimize => f.write_str("minimize"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown axiom `{0}`")]
pub struct UnknownAxiom(String);

impl FromStr for Axiom {
    type Err = UnknownAxiom;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownAxiom(s.to_string());
        match s {
            "unfold" => Ok(Axiom::Unfold),
            "minimize" => Ok(Axiom::Minimize),
            _ => {
                if let Some(n) = s.strip_prefix("PGAbr") {
                    let n: u8 = n.parse().map_err(|_| bad())?;
                    (1..=5).contains(&n).then_some(Axiom::PgaBr(n)).ok_or_else(bad)
                } else if let Some(n) = s.strip_prefix("PGA") {
                    let n: u8 = n.parse().map_err(|_| bad())?;
                    (1..=30).contains(&n).then_some(Axiom::Pga(n)).ok_or_else(bad)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl Serialize for Axiom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Step {
    pub axiom: Axiom,
    /// Offset into the sequence where the redex starts.
    pub position: usize,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.axiom, self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("line {line}: expected `AXIOM @ position`")]
    Malformed { line: usize },
    #[error("line {line}: {source}")]
    Axiom { line: usize, source: UnknownAxiom },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {index} ({step}) does not apply")]
    NotApplicable { index: usize, step: Step },
    #[error("step {index} ({step}) rewrites a term, not an instruction sequence")]
    TermLevel { index: usize, step: Step },
    #[error("step {index} ({step}) needs an instruction normalizer")]
    NoNormalizer { index: usize, step: Step },
}

/// Ordered axiom applications.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RewriteTrace {
    steps: Vec<Step>,
}

impl RewriteTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, axiom: Axiom, position: usize) {
        self.steps.push(Step { axiom, position });
    }

    pub fn extend(&mut self, other: RewriteTrace) {
        self.steps.extend(other.steps);
    }

    /// Whether the trace cites `axiom` at least once.
    pub fn uses(&self, axiom: Axiom) -> bool {
        self.steps.iter().any(|s| s.axiom == axiom)
    }

    /// One `AXIOM @ position` line per step.
    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, TraceParseError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (axiom, pos) = line
                .split_once('@')
                .ok_or(TraceParseError::Malformed { line: i + 1 })?;
            let axiom = axiom
                .trim()
                .parse()
                .map_err(|source| TraceParseError::Axiom { line: i + 1, source })?;
            let position = pos
                .trim()
                .parse()
                .map_err(|_| TraceParseError::Malformed { line: i + 1 })?;
            steps.push(Step { axiom, position });
        }
        Ok(RewriteTrace { steps })
    }

    /// Applies the steps one by one to `input`.
    pub fn replay(&self, input: &InstrSeq, normalizer: Option<&dyn InstrNormalizer>) -> Result<InstrSeq, ReplayError> {
        let mut seq = input.clone();
        for (index, &step) in self.steps.iter().enumerate() {
            seq = apply_step(&seq, step, normalizer).map_err(|kind| match kind {
                StepFailure::NotApplicable => ReplayError::NotApplicable { index, step },
                StepFailure::TermLevel => ReplayError::TermLevel { index, step },
                StepFailure::NoNormalizer => ReplayError::NoNormalizer { index, step },
            })?;
        }
        Ok(seq)
    }
}

impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Alphabet-specific rewriting of single instructions.
pub trait InstrNormalizer: Sync {
    /// One axiom application moving `u` toward its canonical representative,
    /// or `None` when `u` is canonical.
    fn step(&self, u: &Instr) -> Option<(Axiom, Instr)>;

    fn normalize(&self, u: &Instr) -> Instr {
        let mut u = u.clone();
        while let Some((_, next)) = self.step(&u) {
            u = next;
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("rewrite budget of {budget} steps exceeded")]
    BudgetExceeded { budget: usize },
    #[error("rewriting revisited {seq} after {steps} steps")]
    Cycle { seq: String, steps: usize },
}

/// Canonicalization level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    First,
    Second,
    Third,
}

// ---------------------------------------------------------------------------
// first canonical form

/// Flattens `t` into a prefix and optional repeating part.
pub fn to_first_canonical(t: &Term) -> (InstrSeq, RewriteTrace) {
    let mut trace = RewriteTrace::new();
    let (prefix, period) = flatten(t, 0, &mut trace);
    (InstrSeq::from_parts(prefix, period), trace)
}

fn flatten(t: &Term, base: usize, trace: &mut RewriteTrace) -> (Vec<Instr>, Vec<Instr>) {
    match t {
        Term::Instr(u) => (vec![u.clone()], Vec::new()),
        Term::Concat(l, r) => {
            if matches!(**l, Term::Concat(..)) {
                trace.push(Axiom::Pga(1), base);
            }
            let (mut prefix, period) = flatten(l, base, trace);
            if !period.is_empty() {
                trace.push(Axiom::Pga(3), base + prefix.len());
                return (prefix, period);
            }
            let (rest, period) = flatten(r, base + prefix.len(), trace);
            prefix.extend(rest);
            (prefix, period)
        }
        Term::Repeat(body) => {
            let (prefix, period) = flatten(body, base, trace);
            if period.is_empty() {
                (Vec::new(), prefix)
            } else {
                // X* with X infinite: X* = X;X* = X
                trace.push(Axiom::Unfold, base);
                trace.push(Axiom::Pga(3), base + prefix.len());
                (prefix, period)
            }
        }
    }
}

/// Shortest prefix and period denoting the same sequence. Finite sequences
/// are returned unchanged.
pub fn minimize_periodic(s: &InstrSeq) -> InstrSeq {
    if s.is_finite() {
        return s.clone();
    }
    let (mut prefix, period) = s.clone().into_parts();
    let k = period.len();
    let d = (1..=k)
        .find(|&d| k % d == 0 && (d..k).all(|i| period[i] == period[i % d]))
        .expect("k divides k");
    let mut period = period[..d].to_vec();
    while prefix.last().is_some_and(|u| *u == period[d - 1]) {
        prefix.pop();
        period.rotate_right(1);
    }
    InstrSeq::from_parts(prefix, period)
}

// ---------------------------------------------------------------------------
// second canonical form

/// New length of the jump at `pos` if the jump axiom `n` (5-8) applies there.
fn jump_rewrite(seq: &InstrSeq, n: u8, pos: usize) -> Option<usize> {
    if pos >= seq.window_len() {
        return None;
    }
    let l = seq.get(pos)?.jump_len()?;
    let m = seq.prefix_len();
    let k = seq.period_len();
    match n {
        5 => (l > 0 && matches!(seq.get(pos + l), Some(Instr::Jump(0)))).then_some(0),
        6 => {
            if l == 0 || seq.normalize_pos(pos + l) == Some(pos) {
                return None;
            }
            match seq.get(pos + l) {
                Some(Instr::Jump(l2)) if *l2 > 0 => Some(l + l2),
                _ => None,
            }
        }
        7 => (k > 0 && pos >= m && l >= k).then(|| l - k),
        8 => (k > 0 && pos < m && l > k + m - (pos + 1)).then(|| l - k),
        _ => None,
    }
}

/// Whether the jump chain starting at `pos` returns to `pos`.
fn on_jump_cycle(seq: &InstrSeq, pos: usize) -> bool {
    let mut seen = vec![false; seq.window_len()];
    let mut p = pos;
    loop {
        match seq.get(p) {
            Some(Instr::Jump(l)) if *l > 0 => {
                let Some(next) = seq.normalize_pos(p + l) else {
                    return false;
                };
                if next == pos {
                    return true;
                }
                if seen[next] {
                    return false;
                }
                seen[next] = true;
                p = next;
            }
            _ => return false,
        }
    }
}

fn second_canonical_redex(seq: &InstrSeq) -> Option<Step> {
    let n = seq.window_len();
    let find = |axioms: &[u8], filter: &dyn Fn(usize) -> bool| {
        (0..n).filter(|&p| filter(p)).find_map(|p| {
            axioms
                .iter()
                .find(|&&a| jump_rewrite(seq, a, p).is_some())
                .map(|&a| Step {
                    axiom: Axiom::Pga(a),
                    position: p,
                })
        })
    };
    find(&[7, 8], &|_| true)
        // resolve jump cycles from inside first, so chains entering a cycle
        // cannot chase it forever
        .or_else(|| find(&[5, 6], &|p| !seq.is_finite() && on_jump_cycle(seq, p)))
        .or_else(|| find(&[5, 6], &|_| true))
}

fn normalize_second(seq: &mut InstrSeq, trace: &mut RewriteTrace) {
    let cap = 1000 + 100 * seq.window_len().pow(2);
    let mut steps = 0;
    loop {
        if let Some(step) = second_canonical_redex(seq) {
            let Axiom::Pga(n) = step.axiom else { unreachable!() };
            let l = jump_rewrite(seq, n, step.position).expect("redex applies");
            seq.set(step.position, Instr::Jump(l));
            trace.steps.push(step);
            steps += 1;
            assert!(steps <= cap, "jump normalization did not terminate on {seq}");
            continue;
        }
        let min = minimize_periodic(seq);
        if min != *seq {
            trace.push(Axiom::Minimize, 0);
            *seq = min;
            continue;
        }
        break;
    }
}

/// Composes chained jumps and shortens jumps into the repeating part.
pub fn to_second_canonical(s: &InstrSeq) -> (InstrSeq, RewriteTrace) {
    let mut trace = RewriteTrace::new();
    let mut seq = s.clone();
    normalize_second(&mut seq, &mut trace);
    (seq, trace)
}

/// Whether some jump lands directly on another jump.
pub fn has_chained_jumps(seq: &InstrSeq) -> bool {
    (0..seq.window_len()).any(|p| match seq.get(p) {
        Some(Instr::Jump(l)) if *l > 0 => seq.get(p + l).is_some_and(Instr::is_jump),
        _ => false,
    })
}

/// For sequences with a repeating part: every prefix jump at 1-based
/// position `i` has length at most `k + m - i`, every jump in the repeating
/// part has length at most `k - 1`. Always true for finite sequences.
pub fn has_shortest_jumps(seq: &InstrSeq) -> bool {
    let m = seq.prefix_len();
    let k = seq.period_len();
    if k == 0 {
        return true;
    }
    seq.prefix()
        .iter()
        .enumerate()
        .all(|(i, u)| u.jump_len().is_none_or(|l| l <= k + m - (i + 1)))
        && seq.period().unwrap_or(&[]).iter().all(|u| u.jump_len().is_none_or(|l| l < k))
}

// ---------------------------------------------------------------------------
// third canonical form

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Site {
    /// A finite window of consecutive instructions.
    Window,
    /// An instruction followed by the whole repeating part (PGA17, 18, 26).
    Tail,
    /// The whole repeating part (PGA27-30).
    Period,
}

fn site(n: u8) -> Site {
    match n {
        17 | 18 | 26 => Site::Tail,
        27..=30 => Site::Period,
        _ => Site::Window,
    }
}

/// Rule classes in the order they are tried.
const PRIORITY: &[&[u8]] = &[
    &[30],
    &[22, 23, 24],
    &[25, 26, 27, 28, 29],
    &[9, 10, 11, 12, 13, 14, 15, 16, 17, 18],
    &[19, 20, 21],
];

fn test_of(u: Option<&Instr>, positive: bool) -> Option<&BasicInstruction> {
    match (u, positive) {
        (Some(Instr::PosTest(a)), true) | (Some(Instr::NegTest(a)), false) => Some(a),
        _ => None,
    }
}

fn plain_of(u: Option<&Instr>) -> Option<&BasicInstruction> {
    match u {
        Some(Instr::Plain(a)) => Some(a),
        _ => None,
    }
}

/// Where control ends up when it arrives at an absolute position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Landing {
    At(usize),
    /// Past the end of a finite sequence, at this absolute position.
    Exit(usize),
    Dead,
}

fn land(seq: &InstrSeq, pos: usize) -> Landing {
    // positions starting equal suffixes are identified, so that unfolding
    // does not change what a pattern matches
    let k = seq.period_len();
    let mut m = seq.prefix_len();
    while k > 0 && m > 0 && seq.get(m - 1) == seq.get(m - 1 + k) {
        m -= 1;
    }
    let suffix = |p: usize| if k > 0 && p >= m { m + (p - m) % k } else { p };
    let mut pos = pos;
    for _ in 0..=seq.window_len() {
        let Some(p) = seq.normalize_pos(pos) else {
            return Landing::Exit(pos);
        };
        match seq.get(p) {
            Some(Instr::Jump(0)) => return Landing::Dead,
            Some(Instr::Jump(l)) => pos = p + l,
            _ => return Landing::At(suffix(p)),
        }
    }
    Landing::Dead
}

/// Whether the instruction at `q` is a jump that behaves as `#x` would.
/// Chained jumps are composed in second canonical form, so rule patterns
/// are matched up to that composition; undoing it is a derivation by
/// PGA5-PGA8.
fn jumps_as(seq: &InstrSeq, q: usize, x: usize) -> bool {
    match seq.get(q) {
        Some(Instr::Jump(_)) if x == 0 => land(seq, q) == Landing::Dead,
        Some(Instr::Jump(_)) => land(seq, q) == land(seq, q + x),
        _ => false,
    }
}

/// Like [`jumps_as`], but a halt also matches a jump onto a halt (PGA25
/// read backwards). Only for pattern positions the rule leaves unchanged.
fn acts_as(seq: &InstrSeq, q: usize, x: usize) -> bool {
    let halts = |p: usize| seq.get(p) == Some(&Instr::Halt);
    jumps_as(seq, q, x)
        || (x > 0 && halts(q) && matches!(land(seq, q + x), Landing::At(p) if halts(p)))
}

/// Upper bound for the jump parameters tried when matching a pattern.
fn search_bound(seq: &InstrSeq) -> usize {
    2 * seq.window_len() + seq.max_jump() + 2
}

/// Matches a window rule with its left-hand side starting at `p`; returns
/// the window width and the replacements as offsets from `p`.
fn match_window(seq: &InstrSeq, n: u8, p: usize) -> Option<(usize, Vec<(usize, Instr)>)> {
    let g = |i: usize| seq.get(p + i);
    let jumps = |i: usize, x: usize| jumps_as(seq, p + i, x);
    let acts = |i: usize, x: usize| acts_as(seq, p + i, x);
    let bound = search_bound(seq);
    match n {
        // +a;#0;#0 = a;#0;#0 and -a;#0;#0 = a;#0;#0
        9 | 10 => {
            let a = test_of(g(0), n == 9)?;
            (jumps(1, 0) && jumps(2, 0)).then(|| (3, vec![(0, Instr::Plain(a.clone()))]))
        }
        // +a;#1 = a;#1
        11 | 12 => {
            let a = test_of(g(0), n == 11)?;
            jumps(1, 1).then(|| (2, vec![(0, Instr::Plain(a.clone()))]))
        }
        // +a;#l+2;#l+1 = a;#l+2;#l+1
        13 | 14 => {
            let a = test_of(g(0), n == 13)?;
            (0..=bound)
                .any(|l| acts(1, l + 2) && acts(2, l + 1))
                .then(|| (3, vec![(0, Instr::Plain(a.clone()))]))
        }
        // +a;!;! = a;!;!
        15 | 16 => {
            let a = test_of(g(0), n == 15)?;
            (g(1) == Some(&Instr::Halt) && g(2) == Some(&Instr::Halt)).then(|| (3, vec![(0, Instr::Plain(a.clone()))]))
        }
        // #k+3;#k+3;#k+3;u1..uk;+a = +a;#k+3;#k+3;u1..uk;+a
        19 | 20 => (0..=bound).find_map(|k| {
            let last = g(k + 3)?;
            test_of(Some(last), n == 19)?;
            (jumps(0, k + 3) && acts(1, k + 3) && acts(2, k + 3)).then(|| (k + 4, vec![(0, last.clone())]))
        }),
        // #k+2;#k+2;u1..uk;a = a;#k+2;u1..uk;a
        21 => (0..=bound).find_map(|k| {
            let a = plain_of(g(k + 2))?;
            (jumps(0, k + 2) && acts(1, k + 2)).then(|| (k + 3, vec![(0, Instr::Plain(a.clone()))]))
        }),
        // #k+k'+4;u1..uk;+a;#k'+3;#k'+3;v1..vk';+a = #k+1;...
        22 | 23 => (4..=bound).find_map(|j| {
            let target = test_of(g(j), n == 22)?;
            if !jumps(0, j) {
                return None;
            }
            (0..=j - 4).find_map(|k| {
                let k2 = j - 4 - k;
                let a = test_of(g(k + 1), n == 22)?;
                (a == target && matches!(g(0), Some(Instr::Jump(l)) if *l > k + 1) && acts(k + 2, k2 + 3) && acts(k + 3, k2 + 3))
                    .then(|| (j + 1, vec![(0, Instr::Jump(k + 1))]))
            })
        }),
        // #k+k'+3;u1..uk;a;#k'+2;v1..vk';a = #k+1;...
        24 => (3..=bound).find_map(|j| {
            let target = plain_of(g(j))?;
            if !jumps(0, j) {
                return None;
            }
            (0..=j - 3).find_map(|k| {
                let k2 = j - 3 - k;
                let a = plain_of(g(k + 1))?;
                (a == target && matches!(g(0), Some(Instr::Jump(l)) if *l > k + 1) && acts(k + 2, k2 + 2)).then(|| (j + 1, vec![(0, Instr::Jump(k + 1))]))
            })
        }),
        // #k+1;u1..uk;! = !;u1..uk;!
        25 => (1..=bound).find_map(|j| (g(j) == Some(&Instr::Halt) && jumps(0, j)).then(|| (j + 1, vec![(0, Instr::Halt)]))),
        _ => None,
    }
}

/// Matches a tail rule at the last prefix position.
fn match_tail(seq: &InstrSeq, n: u8) -> Option<Instr> {
    let period = seq.period()?;
    let m = seq.prefix_len();
    let last = seq.prefix().last()?;
    match n {
        // +a;u* = a;u*
        17 | 18 => {
            let a = test_of(Some(last), n == 17)?;
            (period.len() == 1).then(|| Instr::Plain(a.clone()))
        }
        // #k+1;(u1..uk;u)* = (u;u1..uk)*
        26 => jumps_as(seq, m - 1, period.len()).then(|| period[period.len() - 1].clone()),
        _ => None,
    }
}

/// Matches a rule on the repeating part rotated left by `r`; returns
/// replacements as offsets into the rotated part.
fn match_period(seq: &InstrSeq, n: u8, r: usize) -> Option<Vec<(usize, Instr)>> {
    let period = seq.period()?;
    let len = period.len();
    let m = seq.prefix_len();
    let body = |i: usize| &period[(r + i) % len];
    match n {
        // (#k+2;#k+1;u1..uk;+a)* = (a;#k+1;u1..uk;a)*
        27..=29 => {
            if len < 3 || !jumps_as(seq, m + r, len - 1) || !acts_as(seq, m + r + 1, len - 2) {
                return None;
            }
            let last = body(len - 1);
            let a = match n {
                27 => test_of(Some(last), true)?,
                28 => test_of(Some(last), false)?,
                _ => plain_of(Some(last))?,
            };
            let mut edits = vec![(0, Instr::Plain(a.clone()))];
            if n != 29 {
                edits.push((len - 1, Instr::Plain(a.clone())));
            }
            Some(edits)
        }
        // (u1..uk+1)* = a* when every ui performs a or jumps onto a
        // position that performs a
        30 => {
            if r != 0 {
                return None;
            }
            let a = period.iter().find_map(Instr::basic)?;
            let performs_a = |u: &Instr| u.basic() == Some(a);
            let ok = (0..len).all(|i| match &period[i] {
                Instr::Jump(l) => (1..len).contains(l) && performs_a(&period[(i + l) % len]),
                u => performs_a(u),
            });
            let already = len == 1 && period[0] == Instr::Plain(a.clone());
            (ok && !already).then(|| (0..len).map(|i| (i, Instr::Plain(a.clone()))).collect())
        }
        _ => None,
    }
}

/// Whether rule `n` has a redex starting at absolute position `p`.
fn rule_matches(seq: &InstrSeq, n: u8, p: usize) -> bool {
    let m = seq.prefix_len();
    match site(n) {
        Site::Window => match_window(seq, n, p).is_some(),
        Site::Tail => !seq.is_finite() && m > 0 && p == m - 1 && match_tail(seq, n).is_some(),
        Site::Period => p >= m && match_period(seq, n, p - m).is_some(),
    }
}

/// The first redex of PGA9-PGA30 in priority order, if any.
pub fn find_redex(seq: &InstrSeq) -> Option<Step> {
    PRIORITY.iter().find_map(|class| {
        (0..seq.window_len()).find_map(|p| {
            class.iter().find(|&&n| rule_matches(seq, n, p)).map(|&n| Step {
                axiom: Axiom::Pga(n),
                position: p,
            })
        })
    })
}

/// Applies rule `n` at `p`, which must be directly applicable: a window
/// inside the prefix (or inside the finite sequence), a window starting at
/// the first repeated position and fitting in one period, the last prefix
/// position for tail rules, the first repeated position for period rules.
fn apply_rule(seq: &InstrSeq, n: u8, p: usize) -> Option<InstrSeq> {
    let m = seq.prefix_len();
    let k = seq.period_len();
    let mut out = seq.clone();
    match site(n) {
        Site::Window => {
            let (width, edits) = match_window(seq, n, p)?;
            let inside = p + width <= m || (k == 0 && p + width <= seq.window_len()) || (p == m && width <= k);
            if !inside {
                return None;
            }
            for (off, u) in edits {
                out.set(p + off, u);
            }
        }
        Site::Tail => {
            if m == 0 || p != m - 1 {
                return None;
            }
            let u = match_tail(seq, n)?;
            out.set(p, u);
        }
        Site::Period => {
            if p != m {
                return None;
            }
            for (off, u) in match_period(seq, n, 0)? {
                out.set(m + off, u);
            }
        }
    }
    Some(out)
}

/// Unfolds `seq` until the redex of rule `n` at `p` is directly applicable,
/// then applies it.
fn rewrite_at(seq: &mut InstrSeq, n: u8, p: usize, trace: &mut RewriteTrace) {
    let unfolds = match site(n) {
        Site::Tail => 0,
        Site::Period => p - seq.prefix_len(),
        Site::Window => {
            let (width, _) = match_window(seq, n, p).expect("redex");
            let m = seq.prefix_len();
            let k = seq.period_len();
            if k == 0 || p + width <= m {
                0
            } else if p >= m && width <= k {
                p - m
            } else {
                p + width - m
            }
        }
    };
    for _ in 0..unfolds {
        trace.push(Axiom::Unfold, seq.prefix_len());
        seq.unfold();
    }
    *seq = apply_rule(seq, n, p).expect("redex is directly applicable after unfolding");
    trace.push(Axiom::Pga(n), p);
}

fn normalizer_redex(seq: &InstrSeq, normalizer: &dyn InstrNormalizer) -> Option<(usize, Axiom, Instr)> {
    (0..seq.window_len()).find_map(|p| {
        let (axiom, u) = normalizer.step(seq.get(p)?)?;
        Some((p, axiom, u))
    })
}

/// Third canonical form. With a `normalizer`, instructions are also brought
/// into their alphabet-specific canonical form.
pub fn to_third_canonical(
    s: &InstrSeq,
    normalizer: Option<&dyn InstrNormalizer>,
) -> Result<(InstrSeq, RewriteTrace), CanonError> {
    let mut trace = RewriteTrace::new();
    let mut seq = s.clone();
    normalize_second(&mut seq, &mut trace);
    let budget = 10 * seq.window_len().max(1).pow(2);
    let mut visited = HashSet::new();
    let mut steps = 0;
    loop {
        if !visited.insert(seq.clone()) {
            return Err(CanonError::Cycle {
                seq: seq.to_string(),
                steps,
            });
        }
        let redex = normalizer
            .and_then(|norm| normalizer_redex(&seq, norm))
            .map(|(p, axiom, u)| {
                seq.set(p, u);
                trace.push(axiom, p);
            })
            .or_else(|| {
                find_redex(&seq).map(|step| {
                    let Axiom::Pga(n) = step.axiom else { unreachable!() };
                    rewrite_at(&mut seq, n, step.position, &mut trace);
                })
            });
        if redex.is_none() {
            break;
        }
        steps += 1;
        if steps > budget {
            return Err(CanonError::BudgetExceeded { budget });
        }
        normalize_second(&mut seq, &mut trace);
    }
    Ok((seq, trace))
}

/// Whether `seq` is in third canonical form (with respect to `normalizer`,
/// if given).
pub fn is_third_canonical(seq: &InstrSeq, normalizer: Option<&dyn InstrNormalizer>) -> bool {
    minimize_periodic(seq) == *seq
        && !has_chained_jumps(seq)
        && has_shortest_jumps(seq)
        && find_redex(seq).is_none()
        && normalizer.is_none_or(|n| normalizer_redex(seq, n).is_none())
}

/// The minimized canonical form of `t` at `level`, with the full trace.
pub fn canonical_form(
    t: &Term,
    level: Level,
    normalizer: Option<&dyn InstrNormalizer>,
) -> Result<(InstrSeq, RewriteTrace), CanonError> {
    let (first, mut trace) = to_first_canonical(t);
    let min = minimize_periodic(&first);
    if min != first {
        trace.push(Axiom::Minimize, 0);
    }
    match level {
        Level::First => Ok((min, trace)),
        Level::Second => {
            let (seq, more) = to_second_canonical(&min);
            trace.extend(more);
            Ok((seq, trace))
        }
        Level::Third => {
            let (seq, more) = to_third_canonical(&min, normalizer)?;
            trace.extend(more);
            Ok((seq, trace))
        }
    }
}

enum StepFailure {
    NotApplicable,
    TermLevel,
    NoNormalizer,
}

fn apply_step(seq: &InstrSeq, step: Step, normalizer: Option<&dyn InstrNormalizer>) -> Result<InstrSeq, StepFailure> {
    let p = step.position;
    match step.axiom {
        Axiom::Unfold => {
            if seq.is_finite() {
                return Err(StepFailure::NotApplicable);
            }
            let mut out = seq.clone();
            out.unfold();
            Ok(out)
        }
        Axiom::Minimize => Ok(minimize_periodic(seq)),
        Axiom::Pga(1..=4) => Err(StepFailure::TermLevel),
        Axiom::Pga(n @ 5..=8) => {
            let l = jump_rewrite(seq, n, p).ok_or(StepFailure::NotApplicable)?;
            let mut out = seq.clone();
            out.set(p, Instr::Jump(l));
            Ok(out)
        }
        Axiom::Pga(n) => apply_rule(seq, n, p).ok_or(StepFailure::NotApplicable),
        Axiom::PgaBr(_) => {
            let norm = normalizer.ok_or(StepFailure::NoNormalizer)?;
            let u = seq.get(p).ok_or(StepFailure::NotApplicable)?;
            match norm.step(u) {
                Some((axiom, v)) if axiom == step.axiom && p < seq.window_len() => {
                    let mut out = seq.clone();
                    out.set(p, v);
                    Ok(out)
                }
                _ => Err(StepFailure::NotApplicable),
            }
        }
    }
}
