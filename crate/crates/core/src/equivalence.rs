//! Decision procedures for the equivalences on terms: instruction sequence
//! congruence, structural congruence, behavioural equivalence and
//! behavioural congruence, plus derivability with rewrite traces.

use serde::Serialize;
use thiserror::Error;

use crate::canon::{
    canonical_form, minimize_periodic, to_first_canonical, to_second_canonical, CanonError, InstrNormalizer, Level,
    RewriteTrace,
};
use crate::extract::extract;
use crate::register::{RegisterActions, RegisterNormalizer};
use crate::seq::InstrSeq;
use crate::syntax::{Instr, Term};
use crate::thread::{bisimilar_with, distinguishing_depth, ActionSemantics, Syntactic};

/// Which basic instructions are in play and how they are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpretation {
    /// Uninterpreted symbols.
    #[default]
    Generic,
    /// Boolean register instructions with their instruction and thread
    /// level axioms.
    BoolReg,
}

impl Interpretation {
    pub fn semantics(self) -> &'static dyn ActionSemantics {
        match self {
            Interpretation::Generic => &Syntactic,
            Interpretation::BoolReg => &RegisterActions,
        }
    }

    pub fn normalizer(self) -> Option<&'static dyn InstrNormalizer> {
        match self {
            Interpretation::Generic => None,
            Interpretation::BoolReg => Some(&RegisterNormalizer),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Isc,
    Sc,
    Beq,
    Bcong,
    Derive,
}

/// A context `#l;_;!^n` and the projection depth at which the two terms
/// differ inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CongruenceWitness {
    pub l: usize,
    pub n: usize,
    pub depth: usize,
}

/// Contexts `#l;_;!^n` with `l <= max_l` and `n <= max_n` are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContextBounds {
    pub max_l: usize,
    pub max_n: usize,
}

impl ContextBounds {
    /// `L = max(len) + 2` and `N = L + J + 2` with `J` the longest jump;
    /// the halt suffix is unreachable when both sequences repeat, so then
    /// `N = 0`.
    pub fn for_pair(s1: &InstrSeq, s2: &InstrSeq) -> Self {
        let max_l = s1.window_len().max(s2.window_len()) + 2;
        let max_n = if s1.is_finite() || s2.is_finite() {
            max_l + s1.max_jump().max(s2.max_jump()) + 2
        } else {
            0
        };
        ContextBounds { max_l, max_n }
    }

    pub fn doubled(self) -> Self {
        ContextBounds {
            max_l: 2 * self.max_l,
            max_n: 2 * self.max_n,
        }
    }
}

/// The minimized first canonical form of `t`.
pub fn first_form(t: &Term) -> InstrSeq {
    minimize_periodic(&to_first_canonical(t).0)
}

/// The second canonical form of `t`.
pub fn second_form(t: &Term) -> InstrSeq {
    to_second_canonical(&first_form(t)).0
}

/// Equality derivable from PGA1-PGA4.
pub fn isc_equal(t1: &Term, t2: &Term) -> bool {
    first_form(t1) == first_form(t2)
}

/// Equality derivable from PGA1-PGA8.
pub fn sc_equal(t1: &Term, t2: &Term) -> bool {
    second_form(t1) == second_form(t2)
}

/// The two terms extract to bisimilar threads.
pub fn beq(t1: &Term, t2: &Term) -> bool {
    beq_with(t1, t2, &Syntactic)
}

pub fn beq_with(t1: &Term, t2: &Term, sem: &dyn ActionSemantics) -> bool {
    bisimilar_with(&extract(&first_form(t1)), &extract(&first_form(t2)), sem)
}

/// The sequence `#l;s;!^n`. The halt suffix is dropped for infinite `s`.
pub fn context_seq(s: &InstrSeq, l: usize, n: usize) -> InstrSeq {
    let mut prefix = Vec::with_capacity(1 + s.prefix_len() + n);
    prefix.push(Instr::Jump(l));
    prefix.extend_from_slice(s.prefix());
    match s.period() {
        Some(period) => InstrSeq::from_parts(prefix, period.to_vec()),
        None => {
            prefix.extend(std::iter::repeat_n(Instr::Halt, n));
            InstrSeq::from_parts(prefix, Vec::new())
        }
    }
}

/// Behavioural congruence: behavioural equivalence inside every context
/// `#l;_;!^n` up to the bounds of [`ContextBounds::for_pair`].
pub fn bcong(t1: &Term, t2: &Term) -> bool {
    bcong_witness(t1, t2).is_none()
}

/// The least distinguishing context in `(l, n)` lexicographic order, or
/// `None` when the terms are congruent.
pub fn bcong_witness(t1: &Term, t2: &Term) -> Option<CongruenceWitness> {
    let (s1, s2) = (first_form(t1), first_form(t2));
    bcong_witness_seq(&s1, &s2, ContextBounds::for_pair(&s1, &s2), &Syntactic)
}

pub fn bcong_witness_seq(
    s1: &InstrSeq,
    s2: &InstrSeq,
    bounds: ContextBounds,
    sem: &dyn ActionSemantics,
) -> Option<CongruenceWitness> {
    let both_repeat = !s1.is_finite() && !s2.is_finite();
    for l in 0..=bounds.max_l {
        let max_n = if both_repeat { 0 } else { bounds.max_n };
        for n in 0..=max_n {
            let x = extract(&context_seq(s1, l, n));
            let y = extract(&context_seq(s2, l, n));
            if let Some(depth) = distinguishing_depth(&x, &y, sem) {
                return Some(CongruenceWitness { l, n, depth });
            }
        }
    }
    None
}

pub fn bcong_with(t1: &Term, t2: &Term, sem: &dyn ActionSemantics) -> Option<CongruenceWitness> {
    let (s1, s2) = (first_form(t1), first_form(t2));
    bcong_witness_seq(&s1, &s2, ContextBounds::for_pair(&s1, &s2), sem)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivabilityVerdict {
    /// Both terms rewrite to the same third canonical form.
    Equal { left: RewriteTrace, right: RewriteTrace },
    NotEqual { witness: CongruenceWitness },
    /// Distinct canonical forms, yet no context separates the terms.
    /// Congruence is then no evidence either way: the axioms do not derive
    /// every congruence (`-a;#4;#2;+a` and `#3;#4;#2;+a` are congruent but
    /// not derivably equal).
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error(transparent)]
    Canon(#[from] CanonError),
}

/// Decides derivable equality by comparing third canonical forms. Equal
/// forms come with the derivations; distinct forms are reported unequal
/// when a context separates the terms (the axioms are sound) and `Unknown`
/// otherwise.
pub fn derivable_equal(t1: &Term, t2: &Term, interp: Interpretation) -> Result<DerivabilityVerdict, EquivError> {
    let norm = interp.normalizer();
    let (c1, left) = canonical_form(t1, Level::Third, norm)?;
    let (c2, right) = canonical_form(t2, Level::Third, norm)?;
    if c1 == c2 {
        return Ok(DerivabilityVerdict::Equal { left, right });
    }
    match bcong_with(t1, t2, interp.semantics()) {
        Some(witness) => Ok(DerivabilityVerdict::NotEqual { witness }),
        None => Ok(DerivabilityVerdict::Unknown),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePair {
    pub left: RewriteTrace,
    pub right: RewriteTrace,
}

/// A verdict as reported to the outside world.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub relation: Relation,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CongruenceWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TracePair>,
}

impl VerdictReport {
    pub fn boolean(relation: Relation, equal: bool) -> Self {
        VerdictReport {
            relation,
            verdict: if equal { "equal" } else { "not-equal" },
            witness: None,
            trace: None,
        }
    }

    pub fn congruence(witness: Option<CongruenceWitness>) -> Self {
        VerdictReport {
            witness,
            ..Self::boolean(Relation::Bcong, witness.is_none())
        }
    }

    pub fn derivability(verdict: DerivabilityVerdict) -> Self {
        match verdict {
            DerivabilityVerdict::Equal { left, right } => VerdictReport {
                trace: Some(TracePair { left, right }),
                ..Self::boolean(Relation::Derive, true)
            },
            DerivabilityVerdict::NotEqual { witness } => VerdictReport {
                witness: Some(witness),
                ..Self::boolean(Relation::Derive, false)
            },
            DerivabilityVerdict::Unknown => VerdictReport {
                verdict: "unknown",
                ..Self::boolean(Relation::Derive, false)
            },
        }
    }

    pub fn is_equal(&self) -> bool {
        self.verdict == "equal"
    }

    pub fn is_unknown(&self) -> bool {
        self.verdict == "unknown"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::Axiom;
    use crate::syntax::{parse, Alphabet};
    use crate::thread::bisimilar;

    fn term(text: &str) -> Term {
        parse(text, &Alphabet::any()).unwrap()
    }

    #[test]
    fn isc_examples() {
        assert!(isc_equal(&term("(a;a)*"), &term("(a)*")));
        assert!(isc_equal(&term("(a;#2;+b)*"), &term("a;#2;+b;(a;#2;+b)*")));
        assert!(!isc_equal(&term("+a;!;!"), &term("a;!;!")));
    }

    #[test]
    fn sc_examples() {
        assert!(sc_equal(&term("#1;#1;a"), &term("#2;#1;a")));
        assert!(!sc_equal(&term("+a;!;!"), &term("-a;!;!")));
        assert!(sc_equal(&term("#4;(a;b)*"), &term("#2;(a;b)*")));
    }

    #[test]
    fn beq_examples() {
        assert!(beq(&term("+a;!;!"), &term("-a;!;!")));
        assert!(!beq(&term("a;#1"), &term("a;!")));
        assert!(beq(&term("#0;a"), &term("#0;+b;!")));
    }

    #[test]
    fn bcong_examples() {
        assert!(bcong(&term("+a;!;!"), &term("-a;!;!")));
        assert!(bcong(&term("(a)*"), &term("(a;a)*")));
        // behaviourally equal, but a jump over the first instruction tells
        // them apart
        assert!(beq(&term("#1;a"), &term("a")));
        let w = bcong_witness(&term("#1;a"), &term("a")).unwrap();
        assert_eq!((w.l, w.n), (2, 0));
    }

    #[test]
    fn witnesses_distinguish_at_their_depth() {
        let (t1, t2) = (term("#1;a"), term("a"));
        let (s1, s2) = (first_form(&t1), first_form(&t2));
        for (l, n) in [(2, 0), (2, 1)] {
            let x = extract(&context_seq(&s1, l, n));
            let y = extract(&context_seq(&s2, l, n));
            assert!(!bisimilar(&x, &y));
            let d = distinguishing_depth(&x, &y, &Syntactic).unwrap();
            assert_ne!(x.project(d), y.project(d));
            assert_eq!(x.project(d - 1), y.project(d - 1));
        }
    }

    #[test]
    fn contexts_drop_halts_after_repetition() {
        let s = first_form(&term("a;(b)*"));
        assert_eq!(context_seq(&s, 2, 3).to_string(), "#2;a;(b)*");
        let s = first_form(&term("a"));
        assert_eq!(context_seq(&s, 0, 2).to_string(), "#0;a;!;!");
    }

    #[test]
    fn derivability_verdicts() {
        let v = derivable_equal(&term("+a;!;!"), &term("-a;!;!"), Interpretation::Generic).unwrap();
        let DerivabilityVerdict::Equal { left, right } = v else { panic!() };
        assert!(left.uses(Axiom::Pga(15)));
        assert!(right.uses(Axiom::Pga(16)));

        let v = derivable_equal(&term("a"), &term("a"), Interpretation::Generic).unwrap();
        assert_eq!(
            v,
            DerivabilityVerdict::Equal {
                left: RewriteTrace::new(),
                right: RewriteTrace::new()
            }
        );

        let v = derivable_equal(&term("#1;a"), &term("a"), Interpretation::Generic).unwrap();
        assert!(matches!(v, DerivabilityVerdict::NotEqual { witness } if (witness.l, witness.n) == (2, 0)));

        let v = derivable_equal(&term("(a)*"), &term("(a;a)*"), Interpretation::Generic).unwrap();
        assert!(matches!(v, DerivabilityVerdict::Equal { .. }));
    }

    #[test]
    fn congruent_terms_with_distinct_forms_are_undecided() {
        let (x, y) = (term("-a;#4;#2;+a"), term("#3;#4;#2;+a"));
        assert!(bcong(&x, &y));
        let v = derivable_equal(&x, &y, Interpretation::Generic).unwrap();
        assert_eq!(v, DerivabilityVerdict::Unknown);
    }

    #[test]
    fn verdict_json_shape() {
        let report = VerdictReport::congruence(bcong_witness(&term("#1;a"), &term("a")));
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["relation"], "bcong");
        assert_eq!(json["verdict"], "not-equal");
        assert_eq!(json["witness"]["l"], 2);
        assert!(json.get("trace").is_none());
    }

    #[test]
    fn register_relations() {
        let alphabet = Alphabet::any_bool_reg();
        let t = |s: &str| parse(s, &alphabet).unwrap();
        let sem = Interpretation::BoolReg.semantics();
        assert!(beq_with(&t("+f.F/I;!;#0"), &t("-f.T/I;!;#0"), sem));
        assert!(beq_with(&t("f.T/T;!"), &t("f.F/T;!"), sem));
        assert!(bcong_with(&t("f.T/T;!"), &t("f.F/T;!"), sem).is_none());
        let v = derivable_equal(&t("+f.F/I;!;#0"), &t("-f.T/I;!;#0"), Interpretation::BoolReg).unwrap();
        assert!(matches!(v, DerivabilityVerdict::Equal { .. }));
    }
}
