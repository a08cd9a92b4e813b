//! Eventually periodic instruction sequences.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::syntax::{Instr, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("an instruction sequence cannot be empty")]
    Empty,
    #[error("the repeating part of a sequence cannot be empty")]
    EmptyPeriod,
}

/// A finite sequence `prefix`, or the infinite sequence
/// `prefix period period period ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstrSeq {
    prefix: Vec<Instr>,
    // empty for finite sequences
    period: Vec<Instr>,
}

impl InstrSeq {
    pub fn finite(prefix: Vec<Instr>) -> Result<Self, SeqError> {
        if prefix.is_empty() {
            return Err(SeqError::Empty);
        }
        Ok(InstrSeq {
            prefix,
            period: Vec::new(),
        })
    }

    pub fn periodic(prefix: Vec<Instr>, period: Vec<Instr>) -> Result<Self, SeqError> {
        if period.is_empty() {
            return Err(SeqError::EmptyPeriod);
        }
        Ok(InstrSeq { prefix, period })
    }

    pub(crate) fn from_parts(prefix: Vec<Instr>, period: Vec<Instr>) -> Self {
        debug_assert!(!prefix.is_empty() || !period.is_empty());
        InstrSeq { prefix, period }
    }

    pub(crate) fn into_parts(self) -> (Vec<Instr>, Vec<Instr>) {
        (self.prefix, self.period)
    }

    pub fn prefix(&self) -> &[Instr] {
        &self.prefix
    }

    pub fn period(&self) -> Option<&[Instr]> {
        if self.period.is_empty() {
            None
        } else {
            Some(&self.period)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.period.is_empty()
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// `|prefix| + |period|`: the number of distinct positions.
    pub fn window_len(&self) -> usize {
        self.prefix.len() + self.period.len()
    }

    /// Maps an absolute position onto `0..window_len()`, or `None` when it
    /// lies past the end of a finite sequence.
    pub fn normalize_pos(&self, pos: usize) -> Option<usize> {
        let m = self.prefix.len();
        if pos < m {
            Some(pos)
        } else if self.period.is_empty() {
            None
        } else {
            Some(m + (pos - m) % self.period.len())
        }
    }

    /// Instruction at an absolute position of the (possibly infinite) sequence.
    pub fn get(&self, pos: usize) -> Option<&Instr> {
        let p = self.normalize_pos(pos)?;
        let m = self.prefix.len();
        Some(if p < m {
            &self.prefix[p]
        } else {
            &self.period[p - m]
        })
    }

    /// Instructions of the distinct positions, prefix first.
    pub fn window(&self) -> impl Iterator<Item = &Instr> {
        self.prefix.iter().chain(self.period.iter())
    }

    pub fn max_jump(&self) -> usize {
        self.window().filter_map(Instr::jump_len).max().unwrap_or(0)
    }

    pub(crate) fn set(&mut self, pos: usize, u: Instr) {
        let p = self.normalize_pos(pos).expect("position inside the sequence");
        let m = self.prefix.len();
        if p < m {
            self.prefix[p] = u;
        } else {
            self.period[p - m] = u;
        }
    }

    /// Moves the first instruction of the repeating part to the end of the
    /// prefix, rotating the repeating part. Denotes the same sequence.
    pub fn unfold(&mut self) {
        assert!(!self.period.is_empty(), "cannot unfold a finite sequence");
        let first = self.period[0].clone();
        self.period.rotate_left(1);
        self.prefix.push(first);
    }

    /// The term `u1;...;um;(v1;...;vk)*`.
    pub fn to_term(&self) -> Term {
        let tail = Term::seq(self.period.iter().cloned()).map(Term::repeat);
        match (Term::seq(self.prefix.iter().cloned()), tail) {
            (Some(p), None) => p,
            (None, Some(r)) => r,
            (Some(_), Some(r)) => self
                .prefix
                .iter()
                .rev()
                .fold(r, |acc, u| Term::concat(Term::instr(u.clone()), acc)),
            (None, None) => unreachable!("instruction sequences are nonempty"),
        }
    }
}

impl fmt::Display for InstrSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl Serialize for InstrSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("InstrSeq", 3)?;
        s.serialize_field("text", &self.to_string())?;
        s.serialize_field("prefix", &self.prefix)?;
        s.serialize_field("period", &self.period())?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_wrap_into_the_period() {
        let s = InstrSeq::periodic(vec![Instr::Halt], vec![Instr::plain("a"), Instr::Jump(1)]).unwrap();
        assert_eq!(s.get(0), Some(&Instr::Halt));
        assert_eq!(s.get(1), Some(&Instr::plain("a")));
        assert_eq!(s.get(4), Some(&Instr::Jump(1)));
        assert_eq!(s.normalize_pos(5), Some(1));
        let f = InstrSeq::finite(vec![Instr::Halt]).unwrap();
        assert_eq!(f.get(1), None);
    }

    #[test]
    fn rejects_empty_parts() {
        assert_eq!(InstrSeq::finite(vec![]), Err(SeqError::Empty));
        assert_eq!(InstrSeq::periodic(vec![Instr::Halt], vec![]), Err(SeqError::EmptyPeriod));
    }

    #[test]
    fn renders_as_term() {
        let s = InstrSeq::periodic(vec![Instr::Jump(2)], vec![Instr::plain("a"), Instr::plain("b")]).unwrap();
        assert_eq!(s.to_string(), "#2;(a;b)*");
        let p = InstrSeq::periodic(vec![], vec![Instr::plain("a")]).unwrap();
        assert_eq!(p.to_string(), "(a)*");
    }

    #[test]
    fn unfold_keeps_the_denoted_sequence() {
        let mut s = InstrSeq::periodic(vec![], vec![Instr::plain("a"), Instr::plain("b")]).unwrap();
        let before: Vec<_> = (0..8).map(|i| s.get(i).cloned()).collect();
        s.unfold();
        assert_eq!(s.prefix_len(), 1);
        let after: Vec<_> = (0..8).map(|i| s.get(i).cloned()).collect();
        assert_eq!(before, after);
    }
}
