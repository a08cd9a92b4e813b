//! Terms over primitive instructions: representation, parsing and printing.
//!
//! The concrete syntax is ASCII: `a`, `+a`, `-a`, `#3`, `!`, `;` for
//! concatenation (right-associative) and `(...)*` for repetition. Under the
//! Boolean-register alphabet basic instructions are written `focus.R/E`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::register::{RegisterInstr, UnaryBoolFn};

/// A basic instruction, also used as the action label of threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicInstruction {
    Symbol(Arc<str>),
    Register(RegisterInstr),
}

impl BasicInstruction {
    pub fn symbol(name: &str) -> Self {
        BasicInstruction::Symbol(Arc::from(name))
    }

    pub fn as_register(&self) -> Option<&RegisterInstr> {
        match self {
            BasicInstruction::Register(r) => Some(r),
            BasicInstruction::Symbol(_) => None,
        }
    }
}

impl fmt::Display for BasicInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicInstruction::Symbol(s) => f.write_str(s),
            BasicInstruction::Register(r) => write!(f, "{r}"),
        }
    }
}

/// A primitive instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instr {
    Plain(BasicInstruction),
    PosTest(BasicInstruction),
    NegTest(BasicInstruction),
    /// Forward jump over `l` instructions; `#0` is inaction.
    Jump(usize),
    Halt,
}

impl Instr {
    pub fn plain(name: &str) -> Self {
        Instr::Plain(BasicInstruction::symbol(name))
    }

    pub fn pos(name: &str) -> Self {
        Instr::PosTest(BasicInstruction::symbol(name))
    }

    pub fn neg(name: &str) -> Self {
        Instr::NegTest(BasicInstruction::symbol(name))
    }

    /// The basic instruction performed, if any.
    pub fn basic(&self) -> Option<&BasicInstruction> {
        match self {
            Instr::Plain(a) | Instr::PosTest(a) | Instr::NegTest(a) => Some(a),
            Instr::Jump(_) | Instr::Halt => None,
        }
    }

    pub fn jump_len(&self) -> Option<usize> {
        match self {
            Instr::Jump(l) => Some(*l),
            _ => None,
        }
    }

    pub fn is_jump(&self) -> bool {
        matches!(self, Instr::Jump(_))
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Plain(a) => write!(f, "{a}"),
            Instr::PosTest(a) => write!(f, "+{a}"),
            Instr::NegTest(a) => write!(f, "-{a}"),
            Instr::Jump(l) => write!(f, "#{l}"),
            Instr::Halt => f.write_str("!"),
        }
    }
}

impl Serialize for Instr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A closed term. There is no empty term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Instr(Instr),
    Concat(Box<Term>, Box<Term>),
    Repeat(Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term contains a repetition")]
pub struct ContainsRepetition;

impl Term {
    pub fn instr(u: Instr) -> Self {
        Term::Instr(u)
    }

    pub fn concat(left: Term, right: Term) -> Self {
        Term::Concat(Box::new(left), Box::new(right))
    }

    pub fn repeat(body: Term) -> Self {
        Term::Repeat(Box::new(body))
    }

    /// Right-nested concatenation `u1 ; (u2 ; (... ; un))`.
    ///
    /// Returns `None` for an empty list.
    pub fn seq<I>(instrs: I) -> Option<Term>
    where
        I: IntoIterator<Item = Instr>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut it = instrs.into_iter().rev();
        let last = Term::Instr(it.next()?);
        Some(it.fold(last, |acc, u| Term::concat(Term::Instr(u), acc)))
    }

    /// `self ; self ; ... ; self` with `n >= 1` copies, nested to the right.
    pub fn power(&self, n: usize) -> Term {
        assert!(n >= 1, "power needs a positive exponent");
        let mut acc = self.clone();
        for _ in 1..n {
            acc = Term::concat(self.clone(), acc);
        }
        acc
    }

    pub fn is_repetition_free(&self) -> bool {
        match self {
            Term::Instr(_) => true,
            Term::Concat(l, r) => l.is_repetition_free() && r.is_repetition_free(),
            Term::Repeat(_) => false,
        }
    }

    /// Number of primitive instructions of a repetition-free term. Terms
    /// are never empty.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Result<usize, ContainsRepetition> {
        match self {
            Term::Instr(_) => Ok(1),
            Term::Concat(l, r) => Ok(l.len()? + r.len()?),
            Term::Repeat(_) => Err(ContainsRepetition),
        }
    }

    /// Largest jump literal occurring in the term (0 when there is none).
    pub fn max_jump(&self) -> usize {
        match self {
            Term::Instr(Instr::Jump(l)) => *l,
            Term::Instr(_) => 0,
            Term::Concat(l, r) => l.max_jump().max(r.max_jump()),
            Term::Repeat(b) => b.max_jump(),
        }
    }

    /// Instructions in left-to-right order (repetition bodies once).
    pub fn instructions(&self) -> Vec<&Instr> {
        fn walk<'a>(t: &'a Term, out: &mut Vec<&'a Instr>) {
            match t {
                Term::Instr(u) => out.push(u),
                Term::Concat(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Term::Repeat(b) => walk(b, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Instr(u) => write!(f, "{u}"),
            Term::Concat(l, r) => {
                // concatenation associates to the right, so a left operand
                // that is itself a concatenation needs grouping
                if matches!(**l, Term::Concat(..)) {
                    write!(f, "({l});{r}")
                } else {
                    write!(f, "{l};{r}")
                }
            }
            Term::Repeat(b) => write!(f, "({b})*"),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Which basic instructions a parser accepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alphabet {
    /// Plain identifiers; `None` accepts any identifier.
    Generic(Option<BTreeSet<String>>),
    /// Boolean register instructions `f.p/q`; `None` accepts any focus.
    BoolReg(Option<BTreeSet<String>>),
}

impl Alphabet {
    pub fn generic<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Alphabet::Generic(Some(symbols.into_iter().map(Into::into).collect()))
    }

    pub fn any() -> Self {
        Alphabet::Generic(None)
    }

    pub fn bool_reg<I, S>(foci: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Alphabet::BoolReg(Some(foci.into_iter().map(Into::into).collect()))
    }

    pub fn any_bool_reg() -> Self {
        Alphabet::BoolReg(None)
    }

    pub fn is_bool_reg(&self) -> bool {
        matches!(self, Alphabet::BoolReg(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown basic instruction `{symbol}` at {pos}")]
    UnknownSymbol { pos: usize, symbol: String },
}

/// Parses `text` as a term over `alphabet`.
pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Term, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        alphabet,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(ParseError::Empty);
    }
    let t = p.seq()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected input after term"));
    }
    Ok(t)
}

/// Renders a term in the concrete syntax accepted by [`parse`].
pub fn print(t: &Term) -> String {
    t.to_string()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn seq(&mut self) -> Result<Term, ParseError> {
        let first = self.item()?;
        self.skip_ws();
        if self.peek() == Some(b';') {
            self.pos += 1;
            let rest = self.seq()?;
            Ok(Term::concat(first, rest))
        } else {
            Ok(first)
        }
    }

    fn item(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("expected an instruction")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.seq()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                self.skip_ws();
                if self.peek() == Some(b'*') {
                    self.pos += 1;
                    Ok(Term::repeat(inner))
                } else {
                    Ok(inner)
                }
            }
            Some(_) => self.prim().map(Term::Instr),
        }
    }

    fn prim(&mut self) -> Result<Instr, ParseError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Instr::Halt)
            }
            Some(b'#') => {
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(self.error("expected a jump length"));
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                digits.parse().map(Instr::Jump).map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: "jump length out of range".into(),
                })
            }
            Some(b'+') => {
                self.pos += 1;
                self.basic().map(Instr::PosTest)
            }
            Some(b'-') => {
                self.pos += 1;
                self.basic().map(Instr::NegTest)
            }
            _ => self.basic().map(Instr::Plain),
        }
    }

    fn ident(&mut self) -> Option<&str> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.pos += 1,
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        Some(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier"))
    }

    fn bool_fn(&mut self) -> Result<UnaryBoolFn, ParseError> {
        let f = self
            .peek()
            .and_then(|c| UnaryBoolFn::from_char(c as char))
            .ok_or_else(|| self.error("expected one of F, T, I, C"))?;
        self.pos += 1;
        Ok(f)
    }

    fn basic(&mut self) -> Result<BasicInstruction, ParseError> {
        let start = self.pos;
        let name = match self.ident() {
            Some(name) => name.to_string(),
            None => return Err(self.error("expected a basic instruction")),
        };
        let register = if self.peek() == Some(b'.') {
            self.pos += 1;
            let reply = self.bool_fn()?;
            if self.peek() != Some(b'/') {
                return Err(self.error("expected `/`"));
            }
            self.pos += 1;
            let effect = self.bool_fn()?;
            Some((reply, effect))
        } else {
            None
        };
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .to_string();
        let unknown = || ParseError::UnknownSymbol {
            pos: start,
            symbol: text.clone(),
        };
        match (self.alphabet, register) {
            (Alphabet::Generic(allowed), None) => {
                if allowed.as_ref().is_some_and(|s| !s.contains(&name)) {
                    return Err(unknown());
                }
                Ok(BasicInstruction::symbol(&name))
            }
            (Alphabet::BoolReg(foci), Some((reply, effect))) => {
                if foci.as_ref().is_some_and(|s| !s.contains(&name)) {
                    return Err(unknown());
                }
                Ok(BasicInstruction::Register(RegisterInstr::new(&name, reply, effect)))
            }
            _ => Err(unknown()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::generic(["a", "b"])
    }

    #[test]
    fn parses_right_nested_concatenation() {
        let t = parse("+a;#2;!", &ab()).unwrap();
        let expected = Term::concat(
            Term::instr(Instr::pos("a")),
            Term::concat(Term::instr(Instr::Jump(2)), Term::instr(Instr::Halt)),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn parses_repetition() {
        let t = parse("(a;b)*", &ab()).unwrap();
        let expected = Term::repeat(Term::concat(
            Term::instr(Instr::plain("a")),
            Term::instr(Instr::plain("b")),
        ));
        assert_eq!(t, expected);
    }

    #[test]
    fn rejects_trailing_separator() {
        match parse("a;", &ab()) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_unknown() {
        assert_eq!(parse("   ", &ab()), Err(ParseError::Empty));
        assert!(matches!(
            parse("a;c", &ab()),
            Err(ParseError::UnknownSymbol { pos: 2, .. })
        ));
        assert!(matches!(
            parse("f.T/I", &ab()),
            Err(ParseError::UnknownSymbol { .. })
        ));
        assert!(matches!(
            parse("a", &Alphabet::any_bool_reg()),
            Err(ParseError::UnknownSymbol { .. })
        ));
        assert!(parse("(a", &ab()).is_err());
        assert!(parse("#", &ab()).is_err());
        assert!(parse("a b", &ab()).is_err());
    }

    #[test]
    fn prints_canonical_text() {
        let t = Term::concat(Term::instr(Instr::Jump(0)), Term::instr(Instr::Halt));
        assert_eq!(print(&t), "#0;!");
        assert_eq!(print(&Term::repeat(Term::instr(Instr::plain("a")))), "(a)*");
        assert_eq!(print(&Term::instr(Instr::neg("b"))), "-b");
        let left_nested = Term::concat(
            Term::concat(Term::instr(Instr::plain("a")), Term::instr(Instr::plain("b"))),
            Term::instr(Instr::Halt),
        );
        assert_eq!(print(&left_nested), "(a;b);!");
        assert_eq!(parse(&print(&left_nested), &ab()).unwrap(), left_nested);
    }

    #[test]
    fn whitespace_and_redundant_parentheses() {
        let t = parse(" ( a ) ; ( ( b ) ) ; ! ", &ab()).unwrap();
        assert_eq!(print(&t), "a;b;!");
    }

    #[test]
    fn register_instructions() {
        let alphabet = Alphabet::bool_reg(["f"]);
        let t = parse("+f.F/I;!", &alphabet).unwrap();
        assert_eq!(print(&t), "+f.F/I;!");
        assert!(matches!(
            parse("g.T/T", &alphabet),
            Err(ParseError::UnknownSymbol { .. })
        ));
        assert!(parse("f.X/T", &alphabet).is_err());
    }

    #[test]
    fn len_counts_instructions() {
        assert_eq!(parse("a;#2;!", &ab()).unwrap().len(), Ok(3));
        assert_eq!(parse("!", &ab()).unwrap().len(), Ok(1));
        assert_eq!(parse("(a)*", &ab()).unwrap().len(), Err(ContainsRepetition));
        assert_eq!(parse("a;(b)*", &ab()).unwrap().len(), Err(ContainsRepetition));
    }
}
