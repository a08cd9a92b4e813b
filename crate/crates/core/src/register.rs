//! Boolean register instructions `f.p/q`: reply `p(b)` and new content
//! `q(b)` for register content `b`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::canon::{Axiom, InstrNormalizer};
use crate::syntax::{BasicInstruction, Instr};
use crate::thread::ActionSemantics;

/// The four unary Boolean functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum UnaryBoolFn {
    /// Constant false.
    F,
    /// Constant true.
    T,
    /// Identity.
    I,
    /// Complement.
    C,
}

impl UnaryBoolFn {
    pub const ALL: [UnaryBoolFn; 4] = [UnaryBoolFn::F, UnaryBoolFn::T, UnaryBoolFn::I, UnaryBoolFn::C];

    pub fn eval(self, b: bool) -> bool {
        match self {
            UnaryBoolFn::F => false,
            UnaryBoolFn::T => true,
            UnaryBoolFn::I => b,
            UnaryBoolFn::C => !b,
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'F' => Some(UnaryBoolFn::F),
            'T' => Some(UnaryBoolFn::T),
            'I' => Some(UnaryBoolFn::I),
            'C' => Some(UnaryBoolFn::C),
            _ => None,
        }
    }
}

impl fmt::Display for UnaryBoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            UnaryBoolFn::F => "F",
            UnaryBoolFn::T => "T",
            UnaryBoolFn::I => "I",
            UnaryBoolFn::C => "C",
        };
        f.write_str(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegisterInstr {
    pub focus: Arc<str>,
    pub reply: UnaryBoolFn,
    pub effect: UnaryBoolFn,
}

impl RegisterInstr {
    pub fn new(focus: &str, reply: UnaryBoolFn, effect: UnaryBoolFn) -> Self {
        RegisterInstr {
            focus: focus.into(),
            reply,
            effect,
        }
    }

    fn with_reply(&self, reply: UnaryBoolFn) -> BasicInstruction {
        BasicInstruction::Register(RegisterInstr {
            reply,
            ..self.clone()
        })
    }
}

impl fmt::Display for RegisterInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}/{}", self.focus, self.reply, self.effect)
    }
}

/// Rewrites register instructions to the representatives `f.T/e`,
/// `-f.T/e`, `-f.I/e` and `+f.I/e` using PGAbr1-PGAbr5. Other
/// instructions are left alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegisterNormalizer;

impl InstrNormalizer for RegisterNormalizer {
    fn step(&self, u: &Instr) -> Option<(Axiom, Instr)> {
        use UnaryBoolFn::*;
        let r = u.basic()?.as_register()?;
        let (n, next) = match (u, r.reply) {
            // +f.T/p = f.q/p, both directions
            (Instr::Plain(_), F | I | C) => (5, Instr::PosTest(r.with_reply(T))),
            (Instr::PosTest(_), T) => (5, Instr::Plain(r.with_reply(T))),
            // +f.F/p = -f.T/p
            (Instr::PosTest(_), F) => (1, Instr::NegTest(r.with_reply(T))),
            // +f.T/p = -f.F/p
            (Instr::NegTest(_), F) => (2, Instr::PosTest(r.with_reply(T))),
            // +f.I/p = -f.C/p
            (Instr::NegTest(_), C) => (3, Instr::PosTest(r.with_reply(I))),
            // +f.C/p = -f.I/p
            (Instr::PosTest(_), C) => (4, Instr::NegTest(r.with_reply(I))),
            _ => return None,
        };
        Some((Axiom::PgaBr(n), next))
    }
}

/// The canonical representative of `u` with the axioms used to reach it.
pub fn instr_normalize(u: &Instr) -> (Instr, Vec<Axiom>) {
    let mut u = u.clone();
    let mut used = Vec::new();
    while let Some((axiom, next)) = RegisterNormalizer.step(&u) {
        used.push(axiom);
        u = next;
    }
    (u, used)
}

/// How a register action node behaves once BTAbr1-BTAbr3 are taken into
/// account.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BrSignature {
    /// Continues with `block` whatever the reply.
    Always {
        focus: Arc<str>,
        effect: UnaryBoolFn,
        block: usize,
    },
    /// Continues with `on_true` when the register held true, else `on_false`.
    Branch {
        focus: Arc<str>,
        effect: UnaryBoolFn,
        on_true: usize,
        on_false: usize,
    },
}

pub fn br_action_signature(r: &RegisterInstr, on_true: usize, on_false: usize) -> BrSignature {
    use UnaryBoolFn::*;
    // BTAbr1, BTAbr2: F and C replies are T and I with swapped branches
    let (reply, t, f) = match r.reply {
        F => (T, on_false, on_true),
        C => (I, on_false, on_true),
        p => (p, on_true, on_false),
    };
    let focus = r.focus.clone();
    let effect = r.effect;
    // BTAbr3: a constant reply ignores its false branch, and so does an
    // identity reply whose branches agree
    if reply == T || t == f {
        BrSignature::Always { focus, effect, block: t }
    } else {
        BrSignature::Branch {
            focus,
            effect,
            on_true: t,
            on_false: f,
        }
    }
}

/// Action comparison for threads over register instructions: each node is
/// replaced by a representative of its signature (`f.T/e` for `Always`,
/// `f.I/e` for `Branch`). Symbols are compared syntactically.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegisterActions;

impl ActionSemantics for RegisterActions {
    fn canonical_act(&self, action: &BasicInstruction, on_true: usize, on_false: usize) -> (BasicInstruction, usize, usize) {
        let Some(r) = action.as_register() else {
            return (action.clone(), on_true, on_false);
        };
        match br_action_signature(r, on_true, on_false) {
            BrSignature::Always { block, .. } => (r.with_reply(UnaryBoolFn::T), block, block),
            BrSignature::Branch { on_true, on_false, .. } => (r.with_reply(UnaryBoolFn::I), on_true, on_false),
        }
    }
}
