//! Thread extraction: the behaviour an instruction sequence produces.

use crate::canon::{minimize_periodic, to_first_canonical};
use crate::seq::InstrSeq;
use crate::syntax::{Instr, Term};
use crate::thread::{Node, RegularThread};

/// Extracts the thread of `s`.
///
/// Every non-jump position becomes a candidate state; jumps are shortcut to
/// the first non-jump position they lead to. Following a `#0`, leaving a
/// finite sequence, or an endless chain of jumps all yield inaction.
pub fn extract(s: &InstrSeq) -> RegularThread {
    let n = s.window_len();
    let dead = n;
    let term = n + 1;

    let effective = |start: usize| -> usize {
        let mut pos = start;
        let mut seen = vec![false; n];
        loop {
            let Some(p) = s.normalize_pos(pos) else {
                return dead;
            };
            match s.get(p).expect("normalized position") {
                Instr::Jump(0) => return dead,
                Instr::Jump(l) => {
                    if seen[p] {
                        return dead;
                    }
                    seen[p] = true;
                    pos = p + l;
                }
                Instr::Halt => return term,
                _ => return p,
            }
        }
    };

    let mut nodes: Vec<Node> = Vec::with_capacity(n + 2);
    for p in 0..n {
        let node = match s.get(p).expect("position inside window") {
            Instr::Plain(a) => {
                let next = effective(p + 1);
                Node::Act {
                    action: a.clone(),
                    on_true: next,
                    on_false: next,
                }
            }
            Instr::PosTest(a) => Node::Act {
                action: a.clone(),
                on_true: effective(p + 1),
                on_false: effective(p + 2),
            },
            Instr::NegTest(a) => Node::Act {
                action: a.clone(),
                on_true: effective(p + 2),
                on_false: effective(p + 1),
            },
            // never the target of `effective`, dropped as unreachable
            Instr::Jump(_) | Instr::Halt => Node::Dead,
        };
        nodes.push(node);
    }
    nodes.push(Node::Dead);
    nodes.push(Node::Term);
    RegularThread::new(nodes, effective(0)).expect("extraction builds a well-formed graph")
}

/// Extracts the thread of a term via its first canonical form.
pub fn extract_term(t: &Term) -> RegularThread {
    let (seq, _) = to_first_canonical(t);
    extract(&minimize_periodic(&seq))
}
