//! Regular threads: finite deterministic behaviour graphs built from
//! inaction (`D`), termination (`S`) and postconditional composition.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::BasicInstruction;

/// A finite thread written as a tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ThreadTerm {
    Dead,
    Term,
    /// `on_true <| action |> on_false`
    Post(BasicInstruction, Arc<ThreadTerm>, Arc<ThreadTerm>),
}

impl ThreadTerm {
    pub fn post(action: BasicInstruction, on_true: ThreadTerm, on_false: ThreadTerm) -> Self {
        ThreadTerm::Post(action, Arc::new(on_true), Arc::new(on_false))
    }

    /// Action prefixing: `a o t`, i.e. `t <| a |> t`.
    pub fn prefixed(action: BasicInstruction, then: ThreadTerm) -> Self {
        let then = Arc::new(then);
        ThreadTerm::Post(action, then.clone(), then)
    }
}

impl fmt::Display for ThreadTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThreadTerm::Dead => f.write_str("D"),
            ThreadTerm::Term => f.write_str("S"),
            ThreadTerm::Post(a, x, y) if x == y => write!(f, "{a} o {x}"),
            ThreadTerm::Post(a, x, y) => write!(f, "({x} <| {a} |> {y})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind")]
pub enum Node {
    Dead,
    Term,
    Act {
        #[serde(serialize_with = "serialize_display")]
        action: BasicInstruction,
        on_true: usize,
        on_false: usize,
    },
}

fn serialize_display<S: serde::Serializer>(a: &BasicInstruction, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(a)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThreadError {
    #[error("thread has no states")]
    Empty,
    #[error("state {state} refers to missing state {target}")]
    DanglingSuccessor { state: usize, target: usize },
    #[error("root {0} is not a state")]
    BadRoot(usize),
}

/// A rooted deterministic behaviour graph. Every state is reachable from
/// the root, and states are numbered in breadth-first order from the root
/// (true successor before false successor).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RegularThread {
    nodes: Vec<Node>,
    root: usize,
}

impl RegularThread {
    /// Builds a thread from an arbitrary graph, dropping unreachable states
    /// and renumbering the rest breadth-first from `root`.
    pub fn new(nodes: Vec<Node>, root: usize) -> Result<Self, ThreadError> {
        if nodes.is_empty() {
            return Err(ThreadError::Empty);
        }
        if root >= nodes.len() {
            return Err(ThreadError::BadRoot(root));
        }
        for (state, node) in nodes.iter().enumerate() {
            if let Node::Act { on_true, on_false, .. } = node {
                for &target in [on_true, on_false] {
                    if target >= nodes.len() {
                        return Err(ThreadError::DanglingSuccessor { state, target });
                    }
                }
            }
        }
        Ok(Self::renumbered(&nodes, root))
    }

    fn renumbered(nodes: &[Node], root: usize) -> Self {
        let mut index = vec![usize::MAX; nodes.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([root]);
        index[root] = 0;
        order.push(root);
        while let Some(s) = queue.pop_front() {
            if let Node::Act { on_true, on_false, .. } = &nodes[s] {
                for &t in [on_true, on_false] {
                    if index[t] == usize::MAX {
                        index[t] = order.len();
                        order.push(t);
                        queue.push_back(t);
                    }
                }
            }
        }
        let nodes = order
            .iter()
            .map(|&s| match &nodes[s] {
                Node::Act {
                    action,
                    on_true,
                    on_false,
                } => Node::Act {
                    action: action.clone(),
                    on_true: index[*on_true],
                    on_false: index[*on_false],
                },
                other => other.clone(),
            })
            .collect();
        RegularThread { nodes, root: 0 }
    }

    pub fn dead() -> Self {
        RegularThread {
            nodes: vec![Node::Dead],
            root: 0,
        }
    }

    pub fn term() -> Self {
        RegularThread {
            nodes: vec![Node::Term],
            root: 0,
        }
    }

    /// The graph of a finite thread, sharing equal subtrees.
    pub fn from_term(t: &ThreadTerm) -> Self {
        fn build(t: &ThreadTerm, nodes: &mut Vec<Node>, memo: &mut HashMap<ThreadTerm, usize>) -> usize {
            if let Some(&i) = memo.get(t) {
                return i;
            }
            let node = match t {
                ThreadTerm::Dead => Node::Dead,
                ThreadTerm::Term => Node::Term,
                ThreadTerm::Post(a, x, y) => {
                    let on_true = build(x, nodes, memo);
                    let on_false = build(y, nodes, memo);
                    Node::Act {
                        action: a.clone(),
                        on_true,
                        on_false,
                    }
                }
            };
            nodes.push(node);
            memo.insert(t.clone(), nodes.len() - 1);
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        let root = build(t, &mut nodes, &mut HashMap::new());
        Self::renumbered(&nodes, root)
    }

    /// `on_true <| action |> on_false` over two existing threads.
    pub fn compose(action: BasicInstruction, on_true: &RegularThread, on_false: &RegularThread) -> Self {
        let shift = 1 + on_true.len();
        let mut nodes = vec![Node::Act {
            action,
            on_true: 1 + on_true.root,
            on_false: shift + on_false.root,
        }];
        nodes.extend(on_true.nodes.iter().map(|n| offset(n, 1)));
        nodes.extend(on_false.nodes.iter().map(|n| offset(n, shift)));
        Self::renumbered(&nodes, 0)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, state: usize) -> &Node {
        &self.nodes[state]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Depth-`n` approximation of the thread as a tree.
    pub fn project(&self, n: usize) -> ThreadTerm {
        let mut memo = HashMap::new();
        self.project_from(self.root, n, &mut memo).as_ref().clone()
    }

    fn project_from(
        &self,
        state: usize,
        n: usize,
        memo: &mut HashMap<(usize, usize), Arc<ThreadTerm>>,
    ) -> Arc<ThreadTerm> {
        if n == 0 {
            return Arc::new(ThreadTerm::Dead);
        }
        if let Some(t) = memo.get(&(state, n)) {
            return t.clone();
        }
        let t = match &self.nodes[state] {
            Node::Dead => Arc::new(ThreadTerm::Dead),
            Node::Term => Arc::new(ThreadTerm::Term),
            Node::Act {
                action,
                on_true,
                on_false,
            } => {
                let x = self.project_from(*on_true, n - 1, memo);
                let y = self.project_from(*on_false, n - 1, memo);
                Arc::new(ThreadTerm::Post(action.clone(), x, y))
            }
        };
        memo.insert((state, n), t.clone());
        t
    }

    /// Depth-`n` approximation as a shared acyclic graph of at most
    /// `len() * (n + 1)` states.
    pub fn project_graph(&self, n: usize) -> RegularThread {
        let mut nodes = Vec::new();
        let mut memo: HashMap<(usize, usize), usize> = HashMap::new();
        let root = self.project_graph_from(self.root, n, &mut nodes, &mut memo);
        Self::renumbered(&nodes, root)
    }

    fn project_graph_from(
        &self,
        state: usize,
        n: usize,
        nodes: &mut Vec<Node>,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        let key = match (n, &self.nodes[state]) {
            (0, _) | (_, Node::Dead) => (usize::MAX, 0),
            (_, Node::Term) => (usize::MAX, 1),
            _ => (state, n),
        };
        if let Some(&i) = memo.get(&key) {
            return i;
        }
        let node = match (n, &self.nodes[state]) {
            (0, _) | (_, Node::Dead) => Node::Dead,
            (_, Node::Term) => Node::Term,
            (
                _,
                Node::Act {
                    action,
                    on_true,
                    on_false,
                },
            ) => {
                let t = self.project_graph_from(*on_true, n - 1, nodes, memo);
                let f = self.project_graph_from(*on_false, n - 1, nodes, memo);
                Node::Act {
                    action: action.clone(),
                    on_true: t,
                    on_false: f,
                }
            }
        };
        nodes.push(node);
        memo.insert(key, nodes.len() - 1);
        nodes.len() - 1
    }

    /// Graphviz rendering: `D` and `S` as boxes, actions as ellipses with
    /// `T`/`F` labelled edges.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph \"{}\" {{\n", name.replace('"', "\\\""));
        out.push_str("  start [shape=point];\n");
        out.push_str(&format!("  start -> s{};\n", self.root));
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Dead => out.push_str(&format!("  s{i} [shape=box, label=\"D\"];\n")),
                Node::Term => out.push_str(&format!("  s{i} [shape=box, label=\"S\"];\n")),
                Node::Act {
                    action,
                    on_true,
                    on_false,
                } => {
                    out.push_str(&format!("  s{i} [shape=ellipse, label=\"{action}\"];\n"));
                    out.push_str(&format!("  s{i} -> s{on_true} [label=\"T\"];\n"));
                    out.push_str(&format!("  s{i} -> s{on_false} [label=\"F\"];\n"));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn offset(node: &Node, by: usize) -> Node {
    match node {
        Node::Act {
            action,
            on_true,
            on_false,
        } => Node::Act {
            action: action.clone(),
            on_true: on_true + by,
            on_false: on_false + by,
        },
        other => other.clone(),
    }
}

impl fmt::Display for RegularThread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes.iter().enumerate() {
            let marker = if i == self.root { "->" } else { "  " };
            match node {
                Node::Dead => writeln!(f, "{marker} s{i} = D")?,
                Node::Term => writeln!(f, "{marker} s{i} = S")?,
                Node::Act {
                    action,
                    on_true,
                    on_false,
                } => writeln!(f, "{marker} s{i} = s{on_true} <| {action} |> s{on_false}")?,
            }
        }
        Ok(())
    }
}

/// How action nodes are compared during refinement. Given an action and the
/// blocks of its two successors, returns a canonical `(action, true, false)`
/// triple; two action nodes are identified when their triples agree.
pub trait ActionSemantics: Sync {
    fn canonical_act(&self, action: &BasicInstruction, on_true: usize, on_false: usize) -> (BasicInstruction, usize, usize);
}

/// Actions are uninterpreted: equal only when syntactically equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Syntactic;

impl ActionSemantics for Syntactic {
    fn canonical_act(&self, action: &BasicInstruction, on_true: usize, on_false: usize) -> (BasicInstruction, usize, usize) {
        (action.clone(), on_true, on_false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Signature {
    Dead,
    Term,
    Act(BasicInstruction, usize, usize),
}

fn signature(node: &Node, block: &[usize], sem: &dyn ActionSemantics) -> Signature {
    match node {
        Node::Dead => Signature::Dead,
        Node::Term => Signature::Term,
        Node::Act {
            action,
            on_true,
            on_false,
        } => {
            let (a, t, f) = sem.canonical_act(action, block[*on_true], block[*on_false]);
            Signature::Act(a, t, f)
        }
    }
}

pub(crate) struct Refinement {
    pub block: Vec<usize>,
    pub blocks: usize,
    pub rounds: usize,
}

/// Signature-based partition refinement starting from the one-block
/// partition. After round `i` two states share a block iff their depth-`i`
/// approximations agree. `stop` is consulted before every round and may end
/// the refinement early.
pub(crate) fn refine(
    nodes: &[Node],
    sem: &dyn ActionSemantics,
    mut stop: impl FnMut(usize, &[usize]) -> bool,
) -> Refinement {
    let mut block = vec![0; nodes.len()];
    let mut blocks = 1;
    let mut rounds = 0;
    loop {
        if stop(rounds, &block) {
            break;
        }
        let mut ids: HashMap<Signature, usize> = HashMap::new();
        let next: Vec<usize> = nodes
            .iter()
            .map(|n| {
                let sig = signature(n, &block, sem);
                let fresh = ids.len();
                *ids.entry(sig).or_insert(fresh)
            })
            .collect();
        rounds += 1;
        let stable = ids.len() == blocks;
        blocks = ids.len();
        block = next;
        if stable {
            break;
        }
    }
    debug_assert!(rounds <= nodes.len() + 1);
    Refinement { block, blocks, rounds }
}

fn union(r1: &RegularThread, r2: &RegularThread) -> (Vec<Node>, usize, usize) {
    let shift = r1.len();
    let mut nodes = r1.nodes.clone();
    nodes.extend(r2.nodes.iter().map(|n| offset(n, shift)));
    (nodes, r1.root, shift + r2.root)
}

/// Bisimilarity of two regular threads with uninterpreted actions.
pub fn bisimilar(r1: &RegularThread, r2: &RegularThread) -> bool {
    bisimilar_with(r1, r2, &Syntactic)
}

pub fn bisimilar_with(r1: &RegularThread, r2: &RegularThread, sem: &dyn ActionSemantics) -> bool {
    let (nodes, a, b) = union(r1, r2);
    let refinement = refine(&nodes, sem, |_, block| block[a] != block[b]);
    refinement.block[a] == refinement.block[b]
}

/// Least `n` for which the depth-`n` approximations of the two threads
/// differ, or `None` when the threads are bisimilar.
pub fn distinguishing_depth(r1: &RegularThread, r2: &RegularThread, sem: &dyn ActionSemantics) -> Option<usize> {
    let (nodes, a, b) = union(r1, r2);
    let mut depth = None;
    refine(&nodes, sem, |round, block| {
        if block[a] != block[b] {
            depth = Some(round);
            true
        } else {
            false
        }
    });
    depth
}

/// Number of refinement rounds needed to reach the bisimilarity partition
/// of `r`'s states.
pub fn refinement_rounds(r: &RegularThread, sem: &dyn ActionSemantics) -> usize {
    refine(&r.nodes, sem, |_, _| false).rounds
}

/// The quotient of `r` by bisimilarity.
pub fn minimize(r: &RegularThread) -> RegularThread {
    minimize_with(r, &Syntactic)
}

/// The quotient of `r` by bisimilarity under `sem`; action nodes are
/// rewritten to the canonical triple of their block, so bisimilar inputs
/// produce identical outputs.
pub fn minimize_with(r: &RegularThread, sem: &dyn ActionSemantics) -> RegularThread {
    let refinement = refine(&r.nodes, sem, |_, _| false);
    let mut quotient: Vec<Option<Node>> = vec![None; refinement.blocks];
    for (state, node) in r.nodes.iter().enumerate() {
        let b = refinement.block[state];
        if quotient[b].is_some() {
            continue;
        }
        quotient[b] = Some(match node {
            Node::Act {
                action,
                on_true,
                on_false,
            } => {
                let (action, on_true, on_false) =
                    sem.canonical_act(action, refinement.block[*on_true], refinement.block[*on_false]);
                Node::Act {
                    action,
                    on_true,
                    on_false,
                }
            }
            other => other.clone(),
        });
    }
    let nodes: Vec<Node> = quotient.into_iter().map(|n| n.expect("every block has a member")).collect();
    RegularThread::renumbered(&nodes, refinement.block[r.root])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> BasicInstruction {
        BasicInstruction::symbol("a")
    }

    fn b() -> BasicInstruction {
        BasicInstruction::symbol("b")
    }

    fn loop_a() -> RegularThread {
        RegularThread::new(
            vec![Node::Act {
                action: a(),
                on_true: 0,
                on_false: 0,
            }],
            0,
        )
        .unwrap()
    }

    fn unrolled_loop_a() -> RegularThread {
        RegularThread::new(
            vec![
                Node::Act {
                    action: a(),
                    on_true: 1,
                    on_false: 1,
                },
                Node::Act {
                    action: a(),
                    on_true: 0,
                    on_false: 0,
                },
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn projection_axioms() {
        let r = loop_a();
        assert_eq!(r.project(0), ThreadTerm::Dead);
        assert_eq!(RegularThread::term().project(3), ThreadTerm::Term);
        assert_eq!(RegularThread::dead().project(3), ThreadTerm::Dead);
        let inner = ThreadTerm::prefixed(a(), ThreadTerm::Dead);
        assert_eq!(r.project(2), ThreadTerm::post(a(), inner.clone(), inner));
    }

    #[test]
    fn projection_graph_matches_tree() {
        let r = unrolled_loop_a();
        for n in 0..6 {
            assert_eq!(r.project_graph(n), RegularThread::from_term(&r.project(n)));
        }
    }

    #[test]
    fn loops_are_bisimilar() {
        assert!(bisimilar(&loop_a(), &loop_a()));
        assert!(bisimilar(&loop_a(), &unrolled_loop_a()));
        let ta = RegularThread::from_term(&ThreadTerm::prefixed(a(), ThreadTerm::Term));
        let tb = RegularThread::from_term(&ThreadTerm::prefixed(b(), ThreadTerm::Term));
        assert!(!bisimilar(&ta, &tb));
        assert_eq!(distinguishing_depth(&ta, &tb, &Syntactic), Some(1));
    }

    #[test]
    fn minimization_merges_bisimilar_states() {
        let m = minimize(&unrolled_loop_a());
        assert_eq!(m, loop_a());
        assert_eq!(minimize(&m), m);
        assert!(bisimilar(&m, &unrolled_loop_a()));
    }

    #[test]
    fn new_drops_unreachable_states_and_checks_bounds() {
        let r = RegularThread::new(vec![Node::Dead, Node::Term], 1).unwrap();
        assert_eq!(r, RegularThread::term());
        assert!(matches!(
            RegularThread::new(
                vec![Node::Act {
                    action: a(),
                    on_true: 4,
                    on_false: 0
                }],
                0
            ),
            Err(ThreadError::DanglingSuccessor { state: 0, target: 4 })
        ));
        assert_eq!(RegularThread::new(vec![], 0), Err(ThreadError::Empty));
        assert_eq!(RegularThread::new(vec![Node::Dead], 2), Err(ThreadError::BadRoot(2)));
    }

    #[test]
    fn depth_counts_actions_before_divergence() {
        // a o a o S versus a o a o D
        let x = RegularThread::from_term(&ThreadTerm::prefixed(a(), ThreadTerm::prefixed(a(), ThreadTerm::Term)));
        let y = RegularThread::from_term(&ThreadTerm::prefixed(a(), ThreadTerm::prefixed(a(), ThreadTerm::Dead)));
        assert_eq!(distinguishing_depth(&x, &y, &Syntactic), Some(3));
        assert_ne!(x.project(3), y.project(3));
        assert_eq!(x.project(2), y.project(2));
    }

    #[test]
    fn dot_output_labels() {
        let dot = RegularThread::from_term(&ThreadTerm::post(a(), ThreadTerm::Term, ThreadTerm::Dead)).to_dot("t");
        assert!(dot.contains("label=\"D\""));
        assert!(dot.contains("label=\"S\""));
        assert!(dot.contains("shape=ellipse, label=\"a\""));
        assert!(dot.contains("[label=\"T\"]"));
        assert!(dot.contains("[label=\"F\"]"));
    }
}
