//! Oracles shared by the integration tests. They are written against the
//! raw instruction vectors and threads and share no code with the library
//! algorithms they check.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use pga::syntax::{BasicInstruction, Instr};
use pga::thread::{Node, RegularThread};

/// All instances of the length-preserving axioms PGA5, PGA6, PGA9-PGA16
/// and PGA19-PGA25 over the single symbol `a` with windows of at most
/// `max_width` instructions and jumps of at most `max_jump`.
pub fn axiom_instances(a: &str, max_width: usize, max_jump: usize) -> Vec<(Vec<Instr>, Vec<Instr>)> {
    let plain = Instr::plain(a);
    let tests = [Instr::pos(a), Instr::neg(a)];
    let mut fill_alphabet = vec![plain.clone(), tests[0].clone(), tests[1].clone(), Instr::Halt];
    fill_alphabet.extend((0..=max_jump).map(Instr::Jump));
    let fillers = |k: usize| -> Vec<Vec<Instr>> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|v| {
                    fill_alphabet.iter().map(move |u| {
                        let mut w = v.clone();
                        w.push(u.clone());
                        w
                    })
                })
                .collect();
        }
        out
    };
    let j = Instr::Jump;
    let cat = |parts: &[&[Instr]]| parts.concat();
    let mut out = Vec::new();
    for k in 0..max_width.saturating_sub(1) {
        for us in fillers(k) {
            // PGA5, PGA6
            out.push((cat(&[&[j(k + 1)], &us, &[j(0)]]), cat(&[&[j(0)], &us, &[j(0)]])));
            for l in 1..=max_jump {
                out.push((cat(&[&[j(k + 1)], &us, &[j(l)]]), cat(&[&[j(l + k + 1)], &us, &[j(l)]])));
            }
            // PGA19, PGA20
            for t in &tests {
                out.push((
                    cat(&[&[j(k + 3), j(k + 3), j(k + 3)], &us, std::slice::from_ref(t)]),
                    cat(&[&[t.clone(), j(k + 3), j(k + 3)], &us, std::slice::from_ref(t)]),
                ));
            }
            // PGA21
            out.push((
                cat(&[&[j(k + 2), j(k + 2)], &us, std::slice::from_ref(&plain)]),
                cat(&[&[plain.clone(), j(k + 2)], &us, std::slice::from_ref(&plain)]),
            ));
            // PGA25
            out.push((cat(&[&[j(k + 1)], &us, &[Instr::Halt]]), cat(&[&[Instr::Halt], &us, &[Instr::Halt]])));
            for k2 in 0..(max_width + 1).saturating_sub(k + 4) {
                for vs in fillers(k2) {
                    // PGA22, PGA23
                    for t in &tests {
                        let tail = cat(&[&[t.clone(), j(k2 + 3), j(k2 + 3)], &vs, std::slice::from_ref(t)]);
                        out.push((cat(&[&[j(k + k2 + 4)], &us, &tail]), cat(&[&[j(k + 1)], &us, &tail])));
                    }
                    // PGA24
                    let tail = cat(&[&[plain.clone(), j(k2 + 2)], &vs, std::slice::from_ref(&plain)]);
                    out.push((cat(&[&[j(k + k2 + 3)], &us, &tail]), cat(&[&[j(k + 1)], &us, &tail])));
                }
            }
        }
    }
    for t in &tests {
        // PGA9-PGA16
        out.push((vec![t.clone(), j(0), j(0)], vec![plain.clone(), j(0), j(0)]));
        out.push((vec![t.clone(), j(1)], vec![plain.clone(), j(1)]));
        for l in 0..=max_jump {
            out.push((vec![t.clone(), j(l + 2), j(l + 1)], vec![plain.clone(), j(l + 2), j(l + 1)]));
        }
        out.push((vec![t.clone(), Instr::Halt, Instr::Halt], vec![plain.clone(), Instr::Halt, Instr::Halt]));
    }
    out.retain(|(l, r)| {
        l.len() <= max_width && l != r && l.iter().chain(r).all(|u| u.jump_len().is_none_or(|x| x <= max_jump))
    });
    out
}

/// Every finite sequence derivably equal to `start`.
///
/// No axiom equates a finite term with one that contains repetition, and
/// the axioms between finite terms preserve length, so a derivation between
/// finite sequences never leaves sequences of the same length. No axiom
/// moves a jump target beyond the furthest target already present (or the
/// end of the sequence), so bounding jumps by that target loses nothing:
/// the class returned is the complete derivability class.
pub fn derivability_class(start: &[Instr]) -> HashSet<Vec<Instr>> {
    let symbols: HashSet<&BasicInstruction> = start.iter().filter_map(Instr::basic).collect();
    assert!(symbols.len() <= 1, "oracle handles one basic instruction");
    let a = match symbols.into_iter().next() {
        Some(BasicInstruction::Symbol(s)) => s.to_string(),
        Some(_) => panic!("oracle handles plain symbols"),
        None => "a".to_string(),
    };
    let n = start.len();
    let reach = start
        .iter()
        .enumerate()
        .filter_map(|(p, u)| u.jump_len().map(|l| p + l))
        .max()
        .unwrap_or(0)
        .max(n);
    let rules = axiom_instances(&a, n, reach);
    let mut seen: HashSet<Vec<Instr>> = HashSet::from([start.to_vec()]);
    let mut queue = VecDeque::from([start.to_vec()]);
    while let Some(s) = queue.pop_front() {
        for (lhs, rhs) in &rules {
            for (from, to) in [(lhs, rhs), (rhs, lhs)] {
                for p in 0..=n.saturating_sub(from.len()) {
                    if s[p..p + from.len()] == from[..] {
                        let mut next = s.clone();
                        next[p..p + to.len()].clone_from_slice(to);
                        if seen.insert(next.clone()) {
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
    }
    seen
}

/// Bisimilarity as the greatest fixpoint of an explicit relation.
pub fn bisimilar_explicit(r1: &RegularThread, r2: &RegularThread) -> bool {
    let compatible = |x: &Node, y: &Node| match (x, y) {
        (Node::Dead, Node::Dead) | (Node::Term, Node::Term) => true,
        (Node::Act { action: a, .. }, Node::Act { action: b, .. }) => a == b,
        _ => false,
    };
    let mut rel: HashSet<(usize, usize)> = HashSet::new();
    for (i, x) in r1.nodes().iter().enumerate() {
        for (j, y) in r2.nodes().iter().enumerate() {
            if compatible(x, y) {
                rel.insert((i, j));
            }
        }
    }
    loop {
        let keep: HashSet<(usize, usize)> = rel
            .iter()
            .copied()
            .filter(|&(i, j)| match (r1.node(i), r2.node(j)) {
                (
                    Node::Act {
                        on_true: t1,
                        on_false: f1,
                        ..
                    },
                    Node::Act {
                        on_true: t2,
                        on_false: f2,
                        ..
                    },
                ) => rel.contains(&(*t1, *t2)) && rel.contains(&(*f1, *f2)),
                _ => true,
            })
            .collect();
        if keep.len() == rel.len() {
            return rel.contains(&(r1.root(), r2.root()));
        }
        rel = keep;
    }
}

/// Hash-consed depth-`n` projections: equal ids mean equal finite trees.
#[derive(Default)]
pub struct Projections {
    ids: HashMap<(BasicInstruction, u32, u32), u32>,
}

impl Projections {
    const DEAD: u32 = 0;
    const TERM: u32 = 1;

    fn intern(&mut self, key: (BasicInstruction, u32, u32)) -> u32 {
        let fresh = self.ids.len() as u32 + 2;
        *self.ids.entry(key).or_insert(fresh)
    }

    /// Ids of the projections of `r` at depths `0..=max_depth`.
    pub fn of(&mut self, r: &RegularThread, max_depth: usize) -> Vec<u32> {
        let mut level: Vec<u32> = vec![Self::DEAD; r.len()];
        let mut roots = vec![level[r.root()]];
        for _ in 1..=max_depth {
            let next: Vec<u32> = r
                .nodes()
                .iter()
                .map(|node| match node {
                    Node::Dead => Self::DEAD,
                    Node::Term => Self::TERM,
                    Node::Act {
                        action,
                        on_true,
                        on_false,
                    } => self.intern((action.clone(), level[*on_true], level[*on_false])),
                })
                .collect();
            level = next;
            roots.push(level[r.root()]);
        }
        roots
    }
}

/// Derivability classes of all sequences of length `len` over the single
/// symbol `a` with jumps of at most `max_jump`, as class ids. A class never
/// needs jumps beyond its members' furthest target (see
/// [`derivability_class`]), so this is exact for sequences whose targets
/// stay within `max_jump`.
pub fn derivability_classes(a: &str, len: usize, max_jump: usize) -> HashMap<Vec<Instr>, usize> {
    let mut alphabet = vec![Instr::plain(a), Instr::pos(a), Instr::neg(a), Instr::Halt];
    alphabet.extend((0..=max_jump).map(Instr::Jump));
    let mut states: Vec<Vec<Instr>> = vec![Vec::new()];
    for _ in 0..len {
        states = states
            .into_iter()
            .flat_map(|v| {
                alphabet.iter().map(move |u| {
                    let mut w = v.clone();
                    w.push(u.clone());
                    w
                })
            })
            .collect();
    }
    let index: HashMap<Vec<Instr>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut sides: HashMap<Vec<Instr>, Vec<Vec<Instr>>> = HashMap::new();
    for (l, r) in axiom_instances(a, len, max_jump) {
        sides.entry(l.clone()).or_default().push(r.clone());
        sides.entry(r).or_default().push(l);
    }
    let mut parent: Vec<usize> = (0..states.len()).collect();
    fn root(parent: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, s) in states.iter().enumerate() {
        for p in 0..len {
            for w in 1..=len - p {
                for other in sides.get(&s[p..p + w]).into_iter().flatten() {
                    let mut next = s.clone();
                    next[p..p + w].clone_from_slice(other);
                    let j = index[&next];
                    let (x, y) = (root(&mut parent, i), root(&mut parent, j));
                    parent[x] = y;
                }
            }
        }
    }
    (0..states.len()).map(|i| (states[i].clone(), root(&mut parent, i))).collect()
}
