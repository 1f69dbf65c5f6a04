//! Canonical forms: short edges are contracted, unlabelled degree-2 vertices
//! are suppressed and children are sorted. Equivalence is checked by a
//! tolerant isomorphism search, so rounding never decides the outcome.

use super::{PointedTree, VertexId};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

/// Relative tolerance on edge lengths, scaled by the larger tree height.
pub const CANON_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Node {
    parent: usize,
    len: f64,
    children: Vec<usize>,
    labels: Vec<usize>,
    mark: bool,
    alive: bool,
}

/// A tree in canonical form together with its length scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonical {
    tree: PointedTree,
    scale: f64,
}

impl Canonical {
    pub fn tree(&self) -> &PointedTree {
        &self.tree
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Isomorphism respecting labels and marks with lengths equal up to
    /// [`CANON_TOL`] times the common scale.
    pub fn approx_eq(&self, other: &Canonical) -> bool {
        let (a, b) = (&self.tree, &other.tree);
        if a.pointed.len() != b.pointed.len() || a.vertex_count() != b.vertex_count() {
            return false;
        }
        let tol = CANON_TOL * self.scale.max(other.scale).max(f64::MIN_POSITIVE);
        let la = labels_of(a);
        let lb = labels_of(b);
        let ha = shape_hashes(a, &la);
        let hb = shape_hashes(b, &lb);
        let ctx = Match {
            a,
            b,
            la: &la,
            lb: &lb,
            ha: &ha,
            hb: &hb,
            tol,
        };
        ctx.matches(0, 0)
    }
}

struct Match<'a> {
    a: &'a PointedTree,
    b: &'a PointedTree,
    la: &'a [Vec<usize>],
    lb: &'a [Vec<usize>],
    ha: &'a [u64],
    hb: &'a [u64],
    tol: f64,
}

impl Match<'_> {
    fn matches(&self, u: VertexId, v: VertexId) -> bool {
        if self.ha[u] != self.hb[v]
            || self.la[u] != self.lb[v]
            || self.a.is_marked(u) != self.b.is_marked(v)
        {
            return false;
        }
        if (self.a.edge_len(u) - self.b.edge_len(v)).abs() > self.tol {
            return false;
        }
        let cu = self.a.children(u);
        let cv = self.b.children(v);
        cu.len() == cv.len() && self.assign(cu, cv, &mut vec![false; cv.len()], 0)
    }

    fn assign(&self, cu: &[VertexId], cv: &[VertexId], used: &mut [bool], k: usize) -> bool {
        if k == cu.len() {
            return true;
        }
        for j in 0..cv.len() {
            if !used[j] && self.matches(cu[k], cv[j]) {
                used[j] = true;
                if self.assign(cu, cv, used, k + 1) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
}

fn labels_of(t: &PointedTree) -> Vec<Vec<usize>> {
    let mut labels = vec![Vec::new(); t.vertex_count()];
    for (i, &v) in t.pointed.iter().enumerate().skip(1) {
        labels[v].push(i);
    }
    labels
}

/// Hash of the labelled shape below each vertex, lengths ignored.
fn shape_hashes(t: &PointedTree, labels: &[Vec<usize>]) -> Vec<u64> {
    let mut h = vec![0u64; t.vertex_count()];
    for v in t.preorder().into_iter().rev() {
        let mut kids: Vec<u64> = t.children(v).iter().map(|&c| h[c]).collect();
        kids.sort_unstable();
        let mut s = DefaultHasher::new();
        (&labels[v], t.is_marked(v), kids).hash(&mut s);
        h[v] = s.finish();
    }
    h
}

fn build_nodes(t: &PointedTree) -> Vec<Node> {
    let labels = labels_of(t);
    (0..t.vertex_count())
        .map(|v| Node {
            parent: t.parent(v),
            len: t.edge_len(v),
            children: t.children(v).to_vec(),
            labels: labels[v].clone(),
            mark: t.is_marked(v),
            alive: true,
        })
        .collect()
}

fn replace_child(nodes: &mut [Node], p: usize, old: usize, new: &[usize]) {
    let slot = nodes[p]
        .children
        .iter()
        .position(|&c| c == old)
        .expect("child listed");
    nodes[p].children.splice(slot..=slot, new.iter().copied());
}

/// Canonical form of a tree.
pub fn canonical(t: &PointedTree) -> Canonical {
    let scale = t.max_height();
    let eps = CANON_TOL * scale;
    let mut nodes = build_nodes(t);
    for v in t.preorder().into_iter().skip(1) {
        if nodes[v].len > eps {
            continue;
        }
        let p = nodes[v].parent;
        let kids = std::mem::take(&mut nodes[v].children);
        for &c in &kids {
            nodes[c].parent = p;
        }
        replace_child(&mut nodes, p, v, &kids);
        let labels = std::mem::take(&mut nodes[v].labels);
        nodes[p].labels.extend(labels);
        nodes[p].mark |= nodes[v].mark;
        nodes[v].alive = false;
    }
    for v in t.preorder().into_iter().skip(1).rev() {
        let n = &nodes[v];
        if !n.alive || n.children.len() != 1 || !n.labels.is_empty() {
            continue;
        }
        let c = n.children[0];
        if nodes[c].mark != n.mark {
            continue;
        }
        let (p, len) = (n.parent, n.len);
        nodes[c].len += len;
        nodes[c].parent = p;
        replace_child(&mut nodes, p, v, &[c]);
        nodes[v].alive = false;
    }
    for n in &mut nodes {
        n.labels.sort_unstable();
    }
    let keys = sort_keys(&nodes, scale);
    let mut out = PointedTree::root_only();
    let mut pointed = vec![0; t.pointed.len()];
    let mut marks = vec![nodes[0].mark];
    for &i in &nodes[0].labels {
        pointed[i] = 0;
    }
    let mut stack = vec![(0usize, 0usize)];
    while let Some((v, nv)) = stack.pop() {
        let mut kids = nodes[v].children.clone();
        kids.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        for &c in kids.iter().rev() {
            let id = out.add_child(nv, nodes[c].len);
            if id == nv {
                continue;
            }
            marks.push(nodes[c].mark);
            for &i in &nodes[c].labels {
                pointed[i] = id;
            }
            stack.push((c, id));
        }
    }
    // stack order leaves children reversed in the output; restore
    for ch in &mut out.children {
        ch.reverse();
    }
    out.pointed = pointed;
    if t.marks().is_some() {
        out.marked = Some(marks);
    }
    let out = relabel(&out);
    Canonical { tree: out, scale }
}

/// Relabels vertices in planar preorder.
fn relabel(t: &PointedTree) -> PointedTree {
    t.extract(&vec![true; t.vertex_count()]).0
}

fn sort_keys(nodes: &[Node], scale: f64) -> Vec<String> {
    let mut keys = vec![String::new(); nodes.len()];
    let mut order = Vec::new();
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(nodes[v].children.iter().copied());
    }
    let unit = if scale > 0.0 { scale } else { 1.0 };
    for &v in order.iter().rev() {
        let mut kids: Vec<&str> = nodes[v]
            .children
            .iter()
            .map(|&c| keys[c].as_str())
            .collect();
        kids.sort_unstable();
        let k = format!(
            "({:?}{}{:.6e}[{}])",
            nodes[v].labels,
            u8::from(nodes[v].mark),
            nodes[v].len / unit,
            kids.join(",")
        );
        keys[v] = k;
    }
    keys
}

/// Equality of canonical forms.
pub fn equivalent(a: &PointedTree, b: &PointedTree) -> bool {
    canonical(a).approx_eq(&canonical(b))
}

#[cfg(test)]
mod tests {
    use super::super::tests::fig123;
    use super::*;

    #[test]
    fn relabelling_and_reordering() {
        let t = fig123();
        let mut u = PointedTree::root_only();
        let a = u.add_child(0, 1.0);
        let b = u.add_child(a, 0.5);
        let l3 = u.add_child(b, 1.5);
        let l2 = u.add_child(b, 1.0);
        let l1 = u.add_child(a, 2.0);
        u.set_pointed(vec![0, l1, l2, l3]).unwrap();
        assert!(equivalent(&t, &u));
        assert_eq!(canonical(&t).tree(), canonical(&u).tree());
        u.set_pointed(vec![0, l2, l1, l3]).unwrap();
        assert!(!equivalent(&t, &u));
    }

    #[test]
    fn degree_two_and_short_edges() {
        let t = fig123();
        let mut u = t.clone();
        u.insert_point(2, 2.0);
        let tiny = u.add_child(3, 1e-14);
        u.add_child(tiny, 0.0);
        assert!(equivalent(&t, &u));
        let mut w = t.clone();
        w.add_child(3, 1e-3);
        assert!(!equivalent(&t, &w));
    }

    #[test]
    fn lengths_within_tolerance() {
        let t = fig123();
        let mut u = PointedTree::root_only();
        let a = u.add_child(0, 1.0 + 1e-13);
        let l1 = u.add_child(a, 2.0);
        let b = u.add_child(a, 0.5);
        let l2 = u.add_child(b, 1.0);
        let l3 = u.add_child(b, 1.5 - 1e-13);
        u.set_pointed(vec![0, l1, l2, l3]).unwrap();
        assert!(equivalent(&t, &u));
        let mut v = u.clone();
        v.len[5] += 1e-6;
        v.height[5] += 1e-6;
        assert!(!equivalent(&t, &v));
    }

    #[test]
    fn marks_block_suppression() {
        let mut t = PointedTree::segment(2.0);
        t.set_pointed(vec![0]).unwrap();
        let m = t.insert_point(1, 1.0);
        let mut marks = vec![true, false, true];
        marks[m] = true;
        t.set_marks(marks).unwrap();
        let c = canonical(&t);
        assert_eq!(c.tree().vertex_count(), 3);
    }
}
