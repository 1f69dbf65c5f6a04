//! Marked truncations, the split/graft decomposition along the spanned
//! branches, and the correspondence between spine trees and point measures.

use super::code::{cluster_order, mrca_table, BranchCode};
use super::{PointedTree, VertexId};
use crate::error::{Error, Result};

/// A 1-pointed tree whose marked set is the spine `[root, v_1]`. When
/// `unbounded` is set the spine stands for an infinite branch and may be
/// extended past `v_1` by truncations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpineTree {
    pub tree: PointedTree,
    pub unbounded: bool,
}

impl SpineTree {
    /// A bare spine of the given length.
    pub fn segment(len: f64) -> Self {
        Self::from_pointed(&PointedTree::segment(len))
    }

    /// Marks `[root, v_1]` of a 1-pointed tree and declares it unbounded.
    pub fn from_pointed(t: &PointedTree) -> Self {
        assert_eq!(t.n_pointed(), 1, "spine trees are 1-pointed");
        let mut tree = t.clone();
        let mut marks = vec![false; tree.vertex_count()];
        let mut v = tree.pointed()[1];
        loop {
            marks[v] = true;
            if v == 0 {
                break;
            }
            v = tree.parent(v);
        }
        tree.set_marks(marks)
            .expect("a root path is a rooted subtree");
        SpineTree {
            tree,
            unbounded: true,
        }
    }

    pub fn tip(&self) -> VertexId {
        self.tree.pointed()[1]
    }

    pub fn spine_length(&self) -> f64 {
        self.tree.height(self.tip())
    }
}

/// For every vertex, the deepest marked ancestor (its projection on the marks).
fn mark_projection(t: &PointedTree) -> Result<Vec<VertexId>> {
    let marks = t
        .marks()
        .ok_or_else(|| Error::InvalidTree("tree carries no marks".into()))?;
    let mut ps = vec![0; t.vertex_count()];
    for v in t.preorder() {
        ps[v] = if marks[v] { v } else { ps[t.parent(v)] };
    }
    Ok(ps)
}

fn truncate2(t: &PointedTree, level: f64, plus: bool) -> Result<PointedTree> {
    let mut tree = t.clone();
    mark_projection(&tree)?;
    for v in 1..t.vertex_count() {
        let p = tree.parent(v);
        if tree.is_marked(v) && tree.height(p) < level && tree.height(v) > level {
            tree.insert_point(v, level);
        }
    }
    let ps = mark_projection(&tree)?;
    let keep: Vec<bool> = (0..tree.vertex_count())
        .map(|v| {
            let h = tree.height(ps[v]);
            if tree.is_marked(v) || plus {
                h <= level
            } else {
                h < level
            }
        })
        .collect();
    Ok(tree.extract(&keep).0)
}

/// `r^{[2],+}_t`: points whose projection on the marks has height `<= t`.
pub fn truncate2_plus(t: &PointedTree, level: f64) -> Result<PointedTree> {
    truncate2(t, level, true)
}

/// `r^{[2],-}_t`: points whose projection on the marks has height `< t`,
/// plus the marked points at height exactly `t`.
pub fn truncate2_minus(t: &PointedTree, level: f64) -> Result<PointedTree> {
    truncate2(t, level, false)
}

/// `r~^{[2],+}_t`: the `+` truncation as a 1-pointed tree pointed at the
/// spine point of height `t`.
pub fn truncate2_plus_tilde(s: &SpineTree, level: f64) -> Result<PointedTree> {
    let mut tree = s.tree.clone();
    let tip = s.tip();
    let len = s.spine_length();
    let level = if (level - len).abs() <= 1e-12 * len.max(1.0) {
        len
    } else {
        level
    };
    let x = if level > len {
        if !s.unbounded {
            return Err(Error::Domain(format!(
                "component spine {len} shorter than {level}"
            )));
        }
        let x = tree.add_child(tip, level - len);
        let mut marks = tree.marks().expect("spine trees are marked").to_vec();
        marks[x] = true;
        tree.set_marks(marks)?;
        x
    } else {
        tree.point_on_path(tip, level)
    };
    tree.set_pointed(vec![0, x])?;
    let mut out = truncate2_plus(&tree, level)?;
    out.clear_marks();
    Ok(out)
}

/// `r^{[2]}_*`: removes the unmarked bushes at the root.
pub fn clean_root(t: &PointedTree) -> Result<PointedTree> {
    let ps = mark_projection(t)?;
    let keep: Vec<bool> = (0..t.vertex_count())
        .map(|v| v == 0 || ps[v] != 0)
        .collect();
    Ok(t.extract(&keep).0)
}

/// Components of `Split_n`: `components[0]` holds the bushes at the root,
/// `components[a]` is `T_A` rooted at `w_A` and pointed at `v_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub n: usize,
    pub components: Vec<PointedTree>,
}

impl Split {
    pub fn component(&self, a: usize) -> &PointedTree {
        &self.components[a]
    }

    /// The components indexed by nonempty subsets, as spine trees.
    pub fn spine_components(&self) -> Vec<SpineTree> {
        self.components[1..]
            .iter()
            .map(SpineTree::from_pointed)
            .collect()
    }
}

/// `Split_n(T, v)`.
pub fn split_n(t: &PointedTree) -> Split {
    let n = t.n_pointed();
    let full = (1usize << n) - 1;
    let nv = t.vertex_count();
    let on = t.on_span();
    let mut cl = vec![0usize; nv];
    for k in 1..=n {
        let mut v = t.pointed()[k];
        loop {
            cl[v] |= 1 << (k - 1);
            if v == 0 {
                break;
            }
            v = t.parent(v);
        }
    }
    let mut comp = vec![0usize; nv];
    for v in t.preorder().into_iter().skip(1) {
        comp[v] = if on[v] { cl[v] } else { comp[t.parent(v)] };
    }
    let table = mrca_table(t);
    let mut components = Vec::with_capacity(full + 1);
    for a in 0..=full {
        let mut c = PointedTree::root_only();
        let mut map = vec![usize::MAX; nv];
        let mut base = 0.0;
        for v in t.preorder().into_iter().skip(1) {
            if comp[v] != a {
                continue;
            }
            let p = t.parent(v);
            let at = if p != 0 && comp[p] == a {
                map[p]
            } else {
                base = t.height(p);
                0
            };
            map[v] = c.add_child_at_height(at, t.height(v) - base);
        }
        let tip = if a == 0 || table[a - 1].length == 0.0 {
            0
        } else {
            map[table[a - 1].v]
        };
        c.push_pointed(tip);
        components.push(c);
    }
    Split { n, components }
}

/// `Graft_n(l, T*)`: every positive branch `]w_A, v_A]` of the discrete tree
/// coded by `l` is replaced by `r~^{[2],+}_{l_A}(T*_A)`. `components` is
/// indexed by `mask - 1`.
pub fn graft_n(code: &BranchCode, components: &[SpineTree]) -> Result<PointedTree> {
    let n = code.n();
    let full = (1usize << n) - 1;
    if components.len() != full {
        return Err(Error::Domain(format!(
            "graft needs {full} components, got {}",
            components.len()
        )));
    }
    let mut t = PointedTree::root_only();
    let mut v_of = vec![0; full + 1];
    let order = cluster_order(code)?;
    for &(a, parent) in &order {
        let at = parent.map_or(0, |c| v_of[c]);
        let piece = truncate2_plus_tilde(&components[a - 1], code.get(a))?;
        let end = t.children(at).len();
        let map = t.attach(at, &piece, end);
        v_of[a] = map[piece.pointed()[1]];
    }
    let mut pointed = vec![0];
    for i in 0..n {
        let home = order
            .iter()
            .filter(|(a, _)| a & (1 << i) != 0)
            .map(|&(a, _)| a)
            .min_by_key(|a| a.count_ones());
        pointed.push(home.map_or(0, |a| v_of[a]));
    }
    t.set_pointed(pointed)?;
    Ok(t)
}

/// An atom `(h, T)` of a point measure on heights and rooted trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub height: f64,
    pub tree: PointedTree,
}

/// `Tree(M)`: grafts each atom's tree at its height on a spine of length
/// at least `spine_len`.
pub fn tree_from_measure(atoms: &[Atom], spine_len: f64) -> Result<SpineTree> {
    if let Some(a) = atoms.iter().find(|a| !(a.height >= 0.0)) {
        return Err(Error::Domain(format!(
            "atom at negative height {}",
            a.height
        )));
    }
    let len = atoms.iter().map(|a| a.height).fold(spine_len, f64::max);
    let mut spine = SpineTree::segment(len);
    let mut order: Vec<&Atom> = atoms.iter().collect();
    order.sort_by(|a, b| a.height.total_cmp(&b.height));
    for a in order {
        let tip = spine.tip();
        let x = spine.tree.point_on_path(tip, a.height);
        let end = spine.tree.children(x).len();
        spine.tree.attach(x, &a.tree, end);
    }
    Ok(spine)
}

/// `M(T*)`: one atom per connected component off the spine.
pub fn measure_from_tree(s: &SpineTree) -> Vec<Atom> {
    let t = &s.tree;
    let mut atoms = Vec::new();
    for x in t.preorder() {
        if !t.is_marked(x) {
            continue;
        }
        for &c in t.children(x) {
            if t.is_marked(c) {
                continue;
            }
            let mut keep = vec![false; t.vertex_count()];
            let mut stack = vec![c];
            while let Some(v) = stack.pop() {
                keep[v] = true;
                stack.extend(t.children(v));
            }
            let mut sub = PointedTree::root_only();
            let mut map = vec![0; t.vertex_count()];
            for v in t.preorder() {
                if keep[v] {
                    let p = if v == c { 0 } else { map[t.parent(v)] };
                    map[v] = sub.add_child(p, t.edge_len(v));
                }
            }
            atoms.push(Atom {
                height: t.height(x),
                tree: sub,
            });
        }
    }
    atoms.sort_by(|a, b| a.height.total_cmp(&b.height));
    atoms
}

#[cfg(test)]
mod tests {
    use super::super::tests::fig123;
    use super::super::{code_l, equivalent};
    use super::*;

    fn decorated() -> PointedTree {
        let mut t = fig123();
        // bushes on the branch below a, at b, above leaf 2 and at mid {2,3}
        let m = t.insert_point(1, 0.4);
        t.add_child(m, 0.9);
        t.add_child(3, 0.3);
        t.add_child(4, 0.6);
        let q = t.insert_point(3, 1.2);
        let r = t.add_child(q, 0.2);
        t.add_child(r, 0.1);
        t.add_child(r, 0.4);
        t
    }

    #[test]
    fn split_bookkeeping() {
        let t = decorated();
        let s = split_n(&t);
        let total: f64 = s.components.iter().map(|c| c.total_length()).sum();
        assert!((total - t.total_length()).abs() < 1e-12);
        // {1,2} and {1,3} reduce to their root
        assert_eq!(s.component(3).vertex_count(), 1);
        assert_eq!(s.component(5).vertex_count(), 1);
        assert_eq!(s.component(0).vertex_count(), 1);
        let code = code_l(&t).unwrap();
        for a in 1..8 {
            let c = s.component(a);
            assert!((c.height(c.pointed()[1]) - code.get(a)).abs() < 1e-15);
        }
    }

    #[test]
    fn graft_split_identity() {
        let t = decorated();
        let s = split_n(&t);
        let g = graft_n(&code_l(&t).unwrap(), &s.spine_components()).unwrap();
        assert!(equivalent(&g, &t));
        assert!((g.total_length() - t.total_length()).abs() < 1e-12);
    }

    #[test]
    fn bare_segments_rebuild_discrete_tree() {
        let t = fig123();
        let code = code_l(&t).unwrap();
        let g = super::super::from_code(&code).unwrap();
        assert!(equivalent(&g, &t));
    }

    #[test]
    fn truncations() {
        let mut s = SpineTree::segment(3.0);
        let tip = s.tip();
        let x = s.tree.point_on_path(tip, 1.0);
        s.tree.add_child(x, 5.0);
        let y = s.tree.point_on_path(tip, 2.0);
        s.tree.add_child(y, 0.5);
        let plus = truncate2_plus(&s.tree, 1.0).unwrap();
        assert_eq!(plus.total_length(), 6.0);
        let minus = truncate2_minus(&s.tree, 1.0).unwrap();
        assert_eq!(minus.total_length(), 1.0);
        let tilde = truncate2_plus_tilde(&s, 2.0).unwrap();
        assert_eq!(tilde.total_length(), 7.5);
        assert_eq!(tilde.height(tilde.pointed()[1]), 2.0);
        // a root-non-branching spine tree truncated at 0 is trivial
        let s0 = SpineTree::segment(2.0);
        assert_eq!(truncate2_plus(&s0.tree, 0.0).unwrap().vertex_count(), 1);
        let mut bushy = s0.clone();
        bushy.tree.add_child(0, 1.0);
        assert_eq!(truncate2_plus(&bushy.tree, 0.0).unwrap().vertex_count(), 2);
        assert_eq!(clean_root(&bushy.tree).unwrap().total_length(), 2.0);
        let bounded = SpineTree {
            unbounded: false,
            ..SpineTree::segment(1.0)
        };
        assert!(truncate2_plus_tilde(&bounded, 2.0).is_err());
    }

    #[test]
    fn measure_round_trip() {
        let atoms = vec![
            Atom {
                height: 0.5,
                tree: PointedTree::segment(1.0),
            },
            Atom {
                height: 1.5,
                tree: fig123().span(),
            },
            Atom {
                height: 1.5,
                tree: PointedTree::segment(0.2),
            },
        ];
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|mut a| {
                a.tree.set_pointed(vec![0]).unwrap();
                a
            })
            .collect();
        let s = tree_from_measure(&atoms, 2.0).unwrap();
        let back = measure_from_tree(&s);
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].height, 0.5);
        assert!(equivalent(&back[0].tree, &atoms[0].tree));
        let again = tree_from_measure(&back, 2.0).unwrap();
        assert!(equivalent(&again.tree, &s.tree));
        assert!(tree_from_measure(
            &[Atom {
                height: -1.0,
                tree: PointedTree::root_only()
            }],
            1.0
        )
        .is_err());
    }
}
