//! Finite rooted trees with positive edge lengths, an ordered list of pointed
//! vertices (root first) and an optional marked subtree containing the root.
//!
//! Vertex 0 is the root. Children keep their planar order. Heights are stored
//! next to edge lengths so that constructions which set a height directly
//! (all skeleton leaves at exactly `t`) stay bit-exact.

mod canon;
mod code;
mod io;
pub mod random;
mod split;

pub use canon::{canonical, equivalent, Canonical, CANON_TOL};
pub use code::{
    code_d, code_l, four_point_check, from_code, matrix_l, mrca_table, BranchCode, Cluster,
    DistanceMatrix, FourPoint,
};
pub use io::{from_text, to_text};
pub use split::{
    clean_root, graft_n, measure_from_tree, split_n, tree_from_measure, truncate2_minus,
    truncate2_plus, truncate2_plus_tilde, Atom, SpineTree, Split,
};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use rand::Rng;

pub type VertexId = usize;

/// Side of a graft relative to the branch it lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    /// left (`g`): new pointed vertices come before `v_i`
    Left,
    /// right (`d`): new pointed vertices come after `v_i`
    Right,
}

/// A point of the tree: on the edge `]parent(vertex), vertex]` at `height`,
/// or the root when `vertex == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePoint {
    pub vertex: VertexId,
    pub height: f64,
}

/// Cumulative weight on heights used to draw points from `f(H) dL`.
pub trait HeightLaw {
    /// Antiderivative of the density, increasing.
    fn cumulative(&self, h: f64) -> f64;
    /// Inverse of [`HeightLaw::cumulative`].
    fn inverse(&self, w: f64) -> f64;
}

/// Plain length measure: density 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct LengthLaw;

impl HeightLaw for LengthLaw {
    fn cumulative(&self, h: f64) -> f64 {
        h
    }
    fn inverse(&self, w: f64) -> f64 {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointedTree {
    parent: Vec<VertexId>,
    len: Vec<f64>,
    height: Vec<f64>,
    children: Vec<Vec<VertexId>>,
    pointed: Vec<VertexId>,
    marked: Option<Vec<bool>>,
}

impl Default for PointedTree {
    fn default() -> Self {
        Self::root_only()
    }
}

impl PointedTree {
    /// The trivial tree `{root}` with no pointed vertex besides the root.
    pub fn root_only() -> Self {
        PointedTree {
            parent: vec![0],
            len: vec![0.0],
            height: vec![0.0],
            children: vec![Vec::new()],
            pointed: vec![0],
            marked: None,
        }
    }

    /// `[0, len]` pointed at its tip (the root itself when `len == 0`).
    pub fn segment(len: f64) -> Self {
        let mut t = Self::root_only();
        let v = t.add_child(0, len);
        t.pointed.push(v);
        t
    }

    /// Adds a child of `p` at distance `len`. A zero length is contracted and
    /// returns `p`.
    pub fn add_child(&mut self, p: VertexId, len: f64) -> VertexId {
        assert!(
            len >= 0.0 && len.is_finite(),
            "edge length must be finite and non-negative"
        );
        if len == 0.0 {
            return p;
        }
        self.push_vertex(p, len, self.height[p] + len)
    }

    /// Adds a child of `p` at absolute height `h >= H(p)`.
    pub fn add_child_at_height(&mut self, p: VertexId, h: f64) -> VertexId {
        assert!(h >= self.height[p], "child below its parent");
        if h == self.height[p] {
            return p;
        }
        self.push_vertex(p, h - self.height[p], h)
    }

    fn push_vertex(&mut self, p: VertexId, len: f64, h: f64) -> VertexId {
        let id = self.parent.len();
        self.parent.push(p);
        self.len.push(len);
        self.height.push(h);
        self.children.push(Vec::new());
        self.children[p].push(id);
        if let Some(m) = &mut self.marked {
            m.push(false);
        }
        id
    }

    pub fn push_pointed(&mut self, v: VertexId) {
        assert!(v < self.parent.len());
        self.pointed.push(v);
    }

    /// Replaces the pointed list; the first entry must be the root.
    pub fn set_pointed(&mut self, pointed: Vec<VertexId>) -> Result<()> {
        if pointed.first() != Some(&0) || pointed.iter().any(|&v| v >= self.parent.len()) {
            return Err(Error::InvalidTree(
                "pointed list must start at the root".into(),
            ));
        }
        self.pointed = pointed;
        Ok(())
    }

    /// Installs a mark set; it must contain the root and be closed under parent.
    pub fn set_marks(&mut self, marks: Vec<bool>) -> Result<()> {
        if marks.len() != self.parent.len() || !marks[0] {
            return Err(Error::InvalidTree("mark set must contain the root".into()));
        }
        if (1..marks.len()).any(|v| marks[v] && !marks[self.parent[v]]) {
            return Err(Error::InvalidTree(
                "mark set is not a rooted subtree".into(),
            ));
        }
        self.marked = Some(marks);
        Ok(())
    }

    pub fn clear_marks(&mut self) {
        self.marked = None;
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: VertexId) -> VertexId {
        self.parent[v]
    }

    pub fn edge_len(&self, v: VertexId) -> f64 {
        self.len[v]
    }

    pub fn height(&self, v: VertexId) -> f64 {
        self.height[v]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn pointed(&self) -> &[VertexId] {
        &self.pointed
    }

    /// Number of pointed vertices besides the root.
    pub fn n_pointed(&self) -> usize {
        self.pointed.len() - 1
    }

    pub fn marks(&self) -> Option<&[bool]> {
        self.marked.as_deref()
    }

    pub fn is_marked(&self, v: VertexId) -> bool {
        self.marked.as_ref().is_some_and(|m| m[v])
    }

    /// Maximal height.
    pub fn max_height(&self) -> f64 {
        self.height.iter().copied().fold(0.0, f64::max)
    }

    /// Total length `sum of edge lengths`.
    pub fn total_length(&self) -> f64 {
        // the empty float sum is -0
        self.len.iter().skip(1).fold(0.0, |a, x| a + x)
    }

    /// Vertices in planar depth-first preorder.
    pub fn preorder(&self) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.parent.len());
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }

    /// Leaves in planar left-to-right order.
    pub fn leaves(&self) -> Vec<VertexId> {
        self.preorder()
            .into_iter()
            .filter(|&v| v != 0 && self.children[v].is_empty())
            .collect()
    }

    fn depth(&self, mut v: VertexId) -> usize {
        let mut d = 0;
        while v != 0 {
            v = self.parent[v];
            d += 1;
        }
        d
    }

    /// Most recent common ancestor of two vertices.
    pub fn mrca(&self, mut a: VertexId, mut b: VertexId) -> VertexId {
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        while da > db {
            a = self.parent[a];
            da -= 1;
        }
        while db > da {
            b = self.parent[b];
            db -= 1;
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    pub fn distance(&self, a: VertexId, b: VertexId) -> f64 {
        let m = self.mrca(a, b);
        (self.height[a] - self.height[m]) + (self.height[b] - self.height[m])
    }

    /// Whether `a` lies on `[root, v]`.
    pub fn is_ancestor(&self, a: VertexId, mut v: VertexId) -> bool {
        loop {
            if v == a {
                return true;
            }
            if v == 0 {
                return false;
            }
            v = self.parent[v];
        }
    }

    /// Distances between pointed vertices, root included.
    pub fn pointed_distances(&self) -> DistanceMatrix {
        let k = self.pointed.len();
        let mut d = DistanceMatrix::zeros(k);
        for i in 0..k {
            for j in (i + 1)..k {
                let x = self.distance(self.pointed[i], self.pointed[j]);
                d.set(i, j, x);
            }
        }
        d
    }

    /// Membership of each vertex in `Span`.
    pub fn on_span(&self) -> Vec<bool> {
        let mut on = vec![false; self.parent.len()];
        on[0] = true;
        for &p in &self.pointed[1..] {
            let mut v = p;
            while !on[v] {
                on[v] = true;
                v = self.parent[v];
            }
        }
        on
    }

    /// The subtree spanned by the root and the pointed vertices.
    pub fn span(&self) -> PointedTree {
        self.extract(&self.on_span()).0
    }

    /// Projection onto `Span`.
    pub fn project(&self, p: TreePoint) -> TreePoint {
        let on = self.on_span();
        if on[p.vertex] {
            return p;
        }
        let mut v = self.parent[p.vertex];
        while !on[v] {
            v = self.parent[v];
        }
        TreePoint {
            vertex: v,
            height: self.height[v],
        }
    }

    /// Keeps a parent-closed vertex set, relabelled in planar preorder.
    /// Returns the new tree and the old-to-new id map.
    pub(crate) fn extract(&self, keep: &[bool]) -> (PointedTree, Vec<Option<VertexId>>) {
        debug_assert!(keep[0]);
        let mut map = vec![None; self.parent.len()];
        let mut out = PointedTree::root_only();
        if let Some(m) = &self.marked {
            out.marked = Some(vec![m[0]]);
        }
        map[0] = Some(0);
        for v in self.preorder().into_iter().skip(1) {
            if !keep[v] {
                continue;
            }
            let p = map[self.parent[v]].expect("kept set is parent-closed");
            let id = out.push_vertex(p, self.len[v], self.height[v]);
            if let (Some(m), Some(om)) = (&self.marked, &mut out.marked) {
                om[id] = m[v];
            }
            map[v] = Some(id);
        }
        out.pointed = self.pointed.iter().map(|&v| map[v].unwrap_or(0)).collect();
        (out, map)
    }

    /// Splits the edge above `v` at height `h` and returns the vertex at that
    /// height (`v` or its parent when `h` is an endpoint).
    pub fn insert_point(&mut self, v: VertexId, h: f64) -> VertexId {
        let p = self.parent[v];
        if v == 0 || h >= self.height[v] {
            return v;
        }
        if h <= self.height[p] {
            return p;
        }
        let id = self.parent.len();
        self.parent.push(p);
        self.len.push(h - self.height[p]);
        self.height.push(h);
        self.children.push(vec![v]);
        let slot = self.children[p]
            .iter()
            .position(|&c| c == v)
            .expect("child listed");
        self.children[p][slot] = id;
        self.parent[v] = id;
        self.len[v] = self.height[v] - h;
        if let Some(m) = &mut self.marked {
            let mv = m[v];
            m.push(mv);
        }
        id
    }

    /// The vertex at height `min(h, H(v))` on `[root, v]`, inserted if needed.
    pub fn point_on_path(&mut self, v: VertexId, h: f64) -> VertexId {
        if h >= self.height[v] {
            return v;
        }
        let mut y = v;
        while y != 0 && self.height[self.parent[y]] >= h {
            y = self.parent[y];
        }
        self.insert_point(y, h)
    }

    /// Copies `other` with its root identified with `at`; its root's children
    /// are inserted among `at`'s children at `position`. Returns the id map.
    pub(crate) fn attach(
        &mut self,
        at: VertexId,
        other: &PointedTree,
        position: usize,
    ) -> Vec<VertexId> {
        let mut map = vec![0; other.parent.len()];
        map[0] = at;
        let mut inserted = Vec::new();
        for v in other.preorder().into_iter().skip(1) {
            let p = map[other.parent[v]];
            let id = self.push_vertex(p, other.len[v], self.height[p] + other.len[v]);
            if other.parent[v] == 0 {
                // push_vertex appended it; it is moved into place below
                self.children[at].pop();
                inserted.push(id);
            }
            map[v] = id;
        }
        let pos = position.min(self.children[at].len());
        self.children[at].splice(pos..pos, inserted);
        map
    }

    /// `T ⊛^side_{i,h} T'`: grafts `other` on `[root, v_i]` at height `h`.
    pub fn graft_at(
        &self,
        i: usize,
        h: f64,
        side: Side,
        other: &PointedTree,
    ) -> Result<PointedTree> {
        if i >= self.pointed.len() {
            return Err(Error::InvalidTree(format!("no pointed vertex {i}")));
        }
        let vi = self.pointed[i];
        if !(h >= 0.0) || h > self.height[vi] {
            return Err(Error::Domain(format!(
                "graft height {h} above H(v_{i}) = {}",
                self.height[vi]
            )));
        }
        let mut t = self.clone();
        let x = t.point_on_path(vi, h);
        let towards = t.children[x].iter().position(|&c| t.is_ancestor(c, vi));
        let position = match (towards, side) {
            (Some(k), Side::Left) => k,
            (Some(k), Side::Right) => k + 1,
            (None, Side::Left) => 0,
            (None, Side::Right) => t.children[x].len(),
        };
        let map = t.attach(x, other, position);
        let new: Vec<VertexId> = other.pointed[1..].iter().map(|&v| map[v]).collect();
        let at = if i == 0 || side == Side::Right {
            i + 1
        } else {
            i
        };
        t.pointed.splice(at..at, new);
        Ok(t)
    }

    /// Grafts on `[root, v_i]` at height `h` a branch reaching the absolute
    /// height `top`, whose tip becomes a new pointed vertex. The tip height is
    /// set exactly.
    pub fn graft_branch_to(&self, i: usize, h: f64, side: Side, top: f64) -> Result<PointedTree> {
        if !(top >= h) {
            return Err(Error::Domain(format!(
                "branch top {top} below graft height {h}"
            )));
        }
        let mut t = self.graft_at(i, h, side, &PointedTree::segment(0.0))?;
        let k = if i == 0 || side == Side::Right {
            i + 1
        } else {
            i
        };
        let x = t.pointed[k];
        let tip = t.add_child_at_height(x, top);
        if tip != x {
            // the new child must sit next to the path child on the requested side
            t.children[x].pop();
            let vi = t.pointed[if side == Side::Left && i != 0 {
                k + 1
            } else {
                i
            }];
            let towards = t.children[x].iter().position(|&c| t.is_ancestor(c, vi));
            let pos = match (towards, side) {
                (Some(j), Side::Left) => j,
                (Some(j), Side::Right) => j + 1,
                (None, Side::Left) => 0,
                (None, Side::Right) => t.children[x].len(),
            };
            t.children[x].insert(pos, tip);
        }
        t.pointed[k] = tip;
        Ok(t)
    }

    /// Lifts every pointed vertex to the absolute height `top`: a leaf pointed
    /// once has its edge extended, any other pointed vertex gets a new child.
    pub fn extend_pointed_to(&mut self, top: f64) {
        let mut seen = vec![0usize; self.vertex_count()];
        for &v in &self.pointed[1..] {
            seen[v] += 1;
        }
        for k in 1..self.pointed.len() {
            let v = self.pointed[k];
            if v != 0 && seen[v] == 1 && self.children[v].is_empty() {
                self.len[v] += top - self.height[v];
                self.height[v] = top;
            } else {
                self.pointed[k] = self.add_child_at_height(v, top);
            }
        }
    }

    /// `T ⊛_i T'`: grafts on the pointed vertex `v_i` itself.
    pub fn graft_vertex(&self, i: usize, other: &PointedTree) -> Result<PointedTree> {
        let h = self.height[self.pointed[i]];
        self.graft_at(i, h, Side::Right, other)
    }

    /// Grafts a branch of length `h` on every pointed vertex; the tips become
    /// the new pointed vertices.
    pub fn growth(&self, h: f64) -> PointedTree {
        let mut t = self.clone();
        if h == 0.0 {
            return t;
        }
        for k in 1..t.pointed.len() {
            let v = t.pointed[k];
            t.pointed[k] = t.add_child(v, h);
        }
        t
    }

    /// `r_t`: points of height at most `t` together with the span.
    pub fn truncate(&self, t: f64) -> PointedTree {
        let mut tree = self.clone();
        let on = tree.on_span();
        for v in 1..on.len() {
            let p = tree.parent[v];
            if !on[v] && tree.height[p] < t && tree.height[v] > t {
                tree.insert_point(v, t);
            }
        }
        let on = tree.on_span();
        let keep: Vec<bool> = (0..tree.vertex_count())
            .map(|v| on[v] || tree.height[v] <= t)
            .collect();
        tree.extract(&keep).0
    }

    /// Draws a point with probability proportional to `f(H(x)) L(dx)`.
    pub fn sample_length_point<L: HeightLaw + ?Sized>(
        &self,
        law: &L,
        rng: &mut RandomStream,
    ) -> Result<TreePoint> {
        let weights: Vec<f64> = (0..self.vertex_count())
            .map(|v| {
                if v == 0 {
                    0.0
                } else {
                    law.cumulative(self.height[v]) - law.cumulative(self.height[self.parent[v]])
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("length measure has zero mass".into()));
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (v, &w) in weights.iter().enumerate() {
            if u < w {
                pick = v;
                break;
            }
            u -= w;
        }
        while weights[pick] == 0.0 {
            pick -= 1;
        }
        let lo = law.cumulative(self.height[self.parent[pick]]);
        let h = law.inverse(lo + rng.random::<f64>() * weights[pick]);
        let h = h.clamp(self.height[self.parent[pick]], self.height[pick]);
        Ok(TreePoint {
            vertex: pick,
            height: h,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The tree of the three-leaf example: root - a (1), a - 1 (2),
    /// a - b (0.5), b - 2 (1), b - 3 (1.5).
    pub(crate) fn fig123() -> PointedTree {
        let mut t = PointedTree::root_only();
        let a = t.add_child(0, 1.0);
        let l1 = t.add_child(a, 2.0);
        let b = t.add_child(a, 0.5);
        let l2 = t.add_child(b, 1.0);
        let l3 = t.add_child(b, 1.5);
        t.set_pointed(vec![0, l1, l2, l3]).unwrap();
        t
    }

    #[test]
    fn basic_queries() {
        let t = fig123();
        assert_eq!(t.total_length(), 6.0);
        assert_eq!(t.distance(t.pointed()[2], t.pointed()[3]), 2.5);
        assert_eq!(t.mrca(t.pointed()[1], t.pointed()[3]), 1);
        assert_eq!(t.leaves(), vec![2, 4, 5]);
    }

    #[test]
    fn span_of_discrete_tree_is_itself() {
        let t = fig123();
        assert_eq!(t.span(), t);
        let mut one = t.clone();
        one.set_pointed(vec![0, 4]).unwrap();
        let s = one.span();
        assert_eq!(s.vertex_count(), 4);
        assert_eq!(s.total_length(), 2.5);
    }

    #[test]
    fn projection() {
        let mut t = fig123();
        let bush = t.add_child(3, 0.7);
        let q = t.project(TreePoint {
            vertex: bush,
            height: 2.2,
        });
        assert_eq!(q.vertex, 3);
        assert_eq!(q.height, 1.5);
        let root = TreePoint {
            vertex: 0,
            height: 0.0,
        };
        assert_eq!(t.project(root), root);
    }

    #[test]
    fn graft_sides_only_change_order() {
        let t = fig123();
        let seg = PointedTree::segment(0.3);
        let g = t.graft_at(2, 1.2, Side::Left, &seg).unwrap();
        let d = t.graft_at(2, 1.2, Side::Right, &seg).unwrap();
        assert_eq!(g.n_pointed(), 4);
        assert_eq!(g.pointed()[2], d.pointed()[3]);
        assert_eq!(g.total_length(), 6.3);
        assert!(t.graft_at(2, 10.0, Side::Left, &seg).is_err());
        let same = t
            .graft_at(1, 0.5, Side::Right, &PointedTree::root_only())
            .unwrap();
        assert!(equivalent(&same, &t));
    }

    #[test]
    fn growth_lifts_pointed_vertices() {
        let t = fig123();
        let g = t.growth(0.25);
        for k in 1..=3 {
            assert_eq!(g.height(g.pointed()[k]), t.height(t.pointed()[k]) + 0.25);
        }
        assert_eq!(g.leaves().len(), 3);
        assert_eq!(t.growth(0.0), t);
    }

    #[test]
    fn truncation_keeps_span() {
        let mut t = fig123();
        t.add_child(1, 3.0);
        let r = t.truncate(2.0);
        assert!((r.total_length() - 7.0).abs() < 1e-12);
        assert_eq!(t.truncate(10.0), t);
    }
}
