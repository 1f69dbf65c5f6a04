//! Bounds on the pointed Gromov–Hausdorff distance between finite trees.
//!
//! * [`gh_lower`]: half the largest discrepancy between pointed distances.
//! * [`gh_upper`]: half the exact distortion of an explicit correspondence
//!   that matches the spans branch by branch and sends every other point
//!   to the image of its projection.
//! * [`gh_exact_small`]: exhaustive search over correspondences between
//!   `delta`-nets, for very small trees.

use crate::error::{Error, Result};
use crate::tree_core::{equivalent, mrca_table, PointedTree, VertexId};
use serde::{Deserialize, Serialize};

/// An interval containing the distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBound {
    pub lower: f64,
    pub upper: f64,
}

impl DistanceBound {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Largest vertex count accepted by [`gh_exact_small`] after refinement.
pub const EXACT_MAX_VERTICES: usize = 12;

fn same_arity(a: &PointedTree, b: &PointedTree) -> Result<()> {
    if a.n_pointed() == b.n_pointed() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "pointed arity mismatch: {} vs {}",
            a.n_pointed(),
            b.n_pointed()
        )))
    }
}

pub fn gh_lower(a: &PointedTree, b: &PointedTree) -> Result<f64> {
    same_arity(a, b)?;
    Ok(0.5 * a.pointed_distances().max_abs_diff(&b.pointed_distances()))
}

/// All vertex-to-vertex distances.
pub fn distance_table(t: &PointedTree) -> Vec<Vec<f64>> {
    let n = t.vertex_count();
    let mut d = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in (x + 1)..n {
            let v = t.distance(x, y);
            d[x][y] = v;
            d[y][x] = v;
        }
    }
    d
}

/// Position of every vertex relative to the span branches.
struct Segments {
    /// branch subset of the vertex or of its projection, 0 at the root
    mask: Vec<usize>,
    offset: Vec<f64>,
    /// `l_A` indexed by mask, 0 for mask 0
    length: Vec<f64>,
    /// `w_A` indexed by mask, the root for mask 0
    base: Vec<VertexId>,
    top: Vec<VertexId>,
    /// span vertices of each branch sorted by offset
    members: Vec<Vec<(f64, VertexId)>>,
}

impl Segments {
    fn new(t: &PointedTree) -> Segments {
        let n = t.n_pointed();
        let full = (1usize << n) - 1;
        let table = mrca_table(t);
        let mut length = vec![0.0; full + 1];
        let mut base = vec![0; full + 1];
        let mut top = vec![0; full + 1];
        for (k, c) in table.iter().enumerate() {
            length[k + 1] = c.length;
            base[k + 1] = c.w;
            top[k + 1] = c.v;
        }
        let on = t.on_span();
        let mut cl = vec![0usize; t.vertex_count()];
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
        let mut mask = vec![0; t.vertex_count()];
        let mut offset = vec![0.0; t.vertex_count()];
        let mut members = vec![Vec::new(); full + 1];
        for v in t.preorder().into_iter().skip(1) {
            if on[v] {
                let a = cl[v];
                mask[v] = a;
                offset[v] = t.height(v) - t.height(base[a]);
                members[a].push((offset[v], v));
            } else {
                let p = t.parent(v);
                mask[v] = mask[p];
                offset[v] = offset[p];
            }
        }
        for m in &mut members {
            m.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        Segments {
            mask,
            offset,
            length,
            base,
            top,
            members,
        }
    }

    /// The point at `min(s, l_A)` on branch `A`, which must be a vertex.
    fn locate(&self, a: usize, s: f64) -> VertexId {
        let o = s.min(self.length[a]);
        if a == 0 || o <= 0.0 {
            return self.base[a];
        }
        self.members[a]
            .iter()
            .min_by(|x, y| (x.0 - o).abs().total_cmp(&(y.0 - o).abs()))
            .map_or(self.top[a], |&(_, v)| v)
    }
}

/// Inserts the offsets of both trees on every branch into both trees so the
/// correspondence is affine between vertices.
fn refine_pair(a: &PointedTree, b: &PointedTree) -> (PointedTree, PointedTree) {
    let (sa, sb) = (Segments::new(a), Segments::new(b));
    let scale = a.max_height().max(b.max_height()).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut ra = a.clone();
    let mut rb = b.clone();
    for mask in 1..sa.length.len() {
        let mut offsets: Vec<f64> = sa.members[mask]
            .iter()
            .chain(&sb.members[mask])
            .map(|x| x.0)
            .collect();
        offsets.push(sa.length[mask]);
        offsets.push(sb.length[mask]);
        for (t, s) in [(&mut ra, &sa), (&mut rb, &sb)] {
            let len = s.length[mask];
            for &o in &offsets {
                if o > tol && o < len - tol && s.members[mask].iter().all(|x| (x.0 - o).abs() > tol)
                {
                    let h = t.height(s.base[mask]) + o;
                    t.point_on_path(s.top[mask], h);
                }
            }
        }
    }
    (ra, rb)
}

fn distortion(da: &[Vec<f64>], db: &[Vec<f64>], pairs: &[(VertexId, VertexId)]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &(x, xp)) in pairs.iter().enumerate() {
        for &(y, yp) in &pairs[i..] {
            worst = worst.max((da[x][y] - db[xp][yp]).abs());
        }
    }
    worst
}

/// The correspondence used by [`gh_upper`], on the refined trees, as vertex pairs.
fn projection_correspondence(
    a: &PointedTree,
    b: &PointedTree,
) -> (PointedTree, PointedTree, Vec<(VertexId, VertexId)>) {
    let (ra, rb) = refine_pair(a, b);
    let (sa, sb) = (Segments::new(&ra), Segments::new(&rb));
    let mut pairs: Vec<(VertexId, VertexId)> =
        Vec::with_capacity(ra.vertex_count() + rb.vertex_count());
    for x in 0..ra.vertex_count() {
        pairs.push((x, sb.locate(sa.mask[x], sa.offset[x])));
    }
    for y in 0..rb.vertex_count() {
        pairs.push((sa.locate(sb.mask[y], sb.offset[y]), y));
    }
    pairs.extend(
        ra.pointed()
            .iter()
            .copied()
            .zip(rb.pointed().iter().copied()),
    );
    pairs.sort_unstable();
    pairs.dedup();
    (ra, rb, pairs)
}

pub fn gh_upper(a: &PointedTree, b: &PointedTree) -> Result<f64> {
    same_arity(a, b)?;
    if equivalent(a, b) {
        return Ok(0.0);
    }
    let (ra, rb, pairs) = projection_correspondence(a, b);
    Ok(0.5 * distortion(&distance_table(&ra), &distance_table(&rb), &pairs))
}

/// Both bounds at once.
pub fn gh_bounds(a: &PointedTree, b: &PointedTree) -> Result<DistanceBound> {
    Ok(DistanceBound {
        lower: gh_lower(a, b)?,
        upper: gh_upper(a, b)?,
    })
}

/// Subdivides every edge into pieces of length at most `delta`.
pub fn refine(t: &PointedTree, delta: f64) -> PointedTree {
    let mut r = t.clone();
    for v in 1..t.vertex_count() {
        let pieces = (t.edge_len(v) / delta).ceil() as usize;
        let step = t.edge_len(v) / pieces as f64;
        let base = t.height(t.parent(v));
        // bottom-up so each new point lands on the edge directly above `v`
        for k in 1..pieces {
            r.insert_point(v, base + k as f64 * step);
        }
    }
    r
}

/// Pointed Gromov–Hausdorff distance between finite metric spaces, with
/// `pinned` pairs forced into the correspondence.
pub fn gh_finite(da: &[Vec<f64>], db: &[Vec<f64>], pinned: &[(usize, usize)]) -> f64 {
    let mut cands: Vec<f64> = Vec::new();
    for ra in da {
        for &x in ra {
            for rb in db {
                for &y in rb {
                    cands.push((x - y).abs());
                }
            }
        }
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let floor = distortion(da, db, pinned);
    let start = cands.partition_point(|&c| c < floor);
    let (mut lo, mut hi) = (start, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if Search::feasible(da, db, pinned, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    0.5 * cands[lo]
}

struct Search<'a> {
    da: &'a [Vec<f64>],
    db: &'a [Vec<f64>],
    tau: f64,
    rel: Vec<(usize, usize)>,
}

impl Search<'_> {
    fn feasible(da: &[Vec<f64>], db: &[Vec<f64>], pinned: &[(usize, usize)], tau: f64) -> bool {
        let mut s = Search {
            da,
            db,
            tau: tau * (1.0 + 1e-12),
            rel: pinned.to_vec(),
        };
        s.assign(0)
    }

    fn fits(&self, x: usize, y: usize) -> bool {
        self.rel
            .iter()
            .all(|&(u, w)| (self.da[x][u] - self.db[y][w]).abs() <= self.tau)
    }

    /// Variables `0..na` choose an image for each point of the first space,
    /// the next `nb` a preimage for each point of the second.
    fn assign(&mut self, k: usize) -> bool {
        let (na, nb) = (self.da.len(), self.db.len());
        if k == na + nb {
            return true;
        }
        let covered = if k < na {
            self.rel.iter().any(|&(u, _)| u == k)
        } else {
            self.rel.iter().any(|&(_, w)| w == k - na)
        };
        if covered {
            return self.assign(k + 1);
        }
        let options = if k < na { nb } else { na };
        for j in 0..options {
            let pair = if k < na { (k, j) } else { (j, k - na) };
            if self.fits(pair.0, pair.1) {
                self.rel.push(pair);
                if self.assign(k + 1) {
                    return true;
                }
                self.rel.pop();
            }
        }
        false
    }
}

/// Exact distance between the `delta`-refinements, widened by the
/// refinement error and clipped to the analytic bounds.
pub fn gh_exact_small(a: &PointedTree, b: &PointedTree, delta: f64) -> Result<DistanceBound> {
    same_arity(a, b)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "resolution must be positive, got {delta}"
        )));
    }
    let (ra, rb) = (refine(a, delta), refine(b, delta));
    for r in [&ra, &rb] {
        if r.vertex_count() > EXACT_MAX_VERTICES {
            return Err(Error::SizeLimit(format!(
                "{} vertices after refinement, limit {EXACT_MAX_VERTICES}",
                r.vertex_count()
            )));
        }
    }
    let pinned: Vec<(usize, usize)> = ra
        .pointed()
        .iter()
        .copied()
        .zip(rb.pointed().iter().copied())
        .collect();
    let g = gh_finite(&distance_table(&ra), &distance_table(&rb), &pinned);
    let b0 = gh_bounds(a, b)?;
    let lower = (g - delta).max(b0.lower);
    let upper = (g + delta).min(b0.upper).max(lower);
    Ok(DistanceBound { lower, upper })
}

/// `int_0^inf e^{-t} (1 ∧ d_GH(r_t T, r_t T')) dt` as an interval, with a
/// 256-point midpoint rule up to the joint height plus 10 and the constant
/// integrand integrated exactly beyond.
pub fn lgh_numeric(a: &PointedTree, b: &PointedTree, points: usize) -> Result<DistanceBound> {
    same_arity(a, b)?;
    let points = points.max(1);
    let lower = gh_lower(a, b)?.min(1.0);
    let horizon = a.max_height().max(b.max_height()) + 10.0;
    let h = horizon / points as f64;
    let mut upper = 0.0;
    for k in 0..points {
        let t = (k as f64 + 0.5) * h;
        let w = (-(k as f64) * h).exp() - (-((k + 1) as f64) * h).exp();
        upper += w * gh_upper(&a.truncate(t), &b.truncate(t))?.min(1.0);
    }
    upper += (-horizon).exp() * gh_upper(a, b)?.min(1.0);
    // r_t keeps the spans, so the lower integrand does not depend on t
    Ok(DistanceBound {
        lower,
        upper: upper.max(lower),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(len: f64) -> PointedTree {
        PointedTree::segment(len)
    }

    #[test]
    fn segments() {
        assert_eq!(gh_lower(&seg(1.0), &seg(2.0)).unwrap(), 0.5);
        assert_eq!(gh_upper(&seg(1.0), &seg(2.0)).unwrap(), 0.5);
        assert_eq!(gh_upper(&seg(1.0), &seg(1.0)).unwrap(), 0.0);
        assert!(gh_lower(&seg(1.0), &PointedTree::root_only()).is_err());
    }

    #[test]
    fn unpointed_segments_exact() {
        let mut a = seg(0.004);
        a.set_pointed(vec![0]).unwrap();
        let mut b = seg(0.007);
        b.set_pointed(vec![0]).unwrap();
        let delta = 1e-3;
        let e = gh_exact_small(&a, &b, delta).unwrap();
        assert!(
            e.lower <= 0.0015 + 1e-12 && 0.0015 <= e.upper + 1e-12,
            "{e:?}"
        );
        assert!(gh_lower(&a, &b).unwrap() <= e.upper);
        assert!(e.lower <= gh_upper(&a, &b).unwrap());
    }

    #[test]
    fn size_limit() {
        assert!(matches!(
            gh_exact_small(&seg(1.0), &seg(1.0), 1e-3),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn finite_search_matches_brute_force() {
        // three points on a line vs an equilateral triangle of side 1
        let line = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ];
        let tri = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        assert_eq!(gh_finite(&line, &tri, &[]), 0.5);
        assert_eq!(gh_finite(&line, &line, &[(0, 0)]), 0.0);
        assert_eq!(gh_finite(&line, &line, &[(0, 1)]), 0.5);
    }

    #[test]
    fn lgh_basic() {
        let t = crate::tree_core::from_text("0 - 0 - -\n1 0 1.0 - -\n2 1 1.0 1 -\n3 1 0.5 2 -\n")
            .unwrap();
        assert_eq!(lgh_numeric(&t, &t, 64).unwrap().upper, 0.0);
        let u = t.growth(0.3);
        let l = lgh_numeric(&t, &u, 64).unwrap();
        assert!(l.lower <= l.upper && l.upper <= 1.0);
    }
}
