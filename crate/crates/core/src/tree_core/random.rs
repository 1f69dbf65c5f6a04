//! Random finite trees for property checks.

use super::split::Atom;
use super::PointedTree;
use crate::rng::RandomStream;
use rand::Rng;

fn edge(rng: &mut RandomStream) -> f64 {
    0.05 + rng.random::<f64>() * 1.5
}

/// A random rooted tree with `2..=max_vertices` vertices and `n_pointed`
/// pointed vertices drawn among all vertices, root and repeats included.
pub fn random_tree(n_pointed: usize, max_vertices: usize, rng: &mut RandomStream) -> PointedTree {
    grow(n_pointed, max_vertices, 0, rng)
}

/// Like [`random_tree`] but the root has exactly one child.
pub fn random_root_non_branching(
    n_pointed: usize,
    max_vertices: usize,
    rng: &mut RandomStream,
) -> PointedTree {
    grow(n_pointed, max_vertices, 1, rng)
}

fn grow(
    n_pointed: usize,
    max_vertices: usize,
    lowest_parent: usize,
    rng: &mut RandomStream,
) -> PointedTree {
    let m = rng.random_range(2..=max_vertices.max(2));
    let mut t = PointedTree::root_only();
    for k in 1..m {
        let p = if k == 1 {
            0
        } else {
            rng.random_range(lowest_parent..k)
        };
        t.add_child(p, edge(rng));
    }
    let leaves = t.leaves();
    for _ in 0..n_pointed {
        // mostly leaves, sometimes any vertex
        let v = if rng.random::<f64>() < 0.7 {
            leaves[rng.random_range(0..leaves.len())]
        } else {
            rng.random_range(0..m)
        };
        t.push_pointed(v);
    }
    t
}

/// A random tree whose root has a single child.
pub fn random_planted(max_vertices: usize, rng: &mut RandomStream) -> PointedTree {
    let mut t = PointedTree::segment(edge(rng));
    t.set_pointed(vec![0]).expect("root");
    let rest = random_tree(0, max_vertices.saturating_sub(1).max(2), rng);
    let tip = t.vertex_count() - 1;
    let end = t.children(tip).len();
    t.attach(tip, &rest, end);
    t
}

/// Atoms with random heights in `[0, max_height]` and planted trees.
pub fn random_atoms(
    count: usize,
    max_height: f64,
    max_vertices: usize,
    rng: &mut RandomStream,
) -> Vec<Atom> {
    (0..count)
        .map(|_| Atom {
            height: rng.random::<f64>() * max_height,
            tree: random_planted(max_vertices, rng),
        })
        .collect()
}

/// Same shape with every edge length multiplied by `1 + U(-eps, eps)`.
pub fn perturb_lengths(t: &PointedTree, eps: f64, rng: &mut RandomStream) -> PointedTree {
    let mut out = PointedTree::root_only();
    let mut map = vec![0; t.vertex_count()];
    for v in t.preorder().into_iter().skip(1) {
        let f = 1.0 + eps * (2.0 * rng.random::<f64>() - 1.0);
        map[v] = out.add_child(map[t.parent(v)], t.edge_len(v) * f);
    }
    out.set_pointed(t.pointed().iter().map(|&v| map[v]).collect())
        .expect("root first");
    out
}

/// Same tree with every edge length multiplied by `factor`.
pub fn scale_lengths(t: &PointedTree, factor: f64) -> PointedTree {
    let mut out = PointedTree::root_only();
    let mut map = vec![0; t.vertex_count()];
    for v in t.preorder().into_iter().skip(1) {
        map[v] = out.add_child(map[t.parent(v)], t.edge_len(v) * factor);
    }
    out.set_pointed(t.pointed().iter().map(|&v| map[v]).collect())
        .expect("root first");
    out
}
