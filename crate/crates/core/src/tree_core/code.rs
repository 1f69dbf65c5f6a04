//! Branch-length coding of pointed trees and its inverse through distance
//! matrices.

use super::{PointedTree, VertexId};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Symmetric `(n+1) x (n+1)` matrix of distances between the root and the
/// pointed vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(size: usize) -> Self {
        DistanceMatrix {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut d = Self::zeros(size);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != size {
                return Err(Error::Domain("distance matrix must be square".into()));
            }
            for (j, &x) in r.iter().enumerate() {
                if !(x >= 0.0) || (x - rows[j][i]).abs() > 0.0 || (i == j && x != 0.0) {
                    return Err(Error::Domain(
                        "distance matrix must be symmetric, non-negative, zero on the diagonal"
                            .into(),
                    ));
                }
                d.data[i * size + j] = x;
            }
        }
        Ok(d)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.size + j] = x;
        self.data[j * self.size + i] = x;
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        assert_eq!(self.size, other.size);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Outcome of the four-point test, with a violating quadruple if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourPoint {
    pub holds: bool,
    pub witness: Option<[usize; 4]>,
}

/// `d_ij + d_kl <= max(d_ik + d_jl, d_il + d_jk)` for all quadruples, up to
/// a rounding tolerance relative to the largest entry.
pub fn four_point_check(d: &DistanceMatrix) -> FourPoint {
    let n = d.size();
    let tol = 1e-10 * d.max_entry().max(1.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = d.get(i, j) + d.get(k, l);
                    let rhs = (d.get(i, k) + d.get(j, l)).max(d.get(i, l) + d.get(j, k));
                    if lhs > rhs + tol {
                        return FourPoint {
                            holds: false,
                            witness: Some([i, j, k, l]),
                        };
                    }
                }
            }
        }
    }
    FourPoint {
        holds: true,
        witness: None,
    }
}

/// Branch lengths `(l_A)` indexed by nonempty `A ⊆ {1..n}` as bitmasks
/// (bit `k-1` set when `k ∈ A`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchCode {
    n: usize,
    lengths: Vec<f64>,
}

impl BranchCode {
    pub fn new(n: usize, lengths: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 20 || lengths.len() != (1 << n) - 1 {
            return Err(Error::Domain(format!(
                "a code for n = {n} needs 2^n - 1 entries"
            )));
        }
        if lengths.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain(
                "branch lengths must be finite and non-negative".into(),
            ));
        }
        Ok(BranchCode { n, lengths })
    }

    pub fn zeros(n: usize) -> Self {
        BranchCode {
            n,
            lengths: vec![0.0; (1 << n) - 1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `l_A` for the bitmask `a`.
    pub fn get(&self, a: usize) -> f64 {
        self.lengths[a - 1]
    }

    pub fn set(&mut self, a: usize, x: f64) {
        self.lengths[a - 1] = x;
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn total(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &BranchCode) -> f64 {
        assert_eq!(self.n, other.n);
        self.lengths
            .iter()
            .zip(&other.lengths)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `v_A`, `w_A` and `l_A = d(w_A, v_A)` for one subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub v: VertexId,
    pub w: VertexId,
    pub length: f64,
}

/// `(v_A, w_A, l_A)` for every nonempty `A`, indexed by `mask - 1`.
///
/// `v_A` is the most recent common ancestor of `{v_k, k ∈ A}` and `w_A` the
/// highest of the `v_{A ∪ {k}}` over `k ∉ A` (the root included).
pub fn mrca_table(t: &PointedTree) -> Vec<Cluster> {
    let n = t.n_pointed();
    let full = (1usize << n) - 1;
    // v for every subset of {0..n}: index mask over {1..n}, root added separately
    let mut v = vec![0; full + 1];
    for a in 1..=full {
        let low = a.trailing_zeros() as usize;
        let rest = a & (a - 1);
        v[a] = if rest == 0 {
            t.pointed()[low + 1]
        } else {
            t.mrca(v[rest], t.pointed()[low + 1])
        };
    }
    (1..=full)
        .map(|a| {
            let mut w = 0;
            for k in 0..n {
                if a & (1 << k) == 0 {
                    let cand = v[a | (1 << k)];
                    if t.height(cand) > t.height(w) {
                        w = cand;
                    }
                }
            }
            Cluster {
                v: v[a],
                w,
                length: t.height(v[a]) - t.height(w),
            }
        })
        .collect()
}

/// `L_n(T, v)`.
pub fn code_l(t: &PointedTree) -> Result<BranchCode> {
    let n = t.n_pointed();
    if n == 0 {
        return Err(Error::Domain(
            "code needs at least one pointed vertex".into(),
        ));
    }
    BranchCode::new(n, mrca_table(t).into_iter().map(|c| c.length).collect())
}

/// `L(d)` for a matrix satisfying the four-point condition.
pub fn matrix_l(d: &DistanceMatrix) -> Result<BranchCode> {
    let size = d.size();
    if size < 2 {
        return Err(Error::Domain(
            "matrix must include at least one pointed vertex".into(),
        ));
    }
    if let Some([i, j, k, l]) = four_point_check(d).witness {
        return Err(Error::FourPoint(i, j, k, l));
    }
    let n = size - 1;
    let tol = 1e-12 * d.max_entry().max(1.0);
    let mut out = BranchCode::zeros(n);
    for a in 1..(1usize << n) {
        let inside: Vec<usize> = (1..=n).filter(|&k| a & (1 << (k - 1)) != 0).collect();
        let outside: Vec<usize> = (0..=n)
            .filter(|&k| k == 0 || a & (1 << (k - 1)) == 0)
            .collect();
        let mut best = f64::INFINITY;
        for &i in &inside {
            for &j in &inside {
                for &ip in &outside {
                    for &jp in &outside {
                        let x = d.get(i, ip) + d.get(i, jp) + d.get(j, ip) + d.get(j, jp)
                            - 2.0 * d.get(i, j)
                            - 2.0 * d.get(ip, jp);
                        best = best.min(x.max(0.0));
                    }
                }
            }
        }
        let l = best / 4.0;
        out.set(a, if l < tol { 0.0 } else { l });
    }
    Ok(out)
}

/// `D(l)`: `D_ij = sum of l_A over A separating i and j`.
pub fn code_d(code: &BranchCode) -> DistanceMatrix {
    let n = code.n();
    let mut d = DistanceMatrix::zeros(n + 1);
    let member = |a: usize, i: usize| i > 0 && a & (1 << (i - 1)) != 0;
    for i in 0..=n {
        for j in (i + 1)..=n {
            let s: f64 = (1..(1usize << n))
                .filter(|&a| member(a, i) != member(a, j))
                .map(|a| code.get(a))
                .sum();
            d.set(i, j, s);
        }
    }
    d
}

/// Positive-length clusters ordered so that every cluster comes after all
/// clusters strictly containing it, with the cluster each one hangs from.
pub(crate) fn cluster_order(code: &BranchCode) -> Result<Vec<(usize, Option<usize>)>> {
    let full = (1usize << code.n()) - 1;
    let mut pos: Vec<usize> = (1..=full).filter(|&a| code.get(a) > 0.0).collect();
    for (x, &a) in pos.iter().enumerate() {
        for &b in &pos[x + 1..] {
            let laminar = a & b == 0 || a & b == a || a & b == b;
            if !laminar {
                return Err(Error::InvalidTree(format!(
                    "code has crossing clusters {a:#b} and {b:#b}"
                )));
            }
        }
    }
    pos.sort_by_key(|&a| (std::cmp::Reverse(a.count_ones()), a));
    Ok(pos
        .iter()
        .map(|&a| {
            let parent = pos
                .iter()
                .copied()
                .filter(|&c| c != a && c & a == a)
                .min_by_key(|c| c.count_ones());
            (a, parent)
        })
        .collect())
}

/// The discrete tree `L_n^{-1}(l)`.
pub fn from_code(code: &BranchCode) -> Result<PointedTree> {
    let comps: Vec<super::SpineTree> = (1..(1usize << code.n()))
        .map(|a| super::SpineTree::segment(code.get(a)))
        .collect();
    super::graft_n(code, &comps)
}
