//! Minimum spanning tree, single-linkage dendrogram and condensed tree.
//!
//! Edges are totally ordered by `(weight, lower endpoint, higher endpoint)`.
//! With that order the minimum spanning tree is unique, so Prim's algorithm
//! and any exact agglomerative construction produce the same hierarchy.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::metric::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    /// Lower endpoint.
    pub a: usize,
    /// Higher endpoint.
    pub b: usize,
    pub weight: f64,
}

impl MstEdge {
    fn new(u: usize, v: usize, weight: f64) -> Self {
        Self {
            a: u.min(v),
            b: u.max(v),
            weight,
        }
    }

    /// The documented total order on edges.
    pub fn order(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Prim's algorithm on a dense matrix, O(n^2), started from point 0.
pub fn minimum_spanning_tree(d: &DistanceMatrix) -> Vec<MstEdge> {
    let n = d.n();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<MstEdge>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let candidate = MstEdge::new(current, v, d.get(current, v));
            let slot = &mut best[v];
            if slot.is_none_or(|e| candidate.order(&e) == Ordering::Less) {
                *slot = Some(candidate);
            }
            let edge = slot.expect("just set");
            if next.is_none_or(|u| edge.order(&best[u].expect("candidate")) == Ordering::Less) {
                next = Some(v);
            }
        }
        let v = next.expect("unvisited vertex remains");
        in_tree[v] = true;
        edges.push(best[v].expect("candidate"));
        current = v;
    }
    edges
}

/// One agglomeration step. Node ids below `n` are points; merge `k` creates
/// node `n + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn size(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    pub fn root(&self) -> usize {
        self.n_points + self.merges.len() - 1
    }
}

/// Kruskal-style agglomeration over spanning-tree edges. Each merge lists
/// the smaller node id first.
pub fn single_linkage(n: usize, mst: &[MstEdge]) -> Dendrogram {
    let mut edges = mst.to_vec();
    edges.sort_by(MstEdge::order);
    let mut parent: Vec<usize> = (0..n).collect();
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for edge in edges {
        let ra = find(&mut parent, edge.a);
        let rb = find(&mut parent, edge.b);
        if ra == rb {
            continue;
        }
        let (na, nb) = (node_of[ra], node_of[rb]);
        let merged = size[ra] + size[rb];
        merges.push(Merge {
            left: na.min(nb),
            right: na.max(nb),
            distance: edge.weight,
            size: merged,
        });
        let (keep, drop) = if size[ra] >= size[rb] { (ra, rb) } else { (rb, ra) };
        parent[drop] = keep;
        size[keep] = merged;
        node_of[keep] = n + merges.len() - 1;
    }
    Dendrogram { n_points: n, merges }
}

/// Single-linkage hierarchy of a (mutual reachability) matrix.
pub fn dendrogram(d: &DistanceMatrix) -> Dendrogram {
    single_linkage(d.n(), &minimum_spanning_tree(d))
}

/// One edge of the condensed tree: `child` (a point when below
/// `n_points`, otherwise a cluster) leaves `parent` at density `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedRow {
    pub parent: usize,
    pub child: usize,
    #[serde(with = "crate::lambda")]
    pub lambda: f64,
    pub child_size: usize,
}

/// Cluster hierarchy pruned at a minimum cluster size. Cluster ids start
/// at `n_points` (the root) and children always have larger ids than their
/// parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub rows: Vec<CondensedRow>,
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.n_points
    }

    pub fn n_clusters(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.parent.max(if r.child >= self.n_points { r.child } else { 0 }))
            .max()
            .map_or(0, |m| m + 1 - self.n_points)
    }

    /// Checks that every point leaves exactly once, cluster ids are
    /// parent-before-child and density never decreases towards the leaves.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n_points;
        let clusters = self.n_clusters();
        let mut seen = vec![false; n];
        let mut birth = vec![None; clusters];
        if clusters > 0 {
            birth[0] = Some(0.0);
        }
        for row in &self.rows {
            if row.parent < n || row.parent >= n + clusters {
                return Err(format!("parent {} is not a cluster", row.parent));
            }
            if row.lambda.is_nan() || row.lambda < 0.0 {
                return Err(format!("negative lambda {}", row.lambda));
            }
            if row.child < n {
                if std::mem::replace(&mut seen[row.child], true) {
                    return Err(format!("point {} leaves twice", row.child));
                }
            } else {
                if row.child <= row.parent {
                    return Err(format!("cluster {} precedes its parent", row.child));
                }
                birth[row.child - n] = Some(row.lambda);
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(format!("point {p} never leaves the tree"));
        }
        for row in &self.rows {
            let b = birth[row.parent - n].ok_or_else(|| format!("cluster {} has no birth", row.parent))?;
            if row.lambda < b {
                return Err(format!(
                    "row leaves cluster {} at {} before its birth at {b}",
                    row.parent, row.lambda
                ));
            }
        }
        Ok(())
    }
}

fn merge_lambda(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// Walks the dendrogram from the root. A split where both sides have at
/// least `min_cluster_size` points creates two child clusters; a smaller
/// side falls out of its parent as individual points at the split density.
pub fn condense(dendrogram: &Dendrogram, min_cluster_size: usize) -> CondensedTree {
    let n = dendrogram.n_points;
    let mut rows = Vec::new();
    if n == 0 {
        return CondensedTree { n_points: 0, rows };
    }
    if dendrogram.merges.is_empty() {
        rows.push(CondensedRow {
            parent: n,
            child: 0,
            lambda: f64::INFINITY,
            child_size: 1,
        });
        return CondensedTree { n_points: n, rows };
    }
    let root = dendrogram.root();
    let mut label = vec![usize::MAX; root + 1];
    label[root] = n;
    let mut next_label = n + 1;
    let mut queue = VecDeque::from([root]);

    let leaves_of = |node: usize| {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = dendrogram.merges[x - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    };

    while let Some(node) = queue.pop_front() {
        let merge = dendrogram.merges[node - n];
        let parent = label[node];
        let lambda = merge_lambda(merge.distance);
        let sides = [merge.left, merge.right];
        let big = sides.map(|s| dendrogram.size(s) >= min_cluster_size);
        for (side, is_big) in sides.into_iter().zip(big) {
            let child_size = dendrogram.size(side);
            if is_big && big[0] && big[1] {
                label[side] = next_label;
                rows.push(CondensedRow {
                    parent,
                    child: next_label,
                    lambda,
                    child_size,
                });
                next_label += 1;
                queue.push_back(side);
            } else if is_big {
                // the surviving side continues as the same cluster
                label[side] = parent;
                if side >= n {
                    queue.push_back(side);
                } else {
                    rows.push(CondensedRow {
                        parent,
                        child: side,
                        lambda: f64::INFINITY,
                        child_size: 1,
                    });
                }
            } else {
                for point in leaves_of(side) {
                    rows.push(CondensedRow {
                        parent,
                        child: point,
                        lambda,
                        child_size: 1,
                    });
                }
            }
        }
    }
    CondensedTree { n_points: n, rows }
}
