use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{dist2, PointCloud};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// kd-tree over the sample coordinates, answering closed-ball radius
/// queries and k-nearest-neighbor queries in any ambient dimension.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    coords: Vec<f64>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl NeighborIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        let mut index = NeighborIndex {
            dim: cloud.dim(),
            coords: cloud.coords().to_vec(),
            perm: (0..cloud.len()).collect(),
            nodes: Vec::new(),
        };
        let n = cloud.len();
        index.build_node(0, n);
        index
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the widest axis at the median
        let mut best = (0, -1.0);
        for axis in 0..self.dim {
            let (lo, hi) = self.perm[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let c = self.coords[i * self.dim + axis];
                    (lo.min(c), hi.max(c))
                },
            );
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        let axis = best.0;
        if best.1 <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let dim = self.dim;
        let coords = &self.coords;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * dim + axis]
                .partial_cmp(&coords[b * dim + axis])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let value = self.coords[self.perm[mid] * self.dim + axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Calls `visit(i, |p_i - x|²)` for every sample with `|p_i - x| <= r`.
    /// Visiting order is unspecified.
    pub fn for_each_within(&self, x: &[f64], r: f64, mut visit: impl FnMut(usize, f64)) {
        if self.perm.is_empty() || r < 0.0 {
            return;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    for &i in &self.perm[start..end] {
                        let d2 = dist2(self.point(i), x);
                        if d2 <= r2 {
                            visit(i, d2);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let delta = x[axis] - value;
                    // points equal to the split value may sit on either side
                    if delta <= r {
                        stack.push(left);
                    }
                    if delta >= -r {
                        stack.push(right);
                    }
                }
            }
        }
    }

    /// Indices `{ i : |p_i - x| <= r }` in ascending order.
    pub fn query_radius(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(x, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// Like [`query_radius`](Self::query_radius) but with squared distances,
    /// sorted by index.
    pub fn query_radius_dist2(&self, x: &[f64], r: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_within(x, r, |i, d2| out.push((i, d2)));
        out.sort_unstable_by_key(|&(i, _)| i);
        out
    }

    /// The `m` samples closest to `x`, as `(index, distance)` sorted by
    /// distance (ties broken by index).
    pub fn knn(&self, x: &[f64], m: usize) -> Vec<(usize, f64)> {
        self.knn_filtered(x, m, |_, _| true)
    }

    /// Closest sample at strictly positive distance from `x`.
    pub fn nearest_distinct(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.knn_filtered(x, 1, |_, d2| d2 > 0.0).into_iter().next()
    }

    fn knn_filtered(
        &self,
        x: &[f64],
        m: usize,
        keep: impl Fn(usize, f64) -> bool,
    ) -> Vec<(usize, f64)> {
        if m == 0 || self.perm.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(m + 1);
        let bound = |heap: &BinaryHeap<Candidate>| {
            if heap.len() < m {
                f64::INFINITY
            } else {
                heap.peek().map_or(f64::INFINITY, |c| c.d2)
            }
        };
        self.knn_visit(0, x, m, &keep, &mut heap, &bound);
        let mut out: Vec<_> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.d2.sqrt()))
            .collect();
        out.truncate(m);
        out
    }

    fn knn_visit(
        &self,
        id: usize,
        x: &[f64],
        m: usize,
        keep: &impl Fn(usize, f64) -> bool,
        heap: &mut BinaryHeap<Candidate>,
        bound: &impl Fn(&BinaryHeap<Candidate>) -> f64,
    ) {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    let d2 = dist2(self.point(i), x);
                    if !keep(i, d2) {
                        continue;
                    }
                    let cand = Candidate { d2, index: i };
                    if heap.len() < m {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = x[axis] - value;
                let (near, far) = if delta < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_visit(near, x, m, keep, heap, bound);
                if delta * delta <= bound(heap) {
                    self.knn_visit(far, x, m, keep, heap, bound);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}
