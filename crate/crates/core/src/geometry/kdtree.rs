use super::Point3;
use crate::{Error, Result};

/// Build-once kd-tree over a point set. Queries return exactly the
/// brute-force result set; only the ordering is unspecified.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Point3>,
    // Flat kd-tree: per node a split axis/value over a contiguous slice of
    // `order`, or a leaf run.
    nodes: Vec<Node>,
    order: Vec<u32>,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: u32,
        len: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

const LEAF_SIZE: usize = 16;

impl PointIndex {
    pub fn build(points: &[Point3]) -> PointIndex {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build_node(points, &mut order, 0, points.len(), &mut nodes);
        }
        PointIndex {
            points: points.to_vec(),
            nodes,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Indices of all points with ||p - center|| <= radius.
    pub fn ball_query(&self, center: &Point3, radius: f64) -> Result<Vec<usize>> {
        if radius <= 0.0 || radius.is_nan() {
            return Err(Error::invalid("ball query radius must be positive"));
        }
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return Ok(out);
        }
        let r2 = radius * radius;
        self.ball_rec(0, center, radius, r2, &mut out);
        Ok(out)
    }

    fn ball_rec(&self, node: usize, center: &Point3, radius: f64, r2: f64, out: &mut Vec<usize>) {
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for &i in &self.order[*start as usize..(*start + *len) as usize] {
                    if (self.points[i as usize] - center).norm_squared() <= r2 {
                        out.push(i as usize);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let d = center[*axis as usize] - value;
                if d <= radius {
                    self.ball_rec(*left as usize, center, radius, r2, out);
                }
                if -d <= radius {
                    self.ball_rec(*right as usize, center, radius, r2, out);
                }
            }
        }
    }

    /// The k nearest points to `query`, closest first; ties broken by lower
    /// index so results are deterministic.
    pub fn knn(&self, query: &Point3, k: usize) -> Vec<usize> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let k = k.min(self.points.len());
        // Max-heap of (dist2, index) keeping the k best.
        let mut heap: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.knn_rec(0, query, k, &mut heap);
        heap.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        heap.into_iter().map(|(_, i)| i as usize).collect()
    }

    fn knn_rec(&self, node: usize, query: &Point3, k: usize, heap: &mut Vec<(f64, u32)>) {
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for &i in &self.order[*start as usize..(*start + *len) as usize] {
                    let d2 = (self.points[i as usize] - query).norm_squared();
                    heap_push(heap, k, (d2, i));
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let d = query[*axis as usize] - value;
                let (near, far) = if d <= 0.0 {
                    (*left as usize, *right as usize)
                } else {
                    (*right as usize, *left as usize)
                };
                self.knn_rec(near, query, k, heap);
                let bound = worst(heap, k);
                if d * d <= bound {
                    self.knn_rec(far, query, k, heap);
                }
            }
        }
    }

    pub fn nearest(&self, query: &Point3) -> Option<usize> {
        self.knn(query, 1).first().copied()
    }
}

fn worst(heap: &[(f64, u32)], k: usize) -> f64 {
    if heap.len() < k {
        f64::INFINITY
    } else {
        heap.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn heap_push(heap: &mut Vec<(f64, u32)>, k: usize, entry: (f64, u32)) {
    if heap.len() < k {
        heap.push(entry);
        return;
    }
    // Replace the current worst if strictly better; on exact distance ties
    // prefer the lower index.
    let mut worst_at = 0;
    for i in 1..heap.len() {
        let (d, idx) = heap[i];
        let (wd, widx) = heap[worst_at];
        if d > wd || (d == wd && idx > widx) {
            worst_at = i;
        }
    }
    let (wd, widx) = heap[worst_at];
    if entry.0 < wd || (entry.0 == wd && entry.1 < widx) {
        heap[worst_at] = entry;
    }
}

fn build_node(
    points: &[Point3],
    order: &mut [u32],
    start: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let id = nodes.len() as u32;
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: start as u32,
            len: len as u32,
        });
        return id;
    }
    // Split on the widest axis at the median.
    let slice = &mut order[start..start + len];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in slice.iter() {
        let p = points[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap();
    if hi[axis] - lo[axis] <= 0.0 {
        // All points coincide; a leaf avoids infinite recursion.
        nodes.push(Node::Leaf {
            start: start as u32,
            len: len as u32,
        });
        return id;
    }
    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let value = points[slice[mid] as usize][axis];
    nodes.push(Node::Leaf { start: 0, len: 0 }); // placeholder
    let left = build_node(points, order, start, mid, nodes);
    let right = build_node(points, order, start + mid, len - mid, nodes);
    nodes[id as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    id
}
