use super::{Point3, SceneModel, UnitVec3, Vec3};

/// Intersection record from [`SceneIndex::ray_cast`]. Ground-plane hits carry
/// instance 0 and no triangle index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub instance_id: u32,
    /// Index into the hit object's triangle list; `None` for the ground plane.
    pub triangle: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Aabb {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(&p.coords);
        self.max = self.max.sup(&p.coords);
    }

    fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Slab test; returns the entry distance if the ray hits within [0, t_max].
    fn ray_enter(&self, origin: &Point3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let ta = (self.min[a] - origin[a]) * inv_dir[a];
            let tb = (self.max[a] - origin[a]) * inv_dir[a];
            let (near, far) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }

    fn distance_squared(&self, p: &Point3) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let v = p[a];
            let d = if v < self.min[a] {
                self.min[a] - v
            } else if v > self.max[a] {
                v - self.max[a]
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }
}

#[derive(Debug, Clone, Copy)]
struct Primitive {
    a: Point3,
    b: Point3,
    c: Point3,
    instance_id: u32,
    triangle: u32,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, len: u32 },
    Split { aabb_l: Aabb, aabb_r: Aabb, left: u32, right: u32 },
}

const LEAF_SIZE: usize = 4;

/// Bounding-volume hierarchy over every world-space triangle of a scene,
/// plus the analytic ground plane z = 0 when the scene has one.
pub struct SceneIndex {
    prims: Vec<Primitive>,
    nodes: Vec<Node>,
    root_aabb: Aabb,
    ground_plane: bool,
}

impl SceneIndex {
    pub fn build(scene: &SceneModel) -> SceneIndex {
        let mut prims = Vec::new();
        for obj in &scene.objects {
            for (ti, _) in obj.mesh.triangles.iter().enumerate() {
                let [a, b, c] = obj.mesh.triangle_vertices(ti);
                prims.push(Primitive {
                    a: obj.pose.transform_point(&a),
                    b: obj.pose.transform_point(&b),
                    c: obj.pose.transform_point(&c),
                    instance_id: obj.instance_id,
                    triangle: ti as u32,
                });
            }
        }
        let mut root_aabb = Aabb::empty();
        let centroids: Vec<Vec3> = prims
            .iter()
            .map(|p| {
                let mut bb = Aabb::empty();
                bb.grow(&p.a);
                bb.grow(&p.b);
                bb.grow(&p.c);
                root_aabb.merge(&bb);
                bb.center()
            })
            .collect();
        let mut index: Vec<u32> = (0..prims.len() as u32).collect();
        let mut nodes = Vec::new();
        if !prims.is_empty() {
            build_node(&prims, &centroids, &mut index, 0, prims.len(), &mut nodes);
            // Reorder primitives so leaves address contiguous runs.
            let reordered: Vec<Primitive> =
                index.iter().map(|&i| prims[i as usize]).collect();
            prims = reordered;
        }
        SceneIndex {
            prims,
            nodes,
            root_aabb,
            ground_plane: scene.ground_plane,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.prims.len()
    }

    pub fn has_ground(&self) -> bool {
        self.ground_plane
    }

    /// Nearest intersection within `max_dist` among object meshes and the
    /// ground plane, or `None` on a miss. Distance ties resolve to the lower
    /// (instance, triangle) pair so results never depend on traversal order.
    pub fn ray_cast(&self, origin: &Point3, direction: &UnitVec3, max_dist: f64) -> Option<RayHit> {
        let mut best: Option<RayHit> = self.ground_hit(origin, direction, max_dist);
        if !self.nodes.is_empty() {
            let inv_dir = Vec3::new(
                1.0 / direction.x,
                1.0 / direction.y,
                1.0 / direction.z,
            );
            self.cast_rec(0, &self.root_bounds(), origin, direction, &inv_dir, max_dist, &mut best);
        }
        best
    }

    /// Every intersection within `max_dist`, sorted by distance ascending.
    pub fn ray_cast_all(
        &self,
        origin: &Point3,
        direction: &UnitVec3,
        max_dist: f64,
    ) -> Vec<RayHit> {
        let mut hits = Vec::new();
        if let Some(g) = self.ground_hit(origin, direction, max_dist) {
            hits.push(g);
        }
        if !self.nodes.is_empty() {
            let inv_dir = Vec3::new(
                1.0 / direction.x,
                1.0 / direction.y,
                1.0 / direction.z,
            );
            self.collect_rec(0, &self.root_bounds(), origin, direction, &inv_dir, max_dist, &mut hits);
        }
        hits.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.instance_id.cmp(&b.instance_id))
                .then(a.triangle.cmp(&b.triangle))
        });
        hits
    }

    /// Distance from `p` to the nearest triangle of instance `instance_id`,
    /// clipped at `bound` (returns `None` when nothing is closer than bound).
    pub fn distance_to_instance(&self, p: &Point3, instance_id: u32, bound: f64) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = bound;
        let mut found = false;
        self.dist_rec(0, &self.root_bounds(), p, Some(instance_id), &mut best, &mut found);
        found.then_some(best)
    }

    /// Distance from `p` to the nearest triangle of any instance other than
    /// `exclude`, clipped at `bound`.
    pub fn distance_to_others(&self, p: &Point3, exclude: u32, bound: f64) -> Option<(f64, u32)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = bound;
        let mut who = None;
        self.dist_other_rec(0, &self.root_bounds(), p, exclude, &mut best, &mut who);
        who.map(|id| (best, id))
    }

    fn root_bounds(&self) -> Aabb {
        self.root_aabb
    }

    fn ground_hit(&self, origin: &Point3, direction: &UnitVec3, max_dist: f64) -> Option<RayHit> {
        if !self.ground_plane || direction.z == 0.0 {
            return None;
        }
        let t = -origin.z / direction.z;
        (t >= 0.0 && t <= max_dist).then_some(RayHit {
            distance: t,
            instance_id: 0,
            triangle: None,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn cast_rec(
        &self,
        node: usize,
        aabb: &Aabb,
        origin: &Point3,
        dir: &UnitVec3,
        inv_dir: &Vec3,
        max_dist: f64,
        best: &mut Option<RayHit>,
    ) {
        let limit = best.map_or(max_dist, |h| h.distance);
        if aabb.ray_enter(origin, inv_dir, limit).is_none() {
            return;
        }
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for prim in &self.prims[*start as usize..(*start + *len) as usize] {
                    if let Some(t) = moller_trumbore(origin, dir, &prim.a, &prim.b, &prim.c) {
                        if t > max_dist {
                            continue;
                        }
                        let cand = RayHit {
                            distance: t,
                            instance_id: prim.instance_id,
                            triangle: Some(prim.triangle as usize),
                        };
                        if better(&cand, best) {
                            *best = Some(cand);
                        }
                    }
                }
            }
            Node::Split {
                aabb_l,
                aabb_r,
                left,
                right,
            } => {
                // Near child first for earlier pruning.
                let tl = aabb_l.ray_enter(origin, inv_dir, limit);
                let tr = aabb_r.ray_enter(origin, inv_dir, limit);
                match (tl, tr) {
                    (Some(a), Some(b)) if a <= b => {
                        self.cast_rec(*left as usize, aabb_l, origin, dir, inv_dir, max_dist, best);
                        self.cast_rec(*right as usize, aabb_r, origin, dir, inv_dir, max_dist, best);
                    }
                    (Some(_), Some(_)) => {
                        self.cast_rec(*right as usize, aabb_r, origin, dir, inv_dir, max_dist, best);
                        self.cast_rec(*left as usize, aabb_l, origin, dir, inv_dir, max_dist, best);
                    }
                    (Some(_), None) => {
                        self.cast_rec(*left as usize, aabb_l, origin, dir, inv_dir, max_dist, best)
                    }
                    (None, Some(_)) => {
                        self.cast_rec(*right as usize, aabb_r, origin, dir, inv_dir, max_dist, best)
                    }
                    (None, None) => {}
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn collect_rec(
        &self,
        node: usize,
        aabb: &Aabb,
        origin: &Point3,
        dir: &UnitVec3,
        inv_dir: &Vec3,
        max_dist: f64,
        out: &mut Vec<RayHit>,
    ) {
        if aabb.ray_enter(origin, inv_dir, max_dist).is_none() {
            return;
        }
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for prim in &self.prims[*start as usize..(*start + *len) as usize] {
                    if let Some(t) = moller_trumbore(origin, dir, &prim.a, &prim.b, &prim.c) {
                        if t <= max_dist {
                            out.push(RayHit {
                                distance: t,
                                instance_id: prim.instance_id,
                                triangle: Some(prim.triangle as usize),
                            });
                        }
                    }
                }
            }
            Node::Split {
                aabb_l,
                aabb_r,
                left,
                right,
            } => {
                self.collect_rec(*left as usize, aabb_l, origin, dir, inv_dir, max_dist, out);
                self.collect_rec(*right as usize, aabb_r, origin, dir, inv_dir, max_dist, out);
            }
        }
    }

    fn dist_rec(
        &self,
        node: usize,
        aabb: &Aabb,
        p: &Point3,
        only: Option<u32>,
        best: &mut f64,
        found: &mut bool,
    ) {
        if aabb.distance_squared(p) > *best * *best {
            return;
        }
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for prim in &self.prims[*start as usize..(*start + *len) as usize] {
                    if let Some(id) = only {
                        if prim.instance_id != id {
                            continue;
                        }
                    }
                    let d = point_triangle_distance(p, &prim.a, &prim.b, &prim.c);
                    if d <= *best {
                        *best = d;
                        *found = true;
                    }
                }
            }
            Node::Split {
                aabb_l,
                aabb_r,
                left,
                right,
            } => {
                self.dist_rec(*left as usize, aabb_l, p, only, best, found);
                self.dist_rec(*right as usize, aabb_r, p, only, best, found);
            }
        }
    }

    fn dist_other_rec(
        &self,
        node: usize,
        aabb: &Aabb,
        p: &Point3,
        exclude: u32,
        best: &mut f64,
        who: &mut Option<u32>,
    ) {
        if aabb.distance_squared(p) > *best * *best {
            return;
        }
        match &self.nodes[node] {
            Node::Leaf { start, len } => {
                for prim in &self.prims[*start as usize..(*start + *len) as usize] {
                    if prim.instance_id == exclude {
                        continue;
                    }
                    let d = point_triangle_distance(p, &prim.a, &prim.b, &prim.c);
                    if d <= *best {
                        *best = d;
                        *who = Some(prim.instance_id);
                    }
                }
            }
            Node::Split {
                aabb_l,
                aabb_r,
                left,
                right,
            } => {
                self.dist_other_rec(*left as usize, aabb_l, p, exclude, best, who);
                self.dist_other_rec(*right as usize, aabb_r, p, exclude, best, who);
            }
        }
    }
}

fn better(cand: &RayHit, best: &Option<RayHit>) -> bool {
    match best {
        None => true,
        Some(b) => {
            cand.distance < b.distance
                || (cand.distance == b.distance
                    && (cand.instance_id, cand.triangle) < (b.instance_id, b.triangle))
        }
    }
}

fn build_node(
    prims: &[Primitive],
    centroids: &[Vec3],
    index: &mut [u32],
    start: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> (u32, Aabb) {
    let id = nodes.len() as u32;
    let slice_bounds = |idx: &[u32]| {
        let mut bb = Aabb::empty();
        for &i in idx {
            let p = &prims[i as usize];
            bb.grow(&p.a);
            bb.grow(&p.b);
            bb.grow(&p.c);
        }
        bb
    };
    let my_bounds = slice_bounds(&index[start..start + len]);
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: start as u32,
            len: len as u32,
        });
        return (id, my_bounds);
    }
    // Median split on the widest centroid axis.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &index[start..start + len] {
        let c = centroids[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap();
    if hi[axis] - lo[axis] <= 0.0 {
        nodes.push(Node::Leaf {
            start: start as u32,
            len: len as u32,
        });
        return (id, my_bounds);
    }
    let mid = len / 2;
    index[start..start + len].select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { start: 0, len: 0 }); // placeholder
    let (left, aabb_l) = build_node(prims, centroids, index, start, mid, nodes);
    let (right, aabb_r) = build_node(prims, centroids, index, start + mid, len - mid, nodes);
    nodes[id as usize] = Node::Split {
        aabb_l,
        aabb_r,
        left,
        right,
    };
    (id, my_bounds)
}

/// Watertight-enough ray/triangle test without backface culling. Returns the
/// hit distance along the (unit) ray direction.
pub fn moller_trumbore(
    origin: &Point3,
    dir: &UnitVec3,
    a: &Point3,
    b: &Point3,
    c: &Point3,
) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv_det;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    (t >= 0.0).then_some(t)
}

/// Closest distance from a point to a triangle (Ericson, Real-Time Collision
/// Detection 5.1.5).
pub fn point_triangle_distance(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm()
}
