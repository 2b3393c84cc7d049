//! Planar geometry shared by every generator: points, similarity transforms,
//! simple polygons, intersection area and vertex snapping.
//!
//! All arithmetic is `f64` with the tolerances [`EPS`] (point equality) and
//! [`EPS_AREA`] (overlap significance).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for point equality.
pub const EPS: f64 = 1e-9;
/// Overlap areas at or below this are treated as contact, not intersection.
pub const EPS_AREA: f64 = 1e-9;
/// Default snapping grid used to identify shared vertices.
pub const SNAP_GRID: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("transform scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not counter-clockwise (signed area {0})")]
    NotCounterClockwise(f64),
    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Linear interpolation: `self` at `t = 0`, `o` at `t = 1`.
    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    pub fn approx_eq(self, o: Point, tol: f64) -> bool {
        (self.x - o.x).abs() <= tol && (self.y - o.y).abs() <= tol
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        self.scale(s)
    }
}

/// Cosine and sine of an angle in degrees, exact at multiples of 90°.
pub fn cos_sin_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    let quarter = r / 90.0;
    let nearest = quarter.round();
    if (quarter - nearest).abs() < 1e-12 {
        match (nearest as i64).rem_euclid(4) {
            0 => return (1.0, 0.0),
            1 => return (0.0, 1.0),
            2 => return (-1.0, 0.0),
            _ => return (0.0, -1.0),
        }
    }
    let rad = r.to_radians();
    (rad.cos(), rad.sin())
}

/// Normalizes an angle in degrees to `[0, 360)`, snapping values within
/// 1e-9 of a full turn to 0.
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if (360.0 - r) < 1e-9 || r < 1e-9 {
        0.0
    } else {
        r
    }
}

/// A planar similarity. Applied to a point in the fixed order
/// reflect (across the x-axis) → rotate → scale → translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    scale: f64,
    rotation: f64,
    reflect: bool,
    translation: Point,
}

impl Default for Transform {
    fn default() -> Self {
        Transform::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        scale: 1.0,
        rotation: 0.0,
        reflect: false,
        translation: Point::ORIGIN,
    };

    pub fn new(
        scale: f64,
        rotation_deg: f64,
        reflect: bool,
        translation: Point,
    ) -> Result<Self, GeometryError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeometryError::BadScale(scale));
        }
        if !rotation_deg.is_finite() || !translation.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Transform {
            scale,
            rotation: normalize_deg(rotation_deg),
            reflect,
            translation,
        })
    }

    pub fn rotation(deg: f64) -> Self {
        Transform {
            rotation: normalize_deg(deg),
            ..Transform::IDENTITY
        }
    }

    pub fn translate(x: f64, y: f64) -> Self {
        Transform {
            translation: Point::new(x, y),
            ..Transform::IDENTITY
        }
    }

    /// Reflection across the x-axis.
    pub fn reflection() -> Self {
        Transform {
            reflect: true,
            ..Transform::IDENTITY
        }
    }

    /// Uniform scaling about the origin.
    ///
    /// Panics if `s` is not a positive finite number.
    pub fn scaling(s: f64) -> Self {
        Transform::new(s, 0.0, false, Point::ORIGIN).expect("scale must be positive")
    }

    /// Rotation by `deg` about `center`.
    pub fn rotation_about(deg: f64, center: Point) -> Self {
        Transform::translate(center.x, center.y)
            .then(&Transform::rotation(deg))
            .then(&Transform::translate(-center.x, -center.y))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Rotation in degrees, normalized to `[0, 360)`.
    pub fn rotation_deg(&self) -> f64 {
        self.rotation
    }

    pub fn reflects(&self) -> bool {
        self.reflect
    }

    pub fn translation(&self) -> Point {
        self.translation
    }

    pub fn apply(&self, p: Point) -> Point {
        let y = if self.reflect { -p.y } else { p.y };
        let (c, s) = cos_sin_deg(self.rotation);
        Point::new(
            self.scale * (c * p.x - s * y) + self.translation.x,
            self.scale * (s * p.x + c * y) + self.translation.y,
        )
    }

    /// Applies only the linear part (no translation).
    pub fn apply_vector(&self, v: Point) -> Point {
        self.apply(v) - self.translation
    }

    /// `self.then(inner)` is the transform that applies `inner` first and
    /// then `self`; equivalent to [`compose`]`(self, inner)`.
    pub fn then(&self, inner: &Transform) -> Transform {
        compose(self, inner)
    }

    pub fn inverse(&self) -> Transform {
        // p = t + s R F q  =>  q = F R^-1 (p - t) / s, and F R(-θ) = R(θ) F.
        let rotation = if self.reflect {
            self.rotation
        } else {
            -self.rotation
        };
        let linear = Transform {
            scale: 1.0 / self.scale,
            rotation: normalize_deg(rotation),
            reflect: self.reflect,
            translation: Point::ORIGIN,
        };
        let t = linear.apply(self.translation).scale(-1.0);
        Transform {
            translation: t,
            ..linear
        }
    }

    /// The 2×3 matrix `[a b c d e f]` in SVG order: `x' = a x + c y + e`,
    /// `y' = b x + d y + f`.
    pub fn to_matrix(&self) -> [f64; 6] {
        let (c, s) = cos_sin_deg(self.rotation);
        let f = if self.reflect { -1.0 } else { 1.0 };
        [
            self.scale * c,
            self.scale * s,
            -self.scale * s * f,
            self.scale * c * f,
            self.translation.x,
            self.translation.y,
        ]
    }

    /// Recovers a similarity from a 2×3 matrix (inverse of [`to_matrix`](Self::to_matrix)).
    pub fn from_matrix(m: [f64; 6]) -> Result<Transform, GeometryError> {
        let scale = m[0].hypot(m[1]);
        let det = m[0] * m[3] - m[1] * m[2];
        let rotation = m[1].atan2(m[0]).to_degrees();
        Transform::new(scale, rotation, det < 0.0, Point::new(m[4], m[5]))
    }

    pub fn approx_eq(&self, other: &Transform, tol: f64) -> bool {
        let a = self.to_matrix();
        let b = other.to_matrix();
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// The similarity that maps triangle `from` onto triangle `to`
    /// vertex-for-vertex. Reflection is chosen from the orientations.
    pub fn from_triangles(from: [Point; 3], to: [Point; 3]) -> Result<Transform, GeometryError> {
        let fa = from[1] - from[0];
        let ta = to[1] - to[0];
        let orient_from = fa.cross(from[2] - from[0]);
        let orient_to = ta.cross(to[2] - to[0]);
        let reflect = (orient_from > 0.0) != (orient_to > 0.0);
        let fa_r = if reflect { Point::new(fa.x, -fa.y) } else { fa };
        let scale = ta.norm() / fa_r.norm();
        let rotation = (ta.y.atan2(ta.x) - fa_r.y.atan2(fa_r.x)).to_degrees();
        let linear = Transform::new(scale, snap_angle(rotation), reflect, Point::ORIGIN)?;
        let offset = to[0] - linear.apply(from[0]);
        Transform::new(scale, linear.rotation, reflect, offset)
    }
}

/// Snaps an angle to the exact multiple of 9° when within 1e-9 of one.
fn snap_angle(deg: f64) -> f64 {
    let nine = (deg / 9.0).round() * 9.0;
    if (deg - nine).abs() < 1e-9 {
        nine
    } else {
        deg
    }
}

/// `apply(compose(outer, inner), p) == apply(outer, apply(inner, p))`.
pub fn compose(outer: &Transform, inner: &Transform) -> Transform {
    // outer∘inner: s_o R_o F_o (s_i R_i F_i p + t_i) + t_o
    // F R(θ) = R(-θ) F, so R_o F_o R_i F_i = R(θ_o ± θ_i) F_o F_i.
    let rotation = if outer.reflect {
        outer.rotation - inner.rotation
    } else {
        outer.rotation + inner.rotation
    };
    Transform {
        scale: outer.scale * inner.scale,
        rotation: normalize_deg(rotation),
        reflect: outer.reflect ^ inner.reflect,
        translation: outer.apply(inner.translation),
    }
}

/// Free-function form of [`Transform::apply`].
pub fn apply(t: &Transform, p: Point) -> Point {
    t.apply(p)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of_points<I: IntoIterator<Item = Point>>(pts: I) -> Option<BBox> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        let mut b = BBox {
            min: first,
            max: first,
        };
        for p in it {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// True when the interiors overlap by more than `tol` in both axes.
    pub fn overlaps(&self, o: &BBox, tol: f64) -> bool {
        self.min.x < o.max.x - tol
            && o.min.x < self.max.x - tol
            && self.min.y < o.max.y - tol
            && o.min.y < self.max.y - tol
    }

    pub fn expand(&self, d: f64) -> BBox {
        BBox {
            min: Point::new(self.min.x - d, self.min.y - d),
            max: Point::new(self.max.x + d, self.max.y + d),
        }
    }
}

/// Candidate pairs `(i, j)`, `i < j`, whose boxes overlap by more than `tol`.
/// Sweep on the x-axis; output sorted.
pub fn overlapping_pairs(boxes: &[BBox], tol: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[a].min.x.total_cmp(&boxes[b].min.x).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for &i in &order {
        let bi = &boxes[i];
        active.retain(|&j| boxes[j].max.x > bi.min.x + tol);
        for &j in &active {
            if bi.overlaps(&boxes[j], tol) {
                out.push((i.min(j), i.max(j)));
            }
        }
        active.push(i);
    }
    out.sort_unstable();
    out
}

/// A simple counter-clockwise polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Polygon, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area <= EPS_AREA {
            return Err(GeometryError::NotCounterClockwise(area));
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(GeometryError::SelfIntersecting(i, j));
        }
        Ok(Polygon { vertices })
    }

    /// Like [`Polygon::new`] but accepts clockwise input by reversing it.
    pub fn new_normalized(mut vertices: Vec<Point>) -> Result<Polygon, GeometryError> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Polygon::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Side `i` runs from vertex `i` to vertex `i + 1`.
    pub fn side(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut a = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            a += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.vertices.iter().copied()).expect("polygon has vertices")
    }

    /// Interior angle at vertex `i`, in degrees (reflex angles exceed 180).
    pub fn interior_angle(&self, i: usize) -> f64 {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n];
        let cur = self.vertices[i];
        let next = self.vertices[(i + 1) % n];
        interior_angle_at(prev, cur, next)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -EPS
        })
    }

    /// Image under `t`, re-normalized to counter-clockwise order when `t`
    /// reflects. Vertex `i` of the result is not vertex `i` of `self` in that case.
    pub fn transformed(&self, t: &Transform) -> Polygon {
        let mut vs: Vec<Point> = self.vertices.iter().map(|&p| t.apply(p)).collect();
        if t.reflects() {
            vs.reverse();
        }
        Polygon { vertices: vs }
    }

    /// Convex pieces covering the polygon exactly: the polygon itself when
    /// convex, otherwise an ear-clipping triangulation.
    pub fn convex_parts(&self) -> Vec<Vec<Point>> {
        if self.is_convex() {
            vec![self.vertices.clone()]
        } else {
            triangulate(&self.vertices)
        }
    }

    /// Whether `p` lies strictly inside (farther than `tol` from the boundary).
    pub fn contains_strict(&self, p: Point, tol: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.side(i);
            if point_segment_distance(p, a, b) <= tol {
                return false;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.side(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

pub fn interior_angle_at(prev: Point, cur: Point, next: Point) -> f64 {
    let to_next = next - cur;
    let to_prev = prev - cur;
    // CCW sweep from the outgoing edge to the incoming edge.
    let a = to_prev.y.atan2(to_prev.x) - to_next.y.atan2(to_next.x);
    a.to_degrees().rem_euclid(360.0)
}

pub fn signed_area(vs: &[Point]) -> f64 {
    let n = vs.len();
    let mut s = 0.0;
    for i in 0..n {
        s += vs[i].cross(vs[(i + 1) % n]);
    }
    0.5 * s
}

/// Shoelace area of a valid polygon.
pub fn polygon_area(poly: &Polygon) -> f64 {
    poly.area()
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    point_segment_distance(p, a, b) <= EPS
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

fn find_self_intersection(vs: &[Point]) -> Option<(usize, usize)> {
    let n = vs.len();
    for i in 0..n {
        let (a, b) = (vs[i], vs[(i + 1) % n]);
        if a.approx_eq(b, EPS) {
            return Some((i, i));
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (vs[j], vs[(j + 1) % n]);
            if adjacent {
                // Adjacent sides may only share their common endpoint.
                let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let fold = orient(other_a, shared, other_b).abs() <= EPS
                    && (other_a - shared).dot(other_b - shared) > 0.0;
                if fold {
                    return Some((i, j));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Ear-clipping triangulation of a simple CCW polygon.
pub fn triangulate(vs: &[Point]) -> Vec<Vec<Point>> {
    let mut idx: Vec<usize> = (0..vs.len()).collect();
    let mut tris = Vec::with_capacity(vs.len().saturating_sub(2));
    let mut guard = 0;
    while idx.len() > 3 && guard < vs.len() * vs.len() {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let ip = idx[(k + m - 1) % m];
            let ic = idx[k];
            let inx = idx[(k + 1) % m];
            let (p, c, n) = (vs[ip], vs[ic], vs[inx]);
            if orient(p, c, n) <= EPS {
                continue;
            }
            let blocked = idx
                .iter()
                .any(|&o| o != ip && o != ic && o != inx && point_in_triangle(vs[o], p, c, n));
            if blocked {
                continue;
            }
            tris.push(vec![p, c, n]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        tris.push(idx.iter().map(|&i| vs[i]).collect());
    }
    tris
}

fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) >= -EPS && orient(b, c, p) >= -EPS && orient(c, a, p) >= -EPS
}

/// Sutherland–Hodgman clip of `subject` by the convex CCW polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let nxt = input[(j + 1) % k];
            let cin = orient(a, b, cur) >= 0.0;
            let nin = orient(a, b, nxt) >= 0.0;
            if cin {
                output.push(cur);
            }
            if cin != nin {
                let d1 = orient(a, b, cur);
                let d2 = orient(a, b, nxt);
                let t = d1 / (d1 - d2);
                output.push(cur.lerp(nxt, t));
            }
        }
    }
    output
}

/// Area of `a ∩ b`; 0 for disjoint or edge-touching polygons.
pub fn overlap_area(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bbox().overlaps(&b.bbox(), EPS) {
        return 0.0;
    }
    overlap_area_parts(&a.convex_parts(), &b.convex_parts())
}

/// Intersection area of two regions given as convex decompositions.
pub fn overlap_area_parts(a: &[Vec<Point>], b: &[Vec<Point>]) -> f64 {
    let mut total = 0.0;
    for pa in a {
        let ba = BBox::of_points(pa.iter().copied());
        for pb in b {
            if let (Some(x), Some(y)) = (ba, BBox::of_points(pb.iter().copied())) {
                if !x.overlaps(&y, EPS) {
                    continue;
                }
            }
            let clipped = clip_convex(pa, pb);
            if clipped.len() >= 3 {
                total += signed_area(&clipped).max(0.0);
            }
        }
    }
    if total <= EPS_AREA {
        0.0
    } else {
        total
    }
}

/// Grid-quantized key of a point.
pub fn snap_key(p: Point, grid: f64) -> (i64, i64) {
    ((p.x / grid).round() as i64, (p.y / grid).round() as i64)
}

/// Assigns stable ids to points, merging points within `grid / 2` of each
/// other even when they straddle a snapping cell boundary.
#[derive(Debug, Default)]
pub struct VertexIndex {
    grid: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
}

impl VertexIndex {
    pub fn new(grid: f64) -> Self {
        VertexIndex {
            grid,
            cells: HashMap::new(),
            points: Vec::new(),
        }
    }

    pub fn id(&mut self, p: Point) -> usize {
        let (kx, ky) = snap_key(p, self.grid);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if self.points[id].approx_eq(p, self.grid * 0.5) {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.cells.entry((kx, ky)).or_default().push(id);
        id
    }

    pub fn point(&self, id: usize) -> Point {
        self.points[id]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Convex hull (Andrew's monotone chain), counter-clockwise.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.approx_eq(*b, EPS));
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap()
    }

    fn shifted(p: &Polygon, dx: f64, dy: f64) -> Polygon {
        p.transformed(&Transform::translate(dx, dy))
    }

    #[test]
    fn compose_rotations() {
        let r = compose(&Transform::rotation(90.0), &Transform::rotation(90.0));
        assert_eq!(r.rotation_deg(), 180.0);
        assert_eq!(r.scale(), 1.0);
        assert!(!r.reflects());
    }

    #[test]
    fn compose_identity_and_scales() {
        let t = Transform::new(2.0, 30.0, true, Point::new(1.0, -3.0)).unwrap();
        assert!(compose(&Transform::IDENTITY, &t).approx_eq(&t, 1e-12));
        let q = compose(&Transform::scaling(0.5), &Transform::scaling(0.5));
        assert_eq!(q.scale(), 0.25);
    }

    #[test]
    fn apply_examples() {
        let p = Transform::rotation(90.0).apply(Point::new(1.0, 0.0));
        assert_eq!(p, Point::new(0.0, 1.0));
        let p = Transform::reflection().apply(Point::new(1.0, 2.0));
        assert_eq!(p, Point::new(1.0, -2.0));
        let t = Transform::new(0.5, 0.0, false, Point::new(3.0, 0.0)).unwrap();
        assert_eq!(t.apply(Point::new(2.0, 2.0)), Point::new(4.0, 1.0));
    }

    #[test]
    fn reflect_precedes_rotation() {
        let t = Transform::new(1.0, 90.0, true, Point::ORIGIN).unwrap();
        // (0,1) -> reflect (0,-1) -> rotate 90 -> (1,0)
        assert!(t
            .apply(Point::new(0.0, 1.0))
            .approx_eq(Point::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn bad_scale_rejected() {
        assert!(Transform::new(0.0, 0.0, false, Point::ORIGIN).is_err());
        assert!(Transform::new(-1.0, 0.0, false, Point::ORIGIN).is_err());
        assert!(Transform::new(1.0, f64::NAN, false, Point::ORIGIN).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let t = Transform::new(1.7, 123.0, true, Point::new(0.3, -4.0)).unwrap();
        let p = Point::new(2.5, -1.25);
        let back = t.inverse().apply(t.apply(p));
        assert!(back.approx_eq(p, 1e-12));
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&unit_square()), 1.0);
        let tri = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(polygon_area(&tri), 0.5);
        let half = unit_square().transformed(&Transform::scaling(0.5));
        assert_eq!(polygon_area(&half), 0.25);
    }

    #[test]
    fn polygon_validation() {
        assert!(matches!(
            Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        ));
        let cw = vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ];
        assert!(matches!(
            Polygon::new(cw.clone()),
            Err(GeometryError::NotCounterClockwise(_))
        ));
        assert!(Polygon::new_normalized(cw).is_ok());
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 1.5),
            Point::new(0.0, 2.0),
        ];
        assert!(Polygon::new(bowtie).is_err());
        assert!(Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(f64::INFINITY, 0.0),
            Point::new(0.0, 1.0)
        ])
        .is_err());
    }

    #[test]
    fn overlap_examples() {
        let sq = unit_square();
        assert_eq!(overlap_area(&sq, &shifted(&sq, 2.0, 0.0)), 0.0);
        assert!((overlap_area(&sq, &shifted(&sq, 0.5, 0.0)) - 0.5).abs() < 1e-12);
        assert_eq!(overlap_area(&sq, &shifted(&sq, 1.0, 0.0)), 0.0);
        assert!((overlap_area(&sq, &sq) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_non_convex() {
        // L-shape (area 3) against a unit square sitting in its notch.
        let l = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ])
        .unwrap();
        assert!(!l.is_convex());
        let parts = l.convex_parts();
        let sum: f64 = parts.iter().map(|p| signed_area(p)).sum();
        assert!((sum - 3.0).abs() < 1e-12);
        let notch = shifted(&unit_square(), 1.0, 1.0);
        assert_eq!(overlap_area(&l, &notch), 0.0);
        let straddle = shifted(&unit_square(), 0.5, 0.5);
        assert!((overlap_area(&l, &straddle) - 0.75).abs() < 1e-12);
        assert!((overlap_area(&l, &l) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn snapping() {
        let g = 1e-6;
        assert_eq!(
            snap_key(Point::new(0.0000001, 1.0), g),
            snap_key(Point::new(0.0, 1.0), g)
        );
        assert_ne!(
            snap_key(Point::new(0.6, 0.0), g),
            snap_key(Point::new(0.0, 0.0), g)
        );
        let p = Point::new(0.3, -0.7);
        assert_eq!(
            snap_key(Transform::rotation(360.0).apply(p), g),
            snap_key(p, g)
        );
    }

    #[test]
    fn vertex_index_merges_across_cells() {
        let mut vi = VertexIndex::new(1e-6);
        let a = vi.id(Point::new(0.5e-6 - 1e-13, 0.0));
        let b = vi.id(Point::new(0.5e-6 + 1e-13, 0.0));
        assert_eq!(a, b);
        let c = vi.id(Point::new(1.0, 0.0));
        assert_ne!(a, c);
    }

    #[test]
    fn matrix_roundtrip() {
        let t = Transform::new(0.25, 216.0, true, Point::new(-1.0, 2.0)).unwrap();
        let back = Transform::from_matrix(t.to_matrix()).unwrap();
        assert!(back.approx_eq(&t, 1e-12));
        assert!((back.rotation_deg() - 216.0).abs() < 1e-9);
        assert!(back.reflects());
    }

    #[test]
    fn triangles_to_similarity() {
        let from = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let t = Transform::new(2.0, 54.0, true, Point::new(3.0, 1.0)).unwrap();
        let to = from.map(|p| t.apply(p));
        let got = Transform::from_triangles(from, to).unwrap();
        assert!(got.approx_eq(&t, 1e-12));
    }

    #[test]
    fn hull_and_pairs() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 0.5),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(convex_hull(&pts).len(), 4);
        let sq = unit_square();
        let boxes = [
            sq.bbox(),
            shifted(&sq, 0.5, 0.0).bbox(),
            shifted(&sq, 1.0, 0.0).bbox(),
        ];
        assert_eq!(overlapping_pairs(&boxes, EPS), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn interior_angles() {
        let sq = unit_square();
        for i in 0..4 {
            assert!((sq.interior_angle(i) - 90.0).abs() < 1e-12);
        }
    }
}
