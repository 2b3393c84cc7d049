//! Placements, patches, edge adjacency and patch validation.
//!
//! A placed side keeps the index it has on the prototype. Under a
//! reflecting pose the side is traversed clockwise in the world frame, so
//! its label is read with `plus` and `minus` swapped.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    convex_hull, overlap_area_parts, overlapping_pairs, signed_area, BBox, Point, Transform,
    VertexIndex, EPS_AREA, SNAP_GRID,
};
use crate::tilespec::{EdgeLabel, RuleSet, TileSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("placement {index} references unknown tile `{id}`")]
    UnknownTile { index: usize, id: String },
    #[error("unknown edge label `{0}`")]
    UnknownLabel(String),
    #[error("edge {from}–{to} is claimed by {claims} full sides")]
    Overclaimed {
        from: Point,
        to: Point,
        claims: usize,
    },
    #[error("patch line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub tile: String,
    pub pose: Transform,
}

impl Placement {
    pub fn new(tile: impl Into<String>, pose: Transform) -> Self {
        Placement {
            tile: tile.into(),
            pose,
        }
    }
}

/// Tree annotation carried by fractal patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo {
    pub depth: usize,
    pub parent: Option<usize>,
    /// Index into the tile set's attachment list.
    pub site: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Patch {
    pub placements: Vec<Placement>,
    /// Either empty or one entry per placement.
    pub nodes: Vec<NodeInfo>,
}

impl Patch {
    pub fn new(placements: Vec<Placement>) -> Self {
        Patch {
            placements,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn is_tree(&self) -> bool {
        !self.nodes.is_empty()
    }

    /// Applies `t` after every pose.
    pub fn transformed(&self, t: &Transform) -> Patch {
        Patch {
            placements: self
                .placements
                .iter()
                .map(|p| Placement::new(p.tile.clone(), t.then(&p.pose)))
                .collect(),
            nodes: self.nodes.clone(),
        }
    }

    /// Serializes to the `patch v1` interchange format.
    pub fn to_text(&self) -> String {
        let mut s = String::from("patch v1\n");
        for (i, p) in self.placements.iter().enumerate() {
            let t = &p.pose;
            let _ = write!(
                s,
                "place {} {} {} {} {} {}",
                p.tile,
                t.scale(),
                t.rotation_deg(),
                u8::from(t.reflects()),
                t.translation().x,
                t.translation().y
            );
            if let Some(n) = self.nodes.get(i) {
                let opt = |o: Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
                let _ = write!(
                    s,
                    " depth {} parent {} site {}",
                    n.depth,
                    opt(n.parent),
                    opt(n.site)
                );
            }
            s.push('\n');
        }
        s
    }
}

/// Parses the `patch v1` format: one `place <tile> <scale> <rot> <0|1> <tx> <ty>`
/// line per placement, optionally followed by `depth d parent p|- site k|-`.
pub fn parse_patch(text: &str) -> Result<Patch, MatchError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line, message: String| MatchError::Parse { line, message };
    match lines.next() {
        Some((_, "patch v1")) => {}
        Some((n, other)) => return Err(err(n, format!("expected `patch v1`, found `{other}`"))),
        None => return Err(err(1, "expected `patch v1`".into())),
    }
    let mut patch = Patch::default();
    let mut tree: Option<bool> = None;
    for (n, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] != "place" {
            return Err(err(n, format!("expected `place`, found `{}`", toks[0])));
        }
        if toks.len() != 7 && toks.len() != 13 {
            return Err(err(
                n,
                format!("expected 6 or 12 fields, found {}", toks.len() - 1),
            ));
        }
        let num = |s: &str| -> Result<f64, MatchError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(n, format!("invalid number `{s}`")))
        };
        let reflect = match toks[4] {
            "0" => false,
            "1" => true,
            other => return Err(err(n, format!("reflect must be 0 or 1, found `{other}`"))),
        };
        let pose = Transform::new(
            num(toks[2])?,
            num(toks[3])?,
            reflect,
            Point::new(num(toks[5])?, num(toks[6])?),
        )
        .map_err(|e| err(n, e.to_string()))?;
        patch.placements.push(Placement::new(toks[1], pose));

        let has_node = toks.len() == 13;
        if *tree.get_or_insert(has_node) != has_node {
            return Err(err(
                n,
                "tree annotations must be on every line or none".into(),
            ));
        }
        if has_node {
            if toks[7] != "depth" || toks[9] != "parent" || toks[11] != "site" {
                return Err(err(n, "expected `depth d parent p site k`".into()));
            }
            let int = |s: &str| -> Result<usize, MatchError> {
                s.parse::<usize>()
                    .map_err(|_| err(n, format!("invalid integer `{s}`")))
            };
            let opt = |s: &str| -> Result<Option<usize>, MatchError> {
                if s == "-" {
                    Ok(None)
                } else {
                    int(s).map(Some)
                }
            };
            patch.nodes.push(NodeInfo {
                depth: int(toks[8])?,
                parent: opt(toks[10])?,
                site: opt(toks[12])?,
            });
        }
    }
    Ok(patch)
}

/// Whether two labels may abut. Both must occur in the tile set.
pub fn edges_compatible(a: &EdgeLabel, b: &EdgeLabel, rules: &RuleSet) -> Result<bool, MatchError> {
    for l in [a, b] {
        if !rules.knows(l) {
            return Err(MatchError::UnknownLabel(l.to_string()));
        }
    }
    Ok(rules.allows(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub placement: usize,
    pub side: usize,
}

/// Sorted pair of snapped vertex ids.
pub type EdgeKey = (usize, usize);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency {
    /// Sides whose endpoints coincide with exactly one other side.
    pub shared: BTreeMap<EdgeKey, [EdgeRef; 2]>,
    /// Collinear sides of different placements overlapping in part only.
    pub partial: Vec<(EdgeRef, EdgeRef)>,
    /// Sides with no full partner.
    pub boundary: Vec<EdgeRef>,
    vertices: Vec<Point>,
}

impl Adjacency {
    pub fn vertex(&self, id: usize) -> Point {
        self.vertices[id]
    }
}

/// A placement's geometry in world coordinates.
pub(crate) struct Placed {
    pub vertices: Vec<Point>,
    pub labels: Vec<EdgeLabel>,
    pub parts: Vec<Vec<Point>>,
    pub bbox: BBox,
    pub area: f64,
}

pub(crate) fn place_all(patch: &Patch, tileset: &TileSet) -> Result<Vec<Placed>, MatchError> {
    let mut cache: BTreeMap<&str, Vec<Vec<Point>>> = BTreeMap::new();
    for t in tileset.tiles() {
        cache.insert(&t.id, t.shape.convex_parts());
    }
    patch
        .placements
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let proto = tileset
                .tile(&p.tile)
                .ok_or_else(|| MatchError::UnknownTile {
                    index,
                    id: p.tile.clone(),
                })?;
            let pose = &p.pose;
            let vertices: Vec<Point> = proto
                .shape
                .vertices()
                .iter()
                .map(|&v| pose.apply(v))
                .collect();
            let labels = proto
                .edges
                .iter()
                .map(|l| {
                    if pose.reflects() {
                        l.mirrored()
                    } else {
                        l.clone()
                    }
                })
                .collect();
            let parts = cache[proto.id.as_str()]
                .iter()
                .map(|part| {
                    let mut q: Vec<Point> = part.iter().map(|&v| pose.apply(v)).collect();
                    if pose.reflects() {
                        q.reverse();
                    }
                    q
                })
                .collect();
            let bbox = BBox::of_points(vertices.iter().copied()).expect("non-empty polygon");
            let area = proto.shape.area() * pose.scale() * pose.scale();
            Ok(Placed {
                vertices,
                labels,
                parts,
                bbox,
                area,
            })
        })
        .collect()
}

struct RawAdjacency {
    adjacency: Adjacency,
    overclaimed: Vec<(EdgeKey, Vec<EdgeRef>)>,
}

fn adjacency_of(placed: &[Placed]) -> RawAdjacency {
    let mut index = VertexIndex::new(SNAP_GRID);
    let mut claims: BTreeMap<EdgeKey, Vec<EdgeRef>> = BTreeMap::new();
    for (pi, p) in placed.iter().enumerate() {
        let ids: Vec<usize> = p.vertices.iter().map(|&v| index.id(v)).collect();
        let n = ids.len();
        for side in 0..n {
            let (a, b) = (ids[side], ids[(side + 1) % n]);
            claims
                .entry((a.min(b), a.max(b)))
                .or_default()
                .push(EdgeRef {
                    placement: pi,
                    side,
                });
        }
    }
    let vertices = (0..index.len()).map(|i| index.point(i)).collect();
    let mut adjacency = Adjacency {
        vertices,
        ..Adjacency::default()
    };
    let mut overclaimed = Vec::new();
    for (key, refs) in claims {
        match refs.len() {
            1 => adjacency.boundary.push(refs[0]),
            2 => {
                adjacency.shared.insert(key, [refs[0], refs[1]]);
            }
            _ => overclaimed.push((key, refs)),
        }
    }
    adjacency.boundary.sort_unstable();
    adjacency.partial = partial_contacts(placed, &adjacency.boundary);
    RawAdjacency {
        adjacency,
        overclaimed,
    }
}

fn side_points(placed: &[Placed], e: EdgeRef) -> (Point, Point) {
    let vs = &placed[e.placement].vertices;
    (vs[e.side], vs[(e.side + 1) % vs.len()])
}

fn partial_contacts(placed: &[Placed], boundary: &[EdgeRef]) -> Vec<(EdgeRef, EdgeRef)> {
    let tol = SNAP_GRID;
    let boxes: Vec<BBox> = boundary
        .iter()
        .map(|&e| {
            let (a, b) = side_points(placed, e);
            BBox::of_points([a, b]).expect("two points").expand(tol)
        })
        .collect();
    let mut out = Vec::new();
    for (i, j) in overlapping_pairs(&boxes, 0.0) {
        let (ea, eb) = (boundary[i], boundary[j]);
        if ea.placement == eb.placement {
            continue;
        }
        let (a0, a1) = side_points(placed, ea);
        let (b0, b1) = side_points(placed, eb);
        let d = a1 - a0;
        let len = d.norm();
        let u = d.scale(1.0 / len);
        let off = |p: Point| u.cross(p - a0).abs();
        if off(b0) > tol || off(b1) > tol {
            continue;
        }
        let (t0, t1) = (u.dot(b0 - a0), u.dot(b1 - a0));
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(len);
        if hi - lo > tol {
            out.push((ea.min(eb), ea.max(eb)));
        }
    }
    out.sort_unstable();
    out
}

/// Pairs placed sides by their snapped endpoints and finds partial contacts.
pub fn build_adjacency(patch: &Patch, tileset: &TileSet) -> Result<Adjacency, MatchError> {
    let placed = place_all(patch, tileset)?;
    let raw = adjacency_of(&placed);
    if let Some((key, refs)) = raw.overclaimed.first() {
        return Err(MatchError::Overclaimed {
            from: raw.adjacency.vertex(key.0),
            to: raw.adjacency.vertex(key.1),
            claims: refs.len(),
        });
    }
    Ok(raw.adjacency)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MismatchKind {
    /// A full shared edge whose labels may not abut.
    Incompatible,
    /// More than two sides claim the same edge.
    Overclaimed,
    /// A partial contact under rules that forbid them.
    PartialContact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMismatch {
    pub kind: MismatchKind,
    pub edges: Vec<EdgeRef>,
    pub labels: Vec<EdgeLabel>,
    pub from: Point,
    pub to: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub edge_mismatches: Vec<EdgeMismatch>,
    pub overlaps: Vec<Overlap>,
    pub tile_counts: BTreeMap<String, usize>,
    pub shared_edges: usize,
    pub partial_contacts: usize,
    /// Sum of placement areas.
    pub covered_area: f64,
    /// Area of the convex hull of all placed vertices.
    pub hull_area: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.edge_mismatches.is_empty() && self.overlaps.is_empty()
    }

    /// Covered area over hull area; 1 for gap-free convex patches.
    pub fn coverage(&self) -> f64 {
        if self.hull_area > 0.0 {
            self.covered_area / self.hull_area
        } else {
            0.0
        }
    }
}

/// Overlapping placement pairs, in index order.
pub(crate) fn find_overlaps(placed: &[Placed]) -> Vec<Overlap> {
    let boxes: Vec<BBox> = placed.iter().map(|p| p.bbox).collect();
    let candidates = overlapping_pairs(&boxes, SNAP_GRID);
    candidates
        .par_iter()
        .filter_map(|&(a, b)| {
            let area = overlap_area_parts(&placed[a].parts, &placed[b].parts);
            (area > EPS_AREA).then_some(Overlap { a, b, area })
        })
        .collect()
}

/// Checks every full shared edge against the rules, every placement pair
/// for interior overlap, and counts tiles.
pub fn validate_patch(patch: &Patch, tileset: &TileSet) -> Result<ValidationReport, MatchError> {
    let placed = place_all(patch, tileset)?;
    let rules = tileset.rules();
    let raw = adjacency_of(&placed);
    let adj = &raw.adjacency;
    let label = |e: &EdgeRef| placed[e.placement].labels[e.side].clone();
    let mut mismatches = Vec::new();
    for (key, [a, b]) in &adj.shared {
        let (la, lb) = (label(a), label(b));
        if !rules.allows(&la, &lb) {
            mismatches.push(EdgeMismatch {
                kind: MismatchKind::Incompatible,
                edges: vec![*a, *b],
                labels: vec![la, lb],
                from: adj.vertex(key.0),
                to: adj.vertex(key.1),
            });
        }
    }
    for (key, refs) in &raw.overclaimed {
        mismatches.push(EdgeMismatch {
            kind: MismatchKind::Overclaimed,
            edges: refs.clone(),
            labels: refs.iter().map(label).collect(),
            from: adj.vertex(key.0),
            to: adj.vertex(key.1),
        });
    }
    if !rules.partial_contacts {
        for (a, b) in &adj.partial {
            let (from, to) = side_points(&placed, *a);
            mismatches.push(EdgeMismatch {
                kind: MismatchKind::PartialContact,
                edges: vec![*a, *b],
                labels: vec![label(a), label(b)],
                from,
                to,
            });
        }
    }
    mismatches.sort_by(|x, y| x.edges.cmp(&y.edges).then(x.kind.cmp(&y.kind)));

    let mut tile_counts = BTreeMap::new();
    for p in &patch.placements {
        *tile_counts.entry(p.tile.clone()).or_insert(0) += 1;
    }
    let all: Vec<Point> = placed
        .iter()
        .flat_map(|p| p.vertices.iter().copied())
        .collect();
    let hull = convex_hull(&all);
    let hull_area = if hull.len() >= 3 {
        signed_area(&hull)
    } else {
        0.0
    };
    Ok(ValidationReport {
        edge_mismatches: mismatches,
        overlaps: find_overlaps(&placed),
        tile_counts,
        shared_edges: adj.shared.len(),
        partial_contacts: adj.partial.len(),
        covered_area: placed.iter().map(|p| p.area).sum(),
        hull_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilespec::builtin_tileset;

    fn grid(tile: &str, rows: usize, cols: usize) -> Patch {
        let mut ps = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                ps.push(Placement::new(
                    tile,
                    Transform::translate(c as f64, r as f64),
                ));
            }
        }
        Patch::new(ps)
    }

    #[test]
    fn compat_examples() {
        let ts = builtin_tileset("square-vitruvian").unwrap();
        let r = ts.rules();
        assert!(edges_compatible(&EdgeLabel::plus("A"), &EdgeLabel::minus("A"), r).unwrap());
        assert!(!edges_compatible(&EdgeLabel::plus("A"), &EdgeLabel::minus("B"), r).unwrap());
        assert!(matches!(
            edges_compatible(&EdgeLabel::sym("Z"), &EdgeLabel::sym("Z"), r),
            Err(MatchError::UnknownLabel(_))
        ));
        let sym = builtin_tileset("square-sym").unwrap();
        assert!(edges_compatible(&EdgeLabel::sym("A"), &EdgeLabel::sym("A"), sym.rules()).unwrap());
    }

    #[test]
    fn two_by_one_shares_one_edge() {
        let ts = builtin_tileset("square-vitruvian").unwrap();
        let id = &ts.tiles()[0].id;
        let adj = build_adjacency(&grid(id, 1, 2), &ts).unwrap();
        assert_eq!(adj.shared.len(), 1);
        assert!(adj.partial.is_empty());
        let one = build_adjacency(&grid(id, 1, 1), &ts).unwrap();
        assert!(one.shared.is_empty());
    }

    #[test]
    fn vitruvian_two_by_two() {
        let ts = builtin_tileset("square-vitruvian").unwrap();
        let id = ts.tiles()[0].id.clone();
        let mut p = grid(&id, 2, 2);
        let rep = validate_patch(&p, &ts).unwrap();
        assert!(rep.is_valid(), "{rep:?}");
        assert_eq!(rep.shared_edges, 4);
        assert!((rep.coverage() - 1.0).abs() < 1e-9);
        p.placements[0].pose = Transform::rotation_about(180.0, Point::new(0.5, 0.5));
        let rep = validate_patch(&p, &ts).unwrap();
        assert!(!rep.edge_mismatches.is_empty());
        assert!(rep.overlaps.is_empty());
    }

    #[test]
    fn identical_squares_overlap_fully() {
        let ts = builtin_tileset("square-sym").unwrap();
        let id = ts.tiles()[0].id.clone();
        let p = Patch::new(vec![
            Placement::new(id.clone(), Transform::IDENTITY),
            Placement::new(id, Transform::IDENTITY),
        ]);
        let rep = validate_patch(&p, &ts).unwrap();
        assert_eq!(rep.overlaps.len(), 1);
        assert!((rep.overlaps[0].area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overclaimed_edge_is_structural() {
        let ts = builtin_tileset("square-sym").unwrap();
        let id = ts.tiles()[0].id.clone();
        let p = Patch::new(vec![
            Placement::new(id.clone(), Transform::IDENTITY),
            Placement::new(id.clone(), Transform::IDENTITY),
            Placement::new(id, Transform::translate(1.0, 0.0)),
        ]);
        assert!(matches!(
            build_adjacency(&p, &ts),
            Err(MatchError::Overclaimed { claims: 3, .. })
        ));
        let rep = validate_patch(&p, &ts).unwrap();
        assert!(rep
            .edge_mismatches
            .iter()
            .any(|m| m.kind == MismatchKind::Overclaimed));
    }

    #[test]
    fn partial_contact_detected() {
        let ts = builtin_tileset("square-sym").unwrap();
        let id = ts.tiles()[0].id.clone();
        let p = Patch::new(vec![
            Placement::new(id.clone(), Transform::IDENTITY),
            Placement::new(
                id,
                Transform::new(0.5, 0.0, false, Point::new(1.0, 0.25)).unwrap(),
            ),
        ]);
        let adj = build_adjacency(&p, &ts).unwrap();
        assert!(adj.shared.is_empty());
        assert_eq!(adj.partial.len(), 1);
        let rep = validate_patch(&p, &ts).unwrap();
        assert_eq!(rep.edge_mismatches[0].kind, MismatchKind::PartialContact);
    }

    #[test]
    fn patch_text_roundtrip() {
        let mut p = grid("sq", 1, 2);
        p.placements[1].pose = Transform::new(0.3, 123.4, true, Point::new(-1.5, 1e-7)).unwrap();
        assert_eq!(parse_patch(&p.to_text()).unwrap(), p);
        p.nodes = vec![
            NodeInfo {
                depth: 0,
                parent: None,
                site: None,
            },
            NodeInfo {
                depth: 1,
                parent: Some(0),
                site: Some(1),
            },
        ];
        assert_eq!(parse_patch(&p.to_text()).unwrap(), p);
        assert!(matches!(
            parse_patch("patch v2\n"),
            Err(MatchError::Parse { line: 1, .. })
        ));
        assert!(parse_patch("patch v1\nplace a 1 0 2 0 0\n").is_err());
    }
}
