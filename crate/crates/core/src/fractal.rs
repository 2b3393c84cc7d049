//! Fractal tile trees: every node spawns one scaled child per attachment
//! site on its tile's edges.
//!
//! A child's side `child_edge` is laid along the parent's site with its
//! midpoint on the site midpoint; the attachment's rotation and reflection
//! give the child's orientation relative to the parent.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::{Point, Polygon, Transform};
use crate::matcher::{find_overlaps, place_all, NodeInfo, Patch, Placement};
use crate::tilespec::{EdgeLabel, FractalAttachment, RuleSet, TileProto, TileSet};

pub const DEFAULT_NODE_BUDGET: usize = 100_000;
pub const BISECTION_STEPS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error("unknown tile `{0}`")]
    UnknownTile(String),
    #[error("tile `{0}` has no attachment sites")]
    NoAttachments(String),
    #[error("growth would create {needed} nodes, over the budget of {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("scale {0} must be in (0,1)")]
    BadScale(f64),
    #[error("invalid bracket [{lo}, {hi}]")]
    BadBracket { lo: f64, hi: f64 },
    #[error("lower scale {0} already collides")]
    LowCollides(f64),
    #[error("upper scale {0} does not collide")]
    HighSafe(f64),
    #[error("swap choice {0} is not 0, 1 or 2")]
    InvalidSwap(u8),
    #[error("patch is not a fractal tree")]
    NotTree,
    #[error(transparent)]
    Match(#[from] crate::matcher::MatchError),
}

/// A tree node as seen through a tree-annotated patch.
#[derive(Debug, Clone, PartialEq)]
pub struct FractalNode {
    pub placement: Placement,
    pub depth: usize,
    pub parent: Option<usize>,
    pub site: Option<FractalAttachment>,
}

pub fn nodes(patch: &Patch, tileset: &TileSet) -> Result<Vec<FractalNode>, FractalError> {
    if patch.nodes.len() != patch.len() {
        return Err(FractalError::NotTree);
    }
    Ok(patch
        .placements
        .iter()
        .zip(&patch.nodes)
        .map(|(p, n)| FractalNode {
            placement: p.clone(),
            depth: n.depth,
            parent: n.parent,
            site: n
                .site
                .and_then(|s| tileset.rules().attachments.get(s).cloned()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollisionReport {
    /// `(node, node, overlap area)` with the smaller index first.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Smallest depth of the deeper node over all colliding pairs.
    pub first_depth: Option<usize>,
}

impl CollisionReport {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowOptions {
    /// Replaces every attachment's scale when set.
    pub scale: Option<f64>,
    pub budget: usize,
}

impl Default for GrowOptions {
    fn default() -> Self {
        GrowOptions {
            scale: None,
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

fn fractal_rules(attachments: Vec<FractalAttachment>) -> RuleSet {
    let mut rules = RuleSet::default();
    rules.attachments = attachments;
    rules.partial_contacts = true;
    rules
}

fn site(
    parent: &str,
    edge: usize,
    range: (f64, f64),
    scale: f64,
    rotation: f64,
    reflect: bool,
) -> FractalAttachment {
    FractalAttachment {
        parent: parent.to_string(),
        edge,
        range,
        child: parent.to_string(),
        child_edge: 0,
        scale,
        rotation,
        reflect,
    }
}

/// A 1×2 rectangle whose children hang off its two long sides at half scale:
/// the mirrored child on the lower half of the left side, the plain child on
/// the upper half of the right side, both turned a quarter clockwise.
pub fn fractal_rect() -> TileSet {
    let tile = TileProto {
        id: "rect".into(),
        shape: Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ])
        .expect("rectangle"),
        edges: vec![
            EdgeLabel::plus("A"),
            EdgeLabel::minus("A"),
            EdgeLabel::sym("R"),
            EdgeLabel::minus("A"),
        ],
        motif: Some("arrow".into()),
        symmetry: 1,
    };
    let rules = fractal_rules(vec![
        site("rect", 3, (0.0, 0.5), 0.5, 270.0, true),
        site("rect", 1, (0.5, 1.0), 0.5, 270.0, false),
    ]);
    TileSet::new(vec![tile], rules).expect("builtin fractal-rect is valid")
}

/// Scale of the builtin triangle tree.
pub const TRI_SCALE: f64 = 2.0 / 3.0;

/// A unit equilateral triangle with a mirrored child on its right side and
/// a plain child on its left side.
pub fn fractal_tri() -> TileSet {
    let h = 3f64.sqrt() / 2.0;
    let tile = TileProto {
        id: "tri".into(),
        shape: Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, h),
        ])
        .expect("triangle"),
        edges: vec![EdgeLabel::sym("A"); 3],
        motif: Some("fan".into()),
        symmetry: 3,
    };
    let rules = fractal_rules(vec![
        site("tri", 1, (0.0, 1.0), TRI_SCALE, 120.0, true),
        site("tri", 2, (0.0, 1.0), TRI_SCALE, 60.0, false),
    ]);
    TileSet::new(vec![tile], rules).expect("builtin fractal-tri is valid")
}

/// Child pose relative to the parent's frame.
pub fn site_transform(
    parent: &TileProto,
    child: &TileProto,
    a: &FractalAttachment,
    scale: f64,
) -> Transform {
    let linear = Transform::new(scale, a.rotation, a.reflect, Point::ORIGIN).expect("valid scale");
    let (c0, c1) = child.shape.side(a.child_edge);
    let (p0, p1) = parent.shape.side(a.edge);
    let site_mid = p0.lerp(p1, 0.5 * (a.range.0 + a.range.1));
    let t = site_mid - linear.apply(c0.lerp(c1, 0.5));
    Transform::new(scale, a.rotation, a.reflect, t).expect("valid transform")
}

fn node_count(
    tileset: &TileSet,
    root: &str,
    depth: usize,
    budget: usize,
) -> Result<usize, FractalError> {
    let mut level = vec![root.to_string()];
    let mut total = 1usize;
    for _ in 0..depth {
        let mut next = Vec::new();
        for id in &level {
            next.extend(tileset.attachments_for(id).map(|a| a.child.clone()));
            if total + next.len() > budget {
                return Err(FractalError::BudgetExceeded {
                    needed: total + next.len(),
                    budget,
                });
            }
        }
        total += next.len();
        level = next;
    }
    Ok(total)
}

/// Grows the tree breadth-first. `frame(i, placement)` may re-pose node `i`
/// before its children attach.
fn grow_with(
    tileset: &TileSet,
    root: &str,
    depth: usize,
    opts: GrowOptions,
    mut frame: impl FnMut(usize, &TileProto, Transform) -> Transform,
) -> Result<Patch, FractalError> {
    let root_proto = tileset
        .tile(root)
        .ok_or_else(|| FractalError::UnknownTile(root.to_string()))?;
    if let Some(s) = opts.scale {
        if !(s > 0.0 && s < 1.0) {
            return Err(FractalError::BadScale(s));
        }
    }
    if depth > 0 && tileset.attachments_for(root).next().is_none() {
        return Err(FractalError::NoAttachments(root.to_string()));
    }
    let n = node_count(tileset, root, depth, opts.budget)?;
    let mut patch = Patch::default();
    patch.placements.reserve(n);
    let pose = frame(0, root_proto, Transform::IDENTITY);
    patch.placements.push(Placement::new(root, pose));
    patch.nodes.push(NodeInfo {
        depth: 0,
        parent: None,
        site: None,
    });
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let d = patch.nodes[i].depth;
        if d == depth {
            continue;
        }
        let parent_id = patch.placements[i].tile.clone();
        let parent = tileset.tile(&parent_id).expect("validated tile set");
        let parent_pose = patch.placements[i].pose;
        for (k, a) in tileset.rules().attachments.iter().enumerate() {
            if a.parent != parent_id {
                continue;
            }
            let child = tileset.tile(&a.child).expect("validated tile set");
            let rel = site_transform(parent, child, a, opts.scale.unwrap_or(a.scale));
            let j = patch.placements.len();
            let pose = frame(j, child, parent_pose.then(&rel));
            patch.placements.push(Placement::new(a.child.clone(), pose));
            patch.nodes.push(NodeInfo {
                depth: d + 1,
                parent: Some(i),
                site: Some(k),
            });
            queue.push_back(j);
        }
    }
    Ok(patch)
}

pub fn grow(
    tileset: &TileSet,
    root: &str,
    depth: usize,
    opts: GrowOptions,
) -> Result<Patch, FractalError> {
    grow_with(tileset, root, depth, opts, |_, _, pose| pose)
}

/// Growth where node `i` is first turned by `120·swaps[i]` degrees about its
/// centroid, permuting the three sub-triangles of its tile. Missing entries
/// mean no turn.
pub fn triangle_variant(
    tileset: &TileSet,
    root: &str,
    swaps: &[u8],
    depth: usize,
    opts: GrowOptions,
) -> Result<Patch, FractalError> {
    if let Some(&bad) = swaps.iter().find(|&&s| s > 2) {
        return Err(FractalError::InvalidSwap(bad));
    }
    grow_with(tileset, root, depth, opts, |i, proto, pose| {
        match swaps.get(i).copied().unwrap_or(0) {
            0 => pose,
            k => pose.then(&Transform::rotation_about(
                120.0 * k as f64,
                proto.shape.centroid(),
            )),
        }
    })
}

/// Three triangles joining a tile's centroid to its sides.
pub fn sub_triangles(tile: &TileProto) -> Vec<[Point; 3]> {
    let c = tile.shape.centroid();
    (0..tile.shape.len())
        .map(|i| {
            let (a, b) = tile.shape.side(i);
            [a, b, c]
        })
        .collect()
}

/// Node pairs with positive overlap area. Tiles that only touch along an
/// attachment site have zero overlap and never appear.
pub fn detect_collisions(
    patch: &Patch,
    tileset: &TileSet,
) -> Result<CollisionReport, FractalError> {
    if !patch.nodes.is_empty() && patch.nodes.len() != patch.len() {
        return Err(FractalError::NotTree);
    }
    let placed = place_all(patch, tileset)?;
    let pairs: Vec<(usize, usize, f64)> = find_overlaps(&placed)
        .into_iter()
        .map(|o| (o.a, o.b, o.area))
        .collect();
    let depth = |i: usize| patch.nodes.get(i).map_or(0, |n| n.depth);
    let first_depth = pairs.iter().map(|&(a, b, _)| depth(a).max(depth(b))).min();
    Ok(CollisionReport { pairs, first_depth })
}

fn collides(tileset: &TileSet, root: &str, depth: usize, scale: f64) -> Result<bool, FractalError> {
    let opts = GrowOptions {
        scale: Some(scale),
        ..GrowOptions::default()
    };
    let patch = grow(tileset, root, depth, opts)?;
    Ok(!detect_collisions(&patch, tileset)?.is_empty())
}

/// Largest uniform child scale in `[lo, hi]` found collision-free by
/// bisection.
pub fn max_safe_scale(
    tileset: &TileSet,
    root: &str,
    depth: usize,
    lo: f64,
    hi: f64,
) -> Result<f64, FractalError> {
    if !(lo > 0.0 && hi < 1.0 && hi - lo > 1e-9) {
        return Err(FractalError::BadBracket { lo, hi });
    }
    if collides(tileset, root, depth, lo)? {
        return Err(FractalError::LowCollides(lo));
    }
    if !collides(tileset, root, depth, hi)? {
        return Err(FractalError::HighSafe(hi));
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if collides(tileset, root, depth, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{build_adjacency, validate_patch};

    #[test]
    fn node_counts() {
        let ts = fractal_rect();
        assert_eq!(
            grow(&ts, "rect", 0, GrowOptions::default()).unwrap().len(),
            1
        );
        assert_eq!(
            grow(&ts, "rect", 3, GrowOptions::default()).unwrap().len(),
            15
        );
        let p = grow(&ts, "rect", 6, GrowOptions::default()).unwrap();
        assert_eq!(p.len(), 127);
        let rep = validate_patch(&p, &ts).unwrap();
        assert!(rep.overlaps.is_empty());
    }

    #[test]
    fn depth_one_is_partial_contact() {
        let ts = fractal_rect();
        let p = grow(&ts, "rect", 1, GrowOptions::default()).unwrap();
        let one = Patch::new(p.placements[..2].to_vec());
        let adj = build_adjacency(&one, &ts).unwrap();
        assert_eq!(adj.partial.len(), 1);
        assert!(adj.shared.is_empty());
    }

    #[test]
    fn scale_law() {
        let ts = fractal_rect();
        let p = grow(&ts, "rect", 5, GrowOptions::default()).unwrap();
        for (pl, n) in p.placements.iter().zip(&p.nodes) {
            let want = 0.5f64.powi(n.depth as i32);
            assert!((pl.pose.scale() - want).abs() <= 1e-9 * want);
        }
    }

    #[test]
    fn budget_enforced() {
        let ts = fractal_rect();
        let opts = GrowOptions {
            budget: 100,
            ..GrowOptions::default()
        };
        assert!(matches!(
            grow(&ts, "rect", 7, opts),
            Err(FractalError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn rect_half_scale_is_safe_tri_collides() {
        let ts = fractal_rect();
        let p = grow(&ts, "rect", 6, GrowOptions::default()).unwrap();
        assert!(detect_collisions(&p, &ts).unwrap().is_empty());
        let tri = fractal_tri();
        let p = grow(&tri, "tri", 6, GrowOptions::default()).unwrap();
        let rep = detect_collisions(&p, &tri).unwrap();
        assert!(!rep.is_empty());
        assert!(rep.first_depth.unwrap() <= 8);
        let third = GrowOptions {
            scale: Some(1.0 / 3.0),
            ..GrowOptions::default()
        };
        let p = grow(&tri, "tri", 6, third).unwrap();
        assert!(detect_collisions(&p, &tri).unwrap().is_empty());
    }

    #[test]
    fn bracket_errors() {
        let ts = fractal_rect();
        assert!(matches!(
            max_safe_scale(&ts, "rect", 3, 0.5, 0.5 + 1e-12),
            Err(FractalError::BadBracket { .. })
        ));
        assert!(matches!(
            max_safe_scale(&ts, "rect", 3, 0.5, 0.55),
            Err(FractalError::HighSafe(_))
        ));
    }

    #[test]
    fn zero_swaps_match_grow() {
        let ts = fractal_tri();
        let a = grow(&ts, "tri", 2, GrowOptions::default()).unwrap();
        let b = triangle_variant(&ts, "tri", &[0; 7], 2, GrowOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            triangle_variant(&ts, "tri", &[3], 2, GrowOptions::default()),
            Err(FractalError::InvalidSwap(3))
        );
    }

    #[test]
    fn sub_triangles_tile_the_parent() {
        let ts = fractal_tri();
        let t = &ts.tiles()[0];
        let total: f64 = sub_triangles(t)
            .iter()
            .map(|tr| crate::geometry::signed_area(tr))
            .sum();
        assert!((total - t.shape.area()).abs() < 1e-12);
    }
}
