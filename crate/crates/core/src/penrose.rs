//! Penrose kite/dart (P2) and rhombus (P3) patches by Robinson-triangle
//! substitution.
//!
//! Each whole tile is the union of a half-tile placed at the whole tile's
//! pose and its mirror image. P2 halves split along the kite and dart
//! axes; P3 halves split along the rhombus diagonal joining the two
//! non-apex corners. The substitution rules are data in the tile set; only
//! the whole/half split lives here.
//!
//! P2 markings: vertices are coloured (kite head and tail, dart sides dark;
//! the rest light) and a side reads `plus` when its counter-clockwise
//! traversal runs dark to light. Long sides are `L`, short sides `S`.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    cos_sin_deg, interior_angle_at, snap_key, Point, Polygon, Transform, SNAP_GRID,
};
use crate::matcher::{Patch, Placement};
use crate::tilespec::{EdgeLabel, RuleSet, SubstChild, TileProto, TileSet};

pub const PHI: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PenroseError {
    #[error("tile `{0}` is not a Penrose tile")]
    NotPenrose(String),
    #[error("patch mixes P2 and P3 tiles")]
    MixedSystems,
    #[error("seed `{0}` is not available for this tile set")]
    SeedSystem(&'static str),
    #[error("tile set has no substitution for `{0}`")]
    MissingSubstitution(String),
    #[error("no {0} tiles, ratio undefined")]
    ZeroDenominator(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    P2,
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedKind {
    SingleKite,
    SingleDart,
    Sun,
    Star,
    SingleThick,
    SingleThin,
}

impl SeedKind {
    pub const ALL: [SeedKind; 6] = [
        SeedKind::SingleKite,
        SeedKind::SingleDart,
        SeedKind::Sun,
        SeedKind::Star,
        SeedKind::SingleThick,
        SeedKind::SingleThin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeedKind::SingleKite => "single-kite",
            SeedKind::SingleDart => "single-dart",
            SeedKind::Sun => "sun",
            SeedKind::Star => "star",
            SeedKind::SingleThick => "single-thick",
            SeedKind::SingleThin => "single-thin",
        }
    }

    pub fn parse(s: &str) -> Option<SeedKind> {
        SeedKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().replace('-', "_") == s)
    }

    pub fn system(self) -> System {
        match self {
            SeedKind::SingleThick | SeedKind::SingleThin => System::P3,
            _ => System::P2,
        }
    }
}

/// Kind index 0 is the kite or thick rhombus, 1 the dart or thin rhombus.
struct Kinds {
    whole: [&'static str; 2],
    half: [&'static str; 2],
}

const P2_KINDS: Kinds = Kinds {
    whole: ["kite", "dart"],
    half: ["half-kite", "half-dart"],
};

const P3_KINDS: Kinds = Kinds {
    whole: ["thick", "thin"],
    half: ["half-thick", "half-thin"],
};

impl System {
    fn kinds(self) -> &'static Kinds {
        match self {
            System::P2 => &P2_KINDS,
            System::P3 => &P3_KINDS,
        }
    }

    /// Side of the half-tile shared with its mirror partner.
    fn merge_side(self) -> usize {
        match self {
            System::P2 => 2,
            System::P3 => 1,
        }
    }

    /// Maps the prototype half-tile onto its partner.
    fn mirror(self, kind: usize) -> Transform {
        match (self, kind) {
            (System::P2, _) => Transform::new(1.0, 180.0, true, Point::ORIGIN).expect("valid"),
            (System::P3, k) => {
                let apex = if k == 0 { 54.0 } else { 18.0 };
                let (c, _) = cos_sin_deg(apex);
                Transform::new(1.0, 0.0, true, Point::new(0.0, 2.0 * c)).expect("valid")
            }
        }
    }
}

/// What a tile id denotes within a Penrose system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Role {
    pub system: System,
    pub kind: usize,
    pub half: bool,
}

pub fn role_of(id: &str) -> Option<Role> {
    for system in [System::P2, System::P3] {
        let k = system.kinds();
        for kind in 0..2 {
            if k.whole[kind] == id {
                return Some(Role {
                    system,
                    kind,
                    half: false,
                });
            }
            if k.half[kind] == id {
                return Some(Role {
                    system,
                    kind,
                    half: true,
                });
            }
        }
    }
    None
}

/// Id of the whole tile a role belongs to.
pub fn whole_id(role: Role) -> &'static str {
    role.system.kinds().whole[role.kind]
}

fn polar(r: f64, deg_from_y: f64) -> Point {
    let (c, s) = cos_sin_deg(deg_from_y);
    Point::new(r * s, r * c)
}

fn mirror_x(p: Point) -> Point {
    Point::new(-p.x, p.y)
}

/// Half-kite `(head, side, tail)` and half-dart `(tip, side, notch)`.
fn p2_roles(kind: usize) -> [Point; 3] {
    match kind {
        0 => [Point::ORIGIN, polar(PHI, 36.0), Point::new(0.0, PHI)],
        _ => [Point::ORIGIN, polar(PHI, 36.0), Point::new(0.0, 1.0)],
    }
}

/// Half-thick and half-thin `(apex, base right, base left)`.
fn p3_roles(kind: usize) -> [Point; 3] {
    let half_apex = if kind == 0 { 54.0 } else { 18.0 };
    let b = polar(1.0, half_apex);
    [Point::ORIGIN, b, mirror_x(b)]
}

fn lerp_phi(a: Point, b: Point) -> Point {
    a + (b - a) * (1.0 / PHI)
}

fn child(tile: &str, from: [Point; 3], to: [Point; 3]) -> SubstChild {
    SubstChild {
        tile: tile.to_string(),
        transform: Transform::from_triangles(from, to).expect("similar triangles"),
    }
}

fn proto(id: &str, vs: Vec<Point>, edges: Vec<EdgeLabel>, motif: &str) -> TileProto {
    TileProto {
        id: id.to_string(),
        shape: Polygon::new(vs).expect("valid prototype"),
        edges,
        motif: Some(motif.to_string()),
        symmetry: 1,
    }
}

pub fn p2_geometry() -> TileSet {
    let (l, s) = ("L", "S");
    let [h, sr, t] = p2_roles(0);
    let [p, qr, n] = p2_roles(1);
    let tiles = vec![
        proto(
            "kite",
            vec![h, sr, t, mirror_x(sr)],
            vec![
                EdgeLabel::plus(l),
                EdgeLabel::minus(s),
                EdgeLabel::plus(s),
                EdgeLabel::minus(l),
            ],
            "arrow",
        ),
        proto(
            "dart",
            vec![p, qr, n, mirror_x(qr)],
            vec![
                EdgeLabel::minus(l),
                EdgeLabel::plus(s),
                EdgeLabel::minus(s),
                EdgeLabel::plus(l),
            ],
            "arrow",
        ),
        proto(
            "half-kite",
            vec![h, sr, t],
            vec![
                EdgeLabel::plus(l),
                EdgeLabel::minus(s),
                EdgeLabel::sym("KA"),
            ],
            "arrow",
        ),
        proto(
            "half-dart",
            vec![p, qr, n],
            vec![
                EdgeLabel::minus(l),
                EdgeLabel::plus(s),
                EdgeLabel::sym("DA"),
            ],
            "arrow",
        ),
    ];
    let hk = p2_roles(0);
    let hd = p2_roles(1);
    let mut rules = RuleSet::default();
    let d = lerp_phi(h, t);
    let e = lerp_phi(sr, h);
    rules.substitutions.insert(
        "half-kite".into(),
        vec![
            child("half-kite", hk, [sr, t, d]),
            child("half-kite", hk, [sr, e, d]),
            child("half-dart", hd, [h, d, e]),
        ],
    );
    let e = lerp_phi(p, qr);
    rules.substitutions.insert(
        "half-dart".into(),
        vec![
            child("half-kite", hk, [p, e, n]),
            child("half-dart", hd, [qr, n, e]),
        ],
    );
    TileSet::new(tiles, rules).expect("builtin p2 is valid")
}

pub fn p3_geometry() -> TileSet {
    let apex_far = |kind: usize| {
        let [_, b, c] = p3_roles(kind);
        Point::new(0.0, b.y + c.y)
    };
    let mut tiles = Vec::new();
    for (kind, id, edges) in [
        (0, "thick", ["a:minus", "a:plus", "b:plus", "b:minus"]),
        (1, "thin", ["a:plus", "a:minus", "b:plus", "b:minus"]),
    ] {
        let [a, b, c] = p3_roles(kind);
        tiles.push(proto(
            id,
            vec![a, b, apex_far(kind), c],
            edges.iter().map(|e| e.parse().expect("label")).collect(),
            "arrow",
        ));
    }
    for (kind, id, edges) in [
        (0, "half-thick", ["a:minus", "HB:sym", "b:minus"]),
        (1, "half-thin", ["a:plus", "TB:sym", "b:minus"]),
    ] {
        tiles.push(proto(
            id,
            p3_roles(kind).to_vec(),
            edges.iter().map(|e| e.parse().expect("label")).collect(),
            "arrow",
        ));
    }
    let thick = p3_roles(0);
    let thin = p3_roles(1);
    let mut rules = RuleSet::default();
    let [a, b, c] = thin;
    let p = lerp_phi(a, b);
    rules.substitutions.insert(
        "half-thin".into(),
        vec![
            child("half-thin", thin, [c, p, b]),
            child("half-thick", thick, [p, c, a]),
        ],
    );
    let [a, b, c] = thick;
    let q = lerp_phi(b, a);
    let r = lerp_phi(b, c);
    rules.substitutions.insert(
        "half-thick".into(),
        vec![
            child("half-thick", thick, [r, c, a]),
            child("half-thick", thick, [q, r, b]),
            child("half-thin", thin, [r, q, a]),
        ],
    );
    TileSet::new(tiles, rules).expect("builtin p3 is valid")
}

/// Whole-tile seed patch. Sun and star sit at the origin with a vertex on
/// the +x axis; single tiles have their axis on +y.
pub fn seed_patch(kind: SeedKind) -> Patch {
    let ring = |id: &str| {
        Patch::new(
            (0..5)
                .map(|i| Placement::new(id, Transform::rotation(-54.0 + 72.0 * i as f64)))
                .collect(),
        )
    };
    let single = |id: &str| Patch::new(vec![Placement::new(id, Transform::IDENTITY)]);
    match kind {
        SeedKind::SingleKite => single("kite"),
        SeedKind::SingleDart => single("dart"),
        SeedKind::Sun => ring("kite"),
        SeedKind::Star => ring("dart"),
        SeedKind::SingleThick => single("thick"),
        SeedKind::SingleThin => single("thin"),
    }
}

fn system_of(patch: &Patch) -> Result<Option<System>, PenroseError> {
    let mut system = None;
    for p in &patch.placements {
        let r = role_of(&p.tile).ok_or_else(|| PenroseError::NotPenrose(p.tile.clone()))?;
        match system {
            None => system = Some(r.system),
            Some(s) if s != r.system => return Err(PenroseError::MixedSystems),
            _ => {}
        }
    }
    Ok(system)
}

/// Replaces whole tiles by their two halves.
pub fn split(patch: &Patch) -> Result<Patch, PenroseError> {
    let mut out = Vec::with_capacity(patch.len() * 2);
    system_of(patch)?;
    for p in &patch.placements {
        let r = role_of(&p.tile).expect("checked");
        let half = r.system.kinds().half[r.kind];
        if r.half {
            out.push(p.clone());
        } else {
            out.push(Placement::new(half, p.pose));
            out.push(Placement::new(half, p.pose.then(&r.system.mirror(r.kind))));
        }
    }
    Ok(Patch::new(out))
}

/// One substitution step on a half-tile patch.
fn substitute(halves: &[Placement], rules: &RuleSet) -> Result<Vec<Placement>, PenroseError> {
    for id in ["half-kite", "half-dart", "half-thick", "half-thin"] {
        if halves.iter().any(|p| p.tile == id) && !rules.substitutions.contains_key(id) {
            return Err(PenroseError::MissingSubstitution(id.to_string()));
        }
    }
    Ok(halves
        .par_iter()
        .flat_map_iter(|p| {
            rules.substitutions[&p.tile]
                .iter()
                .map(move |c| Placement::new(c.tile.clone(), p.pose.then(&c.transform)))
        })
        .collect())
}

/// Kind index and the snapped ends of the merge side.
type MergeKey = (usize, (i64, i64), (i64, i64));

/// Joins mirror partners back into whole tiles. A whole tile takes the
/// position of its earlier half.
pub fn merge(patch: &Patch, tileset: &TileSet) -> Result<Patch, PenroseError> {
    let Some(system) = system_of(patch)? else {
        return Ok(patch.clone());
    };
    let side = system.merge_side();
    let key = |p: &Placement| -> Option<MergeKey> {
        let r = role_of(&p.tile)?;
        if !r.half {
            return None;
        }
        let proto = tileset.tile(&p.tile)?;
        let (a, b) = proto.shape.side(side);
        let (ka, kb) = (
            snap_key(p.pose.apply(a), SNAP_GRID),
            snap_key(p.pose.apply(b), SNAP_GRID),
        );
        Some((r.kind, ka.min(kb), ka.max(kb)))
    };
    let keys: Vec<_> = patch.placements.iter().map(key).collect();
    let mut groups: HashMap<_, Vec<usize>> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        if let Some(k) = k {
            groups.entry(*k).or_default().push(i);
        }
    }
    let mut out = Vec::with_capacity(patch.len());
    let mut skip = vec![false; patch.len()];
    for (i, p) in patch.placements.iter().enumerate() {
        if skip[i] {
            continue;
        }
        let pair = keys[i]
            .as_ref()
            .and_then(|k| groups.get(k))
            .filter(|g| g.len() == 2);
        match pair {
            Some(g) => {
                let j = if g[0] == i { g[1] } else { g[0] };
                skip[j] = true;
                let other = &patch.placements[j];
                let pose = if p.pose.reflects() && !other.pose.reflects() {
                    other.pose
                } else {
                    p.pose
                };
                let r = role_of(&p.tile).expect("half tile");
                out.push(Placement::new(system.kinds().whole[r.kind], pose));
            }
            None => out.push(p.clone()),
        }
    }
    Ok(Patch::new(out))
}

/// Applies `steps` substitution steps and merges partners. Zero steps
/// returns the patch unchanged.
pub fn deflate(tileset: &TileSet, patch: &Patch, steps: usize) -> Result<Patch, PenroseError> {
    if steps == 0 {
        system_of(patch)?;
        return Ok(patch.clone());
    }
    let mut halves = split(patch)?.placements;
    for _ in 0..steps {
        halves = substitute(&halves, tileset.rules())?;
    }
    merge(&Patch::new(halves), tileset)
}

/// Builds the seed in its tile set and deflates it.
pub fn generate(kind: SeedKind, depth: usize) -> Result<(TileSet, Patch), PenroseError> {
    let ts = match kind.system() {
        System::P2 => p2_geometry(),
        System::P3 => p3_geometry(),
    };
    let patch = deflate(&ts, &seed_patch(kind), depth)?;
    Ok((ts, patch))
}

/// Tile counts in half-tile units: `[kite or thick, dart or thin]`.
pub fn half_counts(patch: &Patch) -> Result<[u64; 2], PenroseError> {
    let mut c = [0u64; 2];
    for p in &patch.placements {
        let r = role_of(&p.tile).ok_or_else(|| PenroseError::NotPenrose(p.tile.clone()))?;
        c[r.kind] += if r.half { 1 } else { 2 };
    }
    Ok(c)
}

/// Whole-tile counts; a lone half counts one half.
pub fn tile_counts(patch: &Patch) -> Result<[f64; 2], PenroseError> {
    let [a, b] = half_counts(patch)?;
    Ok([a as f64 / 2.0, b as f64 / 2.0])
}

/// Kite:dart or thick:thin ratio.
pub fn tile_ratio(patch: &Patch) -> Result<f64, PenroseError> {
    let [a, b] = half_counts(patch)?;
    if b == 0 {
        let name = match system_of(patch)? {
            Some(System::P3) => "thin",
            _ => "dart",
        };
        return Err(PenroseError::ZeroDenominator(name));
    }
    Ok(a as f64 / b as f64)
}

/// Names of a prototype's corners, by vertex index.
pub fn corner_roles(id: &str) -> &'static [&'static str] {
    match id {
        "kite" => &["head", "side", "tail", "side"],
        "half-kite" => &["head", "side", "tail"],
        "dart" => &["tip", "wing", "notch", "wing"],
        "half-dart" => &["tip", "wing", "notch"],
        "thick" => &["obtuse", "acute", "obtuse", "acute"],
        "thin" => &["acute", "obtuse", "acute", "obtuse"],
        "half-thick" => &["obtuse", "acute", "acute"],
        "half-thin" => &["acute", "obtuse", "obtuse"],
        _ => &[],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Corner {
    /// Whole tile kind.
    pub kind: String,
    pub role: String,
    /// Interior angle in whole degrees.
    pub angle: u32,
}

impl Corner {
    pub fn new(kind: &str, role: &str, angle: u32) -> Self {
        Corner {
            kind: kind.to_string(),
            role: role.to_string(),
            angle,
        }
    }
}

/// The corners meeting at one vertex, read counter-clockwise, normalized to
/// the least sequence over rotations and reflections.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexStar {
    pub corners: Vec<Corner>,
}

impl VertexStar {
    pub fn new(corners: Vec<Corner>) -> Self {
        let n = corners.len();
        let mut best: Option<Vec<Corner>> = None;
        let mut rev = corners.clone();
        rev.reverse();
        for seq in [&corners, &rev] {
            for k in 0..n {
                let rot: Vec<_> = seq[k..].iter().chain(&seq[..k]).cloned().collect();
                if best.as_ref().is_none_or(|b| rot < *b) {
                    best = Some(rot);
                }
            }
        }
        VertexStar {
            corners: best.unwrap_or_default(),
        }
    }

    pub fn angle_sum(&self) -> u32 {
        self.corners.iter().map(|c| c.angle).sum()
    }
}

/// Distinct interior vertex stars of a Penrose patch. A vertex is interior
/// when the corners around it close to 360°.
pub fn vertex_stars(
    tileset: &TileSet,
    patch: &Patch,
) -> Result<BTreeSet<VertexStar>, PenroseError> {
    let mut index = crate::geometry::VertexIndex::new(SNAP_GRID);
    let mut at: HashMap<usize, Vec<(f64, Corner, f64)>> = HashMap::new();
    for p in &patch.placements {
        let r = role_of(&p.tile).ok_or_else(|| PenroseError::NotPenrose(p.tile.clone()))?;
        let proto = tileset
            .tile(&p.tile)
            .ok_or_else(|| PenroseError::NotPenrose(p.tile.clone()))?;
        let roles = corner_roles(&p.tile);
        let world = proto.shape.transformed(&p.pose);
        let vs = world.vertices();
        let n = vs.len();
        for i in 0..n {
            let (prev, cur, next) = (vs[(i + n - 1) % n], vs[i], vs[(i + 1) % n]);
            let alpha = interior_angle_at(prev, cur, next);
            let d = next - cur;
            let bisector = d.y.atan2(d.x).to_degrees() + alpha / 2.0;
            let j = if p.pose.reflects() { n - 1 - i } else { i };
            let corner = Corner::new(
                whole_id(r),
                roles.get(j).copied().unwrap_or("?"),
                alpha.round() as u32,
            );
            at.entry(index.id(cur))
                .or_default()
                .push((bisector.rem_euclid(360.0), corner, alpha));
        }
    }
    let mut out = BTreeSet::new();
    for mut corners in at.into_values() {
        let sum: f64 = corners.iter().map(|c| c.2).sum();
        if (sum - 360.0).abs() > 1e-6 {
            continue;
        }
        corners.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.insert(VertexStar::new(corners.into_iter().map(|c| c.1).collect()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::validate_patch;

    #[test]
    fn prototype_angles_and_areas() {
        let ts = p2_geometry();
        let kite = &ts.tile("kite").unwrap().shape;
        let dart = &ts.tile("dart").unwrap().shape;
        let ka: Vec<u32> = (0..4)
            .map(|i| kite.interior_angle(i).round() as u32)
            .collect();
        let da: Vec<u32> = (0..4)
            .map(|i| dart.interior_angle(i).round() as u32)
            .collect();
        assert_eq!(ka, vec![72, 72, 144, 72]);
        assert_eq!(da, vec![72, 36, 216, 36]);
        assert!((kite.area() / dart.area() - PHI).abs() < 1e-12);
        let p3 = p3_geometry();
        let r = p3.tile("thick").unwrap().shape.area() / p3.tile("thin").unwrap().shape.area();
        assert!((r - PHI).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_is_identity() {
        let ts = p2_geometry();
        let seed = seed_patch(SeedKind::Sun);
        assert_eq!(deflate(&ts, &seed, 0).unwrap(), seed);
    }

    #[test]
    fn split_then_merge_restores_seed() {
        let ts = p2_geometry();
        for kind in [SeedKind::Sun, SeedKind::Star] {
            let seed = seed_patch(kind);
            let back = merge(&split(&seed).unwrap(), &ts).unwrap();
            assert_eq!(back, seed);
        }
    }

    #[test]
    fn counts_single_kite() {
        let (_, p) = generate(SeedKind::SingleKite, 3).unwrap();
        assert_eq!(tile_counts(&p).unwrap(), [13.0, 8.0]);
        assert!((tile_ratio(&p).unwrap() - 1.625).abs() < 1e-12);
    }

    #[test]
    fn counts_sun() {
        let (_, p) = generate(SeedKind::Sun, 2).unwrap();
        assert_eq!(tile_counts(&p).unwrap(), [25.0, 15.0]);
    }

    #[test]
    fn ratio_needs_both_kinds() {
        let p = seed_patch(SeedKind::Sun);
        assert_eq!(tile_ratio(&p), Err(PenroseError::ZeroDenominator("dart")));
    }

    #[test]
    fn mixed_systems_rejected() {
        let p = Patch::new(vec![
            Placement::new("kite", Transform::IDENTITY),
            Placement::new("thin", Transform::translate(5.0, 0.0)),
        ]);
        assert_eq!(
            deflate(&p2_geometry(), &p, 1),
            Err(PenroseError::MixedSystems)
        );
    }

    #[test]
    fn deflations_validate() {
        for kind in SeedKind::ALL {
            for depth in 0..=4 {
                let (ts, p) = generate(kind, depth).unwrap();
                let rep = validate_patch(&p, &ts).unwrap();
                assert!(
                    rep.is_valid(),
                    "{kind:?} depth {depth}: {:?}",
                    rep.edge_mismatches.first()
                );
            }
        }
    }

    #[test]
    fn sun_seed_star() {
        let ts = p2_geometry();
        let stars = vertex_stars(&ts, &seed_patch(SeedKind::Sun)).unwrap();
        assert_eq!(stars.len(), 1);
        let s = stars.iter().next().unwrap();
        assert_eq!(s.corners, vec![Corner::new("kite", "head", 72); 5]);
        let one = Patch::new(vec![Placement::new("kite", Transform::IDENTITY)]);
        assert!(vertex_stars(&ts, &one).unwrap().is_empty());
    }

    #[test]
    fn star_normalization() {
        let c = |k: &str| Corner::new(k, "x", 1);
        let a = VertexStar::new(vec![c("b"), c("a"), c("c")]);
        let b = VertexStar::new(vec![c("c"), c("a"), c("b")]);
        assert_eq!(a, b);
    }
}
