//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use tessera::geometry::{overlap_area, Polygon};
use tessera::penrose::{Corner, VertexStar, PHI};
use tessera::{builtin_tileset, Patch, Placement, Point, Transform};

/// `(kites, darts)` after 0..=depth deflations of one kite, via k' = 2k + d, d' = k + d.
pub fn recurrence_table(depth: usize) -> Vec<(u64, u64)> {
    let mut out = vec![(1, 0)];
    for _ in 0..depth {
        let (k, d) = *out.last().unwrap();
        out.push((2 * k + d, k + d));
    }
    out
}

#[derive(Clone, Copy)]
struct CornerType {
    kind: &'static str,
    role: &'static str,
    index: usize,
    angle: f64,
    dark: bool,
    out_long: bool,
    in_long: bool,
}

fn corner_types() -> Vec<CornerType> {
    let ts = builtin_tileset("p2").unwrap();
    let mut out = Vec::new();
    for (kind, roles, dark) in [
        (
            "kite",
            ["head", "side", "tail", "side"],
            [true, false, true, false],
        ),
        (
            "dart",
            ["tip", "wing", "notch", "wing"],
            [false, true, false, true],
        ),
    ] {
        let shape = &ts.tile(kind).unwrap().shape;
        let vs = shape.vertices();
        let long = |a: Point, b: Point| (a.dist(b) - PHI).abs() < 1e-9;
        for j in 0..4 {
            out.push(CornerType {
                kind,
                role: roles[j],
                index: j,
                angle: shape.interior_angle(j),
                dark: dark[j],
                out_long: long(vs[j], vs[(j + 1) % 4]),
                in_long: long(vs[(j + 3) % 4], vs[j]),
            });
        }
    }
    out
}

fn realizable(seq: &[CornerType]) -> bool {
    let ts = builtin_tileset("p2").unwrap();
    let mut polys: Vec<Polygon> = Vec::new();
    let mut theta = 0.0;
    for c in seq {
        let shape = &ts.tile(c.kind).unwrap().shape;
        let (v, next) = shape.side(c.index);
        let d = next - v;
        let pose = Transform::rotation(theta - d.y.atan2(d.x).to_degrees())
            .then(&Transform::translate(-v.x, -v.y));
        polys.push(shape.transformed(&pose));
        theta += c.angle;
    }
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            if overlap_area(&polys[i], &polys[j]) > 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Every P2 vertex star: corner cycles summing to 360° in which all corners
/// share the vertex colour, neighbouring sides have equal length, and the
/// tiles can be laid out without overlap.
pub fn legal_p2_stars() -> BTreeSet<VertexStar> {
    let types = corner_types();
    let mut out = BTreeSet::new();
    let mut seq: Vec<CornerType> = Vec::new();
    fn rec(
        types: &[CornerType],
        seq: &mut Vec<CornerType>,
        sum: f64,
        out: &mut BTreeSet<VertexStar>,
    ) {
        if (sum - 360.0).abs() < 1e-6 {
            let n = seq.len();
            let joins = (0..n).all(|i| seq[i].in_long == seq[(i + 1) % n].out_long);
            let colour = seq.iter().all(|c| c.dark == seq[0].dark);
            if joins && colour && realizable(seq) {
                out.insert(VertexStar::new(
                    seq.iter()
                        .map(|c| Corner::new(c.kind, c.role, c.angle.round() as u32))
                        .collect(),
                ));
            }
            return;
        }
        for t in types {
            if sum + t.angle < 360.0 + 1e-6 {
                seq.push(*t);
                rec(types, seq, sum + t.angle, out);
                seq.pop();
            }
        }
    }
    rec(&types, &mut seq, 0.0, &mut out);
    out
}

/// Four kites and a dart with their 72° corners around the origin; the
/// dart's long sides meet kite long sides of the wrong colour.
pub fn forged_star_patch() -> Patch {
    let mut ps: Vec<Placement> = (0..4)
        .map(|i| Placement::new("kite", Transform::rotation(-54.0 + 72.0 * i as f64)))
        .collect();
    ps.push(Placement::new("dart", Transform::rotation(-54.0 + 288.0)));
    Patch::new(ps)
}

/// A kite and a dart sharing one long side with mismatched colouring.
pub fn forged_pair_patch() -> Patch {
    Patch::new(vec![
        Placement::new("kite", Transform::rotation(-54.0)),
        Placement::new("dart", Transform::rotation(18.0)),
    ])
}

/// Labels as `(name, polarity)` with polarity `'s'`, `'+'` or `'-'`.
fn fits(a: (&str, char), b: (&str, char)) -> bool {
    a.0 == b.0 && matches!((a.1, b.1), ('s', 's') | ('+', '-') | ('-', '+'))
}

fn label_at(edges: &[(&'static str, char); 4], q: usize, side: usize) -> (&'static str, char) {
    edges[(side + 4 - q) % 4]
}

/// Counts `rows × cols` grids of quarter-turned squares, first row fixed to
/// the least valid row, by a row-transfer count rather than cell search.
pub fn row_count_oracle(edges: [(&'static str, char); 4], rows: usize, cols: usize) -> u64 {
    let decode = |code: usize| -> Vec<usize> {
        (0..cols)
            .map(|i| (code >> (2 * (cols - 1 - i))) & 3)
            .collect()
    };
    let valid: Vec<Vec<usize>> = (0..1usize << (2 * cols))
        .map(decode)
        .filter(|r| {
            r.windows(2)
                .all(|w| fits(label_at(&edges, w[0], 1), label_at(&edges, w[1], 3)))
        })
        .collect();
    let above = |lo: &[usize], hi: &[usize]| {
        lo.iter()
            .zip(hi)
            .all(|(&a, &b)| fits(label_at(&edges, a, 2), label_at(&edges, b, 0)))
    };
    let mut ways = vec![0u64; valid.len()];
    ways[0] = 1;
    for _ in 1..rows {
        let mut next = vec![0u64; valid.len()];
        for (i, lo) in valid.iter().enumerate() {
            if ways[i] == 0 {
                continue;
            }
            for (j, hi) in valid.iter().enumerate() {
                if above(lo, hi) {
                    next[j] += ways[i];
                }
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

pub const TWO_ADJACENT: [(&str, char); 4] = [("A", '+'), ("A", '+'), ("A", '-'), ("A", '-')];
pub const SWIRL: [(&str, char); 4] = [("A", '+'), ("A", '-'), ("B", '+'), ("B", '-')];
pub const VITRUVIAN: [(&str, char); 4] = [("A", '+'), ("B", '+'), ("A", '-'), ("B", '-')];

/// 2×2 blocks `[ll, lr, ur, ul]` that match inside, repeat by translation and
/// are closed under a quarter turn, by brute force over 4⁴ orientations.
pub fn pinwheel_oracle(edges: [(&'static str, char); 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for ll in 0..4 {
        for lr in 0..4 {
            for ur in 0..4 {
                for ul in 0..4 {
                    let h =
                        |a: usize, b: usize| fits(label_at(&edges, a, 1), label_at(&edges, b, 3));
                    let v =
                        |a: usize, b: usize| fits(label_at(&edges, a, 2), label_at(&edges, b, 0));
                    let inside = h(ll, lr) && h(ul, ur) && v(ll, ul) && v(lr, ur);
                    let wrap = h(lr, ll) && h(ur, ul) && v(ul, ll) && v(ur, lr);
                    let closed = lr == (ll + 1) % 4 && ur == (lr + 1) % 4 && ul == (ur + 1) % 4;
                    if inside && wrap && closed {
                        out.push([ll, lr, ur, ul]);
                    }
                }
            }
        }
    }
    out
}

/// Placement multiset comparison up to `tol` on the pose matrices.
pub fn same_placements(a: &Patch, b: &Patch, tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.placements.iter().all(|p| {
        let hit = b
            .placements
            .iter()
            .enumerate()
            .find(|(i, q)| !used[*i] && q.tile == p.tile && q.pose.approx_eq(&p.pose, tol));
        match hit {
            Some((i, _)) => {
                used[i] = true;
                true
            }
            None => false,
        }
    })
}

/// Placed polygons of a patch, in placement order.
pub fn world_polygons(patch: &Patch, ts: &tessera::TileSet) -> Vec<Polygon> {
    patch
        .placements
        .iter()
        .map(|p| ts.tile(&p.tile).unwrap().shape.transformed(&p.pose))
        .collect()
}

/// Tile-spec fixtures, sorted by file name.
pub fn fixture_paths() -> Vec<std::path::PathBuf> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .expect("fixture dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "tiles"))
        .collect();
    out.sort();
    out
}

/// Checks one fixture against its `# expect:` header line: either
/// `ok tiles=N` or an error code with `at=LINE:COL` or `line=N`.
pub fn check_fixture(text: &str) -> Result<(), String> {
    use tessera::{parse_tileset, TilespecError};
    let header = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# expect: "))
        .ok_or("missing expect header")?;
    let mut words = header.split_whitespace();
    let want = words.next().ok_or("empty expect header")?;
    let attrs: Vec<(&str, &str)> = words.filter_map(|w| w.split_once('=')).collect();
    let attr = |k: &str| attrs.iter().find(|a| a.0 == k).map(|a| a.1);
    let parsed = parse_tileset(text);
    if want == "ok" {
        let ts = parsed.map_err(|e| format!("expected ok, got {} ({e})", e.code()))?;
        if let Some(n) = attr("tiles") {
            if ts.tiles().len().to_string() != n {
                return Err(format!("expected {n} tiles, got {}", ts.tiles().len()));
            }
        }
        let text1 = ts.to_text();
        let back = parse_tileset(&text1).map_err(|e| format!("reparse failed: {e}"))?;
        if back != ts {
            return Err("serialize then parse changed the tile set".into());
        }
        if back.to_text() != text1 {
            return Err("serialized text not stable".into());
        }
        return Ok(());
    }
    let err = match parsed {
        Ok(_) => return Err(format!("expected {want}, parsed ok")),
        Err(e) => e,
    };
    if err.code() != want {
        return Err(format!("expected {want}, got {} ({err})", err.code()));
    }
    let got = match &err {
        TilespecError::Syntax { line, col, .. } => format!("at={line}:{col}"),
        TilespecError::Semantic { line: Some(l), .. } => format!("line={l}"),
        _ => String::new(),
    };
    let expected = attr("at")
        .map(|v| format!("at={v}"))
        .or_else(|| attr("line").map(|v| format!("line={v}")))
        .unwrap_or_default();
    if got != expected {
        return Err(format!("expected position {expected}, got {got} ({err})"));
    }
    Ok(())
}
