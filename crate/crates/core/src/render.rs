//! Deterministic SVG output and patch statistics.
//!
//! Every tile kind in use becomes one `<symbol>` in the tile's own frame;
//! every placement becomes a `<use>` whose `matrix(a b c d e f)` is the
//! placement pose. The scene group flips y so the plane's y axis points up.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{BBox, Point, Transform};
use crate::matcher::{find_overlaps, place_all, MatchError, Patch};
use crate::penrose;
use crate::tilespec::{TileProto, TileSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("invalid colour `{0}`, expected #rrggbb")]
    InvalidColor(String),
    #[error("unknown motif `{0}`")]
    UnknownMotif(String),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub const BUILTIN_MOTIFS: [&str; 2] = ["arrow", "fan"];

const PALETTE: [&str; 6] = [
    "#f4d35e", "#ee964b", "#89c2d9", "#faf0ca", "#f95738", "#83c5be",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub stroke_width: f64,
    /// Fill per tile id; unlisted tiles take palette colours in tile-set order.
    pub fills: BTreeMap<String, String>,
    pub show_labels: bool,
    pub show_collisions: bool,
    /// Overrides a tile's own motif.
    pub motif_map: BTreeMap<String, String>,
    /// SVG fragments for non-builtin motifs, keyed by motif id.
    pub motifs: BTreeMap<String, String>,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            stroke_width: 1.0,
            fills: BTreeMap::new(),
            show_labels: false,
            show_collisions: false,
            motif_map: BTreeMap::new(),
            motifs: BTreeMap::new(),
        }
    }
}

impl Style {
    /// Adds every `<id>.svg` in `dir` as a motif fragment.
    pub fn load_motif_dir(&mut self, dir: &Path) -> Result<(), RenderError> {
        let io = |p: &Path, e: std::io::Error| RenderError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "svg"))
            .collect();
        entries.sort();
        for p in entries {
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let text = std::fs::read_to_string(&p).map_err(|e| io(&p, e))?;
            self.motifs.insert(id, text.trim().to_string());
        }
        Ok(())
    }

    fn fill(&self, index: usize, id: &str) -> &str {
        self.fills
            .get(id)
            .map(String::as_str)
            .unwrap_or(PALETTE[index % PALETTE.len()])
    }

    fn check(&self) -> Result<(), RenderError> {
        for c in self.fills.values() {
            let ok = c.len() == 7
                && c.starts_with('#')
                && c[1..].chars().all(|ch| ch.is_ascii_hexdigit());
            if !ok {
                return Err(RenderError::InvalidColor(c.clone()));
            }
        }
        Ok(())
    }
}

/// Fixed six-decimal formatting with negative zero folded to zero.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn points_attr(pts: &[Point]) -> String {
    pts.iter()
        .map(|p| format!("{},{}", fmt6(p.x), fmt6(p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn matrix_attr(t: &Transform) -> String {
    let m = t.to_matrix();
    format!(
        "matrix({} {} {} {} {} {})",
        fmt6(m[0]),
        fmt6(m[1]),
        fmt6(m[2]),
        fmt6(m[3]),
        fmt6(m[4]),
        fmt6(m[5])
    )
}

fn builtin_motif(name: &str, tile: &TileProto) -> Option<String> {
    let b = tile.shape.bbox();
    let c = tile.shape.centroid();
    let r = 0.3 * b.width().min(b.height());
    match name {
        "arrow" => {
            let tip = Point::new(c.x, c.y + r);
            let tail = Point::new(c.x, c.y - r);
            let l = Point::new(c.x - 0.4 * r, c.y + 0.5 * r);
            let rt = Point::new(c.x + 0.4 * r, c.y + 0.5 * r);
            Some(format!(
                "<polyline class=\"motif\" points=\"{}\" fill=\"none\" stroke=\"#333333\"/>\
                 <polyline class=\"motif\" points=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
                points_attr(&[tail, tip]),
                points_attr(&[l, tip, rt])
            ))
        }
        "fan" => {
            let mut s = String::new();
            for v in tile.shape.vertices() {
                let _ = write!(
                    s,
                    "<polyline class=\"motif\" points=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
                    points_attr(&[c, *v])
                );
            }
            Some(s)
        }
        _ => None,
    }
}

fn motif_markup(style: &Style, tile: &TileProto) -> Result<String, RenderError> {
    let Some(name) = style.motif_map.get(&tile.id).or(tile.motif.as_ref()) else {
        return Ok(String::new());
    };
    if let Some(frag) = style.motifs.get(name) {
        return Ok(frag.clone());
    }
    builtin_motif(name, tile).ok_or_else(|| RenderError::UnknownMotif(name.clone()))
}

/// Renders `patch` as a standalone SVG document.
pub fn to_svg(patch: &Patch, tileset: &TileSet, style: &Style) -> Result<String, RenderError> {
    style.check()?;
    for m in style.motif_map.values() {
        if !style.motifs.contains_key(m) && !BUILTIN_MOTIFS.contains(&m.as_str()) {
            return Err(RenderError::UnknownMotif(m.clone()));
        }
    }
    let placed = place_all(patch, tileset)?;
    let bbox = placed.iter().map(|p| p.bbox).reduce(|a, b| a.union(&b));
    let (x, y, w, h) = match bbox {
        None => (0.0, 0.0, 1.0, 1.0),
        Some(b) => {
            let pad = 0.02 * b.width().max(b.height()).max(1e-9);
            (
                b.min.x - pad,
                -b.max.y - pad,
                b.width() + 2.0 * pad,
                b.height() + 2.0 * pad,
            )
        }
    };

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" version=\"1.1\" viewBox=\"{} {} {} {}\">",
        fmt6(x),
        fmt6(y),
        fmt6(w),
        fmt6(h)
    );
    s.push_str("<defs>\n");
    for (i, t) in tileset.tiles().iter().enumerate() {
        if !patch.placements.iter().any(|p| p.tile == t.id) {
            continue;
        }
        let _ = writeln!(
            s,
            "<symbol id=\"tile-{}\" overflow=\"visible\"><polygon points=\"{}\" fill=\"{}\" stroke=\"#000000\" stroke-width=\"{}\" vector-effect=\"non-scaling-stroke\"/>{}</symbol>",
            t.id,
            points_attr(t.shape.vertices()),
            style.fill(i, &t.id),
            fmt6(style.stroke_width),
            motif_markup(style, t)?
        );
    }
    s.push_str("</defs>\n");
    s.push_str("<g id=\"scene\" transform=\"matrix(1 0 0 -1 0 0)\">\n");
    for (i, p) in patch.placements.iter().enumerate() {
        let _ = writeln!(
            s,
            "<use xlink:href=\"#tile-{}\" data-index=\"{}\" transform=\"{}\"/>",
            p.tile,
            i,
            matrix_attr(&p.pose)
        );
    }
    if style.show_collisions {
        let mut hit: Vec<usize> = find_overlaps(&placed)
            .iter()
            .flat_map(|o| [o.a, o.b])
            .collect();
        hit.sort_unstable();
        hit.dedup();
        for i in hit {
            let _ = writeln!(
                s,
                "<polygon class=\"collision\" points=\"{}\" fill=\"none\" stroke=\"#ff0000\" stroke-width=\"{}\" vector-effect=\"non-scaling-stroke\"/>",
                points_attr(&placed[i].vertices),
                fmt6(2.0 * style.stroke_width)
            );
        }
    }
    s.push_str("</g>\n");
    if style.show_labels {
        let size = 0.01 * w.max(h);
        s.push_str("<g id=\"labels\" text-anchor=\"middle\">\n");
        for p in &placed {
            let n = p.vertices.len();
            for k in 0..n {
                let m = p.vertices[k].lerp(p.vertices[(k + 1) % n], 0.5);
                let _ = writeln!(
                    s,
                    "<text x=\"{}\" y=\"{}\" font-size=\"{}\">{}</text>",
                    fmt6(m.x),
                    fmt6(-m.y),
                    fmt6(size),
                    p.labels[k]
                );
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Poses recovered from the `<use>` elements of a document written by [`to_svg`].
pub fn poses_from_svg(svg: &str) -> Vec<(String, Transform)> {
    let mut out = Vec::new();
    for line in svg.lines().filter(|l| l.starts_with("<use ")) {
        let attr = |name: &str| {
            let key = format!("{name}=\"");
            let start = line.find(&key)? + key.len();
            let end = line[start..].find('"')? + start;
            Some(&line[start..end])
        };
        let (Some(href), Some(tr)) = (attr("xlink:href"), attr("transform")) else {
            continue;
        };
        let nums: Vec<f64> = tr
            .trim_start_matches("matrix(")
            .trim_end_matches(')')
            .split_whitespace()
            .filter_map(|v| v.parse().ok())
            .collect();
        if let Ok(m) = <[f64; 6]>::try_from(nums) {
            if let Ok(t) = Transform::from_matrix(m) {
                out.push((href.trim_start_matches("#tile-").to_string(), t));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    /// Per tile kind; Penrose half-tiles count one half of their whole kind.
    pub tile_counts: BTreeMap<String, f64>,
    pub placements: usize,
    pub bbox: Option<[f64; 4]>,
    pub covered_area: f64,
    pub ratio: Option<f64>,
    pub max_depth: Option<usize>,
}

impl Stats {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.tile_counts {
            let _ = writeln!(s, "count.{k}: {v}");
        }
        let _ = writeln!(s, "placements: {}", self.placements);
        if let Some(b) = self.bbox {
            let _ = writeln!(
                s,
                "bbox: {} {} {} {}",
                fmt6(b[0]),
                fmt6(b[1]),
                fmt6(b[2]),
                fmt6(b[3])
            );
        }
        let _ = writeln!(s, "covered_area: {}", fmt6(self.covered_area));
        if let Some(r) = self.ratio {
            let _ = writeln!(s, "ratio: {}", fmt6(r));
        }
        if let Some(d) = self.max_depth {
            let _ = writeln!(s, "max_depth: {d}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize") + "\n"
    }
}

pub fn stats(patch: &Patch, tileset: &TileSet) -> Result<Stats, RenderError> {
    let placed = place_all(patch, tileset)?;
    let mut tile_counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut penrose_kinds = true;
    for p in &patch.placements {
        match penrose::role_of(&p.tile) {
            Some(r) => {
                let whole = penrose::whole_id(r);
                *tile_counts.entry(whole.to_string()).or_default() +=
                    if r.half { 0.5 } else { 1.0 };
            }
            None => {
                penrose_kinds = false;
                *tile_counts.entry(p.tile.clone()).or_default() += 1.0;
            }
        }
    }
    let ratio = if penrose_kinds && !patch.is_empty() {
        penrose::tile_ratio(patch).ok()
    } else {
        None
    };
    let bbox = placed
        .iter()
        .map(|p| p.bbox)
        .reduce(|a: BBox, b| a.union(&b))
        .map(|b| [b.min.x, b.min.y, b.max.x, b.max.y]);
    Ok(Stats {
        tile_counts,
        placements: patch.len(),
        bbox,
        covered_area: placed.iter().map(|p| p.area).sum(),
        ratio,
        max_depth: patch.nodes.iter().map(|n| n.depth).max(),
    })
}
