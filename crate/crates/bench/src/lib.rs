//! Shared inputs for the benchmarks.

use tessera::fractal::{grow, GrowOptions};
use tessera::periodic::{tessellate, GridSpec};
use tessera::{builtin_tileset, Mode, Patch, TileSet};

pub fn periodic_patch(rows: usize, cols: usize) -> (TileSet, Patch) {
    let ts = builtin_tileset("square-vitruvian").expect("builtin");
    let p = tessellate(
        &ts,
        "vitruvian",
        &GridSpec::new(rows, cols, Mode::Translation),
    )
    .expect("grid");
    (ts, p)
}

pub fn penrose_patch(depth: usize) -> (TileSet, Patch) {
    tessera::penrose::generate(tessera::SeedKind::Sun, depth).expect("penrose")
}

pub fn fractal_patch(depth: usize) -> (TileSet, Patch) {
    let ts = builtin_tileset("fractal-rect").expect("builtin");
    let p = grow(&ts, "rect", depth, GrowOptions::default()).expect("grow");
    (ts, p)
}
