//! Square-tile tessellations: pure translation, the 2×2 pinwheel ("swirl")
//! and the two-adjacent rule whose rows each admit two continuations.
//!
//! Cells are unit squares; cell `(row, col)` has its lower-left corner at
//! `(col, row)`. Sides are numbered 0 bottom, 1 right, 2 top, 3 left, and a
//! copy rotated by `90·q` degrees about its center shows label
//! `edges[(side - q) mod 4]` on that side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Point, Transform};
use crate::matcher::{Patch, Placement};
use crate::tilespec::{unit_square_tile, EdgeLabel, Mode, RuleSet, TileProto, TileSet};

pub const DEFAULT_COUNT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeriodicError {
    #[error("unknown tile `{0}`")]
    UnknownTile(String),
    #[error("tile `{0}` is not an axis-aligned rectangle")]
    NotRectangle(String),
    #[error("tile `{0}` is not the unit square")]
    NotUnitSquare(String),
    #[error("grid must have at least one row and one column")]
    EmptyGrid,
    #[error("opposite sides {0} and {1} are not complementary; pure translation is impossible")]
    TranslationIncompatible(usize, usize),
    #[error("no 2×2 rotation block of this tile validates")]
    NoPinwheel,
    #[error("expected {expected} row choices, found {found}")]
    ChoiceLength { expected: usize, found: usize },
    #[error("row {row} admits {candidates} continuations, expected exactly 2")]
    NotTwoAdjacent { row: usize, candidates: usize },
    #[error("no valid first row of {0} cells")]
    NoFirstRow(usize),
    #[error("search budget of {0} nodes exceeded")]
    BudgetExceeded(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub mode: Mode,
    /// Two-adjacent mode only; one entry per row after the first.
    pub row_choices: Option<Vec<bool>>,
    pub seed: Option<u64>,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, mode: Mode) -> Self {
        GridSpec {
            rows,
            cols,
            mode,
            row_choices: None,
            seed: None,
        }
    }
}

fn square_set(id: &str, edges: [EdgeLabel; 4], symmetry: u8, mode: Mode) -> TileSet {
    let mut rules = RuleSet::default();
    rules.modes.push(mode);
    TileSet::new(vec![unit_square_tile(id, edges, symmetry, "arrow")], rules)
        .expect("builtin square set is valid")
}

pub fn square_sym() -> TileSet {
    let a = EdgeLabel::sym("A");
    square_set(
        "square",
        [a.clone(), a.clone(), a.clone(), a],
        4,
        Mode::Translation,
    )
}

pub fn square_vitruvian() -> TileSet {
    square_set(
        "vitruvian",
        [
            EdgeLabel::plus("A"),
            EdgeLabel::plus("B"),
            EdgeLabel::minus("A"),
            EdgeLabel::minus("B"),
        ],
        1,
        Mode::Translation,
    )
}

pub fn square_swirl() -> TileSet {
    square_set(
        "swirl",
        [
            EdgeLabel::plus("A"),
            EdgeLabel::minus("A"),
            EdgeLabel::plus("B"),
            EdgeLabel::minus("B"),
        ],
        1,
        Mode::Swirl,
    )
}

pub fn square_two_adjacent() -> TileSet {
    square_set(
        "two-adjacent",
        [
            EdgeLabel::plus("A"),
            EdgeLabel::plus("A"),
            EdgeLabel::minus("A"),
            EdgeLabel::minus("A"),
        ],
        1,
        Mode::TwoAdjacent,
    )
}

/// Label on world side `side` of a copy rotated by `90·q`.
pub fn side_label(tile: &TileProto, q: u8, side: usize) -> &EdgeLabel {
    &tile.edges[(side + 4 - q as usize % 4) % 4]
}

/// Pose of a unit-square copy in cell `(row, col)` rotated by `90·q`.
pub fn cell_pose(row: usize, col: usize, q: u8) -> Transform {
    Transform::translate(col as f64, row as f64).then(&Transform::rotation_about(
        90.0 * q as f64,
        Point::new(0.5, 0.5),
    ))
}

fn lookup<'a>(tileset: &'a TileSet, id: &str) -> Result<&'a TileProto, PeriodicError> {
    tileset
        .tile(id)
        .ok_or_else(|| PeriodicError::UnknownTile(id.to_string()))
}

/// Width and height of an axis-aligned rectangle listed CCW from its lower-left corner.
fn rectangle_size(tile: &TileProto) -> Result<(f64, f64, Point), PeriodicError> {
    let vs = tile.shape.vertices();
    let b = tile.shape.bbox();
    let corners = [
        b.min,
        Point::new(b.max.x, b.min.y),
        b.max,
        Point::new(b.min.x, b.max.y),
    ];
    let tol = 1e-9 * (1.0 + b.width().max(b.height()));
    if vs.len() != 4
        || !vs
            .iter()
            .zip(corners.iter())
            .all(|(v, c)| v.approx_eq(*c, tol))
    {
        return Err(PeriodicError::NotRectangle(tile.id.clone()));
    }
    Ok((b.width(), b.height(), b.min))
}

fn require_unit_square(tile: &TileProto) -> Result<(), PeriodicError> {
    let (w, h, min) = rectangle_size(tile)?;
    if (w - 1.0).abs() > 1e-9 || (h - 1.0).abs() > 1e-9 || !min.approx_eq(Point::ORIGIN, 1e-9) {
        return Err(PeriodicError::NotUnitSquare(tile.id.clone()));
    }
    Ok(())
}

fn check_grid(grid: &GridSpec) -> Result<(), PeriodicError> {
    if grid.rows == 0 || grid.cols == 0 {
        return Err(PeriodicError::EmptyGrid);
    }
    Ok(())
}

/// Dispatches on `grid.mode`.
pub fn tessellate(tileset: &TileSet, tile: &str, grid: &GridSpec) -> Result<Patch, PeriodicError> {
    match grid.mode {
        Mode::Translation => tessellate_translation(tileset, tile, grid),
        Mode::Swirl => tessellate_swirl(tileset, tile, grid),
        Mode::TwoAdjacent => tessellate_two_adjacent(tileset, tile, grid),
    }
}

/// `rows × cols` copies on the rectangle's lattice.
pub fn tessellate_translation(
    tileset: &TileSet,
    tile: &str,
    grid: &GridSpec,
) -> Result<Patch, PeriodicError> {
    check_grid(grid)?;
    let proto = lookup(tileset, tile)?;
    let (w, h, _) = rectangle_size(proto)?;
    let rules = tileset.rules();
    for (a, b) in [(1, 3), (2, 0)] {
        if !rules.allows(&proto.edges[a], &proto.edges[b]) {
            return Err(PeriodicError::TranslationIncompatible(a, b));
        }
    }
    let mut ps = Vec::with_capacity(grid.rows * grid.cols);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            ps.push(Placement::new(
                tile,
                Transform::translate(c as f64 * w, r as f64 * h),
            ));
        }
    }
    Ok(Patch::new(ps))
}

/// Block cells in pinwheel order: lower-left, lower-right, upper-right, upper-left.
const BLOCK_CELLS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 1), (1, 0)];

fn fits_right(t: &TileProto, rules: &RuleSet, left: u8, right: u8) -> bool {
    rules.allows(side_label(t, left, 1), side_label(t, right, 3))
}

fn fits_above(t: &TileProto, rules: &RuleSet, below: u8, above: u8) -> bool {
    rules.allows(side_label(t, below, 2), side_label(t, above, 0))
}

/// Every 2×2 orientation assignment `[ll, lr, ur, ul]` whose interior
/// edges match and whose copies tile the plane by block translation, in
/// lexicographic order of quarter turns.
pub fn valid_blocks(tile: &TileProto, rules: &RuleSet) -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for code in 0..256u32 {
        let q = [
            (code >> 6) as u8 & 3,
            (code >> 4) as u8 & 3,
            (code >> 2) as u8 & 3,
            code as u8 & 3,
        ];
        let [ll, lr, ur, ul] = q;
        let ok = fits_right(tile, rules, ll, lr)
            && fits_right(tile, rules, ul, ur)
            && fits_above(tile, rules, ll, ul)
            && fits_above(tile, rules, lr, ur)
            && fits_right(tile, rules, lr, ll)
            && fits_right(tile, rules, ur, ul)
            && fits_above(tile, rules, ul, ll)
            && fits_above(tile, rules, ur, lr);
        if ok {
            out.push(q);
        }
    }
    out
}

/// A valid block that is closed under a quarter turn about its center.
pub fn pinwheel_block(tile: &TileProto, rules: &RuleSet) -> Option<[u8; 4]> {
    valid_blocks(tile, rules)
        .into_iter()
        .find(|q| (0..4).all(|i| q[(i + 1) % 4] == (q[i] + 1) % 4))
}

/// `rows × cols` pinwheel blocks, four placements each.
pub fn tessellate_swirl(
    tileset: &TileSet,
    tile: &str,
    grid: &GridSpec,
) -> Result<Patch, PeriodicError> {
    check_grid(grid)?;
    let proto = lookup(tileset, tile)?;
    require_unit_square(proto)?;
    let block = pinwheel_block(proto, tileset.rules()).ok_or(PeriodicError::NoPinwheel)?;
    let mut ps = Vec::with_capacity(4 * grid.rows * grid.cols);
    for br in 0..grid.rows {
        for bc in 0..grid.cols {
            for (k, &(dr, dc)) in BLOCK_CELLS.iter().enumerate() {
                ps.push(Placement::new(
                    tile,
                    cell_pose(2 * br + dr, 2 * bc + dc, block[k]),
                ));
            }
        }
    }
    Ok(Patch::new(ps))
}

fn valid_rows(tile: &TileProto, rules: &RuleSet, cols: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(cols);
    fn rec(t: &TileProto, r: &RuleSet, cols: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == cols {
            out.push(cur.clone());
            return;
        }
        for q in 0..4 {
            if cur.last().is_none_or(|&l| fits_right(t, r, l, q)) {
                cur.push(q);
                rec(t, r, cols, cur, out);
                cur.pop();
            }
        }
    }
    rec(tile, rules, cols, &mut cur, &mut out);
    out
}

fn continuations(
    tile: &TileProto,
    rules: &RuleSet,
    rows: &[Vec<u8>],
    below: &[u8],
) -> Vec<Vec<u8>> {
    rows.iter()
        .filter(|row| {
            row.iter()
                .zip(below)
                .all(|(&q, &b)| fits_above(tile, rules, b, q))
        })
        .cloned()
        .collect()
}

/// Row-by-row growth from the first valid row; each later row takes the
/// first (`false`) or second (`true`) of its two continuations.
pub fn tessellate_two_adjacent(
    tileset: &TileSet,
    tile: &str,
    grid: &GridSpec,
) -> Result<Patch, PeriodicError> {
    check_grid(grid)?;
    let proto = lookup(tileset, tile)?;
    require_unit_square(proto)?;
    let rules = tileset.rules();
    let choices: Vec<bool> = match &grid.row_choices {
        Some(c) if c.len() != grid.rows - 1 => {
            return Err(PeriodicError::ChoiceLength {
                expected: grid.rows - 1,
                found: c.len(),
            })
        }
        Some(c) => c.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(grid.seed.unwrap_or(0));
            (1..grid.rows).map(|_| rng.gen_bool(0.5)).collect()
        }
    };
    let rows = valid_rows(proto, rules, grid.cols);
    let mut current = rows
        .first()
        .cloned()
        .ok_or(PeriodicError::NoFirstRow(grid.cols))?;
    let mut ps = Vec::with_capacity(grid.rows * grid.cols);
    for r in 0..grid.rows {
        if r > 0 {
            let next = continuations(proto, rules, &rows, &current);
            if next.len() != 2 {
                return Err(PeriodicError::NotTwoAdjacent {
                    row: r,
                    candidates: next.len(),
                });
            }
            current = next[usize::from(choices[r - 1])].clone();
        }
        for (c, &q) in current.iter().enumerate() {
            ps.push(Placement::new(tile, cell_pose(r, c, q)));
        }
    }
    Ok(Patch::new(ps))
}

/// Number of complete `rows × cols` orientation assignments whose first row
/// is the fixed first valid row, by cell-wise backtracking.
pub fn count_row_arrangements(
    tileset: &TileSet,
    tile: &str,
    rows: usize,
    cols: usize,
    budget: u64,
) -> Result<u64, PeriodicError> {
    if rows == 0 || cols == 0 {
        return Err(PeriodicError::EmptyGrid);
    }
    let proto = lookup(tileset, tile)?;
    require_unit_square(proto)?;
    let rules = tileset.rules();
    let first = valid_rows(proto, rules, cols)
        .into_iter()
        .next()
        .ok_or(PeriodicError::NoFirstRow(cols))?;

    struct Search<'a> {
        tile: &'a TileProto,
        rules: &'a RuleSet,
        rows: usize,
        cols: usize,
        grid: Vec<u8>,
        visited: u64,
        budget: u64,
    }
    impl Search<'_> {
        fn run(&mut self, cell: usize) -> Result<u64, PeriodicError> {
            if cell == self.rows * self.cols {
                return Ok(1);
            }
            let c = cell % self.cols;
            let mut total = 0;
            for q in 0..4 {
                self.visited += 1;
                if self.visited > self.budget {
                    return Err(PeriodicError::BudgetExceeded(self.budget));
                }
                if c > 0 && !fits_right(self.tile, self.rules, self.grid[cell - 1], q) {
                    continue;
                }
                if !fits_above(self.tile, self.rules, self.grid[cell - self.cols], q) {
                    continue;
                }
                self.grid[cell] = q;
                total += self.run(cell + 1)?;
            }
            Ok(total)
        }
    }

    let mut s = Search {
        tile: proto,
        rules,
        rows,
        cols,
        grid: vec![0; rows * cols],
        visited: 0,
        budget,
    };
    s.grid[..cols].copy_from_slice(&first);
    s.run(cols)
}
