//! Tile-based tessellation toolkit: a similarity-transform geometry kernel,
//! a tile-set format, an edge-matching validator, periodic, Penrose and
//! fractal generators, and a deterministic SVG renderer.

pub mod fractal;
pub mod geometry;
pub mod matcher;
pub mod penrose;
pub mod periodic;
pub mod render;
pub mod tilespec;

pub use fractal::{CollisionReport, FractalError, FractalNode};
pub use geometry::{compose, overlap_area, BBox, GeometryError, Point, Polygon, Transform};
pub use matcher::{
    build_adjacency, edges_compatible, parse_patch, validate_patch, Adjacency, MatchError, Patch,
    Placement, ValidationReport,
};
pub use penrose::{Corner, PenroseError, SeedKind, VertexStar};
pub use periodic::{GridSpec, PeriodicError};
pub use render::{stats, to_svg, RenderError, Stats, Style};
pub use tilespec::{
    builtin_tileset, parse_tileset, EdgeLabel, FractalAttachment, Mode, Polarity, RuleSet,
    TileProto, TileSet, TilespecError,
};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tilespec(#[from] TilespecError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Periodic(#[from] PeriodicError),
    #[error(transparent)]
    Penrose(#[from] PenroseError),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Render(#[from] RenderError),
}
