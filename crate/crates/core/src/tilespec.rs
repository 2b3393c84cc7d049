//! Tile-set definitions and the line-oriented `tileset v1` text format.
//!
//! ```text
//! file       := "tileset" "v1" NL { section }
//! section    := tile | rules | subst | attach
//! tile       := "tile" ID NL { tile-field NL } "end"
//! tile-field := "vertices" NUM NUM { "," NUM NUM }
//!             | "edges" LABEL { LABEL }           one per side, side i = vertex i -> i+1
//!             | "symmetry" INT                    1, 2, 3 or 4
//!             | "motif" ID
//! rules      := "rules" NL { rule NL } "end"
//! rule       := "compat" "default" | "compat" LABEL LABEL
//!             | "mode" ("translation" | "swirl" | "two-adjacent")
//!             | "partial-contacts" ("allow" | "forbid")
//! subst      := "subst" ID NL { "child" ID xform NL } "end"
//! xform      := "scale" NUM "rot" NUM "reflect" BOOL "at" NUM NUM
//! attach     := "attach" ID NL { site NL } "end"
//! site       := "site" "edge" INT "from" NUM "to" NUM "child" ID "edge" INT
//!               "scale" NUM "rot" NUM "reflect" BOOL
//! LABEL      := NAME ":" ("sym" | "plus" | "minus")
//! ```
//!
//! `#` starts a comment. Blank lines are ignored. Listing any `compat` pair
//! replaces the default polarity rule with exactly the listed pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{GeometryError, Point, Polygon, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Sym,
    Plus,
    Minus,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Sym => "sym",
            Polarity::Plus => "plus",
            Polarity::Minus => "minus",
        }
    }

    /// `plus` ↔ `minus`; `sym` is fixed.
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Sym => Polarity::Sym,
            Polarity::Plus => Polarity::Minus,
            Polarity::Minus => Polarity::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeLabel {
    pub name: String,
    pub polarity: Polarity,
}

impl EdgeLabel {
    pub fn new(name: impl Into<String>, polarity: Polarity) -> Self {
        EdgeLabel {
            name: name.into(),
            polarity,
        }
    }

    pub fn sym(name: &str) -> Self {
        EdgeLabel::new(name, Polarity::Sym)
    }

    pub fn plus(name: &str) -> Self {
        EdgeLabel::new(name, Polarity::Plus)
    }

    pub fn minus(name: &str) -> Self {
        EdgeLabel::new(name, Polarity::Minus)
    }

    /// The label a mirrored placement presents.
    pub fn mirrored(&self) -> EdgeLabel {
        EdgeLabel::new(self.name.clone(), self.polarity.flipped())
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.polarity.as_str())
    }
}

impl FromStr for EdgeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, pol) = s
            .split_once(':')
            .ok_or_else(|| format!("expected NAME:POLARITY, found `{s}`"))?;
        if name.is_empty() || !name.chars().all(is_ident_char) {
            return Err(format!("invalid label name `{name}`"));
        }
        let polarity = match pol {
            "sym" => Polarity::Sym,
            "plus" => Polarity::Plus,
            "minus" => Polarity::Minus,
            other => return Err(format!("unknown polarity `{other}`")),
        };
        Ok(EdgeLabel::new(name, polarity))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' || c == '\''
}

/// A polygon with one label per side.
#[derive(Debug, Clone, PartialEq)]
pub struct TileProto {
    pub id: String,
    pub shape: Polygon,
    pub edges: Vec<EdgeLabel>,
    pub motif: Option<String>,
    /// Declared rotational symmetry order (1–4).
    pub symmetry: u8,
}

/// Periodic generator modes a tile set may advertise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Translation,
    Swirl,
    TwoAdjacent,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Translation => "translation",
            Mode::Swirl => "swirl",
            Mode::TwoAdjacent => "two-adjacent",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "translation" => Ok(Mode::Translation),
            "swirl" => Ok(Mode::Swirl),
            "two-adjacent" | "two_adjacent" => Ok(Mode::TwoAdjacent),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstChild {
    pub tile: String,
    pub transform: Transform,
}

/// A child attachment site on a parent tile edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FractalAttachment {
    pub parent: String,
    /// Parent side hosting the site.
    pub edge: usize,
    /// Fraction range along the parent side, in its CCW direction.
    pub range: (f64, f64),
    pub child: String,
    /// Child side laid against the site.
    pub child_edge: usize,
    pub scale: f64,
    pub rotation: f64,
    pub reflect: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleSet {
    /// Explicit compatible pairs; `None` means the polarity default.
    pub compat: Option<BTreeSet<(EdgeLabel, EdgeLabel)>>,
    pub substitutions: BTreeMap<String, Vec<SubstChild>>,
    pub attachments: Vec<FractalAttachment>,
    pub modes: Vec<Mode>,
    /// Whether partial edge contacts are exempt from label matching.
    pub partial_contacts: bool,
    known_labels: BTreeSet<EdgeLabel>,
}

impl RuleSet {
    pub fn known_labels(&self) -> &BTreeSet<EdgeLabel> {
        &self.known_labels
    }

    pub fn knows(&self, label: &EdgeLabel) -> bool {
        self.known_labels.contains(label)
    }

    /// Compatibility without the unknown-label check.
    pub fn allows(&self, a: &EdgeLabel, b: &EdgeLabel) -> bool {
        match &self.compat {
            None => default_compatible(a, b),
            Some(pairs) => {
                let key = if a <= b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                };
                pairs.contains(&key)
            }
        }
    }

    /// The common child scale of all substitutions, if any exist.
    pub fn substitution_scale(&self) -> Option<f64> {
        self.substitutions
            .values()
            .flatten()
            .map(|c| c.transform.scale())
            .next()
    }
}

/// `sym` abuts `sym` of the same name; `plus` abuts `minus` of the same name.
pub fn default_compatible(a: &EdgeLabel, b: &EdgeLabel) -> bool {
    if a.name != b.name {
        return false;
    }
    matches!(
        (a.polarity, b.polarity),
        (Polarity::Sym, Polarity::Sym)
            | (Polarity::Plus, Polarity::Minus)
            | (Polarity::Minus, Polarity::Plus)
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileSet {
    tiles: Vec<TileProto>,
    rules: RuleSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymmetryFailure {
    BadOrder,
    VertexCount,
    Geometry,
    Labels,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticError {
    #[error("duplicate tile id `{0}`")]
    DuplicateTileId(String),
    #[error("unknown tile id `{id}` referenced by {context}")]
    UnknownTileId { id: String, context: String },
    #[error("tile `{tile}` has {edges} edge labels but {vertices} vertices")]
    EdgeCountMismatch {
        tile: String,
        edges: usize,
        vertices: usize,
    },
    #[error("tile `{tile}` does not have symmetry of order {order} ({reason:?})")]
    SymmetryClaim {
        tile: String,
        order: u8,
        reason: SymmetryFailure,
    },
    #[error("tile `{tile}` has an invalid polygon: {source}")]
    InvalidPolygon { tile: String, source: GeometryError },
    #[error("label `{0}` used in rules appears on no tile")]
    UnknownLabel(String),
    #[error("substitution scale {scale} for `{tile}` must be in (0,1) and shared by every child")]
    SubstitutionScale { tile: String, scale: f64 },
    #[error("invalid attachment on `{parent}`: {reason}")]
    InvalidAttachment { parent: String, reason: String },
    #[error("tile `{0}` is missing a required field `{1}`")]
    MissingField(String, &'static str),
}

impl SemanticError {
    pub fn code(&self) -> &'static str {
        match self {
            SemanticError::DuplicateTileId(_) => "duplicate-tile-id",
            SemanticError::UnknownTileId { .. } => "unknown-tile-id",
            SemanticError::EdgeCountMismatch { .. } => "edge-count-mismatch",
            SemanticError::SymmetryClaim { .. } => "symmetry-claim",
            SemanticError::InvalidPolygon { .. } => "invalid-polygon",
            SemanticError::UnknownLabel(_) => "unknown-label",
            SemanticError::SubstitutionScale { .. } => "substitution-scale",
            SemanticError::InvalidAttachment { .. } => "invalid-attachment",
            SemanticError::MissingField(..) => "missing-field",
        }
    }
}

impl TileSet {
    /// Builds and validates a tile set.
    pub fn new(tiles: Vec<TileProto>, mut rules: RuleSet) -> Result<TileSet, SemanticError> {
        let mut seen = BTreeSet::new();
        for t in &tiles {
            if !seen.insert(t.id.as_str()) {
                return Err(SemanticError::DuplicateTileId(t.id.clone()));
            }
            if t.edges.len() != t.shape.len() {
                return Err(SemanticError::EdgeCountMismatch {
                    tile: t.id.clone(),
                    edges: t.edges.len(),
                    vertices: t.shape.len(),
                });
            }
            check_symmetry(t)?;
        }
        rules.known_labels = tiles.iter().flat_map(|t| t.edges.iter().cloned()).collect();

        if let Some(pairs) = &rules.compat {
            for (a, b) in pairs {
                for l in [a, b] {
                    if !rules.known_labels.contains(l) {
                        return Err(SemanticError::UnknownLabel(l.to_string()));
                    }
                }
            }
        }

        let has = |id: &str| seen.contains(id);
        let mut scale: Option<f64> = None;
        for (parent, children) in &rules.substitutions {
            if !has(parent) {
                return Err(SemanticError::UnknownTileId {
                    id: parent.clone(),
                    context: "subst".into(),
                });
            }
            for c in children {
                if !has(&c.tile) {
                    return Err(SemanticError::UnknownTileId {
                        id: c.tile.clone(),
                        context: format!("subst {parent}"),
                    });
                }
                let s = c.transform.scale();
                let bad = || SemanticError::SubstitutionScale {
                    tile: parent.clone(),
                    scale: s,
                };
                if !(s > 0.0 && s < 1.0) {
                    return Err(bad());
                }
                match scale {
                    None => scale = Some(s),
                    Some(s0) if (s0 - s).abs() > 1e-9 * s0 => return Err(bad()),
                    _ => {}
                }
            }
        }

        for a in &rules.attachments {
            let bad = |reason: String| SemanticError::InvalidAttachment {
                parent: a.parent.clone(),
                reason,
            };
            let parent = tiles.iter().find(|t| t.id == a.parent).ok_or_else(|| {
                SemanticError::UnknownTileId {
                    id: a.parent.clone(),
                    context: "attach".into(),
                }
            })?;
            let child = tiles.iter().find(|t| t.id == a.child).ok_or_else(|| {
                SemanticError::UnknownTileId {
                    id: a.child.clone(),
                    context: format!("attach {}", a.parent),
                }
            })?;
            if a.edge >= parent.shape.len() {
                return Err(bad(format!("parent edge {} out of range", a.edge)));
            }
            if a.child_edge >= child.shape.len() {
                return Err(bad(format!("child edge {} out of range", a.child_edge)));
            }
            let (f0, f1) = a.range;
            if !(0.0..=1.0).contains(&f0) || !(0.0..=1.0).contains(&f1) || f0 >= f1 {
                return Err(bad(format!("fraction range [{f0}, {f1}] not within [0,1]")));
            }
            if !(a.scale > 0.0 && a.scale < 1.0) {
                return Err(bad(format!("scale {} must be in (0,1)", a.scale)));
            }
            if !a.rotation.is_finite() {
                return Err(bad("rotation must be finite".into()));
            }
        }

        Ok(TileSet { tiles, rules })
    }

    pub fn tiles(&self) -> &[TileProto] {
        &self.tiles
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn tile(&self, id: &str) -> Option<&TileProto> {
        self.tiles.iter().find(|t| t.id == id)
    }

    pub fn tile_index(&self, id: &str) -> Option<usize> {
        self.tiles.iter().position(|t| t.id == id)
    }

    pub fn attachments_for<'a>(
        &'a self,
        id: &'a str,
    ) -> impl Iterator<Item = &'a FractalAttachment> {
        self.rules
            .attachments
            .iter()
            .filter(move |a| a.parent == id)
    }

    /// Serializes to the `tileset v1` format; [`parse_tileset`] inverts it.
    pub fn to_text(&self) -> String {
        let mut s = String::from("tileset v1\n");
        for t in &self.tiles {
            let _ = writeln!(s, "\ntile {}", t.id);
            let vs: Vec<String> = t
                .shape
                .vertices()
                .iter()
                .map(|p| format!("{} {}", p.x, p.y))
                .collect();
            let _ = writeln!(s, "  vertices {}", vs.join(", "));
            let es: Vec<String> = t.edges.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "  edges {}", es.join(" "));
            let _ = writeln!(s, "  symmetry {}", t.symmetry);
            if let Some(m) = &t.motif {
                let _ = writeln!(s, "  motif {m}");
            }
            s.push_str("end\n");
        }
        let r = &self.rules;
        s.push_str("\nrules\n");
        match &r.compat {
            None => s.push_str("  compat default\n"),
            Some(pairs) => {
                for (a, b) in pairs {
                    let _ = writeln!(s, "  compat {a} {b}");
                }
            }
        }
        for m in &r.modes {
            let _ = writeln!(s, "  mode {}", m.as_str());
        }
        let _ = writeln!(
            s,
            "  partial-contacts {}",
            if r.partial_contacts {
                "allow"
            } else {
                "forbid"
            }
        );
        s.push_str("end\n");
        for (parent, children) in &r.substitutions {
            let _ = writeln!(s, "\nsubst {parent}");
            for c in children {
                let t = &c.transform;
                let _ = writeln!(
                    s,
                    "  child {} scale {} rot {} reflect {} at {} {}",
                    c.tile,
                    t.scale(),
                    t.rotation_deg(),
                    t.reflects(),
                    t.translation().x,
                    t.translation().y
                );
            }
            s.push_str("end\n");
        }
        let mut parents: Vec<&str> = Vec::new();
        for a in &r.attachments {
            if !parents.contains(&a.parent.as_str()) {
                parents.push(&a.parent);
            }
        }
        for p in parents {
            let _ = writeln!(s, "\nattach {p}");
            for a in r.attachments.iter().filter(|a| a.parent == p) {
                let _ = writeln!(
                    s,
                    "  site edge {} from {} to {} child {} edge {} scale {} rot {} reflect {}",
                    a.edge,
                    a.range.0,
                    a.range.1,
                    a.child,
                    a.child_edge,
                    a.scale,
                    a.rotation,
                    a.reflect
                );
            }
            s.push_str("end\n");
        }
        s
    }
}

fn check_symmetry(t: &TileProto) -> Result<(), SemanticError> {
    let fail = |reason| SemanticError::SymmetryClaim {
        tile: t.id.clone(),
        order: t.symmetry,
        reason,
    };
    let k = t.symmetry as usize;
    if !(1..=4).contains(&k) {
        return Err(fail(SymmetryFailure::BadOrder));
    }
    if k == 1 {
        return Ok(());
    }
    let n = t.shape.len();
    if !n.is_multiple_of(k) {
        return Err(fail(SymmetryFailure::VertexCount));
    }
    let shift = n / k;
    let c = t.shape.centroid();
    let rot = Transform::rotation_about(360.0 / k as f64, c);
    let vs = t.shape.vertices();
    let diam = t.shape.bbox().width().max(t.shape.bbox().height());
    let tol = 1e-9 * (1.0 + diam);
    for i in 0..n {
        if !rot.apply(vs[i]).approx_eq(vs[(i + shift) % n], tol) {
            return Err(fail(SymmetryFailure::Geometry));
        }
        if t.edges[i] != t.edges[(i + shift) % n] {
            return Err(fail(SymmetryFailure::Labels));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxKind {
    MissingHeader,
    UnsupportedVersion(String),
    UnexpectedToken { expected: String, found: String },
    InvalidNumber(String),
    InvalidLabel(String),
    UnexpectedEof(String),
    UnknownSection(String),
    DuplicateSection(String),
    DuplicateField(String),
}

impl SyntaxKind {
    pub fn code(&self) -> &'static str {
        match self {
            SyntaxKind::MissingHeader => "missing-header",
            SyntaxKind::UnsupportedVersion(_) => "unsupported-version",
            SyntaxKind::UnexpectedToken { .. } => "unexpected-token",
            SyntaxKind::InvalidNumber(_) => "invalid-number",
            SyntaxKind::InvalidLabel(_) => "invalid-label",
            SyntaxKind::UnexpectedEof(_) => "unexpected-eof",
            SyntaxKind::UnknownSection(_) => "unknown-section",
            SyntaxKind::DuplicateSection(_) => "duplicate-section",
            SyntaxKind::DuplicateField(_) => "duplicate-field",
        }
    }
}

impl fmt::Display for SyntaxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxKind::MissingHeader => write!(f, "expected header `tileset v1`"),
            SyntaxKind::UnsupportedVersion(v) => write!(f, "unsupported format version `{v}`"),
            SyntaxKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found `{found}`")
            }
            SyntaxKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            SyntaxKind::InvalidLabel(s) => write!(f, "invalid edge label: {s}"),
            SyntaxKind::UnexpectedEof(what) => write!(f, "unexpected end of input in {what}"),
            SyntaxKind::UnknownSection(s) => write!(f, "unknown section `{s}`"),
            SyntaxKind::DuplicateSection(s) => write!(f, "duplicate section `{s}`"),
            SyntaxKind::DuplicateField(s) => write!(f, "duplicate field `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TilespecError {
    #[error("{line}:{col}: {kind}")]
    Syntax {
        line: usize,
        col: usize,
        kind: SyntaxKind,
    },
    #[error("{}semantic error: {error}", line.map(|l| format!("{l}: ")).unwrap_or_default())]
    Semantic {
        line: Option<usize>,
        error: SemanticError,
    },
    #[error("unknown built-in tile set `{0}`")]
    UnknownBuiltin(String),
}

impl TilespecError {
    /// A stable machine-readable code such as `syntax.invalid-number`.
    pub fn code(&self) -> String {
        match self {
            TilespecError::Syntax { kind, .. } => format!("syntax.{}", kind.code()),
            TilespecError::Semantic { error, .. } => format!("semantic.{}", error.code()),
            TilespecError::UnknownBuiltin(_) => "builtin.unknown".to_string(),
        }
    }
}

impl From<SemanticError> for TilespecError {
    fn from(error: SemanticError) -> Self {
        TilespecError::Semantic { line: None, error }
    }
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    end_col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in content.char_indices() {
        if c.is_whitespace() || c == ',' {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &content[s..i],
                    col: s + 1,
                });
            }
            if c == ',' {
                out.push(Token {
                    text: &content[i..i + 1],
                    col: i + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &content[s..],
            col: s + 1,
        });
    }
    out
}

/// Cursor over the tokens of one line.
struct Cursor<'l, 'a> {
    line: &'l Line<'a>,
    pos: usize,
}

impl<'l, 'a> Cursor<'l, 'a> {
    fn err(&self, col: usize, kind: SyntaxKind) -> TilespecError {
        TilespecError::Syntax {
            line: self.line.number,
            col,
            kind,
        }
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.line.tokens.get(self.pos)
    }

    fn next(&mut self, expected: &str) -> Result<Token<'a>, TilespecError> {
        match self.line.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.err(
                self.line.end_col,
                SyntaxKind::UnexpectedToken {
                    expected: expected.to_string(),
                    found: "end of line".to_string(),
                },
            )),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), TilespecError> {
        let t = self.next(&format!("`{kw}`"))?;
        if t.text != kw {
            return Err(self.err(
                t.col,
                SyntaxKind::UnexpectedToken {
                    expected: format!("`{kw}`"),
                    found: t.text.to_string(),
                },
            ));
        }
        Ok(())
    }

    fn ident(&mut self, what: &str) -> Result<String, TilespecError> {
        let t = self.next(what)?;
        if t.text.chars().all(is_ident_char) && t.text != "," {
            Ok(t.text.to_string())
        } else {
            Err(self.err(
                t.col,
                SyntaxKind::UnexpectedToken {
                    expected: what.to_string(),
                    found: t.text.to_string(),
                },
            ))
        }
    }

    fn number(&mut self) -> Result<f64, TilespecError> {
        let t = self.next("a number")?;
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(t.col, SyntaxKind::InvalidNumber(t.text.to_string()))),
        }
    }

    fn integer(&mut self) -> Result<usize, TilespecError> {
        let t = self.next("an integer")?;
        t.text
            .parse::<usize>()
            .map_err(|_| self.err(t.col, SyntaxKind::InvalidNumber(t.text.to_string())))
    }

    fn boolean(&mut self) -> Result<bool, TilespecError> {
        let t = self.next("`true` or `false`")?;
        match t.text {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.err(
                t.col,
                SyntaxKind::UnexpectedToken {
                    expected: "`true` or `false`".into(),
                    found: other.into(),
                },
            )),
        }
    }

    fn label(&mut self) -> Result<EdgeLabel, TilespecError> {
        let t = self.next("an edge label")?;
        t.text
            .parse::<EdgeLabel>()
            .map_err(|m| self.err(t.col, SyntaxKind::InvalidLabel(m)))
    }

    fn finish(&self) -> Result<(), TilespecError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(
                t.col,
                SyntaxKind::UnexpectedToken {
                    expected: "end of line".into(),
                    found: t.text.to_string(),
                },
            )),
        }
    }
}

struct Parser<'a> {
    lines: Vec<Line<'a>>,
    pos: usize,
    last_line: usize,
}

struct TileDraft {
    line: usize,
    id: String,
    vertices: Option<Vec<Point>>,
    edges: Option<Vec<EdgeLabel>>,
    symmetry: Option<u8>,
    motif: Option<String>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let mut last_line = 0;
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                last_line = i + 1;
                let tokens = tokenize(l);
                (!tokens.is_empty()).then(|| Line {
                    number: i + 1,
                    tokens,
                    end_col: l.split('#').next().unwrap_or("").trim_end().len() + 1,
                })
            })
            .collect();
        Parser {
            lines,
            pos: 0,
            last_line,
        }
    }

    fn next_line(&mut self, context: &str) -> Result<&Line<'a>, TilespecError> {
        match self.lines.get(self.pos) {
            Some(_) => {
                self.pos += 1;
                Ok(&self.lines[self.pos - 1])
            }
            None => Err(TilespecError::Syntax {
                line: self.last_line.max(1),
                col: 1,
                kind: SyntaxKind::UnexpectedEof(context.to_string()),
            }),
        }
    }

    fn parse(mut self) -> Result<TileSet, TilespecError> {
        self.header()?;
        let mut drafts: Vec<TileDraft> = Vec::new();
        let mut rules = RuleSet::default();
        let mut seen_rules = false;
        let mut explicit_partial = false;
        let mut rule_lines: BTreeMap<String, usize> = BTreeMap::new();
        while self.pos < self.lines.len() {
            let line = &self.lines[self.pos];
            self.pos += 1;
            let number = line.number;
            let mut cur = Cursor { line, pos: 0 };
            let head = cur.next("a section")?;
            match head.text {
                "tile" => {
                    let id = cur.ident("a tile id")?;
                    cur.finish()?;
                    drafts.push(self.tile_body(number, id)?);
                }
                "rules" => {
                    cur.finish()?;
                    if seen_rules {
                        return Err(cur.err(head.col, SyntaxKind::DuplicateSection("rules".into())));
                    }
                    seen_rules = true;
                    explicit_partial = self.rules_body(&mut rules, &mut rule_lines)?;
                }
                "subst" => {
                    let id = cur.ident("a tile id")?;
                    cur.finish()?;
                    if rules.substitutions.contains_key(&id) {
                        return Err(cur.err(
                            head.col,
                            SyntaxKind::DuplicateSection(format!("subst {id}")),
                        ));
                    }
                    let children = self.subst_body(&id)?;
                    rule_lines.insert(format!("subst {id}"), number);
                    rules.substitutions.insert(id, children);
                }
                "attach" => {
                    let id = cur.ident("a tile id")?;
                    cur.finish()?;
                    rule_lines.insert(format!("attach {id}"), number);
                    let sites = self.attach_body(&id)?;
                    rules.attachments.extend(sites);
                }
                other => {
                    return Err(cur.err(head.col, SyntaxKind::UnknownSection(other.to_string())));
                }
            }
        }
        if !explicit_partial {
            rules.partial_contacts = !rules.attachments.is_empty();
        }

        let mut tiles = Vec::with_capacity(drafts.len());
        let mut tile_lines: BTreeMap<String, usize> = BTreeMap::new();
        let mut dup_lines: BTreeMap<String, usize> = BTreeMap::new();
        for d in drafts {
            let at = |error| TilespecError::Semantic {
                line: Some(d.line),
                error,
            };
            let vertices = d
                .vertices
                .ok_or_else(|| at(SemanticError::MissingField(d.id.clone(), "vertices")))?;
            let edges = d
                .edges
                .ok_or_else(|| at(SemanticError::MissingField(d.id.clone(), "edges")))?;
            let shape = Polygon::new(vertices).map_err(|source| {
                at(SemanticError::InvalidPolygon {
                    tile: d.id.clone(),
                    source,
                })
            })?;
            if tile_lines.contains_key(&d.id) {
                dup_lines.entry(d.id.clone()).or_insert(d.line);
            }
            tile_lines.entry(d.id.clone()).or_insert(d.line);
            tiles.push(TileProto {
                id: d.id,
                shape,
                edges,
                motif: d.motif,
                symmetry: d.symmetry.unwrap_or(1),
            });
        }
        TileSet::new(tiles, rules).map_err(|error| {
            let line = match &error {
                SemanticError::DuplicateTileId(id) => dup_lines.get(id).copied(),
                SemanticError::EdgeCountMismatch { tile: id, .. }
                | SemanticError::SymmetryClaim { tile: id, .. } => tile_lines.get(id).copied(),
                SemanticError::UnknownTileId { id, context }
                    if context == "subst" || context == "attach" =>
                {
                    rule_lines.get(&format!("{context} {id}")).copied()
                }
                SemanticError::UnknownTileId { context, .. } => rule_lines.get(context).copied(),
                SemanticError::SubstitutionScale { tile, .. } => {
                    rule_lines.get(&format!("subst {tile}")).copied()
                }
                SemanticError::InvalidAttachment { parent, .. } => {
                    rule_lines.get(&format!("attach {parent}")).copied()
                }
                SemanticError::UnknownLabel(l) => rule_lines.get(&format!("compat {l}")).copied(),
                _ => None,
            };
            TilespecError::Semantic { line, error }
        })
    }

    fn header(&mut self) -> Result<(), TilespecError> {
        let Some(line) = self.lines.first() else {
            return Err(TilespecError::Syntax {
                line: 1,
                col: 1,
                kind: SyntaxKind::MissingHeader,
            });
        };
        self.pos = 1;
        let mut cur = Cursor { line, pos: 0 };
        let t = cur.next("`tileset`")?;
        if t.text != "tileset" {
            return Err(cur.err(t.col, SyntaxKind::MissingHeader));
        }
        let v = cur.next("a version")?;
        if v.text != "v1" {
            return Err(cur.err(v.col, SyntaxKind::UnsupportedVersion(v.text.to_string())));
        }
        cur.finish()
    }

    fn tile_body(&mut self, line: usize, id: String) -> Result<TileDraft, TilespecError> {
        let mut d = TileDraft {
            line,
            id,
            vertices: None,
            edges: None,
            symmetry: None,
            motif: None,
        };
        let ctx = format!("tile {}", d.id);
        loop {
            let l = self.next_line(&ctx)?;
            let mut cur = Cursor { line: l, pos: 0 };
            let head = cur.next("a tile field")?;
            let dup = |cur: &Cursor, name: &str| {
                cur.err(head.col, SyntaxKind::DuplicateField(name.into()))
            };
            match head.text {
                "end" => {
                    cur.finish()?;
                    return Ok(d);
                }
                "vertices" => {
                    if d.vertices.is_some() {
                        return Err(dup(&cur, "vertices"));
                    }
                    let mut pts = vec![Point::new(cur.number()?, cur.number()?)];
                    while let Some(t) = cur.peek() {
                        if t.text != "," {
                            let t = t.clone();
                            return Err(cur.err(
                                t.col,
                                SyntaxKind::UnexpectedToken {
                                    expected: "`,`".into(),
                                    found: t.text.to_string(),
                                },
                            ));
                        }
                        cur.pos += 1;
                        pts.push(Point::new(cur.number()?, cur.number()?));
                    }
                    d.vertices = Some(pts);
                }
                "edges" => {
                    if d.edges.is_some() {
                        return Err(dup(&cur, "edges"));
                    }
                    let mut es = vec![cur.label()?];
                    while cur.peek().is_some() {
                        es.push(cur.label()?);
                    }
                    d.edges = Some(es);
                }
                "symmetry" => {
                    if d.symmetry.is_some() {
                        return Err(dup(&cur, "symmetry"));
                    }
                    let k = cur.integer()?;
                    cur.finish()?;
                    d.symmetry = Some(k.min(u8::MAX as usize) as u8);
                }
                "motif" => {
                    if d.motif.is_some() {
                        return Err(dup(&cur, "motif"));
                    }
                    d.motif = Some(cur.ident("a motif id")?);
                    cur.finish()?;
                }
                other => {
                    return Err(cur.err(
                        head.col,
                        SyntaxKind::UnexpectedToken {
                            expected: "`vertices`, `edges`, `symmetry`, `motif` or `end`".into(),
                            found: other.to_string(),
                        },
                    ))
                }
            }
        }
    }

    /// Returns whether `partial-contacts` was set explicitly.
    fn rules_body(
        &mut self,
        rules: &mut RuleSet,
        lines: &mut BTreeMap<String, usize>,
    ) -> Result<bool, TilespecError> {
        let mut explicit_partial = false;
        let mut saw_default = false;
        loop {
            let l = self.next_line("rules")?;
            let mut cur = Cursor { line: l, pos: 0 };
            let head = cur.next("a rule")?;
            match head.text {
                "end" => {
                    cur.finish()?;
                    return Ok(explicit_partial);
                }
                "compat" => {
                    if cur.peek().map(|t| t.text) == Some("default") {
                        cur.pos += 1;
                        cur.finish()?;
                        if rules.compat.is_some() {
                            return Err(
                                cur.err(head.col, SyntaxKind::DuplicateField("compat".into()))
                            );
                        }
                        saw_default = true;
                        continue;
                    }
                    if saw_default {
                        return Err(cur.err(head.col, SyntaxKind::DuplicateField("compat".into())));
                    }
                    let a = cur.label()?;
                    let b = cur.label()?;
                    cur.finish()?;
                    for x in [&a, &b] {
                        lines.entry(format!("compat {x}")).or_insert(l.number);
                    }
                    let pair = if a <= b { (a, b) } else { (b, a) };
                    rules.compat.get_or_insert_with(BTreeSet::new).insert(pair);
                }
                "mode" => {
                    let t = cur.next("a mode")?;
                    let m = t.text.parse::<Mode>().map_err(|_| {
                        cur.err(
                            t.col,
                            SyntaxKind::UnexpectedToken {
                                expected: "`translation`, `swirl` or `two-adjacent`".into(),
                                found: t.text.to_string(),
                            },
                        )
                    })?;
                    cur.finish()?;
                    if !rules.modes.contains(&m) {
                        rules.modes.push(m);
                    }
                }
                "partial-contacts" => {
                    let t = cur.next("`allow` or `forbid`")?;
                    rules.partial_contacts = match t.text {
                        "allow" => true,
                        "forbid" => false,
                        other => {
                            return Err(cur.err(
                                t.col,
                                SyntaxKind::UnexpectedToken {
                                    expected: "`allow` or `forbid`".into(),
                                    found: other.to_string(),
                                },
                            ))
                        }
                    };
                    cur.finish()?;
                    explicit_partial = true;
                }
                other => {
                    return Err(cur.err(
                        head.col,
                        SyntaxKind::UnexpectedToken {
                            expected: "`compat`, `mode`, `partial-contacts` or `end`".into(),
                            found: other.to_string(),
                        },
                    ))
                }
            }
        }
    }

    fn subst_body(&mut self, parent: &str) -> Result<Vec<SubstChild>, TilespecError> {
        let mut out = Vec::new();
        loop {
            let l = self.next_line("subst")?;
            let mut cur = Cursor { line: l, pos: 0 };
            let head = cur.next("`child` or `end`")?;
            match head.text {
                "end" => {
                    cur.finish()?;
                    return Ok(out);
                }
                "child" => {
                    let tile = cur.ident("a tile id")?;
                    cur.keyword("scale")?;
                    let scale = cur.number()?;
                    cur.keyword("rot")?;
                    let rot = cur.number()?;
                    cur.keyword("reflect")?;
                    let reflect = cur.boolean()?;
                    cur.keyword("at")?;
                    let at = Point::new(cur.number()?, cur.number()?);
                    cur.finish()?;
                    let transform = Transform::new(scale, rot, reflect, at).map_err(|_| {
                        TilespecError::Semantic {
                            line: Some(l.number),
                            error: SemanticError::SubstitutionScale {
                                tile: parent.to_string(),
                                scale,
                            },
                        }
                    });
                    out.push(SubstChild {
                        tile,
                        transform: transform?,
                    });
                }
                other => {
                    return Err(cur.err(
                        head.col,
                        SyntaxKind::UnexpectedToken {
                            expected: "`child` or `end`".into(),
                            found: other.to_string(),
                        },
                    ))
                }
            }
        }
    }

    fn attach_body(&mut self, parent: &str) -> Result<Vec<FractalAttachment>, TilespecError> {
        let mut out = Vec::new();
        loop {
            let l = self.next_line("attach")?;
            let mut cur = Cursor { line: l, pos: 0 };
            let head = cur.next("`site` or `end`")?;
            match head.text {
                "end" => {
                    cur.finish()?;
                    return Ok(out);
                }
                "site" => {
                    cur.keyword("edge")?;
                    let edge = cur.integer()?;
                    cur.keyword("from")?;
                    let f0 = cur.number()?;
                    cur.keyword("to")?;
                    let f1 = cur.number()?;
                    cur.keyword("child")?;
                    let child = cur.ident("a tile id")?;
                    cur.keyword("edge")?;
                    let child_edge = cur.integer()?;
                    cur.keyword("scale")?;
                    let scale = cur.number()?;
                    cur.keyword("rot")?;
                    let rotation = cur.number()?;
                    cur.keyword("reflect")?;
                    let reflect = cur.boolean()?;
                    cur.finish()?;
                    out.push(FractalAttachment {
                        parent: parent.to_string(),
                        edge,
                        range: (f0, f1),
                        child,
                        child_edge,
                        scale,
                        rotation,
                        reflect,
                    });
                }
                other => {
                    return Err(cur.err(
                        head.col,
                        SyntaxKind::UnexpectedToken {
                            expected: "`site` or `end`".into(),
                            found: other.to_string(),
                        },
                    ))
                }
            }
        }
    }
}

/// Parses and validates a `tileset v1` document.
pub fn parse_tileset(text: &str) -> Result<TileSet, TilespecError> {
    Parser::new(text).parse()
}

pub const BUILTIN_NAMES: [&str; 8] = [
    "p2",
    "p3",
    "fractal-rect",
    "fractal-tri",
    "square-sym",
    "square-vitruvian",
    "square-swirl",
    "square-two-adjacent",
];

pub fn builtin_tileset(name: &str) -> Result<TileSet, TilespecError> {
    match name {
        "p2" => Ok(crate::penrose::p2_geometry()),
        "p3" => Ok(crate::penrose::p3_geometry()),
        "fractal-rect" => Ok(crate::fractal::fractal_rect()),
        "fractal-tri" => Ok(crate::fractal::fractal_tri()),
        "square-sym" => Ok(crate::periodic::square_sym()),
        "square-vitruvian" => Ok(crate::periodic::square_vitruvian()),
        "square-swirl" => Ok(crate::periodic::square_swirl()),
        "square-two-adjacent" => Ok(crate::periodic::square_two_adjacent()),
        other => Err(TilespecError::UnknownBuiltin(other.to_string())),
    }
}

/// Unit square `[0,1]²` with the given side labels (bottom, right, top, left).
pub(crate) fn unit_square_tile(
    id: &str,
    edges: [EdgeLabel; 4],
    symmetry: u8,
    motif: &str,
) -> TileProto {
    TileProto {
        id: id.to_string(),
        shape: Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .expect("unit square"),
        edges: edges.to_vec(),
        motif: Some(motif.to_string()),
        symmetry,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "tileset v1
tile sq
  vertices 0 0, 1 0, 1 1, 0 1
  edges A:sym A:sym A:sym A:sym
  symmetry 4
end
";

    #[test]
    fn parses_symmetric_square() {
        let ts = parse_tileset(SQUARE).unwrap();
        assert_eq!(ts.tiles().len(), 1);
        assert_eq!(ts.tiles()[0].symmetry, 4);
        assert!(ts.rules().compat.is_none());
    }

    #[test]
    fn parses_vitruvian() {
        let text = SQUARE
            .replace("A:sym A:sym A:sym A:sym", "A:plus B:plus A:minus B:minus")
            .replace("symmetry 4", "symmetry 1");
        let ts = parse_tileset(&text).unwrap();
        assert_eq!(ts.tiles()[0].edges[2], EdgeLabel::minus("A"));
    }

    #[test]
    fn symmetry_claim_checked_on_labels() {
        let text = SQUARE.replace("A:sym A:sym A:sym A:sym", "A:plus A:plus A:minus A:minus");
        let err = parse_tileset(&text).unwrap_err();
        assert_eq!(err.code(), "semantic.symmetry-claim");
        match err {
            TilespecError::Semantic {
                error: SemanticError::SymmetryClaim { reason, .. },
                line,
            } => {
                assert_eq!(reason, SymmetryFailure::Labels);
                assert_eq!(line, Some(2));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = SQUARE.replace("1 0,", "1 x,");
        let err = parse_tileset(&text).unwrap_err();
        assert_eq!(err.code(), "syntax.invalid-number");
        assert_eq!(err.to_string(), "3:19: invalid number `x`");
    }

    #[test]
    fn missing_end_is_eof() {
        let text = SQUARE.replace("end\n", "");
        assert_eq!(
            parse_tileset(&text).unwrap_err().code(),
            "syntax.unexpected-eof"
        );
    }

    #[test]
    fn label_parsing() {
        assert_eq!("A':minus".parse::<EdgeLabel>().unwrap().name, "A'");
        assert!("A".parse::<EdgeLabel>().is_err());
        assert!("A:up".parse::<EdgeLabel>().is_err());
    }

    #[test]
    fn explicit_compat_replaces_default() {
        let text = format!("{SQUARE}rules\n  compat A:sym A:sym\nend\n");
        let ts = parse_tileset(&text).unwrap();
        let a = EdgeLabel::sym("A");
        assert!(ts.rules().allows(&a, &a));
        let text = format!("{SQUARE}rules\n  compat A:plus A:sym\nend\n");
        assert_eq!(
            parse_tileset(&text).unwrap_err().code(),
            "semantic.unknown-label"
        );
    }

    #[test]
    fn default_compat_table() {
        assert!(default_compatible(
            &EdgeLabel::plus("A"),
            &EdgeLabel::minus("A")
        ));
        assert!(default_compatible(
            &EdgeLabel::sym("A"),
            &EdgeLabel::sym("A")
        ));
        assert!(!default_compatible(
            &EdgeLabel::plus("A"),
            &EdgeLabel::minus("B")
        ));
        assert!(!default_compatible(
            &EdgeLabel::plus("A"),
            &EdgeLabel::plus("A")
        ));
        assert!(!default_compatible(
            &EdgeLabel::sym("A"),
            &EdgeLabel::plus("A")
        ));
    }

    #[test]
    fn every_builtin_roundtrips() {
        for name in BUILTIN_NAMES {
            let ts = builtin_tileset(name).unwrap();
            let text = ts.to_text();
            let back = parse_tileset(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(back, ts, "{name}");
        }
        assert_eq!(builtin_tileset("p9").unwrap_err().code(), "builtin.unknown");
    }
}
