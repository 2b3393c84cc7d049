//! Command-line front end. [`run_with`] holds the whole program so tests can
//! drive it without spawning a process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tessera::fractal::{self, GrowOptions};
use tessera::penrose::{self, SeedKind, System};
use tessera::periodic;
use tessera::{
    builtin_tileset, parse_patch, parse_tileset, stats, to_svg, validate_patch, GridSpec, Mode,
    Patch, Style, TileSet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tessera",
    version,
    about = "Generate, validate and render edge-matched tilings"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print patch statistics to stderr.
    #[arg(long, global = true)]
    stats: bool,
    /// Directory of `<motif>.svg` fragments.
    #[arg(long, global = true, value_name = "DIR")]
    motif_dir: Option<PathBuf>,
    /// Artifact format for generated patches.
    #[arg(long, global = true, value_enum, default_value_t = Format::Svg)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Svg,
    Patch,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periodic tessellation of a single square tile.
    Tessellate(TessellateArgs),
    /// Penrose patch by deflation of a seed.
    Penrose(PenroseArgs),
    /// Fractal tile tree.
    Fractal(FractalArgs),
    /// Check a patch file against a tile set; exits 1 on mismatches or overlaps.
    Validate(PatchArgs),
    /// Statistics of a patch file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct TessellateArgs {
    /// Tile-spec file; its first tile is used.
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    tile: Option<PathBuf>,
    /// Built-in square tile set.
    #[arg(long, value_parser = ["square-sym", "square-vitruvian", "square-swirl", "square-two-adjacent"])]
    builtin: Option<String>,
    /// Defaults to the tile set's first declared mode, else translation.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Rows (blocks of 2×2 in swirl mode).
    #[arg(long, default_value_t = 4)]
    rows: usize,
    /// Columns (blocks of 2×2 in swirl mode).
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Two-adjacent row choices, one `0`/`1` per row after the first.
    #[arg(long, value_name = "BITS")]
    choices: Option<String>,
    /// Two-adjacent random seed, used when --choices is absent.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Translation,
    Swirl,
    TwoAdjacent,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Translation => Mode::Translation,
            ModeArg::Swirl => Mode::Swirl,
            ModeArg::TwoAdjacent => Mode::TwoAdjacent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetArg {
    P2,
    P3,
}

#[derive(Debug, Args)]
struct PenroseArgs {
    #[arg(long, value_enum, default_value_t = SetArg::P2)]
    set: SetArg,
    /// sun, star, single-kite, single-dart for p2; single-thick, single-thin for p3.
    #[arg(long, value_name = "KIND")]
    seed_kind: Option<String>,
    #[arg(long, default_value_t = 5)]
    depth: usize,
}

#[derive(Debug, Args)]
struct FractalArgs {
    #[arg(long, value_parser = ["fractal-rect", "fractal-tri"], default_value = "fractal-rect")]
    builtin: String,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Uniform child scale replacing the built-in one.
    #[arg(long)]
    scale: Option<f64>,
    /// Seed for random sub-triangle swaps (fractal-tri only).
    #[arg(long)]
    swap_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PatchArgs {
    /// Patch file in `patch v1` format.
    patch: PathBuf,
    /// Built-in tile set name or tile-spec file.
    #[arg(long, value_name = "NAME|FILE")]
    tiles: String,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    input: PatchArgs,
    /// JSON instead of `key: value` lines.
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

/// What a subcommand produced.
struct Output {
    artifact: String,
    stats_of: Option<(Patch, TileSet)>,
    notes: Vec<String>,
    code: i32,
}

/// Runs the program on `argv` (including the program name) and returns the
/// exit code: 0 success, 1 validation failure, 2 usage or input error.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for n in &out.notes {
                let _ = writeln!(stderr, "{n}");
            }
            if let Some((patch, ts)) = &out.stats_of {
                match stats(patch, ts) {
                    Ok(s) => {
                        let _ = stderr.write_all(s.to_text().as_bytes());
                    }
                    Err(e) => {
                        let _ = writeln!(stderr, "error: {e}");
                        return EXIT_USAGE;
                    }
                }
            }
            if let Err(e) = emit(&cli.global.out, &out.artifact, stdout) {
                let _ = writeln!(stderr, "error: {}", e.message);
                return e.code;
            }
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn emit(path: &Option<PathBuf>, artifact: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, artifact).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => stdout.write_all(artifact.as_bytes()).map_err(usage),
    }
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    let mut style = Style::default();
    if let Some(dir) = &cli.global.motif_dir {
        style.load_motif_dir(dir).map_err(usage)?;
    }
    let (patch, ts, mut notes) = match &cli.command {
        Command::Tessellate(a) => tessellate(a)?,
        Command::Penrose(a) => penrose_cmd(a)?,
        Command::Fractal(a) => {
            let (p, ts, notes, collided) = fractal_cmd(a)?;
            style.show_collisions = collided;
            (p, ts, notes)
        }
        Command::Validate(a) => return validate(a, cli.global.stats),
        Command::Stats(a) => return stats_cmd(a),
    };
    let artifact = match cli.global.format {
        Format::Svg => to_svg(&patch, &ts, &style).map_err(usage)?,
        Format::Patch => patch.to_text(),
    };
    notes.insert(0, format!("{} placements", patch.len()));
    Ok(Output {
        artifact,
        stats_of: cli.global.stats.then_some((patch, ts)),
        notes,
        code: EXIT_OK,
    })
}

fn load_tiles(name: &str) -> Result<TileSet, Failure> {
    if let Ok(ts) = builtin_tileset(name) {
        return Ok(ts);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(usage(format!(
            "`{name}` is neither a built-in tile set nor a file"
        )));
    }
    read_tileset(path)
}

fn read_tileset(path: &Path) -> Result<TileSet, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_tileset(&text).map_err(|e| usage(format!("{}:{e} [{}]", path.display(), e.code())))
}

fn read_patch(path: &Path) -> Result<Patch, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_patch(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_choices(bits: &str) -> Result<Vec<bool>, Failure> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(usage(format!("--choices expects 0 and 1 only, got `{c}`"))),
        })
        .collect()
}

type Generated = (Patch, TileSet, Vec<String>);

fn tessellate(a: &TessellateArgs) -> Result<Generated, Failure> {
    let ts = match (&a.tile, &a.builtin) {
        (Some(path), _) => read_tileset(path)?,
        (None, Some(name)) => builtin_tileset(name).map_err(usage)?,
        (None, None) => builtin_tileset("square-sym").map_err(usage)?,
    };
    let tile = ts.tiles()[0].id.clone();
    let mode = a
        .mode
        .map(Mode::from)
        .or_else(|| ts.rules().modes.first().copied())
        .unwrap_or(Mode::Translation);
    if (a.choices.is_some() || a.seed.is_some()) && mode != Mode::TwoAdjacent {
        return Err(usage("--choices and --seed need --mode two-adjacent"));
    }
    let mut grid = GridSpec::new(a.rows, a.cols, mode);
    grid.row_choices = a.choices.as_deref().map(parse_choices).transpose()?;
    grid.seed = a.seed;
    let patch = periodic::tessellate(&ts, &tile, &grid).map_err(usage)?;
    Ok((patch, ts, Vec::new()))
}

fn penrose_cmd(a: &PenroseArgs) -> Result<Generated, Failure> {
    let system = match a.set {
        SetArg::P2 => System::P2,
        SetArg::P3 => System::P3,
    };
    let kind = match &a.seed_kind {
        Some(s) => SeedKind::parse(s).ok_or_else(|| usage(format!("unknown seed kind `{s}`")))?,
        None if system == System::P2 => SeedKind::Sun,
        None => SeedKind::SingleThick,
    };
    if kind.system() != system {
        return Err(usage(format!(
            "seed kind `{}` does not belong to this set",
            kind.as_str()
        )));
    }
    let (ts, patch) = penrose::generate(kind, a.depth).map_err(usage)?;
    let [k, d] = penrose::tile_counts(&patch).map_err(usage)?;
    Ok((patch, ts, vec![format!("whole tiles {k} and {d}")]))
}

fn fractal_cmd(a: &FractalArgs) -> Result<(Patch, TileSet, Vec<String>, bool), Failure> {
    let ts = builtin_tileset(&a.builtin).map_err(usage)?;
    let root = ts.tiles()[0].id.clone();
    let opts = GrowOptions {
        scale: a.scale,
        ..GrowOptions::default()
    };
    let patch = match a.swap_seed {
        None => fractal::grow(&ts, &root, a.depth, opts).map_err(usage)?,
        Some(_) if a.builtin != "fractal-tri" => {
            return Err(usage("--swap-seed needs --builtin fractal-tri"))
        }
        Some(seed) => {
            let n = fractal::grow(&ts, &root, a.depth, opts)
                .map_err(usage)?
                .len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let swaps: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            fractal::triangle_variant(&ts, &root, &swaps, a.depth, opts).map_err(usage)?
        }
    };
    let report = fractal::detect_collisions(&patch, &ts).map_err(usage)?;
    let note = match report.first_depth {
        Some(d) => format!("collisions {} (first at depth {d})", report.pairs.len()),
        None => "collisions 0".to_string(),
    };
    let collided = !report.is_empty();
    Ok((patch, ts, vec![note], collided))
}

fn validate(a: &PatchArgs, with_stats: bool) -> Result<Output, Failure> {
    let ts = load_tiles(&a.tiles)?;
    let patch = read_patch(&a.patch)?;
    let r = validate_patch(&patch, &ts).map_err(usage)?;
    let mut s = String::new();
    s.push_str(&format!("valid: {}\n", r.is_valid()));
    s.push_str(&format!("placements: {}\n", patch.len()));
    s.push_str(&format!("shared_edges: {}\n", r.shared_edges));
    s.push_str(&format!("partial_contacts: {}\n", r.partial_contacts));
    s.push_str(&format!("edge_mismatches: {}\n", r.edge_mismatches.len()));
    for m in &r.edge_mismatches {
        let edges: Vec<String> = m
            .edges
            .iter()
            .map(|e| format!("{}.{}", e.placement, e.side))
            .collect();
        let labels: Vec<String> = m.labels.iter().map(|l| l.to_string()).collect();
        s.push_str(&format!(
            "mismatch {}: edges {} labels {}\n",
            format!("{:?}", m.kind).to_lowercase(),
            edges.join(" "),
            labels.join(" "),
        ));
    }
    s.push_str(&format!("overlaps: {}\n", r.overlaps.len()));
    for o in &r.overlaps {
        s.push_str(&format!(
            "overlap placements {} / {}: area {:.6}\n",
            o.a, o.b, o.area
        ));
    }
    let code = if r.is_valid() { EXIT_OK } else { EXIT_INVALID };
    Ok(Output {
        artifact: s,
        stats_of: with_stats.then_some((patch, ts)),
        notes: Vec::new(),
        code,
    })
}

fn stats_cmd(a: &StatsArgs) -> Result<Output, Failure> {
    let ts = load_tiles(&a.input.tiles)?;
    let patch = read_patch(&a.input.patch)?;
    let s = stats(&patch, &ts).map_err(usage)?;
    let artifact = if a.json { s.to_json() } else { s.to_text() };
    Ok(Output {
        artifact,
        stats_of: None,
        notes: Vec::new(),
        code: EXIT_OK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choices_parse_bits() {
        assert_eq!(
            parse_choices("0110").unwrap(),
            vec![false, true, true, false]
        );
        assert!(parse_choices("").unwrap().is_empty());
        assert_eq!(parse_choices("012").unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn builtin_names_resolve_before_paths() {
        assert!(load_tiles("p2").is_ok());
        assert_eq!(
            load_tiles("./definitely-missing.tiles").unwrap_err().code,
            EXIT_USAGE
        );
    }
}
