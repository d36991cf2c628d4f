use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kflat::geometry::GenerationSpec;
use kflat::{ConstructionParams, Rational, RectAddress, RowAddress};

#[derive(Parser, Debug)]
#[command(
    name = "kflat",
    version,
    about = "Build, evaluate and analyse k-flat Cantor-type functions"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Numbers other than small integers are
/// exact rationals such as `1/22` or `0.05`.
#[derive(Args, Debug)]
pub struct Common {
    /// Smoothness order.
    #[arg(long, global = true, default_value_t = 1)]
    pub k: u32,
    /// Children per row.
    #[arg(long, global = true, default_value_t = 4)]
    pub r: u32,
    /// Rows per rectangle.
    #[arg(long, global = true, default_value_t = 3)]
    pub s: u32,
    /// Gap fraction, `0 < eps < min(1/2, 1/(rs-1))`.
    #[arg(long, global = true, default_value = "1/22", value_parser = parse_rational)]
    pub eps: Rational,
    /// Per-generation branching `r:s:eps,...`; entry i applies to
    /// generation i+2 and the last entry repeats.
    #[arg(long, global = true, value_parser = parse_schedule)]
    pub schedule: Option<Schedule>,
    /// Generation depth.
    #[arg(long, global = true, default_value_t = 4)]
    pub depth: usize,
    /// Evaluation tolerance.
    #[arg(long, global = true, default_value = "1/1000000000000", value_parser = parse_rational)]
    pub tol: Rational,
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 128)]
    pub bits: u32,
    /// Output file, written atomically; standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each subcommand supports a subset.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug)]
pub struct Schedule(pub Vec<GenerationSpec>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Metrics table and rectangle/gap inventory.
    Build,
    /// Evaluate f at points or on an even grid.
    Eval(EvalArgs),
    /// Interval covers of A, D or a level set.
    Covers(CoverArgs),
    /// Closed-form dimensions and box-counting estimates.
    Dims,
    /// Search for (r, s, eps) with level-set dimension near a target.
    Plan(PlanArgs),
    /// SVG figure of the rectangles or of one link.
    Figure(FigureArgs),
    /// Run the invariant suite; exit 1 on any failure.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Abscissa in [-2, 2]; may be repeated.
    #[arg(long = "x", value_parser = parse_rational, allow_hyphen_values = true)]
    pub xs: Vec<Rational>,
    /// Even grid `lo,hi,count`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub lo: Rational,
    pub hi: Rational,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoverKind {
    A,
    D,
    Level,
}

#[derive(Args, Debug)]
pub struct CoverArgs {
    #[arg(long, value_enum, default_value = "a")]
    pub target: CoverKind,
    /// Row address `m1,m2,...` for level-set covers.
    #[arg(long, value_parser = parse_rows)]
    pub rows: Option<RowAddress>,
    /// Shrink level-set intervals to the tight bound.
    #[arg(long)]
    pub tight: bool,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Target level-set dimension in (0, 1).
    #[arg(long, value_parser = parse_rational)]
    pub alpha: Rational,
    /// Allowed excess over the target.
    #[arg(long, value_parser = parse_rational)]
    pub eta: Rational,
    #[arg(long, default_value_t = 64)]
    pub max_s: u32,
    #[arg(long, default_value_t = 4096)]
    pub max_r: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    Rects,
    Link,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    #[arg(long, value_enum, default_value = "rects")]
    pub kind: FigureKind,
    /// Gap selector `ADDRESS#INDEX` for link figures, e.g. `root#3` or
    /// `2:1#10`.
    #[arg(long, value_parser = parse_gap)]
    pub gap: Option<GapSelector>,
    /// Draw heights to scale instead of the schematic shrink.
    #[arg(long)]
    pub true_scale: bool,
}

#[derive(Clone, Debug)]
pub struct GapSelector {
    pub parent: RectAddress,
    pub index: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Geometry document to check; its parameters replace the flags.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Negate the row gap of this generation before checking.
    #[arg(long, hide = true)]
    pub inject_fault: Option<usize>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    s.split(',')
        .map(|entry| {
            let parts: Vec<&str> = entry.split(':').collect();
            let [r, s, eps] = parts[..] else {
                return Err(format!("schedule entry {entry:?} is not r:s:eps"));
            };
            Ok(GenerationSpec {
                r: r.parse().map_err(|_| format!("bad r in {entry:?}"))?,
                s: s.parse().map_err(|_| format!("bad s in {entry:?}"))?,
                eps: parse_rational(eps)?,
            })
        })
        .collect::<Result<_, _>>()
        .map(Schedule)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("grid {s:?} is not lo,hi,count"));
    };
    Ok(Grid {
        lo: parse_rational(lo)?,
        hi: parse_rational(hi)?,
        count: count.parse().map_err(|_| format!("bad count {count:?}"))?,
    })
}

fn parse_rows(s: &str) -> Result<RowAddress, String> {
    s.parse::<RowAddress>().map_err(|e| e.to_string())
}

fn parse_gap(s: &str) -> Result<GapSelector, String> {
    let (addr, index) = s
        .rsplit_once('#')
        .ok_or_else(|| format!("gap selector {s:?} is not ADDRESS#INDEX"))?;
    Ok(GapSelector {
        parent: addr.parse::<RectAddress>().map_err(|e| e.to_string())?,
        index: index
            .parse()
            .map_err(|_| format!("bad gap index {index:?}"))?,
    })
}

impl Common {
    pub fn params(&self) -> kflat::Result<ConstructionParams> {
        let params = ConstructionParams::new(self.k, self.r, self.s, self.eps.clone())?
            .with_precision(self.bits)?;
        match &self.schedule {
            Some(Schedule(entries)) => params.with_schedule(entries.clone()),
            None => Ok(params),
        }
    }
}
