use anyhow::{bail, Context, Result};
use serde_json::json;

use kflat::cantor::{consecutive_slopes, estimate_dimension_lsq, DimensionTarget};
use kflat::geometry::Fault;
use kflat::report::{compare_metrics, cover_csv, eval_csv, metrics_csv, read_geometry};
use kflat::{
    closed_form_dimensions, cover_a, cover_d, cover_level_set, evaluate_grid, geometry_report,
    link_figure, plan, rectangles_figure, run_suite, Construction, Evaluator, HeightScale,
    PlanRequest,
};

use crate::args::{
    Cli, Command, CoverArgs, CoverKind, EvalArgs, FigureArgs, FigureKind, Format, PlanArgs,
    VerifyArgs,
};
use crate::output::{emit, json};

/// A run that completed but whose checks did not all pass.
#[derive(Debug)]
pub struct Failed(pub String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

pub fn run(cli: &Cli) -> Result<()> {
    let text = match &cli.command {
        Command::Build => build(cli)?,
        Command::Eval(args) => eval(cli, args)?,
        Command::Covers(args) => covers(cli, args)?,
        Command::Dims => dims(cli)?,
        Command::Plan(args) => plan_cmd(cli, args)?,
        Command::Figure(args) => figure(cli, args)?,
        Command::Verify(args) => return verify(cli, args),
    };
    emit(cli.common.out.as_deref(), &text)
}

fn format(cli: &Cli, allowed: &[Format]) -> Result<Format> {
    let f = cli.common.format.unwrap_or(allowed[0]);
    if !allowed.contains(&f) {
        bail!(kflat::Error::Parameter(format!(
            "format {f:?} is not available for this subcommand"
        )));
    }
    Ok(f)
}

fn construction(cli: &Cli) -> Result<Construction> {
    Ok(Construction::new(cli.common.params()?)?)
}

fn build(cli: &Cli) -> Result<String> {
    let f = format(cli, &[Format::Json, Format::Csv])?;
    let c = construction(cli)?;
    let report = geometry_report(&c, cli.common.depth)?;
    match f {
        Format::Csv => Ok(metrics_csv(&report.metrics)),
        _ => json(&report),
    }
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<String> {
    let f = format(cli, &[Format::Json, Format::Csv])?;
    let c = construction(cli)?;
    let tol = &cli.common.tol;
    let mut results = Vec::new();
    if !args.xs.is_empty() {
        let ev = Evaluator::new(&c, tol)?;
        for x in &args.xs {
            results.push(ev.eval(x)?);
        }
    }
    if let Some(g) = &args.grid {
        results.extend(evaluate_grid(&c, &g.lo, &g.hi, g.count, tol)?);
    }
    if results.is_empty() {
        bail!(kflat::Error::Parameter(
            "give at least one --x or a --grid".into()
        ));
    }
    match f {
        Format::Csv => Ok(eval_csv(&results)),
        _ => json(&results),
    }
}

fn covers(cli: &Cli, args: &CoverArgs) -> Result<String> {
    let f = format(cli, &[Format::Json, Format::Csv])?;
    let c = construction(cli)?;
    let n = cli.common.depth;
    let cover = match args.target {
        CoverKind::A => cover_a(&c, n)?,
        CoverKind::D => cover_d(&c, n)?,
        CoverKind::Level => {
            let rows = args
                .rows
                .as_ref()
                .ok_or_else(|| kflat::Error::Parameter("level-set covers need --rows".into()))?;
            cover_level_set(&c, rows, n, args.tight)?
        }
    };
    match f {
        Format::Csv => Ok(cover_csv(&cover)),
        _ => json(&cover),
    }
}

fn dims(cli: &Cli) -> Result<String> {
    format(cli, &[Format::Json])?;
    let c = construction(cli)?;
    let hi = cli.common.depth.max(4);
    let targets = [
        ("a", DimensionTarget::A),
        ("d", DimensionTarget::D),
        ("level_set", DimensionTarget::LevelSet),
    ];
    if c.params().is_scheduled() {
        let mut lsq = serde_json::Map::new();
        for (name, target) in &targets {
            lsq.insert(
                (*name).into(),
                json!(estimate_dimension_lsq(&c, target, 2, hi)?),
            );
        }
        return json(&json!({ "least_squares": lsq }));
    }
    let mut slopes = serde_json::Map::new();
    for (name, target) in &targets {
        slopes.insert(
            (*name).into(),
            serde_json::to_value(consecutive_slopes(&c, target, 3, hi)?)?,
        );
    }
    json(&json!({
        "closed_form": closed_form_dimensions(&c)?,
        "slopes": slopes,
    }))
}

fn plan_cmd(cli: &Cli, args: &PlanArgs) -> Result<String> {
    format(cli, &[Format::Json])?;
    let request = PlanRequest::new(cli.common.k, args.alpha.clone(), args.eta.clone())
        .with_limits(args.max_s, args.max_r);
    json(&plan(&request)?)
}

fn figure(cli: &Cli, args: &FigureArgs) -> Result<String> {
    format(cli, &[Format::Svg])?;
    let c = construction(cli)?;
    match args.kind {
        FigureKind::Rects => {
            let scale = if args.true_scale {
                HeightScale::True
            } else {
                HeightScale::Schematic
            };
            Ok(rectangles_figure(&c, cli.common.depth, scale)?)
        }
        FigureKind::Link => {
            let gap = args.gap.as_ref().ok_or_else(|| {
                kflat::Error::Parameter("link figures need --gap ADDRESS#INDEX".into())
            })?;
            Ok(link_figure(&c, &gap.parent, gap.index)?)
        }
    }
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<()> {
    format(cli, &[Format::Json])?;
    let (params, depth, stored) = match &args.against {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let (params, depth, metrics) = read_geometry(&text)?;
            (params, depth, Some(metrics))
        }
        None => (cli.common.params()?, cli.common.depth, None),
    };
    let mut c = Construction::new(params)?;
    if let Some(generation) = args.inject_fault {
        c = c.with_fault(Fault::NegateRowGap { generation });
    }
    let mut report = run_suite(&c, depth);
    if let Some(stored) = stored {
        let diffs = compare_metrics(&c, &stored)?;
        let detail = diffs
            .iter()
            .map(|(n, _)| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        report.push(
            "round-trip/metrics",
            diffs.is_empty(),
            format!("stored metrics differ at generations {detail}"),
        );
    }
    emit(cli.common.out.as_deref(), &json(&report)?)?;
    if !report.passed {
        bail!(Failed(format!("{} checks failed", report.counts.fail)));
    }
    Ok(())
}
