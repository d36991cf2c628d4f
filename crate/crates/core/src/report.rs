//! Serialized artifacts: the geometry inventory, covers, dimension reports,
//! and their CSV forms.

use serde::Serialize;
use serde_json::{json, Value};

use crate::cantor::CoverSet;
use crate::error::{Error, Result};
use crate::evaluator::EvalResult;
use crate::geometry::{
    children_of, gaps_of, rect_of, Construction, ConstructionParams, GapSegment, GenerationMetrics,
    Rect, RectAddress,
};
use crate::numerics::{BoundedReal, BoundedRealRepr};

/// Largest number of rectangles listed for one generation. Deeper
/// generations still appear in the metrics table.
pub const MAX_INVENTORY_RECTS: usize = 1 << 16;

#[derive(Serialize)]
pub struct GenerationInventory {
    pub generation: usize,
    pub rects: Vec<Rect>,
    pub gaps: Vec<GapSegment>,
}

#[derive(Serialize)]
pub struct GeometryReport {
    pub params: ConstructionParams,
    pub kernel: Value,
    pub depth: usize,
    pub metrics: Vec<GenerationMetrics>,
    /// Generations whose rectangles are listed; the rest exceed
    /// [`MAX_INVENTORY_RECTS`].
    pub inventory_depth: usize,
    pub generations: Vec<GenerationInventory>,
}

/// Metrics for `1..=depth` and rectangles and gaps for every generation
/// small enough to list. Generation 1 has the root rectangle and no gaps.
pub fn geometry_report(c: &Construction, depth: usize) -> Result<GeometryReport> {
    if depth < 1 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    let metrics = c
        .metrics_table(depth)?
        .iter()
        .map(|m| GenerationMetrics::clone(m))
        .collect();
    let mut generations = vec![GenerationInventory {
        generation: 1,
        rects: vec![rect_of(c, &RectAddress::root())?],
        gaps: Vec::new(),
    }];
    for n in 2..=depth {
        let prev = &generations.last().expect("root listed").rects;
        if prev.len() * c.spec_for(n).rs() as usize > MAX_INVENTORY_RECTS {
            break;
        }
        let mut rects = Vec::new();
        let mut gaps = Vec::new();
        for parent in prev {
            gaps.extend(gaps_of(c, &parent.address)?);
            rects.extend(children_of(c, parent)?);
        }
        generations.push(GenerationInventory {
            generation: n,
            rects,
            gaps,
        });
    }
    Ok(GeometryReport {
        params: c.params().clone(),
        kernel: c.kernel().to_json(),
        depth,
        metrics,
        inventory_depth: generations.len(),
        generations,
    })
}

/// Reads back the parameters, depth and metrics of a geometry document.
pub fn read_geometry(text: &str) -> Result<(ConstructionParams, usize, Vec<Value>)> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let field = |name: &str| {
        doc.get(name)
            .ok_or_else(|| Error::Parse(format!("geometry document has no {name:?} field")))
    };
    let params: ConstructionParams = serde_json::from_value(field("params")?.clone())
        .map_err(|e| Error::Parse(e.to_string()))?;
    params.validate()?;
    let depth = field("depth")?
        .as_u64()
        .ok_or_else(|| Error::Parse("depth is not an integer".into()))? as usize;
    let metrics = field("metrics")?
        .as_array()
        .ok_or_else(|| Error::Parse("metrics is not an array".into()))?
        .clone();
    Ok((params, depth, metrics))
}

/// Generations whose recomputed metrics differ from `stored`, with the
/// recomputed JSON. A length mismatch is reported as generation 0.
pub fn compare_metrics(c: &Construction, stored: &[Value]) -> Result<Vec<(usize, Value)>> {
    let fresh = c.metrics_table(stored.len().max(1))?;
    let mut diffs = Vec::new();
    for (m, old) in fresh.iter().zip(stored) {
        let new = serde_json::to_value(m.as_ref()).map_err(|e| Error::Parse(e.to_string()))?;
        if &new != old {
            diffs.push((m.n, new));
        }
    }
    if stored.is_empty() {
        diffs.push((0, json!("no metrics stored")));
    }
    Ok(diffs)
}

fn bounded_cells(x: &BoundedReal) -> [String; 2] {
    let repr = BoundedRealRepr::from(x);
    [repr.value, repr.error.to_string()]
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One row per generation: `n,r,s,eps,c,d,a,a_error,b,b_error`. Fields
/// absent at the root are empty.
pub fn metrics_csv(metrics: &[GenerationMetrics]) -> String {
    let rows = metrics.iter().map(|m| {
        let (r, s, eps) = match &m.spec {
            Some(spec) => (spec.r.to_string(), spec.s.to_string(), spec.eps.to_string()),
            None => Default::default(),
        };
        let [a, a_err] = bounded_cells(&m.a);
        let [b, b_err] = m.b.as_ref().map(bounded_cells).unwrap_or_default();
        let d = m.d.as_ref().map(ToString::to_string).unwrap_or_default();
        vec![
            m.n.to_string(),
            r,
            s,
            eps,
            m.c.to_string(),
            d,
            a,
            a_err,
            b,
            b_err,
        ]
    });
    csv(
        &[
            "n", "r", "s", "eps", "c", "d", "a", "a_error", "b", "b_error",
        ],
        rows,
    )
}

/// One row per point: `x,value,error,depth_used,classification`.
pub fn eval_csv(results: &[EvalResult]) -> String {
    let rows = results.iter().map(|r| {
        let [value, error] = bounded_cells(&r.value);
        vec![
            r.x.to_string(),
            value,
            error,
            r.depth_used.to_string(),
            r.classification.label().to_string(),
        ]
    });
    csv(
        &["x", "value", "error", "depth_used", "classification"],
        rows,
    )
}

/// One row per interval: `lo,hi`, using the outer bounds of bounded
/// intervals.
pub fn cover_csv(cover: &CoverSet) -> String {
    let rows = cover
        .outer_bounds()
        .into_iter()
        .map(|(lo, hi)| vec![lo.to_string(), hi.to_string()]);
    csv(&["lo", "hi"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Construction {
        Construction::new(ConstructionParams::example()).unwrap()
    }

    #[test]
    fn inventory_counts() {
        let report = geometry_report(&example(), 3).unwrap();
        let counts: Vec<_> = report
            .generations
            .iter()
            .map(|g| (g.rects.len(), g.gaps.len()))
            .collect();
        assert_eq!(counts, vec![(1, 0), (12, 11), (144, 132)]);
        assert_eq!(report.metrics.len(), 3);
    }

    #[test]
    fn inventory_stops_at_the_size_limit() {
        let report = geometry_report(&example(), 7).unwrap();
        // 12^4 = 20736 fits, 12^5 does not
        assert_eq!(report.inventory_depth, 5);
        assert_eq!(report.metrics.len(), 7);
    }

    #[test]
    fn geometry_round_trip() {
        let c = example();
        let text = serde_json::to_string(&geometry_report(&c, 4).unwrap()).unwrap();
        let (params, depth, metrics) = read_geometry(&text).unwrap();
        assert_eq!(params, *c.params());
        assert_eq!(depth, 4);
        let again = Construction::new(params).unwrap();
        assert!(compare_metrics(&again, &metrics).unwrap().is_empty());

        let tampered = text.replacen("\"1/242\"", "\"1/243\"", 1);
        let (params, _, metrics) = read_geometry(&tampered).unwrap();
        let diffs = compare_metrics(&Construction::new(params).unwrap(), &metrics).unwrap();
        assert_eq!(diffs.iter().map(|d| d.0).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn csv_shapes() {
        let c = example();
        let table: Vec<_> = c
            .metrics_table(3)
            .unwrap()
            .iter()
            .map(|m| (**m).clone())
            .collect();
        let text = metrics_csv(&table);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().all(|l| l.split(',').count() == 10));
        assert!(text
            .lines()
            .nth(2)
            .unwrap()
            .starts_with("2,4,3,1/22,7/88,1/242,"));
    }
}
