use serde::Serialize;

use super::construction::Construction;
use super::layout::{children_of, rect_of, RectAddress};
use crate::error::Result;
use crate::numerics::Rational;

/// One structural check at one generation.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub generation: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub depth: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn record(&mut self, name: &'static str, generation: usize, passed: bool, detail: String) {
        self.checks.push(Check {
            name,
            generation,
            passed,
            detail: if passed { String::new() } else { detail },
        });
    }
}

/// Runs the layout identities for every generation `2..=depth`.
///
/// The x-layout of children is the same under every parent up to
/// translation, so sibling checks run under the first and the last parent
/// of each generation. Failures are recorded, never raised; a generation
/// whose metrics cannot be computed ends the report.
pub fn validate(c: &Construction, depth: usize) -> ValidationReport {
    let mut report = ValidationReport {
        depth,
        checks: Vec::new(),
    };
    for n in 2..=depth.max(2) {
        if let Err(e) = check_generation(c, n, &mut report) {
            report.record("metrics", n, false, e.to_string());
            break;
        }
    }
    report
}

fn check_generation(c: &Construction, n: usize, report: &mut ValidationReport) -> Result<()> {
    let prev = c.metrics(n - 1)?;
    let m = c.metrics(n)?;
    let spec = m.spec.clone().expect("child generation");
    let (r, s) = (spec.r, spec.s);
    let rs = Rational::from(i64::from(spec.rs()));
    let d = m.d.clone().expect("child generation");
    let b = m.b.clone().expect("child generation");

    let width = &rs * &m.c + (&rs - Rational::one()) * &d;
    report.record(
        "width-telescoping",
        n,
        width == prev.c,
        format!("rs*c + (rs-1)*d = {width}, expected {}", prev.c),
    );

    let height = m.a.mul_int(i64::from(s)).add(&b.mul_int(i64::from(s) - 1));
    report.record(
        "height-telescoping",
        n,
        height.overlaps(&prev.a),
        format!("s*a + (s-1)*b = {height}, expected {}", prev.a),
    );

    report.record(
        "row-gap-positive",
        n,
        b.definitely_positive(),
        format!("b = {b}"),
    );

    let last: Vec<_> = (2..n)
        .map(|i| {
            let sp = c.spec_for(i);
            (sp.s, sp.r)
        })
        .collect();
    let parents = [RectAddress::repeated(1, 1, n - 1), RectAddress::new(last)];
    for parent_addr in parents.iter() {
        let parent = rect_of(c, parent_addr)?;
        let kids = children_of(c, &parent)?;

        let mut disjoint = true;
        let mut detail = String::new();
        for pair in kids.windows(2) {
            let gap = &pair[1].x0 - pair[0].x1();
            if gap != d {
                disjoint = false;
                detail = format!("gap after {} is {gap}, expected {d}", pair[0].address);
                break;
            }
        }
        let spans = kids[0].x0 == parent.x0 && kids[kids.len() - 1].x1() == parent.x1();
        if disjoint && !spans {
            detail = format!("children of {parent_addr} do not span the parent");
        }
        report.record("sibling-x-disjoint", n, disjoint && spans, detail);

        let mut rows_ok = true;
        let mut detail = String::new();
        for row in kids.chunks(r as usize) {
            if !row.iter().all(|k| k.y0 == row[0].y0) {
                rows_ok = false;
                detail = format!("row of {} has unequal bottoms", row[0].address);
            }
        }
        for pair in kids.chunks(r as usize).collect::<Vec<_>>().windows(2) {
            let below_top = pair[0][0].y1();
            let above_bottom = &pair[1][0].y0;
            if !below_top.definitely_less(above_bottom) {
                rows_ok = false;
                detail = format!(
                    "row of {} overlaps the row of {}",
                    pair[0][0].address, pair[1][0].address
                );
            }
        }
        let top = kids[kids.len() - 1].y1();
        if !top.overlaps(&parent.y1()) || !kids[0].y0.overlaps(&parent.y0) {
            rows_ok = false;
            detail = format!("rows of {parent_addr} do not span the parent height");
        }
        report.record("row-y-layout", n, rows_ok, detail);
    }
    Ok(())
}
