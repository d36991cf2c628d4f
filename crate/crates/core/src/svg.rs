//! SVG figures: the rectangle pattern of a few generations with the graph
//! over the gaps, and close-ups of a single link.
//!
//! Coordinates are flipped so that `y` grows upward. Output is built from
//! fixed-precision decimal strings, so equal inputs give identical bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{children_of, gaps_of, rect_of, Construction, GapKind, RectAddress};
use crate::numerics::Rational;

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 20.0;
/// Points sampled along each link curve.
const CURVE_SAMPLES: usize = 33;
/// Height ratio between generations in schematic figures, before dividing
/// by the number of rows.
const SCHEMATIC_SHRINK: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeightScale {
    /// Heights shrink by a fixed visible ratio per generation.
    Schematic,
    /// Heights as constructed (later generations become invisible).
    True,
}

/// Vertical layout used for drawing: row height and row step per
/// generation, as doubles.
struct Heights {
    a: Vec<f64>,
    step: Vec<f64>,
}

impl Heights {
    fn new(c: &Construction, depth: usize, scale: HeightScale) -> Result<Self> {
        let mut a = vec![0.0, 1.0];
        let mut step = vec![0.0, 0.0];
        for n in 2..=depth {
            let m = c.metrics(n)?;
            let s = f64::from(m.spec.as_ref().expect("child generation").s);
            match scale {
                HeightScale::True => {
                    a.push(m.a.to_f64());
                    step.push(m.row_step().to_f64());
                }
                HeightScale::Schematic => {
                    let prev = a[n - 1];
                    let an = SCHEMATIC_SHRINK * prev / s;
                    let bn = (prev - s * an) / (s - 1.0);
                    a.push(an);
                    step.push(an + bn);
                }
            }
        }
        Ok(Heights { a, step })
    }

    fn y0(&self, addr: &RectAddress) -> f64 {
        addr.path()
            .iter()
            .enumerate()
            .map(|(i, &(m, _))| f64::from(m - 1) * self.step[i + 2])
            .sum()
    }
}

fn px_x(x: f64) -> f64 {
    MARGIN + x * (CANVAS - 2.0 * MARGIN)
}

fn px_y(y: f64) -> f64 {
    CANVAS - MARGIN - y * (CANVAS - 2.0 * MARGIN)
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#,
        w = CANVAS
    );
    let _ = writeln!(out, "<title>{title}</title>");
    let _ = writeln!(
        out,
        "<style>rect{{fill:none;stroke:#333;stroke-width:0.8}} .frame{{fill:none;stroke:#999}} polyline{{fill:none;stroke:#c00;stroke-width:1.2}}</style>"
    );
}

fn kernel_samples(c: &Construction) -> Result<Vec<(f64, f64)>> {
    (0..CURVE_SAMPLES)
        .map(|i| {
            let t = Rational::new(i as i64, CURVE_SAMPLES as i64 - 1);
            Ok((t.to_f64(), c.kernel().eval(&t)?.to_f64()))
        })
        .collect()
}

/// Rectangles of generations `2..=depth` as `<rect>` elements (with
/// `data-address` and `data-generation`), the unit square as a frame path,
/// and one `<polyline>` per gap of generations `2..=depth`.
pub fn rectangles_figure(c: &Construction, depth: usize, scale: HeightScale) -> Result<String> {
    if depth < 2 {
        return Err(Error::Parameter("rectangle figures need depth >= 2".into()));
    }
    let heights = Heights::new(c, depth, scale)?;
    let phi = kernel_samples(c)?;
    let mut out = String::new();
    header(&mut out, &format!("generations 1 to {depth}"));
    let _ = writeln!(
        out,
        r#"<path class="frame" d="M {x0} {y0} H {x1} V {y1} H {x0} Z"/>"#,
        x0 = num(px_x(0.0)),
        x1 = num(px_x(1.0)),
        y0 = num(px_y(0.0)),
        y1 = num(px_y(1.0)),
    );
    let mut level = vec![rect_of(c, &RectAddress::root())?];
    for n in 2..=depth {
        let mut next = Vec::new();
        for parent in &level {
            for gap in gaps_of(c, &parent.address)? {
                let (gx, gw) = (gap.x_start.to_f64(), gap.width().to_f64());
                let row_bottom = heights.y0(&parent.address)
                    + f64::from(gap.index as u32 / c.spec_for(n).r) * heights.step[n];
                let y_start = row_bottom + heights.a[n];
                let y_end = match gap.kind {
                    GapKind::WithinRow => row_bottom,
                    GapKind::RowTransition => row_bottom + heights.step[n],
                };
                let pts: Vec<String> = phi
                    .iter()
                    .map(|&(t, p)| {
                        let y = y_end + (y_start - y_end) * p;
                        format!("{},{}", num(px_x(gx + t * gw)), num(px_y(y)))
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline class="link" data-generation="{n}" data-kind="{kind}" points="{pts}"/>"#,
                    kind = kind_name(gap.kind),
                    pts = pts.join(" ")
                );
            }
            next.extend(children_of(c, parent)?);
        }
        for rect in &next {
            let y0 = heights.y0(&rect.address);
            let _ = writeln!(
                out,
                r#"<rect data-generation="{n}" data-address="{addr}" x="{x}" y="{y}" width="{w}" height="{h}"/>"#,
                addr = rect.address,
                x = num(px_x(rect.x0.to_f64())),
                y = num(px_y(y0 + heights.a[n])),
                w = num(px_x(rect.x1().to_f64()) - px_x(rect.x0.to_f64())),
                h = num(px_y(y0) - px_y(y0 + heights.a[n])),
            );
        }
        level = next;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn kind_name(kind: GapKind) -> &'static str {
    match kind {
        GapKind::WithinRow => "within-row",
        GapKind::RowTransition => "row-transition",
    }
}

/// Close-up of gap `index` among the children of `parent`: the two
/// neighbouring rectangles (clipped to the view) and the link curve between
/// their corners. The axes are scaled independently so the gap fills the
/// view.
pub fn link_figure(c: &Construction, parent: &RectAddress, index: usize) -> Result<String> {
    let gaps = gaps_of(c, parent)?;
    let gap = gaps.get(index).ok_or_else(|| {
        Error::Address(format!(
            "parent {parent} has {} gaps, no gap {index}",
            gaps.len()
        ))
    })?;
    let n = gap.generation;
    let a = c.metrics(n)?.a.to_f64();
    let d = gap.width();
    // local coordinates: x from x_start in units of d, y from y_start
    let rise = gap.rise.to_f64();
    let (lo, hi) = if rise < 0.0 { (rise, 0.0) } else { (0.0, rise) };
    let pad_y = 0.25 * (hi - lo);
    let (x_min, x_max) = (-0.5, 1.5);
    let (y_min, y_max) = (lo - pad_y, hi + pad_y);
    let sx = |x: f64| px_x((x - x_min) / (x_max - x_min));
    let sy = |y: f64| px_y((y - y_min) / (y_max - y_min));
    let clip = |v: f64, lo: f64, hi: f64| v.max(lo).min(hi);

    let mut out = String::new();
    header(
        &mut out,
        &format!("link {index} under {parent}, generation {n}"),
    );
    // left neighbour ends at (0, 0) at its top right corner; right neighbour
    // starts at (1, rise) at its bottom left corner
    let c_over_d = (&c.metrics(n)?.c / &d).to_f64();
    let boxes = [
        ("left", -c_over_d, 0.0, -a, 0.0),
        ("right", 1.0, 1.0 + c_over_d, rise, rise + a),
    ];
    for (side, x0, x1, y0, y1) in boxes {
        let (cx0, cx1) = (clip(x0, x_min, x_max), clip(x1, x_min, x_max));
        let (cy0, cy1) = (clip(y0, y_min, y_max), clip(y1, y_min, y_max));
        let _ = writeln!(
            out,
            r#"<rect data-side="{side}" x="{x}" y="{y}" width="{w}" height="{h}"/>"#,
            x = num(sx(cx0)),
            y = num(sy(cy1)),
            w = num(sx(cx1) - sx(cx0)),
            h = num(sy(cy0) - sy(cy1)),
        );
    }
    let pts: Vec<String> = kernel_samples(c)?
        .iter()
        .map(|&(t, p)| format!("{},{}", num(sx(t)), num(sy(rise * (1.0 - p)))))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="link" data-generation="{n}" data-kind="{kind}" points="{pts}"/>"#,
        kind = kind_name(gap.kind),
        pts = pts.join(" ")
    );
    out.push_str("</svg>\n");
    Ok(out)
}
