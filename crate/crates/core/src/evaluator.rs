//! Evaluation of `f` on `[-2, 2]` with rigorous error bounds, and finite
//! difference probes of its derivatives.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::point_of_address;
use crate::error::{Error, Result};
use crate::geometry::{descend, gap_at, y0_of_path, Construction, Corner, GapSegment, RectAddress};
use crate::numerics::{BoundedReal, Rational};

/// Deepest generation the evaluator will descend to.
pub const MAX_DEPTH: usize = 512;

/// Where an evaluation point landed.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    /// Strictly inside a gap, where `f` is given by the link formula.
    Gap {
        generation: usize,
        gap: Box<GapSegment>,
    },
    /// Inside the x-projection of the rectangle at `address`; a `corner`
    /// point is known to lie in `A` and its value is exact.
    Cantor {
        address: RectAddress,
        corner: Option<Corner>,
    },
    OutsideLeft,
    OutsideRight,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Gap { .. } => "gap",
            Classification::Cantor { .. } => "cantor",
            Classification::OutsideLeft => "outside-left",
            Classification::OutsideRight => "outside-right",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalResult {
    pub x: Rational,
    pub value: BoundedReal,
    pub depth_used: usize,
    pub classification: Classification,
}

/// Evaluates `f` to a fixed tolerance; the cut-off generation is found once.
#[derive(Debug)]
pub struct Evaluator<'a> {
    c: &'a Construction,
    depth: usize,
}

impl<'a> Evaluator<'a> {
    /// The cut-off is the first generation `n` with `a_n < tol`.
    pub fn new(c: &'a Construction, tol: &Rational) -> Result<Self> {
        if !tol.is_positive() {
            return Err(Error::Parameter(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let mut depth = 1;
        while c.metrics(depth)?.a.upper() >= *tol {
            depth += 1;
            if depth > MAX_DEPTH {
                return Err(Error::Parameter(format!(
                    "tolerance {tol} needs more than {MAX_DEPTH} generations"
                )));
            }
        }
        Ok(Evaluator { c, depth })
    }

    /// Evaluates at a fixed cut-off generation instead of a tolerance.
    pub fn with_depth(c: &'a Construction, depth: usize) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(Error::Parameter(format!(
                "depth must be in 1..={MAX_DEPTH}, got {depth}"
            )));
        }
        Ok(Evaluator { c, depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn construction(&self) -> &Construction {
        self.c
    }

    pub fn eval(&self, x: &Rational) -> Result<EvalResult> {
        let bits = self.c.bits();
        let two = Rational::from(2);
        if *x < -&two || *x > two {
            return Err(Error::Domain(format!(
                "f is defined on [-2, 2], got x = {x}"
            )));
        }
        let k1 = self.c.k() as i32 + 1;
        if x.is_negative() {
            let v = -(-x).pow(k1);
            return Ok(EvalResult {
                x: x.clone(),
                value: BoundedReal::from_rational(&v, bits),
                depth_used: 0,
                classification: Classification::OutsideLeft,
            });
        }
        let one = Rational::one();
        if *x > one {
            let v = &one + (x - &one).pow(k1);
            return Ok(EvalResult {
                x: x.clone(),
                value: BoundedReal::from_rational(&v, bits),
                depth_used: 0,
                classification: Classification::OutsideRight,
            });
        }

        let descent = descend(self.c, x, self.depth)?;
        if let Some((j, num, den)) = &descent.gap {
            let parent = RectAddress::new(descent.path.clone());
            let y0 = y0_of_path(self.c, &descent.path)?;
            let gap = gap_at(self.c, &parent, &descent.x0(), &y0, *j)?;
            let phi = self.c.kernel().eval_parts_bounded(num, den, bits);
            let value = gap.y_end.sub(&gap.rise.mul(&phi));
            return Ok(EvalResult {
                x: x.clone(),
                value,
                depth_used: gap.generation,
                classification: Classification::Gap {
                    generation: gap.generation,
                    gap: Box::new(gap),
                },
            });
        }

        let n = descent.path.len() + 1;
        let a = self.c.metrics(n)?.a.clone();
        let value = if *x == one {
            BoundedReal::from_int(1, bits)
        } else {
            let y0 = y0_of_path(self.c, &descent.path)?;
            match descent.corner {
                Some(Corner::Left) => y0,
                Some(Corner::Right) => y0.add(&a),
                None => {
                    let half = a.mul_rational(&Rational::new(1, 2));
                    y0.add(&half).widen_by(&half)
                }
            }
        };
        Ok(EvalResult {
            x: x.clone(),
            value,
            depth_used: n,
            classification: Classification::Cantor {
                address: RectAddress::new(descent.path),
                corner: descent.corner,
            },
        })
    }
}

/// `f(x)` with total error at most `tol` plus arithmetic error.
pub fn evaluate(c: &Construction, x: &Rational, tol: &Rational) -> Result<EvalResult> {
    Evaluator::new(c, tol)?.eval(x)
}

/// `f` at `count` equally spaced points from `x_lo` to `x_hi` inclusive.
pub fn evaluate_grid(
    c: &Construction,
    x_lo: &Rational,
    x_hi: &Rational,
    count: usize,
    tol: &Rational,
) -> Result<Vec<EvalResult>> {
    if count < 2 {
        return Err(Error::Parameter(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    if x_lo >= x_hi {
        return Err(Error::Parameter(format!(
            "empty grid range [{x_lo}, {x_hi}]"
        )));
    }
    let ev = Evaluator::new(c, tol)?;
    let step = (x_hi - x_lo) / Rational::from(count as i64 - 1);
    (0..count)
        .into_par_iter()
        .map(|i| ev.eval(&(x_lo + &step * Rational::from(i as i64))))
        .collect()
}

/// Forward difference `Δ_h^order f(x) / h^order`, with `f` evaluated to
/// tolerance `h^(order + 2)`.
pub fn kth_diff(c: &Construction, x: &Rational, h: &Rational, order: u32) -> Result<BoundedReal> {
    if order < 1 || order > c.k() {
        return Err(Error::Parameter(format!(
            "difference order must be in 1..={}, got {order}",
            c.k()
        )));
    }
    if !h.is_positive() {
        return Err(Error::Parameter(format!("step must be positive, got {h}")));
    }
    let tol = h.pow(order as i32 + 2);
    let ev = Evaluator::new(c, &tol)?;
    kth_diff_with(&ev, x, h, order)
}

/// [`kth_diff`] reusing an evaluator (and its tolerance).
pub fn kth_diff_with(
    ev: &Evaluator<'_>,
    x: &Rational,
    h: &Rational,
    order: u32,
) -> Result<BoundedReal> {
    let end = x + h * Rational::from(i64::from(order));
    if *x < Rational::from(-2) || end > Rational::from(2) {
        return Err(Error::Domain(format!(
            "difference stencil [{x}, {end}] leaves [-2, 2]"
        )));
    }
    let bits = ev.construction().bits();
    let mut acc = BoundedReal::zero(bits);
    let mut binom = BigInt::from(1);
    for i in 0..=order {
        let xi = x + h * Rational::from(i64::from(i));
        let fi = ev.eval(&xi)?.value;
        let sign = if (order - i).is_multiple_of(2) { 1 } else { -1 };
        let weight = Rational::from(binom.clone() * sign);
        acc = acc.add(&fi.mul_rational(&weight));
        binom = binom * BigInt::from(order - i) / BigInt::from(i + 1);
    }
    Ok(acc.mul_rational(&h.pow(-(order as i32))))
}

/// Finite differences of one order across a sequence of steps.
#[derive(Clone, Debug, Serialize)]
pub struct DifferenceSeries {
    pub order: u32,
    pub steps: Vec<Rational>,
    pub values: Vec<BoundedReal>,
    /// The largest possible magnitude at the smallest step is below the
    /// smallest possible magnitude at the largest step.
    pub decays: bool,
}

impl DifferenceSeries {
    /// Upper bounds on `|value|`, one per step.
    pub fn magnitudes(&self) -> Vec<Rational> {
        self.values.iter().map(|v| v.abs_upper()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    pub address: RectAddress,
    pub point: Rational,
    pub series: Vec<DifferenceSeries>,
}

impl FlatnessReport {
    pub fn all_decay(&self) -> bool {
        self.series.iter().all(|s| s.decays)
    }
}

/// Forward differences of orders `orders` at the point of `A` named by
/// `addr` (see [`point_of_address`]) for each step in `steps`.
pub fn flatness_probe(
    c: &Construction,
    addr: &RectAddress,
    orders: &[u32],
    steps: &[Rational],
) -> Result<FlatnessReport> {
    if steps.is_empty() {
        return Err(Error::Parameter(
            "flatness probe needs at least one step".into(),
        ));
    }
    let point = point_of_address(c, addr)?;
    let mut series = Vec::with_capacity(orders.len());
    for &order in orders {
        let mut values = Vec::with_capacity(steps.len());
        for h in steps {
            values.push(kth_diff(c, &point, h, order)?);
        }
        let first_low = lower_magnitude(&values[0]);
        let last_high = values[values.len() - 1].abs_upper();
        series.push(DifferenceSeries {
            order,
            steps: steps.to_vec(),
            decays: steps.len() == 1 || last_high < first_low,
            values,
        });
    }
    Ok(FlatnessReport {
        address: addr.clone(),
        point,
        series,
    })
}

fn lower_magnitude(v: &BoundedReal) -> Rational {
    let lo = v.lower();
    let hi = v.upper();
    if lo.is_positive() {
        lo
    } else if hi.is_negative() {
        -hi
    } else {
        Rational::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gaps_of, rect_of, ConstructionParams, GapKind};

    const A2_HALF: &str = "0.0016099018314693817100574890768894021684806079530933";

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn example() -> Construction {
        Construction::new(ConstructionParams::example()).unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        let c = example();
        let zero = evaluate(&c, &q("0"), &q("1/1000")).unwrap();
        assert!(zero.value.is_exact() && zero.value.value().is_zero());
        assert_eq!(zero.classification.label(), "cantor");
        let one = evaluate(&c, &q("1"), &q("1/1000")).unwrap();
        assert!(one.value.is_exact());
        assert_eq!(one.value.value(), q("1"));
    }

    #[test]
    fn outside_extensions() {
        for k in 1..=3 {
            let c =
                Construction::new(ConstructionParams::new(k, 4, 3, q("1/22")).unwrap()).unwrap();
            let r = evaluate(&c, &q("-1"), &q("1/10")).unwrap();
            assert_eq!(r.value.value(), q("-1"));
            assert_eq!(r.classification.label(), "outside-left");
            let r = evaluate(&c, &q("2"), &q("1/10")).unwrap();
            assert_eq!(r.value.value(), q("2"));
            assert_eq!(r.classification.label(), "outside-right");
        }
        let c = example();
        assert!(evaluate(&c, &q("-3"), &q("1/10")).is_err());
        assert!(evaluate(&c, &q("5/2"), &q("1/10")).is_err());
        assert!(evaluate(&c, &q("1/2"), &q("0")).is_err());
    }

    #[test]
    fn first_gap_midpoint() {
        let c = example();
        let x = q("7/88") + q("1/484");
        let r = evaluate(&c, &x, &q("1/1000000")).unwrap();
        assert!(r.value.widen(&q("1e-49")).contains(&q(A2_HALF)));
        assert!(r.value.error() < q("1e-36"));
        match r.classification {
            Classification::Gap { generation, .. } => assert_eq!(generation, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_formula_interpolates_corners() {
        let c = example();
        let tol = q("1e-30");
        for parent in ["", "2:3", "3:4,1:1"] {
            for g in gaps_of(&c, &parent.parse().unwrap()).unwrap() {
                let start = evaluate(&c, &g.x_start, &tol).unwrap();
                let end = evaluate(&c, &g.x_end, &tol).unwrap();
                assert!(start.value.overlaps(&g.y_start));
                assert!(end.value.overlaps(&g.y_end));
                // just inside the gap, the link formula is used and agrees
                let eps = g.width() * q("1/1000000000");
                let inner = evaluate(&c, &(&g.x_start + &eps), &tol).unwrap();
                assert_eq!(inner.classification.label(), "gap");
                let drift = inner.value.sub(&g.y_start).abs_upper();
                assert!(drift < g.rise.abs_upper() * q("1/1000"));
            }
        }
    }

    #[test]
    fn gap_grid_is_scaled_kernel() {
        let c = example();
        let gaps = gaps_of(&c, &"1:2".parse().unwrap()).unwrap();
        for g in [&gaps[0], &gaps[3]] {
            let grid = evaluate_grid(&c, &g.x_start, &g.x_end, 9, &q("1e-40")).unwrap();
            for (i, r) in grid.iter().enumerate() {
                let t = Rational::new(i as i64, 8);
                let phi = c.kernel().eval(&t).unwrap();
                let expected = g.y_end.sub(&g.rise.mul_rational(&phi));
                assert!(r.value.overlaps(&expected), "i={i}");
            }
        }
    }

    #[test]
    fn values_stay_in_their_rectangles() {
        let c = example();
        let rect = rect_of(&c, &"2:3,3:1".parse().unwrap()).unwrap();
        let grid = evaluate_grid(&c, &rect.x0, &rect.x1(), 41, &q("1e-20")).unwrap();
        for r in grid {
            assert!(!r.value.upper().lt(&rect.y0.lower()));
            assert!(!r.value.lower().gt(&rect.y1().upper()));
        }
    }

    #[test]
    fn cantor_error_within_tolerance() {
        let c = example();
        let tol = q("1e-12");
        let rect = rect_of(&c, &"1:2,2:2,3:3".parse().unwrap()).unwrap();
        let x = &rect.x0 + &rect.width * q("1/3");
        let r = evaluate(&c, &x, &tol).unwrap();
        if let Classification::Cantor { .. } = r.classification {
            assert!(r.value.error() <= tol);
        }
        assert!(
            c.metrics(r.depth_used).unwrap().a.upper() < tol || r.classification.label() == "gap"
        );
    }

    #[test]
    fn first_difference_sign_on_gaps() {
        let c = example();
        let gaps = gaps_of(&c, &RectAddress::root()).unwrap();
        for g in gaps {
            let h = g.width() / q("64");
            let x = &g.x_start + g.width() * q("1/4");
            let d = kth_diff(&c, &x, &h, 1).unwrap();
            match g.kind {
                GapKind::WithinRow => assert!(d.definitely_negative()),
                GapKind::RowTransition => assert!(d.definitely_positive()),
            }
        }
    }

    #[test]
    fn kth_diff_domain_and_order() {
        let c = example();
        assert!(kth_diff(&c, &q("19/10"), &q("1/10"), 1).is_ok());
        assert!(kth_diff(&c, &q("2"), &q("1/10"), 1).is_err());
        assert!(kth_diff(&c, &q("0"), &q("1/10"), 2).is_err());
        assert!(kth_diff(&c, &q("0"), &q("0"), 1).is_err());
    }

    #[test]
    fn flatness_at_the_ends() {
        let c = example();
        let steps: Vec<_> = (4..=12).map(|j| Rational::new(1, 1i64 << j)).collect();
        for addr in [
            RectAddress::repeated(1, 1, 4),
            RectAddress::repeated(3, 4, 4),
        ] {
            let report = flatness_probe(&c, &addr, &[1], &steps).unwrap();
            assert!(report.all_decay(), "{addr}");
        }
    }

    #[test]
    fn extensions_are_increasing() {
        let c = Construction::new(ConstructionParams::new(2, 2, 2, q("1/22")).unwrap()).unwrap();
        let left = evaluate_grid(&c, &q("-2"), &q("0"), 17, &q("1/100")).unwrap();
        let right = evaluate_grid(&c, &q("1"), &q("2"), 17, &q("1/100")).unwrap();
        for w in left.windows(2).chain(right.windows(2)) {
            assert!(w[0].value.definitely_less(&w[1].value));
        }
    }
}
