//! The sets `A` (where `f` is flat), `D = f(A)` and the level sets `A_y`:
//! covers per generation, membership, closed-form dimensions and
//! box-counting estimates.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{descend, rect_of, Construction, RectAddress};
use crate::numerics::{ln_rational, log_ratio, BoundedReal, Rational};

/// Refuse to materialize covers larger than this.
pub const MAX_COVER_INTERVALS: u64 = 1 << 22;

/// One row index per generation, naming a point of `D`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RowAddress(Vec<u32>);

impl RowAddress {
    pub fn new(rows: Vec<u32>) -> Self {
        RowAddress(rows)
    }

    pub fn rows(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, c: &Construction, needed: usize) -> Result<()> {
        if self.0.len() < needed {
            return Err(Error::Address(format!(
                "row address has {} entries, {needed} needed",
                self.0.len()
            )));
        }
        for (i, &m) in self.0.iter().enumerate() {
            let s = c.spec_for(i + 2).s;
            if m < 1 || m > s {
                return Err(Error::Address(format!(
                    "row index {m} at level {} outside 1..={s}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Comma-separated row indices, e.g. `"1,3,2"`.
impl fmt::Display for RowAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for RowAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(RowAddress::default());
        }
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad row index {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(RowAddress)
    }
}

impl Serialize for RowAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RowAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "set", content = "rows", rename_all = "kebab-case")]
pub enum CoverTarget {
    A,
    D,
    LevelSet(RowAddress),
    LevelSetTight(RowAddress),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactInterval {
    pub lo: Rational,
    pub hi: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedInterval {
    pub lo: BoundedReal,
    pub hi: BoundedReal,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum CoverIntervals {
    Exact(Vec<ExactInterval>),
    Bounded(Vec<BoundedInterval>),
}

/// Closed intervals covering one of the sets at one generation, sorted and
/// pairwise disjoint.
#[derive(Clone, Debug, Serialize)]
pub struct CoverSet {
    pub target: CoverTarget,
    pub generation: usize,
    pub intervals: CoverIntervals,
}

impl CoverSet {
    pub fn len(&self) -> usize {
        match &self.intervals {
            CoverIntervals::Exact(v) => v.len(),
            CoverIntervals::Bounded(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Outer rational bounds of every interval.
    pub fn outer_bounds(&self) -> Vec<(Rational, Rational)> {
        match &self.intervals {
            CoverIntervals::Exact(v) => v.iter().map(|i| (i.lo.clone(), i.hi.clone())).collect(),
            CoverIntervals::Bounded(v) => v.iter().map(|i| (i.lo.lower(), i.hi.upper())).collect(),
        }
    }

    /// Sorted, with each interval ending strictly before the next begins
    /// (for bounded endpoints: provably so).
    pub fn is_sorted_disjoint(&self) -> bool {
        match &self.intervals {
            CoverIntervals::Exact(v) => {
                v.iter().all(|i| i.lo <= i.hi) && v.windows(2).all(|w| w[0].hi < w[1].lo)
            }
            CoverIntervals::Bounded(v) => v.windows(2).all(|w| w[0].hi.definitely_less(&w[1].lo)),
        }
    }
}

fn check_size(count: u64) -> Result<()> {
    if count > MAX_COVER_INTERVALS {
        return Err(Error::Parameter(format!(
            "cover would hold {count} intervals, more than the limit {MAX_COVER_INTERVALS}"
        )));
    }
    Ok(())
}

fn product<F: Fn(usize) -> u32>(n: usize, f: F) -> u64 {
    (2..=n).fold(1u64, |acc, i| acc.saturating_mul(u64::from(f(i))))
}

/// x-projections of all generation-`n` rectangles.
pub fn cover_a(c: &Construction, n: usize) -> Result<CoverSet> {
    check_size(product(n, |i| c.spec_for(i).rs()))?;
    let mut starts = vec![Rational::zero()];
    for g in 2..=n {
        let m = c.metrics(g)?;
        let rs = m.spec.as_ref().expect("child generation").rs();
        let offsets: Vec<Rational> = (0..rs)
            .map(|j| m.period() * Rational::from(i64::from(j)))
            .collect();
        starts = starts
            .iter()
            .flat_map(|x0| offsets.iter().map(move |o| x0 + o))
            .collect();
    }
    let width = c.metrics(n)?.c.clone();
    Ok(CoverSet {
        target: CoverTarget::A,
        generation: n,
        intervals: CoverIntervals::Exact(
            starts
                .into_iter()
                .map(|lo| ExactInterval {
                    hi: &lo + &width,
                    lo,
                })
                .collect(),
        ),
    })
}

/// y-projections of the generation-`n` rows: `s^(n-1)` intervals of
/// height `a_n`.
pub fn cover_d(c: &Construction, n: usize) -> Result<CoverSet> {
    check_size(product(n, |i| c.spec_for(i).s))?;
    let mut bottoms = vec![BoundedReal::zero(c.bits())];
    for g in 2..=n {
        let m = c.metrics(g)?;
        let s = m.spec.as_ref().expect("child generation").s;
        let offsets: Vec<BoundedReal> =
            (0..s).map(|i| m.row_step().mul_int(i64::from(i))).collect();
        bottoms = bottoms
            .iter()
            .flat_map(|y0| offsets.iter().map(move |o| y0.add(o)))
            .collect();
    }
    let height = c.metrics(n)?.a.clone();
    Ok(CoverSet {
        target: CoverTarget::D,
        generation: n,
        intervals: CoverIntervals::Bounded(
            bottoms
                .into_iter()
                .map(|lo| BoundedInterval {
                    hi: lo.add(&height),
                    lo,
                })
                .collect(),
        ),
    })
}

/// `(r - 1) / (rs - 1)`.
pub fn lambda(r: u32, s: u32) -> Rational {
    Rational::new(i64::from(r) - 1, i64::from(r * s) - 1)
}

/// Cover of the level set `A_y` at generation `n`, for `y` in the row
/// cell named by `rows`.
///
/// The raw cover holds the x-projections of the `r^(n-1)` generation-`n`
/// rectangles whose row index at every level matches `rows[..n-1]`. The
/// tight cover shrinks each of them to length `lambda * c_n`, starting at
/// the first rectangle of row `rows[n-1]` among its children, so it needs
/// `n` row indices and a constant schedule.
pub fn cover_level_set(
    c: &Construction,
    rows: &RowAddress,
    n: usize,
    tight: bool,
) -> Result<CoverSet> {
    if n < 1 {
        return Err(Error::Parameter("generation must be at least 1".into()));
    }
    let needed = if tight { n } else { n - 1 };
    rows.check(c, needed)?;
    if tight && c.params().is_scheduled() {
        return Err(Error::Unsupported(
            "tight level-set covers need a constant schedule".into(),
        ));
    }
    check_size(product(n, |i| c.spec_for(i).r))?;
    let mut starts = vec![Rational::zero()];
    for g in 2..=n {
        let m = c.metrics(g)?;
        let r = m.spec.as_ref().expect("child generation").r;
        let row = rows.rows()[g - 2];
        let offsets: Vec<Rational> = (0..r)
            .map(|p| m.period() * Rational::from(i64::from((row - 1) * r + p)))
            .collect();
        starts = starts
            .iter()
            .flat_map(|x0| offsets.iter().map(move |o| x0 + o))
            .collect();
    }
    let m = c.metrics(n)?;
    let (target, length, shift) = if tight {
        let p = c.params();
        let next = c.metrics(n + 1)?;
        let row = rows.rows()[n - 1];
        let shift = next.period() * Rational::from(i64::from((row - 1) * p.r));
        (
            CoverTarget::LevelSetTight(rows.clone()),
            lambda(p.r, p.s) * &m.c,
            shift,
        )
    } else {
        (
            CoverTarget::LevelSet(rows.clone()),
            m.c.clone(),
            Rational::zero(),
        )
    };
    Ok(CoverSet {
        target,
        generation: n,
        intervals: CoverIntervals::Exact(
            starts
                .into_iter()
                .map(|x0| {
                    let lo = x0 + &shift;
                    ExactInterval {
                        hi: &lo + &length,
                        lo,
                    }
                })
                .collect(),
        ),
    })
}

/// The generation-`depth` row cell `[y0, y0 + a_depth]` named by the first
/// `depth - 1` entries of `rows`. These cells shrink to a single point of
/// `D`.
pub fn point_of_row_address(
    c: &Construction,
    rows: &RowAddress,
    depth: usize,
) -> Result<BoundedInterval> {
    if depth < 1 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    rows.check(c, depth - 1)?;
    let mut y0 = BoundedReal::zero(c.bits());
    for (i, &m) in rows.rows()[..depth - 1].iter().enumerate() {
        if m > 1 {
            y0 = y0.add(&c.metrics(i + 2)?.row_step().mul_int(i64::from(m - 1)));
        }
    }
    let a = &c.metrics(depth)?.a;
    Ok(BoundedInterval {
        hi: y0.add(a),
        lo: y0,
    })
}

/// The point of `A` obtained by extending `addr` forever with its last
/// index pair: the left end of the rectangle for `(1,1)`, the right end
/// for `(s,r)`, and an interior point of `A` otherwise. Scheduled
/// constructions and the root address give the rectangle's left end.
pub fn point_of_address(c: &Construction, addr: &RectAddress) -> Result<Rational> {
    let rect = rect_of(c, addr)?;
    let Some(&(m, p)) = addr.path().last() else {
        return Ok(rect.x0);
    };
    if c.params().is_scheduled() {
        return Ok(rect.x0);
    }
    let n = addr.generation();
    let next = c.metrics(n + 1)?;
    let r = c.params().r;
    let j = Rational::from(i64::from((m - 1) * r + (p - 1)));
    let ratio = &next.c / &rect.width;
    Ok(rect.x0 + j * next.period() / (Rational::one() - ratio))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Yes,
    No,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SetKind {
    A,
    D,
}

/// Whether `v` can be shown to lie outside `A` (an x value) or `D` (a y
/// value) using generations up to `depth`. Points of the set itself stay
/// unresolved; only [`membership_of_address`] answers `Yes`.
pub fn membership(
    c: &Construction,
    v: &Rational,
    target: SetKind,
    depth: usize,
) -> Result<Membership> {
    if depth < 1 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    if v.is_negative() || *v > Rational::one() {
        return Ok(Membership::No);
    }
    match target {
        SetKind::A => {
            let descent = descend(c, v, depth)?;
            Ok(if descent.gap.is_some() {
                Membership::No
            } else {
                Membership::Unresolved
            })
        }
        SetKind::D => {
            let y = BoundedReal::from_rational(v, c.bits());
            let exact_y = v;
            let mut y0 = BoundedReal::zero(c.bits());
            for g in 2..=depth {
                let m = c.metrics(g)?;
                let s = m.spec.as_ref().expect("child generation").s;
                let mut next = None;
                for row in 0..s {
                    let bottom = y0.add(&m.row_step().mul_int(i64::from(row)));
                    let top = bottom.add(&m.a);
                    if bottom.upper() <= *exact_y && *exact_y <= top.lower() {
                        next = Some(bottom);
                        break;
                    }
                    if row + 1 < s {
                        let following = y0.add(&m.row_step().mul_int(i64::from(row + 1)));
                        if top.definitely_less(&y) && y.definitely_less(&following) {
                            return Ok(Membership::No);
                        }
                    }
                }
                match next {
                    Some(bottom) => y0 = bottom,
                    None => return Ok(Membership::Unresolved),
                }
            }
            Ok(Membership::Unresolved)
        }
    }
}

/// Points named by a rectangle address (their nested-interval limit) lie
/// in `A` by definition.
pub fn membership_of_address(c: &Construction, addr: &RectAddress) -> Result<Membership> {
    addr.check(c)?;
    Ok(Membership::Yes)
}

/// Closed-form dimensions of the sets for a constant schedule.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionReport {
    /// Dimension of each level set `A_y`: `ln r / ln(rs/(1-eps))`.
    pub alpha: BoundedReal,
    /// Dimension of `D`: `ln s / ((k+eps) ln(rs/(1-eps)))`.
    pub beta: BoundedReal,
    pub lambda: Rational,
    /// `ln(rs) / ln(rs/(1-eps))`, from the same cover argument as `alpha`.
    pub dim_a: BoundedReal,
    pub dim_a_is_derived: bool,
    pub boxcount_alpha: BoundedReal,
    pub boxcount_beta: BoundedReal,
    /// `(1 - alpha) / k`, the largest possible dimension of `D` for level
    /// sets of dimension `alpha`.
    pub beta_upper_bound: BoundedReal,
    /// `beta_upper_bound - beta`.
    pub upper_bound_margin: BoundedReal,
    pub upper_bound_check: bool,
    /// `1 / (k (1 + log_s r))`: the value `beta` approaches as `eps -> 0`.
    pub beta_limit: BoundedReal,
}

/// Closed-form `alpha`, `beta`, `lambda` and `dim A`, cross-checked by
/// consecutive-scale slopes over generations 3 and 4.
pub fn closed_form_dimensions(c: &Construction) -> Result<DimensionReport> {
    let p = c.params();
    if p.is_scheduled() {
        return Err(Error::Unsupported(
            "closed-form dimensions need a constant schedule".into(),
        ));
    }
    let bits = c.bits();
    let work = bits + 32;
    let one = Rational::one();
    let r = Rational::from(i64::from(p.r));
    let s = Rational::from(i64::from(p.s));
    let k = Rational::from(i64::from(p.k));
    let contraction = &r * &s / (&one - &p.eps);
    let ln_c = ln_rational(&contraction, work)?;
    let ln_r = ln_rational(&r, work)?;
    let ln_s = ln_rational(&s, work)?;
    let alpha = ln_r.div(&ln_c)?;
    let beta = ln_s.div(&ln_c.mul_rational(&(&k + &p.eps)))?;
    let dim_a = ln_r.add(&ln_s).div(&ln_c)?;
    let bound = BoundedReal::from_int(1, work)
        .sub(&alpha)
        .div_rational(&k)?;
    let margin = bound.sub(&beta);
    let log_s_r = log_ratio(&r, &s, work)?;
    let beta_limit =
        BoundedReal::from_int(1, work).div(&log_s_r.add_rational(&one).mul_rational(&k))?;
    Ok(DimensionReport {
        alpha: alpha.with_precision(bits),
        beta: beta.with_precision(bits),
        lambda: lambda(p.r, p.s),
        dim_a: dim_a.with_precision(bits),
        dim_a_is_derived: true,
        boxcount_alpha: estimate_dimension(c, &DimensionTarget::LevelSet, 3, 4)?,
        boxcount_beta: estimate_dimension(c, &DimensionTarget::D, 3, 4)?,
        upper_bound_check: margin.definitely_positive(),
        beta_upper_bound: bound.with_precision(bits),
        upper_bound_margin: margin.with_precision(bits),
        beta_limit: beta_limit.with_precision(bits),
    })
}

/// Box count of the union of a cover on the grid `[j*scale, (j+1)*scale)`.
///
/// Boxes are half-open, so a single interval `[lo, hi]` meets the boxes
/// `floor(lo/scale) ..= ceil(hi/scale) - 1` (just `floor(lo/scale)` when
/// it is a point). Bounded endpoints are widened to their outer bounds.
pub fn box_count(cover: &CoverSet, scale: &Rational) -> Result<u64> {
    if !scale.is_positive() {
        return Err(Error::Parameter(format!(
            "box scale must be positive, got {scale}"
        )));
    }
    let mut total = BigInt::zero();
    let mut last: Option<BigInt> = None;
    for (lo, hi) in cover.outer_bounds() {
        let mut first = (&lo / scale).floor();
        let end = (&hi / scale).ceil() - 1;
        let end = if end < first { first.clone() } else { end };
        if let Some(prev) = &last {
            if first <= *prev {
                first = prev + 1;
            }
        }
        if end >= first {
            total += &end - &first + 1;
            last = Some(end);
        }
    }
    total
        .to_u64()
        .ok_or_else(|| Error::Parameter("box count does not fit in 64 bits".into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionTarget {
    A,
    D,
    LevelSet,
}

/// Count and common length of the natural generation-`n` cover of a set:
/// `A`: `prod(r_i s_i)` intervals of length `c_n`; `D`: `prod(s_i)` of
/// length `a_n`; level sets: `prod(r_i)` of length `lambda c_n` (or `c_n`
/// for scheduled constructions).
pub fn natural_cover(
    c: &Construction,
    target: &DimensionTarget,
    n: usize,
) -> Result<(BigInt, BoundedReal)> {
    let m = c.metrics(n)?;
    let bits = c.bits();
    let count =
        |f: &dyn Fn(usize) -> u32| (2..=n).fold(BigInt::from(1), |acc, i| acc * BigInt::from(f(i)));
    Ok(match target {
        DimensionTarget::A => (
            count(&|i| c.spec_for(i).rs()),
            BoundedReal::from_rational(&m.c, bits),
        ),
        DimensionTarget::D => (count(&|i| c.spec_for(i).s), m.a.clone()),
        DimensionTarget::LevelSet => {
            let p = c.params();
            let len = if p.is_scheduled() {
                m.c.clone()
            } else {
                lambda(p.r, p.s) * &m.c
            };
            (
                count(&|i| c.spec_for(i).r),
                BoundedReal::from_rational(&len, bits),
            )
        }
    })
}

/// Slopes `ln(N_{n+1}/N_n) / ln(len_n/len_{n+1})` of the natural covers for
/// `n` in `n_lo..n_hi`.
pub fn consecutive_slopes(
    c: &Construction,
    target: &DimensionTarget,
    n_lo: usize,
    n_hi: usize,
) -> Result<Vec<BoundedReal>> {
    if n_lo < 2 || n_hi <= n_lo {
        return Err(Error::Parameter(format!(
            "need 2 <= n_lo < n_hi, got n_lo={n_lo} n_hi={n_hi}"
        )));
    }
    let bits = c.bits();
    let mut out = Vec::with_capacity(n_hi - n_lo);
    let mut prev = natural_cover(c, target, n_lo)?;
    for n in n_lo..n_hi {
        let next = natural_cover(c, target, n + 1)?;
        let count_ratio = Rational::new(next.0.clone(), prev.0.clone());
        let num = ln_rational(&count_ratio, bits + 32)?;
        let den = prev.1.div(&next.1)?.ln()?;
        out.push(num.div(&den)?.with_precision(bits));
        prev = next;
    }
    Ok(out)
}

/// Consecutive-scale box-counting dimension: the slope between generations
/// `n_hi - 1` and `n_hi` (for a constant schedule every slope from
/// generation 3 on is the same).
pub fn estimate_dimension(
    c: &Construction,
    target: &DimensionTarget,
    n_lo: usize,
    n_hi: usize,
) -> Result<BoundedReal> {
    let slopes = consecutive_slopes(c, target, n_lo, n_hi)?;
    Ok(slopes.last().expect("at least one slope").clone())
}

/// Least-squares slope of `ln N_n` against `-ln len_n` over
/// `n_lo..=n_hi`, in double precision. Meant for scheduled constructions,
/// whose consecutive slopes vary.
pub fn estimate_dimension_lsq(
    c: &Construction,
    target: &DimensionTarget,
    n_lo: usize,
    n_hi: usize,
) -> Result<f64> {
    if n_lo < 2 || n_hi <= n_lo {
        return Err(Error::Parameter(format!(
            "need 2 <= n_lo < n_hi, got n_lo={n_lo} n_hi={n_hi}"
        )));
    }
    let bits = c.bits();
    let mut pts = Vec::new();
    for n in n_lo..=n_hi {
        let (count, len) = natural_cover(c, target, n)?;
        let ln_n = ln_rational(&Rational::from(count), bits)?.to_f64();
        let ln_len = len.ln()?.to_f64();
        pts.push((-ln_len, ln_n));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::evaluate;
    use crate::geometry::{ConstructionParams, GenerationSpec};

    const ALPHA: &str = "0.54763362496550936058937526040596410467783674650445";
    const BETA: &str = "0.41512027638032958874948987549535318295693570347262";
    const ONE_MINUS_ALPHA: &str = "0.45236637503449063941062473959403589532216325349555";
    const DIM_A: &str = "0.98162300481767211246384194842383334140554225468037";

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn example() -> Construction {
        Construction::new(ConstructionParams::example()).unwrap()
    }

    fn close(x: &BoundedReal, reference: &str) -> bool {
        x.widen(&q("1e-45")).contains(&q(reference))
    }

    #[test]
    fn cover_a_examples() {
        let c = example();
        let one = cover_a(&c, 1).unwrap();
        assert_eq!(one.outer_bounds(), vec![(q("0"), q("1"))]);
        let two = cover_a(&c, 2).unwrap();
        assert_eq!(two.len(), 12);
        let bounds = two.outer_bounds();
        assert!(bounds.iter().all(|(lo, hi)| hi - lo == q("7/88")));
        assert_eq!(bounds[0].0, q("0"));
        assert_eq!(bounds[11].1, q("1"));
        assert!(two.is_sorted_disjoint());
        assert_eq!(
            cover_a(&c, 4).unwrap().outer_bounds().last().unwrap().1,
            q("1")
        );
    }

    #[test]
    fn cover_d_examples() {
        let c = example();
        assert_eq!(cover_d(&c, 1).unwrap().len(), 1);
        let two = cover_d(&c, 2).unwrap();
        assert_eq!(two.len(), 3);
        assert!(two.is_sorted_disjoint());
        let b2 = c.metrics(2).unwrap().b.clone().unwrap();
        if let CoverIntervals::Bounded(v) = &two.intervals {
            for w in v.windows(2) {
                assert!(w[1].lo.sub(&w[0].hi).overlaps(&b2));
            }
            assert!(v[2].hi.contains(&q("1")));
        } else {
            panic!("D covers have bounded endpoints");
        }
        assert_eq!(cover_d(&c, 5).unwrap().len(), 81);
    }

    #[test]
    fn level_set_covers() {
        let c = example();
        let root = cover_level_set(&c, &RowAddress::default(), 1, false).unwrap();
        assert_eq!(root.outer_bounds(), vec![(q("0"), q("1"))]);
        let rows: RowAddress = "2,1,3,3".parse().unwrap();
        for n in 1..=4 {
            let raw = cover_level_set(&c, &rows, n, false).unwrap();
            assert_eq!(raw.len(), 4usize.pow(n as u32 - 1));
            assert!(raw.is_sorted_disjoint());
            let next = cover_level_set(&c, &rows, n + 1, false).unwrap();
            // each parent holds exactly r children
            for (lo, hi) in raw.outer_bounds() {
                let inside = next
                    .outer_bounds()
                    .iter()
                    .filter(|(a, b)| *a >= lo && *b <= hi)
                    .count();
                assert_eq!(inside, 4);
            }
        }
        let tight = cover_level_set(&c, &rows, 3, true).unwrap();
        let (lo, hi) = tight.outer_bounds()[0].clone();
        assert_eq!(hi - lo, q("3/11") * &c.metrics(3).unwrap().c);
        assert!(cover_level_set(&c, &"4".parse().unwrap(), 2, false).is_err());
        assert!(cover_level_set(&c, &"1".parse().unwrap(), 2, true).is_err());
    }

    #[test]
    fn lambda_identity() {
        let c = example();
        let l = lambda(4, 3);
        assert_eq!(l, q("3/11"));
        assert_eq!(lambda(2, 2), q("1/3"));
        for n in 2..=8 {
            let m = c.metrics(n).unwrap();
            let prev = c.metrics(n - 1).unwrap();
            assert_eq!(q("3") * m.period() + &l * &m.c, &l * &prev.c);
        }
    }

    #[test]
    fn row_address_points() {
        let c = example();
        let bottom = point_of_row_address(&c, &"1,1,1,1".parse().unwrap(), 5).unwrap();
        assert!(bottom.lo.is_exact() && bottom.lo.value().is_zero());
        let top = point_of_row_address(&c, &"3,3,3,3".parse().unwrap(), 5).unwrap();
        assert!(top.hi.contains(&q("1")));
        let mid = point_of_row_address(&c, &"2,3,1".parse().unwrap(), 4).unwrap();
        assert!(mid.hi.sub(&mid.lo).overlaps(&c.metrics(4).unwrap().a));
    }

    #[test]
    fn address_points() {
        let c = example();
        assert_eq!(
            point_of_address(&c, &RectAddress::repeated(1, 1, 4)).unwrap(),
            q("0")
        );
        assert_eq!(
            point_of_address(&c, &RectAddress::repeated(3, 4, 4)).unwrap(),
            q("1")
        );
        let addr: RectAddress = "2:2,1:3".parse().unwrap();
        let x = point_of_address(&c, &addr).unwrap();
        let rect = rect_of(&c, &addr).unwrap();
        assert!(x > rect.x0 && x < rect.x1());
        for depth in 2..=8 {
            assert_eq!(
                membership(&c, &x, SetKind::A, depth).unwrap(),
                Membership::Unresolved
            );
        }
    }

    #[test]
    fn membership_examples() {
        let c = example();
        for depth in 1..=8 {
            assert_eq!(
                membership(&c, &q("0"), SetKind::A, depth).unwrap(),
                Membership::Unresolved
            );
        }
        let half = (1..=10)
            .map(|d| membership(&c, &q("1/2"), SetKind::A, d).unwrap())
            .find(|m| *m == Membership::No);
        assert!(half.is_some());
        let gap_y = cover_d(&c, 2).unwrap();
        let CoverIntervals::Bounded(v) = &gap_y.intervals else {
            unreachable!()
        };
        let y = (v[0].hi.value() + v[1].lo.value()) / q("2");
        assert_eq!(membership(&c, &y, SetKind::D, 3).unwrap(), Membership::No);
        assert_eq!(
            membership(&c, &q("0"), SetKind::D, 6).unwrap(),
            Membership::Unresolved
        );
        assert_eq!(
            membership(&c, &q("3/2"), SetKind::A, 3).unwrap(),
            Membership::No
        );
        assert_eq!(
            membership_of_address(&c, &"1:1".parse().unwrap()).unwrap(),
            Membership::Yes
        );
    }

    #[test]
    fn closed_forms_match_reference() {
        let c = example();
        let d = closed_form_dimensions(&c).unwrap();
        assert!(close(&d.alpha, ALPHA));
        assert!(close(&d.beta, BETA));
        assert!(close(&d.beta_upper_bound, ONE_MINUS_ALPHA));
        assert!(close(&d.dim_a, DIM_A));
        assert_eq!(d.lambda, q("3/11"));
        assert!(d.upper_bound_check);
        assert!(d.boxcount_alpha.sub(&d.alpha).abs_upper() < q("1e-30"));
        assert!(d.boxcount_beta.sub(&d.beta).abs_upper() < q("1e-30"));
        assert!(d.dim_a_is_derived);
    }

    #[test]
    fn slopes_are_constant() {
        let c = example();
        let d = closed_form_dimensions(&c).unwrap();
        for (target, expected) in [
            (DimensionTarget::D, &d.beta),
            (DimensionTarget::LevelSet, &d.alpha),
            (DimensionTarget::A, &d.dim_a),
        ] {
            for s in consecutive_slopes(&c, &target, 3, 8).unwrap() {
                assert!(s.sub(expected).abs_upper() < q("1e-30"), "{target:?}");
            }
        }
        assert!(consecutive_slopes(&c, &DimensionTarget::D, 1, 3).is_err());
        assert!(consecutive_slopes(&c, &DimensionTarget::D, 4, 4).is_err());
        let lsq = estimate_dimension_lsq(&c, &DimensionTarget::D, 3, 8).unwrap();
        assert!((lsq - d.beta.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn scheduled_constructions_skip_closed_forms() {
        let spec = |r, s| GenerationSpec {
            r,
            s,
            eps: q("1/64"),
        };
        let params = ConstructionParams::new(1, 2, 2, q("1/22"))
            .unwrap()
            .with_schedule(vec![spec(2, 2), spec(2, 3), spec(2, 4)])
            .unwrap();
        let c = Construction::new(params).unwrap();
        assert!(matches!(
            closed_form_dimensions(&c),
            Err(Error::Unsupported(_))
        ));
        assert!(estimate_dimension_lsq(&c, &DimensionTarget::D, 2, 6).is_ok());
        assert_eq!(cover_d(&c, 4).unwrap().len(), 2 * 3 * 4);
    }

    #[test]
    fn box_count_conventions() {
        let unit = CoverSet {
            target: CoverTarget::A,
            generation: 1,
            intervals: CoverIntervals::Exact(vec![ExactInterval {
                lo: q("0"),
                hi: q("1"),
            }]),
        };
        assert_eq!(box_count(&unit, &q("1/4")).unwrap(), 4);
        assert_eq!(box_count(&unit, &q("1/3")).unwrap(), 3);
        let sparse = CoverSet {
            target: CoverTarget::A,
            generation: 1,
            intervals: CoverIntervals::Exact(
                (0..5)
                    .map(|i| ExactInterval {
                        lo: Rational::new(10 * i + 1, 100),
                        hi: Rational::new(10 * i + 2, 100),
                    })
                    .collect(),
            ),
        };
        assert_eq!(box_count(&sparse, &q("1/25")).unwrap(), 5);
        assert!(box_count(&sparse, &q("0")).is_err());
    }

    #[test]
    fn grid_count_of_d_covers_is_bracketed() {
        // a_n is irrational, so the grid at a rational scale near a_n is not
        // aligned with the cover; each interval then meets one or two boxes
        let c = example();
        for n in 2..=5 {
            let cover = cover_d(&c, n).unwrap();
            let a = &c.metrics(n).unwrap().a;
            let scale = a.upper();
            let count = box_count(&cover, &scale).unwrap();
            let rows = 3u64.pow(n as u32 - 1);
            assert!(count >= rows && count <= 2 * rows, "n={n} count={count}");
        }
    }

    #[test]
    fn graph_over_level_set_cover_stays_in_row() {
        let c = example();
        let rows: RowAddress = "2,3,1".parse().unwrap();
        let cell = point_of_row_address(&c, &rows, 4).unwrap();
        let cover = cover_level_set(&c, &rows, 4, false).unwrap();
        let tol = q("1e-20");
        for (lo, hi) in cover.outer_bounds() {
            for i in 0..=4 {
                let x = &lo + (&hi - &lo) * Rational::new(i, 4);
                let v = evaluate(&c, &x, &tol).unwrap().value;
                assert!(v.lower() <= cell.hi.upper() && v.upper() >= cell.lo.lower());
            }
        }
    }
}
