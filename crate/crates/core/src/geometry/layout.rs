use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::construction::Construction;
use crate::error::{Error, Result};
use crate::numerics::{BoundedReal, Dyadic, Rational};

/// Path from the root to a rectangle: one `(row m, position p)` pair per
/// level, both 1-based. The empty path is the root `[0,1] x [0,1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RectAddress(Vec<(u32, u32)>);

impl RectAddress {
    pub fn root() -> Self {
        RectAddress(Vec::new())
    }

    pub fn new(path: Vec<(u32, u32)>) -> Self {
        RectAddress(path)
    }

    /// `depth - 1` copies of `(m, p)`, giving a generation-`depth` address.
    pub fn repeated(m: u32, p: u32, depth: usize) -> Self {
        RectAddress(vec![(m, p); depth.saturating_sub(1)])
    }

    pub fn path(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn generation(&self) -> usize {
        self.0.len() + 1
    }

    pub fn child(&self, m: u32, p: u32) -> Self {
        let mut path = self.0.clone();
        path.push((m, p));
        RectAddress(path)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(RectAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn truncated(&self, generation: usize) -> Self {
        RectAddress(self.0[..generation.saturating_sub(1).min(self.0.len())].to_vec())
    }

    /// Row indices along the path.
    pub fn rows(&self) -> Vec<u32> {
        self.0.iter().map(|&(m, _)| m).collect()
    }

    /// Checks every index against the branching of its level.
    pub fn check(&self, c: &Construction) -> Result<()> {
        for (i, &(m, p)) in self.0.iter().enumerate() {
            let spec = c.spec_for(i + 2);
            if m < 1 || m > spec.s || p < 1 || p > spec.r {
                return Err(Error::Address(format!(
                    "index ({m},{p}) at level {} outside 1..={} x 1..={}",
                    i + 1,
                    spec.s,
                    spec.r
                )));
            }
        }
        Ok(())
    }
}

/// `"m:p,m:p,..."`; the root is the empty string.
impl fmt::Display for RectAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (m, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}:{p}")?;
        }
        Ok(())
    }
}

impl FromStr for RectAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "root" {
            return Ok(RectAddress::root());
        }
        let bad = || Error::Parse(format!("address must look like \"m:p,m:p\", got {s:?}"));
        let path = s
            .split(',')
            .map(|part| {
                let (m, p) = part.trim().split_once(':').ok_or_else(bad)?;
                Ok((
                    m.trim().parse().map_err(|_| bad())?,
                    p.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RectAddress(path))
    }
}

impl Serialize for RectAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RectAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A realized rectangle `[x0, x0 + width] x [y0, y0 + height]`.
#[derive(Clone, Debug, Serialize)]
pub struct Rect {
    pub address: RectAddress,
    pub x0: Rational,
    pub width: Rational,
    pub y0: BoundedReal,
    pub height: BoundedReal,
}

impl Rect {
    pub fn generation(&self) -> usize {
        self.address.generation()
    }

    pub fn x1(&self) -> Rational {
        &self.x0 + &self.width
    }

    pub fn y1(&self) -> BoundedReal {
        self.y0.add(&self.height)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    /// Between neighbours in one row; the graph descends by `a_n`.
    WithinRow,
    /// From the last rectangle of a row to the first of the next; the graph
    /// ascends by `b_n`.
    RowTransition,
}

/// The link between two consecutive sibling rectangles.
#[derive(Clone, Debug, Serialize)]
pub struct GapSegment {
    pub generation: usize,
    pub parent: RectAddress,
    /// 0-based position of the left neighbour in traversal order.
    pub index: usize,
    pub kind: GapKind,
    pub x_start: Rational,
    pub x_end: Rational,
    pub y_start: BoundedReal,
    pub y_end: BoundedReal,
    /// `y_end - y_start` computed directly: `-a_n` or `b_n`.
    pub rise: BoundedReal,
}

impl GapSegment {
    pub fn width(&self) -> Rational {
        &self.x_end - &self.x_start
    }
}

/// Which end of its rectangles a point sits on, when it is a corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    Left,
    Right,
}

/// Outcome of [`locate`].
#[derive(Clone, Debug)]
pub enum Location {
    /// `x` lies strictly inside a gap; `t = (x - x_start) / d_n`.
    Gap { gap: GapSegment, t: Rational },
    /// `x` lies in the x-projection of the rectangle at `address` (the
    /// deepest one examined). `corner` is set when `x` is an endpoint of
    /// that projection, in which case it belongs to `A`.
    Cantor {
        address: RectAddress,
        corner: Option<Corner>,
    },
}

/// Row and position of the `j`-th child (0-based, traversal order).
pub(crate) fn child_indices(j: u32, r: u32) -> (u32, u32) {
    (j / r + 1, j % r + 1)
}

/// Bottom edge of the rectangle reached by `path`.
pub(crate) fn y0_of_path(c: &Construction, path: &[(u32, u32)]) -> Result<BoundedReal> {
    // exact dyadic sums, rounded once
    let mut mid = Dyadic::zero();
    let mut rad = Dyadic::zero();
    for (i, &(m, _)) in path.iter().enumerate() {
        if m > 1 {
            let metrics = c.metrics(i + 2)?;
            let step = metrics.row_step();
            let k = BigInt::from(m - 1);
            mid = mid.add(&step.mid_dyadic().mul_int(&k));
            rad = rad.add(&step.rad_dyadic().mul_int(&k));
        }
    }
    Ok(BoundedReal::from_parts(mid, rad, c.bits()))
}

/// Realizes the rectangle at `addr`.
pub fn rect_of(c: &Construction, addr: &RectAddress) -> Result<Rect> {
    addr.check(c)?;
    let mut x0 = Rational::zero();
    for (i, &(m, p)) in addr.path().iter().enumerate() {
        let metrics = c.metrics(i + 2)?;
        let (r, _) = metrics.branching().expect("child generation");
        let j = (m - 1) * r + (p - 1);
        x0 = x0 + metrics.period() * Rational::from(i64::from(j));
    }
    let metrics = c.metrics(addr.generation())?;
    Ok(Rect {
        address: addr.clone(),
        x0,
        width: metrics.c.clone(),
        y0: y0_of_path(c, addr.path())?,
        height: metrics.a.clone(),
    })
}

/// Realizes all children of `parent` in traversal order.
pub fn children_of(c: &Construction, parent: &Rect) -> Result<Vec<Rect>> {
    let n = parent.generation() + 1;
    let metrics = c.metrics(n)?;
    let (r, s) = metrics.branching().expect("child generation");
    let period = metrics.period();
    let step = metrics.row_step();
    let mut out = Vec::with_capacity((r * s) as usize);
    for m in 1..=s {
        let y0 = parent.y0.add(&step.mul_int(i64::from(m - 1)));
        for p in 1..=r {
            let j = (m - 1) * r + (p - 1);
            out.push(Rect {
                address: parent.address.child(m, p),
                x0: &parent.x0 + period * Rational::from(i64::from(j)),
                width: metrics.c.clone(),
                y0: y0.clone(),
                height: metrics.a.clone(),
            });
        }
    }
    Ok(out)
}

/// The `rs - 1` gaps between consecutive children of `parent`, in
/// traversal order.
pub fn gaps_of(c: &Construction, parent: &RectAddress) -> Result<Vec<GapSegment>> {
    let rect = rect_of(c, parent)?;
    let n = parent.generation() + 1;
    let metrics = c.metrics(n)?;
    let (r, s) = metrics.branching().expect("child generation");
    (0..r * s - 1)
        .map(|j| gap_at(c, &rect.address, &rect.x0, &rect.y0, j))
        .collect()
}

/// Gap number `j` (0-based) among the children of the rectangle at
/// `parent` with lower-left corner `(x0, y0)`.
pub(crate) fn gap_at(
    c: &Construction,
    parent: &RectAddress,
    x0: &Rational,
    y0: &BoundedReal,
    j: u32,
) -> Result<GapSegment> {
    let n = parent.generation() + 1;
    let metrics = c.metrics(n)?;
    let (r, _) = metrics.branching().expect("child generation");
    let d = metrics.d.as_ref().expect("child generation");
    let b = metrics.b.as_ref().expect("child generation");
    let (m, p) = child_indices(j, r);
    let row_y0 = y0.add(&metrics.row_step().mul_int(i64::from(m - 1)));
    let x_start = x0 + metrics.period() * Rational::from(i64::from(j)) + &metrics.c;
    let x_end = &x_start + d;
    let y_start = row_y0.add(&metrics.a);
    let (kind, y_end, rise) = if p < r {
        (GapKind::WithinRow, row_y0, metrics.a.neg())
    } else {
        (GapKind::RowTransition, y_start.add(b), b.clone())
    };
    Ok(GapSegment {
        generation: n,
        parent: parent.clone(),
        index: j as usize,
        kind,
        x_start,
        x_end,
        y_start,
        y_end,
        rise,
    })
}

/// Internal result of the integer descent.
pub(crate) struct Descent {
    pub path: Vec<(u32, u32)>,
    /// Left end of the last rectangle on `path`, times the lattice scale.
    pub x0_scaled: BigInt,
    pub scale: BigInt,
    /// Set when `x` falls in a gap: `(gap index, t numerator, t
    /// denominator)` with `t = (x - x_start) / d_n` in `(0, 1)`; the gap
    /// lies among the children of the last rectangle on `path`.
    pub gap: Option<(u32, BigInt, BigInt)>,
    pub corner: Option<Corner>,
}

impl Descent {
    pub fn x0(&self) -> Rational {
        Rational::new(self.x0_scaled.clone(), self.scale.clone())
    }
}

/// Descends from the root to generation `max_depth` (or the first gap).
pub(crate) fn descend(c: &Construction, x: &Rational, max_depth: usize) -> Result<Descent> {
    let lattice = c.lattice(max_depth)?;
    let v = x.denom();
    // offset of x from the current rectangle's left end, scaled by v * L
    let mut t = x.numer() * &lattice.scale;
    let mut x0_scaled = BigInt::zero();
    let mut path = Vec::new();
    let mut corner = if t.is_zero() {
        Some(Corner::Left)
    } else if t == v * &lattice.scale {
        Some(Corner::Right)
    } else {
        None
    };
    for n in 2..=max_depth {
        let spec = c.spec_for(n);
        let (r, rs) = (spec.r, spec.rs());
        let vp = v * &lattice.period[n];
        let vw = v * &lattice.width[n];
        let j = (&t / &vp).to_u32().unwrap_or(u32::MAX).min(rs - 1);
        let rem = &t - &vp * BigInt::from(j);
        if rem > vw {
            let num = &rem - &vw;
            let den = &vp - &vw;
            return Ok(Descent {
                path,
                x0_scaled,
                scale: lattice.scale.clone(),
                gap: Some((j, num, den)),
                corner: None,
            });
        }
        x0_scaled += &lattice.period[n] * BigInt::from(j);
        path.push(child_indices(j, r));
        if corner.is_none() {
            if rem.is_zero() {
                corner = Some(Corner::Left);
            } else if rem == vw {
                corner = Some(Corner::Right);
            }
        }
        t = rem;
    }
    Ok(Descent {
        path,
        x0_scaled,
        scale: lattice.scale.clone(),
        gap: None,
        corner,
    })
}

/// Classifies `x` in `[0, 1]`: inside some gap, or inside a rectangle of
/// generation `max_depth`.
pub fn locate(c: &Construction, x: &Rational, max_depth: usize) -> Result<Location> {
    if x.is_negative() || *x > Rational::one() {
        return Err(Error::Domain(format!("locate needs x in [0, 1], got {x}")));
    }
    if max_depth < 1 {
        return Err(Error::Parameter("max_depth must be at least 1".into()));
    }
    let descent = descend(c, x, max_depth)?;
    let x0 = descent.x0();
    let Descent {
        path, gap, corner, ..
    } = descent;
    match gap {
        Some((j, num, den)) => {
            let y0 = y0_of_path(c, &path)?;
            let gap = gap_at(c, &RectAddress::new(path), &x0, &y0, j)?;
            Ok(Location::Gap {
                gap,
                t: Rational::new(num, den),
            })
        }
        None => Ok(Location::Cantor {
            address: RectAddress::new(path),
            corner,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConstructionParams;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn example() -> Construction {
        Construction::new(ConstructionParams::example()).unwrap()
    }

    #[test]
    fn root_rect() {
        let c = example();
        let root = rect_of(&c, &RectAddress::root()).unwrap();
        assert_eq!(root.x0, Rational::zero());
        assert_eq!(root.width, q("1"));
        assert_eq!(root.y0.value(), Rational::zero());
        assert_eq!(root.height.value(), q("1"));
    }

    #[test]
    fn corner_children() {
        let c = example();
        let first = rect_of(&c, &RectAddress::new(vec![(1, 1)])).unwrap();
        assert_eq!(first.x0, Rational::zero());
        assert!(first.y0.is_exact() && first.y0.value().is_zero());
        let last = rect_of(&c, &RectAddress::new(vec![(3, 4)])).unwrap();
        assert_eq!(last.x1(), q("1"));
        assert!(last.y1().contains(&q("1")));
        assert!(rect_of(&c, &RectAddress::new(vec![(4, 1)])).is_err());
        assert!(rect_of(&c, &RectAddress::new(vec![(1, 5)])).is_err());
        assert!(rect_of(&c, &RectAddress::new(vec![(0, 1)])).is_err());
    }

    #[test]
    fn children_agree_with_rect_of() {
        let c = example();
        let parent = rect_of(&c, &"2:3".parse().unwrap()).unwrap();
        for child in children_of(&c, &parent).unwrap() {
            let direct = rect_of(&c, &child.address).unwrap();
            assert_eq!(direct.x0, child.x0);
            assert!(direct.y0.overlaps(&child.y0));
        }
    }

    #[test]
    fn first_gap_under_root() {
        let c = example();
        let gaps = gaps_of(&c, &RectAddress::root()).unwrap();
        assert_eq!(gaps.len(), 11);
        assert_eq!(gaps[0].x_start, q("7/88"));
        assert_eq!(gaps[0].x_end, q("7/88") + q("1/242"));
        assert_eq!(gaps[0].kind, GapKind::WithinRow);
        assert_eq!(gaps[3].kind, GapKind::RowTransition);
        assert_eq!(gaps[7].kind, GapKind::RowTransition);
        let b2 = c.metrics(2).unwrap().b.clone().unwrap();
        assert!(gaps[3].y_end.sub(&gaps[3].y_start).overlaps(&b2));
        let a2 = c.metrics(2).unwrap().a.clone();
        assert!(gaps[0].y_start.sub(&gaps[0].y_end).overlaps(&a2));
    }

    #[test]
    fn gap_endpoints_meet_rectangle_corners() {
        let c = example();
        let parent = rect_of(&c, &"3:2".parse().unwrap()).unwrap();
        let kids = children_of(&c, &parent).unwrap();
        let gaps = gaps_of(&c, &parent.address).unwrap();
        for (j, g) in gaps.iter().enumerate() {
            assert_eq!(g.x_start, kids[j].x1());
            assert_eq!(g.x_end, kids[j + 1].x0);
            assert!(g.y_start.overlaps(&kids[j].y1()));
            assert!(g.y_end.overlaps(&kids[j + 1].y0));
            assert_eq!(g.width(), c.metrics(3).unwrap().d.clone().unwrap());
        }
    }

    #[test]
    fn locate_examples() {
        let c = example();
        match locate(&c, &q("0"), 5).unwrap() {
            Location::Cantor { address, corner } => {
                assert_eq!(address, RectAddress::repeated(1, 1, 5));
                assert_eq!(corner, Some(Corner::Left));
            }
            other => panic!("{other:?}"),
        }
        match locate(&c, &q("1"), 5).unwrap() {
            Location::Cantor { address, corner } => {
                assert_eq!(address, RectAddress::repeated(3, 4, 5));
                assert_eq!(corner, Some(Corner::Right));
            }
            other => panic!("{other:?}"),
        }
        match locate(&c, &(q("7/88") + q("1/484")), 5).unwrap() {
            Location::Gap { gap, t } => {
                assert_eq!(gap.generation, 2);
                assert_eq!(gap.index, 0);
                assert_eq!(t, q("1/2"));
            }
            other => panic!("{other:?}"),
        }
        assert!(locate(&c, &q("-1/2"), 3).is_err());
        assert!(locate(&c, &q("3/2"), 3).is_err());
    }

    #[test]
    fn locate_interior_point_of_rectangle() {
        let c = example();
        let rect = rect_of(&c, &"2:2,1:3".parse().unwrap()).unwrap();
        let x = &rect.x0 + &rect.width * q("1/3");
        match locate(&c, &x, 3).unwrap() {
            Location::Cantor { address, corner } => {
                assert_eq!(address, rect.address);
                assert_eq!(corner, None);
            }
            other => panic!("{other:?}"),
        }
        // the corner of a deep rectangle is detected as such
        match locate(&c, &rect.x1(), 6).unwrap() {
            Location::Cantor { corner, address } => {
                assert_eq!(corner, Some(Corner::Right));
                assert_eq!(address.truncated(3), rect.address);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn address_text_round_trip() {
        let a: RectAddress = "1:2, 3:4".parse().unwrap();
        assert_eq!(a.path(), &[(1, 2), (3, 4)]);
        assert_eq!(a.to_string(), "1:2,3:4");
        assert_eq!(a.generation(), 3);
        assert_eq!("".parse::<RectAddress>().unwrap(), RectAddress::root());
        assert!("1-2".parse::<RectAddress>().is_err());
    }
}
