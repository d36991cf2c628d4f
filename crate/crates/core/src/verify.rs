//! The invariant suite behind `kflat verify`: layout identities, kernel
//! flatness, evaluator endpoint and continuity checks, cover structure and
//! dimension identities.

use serde::Serialize;

use crate::cantor::{
    closed_form_dimensions, consecutive_slopes, cover_a, cover_d, lambda, DimensionTarget,
};
use crate::error::Result;
use crate::evaluator::Evaluator;
use crate::geometry::{gaps_of, validate, Construction, ConstructionParams, RectAddress};
use crate::numerics::{BoundedReal, Rational};

/// Cover checks stop at this generation to keep the suite fast.
const COVER_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub params: ConstructionParams,
    pub depth: usize,
    pub passed: bool,
    pub counts: Counts,
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    /// Adds a check run outside the suite.
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        let status = if passed { Status::Pass } else { Status::Fail };
        if passed {
            self.counts.pass += 1;
        } else {
            self.counts.fail += 1;
            self.passed = false;
        }
        self.checks.push(VerifyCheck {
            name: name.into(),
            status,
            detail: if passed { String::new() } else { detail.into() },
        });
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

#[derive(Default)]
struct Suite {
    checks: Vec<VerifyCheck>,
}

impl Suite {
    fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl FnOnce() -> String) {
        let status = if ok { Status::Pass } else { Status::Fail };
        let detail = if ok { String::new() } else { detail() };
        self.checks.push(VerifyCheck {
            name: name.into(),
            status,
            detail,
        });
    }

    fn skip(&mut self, name: impl Into<String>, why: &str) {
        self.checks.push(VerifyCheck {
            name: name.into(),
            status: Status::Skipped,
            detail: why.into(),
        });
    }

    /// Records `Err` from a group as a single failure.
    fn group(&mut self, name: &str, run: impl FnOnce(&mut Suite) -> Result<()>) {
        if let Err(e) = run(self) {
            self.check(name, false, || e.to_string());
        }
    }
}

/// Runs every check at `depth` (at least 2). Failures are collected, never
/// raised.
pub fn run_suite(c: &Construction, depth: usize) -> VerifyReport {
    let depth = depth.max(2);
    let mut suite = Suite::default();

    for check in validate(c, depth).checks {
        let detail = check.detail.clone();
        suite.check(
            format!("geometry/{}@{}", check.name, check.generation),
            check.passed,
            || detail,
        );
    }
    suite.group("kernel", |s| kernel_checks(c, s));
    suite.group("evaluator", |s| evaluator_checks(c, s));
    suite.group("cantor", |s| cantor_checks(c, depth, s));
    if c.params().is_scheduled() {
        for name in [
            "dims/closed-form-alpha",
            "dims/closed-form-beta",
            "dims/upper-bound",
        ] {
            suite.skip(name, "closed forms need a constant schedule");
        }
    } else {
        suite.group("dims", |s| dimension_checks(c, depth, s));
    }

    let mut counts = Counts::default();
    for check in &suite.checks {
        match check.status {
            Status::Pass => counts.pass += 1,
            Status::Fail => counts.fail += 1,
            Status::Skipped => counts.skipped += 1,
        }
    }
    VerifyReport {
        params: c.params().clone(),
        depth,
        passed: counts.fail == 0,
        counts,
        checks: suite.checks,
    }
}

fn kernel_checks(c: &Construction, s: &mut Suite) -> Result<()> {
    let kernel = c.kernel();
    let (zero, one) = (Rational::zero(), Rational::one());
    s.check(
        "kernel/endpoint-values",
        kernel.eval(&zero)? == one && kernel.eval(&one)?.is_zero(),
        || "phi(0) must be 1 and phi(1) must be 0".into(),
    );
    for j in 1..=c.k() {
        let at0 = kernel.derivative(j, &zero)?;
        let at1 = kernel.derivative(j, &one)?;
        s.check(
            format!("kernel/flat-order-{j}"),
            at0.is_zero() && at1.is_zero(),
            || format!("derivative {j}: {at0} at 0, {at1} at 1"),
        );
    }
    Ok(())
}

fn evaluator_checks(c: &Construction, s: &mut Suite) -> Result<()> {
    let ev = Evaluator::new(c, &Rational::new(1, 1_000_000_000_000i64))?;
    let (zero, one) = (Rational::zero(), Rational::one());
    let f0 = ev.eval(&zero)?.value;
    let f1 = ev.eval(&one)?.value;
    s.check(
        "eval/endpoints",
        f0.is_exact() && f0.value().is_zero() && f1.is_exact() && f1.value() == one,
        || format!("f(0) = {f0}, f(1) = {f1}"),
    );
    let outside = ev.eval(&Rational::from(-1))?.value;
    s.check(
        "eval/left-extension",
        outside.value() == Rational::from(-1),
        || format!("f(-1) = {outside}"),
    );

    let mut in_range = true;
    for i in 0..=64 {
        let v = ev.eval(&Rational::new(i, 64))?.value;
        in_range &= !v.definitely_negative()
            && !v
                .sub(&BoundedReal::from_int(1, c.bits()))
                .definitely_positive();
    }
    s.check("eval/maps-into-unit-interval", in_range, || {
        "a grid value left [0, 1]".into()
    });

    let mut joined = true;
    let mut first_bad = String::new();
    for gap in gaps_of(c, &RectAddress::root())? {
        let start = ev.eval(&gap.x_start)?.value;
        let end = ev.eval(&gap.x_end)?.value;
        if !(start.overlaps(&gap.y_start) && end.overlaps(&gap.y_end)) {
            joined = false;
            if first_bad.is_empty() {
                first_bad = format!("gap {} does not meet its corners", gap.index);
            }
        }
    }
    s.check("eval/gaps-join-corners", joined, || first_bad);
    Ok(())
}

fn cantor_checks(c: &Construction, depth: usize, s: &mut Suite) -> Result<()> {
    for n in 2..=depth {
        let prev = c.metrics(n - 1)?;
        let m = c.metrics(n)?;
        let (r, sr) = m.branching().expect("child generation");
        let lam = lambda(r, sr);
        let lhs = Rational::from(i64::from(r) - 1) * m.period() + &lam * &m.c;
        let rhs = &lam * &prev.c;
        s.check(format!("cantor/lambda-identity@{n}"), lhs == rhs, || {
            format!("{lhs} != {rhs}")
        });
    }
    for n in 2..=depth.min(COVER_DEPTH) {
        let a = cover_a(c, n)?;
        let expected: u64 = (2..=n).map(|g| u64::from(c.spec_for(g).rs())).product();
        s.check(
            format!("cantor/cover-a@{n}"),
            a.is_sorted_disjoint() && a.len() as u64 == expected,
            || {
                format!(
                    "{} intervals, expected {expected} sorted and disjoint",
                    a.len()
                )
            },
        );
        let d = cover_d(c, n)?;
        let expected: u64 = (2..=n).map(|g| u64::from(c.spec_for(g).s)).product();
        s.check(
            format!("cantor/cover-d@{n}"),
            d.is_sorted_disjoint() && d.len() as u64 == expected,
            || {
                format!(
                    "{} intervals, expected {expected} sorted and disjoint",
                    d.len()
                )
            },
        );
    }
    Ok(())
}

fn dimension_checks(c: &Construction, depth: usize, s: &mut Suite) -> Result<()> {
    let dims = closed_form_dimensions(c)?;
    let tol = Rational::new(1, 10_000_000_000i64);
    let hi = depth.max(4);
    let pairs = [
        (
            "dims/closed-form-alpha",
            DimensionTarget::LevelSet,
            &dims.alpha,
        ),
        ("dims/closed-form-beta", DimensionTarget::D, &dims.beta),
    ];
    for (name, target, closed) in pairs {
        let slopes = consecutive_slopes(c, &target, 3, hi)?;
        let worst = slopes
            .iter()
            .map(|x| x.sub(closed).abs().upper())
            .max()
            .expect("at least one slope");
        s.check(name, worst < tol, || {
            format!("slopes differ from closed form by {}", worst.to_f64())
        });
    }
    s.check("dims/upper-bound", dims.upper_bound_check, || {
        format!(
            "beta = {} is not below (1 - alpha)/k = {}",
            dims.beta, dims.beta_upper_bound
        )
    });
    Ok(())
}
