//! Choosing `(r, s, eps)` so that the level sets have dimension just above
//! a target `alpha` while the set of their values keeps dimension within
//! `eta` of the largest possible value `(1 - alpha) / k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ConstructionParams;
use crate::numerics::{ln_rational, BoundedReal, Rational, DEFAULT_PRECISION_BITS};

#[derive(Clone, Debug, Serialize)]
pub struct PlanRequest {
    pub k: u32,
    pub alpha_target: Rational,
    pub eta: Rational,
    pub max_s: u32,
    pub max_r: u32,
}

impl PlanRequest {
    pub fn new(k: u32, alpha_target: Rational, eta: Rational) -> Self {
        PlanRequest {
            k,
            alpha_target,
            eta,
            max_s: 64,
            max_r: 4096,
        }
    }

    pub fn with_limits(mut self, max_s: u32, max_r: u32) -> Self {
        self.max_s = max_s;
        self.max_r = max_r;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if !self.alpha_target.is_positive() || self.alpha_target >= Rational::one() {
            return Err(Error::Parameter(format!(
                "alpha_target must lie in (0, 1), got {}",
                self.alpha_target
            )));
        }
        if !self.eta.is_positive() {
            return Err(Error::Parameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.max_s < 2 || self.max_r < 2 {
            return Err(Error::Parameter(
                "search limits must allow r, s >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// One inequality `lhs > rhs`, with `margin = lhs - rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct Margin {
    pub name: &'static str,
    pub inequality: &'static str,
    pub margin: BoundedReal,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub k: u32,
    pub r: u32,
    pub s: u32,
    pub eps: Rational,
    pub alpha_target: Rational,
    pub eta: Rational,
    pub precision_bits: u32,
    pub margins: Vec<Margin>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.margins.iter().all(|m| m.holds)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanResult {
    pub params: ConstructionParams,
    /// `alpha(r, s)`, the dimension approached as `eps -> 0`.
    pub alpha_rs: BoundedReal,
    pub achieved_alpha: BoundedReal,
    pub achieved_beta: BoundedReal,
    pub certificate: Certificate,
}

/// Logarithms shared by every inequality for one `(r, s)`.
struct Logs {
    ln_r: BoundedReal,
    ln_s: BoundedReal,
    bits: u32,
}

impl Logs {
    fn new(r: u32, s: u32, bits: u32) -> Result<Self> {
        Ok(Logs {
            ln_r: ln_rational(&Rational::from(i64::from(r)), bits)?,
            ln_s: ln_rational(&Rational::from(i64::from(s)), bits)?,
            bits,
        })
    }

    /// `alpha(r, s) = ln r / (ln r + ln s)`.
    fn alpha_rs(&self) -> Result<BoundedReal> {
        self.ln_r.div(&self.ln_r.add(&self.ln_s))
    }

    /// `ln(rs / (1 - eps))`.
    fn ln_contraction(&self, eps: &Rational) -> Result<BoundedReal> {
        let ln_shrink = ln_rational(&(Rational::one() - eps), self.bits)?;
        Ok(self.ln_r.add(&self.ln_s).sub(&ln_shrink))
    }

    /// Level-set dimension `ln r / ln(rs / (1 - eps))`.
    fn alpha(&self, eps: &Rational) -> Result<BoundedReal> {
        self.ln_r.div(&self.ln_contraction(eps)?)
    }

    /// Dimension of the value set, `ln s / ((k + eps) ln(rs / (1 - eps)))`.
    fn beta(&self, k: u32, eps: &Rational) -> Result<BoundedReal> {
        let k_eps = Rational::from(i64::from(k)) + eps;
        self.ln_s
            .div(&self.ln_contraction(eps)?.mul_rational(&k_eps))
    }
}

fn margins(
    k: u32,
    r: u32,
    s: u32,
    eps: &Rational,
    alpha_t: &Rational,
    eta: &Rational,
    bits: u32,
) -> Result<(Vec<Margin>, BoundedReal, BoundedReal, BoundedReal)> {
    let logs = Logs::new(r, s, bits)?;
    let alpha_rs = logs.alpha_rs()?;
    let alpha = logs.alpha(eps)?;
    let beta = logs.beta(k, eps)?;
    let k_q = Rational::from(i64::from(k));
    // 1 / (k (1 + log_s r)) = (1 - alpha(r, s)) / k
    let beta_limit = BoundedReal::from_int(1, bits)
        .sub(&alpha_rs)
        .div_rational(&k_q)?;
    let best = (Rational::one() - alpha_t) / &k_q - eta;
    let mut out = Vec::with_capacity(5);
    let mut push = |name, inequality, margin: BoundedReal| {
        out.push(Margin {
            name,
            inequality,
            holds: margin.definitely_positive(),
            margin,
        })
    };
    push(
        "alpha-rs-below",
        "alpha_target + eta > alpha(r,s)",
        alpha_rs.neg().add_rational(&(alpha_t + eta)),
    );
    push(
        "alpha-rs-above",
        "alpha(r,s) > alpha_target",
        alpha_rs.add_rational(&-alpha_t),
    );
    push(
        "beta-near-limit",
        "beta(eps) > 1/(k(1+log_s r)) - eta",
        beta.sub(&beta_limit).add_rational(eta),
    );
    push(
        "alpha-eps-above",
        "log_s r / (1 + log_s(r/(1-eps))) > alpha_target",
        alpha.add_rational(&-alpha_t),
    );
    push(
        "beta-near-optimal",
        "beta(eps) > (1 - alpha_target)/k - eta",
        beta.add_rational(&-best),
    );
    Ok((out, alpha_rs, alpha, beta))
}

/// Recomputes every inequality of a plan at twice the working precision.
pub fn certify(
    params: &ConstructionParams,
    alpha_target: &Rational,
    eta: &Rational,
) -> Result<Certificate> {
    params.validate()?;
    if params.is_scheduled() {
        return Err(Error::Unsupported(
            "certificates need a constant schedule".into(),
        ));
    }
    let bits = 2 * params.precision_bits;
    let (margins, ..) = margins(
        params.k,
        params.r,
        params.s,
        &params.eps,
        alpha_target,
        eta,
        bits,
    )?;
    let cert = Certificate {
        k: params.k,
        r: params.r,
        s: params.s,
        eps: params.eps.clone(),
        alpha_target: alpha_target.clone(),
        eta: eta.clone(),
        precision_bits: bits,
        margins,
    };
    if !cert.holds() {
        let failed: Vec<_> = cert
            .margins
            .iter()
            .filter(|m| !m.holds)
            .map(|m| m.inequality)
            .collect();
        return Err(Error::Certification(format!(
            "(r={}, s={}, eps={}) fails: {}",
            params.r,
            params.s,
            params.eps,
            failed.join("; ")
        )));
    }
    Ok(cert)
}

/// Smallest `eps` tried before giving up on an `(r, s)` pair.
const MIN_EPS_LOG2: u32 = 80;

/// Searches `s = 2, 3, ...` and, for each, `r` outward from
/// `s^(alpha/(1-alpha))`, for `alpha(r, s)` strictly inside
/// `(alpha_target, alpha_target + eta)`; then halves `eps` from
/// `min(1/2, 1/(rs-1)) / 2` until all inequalities hold.
pub fn plan(request: &PlanRequest) -> Result<PlanResult> {
    request.validate()?;
    let bits = DEFAULT_PRECISION_BITS;
    let alpha_t = &request.alpha_target;
    let eta = &request.eta;
    let upper = alpha_t + eta;
    let a = alpha_t.to_f64();
    // (distance of alpha(r,s) from the window, r, s)
    let mut near_miss: Option<(f64, u32, u32)> = None;

    for s in 2..=request.max_s {
        let center = (s as f64)
            .powf(a / (1.0 - a))
            .clamp(2.0, request.max_r as f64);
        for r in outward(center, request.max_r) {
            let logs = Logs::new(r, s, bits)?;
            let alpha_rs = logs.alpha_rs()?;
            let above = alpha_rs.lower() > *alpha_t;
            let below = alpha_rs.upper() < upper;
            if !(above && below) {
                let v = alpha_rs.to_f64();
                let miss = if v <= a { a - v } else { v - upper.to_f64() };
                if near_miss.is_none_or(|(m, ..)| miss < m) {
                    near_miss = Some((miss, r, s));
                }
                continue;
            }
            if let Some(result) = choose_eps(request, r, s)? {
                return Ok(result);
            }
        }
    }
    let detail = match near_miss {
        Some((miss, r, s)) => {
            format!("; closest alpha(r,s) was at (r={r}, s={s}), {miss:.4} outside the window")
        }
        None => String::new(),
    };
    Err(Error::NoPlan(format!(
        "no (r, s) with s <= {} and r <= {} has alpha_target={} < alpha(r,s) < {}{detail}",
        request.max_s, request.max_r, alpha_t, upper
    )))
}

/// Candidate `r` values ordered by distance from `center`, ties to the
/// smaller `r`. Only a few neighbours on each side can matter because
/// `alpha(r, s)` is increasing in `r`; the window is at most `eta` wide.
fn outward(center: f64, max_r: u32) -> Vec<u32> {
    let base = center.round() as i64;
    let mut out = Vec::new();
    for step in 0..64i64 {
        for r in [base - step, base + step] {
            if r >= 2 && r <= i64::from(max_r) && !out.contains(&(r as u32)) {
                out.push(r as u32);
            }
        }
    }
    out.sort_by(|x, y| {
        let dx = (*x as f64 - center).abs();
        let dy = (*y as f64 - center).abs();
        dx.partial_cmp(&dy).unwrap().then(x.cmp(y))
    });
    out
}

fn choose_eps(request: &PlanRequest, r: u32, s: u32) -> Result<Option<PlanResult>> {
    let bits = DEFAULT_PRECISION_BITS;
    let limit = Rational::new(1, 2).min(Rational::new(1, i64::from(r * s) - 1));
    // largest dyadic strictly below the limit, halved once more
    let mut eps = Rational::one();
    while eps >= limit {
        eps = eps * Rational::new(1, 2);
    }
    eps = eps * Rational::new(1, 2);
    for _ in 0..MIN_EPS_LOG2 {
        let (m, alpha_rs, alpha, beta) = margins(
            request.k,
            r,
            s,
            &eps,
            &request.alpha_target,
            &request.eta,
            bits,
        )?;
        if m.iter().all(|m| m.holds) {
            let params = ConstructionParams::new(request.k, r, s, eps.clone())?;
            let certificate = certify(&params, &request.alpha_target, &request.eta)?;
            return Ok(Some(PlanResult {
                params,
                alpha_rs,
                achieved_alpha: alpha,
                achieved_beta: beta,
                certificate,
            }));
        }
        eps = eps * Rational::new(1, 2);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::closed_form_dimensions;
    use crate::geometry::Construction;

    const ALPHA_3_2: &str = "0.613147192765458413129753861532";

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn half_with_wide_slack() {
        let plan = plan(&PlanRequest::new(1, q("1/2"), q("1/5"))).unwrap();
        assert_eq!((plan.params.r, plan.params.s), (3, 2));
        assert!(plan.alpha_rs.widen(&q("1e-28")).contains(&q(ALPHA_3_2)));
        assert!(plan.certificate.holds());
        assert_eq!(plan.certificate.margins.len(), 5);
        let best = (Rational::one() - q("1/2")) - q("1/5");
        assert!(plan.achieved_beta.lower() > best);
    }

    #[test]
    fn plan_agrees_with_closed_forms() {
        let plan = plan(&PlanRequest::new(2, q("3/10"), q("1/20"))).unwrap();
        let c = Construction::new(plan.params.clone()).unwrap();
        let dims = closed_form_dimensions(&c).unwrap();
        assert!(dims.alpha.overlaps(&plan.achieved_alpha));
        assert!(dims.beta.overlaps(&plan.achieved_beta));
    }

    #[test]
    fn high_alpha_needs_large_r() {
        // alpha(r, s) <= 12/13 for r <= 4096, so the default limits cannot work
        assert!(plan(&PlanRequest::new(1, q("95/100"), q("1/50"))).is_err());
        let plan =
            plan(&PlanRequest::new(1, q("95/100"), q("1/50")).with_limits(8, 1 << 21)).unwrap();
        assert!(plan.params.r > 1000 * plan.params.s);
        assert!(plan.certificate.holds());
    }

    #[test]
    fn exhausted_limits_report_near_miss() {
        let err =
            plan(&PlanRequest::new(1, q("1/10"), q("1/50")).with_limits(64, 4096)).unwrap_err();
        match err {
            Error::NoPlan(msg) => assert!(msg.contains("closest"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let ok = plan(&PlanRequest::new(1, q("1/10"), q("1/50")).with_limits(512, 4096)).unwrap();
        assert!(ok.params.s > 64);
    }

    #[test]
    fn certify_rejects_bad_eps() {
        // alpha(3,2) = 0.613; with eps near its limit alpha(eps) drops below 0.6
        let params = ConstructionParams::new(1, 3, 2, q("19/100")).unwrap();
        assert!(matches!(
            certify(&params, &q("6/10"), &q("1/20")),
            Err(Error::Certification(_))
        ));
        assert!(ConstructionParams::new(1, 3, 2, q("1/5")).is_err());
        let good = ConstructionParams::new(1, 3, 2, q("1/1024")).unwrap();
        assert!(certify(&good, &q("6/10"), &q("1/20")).is_ok());
    }

    #[test]
    fn shrinking_eps_raises_both_dimensions() {
        let logs = Logs::new(5, 3, 128).unwrap();
        let mut prev: Option<(BoundedReal, BoundedReal)> = None;
        for j in 4..12 {
            let eps = Rational::new(1, 1i64 << j);
            let cur = (logs.alpha(&eps).unwrap(), logs.beta(1, &eps).unwrap());
            if let Some((pa, pb)) = &prev {
                assert!(pa.definitely_less(&cur.0));
                assert!(pb.definitely_less(&cur.1));
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(plan(&PlanRequest::new(0, q("1/2"), q("1/5"))).is_err());
        assert!(plan(&PlanRequest::new(1, q("1"), q("1/5"))).is_err());
        assert!(plan(&PlanRequest::new(1, q("1/2"), q("0"))).is_err());
    }
}
