use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Rational, DEFAULT_PRECISION_BITS};

/// Branching data for one generation: `s` rows of `r` children, with a
/// fraction `eps` of the parent width left for gaps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub r: u32,
    pub s: u32,
    pub eps: Rational,
}

impl GenerationSpec {
    pub fn rs(&self) -> u32 {
        self.r * self.s
    }

    /// Exclusive upper bound on `eps`: `min(1/2, 1/(rs - 1))`.
    pub fn eps_limit(&self) -> Rational {
        let a = Rational::new(1, 2);
        let b = Rational::new(1, i64::from(self.rs()) - 1);
        a.min(b)
    }

    fn validate(&self, label: &str) -> Result<()> {
        if self.r < 2 || self.s < 2 {
            return Err(Error::Parameter(format!(
                "{label}: need r >= 2 and s >= 2, got r={} s={}",
                self.r, self.s
            )));
        }
        let limit = self.eps_limit();
        if !self.eps.is_positive() || self.eps >= limit {
            return Err(Error::Parameter(format!(
                "{label}: eps must satisfy 0 < eps < min(1/2, 1/(rs-1)) = {limit}, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Parameters of the construction: smoothness `k`, branching `(r, s)`, gap
/// fraction `eps`, and an optional per-generation schedule.
///
/// When `schedule` is present, entry `i` governs the children created in
/// generation `i + 2`; generations past its end reuse the last entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub k: u32,
    pub r: u32,
    pub s: u32,
    pub eps: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<GenerationSpec>>,
    pub precision_bits: u32,
}

impl ConstructionParams {
    pub fn new(k: u32, r: u32, s: u32, eps: Rational) -> Result<Self> {
        let params = ConstructionParams {
            k,
            r,
            s,
            eps,
            schedule: None,
            precision_bits: DEFAULT_PRECISION_BITS,
        };
        params.validate()?;
        Ok(params)
    }

    /// `k = 1, r = 4, s = 3, eps = 1/22`.
    pub fn example() -> Self {
        ConstructionParams::new(1, 4, 3, Rational::new(1, 22))
            .expect("example parameters are valid")
    }

    pub fn with_precision(mut self, bits: u32) -> Result<Self> {
        self.precision_bits = bits;
        self.validate()?;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: Vec<GenerationSpec>) -> Result<Self> {
        self.schedule = Some(schedule);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Parameter(
                "smoothness order k must be at least 1".into(),
            ));
        }
        if self.precision_bits < 16 {
            return Err(Error::Parameter(format!(
                "precision_bits must be at least 16, got {}",
                self.precision_bits
            )));
        }
        self.base_spec().validate("construction")?;
        if let Some(schedule) = &self.schedule {
            if schedule.is_empty() {
                return Err(Error::Parameter("schedule must not be empty".into()));
            }
            for (i, spec) in schedule.iter().enumerate() {
                spec.validate(&format!("schedule entry for generation {}", i + 2))?;
            }
        }
        Ok(())
    }

    pub fn is_scheduled(&self) -> bool {
        self.schedule.is_some()
    }

    fn base_spec(&self) -> GenerationSpec {
        GenerationSpec {
            r: self.r,
            s: self.s,
            eps: self.eps.clone(),
        }
    }

    /// Branching data used to create generation `n >= 2`.
    pub fn spec_for(&self, n: usize) -> GenerationSpec {
        debug_assert!(n >= 2);
        match &self.schedule {
            Some(schedule) => schedule[(n - 2).min(schedule.len() - 1)].clone(),
            None => self.base_spec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn eps_bound_is_strict() {
        assert!(ConstructionParams::new(1, 4, 3, q("1/11")).is_err());
        assert!(ConstructionParams::new(1, 4, 3, q("1/12")).is_ok());
        assert!(ConstructionParams::new(1, 2, 2, q("1/4")).is_ok());
        assert!(ConstructionParams::new(1, 2, 2, q("1/3")).is_err());
        assert!(ConstructionParams::new(1, 2, 2, q("0")).is_err());
    }

    #[test]
    fn error_cites_constraint() {
        let err = ConstructionParams::new(1, 4, 3, q("1/11"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("min(1/2, 1/(rs-1))"), "{err}");
    }

    #[test]
    fn structural_parameters() {
        assert!(ConstructionParams::new(0, 4, 3, q("1/22")).is_err());
        assert!(ConstructionParams::new(1, 1, 3, q("1/22")).is_err());
        assert!(ConstructionParams::new(1, 4, 1, q("1/22")).is_err());
        assert!(ConstructionParams::example().with_precision(8).is_err());
    }

    #[test]
    fn schedule_lookup_repeats_last_entry() {
        let spec = |s| GenerationSpec {
            r: 2,
            s,
            eps: q("1/100"),
        };
        let params = ConstructionParams::new(1, 2, 2, q("1/22"))
            .unwrap()
            .with_schedule(vec![spec(2), spec(3), spec(4)])
            .unwrap();
        assert_eq!(params.spec_for(2).s, 2);
        assert_eq!(params.spec_for(4).s, 4);
        assert_eq!(params.spec_for(9).s, 4);
        let bad = ConstructionParams::new(1, 2, 2, q("1/22"))
            .unwrap()
            .with_schedule(vec![GenerationSpec {
                r: 2,
                s: 8,
                eps: q("1/15"),
            }]);
        assert!(bad.is_err());
    }
}
