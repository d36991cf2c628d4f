use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use super::params::{ConstructionParams, GenerationSpec};
use crate::error::{Error, Result};
use crate::kernel::{make_kernel, PhiKernel};
use crate::numerics::{pow_rat, BoundedReal, Rational};

/// Exact widths and bounded heights of generation `n`.
///
/// `d`, `b` and the per-generation branching data are absent for the root
/// generation `n = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct GenerationMetrics {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<GenerationSpec>,
    pub c: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Rational>,
    pub a: BoundedReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<BoundedReal>,
    #[serde(skip)]
    step: Option<(Rational, BoundedReal)>,
}

impl GenerationMetrics {
    fn root(bits: u32) -> Self {
        GenerationMetrics {
            n: 1,
            spec: None,
            c: Rational::one(),
            d: None,
            a: BoundedReal::from_int(1, bits),
            b: None,
            step: None,
        }
    }

    /// `(r, s)` of the children making up this generation.
    pub fn branching(&self) -> Option<(u32, u32)> {
        self.spec.as_ref().map(|s| (s.r, s.s))
    }

    fn steps(&self) -> &(Rational, BoundedReal) {
        self.step.as_ref().expect("root generation has no siblings")
    }

    /// Horizontal distance between left ends of consecutive siblings, `c + d`.
    pub fn period(&self) -> &Rational {
        &self.steps().0
    }

    /// Vertical distance between bottoms of consecutive rows, `a + b`.
    pub fn row_step(&self) -> &BoundedReal {
        &self.steps().1
    }
}

/// Test hook that corrupts the construction so validation can be shown to
/// catch it.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Replace `b_n` by `-b_n` for the given generation.
    NegateRowGap { generation: usize },
}

/// Integer form of the x-layout down to some depth: with `scale = L`,
/// generation `n` has width `width[n] / L` and sibling period
/// `period[n] / L`. Lets point location run without rational reduction.
#[derive(Debug)]
pub(crate) struct XLattice {
    pub depth: usize,
    pub scale: BigInt,
    pub width: Vec<BigInt>,
    pub period: Vec<BigInt>,
}

/// A validated parameter set together with its kernel and lazily filled
/// per-generation metrics. Safe to share across threads.
#[derive(Debug)]
pub struct Construction {
    params: ConstructionParams,
    kernel: PhiKernel,
    metrics: RwLock<Vec<Arc<GenerationMetrics>>>,
    lattice: RwLock<Option<Arc<XLattice>>>,
    fault: Option<Fault>,
}

impl Construction {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        params.validate()?;
        let kernel = make_kernel(params.k)?;
        let root = Arc::new(GenerationMetrics::root(params.precision_bits));
        Ok(Construction {
            params,
            kernel,
            metrics: RwLock::new(vec![root]),
            lattice: RwLock::new(None),
            fault: None,
        })
    }

    #[doc(hidden)]
    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self.metrics.get_mut().expect("metrics lock").truncate(1);
        self
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn kernel(&self) -> &PhiKernel {
        &self.kernel
    }

    pub fn k(&self) -> u32 {
        self.params.k
    }

    pub fn bits(&self) -> u32 {
        self.params.precision_bits
    }

    /// Branching data used to create generation `n >= 2`.
    pub fn spec_for(&self, n: usize) -> GenerationSpec {
        self.params.spec_for(n)
    }

    /// Metrics of generation `n >= 1`, computing and caching any missing
    /// generations.
    pub fn metrics(&self, n: usize) -> Result<Arc<GenerationMetrics>> {
        if n < 1 {
            return Err(Error::Parameter(
                "generation index must be at least 1".into(),
            ));
        }
        if let Some(m) = self.metrics.read().expect("metrics lock").get(n - 1) {
            return Ok(m.clone());
        }
        let mut table = self.metrics.write().expect("metrics lock");
        while table.len() < n {
            let prev = table.last().expect("root present").clone();
            let next = self.next_generation(&prev)?;
            table.push(Arc::new(next));
        }
        Ok(table[n - 1].clone())
    }

    /// Metrics for generations `1..=n`.
    pub fn metrics_table(&self, n: usize) -> Result<Vec<Arc<GenerationMetrics>>> {
        (1..=n).map(|i| self.metrics(i)).collect()
    }

    fn next_generation(&self, prev: &GenerationMetrics) -> Result<GenerationMetrics> {
        let n = prev.n + 1;
        let bits = self.bits();
        let spec = self.spec_for(n);
        let rs = Rational::from(i64::from(spec.rs()));
        let one = Rational::one();
        let c = &prev.c * (&one - &spec.eps) / &rs;
        let d = &spec.eps * &prev.c / (&rs - &one);
        let exponent = Rational::from(i64::from(self.params.k)) + &spec.eps;
        let a = pow_rat(&d, &exponent, bits)?;
        let s = i64::from(spec.s);
        let mut b = prev
            .a
            .sub(&a.mul_int(s))
            .div_rational(&Rational::from(s - 1))?;
        let faulty = self.fault == Some(Fault::NegateRowGap { generation: n });
        if faulty {
            b = b.neg();
        } else if !b.definitely_positive() {
            return Err(Error::Degenerate {
                generation: n,
                detail: format!("row gap b_{n} = {b} is not provably positive"),
            });
        }
        let step = Some((&c + &d, a.add(&b)));
        Ok(GenerationMetrics {
            n,
            spec: Some(spec),
            c,
            d: Some(d),
            a,
            b: Some(b),
            step,
        })
    }

    /// Integer x-layout valid to at least `depth`.
    pub(crate) fn lattice(&self, depth: usize) -> Result<Arc<XLattice>> {
        if let Some(l) = self.lattice.read().expect("lattice lock").as_ref() {
            if l.depth >= depth {
                return Ok(l.clone());
            }
        }
        let mut slot = self.lattice.write().expect("lattice lock");
        if let Some(l) = slot.as_ref() {
            if l.depth >= depth {
                return Ok(l.clone());
            }
        }
        // build a little ahead so small increases reuse the cache
        let (depth, table) = match self.metrics_table(depth.max(8)) {
            Ok(table) => (depth.max(8), table),
            Err(_) => (depth, self.metrics_table(depth)?),
        };
        let mut scale = BigInt::one();
        for m in &table {
            scale = scale.lcm(m.c.denom());
            if let Some(d) = &m.d {
                scale = scale.lcm(d.denom());
            }
        }
        let to_int = |q: &Rational| q.numer() * (&scale / q.denom());
        let mut width = Vec::with_capacity(depth + 1);
        let mut period = Vec::with_capacity(depth + 1);
        width.push(BigInt::default());
        period.push(BigInt::default());
        for m in &table {
            width.push(to_int(&m.c));
            period.push(
                m.d.as_ref()
                    .map(|d| to_int(&(&m.c + d)))
                    .unwrap_or_default(),
            );
        }
        let lattice = Arc::new(XLattice {
            depth,
            scale: scale.clone(),
            width,
            period,
        });
        *slot = Some(lattice.clone());
        Ok(lattice)
    }
}
