//! Construction and analysis of C^k functions on `[-2, 2]` that are flat of
//! order `k` on a Cantor set `A` and have an uncountable family of level sets
//! of positive Hausdorff dimension.
//!
//! The function is assembled from generations of nested rectangles: each
//! generation-`n` rectangle holds `s` rows of `r` congruent children, and
//! the graph links consecutive children with rescaled copies of a single
//! polynomial kernel. This crate builds that geometry exactly, evaluates the
//! function with rigorous error bounds, produces covers of the sets `A`,
//! `D = f(A)` and the level sets `A_y`, and checks the closed-form dimension
//! formulas against cover counting.

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub use numerics::{BoundedReal, Rational, DEFAULT_PRECISION_BITS};
pub mod cantor;
pub mod evaluator;
pub mod geometry;
pub mod kernel;
pub mod planner;
pub mod report;
pub mod svg;
pub mod verify;

pub use cantor::{
    box_count, closed_form_dimensions, cover_a, cover_d, cover_level_set, estimate_dimension,
    CoverSet, CoverTarget, DimensionReport, DimensionTarget, Membership, RowAddress,
};
pub use evaluator::{evaluate, evaluate_grid, kth_diff, Classification, EvalResult, Evaluator};
pub use geometry::{
    gaps_of, locate, rect_of, validate, Construction, ConstructionParams, GapKind, GapSegment,
    GenerationMetrics, GenerationSpec, Location, Rect, RectAddress,
};
pub use kernel::{make_kernel, PhiKernel};
pub use planner::{certify, plan, Certificate, PlanRequest, PlanResult};
pub use report::{geometry_report, GeometryReport};
pub use svg::{link_figure, rectangles_figure, HeightScale};
pub use verify::{run_suite, Status, VerifyReport};
