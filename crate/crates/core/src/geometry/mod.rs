//! Nested-rectangle geometry: parameters, per-generation metrics, rectangle
//! and gap layout, point location and structural validation.

mod construction;
mod layout;
mod params;
mod validate;

pub use construction::{Construction, Fault, GenerationMetrics};
pub use layout::{
    children_of, gaps_of, locate, rect_of, Corner, GapKind, GapSegment, Location, Rect, RectAddress,
};
pub(crate) use layout::{descend, gap_at, y0_of_path};
pub use params::{ConstructionParams, GenerationSpec};
pub use validate::{validate, Check, ValidationReport};
