//! Two-phase CO2 emission panel analysis.
//!
//! Phase I fits pooled, random-effects and fixed-effects panel regressions,
//! walks the Breusch–Pagan → Wald → Hausman decision flow and keeps the
//! significant, non-collinear predictors. Phase II forecasts each entity
//! with SARIMAX on those predictors and groups entities by the shape of
//! their emission trajectories under dynamic time warping.

pub mod numerics;
pub mod panel;
pub mod estimators;
pub mod diagnostics;
pub mod selection;
pub mod sarimax;
pub mod clustering;
pub mod error;
pub mod pipeline;

pub use error::{Error, ErrorCategory};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineReport};

/// Guide chapters, compiled so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/panel-data.md")]
    mod panel_data {}
    #[doc = include_str!("../../../book/src/panel-models.md")]
    mod panel_models {}
    #[doc = include_str!("../../../book/src/specification-tests.md")]
    mod specification_tests {}
    #[doc = include_str!("../../../book/src/feature-selection.md")]
    mod feature_selection {}
    #[doc = include_str!("../../../book/src/forecasting.md")]
    mod forecasting {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
