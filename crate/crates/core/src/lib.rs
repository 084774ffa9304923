//! Random operator fields over finite probability spaces, random projection
//! valued measures, their functional calculus, and the bounded transform.
//!
//! Everything is finite: a sample space is a list of weighted atoms, a random
//! operator is one matrix per atom, and statements that hold "almost surely"
//! are checked on the positive-weight atoms only.

pub mod calculus;
pub mod field;
pub mod linalg;
pub mod measure;
pub mod prob;
pub mod transforms;

pub use calculus::{
    integrate_bounded, integrate_extended, reconstruct, spectral_decompose, CalculusError, CellSpec, ExtendedValue,
    MeasurableFunction, SpectralDecomposition,
};
pub use field::{adjoint_field, apply, compose, predicates, FieldError, OperatorField, RandomOperator};
pub use linalg::{ComplexMatrix, LinalgError, C64};
pub use measure::{pushforward, validate_rpovm, MeasurableSpace, MeasureError, Region, Rpovm};
pub use prob::{ProbError, RandomScalar, RandomVector, SampleSpace};
pub use transforms::{spectral_theorem_pipeline, tc_field, zc_field, PipelineConfig, PipelineReport, TransformError};
