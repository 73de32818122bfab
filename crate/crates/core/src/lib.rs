pub mod array;
pub mod assignment;
pub mod certificate;
pub mod decomp;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pairing;
pub mod pipeline;
pub mod scenario;
pub mod sdp;
pub mod toeplitz;

pub use array::{ArrayGeometry, ObservationModel, SeparationMetric, Source, SourceSet};
pub use certificate::CertificateReport;
pub use decomp::VandermondeFactorization;
pub use error::{Error, Result};
pub use linalg::{ComplexMat, ComplexVec};
pub use pairing::PairedEstimate;
pub use pipeline::{Fit, Method, PipelineEstimate, PipelineOptions};
pub use scenario::{Scenario, SeparatedDraw, Snapshot, SourceSpec};
pub use sdp::{SdpSolution, SolverSettings, VectorizedSolution};
pub use toeplitz::{HermToeplitz, TwoLevelToeplitz};

