//! Estimation of the squared degree of polarization of coherent light under
//! fully developed speckle, from four intensity images, from the orthogonal
//! state contrast, or from two correlated intensity images.

pub mod error;
pub mod estimators;
pub mod imaging;
pub mod montecarlo;
pub mod polcore;
pub mod rng;
pub mod speckle;

pub use num_complex::Complex64 as Complex;

pub use error::{DopError, Result};
pub use estimators::{estimate_p2, EstimationResult, EstimatorKind};
pub use montecarlo::{run_campaign, CampaignReport, CampaignSpec, CellReport, NamedMatrix};
pub use polcore::{osci_correction, paper_matrices, CoherencyMatrix, InverseCoefficients};
pub use rng::SamplerConfig;
pub use speckle::{sample_jones, IntensityRecord, JonesEnsemble, JonesVector};
