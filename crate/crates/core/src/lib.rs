//! Skew-symmetric matrices on trees with prescribed spectra for `A` and a
//! vertex-deleted principal submatrix `A(v)`.
//!
//! Vertices are 0-based inside the library; the file formats in [`io`] use
//! 1-based labels.

pub mod construct;
pub mod continuation;
pub mod eig;
pub mod error;
pub mod fuzz;
pub mod graph;
pub mod io;
pub mod jacobian;
pub mod matrix;
pub mod poly;
pub mod spectrum;

pub use construct::{construct, verify_construction, ConstructionReport, Tolerances, VerificationSummary};
pub use continuation::{extend, newton_correct, ExtensionResult, HomotopyConfig};
pub use eig::{check_interlacing, skew_eigenvalues, verify_duarte, SkewSpectrum};
pub use error::{Error, Result};
pub use graph::{find_spanning_neb_tree, is_neb, matching_number, Graph, NebCertificate, Tree};
pub use jacobian::{is_nonsingular, jacobian_f, trace_map, EdgeIndexing};
pub use matrix::SkewMatrix;
pub use spectrum::{plan_branches, SpectrumSpec};
