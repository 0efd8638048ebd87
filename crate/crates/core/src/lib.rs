//! Direct product codes over set systems and their two-query agreement tests:
//! encoding and majority decoding, test graphs and their spectra,
//! coordinate-expansion certificates, adversarial tables, and distance
//! amplification from vertex expanders.

pub mod adversary;
pub mod amplify;
pub mod certify;
pub mod codec;
pub mod error;
pub mod exact;
pub mod io;
pub mod model;
pub mod spectral;
pub mod tester;
pub mod testgraph;

pub use error::{Error, Result};
pub use exact::{parse_fraction, Rational, Surd};
pub use model::{closest_codeword, dp_distance, dp_encode, Assignment, DPTable, Domain, LocalAssignment, Subset};
pub use testgraph::TestGraph;
