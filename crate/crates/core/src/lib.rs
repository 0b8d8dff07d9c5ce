//! Labelled Galton–Watson trees: excursion-forest decomposition, vertical edge profile
//! chains, exact generating functions and kernels, brute-force oracles, and the
//! Schaeffer bijection for pointed quadrangulations.

pub mod error;
pub mod excursion;
pub mod genfun;
pub mod kernel;
pub mod maps;
pub mod model;
pub mod num;
pub mod oracle;
pub mod sampler;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use excursion::{decompose, reconstruct, Excursion, ExcursionDecomposition, ExcursionForest, Sign};
pub use model::{builtin_model, Builtin, TreeModel};
pub use num::{Rational, Scalar};
pub use tree::{LabelledPlaneTree, VerticalEdgeProfile};

pub type RationalSeries = genfun::Series<Rational>;
pub type FloatSeries = genfun::Series<f64>;
