//! Empirical Rademacher and sub-gaussian complexities of vector-valued
//! function classes.
//!
//! The crate evaluates both sides of the vector-contraction inequality
//!
//! ```text
//! E sup_f Σ_i ε_i h_i(f(x_i))  ≤  C·L · E sup_f Σ_{i,k} X_ik f_k(x_i)
//! ```
//!
//! on concrete classes, either exactly (enumerating every sign pattern) or by
//! seeded Monte Carlo, and ships the closed-form generalization bounds that
//! follow from it for multi-class learning, K-means clustering,
//! learning-to-learn, Frobenius-ball linear classes and operator-valued
//! kernels. The `counterexample` module reproduces, in closed form, the
//! orthonormal construction showing that the norm form
//! `E sup Σ ε_i h(f(x_i)) ≤ K·L·E sup ‖Σ ε_i f(x_i)‖` admits no universal `K`.
//!
//! Start with the runnable programs in `examples/`; each exercises one
//! capability end to end.

pub mod bounds;
pub mod classes;
pub mod cli;
pub mod contraction;
pub mod counterexample;
pub mod error;
pub mod estimator;
pub mod io;
pub mod lipschitz;
pub(crate) mod numeric;
pub mod rng;
pub mod subgaussian;
pub mod suite;

pub use classes::{ClassKind, Exactness, FunctionClass, MatrixNorm, MetaSample, Sample, SupValue, Witness};
pub use contraction::{Verdict, VerificationMode, VerificationReport};
pub use error::{Error, Result};
pub use estimator::{ComplexityEstimate, EstimateMethod, ExpectationEngine, Method};
pub use lipschitz::{LipschitzLoss, LossKind};
pub use subgaussian::{ConstantMode, DistKind, KhintchineConstant, SubgaussianDist};
