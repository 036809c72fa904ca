//! Discovery of closed-form partial and higher-order differential equations
//! from noisy gridded field data.
//!
//! The pipeline searches over equations of the form
//! `sum_p beta_p E_p[u](x) - g(x, u(x)) = 0`, where each `E_p` is an
//! *extended derivative* `(alpha, a, h): u -> a(x) * d^alpha[h(x, u(x))]`
//! drawn from a user-chosen dictionary, and `g` is an arbitrary closed-form
//! expression of the independent variables and field components. Candidate
//! equations are scored with a variational loss that never estimates a
//! derivative of the data: integrals against compactly supported testing
//! functions move all derivatives onto the (analytically differentiable)
//! testing functions.
//!
//! Module map:
//! - [`expr`]: closed-form expression trees, evaluation, canonicalization,
//!   and the functional-form / augmented-form success metric.
//! - [`basis`]: orthonormal tensor-product B-spline testing functions with
//!   exact mixed derivatives.
//! - [`data`]: synthetic ground-truth solvers, noise injection, dataset
//!   serialization.
//! - [`smooth`]: Gaussian-process field reconstruction and finite-difference
//!   derivative estimation for the ablated baseline.
//! - [`weakform`]: extended derivatives, the weak-form system `Z`/`w`, and
//!   the variational and ablated losses.
//! - [`collie`]: constrained least squares on the unit L1 sphere via LARS
//!   path extension, with an exact simplex-decomposition oracle.
//! - [`symreg`]: genetic-programming search over closed-form expressions.
//! - [`pipeline`]: the end-to-end discovery loop, evaluation metrics, and
//!   the experiment harness.

pub mod basis;
pub mod collie;
pub mod data;
pub mod error;
pub mod expr;
pub mod pipeline;
pub mod smooth;
pub mod symreg;
pub mod weakform;

pub use data::{Dataset, FieldSample, SamplingGrid};
pub use error::CoreError;
pub use expr::Expression;

