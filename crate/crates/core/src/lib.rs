//! Neural-network solver for the Monge-Ampere equation with the transport
//! boundary condition, as it arises in parallel-to-far-field reflector
//! design.
//!
//! A small perceptron `u(x)` is trained so that `det D^2u = f / g(grad u)`
//! holds on interior collocation points, `grad u` sends the source boundary
//! onto the target boundary, and the Hessian trace stays non-negative.

pub mod backprop;
pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod jet;
pub mod loss;
pub mod network;
pub mod optimize;
pub mod problems;
pub mod sampling;

pub use error::{Error, Result};
pub use jet::{Activation, Jet2};
pub use loss::{LossBreakdown, LossEvaluator, LossWeights};
pub use network::NetworkParams;
pub use problems::{make_problem, ProblemName, ProblemSpec};
pub use sampling::{DomainSpec, Point, SamplePlan};
