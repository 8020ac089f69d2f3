//! Hitting probabilities of compound Poisson processes that are coupled
//! through a random bipartite agent-object network.
//!
//! Objects carry independent compound Poisson processes `V_j`; agents observe
//! weighted sums `R^i = sum_j A^i_j V_j` where the weight matrix `A` is drawn
//! from a random bipartite network. The crate evaluates the resulting
//! hitting probabilities exactly (by conditioning on the network), bounds
//! them with Lundberg-type inequalities, approximates the network functional
//! by Poisson surrogates, and validates everything by simulation.

pub mod error;
pub mod hitting;
pub mod lundberg;
pub mod model;
pub mod montecarlo;
pub mod network;
pub mod pk;
pub mod poisson_approx;
pub mod series;
pub mod two_by_two;

pub use error::{Error, Result};
pub use model::{JumpLaw, ObjectParams};
pub use network::{AdjacencyRealization, AgentSet, NetworkSpec, WeightScheme};
