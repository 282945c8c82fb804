//! Compile tabular MDPs into truncated K-spin pseudo-Boolean Hamiltonians,
//! reduce them to QUBOs, and solve them exactly or by simulated annealing.
//!
//! The guide in `book/` walks through each module with runnable examples.

pub mod anneal;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod mdp;
pub mod oracles;
pub mod poly;
pub mod quadratize;
pub mod resources;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mdp.md")]
    mod mdp {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/quadratization.md")]
    mod quadratization {}
    #[doc = include_str!("../../../book/src/annealing.md")]
    mod annealing {}
    #[doc = include_str!("../../../book/src/resources.md")]
    mod resources {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
