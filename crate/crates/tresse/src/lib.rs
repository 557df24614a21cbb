//! Point differential invariants of second-order scalar ODEs y'' = f(x, y, y').
//!
//! The crate is organized around an exact symbolic kernel ([`symcore`]) on top of
//! which sit jet-space calculus ([`jetspace`]), the tower of relative and absolute
//! invariants with their derivations ([`invariants`]), the cubic-in-y' stratum and
//! linearization theory ([`projective`]), invariants of curves in a fiber
//! ([`fiber`]), and numeric classification / equivalence ([`classify`]). The
//! [`cli`] module exposes every pipeline as a thin command adapter.

pub mod symcore;

pub mod jetspace;

pub mod invariants;

pub mod projective;

pub mod fiber;

pub mod classify;

pub mod cli;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
