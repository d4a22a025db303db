//! Worst-case output-size bounds for natural join queries under functional
//! dependencies.
//!
//! The crate brackets the worst-case exponent `α(Q)` of `|Q(D)| ≤ c·|D|^α`
//! from above with LP relaxations ([`bounds`]) and from below with explicit
//! database constructions ([`synth`]), evaluates joins with a component-wise
//! algorithm ([`eval`]) and measures what the constructions actually achieve.

pub mod bounds;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod fd;
pub mod io;
pub mod limits;
pub mod measure;
pub mod relational;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use ratlp::Rational;
pub use relational::{
    attr_set, check_fd, power_database, AttrSet, Attribute, Database, FunctionalDependency, Instance, Query, Row,
    Schema, Table, Value,
};
