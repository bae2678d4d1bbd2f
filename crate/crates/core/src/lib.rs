//! Numerics for near-identity pseudogroups of increasing maps on (-1,1).
//!
//! A family of C^2 maps close to the identity generates a pseudogroup of
//! partially defined transformations of the interval (-1,1): compositions
//! are restricted to the largest domain keeping every intermediate value
//! inside the interval. This crate provides the pieces needed to study such
//! families numerically:
//!
//! - [`expr`]: expression parsing, evaluation, and symbolic differentiation
//!   for the generator formulas;
//! - [`pmap`]: generators, inverse maps, words with strict domain tracking,
//!   and C^1 distance to the identity;
//! - [`nilpotency`]: iterated-commutator enumeration and numerical
//!   verification that a family is nilpotent, abelian, or metabelian;
//! - [`rotation`]: translation numbers of degree-one circle maps and
//!   relative translation numbers of one map measured in units of another;
//! - [`classify`]: fixed-point analysis, linearizing coordinates,
//!   semi-conjugacies, periodic chains, and the final trichotomy
//!   classification of a verified family.
//!
//! ```
//! use pseudogroup::pmap::{Generator, GeneratorSet, Word};
//!
//! let gens = GeneratorSet::new(
//!     vec![
//!         Generator::parse("f1", "x + 0.002").unwrap(),
//!         Generator::parse("f2", "x + 0.001").unwrap(),
//!     ],
//!     1,
//! )
//! .unwrap();
//! let w = Word::commutator(&Word::generator(0), &Word::generator(1));
//! // Translations commute: the commutator acts as the identity map.
//! let r = pseudogroup::nilpotency::check_identity(&gens, &w, 1e-8, 256).unwrap();
//! assert!(r.passed);
//! assert!(gens.epsilon() < 0.01);
//! ```

pub mod classify;
pub mod expr;
pub mod interp;
pub mod nilpotency;
pub mod pmap;
pub mod rotation;

pub use expr::Expr;
pub use interp::SampledMonotoneMap;
pub use classify::{classify, ClassificationReport, ClassifyOptions};
pub use pmap::{Generator, GeneratorSet, Interval, Word};
