//! Partially defined maps of the interval (-1, 1).
//!
//! A generator family induces a pseudogroup: words over the generators act
//! on the largest domain keeping every intermediate value inside (-1, 1).
//! Concretely, when a word is evaluated right-to-left, the input to each
//! letter must lie in (-1, 1) — and, for an inverse letter, also in the
//! image of (-1, 1) under that generator — while the final output is
//! unconstrained. Definedness is therefore monotone: shrinking a word's
//! domain from either side never turns an undefined point into a defined
//! one, so domains are open intervals and can be located by bisection.

mod generator;
mod interval;
mod word;

pub use generator::{
    Generator, GeneratorError, InvertError, DEFAULT_C1_SAMPLES, DEFAULT_INVERSION_TOL,
    ENDPOINT_CLAMP,
};
pub use interval::Interval;
pub use word::{Letter, Word, WordParseError};

use thiserror::Error;

/// Default accuracy for domain endpoints located by bisection.
pub const DEFAULT_DOMAIN_TOL: f64 = 1e-9;

/// Evaluation left the pseudogroup's domain. `letter` is the position in
/// the word (0 = leftmost, applied last) whose input constraint failed.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("word evaluation out of domain at letter {letter}")]
pub struct OutOfDomain {
    pub letter: usize,
}

/// A generator family together with its measured distance to the identity
/// and the nilpotency order it claims.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    generators: Vec<Generator>,
    epsilon: f64,
    c1_samples: usize,
    claimed_order: u32,
}

impl GeneratorSet {
    /// Builds the family and measures `epsilon`, the sup over generators of
    /// their grid C^1 distance to the identity.
    pub fn new(generators: Vec<Generator>, claimed_order: u32) -> Result<Self, GeneratorError> {
        Self::with_samples(generators, claimed_order, DEFAULT_C1_SAMPLES)
    }

    /// Same as [`GeneratorSet::new`] with an explicit measurement grid.
    pub fn with_samples(
        generators: Vec<Generator>,
        claimed_order: u32,
        c1_samples: usize,
    ) -> Result<Self, GeneratorError> {
        if generators.is_empty() {
            return Err(GeneratorError::EmptyFamily);
        }
        let epsilon = generators
            .iter()
            .map(|g| g.c1_distance(c1_samples))
            .fold(0.0f64, f64::max);
        Ok(GeneratorSet {
            generators,
            epsilon,
            c1_samples,
            claimed_order,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generator(&self, index: usize) -> &Generator {
        &self.generators[index]
    }

    /// Measured sup of the generators' C^1 distances to the identity (a
    /// grid estimate; see [`Generator::c1_distance`]).
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Grid size behind [`GeneratorSet::epsilon`].
    pub fn c1_samples(&self) -> usize {
        self.c1_samples
    }

    pub fn claimed_order(&self) -> u32 {
        self.claimed_order
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name().to_string()).collect()
    }

    /// Renders a word with this family's generator names.
    pub fn word_text(&self, w: &Word) -> String {
        w.display_with(&self.names())
    }

    /// Parses a word such as `"f1 f2^-1"` against this family's names.
    pub fn parse_word(&self, text: &str) -> Result<Word, WordParseError> {
        Word::parse(text, &self.names())
    }
}

/// Applies a word to `x`, enforcing the domain convention: the input to
/// every letter (including the initial `x`) must lie in (-1, 1), inverse
/// letters additionally require their input to lie in the generator's
/// range, and only the final output may leave the interval. The empty word
/// is the identity map of (-1, 1).
pub fn eval_word(gens: &GeneratorSet, w: &Word, x: f64, tol: f64) -> Result<f64, OutOfDomain> {
    let letters = w.letters();
    if letters.is_empty() {
        if !Interval::UNIT.contains(x) {
            return Err(OutOfDomain { letter: 0 });
        }
        return Ok(x);
    }
    let mut v = x;
    for pos in (0..letters.len()).rev() {
        let l = letters[pos];
        if !Interval::UNIT.contains(v) {
            return Err(OutOfDomain { letter: pos });
        }
        let g = gens.generator(l.index);
        if l.inverse {
            let range = g.range().map_err(|_| OutOfDomain { letter: pos })?;
            if !range.contains(v) {
                return Err(OutOfDomain { letter: pos });
            }
            v = g.invert(v, tol).map_err(|_| OutOfDomain { letter: pos })?;
        } else {
            v = g.eval(v).map_err(|_| OutOfDomain { letter: pos })?;
        }
    }
    Ok(v)
}

/// Derivative of the word map at `x` by the chain rule along the letters.
pub fn word_derivative(
    gens: &GeneratorSet,
    w: &Word,
    x: f64,
    tol: f64,
) -> Result<f64, OutOfDomain> {
    let letters = w.letters();
    if letters.is_empty() {
        if !Interval::UNIT.contains(x) {
            return Err(OutOfDomain { letter: 0 });
        }
        return Ok(1.0);
    }
    let mut v = x;
    let mut d = 1.0;
    for pos in (0..letters.len()).rev() {
        let l = letters[pos];
        if !Interval::UNIT.contains(v) {
            return Err(OutOfDomain { letter: pos });
        }
        let g = gens.generator(l.index);
        if l.inverse {
            let range = g.range().map_err(|_| OutOfDomain { letter: pos })?;
            if !range.contains(v) {
                return Err(OutOfDomain { letter: pos });
            }
            v = g.invert(v, tol).map_err(|_| OutOfDomain { letter: pos })?;
            let dfx = g.eval_df(v).map_err(|_| OutOfDomain { letter: pos })?;
            d /= dfx;
        } else {
            let dfx = g.eval_df(v).map_err(|_| OutOfDomain { letter: pos })?;
            d *= dfx;
            v = g.eval(v).map_err(|_| OutOfDomain { letter: pos })?;
        }
    }
    Ok(d)
}

/// Locates the open interval on which `w` is defined.
///
/// A seed point inside the domain is found by scanning a coarse grid; each
/// endpoint is then bisected between the seed and the nearest undefined
/// point. Endpoints are accurate to `tol`. Returns the empty interval when
/// no grid point is defined.
pub fn word_domain(gens: &GeneratorSet, w: &Word, tol: f64) -> Interval {
    if w.is_empty() {
        return Interval::UNIT;
    }
    let defined = |x: f64| eval_word(gens, w, x, DEFAULT_INVERSION_TOL).is_ok();

    // Scan outward from 0 so that a central seed is preferred.
    let mut seed = None;
    let steps = 64;
    let h = (1.0 - ENDPOINT_CLAMP) / steps as f64;
    'scan: for k in 0..=steps {
        for x in [k as f64 * h, -(k as f64) * h] {
            if defined(x) {
                seed = Some(x);
                break 'scan;
            }
            if k == 0 {
                break;
            }
        }
    }
    let Some(seed) = seed else {
        return Interval::EMPTY;
    };

    let bisect = |mut bad: f64, mut good: f64| -> f64 {
        while (good - bad).abs() > tol {
            let mid = 0.5 * (bad + good);
            if defined(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        0.5 * (bad + good)
    };
    let lo = bisect(-1.0, seed);
    let hi = bisect(1.0, seed);
    Interval::new(lo, hi)
}
