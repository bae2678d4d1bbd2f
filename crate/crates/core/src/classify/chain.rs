//! Discrete orbit chains for families whose relative translation numbers
//! are all rational.
//!
//! When every generator translates by a rational multiple of a common
//! ruler, the family admits a bi-infinite chain of points
//! `... < y_{-1} < y_0 < y_1 < ...` on which each generator acts as an
//! integer shift: `f_i(y_k) = y_{k + a_i}`. This module builds a finite
//! stretch of that chain and reduces the family modulo the chain's
//! stabilizer.

use super::fixed_points::{fixed_points, FixedPointError};
use super::{choose_ruler, RulerChoice};
use crate::pmap::{eval_word, GeneratorSet, Interval, Word, DEFAULT_INVERSION_TOL};
use crate::rotation::{relative_translation_number, TauError, TauOptions};
use serde::Serialize;
use thiserror::Error;

/// Hard cap on chain points per side.
const MAX_SIDE: usize = 20_000;
/// A chain step below this counts as a stall.
const STALL_TOL: f64 = 1e-11;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("generator {index}'s translation number {value} does not identify as a confident rational; no periodic chain exists at this resolution")]
    RationalityMismatch { index: usize, value: f64 },
    #[error("the translation numbers need a common denominator of {q}, above the cap {q_max}")]
    DenominatorTooLarge { q: u64, q_max: u64 },
    #[error("no fixed point of the return word was found near {x0} in {interval}")]
    NoBasePoint { x0: f64, interval: Interval },
    #[error("chain relation broken: generator {generator} maps the point at offset {offset} to {got}, expected {expected}")]
    ChainInconsistent {
        generator: usize,
        offset: i64,
        expected: f64,
        got: f64,
    },
    #[error("internal: step-word solve returned gcd {gcd}, expected 1")]
    StepSolve { gcd: i64 },
    #[error("the step word moved {at} to {image}, not rightward as its translation number requires")]
    StepNotRightward { at: f64, image: f64 },
    #[error("no generator translates the chain; nothing to build")]
    NoPivot,
    #[error(transparent)]
    Tau(#[from] TauError),
    #[error(transparent)]
    FixedPoints(#[from] FixedPointError),
}

/// A finite stretch of the orbit chain, with the integer shift constants
/// realized by each generator on it.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicChain {
    /// Chain points, ascending.
    pub points: Vec<f64>,
    /// Index of the base point `y_0` in `points`.
    pub base_index: usize,
    /// Integer shifts: generator `i` maps `y_k` to `y_{k + constants[i]}`.
    pub constants: Vec<i64>,
    /// Common denominator of the relative translation numbers.
    pub q: u64,
    /// Word advancing the chain by one index.
    #[serde(skip_serializing)]
    pub step: Word,
    /// Ruler the translation numbers were measured against.
    #[serde(skip_serializing)]
    pub ruler: Word,
    pub step_text: String,
    pub ruler_text: String,
    /// `max |f_i(y_k) - y_{k + a_i}|` over all verified pairs.
    pub residual: f64,
    /// Whether the chain reached down to `-1 + epsilon`.
    pub reached_lower: bool,
    /// Whether the chain reached up to `1 - epsilon`.
    pub reached_upper: bool,
}

impl PeriodicChain {
    /// Chain extent below the base point.
    pub fn n_lower(&self) -> usize {
        self.base_index
    }

    /// Chain extent above the base point.
    pub fn n_upper(&self) -> usize {
        self.points.len() - 1 - self.base_index
    }

    /// Symmetric extent: the largest `N` with both `y_{-N}` and `y_N`.
    pub fn n_half(&self) -> usize {
        self.n_lower().min(self.n_upper())
    }

    pub fn y0(&self) -> f64 {
        self.points[self.base_index]
    }

    /// The chain point at signed offset `k` from the base, if present.
    pub fn point(&self, k: i64) -> Option<f64> {
        let idx = self.base_index as i64 + k;
        usize::try_from(idx).ok().and_then(|i| self.points.get(i).copied())
    }

    /// Signed offset of the chain point nearest to `x`.
    fn locate(&self, x: f64) -> (i64, f64) {
        let pos = self.points.partition_point(|&p| p < x);
        let mut best = (0usize, f64::INFINITY);
        for idx in pos.saturating_sub(1)..=pos.min(self.points.len() - 1) {
            let d = (self.points[idx] - x).abs();
            if d < best.1 {
                best = (idx, d);
            }
        }
        (best.0 as i64 - self.base_index as i64, best.1)
    }
}

/// `s * a + t * b = g >= 0`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
        (g, t, s - a.div_euclid(b) * t)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    let (g, _, _) = ext_gcd(a as i64, b as i64);
    a / g as u64 * b
}

/// Builds the orbit chain through a base point near `x0`.
///
/// The relative translation number of every generator against the ruler
/// chosen at `x0` must identify as a confident rational `p_i/q_i` with
/// common denominator `q <= q_max`. The base point is a fixed point of a
/// zero-translation return word (preferring `x0` itself when possible),
/// the chain advances by a word solving for translation `1/q`, and each
/// generator is verified to shift the chain by its integer constant
/// within `tol`. The chain extends until it enters the `epsilon`-collars
/// of the endpoints; `reached_lower`/`reached_upper` record whether that
/// happened before a stall or the size cap.
pub fn find_periodic_chain(
    gens: &GeneratorSet,
    x0: f64,
    tol: f64,
    tau: TauOptions,
    grid: usize,
) -> Result<PeriodicChain, ChainError> {
    let ruler = choose_ruler(gens, x0, tau.inversion_tol).ok_or(ChainError::NoPivot)?;
    build_chain(gens, x0, tol, tau, grid, &ruler)
}

pub(super) fn build_chain(
    gens: &GeneratorSet,
    x0: f64,
    tol: f64,
    tau: TauOptions,
    grid: usize,
    ruler: &RulerChoice,
) -> Result<PeriodicChain, ChainError> {
    let n = gens.len();

    // Rational translation data a_i / q for every generator.
    let mut fractions = Vec::with_capacity(n);
    for i in 0..n {
        let est =
            relative_translation_number(gens, &Word::generator(i), &ruler.word, x0, tau)?;
        match est.rational {
            Some(r) if !r.low_confidence => fractions.push((r.p, r.q)),
            _ => {
                return Err(ChainError::RationalityMismatch {
                    index: i,
                    value: est.value,
                })
            }
        }
    }
    let q = fractions.iter().fold(1u64, |acc, &(_, qi)| lcm(acc, qi));
    if q > tau.q_max {
        return Err(ChainError::DenominatorTooLarge { q, q_max: tau.q_max });
    }
    let constants: Vec<i64> =
        fractions.iter().map(|&(p, qi)| p * (q / qi) as i64).collect();

    // Base point: a fixed point of a zero-translation return word near x0.
    let pilot = constants.iter().position(|&a| a != 0);
    let y0 = match pilot {
        None => x0,
        Some(i) => {
            let h = Word::generator(i)
                .pow(q as i64)
                .concat(&ruler.word.pow(-constants[i]));
            if h.is_identity() {
                x0
            } else {
                let window = Interval::new(x0 - 10.0 * tol, ruler.image + 10.0 * tol);
                let set = fixed_points(gens, &h, window, tol, grid.max(256))?;
                set.nearest_candidate(x0)
                    .ok_or(ChainError::NoBasePoint { x0, interval: window })?
            }
        }
    };

    // Step word with translation number exactly 1/q, from the Bezout
    // identity over [q, a_1, ..., a_n]. Their gcd is always 1: a prime
    // power dividing q in full divides some q_i in full, and would have
    // to divide the corresponding (reduced) p_i as well.
    let mut g = q as i64;
    let mut coeffs = vec![0i64; n + 1];
    coeffs[0] = 1;
    for (i, &a) in constants.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let (g2, s, t) = ext_gcd(g, a);
        for c in coeffs.iter_mut() {
            *c *= s;
        }
        coeffs[i + 1] = t;
        g = g2;
    }
    if g != 1 {
        return Err(ChainError::StepSolve { gcd: g });
    }
    // Realize the step by interleaving the letters so every prefix stays
    // within one letter's displacement of the start. Grouped powers can
    // exit the common domain near the collars even though the chain itself
    // continues past them, and on a chain orbit the letter order does not
    // change the realized map (the residual check below still guards it).
    let mut raw: Vec<(Word, i64)> = Vec::with_capacity(n + 1);
    raw.push((ruler.word.clone(), coeffs[0]));
    for (i, &c) in coeffs.iter().skip(1).enumerate() {
        raw.push((Word::generator(i), c));
    }
    let mut pool: Vec<(Word, f64, u64)> = raw
        .into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|(w, c)| {
            let letter = if c < 0 { w.inverse() } else { w };
            let delta = eval_word(gens, &letter, y0, tau.inversion_tol)
                .map(|v| v - y0)
                .unwrap_or(0.0);
            (letter, delta, c.unsigned_abs())
        })
        .collect();
    let mut step = Word::generator(0).pow(0);
    let mut drift = 0.0;
    while let Some(j) = (0..pool.len()).filter(|&j| pool[j].2 > 0).min_by(|&a, &b| {
        let da = (drift + pool[a].1).abs();
        let db = (drift + pool[b].1).abs();
        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
    }) {
        step = pool[j].0.concat(&step);
        drift += pool[j].1;
        pool[j].2 -= 1;
    }

    // Extend the chain to both endpoint collars.
    let eps = gens.epsilon();
    let hi_target = 1.0 - eps - tol;
    let lo_target = -1.0 + eps + tol;
    let inv_tol = tau.inversion_tol;

    let mut upper = Vec::new();
    let mut reached_upper = false;
    let mut y = y0;
    while upper.len() < MAX_SIDE {
        if y >= hi_target {
            reached_upper = true;
            break;
        }
        match eval_word(gens, &step, y, inv_tol) {
            Ok(z) if z < 1.0 && z > y + STALL_TOL => {
                upper.push(z);
                y = z;
            }
            _ => break,
        }
    }
    let step_inv = step.inverse();
    let mut lower = Vec::new();
    let mut reached_lower = false;
    let mut y = y0;
    while lower.len() < MAX_SIDE {
        if y <= lo_target {
            reached_lower = true;
            break;
        }
        match eval_word(gens, &step_inv, y, inv_tol) {
            Ok(z) if z > -1.0 && z < y - STALL_TOL => {
                lower.push(z);
                y = z;
            }
            _ => break,
        }
    }

    let base_index = lower.len();
    let mut points: Vec<f64> = lower.into_iter().rev().collect();
    points.push(y0);
    points.extend(upper);

    if points.len() < 2 {
        return Err(ChainError::StepNotRightward {
            at: y0,
            image: eval_word(gens, &step, y0, inv_tol).unwrap_or(f64::NAN),
        });
    }

    // Verify the integer shifts on every available pair.
    let mut residual = 0.0f64;
    for (i, &a) in constants.iter().enumerate() {
        let w = Word::generator(i);
        for k in 0..points.len() {
            let Some(target) = k.checked_add_signed(a as isize).filter(|&t| t < points.len())
            else {
                continue;
            };
            let Ok(z) = eval_word(gens, &w, points[k], inv_tol) else {
                continue;
            };
            let dev = (z - points[target]).abs();
            if dev > tol.max(1e-12) {
                return Err(ChainError::ChainInconsistent {
                    generator: i,
                    offset: k as i64 - base_index as i64,
                    expected: points[target],
                    got: z,
                });
            }
            residual = residual.max(dev);
        }
    }

    Ok(PeriodicChain {
        points,
        base_index,
        constants,
        q,
        step_text: gens.word_text(&step),
        ruler_text: gens.word_text(&ruler.word),
        step,
        ruler: ruler.word.clone(),
        residual,
        reached_lower,
        reached_upper,
    })
}

/// One generator rewritten to fix the chain pointwise.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedGenerator {
    /// Index of the generator this word replaces.
    pub index: usize,
    #[serde(skip_serializing)]
    pub word: Word,
    pub text: String,
}

/// The family rewritten modulo the chain's translation: all but one
/// generator are replaced by chain-fixing words, and the order-1
/// commutators come along unchanged.
#[derive(Clone, Debug, Serialize)]
pub struct StabilizerReduction {
    pub reduced: Vec<ReducedGenerator>,
    #[serde(skip_serializing)]
    pub commutators: Vec<Word>,
    pub commutator_texts: Vec<String>,
    /// Generator used to pull orbits back to the base cell.
    pub pivot: usize,
    /// Whether the pivot had to be inverted to shift the chain upward.
    pub pivot_inverted: bool,
    /// Largest deviation of a reduced word from fixing `y_0` and `y_1`.
    pub max_deviation: f64,
}

impl StabilizerReduction {
    /// All words of the reduced family.
    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.reduced.iter().map(|r| &r.word).chain(self.commutators.iter())
    }
}

/// Rewrites each non-pivot generator into a word that fixes the chain:
/// repeatedly apply the generator and pull the image back to the base
/// cell with pivot powers. The pivot is the last generator with a
/// nonzero shift, inverted if needed so it shifts the chain upward.
pub fn stabilizer_reduction(
    gens: &GeneratorSet,
    chain: &PeriodicChain,
    tol: f64,
) -> Result<StabilizerReduction, ChainError> {
    let n = gens.len();
    let pivot = chain
        .constants
        .iter()
        .rposition(|&a| a != 0)
        .ok_or(ChainError::NoPivot)?;
    let pivot_inverted = chain.constants[pivot] < 0;
    let pivot_word = if pivot_inverted {
        Word::generator_inverse(pivot)
    } else {
        Word::generator(pivot)
    };
    let a_piv = chain.constants[pivot].unsigned_abs() as i64;
    let y0 = chain.y0();
    let y1 = chain
        .point(1)
        .ok_or(ChainError::NoBasePoint { x0: y0, interval: Interval::UNIT })?;

    let inv_tol = DEFAULT_INVERSION_TOL;
    let mut reduced = Vec::new();
    let mut max_deviation = 0.0f64;
    for i in (0..n).filter(|&i| i != pivot) {
        let mut acc = Word::generator(i).pow(0); // empty word
        for _ in 0..a_piv {
            let applied = Word::generator(i).concat(&acc);
            let z = eval_word(gens, &applied, y0, inv_tol).map_err(|_| {
                ChainError::ChainInconsistent {
                    generator: i,
                    offset: 0,
                    expected: y0,
                    got: f64::NAN,
                }
            })?;
            let (k, dist) = chain.locate(z);
            let gap = local_gap(&chain.points, z);
            if dist > 0.25 * gap {
                return Err(ChainError::ChainInconsistent {
                    generator: i,
                    offset: k,
                    expected: chain.point(k).unwrap_or(f64::NAN),
                    got: z,
                });
            }
            acc = pivot_word.pow(-k.div_euclid(a_piv)).concat(&applied);
        }
        for &(target, offset) in &[(y0, 0i64), (y1, 1i64)] {
            let v = eval_word(gens, &acc, target, inv_tol).unwrap_or(f64::NAN);
            let dev = (v - target).abs();
            if !(dev <= tol.max(1e-12)) {
                return Err(ChainError::ChainInconsistent {
                    generator: i,
                    offset,
                    expected: target,
                    got: v,
                });
            }
            max_deviation = max_deviation.max(dev);
        }
        reduced.push(ReducedGenerator {
            index: i,
            text: gens.word_text(&acc),
            word: acc,
        });
    }

    let mut commutators = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            commutators.push(Word::commutator(&Word::generator(j), &Word::generator(k)));
        }
    }
    let commutator_texts = commutators.iter().map(|w| gens.word_text(w)).collect();

    Ok(StabilizerReduction {
        reduced,
        commutators,
        commutator_texts,
        pivot,
        pivot_inverted,
        max_deviation,
    })
}

/// Smallest gap between consecutive chain points adjacent to `z`.
fn local_gap(points: &[f64], z: f64) -> f64 {
    let pos = points.partition_point(|&p| p < z).min(points.len() - 1);
    let lo = pos.saturating_sub(1);
    let hi = (pos + 1).min(points.len() - 1);
    let mut gap = f64::INFINITY;
    for w in points[lo..=hi].windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    if gap.is_finite() {
        gap
    } else {
        f64::MAX
    }
}
