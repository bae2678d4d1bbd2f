//! Fixed-point location for word maps.
//!
//! Fixed points are found by scanning a grid for sign changes and
//! near-zeros of the displacement `w(x) - x`, then refining by bisection.
//! Runs of consecutive near-zero samples become *plateaus* — intervals on
//! which the word is, at the working tolerance, the identity. Tangential
//! zeros (no sign change) also surface as plateaus or single grid points;
//! that is the honest resolution-limited description.

use crate::pmap::{
    eval_word, word_domain, GeneratorSet, Interval, Word, DEFAULT_INVERSION_TOL,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FixedPointError {
    #[error("word `{word}` has no domain inside {interval}")]
    EmptyDomain { word: String, interval: Interval },
}

/// What a [`FixedPointSet`] describes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FixedPointSource {
    /// Fixed points of a single word map.
    Word(String),
    /// Intersection over several maps.
    Common,
}

/// Isolated fixed points plus intervals of fixed points, all located to a
/// displacement tolerance `tol`.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointSet {
    /// Isolated fixed points, ascending.
    pub points: Vec<f64>,
    /// Intervals on which the displacement stays within `tol`, ascending.
    pub plateaus: Vec<Interval>,
    pub tol: f64,
    pub source: FixedPointSource,
}

impl FixedPointSet {
    pub fn empty(tol: f64, source: FixedPointSource) -> FixedPointSet {
        FixedPointSet { points: Vec::new(), plateaus: Vec::new(), tol, source }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.plateaus.is_empty()
    }

    /// Whether `x` is a fixed point up to the set's matching margin
    /// (twice the tolerance around points, tolerance around plateaus).
    pub fn contains(&self, x: f64) -> bool {
        self.points.iter().any(|p| (x - p).abs() <= 2.0 * self.tol)
            || self
                .plateaus
                .iter()
                .any(|pl| x >= pl.lo - self.tol && x <= pl.hi + self.tol)
    }

    /// The fixed point nearest to `target`: `target` itself when a
    /// plateau contains it, otherwise the closest point or plateau edge.
    pub fn nearest_candidate(&self, target: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut consider = |c: f64| {
            if best.map_or(true, |b| (c - target).abs() < (b - target).abs()) {
                best = Some(c);
            }
        };
        for &p in &self.points {
            consider(p);
        }
        for pl in &self.plateaus {
            consider(target.clamp(pl.lo, pl.hi));
        }
        best
    }

    fn canonicalize(&mut self) {
        self.plateaus.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        // Absorb points lying inside (or hugging) a plateau.
        let plateaus = &self.plateaus;
        let tol = self.tol;
        self.points
            .retain(|&p| !plateaus.iter().any(|pl| p >= pl.lo - tol && p <= pl.hi + tol));
        self.points.sort_by(f64::total_cmp);
        self.points.dedup_by(|a, b| (*a - *b).abs() <= tol);
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Sample {
    Neg,
    Zero,
    Pos,
    Invalid,
}

/// Locates the fixed points of `w` inside `interval` (clipped to the
/// word's domain) by a `grid`-point scan refined with bisection. `tol`
/// bounds both the accepted displacement and the refinement accuracy.
pub fn fixed_points(
    gens: &GeneratorSet,
    w: &Word,
    interval: Interval,
    tol: f64,
    grid: usize,
) -> Result<FixedPointSet, FixedPointError> {
    let domain = word_domain(gens, w, 1e-9).intersect(&interval);
    if domain.is_empty() {
        return Err(FixedPointError::EmptyDomain {
            word: gens.word_text(w),
            interval,
        });
    }
    let displacement = |x: f64| -> Option<f64> {
        eval_word(gens, w, x, DEFAULT_INVERSION_TOL).ok().map(|y| y - x)
    };
    let classify = |x: f64| match displacement(x) {
        None => Sample::Invalid,
        Some(h) if h.abs() <= tol => Sample::Zero,
        Some(h) if h < 0.0 => Sample::Neg,
        Some(_) => Sample::Pos,
    };

    let grid = grid.max(8);
    let step = domain.length() / grid as f64;
    let xs: Vec<f64> = (0..grid).map(|j| domain.lo + (j as f64 + 0.5) * step).collect();
    let states: Vec<Sample> = xs.iter().map(|&x| classify(x)).collect();

    // Bisects the sign change of the displacement inside [a, b].
    let refine_root = |mut a: f64, mut b: f64, ha: f64| -> f64 {
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if (b - a).abs() <= f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
            match displacement(mid) {
                Some(h) if (h < 0.0) == (ha < 0.0) => a = mid,
                Some(_) => b = mid,
                None => break,
            }
        }
        0.5 * (a + b)
    };
    // Bisects the edge of the |displacement| <= tol region between an
    // outside point `a` and an inside point `b`.
    let refine_edge = |mut a: f64, mut b: f64| -> f64 {
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if (b - a).abs() <= f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
            match displacement(mid) {
                Some(h) if h.abs() <= tol => b = mid,
                _ => a = mid,
            }
        }
        b
    };

    let mut set = FixedPointSet::empty(tol, FixedPointSource::Word(gens.word_text(w)));

    // Near-zero runs become plateaus (length >= 2) or isolated points.
    let mut j = 0;
    while j < grid {
        if states[j] == Sample::Zero {
            let start = j;
            while j < grid && states[j] == Sample::Zero {
                j += 1;
            }
            let end = j - 1;
            if end > start {
                let lo = if start == 0 { domain.lo } else { refine_edge(xs[start - 1], xs[start]) };
                let hi = if end == grid - 1 { domain.hi } else { refine_edge(xs[end + 1], xs[end]) };
                set.plateaus.push(Interval { lo, hi });
            } else {
                let refined = match (
                    start.checked_sub(1).map(|p| states[p]),
                    states.get(start + 1).copied(),
                ) {
                    (Some(Sample::Neg), Some(Sample::Pos)) => {
                        let h = displacement(xs[start - 1]).unwrap_or(-1.0);
                        refine_root(xs[start - 1], xs[start + 1], h)
                    }
                    (Some(Sample::Pos), Some(Sample::Neg)) => {
                        let h = displacement(xs[start - 1]).unwrap_or(1.0);
                        refine_root(xs[start - 1], xs[start + 1], h)
                    }
                    _ => xs[start],
                };
                set.points.push(refined);
            }
        } else {
            j += 1;
        }
    }

    // Sign changes without an intervening near-zero sample.
    for j in 0..grid - 1 {
        let (a, b) = (states[j], states[j + 1]);
        let crossing = matches!((a, b), (Sample::Neg, Sample::Pos) | (Sample::Pos, Sample::Neg));
        if crossing {
            let ha = if a == Sample::Neg { -1.0 } else { 1.0 };
            set.points.push(refine_root(xs[j], xs[j + 1], ha));
        }
    }

    set.canonicalize();
    Ok(set)
}

/// Intersects two fixed-point sets: points must match within twice the
/// tolerance (or sit inside the other set's plateau), plateaus intersect
/// as intervals.
pub fn intersect_sets(a: &FixedPointSet, b: &FixedPointSet) -> FixedPointSet {
    let tol = a.tol.max(b.tol);
    let mut out = FixedPointSet::empty(tol, FixedPointSource::Common);
    for pa in &a.plateaus {
        for pb in &b.plateaus {
            let i = pa.intersect(pb);
            if !i.is_empty() {
                out.plateaus.push(i);
            }
        }
    }
    for &p in &a.points {
        let matches_point = b.points.iter().any(|&q| (p - q).abs() <= 2.0 * tol);
        let inside_plateau = b.plateaus.iter().any(|pl| p >= pl.lo - tol && p <= pl.hi + tol);
        if matches_point || inside_plateau {
            out.points.push(p);
        }
    }
    for &q in &b.points {
        let inside_plateau = a.plateaus.iter().any(|pl| q >= pl.lo - tol && q <= pl.hi + tol);
        if inside_plateau {
            out.points.push(q);
        }
    }
    out.canonicalize();
    out
}

/// Common fixed points of all generators (intersection of their
/// per-generator fixed sets). The empty set is a valid result.
pub fn common_fixed_points(gens: &GeneratorSet, tol: f64, grid: usize) -> FixedPointSet {
    let words: Vec<Word> = (0..gens.len()).map(Word::generator).collect();
    common_fixed_points_of_words(gens, &words, Interval::UNIT, tol, grid)
        .unwrap_or_else(|_| FixedPointSet::empty(tol, FixedPointSource::Common))
}

/// Common fixed points of a list of word maps inside `interval`. With no
/// words there is no constraint: the whole interval is returned as a
/// plateau.
pub fn common_fixed_points_of_words(
    gens: &GeneratorSet,
    words: &[Word],
    interval: Interval,
    tol: f64,
    grid: usize,
) -> Result<FixedPointSet, FixedPointError> {
    let mut out = FixedPointSet {
        points: Vec::new(),
        plateaus: vec![interval],
        tol,
        source: FixedPointSource::Common,
    };
    for w in words {
        let set = fixed_points(gens, w, interval, tol, grid)?;
        out = intersect_sets(&out, &set);
        out.source = FixedPointSource::Common;
        if out.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Maximal open subintervals of `within` not meeting the fixed set
/// (plateaus removed by their closures, points treated as cuts).
/// Slivers shorter than `4 * tol` are dropped.
pub fn complementary_intervals(set: &FixedPointSet, within: Interval) -> Vec<Interval> {
    let mut cuts: Vec<Interval> = set
        .plateaus
        .iter()
        .copied()
        .chain(set.points.iter().map(|&p| Interval { lo: p, hi: p }))
        .filter(|c| c.hi >= within.lo && c.lo <= within.hi)
        .collect();
    cuts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out = Vec::new();
    let mut lo = within.lo;
    for c in cuts {
        if c.lo > lo {
            out.push(Interval::new(lo, c.lo));
        }
        lo = lo.max(c.hi);
    }
    if lo < within.hi {
        out.push(Interval::new(lo, within.hi));
    }
    out.retain(|i| !i.is_empty() && i.length() > 4.0 * set.tol);
    out
}
