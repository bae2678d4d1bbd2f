//! Trichotomy classification of a verified generator family.
//!
//! Once a family passes its nilpotency verification, exactly one of three
//! mutually exclusive descriptions applies, and [`classify`] decides
//! which:
//!
//! 1. **Fixed intervals** — the generators share fixed points. On each
//!    maximal interval between them the family straightens to a
//!    translation family, with its own constants and coordinate.
//! 2. **Dense translations** — no shared fixed points and at least one
//!    relative translation number is irrational: one coordinate on all of
//!    (-1, 1) turns every generator into a translation.
//! 3. **Periodic chain** — no shared fixed points and all translation
//!    numbers rational: the family shifts a discrete chain of points by
//!    integer constants.
//!
//! Each case's payload carries the measured constants, the straightening
//! data, and residuals quantifying how well the description holds.

mod chain;
mod fixed_points;
mod linearize;

pub use chain::{
    find_periodic_chain, stabilizer_reduction, ChainError, PeriodicChain, ReducedGenerator,
    StabilizerReduction,
};
pub use fixed_points::{
    common_fixed_points, common_fixed_points_of_words, complementary_intervals, fixed_points,
    intersect_sets, FixedPointError, FixedPointSet, FixedPointSource,
};
pub use linearize::{
    build_semi_conjugacy, build_semi_conjugacy_in, endpoint_divergence, linearize,
    DivergenceReport, DivergenceStop, DivergenceVerdict, LinearizeError, SemiConjugacy,
};

use crate::nilpotency::{
    enumerate_commutators, epsilon_threshold, verify_abelian, verify_metabelian,
    verify_near_identity_nilpotent, NilpotencyError, NilpotencyReport, VerifyOptions,
};
use crate::pmap::{
    word_domain, GeneratorSet, Interval, Word, DEFAULT_DOMAIN_TOL, DEFAULT_INVERSION_TOL,
};
use crate::rotation::{
    relative_translation_number, RationalApprox, RotationEstimate, TauError, TauOptions,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Zone half-width used when deciding whether an orbit stalled *on* an
/// interval endpoint.
const ENDPOINT_PROXIMITY: f64 = 1e-6;

/// Tuning knobs for [`classify`]. The defaults match the command-line
/// tool's.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    /// Deviation below which a word counts as the identity.
    pub identity_tol: f64,
    /// Samples per identity check.
    pub identity_samples: usize,
    /// Cap on enumerated commutators per verification.
    pub max_commutators: usize,
    /// Displacement tolerance for fixed-point location.
    pub fixed_point_tol: f64,
    /// Grid size for fixed-point scans and invariant-set estimates.
    pub grid: usize,
    /// Orbit iteration controls for translation numbers.
    pub tau: TauOptions,
    /// Sample cells per orbit level in straightening coordinates.
    pub segments: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            identity_tol: 1e-8,
            identity_samples: 2048,
            max_commutators: 4096,
            fixed_point_tol: 1e-8,
            grid: 2048,
            tau: TauOptions::default(),
            segments: 64,
        }
    }
}

impl ClassifyOptions {
    fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            identity_tol: self.identity_tol,
            samples: self.identity_samples,
            max_commutators: self.max_commutators,
        }
    }
}

#[derive(Clone, Debug, Error)]
pub enum ClassifyError {
    #[error("the family failed its nilpotency verification (epsilon {epsilon:e} against threshold {threshold:e} for order {order})")]
    HypothesisFailed {
        epsilon: f64,
        threshold: f64,
        order: u32,
        report: Box<NilpotencyReport>,
    },
    #[error("no commuting base point could be resolved inside {interval}")]
    ResolutionFailure { interval: Interval },
    #[error("generator {index}'s translation number {value} identifies as {p}/{q} only at low confidence; the dense and periodic cases cannot be told apart at this resolution")]
    AmbiguousResolution {
        index: usize,
        value: f64,
        p: i64,
        q: u64,
    },
    #[error(transparent)]
    Nilpotency(#[from] NilpotencyError),
    #[error(transparent)]
    Tau(#[from] TauError),
    #[error(transparent)]
    FixedPoints(#[from] FixedPointError),
    #[error(transparent)]
    Linearize(#[from] LinearizeError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// The word (a generator or its inverse) moving a point furthest to the
/// right, used as the measuring stick for translation numbers.
#[derive(Clone, Debug)]
pub struct RulerChoice {
    pub word: Word,
    pub index: usize,
    pub inverted: bool,
    /// Its value at the point it was chosen for.
    pub image: f64,
}

/// Picks the generator or inverse with the largest value at `b`. Ties
/// break toward the smaller generator index, then the uninverted map.
pub fn choose_ruler(gens: &GeneratorSet, b: f64, inversion_tol: f64) -> Option<RulerChoice> {
    let mut best: Option<(f64, usize, bool)> = None;
    let mut offer = |value: f64, index: usize, inverted: bool| {
        let better = match best {
            None => true,
            Some((bv, bi, binv)) => {
                value > bv || (value == bv && (index, inverted) < (bi, binv))
            }
        };
        if better {
            best = Some((value, index, inverted));
        }
    };
    for (i, g) in gens.generators().iter().enumerate() {
        if let Ok(v) = g.eval(b) {
            offer(v, i, false);
        }
        if let Ok(v) = g.invert(b, inversion_tol) {
            offer(v, i, true);
        }
    }
    best.map(|(image, index, inverted)| RulerChoice {
        word: if inverted {
            Word::generator_inverse(index)
        } else {
            Word::generator(index)
        },
        index,
        inverted,
        image,
    })
}

/// Grid estimate of the largest set on which the generators commute and
/// which they map into itself.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantSetApprox {
    /// Maximal runs of surviving grid points, as intervals.
    pub intervals: Vec<Interval>,
    pub grid_step: f64,
    pub tol: f64,
}

impl InvariantSetApprox {
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }
}

/// Estimates the set where all order-1 commutators act as the identity
/// (within `tol`) and which the generators keep inside itself. The scan
/// runs on the window where every commutator can actually be evaluated;
/// grid points failing the commutation test are dropped up front, then
/// points whose generator images land (inside the window) outside the
/// surviving set's one-cell neighbourhood are removed until nothing
/// changes.
pub fn invariant_commuting_set(
    gens: &GeneratorSet,
    tol: f64,
    grid: usize,
) -> Result<InvariantSetApprox, ClassifyError> {
    let n = gens.len();
    let words: Vec<Word> = enumerate_commutators(n, 1, 4096)
        .specs
        .iter()
        .map(|s| s.word())
        .collect();
    let mut window = Interval::UNIT;
    for w in &words {
        window = window.intersect(&word_domain(gens, w, DEFAULT_DOMAIN_TOL));
    }
    if window.is_empty() {
        return Err(ClassifyError::ResolutionFailure { interval: Interval::UNIT });
    }
    let grid = grid.max(16);
    let step = window.length() / grid as f64;
    let xs: Vec<f64> = (0..grid)
        .map(|j| window.lo + (j as f64 + 0.5) * step)
        .collect();

    let mut alive: Vec<bool> = xs
        .par_iter()
        .map(|&x| {
            words.iter().all(|w| {
                crate::pmap::eval_word(gens, w, x, DEFAULT_INVERSION_TOL)
                    .map(|y| (y - x).abs() < tol)
                    .unwrap_or(false)
            })
        })
        .collect();

    // Images are grid-independent; precompute the target cells. Images
    // leaving the measurable window impose no constraint.
    let images: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| {
            xs.iter()
                .map(|&x| {
                    let y = gens.generator(i).eval(x).ok()?;
                    if y < window.lo || y > window.hi {
                        return None;
                    }
                    let m = ((y - window.lo) / step - 0.5).round();
                    Some((m.max(0.0) as usize).min(grid - 1))
                })
                .collect()
        })
        .collect();

    loop {
        let mut changed = false;
        for j in 0..grid {
            if !alive[j] {
                continue;
            }
            let escapes = images.iter().any(|img| match img[j] {
                None => false,
                Some(m) => {
                    let lo = m.saturating_sub(1);
                    let hi = (m + 1).min(grid - 1);
                    !alive[lo..=hi].iter().any(|&a| a)
                }
            });
            if escapes {
                alive[j] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    for j in 0..=grid {
        match (run_start, j < grid && alive[j]) {
            (None, true) => run_start = Some(j),
            (Some(s), false) => {
                intervals.push(Interval::new(xs[s], xs[j - 1].max(xs[s] + step * 0.5)));
                run_start = None;
            }
            _ => {}
        }
    }
    if intervals.is_empty() {
        return Err(ClassifyError::ResolutionFailure { interval: Interval::UNIT });
    }
    Ok(InvariantSetApprox { intervals, grid_step: step, tol })
}

/// Straightening data for one interval between common fixed points.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalAnalysis {
    pub interval: Interval,
    pub base_point: f64,
    pub ruler_text: String,
    pub ruler_index: usize,
    pub ruler_inverted: bool,
    /// Relative translation number of each generator against the ruler.
    pub constants: Vec<f64>,
    pub conjugacy: SemiConjugacy,
    /// Divergence of the coordinate at the lower endpoint; absent when
    /// the endpoint is -1 itself.
    pub lower_divergence: Option<DivergenceReport>,
    pub upper_divergence: Option<DivergenceReport>,
}

/// Straightening data for a family acting without shared fixed points
/// and with an irrational translation number present.
#[derive(Clone, Debug, Serialize)]
pub struct DenseAnalysis {
    pub base_point: f64,
    pub ruler_text: String,
    pub ruler_index: usize,
    pub ruler_inverted: bool,
    pub constants: Vec<f64>,
    /// Rational identifications (None marks the irrational entries).
    pub rationals: Vec<Option<RationalApprox>>,
    pub conjugacy: SemiConjugacy,
    /// Per generator: the coordinate range exceeds the translation size.
    pub range_exceeds_constant: Vec<bool>,
    /// Per generator: `|J| - |a_i|`, the margin behind the check above.
    pub range_margin: Vec<f64>,
    /// Margins this close to zero are flagged as resolution-limited.
    pub near_equality: Vec<bool>,
}

/// The rational case's payload: the chain and its integer constants.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicAnalysis {
    pub base_point: f64,
    pub ruler_text: String,
    pub ruler_index: usize,
    pub ruler_inverted: bool,
    pub constants: Vec<i64>,
    pub q: u64,
    pub chain: PeriodicChain,
    /// Largest symmetric extent: both `y_{-n}` and `y_n` exist.
    pub n_half: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind")]
pub enum CasePayload {
    FixedIntervals { intervals: Vec<IntervalAnalysis> },
    DenseTranslations(DenseAnalysis),
    PeriodicChain(PeriodicAnalysis),
}

/// Everything [`classify`] measured, serializable to JSON. Sampled maps
/// inside the payload are kept in memory for callers but skipped during
/// serialization; export them separately.
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    /// 1 = fixed intervals, 2 = dense translations, 3 = periodic chain.
    pub case: u8,
    pub epsilon: f64,
    pub epsilon_threshold: f64,
    pub claimed_order: u32,
    pub generator_names: Vec<String>,
    pub common_fixed_points: FixedPointSet,
    pub payload: CasePayload,
    /// Whether the order-1 (all pairs commute) verification passed.
    pub abelian: bool,
    /// Whether all pairs of order-1 commutators commute.
    pub metabelian: bool,
}

fn tau_constants(
    gens: &GeneratorSet,
    ruler: &RulerChoice,
    b: f64,
    tau: TauOptions,
) -> Result<Vec<RotationEstimate>, TauError> {
    (0..gens.len())
        .map(|i| relative_translation_number(gens, &Word::generator(i), &ruler.word, b, tau))
        .collect()
}

/// The fixed-set component sitting at `endpoint`, used as the stall zone
/// for divergence checks.
fn endpoint_zone(cfp: &FixedPointSet, endpoint: f64, tol: f64) -> Interval {
    for pl in &cfp.plateaus {
        if pl.contains(endpoint)
            || (pl.hi - endpoint).abs() <= 4.0 * tol
            || (pl.lo - endpoint).abs() <= 4.0 * tol
        {
            return *pl;
        }
    }
    for &p in &cfp.points {
        if (p - endpoint).abs() <= 4.0 * tol {
            return Interval { lo: p, hi: p };
        }
    }
    Interval { lo: endpoint, hi: endpoint }
}

fn analyze_interval(
    gens: &GeneratorSet,
    opts: &ClassifyOptions,
    commutator_words: &[Word],
    cfp: &FixedPointSet,
    interval: Interval,
) -> Result<IntervalAnalysis, ClassifyError> {
    let candidates = common_fixed_points_of_words(
        gens,
        commutator_words,
        interval,
        opts.fixed_point_tol,
        opts.grid,
    )
    .map_err(|_| ClassifyError::ResolutionFailure { interval })?;
    let b = candidates
        .nearest_candidate(interval.midpoint())
        .ok_or(ClassifyError::ResolutionFailure { interval })?;
    let ruler = choose_ruler(gens, b, opts.tau.inversion_tol)
        .ok_or(ClassifyError::ResolutionFailure { interval })?;

    let estimates = tau_constants(gens, &ruler, b, opts.tau)?;
    let constants: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let conjugacy =
        build_semi_conjugacy_in(gens, &ruler.word, &constants, b, opts.segments, interval)?;

    let lower_divergence = (interval.lo > -1.0 + ENDPOINT_PROXIMITY).then(|| {
        endpoint_divergence(
            gens,
            &ruler.word.inverse(),
            b,
            endpoint_zone(cfp, interval.lo, opts.fixed_point_tol),
            ENDPOINT_PROXIMITY,
        )
    });
    let upper_divergence = (interval.hi < 1.0 - ENDPOINT_PROXIMITY).then(|| {
        endpoint_divergence(
            gens,
            &ruler.word,
            b,
            endpoint_zone(cfp, interval.hi, opts.fixed_point_tol),
            ENDPOINT_PROXIMITY,
        )
    });

    Ok(IntervalAnalysis {
        interval,
        base_point: b,
        ruler_text: gens.word_text(&ruler.word),
        ruler_index: ruler.index,
        ruler_inverted: ruler.inverted,
        constants,
        conjugacy,
        lower_divergence,
        upper_divergence,
    })
}

/// Runs the full decision procedure on a verified family.
///
/// The nilpotency verification is rerun first and failure is a hard
/// error (for a single generator the hypothesis is vacuous and skipped).
/// The trichotomy then follows the shared fixed points and the
/// rationality of the relative translation numbers. A low-confidence
/// rational identification refuses to guess between the dense and
/// periodic cases and errors instead.
pub fn classify(
    gens: &GeneratorSet,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport, ClassifyError> {
    let n = gens.len();
    let single = n == 1;

    if !single {
        let verification = verify_near_identity_nilpotent(gens, opts.verify_options())?;
        if !verification.passed {
            return Err(ClassifyError::HypothesisFailed {
                epsilon: verification.epsilon,
                threshold: verification.epsilon_threshold,
                order: gens.claimed_order(),
                report: Box::new(verification),
            });
        }
    }
    // A lone map commutes with itself; both verdicts are vacuous.
    let abelian = single || verify_abelian(gens, opts.verify_options())?.passed;
    let metabelian = single || verify_metabelian(gens, opts.verify_options())?.passed;

    let cfp = common_fixed_points(gens, opts.fixed_point_tol, opts.grid);
    let commutator_words: Vec<Word> = enumerate_commutators(n, 1, opts.max_commutators)
        .specs
        .iter()
        .map(|s| s.word())
        .collect();

    let (case, payload) = if !cfp.is_empty() {
        let intervals = complementary_intervals(&cfp, Interval::UNIT);
        let analyses: Vec<IntervalAnalysis> = intervals
            .par_iter()
            .map(|&i| analyze_interval(gens, opts, &commutator_words, &cfp, i))
            .collect::<Result<_, _>>()?;
        (1, CasePayload::FixedIntervals { intervals: analyses })
    } else {
        let candidates = common_fixed_points_of_words(
            gens,
            &commutator_words,
            Interval::UNIT,
            opts.fixed_point_tol,
            opts.grid,
        )?;
        let b = candidates
            .nearest_candidate(0.0)
            .ok_or(ClassifyError::ResolutionFailure { interval: Interval::UNIT })?;
        let ruler = choose_ruler(gens, b, opts.tau.inversion_tol)
            .ok_or(ClassifyError::ResolutionFailure { interval: Interval::UNIT })?;
        let estimates = tau_constants(gens, &ruler, b, opts.tau)?;

        if estimates.iter().any(|e| e.rational.is_none()) {
            let constants: Vec<f64> = estimates.iter().map(|e| e.value).collect();
            let conjugacy =
                build_semi_conjugacy(gens, &ruler.word, &constants, b, opts.segments)?;
            let j_len = conjugacy.j_interval.length();
            let near_margin = 2.0 / opts.segments as f64;
            let range_margin: Vec<f64> =
                constants.iter().map(|a| j_len - a.abs()).collect();
            (
                2,
                CasePayload::DenseTranslations(DenseAnalysis {
                    base_point: b,
                    ruler_text: gens.word_text(&ruler.word),
                    ruler_index: ruler.index,
                    ruler_inverted: ruler.inverted,
                    constants,
                    rationals: estimates.iter().map(|e| e.rational).collect(),
                    conjugacy,
                    range_exceeds_constant: range_margin.iter().map(|&m| m > 0.0).collect(),
                    near_equality: range_margin
                        .iter()
                        .map(|&m| m.abs() < near_margin)
                        .collect(),
                    range_margin,
                }),
            )
        } else if let Some((i, e)) = estimates
            .iter()
            .enumerate()
            .find(|(_, e)| e.rational.is_some_and(|r| r.low_confidence))
        {
            let r = e.rational.expect("matched Some above");
            return Err(ClassifyError::AmbiguousResolution {
                index: i,
                value: e.value,
                p: r.p,
                q: r.q,
            });
        } else {
            let chain =
                chain::build_chain(gens, b, opts.fixed_point_tol, opts.tau, opts.grid, &ruler)?;
            (
                3,
                CasePayload::PeriodicChain(PeriodicAnalysis {
                    base_point: b,
                    ruler_text: gens.word_text(&ruler.word),
                    ruler_index: ruler.index,
                    ruler_inverted: ruler.inverted,
                    constants: chain.constants.clone(),
                    q: chain.q,
                    n_half: chain.n_half(),
                    residual: chain.residual,
                    chain,
                }),
            )
        }
    };

    Ok(ClassificationReport {
        case,
        epsilon: gens.epsilon(),
        epsilon_threshold: epsilon_threshold(gens.claimed_order()),
        claimed_order: gens.claimed_order(),
        generator_names: gens.names(),
        common_fixed_points: cfp,
        payload,
        abelian,
        metabelian,
    })
}
