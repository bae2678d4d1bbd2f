//! Translation numbers: classical (for degree-one circle maps) and
//! relative (one interval map measured in steps of another).
//!
//! Both estimators share the same structure: iterate an orbit, count how
//! often it crosses a fundamental window, and report the crossing
//! proportion together with a `1/n` error bound and an optional rational
//! identification of the value.

use crate::expr::{EvalError, Expr};
use crate::interp::{InterpError, SampledMonotoneMap};
use crate::pmap::{eval_word, GeneratorSet, OutOfDomain, Word};
use serde::Serialize;
use thiserror::Error;

/// Default orbit length for translation-number estimates.
pub const DEFAULT_TAU_ITERATIONS: usize = 10_000;
/// Default largest denominator tried when identifying a rational value.
pub const DEFAULT_Q_MAX: u64 = 50;
/// Allowed mismatch between a lift's value at 1 and its value at 0 plus 1.
pub const SEAM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CircleMapError {
    #[error("lift is not strictly increasing near x = {x}")]
    NotIncreasing { x: f64 },
    #[error("lift does not commute with x+1: u(1) - u(0) - 1 = {gap:e}")]
    SeamMismatch { gap: f64 },
    #[error("sampled lift must cover [0, 1], got [{lo}, {hi}]")]
    NotCovering { lo: f64, hi: f64 },
    #[error("lift evaluation failed at x = {x}: {source}")]
    Eval { x: f64, source: EvalError },
    #[error(transparent)]
    Interp(#[from] InterpError),
}

enum LiftBase {
    /// Closed-form lift, evaluated through its expression.
    Formula(Expr),
    /// Lift known at sample nodes over [0, 1].
    Sampled(SampledMonotoneMap),
}

/// The lift of a degree-one circle map: an increasing `u` with
/// `u(x + 1) = u(x) + 1`, stored by its restriction to [0, 1].
pub struct DegreeOneMap {
    base: LiftBase,
}

const LIFT_VALIDATION_SAMPLES: usize = 1024;

impl DegreeOneMap {
    /// Wraps a closed-form lift. The formula is validated on a grid over
    /// [0, 1]: it must be defined, strictly increasing, and match itself
    /// across the seam: `u(1) = u(0) + 1` within [`SEAM_TOL`].
    pub fn from_expr(u: Expr) -> Result<DegreeOneMap, CircleMapError> {
        let du = u.differentiate();
        let at = |x: f64| u.evaluate(x).map_err(|source| CircleMapError::Eval { x, source });
        for k in 0..=LIFT_VALIDATION_SAMPLES {
            let x = k as f64 / LIFT_VALIDATION_SAMPLES as f64;
            at(x)?;
            let slope = du
                .evaluate(x)
                .map_err(|source| CircleMapError::Eval { x, source })?;
            if slope <= 0.0 {
                return Err(CircleMapError::NotIncreasing { x });
            }
        }
        let gap = at(1.0)? - at(0.0)? - 1.0;
        if gap.abs() > SEAM_TOL {
            return Err(CircleMapError::SeamMismatch { gap });
        }
        Ok(DegreeOneMap { base: LiftBase::Formula(u) })
    }

    /// Wraps a lift sampled at nodes. The nodes must cover exactly [0, 1]
    /// (within [`SEAM_TOL`]) and satisfy the seam condition; monotonicity
    /// comes with the interpolant.
    pub fn from_samples(map: SampledMonotoneMap) -> Result<DegreeOneMap, CircleMapError> {
        let (lo, hi) = map.x_range();
        if lo.abs() > SEAM_TOL || (hi - 1.0).abs() > SEAM_TOL {
            return Err(CircleMapError::NotCovering { lo, hi });
        }
        let gap = map.eval(hi)? - map.eval(lo)? - 1.0;
        if gap.abs() > SEAM_TOL {
            return Err(CircleMapError::SeamMismatch { gap });
        }
        Ok(DegreeOneMap { base: LiftBase::Sampled(map) })
    }

    /// Convenience wrapper building the interpolant first.
    pub fn from_nodes(xs: Vec<f64>, ys: Vec<f64>) -> Result<DegreeOneMap, CircleMapError> {
        DegreeOneMap::from_samples(SampledMonotoneMap::from_nodes(xs, ys)?)
    }

    /// Evaluates the lift at any real `x` through `u(x + k) = u(x) + k`.
    pub fn eval(&self, x: f64) -> Result<f64, CircleMapError> {
        let k = x.floor();
        let r = (x - k).clamp(0.0, 1.0);
        let base = match &self.base {
            LiftBase::Formula(u) => u
                .evaluate(r)
                .map_err(|source| CircleMapError::Eval { x: r, source })?,
            LiftBase::Sampled(m) => m.eval(r)?,
        };
        Ok(base + k)
    }
}

/// A rational `p/q` identified for an estimated value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RationalApprox {
    pub p: i64,
    pub q: u64,
    /// True when the estimate's own error bound is too coarse to single
    /// out this denominator; the identification is then only a hint.
    pub low_confidence: bool,
}

/// A translation-number estimate with its resolution.
#[derive(Clone, Debug, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    /// Orbit length behind the estimate.
    pub iterations: usize,
    /// Half-width of the certified interval around `value`.
    pub error_bound: f64,
    /// Rational identification of `value`, when one fits the resolution.
    pub rational: Option<RationalApprox>,
}

/// Searches the continued-fraction convergents of `value` for a fraction
/// `p/q` with `q <= q_max` and `|value - p/q| <= max(error_bound,
/// 1/(2 q q_max))`. The second threshold is the unique-identification
/// margin: below it no other fraction with denominator up to `q_max` can
/// be closer. When `error_bound` exceeds that margin the match is
/// returned with `low_confidence` set.
pub fn rational_identify(value: f64, error_bound: f64, q_max: u64) -> Option<RationalApprox> {
    if !value.is_finite() || q_max == 0 {
        return None;
    }
    // Convergents via the standard recurrence on the integer parts.
    let (mut h_prev, mut h) = (0i64, 1i64);
    let (mut k_prev, mut k) = (1i64, 0i64);
    let mut rest = value;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > i64::MAX as f64 / 2.0 {
            return None;
        }
        let a_int = a as i64;
        let (new_h, new_k) = (a_int * h + h_prev, a_int * k + k_prev);
        (h_prev, h, k_prev, k) = (h, new_h, k, new_k);
        if k < 0 || k as u64 > q_max {
            return None;
        }
        let (p, q) = (h, k as u64);
        let margin = 1.0 / (2.0 * q as f64 * q_max as f64);
        let dist = (value - p as f64 / q as f64).abs();
        if dist <= margin.max(error_bound) {
            return Some(RationalApprox { p, q, low_confidence: error_bound > margin });
        }
        let frac = rest - a;
        if frac <= f64::EPSILON * rest.abs().max(1.0) {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RotationError {
    #[error(transparent)]
    Map(#[from] CircleMapError),
    #[error(
        "internal consistency check failed: crossing-proportion estimate {proportion} and \
         orbit-average estimate {lift_average} differ by more than {bound}"
    )]
    EstimatorMismatch { proportion: f64, lift_average: f64, bound: f64 },
    #[error("iteration count must be positive")]
    NoIterations,
}

/// Estimates the rotation number of a degree-one circle map.
///
/// Writing `m` for the integer part of `u(0)` and `v = u - m`, the orbit
/// of 0 under `v` reduced mod 1 visits `[0, v(0))` exactly when the
/// reduction wrapped, so the visit proportion estimates the rotation
/// number of `v` within `1/n`. The reported value is `m` plus that
/// proportion. A second estimate — the orbit's average displacement in
/// the lift — is compared against the first and must agree within `2/n`.
pub fn rotation_number(
    map: &DegreeOneMap,
    iterations: usize,
    q_max: u64,
) -> Result<RotationEstimate, RotationError> {
    if iterations == 0 {
        return Err(RotationError::NoIterations);
    }
    let u0 = map.eval(0.0)?;
    let m = u0.floor();
    let v0 = u0 - m;
    let mut a = 0.0f64;
    let mut visits = 0u64;
    let mut wraps = 0u64;
    for _ in 0..iterations {
        if a < v0 {
            visits += 1;
        }
        let b = map.eval(a)? - m;
        a = if b >= 1.0 {
            wraps += 1;
            b - 1.0
        } else {
            b
        };
    }
    let n = iterations as f64;
    let proportion = m + visits as f64 / n;
    let lift_average = m + (wraps as f64 + a) / n;
    let bound = 2.0 / n;
    if (proportion - lift_average).abs() > bound {
        return Err(RotationError::EstimatorMismatch { proportion, lift_average, bound });
    }
    let error_bound = 1.0 / n;
    Ok(RotationEstimate {
        value: proportion,
        iterations,
        error_bound,
        rational: rational_identify(proportion, error_bound, q_max),
    })
}

/// Tuning knobs for relative translation numbers.
#[derive(Clone, Copy, Debug)]
pub struct TauOptions {
    pub iterations: usize,
    /// Displacements smaller than this count as "does not move".
    pub tol: f64,
    /// Accuracy of numerical inversion when words contain inverse letters.
    pub inversion_tol: f64,
    pub q_max: u64,
}

impl Default for TauOptions {
    fn default() -> Self {
        TauOptions {
            iterations: DEFAULT_TAU_ITERATIONS,
            tol: 1e-9,
            inversion_tol: 1e-12,
            q_max: DEFAULT_Q_MAX,
        }
    }
}

/// One step of the window iteration behind a relative translation number.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TauTraceRow {
    /// Step index.
    pub n: usize,
    /// Iterate before the step.
    pub a: f64,
    /// Ruler steps consumed at this step (0 or 1).
    pub k: u8,
    /// Total ruler steps consumed after this step.
    pub p: u64,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TauError {
    #[error("ruler word does not move the base point {x0} (displacement {displacement:e})")]
    RulerFixed { x0: f64, displacement: f64 },
    #[error("orbit left the pseudogroup's domain at step {step}")]
    OutOfDomain { step: usize },
    #[error(
        "internal consistency check failed at step {step}: the iterate left the fundamental \
         window by {violation:e}; the two words may not commute near the base point"
    )]
    WindowViolation { step: usize, violation: f64 },
    #[error(
        "relative speed {value:e} (error bound {error_bound:e}) is not certified nonzero, \
         so its reciprocal is meaningless"
    )]
    Unresolvable { value: f64, error_bound: f64 },
}

/// Relative translation number: how far `subject` moves points near `x0`,
/// measured in steps of `ruler`. Both words must commute with each other
/// near `x0` (callers verify this; the iteration itself flags gross
/// violations). See [`relative_translation_number_traced`] for the raw
/// orbit.
pub fn relative_translation_number(
    gens: &GeneratorSet,
    subject: &Word,
    ruler: &Word,
    x0: f64,
    opts: TauOptions,
) -> Result<RotationEstimate, TauError> {
    Ok(relative_translation_number_traced(gens, subject, ruler, x0, opts)?.0)
}

/// As [`relative_translation_number`], also returning the orbit of the
/// normalized window iteration that produced the estimate. The rows
/// describe the iteration after the words were normalized to move
/// rightward with the subject no faster than the ruler; sign changes and
/// reciprocals from that normalization are already folded into the
/// estimate.
pub fn relative_translation_number_traced(
    gens: &GeneratorSet,
    subject: &Word,
    ruler: &Word,
    x0: f64,
    opts: TauOptions,
) -> Result<(RotationEstimate, Vec<TauTraceRow>), TauError> {
    let (value, error_bound, iterations, trace) =
        tau_normalized(gens, subject.clone(), ruler.clone(), x0, opts, 0)?;
    let estimate = RotationEstimate {
        value,
        iterations,
        error_bound,
        rational: rational_identify(value, error_bound, opts.q_max),
    };
    Ok((estimate, trace))
}

fn tau_eval(gens: &GeneratorSet, w: &Word, x: f64, opts: TauOptions, step: usize)
    -> Result<f64, TauError> {
    eval_word(gens, w, x, opts.inversion_tol).map_err(|OutOfDomain { .. }| TauError::OutOfDomain { step })
}

fn tau_normalized(
    gens: &GeneratorSet,
    subject: Word,
    ruler: Word,
    x0: f64,
    opts: TauOptions,
    depth: u32,
) -> Result<(f64, f64, usize, Vec<TauTraceRow>), TauError> {
    assert!(depth <= 3, "normalization must settle in three reductions");
    let s0 = tau_eval(gens, &subject, x0, opts, 0)?;
    let r0 = tau_eval(gens, &ruler, x0, opts, 0)?;
    let ds = s0 - x0;
    let dr = r0 - x0;

    if dr < -opts.tol {
        // Ruler moves left: measure against its inverse and flip the sign.
        let (v, e, n, tr) = tau_normalized(gens, subject, ruler.inverse(), x0, opts, depth + 1)?;
        return Ok((-v, e, n, tr));
    }
    if dr <= opts.tol {
        return Err(TauError::RulerFixed { x0, displacement: dr });
    }
    if ds < -opts.tol {
        // Subject moves left: measure its inverse and flip the sign.
        let (v, e, n, tr) = tau_normalized(gens, subject.inverse(), ruler, x0, opts, depth + 1)?;
        return Ok((-v, e, n, tr));
    }
    if s0 > r0 + opts.tol {
        // Subject outruns the ruler: swap roles and take the reciprocal.
        let (v, e, n, tr) = tau_normalized(gens, ruler, subject, x0, opts, depth + 1)?;
        if v.abs() <= e {
            return Err(TauError::Unresolvable { value: v, error_bound: e });
        }
        return Ok((1.0 / v, e / (v * v), n, tr));
    }

    // Canonical window: x0 <= s(x0) <= r(x0) up to ties. Iterate the
    // subject and pull back by one ruler step whenever the iterate passes
    // r(x0), counting the pullbacks.
    let ruler_inv = ruler.inverse();
    let slack = 10.0 * opts.tol;
    let mut a = x0;
    let mut p = 0u64;
    let n = opts.iterations.max(1);
    let mut trace = Vec::with_capacity(n);
    for step in 0..n {
        let before = a;
        let b = tau_eval(gens, &subject, a, opts, step)?;
        let (k, next) = if b < r0 {
            (0u8, b)
        } else {
            (1u8, tau_eval(gens, &ruler_inv, b, opts, step)?)
        };
        let violation = (x0 - next).max(next - r0).max(0.0);
        if violation > slack {
            return Err(TauError::WindowViolation { step, violation });
        }
        a = next;
        p += k as u64;
        trace.push(TauTraceRow { n: step, a: before, k, p });
    }
    Ok((p as f64 / n as f64, 1.0 / n as f64, n, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmap::Generator;

    fn lift(src: &str) -> Result<DegreeOneMap, CircleMapError> {
        DegreeOneMap::from_expr(crate::expr::parse(src).unwrap())
    }

    #[test]
    fn rigid_rational_rotation_is_exact() {
        let map = lift("x + 0.4").unwrap();
        let est = rotation_number(&map, 1000, 50).unwrap();
        assert!((est.value - 0.4).abs() < 1e-12);
        assert_eq!(est.error_bound, 1e-3);
        let r = est.rational.unwrap();
        assert_eq!((r.p, r.q, r.low_confidence), (2, 5, false));
    }

    #[test]
    fn negative_rotation_keeps_its_integer_part() {
        let map = lift("x - 1.25").unwrap();
        let est = rotation_number(&map, 1000, 50).unwrap();
        assert!((est.value + 1.25).abs() < 1e-12, "value {}", est.value);
        let r = est.rational.unwrap();
        assert_eq!((r.p, r.q), (-5, 4));
    }

    #[test]
    fn golden_rotation_is_refused_a_confident_rational() {
        let phi = 0.6180339887498949;
        let map = lift(&format!("x + {phi}")).unwrap();
        let est = rotation_number(&map, 10_000, 50).unwrap();
        assert!((est.value - phi).abs() <= 2.0 * est.error_bound);
        assert!(est.rational.is_none(), "got {:?}", est.rational);
    }

    #[test]
    fn perturbed_lift_agrees_with_both_estimators() {
        // Quadratic bump vanishing at both ends of [0, 1] keeps the seam.
        let map = lift("x + 0.5 + 0.05*x*(1 - x)").unwrap();
        let est = rotation_number(&map, 5000, 50).unwrap();
        assert!(est.value > 0.5 && est.value < 0.55, "value {}", est.value);
    }

    #[test]
    fn conjugated_rotation_recovers_the_angle() {
        // u = h^-1 (h(x) + alpha) with h(x) = x + 0.15 x (1 - x) on [0,1]
        // extended by h(x + 1) = h(x) + 1; its rotation number is alpha.
        let alpha = 0.6180339887498949;
        let h = |x: f64| {
            let k = x.floor();
            let r = x - k;
            k + r + 0.15 * r * (1.0 - r)
        };
        let h_inv = |t: f64| {
            let k = t.floor();
            let r = t - k;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if h(mid) < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            k + 0.5 * (lo + hi)
        };
        let n = 256;
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| h_inv(h(x) + alpha)).collect();
        let map = DegreeOneMap::from_nodes(xs, ys).unwrap();
        let est = rotation_number(&map, 4000, 50).unwrap();
        assert!((est.value - alpha).abs() < 1e-3, "value {}", est.value);
    }

    #[test]
    fn bad_lifts_are_rejected() {
        assert!(matches!(lift("x + x^2"), Err(CircleMapError::SeamMismatch { .. })));
        assert!(matches!(
            lift("x + 0.1 + 2*x*(1 - x)"),
            Err(CircleMapError::NotIncreasing { .. })
        ));
        let bad = SampledMonotoneMap::from_nodes(vec![0.0, 0.4], vec![0.1, 0.6]).unwrap();
        assert!(matches!(
            DegreeOneMap::from_samples(bad),
            Err(CircleMapError::NotCovering { .. })
        ));
    }

    #[test]
    fn rational_identify_basics() {
        let r = rational_identify(0.4, 1e-6, 50).unwrap();
        assert_eq!((r.p, r.q, r.low_confidence), (2, 5, false));
        let r = rational_identify(2.0, 1e-9, 50).unwrap();
        assert_eq!((r.p, r.q), (2, 1));
        let r = rational_identify(-0.25, 1e-9, 50).unwrap();
        assert_eq!((r.p, r.q), (-1, 4));
        // One third, off by half a billionth: still confidently 1/3.
        let r = rational_identify(0.333333333, 1e-9, 50).unwrap();
        assert_eq!((r.p, r.q, r.low_confidence), (1, 3, false));
    }

    #[test]
    fn rational_identify_flags_coarse_resolutions() {
        let r = rational_identify(0.6190, 5e-3, 50).unwrap();
        assert_eq!((r.p, r.q), (8, 13));
        assert!(r.low_confidence);
        assert!(rational_identify(0.6180339887, 1e-7, 50).is_none());
    }

    fn translations() -> GeneratorSet {
        GeneratorSet::new(
            vec![
                Generator::parse("f1", "x + 0.01").unwrap(),
                Generator::parse("f2", "x + 0.004").unwrap(),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn tau_of_commuting_translations() {
        let gens = translations();
        let est = relative_translation_number(
            &gens,
            &Word::generator(1),
            &Word::generator(0),
            0.0,
            TauOptions::default(),
        )
        .unwrap();
        assert!((est.value - 0.4).abs() <= est.error_bound);
        let r = est.rational.unwrap();
        assert_eq!((r.p, r.q, r.low_confidence), (2, 5, false));
    }

    #[test]
    fn tau_normalizes_signs_and_speed() {
        let gens = translations();
        let opts = TauOptions::default();
        let s = Word::generator(1);
        let r = Word::generator(0);
        // Subject moving left.
        let est =
            relative_translation_number(&gens, &s.inverse(), &r, 0.0, opts).unwrap();
        assert!((est.value + 0.4).abs() <= est.error_bound, "value {}", est.value);
        // Ruler moving left.
        let est =
            relative_translation_number(&gens, &s, &r.inverse(), 0.0, opts).unwrap();
        assert!((est.value + 0.4).abs() <= est.error_bound);
        // Subject faster than the ruler: reciprocal branch.
        let est = relative_translation_number(&gens, &r, &s, 0.0, opts).unwrap();
        assert!((est.value - 2.5).abs() <= est.error_bound, "value {}", est.value);
        assert_eq!(est.rational.map(|r| (r.p, r.q)), Some((5, 2)));
    }

    #[test]
    fn tau_of_a_power_is_an_integer() {
        let gens = translations();
        let est = relative_translation_number(
            &gens,
            &Word::generator(0).pow(3),
            &Word::generator(0),
            0.1,
            TauOptions::default(),
        )
        .unwrap();
        assert_eq!(est.rational.map(|r| (r.p, r.q)), Some((3, 1)));
    }

    #[test]
    fn tau_detects_an_irrational_ratio() {
        let gens = GeneratorSet::new(
            vec![
                Generator::parse("f1", "x + 0.01").unwrap(),
                Generator::parse("f2", "x + 0.006180339887498949").unwrap(),
            ],
            1,
        )
        .unwrap();
        let est = relative_translation_number(
            &gens,
            &Word::generator(1),
            &Word::generator(0),
            0.0,
            TauOptions::default(),
        )
        .unwrap();
        assert!((est.value - 0.6180339887).abs() <= 2.0 * est.error_bound);
        assert!(est.rational.is_none(), "got {:?}", est.rational);
    }

    #[test]
    fn tau_rejects_a_fixed_ruler() {
        let gens = translations();
        let err = relative_translation_number(
            &gens,
            &Word::generator(1),
            &Word::identity(),
            0.0,
            TauOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, TauError::RulerFixed { .. }));
    }

    #[test]
    fn tau_trace_is_consistent() {
        let gens = translations();
        let opts = TauOptions { iterations: 100, ..Default::default() };
        let (est, trace) = relative_translation_number_traced(
            &gens,
            &Word::generator(1),
            &Word::generator(0),
            0.0,
            opts,
        )
        .unwrap();
        assert_eq!(trace.len(), 100);
        assert_eq!(trace[0].n, 0);
        assert_eq!(trace[0].a, 0.0);
        let mut p = 0u64;
        for row in &trace {
            p += row.k as u64;
            assert_eq!(row.p, p);
            assert!(row.a >= -1e-12 && row.a <= 0.01 + 1e-12);
        }
        assert!((est.value - p as f64 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn tau_flags_wild_noncommuting_pairs() {
        // The subject starts slower than the ruler at the base point but
        // accelerates so steeply that one pullback cannot keep the
        // iterate inside the fundamental window.
        let gens = GeneratorSet::new(
            vec![
                Generator::parse("f1", "x + 0.01").unwrap(),
                Generator::parse("f2", "x + 0.009 + 0.6*(x - 0.45)").unwrap(),
            ],
            1,
        )
        .unwrap();
        let err = relative_translation_number(
            &gens,
            &Word::generator(1),
            &Word::generator(0),
            0.45,
            TauOptions::default(),
        )
        .unwrap_err();
        assert!(
            matches!(err, TauError::WindowViolation { .. }),
            "expected a window violation, got {err:?}"
        );
    }
}
