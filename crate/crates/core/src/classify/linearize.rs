//! Linearizing coordinates along the orbit of a rightward-moving word.
//!
//! Given a word `f` with `f(x0) > x0`, the coordinate `psi` maps the orbit
//! segments `[f^k(x0), f^{k+1}(x0)]` onto `[k, k+1]`: it satisfies
//! `psi(f(x)) = psi(x) + 1` exactly at the sample nodes. In such
//! coordinates any map commuting with `f` becomes (approximately) a
//! translation, which is what [`SemiConjugacy`] measures.

use crate::interp::{InterpError, SampledMonotoneMap};
use crate::pmap::{
    eval_word, word_derivative, GeneratorSet, Interval, Word, DEFAULT_INVERSION_TOL,
};
use serde::Serialize;
use thiserror::Error;

/// Displacements at or below this are treated as "the base point is fixed".
const FIXED_INPUT_TOL: f64 = 1e-9;
/// A level whose span shrinks below this stops the orbit extension.
const STALL_SPAN: f64 = 1e-10;
/// Hard cap on orbit levels per side when extending to full coverage.
const MAX_COVERAGE_LEVELS: usize = 512;
/// Maximum admitted `range_k` for [`linearize`].
const MAX_RANGE_K: usize = 10;
/// Residual samples drawn per generator by [`build_semi_conjugacy`].
const RESIDUAL_SAMPLES_PER_GEN: usize = 1000;
/// Crossing this many whole coordinate units toward an endpoint counts as
/// divergence of the coordinate.
const DIVERGENCE_UNIT_THRESHOLD: usize = 1000;
/// Iteration budget for [`endpoint_divergence`].
const DIVERGENCE_MAX_STEPS: usize = 10_000;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LinearizeError {
    #[error("base point {x0} is fixed (or moved left, to {image}) by the word; a linearizing coordinate needs a rightward-moving base point")]
    FixedPointInput { x0: f64, image: f64 },
    #[error("requested {range_k} orbit levels per side; at most {MAX_RANGE_K} are supported")]
    RangeTooLarge { range_k: usize },
    #[error("the word is undefined at the base point {x0}")]
    UndefinedAtBase { x0: f64 },
    #[error("orbit nodes degenerated while building the coordinate: {0}")]
    Degenerate(#[from] InterpError),
    #[error("constants list has {got} entries for {expected} generators")]
    ConstantsMismatch { got: usize, expected: usize },
}

/// Cubic Hermite seed for the coordinate's base cell `[x0, f(x0)]`.
///
/// The endpoint slopes are chosen in the geometric-mean ratio of the
/// word's derivative at the base point, which makes the extended
/// coordinate C^1 across cell seams (and exactly affine when the word is
/// a translation).
fn base_cell(x0: f64, y1: f64, d0: f64, segments: usize) -> Vec<f64> {
    let s = y1 - x0;
    let m0 = s / d0.sqrt();
    let m1 = s * d0.sqrt();
    (0..=segments)
        .map(|j| {
            let t = j as f64 / segments as f64;
            let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
            let h10 = t * (1.0 - t) * (1.0 - t);
            let h01 = t * t * (3.0 - 2.0 * t);
            let h11 = t * t * (t - 1.0);
            h00 * x0 + h10 * m0 + h01 * y1 + h11 * m1
        })
        .collect()
}

/// Builds the coordinate map `psi` (x to orbit units) around `x0`,
/// extending at most `forward`/`backward` levels and keeping only nodes
/// inside `clip`.
fn build_coordinate(
    gens: &GeneratorSet,
    f: &Word,
    x0: f64,
    segments: usize,
    forward: usize,
    backward: usize,
    clip: Interval,
) -> Result<SampledMonotoneMap, LinearizeError> {
    let segments = segments.max(2);
    let tol = DEFAULT_INVERSION_TOL;
    let y1 = eval_word(gens, f, x0, tol)
        .map_err(|_| LinearizeError::UndefinedAtBase { x0 })?;
    if y1 <= x0 + FIXED_INPUT_TOL {
        return Err(LinearizeError::FixedPointInput { x0, image: y1 });
    }
    let d0 = word_derivative(gens, f, x0, tol)
        .map_err(|_| LinearizeError::UndefinedAtBase { x0 })?;

    let base = base_cell(x0, y1, d0, segments);
    let mut xs: Vec<f64> = base.clone();
    let mut ts: Vec<f64> = (0..=segments).map(|j| j as f64 / segments as f64).collect();

    // Forward levels: apply f to the previous level. The new level's first
    // node coincides bit-for-bit with the previous level's last, so only
    // nodes 1..=segments are pushed.
    let mut cur = base.clone();
    'forward: for k in 1..=forward {
        let mut next = Vec::with_capacity(segments + 1);
        for &x in &cur {
            match eval_word(gens, f, x, tol) {
                Ok(y) if clip.contains(y) => next.push(y),
                _ => break,
            }
        }
        let complete = next.len() == segments + 1;
        for (j, &y) in next.iter().enumerate().skip(1) {
            xs.push(y);
            ts.push(k as f64 + j as f64 / segments as f64);
        }
        if !complete {
            break 'forward;
        }
        if next[segments] - next[0] < STALL_SPAN {
            break 'forward;
        }
        cur = next;
    }

    // Backward levels mirror the forward ones using the inverse word; the
    // duplicate top node of each new level is skipped.
    let finv = f.inverse();
    let mut cur = base;
    let mut lower: Vec<(f64, f64)> = Vec::new();
    'backward: for k in 1..=backward {
        let mut next = Vec::with_capacity(segments + 1);
        for &x in &cur {
            match eval_word(gens, &finv, x, tol) {
                Ok(y) if clip.contains(y) => next.push(y),
                _ => {
                    next.clear();
                    next.push(f64::NAN); // marks a broken level
                    break;
                }
            }
        }
        if next.len() != segments + 1 || next.iter().any(|v| v.is_nan()) {
            break 'backward;
        }
        for (j, &y) in next.iter().enumerate().take(segments) {
            lower.push((-(k as f64) + j as f64 / segments as f64, y));
        }
        if next[segments] - next[0] < STALL_SPAN {
            break 'backward;
        }
        cur = next;
    }
    lower.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut all_x: Vec<f64> = lower.iter().map(|&(_, x)| x).collect();
    let mut all_t: Vec<f64> = lower.iter().map(|&(t, _)| t).collect();
    all_x.extend_from_slice(&xs);
    all_t.extend_from_slice(&ts);

    Ok(SampledMonotoneMap::from_nodes(all_x, all_t)?)
}

/// Builds the linearizing coordinate for `f` around `x0`, covering
/// `range_k` orbit levels on each side of the base cell (fewer when the
/// orbit leaves (-1, 1) or stalls). The result maps points to orbit
/// units: `psi(f^k(x0)) = k`.
pub fn linearize(
    gens: &GeneratorSet,
    f: &Word,
    x0: f64,
    segments: usize,
    range_k: usize,
) -> Result<SampledMonotoneMap, LinearizeError> {
    if range_k > MAX_RANGE_K {
        return Err(LinearizeError::RangeTooLarge { range_k });
    }
    build_coordinate(gens, f, x0, segments, range_k, range_k, Interval::UNIT)
}

/// A straightening coordinate pair: `psi` maps points to translation
/// units, `phi` is its inverse, and `residual` measures how far each
/// generator is from acting as `t -> t + a_i` in these coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct SemiConjugacy {
    #[serde(skip_serializing)]
    pub psi: SampledMonotoneMap,
    #[serde(skip_serializing)]
    pub phi: SampledMonotoneMap,
    /// Coordinate range actually covered (`psi`'s value range).
    pub j_interval: Interval,
    /// Portion of the line covered by the coordinate (`psi`'s domain).
    pub covered: Interval,
    /// `max_i sup_t |f_i(phi(t)) - phi(t + a_i)|` over the sampled grid.
    pub residual: f64,
    pub residual_samples: usize,
}

/// Builds the coordinate for `base` around `x0` (extending until the
/// orbit leaves `clip`, stalls, or hits the level cap) and measures how
/// well each generator `f_i` matches the translation by `constants[i]`.
pub fn build_semi_conjugacy_in(
    gens: &GeneratorSet,
    base: &Word,
    constants: &[f64],
    x0: f64,
    segments: usize,
    clip: Interval,
) -> Result<SemiConjugacy, LinearizeError> {
    if constants.len() != gens.len() {
        return Err(LinearizeError::ConstantsMismatch {
            got: constants.len(),
            expected: gens.len(),
        });
    }
    let psi = build_coordinate(
        gens,
        base,
        x0,
        segments,
        MAX_COVERAGE_LEVELS,
        MAX_COVERAGE_LEVELS,
        clip,
    )?;
    let phi = psi.swapped();
    let (jlo, jhi) = psi.y_range();
    let (clo, chi) = psi.x_range();
    let j_interval = Interval { lo: jlo, hi: jhi };

    let mut residual = 0.0f64;
    let mut used = 0usize;
    for (i, &a) in constants.iter().enumerate() {
        let w = Word::generator(i);
        let t_lo = jlo + (-a).max(0.0);
        let t_hi = jhi - a.max(0.0);
        if t_hi <= t_lo {
            continue;
        }
        for s in 0..RESIDUAL_SAMPLES_PER_GEN {
            let t = t_lo
                + (t_hi - t_lo) * (s as f64 + 0.5) / RESIDUAL_SAMPLES_PER_GEN as f64;
            let (Ok(x), Ok(target)) = (phi.eval(t), phi.eval(t + a)) else {
                continue;
            };
            let Ok(y) = eval_word(gens, &w, x, DEFAULT_INVERSION_TOL) else {
                continue;
            };
            residual = residual.max((y - target).abs());
            used += 1;
        }
    }

    Ok(SemiConjugacy {
        psi,
        phi,
        j_interval,
        covered: Interval { lo: clo, hi: chi },
        residual,
        residual_samples: used,
    })
}

/// [`build_semi_conjugacy_in`] over the whole interval (-1, 1).
pub fn build_semi_conjugacy(
    gens: &GeneratorSet,
    base: &Word,
    constants: &[f64],
    x0: f64,
    segments: usize,
) -> Result<SemiConjugacy, LinearizeError> {
    build_semi_conjugacy_in(gens, base, constants, x0, segments, Interval::UNIT)
}

/// Outcome of driving an orbit toward an interval endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivergenceVerdict {
    /// The coordinate grows without bound toward the endpoint.
    Divergent,
    /// The budget ran out or the orbit stopped away from the endpoint;
    /// nothing is claimed.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivergenceStop {
    /// More than [`DIVERGENCE_UNIT_THRESHOLD`] coordinate units crossed.
    UnitThreshold,
    /// The orbit stopped moving inside the target zone: the endpoint is
    /// (numerically) a fixed point, so the coordinate diverges there.
    StalledAtEndpoint,
    /// The orbit stopped moving away from the target zone.
    StalledInterior,
    /// The orbit left (-1, 1).
    LeftDomain,
    /// The step budget ran out first.
    Exhausted,
}

/// Report of [`endpoint_divergence`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DivergenceReport {
    pub verdict: DivergenceVerdict,
    pub stop: DivergenceStop,
    /// Whole coordinate units crossed before stopping.
    pub steps: usize,
    pub last_point: f64,
}

/// Drives the orbit of `start` under `toward` (a word moving points
/// toward the endpoint of interest) and decides whether the linearizing
/// coordinate diverges there. Each successful application crosses exactly
/// one coordinate unit, so crossing over a thousand units — or stalling
/// on the endpoint itself — certifies divergence; anything else is
/// reported inconclusive.
pub fn endpoint_divergence(
    gens: &GeneratorSet,
    toward: &Word,
    start: f64,
    target_zone: Interval,
    tol: f64,
) -> DivergenceReport {
    let mut x = start;
    for k in 0..DIVERGENCE_MAX_STEPS {
        if k > DIVERGENCE_UNIT_THRESHOLD {
            return DivergenceReport {
                verdict: DivergenceVerdict::Divergent,
                stop: DivergenceStop::UnitThreshold,
                steps: k,
                last_point: x,
            };
        }
        let y = match eval_word(gens, toward, x, DEFAULT_INVERSION_TOL) {
            Ok(y) => y,
            Err(_) => {
                return DivergenceReport {
                    verdict: DivergenceVerdict::Inconclusive,
                    stop: DivergenceStop::LeftDomain,
                    steps: k,
                    last_point: x,
                }
            }
        };
        if (y - x).abs() <= f64::EPSILON * (1.0 + x.abs()) {
            let zone = Interval {
                lo: target_zone.lo - tol,
                hi: target_zone.hi + tol,
            };
            let at_endpoint = y >= zone.lo && y <= zone.hi;
            return DivergenceReport {
                verdict: if at_endpoint {
                    DivergenceVerdict::Divergent
                } else {
                    DivergenceVerdict::Inconclusive
                },
                stop: if at_endpoint {
                    DivergenceStop::StalledAtEndpoint
                } else {
                    DivergenceStop::StalledInterior
                },
                steps: k,
                last_point: y,
            };
        }
        x = y;
    }
    DivergenceReport {
        verdict: DivergenceVerdict::Inconclusive,
        stop: DivergenceStop::Exhausted,
        steps: DIVERGENCE_MAX_STEPS,
        last_point: x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmap::Generator;

    fn family(sources: &[&str]) -> GeneratorSet {
        let gens = sources
            .iter()
            .enumerate()
            .map(|(i, src)| Generator::parse(format!("f{}", i + 1), src).unwrap())
            .collect();
        GeneratorSet::new(gens, 1).unwrap()
    }

    #[test]
    fn translation_coordinate_is_exactly_affine() {
        let gens = family(&["x + 0.04", "x + 0.01"]);
        let psi = linearize(&gens, &Word::generator(0), 0.0, 64, 8).unwrap();
        let (lo, hi) = psi.x_range();
        assert!((lo + 0.32).abs() < 1e-12 && (hi - 0.36).abs() < 1e-12, "{lo} {hi}");
        for &x in &[0.0, 0.02, 0.13, -0.31, 0.3599] {
            let t = psi.eval(x).unwrap();
            assert!((t - x / 0.04).abs() < 1e-10, "psi({x}) = {t}");
        }
    }

    #[test]
    fn fixed_base_point_is_rejected() {
        let gens = family(&["x/(1 - 0.04*x)", "x + 0.01"]);
        let err = linearize(&gens, &Word::generator(0), 0.0, 64, 4).unwrap_err();
        assert!(matches!(err, LinearizeError::FixedPointInput { .. }));
    }

    #[test]
    fn oversized_range_is_rejected() {
        let gens = family(&["x + 0.04", "x + 0.01"]);
        let err = linearize(&gens, &Word::generator(0), 0.0, 64, 11).unwrap_err();
        assert!(matches!(err, LinearizeError::RangeTooLarge { range_k: 11 }));
    }

    #[test]
    fn unit_step_holds_exactly_at_nodes() {
        let gens = family(&["x/(1 - 0.04*x)", "x + 0.01"]);
        let f = Word::generator(0);
        let psi = linearize(&gens, &f, 0.3, 64, 8).unwrap();
        let (_, t_hi) = psi.y_range();
        let mut checked = 0;
        for (&x, &t) in psi.x_nodes().iter().zip(psi.y_nodes()) {
            if t + 1.0 > t_hi - 1e-12 {
                continue;
            }
            let fx = eval_word(&gens, &f, x, 1e-12).unwrap();
            let tfx = psi.eval(fx).unwrap();
            assert!((tfx - t - 1.0).abs() < 1e-8, "x {x}: {tfx} vs {}", t + 1.0);
            checked += 1;
        }
        assert!(checked > 400, "only {checked} nodes checked");
    }

    #[test]
    fn unit_step_holds_between_nodes() {
        let gens = family(&["x/(1 - 0.04*x)", "x + 0.01"]);
        let f = Word::generator(0);
        let psi = linearize(&gens, &f, 0.3, 64, 8).unwrap();
        // Sample the orbit span of levels -7..7 so both psi(x) and
        // psi(f(x)) stay inside the covered range.
        let lo = psi.eval_inverse(-7.0).unwrap();
        let hi = psi.eval_inverse(7.0).unwrap();
        let mut worst = 0.0f64;
        for s in 0..500 {
            let x = lo + (hi - lo) * (s as f64 + 0.5) / 500.0;
            let fx = eval_word(&gens, &f, x, 1e-12).unwrap();
            let d = psi.eval(fx).unwrap() - psi.eval(x).unwrap() - 1.0;
            worst = worst.max(d.abs());
        }
        assert!(worst < 1e-6, "worst residual {worst}");
    }

    #[test]
    fn translations_straighten_exactly() {
        let gens = family(&["x + 0.04", "x + 0.01"]);
        let sc =
            build_semi_conjugacy(&gens, &Word::generator(0), &[1.0, 0.25], 0.0, 64).unwrap();
        assert!(sc.residual < 1e-9, "residual {}", sc.residual);
        assert!(sc.j_interval.length() > 40.0, "{}", sc.j_interval);
        assert!(sc.covered.length() > 1.9, "{}", sc.covered);
        assert!(sc.residual_samples > 1500);
    }

    #[test]
    fn power_of_the_base_is_an_integer_translation() {
        let gens = family(&["x/(1 - 0.01*x)", "x/(1 - 0.02*x)"]);
        let sc =
            build_semi_conjugacy(&gens, &Word::generator(0), &[1.0, 2.0], 0.5, 64).unwrap();
        assert!(sc.residual < 1e-6, "residual {}", sc.residual);
    }

    #[test]
    fn wrong_constants_give_a_visible_residual() {
        let gens = family(&["x + 0.04", "x + 0.01"]);
        let sc =
            build_semi_conjugacy(&gens, &Word::generator(0), &[1.0, 0.5], 0.0, 64).unwrap();
        assert!(sc.residual > 0.005, "residual {}", sc.residual);
    }

    #[test]
    fn constants_length_is_checked() {
        let gens = family(&["x + 0.04", "x + 0.01"]);
        let err =
            build_semi_conjugacy(&gens, &Word::generator(0), &[1.0], 0.0, 64).unwrap_err();
        assert!(matches!(err, LinearizeError::ConstantsMismatch { got: 1, expected: 2 }));
    }

    #[test]
    fn slow_approach_to_a_fixed_endpoint_diverges() {
        let gens = family(&["x/(1 - 0.005*x)", "x + 0.001"]);
        let report = endpoint_divergence(
            &gens,
            &Word::generator(0).inverse(),
            0.5,
            Interval::new(-1e-3, 1e-3),
            1e-8,
        );
        assert_eq!(report.verdict, DivergenceVerdict::Divergent);
        assert_eq!(report.stop, DivergenceStop::UnitThreshold);
    }

    #[test]
    fn orbit_leaving_the_interval_is_inconclusive() {
        let gens = family(&["x/(1 - 0.005*x)", "x + 0.001"]);
        let report = endpoint_divergence(
            &gens,
            &Word::generator(0),
            0.5,
            Interval::new(1.0 - 1e-6, 1.0),
            1e-8,
        );
        assert_eq!(report.verdict, DivergenceVerdict::Inconclusive);
        assert_eq!(report.stop, DivergenceStop::LeftDomain);
    }

    #[test]
    fn fast_stall_on_the_endpoint_is_divergent() {
        // Strong attraction toward the fixed point at 0.5 makes the orbit
        // stall there long before the unit threshold.
        let gens = family(&["x + 0.4*(0.25 - x*x)", "x + 0.001"]);
        let report = endpoint_divergence(
            &gens,
            &Word::generator(0),
            0.0,
            Interval::new(0.5 - 1e-6, 0.5 + 1e-6),
            1e-8,
        );
        assert_eq!(report.verdict, DivergenceVerdict::Divergent);
        assert_eq!(report.stop, DivergenceStop::StalledAtEndpoint);
        assert!(report.steps < 1000, "steps {}", report.steps);
    }

    #[test]
    fn stall_away_from_the_zone_is_inconclusive() {
        let gens = family(&["x + 0.4*(0.25 - x*x)", "x + 0.001"]);
        let report = endpoint_divergence(
            &gens,
            &Word::generator(0),
            0.0,
            Interval::new(0.9, 0.95),
            1e-8,
        );
        assert_eq!(report.verdict, DivergenceVerdict::Inconclusive);
        assert_eq!(report.stop, DivergenceStop::StalledInterior);
    }
}
