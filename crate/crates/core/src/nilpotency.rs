//! Commutator enumeration and numerical identity certification.
//!
//! Commutators are organized by order: order-1 commutators are `[f, g]`
//! with both entries generators, and an order-m commutator is `[a, b]`
//! where `b` has order m-1 and `a` is a generator or a commutator of
//! order at most m-1. A family is certified nilpotent of its claimed
//! order m when its distance to the identity passes the `10^-(m+1)` gate
//! and every order-m commutator acts as the identity on its domain, up
//! to the identity tolerance.

use crate::pmap::{eval_word, word_domain, GeneratorSet, Interval, Word, DEFAULT_INVERSION_TOL};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

/// Largest deviation from the identity map still accepted as "identity".
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-8;
/// Grid size used when sampling a word against the identity.
pub const DEFAULT_IDENTITY_SAMPLES: usize = 2048;
/// Cap on enumerated commutators before truncation is reported.
pub const DEFAULT_MAX_COMMUTATORS: usize = 4096;

/// Allowed distance to the identity for a family claiming order `order`.
pub fn epsilon_threshold(order: u32) -> f64 {
    10f64.powi(-(order as i32) - 1)
}

/// One side of a commutator: a bare generator or a nested commutator.
#[derive(Clone, Debug)]
pub enum Operand {
    Generator(usize),
    Commutator(Box<CommutatorSpec>),
}

impl Operand {
    pub fn order(&self) -> u32 {
        match self {
            Operand::Generator(_) => 0,
            Operand::Commutator(c) => c.order(),
        }
    }

    pub fn word(&self) -> Word {
        match self {
            Operand::Generator(i) => Word::generator(*i),
            Operand::Commutator(c) => c.word(),
        }
    }

    pub fn label(&self, names: &[impl AsRef<str>]) -> String {
        match self {
            Operand::Generator(i) => names[*i].as_ref().to_string(),
            Operand::Commutator(c) => c.label(names),
        }
    }
}

/// A commutator `[left, right]` remembered as a tree, so reports can show
/// `[f1, [f1, f2]]` instead of the raw sixteen-letter word.
#[derive(Clone, Debug)]
pub struct CommutatorSpec {
    left: Operand,
    right: Operand,
}

impl CommutatorSpec {
    pub fn new(left: Operand, right: Operand) -> CommutatorSpec {
        CommutatorSpec { left, right }
    }

    pub fn left(&self) -> &Operand {
        &self.left
    }

    pub fn right(&self) -> &Operand {
        &self.right
    }

    /// Nesting depth: generators count 0, `[a, b]` counts one more than
    /// its deepest side.
    pub fn order(&self) -> u32 {
        self.left.order().max(self.right.order()) + 1
    }

    /// The freely reduced word `left^-1 right^-1 left right`.
    pub fn word(&self) -> Word {
        Word::commutator(&self.left.word(), &self.right.word())
    }

    pub fn label(&self, names: &[impl AsRef<str>]) -> String {
        format!("[{}, {}]", self.left.label(names), self.right.label(names))
    }
}

/// Result of [`enumerate_commutators`].
#[derive(Clone, Debug)]
pub struct CommutatorEnumeration {
    pub specs: Vec<CommutatorSpec>,
    /// True when the listing stopped at the requested cap.
    pub truncated: bool,
}

/// Lists the order-`order` commutators of `n_generators` generators,
/// dropping entries whose word freely reduces to the identity and keeping
/// one representative per inverse pair. The listing is deterministic;
/// at most `max_count` entries are returned per order.
pub fn enumerate_commutators(
    n_generators: usize,
    order: u32,
    max_count: usize,
) -> CommutatorEnumeration {
    assert!(order >= 1, "commutator order starts at 1");
    let mut truncated = false;
    // levels[k] holds the order-(k+1) commutators.
    let mut levels: Vec<Vec<CommutatorSpec>> = Vec::new();
    for m in 1..=order {
        let lefts: Vec<Operand> = (0..n_generators)
            .map(Operand::Generator)
            .chain(
                levels
                    .iter()
                    .flatten()
                    .map(|c| Operand::Commutator(Box::new(c.clone()))),
            )
            .collect();
        let rights: Vec<Operand> = if m == 1 {
            (0..n_generators).map(Operand::Generator).collect()
        } else {
            levels[m as usize - 2]
                .iter()
                .map(|c| Operand::Commutator(Box::new(c.clone())))
                .collect()
        };
        let mut seen: HashSet<Word> = HashSet::new();
        let mut level = Vec::new();
        'outer: for left in &lefts {
            for right in &rights {
                let spec = CommutatorSpec::new(left.clone(), right.clone());
                let w = spec.word();
                if w.is_identity() || !seen.insert(w.canonical_key()) {
                    continue;
                }
                if level.len() == max_count {
                    truncated = true;
                    break 'outer;
                }
                level.push(spec);
            }
        }
        levels.push(level);
    }
    CommutatorEnumeration {
        specs: levels.pop().unwrap_or_default(),
        truncated,
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum IdentityCheckError {
    #[error("word `{word}` has no domain left to sample after shrinking by the identity margin")]
    EmptyDomain { word: String },
}

/// Outcome of sampling one word against the identity map.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheckReport {
    /// The word in generator-name notation.
    pub word_text: String,
    /// Interval that was sampled (domain intersected with the margin).
    pub domain: Interval,
    pub samples_used: usize,
    pub max_deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Samples `|w(x) - x|` over the word's domain shrunk by ten times the
/// family's distance to the identity, in parallel. Words that freely
/// reduce to the identity pass with zero samples.
pub fn check_identity(
    gens: &GeneratorSet,
    w: &Word,
    tol: f64,
    samples: usize,
) -> Result<IdentityCheckReport, IdentityCheckError> {
    let margin = 10.0 * gens.epsilon();
    let safe = Interval::new(-1.0 + margin, 1.0 - margin);
    let word_text = gens.word_text(w);
    if w.is_identity() {
        return Ok(IdentityCheckReport {
            word_text,
            domain: safe,
            samples_used: 0,
            max_deviation: 0.0,
            tol,
            passed: true,
        });
    }
    let domain = word_domain(gens, w, 1e-9).intersect(&safe);
    if domain.is_empty() {
        return Err(IdentityCheckError::EmptyDomain { word: word_text });
    }
    let step = domain.length() / samples as f64;
    let max_deviation = (0..samples)
        .into_par_iter()
        .map(|k| {
            let x = domain.lo + (k as f64 + 0.5) * step;
            match eval_word(gens, w, x, DEFAULT_INVERSION_TOL) {
                Ok(y) => (y - x).abs(),
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(IdentityCheckReport {
        word_text,
        domain,
        samples_used: samples,
        max_deviation,
        tol,
        passed: max_deviation <= tol,
    })
}

/// Tuning knobs for the verification entry points.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub identity_tol: f64,
    pub samples: usize,
    pub max_commutators: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            identity_tol: DEFAULT_IDENTITY_TOL,
            samples: DEFAULT_IDENTITY_SAMPLES,
            max_commutators: DEFAULT_MAX_COMMUTATORS,
        }
    }
}

/// One labeled identity check inside a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct LabeledCheck {
    /// Bracket notation, e.g. `[f1, [f1, f2]]`.
    pub label: String,
    pub check: IdentityCheckReport,
}

/// Full record of a nilpotency verification run.
#[derive(Clone, Debug, Serialize)]
pub struct NilpotencyReport {
    pub claimed_order: u32,
    /// Measured sup of generator C^1 distances to the identity (grid
    /// estimate; see the grid size on the family).
    pub epsilon: f64,
    pub epsilon_threshold: f64,
    pub epsilon_ok: bool,
    pub commutators_checked: usize,
    pub truncated: bool,
    pub checks: Vec<LabeledCheck>,
    pub passed: bool,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum NilpotencyError {
    #[error("claimed order must be at least 1, got {0}")]
    InvalidOrder(u32),
    #[error(transparent)]
    Check(#[from] IdentityCheckError),
}

fn verify_order(
    gens: &GeneratorSet,
    order: u32,
    opts: VerifyOptions,
) -> Result<NilpotencyReport, NilpotencyError> {
    if order == 0 {
        return Err(NilpotencyError::InvalidOrder(0));
    }
    let threshold = epsilon_threshold(order);
    let epsilon_ok = gens.epsilon() < threshold;
    let names = gens.names();
    let enumeration = enumerate_commutators(gens.len(), order, opts.max_commutators);
    let mut checks = Vec::with_capacity(enumeration.specs.len());
    let mut all_passed = true;
    for spec in &enumeration.specs {
        let report = check_identity(gens, &spec.word(), opts.identity_tol, opts.samples)?;
        all_passed &= report.passed;
        checks.push(LabeledCheck {
            label: spec.label(&names),
            check: report,
        });
    }
    Ok(NilpotencyReport {
        claimed_order: order,
        epsilon: gens.epsilon(),
        epsilon_threshold: threshold,
        epsilon_ok,
        commutators_checked: checks.len(),
        truncated: enumeration.truncated,
        checks,
        passed: epsilon_ok && all_passed && !enumeration.truncated,
    })
}

/// Certifies the family nilpotent of its claimed order: the distance gate
/// `epsilon < 10^-(order+1)` must hold strictly and every order-`order`
/// commutator must act as the identity within the tolerance.
pub fn verify_near_identity_nilpotent(
    gens: &GeneratorSet,
    opts: VerifyOptions,
) -> Result<NilpotencyReport, NilpotencyError> {
    verify_order(gens, gens.claimed_order(), opts)
}

/// Order-1 specialization: all generator pairs must commute.
pub fn verify_abelian(
    gens: &GeneratorSet,
    opts: VerifyOptions,
) -> Result<NilpotencyReport, NilpotencyError> {
    verify_order(gens, 1, opts)
}

/// Full record of a metabelian verification run.
#[derive(Clone, Debug, Serialize)]
pub struct MetabelianReport {
    pub epsilon: f64,
    pub epsilon_threshold: f64,
    pub epsilon_ok: bool,
    pub pairs_checked: usize,
    pub truncated: bool,
    pub checks: Vec<LabeledCheck>,
    pub passed: bool,
}

/// Certifies the commutators commute among themselves: for every pair of
/// order-1 commutators `c`, `d`, the word `[c, d]` must act as the
/// identity. The distance gate is the order-1 threshold.
pub fn verify_metabelian(
    gens: &GeneratorSet,
    opts: VerifyOptions,
) -> Result<MetabelianReport, NilpotencyError> {
    let threshold = epsilon_threshold(1);
    let epsilon_ok = gens.epsilon() < threshold;
    let names = gens.names();
    let enumeration = enumerate_commutators(gens.len(), 1, opts.max_commutators);
    let mut truncated = enumeration.truncated;
    let mut checks = Vec::new();
    let mut all_passed = true;
    'outer: for (a, ca) in enumeration.specs.iter().enumerate() {
        for cb in enumeration.specs.iter().skip(a + 1) {
            if checks.len() == opts.max_commutators {
                truncated = true;
                break 'outer;
            }
            let spec = CommutatorSpec::new(
                Operand::Commutator(Box::new(ca.clone())),
                Operand::Commutator(Box::new(cb.clone())),
            );
            let w = spec.word();
            if w.is_identity() {
                continue;
            }
            let report = check_identity(gens, &w, opts.identity_tol, opts.samples)?;
            all_passed &= report.passed;
            checks.push(LabeledCheck {
                label: spec.label(&names),
                check: report,
            });
        }
    }
    Ok(MetabelianReport {
        epsilon: gens.epsilon(),
        epsilon_threshold: threshold,
        epsilon_ok,
        pairs_checked: checks.len(),
        truncated,
        checks,
        passed: epsilon_ok && all_passed && !truncated,
    })
}
