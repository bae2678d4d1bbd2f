//! Family builders shared by the integration suites.
//!
//! Every builder goes through [`Generator::parse`], so the tests exercise
//! the same ingestion path the CLI uses, and every numeric parameter is
//! rendered with Rust's shortest round-trip float formatting so the parsed
//! family is bit-identical to the intended one.

#![allow(dead_code)]

use pseudogroup::pmap::Generator;
use pseudogroup::GeneratorSet;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds a family from expression sources, naming the maps `f1, f2, ...`.
pub fn family(claimed_order: u32, sources: &[&str]) -> GeneratorSet {
    let gens = sources
        .iter()
        .enumerate()
        .map(|(i, src)| Generator::parse(format!("f{}", i + 1), src).expect(src))
        .collect();
    GeneratorSet::new(gens, claimed_order).expect("family rejected")
}

/// Pure translations `x + a` for the given amounts.
pub fn translations(claimed_order: u32, amounts: &[f64]) -> GeneratorSet {
    let sources: Vec<String> = amounts.iter().map(|a| format!("x + {a}")).collect();
    let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
    family(claimed_order, &refs)
}

/// The commuting family `x / (1 - a*x)`; parameters add under composition,
/// every member fixes 0, and all members are flows of one vector field.
pub fn mobius_flow(claimed_order: u32, params: &[f64]) -> GeneratorSet {
    let sources: Vec<String> = params.iter().map(|a| format!("x/(1 - {a}*x)")).collect();
    let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
    family(claimed_order, &refs)
}

/// Translations conjugated through `x -> log((1+x)/(1-x))`, which carries
/// (-1,1) onto the whole line. The conjugate of `y -> y + a` is the
/// fractional-linear map below; members commute and fix only the endpoints.
pub fn conjugated_translations(claimed_order: u32, amounts: &[f64]) -> GeneratorSet {
    let sources: Vec<String> = amounts
        .iter()
        .map(|a| {
            format!(
                "(exp({a})*(1 + x) - (1 - x)) / (exp({a})*(1 + x) + (1 - x))"
            )
        })
        .collect();
    let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
    family(claimed_order, &refs)
}

/// Deterministic generator for randomized trials.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
