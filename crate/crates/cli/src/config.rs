//! Run configuration: the JSON schema, its defaults, validation, and the
//! translation into the library's option structs.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use pseudogroup::classify::ClassifyOptions;
use pseudogroup::nilpotency::VerifyOptions;
use pseudogroup::pmap::Generator;
use pseudogroup::rotation::TauOptions;
use pseudogroup::GeneratorSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One generator entry: a display name and its expression in `x`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub name: String,
    pub expr: String,
}

/// Tolerance knobs, all strictly positive.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Deviation below which a sampled word counts as the identity.
    pub identity: f64,
    /// Accuracy of numerical inversion.
    pub inversion: f64,
    /// Displacement below which a point counts as fixed.
    pub fixed_point: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-8, inversion: 1e-12, fixed_point: 1e-8 }
    }
}

/// Iteration and grid sizes.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Iterations {
    /// Orbit length behind translation-number estimates.
    pub tau: usize,
    /// Grid for fixed-point scans, invariant sets, and distance measurement.
    pub grid: usize,
    /// Samples per identity check during verification.
    pub identity_samples: usize,
    /// Sample cells per orbit level in straightening coordinates.
    pub segments: usize,
}

impl Default for Iterations {
    fn default() -> Self {
        Iterations { tau: 10_000, grid: 2048, identity_samples: 2048, segments: 64 }
    }
}

fn default_q_max() -> u64 {
    50
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// A full run configuration as read from `--config`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub generators: Vec<GeneratorConfig>,
    pub claimed_order: u32,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub iterations: Iterations,
    #[serde(default = "default_q_max")]
    pub q_max: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Config {
    /// Checks the structural invariants, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.generators.is_empty() {
            bail!("config field `generators` must list at least one map");
        }
        if self.claimed_order == 0 {
            bail!("config field `claimed_order` must be at least 1");
        }
        let t = self.tolerances;
        for (field, value) in [
            ("tolerances.identity", t.identity),
            ("tolerances.inversion", t.inversion),
            ("tolerances.fixed_point", t.fixed_point),
        ] {
            if !(value > 0.0) {
                bail!("config field `{field}` must be positive, got {value}");
            }
        }
        let i = self.iterations;
        for (field, value) in [
            ("iterations.tau", i.tau),
            ("iterations.grid", i.grid),
            ("iterations.identity_samples", i.identity_samples),
            ("iterations.segments", i.segments),
        ] {
            if value == 0 {
                bail!("config field `{field}` must be positive");
            }
        }
        if self.q_max == 0 {
            bail!("config field `q_max` must be positive");
        }
        Ok(())
    }

    /// Parses every generator and assembles the family.
    pub fn build_family(&self) -> Result<GeneratorSet> {
        let mut gens = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            // Flattened: the library error's display already names the
            // generator and nests its cause, so chaining would repeat it.
            let parsed = Generator::parse(g.name.clone(), &g.expr)
                .map_err(|e| anyhow!("in `{}`: {e}", g.expr))?;
            gens.push(parsed);
        }
        GeneratorSet::with_samples(gens, self.claimed_order, self.iterations.grid)
            .map_err(|e| anyhow!("assembling the generator family: {e}"))
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            identity_tol: self.tolerances.identity,
            samples: self.iterations.identity_samples,
            ..Default::default()
        }
    }

    pub fn tau_options(&self) -> TauOptions {
        TauOptions {
            iterations: self.iterations.tau,
            tol: self.tolerances.fixed_point,
            inversion_tol: self.tolerances.inversion,
            q_max: self.q_max,
        }
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            identity_tol: self.tolerances.identity,
            identity_samples: self.iterations.identity_samples,
            fixed_point_tol: self.tolerances.fixed_point,
            grid: self.iterations.grid,
            tau: self.tau_options(),
            segments: self.iterations.segments,
            ..Default::default()
        }
    }

    /// Hash of the effective configuration (after flag overrides), used to
    /// name the run directory so identical runs land in the same place.
    /// The output directory itself is excluded: it chooses where results
    /// go, not what they are.
    pub fn run_id(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes =
            serde_json::to_vec(&canonical).expect("config serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        let mut id = String::with_capacity(12);
        for byte in &digest[..6] {
            id.push_str(&format!("{byte:02x}"));
        }
        id
    }
}
