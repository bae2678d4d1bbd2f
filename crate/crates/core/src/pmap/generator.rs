//! Expression-backed generators: increasing maps on (-1, 1).

use thiserror::Error;

use super::Interval;
use crate::expr::{self, EvalError, Expr, ParseError};

/// Inset used when sampling behaviour at the (open) interval endpoints.
pub const ENDPOINT_CLAMP: f64 = 1e-6;

/// Grid size used to validate generators and to measure `epsilon`.
pub const DEFAULT_C1_SAMPLES: usize = 2048;

/// Default residual tolerance for generator inversion.
pub const DEFAULT_INVERSION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("generator '{name}': {source}")]
    Parse {
        name: String,
        #[source]
        source: ParseError,
    },
    #[error("generator '{name}' is undefined at x = {x}: {source}")]
    Undefined {
        name: String,
        x: f64,
        #[source]
        source: EvalError,
    },
    #[error("generator '{name}' is not strictly increasing: derivative {df} at x = {x}")]
    NotIncreasing { name: String, x: f64, df: f64 },
    #[error("generator '{name}' is too far from the identity: C1 distance {c1} >= 1")]
    TooFarFromIdentity { name: String, c1: f64 },
    #[error("a generator family must contain at least one generator")]
    EmptyFamily,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum InvertError {
    #[error("value {y} is outside the range ({lo}, {hi}) of the generator")]
    NotInRange { y: f64, lo: f64, hi: f64 },
    #[error("generator evaluation failed during inversion at x = {x}: {source}")]
    EvalFailed {
        x: f64,
        #[source]
        source: EvalError,
    },
}

/// One generator: a strictly increasing map given by an expression, with its
/// symbolic derivative computed at construction.
#[derive(Clone, Debug)]
pub struct Generator {
    name: String,
    f: Expr,
    df: Expr,
}

impl Generator {
    /// Wraps an expression after checking, on a sampling grid, that it is
    /// defined and strictly increasing on (-1, 1) and that its C^1 distance
    /// to the identity is below 1.
    pub fn new(name: impl Into<String>, f: Expr) -> Result<Generator, GeneratorError> {
        let name = name.into();
        let df = f.differentiate();
        let g = Generator { name, f, df };
        g.validate()?;
        Ok(g)
    }

    /// Parses the expression text and builds the generator.
    pub fn parse(name: impl Into<String>, src: &str) -> Result<Generator, GeneratorError> {
        let name = name.into();
        let f = expr::parse(src).map_err(|source| GeneratorError::Parse {
            name: name.clone(),
            source,
        })?;
        Generator::new(name, f)
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let mut c1 = 0.0f64;
        for x in sample_grid(DEFAULT_C1_SAMPLES) {
            let fx = self.f.evaluate(x).map_err(|source| GeneratorError::Undefined {
                name: self.name.clone(),
                x,
                source,
            })?;
            let dfx = self.df.evaluate(x).map_err(|source| GeneratorError::Undefined {
                name: self.name.clone(),
                x,
                source,
            })?;
            if !(dfx > 0.0) || !fx.is_finite() {
                return Err(GeneratorError::NotIncreasing {
                    name: self.name.clone(),
                    x,
                    df: dfx,
                });
            }
            c1 = c1.max((fx - x).abs()).max((dfx - 1.0).abs());
        }
        if c1 >= 1.0 {
            return Err(GeneratorError::TooFarFromIdentity {
                name: self.name.clone(),
                c1,
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expr(&self) -> &Expr {
        &self.f
    }

    pub fn derivative_expr(&self) -> &Expr {
        &self.df
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.f.evaluate(x)
    }

    pub fn eval_df(&self, x: f64) -> Result<f64, EvalError> {
        self.df.evaluate(x)
    }

    /// Sup over a uniform grid of `max(|f(x) - x|, |f'(x) - 1|)`.
    ///
    /// This is a grid estimate — a lower bound on the true C^1 distance —
    /// so callers comparing it against a threshold should also record the
    /// grid size. Points where evaluation fails contribute infinity.
    pub fn c1_distance(&self, n_samples: usize) -> f64 {
        use rayon::prelude::*;
        sample_grid(n_samples)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&x| match (self.f.evaluate(x), self.df.evaluate(x)) {
                (Ok(fx), Ok(dfx)) => (fx - x).abs().max((dfx - 1.0).abs()),
                _ => f64::INFINITY,
            })
            .fold(|| 0.0f64, f64::max)
            .reduce(|| 0.0f64, f64::max)
    }

    /// Image of (-1, 1), approximated by evaluating just inside the
    /// endpoints. Values outside this open interval have no preimage that
    /// the inverse map could return.
    pub fn range(&self) -> Result<Interval, EvalError> {
        let lo = self.f.evaluate(-1.0 + ENDPOINT_CLAMP)?;
        let hi = self.f.evaluate(1.0 - ENDPOINT_CLAMP)?;
        Ok(Interval::new(lo, hi))
    }

    /// Solves `f(x) = y` for `x` in (-1, 1) by bisection with a Newton
    /// polish. The returned point satisfies `|f(x) - y| <= 0.5 * tol`, which
    /// for a map with derivative above `1 - eps` places `x` within `tol` of
    /// the exact preimage whenever `eps <= 1/2`.
    pub fn invert(&self, y: f64, tol: f64) -> Result<f64, InvertError> {
        let mut a = -1.0 + ENDPOINT_CLAMP;
        let mut b = 1.0 - ENDPOINT_CLAMP;
        let eval = |x: f64| -> Result<f64, InvertError> {
            self.f
                .evaluate(x)
                .map_err(|source| InvertError::EvalFailed { x, source })
        };
        let fa = eval(a)?;
        let fb = eval(b)?;
        if !(fa < y && y < fb) {
            return Err(InvertError::NotInRange { y, lo: fa, hi: fb });
        }
        let target = 0.5 * tol;
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let fx = eval(x)?;
            if (fx - y).abs() <= target {
                break;
            }
            if fx < y {
                a = x;
            } else {
                b = x;
            }
            // Newton step when it stays inside the bracket; bisection
            // otherwise. The derivative is bounded away from zero for any
            // validated generator.
            let mut next = 0.5 * (a + b);
            if let Ok(dfx) = self.df.evaluate(x) {
                if dfx > 0.0 {
                    let newton = x - (fx - y) / dfx;
                    if a < newton && newton < b {
                        next = newton;
                    }
                }
            }
            x = next;
        }
        Ok(x)
    }
}

/// Uniform grid over the clamped interval [-1 + 1e-6, 1 - 1e-6], endpoints
/// included.
pub(crate) fn sample_grid(n_samples: usize) -> impl Iterator<Item = f64> {
    let n = n_samples.max(2);
    let a = 1.0 - ENDPOINT_CLAMP;
    (0..n).map(move |i| -a + 2.0 * a * (i as f64) / ((n - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_has_exact_c1_distance() {
        let g = Generator::parse("f1", "x + 0.01").unwrap();
        // Up to roundoff in (x + 0.01) - x at the grid points.
        assert!((g.c1_distance(64) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn quadratic_perturbation_c1_distance() {
        // max(|0.002 + 0.001 x^2|, |0.002 x|) on the clamped grid: the value
        // term dominates and approaches 0.003 at the endpoints.
        let g = Generator::parse("g", "x + 0.002 + 0.001*x^2").unwrap();
        let c1 = g.c1_distance(2048);
        assert!(c1 > 0.00299 && c1 < 0.003, "c1 = {c1}");
    }

    #[test]
    fn moebius_c1_distance_near_two_a() {
        // |f'-1| for x/(1-ax) peaks near 2a/(1-a)^2 at the right endpoint.
        let g = Generator::parse("m", "x/(1 - 0.005*x)").unwrap();
        let c1 = g.c1_distance(4096);
        assert!((c1 - 0.010076).abs() < 1e-4, "c1 = {c1}");
    }

    #[test]
    fn rejects_decreasing_and_far_maps() {
        assert!(matches!(
            Generator::parse("bad", "0 - x"),
            Err(GeneratorError::NotIncreasing { .. })
        ));
        assert!(matches!(
            Generator::parse("far", "x + 2"),
            Err(GeneratorError::TooFarFromIdentity { .. })
        ));
        // Decreasing on part of the interval.
        assert!(matches!(
            Generator::parse("cubic", "x - x^3"),
            Err(GeneratorError::NotIncreasing { .. })
        ));
        // Pole inside the interval: rejected one way or another (huge
        // values away from the exact pole, undefined on it).
        assert!(Generator::parse("pole", "x/(1 - 2*x)").is_err());
    }

    #[test]
    fn inversion_residual_within_contract() {
        let g = Generator::parse("f1", "x/(1 - 0.02*x) + 0.003").unwrap();
        let tol = 1e-12;
        for &x in &[-0.9, -0.5, 0.0, 0.3, 0.77] {
            let y = g.eval(x).unwrap();
            let back = g.invert(y, tol).unwrap();
            assert!((g.eval(back).unwrap() - y).abs() <= 0.5 * tol);
            assert!((back - x).abs() <= tol, "x {x} back {back}");
        }
    }

    #[test]
    fn inversion_rejects_out_of_range() {
        let g = Generator::parse("f1", "x + 0.01").unwrap();
        // 1.05 exceeds f(1-) = 1.01.
        assert!(matches!(
            g.invert(1.05, 1e-12),
            Err(InvertError::NotInRange { .. })
        ));
    }
}
