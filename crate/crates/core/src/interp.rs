//! Monotone cubic interpolation through sampled values.
//!
//! [`SampledMonotoneMap`] represents a strictly increasing function known
//! only at finitely many nodes. Between nodes it uses cubic Hermite
//! segments whose node slopes are the Fritsch–Butland weighted harmonic
//! means of the adjacent secants; this keeps every segment monotone, so
//! the map is invertible on its range and inverse evaluation is a cell
//! lookup plus a safeguarded root find.

use thiserror::Error;

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum InterpError {
    #[error("need at least two nodes, got {count}")]
    TooFewNodes { count: usize },
    #[error("node lists have different lengths ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("{axis} values must be finite and strictly increasing (index {index})")]
    NotIncreasing { axis: &'static str, index: usize },
    #[error("{value} outside interpolation range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
}

/// A strictly increasing map stored as interpolation nodes.
#[derive(Clone, Debug)]
pub struct SampledMonotoneMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

fn check_increasing(v: &[f64], axis: &'static str) -> Result<(), InterpError> {
    for (i, w) in v.windows(2).enumerate() {
        if !w[0].is_finite() || !(w[0] < w[1]) {
            return Err(InterpError::NotIncreasing { axis, index: i + 1 });
        }
    }
    if let Some(last) = v.last() {
        if !last.is_finite() {
            return Err(InterpError::NotIncreasing { axis, index: v.len() - 1 });
        }
    }
    Ok(())
}

impl SampledMonotoneMap {
    /// Builds the interpolant through `(xs[i], ys[i])`. Both lists must be
    /// finite and strictly increasing, with at least two nodes.
    pub fn from_nodes(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, InterpError> {
        if xs.len() != ys.len() {
            return Err(InterpError::LengthMismatch { xs: xs.len(), ys: ys.len() });
        }
        if xs.len() < 2 {
            return Err(InterpError::TooFewNodes { count: xs.len() });
        }
        check_increasing(&xs, "x")?;
        check_increasing(&ys, "y")?;

        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = d[0];
        slopes[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            // Weighted harmonic mean of the two secants; bounded by
            // 3 * min(d[i-1], d[i]), which keeps each cubic monotone.
            slopes[i] = 3.0 * (h[i - 1] + h[i])
                / ((2.0 * h[i] + h[i - 1]) / d[i - 1] + (h[i] + 2.0 * h[i - 1]) / d[i]);
        }
        Ok(SampledMonotoneMap { xs, ys, slopes })
    }

    /// Inverse map as nodes: swaps the two axes.
    pub fn swapped(&self) -> SampledMonotoneMap {
        SampledMonotoneMap::from_nodes(self.ys.clone(), self.xs.clone())
            .expect("swapping strictly increasing nodes stays valid")
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.ys
    }

    /// Closed interval of valid inputs.
    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Closed interval of attained values.
    pub fn y_range(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    fn cell_of(&self, x: f64) -> usize {
        // Largest i with xs[i] <= x, clamped so i+1 is a valid node.
        let i = self.xs.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    fn eval_in_cell(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let deriv = (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1;
        (value, deriv)
    }

    pub fn eval(&self, x: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.x_range();
        if !(x >= lo && x <= hi) {
            return Err(InterpError::OutOfRange { value: x, lo, hi });
        }
        Ok(self.eval_in_cell(self.cell_of(x), x).0)
    }

    /// One-sided derivative of the interpolant (nonnegative everywhere).
    pub fn eval_df(&self, x: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.x_range();
        if !(x >= lo && x <= hi) {
            return Err(InterpError::OutOfRange { value: x, lo, hi });
        }
        Ok(self.eval_in_cell(self.cell_of(x), x).1)
    }

    /// Solves `eval(x) = y`. Bisection safeguarded by Newton steps inside
    /// the bracketing cell; the result satisfies `|eval(x) - y|` at the
    /// level of floating-point roundoff for the cell.
    pub fn eval_inverse(&self, y: f64) -> Result<f64, InterpError> {
        let (ylo, yhi) = self.y_range();
        if !(y >= ylo && y <= yhi) {
            return Err(InterpError::OutOfRange { value: y, lo: ylo, hi: yhi });
        }
        let i = {
            let j = self.ys.partition_point(|&v| v <= y);
            j.saturating_sub(1).min(self.ys.len() - 2)
        };
        let (mut a, mut b) = (self.xs[i], self.xs[i + 1]);
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let (v, dv) = self.eval_in_cell(i, x);
            if v == y || (b - a) <= f64::EPSILON * (1.0 + x.abs()) {
                return Ok(x);
            }
            if v < y {
                a = x;
            } else {
                b = x;
            }
            let newton = x - (v - y) / dv;
            x = if dv > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        Ok(x)
    }
}
