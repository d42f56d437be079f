//! Radial profiles `t ↦ w(t)`, `t ↦ f(t)` given as expressions or sample tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError, Jet};

/// Sample tables need this many points for the 5-point derivative stencils.
pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("expression: {0}")]
    Expr(#[from] ExprError),
    #[error("sample table needs at least {MIN_SAMPLES} points, got {0}")]
    TooFewSamples(usize),
    #[error("sample table must have a positive span, got [{0}, {1}]")]
    BadSpan(f64, f64),
    #[error("sample {index} is not finite")]
    NotFinite { index: usize },
}

/// Values on the uniform grid `t_i = start + i (end - start) / (len - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    pub start: f64,
    pub end: f64,
    pub values: Vec<f64>,
}

impl SampleTable {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.values.len() < MIN_SAMPLES {
            return Err(ProfileError::TooFewSamples(self.values.len()));
        }
        if !(self.end > self.start) || !self.start.is_finite() || !self.end.is_finite() {
            return Err(ProfileError::BadSpan(self.start, self.end));
        }
        if let Some(index) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(ProfileError::NotFinite { index });
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.values.len() - 1) as f64
    }

    pub fn from_fn<F: Fn(f64) -> f64>(start: f64, end: f64, len: usize, f: F) -> Self {
        let h = (end - start) / (len - 1) as f64;
        let values = (0..len)
            .map(|i| {
                f(if i + 1 == len {
                    end
                } else {
                    start + i as f64 * h
                })
            })
            .collect();
        SampleTable { start, end, values }
    }
}

/// Sampled profile with node derivatives from 5-point stencils.
///
/// Value and slope come from the cubic Hermite interpolant through the node
/// values and stencil slopes; the second derivative is the linear interpolant
/// of the stencil second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    table: SampleTable,
    h: f64,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl SampledProfile {
    pub fn new(table: SampleTable) -> Result<Self, ProfileError> {
        table.validate()?;
        let h = table.step();
        let y = &table.values;
        let m = y.len();
        let mut d1 = vec![0.0; m];
        let mut d2 = vec![0.0; m];
        for i in 0..m {
            // Shift the stencil inward near the ends so it stays inside the table.
            let c = i.clamp(2, m - 3);
            let s = [y[c - 2], y[c - 1], y[c], y[c + 1], y[c + 2]];
            let x = i as f64 - c as f64;
            let (a, b) = stencil_weights(x);
            d1[i] = a.iter().zip(&s).map(|(w, v)| w * v).sum::<f64>() / h;
            d2[i] = b.iter().zip(&s).map(|(w, v)| w * v).sum::<f64>() / (h * h);
        }
        Ok(SampledProfile { table, h, d1, d2 })
    }

    pub fn table(&self) -> &SampleTable {
        &self.table
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.table.start, self.table.end)
    }

    pub fn jet(&self, t: f64) -> Jet {
        let y = &self.table.values;
        let m = y.len();
        let s = ((t - self.table.start) / self.h).clamp(0.0, (m - 1) as f64);
        let i = (s.floor() as usize).min(m - 2);
        let u = s - i as f64;
        let h = self.h;
        let (y0, y1) = (y[i], y[i + 1]);
        let (m0, m1) = (self.d1[i] * h, self.d1[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        let d = ((6.0 * u2 - 6.0 * u) * y0
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (-6.0 * u2 + 6.0 * u) * y1
            + (3.0 * u2 - 2.0 * u) * m1)
            / h;
        let dd = (1.0 - u) * self.d2[i] + u * self.d2[i + 1];
        Jet { v, d, dd }
    }
}

/// Weights of the first and second derivative at offset `x ∈ {-2,..,2}` from
/// the centre of a 5-point stencil with unit spacing.
fn stencil_weights(x: f64) -> ([f64; 5], [f64; 5]) {
    // Derivatives of the Lagrange basis on nodes -2..2 evaluated at x.
    let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut first = [0.0; 5];
    let mut second = [0.0; 5];
    for j in 0..5 {
        let denom: f64 = (0..5)
            .filter(|&k| k != j)
            .map(|k| nodes[j] - nodes[k])
            .product();
        let others: Vec<f64> = (0..5).filter(|&k| k != j).map(|k| nodes[k]).collect();
        // d/dx Π (x - o_k): sum over dropped factor.
        let mut s1 = 0.0;
        for a in 0..4 {
            s1 += (0..4)
                .filter(|&k| k != a)
                .map(|k| x - others[k])
                .product::<f64>();
        }
        let mut s2 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    s2 += (0..4)
                        .filter(|&k| k != a && k != b)
                        .map(|k| x - others[k])
                        .product::<f64>();
                }
            }
        }
        first[j] = s1 / denom;
        second[j] = s2 / denom;
    }
    (first, second)
}

/// A radial profile with two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Expr(Expr),
    Sampled(SampledProfile),
}

impl Profile {
    pub fn parse(src: &str) -> Result<Self, ProfileError> {
        Ok(Profile::Expr(Expr::parse(src)?))
    }

    pub fn constant(c: f64) -> Self {
        Profile::Expr(Expr::Const(c))
    }

    pub fn sampled(table: SampleTable) -> Result<Self, ProfileError> {
        Ok(Profile::Sampled(SampledProfile::new(table)?))
    }

    pub fn jet(&self, t: f64) -> Jet {
        match self {
            Profile::Expr(e) => e.jet(t),
            Profile::Sampled(s) => s.jet(t),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t).v
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Expr(e) => e.is_constant(),
            Profile::Sampled(s) => {
                let v = &s.table().values;
                v.iter().all(|x| *x == v[0])
            }
        }
    }
}

/// Shape-preserving (Fritsch–Carlson) cubic interpolant of a uniform table.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    table: SampleTable,
    h: f64,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(table: SampleTable) -> Result<Self, ProfileError> {
        if table.values.len() < 2 {
            return Err(ProfileError::TooFewSamples(table.values.len()));
        }
        if !(table.end > table.start) {
            return Err(ProfileError::BadSpan(table.start, table.end));
        }
        if let Some(index) = table.values.iter().position(|v| !v.is_finite()) {
            return Err(ProfileError::NotFinite { index });
        }
        let h = table.step();
        let y = &table.values;
        let m = y.len();
        let secants: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; m];
        slopes[0] = secants[0];
        slopes[m - 1] = secants[m - 2];
        for i in 1..m - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b <= 0.0 {
                0.0
            } else {
                2.0 * a * b / (a + b)
            };
        }
        // Endpoint slopes: limit to three times the adjacent secant.
        for (i, k) in [(0usize, 0usize), (m - 1, m - 2)] {
            let s = secants[k];
            if slopes[i] * s <= 0.0 {
                slopes[i] = 0.0;
            } else if slopes[i].abs() > 3.0 * s.abs() {
                slopes[i] = 3.0 * s;
            }
        }
        Ok(MonotoneCubic { table, h, slopes })
    }

    pub fn table(&self) -> &SampleTable {
        &self.table
    }

    pub fn eval(&self, t: f64) -> f64 {
        let y = &self.table.values;
        let m = y.len();
        let s = ((t - self.table.start) / self.h).clamp(0.0, (m - 1) as f64);
        let i = (s.floor() as usize).min(m - 2);
        let u = s - i as f64;
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y[i]
            + (u3 - 2.0 * u2 + u) * self.slopes[i] * self.h
            + (-2.0 * u3 + 3.0 * u2) * y[i + 1]
            + (u3 - u2) * self.slopes[i + 1] * self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_exact_on_quartics() {
        let f = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t.powi(3) - 0.1 * t.powi(4);
        let df = |t: f64| 1.0 - 4.0 * t + 1.5 * t * t - 0.4 * t.powi(3);
        let ddf = |t: f64| -4.0 + 3.0 * t - 1.2 * t * t;
        let p = SampledProfile::new(SampleTable::from_fn(0.0, 2.0, 9, f)).unwrap();
        for (i, t) in (0..9).map(|i| (i, 0.25 * i as f64)) {
            assert!((p.d1[i] - df(t)).abs() < 1e-11, "d1 at node {i}");
            assert!((p.d2[i] - ddf(t)).abs() < 1e-10, "d2 at node {i}");
        }
    }

    #[test]
    fn sampled_profile_converges() {
        let p = SampledProfile::new(SampleTable::from_fn(0.0, 2.0, 401, f64::cosh)).unwrap();
        for t in [0.0, 0.3, 1.234, 2.0] {
            let j = p.jet(t);
            assert!((j.v - t.cosh()).abs() < 1e-10);
            assert!((j.d - t.sinh()).abs() < 1e-8);
            assert!((j.dd - t.cosh()).abs() < 1e-5);
        }
    }

    #[test]
    fn short_tables_rejected() {
        let t = SampleTable {
            start: 0.0,
            end: 1.0,
            values: vec![1.0; 4],
        };
        assert_eq!(
            SampledProfile::new(t).unwrap_err(),
            ProfileError::TooFewSamples(4)
        );
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let table = SampleTable {
            start: 0.0,
            end: 4.0,
            values: vec![1.0, 1.0, 0.5, 0.01, 0.0],
        };
        let c = MonotoneCubic::new(table).unwrap();
        let mut prev = c.eval(0.0);
        for k in 1..=400 {
            let v = c.eval(k as f64 * 0.01);
            assert!(v <= prev + 1e-15);
            assert!(v >= -1e-15);
            prev = v;
        }
        assert_eq!(c.eval(2.0), 0.5);
    }
}
