//! Generalized singular-value step functions: decreasing rearrangements of
//! operator spectra, closed-form power integrals, and submajorization.

use serde::{Deserialize, Serialize};

use crate::algebra::{HermitianEigen, Operator, TracialAlgebra};
use crate::{Error, Result};

/// A decreasing right-continuous step function on `[0, domain_total)`,
/// identically zero beyond. Values are strictly decreasing and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepFunction {
    /// `(value, length)` pairs, values strictly decreasing, lengths positive.
    pub steps: Vec<(f64, f64)>,
}

impl StepFunction {
    /// Builds from arbitrary `(value, length)` samples: sorts decreasing,
    /// merges near-ties, drops zeros.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Self {
        let scale = samples
            .iter()
            .fold(0.0f64, |a, &(v, _)| a.max(v.abs()));
        let tol = 1e-9 * scale;
        let mut s: Vec<(f64, f64)> = samples
            .into_iter()
            .filter(|&(v, l)| v > tol && l > 0.0)
            .collect();
        s.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut steps: Vec<(f64, f64)> = Vec::with_capacity(s.len());
        for (v, l) in s {
            match steps.last_mut() {
                Some(last) if last.0 - v <= tol => last.1 += l,
                _ => steps.push((v, l)),
            }
        }
        StepFunction { steps }
    }

    pub fn is_zero(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn domain_total(&self) -> f64 {
        self.steps.iter().map(|&(_, l)| l).sum()
    }

    /// `sup f = f(0+)`.
    pub fn sup(&self) -> f64 {
        self.steps.first().map_or(0.0, |&(v, _)| v)
    }

    /// Right-continuous evaluation `f(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(v, l) in &self.steps {
            acc += l;
            if t < acc {
                return v;
            }
        }
        0.0
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        assert!(c >= 0.0);
        if c == 0.0 {
            return StepFunction { steps: vec![] };
        }
        StepFunction {
            steps: self.steps.iter().map(|&(v, l)| (c * v, l)).collect(),
        }
    }

    /// Pointwise power `f^p` (preserves decreasing order for p > 0).
    pub fn powf(&self, p: f64) -> StepFunction {
        StepFunction {
            steps: self.steps.iter().map(|&(v, l)| (v.powf(p), l)).collect(),
        }
    }

    /// Pointwise sum of two decreasing step functions.
    pub fn pointwise_add(&self, other: &StepFunction) -> StepFunction {
        let mut cuts: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for &(_, l) in &self.steps {
            acc += l;
            cuts.push(acc);
        }
        acc = 0.0;
        for &(_, l) in &other.steps {
            acc += l;
            cuts.push(acc);
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(1.0));
        let mut samples = Vec::with_capacity(cuts.len());
        let mut prev = 0.0;
        for c in cuts {
            if c - prev <= 0.0 {
                continue;
            }
            let mid = 0.5 * (prev + c);
            let v = self.eval(mid) + other.eval(mid);
            if v > 0.0 {
                samples.push((v, c - prev));
            }
            prev = c;
        }
        StepFunction::from_samples(samples)
    }

    /// Truncated shift `(f - s)_+` as a step function.
    pub fn shift_down(&self, s: f64) -> StepFunction {
        // direct construction: the slivers near s must survive so that
        // truncation costs stay exact
        StepFunction {
            steps: self
                .steps
                .iter()
                .filter(|&&(v, _)| v > s)
                .map(|&(v, l)| (v - s, l))
                .collect(),
        }
    }

    /// Breakpoints `t_i = l_1 + ... + l_i` of the domain partition.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.steps
            .iter()
            .map(|&(_, l)| {
                acc += l;
                acc
            })
            .collect()
    }
}

/// Generalized singular value `mu(x)`: singular values of `x` sorted
/// decreasing, each carrying the trace weight of its eigenspace.
pub fn mu(algebra: &TracialAlgebra, x: &Operator) -> Result<StepFunction> {
    algebra.check_conforms(x)?;
    Ok(StepFunction::from_samples(singular_values(algebra, x)))
}

/// `(singular value, weight)` pairs, unsorted.
pub fn singular_values(algebra: &TracialAlgebra, x: &Operator) -> Vec<(f64, f64)> {
    HermitianEigen::new_unchecked(&x.gram())
        .weighted_eigenvalues(algebra)
        .into_iter()
        .map(|(v, w)| (v.max(0.0).sqrt(), w))
        .collect()
}

/// Exact `int_0^upper f(u)^p du`.
pub fn integrate_power(f: &StepFunction, p: f64, upper: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("power p = {p} must be > 0")));
    }
    let mut acc = 0.0;
    let mut t = 0.0;
    for &(v, l) in &f.steps {
        let overlap = (upper - t).min(l).max(0.0);
        acc += v.powf(p) * overlap;
        t += l;
        if t >= upper {
            break;
        }
    }
    Ok(acc)
}

/// `int_a^b f(u)^p du`.
pub fn integrate_power_between(f: &StepFunction, p: f64, a: f64, b: f64) -> Result<f64> {
    Ok(integrate_power(f, p, b)? - integrate_power(f, p, a)?)
}

/// Submajorization `f ≺≺ g`: partial integrals of `f` below those of `g` at
/// every breakpoint of either function.
pub fn submajorizes(g: &StepFunction, f: &StepFunction) -> bool {
    let scale = f.sup().max(g.sup()).max(1e-300);
    let mut cuts = f.breakpoints();
    cuts.extend(g.breakpoints());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.iter().all(|&t| {
        let lf = integrate_power(f, 1.0, t).unwrap();
        let lg = integrate_power(g, 1.0, t).unwrap();
        lf <= lg + 1e-9 * scale * (1.0 + t)
    })
}
