//! Symmetric (quasi-)norms on step functions: L_p, Lorentz L_{p,q}, Orlicz,
//! Orlicz-Lorentz L_{Phi,r}, generalized Lorentz Lambda^r(phi), and the
//! rho-function of the F_{rho,q} interpolation parameter.

use serde::{Deserialize, Serialize};

use crate::algebra::{Operator, TracialAlgebra};
use crate::rearrangement::{singular_values, StepFunction};
use crate::{Error, Result};

/// Serialize/deserialize `f64` allowing the string `"inf"` for infinity
/// (JSON has no infinity literal).
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad float: {s}"))),
        }
    }
}

/// A parametric Orlicz function with certified convexity/concavity exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OrliczFunction {
    /// `Phi(t) = t^p`, both p-convex and p-concave.
    Power { p: f64 },
    /// `Phi(t) = t^p` for `t <= 1` and `(p/q) t^q + 1 - p/q` for `t > 1`,
    /// with `0 < p <= q`; C^1 at the junction, p-convex and q-concave.
    TwoPower { p: f64, q: f64 },
}

impl OrliczFunction {
    pub fn validate(&self) -> Result<()> {
        let (p, q) = self.exponents();
        if !(p > 0.0) || !(q >= p) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Orlicz exponents (p, q) = ({p}, {q}) need 0 < p <= q < inf"
            )));
        }
        Ok(())
    }

    /// Declared (p-convexity, q-concavity) exponents.
    pub fn exponents(&self) -> (f64, f64) {
        match *self {
            OrliczFunction::Power { p } => (p, p),
            OrliczFunction::TwoPower { p, q } => (p, q),
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        match *self {
            OrliczFunction::Power { p } => t.powf(p),
            OrliczFunction::TwoPower { p, q } => {
                if t <= 1.0 {
                    t.powf(p)
                } else {
                    (p / q) * t.powf(q) + 1.0 - p / q
                }
            }
        }
    }

    pub fn phi_inv(&self, s: f64) -> f64 {
        match *self {
            OrliczFunction::Power { p } => s.powf(1.0 / p),
            OrliczFunction::TwoPower { p, q } => {
                if s <= 1.0 {
                    s.powf(1.0 / p)
                } else {
                    ((s - 1.0 + p / q) * q / p).powf(1.0 / q)
                }
            }
        }
    }
}

/// Orlicz theta-transform: `Phi_0` with `Phi_0^{-1} = (Phi^{-1})^{1-theta}`.
/// Both built-in families are closed under the transform, with exponents
/// scaling to `(p/(1-theta), q/(1-theta))`.
pub fn theta_transform(phi: &OrliczFunction, theta: f64) -> Result<OrliczFunction> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} not in (0,1)")));
    }
    let s = 1.0 - theta;
    Ok(match *phi {
        OrliczFunction::Power { p } => OrliczFunction::Power { p: p / s },
        OrliczFunction::TwoPower { p, q } => OrliczFunction::TwoPower { p: p / s, q: q / s },
    })
}

/// A weight in the class `Q[a_1, a_2]`: `t^{-a_1} phi(t)` nondecreasing and
/// `t^{-a_2} phi(t)` nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weight", rename_all = "snake_case")]
pub enum WeightFunction {
    /// `phi(t) = t^a`, class `Q[a, a]`.
    Power { a: f64 },
    /// Log-grid samples with log-linear (i.e. per-segment power) interpolation;
    /// extrapolated with exponent `a1` below the grid and `a2` above.
    Sampled {
        ts: Vec<f64>,
        vals: Vec<f64>,
        a1: f64,
        a2: f64,
    },
}

impl WeightFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFunction::Power { a } => {
                if !(*a > 0.0) || !a.is_finite() {
                    return Err(Error::InvalidParameter(format!("weight exponent {a} must be > 0")));
                }
            }
            WeightFunction::Sampled { ts, vals, a1, a2 } => {
                if !(*a1 > 0.0 && *a2 >= *a1) {
                    return Err(Error::InvalidParameter(format!(
                        "class bounds [{a1}, {a2}] need 0 < a1 <= a2"
                    )));
                }
                if ts.len() != vals.len() || ts.len() < 2 {
                    return Err(Error::InvalidParameter("sampled weight needs >= 2 grid points".into()));
                }
                for w in ts.windows(2) {
                    if !(w[1] > w[0]) || !(w[0] > 0.0) {
                        return Err(Error::InvalidParameter("weight grid must be positive increasing".into()));
                    }
                }
                for (w, v) in ts.windows(2).zip(vals.windows(2)) {
                    if !(v[0] > 0.0) || !(v[1] > 0.0) {
                        return Err(Error::InvalidParameter("weight values must be positive".into()));
                    }
                    // per-segment exponent must sit in [a1, a2]
                    let a = (v[1] / v[0]).ln() / (w[1] / w[0]).ln();
                    if a < a1 - 1e-12 || a > a2 + 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "sampled weight leaves class Q[{a1},{a2}]: local exponent {a}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WeightFunction::Power { a } => t.powf(*a),
            WeightFunction::Sampled { ts, vals, a1, a2 } => {
                if t <= ts[0] {
                    return vals[0] * (t / ts[0]).powf(*a1);
                }
                if t >= *ts.last().unwrap() {
                    return vals.last().unwrap() * (t / ts.last().unwrap()).powf(*a2);
                }
                let i = ts.partition_point(|&u| u <= t) - 1;
                let a = (vals[i + 1] / vals[i]).ln() / (ts[i + 1] / ts[i]).ln();
                vals[i] * (t / ts[i]).powf(a)
            }
        }
    }

    /// Power-segment decomposition of `(lo, hi)`: pieces `(x0, x1, c, a)` with
    /// `phi(t) = c t^a` on each.
    fn segments(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64, f64)> {
        match self {
            WeightFunction::Power { a } => vec![(lo, hi, 1.0, *a)],
            WeightFunction::Sampled { ts, vals, a1, a2 } => {
                let mut cuts = vec![lo];
                for &t in ts {
                    if t > lo && t < hi {
                        cuts.push(t);
                    }
                }
                cuts.push(hi);
                let mut out = Vec::new();
                for w in cuts.windows(2) {
                    let (x0, x1) = (w[0], w[1]);
                    if !(x1 > x0) {
                        continue;
                    }
                    let mid = (x0 * x1).sqrt();
                    let a = if mid <= ts[0] {
                        *a1
                    } else if mid >= *ts.last().unwrap() {
                        *a2
                    } else {
                        let i = ts.partition_point(|&u| u <= mid) - 1;
                        (vals[i + 1] / vals[i]).ln() / (ts[i + 1] / ts[i]).ln()
                    };
                    // anchor at x1 (> 0 even when the piece starts at 0)
                    let c = self.eval(x1) / x1.powf(a);
                    out.push((x0, x1, c, a));
                }
                out
            }
        }
    }
}

/// A symmetric (quasi-)norm specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum SpaceSpec {
    Lp {
        #[serde(with = "maybe_inf")]
        p: f64,
    },
    Lorentz {
        #[serde(with = "maybe_inf")]
        p: f64,
        #[serde(with = "maybe_inf")]
        q: f64,
    },
    Orlicz {
        phi: OrliczFunction,
    },
    OrliczLorentz {
        phi: OrliczFunction,
        #[serde(with = "maybe_inf")]
        r: f64,
    },
    GenLorentz {
        weight: WeightFunction,
        #[serde(with = "maybe_inf")]
        r: f64,
    },
}

impl SpaceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Lp { p } => {
                if !(*p > 0.0) {
                    return Err(Error::InvalidParameter(format!("Lp with p = {p}")));
                }
            }
            SpaceSpec::Lorentz { p, q } => {
                if !(*p > 0.0 && *q > 0.0) || (p.is_infinite() && q.is_finite()) {
                    return Err(Error::InvalidParameter(format!("Lorentz with (p,q) = ({p},{q})")));
                }
            }
            SpaceSpec::Orlicz { phi } => phi.validate()?,
            SpaceSpec::OrliczLorentz { phi, r } => {
                phi.validate()?;
                if !(*r > 0.0) {
                    return Err(Error::InvalidParameter(format!("Orlicz-Lorentz with r = {r}")));
                }
            }
            SpaceSpec::GenLorentz { weight, r } => {
                weight.validate()?;
                if !(*r > 0.0) {
                    return Err(Error::InvalidParameter(format!("generalized Lorentz with r = {r}")));
                }
            }
        }
        Ok(())
    }

    /// Convenience constructor for L_p.
    pub fn lp(p: f64) -> SpaceSpec {
        SpaceSpec::Lp { p }
    }
}

/// Symmetric norm of a step function.
pub fn norm(spec: &SpaceSpec, f: &StepFunction) -> Result<f64> {
    spec.validate()?;
    if f.is_zero() {
        return Ok(0.0);
    }
    match spec {
        SpaceSpec::Lp { p } => {
            if p.is_infinite() {
                Ok(f.sup())
            } else {
                Ok(crate::rearrangement::integrate_power(f, *p, f64::INFINITY)?.powf(1.0 / p))
            }
        }
        SpaceSpec::Lorentz { p, q } => {
            if p.is_infinite() {
                return Ok(f.sup());
            }
            let cuts = f.breakpoints();
            if q.is_infinite() {
                Ok(f
                    .steps
                    .iter()
                    .zip(&cuts)
                    .map(|(&(v, _), &t)| v * t.powf(1.0 / p))
                    .fold(0.0, f64::max))
            } else {
                // (int_0^inf (t^{1/p} mu_t)^q dt/t)^{1/q}, exact per step
                let mut acc = 0.0;
                let mut prev = 0.0f64;
                for (&(v, _), &t) in f.steps.iter().zip(&cuts) {
                    acc += v.powf(*q) * (p / q) * (t.powf(q / p) - prev.powf(q / p));
                    prev = t;
                }
                Ok(acc.powf(1.0 / q))
            }
        }
        SpaceSpec::Orlicz { phi } => luxemburg_norm(phi, f),
        SpaceSpec::OrliczLorentz { phi, r } => {
            let cuts = f.breakpoints();
            if r.is_infinite() {
                Ok(f
                    .steps
                    .iter()
                    .zip(&cuts)
                    .map(|(&(v, _), &t)| v / phi.phi_inv(1.0 / t))
                    .fold(0.0, f64::max))
            } else {
                // r int_0^inf (t ||chi_{f>t}||_Phi)^r dt/t with piecewise
                // constant distribution function
                let mut acc = 0.0;
                for (i, (&(v, _), &t)) in f.steps.iter().zip(&cuts).enumerate() {
                    let v_next = f.steps.get(i + 1).map_or(0.0, |&(u, _)| u);
                    let c = 1.0 / phi.phi_inv(1.0 / t);
                    acc += c.powf(*r) * (v.powf(*r) - v_next.powf(*r));
                }
                Ok(acc.powf(1.0 / r))
            }
        }
        SpaceSpec::GenLorentz { weight, r } => {
            let cuts = f.breakpoints();
            if r.is_infinite() {
                // phi has positive class exponents, so the sup on each step
                // interval is approached at its right end
                Ok(f
                    .steps
                    .iter()
                    .zip(&cuts)
                    .map(|(&(v, _), &t)| v * weight.eval(t))
                    .fold(0.0, f64::max))
            } else {
                let mut acc = 0.0;
                let mut prev = 0.0;
                for (&(v, _), &t) in f.steps.iter().zip(&cuts) {
                    for (x0, x1, c, a) in weight.segments(prev, t) {
                        // int_x0^x1 (v c t^a)^r dt/t
                        let ar = a * r;
                        acc += (v * c).powf(*r) * (x1.powf(ar) - x0.powf(ar)) / ar;
                    }
                    prev = t;
                }
                Ok(acc.powf(1.0 / r))
            }
        }
    }
}

/// Orlicz modular `I_Phi(f) = sum length * Phi(value)`.
pub fn orlicz_modular_step(phi: &OrliczFunction, f: &StepFunction) -> f64 {
    f.steps.iter().map(|&(v, l)| l * phi.phi(v)).sum()
}

/// Operator Orlicz modular `tau[Phi(|x|)]`.
pub fn orlicz_modular(phi: &OrliczFunction, algebra: &TracialAlgebra, x: &Operator) -> f64 {
    singular_values(algebra, x)
        .into_iter()
        .map(|(s, w)| w * phi.phi(s))
        .sum()
}

/// Luxemburg norm by bisection on `I_Phi(f/c) = 1`.
fn luxemburg_norm(phi: &OrliczFunction, f: &StepFunction) -> Result<f64> {
    let modular = |c: f64| orlicz_modular_step(phi, &f.scale(1.0 / c));
    let mut lo = f.sup();
    let mut hi = lo;
    // grow the bracket geometrically: modular decreasing in c
    let mut grew = 0;
    while modular(lo) < 1.0 {
        lo *= 0.5;
        grew += 1;
        if grew > 2100 || lo == 0.0 {
            // modular stays below 1 for every c: the norm is 0 only for f = 0,
            // which was handled; otherwise the bracket failed
            return Err(Error::BracketFailure);
        }
    }
    grew = 0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        grew += 1;
        if grew > 2100 || !hi.is_finite() {
            return Err(Error::BracketFailure);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-10 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form Luxemburg norm of an indicator of measure `len`.
pub fn indicator_orlicz_norm(phi: &OrliczFunction, len: f64) -> f64 {
    1.0 / phi.phi_inv(1.0 / len)
}

/// K-functional of the couple `(E, L_inf)` on a step function:
/// `inf_{s >= 0} ||(f - s)_+||_E + t s`, minimized over the breakpoint values
/// of `f` refined by golden-section search between adjacent breakpoints.
pub fn truncation_k(spec: &SpaceSpec, f: &StepFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("truncation scale t = {t} must be > 0")));
    }
    spec.validate()?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let cost = |s: f64| -> Result<f64> { Ok(norm(spec, &f.shift_down(s))? + t * s) };
    let mut knots: Vec<f64> = vec![0.0];
    knots.extend(f.steps.iter().rev().map(|&(v, _)| v));
    let mut best = f64::INFINITY;
    for &s in &knots {
        best = best.min(cost(s)?);
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (cost(c)?, cost(d)?);
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = cost(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = cost(d)?;
            }
            if b - a <= 1e-12 * (1.0 + b) {
                break;
            }
        }
        best = best.min(fc.min(fd));
    }
    Ok(best)
}

/// The F_{rho,q} interpolation parameter with a power rho.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FParam {
    /// `rho(u) = u^theta`, `theta` in `(0,1)` (class `Q(0,1)`).
    pub theta: f64,
    #[serde(with = "maybe_inf")]
    pub q: f64,
}

/// `rho(t) = t ||chi_{(t,inf)}||_F + ||u chi_{(0,t)}(u)||_F` for
/// `F = F_{rho0,q}` with `rho0(u) = u^theta`; closed form
/// `t^{1-theta} [(theta q)^{-1/q} + ((1-theta) q)^{-1/q}]`.
pub fn rho_function(fparam: &FParam, t: f64) -> Result<f64> {
    let th = fparam.theta;
    if !(th > 0.0 && th < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rho exponent {th} not in (0,1): F-terms diverge"
        )));
    }
    if !(fparam.q > 0.0) {
        return Err(Error::InvalidParameter(format!("F-parameter q = {}", fparam.q)));
    }
    let coeff = if fparam.q.is_infinite() {
        2.0
    } else {
        (th * fparam.q).powf(-1.0 / fparam.q) + ((1.0 - th) * fparam.q).powf(-1.0 / fparam.q)
    };
    Ok(t.powf(1.0 - th) * coeff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrangement::{integrate_power, mu};
    use crate::verify::random_operator;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_step(rng: &mut ChaCha20Rng, n: usize) -> StepFunction {
        StepFunction::from_samples(
            (0..n)
                .map(|_| (rng.gen::<f64>() * 4.0, rng.gen::<f64>() + 0.05))
                .collect(),
        )
    }

    #[test]
    fn indicator_norms() {
        let f = StepFunction {
            steps: vec![(1.0, 0.7)],
        };
        for &p in &[0.5, 1.0, 2.0, 4.0] {
            let n = norm(&SpaceSpec::Lp { p }, &f).unwrap();
            assert!((n - 0.7f64.powf(1.0 / p)).abs() < 1e-12);
            let o = norm(
                &SpaceSpec::Orlicz {
                    phi: OrliczFunction::Power { p },
                },
                &f,
            )
            .unwrap();
            assert!((o - 0.7f64.powf(1.0 / p)).abs() < 1e-9);
        }
    }

    #[test]
    fn lorentz_pp_equals_lp() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for &p in &[0.5, 1.0, 2.0, 4.0] {
            for _ in 0..5 {
                let f = random_step(&mut rng, 6);
                let a = norm(&SpaceSpec::Lorentz { p, q: p }, &f).unwrap();
                let b = norm(&SpaceSpec::Lp { p }, &f).unwrap();
                assert!((a - b).abs() <= 1e-9 * (1.0 + b));
            }
        }
    }

    #[test]
    fn lorentz_weak_matches_grid_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..5 {
            let f = random_step(&mut rng, 6);
            let p = 1.5;
            let exact = norm(&SpaceSpec::Lorentz { p, q: f64::INFINITY }, &f).unwrap();
            let total = f.domain_total();
            let oracle = (0..200_000)
                .map(|i| {
                    let t = (i as f64 + 0.999_999) * total / 200_000.0;
                    t.powf(1.0 / p) * f.eval(t - 1e-12)
                })
                .fold(0.0f64, f64::max);
            assert!(exact >= oracle - 1e-6);
            assert!(exact <= oracle + 1e-4 * (1.0 + exact));
        }
    }

    #[test]
    fn orlicz_lorentz_power_is_lorentz_with_constant() {
        // Phi(t) = t^p gives L_{Phi,r} = L_{p,r} with ratio (r/p)^{1/r} in
        // these conventions
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for &(p, r) in &[(1.0, 2.0), (2.0, 1.0), (1.5, 3.0), (2.0, 2.0)] {
            for _ in 0..4 {
                let f = random_step(&mut rng, 5);
                let ol = norm(
                    &SpaceSpec::OrliczLorentz {
                        phi: OrliczFunction::Power { p },
                        r,
                    },
                    &f,
                )
                .unwrap();
                let lo = norm(&SpaceSpec::Lorentz { p, q: r }, &f).unwrap();
                let expected = (r / p).powf(1.0 / r);
                assert!((ol / lo - expected).abs() <= 1e-9 * (1.0 + expected));
            }
        }
    }

    #[test]
    fn luxemburg_matches_indicator_closed_form() {
        let phi = OrliczFunction::TwoPower { p: 1.0, q: 2.0 };
        for &len in &[0.3, 1.0, 2.5, 10.0] {
            let f = StepFunction {
                steps: vec![(1.0, len)],
            };
            let n = norm(&SpaceSpec::Orlicz { phi: phi.clone() }, &f).unwrap();
            let cf = indicator_orlicz_norm(&phi, len);
            assert!((n - cf).abs() <= 1e-8 * (1.0 + cf));
        }
    }

    #[test]
    fn orlicz_homogeneity_and_modular_agreement() {
        let phi = OrliczFunction::TwoPower { p: 1.0, q: 2.0 };
        let alg = TracialAlgebra::new(vec![(3, 1.0), (2, 0.4)]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..4 {
            let x = random_operator(&alg, &mut rng);
            let f = mu(&alg, &x).unwrap();
            let a = orlicz_modular(&phi, &alg, &x);
            let b = orlicz_modular_step(&phi, &f);
            assert!((a - b).abs() <= 1e-10 * (1.0 + a));
            let n1 = norm(&SpaceSpec::Orlicz { phi: phi.clone() }, &f).unwrap();
            let n3 = norm(&SpaceSpec::Orlicz { phi: phi.clone() }, &f.scale(3.0)).unwrap();
            assert!((n3 - 3.0 * n1).abs() <= 1e-8 * (1.0 + n1));
        }
    }

    #[test]
    fn two_power_convexity_concavity_sampled() {
        let phi = OrliczFunction::TwoPower { p: 0.7, q: 2.5 };
        let (p, q) = phi.exponents();
        let grid: Vec<f64> = (1..200).map(|i| 0.05 * i as f64).collect();
        for w in grid.windows(3) {
            // second differences of t -> Phi(t^{1/p}) on an equispaced grid
            let g = |t: f64| phi.phi(t.powf(1.0 / p));
            assert!(g(w[0]) + g(w[2]) - 2.0 * g(w[1]) >= -1e-9);
            let h = |t: f64| phi.phi(t.powf(1.0 / q));
            assert!(h(w[0]) + h(w[2]) - 2.0 * h(w[1]) <= 1e-9);
        }
        // inverse really inverts
        for &t in &[0.1, 0.9, 1.0, 1.5, 7.0] {
            assert!((phi.phi_inv(phi.phi(t)) - t).abs() < 1e-10);
        }
    }

    #[test]
    fn theta_transform_grid_identity() {
        let phi = OrliczFunction::TwoPower { p: 1.0, q: 2.0 };
        let phi0 = theta_transform(&phi, 0.5).unwrap();
        for i in 1..100 {
            let s = 0.1 * i as f64;
            assert!((phi0.phi_inv(s) - phi.phi_inv(s).sqrt()).abs() <= 1e-9 * (1.0 + phi0.phi_inv(s)));
        }
        let pw = theta_transform(&OrliczFunction::Power { p: 2.0 }, 0.25).unwrap();
        assert_eq!(pw, OrliczFunction::Power { p: 2.0 / 0.75 });
        assert!(theta_transform(&phi, 1.0).is_err());
    }

    #[test]
    fn lattice_monotonicity() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let specs: Vec<SpaceSpec> = vec![
            SpaceSpec::Lp { p: 1.3 },
            SpaceSpec::Lorentz { p: 2.0, q: 1.0 },
            SpaceSpec::Orlicz {
                phi: OrliczFunction::TwoPower { p: 1.0, q: 2.0 },
            },
            SpaceSpec::OrliczLorentz {
                phi: OrliczFunction::TwoPower { p: 1.0, q: 2.0 },
                r: 2.0,
            },
            SpaceSpec::GenLorentz {
                weight: WeightFunction::Power { a: 0.4 },
                r: 2.0,
            },
        ];
        for _ in 0..4 {
            let f = random_step(&mut rng, 5);
            // g >= f pointwise: same lengths, larger values
            let g = StepFunction {
                steps: f.steps.iter().map(|&(v, l)| (v + 0.3, l)).collect(),
            };
            for spec in &specs {
                let nf = norm(spec, &f).unwrap();
                let ng = norm(spec, &g).unwrap();
                assert!(nf <= ng + 1e-9 * (1.0 + ng), "{spec:?}");
            }
        }
    }

    #[test]
    fn gen_lorentz_power_closed_form() {
        let f = StepFunction {
            steps: vec![(2.0, 1.0), (1.0, 3.0)],
        };
        let a = 0.4;
        let r = 2.0;
        let exact = norm(
            &SpaceSpec::GenLorentz {
                weight: WeightFunction::Power { a },
                r,
            },
            &f,
        )
        .unwrap();
        let ar = a * r;
        let manual = (2.0f64.powf(r) * 1.0f64.powf(ar) / ar
            + 1.0f64.powf(r) * (4.0f64.powf(ar) - 1.0) / ar)
            .powf(1.0 / r);
        assert!((exact - manual).abs() < 1e-12);
        // sampled weight that encodes the same power matches
        let sampled = WeightFunction::Sampled {
            ts: vec![0.5, 1.0, 2.0, 4.0],
            vals: vec![
                0.5f64.powf(a),
                1.0,
                2.0f64.powf(a),
                4.0f64.powf(a),
            ],
            a1: a,
            a2: a,
        };
        let via_sampled = norm(&SpaceSpec::GenLorentz { weight: sampled, r }, &f).unwrap();
        assert!((via_sampled - exact).abs() < 1e-10);
    }

    #[test]
    fn truncation_k_l1_exact() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_step(&mut rng, 6);
            for &t in &[0.1, 0.7, 2.0, 10.0] {
                let k = truncation_k(&SpaceSpec::Lp { p: 1.0 }, &f, t).unwrap();
                let exact = integrate_power(&f, 1.0, t).unwrap();
                assert!((k - exact).abs() <= 1e-10 * (1.0 + exact));
            }
        }
    }

    #[test]
    fn truncation_k_indicator_lp() {
        let f = StepFunction {
            steps: vec![(1.0, 0.8)],
        };
        for &(p, t) in &[(2.0, 0.5), (2.0, 2.0), (1.5, 0.9)] {
            let k = truncation_k(&SpaceSpec::Lp { p }, &f, t).unwrap();
            let expected = 0.8f64.powf(1.0 / p).min(t);
            assert!((k - expected).abs() <= 1e-9 * (1.0 + expected));
        }
    }

    #[test]
    fn truncation_k_l2_bracket() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..50 {
            let f = random_step(&mut rng, 7);
            for &t in &[0.3, 1.0, 3.0] {
                let k = truncation_k(&SpaceSpec::Lp { p: 2.0 }, &f, t).unwrap();
                let reference = integrate_power(&f, 2.0, t * t).unwrap().sqrt();
                assert!(k >= reference * (1.0 - 1e-9));
                assert!(k <= 2.0 * reference * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn rho_function_power_forms() {
        // q = inf: both terms equal t^{1-theta}
        let r = rho_function(&FParam { theta: 0.3, q: f64::INFINITY }, 2.0).unwrap();
        assert!((r - 2.0 * 2.0f64.powf(0.7)).abs() < 1e-12);
        // finite q: symbolic integration of both power terms
        let (theta, q) = (0.5f64, 2.0f64);
        let t = 1.7f64;
        let term1 = t * ((theta * q).powf(-1.0 / q)) * t.powf(-theta);
        let term2 = (((1.0 - theta) * q).powf(-1.0 / q)) * t.powf(1.0 - theta);
        let r = rho_function(&FParam { theta, q }, t).unwrap();
        assert!((r - (term1 + term2)).abs() < 1e-12);
        // rho(0+) -> 0, nondecreasing
        assert!(rho_function(&FParam { theta, q }, 1e-12).unwrap() < 1e-5);
        assert!(rho_function(&FParam { theta: 1.2, q }, 1.0).is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let specs = vec![
            SpaceSpec::Lorentz { p: 1.5, q: 3.0 },
            SpaceSpec::Lorentz { p: 2.0, q: f64::INFINITY },
            SpaceSpec::Orlicz {
                phi: OrliczFunction::TwoPower { p: 1.0, q: 2.0 },
            },
            SpaceSpec::GenLorentz {
                weight: WeightFunction::Power { a: 0.4 },
                r: 2.0,
            },
        ];
        for s in specs {
            let j = serde_json::to_string(&s).unwrap();
            let back: SpaceSpec = serde_json::from_str(&j).unwrap();
            assert_eq!(s, back);
        }
    }
}
