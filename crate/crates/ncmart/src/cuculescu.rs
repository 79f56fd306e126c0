//! Cuculescu's stopping projections: the recursion
//! `q_k = q_{k-1} chi_{[0, lambda^2]}(q_{k-1} w_k q_{k-1})` for an adapted
//! sequence of positive operators, with numerically certified properties.

use serde::{Deserialize, Serialize};

use crate::algebra::{
    conditional_expectation, round_to_projection, spectral_projection, Filtration, HermitianEigen,
    Operator, TracialAlgebra,
};
use crate::{Error, Result};

/// Output of one Cuculescu recursion.
#[derive(Debug, Clone)]
pub struct CuculescuRun {
    pub lambda2: f64,
    /// `q_0 = 1, q_1, ..., q_N`.
    pub qs: Vec<Operator>,
    /// `q = /\_k q_k`, realized as the rounded `q_N`.
    pub q: Operator,
    /// Spectral-rounding perturbation logged at each step.
    pub roundings: Vec<f64>,
}

impl CuculescuRun {
    /// `q_k` with the `q_0 = 1` convention.
    pub fn q_at(&self, k: usize) -> &Operator {
        &self.qs[k]
    }
}

/// Largest defect observed for each certified Step-1 property.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuculescuCertificate {
    /// `||E_{k-1}(q_k) - q_k||_inf` (only when every `w_k` is
    /// `E_{k-1}`-measurable on input; otherwise `None`).
    pub measurability: Option<f64>,
    /// `||[q_k, q_{k-1} w_k q_{k-1}]||_inf`.
    pub commutation: f64,
    /// positive part of `q_k w_k q_k - lambda^2 q_k`.
    pub cutoff: f64,
    /// negative part of `sum_k (q_{k-1}-q_k) w_k (q_{k-1}-q_k) - lambda^2 (1-q)`.
    pub pasting: f64,
    /// `max_k ||q_k^2 - q_k||_inf`.
    pub idempotence: f64,
    /// `max_k ||q_N q_k - q_N||_inf`.
    pub nestedness: f64,
    /// The absolute tolerance scale `1e-8 (1 + lambda^2 + max_k ||w_k||)`.
    pub tolerance: f64,
}

impl CuculescuCertificate {
    pub fn passes(&self) -> bool {
        self.measurability.unwrap_or(0.0) <= self.tolerance
            && self.commutation <= self.tolerance
            && self.cutoff <= self.tolerance
            && self.pasting <= self.tolerance
            && self.idempotence <= self.tolerance
            && self.nestedness <= self.tolerance
    }
}

fn max_eigenvalue(x: &Operator) -> f64 {
    HermitianEigen::new_unchecked(x)
        .blocks
        .iter()
        .flat_map(|(v, _)| v.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn min_eigenvalue(x: &Operator) -> f64 {
    -max_eigenvalue(&x.scale(-1.0))
}

/// Runs the Cuculescu recursion on positive operators `w_1, ..., w_N`.
pub fn cuculescu(
    algebra: &TracialAlgebra,
    filtration: &Filtration,
    w: &[Operator],
    lambda2: f64,
) -> Result<CuculescuRun> {
    if lambda2 < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda^2 = {lambda2} < 0")));
    }
    if w.len() != filtration.levels() {
        return Err(Error::ShapeMismatch(format!(
            "{} operators vs {} filtration levels",
            w.len(),
            filtration.levels()
        )));
    }
    for wk in w {
        algebra.check_conforms(wk)?;
        let scale = 1.0 + wk.op_norm();
        let min_ev = min_eigenvalue(&wk.symmetrize());
        if min_ev < -1e-8 * scale {
            return Err(Error::NotPositive(min_ev));
        }
    }
    let mut qs = vec![algebra.identity()];
    let mut roundings = Vec::with_capacity(w.len());
    for wk in w {
        let q_prev = qs.last().unwrap();
        let a = q_prev.mul(wk).mul(q_prev).symmetrize();
        let chi = spectral_projection(&a, 0.0, lambda2)?;
        let raw = q_prev.mul(&chi).symmetrize();
        let (q_next, perturbation) = round_to_projection(&raw)?;
        roundings.push(perturbation);
        qs.push(q_next);
    }
    let q = qs.last().unwrap().clone();
    Ok(CuculescuRun {
        lambda2,
        qs,
        q,
        roundings,
    })
}

/// Certifies the four Step-1 properties of a run against its inputs.
pub fn certify(
    algebra: &TracialAlgebra,
    filtration: &Filtration,
    w: &[Operator],
    run: &CuculescuRun,
) -> Result<CuculescuCertificate> {
    let wmax = w.iter().map(|wk| wk.op_norm()).fold(0.0, f64::max);
    let tolerance = 1e-8 * (1.0 + run.lambda2 + wmax);

    // is each w_k already E_{k-1}-measurable?
    let mut inputs_measurable = true;
    for (i, wk) in w.iter().enumerate() {
        let e = conditional_expectation(algebra, filtration, wk, i)?;
        if e.sub(wk).op_norm() > tolerance {
            inputs_measurable = false;
            break;
        }
    }
    let measurability = if inputs_measurable {
        let mut worst = 0.0f64;
        for (i, _) in w.iter().enumerate() {
            let qk = &run.qs[i + 1];
            let e = conditional_expectation(algebra, filtration, qk, i)?;
            worst = worst.max(e.sub(qk).op_norm());
        }
        Some(worst)
    } else {
        None
    };

    let mut commutation = 0.0f64;
    let mut cutoff = 0.0f64;
    let mut idempotence = 0.0f64;
    let mut nestedness = 0.0f64;
    let mut paste_sum = algebra.zero();
    for (i, wk) in w.iter().enumerate() {
        let q_prev = &run.qs[i];
        let qk = &run.qs[i + 1];
        let a = q_prev.mul(wk).mul(q_prev).symmetrize();
        commutation = commutation.max(qk.mul(&a).sub(&a.mul(qk)).op_norm());
        let cut = qk.mul(wk).mul(qk).symmetrize().sub(&qk.scale(run.lambda2));
        cutoff = cutoff.max(max_eigenvalue(&cut).max(0.0));
        idempotence = idempotence.max(qk.mul(qk).sub(qk).op_norm());
        nestedness = nestedness.max(run.q.mul(qk).sub(&run.q).op_norm());
        let diff = q_prev.sub(qk);
        paste_sum = paste_sum.add(&diff.mul(wk).mul(&diff).symmetrize());
    }
    let pasting_gap = paste_sum.sub(
        &algebra
            .identity()
            .sub(&run.q)
            .scale(run.lambda2),
    );
    let pasting = (-min_eigenvalue(&pasting_gap)).max(0.0);

    Ok(CuculescuCertificate {
        measurability,
        commutation,
        cutoff,
        pasting,
        idempotence,
        nestedness,
        tolerance,
    })
}

/// Classical stopping-time oracle for diagonal instances: entry `i` of `q_k`
/// is 1 iff `w_j(i,i) <= lambda^2` for all `j <= k`.
pub fn scalar_stopping_qs(w_diags: &[Vec<f64>], lambda2: f64) -> Vec<Vec<f64>> {
    let n = w_diags.first().map_or(0, |v| v.len());
    let mut alive = vec![true; n];
    let mut out = vec![vec![1.0; n]];
    for wk in w_diags {
        for i in 0..n {
            if wk[i] > lambda2 {
                alive[i] = false;
            }
        }
        out.push(alive.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::{square_sq_from_entries, Martingale, SquareKind};
    use crate::verify::{dyadic_instance, random_positive};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn conditioned_partials(m: &Martingale) -> Vec<Operator> {
        (1..=m.len())
            .map(|k| {
                square_sq_from_entries(&m.algebra, &m.filtration, &m.diffs, SquareKind::ScCond, k)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn threshold_above_spectrum_keeps_identity() {
        let alg = TracialAlgebra::full(4);
        let filt = Filtration::Tensor { dims: vec![2, 2] };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let w: Vec<Operator> = (0..2).map(|_| random_positive(&alg, &mut rng)).collect();
        let top = w.iter().map(|x| x.op_norm()).fold(0.0, f64::max);
        let run = cuculescu(&alg, &filt, &w, top * 2.0 + 1.0).unwrap();
        for q in &run.qs {
            assert!(q.max_abs_diff(&alg.identity()) < 1e-12);
        }
    }

    #[test]
    fn zero_threshold_kills_positive_definite() {
        let alg = TracialAlgebra::full(4);
        let filt = Filtration::Tensor { dims: vec![2, 2] };
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        // g*g + 1 is strictly positive definite
        let w1 = random_positive(&alg, &mut rng).add(&alg.identity());
        let w2 = random_positive(&alg, &mut rng);
        let run = cuculescu(&alg, &filt, &[w1, w2], 0.0).unwrap();
        assert!(run.qs[1].op_norm() < 1e-12);
        assert!(run.qs[2].op_norm() < 1e-12);
        assert!(run.q.op_norm() < 1e-12);
    }

    #[test]
    fn properties_on_random_conditioned_sequences() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for seed in 0..6u64 {
            let alg = TracialAlgebra::full(8);
            let filt = Filtration::Tensor { dims: vec![2, 2, 2] };
            let x = crate::verify::random_operator(&alg, &mut rng);
            let m = Martingale::new(alg.clone(), filt.clone(), x).unwrap();
            let w = conditioned_partials(&m);
            let wmax = w.iter().map(|v| v.op_norm()).fold(0.0, f64::max);
            // thresholds spread through and beyond the spectrum
            for lambda2 in [wmax * 0.1, wmax * 0.5, wmax * 1.5] {
                let run = cuculescu(&alg, &filt, &w, lambda2).unwrap();
                let cert = certify(&alg, &filt, &w, &run).unwrap();
                assert!(cert.passes(), "seed {seed}: {cert:?}");
                assert!(cert.measurability.is_some(), "s_c partials are predictable");
            }
        }
    }

    #[test]
    fn commutative_matches_scalar_stopping_time() {
        for seed in [5u64, 6, 7] {
            let m = dyadic_instance(3, seed);
            let w = conditioned_partials(&m);
            let n = m.algebra.total_dim();
            let w_diags: Vec<Vec<f64>> = w
                .iter()
                .map(|op| (0..n).map(|i| op.blocks[0][(i, i)].re).collect())
                .collect();
            let wmax = w.iter().map(|v| v.op_norm()).fold(0.0, f64::max);
            for lambda2 in [wmax * 0.2, wmax * 0.7] {
                let run = cuculescu(&m.algebra, &m.filtration, &w, lambda2).unwrap();
                let oracle = scalar_stopping_qs(&w_diags, lambda2);
                for (k, qk) in run.qs.iter().enumerate() {
                    for i in 0..n {
                        assert!(
                            (qk.blocks[0][(i, i)].re - oracle[k][i]).abs() < 1e-12,
                            "level {k} entry {i}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let alg = TracialAlgebra::full(4);
        let filt = Filtration::Tensor { dims: vec![2, 2] };
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let w = vec![
            random_positive(&alg, &mut rng),
            random_positive(&alg, &mut rng),
        ];
        assert!(matches!(
            cuculescu(&alg, &filt, &w, -1.0),
            Err(Error::InvalidParameter(_))
        ));
        let neg = alg.identity().scale(-1.0);
        assert!(matches!(
            cuculescu(&alg, &filt, &[neg, alg.identity()], 1.0),
            Err(Error::NotPositive(_))
        ));
        assert!(matches!(
            cuculescu(&alg, &filt, &w[..1], 1.0),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
