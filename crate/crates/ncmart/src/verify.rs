//! Seeded instance generation and the inequality/identity verification
//! harness: K-closedness sandwiches, interpolation-identity brackets, dual
//! Doob, Stein / Lepingle-Yor, square-function comparisons, and Davis
//! inclusions, aggregated into deterministic suite reports.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{conditional_expectation, Filtration, Operator, TracialAlgebra};
use crate::cuculescu::cuculescu;
use crate::jones::{
    jones_decompose_with_lambda, k_ref, lambda_for, real_interp_norm, sandwich_constant,
    DecompInput, DecompKind, KCurve,
};
use crate::martingale::{
    bmo_c_norm, diagonal_mu, hardy_norm, square_sq_from_entries, HardyKind, Martingale,
    SequenceBundle, SquareKind,
};
use crate::rearrangement::{mu, StepFunction};
use crate::symspaces::{
    norm, orlicz_modular, theta_transform, truncation_k, OrliczFunction, SpaceSpec, WeightFunction,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// random generators

/// Operator with i.i.d. complex Gaussian entries, scaled so the operator
/// norm is O(1) per block.
pub fn random_operator(algebra: &TracialAlgebra, rng: &mut ChaCha20Rng) -> Operator {
    let mut blocks = Vec::with_capacity(algebra.blocks.len());
    for &(d, _) in &algebra.blocks {
        let s = 1.0 / (2.0 * d as f64).sqrt();
        let m = nalgebra::DMatrix::from_fn(d, d, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        });
        blocks.push(m);
    }
    Operator { blocks }
}

/// Positive operator `g* g` with complex Gaussian `g`.
pub fn random_positive(algebra: &TracialAlgebra, rng: &mut ChaCha20Rng) -> Operator {
    random_operator(algebra, rng).gram()
}

/// Positive operator of rank at most `rank` (columns of `g` beyond `rank`
/// are zeroed before forming `g* g`).
pub fn random_positive_rank(
    algebra: &TracialAlgebra,
    rng: &mut ChaCha20Rng,
    rank: usize,
) -> Operator {
    let mut g = random_operator(algebra, rng);
    for m in &mut g.blocks {
        let d = m.nrows();
        for j in rank.min(d)..d {
            for i in 0..d {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    g.adjoint().gram()
}

/// Real diagonal operator with standard normal entries.
pub fn random_diagonal(algebra: &TracialAlgebra, rng: &mut ChaCha20Rng) -> Operator {
    let mut blocks = Vec::with_capacity(algebra.blocks.len());
    for &(d, _) in &algebra.blocks {
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        blocks.push(m);
    }
    Operator { blocks }
}

/// Random Hermitian martingale on the full algebra of dimension
/// `prod(dims)` with the tensor filtration `dims`.
pub fn tensor_instance(dims: &[usize], seed: u64) -> Martingale {
    let alg = TracialAlgebra::full(dims.iter().product());
    let filt = Filtration::Tensor { dims: dims.to_vec() };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x = random_operator(&alg, &mut rng).symmetrize();
    Martingale::new(alg, filt, x).expect("valid tensor instance")
}

/// Classical dyadic martingale: real diagonal terminal on the full algebra
/// of dimension `2^levels` with the tensor filtration `[2; levels]`; every
/// operator in the pipeline stays diagonal.
pub fn dyadic_instance(levels: usize, seed: u64) -> Martingale {
    let alg = TracialAlgebra::full(1usize << levels);
    let filt = Filtration::Tensor { dims: vec![2; levels] };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x = random_diagonal(&alg, &mut rng);
    Martingale::new(alg, filt, x).expect("valid dyadic instance")
}

/// Scalar conditional expectation on a dyadic vector of length `2^N`:
/// averages over cells of size `len >> level` (level 0 treated as level 1).
pub fn dyadic_average(v: &[f64], level: usize) -> Vec<f64> {
    let level = level.max(1);
    let cell = v.len() >> level;
    let cell = cell.max(1);
    let mut out = vec![0.0; v.len()];
    for c in 0..v.len() / cell {
        let s: f64 = v[c * cell..(c + 1) * cell].iter().sum::<f64>() / cell as f64;
        for i in 0..cell {
            out[c * cell + i] = s;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// instances

/// Instance generation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tensor (or pinching) filtration with dense complex operators.
    Noncommutative,
    /// Classical dyadic model: diagonal real operators, tensor `[2; N]`.
    Dyadic,
}

/// Deterministic recipe for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub dim: usize,
    pub levels: usize,
    pub mode: Mode,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 64 {
            return Err(Error::InvalidInstance(format!("dim {} out of range (1..=64)", self.dim)));
        }
        if self.levels == 0 || self.levels > 8 {
            return Err(Error::InvalidInstance(format!(
                "levels {} out of range (1..=8)",
                self.levels
            )));
        }
        if self.mode == Mode::Dyadic && self.dim != 1usize << self.levels {
            return Err(Error::InvalidInstance(format!(
                "dyadic mode needs dim = 2^levels, got dim {} levels {}",
                self.dim, self.levels
            )));
        }
        Ok(())
    }
}

/// Nested contiguous partitions: level `levels` is the whole block; each
/// lower level splits every atom in half.
pub fn halving_partitions(dim: usize, levels: usize) -> Vec<Vec<Vec<usize>>> {
    let mut parts: Vec<Vec<Vec<usize>>> = vec![vec![(0..dim).collect()]];
    for _ in 1..levels {
        let coarser = parts.last().unwrap();
        let mut finer = Vec::new();
        for atom in coarser {
            if atom.len() >= 2 {
                let h = atom.len() / 2;
                finer.push(atom[..h].to_vec());
                finer.push(atom[h..].to_vec());
            } else {
                finer.push(atom.clone());
            }
        }
        parts.push(finer);
    }
    parts.reverse();
    parts
}

fn filtration_for(spec: &InstanceSpec) -> Result<Filtration> {
    match spec.mode {
        Mode::Dyadic => Ok(Filtration::Tensor { dims: vec![2; spec.levels] }),
        Mode::Noncommutative => {
            if spec.dim.is_power_of_two() {
                let k = spec.dim.trailing_zeros() as usize;
                if k >= spec.levels {
                    // merge leading factors so exactly `levels` remain
                    let mut dims = vec![2usize; spec.levels];
                    dims[0] = 1usize << (k - spec.levels + 1);
                    return Ok(Filtration::Tensor { dims });
                }
            }
            Ok(Filtration::Pinching {
                partitions: halving_partitions(spec.dim, spec.levels),
            })
        }
    }
}

/// A generated instance: one martingale plus auxiliary positive, adapted,
/// and general sequences drawn from the same seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub algebra: TracialAlgebra,
    pub filtration: Filtration,
    pub martingale: Martingale,
    pub positives: Vec<Operator>,
    pub adapted: Vec<Operator>,
    pub generals: Vec<Operator>,
}

/// Deterministic instance generation: identical specs give bit-identical
/// instances.
pub fn gen_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let algebra = TracialAlgebra::full(spec.dim);
    let filtration = filtration_for(spec)?;
    filtration.validate(&algebra)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let n = filtration.levels();
    let (terminal, positives, adapted, generals) = match spec.mode {
        Mode::Dyadic => {
            let terminal = random_diagonal(&algebra, &mut rng);
            let positives: Vec<Operator> = (0..n)
                .map(|_| {
                    let g = random_diagonal(&algebra, &mut rng);
                    g.gram()
                })
                .collect();
            let adapted: Vec<Operator> = (1..=n)
                .map(|k| {
                    let g = random_diagonal(&algebra, &mut rng);
                    conditional_expectation(&algebra, &filtration, &g, k)
                })
                .collect::<Result<_>>()?;
            let generals: Vec<Operator> =
                (0..n).map(|_| random_diagonal(&algebra, &mut rng)).collect();
            (terminal, positives, adapted, generals)
        }
        Mode::Noncommutative => {
            let terminal = random_operator(&algebra, &mut rng).symmetrize();
            let positives: Vec<Operator> = (0..n)
                .map(|k| {
                    // alternate full-rank and rank-deficient positives
                    if k % 2 == 1 && spec.dim >= 4 {
                        random_positive_rank(&algebra, &mut rng, spec.dim / 2)
                    } else {
                        random_positive(&algebra, &mut rng)
                    }
                })
                .collect();
            let adapted: Vec<Operator> = (1..=n)
                .map(|k| {
                    let g = random_operator(&algebra, &mut rng);
                    conditional_expectation(&algebra, &filtration, &g, k)
                })
                .collect::<Result<_>>()?;
            let generals: Vec<Operator> =
                (0..n).map(|_| random_operator(&algebra, &mut rng)).collect();
            (terminal, positives, adapted, generals)
        }
    };
    let martingale = Martingale::new(algebra.clone(), filtration.clone(), terminal)?;
    Ok(Instance {
        spec: *spec,
        algebra,
        filtration,
        martingale,
        positives,
        adapted,
        generals,
    })
}

/// On-disk instance format: the recipe plus the terminal matrix (complex
/// entries as `[re, im]`), so hand-edited instances round-trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub spec: InstanceSpec,
    pub terminal: Vec<Vec<[f64; 2]>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> InstanceFile {
        let m = &inst.martingale.terminal.blocks[0];
        let terminal = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        InstanceFile { spec: inst.spec, terminal }
    }

    /// Rebuilds the full instance; the martingale uses the stored terminal,
    /// the auxiliary sequences are regenerated from the seed.
    pub fn to_instance(&self) -> Result<Instance> {
        let mut inst = gen_instance(&self.spec)?;
        let d = inst.algebra.total_dim();
        if self.terminal.len() != d || self.terminal.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch(format!(
                "terminal matrix is not {d} x {d}"
            )));
        }
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(self.terminal[i][j][0], self.terminal[i][j][1])
        });
        let terminal = Operator { blocks: vec![m] };
        inst.martingale =
            Martingale::new(inst.algebra.clone(), inst.filtration.clone(), terminal)?;
        Ok(inst)
    }
}

// ---------------------------------------------------------------------------
// ratio reports

/// One measured ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioRow {
    pub seed: u64,
    pub dim: usize,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Aggregated check result; `pass` compares each ratio against the
/// theoretical constant when one is asserted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub constant: Option<f64>,
    /// When set, ratios must also not fall below the constant.
    pub exact: bool,
    pub tol: f64,
    pub rows: Vec<RatioRow>,
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub pass: bool,
}

pub fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs.abs() <= 1e-12 {
        1.0
    } else {
        f64::INFINITY
    }
}

impl RatioReport {
    pub fn new(
        name: impl Into<String>,
        constant: Option<f64>,
        exact: bool,
        tol: f64,
        rows: Vec<RatioRow>,
    ) -> RatioReport {
        let mut sorted: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let max = sorted.last().copied().unwrap_or(0.0);
        let min = sorted.first().copied().unwrap_or(0.0);
        let median = if sorted.is_empty() {
            0.0
        } else {
            sorted[sorted.len() / 2]
        };
        let pass = match constant {
            None => rows.iter().all(|r| r.ratio.is_finite()),
            Some(c) => rows.iter().all(|r| {
                r.ratio.is_finite()
                    && r.ratio <= c * (1.0 + tol) + 1e-12
                    && (!exact || r.ratio >= c * (1.0 - tol) - 1e-12)
            }),
        };
        RatioReport {
            name: name.into(),
            constant,
            exact,
            tol,
            rows,
            max,
            min,
            median,
            pass,
        }
    }

    /// Merges same-named reports (rows concatenated, aggregates recomputed).
    pub fn merge(reports: Vec<RatioReport>) -> Vec<RatioReport> {
        use std::collections::BTreeMap;
        let mut by_name: BTreeMap<String, (Option<f64>, bool, f64, Vec<RatioRow>)> = BTreeMap::new();
        for r in reports {
            let e = by_name
                .entry(r.name.clone())
                .or_insert((r.constant, r.exact, r.tol, Vec::new()));
            e.3.extend(r.rows);
        }
        by_name
            .into_iter()
            .map(|(name, (c, e, t, mut rows))| {
                rows.sort_by(|a, b| {
                    (a.dim, a.seed, a.label.clone()).cmp(&(b.dim, b.seed, b.label.clone()))
                });
                RatioReport::new(name, c, e, t, rows)
            })
            .collect()
    }
}

fn spec_tag(spec: &SpaceSpec) -> String {
    match spec {
        SpaceSpec::Lp { p } => format!("L{p}"),
        SpaceSpec::Lorentz { p, q } => format!("L({p},{q})"),
        SpaceSpec::Orlicz { phi } => format!("Orlicz{:?}", phi.exponents()),
        SpaceSpec::OrliczLorentz { phi, r } => format!("OL{:?};{r}", phi.exponents()),
        SpaceSpec::GenLorentz { r, .. } => format!("Lam;{r}"),
    }
}

fn op_norm_in(spec: &SpaceSpec, algebra: &TracialAlgebra, x: &Operator) -> Result<f64> {
    norm(spec, &mu(algebra, x)?)
}

// ---------------------------------------------------------------------------
// shared decomposition cache

/// Endpoint used as the `A_1` norm in decomposition costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A1 {
    /// `|| square function ||_inf`.
    HinfType,
    /// `bmo^c` (martingale kind only).
    Bmo,
}

/// Per-lambda decomposition summary reusable across target spaces and
/// t-values: the rearrangement of the square function of `y` and the `A_1`
/// sizes of `z`.
#[derive(Debug, Clone)]
pub struct CostItem {
    pub lambda: f64,
    pub mu_sy: StepFunction,
    pub z_hinf: f64,
    pub z_bmo: f64,
}

/// Decompositions over a lambda-grid covering the paper's `lambda(t)` for
/// every `t` in the grid, plus a geometric spread.
pub fn decomposition_costs(
    input: &DecompInput,
    ts: &[f64],
    eps: f64,
    with_bmo: bool,
) -> Result<Vec<CostItem>> {
    let mut lams: Vec<f64> = Vec::new();
    for &t in ts {
        lams.push(lambda_for(input, t, eps)?);
    }
    lams.retain(|&l| l > 0.0);
    if let Some(&mid) = lams.get(lams.len() / 2) {
        for i in 0..9 {
            lams.push(mid * 2f64.powf(-4.0 + i as f64));
        }
    }
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lams.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (*a + *b));
    let mut items = Vec::with_capacity(lams.len());
    for lam in lams {
        let d = jones_decompose_with_lambda(input, 1.0, eps, lam)?;
        let mu_sy = input.square_mu(&d.y_entries)?;
        let z_bmo = if with_bmo && input.kind == DecompKind::Martingale {
            let zm = Martingale::from_diffs(
                input.algebra.clone(),
                input.filtration.clone(),
                d.z_entries.clone(),
            )?;
            bmo_c_norm(&zm)?
        } else {
            f64::NAN
        };
        items.push(CostItem {
            lambda: lam,
            mu_sy,
            z_hinf: d.certificate.z_hinf,
            z_bmo,
        });
    }
    Ok(items)
}

/// K-curve for the couple `(h_{A_0}-type, A_1)` from cached decompositions.
/// For `A_1 = h_inf`-type the lower bound is certified (`k_ref` for `L_p`
/// endpoints, exact function-model truncation otherwise); for the bmo
/// endpoint the lower bound is heuristic and the curve is only recorded.
pub fn cached_k_curve(
    input: &DecompInput,
    a0: &SpaceSpec,
    a1: A1,
    ts: &[f64],
    items: &[CostItem],
) -> Result<KCurve> {
    let mu_sx = input.square_mu(&input.entries)?;
    let e0 = norm(a0, &mu_sx)?;
    let e1 = match a1 {
        A1::HinfType => mu_sx.sup(),
        A1::Bmo => {
            let xm = Martingale::from_diffs(
                input.algebra.clone(),
                input.filtration.clone(),
                input.entries.clone(),
            )?;
            bmo_c_norm(&xm)?
        }
    };
    let costs: Vec<(f64, f64)> = items
        .iter()
        .map(|it| {
            let z = match a1 {
                A1::HinfType => it.z_hinf,
                A1::Bmo => it.z_bmo,
            };
            Ok((norm(a0, &it.mu_sy)?, z))
        })
        .collect::<Result<_>>()?;
    let mut lower = Vec::with_capacity(ts.len());
    let mut upper = Vec::with_capacity(ts.len());
    let mut provenance = Vec::with_capacity(ts.len());
    for &t in ts {
        let lo = match (a0, a1) {
            (SpaceSpec::Lp { p }, A1::HinfType) => k_ref(input, t, *p)?,
            _ => truncation_k(a0, &mu_sx, t)?,
        };
        let mut best = e0;
        let mut tag = String::from("endpoint-a0");
        if t * e1 < best {
            best = t * e1;
            tag = String::from("endpoint-a1");
        }
        for (y, z) in &costs {
            if y + t * z < best {
                best = y + t * z;
                tag = String::from("jones");
            }
        }
        let (lo, best) = match a1 {
            // the bmo-side lower bound is not certified; keep lower <= upper
            A1::Bmo => (lo.min(best), best),
            A1::HinfType => (lo, best.max(lo)),
        };
        lower.push(lo);
        upper.push(best);
        provenance.push(tag);
    }
    Ok(KCurve {
        couple: format!("({}, {:?})", spec_tag(a0), a1),
        ts: ts.to_vec(),
        lower,
        upper,
        provenance,
    })
}

fn log_grid(tstar: f64, decades: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| tstar * 10f64.powf(-decades + 2.0 * decades * i as f64 / (n - 1) as f64))
        .collect()
}

fn grid_for(input: &DecompInput, n: usize) -> Result<Vec<f64>> {
    let f = input.square_mu(&input.entries)?;
    let h2 = crate::rearrangement::integrate_power(&f, 2.0, f64::INFINITY)?.sqrt();
    let hinf = f.sup();
    let tstar = if hinf > 0.0 && h2 > 0.0 { h2 / hinf } else { 1.0 };
    Ok(log_grid(tstar, 3.0, n))
}

// ---------------------------------------------------------------------------
// checks

/// K-closedness sandwich for `(h_p-type, h_inf-type)` in all three square
/// kinds; the paper constant is asserted at `p = 2`.
pub fn check_k_closedness(inst: &Instance, p: f64, t_points: usize, eps: f64) -> Result<Vec<RatioReport>> {
    let mut out = Vec::new();
    let kinds = [
        ("martingale", DecompInput::from_martingale(&inst.martingale)),
        (
            "conditioned",
            DecompInput {
                algebra: inst.algebra.clone(),
                filtration: inst.filtration.clone(),
                entries: inst.adapted.clone(),
                kind: DecompKind::Conditioned,
            },
        ),
        (
            "adapted",
            DecompInput {
                algebra: inst.algebra.clone(),
                filtration: inst.filtration.clone(),
                entries: inst.adapted.clone(),
                kind: DecompKind::Adapted,
            },
        ),
    ];
    for (label, input) in kinds {
        let ts = grid_for(&input, t_points)?;
        let items = decomposition_costs(&input, &ts, eps, false)?;
        let curve = cached_k_curve(&input, &SpaceSpec::lp(p), A1::HinfType, &ts, &items)?;
        let (i_worst, ratio) = curve
            .ts
            .iter()
            .enumerate()
            .map(|(i, _)| (i, ratio_of(curve.upper[i], curve.lower[i])))
            .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let constant = if p == 2.0 { Some(sandwich_constant(eps)) } else { None };
        out.push(RatioReport::new(
            format!("k_closedness_{label}_L{p}"),
            constant,
            false,
            1e-6,
            vec![RatioRow {
                seed: inst.spec.seed,
                dim: inst.spec.dim,
                label: label.to_string(),
                lhs: curve.upper[i_worst],
                rhs: curve.lower[i_worst],
                ratio,
            }],
        ));
    }
    Ok(out)
}

/// Interpolation-identity families: LHS bracket from quadrature over the
/// couple's K-curve, RHS the closed-form target norm of `mu(s_c)`.
#[derive(Debug, Clone)]
pub enum InterpFamily {
    /// `(h_2^c, h_inf^c)_{theta,gamma} = h^c_{L_{r,gamma}}`, `r = 2/(1-theta)`.
    Power { theta: f64, gamma: f64 },
    /// `(h_Phi^c, h_inf^c)_{theta,gamma} = h^c_{L_{Phi_0,gamma}}`.
    Orlicz {
        phi: OrliczFunction,
        theta: f64,
        gamma: f64,
    },
    /// `(h^c_{Lambda(phi)}, h_inf^c)` with power weight `phi(t) = t^a` and
    /// power parameter function `rho(t) = t^rho_exp`; target weight
    /// `phi_0(t) = phi(t)/rho(phi(t))`.
    GenLorentz { a: f64, rho_exp: f64, gamma: f64 },
    /// `(h_p^c, bmo^c)` endpoint with `rho(t) = t^rho_exp`; target
    /// `Lambda^gamma(phi)`, `phi(t) = t^{1/p}/rho(t^{1/p})`.
    BmoEndpoint { p: f64, rho_exp: f64, gamma: f64 },
}

impl InterpFamily {
    fn tag(&self) -> String {
        match self {
            InterpFamily::Power { theta, gamma } => format!("power_t{theta}_g{gamma}"),
            InterpFamily::Orlicz { theta, gamma, .. } => format!("orlicz_t{theta}_g{gamma}"),
            InterpFamily::GenLorentz { a, rho_exp, gamma } => {
                format!("gen_lorentz_a{a}_r{rho_exp}_g{gamma}")
            }
            InterpFamily::BmoEndpoint { p, rho_exp, gamma } => {
                format!("bmo_p{p}_r{rho_exp}_g{gamma}")
            }
        }
    }

    fn couple(&self) -> Result<(SpaceSpec, A1, f64, f64)> {
        // (A_0 spec, A_1, method theta, method gamma)
        match self {
            InterpFamily::Power { theta, gamma } => {
                Ok((SpaceSpec::lp(2.0), A1::HinfType, *theta, *gamma))
            }
            InterpFamily::Orlicz { phi, theta, gamma } => Ok((
                SpaceSpec::Orlicz { phi: phi.clone() },
                A1::HinfType,
                *theta,
                *gamma,
            )),
            InterpFamily::GenLorentz { a, rho_exp, gamma } => Ok((
                SpaceSpec::GenLorentz {
                    weight: WeightFunction::Power { a: *a },
                    r: *gamma,
                },
                A1::HinfType,
                *rho_exp,
                *gamma,
            )),
            InterpFamily::BmoEndpoint { p, rho_exp, gamma } => {
                Ok((SpaceSpec::lp(*p), A1::Bmo, *rho_exp, *gamma))
            }
        }
    }

    fn target(&self) -> Result<SpaceSpec> {
        match self {
            InterpFamily::Power { theta, gamma } => Ok(SpaceSpec::Lorentz {
                p: 2.0 / (1.0 - theta),
                q: *gamma,
            }),
            InterpFamily::Orlicz { phi, theta, gamma } => Ok(SpaceSpec::OrliczLorentz {
                phi: theta_transform(phi, *theta)?,
                r: *gamma,
            }),
            InterpFamily::GenLorentz { a, rho_exp, gamma } => Ok(SpaceSpec::GenLorentz {
                weight: WeightFunction::Power { a: a * (1.0 - rho_exp) },
                r: *gamma,
            }),
            InterpFamily::BmoEndpoint { p, rho_exp, gamma } => Ok(SpaceSpec::GenLorentz {
                weight: WeightFunction::Power { a: (1.0 - rho_exp) / p },
                r: *gamma,
            }),
        }
    }
}

pub fn check_interpolation_identity(
    inst: &Instance,
    families: &[InterpFamily],
    eps: f64,
) -> Result<Vec<RatioReport>> {
    let input = DecompInput::from_martingale(&inst.martingale);
    let ts = grid_for(&input, 33)?;
    let with_bmo = families
        .iter()
        .any(|f| matches!(f, InterpFamily::BmoEndpoint { .. }));
    let items = decomposition_costs(&input, &ts, eps, with_bmo)?;
    let mu_sx = input.square_mu(&input.entries)?;
    let mut out = Vec::new();
    for fam in families {
        let (a0, a1, theta, gamma) = fam.couple()?;
        let curve = cached_k_curve(&input, &a0, a1, &ts, &items)?;
        let (lo, hi) = real_interp_norm(&curve, theta, gamma)?;
        let rhs = norm(&fam.target()?, &mu_sx)?;
        let rows = vec![
            RatioRow {
                seed: inst.spec.seed,
                dim: inst.spec.dim,
                label: "lower".into(),
                lhs: lo,
                rhs,
                ratio: ratio_of(lo, rhs),
            },
            RatioRow {
                seed: inst.spec.seed,
                dim: inst.spec.dim,
                label: "upper".into(),
                lhs: hi,
                rhs,
                ratio: ratio_of(hi, rhs),
            },
        ];
        out.push(RatioReport::new(
            format!("interp_{}", fam.tag()),
            None,
            false,
            1e-6,
            rows,
        ));
    }
    Ok(out)
}

/// Dual Doob direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoobDirection {
    Forward,
    Reverse,
}

/// Norm or Phi-moment flavor of an inequality check.
#[derive(Debug, Clone)]
pub enum Flavor {
    Norm(SpaceSpec),
    PhiMoment(OrliczFunction),
}

impl Flavor {
    fn tag(&self) -> String {
        match self {
            Flavor::Norm(s) => spec_tag(s),
            Flavor::PhiMoment(phi) => format!("phi{:?}", phi.exponents()),
        }
    }
}

/// `|| sum E_k(x_k) ||` vs `|| sum x_k ||` (forward) or the reverse, in norm
/// or Phi-moment form; exact equality is asserted at forward `L_1`.
pub fn check_dual_doob(
    inst: &Instance,
    direction: DoobDirection,
    flavor: &Flavor,
) -> Result<Vec<RatioReport>> {
    let alg = &inst.algebra;
    let filt = &inst.filtration;
    let mut sum_x = alg.zero();
    let mut sum_e = alg.zero();
    for (i, x) in inst.positives.iter().enumerate() {
        sum_x = sum_x.add(x);
        sum_e = sum_e.add(&conditional_expectation(alg, filt, x, i + 1)?);
    }
    let (lhs_op, rhs_op) = match direction {
        DoobDirection::Forward => (&sum_e, &sum_x),
        DoobDirection::Reverse => (&sum_x, &sum_e),
    };
    let (lhs, rhs, constant, exact, tol) = match flavor {
        Flavor::Norm(spec) => {
            validate_doob_spec(spec, direction)?;
            let l = op_norm_in(spec, alg, lhs_op)?;
            let r = op_norm_in(spec, alg, rhs_op)?;
            let is_l1 = matches!(spec, SpaceSpec::Lp { p } if *p == 1.0);
            if direction == DoobDirection::Forward && is_l1 {
                (l, r, Some(1.0), true, 1e-10)
            } else {
                (l, r, None, false, 1e-6)
            }
        }
        Flavor::PhiMoment(phi) => {
            let (p, q) = phi.exponents();
            match direction {
                DoobDirection::Forward if p < 1.0 => {
                    return Err(Error::InvalidParameter(
                        "forward Phi-moment dual Doob needs a convex Phi".into(),
                    ))
                }
                DoobDirection::Reverse if q > 1.0 => {
                    return Err(Error::InvalidParameter(
                        "reverse Phi-moment dual Doob needs a concave Phi".into(),
                    ))
                }
                _ => {}
            }
            (
                orlicz_modular(phi, alg, lhs_op),
                orlicz_modular(phi, alg, rhs_op),
                None,
                false,
                1e-6,
            )
        }
    };
    let dirtag = match direction {
        DoobDirection::Forward => "forward",
        DoobDirection::Reverse => "reverse",
    };
    Ok(vec![RatioReport::new(
        format!("dual_doob_{dirtag}_{}", flavor.tag()),
        constant,
        exact,
        tol,
        vec![RatioRow {
            seed: inst.spec.seed,
            dim: inst.spec.dim,
            label: dirtag.into(),
            lhs,
            rhs,
            ratio: ratio_of(lhs, rhs),
        }],
    )])
}

fn validate_doob_spec(spec: &SpaceSpec, direction: DoobDirection) -> Result<()> {
    let ok = match (spec, direction) {
        (SpaceSpec::Lp { p }, DoobDirection::Forward) => *p >= 1.0 && p.is_finite(),
        (SpaceSpec::Lp { p }, DoobDirection::Reverse) => *p > 0.0 && *p <= 1.0,
        (SpaceSpec::Orlicz { phi }, DoobDirection::Forward) => phi.exponents().0 >= 1.0,
        (SpaceSpec::Orlicz { phi }, DoobDirection::Reverse) => phi.exponents().1 <= 1.0,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "space {} out of the dual-Doob {direction:?} range",
            spec_tag(spec)
        )))
    }
}

/// Which map the Stein / Lepingle-Yor check exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteinWhich {
    /// `(a_n) -> (E_n a_n)`, any sequence, `1 < p < inf`.
    Stein,
    /// `(xi_n) -> (E_{n-1} xi_n)`, adapted sequences, `E` between `L_1`
    /// and `L_q`.
    LepingleYor,
}

pub fn check_stein_lepingle_yor(
    inst: &Instance,
    which: SteinWhich,
    flavor: &Flavor,
) -> Result<Vec<RatioReport>> {
    let alg = &inst.algebra;
    let filt = &inst.filtration;
    let (entries, mapped, tag) = match which {
        SteinWhich::Stein => {
            if let Flavor::Norm(SpaceSpec::Lp { p }) = flavor {
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Stein needs 1 < p < inf, got {p}"
                    )));
                }
            } else {
                return Err(Error::InvalidParameter(
                    "Stein is an L_p statement (1 < p < inf)".into(),
                ));
            }
            let mapped: Vec<Operator> = inst
                .generals
                .iter()
                .enumerate()
                .map(|(i, a)| conditional_expectation(alg, filt, a, i + 1))
                .collect::<Result<_>>()?;
            (inst.generals.clone(), mapped, "stein")
        }
        SteinWhich::LepingleYor => {
            // certify adaptedness of the input
            SequenceBundle::new(alg.clone(), filt.clone(), inst.adapted.clone(), true)?;
            let mapped: Vec<Operator> = inst
                .adapted
                .iter()
                .enumerate()
                .map(|(i, a)| conditional_expectation(alg, filt, a, i))
                .collect::<Result<_>>()?;
            (inst.adapted.clone(), mapped, "lepingle_yor")
        }
    };
    let sq = |es: &[Operator]| -> Result<Operator> {
        let s = square_sq_from_entries(alg, filt, es, SquareKind::SeqPlain, es.len())?;
        crate::algebra::sqrt_positive(&s)
    };
    let (lhs, rhs) = match flavor {
        Flavor::Norm(spec) => {
            if let SpaceSpec::Lp { p } = spec {
                if !(*p >= 1.0) && which == SteinWhich::LepingleYor {
                    return Err(Error::InvalidParameter(format!(
                        "Lepingle-Yor needs E between L_1 and L_q, got L_{p}"
                    )));
                }
            }
            (
                op_norm_in(spec, alg, &sq(&mapped)?)?,
                op_norm_in(spec, alg, &sq(&entries)?)?,
            )
        }
        Flavor::PhiMoment(phi) => {
            if phi.exponents().0 < 1.0 {
                return Err(Error::InvalidParameter(
                    "Phi-moment form needs a convex Phi".into(),
                ));
            }
            (
                orlicz_modular(phi, alg, &sq(&mapped)?),
                orlicz_modular(phi, alg, &sq(&entries)?),
            )
        }
    };
    Ok(vec![RatioReport::new(
        format!("{tag}_{}", flavor.tag()),
        None,
        false,
        1e-6,
        vec![RatioRow {
            seed: inst.spec.seed,
            dim: inst.spec.dim,
            label: tag.into(),
            lhs,
            rhs,
            ratio: ratio_of(lhs, rhs),
        }],
    )])
}

/// `||S_c(x)||_E` and `||x||_E` against `||s_c(x)||_E` (constant
/// `sqrt(2/r)` asserted at `E = L_r`, `0 < r <= 2`), plus the recorded
/// Burkholder-Gundy split cost over randomized splittings.
pub fn check_hardy_inequalities(inst: &Instance, spec: &SpaceSpec) -> Result<Vec<RatioReport>> {
    let m = &inst.martingale;
    let sc = hardy_norm(m, HardyKind::Hc, spec)?;
    let scond = hardy_norm(m, HardyKind::Hcond, spec)?;
    let x_norm = op_norm_in(spec, &inst.algebra, &m.terminal)?;
    let constant = match spec {
        SpaceSpec::Lp { p } if *p > 0.0 && *p <= 2.0 => Some((2.0 / p).sqrt()),
        _ => None,
    };
    let row = |label: &str, lhs: f64, rhs: f64| RatioRow {
        seed: inst.spec.seed,
        dim: inst.spec.dim,
        label: label.into(),
        lhs,
        rhs,
        ratio: ratio_of(lhs, rhs),
    };
    let tag = spec_tag(spec);
    let mut out = vec![
        RatioReport::new(
            format!("hardy_Sc_vs_sc_{tag}"),
            constant,
            false,
            1e-6,
            vec![row("Sc/sc", sc, scond)],
        ),
        RatioReport::new(
            format!("hardy_x_vs_sc_{tag}"),
            constant,
            false,
            1e-6,
            vec![row("x/sc", x_norm, scond)],
        ),
    ];
    // BG-1: ||x||_E <= C inf over splits of ||S_c(a)||_E + ||S_r(b)||_E
    let mut rng = ChaCha20Rng::seed_from_u64(inst.spec.seed ^ 0x9e3779b97f4a7c15);
    let mut best = f64::INFINITY;
    let mut candidates: Vec<Vec<f64>> = vec![vec![1.0; m.len()], vec![0.0; m.len()]];
    for _ in 0..3 {
        candidates.push((0..m.len()).map(|_| rng.gen::<f64>()).collect());
    }
    for weights in candidates {
        let a_diffs: Vec<Operator> = m
            .diffs
            .iter()
            .zip(&weights)
            .map(|(d, &w)| d.scale(w))
            .collect();
        let b_diffs: Vec<Operator> = m
            .diffs
            .iter()
            .zip(&weights)
            .map(|(d, &w)| d.scale(1.0 - w))
            .collect();
        let a = Martingale::from_diffs(inst.algebra.clone(), inst.filtration.clone(), a_diffs)?;
        let b = Martingale::from_diffs(inst.algebra.clone(), inst.filtration.clone(), b_diffs)?;
        let cost = hardy_norm(&a, HardyKind::Hc, spec)? + hardy_norm(&b, HardyKind::Hr, spec)?;
        best = best.min(cost);
    }
    out.push(RatioReport::new(
        format!("bg1_{tag}"),
        None,
        false,
        1e-6,
        vec![row("x/split", x_norm, best)],
    ));
    Ok(out)
}

/// Davis-type inclusions: the two certified one-sided inequalities plus the
/// recorded best splitting cost for the reverse direction.
pub fn check_davis_inclusions(inst: &Instance, spec: &SpaceSpec) -> Result<Vec<RatioReport>> {
    let m = &inst.martingale;
    let sc = hardy_norm(m, HardyKind::Hc, spec)?;
    let scond = hardy_norm(m, HardyKind::Hcond, spec)?;
    let hd = norm(spec, &diagonal_mu(m))?;
    let constant = match spec {
        SpaceSpec::Lp { p } if *p == 2.0 => Some(1.0),
        _ => None,
    };
    let row = |label: &str, lhs: f64, rhs: f64| RatioRow {
        seed: inst.spec.seed,
        dim: inst.spec.dim,
        label: label.into(),
        lhs,
        rhs,
        ratio: ratio_of(lhs, rhs),
    };
    let tag = spec_tag(spec);
    let mut out = vec![
        RatioReport::new(
            format!("davis_Sc_vs_sc_{tag}"),
            constant,
            false,
            1e-6,
            vec![row("Sc/sc", sc, scond)],
        ),
        RatioReport::new(
            format!("davis_Sc_vs_hd_{tag}"),
            None,
            false,
            1e-6,
            vec![row("Sc/hd", sc, hd)],
        ),
    ];
    // reverse direction: threshold splittings d x_k = d x_k q_{k-1}
    // + d x_k (1 - q_{k-1}) from Cuculescu runs at a lambda-grid; the best
    // achieved cost is an upper bound, never asserted as the infimum
    let w: Vec<Operator> = (1..=m.len())
        .map(|k| square_sq_from_entries(&m.algebra, &m.filtration, &m.diffs, SquareKind::ScCond, k))
        .collect::<Result<_>>()?;
    let scale = w
        .last()
        .map(|s| s.op_norm().max(0.0).sqrt())
        .unwrap_or(0.0);
    let mut best = f64::INFINITY;
    if scale > 0.0 {
        for i in 0..9 {
            let lam = scale * 2f64.powf(-4.0 + i as f64);
            let run = cuculescu(&m.algebra, &m.filtration, &w, lam * lam)?;
            let c_diffs: Vec<Operator> = m
                .diffs
                .iter()
                .enumerate()
                .map(|(i, d)| d.mul(run.q_at(i)))
                .collect();
            let d_diffs: Vec<Operator> = m
                .diffs
                .iter()
                .zip(&c_diffs)
                .map(|(d, c)| d.sub(c))
                .collect();
            let xc = Martingale::from_diffs(m.algebra.clone(), m.filtration.clone(), c_diffs)?;
            let xd = Martingale::from_diffs(m.algebra.clone(), m.filtration.clone(), d_diffs)?;
            let cost =
                hardy_norm(&xc, HardyKind::Hcond, spec)? + norm(spec, &diagonal_mu(&xd))?;
            best = best.min(cost);
        }
        out.push(RatioReport::new(
            format!("davis_split_vs_Sc_{tag}"),
            None,
            false,
            1e-6,
            vec![row("split/Sc", best, sc)],
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// suite

/// Suite configuration (JSON-loadable).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seeds: Vec<u64>,
    pub dims: Vec<usize>,
    pub mode: Mode,
    pub checks: Vec<String>,
    pub epsilon: f64,
    pub tolerance: f64,
    pub t_points: usize,
}

pub const ALL_CHECKS: &[&str] = &[
    "k_closedness",
    "interp_power",
    "interp_orlicz",
    "interp_gen_lorentz",
    "interp_bmo",
    "dual_doob",
    "stein",
    "lepingle_yor",
    "hardy",
    "davis",
];

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seeds: (0..6).collect(),
            dims: vec![4, 8, 16, 32],
            mode: Mode::Noncommutative,
            checks: ALL_CHECKS.iter().map(|s| s.to_string()).collect(),
            epsilon: 0.01,
            tolerance: 1e-8,
            t_points: 15,
        }
    }
}

/// Two-sided sign-test trend guard result for one check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendGuard {
    pub name: String,
    pub increases: usize,
    pub decreases: usize,
    pub p_value: f64,
    pub max_by_dim: Vec<(usize, f64)>,
    pub pass: bool,
}

fn binom_two_sided(n: usize, k: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut coeffs = vec![0.0f64; n + 1];
    for (i, c) in coeffs.iter_mut().enumerate() {
        // ln C(n, i)
        let mut ln = 0.0;
        for j in 0..i {
            ln += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
        }
        *c = (ln - n as f64 * std::f64::consts::LN_2).exp();
    }
    let lo: f64 = coeffs[..=k].iter().sum();
    let hi: f64 = coeffs[k..].iter().sum();
    (2.0 * lo.min(hi)).min(1.0)
}

/// Guards empirical-constant checks against monotone growth with dimension:
/// per-seed ratios are paired across consecutive dims and sign-tested at 5%.
/// Random instances converge in shape as the dimension grows, so ratios carry
/// a small bounded upward transient that a bare sign test always flags; a
/// guard therefore fails only when the significant trend is still material
/// (median growth >= 5%) at the largest dim transition and is not decaying
/// relative to the first transition. Sustained log-type growth has constant
/// or rising increments and still trips the guard; saturating transients
/// have shrinking increments and do not.
pub fn trend_guards(reports: &[RatioReport]) -> Vec<TrendGuard> {
    use std::collections::BTreeMap;
    let mut out = Vec::new();
    for r in reports {
        if r.constant.is_some() {
            continue;
        }
        // (seed, label) -> dim -> ratio
        let mut series: BTreeMap<(u64, String), BTreeMap<usize, f64>> = BTreeMap::new();
        let mut by_dim: BTreeMap<usize, f64> = BTreeMap::new();
        for row in &r.rows {
            series
                .entry((row.seed, row.label.clone()))
                .or_default()
                .insert(row.dim, row.ratio);
            let e = by_dim.entry(row.dim).or_insert(0.0);
            *e = e.max(row.ratio);
        }
        if by_dim.len() < 2 {
            continue;
        }
        let top_dim = *by_dim.keys().last().unwrap();
        let first_dim = *by_dim.keys().nth(1).unwrap();
        let mut inc = 0usize;
        let mut dec = 0usize;
        let mut top_incs: Vec<f64> = Vec::new();
        let mut top_abs: Vec<f64> = Vec::new();
        let mut first_abs: Vec<f64> = Vec::new();
        for dims in series.values() {
            let pairs: Vec<(usize, f64)> = dims.iter().map(|(&d, &v)| (d, v)).collect();
            for w in pairs.windows(2) {
                let (a, b) = (w[0].1, w[1].1);
                if b > a * (1.0 + 1e-12) {
                    inc += 1;
                } else if b < a * (1.0 - 1e-12) {
                    dec += 1;
                }
                if a > 0.0 {
                    if w[1].0 == top_dim {
                        top_incs.push(b / a - 1.0);
                        top_abs.push(b - a);
                    }
                    if w[1].0 == first_dim {
                        first_abs.push(b - a);
                    }
                }
            }
        }
        let p = binom_two_sided(inc + dec, inc);
        let maxes: Vec<(usize, f64)> = by_dim.iter().map(|(&d, &v)| (d, v)).collect();
        let strictly_growing = maxes.windows(2).all(|w| w[1].1 > w[0].1);
        let median = |v: &mut Vec<f64>| -> f64 {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            if v.is_empty() { 0.0 } else { v[v.len() / 2] }
        };
        let top_median = median(&mut top_incs);
        let top_abs_median = median(&mut top_abs);
        let first_abs_median = median(&mut first_abs);
        let material = top_median >= 0.05;
        // shrinking increments mean saturation, not sustained growth
        let decaying = top_dim > first_dim && top_abs_median <= 0.6 * first_abs_median;
        let pass = !(p < 0.05 && inc > dec && strictly_growing && material && !decaying);
        out.push(TrendGuard {
            name: r.name.clone(),
            increases: inc,
            decreases: dec,
            p_value: p,
            max_by_dim: maxes,
            pass,
        });
    }
    out
}

/// Aggregated suite output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub timestamp: String,
    pub config: SuiteConfig,
    pub reports: Vec<RatioReport>,
    pub trends: Vec<TrendGuard>,
    pub pass: bool,
}

impl Report {
    /// One RFC-4180 row per seed x check.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("check,seed,dim,label,lhs,rhs,ratio,constant,pass\n");
        for r in &self.reports {
            for row in &r.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.name,
                    row.seed,
                    row.dim,
                    row.label,
                    row.lhs,
                    row.rhs,
                    row.ratio,
                    r.constant.map_or(String::new(), |c| c.to_string()),
                    r.pass
                ));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<40} {:>10} {:>10} {:>10} {:>10} {:>6}\n",
            "check", "min", "median", "max", "constant", "pass"
        ));
        for r in &self.reports {
            out.push_str(&format!(
                "{:<40} {:>10.4} {:>10.4} {:>10.4} {:>10} {:>6}\n",
                r.name,
                r.min,
                r.median,
                r.max,
                r.constant.map_or("-".into(), |c| format!("{c:.4}")),
                if r.pass { "ok" } else { "FAIL" }
            ));
        }
        for t in &self.trends {
            if !t.pass {
                out.push_str(&format!(
                    "TREND FAIL {}: p = {:.4}, {} up / {} down\n",
                    t.name, t.p_value, t.increases, t.decreases
                ));
            }
        }
        out.push_str(if self.pass { "PASS\n" } else { "FAIL\n" });
        out
    }
}

fn levels_for(dim: usize, mode: Mode) -> usize {
    match mode {
        Mode::Dyadic => dim.trailing_zeros() as usize,
        Mode::Noncommutative => {
            if dim.is_power_of_two() {
                (dim.trailing_zeros() as usize).clamp(1, 6)
            } else {
                3
            }
        }
    }
}

fn run_instance_checks(inst: &Instance, cfg: &SuiteConfig) -> Result<Vec<RatioReport>> {
    let mut out = Vec::new();
    for name in &cfg.checks {
        match name.as_str() {
            "k_closedness" => {
                out.extend(check_k_closedness(inst, 2.0, cfg.t_points, cfg.epsilon)?)
            }
            "interp_power" => {
                let mut fams = Vec::new();
                for &theta in &[0.25, 0.5, 0.75] {
                    for &gamma in &[1.0, 2.0, 4.0, f64::INFINITY] {
                        fams.push(InterpFamily::Power { theta, gamma });
                    }
                }
                out.extend(check_interpolation_identity(inst, &fams, cfg.epsilon)?);
            }
            "interp_orlicz" => {
                let fams = vec![InterpFamily::Orlicz {
                    phi: OrliczFunction::TwoPower { p: 1.0, q: 2.0 },
                    theta: 1.0 / 3.0,
                    gamma: f64::INFINITY,
                }];
                out.extend(check_interpolation_identity(inst, &fams, cfg.epsilon)?);
            }
            "interp_gen_lorentz" => {
                let fams = vec![InterpFamily::GenLorentz {
                    a: 0.4,
                    rho_exp: 0.5,
                    gamma: 2.0,
                }];
                out.extend(check_interpolation_identity(inst, &fams, cfg.epsilon)?);
            }
            "interp_bmo" => {
                let fams = vec![InterpFamily::BmoEndpoint {
                    p: 2.0,
                    rho_exp: 0.5,
                    gamma: 2.0,
                }];
                out.extend(check_interpolation_identity(inst, &fams, cfg.epsilon)?);
            }
            "dual_doob" => {
                for spec in [SpaceSpec::lp(1.0), SpaceSpec::lp(2.0)] {
                    out.extend(check_dual_doob(inst, DoobDirection::Forward, &Flavor::Norm(spec))?);
                }
                out.extend(check_dual_doob(
                    inst,
                    DoobDirection::Forward,
                    &Flavor::PhiMoment(OrliczFunction::TwoPower { p: 1.0, q: 2.0 }),
                )?);
                out.extend(check_dual_doob(
                    inst,
                    DoobDirection::Reverse,
                    &Flavor::Norm(SpaceSpec::lp(0.5)),
                )?);
                out.extend(check_dual_doob(
                    inst,
                    DoobDirection::Reverse,
                    &Flavor::PhiMoment(OrliczFunction::TwoPower { p: 0.5, q: 1.0 }),
                )?);
            }
            "stein" => {
                for &p in &[1.5, 2.0, 4.0] {
                    out.extend(check_stein_lepingle_yor(
                        inst,
                        SteinWhich::Stein,
                        &Flavor::Norm(SpaceSpec::lp(p)),
                    )?);
                }
            }
            "lepingle_yor" => {
                for spec in [
                    SpaceSpec::lp(1.0),
                    SpaceSpec::lp(2.0),
                    SpaceSpec::Orlicz {
                        phi: OrliczFunction::TwoPower { p: 1.0, q: 2.0 },
                    },
                ] {
                    out.extend(check_stein_lepingle_yor(
                        inst,
                        SteinWhich::LepingleYor,
                        &Flavor::Norm(spec),
                    )?);
                }
                out.extend(check_stein_lepingle_yor(
                    inst,
                    SteinWhich::LepingleYor,
                    &Flavor::PhiMoment(OrliczFunction::TwoPower { p: 1.0, q: 2.0 }),
                )?);
            }
            "hardy" => {
                for &r in &[0.5, 1.0, 1.5, 2.0] {
                    out.extend(check_hardy_inequalities(inst, &SpaceSpec::lp(r))?);
                }
            }
            "davis" => {
                for &r in &[1.0, 2.0] {
                    out.extend(check_davis_inclusions(inst, &SpaceSpec::lp(r))?);
                }
            }
            other => {
                return Err(Error::InvalidParameter(format!("unknown check '{other}'")))
            }
        }
    }
    Ok(out)
}

/// Runs every check named in the config on one instance.
pub fn check_dispatch(inst: &Instance, cfg: &SuiteConfig) -> Result<Vec<RatioReport>> {
    run_instance_checks(inst, cfg)
}

/// Runs the configured checks over the seed x dim corpus (optionally in
/// parallel, capped by `NCMART_THREADS`) and aggregates the results
/// deterministically.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    let mut work: Vec<InstanceSpec> = Vec::new();
    for &dim in &cfg.dims {
        for &seed in &cfg.seeds {
            let levels = levels_for(dim, cfg.mode);
            work.push(InstanceSpec {
                dim,
                levels,
                mode: cfg.mode,
                seed,
            });
        }
    }
    let threads = std::env::var("NCMART_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<RatioReport>>> = pool.install(|| {
        work.par_iter()
            .map(|spec| {
                let inst = gen_instance(spec)?;
                run_instance_checks(&inst, cfg)
            })
            .collect()
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    let reports = RatioReport::merge(all);
    let trends = trend_guards(&reports);
    let pass = reports.iter().all(|r| r.pass) && trends.iter().all(|t| t.pass);
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default();
    Ok(Report {
        timestamp,
        config: cfg.clone(),
        reports,
        trends,
        pass,
    })
}
