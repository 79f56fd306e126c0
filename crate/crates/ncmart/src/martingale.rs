//! Martingales induced by a filtration, their square functions, and the Hardy
//! and bmo quasi-norms built on them.

use serde::{Deserialize, Serialize};

use crate::algebra::{conditional_expectation, sqrt_positive, Filtration, Operator, TracialAlgebra};
use crate::rearrangement::{mu, singular_values, StepFunction};
use crate::symspaces::{norm, SpaceSpec};
use crate::{Error, Result};

/// A martingale `(x_n = E_n x)` with eagerly cached levels and differences
/// (`x_0 = 0`).
#[derive(Debug, Clone)]
pub struct Martingale {
    pub algebra: TracialAlgebra,
    pub filtration: Filtration,
    pub terminal: Operator,
    pub levels: Vec<Operator>,
    pub diffs: Vec<Operator>,
}

impl Martingale {
    pub fn new(
        algebra: TracialAlgebra,
        filtration: Filtration,
        terminal: Operator,
    ) -> Result<Self> {
        filtration.validate(&algebra)?;
        algebra.check_conforms(&terminal)?;
        let n = filtration.levels();
        let mut levels = Vec::with_capacity(n);
        let mut diffs = Vec::with_capacity(n);
        let mut prev = algebra.zero();
        for k in 1..=n {
            let xk = conditional_expectation(&algebra, &filtration, &terminal, k)?;
            diffs.push(xk.sub(&prev));
            levels.push(xk.clone());
            prev = xk;
        }
        Ok(Martingale {
            algebra,
            filtration,
            terminal,
            levels,
            diffs,
        })
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    /// Builds the martingale whose differences are the given sequence
    /// (the sequence need not be a difference sequence; the terminal is the
    /// plain sum). Used by decomposition code that assembles `y` and `z`.
    pub fn from_diffs(
        algebra: TracialAlgebra,
        filtration: Filtration,
        diffs: Vec<Operator>,
    ) -> Result<Self> {
        let mut terminal = algebra.zero();
        let mut levels = Vec::with_capacity(diffs.len());
        for d in &diffs {
            terminal = terminal.add(d);
            levels.push(terminal.clone());
        }
        Ok(Martingale {
            algebra,
            filtration,
            terminal,
            levels,
            diffs,
        })
    }
}

/// An adapted (or general) operator sequence `(a_n)_{n=1..N}`.
#[derive(Debug, Clone)]
pub struct SequenceBundle {
    pub algebra: TracialAlgebra,
    pub filtration: Filtration,
    pub entries: Vec<Operator>,
    pub adapted: bool,
}

impl SequenceBundle {
    pub fn new(
        algebra: TracialAlgebra,
        filtration: Filtration,
        entries: Vec<Operator>,
        adapted: bool,
    ) -> Result<Self> {
        filtration.validate(&algebra)?;
        if entries.len() != filtration.levels() {
            return Err(Error::ShapeMismatch(format!(
                "sequence length {} vs filtration levels {}",
                entries.len(),
                filtration.levels()
            )));
        }
        for (k, a) in entries.iter().enumerate() {
            algebra.check_conforms(a)?;
            if adapted {
                let ea = conditional_expectation(&algebra, &filtration, a, k + 1)?;
                let defect = ea.sub(a).op_norm();
                if defect > 1e-8 * (1.0 + a.op_norm()) {
                    return Err(Error::InvalidInstance(format!(
                        "entry {} is not adapted: defect {defect:.3e}",
                        k + 1
                    )));
                }
            }
        }
        Ok(SequenceBundle {
            algebra,
            filtration,
            entries,
            adapted,
        })
    }
}

/// Square-function kinds. The plain kinds square-sum the entries; the
/// conditioned kinds apply `E_{k-1}` (with `E_0 := E_1`) or `E_k` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareKind {
    /// `S_c`: plain column square function of martingale differences.
    Sc,
    /// `s_c`: conditioned column square function of martingale differences.
    ScCond,
    /// `S_r`: row square function (adjoint differences).
    Sr,
    /// `s_r`: conditioned row square function.
    SrCond,
    /// Plain column square function of a sequence.
    SeqPlain,
    /// `sigma_c`: conditioned (`E_{k-1}`) square function of a sequence.
    SeqCond,
    /// `sigma_c^+`: `E_k`-conditioned square function of a sequence.
    SeqCondPlus,
}

impl SquareKind {
    pub fn is_conditioned(self) -> bool {
        matches!(
            self,
            SquareKind::ScCond | SquareKind::SrCond | SquareKind::SeqCond | SquareKind::SeqCondPlus
        )
    }

    fn is_row(self) -> bool {
        matches!(self, SquareKind::Sr | SquareKind::SrCond)
    }
}

/// Squared partial square function `sum_{k <= upto}` of the given entries:
/// `|a_k|^2`, `E_{k-1}|a_k|^2`, or `E_k|a_k|^2` depending on kind.
pub fn square_sq_from_entries(
    algebra: &TracialAlgebra,
    filtration: &Filtration,
    entries: &[Operator],
    kind: SquareKind,
    upto: usize,
) -> Result<Operator> {
    if upto > entries.len() {
        return Err(Error::LevelOutOfRange {
            level: upto,
            max: entries.len(),
        });
    }
    let mut acc = algebra.zero();
    for (i, a) in entries.iter().take(upto).enumerate() {
        let sq = if kind.is_row() {
            a.adjoint().gram()
        } else {
            a.gram()
        };
        let term = match kind {
            SquareKind::Sc | SquareKind::Sr | SquareKind::SeqPlain => sq,
            SquareKind::ScCond | SquareKind::SrCond | SquareKind::SeqCond => {
                // E_{k-1} with E_0 := E_1; entry i is level k = i + 1
                conditional_expectation(algebra, filtration, &sq, i)?
            }
            SquareKind::SeqCondPlus => conditional_expectation(algebra, filtration, &sq, i + 1)?,
        };
        acc = acc.add(&term);
    }
    Ok(acc.symmetrize())
}

/// Square function of a martingale: the positive square root of the squared
/// partial sums up to `upto` (`None` means all levels).
pub fn square_function(m: &Martingale, kind: SquareKind, upto: Option<usize>) -> Result<Operator> {
    let upto = upto.unwrap_or(m.len());
    let sq = square_sq_from_entries(&m.algebra, &m.filtration, &m.diffs, kind, upto)?;
    sqrt_positive(&sq)
}

/// Square function of a sequence bundle.
pub fn seq_square_function(
    b: &SequenceBundle,
    kind: SquareKind,
    upto: Option<usize>,
) -> Result<Operator> {
    let upto = upto.unwrap_or(b.entries.len());
    let sq = square_sq_from_entries(&b.algebra, &b.filtration, &b.entries, kind, upto)?;
    sqrt_positive(&sq)
}

/// Hardy quasi-norm kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyKind {
    /// `H_E^c`: E-norm of `S_c`.
    Hc,
    /// `h_E^c`: E-norm of `s_c`.
    Hcond,
    /// `h_E^d`: E-norm of the diagonal difference operator.
    Hd,
    /// `H_E^r`.
    Hr,
    /// `h_E^r`.
    HrCond,
    /// `h_inf^c = ||s_c(x)||_inf`.
    HinfC,
}

/// Decreasing rearrangement of the block-diagonal amplification
/// `diag(dx_1, ..., dx_N)`: the merged singular values of all differences.
pub fn diagonal_mu(m: &Martingale) -> StepFunction {
    let mut samples = Vec::new();
    for d in &m.diffs {
        samples.extend(singular_values(&m.algebra, d));
    }
    StepFunction::from_samples(samples)
}

/// Hardy quasi-norm of a martingale in the symmetric space `spec`.
pub fn hardy_norm(m: &Martingale, kind: HardyKind, spec: &SpaceSpec) -> Result<f64> {
    let f = match kind {
        HardyKind::Hc => mu(&m.algebra, &square_function(m, SquareKind::Sc, None)?)?,
        HardyKind::Hcond => mu(&m.algebra, &square_function(m, SquareKind::ScCond, None)?)?,
        HardyKind::Hr => mu(&m.algebra, &square_function(m, SquareKind::Sr, None)?)?,
        HardyKind::HrCond => mu(&m.algebra, &square_function(m, SquareKind::SrCond, None)?)?,
        HardyKind::Hd => diagonal_mu(m),
        HardyKind::HinfC => {
            return Ok(square_function(m, SquareKind::ScCond, None)?.op_norm());
        }
    };
    norm(spec, &f)
}

/// Conditioned little-BMO norm
/// `sup_{1<=n<=N} ||E_n |x - x_{n-1}|^2||_inf^{1/2}` with `x_0 = 0`.
pub fn bmo_c_norm(m: &Martingale) -> Result<f64> {
    let mut best = 0.0f64;
    for n in 1..=m.len() {
        let tail = if n == 1 {
            m.terminal.clone()
        } else {
            m.terminal.sub(&m.levels[n - 2])
        };
        let e = conditional_expectation(&m.algebra, &m.filtration, &tail.gram(), n)?;
        best = best.max(e.op_norm());
    }
    Ok(best.sqrt())
}

/// A certified value that may only be an upper bound on the true quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub value: f64,
    pub is_upper_bound: bool,
}

/// Mixed-Hardy side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedSide {
    /// `H_E = H_E^c + H_E^r` (E between L_p and L_2): infimum over splittings,
    /// reported as the min over the supplied candidates (upper bound).
    Sum,
    /// `H_F = H_F^c /\ H_F^r`: max of the two norms (exact).
    Intersection,
}

/// Mixed Hardy norm. For `Sum`, `candidates` are pairs `(a, b)` of martingales
/// with `a + b = x`; the result is the best achieved `||a||_{Hc} + ||b||_{Hr}`.
pub fn mixed_hardy_norm(
    m: &Martingale,
    side: MixedSide,
    spec: &SpaceSpec,
    candidates: &[(Martingale, Martingale)],
) -> Result<NormBracket> {
    match side {
        MixedSide::Intersection => {
            let c = hardy_norm(m, HardyKind::Hc, spec)?;
            let r = hardy_norm(m, HardyKind::Hr, spec)?;
            Ok(NormBracket {
                value: c.max(r),
                is_upper_bound: false,
            })
        }
        MixedSide::Sum => {
            if candidates.is_empty() {
                return Err(Error::InvalidParameter(
                    "sum-side mixed norm needs at least one candidate splitting".into(),
                ));
            }
            let scale = 1.0 + m.terminal.op_norm();
            let mut best = f64::INFINITY;
            for (a, b) in candidates {
                let resid = a.terminal.add(&b.terminal).sub(&m.terminal).op_norm();
                if resid > 1e-8 * scale {
                    return Err(Error::InvalidInstance(format!(
                        "candidate does not sum to x: residual {resid:.3e}"
                    )));
                }
                let cost = hardy_norm(a, HardyKind::Hc, spec)? + hardy_norm(b, HardyKind::Hr, spec)?;
                best = best.min(cost);
            }
            Ok(NormBracket {
                value: best,
                is_upper_bound: true,
            })
        }
    }
}
