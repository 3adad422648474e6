//! Coefficient schedules (a_n, b_n, c_n) for second-order gossip
//! x_{n+1} = a_n ω*x_n + b_n x_n − c_n x_{n−1}.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::JacobiParams;

/// Tolerance on a_n + b_n − c_n = 1.
pub const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid Jacobi parameters alpha={alpha}, beta={beta}: {reason}")]
    InvalidParameters {
        alpha: f64,
        beta: f64,
        reason: &'static str,
    },
    #[error("schedule {name} has no coefficients for round {n}")]
    Exhausted { name: String, n: usize },
    #[error("schedule {name}, round {n}: a+b-c = {sum}, not 1")]
    NotConservative { name: String, n: usize, sum: f64 },
    #[error("schedule {name}: c_0 must be 0, found {c0}")]
    NonzeroInitialDamping { name: String, c0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Triple {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// a + b − c, which must equal 1 for the recursion to conserve mass.
    pub fn conservation(&self) -> f64 {
        self.a + self.b - self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScheduleFamily {
    JacobiPrinted { dim: usize },
    JacobiGeneral { alpha: f64, beta: f64 },
    Custom { name: String },
}

type Rule = Arc<dyn Fn(usize) -> Triple + Send + Sync>;

#[derive(Clone)]
enum Source {
    Printed(f64),
    General(JacobiParams),
    Table(Vec<Triple>),
    Rule(Rule),
}

/// A producer of recursion coefficients, with c_0 = 0.
#[derive(Clone)]
pub struct CoefficientSchedule {
    family: ScheduleFamily,
    source: Source,
}

impl fmt::Debug for CoefficientSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSchedule")
            .field("family", &self.family)
            .finish_non_exhaustive()
    }
}

impl CoefficientSchedule {
    pub fn family(&self) -> &ScheduleFamily {
        &self.family
    }

    pub fn label(&self) -> String {
        match &self.family {
            ScheduleFamily::JacobiPrinted { dim } => format!("jacobi-d{dim}"),
            ScheduleFamily::JacobiGeneral { alpha, beta } => format!("jacobi({alpha},{beta})"),
            ScheduleFamily::Custom { name } => name.clone(),
        }
    }

    /// Jacobi parameters when the schedule belongs to a Jacobi family.
    pub fn jacobi_params(&self) -> Option<JacobiParams> {
        match self.family {
            ScheduleFamily::JacobiPrinted { dim } => Some(JacobiParams::for_dimension(dim)),
            ScheduleFamily::JacobiGeneral { alpha, beta } => JacobiParams::new(alpha, beta).ok(),
            ScheduleFamily::Custom { .. } => None,
        }
    }

    pub fn coefficients(&self, n: usize) -> Result<Triple, ScheduleError> {
        match &self.source {
            Source::Printed(d) => Ok(printed_triple(*d, n)),
            Source::General(p) => Ok(general_triple(*p, n)),
            Source::Rule(f) => Ok(f(n)),
            Source::Table(rows) => rows.get(n).copied().ok_or_else(|| ScheduleError::Exhausted {
                name: self.label(),
                n,
            }),
        }
    }

    /// Number of tabulated rounds, if the schedule is finite.
    pub fn len(&self) -> Option<usize> {
        match &self.source {
            Source::Table(rows) => Some(rows.len()),
            _ => None,
        }
    }

    /// A tabulated schedule; every row must conserve mass and c_0 must be 0.
    pub fn tabulated(name: impl Into<String>, triples: Vec<Triple>) -> Result<Self, ScheduleError> {
        let name = name.into();
        if let Some(first) = triples.first() {
            if first.c != 0.0 {
                return Err(ScheduleError::NonzeroInitialDamping {
                    name,
                    c0: first.c,
                });
            }
        }
        for (n, t) in triples.iter().enumerate() {
            let sum = t.conservation();
            if (sum - 1.0).abs() > CONSERVATION_TOL || !sum.is_finite() {
                return Err(ScheduleError::NotConservative { name, n, sum });
            }
        }
        Ok(Self {
            family: ScheduleFamily::Custom { name },
            source: Source::Table(triples),
        })
    }

    /// A schedule given by a rule; the caller is responsible for conservation.
    pub fn from_rule(
        name: impl Into<String>,
        rule: impl Fn(usize) -> Triple + Send + Sync + 'static,
    ) -> Self {
        Self {
            family: ScheduleFamily::Custom { name: name.into() },
            source: Source::Rule(Arc::new(rule)),
        }
    }
}

/// The closed-form (d/2, 0) Jacobi schedule.
pub fn jacobi_printed_schedule(dim: usize) -> CoefficientSchedule {
    assert!(dim >= 1, "dimension must be positive");
    CoefficientSchedule {
        family: ScheduleFamily::JacobiPrinted { dim },
        source: Source::Printed(dim as f64),
    }
}

fn printed_triple(d: f64, n: usize) -> Triple {
    if n == 0 {
        return Triple::new((d + 4.0) / (2.0 * (2.0 + d)), d / (2.0 * (2.0 + d)), 0.0);
    }
    let n = n as f64;
    let h = d / 2.0;
    let shift = n + 1.0 + h;
    let a = (2.0 * n + h + 1.0) * (2.0 * n + h + 2.0) / (2.0 * shift * shift);
    let b = d * d * (2.0 * n + h + 1.0) / (8.0 * shift * shift * (2.0 * n + h));
    let c = n * n * (2.0 * n + h + 2.0) / (shift * shift * (2.0 * n + h));
    Triple::new(a, b, c)
}

/// Schedule whose iterates are π_n^{(α,β)}(ω) = P_n^{(α,β)}(ω) / P_n^{(α,β)}(1).
///
/// Obtained from the classical three-term recurrence of P_n^{(α,β)} divided
/// through by P_{n+1}(1), using P_{n+1}(1)/P_n(1) = (n+α+1)/(n+1).
pub fn jacobi_general_schedule(alpha: f64, beta: f64) -> Result<CoefficientSchedule, ScheduleError> {
    let params = JacobiParams::new(alpha, beta).map_err(|_| ScheduleError::InvalidParameters {
        alpha,
        beta,
        reason: "alpha and beta must exceed -1",
    })?;
    Ok(CoefficientSchedule {
        family: ScheduleFamily::JacobiGeneral { alpha, beta },
        source: Source::General(params),
    })
}

fn general_triple(p: JacobiParams, n: usize) -> Triple {
    let (alpha, beta) = (p.alpha(), p.beta());
    let s = alpha + beta;
    if n == 0 {
        // π_1(λ) = ((s+2)λ + α − β) / (2(α+1))
        return Triple::new((s + 2.0) / (2.0 * (alpha + 1.0)), (alpha - beta) / (2.0 * (alpha + 1.0)), 0.0);
    }
    let n = n as f64;
    let a = (2.0 * n + s + 1.0) * (2.0 * n + s + 2.0) / (2.0 * (n + s + 1.0) * (n + alpha + 1.0));
    let b = (2.0 * n + s + 1.0) * (alpha - beta) * (alpha + beta)
        / (2.0 * (n + s + 1.0) * (2.0 * n + s) * (n + alpha + 1.0));
    let c = n * (n + beta) * (2.0 * n + s + 2.0) / ((n + s + 1.0) * (2.0 * n + s) * (n + alpha + 1.0));
    Triple::new(a, b, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticSample {
    pub n: usize,
    /// |a_n − 2|
    pub a_gap: f64,
    /// |n(1 − c_n) − (2α+1)|
    pub damping_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub expected_limit: f64,
    pub samples: Vec<AsymptoticSample>,
    pub converging: bool,
}

pub const ASYMPTOTIC_ROUNDS: [usize; 4] = [100, 1_000, 10_000, 100_000];

/// Samples a_n → 2 and n(1 − c_n) → `expected_limit` at n = 10², …, 10⁵.
///
/// The schedule is flagged unless both gaps shrink between the last two samples.
pub fn check_schedule_asymptotics(
    schedule: &CoefficientSchedule,
    expected_limit: f64,
) -> Result<AsymptoticsReport, ScheduleError> {
    let samples = ASYMPTOTIC_ROUNDS
        .iter()
        .map(|&n| {
            let t = schedule.coefficients(n)?;
            Ok(AsymptoticSample {
                n,
                a_gap: (t.a - 2.0).abs(),
                damping_gap: (n as f64 * (1.0 - t.c) - expected_limit).abs(),
            })
        })
        .collect::<Result<Vec<_>, ScheduleError>>()?;
    let [.., prev, last] = samples.as_slice() else {
        unreachable!()
    };
    let shrinking = |a: f64, b: f64| b < a || (a == 0.0 && b == 0.0);
    let converging = shrinking(prev.a_gap, last.a_gap) && shrinking(prev.damping_gap, last.damping_gap);
    Ok(AsymptoticsReport {
        expected_limit,
        samples,
        converging,
    })
}
