//! Fourier-side tools for lattice fields and the numerical checks of the
//! limit theorems (local CLT, weak and local EPD convergence, sharp ℓ² rate).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{run_second_order, run_simple, EngineError};
use crate::lattice::{LatticeError, LatticeFilter, ScalarField};
use crate::oracle::{
    contract_axes, epd_filtered_on_lattice, unit_ball_volume, AxisTable, Covariance, EpdSolution,
    HeatSolution, OracleError,
};
use crate::schedule::CoefficientSchedule;
use crate::specfun::{jacobi_normalized, mehler_heine_limit, JacobiParams};

/// Default cap on the final scaled sup error of the local CLT check.
pub const LOCAL_CLT_THRESHOLD: f64 = 0.05;
/// Default relative tolerance on the sharp-rate ratio.
pub const SHARP_RATE_TOLERANCE: f64 = 0.05;
/// Gaps at or below this level count as converged in the weak-EPD check.
pub const GAP_FLOOR: f64 = 1e-14;
/// Margin added to the comparison box of the local EPD check.
pub const LOCAL_EPD_PADDING: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("need at least {needed} quadrature points per dimension, got {got}")]
    ResolutionTooLow { needed: usize, got: usize },
    #[error("filter is not aperiodic: {0}")]
    NotAperiodic(LatticeError),
    #[error("filter is not symmetric")]
    NotSymmetric,
    #[error("schedule {0} is not a Jacobi schedule")]
    NotJacobi(String),
    #[error("frequency has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// x̂(ξ) = Σ_v e^{i⟨ξ,v⟩} x(v), summed over the box of `field`.
pub fn field_fourier(field: &ScalarField, xi: &[f64]) -> Complex64 {
    assert_eq!(xi.len(), field.dim(), "frequency dimension");
    let m = field.box_radius() as i64;
    let phases: Vec<Vec<Complex64>> = xi
        .iter()
        .map(|&x| (-m..=m).map(|v| Complex64::from_polar(1.0, x * v as f64)).collect())
        .collect();
    let side = field.side();
    let dim = field.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for (flat, &value) in field.values().iter().enumerate() {
        if value == 0.0 {
            continue;
        }
        let mut rem = flat;
        let mut phase = Complex64::new(1.0, 0.0);
        for axis in (0..dim).rev() {
            phase *= phases[axis][rem % side];
            rem /= side;
        }
        acc += phase * value;
    }
    acc
}

/// (1/M^d) Σ_j |x̂(ξ_j)|² on the grid ξ_j = −π + 2πj/M; equals Σ_v x(v)²
/// when M ≥ 2m + 1.
pub fn plancherel_l2(field: &ScalarField, points: usize) -> Result<f64, SpectralError> {
    let needed = 2 * field.box_radius() + 1;
    if points < needed {
        return Err(SpectralError::ResolutionTooLow { needed, got: points });
    }
    let side = field.side();
    let m = field.box_radius() as f64;
    let mut data = Vec::with_capacity(points * side);
    for j in 0..points {
        let xi = -PI + 2.0 * PI * j as f64 / points as f64;
        for k in 0..side {
            data.push(Complex64::from_polar(1.0, xi * (k as f64 - m)));
        }
    }
    let table = AxisTable { rows: points, cols: side, data };
    let values = field.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let spectrum = contract_axes(values, vec![side; field.dim()], &vec![table; field.dim()]);
    let total: f64 = spectrum.iter().map(|z| z.norm_sqr()).sum();
    Ok(total / (points as f64).powi(field.dim() as i32))
}

/// Which statement a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    #[serde(rename = "CLT")]
    Clt,
    LocalCLT,
    WeakEPD,
    LocalEPD,
    SharpRate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub n: usize,
    pub metric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl SeriesPoint {
    fn new(n: usize, metric: f64) -> Self {
        Self {
            n,
            metric,
            eps: None,
            value: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub theorem_id: TheoremId,
    pub params: BTreeMap<String, String>,
    pub series: Vec<SeriesPoint>,
    pub verdict: Verdict,
}

impl TheoremReport {
    pub fn metrics(&self) -> Vec<f64> {
        self.series.iter().map(|p| p.metric).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV mirror of the series: n, eps, metric, value (empty when absent).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,eps,metric,value\n");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for p in &self.series {
            let _ = writeln!(out, "{},{},{},{}", p.n, opt(p.eps), p.metric, opt(p.value));
        }
        out
    }
}

/// Whether each entry is strictly smaller than the previous one.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn last_three(values: &[f64]) -> &[f64] {
    &values[values.len().saturating_sub(3)..]
}

fn aperiodic(filter: &LatticeFilter) -> Result<LatticeFilter, SpectralError> {
    let mut f = filter.clone();
    f.ensure_aperiodic().map_err(SpectralError::NotAperiodic)?;
    Ok(f)
}

fn covariance_of(filter: &LatticeFilter) -> Covariance {
    Covariance::new(filter.covariance().clone()).expect("validated filters have SPD covariance")
}

fn jacobi_of(schedule: &CoefficientSchedule) -> Result<JacobiParams, SpectralError> {
    schedule
        .jacobi_params()
        .ok_or_else(|| SpectralError::NotJacobi(schedule.label()))
}

fn base_params(filter: &LatticeFilter) -> BTreeMap<String, String> {
    BTreeMap::from([("filter".to_string(), filter.label().to_string())])
}

/// 1/((det Q)^{1/2} |B(0,1)|), the limit of n^d Σ_v x_n(v)² for the
/// Jacobi (d/2, 0) iteration.
pub fn predicted_rate_constant(filter: &LatticeFilter) -> f64 {
    let cov = covariance_of(filter);
    1.0 / (cov.det().sqrt() * unit_ball_volume(filter.dim()))
}

/// e_n = n^{d/2} sup_v |x_n(v) − u(n, v)| for simple gossip against the heat
/// kernel with the filter's covariance. Vertices outside the simulation box
/// contribute the analytic Gaussian tail bound.
pub fn verify_local_clt(
    filter: &LatticeFilter,
    rounds: &[usize],
    threshold: f64,
) -> Result<TheoremReport, SpectralError> {
    let filter = aperiodic(filter)?;
    let n_max = rounds.iter().copied().max().unwrap_or(0);
    let trace = run_simple(&filter, n_max, rounds)?;
    let d = filter.dim() as f64;
    let mut series = Vec::new();
    for &n in rounds.iter().filter(|&&n| n > 0) {
        let x = trace.snapshot(n)?;
        let heat = HeatSolution::new(covariance_of(&filter), n as f64)?;
        let mut sup = heat.tail_bound((n * filter.radius() + 1) as f64);
        let mut y = vec![0.0; filter.dim()];
        for (v, value) in x.iter() {
            for (yi, vi) in y.iter_mut().zip(&v) {
                *yi = *vi as f64;
            }
            sup = sup.max((value - heat.eval(&y)?).abs());
        }
        series.push(SeriesPoint::new(n, (n as f64).powf(d / 2.0) * sup));
    }
    let metrics: Vec<f64> = series.iter().map(|p| p.metric).collect();
    let passed = strictly_decreasing(last_three(&metrics))
        && metrics.last().is_some_and(|&e| e < threshold);
    let mut params = base_params(&filter);
    params.insert("threshold".into(), threshold.to_string());
    Ok(TheoremReport {
        theorem_id: TheoremId::LocalCLT,
        params,
        series,
        verdict: Verdict {
            passed,
            rule: format!("decreasing over last three rounds and final < {threshold}"),
        },
    })
}

/// Round index ⌊t/ε⌋, robust to ε not being exactly representable.
pub fn rescaled_round(t: f64, eps: f64) -> usize {
    (t / eps + 1e-9).floor() as usize
}

/// |π_{⌊t/ε⌋}(ω̂(εξ)) − û(t, ξ)| for each ε, with α taken from the schedule.
pub fn verify_weak_epd_pointwise(
    filter: &LatticeFilter,
    schedule: &CoefficientSchedule,
    xi: &[f64],
    t: f64,
    eps_list: &[f64],
) -> Result<TheoremReport, SpectralError> {
    if !filter.is_symmetric() {
        return Err(SpectralError::NotSymmetric);
    }
    if xi.len() != filter.dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: filter.dim(),
            found: xi.len(),
        });
    }
    let filter = aperiodic(filter)?;
    let params = jacobi_of(schedule)?;
    let limit = EpdSolution::new(params.alpha(), covariance_of(&filter), t)?.fourier(xi)?;
    let mut series = Vec::new();
    for &eps in eps_list {
        let n = rescaled_round(t, eps);
        let scaled: Vec<f64> = xi.iter().map(|x| eps * x).collect();
        let lambda = if scaled.iter().all(|&x| x == 0.0) {
            1.0
        } else {
            filter.fourier(&scaled).re
        };
        let gap = (jacobi_normalized(n, params, lambda) - limit).abs();
        series.push(SeriesPoint {
            eps: Some(eps),
            ..SeriesPoint::new(n, gap)
        });
    }
    let metrics: Vec<f64> = series.iter().map(|p| p.metric).collect();
    let passed = metrics
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= GAP_FLOOR && w[1] <= GAP_FLOOR));
    let mut report_params = base_params(&filter);
    report_params.insert("schedule".into(), schedule.label());
    report_params.insert("xi".into(), format!("{xi:?}"));
    report_params.insert("t".into(), t.to_string());
    Ok(TheoremReport {
        theorem_id: TheoremId::WeakEPD,
        params: report_params,
        series,
        verdict: Verdict {
            passed,
            rule: "gap decreasing as eps shrinks".into(),
        },
    })
}

/// E_n = n^d Σ_v (x_n(v) − (u(n,·)*ψ)(v))² on the box [−(nR+5), nR+5]^d.
/// Round 0 is skipped since the oracle is undefined at t = 0.
pub fn verify_local_epd(
    filter: &LatticeFilter,
    schedule: &CoefficientSchedule,
    rounds: &[usize],
    quad_points: Option<usize>,
) -> Result<TheoremReport, SpectralError> {
    if !filter.is_symmetric() {
        return Err(SpectralError::NotSymmetric);
    }
    let filter = aperiodic(filter)?;
    let params = jacobi_of(schedule)?;
    let n_max = rounds.iter().copied().max().unwrap_or(0);
    let trace = run_second_order(&filter, schedule, n_max, rounds)?;
    let d = filter.dim() as i32;
    let mut series = Vec::new();
    for &n in rounds.iter().filter(|&&n| n > 0) {
        let m = n * filter.radius() + LOCAL_EPD_PADDING;
        let x = trace.snapshot(n)?.embedded(m);
        let sol = EpdSolution::new(params.alpha(), covariance_of(&filter), n as f64)?;
        let u = epd_filtered_on_lattice(&sol, m, quad_points)?;
        let dist: f64 = x
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        series.push(SeriesPoint::new(n, (n as f64).powi(d) * dist));
    }
    let metrics: Vec<f64> = series.iter().map(|p| p.metric).collect();
    let mut report_params = base_params(&filter);
    report_params.insert("schedule".into(), schedule.label());
    Ok(TheoremReport {
        theorem_id: TheoremId::LocalEPD,
        params: report_params,
        series,
        verdict: Verdict {
            passed: metrics.len() >= 2 && strictly_decreasing(last_three(&metrics)),
            rule: "decreasing over last three rounds".into(),
        },
    })
}

/// Ratio of n^d Σ_v x_n(v)² to [`predicted_rate_constant`] per round; the
/// series `value` holds n^d Σ_v x_n(v)² itself.
pub fn sharp_rate_estimate(
    filter: &LatticeFilter,
    schedule: &CoefficientSchedule,
    rounds: &[usize],
    tolerance: f64,
) -> Result<TheoremReport, SpectralError> {
    if !filter.is_symmetric() {
        return Err(SpectralError::NotSymmetric);
    }
    let filter = aperiodic(filter)?;
    jacobi_of(schedule)?;
    let n_max = rounds.iter().copied().max().unwrap_or(0);
    let trace = run_second_order(&filter, schedule, n_max, &[])?;
    let predicted = predicted_rate_constant(&filter);
    let d = filter.dim() as i32;
    let series: Vec<SeriesPoint> = rounds
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let scaled = (n as f64).powi(d) * trace.metrics[n].l2_sq;
            SeriesPoint {
                value: Some(scaled),
                ..SeriesPoint::new(n, scaled / predicted)
            }
        })
        .collect();
    let passed = series
        .last()
        .is_some_and(|p| (p.metric - 1.0).abs() <= tolerance);
    let mut params = base_params(&filter);
    params.insert("schedule".into(), schedule.label());
    params.insert("predicted".into(), predicted.to_string());
    Ok(TheoremReport {
        theorem_id: TheoremId::SharpRate,
        params,
        series,
        verdict: Verdict {
            passed,
            rule: format!("final ratio within {tolerance} of 1"),
        },
    })
}

/// Least-squares slope of log y against log n.
pub fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, y)| ((n as f64).ln(), y.ln()))
        .collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// |π_n^{(d/2,0)}(1 − z²/(2n²)) − Λ_{d/2}(z)|.
pub fn mehler_heine_gap(dim: usize, n: usize, z: f64) -> f64 {
    let lambda = 1.0 - z * z / (2.0 * (n * n) as f64);
    let p = jacobi_normalized(n, JacobiParams::for_dimension(dim), lambda);
    let limit = mehler_heine_limit(dim as f64, z).expect("z > 0");
    (p - limit).abs()
}
