//! Simple and second-order gossip recursions started from the Dirac field.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{second_order_step, LatticeError, LatticeFilter, ScalarField, Vertex};
use crate::schedule::{CoefficientSchedule, ScheduleError};

/// Default cap on the number of cells of the largest iterate.
pub const DEFAULT_CELL_BUDGET: usize = 100_000_000;
/// Tolerance on mass conservation per round.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{rounds} rounds need {cells} cells, over the budget of {budget}")]
    OutOfMemory {
        rounds: usize,
        cells: f64,
        budget: usize,
    },
    #[error("round {n} was not retained as a snapshot")]
    SnapshotMissing { n: usize },
    #[error("mass drifted to {mass} at round {n}")]
    MassDrift { n: usize, mass: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub n: usize,
    pub l2_sq: f64,
    pub sup: f64,
    pub mass: f64,
}

impl RoundMetrics {
    fn of(n: usize, field: &ScalarField) -> Self {
        let (mass, l2_sq, sup) = field.summary();
        Self { n, l2_sq, sup, mass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub filter_id: String,
    /// "simple" or the schedule label.
    pub schedule_id: String,
    pub rounds: usize,
    pub snapshots: BTreeMap<usize, ScalarField>,
    pub metrics: Vec<RoundMetrics>,
}

impl IterationTrace {
    pub fn snapshot(&self, n: usize) -> Result<&ScalarField, EngineError> {
        self.snapshots.get(&n).ok_or(EngineError::SnapshotMissing { n })
    }

    /// Nonzero entries of x_n sorted lexicographically by vertex.
    pub fn fundamental_profile(&self, n: usize) -> Result<Vec<(Vertex, f64)>, EngineError> {
        Ok(self.snapshot(n)?.nonzero_entries())
    }
}

/// Runs gossip recursions for one filter under a cell budget.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    filter: &'a LatticeFilter,
    cell_budget: usize,
}

impl<'a> Engine<'a> {
    pub fn new(filter: &'a LatticeFilter) -> Self {
        Self {
            filter,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    pub fn with_cell_budget(mut self, budget: usize) -> Self {
        self.cell_budget = budget;
        self
    }

    fn check_budget(&self, n_max: usize) -> Result<(), EngineError> {
        let side = (2 * n_max * self.filter.radius() + 1) as f64;
        let cells = side.powi(self.filter.dim() as i32);
        if cells > self.cell_budget as f64 {
            return Err(EngineError::OutOfMemory {
                rounds: n_max,
                cells,
                budget: self.cell_budget,
            });
        }
        Ok(())
    }

    /// x₀ = 𝟙₀, x_{n+1} = ω * x_n.
    pub fn simple(&self, n_max: usize, snapshot_rounds: &[usize]) -> Result<IterationTrace, EngineError> {
        self.check_budget(n_max)?;
        let wanted: BTreeSet<usize> = snapshot_rounds.iter().copied().collect();
        let mut trace = self.empty_trace("simple".to_string(), n_max);
        let mut x = ScalarField::dirac(self.filter.dim());
        self.record(&mut trace, &wanted, 0, &x)?;
        let mut spare = ScalarField::zeros(self.filter.dim(), 0);
        for n in 1..=n_max {
            second_order_step(self.filter, 1.0, &x, 0.0, None, &mut spare)?;
            std::mem::swap(&mut x, &mut spare);
            self.record(&mut trace, &wanted, n, &x)?;
        }
        Ok(trace)
    }

    /// x₀ = 𝟙₀, x₁ = a₀ ω*x₀ + b₀ x₀, x_{n+1} = a_n ω*x_n + b_n x_n − c_n x_{n−1}.
    pub fn second_order(
        &self,
        schedule: &CoefficientSchedule,
        n_max: usize,
        snapshot_rounds: &[usize],
    ) -> Result<IterationTrace, EngineError> {
        self.check_budget(n_max)?;
        let wanted: BTreeSet<usize> = snapshot_rounds.iter().copied().collect();
        let mut trace = self.empty_trace(schedule.label(), n_max);
        let mut prev: Option<ScalarField> = None;
        let mut x = ScalarField::dirac(self.filter.dim());
        let mut spare = ScalarField::zeros(self.filter.dim(), 0);
        self.record(&mut trace, &wanted, 0, &x)?;
        for n in 0..n_max {
            let t = schedule.coefficients(n)?;
            let older = prev.as_ref().map(|p| (t.c, p));
            second_order_step(self.filter, t.a, &x, t.b, older, &mut spare)?;
            // rotate: prev <- x <- spare <- old prev's buffer
            let recycled = prev.replace(std::mem::replace(&mut x, spare));
            spare = recycled.unwrap_or_else(|| ScalarField::zeros(self.filter.dim(), 0));
            self.record(&mut trace, &wanted, n + 1, &x)?;
        }
        Ok(trace)
    }

    fn empty_trace(&self, schedule_id: String, rounds: usize) -> IterationTrace {
        IterationTrace {
            filter_id: self.filter.label().to_string(),
            schedule_id,
            rounds,
            snapshots: BTreeMap::new(),
            metrics: Vec::with_capacity(rounds + 1),
        }
    }

    fn record(
        &self,
        trace: &mut IterationTrace,
        wanted: &BTreeSet<usize>,
        n: usize,
        x: &ScalarField,
    ) -> Result<(), EngineError> {
        let m = RoundMetrics::of(n, x);
        if (m.mass - 1.0).abs() > MASS_TOL {
            return Err(EngineError::MassDrift { n, mass: m.mass });
        }
        trace.metrics.push(m);
        if wanted.contains(&n) {
            trace.snapshots.insert(n, x.clone());
        }
        Ok(())
    }
}

pub fn run_simple(
    filter: &LatticeFilter,
    n_max: usize,
    snapshot_rounds: &[usize],
) -> Result<IterationTrace, EngineError> {
    Engine::new(filter).simple(n_max, snapshot_rounds)
}

pub fn run_second_order(
    filter: &LatticeFilter,
    schedule: &CoefficientSchedule,
    n_max: usize,
    snapshot_rounds: &[usize],
) -> Result<IterationTrace, EngineError> {
    Engine::new(filter).second_order(schedule, n_max, snapshot_rounds)
}

/// Masses of x_0, ..., x_rounds after reduction modulo `period` in every
/// coordinate. Reduction commutes with convolution and with the recursion,
/// so these are the masses of the iterates on Z^d, while memory stays at
/// period^d cells. `schedule = None` runs simple gossip.
pub fn torus_masses(
    filter: &LatticeFilter,
    schedule: Option<&CoefficientSchedule>,
    rounds: usize,
    period: usize,
) -> Result<Vec<f64>, EngineError> {
    let dim = filter.dim();
    let period = period.max(1);
    let cells = period.pow(dim as u32);
    let targets: Vec<(f64, Vec<usize>)> = filter
        .entries()
        .iter()
        .map(|(v, w)| {
            let map = (0..cells)
                .map(|mut idx| {
                    let mut out = 0;
                    let mut stride = 1;
                    for &off in v.iter().rev() {
                        let c = (idx % period) as i64 + off;
                        out += c.rem_euclid(period as i64) as usize * stride;
                        stride *= period;
                        idx /= period;
                    }
                    out
                })
                .collect();
            (*w, map)
        })
        .collect();
    let mut x = vec![0.0; cells];
    x[0] = 1.0;
    let mut prev: Option<Vec<f64>> = None;
    let mut masses = Vec::with_capacity(rounds + 1);
    masses.push(1.0);
    for n in 0..rounds {
        let mut next = vec![0.0; cells];
        for (w, map) in &targets {
            for (i, &j) in map.iter().enumerate() {
                next[j] += w * x[i];
            }
        }
        if let Some(s) = schedule {
            let t = s.coefficients(n)?;
            for (i, y) in next.iter_mut().enumerate() {
                *y = t.a * *y + t.b * x[i] - prev.as_ref().map_or(0.0, |p| t.c * p[i]);
            }
            prev = Some(std::mem::replace(&mut x, next));
        } else {
            x = next;
        }
        masses.push(x.iter().sum());
    }
    Ok(masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lazy_filter, standard_filter, triangular_filter};
    use crate::schedule::jacobi_printed_schedule;
    use approx::assert_relative_eq;

    #[test]
    fn lazy_two_rounds() {
        let trace = run_simple(&lazy_filter(), 2, &[2]).unwrap();
        let x2 = trace.snapshot(2).unwrap();
        let expected = [1.0 / 16.0, 0.25, 3.0 / 8.0, 0.25, 1.0 / 16.0];
        for (got, want) in x2.values().iter().zip(expected) {
            assert_relative_eq!(*got, want, max_relative = 1e-15);
        }
    }

    #[test]
    fn zero_rounds_is_dirac() {
        let trace = run_simple(&triangular_filter(), 0, &[0]).unwrap();
        assert_eq!(trace.fundamental_profile(0).unwrap(), vec![(vec![0, 0], 1.0)]);
        let trace = run_second_order(&lazy_filter(), &jacobi_printed_schedule(1), 0, &[0]).unwrap();
        assert_eq!(trace.fundamental_profile(0).unwrap(), vec![(vec![0], 1.0)]);
    }

    #[test]
    fn return_probability_matches_path_count() {
        // Enumerate all 4³ paths of the nearest-neighbour walk on ℤ².
        let steps = [[1, 0], [-1, 0], [0, 1], [0, -1]];
        let mut returns = 0;
        for a in steps {
            for b in steps {
                for c in steps {
                    if a[0] + b[0] + c[0] == 0 && a[1] + b[1] + c[1] == 0 {
                        returns += 1;
                    }
                }
            }
        }
        let trace = run_simple(&standard_filter(2), 3, &[3]).unwrap();
        let at_origin = trace.snapshot(3).unwrap().get(&[0, 0]);
        assert_eq!(at_origin, returns as f64 / 64.0);
    }

    #[test]
    fn first_profile_simple() {
        let trace = run_simple(&standard_filter(1), 1, &[1]).unwrap();
        assert_eq!(
            trace.fundamental_profile(1).unwrap(),
            vec![(vec![-1], 0.5), (vec![1], 0.5)]
        );
        assert_eq!(
            trace.fundamental_profile(2),
            Err(EngineError::SnapshotMissing { n: 2 })
        );
    }

    #[test]
    fn jacobi_first_round_triangular() {
        let tri = triangular_filter();
        let trace = run_second_order(&tri, &jacobi_printed_schedule(2), 1, &[1]).unwrap();
        let x1 = trace.snapshot(1).unwrap();
        for (v, x) in x1.iter() {
            let w = tri
                .entries()
                .iter()
                .find(|(o, _)| *o == v)
                .map_or(0.0, |(_, w)| *w);
            let dirac = if v == [0, 0] { 1.0 } else { 0.0 };
            assert_relative_eq!(x, 0.75 * w + 0.25 * dirac, max_relative = 1e-15);
        }
    }

    #[test]
    fn mass_and_positivity() {
        let trace = run_simple(&triangular_filter(), 40, &[40]).unwrap();
        assert!(trace.metrics.iter().all(|m| (m.mass - 1.0).abs() < 1e-12));
        assert!(trace.snapshot(40).unwrap().values().iter().all(|x| *x >= 0.0));
        assert_eq!(trace.metrics.len(), 41);
        assert!(trace.metrics.iter().all(|m| m.l2_sq > 0.0));
    }

    #[test]
    fn jacobi_iterates_take_negative_values() {
        let snaps: Vec<usize> = (0..=10).collect();
        let trace = run_second_order(&triangular_filter(), &jacobi_printed_schedule(2), 10, &snaps).unwrap();
        let negative = trace
            .snapshots
            .values()
            .any(|f| f.values().iter().any(|x| *x < 0.0));
        assert!(negative);
    }

    #[test]
    fn deterministic() {
        let f = triangular_filter();
        let s = jacobi_printed_schedule(2);
        let a = run_second_order(&f, &s, 25, &[25]).unwrap();
        let b = run_second_order(&f, &s, 25, &[25]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_guard() {
        let err = Engine::new(&triangular_filter())
            .with_cell_budget(1000)
            .simple(100, &[])
            .unwrap_err();
        assert!(matches!(err, EngineError::OutOfMemory { rounds: 100, .. }));
    }

    #[test]
    fn support_stays_in_box() {
        let f = triangular_filter();
        let trace = run_simple(&f, 7, &[7]).unwrap();
        let x = trace.snapshot(7).unwrap();
        assert_eq!(x.box_radius(), 7 * f.radius());
    }

    #[test]
    fn torus_masses_track_the_engine() {
        let f = triangular_filter();
        let s = jacobi_printed_schedule(2);
        let direct = run_second_order(&f, &s, 60, &[]).unwrap();
        let folded = torus_masses(&f, Some(&s), 60, 5).unwrap();
        assert_eq!(folded.len(), 61);
        for (m, t) in direct.metrics.iter().zip(&folded) {
            assert!((m.mass - t).abs() < 1e-12);
        }
        let simple = torus_masses(&standard_filter(3), None, 40, 4).unwrap();
        assert!(simple.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }
}
