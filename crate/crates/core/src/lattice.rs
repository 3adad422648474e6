//! Translation-invariant averaging filters on ℤ^d and dense fields on
//! integer boxes.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on the weight sum and on the mean of a filter.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of the covariance.
pub const RANK_TOL: f64 = 1e-10;
/// Smallest admissible aperiodicity margin.
pub const MARGIN_TOL: f64 = 1e-6;

pub type Vertex = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("filter has no entries")]
    Empty,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("offset {0:?} appears more than once")]
    DuplicateOffset(Vertex),
    #[error("weight {weight} at offset {offset:?} is not strictly positive")]
    NonPositiveWeight { offset: Vertex, weight: f64 },
    #[error("weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("filter has nonzero mean {0:?}")]
    Drift(Vec<f64>),
    #[error("covariance is degenerate (smallest eigenvalue {0:e})")]
    Degenerate(f64),
    #[error("|filter transform| = {modulus} at xi = {xi:?}: the walk is periodic")]
    PeriodicityDetected { xi: Vec<f64>, modulus: f64 },
    #[error("aperiodicity margin {margin:e} at xi = {xi:?} is below threshold")]
    MarginTooSmall { xi: Vec<f64>, margin: f64 },
    #[error("aperiodicity grid needs at least 16 points per dimension, got {0}")]
    GridTooCoarse(usize),
}

/// A finitely supported, centered, normalized averaging kernel ω on ℤ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFilter {
    label: String,
    dim: usize,
    entries: Vec<(Vertex, f64)>,
    radius: usize,
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    symmetric: bool,
    aperiodicity_margin: Option<f64>,
}

impl LatticeFilter {
    /// Validates and builds a filter. Entries are stored sorted by offset.
    pub fn new(dim: usize, entries: Vec<(Vertex, f64)>) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if entries.is_empty() {
            return Err(LatticeError::Empty);
        }
        let mut seen = BTreeSet::new();
        for (offset, weight) in &entries {
            if offset.len() != dim {
                return Err(LatticeError::DimensionMismatch {
                    expected: dim,
                    found: offset.len(),
                });
            }
            if !seen.insert(offset.clone()) {
                return Err(LatticeError::DuplicateOffset(offset.clone()));
            }
            if !(*weight > 0.0) || !weight.is_finite() {
                return Err(LatticeError::NonPositiveWeight {
                    offset: offset.clone(),
                    weight: *weight,
                });
            }
        }
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));

        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(LatticeError::NotNormalized(total));
        }
        let mut mean = vec![0.0; dim];
        let mut covariance = DMatrix::zeros(dim, dim);
        for (offset, weight) in &entries {
            for i in 0..dim {
                mean[i] += weight * offset[i] as f64;
                for j in 0..dim {
                    covariance[(i, j)] += weight * (offset[i] * offset[j]) as f64;
                }
            }
        }
        if mean.iter().any(|m| m.abs() > NORMALIZATION_TOL) {
            return Err(LatticeError::Drift(mean));
        }
        let min_eig = covariance
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig <= RANK_TOL {
            return Err(LatticeError::Degenerate(min_eig));
        }
        let radius = entries
            .iter()
            .flat_map(|(o, _)| o.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        let symmetric = entries.iter().all(|(offset, weight)| {
            let mirror: Vertex = offset.iter().map(|c| -c).collect();
            entries
                .binary_search_by(|e| e.0.cmp(&mirror))
                .map(|i| (entries[i].1 - weight).abs() <= NORMALIZATION_TOL)
                .unwrap_or(false)
        });
        Ok(Self {
            label: "custom".to_string(),
            dim,
            entries,
            radius,
            mean,
            covariance,
            symmetric,
            aperiodicity_margin: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(Vertex, f64)] {
        &self.entries
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Q = Σ_v ω(v) v vᵀ.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn aperiodicity_margin(&self) -> Option<f64> {
        self.aperiodicity_margin
    }

    /// ω̂(ξ) = Σ_v ω(v) e^{i⟨ξ,v⟩}.
    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        debug_assert_eq!(xi.len(), self.dim);
        self.entries
            .iter()
            .map(|(offset, weight)| {
                let phase: f64 = offset.iter().zip(xi).map(|(&v, x)| v as f64 * x).sum();
                Complex64::from_polar(*weight, phase)
            })
            .sum()
    }

    /// Scans a uniform grid over [−π,π]^d for the largest λ̂ with
    /// |ω̂(ξ)| ≤ 1 − λ̂‖ξ‖², recording it on success.
    pub fn verify_aperiodicity(&mut self, grid_points_per_dim: usize) -> Result<f64, LatticeError> {
        let margin = aperiodicity_margin(self, grid_points_per_dim)?;
        self.aperiodicity_margin = Some(margin);
        Ok(margin)
    }

    /// Certifies aperiodicity with [`default_aperiodicity_grid`] unless a
    /// margin is already recorded.
    pub fn ensure_aperiodic(&mut self) -> Result<f64, LatticeError> {
        match self.aperiodicity_margin {
            Some(m) => Ok(m),
            None => self.verify_aperiodicity(default_aperiodicity_grid(self.dim)),
        }
    }
}

/// Grid resolution used when certifying aperiodicity.
pub fn default_aperiodicity_grid(dim: usize) -> usize {
    match dim {
        1 | 2 => 256,
        3 => 64,
        _ => 24,
    }
}

fn aperiodicity_margin(filter: &LatticeFilter, points: usize) -> Result<f64, LatticeError> {
    if points < 16 {
        return Err(LatticeError::GridTooCoarse(points));
    }
    let dim = filter.dim;
    let nodes: Vec<f64> = (0..points)
        .map(|k| -PI + 2.0 * PI * k as f64 / (points - 1) as f64)
        .collect();
    let total = points.pow(dim as u32);
    let mut best = f64::INFINITY;
    let mut best_xi = vec![0.0; dim];
    let mut xi = vec![0.0; dim];
    for flat in 0..total {
        let mut rem = flat;
        for axis in (0..dim).rev() {
            xi[axis] = nodes[rem % points];
            rem /= points;
        }
        let norm_sq: f64 = xi.iter().map(|x| x * x).sum();
        if norm_sq == 0.0 {
            continue;
        }
        let modulus = filter.fourier(&xi).norm();
        if modulus >= 1.0 - 1e-12 {
            return Err(LatticeError::PeriodicityDetected {
                xi: xi.clone(),
                modulus,
            });
        }
        let ratio = (1.0 - modulus) / norm_sq;
        if ratio < best {
            best = ratio;
            best_xi.clone_from(&xi);
        }
    }
    if best <= MARGIN_TOL {
        return Err(LatticeError::MarginTooSmall {
            xi: best_xi,
            margin: best,
        });
    }
    Ok(best)
}

/// Nearest-neighbour filter: weight 1/(2d) on ±e_i. Periodic.
pub fn standard_filter(dim: usize) -> LatticeFilter {
    assert!(dim >= 1, "dimension must be positive");
    let w = 1.0 / (2 * dim) as f64;
    let entries = (0..dim)
        .flat_map(|i| {
            [1, -1].map(|s| {
                let mut v = vec![0; dim];
                v[i] = s;
                (v, w)
            })
        })
        .collect();
    LatticeFilter::new(dim, entries)
        .expect("standard filter is valid")
        .with_label(format!("standard{dim}"))
}

/// Triangular lattice on ℤ²: weight 1/6 on (±1,0), (0,±1), ±(1,1).
pub fn triangular_filter() -> LatticeFilter {
    let w = 1.0 / 6.0;
    let entries = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]]
        .iter()
        .map(|v| (v.to_vec(), w))
        .collect();
    LatticeFilter::new(2, entries)
        .expect("triangular filter is valid")
        .with_label("triangular")
}

/// Lazy walk on ℤ: {0: 1/2, ±1: 1/4}. Aperiodic.
pub fn lazy_filter() -> LatticeFilter {
    LatticeFilter::new(1, vec![(vec![-1], 0.25), (vec![0], 0.5), (vec![1], 0.25)])
        .expect("lazy filter is valid")
        .with_label("lazy1")
}

/// Looks up a built-in filter by name.
pub fn builtin_filter(name: &str) -> Option<LatticeFilter> {
    match name {
        "triangular" => Some(triangular_filter()),
        "lazy1" | "lazy" => Some(lazy_filter()),
        "standard1" => Some(standard_filter(1)),
        "standard2" => Some(standard_filter(2)),
        "standard3" => Some(standard_filter(3)),
        _ => None,
    }
}

pub const BUILTIN_FILTERS: &[&str] = &["lazy1", "triangular", "standard1", "standard2", "standard3"];

/// A real field on ℤ^d stored densely on the box [−m, m]^d, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    box_radius: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(dim: usize, box_radius: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let side = 2 * box_radius + 1;
        Self {
            dim,
            box_radius,
            values: vec![0.0; side.pow(dim as u32)],
        }
    }

    /// The indicator of the origin.
    pub fn dirac(dim: usize) -> Self {
        let mut field = Self::zeros(dim, 0);
        field.values[0] = 1.0;
        field
    }

    pub fn from_fn(dim: usize, box_radius: usize, mut f: impl FnMut(&[i64]) -> f64) -> Self {
        let mut field = Self::zeros(dim, box_radius);
        let mut v = vec![0i64; dim];
        for i in 0..field.values.len() {
            field.vertex_into(i, &mut v);
            field.values[i] = f(&v);
        }
        field
    }

    pub fn from_values(dim: usize, box_radius: usize, values: Vec<f64>) -> Option<Self> {
        let side = 2 * box_radius + 1;
        (dim >= 1 && values.len() == side.pow(dim as u32)).then_some(Self {
            dim,
            box_radius,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_radius(&self) -> usize {
        self.box_radius
    }

    pub fn side(&self) -> usize {
        2 * self.box_radius + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn vertex_into(&self, mut index: usize, out: &mut [i64]) {
        let side = self.side();
        let m = self.box_radius as i64;
        for axis in (0..self.dim).rev() {
            out[axis] = (index % side) as i64 - m;
            index /= side;
        }
    }

    pub fn vertex_of(&self, index: usize) -> Vertex {
        let mut v = vec![0; self.dim];
        self.vertex_into(index, &mut v);
        v
    }

    pub fn index_of(&self, v: &[i64]) -> Option<usize> {
        if v.len() != self.dim {
            return None;
        }
        let m = self.box_radius as i64;
        let side = self.side();
        let mut index = 0;
        for &c in v {
            if c < -m || c > m {
                return None;
            }
            index = index * side + (c + m) as usize;
        }
        Some(index)
    }

    /// Value at `v`; zero outside the box.
    pub fn get(&self, v: &[i64]) -> f64 {
        self.index_of(v).map_or(0.0, |i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &x)| (self.vertex_of(i), x))
    }

    /// Σ_v x(v).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Σ_v x(v)².
    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    /// Turns self into the zero field on [−r, r]^d, keeping the allocation.
    pub fn reset(&mut self, dim: usize, box_radius: usize) {
        self.dim = dim;
        self.box_radius = box_radius;
        let len = (2 * box_radius + 1).pow(dim as u32);
        self.values.clear();
        self.values.resize(len, 0.0);
    }

    /// (mass, Σ x², max |x|) in one sweep.
    pub fn summary(&self) -> (f64, f64, f64) {
        const LANES: usize = 8;
        let mut mass = [0.0; LANES];
        let mut l2 = [0.0; LANES];
        let mut sup = [0.0f64; LANES];
        let chunks = self.values.chunks_exact(LANES);
        let tail = chunks.remainder();
        for c in chunks {
            for k in 0..LANES {
                mass[k] += c[k];
                l2[k] += c[k] * c[k];
                sup[k] = sup[k].max(c[k].abs());
            }
        }
        for (k, &x) in tail.iter().enumerate() {
            mass[k] += x;
            l2[k] += x * x;
            sup[k] = sup[k].max(x.abs());
        }
        (
            mass.iter().sum(),
            l2.iter().sum(),
            sup.iter().fold(0.0, |a, &b| a.max(b)),
        )
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// The same field on the larger box [−r, r]^d.
    pub fn embedded(&self, box_radius: usize) -> Self {
        assert!(box_radius >= self.box_radius);
        let mut out = Self::zeros(self.dim, box_radius);
        out.add_scaled(1.0, self);
        out
    }

    /// self += scale · other, where other's box fits inside self's.
    pub fn add_scaled(&mut self, scale: f64, other: &ScalarField) {
        assert_eq!(self.dim, other.dim);
        assert!(other.box_radius <= self.box_radius);
        let shift = self.box_radius - other.box_radius;
        let side = self.side();
        let row = other.side();
        let rows = row.pow(self.dim as u32 - 1);
        for r in 0..rows {
            // position of the row start in self
            let mut rem = r;
            let mut start = 0;
            let mut stride = side;
            for _ in 1..self.dim {
                start += (rem % row + shift) * stride;
                rem /= row;
                stride *= side;
            }
            start += shift;
            let dst = &mut self.values[start..start + row];
            let src = &other.values[r * row..(r + 1) * row];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|x| *x *= factor);
    }

    /// Nonzero entries sorted lexicographically by vertex.
    pub fn nonzero_entries(&self) -> Vec<(Vertex, f64)> {
        // row-major order with last axis fastest is lexicographic order
        self.iter().filter(|(_, x)| *x != 0.0).collect()
    }
}

/// (ω * x)(v) = Σ_η ω(η) x(v − η); the output box grows by the filter radius.
pub fn convolve(filter: &LatticeFilter, field: &ScalarField) -> Result<ScalarField, LatticeError> {
    let mut out = ScalarField::zeros(field.dim, 0);
    combine(filter, 1.0, field, 0.0, None, &mut out)?;
    Ok(out)
}

/// a·(ω * x) + b·x − c·prev in one pass, on the box of ω * x.
///
/// `prev` must fit in that box; pass `None` for c = 0. The result is written
/// to `out`, whose allocation is reused.
pub fn second_order_step(
    filter: &LatticeFilter,
    a: f64,
    x: &ScalarField,
    b: f64,
    prev: Option<(f64, &ScalarField)>,
    out: &mut ScalarField,
) -> Result<(), LatticeError> {
    combine(filter, a, x, b, prev, out)
}

fn combine(
    filter: &LatticeFilter,
    a: f64,
    x: &ScalarField,
    b: f64,
    prev: Option<(f64, &ScalarField)>,
    out: &mut ScalarField,
) -> Result<(), LatticeError> {
    for f in std::iter::once(x).chain(prev.map(|p| p.1)) {
        if f.dim != filter.dim {
            return Err(LatticeError::DimensionMismatch {
                expected: filter.dim,
                found: f.dim,
            });
        }
    }
    let r = filter.radius;
    out.reset(x.dim, x.box_radius + r);
    let out_side = out.side();
    let linear = |offset: &[i64], pad: usize| {
        offset
            .iter()
            .fold(0usize, |s, &c| s * out_side + (c + pad as i64) as usize)
    };
    // Linear displacement of each filter offset in the output box, with the
    // input box origin placed at output multi-index (r, …, r).
    let mut shifts: Vec<(usize, f64)> = filter
        .entries
        .iter()
        .map(|(offset, w)| (linear(offset, r), a * w))
        .collect();
    if b != 0.0 {
        let centre = linear(&vec![0; x.dim], r);
        match shifts.iter_mut().find(|(s, _)| *s == centre) {
            Some(entry) => entry.1 += b,
            None => shifts.push((centre, b)),
        }
    }
    scatter_rows(out, x, &shifts);
    if let Some((c, p)) = prev {
        assert!(p.box_radius <= out.box_radius, "previous iterate exceeds output box");
        let pad = out.box_radius - p.box_radius;
        scatter_rows(out, p, &[(linear(&vec![0; x.dim], pad), -c)]);
    }
    Ok(())
}

/// out[base(row) + shift] += w · src[row] for each row of `src`, where
/// base places src's first cell at output multi-index (0, …, 0).
fn scatter_rows(out: &mut ScalarField, src: &ScalarField, shifts: &[(usize, f64)]) {
    let dim = src.dim;
    let out_side = out.side();
    let row = src.side();
    let rows = row.pow(dim as u32 - 1);
    for rr in 0..rows {
        let mut rem = rr;
        let mut base = 0;
        let mut stride = out_side;
        for _ in 1..dim {
            base += (rem % row) * stride;
            rem /= row;
            stride *= out_side;
        }
        let values = &src.values[rr * row..(rr + 1) * row];
        for &(shift, w) in shifts {
            let start = base + shift;
            let dst = &mut out.values[start..start + row];
            for (d, s) in dst.iter_mut().zip(values) {
                *d += w * s;
            }
        }
    }
}
