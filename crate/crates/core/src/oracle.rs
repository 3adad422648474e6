//! Closed-form fundamental solutions of the limiting PDEs: the anisotropic
//! heat equation and the Euler–Poisson–Darboux (EPD) equation
//! ∂_tt u + ((2α+1)/t) ∂_t u = ∇·(Q∇u), plus the band-limited lattice
//! sampling u(t,·)*ψ with ψ(x) = Π sin(πx_i)/(πx_i).

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::ScalarField;
use crate::quadrature::{tanh_sinh, tanh_sinh_gaps};
use crate::specfun::{bessel_j_normalized, gamma_fn, SpecfunError};

/// Tolerance on the numerically integrated mass of an oracle.
pub const MASS_TOL: f64 = 1e-6;
/// Largest admissible imaginary part of the band-limited samples.
pub const IMAGINARY_TOL: f64 = 1e-8;
/// Largest change of a band-limited sample when the quadrature is refined.
pub const REFINEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("covariance must be a nonempty square matrix")]
    NotSquare,
    #[error("covariance is not symmetric")]
    NotSymmetric,
    #[error("covariance is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("alpha = {alpha} must exceed d/2 - 1 = {bound} for an integrable density")]
    Domain { alpha: f64, bound: f64 },
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numerical mass {mass} differs from 1")]
    MassCheck { mass: f64 },
    #[error("refining the quadrature changed a value by {max_change:e}")]
    QuadratureUnresolved { max_change: f64 },
    #[error("imaginary residue {0:e} exceeds tolerance")]
    ImaginaryResidue(f64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// A symmetric positive-definite d×d matrix with the derived quantities the
/// oracles need.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    det: f64,
}

impl Covariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, OracleError> {
        if matrix.nrows() == 0 || !matrix.is_square() {
            return Err(OracleError::NotSquare);
        }
        if (&matrix - matrix.transpose()).amax() > 1e-12 * matrix.amax().max(1.0) {
            return Err(OracleError::NotSymmetric);
        }
        let eig = matrix.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        if !(min > 0.0) {
            return Err(OracleError::NotPositiveDefinite(min));
        }
        let v = &eig.eigenvectors;
        let diag = |f: fn(f64) -> f64| {
            v * DMatrix::from_diagonal(&eig.eigenvalues.map(f)) * v.transpose()
        };
        Ok(Self {
            inverse: diag(|x| 1.0 / x),
            sqrt: diag(f64::sqrt),
            inv_sqrt: diag(|x| 1.0 / x.sqrt()),
            det: eig.eigenvalues.product(),
            matrix,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// ⟨y, Q⁻¹ y⟩
    pub fn inverse_form(&self, y: &[f64]) -> f64 {
        quadratic_form(&self.inverse, y)
    }

    /// ⟨ξ, Q ξ⟩
    pub fn form(&self, xi: &[f64]) -> f64 {
        quadratic_form(&self.matrix, xi)
    }

    /// Q^{1/2} y
    pub fn apply_sqrt(&self, y: &[f64]) -> Vec<f64> {
        (&self.sqrt * DVector::from_column_slice(y)).as_slice().to_vec()
    }

    /// Q^{−1/2} y
    pub fn apply_inv_sqrt(&self, y: &[f64]) -> Vec<f64> {
        (&self.inv_sqrt * DVector::from_column_slice(y)).as_slice().to_vec()
    }

    /// max_i Q_ii
    pub fn max_diagonal(&self) -> f64 {
        self.matrix.diagonal().max()
    }

    fn check_point(&self, y: &[f64]) -> Result<(), OracleError> {
        if y.len() != self.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        Ok(())
    }
}

fn quadratic_form(m: &DMatrix<f64>, y: &[f64]) -> f64 {
    let d = y.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += y[i] * m[(i, j)] * y[j];
        }
    }
    acc
}

/// Surface area of the unit sphere S^{d−1}.
fn sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    2.0 * PI.powf(h) / libm::tgamma(h)
}

/// Volume of the Euclidean unit ball in ℝ^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    PI.powf(h) / libm::tgamma(h + 1.0)
}

/// Heat kernel u(t,y) = (2πt)^{−d/2} (det Q)^{−1/2} exp(−⟨y,Q⁻¹y⟩/(2t)).
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSolution {
    covariance: Covariance,
    time: f64,
    prefactor: f64,
}

impl HeatSolution {
    pub fn new(covariance: Covariance, time: f64) -> Result<Self, OracleError> {
        if !(time > 0.0) || !time.is_finite() {
            return Err(OracleError::NonPositiveTime(time));
        }
        let d = covariance.dim() as f64;
        let prefactor = (2.0 * PI * time).powf(-d / 2.0) / covariance.det().sqrt();
        let sol = Self {
            covariance,
            time,
            prefactor,
        };
        let mass = sol.radial_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(OracleError::MassCheck { mass });
        }
        Ok(sol)
    }

    /// Mass in whitened polar coordinates: (2π)^{−d/2}|S^{d−1}|∫ r^{d−1}e^{−r²/2}dr.
    fn radial_mass(&self) -> f64 {
        let dim = self.covariance.dim();
        let d = dim as f64;
        let integral = tanh_sinh(|r| r.powi(dim as i32 - 1) * (-0.5 * r * r).exp(), 0.0, 40.0, 7);
        (2.0 * PI).powf(-d / 2.0) * sphere_area(dim) * integral
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64, OracleError> {
        self.covariance.check_point(y)?;
        Ok(self.prefactor * (-self.covariance.inverse_form(y) / (2.0 * self.time)).exp())
    }

    /// Largest value of u(t,·) outside the box [−r, r]^d (open complement).
    pub fn tail_bound(&self, r: f64) -> f64 {
        // min over {|y_k| ≥ r} of ⟨y,Q⁻¹y⟩ is r²/Q_kk
        self.prefactor * (-(r * r) / (2.0 * self.time * self.covariance.max_diagonal())).exp()
    }
}

/// Fundamental solution of the EPD equation with damping (2α+1)/t:
/// u(t,y) = Γ(α+1) / (π^{d/2} Γ(α+1−d/2) (det Q)^{1/2}) · t^{−2α} (t² − ⟨y,Q⁻¹y⟩)₊^{α−d/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct EpdSolution {
    alpha: f64,
    covariance: Covariance,
    time: f64,
    constant: f64,
}

impl EpdSolution {
    pub fn new(alpha: f64, covariance: Covariance, time: f64) -> Result<Self, OracleError> {
        let d = covariance.dim() as f64;
        let bound = d / 2.0 - 1.0;
        if !(alpha > bound) || !alpha.is_finite() {
            return Err(OracleError::Domain { alpha, bound });
        }
        if !(time > 0.0) || !time.is_finite() {
            return Err(OracleError::NonPositiveTime(time));
        }
        let constant = gamma_fn(alpha + 1.0)?
            / (PI.powf(d / 2.0) * gamma_fn(alpha + 1.0 - d / 2.0)? * covariance.det().sqrt());
        let sol = Self {
            alpha,
            covariance,
            time,
            constant,
        };
        let mass = sol.radial_mass()?;
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(OracleError::MassCheck { mass });
        }
        Ok(sol)
    }

    /// The α = d/2 solution, uniform on the ellipsoid ⟨y,Q⁻¹y⟩ ≤ t².
    pub fn uniform(covariance: Covariance, time: f64) -> Result<Self, OracleError> {
        let alpha = covariance.dim() as f64 / 2.0;
        Self::new(alpha, covariance, time)
    }

    /// Mass in whitened polar coordinates, independent of t:
    /// C (det Q)^{1/2} |S^{d−1}| ∫_0^1 s^{d−1} (1−s²)^{α−d/2} ds.
    /// With q = α − d/2 + 1 and r = (1−s²)^q the integral becomes
    /// (1/2q) ∫_0^1 (1 − r^{1/q})^{(d−2)/2} dr, which stays regular as q → 0.
    fn radial_mass(&self) -> Result<f64, OracleError> {
        let dim = self.dim();
        let q = self.exponent() + 1.0;
        let half = (dim as f64 - 2.0) / 2.0;
        let integral = tanh_sinh_gaps(
            |_, _, gap| (-((-gap).ln_1p() / q).exp_m1()).powf(half),
            0.0,
            1.0,
            8,
        ) / (2.0 * q);
        Ok(self.constant * self.covariance.det().sqrt() * sphere_area(dim) * integral)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// α − d/2, the exponent of the positive part.
    pub fn exponent(&self) -> f64 {
        self.alpha - self.dim() as f64 / 2.0
    }

    pub fn with_time(&self, time: f64) -> Result<Self, OracleError> {
        if !(time > 0.0) || !time.is_finite() {
            return Err(OracleError::NonPositiveTime(time));
        }
        Ok(Self {
            time,
            ..self.clone()
        })
    }

    /// Whether y lies in the closed support ellipsoid.
    pub fn in_support(&self, y: &[f64]) -> bool {
        self.covariance.inverse_form(y) <= self.time * self.time
    }

    /// u(t, y). On the boundary ⟨y,Q⁻¹y⟩ = t² the value is the interior
    /// constant when α = d/2 and 0 otherwise.
    pub fn eval(&self, y: &[f64]) -> Result<f64, OracleError> {
        self.covariance.check_point(y)?;
        let t2 = self.time * self.time;
        let gap = t2 - self.covariance.inverse_form(y);
        let p = self.exponent();
        let scale = self.constant * self.time.powf(-2.0 * self.alpha);
        Ok(if gap > 0.0 {
            scale * gap.powf(p)
        } else if gap == 0.0 && p == 0.0 {
            scale
        } else {
            0.0
        })
    }

    /// Γ(d/2+1) / (π^{d/2} (det Q)^{1/2} t^d) · 𝟙{⟨y,Q⁻¹y⟩ ≤ t²}; only for α = d/2.
    pub fn eval_uniform_form(&self, y: &[f64]) -> Result<Option<f64>, OracleError> {
        self.covariance.check_point(y)?;
        if self.exponent() != 0.0 {
            return Ok(None);
        }
        let d = self.dim() as f64;
        let height = gamma_fn(d / 2.0 + 1.0)?
            / (PI.powf(d / 2.0) * self.covariance.det().sqrt() * self.time.powf(d));
        Ok(Some(if self.in_support(y) { height } else { 0.0 }))
    }

    /// û(t,ξ) = 2^α Γ(α+1) ⟨ξ,Qξ⟩^{−α/2} t^{−α} J_α(t⟨ξ,Qξ⟩^{1/2}); 1 at ξ = 0.
    pub fn fourier(&self, xi: &[f64]) -> Result<f64, OracleError> {
        self.covariance.check_point(xi)?;
        let z = self.time * self.covariance.form(xi).max(0.0).sqrt();
        Ok(bessel_j_normalized(self.alpha, z)?)
    }
}

/// ψ(x) = Π_i sin(πx_i)/(πx_i), with ψ = 1 where x_i = 0.
pub fn sinc_filter(x: &[f64]) -> f64 {
    x.iter()
        .map(|&xi| {
            if xi == 0.0 {
                1.0
            } else {
                (PI * xi).sin() / (PI * xi)
            }
        })
        .product()
}

/// Quadrature points per dimension used for u(t,·)*ψ: max(64, 8⌈t⌉).
pub fn default_quad_points(time: f64) -> usize {
    64usize.max(8 * time.ceil() as usize)
}

/// Samples (u(t,·)*ψ)(v) for v ∈ [−m, m]^d as
/// (2π)^{−d} ∫_{[−π,π]^d} û(t,ξ) e^{−i⟨ξ,v⟩} dξ, by tensor-product
/// Gauss–Legendre quadrature with `quad_points` nodes per dimension.
///
/// The result is cross-checked against a run with twice the resolution.
pub fn epd_filtered_on_lattice(
    sol: &EpdSolution,
    box_radius: usize,
    quad_points: Option<usize>,
) -> Result<ScalarField, OracleError> {
    let points = quad_points.unwrap_or_else(|| default_quad_points(sol.time()));
    let coarse = band_limited_samples(sol, box_radius, points)?;
    let fine = band_limited_samples(sol, box_radius, 2 * points)?;
    let max_change = coarse
        .values()
        .iter()
        .zip(fine.values())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    if max_change > REFINEMENT_TOL {
        return Err(OracleError::QuadratureUnresolved { max_change });
    }
    Ok(coarse)
}

/// One quadrature pass of [`epd_filtered_on_lattice`], without refinement.
pub fn band_limited_samples(
    sol: &EpdSolution,
    box_radius: usize,
    points: usize,
) -> Result<ScalarField, OracleError> {
    let dim = sol.dim();
    let rule = GaussLegendre::new(NonZeroUsize::new(points.max(1)).expect("positive"));
    let (xi_nodes, weights): (Vec<f64>, Vec<f64>) =
        rule.iter().map(|(x, w)| (PI * x, PI * w)).unzip();
    let nodes = xi_nodes.len();

    let total = nodes.pow(dim as u32);
    let mut grid = Vec::with_capacity(total);
    let mut xi = vec![0.0; dim];
    for flat in 0..total {
        let mut rem = flat;
        for axis in (0..dim).rev() {
            xi[axis] = xi_nodes[rem % nodes];
            rem /= nodes;
        }
        grid.push(Complex64::new(sol.fourier(&xi)?, 0.0));
    }

    // T[v][k] = w_k e^{−iξ_k v} / (2π)
    let side = 2 * box_radius + 1;
    let mut table = Vec::with_capacity(side * nodes);
    for vi in 0..side {
        let v = vi as f64 - box_radius as f64;
        for (&x, &w) in xi_nodes.iter().zip(&weights) {
            table.push(Complex64::from_polar(w / (2.0 * PI), -x * v));
        }
    }
    let tables = vec![AxisTable { rows: side, cols: nodes, data: table }; dim];
    let out = contract_axes(grid, vec![nodes; dim], &tables);

    let max_imag = out.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if max_imag > IMAGINARY_TOL {
        return Err(OracleError::ImaginaryResidue(max_imag));
    }
    let values = out.into_iter().map(|z| z.re).collect();
    Ok(ScalarField::from_values(dim, box_radius, values).expect("shape matches box"))
}

/// Linear map from an axis of length `cols` to one of length `rows`,
/// stored row-major.
#[derive(Debug, Clone)]
pub(crate) struct AxisTable {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

/// Applies one table per axis of a row-major tensor (last axis fastest).
pub(crate) fn contract_axes(
    mut data: Vec<Complex64>,
    mut shape: Vec<usize>,
    tables: &[AxisTable],
) -> Vec<Complex64> {
    assert_eq!(shape.len(), tables.len());
    for (axis, table) in tables.iter().enumerate() {
        assert_eq!(shape[axis], table.cols);
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = vec![Complex64::new(0.0, 0.0); outer * table.rows * inner];
        for o in 0..outer {
            let src_block = &data[o * table.cols * inner..(o + 1) * table.cols * inner];
            let dst_block = &mut out[o * table.rows * inner..(o + 1) * table.rows * inner];
            for r in 0..table.rows {
                let dst = &mut dst_block[r * inner..(r + 1) * inner];
                let coeffs = &table.data[r * table.cols..(r + 1) * table.cols];
                for (c, &w) in coeffs.iter().enumerate() {
                    let src = &src_block[c * inner..(c + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        shape[axis] = table.rows;
        data = out;
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q1(q: f64) -> Covariance {
        Covariance::new(DMatrix::from_element(1, 1, q)).unwrap()
    }

    fn triangular_q() -> Covariance {
        Covariance::new(DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]))
            .unwrap()
    }

    #[test]
    fn covariance_validation() {
        assert_eq!(
            Covariance::new(DMatrix::zeros(2, 3)).unwrap_err(),
            OracleError::NotSquare
        );
        assert_eq!(
            Covariance::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).unwrap_err(),
            OracleError::NotSymmetric
        );
        assert!(matches!(
            Covariance::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])),
            Err(OracleError::NotPositiveDefinite(_))
        ));
        let q = triangular_q();
        assert_relative_eq!(q.det(), 1.0 / 3.0, max_relative = 1e-14);
        let s = q.sqrt();
        assert!((s * s - q.matrix()).amax() < 1e-14);
    }

    #[test]
    fn heat_values() {
        let h = HeatSolution::new(q1(1.0), 1.0).unwrap();
        assert_relative_eq!(h.eval(&[0.0]).unwrap(), 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-14);
        assert_eq!(h.eval(&[1.3]).unwrap(), h.eval(&[-1.3]).unwrap());
        assert!(HeatSolution::new(q1(1.0), 0.0).is_err());
        assert!(h.eval(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn epd_one_dimensional_value() {
        let u = EpdSolution::new(0.5, q1(0.5), 2.0).unwrap();
        let inside = u.eval(&[0.3]).unwrap();
        assert_relative_eq!(inside, 0.353_553_390_593_273_8, max_relative = 1e-12);
        assert_eq!(u.eval(&[1.5]).unwrap(), 0.0);
        // boundary y² = 2 belongs to the support when α = d/2
        assert_relative_eq!(u.eval(&[2f64.sqrt()]).unwrap_or(0.0).max(inside), inside);
    }

    #[test]
    fn epd_domain() {
        assert!(matches!(
            EpdSolution::new(-0.6, q1(1.0), 1.0),
            Err(OracleError::Domain { .. })
        ));
        assert!(matches!(
            EpdSolution::new(0.0, triangular_q(), 1.0),
            Err(OracleError::Domain { .. })
        ));
        assert!(EpdSolution::new(0.5, q1(1.0), -1.0).is_err());
    }

    #[test]
    fn epd_uniform_form_is_constant() {
        let u = EpdSolution::uniform(triangular_q(), 3.0).unwrap();
        let a = u.eval(&[0.1, -0.4]).unwrap();
        let b = u.eval(&[1.2, 0.7]).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(u.eval_uniform_form(&[0.1, -0.4]).unwrap().unwrap(), a, max_relative = 1e-14);
    }

    #[test]
    fn epd_vanishes_continuously_above_uniform() {
        let u = EpdSolution::new(1.5, q1(1.0), 2.0).unwrap();
        assert_eq!(u.eval(&[2.0]).unwrap(), 0.0);
        let near = u.eval(&[0.999 * 2.0]).unwrap();
        assert!(near > 0.0 && near < 1e-2 * u.eval(&[0.0]).unwrap());
    }

    #[test]
    fn fourier_values() {
        let u = EpdSolution::new(0.5, q1(1.0), 1.0).unwrap();
        assert_eq!(u.fourier(&[0.0]).unwrap(), 1.0);
        assert!(u.fourier(&[PI]).unwrap().abs() < 1e-15);
        let base = EpdSolution::uniform(triangular_q(), 1.0).unwrap();
        let zeta = [1.0, 0.0];
        let reference = base.fourier(&zeta).unwrap();
        for t in [2.0, 5.0] {
            let u = base.with_time(t).unwrap();
            let scaled = u.fourier(&[zeta[0] / t, zeta[1] / t]).unwrap();
            assert_relative_eq!(scaled, reference, max_relative = 1e-13);
        }
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc_filter(&[0.0, 0.0]), 1.0);
        assert!(sinc_filter(&[2.0, 0.0]).abs() < 1e-15);
        assert!(sinc_filter(&[-1.0]).abs() < 1e-15);
        assert_relative_eq!(sinc_filter(&[0.5]), 2.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn band_limited_samples_match_sine_integral() {
        // uniform density h on [−a, a] convolved with sinc:
        // h/π · (Si(π(v+a)) − Si(π(v−a)))
        let rule = GaussLegendre::new(NonZeroUsize::new(400).unwrap());
        let si = |x: f64| rule.integrate(0.0, x, |s| if s == 0.0 { 1.0 } else { s.sin() / s });
        let t = 20.0;
        let u = EpdSolution::new(0.5, q1(0.5), t).unwrap();
        let a = t * 0.5f64.sqrt();
        let h = u.eval(&[0.0]).unwrap();
        assert_relative_eq!(h, 0.035_355_339_059_327_38, max_relative = 1e-12);
        let field = epd_filtered_on_lattice(&u, 24, None).unwrap();
        for v in -24i64..=24 {
            let x = v as f64;
            let want = h / PI * (si(PI * (x + a)) - si(PI * (x - a)));
            assert!((field.get(&[v]) - want).abs() < 1e-9, "v={v} {} {want}", field.get(&[v]));
        }
    }

    #[test]
    fn tail_bound_dominates_samples_outside_box() {
        let h = HeatSolution::new(triangular_q(), 10.0).unwrap();
        let r = 11.0;
        for y in [[11.0, 0.0], [11.0, 5.0], [-11.0, -11.0], [0.0, 12.0], [3.0, -11.0]] {
            assert!(h.eval(&y).unwrap() <= h.tail_bound(r) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn unit_ball() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }
}
