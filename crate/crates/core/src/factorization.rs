//! Outer spectral factorization W = F*F by block-Toeplitz Cholesky, and
//! the checks built on the factor inside the disk.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::circle::synthesize;
use crate::error::{Error, Result};
use crate::harmonic::{extend_scalar, poisson_extend, DiskPoint, PolarGrid};
use crate::linalg::{c, cholesky_lower, eigenvalues, max_eigenvalue, spectral_norm, sqrtm, symmetrize, CMat};
use crate::prediction::gram_block;
use crate::weight::MatrixWeight;

/// Analytic matrix polynomial F(z) = Σ_{k=0}^{M} F̂(k) z^k.
#[derive(Debug, Clone)]
pub struct SpectralFactor {
    order: usize,
    dim: usize,
    coefficients: Vec<CMat>,
    /// max_j ‖F*F − W‖ over the circle samples.
    pub circle_residual: f64,
}

impl SpectralFactor {
    pub fn from_coefficients(coefficients: Vec<CMat>) -> Result<Self> {
        let dim = coefficients.first().map(|m| m.nrows()).unwrap_or(0);
        if dim == 0 || coefficients.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch("factor coefficients must be square and equal".into()));
        }
        Ok(Self {
            order: coefficients.len() - 1,
            dim,
            coefficients,
            circle_residual: f64::NAN,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficient(&self, k: usize) -> &CMat {
        &self.coefficients[k]
    }

    pub fn coefficients(&self) -> &[CMat] {
        &self.coefficients
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        let mut acc = CMat::zeros(self.dim, self.dim);
        for f in self.coefficients.iter().rev() {
            acc = acc * z + f;
        }
        acc
    }

    /// Left-multiply every coefficient by a constant matrix.
    pub fn with_gauge(&self, u: &CMat) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|f| u * f).collect(),
            ..self.clone()
        }
    }

    /// F(r e^{i(2πj/n + offset)}) for j = 0..n.
    pub fn ring_values(&self, r: f64, n: usize, offset: f64) -> Vec<CMat> {
        let m = self.order;
        let mut size = n;
        while size < 2 * (m + 1) {
            size *= 2;
        }
        let stride = size / n;
        let d = self.dim;
        let mut out = vec![CMat::zeros(d, d); n];
        let mut planner = FftPlanner::new();
        for i in 0..d {
            for j in 0..d {
                let mut coeffs = vec![c(0.0); 2 * m + 1];
                let mut rk = 1.0;
                for k in 0..=m {
                    coeffs[m + k] = self.coefficients[k][(i, j)] * Complex64::from_polar(rk, k as f64 * offset);
                    rk *= r;
                }
                let vals = synthesize(&coeffs, size, &mut planner);
                for (q, slot) in out.iter_mut().enumerate() {
                    slot[(i, j)] = vals[q * stride];
                }
            }
        }
        out
    }

    /// Smallest |det F| over the nodes of a polar grid.
    pub fn min_abs_det(&self, polar: &PolarGrid) -> f64 {
        polar
            .radii()
            .par_iter()
            .map(|&r| {
                self.ring_values(r, polar.n_angles(), 0.0)
                    .iter()
                    .map(|f| f.determinant().norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Rows `k,row,col,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,row,col,re,im\n");
        for (k, f) in self.coefficients.iter().enumerate() {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let z = f[(i, j)];
                    let _ = writeln!(s, "{k},{i},{j},{:e},{:e}", z.re, z.im);
                }
            }
        }
        s
    }
}

/// Reverse row and column order.
fn flip(a: &CMat) -> CMat {
    let d = a.nrows();
    CMat::from_fn(d, d, |i, j| a[(d - 1 - i, d - 1 - j)])
}

/// Constant unitary V with V F̂(0) lower-triangular with positive diagonal.
fn gauge_unitary(f0: &CMat) -> Result<CMat> {
    let p = symmetrize(&(f0.adjoint() * f0));
    let chol = cholesky_lower(&flip(&p)).ok_or_else(|| Error::SingularFactor("F(0)".into()))?;
    let lower = flip(&chol).adjoint();
    let inv = f0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularFactor("F(0)".into()))?;
    Ok(lower * inv)
}

/// Factor of order M from the Cholesky factor of the Gram matrix over the
/// exponents M, M−1, …, 0: the block row of exponent 0 holds F̂(k)* in the
/// column of exponent k.
pub fn spectral_factor(weight: &MatrixWeight, order: usize) -> Result<SpectralFactor> {
    let exps: Vec<i64> = (0..=order as i64).rev().collect();
    let g = gram_block(weight, &exps)?;
    let l = cholesky_lower(&g.matrix).ok_or_else(|| Error::GramNotPositiveDefinite {
        min_eigenvalue: eigenvalues(&g.matrix)[0],
    })?;
    let d = weight.dim();
    let row = order * d;
    let raw: Vec<CMat> = (0..=order)
        .map(|k| l.view((row, (order - k) * d), (d, d)).adjoint())
        .collect();
    let v = gauge_unitary(&raw[0])?;
    let mut factor = SpectralFactor::from_coefficients(raw.iter().map(|f| &v * f).collect())?;
    // F̂(0) is exactly lower triangular with real diagonal
    for i in 0..d {
        for j in i + 1..d {
            factor.coefficients[0][(i, j)] = c(0.0);
        }
        let diag = factor.coefficients[0][(i, i)];
        factor.coefficients[0][(i, i)] = c(diag.re);
    }
    factor.circle_residual = circle_residual(&factor, weight);
    Ok(factor)
}

/// max_j ‖F*F − W‖ at the weight's sample angles.
pub fn circle_residual(factor: &SpectralFactor, weight: &MatrixWeight) -> f64 {
    let vals = factor.ring_values(1.0, weight.n_points(), weight.offset_angle());
    vals.par_iter()
        .zip(weight.samples().par_iter())
        .map(|(f, w)| spectral_norm(&(f.adjoint() * f - w)))
        .reduce(|| 0.0, f64::max)
}

/// Circle residual for each order, and whether it decreases.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceProfile {
    pub orders: Vec<usize>,
    pub residuals: Vec<f64>,
    pub decreasing: bool,
}

pub fn convergence_profile(weight: &MatrixWeight, orders: &[usize]) -> Result<ConvergenceProfile> {
    let residuals = orders
        .iter()
        .map(|&m| spectral_factor(weight, m).map(|f| f.circle_residual))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceProfile {
        decreasing: residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)),
        orders: orders.to_vec(),
        residuals,
    })
}

/// | log|det F(λ)| − ½[log det W](λ) | per probe; infinite where det F(λ)
/// vanishes.
pub fn outer_determinant_check(factor: &SpectralFactor, weight: &MatrixWeight, points: &[DiskPoint]) -> Vec<f64> {
    let coeffs = weight.logdet_fourier();
    points
        .par_iter()
        .map(|p| {
            let det = factor.eval(p.z()).determinant().norm();
            if det == 0.0 || !det.is_finite() {
                return f64::INFINITY;
            }
            (det.ln() - 0.5 * extend_scalar(coeffs, *p)).abs()
        })
        .collect()
}

/// Worst ‖F(λ)e‖² − (W(λ)e, e) over probes and unit vectors, taken
/// exactly as the top eigenvalue of F(λ)*F(λ) − W(λ).
pub fn subordination_check(factor: &SpectralFactor, weight: &MatrixWeight, points: &[DiskPoint]) -> f64 {
    points
        .par_iter()
        .map(|p| {
            let f = factor.eval(p.z());
            let w = poisson_extend(weight, *p).value;
            max_eigenvalue(&symmetrize(&(f.adjoint() * f - w)))
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Subordination over every node of a polar grid.
pub fn subordination_on_grid(factor: &SpectralFactor, weight: &MatrixWeight, polar: &PolarGrid) -> Result<f64> {
    polar.check_resolvable(weight)?;
    let na = polar.n_angles();
    let worst = polar
        .radii()
        .par_iter()
        .map(|&r| {
            let ring = crate::harmonic::ring_field(weight.fourier(), r, na, crate::harmonic::RingParts::Values)?;
            let fs = factor.ring_values(r, na, 0.0);
            Ok(fs
                .iter()
                .zip(&ring.values)
                .map(|(f, w)| max_eigenvalue(&symmetrize(&(f.adjoint() * f - w))))
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// ‖W(λ)^{1/2} F(λ)^{−1}‖ per probe.
pub fn wf_bound(factor: &SpectralFactor, weight: &MatrixWeight, points: &[DiskPoint]) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|p| {
            let f = factor.eval(p.z());
            let inv = f
                .try_inverse()
                .ok_or_else(|| Error::SingularFactor(format!("r={}, theta={}", p.r, p.theta)))?;
            let w = poisson_extend(weight, *p).value;
            Ok(spectral_norm(&(sqrtm(&w) * inv)))
        })
        .collect()
}
