//! Finite-section prediction quantities in L²(W): Gram matrices of
//! exponential blocks, canonical correlations ρ_N, Szegő distances and
//! projection norms, plus the two area-integral identities.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::CarlesonMeasure;
use crate::error::{Error, Result};
use crate::factorization::SpectralFactor;
use crate::harmonic::{extend_table, ring_field, DiskPoint, PolarGrid, RingParts};
use crate::linalg::{c, eigenvalues, hermitian_map, max_eigenvalue, quad_form, symmetrize, CMat, CVec};
use crate::weight::MatrixWeight;

/// Relative eigenvalue floor below which Gram matrices are regularized.
pub const REGULARIZATION: f64 = 1e-12;

/// Gram matrix of {z^n e_j} over a list of exponents: block (a, b) is
/// Ŵ(n_a − n_b), so that ‖Σ_a z^{n_a} c_a‖² = c* G c.
#[derive(Debug, Clone)]
pub struct GramBlock {
    pub exponents: Vec<i64>,
    pub dim: usize,
    pub matrix: CMat,
}

impl GramBlock {
    /// Principal sub-block on a range of exponent positions.
    pub fn sub(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CMat {
        let d = self.dim;
        self.matrix
            .view((rows.start * d, cols.start * d), (rows.len() * d, cols.len() * d))
            .into_owned()
    }
}

pub fn gram_block(weight: &MatrixWeight, exponents: &[i64]) -> Result<GramBlock> {
    let table = weight.fourier();
    let lo = exponents.iter().copied().min().unwrap_or(0);
    let hi = exponents.iter().copied().max().unwrap_or(0);
    let span = (hi - lo) as usize;
    if span > table.max_index() {
        return Err(Error::InsufficientCoverage {
            required: span,
            available: table.max_index(),
        });
    }
    let d = weight.dim();
    let m = exponents.len();
    let mut g = CMat::zeros(m * d, m * d);
    for (a, &na) in exponents.iter().enumerate() {
        for (b, &nb) in exponents.iter().enumerate() {
            g.view_mut((a * d, b * d), (d, d)).copy_from(table.get(na - nb));
        }
    }
    Ok(GramBlock {
        exponents: exponents.to_vec(),
        dim: d,
        matrix: g,
    })
}

/// G^{−1/2} with the floor 1e−12·trace added when the smallest eigenvalue
/// falls below it; returns the floor used.
pub fn regularized_inv_sqrt(g: &CMat) -> Result<(CMat, Option<f64>)> {
    let trace = g.trace().re;
    let floor = REGULARIZATION * trace;
    let min = eigenvalues(g)[0];
    if min < -1e-8 * trace || !min.is_finite() {
        return Err(Error::GramNotPositiveDefinite { min_eigenvalue: min });
    }
    if min < floor {
        Ok((hermitian_map(g, |x| 1.0 / (x + floor).sqrt()), Some(floor)))
    } else {
        Ok((hermitian_map(g, |x| 1.0 / x.sqrt()), None))
    }
}

/// ρ_N^{(K)}: largest canonical correlation between the past exponents
/// −K..−1 and the future exponents N..N+K−1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub n: usize,
    pub k: usize,
    pub value: f64,
    /// Regularization floors applied to the past and future Grams.
    pub floors: Vec<f64>,
}

pub fn section_exponents(n: usize, k: usize) -> Vec<i64> {
    (-(k as i64)..0).chain(n as i64..(n + k) as i64).collect()
}

pub fn rho(weight: &MatrixWeight, n: usize, k: usize) -> Result<RhoEstimate> {
    if k == 0 {
        return Err(Error::InvalidParams("section size K must be positive".into()));
    }
    let g = gram_block(weight, &section_exponents(n, k))?;
    let gp = g.sub(0..k, 0..k);
    let gf = g.sub(k..2 * k, k..2 * k);
    let cross = g.sub(0..k, k..2 * k);
    let (sp, fp) = regularized_inv_sqrt(&gp)?;
    let (sf, ff) = regularized_inv_sqrt(&gf)?;
    let m = &sp * cross * &sf;
    let top = max_eigenvalue(&symmetrize(&(&m * m.adjoint()))).max(0.0).sqrt();
    Ok(RhoEstimate {
        n,
        k,
        value: top.clamp(0.0, 1.0),
        floors: fp.into_iter().chain(ff).collect(),
    })
}

pub fn rho_table(weight: &MatrixWeight, n_list: &[usize], k: usize) -> Result<Vec<RhoEstimate>> {
    weight.fourier();
    n_list.par_iter().map(|&n| rho(weight, n, k)).collect()
}

/// dist(e·1, span{z^n C^d : 1 ≤ n ≤ K}) in L²(W) next to ‖F(0)e‖.
#[derive(Debug, Clone, Serialize)]
pub struct SzegoDistance {
    pub k: usize,
    pub distance: f64,
    pub factor_prediction: Option<f64>,
    pub relative_gap: Option<f64>,
}

pub fn szego_distance(weight: &MatrixWeight, e: &CVec, k: usize, factor: Option<&SpectralFactor>) -> Result<SzegoDistance> {
    let d = weight.dim();
    if e.len() != d {
        return Err(Error::DimensionMismatch(format!("vector of length {} for d = {d}", e.len())));
    }
    let norm = e.norm();
    if norm == 0.0 {
        return Err(Error::ZeroFunction("zero direction".into()));
    }
    let e = e / c(norm);
    let exps: Vec<i64> = (0..=k as i64).collect();
    let g = gram_block(weight, &exps)?;
    let g00 = g.sub(0..1, 0..1);
    let schur = if k == 0 {
        g00
    } else {
        let grr = g.sub(1..k + 1, 1..k + 1);
        let gr0 = g.sub(1..k + 1, 0..1);
        let chol = nalgebra::linalg::Cholesky::new(symmetrize(&grr)).ok_or_else(|| {
            Error::GramNotPositiveDefinite {
                min_eigenvalue: eigenvalues(&grr)[0],
            }
        })?;
        let x = chol.solve(&gr0);
        symmetrize(&(g00 - gr0.adjoint() * x))
    };
    let distance = quad_form(&schur, &e).max(0.0).sqrt();
    let factor_prediction = factor.map(|f| (f.coefficient(0) * &e).norm());
    Ok(SzegoDistance {
        k,
        distance,
        relative_gap: factor_prediction.map(|p| (distance - p).abs() / p),
        factor_prediction,
    })
}

/// Norm of the analytic projection on the section with exponents
/// −K..−1 and N..N+K−1: sqrt of λ_max(G^{−1/2} B G^{−1/2}) with B the
/// Gram of the projected (future) part.
pub fn riesz_projection_norm(weight: &MatrixWeight, n: usize, k: usize) -> Result<f64> {
    let g = gram_block(weight, &section_exponents(n, k))?;
    let d = weight.dim();
    let mut b = CMat::zeros(2 * k * d, 2 * k * d);
    b.view_mut((k * d, k * d), (k * d, k * d)).copy_from(&g.sub(k..2 * k, k..2 * k));
    let (s, _) = regularized_inv_sqrt(&g.matrix)?;
    let m = symmetrize(&(&s * b * &s));
    Ok(max_eigenvalue(&m).max(0.0).sqrt())
}

/// f(z) = Σ_k c_k z^k with vector coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPolynomial {
    pub coeffs: Vec<CVec>,
}

impl VectorPolynomial {
    pub fn new(coeffs: Vec<CVec>) -> Result<Self> {
        let d = coeffs.first().map(|v| v.len()).unwrap_or(0);
        if d == 0 || coeffs.iter().any(|v| v.len() != d) {
            return Err(Error::DimensionMismatch("polynomial coefficients differ in length".into()));
        }
        Ok(Self { coeffs })
    }

    /// z^n e.
    pub fn monomial(n: usize, e: CVec) -> Self {
        let d = e.len();
        let mut coeffs = vec![CVec::zeros(d); n + 1];
        coeffs[n] = e;
        Self { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| v.iter().all(|z| z.norm() == 0.0))
    }

    pub fn eval(&self, z: Complex64) -> CVec {
        let mut acc = CVec::zeros(self.dim());
        for cf in self.coeffs.iter().rev() {
            acc = acc * z + cf;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self {
                coeffs: vec![CVec::zeros(self.dim())],
            };
        }
        Self {
            coeffs: self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, v)| v * c((k + 1) as f64))
                .collect(),
        }
    }
}

/// ∫_T (Wf, f) dm by quadrature at the weight's sample angles.
pub fn boundary_energy(weight: &MatrixWeight, f: &VectorPolynomial) -> f64 {
    let n = weight.n_points();
    (0..n)
        .into_par_iter()
        .map(|j| {
            let z = Complex64::from_polar(1.0, weight.sample_angle(j));
            quad_form(&weight.samples()[j], &f.eval(z))
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        / n as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaRatio {
    pub ratio: f64,
    /// Bound on the neglected contribution beyond the grid's outer radius,
    /// relative to the denominator.
    pub tail_bound: f64,
}

/// [(2/π)∬_D (W(z)f′(z), f′(z)) log(1/|z|) dxdy] / ∫_T (Wf, f) dm.
pub fn littlewood_paley_ratio(weight: &MatrixWeight, f: &VectorPolynomial, polar: &PolarGrid) -> Result<AreaRatio> {
    if f.dim() != weight.dim() {
        return Err(Error::DimensionMismatch("polynomial and weight dimensions differ".into()));
    }
    if f.coeffs[0].norm() != 0.0 {
        return Err(Error::InvalidParams("f(0) must vanish".into()));
    }
    if f.is_zero() {
        return Err(Error::ZeroFunction("f is identically zero".into()));
    }
    polar.check_resolvable(weight)?;
    let fp = f.derivative();
    let table = weight.fourier();
    let na = polar.n_angles();
    let rows = polar
        .radii()
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let ring = ring_field(table, r, na, RingParts::Values)?;
            let s: f64 = (0..na)
                .map(|j| {
                    let v = fp.eval(Complex64::from_polar(r, polar.angle(j)));
                    quad_form(&ring.values[j], &v)
                })
                .sum();
            Ok(s * polar.cell_weight(i) * (1.0 / r).ln())
        })
        .collect::<Result<Vec<f64>>>()?;
    let numerator = 2.0 / PI * rows.iter().sum::<f64>();
    let denominator = boundary_energy(weight, f);
    let big_r = polar.outer_radius();
    let sup_w = weight.samples().iter().map(max_eigenvalue).fold(0.0, f64::max);
    let sup_fp: f64 = fp.coeffs.iter().map(|v| v.norm()).sum();
    let tail = 4.0 * sup_w * sup_fp * sup_fp * (1.0 - big_r).powi(2) / 2.0;
    Ok(AreaRatio {
        ratio: numerator / denominator,
        tail_bound: tail / denominator,
    })
}

/// ∬_D (W(z)f(z), f(z)) dμ(z) / (‖μ‖_C ∫_T (Wf, f) dm), with ‖μ‖_C the
/// largest Carleson ratio over levels 0..=levels.
pub fn embedding_ratio(weight: &MatrixWeight, f: &VectorPolynomial, measure: &CarlesonMeasure, levels: usize) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::ZeroFunction("f is identically zero".into()));
    }
    if f.dim() != weight.dim() {
        return Err(Error::DimensionMismatch("polynomial and weight dimensions differ".into()));
    }
    let norm = measure.carleson_norm(levels)?.sup();
    let na = measure.n_angles;
    let mut by_radius: BTreeMap<u64, Vec<(usize, f64)>> = BTreeMap::new();
    for a in &measure.atoms {
        by_radius.entry(a.r.to_bits()).or_default().push((a.angle_index, a.mass));
    }
    let table = weight.fourier();
    let parts = by_radius
        .par_iter()
        .map(|(bits, atoms)| {
            let r = f64::from_bits(*bits);
            let ring = if na <= weight.n_points() {
                Some(ring_field(table, r, na, RingParts::Values)?)
            } else {
                None
            };
            Ok(atoms
                .iter()
                .map(|&(j, mass)| {
                    let theta = 2.0 * PI * j as f64 / na as f64;
                    let w = match &ring {
                        Some(ring) => ring.values[j].clone(),
                        None => extend_table(table, DiskPoint { r, theta }).value,
                    };
                    mass * quad_form(&w, &f.eval(Complex64::from_polar(r, theta)))
                })
                .sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let numerator: f64 = parts.iter().sum();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / (norm * boundary_energy(weight, f)))
}
