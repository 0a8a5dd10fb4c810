//! Poisson extension of sampled weights into the disk, derivative fields,
//! the log-det extension and the Laplacian identity for log det.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::circle::{synthesize, wrap_angle, FourierTable};
use crate::error::{Error, Result};
use crate::linalg::{c, inv_sqrtm, logdet, symmetrize, CMat};
use crate::weight::MatrixWeight;

/// λ = r e^{iθ} in the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskPoint {
    pub r: f64,
    pub theta: f64,
}

impl DiskPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::OutsideDisk(r));
        }
        Ok(Self {
            r,
            theta: wrap_angle(theta),
        })
    }

    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        let r = x.hypot(y);
        Self::new(r, if r == 0.0 { 0.0 } else { y.atan2(x) })
    }

    pub fn x(&self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn y(&self) -> f64 {
        self.r * self.theta.sin()
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }
}

/// Largest radius at which the Poisson kernel is resolved by the grid:
/// 1 − 8/N_max.
pub fn probe_limit(weight: &MatrixWeight) -> f64 {
    1.0 - 8.0 / weight.grid().max_fourier_index() as f64
}

/// Geometric bound sup‖Ŵ‖ · 2r^{N+1}/(1−r) on the neglected series tail.
pub fn tail_bound(table: &FourierTable, r: f64, kept: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    table.sup_norm() * 2.0 * r.powi(kept as i32 + 1) / (1.0 - r)
}

/// A harmonic-extension value with its truncation bound.
#[derive(Debug, Clone)]
pub struct Extension<T> {
    pub value: T,
    pub tail_bound: f64,
}

fn terms_needed(r: f64, max_index: usize) -> usize {
    if r == 0.0 {
        return 0;
    }
    // r^k below 1e-18 contributes nothing at double precision
    let k = (-18.0 * std::f64::consts::LN_10 / r.ln()).ceil();
    if k.is_finite() && k < max_index as f64 {
        k as usize
    } else {
        max_index
    }
}

/// W(λ) = Σ Ŵ(n) r^{|n|} e^{inθ}.
pub fn poisson_extend(weight: &MatrixWeight, point: DiskPoint) -> Extension<CMat> {
    extend_table(weight.fourier(), point)
}

pub fn extend_table(table: &FourierTable, point: DiskPoint) -> Extension<CMat> {
    let kept = terms_needed(point.r, table.max_index());
    let mut acc = table.get(0).clone();
    let mut rk = 1.0;
    for k in 1..=kept as i64 {
        rk *= point.r;
        let e = Complex64::from_polar(rk, k as f64 * point.theta);
        acc += table.get(k) * e + table.get(-k) * e.conj();
    }
    Extension {
        value: symmetrize(&acc),
        tail_bound: if kept == table.max_index() {
            tail_bound(table, point.r, kept)
        } else {
            0.0
        },
    }
}

/// (∂W/∂x, ∂W/∂y) at λ by termwise differentiation.
pub fn derivative_field(weight: &MatrixWeight, point: DiskPoint) -> Extension<(CMat, CMat)> {
    let table = weight.fourier();
    let d = table.dim();
    let kept = terms_needed(point.r, table.max_index()) + 1;
    let kept = kept.min(table.max_index());
    let mut dx = CMat::zeros(d, d);
    let mut dy = CMat::zeros(d, d);
    let mut rk = 1.0; // r^{k−1}
    for k in 1..=kept as i64 {
        let e = Complex64::from_polar(rk * k as f64, (k - 1) as f64 * point.theta);
        let plus = table.get(k) * e;
        let minus = table.get(-k) * e.conj();
        dx += &plus + &minus;
        dy += (plus - minus) * Complex64::i();
        rk *= point.r;
    }
    Extension {
        value: (symmetrize(&dx), symmetrize(&dy)),
        tail_bound: if kept == table.max_index() {
            table.sup_norm() * kept as f64 * 2.0 * point.r.powi(kept as i32) / (1.0 - point.r).powi(2)
        } else {
            0.0
        },
    }
}

/// Scalar Poisson extension of coefficients stored at −m..=m.
pub fn extend_scalar(coeffs: &[Complex64], point: DiskPoint) -> f64 {
    let m = coeffs.len() / 2;
    let kept = terms_needed(point.r, m);
    let mut acc = coeffs[m].re;
    let mut rk = 1.0;
    for k in 1..=kept {
        rk *= point.r;
        let e = Complex64::from_polar(rk, k as f64 * point.theta);
        acc += (coeffs[m + k] * e + coeffs[m - k] * e.conj()).re;
    }
    acc
}

/// [log det W](λ): Poisson extension of the boundary values of log det W.
pub fn logdet_extend(weight: &MatrixWeight, point: DiskPoint) -> f64 {
    extend_scalar(weight.logdet_fourier(), point)
}

/// Σ_j tr((W^{−1/2} ∂_jW W^{−1/2})²) at λ.
pub fn gradient_energy(w: &CMat, dx: &CMat, dy: &CMat) -> f64 {
    let s = inv_sqrtm(w);
    [dx, dy]
        .iter()
        .map(|d| {
            let m = &s * *d * &s;
            (&m * &m).trace().re
        })
        .sum()
}

/// |Δ_h log det W(·) + Σ_j tr((W^{−1/2}∂_jW W^{−1/2})²)| at λ, with Δ_h the
/// five-point Laplacian applied to log det of the extended W.
pub fn laplacian_identity_residual(weight: &MatrixWeight, point: DiskPoint, h: f64) -> Result<f64> {
    if !(h > 0.0) || point.r + 2.0 * h >= 1.0 {
        return Err(Error::StepTooLarge {
            step: h,
            radius: point.r,
        });
    }
    let (x, y) = (point.x(), point.y());
    let u = |px: f64, py: f64| -> Result<f64> {
        let p = DiskPoint::from_cartesian(px, py)?;
        Ok(logdet(&poisson_extend(weight, p).value))
    };
    let lap = (u(x + h, y)? + u(x - h, y)? + u(x, y + h)? + u(x, y - h)? - 4.0 * u(x, y)?) / (h * h);
    let w = poisson_extend(weight, point).value;
    let (dx, dy) = derivative_field(weight, point).value;
    Ok((lap + gradient_energy(&w, &dx, &dy)).abs())
}

/// W, ∂xW and ∂yW on the ring |z| = r at the angles 2πj/n_angles.
#[derive(Debug, Clone)]
pub struct RingField {
    pub r: f64,
    pub values: Vec<CMat>,
    pub dx: Vec<CMat>,
    pub dy: Vec<CMat>,
    pub tail_bound: f64,
}

/// Which fields a ring evaluation should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingParts {
    Values,
    ValuesAndDerivatives,
}

/// Ring evaluation by inverse FFT of Ŵ(k) r^{|k|} (and the derivative
/// series). `n_angles` must be a power of two.
pub fn ring_field(table: &FourierTable, r: f64, n_angles: usize, parts: RingParts) -> Result<RingField> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::OutsideDisk(r));
    }
    if n_angles < 8 || !n_angles.is_power_of_two() {
        return Err(Error::InvalidGrid(n_angles));
    }
    let m = table.max_index().min(n_angles / 2 - 1);
    let d = table.dim();
    let mut planner = FftPlanner::new();
    let empty = || vec![CMat::zeros(d, d); n_angles];
    let mut values = empty();
    let with_derivs = parts == RingParts::ValuesAndDerivatives;
    let (mut dx, mut dy) = if with_derivs {
        (empty(), empty())
    } else {
        (Vec::new(), Vec::new())
    };
    let mut rpow = vec![1.0; m + 2];
    for k in 1..rpow.len() {
        rpow[k] = rpow[k - 1] * r;
    }
    for i in 0..d {
        for j in 0..d {
            let coeffs: Vec<Complex64> = (-(m as i64)..=m as i64)
                .map(|k| table.get(k)[(i, j)] * rpow[k.unsigned_abs() as usize])
                .collect();
            for (slot, v) in values.iter_mut().zip(synthesize(&coeffs, n_angles, &mut planner)) {
                slot[(i, j)] = v;
            }
            if with_derivs {
                let dm = m - 1;
                let mut cx = vec![c(0.0); 2 * dm + 1];
                let mut cy = vec![c(0.0); 2 * dm + 1];
                for q in 0..=dm {
                    let k = q + 1;
                    let s = k as f64 * rpow[q];
                    let plus = table.get(k as i64)[(i, j)] * s;
                    let minus = table.get(-(k as i64))[(i, j)] * s;
                    cx[dm + q] += plus;
                    cx[dm - q] += minus;
                    cy[dm + q] += plus * Complex64::i();
                    cy[dm - q] -= minus * Complex64::i();
                }
                for (slot, v) in dx.iter_mut().zip(synthesize(&cx, n_angles, &mut planner)) {
                    slot[(i, j)] = v;
                }
                for (slot, v) in dy.iter_mut().zip(synthesize(&cy, n_angles, &mut planner)) {
                    slot[(i, j)] = v;
                }
            }
        }
    }
    let sym = |v: &mut Vec<CMat>| v.par_iter_mut().for_each(|x| *x = symmetrize(x));
    sym(&mut values);
    sym(&mut dx);
    sym(&mut dy);
    Ok(RingField {
        r,
        values,
        dx,
        dy,
        tail_bound: tail_bound(table, r, m),
    })
}

/// Ring evaluation of a scalar series stored at −m..=m.
pub fn ring_scalar(coeffs: &[Complex64], r: f64, n_angles: usize) -> Vec<f64> {
    let full = coeffs.len() / 2;
    let m = full.min(n_angles / 2 - 1);
    let trimmed: Vec<Complex64> = (-(m as i64)..=m as i64)
        .map(|k| coeffs[(full as i64 + k) as usize] * r.powi(k.unsigned_abs() as i32))
        .collect();
    synthesize(&trimmed, n_angles, &mut FftPlanner::new())
        .into_iter()
        .map(|z| z.re)
        .collect()
}

/// Polar quadrature grid: dyadic bands [0, 1/2], [1/2, 3/4], …, up to
/// 1 − 2^{−bands}, each split into equal radial cells, times n_angles
/// equal angular cells. Cells are evaluated at their midpoint radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    radii: Vec<f64>,
    widths: Vec<f64>,
    bands: Vec<usize>,
    n_angles: usize,
}

impl PolarGrid {
    pub fn dyadic(bands: usize, cells_per_band: usize, n_angles: usize) -> Result<Self> {
        if bands == 0 || cells_per_band == 0 {
            return Err(Error::GridTooCoarse("polar grid needs at least one cell".into()));
        }
        if n_angles < 8 || !n_angles.is_power_of_two() {
            return Err(Error::InvalidGrid(n_angles));
        }
        let mut radii = Vec::new();
        let mut widths = Vec::new();
        let mut band_of = Vec::new();
        for band in 1..=bands {
            let lo = if band == 1 { 0.0 } else { 1.0 - 0.5f64.powi(band as i32 - 1) };
            let hi = 1.0 - 0.5f64.powi(band as i32);
            let dr = (hi - lo) / cells_per_band as f64;
            for k in 0..cells_per_band {
                radii.push(lo + (k as f64 + 0.5) * dr);
                widths.push(dr);
                band_of.push(band);
            }
        }
        Ok(Self {
            radii,
            widths,
            bands: band_of,
            n_angles,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn band(&self, i: usize) -> usize {
        self.bands[i]
    }

    pub fn band_count(&self) -> usize {
        *self.bands.last().unwrap_or(&0)
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn outer_radius(&self) -> f64 {
        self.radii.last().zip(self.widths.last()).map(|(r, w)| r + w / 2.0).unwrap_or(0.0)
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_angles as f64
    }

    /// Area element r·dr·dθ of a cell on radius index i.
    pub fn cell_weight(&self, i: usize) -> f64 {
        self.radii[i] * self.widths[i] * 2.0 * PI / self.n_angles as f64
    }

    pub fn total_area(&self) -> f64 {
        (0..self.radii.len()).map(|i| self.cell_weight(i)).sum::<f64>() * self.n_angles as f64
    }

    pub fn point(&self, i: usize, j: usize) -> DiskPoint {
        DiskPoint {
            r: self.radii[i],
            theta: wrap_angle(self.angle(j)),
        }
    }

    /// Fail when the grid reaches past the resolvable radius of `weight`.
    pub fn check_resolvable(&self, weight: &MatrixWeight) -> Result<()> {
        let limit = probe_limit(weight);
        let r = self.radii.last().copied().unwrap_or(0.0);
        if r > limit {
            return Err(Error::RadiusBeyondProbeLimit { radius: r, limit });
        }
        if self.n_angles > weight.n_points() {
            return Err(Error::GridTooCoarse(format!(
                "{} polar angles exceed the {} circle samples",
                self.n_angles,
                weight.n_points()
            )));
        }
        Ok(())
    }
}

/// W, ∂xW, ∂yW and [log det W] on every node of a polar grid.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    pub rings: Vec<RingField>,
    pub logdet: Vec<Vec<f64>>,
}

impl HarmonicField {
    pub fn on(weight: &MatrixWeight, polar: &PolarGrid) -> Result<Self> {
        let table = weight.fourier();
        let coeffs = weight.logdet_fourier();
        let rings = polar
            .radii()
            .par_iter()
            .map(|&r| ring_field(table, r, polar.n_angles(), RingParts::ValuesAndDerivatives))
            .collect::<Result<Vec<_>>>()?;
        let logdet = polar
            .radii()
            .par_iter()
            .map(|&r| ring_scalar(coeffs, r, polar.n_angles()))
            .collect();
        Ok(Self { rings, logdet })
    }
}
