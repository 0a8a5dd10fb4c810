//! Muckenhoupt-type characteristics over arcs and disk points, the entropy
//! (invariant A∞) characteristic, Carleson measures built from the
//! derivative densities, and the doubling and arc-vs-Poisson comparisons.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{dyadic_arcs, Arc, CircleGrid};
use crate::error::{Error, Result};
use crate::harmonic::{
    extend_scalar, poisson_extend, probe_limit, ring_field, ring_scalar, DiskPoint, PolarGrid, RingParts,
};
use crate::linalg::{
    c, hermitian_eigen, hermitian_norm, inv_sqrtm, logdet, min_eigenvalue, quad_form, sqrt_product_norm, CMat,
    CVec,
};
use crate::weight::MatrixWeight;

/// Largest log value exponentiated by the entropy characteristic.
const LOG_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleKind {
    /// Normalized arc measure 2^{−level}.
    ArcMeasure,
    /// Gap 1 − r to the boundary.
    RadiusGap,
}

/// Monotone-fit summary of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    /// Least-squares slope of value against level over the tail half.
    pub slope: f64,
    pub limit_estimate: f64,
    pub method: String,
    /// Tail half nonincreasing within 1e−9.
    pub nonincreasing_tail: bool,
}

impl Trend {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                slope: 0.0,
                limit_estimate: f64::NAN,
                method: "empty".into(),
                nonincreasing_tail: true,
            };
        }
        let tail_len = (n / 2).max(3).min(n);
        let tail = &values[n - tail_len..];
        let slope = least_squares_slope(tail);
        let nonincreasing_tail = tail.windows(2).all(|w| w[1] <= w[0] + 1e-9);
        let last = values[n - 1];
        let (limit_estimate, method) = match values {
            [.., a, b, c3] => {
                let d1 = b - a;
                let d2 = c3 - b;
                let q = if d1 != 0.0 { d2 / d1 } else { 0.0 };
                if d1 * d2 > 0.0 && q > 0.0 && q < 0.95 {
                    (c3 + d2 * q / (1.0 - q), "aitken".to_string())
                } else {
                    (last, "last-value".to_string())
                }
            }
            _ => (last, "last-value".to_string()),
        };
        Self {
            slope,
            limit_estimate,
            method,
            nonincreasing_tail,
        }
    }
}

/// Slope of the least-squares line through (k, values[k]).
pub fn least_squares_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = values.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (k, v) in values.iter().enumerate() {
        let dx = k as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Per-scale suprema with their locations, coarse to fine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleProfile {
    pub name: String,
    pub scale_kind: ScaleKind,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax: Vec<String>,
    pub trend: Trend,
}

impl ScaleProfile {
    pub fn new(name: &str, scale_kind: ScaleKind, scales: Vec<f64>, values: Vec<f64>, argmax: Vec<String>) -> Self {
        let trend = Trend::fit(&values);
        Self {
            name: name.to_string(),
            scale_kind,
            scales,
            values,
            argmax,
            trend,
        }
    }

    pub fn first(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Default tolerance on |limit − 1| for A₂-type and entropy trends.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

/// Limit estimate within `tolerance` of 1.
pub fn trends_to_one(profile: &ScaleProfile, tolerance: f64) -> bool {
    (profile.trend.limit_estimate - 1.0).abs() <= tolerance
}

/// Identically negligible, or final value at most a quarter of the first
/// with a nonincreasing tail.
pub fn trends_to_zero(profile: &ScaleProfile) -> bool {
    if profile.values.iter().all(|v| v.abs() <= 1e-12) {
        return true;
    }
    profile.last() <= profile.first() / 4.0 && profile.trend.nonincreasing_tail
}

/// Largest k with 1 − 2^{−k} inside the probe limit of `weight`.
pub fn max_ladder_level(weight: &MatrixWeight) -> usize {
    let limit = probe_limit(weight);
    let mut k = 0;
    while ladder_radius(k + 1) <= limit {
        k += 1;
    }
    k
}

/// Index of the maximum, first on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

fn check_pd(avg: &CMat, arc: &Arc) -> Result<()> {
    if !(min_eigenvalue(avg) > 0.0) {
        return Err(Error::DegenerateAverage { arc: arc.to_string() });
    }
    Ok(())
}

/// ‖(W_I)^{1/2}((W⁻¹)_I)^{1/2}‖ given W and its samplewise inverse.
pub fn a2_interval_characteristic(weight: &MatrixWeight, inverse: &MatrixWeight, arc: &Arc) -> Result<f64> {
    let a = weight.matrix_average(arc);
    let b = inverse.matrix_average(arc);
    check_pd(&a, arc)?;
    check_pd(&b, arc)?;
    Ok(sqrt_product_norm(&a, &b))
}

/// ‖W(λ)^{1/2}(W⁻¹)(λ)^{1/2}‖ with both factors extended separately.
pub fn a2_poisson_characteristic(weight: &MatrixWeight, inverse: &MatrixWeight, point: DiskPoint) -> f64 {
    let a = poisson_extend(weight, point).value;
    let b = poisson_extend(inverse, point).value;
    sqrt_product_norm(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum A2Mode {
    Interval,
    Poisson,
}

/// Radius 1 − 2^{−k} of the dyadic ladder.
pub fn ladder_radius(k: usize) -> f64 {
    1.0 - 0.5f64.powi(k as i32)
}

fn check_ladder(weight: &MatrixWeight, levels: usize) -> Result<()> {
    let r = ladder_radius(levels);
    let limit = probe_limit(weight);
    if r > limit {
        return Err(Error::RadiusBeyondProbeLimit { radius: r, limit });
    }
    Ok(())
}

/// Sup over every arc of a level of a per-arc quantity.
fn arc_level_sup(
    grid: &CircleGrid,
    level: usize,
    f: &(dyn Fn(&Arc) -> Result<f64> + Sync),
) -> Result<(f64, String)> {
    let arcs = dyadic_arcs(grid, level)?;
    let values = arcs.par_iter().map(f).collect::<Result<Vec<f64>>>()?;
    let k = argmax(&values);
    Ok((values[k], arcs[k].to_string()))
}

fn arc_profile(
    name: &str,
    grid: &CircleGrid,
    levels: usize,
    f: &(dyn Fn(&Arc) -> Result<f64> + Sync),
) -> Result<ScaleProfile> {
    let mut scales = Vec::new();
    let mut values = Vec::new();
    let mut where_ = Vec::new();
    for level in 0..=levels {
        let (v, at) = arc_level_sup(grid, level, f)?;
        scales.push(0.5f64.powi(level as i32));
        values.push(v);
        where_.push(at);
    }
    Ok(ScaleProfile::new(name, ScaleKind::ArcMeasure, scales, values, where_))
}

/// Per-ring sup of a quantity evaluated on the ladder radii 1 − 2^{−k},
/// k = 1..=levels, at all grid angles.
fn ring_profile(
    name: &str,
    levels: usize,
    n_angles: usize,
    f: &(dyn Fn(f64) -> Result<Vec<f64>> + Sync),
) -> Result<ScaleProfile> {
    let rows = (1..=levels)
        .into_par_iter()
        .map(|k| f(ladder_radius(k)))
        .collect::<Result<Vec<_>>>()?;
    let mut scales = Vec::new();
    let mut values = Vec::new();
    let mut where_ = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        let j = argmax(row);
        let r = ladder_radius(k + 1);
        scales.push(1.0 - r);
        values.push(row[j]);
        where_.push(format!("r={r},theta={:.6}", 2.0 * PI * j as f64 / n_angles as f64));
    }
    Ok(ScaleProfile::new(name, ScaleKind::RadiusGap, scales, values, where_))
}

/// Characteristic values on the ring |z| = r at n_angles angles.
pub fn a2_poisson_ring(weight: &MatrixWeight, inverse: &MatrixWeight, r: f64, n_angles: usize) -> Result<Vec<f64>> {
    let a = ring_field(weight.fourier(), r, n_angles, RingParts::Values)?;
    let b = ring_field(inverse.fourier(), r, n_angles, RingParts::Values)?;
    Ok(a.values
        .par_iter()
        .zip(b.values.par_iter())
        .map(|(x, y)| sqrt_product_norm(x, y))
        .collect())
}

/// A₂ profile over shifted dyadic arcs (levels 0..=levels) or over the
/// radius ladder (k = 1..=levels).
pub fn a2_profile(weight: &MatrixWeight, inverse: &MatrixWeight, mode: A2Mode, levels: usize) -> Result<ScaleProfile> {
    match mode {
        A2Mode::Interval => {
            let f = |arc: &Arc| a2_interval_characteristic(weight, inverse, arc);
            arc_profile("a2-interval", &weight.grid(), levels, &f)
        }
        A2Mode::Poisson => {
            check_ladder(weight, levels)?;
            let n = weight.n_points();
            let f = |r: f64| a2_poisson_ring(weight, inverse, r, n);
            ring_profile("a2-poisson", levels, n, &f)
        }
    }
}

/// Characteristic on symmetric arcs [−ε, ε] with ε = half_points · step.
pub fn a2_symmetric_arcs(weight: &MatrixWeight, inverse: &MatrixWeight, half_points: &[usize]) -> Result<Vec<f64>> {
    half_points
        .par_iter()
        .map(|&h| a2_interval_characteristic(weight, inverse, &Arc::symmetric(h, weight.n_points())?))
        .collect()
}

fn entropy_from_logs(logdet_w: f64, harmonic_logdet: f64) -> f64 {
    (logdet_w - harmonic_logdet).min(LOG_CLAMP).exp()
}

/// det W(λ) · exp(−[log det W](λ)), evaluated in log space.
pub fn entropy_characteristic(weight: &MatrixWeight, point: DiskPoint) -> f64 {
    let w = poisson_extend(weight, point).value;
    entropy_from_logs(logdet(&w), extend_scalar(weight.logdet_fourier(), point))
}

pub fn entropy_ring(weight: &MatrixWeight, r: f64, n_angles: usize) -> Result<Vec<f64>> {
    let field = ring_field(weight.fourier(), r, n_angles, RingParts::Values)?;
    let harmonic = ring_scalar(weight.logdet_fourier(), r, n_angles);
    Ok(field
        .values
        .par_iter()
        .zip(harmonic.par_iter())
        .map(|(w, h)| entropy_from_logs(logdet(w), *h))
        .collect())
}

pub fn entropy_profile(weight: &MatrixWeight, levels: usize) -> Result<ScaleProfile> {
    check_ladder(weight, levels)?;
    let n = weight.n_points();
    let f = |r: f64| entropy_ring(weight, r, n);
    ring_profile("entropy", levels, n, &f)
}

/// Grid supremum of the entropy characteristic.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantAinfty {
    pub value: f64,
    pub at: DiskPoint,
    pub caveat: String,
}

pub fn invariant_ainfty_norm(weight: &MatrixWeight, polar: &PolarGrid) -> Result<InvariantAinfty> {
    polar.check_resolvable(weight)?;
    let rows = polar
        .radii()
        .par_iter()
        .map(|&r| entropy_ring(weight, r, polar.n_angles()))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, row) in rows.iter().enumerate() {
        let j = argmax(row);
        if row[j] > best.0 {
            best = (row[j], i, j);
        }
    }
    Ok(InvariantAinfty {
        value: best.0,
        at: polar.point(best.1, best.2),
        caveat: "supremum over polar grid nodes only".into(),
    })
}

/// The two bracketed factors of det W(λ)·det W⁻¹(λ): each is an entropy
/// characteristic (of W and of W⁻¹) and must be ≥ 1.
pub fn ainfty_brackets(weight: &MatrixWeight, inverse: &MatrixWeight, point: DiskPoint) -> (f64, f64, f64) {
    let dw = logdet(&poisson_extend(weight, point).value);
    let dinv = logdet(&poisson_extend(inverse, point).value);
    let h = extend_scalar(weight.logdet_fourier(), point);
    let product = (dw + dinv).exp();
    (product, entropy_from_logs(dw, h), entropy_from_logs(dinv, -h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    X,
    Y,
}

/// A point mass at radius r and angle 2π·angle_index/n_angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassPoint {
    pub r: f64,
    pub angle_index: usize,
    pub mass: f64,
}

/// A nonnegative measure on the disk as a list of point masses on an
/// angular grid of n_angles directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlesonMeasure {
    pub n_angles: usize,
    pub atoms: Vec<MassPoint>,
    /// Radius up to which the measure was sampled (None for exact atoms).
    pub coverage: Option<f64>,
    pub direction: Option<Direction>,
}

impl CarlesonMeasure {
    pub fn from_atoms(n_angles: usize, atoms: Vec<MassPoint>) -> Result<Self> {
        if n_angles < 8 || !n_angles.is_power_of_two() {
            return Err(Error::InvalidGrid(n_angles));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.mass >= 0.0) || !(0.0..1.0).contains(&a.r) || a.angle_index >= n_angles) {
            return Err(Error::InvalidParams(format!("invalid mass point {a:?}")));
        }
        Ok(Self {
            n_angles,
            atoms,
            coverage: None,
            direction: None,
        })
    }

    /// dμ = density · dA sampled on a polar grid (one atom per cell).
    pub fn from_density(polar: &PolarGrid, density: &[Vec<f64>], direction: Option<Direction>) -> Result<Self> {
        let mut atoms = Vec::with_capacity(polar.radii().len() * polar.n_angles());
        for (i, row) in density.iter().enumerate() {
            let w = polar.cell_weight(i);
            for (j, &rho) in row.iter().enumerate() {
                if !(rho >= 0.0) {
                    return Err(Error::InvalidParams(format!("negative density {rho} at ({i}, {j})")));
                }
                atoms.push(MassPoint {
                    r: polar.radii()[i],
                    angle_index: j,
                    mass: rho * w,
                });
            }
        }
        Ok(Self {
            n_angles: polar.n_angles(),
            atoms,
            coverage: Some(polar.outer_radius()),
            direction,
        })
    }

    pub fn zero(n_angles: usize) -> Result<Self> {
        Self::from_atoms(n_angles, Vec::new())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).fold(0.0, f64::max)
    }

    /// Σ_k 2^{−k} δ_{1−2^{−k}} on the positive real axis, k = 1..=terms.
    pub fn dyadic_point_masses(n_angles: usize, terms: usize) -> Result<Self> {
        let atoms = (1..=terms)
            .map(|k| MassPoint {
                r: ladder_radius(k),
                angle_index: 0,
                mass: 0.5f64.powi(k as i32),
            })
            .collect();
        Self::from_atoms(n_angles, atoms)
    }

    pub fn point_mass_at_origin(n_angles: usize) -> Result<Self> {
        Self::from_atoms(
            n_angles,
            vec![MassPoint {
                r: 0.0,
                angle_index: 0,
                mass: 1.0,
            }],
        )
    }

    fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_angles as f64
    }

    /// Per-level sup over shifted dyadic arcs I of μ(Q(I))/|I|,
    /// levels 0..=levels.
    pub fn carleson_norm(&self, levels: usize) -> Result<ScaleProfile> {
        let grid = CircleGrid::new(self.n_angles)?;
        if levels > grid.log2() {
            return Err(Error::GridTooCoarse(format!(
                "level {levels} needs more than {} angles",
                self.n_angles
            )));
        }
        if let Some(cov) = self.coverage {
            if levels > 0 && ladder_radius(levels) >= cov {
                return Err(Error::GridTooCoarse(format!(
                    "box depth 1 - 2^-{levels} is outside the sampled radius {cov}"
                )));
            }
        }
        let n = self.n_angles;
        let mut scales = Vec::new();
        let mut values = Vec::new();
        let mut where_ = Vec::new();
        for level in 0..=levels {
            let measure = 0.5f64.powi(level as i32);
            let depth = 1.0 - measure;
            let mut binned = vec![0.0; n];
            for a in &self.atoms {
                if a.r >= depth {
                    binned[a.angle_index] += a.mass;
                }
            }
            let mut prefix = vec![0.0; 2 * n + 1];
            for k in 0..2 * n {
                prefix[k + 1] = prefix[k] + binned[k % n];
            }
            let arcs = dyadic_arcs(&grid, level)?;
            let ratios: Vec<f64> = arcs
                .iter()
                .map(|arc| {
                    let s = arc.start_index;
                    (prefix[s + arc.length_points] - prefix[s]).max(0.0) / measure
                })
                .collect();
            let k = argmax(&ratios);
            scales.push(measure);
            values.push(ratios[k]);
            where_.push(arcs[k].to_string());
        }
        let name = match self.direction {
            Some(Direction::X) => "carleson-x",
            Some(Direction::Y) => "carleson-y",
            None => "carleson",
        };
        Ok(ScaleProfile::new(name, ScaleKind::ArcMeasure, scales, values, where_))
    }

    /// ∫_D (1−|λ|²)/|1−λ̄z|² dμ(z) for each probe λ.
    pub fn vanishing_test(&self, points: &[DiskPoint]) -> Vec<f64> {
        points
            .par_iter()
            .map(|p| {
                let lam = p.z();
                let gap = 1.0 - p.r * p.r;
                self.atoms
                    .iter()
                    .map(|a| {
                        let z = num_complex::Complex64::from_polar(a.r, self.angle(a.angle_index));
                        a.mass * gap / (c(1.0) - lam.conj() * z).norm_sqr()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Densities ‖W^{−1/2} ∂_jW W^{−1/2}‖² (1−|z|²) for j = x, y on a polar
/// grid, as Carleson measures.
pub fn carleson_density(weight: &MatrixWeight, polar: &PolarGrid) -> Result<(CarlesonMeasure, CarlesonMeasure)> {
    polar.check_resolvable(weight)?;
    let table = weight.fourier();
    let rows = polar
        .radii()
        .par_iter()
        .map(|&r| {
            let ring = ring_field(table, r, polar.n_angles(), RingParts::ValuesAndDerivatives)?;
            let gap = 1.0 - r * r;
            let pairs: Vec<(f64, f64)> = (0..polar.n_angles())
                .map(|j| {
                    let s = inv_sqrtm(&ring.values[j]);
                    let nx = hermitian_norm(&(&s * &ring.dx[j] * &s));
                    let ny = hermitian_norm(&(&s * &ring.dy[j] * &s));
                    (nx * nx * gap, ny * ny * gap)
                })
                .collect();
            Ok(pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    let dx: Vec<Vec<f64>> = rows.iter().map(|row| row.iter().map(|p| p.0).collect()).collect();
    let dy: Vec<Vec<f64>> = rows.iter().map(|row| row.iter().map(|p| p.1).collect()).collect();
    Ok((
        CarlesonMeasure::from_density(polar, &dx, Some(Direction::X))?,
        CarlesonMeasure::from_density(polar, &dy, Some(Direction::Y))?,
    ))
}

/// w_{2I}/w_I along nested arcs sharing a center.
#[derive(Debug, Clone, Serialize)]
pub struct DoublingProfile {
    pub half_points: Vec<usize>,
    pub ratios: Vec<f64>,
    /// sup of w_I (w⁻¹)_I over the ladder.
    pub m_squared: f64,
    /// max over the ladder of ratio / (2 M²); ≤ 1 when the bound holds.
    pub worst_bound_fraction: f64,
}

/// Doubling ratios of averages over arcs around `boundary_index` with
/// half-lengths 1, 2, 4, … up to n/4.
pub fn doubling_profile(weight: &MatrixWeight, boundary_index: i64) -> Result<DoublingProfile> {
    let w = weight.scalar_values()?;
    let n = w.len();
    let inv: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    let mut half = Vec::new();
    let mut h = 1;
    while 2 * h <= n / 2 {
        half.push(h);
        h *= 2;
    }
    half.push(h);
    let mut avg = Vec::new();
    let mut m2 = 0.0f64;
    for &h in &half {
        let arc = Arc::around(boundary_index, h, n)?;
        let a = crate::circle::arc_average(&w, &arc);
        let b = crate::circle::arc_average(&inv, &arc);
        m2 = m2.max(a * b);
        avg.push(a);
    }
    let ratios: Vec<f64> = avg.windows(2).map(|p| p[1] / p[0]).collect();
    let worst = ratios.iter().map(|r| r / (2.0 * m2)).fold(0.0, f64::max);
    Ok(DoublingProfile {
        half_points: half,
        ratios,
        m_squared: m2,
        worst_bound_fraction: worst,
    })
}

/// Measure convention for the arc I_λ attached to a disk point; the value
/// is the arclength in radians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcConvention {
    /// 1 − |λ|
    Gap,
    /// √(1 − |λ|)
    SqrtGap,
    /// 1 − |λ|²
    GapSquared,
}

impl ArcConvention {
    pub fn arclength(self, r: f64) -> f64 {
        match self {
            ArcConvention::Gap => 1.0 - r,
            ArcConvention::SqrtGap => (1.0 - r).sqrt(),
            ArcConvention::GapSquared => 1.0 - r * r,
        }
    }
}

/// Arc of the given arclength centered (to within half a step) at angle θ.
pub fn centered_arc(weight: &MatrixWeight, theta: f64, arclength: f64) -> Result<Arc> {
    let h = weight.grid().step();
    let n = weight.n_points();
    let half = ((arclength / (2.0 * h)).round() as usize).clamp(1, n / 2);
    let b = (theta.rem_euclid(2.0 * PI) / h - weight.offset_steps() + 0.5).round() as i64;
    Arc::around(b, half, n)
}

/// w(λ)/w_{I_λ} for λ = r e^{iθ} along the given radii.
pub fn arc_vs_poisson_ratio(weight: &MatrixWeight, theta: f64, radii: &[f64], convention: ArcConvention) -> Result<Vec<f64>> {
    let w = weight.scalar_values()?;
    radii
        .iter()
        .map(|&r| {
            let p = DiskPoint::new(r, theta)?;
            let ext = poisson_extend(weight, p).value[(0, 0)].re;
            let arc = centered_arc(weight, theta, convention.arclength(r))?;
            Ok(ext / crate::circle::arc_average(&w, &arc))
        })
        .collect()
}

/// Largest scalar restriction sqrt(w_I (w⁻¹)_I) with w = (We, e) over 64
/// fixed directions and the top singular vectors, next to the matrix
/// characteristic of the same arc.
pub fn restriction_bound(weight: &MatrixWeight, inverse: &MatrixWeight, arc: &Arc) -> Result<(f64, f64)> {
    let a = weight.matrix_average(arc);
    let b = inverse.matrix_average(arc);
    check_pd(&a, arc)?;
    let matrix = sqrt_product_norm(&a, &b);
    let d = weight.dim();
    let mut dirs = sphere_sample(d, 64);
    let (_, va) = hermitian_eigen(&a);
    let (_, vb) = hermitian_eigen(&b);
    for k in 0..d {
        dirs.push(va.column(k).into_owned());
        dirs.push(vb.column(k).into_owned());
    }
    // (W_I e, e) = ((We,e))_I, and likewise for W⁻¹ restricted to e
    let best = dirs
        .iter()
        .map(|e| {
            let we: Vec<f64> = arc.indices().map(|j| quad_form(&weight.samples()[j], e)).collect();
            let avg_w = we.iter().sum::<f64>() / we.len() as f64;
            let avg_inv = we.iter().map(|x| 1.0 / x).sum::<f64>() / we.len() as f64;
            (avg_w * avg_inv).sqrt()
        })
        .fold(0.0, f64::max);
    Ok((best, matrix))
}

/// Deterministic unit vectors in C^d.
pub fn sphere_sample(d: usize, count: usize) -> Vec<CVec> {
    (0..count)
        .map(|k| {
            let mut v = CVec::from_fn(d, |i, _| {
                let a = 1.0 + (k * (2 * i + 3) + i) as f64 * 0.7548776662;
                let b = (k * (i + 5) + 2 * i) as f64 * 0.5698402910;
                num_complex::Complex64::new((2.0 * PI * a.fract()).cos(), (2.0 * PI * b.fract()).sin())
            });
            let norm = v.norm();
            v /= c(norm);
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn build(name: &str, params: serde_json::Value, n: usize) -> MatrixWeight {
        MatrixWeight::build_builtin(name, &params, CircleGrid::new(n).unwrap()).unwrap()
    }

    #[test]
    fn constant_profiles_are_one() {
        let w = build(
            "constant",
            json!({"value": [[[1.0, 0.0], [0.3, 0.2]], [[0.3, -0.2], [2.0, 0.0]]]}),
            256,
        );
        let inv = w.invert();
        for mode in [A2Mode::Interval, A2Mode::Poisson] {
            let p = a2_profile(&w, &inv, mode, 3).unwrap();
            assert!(p.values.iter().all(|v| (v - 1.0).abs() < 1e-10), "{p:?}");
        }
        let e = entropy_profile(&w, 3).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn power_half_closed_form() {
        let w = build("scalar_power", json!({"a": 0.5}), 1 << 16);
        let inv = w.invert();
        let v = a2_symmetric_arcs(&w, &inv, &[1 << 8]).unwrap()[0];
        // midpoint error of the singular inverse is about 0.3/sqrt(256) relative
        assert!((v - 2.0 / 3.0f64.sqrt()).abs() < 0.015, "{v}");
    }

    #[test]
    fn scalar_consistency_and_restriction() {
        let spec = json!({
            "blocks": [
                {"name": "scalar_exp_trig", "params": {"cos": [0.5]}},
                {"name": "scalar_exp_trig", "params": {"sin": [0.4]}}
            ],
            "angle": {"mean": 0.3, "cos": [0.6]}
        });
        let w = build("rotation_conjugate", spec, 512);
        let inv = w.invert();
        for arc in dyadic_arcs(&w.grid(), 3).unwrap() {
            let (scalar, matrix) = restriction_bound(&w, &inv, &arc).unwrap();
            assert!(scalar <= matrix + 1e-9);
            assert!(matrix >= 1.0 - 1e-9);
        }
        let s = build("scalar_exp_trig", json!({"cos": [0.5]}), 512);
        let si = s.invert();
        let arc = Arc::new(10, 40, 512).unwrap();
        let ch = a2_interval_characteristic(&s, &si, &arc).unwrap();
        let prod = s.matrix_average(&arc)[(0, 0)].re * si.matrix_average(&arc)[(0, 0)].re;
        assert!((ch * ch - prod).abs() < 1e-10);
    }

    #[test]
    fn entropy_of_polynomial_closed_form() {
        let w = build("scalar_polynomial_squared", json!({"roots": [[1.0, 0.0]]}), 1 << 14);
        for r in [0.5, 0.75] {
            let v = entropy_characteristic(&w, DiskPoint::new(r, 0.0).unwrap());
            assert!((v - 2.0 / (1.0 - r)).abs() / v < 1e-3, "{v}");
        }
    }

    #[test]
    fn carleson_oracles() {
        let m = CarlesonMeasure::dyadic_point_masses(1024, 40).unwrap();
        let p = m.carleson_norm(8).unwrap();
        for v in &p.values[1..] {
            assert!((v - 2.0).abs() < 1e-6, "{v}");
        }
        let o = CarlesonMeasure::point_mass_at_origin(64).unwrap();
        let p = o.carleson_norm(5).unwrap();
        assert_eq!(p.values[0], 1.0);
        assert!(p.values[1..].iter().all(|v| *v == 0.0));
        let pts: Vec<DiskPoint> = (1..8).map(|k| DiskPoint::new(ladder_radius(k), 0.0).unwrap()).collect();
        for (v, pt) in o.vanishing_test(&pts).iter().zip(&pts) {
            assert!((v - (1.0 - pt.r * pt.r)).abs() < 1e-12);
        }
        assert!(m.vanishing_test(&pts).iter().all(|v| *v >= 0.15));
    }

    #[test]
    fn doubling_of_power_half() {
        let w = build("scalar_power", json!({"a": 0.5}), 1 << 12);
        let d = doubling_profile(&w, 0).unwrap();
        for r in &d.ratios[3..9] {
            assert!((r - 2f64.sqrt()).abs() < 0.02, "{r}");
        }
        assert!(d.worst_bound_fraction <= 1.0);
    }

    #[test]
    fn trend_fit() {
        let v: Vec<f64> = (0..8).map(|k| 1.0 + 0.5f64.powi(k)).collect();
        let t = Trend::fit(&v);
        assert!((t.limit_estimate - 1.0).abs() < 1e-12);
        assert_eq!(t.method, "aitken");
        assert!(t.nonincreasing_tail);
        assert!(t.slope < 0.0);
        assert!((least_squares_slope(&[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }
}
