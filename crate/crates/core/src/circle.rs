//! Uniform circle grid, grid-aligned arcs, arc averages and discrete
//! Fourier analysis with the normalized measure m(T) = 1.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// Uniform grid θ_j = 2πj/n on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleGrid {
    n_points: usize,
}

impl CircleGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(n_points));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid spacing 2π/n.
    pub fn step(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    pub fn log2(&self) -> usize {
        self.n_points.trailing_zeros() as usize
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.step() * j as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.angle(j)).collect()
    }

    /// Largest Fourier index that does not alias.
    pub fn max_fourier_index(&self) -> usize {
        self.n_points / 2 - 1
    }
}

/// Map an angle to the parameter range (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// A grid-aligned subarc: `length_points` consecutive samples starting at
/// `start_index`, wrapping modulo `n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub start_index: usize,
    pub length_points: usize,
    pub n_points: usize,
}

impl Arc {
    pub fn new(start_index: usize, length_points: usize, n_points: usize) -> Result<Self> {
        if length_points == 0 || length_points > n_points {
            return Err(Error::InvalidArc(format!(
                "length {length_points} not in 1..={n_points}"
            )));
        }
        Ok(Self {
            start_index: start_index % n_points,
            length_points,
            n_points,
        })
    }

    pub fn full(n_points: usize) -> Self {
        Self {
            start_index: 0,
            length_points: n_points,
            n_points,
        }
    }

    /// The arc of `2 * half_points` samples whose midpoint is the cell
    /// boundary before sample `boundary_index`.
    pub fn around(boundary_index: i64, half_points: usize, n_points: usize) -> Result<Self> {
        let n = n_points as i64;
        let start = (boundary_index - half_points as i64).rem_euclid(n) as usize;
        Self::new(start, 2 * half_points, n_points)
    }

    /// Symmetric arc around boundary index 0; on a half-offset grid this is
    /// exactly [−ε, ε] with ε = half_points · step.
    pub fn symmetric(half_points: usize, n_points: usize) -> Result<Self> {
        Self::around(0, half_points, n_points)
    }

    /// Normalized measure |I| = length / n.
    pub fn measure(&self) -> f64 {
        self.length_points as f64 / self.n_points as f64
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.length_points).map(move |k| (self.start_index + k) % self.n_points)
    }

    pub fn contains_index(&self, j: usize) -> bool {
        let rel = (j + self.n_points - self.start_index) % self.n_points;
        rel < self.length_points
    }

    /// Rescale to a grid whose size is a multiple or divisor of this one.
    pub fn rescaled(&self, n_points: usize) -> Result<Self> {
        if n_points >= self.n_points {
            let f = n_points / self.n_points;
            Self::new(self.start_index * f, self.length_points * f, n_points)
        } else {
            let f = self.n_points / n_points;
            if !self.start_index.is_multiple_of(f) || !self.length_points.is_multiple_of(f) {
                return Err(Error::InvalidArc(format!(
                    "{self} not representable on {n_points} points"
                )));
            }
            Self::new(self.start_index / f, self.length_points / f, n_points)
        }
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "arc[{}+{}/{}]",
            self.start_index, self.length_points, self.n_points
        )
    }
}

/// Values that can be averaged over an arc.
pub trait Sample: Clone {
    fn zero_like(&self) -> Self;
    fn accumulate(&mut self, other: &Self);
    fn scaled(&self, s: f64) -> Self;
}

impl Sample for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

impl Sample for Complex64 {
    fn zero_like(&self) -> Self {
        c(0.0)
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

impl Sample for CMat {
    fn zero_like(&self) -> Self {
        CMat::zeros(self.nrows(), self.ncols())
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn scaled(&self, s: f64) -> Self {
        self * c(s)
    }
}

/// Midpoint-rule average |I|⁻¹∫_I f dm over the arc's samples.
pub fn arc_average<T: Sample>(samples: &[T], arc: &Arc) -> T {
    debug_assert_eq!(samples.len(), arc.n_points);
    let mut acc = samples[arc.start_index].zero_like();
    for j in arc.indices() {
        acc.accumulate(&samples[j]);
    }
    acc.scaled(1.0 / arc.length_points as f64)
}

/// The 2^level aligned arcs of measure 2^−level followed by the
/// half-shifted family at the same scale (absent when arcs are single
/// points or the arc is the whole circle).
pub fn dyadic_arcs(grid: &CircleGrid, level: usize) -> Result<Vec<Arc>> {
    let max = grid.log2();
    if level > max {
        return Err(Error::LevelOutOfRange { level, max });
    }
    let n = grid.n_points();
    let len = n >> level;
    let count = 1usize << level;
    let mut arcs: Vec<Arc> = (0..count)
        .map(|k| Arc::new(k * len, len, n))
        .collect::<Result<_>>()?;
    if level >= 1 && len >= 2 {
        for k in 0..count {
            arcs.push(Arc::new(k * len + len / 2, len, n)?);
        }
    }
    Ok(arcs)
}

/// Fourier coefficients Ŵ(n), |n| ≤ max_index, of a sampled matrix function.
#[derive(Debug, Clone)]
pub struct FourierTable {
    max_index: usize,
    dim: usize,
    coefficients: Vec<CMat>,
}

impl FourierTable {
    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ŵ(n); panics if |n| exceeds the table.
    pub fn get(&self, n: i64) -> &CMat {
        let idx = n + self.max_index as i64;
        assert!(
            idx >= 0 && (idx as usize) < self.coefficients.len(),
            "Fourier index {n} outside ±{}",
            self.max_index
        );
        &self.coefficients[idx as usize]
    }

    pub fn try_get(&self, n: i64) -> Option<&CMat> {
        if n.unsigned_abs() as usize <= self.max_index {
            Some(self.get(n))
        } else {
            None
        }
    }

    /// Largest spectral norm among coefficients with |n| ≥ from.
    pub fn sup_norm_from(&self, from: usize) -> f64 {
        (from..=self.max_index)
            .flat_map(|k| [k as i64, -(k as i64)])
            .map(|k| crate::linalg::frobenius(self.get(k)))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_from(0)
    }
}

/// Forward DFT of real-or-complex scalar samples, returned at indices
/// −max_index..=max_index; `offset` is the angle of sample 0.
pub fn scalar_fourier(
    samples: &[Complex64],
    max_index: usize,
    offset: f64,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if 2 * max_index >= n {
        return Err(Error::Aliasing {
            max_index,
            n_points: n,
        });
    }
    let fft = planner.plan_fft_forward(n);
    let mut buf = samples.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok((-(max_index as i64)..=max_index as i64)
        .map(|k| {
            let raw = buf[k.rem_euclid(n as i64) as usize] * scale;
            raw * Complex64::from_polar(1.0, -(k as f64) * offset)
        })
        .collect())
}

/// Entrywise Fourier coefficients Ŵ(n) = ∫ W e^{−int} dm of matrix samples
/// taken at angles θ_j + offset.
pub fn fourier_coefficients(samples: &[CMat], max_index: usize, offset: f64) -> Result<FourierTable> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidGrid(0));
    }
    if 2 * max_index >= n {
        return Err(Error::Aliasing {
            max_index,
            n_points: n,
        });
    }
    let d = samples[0].nrows();
    let mut planner = FftPlanner::new();
    let mut coefficients = vec![CMat::zeros(d, d); 2 * max_index + 1];
    for r in 0..d {
        for col in 0..d {
            let entry: Vec<Complex64> = samples.iter().map(|m| m[(r, col)]).collect();
            let coeffs = scalar_fourier(&entry, max_index, offset, &mut planner)?;
            for (slot, v) in coefficients.iter_mut().zip(coeffs) {
                slot[(r, col)] = v;
            }
        }
    }
    Ok(FourierTable {
        max_index,
        dim: d,
        coefficients,
    })
}

/// Evaluate Σ_k coeffs[k] e^{ikθ_j} at all grid angles θ_j = 2πj/n, where
/// `coeffs` holds indices −m..=m.
pub fn synthesize(coeffs: &[Complex64], n: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let m = coeffs.len() / 2;
    assert!(2 * m < n, "synthesis would alias");
    let mut buf = vec![c(0.0); n];
    for (i, &v) in coeffs.iter().enumerate() {
        let k = i as i64 - m as i64;
        buf[k.rem_euclid(n as i64) as usize] += v;
    }
    let ifft = planner.plan_fft_inverse(n);
    ifft.process(&mut buf);
    buf
}
