//! Sampled matrix weights: construction, validation, inversion and arc
//! averages.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use serde_json::Value;

use crate::builtin::BuiltinSpec;
use crate::circle::{arc_average, fourier_coefficients, scalar_fourier, wrap_angle, Arc, CircleGrid, FourierTable};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, c, eigenvalues, hermitian_map, logm, symmetrize, CMat};

/// Largest condition number accepted by [`MatrixWeight::invert`] without a
/// warning.
pub const CONDITION_WARNING: f64 = 1e14;

const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Where a weight came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Builtin(BuiltinSpec),
    UserGrid,
    Inverse(Box<Provenance>),
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::Builtin(spec) => spec.name().to_string(),
            Provenance::UserGrid => "user-grid".to_string(),
            Provenance::Inverse(inner) => format!("inverse({})", inner.label()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Provenance::Builtin(spec) => serde_json::json!({
                "kind": "builtin", "name": spec.name(), "params": spec.params_json()
            }),
            Provenance::UserGrid => serde_json::json!({ "kind": "grid" }),
            Provenance::Inverse(inner) => serde_json::json!({ "kind": "inverse", "of": inner.to_json() }),
        }
    }
}

/// A d×d Hermitian positive definite matrix function sampled at the angles
/// θ_j + offset of a uniform grid.
#[derive(Clone)]
pub struct MatrixWeight {
    dim: usize,
    grid: CircleGrid,
    offset_steps: f64,
    samples: Vec<CMat>,
    provenance: Provenance,
    warnings: Vec<String>,
    fourier: OnceLock<FourierTable>,
    logdet_fourier: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for MatrixWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixWeight")
            .field("dim", &self.dim)
            .field("n_points", &self.grid.n_points())
            .field("offset_steps", &self.offset_steps)
            .field("provenance", &self.provenance.label())
            .finish()
    }
}

impl MatrixWeight {
    /// Wrap samples, checking Hermitian symmetry and positive definiteness.
    /// `offset_steps` is the sampling offset in units of the grid step.
    pub fn from_samples(
        grid: CircleGrid,
        samples: Vec<CMat>,
        offset_steps: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.n_points()
            )));
        }
        let dim = samples[0].nrows();
        if dim == 0 {
            return Err(Error::DimensionMismatch("empty sample matrix".into()));
        }
        for (j, s) in samples.iter().enumerate() {
            if s.nrows() != dim || s.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "sample {j} is {}×{}, expected {dim}×{dim}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        let checked: Vec<Result<CMat>> = samples
            .into_par_iter()
            .enumerate()
            .map(|(index, s)| {
                let scale = s.iter().map(|z| z.norm()).fold(1.0, f64::max);
                let asym = asymmetry(&s);
                if !asym.is_finite() || asym > HERMITIAN_TOLERANCE * scale {
                    return Err(Error::NonHermitian {
                        index,
                        asymmetry: asym,
                    });
                }
                let s = symmetrize(&s);
                let min = eigenvalues(&s)[0];
                if !(min > 0.0) || !min.is_finite() {
                    return Err(Error::NotPositiveDefinite {
                        index,
                        min_eigenvalue: min,
                    });
                }
                Ok(s)
            })
            .collect();
        let samples = checked.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            grid,
            offset_steps,
            samples,
            provenance,
            warnings: Vec::new(),
            fourier: OnceLock::new(),
            logdet_fourier: OnceLock::new(),
        })
    }

    /// Sample a builtin family on the grid.
    pub fn from_builtin(spec: BuiltinSpec, grid: CircleGrid) -> Result<Self> {
        let offset_steps = if spec.needs_offset() { 0.5 } else { 0.0 };
        let samples = sample_spec(&spec, grid.n_points(), offset_steps);
        let warnings = spec.warnings();
        let mut w = Self::from_samples(grid, samples, offset_steps, Provenance::Builtin(spec))?;
        w.warnings = warnings;
        Ok(w)
    }

    pub fn build_builtin(name: &str, params: &Value, grid: CircleGrid) -> Result<Self> {
        Self::from_builtin(BuiltinSpec::from_json(name, params)?, grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn offset_steps(&self) -> f64 {
        self.offset_steps
    }

    /// Angle of sample 0.
    pub fn offset_angle(&self) -> f64 {
        self.offset_steps * self.grid.step()
    }

    /// Sample angle in [0, 2π).
    pub fn sample_angle(&self, j: usize) -> f64 {
        (j as f64 + self.offset_steps) * self.grid.step()
    }

    /// Sample angle as a parameter t ∈ (−π, π].
    pub fn parameter(&self, j: usize) -> f64 {
        wrap_angle(self.sample_angle(j))
    }

    /// Grid index whose sample angle is nearest to t.
    pub fn nearest_index(&self, t: f64) -> usize {
        let n = self.n_points() as f64;
        let k = (t.rem_euclid(2.0 * std::f64::consts::PI) / self.grid.step() - self.offset_steps).round();
        (k.rem_euclid(n)) as usize
    }

    /// Fourier table up to the largest non-aliasing index, computed once.
    pub fn fourier(&self) -> &FourierTable {
        self.fourier.get_or_init(|| {
            fourier_coefficients(&self.samples, self.grid.max_fourier_index(), self.offset_angle())
                .expect("max_fourier_index never aliases")
        })
    }

    pub fn logdet_samples(&self) -> Vec<f64> {
        self.samples.par_iter().map(crate::linalg::logdet).collect()
    }

    /// Fourier coefficients of log det W at indices −N_max..=N_max.
    pub fn logdet_fourier(&self) -> &[Complex64] {
        self.logdet_fourier.get_or_init(|| {
            let values: Vec<Complex64> = self.logdet_samples().into_iter().map(c).collect();
            scalar_fourier(
                &values,
                self.grid.max_fourier_index(),
                self.offset_angle(),
                &mut FftPlanner::new(),
            )
            .expect("max_fourier_index never aliases")
        })
    }

    /// Samplewise matrix logarithm.
    pub fn log_samples(&self) -> Vec<CMat> {
        self.samples.par_iter().map(logm).collect()
    }

    /// Scalar sample values; fails for d > 1.
    pub fn scalar_values(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::NotScalar(self.dim));
        }
        Ok(self.samples.iter().map(|s| s[(0, 0)].re).collect())
    }

    /// Samplewise inverse. Ill-conditioned samples produce a warning.
    pub fn invert(&self) -> MatrixWeight {
        let inverted: Vec<(CMat, f64)> = self
            .samples
            .par_iter()
            .map(|s| {
                let ev = eigenvalues(s);
                let cond = ev[ev.len() - 1] / ev[0];
                (hermitian_map(s, |x| 1.0 / x), cond)
            })
            .collect();
        let worst = inverted
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |acc, (j, (_, k))| if *k > acc.1 { (j, *k) } else { acc });
        let mut warnings = self.warnings.clone();
        if worst.1 > CONDITION_WARNING {
            warnings.push(format!(
                "sample {} has condition number {:e}; inverse is inaccurate",
                worst.0, worst.1
            ));
        }
        MatrixWeight {
            dim: self.dim,
            grid: self.grid,
            offset_steps: self.offset_steps,
            samples: inverted.into_iter().map(|(m, _)| m).collect(),
            provenance: Provenance::Inverse(Box::new(self.provenance.clone())),
            warnings,
            fourier: OnceLock::new(),
            logdet_fourier: OnceLock::new(),
        }
    }

    /// W_I = |I|⁻¹∫_I W dm.
    pub fn matrix_average(&self, arc: &Arc) -> CMat {
        symmetrize(&arc_average(&self.samples, arc))
    }

    /// Quadrature diagnostics and integrability verdicts.
    pub fn validate(&self) -> WeightDiagnostics {
        let stats = SampleStats::of(&self.samples);
        let mut notes = self.warnings.clone();
        let (refinement, w_check, winv_check, logdet_check) = match self.refinement_sequence() {
            Some(seq) => {
                let w: Vec<f64> = seq.iter().map(|s| s.l1_w).collect();
                let winv: Vec<f64> = seq.iter().map(|s| s.l1_winv).collect();
                let ld: Vec<f64> = seq.iter().map(|s| s.l1_abs_logdet).collect();
                let steps = seq
                    .iter()
                    .map(|s| RefinementStep {
                        n_points: s.n_points,
                        l1_norm_w: s.l1_w,
                        l1_norm_winv: s.l1_winv,
                    })
                    .collect();
                (steps, refinement_verdict(&w), refinement_verdict(&winv), refinement_verdict(&ld))
            }
            None => {
                notes.push("integrability judged by largest single-cell share".to_string());
                (
                    Vec::new(),
                    cell_share_verdict(&stats.max_norms),
                    cell_share_verdict(&stats.inv_norms),
                    cell_share_verdict(&stats.abs_logdets),
                )
            }
        };
        if winv_check == Integrability::Finite && logdet_check != Integrability::Finite {
            notes.push("inverse integrable but log det flagged: inconsistent quadrature".into());
        }
        WeightDiagnostics {
            n_points: self.n_points(),
            dim: self.dim,
            min_eigenvalue: stats.min_eigenvalue,
            max_condition: stats.max_condition,
            l1_norm_w: stats.l1_w,
            l1_norm_winv: stats.l1_winv,
            logdet_integral: stats.logdet_integral,
            w_integrable: w_check,
            winv_integrable: winv_check,
            logdet_integrable: logdet_check,
            refinement,
            notes,
        }
    }

    /// Quadrature sums at n/4, n/2 and n points, when the weight can be
    /// resampled (builtins and their inverses).
    fn refinement_sequence(&self) -> Option<Vec<SampleStats>> {
        let (spec, inverse) = match &self.provenance {
            Provenance::Builtin(spec) => (spec, false),
            Provenance::Inverse(inner) => match inner.as_ref() {
                Provenance::Builtin(spec) => (spec, true),
                _ => return None,
            },
            Provenance::UserGrid => return None,
        };
        let n = self.n_points();
        if n < 32 {
            return None;
        }
        let mut out = Vec::new();
        for m in [n / 4, n / 2] {
            let mut s = sample_spec(spec, m, self.offset_steps);
            if inverse {
                s = s.iter().map(|x| hermitian_map(x, |v| 1.0 / v)).collect();
            }
            out.push(SampleStats::of(&s));
        }
        out.push(SampleStats::of(&self.samples));
        Some(out)
    }
}

/// Evaluate a builtin at θ_j + offset for a grid of n points.
pub fn sample_spec(spec: &BuiltinSpec, n: usize, offset_steps: f64) -> Vec<CMat> {
    let f = spec.evaluator();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .into_par_iter()
        .map(|j| f(wrap_angle((j as f64 + offset_steps) * h)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrability {
    Finite,
    Diverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementStep {
    pub n_points: usize,
    pub l1_norm_w: f64,
    pub l1_norm_winv: f64,
}

/// Quadrature summary of a weight.
#[derive(Debug, Clone, Serialize)]
pub struct WeightDiagnostics {
    pub n_points: usize,
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub max_condition: f64,
    /// ∫‖W‖ dm
    pub l1_norm_w: f64,
    /// ∫‖W⁻¹‖ dm
    pub l1_norm_winv: f64,
    /// ∫ log det W dm
    pub logdet_integral: f64,
    pub w_integrable: Integrability,
    pub winv_integrable: Integrability,
    pub logdet_integrable: Integrability,
    pub refinement: Vec<RefinementStep>,
    pub notes: Vec<String>,
}

impl WeightDiagnostics {
    pub fn hypothesis_holds(&self) -> bool {
        self.winv_integrable == Integrability::Finite
    }
}

struct SampleStats {
    n_points: usize,
    min_eigenvalue: f64,
    max_condition: f64,
    l1_w: f64,
    l1_winv: f64,
    l1_abs_logdet: f64,
    logdet_integral: f64,
    max_norms: Vec<f64>,
    inv_norms: Vec<f64>,
    abs_logdets: Vec<f64>,
}

impl SampleStats {
    fn of(samples: &[CMat]) -> Self {
        let per: Vec<(f64, f64, f64)> = samples
            .par_iter()
            .map(|s| {
                let ev = eigenvalues(s);
                (ev[0], ev[ev.len() - 1], ev.iter().map(|x| x.ln()).sum())
            })
            .collect();
        let n = samples.len() as f64;
        let max_norms: Vec<f64> = per.iter().map(|p| p.1).collect();
        let inv_norms: Vec<f64> = per.iter().map(|p| 1.0 / p.0).collect();
        let logdets: Vec<f64> = per.iter().map(|p| p.2).collect();
        let abs_logdets: Vec<f64> = logdets.iter().map(|x| x.abs()).collect();
        Self {
            n_points: samples.len(),
            min_eigenvalue: per.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            max_condition: per.iter().map(|p| p.1 / p.0).fold(0.0, f64::max),
            l1_w: max_norms.iter().sum::<f64>() / n,
            l1_winv: inv_norms.iter().sum::<f64>() / n,
            l1_abs_logdet: abs_logdets.iter().sum::<f64>() / n,
            logdet_integral: logdets.iter().sum::<f64>() / n,
            max_norms,
            inv_norms,
            abs_logdets,
        }
    }
}

/// Diverging when the last refinement still adds more than 2% and the
/// increments are not shrinking geometrically.
pub fn refinement_verdict(values: &[f64]) -> Integrability {
    if values.iter().any(|v| !v.is_finite()) {
        return Integrability::Diverging;
    }
    if let [.., a, b, last] = values {
        let inc1 = b - a;
        let inc2 = last - b;
        if inc2 > 0.02 * last.abs() && inc2 > 0.85 * inc1 {
            return Integrability::Diverging;
        }
    }
    Integrability::Finite
}

/// Diverging when a single cell carries more than 5% of the integral.
pub fn cell_share_verdict(values: &[f64]) -> Integrability {
    let total: f64 = values.iter().sum();
    let max = values.iter().copied().fold(0.0, f64::max);
    if !total.is_finite() || (total > 0.0 && max / total > 0.05) {
        Integrability::Diverging
    } else {
        Integrability::Finite
    }
}
