//! Mean oscillation moduli of scalar and matrix symbols over shifted
//! dyadic arcs, and the scalar equivalence checks built on them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::builtin::polynomial_modulus_squared;
use crate::circle::{arc_average, dyadic_arcs, Arc, CircleGrid};
use crate::criteria::{
    a2_profile, fit_slope, max_ladder_level, trends_to_one, A2Mode, ScaleKind, ScaleProfile, Trend,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_norm, CMat};
use crate::weight::MatrixWeight;

/// A sampled symbol Φ on the circle grid.
#[derive(Debug, Clone)]
pub enum Symbol {
    Scalar(Vec<f64>),
    Matrix(Vec<CMat>),
}

impl Symbol {
    pub fn len(&self) -> usize {
        match self {
            Symbol::Scalar(v) => v.len(),
            Symbol::Matrix(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// |I|⁻¹∫_I ‖Φ − Φ_I‖ dm.
    pub fn mean_oscillation(&self, arc: &Arc) -> f64 {
        let len = arc.length_points as f64;
        match self {
            Symbol::Scalar(v) => {
                let mean = arc_average(v, arc);
                arc.indices().map(|j| (v[j] - mean).abs()).sum::<f64>() / len
            }
            Symbol::Matrix(v) => {
                let mean = arc_average(v, arc);
                arc.indices().map(|j| hermitian_norm(&(&v[j] - &mean))).sum::<f64>() / len
            }
        }
    }

    pub fn add(&self, other: &Symbol) -> Result<Symbol> {
        match (self, other) {
            (Symbol::Scalar(a), Symbol::Scalar(b)) if a.len() == b.len() => {
                Ok(Symbol::Scalar(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (Symbol::Matrix(a), Symbol::Matrix(b)) if a.len() == b.len() => {
                Ok(Symbol::Matrix(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            _ => Err(Error::DimensionMismatch("symbols differ in shape or length".into())),
        }
    }
}

/// Ω(δ_k) = sup of the mean oscillation over shifted dyadic arcs of
/// measure ≤ δ_k = 2^{−k}, k = 0..=levels.
#[derive(Debug, Clone, Serialize)]
pub struct OscillationModulus {
    pub scales: Vec<f64>,
    /// Sup over the arcs of measure exactly δ_k.
    pub per_level: Vec<f64>,
    pub modulus: Vec<f64>,
    pub argmax: Vec<String>,
    pub trend: Trend,
}

impl OscillationModulus {
    pub fn first(&self) -> f64 {
        self.modulus[0]
    }

    pub fn last(&self) -> f64 {
        *self.modulus.last().unwrap()
    }

    /// Identically negligible or final level at most half the first.
    pub fn vanishing(&self) -> bool {
        self.modulus.iter().all(|v| *v <= 1e-12) || self.last() <= 0.5 * self.first()
    }

    pub fn profile(&self, name: &str) -> ScaleProfile {
        ScaleProfile::new(
            name,
            ScaleKind::ArcMeasure,
            self.scales.clone(),
            self.modulus.clone(),
            self.argmax.clone(),
        )
    }
}

pub fn mean_oscillation_modulus(symbol: &Symbol, levels: usize) -> Result<OscillationModulus> {
    let grid = CircleGrid::new(symbol.len())?;
    let mut per_level = Vec::new();
    let mut at = Vec::new();
    for level in 0..=levels {
        let arcs = dyadic_arcs(&grid, level)?;
        let values: Vec<f64> = arcs.par_iter().map(|a| symbol.mean_oscillation(a)).collect();
        let mut best = 0;
        for (k, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = k;
            }
        }
        per_level.push(values[best]);
        at.push(arcs[best].to_string());
    }
    // running sup from the fine end
    let mut modulus = per_level.clone();
    let mut argmax = at.clone();
    for k in (0..modulus.len().saturating_sub(1)).rev() {
        if modulus[k + 1] > modulus[k] {
            modulus[k] = modulus[k + 1];
            argmax[k] = argmax[k + 1].clone();
        }
    }
    Ok(OscillationModulus {
        scales: (0..=levels).map(|k| 0.5f64.powi(k as i32)).collect(),
        trend: Trend::fit(&modulus),
        per_level,
        modulus,
        argmax,
    })
}

/// Power-law envelope A·(k+1)^p fitted to positive values by least squares
/// in log-log coordinates; returns (A, p).
pub fn envelope_fit(values: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (((k + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return (values.first().copied().unwrap_or(0.0), 0.0);
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let p = fit_slope(&x, &y);
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    ((my - p * mx).exp(), p)
}

/// The three equivalent scalar conditions side by side.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarEquivalenceReport {
    /// w_I (w⁻¹)_I over arcs.
    pub interval: ScaleProfile,
    /// w(λ) w⁻¹(λ) along the radius ladder.
    pub poisson: ScaleProfile,
    /// Ω for φ = log w.
    pub oscillation: OscillationModulus,
    pub interval_to_one: bool,
    pub poisson_to_one: bool,
    pub oscillation_to_zero: bool,
    /// All three agree.
    pub jointly_consistent: bool,
}

fn squared(p: &ScaleProfile, name: &str) -> ScaleProfile {
    ScaleProfile::new(
        name,
        p.scale_kind,
        p.scales.clone(),
        p.values.iter().map(|v| v * v).collect(),
        p.argmax.clone(),
    )
}

pub fn scalar_equivalence_report(weight: &MatrixWeight, levels: usize, tolerance: f64) -> Result<ScalarEquivalenceReport> {
    let w = weight.scalar_values()?;
    let inverse = weight.invert();
    let interval = squared(&a2_profile(weight, &inverse, A2Mode::Interval, levels)?, "w_I*winv_I");
    let ladder = levels.min(max_ladder_level(weight)).max(1);
    let poisson = squared(&a2_profile(weight, &inverse, A2Mode::Poisson, ladder)?, "w(z)*winv(z)");
    let oscillation = mean_oscillation_modulus(&Symbol::Scalar(w.iter().map(|x| x.ln()).collect()), levels)?;
    let interval_to_one = trends_to_one(&interval, tolerance);
    let poisson_to_one = trends_to_one(&poisson, tolerance);
    let oscillation_to_zero = oscillation.vanishing();
    Ok(ScalarEquivalenceReport {
        jointly_consistent: interval_to_one == poisson_to_one && poisson_to_one == oscillation_to_zero,
        interval,
        poisson,
        oscillation,
        interval_to_one,
        poisson_to_one,
        oscillation_to_zero,
    })
}

/// Oscillation of log(w/|p|²) after dividing out a polynomial with the
/// declared unimodular roots.
#[derive(Debug, Clone, Serialize)]
pub struct HelsonSarasonCheck {
    pub roots: Vec<(f64, f64)>,
    pub oscillation: OscillationModulus,
    pub quotient_log_vmo: bool,
}

pub fn helson_sarason_check(weight: &MatrixWeight, roots: &[Complex64], levels: usize) -> Result<HelsonSarasonCheck> {
    let w = weight.scalar_values()?;
    for z in roots {
        if (z.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("declared root {z} is not on the unit circle")));
        }
    }
    let phi: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(j, x)| (x / polynomial_modulus_squared(roots, weight.parameter(j))).ln())
        .collect();
    let oscillation = mean_oscillation_modulus(&Symbol::Scalar(phi), levels)?;
    Ok(HelsonSarasonCheck {
        roots: roots.iter().map(|z| (z.re, z.im)).collect(),
        quotient_log_vmo: oscillation.vanishing(),
        oscillation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::wrap_angle;
    use crate::weight::Provenance;
    use serde_json::json;

    fn build(name: &str, params: serde_json::Value, n: usize) -> MatrixWeight {
        MatrixWeight::build_builtin(name, &params, CircleGrid::new(n).unwrap()).unwrap()
    }

    fn offset_params(n: usize) -> Vec<f64> {
        let h = 2.0 * std::f64::consts::PI / n as f64;
        (0..n).map(|j| wrap_angle((j as f64 + 0.5) * h)).collect()
    }

    #[test]
    fn constant_symbol_has_zero_modulus() {
        let m = mean_oscillation_modulus(&Symbol::Scalar(vec![3.0; 256]), 6).unwrap();
        assert!(m.modulus.iter().all(|v| *v == 0.0));
        assert!(m.vanishing());
    }

    #[test]
    fn log_abs_is_bmo_not_vmo() {
        let ts = offset_params(1 << 14);
        let m = mean_oscillation_modulus(&Symbol::Scalar(ts.iter().map(|t| t.abs().ln()).collect()), 10).unwrap();
        assert!(m.modulus.iter().all(|v| *v > 0.5), "{:?}", m.modulus);
        assert!(!m.vanishing());
        // log log(e/|t|) oscillates less and less
        let m = mean_oscillation_modulus(
            &Symbol::Scalar(ts.iter().map(|t| (1.0 + (std::f64::consts::PI / t.abs()).ln()).ln()).collect()),
            12,
        )
        .unwrap();
        assert!(m.modulus.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.last() < m.modulus[2]);
    }

    #[test]
    fn scalar_equivalence_constant_and_smooth() {
        let w = build("constant", json!({"value": [[[2.0, 0.0]]]}), 1 << 10);
        let r = scalar_equivalence_report(&w, 6, 0.05).unwrap();
        assert!(r.interval_to_one && r.poisson_to_one && r.oscillation_to_zero && r.jointly_consistent);
        let w = build("scalar_exp_trig", json!({"cos": [0.3]}), 1 << 12);
        let r = scalar_equivalence_report(&w, 8, 0.05).unwrap();
        assert!(r.interval_to_one && r.poisson_to_one && r.oscillation_to_zero, "{r:?}");
    }

    #[test]
    fn scalar_equivalence_power_half() {
        let w = build("scalar_power", json!({"a": 0.5}), 1 << 14);
        let r = scalar_equivalence_report(&w, 10, 0.05).unwrap();
        // at level 6 the symmetric arc spans 256 samples per side
        assert!((r.interval.values[6] - 4.0 / 3.0).abs() < 0.05, "{}", r.interval.values[6]);
        assert!(!r.interval_to_one && !r.oscillation_to_zero);
    }

    #[test]
    fn helson_sarason_divides_out_root() {
        let n = 1 << 12;
        let one = [Complex64::new(1.0, 0.0)];
        let w = build("scalar_polynomial_squared", json!({"roots": [[1.0, 0.0]]}), n);
        let hs = helson_sarason_check(&w, &one, 8).unwrap();
        assert!(hs.oscillation.modulus.iter().all(|v| *v < 1e-9));
        let ts = offset_params(n);
        let grid = CircleGrid::new(n).unwrap();
        let mk = |f: &dyn Fn(f64) -> f64| {
            let s = ts.iter().map(|t| CMat::from_element(1, 1, crate::linalg::c(f(*t)))).collect();
            MatrixWeight::from_samples(grid, s, 0.5, Provenance::UserGrid).unwrap()
        };
        let smooth = mk(&|t| polynomial_modulus_squared(&one, t) * (0.3 * t.cos()).exp());
        assert!(helson_sarason_check(&smooth, &one, 8).unwrap().quotient_log_vmo);
        let rough = mk(&|t| polynomial_modulus_squared(&one, t) * (t - 2.0).abs().sqrt());
        assert!(!helson_sarason_check(&rough, &one, 8).unwrap().quotient_log_vmo);
        assert!(helson_sarason_check(&w, &[Complex64::new(0.5, 0.0)], 4).is_err());
    }

    #[test]
    fn envelope_of_power_law() {
        let v: Vec<f64> = (0..10).map(|k| 2.0 * ((k + 1) as f64).powf(-0.5)).collect();
        let (a, p) = envelope_fit(&v);
        assert!((a - 2.0).abs() < 1e-12 && (p + 0.5).abs() < 1e-12);
    }
}
