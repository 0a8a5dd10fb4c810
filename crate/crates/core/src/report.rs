//! Analysis configuration, report assembly, trend verdicts and CSV export.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::builtin::{BuiltinSpec, Continuation};
use crate::circle::CircleGrid;
use crate::criteria::{
    a2_profile, a2_symmetric_arcs, carleson_density, entropy_profile, fit_slope, invariant_ainfty_norm,
    max_ladder_level, trends_to_one, trends_to_zero, A2Mode, InvariantAinfty, ScaleProfile, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::factorization::{
    convergence_profile, outer_determinant_check, spectral_factor, subordination_on_grid, ConvergenceProfile,
};
use crate::harmonic::{probe_limit, DiskPoint, PolarGrid};
use crate::linalg::{c, CVec};
use crate::oscillation::{mean_oscillation_modulus, OscillationModulus, Symbol};
use crate::prediction::{rho_table, szego_distance, RhoEstimate, SzegoDistance};
use crate::weight::{MatrixWeight, WeightDiagnostics};

pub const LABEL_REGULAR: &str = "trend-consistent with completely regular";
pub const LABEL_INCONSISTENT: &str = "trend-inconsistent";
pub const LABEL_HYPOTHESIS: &str = "hypothesis violated (W⁻¹∉L¹)";

/// ρ_N at the largest N must fall below this for a regular trend.
pub const RHO_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    A2Interval,
    A2Poisson,
    Entropy,
    Carleson,
    Rho,
    Factorize,
    Oscillation,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::A2Interval,
        Criterion::A2Poisson,
        Criterion::Entropy,
        Criterion::Carleson,
        Criterion::Rho,
        Criterion::Factorize,
        Criterion::Oscillation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::A2Interval => "a2-interval",
            Criterion::A2Poisson => "a2-poisson",
            Criterion::Entropy => "entropy",
            Criterion::Carleson => "carleson",
            Criterion::Rho => "rho",
            Criterion::Factorize => "factorize",
            Criterion::Oscillation => "oscillation",
        }
    }

    /// Members of the equivalence whose verdicts must agree.
    pub fn in_equivalence(self) -> bool {
        !matches!(self, Criterion::Factorize | Criterion::Oscillation)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown criterion `{s}`")))
    }
}

/// Comma-separated criterion names; `all` selects everything.
pub fn parse_criteria(list: &str) -> Result<BTreeSet<Criterion>> {
    let mut out = BTreeSet::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "all" {
            out.extend(Criterion::ALL);
        } else {
            out.insert(item.parse()?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub n_points: usize,
    /// Dyadic arc levels 0..=levels.
    pub levels: usize,
    /// Radius ladder 1 − 2^{−k}, k = 1..=radii; also the polar band count.
    pub radii: usize,
    pub criteria: BTreeSet<Criterion>,
    pub n_list: Vec<usize>,
    pub k: usize,
    pub factor_order: usize,
    pub tolerance: f64,
    pub polar_cells: usize,
    pub polar_angles: usize,
}

impl AnalysisConfig {
    pub fn for_grid(n_points: usize) -> Result<Self> {
        let log2 = CircleGrid::new(n_points)?.log2();
        Ok(Self {
            n_points,
            levels: log2.saturating_sub(3).min(12),
            radii: log2.saturating_sub(4).clamp(1, 10),
            criteria: Criterion::ALL.into_iter().collect(),
            n_list: vec![0, 1, 2, 4, 8, 16, 32, 64],
            k: 64,
            factor_order: 64,
            tolerance: DEFAULT_TOLERANCE,
            polar_cells: 16,
            polar_angles: n_points.min(256),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let grid = CircleGrid::new(self.n_points)?;
        if self.levels > grid.log2() {
            return Err(Error::InvalidParams(format!(
                "levels {} exceed log2(grid) = {}",
                self.levels,
                grid.log2()
            )));
        }
        if self.radii == 0 {
            return Err(Error::InvalidParams("radii must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("K must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        if self.polar_angles == 0 || !self.polar_angles.is_power_of_two() {
            return Err(Error::InvalidParams("polar angle count must be a power of two".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightSummary {
    pub provenance: Value,
    pub dim: usize,
    pub n_points: usize,
    pub sample_offset: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict {
    pub condition: String,
    pub consistent: bool,
    /// Names of the profiles or tables the verdict rests on.
    pub supporting: Vec<String>,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Overall {
    pub label: String,
    /// Equivalent criteria that were evaluated.
    pub evaluated: Vec<String>,
    pub consistent: Vec<String>,
    pub inconsistent: Vec<String>,
    /// Every evaluated equivalent criterion gave the same verdict.
    pub agreement: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationSummary {
    pub order: usize,
    pub circle_residual: f64,
    pub det_f0_abs: f64,
    /// exp(½∫ log det W dm)
    pub geometric_mean: f64,
    pub outer_determinant_max_error: f64,
    pub subordination_max: Option<f64>,
    pub convergence: ConvergenceProfile,
    pub szego: Vec<SzegoDistance>,
}

/// Symmetric-arc characteristics of the counterexample and their growth.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleSummary {
    /// Normalized arc measures 2^{−k}.
    pub arc_measures: Vec<f64>,
    pub characteristic: Vec<f64>,
    /// Same ladder for the piecewise-linear continuation.
    pub characteristic_linear: Vec<f64>,
    /// Slope of log(characteristic − 1) against log log(1/ε).
    pub loglog_slope: f64,
    pub loglog_slope_linear: f64,
    pub a2_diverging: bool,
    pub log_w_vmo: bool,
    /// A₂ diverges while log W trends into VMO.
    pub conjunction_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub tool: ToolInfo,
    /// Seconds since the Unix epoch; the only nondeterministic field.
    pub timestamp: String,
    pub config: AnalysisConfig,
    pub weight: WeightSummary,
    pub diagnostics: WeightDiagnostics,
    pub profiles: BTreeMap<String, ScaleProfile>,
    pub oscillation: Option<OscillationModulus>,
    pub invariant_ainfty: Option<InvariantAinfty>,
    pub rho: Option<Vec<RhoEstimate>>,
    pub factorization: Option<FactorizationSummary>,
    pub counterexample: Option<CounterexampleSummary>,
    pub verdicts: BTreeMap<String, CriterionVerdict>,
    pub overall: Overall,
    pub errors: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl RegularityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timestamp blanked, for byte comparison.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut r = self.clone();
        r.timestamp = String::new();
        r.to_json()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    /// First error that invalidates the input, if any.
    pub fn numerical_failure(&self) -> bool {
        !self.errors.is_empty()
    }
}

fn timestamp() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default()
}

/// Last ρ at most RHO_THRESHOLD and the table nonincreasing in N.
pub fn rho_trends_to_zero(table: &[RhoEstimate]) -> bool {
    match table.last() {
        None => false,
        Some(last) => last.value <= RHO_THRESHOLD && table.windows(2).all(|w| w[1].value <= w[0].value + 1e-9),
    }
}

fn verdict(condition: &str, consistent: bool, supporting: &[&str], method: String) -> CriterionVerdict {
    CriterionVerdict {
        condition: condition.into(),
        consistent,
        supporting: supporting.iter().map(|s| s.to_string()).collect(),
        method,
    }
}

fn one_verdict(condition: &str, p: &ScaleProfile, tolerance: f64) -> CriterionVerdict {
    verdict(
        condition,
        trends_to_one(p, tolerance),
        &[&p.name],
        format!(
            "|limit - 1| <= {tolerance}; limit {:.6} by {}",
            p.trend.limit_estimate, p.trend.method
        ),
    )
}

fn polar_grid(weight: &MatrixWeight, config: &AnalysisConfig) -> Result<PolarGrid> {
    let polar = PolarGrid::dyadic(config.radii, config.polar_cells, config.polar_angles.min(weight.n_points()))?;
    polar.check_resolvable(weight)?;
    Ok(polar)
}

fn factorization_summary(weight: &MatrixWeight, config: &AnalysisConfig, diagnostics: &WeightDiagnostics) -> Result<FactorizationSummary> {
    let order = config.factor_order.max(1);
    let factor = spectral_factor(weight, order)?;
    let orders: Vec<usize> = [order / 4, order / 2, order].into_iter().filter(|m| *m > 0).collect();
    let convergence = convergence_profile(weight, &orders)?;
    let limit = probe_limit(weight);
    let probes: Vec<DiskPoint> = [0.0, 0.5, 0.9]
        .into_iter()
        .filter(|r| *r <= limit)
        .flat_map(|r| (0..4).map(move |j| DiskPoint { r, theta: j as f64 * PI / 2.0 }))
        .collect();
    let outer = outer_determinant_check(&factor, weight, &probes)
        .into_iter()
        .fold(0.0, f64::max);
    let subordination = polar_grid(weight, config)
        .and_then(|p| subordination_on_grid(&factor, weight, &p))
        .ok();
    let d = weight.dim();
    let szego = (0..d)
        .map(|i| {
            let e = CVec::from_fn(d, |j, _| c(if i == j { 1.0 } else { 0.0 }));
            szego_distance(weight, &e, order, Some(&factor))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactorizationSummary {
        order,
        circle_residual: factor.circle_residual,
        det_f0_abs: factor.coefficient(0).determinant().norm(),
        geometric_mean: (0.5 * diagnostics.logdet_integral).exp(),
        outer_determinant_max_error: outer,
        subordination_max: subordination,
        convergence,
        szego,
    })
}

/// Run the selected criteria. Module errors are recorded per criterion;
/// only an invalid configuration aborts.
pub fn run_analysis(weight: &MatrixWeight, config: &AnalysisConfig) -> Result<RegularityReport> {
    config.validate()?;
    let diagnostics = weight.validate();
    let mut profiles = BTreeMap::new();
    let mut verdicts = BTreeMap::new();
    let mut errors = BTreeMap::new();
    let mut warnings: Vec<String> = weight.warnings().to_vec();
    let mut oscillation = None;
    let mut invariant_ainfty = None;
    let mut rho = None;
    let mut factorization = None;
    let inverse = weight.invert();
    let levels = config.levels.min(weight.grid().log2());
    let ladder = config.radii.min(max_ladder_level(weight));
    if ladder < config.radii {
        warnings.push(format!(
            "radius ladder capped at {ladder} by the probe limit of a {}-point grid",
            weight.n_points()
        ));
    }
    if config.criteria.is_empty() {
        warnings.push("no criteria selected".into());
    }

    for &criterion in &config.criteria {
        let name = criterion.name().to_string();
        let outcome: Result<()> = (|| {
            match criterion {
                Criterion::A2Interval => {
                    let p = a2_profile(weight, &inverse, A2Mode::Interval, levels)?;
                    verdicts.insert(name.clone(), one_verdict("interval A2 characteristic tends to 1", &p, config.tolerance));
                    profiles.insert(p.name.clone(), p);
                }
                Criterion::A2Poisson => {
                    let p = a2_profile(weight, &inverse, A2Mode::Poisson, ladder.max(1))?;
                    verdicts.insert(name.clone(), one_verdict("Poisson A2 characteristic tends to 1", &p, config.tolerance));
                    profiles.insert(p.name.clone(), p);
                }
                Criterion::Entropy => {
                    let p = entropy_profile(weight, ladder.max(1))?;
                    verdicts.insert(name.clone(), one_verdict("entropy characteristic tends to 1", &p, config.tolerance));
                    profiles.insert(p.name.clone(), p);
                    invariant_ainfty = polar_grid(weight, config)
                        .and_then(|polar| invariant_ainfty_norm(weight, &polar))
                        .ok();
                }
                Criterion::Carleson => {
                    let polar = polar_grid(weight, config)?;
                    let (mx, my) = carleson_density(weight, &polar)?;
                    let lv = levels.min(polar.band_count() - 1);
                    let mut px = mx.carleson_norm(lv)?;
                    let mut py = my.carleson_norm(lv)?;
                    px.name = "carleson-x".into();
                    py.name = "carleson-y".into();
                    let ok = trends_to_zero(&px) && trends_to_zero(&py);
                    verdicts.insert(
                        name.clone(),
                        verdict(
                            "derivative densities are vanishing Carleson measures",
                            ok,
                            &["carleson-x", "carleson-y"],
                            format!(
                                "last <= first/4 with nonincreasing tail; x {:.3e} -> {:.3e}, y {:.3e} -> {:.3e}",
                                px.first(),
                                px.last(),
                                py.first(),
                                py.last()
                            ),
                        ),
                    );
                    profiles.insert(px.name.clone(), px);
                    profiles.insert(py.name.clone(), py);
                }
                Criterion::Rho => {
                    let mut n_list = config.n_list.clone();
                    n_list.sort_unstable();
                    n_list.dedup();
                    let table = rho_table(weight, &n_list, config.k)?;
                    let ok = rho_trends_to_zero(&table);
                    verdicts.insert(
                        name.clone(),
                        verdict(
                            "rho_N tends to 0",
                            ok,
                            &["rho"],
                            format!("largest-N value <= {RHO_THRESHOLD} and nonincreasing in N (slack 1e-9)"),
                        ),
                    );
                    rho = Some(table);
                }
                Criterion::Factorize => {
                    factorization = Some(factorization_summary(weight, config, &diagnostics)?);
                }
                Criterion::Oscillation => {
                    let m = mean_oscillation_modulus(&Symbol::Matrix(weight.log_samples()), levels)?;
                    let p = m.profile("oscillation-log-w");
                    verdicts.insert(
                        name.clone(),
                        verdict(
                            "log W in VMO (necessary, not sufficient for d > 1)",
                            m.vanishing(),
                            &["oscillation-log-w"],
                            "final modulus <= half the first".into(),
                        ),
                    );
                    profiles.insert(p.name.clone(), p);
                    oscillation = Some(m);
                }
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            errors.insert(name, e.to_string());
        }
    }

    let evaluated: Vec<String> = config
        .criteria
        .iter()
        .filter(|c| c.in_equivalence())
        .map(|c| c.name().to_string())
        .filter(|n| verdicts.contains_key(n))
        .collect();
    let consistent: Vec<String> = evaluated.iter().filter(|n| verdicts[*n].consistent).cloned().collect();
    let inconsistent: Vec<String> = evaluated.iter().filter(|n| !verdicts[*n].consistent).cloned().collect();
    let label = if !diagnostics.hypothesis_holds() {
        LABEL_HYPOTHESIS
    } else if evaluated.is_empty() || !inconsistent.is_empty() {
        LABEL_INCONSISTENT
    } else {
        LABEL_REGULAR
    };
    if evaluated.is_empty() {
        warnings.push("no criterion of the equivalence produced a verdict".into());
    }
    Ok(RegularityReport {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        timestamp: timestamp(),
        config: config.clone(),
        weight: WeightSummary {
            provenance: weight.provenance().to_json(),
            dim: weight.dim(),
            n_points: weight.n_points(),
            sample_offset: weight.offset_steps(),
            warnings: weight.warnings().to_vec(),
        },
        diagnostics,
        profiles,
        oscillation,
        invariant_ainfty,
        rho,
        factorization,
        counterexample: None,
        verdicts,
        overall: Overall {
            label: label.into(),
            agreement: consistent.is_empty() || inconsistent.is_empty(),
            evaluated,
            consistent,
            inconsistent,
        },
        errors,
        warnings,
    })
}

/// Normalized measures 2^{−k} of the symmetric arcs used by the
/// counterexample ladder on a grid of n points: k = 4..log2(n)−1.
pub fn counterexample_ladder(n_points: usize) -> Result<Vec<usize>> {
    let log2 = CircleGrid::new(n_points)?.log2();
    Ok((4..log2).collect())
}

/// log(characteristic − 1) against log log(1/ε) with ε = π·2^{−k}.
pub fn loglog_growth_slope(ks: &[usize], characteristic: &[f64]) -> f64 {
    let x: Vec<f64> = ks.iter().map(|&k| (1.0 / (PI * 0.5f64.powi(k as i32))).ln().ln()).collect();
    let y: Vec<f64> = characteristic.iter().map(|v| (v - 1.0).max(f64::MIN_POSITIVE).ln()).collect();
    fit_slope(&x, &y)
}

fn symmetric_ladder(weight: &MatrixWeight, ks: &[usize]) -> Result<Vec<f64>> {
    let n = weight.n_points();
    let half: Vec<usize> = ks.iter().map(|&k| n >> (k + 1)).collect();
    a2_symmetric_arcs(weight, &weight.invert(), &half)
}

/// The counterexample run: A₂ on symmetric arcs around the singular point
/// for both continuations, plus the configured criteria (normally the
/// interval A₂ profile and the oscillation of log W) in one report.
pub fn run_counterexample(config: &AnalysisConfig) -> Result<RegularityReport> {
    let grid = CircleGrid::new(config.n_points)?;
    let cubic = MatrixWeight::build_builtin("peller_counterexample", &json!({}), grid)?;
    let linear = MatrixWeight::from_builtin(
        BuiltinSpec::PellerCounterexample {
            continuation: Continuation::Linear,
            alpha_zero: false,
        },
        grid,
    )?;
    let mut report = run_analysis(&cubic, config)?;
    let ks = counterexample_ladder(config.n_points)?;
    let characteristic = symmetric_ladder(&cubic, &ks)?;
    let characteristic_linear = symmetric_ladder(&linear, &ks)?;
    let slope = loglog_growth_slope(&ks, &characteristic);
    let slope_linear = loglog_growth_slope(&ks, &characteristic_linear);
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let a2_diverging = slope > 0.0
        && slope_linear > 0.0
        && increasing(&characteristic)
        && increasing(&characteristic_linear)
        && report.verdicts.get("a2-interval").map(|v| !v.consistent).unwrap_or(true);
    let log_w_vmo = report.oscillation.as_ref().map(|m| m.vanishing()).unwrap_or(false);
    report.counterexample = Some(CounterexampleSummary {
        arc_measures: ks.iter().map(|&k| 0.5f64.powi(k as i32)).collect(),
        characteristic,
        characteristic_linear,
        loglog_slope: slope,
        loglog_slope_linear: slope_linear,
        a2_diverging,
        log_w_vmo,
        conjunction_holds: a2_diverging && log_w_vmo,
    });
    Ok(report)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn profile_csv(p: &ScaleProfile) -> String {
    let mut s = String::from("scale,value,argmax\n");
    for ((scale, value), at) in p.scales.iter().zip(&p.values).zip(&p.argmax) {
        s.push_str(&format!("{scale:e},{value:e},{}\n", csv_field(at)));
    }
    s
}

pub fn rho_csv(table: &[RhoEstimate]) -> String {
    let mut s = String::from("N,K,value\n");
    for r in table {
        s.push_str(&format!("{},{},{:e}\n", r.n, r.k, r.value));
    }
    s
}

/// Write one CSV per profile, plus `rho.csv`, into `dir`. Returns the
/// files written and any warnings.
pub fn emit_profiles(report: &RegularityReport, dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let io = |p: &Path, e: std::io::Error| Error::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = Vec::new();
    let mut write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        files.push(path);
        Ok(())
    };
    for (name, p) in &report.profiles {
        write(name, profile_csv(p))?;
    }
    if let Some(table) = &report.rho {
        write("rho", rho_csv(table))?;
    }
    let warnings = if files.is_empty() {
        vec!["no profiles to emit".to_string()]
    } else {
        Vec::new()
    };
    Ok((files, warnings))
}
