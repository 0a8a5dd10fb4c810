//! Builtin weight families, their JSON parameter schema and evaluation at a
//! circle parameter t ∈ (−π, π].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{c, diag_real, hermitian_eigen, CMat};

/// Names accepted by [`BuiltinSpec::from_json`].
pub const BUILTIN_NAMES: &[&str] = &[
    "constant",
    "scalar_power",
    "scalar_exp_trig",
    "scalar_polynomial_squared",
    "peller_counterexample",
    "direct_sum",
    "rotation_conjugate",
];

/// Real trigonometric series mean + Σ_k cos_k cos(kt) + sin_k sin(kt).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.mean;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * ((k + 1) as f64 * t).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * ((k + 1) as f64 * t).sin();
        }
        v
    }

    fn to_json(&self) -> Value {
        json!({ "mean": self.mean, "cos": self.cos, "sin": self.sin })
    }

    fn from_json(v: &Value, what: &str) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidParams(format!("{what}: expected an object")))?;
        Ok(Self {
            mean: opt_f64(obj, "mean", what)?.unwrap_or(0.0),
            cos: opt_f64_list(obj, "cos", what)?,
            sin: opt_f64_list(obj, "sin", what)?,
        })
    }
}

/// How the counterexample's δ and α are continued on |t| > 1/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuation {
    /// C¹ cubic Hermite blends.
    Cubic,
    /// Constant / piecewise-linear continuation (C⁰ only).
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinSpec {
    Constant { value: CMat },
    ScalarPower { a: f64 },
    ScalarExpTrig { series: TrigSeries },
    ScalarPolynomialSquared { roots: Vec<Complex64>, scale: f64 },
    PellerCounterexample { continuation: Continuation, alpha_zero: bool },
    DirectSum { blocks: Vec<BuiltinSpec> },
    RotationConjugate { blocks: Vec<BuiltinSpec>, angle: TrigSeries },
}

fn opt_f64(obj: &Map<String, Value>, key: &str, what: &str) -> Result<Option<f64>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::InvalidParams(format!("{what}.{key}: expected a number"))),
    }
}

fn opt_f64_list(obj: &Map<String, Value>, key: &str, what: &str) -> Result<Vec<f64>> {
    match obj.get(key) {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|x| {
                x.as_f64().ok_or_else(|| {
                    Error::InvalidParams(format!("{what}.{key}: expected numbers"))
                })
            })
            .collect(),
        Some(_) => Err(Error::InvalidParams(format!("{what}.{key}: expected an array"))),
    }
}

/// Parse a `[re, im]` pair.
pub fn complex_from_json(v: &Value, what: &str) -> Result<Complex64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(Error::InvalidParams(format!("{what}: expected [re, im] numbers"))),
        },
        _ => Err(Error::InvalidParams(format!("{what}: expected a [re, im] pair"))),
    }
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Parse a d×d array of `[re, im]` pairs.
pub fn matrix_from_json(v: &Value, what: &str) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::InvalidParams(format!("{what}: expected an array of rows")))?;
    let d = rows.len();
    if d == 0 {
        return Err(Error::InvalidParams(format!("{what}: empty matrix")));
    }
    let mut m = CMat::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::InvalidParams(format!("{what}[{i}]: expected a row array")))?;
        if row.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{what}[{i}] has {} entries, expected {d}",
                row.len()
            )));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(z, &format!("{what}[{i}][{j}]"))?;
        }
    }
    Ok(m)
}

pub fn matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

fn blocks_from_json(obj: &Map<String, Value>, what: &str) -> Result<Vec<BuiltinSpec>> {
    let blocks = obj
        .get("blocks")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidParams(format!("{what}.blocks: expected an array")))?;
    if blocks.is_empty() {
        return Err(Error::InvalidParams(format!("{what}.blocks: empty")));
    }
    blocks
        .iter()
        .map(|b| {
            let name = b
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::InvalidParams(format!("{what}.blocks[].name missing")))?;
            let empty = json!({});
            BuiltinSpec::from_json(name, b.get("params").unwrap_or(&empty))
        })
        .collect()
}

impl BuiltinSpec {
    pub fn from_json(name: &str, params: &Value) -> Result<Self> {
        let empty = Map::new();
        let obj = match params {
            Value::Object(m) => m,
            Value::Null => &empty,
            _ => return Err(Error::InvalidParams(format!("{name}: params must be an object"))),
        };
        let spec = match name {
            "constant" => {
                let value = obj
                    .get("value")
                    .ok_or_else(|| Error::InvalidParams("constant.value missing".into()))?;
                BuiltinSpec::Constant {
                    value: matrix_from_json(value, "constant.value")?,
                }
            }
            "scalar_power" => BuiltinSpec::ScalarPower {
                a: opt_f64(obj, "a", name)?
                    .ok_or_else(|| Error::InvalidParams("scalar_power.a missing".into()))?,
            },
            "scalar_exp_trig" => BuiltinSpec::ScalarExpTrig {
                series: TrigSeries::from_json(params, name)?,
            },
            "scalar_polynomial_squared" => {
                let roots = obj
                    .get("roots")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::InvalidParams(format!("{name}.roots: expected an array")))?
                    .iter()
                    .enumerate()
                    .map(|(k, z)| complex_from_json(z, &format!("{name}.roots[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                for (k, z) in roots.iter().enumerate() {
                    if (z.norm() - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidParams(format!(
                            "{name}.roots[{k}] = {z} is not on the unit circle"
                        )));
                    }
                }
                let scale = opt_f64(obj, "scale", name)?.unwrap_or(1.0);
                if scale <= 0.0 {
                    return Err(Error::InvalidParams(format!("{name}.scale must be positive")));
                }
                BuiltinSpec::ScalarPolynomialSquared { roots, scale }
            }
            "peller_counterexample" => {
                let continuation = match obj.get("continuation").and_then(Value::as_str) {
                    None | Some("cubic") => Continuation::Cubic,
                    Some("linear") => Continuation::Linear,
                    Some(other) => {
                        return Err(Error::InvalidParams(format!(
                            "{name}.continuation `{other}`: expected cubic or linear"
                        )))
                    }
                };
                let alpha_zero = obj.get("alpha_zero").and_then(Value::as_bool).unwrap_or(false);
                BuiltinSpec::PellerCounterexample {
                    continuation,
                    alpha_zero,
                }
            }
            "direct_sum" => BuiltinSpec::DirectSum {
                blocks: blocks_from_json(obj, name)?,
            },
            "rotation_conjugate" => {
                let blocks = blocks_from_json(obj, name)?;
                if let Some(b) = blocks.iter().find(|b| b.dim() != 1) {
                    return Err(Error::InvalidParams(format!(
                        "{name}: blocks must be scalar, got d = {}",
                        b.dim()
                    )));
                }
                let angle = match obj.get("angle") {
                    Some(v) => TrigSeries::from_json(v, "rotation_conjugate.angle")?,
                    None => TrigSeries {
                        mean: 0.0,
                        cos: vec![],
                        sin: vec![],
                    },
                };
                BuiltinSpec::RotationConjugate { blocks, angle }
            }
            other => return Err(Error::UnknownBuiltin(other.to_string())),
        };
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinSpec::Constant { .. } => "constant",
            BuiltinSpec::ScalarPower { .. } => "scalar_power",
            BuiltinSpec::ScalarExpTrig { .. } => "scalar_exp_trig",
            BuiltinSpec::ScalarPolynomialSquared { .. } => "scalar_polynomial_squared",
            BuiltinSpec::PellerCounterexample { .. } => "peller_counterexample",
            BuiltinSpec::DirectSum { .. } => "direct_sum",
            BuiltinSpec::RotationConjugate { .. } => "rotation_conjugate",
        }
    }

    pub fn params_json(&self) -> Value {
        let blocks_json = |blocks: &[BuiltinSpec]| -> Value {
            Value::Array(
                blocks
                    .iter()
                    .map(|b| json!({ "name": b.name(), "params": b.params_json() }))
                    .collect(),
            )
        };
        match self {
            BuiltinSpec::Constant { value } => json!({ "value": matrix_to_json(value) }),
            BuiltinSpec::ScalarPower { a } => json!({ "a": a }),
            BuiltinSpec::ScalarExpTrig { series } => series.to_json(),
            BuiltinSpec::ScalarPolynomialSquared { roots, scale } => json!({
                "roots": roots.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>(),
                "scale": scale,
            }),
            BuiltinSpec::PellerCounterexample {
                continuation,
                alpha_zero,
            } => json!({
                "continuation": match continuation {
                    Continuation::Cubic => "cubic",
                    Continuation::Linear => "linear",
                },
                "alpha_zero": alpha_zero,
            }),
            BuiltinSpec::DirectSum { blocks } => json!({ "blocks": blocks_json(blocks) }),
            BuiltinSpec::RotationConjugate { blocks, angle } => {
                json!({ "blocks": blocks_json(blocks), "angle": angle.to_json() })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BuiltinSpec::Constant { value } => value.nrows(),
            BuiltinSpec::PellerCounterexample { .. } => 2,
            BuiltinSpec::DirectSum { blocks } => blocks.iter().map(|b| b.dim()).sum(),
            BuiltinSpec::RotationConjugate { blocks, .. } => blocks.len(),
            _ => 1,
        }
    }

    /// Whether the family has singular points on grid angles, in which case
    /// it is sampled at half-step offset angles.
    pub fn needs_offset(&self) -> bool {
        match self {
            BuiltinSpec::ScalarPower { a } => *a != 0.0,
            BuiltinSpec::ScalarPolynomialSquared { roots, .. } => !roots.is_empty(),
            BuiltinSpec::PellerCounterexample { .. } => true,
            BuiltinSpec::DirectSum { blocks } | BuiltinSpec::RotationConjugate { blocks, .. } => {
                blocks.iter().any(|b| b.needs_offset())
            }
            _ => false,
        }
    }

    /// Integrability caveats known from the formula.
    pub fn warnings(&self) -> Vec<String> {
        match self {
            BuiltinSpec::ScalarPower { a } if *a <= -1.0 => {
                vec![format!("scalar_power a = {a}: weight is not integrable")]
            }
            BuiltinSpec::ScalarPower { a } if *a >= 1.0 => {
                vec![format!("scalar_power a = {a}: inverse weight is not integrable")]
            }
            BuiltinSpec::ScalarPolynomialSquared { roots, .. } if !roots.is_empty() => {
                vec!["polynomial zeros on the circle: inverse weight is not integrable".into()]
            }
            BuiltinSpec::DirectSum { blocks } | BuiltinSpec::RotationConjugate { blocks, .. } => {
                blocks.iter().flat_map(|b| b.warnings()).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Compile into an evaluator t ↦ W(e^{it}) for t ∈ (−π, π].
    pub fn evaluator(&self) -> Box<dyn Fn(f64) -> CMat + Send + Sync> {
        match self.clone() {
            BuiltinSpec::Constant { value } => Box::new(move |_| value.clone()),
            BuiltinSpec::ScalarPower { a } => {
                Box::new(move |t| CMat::from_element(1, 1, c(t.abs().powf(a))))
            }
            BuiltinSpec::ScalarExpTrig { series } => {
                Box::new(move |t| CMat::from_element(1, 1, c(series.eval(t).exp())))
            }
            BuiltinSpec::ScalarPolynomialSquared { roots, scale } => Box::new(move |t| {
                CMat::from_element(1, 1, c(scale * polynomial_modulus_squared(&roots, t)))
            }),
            BuiltinSpec::PellerCounterexample {
                continuation,
                alpha_zero,
            } => {
                let shape = PellerShape { continuation };
                Box::new(move |t| {
                    let delta = shape.delta(t);
                    let alpha = if alpha_zero { 0.0 } else { shape.alpha(t) };
                    peller_matrix(alpha, delta)
                })
            }
            BuiltinSpec::DirectSum { blocks } => {
                let evals: Vec<_> = blocks.iter().map(|b| (b.dim(), b.evaluator())).collect();
                let d = self.dim();
                Box::new(move |t| {
                    let mut m = CMat::zeros(d, d);
                    let mut off = 0;
                    for (bd, f) in &evals {
                        let b = f(t);
                        m.view_mut((off, off), (*bd, *bd)).copy_from(&b);
                        off += bd;
                    }
                    m
                })
            }
            BuiltinSpec::RotationConjugate { blocks, angle } => {
                let evals: Vec<_> = blocks.iter().map(|b| b.evaluator()).collect();
                let d = blocks.len();
                let rotation = Rotation::new(d);
                Box::new(move |t| {
                    let diag: Vec<f64> = evals.iter().map(|f| f(t)[(0, 0)].re).collect();
                    let u = rotation.at(angle.eval(t));
                    let w = u.adjoint() * diag_real(&diag) * &u;
                    crate::linalg::symmetrize(&w)
                })
            }
        }
    }
}

/// Π_k |e^{it} − ζ_k|².
pub fn polynomial_modulus_squared(roots: &[Complex64], t: f64) -> f64 {
    let z = Complex64::from_polar(1.0, t);
    roots.iter().map(|r| (z - r).norm_sqr()).product()
}

/// U(θ) = exp(θA) with A the real skew generator Σ_k (E_{k+1,k} − E_{k,k+1}).
/// For d = 2 this is the plane rotation [[cos, −sin], [sin, cos]].
struct Rotation {
    values: Vec<f64>,
    vectors: CMat,
}

impl Rotation {
    fn new(d: usize) -> Self {
        // H = iA is Hermitian; exp(θA) = exp(−iθH).
        let mut h = CMat::zeros(d, d);
        for k in 0..d.saturating_sub(1) {
            h[(k + 1, k)] = Complex64::new(0.0, 1.0);
            h[(k, k + 1)] = Complex64::new(0.0, -1.0);
        }
        let (values, vectors) = hermitian_eigen(&h);
        Self { values, vectors }
    }

    fn at(&self, theta: f64) -> CMat {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &mu) in self.values.iter().enumerate() {
            let f = Complex64::from_polar(1.0, -theta * mu);
            for r in 0..d {
                scaled[(r, k)] *= f;
            }
        }
        let u = scaled * self.vectors.adjoint();
        // exp of a real skew matrix is real orthogonal
        u.map(|z| c(z.re))
    }
}

/// U* diag(1, δ) U with U the rotation by α.
pub fn peller_matrix(alpha: f64, delta: f64) -> CMat {
    let (s, co) = alpha.sin_cos();
    CMat::from_row_slice(
        2,
        2,
        &[
            c(co * co + delta * s * s),
            c((delta - 1.0) * s * co),
            c((delta - 1.0) * s * co),
            c(s * s + delta * co * co),
        ],
    )
}

fn hermite(s: f64, v0: f64, m0: f64, v1: f64, m1: f64, len: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * v0
        + (s3 - 2.0 * s2 + s) * len * m0
        + (-2.0 * s3 + 3.0 * s2) * v1
        + (s3 - s2) * len * m1
}

/// δ and α of the counterexample, including the continuation away from 0.
#[derive(Debug, Clone, Copy)]
pub struct PellerShape {
    pub continuation: Continuation,
}

const INNER: f64 = 0.25;
const BLEND_END: f64 = 0.5;
const ALPHA_FADE_START: f64 = 2.0;

impl PellerShape {
    /// δ(1/4) = 1/log 4.
    pub fn delta_edge() -> f64 {
        1.0 / 4.0f64.ln()
    }

    fn delta_edge_slope() -> f64 {
        // d/dt [1/log(1/t)] = 1 / (t log²(1/t)) at t = 1/4
        1.0 / (INNER * 4.0f64.ln().powi(2))
    }

    pub fn delta(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= INNER {
            if a == 0.0 {
                return 0.0;
            }
            return 1.0 / (1.0 / a).ln();
        }
        let edge = Self::delta_edge();
        match self.continuation {
            Continuation::Cubic if a <= BLEND_END => hermite(
                (a - INNER) / (BLEND_END - INNER),
                edge,
                Self::delta_edge_slope(),
                edge,
                0.0,
                BLEND_END - INNER,
            ),
            _ => edge,
        }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        let a = t.abs();
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        if a <= INNER {
            return sign * self.delta(t).powf(0.25);
        }
        let edge = Self::delta_edge().powf(0.25);
        let mag = match self.continuation {
            Continuation::Cubic => {
                if a <= BLEND_END {
                    let slope = 0.25 * Self::delta_edge().powf(-0.75) * Self::delta_edge_slope();
                    hermite(
                        (a - INNER) / (BLEND_END - INNER),
                        edge,
                        slope,
                        edge,
                        0.0,
                        BLEND_END - INNER,
                    )
                } else if a <= ALPHA_FADE_START {
                    edge
                } else {
                    hermite(
                        (a - ALPHA_FADE_START) / (PI - ALPHA_FADE_START),
                        edge,
                        0.0,
                        0.0,
                        0.0,
                        PI - ALPHA_FADE_START,
                    )
                }
            }
            Continuation::Linear => {
                if a <= ALPHA_FADE_START {
                    edge
                } else {
                    edge * (PI - a) / (PI - ALPHA_FADE_START)
                }
            }
        };
        sign * mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    #[test]
    fn delta_at_quarter() {
        let s = PellerShape {
            continuation: Continuation::Cubic,
        };
        let d = s.delta(0.25);
        assert!((d - 1.0 / 4.0f64.ln()).abs() < 1e-15);
        assert!((d - 0.7213).abs() < 1e-4);
        // continuous at both blend ends and bounded away from 0
        assert!((s.delta(0.25 + 1e-9) - d).abs() < 1e-8);
        assert!((s.delta(0.5) - d).abs() < 1e-15);
        for k in 0..1000 {
            let t = 0.25 + (PI - 0.25) * k as f64 / 999.0;
            let v = s.delta(t);
            assert!(v > 0.5 && v < 1.0, "delta({t}) = {v}");
        }
    }

    #[test]
    fn alpha_is_odd_and_vanishes_at_pi() {
        for cont in [Continuation::Cubic, Continuation::Linear] {
            let s = PellerShape { continuation: cont };
            for &t in &[0.01, 0.2, 0.3, 1.0, 2.5] {
                assert!((s.alpha(t) + s.alpha(-t)).abs() < 1e-15);
            }
            assert!(s.alpha(PI).abs() < 1e-12);
            let edge = PellerShape::delta_edge().powf(0.25);
            assert!((s.alpha(0.25) - edge).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_zero_gives_diagonal() {
        let spec = BuiltinSpec::from_json("peller_counterexample", &json!({"alpha_zero": true}))
            .unwrap();
        let f = spec.evaluator();
        let w = f(0.1);
        let s = PellerShape {
            continuation: Continuation::Cubic,
        };
        let expect = diag_real(&[1.0, s.delta(0.1)]);
        assert!(frobenius(&(w - expect)) < 1e-15);
    }

    #[test]
    fn rotation_two_by_two_is_plane_rotation() {
        let r = Rotation::new(2);
        let u = r.at(0.3);
        let expect = CMat::from_row_slice(
            2,
            2,
            &[c(0.3f64.cos()), c(-0.3f64.sin()), c(0.3f64.sin()), c(0.3f64.cos())],
        );
        assert!(frobenius(&(u - expect)) < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            BuiltinSpec::from_json("nope", &json!({})),
            Err(Error::UnknownBuiltin(_))
        ));
        assert!(matches!(
            BuiltinSpec::from_json("scalar_polynomial_squared", &json!({"roots": [[0.5, 0.0]]})),
            Err(Error::InvalidParams(_))
        ));
        assert!(BuiltinSpec::from_json("scalar_power", &json!({})).is_err());
    }

    #[test]
    fn params_round_trip() {
        let p = json!({
            "blocks": [
                {"name": "scalar_exp_trig", "params": {"mean": 0.0, "cos": [0.3], "sin": []}},
                {"name": "scalar_power", "params": {"a": 0.5}}
            ],
            "angle": {"mean": 0.1, "cos": [0.2], "sin": [0.05]}
        });
        let spec = BuiltinSpec::from_json("rotation_conjugate", &p).unwrap();
        let again = BuiltinSpec::from_json(spec.name(), &spec.params_json()).unwrap();
        assert_eq!(spec, again);
        assert!(spec.needs_offset());
        assert_eq!(spec.dim(), 2);
    }
}
