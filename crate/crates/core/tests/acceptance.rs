//! Acceptance suite: one PASS/FAIL line per criterion, details indented
//! below. Run a subset with `cargo test --test acceptance -- 3 5`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cregular::circle::{Arc, CircleGrid};
use cregular::criteria::{
    a2_interval_characteristic, a2_profile, a2_symmetric_arcs, carleson_density, entropy_profile, ladder_radius,
    max_ladder_level, A2Mode, CarlesonMeasure, ScaleProfile,
};
use cregular::factorization::{spectral_factor, subordination_on_grid};
use cregular::harmonic::{laplacian_identity_residual, DiskPoint, PolarGrid};
use cregular::linalg::{c, CVec};
use cregular::oscillation::{envelope_fit, mean_oscillation_modulus, Symbol};
use cregular::prediction::{littlewood_paley_ratio, rho_table, szego_distance, VectorPolynomial};
use cregular::report::{
    counterexample_ladder, loglog_growth_slope, parse_criteria, run_analysis, AnalysisConfig, LABEL_INCONSISTENT,
};
use cregular::weight::MatrixWeight;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Checks {
    lines: Vec<String>,
    pass: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            pass: true,
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("    {} {what}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, what: String) {
        self.lines.push(format!("         {what}"));
    }

    fn budget(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.check(t < limit, format!("runtime {:.1}s < {}s", t.as_secs_f64(), limit.as_secs()));
    }
}

fn build(name: &str, params: Value, n: usize) -> MatrixWeight {
    MatrixWeight::build_builtin(name, &params, CircleGrid::new(n).unwrap()).unwrap()
}

fn max_dev(values: &[f64], target: f64) -> f64 {
    values.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

fn fmt_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn criterion_1() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let n = 1 << 14;
    let w = build("constant", json!({"value": [[[1, 0], [0, 0]], [[0, 0], [2, 0]]]}), n);
    let inv = w.invert();
    let ladder = max_ladder_level(&w);
    let profiles = [
        a2_profile(&w, &inv, A2Mode::Interval, 12).unwrap(),
        a2_profile(&w, &inv, A2Mode::Poisson, ladder).unwrap(),
        entropy_profile(&w, ladder).unwrap(),
    ];
    for p in &profiles {
        let dev = max_dev(&p.values, 1.0);
        ch.check(dev <= 1e-9, format!("{} max |v - 1| = {dev:.2e} over {} scales (<= 1e-9)", p.name, p.values.len()));
    }
    let polar = PolarGrid::dyadic(ladder, 16, 256).unwrap();
    let (mx, my) = carleson_density(&w, &polar).unwrap();
    for m in [&mx, &my] {
        let p = m.carleson_norm(ladder - 1).unwrap();
        let worst = m.max_mass().max(p.sup());
        ch.check(worst <= 1e-12, format!("{} density max {worst:.2e} (<= 1e-12)", p.name));
    }
    let table = rho_table(&w, &[0, 1, 4, 16], 64).unwrap();
    let worst = table.iter().map(|r| r.value).fold(0.0, f64::max);
    ch.check(worst <= 1e-9, format!("rho_N^(64), N in {{0,1,4,16}}: max {worst:.2e} (<= 1e-9)"));
    ch.budget(start, Duration::from_secs(10));
    ch
}

fn criterion_2() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let n = 1 << 20;
    let w = build("scalar_power", json!({"a": 0.5}), n);
    let inv = w.invert();
    // w_I (w⁻¹)_I = (2/3)ε^{1/2} · 2ε^{−1/2} on [−ε, ε]
    let oracle = (4.0f64 / 3.0).sqrt();
    for k in 6..=10 {
        let eps = 0.5f64.powi(k);
        let half = (eps / (2.0 * PI / n as f64)).round() as usize;
        let v = a2_interval_characteristic(&w, &inv, &Arc::symmetric(half, n).unwrap()).unwrap();
        let rel = (v - oracle).abs() / oracle;
        ch.check(rel <= 0.02, format!("eps = 2^-{k}: {v:.5} vs 2/sqrt3 = {oracle:.5}, rel err {rel:.4} (<= 0.02)"));
    }
    let mut config = AnalysisConfig::for_grid(n).unwrap();
    config.levels = 14;
    config.criteria = parse_criteria("a2-interval").unwrap();
    let report = run_analysis(&w, &config).unwrap();
    let p = &report.profiles["a2-interval"];
    ch.note(format!("a2-interval profile: {}", fmt_values(&p.values)));
    let limit = p.trend.limit_estimate;
    ch.check(
        (limit - 1.0).abs() > config.tolerance,
        format!("profile limit estimate {limit:.4} differs from 1 (by {})", p.trend.method),
    );
    ch.check(
        report.overall.label == LABEL_INCONSISTENT,
        format!("verdict \"{}\"", report.overall.label),
    );
    ch.budget(start, Duration::from_secs(30));
    ch
}

fn criterion_3() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let n = 1 << 16;
    let w = build("peller_counterexample", json!({}), n);

    // (a) oscillation of log W
    let levels = 14;
    let m = mean_oscillation_modulus(&Symbol::Matrix(w.log_samples()), levels).unwrap();
    ch.note(format!("(a) Omega(2^-k), k = 0..={levels}: {}", fmt_values(&m.modulus)));
    let (amp, p) = envelope_fit(&m.modulus);
    let below = m
        .modulus
        .iter()
        .enumerate()
        .all(|(k, v)| *v <= 1.1 * amp * ((k + 1) as f64).powf(p));
    ch.check(p < 0.0, format!("(a) fitted envelope {amp:.4}(k+1)^{p:.4} is decreasing"));
    ch.check(below, "(a) every level below 1.1x the envelope".into());
    ch.check(
        m.last() < 0.5 * m.first(),
        format!("(a) final {:.4} < 0.5 x first {:.4}", m.last(), m.first()),
    );

    // (b) A₂ on symmetric arcs
    let ks = counterexample_ladder(n).unwrap();
    let half: Vec<usize> = ks.iter().map(|&k| n >> (k + 1)).collect();
    let chars = a2_symmetric_arcs(&w, &w.invert(), &half).unwrap();
    ch.note(format!("(b) characteristic at |I| = 2^-k, k = {}..={}: {}", ks[0], ks[ks.len() - 1], fmt_values(&chars)));
    let slope = loglog_growth_slope(&ks, &chars);
    ch.check(
        chars.windows(2).all(|x| x[1] > x[0]),
        "(b) characteristic increases as the arc shrinks".into(),
    );
    ch.check(
        (0.6..=0.9).contains(&slope),
        format!("(b) slope of log(char - 1) vs log log(1/eps) = {slope:.3} in [0.6, 0.9]"),
    );

    // (c) ρ bounded away from 0
    let ns: Vec<usize> = (0..=64).collect();
    let table = rho_table(&w, &ns, 64).unwrap();
    let (worst_n, worst) = table
        .iter()
        .map(|r| (r.n, r.value))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let shown: Vec<f64> = [0usize, 1, 2, 4, 8, 16, 32, 64].iter().map(|&k| table[k].value).collect();
    ch.note(format!("(c) rho_N^(64) at N = 0,1,2,4,8,16,32,64: {}", fmt_values(&shown)));
    ch.check(worst >= 0.3, format!("(c) min over N <= 64 of rho_N^(64) = {worst:.4} at N = {worst_n} (>= 0.3)"));
    ch.budget(start, Duration::from_secs(300));
    ch
}

fn decreasing_to_one(ch: &mut Checks, tag: &str, p: &ScaleProfile) {
    ch.check(
        (p.last() - 1.0).abs() <= 0.05 && p.last() <= p.first() && p.trend.nonincreasing_tail,
        format!("{tag} {}: {:.4} -> {:.4}, tail nonincreasing {} (final within 0.05 of 1)", p.name, p.first(), p.last(), p.trend.nonincreasing_tail),
    );
}

fn criterion_4() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let n = 1 << 14;
    let scalar = build("scalar_exp_trig", json!({"cos": [0.3]}), n);
    let matrix = build(
        "rotation_conjugate",
        json!({
            "blocks": [
                {"name": "scalar_exp_trig", "params": {"cos": [0.3]}},
                {"name": "scalar_exp_trig", "params": {"cos": [-0.3]}}
            ],
            "angle": {"sin": [0.5]}
        }),
        n,
    );
    for (tag, w) in [("d=1", &scalar), ("d=2", &matrix)] {
        let inv = w.invert();
        let ladder = max_ladder_level(w);
        decreasing_to_one(&mut ch, tag, &a2_profile(w, &inv, A2Mode::Interval, 11).unwrap());
        decreasing_to_one(&mut ch, tag, &a2_profile(w, &inv, A2Mode::Poisson, ladder).unwrap());
        decreasing_to_one(&mut ch, tag, &entropy_profile(w, ladder).unwrap());
        let polar = PolarGrid::dyadic(ladder, 16, 256).unwrap();
        let (mx, my) = carleson_density(w, &polar).unwrap();
        for m in [mx, my] {
            let p = m.carleson_norm(ladder - 1).unwrap();
            let ratio = p.first() / p.last();
            ch.check(ratio >= 4.0, format!("{tag} {}: {:.3e} -> {:.3e}, ratio {ratio:.1} (>= 4)", p.name, p.first(), p.last()));
        }
        let ns: Vec<usize> = (0..=64).collect();
        let table = rho_table(w, &ns, 64).unwrap();
        let vals: Vec<f64> = table.iter().map(|r| r.value).collect();
        let monotone = vals.windows(2).all(|x| x[1] <= x[0] + 1e-9);
        ch.check(monotone, format!("{tag} rho_N^(64) nonincreasing in N = 0..=64"));
        ch.check(vals[64] < 0.05, format!("{tag} rho_64^(64) = {:.2e} (< 0.05); rho_0 = {:.4}", vals[64], vals[0]));
    }
    ch.budget(start, Duration::from_secs(300));
    ch
}

fn criterion_5() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let n = 1 << 12;
    let order = 256;
    let w = build("scalar_polynomial_squared", json!({"roots": [[-1.0, 0.0]]}), n);
    let f = spectral_factor(&w, order).unwrap();
    ch.check(
        f.circle_residual <= 1e-6,
        format!("max circle residual |F*F - W| = {:.3e} at M = {order} (<= 1e-6)", f.circle_residual),
    );
    // ∫ log|1 + e^{it}|² dm = 0, so the geometric mean is 1
    let det0 = f.coefficient(0).determinant().norm();
    ch.check(
        (det0 - 1.0).abs() <= 1e-6,
        format!("|det F(0)| = {det0:.8} vs exp(1/2 int log det W) = 1 (within 1e-6)"),
    );
    let polar = PolarGrid::dyadic(8, 16, 256).unwrap();
    let sub = subordination_on_grid(&f, &w, &polar).unwrap();
    ch.check(sub <= 1e-8, format!("subordination violation {sub:.3e} on the polar grid (<= 1e-8)"));
    let e = CVec::from_vec(vec![c(1.0)]);
    let s = szego_distance(&w, &e, 256, Some(&f)).unwrap();
    let pred = s.factor_prediction.unwrap();
    ch.check(
        (s.distance - pred).abs() <= 1e-4,
        format!("Szego distance at K = 256: {:.8} vs |F(0)e| = {pred:.8} (within 1e-4)", s.distance),
    );
    ch.budget(start, Duration::from_secs(60));
    ch
}

fn criterion_6() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let w = build("constant", json!({"value": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}), 1 << 14);
    let polar = PolarGrid::dyadic(10, 128, 64).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = CVec::from_vec(vec![c(s), c(s)]);
    for k in 1..=3 {
        let r = littlewood_paley_ratio(&w, &VectorPolynomial::monomial(k, e.clone()), &polar).unwrap();
        ch.check(
            (r.ratio - 1.0).abs() <= 1e-4,
            format!("f = z^{k} e: ratio {:.7} (within 1e-4 of 1; truncation bound {:.1e})", r.ratio, r.tail_bound),
        );
    }
    let smooth = build(
        "rotation_conjugate",
        json!({
            "blocks": [
                {"name": "scalar_exp_trig", "params": {"cos": [0.4], "sin": [0.1]}},
                {"name": "scalar_exp_trig", "params": {"cos": [-0.2, 0.1]}}
            ],
            "angle": {"mean": 0.3, "cos": [0.5], "sin": [0.2]}
        }),
        1 << 12,
    );
    let point = DiskPoint::new(0.5, 0.3).unwrap();
    let hs = [1e-2, 5e-3, 2.5e-3];
    let res: Vec<f64> = hs
        .iter()
        .map(|&h| laplacian_identity_residual(&smooth, point, h).unwrap())
        .collect();
    let x: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = res.iter().map(|r| r.ln()).collect();
    let slope = cregular::criteria::fit_slope(&x, &y);
    ch.check(
        (slope - 2.0).abs() <= 0.3,
        format!("Laplacian identity residuals {:.3e} {:.3e} {:.3e}: slope {slope:.3} (2.0 +- 0.3)", res[0], res[1], res[2]),
    );
    ch.budget(start, Duration::from_secs(60));
    ch
}

fn criterion_7() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let m = CarlesonMeasure::dyadic_point_masses(1024, 40).unwrap();
    let p = m.carleson_norm(10).unwrap();
    let dev = p.values[3..].iter().map(|v| (v - 2.0).abs() / 2.0).fold(0.0, f64::max);
    ch.check(dev <= 0.1, format!("dyadic masses: Carleson ratio within {:.1e} of 2 at levels 3..=10 (<= 10%)", dev));
    let probes: Vec<DiskPoint> = (1..=20).map(|k| DiskPoint::new(ladder_radius(k), 0.0).unwrap()).collect();
    let vt = m.vanishing_test(&probes);
    let low = vt.iter().copied().fold(f64::INFINITY, f64::min);
    ch.check(low >= 0.15, format!("dyadic masses: vanishing test min {low:.4} over 1 - 2^-k, k = 1..=20 (>= 0.15)"));
    let o = CarlesonMeasure::point_mass_at_origin(1024).unwrap();
    let pts: Vec<DiskPoint> = (0..40)
        .map(|j| DiskPoint::new(1.0 - 0.5f64.powi(j / 2), j as f64 * 0.37).unwrap())
        .collect();
    let err = o
        .vanishing_test(&pts)
        .iter()
        .zip(&pts)
        .map(|(v, p)| (v - (1.0 - p.r * p.r)).abs())
        .fold(0.0, f64::max);
    ch.check(err <= 1e-10, format!("point mass at 0: vanishing test vs 1 - |lambda|^2, max err {err:.1e} (<= 1e-10)"));
    ch.budget(start, Duration::from_secs(10));
    ch
}

fn random_series(rng: &mut ChaCha8Rng) -> Value {
    let terms = rng.gen_range(1..=3);
    let cos: Vec<f64> = (0..terms).map(|_| rng.gen_range(-0.4..0.4)).collect();
    let sin: Vec<f64> = (0..terms).map(|_| rng.gen_range(-0.4..0.4)).collect();
    json!({"mean": rng.gen_range(-0.5..0.5), "cos": cos, "sin": sin})
}

fn random_weight(rng: &mut ChaCha8Rng, n: usize) -> MatrixWeight {
    let d = rng.gen_range(1..=3);
    if d == 1 {
        return build("scalar_exp_trig", random_series(rng), n);
    }
    let blocks: Vec<Value> = (0..d)
        .map(|_| json!({"name": "scalar_exp_trig", "params": random_series(rng)}))
        .collect();
    let angle = random_series(rng);
    build("rotation_conjugate", json!({"blocks": blocks, "angle": angle}), n)
}

fn criterion_8() -> Checks {
    let mut ch = Checks::new();
    let start = Instant::now();
    let n = 1 << 12;
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let mut config = AnalysisConfig::for_grid(n).unwrap();
    config.criteria = parse_criteria("a2-interval,a2-poisson,entropy,carleson,rho").unwrap();
    config.n_list = vec![0, 1, 2, 4, 8, 16, 32, 64];
    config.k = 64;
    let mut disagreements = 0;
    let mut regular = 0;
    for i in 0..20 {
        let w = random_weight(&mut rng, n);
        let r = run_analysis(&w, &config).unwrap();
        let evaluated = r.overall.evaluated.len();
        let ok = r.errors.is_empty() && evaluated == 5 && r.overall.agreement;
        if !ok {
            disagreements += 1;
            ch.note(format!(
                "weight {i} (d={}): consistent {:?}, inconsistent {:?}, errors {:?}",
                w.dim(),
                r.overall.consistent,
                r.overall.inconsistent,
                r.errors
            ));
        }
        if r.overall.inconsistent.is_empty() {
            regular += 1;
        }
    }
    ch.check(
        disagreements == 0,
        format!("20 random exp-trig weights: {disagreements} with disagreeing verdicts; {regular} all regular-trend"),
    );
    ch.budget(start, Duration::from_secs(900));
    ch
}

type Runner = fn() -> Checks;

fn main() -> ExitCode {
    let criteria: [(&str, &str, Runner); 8] = [
        ("1", "trivial calibration, constant diag(1,2)", criterion_1),
        ("2", "scalar closed form |t|^(1/2)", criterion_2),
        ("3", "counterexample at grid 2^16", criterion_3),
        ("4", "regular exemplar e^(0.3 cos t), d = 1 and 2", criterion_4),
        ("5", "factorization identities for 2 + 2cos t", criterion_5),
        ("6", "Green's-formula identities", criterion_6),
        ("7", "vanishing-Carleson oracle pair", criterion_7),
        ("8", "cross-criterion consistency sweep", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, title, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let ch = run();
        let verdict = if ch.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{verdict}] {title} ({:.1}s)", start.elapsed().as_secs_f64());
        for line in &ch.lines {
            println!("{line}");
        }
        if !ch.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
