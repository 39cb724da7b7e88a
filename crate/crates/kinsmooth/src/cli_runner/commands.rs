//! One function per subcommand: config in, artifacts out. Errors are input errors; a failed
//! numerical check comes back as a report with `pass = false`.

use std::f64::consts::PI;

use serde_json::{json, Value};

use super::config::{parse_range, ExperimentConfig, MeasureChoice};
use super::report::{claims, num, Artifacts, Report, Table};
use crate::acceptance::{self, funk_hecke_k0_closed, funk_hecke_mismatch, velocity_poly_data};
use crate::error::{invalid, Error, Result};
use crate::exponent_calculus::{
    alpha_knapp, alpha_star, beta_minus_star, beta_minus_star_sphere, beta_plus_star, i_k_integral, q_from_f64,
    sharp_constant_general, sharp_constant_radial, to_f64, wave_admissible,
};
use crate::radon_duality::{
    attainment_sequence, duality_grid, duality_measure, duality_residuals, random_band_limited_g, sharp_constant_search,
    RadonProfile, DUALITY_TAU_NODES,
};
use crate::scaling_experiments::{
    dyadic_scan, knapp_scan, rho_dyadic_scan, strichartz_probe, ScalingReport, StrichartzVariant,
};
use crate::spectral_grid::{eta, norm3, GridSpec, SpatialField, C64};
use crate::symbol_library::parse_symbol;
use crate::velocity_average::{average_rho_with, RadialModeData, RhoSpectrum, VelocityMeasure};

pub const COMMANDS: [&str; 13] = [
    "thresholds",
    "constants",
    "radon",
    "average",
    "duality-check",
    "knapp-scan",
    "dyadic-scan",
    "rho-scan",
    "funk-hecke",
    "sharp-radial",
    "extremiser",
    "strichartz-probe",
    "selftest",
];

/// Largest n^d x n lattice a command will allocate.
const MAX_POINTS: usize = 1 << 26;

fn grid_n(cfg: &ExperimentConfig, default: usize) -> usize {
    if cfg.grid.n == 0 {
        default
    } else {
        cfg.grid.n
    }
}

fn check_size(d: usize, n: usize) -> Result<()> {
    match n.checked_pow(d as u32 + 1) {
        Some(s) if s <= MAX_POINTS => Ok(()),
        _ => Err(Error::OutOfRange { what: "grid size n^(d+1) (limit 2^26)", value: format!("{n}^{}", d + 1) }),
    }
}

fn report(command: &str, claim: &str, pass: bool, summary: String, params: Value, results: Value) -> Report {
    Report {
        command: command.into(),
        claim: claim.into(),
        pass,
        summary,
        params,
        results,
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: None,
        elapsed_s: None,
    }
}

pub fn run_command(name: &str, cfg: &ExperimentConfig) -> Result<Artifacts> {
    match name {
        "thresholds" => thresholds(cfg),
        "constants" => constants(cfg),
        "radon" => radon(cfg),
        "average" => average(cfg),
        "duality-check" => duality_check(cfg),
        "knapp-scan" => {
            let e = &cfg.exponents;
            scan("knapp-scan", knapp_scan(e.d, e.q, e.r, e.alpha, &cfg.scales.deltas)?)
        }
        "dyadic-scan" => {
            let e = &cfg.exponents;
            scan("dyadic-scan", dyadic_scan(e.d, e.q, e.r, &cfg.scales.ks)?)
        }
        "rho-scan" => scan("rho-scan", rho_dyadic_scan(cfg.exponents.d, cfg.measure.data, &cfg.scales.ks)?),
        "funk-hecke" => funk_hecke(cfg),
        "sharp-radial" => sharp_radial(cfg),
        "extremiser" => extremiser(cfg),
        "strichartz-probe" => strichartz(cfg),
        "selftest" => selftest(cfg, |_| {}),
        other => invalid(format!("unknown command {other:?}")),
    }
}

fn thresholds(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let e = &cfg.exponents;
    let d = e.d as u32;
    let kappa = q_from_f64(e.kappa)?;
    let lattice = parse_range(&cfg.scales.grid_qr).map_err(|m| Error::Config { path: "scales.grid_qr".into(), msg: m })?;
    let mut t = Table::new(&[
        "d",
        "q",
        "r",
        "kappa",
        "alpha_star",
        "alpha_star_branch",
        "alpha_knapp",
        "beta_minus_star",
        "beta_minus_star_branch",
        "beta_plus_star",
        "wave_admissible",
        "complementary",
    ]);
    let mut all_ok = true;
    for &qf in &lattice {
        for &rf in &lattice {
            let (q, r) = (q_from_f64(qf)?, q_from_f64(rf)?);
            let a = alpha_star(d, q, r)?;
            let bm = beta_minus_star(d, q, r, kappa)?;
            let bp = beta_plus_star(d, q, r)?;
            // the sphere thresholds add up to the scaling total at p = 2, s = 0
            let bms = beta_minus_star_sphere(d, q, r)?;
            let total = crate::exponent_calculus::scaling_total(d, q, r, q_from_f64(2.0)?, q_from_f64(0.0)?)?;
            let comp = bp.value + bms.value == total || bp.branch != "scaling" || bms.branch != "scaling";
            all_ok &= comp;
            t.push(vec![
                d.to_string(),
                num(qf),
                num(rf),
                num(e.kappa),
                num(a.f64()),
                a.branch.into(),
                num(to_f64(alpha_knapp(d, q, r)?)),
                num(bm.f64()),
                bm.branch.into(),
                num(bp.f64()),
                wave_admissible(d, q, r)?.to_string(),
                comp.to_string(),
            ]);
        }
    }
    let n = t.rows.len();
    let summary = format!("{n} (q, r) pairs for d = {d}, kappa = {}", e.kappa);
    let params = json!({ "d": d, "kappa": e.kappa, "grid_qr": cfg.scales.grid_qr });
    let rep = report("thresholds", claims::THRESHOLDS, all_ok, summary, params, json!({ "rows": n }));
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn constants(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let d = cfg.exponents.d as u32;
    let bm = cfg.exponents.beta_minus;
    let closed = sharp_constant_general(d, bm)?;
    let search = sharp_constant_search(d, bm)?;
    let rel = (search.value - closed.value).abs() / closed.value;
    let mut pass = rel <= 1e-8;
    let mut note = String::new();
    if d == 2 && bm == 0.25 {
        let r4 = (closed.value - 4.0 * PI).abs() / (4.0 * PI);
        pass &= r4 <= 1e-10;
        note = format!(", 4 pi to {r4:.1e}");
    }
    let summary = format!(
        "C = {} = 4 pi x {} (branch {}, formula {}); 1-D max {} (rel {rel:.1e}{note})",
        closed.value,
        closed.value / (4.0 * PI),
        closed.branch,
        closed.formula_id,
        search.value
    );
    let mut t = Table::new(&["d", "beta_minus", "closed_form", "maximisation", "argmax", "branch", "rel_diff"]);
    t.push(vec![d.to_string(), num(bm), num(closed.value), num(search.value), num(search.argmax), closed.branch.into(), num(rel)]);
    let results = json!({
        "closed_form": closed.value, "branch": closed.branch, "formula_id": closed.formula_id,
        "maximisation": search.value, "argmax": search.argmax, "stationary": search.stationary, "rel_diff": rel,
    });
    let rep = report("constants", claims::SHARP_GENERAL, pass, summary, json!({ "d": d, "beta_minus": bm }), results);
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn radon(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let d = cfg.exponents.d as u32;
    let kappa = cfg.exponents.kappa;
    let p = RadonProfile::new(d, kappa)?;
    let n = cfg.scales.points;
    let mut t = Table::new(&["r", "closed_form", "quadrature", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let r = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
        let (a, b) = (p.closed_form(r), p.quadrature_form(r)?);
        let diff = (a - b).abs();
        worst = worst.max(diff / a.abs().max(1.0));
        t.push(vec![num(r), num(a), num(b), num(diff)]);
    }
    let pass = worst <= 1e-6;
    let summary = format!("{n} points in (-1, 1), worst relative difference {worst:.1e} (tolerance 1e-6)");
    let results = json!({ "constant": p.constant, "worst_rel_diff": worst });
    let rep = report("radon", claims::RADON, pass, summary, json!({ "d": d, "kappa": kappa, "points": n }), results);
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn velocity_measure(cfg: &ExperimentConfig, d: usize, n_vel: usize) -> Result<VelocityMeasure> {
    match cfg.measure.kind {
        MeasureChoice::Sphere => VelocityMeasure::sphere(d, n_vel),
        MeasureChoice::Ball => VelocityMeasure::kappa_ball(d, cfg.exponents.kappa.max(-0.5), (n_vel / 4).max(2), n_vel),
    }
}

fn average(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let d = cfg.exponents.d;
    let n = grid_n(cfg, if d == 2 { 64 } else { 16 });
    check_size(d, n)?;
    let grid = GridSpec::cube(d, n, n as f64 * PI / 4.0)?;
    let n_vel = if cfg.grid.velocity_nodes == 0 { if d == 2 { 32 } else { 12 } } else { cfg.grid.velocity_nodes };
    let measure = velocity_measure(cfg, d, n_vel)?;
    let f = velocity_poly_data(grid, measure, cfg.seed)?;
    let (rho, rep) = average_rho_with(&f, RhoSpectrum::default_realization(&f.measure))?;
    let ns = grid.n_space();
    let (mut outside, mut inside) = (0usize, 0usize);
    let mut t = Table::new(&["it", "tau", "l2_slice", "nonzero_outside_cone"]);
    for it in 0..grid.n_t {
        let tau = grid.tau(it);
        let mut s = 0.0;
        let mut bad = 0;
        for ix in 0..ns {
            let z = rho.samples[it * ns + ix];
            s += z.norm_sqr();
            if z.norm() != 0.0 {
                if tau.abs() > norm3(&grid.xi(ix)) {
                    bad += 1;
                } else {
                    inside += 1;
                }
            }
        }
        outside += bad;
        t.push(vec![it.to_string(), num(tau), num(s.sqrt()), bad.to_string()]);
    }
    let pass = outside == 0;
    let summary = format!(
        "rho f on {n}^{d} x {n}: {inside} nonzero samples in the cone, {outside} outside; {} cone points excluded",
        rep.cone_points_excluded
    );
    let params = json!({ "d": d, "n": n, "measure": cfg.measure.kind, "kappa": cfg.exponents.kappa, "velocity_nodes": n_vel, "seed": cfg.seed });
    let results = json!({ "realization": rep.realization, "inside": inside, "outside": outside,
        "cone_points_excluded": rep.cone_points_excluded, "l2_norm": rho.l2_norm(), "field": "average.ksf" });
    let rep = report("average", claims::CONE_SUPPORT, pass, summary, params, results);
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![("average.ksf".into(), rho.to_bytes())] })
}

fn duality_check(cfg: &ExperimentConfig) -> Result<Artifacts> {
    if cfg.exponents.d != 2 {
        return Err(Error::Config { path: "exponents.d".into(), msg: "the duality check runs in d = 2".into() });
    }
    let n = grid_n(cfg, acceptance::DUALITY_N);
    check_size(2, n)?;
    let grid = duality_grid(n)?;
    let m = parse_symbol(&cfg.symbol)?;
    let measure = duality_measure(cfg.measure.kind.into(), n)?;
    let mut t = Table::new(&["seed", "lhs", "rhs", "residual"]);
    let mut worst: f64 = 0.0;
    for seed in cfg.seed..cfg.seed + cfg.scales.seeds {
        let g = random_band_limited_g(&grid, seed)?;
        let r = duality_residuals(&g, std::slice::from_ref(&m), &measure, DUALITY_TAU_NODES)?.remove(0);
        worst = worst.max(r.residual);
        t.push(vec![seed.to_string(), num(r.lhs), num(r.rhs), num(r.residual)]);
    }
    let pass = worst <= 1e-3;
    let summary = format!("{} seed(s) on {n}^2 x {n}, worst residual {worst:.2e} (tolerance 1e-3)", cfg.scales.seeds);
    let params = json!({ "d": 2, "n": n, "measure": cfg.measure.kind, "symbol": cfg.symbol, "seed": cfg.seed,
        "seeds": cfg.scales.seeds, "velocity_nodes": measure.len(), "tau_nodes": DUALITY_TAU_NODES });
    let rep = report("duality-check", claims::DUALITY, pass, summary, params, json!({ "worst_residual": worst }));
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn scan(command: &str, s: ScalingReport) -> Result<Artifacts> {
    let summary = format!(
        "slope {:.4} vs predicted {:.4} ({:?} fit, tolerance {}): {:?}",
        s.slope, s.predicted_slope, s.fit, s.tolerance, s.verdict
    );
    let csv = s.to_csv()?;
    let table = {
        let mut rdr = csv::Reader::from_reader(csv.as_bytes());
        let header: Vec<String> = rdr.headers().map_err(|e| Error::Invalid(e.to_string()))?.iter().map(String::from).collect();
        let mut t = Table { header, rows: Vec::new() };
        for rec in rdr.records() {
            t.rows.push(rec.map_err(|e| Error::Invalid(e.to_string()))?.iter().map(String::from).collect());
        }
        t
    };
    let results = serde_json::to_value(&s).map_err(|e| Error::Invalid(e.to_string()))?;
    let rep = report(command, &s.claim, s.passed(), summary, s.params.clone(), results);
    Ok(Artifacts { report: rep, table: Some(table), extra: vec![(format!("{command}.dat"), s.to_dat().into_bytes())] })
}

fn fh_mode(d: usize, k: usize) -> Result<RadialModeData> {
    let m = if d == 2 { k as i64 } else { 0 };
    RadialModeData::from_fn(d, k, m, |r| C64::new(eta(r), 0.2 * r * eta(r)))
}

fn funk_hecke(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let d = cfg.exponents.d;
    let n = grid_n(cfg, if d == 2 { 64 } else { 16 });
    check_size(d, n)?;
    let grid = if d == 2 { acceptance::funk_hecke_grid()? } else { GridSpec::cube(3, 16, 8.0 * PI)? };
    let grid = GridSpec::cube(d, n, grid.len_x * n as f64 / grid.n_x as f64)?;
    let n_vel = if cfg.grid.velocity_nodes == 0 { if d == 2 { 32 } else { 17 } } else { cfg.grid.velocity_nodes };
    if cfg.scales.modes.is_empty() {
        return Err(Error::Config { path: "scales.modes".into(), msg: "no modes given".into() });
    }
    let mut t = Table::new(&["k", "m", "rel_err", "tolerance"]);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for &k in &cfg.scales.modes {
        let mode = fh_mode(d, k)?;
        let e = funk_hecke_mismatch(&grid, std::slice::from_ref(&mode), n_vel)?;
        pass &= e <= 1e-4;
        worst = worst.max(e);
        t.push(vec![k.to_string(), mode.m.to_string(), num(e), num(1e-4)]);
    }
    let mut closed = None;
    if cfg.scales.modes.contains(&0) {
        let e0 = funk_hecke_k0_closed(&grid)?;
        pass &= e0 <= 1e-8;
        closed = Some(e0);
        t.push(vec!["0".into(), "closed_form".into(), num(e0), num(1e-8)]);
    }
    let summary = match closed {
        Some(e0) => format!("worst series/slice rel {worst:.1e} (1e-4); k = 0 closed form rel {e0:.1e} (1e-8)"),
        None => format!("worst series/slice rel {worst:.1e} (1e-4)"),
    };
    let params = json!({ "d": d, "n": n, "modes": cfg.scales.modes, "velocity_nodes": n_vel });
    let rep = report("funk-hecke", claims::FUNK_HECKE, pass, summary, params, json!({ "worst": worst, "k0_closed": closed }));
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn sharp_radial(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let e = &cfg.exponents;
    let d = e.d as u32;
    let c0 = sharp_constant_radial(d, e.beta_plus, e.beta_minus)?;
    let mut t = Table::new(&["k", "i_k", "below_i_0"]);
    let i0 = i_k_integral(d, 0, e.beta_plus, e.beta_minus)?;
    let mut pass = true;
    let mut ks = cfg.scales.modes.clone();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        let ik = i_k_integral(d, k as u32, e.beta_plus, e.beta_minus)?;
        let below = k == 0 || ik < i0;
        pass &= below;
        t.push(vec![k.to_string(), num(ik), below.to_string()]);
    }
    let mut note = String::new();
    if d == 2 && e.beta_plus == 0.25 && e.beta_minus == 0.25 {
        let r = (c0.value - 4.0 * PI).abs() / (4.0 * PI);
        pass &= r <= 1e-10;
        note = format!("; 4 pi to {r:.1e}");
    }
    let summary = format!("C0 = {} (branch {}){note}; I_k < I_0 for k >= 1: {pass}", c0.value, c0.branch);
    let params = json!({ "d": d, "beta_plus": e.beta_plus, "beta_minus": e.beta_minus, "modes": ks });
    let results = json!({ "c0": c0.value, "branch": c0.branch, "formula_id": c0.formula_id, "i_0": i0 });
    let rep = report("sharp-radial", claims::SHARP_RADIAL, pass, summary, params, results);
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn extremiser(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let sizes = &cfg.scales.sizes;
    if sizes.is_empty() {
        return Err(Error::Config { path: "scales.sizes".into(), msg: "no sizes given".into() });
    }
    for &n in sizes {
        check_size(2, n)?;
    }
    let seq = attainment_sequence(&eta, sizes)?;
    let mut t = Table::new(&["n", "velocity_nodes", "ratio", "fraction_of_4pi"]);
    for p in &seq {
        t.push(vec![p.n.to_string(), p.velocity_nodes.to_string(), num(p.ratio), num(p.fraction)]);
    }
    let increasing = seq.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let bounded = seq.iter().all(|p| p.fraction <= 1.0 + 1e-12);
    let last = seq.last().map(|p| p.fraction).unwrap_or(0.0);
    let summary = format!("attainment fraction {last:.4} at n = {}; increasing: {increasing}; below 4 pi: {bounded}", sizes[sizes.len() - 1]);
    let rep = report("extremiser", claims::EXTREMISER, increasing && bounded, summary, json!({ "sizes": sizes }), serde_json::to_value(&seq).unwrap_or(Value::Null));
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

fn strichartz(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let e = &cfg.exponents;
    let d = e.d;
    let n = grid_n(cfg, 32);
    check_size(d, n)?;
    let grid = GridSpec::cube(d, n, 32.0)?;
    let variant = cfg.measure.variant;
    let h = SpatialField::from_frequency_fn(grid, |xi| {
        let a = eta(norm3(xi));
        match variant {
            StrichartzVariant::Radial => C64::new(a, 0.0),
            StrichartzVariant::General => a * C64::new(1.0 + 0.3 * xi[0], 0.2 * xi[1]),
        }
    });
    let p = strichartz_probe(d, e.q, e.r, &h, cfg.grid.t_span, variant)?;
    let mut t = Table::new(&["d", "q", "r", "n", "t_span", "time_slices", "ratio", "flag"]);
    t.push(vec![
        d.to_string(),
        num(e.q),
        num(e.r),
        n.to_string(),
        num(cfg.grid.t_span),
        p.time_slices.to_string(),
        num(p.ratio),
        p.flag.clone().unwrap_or_default(),
    ]);
    let summary = match &p.flag {
        Some(f) => format!("ratio {:.6} ({f})", p.ratio),
        None => format!("ratio {:.6}", p.ratio),
    };
    let params = json!({ "d": d, "q": e.q, "r": e.r, "n": n, "t_span": cfg.grid.t_span, "variant": variant });
    let rep = report("strichartz-probe", claims::STRICHARTZ, true, summary, params, serde_json::to_value(&p).unwrap_or(Value::Null));
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}

/// Runs the acceptance criteria; `progress` sees each outcome as it completes.
pub fn selftest(cfg: &ExperimentConfig, progress: impl FnMut(&acceptance::CriterionOutcome)) -> Result<Artifacts> {
    let t0 = std::time::Instant::now();
    let outcomes = acceptance::run_selected(&cfg.scales.criteria, progress);
    let total = t0.elapsed().as_secs_f64();
    let det = cfg.output.deterministic;
    let mut t = Table::new(&["criterion", "name", "pass", "elapsed_s", "budget_s", "detail"]);
    for o in &outcomes {
        let el = if det { String::new() } else { num(o.elapsed_s) };
        t.push(vec![o.id.to_string(), o.name.into(), o.pass.to_string(), el, num(o.budget_s), o.detail.clone()]);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let in_budget = total <= acceptance::SUITE_BUDGET_S;
    let pass = passed == outcomes.len() && in_budget;
    let summary = if det {
        format!("{passed}/{} criteria passed", outcomes.len())
    } else {
        format!("{passed}/{} criteria passed in {total:.1} s (budget {} s)", outcomes.len(), acceptance::SUITE_BUDGET_S)
    };
    let results: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            let mut v = json!({ "criterion": o.id, "name": o.name, "pass": o.pass, "detail": o.detail, "budget_s": o.budget_s });
            if !det {
                v["elapsed_s"] = json!(o.elapsed_s);
            }
            v
        })
        .collect();
    let rep = report("selftest", claims::SELFTEST, pass, summary, json!({ "criteria": cfg.scales.criteria }), Value::Array(results));
    Ok(Artifacts { report: rep, table: Some(t), extra: vec![] })
}
