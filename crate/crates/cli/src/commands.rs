use std::io::Write;
use std::path::PathBuf;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cy_core::chungyao::{
    deboor_remainder, homogeneous_representation, interpolate, newton_identity, techobserv_all,
    RemainderDecomposition, RemainderOptions,
};
use cy_core::convergence::{
    affine_criterion, bound_evaluator, check_conditions, convergence_experiment, tends_to_zero, BoundReport,
    LatticeSequence,
};
use cy_core::geometry::solve_vertex;
use cy_core::poly::homogeneous_monomials;
use cy_core::{linalg, ChungYaoLattice, Function, HyperplaneFamily, MultiPoly, SmoothFunction, SymmetricForm};

use crate::config::Config;
use crate::output::{self, flag, sci, verdict, LatticeDump, ResultRow};
use crate::{CliError, Common};

const DEFAULT_TOL: f64 = 1e-9;
const PK_SAMPLES: usize = 1000;

fn first_s(cfg: &Config, common: &Common, s: Option<u64>) -> Result<u64, CliError> {
    match s {
        Some(0) => Err(CliError::Validation("--s must be positive".into())),
        Some(s) => Ok(s),
        None => cfg
            .s_values(common.s_min, common.s_max)?
            .first()
            .copied()
            .ok_or_else(|| CliError::Validation("empty s range".into())),
    }
}

fn family_at(cfg: &Config, common: &Common, s: u64) -> Result<HyperplaneFamily, CliError> {
    Ok(cfg.sequence(common.seed)?.family(s)?)
}

pub fn lattice(cfg: &Config, common: &Common, s: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let s = first_s(cfg, common, s)?;
    let lat = family_at(cfg, common, s)?.lattice()?;
    let dump = LatticeDump::new(&lat, s)?;
    dump.print(&mut std::io::stdout().lock())?;
    if let Some(path) = out.or_else(|| cfg.output.clone()) {
        output::write_file(&path, serde_json::to_string_pretty(&dump)?.as_bytes())?;
    }
    Ok(())
}

fn ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..radius)).collect();
        if linalg::norm(&x) <= radius {
            return x;
        }
    }
}

fn random_form(rng: &mut ChaCha8Rng, dim: usize, order: usize) -> Result<SymmetricForm, CliError> {
    let terms: Vec<(Vec<u32>, f64)> = homogeneous_monomials(dim, order)
        .into_iter()
        .map(|a| (a.exponents().to_vec(), rng.random_range(-1.0..1.0)))
        .collect();
    Ok(SymmetricForm::new(MultiPoly::from_terms(dim, &terms)?, order)?)
}

struct Check {
    name: &'static str,
    value: f64,
    pass: bool,
    detail: String,
}

fn relative_residual(dec: &RemainderDecomposition) -> f64 {
    let scale = dec
        .terms
        .iter()
        .map(|t| t.product().abs())
        .fold(dec.value.abs().max(dec.interpolant.abs()).max(1.0), f64::max);
    dec.residual() / scale
}

fn interpolation_match(lat: &ChungYaoLattice, f: &Function, fault: bool, tol: f64) -> Result<Check, CliError> {
    let mut lat = lat.clone();
    if fault {
        let shift = 1e-3 * (1.0 + lat.norm());
        lat.perturb_vertex(0, &vec![shift; lat.dim()]);
    }
    let li = interpolate(&lat, f)?;
    let fam = lat.family();
    let mut worst: f64 = 0.0;
    for h in lat.subsets() {
        let planes: Vec<_> = h.iter().map(|&i| fam.plane(i)).collect();
        let theta = solve_vertex(&planes)?;
        let want = f.eval(&theta);
        worst = worst.max((li.eval(&theta) - want).abs() / want.abs().max(1.0));
    }
    Ok(Check {
        name: "interpolation-match",
        value: worst,
        pass: worst <= tol,
        detail: format!("max |L(theta) - f(theta)| over {} vertices", lat.len()),
    })
}

pub fn verify(
    cfg: &Config,
    common: &Common,
    s: Option<u64>,
    fault_inject: bool,
    sign_flip: bool,
) -> Result<(), CliError> {
    let tol = common.tol.or(cfg.tolerances.identity).unwrap_or(DEFAULT_TOL);
    let s = first_s(cfg, common, s)?;
    let original = family_at(cfg, common, s)?;
    let fam = if sign_flip { original.with_sign_flipped(0) } else { original.clone() };
    let lat = fam.lattice()?;
    let f = cfg.function()?;
    let (n, d) = (fam.dim(), fam.len());
    let m = d - n + 1;
    let mut opts = RemainderOptions::for_order(m);
    if let Some(e) = common.quad_degree.or(cfg.tolerances.quad_exactness) {
        opts.exactness = e;
    }
    opts.flip_direction_sign = sign_flip;
    let radius = cfg.grid.radius;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.or(cfg.seed).unwrap_or(0));
    let mut checks = Vec::new();

    checks.push(interpolation_match(&lat, &f, fault_inject, tol)?);

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = ball(&mut rng, n, radius);
        for h in lat.subsets() {
            worst = worst.max(lat.deboor_identity_residual(h, &x)?);
        }
    }
    checks.push(Check {
        name: "deboor-identity",
        value: worst,
        pass: worst <= tol,
        detail: "sum_i l_i(x)/l_i(theta) residual, 100 points".into(),
    });

    let reference = if sign_flip { Some(original.lattice()?) } else { None };
    let mut worst: f64 = 0.0;
    let mut flip_gap: f64 = 0.0;
    for _ in 0..20 {
        let x = ball(&mut rng, n, radius);
        let dec = deboor_remainder(&lat, &f, &x, opts)?;
        worst = worst.max(relative_residual(&dec));
        if let Some(base) = &reference {
            let plain = deboor_remainder(base, &f, &x, RemainderOptions { flip_direction_sign: false, ..opts })?;
            for (a, b) in dec.terms.iter().zip(&plain.terms) {
                let scale = a.product().abs().max(b.product().abs()).max(1.0);
                flip_gap = flip_gap.max((a.product() - b.product()).abs() / scale);
            }
        }
    }
    let mut detail = format!("relative to term size, 20 points, quadrature exactness {}", opts.exactness);
    if sign_flip {
        detail.push_str(&format!("; sign-flip product change {flip_gap:.3e}"));
    }
    checks.push(Check {
        name: "remainder",
        value: worst.max(flip_gap),
        pass: worst <= tol && flip_gap <= tol,
        detail,
    });

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let phi = random_form(&mut rng, n, m)?;
        for _ in 0..5 {
            let v = ball(&mut rng, n, 1.0);
            let want = phi.eval_diagonal(&v);
            let got = homogeneous_representation(&fam, &phi, &v)?;
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    checks.push(Check {
        name: "homogeneous-representation",
        value: worst,
        pass: worst <= tol,
        detail: "20 forms x 5 vectors".into(),
    });

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let phi = random_form(&mut rng, n, m)?;
        for _ in 0..5 {
            let x = ball(&mut rng, n, radius);
            worst = worst.max(newton_identity(&fam, &phi, &x)?.relative_residual());
        }
    }
    checks.push(Check {
        name: "newton-identity",
        value: worst,
        pass: worst <= tol,
        detail: "staged residual relative to term size, 20 forms x 5 points".into(),
    });

    if n >= 2 && d > n {
        let reports = techobserv_all(&fam)?;
        let pairs: usize = reports.iter().map(|r| r.checked.len()).sum();
        let worst = reports.iter().map(|r| r.max_abs()).fold(0.0, f64::max);
        checks.push(Check {
            name: "technical-lemma",
            value: worst,
            pass: worst <= tol,
            detail: if pairs == 0 {
                "vacuous: no non-containing pairs".into()
            } else {
                format!("{pairs} non-containing pairs")
            },
        });
    } else {
        checks.push(Check {
            name: "technical-lemma",
            value: 0.0,
            pass: true,
            detail: "skipped: needs N >= 2 and d > N".into(),
        });
    }

    println!(
        "verify at s = {s}: N = {n}, d = {d}, tolerance {tol:e}{}{}",
        if sign_flip { ", sign-flip" } else { "" },
        if fault_inject { ", fault-inject" } else { "" }
    );
    for c in &checks {
        println!("{:<28} {}  {:.3e}  {}", c.name, verdict(c.pass), c.value, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    println!("{} of {} checks passed", checks.len() - failed.len(), checks.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}

fn bound_for(seq: &LatticeSequence, f: &Function, cfg: &Config, s: u64) -> cy_core::Result<BoundReport> {
    let lat = seq.family(s)?.lattice()?;
    bound_evaluator(&lat, f, &cfg.grid(), PK_SAMPLES, s)
}

/// Fails with the first family error when no `s` yields a lattice.
fn require_some_family(seq: &LatticeSequence, s_values: &[u64]) -> Result<(), CliError> {
    let mut first = None;
    for &s in s_values {
        match seq.family(s).and_then(|f| f.lattice()) {
            Ok(_) => return Ok(()),
            Err(e) => {
                first.get_or_insert(e);
            }
        }
    }
    Err(first.map(CliError::Core).unwrap_or_else(|| CliError::Validation("empty s range".into())))
}

pub fn converge(cfg: &Config, common: &Common, out: Option<PathBuf>) -> Result<(), CliError> {
    let seq = cfg.sequence(common.seed)?;
    let f = cfg.function()?;
    let s_values = cfg.s_values(common.s_min, common.s_max)?;
    let grid = cfg.grid();
    let th = cfg.thresholds(common.c2_min);
    require_some_family(&seq, &s_values)?;
    let rep = convergence_experiment(&seq, &f, &s_values, &grid)?;
    let cond = check_conditions(&seq, &s_values, &th);
    let bounds: Vec<Option<BoundReport>> = rep
        .rows
        .par_iter()
        .map(|r| bound_for(&seq, &f, cfg, r.s).ok())
        .collect();

    let mut rows = Vec::new();
    for &s in &s_values {
        let t = 1.0 / s as f64;
        match rep.rows.iter().position(|r| r.s == s) {
            Some(i) => {
                let r = &rep.rows[i];
                let b = bounds[i].as_ref();
                let hyp = b.map(|b| b.hypotheses_hold);
                rows.push(ResultRow {
                    s,
                    t: sci(t),
                    lattice_norm: sci(r.stats.lattice_norm),
                    min_volume: sci(r.stats.min_volume),
                    max_offset: sci(r.stats.max_offset),
                    sup_error: sci(r.sup_error),
                    coeff_error: sci(r.coeff_error),
                    bound: sci(b.map_or(f64::NAN, |b| b.total_bound)),
                    c2: flag(Some(r.stats.min_volume >= th.c2_min_volume)),
                    offset_le_norm: flag(Some(r.stats.max_offset <= r.stats.lattice_norm * (1.0 + 1e-12))),
                    hypotheses: flag(hyp),
                    bound_holds: flag(b.filter(|b| b.hypotheses_hold).map(|b| b.error_bound_holds())),
                });
            }
            None => rows.push(ResultRow {
                s,
                t: sci(t),
                lattice_norm: sci(f64::NAN),
                min_volume: sci(f64::NAN),
                max_offset: sci(f64::NAN),
                sup_error: sci(f64::NAN),
                coeff_error: sci(f64::NAN),
                bound: sci(f64::NAN),
                c2: flag(Some(false)),
                offset_le_norm: flag(None),
                hypotheses: flag(None),
                bound_holds: flag(None),
            }),
        }
    }

    let mut csv_bytes = Vec::new();
    output::write_csv(&rows, &mut csv_bytes)?;
    let target = out.or_else(|| cfg.output.clone());
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut summary: Box<dyn Write> = match &target {
        Some(path) => {
            output::write_file(path, &csv_bytes)?;
            Box::new(stdout.lock())
        }
        None => {
            stdout.lock().write_all(&csv_bytes)?;
            Box::new(stderr.lock())
        }
    };

    let ss: Vec<u64> = rep.rows.iter().map(|r| r.s).collect();
    let coeff_steps: Vec<f64> = rep
        .rows
        .windows(2)
        .map(|w| w[1].interpolant.max_coeff_distance(&w[0].interpolant))
        .collect();
    let coefficients_converge = coeff_steps.len() >= 2 && tends_to_zero(&ss[1..], &coeff_steps);
    let coeff_errors: Vec<f64> = rep.rows.iter().map(|r| r.coeff_error).collect();
    let to_taylor = tends_to_zero(&ss, &coeff_errors);
    let sup: Vec<f64> = rep.rows.iter().map(|r| r.sup_error).collect();
    let diverges = sup.len() >= 2 && sup.windows(2).all(|w| w[1] > w[0]) && sup[sup.len() - 1] >= 10.0 * sup[0];
    let checked: Vec<bool> = bounds
        .iter()
        .flatten()
        .filter(|b| b.hypotheses_hold)
        .map(|b| b.error_bound_holds())
        .collect();
    let bounds_hold = !checked.is_empty() && checked.iter().all(|&b| b);
    let slope = rep.coeff_slope;
    let limit = rep.rows.last().map(|r| r.interpolant.coefficients().to_vec());

    let yes = |b: bool| if b { "yes" } else { "no" };
    writeln!(summary, "s values: {:?}", s_values)?;
    for (s, e) in &rep.failures {
        writeln!(summary, "s = {s}: {e}")?;
    }
    match slope {
        Some(v) => writeln!(summary, "coefficient error slope vs lattice norm: {v:.4}")?,
        None => writeln!(summary, "coefficient error slope vs lattice norm: undefined")?,
    }
    if let Some(v) = rep.sup_slope {
        writeln!(summary, "sup error slope vs lattice norm: {v:.4}")?;
    }
    writeln!(summary, "C1 lattice norm tends to 0: {}", yes(cond.c1))?;
    writeln!(summary, "C2 min volume >= {}: {}", th.c2_min_volume, yes(cond.c2))?;
    writeln!(summary, "C3 offsets tend to 0: {}", yes(cond.c3))?;
    if cfg.is_affine() {
        let a = affine_criterion(&seq, &ss, &th)?;
        writeln!(
            summary,
            "affine criterion: lattice side {}, transform side {}, sides agree {}",
            yes(a.lattice_side),
            yes(a.transform_side),
            yes(a.agree())
        )?;
    }
    writeln!(summary, "coefficients converge: {}", yes(coefficients_converge))?;
    writeln!(summary, "limit is the Taylor polynomial: {}", yes(to_taylor))?;
    writeln!(summary, "sup error diverges: {}", yes(diverges))?;
    writeln!(
        summary,
        "error bound held at {}/{} s values where its hypotheses hold",
        checked.iter().filter(|&&b| b).count(),
        checked.len()
    )?;
    if let Some(c) = &limit {
        writeln!(summary, "interpolant coefficients at s = {}: {:?}", ss[ss.len() - 1], c)?;
    }
    writeln!(summary, "Taylor coefficients: {:?}", rep.taylor.coefficients())?;

    let e = &cfg.expect;
    let mut misses = Vec::new();
    let mut want = |name: &str, expected: Option<bool>, got: bool| {
        if expected.is_some_and(|x| x != got) {
            misses.push(format!("{name}: expected {}, got {got}", expected.unwrap()));
        }
    };
    want("c1", e.c1, cond.c1);
    want("c2", e.c2, cond.c2);
    want("c3", e.c3, cond.c3);
    want("coefficients_converge", e.coefficients_converge, coefficients_converge);
    want("converges_to_taylor", e.converges_to_taylor, to_taylor);
    want("error_diverges", e.error_diverges, diverges);
    want("bounds_hold", e.bounds_hold, bounds_hold);
    if e.slope_min.is_some() || e.slope_max.is_some() {
        let lo = e.slope_min.unwrap_or(f64::NEG_INFINITY);
        let hi = e.slope_max.unwrap_or(f64::INFINITY);
        if !slope.is_some_and(|v| (lo..=hi).contains(&v)) {
            misses.push(format!("slope {slope:?} outside [{lo}, {hi}]"));
        }
    }
    if let Some(expected) = &e.limit {
        let tol = e.limit_tol.unwrap_or(1e-6);
        let close = limit.as_ref().is_some_and(|c| {
            c.len() == expected.len() && c.iter().zip(expected).all(|(a, b)| (a - b).abs() <= tol)
        });
        if !close {
            misses.push(format!("limit {limit:?} differs from {expected:?} by more than {tol}"));
        }
    }
    if !misses.is_empty() {
        for m in &misses {
            writeln!(summary, "expectation not met: {m}")?;
        }
        return Err(CliError::Failed(format!("{} expectation(s) not met", misses.len())));
    }
    if !rep.failures.is_empty() {
        let (s, err) = rep.failures[0].clone();
        writeln!(summary, "family at s = {s} is unusable")?;
        return Err(CliError::Core(err));
    }
    Ok(())
}

pub fn rate(cfg: &Config, common: &Common) -> Result<(), CliError> {
    let seq = cfg.sequence(common.seed)?;
    let f = cfg.function()?;
    let s_values = cfg.s_values(common.s_min, common.s_max)?;
    require_some_family(&seq, &s_values)?;
    let reports: Vec<(u64, cy_core::Result<BoundReport>)> = s_values
        .par_iter()
        .map(|&s| (s, bound_for(&seq, &f, cfg, s)))
        .collect();
    println!(
        "{:>6} {:>12} {:>12} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6}",
        "s", "norm", "delta", "hyp", "pk_bound", "pk_sampled", "s1", "s2", "bound", "error", "holds"
    );
    let mut failures = Vec::new();
    for (s, r) in &reports {
        match r {
            Ok(b) => {
                let holds = b.hypotheses_hold && b.error_bound_holds() && b.pk_bound_holds();
                if b.hypotheses_hold && !holds {
                    failures.push(*s);
                }
                println!(
                    "{:>6} {:>12.4e} {:>12.4e} {:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
                    s,
                    b.lattice_norm,
                    b.delta,
                    yes_no(b.hypotheses_hold),
                    b.pk_bound,
                    b.pk_measured,
                    b.s1_bound,
                    b.s2_bound,
                    b.total_bound,
                    b.measured_error,
                    if b.hypotheses_hold { verdict(holds) } else { "n/a" }
                );
                if !b.norms_rigorous {
                    println!("{:>6} derivative norms were sampled, not bounded in closed form", "");
                }
            }
            Err(e) => println!("{s:>6} {e}"),
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "bound violated at s = {}",
            failures.iter().map(|s| s.to_string()).join(", ")
        )))
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
