//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use cy_core::chungyao::{deboor_remainder, interpolate, newton_identity, techobserv_all, PkPolynomial, RemainderOptions};
use cy_core::convergence::{
    affine_triangle_sequence, bound_evaluator, c1_c3_equivalence_probe, check_conditions,
    convergence_experiment, default_s_values, degenerate_triangle_points, lattice_stats,
    ConditionThresholds, GridSpec, LatticeSequence,
};
use cy_core::divdiff::{default_exactness, divided_difference, PointTuple};
use cy_core::geometry::{random_family, RandomFamilyOptions};
use cy_core::linalg;
use cy_core::poly::{homogeneous_basis, homogeneous_monomials, monomials, taylor, vandermonde};
use cy_core::{AffineMap, Function, HyperplaneFamily, MultiPoly, SmoothFunction, SymmetricForm};

const FAMILIES: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let len = linalg::norm(&g);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    g.iter().map(|v| v * r / len).collect()
}

/// Random family whose N-subset volumes are all at least 0.1.
fn family(rng: &mut ChaCha8Rng, n: usize, d: usize) -> HyperplaneFamily {
    let opts = RandomFamilyOptions {
        min_volume: 0.1,
        max_retries: 100_000,
        ..RandomFamilyOptions::default()
    };
    random_family(n, d, rng, &opts).expect("random family")
}

/// `(N, d)` pairs of the sweep.
fn sweep(max_extra: usize) -> Vec<(usize, usize)> {
    [2usize, 3]
        .into_iter()
        .flat_map(|n| (n..=n + max_extra).map(move |d| (n, d)))
        .collect()
}

fn random_poly(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> MultiPoly {
    let terms: Vec<(Vec<u32>, f64)> = monomials(dim, degree)
        .into_iter()
        .map(|a| (a.exponents().to_vec(), rng.random_range(-1.0..1.0)))
        .collect();
    MultiPoly::from_terms(dim, &terms).unwrap()
}

fn random_form(rng: &mut ChaCha8Rng, dim: usize, order: usize) -> SymmetricForm {
    let terms: Vec<(Vec<u32>, f64)> = homogeneous_monomials(dim, order)
        .into_iter()
        .map(|a| (a.exponents().to_vec(), rng.random_range(-1.0..1.0)))
        .collect();
    SymmetricForm::new(MultiPoly::from_terms(dim, &terms).unwrap(), order).unwrap()
}

fn projector_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for (n, d) in sweep(4) {
        for _ in 0..FAMILIES {
            let lat = family(&mut rng, n, d).lattice().unwrap();
            let p = random_poly(&mut rng, n, d - n);
            let li = interpolate(&lat, &Function::Polynomial(p.clone())).unwrap();
            worst = worst.max(li.poly().max_coeff_distance(&p) / p.max_abs_coeff());
        }
    }
    outcome(worst <= 1e-9, format!("max relative coefficient error {worst:.3e}"))
}

fn deboor_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for (n, d) in sweep(4) {
        for _ in 0..FAMILIES {
            let lat = family(&mut rng, n, d).lattice().unwrap();
            for _ in 0..100 {
                let x = ball(&mut rng, n, 1.0);
                for h in lat.subsets() {
                    worst = worst.max(lat.deboor_identity_residual(h, &x).unwrap());
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.3e}"))
}

/// `fam` scaled about the origin so that its lattice norm is `radius`.
fn scaled_into_ball(fam: &HyperplaneFamily, radius: f64) -> HyperplaneFamily {
    let n = fam.dim();
    let k = radius / fam.lattice().unwrap().norm();
    let lin = (0..n)
        .map(|i| (0..n).map(|j| if i == j { k } else { 0.0 }).collect())
        .collect();
    fam.transformed(&AffineMap::new(lin, vec![0.0; n]).unwrap()).unwrap()
}

fn remainder_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exact: f64 = 0.0;
    let mut smooth: f64 = 0.0;
    let mut unscaled_relative: f64 = 0.0;
    for (n, d) in sweep(4) {
        for _ in 0..FAMILIES {
            let fam = family(&mut rng, n, d);
            let lat = fam.lattice().unwrap();
            let near = scaled_into_ball(&fam, 0.5).lattice().unwrap();
            let m = d - n + 1;
            let opts = RemainderOptions::for_order(m);
            let alphas = homogeneous_monomials(n, m);
            let alpha = &alphas[rng.random_range(0..alphas.len())];
            let mono = Function::monomial(alpha.exponents().to_vec());
            let exp = Function::exp_affine(vec![1.0; n], 0.0);
            for _ in 0..20 {
                let x = ball(&mut rng, n, 0.5);
                exact = exact.max(deboor_remainder(&lat, &mono, &x, opts).unwrap().residual());
                smooth = smooth.max(deboor_remainder(&near, &exp, &x, opts).unwrap().residual());
                let far = deboor_remainder(&lat, &exp, &x, opts).unwrap();
                let scale = far.terms.iter().map(|t| t.product().abs()).fold(far.interpolant.abs(), f64::max);
                unscaled_relative = unscaled_relative.max(far.residual() / scale);
            }
        }
    }
    outcome(
        exact <= 1e-9 && smooth <= 1e-7,
        format!(
            "monomial residual {exact:.3e}, exp residual {smooth:.3e} (lattice in B(0,0.5)); \
             unscaled exp residual relative to term size {unscaled_relative:.3e}"
        ),
    )
}

fn homogeneous_unisolvence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut min_vdm = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for (n, d) in sweep(4) {
        for _ in 0..FAMILIES {
            let fam = family(&mut rng, n, d);
            let ks: Vec<Vec<usize>> = (0..d).combinations(n - 1).collect();
            let dirs: Vec<Vec<f64>> = ks.iter().map(|k| fam.direction(k).unwrap()).collect();
            let v = vandermonde(&dirs, &homogeneous_basis(n, d - n + 1)).unwrap().abs();
            min_vdm = min_vdm.min(v);
            for k in &ks {
                let pk = PkPolynomial::new(&fam, k, d, true).unwrap();
                for (k2, dir) in ks.iter().zip(&dirs) {
                    let want = if k == k2 { 1.0 } else { 0.0 };
                    worst = worst.max((pk.eval(dir) - want).abs());
                }
            }
        }
    }
    outcome(
        min_vdm > 0.0 && worst <= 1e-10,
        format!("min |VDM| {min_vdm:.3e}, max |P~_K(n_K') - delta| {worst:.3e}"),
    )
}

fn newton_like_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for (n, d) in sweep(3) {
        for _ in 0..FAMILIES {
            let fam = family(&mut rng, n, d);
            for _ in 0..20 {
                let phi = random_form(&mut rng, n, d - n + 1);
                for _ in 0..20 {
                    let x = ball(&mut rng, n, 1.0);
                    worst = worst.max(newton_identity(&fam, &phi, &x).unwrap().relative_residual());
                }
            }
        }
    }
    // d = N against de Boor's identity pushed through a linear form.
    let mut square: f64 = 0.0;
    for n in [2usize, 3] {
        for _ in 0..FAMILIES {
            let fam = family(&mut rng, n, n);
            let lat = fam.lattice().unwrap();
            let h: Vec<usize> = (0..n).collect();
            let theta = lat.vertex(&h).unwrap().clone();
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let phi = SymmetricForm::new(MultiPoly::affine(&a, 0.0), 1).unwrap();
            for _ in 0..20 {
                let x = ball(&mut rng, n, 1.0);
                let mut rebuilt = linalg::dot(&a, &theta);
                for &i in &h {
                    let rest: Vec<usize> = h.iter().copied().filter(|&j| j != i).collect();
                    let dir = fam.direction(&rest).unwrap();
                    let plane = fam.plane(i);
                    rebuilt += plane.eval(&x) / plane.linear(&dir) * linalg::dot(&a, &dir);
                }
                let dec = newton_identity(&fam, &phi, &x).unwrap();
                square = square.max((dec.total() - rebuilt).abs());
            }
        }
    }
    outcome(
        worst <= 1e-9 && square <= 1e-12,
        format!("max relative residual {worst:.3e}, d = N mismatch {square:.3e}"),
    )
}

fn technical_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for _ in 0..FAMILIES {
        let fam = family(&mut rng, 3, 5);
        for r in techobserv_all(&fam).unwrap() {
            pairs += r.checked.len();
            worst = worst.max(r.max_abs());
        }
    }
    outcome(worst <= 1e-10, format!("{pairs} pairs, max |value| {worst:.3e}"))
}

fn degenerate_example() -> Outcome {
    let f = Function::monomial(vec![2, 0]);
    let t_values = [0.1, 0.05, 0.01];
    let mut worst: f64 = 0.0;
    let mut x2 = Vec::new();
    for eps in [0.0, 1.0] {
        let mut row = Vec::new();
        for &t in &t_values {
            let fam = HyperplaneFamily::simplex(&degenerate_triangle_points(t, eps)).unwrap();
            let li = interpolate(&fam.lattice().unwrap(), &f).unwrap();
            let c = li.poly().coefficients();
            let want: [f64; 3] = [0.0, 2.0 * t, -t.powf(-eps)];
            worst = worst.max(c[0].abs());
            for i in 1..3 {
                worst = worst.max((c[i] - want[i]).abs() / want[i].abs());
            }
            row.push((c[1], c[2]));
        }
        x2.push(row);
    }
    let diverges = x2[1].windows(2).all(|w| w[1].1.abs() > w[0].1.abs()) && x2[1][2].1.abs() >= 99.0;
    let taylor_poly = taylor(&f, &[0.0, 0.0], 1).unwrap();
    let limit = MultiPoly::from_terms(2, &[(vec![0, 1], -1.0)]).unwrap();
    let last = x2[0][2];
    let converges = last.0.abs() <= 0.02 + 1e-12 && (last.1 + 1.0).abs() <= 1e-9;
    let differs = limit.max_coeff_distance(&taylor_poly) >= 1.0 - 1e-12;
    outcome(
        worst <= 1e-9 && diverges && converges && differs,
        format!(
            "max relative coefficient error {worst:.3e}; eps=1 x2 coefficients {:?}; eps=0 limit -x2 vs Taylor {:?}",
            x2[1].iter().map(|c| c.1).collect::<Vec<_>>(),
            taylor_poly.coefficients()
        ),
    )
}

fn affine_triangle_rate() -> Outcome {
    let seq = affine_triangle_sequence(|t| 1.0 + t);
    let f = Function::exp_affine(vec![1.0, 1.0], 0.0);
    let s_values = default_s_values();
    let grid = GridSpec::default();
    let rep = convergence_experiment(&seq, &f, &s_values, &grid).unwrap();
    let slope = rep.coeff_slope.unwrap_or(f64::NAN);
    let mut checked = 0;
    let mut bounds_ok = true;
    for row in &rep.rows {
        let lat = seq.family(row.s).unwrap().lattice().unwrap();
        let b = bound_evaluator(&lat, &f, &grid, 1000, row.s).unwrap();
        if b.hypotheses_hold {
            checked += 1;
            bounds_ok &= b.error_bound_holds() && b.norms_rigorous;
        }
    }
    let cond = check_conditions(&seq, &s_values, &ConditionThresholds::default());
    let vol = cond.rows.last().map(|r| r.stats.min_volume).unwrap_or(f64::NAN);
    let vol_ok = (vol - std::f64::consts::FRAC_PI_4.sin()).abs() <= 0.02;
    let decays = rep.rows.windows(2).all(|w| w[1].coeff_error < w[0].coeff_error);
    outcome(
        (0.8..=1.2).contains(&slope) && decays && rep.failures.is_empty() && bounds_ok && checked > 0 && vol_ok,
        format!(
            "slope {slope:.4}, bound held at {checked}/{} s values, min volume at s=256 {vol:.5}",
            rep.rows.len()
        ),
    )
}

fn condition_machinery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s_values = default_s_values();
    let mut ineq = true;
    let mut seqs = vec![affine_triangle_sequence(|t| 1.0 + t)];
    for (n, d) in sweep(2) {
        let base = family(&mut rng, n, d);
        seqs.push(LatticeSequence::affine(base, move |s| {
            let k = 1.0 / s as f64;
            let lin = (0..n)
                .map(|i| (0..n).map(|j| if i == j { k } else { 0.0 }).collect())
                .collect();
            AffineMap::new(lin, vec![0.0; n])
        }));
    }
    for seq in &seqs {
        let probe = c1_c3_equivalence_probe(seq, &s_values).unwrap();
        ineq &= probe.consistent();
    }

    let mut agree: f64 = 0.0;
    for (n, d) in sweep(4) {
        for _ in 0..FAMILIES {
            let fam = family(&mut rng, n, d);
            for k in (0..d).combinations(n - 1) {
                let nk = fam.direction(&k).unwrap();
                for i in (0..d).filter(|i| !k.contains(i)) {
                    let mut rows = vec![fam.plane(i).normal().to_vec()];
                    rows.extend(k.iter().map(|&j| fam.plane(j).normal().to_vec()));
                    let a = linalg::dot(fam.plane(i).normal(), &nk).abs();
                    let b = linalg::determinant(&rows).abs();
                    agree = agree.max((a - b).abs());
                }
            }
            let stats = lattice_stats(&fam.lattice().unwrap()).unwrap();
            agree = agree.max((stats.delta - stats.min_volume).abs());
        }
    }

    let mut pk_ok = true;
    let mut pk_cases = 0;
    let grid = GridSpec::default();
    for (n, d) in sweep(3) {
        for _ in 0..5 {
            let fam = family(&mut rng, n, d);
            let norm = fam.lattice().unwrap().norm();
            let k = 0.45 / norm;
            let lin = (0..n)
                .map(|i| (0..n).map(|j| if i == j { k } else { 0.0 }).collect())
                .collect();
            let scaled = fam.transformed(&AffineMap::new(lin, vec![0.0; n]).unwrap()).unwrap();
            let lat = scaled.lattice().unwrap();
            let f = Function::exp_affine(vec![0.5; n], 0.0);
            let b = bound_evaluator(&lat, &f, &GridSpec { points_per_axis: 5, ..grid }, 1000, 17).unwrap();
            pk_cases += 1;
            pk_ok &= b.hypotheses_hold && b.pk_bound_holds();
        }
    }
    outcome(
        ineq && agree <= 1e-12 && pk_ok,
        format!(
            "offset/norm inequalities {}, inner product vs determinant {agree:.3e}, P_K bound on {pk_cases} lattices {}",
            if ineq { "hold" } else { "violated" },
            if pk_ok { "holds" } else { "violated" }
        ),
    )
}

/// Classical Newton divided difference table on the line.
fn newton_table(xs: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let mut col: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    for level in 1..xs.len() {
        col = (0..col.len() - 1)
            .map(|i| (col[i + 1] - col[i]) / (xs[i + level] - xs[i]))
            .collect();
    }
    col[0]
}

fn divided_difference_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let s = 1 + case % 5;
        let xs: Vec<f64> = loop {
            let mut v: Vec<f64> = (0..=s).map(|_| rng.random_range(-1.0..1.0)).collect();
            v.sort_by(f64::total_cmp);
            if v.windows(2).all(|w| w[1] - w[0] > 0.1) {
                break v;
            }
        };
        let a = rng.random_range(-1.5..1.5);
        let b = rng.random_range(-0.5..0.5);
        let classical = newton_table(&xs, |x| (a * x + b).exp());
        let embedded = if case % 2 == 0 {
            let f = Function::exp_affine(vec![a], b);
            let pts = xs.iter().map(|&x| vec![x]).collect();
            divided_difference(&f, &PointTuple::new(pts).unwrap(), &vec![vec![1.0]; s], default_exactness(s))
        } else {
            let y = rng.random_range(-1.0..1.0);
            let f = Function::exp_affine(vec![a, rng.random_range(-1.0..1.0)], b);
            let shift = f.eval(&[0.0, y]) / b.exp();
            let pts = xs.iter().map(|&x| vec![x, y]).collect();
            divided_difference(&f, &PointTuple::new(pts).unwrap(), &vec![vec![1.0, 0.0]; s], default_exactness(s))
                .map(|v| v / shift)
        }
        .unwrap();
        worst = worst.max((embedded - classical).abs() / classical.abs().max(1.0));
    }

    let mut hermite: f64 = 0.0;
    for _ in 0..20 {
        let s = rng.random_range(1..=5usize);
        let c = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let f = Function::exp_affine(c.clone(), 0.2);
        let a = ball(&mut rng, 2, 1.0);
        let v = ball(&mut rng, 2, 1.0);
        let closed = linalg::dot(&c, &v).powi(s as i32) * (linalg::dot(&c, &a) + 0.2).exp()
            / (1..=s).product::<usize>() as f64;
        let value = divided_difference(
            &f,
            &PointTuple::new(vec![a.clone(); s + 1]).unwrap(),
            &vec![v.clone(); s],
            default_exactness(s),
        )
        .unwrap();
        hermite = hermite.max((value - closed).abs());
    }
    outcome(
        worst <= 1e-10 && hermite <= 1e-10,
        format!("Newton table mismatch {worst:.3e}, coincident-point mismatch {hermite:.3e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("projector exactness", projector_exactness),
        ("de Boor identity", deboor_identity),
        ("remainder formula", remainder_formula),
        ("homogeneous unisolvence", homogeneous_unisolvence),
        ("Newton-like identity", newton_like_identity),
        ("technical lemma", technical_lemma),
        ("degenerate triangle example", degenerate_example),
        ("affine triangle rate and bound", affine_triangle_rate),
        ("condition machinery", condition_machinery),
        ("divided-difference oracle", divided_difference_oracle),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
