//! Acceptance suite. Prints one PASS/FAIL line per criterion; run with
//! `cargo test -p sidecomp-core --test acceptance -- --nocapture`.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;

use common::*;
use sidecomp::commutant::{commutant_basis, riesz_idempotents};
use sidecomp::decomposer::{
    build_example, decide, default_bound, family_builder, field_report, scan_family, verify_certificate, ExampleName,
    ExampleParams, Phi, Trend, Verdict,
};
use sidecomp::field::{assemble, field_norm, OperatorField};
use sidecomp::idempotent::{complement, generate, gram_sum, join, meet, orthogonalize, IdempotentAlgebra};
use sidecomp::matrix::{cond, from_real_rows, inverse, max_abs_diff, op_norm, r};
use sidecomp::si::{brute_idempotent_search, dunford_split, is_strongly_irreducible, jordan_structure};
use sidecomp::{CMatrix, Tolerances};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ex21(i: f64) -> CMatrix {
    from_real_rows(&[&[1.0 / i, 1.0], &[0.0, -1.0 / (2.0 * i)]])
}

fn criterion_1(tol: &Tolerances) -> Outcome {
    let mut worst_form: f64 = 0.0;
    let mut worst_riesz: f64 = 0.0;
    for i in 1..=10 {
        let i = i as f64;
        let a = ex21(i);
        let basis = commutant_basis(&a, tol).map_err(|e| e.to_string())?;
        ensure(basis.dim() == 2, || format!("i={i}: commutant dimension {}", basis.dim()))?;
        for e in &basis.elements {
            let scale = op_norm(e);
            let form = e[(1, 0)].norm().max((e[(0, 1)] - (e[(0, 0)] - e[(1, 1)]) * r(2.0 * i / 3.0)).norm());
            let residual = op_norm(&(e * &a - &a * e));
            worst_form = worst_form.max(form / scale).max(residual / scale);
        }
        let t = 2.0 * i / 3.0;
        let high = from_real_rows(&[&[1.0, t], &[0.0, 0.0]]);
        let low = from_real_rows(&[&[0.0, -t], &[0.0, 1.0]]);
        let ps = riesz_idempotents(&a, tol).map_err(|e| e.to_string())?;
        ensure(ps.len() == 2, || format!("i={i}: {} Riesz idempotents", ps.len()))?;
        for p in &ps {
            let target = if (p.eigenvalue - r(1.0 / i)).norm() < 1e-12 { &high } else { &low };
            worst_riesz = worst_riesz.max(max_abs_diff(&p.projector, target));
        }
    }
    ensure(worst_form <= 1e-10, || format!("form residual {worst_form:.2e} > 1e-10"))?;
    ensure(worst_riesz <= 1e-9, || format!("Riesz entry error {worst_riesz:.2e} > 1e-9"))?;
    Ok(format!("form residual {worst_form:.1e}, Riesz error {worst_riesz:.1e}"))
}

fn criterion_2(tol: &Tolerances) -> Outcome {
    let f = build_example(ExampleName::InverseSequence, &ExampleParams::fibers(20)).map_err(|e| e.to_string())?;
    let cert = decide(&f, 10.0, tol).map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::NotDecomposableWithinBound, || format!("N=20 verdict {}", cert.verdict))?;
    let w = cert.witness.as_ref().ok_or("no witness")?;
    ensure(w.label == "15", || format!("witness at {}", w.label))?;
    ensure((10.04..=10.06).contains(&w.norm), || format!("witness norm {}", w.norm))?;
    let oracle = (1.0f64 + 4.0 * 225.0 / 9.0).sqrt();
    ensure((w.norm - oracle).abs() < 1e-9, || format!("witness norm {} vs {oracle}", w.norm))?;
    let f5 = build_example(ExampleName::InverseSequence, &ExampleParams::fibers(5)).map_err(|e| e.to_string())?;
    let cert5 = decide(&f5, 10.0, tol).map_err(|e| e.to_string())?;
    ensure(cert5.verdict == Verdict::Decomposable, || format!("N=5 verdict {}", cert5.verdict))?;
    Ok(format!("N=20 witness at i=15 norm {:.6}; N=5 DECOMPOSABLE", w.norm))
}

fn criterion_3(tol: &Tolerances) -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [10usize, 100, 1000] {
        let f = build_example(ExampleName::UnitInterval, &ExampleParams::grid(m)).map_err(|e| e.to_string())?;
        let rep = field_report(&f, tol);
        let first = &rep.fibers[0];
        let expected = (1.0 + (2.0 * m as f64 / 3.0).powi(2)).sqrt();
        let rel = (first.max_central_norm - expected).abs() / expected;
        worst = worst.max(rel);
        ensure(rel <= 1e-3, || format!("m={m}: norm {} vs {expected}", first.max_central_norm))?;
        ensure(rep.central_bound == first.max_central_norm, || format!("m={m}: maximum not at the smallest grid point"))?;
    }
    let scan = scan_family(family_builder(ExampleName::UnitInterval, ExampleParams::default()), &[10, 100, 1000], tol)
        .map_err(|e| e.to_string())?;
    ensure(scan.trend == Trend::Divergent, || format!("scan reports {}", scan.trend))?;
    Ok(format!("max relative error {worst:.1e}; slope {:.3}, R^2 {:.4}, {}", scan.slope, scan.r_squared, scan.trend))
}

fn criterion_4(tol: &Tolerances) -> Outcome {
    let params = ExampleParams {
        grid: Some(100),
        phi: Some(Phi::Indicator(0.0, 0.5)),
        ..Default::default()
    };
    let f = build_example(ExampleName::ScalarPlusNilpotent, &params).map_err(|e| e.to_string())?;
    let cert = decide(&f, default_bound(&f), tol).map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::Decomposable, || format!("verdict {}", cert.verdict))?;
    let bound = cert.diagnostics.refined_bound.ok_or("no atom bound")?;
    ensure(bound <= 1.0 + 1e-8, || format!("atom bound {bound}"))?;
    let si = cert.si_field.as_ref().ok_or("no si_field")?;
    let mut unsplit = 0;
    let mut split = 0;
    for (j, p) in f.space().points().iter().enumerate() {
        let lam = (j + 1) as f64 / 100.0;
        let summary = &cert.diagnostics.fibers[j];
        let split_entry = cert.splits.iter().find(|s| s.label == p.label);
        if lam <= 0.5 {
            ensure(summary.si && split_entry.is_none(), || format!("fiber {} should be SI and unsplit", p.label))?;
            ensure(si.fiber(&p.label).map(|a| a.nrows()) == Some(2), || format!("fiber {} missing", p.label))?;
            unsplit += 1;
        } else {
            let s = split_entry.ok_or_else(|| format!("fiber {} not split", p.label))?;
            ensure(s.dims == vec![1, 1], || format!("fiber {} split as {:?}", p.label, s.dims))?;
            for k in 0..2 {
                let child = format!("{}.{k}", p.label);
                ensure(si.fiber(&child).map(|a| a.nrows()) == Some(1), || format!("missing {child}"))?;
            }
            split += 1;
        }
    }
    let report = verify_certificate(&f, &cert, tol).map_err(|e| e.to_string())?;
    ensure(report.passed(), || format!("verify failed: {:?}", report.failures().collect::<Vec<_>>()))?;

    let g = build_example(ExampleName::NilpotentOne, &ExampleParams::grid(100)).map_err(|e| e.to_string())?;
    let rep = field_report(&g, tol);
    ensure(rep.fibers.iter().all(|s| s.si), || "constant coupling: some fiber not SI".into())?;
    let cert_g = decide(&g, default_bound(&g), tol).map_err(|e| e.to_string())?;
    ensure(cert_g.verdict == Verdict::Decomposable, || format!("constant coupling verdict {}", cert_g.verdict))?;
    let report_g = verify_certificate(&g, &cert_g, tol).map_err(|e| e.to_string())?;
    ensure(report_g.passed(), || "constant coupling certificate fails verification".into())?;
    Ok(format!("{unsplit} SI fibers kept, {split} scalar fibers split, atom bound {bound:.12}; both certificates verify"))
}

fn criterion_5(tol: &Tolerances) -> Outcome {
    let mut g = rng(5);
    let mut worst: f64 = 0.0;
    let mut triples = 0;
    let rel = |a: &CMatrix, b: &CMatrix| op_norm(&(a - b)) / op_norm(a).max(op_norm(b)).max(1.0);
    while triples < 1000 {
        let n = g.random_range(2..=8);
        let k = g.random_range(1..=4);
        let (x, x_inv) = similarity(&mut g, n, 100.0);
        let seeds: Vec<CMatrix> = (0..k)
            .map(|_| {
                let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
                    r(if g.random_bool(0.5) { 1.0 } else { 0.0 })
                }));
                &x * d * &x_inv
            })
            .collect();
        let alg = generate(&seeds, tol).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let pick = |g: &mut rand_chacha::ChaCha8Rng| {
                let mask: Vec<bool> = (0..alg.atoms.len()).map(|_| g.random_bool(0.5)).collect();
                alg.element(&mask)
            };
            let (p1, p2, p3) = (pick(&mut g), pick(&mut g), pick(&mut g));
            let e = |res: sidecomp::Result<CMatrix>| res.map_err(|e| e.to_string());
            let lhs = e(meet(&p1, &e(join(&p2, &p3, tol))?, tol))?;
            let rhs = e(join(&e(meet(&p1, &p2, tol))?, &e(meet(&p1, &p3, tol))?, tol))?;
            worst = worst.max(rel(&lhs, &rhs));
            let lhs = e(join(&p1, &e(meet(&p2, &p3, tol))?, tol))?;
            let rhs = e(meet(&e(join(&p1, &p2, tol))?, &e(join(&p1, &p3, tol))?, tol))?;
            worst = worst.max(rel(&lhs, &rhs));
            let lhs = e(complement(&e(join(&p1, &p2, tol))?, tol))?;
            let rhs = e(meet(&e(complement(&p1, tol))?, &e(complement(&p2, tol))?, tol))?;
            worst = worst.max(rel(&lhs, &rhs));
            triples += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("relative error {worst:.2e} > 1e-9"))?;
    Ok(format!("{triples} triples, worst relative error {worst:.1e}"))
}

fn criterion_6(tol: &Tolerances) -> Outcome {
    let mut g = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = g.random_range(1..=12);
        let k = g.random_range(1..=n.min(8));
        let (x, x_inv) = similarity(&mut g, n, 100.0);
        let atoms = coordinate_resolution(&mut g, n, k).into_iter().map(|p| &x * p * &x_inv).collect();
        let alg = IdempotentAlgebra::from_atoms(atoms, tol).map_err(|e| e.to_string())?;
        let xo = orthogonalize(&alg, tol).map_err(|e| e.to_string())?;
        let xo_inv = inverse(&xo, tol).map_err(|e| e.to_string())?;
        let limit = 1e-8 * cond(&xo);
        for bits in 0u32..(1 << k) {
            let mask: Vec<bool> = (0..k).map(|j| bits & (1 << j) != 0).collect();
            let h = &xo * alg.element(&mask) * &xo_inv;
            let err = op_norm(&(&h - h.adjoint())).max(op_norm(&(&h * &h - &h)));
            worst = worst.max(err / limit);
            ensure(err <= limit, || format!("element error {err:.2e} > {limit:.2e}"))?;
        }
    }
    let t = 2.0;
    let e1 = from_real_rows(&[&[1.0, t], &[0.0, 0.0]]);
    let e2 = from_real_rows(&[&[0.0, -t], &[0.0, 1.0]]);
    let s = gram_sum(&[e1, e2]);
    ensure(s == from_real_rows(&[&[1.0, 2.0], &[2.0, 9.0]]), || format!("S = {s}"))?;
    Ok(format!("200 algebras, worst error at {worst:.2e} of the 1e-8 cond(X) limit; S = [[1,2],[2,9]] exactly"))
}

fn criterion_7(tol: &Tolerances) -> Outcome {
    let mut g = rng(7);
    let mut agree = 0;
    let mut ambiguous = 0;
    let mut oracle_cases = Vec::new();
    for idx in 0..500 {
        let n = g.random_range(1..=6);
        let (j, blocks) = random_jordan(&mut g, n);
        let (x, x_inv) = similarity(&mut g, n, 100.0);
        let a = &x * j * x_inv;
        match is_strongly_irreducible(&a, tol) {
            Ok(si) => {
                ensure(si == (blocks == 1), || format!("case {idx}: verdict {si} with {blocks} blocks (n={n})"))?;
                agree += 1;
                if idx % 10 == 0 {
                    oracle_cases.push((a, si));
                }
            }
            Err(_) => ambiguous += 1,
        }
    }
    ensure(ambiguous <= 25, || format!("{ambiguous} of 500 ill-conditioned"))?;
    let mut checked = 0;
    for (k, (a, si)) in oracle_cases.iter().enumerate().take(50) {
        let found = brute_idempotent_search(a, 500, k as u64, tol).map_err(|e| e.to_string())?;
        ensure(found.is_empty() == *si, || format!("oracle case {k}: si={si}, search found {}", found.len()))?;
        checked += 1;
    }
    ensure(checked >= 45, || format!("only {checked} oracle cases"))?;
    Ok(format!("{agree}/{} unambiguous agree ({ambiguous} ambiguous); oracle agrees on {checked}", 500 - ambiguous))
}

fn criterion_8() -> Outcome {
    let mut g = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let points = g.random_range(1..=32);
        let max_dim = (128 / points).clamp(1, 8);
        let f = random_field(&mut g, points, max_dim);
        let dense = assemble(&f).map_err(|e| e.to_string())?;
        let a = field_norm(&f);
        let b = op_norm(&dense);
        worst = worst.max((a - b).abs() / b.max(f64::MIN_POSITIVE));
    }
    ensure(worst <= 1e-10, || format!("relative difference {worst:.2e}"))?;
    Ok(format!("100 fields, worst relative difference {worst:.1e}"))
}

fn criterion_9(tol: &Tolerances) -> Outcome {
    let mut g = rng(9);
    let mut done = 0;
    let mut attempts = 0;
    let mut worst_c: f64 = 1.0;
    while done < 50 {
        attempts += 1;
        ensure(attempts <= 500, || format!("only {done} decomposable fields in 500 draws"))?;
        let points = g.random_range(1..=6);
        let f = random_jordan_field(&mut g, points, 4, 10.0);
        let bound = default_bound(&f);
        let Ok(cert) = decide(&f, bound, tol) else { continue };
        if cert.verdict != Verdict::Decomposable {
            continue;
        }
        let mut xs = Vec::new();
        let mut xis = Vec::new();
        let mut c: f64 = 1.0;
        for p in f.space().points() {
            let (x, xi) = similarity(&mut g, p.dim, 10.0);
            c = c.max(cond(&x));
            xs.push(x);
            xis.push(xi);
        }
        let f2: OperatorField = f.conjugate(&xs, &xis).map_err(|e| e.to_string())?;
        let labels: Vec<&str> = f.space().labels().collect();
        let cert2 = cert
            .conjugate(&labels, &xs, &xis, c * c * bound * (1.0 + 1e-8))
            .map_err(|e| e.to_string())?;
        let report = verify_certificate(&f2, &cert2, tol).map_err(|e| e.to_string())?;
        ensure(report.passed(), || {
            format!("field {done}: {:?}", report.failures().map(|c| (c.name, c.detail.clone())).collect::<Vec<_>>())
        })?;
        worst_c = worst_c.max(c);
        done += 1;
    }
    Ok(format!("50 conjugated certificates verify (sup cond up to {worst_c:.2}, {attempts} draws)"))
}

fn criterion_10(tol: &Tolerances) -> Outcome {
    let mut g = rng(10);
    let mut bitwise = 0;
    let mut worst_rounding: f64 = 0.0;
    let mut worst_comm: f64 = 0.0;
    let mut worst_nil: f64 = 0.0;
    let mut nonzero_r = 0;
    for idx in 0..200 {
        let n = g.random_range(1..=8);
        let a = if idx % 2 == 0 {
            gaussian(&mut g, n, n)
        } else {
            let (j, _) = random_jordan(&mut g, n);
            let (x, x_inv) = similarity(&mut g, n, 10.0);
            &x * j * x_inv
        };
        let d = dunford_split(&a, tol).map_err(|e| format!("case {idx}: {e}"))?;
        let (s, rr) = (&d.semisimple, &d.nilpotent);
        let sum = s + rr;
        if sum == a {
            bitwise += 1;
        }
        // a single rounding of each entry of S + R
        for k in 0..sum.len() {
            let err = (sum[k] - a[k]).norm();
            let ulp = f64::EPSILON * (s[k].norm() + rr[k].norm());
            if ulp > 0.0 {
                worst_rounding = worst_rounding.max(err / ulp);
            } else {
                ensure(err == 0.0, || format!("case {idx}: nonzero error on a zero entry"))?;
            }
        }
        let rn = op_norm(rr);
        if rn > 0.0 {
            nonzero_r += 1;
            let comm = op_norm(&(s * rr - rr * s)) / (op_norm(s) * rn);
            let mut pow = rr.clone();
            for _ in 1..n {
                pow = &pow * rr;
            }
            let nil = op_norm(&pow) / rn.powi(n as i32);
            worst_comm = worst_comm.max(comm);
            worst_nil = worst_nil.max(nil);
            ensure(comm <= 1e-9, || format!("case {idx}: commutator {comm:.2e}"))?;
            ensure(nil <= 1e-9, || format!("case {idx}: R^n {nil:.2e}"))?;
        }
        let js = jordan_structure(s, tol).map_err(|e| format!("case {idx}: S: {e}"))?;
        ensure(js.is_semisimple(), || format!("case {idx}: S has a nontrivial Jordan block"))?;
    }
    ensure(worst_rounding <= 1.0, || format!("S + R differs from A by {worst_rounding:.2} units of rounding"))?;
    Ok(format!(
        "{bitwise}/200 bitwise equal, others within {worst_rounding:.2} units of one rounding; \
         {nonzero_r} with R != 0: commutator {worst_comm:.1e}, R^n {worst_nil:.1e}"
    ))
}

#[test]
fn acceptance() {
    let tol = Tolerances::default();
    type Run<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(u32, &str, Option<Duration>, Run)> = vec![
        (1, "commutant form and Riesz idempotents of the 2x2 sequence", Some(Duration::from_secs(1)), Box::new(|| criterion_1(&tol))),
        (2, "refusal at N=20, B=10 with witness at i=15", Some(Duration::from_secs(2)), Box::new(|| criterion_2(&tol))),
        (3, "divergence on grids m = 10, 100, 1000", Some(Duration::from_secs(10)), Box::new(|| criterion_3(&tol))),
        (4, "scalar-plus-nilpotent fields decompose", Some(Duration::from_secs(5)), Box::new(|| criterion_4(&tol))),
        (5, "distributive and De Morgan laws", None, Box::new(|| criterion_5(&tol))),
        (6, "orthogonalization of bounded Boolean algebras", None, Box::new(|| criterion_6(&tol))),
        (7, "SI criterion against Jordan structure and Newton oracle", None, Box::new(|| criterion_7(&tol))),
        (8, "field norm equals assembled norm", None, Box::new(criterion_8)),
        (9, "similarity transport of certificates", None, Box::new(|| criterion_9(&tol))),
        (10, "Dunford split", None, Box::new(|| criterion_10(&tol))),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in &criteria {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > *limit {
                outcome = Err(format!("took {:.2} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()));
            }
        }
        match &outcome {
            Ok(detail) => println!("PASS  {id:>2}  {name}: {detail} [{:.2} s]", elapsed.as_secs_f64()),
            Err(why) => {
                println!("FAIL  {id:>2}  {name}: {why} [{:.2} s]", elapsed.as_secs_f64());
                failed.push(*id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
