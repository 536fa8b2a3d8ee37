//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use num_complex::Complex64;
use qdeform::builtins::{builtin, lattice_casimir, Builtin};
use qdeform::darboux::darboux_map_qosc1;
use qdeform::dirac::{build_constraints, verify_reduction, Gradient, OmegaBarMethod};
use qdeform::expr::parse_poly;
use qdeform::flow::{analytic_qparticle, integrate, measure_frequency, FlowConfig};
use qdeform::fock::{
    classical_identity_residual, classical_limit_scan, multimode_ops, multimode_with, relation_residuals,
    Algebra, Dressing,
};
use qdeform::kahler::{KahlerModel, WirtingerGradient};
use qdeform::ncalg::{system, NCPoly, Params, SYSTEMS};
use qdeform::poisson::{Beta, PoissonStructure};
use qdeform::poly::PolyExpr;
use qdeform::scalar::{rat, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn jacobi_suite() -> Outcome {
    let mut list: Vec<Builtin> = (1..=4).map(Builtin::Canonical).collect();
    list.extend([Builtin::Qosc1, Builtin::Qparticle, Builtin::Lattice]);
    list.extend((1..=3).map(Builtin::Suqn));
    list.extend((1..=3).map(Builtin::Diag));
    for which in &list {
        let s = builtin(*which, Beta::Symbolic).map_err(e)?;
        ensure(s.satisfies_jacobi(), format!("{which} has a nonzero Jacobi residual"))?;
    }
    let inv = PolyExpr::monomial("beta", -1);
    let i = PolyExpr::constant(Scalar::i());
    let lat = builtin(Builtin::Lattice, Beta::Symbolic).map_err(e)?;
    let xps = &PolyExpr::var("x") * &PolyExpr::var("p*");
    let bad = PoissonStructure::from_brackets(
        "lattice-perturbed",
        lat.chart().clone(),
        &[
            ("x", "p", lat.entry(0, 1).clone()),
            ("x", "p*", &PolyExpr::one() - &(&i * &(&xps * &inv))),
            ("p*", "p", lat.entry(2, 1).clone()),
        ],
        Beta::Symbolic,
    )
    .map_err(e)?;
    let res = bad.jacobi_residual();
    ensure(res.iter().any(|t| !t.residual.is_zero()), "perturbed control has zero residual".into())?;
    Ok(format!("{} structures exact; control residual {}", list.len(), res[0].residual))
}

fn casimir() -> Outcome {
    let s = builtin(Builtin::Lattice, Beta::Symbolic).map_err(e)?;
    let cas = parse_poly("p * p* * x/beta - i*(p - p*)").map_err(e)?;
    ensure(cas == lattice_casimir(&Beta::Symbolic), "parsed Casimir differs from built-in".into())?;
    ensure(s.casimir_check(&cas).map_err(e)?, "Casimir check failed".into())?;
    let s = builtin(Builtin::Lattice, Beta::value(rat(1, 1)).map_err(e)?).map_err(e)?;
    let h = parse_poly("p * p*").map_err(e)?;
    let p0 = c(0.6, -0.3);
    let traj = integrate(&s, &h, &[c(0.4, 0.0), p0, p0.conj()], &FlowConfig::new(10.0, 201)).map_err(e)?;
    let drift = traj.monitor_max("casimir_0_drift").ok_or("no Casimir monitor")?;
    ensure(drift <= 1e-9, format!("Casimir drift {drift:e} > 1e-9"))?;
    Ok(format!("symbolic check exact; drift {drift:.2e} over t in [0,10]"))
}

fn oscillator_frequency() -> Outcome {
    let h = parse_poly("b* * b").map_err(e)?;
    let mut worst: f64 = 0.0;
    for e2 in [0.25f64, 0.5, 1.0] {
        let s = builtin(Builtin::Qosc1, Beta::value(rat(2, 1)).map_err(e)?).map_err(e)?;
        let b0 = c(e2.sqrt(), 0.0);
        let traj = integrate(&s, &h, &[b0, b0.conj()], &FlowConfig::new(25.0, 1001)).map_err(e)?;
        let f = measure_frequency(&traj.times, &traj.component("b").unwrap()).map_err(e)?;
        let expect = 1.0 - e2 / 2.0;
        let rel = (f - expect).abs() / expect;
        ensure(rel <= 1e-6, format!("|b0|^2={e2}: frequency {f} vs {expect}"))?;
        worst = worst.max(rel);
    }
    let s = builtin(Builtin::Qosc1, Beta::value(rat(1_000_000, 1)).map_err(e)?).map_err(e)?;
    let traj = integrate(&s, &h, &[c(1.0, 0.0), c(1.0, 0.0)], &FlowConfig::new(25.0, 1001)).map_err(e)?;
    let f = measure_frequency(&traj.times, &traj.component("b").unwrap()).map_err(e)?;
    ensure((f - 1.0).abs() <= 1e-5, format!("beta=1e6 frequency {f}"))?;
    Ok(format!("max relative error {worst:.2e}; undeformed limit {f:.8}"))
}

fn particle_friction() -> Outcome {
    let h = parse_poly("p^2/2").map_err(e)?;
    let mut worst: f64 = 0.0;
    let mut p_drift: f64 = 0.0;
    for (x0, p0, beta) in [(0.5, 0.3, 1.0), (-1.0, 0.8, 2.0), (0.2, -0.5, 0.5)] {
        let s = builtin(Builtin::Qparticle, Beta::from_f64(beta).map_err(e)?).map_err(e)?;
        let traj = integrate(&s, &h, &[c(x0, 0.0), c(p0, 0.0)], &FlowConfig::new(3.0, 61)).map_err(e)?;
        for (k, &t) in traj.times.iter().enumerate() {
            let (x, p) = analytic_qparticle(x0, p0, beta, t).map_err(e)?;
            worst = worst.max((traj.points[k][0].re - x).abs() / x.abs().max(1e-300));
            p_drift = p_drift.max((traj.points[k][1] - c(p, 0.0)).norm());
        }
    }
    ensure(worst <= 1e-8, format!("relative x error {worst:e}"))?;
    ensure(p_drift <= 1e-12, format!("p drift {p_drift:e}"))?;
    Ok(format!("max relative x error {worst:.2e}; p drift {p_drift:.1e}"))
}

fn sample(rng: &mut ChaCha8Rng, n: usize, beta: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let r2 = if beta > 0.0 { rng.gen_range(0.0..0.4 * beta) } else { rng.gen_range(0.0..4.0) };
            Complex64::from_polar(r2.sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect()
}

fn kahler_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut metric_err: f64 = 0.0;
    for beta in [1.0, 2.0, -1.0] {
        let m = KahlerModel::new(2, beta).map_err(e)?;
        for _ in 0..50 {
            let z = sample(&mut rng, 2, beta);
            let g = m.metric(&z).map_err(e)?;
            let fd = m.metric_fd(&z, 1e-3).map_err(e)?;
            for (a, b) in g.iter().zip(&fd) {
                metric_err = metric_err.max((a - b).abs());
            }
        }
    }
    ensure(metric_err <= 1e-6, format!("metric vs Hessian {metric_err:e}"))?;
    let mut bracket_err: f64 = 0.0;
    for n in 1..=3 {
        let beta = 1.5;
        let m = KahlerModel::new(n, beta).map_err(e)?;
        let s = builtin(Builtin::Diag(n), Beta::from_f64(beta).map_err(e)?).map_err(e)?;
        for _ in 0..10 {
            let z = sample(&mut rng, n, beta);
            let full: Vec<Complex64> = z.iter().copied().chain(z.iter().map(|w| w.conj())).collect();
            let w = s.bivector_at(&full).map_err(e)?;
            for j in 0..2 * n {
                for k in 0..2 * n {
                    let ga = WirtingerGradient::coordinate(n, j % n, j >= n);
                    let gb = WirtingerGradient::coordinate(n, k % n, k >= n);
                    let kb = m.bracket_kahler(&ga, &gb, &z).map_err(e)?;
                    bracket_err = bracket_err.max((kb - w[(j, k)]).norm());
                }
            }
        }
    }
    ensure(bracket_err <= 1e-10, format!("Kähler bracket vs diag {bracket_err:e}"))?;
    let mut push_err: f64 = 0.0;
    for n in [2, 3] {
        for beta in [1.0, 2.5] {
            let m = KahlerModel::new(n, beta).map_err(e)?;
            let s = builtin(Builtin::Suqn(n), Beta::from_f64(beta).map_err(e)?).map_err(e)?;
            for _ in 0..10 {
                let z = sample(&mut rng, n, beta);
                let a = m.mode_coupling(&z).map_err(e)?;
                let grads = m.coupled_gradients(&z).map_err(e)?;
                let full: Vec<Complex64> = a.iter().copied().chain(a.iter().map(|w| w.conj())).collect();
                let target = s.bivector_at(&full).map_err(e)?;
                let grad = |j: usize| if j < n { &grads[j].0 } else { &grads[j - n].1 };
                for j in 0..2 * n {
                    for k in 0..2 * n {
                        let pf = m.bracket_kahler(grad(j), grad(k), &z).map_err(e)?;
                        push_err = push_err.max((pf - target[(j, k)]).norm());
                    }
                }
            }
        }
    }
    ensure(push_err <= 1e-10, format!("pushforward vs suqn {push_err:e}"))?;
    Ok(format!("metric {metric_err:.1e}, bracket {bracket_err:.1e}, pushforward {push_err:.1e}"))
}

fn curvature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = KahlerModel::new(2, 2.0).map_err(e)?;
    let ratios: Vec<f64> = (0..20)
        .map(|_| {
            let r = m.scalar_curvature(&sample(&mut rng, 2, 2.0)).unwrap();
            r.r_impl / r.r_closed
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / 20.0;
    let std = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 20.0).sqrt();
    ensure(std / mean.abs() <= 1e-8, format!("ratio spread {}", std / mean.abs()))?;
    // |z|² = (β/2)(1 − ε) for ε = 10^-1 … 10^-6
    let m1 = KahlerModel::new(1, 1.0).map_err(e)?;
    let mut prev = f64::NEG_INFINITY;
    let mut last = 0.0;
    for k in 1..=6 {
        let eps = 10f64.powi(-k);
        let z = [c((0.5 * (1.0 - eps)).sqrt(), 0.0)];
        let r = m1.scalar_curvature(&z).map_err(e)?.r_impl.abs();
        ensure(r > prev, format!("curvature not increasing at eps={eps:e}"))?;
        prev = r;
        last = r;
    }
    let mneg = KahlerModel::new(2, -1.0).map_err(e)?;
    for _ in 0..50 {
        let r = mneg.scalar_curvature(&sample(&mut rng, 2, -1.0)).map_err(e)?;
        ensure(r.r_impl.is_finite(), "non-finite curvature for beta<0".into())?;
    }
    Ok(format!("ratio {mean:.12} (spread {:.1e}); |R| at eps=1e-6: {last:.3e}", std / mean.abs()))
}

fn dirac() -> Outcome {
    let quad = OmegaBarMethod::Quadrature { tol: 1e-13 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_closed: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    for n in 1..=4 {
        let s = builtin(Builtin::Canonical(n), Beta::value(rat(1, 1)).map_err(e)?).map_err(e)?;
        let pts: Vec<Vec<f64>> = (0..20).map(|_| (0..2 * n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        worst_closed = worst_closed.max(verify_reduction(&s, &pts, 1e-10, OmegaBarMethod::ClosedForm).map_err(e)?.max_error);
        worst_quad = worst_quad.max(verify_reduction(&s, &pts, 1e-8, quad).map_err(e)?.max_error);
    }
    let disc = |rng: &mut ChaCha8Rng, beta: f64| -> Vec<Vec<f64>> {
        (0..20)
            .map(|_| {
                let s: f64 = rng.gen_range(0.0..0.9);
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (2.0 * beta * s).sqrt();
                vec![r * a.cos(), r * a.sin()]
            })
            .collect()
    };
    let mut agree: f64 = 0.0;
    let mut constraint: f64 = 0.0;
    let mut min_det = f64::INFINITY;
    for (which, beta) in [(Builtin::Qosc1, 2.0), (Builtin::Qparticle, 4.0)] {
        let s = builtin(which, Beta::from_f64(beta).map_err(e)?).map_err(e)?;
        let pts = if which == Builtin::Qosc1 {
            disc(&mut rng, beta)
        } else {
            (0..20).map(|_| vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)]).collect()
        };
        let rc = verify_reduction(&s, &pts, 1e-10, OmegaBarMethod::ClosedForm).map_err(e)?;
        worst_closed = worst_closed.max(rc.max_error);
        worst_quad = worst_quad.max(verify_reduction(&s, &pts, 1e-8, quad).map_err(e)?.max_error);
        min_det = rc.points.iter().map(|p| p.det_delta.abs()).fold(min_det, f64::min);
        let cf = build_constraints(&s, OmegaBarMethod::ClosedForm).map_err(e)?;
        let qd = build_constraints(&s, quad).map_err(e)?;
        let space = cf.space().clone();
        let x = &(&PolyExpr::var(&space.theta[0]).pow(2) * &PolyExpr::var(&space.pi[1])) + &PolyExpr::var(&space.theta[1]);
        for p in &pts {
            let (a, da) = cf.omega_bar_with_derivatives(p).map_err(e)?;
            let (b, db) = qd.omega_bar_with_derivatives(p).map_err(e)?;
            agree = agree.max((&a - &b).amax());
            for (u, v) in da.iter().zip(&db) {
                agree = agree.max((u - v).amax());
            }
            let pi = cf.surface_momenta(p).map_err(e)?;
            let (_, gx) = space.poly_gradient(&x, p, &pi).map_err(e)?;
            let phis = cf.gradients(p).map_err(e)?;
            for phi in &phis {
                constraint = constraint.max(cf.dirac_bracket(phi, &gx, p).map_err(e)?.abs());
                constraint = constraint.max(cf.dirac_bracket(phi, &Gradient::theta(2, 0), p).map_err(e)?.abs());
            }
        }
    }
    ensure(worst_closed <= 1e-10, format!("closed-form reduction error {worst_closed:e}"))?;
    ensure(worst_quad <= 1e-8, format!("quadrature reduction error {worst_quad:e}"))?;
    ensure(constraint <= 1e-10, format!("{{phi, X}}_D residual {constraint:e}"))?;
    ensure(agree <= 1e-10, format!("closed form vs quadrature {agree:e}"))?;
    ensure(min_det > 1e-8, format!("|det Delta| = {min_det:e}"))?;
    Ok(format!(
        "closed {worst_closed:.1e}, quadrature {worst_quad:.1e}, constraints {constraint:.1e}, omega-bar agreement {agree:.1e}"
    ))
}

fn ncalg() -> Outcome {
    let p = Params::default();
    let good = system("eq5", &p).map_err(e)?;
    ensure(good.jacobi_check("x", "p+", "p").map_err(e)?.is_zero(), "eq5 Jacobi residual nonzero".into())?;
    let wrong = system("eq5-wrong", &p).map_err(e)?;
    let res = wrong.jacobi_check("x", "p+", "p").map_err(e)?;
    ensure(!res.is_zero(), "wrong ordering has zero Jacobi residual".into())?;
    let q = p.q_real();
    let ih = Scalar::new(rat(0, 1), rat(1, 10));
    let r1 = &NCPoly::word("p x") - &NCPoly::word("x p").scale(&q);
    let r2 = &NCPoly::word("x p+") - &NCPoly::word("p+ x").scale(&q);
    ensure(good.verify_relation(&r1, &NCPoly::constant(-&ih)).map_err(e)?, "p x - q x p != -i hbar".into())?;
    ensure(good.verify_relation(&r2, &NCPoly::constant(ih.clone())).map_err(e)?, "x p+ - q p+ x != i hbar".into())?;
    let qp = system("qparticle", &p).map_err(e)?;
    let one = Scalar::from_int(1);
    let a = Scalar::new(rat(0, 1), rat(1, 20));
    let c0 = -(ih.clone() / (&one + &a));
    let lhs = &NCPoly::word("p x") - &NCPoly::word("x p").scale(&p.q_phase());
    ensure(qp.verify_relation(&lhs, &NCPoly::constant(c0)).map_err(e)?, "q-particle identity fails".into())?;
    let mut failures = Vec::new();
    for name in SYSTEMS.iter().filter(|n| **n != "eq5-wrong") {
        let r = system(name, &p).map_err(e)?;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let corpus: Vec<NCPoly> = (0..200).map(|_| r.random_poly(&mut rng, 3, 6)).collect();
        let bad = r.confluence_failures(&corpus).map_err(e)?;
        if bad > 0 {
            failures.push(format!("{name}: {bad}"));
        }
    }
    ensure(failures.is_empty(), format!("confluence failures {failures:?}"))?;
    Ok(format!("eq5 Jacobi 0, wrong ordering residual {res}; relations exact; 4x200 confluent"))
}

fn fock_residuals() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [4, 8, 16] {
        for q in [0.8, 0.9, 1.0] {
            let ops = multimode_ops(1, n, 1.0, q).map_err(e)?;
            worst = worst.max(relation_residuals(&ops, Algebra::Eq1).map_err(e)?.max_residual);
        }
    }
    ensure(worst <= 1e-12, format!("oscillator residual {worst:e}"))?;
    let ops = multimode_ops(2, 10, 1.0, 0.9).map_err(e)?;
    let r = relation_residuals(&ops, Algebra::Suqn).map_err(e)?;
    ensure(r.max_residual <= 1e-12, format!("covariant residuals {:?}", r.relations))?;
    let bad = multimode_with(2, 10, 1.0, 0.9, Dressing::Identity).map_err(e)?;
    let rb = relation_residuals(&bad, Algebra::Suqn).map_err(e)?;
    let ten = rb.relations.iter().find(|(n, _)| n == "10(i<j)").map(|r| r.1).unwrap_or(0.0);
    ensure(ten > 1e-3, format!("negative control residual only {ten:e}"))?;
    Ok(format!("eq1 {worst:.1e}, two-mode {:.1e}, control {ten:.3}", r.max_residual))
}

fn classical_limit() -> Outcome {
    let mut id: f64 = 0.0;
    for (h, beta) in [(0.1, 1.0), (0.25, 1.0), (0.5, 2.0)] {
        id = id.max(classical_identity_residual(16, h, beta).map_err(e)?);
    }
    ensure(id <= 1e-12, format!("operator identity residual {id:e}"))?;
    let hbars: Vec<f64> = (2..=12).map(|m| 0.5f64.powi(m)).collect();
    let scan = classical_limit_scan(1.0, 1.0, &hbars).map_err(e)?;
    ensure(scan.rows.windows(2).all(|w| w[1].error < w[0].error), "error not monotone".into())?;
    ensure((scan.order - 1.0).abs() <= 0.1, format!("log-log slope {}", scan.order))?;
    let profile = darboux_map_qosc1(1.0).map_err(e)?.profile(1.0).map_err(e)?;
    let gap = (scan.extrapolated - profile).abs();
    ensure(gap <= 1e-10, format!("extrapolated limit off by {gap:e}"))?;
    ensure((profile - (1.0 - (-1.0f64).exp())).abs() < 1e-15, "profile is not 1 - 1/e".into())?;
    Ok(format!("identity {id:.1e}; slope {:.4}; limit {:.12} (gap {gap:.1e})", scan.order, scan.extrapolated))
}

fn cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qdeform");
    let dir = std::env::temp_dir().join(format!("qdeform-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(e)?;
    let traj = dir.join("traj.csv");
    let examples: Vec<Vec<String>> = vec![
        "verify-jacobi --structure suqn --n 3 --beta 1".split(' ').map(String::from).collect(),
        vec![
            "flow", "--structure", "qosc1", "--beta", "2", "--H", "b* * b", "--b0", "1", "--t", "25", "--out",
            traj.to_str().unwrap(),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        "dirac verify --structure qparticle --beta 1 --samples 20".split(' ').map(String::from).collect(),
    ];
    let mut outputs = Vec::new();
    for args in &examples {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let out = Command::new(bin).args(args).output().map_err(e)?;
            ensure(out.status.code() == Some(0), format!("`{}` exited {:?}", args.join(" "), out.status.code()))?;
            runs.push(out.stdout);
        }
        ensure(runs[0] == runs[1], format!("`{}` is not deterministic", args.join(" ")))?;
        outputs.push(String::from_utf8_lossy(&runs[0]).into_owned());
    }
    let flow: serde_json::Value = serde_json::from_str(&outputs[1]).map_err(e)?;
    let f = flow["details"]["frequency"].as_f64().unwrap_or(f64::NAN);
    ensure((f - 0.5).abs() <= 1e-6 * 0.5, format!("flow frequency {f}"))?;
    let dirac: serde_json::Value = serde_json::from_str(&outputs[2]).map_err(e)?;
    let max = dirac["max_error"].as_f64().unwrap_or(f64::NAN);
    ensure(max <= 1e-10, format!("dirac max error {max:e}"))?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("3 examples exit 0, reports byte-identical; frequency {f:.9}, dirac {max:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Jacobi suite", jacobi_suite),
        ("Casimir", casimir),
        ("q-oscillator frequency-energy law", oscillator_frequency),
        ("q-particle friction law", particle_friction),
        ("Kähler chain consistency", kahler_chain),
        ("curvature", curvature),
        ("Dirac reduction", dirac),
        ("ncalg derivations", ncalg),
        ("Fock residuals", fock_residuals),
        ("classical limit", classical_limit),
        ("CLI determinism", cli),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
