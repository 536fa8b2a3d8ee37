use num_complex::Complex64;
use qdeform::builtins::{builtin, Builtin};
use qdeform::expr::parse_poly;
use qdeform::flow::{
    analytic_qoscillator, analytic_qparticle, hamiltonian_vector_field, integrate,
    measure_frequency, FlowConfig,
};
use qdeform::poisson::Beta;
use qdeform::poly::PolyExpr;
use qdeform::scalar::rat;
use qdeform::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn beta(n: i64, d: i64) -> Beta {
    Beta::value(rat(n, d)).unwrap()
}

#[test]
fn vector_fields_match_closed_forms() {
    let q = builtin(Builtin::Qosc1, Beta::Symbolic).unwrap();
    let f = hamiltonian_vector_field(&q, &parse_poly("b* * b").unwrap()).unwrap();
    assert_eq!(f[0], parse_poly("-i*(1 - b* * b/beta)*b").unwrap());

    let qp = builtin(Builtin::Qparticle, Beta::Symbolic).unwrap();
    let f = hamiltonian_vector_field(&qp, &parse_poly("p^2/2").unwrap()).unwrap();
    assert_eq!(f[0], parse_poly("p + x*p^2/beta").unwrap());
    assert!(f[1].is_zero());

    let can = builtin(Builtin::Canonical(1), Beta::Symbolic).unwrap();
    let f = hamiltonian_vector_field(&can, &parse_poly("p^2/2").unwrap()).unwrap();
    assert_eq!(f, vec![PolyExpr::var("p"), PolyExpr::zero()]);
}

#[test]
fn qoscillator_frequency_depends_on_energy() {
    let s = builtin(Builtin::Qosc1, beta(2, 1)).unwrap();
    let h = parse_poly("b* * b").unwrap();
    let cfg = FlowConfig::new(4.0 * std::f64::consts::PI, 801);
    let traj = integrate(&s, &h, &[c(1.0, 0.0), c(1.0, 0.0)], &cfg).unwrap();
    let nu = measure_frequency(&traj.times, &traj.component("b").unwrap()).unwrap();
    assert!((nu - 0.5).abs() / 0.5 <= 1e-6, "nu = {nu}");
    // Period 4π: back to the start.
    let end = traj.points.last().unwrap();
    assert!((end[0] - c(1.0, 0.0)).norm() < 1e-8);
    assert!(traj.monitor_max("energy_drift").unwrap() <= 1e-9);
    assert!(traj.monitor_max("conjugation_defect").unwrap() <= 1e-9);
}

#[test]
fn qparticle_moves_like_a_particle_with_friction() {
    let s = builtin(Builtin::Qparticle, beta(1, 1)).unwrap();
    let h = parse_poly("p^2/2").unwrap();
    let traj = integrate(&s, &h, &[c(0.0, 0.0), c(1.0, 0.0)], &FlowConfig::new(3.0, 61)).unwrap();
    for (t, y) in traj.times.iter().zip(&traj.points) {
        let oracle = t.exp_m1(); // ẋ = x + 1, x(0) = 0
        assert!((y[0].re - oracle).abs() <= 1e-8 * oracle.abs().max(1e-300) || *t == 0.0);
        assert_eq!(y[1], c(1.0, 0.0));
        let (x, p) = analytic_qparticle(0.0, 1.0, 1.0, *t).unwrap();
        assert!((x - oracle).abs() <= 1e-13 * oracle.max(1.0) && p == 1.0);
    }
}

#[test]
fn lattice_flow_stays_on_casimir_surface() {
    let s = builtin(Builtin::Lattice, beta(1, 1)).unwrap();
    let h = parse_poly("p * p*").unwrap();
    let p0 = c(0.6, -0.3);
    let traj = integrate(&s, &h, &[c(0.4, 0.0), p0, p0.conj()], &FlowConfig::new(10.0, 201)).unwrap();
    assert!(traj.monitor_max("casimir_0_drift").unwrap() <= 1e-9);
    assert!(traj.monitor_max("energy_drift").unwrap() <= 1e-9);
    assert!(traj.monitor_max("conjugation_defect").unwrap() <= 1e-9);
}

#[test]
fn energy_is_conserved_for_real_hamiltonians() {
    let cases: Vec<(Builtin, &str, Vec<Complex64>)> = vec![
        (Builtin::Canonical(2), "p1^2/2 + x1^2/2 + x2*p2 + x1*x2/3", vec![c(0.3, 0.0), c(-0.2, 0.0), c(0.1, 0.0), c(0.5, 0.0)]),
        (Builtin::Suqn(2), "a1* * a1 + 2*a2* * a2", vec![c(0.2, 0.1), c(0.1, -0.3), c(0.2, -0.1), c(0.1, 0.3)]),
        (Builtin::Diag(2), "z1* * z1 + z2* * z2 + z1* * z1 * z2* * z2", vec![c(0.3, 0.2), c(-0.1, 0.2), c(0.3, -0.2), c(-0.1, -0.2)]),
    ];
    for (which, h, start) in cases {
        let s = builtin(which, beta(3, 1)).unwrap();
        let traj = integrate(&s, &parse_poly(h).unwrap(), &start, &FlowConfig::new(5.0, 51)).unwrap();
        assert!(traj.monitor_max("energy_drift").unwrap() <= 1e-9, "{which}");
        assert!(traj.monitor_max("conjugation_defect").unwrap() <= 1e-9, "{which}");
    }
}

#[test]
fn tighter_tolerances_reduce_error() {
    let s = builtin(Builtin::Qosc1, beta(2, 1)).unwrap();
    let h = parse_poly("b* * b").unwrap();
    let b0 = c(0.8, 0.3);
    let errors: Vec<f64> = [1e-4, 1e-6, 1e-8]
        .iter()
        .map(|&tol| {
            let mut cfg = FlowConfig::new(20.0, 3).with_tolerances(tol, tol * 1e-2);
            cfg.max_step = 10.0;
            let traj = integrate(&s, &h, &[b0, b0.conj()], &cfg).unwrap();
            traj.times
                .iter()
                .zip(&traj.points)
                .map(|(t, y)| (y[0] - analytic_qoscillator(b0, 1.0, 2.0, *t)).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn undeformed_limit_is_order_one_over_beta() {
    let b0 = c(0.7, 0.2);
    for big in [1e4, 1e6] {
        let x = analytic_qoscillator(b0, 1.0, big, 2.0);
        let y = analytic_qoscillator(b0, 1.0, f64::INFINITY, 2.0);
        // First-order term: b0 · (i|b0|²t/β) e^{-it}.
        assert!((x - y).norm() <= 2.0 * b0.norm() * b0.norm_sqr() * 2.0 / big);
        let (xq, _) = analytic_qparticle(0.2, 0.5, big, 3.0).unwrap();
        assert!((xq - (0.2 + 1.5)).abs() <= 10.0 / big);
    }
}

#[test]
fn bad_inputs_are_reported() {
    let s = builtin(Builtin::Qosc1, beta(2, 1)).unwrap();
    let h = parse_poly("b* * b").unwrap();
    let cfg = FlowConfig::new(1.0, 5);
    assert!(matches!(integrate(&s, &h, &[c(1.0, 0.0), c(0.5, 0.0)], &cfg), Err(Error::Domain(_))));
    assert!(matches!(integrate(&s, &h, &[c(1.0, 0.0)], &cfg), Err(Error::Size(_))));
    let sym = builtin(Builtin::Qosc1, Beta::Symbolic).unwrap();
    assert!(matches!(integrate(&sym, &h, &[c(1.0, 0.0), c(1.0, 0.0)], &cfg), Err(Error::Parameter(_))));
}

#[test]
fn blow_up_is_an_integration_error() {
    // ẋ = x² on the canonical chart blows up at t = 1/x₀.
    let s = builtin(Builtin::Canonical(1), beta(1, 1)).unwrap();
    let h = parse_poly("p*x^2").unwrap();
    let cfg = FlowConfig::new(3.0, 4);
    match integrate(&s, &h, &[c(1.0, 0.0), c(0.0, 0.0)], &cfg) {
        Err(Error::Integration { t, last_state, .. }) => {
            assert!(t < 1.0 && t > 0.9);
            assert_eq!(last_state.len(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_and_json_exports() {
    let s = builtin(Builtin::Qosc1, beta(2, 1)).unwrap();
    let traj = integrate(&s, &parse_poly("b* * b").unwrap(), &[c(1.0, 0.0), c(1.0, 0.0)], &FlowConfig::new(1.0, 3)).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "time,b.re,b.im,b*.re,b*.im,energy_drift,conjugation_defect");
    assert_eq!(text.lines().count(), 4);
    let json: serde_json::Value = serde_json::from_str(&traj.to_json().unwrap()).unwrap();
    assert_eq!(json["structure"], "qosc1");
    assert_eq!(json["beta"], "2");
    assert_eq!(json["times"].as_array().unwrap().len(), 3);
}
