use std::collections::HashMap;

use nalgebra::DMatrix;
use qdeform::darboux::darboux_map_qosc1;
use qdeform::fock::{
    classical_identity_residual, classical_limit_scan, interior_max, multimode_ops, multimode_with,
    ncpoly_matrix, q_number, qoscillator_ops, relation_residuals, Algebra, Dressing,
};
use qdeform::ncalg::{oscillator_system, system, NCPoly, Params};
use qdeform::scalar::rational_from_f64;
use qdeform::Error;

#[test]
fn undeformed_spectrum() {
    let l = qoscillator_ops(8, 1.0, 1.0).unwrap();
    let n = &l.bd * &l.b;
    for k in 0..7 {
        assert!((n[(k, k)] - k as f64).abs() < 1e-12);
    }
    assert!(n.is_square() && (n.clone() - DMatrix::from_diagonal(&n.diagonal())).amax() == 0.0);
}

#[test]
fn deformed_spectrum_recursion() {
    let (h, q): (f64, f64) = (0.5, 0.8);
    let l = qoscillator_ops(12, h, q).unwrap();
    let n = &l.bd * &l.b;
    // ħ[n] from the recursion [n] = 1 + q²[n−1]
    let mut br = 0.0;
    for k in 0..12 {
        if k > 0 {
            br = 1.0 + q * q * br;
        }
        assert!((n[(k, k)] - h * br).abs() < 1e-13);
    }
    // with 1 − q² = ħ/β the level is β(1 − (1 − ħ/β)^n)
    let beta = h / (1.0 - q * q);
    for k in 0..12 {
        let v = beta * (1.0 - (1.0 - h / beta).powi(k as i32));
        assert!((n[(k, k)] - v).abs() < 1e-12);
    }
}

#[test]
fn adjoint_pairs_are_exact() {
    let ops = multimode_ops(2, 6, 0.5, 0.9).unwrap();
    for (a, ad) in ops.a.iter().zip(&ops.ad) {
        assert_eq!(&a.transpose(), ad);
    }
}

#[test]
fn oscillator_residual_grid() {
    for n in [4, 8, 16] {
        for q in [0.8, 0.9, 1.0] {
            for h in [1.0, 0.5] {
                let ops = multimode_ops(1, n, h, q).unwrap();
                let r = relation_residuals(&ops, Algebra::Eq1).unwrap();
                assert!(r.max_residual <= 1e-12, "N={n} q={q} ħ={h}: {}", r.max_residual);
            }
        }
    }
}

#[test]
fn single_mode_matches_oscillator() {
    let ops = multimode_ops(1, 7, 0.5, 0.9).unwrap();
    let l = qoscillator_ops(7, 0.5, 0.9).unwrap();
    assert_eq!(ops.a[0], l.b);
}

#[test]
fn covariant_relations_two_modes() {
    let ops = multimode_ops(2, 10, 1.0, 0.9).unwrap();
    let r = relation_residuals(&ops, Algebra::Suqn).unwrap();
    assert_eq!(r.relations.len(), 5);
    for (name, v) in &r.relations {
        assert!(*v <= 1e-12, "{name}: {v}");
    }
    assert_eq!(r.interior_states, 81);
}

#[test]
fn covariant_relations_grid() {
    for n in [4, 8] {
        for q in [0.8, 0.9, 1.0] {
            for h in [1.0, 0.5] {
                let r = relation_residuals(&multimode_ops(2, n, h, q).unwrap(), Algebra::Suqn).unwrap();
                assert!(r.max_residual <= 1e-12);
            }
        }
    }
    let r3 = relation_residuals(&multimode_ops(3, 5, 0.5, 0.8).unwrap(), Algebra::Suqn).unwrap();
    assert!(r3.max_residual <= 1e-12);
}

#[test]
fn undeformed_modes_commute() {
    let ops = multimode_ops(2, 6, 1.0, 1.0).unwrap();
    let k = &ops.a[0] * &ops.ad[1] - &ops.ad[1] * &ops.a[0];
    assert_eq!(k.amax(), 0.0);
}

#[test]
fn undressed_modes_fail() {
    let ops = multimode_with(2, 10, 1.0, 0.9, Dressing::Identity).unwrap();
    let r = relation_residuals(&ops, Algebra::Suqn).unwrap();
    let ten = r.relations.iter().find(|(n, _)| n == "10(i<j)").unwrap().1;
    assert!(ten > 1e-3, "{ten}");
}

#[test]
fn classical_identity() {
    for (h, beta) in [(0.1, 1.0), (0.5, 2.0), (1.0, 3.0)] {
        assert!(classical_identity_residual(12, h, beta).unwrap() <= 1e-12);
    }
    assert!(matches!(classical_identity_residual(8, 2.0, 1.0), Err(Error::Parameter(_))));
}

#[test]
fn classical_limit_converges_at_first_order() {
    let hbars: Vec<f64> = (2..=12).map(|m| 0.5f64.powi(m)).collect();
    let scan = classical_limit_scan(1.0, 1.0, &hbars).unwrap();
    let limit = 1.0 - (-1.0f64).exp();
    assert!((scan.target - limit).abs() < 1e-15);
    for w in scan.rows.windows(2) {
        assert!(w[1].error < w[0].error);
    }
    assert!((scan.order - 1.0).abs() <= 0.1, "order {}", scan.order);
    let profile = darboux_map_qosc1(1.0).unwrap().profile(1.0).unwrap();
    assert!((scan.extrapolated - profile).abs() <= 1e-10, "{}", scan.extrapolated - profile);
}

#[test]
fn classical_limit_edge_cases() {
    let hbars = [0.25, 0.125, 0.0625];
    let zero = classical_limit_scan(1.0, 0.0, &hbars).unwrap();
    assert!(zero.rows.iter().all(|r| r.value == 0.0));
    let big = classical_limit_scan(1e6, 1.0, &[0.5f64.powi(10)]).unwrap();
    assert!((big.rows[0].value - 1.0).abs() <= 1e-5);
    assert!(matches!(classical_limit_scan(1.0, 1.0, &[1.0]), Err(Error::Parameter(_))));
}

#[test]
fn ncalg_identities_as_matrices() {
    let (hbar, beta): (f64, f64) = (0.25, 1.0);
    let q2 = 1.0 - hbar / beta;
    let sys = oscillator_system(&rational_from_f64(hbar).unwrap(), &rational_from_f64(q2).unwrap()).unwrap();
    let trunc = 10;
    let l = qoscillator_ops(trunc, hbar, q2.sqrt()).unwrap();
    let gens: HashMap<String, DMatrix<f64>> =
        [("b".to_string(), l.b.clone()), ("b+".to_string(), l.bd.clone())].into();
    for w in ["b b+", "b b+ b+", "b b b+ b+", "b+ b b+ b", "b b+ b b+ b+"] {
        let word = NCPoly::word(w);
        let nf = sys.normal_form(&word).unwrap();
        let diff = &ncpoly_matrix(&word, &gens, trunc).unwrap() - &ncpoly_matrix(&nf, &gens, trunc).unwrap();
        // words of length d need d − 1 levels of headroom
        let margin = word.degree() - 1;
        assert!(interior_max(&diff, margin) <= 1e-12, "{w}");
    }
    // q-number oracle for b b+ b+
    let expect = q2 * q2;
    let nf = sys.normal_form(&NCPoly::word("b b+ b+")).unwrap();
    assert!((nf.coefficient(&["b+", "b+", "b"]).to_c64().re - expect).abs() < 1e-15);
    assert!((q_number(2, q2.sqrt()) - (1.0 + q2)).abs() < 1e-15);
}

#[test]
fn default_system_identities_as_matrices() {
    // eq1 at the default ħ = 1/10, β = 1
    let sys = system("eq1", &Params::default()).unwrap();
    let l = qoscillator_ops(8, 0.1, 0.9f64.sqrt()).unwrap();
    let gens: HashMap<String, DMatrix<f64>> = [("b".into(), l.b), ("b+".into(), l.bd)].into();
    let word = NCPoly::word("b b b+");
    let nf = sys.normal_form(&word).unwrap();
    let diff = &ncpoly_matrix(&word, &gens, 8).unwrap() - &ncpoly_matrix(&nf, &gens, 8).unwrap();
    assert!(interior_max(&diff, 2) <= 1e-12);
}
