//! Cross-module integration: access tables against decoders, code checks and
//! the scheme file surface.

use qss_core::access::{analyze_access_structure, AccessClass, DEFAULT_TOL};
use qss_core::decoder::synthesize_decoder;
use qss_core::qecc::{correctable_erasure, distance};
use qss_core::scheme::{
    cgl23_scheme, five_qubit_scheme, ghz_scheme, reed_solomon_scheme, scheme_from_str,
};
use qss_core::Error;

#[test]
fn handwritten_fixture_matches_builtin_up_to_column_phases() {
    let text = include_str!("fixtures/cgl23_explicit.scheme");
    let loaded = scheme_from_str(text).unwrap();
    let builtin = cgl23_scheme();
    assert_eq!(loaded.name(), "cgl23_handwritten");
    for col in 0..3 {
        let overlap = loaded
            .encoding()
            .column(col)
            .dotc(&builtin.encoding().column(col))
            .norm();
        assert!(
            (overlap - 1.0).abs() < 1e-12,
            "column {col} differs beyond a phase: |overlap| = {overlap}"
        );
    }
    // the phase twist does not change the access structure
    let report = analyze_access_structure(&loaded, DEFAULT_TOL).unwrap();
    assert_eq!(report.ramp.k, Some(2));
    assert_eq!(report.ramp.k_prime, 1);
}

#[test]
fn reed_solomon_25_reproduces_the_cgl23_table() {
    let rs = analyze_access_structure(&reed_solomon_scheme(2, 5).unwrap(), DEFAULT_TOL).unwrap();
    let cgl = analyze_access_structure(&cgl23_scheme(), DEFAULT_TOL).unwrap();
    assert_eq!(rs.ramp.k, cgl.ramp.k);
    assert_eq!(rs.ramp.k_prime, cgl.ramp.k_prime);
    assert_eq!(rs.rcq_ramp.k, cgl.rcq_ramp.k);
    for (a, b) in rs.classifications.iter().zip(&cgl.classifications) {
        assert_eq!(a.players, b.players);
        assert_eq!(a.qq_class, b.qq_class);
        assert_eq!(a.rcq_class, b.rcq_class);
    }
}

#[test]
fn reed_solomon_37_is_a_midpoint_threshold() {
    let s = reed_solomon_scheme(3, 7).unwrap();
    assert_eq!(distance(&s).unwrap(), 3);
    // threshold k = (n+1)/2 for (k, 2k-1) schemes
    assert_eq!(s.claimed_ramp().unwrap().k, s.n_total().div_ceil(2));
}

#[test]
fn two_basis_and_all_basis_rcq_classes_agree_on_bundled_schemes() {
    // the classification from the first two bases never differs from the
    // all-bases one on the bundled constructions; both stay in the report
    for scheme in [
        cgl23_scheme(),
        five_qubit_scheme(),
        reed_solomon_scheme(2, 5).unwrap(),
        ghz_scheme(3, 2).unwrap(),
        ghz_scheme(4, 3).unwrap(),
    ] {
        let report = analyze_access_structure(&scheme, DEFAULT_TOL).unwrap();
        for c in &report.classifications {
            assert_eq!(
                c.rcq_class,
                c.rcq_class_two_bases,
                "{}: {:?}",
                scheme.name(),
                c.players
            );
        }
    }
}

#[test]
fn ghz_family_is_all_or_nothing() {
    for n in 2..=4usize {
        for q in 2..=3usize {
            let report =
                analyze_access_structure(&ghz_scheme(n, q).unwrap(), DEFAULT_TOL).unwrap();
            assert_eq!(report.ramp.k, Some(n), "ghz({n},{q})");
            assert_eq!(report.ramp.k_prime, 0, "ghz({n},{q})");
            assert!(report.equivalence.all_pass, "ghz({n},{q})");
        }
    }
}

#[test]
fn decoder_synthesis_agrees_with_the_access_table() {
    for scheme in [
        cgl23_scheme(),
        five_qubit_scheme(),
        reed_solomon_scheme(2, 5).unwrap(),
        ghz_scheme(3, 2).unwrap(),
    ] {
        let report = analyze_access_structure(&scheme, DEFAULT_TOL).unwrap();
        for c in &report.classifications {
            let synthesized = synthesize_decoder(&scheme, &c.players);
            match c.qq_class {
                AccessClass::Authorised => {
                    assert!(
                        synthesized.is_ok(),
                        "{}: decoder missing for authorised {:?}",
                        scheme.name(),
                        c.players
                    );
                }
                _ => {
                    assert!(
                        matches!(synthesized, Err(Error::NotAuthorized { .. })),
                        "{}: decoder should fail for {:?}",
                        scheme.name(),
                        c.players
                    );
                }
            }
        }
    }
}

#[test]
fn erasure_duality_matches_access_for_every_pure_scheme() {
    for scheme in [
        cgl23_scheme(),
        five_qubit_scheme(),
        reed_solomon_scheme(2, 5).unwrap(),
        ghz_scheme(2, 2).unwrap(),
        ghz_scheme(4, 2).unwrap(),
    ] {
        let report = analyze_access_structure(&scheme, DEFAULT_TOL).unwrap();
        let n = scheme.n_total();
        for mask in 1usize..(1 << n) {
            let erased: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
            if erased.len() == n {
                continue;
            }
            let (correctable, _) = correctable_erasure(&scheme, &erased).unwrap();
            let rest: Vec<usize> = (0..n).filter(|p| !erased.contains(p)).collect();
            let authorised = report.is_qq_authorised(&rest).unwrap();
            assert_eq!(
                correctable,
                authorised,
                "{}: erasure {:?}",
                scheme.name(),
                erased
            );
        }
    }
}
