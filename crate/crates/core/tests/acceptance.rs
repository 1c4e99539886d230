//! One test per acceptance criterion, each printing a pass/fail line.

use teich::acceptance::{format_table, run_criterion, SuiteConfig};

fn check(id: u32) {
    let r = run_criterion(id, &SuiteConfig::default());
    print!("{}", format_table(std::slice::from_ref(&r)));
    assert!(r.passed, "criterion {id} ({}) failed: {}", r.name, r.detail);
}

#[test]
fn criterion_01_schottky_determinant() {
    check(1);
}

#[test]
fn criterion_02_fixed_point_cross_ratio() {
    check(2);
}

#[test]
fn criterion_03_tate_specialization() {
    check(3);
}

#[test]
fn criterion_04_anti_homomorphism() {
    check(4);
}

#[test]
fn criterion_05_coordinate_counts() {
    check(5);
}

#[test]
fn criterion_06_kz_engine() {
    check(6);
}

#[test]
fn criterion_07_associator_relations() {
    check(7);
}

#[test]
fn criterion_08_half_dehn() {
    check(8);
}

#[test]
fn criterion_09_free_algebra() {
    check(9);
}

#[test]
fn criterion_10_hopf() {
    check(10);
}

#[test]
fn criterion_11_iterated_integrals() {
    check(11);
}

#[test]
fn criterion_12_groupoid_evaluation() {
    check(12);
}
