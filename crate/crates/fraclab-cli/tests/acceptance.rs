//! Acceptance suite: one test per verification criterion, each printing its
//! pass/fail line. Criterion 6 is expected to report a genuinely sub-band
//! nondegeneracy margin at the near-critical configuration (s, lambda, p) =
//! (0.25, 0, 2.5); see the failure message for the measured values.

use fraclab_cli::verify;

fn run(f: verify::CriterionFn) {
    let result = f(1.0);
    println!("{}", result.line());
    for d in &result.details {
        println!("    {d}");
    }
    assert!(
        result.passed,
        "criterion {} [{}] failed:\n{}",
        result.id,
        result.name,
        result.details.join("\n")
    );
}

#[test]
fn criterion_01_operator_correctness() {
    run(verify::c01_operator);
}

#[test]
fn criterion_02_benjamin_ono_soliton() {
    run(verify::c02_soliton);
}

#[test]
fn criterion_03_first_eigenvalue_normalization() {
    run(verify::c03_first_eigenvalue);
}

#[test]
fn criterion_04_ball_antisymmetric_gap() {
    run(verify::c04_ball_gap);
}

#[test]
fn criterion_05_line_translation_mode() {
    run(verify::c05_line_translation);
}

#[test]
fn criterion_06_full_nondegeneracy() {
    run(verify::c06_full_nondegeneracy);
}

#[test]
fn criterion_07_picone_identity() {
    run(verify::c07_picone);
}

#[test]
fn criterion_08_extension_stack() {
    run(verify::c08_extension);
}

#[test]
fn criterion_09_integration_by_parts() {
    run(verify::c09_pohozaev);
}

#[test]
fn criterion_10_courant_nodal_structure() {
    run(verify::c10_courant);
}

#[test]
fn criterion_11_uniqueness_probes() {
    run(verify::c11_uniqueness);
}

#[test]
fn criterion_12_branch_sweep() {
    run(verify::c12_branch);
}
