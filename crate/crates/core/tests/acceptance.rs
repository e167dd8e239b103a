//! The fifteen acceptance criteria, one test each. Criteria run one at a
//! time so their runtime budgets are measured without contention, and each
//! writes its verdict line straight to stderr.

use std::io::Write;
use std::sync::Mutex;

use l2field::suite::{run_criterion, SUITE_SEED};

static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(id: u32) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let outcome = run_criterion(id, SUITE_SEED).expect("criterion runs");
    let _ = writeln!(std::io::stderr(), "{}", outcome.line());
    if !outcome.pass {
        for r in outcome.reports.iter().filter(|r| !r.pass) {
            let _ = writeln!(std::io::stderr(), "{}", r.to_json());
        }
    }
    assert!(outcome.passed(), "{}", outcome.line());
}

#[test]
fn c01_kernel_identities() {
    criterion(1);
}

#[test]
fn c02_grid_limit() {
    criterion(2);
}

#[test]
fn c03_si_exactness() {
    criterion(3);
}

#[test]
fn c04_self_similarity_orders() {
    criterion(4);
}

#[test]
fn c05_psd_boundaries() {
    criterion(5);
}

#[test]
fn c06_chentsov() {
    criterion(6);
}

#[test]
fn c07_takenaka() {
    criterion(7);
}

#[test]
fn c08_spectral_synthesis() {
    criterion(8);
}

#[test]
fn c09_levy_khintchine_schoenberg() {
    criterion(9);
}

#[test]
fn c10_random_measure() {
    criterion(10);
}

#[test]
fn c11_sampling_fidelity() {
    criterion(11);
}

#[test]
fn c12_rkhs_extension() {
    criterion(12);
}

#[test]
fn c13_characterization() {
    criterion(13);
}

#[test]
fn c14_measure_increment_stationarity() {
    criterion(14);
}

#[test]
fn c15_determinism() {
    criterion(15);
}
