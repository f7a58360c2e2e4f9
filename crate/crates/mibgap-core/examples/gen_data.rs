//! One-off generator for the data files shipped with the CLI crate.
use mibgap_core::engine::GapVerdict;
use mibgap_core::json;
use mibgap_core::mib::{Assignment, BilinearRow, Form, LinearBlock, MibSystem};
use mibgap_core::mpta::alternating_example;
use mibgap_core::num::{int, rat, rat_int, Int};

fn main() {
    let dir = std::env::args().nth(1).expect("target directory");
    let write = |name: &str, text: String| {
        std::fs::write(format!("{dir}/{name}"), text).expect("write data file");
    };
    write("alternating.json", json::canonical(&json::mpta_to_json(&alternating_example(false))));
    write(
        "alternating_neg.json",
        json::canonical(&json::mpta_to_json(&alternating_example(true))),
    );

    // constant-ledger reference instance: 2 x y <= 1, 0 <= y <= 1, x >= 0
    let iv = |v: &[i64]| -> Vec<Int> { v.iter().map(|&x| int(x)).collect() };
    let reference = MibSystem::new(
        1,
        1,
        vec![BilinearRow { a: vec![iv(&[2])], b: iv(&[0]), c: int(1) }],
        MibSystem::standard_int_block(1),
        LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
        Form::Standard,
    )
    .expect("valid reference instance");
    write("reference_m1.json", json::canonical(&json::mib_to_json(&reference)));

    // golden witness for the chain instance of length 2 at eps = 1/8
    let verdict = GapVerdict::Sat {
        assignment: Assignment {
            x: iv(&[2, 5]),
            y: vec![rat_int(1), rat(7, 16), rat(1, 8)],
        },
        margin: rat(1, 8),
    };
    write(
        "doubleexp_n2_witness.json",
        json::canonical(&json::solve_report_to_json(&rat(1, 8), &verdict, 0, None)),
    );

    // golden constant ledger of the reference instance at eps = 1/2
    let ledger = mibgap_core::relax::compute_constants(&reference, &rat(1, 2))
        .expect("reference ledger");
    write("reference_ledger.json", json::canonical(&json::ledger_to_json(&ledger)));
}
