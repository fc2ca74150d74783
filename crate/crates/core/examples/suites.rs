//! Run verification suites from code and write their CSV rows.
//! `cargo run --example suites -- 4 10` picks suites by id.

use radcomplex::suite::{run_suite, write_csv, SUITES};

fn main() -> radcomplex::Result<()> {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { vec![1, 4, 10] } else { ids };
    let mut rows = Vec::new();
    for id in ids {
        let outcome = run_suite(id, 7)?;
        println!("{}", outcome.line());
        rows.extend(outcome.rows);
    }
    println!("\navailable: {:?}\n", SUITES);
    write_csv(&rows[..rows.len().min(5)], std::io::stdout()).expect("stdout");
    Ok(())
}
