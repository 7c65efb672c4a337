//! Check the model against finite-difference and quadrature oracles.
//!
//! `cargo run --release --example selftest -- 100`

use acm_sim::dynamics::AcmParams;
use acm_sim::selftest::run_all;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(40), |s| s.parse())?;
    let checks = run_all(&AcmParams::default(), 7, n)?;
    for c in &checks {
        println!("{}", c.line());
    }
    if checks.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
    Ok(())
}
