//! Sweep one physical parameter and report how far coupled and decoupled tips end up apart.
//!
//! `cargo run --example sweep -- m_u`

use acm_sim::dynamics::AcmParams;
use acm_sim::simulation::{builtin_scenario, parameter_sweep, SweepAxis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let axis: SweepAxis = std::env::args().nth(1).unwrap_or_else(|| "r_a".into()).parse()?;
    let mut scenario = builtin_scenario(axis.default_scenario())?;
    scenario.duration = 1.0;
    let values = axis.default_values();
    for point in parameter_sweep(&scenario, &AcmParams::default(), axis, &values) {
        match point.result {
            Ok((c, d)) => {
                let gap = (c.tip_positions.last().unwrap() - d.tip_positions.last().unwrap()).norm();
                println!("{}={:<10} final tip gap {:.3e} m", axis.name(), point.value, gap);
            }
            Err(e) => println!("{}={:<10} failed: {e}", axis.name(), point.value),
        }
    }
    Ok(())
}
