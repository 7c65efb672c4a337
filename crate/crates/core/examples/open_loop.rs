//! Run one built-in open-loop scenario in both modes and print a short summary.
//!
//! `cargo run --example open_loop -- testC`

use acm_sim::dynamics::AcmParams;
use acm_sim::simulation::{builtin_scenario, run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "testB".into());
    let scenario = builtin_scenario(&name)?;
    let out = run(&scenario, &AcmParams::default())?;
    for tr in out.traces() {
        let e = tr.total_energy();
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0].abs().max(1e-12);
        let mut wall = tr.timed_steps().to_vec();
        wall.sort_by(f64::total_cmp);
        let tip = tr.tip_positions.last().unwrap();
        println!(
            "{:<10} steps={} tip=({:.4}, {:.4}, {:.4}) energy_drift={:.3e} median_step={:.2} us",
            tr.mode,
            tr.len() - 1,
            tip.x,
            tip.y,
            tip.z,
            drift,
            wall.get(wall.len() / 2).copied().unwrap_or(0.0) * 1e6
        );
    }
    Ok(())
}
