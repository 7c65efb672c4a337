//! Track one letter path with the visual servo in both model modes.
//!
//! `cargo run --release --example servo -- A 10`

use acm_sim::analysis::ds_metric;
use acm_sim::dynamics::{AcmModel, AcmParams, ModelMode};
use acm_sim::servo::{run_servo, PathSpec, ServoConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let letter = args.next().unwrap_or_else(|| "L".into());
    let horizon: f64 = args.next().map_or(Ok(10.0), |s| s.parse())?;
    let model = AcmModel::new(AcmParams::default())?;
    let cfg = ServoConfig { horizon, ..Default::default() };
    let path = PathSpec::letter(&letter)?;
    let c = run_servo(&model, &cfg, Some(path.clone()), ModelMode::Coupled)?;
    let d = run_servo(&model, &cfg, Some(path), ModelMode::Decoupled)?;
    for tr in [&c, &d] {
        let s = &tr.summary;
        println!(
            "{letter} {:<9} final {:.3} px  max {:.3} px  V increases {}/{}",
            tr.mode.as_str(),
            s.final_e_px,
            s.max_e_px,
            s.monitor_violations,
            s.monitor_checks
        );
    }
    let ds = ds_metric(&c.error_samples(), &d.error_samples())?;
    let (t, v) = ds.iter().copied().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap_or_default();
    println!("max |DS| {:.4} px at t={t:.2} s", v.abs());
    Ok(())
}
