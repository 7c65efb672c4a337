//! Tip pose and Jacobian of the arm on a hovering base for a few curvatures.
//!
//! `cargo run --example kinematics`

use acm_sim::dynamics::AcmParams;
use acm_sim::kinematics::GeneralizedState;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AcmParams::default();
    let geom = params.geometry();
    for kappa in [0.0, 0.5, 1.0, 2.0] {
        let st = GeneralizedState::hover(1.5, kappa);
        let pose = geom.tip_pose(&st)?;
        let j = geom.tip_jacobian(&st)?;
        let p = pose.position;
        println!("kappa={kappa:<4} tip=({:.4}, {:.4}, {:.4})", p.x, p.y, p.z);
        println!("  d tip / d kappa = ({:.4}, {:.4}, {:.4})", j[(0, 6)], j[(1, 6)], j[(2, 6)]);
    }
    Ok(())
}
