//! The clipped estimate never lies farther from any target than the worse
//! of its two components, whatever the correction term does.
//!
//!     cargo run --release --example clip_safety

use dracc::estimators::EstimateBundle;

fn main() {
    let (or, ipw) = (209.2, 212.5);
    println!("OR = {or}, IPW = {ipw}");
    println!("{:>8} {:>9} {:>9} {:>7}", "C", "DR", "DR+ACC", "lambda");
    for c in [195.0, 205.0, 209.2, 210.0, 211.7, 212.5, 220.0, 260.0] {
        let b = EstimateBundle::from_components(or, ipw, c, 1000);
        println!(
            "{c:>8.1} {:>9.3} {:>9.3} {:>7.3}",
            b.theta_dr, b.theta_acc, b.lambda_hat
        );
        for t in [150.0, 210.0, 215.0] {
            let worst = (or - t).abs().max((ipw - t).abs());
            assert!((b.theta_acc - t).abs() <= worst);
        }
    }
}
