//! Separate private views per bidder: gain of a fee-charging deviation.
use credauct::deviations::{private_kk_simulation, FeePolicy};

fn main() -> credauct::Result<()> {
    for k in [2, 10, 31] {
        let r = private_kk_simulation(k, 0.1, 1.0, FeePolicy::Always, 200_000, 1, 4)?;
        println!("k {k:>2}: gap {:+.5} ± {:.5}, predicted {:+.5}", r.estimate.gap.mean, r.estimate.gap.std_err, r.predicted);
    }
    Ok(())
}
