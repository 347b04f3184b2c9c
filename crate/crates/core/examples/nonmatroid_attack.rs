//! Profitable auctioneer deviations once the constraint is not a matroid.
use credauct::deviations::{creative_attack_gain, fixed_attack_gain, fixed_nonmatroid_attack, simulate_relaxed_gap};
use credauct::dra::CollateralRule;
use credauct::matroid::DownwardClosedFamily;
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    let fam = DownwardClosedFamily::from_lists(3, &[&[0, 1], &[2]])?;
    let f = 1.0;
    let atk = fixed_nonmatroid_attack(&fam, f)?;
    let p = vec![VirtualValueProfile::exponential(1.0)?];
    let g = simulate_relaxed_gap(&atk.truth(), &p, &CollateralRule::Fixed { f }, &atk, 1_000_000, 9, 4)?;
    println!("fixed attack: simulated {:.6} ± {:.6}, predicted {:.6}", g.gap.mean, g.gap.std_err, fixed_attack_gain(atk.x_count, f));
    println!("creative attack predicted gain at f={f}: {:.6}", creative_attack_gain(f));
    Ok(())
}
