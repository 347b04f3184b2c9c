//! Searches fake-bid strategies for one that beats honest play.
use credauct::dra::{credibility_scan, CollateralRule, DraConfig, PolicyKind, ScanGrid};
use credauct::matroid::Matroid;
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    let profiles = vec![VirtualValueProfile::exponential(1.0)?];
    let grid = ScanGrid {
        offsets: vec![0.1, 0.5],
        targets: vec![0],
        policies: vec![PolicyKind::IntervalTarget],
        uniform_extension: false,
    };
    for f in [1.0, 0.9] {
        let cfg = DraConfig::new(Matroid::uniform(1, 1)?, profiles.clone(), CollateralRule::Fixed { f })?;
        let r = credibility_scan(&cfg, &grid.strategies(&cfg), 400_000, 3, 4, 4.0)?;
        println!("f = {f}: honest net {:.5}", r.honest.mean);
        for row in &r.rows {
            println!("  {:<40} excess {:+.5} ± {:.5} flagged {}", row.strategy.label(), row.excess.mean, row.excess.std_err, row.flagged);
        }
    }
    Ok(())
}
