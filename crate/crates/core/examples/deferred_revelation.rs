//! One run of the committed-bid protocol, with the ledger dumped and replayed.
use credauct::dra::{replay_ledger, run_dra, CollateralRule, DraConfig, Honest};
use credauct::matroid::Matroid;
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    let cfg = DraConfig::new(
        Matroid::uniform(1, 3)?,
        vec![VirtualValueProfile::exponential(1.0)?; 3],
        CollateralRule::MaxReserve { upper_bound: None },
    )?;
    let r = run_dra(&cfg, &Honest, &[1.8, 0.4, 2.9], 11)?;
    println!("collateral {:.4}", r.collateral);
    println!("allocation {:?} payments {:?}", r.outcome.allocation, r.outcome.payments);
    println!("auctioneer net {:.6}", r.auctioneer_net);

    let path = std::env::temp_dir().join("credauct_dra_ledger.jsonl");
    r.ledger.dump(&path)?;
    let back = credauct::ledger::Ledger::load(&path)?;
    let s = replay_ledger(&back)?;
    println!("replayed {} entries, same allocation: {}", back.entries().len(), s.outcome.allocation == r.outcome.allocation);
    Ok(())
}
