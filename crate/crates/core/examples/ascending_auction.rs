//! Ascending deferred-revelation auction against its sealed-bid counterpart.
use credauct::adra::{level_bound, run_adra, AdraConfig};
use credauct::dra::Honest;
use credauct::matroid::Matroid;
use credauct::mechanism::{run_sealed, Bid};
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    let m = Matroid::complete_graph(4)?;
    let p = vec![VirtualValueProfile::exponential(1.0)?; m.ground_size()];
    let cfg = AdraConfig::new(m.clone(), p.clone())?;
    let values = [0.3, 2.2, 1.4, 3.1, 0.9, 1.9];
    let r = run_adra(&cfg, &Honest, &values, 5)?;
    println!("levels used {} (bound {})", r.levels_used, level_bound(&cfg.rule, values.iter().map(|&v| p[0].ironed_virtual_value(v)).fold(0.0, f64::max)));
    for (level, who, pr) in &r.promise_log {
        println!("level {level}: bidder {who} promised at {:.6}", pr.price);
    }
    let bids: Vec<Bid> = values.iter().enumerate().map(|(i, &v)| Bid { bidder: i, amount: v, profile: i }).collect();
    let s = run_sealed(&m, &bids, &p)?;
    println!("ascending {:?}", r.outcome.payments);
    println!("sealed    {:?}", s.payments);
    Ok(())
}
