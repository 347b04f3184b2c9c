//! Sealed-bid revenue-optimal auction on a graphic matroid.
use credauct::matroid::Matroid;
use credauct::mechanism::{run_sealed, Bid};
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    // Triangle: any two edges can be sold, never all three.
    let m = Matroid::complete_graph(3)?;
    let profiles = vec![VirtualValueProfile::exponential(1.0)?; 3];
    let values = [2.4, 1.7, 0.6];
    let bids: Vec<Bid> = values.iter().enumerate().map(|(i, &v)| Bid { bidder: i, amount: v, profile: i }).collect();
    let out = run_sealed(&m, &bids, &profiles)?;
    println!("allocation {:?}", out.allocation);
    for (i, p) in &out.payments {
        println!("bidder {i} pays {p:.6}");
    }
    println!("virtual surplus {:.6}", out.virtual_surplus);
    Ok(())
}
