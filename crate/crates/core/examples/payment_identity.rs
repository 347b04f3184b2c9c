//! Monte Carlo check that expected revenue equals expected virtual surplus.
use credauct::matroid::Matroid;
use credauct::mechanism::payment_identity_check;
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    let m = Matroid::uniform(2, 4)?;
    let p = vec![VirtualValueProfile::exponential(1.0)?, VirtualValueProfile::uniform(0.0, 3.0)?]
        .into_iter()
        .cycle()
        .take(4)
        .collect::<Vec<_>>();
    let r = payment_identity_check(&m, &p, 200_000, 7, 4)?;
    println!("revenue         {:.5} ± {:.5}", r.revenue.mean, r.revenue.std_err);
    println!("virtual surplus {:.5} ± {:.5}", r.virtual_surplus.mean, r.virtual_surplus.std_err);
    println!("holds at 4 sigma: {}", r.holds(4.0));
    Ok(())
}
