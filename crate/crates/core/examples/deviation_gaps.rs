//! Closed-form deviation gains under too little collateral.
use credauct::deviations::{first_positive_delta, gap_1n, gap_kk, gap_single, private_sep_gain};

fn main() -> credauct::Result<()> {
    let (d, e) = (0.1, 0.1);
    println!("single  {:+.7}", gap_single(d, e)?);
    println!("k=k=2   {:+.7}", gap_kk(2, d, e)?);
    println!("1 of 2  {:+.7}", gap_1n(2, d, e)?);
    println!("private k=31 {:+.4}", private_sep_gain(31, d)?);

    // Full collateral (eps = 0) never pays; any shortfall does for small delta.
    for delta in [0.01, 0.1, 0.5, 1.0] {
        println!("delta {delta:<4}: eps 0 {:+.6}  eps 0.05 {:+.6}", gap_single(delta, 0.0)?, gap_single(delta, 0.05)?);
    }
    println!("first positive delta at eps 0.05: {:?}", first_positive_delta(0.05, 1e-3, 2.0)?);
    Ok(())
}
