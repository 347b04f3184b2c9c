//! Virtual values, ironing and reserves for built-in and tabulated distributions.
use credauct::valuedist::VirtualValueProfile;

fn main() -> credauct::Result<()> {
    let e = VirtualValueProfile::exponential(1.0)?;
    let u = VirtualValueProfile::uniform(1.0, 2.0)?;
    for (name, p) in [("exp(1)", &e), ("U[1,2]", &u)] {
        println!(
            "{name}: reserve {:.4}, phi(1.5) {:.4}, phi^-1(0.5) {:.4}",
            p.monopoly_reserve(),
            p.virtual_value(1.5),
            p.inverse_virtual_value(0.5)
        );
    }
    // Bimodal table: irregular, so it gets ironed.
    let t = VirtualValueProfile::tabulated(vec![(0.0, 0.0), (1.0, 0.45), (2.0, 0.5), (3.0, 0.55), (4.0, 1.0)])?;
    println!("ironed intervals {:?}", t.ironed_intervals());
    for v in [0.5, 1.5, 2.5, 3.5] {
        println!("v {v}: phi {:.4} ironed {:.4}", t.virtual_value(v), t.ironed_virtual_value(v));
    }
    Ok(())
}
