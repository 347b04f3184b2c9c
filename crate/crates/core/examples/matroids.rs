//! Constraint families: matroid oracles, parallel extensions and axiom checks.
use credauct::matroid::{check_matroid_axioms, non_matroid_witness, DownwardClosedFamily, ElementSet, Matroid};

fn main() -> credauct::Result<()> {
    let m = Matroid::partition(vec![(vec![0, 1], 1), (vec![2, 3], 2)])?;
    println!("rank of ground {}", m.rank(m.ground()));
    println!("bases {:?}", m.bases());
    let w = [3.0, 5.0, -1.0, 2.0];
    println!("max weight basis {:?}", m.max_weight_basis(&w)?);

    // A fake bidder parallel to bidder 1.
    let ext = m.parallel_extension(1)?;
    println!("extended ground {} rank {}", ext.ground_size(), ext.rank(ext.ground()));
    println!("{{1,4}} independent: {}", ext.is_independent(ElementSet::from_iter([1, 4])));

    let fam = DownwardClosedFamily::from_lists(3, &[&[0, 1], &[2]])?;
    match check_matroid_axioms(&fam) {
        Ok(()) => println!("matroid"),
        Err(v) => println!("not a matroid: {v:?}"),
    }
    println!("exchange witness {:?}", non_matroid_witness(&fam)?);
    Ok(())
}
