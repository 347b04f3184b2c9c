//! Collateral needed for alpha-strongly-regular bidders.
use credauct::dra::{alpha_condition_lhs, alpha_gamma_closed_form, alpha_gamma_root};

fn main() -> credauct::Result<()> {
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        for n in [1, 2, 8] {
            let g = alpha_gamma_root(alpha, n)?;
            let closed = if alpha < 1.0 { format!("{:.4}", alpha_gamma_closed_form(alpha, n)?) } else { "-".into() };
            println!("alpha {alpha:<4} n {n}: f/R >= {g:.4} (lhs {:.4}), closed form {closed}", alpha_condition_lhs(alpha, g));
        }
    }
    Ok(())
}
