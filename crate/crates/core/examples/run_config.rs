//! Runs any experiment from an inline TOML config, as the CLI does.
use credauct::sim::{run_experiment, Experiment, ExperimentConfig};

const CONFIG: &str = r#"
seed = 42
trials = 50000
workers = 2

[matroid]
kind = "uniform"
rank = 1
ground = 3

[bidder]
kind = "exponential"
mean = 1.0

[adra]
factor = 2.0
floor = 0.001
"#;

fn main() -> credauct::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    for exp in [Experiment::PaymentIdentity, Experiment::Levels] {
        let out = run_experiment(exp, &cfg)?;
        println!("# {exp}\n{}", out.csv);
    }
    Ok(())
}
