//! Synthetic drifter benchmark: five seeds, full (alpha_s, alpha_t) grid,
//! followed by the best setting of each kind.

use std::time::Instant;

use prodtop::drifter::synth::{run_benchmark, SettingSummary, DEFAULT_SEED};

fn show(label: &str, s: Option<SettingSummary>) {
    if let Some(s) = s {
        println!(
            "{label:<14} alpha_s={:<7} alpha_t={:<7} mean test loss {:.4}  max train loss {:.1e}",
            s.alpha_s, s.alpha_t, s.mean_test_loss, s.max_train_loss
        );
    }
}

fn main() -> prodtop::Result<()> {
    let start = Instant::now();
    let report = run_benchmark(DEFAULT_SEED)?;
    println!("alpha_s,alpha_t,max_train_loss,mean_test_loss");
    for s in &report.summary {
        println!(
            "{},{},{:.3e},{:.4}",
            s.alpha_s, s.alpha_t, s.max_train_loss, s.mean_test_loss
        );
    }
    println!();
    show("joint", report.best_joint());
    show("pure spatial", report.best_pure_spatial());
    show("pure temporal", report.best_pure_temporal());
    show("no smoothing", report.no_smoothing());
    println!(
        "{} seeds in {:.1}s",
        report.seeds.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
