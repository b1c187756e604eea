//! Fit currents for one synthetic seed at a single setting and report the
//! optimizer's stopping state.

use prodtop::drifter::cosine_loss;
use prodtop::drifter::infer::{infer_currents, InferOptions};
use prodtop::drifter::synth::{synth_split, SynthConfig, DEFAULT_SEED};

fn main() -> prodtop::Result<()> {
    let cfg = SynthConfig::default();
    let grid = cfg.grid()?;
    let split = synth_split(&cfg, &grid, DEFAULT_SEED)?;
    println!(
        "{} hexagons, {} edges, {} train / {} test buoys",
        grid.hex_count(),
        grid.edge_count(),
        split.train_buoys,
        split.test_buoys
    );
    let fit = infer_currents(&grid, &split.train, 1e-3, 1.0, &InferOptions::default())?;
    println!(
        "stop {:?} after {} iterations, gradient norm {:.2e}",
        fit.stop, fit.iterations, fit.grad_norm
    );
    println!(
        "train loss {:.3e}, penalty {:.4}",
        fit.train_loss, fit.penalty
    );
    println!(
        "test loss {:.4}",
        cosine_loss(&fit.flow.to_bigraded(), &split.test.to_bigraded())?
    );
    Ok(())
}
