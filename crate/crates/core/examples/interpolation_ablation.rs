//! Three-snapshot flow interpolation: spatial only, joint, temporal only.

use prodtop::interpolate::toy;

fn main() -> prodtop::Result<()> {
    let scene = toy::scene();
    println!(
        "{} edges, {} steps, {} observed values",
        scene.truth.edge_count(),
        scene.truth.steps(),
        scene.observations.len()
    );
    println!("alpha_t,alpha_s,rel_error");
    for row in toy::ablation(&scene, &toy::SETTINGS)? {
        println!("{},{},{:.4}", row.alpha_t, row.alpha_s, row.rel_error);
    }
    Ok(())
}
