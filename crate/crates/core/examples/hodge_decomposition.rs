//! Split an edge flow on a graph with one hole into gradient, curl and
//! harmonic parts.

use prodtop::complex::SimplicialComplex;
use prodtop::spectral::{hodge_decompose, DEFAULT_RANK_TOL};

fn main() -> prodtop::Result<()> {
    // Two triangles sharing an edge, one filled, plus a square hole.
    let sc = SimplicialComplex::new(vec![
        vec![0, 1, 2],
        vec![1, 3],
        vec![2, 3],
        vec![2, 4],
        vec![3, 5],
        vec![4, 5],
    ])?;
    let h = hodge_decompose(&sc, 1, DEFAULT_RANK_TOL)?;
    let (g, c, m) = h.dims();
    println!(
        "edges: {}  gradient: {g}  curl: {c}  harmonic: {m}",
        g + c + m
    );
    println!("largest cross inner product: {:.1e}", h.max_cross_inner());

    let flow: Vec<f64> = (0..g + c + m).map(|e| 1.0 + e as f64 * 0.5).collect();
    let parts = h.project(&flow);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!(
        "|f| = {:.4}  |grad| = {:.4}  |curl| = {:.4}  |harm| = {:.4}",
        norm(&flow),
        norm(&parts.gradient),
        norm(&parts.curl),
        norm(&parts.harmonic)
    );
    Ok(())
}
