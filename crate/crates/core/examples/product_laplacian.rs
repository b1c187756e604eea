//! Kronecker-sum Laplacian of a triangle times a two-edge path, checked
//! against the Laplacian assembled from the product boundaries.

use prodtop::complex::{ChainComplex, SimplicialComplex};
use prodtop::product::ProductComplex;
use prodtop::spectral::hodge_laplacian;

fn main() -> prodtop::Result<()> {
    let x = SimplicialComplex::new([[0, 1, 2]])?;
    let y = SimplicialComplex::path(3);
    let z = ProductComplex::from_simplicial(&x, &y);
    println!("product cells per total degree: {:?}", z.counts());
    for k in 0..=3 {
        for (i, j) in z.grades_of_degree(k) {
            let kron = z.kronecker_sum_laplacian(i, j);
            let off = z.total_offset(i, j);
            let n = kron.nrows();
            let total = hodge_laplacian(&z, k);
            let block = total.block(off, off, kron.rows(), kron.cols());
            let same = block.iter().eq(kron.iter());
            println!(
                "grade ({i},{j}) degree {k}: {n} cells, {} nonzeros, matches boundary form: {same}",
                kron.nnz()
            );
        }
    }
    Ok(())
}
