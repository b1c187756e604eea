//! Lowest modes of a product Laplacian from the factor spectra, compared
//! with a direct eigensolve of the assembled operator.

use prodtop::complex::SimplicialComplex;
use prodtop::product::ProductComplex;
use prodtop::spectral::{eigenmodes, product_eigenmodes};

fn main() -> prodtop::Result<()> {
    let x = SimplicialComplex::new([[0, 1, 2]])?;
    let y = SimplicialComplex::path(3);
    let z = ProductComplex::from_simplicial(&x, &y);
    let n = z.grade_space(0, 0).len;
    let factored = product_eigenmodes(&z, 0, 0, n)?;
    let direct = eigenmodes(&z.kronecker_sum_laplacian(0, 0), n)?;
    println!("mode  lambda_x  lambda_y  sum      direct");
    for (k, (m, d)) in factored.iter().zip(&direct).enumerate() {
        println!(
            "{k:>4}  {:>8.4}  {:>8.4}  {:>7.4}  {:>7.4}",
            m.lambda_x,
            m.lambda_y,
            m.lambda(),
            d.value
        );
    }
    Ok(())
}
