//! Write a product Laplacian in Matrix Market format and read it back.

use prodtop::complex::SimplicialComplex;
use prodtop::io::{read_matrix_market, write_matrix_market};
use prodtop::product::ProductComplex;

fn main() -> prodtop::Result<()> {
    let x = SimplicialComplex::new(vec![vec![0, 1, 2], vec![2, 3]])?;
    let z = ProductComplex::from_simplicial(&x, &SimplicialComplex::path(4));
    let lap = z.kronecker_sum_laplacian(1, 0);
    let text = write_matrix_market(&lap, &["grade (1,0)".to_string()]);
    print!(
        "{}",
        text.lines()
            .take(6)
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
    println!("...");

    let back = read_matrix_market::<i64, _>(text.as_bytes(), |_| lap.rows(), |_| lap.cols())?;
    println!("round trip exact: {}", back.iter().eq(lap.iter()));
    let as_real = read_matrix_market::<f64, _>(text.as_bytes(), |_| lap.rows(), |_| lap.cols())?;
    println!("read as real: {} nonzeros", as_real.nnz());
    Ok(())
}
