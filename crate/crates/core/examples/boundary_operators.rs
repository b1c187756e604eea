//! Boundary matrices of a filled triangle with a dangling edge, and the
//! check that consecutive boundaries compose to zero.

use prodtop::complex::{ChainComplex, SimplicialComplex};

fn main() -> prodtop::Result<()> {
    let sc = SimplicialComplex::new(vec![vec![0, 1, 2], vec![2, 3]])?;
    println!("cells per dimension: {:?}", sc.counts());
    for k in 1..=2 {
        let b = sc.boundary(k);
        println!("B_{k} ({} x {}):\n{}", b.nrows(), b.ncols(), b.to_dense());
    }
    let bb = sc.boundary(1).compose(&sc.boundary(2))?;
    println!("B_1 B_2 is zero: {}", bb.is_zero());
    Ok(())
}
