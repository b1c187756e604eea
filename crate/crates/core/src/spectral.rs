//! Hodge Laplacians, the Hodge decomposition and eigenmodes.
//!
//! `L_k = B_kᵀ B_k + B_{k+1} B_{k+1}ᵀ` is assembled exactly over the
//! integers. Eigenpairs come from a dense symmetric solver for operators of
//! dimension below [`DENSE_LIMIT`] and from a deflated Lanczos iteration
//! above it. Eigenmodes of a product grade are outer products of factor
//! eigenmodes with eigenvalue `λ_x + λ_y`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::ChainComplex;
use crate::error::{Error, Result};
use crate::product::ProductComplex;
use crate::sparse::{Scalar, SparseOperator};

/// Operators with at least this many rows use the iterative solver.
pub const DENSE_LIMIT: usize = 512;

/// Default relative threshold below which a singular value counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Residual target for iterative eigenpairs.
const LANCZOS_RESIDUAL: f64 = 1e-9;

pub fn hodge_laplacian<C: ChainComplex + ?Sized>(c: &C, k: usize) -> SparseOperator<i64> {
    let down = c.boundary(k);
    let up = c.boundary(k + 1);
    let lower = down
        .transpose()
        .compose(&down)
        .expect("B_k^T B_k spaces agree");
    let upper = up
        .compose(&up.transpose())
        .expect("B_{k+1} B_{k+1}^T spaces agree");
    lower.add(&upper).expect("both terms act on k-cells")
}

/// Orthonormal bases of the gradient, curl and harmonic subspaces of `C^k`.
#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub grade: usize,
    /// Columns span `Im(B_kᵀ)`.
    pub gradient: DMatrix<f64>,
    /// Columns span `Im(B_{k+1})`.
    pub curl: DMatrix<f64>,
    /// Columns span `ker(L_k)`.
    pub harmonic: DMatrix<f64>,
    pub tol: f64,
}

/// Components of a signal along the three Hodge subspaces.
#[derive(Clone, Debug)]
pub struct HodgeParts {
    pub gradient: Vec<f64>,
    pub curl: Vec<f64>,
    pub harmonic: Vec<f64>,
}

impl HodgeDecomposition {
    /// `(gradient, curl, harmonic)` dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.gradient.ncols(),
            self.curl.ncols(),
            self.harmonic.ncols(),
        )
    }

    pub fn project(&self, signal: &[f64]) -> HodgeParts {
        let s = DVector::from_column_slice(signal);
        let proj = |basis: &DMatrix<f64>| -> Vec<f64> {
            if basis.ncols() == 0 {
                return vec![0.0; signal.len()];
            }
            (basis * (basis.transpose() * &s)).as_slice().to_vec()
        };
        HodgeParts {
            gradient: proj(&self.gradient),
            curl: proj(&self.curl),
            harmonic: proj(&self.harmonic),
        }
    }

    /// Largest absolute inner product between columns of different subspaces.
    pub fn max_cross_inner(&self) -> f64 {
        let pairs = [
            (&self.gradient, &self.curl),
            (&self.gradient, &self.harmonic),
            (&self.curl, &self.harmonic),
        ];
        pairs
            .iter()
            .filter(|(a, b)| a.ncols() > 0 && b.ncols() > 0)
            .map(|(a, b)| (a.transpose() * *b).amax())
            .fold(0.0, f64::max)
    }
}

/// Orthonormal basis of the column space of `m`.
fn range_basis(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(DMatrix::zeros(m.nrows(), 0));
    }
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::Solver(format!("singular value decomposition failed: {e:?}")))?;
    let sv = svd.S().column_vector();
    let u = svd.U();
    let smax = (0..sv.nrows()).map(|i| sv[i]).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.nrows())
        .filter(|&i| smax > 0.0 && sv[i] > tol * smax)
        .collect();
    Ok(DMatrix::from_fn(m.nrows(), keep.len(), |r, c| {
        u[(r, keep[c])]
    }))
}

pub fn hodge_decompose<C: ChainComplex + ?Sized>(
    c: &C,
    k: usize,
    tol: f64,
) -> Result<HodgeDecomposition> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = c.count(k);
    let gradient = range_basis(&c.boundary(k).transpose().to_dense(), tol)?;
    let curl = range_basis(&c.boundary(k + 1).to_dense(), tol)?;
    let harmonic = if n == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let eig = SymmetricEigen::new(hodge_laplacian(c, k).to_dense());
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let keep: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i] <= tol * lmax)
            .collect();
        DMatrix::from_fn(n, keep.len(), |r, col| eig.eigenvectors[(r, keep[col])])
    };
    Ok(HodgeDecomposition {
        grade: k,
        gradient,
        curl,
        harmonic,
        tol,
    })
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Flip `v` so that its largest-magnitude entry is positive.
fn canonical_sign(v: &mut [f64]) {
    let pivot = v.iter().copied().fold(0.0f64, |best, x| {
        if x.abs() > best.abs() + 1e-12 {
            x
        } else {
            best
        }
    });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_symmetric<T: Scalar>(op: &SparseOperator<T>) -> Result<()> {
    if op.nrows() != op.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square operator".into(),
            actual: format!("{}x{}", op.nrows(), op.ncols()),
        });
    }
    let scale = op
        .iter()
        .map(|(_, _, v)| v.to_f64().abs())
        .fold(1.0, f64::max);
    let asym = op.max_asymmetry();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// The `count` smallest eigenpairs of a symmetric operator, ascending, with
/// orthonormal eigenvectors.
pub fn eigenmodes<T: Scalar>(op: &SparseOperator<T>, count: usize) -> Result<Vec<Eigenpair>> {
    check_symmetric(op)?;
    if count > op.nrows() {
        return Err(Error::param(format!(
            "requested {count} modes of a {}-dimensional operator",
            op.nrows()
        )));
    }
    if op.nrows() < DENSE_LIMIT {
        Ok(dense_eigenmodes(op, count))
    } else {
        lanczos_eigenmodes(op, count)
    }
}

pub fn dense_eigenmodes<T: Scalar>(op: &SparseOperator<T>, count: usize) -> Vec<Eigenpair> {
    let n = op.nrows();
    if n == 0 || count == 0 {
        return Vec::new();
    }
    let mut dense = op.to_dense();
    // exact symmetrization; removes rounding asymmetry from weighted sums
    dense = (&dense + dense.transpose()) * 0.5;
    let eig = SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(count)
        .map(|i| {
            let mut vector: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            canonical_sign(&mut vector);
            Eigenpair {
                value: eig.eigenvalues[i],
                vector,
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Smallest eigenpairs by Lanczos with full reorthogonalization and
/// deflation. Converged Ritz vectors are locked and later Krylov spaces are
/// built in their orthogonal complement, so repeated eigenvalues are found
/// one copy per pass.
pub fn lanczos_eigenmodes<T: Scalar>(
    op: &SparseOperator<T>,
    count: usize,
) -> Result<Vec<Eigenpair>> {
    check_symmetric(op)?;
    let n = op.nrows();
    if count > n {
        return Err(Error::param(format!(
            "requested {count} modes of a {n}-dimensional operator"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let scale = op
        .iter()
        .map(|(_, _, v)| v.to_f64().abs())
        .fold(1.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut locked: Vec<Eigenpair> = Vec::new();
    let mut krylov_dim = (2 * count + 20).max(40);
    let max_rounds = 4 * count + 64;

    for _ in 0..max_rounds {
        let free = n - locked.len();
        if free == 0 {
            break;
        }
        let m = krylov_dim.min(free);
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|p| p.vector.clone()).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut images: Vec<Vec<f64>> = Vec::with_capacity(m);

        let mut next = random_unit(&mut rng, n, &locked_vecs, &basis);
        while basis.len() < m {
            let Some(q) = next.take() else { break };
            let w = op.matvec(&q);
            basis.push(q);
            let mut r = w.clone();
            images.push(w);
            orthogonalize(&mut r, &locked_vecs);
            orthogonalize(&mut r, &basis);
            let beta = norm(&r);
            next = if beta > 1e-10 * scale {
                r.iter_mut().for_each(|x| *x /= beta);
                Some(r)
            } else {
                // invariant subspace reached; continue in its complement
                random_unit(&mut rng, n, &locked_vecs, &basis)
            };
        }
        let dim = basis.len();
        if dim == 0 {
            break;
        }
        let h = DMatrix::from_fn(dim, dim, |r, c| {
            0.5 * (dot(&basis[r], &images[c]) + dot(&basis[c], &images[r]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let threshold = if locked.len() >= count {
            let mut vals: Vec<f64> = locked.iter().map(|p| p.value).collect();
            vals.sort_by(f64::total_cmp);
            vals[count - 1]
        } else {
            f64::INFINITY
        };

        let mut accepted = Vec::new();
        let mut lowest_converged = false;
        for (rank, &idx) in order.iter().enumerate() {
            let theta = eig.eigenvalues[idx];
            let y = eig.eigenvectors.column(idx);
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for (k, coef) in y.iter().enumerate() {
                x.iter_mut()
                    .zip(&basis[k])
                    .for_each(|(a, b)| *a += coef * b);
                ax.iter_mut()
                    .zip(&images[k])
                    .for_each(|(a, b)| *a += coef * b);
            }
            let res: f64 = ax
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - theta * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if res > LANCZOS_RESIDUAL {
                break;
            }
            if rank == 0 {
                lowest_converged = true;
            }
            if theta > threshold + LANCZOS_RESIDUAL || locked.len() + accepted.len() >= count + 8 {
                break;
            }
            let xn = norm(&x);
            x.iter_mut().for_each(|v| *v /= xn);
            accepted.push(Eigenpair {
                value: theta,
                vector: x,
            });
        }

        if accepted.is_empty() {
            let exhausted = dim >= free;
            if threshold.is_finite() && (lowest_converged || exhausted) {
                break;
            }
            if exhausted {
                return Err(Error::Solver(format!(
                    "Lanczos did not converge on a {n}-dimensional operator"
                )));
            }
            krylov_dim = (krylov_dim * 2).min(free);
            continue;
        }
        // re-orthogonalize new vectors against each other
        for pair in accepted {
            let mut v = pair.vector;
            let existing: Vec<Vec<f64>> = locked.iter().map(|p| p.vector.clone()).collect();
            orthogonalize(&mut v, &existing);
            let vn = norm(&v);
            if vn < 0.5 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= vn);
            locked.push(Eigenpair {
                value: pair.value,
                vector: v,
            });
        }
    }

    if locked.len() < count {
        return Err(Error::Solver(format!(
            "Lanczos found {} of {count} eigenpairs",
            locked.len()
        )));
    }
    locked.sort_by(|a, b| a.value.total_cmp(&b.value));
    locked.truncate(count);
    for p in &mut locked {
        canonical_sign(&mut p.vector);
    }
    Ok(locked)
}

fn random_unit(
    rng: &mut ChaCha8Rng,
    n: usize,
    locked: &[Vec<f64>],
    basis: &[Vec<f64>],
) -> Option<Vec<f64>> {
    if locked.len() + basis.len() >= n {
        return None;
    }
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, locked);
        orthogonalize(&mut v, basis);
        let vn = norm(&v);
        if vn > 1e-8 {
            v.iter_mut().for_each(|x| *x /= vn);
            return Some(v);
        }
    }
    None
}

/// An eigenmode of a product grade built from one spatial and one temporal mode.
#[derive(Clone, Debug)]
pub struct ProductMode {
    pub lambda_x: f64,
    pub lambda_y: f64,
    /// Positions of the factor modes in their ascending spectra.
    pub x_mode: usize,
    pub y_mode: usize,
    /// Flattened `u ⊗ v` in the product's row-major order.
    pub vector: Vec<f64>,
}

impl ProductMode {
    pub fn lambda(&self) -> f64 {
        self.lambda_x + self.lambda_y
    }
}

/// The `count` lowest eigenmodes of the unit-weight Laplacian on grade
/// `(i, j)`, assembled from factor eigenmodes. Empty grades yield no modes.
pub fn product_eigenmodes(
    z: &ProductComplex,
    i: usize,
    j: usize,
    count: usize,
) -> Result<Vec<ProductMode>> {
    let (nx, ny) = (z.factor_x().count(i), z.factor_y().count(j));
    if nx == 0 || ny == 0 || count == 0 {
        return Ok(Vec::new());
    }
    let count = count.min(nx * ny);
    let xs = eigenmodes(&hodge_laplacian(z.factor_x(), i), count.min(nx))?;
    let ys = eigenmodes(&hodge_laplacian(z.factor_y(), j), count.min(ny))?;
    let mut pairs: Vec<(usize, usize)> = (0..xs.len())
        .flat_map(|a| (0..ys.len()).map(move |b| (a, b)))
        .collect();
    pairs.sort_by(|&(a, b), &(c, d)| {
        (xs[a].value + ys[b].value).total_cmp(&(xs[c].value + ys[d].value))
    });
    Ok(pairs
        .into_iter()
        .take(count)
        .map(|(a, b)| {
            let (u, v) = (&xs[a].vector, &ys[b].vector);
            let vector = u
                .iter()
                .flat_map(|ua| v.iter().map(move |vb| ua * vb))
                .collect();
            ProductMode {
                lambda_x: xs[a].value,
                lambda_y: ys[b].value,
                x_mode: a,
                y_mode: b,
                vector,
            }
        })
        .collect())
}

/// Frobenius distance between the orthogonal projectors onto the column
/// spans of two matrices with orthonormal columns.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    (pa - pb).norm()
}
