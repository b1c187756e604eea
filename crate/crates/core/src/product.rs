//! Cartesian product `Z = X × Y` of two cell complexes.
//!
//! A cell of `Z` is a pair `(σ_X, σ_Y)`; pairs of an `i`-cell and a `j`-cell
//! span the bigraded summand `C^{i,j}(Z) = C^i(X) ⊗ C^j(Y)`. Inside a summand
//! the pairs are enumerated row-major: the `X` index is outer and the `Y`
//! index inner, so pair `(a, b)` sits at `a * N_j(Y) + b`. Every Kronecker
//! identity below depends on that order.
//!
//! The boundary of a product cell is
//! `∂_Z^{i,j} = ∂_X ⊗ id_Y + (-1)^i id_X ⊗ ∂_Y`,
//! which also fixes the orientation of every product cell.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::complex::{sc_to_cc, AbstractCellComplex, ChainComplex, SimplicialComplex};
use crate::error::{Error, Result};
use crate::sparse::{ComplexId, Grade, IndexSpace, SparseOperator};
use crate::spectral::hodge_laplacian;

/// The two pieces of `∂_Z^{i,j}`.
#[derive(Clone, Debug)]
pub struct ProductBoundary {
    /// `B_i(X) ⊗ I`, landing in grade `(i-1, j)`.
    pub spatial: SparseOperator<i64>,
    /// `(-1)^i I ⊗ B_j(Y)`, landing in grade `(i, j-1)`.
    pub temporal: SparseOperator<i64>,
}

type GradeCache = Mutex<HashMap<(usize, usize), Arc<OnceLock<Arc<ProductBoundary>>>>>;

#[derive(Debug)]
pub struct ProductComplex {
    id: ComplexId,
    x: Arc<AbstractCellComplex>,
    y: Arc<AbstractCellComplex>,
    boundaries: GradeCache,
}

impl ProductComplex {
    pub fn new(x: AbstractCellComplex, y: AbstractCellComplex) -> Self {
        Self {
            id: ComplexId::fresh(),
            x: Arc::new(x),
            y: Arc::new(y),
            boundaries: Default::default(),
        }
    }

    pub fn from_simplicial(x: &SimplicialComplex, y: &SimplicialComplex) -> Self {
        Self::new(sc_to_cc(x), sc_to_cc(y))
    }

    pub fn factor_x(&self) -> &AbstractCellComplex {
        &self.x
    }

    pub fn factor_y(&self) -> &AbstractCellComplex {
        &self.y
    }

    /// Index space of `C^{i,j}(Z)`.
    pub fn grade_space(&self, i: usize, j: usize) -> IndexSpace {
        IndexSpace::new(self.id, Grade::Bi(i, j), self.x.count(i) * self.y.count(j))
    }

    /// Flat position of the pair `(a, b)` inside grade `(i, j)`.
    pub fn flat_index(&self, j: usize, a: usize, b: usize) -> usize {
        a * self.y.count(j) + b
    }

    /// The pair behind a flat position of grade `(i, j)`.
    pub fn pair(&self, j: usize, flat: usize) -> (usize, usize) {
        let ny = self.y.count(j);
        (flat / ny, flat % ny)
    }

    /// All `(i, j)` cells as `(X position, Y position)` in flattening order.
    pub fn cells(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.x.count(i), self.y.count(j));
        (0..nx).flat_map(|a| (0..ny).map(move |b| (a, b))).collect()
    }

    /// Grades `(i, k - i)` that make up total degree `k`, in block order.
    pub fn grades_of_degree(&self, k: usize) -> Vec<(usize, usize)> {
        let (Some(dx), Some(dy)) = (self.x.top_dim(), self.y.top_dim()) else {
            return Vec::new();
        };
        (k.saturating_sub(dy)..=k.min(dx))
            .map(|i| (i, k - i))
            .collect()
    }

    fn block_offset(&self, k: usize, i: usize) -> usize {
        self.grades_of_degree(k)
            .into_iter()
            .take_while(|&(gi, _)| gi < i)
            .map(|(gi, gj)| self.x.count(gi) * self.y.count(gj))
            .sum()
    }

    /// Both parts of `∂_Z^{i,j}`. Built once per grade and shared afterwards.
    pub fn product_boundary(&self, i: usize, j: usize) -> Arc<ProductBoundary> {
        let cell = {
            let mut map = self.boundaries.lock().expect("grade cache poisoned");
            map.entry((i, j)).or_default().clone()
        };
        cell.get_or_init(|| Arc::new(self.build_boundary(i, j)))
            .clone()
    }

    fn build_boundary(&self, i: usize, j: usize) -> ProductBoundary {
        let cols = self.grade_space(i, j);
        let spatial = if i == 0 {
            SparseOperator::zeros(IndexSpace::null(self.id), cols)
        } else {
            let id_y = SparseOperator::identity(self.y.space(j));
            SparseOperator::kron(&self.x.boundary(i), &id_y, self.grade_space(i - 1, j), cols)
        };
        let temporal = if j == 0 {
            SparseOperator::zeros(IndexSpace::null(self.id), cols)
        } else {
            let sign = if i.is_multiple_of(2) { 1 } else { -1 };
            let id_x = SparseOperator::identity(self.x.space(i)).scale(sign);
            SparseOperator::kron(&id_x, &self.y.boundary(j), self.grade_space(i, j - 1), cols)
        };
        ProductBoundary { spatial, temporal }
    }

    /// `Δ_X^i ⊗ I + I ⊗ Δ_Y^j` with integer entries.
    pub fn kronecker_sum_laplacian(&self, i: usize, j: usize) -> SparseOperator<i64> {
        let space = self.grade_space(i, j);
        let lx = hodge_laplacian(self.x.as_ref(), i);
        let ly = hodge_laplacian(self.y.as_ref(), j);
        let id_x = SparseOperator::identity(self.x.space(i));
        let id_y = SparseOperator::identity(self.y.space(j));
        SparseOperator::kron(&lx, &id_y, space, space)
            .add(&SparseOperator::kron(&id_x, &ly, space, space))
            .expect("both terms live on the same grade")
    }

    /// Weighted Laplacian `α_x (Δ_X^i ⊗ I) + α_y (I ⊗ Δ_Y^j)` on grade `(i, j)`.
    pub fn product_hodge_laplacian(
        &self,
        i: usize,
        j: usize,
        alpha_x: f64,
        alpha_y: f64,
    ) -> Result<SparseOperator<f64>> {
        for (name, a) in [("alpha_x", alpha_x), ("alpha_y", alpha_y)] {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::param(format!(
                    "{name} must be finite and non-negative, got {a}"
                )));
            }
        }
        let space = self.grade_space(i, j);
        let lx = hodge_laplacian(self.x.as_ref(), i).to_f64();
        let ly = hodge_laplacian(self.y.as_ref(), j).to_f64();
        let id_x = SparseOperator::<f64>::identity(self.x.space(i));
        let id_y = SparseOperator::<f64>::identity(self.y.space(j));
        let spatial = SparseOperator::kron(&lx, &id_y, space, space).scale(alpha_x);
        let temporal = SparseOperator::kron(&id_x, &ly, space, space).scale(alpha_y);
        spatial.add(&temporal)
    }

    /// Position of grade `(i, j)` inside the total degree `i + j` signal vector.
    pub fn total_offset(&self, i: usize, j: usize) -> usize {
        self.block_offset(i + j, i)
    }

    /// Materialize `Z` as an abstract cell complex. Cell ids are
    /// `"<x id>|<y id>"`; within each degree cells follow block order and
    /// then the row-major pair order.
    pub fn to_cell_complex(&self) -> AbstractCellComplex {
        let top = match (self.x.top_dim(), self.y.top_dim()) {
            (Some(dx), Some(dy)) => dx + dy,
            _ => return AbstractCellComplex::from_indexed(Vec::new(), Vec::new()),
        };
        let mut cells = Vec::with_capacity(top + 1);
        let mut faces = Vec::with_capacity(top + 1);
        for k in 0..=top {
            let mut ids = Vec::with_capacity(self.count(k));
            let mut per_cell: Vec<Vec<(usize, i64)>> = Vec::with_capacity(self.count(k));
            for (i, j) in self.grades_of_degree(k) {
                for (a, b) in self.cells(i, j) {
                    ids.push(format!("{}|{}", self.x.cells(i)[a], self.y.cells(j)[b]));
                }
                let bd = self.product_boundary(i, j);
                let mut grade_faces = vec![Vec::new(); self.x.count(i) * self.y.count(j)];
                if k > 0 {
                    if i > 0 {
                        let off = self.total_offset(i - 1, j);
                        for (r, c, v) in bd.spatial.iter() {
                            grade_faces[c].push((off + r, v));
                        }
                    }
                    if j > 0 {
                        let off = self.total_offset(i, j - 1);
                        for (r, c, v) in bd.temporal.iter() {
                            grade_faces[c].push((off + r, v));
                        }
                    }
                }
                per_cell.extend(grade_faces);
            }
            cells.push(ids);
            faces.push(per_cell);
        }
        AbstractCellComplex::from_indexed(cells, faces)
    }
}

/// The total complex: degree `k` is the direct sum of the grades `(i, k-i)`.
impl ChainComplex for ProductComplex {
    fn complex_id(&self) -> ComplexId {
        self.id
    }

    fn top_dim(&self) -> Option<usize> {
        Some(self.x.top_dim()? + self.y.top_dim()?)
    }

    fn count(&self, k: usize) -> usize {
        self.grades_of_degree(k)
            .into_iter()
            .map(|(i, j)| self.x.count(i) * self.y.count(j))
            .sum()
    }

    fn boundary(&self, k: usize) -> SparseOperator<i64> {
        let rows = self.face_space(k);
        let cols = self.space(k);
        if k == 0 {
            return SparseOperator::zeros(rows, cols);
        }
        let mut blocks = Vec::new();
        for (i, j) in self.grades_of_degree(k) {
            let col_off = self.total_offset(i, j);
            let bd = self.product_boundary(i, j);
            if i > 0 {
                blocks.push((self.total_offset(i - 1, j), col_off, bd.spatial.clone()));
            }
            if j > 0 {
                blocks.push((self.total_offset(i, j - 1), col_off, bd.temporal.clone()));
            }
        }
        SparseOperator::from_blocks(rows, cols, blocks.iter().map(|(r, c, b)| (*r, *c, b)))
    }
}

/// A signal on one bigraded summand `C^{i,j}(Z)`, flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BigradedSignal {
    pub grade: (usize, usize),
    pub values: Vec<f64>,
}

impl BigradedSignal {
    pub fn new(z: &ProductComplex, grade: (usize, usize), values: Vec<f64>) -> Result<Self> {
        let expected = z.grade_space(grade.0, grade.1).len;
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} values for grade {grade:?}"),
                actual: values.len().to_string(),
            });
        }
        Ok(Self { grade, values })
    }

    /// `N_i(X) × N_j(Y)` matrix view.
    pub fn to_matrix(&self, z: &ProductComplex) -> Result<DMatrix<f64>> {
        let (nx, ny) = (
            z.factor_x().count(self.grade.0),
            z.factor_y().count(self.grade.1),
        );
        if nx * ny != self.values.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{nx}x{ny}"),
                actual: self.values.len().to_string(),
            });
        }
        Ok(DMatrix::from_row_slice(nx, ny, &self.values))
    }

    pub fn from_matrix(grade: (usize, usize), m: &DMatrix<f64>) -> Self {
        let values = m
            .row_iter()
            .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
            .collect();
        Self { grade, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::CellSpec;

    fn edge() -> SimplicialComplex {
        SimplicialComplex::new([[0, 1]]).unwrap()
    }

    #[test]
    fn square_from_two_edges() {
        let z = ProductComplex::from_simplicial(&edge(), &edge());
        assert_eq!(z.counts(), vec![4, 4, 1]);
        let bd = z.product_boundary(1, 1);
        // faces (v1,f), (v2,f) and (e,u1), (e,u2)
        assert_eq!(bd.spatial.nnz(), 2);
        assert_eq!(bd.temporal.nnz(), 2);
        assert_eq!(bd.spatial.get(0, 0), -1);
        assert_eq!(bd.spatial.get(1, 0), 1);
        // sign (-1)^1 on the Y part
        assert_eq!(bd.temporal.get(0, 0), 1);
        assert_eq!(bd.temporal.get(1, 0), -1);
        let cc = z.to_cell_complex();
        let faces: Vec<&str> = cc
            .faces_of(2, 0)
            .iter()
            .map(|&(f, _)| cc.cells(1)[f].as_str())
            .collect();
        assert_eq!(faces, vec!["0|0,1", "1|0,1", "0,1|0", "0,1|1"]);
    }

    #[test]
    fn graph_times_graph_has_rectangles() {
        let x = SimplicialComplex::new([[0, 1], [1, 2], [0, 2]]).unwrap();
        let y = SimplicialComplex::path(4);
        let z = ProductComplex::from_simplicial(&x, &y);
        assert_eq!(z.count(2), 3 * 3);
        assert_eq!(z.grade_space(1, 1).len, 9);
        for faces in (0..9).map(|p| z.product_boundary(1, 1).spatial.transpose().row(p).count()) {
            assert_eq!(faces, 2);
        }
    }

    #[test]
    fn point_factor_is_identity() {
        let pt = AbstractCellComplex::from_cells([CellSpec {
            id: "p".into(),
            dim: 0,
            boundary: vec![],
        }])
        .unwrap();
        let y = sc_to_cc(&SimplicialComplex::new(vec![vec![1, 2, 3], vec![3, 4]]).unwrap());
        let z = ProductComplex::new(pt, y.clone());
        assert_eq!(z.counts(), y.counts());
        for k in 1..=2 {
            assert_eq!(z.boundary(k).to_dense(), y.boundary(k).to_dense());
        }
    }

    #[test]
    fn i_zero_temporal_block_has_plus_sign() {
        let z = ProductComplex::from_simplicial(&edge(), &SimplicialComplex::path(3));
        let bd = z.product_boundary(0, 1);
        let expected = SparseOperator::kron(
            &SparseOperator::identity(z.factor_x().space(0)),
            &z.factor_y().boundary(1),
            z.grade_space(0, 0),
            z.grade_space(0, 1),
        );
        assert_eq!(bd.temporal, expected);
        assert!(bd.spatial.nrows() == 0);
    }

    #[test]
    fn block_shapes_follow_kronecker_arithmetic() {
        let x = SimplicialComplex::new([[1, 2, 3]]).unwrap();
        let y = SimplicialComplex::path(3);
        let z = ProductComplex::from_simplicial(&x, &y);
        let bd = z.product_boundary(1, 0);
        assert_eq!((bd.spatial.nrows(), bd.spatial.ncols()), (3 * 3, 3 * 3));
        let bd = z.product_boundary(1, 1);
        assert_eq!((bd.spatial.nrows(), bd.spatial.ncols()), (3 * 2, 3 * 2));
        assert_eq!((bd.temporal.nrows(), bd.temporal.ncols()), (3 * 3, 3 * 2));
        let bd = z.product_boundary(2, 1);
        assert_eq!((bd.spatial.nrows(), bd.spatial.ncols()), (3 * 2, 2));
        assert_eq!((bd.temporal.nrows(), bd.temporal.ncols()), (3, 2));
    }

    #[test]
    fn boundary_is_cached_per_grade() {
        let z = ProductComplex::from_simplicial(&edge(), &edge());
        let a = z.product_boundary(1, 0);
        let b = z.product_boundary(1, 0);
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn weights_are_validated_and_zero_weight_drops_a_term() {
        let x = SimplicialComplex::new([[0, 1], [1, 2], [0, 2]]).unwrap();
        let y = SimplicialComplex::path(2);
        let z = ProductComplex::from_simplicial(&x, &y);
        assert!(z.product_hodge_laplacian(0, 0, -1.0, 1.0).is_err());
        let l = z.product_hodge_laplacian(0, 0, 1.0, 0.0).unwrap();
        let lx = hodge_laplacian(z.factor_x(), 0).to_dense();
        let expected = lx.kronecker(&DMatrix::identity(2, 2));
        assert_eq!(l.to_dense(), expected);
    }

    #[test]
    fn signal_matrix_view_round_trip_and_kronecker_actions() {
        let x = SimplicialComplex::new(vec![vec![0, 1, 2], vec![2, 3]]).unwrap();
        let y = SimplicialComplex::path(3);
        let z = ProductComplex::from_simplicial(&x, &y);
        let values: Vec<f64> = (0..4 * 2).map(|v| (v as f64 * 0.7).sin()).collect();
        let s = BigradedSignal::new(&z, (1, 1), values.clone()).unwrap();
        let m = s.to_matrix(&z).unwrap();
        assert_eq!(BigradedSignal::from_matrix((1, 1), &m), s);

        let lx = hodge_laplacian(z.factor_x(), 1).to_dense();
        let ly = hodge_laplacian(z.factor_y(), 1).to_dense();
        let left = BigradedSignal::from_matrix((1, 1), &(&lx * &m));
        let via_kron =
            lx.kronecker(&DMatrix::identity(2, 2)) * nalgebra::DVector::from_vec(values.clone());
        for (a, b) in left.values.iter().zip(via_kron.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let right = BigradedSignal::from_matrix((1, 1), &(&m * ly.transpose()));
        let via_kron =
            DMatrix::<f64>::identity(4, 4).kronecker(&ly) * nalgebra::DVector::from_vec(values);
        for (a, b) in right.values.iter().zip(via_kron.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(BigradedSignal::new(&z, (1, 1), vec![0.0; 3]).is_err());
    }

    #[test]
    fn materialized_product_round_trips_through_cc_boundary() {
        let x = SimplicialComplex::new([[0, 1, 2]]).unwrap();
        let y = SimplicialComplex::path(3);
        let z = ProductComplex::from_simplicial(&x, &y);
        let cc = z.to_cell_complex();
        let again = AbstractCellComplex::from_cells(cc.to_specs()).unwrap();
        for k in 1..=3 {
            assert_eq!(again.boundary(k).to_dense(), z.boundary(k).to_dense());
        }
    }
}
