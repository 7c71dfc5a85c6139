//! Dense complex linear algebra used throughout: Hermitian eigendecomposition
//! with a deterministic ordering, spectral projectors, and column-space bases.

use nalgebra::{Complex, DMatrix, DVector};

use crate::tol;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `⟨a, b⟩`, linear in the first argument and conjugate-linear in the second.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    b.dotc(a)
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius norm of the skew-Hermitian part `(M - M*)/2`.
pub fn skew_defect(m: &CMatrix) -> f64 {
    fro(&(m - m.adjoint())) * 0.5
}

/// Eigendecomposition of the Hermitian part of a square matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` belongs to `values[k]`.
    pub vectors: CMatrix,
    /// Values with `|λ| <= rank_tol` are treated as zero.
    pub rank_tol: f64,
    /// Norm of the skew part discarded before decomposition.
    pub skew_defect: f64,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        assert!(m.is_square(), "eigendecomposition of a non-square matrix");
        let n = m.nrows();
        let skew = skew_defect(m);
        if n == 0 {
            return Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
                rank_tol: tol::RANK_ABS,
                skew_defect: skew,
            };
        }
        let eig = hermitian_part(m).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            normalize_phase(&mut col);
            vectors.set_column(dst, &col);
        }
        let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Self {
            values,
            vectors,
            rank_tol: tol::rank_cut(scale),
            skew_defect: skew,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self, k: usize) -> bool {
        self.values[k].abs() <= self.rank_tol
    }

    pub fn rank(&self) -> usize {
        (0..self.dim()).filter(|&k| !self.is_zero(k)).count()
    }

    /// `Q f(Λ) Q*`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.with_weights(&weights)
    }

    /// `Q diag(weights) Q*`.
    pub fn with_weights(&self, weights: &[f64]) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &w) in weights.iter().enumerate() {
            scaled.column_mut(k).scale_mut(w);
        }
        &scaled * self.vectors.adjoint()
    }

    /// Orthogonal projection onto the span of eigenvectors whose eigenvalue
    /// satisfies `keep`.
    pub fn projector<P: Fn(f64) -> bool>(&self, keep: P) -> CMatrix {
        self.map(|v| if keep(v) { 1.0 } else { 0.0 })
    }

    /// Projection onto the orthogonal complement of the kernel.
    pub fn support(&self) -> CMatrix {
        let cut = self.rank_tol;
        self.projector(|v| v.abs() > cut)
    }

    /// Moore-Penrose pseudo-inverse.
    pub fn pinv(&self) -> CMatrix {
        let cut = self.rank_tol;
        self.map(|v| if v.abs() > cut { 1.0 / v } else { 0.0 })
    }

    /// Eigenvalues above the kernel cut, ascending.
    pub fn nonzero_values(&self) -> Vec<f64> {
        (0..self.dim())
            .filter(|&k| !self.is_zero(k))
            .map(|k| self.values[k])
            .collect()
    }
}

/// Rotates a vector so that its first non-negligible component is real positive.
fn normalize_phase(v: &mut CVector) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn column_space(m: &CMatrix) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let eig = HermitianEigen::new(&(m * m.adjoint()));
    let keep: Vec<usize> = (0..eig.dim()).filter(|&k| !eig.is_zero(k)).collect();
    let mut basis = CMatrix::zeros(rows, keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        basis.set_column(dst, &eig.vectors.column(k));
    }
    basis
}

/// Rank by the shared kernel cut applied to `M M*`.
pub fn rank(m: &CMatrix) -> usize {
    column_space(m).ncols()
}

/// Distance from `v` to the span of the orthonormal columns of `basis`.
pub fn distance_to_span(basis: &CMatrix, v: &CVector) -> f64 {
    if basis.ncols() == 0 {
        return v.norm();
    }
    let proj = basis * (basis.adjoint() * v);
    (v - proj).norm()
}

/// Largest distance from a column of `m` to the span of `basis`.
pub fn max_column_distance(basis: &CMatrix, m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| distance_to_span(basis, &c.into_owned()))
        .fold(0.0, f64::max)
}

/// Stacks the columns of `blocks` horizontally.
pub fn hstack(blocks: &[CMatrix], rows: usize) -> CMatrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        out.view_mut((0, offset), (rows, b.ncols())).copy_from(b);
        offset += b.ncols();
    }
    out
}

/// Compares two ascending lists as multisets, relative to the larger scale.
pub fn multiset_defect(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}
