//! Unitary representations of finite groups on `ℂⁿ`, including the
//! representations induced by measure-class-preserving actions on finite
//! sets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{perm_matrix, FiniteGroup};
use crate::linalg::{fro, CMatrix, CVector, C64};
use crate::tol;

/// Unitarity, homomorphism and identity defects of a family of matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepDiagnostics {
    /// `max_γ ‖Π(γ)*Π(γ) − I‖₂`
    pub unitarity: f64,
    /// `max_{a,b} ‖Π(ab) − Π(a)Π(b)‖₂`
    pub homomorphism: f64,
    /// `‖Π(e) − I‖₂`
    pub identity: f64,
}

impl RepDiagnostics {
    pub fn compute(group: &FiniteGroup, matrices: &[CMatrix]) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidRepresentation("no matrices".into()));
        }
        if matrices.len() != group.order() {
            return Err(Error::InvalidRepresentation(format!(
                "{} matrices for a group of order {}",
                matrices.len(),
                group.order()
            )));
        }
        let n = matrices[0].nrows();
        if n == 0 {
            return Err(Error::InvalidRepresentation("zero-dimensional matrices".into()));
        }
        if matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::InvalidRepresentation(
                "matrices must be square of a common size".into(),
            ));
        }
        let id = CMatrix::identity(n, n);
        let unitarity = matrices
            .iter()
            .map(|m| fro(&(m.adjoint() * m - &id)))
            .fold(0.0, f64::max);
        let mut homomorphism = 0.0_f64;
        for a in 0..group.order() {
            for b in 0..group.order() {
                let d = fro(&(&matrices[group.mul(a, b)] - &matrices[a] * &matrices[b]));
                homomorphism = homomorphism.max(d);
            }
        }
        let identity = fro(&(&matrices[group.identity()] - &id));
        Ok(Self {
            unitarity,
            homomorphism,
            identity,
        })
    }

    pub fn max_defect(&self) -> f64 {
        self.unitarity.max(self.homomorphism).max(self.identity)
    }
}

#[derive(Debug, Clone)]
pub struct UnitaryRep {
    group: Arc<FiniteGroup>,
    dim: usize,
    matrices: Vec<CMatrix>,
}

impl UnitaryRep {
    /// Validates the matrices as a unitary homomorphism.
    pub fn new(group: Arc<FiniteGroup>, matrices: Vec<CMatrix>) -> Result<Self> {
        let diag = RepDiagnostics::compute(&group, &matrices)?;
        if diag.max_defect() > tol::REPRESENTATION {
            return Err(Error::InvalidRepresentation(format!(
                "defects {diag:?} exceed {:e}",
                tol::REPRESENTATION
            )));
        }
        let dim = matrices[0].nrows();
        Ok(Self {
            group,
            dim,
            matrices,
        })
    }

    /// `Π = λ` on `ℓ₂(Γ)`.
    pub fn translation(group: Arc<FiniteGroup>) -> Self {
        let matrices = (0..group.order())
            .map(|g| perm_matrix(&group.left_perm(g)))
            .collect();
        Self {
            dim: group.order(),
            group,
            matrices,
        }
    }

    /// The trivial representation on `ℂ^dim`.
    pub fn trivial(group: Arc<FiniteGroup>, dim: usize) -> Self {
        let matrices = vec![CMatrix::identity(dim, dim); group.order()];
        Self {
            group,
            dim,
            matrices,
        }
    }

    /// `Π_σ` on `L²(X, μ)`, written in the orthonormal basis `δ_x/√μ(x)`.
    pub fn action(action: &GroupAction) -> Self {
        let group = action.group.clone();
        let matrices = (0..group.order())
            .map(|g| action.unitary_matrix(g))
            .collect();
        Self {
            dim: action.set_size(),
            group,
            matrices,
        }
    }

    /// Block-diagonal sum.
    pub fn direct_sum(reps: &[UnitaryRep]) -> Result<Self> {
        let first = reps
            .first()
            .ok_or_else(|| Error::InvalidRepresentation("empty direct sum".into()))?;
        if reps
            .iter()
            .any(|r| !crate::vn::same_group(&r.group, &first.group))
        {
            return Err(Error::GroupMismatch);
        }
        let dim: usize = reps.iter().map(|r| r.dim).sum();
        let matrices = (0..first.group.order())
            .map(|g| {
                let mut m = CMatrix::zeros(dim, dim);
                let mut offset = 0;
                for r in reps {
                    m.view_mut((offset, offset), (r.dim, r.dim))
                        .copy_from(&r.matrices[g]);
                    offset += r.dim;
                }
                m
            })
            .collect();
        Ok(Self {
            group: first.group.clone(),
            dim,
            matrices,
        })
    }

    /// `Π'(γ) = U Π(γ) U*`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim || u.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.nrows(),
            });
        }
        let defect = fro(&(u.adjoint() * u - CMatrix::identity(self.dim, self.dim)));
        if defect > tol::REPRESENTATION {
            return Err(Error::NonUnitary { defect });
        }
        let ua = u.adjoint();
        let matrices = self.matrices.iter().map(|m| u * m * &ua).collect();
        Ok(Self {
            group: self.group.clone(),
            dim: self.dim,
            matrices,
        })
    }

    pub fn validate(&self) -> RepDiagnostics {
        RepDiagnostics::compute(&self.group, &self.matrices).expect("structure checked on construction")
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, g: usize) -> &CMatrix {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn apply(&self, g: usize, v: &CVector) -> CVector {
        &self.matrices[g] * v
    }

    /// Columns `Π(γ)ψ` in group index order.
    pub fn orbit(&self, psi: &CVector) -> CMatrix {
        let n = self.group.order();
        let mut m = CMatrix::zeros(self.dim, n);
        for g in 0..n {
            m.set_column(g, &self.apply(g, psi));
        }
        m
    }

    pub fn check_vector(&self, v: &CVector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// A left action `σ` of `Γ` on `{0, …, |X|−1}` with a positive Jacobian
/// cocycle `J(γ, x)`, the density of `μ∘σ_γ` against `μ`.
///
/// On a finite set every such cocycle is a coboundary; the measure `μ` is
/// recovered by setting `μ = 1` at the smallest point of each orbit.
#[derive(Debug, Clone)]
pub struct GroupAction {
    group: Arc<FiniteGroup>,
    perm: Vec<Vec<usize>>,
    jacobian: Vec<Vec<f64>>,
    measure: Vec<f64>,
}

impl GroupAction {
    pub fn new(group: Arc<FiniteGroup>, perm: Vec<Vec<usize>>, jacobian: Vec<Vec<f64>>) -> Result<Self> {
        let n = group.order();
        if perm.len() != n || jacobian.len() != n {
            return Err(Error::InvalidAction(format!(
                "expected {n} permutations and Jacobian rows"
            )));
        }
        let m = perm[0].len();
        if m == 0 {
            return Err(Error::InvalidAction("empty set".into()));
        }
        for (g, p) in perm.iter().enumerate() {
            let mut seen = vec![false; m];
            if p.len() != m || p.iter().any(|&x| x >= m || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::InvalidAction(format!("perm[{g}] is not a permutation")));
            }
            if jacobian[g].len() != m {
                return Err(Error::InvalidAction(format!("jacobian[{g}] has wrong length")));
            }
            if jacobian[g].iter().any(|&j| !(j.is_finite() && j > 0.0)) {
                return Err(Error::InvalidAction(format!("jacobian[{g}] is not positive")));
            }
        }
        let e = group.identity();
        if (0..m).any(|x| perm[e][x] != x) {
            return Err(Error::InvalidAction("identity does not act trivially".into()));
        }
        for a in 0..n {
            for b in 0..n {
                let ab = group.mul(a, b);
                for x in 0..m {
                    if perm[a][perm[b][x]] != perm[ab][x] {
                        return Err(Error::InvalidAction(format!(
                            "action law fails for ({a},{b}) at {x}"
                        )));
                    }
                    let lhs = jacobian[ab][x];
                    let rhs = jacobian[a][perm[b][x]] * jacobian[b][x];
                    if (lhs - rhs).abs() > tol::ALGEBRAIC * lhs.max(rhs) {
                        return Err(Error::InvalidAction(format!(
                            "cocycle fails for ({a},{b}) at {x}: {lhs} vs {rhs}"
                        )));
                    }
                }
            }
        }
        let mut measure = vec![0.0; m];
        for x in 0..m {
            if measure[x] > 0.0 {
                continue;
            }
            // x is the smallest unvisited point, hence the orbit minimum.
            for g in 0..n {
                measure[perm[g][x]] = jacobian[g][x];
            }
        }
        Ok(Self {
            group,
            perm,
            jacobian,
            measure,
        })
    }

    /// Action with Jacobian `J(γ, x) = μ(σ_γ x)/μ(x)` for a given measure.
    pub fn with_measure(group: Arc<FiniteGroup>, perm: Vec<Vec<usize>>, measure: &[f64]) -> Result<Self> {
        if measure.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidAction("measure must be positive".into()));
        }
        if perm.iter().any(|p| p.len() != measure.len()) {
            return Err(Error::InvalidAction("measure length differs from set size".into()));
        }
        let jacobian = perm
            .iter()
            .map(|p| (0..measure.len()).map(|x| measure[p[x]] / measure[x]).collect())
            .collect();
        Self::new(group, perm, jacobian)
    }

    /// `Γ` acting on itself by left multiplication, `J ≡ 1`.
    pub fn left_multiplication(group: Arc<FiniteGroup>) -> Self {
        let perm: Vec<Vec<usize>> = (0..group.order()).map(|g| group.left_perm(g)).collect();
        let m = group.order();
        let jacobian = vec![vec![1.0; m]; m];
        Self::new(group, perm, jacobian).expect("left multiplication is an action")
    }

    /// Free action on `Γ × {0..copies}`, point `(g, c)` at index
    /// `g·copies + c`, `σ_γ(g, c) = (γg, c)`. With `measure = None` the
    /// counting measure is used.
    pub fn free_copies(group: Arc<FiniteGroup>, copies: usize, measure: Option<&[f64]>) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidAction("need at least one copy".into()));
        }
        let n = group.order();
        let perm = (0..n)
            .map(|a| {
                (0..n * copies)
                    .map(|x| group.mul(a, x / copies) * copies + x % copies)
                    .collect()
            })
            .collect();
        match measure {
            Some(w) => Self::with_measure(group, perm, w),
            None => Self::with_measure(group, perm, &vec![1.0; n * copies]),
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn set_size(&self) -> usize {
        self.measure.len()
    }

    /// `σ_γ(x)`.
    pub fn act(&self, g: usize, x: usize) -> usize {
        self.perm[g][x]
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perm
    }

    /// `J(γ, x)`.
    pub fn jacobian(&self, g: usize, x: usize) -> f64 {
        self.jacobian[g][x]
    }

    pub fn jacobians(&self) -> &[Vec<f64>] {
        &self.jacobian
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// `(Π_σ(γ)φ)(x) = J(γ⁻¹, x)^{1/2} φ(σ_{γ⁻¹}(x))` acting on function values.
    pub fn raw_matrix(&self, g: usize) -> CMatrix {
        let m = self.set_size();
        let gi = self.group.inv(g);
        let mut out = CMatrix::zeros(m, m);
        for x in 0..m {
            out[(x, self.act(gi, x))] = C64::new(self.jacobian(gi, x).sqrt(), 0.0);
        }
        out
    }

    fn unitary_matrix(&self, g: usize) -> CMatrix {
        let m = self.set_size();
        let gi = self.group.inv(g);
        let mut out = CMatrix::zeros(m, m);
        for x in 0..m {
            let y = self.act(gi, x);
            let w = (self.measure[x] * self.jacobian(gi, x) / self.measure[y]).sqrt();
            out[(x, y)] = C64::new(w, 0.0);
        }
        out
    }

    /// Orthonormal coordinates `u(x) = √μ(x) φ(x)` of a function on `X`.
    pub fn to_coordinates(&self, values: &CVector) -> CVector {
        CVector::from_fn(values.len(), |x, _| values[x] * self.measure[x].sqrt())
    }

    /// Inverse of [`to_coordinates`](Self::to_coordinates).
    pub fn from_coordinates(&self, coords: &CVector) -> CVector {
        CVector::from_fn(coords.len(), |x, _| coords[x] / self.measure[x].sqrt())
    }

    /// Validates `tile` as a set whose translates `σ_γ(C)` partition `X`.
    pub fn tiling(&self, tile: Vec<usize>) -> Result<TilingData> {
        let m = self.set_size();
        let n = self.group.order();
        if tile.len() * n != m {
            return Err(Error::NonTiling(format!(
                "|Γ|·|C| = {} but |X| = {m}",
                tile.len() * n
            )));
        }
        let mut coset_map = vec![None; m];
        for (pos, &c) in tile.iter().enumerate() {
            if c >= m {
                return Err(Error::NonTiling(format!("tile point {c} out of range")));
            }
            for g in 0..n {
                let x = self.act(g, c);
                if coset_map[x].replace((g, pos)).is_some() {
                    return Err(Error::NonTiling(format!("translates overlap at {x}")));
                }
            }
        }
        let coset_map = coset_map
            .into_iter()
            .map(|c| c.expect("counting argument: no gaps without overlaps"))
            .collect();
        Ok(TilingData { tile, coset_map })
    }

    /// Smallest point of each orbit, when the action is free.
    pub fn find_tiling(&self) -> Result<TilingData> {
        let m = self.set_size();
        let mut seen = vec![false; m];
        let mut tile = Vec::new();
        for x in 0..m {
            if seen[x] {
                continue;
            }
            tile.push(x);
            for g in 0..self.group.order() {
                seen[self.act(g, x)] = true;
            }
        }
        self.tiling(tile)
    }
}

/// A tile `C` with `X = ⊔_γ σ_γ(C)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingData {
    pub tile: Vec<usize>,
    /// `coset_map[x] = (γ, i)` with `σ_γ(tile[i]) = x`.
    pub coset_map: Vec<(usize, usize)>,
}
