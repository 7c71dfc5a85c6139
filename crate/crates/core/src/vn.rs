//! Finite-dimensional realization of the right group von Neumann algebra
//! `R(Γ)` and its noncommutative `L^p` spaces.
//!
//! An operator is stored by its Fourier coefficients `F̂ ∈ ℂ^{|Γ|}` in the
//! expansion `F = Σ_γ F̂(γ) ρ(γ)*`; the right-convolution matrix is only
//! materialized on demand. With this normalization the trace is
//! `τ(F) = F̂(e) = Tr(M)/|Γ|` and `‖F‖₂² = Σ_γ |F̂(γ)|²`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{fro, CMatrix, HermitianEigen, C64, ONE, ZERO};
use crate::tol;

#[derive(Debug, Clone)]
pub struct VnOperator {
    group: Arc<FiniteGroup>,
    coeffs: Vec<C64>,
}

/// Eigendecomposition of a self-adjoint element of `R(Γ)`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub rank_tol: f64,
    /// Norm of the skew part removed by Hermitization.
    pub skew_defect: f64,
}

impl From<HermitianEigen> for SpectralData {
    fn from(e: HermitianEigen) -> Self {
        SpectralData {
            eigenvalues: e.values,
            eigenvectors: e.vectors,
            rank_tol: e.rank_tol,
            skew_defect: e.skew_defect,
        }
    }
}

impl SpectralData {
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|v| v.abs() > self.rank_tol).count()
    }

    pub fn as_eigen(&self) -> HermitianEigen {
        HermitianEigen {
            values: self.eigenvalues.clone(),
            vectors: self.eigenvectors.clone(),
            rank_tol: self.rank_tol,
            skew_defect: self.skew_defect,
        }
    }
}

pub fn same_group(a: &Arc<FiniteGroup>, b: &Arc<FiniteGroup>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl PartialEq for VnOperator {
    fn eq(&self, other: &Self) -> bool {
        same_group(&self.group, &other.group) && self.coeffs == other.coeffs
    }
}

impl VnOperator {
    pub fn new(group: Arc<FiniteGroup>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != group.order() {
            return Err(Error::DimensionMismatch {
                expected: group.order(),
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator coefficients".into()));
        }
        Ok(Self { group, coeffs })
    }

    pub fn zero(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        Self {
            group,
            coeffs: vec![ZERO; n],
        }
    }

    pub fn identity(group: Arc<FiniteGroup>) -> Self {
        Self::rho_adjoint(group.clone(), group.identity())
    }

    /// `ρ(γ)*`, the basis element with coefficient 1 at `γ`.
    pub fn rho_adjoint(group: Arc<FiniteGroup>, g: usize) -> Self {
        let mut op = Self::zero(group);
        op.coeffs[g] = ONE;
        op
    }

    /// `ρ(γ) = ρ(γ⁻¹)*`.
    pub fn rho(group: Arc<FiniteGroup>, g: usize) -> Self {
        let gi = group.inv(g);
        Self::rho_adjoint(group, gi)
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, g: usize) -> C64 {
        self.coeffs[g]
    }

    fn check_group(&self, other: &VnOperator) -> Result<()> {
        if same_group(&self.group, &other.group) {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    /// Right-convolution matrix `M u = u ∗ F̂`, i.e. `M[x][y] = F̂(y⁻¹x)`.
    pub fn to_matrix(&self) -> CMatrix {
        let g = &self.group;
        let n = g.order();
        CMatrix::from_fn(n, n, |x, y| self.coeffs[g.mul(g.inv(y), x)])
    }

    /// Matrix of `G ↦ G F` acting on coefficient vectors.
    ///
    /// Left multiplication `G ↦ F G` in coefficient coordinates is
    /// [`to_matrix`](Self::to_matrix) itself, since `Ĝ = G δ_e`.
    pub fn right_multiplication_matrix(&self) -> CMatrix {
        let g = &self.group;
        let n = g.order();
        // (G F)^(ζ) = Σ_{b a = ζ} Ĝ(a) F̂(b)  ⇒  entry (ζ, a) = F̂(ζ a⁻¹).
        CMatrix::from_fn(n, n, |z, a| self.coeffs[g.mul(z, g.inv(a))])
    }

    /// Reads Fourier coefficients `F̂(γ) = τ(M ρ(γ))` off a matrix affiliated
    /// to `R(Γ)`.
    ///
    /// Fails with [`Error::NotAffiliated`] when some commutator `[M, λ(γ)]`
    /// exceeds the affiliation tolerance relative to `‖M‖`.
    pub fn from_matrix(m: &CMatrix, group: Arc<FiniteGroup>) -> Result<Self> {
        let n = group.order();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        let defect = commutator_defect(m, &group);
        if defect > tol::AFFILIATION_REL * fro(m).max(1.0) {
            return Err(Error::NotAffiliated { defect });
        }
        Ok(Self::project_matrix(m, group))
    }

    /// Coefficients of the conditional expectation of `m` onto `R(Γ)`:
    /// `F̂(γ) = Tr(M ρ(γ))/|Γ|`. Exact for affiliated matrices; used
    /// internally where affiliation holds by construction.
    pub(crate) fn project_matrix(m: &CMatrix, group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        let scale = 1.0 / n as f64;
        let coeffs = (0..n)
            .map(|g| {
                // Tr(M ρ(γ)) = Σ_x M[x][x γ⁻¹]
                let gi = group.inv(g);
                (0..n).map(|x| m[(x, group.mul(x, gi))]).sum::<C64>() * scale
            })
            .collect();
        Self { group, coeffs }
    }

    /// `τ(F) = F̂(e)`.
    pub fn trace(&self) -> C64 {
        self.coeffs[self.group.identity()]
    }

    pub fn adjoint(&self) -> Self {
        let g = &self.group;
        let coeffs = (0..g.order()).map(|x| self.coeffs[g.inv(x)].conj()).collect();
        Self {
            group: self.group.clone(),
            coeffs,
        }
    }

    /// `F G`, using `ρ(a)* ρ(b)* = ρ(b a)*`.
    pub fn multiply(&self, other: &VnOperator) -> Result<Self> {
        self.check_group(other)?;
        let g = &self.group;
        let n = g.order();
        let mut out = vec![ZERO; n];
        for (a, &fa) in self.coeffs.iter().enumerate() {
            if fa == ZERO {
                continue;
            }
            for (b, &gb) in other.coeffs.iter().enumerate() {
                out[g.mul(b, a)] += fa * gb;
            }
        }
        Ok(Self {
            group: self.group.clone(),
            coeffs: out,
        })
    }

    pub fn add(&self, other: &VnOperator) -> Result<Self> {
        self.check_group(other)?;
        Ok(Self {
            group: self.group.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &VnOperator) -> Result<Self> {
        self.check_group(other)?;
        Ok(Self {
            group: self.group.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            group: self.group.clone(),
            coeffs: self.coeffs.iter().map(|z| z * alpha).collect(),
        }
    }

    /// `‖F‖₂` through Plancherel.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|F|² = F* F`.
    pub fn abs_sq(&self) -> Self {
        self.adjoint()
            .multiply(self)
            .expect("operator and its adjoint share a group")
    }

    /// Singular values of the matrix form, ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.to_matrix().singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        sv
    }

    /// `‖F‖_p = τ(|F|^p)^{1/p}`, or the operator norm for `p = ∞`.
    pub fn p_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        let sv = self.singular_values();
        if p.is_infinite() {
            return Ok(sv.last().copied().unwrap_or(0.0));
        }
        let n = sv.len() as f64;
        let tau = sv.iter().map(|s| s.powf(p)).sum::<f64>() / n;
        Ok(tau.powf(1.0 / p))
    }

    pub fn self_adjoint_defect(&self) -> f64 {
        self.sub(&self.adjoint()).expect("same group").l2_norm() * 0.5
    }

    /// Eigendecomposition after Hermitization `(M + M*)/2`.
    pub fn spectral(&self) -> Result<SpectralData> {
        let defect = self.self_adjoint_defect();
        if defect > tol::SELF_ADJOINT_REL * self.l2_norm().max(1.0) {
            return Err(Error::NotSelfAdjoint { defect });
        }
        Ok(HermitianEigen::new(&self.to_matrix()).into())
    }

    /// `s_F`, the projection onto `Ker(F)^⊥`.
    pub fn support_projection(&self) -> Result<Self> {
        let spec = self.spectral()?;
        Ok(Self::project_matrix(&spec.as_eigen().support(), self.group.clone()))
    }

    /// Functional calculus `Q f(Λ) Q*` on a self-adjoint operator.
    ///
    /// With `on_support_only`, eigenvalues inside the kernel cut are sent to
    /// zero without evaluating `f`. Any other eigenvalue where `f` is not
    /// finite is reported as [`Error::UndefinedSpectralFunction`].
    pub fn apply_function<F: Fn(f64) -> f64>(&self, f: F, on_support_only: bool) -> Result<Self> {
        let spec = self.spectral()?;
        self.apply_on(&spec, f, on_support_only)
    }

    fn apply_on<F: Fn(f64) -> f64>(
        &self,
        spec: &SpectralData,
        f: F,
        on_support_only: bool,
    ) -> Result<Self> {
        let cut = spec.rank_tol;
        let mut mapped = Vec::with_capacity(spec.eigenvalues.len());
        for &v in &spec.eigenvalues {
            let w = if on_support_only && v.abs() <= cut { 0.0 } else { f(v) };
            if !w.is_finite() {
                return Err(Error::UndefinedSpectralFunction { eigenvalue: v });
            }
            mapped.push(w);
        }
        let m = spec.as_eigen().with_weights(&mapped);
        Ok(Self::project_matrix(&m, self.group.clone()))
    }

    /// Square root of a positive semidefinite operator. Eigenvalues in
    /// `[-rank_tol, 0)` are clamped to zero.
    pub fn sqrt(&self) -> Result<Self> {
        let spec = self.spectral()?;
        let cut = spec.rank_tol;
        self.apply_on(
            &spec,
            |v| {
                if v >= -cut {
                    v.max(0.0).sqrt()
                } else {
                    f64::NAN
                }
            },
            false,
        )
    }

    /// Pseudo-inverse on the support.
    pub fn pinv(&self) -> Result<Self> {
        self.apply_function(|v| 1.0 / v, true)
    }

    /// `(F⁺)^{1/2}` for positive semidefinite `F`.
    pub fn pinv_sqrt(&self) -> Result<Self> {
        let spec = self.spectral()?;
        let cut = spec.rank_tol;
        self.apply_on(
            &spec,
            |v| if v > cut { 1.0 / v.sqrt() } else { f64::NAN },
            true,
        )
    }

    /// Values `Σ_γ F̂(γ) χ(γ⁻¹)` over the characters of an abelian group.
    ///
    /// The value at `χ` is the eigenvalue of the matrix form on the
    /// eigenvector `χ̄`, so the collection equals the spectrum as a multiset.
    pub fn pontryagin_eigenvalues(&self) -> Result<Vec<C64>> {
        let chars = self.group.characters()?;
        let g = &self.group;
        Ok(chars
            .iter()
            .map(|chi| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(x, &c)| c * chi.value(g.inv(x)))
                    .sum()
            })
            .collect())
    }
}

/// `max_γ ‖[M, λ(γ)]‖₂`.
pub fn commutator_defect(m: &CMatrix, group: &FiniteGroup) -> f64 {
    let n = group.order();
    let mut worst = 0.0_f64;
    for g in 0..n {
        let perm = group.left_perm(g);
        // (M λ)[x][y] = M[x][g y],  (λ M)[x][y] = M[g⁻¹ x][y]
        let gi = group.inv(g);
        let mut acc = 0.0;
        for x in 0..n {
            for y in 0..n {
                let d = m[(x, perm[y])] - m[(group.mul(gi, x), y)];
                acc += d.norm_sqr();
            }
        }
        worst = worst.max(acc.sqrt());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::perm_matrix;

    fn z(n: usize) -> Arc<FiniteGroup> {
        Arc::new(FiniteGroup::cyclic(n).unwrap())
    }

    fn op(g: &Arc<FiniteGroup>, c: &[f64]) -> VnOperator {
        VnOperator::new(g.clone(), c.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn to_matrix_examples() {
        let g = z(2);
        assert_eq!(VnOperator::identity(g.clone()).to_matrix(), CMatrix::identity(2, 2));
        assert_eq!(op(&g, &[0.0, 1.0]).to_matrix(), perm_matrix(&[1, 0]));
        let d3 = Arc::new(FiniteGroup::dihedral(3).unwrap());
        let (rho, _) = d3.regular_representations();
        for (x, r) in rho.iter().enumerate() {
            let m = VnOperator::rho_adjoint(d3.clone(), x).to_matrix();
            assert_eq!(m, r.adjoint());
        }
    }

    #[test]
    fn matrix_is_right_convolution() {
        let d3 = Arc::new(FiniteGroup::dihedral(3).unwrap());
        let f: Vec<C64> = (0..6).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let u: Vec<C64> = (0..6).map(|k| C64::new(1.0, k as f64 * 0.5)).collect();
        let m = VnOperator::new(d3.clone(), f.clone()).unwrap().to_matrix();
        let mu = &m * crate::linalg::CVector::from_vec(u.clone());
        for x in 0..6 {
            // (u ∗ F̂)(x) = Σ_y u(y) F̂(y⁻¹ x)
            let conv: C64 = (0..6).map(|y| u[y] * f[d3.mul(d3.inv(y), x)]).sum();
            assert!((conv - mu[x]).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_coefficients_examples() {
        let d4 = Arc::new(FiniteGroup::dihedral(4).unwrap());
        let id = VnOperator::from_matrix(&CMatrix::identity(8, 8), d4.clone()).unwrap();
        assert_eq!(id, VnOperator::identity(d4.clone()));
        let (rho, lambda) = d4.regular_representations();
        for (g, r) in rho.iter().enumerate() {
            let f = VnOperator::from_matrix(&r.adjoint(), d4.clone()).unwrap();
            assert_eq!(f, VnOperator::rho_adjoint(d4.clone(), g));
        }
        // λ(γ) is not in R(Γ) for nonabelian Γ.
        assert!(matches!(
            VnOperator::from_matrix(&lambda[1], d4),
            Err(Error::NotAffiliated { .. })
        ));
    }

    #[test]
    fn trace_examples() {
        let g = z(6);
        assert_eq!(VnOperator::identity(g.clone()).trace(), ONE);
        for x in 1..6 {
            let r = VnOperator::rho(g.clone(), x);
            assert_eq!(r.trace(), ZERO);
            // ⟨ρ(γ)δ_e, δ_e⟩ from the matrix form
            assert_eq!(r.to_matrix()[(0, 0)], ZERO);
        }
    }

    #[test]
    fn p_norm_examples() {
        let g = z(2);
        let f = op(&g, &[1.0, 1.0]);
        assert!((f.p_norm(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((f.p_norm(2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!((f.p_norm(f64::INFINITY).unwrap() - 2.0).abs() < 1e-14);
        let h = Arc::new(FiniteGroup::heisenberg(2).unwrap());
        let r = VnOperator::rho(h, 3);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            assert!((r.p_norm(p).unwrap() - 1.0).abs() < 1e-13);
        }
        assert!(matches!(f.p_norm(0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn ring_operation_examples() {
        let d3 = Arc::new(FiniteGroup::dihedral(3).unwrap());
        for a in 0..6 {
            let ra = VnOperator::rho_adjoint(d3.clone(), a);
            assert_eq!(ra.adjoint(), VnOperator::rho_adjoint(d3.clone(), d3.inv(a)));
            for b in 0..6 {
                let rb = VnOperator::rho_adjoint(d3.clone(), b);
                let prod = ra.multiply(&rb).unwrap();
                assert_eq!(prod, VnOperator::rho_adjoint(d3.clone(), d3.mul(b, a)));
                assert_eq!(prod.to_matrix(), ra.to_matrix() * rb.to_matrix());
            }
        }
        let other = VnOperator::identity(z(6));
        assert!(matches!(
            VnOperator::identity(d3).multiply(&other),
            Err(Error::GroupMismatch)
        ));
    }

    #[test]
    fn spectral_examples() {
        let g = z(2);
        let s = VnOperator::identity(g.clone()).spectral().unwrap();
        assert!(s.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let s = op(&g, &[1.0, 1.0]).spectral().unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-14);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-14);
        let skew = VnOperator::new(g, vec![ZERO, C64::new(0.0, 1.0)]).unwrap();
        assert!(matches!(skew.spectral(), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn support_projection_examples() {
        let g = z(2);
        let inv = op(&g, &[2.0, 1.0]);
        let s = inv.support_projection().unwrap();
        assert!(s.sub(&VnOperator::identity(g.clone())).unwrap().l2_norm() < 1e-13);

        let f = op(&g, &[1.0, 1.0]);
        let s = f.support_projection().unwrap();
        assert!(s.sub(&op(&g, &[0.5, 0.5])).unwrap().l2_norm() < 1e-13);

        let zero = VnOperator::zero(g.clone());
        assert!(zero.support_projection().unwrap().l2_norm() == 0.0);
    }

    #[test]
    fn apply_function_examples() {
        let d4 = Arc::new(FiniteGroup::dihedral(4).unwrap());
        let id = VnOperator::identity(d4.clone());
        assert!(id.sqrt().unwrap().sub(&id).unwrap().l2_norm() < 1e-13);
        let two = id.scale(C64::new(2.0, 0.0));
        let r2 = two.sqrt().unwrap();
        assert!(r2.sub(&id.scale(C64::new(2f64.sqrt(), 0.0))).unwrap().l2_norm() < 1e-13);

        let g = z(2);
        let f = op(&g, &[1.0, 1.0]);
        let p = f.pinv().unwrap();
        assert!(p.sub(&op(&g, &[0.25, 0.25])).unwrap().l2_norm() < 1e-13);
        assert!(matches!(
            f.apply_function(|v| 1.0 / v, false),
            Err(Error::UndefinedSpectralFunction { .. })
        ));
        let neg = op(&g, &[-1.0, 0.0]);
        assert!(matches!(neg.sqrt(), Err(Error::UndefinedSpectralFunction { .. })));
    }

    #[test]
    fn pontryagin_examples() {
        let g = z(2);
        let id = VnOperator::identity(g.clone());
        assert!(id.pontryagin_eigenvalues().unwrap().iter().all(|v| (v - ONE).norm() < 1e-15));
        let vals = op(&g, &[1.0, 1.0]).pontryagin_eigenvalues().unwrap();
        // Characters come out trivial first.
        assert!((vals[0] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(vals[1].norm() < 1e-14);
        let d3 = Arc::new(FiniteGroup::dihedral(3).unwrap());
        assert!(matches!(
            VnOperator::identity(d3).pontryagin_eigenvalues(),
            Err(Error::NonAbelian)
        ));
    }
}
