//! Isometries from an invariant subspace into `L²(M, ν; L²(R(Γ)))` that
//! turn `Π(γ)` into right multiplication by `ρ(γ)*`.
//!
//! Three constructions are provided: the principal map of a single orbit,
//! the global map of an orthogonal family of orbits, and the Zak transform
//! of a measurable action with a tile. All of them are stored as one matrix
//! from `ℂⁿ` into stacked fiber coefficients, fiber `x` occupying rows
//! `x·|Γ| .. (x+1)·|Γ|`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::bracket;
use crate::group::FiniteGroup;
use crate::linalg::{self, fro, CMatrix, CVector, C64};
use crate::rep::{GroupAction, TilingData, UnitaryRep};
use crate::tol;
use crate::vn::{same_group, VnOperator};

/// `L²(R(Γ), Ω)` for a positive weight `Ω`, realized through `F ↦ Ω^{1/2}F`.
#[derive(Debug, Clone)]
pub struct WeightedSpace {
    weight: VnOperator,
    root: VnOperator,
    support: VnOperator,
}

impl WeightedSpace {
    pub fn new(weight: VnOperator) -> Result<Self> {
        let spec = weight.spectral()?;
        if let Some(&lowest) = spec.eigenvalues.first() {
            if lowest < -spec.rank_tol {
                return Err(Error::NotPositive { eigenvalue: lowest });
            }
        }
        let root = weight.sqrt()?;
        let support = weight.support_projection()?;
        Ok(Self {
            weight,
            root,
            support,
        })
    }

    pub fn weight(&self) -> &VnOperator {
        &self.weight
    }

    /// `Ω^{1/2}`.
    pub fn root(&self) -> &VnOperator {
        &self.root
    }

    /// `s_Ω`.
    pub fn support(&self) -> &VnOperator {
        &self.support
    }

    /// `‖Ω^{1/2}F‖₂`.
    pub fn weighted_norm(&self, f: &VnOperator) -> Result<f64> {
        Ok(self.weight_embedding(f)?.l2_norm())
    }

    /// `Ω^{1/2}F`, an element of `s_Ω L²(R(Γ))`.
    pub fn weight_embedding(&self, f: &VnOperator) -> Result<VnOperator> {
        self.root.multiply(f)
    }
}

/// A finitely supported field `x ↦ Φ(x) ∈ L²(R(Γ))` with point masses `ν(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HelsonImage {
    pub group: Arc<FiniteGroup>,
    pub base_points: Vec<usize>,
    pub weights: Vec<f64>,
    pub fibers: Vec<VnOperator>,
}

impl HelsonImage {
    pub fn new(
        group: Arc<FiniteGroup>,
        base_points: Vec<usize>,
        weights: Vec<f64>,
        fibers: Vec<VnOperator>,
    ) -> Result<Self> {
        if base_points.len() != weights.len() || base_points.len() != fibers.len() {
            return Err(Error::DimensionMismatch {
                expected: base_points.len(),
                found: fibers.len().min(weights.len()),
            });
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::NonFinite("base point weights".into()));
        }
        if fibers.iter().any(|f| !same_group(f.group(), &group)) {
            return Err(Error::GroupMismatch);
        }
        Ok(Self {
            group,
            base_points,
            weights,
            fibers,
        })
    }

    /// Splits stacked coefficients into fibers.
    pub fn from_stacked(
        group: Arc<FiniteGroup>,
        base_points: Vec<usize>,
        weights: Vec<f64>,
        stacked: &CVector,
    ) -> Result<Self> {
        let n = group.order();
        if stacked.len() != n * base_points.len() {
            return Err(Error::DimensionMismatch {
                expected: n * base_points.len(),
                found: stacked.len(),
            });
        }
        let fibers = stacked
            .as_slice()
            .chunks(n)
            .map(|c| VnOperator::new(group.clone(), c.to_vec()))
            .collect::<Result<_>>()?;
        Self::new(group, base_points, weights, fibers)
    }

    pub fn to_stacked(&self) -> CVector {
        CVector::from_iterator(
            self.fibers.len() * self.group.order(),
            self.fibers.iter().flat_map(|f| f.coeffs().iter().copied()),
        )
    }

    /// Orthonormal coordinates `√ν(x) Φ̂(x)`.
    pub fn to_isometric(&self) -> CVector {
        let n = self.group.order();
        let mut v = self.to_stacked();
        for (i, &w) in self.weights.iter().enumerate() {
            v.rows_mut(i * n, n).scale_mut(w.sqrt());
        }
        v
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }

    /// `(Σ_x ν(x) ‖Φ(x)‖₂²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.fibers
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `(ΦF)(x) = Φ(x)F`.
    pub fn right_act(&self, f: &VnOperator) -> Result<Self> {
        let fibers = self
            .fibers
            .iter()
            .map(|x| x.multiply(f))
            .collect::<Result<_>>()?;
        Ok(Self {
            fibers,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let fibers = self
            .fibers
            .iter()
            .zip(&other.fibers)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            fibers,
            ..self.clone()
        })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            fibers: self.fibers.iter().map(|f| f.scale(alpha)).collect(),
            ..self.clone()
        }
    }

    /// Inverse of [`to_isometric`](Self::to_isometric) on this layout.
    pub fn with_isometric(&self, coords: &CVector) -> Result<Self> {
        let n = self.group.order();
        let mut raw = coords.clone();
        for (i, &w) in self.weights.iter().enumerate() {
            raw.rows_mut(i * n, n).scale_mut(1.0 / w.sqrt());
        }
        Self::from_stacked(self.group.clone(), self.base_points.clone(), self.weights.clone(), &raw)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let fibers = self
            .fibers
            .iter()
            .zip(&other.fibers)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            fibers,
            ..self.clone()
        })
    }

    /// `Σ_x ν(x) Ψ(x)* Φ(x)` with `self = Φ`.
    pub fn pairing(&self, other: &Self) -> Result<VnOperator> {
        self.check_layout(other)?;
        let mut acc = VnOperator::zero(self.group.clone());
        for ((phi, psi), &w) in self.fibers.iter().zip(&other.fibers).zip(&self.weights) {
            acc = acc.add(&psi.adjoint().multiply(phi)?.scale(C64::new(w, 0.0)))?;
        }
        Ok(acc)
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if !same_group(&self.group, &other.group) {
            return Err(Error::GroupMismatch);
        }
        if self.base_points != other.base_points || self.weights != other.weights {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Principal,
    Global,
    Zak,
}

#[derive(Debug, Clone)]
pub enum MapSource {
    Principal { generator: CVector },
    Global { generators: Vec<CVector> },
    Zak { action: GroupAction, tiling: TilingData },
}

#[derive(Debug, Clone)]
pub struct HelsonMap {
    kind: MapKind,
    rep: UnitaryRep,
    forward: CMatrix,
    base_points: Vec<usize>,
    weights: Vec<f64>,
    domain: CMatrix,
    source: MapSource,
}

impl HelsonMap {
    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.rep.group()
    }

    pub fn source(&self) -> &MapSource {
        &self.source
    }

    /// Stacked-coefficient matrix, `|M|·|Γ|` rows by `n` columns.
    pub fn forward(&self) -> &CMatrix {
        &self.forward
    }

    pub fn base_points(&self) -> &[usize] {
        &self.base_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Orthogonal projection onto the domain.
    pub fn domain_projector(&self) -> &CMatrix {
        &self.domain
    }

    /// `forward` with fiber `x` scaled by `√ν(x)`; an isometry on the domain.
    pub fn isometric_matrix(&self) -> CMatrix {
        let n = self.group().order();
        let mut w = self.forward.clone();
        for (i, &nu) in self.weights.iter().enumerate() {
            w.rows_mut(i * n, n).scale_mut(nu.sqrt());
        }
        w
    }

    pub fn apply_stacked(&self, phi: &CVector) -> Result<CVector> {
        self.rep.check_vector(phi)?;
        Ok(&self.forward * phi)
    }

    pub fn apply(&self, phi: &CVector) -> Result<HelsonImage> {
        let stacked = self.apply_stacked(phi)?;
        HelsonImage::from_stacked(
            self.group().clone(),
            self.base_points.clone(),
            self.weights.clone(),
            &stacked,
        )
    }

    /// Distance of `phi` from the domain, relative to `‖phi‖`.
    pub fn domain_residual(&self, phi: &CVector) -> Result<f64> {
        self.rep.check_vector(phi)?;
        let r = (phi - &self.domain * phi).norm();
        Ok(if r == 0.0 { 0.0 } else { r / phi.norm() })
    }

    /// Preimage of an element of the range.
    ///
    /// The Zak transform uses its pointwise inversion formula; the other
    /// maps use the adjoint and reject images outside the range.
    pub fn inverse(&self, image: &HelsonImage) -> Result<CVector> {
        self.check_image(image)?;
        if let MapSource::Zak { action, tiling } = &self.source {
            return zak_inverse(action, tiling, image);
        }
        let residual = self.range_residual(image)?;
        if residual > tol::MEMBERSHIP_REL {
            return Err(Error::RangeViolation { residual });
        }
        Ok(self.isometric_matrix().adjoint() * image.to_isometric())
    }

    /// Distance of `image` from the range, relative to its norm.
    pub fn range_residual(&self, image: &HelsonImage) -> Result<f64> {
        self.check_image(image)?;
        let w = self.isometric_matrix();
        let target = image.to_isometric();
        let r = (&w * (w.adjoint() * &target) - &target).norm();
        Ok(if r == 0.0 { 0.0 } else { r / target.norm() })
    }

    fn check_image(&self, image: &HelsonImage) -> Result<()> {
        if !same_group(&image.group, self.group()) {
            return Err(Error::GroupMismatch);
        }
        if image.base_points != self.base_points {
            return Err(Error::DimensionMismatch {
                expected: self.base_points.len(),
                found: image.base_points.len(),
            });
        }
        Ok(())
    }

    /// `‖W*W − P‖₂` for the isometric matrix `W` and the domain projector `P`.
    pub fn isometry_defect(&self) -> f64 {
        let w = self.isometric_matrix();
        fro(&(w.adjoint() * &w - &self.domain))
    }

    /// `max_γ ‖T Π(γ) − R_{ρ(γ)*} T‖₂ / max(1, ‖T‖₂)` with `R` the fiberwise
    /// right multiplication.
    pub fn covariance_defect(&self) -> f64 {
        let group = self.group().clone();
        let scale = fro(&self.forward).max(1.0);
        (0..group.order())
            .map(|g| {
                let lhs = &self.forward * self.rep.matrix(g);
                let rho_adj = VnOperator::rho_adjoint(group.clone(), g);
                let rhs = self.fiberwise_right(&rho_adj) * &self.forward;
                fro(&(lhs - rhs)) / scale
            })
            .fold(0.0, f64::max)
    }

    /// Block-diagonal matrix of `Φ ↦ ΦF` on stacked coefficients.
    pub fn fiberwise_right(&self, f: &VnOperator) -> CMatrix {
        let n = self.group().order();
        let block = f.right_multiplication_matrix();
        let m = self.base_points.len();
        let mut out = CMatrix::zeros(m * n, m * n);
        for i in 0..m {
            out.view_mut((i * n, i * n), (n, n)).copy_from(&block);
        }
        out
    }

    /// `‖Σ_x ν(x) T[ψ](x)* T[φ](x) − [φ, ψ]‖₂ / max(1, ‖φ‖‖ψ‖)`.
    pub fn bracket_reconstruction_defect(&self, phi: &CVector, psi: &CVector) -> Result<f64> {
        let via_fibers = self.apply(phi)?.pairing(&self.apply(psi)?)?;
        let direct = bracket(&self.rep, phi, psi)?;
        Ok(via_fibers.sub(&direct)?.l2_norm() / (phi.norm() * psi.norm()).max(1.0))
    }
}

/// `U_ψ = [ψ,ψ]^{1/2} S_ψ` on `⟨ψ⟩`, written as `[ψ,ψ]^{+1/2} T_ψ*`.
pub fn principal_map(rep: &UnitaryRep, psi: &CVector) -> Result<HelsonMap> {
    let (forward, domain) = principal_parts(rep, psi)?;
    Ok(HelsonMap {
        kind: MapKind::Principal,
        rep: rep.clone(),
        forward,
        base_points: vec![0],
        weights: vec![1.0],
        domain,
        source: MapSource::Principal {
            generator: psi.clone(),
        },
    })
}

fn principal_parts(rep: &UnitaryRep, psi: &CVector) -> Result<(CMatrix, CMatrix)> {
    rep.check_vector(psi)?;
    if psi.norm() == 0.0 {
        return Err(Error::ZeroGenerator);
    }
    let orbit = rep.orbit(psi);
    let root_pinv = bracket(rep, psi, psi)?.pinv_sqrt()?;
    let forward = root_pinv.to_matrix() * orbit.adjoint();
    let basis = linalg::column_space(&orbit);
    let domain = &basis * basis.adjoint();
    Ok((forward, domain))
}

/// `S_ψ[φ] = [ψ,ψ]^+ [φ,ψ]`, the coefficient operator with `φ = P_{S_ψ[φ]} ψ`
/// for `φ ∈ ⟨ψ⟩`.
pub fn orbit_coefficients(rep: &UnitaryRep, psi: &CVector, phi: &CVector) -> Result<VnOperator> {
    rep.check_vector(psi)?;
    if psi.norm() == 0.0 {
        return Err(Error::ZeroGenerator);
    }
    let root_pinv = bracket(rep, psi, psi)?.pinv_sqrt()?;
    let u = principal_map(rep, psi)?.apply(phi)?;
    root_pinv.multiply(&u.fibers[0])
}

/// Splits an invariant subspace into orthogonal cyclic pieces.
///
/// Entry `k` of the result corresponds to `basis[k]`: its component
/// orthogonal to the orbits already collected, or `None` when that
/// component vanishes.
pub fn orthogonal_generators(rep: &UnitaryRep, basis: &[CVector]) -> Result<Vec<Option<CVector>>> {
    for v in basis {
        rep.check_vector(v)?;
    }
    let space = linalg::column_space(&CMatrix::from_columns(basis));
    let defect = invariance_defect(rep, &space);
    if defect > tol::MEMBERSHIP_REL {
        return Err(Error::NotInvariant { defect });
    }
    let dim = rep.dim();
    let mut collected = CMatrix::zeros(dim, 0);
    let mut out = Vec::with_capacity(basis.len());
    for v in basis {
        let residual = v - &collected * (collected.adjoint() * v);
        if residual.norm() <= tol::MEMBERSHIP_REL * v.norm() || residual.norm() == 0.0 {
            out.push(None);
            continue;
        }
        let orbit = rep.orbit(&residual);
        collected = linalg::column_space(&linalg::hstack(&[collected, orbit], dim));
        out.push(Some(residual));
    }
    Ok(out)
}

/// Largest distance from `Π(γ)q` to the span of the orthonormal columns `q`.
pub fn invariance_defect(rep: &UnitaryRep, space: &CMatrix) -> f64 {
    (0..rep.group().order())
        .map(|g| linalg::max_column_distance(space, &(rep.matrix(g) * space)))
        .fold(0.0, f64::max)
}

/// `max_{i≠j} ‖[ψ_i, ψ_j]‖₂ / (‖ψ_i‖‖ψ_j‖)`.
pub fn cross_bracket_defect(rep: &UnitaryRep, generators: &[CVector]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, a) in generators.iter().enumerate() {
        for b in &generators[i + 1..] {
            let d = bracket(rep, a, b)?.l2_norm() / (a.norm() * b.norm());
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// `φ ↦ {U_{ψ_i}[ℙ_{⟨ψ_i⟩}φ]}_i` for generators with mutually orthogonal orbits.
pub fn global_map(rep: &UnitaryRep, generators: &[CVector]) -> Result<HelsonMap> {
    if generators.is_empty() {
        return Err(Error::EmptySystem);
    }
    for g in generators {
        rep.check_vector(g)?;
        if g.norm() == 0.0 {
            return Err(Error::ZeroGenerator);
        }
    }
    let defect = cross_bracket_defect(rep, generators)?;
    if defect > tol::MEMBERSHIP_REL {
        return Err(Error::NonOrthogonalGenerators { defect });
    }
    let n = rep.group().order();
    let mut forward = CMatrix::zeros(generators.len() * n, rep.dim());
    let mut domain = CMatrix::zeros(rep.dim(), rep.dim());
    for (i, psi) in generators.iter().enumerate() {
        let (f, p) = principal_parts(rep, psi)?;
        forward.rows_mut(i * n, n).copy_from(&f);
        domain += p;
    }
    Ok(HelsonMap {
        kind: MapKind::Global,
        rep: rep.clone(),
        forward,
        base_points: (0..generators.len()).collect(),
        weights: vec![1.0; generators.len()],
        domain,
        source: MapSource::Global {
            generators: generators.to_vec(),
        },
    })
}

/// Global map of the invariant subspace spanned by `basis`.
pub fn global_map_from_space(rep: &UnitaryRep, basis: &[CVector]) -> Result<HelsonMap> {
    let generators: Vec<CVector> = orthogonal_generators(rep, basis)?.into_iter().flatten().collect();
    global_map(rep, &generators)
}

/// Global map of `span{Π(γ)φ_j}`, the smallest invariant subspace holding
/// the given vectors.
pub fn global_map_of_orbits(rep: &UnitaryRep, vectors: &[CVector]) -> Result<HelsonMap> {
    let mut basis = Vec::with_capacity(vectors.len() * rep.group().order());
    for v in vectors {
        rep.check_vector(v)?;
        basis.extend(rep.orbit(v).column_iter().map(|c| c.into_owned()));
    }
    global_map_from_space(rep, &basis)
}

/// `Z[φ](c) = Σ_η J(η, c)^{1/2} φ(σ_η c) ρ(η)*` for `c` in the tile, with
/// base weights `ν(c) = μ(c)`.
///
/// Vectors are orthonormal coordinates of `L²(X, μ)`.
pub fn zak_map(action: &GroupAction, tiling: &TilingData) -> Result<HelsonMap> {
    let checked = action.tiling(tiling.tile.clone())?;
    if &checked != tiling {
        return Err(Error::NonTiling("coset map does not match the tile".into()));
    }
    let group = action.group();
    let n = group.order();
    let size = action.set_size();
    let mu = action.measure();
    let mut forward = CMatrix::zeros(tiling.tile.len() * n, size);
    for (i, &c) in tiling.tile.iter().enumerate() {
        for eta in 0..n {
            let y = action.act(eta, c);
            let w = (action.jacobian(eta, c) / mu[y]).sqrt();
            forward[(i * n + eta, y)] = C64::new(w, 0.0);
        }
    }
    Ok(HelsonMap {
        kind: MapKind::Zak,
        rep: UnitaryRep::action(action),
        forward,
        base_points: tiling.tile.clone(),
        weights: tiling.tile.iter().map(|&c| mu[c]).collect(),
        domain: CMatrix::identity(size, size),
        source: MapSource::Zak {
            action: action.clone(),
            tiling: tiling.clone(),
        },
    })
}

/// `ψ(σ_g c) = J(g, c)^{-1/2} τ(Ψ(c) ρ(g))`, returned in coordinates.
fn zak_inverse(action: &GroupAction, tiling: &TilingData, image: &HelsonImage) -> Result<CVector> {
    let group = action.group();
    let values = tiling
        .coset_map
        .iter()
        .map(|&(g, i)| {
            let c = tiling.tile[i];
            let coeff = image.fibers[i]
                .multiply(&VnOperator::rho(group.clone(), g))?
                .trace();
            Ok(coeff / action.jacobian(g, c).sqrt())
        })
        .collect::<Result<Vec<C64>>>()?;
    Ok(action.to_coordinates(&CVector::from_vec(values)))
}

/// `P_F ψ = Σ_γ F̂(γ) Π(γ)ψ`.
pub fn operator_shift(rep: &UnitaryRep, f: &VnOperator, psi: &CVector) -> Result<CVector> {
    rep.check_vector(psi)?;
    if !same_group(f.group(), rep.group()) {
        return Err(Error::GroupMismatch);
    }
    Ok(f.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() != 0.0)
        .fold(CVector::zeros(rep.dim()), |acc, (g, &c)| acc + rep.apply(g, psi) * c))
}

/// `‖T[P_F φ] − T[φ]F‖ / max(1, ‖φ‖·‖F‖₂)` for `φ` in the domain.
pub fn intertwining_check(map: &HelsonMap, f: &VnOperator, phi: &CVector) -> Result<f64> {
    let residual = map.domain_residual(phi)?;
    if residual > tol::MEMBERSHIP_REL {
        return Err(Error::DomainViolation { residual });
    }
    let shifted = operator_shift(map.rep(), f, phi)?;
    let lhs = map.apply(&shifted)?;
    let rhs = map.apply(phi)?.right_act(f)?;
    Ok(lhs.sub(&rhs)?.norm() / (phi.norm() * f.l2_norm()).max(1.0))
}

/// Outcome of solving `φ = P_F ψ`.
#[derive(Debug, Clone)]
pub enum OrbitMembership {
    InSpan { coefficient: VnOperator, residual: f64 },
    NotInSpan { residual: f64 },
}

impl OrbitMembership {
    pub fn residual(&self) -> f64 {
        match self {
            Self::InSpan { residual, .. } | Self::NotInSpan { residual } => *residual,
        }
    }
}

/// Solves `[φ,ψ] = [ψ,ψ]F` with `F = [ψ,ψ]^+[φ,ψ]` and accepts when
/// `‖P_F ψ − φ‖ ≤ MEMBERSHIP_REL·‖φ‖`.
pub fn bdr_coefficient(rep: &UnitaryRep, phi: &CVector, psi: &CVector) -> Result<OrbitMembership> {
    rep.check_vector(phi)?;
    rep.check_vector(psi)?;
    if psi.norm() == 0.0 {
        return Err(Error::ZeroGenerator);
    }
    let gram_pinv = bracket(rep, psi, psi)?.pinv()?;
    let coefficient = gram_pinv.multiply(&bracket(rep, phi, psi)?)?;
    let residual = (operator_shift(rep, &coefficient, psi)? - phi).norm();
    Ok(if residual <= tol::MEMBERSHIP_REL * phi.norm() {
        OrbitMembership::InSpan {
            coefficient,
            residual,
        }
    } else {
        OrbitMembership::NotInSpan { residual }
    })
}
