//! The bracket `[φ, ψ] ∈ L¹(R(Γ))`, orbit systems with their synthesis,
//! Gram and frame operators, and spectral frame classification.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, inner, CMatrix, CVector, HermitianEigen};
use crate::rep::UnitaryRep;
use crate::rng;
use crate::vn::VnOperator;

/// `Σ_γ ⟨φ, Π(γ)ψ⟩ ρ(γ)*`.
pub fn bracket(rep: &UnitaryRep, phi: &CVector, psi: &CVector) -> Result<VnOperator> {
    rep.check_vector(phi)?;
    rep.check_vector(psi)?;
    let coeffs = (0..rep.group().order())
        .map(|g| inner(phi, &rep.apply(g, psi)))
        .collect();
    VnOperator::new(rep.group().clone(), coeffs)
}

/// Worst relative defects of the bracket identities over random samples.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct BracketDiagnostics {
    /// `[φ, ψ]* = [ψ, φ]`.
    pub adjoint_symmetry: f64,
    /// `[φ, Π(γ)ψ] = ρ(γ)[φ, ψ]`.
    pub left_covariance: f64,
    /// `[Π(γ)φ, ψ] = [φ, ψ]ρ(γ)*`.
    pub right_covariance: f64,
    /// Negative part of the spectrum of `[ψ, ψ]`.
    pub positivity: f64,
    /// `‖[ψ, ψ]‖₁ = ‖ψ‖²`.
    pub trace_norm: f64,
}

impl BracketDiagnostics {
    pub fn max_defect(&self) -> f64 {
        [
            self.adjoint_symmetry,
            self.left_covariance,
            self.right_covariance,
            self.positivity,
            self.trace_norm,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Samples `trials` random pairs and group elements and records the worst
/// defect of each bracket identity. Defects are divided by `max(1, ‖φ‖‖ψ‖)`.
pub fn verify_bracket_properties<R: Rng + ?Sized>(
    rep: &UnitaryRep,
    trials: usize,
    rng: &mut R,
) -> Result<BracketDiagnostics> {
    let group = rep.group().clone();
    let n = group.order();
    let mut d = BracketDiagnostics::default();
    for _ in 0..trials {
        let phi = rng::vector(rng, rep.dim());
        let psi = rng::vector(rng, rep.dim());
        let g = rng.random_range(0..n);
        let scale = (phi.norm() * psi.norm()).max(1.0);
        let pp = bracket(rep, &phi, &psi)?;

        let swapped = bracket(rep, &psi, &phi)?;
        d.adjoint_symmetry = d
            .adjoint_symmetry
            .max(pp.adjoint().sub(&swapped)?.l2_norm() / scale);

        let rho = VnOperator::rho(group.clone(), g);
        let moved_right = bracket(rep, &phi, &rep.apply(g, &psi))?;
        d.left_covariance = d
            .left_covariance
            .max(moved_right.sub(&rho.multiply(&pp)?)?.l2_norm() / scale);

        let rho_adj = VnOperator::rho_adjoint(group.clone(), g);
        let moved_left = bracket(rep, &rep.apply(g, &phi), &psi)?;
        d.right_covariance = d
            .right_covariance
            .max(moved_left.sub(&pp.multiply(&rho_adj)?)?.l2_norm() / scale);

        let norm_sq = psi.norm_squared();
        let sq_scale = norm_sq.max(1.0);
        let gram = bracket(rep, &psi, &psi)?;
        let spec = gram.spectral()?;
        let lowest = spec.eigenvalues.first().copied().unwrap_or(0.0);
        d.positivity = d.positivity.max((-lowest).max(0.0) / sq_scale);
        d.trace_norm = d
            .trace_norm
            .max((gram.p_norm(1.0)? - norm_sq).abs() / sq_scale);
    }
    Ok(d)
}

/// The system `{Π(γ)ψ_j}` enumerated j-major, so `(j, γ)` sits at
/// `j·|Γ| + γ`.
#[derive(Debug, Clone)]
pub struct OrbitSystem {
    rep: UnitaryRep,
    generators: Vec<CVector>,
}

impl OrbitSystem {
    pub fn new(rep: UnitaryRep, generators: Vec<CVector>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptySystem);
        }
        for g in &generators {
            rep.check_vector(g)?;
        }
        Ok(Self { rep, generators })
    }

    pub fn single(rep: UnitaryRep, psi: CVector) -> Result<Self> {
        Self::new(rep, vec![psi])
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn generators(&self) -> &[CVector] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len() * self.rep.group().order()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_degenerate(&self) -> bool {
        self.generators.iter().all(|g| g.norm() == 0.0)
    }

    /// Columns `Π(γ)ψ_j` in system order.
    pub fn synthesis_matrix(&self) -> CMatrix {
        let blocks: Vec<CMatrix> = self.generators.iter().map(|g| self.rep.orbit(g)).collect();
        linalg::hstack(&blocks, self.rep.dim())
    }

    /// `T*T`, entry `((k,γ'), (j,γ)) = ⟨Π(γ)ψ_j, Π(γ')ψ_k⟩`.
    pub fn gram_matrix(&self) -> CMatrix {
        let t = self.synthesis_matrix();
        t.adjoint() * t
    }

    /// `T T*`.
    pub fn frame_operator(&self) -> CMatrix {
        let t = self.synthesis_matrix();
        &t * t.adjoint()
    }

    /// Row sums `Σ_k |⟨e_i, e_k⟩|²` of the squared Gram entries.
    pub fn square_integrability_diagnostic(&self) -> Vec<f64> {
        self.gram_matrix()
            .row_iter()
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    pub fn classify(&self) -> FrameReport {
        if self.is_degenerate() {
            return FrameReport::degenerate(self.len());
        }
        FrameReport::from_eigen(&HermitianEigen::new(&self.gram_matrix()))
    }

    pub fn rank_consistency(&self) -> RankConsistency {
        let gram_rank = HermitianEigen::new(&self.gram_matrix()).rank();
        let synthesis_rank = linalg::rank(&self.synthesis_matrix());
        RankConsistency {
            gram_rank,
            synthesis_rank,
            consistent: gram_rank == synthesis_rank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankConsistency {
    pub gram_rank: usize,
    pub synthesis_rank: usize,
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    RieszBasisSequence,
    FrameSequenceNotRiesz,
    BesselOnlyDegenerate,
    Invalid,
}

/// Eigenvectors realizing the lower and upper bound.
#[derive(Debug, Clone)]
pub struct Witnesses {
    pub lower: CVector,
    pub upper: CVector,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub classification: Classification,
    pub lower: f64,
    pub upper: f64,
    /// Ascending.
    pub spectrum: Vec<f64>,
    pub kernel_dim: usize,
    #[serde(skip)]
    pub witnesses: Option<Witnesses>,
}

impl FrameReport {
    /// Bounds are the smallest eigenvalue above the kernel cut and the
    /// largest eigenvalue.
    pub fn from_eigen(eig: &HermitianEigen) -> Self {
        let spectrum = eig.values.clone();
        if spectrum.iter().any(|v| !v.is_finite()) {
            return Self {
                classification: Classification::Invalid,
                lower: f64::NAN,
                upper: f64::NAN,
                spectrum,
                kernel_dim: 0,
                witnesses: None,
            };
        }
        let kernel_dim = (0..eig.dim()).filter(|&k| eig.values[k] <= eig.rank_tol).count();
        let Some(lo) = (0..eig.dim()).find(|&k| eig.values[k] > eig.rank_tol) else {
            return Self::degenerate(eig.dim());
        };
        let hi = eig.dim() - 1;
        let classification = if kernel_dim == 0 {
            Classification::RieszBasisSequence
        } else {
            Classification::FrameSequenceNotRiesz
        };
        Self {
            classification,
            lower: eig.values[lo],
            upper: eig.values[hi],
            spectrum,
            kernel_dim,
            witnesses: Some(Witnesses {
                lower: eig.vectors.column(lo).into_owned(),
                upper: eig.vectors.column(hi).into_owned(),
            }),
        }
    }

    pub fn degenerate(dim: usize) -> Self {
        Self {
            classification: Classification::BesselOnlyDegenerate,
            lower: 0.0,
            upper: 0.0,
            spectrum: vec![0.0; dim],
            kernel_dim: dim,
            witnesses: None,
        }
    }

    pub fn is_riesz(&self) -> bool {
        self.classification == Classification::RieszBasisSequence
    }

    /// Largest relative discrepancy between the bounds of two reports.
    pub fn bound_defect(&self, other: &FrameReport) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if self.lower == 0.0 && other.lower == 0.0 && self.upper == 0.0 && other.upper == 0.0 {
            return 0.0;
        }
        rel(self.lower, other.lower).max(rel(self.upper, other.upper))
    }
}

/// `‖to_matrix([ψ,ψ]) − 𝔊‖₂ / max(1, ‖𝔊‖₂)` for the single orbit of `ψ`.
pub fn bracket_equals_gram_check(rep: &UnitaryRep, psi: &CVector) -> Result<f64> {
    let from_bracket = bracket(rep, psi, psi)?.to_matrix();
    let gram = OrbitSystem::single(rep.clone(), psi.clone())?.gram_matrix();
    Ok(linalg::fro(&(from_bracket - &gram)) / linalg::fro(&gram).max(1.0))
}

/// Frame bounds of the orbit of `ψ` read from the spectrum of `[ψ, ψ]`.
pub fn principal_characterization(rep: &UnitaryRep, psi: &CVector) -> Result<FrameReport> {
    rep.check_vector(psi)?;
    if psi.norm() == 0.0 {
        return Err(Error::ZeroGenerator);
    }
    let spec = bracket(rep, psi, psi)?.spectral()?;
    Ok(FrameReport::from_eigen(&spec.as_eigen()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::group::FiniteGroup;
    use crate::linalg::{C64, ONE, ZERO};
    use crate::rng::stream;

    fn z(n: usize) -> Arc<FiniteGroup> {
        Arc::new(FiniteGroup::cyclic(n).unwrap())
    }

    fn delta(n: usize, k: usize) -> CVector {
        CVector::from_fn(n, |i, _| if i == k { ONE } else { ZERO })
    }

    fn real(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
    }

    #[test]
    fn bracket_of_delta_is_identity() {
        let g = z(5);
        let rep = UnitaryRep::translation(g.clone());
        let b = bracket(&rep, &delta(5, 0), &delta(5, 0)).unwrap();
        assert_eq!(b, VnOperator::identity(g));
    }

    #[test]
    fn bracket_of_constant_on_z2() {
        let rep = UnitaryRep::translation(z(2));
        let psi = real(&[1.0, 1.0]);
        let b = bracket(&rep, &psi, &psi).unwrap();
        assert_eq!(b.coeffs(), &[C64::new(2.0, 0.0), C64::new(2.0, 0.0)]);
    }

    #[test]
    fn bracket_vanishes_off_orbit() {
        let g = z(3);
        let rep = UnitaryRep::direct_sum(&[
            UnitaryRep::translation(g.clone()),
            UnitaryRep::translation(g.clone()),
        ])
        .unwrap();
        let phi = real(&[1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        let psi = real(&[0.0, 0.0, 0.0, 1.0, -1.0, 4.0]);
        assert_eq!(bracket(&rep, &phi, &psi).unwrap(), VnOperator::zero(g));
    }

    #[test]
    fn bracket_rejects_wrong_dimension() {
        let rep = UnitaryRep::translation(z(3));
        assert!(matches!(
            bracket(&rep, &real(&[1.0, 0.0]), &real(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bracket_properties_on_z4_and_conjugated_d3() {
        let rep = UnitaryRep::translation(z(4));
        let d = verify_bracket_properties(&rep, 100, &mut stream(11, "z4")).unwrap();
        assert!(d.max_defect() <= 1e-10, "{d:?}");

        let d3 = Arc::new(FiniteGroup::dihedral(3).unwrap());
        let lam = UnitaryRep::translation(d3);
        let sum = UnitaryRep::direct_sum(&[lam.clone(), lam]).unwrap();
        let u = rng::unitary(&mut stream(11, "u"), 12);
        let conj = sum.conjugate(&u).unwrap();
        let d = verify_bracket_properties(&conj, 100, &mut stream(11, "d3")).unwrap();
        assert!(d.max_defect() <= 1e-10, "{d:?}");
    }

    #[test]
    fn zero_vector_has_zero_trace_norm() {
        let rep = UnitaryRep::translation(z(3));
        let b = bracket(&rep, &CVector::zeros(3), &CVector::zeros(3)).unwrap();
        assert_eq!(b.p_norm(1.0).unwrap(), 0.0);
    }

    #[test]
    fn gram_examples() {
        let rep = UnitaryRep::translation(z(2));
        let sys = OrbitSystem::single(rep.clone(), real(&[1.0, 1.0])).unwrap();
        let two = C64::new(2.0, 0.0);
        assert_eq!(sys.gram_matrix(), CMatrix::from_element(2, 2, two));
        assert_eq!(sys.frame_operator(), CMatrix::from_element(2, 2, two));
        assert_eq!(sys.square_integrability_diagnostic(), vec![8.0, 8.0]);

        let sys = OrbitSystem::single(rep, real(&[1.0, 0.5])).unwrap();
        let g = sys.gram_matrix();
        assert_eq!(g[(0, 0)], C64::new(1.25, 0.0));
        assert_eq!(g[(0, 1)], C64::new(1.0, 0.0));
    }

    #[test]
    fn delta_orbit_is_orthonormal_basis() {
        let rep = UnitaryRep::translation(z(4));
        let sys = OrbitSystem::single(rep, delta(4, 0)).unwrap();
        assert_eq!(sys.gram_matrix(), CMatrix::identity(4, 4));
        assert_eq!(sys.frame_operator(), CMatrix::identity(4, 4));
        assert_eq!(sys.square_integrability_diagnostic(), vec![1.0; 4]);
        let report = sys.classify();
        assert!(report.is_riesz());
        assert!((report.lower - 1.0).abs() < 1e-14 && (report.upper - 1.0).abs() < 1e-14);
        let ranks = sys.rank_consistency();
        assert_eq!((ranks.gram_rank, ranks.synthesis_rank), (4, 4));
    }

    #[test]
    fn classify_examples_on_z2() {
        let rep = UnitaryRep::translation(z(2));
        let r = OrbitSystem::single(rep.clone(), real(&[1.0, 1.0])).unwrap().classify();
        assert_eq!(r.classification, Classification::FrameSequenceNotRiesz);
        assert_eq!(r.kernel_dim, 1);
        assert!((r.lower - 4.0).abs() < 1e-12 && (r.upper - 4.0).abs() < 1e-12);

        let r = OrbitSystem::single(rep, real(&[1.0, 0.5])).unwrap().classify();
        assert!(r.is_riesz());
        assert!((r.lower - 0.25).abs() < 1e-12 && (r.upper - 2.25).abs() < 1e-12);
    }

    #[test]
    fn all_zero_system_is_degenerate() {
        let rep = UnitaryRep::translation(z(3));
        let sys = OrbitSystem::new(rep, vec![CVector::zeros(3), CVector::zeros(3)]).unwrap();
        let r = sys.classify();
        assert_eq!(r.classification, Classification::BesselOnlyDegenerate);
        assert_eq!(r.kernel_dim, 6);
        assert_eq!(sys.square_integrability_diagnostic(), vec![0.0; 6]);
    }

    #[test]
    fn empty_system_is_rejected() {
        let rep = UnitaryRep::translation(z(3));
        assert!(matches!(OrbitSystem::new(rep, vec![]), Err(Error::EmptySystem)));
    }

    #[test]
    fn principal_matches_gram_classification() {
        let rep = UnitaryRep::translation(z(2));
        let psi = real(&[1.0, 1.0]);
        let p = principal_characterization(&rep, &psi).unwrap();
        assert!((p.lower - 4.0).abs() < 1e-12 && (p.upper - 4.0).abs() < 1e-12);
        assert_eq!(bracket_equals_gram_check(&rep, &psi).unwrap(), 0.0);
        assert!(matches!(
            principal_characterization(&rep, &CVector::zeros(2)),
            Err(Error::ZeroGenerator)
        ));
    }

    #[test]
    fn bracket_equals_gram_on_d4() {
        let d4 = Arc::new(FiniteGroup::dihedral(4).unwrap());
        let rep = UnitaryRep::translation(d4);
        let mut rng = stream(3, "d4");
        for _ in 0..20 {
            let psi = rng::vector(&mut rng, 8);
            assert!(bracket_equals_gram_check(&rep, &psi).unwrap() <= 1e-11);
        }
    }

    #[test]
    fn proportional_generators_keep_rank() {
        let rep = UnitaryRep::translation(z(4));
        let psi = real(&[1.0, 1.0, 0.0, 0.0]);
        let one = OrbitSystem::single(rep.clone(), psi.clone()).unwrap().rank_consistency();
        let two = OrbitSystem::new(rep, vec![psi.clone(), psi.scale(3.0)])
            .unwrap()
            .rank_consistency();
        assert!(one.consistent && two.consistent);
        assert_eq!(one.gram_rank, two.gram_rank);
    }

    #[test]
    fn frame_report_json_fields() {
        let rep = UnitaryRep::translation(z(2));
        let r = OrbitSystem::single(rep, real(&[1.0, 1.0])).unwrap().classify();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["classification"], "frame_sequence_not_riesz");
        assert_eq!(v["kernel_dim"], 1);
        assert!(v.get("witnesses").is_none());
    }
}
