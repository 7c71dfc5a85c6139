//! Hilbert-module layer over `R(Γ)`: the modular inner product on the
//! range of a Helson map, modular Gram and frame operators, canonical duals,
//! and comparison against the classical orbit system.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{bracket, FrameReport, OrbitSystem};
use crate::helson::{HelsonImage, HelsonMap};
use crate::linalg::{self, fro, CMatrix, CVector, HermitianEigen, C64};
use crate::rep::UnitaryRep;
use crate::rng;
use crate::tol;
use crate::vn::VnOperator;

/// `{Φ, Ψ}_K = Σ_x ν(x) Ψ(x)* Φ(x)` for elements of the map's range.
pub fn modular_inner(map: &HelsonMap, a: &HelsonImage, b: &HelsonImage) -> Result<VnOperator> {
    for img in [a, b] {
        let residual = map.range_residual(img)?;
        if residual > tol::MEMBERSHIP_REL {
            return Err(Error::RangeViolation { residual });
        }
    }
    a.pairing(b)
}

/// Images `Φ_j = T[φ_j]` of a generator family under a Helson map.
#[derive(Debug, Clone)]
pub struct ModularSystem {
    map: HelsonMap,
    images: Vec<HelsonImage>,
}

impl ModularSystem {
    pub fn from_images(map: HelsonMap, images: Vec<HelsonImage>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptySystem);
        }
        for img in &images {
            let residual = map.range_residual(img)?;
            if residual > tol::MEMBERSHIP_REL {
                return Err(Error::RangeViolation { residual });
            }
        }
        Ok(Self { map, images })
    }

    pub fn from_map(map: HelsonMap, generators: &[CVector]) -> Result<Self> {
        let images = generators
            .iter()
            .map(|g| {
                let residual = map.domain_residual(g)?;
                if residual > tol::MEMBERSHIP_REL {
                    return Err(Error::DomainViolation { residual });
                }
                map.apply(g)
            })
            .collect::<Result<_>>()?;
        Self::from_images(map, images)
    }

    pub fn map(&self) -> &HelsonMap {
        &self.map
    }

    pub fn images(&self) -> &[HelsonImage] {
        &self.images
    }

    fn order(&self) -> usize {
        self.map.group().order()
    }

    /// `{Φ_k, Φ_j}_K`, the entry in block row `j` and column `k`.
    pub fn block(&self, j: usize, k: usize) -> Result<VnOperator> {
        self.images[k].pairing(&self.images[j])
    }

    pub fn blocks(&self) -> Result<Vec<Vec<VnOperator>>> {
        let m = self.images.len();
        (0..m)
            .map(|j| (0..m).map(|k| self.block(j, k)).collect())
            .collect()
    }

    /// Block matrix of right-convolution matrices of the blocks, acting on
    /// `ℓ₂(I) ⊗ ℓ₂(Γ)`.
    pub fn big_matrix(&self) -> Result<CMatrix> {
        let n = self.order();
        let m = self.images.len();
        let mut out = CMatrix::zeros(m * n, m * n);
        for (j, row) in self.blocks()?.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                out.view_mut((j * n, k * n), (n, n)).copy_from(&b.to_matrix());
            }
        }
        Ok(out)
    }

    /// `max_{j,k} ‖block(j,k)* − block(k,j)‖₂`.
    pub fn block_hermiticity_defect(&self) -> Result<f64> {
        let blocks = self.blocks()?;
        let mut worst = 0.0_f64;
        for (j, row) in blocks.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                worst = worst.max(b.adjoint().sub(&blocks[k][j])?.l2_norm());
            }
        }
        Ok(worst)
    }

    /// `T_j = Σ_k |{Φ_j, Φ_k}|²`.
    pub fn square_integrability(&self) -> Result<Vec<VnOperator>> {
        let m = self.images.len();
        (0..m)
            .map(|j| {
                let mut acc = VnOperator::zero(self.map.group().clone());
                for k in 0..m {
                    acc = acc.add(&self.images[j].pairing(&self.images[k])?.abs_sq())?;
                }
                Ok(acc)
            })
            .collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.images.iter().all(|i| i.norm() == 0.0)
    }

    pub fn classify(&self) -> Result<ModularReport> {
        let big = self.big_matrix()?;
        if self.is_degenerate() {
            return Ok(ModularReport::from(FrameReport::degenerate(big.nrows())));
        }
        Ok(FrameReport::from_eigen(&HermitianEigen::new(&big)).into())
    }

    /// `𝔉̃Ψ = Σ_j Φ_j {Ψ, Φ_j}` for `Ψ` in the range of the map.
    pub fn frame_operator(&self, target: &HelsonImage) -> Result<HelsonImage> {
        let residual = self.map.range_residual(target)?;
        if residual > tol::MEMBERSHIP_REL {
            return Err(Error::RangeViolation { residual });
        }
        self.synthesize_against(&self.images, target)
    }

    /// `Σ_j left_j {target, right_j}` over the system's layout.
    fn synthesize_against(&self, right: &[HelsonImage], target: &HelsonImage) -> Result<HelsonImage> {
        let mut acc = target.scale(C64::new(0.0, 0.0));
        for (left, r) in self.images.iter().zip(right) {
            acc = acc.add(&left.right_act(&target.pairing(r)?)?)?;
        }
        Ok(acc)
    }

    /// Matrix of `𝔉̃` in orthonormal stacked coordinates; zero on the
    /// complement of the range.
    pub fn frame_operator_matrix(&self) -> Result<CMatrix> {
        let template = &self.images[0];
        let dim = template.to_stacked().len();
        let mut out = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut e = CVector::zeros(dim);
            e[c] = C64::new(1.0, 0.0);
            let probe = template.with_isometric(&e)?;
            let col = self.synthesize_against(&self.images, &probe)?.to_isometric();
            out.set_column(c, &col);
        }
        Ok(out)
    }

    /// Orthonormal basis of `X_Φ = span{Φ_j ρ(γ)*}` in stacked coordinates.
    pub fn module_basis(&self) -> Result<CMatrix> {
        let group = self.map.group().clone();
        let mut cols = Vec::with_capacity(self.images.len() * group.order());
        for img in &self.images {
            for g in 0..group.order() {
                cols.push(img.right_act(&VnOperator::rho_adjoint(group.clone(), g))?.to_isometric());
            }
        }
        Ok(linalg::column_space(&CMatrix::from_columns(&cols)))
    }

    /// `Φ̊_j = 𝔉̃⁻¹Φ_j`, inverting on `X_Φ` only.
    pub fn canonical_dual(&self) -> Result<Vec<HelsonImage>> {
        if self.is_degenerate() {
            return Err(Error::Degenerate);
        }
        let inv = HermitianEigen::new(&self.frame_operator_matrix()?).pinv();
        self.images
            .iter()
            .map(|img| img.with_isometric(&(&inv * img.to_isometric())))
            .collect()
    }

    /// Both reproducing formulas applied to `probe`.
    pub fn reproduce_check(&self, dual: &[HelsonImage], probe: &HelsonImage) -> Result<Reproduction> {
        if dual.len() != self.images.len() {
            return Err(Error::DimensionMismatch {
                expected: self.images.len(),
                found: dual.len(),
            });
        }
        let basis = self.module_basis()?;
        let coords = probe.to_isometric();
        let probe_norm = coords.norm();
        let projection_residual = linalg::distance_to_span(&basis, &coords);

        let primal = self.synthesize_against(dual, probe)?;
        let dual_system = Self {
            map: self.map.clone(),
            images: dual.to_vec(),
        };
        let swapped = dual_system.synthesize_against(&self.images, probe)?;
        Ok(Reproduction {
            probe_norm,
            projection_residual,
            in_module: projection_residual <= tol::MEMBERSHIP_REL * probe_norm,
            primal_residual: primal.sub(probe)?.norm(),
            dual_residual: swapped.sub(probe)?.norm(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModularClassification {
    ModularRiesz,
    ModularFrameNotRiesz,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModularReport {
    pub classification: ModularClassification,
    pub lower: f64,
    pub upper: f64,
    pub kernel_dim: usize,
    pub spectrum: Vec<f64>,
}

impl From<FrameReport> for ModularReport {
    fn from(r: FrameReport) -> Self {
        use crate::frame::Classification as C;
        let classification = match r.classification {
            C::RieszBasisSequence => ModularClassification::ModularRiesz,
            C::FrameSequenceNotRiesz => ModularClassification::ModularFrameNotRiesz,
            C::BesselOnlyDegenerate | C::Invalid => ModularClassification::Degenerate,
        };
        Self {
            classification,
            lower: r.lower,
            upper: r.upper,
            kernel_dim: r.kernel_dim,
            spectrum: r.spectrum,
        }
    }
}

impl ModularReport {
    /// Whether the classical report names the same class.
    pub fn matches(&self, classical: &FrameReport) -> bool {
        use crate::frame::Classification as C;
        matches!(
            (self.classification, classical.classification),
            (ModularClassification::ModularRiesz, C::RieszBasisSequence)
                | (ModularClassification::ModularFrameNotRiesz, C::FrameSequenceNotRiesz)
                | (ModularClassification::Degenerate, C::BesselOnlyDegenerate)
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Reproduction {
    pub probe_norm: f64,
    /// Distance from the probe to `X_Φ`.
    pub projection_residual: f64,
    pub in_module: bool,
    /// `‖Σ_j Φ_j {Ψ, Φ̊_j} − Ψ‖`.
    pub primal_residual: f64,
    /// `‖Σ_j Φ̊_j {Ψ, Φ_j} − Ψ‖`.
    pub dual_residual: f64,
}

/// Classical and modular classification of the same generator family.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsAgreement {
    pub classical: FrameReport,
    pub modular: ModularReport,
    pub classifications_match: bool,
    /// `|A_E − A_Φ| / A_E`.
    pub lower_defect: f64,
    /// `|B_E − B_Φ| / B_E`.
    pub upper_defect: f64,
    /// Worst violation of `A‖f‖² ≤ Σ_j ‖[f, φ_j]‖₂² ≤ B‖f‖²`, relative to `B‖f‖²`.
    pub trace_inequality_violation: f64,
    /// Relative disagreement of the full nonzero spectra. Observational.
    pub nonzero_multiset_defect: f64,
    pub pass: bool,
}

pub fn bounds_agreement_check<R: Rng + ?Sized>(
    rep: &UnitaryRep,
    generators: &[CVector],
    map: &HelsonMap,
    samples: usize,
    rng: &mut R,
) -> Result<BoundsAgreement> {
    let sys = OrbitSystem::new(rep.clone(), generators.to_vec())?;
    let classical = sys.classify();
    let modular = ModularSystem::from_map(map.clone(), generators)?.classify()?;

    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
        }
    };
    let lower_defect = rel(classical.lower, modular.lower);
    let upper_defect = rel(classical.upper, modular.upper);

    let synthesis = sys.synthesis_matrix();
    let mut violation = 0.0_f64;
    for _ in 0..samples {
        let f = &synthesis * rng::vector(rng, synthesis.ncols());
        let energy = f.norm_squared();
        if energy == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for g in generators {
            sum += bracket(rep, &f, g)?.l2_norm().powi(2);
        }
        let scale = classical.upper * energy;
        let below = classical.lower * energy - sum;
        let above = sum - classical.upper * energy;
        violation = violation.max(below.max(above).max(0.0) / scale);
    }

    let positive = |s: &[f64], cut: f64| s.iter().copied().filter(|&v| v > cut).collect::<Vec<_>>();
    let cut = tol::rank_cut(classical.upper.abs().max(modular.upper.abs()));
    let nonzero_multiset_defect =
        linalg::multiset_defect(&positive(&classical.spectrum, cut), &positive(&modular.spectrum, cut));

    let classifications_match = modular.matches(&classical);
    let pass = classifications_match
        && lower_defect <= tol::SPECTRAL_REL
        && upper_defect <= tol::SPECTRAL_REL
        && violation <= tol::SPECTRAL_REL;
    Ok(BoundsAgreement {
        classical,
        modular,
        classifications_match,
        lower_defect,
        upper_defect,
        trace_inequality_violation: violation,
        nonzero_multiset_defect,
        pass,
    })
}

/// Worst `dist(mA, M) / (‖m‖‖A‖_∞)` for `M = T(span basis)`, over random
/// `m ∈ M` and each multiplier `A`.
pub fn multiplicative_invariance_check<R: Rng + ?Sized>(
    map: &HelsonMap,
    basis: &[CVector],
    multipliers: &[VnOperator],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    for v in basis {
        map.rep().check_vector(v)?;
    }
    let images = basis.iter().map(|v| map.apply(v)).collect::<Result<Vec<_>>>()?;
    let cols: Vec<CVector> = images.iter().map(HelsonImage::to_isometric).collect();
    let space = linalg::column_space(&CMatrix::from_columns(&cols));
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let c = rng::vector(rng, basis.len());
        let mut m = images[0].scale(c[0]);
        for (img, &ck) in images.iter().zip(c.iter()).skip(1) {
            m = m.add(&img.scale(ck))?;
        }
        let norm = m.norm();
        if norm == 0.0 {
            continue;
        }
        for a in multipliers {
            let op_norm = a.p_norm(f64::INFINITY)?;
            if op_norm == 0.0 {
                continue;
            }
            let moved = m.right_act(a)?.to_isometric();
            worst = worst.max(linalg::distance_to_span(&space, &moved) / (norm * op_norm));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanCheck {
    /// Rank of `T(span E)`.
    pub image_rank: usize,
    /// Rank of `span{Φ_j ρ(γ)*}`.
    pub module_rank: usize,
    /// Rank after appending `Φ_j F_j` for support-restricted `F_j`.
    pub outer_rank: usize,
    /// Largest distance between the two subspaces, measured both ways.
    pub mutual_residual: f64,
    pub pass: bool,
}

/// Compares `T(span E)` with the module spanned by the images.
pub fn generator_span_check<R: Rng + ?Sized>(
    msys: &ModularSystem,
    generators: &[CVector],
    rng: &mut R,
) -> Result<SpanCheck> {
    let map = msys.map();
    let synthesis = OrbitSystem::new(map.rep().clone(), generators.to_vec())?.synthesis_matrix();
    let image = linalg::column_space(&(map.isometric_matrix() * synthesis));
    let module = msys.module_basis()?;
    let mutual_residual = linalg::max_column_distance(&image, &module)
        .max(linalg::max_column_distance(&module, &image));

    let group = map.group().clone();
    let mut cols: Vec<CVector> = module.column_iter().map(|c| c.into_owned()).collect();
    for img in msys.images() {
        let support = img.pairing(img)?.support_projection()?;
        let f = support.multiply(&rng::operator(rng, &group))?;
        cols.push(img.right_act(&f)?.to_isometric());
    }
    let outer_rank = linalg::rank(&CMatrix::from_columns(&cols));

    let pass = image.ncols() == module.ncols()
        && outer_rank == module.ncols()
        && mutual_residual <= tol::MEMBERSHIP_REL;
    Ok(SpanCheck {
        image_rank: image.ncols(),
        module_rank: module.ncols(),
        outer_rank,
        mutual_residual,
        pass,
    })
}

/// `‖matrix(𝔉̃) − W 𝔉_E W*‖₂ / max(1, ‖𝔉_E‖₂)` with `W` the isometric form
/// of the map.
pub fn frame_operator_conjugation_defect(msys: &ModularSystem, generators: &[CVector]) -> Result<f64> {
    let map = msys.map();
    let classical = OrbitSystem::new(map.rep().clone(), generators.to_vec())?.frame_operator();
    let w = map.isometric_matrix();
    let conjugated = &w * &classical * w.adjoint();
    Ok(fro(&(msys.frame_operator_matrix()? - conjugated)) / fro(&classical).max(1.0))
}

/// Smallest eigenvalue of `𝔉̃_Φ − Σ_j |Φ_j⟩⟨Φ_j|`, relative to `‖𝔉̃_Φ‖`.
/// Observational.
pub fn ordinary_frame_gap(msys: &ModularSystem) -> Result<f64> {
    let modular = msys.frame_operator_matrix()?;
    let mut ordinary = CMatrix::zeros(modular.nrows(), modular.ncols());
    for img in msys.images() {
        let v = img.to_isometric();
        ordinary += &v * v.adjoint();
    }
    let eig = HermitianEigen::new(&(&modular - ordinary));
    let lowest = eig.values.first().copied().unwrap_or(0.0);
    Ok(lowest / fro(&modular).max(1.0))
}

/// Worst violation of `A Σ‖C_j‖₂² ≤ ‖Σ_j Φ_j C_j‖² ≤ B Σ‖C_j‖₂²` over random
/// coefficient families, relative to the upper side.
pub fn riesz_sandwich_violation<R: Rng + ?Sized>(
    msys: &ModularSystem,
    report: &ModularReport,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let group = msys.map().group().clone();
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let coeffs: Vec<VnOperator> = msys.images().iter().map(|_| rng::operator(rng, &group)).collect();
        let energy: f64 = coeffs.iter().map(|c| c.l2_norm().powi(2)).sum();
        let mut acc = msys.images()[0].scale(C64::new(0.0, 0.0));
        for (img, c) in msys.images().iter().zip(&coeffs) {
            acc = acc.add(&img.right_act(c)?)?;
        }
        let value = acc.pairing(&acc)?.trace().re;
        let below = report.lower * energy - value;
        let above = value - report.upper * energy;
        worst = worst.max(below.max(above).max(0.0) / (report.upper * energy));
    }
    Ok(worst)
}
