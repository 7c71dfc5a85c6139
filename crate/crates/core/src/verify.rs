//! Batch verification of the theory's identities across a registry of
//! groups and representations.
//!
//! Every check draws from its own RNG stream keyed by
//! `"<check>/<group>/<rep>"`, so reports are byte-identical for a fixed
//! configuration and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{self, OrbitSystem};
use crate::group::FiniteGroup;
use crate::helson::{self, HelsonImage, HelsonMap, OrbitMembership};
use crate::io::parse_group_spec;
use crate::linalg::{self, fro, CVector, HermitianEigen};
use crate::modular::{self, ModularClassification, ModularSystem};
use crate::rep::{GroupAction, UnitaryRep};
use crate::rng::{self, stream, CheckRng};
use crate::tol;
use crate::vn::VnOperator;

pub const DEFAULT_GROUPS: [&str; 6] = ["z2", "z4", "klein", "d3", "d4", "h2"];
pub const DEFAULT_REPS: [&str; 4] = ["translation", "double", "conjugated", "action"];
pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_SEED: u64 = 7;

/// Random vectors drawn per trace inequality check.
const TRACE_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Bracket,
    Helson,
    Modular,
    Main,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Bracket, Suite::Helson, Suite::Modular, Suite::Main];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bracket" => Ok(Self::Bracket),
            "helson" => Ok(Self::Helson),
            "modular" => Ok(Self::Modular),
            "main" => Ok(Self::Main),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TolClass {
    Algebraic,
    Spectral,
    Reconstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub spectral: f64,
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: tol::ALGEBRAIC,
            spectral: tol::SPECTRAL_REL,
            reconstruction: tol::RECONSTRUCTION,
        }
    }
}

impl Tolerances {
    fn get(&self, class: TolClass) -> f64 {
        match class {
            TolClass::Algebraic => self.algebraic,
            TolClass::Spectral => self.spectral,
            TolClass::Reconstruction => self.reconstruction,
        }
    }

    /// Applies overrides keyed by `algebraic`, `spectral`, `reconstruction`
    /// or `all`.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (name, &value) in overrides {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("tolerance {name} must be positive, got {value}")));
            }
            match name.as_str() {
                "algebraic" => self.algebraic = value,
                "spectral" => self.spectral = value,
                "reconstruction" => self.reconstruction = value,
                "all" => {
                    self.algebraic = value;
                    self.spectral = value;
                    self.reconstruction = value;
                }
                other => return Err(Error::Config(format!("unknown tolerance {other:?}"))),
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub groups: Vec<String>,
    pub reps: Vec<String>,
    pub suites: Vec<Suite>,
    pub trials: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            groups: DEFAULT_GROUPS.iter().map(|s| s.to_string()).collect(),
            reps: DEFAULT_REPS.iter().map(|s| s.to_string()).collect(),
            suites: Suite::ALL.to_vec(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            tolerances: BTreeMap::new(),
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<Tolerances> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        for g in &self.groups {
            parse_group_spec(g)?;
        }
        for r in &self.reps {
            if !DEFAULT_REPS.contains(&r.as_str()) {
                return Err(Error::Config(format!("unknown rep spec {r:?}")));
            }
        }
        Tolerances::default().with_overrides(&self.tolerances)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub group: String,
    pub rep: String,
    pub max_defect: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A quantity tracked without a pass/fail threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub check_id: String,
    pub group: String,
    pub rep: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub seed: u64,
    pub trials: usize,
    pub records: Vec<CheckRecord>,
    pub observations: Vec<Observation>,
    pub summary: Summary,
}

impl VerifyReport {
    pub fn new(seed: u64, trials: usize, records: Vec<CheckRecord>, observations: Vec<Observation>) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            trials,
            summary: Summary {
                total: records.len(),
                passed,
                failed: records.len() - passed,
            },
            records,
            observations,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn records_for<'a>(&'a self, check_id: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.records.iter().filter(move |r| r.check_id == check_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "table" | "text" | "text-table" => Ok(Self::Table),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn emit_report(report: &VerifyReport, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => crate::io::to_json_bytes(report),
        Format::Table => Ok(render_table(report).into_bytes()),
    }
}

fn render_table(report: &VerifyReport) -> String {
    let mut out = String::new();
    if !report.records.is_empty() {
        let _ = writeln!(
            out,
            "{:<34} {:<8} {:<12} {:>12} {:>12}  result",
            "check_id", "group", "rep", "max_defect", "threshold"
        );
        for r in &report.records {
            let _ = writeln!(
                out,
                "{:<34} {:<8} {:<12} {:>12.3e} {:>12.3e}  {}",
                r.check_id,
                r.group,
                r.rep,
                r.max_defect,
                r.threshold,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
    }
    let s = report.summary;
    let _ = writeln!(out, "{} checks: {} passed, {} failed", s.total, s.passed, s.failed);
    out
}

/// One group together with one of its registry representations.
pub struct Context {
    pub group_name: String,
    pub rep_name: String,
    pub group: Arc<FiniteGroup>,
    pub rep: UnitaryRep,
    /// Present when the representation comes from a tiling action.
    pub action: Option<GroupAction>,
    seed: u64,
}

impl Context {
    pub fn new(group_name: &str, rep_name: &str, seed: u64) -> Result<Self> {
        let group = Arc::new(parse_group_spec(group_name)?);
        let n = group.order();
        let label = format!("rep/{rep_name}/{group_name}");
        let (rep, action) = match rep_name {
            "translation" => {
                let action = GroupAction::left_multiplication(group.clone());
                (UnitaryRep::translation(group.clone()), Some(action))
            }
            "double" => {
                let lam = UnitaryRep::translation(group.clone());
                (UnitaryRep::direct_sum(&[lam.clone(), lam])?, None)
            }
            "conjugated" => {
                let lam = UnitaryRep::translation(group.clone());
                let sum = UnitaryRep::direct_sum(&[lam.clone(), lam])?;
                let u = rng::unitary(&mut stream(seed, &label), 2 * n);
                (sum.conjugate(&u)?, None)
            }
            "action" => {
                let mut r = stream(seed, &label);
                let measure: Vec<f64> = (0..2 * n).map(|_| r.random_range(0.5..2.0)).collect();
                let action = GroupAction::free_copies(group.clone(), 2, Some(&measure))?;
                (UnitaryRep::action(&action), Some(action))
            }
            other => return Err(Error::Config(format!("unknown rep spec {other:?}"))),
        };
        Ok(Self {
            group_name: group_name.to_string(),
            rep_name: rep_name.to_string(),
            group,
            rep,
            action,
            seed,
        })
    }

    pub fn rng(&self, check: &str) -> CheckRng {
        stream(self.seed, &format!("{check}/{}/{}", self.group_name, self.rep_name))
    }

    /// Global map of the whole representation space.
    pub fn global_map(&self) -> Result<HelsonMap> {
        let dim = self.rep.dim();
        let basis: Vec<CVector> = (0..dim)
            .map(|k| CVector::from_fn(dim, |i, _| if i == k { linalg::ONE } else { linalg::ZERO }))
            .collect();
        helson::global_map_from_space(&self.rep, &basis)
    }

    pub fn zak_map(&self) -> Option<Result<HelsonMap>> {
        self.action
            .as_ref()
            .map(|a| a.find_tiling().and_then(|t| helson::zak_map(a, &t)))
    }

    /// `1..=3` random generators.
    pub fn random_generators(&self, rng: &mut CheckRng) -> Vec<CVector> {
        let count = rng.random_range(1..=3);
        (0..count).map(|_| rng::vector(rng, self.rep.dim())).collect()
    }
}

struct Recorder<'a> {
    tolerances: &'a Tolerances,
    records: Vec<CheckRecord>,
    observations: Vec<Observation>,
}

impl Recorder<'_> {
    fn push(&mut self, ctx: &Context, id: &str, class: TolClass, defect: Result<f64>) {
        let threshold = self.tolerances.get(class);
        let (max_defect, error) = match defect {
            Ok(d) if d.is_finite() => (d, None),
            Ok(_) => (f64::MAX, Some("non-finite defect".to_string())),
            Err(e) => (f64::MAX, Some(e.to_string())),
        };
        self.records.push(CheckRecord {
            check_id: id.to_string(),
            group: ctx.group_name.clone(),
            rep: ctx.rep_name.clone(),
            max_defect,
            threshold,
            pass: error.is_none() && max_defect <= threshold,
            error,
        });
    }

    fn observe(&mut self, ctx: &Context, id: &str, value: f64) {
        self.observations.push(Observation {
            check_id: id.to_string(),
            group: ctx.group_name.clone(),
            rep: ctx.rep_name.clone(),
            value: if value.is_finite() { value } else { f64::MAX },
        });
    }
}

pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let tolerances = cfg.validate()?;
    let mut rec = Recorder {
        tolerances: &tolerances,
        records: Vec::new(),
        observations: Vec::new(),
    };
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    for g in &cfg.groups {
        for r in &cfg.reps {
            let ctx = Context::new(g, r, cfg.seed)?;
            for suite in &suites {
                match suite {
                    Suite::Bracket => bracket_suite(&ctx, cfg.trials, &mut rec),
                    Suite::Helson => helson_suite(&ctx, cfg.trials, &mut rec),
                    Suite::Modular => modular_suite(&ctx, cfg.trials, &mut rec),
                    Suite::Main => main_suite(&ctx, cfg.trials, &mut rec),
                }
            }
        }
    }
    Ok(VerifyReport::new(cfg.seed, cfg.trials, rec.records, rec.observations))
}

fn max_over<F: FnMut() -> Result<f64>>(trials: usize, mut f: F) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let d = f()?;
        if !d.is_finite() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

fn positive_part(values: &[f64], cut: f64) -> Vec<f64> {
    values.iter().copied().filter(|&v| v > cut).collect()
}

/// Nonzero spectra of Gram and frame operator as multisets.
pub fn duality_defect(sys: &OrbitSystem) -> f64 {
    let gram = HermitianEigen::new(&sys.gram_matrix());
    let frame = HermitianEigen::new(&sys.frame_operator());
    linalg::multiset_defect(&gram.nonzero_values(), &frame.nonzero_values())
}

/// Nonzero eigenvalues of `[ψ,ψ]` against the character transform values.
pub fn abelian_oracle_defect(rep: &UnitaryRep, psi: &CVector) -> Result<f64> {
    let b = frame::bracket(rep, psi, psi)?;
    let spec = b.spectral()?;
    let transform = b.pontryagin_eigenvalues()?;
    let scale = transform.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let imaginary = transform.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    let mut real: Vec<f64> = transform.iter().map(|z| z.re).collect();
    real.sort_by(f64::total_cmp);
    let cut = spec.rank_tol;
    let d = linalg::multiset_defect(&positive_part(&spec.eigenvalues, cut), &positive_part(&real, cut));
    Ok(d.max(imaginary))
}

fn bracket_suite(ctx: &Context, trials: usize, rec: &mut Recorder) {
    let diag = frame::verify_bracket_properties(&ctx.rep, trials, &mut ctx.rng("prop_bracket"));
    let part = |f: fn(&frame::BracketDiagnostics) -> f64| diag.as_ref().map(f).map_err(clone_err);
    rec.push(ctx, "prop_bracket_I", TolClass::Algebraic, part(|d| d.adjoint_symmetry));
    rec.push(ctx, "prop_bracket_II_left", TolClass::Algebraic, part(|d| d.left_covariance));
    rec.push(ctx, "prop_bracket_II_right", TolClass::Algebraic, part(|d| d.right_covariance));
    rec.push(ctx, "prop_bracket_III_positivity", TolClass::Algebraic, part(|d| d.positivity));
    rec.push(ctx, "prop_bracket_III_norm", TolClass::Algebraic, part(|d| d.trace_norm));

    let mut r = ctx.rng("thm_bracket_gram");
    let d = max_over(trials, || frame::bracket_equals_gram_check(&ctx.rep, &rng::vector(&mut r, ctx.rep.dim())));
    rec.push(ctx, "thm_bracket_gram", TolClass::Algebraic, d);

    let mut r = ctx.rng("lemma_duality");
    let d = max_over(trials, || {
        let sys = OrbitSystem::new(ctx.rep.clone(), ctx.random_generators(&mut r))?;
        Ok(duality_defect(&sys))
    });
    rec.push(ctx, "lemma_duality", TolClass::Spectral, d);

    let mut r = ctx.rng("lemma_rank");
    let d = max_over(trials, || {
        let sys = OrbitSystem::new(ctx.rep.clone(), ctx.random_generators(&mut r))?;
        Ok(if sys.rank_consistency().consistent { 0.0 } else { 1.0 })
    });
    rec.push(ctx, "lemma_rank", TolClass::Algebraic, d);

    let mut r = ctx.rng("cor_principal");
    let d = max_over(trials, || {
        let psi = rng::vector(&mut r, ctx.rep.dim());
        let principal = frame::principal_characterization(&ctx.rep, &psi)?;
        let classical = OrbitSystem::single(ctx.rep.clone(), psi)?.classify();
        Ok(principal.bound_defect(&classical))
    });
    rec.push(ctx, "cor_principal", TolClass::Spectral, d);

    if ctx.group.is_abelian() && ctx.rep_name == "translation" {
        let mut r = ctx.rng("abelian_oracle");
        let d = max_over(trials, || abelian_oracle_defect(&ctx.rep, &rng::vector(&mut r, ctx.rep.dim())));
        rec.push(ctx, "abelian_oracle", TolClass::Reconstruction, d);
    }
}

fn clone_err(e: &Error) -> Error {
    Error::Config(e.to_string())
}

fn has_complement(ctx: &Context) -> bool {
    let n = ctx.group.order();
    ctx.rep.dim() > n || (ctx.rep_name == "translation" && n > 1)
}

/// Vectors `(φ, ψ)` with `φ ⟂ ⟨ψ⟩` and `φ ≠ 0`, when the representation
/// leaves room for one.
fn orthogonal_pair(ctx: &Context, rng: &mut CheckRng) -> Option<(CVector, CVector)> {
    let dim = ctx.rep.dim();
    let n = ctx.group.order();
    if dim > n {
        let psi = rng::vector(rng, dim);
        let basis = linalg::column_space(&ctx.rep.orbit(&psi));
        let raw = rng::vector(rng, dim);
        let phi = &raw - &basis * (basis.adjoint() * &raw);
        return Some((phi, psi));
    }
    if ctx.rep_name == "translation" && n > 1 {
        // Mean-zero vectors span an invariant complement of the constants.
        let mut psi = rng::vector(rng, dim);
        let mean = psi.sum() / linalg::C64::new(n as f64, 0.0);
        psi.add_scalar_mut(-mean);
        let phi = CVector::from_element(dim, linalg::ONE);
        return Some((phi, psi));
    }
    None
}

fn map_checks(ctx: &Context, name: &str, map: &Result<HelsonMap>, rec: &mut Recorder) {
    let iso = map.as_ref().map(HelsonMap::isometry_defect).map_err(clone_err);
    rec.push(ctx, &format!("helson_{name}_isometry"), TolClass::Algebraic, iso);
    let cov = map.as_ref().map(HelsonMap::covariance_defect).map_err(clone_err);
    rec.push(ctx, &format!("helson_{name}_covariance"), TolClass::Algebraic, cov);
}

/// `‖T[φ]‖ = ‖φ‖` on random domain vectors, relative to `max(1, ‖φ‖)`.
fn sampled_isometry(map: &HelsonMap, trials: usize, rng: &mut CheckRng) -> Result<f64> {
    max_over(trials, || {
        let raw = rng::vector(rng, map.rep().dim());
        let phi = map.domain_projector() * raw;
        Ok((map.apply(&phi)?.norm() - phi.norm()).abs() / phi.norm().max(1.0))
    })
}

fn helson_suite(ctx: &Context, trials: usize, rec: &mut Recorder) {
    let dim = ctx.rep.dim();

    let mut r = ctx.rng("helson_principal");
    let principal: Vec<(CVector, Result<HelsonMap>)> = (0..trials.min(10))
        .map(|_| {
            let psi = rng::vector(&mut r, dim);
            let map = helson::principal_map(&ctx.rep, &psi);
            (psi, map)
        })
        .collect();
    let worst = |f: fn(&HelsonMap) -> f64| -> Result<f64> {
        let mut w = 0.0_f64;
        for (_, m) in &principal {
            w = w.max(f(m.as_ref().map_err(clone_err)?));
        }
        Ok(w)
    };
    rec.push(ctx, "helson_principal_isometry", TolClass::Algebraic, worst(HelsonMap::isometry_defect));
    rec.push(ctx, "helson_principal_covariance", TolClass::Algebraic, worst(HelsonMap::covariance_defect));
    let sampled = principal
        .first()
        .map(|(_, m)| m.as_ref().map_err(clone_err).and_then(|m| sampled_isometry(m, trials, &mut r)))
        .unwrap_or(Ok(0.0));
    rec.push(ctx, "helson_principal_sampled_isometry", TolClass::Algebraic, sampled);

    let global = ctx.global_map();
    map_checks(ctx, "global", &global, rec);
    let mut r = ctx.rng("helson_global_sampled");
    let sampled = global.as_ref().map_err(clone_err).and_then(|m| sampled_isometry(m, trials, &mut r));
    rec.push(ctx, "helson_global_sampled_isometry", TolClass::Algebraic, sampled);

    let zak = ctx.zak_map();
    if let Some(zak) = &zak {
        map_checks(ctx, "zak", zak, rec);
        let mut r = ctx.rng("helson_zak_round_trip");
        let d = zak.as_ref().map_err(clone_err).and_then(|m| zak_round_trip(m, trials, &mut r));
        rec.push(ctx, "helson_zak_round_trip", TolClass::Algebraic, d);
    }

    let mut r = ctx.rng("prop_bracket_from_helson");
    let d = (|| {
        let mut maps: Vec<&HelsonMap> = vec![global.as_ref().map_err(clone_err)?];
        if let Some(z) = &zak {
            maps.push(z.as_ref().map_err(clone_err)?);
        }
        let mut worst = max_over(trials, || {
            let (psi, map) = &principal[0];
            let map = map.as_ref().map_err(clone_err)?;
            let phi = helson::operator_shift(&ctx.rep, &rng::operator(&mut r, &ctx.group), psi)?;
            map.bracket_reconstruction_defect(&phi, psi)
        })?;
        for m in maps {
            worst = worst.max(max_over(trials, || {
                let phi = rng::vector(&mut r, dim);
                let psi = rng::vector(&mut r, dim);
                m.bracket_reconstruction_defect(&phi, &psi)
            })?);
        }
        Ok(worst)
    })();
    rec.push(ctx, "prop_bracket_from_helson", TolClass::Reconstruction, d);

    let mut r = ctx.rng("prop_bdr");
    let d = max_over(trials, || {
        let psi = rng::vector(&mut r, dim);
        let g = rng::operator(&mut r, &ctx.group);
        let phi = helson::operator_shift(&ctx.rep, &g, &psi)?;
        bdr_defect(&ctx.rep, &phi, &psi)
    });
    rec.push(ctx, "prop_bdr_in_span", TolClass::Reconstruction, d);

    if has_complement(ctx) {
        let mut r = ctx.rng("prop_bdr_reject");
        let d = max_over(trials, || {
            let (phi, psi) = orthogonal_pair(ctx, &mut r).expect("room for a complement");
            bdr_rejection_defect(&ctx.rep, &phi, &psi)
        });
        rec.push(ctx, "prop_bdr_reject", TolClass::Algebraic, d);
    }

    let mut r = ctx.rng("prop_intertwining");
    let d = max_over(trials, || {
        let (psi, map) = &principal[0];
        let map = map.as_ref().map_err(clone_err)?;
        let phi = helson::operator_shift(&ctx.rep, &rng::operator(&mut r, &ctx.group), psi)?;
        helson::intertwining_check(map, &rng::operator(&mut r, &ctx.group), &phi)
    });
    rec.push(ctx, "prop_intertwining", TolClass::Algebraic, d);

    let mut r = ctx.rng("cor_operator_shift_norm");
    let d = max_over(trials, || {
        let psi = rng::vector(&mut r, dim);
        let f = rng::operator(&mut r, &ctx.group);
        let weight = helson::WeightedSpace::new(frame::bracket(&ctx.rep, &psi, &psi)?)?;
        let lhs = helson::operator_shift(&ctx.rep, &f, &psi)?.norm();
        Ok((lhs - weight.weighted_norm(&f)?).abs() / lhs.max(1.0))
    });
    rec.push(ctx, "cor_operator_shift_norm", TolClass::Algebraic, d);
}

/// Both directions of the Zak round trip.
pub fn zak_round_trip(map: &HelsonMap, trials: usize, rng: &mut CheckRng) -> Result<f64> {
    let dim = map.rep().dim();
    let rows = map.forward().nrows();
    max_over(trials, || {
        let phi = rng::vector(rng, dim);
        let back = map.inverse(&map.apply(&phi)?)?;
        let there = (back - &phi).norm() / phi.norm().max(1.0);

        let stacked = rng::vector(rng, rows);
        let img = HelsonImage::from_stacked(
            map.group().clone(),
            map.base_points().to_vec(),
            map.weights().to_vec(),
            &stacked,
        )?;
        let again = map.apply(&map.inverse(&img)?)?;
        let back_again = again.sub(&img)?.norm() / img.norm().max(1.0);
        Ok(there.max(back_again))
    })
}

/// For `φ ∈ ⟨ψ⟩`: `‖P_F ψ − φ‖/‖φ‖` and `‖[φ,ψ] − [ψ,ψ]F‖₂/max(1,‖φ‖‖ψ‖)`.
pub fn bdr_defect(rep: &UnitaryRep, phi: &CVector, psi: &CVector) -> Result<f64> {
    match helson::bdr_coefficient(rep, phi, psi)? {
        OrbitMembership::InSpan { coefficient, residual } => {
            let lhs = frame::bracket(rep, phi, psi)?;
            let rhs = frame::bracket(rep, psi, psi)?.multiply(&coefficient)?;
            let identity = lhs.sub(&rhs)?.l2_norm() / (phi.norm() * psi.norm()).max(1.0);
            Ok((residual / phi.norm().max(f64::MIN_POSITIVE)).max(identity))
        }
        OrbitMembership::NotInSpan { .. } => Ok(1.0),
    }
}

/// For `φ ⟂ ⟨ψ⟩`: `|residual − ‖φ‖|`, or 1 when wrongly accepted.
pub fn bdr_rejection_defect(rep: &UnitaryRep, phi: &CVector, psi: &CVector) -> Result<f64> {
    match helson::bdr_coefficient(rep, phi, psi)? {
        OrbitMembership::NotInSpan { residual } => Ok((residual - phi.norm()).abs()),
        OrbitMembership::InSpan { .. } => Ok(1.0),
    }
}

fn modular_suite(ctx: &Context, trials: usize, rec: &mut Recorder) {
    let dim = ctx.rep.dim();
    let global = match ctx.global_map() {
        Ok(m) => m,
        Err(e) => {
            rec.push(ctx, "modular_global_map", TolClass::Algebraic, Err(e));
            return;
        }
    };

    let mut r = ctx.rng("modular_inner_bracket");
    let d = max_over(trials, || {
        let phi = rng::vector(&mut r, dim);
        let chi = rng::vector(&mut r, dim);
        let lhs = modular::modular_inner(&global, &global.apply(&phi)?, &global.apply(&chi)?)?;
        let rhs = frame::bracket(&ctx.rep, &phi, &chi)?;
        Ok(lhs.sub(&rhs)?.l2_norm() / (phi.norm() * chi.norm()).max(1.0))
    });
    rec.push(ctx, "modular_inner_bracket", TolClass::Algebraic, d);

    let systems = trials.min(10);
    let mut r = ctx.rng("modular_systems");
    let built: Vec<Result<(Vec<CVector>, ModularSystem)>> = (0..systems)
        .map(|_| {
            let gens = ctx.random_generators(&mut r);
            let msys = ModularSystem::from_map(global.clone(), &gens)?;
            Ok((gens, msys))
        })
        .collect();
    let each = |f: &mut dyn FnMut(&[CVector], &ModularSystem) -> Result<f64>| -> Result<f64> {
        let mut worst = 0.0_f64;
        for b in &built {
            let (gens, msys) = b.as_ref().map_err(clone_err)?;
            worst = worst.max(f(gens, msys)?);
        }
        Ok(worst)
    };

    let d = each(&mut |gens, msys| {
        let classical = OrbitSystem::new(ctx.rep.clone(), gens.to_vec())?.gram_matrix();
        Ok(fro(&(msys.big_matrix()? - &classical)) / fro(&classical).max(1.0))
    });
    rec.push(ctx, "modular_gram_block", TolClass::Algebraic, d);

    let d = each(&mut |gens, msys| modular::frame_operator_conjugation_defect(msys, gens));
    rec.push(ctx, "cor_frame_operator_conjugation", TolClass::Reconstruction, d);

    let d = each(&mut |_, msys| {
        let report = msys.classify()?;
        let dual = msys.canonical_dual()?;
        let dual_report = ModularSystem::from_images(msys.map().clone(), dual)?.classify()?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        Ok(rel(dual_report.lower, 1.0 / report.upper).max(rel(dual_report.upper, 1.0 / report.lower)))
    });
    rec.push(ctx, "thm_dual_bounds", TolClass::Spectral, d);

    let mut r = ctx.rng("thm_reproducing");
    let d = each(&mut |gens, msys| {
        let dual = msys.canonical_dual()?;
        let synthesis = OrbitSystem::new(ctx.rep.clone(), gens.to_vec())?.synthesis_matrix();
        let mut worst = 0.0_f64;
        for _ in 0..trials.div_ceil(systems) {
            let f = &synthesis * rng::vector(&mut r, synthesis.ncols());
            let probe = msys.map().apply(&f)?;
            let rep = msys.reproduce_check(&dual, &probe)?;
            let scale = rep.probe_norm.max(f64::MIN_POSITIVE);
            worst = worst
                .max(rep.primal_residual / scale)
                .max(rep.dual_residual / scale)
                .max(rep.projection_residual / scale);
        }
        Ok(worst)
    });
    rec.push(ctx, "thm_reproducing", TolClass::Reconstruction, d);

    let mut r = ctx.rng("thm_generator_span");
    let d = each(&mut |gens, msys| {
        let s = modular::generator_span_check(msys, gens, &mut r)?;
        let ranks_ok = s.image_rank == s.module_rank && s.outer_rank == s.module_rank;
        Ok(if ranks_ok { s.mutual_residual } else { 1.0 })
    });
    rec.push(ctx, "thm_generator_span", TolClass::Algebraic, d);

    let mut r = ctx.rng("modular_riesz_sandwich");
    let d = each(&mut |_, msys| {
        let report = msys.classify()?;
        if report.classification != ModularClassification::ModularRiesz {
            return Ok(0.0);
        }
        modular::riesz_sandwich_violation(msys, &report, trials.div_ceil(systems), &mut r)
    });
    rec.push(ctx, "modular_riesz_sandwich", TolClass::Spectral, d);

    let gap = built
        .iter()
        .flatten()
        .filter_map(|(_, msys)| modular::ordinary_frame_gap(msys).ok())
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        rec.observe(ctx, "obs_ordinary_frame_gap", gap);
    }

    let mut r = ctx.rng("thm_multiplicative_invariance");
    let d = max_over(trials.min(10), || {
        let psi = rng::vector(&mut r, dim);
        let basis: Vec<CVector> = ctx.rep.orbit(&psi).column_iter().map(|c| c.into_owned()).collect();
        let multipliers: Vec<VnOperator> = (0..5).map(|_| rng::operator(&mut r, &ctx.group)).collect();
        modular::multiplicative_invariance_check(&global, &basis, &multipliers, 5, &mut r)
    });
    rec.push(ctx, "thm_multiplicative_invariance", TolClass::Algebraic, d);
}

fn main_suite(ctx: &Context, trials: usize, rec: &mut Recorder) {
    let global = ctx.global_map();
    let zak = ctx.zak_map();
    let mut r = ctx.rng("thm_main");
    let mut multiset = 0.0_f64;
    let d = max_over(trials, || {
        let gens = ctx.random_generators(&mut r);
        let use_zak = r.random_bool(0.5);
        let map = match (&zak, use_zak) {
            (Some(z), true) => z.as_ref(),
            _ => global.as_ref(),
        }
        .map_err(clone_err)?;
        let record = modular::bounds_agreement_check(map.rep(), &gens, map, TRACE_SAMPLES, &mut r)?;
        multiset = multiset.max(record.nonzero_multiset_defect);
        if !record.classifications_match {
            return Ok(1.0);
        }
        Ok(record
            .lower_defect
            .max(record.upper_defect)
            .max(record.trace_inequality_violation))
    });
    rec.push(ctx, "thm_main", TolClass::Spectral, d);
    rec.observe(ctx, "obs_nonzero_multiset", multiset);
}
