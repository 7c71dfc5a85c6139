use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vnframes::error::{Error, Result};
use vnframes::frame::{self, OrbitSystem};
use vnframes::group::FiniteGroup;
use vnframes::helson;
use vnframes::io::{
    self, ActionJson, GroupJson, HelsonImageJson, MatrixJson, OperatorJson, RepJson, TileJson, VectorJson,
    VectorsJson,
};
use vnframes::modular::{ModularReport, ModularSystem};
use vnframes::rep::{RepDiagnostics, UnitaryRep};
use vnframes::rng;
use vnframes::tol;
use vnframes::verify::{self, Format, RunConfig, Suite};
use vnframes::vn::VnOperator;

const SEED_ENV: &str = "VNFRAMES_SEED";

#[derive(Parser)]
#[command(name = "vnframes", version, about = "Orbit frames of finite group representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build group tables.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Build and check unitary representations.
    #[command(subcommand)]
    Rep(RepCmd),
    /// Inspect elements of the right group algebra.
    #[command(subcommand)]
    Op(OpCmd),
    /// Operator-valued bracket of two vectors.
    Bracket(BracketArgs),
    /// Classify an orbit system and report its frame bounds.
    FrameBounds(SystemArgs),
    /// Apply the global Helson map of the generators' orbits to a probe.
    Helson(HelsonArgs),
    /// Zak transform of a vector under a tiling action.
    Zak(ZakArgs),
    /// Modular Gram classification of an orbit system.
    ModularBounds(SystemArgs),
    /// Canonical modular dual of an orbit system.
    DualFrame(SystemArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupKind {
    Cyclic,
    Product,
    Dihedral,
    Heisenberg,
}

#[derive(Subcommand)]
enum GroupCmd {
    Make {
        #[arg(long, value_enum)]
        kind: GroupKind,
        /// Comma separated: `n` for cyclic/dihedral, `p` for Heisenberg,
        /// `n,m` for a product of cyclic groups.
        #[arg(long)]
        params: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RepCmd {
    /// Left translation on `ℓ₂(Γ)`.
    Translation {
        /// Group name (`z4`, `d3`, ...) or a group JSON file.
        #[arg(long)]
        group: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unitary representation of an action JSON file.
    Action {
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    DirectSum {
        #[arg(long = "rep", required = true)]
        reps: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `U Π(γ) U*` for a given unitary or a seeded random one.
    Conjugate {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, conflicts_with = "seed")]
        unitary: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report unitarity and homomorphism defects; fails above tolerance.
    Validate {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OpCmd {
    /// Matrix of the operator on `ℓ₂(Γ)`.
    Matrix {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier coefficients of a matrix in the right group algebra.
    Coeffs {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        group: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized trace `p`-norm; `inf` gives the operator norm.
    Norm {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Support projection of a self-adjoint operator.
    Support {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of a self-adjoint operator, ascending.
    Spectrum {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BracketArgs {
    #[arg(long)]
    rep: PathBuf,
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    psi: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long)]
    rep: PathBuf,
    #[arg(long)]
    generators: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HelsonArgs {
    #[arg(long)]
    rep: PathBuf,
    #[arg(long)]
    generators: PathBuf,
    #[arg(long)]
    probe: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ZakArgs {
    #[arg(long)]
    action: PathBuf,
    #[arg(long)]
    tile: PathBuf,
    /// Vector in orthonormal coordinates of `ℓ₂(X, μ)`.
    #[arg(long)]
    vector: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Base configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "suite", value_delimiter = ',')]
    suites: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    reps: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `name=value` with name in algebraic, spectral, reconstruction, all.
    #[arg(long = "tolerance")]
    tolerances: Vec<String>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every check the command performed passed.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Group(GroupCmd::Make { kind, params, out }) => {
            let group = make_group(kind, &params)?;
            emit(&group, out.as_deref())?;
        }
        Command::Rep(cmd) => return rep_command(cmd),
        Command::Op(cmd) => op_command(cmd)?,
        Command::Bracket(a) => {
            let rep = load_rep(&a.rep)?;
            let b = frame::bracket(&rep, &load_vector(&a.phi)?, &load_vector(&a.psi)?)?;
            emit(&OperatorJson::from_operator(&b), a.out.as_deref())?;
        }
        Command::FrameBounds(a) => {
            let sys = OrbitSystem::new(load_rep(&a.rep)?, load_vectors(&a.generators)?)?;
            emit(&sys.classify(), a.out.as_deref())?;
        }
        Command::Helson(a) => {
            let rep = load_rep(&a.rep)?;
            let map = helson::global_map_of_orbits(&rep, &load_vectors(&a.generators)?)?;
            let image = map.apply(&load_vector(&a.probe)?)?;
            emit(&HelsonImageJson::from_image(&image), a.out.as_deref())?;
        }
        Command::Zak(a) => {
            let action = io::read_json::<ActionJson>(&a.action)?.to_action()?;
            let tiling = io::read_json::<TileJson>(&a.tile)?.to_tiling(&action)?;
            let map = helson::zak_map(&action, &tiling)?;
            let image = map.apply(&load_vector(&a.vector)?)?;
            emit(&HelsonImageJson::from_image(&image), a.out.as_deref())?;
        }
        Command::ModularBounds(a) => {
            let msys = modular_system(&a)?;
            emit(&msys.classify()?, a.out.as_deref())?;
        }
        Command::DualFrame(a) => {
            let msys = modular_system(&a)?;
            let report = msys.classify()?;
            let dual = msys.canonical_dual()?;
            let out = DualFrameJson {
                bounds: report,
                dual: dual.iter().map(HelsonImageJson::from_image).collect(),
            };
            emit(&out, a.out.as_deref())?;
        }
        Command::Verify(a) => return verify_command(a),
    }
    Ok(true)
}

#[derive(Serialize)]
struct DualFrameJson {
    bounds: ModularReport,
    dual: Vec<HelsonImageJson>,
}

fn modular_system(a: &SystemArgs) -> Result<ModularSystem> {
    let rep = load_rep(&a.rep)?;
    let gens = load_vectors(&a.generators)?;
    let map = helson::global_map_of_orbits(&rep, &gens)?;
    ModularSystem::from_map(map, &gens)
}

fn make_group(kind: GroupKind, params: &str) -> Result<FiniteGroup> {
    let nums = params
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad group parameter {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let expect = |count: usize| {
        if nums.len() == count {
            Ok(())
        } else {
            Err(Error::Config(format!("expected {count} parameter(s), got {}", nums.len())))
        }
    };
    match kind {
        GroupKind::Cyclic => expect(1).and_then(|_| FiniteGroup::cyclic(nums[0])),
        GroupKind::Dihedral => expect(1).and_then(|_| FiniteGroup::dihedral(nums[0])),
        GroupKind::Heisenberg => expect(1).and_then(|_| FiniteGroup::heisenberg(nums[0])),
        GroupKind::Product => {
            if nums.is_empty() {
                return Err(Error::Config("product needs at least one factor".into()));
            }
            let mut g = FiniteGroup::cyclic(nums[0])?;
            for &m in &nums[1..] {
                g = FiniteGroup::product(&g, &FiniteGroup::cyclic(m)?)?;
            }
            Ok(g)
        }
    }
}

fn rep_command(cmd: RepCmd) -> Result<bool> {
    match cmd {
        RepCmd::Translation { group, out } => {
            let rep = UnitaryRep::translation(load_group(&group)?);
            emit(&RepJson::from_rep(&rep), out.as_deref())?;
        }
        RepCmd::Action { action, out } => {
            let action = io::read_json::<ActionJson>(&action)?.to_action()?;
            emit(&RepJson::from_rep(&UnitaryRep::action(&action)), out.as_deref())?;
        }
        RepCmd::DirectSum { reps, out } => {
            let reps = reps.iter().map(|p| load_rep(p)).collect::<Result<Vec<_>>>()?;
            emit(&RepJson::from_rep(&UnitaryRep::direct_sum(&reps)?), out.as_deref())?;
        }
        RepCmd::Conjugate {
            rep,
            unitary,
            seed,
            out,
        } => {
            let rep = load_rep(&rep)?;
            let u = match unitary {
                Some(path) => io::read_json::<MatrixJson>(&path)?.to_matrix()?,
                None => {
                    let seed = env_seed()?.or(seed).unwrap_or(verify::DEFAULT_SEED);
                    rng::unitary(&mut rng::stream(seed, "rep/conjugate"), rep.dim())
                }
            };
            emit(&RepJson::from_rep(&rep.conjugate(&u)?), out.as_deref())?;
        }
        RepCmd::Validate { rep, out } => {
            let raw: RepJson = io::read_json(&rep)?;
            let group = raw.group.resolve()?;
            let matrices = raw
                .matrices
                .iter()
                .map(|entries| {
                    MatrixJson {
                        rows: raw.dim,
                        cols: raw.dim,
                        entries: entries.clone(),
                    }
                    .to_matrix()
                })
                .collect::<Result<Vec<_>>>()?;
            let diag = RepDiagnostics::compute(&group, &matrices)?;
            let valid = diag.max_defect() <= tol::REPRESENTATION;
            emit(&ValidationJson { diagnostics: diag, valid }, out.as_deref())?;
            return Ok(valid);
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct ValidationJson {
    diagnostics: RepDiagnostics,
    valid: bool,
}

fn op_command(cmd: OpCmd) -> Result<()> {
    match cmd {
        OpCmd::Matrix { op, out } => {
            let f = load_operator(&op)?;
            emit(&MatrixJson::from_matrix(&f.to_matrix()), out.as_deref())
        }
        OpCmd::Coeffs { matrix, group, out } => {
            let m = io::read_json::<MatrixJson>(&matrix)?.to_matrix()?;
            let f = VnOperator::from_matrix(&m, load_group(&group)?)?;
            emit(&OperatorJson::from_operator(&f), out.as_deref())
        }
        OpCmd::Norm { op, p, out } => {
            let p = match p.as_str() {
                "inf" | "infinity" => f64::INFINITY,
                s => s
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad exponent {s:?}")))?,
            };
            let norm = load_operator(&op)?.p_norm(p)?;
            emit(&NormJson { norm }, out.as_deref())
        }
        OpCmd::Support { op, out } => {
            let s = load_operator(&op)?.support_projection()?;
            emit(&OperatorJson::from_operator(&s), out.as_deref())
        }
        OpCmd::Spectrum { op, out } => {
            let spec = load_operator(&op)?.spectral()?;
            emit(
                &SpectrumJson {
                    eigenvalues: spec.eigenvalues.clone(),
                    rank_tol: spec.rank_tol,
                },
                out.as_deref(),
            )
        }
    }
}

#[derive(Serialize)]
struct NormJson {
    norm: f64,
}

#[derive(Serialize)]
struct SpectrumJson {
    eigenvalues: Vec<f64>,
    rank_tol: f64,
}

fn verify_command(a: VerifyArgs) -> Result<bool> {
    let mut cfg = match &a.config {
        Some(path) => io::read_json::<RunConfig>(path)?,
        None => RunConfig::default(),
    };
    if !a.suites.is_empty() {
        cfg.suites = a.suites.iter().map(|s| s.parse::<Suite>()).collect::<Result<_>>()?;
    }
    if !a.groups.is_empty() {
        cfg.groups = a.groups.clone();
    }
    if !a.reps.is_empty() {
        cfg.reps = a.reps.clone();
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = env_seed()? {
        cfg.seed = s;
    }
    let mut overrides = BTreeMap::new();
    for t in &a.tolerances {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tolerance {t:?} is not name=value")))?;
        let value = value
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad tolerance value {value:?}")))?;
        overrides.insert(name.to_string(), value);
    }
    cfg.tolerances.extend(overrides);
    if a.out.is_some() {
        cfg.output = a.out.as_ref().map(|p| p.display().to_string());
    }

    let format: Format = a.format.parse()?;
    let report = verify::run_verify(&cfg)?;
    let bytes = verify::emit_report(&report, format)?;
    write_bytes(&bytes, cfg.output.as_deref().map(Path::new))?;
    Ok(report.all_pass())
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Group name or path to a group JSON file.
fn load_group(spec: &str) -> Result<Arc<FiniteGroup>> {
    let path = Path::new(spec);
    if path.is_file() {
        io::read_json::<GroupJson>(path)?.resolve()
    } else {
        Ok(Arc::new(io::parse_group_spec(spec)?))
    }
}

fn load_rep(path: &Path) -> Result<UnitaryRep> {
    io::read_json::<RepJson>(path)?.to_rep()
}

fn load_vector(path: &Path) -> Result<vnframes::CVector> {
    io::read_json::<VectorJson>(path)?.to_vector()
}

fn load_vectors(path: &Path) -> Result<Vec<vnframes::CVector>> {
    io::read_json::<VectorsJson>(path)?.to_vectors()
}

fn load_operator(path: &Path) -> Result<VnOperator> {
    io::read_json::<OperatorJson>(path)?.to_operator()
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    write_bytes(&io::to_json_bytes(value)?, out)
}

fn write_bytes(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}
