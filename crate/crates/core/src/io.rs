//! JSON wire formats. Complex numbers are `[re, im]` pairs, matrices are
//! row-major lists with explicit dimensions, and non-finite values are
//! rejected in both directions.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::helson::HelsonImage;
use crate::linalg::{CMatrix, CVector, C64};
use crate::rep::{GroupAction, TilingData, UnitaryRep};
use crate::vn::VnOperator;

pub type Pair = [f64; 2];

fn to_pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn from_pairs(pairs: &[Pair], what: &str) -> Result<Vec<C64>> {
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(pairs.iter().map(|&[re, im]| C64::new(re, im)).collect())
}

/// Resolves a short group name.
///
/// Accepted forms: `z<n>`, `klein`, `z2xz4`, `d<n>`, `h<p>`.
pub fn parse_group_spec(spec: &str) -> Result<FiniteGroup> {
    let s = spec.trim().to_ascii_lowercase();
    let num = |rest: &str| {
        rest.parse::<usize>()
            .map_err(|_| Error::Config(format!("unknown group spec {spec:?}")))
    };
    match s.as_str() {
        "klein" | "z2xz2" => FiniteGroup::product(&FiniteGroup::cyclic(2)?, &FiniteGroup::cyclic(2)?),
        "z2xz4" => FiniteGroup::product(&FiniteGroup::cyclic(2)?, &FiniteGroup::cyclic(4)?),
        _ if s.starts_with('z') => FiniteGroup::cyclic(num(&s[1..])?),
        _ if s.starts_with('d') => FiniteGroup::dihedral(num(&s[1..])?),
        _ if s.starts_with('h') => FiniteGroup::heisenberg(num(&s[1..])?),
        _ => Err(Error::Config(format!("unknown group spec {spec:?}"))),
    }
}

/// A group given by name or inline table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupJson {
    Named(String),
    Inline(FiniteGroup),
}

impl GroupJson {
    pub fn resolve(&self) -> Result<Arc<FiniteGroup>> {
        match self {
            Self::Named(name) => Ok(Arc::new(parse_group_spec(name)?)),
            Self::Inline(g) => Ok(Arc::new(g.clone())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub group: GroupJson,
    pub coeffs: Vec<Pair>,
}

impl OperatorJson {
    pub fn from_operator(op: &VnOperator) -> Self {
        Self {
            group: GroupJson::Inline(op.group().as_ref().clone()),
            coeffs: op.coeffs().iter().copied().map(to_pair).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<VnOperator> {
        VnOperator::new(self.group.resolve()?, from_pairs(&self.coeffs, "operator coefficients")?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub entries: Vec<Pair>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries: m.transpose().iter().copied().map(to_pair).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: self.entries.len(),
            });
        }
        Ok(CMatrix::from_row_slice(self.rows, self.cols, &from_pairs(&self.entries, "matrix")?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepJson {
    pub group: GroupJson,
    pub dim: usize,
    /// One row-major list of `dim²` entries per group element.
    pub matrices: Vec<Vec<Pair>>,
}

impl RepJson {
    pub fn from_rep(rep: &UnitaryRep) -> Self {
        Self {
            group: GroupJson::Inline(rep.group().as_ref().clone()),
            dim: rep.dim(),
            matrices: rep
                .matrices()
                .iter()
                .map(|m| MatrixJson::from_matrix(m).entries)
                .collect(),
        }
    }

    pub fn to_rep(&self) -> Result<UnitaryRep> {
        let matrices = self
            .matrices
            .iter()
            .map(|entries| {
                MatrixJson {
                    rows: self.dim,
                    cols: self.dim,
                    entries: entries.clone(),
                }
                .to_matrix()
            })
            .collect::<Result<_>>()?;
        UnitaryRep::new(self.group.resolve()?, matrices)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionJson {
    pub group: GroupJson,
    pub set_size: usize,
    pub perm: Vec<Vec<usize>>,
    pub jacobian: Vec<Vec<f64>>,
}

impl ActionJson {
    pub fn from_action(action: &GroupAction) -> Self {
        Self {
            group: GroupJson::Inline(action.group().as_ref().clone()),
            set_size: action.set_size(),
            perm: action.perms().to_vec(),
            jacobian: action.jacobians().to_vec(),
        }
    }

    pub fn to_action(&self) -> Result<GroupAction> {
        if self.perm.iter().any(|p| p.len() != self.set_size) {
            return Err(Error::InvalidAction("permutation length differs from set_size".into()));
        }
        if self.jacobian.iter().flatten().any(|j| !j.is_finite()) {
            return Err(Error::NonFinite("jacobian".into()));
        }
        GroupAction::new(self.group.resolve()?, self.perm.clone(), self.jacobian.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileJson {
    pub tile: Vec<usize>,
}

impl TileJson {
    pub fn to_tiling(&self, action: &GroupAction) -> Result<TilingData> {
        action.tiling(self.tile.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorJson {
    pub dim: usize,
    pub entries: Vec<Pair>,
}

impl VectorJson {
    pub fn from_vector(v: &CVector) -> Self {
        Self {
            dim: v.len(),
            entries: v.iter().copied().map(to_pair).collect(),
        }
    }

    pub fn to_vector(&self) -> Result<CVector> {
        if self.entries.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.entries.len(),
            });
        }
        Ok(CVector::from_vec(from_pairs(&self.entries, "vector")?))
    }
}

/// A list of vectors sharing one dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorsJson {
    pub dim: usize,
    pub vectors: Vec<Vec<Pair>>,
}

impl VectorsJson {
    pub fn from_vectors(dim: usize, vs: &[CVector]) -> Self {
        Self {
            dim,
            vectors: vs.iter().map(|v| VectorJson::from_vector(v).entries).collect(),
        }
    }

    pub fn to_vectors(&self) -> Result<Vec<CVector>> {
        self.vectors
            .iter()
            .map(|entries| {
                VectorJson {
                    dim: self.dim,
                    entries: entries.clone(),
                }
                .to_vector()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberJson {
    pub coeffs: Vec<Pair>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HelsonImageJson {
    pub base_points: Vec<usize>,
    pub weights: Vec<f64>,
    pub fibers: Vec<FiberJson>,
}

impl HelsonImageJson {
    pub fn from_image(img: &HelsonImage) -> Self {
        Self {
            base_points: img.base_points.clone(),
            weights: img.weights.clone(),
            fibers: img
                .fibers
                .iter()
                .map(|f| FiberJson {
                    coeffs: f.coeffs().iter().copied().map(to_pair).collect(),
                })
                .collect(),
        }
    }

    pub fn to_image(&self, group: Arc<FiniteGroup>) -> Result<HelsonImage> {
        let fibers = self
            .fibers
            .iter()
            .map(|f| VnOperator::new(group.clone(), from_pairs(&f.coeffs, "fiber")?))
            .collect::<Result<_>>()?;
        HelsonImage::new(group, self.base_points.clone(), self.weights.clone(), fibers)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON; fails on any non-finite number instead of writing `null`.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let tree = serde_json::to_value(value)?;
    if has_null_number(&tree) {
        return Err(Error::NonFinite("output".into()));
    }
    let mut bytes = serde_json::to_vec_pretty(&tree)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// `serde_json` maps non-finite floats to `null`; no wire format here has
/// nullable fields.
fn has_null_number(v: &serde_json::Value) -> bool {
    use serde_json::Value;
    match v {
        Value::Null => true,
        Value::Array(xs) => xs.iter().any(has_null_number),
        Value::Object(m) => m.values().any(has_null_number),
        _ => false,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_bytes(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_specs() {
        assert_eq!(parse_group_spec("z8").unwrap().order(), 8);
        assert_eq!(parse_group_spec("klein").unwrap().order(), 4);
        assert_eq!(parse_group_spec("Z2xZ4").unwrap().order(), 8);
        assert_eq!(parse_group_spec("d4").unwrap().order(), 8);
        assert_eq!(parse_group_spec("h3").unwrap().order(), 27);
        assert!(matches!(parse_group_spec("q8"), Err(Error::Config(_))));
        assert!(parse_group_spec("z0").is_err());
    }

    #[test]
    fn operator_accepts_named_group() {
        let json = r#"{"group": "z2", "coeffs": [[1, 0], [0, 2]]}"#;
        let op: OperatorJson = serde_json::from_str(json).unwrap();
        let op = op.to_operator().unwrap();
        assert_eq!(op.coeff(1), C64::new(0.0, 2.0));
        let back = serde_json::to_string(&OperatorJson::from_operator(&op)).unwrap();
        assert!(back.contains("\"cayley\""));
    }

    #[test]
    fn rep_round_trip_is_exact() {
        let g = Arc::new(parse_group_spec("d3").unwrap());
        let rep = UnitaryRep::translation(g);
        let wire = RepJson::from_rep(&rep);
        let text = String::from_utf8(to_json_bytes(&wire).unwrap()).unwrap();
        let back: RepJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_rep().unwrap().matrices(), rep.matrices());
    }

    #[test]
    fn matrix_is_row_major() {
        let m = CMatrix::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let j = MatrixJson::from_matrix(&m);
        assert_eq!(j.entries, vec![[1.0, 0.0], [2.0, 0.0]]);
        assert_eq!(j.to_matrix().unwrap(), m);
    }

    #[test]
    fn non_finite_output_is_rejected() {
        let v = VectorJson {
            dim: 1,
            entries: vec![[f64::NAN, 0.0]],
        };
        assert!(matches!(to_json_bytes(&v), Err(Error::NonFinite(_))));
        assert!(matches!(v.to_vector(), Err(Error::NonFinite(_))));
    }

    #[test]
    fn vector_dimension_is_checked() {
        let v = VectorJson {
            dim: 3,
            entries: vec![[1.0, 0.0]],
        };
        assert!(matches!(v.to_vector(), Err(Error::DimensionMismatch { .. })));
    }
}
