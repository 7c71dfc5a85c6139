//! Finite groups stored as explicit Cayley tables, and their regular
//! representations.
//!
//! Elements are addressed by index. Each constructor fixes a canonical
//! indexing so that serialized groups round-trip deterministically:
//!
//! * `Z_n`: `k ↦ k`
//! * `G × H`: `(a, b) ↦ a·|H| + b`
//! * `D_n`: `r^k ↦ k`, `s·r^k ↦ n + k`
//! * Heisenberg over `Z_p`: `(a, b, c) ↦ a·p² + b·p + c`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GroupTable", into = "GroupTable")]
pub struct FiniteGroup {
    labels: Vec<String>,
    cayley: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

/// Wire format; identity and inverses are recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupTable {
    order: usize,
    labels: Vec<String>,
    cayley: Vec<Vec<usize>>,
}

impl TryFrom<GroupTable> for FiniteGroup {
    type Error = Error;

    fn try_from(t: GroupTable) -> Result<Self> {
        if t.order != t.cayley.len() {
            return Err(Error::InvalidGroup(format!(
                "order {} does not match table size {}",
                t.order,
                t.cayley.len()
            )));
        }
        FiniteGroup::from_table(t.labels, t.cayley)
    }
}

impl From<FiniteGroup> for GroupTable {
    fn from(g: FiniteGroup) -> Self {
        GroupTable {
            order: g.order(),
            labels: g.labels,
            cayley: g.cayley,
        }
    }
}

/// An element index checked against the order of its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement(usize);

impl GroupElement {
    pub fn index(self) -> usize {
        self.0
    }
}

impl FiniteGroup {
    /// Builds a group from a multiplication table, `cayley[a][b] = a·b`.
    ///
    /// The table is validated eagerly: Latin square, associativity, a
    /// two-sided identity, and inverses.
    pub fn from_table(labels: Vec<String>, cayley: Vec<Vec<usize>>) -> Result<Self> {
        let n = cayley.len();
        if n == 0 {
            return Err(Error::InvalidOrder("empty table".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidGroup(format!(
                "{} labels for {} elements",
                labels.len(),
                n
            )));
        }
        for (a, row) in cayley.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!("row {a} has length {}", row.len())));
            }
            if !is_permutation(row) {
                return Err(Error::InvalidGroup(format!("row {a} is not a permutation")));
            }
            let col: Vec<usize> = (0..n).map(|b| cayley[b][a]).collect();
            if !is_permutation(&col) {
                return Err(Error::InvalidGroup(format!("column {a} is not a permutation")));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| cayley[e][a] == a && cayley[a][e] == a))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        for a in 0..n {
            for b in 0..n {
                let ab = cayley[a][b];
                for c in 0..n {
                    if cayley[ab][c] != cayley[a][cayley[b][c]] {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        let inverse = (0..n)
            .map(|a| {
                (0..n)
                    .find(|&b| cayley[a][b] == identity)
                    .expect("Latin square rows contain the identity")
            })
            .collect();
        Ok(Self {
            labels,
            cayley,
            identity,
            inverse,
        })
    }

    /// The cyclic group `Z_n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidOrder("cyclic group needs n >= 1".into()));
        }
        let cayley = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let labels = (0..n).map(|k| k.to_string()).collect();
        Self::from_table(labels, cayley)
    }

    /// Direct product with lexicographic indexing.
    pub fn product(g: &FiniteGroup, h: &FiniteGroup) -> Result<Self> {
        let (ng, nh) = (g.order(), h.order());
        let n = ng * nh;
        let cayley = table(n, |a, b| {
            let (ag, ah) = (a / nh, a % nh);
            let (bg, bh) = (b / nh, b % nh);
            g.mul(ag, bg) * nh + h.mul(ah, bh)
        });
        let labels = (0..n)
            .map(|a| format!("({},{})", g.label(a / nh), h.label(a % nh)))
            .collect();
        Self::from_table(labels, cayley)
    }

    /// The dihedral group of order `2n`, `r^n = s² = e`, `s r s = r⁻¹`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidOrder(format!("dihedral group needs n >= 3, got {n}")));
        }
        // s^i r^k · s^j r^l = s^(i+j) r^((-1)^j k + l)
        let decode = |x: usize| (x / n, x % n);
        let encode = |i: usize, k: usize| (i % 2) * n + k % n;
        let cayley = table(2 * n, |a, b| {
            let (i, k) = decode(a);
            let (j, l) = decode(b);
            let k = if j == 1 { (n - k) % n } else { k };
            encode(i + j, k + l)
        });
        let labels = (0..2 * n)
            .map(|x| {
                let (i, k) = decode(x);
                match (i, k) {
                    (0, 0) => "e".to_string(),
                    (0, k) => format!("r^{k}"),
                    (_, 0) => "s".to_string(),
                    (_, k) => format!("sr^{k}"),
                }
            })
            .collect();
        Self::from_table(labels, cayley)
    }

    /// Upper unitriangular 3×3 matrices over `Z_p`, order `p³`.
    pub fn heisenberg(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidOrder(format!("Heisenberg group needs p >= 2, got {p}")));
        }
        let n = p * p * p;
        let decode = |x: usize| (x / (p * p), (x / p) % p, x % p);
        let cayley = table(n, |x, y| {
            let (a, b, c) = decode(x);
            let (a2, b2, c2) = decode(y);
            let (ra, rb, rc) = ((a + a2) % p, (b + b2) % p, (c + c2 + a * b2) % p);
            ra * p * p + rb * p + rc
        });
        let labels = (0..n)
            .map(|x| {
                let (a, b, c) = decode(x);
                format!("({a},{b},{c})")
            })
            .collect();
        Self::from_table(labels, cayley)
    }

    pub fn order(&self) -> usize {
        self.cayley.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.cayley[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn inverses(&self) -> &[usize] {
        &self.inverse
    }

    pub fn cayley(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn element(&self, index: usize) -> Result<GroupElement> {
        if index < self.order() {
            Ok(GroupElement(index))
        } else {
            Err(Error::InvalidGroup(format!(
                "element {index} out of range for order {}",
                self.order()
            )))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> {
        (0..self.order()).map(GroupElement)
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Smallest `k >= 1` with `g^k = e`.
    pub fn element_order(&self, g: GroupElement) -> usize {
        let mut x = g.0;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, g.0);
            k += 1;
        }
        k
    }

    /// `g^k`.
    pub fn pow(&self, g: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, g))
    }

    /// Elements commuting with every element.
    pub fn center(&self) -> Vec<usize> {
        let n = self.order();
        (0..n)
            .filter(|&z| (0..n).all(|x| self.mul(z, x) == self.mul(x, z)))
            .collect()
    }

    /// `ρ(γ)` as an index permutation: `ρ(γ)δ_x = δ_{x γ⁻¹}`.
    pub fn right_perm(&self, g: usize) -> Vec<usize> {
        let gi = self.inv(g);
        (0..self.order()).map(|x| self.mul(x, gi)).collect()
    }

    /// `λ(γ)` as an index permutation: `λ(γ)δ_x = δ_{γ x}`.
    pub fn left_perm(&self, g: usize) -> Vec<usize> {
        (0..self.order()).map(|x| self.mul(g, x)).collect()
    }

    /// Right and left regular representations as permutation matrices,
    /// `(ρ, λ)`, one matrix per element in index order.
    pub fn regular_representations(&self) -> (Vec<CMatrix>, Vec<CMatrix>) {
        let n = self.order();
        let rho = (0..n).map(|g| perm_matrix(&self.right_perm(g))).collect();
        let lambda = (0..n).map(|g| perm_matrix(&self.left_perm(g))).collect();
        (rho, lambda)
    }

    /// The character group of an abelian group.
    ///
    /// Characters are built by extending from the trivial subgroup one
    /// generator at a time: if `g ∉ H` and `m` is minimal with `g^m ∈ H`, each
    /// character of `H` has exactly `m` extensions to `⟨H, g⟩`, one for each
    /// `m`-th root of `χ(g^m)`. All values are `|Γ|`-th roots of unity and
    /// are kept as exact integer exponents.
    pub fn characters(&self) -> Result<Vec<Character>> {
        if !self.is_abelian() {
            return Err(Error::NonAbelian);
        }
        let n = self.order();
        let e = self.identity;
        // members[x] = Some(exponent table index) once x is in the subgroup.
        let mut in_sub = vec![false; n];
        in_sub[e] = true;
        let mut sub = vec![e];
        let mut chars: Vec<Vec<Option<usize>>> = vec![{
            let mut v = vec![None; n];
            v[e] = Some(0);
            v
        }];
        while sub.len() < n {
            let g = (0..n).find(|&x| !in_sub[x]).expect("proper subgroup");
            let mut m = 1;
            let mut gm = g;
            while !in_sub[gm] {
                gm = self.mul(gm, g);
                m += 1;
            }
            let mut new_chars = Vec::with_capacity(chars.len() * m);
            for chi in &chars {
                let a = chi[gm].expect("g^m lies in the subgroup");
                debug_assert_eq!(a % m, 0);
                for k in 0..m {
                    let t = a / m + k * (n / m);
                    let mut ext = vec![None; n];
                    let mut gi = e;
                    for i in 0..m {
                        for &h in &sub {
                            let x = self.mul(gi, h);
                            ext[x] = Some((i * t + chi[h].unwrap()) % n);
                        }
                        gi = self.mul(gi, g);
                    }
                    new_chars.push(ext);
                }
            }
            let mut gi = e;
            let mut grown = Vec::with_capacity(sub.len() * m);
            for _ in 0..m {
                for &h in &sub {
                    grown.push(self.mul(gi, h));
                }
                gi = self.mul(gi, g);
            }
            for &x in &grown {
                in_sub[x] = true;
            }
            sub = grown;
            chars = new_chars;
        }
        Ok(chars
            .into_iter()
            .map(|c| Character {
                modulus: n,
                exponents: c.into_iter().map(|x| x.expect("full group")).collect(),
            })
            .collect())
    }
}

/// A character `χ(γ) = exp(2πi·exponents[γ]/modulus)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub modulus: usize,
    pub exponents: Vec<usize>,
}

impl Character {
    pub fn value(&self, g: usize) -> crate::linalg::C64 {
        let theta = 2.0 * std::f64::consts::PI * self.exponents[g] as f64 / self.modulus as f64;
        crate::linalg::C64::from_polar(1.0, theta)
    }
}

fn is_permutation(row: &[usize]) -> bool {
    let mut seen = vec![false; row.len()];
    for &x in row {
        if x >= row.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// Matrix sending `δ_x` to `δ_{perm[x]}`.
fn table<F: Fn(usize, usize) -> usize>(n: usize, f: F) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| f(a, b)).collect()).collect()
}

pub fn perm_matrix(perm: &[usize]) -> CMatrix {
    let n = perm.len();
    let mut m = CMatrix::zeros(n, n);
    for (x, &y) in perm.iter().enumerate() {
        m[(y, x)] = ONE;
    }
    m
}
