//! Seeded randomness for property checks.
//!
//! Every check draws from its own ChaCha8 stream: the run seed selects the
//! key and an FNV-1a hash of the check label selects the stream, so adding
//! or reordering checks never perturbs the samples of another.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::group::FiniteGroup;
use crate::linalg::{CMatrix, CVector, C64};
use crate::vn::VnOperator;

pub type CheckRng = ChaCha8Rng;

pub fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent stream for `label` under `seed`.
pub fn stream(seed: u64, label: &str) -> CheckRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label));
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = matrix(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for z in q.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
    }
    q
}

pub fn operator<R: Rng + ?Sized>(rng: &mut R, group: &Arc<FiniteGroup>) -> VnOperator {
    let coeffs = (0..group.order()).map(|_| complex_normal(rng)).collect();
    VnOperator::new(group.clone(), coeffs).expect("finite coefficients")
}

/// Random self-adjoint positive semidefinite operator `F* F`.
pub fn positive_operator<R: Rng + ?Sized>(rng: &mut R, group: &Arc<FiniteGroup>) -> VnOperator {
    operator(rng, group).abs_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = vector(&mut stream(7, "x"), 4);
        let b = vector(&mut stream(7, "x"), 4);
        let c = vector(&mut stream(7, "y"), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unitary_is_unitary() {
        let u = unitary(&mut stream(1, "u"), 6);
        let defect = fro(&(u.adjoint() * &u - CMatrix::identity(6, 6)));
        assert!(defect < 1e-13);
    }
}
