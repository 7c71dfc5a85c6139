//! Frame theory for orbits of unitary representations of finite groups,
//! phrased through the right group von Neumann algebra `R(Γ)`.

pub mod error;
pub mod frame;
pub mod group;
pub mod helson;
pub mod io;
pub mod linalg;
pub mod modular;
pub mod rep;
pub mod rng;
pub mod tol;
pub mod verify;
pub mod vn;

pub use error::{Error, Result};
pub use group::FiniteGroup;
pub use linalg::{CMatrix, CVector, C64};
pub use rep::{GroupAction, TilingData, UnitaryRep};
pub use vn::{SpectralData, VnOperator};
