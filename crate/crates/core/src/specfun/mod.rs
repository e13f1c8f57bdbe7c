//! Special functions: Gamma, Kummer M and U, and solutions of
//! z'' = 2 zeta z' + lambda z built from them.

mod gamma;
mod hermite;
mod kummer;

pub use gamma::{gamma, is_nonpositive_integer, pochhammer, rgamma};
pub use hermite::{
    hermite_even, hermite_jet, hermite_z, hermite_z_prime, is_degenerate_lambda, HermiteJet,
};
pub use kummer::{kummer_m, kummer_m_series, kummer_u};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
}
