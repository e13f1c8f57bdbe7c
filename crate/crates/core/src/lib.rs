//! Travelling-wave solution candidates from a polynomial ansatz in a
//! solution of z'' = 2 zeta z' + lambda z, with exact symbolic assembly and
//! numeric residual verification.

pub mod expr;
pub mod parser;
pub mod specfun;
pub mod reduce;
pub mod ansatz;
pub mod closure;
pub mod solve;
pub mod verify;
pub mod cli;
