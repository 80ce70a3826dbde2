//! Modular plaintext matrix products and the floating-width backends that
//! realize them.

mod backend;
mod crt;
mod fp;
mod matrix;
mod naive;
mod strategy;

pub use backend::{Backend, BackendKind, Counters, Part};
pub use crt::{crt_recombine, strategy3_mm, CrtBasis};
pub use fp::{fits_fp_exact, fp_exact_mm, fp_matmul, FP_EXACT_BITS};
pub use matrix::{IntMatrix, ModMatrix};
pub use naive::{int_product, mod_ppmm_naive};
pub use strategy::{limb_base, limb_count, strategy1_mm, strategy1_plan, strategy2_bound, strategy2_mm, LimbStack};
