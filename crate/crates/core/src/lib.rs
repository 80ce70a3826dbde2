//! Homomorphic linear algebra over coefficient-encoded CKKS.
//!
//! Encrypted matrix products are reduced to products of plaintext integer
//! matrices modulo the ciphertext modulus, which the [`modmm`] backends
//! compute exactly (or with a controlled truncation) using 53-bit
//! floating-width kernels.

pub mod arith;
pub mod ckks;
pub mod convert;
pub mod error;
pub mod formats;
pub mod linalg;
pub mod modmm;
pub mod real;
pub mod ring;
pub mod serial;

pub use error::{Error, Result};
