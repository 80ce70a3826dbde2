//! Coefficient-encoded CKKS: parameters, keys and the basic ciphertext
//! operations.

mod keys;
mod ops;
mod params;

pub use keys::{swk_gen, swk_gen_elem, GaloisKeys, SecretKey, SwitchingKey};
pub use ops::{
    aut, dcd_coeff, decrypt, decrypt_mlwe, ecd_coeff, encrypt, encrypt_mlwe, is_trivial, key_switch, key_switch_bound,
    max_diff, mod_switch, module_key_switch, pcmult_monomial, ratio, relin, rescale, switch_parts, Ciphertext,
    MlweCiphertext,
};
pub use params::Params;
