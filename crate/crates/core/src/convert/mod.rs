//! Conversions between ciphertext formats: format switching, module
//! decomposition and packing, homomorphic transposition and RLWE to RGSW.

mod fmtswitch;
mod matrix;
mod modular;
mod rgsw;
mod transpose;
mod tweak;

pub use fmtswitch::{
    back_switch_keys, fast_shared_s_to_shared_a, fast_shared_s_to_shared_a_counted, fmt_swk_gen, recursive_key_gen,
    shared_a_to_shared_s, shared_s_to_shared_a, shared_s_to_shared_a_bound, shared_s_to_shared_a_counted,
    FormatSwitchKey, RecursiveFormatKey, RecursiveLevel, SharedACiphertexts,
};
pub use matrix::{
    mlwe_matrices_to_rlwe, rlwe_matrix_to_mlwe, shared_a_matrix_to_shared_s, shared_s_matrix_to_shared_a,
};
pub use modular::{
    decompose_key, join_elems, mod_decomp, mod_pack, packing_key_gen, shared_a_part_keys, split_elem, DecompMode,
    PackingKeys,
};
pub use rgsw::{rgsw_conversion_keys, rgsw_from_rlwe, rlwe_to_rgsw, rlwe_to_rgsw_counted, RgswConversionKeys};
pub use transpose::{
    lightweight_schedule, transpose, transpose_counted, transpose_matrix, transpose_matrix_counted, LightweightKeys,
    TransposeKeySet,
};
pub use tweak::{tweak, tweak_counted, tweak_direct};
