//! One timed, instrumented run of an encrypted matrix product on random
//! inputs, with its precision against the double-precision product.

use std::time::Instant;

use clap::ValueEnum;
use hela::ckks::{Params, SecretKey};
use hela::convert::TransposeKeySet;
use hela::formats::{
    build_secret_matrix, decrypt_matrix, encode_matrix, encrypt_matrix, rgsw_encrypt_matrix, Format, MatrixCT,
};
use hela::linalg::{
    ccmm, cpmm, cpmm_precomp_to_sk, cpmm_shared_s, gsw_matmat, pcmm_via_transpose, precision_bits,
    precompute_cpmm_keys, recommend_format, CcmmKeys, PlainOperand, SwitchOrder,
};
use hela::modmm::{Backend, BackendKind, ModMatrix};
use hela::real::RealMatrix;
use hela::ring::Sampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// Ciphertext times plaintext, two backend calls.
    Cpmm,
    /// Ciphertext times plaintext with keys precomputed for `S·U`, one call.
    Precomp,
    /// Ciphertext times ciphertext, four calls.
    Ccmm,
    /// RGSW matrix times ciphertext, four calls.
    Gsw,
    /// Plaintext times ciphertext through two transpositions.
    PcmmT,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cpmm => "cpmm",
            Algorithm::Precomp => "precomp",
            Algorithm::Ccmm => "ccmm",
            Algorithm::Gsw => "gsw",
            Algorithm::PcmmT => "pcmm-t",
        }
    }

    pub fn expected_calls(self) -> usize {
        match self {
            Algorithm::Precomp => 1,
            Algorithm::Cpmm | Algorithm::PcmmT => 2,
            Algorithm::Ccmm | Algorithm::Gsw => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Job {
    pub alg: Algorithm,
    pub format: Option<Format>,
    pub dims: (usize, usize, usize),
    pub backend: BackendKind,
    pub s2_on_a: bool,
    pub trivial: bool,
    pub lightweight: bool,
}

#[derive(Clone, Debug)]
pub struct Trial {
    pub format: Format,
    pub seconds: f64,
    pub calls: usize,
    pub bits: f64,
}

fn fresh_keys(format: Format, rows: usize, cols: usize, n: usize, s: &mut Sampler) -> hela::Result<Vec<SecretKey>> {
    let kd = format.key_degree(rows, n);
    (0..format.key_count(rows, cols, n)).map(|_| SecretKey::generate(kd, s)).collect()
}

/// A noiseless ciphertext `(0, ⌊ΔM⌉)` in the layout of `ct`.
fn trivialize(ct: &MatrixCT, m: &RealMatrix, params: &Params) -> hela::Result<MatrixCT> {
    let q = ct.modulus().clone();
    let zero = ModMatrix::zeros(ct.a.rows(), ct.a.cols(), q.clone());
    ct.with_parts(zero, encode_matrix(m, params.delta, &q)?)
}

fn square(alg: Algorithm, (d1, d2, d3): (usize, usize, usize), n: usize) -> hela::Result<()> {
    if (d1, d2, d3) != (n, n, n) {
        return Err(hela::Error::Dimension(format!("{} needs d1 = d2 = d3 = N = {n}", alg.name())));
    }
    Ok(())
}

pub fn run_trial(job: &Job, params: &Params, seed: u64) -> hela::Result<Trial> {
    let params = params.clone().with_seed(seed);
    let mut s = Sampler::new(params.sampler);
    let n = params.degree;
    let (d1, d2, d3) = job.dims;
    let q = params.q();
    let low = params.q_low();
    let backend = Backend::new(job.backend).with_s2_on_a(job.s2_on_a);
    let m = RealMatrix::random(d1, d2, 1.0, s.rng());
    let u = RealMatrix::random(d2, d3, 1.0, s.rng());
    let exact = m.matmul(&u)?;
    let prep = |ct: MatrixCT, m: &RealMatrix| if job.trivial { trivialize(&ct, m, &params) } else { Ok(ct) };

    let (format, seconds, got) = match job.alg {
        Algorithm::Cpmm => {
            let format = job.format.map_or_else(|| recommend_format(d1, d3, n), Ok)?;
            let keys = fresh_keys(format, d1, d2, n, &mut s)?;
            let ct = prep(encrypt_matrix(&keys, &m, format, &params, &mut s)?, &m)?;
            let uo = PlainOperand::encode(&u, params.delta, &q)?;
            let t = Instant::now();
            let out = if format == Format::SharedS {
                cpmm_shared_s(&ct, &uo, &low, &backend)?
            } else {
                cpmm(&ct, &uo, &low, &backend)?
            };
            (format, t.elapsed().as_secs_f64(), decrypt_matrix(&keys, &out)?)
        }
        Algorithm::Precomp => {
            let format = job.format.unwrap_or(if d1 % n == 0 { Format::StructASharedA } else { Format::StructAMlwe });
            let keys = fresh_keys(format, d1, d2, n, &mut s)?;
            let secret = build_secret_matrix(&keys, format, d1, d2, n, &q)?;
            let ct = prep(encrypt_matrix(&keys, &m, format, &params, &mut s)?, &m)?;
            let uo = PlainOperand::encode(&u, params.delta, &q)?;
            let target = SecretKey::generate(if format == Format::StructAMlwe { d1 } else { n }, &mut s)?;
            let pk = precompute_cpmm_keys(&secret, &uo, &target, &params.aux_big, &q, &mut s)?;
            let t = Instant::now();
            let out = cpmm_precomp_to_sk(&ct, &uo, &pk, &low, SwitchOrder::SwitchFirst, &backend)?;
            (format, t.elapsed().as_secs_f64(), decrypt_matrix(std::slice::from_ref(&target), &out)?)
        }
        Algorithm::Ccmm => {
            square(job.alg, job.dims, n)?;
            let sk = SecretKey::generate(n, &mut s)?;
            let keys = CcmmKeys::generate(&sk, &params.aux_big, &q, job.lightweight, &mut s);
            let sks = std::slice::from_ref(&sk);
            let c1 = prep(encrypt_matrix(sks, &m, Format::Rlwe, &params, &mut s)?, &m)?;
            let c2 = prep(encrypt_matrix(sks, &u, Format::Rlwe, &params, &mut s)?, &u)?;
            let t = Instant::now();
            let out = ccmm(&c1, &c2, &keys, &low, &backend)?;
            (Format::Rlwe, t.elapsed().as_secs_f64(), decrypt_matrix(sks, &out)?)
        }
        Algorithm::Gsw => {
            let format = job.format.map_or_else(|| recommend_format(d1, d3, n), Ok)?;
            let vf = match d2 {
                _ if d2 == n => Format::Rlwe,
                _ if d2 % n == 0 => Format::SharedS,
                _ => return Err(hela::Error::Dimension(format!("gsw multiplicands need N | d2, got d2 = {d2}"))),
            };
            let keys = fresh_keys(format, d1, d2, n, &mut s)?;
            let vkeys = vec![SecretKey::generate(n, &mut s)?];
            let partner = build_secret_matrix(&vkeys, vf, d2, 1, n, &(&params.aux_small * &q))?;
            let rgsw = rgsw_encrypt_matrix(&keys, &partner, &m, format, &params, &mut s)?;
            let v = prep(encrypt_matrix(&vkeys, &u, vf, &params, &mut s)?, &u)?;
            let t = Instant::now();
            let out = gsw_matmat(&rgsw, &v, &low, &backend)?;
            (format, t.elapsed().as_secs_f64(), decrypt_matrix(&keys, &out)?)
        }
        Algorithm::PcmmT => {
            square(job.alg, job.dims, n)?;
            let sk = SecretKey::generate(n, &mut s)?;
            let tk = if job.lightweight {
                TransposeKeySet::lightweight(&sk, &params.aux_big, &q, &mut s)
            } else {
                TransposeKeySet::full(&sk, &params.aux_big, &q, &mut s)
            };
            let sks = std::slice::from_ref(&sk);
            let ct = prep(encrypt_matrix(sks, &u, Format::Rlwe, &params, &mut s)?, &u)?;
            let left = PlainOperand::encode(&m, params.delta, &q)?;
            let t = Instant::now();
            let out = pcmm_via_transpose(&left, &ct, &tk, &low, &backend)?;
            (Format::Rlwe, t.elapsed().as_secs_f64(), decrypt_matrix(sks, &out)?)
        }
    };
    Ok(Trial { format, seconds, calls: backend.counters().mod_calls(), bits: precision_bits(&exact, &got) })
}
