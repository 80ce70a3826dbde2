use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{check_column, PlainOperand};
use crate::ckks::{Params, SecretKey};
use crate::error::{Error, Result};
use crate::formats::{rgsw_plaintexts, Format, FormatTag, MatrixCT, PartnerKey, RgswMatrixCT, SecretMatrix};
use crate::modmm::{Backend, ModMatrix, Part};
use crate::real::RealMatrix;
use crate::ring::Sampler;

/// Max row ℓ₁ norm of the matrix secret.
pub fn op_norm(s: &SecretMatrix) -> i64 {
    let e = &s.entries;
    (0..e.rows())
        .map(|i| e.row(i).iter().fold(BigInt::zero(), |acc, x| acc + x.abs()))
        .max()
        .and_then(|m| m.to_i64())
        .unwrap_or(i64::MAX)
}

/// `(‖S‖_op + 1)/2 + (q/p + K)·max(d₂, N^v)·ε` for the pre-rescale output of
/// [`gsw_matvec_raw`].
pub fn theorem9_bound(s_op: i64, q: &BigInt, p: &BigInt, k: f64, d2: usize, nv: usize, eps: f64) -> f64 {
    let ratio = q.to_f64().unwrap_or(f64::INFINITY) / p.to_f64().unwrap_or(f64::INFINITY);
    (s_op as f64 + 1.0) / 2.0 + (ratio + k) * d2.max(nv) as f64 * eps
}

/// RGSW encryption of a known plaintext `M`: the first part is the trivial
/// `(0, p·⌊ΔM⌉)`, the second a fresh encryption of `p·⌊ΔM⌉·S′`.
pub fn rgsw_encrypt_plain_matrix(
    keys: &[SecretKey],
    partner: &SecretMatrix,
    m: &RealMatrix,
    format: Format,
    params: &Params,
    sampler: &mut Sampler,
) -> Result<RgswMatrixCT> {
    let mut g = crate::formats::rgsw_encrypt_matrix(keys, partner, m, format, params, sampler)?;
    let (plain0, _) = rgsw_plaintexts(m, partner, params.delta, &params.aux_small, &params.q())?;
    let zero = ModMatrix::zeros(g.part0.a.rows(), g.part0.a.cols(), g.part0.modulus().clone());
    g.part0 = g.part0.with_parts(zero, plain0)?;
    Ok(g)
}

/// Which terms of the RGSW product are known to vanish.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Zeroed {
    None,
    A0,
    VectorA,
}

struct Operands<'a> {
    part0: &'a MatrixCT,
    part1: &'a MatrixCT,
    p: &'a BigInt,
    q: &'a BigInt,
}

/// `(⌊(A₁a + A₀b)/p⌉, ⌊(B₁a + B₀b)/p⌉)` modulo `q`, with the products taken
/// modulo `p·q`. Only a cleartext `b` is small enough for the b-part path.
fn product(
    g: &Operands,
    a: &ModMatrix,
    b: &ModMatrix,
    v_scale: f64,
    zeroed: Zeroed,
    backend: &Backend,
) -> Result<MatrixCT> {
    let pq = g.part0.modulus();
    let (a, b) = (a.with_modulus(pq), b.with_modulus(pq));
    let (x, y) = match zeroed {
        Zeroed::None => (
            backend.mm(&g.part1.a, &a, Part::A)?.add(&backend.mm(&g.part0.a, &b, Part::A)?),
            backend.mm(&g.part1.b, &a, Part::A)?.add(&backend.mm(&g.part0.b, &b, Part::A)?),
        ),
        Zeroed::A0 => (
            backend.mm(&g.part1.a, &a, Part::A)?,
            backend.mm(&g.part1.b, &a, Part::A)?.add(&backend.mm(&g.part0.b, &b, Part::A)?),
        ),
        Zeroed::VectorA => (backend.mm(&g.part0.a, &b, Part::A)?, backend.mm(&g.part0.b, &b, Part::B)?),
    };
    let one = BigInt::one();
    let scale = g.part0.scale / g.p.to_f64().unwrap_or(f64::INFINITY) * v_scale;
    let mut out = MatrixCT::new(
        FormatTag::column(g.part0.format()),
        x.scale_round(&one, g.p, g.q),
        y.scale_round(&one, g.p, g.q),
        g.part0.degree,
        scale,
    )?;
    out.logical_rows = g.part0.logical_rows;
    Ok(out)
}

fn operands(rgsw: &RgswMatrixCT) -> Result<Operands<'_>> {
    if rgsw.part0.modulus() != &(&rgsw.aux * &rgsw.q) || rgsw.part1.modulus() != rgsw.part0.modulus() {
        return Err(Error::ModulusMismatch("RGSW parts must live modulo p·q".into()));
    }
    check_column(&rgsw.part0)?;
    Ok(Operands { part0: &rgsw.part0, part1: &rgsw.part1, p: &rgsw.aux, q: &rgsw.q })
}

fn check_vector(rgsw: &RgswMatrixCT, v: &MatrixCT) -> Result<()> {
    check_column(v)?;
    if v.format().is_structured_a() {
        return Err(Error::InvalidParams(format!(
            "the multiplicand must use a structured-S format, got {}",
            v.format()
        )));
    }
    if v.modulus() != &rgsw.q {
        return Err(Error::ModulusMismatch(format!(
            "vector is modulo {}, the RGSW matrix expects {}",
            v.modulus(),
            rgsw.q
        )));
    }
    let partner: &PartnerKey = &rgsw.partner;
    if partner.format != v.format() || partner.rows != v.dims().0 || partner.degree != v.degree {
        return Err(Error::ParamMismatch(format!(
            "vector {} with {} rows is not under the partner key ({} with {} rows)",
            v.format(),
            v.dims().0,
            partner.format,
            partner.rows
        )));
    }
    if rgsw.dims().1 != v.dims().0 {
        return Err(Error::Dimension(format!("matrix has {} columns, vector {} rows", rgsw.dims().1, v.dims().0)));
    }
    if rgsw.aux.to_f64().unwrap_or(f64::INFINITY) * v.scale < rgsw.q.to_f64().unwrap_or(f64::INFINITY) {
        return Err(Error::InvalidParams("RGSW product needs p·Δ >= q".into()));
    }
    Ok(())
}

/// The four products modulo `p·q` and the division by `p`, without the final
/// rescale. The output scale is `Δ_M·Δ_v`.
pub fn gsw_matvec_raw(rgsw: &RgswMatrixCT, v: &MatrixCT, backend: &Backend) -> Result<MatrixCT> {
    let g = operands(rgsw)?;
    check_vector(rgsw, v)?;
    product(&g, &v.a, &v.b, v.scale, Zeroed::None, backend)
}

/// CC-Mv with an RGSW matrix; the vector is a one-column ciphertext.
pub fn gsw_matvec(rgsw: &RgswMatrixCT, v: &MatrixCT, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    if v.dims().1 != 1 {
        return Err(Error::Dimension(format!("expected a vector, got {} columns", v.dims().1)));
    }
    gsw_matvec_raw(rgsw, v, backend)?.rescale(target)
}

/// CC-MM as a batch of CC-Mv's sharing the same four products.
pub fn gsw_matmat(rgsw: &RgswMatrixCT, ct: &MatrixCT, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    gsw_matvec_raw(rgsw, ct, backend)?.rescale(target)
}

/// PC-Mv: the matrix is known in the clear, so its first part has no
/// a-component and one product disappears.
pub fn gsw_pc_mv(rgsw: &RgswMatrixCT, v: &MatrixCT, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    let g = operands(rgsw)?;
    if !rgsw.part0.a.is_zero() {
        return Err(Error::InvalidParams("gsw_pc_mv needs a trivial first RGSW part".into()));
    }
    check_vector(rgsw, v)?;
    product(&g, &v.a, &v.b, v.scale, Zeroed::A0, backend)?.rescale(target)
}

/// CP-Mv: the vector is known in the clear, so `a = 0` and only the first
/// RGSW part is used.
pub fn gsw_cp_mv(rgsw: &RgswMatrixCT, v: &PlainOperand, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    let g = operands(rgsw)?;
    if rgsw.dims().1 != v.shape().0 {
        return Err(Error::Dimension(format!("matrix has {} columns, vector {} rows", rgsw.dims().1, v.shape().0)));
    }
    let b = v.encoded_mod(&rgsw.q);
    let a = ModMatrix::zeros(0, b.cols(), rgsw.q.clone());
    product(&g, &a, &b, v.scale, Zeroed::VectorA, backend)?.rescale(target)
}

/// Operand blocked in the shared-s representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockingMode {
    Matrix,
    Vector,
    Both,
}

impl BlockingMode {
    fn matrix(self) -> bool {
        self != BlockingMode::Vector
    }

    fn vector(self) -> bool {
        self != BlockingMode::Matrix
    }
}

/// Shapes of the operands entering the grouped products.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockingReport {
    pub mode: BlockingMode,
    pub a0: (usize, usize),
    pub b0: (usize, usize),
    pub a1: (usize, usize),
    pub b1: (usize, usize),
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub blocks: usize,
}

fn check_blocking(rgsw: &RgswMatrixCT, v: &MatrixCT, mode: BlockingMode) -> Result<()> {
    let (d1, d2) = rgsw.dims();
    if mode.matrix() {
        if rgsw.part0.format() != Format::SharedS {
            return Err(Error::InvalidParams(format!(
                "matrix blocking needs a shared-s matrix, got {}",
                rgsw.part0.format()
            )));
        }
        if d1 % rgsw.part0.degree != 0 {
            return Err(Error::Dimension(format!("N = {} does not divide d1 = {d1}", rgsw.part0.degree)));
        }
    }
    if mode.vector() {
        if v.format() != Format::SharedS {
            return Err(Error::InvalidParams(format!("vector blocking needs a shared-s vector, got {}", v.format())));
        }
        if d2 % v.degree != 0 {
            return Err(Error::Dimension(format!("N = {} does not divide d2 = {d2}", v.degree)));
        }
    }
    Ok(())
}

/// The RGSW product with shared-s blocking of `M`, `v` or both. The
/// per-block products are grouped into the four products of
/// [`gsw_matvec_raw`], whose operand shapes are reported.
pub fn gsw_shared_s_blocking(
    rgsw: &RgswMatrixCT,
    v: &MatrixCT,
    mode: BlockingMode,
    backend: &Backend,
) -> Result<(MatrixCT, BlockingReport)> {
    check_blocking(rgsw, v, mode)?;
    let (d1, d2) = rgsw.dims();
    let row_blocks = if mode.matrix() { d1 / rgsw.part0.degree } else { 1 };
    let col_blocks = if mode.vector() { d2 / v.degree } else { 1 };
    let out = gsw_matvec_raw(rgsw, v, backend)?;
    let report = BlockingReport {
        mode,
        a0: rgsw.part0.a.shape(),
        b0: rgsw.part0.b.shape(),
        a1: rgsw.part1.a.shape(),
        b1: rgsw.part1.b.shape(),
        a: v.a.shape(),
        b: v.b.shape(),
        blocks: row_blocks * col_blocks,
    };
    Ok((out, report))
}

fn block_ct(ct: &MatrixCT, format: Format, a: ModMatrix, b: ModMatrix) -> Result<MatrixCT> {
    MatrixCT::new(FormatTag::column(format), a, b, ct.degree, ct.scale)
}

/// Reference for [`gsw_shared_s_blocking`]: one independent RGSW product per
/// pair of blocks `M_i·v_j`, rounded separately and summed over `j`.
pub fn gsw_blockwise(rgsw: &RgswMatrixCT, v: &MatrixCT, mode: BlockingMode, backend: &Backend) -> Result<MatrixCT> {
    operands(rgsw)?;
    check_vector(rgsw, v)?;
    check_blocking(rgsw, v, mode)?;
    let (d1, d2) = rgsw.dims();
    let nm = rgsw.part0.degree;
    let (rb, row_format) = if mode.matrix() { (nm, Format::Rlwe) } else { (d1, rgsw.part0.format()) };
    let (cb, v_format) = if mode.vector() { (v.degree, Format::Rlwe) } else { (d2, v.format()) };
    let (p0, p1) = (&rgsw.part0, &rgsw.part1);
    let mut rows_a = Vec::new();
    let mut rows_b = Vec::new();
    for i in 0..d1 / rb {
        // a-parts of blocked shared-s matrices are row-aligned with b
        let a_rows = |m: &ModMatrix| if mode.matrix() { (i * rb, rb) } else { (0, m.rows()) };
        let mut acc: Option<MatrixCT> = None;
        for j in 0..d2 / cb {
            let (r0, rs) = a_rows(&p0.a);
            let part0 = block_ct(p0, row_format, p0.a.block(r0, j * cb, rs, cb), p0.b.block(i * rb, j * cb, rb, cb))?;
            let cols1 = if mode.vector() { (j * cb, cb) } else { (0, p1.b.cols()) };
            let (r1, rs1) = a_rows(&p1.a);
            let part1 = block_ct(
                p1,
                row_format,
                p1.a.block(r1, cols1.0, rs1, cols1.1),
                p1.b.block(i * rb, cols1.0, rb, cols1.1),
            )?;
            let va = if mode.vector() { v.a.block(j * cb, 0, cb, v.a.cols()) } else { v.a.clone() };
            let vb = v.b.block(j * cb, 0, cb, v.b.cols());
            let vj = block_ct(v, v_format, va, vb)?;
            let g = Operands { part0: &part0, part1: &part1, p: &rgsw.aux, q: &rgsw.q };
            let out = product(&g, &vj.a, &vj.b, v.scale, Zeroed::None, backend)?;
            acc = Some(match acc {
                None => out,
                Some(prev) => prev.add(&out)?,
            });
        }
        let acc = acc.expect("at least one block");
        rows_a.push(acc.a);
        rows_b.push(acc.b);
    }
    let a = if mode.matrix() { ModMatrix::vstack(&rows_a) } else { rows_a.pop().unwrap() };
    let b = ModMatrix::vstack(&rows_b);
    let scale = p0.scale / rgsw.aux.to_f64().unwrap_or(f64::INFINITY) * v.scale;
    let mut out = MatrixCT::new(FormatTag::column(p0.format()), a, b, p0.degree, scale)?;
    out.logical_rows = p0.logical_rows;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{
        build_secret_matrix, decrypt_matrix, encode_matrix, encrypt_matrix, format_error, rgsw_encrypt_matrix,
    };
    use crate::linalg::precision_bits;
    use crate::modmm::{mod_ppmm_naive, BackendKind};

    struct Case {
        params: Params,
        s: Sampler,
        keys: Vec<SecretKey>,
        vkeys: Vec<SecretKey>,
        partner: SecretMatrix,
        m: RealMatrix,
        v: RealMatrix,
        rgsw: RgswMatrixCT,
        vct: MatrixCT,
    }

    fn case(n: usize, mf: Format, d1: usize, vf: Format, d2: usize, d3: usize, sigma: f64) -> Case {
        seeded_case(0, n, mf, d1, vf, d2, d3, sigma)
    }

    #[allow(clippy::too_many_arguments)]
    fn seeded_case(seed: u64, n: usize, mf: Format, d1: usize, vf: Format, d2: usize, d3: usize, sigma: f64) -> Case {
        let mut params = Params::desk16().with_sigma(sigma).with_seed(seed);
        params.degree = n;
        let mut s = Sampler::new(params.sampler);
        let kd = mf.key_degree(d1, n);
        let keys: Vec<SecretKey> =
            (0..mf.key_count(d1, d2, n)).map(|_| SecretKey::generate(kd, &mut s).unwrap()).collect();
        let vkeys = vec![SecretKey::generate(vf.key_degree(d2, n), &mut s).unwrap(); vf.key_count(d2, 1, n)];
        let pq = &params.aux_small * params.q();
        let partner = build_secret_matrix(&vkeys, vf, d2, 1, n, &pq).unwrap();
        let m = RealMatrix::random(d1, d2, 1.0, s.rng());
        let v = RealMatrix::random(d2, d3, 1.0, s.rng());
        let rgsw = rgsw_encrypt_matrix(&keys, &partner, &m, mf, &params, &mut s).unwrap();
        let vct = encrypt_matrix(&vkeys, &v, vf, &params, &mut s).unwrap();
        Case { params, s, keys, vkeys, partner, m, v, rgsw, vct }
    }

    #[test]
    fn identity_without_noise_is_pure_rounding() {
        let mut c = case(16, Format::Rlwe, 16, Format::Rlwe, 16, 1, 0.0);
        c.rgsw = rgsw_encrypt_matrix(&c.keys, &c.partner, &RealMatrix::identity(16), Format::Rlwe, &c.params, &mut c.s)
            .unwrap();
        let q = c.params.q();
        let out = gsw_matvec_raw(&c.rgsw, &c.vct, &Backend::new(BackendKind::Naive)).unwrap();
        let own = build_secret_matrix(&c.keys, Format::Rlwe, 16, 1, 16, &q).unwrap();
        let m0 = encode_matrix(&RealMatrix::identity(16), c.params.delta, &q).unwrap();
        let v0 = encode_matrix(&c.v, c.params.delta, &q).unwrap();
        let err = format_error(&own, &out, &mod_ppmm_naive(&m0, &v0).unwrap()).unwrap();
        assert!(err.to_f64().unwrap() <= (op_norm(&own) as f64 + 1.0) / 2.0);

        let zero = c.vct.with_parts(ModMatrix::zeros(16, 1, q.clone()), ModMatrix::zeros(16, 1, q.clone())).unwrap();
        let out = gsw_matvec(&c.rgsw, &zero, &c.params.q_low(), &Backend::new(BackendKind::S1)).unwrap();
        assert!(out.a.is_zero() && out.b.is_zero());
    }

    fn bound_trial(c: &Case, inject: i64) -> (f64, f64) {
        let q = c.params.q();
        let p = &c.params.aux_small;
        let pq = p * &q;
        let (n, (d1, d2)) = (c.params.degree, c.rgsw.dims());
        let mut rgsw = c.rgsw.clone();
        if inject != 0 {
            let mut b1 = rgsw.part1.b.clone();
            b1.set(0, 0, b1.get(0, 0) + inject);
            rgsw.part1 = rgsw.part1.with_parts(rgsw.part1.a.clone(), b1).unwrap();
        }
        let own = build_secret_matrix(&c.keys, rgsw.part0.format(), d1, d2, n, &pq).unwrap();
        let (p0, p1) = rgsw_plaintexts(&c.m, &c.partner, c.params.delta, p, &q).unwrap();
        let e0 = format_error(&own, &rgsw.part0, &p0).unwrap();
        let e1 = format_error(&own, &rgsw.part1, &p1).unwrap();
        let vpartner = build_secret_matrix(&c.vkeys, c.vct.format(), d2, 1, n, &q).unwrap();
        let v0 = encode_matrix(&c.v, c.params.delta, &q).unwrap();
        let e = format_error(&vpartner, &c.vct, &v0).unwrap();
        let eps = e0.max(e1).max(e).to_f64().unwrap();

        let out = gsw_matvec_raw(&rgsw, &c.vct, &Backend::new(BackendKind::S1)).unwrap();
        let own_q = build_secret_matrix(&c.keys, rgsw.part0.format(), d1, d2, n, &q).unwrap();
        let m0 = encode_matrix(&c.m, c.params.delta, &q).unwrap();
        let got = format_error(&own_q, &out, &mod_ppmm_naive(&m0, &v0).unwrap()).unwrap().to_f64().unwrap();
        let k = m0.max_abs().max(v0.max_abs()).to_f64().unwrap();
        (got, theorem9_bound(op_norm(&own_q), &q, p, k, d2, n, eps))
    }

    #[test]
    fn error_stays_within_bound() {
        for trial in 0..200u64 {
            let c = seeded_case(trial, 32, Format::Rlwe, 32, Format::Rlwe, 32, 1, 3.2);
            let inject = if trial % 20 == 0 { 5000 } else { 0 };
            let (got, bound) = bound_trial(&c, inject);
            assert!(got <= bound, "trial {trial}: {got} > {bound}");
        }
    }

    #[test]
    fn formats_against_oracle() {
        let cases = [
            (Format::Rlwe, 16, Format::Rlwe, 16),
            (Format::SharedA, 32, Format::Rlwe, 16),
            (Format::Mlwe, 8, Format::Rlwe, 16),
            (Format::SharedS, 32, Format::SharedS, 32),
        ];
        for (mf, d1, vf, d2) in cases {
            let c = case(16, mf, d1, vf, d2, 4, 3.2);
            let backend = Backend::new(BackendKind::S3);
            let out = gsw_matmat(&c.rgsw, &c.vct, &c.params.q_low(), &backend).unwrap();
            assert_eq!(backend.counters().mod_calls(), 4);
            let exact = c.m.matmul(&c.v).unwrap();
            let got = decrypt_matrix(&c.keys, &out).unwrap();
            let bits = precision_bits(&exact, &got);
            assert!(bits > c.params.log_delta() - (d2 as f64).log2() - 4.0, "{mf}/{vf}: {bits}");
        }
    }

    #[test]
    fn matmat_column_is_matvec() {
        let c = case(16, Format::Rlwe, 16, Format::Rlwe, 16, 1, 3.2);
        let backend = Backend::new(BackendKind::Naive);
        let x = gsw_matvec(&c.rgsw, &c.vct, &c.params.q_low(), &backend).unwrap();
        let y = gsw_matmat(&c.rgsw, &c.vct, &c.params.q_low(), &backend).unwrap();
        assert_eq!(x, y);
        let wide = case(16, Format::Rlwe, 16, Format::Rlwe, 16, 2, 3.2);
        assert!(gsw_matvec(&wide.rgsw, &wide.vct, &c.params.q_low(), &backend).is_err());
    }

    #[test]
    fn plaintext_operand_extensions() {
        let mut c = case(16, Format::Rlwe, 16, Format::Rlwe, 16, 1, 3.2);
        let target = c.params.q_low();
        let exact = c.m.matmul(&c.v).unwrap();
        let plain = rgsw_encrypt_plain_matrix(&c.keys, &c.partner, &c.m, Format::Rlwe, &c.params, &mut c.s).unwrap();
        let backend = Backend::new(BackendKind::S1);
        let pc = gsw_pc_mv(&plain, &c.vct, &target, &backend).unwrap();
        assert_eq!(backend.counters().mod_calls(), 3);
        let full = gsw_matvec(&plain, &c.vct, &target, &Backend::new(BackendKind::S1)).unwrap();
        assert_eq!(pc, full);
        assert!(decrypt_matrix(&c.keys, &pc).unwrap().dist(&exact) < 0.1);
        assert!(gsw_pc_mv(&c.rgsw, &c.vct, &target, &backend).is_err());

        let u = PlainOperand::encode(&c.v, c.params.delta, &c.params.q()).unwrap();
        let backend = Backend::new(BackendKind::S1);
        let cp = gsw_cp_mv(&c.rgsw, &u, &target, &backend).unwrap();
        assert_eq!(backend.counters().mod_calls(), 2);
        let zero_a = c.vct.with_parts(ModMatrix::zeros(16, 1, c.params.q()), u.encoded.clone()).unwrap();
        assert_eq!(cp, gsw_matvec(&c.rgsw, &zero_a, &target, &Backend::new(BackendKind::S1)).unwrap());
        assert!(decrypt_matrix(&c.keys, &cp).unwrap().dist(&exact) < 0.1);
    }

    #[test]
    fn rejects_foreign_vectors() {
        let c = case(16, Format::Rlwe, 16, Format::Rlwe, 16, 1, 3.2);
        let backend = Backend::new(BackendKind::Naive);
        let low = c.vct.rescale(&c.params.q_low()).unwrap();
        assert!(matches!(gsw_matvec_raw(&c.rgsw, &low, &backend), Err(Error::ModulusMismatch(_))));
        let mut rgsw = c.rgsw.clone();
        rgsw.partner.rows = 32;
        assert!(matches!(gsw_matvec_raw(&rgsw, &c.vct, &backend), Err(Error::ParamMismatch(_))));
    }

    #[test]
    fn blocking_dimensions() {
        let n = 16;
        let backend = Backend::new(BackendKind::S1);
        let c = case(n, Format::SharedS, 32, Format::Rlwe, 16, 1, 3.2);
        let (_, r) = gsw_shared_s_blocking(&c.rgsw, &c.vct, BlockingMode::Matrix, &backend).unwrap();
        assert_eq!((r.a0, r.b0, r.a1, r.b1, r.a, r.b), ((32, 16), (32, 16), (32, n), (32, n), (n, 1), (16, 1)));
        assert!(gsw_shared_s_blocking(&c.rgsw, &c.vct, BlockingMode::Vector, &backend).is_err());

        let c = case(n, Format::Rlwe, 16, Format::SharedS, 32, 1, 3.2);
        let (_, r) = gsw_shared_s_blocking(&c.rgsw, &c.vct, BlockingMode::Vector, &backend).unwrap();
        assert_eq!((r.a0, r.b0, r.a1, r.b1, r.a, r.b), ((n, 32), (16, 32), (n, 32), (16, 32), (32, 1), (32, 1)));

        let c = case(n, Format::SharedS, 32, Format::SharedS, 48, 1, 3.2);
        let (_, r) = gsw_shared_s_blocking(&c.rgsw, &c.vct, BlockingMode::Both, &backend).unwrap();
        assert_eq!((r.a0, r.b0, r.a1, r.b1, r.a, r.b), ((32, 48), (32, 48), (32, 48), (32, 48), (48, 1), (48, 1)));
        assert_eq!(r.blocks, 6);
    }

    #[test]
    fn blocked_agrees_with_blockwise() {
        for (mf, d1, vf, d2, mode) in [
            (Format::SharedS, 32, Format::Rlwe, 16, BlockingMode::Matrix),
            (Format::Rlwe, 16, Format::SharedS, 32, BlockingMode::Vector),
            (Format::SharedS, 32, Format::SharedS, 32, BlockingMode::Both),
        ] {
            let c = case(16, mf, d1, vf, d2, 2, 3.2);
            let backend = Backend::new(BackendKind::Naive);
            let (grouped, _) = gsw_shared_s_blocking(&c.rgsw, &c.vct, mode, &backend).unwrap();
            let split = gsw_blockwise(&c.rgsw, &c.vct, mode, &backend).unwrap();
            let x = decrypt_matrix(&c.keys, &grouped).unwrap();
            let y = decrypt_matrix(&c.keys, &split).unwrap();
            // separate roundings differ by at most one unit per block and key weight
            let blocks = (d2 / 16) as f64;
            let tol =
                blocks * (op_norm(&build_secret_matrix(&c.keys, mf, d1, d2, 16, &c.params.q()).unwrap()) as f64 + 1.0);
            assert!(x.dist(&y) * grouped.scale <= tol, "{mode:?}: {}", x.dist(&y) * grouped.scale);
            if mode == BlockingMode::Matrix {
                assert_eq!(grouped, split);
            }
            assert!(x.dist(&c.m.matmul(&c.v).unwrap()) < 0.1, "{}", x.dist(&c.m.matmul(&c.v).unwrap()));
        }
    }
}
