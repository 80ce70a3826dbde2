//! Binary files for ring elements, keys and matrix ciphertexts, plus the
//! TOML manifest that lists a key directory's fingerprints.
//!
//! A ring element is `"HELA" | version u16 | N u32 | L u16 | modulus (L
//! bytes)` followed by `N` coefficients, each `L` bytes of little-endian
//! two's complement. Files start with the same magic and version and a
//! one-byte [`Kind`].

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_bigint::{BigInt, Sign};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ckks::{Ciphertext, GaloisKeys, SecretKey, SwitchingKey};
use crate::convert::{FormatSwitchKey, LightweightKeys, RgswConversionKeys, TransposeKeySet};
use crate::error::{Error, Result};
use crate::formats::{Format, FormatTag, MatrixCT, Orientation, PartnerKey, RgswMatrixCT};
use crate::modmm::ModMatrix;
use crate::ring::{RingElem, RingParams};

pub const MAGIC: &[u8; 4] = b"HELA";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    SecretKeys = 1,
    Ciphertext = 2,
    SwitchingKeys = 3,
    Matrix = 4,
    FormatSwitch = 5,
    Transpose = 6,
    Matrices = 7,
    Rgsw = 8,
    RgswKeys = 9,
}

impl Kind {
    fn from_u8(b: u8) -> Result<Self> {
        Ok(match b {
            1 => Kind::SecretKeys,
            2 => Kind::Ciphertext,
            3 => Kind::SwitchingKeys,
            4 => Kind::Matrix,
            5 => Kind::FormatSwitch,
            6 => Kind::Transpose,
            7 => Kind::Matrices,
            8 => Kind::Rgsw,
            9 => Kind::RgswKeys,
            _ => return Err(Error::Malformed(format!("unknown artifact kind {b}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::SecretKeys => "sk",
            Kind::Ciphertext => "ct",
            Kind::SwitchingKeys => "swk",
            Kind::Matrix => "matrix",
            Kind::FormatSwitch => "fmt-swk",
            Kind::Transpose => "transpose",
            Kind::Matrices => "matrices",
            Kind::Rgsw => "rgsw",
            Kind::RgswKeys => "rgsw-keys",
        }
    }
}

/// Anything the CLI writes to disk.
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    SecretKeys(Vec<SecretKey>),
    Ciphertext(Ciphertext),
    SwitchingKeys(Vec<SwitchingKey>),
    Matrix(MatrixCT),
    FormatSwitch(FormatSwitchKey),
    Transpose(TransposeKeySet),
    Matrices(Vec<MatrixCT>),
    Rgsw(RgswMatrixCT),
    RgswKeys(RgswConversionKeys),
}

impl Artifact {
    pub fn kind(&self) -> Kind {
        match self {
            Artifact::SecretKeys(_) => Kind::SecretKeys,
            Artifact::Ciphertext(_) => Kind::Ciphertext,
            Artifact::SwitchingKeys(_) => Kind::SwitchingKeys,
            Artifact::Matrix(_) => Kind::Matrix,
            Artifact::FormatSwitch(_) => Kind::FormatSwitch,
            Artifact::Transpose(_) => Kind::Transpose,
            Artifact::Matrices(_) => Kind::Matrices,
            Artifact::Rgsw(_) => Kind::Rgsw,
            Artifact::RgswKeys(_) => Kind::RgswKeys,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u16(VERSION);
        w.u8(self.kind() as u8);
        match self {
            Artifact::SecretKeys(keys) => {
                w.u32(keys.len() as u32);
                keys.iter().for_each(|k| w.secret(k));
            }
            Artifact::Ciphertext(ct) => w.ciphertext(ct),
            Artifact::SwitchingKeys(keys) => {
                w.u32(keys.len() as u32);
                keys.iter().for_each(|k| w.swk(k));
            }
            Artifact::Matrix(m) => w.matrix(m),
            Artifact::FormatSwitch(k) => {
                w.u32(k.n() as u32);
                w.bigint(k.aux());
                w.bigint(k.q());
                k.a.iter().for_each(|x| w.ring(x));
                k.b.iter().flatten().for_each(|x| w.ring(x));
            }
            Artifact::Transpose(t) => w.transpose(t),
            Artifact::Matrices(ms) => {
                w.u32(ms.len() as u32);
                ms.iter().for_each(|m| w.matrix(m));
            }
            Artifact::Rgsw(g) => {
                w.bigint(&g.aux);
                w.bigint(&g.q);
                let pk = &g.partner;
                w.u8(pk.format.code());
                [pk.rows, pk.cols, pk.degree, pk.fingerprints.len()].into_iter().for_each(|x| w.u32(x as u32));
                pk.fingerprints.iter().for_each(|&f| w.u64(f));
                w.matrix(&g.part0);
                w.matrix(&g.part1);
            }
            Artifact::RgswKeys(k) => {
                w.transpose(&k.transpose);
                w.swk(&k.product);
                w.swk(&k.partner);
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        let kind = r.header()?;
        let out = match kind {
            Kind::SecretKeys => Artifact::SecretKeys(r.list(|r| r.secret())?),
            Kind::Ciphertext => Artifact::Ciphertext(r.ciphertext()?),
            Kind::SwitchingKeys => Artifact::SwitchingKeys(r.list(|r| r.swk())?),
            Kind::Matrix => Artifact::Matrix(r.matrix()?),
            Kind::FormatSwitch => {
                let n = r.u32()? as usize;
                let aux = r.bigint()?;
                let q = r.bigint()?;
                let a = (0..n).map(|_| r.ring()).collect::<Result<Vec<_>>>()?;
                let b = (0..n).map(|_| (0..n).map(|_| r.ring()).collect()).collect::<Result<Vec<_>>>()?;
                Artifact::FormatSwitch(FormatSwitchKey::from_parts(a, b, aux, q)?)
            }
            Kind::Transpose => Artifact::Transpose(r.transpose()?),
            Kind::Matrices => Artifact::Matrices(r.list(|r| r.matrix())?),
            Kind::Rgsw => {
                let aux = r.bigint()?;
                let q = r.bigint()?;
                let format = Format::from_code(r.u8()?)?;
                let (rows, cols, degree) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
                let fingerprints = r.list(|r| r.u64())?;
                let partner = PartnerKey { format, rows, cols, degree, fingerprints };
                let (part0, part1) = (r.matrix()?, r.matrix()?);
                if part0.modulus() != &(&aux * &q) || part1.modulus() != part0.modulus() {
                    return Err(Error::Malformed("RGSW parts are not modulo p·q".into()));
                }
                Artifact::Rgsw(RgswMatrixCT { part0, part1, partner, aux, q })
            }
            Kind::RgswKeys => {
                let transpose = r.transpose()?;
                Artifact::RgswKeys(RgswConversionKeys { transpose, product: r.swk()?, partner: r.swk()? })
            }
        };
        if !r.buf.is_empty() {
            return Err(Error::Malformed(format!("{} trailing bytes", r.buf.len())));
        }
        Ok(out)
    }
}

/// 64-bit fingerprint of serialized bytes.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(Sha256::digest(bytes)[..8].try_into().unwrap())
}

/// Writes `art` and returns the fingerprint of the bytes written.
pub fn write_artifact(path: &Path, art: &Artifact) -> Result<u64> {
    let bytes = art.to_bytes();
    fs::write(path, &bytes)?;
    Ok(fingerprint(&bytes))
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    Artifact::from_bytes(&fs::read(path)?)
}

/// Standalone ring element serialization.
pub fn ring_to_bytes(x: &RingElem) -> Vec<u8> {
    let mut w = Writer::default();
    w.ring(x);
    w.buf
}

pub fn ring_from_bytes(bytes: &[u8]) -> Result<RingElem> {
    let mut r = Reader { buf: bytes };
    let x = r.ring()?;
    if !r.buf.is_empty() {
        return Err(Error::Malformed("trailing bytes after ring element".into()));
    }
    Ok(x)
}

fn width(modulus: &BigInt) -> usize {
    modulus.to_bytes_le().1.len()
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bigint(&mut self, m: &BigInt) {
        let bytes = m.to_bytes_le().1;
        self.u16(bytes.len() as u16);
        self.buf.extend_from_slice(&bytes);
    }

    fn limb(&mut self, c: &BigInt, w: usize) {
        let mut bytes = c.to_signed_bytes_le();
        let fill = if c.sign() == Sign::Minus { 0xff } else { 0 };
        bytes.resize(w, fill);
        self.buf.extend_from_slice(&bytes);
    }

    fn ring(&mut self, x: &RingElem) {
        self.buf.extend_from_slice(MAGIC);
        self.u16(VERSION);
        self.u32(x.degree() as u32);
        self.bigint(x.modulus());
        let w = width(x.modulus());
        x.coeffs().iter().for_each(|c| self.limb(c, w));
    }

    fn secret(&mut self, sk: &SecretKey) {
        let p = RingParams::new(sk.degree(), BigInt::from(3)).expect("key degree is a power of two");
        self.ring(&sk.as_ring(&p));
    }

    fn ciphertext(&mut self, ct: &Ciphertext) {
        self.u64(ct.scale.to_bits());
        self.ring(&ct.a);
        self.ring(&ct.b);
    }

    fn swk(&mut self, k: &SwitchingKey) {
        self.bigint(k.aux());
        self.u64(k.source);
        self.u64(k.target);
        self.ring(&k.a);
        self.ring(&k.b);
    }

    fn transpose(&mut self, t: &TransposeKeySet) {
        match t {
            TransposeKeySet::Full(g) => {
                self.u8(0);
                self.u32(g.len() as u32);
                for (&ell, k) in g.iter() {
                    self.u32(ell as u32);
                    self.swk(k);
                }
            }
            TransposeKeySet::Lightweight(l) => {
                self.u8(1);
                [&l.master5, &l.master_conj, &l.rolling].into_iter().for_each(|k| self.swk(k));
            }
        }
    }

    fn matrix(&mut self, m: &MatrixCT) {
        let (d1, d2) = m.dims();
        self.u8(m.format().code());
        self.u8(match m.orientation() {
            Orientation::Column => 0,
            Orientation::Row => 1,
        });
        self.u32(d1 as u32);
        self.u32(d2 as u32);
        self.bigint(m.modulus());
        self.u32(m.degree as u32);
        self.u32(m.logical_rows as u32);
        self.u64(m.scale.to_bits());
        self.u32(m.a.rows() as u32);
        self.u32(m.a.cols() as u32);
        let w = width(m.modulus());
        for part in [&m.a, &m.b] {
            for j in 0..part.cols() {
                part.column(j).iter().for_each(|c| self.limb(c, w));
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::Malformed(format!("truncated: wanted {n} bytes, {} left", self.buf.len())));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn magic(&mut self) -> Result<()> {
        if self.take(4)? != MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        let v = self.u16()?;
        if v != VERSION {
            return Err(Error::Malformed(format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn header(&mut self) -> Result<Kind> {
        self.magic()?;
        Kind::from_u8(self.u8()?)
    }

    fn bigint(&mut self) -> Result<BigInt> {
        let len = self.u16()? as usize;
        Ok(BigInt::from_bytes_le(Sign::Plus, self.take(len)?))
    }

    fn limbs(&mut self, count: usize, w: usize) -> Result<Vec<BigInt>> {
        (0..count).map(|_| Ok(BigInt::from_signed_bytes_le(self.take(w)?))).collect()
    }

    fn list<T>(&mut self, mut f: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let n = self.u32()?;
        (0..n).map(|_| f(self)).collect()
    }

    fn ring(&mut self) -> Result<RingElem> {
        self.magic()?;
        let n = self.u32()? as usize;
        let m = self.bigint()?;
        let p = RingParams::new(n, m.clone())?;
        let coeffs = self.limbs(n, width(&m))?;
        Ok(RingElem::new(&p, coeffs))
    }

    fn secret(&mut self) -> Result<SecretKey> {
        let x = self.ring()?;
        if x.modulus() != &BigInt::from(3) {
            return Err(Error::Malformed("secret keys are stored modulo 3".into()));
        }
        Ok(SecretKey::from_coeffs(x.to_i64_vec()))
    }

    fn ciphertext(&mut self) -> Result<Ciphertext> {
        let scale = f64::from_bits(self.u64()?);
        let a = self.ring()?;
        let b = self.ring()?;
        if a.params() != b.params() {
            return Err(Error::ParamMismatch("ciphertext parts use different rings".into()));
        }
        Ok(Ciphertext::new(a, b, scale))
    }

    fn swk(&mut self) -> Result<SwitchingKey> {
        let aux = self.bigint()?;
        let source = self.u64()?;
        let target = self.u64()?;
        let a = self.ring()?;
        let b = self.ring()?;
        if aux.sign() != Sign::Plus {
            return Err(Error::Malformed("zero auxiliary modulus".into()));
        }
        let q = a.modulus() / &aux;
        SwitchingKey::from_parts(a, b, aux, q, source, target)
    }

    fn transpose(&mut self) -> Result<TransposeKeySet> {
        match self.u8()? {
            0 => {
                let count = self.u32()?;
                let mut g = GaloisKeys::default();
                for _ in 0..count {
                    let ell = self.u32()? as usize;
                    g.insert(ell, self.swk()?);
                }
                Ok(TransposeKeySet::Full(g))
            }
            1 => Ok(TransposeKeySet::Lightweight(LightweightKeys {
                master5: self.swk()?,
                master_conj: self.swk()?,
                rolling: self.swk()?,
            })),
            v => Err(Error::Malformed(format!("unknown transpose key variant {v}"))),
        }
    }

    fn matrix(&mut self) -> Result<MatrixCT> {
        let format = Format::from_code(self.u8()?)?;
        let orientation = match self.u8()? {
            0 => Orientation::Column,
            1 => Orientation::Row,
            o => return Err(Error::Malformed(format!("unknown orientation {o}"))),
        };
        let d1 = self.u32()? as usize;
        let d2 = self.u32()? as usize;
        let q = self.bigint()?;
        let degree = self.u32()? as usize;
        let logical = self.u32()? as usize;
        let scale = f64::from_bits(self.u64()?);
        let ar = self.u32()? as usize;
        let ac = self.u32()? as usize;
        let w = width(&q);
        let mut part = |rows: usize, cols: usize| -> Result<ModMatrix> {
            let cols: Vec<Vec<BigInt>> = (0..cols).map(|_| self.limbs(rows, w)).collect::<Result<_>>()?;
            Ok(ModMatrix::from_columns(rows, q.clone(), &cols))
        };
        let a = part(ar, ac)?;
        let b = part(d1, d2)?;
        let mut m = MatrixCT::new(FormatTag { format, orientation }, a, b, degree, scale)?;
        if logical > d1 {
            return Err(Error::Malformed(format!("{logical} logical rows exceed {d1}")));
        }
        m.logical_rows = logical;
        Ok(m)
    }
}

/// One file of a key directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub kind: String,
    /// Fingerprint of the file's bytes, hex.
    pub digest: String,
    /// `source → target` fingerprints of the keys inside, hex.
    #[serde(default)]
    pub keys: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u16,
    pub params: String,
    pub lightweight: bool,
    pub transpose_keys: usize,
    pub files: BTreeMap<String, ManifestEntry>,
}

pub fn hex64(x: u64) -> String {
    format!("{x:016x}")
}

impl Manifest {
    pub fn new(params_toml: &str, lightweight: bool) -> Self {
        Manifest {
            version: VERSION,
            params: hex64(fingerprint(params_toml.as_bytes())),
            lightweight,
            transpose_keys: 0,
            files: BTreeMap::new(),
        }
    }

    /// Writes `art` under `dir` and records it.
    pub fn add(&mut self, dir: &Path, name: &str, art: &Artifact) -> Result<()> {
        let digest = write_artifact(&dir.join(name), art)?;
        let keys = match art {
            Artifact::SecretKeys(ks) => ks.iter().map(|k| (hex64(k.fingerprint()), hex64(k.fingerprint()))).collect(),
            Artifact::SwitchingKeys(ks) => ks.iter().map(|k| (hex64(k.source), hex64(k.target))).collect(),
            Artifact::Transpose(TransposeKeySet::Full(g)) => {
                g.iter().map(|(_, k)| (hex64(k.source), hex64(k.target))).collect()
            }
            Artifact::Transpose(TransposeKeySet::Lightweight(l)) => {
                [&l.master5, &l.master_conj, &l.rolling].iter().map(|k| (hex64(k.source), hex64(k.target))).collect()
            }
            _ => Vec::new(),
        };
        if let Artifact::Transpose(t) = art {
            self.transpose_keys = t.len();
        }
        self.files
            .insert(name.to_string(), ManifestEntry { kind: art.kind().name().into(), digest: hex64(digest), keys });
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = toml::to_string(self).map_err(|e| Error::Malformed(e.to_string()))?;
        fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Malformed(e.to_string()))
    }

    /// Re-hashes every listed file under `dir` and the params text.
    pub fn verify(&self, dir: &Path, params_toml: &str) -> Result<()> {
        if hex64(fingerprint(params_toml.as_bytes())) != self.params {
            return Err(Error::ParamMismatch("params file does not match the manifest".into()));
        }
        for (name, e) in &self.files {
            let got = hex64(fingerprint(&fs::read(dir.join(name))?));
            if got != e.digest {
                return Err(Error::Malformed(format!("{name}: digest {got}, manifest says {}", e.digest)));
            }
        }
        Ok(())
    }
}
