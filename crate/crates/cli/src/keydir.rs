use std::fs;
use std::path::Path;

use hela::ckks::{Params, SecretKey, SwitchingKey};
use hela::convert::{
    back_switch_keys, decompose_key, fmt_swk_gen, rgsw_conversion_keys, FormatSwitchKey, RgswConversionKeys,
    TransposeKeySet,
};
use hela::formats::Format;
use hela::linalg::CcmmKeys;
use hela::ring::Sampler;
use hela::serial::{read_artifact, Artifact, Manifest};

use crate::CliError;

pub const PARAMS: &str = "params.toml";
pub const MANIFEST: &str = "manifest.toml";
const SK: &str = "sk.bin";
const SHARED_A: &str = "sk-shared-a.bin";
const RELIN: &str = "relin.bin";
const TRANSPOSE: &str = "transpose.bin";
const FMT: &str = "fmt-swk.bin";
const BACK: &str = "back-swk.bin";
const RGSW: &str = "rgsw-keys.bin";

/// What the conversion commands need from a key directory. The
/// relinearization key is covered by the manifest digests only.
pub struct KeyDir {
    pub params: Params,
    pub sk: SecretKey,
    /// Targets of the shared-s to shared-a conversion, one per block.
    pub shared_a: Vec<SecretKey>,
    pub transpose: TransposeKeySet,
    pub fmt: FormatSwitchKey,
    pub back: Vec<SwitchingKey>,
    /// RLWE to RGSW conversion modulo `p·q`, with `sk` as its own partner.
    pub rgsw: RgswConversionKeys,
}

pub fn keygen(params: &Params, dir: &Path, lightweight: bool, blocks: usize) -> Result<Manifest, CliError> {
    if blocks == 0 {
        return Err(CliError::Config("--blocks must be positive".into()));
    }
    fs::create_dir_all(dir)?;
    let n = params.degree;
    let q = params.q();
    let aux = &params.aux_big;
    let mut s = Sampler::new(params.sampler);
    let sk = SecretKey::generate(n, &mut s)?;
    let targets = (0..blocks).map(|_| SecretKey::generate(n, &mut s)).collect::<hela::Result<Vec<_>>>()?;
    let ccmm = CcmmKeys::generate(&sk, aux, &q, lightweight, &mut s);
    let fmt = fmt_swk_gen(&sk, &targets, aux, &q, &mut s)?;
    let back = back_switch_keys(&sk, &targets, aux, &q, &mut s);
    let rgsw = rgsw_conversion_keys(&sk, &sk, &params.aux_small, &q, lightweight, &mut s)?;

    let text = params.to_toml();
    fs::write(dir.join(PARAMS), &text)?;
    let mut man = Manifest::new(&text, lightweight);
    man.add(dir, SK, &Artifact::SecretKeys(vec![sk]))?;
    man.add(dir, SHARED_A, &Artifact::SecretKeys(targets))?;
    man.add(dir, RELIN, &Artifact::SwitchingKeys(vec![ccmm.relin]))?;
    man.add(dir, TRANSPOSE, &Artifact::Transpose(ccmm.transpose))?;
    man.add(dir, FMT, &Artifact::FormatSwitch(fmt))?;
    man.add(dir, BACK, &Artifact::SwitchingKeys(back))?;
    man.add(dir, RGSW, &Artifact::RgswKeys(rgsw))?;
    man.save(&dir.join(MANIFEST))?;
    Ok(man)
}

fn mismatch(name: &str) -> CliError {
    CliError::Config(format!("{name} holds the wrong kind of artifact"))
}

fn secret_keys(dir: &Path, name: &str) -> Result<Vec<SecretKey>, CliError> {
    match read_artifact(&dir.join(name))? {
        Artifact::SecretKeys(k) if !k.is_empty() => Ok(k),
        _ => Err(mismatch(name)),
    }
}

fn switching_keys(dir: &Path, name: &str) -> Result<Vec<SwitchingKey>, CliError> {
    match read_artifact(&dir.join(name))? {
        Artifact::SwitchingKeys(k) if !k.is_empty() => Ok(k),
        _ => Err(mismatch(name)),
    }
}

impl KeyDir {
    /// Loads a key directory after checking every digest in its manifest.
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(dir.join(PARAMS))?;
        let params = Params::from_toml(&text)?;
        let man = Manifest::load(&dir.join(MANIFEST))?;
        man.verify(dir, &text).map_err(|e| CliError::Verify(e.to_string()))?;
        let transpose = match read_artifact(&dir.join(TRANSPOSE))? {
            Artifact::Transpose(t) => t,
            _ => return Err(mismatch(TRANSPOSE)),
        };
        let fmt = match read_artifact(&dir.join(FMT))? {
            Artifact::FormatSwitch(f) => f,
            _ => return Err(mismatch(FMT)),
        };
        let rgsw = match read_artifact(&dir.join(RGSW))? {
            Artifact::RgswKeys(k) => k,
            _ => return Err(mismatch(RGSW)),
        };
        Ok(KeyDir {
            sk: secret_keys(dir, SK)?.remove(0),
            shared_a: secret_keys(dir, SHARED_A)?,
            back: switching_keys(dir, BACK)?,
            params,
            transpose,
            fmt,
            rgsw,
        })
    }

    /// Secret keys for a ciphertext of `format` with `rows` (padded) rows.
    pub fn keys_for(&self, format: Format, rows: usize) -> Result<Vec<SecretKey>, CliError> {
        let n = self.params.degree;
        match format {
            Format::Rlwe | Format::SharedS => Ok(vec![self.sk.clone()]),
            Format::SharedA if rows / n == self.shared_a.len() => Ok(self.shared_a.clone()),
            Format::SharedA => Err(CliError::Config(format!(
                "shared-a with {} blocks; the key directory has {} (keygen --blocks)",
                rows / n,
                self.shared_a.len()
            ))),
            Format::Mlwe => Ok(decompose_key(&self.sk, n / rows)?),
            f => Err(CliError::Config(format!("no stored keys for {f}"))),
        }
    }
}
