mod keydir;
mod matio;
mod run;

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hela::ckks::{key_switch_bound, Params};
use hela::convert::{
    decompose_key, mlwe_matrices_to_rlwe, packing_key_gen, rlwe_matrix_to_mlwe, rlwe_to_rgsw_counted,
    shared_a_matrix_to_shared_s, shared_s_matrix_to_shared_a, shared_s_to_shared_a_bound, transpose_matrix_counted,
};
use hela::formats::{
    build_secret_matrix, decrypt_int, decrypt_matrix, encrypt_padded, format_error, transpose_format, Format, MatrixCT,
    Orientation, PartnerKey, RgswMatrixCT,
};
use hela::modmm::{mod_ppmm_naive, BackendKind, Counters, ModMatrix};
use hela::real::RealMatrix;
use hela::ring::Sampler;
use hela::serial::{read_artifact, write_artifact, Artifact};
use num_traits::ToPrimitive;

use keydir::KeyDir;
use run::{run_trial, Algorithm, Job, Trial};

pub enum CliError {
    /// Bad input, parameters or files; exit code 2.
    Config(String),
    /// A result failed its check; exit code 3.
    Verify(String),
}

impl From<hela::Error> for CliError {
    fn from(e: hela::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "hela", version, about = "Homomorphic matrix products over coefficient-encoded CKKS")]
struct Cli {
    /// Parameter file (TOML) or preset name: desk16, desk64, paperlike.
    #[arg(long, global = true, default_value = "desk16")]
    params: String,
    /// Overrides the sampler seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Modular matrix product backend: naive, s1, s2, s3.
    #[arg(long, global = true, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Three rolling transposition keys instead of N - 1.
    #[arg(long, global = true)]
    lightweight_keys: bool,
    #[command(subcommand)]
    cmd: Command,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: hela::Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    SharedA,
    SharedS,
    Mlwe,
    Rlwe,
    Transpose,
    /// Both RGSW parts from a square column RLWE matrix.
    Rgsw,
}

#[derive(Subcommand)]
enum Command {
    /// Generate secret, switching and transposition keys plus a manifest.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// Number of shared-a target keys, i.e. `d1/N` of convertible matrices.
        #[arg(long, default_value_t = 2)]
        blocks: usize,
    },
    /// Encrypt a CSV matrix.
    Encrypt {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "rlwe")]
        format: String,
        /// Row encoding: encrypt the transpose and relabel.
        #[arg(long)]
        row: bool,
    },
    /// Decrypt a matrix ciphertext to CSV.
    Decrypt {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert between encryption formats and check the result decrypts alike.
    Convert {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        out: PathBuf,
        /// MLWE parts `k` for `--to mlwe`.
        #[arg(long, default_value_t = 2)]
        parts: usize,
    },
    /// Time an algorithm and count backend calls.
    Bench {
        #[arg(long, value_enum)]
        alg: Algorithm,
        /// `d1,d2,d3`.
        #[arg(long, default_value = "16,16,16")]
        dims: String,
        #[arg(long)]
        format: Option<String>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        /// Fail with exit code 3 when the worst precision is below this.
        #[arg(long)]
        floor: Option<f64>,
        /// Noiseless inputs `(0, ⌊ΔM⌉)`.
        #[arg(long)]
        trivial: bool,
        /// Appends to this file instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tsv: bool,
    },
    /// Worst-case precision per algorithm and backend.
    Precision {
        /// Defaults to every algorithm the dimensions admit.
        #[arg(long, value_enum, value_delimiter = ',')]
        alg: Vec<Algorithm>,
        #[arg(long, default_value = "16,16,16")]
        dims: String,
        #[arg(long)]
        format: Option<String>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Overrides the error deviation.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        trivial: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tsv: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Verify(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(3)
        }
    }
}

fn load_params(spec: &str, seed: Option<u64>) -> Result<Params, CliError> {
    let p =
        if Path::new(spec).is_file() { Params::from_toml(&fs::read_to_string(spec)?)? } else { Params::preset(spec)? };
    Ok(match seed {
        Some(s) => p.with_seed(s),
        None => p,
    })
}

fn load_keys(dir: &Path, seed: Option<u64>) -> Result<KeyDir, CliError> {
    let mut kd = KeyDir::load(dir)?;
    if let Some(s) = seed {
        kd.params = kd.params.with_seed(s);
    }
    Ok(kd)
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), CliError> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::Config(format!("bad dimension list {s:?}"))))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok((a, b, c)),
        _ => Err(CliError::Config(format!("expected d1,d2,d3, got {s:?}"))),
    }
}

fn parse_format(s: Option<&str>) -> Result<Option<Format>, CliError> {
    s.map(|f| f.parse::<Format>().map_err(CliError::from)).transpose()
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.cmd {
        Command::Keygen { ref out, blocks } => {
            let params = load_params(&cli.params, cli.seed)?;
            let man = keydir::keygen(&params, out, cli.lightweight_keys, blocks)?;
            println!("wrote {} key files to {}", man.files.len(), out.display());
            println!("transpose_keys={}", man.transpose_keys);
            Ok(())
        }
        Command::Encrypt { ref keys, ref input, ref out, ref format, row } => {
            let kd = load_keys(keys, cli.seed)?;
            let format: Format = format.parse()?;
            let m = matio::read_matrix(input)?;
            let m = if row { m.transpose() } else { m };
            let rows = format.padded_rows(m.rows(), kd.params.degree)?;
            let sk = kd.keys_for(format, rows)?;
            let mut s = Sampler::new(kd.params.sampler);
            let ct = encrypt_padded(&sk, &m, format, &kd.params, &mut s)?;
            let ct = if row { transpose_format(&ct) } else { ct };
            write_artifact(out, &Artifact::Matrix(ct))?;
            Ok(())
        }
        Command::Decrypt { ref keys, ref input, ref out } => {
            let kd = load_keys(keys, cli.seed)?;
            let m = decrypt_any(&kd, &read_artifact(input)?)?;
            matio::write_matrix(out.as_deref(), &m)
        }
        Command::Convert { ref keys, ref input, to, ref out, parts } => {
            let kd = load_keys(keys, cli.seed)?;
            convert(&kd, &read_artifact(input)?, to, out, parts)
        }
        Command::Bench { alg, ref dims, ref format, trials, floor, trivial, ref out, tsv } => {
            let params = load_params(&cli.params, cli.seed)?;
            let job = Job {
                alg,
                format: parse_format(format.as_deref())?,
                dims: parse_dims(dims)?,
                backend: cli.backend.unwrap_or(BackendKind::S1),
                s2_on_a: false,
                trivial,
                lightweight: cli.lightweight_keys,
            };
            bench(&params, &job, trials, floor, out.as_deref(), tsv)
        }
        Command::Precision { ref alg, ref dims, ref format, trials, sigma, trivial, ref out, tsv } => {
            let mut params = load_params(&cli.params, cli.seed)?;
            if let Some(s) = sigma {
                params = params.with_sigma(s);
            }
            let dims = parse_dims(dims)?;
            let n = params.degree;
            let algs = if !alg.is_empty() {
                alg.clone()
            } else if dims == (n, n, n) {
                vec![Algorithm::Cpmm, Algorithm::Precomp, Algorithm::Ccmm, Algorithm::Gsw, Algorithm::PcmmT]
            } else {
                vec![Algorithm::Cpmm, Algorithm::Precomp, Algorithm::Gsw]
            };
            let backends = match cli.backend {
                Some(b) => vec![b],
                None => vec![BackendKind::Naive, BackendKind::S1, BackendKind::S2, BackendKind::S3],
            };
            let base = Job {
                alg: algs[0],
                format: parse_format(format.as_deref())?,
                dims,
                backend: backends[0],
                s2_on_a: false,
                trivial,
                lightweight: cli.lightweight_keys,
            };
            precision(&params, &base, &algs, &backends, trials, out.as_deref(), tsv)
        }
    }
}

/// Rows of `parts[j]` are rows `j, j + k, …` of the whole.
fn interleave(parts: &[RealMatrix]) -> RealMatrix {
    let k = parts.len();
    let (r, c) = parts[0].shape();
    RealMatrix::from_fn(r * k, c, |i, j| parts[i % k].get(i / k, j))
}

fn mlwe_parts_decrypt(kd: &KeyDir, parts: &[MatrixCT]) -> Result<RealMatrix, CliError> {
    let keys = decompose_key(&kd.sk, parts.len())?;
    let dec = parts.iter().map(|p| decrypt_matrix(&keys, p)).collect::<hela::Result<Vec<_>>>()?;
    if dec.iter().any(|d| d.shape() != dec[0].shape()) {
        return Err(CliError::Config("MLWE parts differ in shape".into()));
    }
    Ok(interleave(&dec))
}

fn decrypt_any(kd: &KeyDir, art: &Artifact) -> Result<RealMatrix, CliError> {
    match art {
        Artifact::Matrix(ct) => Ok(decrypt_matrix(&kd.keys_for(ct.format(), ct.dims().0)?, ct)?),
        Artifact::Matrices(parts) if !parts.is_empty() => mlwe_parts_decrypt(kd, parts),
        Artifact::Rgsw(g) => Ok(decrypt_matrix(std::slice::from_ref(&kd.sk), &g.part0)?),
        a => Err(CliError::Config(format!("cannot decrypt a {} file", a.kind().name()))),
    }
}

fn report(counters: &Counters, err: f64, tol: f64) -> Result<(), CliError> {
    println!(
        "key_switches={} ring_ops={} transposes={} mod_calls={}",
        counters.key_switches(),
        counters.ring_ops(),
        counters.transposes(),
        counters.mod_calls()
    );
    println!("max_error={err:e} tolerance={tol:e}");
    if err <= tol {
        Ok(())
    } else {
        Err(CliError::Verify(format!("round-trip error {err:e} exceeds {tol:e}")))
    }
}

fn convert(kd: &KeyDir, art: &Artifact, to: Target, out: &Path, parts: usize) -> Result<(), CliError> {
    let p = &kd.params;
    let n = p.degree;
    let eb = p.error_bound();
    let counters = Counters::default();
    let target = to.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let no_path = |from: &str| CliError::Config(format!("no conversion from {from} to {target}"));
    let ct = match art {
        Artifact::Matrix(ct) => Some(ct),
        _ => None,
    };
    match (to, ct) {
        (Target::SharedA, Some(ct)) if ct.format() == Format::SharedS => {
            let before = decrypt_matrix(std::slice::from_ref(&kd.sk), ct)?;
            let res = shared_s_matrix_to_shared_a(ct, &kd.fmt, &counters)?;
            let after = decrypt_matrix(&kd.shared_a, &res)?;
            let l1 = kd.shared_a.iter().map(|k| k.l1()).max().unwrap_or(0);
            let tol = shared_s_to_shared_a_bound(l1, n, kd.fmt.n(), eb, ct.modulus(), &p.aux_big) / ct.scale;
            write_artifact(out, &Artifact::Matrix(res))?;
            report(&counters, after.dist(&before), tol)
        }
        (Target::SharedS, Some(ct)) if ct.format() == Format::SharedA => {
            let before = decrypt_matrix(&kd.shared_a, ct)?;
            let res = shared_a_matrix_to_shared_s(ct, &kd.back, &counters)?;
            let after = decrypt_matrix(std::slice::from_ref(&kd.sk), &res)?;
            let tol = key_switch_bound(kd.sk.l1(), eb, n, ct.modulus(), &p.aux_big) / ct.scale;
            write_artifact(out, &Artifact::Matrix(res))?;
            report(&counters, after.dist(&before), tol)
        }
        (Target::Mlwe, Some(ct)) if ct.format() == Format::Rlwe => {
            let res = rlwe_matrix_to_mlwe(ct, parts)?;
            let whole = decrypt_int(std::slice::from_ref(&kd.sk), ct)?;
            let keys = decompose_key(&kd.sk, parts)?;
            for (j, part) in res.iter().enumerate() {
                let got = decrypt_int(&keys, part)?;
                if (0..n / parts).any(|r| got.row(r) != whole.row(r * parts + j)) {
                    return Err(CliError::Verify(format!("MLWE part {j} does not match its rows")));
                }
            }
            write_artifact(out, &Artifact::Matrices(res))?;
            report(&counters, 0.0, 0.0)
        }
        (Target::Rlwe, None) => {
            let Artifact::Matrices(ms) = art else { return Err(no_path(art.kind().name())) };
            let k = ms.len();
            let comps = decompose_key(&kd.sk, k)?;
            let mut s = Sampler::new(p.sampler);
            let pk = packing_key_gen(&comps, &kd.sk, k, &p.aux_big, ms[0].modulus(), &mut s)?;
            let before = mlwe_parts_decrypt(kd, ms)?;
            let res = mlwe_matrices_to_rlwe(ms, &pk)?;
            counters.add_key_switch(k * ms[0].dims().1);
            let after = decrypt_matrix(std::slice::from_ref(&kd.sk), &res)?;
            let tol = k as f64 * key_switch_bound(kd.sk.l1(), eb, n, ms[0].modulus(), &p.aux_big) / ms[0].scale;
            write_artifact(out, &Artifact::Matrix(res))?;
            report(&counters, after.dist(&before), tol)
        }
        (Target::Transpose, Some(ct)) if ct.format() == Format::Rlwe => {
            let before = decrypt_matrix(std::slice::from_ref(&kd.sk), ct)?;
            let res = transpose_matrix_counted(ct, &kd.transpose, &counters)?;
            let after = decrypt_matrix(std::slice::from_ref(&kd.sk), &res)?;
            let tol = 16.0 * before.max_abs().max(1.0) / ct.scale;
            write_artifact(out, &Artifact::Matrix(res))?;
            report(&counters, after.dist(&before), tol)
        }
        (Target::Rgsw, Some(ct))
            if ct.format() == Format::Rlwe && ct.orientation() == Orientation::Column && ct.dims() == (n, n) =>
        {
            let sk = std::slice::from_ref(&kd.sk);
            let aux = &p.aux_small;
            let pq = aux * ct.modulus();
            let lift = |m: &ModMatrix| m.with_modulus(&pq).scalar_mul(aux);
            // p·(A, B) modulo p·q encrypts p·⌊ΔM⌉ with the noise scaled by p
            let mut first = ct.with_parts(lift(&ct.a), lift(&ct.b))?;
            first.scale = ct.scale * aux.to_f64().unwrap_or(f64::INFINITY);
            let part1 = rlwe_to_rgsw_counted(&first, &kd.rgsw, &counters)?;
            let own = build_secret_matrix(sk, Format::Rlwe, n, n, n, &pq)?;
            let partner = build_secret_matrix(sk, Format::Rlwe, n, 1, n, &pq)?;
            let p0 = lift(&decrypt_int(sk, ct)?);
            let p1 = mod_ppmm_naive(&p0, &partner.dense(&pq))?;
            let err = format_error(&own, &part1, &p1)?.to_f64().unwrap_or(f64::INFINITY);
            // two transpositions and two key switches, each within the key-switch bound per column
            let tol = 4.0 * n as f64 * key_switch_bound(kd.sk.l1(), eb, n, &pq, kd.rgsw.product.aux());
            let g = RgswMatrixCT {
                part0: first,
                part1,
                partner: PartnerKey::of(&partner),
                aux: aux.clone(),
                q: ct.modulus().clone(),
            };
            let scale = g.part1.scale;
            write_artifact(out, &Artifact::Rgsw(g))?;
            report(&counters, err / scale, tol / scale)
        }
        (_, Some(ct)) => Err(no_path(&ct.format().to_string())),
        (_, None) => Err(no_path(art.kind().name())),
    }
}

const BENCH_TAG: &str = "# hela-bench v1";
const BENCH_COLUMNS: [&str; 10] =
    ["trial", "algorithm", "format", "backend", "d1", "d2", "d3", "seconds", "calls", "precision_bits"];
const PRECISION_TAG: &str = "# hela-precision v1";
const PRECISION_COLUMNS: [&str; 11] =
    ["algorithm", "format", "backend", "s2_on_a", "d1", "d2", "d3", "trials", "worst_bits", "mean_seconds", "calls"];

/// CSV sink with a version line and header. An existing file is appended to
/// when its first two lines match, and refused otherwise.
fn table(out: Option<&Path>, tag: &str, columns: &[&str], tsv: bool) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let delim = if tsv { b'\t' } else { b',' };
    let header = columns.join(if tsv { "\t" } else { "," });
    let mut fresh = true;
    let mut sink: Box<dyn Write> = match out {
        None => Box::new(std::io::stdout().lock()),
        Some(p) => {
            if p.exists() && fs::metadata(p)?.len() > 0 {
                let mut lines = BufReader::new(fs::File::open(p)?).lines();
                let first = lines.next().transpose()?.unwrap_or_default();
                let second = lines.next().transpose()?.unwrap_or_default();
                if first != tag || second != header {
                    return Err(CliError::Config(format!("{} has a different schema", p.display())));
                }
                fresh = false;
            }
            Box::new(OpenOptions::new().create(true).append(true).open(p)?)
        }
    };
    if fresh {
        writeln!(sink, "{tag}")?;
    }
    let mut w = csv::WriterBuilder::new().delimiter(delim).has_headers(false).from_writer(sink);
    if fresh {
        w.write_record(columns)?;
    }
    Ok(w)
}

fn fmt_bits(b: f64) -> String {
    if b.is_infinite() {
        "inf".into()
    } else {
        format!("{b:.3}")
    }
}

fn trials(params: &Params, job: &Job, count: usize) -> Result<Vec<Trial>, CliError> {
    if count == 0 {
        return Err(CliError::Config("--trials must be positive".into()));
    }
    let seed = params.sampler.seed;
    (0..count).map(|t| run_trial(job, params, seed.wrapping_add(t as u64)).map_err(CliError::from)).collect()
}

fn bench(
    params: &Params,
    job: &Job,
    count: usize,
    floor: Option<f64>,
    out: Option<&Path>,
    tsv: bool,
) -> Result<(), CliError> {
    let runs = trials(params, job, count)?;
    let mut w = table(out, BENCH_TAG, &BENCH_COLUMNS, tsv)?;
    let (d1, d2, d3) = job.dims;
    let row = |trial: String, t: &Trial| {
        vec![
            trial,
            job.alg.name().to_string(),
            t.format.to_string(),
            job.backend.to_string(),
            d1.to_string(),
            d2.to_string(),
            d3.to_string(),
            format!("{:.6}", t.seconds),
            t.calls.to_string(),
            fmt_bits(t.bits),
        ]
    };
    for (i, t) in runs.iter().enumerate() {
        w.write_record(row(i.to_string(), t))?;
    }
    let summary = Trial {
        format: runs[0].format,
        seconds: runs.iter().map(|t| t.seconds).sum::<f64>() / runs.len() as f64,
        calls: runs.iter().map(|t| t.calls).max().unwrap_or(0),
        bits: runs.iter().map(|t| t.bits).fold(f64::INFINITY, f64::min),
    };
    w.write_record(row("all".into(), &summary))?;
    w.flush()?;
    if let Some(bad) = runs.iter().find(|t| t.calls != job.alg.expected_calls()) {
        return Err(CliError::Verify(format!(
            "{} made {} backend calls, expected {}",
            job.alg.name(),
            bad.calls,
            job.alg.expected_calls()
        )));
    }
    match floor {
        Some(f) if summary.bits < f => {
            Err(CliError::Verify(format!("worst precision {:.3} bits below {f}", summary.bits)))
        }
        _ => Ok(()),
    }
}

fn precision(
    params: &Params,
    base: &Job,
    algs: &[Algorithm],
    backends: &[BackendKind],
    count: usize,
    out: Option<&Path>,
    tsv: bool,
) -> Result<(), CliError> {
    let mut w = table(out, PRECISION_TAG, &PRECISION_COLUMNS, tsv)?;
    let (d1, d2, d3) = base.dims;
    for &alg in algs {
        let mut jobs: Vec<Job> = backends.iter().map(|&b| Job { alg, backend: b, ..base.clone() }).collect();
        if alg == Algorithm::Cpmm && backends.contains(&BackendKind::S2) {
            jobs.push(Job { alg, backend: BackendKind::S2, s2_on_a: true, ..base.clone() });
        }
        let mut s2_bits = [None, None];
        for job in &jobs {
            let runs = trials(params, job, count)?;
            let worst = runs.iter().map(|t| t.bits).fold(f64::INFINITY, f64::min);
            let secs = runs.iter().map(|t| t.seconds).sum::<f64>() / runs.len() as f64;
            if job.backend == BackendKind::S2 {
                s2_bits[job.s2_on_a as usize] = Some(worst);
            }
            w.write_record([
                alg.name().to_string(),
                runs[0].format.to_string(),
                job.backend.to_string(),
                job.s2_on_a.to_string(),
                d1.to_string(),
                d2.to_string(),
                d3.to_string(),
                count.to_string(),
                fmt_bits(worst),
                format!("{secs:.6}"),
                runs[0].calls.to_string(),
            ])?;
        }
        if let [Some(b), Some(a)] = s2_bits {
            eprintln!("{}: truncating the A-part products too costs {:.3} bits", alg.name(), b - a);
        }
    }
    w.flush()?;
    Ok(())
}
