//! `mcnie`: key generation, encryption, parameter audits and failure-rate
//! simulation from the command line.
//!
//! Exit codes: 0 success, 1 rejected ciphertext or decoding failure,
//! 2 invalid input, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use mcnie::cca::{self, CcaError, ConversionConfig, WrappedCiphertext};
use mcnie::codec::{self, CodecError};
use mcnie::lrpc::DecoderVariant;
use mcnie::params::{validate_params, NamedSet, ParamSet};
use mcnie::pke::{self, DecryptError, PrivateKey, PublicKey};
use mcnie::secest;
use mcnie::sim::{self, DecoderSimConfig, Z99};

#[derive(Parser)]
#[command(name = "mcnie", version, about = "McNie public-key encryption over rank-metric LRPC codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair.
    Keygen {
        /// Named set, `custom:n=..,m=..,nk=..,d=..,r=..,variant=..`, or a file stem in $MCNIE_PARAM_DIR.
        #[arg(long)]
        param: String,
        /// Hex seed of up to 32 bytes; random when absent.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        out_pub: PathBuf,
        #[arg(long)]
        out_priv: PathBuf,
    },
    /// Raw encryption of l field elements (testing only; prefer cca-encrypt).
    Encrypt {
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Raw decryption.
    Decrypt {
        #[arg(long = "priv")]
        private: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt an arbitrary byte string under the CCA2 conversion.
    CcaEncrypt {
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Decrypt a CCA2-wrapped ciphertext.
    CcaDecrypt {
        #[arg(long = "priv")]
        private: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate attack costs; exits 0 only when the target is met.
    Audit {
        #[arg(long)]
        param: String,
        /// Defaults to the named set's level, else 128.
        #[arg(long)]
        target_bits: Option<f64>,
        /// Count the reduced c1 instance in the minimum.
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        include_reduced: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Monte Carlo failure-rate estimate.
    Simulate {
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value = "00")]
        seed: String,
        #[arg(long, value_enum, default_value_t = Mode::Pke)]
        mode: Mode,
        /// Fresh key pair every this many trials (pke mode).
        #[arg(long, default_value_t = 100)]
        trials_per_key: usize,
        #[arg(long, value_enum, default_value_t = Decoder::K)]
        decoder: Decoder,
    },
    /// List the named parameter sets.
    Params,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// keygen, encrypt, decrypt
    Pke,
    /// plant an error against a fresh LRPC code and decode its syndrome
    Decoder,
}

#[derive(Clone, Copy, ValueEnum)]
enum Decoder {
    A,
    K,
}

enum Failure {
    Reject(String),
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Reject(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Reject(m) | Failure::Invalid(m) | Failure::Io(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("writing {}: {e}", path.display())))
}

fn parse_seed(hex_seed: &str) -> Result<[u8; 32], Failure> {
    let bytes = hex::decode(hex_seed).map_err(|e| invalid(format!("seed: {e}")))?;
    if bytes.len() > 32 {
        return Err(invalid("seed is longer than 32 bytes"));
    }
    let mut seed = [0u8; 32];
    seed[..bytes.len()].copy_from_slice(&bytes);
    Ok(seed)
}

fn make_rng(seed: Option<&str>) -> Result<ChaCha20Rng, Failure> {
    Ok(match seed {
        Some(s) => ChaCha20Rng::from_seed(parse_seed(s)?),
        None => ChaCha20Rng::from_entropy(),
    })
}

/// Resolves a parameter spec and rejects sets with structural violations.
fn load_params(spec: &str) -> Result<ParamSet, Failure> {
    let p = ParamSet::resolve(spec).map_err(invalid)?;
    let report = validate_params(&p);
    for a in &report.advisories {
        eprintln!("warning: {a}");
    }
    if !report.is_valid() {
        return Err(Failure::Invalid(format!(
            "invalid parameters {}:\n  {}",
            p.name,
            report.violations.join("\n  ")
        )));
    }
    Ok(p)
}

fn load_public(path: &Path) -> Result<PublicKey, Failure> {
    codec::deserialize_public(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn load_private(path: &Path) -> Result<PrivateKey, Failure> {
    codec::deserialize_private(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn keygen(param: &str, seed: Option<&str>, out_pub: &Path, out_priv: &Path) -> Outcome {
    let p = load_params(param)?;
    let mut rng = make_rng(seed)?;
    let kp = pke::keygen(&p, &mut rng).map_err(invalid)?;
    let public = codec::serialize_public(&kp.public);
    let private = codec::serialize_private(&kp.private);
    write(out_pub, &public)?;
    write(out_priv, &private)?;
    println!("parameters: {p}");
    println!("public key: {} bytes", codec::public_payload(&kp.public).len());
    println!("public key file: {} bytes", public.len());
    println!("private key file: {} bytes", private.len());
    Ok(())
}

fn encrypt(public: &Path, input: &Path, out: &Path, seed: Option<&str>) -> Outcome {
    let pk = load_public(public)?;
    let mut bytes = read(input)?;
    let field = pk.field();
    let p = pk.params().clone();
    let want = p.l * field.byte_len();
    if bytes.len() > want {
        return Err(invalid(format!(
            "message is {} bytes; raw mode takes at most {want} ({} elements of {} bytes)",
            bytes.len(),
            p.l,
            field.byte_len()
        )));
    }
    if bytes.len() < want {
        eprintln!(
            "warning: message of {} bytes zero-padded to {want} bytes ({} field elements); use cca-encrypt for real data",
            bytes.len(),
            p.l
        );
        bytes.resize(want, 0);
    }
    let msg = codec::elements_from_bytes(&field, &bytes).map_err(|e| invalid(format!("message: {e}")))?;
    let mut rng = make_rng(seed)?;
    let ct = pke::encrypt(&pk, &msg, &mut rng).map_err(invalid)?;
    write(out, &codec::serialize_ciphertext(&p, &ct))
}

fn decrypt(private: &Path, input: &Path, out: &Path) -> Outcome {
    let sk = load_private(private)?;
    let (p, ct) = codec::deserialize_ciphertext(&read(input)?).map_err(|e: CodecError| invalid(format!("ciphertext: {e}")))?;
    if &p != sk.params() {
        return Err(invalid("ciphertext and key use different parameter sets"));
    }
    let msg = pke::decrypt(&sk, &ct).map_err(|e| match e {
        DecryptError::Shape { .. } => invalid(e),
        _ => Failure::Reject(format!("decryption failed: {e}")),
    })?;
    write(out, &codec::elements_to_bytes(&sk.public().field(), &msg))
}

fn cca_encrypt(public: &Path, input: &Path, out: &Path, seed: Option<&str>) -> Outcome {
    let pk = load_public(public)?;
    let msg = read(input)?;
    let cfg = ConversionConfig::new(pk.params().clone()).map_err(invalid)?;
    let mut rng = make_rng(seed)?;
    let wrapped = cca::cca_encrypt(&cfg, &pk, &msg, &mut rng).map_err(invalid)?;
    write(out, &wrapped.to_bytes(pk.params()))
}

fn cca_decrypt(private: &Path, input: &Path, out: &Path) -> Outcome {
    let sk = load_private(private)?;
    let (p, wrapped) = WrappedCiphertext::from_bytes(&read(input)?).map_err(invalid)?;
    if &p != sk.params() {
        return Err(invalid("ciphertext and key use different parameter sets"));
    }
    let cfg = ConversionConfig::new(p).map_err(invalid)?;
    let msg = cca::cca_decrypt(&cfg, &sk, &wrapped).map_err(|e| match e {
        CcaError::Reject => Failure::Reject("ciphertext rejected".into()),
        other => invalid(other),
    })?;
    write(out, &msg)
}

fn audit(param: &str, target: Option<f64>, include_reduced: bool, format: Format) -> Outcome {
    // structural violations are reported by the audit itself
    let p = ParamSet::resolve(param).map_err(invalid)?;
    let target = target
        .or_else(|| NamedSet::by_name(&p.name).map(|s| f64::from(s.security_bits)))
        .unwrap_or(128.0);
    let report = secest::audit(&p, target, include_reduced);
    match format {
        Format::Text => println!("{report}"),
        Format::Kv => print!("{}", report.to_key_values()),
    }
    if !report.structure.is_valid() {
        Err(Failure::Invalid("parameter set violates structural constraints".into()))
    } else if report.passes() {
        Ok(())
    } else {
        Err(Failure::Reject(format!(
            "estimated security {:.2} bits is below the {target}-bit target",
            report.minimum
        )))
    }
}

fn simulate(param: &str, trials: usize, seed: &str, mode: Mode, per_key: usize, decoder: Decoder) -> Outcome {
    if trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    let p = load_params(param)?;
    let bytes = parse_seed(seed)?;
    let seed = u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes"));
    let report = match mode {
        Mode::Pke => sim::simulate_pke(&p, trials, per_key, seed).map_err(invalid)?,
        Mode::Decoder => {
            let cfg = DecoderSimConfig {
                m: p.m,
                n: p.n,
                nk: p.nk(),
                d: p.d,
                r: p.r,
                structure: p.variant.code_structure(),
                variant: match decoder {
                    Decoder::A => DecoderVariant::A,
                    Decoder::K => DecoderVariant::K,
                },
            };
            sim::simulate_decoder(&cfg, trials, seed).map_err(invalid)?
        }
    };
    println!("params = {}", p.name);
    println!("{report}");
    let (lo, hi) = report.interval(Z99);
    if let Some(pred) = report.predicted() {
        let verdict = if (lo..=hi).contains(&pred) { "inside" } else { "outside" };
        println!("prediction {verdict} the 99% interval");
    }
    Ok(())
}

fn params() -> Outcome {
    println!(
        "{:<3} {:<8} {:<8} {:>4} {:>4} {:>4} {:>4} {:>2} {:>3} {:>4} {:>9} {:>7} {:>6}",
        "id", "name", "variant", "n", "l", "k", "n-k", "d", "r", "m", "pk bytes", "log2 pf", "level"
    );
    for s in NamedSet::all() {
        println!(
            "{:<3} {:<8} {:<8} {:>4} {:>4} {:>4} {:>4} {:>2} {:>3} {:>4} {:>9} {:>7} {:>6}",
            s.id,
            s.name,
            s.variant.to_string(),
            s.n,
            s.l,
            s.k,
            s.n - s.k,
            s.d,
            s.r,
            s.m,
            s.public_key_bytes,
            s.table_failure_exponent,
            s.security_bits
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Keygen {
            param,
            seed,
            out_pub,
            out_priv,
        } => keygen(&param, seed.as_deref(), &out_pub, &out_priv),
        Command::Encrypt {
            public,
            input,
            out,
            seed,
        } => encrypt(&public, &input, &out, seed.as_deref()),
        Command::Decrypt { private, input, out } => decrypt(&private, &input, &out),
        Command::CcaEncrypt {
            public,
            input,
            out,
            seed,
        } => cca_encrypt(&public, &input, &out, seed.as_deref()),
        Command::CcaDecrypt { private, input, out } => cca_decrypt(&private, &input, &out),
        Command::Audit {
            param,
            target_bits,
            include_reduced,
            format,
        } => audit(&param, target_bits, include_reduced, format),
        Command::Simulate {
            param,
            trials,
            seed,
            mode,
            trials_per_key,
            decoder,
        } => simulate(&param, trials, &seed, mode, trials_per_key, decoder),
        Command::Params => params(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
