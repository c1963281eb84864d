//! Monte Carlo estimation of decoding failure rates.
//!
//! Every trial draws from its own ChaCha20 stream (`set_stream(trial)`), so a
//! run is reproducible from its seed and independent of the thread count.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::galois::{sample_error, FieldElement, Gf2m, Subspace};
use crate::lrpc::{failure_exponent, CodeStructure, DecodeFailure, DecodeOutcome, DecoderVariant, LrpcCode, LrpcError};
use crate::params::ParamSet;
use crate::pke::{self, DecryptError, PkeError};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Attempts at drawing a decodable code before a trial gives up.
const CODE_ATTEMPTS: usize = 64;

/// Stream offset for key generation in [`simulate_pke`].
const KEY_STREAM: u64 = 1 << 63;

/// Wilson score interval for `failures` out of `trials` at quantile `z`.
pub fn wilson_interval(failures: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub trials: usize,
    pub failures: usize,
    /// Failure counts keyed by cause.
    pub causes: BTreeMap<&'static str, usize>,
    /// `n-k+1-rd`, when `rd <= n-k`.
    pub exponent: Option<usize>,
    pub seed: u64,
}

impl SimReport {
    fn from_outcomes(outcomes: Vec<Option<&'static str>>, exponent: Option<usize>, seed: u64) -> Self {
        let mut causes = BTreeMap::new();
        for c in outcomes.iter().flatten() {
            *causes.entry(*c).or_insert(0) += 1;
        }
        SimReport {
            trials: outcomes.len(),
            failures: outcomes.iter().filter(|o| o.is_some()).count(),
            causes,
            exponent,
            seed,
        }
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    /// Predicted failure probability `2^-exponent`.
    pub fn predicted(&self) -> Option<f64> {
        self.exponent.map(|e| 2f64.powi(-(e as i32)))
    }

    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.failures, self.trials, z)
    }

    /// Whether the observed rate lies in `[p/2, 2p]`.
    pub fn within_factor_two(&self) -> bool {
        match self.predicted() {
            Some(p) => (p / 2.0..=2.0 * p).contains(&self.rate()),
            None => false,
        }
    }
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "failures = {}", self.failures)?;
        writeln!(f, "rate = {:.6}", self.rate())?;
        match (self.exponent, self.predicted()) {
            (Some(e), Some(p)) => {
                writeln!(f, "predicted = {p:.6}")?;
                writeln!(f, "exponent = {e}")?;
            }
            _ => writeln!(f, "predicted = none (rd > n-k)")?,
        }
        let (lo, hi) = self.interval(Z99);
        writeln!(f, "ci99 = [{lo:.6}, {hi:.6}]")?;
        for (cause, count) in &self.causes {
            writeln!(f, "cause.{cause} = {count}")?;
        }
        write!(f, "seed = {}", self.seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderSimConfig {
    pub m: u32,
    pub n: usize,
    pub nk: usize,
    pub d: usize,
    pub r: usize,
    pub structure: CodeStructure,
    pub variant: DecoderVariant,
}

fn failure_name(f: DecodeFailure) -> &'static str {
    match f {
        DecodeFailure::ProductSpaceDeficient => "product_space",
        DecodeFailure::SupportTooLarge => "support_too_large",
        DecodeFailure::SystemSingular => "system_singular",
        DecodeFailure::Inconsistent => "inconsistent",
    }
}

fn stream(seed: u64, s: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

fn planted_error(field: &Gf2m, n: usize, r: usize, rng: &mut ChaCha20Rng) -> Result<Vec<FieldElement>, LrpcError> {
    if r == 0 {
        return Ok(vec![FieldElement::ZERO; n]);
    }
    let support = Subspace::sample(field, r, rng)?;
    Ok(sample_error(&support, n, r, rng)?)
}

fn decoder_trial(cfg: &DecoderSimConfig, field: Gf2m, seed: u64, t: u64) -> Result<Option<&'static str>, LrpcError> {
    let mut rng = stream(seed, t);
    let needs_check = cfg.nk * cfg.d >= cfg.n;
    let mut code = LrpcCode::generate(field, cfg.n, cfg.nk, cfg.d, cfg.structure, &mut rng)?;
    let mut attempts = 1;
    while needs_check && !code.is_decodable() {
        if attempts == CODE_ATTEMPTS {
            return Err(LrpcError::Exhausted(CODE_ATTEMPTS));
        }
        code = LrpcCode::generate(field, cfg.n, cfg.nk, cfg.d, cfg.structure, &mut rng)?;
        attempts += 1;
    }
    let e = planted_error(&field, cfg.n, cfg.r, &mut rng)?;
    let s = code.syndrome(&e)?;
    Ok(match code.decode(&s, cfg.r, cfg.variant)? {
        DecodeOutcome::Decoded(got) if got == e => None,
        DecodeOutcome::Decoded(_) => Some("wrong_error"),
        DecodeOutcome::Failed(f) => Some(failure_name(f)),
    })
}

/// Plants a rank-`r` error against a fresh LRPC code in every trial.
///
/// When `nk d >= n` the code is redrawn until its decoding matrix exists.
pub fn simulate_decoder(cfg: &DecoderSimConfig, trials: usize, seed: u64) -> Result<SimReport, LrpcError> {
    let field = Gf2m::new(cfg.m)?;
    if cfg.r * cfg.d > cfg.nk {
        return Err(LrpcError::Regime {
            rd: cfg.r * cfg.d,
            nk: cfg.nk,
        });
    }
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| decoder_trial(cfg, field, seed, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimReport::from_outcomes(outcomes, failure_exponent(cfg.nk, cfg.r, cfg.d).ok(), seed))
}

fn pke_batch(params: &ParamSet, seed: u64, batch: u64, range: std::ops::Range<u64>) -> Result<Vec<Option<&'static str>>, PkeError> {
    let mut krng = stream(seed, KEY_STREAM | batch);
    let kp = pke::keygen(params, &mut krng)?;
    let field = kp.public.field();
    range
        .map(|t| {
            let mut rng = stream(seed, t);
            let msg: Vec<FieldElement> = (0..params.l).map(|_| field.random(&mut rng)).collect();
            let ct = pke::encrypt(&kp.public, &msg, &mut rng)?;
            Ok(match pke::decrypt(&kp.private, &ct) {
                Ok(got) if got == msg => None,
                Ok(_) => Some("wrong_message"),
                Err(DecryptError::Decode(f)) => Some(failure_name(f)),
                Err(DecryptError::Integrity) => Some("integrity"),
                Err(DecryptError::Shape { .. }) => Some("shape"),
            })
        })
        .collect()
}

/// Runs keygen/encrypt/decrypt cycles, drawing a fresh key pair every
/// `trials_per_key` trials.
pub fn simulate_pke(params: &ParamSet, trials: usize, trials_per_key: usize, seed: u64) -> Result<SimReport, PkeError> {
    let per = trials_per_key.max(1) as u64;
    let total = trials as u64;
    let batches = total.div_ceil(per);
    let outcomes: Vec<_> = (0..batches)
        .into_par_iter()
        .map(|b| pke_batch(params, seed, b, b * per..((b + 1) * per).min(total)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(SimReport::from_outcomes(outcomes, failure_exponent(params.nk(), params.r, params.d).ok(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::NamedSet;

    #[test]
    fn wilson_reference_values() {
        // p = 0.5, n = 100, z = 1.96: 0.5 +- 0.0962
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
    }

    fn cfg(r: usize) -> DecoderSimConfig {
        DecoderSimConfig {
            m: 31,
            n: 12,
            nk: 6,
            d: 2,
            r,
            structure: CodeStructure::Dense,
            variant: DecoderVariant::K,
        }
    }

    #[test]
    fn deterministic_and_rank_zero_never_fails() {
        let a = simulate_decoder(&cfg(1), 200, 7).unwrap();
        let b = simulate_decoder(&cfg(1), 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.exponent, Some(5));
        let z = simulate_decoder(&cfg(0), 100, 7).unwrap();
        assert_eq!(z.failures, 0);
        assert!(matches!(simulate_decoder(&cfg(4), 1, 0), Err(LrpcError::Regime { .. })));
    }

    #[test]
    fn pke_runs_deterministically() {
        let p = ParamSet::parse_custom("n=24,m=23,nk=8,d=3,r=2,variant=qc3").unwrap();
        let a = simulate_pke(&p, 60, 20, 3).unwrap();
        assert_eq!(a, simulate_pke(&p, 60, 20, 3).unwrap());
        assert_eq!(a.trials, 60);
        let prod = NamedSet::by_name("qc3-128").unwrap().params();
        let r = simulate_pke(&prod, 4, 4, 1).unwrap();
        assert_eq!(r.failures, 0);
        assert_eq!(r.exponent, Some(17));
    }
}
