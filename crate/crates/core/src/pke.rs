//! The McNie public-key encryption scheme.
//!
//! The private key is an LRPC parity-check matrix `H` with scramblers `S`
//! (over GF(2^m)) and `P` (over GF(2)). The public key is a random generator
//! matrix `G'` of an `[n, l]` code together with `F = G' P^-1 H^t S`.
//! Encryption of `msg` is `(c1, c2) = (msg G' + e, msg F)` for a rank-`r`
//! error `e`; decryption computes `c1 P^-1 H^t - c2 S^-1 = (e P^-1) H^t` and
//! decodes it with the LRPC decoder.

use rand::RngCore;
use thiserror::Error;

use crate::galois::{sample_error, FieldElement, FieldError, Gf2m, Subspace};
use crate::lrpc::{DecodeFailure, DecodeOutcome, DecoderVariant, LrpcCode, LrpcError};
use crate::matrix::{BitMatrix, Circulant, ExtMatrix, MatrixError, Structure};
use crate::params::{validate_params, ParamSet, Variant};

/// Default keygen resampling budget.
pub const KEYGEN_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PkeError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("key generation gave up after {0} attempts")]
    Exhausted(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{what} has length {got}, expected {expected}")]
    Shape { what: &'static str, expected: usize, got: usize },
    #[error("malformed key: {0}")]
    Key(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lrpc(#[from] LrpcError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecryptError {
    /// The LRPC decoder failed; expected with small probability.
    #[error("decoding failure: {0}")]
    Decode(DecodeFailure),
    /// The recovered error does not lead to a codeword of `G'`.
    #[error("ciphertext integrity check failed")]
    Integrity,
    #[error("{what} has length {got}, expected {expected}")]
    Shape { what: &'static str, expected: usize, got: usize },
}

/// Encryption mode selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EncryptMode {
    #[default]
    Standard,
    /// `c2 = msg F + e2`, the countermeasure to the message-recovery attack.
    /// Always rejected: no matching decryption procedure is defined.
    SecondError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    params: ParamSet,
    field: Gf2m,
    g_prime: ExtMatrix,
    f: ExtMatrix,
    // columns of G' forming an invertible l x l block, and its inverse
    info_set: Vec<usize>,
    info_inverse: ExtMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey {
    public: PublicKey,
    code: LrpcCode,
    s: ExtMatrix,
    s_inv: ExtMatrix,
    p: BitMatrix,
    p_inv: BitMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub c1: Vec<FieldElement>,
    pub c2: Vec<FieldElement>,
}

impl PublicKey {
    /// Assembles a public key, checking shapes and that `G'` has full row rank.
    pub fn from_parts(params: ParamSet, g_prime: ExtMatrix, f: ExtMatrix) -> Result<Self, PkeError> {
        let field = Gf2m::new(params.m)?;
        if (g_prime.rows(), g_prime.cols()) != (params.l, params.n) || (f.rows(), f.cols()) != (params.l, params.nk()) {
            return Err(PkeError::Key("public matrices do not match the parameter set".into()));
        }
        if g_prime.field() != field || f.field() != field {
            return Err(PkeError::Key("public matrices over the wrong field".into()));
        }
        let pivots = g_prime.rref().pivots;
        if pivots.len() < params.l {
            return Err(PkeError::Key("G' lacks full row rank".into()));
        }
        let sub = ExtMatrix::from_fn(field, params.l, params.l, |i, j| g_prime.get(i, pivots[j]));
        let info_inverse = sub.invert()?;
        Ok(Self {
            params,
            field,
            g_prime,
            f,
            info_set: pivots,
            info_inverse,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }
    pub fn field(&self) -> Gf2m {
        self.field
    }
    pub fn g_prime(&self) -> &ExtMatrix {
        &self.g_prime
    }
    pub fn f(&self) -> &ExtMatrix {
        &self.f
    }
}

impl PrivateKey {
    /// Assembles a private key and checks it against `public`.
    pub fn from_parts(public: PublicKey, code: LrpcCode, s: ExtMatrix, p: BitMatrix) -> Result<Self, PkeError> {
        let params = public.params();
        if code.n() != params.n || code.nk() != params.nk() || code.d() != params.d || code.field() != public.field {
            return Err(PkeError::Key("LRPC code does not match the parameter set".into()));
        }
        if (s.rows(), s.cols()) != (params.nk(), params.nk()) || (p.rows(), p.cols()) != (params.n, params.n) {
            return Err(PkeError::Key("scrambler shapes do not match the parameter set".into()));
        }
        if p.is_identity() {
            return Err(PkeError::Key("P is the identity".into()));
        }
        let s_inv = s.invert().map_err(|_| PkeError::Key("S is singular".into()))?;
        let p_inv = p.invert().map_err(|_| PkeError::Key("P is singular".into()))?;
        let key = Self {
            public,
            code,
            s,
            s_inv,
            p,
            p_inv,
        };
        if key.public_f(key.public.g_prime())? != key.public.f {
            return Err(PkeError::Key("F differs from G' P^-1 H^t S".into()));
        }
        Ok(key)
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }
    pub fn params(&self) -> &ParamSet {
        &self.public.params
    }
    pub fn code(&self) -> &LrpcCode {
        &self.code
    }
    pub fn s(&self) -> &ExtMatrix {
        &self.s
    }
    pub fn p(&self) -> &BitMatrix {
        &self.p
    }
    pub fn p_inv(&self) -> &BitMatrix {
        &self.p_inv
    }

    /// `G' P^-1 H^t S` for an arbitrary `G'` with `n` columns.
    pub fn public_f(&self, g_prime: &ExtMatrix) -> Result<ExtMatrix, PkeError> {
        let gp = mul_ext_bits(g_prime, &self.p_inv)?;
        Ok(gp.mul(&self.code.parity_check().transpose())?.mul(&self.s)?)
    }
}

/// `a * b` for `a` over GF(2^m) and `b` over GF(2).
pub fn mul_ext_bits(a: &ExtMatrix, b: &BitMatrix) -> Result<ExtMatrix, MatrixError> {
    let mut data = Vec::with_capacity(a.rows() * b.cols());
    for i in 0..a.rows() {
        data.extend(b.left_mul_ext(a.row(i))?);
    }
    ExtMatrix::from_vec(a.field(), a.rows(), b.cols(), data)
}

/// Generates a key pair with the default resampling budget.
pub fn keygen<R: RngCore + ?Sized>(params: &ParamSet, rng: &mut R) -> Result<KeyPair, PkeError> {
    keygen_with_budget(params, KEYGEN_ATTEMPTS, rng)
}

/// Generates a key pair, resampling at most `attempts` times.
///
/// A draw is rejected when `P = I`, when the top block of `G' P^-1 H^t S0` is
/// singular (QC variants, needed to bring `F` into echelon form), when `F`
/// lacks full column rank, or when the binary decoding system of `H` does
/// not have full column rank although `(n-k)d >= n`.
pub fn keygen_with_budget<R: RngCore + ?Sized>(
    params: &ParamSet,
    attempts: usize,
    rng: &mut R,
) -> Result<KeyPair, PkeError> {
    let report = validate_params(params);
    if !report.is_valid() {
        return Err(PkeError::InvalidParams(report.violations));
    }
    let field = Gf2m::new(params.m)?;
    let (n, nk, l) = (params.n, params.nk(), params.l);
    let structure = match params.variant.block_size(n) {
        Some(j) => Structure::BlockCirculant { block: j },
        None => Structure::Dense,
    };
    for _ in 0..attempts {
        let code = match LrpcCode::generate(field, n, nk, params.d, params.variant.code_structure(), rng) {
            Ok(c) => c,
            Err(LrpcError::Exhausted(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        if nk * params.d >= n && !code.is_decodable() {
            continue;
        }
        let p = BitMatrix::random_invertible(n, structure, rng)?;
        if p.is_identity() {
            continue;
        }
        let p_inv = p.invert()?;
        let g_prime = sample_g_prime(field, params, rng);
        let s0 = ExtMatrix::random_invertible(field, nk, structure_for(params.variant, nk), rng)?;
        let f0 = mul_ext_bits(&g_prime, &p_inv)?
            .mul(&code.parity_check().transpose())?
            .mul(&s0)?;
        let (f, s) = match params.variant {
            Variant::General => {
                if f0.rank() < nk {
                    continue;
                }
                (f0, s0)
            }
            Variant::Qc3 | Variant::Qc4 => {
                let Ok(t) = f0.submatrix(0, 0, nk, nk).invert() else {
                    continue;
                };
                (f0.mul(&t)?, s0.mul(&t)?)
            }
        };
        debug_assert!(l > nk);
        let public = PublicKey::from_parts(params.clone(), g_prime, f)?;
        let private = PrivateKey {
            public: public.clone(),
            code,
            s_inv: s.invert()?,
            s,
            p,
            p_inv,
        };
        return Ok(KeyPair { public, private });
    }
    Err(PkeError::Exhausted(attempts))
}

fn structure_for(variant: Variant, size: usize) -> Structure {
    match variant {
        Variant::General => Structure::Dense,
        Variant::Qc3 => Structure::BlockCirculant { block: size },
        Variant::Qc4 => Structure::BlockCirculant { block: size / 2 },
    }
}

fn sample_g_prime<R: RngCore + ?Sized>(field: Gf2m, params: &ParamSet, rng: &mut R) -> ExtMatrix {
    let (n, l) = (params.n, params.l);
    match params.variant.block_size(n) {
        None => loop {
            let g = ExtMatrix::random(field, l, n, rng);
            if g.rank() == l {
                break g;
            }
        },
        Some(j) => {
            // [I_l | G_1; ...; G_{l/j}], last block column circulant
            let blocks: Vec<Circulant<Gf2m>> = (0..l / j).map(|_| Circulant::random(field, j, rng)).collect();
            systematic_g_prime(field, n, l, j, &blocks)
        }
    }
}

/// `[I_l | C]` where `C` stacks the given `j x j` circulant blocks.
pub fn systematic_g_prime(field: Gf2m, n: usize, l: usize, j: usize, blocks: &[Circulant<Gf2m>]) -> ExtMatrix {
    let expanded: Vec<ExtMatrix> = blocks.iter().map(Circulant::expand).collect();
    ExtMatrix::from_fn(field, l, n, |i, c| {
        if c < l {
            if i == c {
                FieldElement::ONE
            } else {
                FieldElement::ZERO
            }
        } else {
            expanded[i / j].get(i % j, c - l)
        }
    })
}

/// Encrypts `msg` (length `l`) with a fresh error of rank exactly `r`.
pub fn encrypt<R: RngCore + ?Sized>(pk: &PublicKey, msg: &[FieldElement], rng: &mut R) -> Result<Ciphertext, PkeError> {
    let e = sample_rank_error(pk.params(), pk.field, rng)?;
    encrypt_with_error(pk, msg, &e)
}

/// Encrypts under an explicit mode; only [`EncryptMode::Standard`] is supported.
pub fn encrypt_mode<R: RngCore + ?Sized>(
    pk: &PublicKey,
    msg: &[FieldElement],
    mode: EncryptMode,
    rng: &mut R,
) -> Result<Ciphertext, PkeError> {
    match mode {
        EncryptMode::Standard => encrypt(pk, msg, rng),
        EncryptMode::SecondError => Err(PkeError::Unsupported(
            "the second-error countermeasure has no defined decryption".into(),
        )),
    }
}

/// A random error of rank exactly `r` with a uniformly random support.
pub fn sample_rank_error<R: RngCore + ?Sized>(
    params: &ParamSet,
    field: Gf2m,
    rng: &mut R,
) -> Result<Vec<FieldElement>, PkeError> {
    if params.r == 0 {
        return Ok(vec![FieldElement::ZERO; params.n]);
    }
    let support = Subspace::sample(&field, params.r, rng)?;
    Ok(sample_error(&support, params.n, params.r, rng)?)
}

/// `(msg G' + e, msg F)` with a caller-supplied error.
pub fn encrypt_with_error(pk: &PublicKey, msg: &[FieldElement], e: &[FieldElement]) -> Result<Ciphertext, PkeError> {
    let p = pk.params();
    if msg.len() != p.l {
        return Err(PkeError::Shape {
            what: "message",
            expected: p.l,
            got: msg.len(),
        });
    }
    if e.len() != p.n {
        return Err(PkeError::Shape {
            what: "error vector",
            expected: p.n,
            got: e.len(),
        });
    }
    if let Some(&bad) = msg.iter().chain(e).find(|&&x| !pk.field.contains(x)) {
        return Err(FieldError::NotInField(bad.bits(), pk.field.degree()).into());
    }
    let mut c1 = pk.g_prime.left_mul_vec(msg)?;
    for (c, &x) in c1.iter_mut().zip(e) {
        *c += x;
    }
    let c2 = pk.f.left_mul_vec(msg)?;
    Ok(Ciphertext { c1, c2 })
}

/// Decrypts with the `K`-matrix decoder.
pub fn decrypt(sk: &PrivateKey, ct: &Ciphertext) -> Result<Vec<FieldElement>, DecryptError> {
    decrypt_with(sk, ct, DecoderVariant::K).map(|(m, _)| m)
}

/// Decrypts and also returns the recovered error vector `e`.
pub fn decrypt_with(
    sk: &PrivateKey,
    ct: &Ciphertext,
    variant: DecoderVariant,
) -> Result<(Vec<FieldElement>, Vec<FieldElement>), DecryptError> {
    let p = sk.params();
    if ct.c1.len() != p.n {
        return Err(DecryptError::Shape {
            what: "c1",
            expected: p.n,
            got: ct.c1.len(),
        });
    }
    if ct.c2.len() != p.nk() {
        return Err(DecryptError::Shape {
            what: "c2",
            expected: p.nk(),
            got: ct.c2.len(),
        });
    }
    let field = sk.public.field;
    if ct.c1.iter().chain(&ct.c2).any(|&x| !field.contains(x)) {
        return Err(DecryptError::Integrity);
    }
    let c1p = sk.p_inv.left_mul_ext(&ct.c1).expect("length n");
    let mut syndrome = sk.code.syndrome(&c1p).expect("length n");
    let c2s = sk.s_inv.left_mul_vec(&ct.c2).expect("length n-k");
    for (a, b) in syndrome.iter_mut().zip(c2s) {
        *a += b;
    }
    let outcome = sk
        .code
        .decode(&syndrome, p.r, variant)
        .expect("parameters validated at key construction");
    let x = match outcome {
        DecodeOutcome::Decoded(x) => x,
        DecodeOutcome::Failed(reason) => return Err(DecryptError::Decode(reason)),
    };
    let e = sk.p.left_mul_ext(&x).expect("length n");
    let y: Vec<FieldElement> = ct.c1.iter().zip(&e).map(|(&a, &b)| a + b).collect();
    let pk = &sk.public;
    let y_info: Vec<FieldElement> = pk.info_set.iter().map(|&c| y[c]).collect();
    let msg = pk.info_inverse.left_mul_vec(&y_info).expect("length l");
    if pk.g_prime.left_mul_vec(&msg).expect("length l") != y {
        return Err(DecryptError::Integrity);
    }
    Ok((msg, e))
}

/// Public-key size in bits under compressed circulant storage.
pub fn public_key_bits(params: &ParamSet) -> Result<u64, PkeError> {
    let nm = params.n as u64 * u64::from(params.m);
    match params.variant {
        Variant::Qc3 => Ok(nm),
        Variant::Qc4 => Ok(nm * 5 / 4),
        Variant::General => Err(PkeError::Unsupported(
            "general keys store full matrices; no compressed size".into(),
        )),
    }
}
