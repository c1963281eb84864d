//! CCA2 conversion around the core scheme.
//!
//! ```text
//! encrypt(msg)                          decrypt(y5 || c1 || c2)
//!   r  <- random                          (y3, e) <- core decrypt
//!   m~ <- Prep(msg)                       y4 <- Conv^-1(e)
//!   y1 <- Gen(r) xor (m~ || Const)        (y2 || y1) := (y5 || y4 || y3)
//!   y2 <- r xor Hash(y1)                  r <- y2 xor Hash(y1)
//!   (y5 || y4 || y3) := (y2 || y1)        (m~ || Const') <- y1 xor Gen(r)
//!   e  <- Conv(y4)                        accept iff Const' = Const
//!   (c1, c2) <- core encrypt(y3, e)
//! ```
//!
//! Hash is SHAKE256 over `0x01 || x` truncated to 32 bytes; Gen is SHAKE256
//! over `0x02 || seed`. Prep is an 8-byte little-endian length, the message,
//! then zero padding.

use rand::{CryptoRng, RngCore};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;
use thiserror::Error;

use crate::codec::{self, BitReader, BitWriter, CodecError};
use crate::galois::{rank_weight, CoordinateSystem, FieldElement, Gf2m, Subspace};
use crate::lrpc::DecoderVariant;
use crate::params::ParamSet;
use crate::pke::{self, PrivateKey, PublicKey};

/// Identifier of the SHAKE256-based Hash/Gen instantiation.
pub const CONFIG_SHAKE256: u8 = 0x01;
/// Length of the random seed `r` and of the Hash output.
pub const SEED_LEN: usize = 32;
pub const DEFAULT_CONST: [u8; 16] = [0; 16];

const PREP_LEN_BYTES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CcaError {
    /// Any failure after parsing; deliberately carries no detail.
    #[error("ciphertext rejected")]
    Reject,
    #[error("malformed wrapped ciphertext: {0}")]
    Malformed(String),
    #[error("message of {0} bytes exceeds the wrapped-format limit")]
    MessageTooLong(usize),
    #[error("Conv input must be {expected} bytes, got {got}")]
    ConvLength { expected: usize, got: usize },
    #[error("vector is not in the image of Conv")]
    NotInImage,
    #[error(transparent)]
    Pke(#[from] pke::PkeError),
}

impl From<CodecError> for CcaError {
    fn from(e: CodecError) -> Self {
        CcaError::Malformed(e.to_string())
    }
}

/// Lengths and constants of the conversion for one parameter set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversionConfig {
    params: ParamSet,
    field: Gf2m,
    const_value: Vec<u8>,
}

impl ConversionConfig {
    pub fn new(params: ParamSet) -> Result<Self, CcaError> {
        Self::with_const(params, DEFAULT_CONST.to_vec())
    }

    pub fn with_const(params: ParamSet, const_value: Vec<u8>) -> Result<Self, CcaError> {
        let field = Gf2m::new(params.m).map_err(pke::PkeError::from)?;
        Ok(Self {
            params,
            field,
            const_value,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn config_id(&self) -> u8 {
        CONFIG_SHAKE256
    }

    pub fn const_value(&self) -> &[u8] {
        &self.const_value
    }

    /// `floor(l m / 8)`.
    pub fn len_y3(&self) -> usize {
        self.params.l * self.params.m as usize / 8
    }

    /// `floor((r(r-1)/2 + r(m + n - 2r)) / 8)`.
    pub fn len_y4(&self) -> usize {
        conv_bits(&self.params) / 8
    }

    /// `len(Prep(msg))`: long enough that `y2 || y1` covers `y4 || y3`.
    pub fn len_m_bar(&self, msg_len: usize) -> usize {
        let floor = (self.len_y3() + self.len_y4()).saturating_sub(SEED_LEN + self.const_value.len());
        (PREP_LEN_BYTES + msg_len).max(floor)
    }

    /// `len(m~) + len(Const) + len(r) - len(y4) - len(y3)`.
    pub fn len_y5(&self, msg_len: usize) -> usize {
        self.len_m_bar(msg_len) + self.const_value.len() + SEED_LEN - self.len_y4() - self.len_y3()
    }

    /// Size of `y5 || c1 || c2`.
    pub fn table_len(&self, msg_len: usize) -> usize {
        self.len_y5(msg_len) + codec::ciphertext_payload_len(&self.params)
    }
}

/// Information content of a Conv input, `r(r-1)/2 + r(m + n - 2r)` bits.
pub fn conv_bits(p: &ParamSet) -> usize {
    let (r, m, n) = (p.r, p.m as usize, p.n);
    r * r.saturating_sub(1) / 2 + r * (m + n).saturating_sub(2 * r)
}

pub fn hash(x: &[u8]) -> [u8; SEED_LEN] {
    let mut out = [0u8; SEED_LEN];
    let mut h = Shake256::default();
    h.update(&[0x01]);
    h.update(x);
    h.finalize_xof().read(&mut out);
    out
}

pub fn gen(seed: &[u8], len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    let mut h = Shake256::default();
    h.update(&[0x02]);
    h.update(seed);
    h.finalize_xof().read(&mut out);
    out
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn reverse_bits(x: FieldElement, m: u32) -> FieldElement {
    FieldElement::from_bits(x.bits().reverse_bits() >> (128 - m))
}

/// Maps `len(y4)` bytes to an error of rank exactly `r`.
///
/// Bits are consumed least-significant first: `r (m - r)` bits fill `A`,
/// giving the support basis `b_u = x^u + x^r A_u`; `r(r-1)/2` bits fill the
/// strict upper triangle of a unit upper-triangular `U`; `r (n - r)` bits fill
/// `B`. Then `e_j = sum_u C_uj b_u` with `C = [U | B]`. Input bits run out
/// before the last positions, which stay zero.
pub fn conv(cfg: &ConversionConfig, bits: &[u8]) -> Result<Vec<FieldElement>, CcaError> {
    let p = &cfg.params;
    let expected = cfg.len_y4();
    if bits.len() != expected {
        return Err(CcaError::ConvLength {
            expected,
            got: bits.len(),
        });
    }
    let (r, m, n) = (p.r, p.m as usize, p.n);
    let total = conv_bits(p);
    let mut padded = bits.to_vec();
    padded.resize(total.div_ceil(8), 0);
    let mut reader = BitReader::new(&padded, 0);
    let mut next = || reader.read_bool().expect("buffer sized to conv_bits");
    let basis: Vec<FieldElement> = (0..r)
        .map(|u| {
            let mut v = 1u128 << u;
            for t in r..m {
                if next() {
                    v |= 1 << t;
                }
            }
            FieldElement::from_bits(v)
        })
        .collect();
    let mut c = vec![vec![false; n]; r];
    for (u, row) in c.iter_mut().enumerate() {
        row[u] = true;
    }
    for u in 0..r {
        for j in u + 1..r {
            c[u][j] = next();
        }
    }
    for row in c.iter_mut() {
        for cell in row.iter_mut().skip(r) {
            *cell = next();
        }
    }
    Ok((0..n)
        .map(|j| {
            (0..r)
                .filter(|&u| c[u][j])
                .fold(FieldElement::ZERO, |acc, u| acc + basis[u])
        })
        .collect())
}

/// Left inverse of [`conv`].
pub fn conv_inv(cfg: &ConversionConfig, e: &[FieldElement]) -> Result<Vec<u8>, CcaError> {
    let p = &cfg.params;
    let (r, m, n) = (p.r, p.m, p.n);
    if e.len() != n || e.iter().any(|&x| !cfg.field.contains(x)) || rank_weight(e) != r {
        return Err(CcaError::NotInImage);
    }
    // echelon form with pivots on the lowest bits, via bit reversal
    let reversed = Subspace::span(e.iter().map(|&x| reverse_bits(x, m)));
    // decreasing reversed leading bit = increasing original pivot bit
    let basis: Vec<FieldElement> = reversed.basis().iter().map(|&x| reverse_bits(x, m)).collect();
    let low_mask = (1u128 << r) - 1;
    for (u, b) in basis.iter().enumerate() {
        if b.bits() & low_mask != 1 << u {
            return Err(CcaError::NotInImage);
        }
    }
    let coords = CoordinateSystem::new(&basis).ok_or(CcaError::NotInImage)?;
    let c: Vec<u128> = e
        .iter()
        .map(|&x| coords.coordinates(x).ok_or(CcaError::NotInImage))
        .collect::<Result<_, _>>()?;
    let cu = |u: usize, j: usize| (c[j] >> u) & 1 == 1;
    for j in 0..r {
        for u in j..r {
            if cu(u, j) != (u == j) {
                return Err(CcaError::NotInImage);
            }
        }
    }
    let mut w = BitWriter::new();
    for b in &basis {
        w.write(b.bits() >> r, m - r as u32);
    }
    for u in 0..r {
        for j in u + 1..r {
            w.write_bool(cu(u, j));
        }
    }
    for u in 0..r {
        for j in r..n {
            w.write_bool(cu(u, j));
        }
    }
    let mut out = w.finish();
    let len = cfg.len_y4();
    if out[len.min(out.len())..].iter().any(|&b| b != 0) {
        return Err(CcaError::NotInImage);
    }
    out.truncate(len);
    Ok(out)
}

/// `y3` bytes as `l` field elements, bit-packed least-significant first.
pub fn bytes_to_message(cfg: &ConversionConfig, y3: &[u8]) -> Vec<FieldElement> {
    let (l, m) = (cfg.params.l, cfg.params.m);
    let mut padded = y3.to_vec();
    padded.resize((l * m as usize).div_ceil(8), 0);
    let mut r = BitReader::new(&padded, 0);
    (0..l)
        .map(|_| FieldElement::from_bits(r.read(m).expect("buffer sized to l*m")))
        .collect()
}

/// Inverse of [`bytes_to_message`]; `None` if bits beyond `len(y3)` are set.
pub fn message_to_bytes(cfg: &ConversionConfig, msg: &[FieldElement]) -> Option<Vec<u8>> {
    let mut w = BitWriter::new();
    for x in msg {
        w.write(x.bits(), cfg.params.m);
    }
    let mut out = w.finish();
    let len = cfg.len_y3();
    if out[len..].iter().any(|&b| b != 0) {
        return None;
    }
    out.truncate(len);
    Some(out)
}

/// `y5` in the clear followed by the core ciphertext record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrappedCiphertext {
    pub config_id: u8,
    pub y5: Vec<u8>,
    pub core: pke::Ciphertext,
}

impl WrappedCiphertext {
    /// File bytes: config id, big-endian `len(y5)`, `y5`, then the core ciphertext file.
    pub fn to_bytes(&self, params: &ParamSet) -> Vec<u8> {
        let mut out = vec![self.config_id];
        out.extend((self.y5.len() as u16).to_be_bytes());
        out.extend(&self.y5);
        out.extend(codec::serialize_ciphertext(params, &self.core));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(ParamSet, Self), CcaError> {
        if bytes.len() < 3 {
            return Err(CcaError::Malformed(format!("truncated at byte {}", bytes.len())));
        }
        let config_id = bytes[0];
        if config_id != CONFIG_SHAKE256 {
            return Err(CcaError::Malformed(format!("unknown conversion config {config_id:#04x}")));
        }
        let len5 = u16::from_be_bytes([bytes[1], bytes[2]]) as usize;
        if bytes.len() < 3 + len5 {
            return Err(CcaError::Malformed(format!("truncated at byte {}", bytes.len())));
        }
        let y5 = bytes[3..3 + len5].to_vec();
        let rest = &bytes[3 + len5..];
        let (params, off) = codec::decode_header(rest)?;
        let core = codec::ciphertext_from_payload(&params, &rest[off..], 3 + len5 + off)?;
        Ok((params, Self { config_id, y5, core }))
    }

    /// The `y5 || c1 || c2` layout.
    pub fn table_bytes(&self, field: &Gf2m) -> Vec<u8> {
        let mut out = self.y5.clone();
        out.extend(codec::ciphertext_payload(field, &self.core));
        out
    }
}

/// Every intermediate value of one encryption or decryption.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CcaTranscript {
    pub seed: Vec<u8>,
    pub m_bar: Vec<u8>,
    pub y1: Vec<u8>,
    pub y2: Vec<u8>,
    pub y3: Vec<u8>,
    pub y4: Vec<u8>,
    pub y5: Vec<u8>,
    pub e: Vec<FieldElement>,
}

fn prep(msg: &[u8], len: usize) -> Vec<u8> {
    let mut out = (msg.len() as u64).to_le_bytes().to_vec();
    out.extend(msg);
    out.resize(len, 0);
    out
}

fn unprep(m_bar: &[u8]) -> Option<Vec<u8>> {
    let len = u64::from_le_bytes(m_bar.get(..PREP_LEN_BYTES)?.try_into().ok()?);
    let end = PREP_LEN_BYTES.checked_add(usize::try_from(len).ok()?)?;
    if end > m_bar.len() || m_bar[end..].iter().any(|&b| b != 0) {
        return None;
    }
    Some(m_bar[PREP_LEN_BYTES..end].to_vec())
}

pub fn cca_encrypt<R: RngCore + CryptoRng + ?Sized>(
    cfg: &ConversionConfig,
    pk: &PublicKey,
    msg: &[u8],
    rng: &mut R,
) -> Result<WrappedCiphertext, CcaError> {
    cca_encrypt_traced(cfg, pk, msg, rng).map(|(w, _)| w)
}

pub fn cca_encrypt_traced<R: RngCore + CryptoRng + ?Sized>(
    cfg: &ConversionConfig,
    pk: &PublicKey,
    msg: &[u8],
    rng: &mut R,
) -> Result<(WrappedCiphertext, CcaTranscript), CcaError> {
    if pk.params() != &cfg.params {
        return Err(CcaError::Malformed("key and conversion config use different parameters".into()));
    }
    if cfg.len_y5(msg.len()) > u16::MAX as usize {
        return Err(CcaError::MessageTooLong(msg.len()));
    }
    let mut seed = vec![0u8; SEED_LEN];
    rng.fill_bytes(&mut seed);
    let m_bar = prep(msg, cfg.len_m_bar(msg.len()));
    let mut padded = m_bar.clone();
    padded.extend(&cfg.const_value);
    let y1 = xor(&gen(&seed, padded.len()), &padded);
    let y2 = xor(&seed, &hash(&y1));
    let mut z = y2.clone();
    z.extend(&y1);
    let (len5, len4) = (cfg.len_y5(msg.len()), cfg.len_y4());
    let y5 = z[..len5].to_vec();
    let y4 = z[len5..len5 + len4].to_vec();
    let y3 = z[len5 + len4..].to_vec();
    debug_assert_eq!(y3.len(), cfg.len_y3());
    let e = conv(cfg, &y4)?;
    let core = pke::encrypt_with_error(pk, &bytes_to_message(cfg, &y3), &e)?;
    let transcript = CcaTranscript {
        seed,
        m_bar,
        y1,
        y2,
        y3,
        y4,
        y5: y5.clone(),
        e,
    };
    Ok((
        WrappedCiphertext {
            config_id: cfg.config_id(),
            y5,
            core,
        },
        transcript,
    ))
}

pub fn cca_decrypt(cfg: &ConversionConfig, sk: &PrivateKey, wrapped: &WrappedCiphertext) -> Result<Vec<u8>, CcaError> {
    cca_decrypt_traced(cfg, sk, wrapped).map(|(m, _)| m)
}

/// Decrypts; every failure past framing is [`CcaError::Reject`].
pub fn cca_decrypt_traced(
    cfg: &ConversionConfig,
    sk: &PrivateKey,
    wrapped: &WrappedCiphertext,
) -> Result<(Vec<u8>, CcaTranscript), CcaError> {
    if sk.params() != &cfg.params || wrapped.config_id != cfg.config_id() {
        return Err(CcaError::Malformed("ciphertext does not match the conversion config".into()));
    }
    let (len3, len4) = (cfg.len_y3(), cfg.len_y4());
    let (msg, e) = pke::decrypt_with(sk, &wrapped.core, DecoderVariant::K).map_err(|_| CcaError::Reject)?;
    let y3 = message_to_bytes(cfg, &msg).ok_or(CcaError::Reject)?;
    let y4 = conv_inv(cfg, &e).map_err(|_| CcaError::Reject)?;
    let mut z = wrapped.y5.clone();
    z.extend(&y4);
    z.extend(&y3);
    if z.len() < SEED_LEN + cfg.const_value.len() + PREP_LEN_BYTES {
        return Err(CcaError::Reject);
    }
    let (y2, y1) = z.split_at(SEED_LEN);
    let seed = xor(y2, &hash(y1));
    let padded = xor(y1, &gen(&seed, y1.len()));
    let (m_bar, tail) = padded.split_at(padded.len() - cfg.const_value.len());
    if tail != cfg.const_value.as_slice() {
        return Err(CcaError::Reject);
    }
    let out = unprep(m_bar).ok_or(CcaError::Reject)?;
    debug_assert_eq!((y3.len(), y4.len()), (len3, len4));
    let transcript = CcaTranscript {
        seed,
        m_bar: m_bar.to_vec(),
        y1: y1.to_vec(),
        y2: y2.to_vec(),
        y3,
        y4,
        y5: wrapped.y5.clone(),
        e,
    };
    Ok((out, transcript))
}
