//! Byte formats for keys, ciphertexts, matrices and known-answer records.
//!
//! Every key and ciphertext file starts with a header:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `MCNI` |
//! | 1     | format version (1) |
//! | 1     | parameter-set id (1..=6 named, 0 custom) |
//! | 12    | custom only: `m, n, l, k, d, r` as u16 little-endian |
//! | 1     | variant (0 general, 1 qc3, 2 qc4) |
//!
//! Key payloads are bit-packed: each value is written least-significant bit
//! first at the next free bit position, and only the end of the whole
//! payload is padded to a byte boundary. A quasi-cyclic public key stores the
//! first rows of the circulant blocks of `G'` and of the non-identity part of
//! `F`, which is `n m` bits (qc3) or `5 n m / 4` bits (qc4).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::galois::{FieldElement, FieldError, Gf2m, Subspace};
use crate::lrpc::LrpcCode;
use crate::matrix::{BitMatrix, BlockCirculant, Circulant, ExtMatrix, Gf2, Matrix};
use crate::params::{validate_params, NamedSet, ParamSet, Variant};
use crate::pke::{self, systematic_g_prime, Ciphertext, KeyPair, PkeError, PrivateKey, PublicKey};

pub const MAGIC: &[u8; 4] = b"MCNI";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u8),
    #[error("unknown parameter-set id {0}")]
    UnknownParamId(u8),
    #[error("unknown variant tag {0}")]
    UnknownVariant(u8),
    #[error("variant tag {found} contradicts parameter set `{name}`")]
    VariantMismatch { found: u8, name: String },
    #[error("truncated at byte {offset}: {needed} more bytes needed")]
    Truncated { offset: usize, needed: usize },
    #[error("{count} unexpected trailing bytes at offset {offset}")]
    Trailing { offset: usize, count: usize },
    #[error("non-canonical encoding at byte {offset}")]
    NonCanonical { offset: usize },
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("inconsistent key material: {0}")]
    Key(String),
    #[error("malformed known-answer record: {0}")]
    Kat(String),
}

impl From<PkeError> for CodecError {
    fn from(e: PkeError) -> Self {
        CodecError::Key(e.to_string())
    }
}

/// Little-endian bit writer.
#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, value: u128, width: u32) {
        debug_assert!(width == 128 || value >> width == 0);
        for i in 0..width {
            if self.len % 8 == 0 {
                self.bytes.push(0);
            }
            if (value >> i) & 1 == 1 {
                *self.bytes.last_mut().expect("pushed above") |= 1 << (self.len % 8);
            }
            self.len += 1;
        }
    }

    pub fn write_bool(&mut self, bit: bool) {
        self.write(bit as u128, 1);
    }

    pub fn bit_len(&self) -> usize {
        self.len
    }

    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reader matching [`BitWriter`]; offsets in errors are absolute file offsets.
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], base: usize) -> Self {
        Self { data, pos: 0, base }
    }

    pub fn read(&mut self, width: u32) -> Result<u128, CodecError> {
        let end = self.pos + width as usize;
        if end > self.data.len() * 8 {
            return Err(CodecError::Truncated {
                offset: self.base + self.data.len(),
                needed: end.div_ceil(8) - self.data.len(),
            });
        }
        let mut v = 0u128;
        for i in 0..width as usize {
            let p = self.pos + i;
            if (self.data[p / 8] >> (p % 8)) & 1 == 1 {
                v |= 1 << i;
            }
        }
        self.pos = end;
        Ok(v)
    }

    pub fn read_bool(&mut self) -> Result<bool, CodecError> {
        Ok(self.read(1)? == 1)
    }

    /// Checks the padding bits of the final byte and returns the bytes consumed.
    pub fn finish(self) -> Result<usize, CodecError> {
        let used = self.pos.div_ceil(8);
        if self.pos % 8 != 0 && self.data[used - 1] >> (self.pos % 8) != 0 {
            return Err(CodecError::NonCanonical {
                offset: self.base + used - 1,
            });
        }
        Ok(used)
    }
}

/// Header bytes for a parameter set.
pub fn encode_header(params: &ParamSet) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.push(FORMAT_VERSION);
    let id = params.registry_id();
    out.push(id);
    if id == 0 {
        for v in [params.m as usize, params.n, params.l, params.k, params.d, params.r] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
    }
    out.push(params.variant.tag());
    out
}

/// Parses a header, returning the parameter set and the payload offset.
pub fn decode_header(bytes: &[u8]) -> Result<(ParamSet, usize), CodecError> {
    let need = |len: usize| {
        if bytes.len() < len {
            Err(CodecError::Truncated {
                offset: bytes.len(),
                needed: len - bytes.len(),
            })
        } else {
            Ok(())
        }
    };
    need(6)?;
    if &bytes[..4] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(CodecError::Version(bytes[4]));
    }
    let id = bytes[5];
    let mut pos = 6;
    let mut params = if id == 0 {
        need(pos + 12)?;
        let f: Vec<usize> = (0..6)
            .map(|i| u16::from_le_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]) as usize)
            .collect();
        pos += 12;
        ParamSet {
            name: String::new(),
            m: f[0] as u32,
            n: f[1],
            l: f[2],
            k: f[3],
            d: f[4],
            r: f[5],
            variant: Variant::General,
        }
    } else {
        NamedSet::by_id(id).ok_or(CodecError::UnknownParamId(id))?.params()
    };
    need(pos + 1)?;
    let tag = bytes[pos];
    let variant = Variant::from_tag(tag).ok_or(CodecError::UnknownVariant(tag))?;
    if id == 0 {
        params.variant = variant;
        params.name = params.canonical_name();
    } else if variant != params.variant {
        return Err(CodecError::VariantMismatch {
            found: tag,
            name: params.name,
        });
    }
    let report = validate_params(&params);
    if !report.is_valid() {
        return Err(CodecError::InvalidParams(report.violations));
    }
    Ok((params, pos + 1))
}

fn expect_end(bytes: &[u8], offset: usize) -> Result<(), CodecError> {
    if offset < bytes.len() {
        Err(CodecError::Trailing {
            offset,
            count: bytes.len() - offset,
        })
    } else {
        Ok(())
    }
}

fn write_elems(w: &mut BitWriter, elems: impl IntoIterator<Item = FieldElement>, m: u32) {
    for e in elems {
        w.write(e.bits(), m);
    }
}

fn read_elems(r: &mut BitReader<'_>, count: usize, m: u32) -> Result<Vec<FieldElement>, CodecError> {
    (0..count).map(|_| Ok(FieldElement::from_bits(r.read(m)?))).collect()
}

/// Public-key payload without header.
pub fn public_payload(pk: &PublicKey) -> Vec<u8> {
    let p = pk.params();
    let m = p.m;
    let (g, f) = (pk.g_prime(), pk.f());
    let mut w = BitWriter::new();
    match p.variant.block_size(p.n) {
        None => {
            write_elems(&mut w, g.entries().iter().copied(), m);
            write_elems(&mut w, f.entries().iter().copied(), m);
        }
        Some(j) => {
            let (l, nk) = (p.l, p.nk());
            for bi in 0..l / j {
                write_elems(&mut w, (0..j).map(|c| g.get(bi * j, l + c)), m);
            }
            for bj in 0..nk / j {
                write_elems(&mut w, (0..j).map(|c| f.get(nk, bj * j + c)), m);
            }
        }
    }
    w.finish()
}

/// Payload size in bytes of a public key for these parameters.
pub fn public_payload_len(params: &ParamSet) -> usize {
    let elems = match params.variant {
        Variant::General => params.l * (params.n + params.nk()),
        Variant::Qc3 | Variant::Qc4 => {
            let j = params.variant.block_size(params.n).expect("qc");
            (params.l / j + params.nk() / j) * j
        }
    };
    (elems * params.m as usize).div_ceil(8)
}

fn public_from_payload(params: &ParamSet, bytes: &[u8], base: usize) -> Result<(PublicKey, usize), CodecError> {
    let field = Gf2m::new(params.m).map_err(|e| CodecError::Key(e.to_string()))?;
    let (n, l, nk, m) = (params.n, params.l, params.nk(), params.m);
    let mut r = BitReader::new(bytes, base);
    let (g, f) = match params.variant.block_size(n) {
        None => {
            let g = read_elems(&mut r, l * n, m)?;
            let f = read_elems(&mut r, l * nk, m)?;
            (
                ExtMatrix::from_vec(field, l, n, g).expect("sized"),
                ExtMatrix::from_vec(field, l, nk, f).expect("sized"),
            )
        }
        Some(j) => {
            let g_blocks = (0..l / j)
                .map(|_| Ok(Circulant::new(field, read_elems(&mut r, j, m)?)))
                .collect::<Result<Vec<_>, CodecError>>()?;
            let f_blocks = (0..nk / j)
                .map(|_| Ok(Circulant::new(field, read_elems(&mut r, j, m)?).expand()))
                .collect::<Result<Vec<_>, CodecError>>()?;
            let g = systematic_g_prime(field, n, l, j, &g_blocks);
            let f = ExtMatrix::from_fn(field, l, nk, |i, c| {
                if i < nk {
                    if i == c {
                        FieldElement::ONE
                    } else {
                        FieldElement::ZERO
                    }
                } else {
                    f_blocks[c / j].get((i - nk) % j, c % j)
                }
            });
            (g, f)
        }
    };
    let used = r.finish()?;
    Ok((PublicKey::from_parts(params.clone(), g, f)?, used))
}

pub fn serialize_public(pk: &PublicKey) -> Vec<u8> {
    let mut out = encode_header(pk.params());
    out.extend(public_payload(pk));
    out
}

pub fn deserialize_public(bytes: &[u8]) -> Result<PublicKey, CodecError> {
    let (params, off) = decode_header(bytes)?;
    let (pk, used) = public_from_payload(&params, &bytes[off..], off)?;
    expect_end(bytes, off + used)?;
    Ok(pk)
}

/// Private-key payload: support basis, `H` coefficients, `S`, `P`, then the
/// public payload (decryption needs `G'`).
pub fn private_payload(sk: &PrivateKey) -> Vec<u8> {
    let p = sk.params();
    let (m, d, n, nk) = (p.m, p.d as u32, p.n, p.nk());
    let code = sk.code();
    let mut w = BitWriter::new();
    write_elems(&mut w, code.support_basis().iter().copied(), m);
    match p.variant.block_size(n) {
        None => {
            for &c in code.coefficients() {
                w.write(c, d);
            }
            write_elems(&mut w, sk.s().entries().iter().copied(), m);
            for i in 0..n {
                for j in 0..n {
                    w.write_bool(sk.p().get(i, j));
                }
            }
        }
        Some(j) => {
            for c in code.first_row_coefficients().expect("qc code") {
                w.write(c, d);
            }
            let s = sk.s();
            for bi in 0..nk / j {
                for bj in 0..nk / j {
                    write_elems(&mut w, (0..j).map(|c| s.get(bi * j, bj * j + c)), m);
                }
            }
            for bi in 0..n / j {
                for bj in 0..n / j {
                    for c in 0..j {
                        w.write_bool(sk.p().get(bi * j, bj * j + c));
                    }
                }
            }
        }
    }
    let mut out = w.finish();
    out.extend(public_payload(sk.public()));
    out
}

pub fn serialize_private(sk: &PrivateKey) -> Vec<u8> {
    let mut out = encode_header(sk.params());
    out.extend(private_payload(sk));
    out
}

pub fn deserialize_private(bytes: &[u8]) -> Result<PrivateKey, CodecError> {
    let (params, off) = decode_header(bytes)?;
    let field = Gf2m::new(params.m).map_err(|e| CodecError::Key(e.to_string()))?;
    let (m, d, n, nk) = (params.m, params.d, params.n, params.nk());
    let mut r = BitReader::new(&bytes[off..], off);
    let basis = read_elems(&mut r, d, m)?;
    let structure = params.variant.code_structure();
    let key_err = |e: crate::lrpc::LrpcError| CodecError::Key(e.to_string());
    let (code, s, p) = match params.variant.block_size(n) {
        None => {
            let coeffs = (0..nk * n).map(|_| r.read(d as u32)).collect::<Result<Vec<_>, _>>()?;
            let code = LrpcCode::from_coefficients(field, n, nk, structure, basis, coeffs).map_err(key_err)?;
            let s = ExtMatrix::from_vec(field, nk, nk, read_elems(&mut r, nk * nk, m)?).expect("sized");
            let mut p = BitMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    p.set(i, j, r.read_bool()?);
                }
            }
            (code, s, p)
        }
        Some(j) => {
            let (br, bc, _) = structure.grid(n).expect("qc");
            let firsts = (0..br * bc * j).map(|_| r.read(d as u32)).collect::<Result<Vec<_>, _>>()?;
            let code = LrpcCode::from_first_rows(field, n, nk, structure, basis, &firsts).map_err(key_err)?;
            let g = nk / j;
            let s_blocks = (0..g * g)
                .map(|_| Ok(Circulant::new(field, read_elems(&mut r, j, m)?)))
                .collect::<Result<Vec<_>, CodecError>>()?;
            let s = BlockCirculant::new(g, g, s_blocks).expect("uniform grid").expand();
            let g = n / j;
            let p_blocks = (0..g * g)
                .map(|_| Ok(Circulant::new(Gf2, (0..j).map(|_| r.read_bool()).collect::<Result<Vec<_>, _>>()?)))
                .collect::<Result<Vec<_>, CodecError>>()?;
            let p: Matrix<Gf2> = BlockCirculant::new(g, g, p_blocks).expect("uniform grid").expand();
            (code, s, BitMatrix::from_matrix(&p))
        }
    };
    let used = r.finish()?;
    let pub_off = off + used;
    let (pk, pub_used) = public_from_payload(&params, &bytes[pub_off..], pub_off)?;
    expect_end(bytes, pub_off + pub_used)?;
    Ok(PrivateKey::from_parts(pk, code, s, p)?)
}

/// `c1 || c2`, each element in `ceil(m/8)` little-endian bytes.
pub fn ciphertext_payload(field: &Gf2m, ct: &Ciphertext) -> Vec<u8> {
    ct.c1.iter().chain(&ct.c2).flat_map(|&e| field.to_bytes(e)).collect()
}

pub fn ciphertext_payload_len(params: &ParamSet) -> usize {
    (params.n + params.nk()) * (params.m as usize).div_ceil(8)
}

/// Parses exactly one ciphertext payload.
pub fn ciphertext_from_payload(params: &ParamSet, bytes: &[u8], base: usize) -> Result<Ciphertext, CodecError> {
    let field = Gf2m::new(params.m).map_err(|e| CodecError::Key(e.to_string()))?;
    let width = field.byte_len();
    let expected = ciphertext_payload_len(params);
    if bytes.len() < expected {
        return Err(CodecError::Truncated {
            offset: base + bytes.len(),
            needed: expected - bytes.len(),
        });
    }
    expect_end(bytes, expected).map_err(|_| CodecError::Trailing {
        offset: base + expected,
        count: bytes.len() - expected,
    })?;
    let elems = bytes
        .chunks(width)
        .enumerate()
        .map(|(i, chunk)| {
            field.from_bytes(chunk).map_err(|e| match e {
                FieldError::NotInField(..) => CodecError::NonCanonical { offset: base + i * width },
                other => CodecError::Key(other.to_string()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let c2 = elems[params.n..].to_vec();
    let c1 = elems[..params.n].to_vec();
    Ok(Ciphertext { c1, c2 })
}

pub fn serialize_ciphertext(params: &ParamSet, ct: &Ciphertext) -> Vec<u8> {
    let field = Gf2m::new(params.m).expect("validated parameters");
    let mut out = encode_header(params);
    out.extend(ciphertext_payload(&field, ct));
    out
}

pub fn deserialize_ciphertext(bytes: &[u8]) -> Result<(ParamSet, Ciphertext), CodecError> {
    let (params, off) = decode_header(bytes)?;
    let ct = ciphertext_from_payload(&params, &bytes[off..], off)?;
    Ok((params, ct))
}

/// Field elements as concatenated `ceil(m/8)`-byte little-endian words.
pub fn elements_to_bytes(field: &Gf2m, v: &[FieldElement]) -> Vec<u8> {
    v.iter().flat_map(|&e| field.to_bytes(e)).collect()
}

pub fn elements_from_bytes(field: &Gf2m, bytes: &[u8]) -> Result<Vec<FieldElement>, CodecError> {
    let width = field.byte_len();
    if bytes.len() % width != 0 {
        return Err(CodecError::Truncated {
            offset: bytes.len(),
            needed: width - bytes.len() % width,
        });
    }
    bytes
        .chunks(width)
        .enumerate()
        .map(|(i, c)| field.from_bytes(c).map_err(|_| CodecError::NonCanonical { offset: i * width }))
        .collect()
}

/// Dimensions as two u32 little-endian values, then entries row-major.
pub fn serialize_matrix(a: &ExtMatrix) -> Vec<u8> {
    let field = a.field();
    let mut out = (a.rows() as u32).to_le_bytes().to_vec();
    out.extend((a.cols() as u32).to_le_bytes());
    out.extend(elements_to_bytes(&field, a.entries()));
    out
}

pub fn deserialize_matrix(field: Gf2m, bytes: &[u8]) -> Result<ExtMatrix, CodecError> {
    if bytes.len() < 8 {
        return Err(CodecError::Truncated {
            offset: bytes.len(),
            needed: 8 - bytes.len(),
        });
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = &bytes[8..];
    let expected = rows * cols * field.byte_len();
    if body.len() != expected {
        return Err(if body.len() < expected {
            CodecError::Truncated {
                offset: bytes.len(),
                needed: expected - body.len(),
            }
        } else {
            CodecError::Trailing {
                offset: 8 + expected,
                count: body.len() - expected,
            }
        });
    }
    let entries = elements_from_bytes(&field, body).map_err(|e| match e {
        CodecError::NonCanonical { offset } => CodecError::NonCanonical { offset: offset + 8 },
        other => other,
    })?;
    Ok(ExtMatrix::from_vec(field, rows, cols, entries).expect("sized"))
}

/// Dimension byte followed by the canonical basis.
pub fn serialize_subspace(field: &Gf2m, s: &Subspace) -> Vec<u8> {
    let mut out = vec![s.dim() as u8];
    out.extend(elements_to_bytes(field, s.basis()));
    out
}

pub fn deserialize_subspace(field: &Gf2m, bytes: &[u8]) -> Result<Subspace, CodecError> {
    let (&dim, rest) = bytes.split_first().ok_or(CodecError::Truncated { offset: 0, needed: 1 })?;
    let basis = elements_from_bytes(field, rest)?;
    if basis.len() != dim as usize {
        return Err(CodecError::Key(format!("subspace header says dim {dim}, found {} elements", basis.len())));
    }
    let s = Subspace::span(basis.iter().copied());
    if s.basis() != basis.as_slice() {
        return Err(CodecError::NonCanonical { offset: 1 });
    }
    Ok(s)
}

/// A deterministic keygen/encrypt/decrypt transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KatRecord {
    pub param: String,
    pub seed: [u8; 32],
    pub pk: Vec<u8>,
    pub sk: Vec<u8>,
    pub msg: Vec<u8>,
    pub ct: Vec<u8>,
    pub recovered: Vec<u8>,
}

/// Builds the record for a named parameter set and seed.
///
/// One ChaCha20 stream seeded with `seed` drives keygen, then the message,
/// then the encryption error.
pub fn kat_generate(param_name: &str, seed: [u8; 32]) -> Result<KatRecord, CodecError> {
    let params = NamedSet::by_name(param_name)
        .ok_or_else(|| CodecError::Kat(format!("`{param_name}` is not a named parameter set")))?
        .params();
    let mut rng = ChaCha20Rng::from_seed(seed);
    let KeyPair { public, private } = pke::keygen(&params, &mut rng)?;
    let field = public.field();
    let msg: Vec<FieldElement> = (0..params.l).map(|_| field.random(&mut rng)).collect();
    let ct = pke::encrypt(&public, &msg, &mut rng)?;
    let recovered = pke::decrypt(&private, &ct).map_err(|e| CodecError::Kat(format!("decryption failed: {e}")))?;
    Ok(KatRecord {
        param: param_name.to_string(),
        seed,
        pk: serialize_public(&public),
        sk: serialize_private(&private),
        msg: elements_to_bytes(&field, &msg),
        ct: serialize_ciphertext(&params, &ct),
        recovered: elements_to_bytes(&field, &recovered),
    })
}

/// Replays a record; on mismatch names the first divergent field.
pub fn kat_verify(record: &KatRecord) -> Result<(), CodecError> {
    let fresh = kat_generate(&record.param, record.seed)?;
    let fields: [(&str, &Vec<u8>, &Vec<u8>); 5] = [
        ("pk", &record.pk, &fresh.pk),
        ("sk", &record.sk, &fresh.sk),
        ("msg", &record.msg, &fresh.msg),
        ("ct", &record.ct, &fresh.ct),
        ("recovered", &record.recovered, &fresh.recovered),
    ];
    for (name, want, got) in fields {
        if want != got {
            return Err(CodecError::Kat(format!("field `{name}` diverges")));
        }
    }
    if record.recovered != record.msg {
        return Err(CodecError::Kat("recovered message differs from msg".into()));
    }
    Ok(())
}

impl KatRecord {
    /// `key = hex` lines.
    pub fn to_text(&self) -> String {
        format!(
            "param = {}\nseed = {}\npk = {}\nsk = {}\nmsg = {}\nct = {}\nrecovered = {}\n",
            self.param,
            hex::encode(self.seed),
            hex::encode(&self.pk),
            hex::encode(&self.sk),
            hex::encode(&self.msg),
            hex::encode(&self.ct),
            hex::encode(&self.recovered)
        )
    }

    /// Parses records separated by blank lines.
    pub fn parse_all(text: &str) -> Result<Vec<KatRecord>, CodecError> {
        text.split("\n\n")
            .map(str::trim)
            .filter(|chunk| chunk.lines().any(|l| !l.trim().is_empty() && !l.trim().starts_with('#')))
            .map(Self::parse)
            .collect()
    }

    pub fn parse(text: &str) -> Result<KatRecord, CodecError> {
        let mut get = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CodecError::Kat(format!("expected key = value, got `{line}`")))?;
            get.insert(k.trim().to_string(), v.trim().to_string());
        }
        let field = |k: &str| get.get(k).cloned().ok_or_else(|| CodecError::Kat(format!("missing `{k}`")));
        let bytes = |k: &str| hex::decode(field(k)?).map_err(|e| CodecError::Kat(format!("`{k}`: {e}")));
        let seed: [u8; 32] = bytes("seed")?
            .try_into()
            .map_err(|_| CodecError::Kat("seed must be 32 bytes".into()))?;
        Ok(KatRecord {
            param: field("param")?,
            seed,
            pk: bytes("pk")?,
            sk: bytes("sk")?,
            msg: bytes("msg")?,
            ct: bytes("ct")?,
            recovered: bytes("recovered")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pke::{decrypt, encrypt, keygen};
    use rand::{Rng, RngCore};

    fn toy(spec: &str) -> ParamSet {
        ParamSet::parse_custom(spec).unwrap()
    }

    #[test]
    fn bit_packing_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let values: Vec<(u128, u32)> = (0..200)
            .map(|_| {
                let w = rng.gen_range(1..=127u32);
                (rng.gen::<u128>() & ((1u128 << w) - 1), w)
            })
            .collect();
        let mut w = BitWriter::new();
        for &(v, width) in &values {
            w.write(v, width);
        }
        let total: usize = values.iter().map(|&(_, w)| w as usize).sum();
        assert_eq!(w.bit_len(), total);
        let bytes = w.finish();
        assert_eq!(bytes.len(), total.div_ceil(8));
        let mut r = BitReader::new(&bytes, 0);
        for &(v, width) in &values {
            assert_eq!(r.read(width).unwrap(), v);
        }
        assert_eq!(r.finish().unwrap(), bytes.len());
    }

    #[test]
    fn header_round_trip() {
        for s in NamedSet::all() {
            let h = encode_header(&s.params());
            assert_eq!(h.len(), 7);
            assert_eq!(decode_header(&h).unwrap(), (s.params(), 7));
        }
        let p = toy("n=24,m=11,nk=8,d=2,r=3,variant=qc3");
        let h = encode_header(&p);
        assert_eq!(h.len(), 19);
        let (q, off) = decode_header(&h).unwrap();
        assert_eq!((q, off), (p, 19));

        let mut bad = h.clone();
        bad[4] = 2;
        assert_eq!(decode_header(&bad), Err(CodecError::Version(2)));
        bad = h.clone();
        bad[0] = b'X';
        assert_eq!(decode_header(&bad), Err(CodecError::BadMagic));
        assert!(matches!(decode_header(&h[..10]), Err(CodecError::Truncated { .. })));
        let mut named = encode_header(&NamedSet::by_name("qc3-128").unwrap().params());
        named[6] = 2;
        assert!(matches!(decode_header(&named), Err(CodecError::VariantMismatch { .. })));
        named[5] = 9;
        assert_eq!(decode_header(&named), Err(CodecError::UnknownParamId(9)));
    }

    #[test]
    fn key_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for spec in [
            "n=24,m=11,nk=8,d=2,r=3,variant=qc3",
            "n=24,m=29,nk=12,d=2,r=3,variant=qc4",
            "n=12,m=17,nk=6,l=8,d=2,r=2,variant=general",
        ] {
            let p = toy(spec);
            let kp = keygen(&p, &mut rng).unwrap();
            let pk_bytes = serialize_public(&kp.public);
            assert_eq!(pk_bytes.len(), 19 + public_payload_len(&p));
            let pk = deserialize_public(&pk_bytes).unwrap();
            assert_eq!(pk, kp.public);
            assert_eq!(serialize_public(&pk), pk_bytes);

            let sk_bytes = serialize_private(&kp.private);
            let sk = deserialize_private(&sk_bytes).unwrap();
            assert_eq!(sk, kp.private);
            assert_eq!(serialize_private(&sk), sk_bytes);

            let msg: Vec<_> = (0..p.l).map(|_| pk.field().random(&mut rng)).collect();
            let ct = encrypt(&kp.public, &msg, &mut rng).unwrap();
            let ct_bytes = serialize_ciphertext(&p, &ct);
            let (q, ct2) = deserialize_ciphertext(&ct_bytes).unwrap();
            assert_eq!((q, &ct2), (p.clone(), &ct));
            assert_eq!(ct_bytes.len(), 19 + ciphertext_payload_len(&p));
            if let Ok(got) = decrypt(&kp.private, &ct) {
                assert_eq!(decrypt(&sk, &ct2).unwrap(), got);
            }
        }
    }

    #[test]
    fn malformed_inputs() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = toy("n=24,m=11,nk=8,d=2,r=3,variant=qc3");
        let kp = keygen(&p, &mut rng).unwrap();
        let pk = serialize_public(&kp.public);
        assert!(matches!(deserialize_public(&pk[..pk.len() - 1]), Err(CodecError::Truncated { .. })));
        let mut long = pk.clone();
        long.push(0);
        assert!(matches!(deserialize_public(&long), Err(CodecError::Trailing { .. })));
        let sk = serialize_private(&kp.private);
        let mut flipped = sk.clone();
        flipped[19] ^= 1;
        assert!(deserialize_private(&flipped).is_err());

        let ct = serialize_ciphertext(&p, &encrypt(&kp.public, &[FieldElement::ZERO; 16], &mut rng).unwrap());
        let mut high = ct.clone();
        high[20] |= 0x80; // bit 15 of the first element, above m = 11
        assert!(matches!(deserialize_ciphertext(&high), Err(CodecError::NonCanonical { offset: 19 })));
        assert!(matches!(deserialize_ciphertext(&ct[..ct.len() - 3]), Err(CodecError::Truncated { .. })));
    }

    #[test]
    fn padding_bits_must_be_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let p = toy("n=24,m=13,nk=8,d=2,r=3,variant=qc3");
        let kp = keygen(&p, &mut rng).unwrap();
        // 24 * 13 = 312 bits, no padding
        assert_eq!(serialize_public(&kp.public).len(), 19 + 39);
        let p = toy("n=24,m=19,nk=12,d=2,r=3,variant=qc4");
        let kp = keygen(&p, &mut rng).unwrap();
        let mut pk = serialize_public(&kp.public);
        // 30 * 19 = 570 bits -> 72 bytes with 6 padding bits
        assert_eq!(pk.len(), 19 + 72);
        let last = pk.len() - 1;
        pk[last] |= 0x80;
        assert!(matches!(deserialize_public(&pk), Err(CodecError::NonCanonical { .. })));
    }

    #[test]
    fn named_payload_sizes() {
        let sizes: Vec<usize> = NamedSet::all().iter().map(|s| public_payload_len(&s.params())).collect();
        assert_eq!(sizes, [795, 1156, 1385, 849, 1173, 1460]);
    }

    #[test]
    fn matrix_and_subspace_formats() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let f = Gf2m::new(11).unwrap();
        let a = ExtMatrix::random(f, 3, 5, &mut rng);
        let bytes = serialize_matrix(&a);
        assert_eq!(bytes.len(), 8 + 15 * 2);
        assert_eq!(deserialize_matrix(f, &bytes).unwrap(), a);
        assert!(deserialize_matrix(f, &bytes[..bytes.len() - 1]).is_err());
        let s = Subspace::sample(&f, 4, &mut rng).unwrap();
        let bytes = serialize_subspace(&f, &s);
        assert_eq!(deserialize_subspace(&f, &bytes).unwrap(), s);
        let mut swapped = bytes.clone();
        swapped[1..5].rotate_left(2);
        assert!(deserialize_subspace(&f, &swapped).is_err());
    }

    #[test]
    fn kat_determinism() {
        let mut seed = [0u8; 32];
        ChaCha20Rng::seed_from_u64(6).fill_bytes(&mut seed);
        let a = kat_generate("qc4-128", seed).unwrap();
        let b = kat_generate("qc4-128", seed).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pk.len(), 7 + 849);
        assert_eq!(a.recovered, a.msg);
        assert_eq!(KatRecord::parse(&a.to_text()).unwrap(), a);
        kat_verify(&a).unwrap();
        seed[0] ^= 1;
        let c = kat_generate("qc4-128", seed).unwrap();
        assert_ne!(c.pk, a.pk);
        let mut bad = a.clone();
        bad.ct[10] ^= 1;
        assert!(matches!(kat_verify(&bad), Err(CodecError::Kat(m)) if m.contains("ct")));
        assert!(kat_generate("custom:n=24", seed).is_err());
    }
}
