//! Low-rank parity-check codes and their rank-syndrome decoder.
//!
//! A code is given by a parity-check matrix `H` whose entries all lie in a
//! `d`-dimensional subspace `F = <F_1, ..., F_d>` of GF(2^m), so that
//! `h_ij = sum_v h_ijv F_v` with binary `h_ijv`. Decoding recovers the error
//! support `E` from the syndrome space and then solves a binary linear
//! system for the coordinates of the error in a basis of `E`. The binary
//! system can be written with the full `(n-k)rd × nr` matrix `A` or with the
//! `(n-k)d × n` matrix `K`, applied once per basis vector of `E`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::galois::{CoordinateSystem, FieldElement, FieldError, Gf2m, Subspace};
use crate::matrix::{pack, BitMatrix, ExtMatrix, Solution};

const GENERATION_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LrpcError {
    #[error("invalid code parameters: {0}")]
    Parameter(String),
    #[error("r*d = {rd} exceeds n-k = {nk}: outside the decodable regime")]
    Regime { rd: usize, nk: usize },
    #[error("vector of length {got}, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("no full-rank parity-check matrix after {0} attempts")]
    Exhausted(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Block layout of the parity-check matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeStructure {
    Dense,
    /// `H = [H1 H2 H3]`, circulant blocks of size `n/3`.
    Qc3,
    /// `H = [H1..H4; H5..H8]`, circulant blocks of size `n/4`.
    Qc4,
}

impl CodeStructure {
    /// `(block_rows, block_cols, block_size)` for QC layouts.
    pub fn grid(self, n: usize) -> Option<(usize, usize, usize)> {
        match self {
            CodeStructure::Dense => None,
            CodeStructure::Qc3 => Some((1, 3, n / 3)),
            CodeStructure::Qc4 => Some((2, 4, n / 4)),
        }
    }

    fn check(self, n: usize, nk: usize) -> Result<(), LrpcError> {
        let ok = match self {
            CodeStructure::Dense => true,
            CodeStructure::Qc3 => n % 3 == 0 && nk == n / 3,
            CodeStructure::Qc4 => n % 4 == 0 && nk == n / 2,
        };
        if ok {
            Ok(())
        } else {
            Err(LrpcError::Parameter(format!(
                "{self:?} layout requires {} but n = {n}, n-k = {nk}",
                match self {
                    CodeStructure::Qc3 => "3 | n and n-k = n/3",
                    _ => "4 | n and n-k = n/2",
                }
            )))
        }
    }
}

/// Which binary system the decoder inverts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecoderVariant {
    /// The `(n-k)rd × nr` matrix `A_H^r`.
    A,
    /// The `(n-k)d × n` matrix `K_H`, reused for every support vector.
    K,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecodeFailure {
    /// Syndrome entries outside the product space `<F.E>`.
    ProductSpaceDeficient,
    /// The recovered support has dimension above `r`.
    SupportTooLarge,
    /// No invertible square subsystem exists.
    SystemSingular,
    /// The recovered vector does not reproduce the syndrome.
    Inconsistent,
}

impl fmt::Display for DecodeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecodeFailure::ProductSpaceDeficient => "syndrome not in product space",
            DecodeFailure::SupportTooLarge => "recovered support too large",
            DecodeFailure::SystemSingular => "decoding system singular",
            DecodeFailure::Inconsistent => "decoding system inconsistent",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeOutcome {
    Decoded(Vec<FieldElement>),
    Failed(DecodeFailure),
}

impl DecodeOutcome {
    pub fn error_vector(&self) -> Option<&[FieldElement]> {
        match self {
            DecodeOutcome::Decoded(e) => Some(e),
            DecodeOutcome::Failed(_) => None,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, DecodeOutcome::Decoded(_))
    }
}

/// An invertible square row-subset of `A` or `K` and its inverse.
#[derive(Clone, Debug)]
pub struct DecodingMatrix {
    pub rows: Vec<usize>,
    pub inverse: BitMatrix,
}

type Cache = Arc<Mutex<HashMap<(DecoderVariant, usize), Option<Arc<DecodingMatrix>>>>>;

/// An LRPC code of length `n`, redundancy `n-k` and weight `d`.
#[derive(Clone)]
pub struct LrpcCode {
    field: Gf2m,
    n: usize,
    nk: usize,
    structure: CodeStructure,
    support_basis: Vec<FieldElement>,
    // nk*n masks; bit v of entry (i, j) is h_ijv
    coeffs: Vec<u128>,
    h: ExtMatrix,
    cache: Cache,
}

impl fmt::Debug for LrpcCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LrpcCode")
            .field("field", &self.field)
            .field("n", &self.n)
            .field("nk", &self.nk)
            .field("d", &self.d())
            .field("structure", &self.structure)
            .field("support_basis", &self.support_basis)
            .finish_non_exhaustive()
    }
}

impl PartialEq for LrpcCode {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.n == other.n
            && self.nk == other.nk
            && self.structure == other.structure
            && self.support_basis == other.support_basis
            && self.coeffs == other.coeffs
    }
}

impl Eq for LrpcCode {}

impl LrpcCode {
    /// Random LRPC code whose entries lie in a random `d`-dimensional subspace.
    pub fn generate<R: RngCore + ?Sized>(
        field: Gf2m,
        n: usize,
        nk: usize,
        d: usize,
        structure: CodeStructure,
        rng: &mut R,
    ) -> Result<Self, LrpcError> {
        check_dims(&field, n, nk, d)?;
        structure.check(n, nk)?;
        for _ in 0..GENERATION_ATTEMPTS {
            let support = Subspace::sample(&field, d, rng)?;
            let mask = (1u128 << d) - 1;
            let coeffs = match structure.grid(n) {
                None => (0..nk * n).map(|_| rng.gen::<u128>() & mask).collect(),
                Some((br, bc, j)) => {
                    let firsts: Vec<u128> = (0..br * bc * j).map(|_| rng.gen::<u128>() & mask).collect();
                    expand_block_coeffs(&firsts, br, bc, j)
                }
            };
            let code = Self::assemble(field, n, nk, structure, support.basis().to_vec(), coeffs);
            if code.h.rank() == nk {
                return Ok(code);
            }
        }
        Err(LrpcError::Exhausted(GENERATION_ATTEMPTS))
    }

    /// Builds a code from an ordered support basis and the coefficient masks.
    pub fn from_coefficients(
        field: Gf2m,
        n: usize,
        nk: usize,
        structure: CodeStructure,
        support_basis: Vec<FieldElement>,
        coeffs: Vec<u128>,
    ) -> Result<Self, LrpcError> {
        let d = support_basis.len();
        check_dims(&field, n, nk, d)?;
        structure.check(n, nk)?;
        if CoordinateSystem::new(&support_basis).is_none() || support_basis.iter().any(|&b| !field.contains(b)) {
            return Err(LrpcError::Parameter("support basis is not an independent family of field elements".into()));
        }
        if coeffs.len() != nk * n || coeffs.iter().any(|&c| c >> d != 0) {
            return Err(LrpcError::Parameter("coefficient tensor has the wrong shape".into()));
        }
        let code = Self::assemble(field, n, nk, structure, support_basis, coeffs);
        if let Some((_, _, j)) = structure.grid(n) {
            crate::matrix::BlockCirculant::compress(&code.h, j)
                .map_err(|e| LrpcError::Parameter(format!("parity-check matrix not quasi-cyclic: {e}")))?;
        }
        if code.h.rank() != nk {
            return Err(LrpcError::Parameter("parity-check matrix lacks full row rank".into()));
        }
        Ok(code)
    }

    /// Builds a QC code from the first-row coefficient masks of each block,
    /// blocks in row-major grid order.
    pub fn from_first_rows(
        field: Gf2m,
        n: usize,
        nk: usize,
        structure: CodeStructure,
        support_basis: Vec<FieldElement>,
        first_rows: &[u128],
    ) -> Result<Self, LrpcError> {
        let (br, bc, j) = structure
            .grid(n)
            .ok_or_else(|| LrpcError::Parameter("dense codes have no first-row form".into()))?;
        structure.check(n, nk)?;
        if first_rows.len() != br * bc * j {
            return Err(LrpcError::Parameter("wrong number of first-row coefficients".into()));
        }
        let coeffs = expand_block_coeffs(first_rows, br, bc, j);
        Self::from_coefficients(field, n, nk, structure, support_basis, coeffs)
    }

    /// All coefficient masks, row-major.
    pub fn coefficients(&self) -> &[u128] {
        &self.coeffs
    }

    /// First-row coefficient masks of each circulant block (QC layouts only).
    pub fn first_row_coefficients(&self) -> Option<Vec<u128>> {
        let (br, bc, j) = self.structure.grid(self.n)?;
        let mut out = Vec::with_capacity(br * bc * j);
        for bi in 0..br {
            for bj in 0..bc {
                out.extend((0..j).map(|c| self.coeffs[bi * j * self.n + bj * j + c]));
            }
        }
        Some(out)
    }

    /// Builds a code from explicit entries, recovering `h_ijv` in the given basis.
    pub fn from_matrix(
        h: ExtMatrix,
        structure: CodeStructure,
        support_basis: Vec<FieldElement>,
    ) -> Result<Self, LrpcError> {
        let coords = CoordinateSystem::new(&support_basis)
            .ok_or_else(|| LrpcError::Parameter("support basis is dependent".into()))?;
        let coeffs = h
            .entries()
            .iter()
            .map(|&x| {
                coords
                    .coordinates(x)
                    .ok_or_else(|| LrpcError::Parameter(format!("entry {x:?} outside the support")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_coefficients(h.field(), h.cols(), h.rows(), structure, support_basis, coeffs)
    }

    fn assemble(
        field: Gf2m,
        n: usize,
        nk: usize,
        structure: CodeStructure,
        support_basis: Vec<FieldElement>,
        coeffs: Vec<u128>,
    ) -> Self {
        let h = ExtMatrix::from_fn(field, nk, n, |i, j| {
            combine_ordered(&support_basis, coeffs[i * n + j])
        });
        Self {
            field,
            n,
            nk,
            structure,
            support_basis,
            coeffs,
            h,
            cache: Arc::default(),
        }
    }

    pub fn field(&self) -> Gf2m {
        self.field
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of parity checks, `n - k`.
    pub fn nk(&self) -> usize {
        self.nk
    }
    pub fn d(&self) -> usize {
        self.support_basis.len()
    }
    pub fn structure(&self) -> CodeStructure {
        self.structure
    }
    pub fn parity_check(&self) -> &ExtMatrix {
        &self.h
    }
    /// Ordered basis `(F_1, ..., F_d)`.
    pub fn support_basis(&self) -> &[FieldElement] {
        &self.support_basis
    }
    pub fn support(&self) -> Subspace {
        Subspace::span(self.support_basis.iter().copied())
    }

    /// `h_ijv` (0-based indices).
    #[inline]
    pub fn coeff(&self, i: usize, j: usize, v: usize) -> bool {
        (self.coeffs[i * self.n + j] >> v) & 1 == 1
    }

    /// `s = H y^t`.
    pub fn syndrome(&self, y: &[FieldElement]) -> Result<Vec<FieldElement>, LrpcError> {
        if y.len() != self.n {
            return Err(LrpcError::Shape {
                expected: self.n,
                got: y.len(),
            });
        }
        Ok(self.h.mul_vec(y).expect("length checked"))
    }

    /// The `(n-k)rd × nr` binary matrix with `a[u + v r + i r d][u + j r] = h_ijv`.
    pub fn expand_a(&self, r: usize) -> BitMatrix {
        let d = self.d();
        let mut a = BitMatrix::zeros(self.nk * r * d, self.n * r);
        for i in 0..self.nk {
            for j in 0..self.n {
                for v in 0..d {
                    if self.coeff(i, j, v) {
                        for u in 0..r {
                            a.set(u + v * r + i * r * d, u + j * r, true);
                        }
                    }
                }
            }
        }
        a
    }

    /// The `(n-k)d × n` binary matrix with `k[i + (n-k) v][j] = h_ijv`.
    pub fn expand_k(&self) -> BitMatrix {
        let d = self.d();
        let mut k = BitMatrix::zeros(self.nk * d, self.n);
        for i in 0..self.nk {
            for j in 0..self.n {
                for v in 0..d {
                    if self.coeff(i, j, v) {
                        k.set(i + self.nk * v, j, true);
                    }
                }
            }
        }
        k
    }

    /// The cached decoding matrix for `variant` and support dimension `r`.
    ///
    /// Rows are the lexicographically first independent subset. `None` means
    /// the expanded system lacks full column rank.
    pub fn decoding_matrix(&self, variant: DecoderVariant, r: usize) -> Option<Arc<DecodingMatrix>> {
        let key = match variant {
            DecoderVariant::A => (variant, r),
            DecoderVariant::K => (variant, 0),
        };
        let mut cache = self.cache.lock().expect("decoding cache poisoned");
        cache
            .entry(key)
            .or_insert_with(|| {
                let (m, width) = match variant {
                    DecoderVariant::A => (self.expand_a(r), self.n * r),
                    DecoderVariant::K => (self.expand_k(), self.n),
                };
                let rows = m.independent_rows();
                if rows.len() < width {
                    return None;
                }
                let inverse = m.select_rows(&rows).invert().ok()?;
                Some(Arc::new(DecodingMatrix { rows, inverse }))
            })
            .clone()
    }

    /// Whether the binary system has full column rank, i.e. errors are uniquely recoverable.
    pub fn is_decodable(&self) -> bool {
        self.decoding_matrix(DecoderVariant::K, 0).is_some()
    }

    /// Recovers an error of rank at most `r` from its syndrome.
    pub fn decode(
        &self,
        s: &[FieldElement],
        r: usize,
        variant: DecoderVariant,
    ) -> Result<DecodeOutcome, LrpcError> {
        if s.len() != self.nk {
            return Err(LrpcError::Shape {
                expected: self.nk,
                got: s.len(),
            });
        }
        let d = self.d();
        if r * d > self.nk {
            return Err(LrpcError::Regime { rd: r * d, nk: self.nk });
        }
        let f = &self.field;

        // syndrome space and error support E = ∩ F_v^{-1} S
        let syndrome_space = Subspace::span(s.iter().copied());
        if syndrome_space.dim() == 0 {
            return Ok(DecodeOutcome::Decoded(vec![FieldElement::ZERO; self.n]));
        }
        let mut support: Option<Subspace> = None;
        for &fv in &self.support_basis {
            let scaled = syndrome_space.scale(f, f.inv(fv)?)?;
            support = Some(match support {
                None => scaled,
                Some(acc) => acc.intersect(&scaled),
            });
        }
        let support = support.unwrap_or_default();
        if support.dim() > r {
            return Ok(DecodeOutcome::Failed(DecodeFailure::SupportTooLarge));
        }
        if support.dim() == 0 {
            return Ok(DecodeOutcome::Failed(DecodeFailure::ProductSpaceDeficient));
        }
        let e_basis = support.basis();
        let re = e_basis.len();

        // product family F_v E_u, index v * re + u
        let products: Vec<FieldElement> = self
            .support_basis
            .iter()
            .flat_map(|&fv| e_basis.iter().map(move |&eu| f.mul(fv, eu)))
            .collect();
        let Some(coords) = CoordinateSystem::new(&products) else {
            return self.decode_degenerate(s, e_basis);
        };
        let mut syn_coords = Vec::with_capacity(self.nk);
        for &si in s {
            match coords.coordinates(si) {
                Some(c) => syn_coords.push(c),
                None => return Ok(DecodeOutcome::Failed(DecodeFailure::ProductSpaceDeficient)),
            }
        }
        let Some(dm) = self.decoding_matrix(variant, re) else {
            return Ok(DecodeOutcome::Failed(DecodeFailure::SystemSingular));
        };

        // e_coords[j * re + u] = e_ju
        let mut e_coords = vec![false; self.n * re];
        match variant {
            DecoderVariant::K => {
                for u in 0..re {
                    let rhs: Vec<bool> = dm
                        .rows
                        .iter()
                        .map(|&row| {
                            let (i, v) = (row % self.nk, row / self.nk);
                            (syn_coords[i] >> (v * re + u)) & 1 == 1
                        })
                        .collect();
                    for (j, bit) in dm.inverse.mul_packed(&pack(&rhs)).into_iter().enumerate() {
                        e_coords[j * re + u] = bit;
                    }
                }
            }
            DecoderVariant::A => {
                let rhs: Vec<bool> = dm
                    .rows
                    .iter()
                    .map(|&row| {
                        let (i, rest) = (row / (re * d), row % (re * d));
                        // rest = u + v * re, which is the product index itself
                        (syn_coords[i] >> rest) & 1 == 1
                    })
                    .collect();
                e_coords = dm.inverse.mul_packed(&pack(&rhs));
            }
        }
        Ok(self.finish(s, e_basis, &e_coords))
    }

    /// Decoding when the products `F_v E_u` are linearly dependent: solve the
    /// binary system written in a basis of the actual product space.
    fn decode_degenerate(&self, s: &[FieldElement], e_basis: &[FieldElement]) -> Result<DecodeOutcome, LrpcError> {
        let f = &self.field;
        let re = e_basis.len();
        let product_space = Subspace::span(
            self.support_basis
                .iter()
                .flat_map(|&fv| e_basis.iter().map(move |&eu| f.mul(fv, eu))),
        );
        let coords = CoordinateSystem::new(product_space.basis()).expect("echelon basis is independent");
        let p = product_space.dim();
        let mut rhs = vec![false; self.nk * p];
        for (i, &si) in s.iter().enumerate() {
            let Some(c) = coords.coordinates(si) else {
                return Ok(DecodeOutcome::Failed(DecodeFailure::ProductSpaceDeficient));
            };
            for t in 0..p {
                rhs[i * p + t] = (c >> t) & 1 == 1;
            }
        }
        let mut system = BitMatrix::zeros(self.nk * p, self.n * re);
        for i in 0..self.nk {
            for j in 0..self.n {
                let hij = self.h.get(i, j);
                if hij.is_zero() {
                    continue;
                }
                for (u, &eu) in e_basis.iter().enumerate() {
                    let c = coords.coordinates(f.mul(hij, eu)).expect("h_ij E_u lies in <F.E>");
                    for t in 0..p {
                        if (c >> t) & 1 == 1 {
                            system.set(i * p + t, u + j * re, true);
                        }
                    }
                }
            }
        }
        let (solution, rank) = system.solve(&rhs).expect("shapes match");
        if rank < self.n * re {
            return Ok(DecodeOutcome::Failed(DecodeFailure::SystemSingular));
        }
        match solution {
            Solution::Found(x) => Ok(self.finish(s, e_basis, &x)),
            Solution::Inconsistent => Ok(DecodeOutcome::Failed(DecodeFailure::Inconsistent)),
        }
    }

    fn finish(&self, s: &[FieldElement], e_basis: &[FieldElement], e_coords: &[bool]) -> DecodeOutcome {
        let re = e_basis.len();
        let e: Vec<FieldElement> = (0..self.n)
            .map(|j| {
                (0..re)
                    .filter(|&u| e_coords[j * re + u])
                    .fold(FieldElement::ZERO, |acc, u| acc + e_basis[u])
            })
            .collect();
        if self.h.mul_vec(&e).expect("length n") == s {
            DecodeOutcome::Decoded(e)
        } else {
            DecodeOutcome::Failed(DecodeFailure::Inconsistent)
        }
    }
}

fn check_dims(field: &Gf2m, n: usize, nk: usize, d: usize) -> Result<(), LrpcError> {
    if nk == 0 || nk >= n {
        return Err(LrpcError::Parameter(format!("need 0 < n-k < n, got n = {n}, n-k = {nk}")));
    }
    if d == 0 || d > field.degree() as usize || d > 127 {
        return Err(LrpcError::Parameter(format!("weight d = {d} outside 1..=m")));
    }
    Ok(())
}

fn combine_ordered(basis: &[FieldElement], mask: u128) -> FieldElement {
    basis
        .iter()
        .enumerate()
        .filter(|(v, _)| (mask >> v) & 1 == 1)
        .fold(FieldElement::ZERO, |acc, (_, &b)| acc + b)
}

/// Expands first-row coefficient masks of a `br × bc` circulant grid into all `nk × n` entries.
fn expand_block_coeffs(firsts: &[u128], br: usize, bc: usize, j: usize) -> Vec<u128> {
    let n = bc * j;
    let mut out = vec![0u128; br * j * n];
    for bi in 0..br {
        for bj in 0..bc {
            let first = &firsts[(bi * bc + bj) * j..(bi * bc + bj + 1) * j];
            for i in 0..j {
                for c in 0..j {
                    out[(bi * j + i) * n + bj * j + c] = first[(c + j - i) % j];
                }
            }
        }
    }
    out
}

/// Exponent `n-k+1-rd` of the failure probability `q^-(n-k+1-rd)`.
pub fn failure_exponent(nk: usize, r: usize, d: usize) -> Result<usize, LrpcError> {
    if r * d > nk {
        return Err(LrpcError::Regime { rd: r * d, nk });
    }
    Ok(nk + 1 - r * d)
}

/// Predicted decoding failure probability `q^-(n-k+1-rd)`.
pub fn failure_probability(nk: usize, r: usize, d: usize, q: u32) -> Result<f64, LrpcError> {
    let e = failure_exponent(nk, r, d)?;
    Ok((q as f64).powi(-(e as i32)))
}
