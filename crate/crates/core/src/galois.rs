//! Arithmetic in GF(2^m) and the GF(2)-subspace algebra used by the rank metric.
//!
//! Elements are bit vectors: bit `i` of a [`FieldElement`] is the coefficient
//! of `x^i`. The field itself is described by a [`Gf2m`] context holding the
//! extension degree and an irreducible modulus; elements do not carry it.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::sync::OnceLock;

use rand::{Rng, RngCore};
use thiserror::Error;

/// Largest supported extension degree (the modulus needs `m + 1` bits of a `u128`).
pub const MAX_DEGREE: u32 = 127;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("extension degree {0} outside supported range 2..={MAX_DEGREE}")]
    Degree(u32),
    #[error("modulus {0:#x} does not have degree {1}")]
    ModulusDegree(u128, u32),
    #[error("modulus {0:#x} is reducible over GF(2)")]
    Reducible(u128),
    #[error("element {0:#x} does not belong to GF(2^{1})")]
    NotInField(u128, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid scalar: subspace scaling requires a nonzero element")]
    ZeroScalar,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
}

/// An element of GF(2^m), held as its coefficient bits.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(u128);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    /// Wraps raw coefficient bits without checking field membership.
    #[inline]
    pub const fn from_bits(bits: u128) -> Self {
        Self(bits)
    }

    #[inline]
    pub const fn bits(self) -> u128 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Index of the highest set coefficient, `None` for zero.
    #[inline]
    pub fn leading_bit(self) -> Option<u32> {
        (self.0 != 0).then(|| 127 - self.0.leading_zeros())
    }

    #[inline]
    pub fn bit(self, i: u32) -> bool {
        (self.0 >> i) & 1 == 1
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElement {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

/// Degree of a nonzero binary polynomial.
#[inline]
fn poly_degree(p: u128) -> u32 {
    127 - p.leading_zeros()
}

/// `a * b mod modulus` where `modulus` has degree `m` and `a, b` are reduced.
#[inline]
fn mul_mod(mut a: u128, mut b: u128, modulus: u128, m: u32) -> u128 {
    if a == 0 || b == 0 {
        return 0;
    }
    if a == 1 {
        return b;
    }
    if b == 1 {
        return a;
    }
    if a.count_ones() < b.count_ones() {
        std::mem::swap(&mut a, &mut b);
    }
    let top = 1u128 << (m - 1);
    let mut acc = 0u128;
    let mut shifted = a;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= shifted;
        }
        b >>= 1;
        if b == 0 {
            break;
        }
        // shifted * x, reduced; the carry bit is bit m - 1 before shifting
        let carry = shifted & top != 0;
        shifted <<= 1;
        if carry {
            shifted ^= modulus;
        }
    }
    acc
}

/// Remainder of `a` modulo the polynomial `b` (both arbitrary `u128` polys).
fn poly_rem(mut a: u128, b: u128) -> u128 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's irreducibility test for a degree-`m` binary polynomial.
pub fn is_irreducible(modulus: u128, m: u32) -> bool {
    if m == 0 || m > MAX_DEGREE || modulus >> m != 1 {
        return false;
    }
    if modulus & 1 == 0 {
        return m == 1;
    }
    // x^(2^k) mod f for every k <= m
    let x = 2u128;
    let mut powers = Vec::with_capacity(m as usize + 1);
    powers.push(x);
    let mut cur = x;
    for _ in 0..m {
        cur = mul_mod(cur, cur, modulus, m);
        powers.push(cur);
    }
    if powers[m as usize] != x {
        return false;
    }
    prime_factors(m).into_iter().all(|p| {
        let h = powers[(m / p) as usize] ^ x;
        h != 0 && poly_gcd(modulus, h) == 1
    })
}

static SMALLEST_IRREDUCIBLE: [OnceLock<u128>; 128] = [const { OnceLock::new() }; 128];

/// The irreducible polynomial of degree `m` with the smallest integer value.
pub fn smallest_irreducible(m: u32) -> Result<u128, FieldError> {
    if !(2..=MAX_DEGREE).contains(&m) {
        return Err(FieldError::Degree(m));
    }
    Ok(*SMALLEST_IRREDUCIBLE[m as usize].get_or_init(|| {
        let base = 1u128 << m;
        (1u128..)
            .step_by(2)
            .map(|low| base | low)
            .find(|&cand| is_irreducible(cand, m))
            .expect("irreducible polynomials exist in every degree")
    }))
}

/// The field GF(2^m) with a fixed irreducible modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gf2m {
    m: u32,
    modulus: u128,
}

impl fmt::Debug for Gf2m {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})/{:#x}", self.m, self.modulus)
    }
}

impl Gf2m {
    /// GF(2^m) using the lexicographically smallest irreducible modulus.
    pub fn new(m: u32) -> Result<Self, FieldError> {
        Ok(Self {
            m,
            modulus: smallest_irreducible(m)?,
        })
    }

    pub fn with_modulus(m: u32, modulus: u128) -> Result<Self, FieldError> {
        if !(2..=MAX_DEGREE).contains(&m) {
            return Err(FieldError::Degree(m));
        }
        if modulus >> m != 1 {
            return Err(FieldError::ModulusDegree(modulus, m));
        }
        if !is_irreducible(modulus, m) {
            return Err(FieldError::Reducible(modulus));
        }
        Ok(Self { m, modulus })
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    #[inline]
    fn mask(&self) -> u128 {
        (1u128 << self.m) - 1
    }

    #[inline]
    pub fn contains(&self, a: FieldElement) -> bool {
        a.0 & !self.mask() == 0
    }

    /// Checked construction from coefficient bits.
    pub fn element(&self, bits: u128) -> Result<FieldElement, FieldError> {
        let a = FieldElement(bits);
        if self.contains(a) {
            Ok(a)
        } else {
            Err(FieldError::NotInField(bits, self.m))
        }
    }

    /// The monomial `x^i`, `i < m`.
    pub fn monomial(&self, i: u32) -> FieldElement {
        debug_assert!(i < self.m);
        FieldElement(1u128 << i)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a + b
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(self.contains(a) && self.contains(b));
        FieldElement(mul_mod(a.0, b.0, self.modulus, self.m))
    }

    #[inline]
    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn pow(&self, mut a: FieldElement, mut e: u128) -> FieldElement {
        let mut acc = FieldElement::ONE;
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.square(a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        // invariant: r0 = s0 * a (mod f), r1 = s1 * a (mod f)
        let (mut r0, mut r1) = (self.modulus, a.0);
        let (mut s0, mut s1) = (0u128, 1u128);
        while r1 != 1 {
            let shift = poly_degree(r0) - poly_degree(r1);
            // one step of polynomial division; swap when the degree drops below r1
            r0 ^= r1 << shift;
            s0 ^= s1 << shift;
            if r0 == 0 || poly_degree(r0) < poly_degree(r1) {
                std::mem::swap(&mut r0, &mut r1);
                std::mem::swap(&mut s0, &mut s1);
            }
        }
        Ok(FieldElement(poly_rem(s1, self.modulus)))
    }

    pub fn checked_add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(a + b)
    }

    pub fn checked_mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    pub fn checked_inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.inv(a)
    }

    fn check(&self, a: FieldElement) -> Result<(), FieldError> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(FieldError::NotInField(a.0, self.m))
        }
    }

    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.gen::<u128>() & self.mask())
    }

    pub fn random_nonzero<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let a = self.random(rng);
            if !a.is_zero() {
                return a;
            }
        }
    }

    /// Serialized width of one element.
    #[inline]
    pub fn byte_len(&self) -> usize {
        self.m.div_ceil(8) as usize
    }

    /// Little-endian bytes: bit 0 of byte 0 is the coefficient of `x^0`.
    pub fn to_bytes(&self, a: FieldElement) -> Vec<u8> {
        a.0.to_le_bytes()[..self.byte_len()].to_vec()
    }

    pub fn from_bytes(&self, bytes: &[u8]) -> Result<FieldElement, FieldError> {
        if bytes.len() != self.byte_len() {
            return Err(FieldError::Length {
                expected: self.byte_len(),
                got: bytes.len(),
            });
        }
        let mut buf = [0u8; 16];
        buf[..bytes.len()].copy_from_slice(bytes);
        self.element(u128::from_le_bytes(buf))
    }
}

/// A GF(2)-linear subspace of GF(2^m), stored as a reduced row-echelon basis.
///
/// Basis vectors are ordered by strictly decreasing leading bit and every
/// leading bit is cleared in all other basis vectors, so two spans of the
/// same set always compare equal.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Subspace {
    basis: Vec<FieldElement>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Subspace").field(&self.basis).finish()
    }
}

impl Subspace {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The whole field GF(2^m).
    pub fn full(field: &Gf2m) -> Self {
        Self::span((0..field.degree()).rev().map(|i| field.monomial(i)))
    }

    pub fn span<I: IntoIterator<Item = FieldElement>>(elements: I) -> Self {
        let mut s = Self::zero();
        for e in elements {
            s.insert(e);
        }
        s
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    pub fn basis(&self) -> &[FieldElement] {
        &self.basis
    }

    /// Reduces `a` against the basis; the result is zero iff `a` is in the span.
    pub fn reduce(&self, mut a: FieldElement) -> FieldElement {
        for b in &self.basis {
            let p = b.leading_bit().expect("basis vectors are nonzero");
            if a.bit(p) {
                a += *b;
            }
        }
        a
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        self.reduce(a).is_zero()
    }

    /// Adds `a` to the span. Returns whether the dimension grew.
    pub fn insert(&mut self, a: FieldElement) -> bool {
        let a = self.reduce(a);
        let Some(p) = a.leading_bit() else {
            return false;
        };
        for b in &mut self.basis {
            if b.bit(p) {
                *b += a;
            }
        }
        let pos = self
            .basis
            .iter()
            .position(|b| b.leading_bit() < Some(p))
            .unwrap_or(self.basis.len());
        self.basis.insert(pos, a);
        true
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|&b| other.contains(b))
    }

    /// Sum of two subspaces.
    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for &b in &other.basis {
            s.insert(b);
        }
        s
    }

    /// Intersection by Zassenhaus' joint reduction of `(a | a)` and `(b | 0)`.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        // Rows are (left, right) pairs echelonized with the left half taking
        // priority; rows whose left half vanishes span the intersection.
        let mut rows: Vec<(u128, u128)> = Vec::with_capacity(self.dim() + other.dim());
        let pivot = |row: &(u128, u128)| -> Option<u32> {
            if row.0 != 0 {
                Some(128 + poly_degree(row.0))
            } else if row.1 != 0 {
                Some(poly_degree(row.1))
            } else {
                None
            }
        };
        let inputs = self
            .basis
            .iter()
            .map(|a| (a.0, a.0))
            .chain(other.basis.iter().map(|b| (b.0, 0)));
        for mut row in inputs {
            loop {
                let Some(p) = pivot(&row) else { break };
                match rows.iter().find(|r| pivot(r) == Some(p)) {
                    Some(r) => {
                        row.0 ^= r.0;
                        row.1 ^= r.1;
                    }
                    None => {
                        rows.push(row);
                        break;
                    }
                }
            }
        }
        Subspace::span(
            rows.iter()
                .filter(|r| r.0 == 0)
                .map(|r| FieldElement(r.1)),
        )
    }

    /// `{c * a : a in self}` for nonzero `c`.
    pub fn scale(&self, field: &Gf2m, c: FieldElement) -> Result<Subspace, FieldError> {
        if c.is_zero() {
            return Err(FieldError::ZeroScalar);
        }
        Ok(Subspace::span(self.basis.iter().map(|&a| field.mul(c, a))))
    }

    /// Span of all products `f * e` of basis vectors.
    pub fn product(&self, field: &Gf2m, other: &Subspace) -> Subspace {
        Subspace::span(
            self.basis
                .iter()
                .flat_map(|&f| other.basis.iter().map(move |&e| field.mul(f, e))),
        )
    }

    /// Uniformly random subspace of the given dimension.
    pub fn sample<R: RngCore + ?Sized>(
        field: &Gf2m,
        dim: usize,
        rng: &mut R,
    ) -> Result<Subspace, FieldError> {
        if dim == 0 || dim > field.degree() as usize {
            return Err(FieldError::Parameter(format!(
                "subspace dimension {dim} outside 1..={}",
                field.degree()
            )));
        }
        // uniform ordered bases give uniform spans
        let mut s = Subspace::zero();
        while s.dim() < dim {
            s.insert(field.random(rng));
        }
        Ok(s)
    }

    /// The element `sum_i bit_i(mask) * basis[i]`.
    pub fn combine(&self, mask: u128) -> FieldElement {
        self.basis
            .iter()
            .enumerate()
            .filter(|(i, _)| (mask >> i) & 1 == 1)
            .fold(FieldElement::ZERO, |acc, (_, &b)| acc + b)
    }

    /// All `2^dim` elements, for enumeration over small subspaces.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        assert!(self.dim() < 32, "enumeration limited to small subspaces");
        (0u128..1u128 << self.dim()).map(move |mask| self.combine(mask))
    }
}

/// Coordinates of field elements relative to a fixed, ordered, independent family.
///
/// Unlike [`Subspace`], the family keeps the caller's order, so coordinates
/// refer to positions in the original list (e.g. the ordered basis of an
/// LRPC support or the product basis `F_v E_u`).
#[derive(Clone, Debug)]
pub struct CoordinateSystem {
    // echelon rows with the combination of the original vectors that produced them
    rows: Vec<(u128, u128)>,
    len: usize,
}

impl CoordinateSystem {
    /// Returns `None` if the family is linearly dependent or longer than 128.
    pub fn new(family: &[FieldElement]) -> Option<Self> {
        if family.len() > 128 {
            return None;
        }
        let mut rows: Vec<(u128, u128)> = Vec::with_capacity(family.len());
        for (i, a) in family.iter().enumerate() {
            let (v, combo) = reduce_tracked(&rows, a.0, 1u128 << i);
            if v == 0 {
                return None;
            }
            rows.push((v, combo));
        }
        Some(Self {
            rows,
            len: family.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bitmask of coefficients expressing `a` in the family, if `a` lies in its span.
    pub fn coordinates(&self, a: FieldElement) -> Option<u128> {
        let (v, combo) = reduce_tracked(&self.rows, a.0, 0);
        (v == 0).then_some(combo)
    }
}

fn reduce_tracked(rows: &[(u128, u128)], mut v: u128, mut combo: u128) -> (u128, u128) {
    // rows are kept with distinct leading bits, so one pass in insertion order
    // is not enough in general; iterate until no leading bit matches
    loop {
        if v == 0 {
            return (v, combo);
        }
        let p = poly_degree(v);
        match rows.iter().find(|r| poly_degree(r.0) == p) {
            Some(r) => {
                v ^= r.0;
                combo ^= r.1;
            }
            None => return (v, combo),
        }
    }
}

/// Rank weight: dimension of the GF(2)-span of the coordinates.
pub fn rank_weight(v: &[FieldElement]) -> usize {
    support(v).dim()
}

/// The support of a vector: the GF(2)-span of its coordinates.
pub fn support(v: &[FieldElement]) -> Subspace {
    Subspace::span(v.iter().copied())
}

/// Random vector of length `n` with entries in `support` and rank exactly `r = dim(support)`.
pub fn sample_error<R: RngCore + ?Sized>(
    support: &Subspace,
    n: usize,
    r: usize,
    rng: &mut R,
) -> Result<Vec<FieldElement>, FieldError> {
    if support.dim() != r {
        return Err(FieldError::Parameter(format!(
            "error support has dimension {} but rank {r} was requested",
            support.dim()
        )));
    }
    if n < r {
        return Err(FieldError::Parameter(format!(
            "cannot place rank {r} in length {n}"
        )));
    }
    let mask = if r == 0 { 0 } else { u128::MAX >> (128 - r) };
    loop {
        let e: Vec<FieldElement> = (0..n)
            .map(|_| support.combine(rng.gen::<u128>() & mask))
            .collect();
        if rank_weight(&e) == r {
            return Ok(e);
        }
    }
}
