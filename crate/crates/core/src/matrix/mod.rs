//! Dense linear algebra over GF(2) and GF(2^m).
//!
//! [`Matrix`] is generic over a [`Field`]; the extension-field instance is
//! aliased as [`ExtMatrix`]. Large GF(2) systems (the expanded LRPC decoding
//! matrices, the mixing map `P`) use the bit-packed [`BitMatrix`].

mod bits;
mod circulant;

use std::fmt;
use std::hash::Hash;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::galois::{FieldElement, Gf2m};

pub use bits::{pack, BitMatrix};
pub use circulant::{BlockCirculant, Circulant};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix does not have the requested structure: {0}")]
    Structure(String),
}

/// Scalar field over which matrices are built.
///
/// The field value is a small context (GF(2) has none; GF(2^m) carries its
/// modulus) that every matrix keeps alongside its entries.
pub trait Field: Copy + fmt::Debug + PartialEq {
    type Elem: Copy + Eq + Hash + fmt::Debug + Default;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn inv(&self, a: Self::Elem) -> Option<Self::Elem>;
    fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    fn is_zero(&self, a: Self::Elem) -> bool {
        a == self.zero()
    }
}

/// The prime field GF(2).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Gf2;

impl Field for Gf2 {
    type Elem = bool;

    fn zero(&self) -> bool {
        false
    }
    fn one(&self) -> bool {
        true
    }
    fn add(&self, a: bool, b: bool) -> bool {
        a ^ b
    }
    fn mul(&self, a: bool, b: bool) -> bool {
        a & b
    }
    fn inv(&self, a: bool) -> Option<bool> {
        a.then_some(true)
    }
    fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> bool {
        rng.gen()
    }
}

impl Field for Gf2m {
    type Elem = FieldElement;

    fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }
    fn one(&self) -> FieldElement {
        FieldElement::ONE
    }
    fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a + b
    }
    fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        Gf2m::mul(self, a, b)
    }
    fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        Gf2m::inv(self, a).ok()
    }
    fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        Gf2m::random(self, rng)
    }
}

/// Requested shape of a random invertible matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Dense,
    /// Square grid of `block × block` circulant blocks.
    BlockCirculant { block: usize },
}

/// Row-major dense matrix over a [`Field`].
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

pub type ExtMatrix = Matrix<Gf2m>;

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// Result of [`Matrix::rref`]: `reduced = transform * input`.
#[derive(Clone, Debug)]
pub struct Rref<F: Field> {
    pub reduced: Matrix<F>,
    pub rank: usize,
    pub transform: Matrix<F>,
    pub pivots: Vec<usize>,
}

/// Outcome of [`Matrix::solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution<T> {
    /// A solution; free variables (if any) are set to zero.
    Found(Vec<T>),
    Inconsistent,
}

impl<T> Solution<T> {
    pub fn found(self) -> Option<Vec<T>> {
        match self {
            Solution::Found(x) => Some(x),
            Solution::Inconsistent => None,
        }
    }
}

impl<F: Field> Matrix<F> {
    pub fn zeros(field: F, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_fn(field: F, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F::Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { field, rows, cols, data }
    }

    pub fn from_vec(field: F, rows: usize, cols: usize, data: Vec<F::Elem>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { field, rows, cols, data })
    }

    pub fn random<R: RngCore + ?Sized>(field: F, rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(field, rows, cols, |_, _| field.random(rng))
    }

    #[inline]
    pub fn field(&self) -> F {
        self.field
    }
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F::Elem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F::Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[F::Elem] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| self.field.is_zero(x))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::Shape(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.field, self.rows, self.cols, |i, j| {
            self.field.add(self.get(i, j), other.get(i, j))
        }))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(i, t);
                if f.is_zero(a) {
                    continue;
                }
                let orow = other.row(t);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = f.add(*d, f.mul(a, b));
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `v * self`.
    pub fn left_mul_vec(&self, v: &[F::Elem]) -> Result<Vec<F::Elem>, MatrixError> {
        if v.len() != self.rows {
            return Err(MatrixError::Shape(format!(
                "vector of length {} times {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let f = self.field;
        let mut out = vec![f.zero(); self.cols];
        for (i, &a) in v.iter().enumerate() {
            if f.is_zero(a) {
                continue;
            }
            for (d, &b) in out.iter_mut().zip(self.row(i)) {
                *d = f.add(*d, f.mul(a, b));
            }
        }
        Ok(out)
    }

    /// Matrix times column vector: `self * x`.
    pub fn mul_vec(&self, x: &[F::Elem]) -> Result<Vec<F::Elem>, MatrixError> {
        if x.len() != self.cols {
            return Err(MatrixError::Shape(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(f.zero(), |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect())
    }

    /// Sub-block of size `h × w` starting at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        Self::from_fn(self.field, h, w, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Block `(bi, bj)` in a grid of `size × size` blocks.
    pub fn block(&self, bi: usize, bj: usize, size: usize) -> Self {
        self.submatrix(bi * size, bj * size, size, size)
    }

    /// Assembles a matrix from a rectangular grid of equally sized blocks.
    pub fn from_blocks(grid: &[Vec<Self>]) -> Result<Self, MatrixError> {
        let first = grid
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| MatrixError::Shape("empty block grid".into()))?;
        let (h, w, f) = (first.rows, first.cols, first.field);
        let bc = grid[0].len();
        if grid.iter().any(|r| r.len() != bc || r.iter().any(|b| b.rows != h || b.cols != w)) {
            return Err(MatrixError::Shape("ragged block grid".into()));
        }
        Ok(Self::from_fn(f, grid.len() * h, bc * w, |i, j| {
            grid[i / h][j / w].get(i % h, j % w)
        }))
    }

    pub fn hstack(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.rows != other.rows {
            return Err(MatrixError::Shape("hstack row mismatch".into()));
        }
        Ok(Self::from_fn(self.field, self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        }))
    }

    pub fn vstack(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.cols {
            return Err(MatrixError::Shape("vstack column mismatch".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            field: self.field,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// `row[dst] += c * row[src]`.
    fn axpy_row(&mut self, dst: usize, src: usize, c: F::Elem) {
        let f = self.field;
        let cols = self.cols;
        for j in 0..cols {
            let s = self.data[src * cols + j];
            if !f.is_zero(s) {
                let d = &mut self.data[dst * cols + j];
                *d = f.add(*d, f.mul(c, s));
            }
        }
    }

    fn scale_row(&mut self, r: usize, c: F::Elem) {
        let f = self.field;
        for x in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *x = f.mul(c, *x);
        }
    }

    /// Reduced row-echelon form with the accumulated row transform.
    pub fn rref(&self) -> Rref<F> {
        let f = self.field;
        let mut r = self.clone();
        let mut t = Self::identity(f, self.rows);
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&i| !f.is_zero(r.get(i, col))) else {
                continue;
            };
            r.swap_rows(row, p);
            t.swap_rows(row, p);
            let inv = f.inv(r.get(row, col)).expect("nonzero pivot");
            r.scale_row(row, inv);
            t.scale_row(row, inv);
            for i in 0..self.rows {
                if i != row {
                    let c = r.get(i, col);
                    if !f.is_zero(c) {
                        r.axpy_row(i, row, c);
                        t.axpy_row(i, row, c);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        Rref {
            reduced: r,
            rank: pivots.len(),
            transform: t,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Solves `self * x = b`.
    pub fn solve(&self, b: &[F::Elem]) -> Result<Solution<F::Elem>, MatrixError> {
        if b.len() != self.rows {
            return Err(MatrixError::Shape(format!(
                "right-hand side of length {} for {} equations",
                b.len(),
                self.rows
            )));
        }
        let f = self.field;
        let Rref { reduced, rank, transform, pivots } = self.rref();
        let tb = transform.mul_vec(b)?;
        if tb[rank..].iter().any(|&v| !f.is_zero(v)) {
            return Ok(Solution::Inconsistent);
        }
        let mut x = vec![f.zero(); self.cols];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = tb[i];
        }
        debug_assert_eq!(reduced.rows, self.rows);
        Ok(Solution::Found(x))
    }

    pub fn invert(&self) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let rr = self.rref();
        if rr.rank < self.rows {
            return Err(MatrixError::Singular);
        }
        Ok(rr.transform)
    }

    /// Basis of the right kernel `{x : self * x = 0}` as the rows of a matrix.
    pub fn right_kernel(&self) -> Self {
        let f = self.field;
        let Rref { reduced, pivots, .. } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = Self::zeros(f, free.len(), self.cols);
        for (kr, &fc) in free.iter().enumerate() {
            k.set(kr, fc, f.one());
            for (i, &pc) in pivots.iter().enumerate() {
                // over characteristic 2, -a = a
                k.set(kr, pc, reduced.get(i, fc));
            }
        }
        k
    }

    /// Random invertible matrix of the requested structure, by rejection.
    pub fn random_invertible<R: RngCore + ?Sized>(
        field: F,
        n: usize,
        structure: Structure,
        rng: &mut R,
    ) -> Result<Self, MatrixError> {
        loop {
            let m = match structure {
                Structure::Dense => Self::random(field, n, n, rng),
                Structure::BlockCirculant { block } => {
                    if block == 0 || n % block != 0 {
                        return Err(MatrixError::Shape(format!(
                            "block size {block} does not divide {n}"
                        )));
                    }
                    let g = n / block;
                    BlockCirculant::random(field, g, g, block, rng).expand()
                }
            };
            if m.rref().rank == n {
                return Ok(m);
            }
        }
    }

    pub fn map<G: Field>(&self, field: G, f: impl Fn(F::Elem) -> G::Elem) -> Matrix<G> {
        Matrix {
            field,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl Matrix<Gf2> {
    /// Embeds a GF(2) matrix into GF(2^m).
    pub fn embed(&self, field: Gf2m) -> ExtMatrix {
        self.map(field, |b| if b { FieldElement::ONE } else { FieldElement::ZERO })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn identity_and_associativity() {
        let f = Gf2m::new(5).unwrap();
        let mut r = rng(1);
        let a = ExtMatrix::random(f, 5, 5, &mut r);
        let b = ExtMatrix::random(f, 5, 5, &mut r);
        let c = ExtMatrix::random(f, 5, 5, &mut r);
        assert_eq!(a.mul(&ExtMatrix::identity(f, 5)).unwrap(), a);
        assert_eq!(
            a.mul(&b).unwrap().mul(&c).unwrap(),
            a.mul(&b.mul(&c).unwrap()).unwrap()
        );
        assert!(matches!(a.mul(&ExtMatrix::zeros(f, 4, 2)), Err(MatrixError::Shape(_))));
    }

    #[test]
    fn rref_trivial_cases() {
        let f = Gf2m::new(7).unwrap();
        let i = ExtMatrix::identity(f, 4);
        let rr = i.rref();
        assert_eq!((rr.reduced.clone(), rr.rank, rr.transform.clone()), (i.clone(), 4, i.clone()));
        let z = ExtMatrix::zeros(f, 3, 5);
        let rr = z.rref();
        assert_eq!(rr.rank, 0);
        assert_eq!(rr.reduced, z);
        assert_eq!(rr.transform, ExtMatrix::identity(f, 3));
    }

    #[test]
    fn rref_is_idempotent_and_consistent() {
        let f = Gf2m::new(11).unwrap();
        let mut r = rng(2);
        for _ in 0..10 {
            let a = ExtMatrix::random(f, 8, 12, &mut r);
            let rr = a.rref();
            assert_eq!(rr.transform.mul(&a).unwrap(), rr.reduced);
            assert_eq!(rr.reduced.rref().reduced, rr.reduced);
            // solve-then-substitute on a consistent right-hand side
            let x: Vec<_> = (0..12).map(|_| f.random(&mut r)).collect();
            let b = a.mul_vec(&x).unwrap();
            let y = a.solve(&b).unwrap().found().unwrap();
            assert_eq!(a.mul_vec(&y).unwrap(), b);
            assert_eq!(rr.rank, 8);
        }
    }

    #[test]
    fn solve_examples() {
        let f = Gf2m::new(9).unwrap();
        let mut r = rng(3);
        let b: Vec<_> = (0..6).map(|_| f.random(&mut r)).collect();
        assert_eq!(ExtMatrix::identity(f, 6).solve(&b).unwrap(), Solution::Found(b.clone()));
        let a = ExtMatrix::random(f, 6, 9, &mut r);
        assert_eq!(a.solve(&[FieldElement::ZERO; 6]).unwrap(), Solution::Found(vec![FieldElement::ZERO; 9]));
        // rank-deficient with an inconsistent right-hand side
        let mut d = ExtMatrix::zeros(f, 2, 2);
        d.set(0, 0, FieldElement::ONE);
        d.set(1, 0, FieldElement::ONE);
        assert_eq!(d.solve(&[FieldElement::ONE, FieldElement::ZERO]).unwrap(), Solution::Inconsistent);
    }

    #[test]
    fn solve_invertible_binary_by_substitution() {
        let mut r = rng(4);
        for _ in 0..20 {
            let a = Matrix::random_invertible(Gf2, 10, Structure::Dense, &mut r).unwrap();
            let b: Vec<bool> = (0..10).map(|_| r.gen()).collect();
            let x = a.solve(&b).unwrap().found().unwrap();
            assert_eq!(a.mul_vec(&x).unwrap(), b);
            assert_eq!(a.invert().unwrap().mul_vec(&b).unwrap(), x);
        }
    }

    #[test]
    fn invert_examples() {
        let f = Gf2m::new(11).unwrap();
        let mut r = rng(5);
        assert_eq!(ExtMatrix::identity(f, 5).invert().unwrap(), ExtMatrix::identity(f, 5));
        let a = ExtMatrix::random_invertible(f, 12, Structure::Dense, &mut r).unwrap();
        let ai = a.invert().unwrap();
        assert_eq!(a.mul(&ai).unwrap(), ExtMatrix::identity(f, 12));
        assert_eq!(ai.invert().unwrap(), a);
        assert_eq!(ExtMatrix::zeros(f, 3, 3).invert(), Err(MatrixError::Singular));
    }

    #[test]
    fn random_invertible_block_circulant() {
        let f = Gf2m::new(13).unwrap();
        let mut r = rng(6);
        let one = ExtMatrix::random_invertible(f, 1, Structure::BlockCirculant { block: 1 }, &mut r).unwrap();
        assert!(!one.get(0, 0).is_zero());
        let s = ExtMatrix::random_invertible(f, 12, Structure::BlockCirculant { block: 4 }, &mut r).unwrap();
        assert!(BlockCirculant::compress(&s, 4).is_ok());
        let si = s.invert().unwrap();
        assert!(BlockCirculant::compress(&si, 4).is_ok());
        assert!(ExtMatrix::random_invertible(f, 10, Structure::BlockCirculant { block: 4 }, &mut r).is_err());
    }

    #[test]
    fn binary_singular_rate_matches_product_formula() {
        // P(random n x n over GF(2) invertible) = prod_{i=1}^{n} (1 - 2^-i)
        let expected: f64 = (1..=8).map(|i| 1.0 - 0.5f64.powi(i)).product();
        let mut r = rng(7);
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|_| Matrix::random(Gf2, 8, 8, &mut r).rank() == 8)
            .count();
        let p = hits as f64 / trials as f64;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((p - expected).abs() < 3.0 * sigma, "{p} vs {expected}");
    }

    #[test]
    fn right_kernel_annihilates() {
        let f = Gf2m::new(7).unwrap();
        let mut r = rng(8);
        let a = ExtMatrix::random(f, 4, 9, &mut r);
        let k = a.right_kernel();
        assert_eq!(k.rows(), 5);
        assert!(a.mul(&k.transpose()).unwrap().is_zero());
        assert_eq!(k.rank(), 5);
    }

    #[test]
    fn block_assembly() {
        let f = Gf2m::new(5).unwrap();
        let mut r = rng(9);
        let a = ExtMatrix::random(f, 6, 9, &mut r);
        let grid: Vec<Vec<_>> = (0..2).map(|i| (0..3).map(|j| a.block(i, j, 3)).collect()).collect();
        assert_eq!(ExtMatrix::from_blocks(&grid).unwrap(), a);
        let top = a.submatrix(0, 0, 2, 9);
        let bottom = a.submatrix(2, 0, 4, 9);
        assert_eq!(top.vstack(&bottom).unwrap(), a);
        let left = a.submatrix(0, 0, 6, 4);
        let right = a.submatrix(0, 4, 6, 5);
        assert_eq!(left.hstack(&right).unwrap(), a);
    }
}
