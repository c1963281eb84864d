use std::fmt;

use rand::RngCore;

use super::{Gf2, Matrix, MatrixError, Solution, Structure};
use crate::galois::FieldElement;

/// Bit-packed dense matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(64) {
            let s: String = (0..self.cols.min(128))
                .map(|j| if self.get(i, j) { '1' } else { '.' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(64);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
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
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.words[i * self.stride + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let w = &mut self.words[i * self.stride + j / 64];
        if v {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.rows)
    }

    pub fn to_matrix(&self) -> Matrix<Gf2> {
        Matrix::from_fn(Gf2, self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub fn from_matrix(m: &Matrix<Gf2>) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Matrix with the given rows of `self`, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), self.cols);
        for (dst, &src) in rows.iter().enumerate() {
            m.words[dst * self.stride..(dst + 1) * self.stride].copy_from_slice(self.row_words(src));
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let stride = out.stride;
        for i in 0..self.rows {
            for t in 0..self.cols {
                if self.get(i, t) {
                    xor_into(&mut out.words[i * stride..(i + 1) * stride], other.row_words(t));
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a packed bit vector `x` of length `cols`.
    pub fn mul_packed(&self, x: &[u64]) -> Vec<bool> {
        debug_assert_eq!(x.len(), self.stride);
        (0..self.rows)
            .map(|i| {
                self.row_words(i)
                    .iter()
                    .zip(x)
                    .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                    & 1
                    == 1
            })
            .collect()
    }

    /// `self * x` for an unpacked bit vector.
    pub fn mul_bits(&self, x: &[bool]) -> Result<Vec<bool>, MatrixError> {
        if x.len() != self.cols {
            return Err(MatrixError::Shape(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self.mul_packed(&pack(x)))
    }

    /// Row vector over GF(2^m) times this binary matrix: `v * self`.
    pub fn left_mul_ext(&self, v: &[FieldElement]) -> Result<Vec<FieldElement>, MatrixError> {
        if v.len() != self.rows {
            return Err(MatrixError::Shape(format!(
                "vector of length {} times {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![FieldElement::ZERO; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (w, &word) in self.row_words(i).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out[w * 64 + b] += a;
                    bits &= bits - 1;
                }
            }
        }
        Ok(out)
    }

    /// Indices of the lexicographically first set of rows spanning the row space.
    pub fn independent_rows(&self) -> Vec<usize> {
        // echelon basis keyed by pivot column, reduced greedily row by row
        let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
        let mut chosen = Vec::new();
        for i in 0..self.rows {
            let mut row = self.row_words(i).to_vec();
            for (p, b) in &basis {
                if (row[p / 64] >> (p % 64)) & 1 == 1 {
                    xor_into(&mut row, b);
                }
            }
            if let Some(p) = first_set(&row) {
                // keep the basis sorted by pivot so one forward pass reduces fully
                let pos = basis.partition_point(|(q, _)| *q < p);
                basis.insert(pos, (p, row));
                chosen.push(i);
                if chosen.len() == self.cols {
                    break;
                }
            }
        }
        chosen
    }

    pub fn rank(&self) -> usize {
        self.independent_rows().len()
    }

    pub fn invert(&self) -> Result<Self, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::Shape(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let s = self.stride;
        // augmented rows [A | I], 2s words each
        let mut aug: Vec<Vec<u64>> = (0..n)
            .map(|i| {
                let mut r = vec![0u64; 2 * s];
                r[..s].copy_from_slice(self.row_words(i));
                r[s + i / 64] |= 1 << (i % 64);
                r
            })
            .collect();
        for col in 0..n {
            let (w, b) = (col / 64, col % 64);
            let p = (col..n)
                .find(|&i| (aug[i][w] >> b) & 1 == 1)
                .ok_or(MatrixError::Singular)?;
            aug.swap(col, p);
            let pivot = aug[col].clone();
            for (i, row) in aug.iter_mut().enumerate() {
                if i != col && (row[w] >> b) & 1 == 1 {
                    xor_into(row, &pivot);
                }
            }
        }
        let mut inv = Self::zeros(n, n);
        for (i, row) in aug.iter().enumerate() {
            inv.words[i * s..(i + 1) * s].copy_from_slice(&row[s..]);
        }
        Ok(inv)
    }

    /// Solves `self * x = b`; also returns the rank of `self`.
    pub fn solve(&self, b: &[bool]) -> Result<(Solution<bool>, usize), MatrixError> {
        if b.len() != self.rows {
            return Err(MatrixError::Shape(format!(
                "right-hand side of length {} for {} equations",
                b.len(),
                self.rows
            )));
        }
        let s = self.stride;
        let mut rows: Vec<(Vec<u64>, bool)> =
            (0..self.rows).map(|i| (self.row_words(i).to_vec(), b[i])).collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.cols {
            if r == rows.len() {
                break;
            }
            let (w, bit) = (col / 64, col % 64);
            let Some(p) = (r..rows.len()).find(|&i| (rows[i].0[w] >> bit) & 1 == 1) else {
                continue;
            };
            rows.swap(r, p);
            let (pw, pb) = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && (row.0[w] >> bit) & 1 == 1 {
                    xor_into(&mut row.0, &pw);
                    row.1 ^= pb;
                }
            }
            pivots.push(col);
            r += 1;
        }
        debug_assert!(rows.iter().all(|(w, _)| w.len() == s));
        let rank = pivots.len();
        if rows[rank..].iter().any(|(_, v)| *v) {
            return Ok((Solution::Inconsistent, rank));
        }
        let mut x = vec![false; self.cols];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = rows[i].1;
        }
        Ok((Solution::Found(x), rank))
    }

    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for w in &mut m.words {
            *w = rng.next_u64();
        }
        m.clear_padding();
        m
    }

    pub fn random_invertible<R: RngCore + ?Sized>(
        n: usize,
        structure: Structure,
        rng: &mut R,
    ) -> Result<Self, MatrixError> {
        Ok(Self::from_matrix(&Matrix::random_invertible(Gf2, n, structure, rng)?))
    }

    fn clear_padding(&mut self) {
        let tail = self.cols % 64;
        if tail != 0 {
            for i in 0..self.rows {
                self.words[i * self.stride + self.stride - 1] &= (1u64 << tail) - 1;
            }
        }
    }
}

/// Packs bits into 64-bit words, bit `j` at word `j / 64`, position `j % 64`.
pub fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (j, &b) in bits.iter().enumerate() {
        if b {
            out[j / 64] |= 1 << (j % 64);
        }
    }
    out
}

fn first_set(words: &[u64]) -> Option<usize> {
    words
        .iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
