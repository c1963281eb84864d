use rand::RngCore;

use super::{Field, Matrix, MatrixError};

/// A square circulant matrix, stored as its first row.
///
/// Row `i` is the first row cyclically shifted right by `i`, so entry
/// `(i, j)` is `first_row[(j - i) mod size]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circulant<F: Field> {
    field: F,
    first_row: Vec<F::Elem>,
}

impl<F: Field> Circulant<F> {
    pub fn new(field: F, first_row: Vec<F::Elem>) -> Self {
        Self { field, first_row }
    }

    pub fn identity(field: F, size: usize) -> Self {
        let mut first_row = vec![field.zero(); size];
        if size > 0 {
            first_row[0] = field.one();
        }
        Self { field, first_row }
    }

    pub fn random<R: RngCore + ?Sized>(field: F, size: usize, rng: &mut R) -> Self {
        Self {
            field,
            first_row: (0..size).map(|_| field.random(rng)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[F::Elem] {
        &self.first_row
    }

    pub fn expand(&self) -> Matrix<F> {
        let n = self.size();
        Matrix::from_fn(self.field, n, n, |i, j| self.first_row[(j + n - i) % n])
    }

    /// Inverse of [`Circulant::expand`]; fails unless `m` is circulant.
    pub fn compress(m: &Matrix<F>) -> Result<Self, MatrixError> {
        if !m.is_square() {
            return Err(MatrixError::Structure(format!(
                "{}x{} matrix cannot be circulant",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let first_row = m.row(0).to_vec();
        for i in 1..n {
            for j in 0..n {
                if m.get(i, j) != first_row[(j + n - i) % n] {
                    return Err(MatrixError::Structure(format!(
                        "entry ({i}, {j}) breaks the cyclic shift"
                    )));
                }
            }
        }
        Ok(Self {
            field: m.field(),
            first_row,
        })
    }
}

/// A rectangular grid of equally sized circulant blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCirculant<F: Field> {
    block_rows: usize,
    block_cols: usize,
    blocks: Vec<Circulant<F>>,
}

impl<F: Field> BlockCirculant<F> {
    pub fn new(block_rows: usize, block_cols: usize, blocks: Vec<Circulant<F>>) -> Result<Self, MatrixError> {
        if blocks.len() != block_rows * block_cols || blocks.is_empty() {
            return Err(MatrixError::Shape(format!(
                "{} blocks for a {block_rows}x{block_cols} grid",
                blocks.len()
            )));
        }
        let size = blocks[0].size();
        if blocks.iter().any(|b| b.size() != size) {
            return Err(MatrixError::Shape("blocks differ in size".into()));
        }
        Ok(Self {
            block_rows,
            block_cols,
            blocks,
        })
    }

    pub fn random<R: RngCore + ?Sized>(
        field: F,
        block_rows: usize,
        block_cols: usize,
        size: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            block_rows,
            block_cols,
            blocks: (0..block_rows * block_cols)
                .map(|_| Circulant::random(field, size, rng))
                .collect(),
        }
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn block_size(&self) -> usize {
        self.blocks[0].size()
    }

    /// Block `(bi, bj)`.
    pub fn block(&self, bi: usize, bj: usize) -> &Circulant<F> {
        &self.blocks[bi * self.block_cols + bj]
    }

    /// Blocks in row-major grid order.
    pub fn blocks(&self) -> &[Circulant<F>] {
        &self.blocks
    }

    pub fn expand(&self) -> Matrix<F> {
        let grid: Vec<Vec<Matrix<F>>> = (0..self.block_rows)
            .map(|bi| (0..self.block_cols).map(|bj| self.block(bi, bj).expand()).collect())
            .collect();
        Matrix::from_blocks(&grid).expect("uniform block grid")
    }

    pub fn compress(m: &Matrix<F>, size: usize) -> Result<Self, MatrixError> {
        if size == 0 || m.rows() % size != 0 || m.cols() % size != 0 {
            return Err(MatrixError::Structure(format!(
                "{}x{} is not a grid of {size}x{size} blocks",
                m.rows(),
                m.cols()
            )));
        }
        let (br, bc) = (m.rows() / size, m.cols() / size);
        let mut blocks = Vec::with_capacity(br * bc);
        for bi in 0..br {
            for bj in 0..bc {
                blocks.push(Circulant::compress(&m.block(bi, bj, size))?);
            }
        }
        Ok(Self {
            block_rows: br,
            block_cols: bc,
            blocks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::{FieldElement, Gf2m};
    use crate::matrix::{ExtMatrix, Gf2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn identity_round_trip() {
        let f = Gf2m::new(7).unwrap();
        let id = ExtMatrix::identity(f, 6);
        let c = Circulant::compress(&id).unwrap();
        assert_eq!(c.first_row()[0], FieldElement::ONE);
        assert!(c.first_row()[1..].iter().all(|x| x.is_zero()));
        assert_eq!(c, Circulant::identity(f, 6));
    }

    #[test]
    fn circulant_algebra_is_closed() {
        let f = Gf2m::new(11).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..10 {
            let a = Circulant::random(f, 8, &mut rng);
            let b = Circulant::random(f, 8, &mut rng);
            let (ea, eb) = (a.expand(), b.expand());
            assert_eq!(Circulant::compress(&ea).unwrap(), a);
            // the dense product is circulant again
            let prod = ea.mul(&eb).unwrap();
            assert!(Circulant::compress(&prod).is_ok());
            assert_eq!(prod, eb.mul(&ea).unwrap());
            assert!(Circulant::compress(&ea.add(&eb).unwrap()).is_ok());
            if let Ok(inv) = ea.invert() {
                assert!(Circulant::compress(&inv).is_ok());
            }
        }
    }

    #[test]
    fn non_circulant_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut m = Circulant::random(Gf2, 5, &mut rng).expand();
        let v = m.get(3, 1);
        m.set(3, 1, !v);
        assert!(matches!(Circulant::compress(&m), Err(MatrixError::Structure(_))));
        assert!(Circulant::compress(&Matrix::zeros(Gf2, 2, 3)).is_err());
    }

    #[test]
    fn block_circulant_round_trip() {
        let f = Gf2m::new(9).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let b = BlockCirculant::random(f, 2, 3, 4, &mut rng);
        let e = b.expand();
        assert_eq!((e.rows(), e.cols()), (8, 12));
        assert_eq!(BlockCirculant::compress(&e, 4).unwrap(), b);
        assert!(BlockCirculant::compress(&e, 3).is_err());
    }
}
