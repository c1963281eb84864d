//! McNie public-key encryption over rank-metric LRPC codes.
//!
//! Arithmetic lives in [`galois`] (GF(2^m) elements packed in `u128`) and
//! [`matrix`] (dense matrices generic over a [`matrix::Field`], plus packed
//! GF(2) matrices). [`lrpc`] builds and decodes LRPC codes, [`pke`] is the
//! encryption scheme itself, [`cca`] wraps it in a CCA2 conversion, and
//! [`codec`] owns every byte format. [`secest`] prices parameter sets and
//! [`sim`] measures decoding failure rates.

pub mod galois;
pub mod matrix;
pub mod lrpc;
pub mod params;
pub mod pke;
pub mod codec;
pub mod cca;
pub mod secest;
pub mod sim;

pub use galois::{FieldElement, Gf2m, Subspace};
pub use lrpc::{DecoderVariant, LrpcCode};
pub use matrix::{BitMatrix, ExtMatrix, Matrix};
pub use params::{NamedSet, ParamSet, Variant};
pub use pke::{decrypt, encrypt, keygen, Ciphertext, KeyPair, PrivateKey, PublicKey};
