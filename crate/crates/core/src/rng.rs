//! Value-keyed random streams and sign-flip group elements.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose seed is
//! a pure function of `(master_seed, context, theta_index, replicate)`. No
//! generator is ever shared between work items, so the order in which a
//! parallel scheduler visits them cannot change any result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stream namespaces. Distinct contexts never share a stream even when the
/// numeric indices coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u64)]
pub enum StreamContext {
    SignFlip = 0x5349_474e,
    FullNull = 0x4655_4c4c,
    Permutation = 0x5045_524d,
    SimTimes = 0x5449_4d45,
    SimNoise = 0x4e4f_4953,
    Coverage = 0x434f_5645,
    PeakDistribution = 0x5045_414b,
    DesignSynth = 0x4445_5347,
    DesignInference = 0x4449_4e46,
    Custom = 0x4355_5354,
}

/// Address of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngKey {
    pub master_seed: u64,
    pub context: StreamContext,
    pub theta_index: u64,
    pub replicate: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngKey {
    pub fn new(master_seed: u64, context: StreamContext) -> Self {
        Self {
            master_seed,
            context,
            theta_index: 0,
            replicate: 0,
        }
    }

    pub fn with_theta(self, theta_index: u64) -> Self {
        Self {
            theta_index,
            ..self
        }
    }

    pub fn with_replicate(self, replicate: u64) -> Self {
        Self { replicate, ..self }
    }

    pub fn with_context(self, context: StreamContext) -> Self {
        Self { context, ..self }
    }

    fn words(&self) -> [u64; 4] {
        let a = splitmix64(self.master_seed ^ 0x7065_7269_6f64_6963);
        let b = splitmix64(a ^ self.context as u64);
        let c = splitmix64(b ^ self.theta_index);
        let d = splitmix64(c ^ self.replicate);
        [a ^ d, b ^ splitmix64(d), c ^ splitmix64(d ^ 1), d]
    }

    /// The generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(self.words()) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// A fresh master seed derived from this key, for nested experiments
    /// (e.g. the inference run inside one synthetic design replicate).
    pub fn child_seed(&self) -> u64 {
        let w = self.words();
        splitmix64(w[3] ^ w[0].rotate_left(17))
    }
}

/// An element of the sign-flip group: one ±1 per observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some((i, &s)) = signs.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidObservation {
                index: i,
                message: format!("sign must be +1 or -1, got {s}"),
            });
        }
        Ok(Self(signs))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn negation(n: usize) -> Self {
        Self(vec![-1; n])
    }

    /// Bit `i` set means coordinate `i` is flipped. Only the low `n` bits
    /// are read.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        assert!(n <= 64);
        Self((0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn is_negative(&self, i: usize) -> bool {
        self.0[i] < 0
    }

    /// Coordinate-wise product (the group operation).
    pub fn compose(&self, other: &SignPattern) -> Result<SignPattern> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect()))
    }

    pub fn sign<T: Real>(&self, i: usize) -> T {
        if self.0[i] < 0 {
            -T::one()
        } else {
            T::one()
        }
    }
}

/// Fill `out` with independent fair signs drawn from `rng`.
pub(crate) fn fill_signs<R: RngCore>(rng: &mut R, out: &mut [i8]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (i, s) in chunk.iter_mut().enumerate() {
            *s = if bits >> i & 1 == 1 { -1 } else { 1 };
        }
    }
}

/// Uniform draw from the sign-flip group of size `n`, determined by `key`.
pub fn sample_sign_pattern(n: usize, key: &RngKey) -> SignPattern {
    let mut signs = vec![1i8; n];
    fill_signs(&mut key.rng(), &mut signs);
    SignPattern(signs)
}
