use alloc::format;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analysis::Plant;
use crate::linalg::{eigenvalues, Matrix};
use crate::{Error, Result};

pub const DEFAULT_STABILITY_MARGIN: f64 = 0.1;

/// Random strictly proper plant with `N₁ = [I 0]`, `N₂ = [0 I]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RandomSystemSpec {
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub stability_margin: f64,
    pub seed: u64,
    /// Stream of the generator; batch runs use the system index.
    #[cfg_attr(feature = "serde", serde(default))]
    pub stream: u64,
}

impl RandomSystemSpec {
    pub fn new(n_x: usize, n_u: usize, n_y: usize, seed: u64, stream: u64) -> Self {
        Self { n_x, n_u, n_y, stability_margin: DEFAULT_STABILITY_MARGIN, seed, stream }
    }
}

/// `A = M − (α(M) + margin) I` with standard normal `M`, so the spectral
/// abscissa of `A` is `−margin` (nudged below by a relative `1e-9`).
/// `B` and `C` are standard normal.
pub fn generate_random_system(spec: &RandomSystemSpec) -> Result<Plant> {
    let RandomSystemSpec { n_x, n_u, n_y, stability_margin, .. } = *spec;
    if n_x == 0 || n_u == 0 || n_y == 0 {
        return Err(Error::Dimension("random system dimensions must be positive".into()));
    }
    if !(stability_margin > 0.0) || !stability_margin.is_finite() {
        return Err(Error::InvalidInput(format!("stability margin {stability_margin} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);
    let mut normal = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal));
    let m = normal(n_x, n_x);
    let b = normal(n_x, n_u);
    let c = normal(n_y, n_x);
    let alpha = eigenvalues(&m)?.spectral_abscissa;
    let shift = alpha + stability_margin + 1e-9 * alpha.abs().max(1.0);
    let a = &m - &Matrix::identity(n_x).scale(shift);
    let n1 = Matrix::hstack(&[&Matrix::identity(n_x), &Matrix::zeros(n_x, n_y)])?;
    let n2 = Matrix::hstack(&[&Matrix::zeros(n_y, n_x), &Matrix::identity(n_y)])?;
    Plant::new(a, b, c, n1, n2)
}

/// Mixes a master seed, a run index and a purpose tag into an independent
/// 64-bit seed (SplitMix64 finaliser).
pub fn derive_seed(master: u64, index: u64, salt: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(salt.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
