//! Numerical tolerances and iteration budgets shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Poles with `||p| - 1| <= eps_circle` are treated as lying on the unit circle.
    pub eps_circle: f64,
    /// Relative distance below which computed roots are merged into one multiple root.
    pub cluster_tol: f64,
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    /// Relative residual accepted for a Riccati solution.
    pub ric_tol: f64,
    /// Spectral radii in `[1 - stab_margin, 1 + stab_margin]` never produce a hard verdict.
    pub stab_margin: f64,
    /// Relative distance used to decide that a point is an eigenvalue.
    pub eig_tol: f64,
    /// Tolerance of the rank chains used to read off Jordan block sizes.
    pub jordan_tol: f64,
    /// Condition numbers above this are reported as ill-conditioned.
    pub cond_max: f64,
    /// Relative tolerance for the exceptional-set test on `det L`.
    pub e_tol: f64,
    /// Relative determinant below which a pencil is declared singular.
    pub singular_tol: f64,
    pub max_iter: usize,
    pub n_restarts: usize,
    pub seed: u64,
    /// Raster resolution (cells per side) of the region classifier.
    pub grid_n: usize,
    /// Dilation radius, in cells, of the essential-spectrum band.
    pub dilate: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            eps_circle: 1e-9,
            cluster_tol: 1e-7,
            rank_tol: 1e-9,
            ric_tol: 1e-10,
            stab_margin: 1e-9,
            eig_tol: 1e-9,
            jordan_tol: 1e-7,
            cond_max: 1e12,
            e_tol: 1e-8,
            singular_tol: 1e-10,
            max_iter: 500,
            n_restarts: 8,
            seed: 0,
            grid_n: 400,
            dilate: 1,
        }
    }
}

impl Config {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Deterministic RNG for one call site, independent of call order.
    pub(crate) fn rng_for(&self, salt: u64) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        let mut h = self.seed ^ 0x9E37_79B9_7F4A_7C15;
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ salt;
        h = (h ^ (h >> 31)).wrapping_mul(0x94D0_49BB_1331_11EB);
        rand_chacha::ChaCha8Rng::seed_from_u64(h ^ (h >> 29))
    }
}
