//! Block Toeplitz coefficients, Hankel ranks and the Ho–Kalman realization.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, CVec, C64};
use crate::ratsym::Realization;

/// Coefficients `a_{-J}..a_J` of a block Toeplitz matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffWindow {
    pub m: usize,
    pub a0: CMat,
    /// `a_1..a_J`.
    pub plus: Vec<CMat>,
    /// `a_{-1}..a_{-J}`.
    pub minus: Vec<CMat>,
}

impl CoeffWindow {
    pub fn new(a0: CMat, plus: Vec<CMat>, minus: Vec<CMat>) -> Result<Self> {
        let m = a0.nrows();
        if m == 0 || a0.ncols() != m {
            return Err(Error::InvalidSymbol("a0 must be a nonempty square block".into()));
        }
        if plus.len() != minus.len() || plus.is_empty() {
            return Err(Error::InvalidSymbol("plus and minus windows must have the same positive length".into()));
        }
        if plus.iter().chain(&minus).any(|b| b.shape() != (m, m)) {
            return Err(Error::InvalidSymbol(format!("every coefficient block must be {m}×{m}")));
        }
        Ok(Self { m, a0, plus, minus })
    }

    /// Window of length `j` read off a realization.
    pub fn from_realization(real: &Realization, j: usize) -> Self {
        Self {
            m: real.m(),
            a0: real.r0().clone(),
            plus: markov_plus(real, j),
            minus: markov_minus(real, j),
        }
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// `a_k` for `|k| <= J`.
    pub fn coeff(&self, k: i64) -> &CMat {
        match k {
            0 => &self.a0,
            k if k > 0 => &self.plus[k as usize - 1],
            k => &self.minus[(-k) as usize - 1],
        }
    }
}

/// Block Hankel matrices `H_k^+ = [a_{i+j+1}]` and `H_k^- = [a_{-i-j-1}]`.
#[derive(Clone, Debug)]
pub struct HankelPair {
    pub k: usize,
    pub plus: CMat,
    pub minus: CMat,
}

impl HankelPair {
    pub fn build(cw: &CoeffWindow, k: usize) -> Result<Self> {
        if k == 0 || 2 * k - 1 > cw.len() {
            return Err(Error::InsufficientWindow(format!(
                "H_{k} needs {} coefficients, window has {}",
                2 * k.max(1) - 1,
                cw.len()
            )));
        }
        Ok(Self {
            k,
            plus: block_hankel(&cw.plus, k, 0),
            minus: block_hankel(&cw.minus, k, 0),
        })
    }
}

/// `k × k` block Hankel matrix with block `(i, j) = seq[i + j + offset]`.
fn block_hankel(seq: &[CMat], k: usize, offset: usize) -> CMat {
    let m = seq.first().map_or(0, |b| b.nrows());
    let mut h = CMat::zeros(k * m, k * m);
    for i in 0..k {
        for j in 0..k {
            h.view_mut((i * m, j * m), (m, m)).copy_from(&seq[i + j + offset]);
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HankelRanks {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    pub n_plus: usize,
    pub n_minus: usize,
    /// False when a rank sequence still increases at `kmax`.
    pub stabilized: bool,
}

pub fn hankel_ranks(cw: &CoeffWindow, kmax: usize, rank_tol: f64) -> Result<HankelRanks> {
    if kmax == 0 || 2 * kmax - 1 > cw.len() {
        return Err(Error::InsufficientWindow(format!(
            "kmax = {kmax} needs {} coefficients, window has {}",
            2 * kmax.max(1) - 1,
            cw.len()
        )));
    }
    let mut plus = Vec::with_capacity(kmax);
    let mut minus = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let hp = HankelPair::build(cw, k)?;
        plus.push(linalg::numerical_rank(&hp.plus, rank_tol));
        minus.push(linalg::numerical_rank(&hp.minus, rank_tol));
    }
    let rising = |r: &[usize]| r.len() >= 2 && r[r.len() - 1] > r[r.len() - 2];
    Ok(HankelRanks {
        n_plus: plus.iter().copied().max().unwrap_or(0),
        n_minus: minus.iter().copied().max().unwrap_or(0),
        stabilized: !rising(&plus) && !rising(&minus),
        plus,
        minus,
    })
}

/// `(F, G, H)` with Markov parameters `H F^(j-1) G`.
#[derive(Clone, Debug)]
pub struct StateTriple {
    pub f: CMat,
    pub g: CMat,
    pub h: CMat,
}

impl StateTriple {
    pub fn empty(m: usize) -> Self {
        Self {
            f: CMat::zeros(0, 0),
            g: CMat::zeros(0, m),
            h: CMat::zeros(m, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn markov(&self, count: usize) -> Vec<CMat> {
        let mut out = Vec::with_capacity(count);
        let mut fg = self.g.clone();
        for _ in 0..count {
            out.push(&self.h * &fg);
            fg = &self.f * &fg;
        }
        out
    }
}

/// Ho–Kalman: factor the block Hankel matrix of `coeffs` (`coeffs[0]` is the
/// first Markov parameter) and read `F` off the shifted Hankel matrix.
pub fn minimal_from_coeffs(coeffs: &[CMat], m: usize, rank_tol: f64) -> Result<StateTriple> {
    let kmax = coeffs.len() / 2;
    if kmax == 0 || coeffs.iter().all(|c| c.iter().all(|z| z.norm() == 0.0)) {
        return Ok(StateTriple::empty(m));
    }
    let n = linalg::decisive_rank(&block_hankel(coeffs, kmax, 0), rank_tol)?;
    if n == 0 {
        return Ok(StateTriple::empty(m));
    }
    let k = kmax.min(n + 1);
    let h = block_hankel(coeffs, k, 0);
    let hs = block_hankel(coeffs, k, 1);
    let (u, s, v) = linalg::svd(&h)?;
    let u = u.columns(0, n).into_owned();
    let v = v.columns(0, n).into_owned();
    if s[n - 1] <= 0.0 {
        return Err(Error::IllConditioned("zero singular value inside the numerical rank".into()));
    }
    let root = CMat::from_fn(n, n, |i, j| if i == j { c64(s[i].sqrt(), 0.0) } else { C64::default() });
    let root_inv = CMat::from_fn(n, n, |i, j| if i == j { c64(1.0 / s[i].sqrt(), 0.0) } else { C64::default() });
    let obs = &u * &root;
    let ctr = &root * v.adjoint();
    let f = &root_inv * u.adjoint() * hs * &v * &root_inv;
    let triple = StateTriple {
        f,
        g: ctr.columns(0, m).into_owned(),
        h: obs.rows(0, m).into_owned(),
    };
    let scale = 1.0 + coeffs.iter().map(linalg::fro_norm).fold(0.0, f64::max);
    let err = triple
        .markov(coeffs.len())
        .iter()
        .zip(coeffs)
        .map(|(a, b)| linalg::fro_norm(&(a - b)))
        .fold(0.0, f64::max);
    if err >= 1e-8 * scale {
        return Err(Error::IllConditioned(format!(
            "realization reproduces the coefficients only to {err:e}"
        )));
    }
    Ok(triple)
}

/// `C A^(j-1) B` for `j = 1..=count`.
pub fn markov_plus(real: &Realization, count: usize) -> Vec<CMat> {
    markov_of(real.c(), real.a(), real.b(), count)
}

/// `gamma alpha^(j-1) beta` for `j = 1..=count`.
pub fn markov_minus(real: &Realization, count: usize) -> Vec<CMat> {
    markov_of(real.gamma(), real.alpha(), real.beta(), count)
}

fn markov_of(h: &CMat, f: &CMat, g: &CMat, count: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(count);
    let mut v = g.clone();
    for _ in 0..count {
        out.push(h * &v);
        v = f * &v;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Largest Jordan block of `alpha` at an eigenvalue on the unit circle.
    pub max_block: usize,
    /// `max_j |a_{-j}| / binom(j, max_block - 1)` over the window.
    pub bound: f64,
    pub ok: bool,
    /// Index attaining `bound`.
    pub worst_j: usize,
    /// Whether the ratio sequence levels off over the second half of the window.
    pub bounded_tail: bool,
}

/// Polynomial growth check of `a_{-j}` against the on-circle Jordan structure.
pub fn growth_bound_check(real: &Realization, window: usize, cfg: &Config) -> Result<GrowthReport> {
    if window < 2 {
        return Err(Error::InsufficientWindow("growth check needs at least two coefficients".into()));
    }
    let max_block = max_circle_block(real.alpha(), cfg)?;
    let ratios: Vec<f64> = markov_minus(real, window)
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let j = i + 1;
            spectral_norm(a) / linalg::binom(j, max_block - 1).max(1.0)
        })
        .collect();
    let (worst_j, bound) = ratios
        .iter()
        .enumerate()
        .fold((1, 0.0), |best, (i, &r)| if r > best.1 { (i + 1, r) } else { best });
    let ok = ratios.iter().all(|&r| r <= bound);
    Ok(GrowthReport {
        max_block,
        bound,
        ok,
        worst_j,
        bounded_tail: tail_is_bounded(&ratios),
    })
}

fn spectral_norm(a: &CMat) -> f64 {
    linalg::singular_values(a).first().copied().unwrap_or(0.0)
}

/// Log-log slope of the ratios over the second half of the window below 1/2.
fn tail_is_bounded(ratios: &[f64]) -> bool {
    let n = ratios.len();
    let (j0, j1) = (n / 2, n - 1);
    if j1 <= j0 {
        return true;
    }
    let (r0, r1) = (ratios[j0], ratios[j1]);
    if r1 <= r0 || r0 == 0.0 {
        return true;
    }
    let slope = (r1 / r0).ln() / ((j1 + 1) as f64 / (j0 + 1) as f64).ln();
    slope < 0.5
}

/// Largest Jordan block over eigenvalues of `alpha` on the unit circle,
/// from the rank chain of `(alpha - mu I)^k`; 1 when there are none.
fn max_circle_block(alpha: &CMat, cfg: &Config) -> Result<usize> {
    let n = alpha.nrows();
    if n == 0 {
        return Ok(1);
    }
    let eig = linalg::eigenvalues(alpha)?;
    let groups = crate::poly::cluster_points(&eig, cfg.jordan_tol.sqrt());
    let scale = 1.0 + linalg::fro_norm(alpha);
    let mut best = 1;
    for (mu, mult) in groups {
        if (mu.norm() - 1.0).abs() > cfg.jordan_tol.sqrt() || mult < 2 {
            continue;
        }
        let shifted = alpha - CMat::identity(n, n) * mu;
        let mut power = CMat::identity(n, n);
        let mut prev_rank = n;
        for k in 1..=mult {
            power = &power * &shifted;
            let s = linalg::singular_values(&power);
            let tol = cfg.jordan_tol * scale.powi(k as i32);
            let rank = s.iter().filter(|&&v| v > tol).count();
            if rank == prev_rank {
                break;
            }
            best = best.max(k);
            prev_rank = rank;
        }
    }
    Ok(best)
}

/// `N × N` block leading section with block `(i, j) = a_{i-j}`.
pub fn toeplitz_truncation(cw: &CoeffWindow, n: usize) -> Result<CMat> {
    if n == 0 || n > cw.len() + 1 {
        return Err(Error::InsufficientWindow(format!(
            "a {n}-block section needs {} coefficients per side, window has {}",
            n.saturating_sub(1),
            cw.len()
        )));
    }
    let m = cw.m;
    let mut t = CMat::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            t.view_mut((i * m, j * m), (m, m))
                .copy_from(cw.coeff(i as i64 - j as i64));
        }
    }
    Ok(t)
}

/// Image of `z^n w` under the operator: analytic coefficients plus the
/// anti-analytic remainder `gamma alpha^n (zI - alpha)^(-1) beta w` that the
/// projection discards.
#[derive(Clone, Debug)]
pub struct MonomialImage {
    /// `c_0..c_J` with `c_j = a_{j-n} w`.
    pub coeffs: Vec<CVec>,
    pub remainder_gamma: CMat,
    pub remainder_alpha: CMat,
    pub remainder_beta_w: CVec,
}

pub fn apply_symbol_to_monomial(real: &Realization, n: usize, w: &CVec, j: usize) -> Result<MonomialImage> {
    if j < n {
        return Err(Error::Precondition(format!("window J = {j} is shorter than the degree n = {n}")));
    }
    if w.len() != real.m() {
        return Err(Error::Precondition(format!("w must have length {}", real.m())));
    }
    let m = real.m();
    let mut coeffs = vec![CVec::zeros(m); j + 1];
    // z^n (zI - alpha)^-1 = z^(n-1) + z^(n-2) alpha + ... + alpha^(n-1) + alpha^n (zI - alpha)^-1
    let mut v = real.beta() * w;
    for i in 0..n {
        coeffs[n - 1 - i] = real.gamma() * &v;
        v = real.alpha() * &v;
    }
    coeffs[n] = real.r0() * w;
    let mut u = real.b() * w;
    for c in coeffs.iter_mut().skip(n + 1) {
        *c = real.c() * &u;
        u = real.a() * &u;
    }
    Ok(MonomialImage {
        coeffs,
        remainder_gamma: real.gamma() * linalg::matrix_power(real.alpha(), n),
        remainder_alpha: real.alpha().clone(),
        remainder_beta_w: real.beta() * w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_matrix, scalar_matrix, ONE};

    fn s(x: f64) -> CMat {
        scalar_matrix(c64(x, 0.0))
    }

    pub(crate) fn example2() -> Realization {
        Realization::new(s(1.0), s(0.0), s(1.0), s(1.0), s(1.0), s(2.0), s(1.0)).unwrap()
    }

    fn example3() -> Realization {
        Realization::new(
            s(0.0),
            s(0.0),
            s(1.0),
            s(1.0),
            real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]]),
            real_matrix(&[&[1.0], &[1.0]]),
            real_matrix(&[&[2.5, 1.5]]),
        )
        .unwrap()
    }

    fn scalars(v: &[CMat]) -> Vec<f64> {
        v.iter().map(|b| b[(0, 0)].re).collect()
    }

    fn seq(v: &[f64]) -> Vec<CMat> {
        v.iter().map(|&x| s(x)).collect()
    }

    #[test]
    fn markov_examples() {
        assert_eq!(scalars(&markov_plus(&example2(), 3)), vec![1.0, 0.0, 0.0]);
        assert_eq!(scalars(&markov_minus(&example2(), 3)), vec![2.0, 2.0, 2.0]);
        assert_eq!(scalars(&markov_minus(&example3(), 4)), vec![4.0, 1.0, 4.0, 1.0]);
        let geo = Realization::new(s(0.0), s(0.5), s(1.0), s(1.0), CMat::zeros(0, 0), CMat::zeros(0, 1), CMat::zeros(1, 0)).unwrap();
        assert_eq!(scalars(&markov_plus(&geo, 3)), vec![1.0, 0.5, 0.25]);
        assert_eq!(scalars(&markov_minus(&geo, 2)), vec![0.0, 0.0]);
    }

    #[test]
    fn hankel_rank_examples() {
        let cw = CoeffWindow::from_realization(&example2(), 5);
        let r = hankel_ranks(&cw, 3, 1e-9).unwrap();
        assert_eq!((r.plus.clone(), r.minus.clone()), (vec![1, 1, 1], vec![1, 1, 1]));
        assert_eq!((r.n_plus, r.n_minus), (1, 1));
        assert!(r.stabilized);

        let r = hankel_ranks(&CoeffWindow::from_realization(&example3(), 7), 4, 1e-9).unwrap();
        assert_eq!(r.n_minus, 2);
        assert_eq!(r.n_plus, 1);

        let zero = CoeffWindow::new(s(0.0), seq(&[0.0; 5]), seq(&[0.0; 5])).unwrap();
        let r = hankel_ranks(&zero, 3, 1e-9).unwrap();
        assert_eq!((r.n_plus, r.n_minus), (0, 0));

        assert!(matches!(hankel_ranks(&zero, 4, 1e-9), Err(Error::InsufficientWindow(_))));
    }

    #[test]
    fn ho_kalman_examples() {
        let t = minimal_from_coeffs(&seq(&[2.0; 5]), 1, 1e-9).unwrap();
        assert_eq!(t.dim(), 1);
        assert!((t.f[(0, 0)] - ONE).norm() < 1e-12);
        assert!(((&t.h * &t.g)[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-12);

        let t = minimal_from_coeffs(&seq(&[4.0, 1.0, 4.0, 1.0, 4.0]), 1, 1e-9).unwrap();
        assert_eq!(t.dim(), 2);
        let mut eig = linalg::eigenvalues(&t.f).unwrap();
        eig.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((eig[0] + ONE).norm() < 1e-10 && (eig[1] - ONE).norm() < 1e-10);
        for (a, b) in t.markov(5).iter().zip(seq(&[4.0, 1.0, 4.0, 1.0, 4.0])) {
            assert!((a - b).norm() < 1e-10);
        }

        assert_eq!(minimal_from_coeffs(&seq(&[0.0; 5]), 1, 1e-9).unwrap().dim(), 0);
    }

    #[test]
    fn growth_examples() {
        let cfg = Config::default();
        let g = growth_bound_check(&example2(), 20, &cfg).unwrap();
        assert_eq!(g.max_block, 1);
        assert!((g.bound - 2.0).abs() < 1e-12);
        assert!(g.ok && g.bounded_tail);

        let jordan = Realization::new(
            s(0.0),
            CMat::zeros(0, 0),
            CMat::zeros(0, 1),
            CMat::zeros(1, 0),
            real_matrix(&[&[1.0, 1.0], &[0.0, 1.0]]),
            real_matrix(&[&[0.0], &[1.0]]),
            real_matrix(&[&[1.0, 0.0]]),
        )
        .unwrap();
        assert_eq!(scalars(&markov_minus(&jordan, 4)), vec![0.0, 1.0, 2.0, 3.0]);
        let g = growth_bound_check(&jordan, 30, &cfg).unwrap();
        assert_eq!(g.max_block, 2);
        assert!(g.ok && g.bounded_tail);

        let plain = Realization::constant(s(3.0)).unwrap();
        let g = growth_bound_check(&plain, 5, &cfg).unwrap();
        assert_eq!((g.max_block, g.bound, g.ok), (1, 0.0, true));
    }

    #[test]
    fn truncation_examples() {
        let cw = CoeffWindow::from_realization(&example2(), 4);
        let t = toeplitz_truncation(&cw, 3).unwrap();
        let want = real_matrix(&[&[1.0, 2.0, 2.0], &[1.0, 1.0, 2.0], &[0.0, 1.0, 1.0]]);
        assert_eq!(t, want);
        assert_eq!(toeplitz_truncation(&cw, 1).unwrap(), s(1.0));
        assert!(toeplitz_truncation(&cw, 6).is_err());
    }

    #[test]
    fn monomial_examples() {
        let w = CVec::from_element(1, ONE);
        let img = apply_symbol_to_monomial(&example2(), 0, &w, 3).unwrap();
        let c: Vec<f64> = img.coeffs.iter().map(|v| v[0].re).collect();
        assert_eq!(c, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(img.remainder_gamma, s(1.0));
        assert_eq!(img.remainder_alpha, s(1.0));
        assert_eq!(img.remainder_beta_w[0], c64(2.0, 0.0));

        let img = apply_symbol_to_monomial(&example2(), 1, &w, 3).unwrap();
        let c: Vec<f64> = img.coeffs.iter().map(|v| v[0].re).collect();
        assert_eq!(c, vec![2.0, 1.0, 1.0, 0.0]);

        let plain = Realization::constant(s(3.0)).unwrap();
        let img = apply_symbol_to_monomial(&plain, 2, &w, 3).unwrap();
        assert_eq!(img.remainder_beta_w.len(), 0);
    }
}
