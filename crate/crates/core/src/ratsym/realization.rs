use rand::Rng;

use super::fractions::{markov_at_infinity, taylor_at_origin};
use super::{eval_rational_matrix, partial_fractions, RationalMatrix};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::hokalman::{minimal_from_coeffs, StateTriple};
use crate::linalg::{self, c64, CMat, C64, ONE};

/// `Omega(z) = R0 + z C (I - zA)^-1 B + gamma (zI - alpha)^-1 beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    r0: CMat,
    a: CMat,
    b: CMat,
    c: CMat,
    alpha: CMat,
    beta: CMat,
    gamma: CMat,
}

impl Realization {
    /// Checks block shapes only; see [`Realization::validate`] for the
    /// stability and minimality requirements.
    pub fn new(r0: CMat, a: CMat, b: CMat, c: CMat, alpha: CMat, beta: CMat, gamma: CMat) -> Result<Self> {
        let m = r0.nrows();
        let np = a.nrows();
        let nm = alpha.nrows();
        let shapes = [
            ("R0", r0.shape(), (m, m)),
            ("A", a.shape(), (np, np)),
            ("B", b.shape(), (np, m)),
            ("C", c.shape(), (m, np)),
            ("alpha", alpha.shape(), (nm, nm)),
            ("beta", beta.shape(), (nm, m)),
            ("gamma", gamma.shape(), (m, nm)),
        ];
        if m == 0 {
            return Err(Error::InvalidRealization("R0 must be nonempty".into()));
        }
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::InvalidRealization(format!(
                    "{name} is {}×{}, expected {}×{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        Ok(Self { r0, a, b, c, alpha, beta, gamma })
    }

    pub fn constant(r0: CMat) -> Result<Self> {
        let m = r0.nrows();
        Self::new(r0, CMat::zeros(0, 0), CMat::zeros(0, m), CMat::zeros(m, 0), CMat::zeros(0, 0), CMat::zeros(0, m), CMat::zeros(m, 0))
    }

    fn from_triples(r0: CMat, plus: StateTriple, minus: StateTriple) -> Result<Self> {
        Self::new(r0, plus.f, plus.g, plus.h, minus.f, minus.g, minus.h)
    }

    pub fn m(&self) -> usize {
        self.r0.nrows()
    }
    pub fn n_plus(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_minus(&self) -> usize {
        self.alpha.nrows()
    }
    pub fn r0(&self) -> &CMat {
        &self.r0
    }
    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn c(&self) -> &CMat {
        &self.c
    }
    pub fn alpha(&self) -> &CMat {
        &self.alpha
    }
    pub fn beta(&self) -> &CMat {
        &self.beta
    }
    pub fn gamma(&self) -> &CMat {
        &self.gamma
    }

    /// True when every block is real.
    pub fn is_real(&self) -> bool {
        [&self.r0, &self.a, &self.b, &self.c, &self.alpha, &self.beta, &self.gamma]
            .iter()
            .all(|m| m.iter().all(|z| z.im == 0.0))
    }

    /// `A` stable, `alpha` semi-stable, both triples minimal.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        let rho = linalg::spectral_radius(&self.a)?;
        if rho >= 1.0 {
            return Err(Error::InvalidRealization(format!("A is not stable (spectral radius {rho})")));
        }
        let rho = linalg::clustered_eigenvalues(&self.alpha, cfg.jordan_tol.sqrt())?
            .iter()
            .fold(0.0f64, |r, (mu, _)| r.max(mu.norm()));
        if rho > 1.0 + cfg.eps_circle {
            return Err(Error::InvalidRealization(format!(
                "alpha is not semi-stable (spectral radius {rho})"
            )));
        }
        if !is_minimal(&self.c, &self.a, &self.b, cfg.rank_tol) {
            return Err(Error::InvalidRealization("(C, A, B) is not minimal".into()));
        }
        if !is_minimal(&self.gamma, &self.alpha, &self.beta, cfg.rank_tol) {
            return Err(Error::InvalidRealization("(gamma, alpha, beta) is not minimal".into()));
        }
        Ok(())
    }
}

/// Full rank of `[G, FG, ..]` and of `[H; HF; ..]`.
pub(crate) fn is_minimal(h: &CMat, f: &CMat, g: &CMat, rank_tol: f64) -> bool {
    let n = f.nrows();
    if n == 0 {
        return true;
    }
    let mut ctr = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(n);
    let mut fg = g.clone();
    let mut hf = h.clone();
    for _ in 0..n {
        ctr.push(fg.clone());
        obs.push(hf.clone());
        fg = f * &fg;
        hf = &hf * f;
    }
    let ctr = linalg::hstack(&ctr.iter().collect::<Vec<_>>());
    let obs = linalg::vstack(&obs.iter().collect::<Vec<_>>());
    linalg::numerical_rank(&ctr, rank_tol) == n && linalg::numerical_rank(&obs, rank_tol) == n
}

pub fn eval_realization(real: &Realization, z: C64) -> Result<CMat> {
    let cond_max = Config::default().cond_max;
    let np = real.n_plus();
    let nm = real.n_minus();
    let mut out = real.r0.clone();
    if np > 0 {
        let lhs = CMat::identity(np, np) - &real.a * z;
        if linalg::cond(&lhs) > cond_max {
            return Err(Error::PoleHit { z });
        }
        let x = linalg::solve(&lhs, &real.b).ok_or(Error::PoleHit { z })?;
        out += &real.c * x * z;
    }
    if nm > 0 {
        let lhs = CMat::identity(nm, nm) * z - &real.alpha;
        if linalg::cond(&lhs) > cond_max {
            return Err(Error::PoleHit { z });
        }
        let x = linalg::solve(&lhs, &real.beta).ok_or(Error::PoleHit { z })?;
        out += &real.gamma * x;
    }
    Ok(out)
}

/// Splits the symbol into the principal parts at closed-disc poles and the
/// rest, and realizes each part minimally.
pub fn split_and_realize(sym: &RationalMatrix, cfg: &Config) -> Result<Realization> {
    let m = sym.m();
    let pf = partial_fractions(sym, cfg)?;
    let (minus, plus): (Vec<_>, Vec<_>) = pf
        .principal_parts()
        .into_iter()
        .partition(|(p, _)| p.norm() <= 1.0 + cfg.eps_circle);

    let bound_minus: usize = minus.iter().map(|(_, r)| m * r.len()).sum();
    let minus_triple = if bound_minus == 0 {
        StateTriple::empty(m)
    } else {
        let markov = markov_at_infinity(&minus, m, 2 * bound_minus + 2);
        minimal_from_coeffs(&markov, m, cfg.rank_tol)?
    };

    let bound_plus: usize = m * (pf.poly_part.len() - 1) + plus.iter().map(|(_, r)| m * r.len()).sum::<usize>();
    let taylor = taylor_at_origin(&pf.poly_part, &plus, m, 2 * bound_plus + 3);
    let r0 = taylor[0].clone();
    let plus_triple = if bound_plus == 0 {
        StateTriple::empty(m)
    } else {
        minimal_from_coeffs(&taylor[1..], m, cfg.rank_tol)?
    };

    let real = Realization::from_triples(r0, plus_triple, minus_triple)?;
    real.validate(cfg)?;
    check_against_symbol(sym, &real, cfg)?;
    Ok(real)
}

fn check_against_symbol(sym: &RationalMatrix, real: &Realization, cfg: &Config) -> Result<()> {
    let mut avoid: Vec<C64> = sym.poles(cfg.cluster_tol).into_iter().map(|(p, _)| p).collect();
    avoid.extend(linalg::eigenvalues(real.alpha())?);
    avoid.extend(linalg::eigenvalues(real.a())?.into_iter().filter(|a| a.norm() > 1e-13).map(|a| ONE / a));
    let mut rng = cfg.rng_for(0x5245_414c);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 50 && attempts < 5000 {
        attempts += 1;
        let r = rng.random_range(0.2..2.5);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let z = c64(r * th.cos(), r * th.sin());
        if avoid.iter().any(|p| (z - p).norm() < 0.05) {
            continue;
        }
        let want = eval_rational_matrix(sym, z)?;
        let got = eval_realization(real, z)?;
        let err = linalg::fro_norm(&(got - &want));
        if err > 1e-8 * 1.0f64.max(linalg::fro_norm(&want)) {
            return Err(Error::IllConditioned(format!(
                "realization reproduces the symbol only to {err:e} at {z}"
            )));
        }
        checked += 1;
    }
    Ok(())
}
