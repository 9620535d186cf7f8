//! Resolvent membership through the algebraic Riccati equation
//! `Q = alpha Q A + (beta - alpha Q B) D^-1 (C - gamma Q A)`,
//! `D = R0 - gamma Q B - lambda I`, and classification of the complement
//! of the essential spectrum.

mod regions;

pub use regions::{classify_components, Bbox, CellLabel, Component, Probe, RegionMap};

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, C64};
use crate::pencil::{assemble_pencil, det_coeffs, exceptional_set, PencilL};
use crate::ratsym::Realization;

/// Zeros of `det L(lambda, ·)` closer than this to the unit circle (in the
/// transformed variable) block the zero-count certificate.
const ZERO_BAND: f64 = 1e-7;

/// Residual at which the fixed-point iteration hands over to Newton.
const NEWTON_HANDOVER: f64 = 1e-6;

const NEWTON_STEPS: usize = 40;

#[derive(Clone, Debug)]
pub struct RiccatiProblem {
    pub real: Realization,
    pub lambda: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Resolvent,
    NotResolvent,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certificate {
    #[serde(rename = "stabilizing-solution")]
    StabilizingSolution,
    #[serde(rename = "in-E(Omega)")]
    InExceptionalSet,
    #[serde(rename = "alpha-only-exact")]
    AlphaOnlyExact,
    #[serde(rename = "zero-count")]
    ZeroCount,
    #[serde(rename = "near-essential-spectrum")]
    NearEssentialSpectrum,
    #[serde(rename = "marginal-stability")]
    MarginalStability,
    #[serde(rename = "no-stabilizing-solution-found")]
    NoSolutionFound,
}

impl Certificate {
    pub fn tag(self) -> &'static str {
        match self {
            Self::StabilizingSolution => "stabilizing-solution",
            Self::InExceptionalSet => "in-E(Omega)",
            Self::AlphaOnlyExact => "alpha-only-exact",
            Self::ZeroCount => "zero-count",
            Self::NearEssentialSpectrum => "near-essential-spectrum",
            Self::MarginalStability => "marginal-stability",
            Self::NoSolutionFound => "no-stabilizing-solution-found",
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Closed-loop data of a candidate solution `Q`.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub d: CMat,
    pub a_circ: CMat,
    pub alpha_circ: CMat,
    /// Frobenius norm of the Riccati residual.
    pub residual: f64,
    pub rho_a_circ: f64,
    pub rho_alpha_circ: f64,
}

#[derive(Clone, Debug)]
pub struct RiccatiOutcome {
    pub lambda: C64,
    pub verdict: Verdict,
    pub certificate: Certificate,
    /// `n_minus × n_plus` witness, present for `Resolvent`.
    pub q: Option<CMat>,
    pub a_circ: Option<CMat>,
    pub alpha_circ: Option<CMat>,
    pub residual: f64,
    pub rho_a_circ: Option<f64>,
    pub rho_alpha_circ: Option<f64>,
}

impl RiccatiOutcome {
    fn bare(lambda: C64, verdict: Verdict, certificate: Certificate) -> Self {
        Self {
            lambda,
            verdict,
            certificate,
            q: None,
            a_circ: None,
            alpha_circ: None,
            residual: f64::NAN,
            rho_a_circ: None,
            rho_alpha_circ: None,
        }
    }

    fn with_loop(mut self, q: CMat, cl: ClosedLoop) -> Self {
        self.q = Some(q);
        self.residual = cl.residual;
        self.rho_a_circ = Some(cl.rho_a_circ);
        self.rho_alpha_circ = Some(cl.rho_alpha_circ);
        self.a_circ = Some(cl.a_circ);
        self.alpha_circ = Some(cl.alpha_circ);
        self
    }
}

fn shifted_r0(real: &Realization, lambda: C64) -> CMat {
    real.r0() - CMat::identity(real.m(), real.m()) * lambda
}

/// `D = R0 - gamma Q B - lambda I`.
fn d_matrix(real: &Realization, lambda: C64, q: &CMat) -> CMat {
    shifted_r0(real, lambda) - real.gamma() * q * real.b()
}

fn invert_d(d: &CMat, cfg: &Config) -> Result<CMat> {
    linalg::guarded_inverse(d, cfg.cond_max).ok_or(Error::DSingular)
}

/// Residual `Q - [alpha Q A + (beta - alpha Q B) D^-1 (C - gamma Q A)]` and `D`.
pub fn riccati_residual(p: &RiccatiProblem, q: &CMat, cfg: &Config) -> Result<(CMat, CMat)> {
    let real = &p.real;
    if q.shape() != (real.n_minus(), real.n_plus()) {
        return Err(Error::Precondition(format!(
            "Q must be {}×{}, got {}×{}",
            real.n_minus(),
            real.n_plus(),
            q.nrows(),
            q.ncols()
        )));
    }
    let d = d_matrix(real, p.lambda, q);
    let d_inv = invert_d(&d, cfg)?;
    Ok((q - riccati_rhs(real, q, &d_inv), d))
}

fn riccati_rhs(real: &Realization, q: &CMat, d_inv: &CMat) -> CMat {
    let (a, b, c) = (real.a(), real.b(), real.c());
    let (alpha, beta, gamma) = (real.alpha(), real.beta(), real.gamma());
    let aq = alpha * q;
    alpha * q * a + (beta - &aq * b) * d_inv * (c - gamma * q * a)
}

/// Closed-loop matrices `A - B D^-1 (C - gamma Q A)` and
/// `alpha - (beta - alpha Q B) D^-1 gamma` with their spectral radii.
pub fn closed_loop(real: &Realization, lambda: C64, q: &CMat, cfg: &Config) -> Result<ClosedLoop> {
    let d = d_matrix(real, lambda, q);
    let d_inv = invert_d(&d, cfg)?;
    let (a, b, c) = (real.a(), real.b(), real.c());
    let (alpha, beta, gamma) = (real.alpha(), real.beta(), real.gamma());
    let a_circ = a - b * &d_inv * (c - gamma * q * a);
    let alpha_circ = alpha - (beta - alpha * q * b) * &d_inv * gamma;
    let residual = linalg::fro_norm(&(q - riccati_rhs(real, q, &d_inv)));
    Ok(ClosedLoop {
        rho_a_circ: linalg::spectral_radius(&a_circ)?,
        rho_alpha_circ: linalg::spectral_radius(&alpha_circ)?,
        d,
        a_circ,
        alpha_circ,
        residual,
    })
}

fn converged(residual: f64, q: &CMat, cfg: &Config) -> bool {
    residual < cfg.ric_tol * (1.0 + linalg::fro_norm(q))
}

/// Exact test for `n_plus = 0`: `R0 - lambda I` invertible and
/// `alpha - beta (R0 - lambda I)^-1 gamma` stable.
pub fn is_resolvent_alpha_only(real: &Realization, lambda: C64, cfg: &Config) -> Result<(bool, Option<CMat>)> {
    if real.n_plus() != 0 {
        return Err(Error::Precondition(format!("n_plus = {} is not zero", real.n_plus())));
    }
    let hits_r0 = linalg::eigenvalues(real.r0())?
        .iter()
        .any(|mu| (lambda - mu).norm() <= cfg.eig_tol * mu.norm().max(1.0));
    if hits_r0 {
        return Ok((false, None));
    }
    let Some(d_inv) = linalg::guarded_inverse(&shifted_r0(real, lambda), cfg.cond_max) else {
        return Ok((false, None));
    };
    let alpha_circ = real.alpha() - real.beta() * d_inv * real.gamma();
    let rho = linalg::spectral_radius(&alpha_circ)?;
    Ok((rho < 1.0 - cfg.stab_margin, Some(alpha_circ)))
}

/// Split of the zeros of `det L(lambda, ·)` against the unit circle,
/// together with the graph-subspace seed `Q = -Y X^+` when available.
struct ZeroSplit {
    inside: usize,
    near_circle: bool,
    seed: Option<CMat>,
}

/// Reusable per-realization state for repeated resolvent queries.
pub struct RiccatiSolver<'a> {
    real: &'a Realization,
    cfg: &'a Config,
    pencil: PencilL,
    exceptional: Vec<C64>,
}

impl<'a> RiccatiSolver<'a> {
    pub fn new(real: &'a Realization, cfg: &'a Config) -> Self {
        let pencil = assemble_pencil(real);
        let exceptional = det_coeffs(&pencil)
            .and_then(|bp| exceptional_set(&bp, cfg.e_tol))
            .unwrap_or_default();
        Self {
            real,
            cfg,
            pencil,
            exceptional,
        }
    }

    pub fn exceptional(&self) -> &[C64] {
        &self.exceptional
    }

    pub fn solve(&self, lambda: C64) -> RiccatiOutcome {
        let cfg = self.cfg;
        let in_e = self
            .exceptional
            .iter()
            .any(|e| (lambda - e).norm() <= cfg.cluster_tol * e.norm().max(1.0));
        if in_e {
            return RiccatiOutcome::bare(lambda, Verdict::NotResolvent, Certificate::InExceptionalSet);
        }
        if self.real.n_plus() == 0 {
            return self.solve_alpha_only(lambda);
        }
        self.solve_general(lambda)
    }

    fn solve_alpha_only(&self, lambda: C64) -> RiccatiOutcome {
        let cfg = self.cfg;
        let real = self.real;
        let unknown = RiccatiOutcome::bare(lambda, Verdict::Unknown, Certificate::MarginalStability);
        let Ok((_, alpha_circ)) = is_resolvent_alpha_only(real, lambda, cfg) else {
            return unknown;
        };
        let Some(alpha_circ) = alpha_circ else {
            return RiccatiOutcome::bare(lambda, Verdict::NotResolvent, Certificate::AlphaOnlyExact);
        };
        let q = CMat::zeros(real.n_minus(), 0);
        let Ok(cl) = closed_loop(real, lambda, &q, cfg) else {
            return unknown;
        };
        debug_assert!(linalg::max_abs(&(&cl.alpha_circ - &alpha_circ)) < 1e-9 * (1.0 + linalg::max_abs(&alpha_circ)));
        let rho = cl.rho_alpha_circ;
        let (verdict, cert) = if rho < 1.0 - cfg.stab_margin {
            (Verdict::Resolvent, Certificate::AlphaOnlyExact)
        } else if rho > 1.0 + cfg.stab_margin {
            (Verdict::NotResolvent, Certificate::AlphaOnlyExact)
        } else {
            (Verdict::Unknown, Certificate::MarginalStability)
        };
        RiccatiOutcome::bare(lambda, verdict, cert).with_loop(q, cl)
    }

    fn solve_general(&self, lambda: C64) -> RiccatiOutcome {
        let cfg = self.cfg;
        let real = self.real;
        let mut rng = cfg.rng_for(lambda.re.to_bits().rotate_left(17) ^ lambda.im.to_bits());
        let split = match self.zero_split(lambda, &mut rng) {
            Ok(Some(s)) => s,
            Ok(None) => {
                return RiccatiOutcome::bare(lambda, Verdict::NotResolvent, Certificate::InExceptionalSet);
            }
            Err(_) => ZeroSplit {
                inside: usize::MAX,
                near_circle: true,
                seed: None,
            },
        };
        if !split.near_circle && split.inside != real.n_minus() {
            return RiccatiOutcome::bare(lambda, Verdict::NotResolvent, Certificate::ZeroCount);
        }

        let shape = (real.n_minus(), real.n_plus());
        let mut marginal = false;
        let mut accept = |q: CMat| -> Option<RiccatiOutcome> {
            let q = self.newton(lambda, q)?;
            let cl = closed_loop(real, lambda, &q, cfg).ok()?;
            if !converged(cl.residual, &q, cfg) {
                return None;
            }
            let worst = cl.rho_a_circ.max(cl.rho_alpha_circ);
            if worst < 1.0 - cfg.stab_margin {
                return Some(
                    RiccatiOutcome::bare(lambda, Verdict::Resolvent, Certificate::StabilizingSolution).with_loop(q, cl),
                );
            }
            if worst <= 1.0 + cfg.stab_margin {
                marginal = true;
            }
            None
        };

        if let Some(out) = self.fixed_point(lambda, CMat::zeros(shape.0, shape.1)).and_then(&mut accept) {
            return out;
        }
        if let Some(out) = split.seed.and_then(&mut accept) {
            return out;
        }
        let scale = (linalg::fro_norm(real.beta()) * linalg::fro_norm(real.c())).max(1e-3);
        for _ in 0..cfg.n_restarts {
            let q0 = CMat::from_fn(shape.0, shape.1, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c64(re, im) * scale
            });
            if let Some(out) = self.fixed_point(lambda, q0).and_then(&mut accept) {
                return out;
            }
        }
        let cert = if split.near_circle {
            Certificate::NearEssentialSpectrum
        } else if marginal {
            Certificate::MarginalStability
        } else {
            Certificate::NoSolutionFound
        };
        RiccatiOutcome::bare(lambda, Verdict::Unknown, cert)
    }

    /// Damped fixed-point iteration; returns the iterate once the residual
    /// drops below the Newton handover level.
    fn fixed_point(&self, lambda: C64, mut q: CMat) -> Option<CMat> {
        let cfg = self.cfg;
        let real = self.real;
        let p_res = |q: &CMat| -> Option<(f64, CMat)> {
            let d_inv = invert_d(&d_matrix(real, lambda, q), cfg).ok()?;
            let rhs = riccati_rhs(real, q, &d_inv);
            Some((linalg::fro_norm(&(q - &rhs)), rhs))
        };
        let (mut res, mut rhs) = p_res(&q)?;
        let mut step = 1.0;
        for _ in 0..cfg.max_iter {
            if res < NEWTON_HANDOVER * (1.0 + linalg::fro_norm(&q)) {
                return Some(q);
            }
            let trial = &q * C64::from(1.0 - step) + &rhs * C64::from(step);
            match p_res(&trial) {
                Some((r, next)) if r < res || step < 1.0 / 64.0 => {
                    q = trial;
                    res = r;
                    rhs = next;
                    if step < 1.0 {
                        step = (step * 2.0).min(1.0);
                    }
                }
                _ => step *= 0.5,
            }
            if !res.is_finite() {
                return None;
            }
        }
        (res < NEWTON_HANDOVER * (1.0 + linalg::fro_norm(&q))).then_some(q)
    }

    /// Newton steps `E - alpha_circ E A_circ = -F(Q)`.
    fn newton(&self, lambda: C64, mut q: CMat) -> Option<CMat> {
        let cfg = self.cfg;
        let real = self.real;
        let (rows, cols) = q.shape();
        if rows * cols == 0 {
            return Some(q);
        }
        let mut best: Option<(f64, CMat)> = None;
        for _ in 0..NEWTON_STEPS {
            let cl = closed_loop(real, lambda, &q, cfg).ok()?;
            if best.as_ref().is_none_or(|(r, _)| cl.residual < *r) {
                best = Some((cl.residual, q.clone()));
            }
            if cl.residual < 1e-3 * cfg.ric_tol * (1.0 + linalg::fro_norm(&q)) || !cl.residual.is_finite() {
                break;
            }
            let d_inv = invert_d(&cl.d, cfg).ok()?;
            let f = &q - riccati_rhs(real, &q, &d_inv);
            let op = CMat::identity(rows * cols, rows * cols) - linalg::kron(&cl.a_circ.transpose(), &cl.alpha_circ);
            let rhs = CMat::from_column_slice(rows * cols, 1, (-&f).as_slice());
            let e = linalg::solve(&op, &rhs)?;
            q += CMat::from_column_slice(rows, cols, e.as_slice());
        }
        best.map(|(_, q)| q)
    }

    /// Zero split via the Möbius-transformed pencil
    /// `N = -(L0 + a L1)^-1 (conj(a) L0 + L1)`, whose eigenvalues `eta` map to
    /// the zeros `z = (1 + a eta) / (eta + conj(a))`; `|eta| < 1` iff
    /// `|z| > 1`. Returns `None` when `det L(lambda, ·)` vanishes identically.
    fn zero_split(&self, lambda: C64, rng: &mut impl Rng) -> Result<Option<ZeroSplit>> {
        let cfg = self.cfg;
        let pl = &self.pencil;
        let (np, nm) = (pl.n_plus, pl.n_minus);
        let l0 = &pl.p0 - &pl.e_hat * lambda;
        let l1 = &pl.p1;
        let tries = np + nm + 2;
        let mut singular_hits = 0;
        for _ in 0..tries {
            let a = C64::from_polar(rng.random_range(0.3..0.7), rng.random_range(0.0..std::f64::consts::TAU));
            let base = &l0 + l1 * a;
            if linalg::relative_det(&base) < cfg.singular_tol {
                singular_hits += 1;
                continue;
            }
            let Some(base_inv) = linalg::guarded_inverse(&base, cfg.cond_max) else {
                continue;
            };
            let n_mat = -(base_inv * (&l0 * a.conj() + l1));
            let (u, t) = linalg::schur(&n_mat)?;
            let etas: Vec<C64> = t.diagonal().iter().copied().collect();
            let near_circle = etas.iter().any(|e| (e.norm() - 1.0).abs() < ZERO_BAND);
            let inside = etas.iter().filter(|e| e.norm() > 1.0).count();
            let mut seed = None;
            if !near_circle && inside == nm {
                let (u, _, k) = linalg::reorder_schur(&u, &t, |e| e.norm() < 1.0);
                let x = u.view((0, 0), (np, k)).into_owned();
                let y = u.view((np, 0), (nm, k)).into_owned();
                if linalg::numerical_rank(&x, cfg.rank_tol) == np {
                    seed = Some(-(y * linalg::pinv(&x, cfg.rank_tol)));
                }
            }
            return Ok(Some(ZeroSplit {
                inside,
                near_circle,
                seed,
            }));
        }
        if singular_hits == tries {
            return Ok(None);
        }
        Err(Error::IllConditioned(format!("no well-conditioned pencil shift found at lambda = {lambda}")))
    }
}

/// Resolvent membership of `lambda` for `T_Omega`.
pub fn solve_stabilizing(p: &RiccatiProblem, cfg: &Config) -> RiccatiOutcome {
    RiccatiSolver::new(&p.real, cfg).solve(p.lambda)
}

/// Independent re-check of a `Resolvent` outcome.
pub fn witness_is_valid(real: &Realization, out: &RiccatiOutcome, cfg: &Config) -> bool {
    let Some(q) = &out.q else {
        return false;
    };
    match closed_loop(real, out.lambda, q, cfg) {
        Ok(cl) => {
            converged(cl.residual, q, cfg)
                && cl.rho_a_circ < 1.0 - cfg.stab_margin
                && cl.rho_alpha_circ < 1.0 - cfg.stab_margin
        }
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_matrix, scalar_matrix};

    fn s(x: f64) -> CMat {
        scalar_matrix(c64(x, 0.0))
    }

    fn example2() -> Realization {
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

    fn example5() -> Realization {
        Realization::new(
            real_matrix(&[&[2.0, 0.0], &[0.0, 2.0]]),
            CMat::zeros(0, 0),
            CMat::zeros(0, 2),
            CMat::zeros(2, 0),
            s(1.0),
            real_matrix(&[&[0.0, 1.0]]),
            real_matrix(&[&[1.0], &[0.0]]),
        )
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let cfg = Config::default();
        let p = RiccatiProblem {
            real: example2(),
            lambda: c64(-2.5, 0.0),
        };
        let (r, _) = riccati_residual(&p, &s(0.5), &cfg).unwrap();
        assert!(r[(0, 0)].norm() < 1e-15);
        let (r, d) = riccati_residual(&p, &s(0.0), &cfg).unwrap();
        assert!((r[(0, 0)] - c64(-2.0 / 3.5, 0.0)).norm() < 1e-15);
        assert!((d[(0, 0)] - c64(3.5, 0.0)).norm() < 1e-15);

        let p5 = RiccatiProblem {
            real: example5(),
            lambda: c64(0.5, 0.0),
        };
        let (r, d) = riccati_residual(&p5, &CMat::zeros(1, 0), &cfg).unwrap();
        assert_eq!(r.shape(), (1, 0));
        assert!(linalg::max_abs(&(d - CMat::identity(2, 2) * c64(1.5, 0.0))) < 1e-15);
    }

    #[test]
    fn example2_resolvent_point() {
        let cfg = Config::default();
        let out = solve_stabilizing(
            &RiccatiProblem {
                real: example2(),
                lambda: c64(-2.5, 0.0),
            },
            &cfg,
        );
        assert_eq!(out.verdict, Verdict::Resolvent);
        let q = out.q.as_ref().unwrap()[(0, 0)];
        assert!((q - c64(0.5, 0.0)).norm() < 1e-8);
        assert!((out.a_circ.as_ref().unwrap()[(0, 0)] - c64(-1.0 / 3.0, 0.0)).norm() < 1e-8);
        assert!((out.alpha_circ.as_ref().unwrap()[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-8);
        assert!(witness_is_valid(&example2(), &out, &cfg));
    }

    #[test]
    fn example2_spectrum_points() {
        let cfg = Config::default();
        let r = example2();
        let solver = RiccatiSolver::new(&r, &cfg);
        for lam in [c64(5.0, 0.0), c64(-0.5, 0.0)] {
            assert_eq!(solver.solve(lam).verdict, Verdict::NotResolvent, "lambda = {lam}");
        }
    }

    #[test]
    fn example3_points() {
        let cfg = Config::default();
        let r = example3();
        let solver = RiccatiSolver::new(&r, &cfg);
        let out = solver.solve(c64(-1.0, 0.0));
        assert_eq!(out.verdict, Verdict::NotResolvent);
        assert_eq!(out.certificate, Certificate::ZeroCount);
        for lam in [c64(-0.1, 1.8), c64(-0.1, -1.8)] {
            let out = solver.solve(lam);
            assert_eq!(out.verdict, Verdict::Resolvent, "lambda = {lam}");
            assert!(witness_is_valid(&r, &out, &cfg));
        }
    }

    #[test]
    fn exceptional_point_short_circuits() {
        let cfg = Config::default();
        let out = solve_stabilizing(
            &RiccatiProblem {
                real: example5(),
                lambda: c64(2.0, 0.0),
            },
            &cfg,
        );
        assert_eq!(out.verdict, Verdict::NotResolvent);
        assert_eq!(out.certificate, Certificate::InExceptionalSet);
    }

    #[test]
    fn alpha_only_example1() {
        // a = 2, b = 0: beta = 1 - a
        let real = Realization::new(s(1.0), CMat::zeros(0, 0), CMat::zeros(0, 1), CMat::zeros(1, 0), s(1.0), s(-1.0), s(1.0))
            .unwrap();
        let (ok, alpha_circ) = is_resolvent_alpha_only(&real, c64(0.0, 0.0), &Config::default()).unwrap();
        assert!(!ok);
        assert!((alpha_circ.unwrap()[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-14);

        let r0 = real_matrix(&[&[1.0, 0.0], &[0.0, 3.0]]);
        let real = Realization::constant(r0).unwrap();
        let cfg = Config::default();
        assert!(!is_resolvent_alpha_only(&real, c64(3.0, 0.0), &cfg).unwrap().0);
        assert!(is_resolvent_alpha_only(&real, c64(2.0, 0.0), &cfg).unwrap().0);
    }
}
