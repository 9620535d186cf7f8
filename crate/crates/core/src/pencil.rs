//! The linear pencil `L(lambda, z)`, its determinant polynomial, the
//! exceptional set and the essential spectrum sweep.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, C64, ONE, ZERO};
use crate::poly::{self, Poly};
use crate::ratsym::{eval_realization, Realization};

/// Radius of the interpolation nodes used for the determinant polynomial.
const NODE_RADIUS: f64 = 1.37;

/// `L(lambda, z) = P0 + z P1 - lambda E` with
/// `P0 = [[-I, 0, B], [0, alpha, beta], [0, gamma, R0]]`,
/// `P1 = [[A, 0, 0], [0, -I, 0], [C, 0, 0]]` and `E = diag(0, 0, I_m)`.
#[derive(Clone, Debug)]
pub struct PencilL {
    pub m: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub p0: CMat,
    pub p1: CMat,
    pub e_hat: CMat,
}

impl PencilL {
    pub fn size(&self) -> usize {
        self.n_plus + self.n_minus + self.m
    }

    /// `P0 + z P1`.
    pub fn at(&self, z: C64) -> CMat {
        &self.p0 + &self.p1 * z
    }

    pub fn eval(&self, lambda: C64, z: C64) -> CMat {
        self.at(z) - &self.e_hat * lambda
    }

    /// Selector `[0 0 I_m]` of the symbol block.
    pub fn selector(&self) -> CMat {
        let mut e = CMat::zeros(self.m, self.size());
        for i in 0..self.m {
            e[(i, self.n_plus + self.n_minus + i)] = ONE;
        }
        e
    }
}

pub fn assemble_pencil(real: &Realization) -> PencilL {
    let (m, np, nm) = (real.m(), real.n_plus(), real.n_minus());
    let n = np + nm + m;
    let (o1, o2) = (np, np + nm);
    let mut p0 = CMat::zeros(n, n);
    let mut p1 = CMat::zeros(n, n);
    let mut e_hat = CMat::zeros(n, n);
    p0.view_mut((0, 0), (np, np)).copy_from(&(-CMat::identity(np, np)));
    p0.view_mut((0, o2), (np, m)).copy_from(real.b());
    p0.view_mut((o1, o1), (nm, nm)).copy_from(real.alpha());
    p0.view_mut((o1, o2), (nm, m)).copy_from(real.beta());
    p0.view_mut((o2, o1), (m, nm)).copy_from(real.gamma());
    p0.view_mut((o2, o2), (m, m)).copy_from(real.r0());
    p1.view_mut((0, 0), (np, np)).copy_from(real.a());
    p1.view_mut((o1, o1), (nm, nm)).copy_from(&(-CMat::identity(nm, nm)));
    p1.view_mut((o2, 0), (m, np)).copy_from(real.c());
    e_hat.view_mut((o2, o2), (m, m)).copy_from(&CMat::identity(m, m));
    PencilL {
        m,
        n_plus: np,
        n_minus: nm,
        p0,
        p1,
        e_hat,
    }
}

/// Coefficients of `det L(lambda, z)`; entry `(k, l)` multiplies `lambda^k z^l`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BivariatePoly {
    #[serde(with = "linalg::mat_serde")]
    pub coeffs: CMat,
    /// Largest Hadamard bound of `L` over the interpolation grid.
    pub scale: f64,
}

impl BivariatePoly {
    pub fn eval(&self, lambda: C64, z: C64) -> C64 {
        let mut acc = ZERO;
        for k in (0..self.coeffs.nrows()).rev() {
            let mut row = ZERO;
            for l in (0..self.coeffs.ncols()).rev() {
                row = row * z + self.coeffs[(k, l)];
            }
            acc = acc * lambda + row;
        }
        acc
    }

    /// `d_l(lambda)`, the coefficient of `z^l`.
    pub fn z_coeff(&self, l: usize) -> Poly {
        Poly::new(self.coeffs.column(l).iter().copied().collect())
    }
}

/// Interpolates `det L` on a grid of scaled roots of unity.
pub fn det_coeffs(pl: &PencilL) -> Result<BivariatePoly> {
    let nl = pl.m + 1;
    let nz = pl.n_plus + pl.n_minus + 1;
    let cond = NODE_RADIUS.powi((nl + nz - 2) as i32);
    if cond > Config::default().cond_max {
        return Err(Error::IllConditioned(format!(
            "interpolation grid condition {cond:e} for a {nl}×{nz} grid"
        )));
    }
    let mut values = CMat::zeros(nl, nz);
    let mut scale = 0.0f64;
    for i in 0..nl {
        let lam = poly::root_of_unity_node(NODE_RADIUS, i, nl);
        for j in 0..nz {
            let z = poly::root_of_unity_node(NODE_RADIUS, j, nz);
            let l = pl.eval(lam, z);
            scale = scale.max(l.row_iter().map(|r| r.norm()).product());
            values[(i, j)] = linalg::det(&l);
        }
    }
    // inverse transform along z, then along lambda
    let mut half = CMat::zeros(nl, nz);
    for i in 0..nl {
        let row: Vec<C64> = values.row(i).iter().copied().collect();
        for (l, c) in poly::interpolate_scaled_roots_of_unity(&row, NODE_RADIUS).into_iter().enumerate() {
            half[(i, l)] = c;
        }
    }
    let mut coeffs = CMat::zeros(nl, nz);
    for l in 0..nz {
        let col: Vec<C64> = half.column(l).iter().copied().collect();
        for (k, c) in poly::interpolate_scaled_roots_of_unity(&col, NODE_RADIUS).into_iter().enumerate() {
            coeffs[(k, l)] = c;
        }
    }
    Ok(BivariatePoly { coeffs, scale })
}

/// The set of `lambda` at which `det L(lambda, ·)` vanishes identically.
pub fn exceptional_set(bp: &BivariatePoly, tol: f64) -> Result<Vec<C64>> {
    let nz = bp.coeffs.ncols();
    let col_norm = |l: usize| bp.coeffs.column(l).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let (best, best_norm) = (0..nz)
        .map(|l| (l, col_norm(l)))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if best_norm <= Config::default().singular_tol * bp.scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateDet);
    }
    let lead_poly = bp.z_coeff(best);
    let roots = lead_poly.roots()?;
    let candidates = poly::cluster_roots(&lead_poly, &roots, Config::default().cluster_tol);
    let mut out = Vec::new();
    for (lam, _) in candidates {
        let scale = (0..nz).map(|l| bp.z_coeff(l).eval_scale(lam)).fold(0.0, f64::max);
        let worst = (0..nz).map(|l| bp.z_coeff(l).eval(lam).norm()).fold(0.0, f64::max);
        if worst < tol * scale {
            out.push(lam);
        }
    }
    Ok(out)
}

/// Points of the essential spectrum over one `nu` on the unit circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EssAt {
    pub nu: C64,
    /// Eigenvalues of `Omega(nu)`, or the pencil eigenvalues when `nu` is a pole.
    pub lambdas: Vec<C64>,
    /// Finite generalized eigenvalues of `(P0 + nu P1, E)`.
    pub pencil_lambdas: Vec<C64>,
    /// `det L(·, nu)` vanishes identically.
    pub singular: bool,
    /// Whether `lambdas` came from the pencil.
    pub via_pencil: bool,
    /// Largest relative determinant of `L(lambda, nu)` over `lambdas`.
    pub residual: f64,
}

pub fn ess_points_at(pl: &PencilL, real: &Realization, nu: C64, cfg: &Config) -> Result<EssAt> {
    if (nu.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("nu = {nu} is not on the unit circle")));
    }
    let m_nu = pl.at(nu);
    let scale = 1.0 + linalg::fro_norm(&m_nu);
    let mut rng = cfg.rng_for(nu.arg().to_bits());
    let probes = if pl.m > 4 { pl.m + 2 } else { 5 };
    let singular = (0..probes).all(|_| {
        let lam = c64(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)) * scale;
        linalg::relative_det(&(&m_nu - &pl.e_hat * lam)) < cfg.singular_tol
    });
    if singular {
        return Ok(EssAt {
            nu,
            lambdas: Vec::new(),
            pencil_lambdas: Vec::new(),
            singular: true,
            via_pencil: true,
            residual: 0.0,
        });
    }
    let pencil_lambdas: Vec<C64> = linalg::generalized_eigenvalues(&m_nu, &pl.e_hat)?
        .into_iter()
        .filter(|(a, b)| b.norm() * 1e10 * scale > a.norm())
        .map(|(a, b)| a / b)
        .collect();
    let near_alpha = linalg::eigenvalues(real.alpha())?
        .iter()
        .any(|mu| (nu - mu).norm() <= cfg.eig_tol * 1.0f64.max(mu.norm()));
    let symbol_value = if near_alpha {
        None
    } else {
        match eval_realization(real, nu) {
            Ok(v) => Some(v),
            Err(Error::PoleHit { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    let (lambdas, via_pencil) = match symbol_value {
        Some(v) => (linalg::eigenvalues(&v)?, false),
        None => (pencil_lambdas.clone(), true),
    };
    let residual = lambdas
        .iter()
        .map(|&lam| linalg::relative_det(&pl.eval(lam, nu)))
        .fold(0.0, f64::max);
    Ok(EssAt {
        nu,
        lambdas,
        pencil_lambdas,
        singular: false,
        via_pencil,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssPoint {
    pub theta: f64,
    pub lambda: C64,
}

/// Sampled essential spectrum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EssCloud {
    pub thetas: Vec<f64>,
    pub points: Vec<EssPoint>,
    /// Points of the exceptional set; these carry no angle.
    pub exceptional: Vec<C64>,
    pub whole_plane: bool,
    pub degenerate_nus: Vec<C64>,
    /// Largest relative determinant over all swept points.
    pub max_residual: f64,
}

impl EssCloud {
    /// Swept points followed by the exceptional set.
    pub fn all_lambdas(&self) -> Vec<C64> {
        self.points
            .iter()
            .map(|p| p.lambda)
            .chain(self.exceptional.iter().copied())
            .collect()
    }
}

/// Angles of the sweep: a uniform grid plus the arguments of the eigenvalues
/// of `alpha` lying on the unit circle.
pub fn sweep_angles(real: &Realization, n_theta: usize, cfg: &Config) -> Result<Vec<f64>> {
    let tau = std::f64::consts::TAU;
    let mut thetas: Vec<f64> = (0..n_theta).map(|k| tau * k as f64 / n_theta as f64).collect();
    for (mu, _) in linalg::clustered_eigenvalues(real.alpha(), cfg.jordan_tol.sqrt())? {
        if (mu.norm() - 1.0).abs() <= cfg.jordan_tol.sqrt() {
            let th = mu.arg().rem_euclid(tau);
            if thetas.iter().all(|&t| (t - th).abs() > 1e-15) {
                thetas.push(th);
            }
        }
    }
    thetas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(thetas)
}

pub fn ess_spectrum_sweep(real: &Realization, n_theta: usize, cfg: &Config) -> Result<EssCloud> {
    if n_theta < 8 {
        return Err(Error::Precondition(format!("n_theta = {n_theta} is below 8")));
    }
    let pl = assemble_pencil(real);
    let thetas = sweep_angles(real, n_theta, cfg)?;
    let per_angle: Vec<EssAt> = thetas
        .par_iter()
        .map(|&th| ess_points_at(&pl, real, c64(th.cos(), th.sin()), cfg))
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut degenerate_nus = Vec::new();
    let mut max_residual = 0.0f64;
    for (at, &theta) in per_angle.iter().zip(&thetas) {
        if at.singular {
            degenerate_nus.push(at.nu);
            continue;
        }
        max_residual = max_residual.max(at.residual);
        points.extend(at.lambdas.iter().map(|&lambda| EssPoint { theta, lambda }));
    }
    let exceptional = match exceptional_set(&det_coeffs(&pl)?, cfg.e_tol) {
        Ok(e) => e,
        Err(Error::DegenerateDet) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(EssCloud {
        thetas,
        points,
        exceptional,
        whole_plane: !degenerate_nus.is_empty(),
        degenerate_nus,
        max_residual,
    })
}
