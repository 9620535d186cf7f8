//! Rational matrix symbols, their partial fractions and state-space realizations.

mod fractions;
mod realization;

pub use fractions::{classify_poles, partial_fractions, PartialFraction, PfTerm, PoleSet};
pub use realization::{eval_realization, split_and_realize, Realization};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE};
use crate::poly::{self, Poly};

/// Relative distance to a pole inside which evaluation is refused.
pub const POLE_HIT_TOL: f64 = 1e-12;

/// Denominator given as `lead * prod (z - pole)^mult`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactoredDen {
    pub lead: C64,
    pub factors: Vec<(C64, usize)>,
}

impl FactoredDen {
    pub fn expand(&self) -> Poly {
        Poly::from_roots(&self.factors, self.lead)
    }
}

/// One entry `num(z) / den(z)` of a symbol.
#[derive(Clone, Debug)]
pub struct RationalScalar {
    num: Poly,
    den: Poly,
    den_factored: Option<FactoredDen>,
    poles: Vec<(C64, usize)>,
}

impl RationalScalar {
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        Self::build(Poly::new(num), Poly::new(den), None, &Config::default())
    }

    pub fn with_factored_den(num: Vec<C64>, den: FactoredDen) -> Result<Self> {
        let expanded = den.expand();
        Self::build(Poly::new(num), expanded, Some(den), &Config::default())
    }

    pub fn constant(c: C64) -> Self {
        Self {
            num: Poly::constant(c),
            den: Poly::one(),
            den_factored: None,
            poles: Vec::new(),
        }
    }

    /// Full constructor: `den_factored`, when given, must expand to `den`.
    pub fn build(num: Poly, den: Poly, den_factored: Option<FactoredDen>, cfg: &Config) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidSymbol("denominator is the zero polynomial".into()));
        }
        let poles = match &den_factored {
            Some(f) => {
                if f.factors.iter().any(|&(_, k)| k == 0) {
                    return Err(Error::InvalidSymbol("pole multiplicity must be positive".into()));
                }
                let expanded = f.expand();
                let scale = den.coeffs().iter().fold(0.0f64, |a, c| a.max(c.norm()));
                let diff = expanded.sub(&den);
                let err = diff.coeffs().iter().fold(0.0f64, |a, c| a.max(c.norm()));
                if err > 1e-10 * scale {
                    return Err(Error::InvalidSymbol(format!(
                        "factored denominator differs from den (relative error {:e})",
                        err / scale
                    )));
                }
                merge_factors(&f.factors, cfg.cluster_tol)
            }
            None => {
                let roots = den.roots()?;
                poly::cluster_roots(&den, &roots, cfg.cluster_tol)
            }
        };
        if !num.is_zero() {
            let zeros = poly::cluster_roots(&num, &num.roots()?, cfg.cluster_tol);
            for &(p, _) in &poles {
                for &(q, _) in &zeros {
                    if (p - q).norm() <= cfg.cluster_tol * 1.0f64.max(p.norm()) {
                        return Err(Error::InvalidSymbol(format!(
                            "numerator and denominator share the root {p}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            num,
            den,
            den_factored,
            poles,
        })
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn den_factored(&self) -> Option<&FactoredDen> {
        self.den_factored.as_ref()
    }

    /// Distinct poles with multiplicities.
    pub fn poles(&self) -> &[(C64, usize)] {
        &self.poles
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        for &(p, _) in &self.poles {
            if (z - p).norm() <= POLE_HIT_TOL * 1.0f64.max(p.norm()) {
                return Err(Error::PoleHit { z });
            }
        }
        let d = match &self.den_factored {
            Some(f) => f.factors.iter().fold(f.lead, |acc, &(p, k)| acc * (z - p).powu(k as u32)),
            None => self.den.eval(z),
        };
        Ok(self.num.eval(z) / d)
    }
}

fn merge_factors(factors: &[(C64, usize)], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &(p, k) in factors {
        match out
            .iter_mut()
            .find(|(q, _)| (p - *q).norm() <= tol * 1.0f64.max(p.norm()))
        {
            Some(slot) => slot.1 += k,
            None => out.push((p, k)),
        }
    }
    out
}

/// Square grid of rational entries.
#[derive(Clone, Debug)]
pub struct RationalMatrix {
    m: usize,
    entries: Vec<Vec<RationalScalar>>,
}

impl RationalMatrix {
    pub fn new(entries: Vec<Vec<RationalScalar>>) -> Result<Self> {
        let m = entries.len();
        if m == 0 {
            return Err(Error::InvalidSymbol("symbol must be at least 1×1".into()));
        }
        if entries.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidSymbol("symbol grid is not square".into()));
        }
        Ok(Self { m, entries })
    }

    pub fn scalar(entry: RationalScalar) -> Self {
        Self {
            m: 1,
            entries: vec![vec![entry]],
        }
    }

    pub fn constant(r0: &CMat) -> Result<Self> {
        if r0.nrows() != r0.ncols() {
            return Err(Error::InvalidSymbol("constant symbol must be square".into()));
        }
        let rows = (0..r0.nrows())
            .map(|i| (0..r0.ncols()).map(|j| RationalScalar::constant(r0[(i, j)])).collect())
            .collect();
        Self::new(rows)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalScalar {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<RationalScalar>] {
        &self.entries
    }

    /// Distinct poles over all entries, with the largest entry multiplicity.
    pub fn poles(&self, cluster_tol: f64) -> Vec<(C64, usize)> {
        let mut out: Vec<(C64, usize)> = Vec::new();
        for e in self.entries.iter().flatten() {
            for &(p, k) in e.poles() {
                match out
                    .iter_mut()
                    .find(|(q, _)| (p - *q).norm() <= cluster_tol * 1.0f64.max(p.norm()))
                {
                    Some(slot) => slot.1 = slot.1.max(k),
                    None => out.push((p, k)),
                }
            }
        }
        out
    }

    /// True when every coefficient is real.
    pub fn has_real_coefficients(&self) -> bool {
        self.entries.iter().flatten().all(|e| {
            e.num.coeffs().iter().chain(e.den.coeffs()).all(|c| c.im == 0.0)
        })
    }

    /// Rational form of `eval_realization(real, ·)`; used to round-trip
    /// realizations through the symbol representation.
    pub fn from_realization(real: &Realization, cfg: &Config) -> Result<Self> {
        let mut den_roots: Vec<C64> = linalg::eigenvalues(real.alpha())?;
        for a in linalg::eigenvalues(real.a())? {
            if a.norm() > 1e-13 {
                den_roots.push(ONE / a);
            }
        }
        let n_nodes = real.n_plus() + real.n_minus() + 1;
        let radius = interpolation_radius(&den_roots);
        let m = real.m();
        let values: Vec<CMat> = (0..n_nodes)
            .map(|j| eval_realization(real, poly::root_of_unity_node(radius, j, n_nodes)))
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                let samples: Vec<C64> = (0..n_nodes)
                    .map(|k| {
                        let z = poly::root_of_unity_node(radius, k, n_nodes);
                        let d = den_roots.iter().fold(ONE, |acc, &r| acc * (z - r));
                        values[k][(i, j)] * d
                    })
                    .collect();
                let mut num = poly::interpolate_scaled_roots_of_unity(&samples, radius);
                trim_top(&mut num, 1e-12);
                let mut num = Poly::new(num);
                let mut roots = den_roots.clone();
                cancel_common(&mut num, &mut roots);
                trim_top_poly(&mut num, 1e-12);
                let factors = merge_factors(&roots.iter().map(|&r| (r, 1)).collect::<Vec<_>>(), cfg.cluster_tol);
                let fd = FactoredDen { lead: ONE, factors };
                let den = fd.expand();
                row.push(RationalScalar::build(num, den, Some(fd), cfg)?);
            }
            rows.push(row);
        }
        Self::new(rows)
    }
}

/// Radius in `[0.5, 3]` farthest (in modulus) from every root.
fn interpolation_radius(roots: &[C64]) -> f64 {
    let mut best = (1.37, -1.0);
    for i in 0..=50 {
        let r = 0.5 + 2.5 * i as f64 / 50.0;
        let gap = roots.iter().fold(f64::INFINITY, |g, z| g.min((z.norm() - r).abs()));
        if gap > best.1 {
            best = (r, gap);
        }
    }
    best.0
}

fn trim_top(c: &mut Vec<C64>, rel: f64) {
    let scale = c.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    while c.last().is_some_and(|z| z.norm() <= rel * scale) {
        c.pop();
    }
}

fn trim_top_poly(p: &mut Poly, rel: f64) {
    let mut c = p.coeffs().to_vec();
    trim_top(&mut c, rel);
    *p = Poly::new(c);
}

/// Divides out every denominator root at which `num` vanishes.
fn cancel_common(num: &mut Poly, roots: &mut Vec<C64>) {
    let mut i = 0;
    while i < roots.len() {
        let r = roots[i];
        if num.is_zero() {
            roots.clear();
            return;
        }
        if num.degree().unwrap_or(0) > 0 && num.eval(r).norm() <= 1e-8 * num.eval_scale(r) {
            let (q, _) = num.divrem(&Poly::new(vec![-r, ONE]));
            *num = q;
            roots.swap_remove(i);
        } else {
            i += 1;
        }
    }
}

/// Entrywise evaluation; fails with `PoleHit` within `POLE_HIT_TOL` of a pole.
pub fn eval_rational_matrix(sym: &RationalMatrix, z: C64) -> Result<CMat> {
    let m = sym.m;
    let mut out = CMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = sym.entries[i][j].eval(z)?;
        }
    }
    Ok(out)
}
