use rand::Rng;

use super::{eval_rational_matrix, RationalMatrix};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, C64, ONE};
use crate::poly::{self, Poly};

/// `(z - pole)^(-order)` with matrix coefficient `residue`.
#[derive(Clone, Debug)]
pub struct PfTerm {
    pub pole: C64,
    pub order: usize,
    pub residue: CMat,
}

#[derive(Clone, Debug)]
pub struct PartialFraction {
    pub m: usize,
    /// Matrix coefficients of the polynomial part, ascending powers.
    pub poly_part: Vec<CMat>,
    pub terms: Vec<PfTerm>,
}

impl PartialFraction {
    pub fn eval(&self, z: C64) -> CMat {
        let mut out = CMat::zeros(self.m, self.m);
        for c in self.poly_part.iter().rev() {
            out = out * z + c;
        }
        for t in &self.terms {
            out += &t.residue * (z - t.pole).powi(-(t.order as i32));
        }
        out
    }

    /// Distinct poles, each with the residues `R_1..R_K` of its principal part.
    pub fn principal_parts(&self) -> Vec<(C64, Vec<CMat>)> {
        let mut out: Vec<(C64, Vec<CMat>)> = Vec::new();
        for t in &self.terms {
            let slot = match out.iter().position(|(p, _)| *p == t.pole) {
                Some(i) => i,
                None => {
                    out.push((t.pole, Vec::new()));
                    out.len() - 1
                }
            };
            let list = &mut out[slot].1;
            while list.len() < t.order {
                list.push(CMat::zeros(self.m, self.m));
            }
            list[t.order - 1] += &t.residue;
        }
        out
    }
}

/// Poles split by modulus relative to the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSet {
    pub inside: Vec<(C64, usize)>,
    pub on_circle: Vec<(C64, usize)>,
    pub outside: Vec<(C64, usize)>,
    pub eps_circle: f64,
}

impl PoleSet {
    pub fn closed_disc(&self) -> impl Iterator<Item = &(C64, usize)> {
        self.inside.iter().chain(&self.on_circle)
    }
}

pub fn partial_fractions(sym: &RationalMatrix, cfg: &Config) -> Result<PartialFraction> {
    let m = sym.m();
    let global = sym.poles(cfg.cluster_tol);
    let mut poly_part: Vec<CMat> = Vec::new();
    let mut parts: Vec<Vec<CMat>> = global.iter().map(|&(_, k)| vec![CMat::zeros(m, m); k]).collect();

    for i in 0..m {
        for j in 0..m {
            let e = sym.entry(i, j);
            let (q, r) = e.num().divrem(e.den());
            for (d, &c) in q.coeffs().iter().enumerate() {
                while poly_part.len() <= d {
                    poly_part.push(CMat::zeros(m, m));
                }
                poly_part[d][(i, j)] = c;
            }
            if r.is_zero() {
                continue;
            }
            let lead = e.den_factored().map_or(e.den().leading(), |f| f.lead);
            let local = e.poles();
            for (idx, &(p, k)) in local.iter().enumerate() {
                let slot = global
                    .iter()
                    .position(|(g, _)| (p - *g).norm() <= cfg.cluster_tol * 1.0f64.max(p.norm()))
                    .expect("entry pole present in the global list");
                // h(t) = r(t + p) / (lead * prod_{other} (t + p - p_j)^{k_j})
                let shifted = r.taylor_shift(p);
                let mut rest = Poly::constant(lead);
                let mut cond = 1.0f64;
                for (jdx, &(pj, kj)) in local.iter().enumerate() {
                    if jdx == idx {
                        continue;
                    }
                    let gap = p - pj;
                    cond *= (1.0f64.max(p.norm()).max(pj.norm()) / gap.norm()).powi(kj as i32);
                    for _ in 0..kj {
                        rest = rest.mul(&Poly::new(vec![gap, ONE]));
                    }
                }
                if cond.is_nan() || cond > cfg.cond_max {
                    return Err(Error::IllConditioned(format!(
                        "pole separation condition {cond:e} at pole {p}"
                    )));
                }
                let g = poly::series_div(&shifted, &rest, k);
                for order in 1..=k {
                    parts[slot][order - 1][(i, j)] = g[k - order];
                }
            }
        }
    }
    if poly_part.is_empty() {
        poly_part.push(CMat::zeros(m, m));
    }
    let mut terms = Vec::new();
    for (gi, &(p, _)) in global.iter().enumerate() {
        for (o, res) in parts[gi].iter().enumerate() {
            terms.push(PfTerm {
                pole: p,
                order: o + 1,
                residue: res.clone(),
            });
        }
    }
    let pf = PartialFraction { m, poly_part, terms };
    check_reconstruction(sym, &pf, &global, cfg)?;
    Ok(pf)
}

fn check_reconstruction(sym: &RationalMatrix, pf: &PartialFraction, poles: &[(C64, usize)], cfg: &Config) -> Result<()> {
    let mut rng = cfg.rng_for(0x5046);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 20 && attempts < 1000 {
        attempts += 1;
        let r = rng.random_range(0.2..2.5);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let z = c64(r * th.cos(), r * th.sin());
        if poles.iter().any(|(p, _)| (z - p).norm() < 0.05) {
            continue;
        }
        let want = eval_rational_matrix(sym, z)?;
        let got = pf.eval(z);
        let err = linalg::fro_norm(&(got - &want));
        if err > 1e-8 * 1.0f64.max(linalg::fro_norm(&want)) {
            return Err(Error::IllConditioned(format!(
                "partial fractions reproduce the symbol only to {err:e} at {z}"
            )));
        }
        checked += 1;
    }
    Ok(())
}

/// Local McMillan degree: rank of the block Hankel matrix of `R_1..R_K`.
fn local_degree(residues: &[CMat], rank_tol: f64) -> usize {
    let k = residues.len();
    let m = residues.first().map_or(0, |r| r.nrows());
    let mut h = CMat::zeros(k * m, k * m);
    for i in 0..k {
        for j in 0..k - i {
            h.view_mut((i * m, j * m), (m, m)).copy_from(&residues[i + j]);
        }
    }
    linalg::numerical_rank(&h, rank_tol)
}

/// Sorts poles by modulus; multiplicities are local McMillan degrees, so
/// the closed-disc total equals the dimension of a minimal `alpha`.
pub fn classify_poles(pf: &PartialFraction, eps_circle: f64) -> PoleSet {
    let mut set = PoleSet {
        inside: Vec::new(),
        on_circle: Vec::new(),
        outside: Vec::new(),
        eps_circle,
    };
    for (p, residues) in pf.principal_parts() {
        let deg = local_degree(&residues, Config::default().rank_tol);
        if deg == 0 {
            continue;
        }
        let r = p.norm();
        if (r - 1.0).abs() <= eps_circle {
            set.on_circle.push((p, deg));
        } else if r < 1.0 {
            set.inside.push((p, deg));
        } else {
            set.outside.push((p, deg));
        }
    }
    set
}

/// Laurent coefficients at infinity of the principal parts at `poles`:
/// entry `i - 1` is the coefficient of `z^(-i)`.
pub(crate) fn markov_at_infinity(parts: &[(C64, Vec<CMat>)], m: usize, count: usize) -> Vec<CMat> {
    (1..=count)
        .map(|i| {
            let mut acc = CMat::zeros(m, m);
            for (p, res) in parts {
                for (jm1, r) in res.iter().enumerate() {
                    let j = jm1 + 1;
                    if j > i {
                        break;
                    }
                    let w = linalg::binom(i - 1, j - 1) * p.powu((i - j) as u32);
                    acc += r * w;
                }
            }
            acc
        })
        .collect()
}

/// Taylor coefficients at the origin of the polynomial part plus the
/// principal parts at `poles` (all of which must be nonzero).
pub(crate) fn taylor_at_origin(poly_part: &[CMat], parts: &[(C64, Vec<CMat>)], m: usize, count: usize) -> Vec<CMat> {
    (0..count)
        .map(|i| {
            let mut acc = poly_part.get(i).cloned().unwrap_or_else(|| CMat::zeros(m, m));
            for (p, res) in parts {
                for (km1, r) in res.iter().enumerate() {
                    let k = km1 + 1;
                    // (z - p)^-k = (-p)^-k sum_i binom(i + k - 1, k - 1) p^-i z^i
                    let w = (-*p).powi(-(k as i32)) * linalg::binom(i + k - 1, k - 1) * p.powi(-(i as i32));
                    acc += r * w;
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratsym::RationalScalar;

    fn real(c: &[f64]) -> Vec<C64> {
        c.iter().map(|&x| c64(x, 0.0)).collect()
    }

    fn scalar(n: &[f64], d: &[f64]) -> RationalMatrix {
        RationalMatrix::scalar(RationalScalar::new(real(n), real(d)).unwrap())
    }

    fn term(pf: &PartialFraction, pole: f64) -> C64 {
        pf.terms
            .iter()
            .find(|t| (t.pole - c64(pole, 0.0)).norm() < 1e-9)
            .map(|t| t.residue[(0, 0)])
            .unwrap()
    }

    #[test]
    fn example_two_fractions() {
        let pf = partial_fractions(&scalar(&[1.0, 0.0, 1.0], &[-1.0, 1.0]), &Config::default()).unwrap();
        assert_eq!(pf.poly_part.len(), 2);
        assert!((pf.poly_part[0][(0, 0)] - ONE).norm() < 1e-14);
        assert!((pf.poly_part[1][(0, 0)] - ONE).norm() < 1e-14);
        assert_eq!(pf.terms.len(), 1);
        assert!((term(&pf, 1.0) - c64(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn example_three_fractions() {
        let pf = partial_fractions(&scalar(&[1.0, 3.0, 0.0, 1.0], &[-1.0, 0.0, 1.0]), &Config::default()).unwrap();
        assert!(pf.poly_part[0][(0, 0)].norm() < 1e-14);
        assert!((pf.poly_part[1][(0, 0)] - ONE).norm() < 1e-14);
        assert_eq!(pf.terms.len(), 2);
        assert!((term(&pf, 1.0) - c64(2.5, 0.0)).norm() < 1e-12);
        assert!((term(&pf, -1.0) - c64(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_symbol_has_no_terms() {
        let r0 = linalg::real_matrix(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let pf = partial_fractions(&RationalMatrix::constant(&r0).unwrap(), &Config::default()).unwrap();
        assert!(pf.terms.is_empty());
        assert_eq!(pf.poly_part, vec![r0]);
    }

    #[test]
    fn double_pole_residues() {
        // 1 / (z - 1)^2 + 3 / (z - 1) = (3z - 2) / (z - 1)^2
        let pf = partial_fractions(&scalar(&[-2.0, 3.0], &[1.0, -2.0, 1.0]), &Config::default()).unwrap();
        let r1 = pf.terms.iter().find(|t| t.order == 1).unwrap().residue[(0, 0)];
        let r2 = pf.terms.iter().find(|t| t.order == 2).unwrap().residue[(0, 0)];
        assert!((r1 - c64(3.0, 0.0)).norm() < 1e-7);
        assert!((r2 - ONE).norm() < 1e-7);
    }

    #[test]
    fn pole_classification() {
        let pf = partial_fractions(&scalar(&[1.0, 3.0, 0.0, 1.0], &[-1.0, 0.0, 1.0]), &Config::default()).unwrap();
        let ps = classify_poles(&pf, 1e-9);
        assert_eq!(ps.on_circle.len(), 2);
        assert!(ps.inside.is_empty() && ps.outside.is_empty());

        // 1/(z - 0.5) + 1/(z - 2)
        let pf = partial_fractions(&scalar(&[-2.5, 2.0], &[1.0, -2.5, 1.0]), &Config::default()).unwrap();
        let ps = classify_poles(&pf, 1e-9);
        assert_eq!(ps.inside.len(), 1);
        assert_eq!(ps.outside.len(), 1);
        assert!((ps.inside[0].0 - c64(0.5, 0.0)).norm() < 1e-12);

        let pf = PartialFraction {
            m: 1,
            poly_part: vec![CMat::zeros(1, 1)],
            terms: vec![PfTerm {
                pole: c64(1.0 + 1e-12, 0.0),
                order: 1,
                residue: linalg::scalar_matrix(ONE),
            }],
        };
        assert_eq!(classify_poles(&pf, 1e-9).on_circle.len(), 1);
    }
}
