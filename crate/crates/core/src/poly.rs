//! Univariate complex polynomials in ascending-power coefficient order.

use crate::error::Result;
use crate::linalg::{self, c64, CMat, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    /// Trailing exact zeros are dropped; the zero polynomial has no coefficients.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// `lead * prod (z - r)^k`.
    pub fn from_roots(roots: &[(C64, usize)], lead: C64) -> Self {
        let mut p = Self::constant(lead);
        for &(r, k) in roots {
            for _ in 0..k {
                p = p.mul(&Self::new(vec![-r, ONE]));
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn coeff(&self, i: usize) -> C64 {
        self.coeffs.get(i).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `sum |c_i| |z|^i`, the natural scale of a rounding error in `eval(z)`.
    pub fn eval_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::new(Vec::new());
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Euclidean division `self = q * d + r` with `deg r < deg d`.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::new(Vec::new()), self.clone());
        }
        let lead = d.leading();
        let mut q = vec![ZERO; r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = r[k + dd] / lead;
            q[k] = c;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                r[k + j] -= c * dj;
            }
            r[k + dd] = ZERO;
        }
        r.truncate(dd);
        (Self::new(q), Self::new(r))
    }

    /// Coefficients of `t -> p(t + c)`.
    pub fn taylor_shift(&self, c: C64) -> Self {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = a[j + 1];
                a[j] += c * next;
            }
        }
        Self::new(a)
    }

    /// All roots via the eigenvalues of a balanced companion matrix, with
    /// exact roots at the origin split off first.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let Some(_) = self.degree() else {
            return Ok(Vec::new());
        };
        let shift = self.coeffs.iter().take_while(|&&c| c == ZERO).count();
        let core = &self.coeffs[shift..];
        let d = core.len() - 1;
        let mut roots = vec![ZERO; shift];
        if d == 0 {
            return Ok(roots);
        }
        let lead = core[d];
        let mut comp = CMat::zeros(d, d);
        for i in 1..d {
            comp[(i, i - 1)] = ONE;
        }
        for i in 0..d {
            comp[(i, d - 1)] = -core[i] / lead;
        }
        balance(&mut comp);
        let mut found = linalg::eigenvalues(&comp)?;
        let p = Poly::new(core.to_vec());
        let dp = p.derivative();
        for z in &mut found {
            polish_root(&p, &dp, z);
        }
        roots.extend(found);
        Ok(roots)
    }
}

/// Newton steps that are kept only while they reduce `|p(z)|`.
fn polish_root(p: &Poly, dp: &Poly, z: &mut C64) {
    let mut val = p.eval(*z).norm();
    for _ in 0..3 {
        let d = dp.eval(*z);
        if d.norm() == 0.0 {
            return;
        }
        let cand = *z - p.eval(*z) / d;
        let cv = p.eval(cand).norm();
        if cv < val {
            *z = cand;
            val = cv;
        } else {
            return;
        }
    }
}

/// Parlett–Reinsch diagonal balancing in place (similarity by powers of 2).
fn balance(m: &mut CMat) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            while cc < r / radix {
                cc *= radix * radix;
                f *= radix;
            }
            while cc > r * radix {
                cc /= radix * radix;
                f /= radix;
            }
            let c_new = c * f;
            let r_new = r / f;
            if (c_new + r_new) < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Groups computed roots into `(root, multiplicity)` pairs.
///
/// Roots within a loose distance are candidate clusters; a cluster of size
/// `k` is accepted when the first `k - 1` derivatives of `p` vanish at its
/// mean to within `cluster_tol^(k - j)` relative accuracy. Rejected candidates
/// fall back to plain distance clustering at `cluster_tol`.
pub fn cluster_roots(p: &Poly, roots: &[C64], cluster_tol: f64) -> Vec<(C64, usize)> {
    let loose = groups_within(roots, 1e-4);
    let mut out = Vec::new();
    for g in loose {
        let members: Vec<C64> = g.iter().map(|&i| roots[i]).collect();
        if members.len() == 1 || is_multiple_root(p, &members, cluster_tol) {
            out.push((refine_multiple(p, mean(&members), members.len()), members.len()));
        } else {
            for sub in groups_within(&members, cluster_tol) {
                let sm: Vec<C64> = sub.iter().map(|&i| members[i]).collect();
                out.push((mean(&sm), sm.len()));
            }
        }
    }
    out
}

/// Distance-only clustering (single linkage, relative tolerance).
pub fn cluster_points(points: &[C64], rel_tol: f64) -> Vec<(C64, usize)> {
    groups_within(points, rel_tol)
        .into_iter()
        .map(|g| {
            let members: Vec<C64> = g.iter().map(|&i| points[i]).collect();
            (mean(&members), members.len())
        })
        .collect()
}

fn mean(v: &[C64]) -> C64 {
    v.iter().sum::<C64>() / v.len() as f64
}

fn groups_within(points: &[C64], rel_tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1.0f64.max(points[i].norm()).max(points[j].norm());
            if (points[i] - points[j]).norm() <= rel_tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// A root of multiplicity `k` is a simple root of the `(k-1)`-th derivative.
fn refine_multiple(p: &Poly, z0: C64, k: usize) -> C64 {
    if k < 2 {
        return z0;
    }
    let mut d = p.clone();
    for _ in 0..(k - 1) {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = z0;
    polish_root(&d, &dd, &mut z);
    if (z - z0).norm() <= 1e-4 * 1.0f64.max(z0.norm()) {
        z
    } else {
        z0
    }
}

fn is_multiple_root(p: &Poly, members: &[C64], cluster_tol: f64) -> bool {
    let k = members.len();
    let mu = mean(members);
    let mut d = p.clone();
    for j in 0..k {
        let tol = cluster_tol.powi((k - j) as i32).max(1e3 * f64::EPSILON);
        let scale = d.eval_scale(mu);
        if scale > 0.0 && d.eval(mu).norm() > tol * scale {
            return false;
        }
        d = d.derivative();
    }
    true
}

/// First `k` coefficients of the power series `num / den` at the origin.
/// Requires `den(0) != 0`.
pub fn series_div(num: &Poly, den: &Poly, k: usize) -> Vec<C64> {
    let d0 = den.coeff(0);
    let mut out = vec![ZERO; k];
    for i in 0..k {
        let mut acc = num.coeff(i);
        for j in 1..=i {
            acc -= den.coeff(j) * out[i - j];
        }
        out[i] = acc / d0;
    }
    out
}

/// Coefficients of the polynomial of degree `< nodes.len()` through
/// `values` at `scale * exp(2 pi i k / n)`; this is the inverse of the
/// scaled-DFT Vandermonde matrix.
pub fn interpolate_scaled_roots_of_unity(values: &[C64], scale: f64) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let mut acc = ZERO;
            for (j, &v) in values.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                acc += v * c64(ang.cos(), ang.sin());
            }
            acc / (n as f64 * scale.powi(k as i32))
        })
        .collect()
}

pub fn root_of_unity_node(scale: f64, j: usize, n: usize) -> C64 {
    let ang = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
    c64(scale * ang.cos(), scale * ang.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Poly {
        Poly::new(c.iter().map(|&x| c64(x, 0.0)).collect())
    }

    #[test]
    fn divrem_example_two() {
        // (z^2 + 1) / (z - 1) = z + 1, remainder 2
        let (q, r) = p(&[1.0, 0.0, 1.0]).divrem(&p(&[-1.0, 1.0]));
        assert_eq!(q, p(&[1.0, 1.0]));
        assert_eq!(r, p(&[2.0]));
    }

    #[test]
    fn roots_of_known_polynomials() {
        let mut r = p(&[-1.0, 0.0, 1.0]).roots().unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c64(-1.0, 0.0)).norm() < 1e-14);
        assert!((r[1] - c64(1.0, 0.0)).norm() < 1e-14);
        let r = p(&[0.0, 0.0, 1.0]).roots().unwrap();
        assert_eq!(r, vec![ZERO, ZERO]);
    }

    #[test]
    fn double_root_is_clustered() {
        let q = Poly::from_roots(&[(c64(1.0, 0.0), 2), (c64(-0.5, 0.25), 1)], c64(3.0, 0.0));
        let r = q.roots().unwrap();
        let cl = cluster_roots(&q, &r, 1e-7);
        assert_eq!(cl.len(), 2);
        let dbl = cl.iter().find(|c| c.1 == 2).unwrap();
        assert!((dbl.0 - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn taylor_shift_matches_eval() {
        let q = p(&[1.0, -2.0, 0.5, 3.0]);
        let c = c64(0.3, -1.1);
        let s = q.taylor_shift(c);
        let t = c64(0.7, 0.2);
        assert!((s.eval(t) - q.eval(t + c)).norm() < 1e-13);
    }

    #[test]
    fn series_division() {
        // 1 / (1 - z) = 1 + z + z^2 + ...
        let s = series_div(&p(&[1.0]), &p(&[1.0, -1.0]), 4);
        assert!(s.iter().all(|&c| (c - ONE).norm() < 1e-15));
    }

    #[test]
    fn interpolation_inverts_evaluation() {
        let q = p(&[1.0, 2.0, -3.0, 0.5]);
        let vals: Vec<C64> = (0..4).map(|j| q.eval(root_of_unity_node(1.37, j, 4))).collect();
        let c = interpolate_scaled_roots_of_unity(&vals, 1.37);
        for (a, b) in c.iter().zip(q.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
