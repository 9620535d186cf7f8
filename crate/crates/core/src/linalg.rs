//! Dense complex linear algebra helpers on top of nalgebra.
//!
//! Every helper accepts empty (0×k, k×0) operands and returns the shape an
//! exact computation would produce, so callers never special-case empty
//! state spaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Builds a complex matrix from real row slices.
pub fn real_matrix(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    CMat::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn scalar_matrix(v: C64) -> CMat {
    CMat::from_element(1, 1, v)
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol * (1.0 + z.re.abs()))
}

/// Complex Schur decomposition `m = q t q^H` with `t` upper triangular.
///
/// Householder reduction to Hessenberg form followed by single-shift QR
/// sweeps with Wilkinson shifts.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "schur needs a square matrix");
    let mut t = m.clone();
    let mut q = eye(n);
    hessenberg(&mut t, &mut q);
    hessenberg_qr(&mut t, &mut q)?;
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

fn hessenberg(h: &mut CMat, q: &mut CMat) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let nx = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nx == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        v[0] += phase * nx;
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= nv);
        // rows k+1.. of h <- (I - 2 v v^H) rows
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(a, vi)| vi.conj() * h[(k + 1 + a, j)]).sum();
            for (a, vi) in v.iter().enumerate() {
                h[(k + 1 + a, j)] -= *vi * dot * 2.0;
            }
        }
        // columns k+1.. of h and q <- columns (I - 2 v v^H)
        for mat in [&mut *h, &mut *q] {
            for i in 0..n {
                let dot: C64 = v.iter().enumerate().map(|(a, vi)| mat[(i, k + 1 + a)] * vi).sum();
                for (a, vi) in v.iter().enumerate() {
                    mat[(i, k + 1 + a)] -= dot * vi.conj() * 2.0;
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Rotation `[c s; -conj(s) c]` sending `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let nrm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return (1.0, ZERO);
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    (ax / nrm, (x / ax) * y.conj() / nrm)
}

fn rotate_rows(h: &mut CMat, i: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let a = h[(i, j)];
        let b = h[(i + 1, j)];
        h[(i, j)] = a * c + s * b;
        h[(i + 1, j)] = -s.conj() * a + b * c;
    }
}

fn rotate_cols(h: &mut CMat, i: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for r in rows {
        let a = h[(r, i)];
        let b = h[(r, i + 1)];
        h[(r, i)] = a * c + b * s.conj();
        h[(r, i + 1)] = -a * s + b * c;
    }
}

fn hessenberg_qr(h: &mut CMat, q: &mut CMat) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let scale = fro_norm(h).max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // deflation scan
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= eps * diag || sub <= eps * eps * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            return Err(Error::NoConvergence);
        }
        let shift = if iter.is_multiple_of(11) {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        let (c, s) = givens(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        rotate_rows(h, lo, c, s, lo..n);
        rotate_cols(h, lo, c, s, 0..(lo + 3).min(hi + 1));
        rotate_cols(q, lo, c, s, 0..n);
        for k in (lo + 1)..hi {
            let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            rotate_rows(h, k, c, s, (k - 1)..n);
            h[(k + 1, k - 1)] = ZERO;
            rotate_cols(h, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(q, k, c, s, 0..n);
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (e1, e2) = (mid + disc, mid - disc);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigenvalues need a square matrix");
    match n {
        0 => Ok(Vec::new()),
        1 => Ok(vec![m[(0, 0)]]),
        _ => to_faer(m).eigenvalues().map_err(|_| Error::NoConvergence),
    }
}

pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().fold(0.0, |acc, z| acc.max(z.norm())))
}

/// Eigenvalues merged into clusters of relative radius `group_tol`, each
/// reported as its mean with the cluster size. The mean of a cluster split
/// off a Jordan block is accurate to rounding even when its members are not.
pub fn clustered_eigenvalues(m: &CMat, group_tol: f64) -> Result<Vec<(C64, usize)>> {
    Ok(crate::poly::cluster_points(&eigenvalues(m)?, group_tol))
}

/// Finite-or-infinite generalized eigenvalues of `a - lambda b` as pairs
/// `(num, den)` with `lambda = num / den`.
pub fn generalized_eigenvalues(a: &CMat, b: &CMat) -> Result<Vec<(C64, C64)>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::ComputeEigenvectors::No;
    use faer::linalg::gevd;
    let (mut fa, mut fb) = (to_faer(a), to_faer(b));
    let mut sa = faer::diag::Diag::<C64>::zeros(n);
    let mut sb = faer::diag::Diag::<C64>::zeros(n);
    let par = faer::Par::Seq;
    // the back-substitution column is missing from gevd_scratch
    let req = gevd::gevd_scratch::<C64>(n, No, No, par, Default::default())
        .and(faer::linalg::temp_mat_scratch::<C64>(n, 1));
    let mut buf = MemBuffer::new(req);
    gevd::gevd_cplx(
        fa.as_mut(),
        fb.as_mut(),
        sa.as_mut(),
        sb.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence)?;
    let (sa, sb) = (sa.column_vector(), sb.column_vector());
    Ok((0..n).map(|i| (sa[i], sb[i])).collect())
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = u diag(s) v^H`, singular values descending.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        let k = r.min(c);
        return Ok((zeros(r, k), Vec::new(), zeros(c, k)));
    }
    let d = to_faer(m).thin_svd().map_err(|_| Error::NoConvergence)?;
    let s: Vec<f64> = d.S().column_vector().iter().map(|z| z.re).collect();
    Ok((from_faer(d.U()), s, from_faer(d.V())))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m)
        .singular_values()
        .unwrap_or_else(|_| panic!("singular value iteration failed on a {}×{} matrix", m.nrows(), m.ncols()));
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Like [`numerical_rank`], but refuses to decide when a singular value
/// ratio falls within a factor 10 of the tolerance.
pub fn decisive_rank(m: &CMat, rel_tol: f64) -> Result<usize> {
    let s = singular_values(m);
    let top = match s.first() {
        Some(&top) if top > 0.0 => top,
        _ => return Ok(0),
    };
    for &v in &s {
        let ratio = v / top;
        if ratio > rel_tol / 10.0 && ratio < rel_tol * 10.0 {
            return Err(Error::RankUndetermined {
                ratio,
                rank_tol: rel_tol,
            });
        }
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * top).count())
}

/// 2-norm condition number; 1 for empty matrices, infinity when singular.
pub fn cond(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => {
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        _ => 1.0,
    }
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    m.clone().try_inverse()
}

/// Inverse that rejects matrices with condition number above `cond_max`.
pub fn guarded_inverse(m: &CMat, cond_max: f64) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    if cond(m) > cond_max {
        return None;
    }
    inverse(m)
}

/// Solves `a x = b`.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    if a.nrows() == 0 {
        return Some(zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

pub fn det(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        return ONE;
    }
    m.clone().lu().determinant()
}

/// `|det m|` divided by the Hadamard bound (product of row norms).
pub fn relative_det(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let bound: f64 = m.row_iter().map(|r| r.norm()).product();
    if bound == 0.0 {
        return 0.0;
    }
    det(m).norm() / bound
}

/// Moore–Penrose pseudo-inverse with relative cut-off `rel_tol`.
pub fn pinv(m: &CMat, rel_tol: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return zeros(m.ncols(), m.nrows());
    }
    let (u, s, v) = svd(m).expect("svd of a finite matrix");
    let top = s.first().copied().unwrap_or(0.0);
    let mut out = zeros(m.ncols(), m.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if sk > rel_tol * top && sk > 0.0 {
            out += (v.column(k) * u.column(k).adjoint()) * c64(1.0 / sk, 0.0);
        }
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c0), b.shape()).copy_from(b);
        c0 += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r0, 0), b.shape()).copy_from(b);
        r0 += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Matrix power by repeated squaring.
pub fn matrix_power(m: &CMat, mut k: usize) -> CMat {
    let mut result = eye(m.nrows());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Smallest achievable maximum distance over all bijections between `a` and `b`
/// (bottleneck matching). Infinite when the lengths differ.
pub fn matching_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let n = a.len();
    let dist: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let mut cands: Vec<f64> = dist.iter().flatten().copied().collect();
    cands.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    cands.dedup();
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&dist, cands[mid], n) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

fn has_perfect_matching(dist: &[Vec<f64>], thr: f64, n: usize) -> bool {
    fn augment(u: usize, dist: &[Vec<f64>], thr: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for v in 0..dist.len() {
            if dist[u][v] <= thr && !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, dist, thr, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n];
    (0..n).all(|u| {
        let mut seen = vec![false; n];
        augment(u, dist, thr, &mut seen, &mut owner)
    })
}

/// Reorders a complex Schur form so that the eigenvalues accepted by
/// `select` come first. Returns the updated `(q, t)` and the number of
/// selected eigenvalues; `q t q^H` is preserved.
pub fn reorder_schur(q: &CMat, t: &CMat, select: impl Fn(C64) -> bool) -> (CMat, CMat, usize) {
    let n = t.nrows();
    let mut q = q.clone();
    let mut t = t.clone();
    let mut placed = 0;
    for k in 0..n {
        if !select(t[(k, k)]) {
            continue;
        }
        // bubble the selected eigenvalue from position k up to `placed`
        let mut pos = k;
        while pos > placed {
            swap_adjacent(&mut q, &mut t, pos - 1);
            pos -= 1;
        }
        placed += 1;
    }
    (q, t, placed)
}

/// Swaps diagonal entries `k` and `k + 1` of an upper-triangular `t`.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    // eigenvector of the 2×2 block belonging to t22
    let x1 = t[(k, k + 1)];
    let x2 = t22 - t11;
    let nx = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nx == 0.0 {
        return;
    }
    let (u11, u21) = (x1 / nx, x2 / nx);
    let (u12, u22) = (-u21.conj(), u11.conj());
    // rows k, k+1 ← U^H · rows
    for j in 0..n {
        let a = t[(k, j)];
        let b = t[(k + 1, j)];
        t[(k, j)] = u11.conj() * a + u21.conj() * b;
        t[(k + 1, j)] = u12.conj() * a + u22.conj() * b;
    }
    // columns k, k+1 ← columns · U
    for i in 0..n {
        let a = t[(i, k)];
        let b = t[(i, k + 1)];
        t[(i, k)] = a * u11 + b * u21;
        t[(i, k + 1)] = a * u12 + b * u22;
        let a = q[(i, k)];
        let b = q[(i, k + 1)];
        q[(i, k)] = a * u11 + b * u21;
        q[(i, k + 1)] = a * u12 + b * u22;
    }
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.iter().copied())
}

pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_iterator(rows, cols, v.iter().copied())
}

/// Binomial coefficient as a float (exact for the small arguments used here).
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}


/// Serde adapter: a matrix as row-major nested `[[re, im], ...]` rows.
pub mod mat_serde {
    use super::{c64, CMat};
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    /// `cols` is needed only for matrices without rows.
    pub fn from_rows(rows: &[Vec<[f64; 2]>], cols: usize) -> Result<CMat, String> {
        let c = rows.first().map_or(cols, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err("ragged matrix rows".into());
        }
        Ok(CMat::from_fn(rows.len(), c, |i, j| c64(rows[i][j][0], rows[i][j][1])))
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows, 0).map_err(D::Error::custom)
    }
}
