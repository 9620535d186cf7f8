//! Rasterized complement of the essential spectrum, its connected
//! components and one resolvent probe per component.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RiccatiOutcome, RiccatiSolver, Verdict};
use crate::config::Config;
use crate::linalg::{c64, C64};
use crate::pencil::{assemble_pencil, ess_points_at, EssCloud};
use crate::ratsym::Realization;

/// Bisection depth of the band refinement between neighbouring angles.
const MAX_REFINE_DEPTH: usize = 14;

const REPROBES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellLabel {
    EssBand,
    Resolvent,
    Spectrum,
    Unknown,
}

impl CellLabel {
    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Resolvent => Self::Resolvent,
            Verdict::NotResolvent => Self::Spectrum,
            Verdict::Unknown => Self::Unknown,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::EssBand => "ess-band",
            Self::Resolvent => "resolvent",
            Self::Spectrum => "spectrum",
            Self::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bbox {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn center(&self) -> C64 {
        c64(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }

    /// Square box around the swept points: far outliers near poles are
    /// clipped, the rest is inflated by half and merged with `[-2, 2]^2`.
    pub fn around(points: &[C64], symmetric: bool) -> Self {
        let mut mags: Vec<f64> = points.iter().map(|z| z.norm()).filter(|r| r.is_finite()).collect();
        mags.sort_by(f64::total_cmp);
        let median = mags.get(mags.len() / 2).copied().unwrap_or(0.0);
        let clip = (2.0 * median).max(2.0);
        let kept: Vec<C64> = points.iter().copied().filter(|z| z.norm() <= clip).collect();
        let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) = (-2.0f64, 2.0f64, -2.0f64, 2.0f64);
        if !kept.is_empty() {
            let fold = |f: fn(f64, f64) -> f64, g: fn(&C64) -> f64, init: f64| kept.iter().map(g).fold(init, f);
            let (r0, r1) = (fold(f64::min, |z| z.re, f64::INFINITY), fold(f64::max, |z| z.re, f64::NEG_INFINITY));
            let (i0, i1) = (fold(f64::min, |z| z.im, f64::INFINITY), fold(f64::max, |z| z.im, f64::NEG_INFINITY));
            let (cr, hr) = (0.5 * (r0 + r1), 0.75 * (r1 - r0));
            let (ci, hi) = (0.5 * (i0 + i1), 0.75 * (i1 - i0));
            lo_re = lo_re.min(cr - hr);
            hi_re = hi_re.max(cr + hr);
            lo_im = lo_im.min(ci - hi);
            hi_im = hi_im.max(ci + hi);
        }
        if symmetric {
            let h = lo_im.abs().max(hi_im.abs());
            lo_im = -h;
            hi_im = h;
        }
        let half = 0.5 * (hi_re - lo_re).max(hi_im - lo_im);
        let (cr, ci) = (0.5 * (lo_re + hi_re), 0.5 * (lo_im + hi_im));
        Self {
            re_min: cr - half,
            re_max: cr + half,
            im_min: ci - half,
            im_max: ci + half,
        }
    }
}

/// A resolvent query and its answer.
#[derive(Clone, Debug)]
pub struct Probe {
    pub lambda: C64,
    pub outcome: RiccatiOutcome,
}

#[derive(Clone, Debug)]
pub struct Component {
    pub id: usize,
    pub cells: usize,
    /// Whether the component reaches the edge of the box.
    pub touches_edge: bool,
    pub label: CellLabel,
    /// Probes in order; the last one decided the label.
    pub probes: Vec<Probe>,
}

impl Component {
    pub fn representative(&self) -> &Probe {
        self.probes.last().expect("component without probe")
    }
}

#[derive(Clone, Debug)]
pub struct RegionMap {
    pub bbox: Bbox,
    pub grid_n: usize,
    /// Row-major labels; row `iy` runs along the real axis at fixed imaginary part.
    pub labels: Vec<CellLabel>,
    pub component_of: Vec<Option<usize>>,
    pub components: Vec<Component>,
    pub far_field: Option<Probe>,
    pub whole_plane: bool,
    /// Points rasterized into the band, including refinement samples.
    pub band_points: usize,
    pub dilate: usize,
}

impl RegionMap {
    pub fn cell_size(&self) -> f64 {
        (self.bbox.re_max - self.bbox.re_min) / self.grid_n as f64
    }

    /// Radius within which every point of the swept cloud is covered by the band.
    pub fn band_eps(&self) -> f64 {
        self.dilate as f64 * self.cell_size()
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> C64 {
        let h = self.cell_size();
        c64(
            self.bbox.re_min + (ix as f64 + 0.5) * h,
            self.bbox.im_min + (iy as f64 + 0.5) * h,
        )
    }

    pub fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        cell_index(&self.bbox, self.grid_n, z)
    }

    pub fn label(&self, ix: usize, iy: usize) -> CellLabel {
        self.labels[iy * self.grid_n + ix]
    }

    pub fn label_at(&self, z: C64) -> Option<CellLabel> {
        self.cell_of(z).map(|(ix, iy)| self.label(ix, iy))
    }

    pub fn component_at(&self, z: C64) -> Option<&Component> {
        let (ix, iy) = self.cell_of(z)?;
        self.component_of[iy * self.grid_n + ix].map(|c| &self.components[c])
    }
}

fn cell_index(b: &Bbox, n: usize, z: C64) -> Option<(usize, usize)> {
    if !b.contains(z) {
        return None;
    }
    let h = (b.re_max - b.re_min) / n as f64;
    let ix = (((z.re - b.re_min) / h) as usize).min(n - 1);
    let iy = (((z.im - b.im_min) / h) as usize).min(n - 1);
    Some((ix, iy))
}

/// Extra sweep points between neighbouring angles whose point sets are more
/// than one cell apart inside the box.
fn refinement_points(real: &Realization, cloud: &EssCloud, bbox: &Bbox, h: f64, cfg: &Config) -> Vec<C64> {
    let pl = assemble_pencil(real);
    let mut by_theta: Vec<(f64, Vec<C64>)> = cloud.thetas.iter().map(|&t| (t, Vec::new())).collect();
    let mut k = 0;
    for p in &cloud.points {
        while k < by_theta.len() && by_theta[k].0 != p.theta {
            k += 1;
        }
        if k < by_theta.len() {
            by_theta[k].1.push(p.lambda);
        }
    }
    let n = by_theta.len();
    if n == 0 {
        return Vec::new();
    }
    let at = |theta: f64| -> Option<Vec<C64>> {
        let nu = c64(theta.cos(), theta.sin());
        ess_points_at(&pl, real, nu, cfg).ok().filter(|a| !a.singular).map(|a| a.lambdas)
    };
    let gap = |s1: &[C64], s2: &[C64]| -> bool {
        let far = |a: &[C64], b: &[C64]| {
            a.iter().filter(|z| bbox.contains(**z)).any(|z| b.iter().all(|w| (z - w).norm() > h))
        };
        far(s1, s2) || far(s2, s1)
    };
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (t0, s0) = &by_theta[i];
            let (t1, s1) = &by_theta[(i + 1) % n];
            let t1 = if i + 1 == n { t1 + std::f64::consts::TAU } else { *t1 };
            let mut out = Vec::new();
            let mut stack = vec![(*t0, s0.clone(), t1, s1.clone(), 0usize)];
            while let Some((ta, sa, tb, sb, depth)) = stack.pop() {
                if depth >= MAX_REFINE_DEPTH || !gap(&sa, &sb) {
                    continue;
                }
                let tm = 0.5 * (ta + tb);
                let Some(sm) = at(tm) else { continue };
                out.extend(sm.iter().copied());
                stack.push((ta, sa, tm, sm.clone(), depth + 1));
                stack.push((tm, sm, tb, sb, depth + 1));
            }
            out
        })
        .collect()
}

/// Labels the complement of the swept essential spectrum by probing one
/// point per connected component.
pub fn classify_components(cloud: &EssCloud, real: &Realization, cfg: &Config) -> RegionMap {
    let symmetric = real.is_real();
    let mut points = cloud.all_lambdas();
    if symmetric {
        let conj: Vec<C64> = points.iter().map(|z| z.conj()).collect();
        points.extend(conj);
    }
    let bbox = Bbox::around(&points, symmetric);
    let n = cfg.grid_n.max(2);
    let cells = n * n;
    if cloud.whole_plane {
        return RegionMap {
            bbox,
            grid_n: n,
            labels: vec![CellLabel::Spectrum; cells],
            component_of: vec![None; cells],
            components: Vec::new(),
            far_field: None,
            whole_plane: true,
            band_points: 0,
            dilate: cfg.dilate,
        };
    }
    let h = (bbox.re_max - bbox.re_min) / n as f64;
    let extra = refinement_points(real, cloud, &bbox, h, cfg);
    points.extend(extra.iter().copied());
    if symmetric {
        points.extend(extra.iter().map(|z| z.conj()));
    }

    let mut band = vec![false; cells];
    let d = cfg.dilate as isize;
    let mut band_points = 0;
    for z in &points {
        let Some((ix, iy)) = cell_index(&bbox, n, *z) else { continue };
        band_points += 1;
        for dy in -d..=d {
            for dx in -d..=d {
                let (x, y) = (ix as isize + dx, iy as isize + dy);
                if x >= 0 && y >= 0 && (x as usize) < n && (y as usize) < n {
                    band[y as usize * n + x as usize] = true;
                }
            }
        }
    }
    if symmetric {
        for iy in 0..n {
            for ix in 0..n {
                if band[iy * n + ix] {
                    band[(n - 1 - iy) * n + ix] = true;
                }
            }
        }
    }

    let neighbours = |c: usize| {
        let (ix, iy) = (c % n, c / n);
        let mut v = Vec::with_capacity(4);
        if ix > 0 {
            v.push(c - 1);
        }
        if ix + 1 < n {
            v.push(c + 1);
        }
        if iy > 0 {
            v.push(c - n);
        }
        if iy + 1 < n {
            v.push(c + n);
        }
        v
    };

    // distance (in cell steps) to the band, by multi-source BFS
    let mut dist = vec![usize::MAX; cells];
    let mut queue: VecDeque<usize> = (0..cells).filter(|&c| band[c]).collect();
    for &c in &queue {
        dist[c] = 0;
    }
    if queue.is_empty() {
        // no band inside the box: measure from the box edge instead
        for (c, d) in dist.iter_mut().enumerate() {
            let (ix, iy) = (c % n, c / n);
            if ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1 {
                *d = 0;
                queue.push_back(c);
            }
        }
    }
    while let Some(c) = queue.pop_front() {
        for nb in neighbours(c) {
            if dist[nb] == usize::MAX {
                dist[nb] = dist[c] + 1;
                queue.push_back(nb);
            }
        }
    }

    let mut component_of: Vec<Option<usize>> = vec![None; cells];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for start in 0..cells {
        if band[start] || component_of[start].is_some() {
            continue;
        }
        let id = members.len();
        let mut list = vec![start];
        component_of[start] = Some(id);
        let mut head = 0;
        while head < list.len() {
            let c = list[head];
            head += 1;
            for nb in neighbours(c) {
                if !band[nb] && component_of[nb].is_none() {
                    component_of[nb] = Some(id);
                    list.push(nb);
                }
            }
        }
        members.push(list);
    }

    let center = |c: usize| c64(bbox.re_min + ((c % n) as f64 + 0.5) * h, bbox.im_min + ((c / n) as f64 + 0.5) * h);
    let solver = RiccatiSolver::new(real, cfg);
    let components: Vec<Component> = members
        .par_iter()
        .enumerate()
        .map(|(id, list)| {
            let best = *list.iter().max_by_key(|&&c| (dist[c], std::cmp::Reverse(c))).expect("empty component");
            let touches_edge = list.iter().any(|&c| {
                let (ix, iy) = (c % n, c / n);
                ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1
            });
            let mut probes = vec![probe(&solver, center(best))];
            let mut rng = cfg.rng_for(0xC0_4E00 + id as u64);
            let deep: Vec<usize> = list.iter().copied().filter(|&c| 2 * dist[c] >= dist[best]).collect();
            while probes.last().is_some_and(|p| p.outcome.verdict == Verdict::Unknown) && probes.len() <= REPROBES {
                let c = deep[rng.random_range(0..deep.len())];
                let jitter = c64(rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25)) * h;
                probes.push(probe(&solver, center(c) + jitter));
            }
            Component {
                id,
                cells: list.len(),
                touches_edge,
                label: CellLabel::from_verdict(probes.last().expect("probe").outcome.verdict),
                probes,
            }
        })
        .collect();

    let labels = (0..cells)
        .map(|c| match component_of[c] {
            Some(id) => components[id].label,
            None => CellLabel::EssBand,
        })
        .collect();
    let far = bbox.center() + C64::from_polar(3.0 * bbox.radius(), 0.5);
    RegionMap {
        bbox,
        grid_n: n,
        labels,
        component_of,
        components,
        far_field: Some(probe(&solver, far)),
        whole_plane: false,
        band_points,
        dilate: cfg.dilate,
    }
}

fn probe(solver: &RiccatiSolver<'_>, lambda: C64) -> Probe {
    Probe {
        lambda,
        outcome: solver.solve(lambda),
    }
}
