//! JSON schemas, CSV and SVG writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::hokalman::{markov_minus, markov_plus, CoeffWindow};
use crate::linalg::{c64, mat_serde, CMat, C64};
use crate::pencil::EssCloud;
use crate::ratsym::{FactoredDen, RationalMatrix, RationalScalar, Realization};
use crate::riccati::{CellLabel, RegionMap, RiccatiOutcome};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Schema(String),
    #[error(transparent)]
    Numerical(#[from] Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

type Cplx = [f64; 2];

fn cplx(z: C64) -> Cplx {
    [z.re, z.im]
}

fn from_cplx(v: &[Cplx]) -> Vec<C64> {
    v.iter().map(|p| c64(p[0], p[1])).collect()
}

/// Dense matrix with explicit dimensions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<Cplx>>,
}

impl MatJson {
    pub fn from_mat(m: &CMat) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: mat_serde::to_rows(m),
        }
    }

    pub fn to_mat(&self) -> IoResult<CMat> {
        let m = mat_serde::from_rows(&self.data, self.cols).map_err(IoError::Schema)?;
        if m.shape() != (self.rows, self.cols) {
            return Err(IoError::Schema(format!(
                "matrix declared {}×{} but data is {}×{}",
                self.rows,
                self.cols,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactoredDenJson {
    pub lead: Cplx,
    /// `(pole, multiplicity)` pairs.
    pub factors: Vec<(Cplx, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntryJson {
    pub num: Vec<Cplx>,
    /// May be omitted when `den_factored` is given.
    #[serde(default)]
    pub den: Vec<Cplx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den_factored: Option<FactoredDenJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolJson {
    pub m: usize,
    pub entries: Vec<Vec<EntryJson>>,
}

impl SymbolJson {
    pub fn to_symbol(&self) -> IoResult<RationalMatrix> {
        if self.entries.len() != self.m || self.entries.iter().any(|r| r.len() != self.m) {
            return Err(IoError::Schema(format!("entries must form a {0}×{0} grid", self.m)));
        }
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(entry_to_scalar).collect::<IoResult<Vec<_>>>())
            .collect::<IoResult<Vec<_>>>()?;
        Ok(RationalMatrix::new(entries)?)
    }

    pub fn from_symbol(sym: &RationalMatrix) -> Self {
        let entries = sym
            .entries()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| EntryJson {
                        num: e.num().coeffs().iter().map(|&z| cplx(z)).collect(),
                        den: e.den().coeffs().iter().map(|&z| cplx(z)).collect(),
                        den_factored: e.den_factored().map(|f| FactoredDenJson {
                            lead: cplx(f.lead),
                            factors: f.factors.iter().map(|&(p, k)| (cplx(p), k)).collect(),
                        }),
                    })
                    .collect()
            })
            .collect();
        Self { m: sym.m(), entries }
    }
}

fn entry_to_scalar(e: &EntryJson) -> IoResult<RationalScalar> {
    let num = from_cplx(&e.num);
    Ok(match &e.den_factored {
        Some(f) => {
            let den = FactoredDen {
                lead: c64(f.lead[0], f.lead[1]),
                factors: f.factors.iter().map(|(p, k)| (c64(p[0], p[1]), *k)).collect(),
            };
            let sc = RationalScalar::with_factored_den(num, den)?;
            if e.den.is_empty() {
                return Ok(sc);
            }
            let given = crate::poly::Poly::new(from_cplx(&e.den));
            let diff = given.sub(sc.den());
            let scale = sc.den().coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
            if diff.coeffs().iter().any(|z| z.norm() > 1e-10 * scale) {
                return Err(IoError::Schema("den_factored does not expand to den".into()));
            }
            sc
        }
        None => RationalScalar::new(num, from_cplx(&e.den))?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizationJson {
    #[serde(rename = "R0")]
    pub r0: MatJson,
    #[serde(rename = "A")]
    pub a: MatJson,
    #[serde(rename = "B")]
    pub b: MatJson,
    #[serde(rename = "C")]
    pub c: MatJson,
    pub alpha: MatJson,
    pub beta: MatJson,
    pub gamma: MatJson,
}

impl RealizationJson {
    pub fn from_realization(r: &Realization) -> Self {
        Self {
            r0: MatJson::from_mat(r.r0()),
            a: MatJson::from_mat(r.a()),
            b: MatJson::from_mat(r.b()),
            c: MatJson::from_mat(r.c()),
            alpha: MatJson::from_mat(r.alpha()),
            beta: MatJson::from_mat(r.beta()),
            gamma: MatJson::from_mat(r.gamma()),
        }
    }

    pub fn to_realization(&self) -> IoResult<Realization> {
        Ok(Realization::new(
            self.r0.to_mat()?,
            self.a.to_mat()?,
            self.b.to_mat()?,
            self.c.to_mat()?,
            self.alpha.to_mat()?,
            self.beta.to_mat()?,
            self.gamma.to_mat()?,
        )?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffWindowJson {
    pub m: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub a0: MatJson,
    pub plus: Vec<MatJson>,
    pub minus: Vec<MatJson>,
}

impl CoeffWindowJson {
    pub fn to_window(&self) -> IoResult<CoeffWindow> {
        if self.plus.len() != self.j || self.minus.len() != self.j {
            return Err(IoError::Schema(format!("plus and minus must hold J = {} blocks", self.j)));
        }
        let conv = |v: &[MatJson]| v.iter().map(MatJson::to_mat).collect::<IoResult<Vec<_>>>();
        let cw = CoeffWindow::new(self.a0.to_mat()?, conv(&self.plus)?, conv(&self.minus)?)?;
        if cw.m != self.m {
            return Err(IoError::Schema(format!("blocks are {0}×{0}, declared m = {1}", cw.m, self.m)));
        }
        Ok(cw)
    }
}

/// Input accepted by the command line: a symbol or a ready realization.
#[derive(Clone, Debug)]
pub enum SystemInput {
    Symbol(RationalMatrix),
    Realization(Box<Realization>),
}

pub fn read_text(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_system(text: &str) -> IoResult<SystemInput> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let v = v.get("symbol").cloned().unwrap_or(v);
    if v.get("entries").is_some() {
        let s: SymbolJson = serde_json::from_value(v)?;
        Ok(SystemInput::Symbol(s.to_symbol()?))
    } else if v.get("R0").is_some() {
        let r: RealizationJson = serde_json::from_value(v)?;
        Ok(SystemInput::Realization(Box::new(r.to_realization()?)))
    } else {
        Err(IoError::Schema("expected a symbol (\"entries\") or a realization (\"R0\")".into()))
    }
}

/// Writes through a temporary sibling and renames on success.
pub fn write_atomic(path: &Path, contents: &[u8]) -> IoResult<()> {
    let err = |source| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        err(e)
    })
}

pub fn fmt_complex(z: C64) -> String {
    format!("{}{:+}j", z.re, z.im)
}

/// One row per block row, entries as `re+imj`.
pub fn matrix_csv(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_complex(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Markov parameters `a_j`, `-count <= j <= count`, one block per row
/// flattened row-major.
pub fn markov_csv(real: &Realization, count: usize) -> String {
    let m = real.m();
    let mut out = String::from("j");
    for i in 0..m {
        for k in 0..m {
            let _ = write!(out, ",a{i}{k}");
        }
    }
    out.push('\n');
    let plus = markov_plus(real, count);
    let minus = markov_minus(real, count);
    let blocks = minus
        .iter()
        .enumerate()
        .rev()
        .map(|(j, b)| (-(j as i64) - 1, b))
        .chain(std::iter::once((0, real.r0())))
        .chain(plus.iter().enumerate().map(|(j, b)| (j as i64 + 1, b)));
    for (j, b) in blocks {
        let _ = write!(out, "{j}");
        for i in 0..m {
            for k in 0..m {
                let _ = write!(out, ",{}", fmt_complex(b[(i, k)]));
            }
        }
        out.push('\n');
    }
    out
}

pub fn cloud_csv(cloud: &EssCloud) -> String {
    let mut out = String::from("theta,re_lambda,im_lambda\n");
    for p in &cloud.points {
        let _ = writeln!(out, "{},{},{}", p.theta, p.lambda.re, p.lambda.im);
    }
    out
}

#[derive(Serialize)]
struct CloudSidecar<'a> {
    n_theta: usize,
    points: usize,
    whole_plane: bool,
    degenerate_nus: Vec<Cplx>,
    exceptional: Vec<Cplx>,
    max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

pub fn cloud_sidecar_json(cloud: &EssCloud) -> String {
    let side = CloudSidecar {
        n_theta: cloud.thetas.len(),
        points: cloud.points.len(),
        whole_plane: cloud.whole_plane,
        degenerate_nus: cloud.degenerate_nus.iter().map(|&z| cplx(z)).collect(),
        exceptional: cloud.exceptional.iter().map(|&z| cplx(z)).collect(),
        max_residual: cloud.max_residual,
        note: cloud.whole_plane.then_some("essential spectrum: whole plane"),
    };
    serde_json::to_string_pretty(&side).expect("sidecar serializes")
}

pub fn regions_csv(map: &RegionMap) -> String {
    let mut out = String::from("re,im,label\n");
    for iy in 0..map.grid_n {
        for ix in 0..map.grid_n {
            let z = map.cell_center(ix, iy);
            let _ = writeln!(out, "{},{},{}", z.re, z.im, map.label(ix, iy).name());
        }
    }
    out
}

#[derive(Serialize)]
pub struct OutcomeJson {
    pub lambda: Cplx,
    pub verdict: crate::riccati::Verdict,
    pub certificate: crate::riccati::Certificate,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<MatJson>,
    #[serde(rename = "A_circ", skip_serializing_if = "Option::is_none")]
    pub a_circ: Option<MatJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_circ: Option<MatJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_a_circ: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_alpha_circ: Option<f64>,
}

impl OutcomeJson {
    pub fn from_outcome(o: &RiccatiOutcome) -> Self {
        Self {
            lambda: cplx(o.lambda),
            verdict: o.verdict,
            certificate: o.certificate,
            q: o.q.as_ref().map(MatJson::from_mat),
            a_circ: o.a_circ.as_ref().map(MatJson::from_mat),
            alpha_circ: o.alpha_circ.as_ref().map(MatJson::from_mat),
            residual: o.residual.is_finite().then_some(o.residual),
            rho_a_circ: o.rho_a_circ,
            rho_alpha_circ: o.rho_alpha_circ,
        }
    }
}

#[derive(Serialize)]
struct ComponentJson {
    id: usize,
    cells: usize,
    touches_edge: bool,
    label: &'static str,
    probes: Vec<OutcomeJson>,
}

#[derive(Serialize)]
struct VerdictsJson {
    bbox: [f64; 4],
    grid_n: usize,
    whole_plane: bool,
    components: Vec<ComponentJson>,
    far_field: Option<OutcomeJson>,
}

pub fn verdicts_json(map: &RegionMap) -> String {
    let v = VerdictsJson {
        bbox: [map.bbox.re_min, map.bbox.re_max, map.bbox.im_min, map.bbox.im_max],
        grid_n: map.grid_n,
        whole_plane: map.whole_plane,
        components: map
            .components
            .iter()
            .map(|c| ComponentJson {
                id: c.id,
                cells: c.cells,
                touches_edge: c.touches_edge,
                label: c.label.name(),
                probes: c.probes.iter().map(|p| OutcomeJson::from_outcome(&p.outcome)).collect(),
            })
            .collect(),
        far_field: map.far_field.as_ref().map(|p| OutcomeJson::from_outcome(&p.outcome)),
    };
    serde_json::to_string_pretty(&v).expect("verdicts serialize")
}

const SVG_SIZE: f64 = 600.0;

struct Frame {
    re_min: f64,
    im_max: f64,
    scale: f64,
}

impl Frame {
    fn x(&self, re: f64) -> f64 {
        (re - self.re_min) * self.scale
    }
    fn y(&self, im: f64) -> f64 {
        (self.im_max - im) * self.scale
    }
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
        s = SVG_SIZE
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn svg_axes(out: &mut String, f: &Frame, r: f64) {
    let _ = writeln!(
        out,
        r##"<g stroke="#999" stroke-width="0.5"><line x1="0" y1="{y:.2}" x2="{s}" y2="{y:.2}"/><line x1="{x:.2}" y1="0" x2="{x:.2}" y2="{s}"/></g>"##,
        y = f.y(0.0),
        x = f.x(0.0),
        s = SVG_SIZE
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#3a6" stroke-width="0.8" stroke-dasharray="4 3"/>"##,
        f.x(0.0),
        f.y(0.0),
        r * f.scale
    );
}

fn svg_points(out: &mut String, f: &Frame, pts: &[C64], color: &str, radius: f64) {
    let _ = writeln!(out, r#"<g fill="{color}">"#);
    for z in pts {
        let (x, y) = (f.x(z.re), f.y(z.im));
        if (-5.0..=SVG_SIZE + 5.0).contains(&x) && (-5.0..=SVG_SIZE + 5.0).contains(&y) {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}"/>"#);
        }
    }
    out.push_str("</g>\n");
}

/// Scatter of the swept essential spectrum with the unit circle.
pub fn cloud_svg(cloud: &EssCloud, bbox: &crate::riccati::Bbox) -> String {
    let f = Frame {
        re_min: bbox.re_min,
        im_max: bbox.im_max,
        scale: SVG_SIZE / (bbox.re_max - bbox.re_min),
    };
    let mut out = String::new();
    svg_open(&mut out);
    svg_axes(&mut out, &f, 1.0);
    let pts: Vec<C64> = cloud.points.iter().map(|p| p.lambda).collect();
    svg_points(&mut out, &f, &pts, "#1f4e9c", 1.2);
    svg_points(&mut out, &f, &cloud.exceptional, "#c0392b", 3.0);
    if cloud.whole_plane {
        let _ = writeln!(out, r#"<text x="10" y="20" font-size="14">essential spectrum: whole plane</text>"#);
    }
    out.push_str("</svg>\n");
    out
}

fn label_color(l: CellLabel) -> &'static str {
    match l {
        CellLabel::EssBand => "#1f2a44",
        CellLabel::Resolvent => "#ffffff",
        CellLabel::Spectrum => "#8fb3e8",
        CellLabel::Unknown => "#f2c14e",
    }
}

/// Raster of component labels with the cloud drawn on top.
pub fn regions_svg(map: &RegionMap, cloud: &EssCloud) -> String {
    let b = &map.bbox;
    let f = Frame {
        re_min: b.re_min,
        im_max: b.im_max,
        scale: SVG_SIZE / (b.re_max - b.re_min),
    };
    let cell = SVG_SIZE / map.grid_n as f64;
    let mut out = String::new();
    svg_open(&mut out);
    out.push_str(r#"<g shape-rendering="crispEdges">"#);
    out.push('\n');
    for iy in 0..map.grid_n {
        let y = SVG_SIZE - (iy + 1) as f64 * cell;
        let mut ix = 0;
        while ix < map.grid_n {
            let l = map.label(ix, iy);
            let start = ix;
            while ix < map.grid_n && map.label(ix, iy) == l {
                ix += 1;
            }
            if l == CellLabel::Resolvent {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                start as f64 * cell,
                y,
                (ix - start) as f64 * cell,
                cell,
                label_color(l)
            );
        }
    }
    out.push_str("</g>\n");
    svg_axes(&mut out, &f, 1.0);
    let pts: Vec<C64> = cloud.points.iter().map(|p| p.lambda).collect();
    svg_points(&mut out, &f, &pts, "#1f2a44", 0.8);
    for c in &map.components {
        let z = c.representative().lambda;
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="#c0392b" stroke-width="1.2"/>"##,
            f.x(z.re),
            f.y(z.im)
        );
    }
    out.push_str("</svg>\n");
    out
}
