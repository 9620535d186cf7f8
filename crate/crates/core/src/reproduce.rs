//! The five bundled examples and their checks.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::{self, IoError, IoResult, RealizationJson, SymbolJson};
use crate::linalg::{self, c64, C64};
use crate::pencil::{assemble_pencil, det_coeffs, ess_spectrum_sweep, exceptional_set, EssCloud};
use crate::ratsym::{eval_rational_matrix, split_and_realize, RationalMatrix, Realization};
use crate::riccati::{
    classify_components, is_resolvent_alpha_only, CellLabel, RegionMap, RiccatiSolver, Verdict,
};

const EXAMPLE_FILES: [&str; 5] = [
    include_str!("../data/examples/example1.json"),
    include_str!("../data/examples/example2.json"),
    include_str!("../data/examples/example3.json"),
    include_str!("../data/examples/example4.json"),
    include_str!("../data/examples/example5.json"),
];

#[derive(Clone, Debug, Deserialize)]
pub struct ExampleFile {
    pub id: u8,
    pub title: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub symbol: SymbolJson,
    pub realization: RealizationJson,
    pub expected: serde_json::Value,
}

impl ExampleFile {
    pub fn bundled(id: u8) -> IoResult<Self> {
        let text = EXAMPLE_FILES
            .get(usize::from(id).wrapping_sub(1))
            .ok_or_else(|| IoError::Schema(format!("no example {id}; choose 1 to 5")))?;
        Ok(serde_json::from_str(text)?)
    }

    pub fn raw(id: u8) -> Option<&'static str> {
        EXAMPLE_FILES.get(usize::from(id).wrapping_sub(1)).copied()
    }

    pub fn symbol(&self) -> IoResult<RationalMatrix> {
        self.symbol.to_symbol()
    }

    /// The closed-form realization shipped with the example.
    pub fn realization(&self) -> IoResult<Realization> {
        self.realization.to_realization()
    }

    fn num(&self, key: &str) -> IoResult<f64> {
        self.expected
            .get(key)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| IoError::Schema(format!("example {}: missing number {key}", self.id)))
    }

    fn complex(&self, key: &str) -> IoResult<C64> {
        parse_pair(self.expected.get(key)).ok_or_else(|| IoError::Schema(format!("example {}: missing pair {key}", self.id)))
    }

    fn complex_list(&self, key: &str) -> IoResult<Vec<C64>> {
        self.expected
            .get(key)
            .and_then(serde_json::Value::as_array)
            .and_then(|a| a.iter().map(|v| parse_pair(Some(v))).collect())
            .ok_or_else(|| IoError::Schema(format!("example {}: missing list {key}", self.id)))
    }
}

fn parse_pair(v: Option<&serde_json::Value>) -> Option<C64> {
    let a = v?.as_array()?;
    Some(c64(a.first()?.as_f64()?, a.get(1)?.as_f64()?))
}

/// Command-line level settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_theta: usize,
    pub grid_n: usize,
    pub rank_tol: f64,
    pub ric_tol: f64,
    pub eps_circle: f64,
    pub stab_margin: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = Config::default();
        Self {
            n_theta: 720,
            grid_n: c.grid_n,
            rank_tol: c.rank_tol,
            ric_tol: c.ric_tol,
            eps_circle: c.eps_circle,
            stab_margin: c.stab_margin,
            seed: c.seed,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("rank_tol", self.rank_tol),
            ("ric_tol", self.ric_tol),
            ("eps_circle", self.eps_circle),
            ("stab_margin", self.stab_margin),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_theta < 8 {
            return Err(Error::Precondition(format!("n_theta = {} is below 8", self.n_theta)));
        }
        if self.grid_n < 2 {
            return Err(Error::Precondition(format!("grid_n = {} is below 2", self.grid_n)));
        }
        Ok(())
    }

    pub fn config(&self) -> Config {
        Config {
            rank_tol: self.rank_tol,
            ric_tol: self.ric_tol,
            eps_circle: self.eps_circle,
            stab_margin: self.stab_margin,
            seed: self.seed,
            grid_n: self.grid_n,
            ..Config::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    /// Deviation compared against `tol`.
    pub deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn close(name: &str, expected: f64, observed: f64, tol: f64) -> Self {
        let dev = (expected - observed).abs();
        Self {
            name: name.into(),
            expected: format!("{expected}"),
            observed: format!("{observed}"),
            deviation: dev,
            tol,
            pass: dev <= tol,
        }
    }

    pub fn close_c(name: &str, expected: C64, observed: C64, tol: f64) -> Self {
        let dev = (expected - observed).norm();
        Self {
            name: name.into(),
            expected: io::fmt_complex(expected),
            observed: io::fmt_complex(observed),
            deviation: dev,
            tol,
            pass: dev <= tol,
        }
    }

    /// Passes when `observed < bound`.
    pub fn below(name: &str, bound: f64, observed: f64) -> Self {
        Self {
            name: name.into(),
            expected: format!("< {bound}"),
            observed: format!("{observed:e}"),
            deviation: observed,
            tol: bound,
            pass: observed < bound,
        }
    }

    pub fn count(name: &str, expected: usize, observed: usize) -> Self {
        let mut c = Self::close(name, expected as f64, observed as f64, 0.0);
        c.expected = expected.to_string();
        c.observed = observed.to_string();
        c
    }

    pub fn label(name: &str, expected: &str, observed: &str) -> Self {
        let pass = expected == observed;
        Self {
            name: name.into(),
            expected: expected.into(),
            observed: observed.into(),
            deviation: if pass { 0.0 } else { 1.0 },
            tol: 0.0,
            pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleReport {
    pub example_id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub figures: Vec<PathBuf>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn verdict_name(v: Option<Verdict>) -> &'static str {
    match v {
        Some(Verdict::Resolvent) => "resolvent",
        Some(Verdict::NotResolvent) => "spectrum",
        Some(Verdict::Unknown) => "unknown",
        None => "none",
    }
}

fn component_label(map: &RegionMap, z: C64) -> &'static str {
    match map.component_at(z) {
        Some(c) => c.label.name(),
        None => map.label_at(z).map_or("outside", CellLabel::name),
    }
}

/// Cells whose label differs from the label of the mirrored cell.
pub fn conjugation_mismatches(map: &RegionMap) -> usize {
    let n = map.grid_n;
    (0..n)
        .flat_map(|iy| (0..n).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| map.label(ix, iy) != map.label(ix, n - 1 - iy))
        .count()
}

fn emit(
    out_dir: Option<&Path>,
    stem: &str,
    cloud: &EssCloud,
    map: Option<&RegionMap>,
    real: &Realization,
    figures: &mut Vec<PathBuf>,
) -> IoResult<()> {
    let Some(dir) = out_dir else { return Ok(()) };
    let bbox = match map {
        Some(m) => m.bbox,
        None => {
            let pts = cloud.all_lambdas();
            crate::riccati::Bbox::around(&pts, real.is_real())
        }
    };
    let mut files: Vec<(String, String)> = vec![
        (format!("{stem}_ess.csv"), io::cloud_csv(cloud)),
        (format!("{stem}_ess.json"), io::cloud_sidecar_json(cloud)),
        (format!("{stem}_ess.svg"), io::cloud_svg(cloud, &bbox)),
    ];
    if let Some(m) = map {
        files.push((format!("{stem}_regions.csv"), io::regions_csv(m)));
        files.push((format!("{stem}_regions.svg"), io::regions_svg(m, cloud)));
        files.push((format!("{stem}_verdicts.json"), io::verdicts_json(m)));
    }
    for (name, body) in files {
        let path = dir.join(name);
        io::write_atomic(&path, body.as_bytes())?;
        figures.push(path);
    }
    Ok(())
}

/// Runs the checks of example `id` and optionally writes its figures.
pub fn reproduce_example(id: u8, run: &RunConfig) -> IoResult<ExampleReport> {
    run.validate()?;
    let ex = ExampleFile::bundled(id)?;
    let cfg = run.config();
    let sym = ex.symbol()?;
    let t0 = Instant::now();
    let real = split_and_realize(&sym, &cfg)?;
    let mut checks = Vec::new();
    let mut figures = Vec::new();
    let out = run.out_dir.as_deref();
    let stem = format!("example{id}");
    match id {
        1 => {
            let a = ex.params.get("a").and_then(serde_json::Value::as_f64).unwrap_or(0.5);
            let b = ex.params.get("b").and_then(serde_json::Value::as_f64).unwrap_or(0.5);
            let w0 = eval_rational_matrix(&sym, c64(0.0, 0.0))?[(0, 0)];
            checks.push(Check::close_c("omega(0)", ex.complex("omega_at_0")?, w0, 1e-15));
            checks.push(Check::count("n_plus", 0, real.n_plus()));
            checks.push(Check::count("n_minus", 1, real.n_minus()));
            let cloud = ess_spectrum_sweep(&real, ex.num("n_theta")? as usize, &cfg)?;
            let elapsed = t0.elapsed().as_secs_f64();
            let worst = cloud
                .points
                .iter()
                .map(|p| (2.0 * b * p.lambda.im - (a * a + b * b - 1.0 + (2.0 - 2.0 * a) * p.lambda.re)).abs())
                .fold(0.0, f64::max);
            checks.push(Check::below("line residual", ex.num("line_residual_max")?, worst));
            checks.push(Check::below("sweep runtime [s]", ex.num("runtime_s")?, elapsed));
            let mut rng = cfg.rng_for(1);
            let mut disagree = 0;
            let mut tested = 0;
            while tested < 200 {
                let lam = c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                let gap = (c64(a, b) - lam).norm() - (c64(1.0, 0.0) - lam).norm();
                if gap.abs() < 1e-6 {
                    continue;
                }
                tested += 1;
                let (ok, _) = is_resolvent_alpha_only(&real, lam, &cfg)?;
                if ok != (gap < 0.0) {
                    disagree += 1;
                }
            }
            checks.push(Check::count("verdicts disagreeing with |a+bi-lambda| < |1-lambda|", 0, disagree));
            emit(out, &stem, &cloud, None, &real, &mut figures)?;
        }
        2 => {
            checks.push(Check::count("n_plus", 1, real.n_plus()));
            checks.push(Check::count("n_minus", 1, real.n_minus()));
            let cloud = ess_spectrum_sweep(&real, run.n_theta, &cfg)?;
            let worst = cloud
                .points
                .iter()
                .map(|p| {
                    let (s, c) = p.theta.sin_cos();
                    let want = c64(c, -s * c / (1.0 - c));
                    (p.lambda - want).norm() / (1.0 + want.norm())
                })
                .fold(0.0, f64::max);
            checks.push(Check::below("curve x = cos t, y = -sin t cos t / (1 - cos t)", ex.num("curve_tol")?, worst));

            let closed_form = ex.realization()?;
            let lam = ex.complex("lambda")?;
            let tol = ex.num("tol")?;
            let out_q = RiccatiSolver::new(&closed_form, &cfg).solve(lam);
            checks.push(Check::label("verdict at -2.5", "resolvent", verdict_name(Some(out_q.verdict))));
            let scalar = |m: &Option<linalg::CMat>| m.as_ref().map_or(c64(f64::NAN, 0.0), |m| m[(0, 0)]);
            checks.push(Check::close_c("Q", c64(ex.num("q")?, 0.0), scalar(&out_q.q), tol));
            checks.push(Check::close_c("A_circ", c64(ex.num("a_circ")?, 0.0), scalar(&out_q.a_circ), tol));
            checks.push(Check::close_c("alpha_circ", c64(ex.num("alpha_circ")?, 0.0), scalar(&out_q.alpha_circ), tol));

            let solver = RiccatiSolver::new(&real, &cfg);
            let samples = ex.num("q_samples")? as usize;
            let mut rng = cfg.rng_for(2);
            let mut resolvent = 0;
            let mut drawn = 0;
            while drawn < samples {
                let q = c64(rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0));
                if q.re >= 1.0 || (c64(1.0, 0.0) - q).norm() >= 1.0 || q.norm() < 1e-3 {
                    continue;
                }
                drawn += 1;
                let lam = c64(2.0, 0.0) - q - c64(2.0, 0.0) / q;
                if solver.solve(lam).verdict == Verdict::Resolvent {
                    resolvent += 1;
                }
            }
            checks.push(Check::count("resolvent verdicts at lambda = 2 - q - 2/q", samples, resolvent));

            let far = ex.complex("far_spectrum_point")?;
            checks.push(Check::label("verdict at 5", "spectrum", verdict_name(Some(solver.solve(far).verdict))));
            let map = classify_components(&cloud, &real, &cfg);
            checks.push(Check::label("component of -2.5", "resolvent", component_label(&map, lam)));
            checks.push(Check::label("component of 2", "spectrum", component_label(&map, ex.complex("spectrum_point")?)));
            emit(out, &stem, &cloud, Some(&map), &real, &mut figures)?;
        }
        3 => {
            let z = ex.complex("z")?;
            let lam = eval_rational_matrix(&sym, z)?[(0, 0)];
            checks.push(Check::close_c("omega(3i)", c64(-0.1, 1.8), lam, 1e-12));
            let out_q = RiccatiSolver::new(&real, &cfg).solve(lam);
            checks.push(Check::label("verdict at omega(3i)", "resolvent", verdict_name(Some(out_q.verdict))));
            checks.push(Check::close(
                "rho(alpha_circ(3i))",
                ex.num("rho_alpha_circ")?,
                out_q.rho_alpha_circ.unwrap_or(f64::NAN),
                ex.num("tol")?,
            ));
            let cloud = ess_spectrum_sweep(&real, run.n_theta, &cfg)?;
            let map = classify_components(&cloud, &real, &cfg);
            checks.push(Check::label("component of -1", "spectrum", component_label(&map, ex.complex("spectrum_point")?)));
            for p in ex.complex_list("resolvent_points")? {
                let name = format!("component of {}", io::fmt_complex(p));
                checks.push(Check::label(&name, "resolvent", component_label(&map, p)));
            }
            checks.push(Check::count("conjugation mismatches", 0, conjugation_mismatches(&map)));
            emit(out, &stem, &cloud, Some(&map), &real, &mut figures)?;
        }
        4 => {
            checks.push(Check::count("n_plus", 0, real.n_plus()));
            checks.push(Check::count("n_minus", 2, real.n_minus()));
            let bp = det_coeffs(&assemble_pencil(&real))?;
            let want = io::MatJson::to_mat(&serde_json::from_value(ex.expected["det_coeffs"].clone()).map_err(IoError::Json)?)?;
            let err = if bp.coeffs.shape() == want.shape() {
                linalg::max_abs(&(&bp.coeffs - &want))
            } else {
                f64::INFINITY
            };
            checks.push(Check::below("det L coefficients", ex.num("det_tol")?, err));
            checks.push(Check::count("|E(Omega)|", 0, exceptional_set(&bp, cfg.e_tol)?.len()));
            let cloud = ess_spectrum_sweep(&real, run.n_theta, &cfg)?;
            let tol = ex.num("curve_tol")?;
            let arcs = [(1.0 / 6.0, 5.0 / 6.0), (7.0 / 6.0, 11.0 / 6.0)];
            let pi = std::f64::consts::PI;
            let mut off = 0;
            let mut outside_arcs = 0;
            for l in cloud.all_lambdas() {
                let on_axis = l.re.abs() < tol;
                let on_circle = (l.norm() - 1.0).abs() < tol;
                if !on_axis && !on_circle {
                    off += 1;
                }
                if on_circle && !on_axis {
                    let t = l.arg().rem_euclid(2.0 * pi) / pi;
                    if !arcs.iter().any(|&(lo, hi)| t >= lo - tol && t <= hi + tol) {
                        outside_arcs += 1;
                    }
                }
            }
            checks.push(Check::count("points off axis and circle", 0, off));
            checks.push(Check::count("circle points outside the arcs", 0, outside_arcs));
            let zero_at_poles = cloud
                .points
                .iter()
                .filter(|p| p.theta == 0.0 || (p.theta - pi).abs() < 1e-12)
                .map(|p| p.lambda.norm())
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::below("|lambda| at nu = +-1", tol, zero_at_poles));
            let n = ex.num("grid")? as usize;
            let w = ex.num("half_width")?;
            let mut resolvent = 0;
            for i in 0..n {
                for j in 0..n {
                    let step = 2.0 * w / (n - 1) as f64;
                    let lam = c64(-w + i as f64 * step, -w + j as f64 * step);
                    if is_resolvent_alpha_only(&real, lam, &cfg)?.0 {
                        resolvent += 1;
                    }
                }
            }
            checks.push(Check::count("resolvent points on the grid", 0, resolvent));
            emit(out, &stem, &cloud, None, &real, &mut figures)?;
        }
        5 => {
            let bp = det_coeffs(&assemble_pencil(&real))?;
            let e = exceptional_set(&bp, cfg.e_tol)?;
            let want = ex.complex_list("exceptional")?;
            checks.push(Check::count("|E(Omega)|", want.len(), e.len()));
            checks.push(Check::below(
                "E(Omega) distance",
                ex.num("tol")?,
                linalg::matching_distance(&e, &want),
            ));
            let cloud = ess_spectrum_sweep(&real, run.n_theta, &cfg)?;
            checks.push(Check::label("whole plane", "true", &cloud.whole_plane.to_string()));
            emit(out, &stem, &cloud, None, &real, &mut figures)?;
        }
        _ => return Err(IoError::Schema(format!("no example {id}; choose 1 to 5"))),
    }
    Ok(ExampleReport {
        example_id: id,
        title: ex.title,
        checks,
        figures,
    })
}
