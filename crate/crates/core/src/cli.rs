//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::hokalman::growth_bound_check;
use crate::io::{self, IoError, IoResult, OutcomeJson, RealizationJson, SystemInput};
use crate::linalg::c64;
use crate::pencil::{assemble_pencil, det_coeffs, ess_spectrum_sweep, exceptional_set, EssCloud};
use crate::ratsym::{classify_poles, partial_fractions, split_and_realize, Realization};
use crate::reproduce::{reproduce_example, RunConfig};
use crate::riccati::{classify_components, Bbox, RiccatiSolver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;
const EXIT_OTHER: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "rattoep", version, about = "Spectra of Toeplitz-like operators with rational symbols")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Opts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Opts {
    #[arg(long, global = true, default_value_t = 720)]
    pub n_theta: usize,
    #[arg(long, global = true, default_value_t = 400)]
    pub grid_n: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rank_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub ric_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eps_circle: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub stab_margin: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

impl Opts {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            n_theta: self.n_theta,
            grid_n: self.grid_n,
            rank_tol: self.rank_tol,
            ric_tol: self.ric_tol,
            eps_circle: self.eps_circle,
            stab_margin: self.stab_margin,
            seed: self.seed,
            out_dir: Some(self.out.clone()),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize a symbol; writes the realization JSON and Markov parameters.
    Realize { input: PathBuf },
    /// Essential spectrum, E(Omega) and the labelled region map.
    Spectrum { input: PathBuf },
    /// Essential spectrum sweep only.
    EssSpec { input: PathBuf },
    /// The exceptional set E(Omega).
    ESet { input: PathBuf },
    /// Resolvent membership of one point.
    Resolvent {
        input: PathBuf,
        /// Point as `RE,IM`.
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: (f64, f64),
    },
    /// Region map of the complement of the essential spectrum.
    Classify { input: PathBuf },
    /// Reproduce one of the five bundled examples.
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
    },
}

fn parse_lambda(s: &str) -> Result<(f64, f64), String> {
    let (re, im) = s.split_once(',').ok_or("expected RE,IM")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(re)?, p(im)?))
}

fn exit_code(e: &IoError) -> i32 {
    match e {
        IoError::Read { .. } | IoError::Json(_) | IoError::Schema(_) => EXIT_INPUT,
        IoError::Numerical(Error::InvalidSymbol(_) | Error::InvalidRealization(_) | Error::Precondition(_)) => {
            EXIT_INPUT
        }
        IoError::Numerical(_) => EXIT_NUMERICAL,
        IoError::Write { .. } => EXIT_OTHER,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Loaded {
    real: Realization,
    poles: Option<String>,
}

fn load(path: &Path, run: &RunConfig) -> IoResult<Loaded> {
    let text = io::read_text(path)?;
    let cfg = run.config();
    match io::parse_system(&text)? {
        SystemInput::Symbol(sym) => {
            let pf = partial_fractions(&sym, &cfg)?;
            let ps = classify_poles(&pf, cfg.eps_circle);
            let fmt = |v: &[(crate::linalg::C64, usize)]| {
                v.iter()
                    .map(|(p, k)| format!("{}^{k}", io::fmt_complex(*p)))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let poles = format!(
                "poles inside: [{}] on circle: [{}] outside: [{}]",
                fmt(&ps.inside),
                fmt(&ps.on_circle),
                fmt(&ps.outside)
            );
            Ok(Loaded {
                real: split_and_realize(&sym, &cfg)?,
                poles: Some(poles),
            })
        }
        SystemInput::Realization(real) => {
            real.validate(&cfg)?;
            Ok(Loaded { real: *real, poles: None })
        }
    }
}

fn write(dir: &Path, name: &str, body: &str) -> IoResult<PathBuf> {
    let path = dir.join(name);
    io::write_atomic(&path, body.as_bytes())?;
    Ok(path)
}

fn sweep(real: &Realization, run: &RunConfig) -> IoResult<EssCloud> {
    Ok(ess_spectrum_sweep(real, run.n_theta, &run.config())?)
}

fn write_cloud(dir: &Path, cloud: &EssCloud, bbox: &Bbox) -> IoResult<()> {
    write(dir, "ess_spectrum.csv", &io::cloud_csv(cloud))?;
    write(dir, "ess_spectrum.json", &io::cloud_sidecar_json(cloud))?;
    write(dir, "ess_spectrum.svg", &io::cloud_svg(cloud, bbox))?;
    Ok(())
}

fn report_cloud(cloud: &EssCloud) {
    if cloud.whole_plane {
        println!("essential spectrum: whole plane");
    } else {
        println!(
            "essential spectrum: {} points over {} angles, max residual {:e}",
            cloud.points.len(),
            cloud.thetas.len(),
            cloud.max_residual
        );
    }
    println!("E(Omega): [{}]", list(&cloud.exceptional));
}

fn list(zs: &[crate::linalg::C64]) -> String {
    zs.iter().map(|z| io::fmt_complex(*z)).collect::<Vec<_>>().join(", ")
}

fn execute(cli: &Cli) -> IoResult<i32> {
    let run = cli.opts.run_config();
    run.validate()?;
    let cfg = run.config();
    let dir = cli.opts.out.as_path();
    match &cli.command {
        Command::Realize { input } => {
            let l = load(input, &run)?;
            let real = &l.real;
            let growth = growth_bound_check(real, 64, &cfg)?;
            write(dir, "realization.json", &serde_json::to_string_pretty(&RealizationJson::from_realization(real))?)?;
            write(dir, "markov.csv", &io::markov_csv(real, 16))?;
            println!("n_plus = {}, n_minus = {}", real.n_plus(), real.n_minus());
            if let Some(p) = &l.poles {
                println!("{p}");
            }
            println!(
                "growth: M = {}, K = {:.6e}, ok = {}, bounded tail = {}",
                growth.max_block, growth.bound, growth.ok, growth.bounded_tail
            );
        }
        Command::Spectrum { input } => {
            let l = load(input, &run)?;
            let cloud = sweep(&l.real, &run)?;
            let map = classify_components(&cloud, &l.real, &cfg);
            write_cloud(dir, &cloud, &map.bbox)?;
            write(dir, "regions.csv", &io::regions_csv(&map))?;
            write(dir, "regions.svg", &io::regions_svg(&map, &cloud))?;
            write(dir, "verdicts.json", &io::verdicts_json(&map))?;
            report_cloud(&cloud);
            print_components(&map);
        }
        Command::EssSpec { input } => {
            let l = load(input, &run)?;
            let cloud = sweep(&l.real, &run)?;
            write_cloud(dir, &cloud, &Bbox::around(&cloud.all_lambdas(), l.real.is_real()))?;
            report_cloud(&cloud);
        }
        Command::ESet { input } => {
            let l = load(input, &run)?;
            let bp = det_coeffs(&assemble_pencil(&l.real))?;
            let e = match exceptional_set(&bp, cfg.e_tol) {
                Ok(e) => e,
                Err(Error::DegenerateDet) => {
                    println!("det L vanishes identically; E(Omega) is not determined");
                    return Ok(EXIT_NUMERICAL);
                }
                Err(e) => return Err(e.into()),
            };
            let pairs: Vec<[f64; 2]> = e.iter().map(|z| [z.re, z.im]).collect();
            write(dir, "e_set.json", &serde_json::to_string_pretty(&pairs)?)?;
            println!("E(Omega): [{}]", list(&e));
        }
        Command::Resolvent { input, lambda } => {
            let l = load(input, &run)?;
            let lam = c64(lambda.0, lambda.1);
            let out = RiccatiSolver::new(&l.real, &cfg).solve(lam);
            write(dir, "resolvent.json", &serde_json::to_string_pretty(&OutcomeJson::from_outcome(&out))?)?;
            println!("lambda = {}: {:?} ({})", io::fmt_complex(lam), out.verdict, out.certificate);
        }
        Command::Classify { input } => {
            let l = load(input, &run)?;
            let cloud = sweep(&l.real, &run)?;
            let map = classify_components(&cloud, &l.real, &cfg);
            write(dir, "regions.csv", &io::regions_csv(&map))?;
            write(dir, "regions.svg", &io::regions_svg(&map, &cloud))?;
            write(dir, "verdicts.json", &io::verdicts_json(&map))?;
            print_components(&map);
        }
        Command::Example { id } => {
            let report = reproduce_example(*id, &run)?;
            let mut text = format!("example {}: {}\n", report.example_id, report.title);
            for c in &report.checks {
                let _ = writeln!(
                    text,
                    "  [{}] {}: expected {}, observed {}",
                    if c.pass { "pass" } else { "FAIL" },
                    c.name,
                    c.expected,
                    c.observed
                );
            }
            print!("{text}");
            write(dir, &format!("example{id}_report.json"), &serde_json::to_string_pretty(&report)?)?;
            if !report.passed() {
                return Ok(EXIT_CHECK);
            }
        }
    }
    Ok(EXIT_OK)
}

fn print_components(map: &crate::riccati::RegionMap) {
    if map.whole_plane {
        println!("spectrum: whole plane");
        return;
    }
    for c in &map.components {
        let p = c.representative();
        println!(
            "component {} ({} cells): {} at {} [{}]",
            c.id,
            c.cells,
            c.label.name(),
            io::fmt_complex(p.lambda),
            p.outcome.certificate
        );
    }
}
