//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{poles, random_realization, sample_point};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rattoep::hokalman::{apply_symbol_to_monomial, hankel_ranks, markov_minus, markov_plus, toeplitz_truncation, CoeffWindow};
use rattoep::linalg::{self, c64, CMat, C64};
use rattoep::pencil::{assemble_pencil, ess_points_at};
use rattoep::ratsym::{eval_realization, split_and_realize, RationalMatrix, Realization};
use rattoep::reproduce::{reproduce_example, ExampleFile, RunConfig};
use rattoep::Config;

struct Line {
    name: String,
    pass: bool,
    detail: String,
}

fn example_line(id: u8) -> Line {
    let name = format!("criterion {id}: example {id}");
    match reproduce_example(id, &RunConfig::default()) {
        Ok(rep) => {
            let failed: Vec<String> = rep
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{} (expected {}, observed {})", c.name, c.expected, c.observed))
                .collect();
            let detail = if failed.is_empty() {
                format!("{} checks", rep.checks.len())
            } else {
                failed.join("; ")
            };
            Line { name, pass: rep.passed(), detail }
        }
        Err(e) => Line { name, pass: false, detail: e.to_string() },
    }
}

fn line(name: &str, failures: Vec<String>, summary: String) -> Line {
    let pass = failures.is_empty();
    let detail = if pass { summary } else { failures.join("; ") };
    Line { name: name.to_string(), pass, detail }
}

fn bundled() -> Vec<(u8, Realization)> {
    let cfg = Config::default();
    (1..=5)
        .map(|id| {
            let sym = ExampleFile::bundled(id).unwrap().symbol().unwrap();
            (id, split_and_realize(&sym, &cfg).unwrap())
        })
        .collect()
}

fn round_trips() -> Line {
    let cfg = Config::default();
    let mut fails = Vec::new();
    let (mut done, mut worst) = (0, 0.0f64);
    let mut seed = 0u64;
    while done < 100 {
        seed += 1;
        let orig = random_realization(seed);
        if orig.validate(&cfg).is_err() {
            continue;
        }
        done += 1;
        let back = RationalMatrix::from_realization(&orig, &cfg).and_then(|s| split_and_realize(&s, &cfg));
        let Ok(back) = back else {
            fails.push(format!("seed {seed}: realization failed"));
            continue;
        };
        if (back.n_plus(), back.n_minus()) != (orig.n_plus(), orig.n_minus()) {
            fails.push(format!("seed {seed}: dimensions ({}, {})", back.n_plus(), back.n_minus()));
            continue;
        }
        let k = 2 * orig.n_plus().max(orig.n_minus()) + 2;
        let pairs = markov_plus(&orig, k)
            .into_iter()
            .zip(markov_plus(&back, k))
            .chain(markov_minus(&orig, k).into_iter().zip(markov_minus(&back, k)));
        for (a, b) in pairs {
            let err = linalg::fro_norm(&(&a - &b)) / linalg::fro_norm(&a).max(1.0);
            worst = worst.max(err);
        }
    }
    if worst >= 1e-8 {
        fails.push(format!("Markov error {worst:e}"));
    }
    line("criterion 6a: realization round trip", fails, format!("100 systems, Markov error {worst:.1e}"))
}

fn descriptions(examples: &[(u8, Realization)]) -> Line {
    let cfg = Config::default();
    let mut fails = Vec::new();
    let mut worst = 0.0f64;
    let mut singular = 0;
    let mut at_poles = 0;
    for (id, real) in examples {
        let pl = assemble_pencil(real);
        for k in 0..256 {
            let th = std::f64::consts::TAU * k as f64 / 256.0;
            let nu = c64(th.cos(), th.sin());
            let at = match ess_points_at(&pl, real, nu, &cfg) {
                Ok(at) => at,
                Err(e) => {
                    fails.push(format!("example {id} angle {k}: {e}"));
                    continue;
                }
            };
            if at.singular {
                singular += 1;
                // both descriptions cover the whole plane
                let lam = c64(0.37, -1.21);
                match eval_realization(real, nu) {
                    // pole: only the pencil description exists
                    Err(_) => at_poles += 1,
                    Ok(o) => {
                        let shifted = o - CMat::identity(real.m(), real.m()) * lam;
                        if linalg::relative_det(&shifted) >= 1e-10 {
                            fails.push(format!("example {id} angle {k}: pencil singular, symbol not"));
                        }
                    }
                }
                continue;
            }
            let d = linalg::matching_distance(&at.lambdas, &at.pencil_lambdas);
            worst = worst.max(d);
            if d >= 1e-6 {
                fails.push(format!("example {id} angle {k}: matching distance {d:e}"));
            }
        }
    }
    line(
        "criterion 6b: two essential spectrum descriptions",
        fails,
        format!("5 x 256 angles, matching distance {worst:.1e}, {singular} singular angles ({at_poles} at poles)"),
    )
}

fn inversion(examples: &[(u8, Realization)]) -> Line {
    let mut fails = Vec::new();
    let mut worst = 0.0f64;
    let mut both_singular = 0;
    for (id, real) in examples {
        let pl = assemble_pencil(real);
        let e = pl.selector();
        let m = real.m();
        let mut rng = ChaCha8Rng::seed_from_u64(*id as u64);
        let avoid = poles(real);
        for _ in 0..20 {
            let z = sample_point(&mut rng, &avoid);
            let lam = c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let om = eval_realization(real, z).unwrap() - CMat::identity(m, m) * lam;
            let l = pl.eval(lam, z);
            match (linalg::guarded_inverse(&om, 1e10), linalg::guarded_inverse(&l, 1e10)) {
                (Some(want), Some(l_inv)) => {
                    let got = &e * l_inv * e.adjoint();
                    let err = linalg::fro_norm(&(got - &want)) / linalg::fro_norm(&want);
                    worst = worst.max(err);
                    if err >= 1e-7 {
                        fails.push(format!("example {id} at ({lam}, {z}): relative error {err:e}"));
                    }
                }
                (None, None) => both_singular += 1,
                _ => fails.push(format!("example {id} at ({lam}, {z}): invertibility differs")),
            }
        }
    }
    line(
        "criterion 6c: inversion formula",
        fails,
        format!("100 points, relative error {worst:.1e}, {both_singular} jointly singular"),
    )
}

fn hankel() -> Line {
    let cfg = Config::default();
    let mut fails = Vec::new();
    let mut done = 0;
    let mut seed = 1000u64;
    while done < 100 {
        seed += 1;
        let real = random_realization(seed);
        if real.validate(&cfg).is_err() {
            continue;
        }
        done += 1;
        let kmax = 2 * real.n_plus().max(real.n_minus()) + 2;
        let cw = CoeffWindow::from_realization(&real, 2 * kmax - 1);
        let r = match hankel_ranks(&cw, kmax, cfg.rank_tol) {
            Ok(r) => r,
            Err(e) => {
                fails.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let monotone = r.plus.windows(2).chain(r.minus.windows(2)).all(|w| w[0] <= w[1]);
        if !monotone {
            fails.push(format!("seed {seed}: ranks decrease"));
        }
        for (k, (&p, &q)) in r.plus.iter().zip(&r.minus).enumerate() {
            let bad_p = k + 1 >= real.n_plus() && p != real.n_plus();
            let bad_q = k + 1 >= real.n_minus() && q != real.n_minus();
            if bad_p || bad_q {
                fails.push(format!("seed {seed}: ranks ({p}, {q}) at k = {}", k + 1));
            }
        }
    }
    line("criterion 6d: Hankel rank stabilization", fails, "100 systems, k up to 2n+2".into())
}

fn toeplitz(examples: &[(u8, Realization)]) -> Line {
    let mut fails = Vec::new();
    let mut worst = 0.0f64;
    let mut systems: Vec<(String, Realization)> =
        examples.iter().map(|(id, r)| (format!("example {id}"), r.clone())).collect();
    systems.extend((0..20).map(|s| (format!("seed {s}"), random_realization(s))));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (name, real) in &systems {
        let n_blocks = 6;
        let cw = CoeffWindow::from_realization(real, n_blocks);
        let t = toeplitz_truncation(&cw, n_blocks).unwrap();
        let m = real.m();
        for n in 0..n_blocks {
            let w = DVector::from_fn(m, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let img = apply_symbol_to_monomial(real, n, &w, n_blocks).unwrap();
            let mut x = DVector::<C64>::zeros(n_blocks * m);
            x.rows_mut(n * m, m).copy_from(&w);
            let y = &t * x;
            for i in 0..n_blocks {
                let err = (y.rows(i * m, m) - &img.coeffs[i]).norm() / (1.0 + img.coeffs[i].norm());
                worst = worst.max(err);
                if err > 1e-12 {
                    fails.push(format!("{name} column {n} block {i}: {err:e}"));
                }
            }
        }
    }
    line("criterion 6e: Toeplitz consistency", fails, format!("25 systems, deviation {worst:.1e}"))
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let mut lines: Vec<Line> = (1..=5).map(example_line).collect();
    let examples = bundled();
    lines.push(round_trips());
    lines.push(descriptions(&examples));
    lines.push(inversion(&examples));
    lines.push(hankel());
    lines.push(toeplitz(&examples));
    let elapsed = t0.elapsed().as_secs_f64();
    lines.push(Line {
        name: "criterion 6: suite runtime".into(),
        pass: elapsed < 60.0,
        detail: format!("{elapsed:.1} s (limit 60 s)"),
    });
    let mut ok = true;
    for l in &lines {
        ok &= l.pass;
        println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
