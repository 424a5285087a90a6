use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use wedgespace::fields::{
    builtin_by_name, builtin_test_family, geometric_sine_coeffs, manufactured, manufactured_series, random_mix,
    sample, sample_jets, separable_gaussian, GridField, NamedField,
};
use wedgespace::mellin::{mellin_forward, mellin_inverse, multiplier_check, parseval_check};
use wedgespace::norms::equivalence_report;
use wedgespace::wedge_poisson::{dirichlet_spectrum, solve_field_report, solve_report};
use wedgespace::Error;

use crate::config::{Resolved, MANUFACTURED};
use crate::error::{CliError, CliResult};

pub const ROUNDTRIP_TOLERANCE: f64 = 1e-10;
pub const PARSEVAL_TOLERANCE: f64 = 1e-8;
pub const MULTIPLIER_TOLERANCE: f64 = 1e-7;

/// Ratio of the geometric sine series used by `convergence`.
const SERIES_RATIO: f64 = 1.5;

pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
        let path = self.dir.join(name);
        let io = |source| CliError::Output {
            path: path.clone(),
            source,
        };
        let mut out = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut out)?;
        out.flush().map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        self.write(name, |out| Ok(writeln!(out, "{text}").map_err(Error::from)?))
    }

    /// Records the resolved configuration, seed included.
    fn manifest(&mut self, command: &str, cfg: &Resolved) -> CliResult<()> {
        self.json(
            "run.json",
            &json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "config": cfg }),
        )
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn family(cfg: &Resolved) -> CliResult<Vec<NamedField>> {
    let wedge = cfg.wedge()?;
    let Some(names) = &cfg.fields else {
        return Ok(builtin_test_family(&wedge));
    };
    if names.is_empty() {
        return Err(CliError::config("fields", "empty field family"));
    }
    names
        .iter()
        .map(|name| {
            builtin_by_name(&wedge, name, cfg.seed).ok_or_else(|| {
                CliError::config("fields", format!("unknown field `{name}`; known: {}", known_names(cfg)))
            })
        })
        .collect()
}

fn known_names(cfg: &Resolved) -> String {
    let mut names: Vec<String> = cfg
        .wedge()
        .map(|w| builtin_test_family(&w).into_iter().map(|f| f.name).collect())
        .unwrap_or_default();
    names.push("random_mix".into());
    names.join(", ")
}

pub fn cmd_norms(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let fam = family(cfg)?;
    let sp = cfg.space_params(1)?;
    let grid = cfg.grid()?;
    out.manifest("norms", cfg)?;
    let report = equivalence_report(&fam, &sp, &grid)?;
    out.write("equivalence.csv", |w| Ok(report.write_csv(w)?))?;
    out.json("equivalence.json", &json!({ "seed": cfg.seed, "report": report }))
}

enum Forcing {
    Manufactured,
    Builtin(NamedField),
    Samples(GridField),
}

fn forcing(cfg: &Resolved) -> CliResult<Forcing> {
    if cfg.field == MANUFACTURED {
        return Ok(Forcing::Manufactured);
    }
    if let Some(f) = builtin_by_name(&cfg.wedge()?, &cfg.field, cfg.seed) {
        return Ok(Forcing::Builtin(f));
    }
    let path = Path::new(&cfg.field);
    if !path.is_file() {
        return Err(CliError::config(
            "field",
            format!(
                "`{}` is neither a file nor a builtin field (known: {MANUFACTURED}, {})",
                cfg.field,
                known_names(cfg)
            ),
        ));
    }
    GridField::load_csv(path)
        .map(Forcing::Samples)
        .map_err(|e| CliError::config("field", format!("{}: {e}", path.display())))
}

pub fn cmd_solve(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let forcing = forcing(cfg)?;
    let grid = match &forcing {
        Forcing::Samples(f) => f.grid().clone(),
        _ => cfg.grid()?,
    };
    let pp = cfg.poisson_params(grid.clone(), cfg.n_modes_for(grid.n_phi()))?;
    pp.admissible().map_err(Error::from)?;
    out.manifest("solve", cfg)?;

    let mut exact = None;
    let (sol, report, f) = match forcing {
        Forcing::Manufactured => {
            let (ustar, f) = manufactured(pp.wedge(), 1, 0.0, 1.0);
            exact = Some(sample(&ustar, &grid)?);
            solve_field_report(&f, &pp)?
        }
        Forcing::Builtin(named) => solve_field_report(named.field.as_ref(), &pp)?,
        Forcing::Samples(f) => {
            let (sol, report) = solve_report(&f, &pp)?;
            (sol, report, f)
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let u = sol.u();
    let solution_error = exact.map(|e| u.rel_l2_distance(&e));
    let mut doc = serde_json::to_value(&report).map_err(Error::from)?;
    if let Value::Object(map) = &mut doc {
        map.insert("field".into(), json!(cfg.field));
        map.insert("seed".into(), json!(cfg.seed));
        map.insert("solution_error".into(), json!(solution_error));
    }
    out.json("solve.json", &doc)?;
    out.write("solution.csv", |w| Ok(u.write_csv(w)?))?;
    out.write("forcing.csv", |w| Ok(f.write_csv(w)?))
}

pub fn cmd_spectrum(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let ev = dirichlet_spectrum(&cfg.wedge()?, cfg.n_max)?;
    out.manifest("spectrum", cfg)?;
    out.write("spectrum.csv", |w| {
        writeln!(w, "n,eigenvalue").map_err(Error::from)?;
        for (n, v) in ev.iter().enumerate() {
            writeln!(w, "{},{v}", n + 1).map_err(Error::from)?;
        }
        Ok(())
    })
}

#[derive(Debug, Serialize)]
struct SelfTest {
    roundtrip: f64,
    parseval: f64,
    multiplier: f64,
    tolerances: Tolerances,
    pass: bool,
    seed: u64,
    grid: wedgespace::fields::GridSpec,
}

#[derive(Debug, Serialize)]
struct Tolerances {
    roundtrip: f64,
    parseval: f64,
    multiplier: f64,
}

pub fn cmd_mellin_selftest(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let grid = cfg.grid()?;
    let wedge = *grid.wedge();
    out.manifest("mellin-selftest", cfg)?;

    let u = sample(&separable_gaussian(&wedge, 1, 0.0, 1.0), &grid)?;
    let v = sample(&random_mix(&wedge, cfg.seed), &grid)?;
    let mut roundtrip = 0.0f64;
    for field in [&u, &v] {
        for c in [-0.5, 0.0, 0.5] {
            let back = mellin_inverse(&mellin_forward(field, c)?)?;
            roundtrip = roundtrip.max(back.rel_l2_distance(field));
        }
    }
    let mut parseval = 0.0f64;
    for beta in [0.0, 0.4, -0.3] {
        parseval = parseval.max(parseval_check(&u, &v, beta)?.rel_gap);
        parseval = parseval.max(parseval_check(&v, &v, beta)?.rel_gap);
    }
    let jets = sample_jets(&separable_gaussian(&wedge, 2, 0.3, 0.8), &grid)?;
    let ru = GridField::new(grid.clone(), jets.r.clone())?;
    let mut multiplier = 0.0f64;
    for c in [-0.5, 0.0, 0.7] {
        multiplier = multiplier.max(multiplier_check(&jets.value_field(), &ru, c)?);
    }

    let pass =
        roundtrip <= ROUNDTRIP_TOLERANCE && parseval <= PARSEVAL_TOLERANCE && multiplier <= MULTIPLIER_TOLERANCE;
    let result = SelfTest {
        roundtrip,
        parseval,
        multiplier,
        tolerances: Tolerances {
            roundtrip: ROUNDTRIP_TOLERANCE,
            parseval: PARSEVAL_TOLERANCE,
            multiplier: MULTIPLIER_TOLERANCE,
        },
        pass,
        seed: cfg.seed,
        grid: grid.spec(),
    };
    out.json("mellin_selftest.json", &result)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "roundtrip {roundtrip:.3e}, parseval {parseval:.3e}, multiplier {multiplier:.3e}"
        )))
    }
}

/// One grid level of the refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub n_s: usize,
    pub n_phi: usize,
    pub error: f64,
    pub apriori_ratio: f64,
}

pub fn cmd_convergence(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let grids = (0..cfg.levels)
        .map(|l| {
            let (n_s, n_phi) = (cfg.n_s << l, cfg.n_phi << l);
            let grid = cfg.grid_with(n_s, n_phi)?;
            let pp = cfg.poisson_params(grid.clone(), (n_phi / 4).max(1))?;
            Ok((grid, pp))
        })
        .collect::<CliResult<Vec<_>>>()?;
    grids[0].1.admissible().map_err(Error::from)?;
    out.manifest("convergence", cfg)?;

    let coeffs = geometric_sine_coeffs(SERIES_RATIO, 1e-18);
    let (us, fs) = manufactured_series(&cfg.wedge()?, &coeffs, 0.0, 1.0);
    let mut levels = Vec::new();
    for (grid, pp) in &grids {
        let (sol, report, _) = solve_field_report(&fs, pp)?;
        levels.push(Level {
            n_s: grid.n_s(),
            n_phi: grid.n_phi(),
            error: sol.u().rel_l2_distance(&sample(&us, grid)?),
            apriori_ratio: report.apriori_ratio,
        });
    }
    if !levels.windows(2).all(|p| p[1].error < p[0].error) {
        eprintln!("warning: errors do not decrease monotonically");
    }
    out.write("convergence.csv", |w| {
        writeln!(w, "n_s,n_phi,error,apriori_ratio").map_err(Error::from)?;
        for l in &levels {
            writeln!(w, "{},{},{},{}", l.n_s, l.n_phi, l.error, l.apriori_ratio).map_err(Error::from)?;
        }
        Ok(())
    })
}
