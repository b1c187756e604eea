//! Command-line front end. `run` parses arguments, dispatches and maps
//! errors to exit codes: 0 success, 1 failed run (IO, parse, numerics),
//! 2 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::drifter::infer::{all_settings, hyperparameter_grid, sweep, InferOptions, SweepRow};
use crate::drifter::synth::{
    generate_trajectories, run_synth, SynthConfig, DEFAULT_SEED, SEED_COUNT,
};
use crate::drifter::trajectory::{ingest_gdp_csv, split_train_test, YearRange, YearlyFlows};
use crate::drifter::{build_hex_grid, BBox};
use crate::error::{Error, Result};
use crate::interpolate::{interpolate_flow, toy, InterpolationParams};
use crate::io;
use crate::spectral::product_eigenmodes;

#[derive(Debug, Parser)]
#[command(
    name = "prodtop",
    version,
    about = "Signal processing on products of simplicial and cell complexes"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a complex from JSON and write its cell-complex form.
    #[command(subcommand)]
    Complex(ComplexCommand),
    /// Assemble a product Hodge Laplacian and write it in Matrix Market format.
    Product(ProductArgs),
    /// Lowest eigenmodes of a product Laplacian via the factor spectra.
    Spectral(SpectralArgs),
    /// Joint space/time interpolation of observed edge flows.
    Interpolate(InterpolateArgs),
    /// Built-in demonstrations.
    #[command(subcommand)]
    Demo(DemoCommand),
    /// Ocean-current inference from drifter tracks.
    #[command(subcommand)]
    Drifter(DrifterCommand),
}

#[derive(Debug, Subcommand)]
pub enum ComplexCommand {
    Build(BuildArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Cell-complex JSON output (`-` for stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the number of cells per dimension.
    #[arg(long)]
    pub summary: bool,
    /// Check inputs only.
    #[arg(long)]
    pub validate: bool,
}

/// `i,j` grade of a product complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradeArg(pub usize, pub usize);

impl FromStr for GradeArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("grade {s:?} must look like i,j"))?;
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("grade {s:?}: {e}"))
        };
        Ok(Self(parse(a)?, parse(b)?))
    }
}

/// Comma-separated list of non-negative reals.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaList(pub Vec<f64>);

impl FromStr for AlphaList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if v.is_empty() || v.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(format!(
                "{s:?} must be a list of finite non-negative numbers"
            ));
        }
        Ok(Self(v))
    }
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value = "1,0")]
    pub grade: GradeArg,
    /// Matrix Market output (`-` for stdout).
    #[arg(long)]
    pub emit: Option<PathBuf>,
    /// Weight of the X Laplacian; with neither weight given the exact
    /// integer operator is written.
    #[arg(long)]
    pub alpha_x: Option<f64>,
    #[arg(long)]
    pub alpha_y: Option<f64>,
    #[arg(long)]
    pub validate: bool,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Product complex JSON: `{"product": {"x": ..., "y": ...}}`.
    #[arg(long)]
    pub complex: PathBuf,
    #[arg(long, default_value = "0,0")]
    pub grade: GradeArg,
    #[arg(long, default_value_t = 10)]
    pub modes: usize,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub validate: bool,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub complex: PathBuf,
    /// Observations `t,edge_u,edge_v,value` (t is 0-based).
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_s: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha_t: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub lambda: f64,
    /// Number of time steps; defaults to the largest observed t plus one.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub validate: bool,
}

#[derive(Debug, Subcommand)]
pub enum DemoCommand {
    /// Three-snapshot interpolation ablation.
    Fig1(Fig1Args),
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Also write the scene's complex, truth and observations to this directory.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long)]
    pub validate: bool,
}

#[derive(Debug, Subcommand)]
pub enum DrifterCommand {
    /// Fit and score currents on a buoy CSV.
    Run(DrifterRunArgs),
    /// Synthetic benchmark over several seeds.
    Synth(DrifterSynthArgs),
}

#[derive(Debug, Args)]
pub struct DrifterRunArgs {
    /// CSV with header `id,timestamp,lat,lon`.
    #[arg(long)]
    pub pings: PathBuf,
    #[arg(long, default_value = "25,-90,10,-55", allow_hyphen_values = true)]
    pub bbox: String,
    #[arg(long, default_value_t = 0.3)]
    pub hex_size: f64,
    /// Excluded hexagon ids.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Defaults to 0,1,0.1,0.01,0.001,0.0001,0.00001.
    #[arg(long)]
    pub alpha_s: Option<AlphaList>,
    #[arg(long)]
    pub alpha_t: Option<AlphaList>,
    /// First year of the time axis; defaults to the earliest ping.
    #[arg(long)]
    pub first_year: Option<i32>,
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub validate: bool,
}

#[derive(Debug, Args)]
pub struct DrifterSynthArgs {
    /// First seed; seeds `seed .. seed + seeds` are run.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = SEED_COUNT)]
    pub seeds: u64,
    #[arg(long)]
    pub alpha_s: Option<AlphaList>,
    #[arg(long)]
    pub alpha_t: Option<AlphaList>,
    #[arg(long, default_value_t = 60)]
    pub trajectories: usize,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Write the first seed's pings as an `id,timestamp,lat,lon` CSV, the
    /// island mask and the grid's bounding box next to it, then stop.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long)]
    pub validate: bool,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Complex(ComplexCommand::Build(a)) => complex_build(a),
        Command::Product(a) => product(a),
        Command::Spectral(a) => spectral(a),
        Command::Interpolate(a) => interpolate(a),
        Command::Demo(DemoCommand::Fig1(a)) => fig1(a),
        Command::Drifter(DrifterCommand::Run(a)) => drifter_run(a),
        Command::Drifter(DrifterCommand::Synth(a)) => drifter_synth(a),
    }
}

fn validated() -> Result<()> {
    println!("ok");
    Ok(())
}

fn complex_build(a: BuildArgs) -> Result<()> {
    let c = io::read_complex(&a.input)?;
    if a.validate {
        return validated();
    }
    if a.summary {
        for (k, n) in c.counts().iter().enumerate() {
            println!("N_{k} = {n}");
        }
    }
    if let Some(out) = &a.out {
        io::write_output(out, io::cell_complex_json(&c.to_cell_complex())?.as_bytes())?;
    }
    Ok(())
}

fn product(a: ProductArgs) -> Result<()> {
    let x = io::read_complex(&a.x)?.to_cell_complex();
    let y = io::read_complex(&a.y)?.to_cell_complex();
    for w in [a.alpha_x, a.alpha_y].into_iter().flatten() {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::param(format!(
                "Laplacian weights must be finite and non-negative, got {w}"
            )));
        }
    }
    if a.validate {
        return validated();
    }
    let z = crate::product::ProductComplex::new(x, y);
    let GradeArg(i, j) = a.grade;
    let comment = vec![format!(
        "prodtop {} product grade={i},{j} x={} y={}",
        io::VERSION,
        a.x.display(),
        a.y.display()
    )];
    let text = match (a.alpha_x, a.alpha_y) {
        (None, None) => io::write_matrix_market(&z.kronecker_sum_laplacian(i, j), &comment),
        (ax, ay) => {
            let op = z.product_hodge_laplacian(i, j, ax.unwrap_or(1.0), ay.unwrap_or(1.0))?;
            io::write_matrix_market(&op, &comment)
        }
    };
    match &a.emit {
        Some(p) => io::write_output(p, text.as_bytes()),
        None => {
            println!("grade ({i},{j}): {} cells", z.grade_space(i, j).len);
            Ok(())
        }
    }
}

fn spectral(a: SpectralArgs) -> Result<()> {
    let z = io::read_complex(&a.complex)?.into_product()?;
    let GradeArg(i, j) = a.grade;
    let dim = z.grade_space(i, j).len;
    if a.modes > dim {
        return Err(Error::param(format!(
            "requested {} modes of a {dim}-dimensional grade",
            a.modes
        )));
    }
    if a.validate {
        return validated();
    }
    let modes = product_eigenmodes(&z, i, j, a.modes)?;
    let repro = io::repro_header(
        "spectral",
        &[
            ("complex", a.complex.display().to_string()),
            ("grade", format!("{i},{j}")),
            ("modes", a.modes.to_string()),
        ],
    );
    let rows = modes.iter().enumerate().map(|(k, m)| {
        vec![
            k.to_string(),
            io::fmt_f64(m.lambda_x),
            io::fmt_f64(m.lambda_y),
            io::fmt_f64(m.lambda()),
        ]
    });
    let text = io::csv_document(
        &repro,
        &["index", "lambda_x", "lambda_y", "lambda_sum"],
        rows,
    )?;
    io::write_output(&a.out, text.as_bytes())
}

fn interpolate(a: InterpolateArgs) -> Result<()> {
    let x = io::read_complex(&a.complex)?.into_simplicial()?;
    let obs_text = io::read_to_string(&a.obs)?;
    let steps = match a.steps {
        Some(s) => s,
        None => io::observed_steps(obs_text.as_bytes())?,
    };
    if steps == 0 {
        return Err(Error::param(
            "no time steps: pass --steps or provide observations",
        ));
    }
    let obs = io::read_observations(obs_text.as_bytes(), &x, steps)?;
    let p = InterpolationParams::new(a.alpha_s, a.alpha_t, a.lambda)?;
    if a.validate {
        return validated();
    }
    let sol = interpolate_flow(&x, &obs, &p)?;
    let repro = io::repro_header(
        "interpolate",
        &[
            ("complex", a.complex.display().to_string()),
            ("obs", a.obs.display().to_string()),
            ("alpha_s", a.alpha_s.to_string()),
            ("alpha_t", a.alpha_t.to_string()),
            ("lambda", a.lambda.to_string()),
            ("steps", steps.to_string()),
        ],
    );
    io::write_output(&a.out, io::flow_csv(&x, &sol.flow, &repro)?.as_bytes())
}

fn fig1(a: Fig1Args) -> Result<()> {
    if a.validate {
        return validated();
    }
    let scene = toy::scene();
    let rows = toy::ablation(&scene, &toy::SETTINGS)?;
    let repro = io::repro_header("demo fig1", &[("lambda", toy::LAMBDA.to_string())]);
    let table = io::csv_document(
        &repro,
        &["alpha_t", "alpha_s", "rel_error"],
        rows.iter().map(|r| {
            vec![
                r.alpha_t.to_string(),
                r.alpha_s.to_string(),
                format!("{:.6}", r.rel_error),
            ]
        }),
    )?;
    io::write_output(&a.out, table.as_bytes())?;
    if let Some(dir) = &a.export {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tops: Vec<Vec<usize>> = scene
            .complex
            .simplices(1)
            .iter()
            .cloned()
            .chain(scene.complex.simplices(2).iter().cloned())
            .collect();
        let write = |name: &str, text: String| io::write_output(&dir.join(name), text.as_bytes());
        write("complex.json", io::simplicial_json(&tops)? + "\n")?;
        write(
            "truth.csv",
            io::flow_csv(&scene.complex, &scene.truth, &repro)?,
        )?;
        write(
            "obs.csv",
            io::observations_csv(&scene.complex, &scene.observations, &repro)?,
        )?;
    }
    Ok(())
}

fn sweep_csv(repro: &str, rows: &[(Option<u64>, SweepRow)]) -> Result<String> {
    let with_seed = rows.iter().any(|r| r.0.is_some());
    let mut columns = vec!["alpha_s", "alpha_t", "train_loss", "test_loss", "iters"];
    if with_seed {
        columns.insert(0, "seed");
    }
    let body = rows.iter().map(|(seed, r)| {
        let mut v = vec![
            r.alpha_s.to_string(),
            r.alpha_t.to_string(),
            format!("{:.6e}", r.train_loss),
            format!("{:.6}", r.test_loss),
            r.iters.to_string(),
        ];
        if let Some(s) = seed {
            v.insert(0, s.to_string());
        }
        v
    });
    io::csv_document(repro, &columns, body)
}

fn list_or_grid(l: &Option<AlphaList>) -> Vec<f64> {
    l.as_ref().map_or_else(hyperparameter_grid, |a| a.0.clone())
}

fn drifter_run(a: DrifterRunArgs) -> Result<()> {
    let bbox: BBox = a.bbox.parse()?;
    let mask = match &a.mask {
        Some(p) => io::parse_mask(&io::read_to_string(p)?)?,
        None => Default::default(),
    };
    if !(a.split > 0.0 && a.split < 1.0) {
        return Err(Error::param(format!(
            "split fraction must lie in (0, 1), got {}",
            a.split
        )));
    }
    let grid = build_hex_grid(&bbox, a.hex_size, &mask)?;
    let report = ingest_gdp_csv(&a.pings, Some(&bbox))?;
    log::info!(
        "{} buoys; dropped {} unparseable, {} pre-1992, {} outside the box",
        report.trajectories.len(),
        report.unparseable,
        report.before_first_year,
        report.outside_bbox
    );
    let (train, test) = split_train_test(&report.trajectories, a.split, a.seed)?;
    let span = YearRange::spanning(&report.trajectories)
        .ok_or_else(|| Error::param("no pings left after filtering"))?;
    let years = YearRange {
        first: a.first_year.unwrap_or(span.first),
        count: a.years.unwrap_or(span.count),
    };
    if years.count == 0 {
        return Err(Error::param("year range is empty"));
    }
    if a.validate {
        return validated();
    }
    let (train_flows, drops) = YearlyFlows::from_trajectories(&grid, &train, years);
    let (test_flows, _) = YearlyFlows::from_trajectories(&grid, &test, years);
    log::info!("training discretization dropped {:?}", drops);
    let settings = all_settings(&list_or_grid(&a.alpha_s), &list_or_grid(&a.alpha_t));
    let rows = sweep(
        &grid,
        &train_flows,
        &test_flows,
        &settings,
        &InferOptions::default(),
    )?;
    let repro = io::repro_header(
        "drifter run",
        &[
            ("pings", a.pings.display().to_string()),
            ("bbox", a.bbox.clone()),
            ("hex_size", a.hex_size.to_string()),
            ("split", a.split.to_string()),
            ("seed", a.seed.to_string()),
            ("first_year", years.first.to_string()),
            ("years", years.count.to_string()),
        ],
    );
    let rows: Vec<(Option<u64>, SweepRow)> = rows.into_iter().map(|r| (None, r)).collect();
    io::write_output(&a.out, sweep_csv(&repro, &rows)?.as_bytes())
}

fn export_synth(cfg: &SynthConfig, seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trajectories = generate_trajectories(cfg, seed)?;
    let repro = io::repro_header("drifter synth --export", &[("seed", seed.to_string())]);
    let rows = trajectories.iter().flat_map(|t| {
        t.pings().iter().map(move |p| {
            vec![
                t.buoy_id().to_string(),
                p.time.to_string(),
                io::fmt_f64(p.lat),
                io::fmt_f64(p.lon),
            ]
        })
    });
    let pings = io::csv_document(&repro, &["id", "timestamp", "lat", "lon"], rows)?;
    io::write_output(&dir.join("pings.csv"), pings.as_bytes())?;
    let mask: Vec<String> = cfg.island()?.iter().map(ToString::to_string).collect();
    io::write_output(
        &dir.join("mask.txt"),
        format!("{}\n", mask.join("\n")).as_bytes(),
    )?;
    let l = cfg.layout()?;
    let bbox = format!(
        "{},{},{},{}\n",
        l.lat0,
        l.lon0,
        l.lat0 + (cfg.nrows - 1) as f64 * l.size,
        l.lon0 + (cfg.ncols - 1) as f64 * l.dx()
    );
    io::write_output(&dir.join("bbox.txt"), bbox.as_bytes())
}

fn drifter_synth(a: DrifterSynthArgs) -> Result<()> {
    if a.seeds == 0 {
        return Err(Error::param("need at least one seed"));
    }
    let cfg = SynthConfig {
        trajectories: a.trajectories,
        ..Default::default()
    };
    cfg.grid()?;
    if a.validate {
        return validated();
    }
    if let Some(dir) = &a.export {
        return export_synth(&cfg, a.seed, dir);
    }
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let settings = all_settings(&list_or_grid(&a.alpha_s), &list_or_grid(&a.alpha_t));
    let report = run_synth(&cfg, &seeds, &settings, &InferOptions::default())?;
    let repro = io::repro_header(
        "drifter synth",
        &[
            ("seed", a.seed.to_string()),
            ("seeds", a.seeds.to_string()),
            ("trajectories", a.trajectories.to_string()),
        ],
    );
    let rows: Vec<(Option<u64>, SweepRow)> = report
        .seeds
        .iter()
        .flat_map(|s| s.rows.iter().map(move |r| (Some(s.seed), *r)))
        .collect();
    io::write_output(&a.out, sweep_csv(&repro, &rows)?.as_bytes())?;
    for (label, best) in [
        ("joint", report.best_joint()),
        ("pure spatial", report.best_pure_spatial()),
        ("pure temporal", report.best_pure_temporal()),
    ] {
        if let Some(b) = best {
            eprintln!(
                "best {label}: alpha_s={} alpha_t={} mean test loss {:.4}",
                b.alpha_s, b.alpha_t, b.mean_test_loss
            );
        }
    }
    Ok(())
}
