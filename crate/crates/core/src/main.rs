use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vessel_intent::extract::{build_prior_config, Encounter, MapSource, ProjectedMap};
use vessel_intent::geometry::{project_local, GeoMap, PolygonMap, ShipState, Waypoint};
use vessel_intent::io::{
    export_run, load_ais_csv, load_map_geojson, run_config_schema, step_record_schema, ExportFormat, IoError, RunConfig,
};
use vessel_intent::runtime::{replay, score_at, RuntimeError, StepRecord};
use vessel_intent::selftest::run_selftest;

/// Vessel intention inference and candidate-trajectory scoring.
#[derive(Parser)]
#[command(name = "vessel-intent", version)]
struct Cli {
    /// Worker threads for parallel scoring and extraction.
    #[arg(long, global = true, env = "VESSEL_INTENT_WORKERS")]
    workers: Option<usize>,
    /// Directory that relative output paths are written under.
    #[arg(long, global = true, env = "VESSEL_INTENT_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit intention priors to a labelled AIS corpus and write a run config.
    ExtractPriors {
        corpus: PathBuf,
        /// Land polygons as GeoJSON.
        map: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Config supplying the prior windows and every other setting.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the inference loop over one encounter and export every step.
    Replay {
        encounter: PathBuf,
        map: PathBuf,
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Overrides the config's export format.
        #[arg(long)]
        format: Option<ExportFormat>,
        #[arg(long)]
        encounter_id: Option<String>,
        /// Next waypoint as `lat,lon`; defaults to the last reference position.
        #[arg(long, value_parser = parse_lat_lon)]
        waypoint: Option<(f64, f64)>,
    },
    /// Score the LOS candidates at one time of an encounter.
    Score {
        encounter: PathBuf,
        config: PathBuf,
        /// Time to score at, in the corpus timestamp scale.
        #[arg(long)]
        at: f64,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        encounter_id: Option<String>,
        #[arg(long, value_parser = parse_lat_lon)]
        waypoint: Option<(f64, f64)>,
    },
    /// Check the engine against its built-in oracles.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the default run config as TOML.
    DefaultConfig,
    /// Print a JSON schema.
    Schema {
        #[arg(value_enum, default_value_t = SchemaKind::RunConfig)]
        kind: SchemaKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaKind {
    RunConfig,
    StepRecord,
}

fn parse_lat_lon(s: &str) -> Result<(f64, f64), String> {
    let (lat, lon) = s.split_once(',').ok_or("expected lat,lon")?;
    let lat: f64 = lat.trim().parse().map_err(|e| format!("lat: {e}"))?;
    let lon: f64 = lon.trim().parse().map_err(|e| format!("lon: {e}"))?;
    Ok((lat, lon))
}

enum Failure {
    Validation(String),
    Contradiction(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<RuntimeError> for Failure {
    fn from(e: RuntimeError) -> Self {
        if e.is_contradiction() {
            Failure::Contradiction(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

fn output_path(out_dir: &Option<PathBuf>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn pick_encounter(path: &Path, id: Option<&str>) -> Result<Encounter, Failure> {
    let mut all = load_ais_csv(path)?;
    match id {
        Some(id) => all
            .into_iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Failure::Validation(format!("{}: no encounter {id:?}", path.display()))),
        None if all.len() == 1 => Ok(all.remove(0)),
        None if all.is_empty() => Err(Failure::Validation(format!("{}: no encounters", path.display()))),
        None => Err(Failure::Validation(format!(
            "{} holds {} encounters; pick one with --encounter-id",
            path.display(),
            all.len()
        ))),
    }
}

fn local_map(geo: Option<&GeoMap>, enc: &Encounter, densify_m: f64) -> PolygonMap {
    match geo {
        Some(geo) => ProjectedMap { geo, spacing_m: densify_m }.local_map(enc).into_owned(),
        None => PolygonMap::empty(),
    }
}

fn waypoint(enc: &Encounter, given: Option<(f64, f64)>) -> Option<Waypoint> {
    match (given, enc.origin) {
        (Some((lat, lon)), Some(origin)) => {
            let [x, y] = project_local(origin, lat, lon);
            Some(Waypoint { x, y })
        }
        _ => enc.reference.last().map(|s| Waypoint { x: s.x, y: s.y }),
    }
}

fn tracks(enc: &Encounter) -> Vec<Vec<ShipState>> {
    vec![enc.reference.clone(), enc.obstacle.clone()]
}

fn print_record(r: &StepRecord) {
    println!("t = {}  slices = {}", r.t, r.slices);
    let n = &r.nodes;
    println!("SDG_F = {:.4}  SDG_S = {:.4}", n.sdg_f, n.sdg_s);
    for (i, (nav, colav)) in n.c_nav_m.iter().zip(&n.c_colav_m).enumerate() {
        println!("obstacle {}: C_NAV_M = {nav:.4}  C_COLAV_M = {colav:.4}", i + 1);
    }
    println!("{:<8} {:>12} {:>12}", "id", "raw", "confidence");
    for c in &r.candidates {
        println!("{:<8} {:>12.6} {:>12.6}", c.id, c.raw, c.confidence);
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ExtractPriors { corpus, map, output, config } => {
            let base = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            let encounters = load_ais_csv(&corpus)?;
            let geo = load_map_geojson(&map)?;
            let source = ProjectedMap { geo: &geo, spacing_m: base.map.densify_m };
            let (priors, report, _) = build_prior_config(&encounters, &source, &base.extract, &base.priors);
            print!("{report}");
            let out = RunConfig { priors, ..base };
            out.validate().map_err(Failure::Validation)?;
            let path = output_path(&cli.out_dir, &output);
            std::fs::write(&path, out.to_toml()).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
        }
        Command::Replay { encounter, map, config, output, format, encounter_id, waypoint: wp } => {
            let cfg = RunConfig::load(&config)?;
            let enc = pick_encounter(&encounter, encounter_id.as_deref())?;
            let geo = load_map_geojson(&map)?;
            let local = local_map(Some(&geo), &enc, cfg.map.densify_m);
            let records =
                replay(&cfg.session_config(), &tracks(&enc), &local, waypoint(&enc, wp), &cfg.replay_options())?;
            let path = output_path(&cli.out_dir, &output);
            export_run(&records, &path, format.unwrap_or(cfg.export.format))?;
            log::info!("wrote {} steps to {}", records.len(), path.display());
        }
        Command::Score { encounter, config, at, map, encounter_id, waypoint: wp } => {
            let cfg = RunConfig::load(&config)?;
            let enc = pick_encounter(&encounter, encounter_id.as_deref())?;
            let geo = map.as_deref().map(load_map_geojson).transpose()?;
            let local = local_map(geo.as_ref(), &enc, cfg.map.densify_m);
            let record =
                score_at(&cfg.session_config(), &tracks(&enc), &local, waypoint(&enc, wp), &cfg.replay_options(), at)?;
            print_record(&record);
        }
        Command::Selftest { seed } => {
            let results = run_selftest(seed);
            for r in &results {
                println!("{r}");
            }
            if !results.iter().all(|r| r.passed()) {
                return Err(Failure::Validation("selftest failed".into()));
            }
        }
        Command::DefaultConfig => print!("{}", RunConfig::default().to_toml()),
        Command::Schema { kind } => match kind {
            SchemaKind::RunConfig => print!("{}", run_config_schema()),
            SchemaKind::StepRecord => print!("{}", step_record_schema()),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Contradiction(msg)) => {
            eprintln!("contradiction: {msg}");
            ExitCode::from(2)
        }
    }
}
