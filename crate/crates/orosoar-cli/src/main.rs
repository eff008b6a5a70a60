use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use orosoar::aero::AeroModel;
use orosoar::config;
use orosoar::controller::ControllerConfig;
use orosoar::math::Vec3;
use orosoar::montecarlo::{self, BatchSpec};
use orosoar::windfield::{RampFieldParams, WindField};

#[derive(Parser)]
#[command(
    name = "orosoar",
    version,
    about = "Orographic soaring simulator: single runs, controller batches and feasibility maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one hover run and write its trajectory and summary
    Simulate(SimulateArgs),
    /// Evaluate controller presets over a batch of randomized references
    Batch(BatchArgs),
    /// Export the excess-updraft map over the x-z plane
    Feasibility(FeasibilityArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Wind field: `ramp`, `uniform`, or a grid CSV file
    #[arg(long, default_value = "ramp")]
    wind: String,
    /// Nominal wind speed for the wind presets, m/s
    #[arg(long, default_value_t = 7.0)]
    wind_speed: f64,
    /// Aircraft: preset (`eclipson_c`, `seal_g1500`) or JSON file
    #[arg(long, default_value = "eclipson_c")]
    aircraft: String,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Random seed for reference sampling
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Run duration, s
    #[arg(long, default_value_t = 100.0)]
    duration: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Controller: preset (`base`, `aos-a`, `aos-d`, `aos-e`, `aos-sw`,
    /// `saos`) or JSON file
    #[arg(long, default_value = "saos")]
    controller: String,
    /// Hover reference `x,y,z` in NED metres (default: above mid-slope on the
    /// feasible band)
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    reference: Option<Vec3<f64>>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Controllers to evaluate (repeatable or comma-separated)
    #[arg(long, value_delimiter = ',', default_values_t = [
        "base".to_string(), "aos-a".to_string(), "aos-d".to_string(),
        "aos-e".to_string(), "aos-sw".to_string(), "saos".to_string(),
    ])]
    controller: Vec<String>,
    /// Number of randomized references
    #[arg(long, default_value_t = 300)]
    refs: usize,
    /// Sweep the nominal wind speed: `lo:hi:step` (wind presets only)
    #[arg(long)]
    sweep_wind: Option<String>,
    /// Also write one trajectory CSV per run
    #[arg(long)]
    trajectories: bool,
}

#[derive(Args)]
struct FeasibilityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Streamwise extent `lo:hi`, m (default: around the ramp)
    #[arg(long)]
    x_range: Option<String>,
    /// Altitude ceiling of the map, m
    #[arg(long, default_value_t = 4.0)]
    alt_max: f64,
    /// Samples along x
    #[arg(long, default_value_t = 120)]
    nx: usize,
    /// Samples along z
    #[arg(long, default_value_t = 80)]
    nz: usize,
}

fn parse_vec3(s: &str) -> Result<Vec3<f64>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected `x,y,z`".to_string());
    }
    let mut v = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p
            .trim()
            .parse()
            .map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_range(s: &str, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != n {
        bail!("expected {} colon-separated numbers, found `{s}`", n);
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("`{p}` is not a number"))
        })
        .collect()
}

fn thread_cap() -> Option<usize> {
    std::env::var("OROSOAR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

struct Scene {
    field: WindField<f64>,
    aero: AeroModel<f64>,
    spec: BatchSpec<f64>,
}

fn build_scene(common: &CommonArgs) -> Result<Scene> {
    let field = config::load_wind::<f64>(&common.wind, common.wind_speed)?;
    let aero = config::load_aircraft::<f64>(&common.aircraft)?;
    let params = RampFieldParams::standard(common.wind_speed);
    let mut spec = BatchSpec::for_ramp(&params, common.seed);
    spec.run_duration = common.duration;
    let span = common.duration - spec.warmup;
    if span <= 0.0 {
        bail!("duration must exceed the {} s warmup", spec.warmup);
    }
    // keep an integer number of windows for short runs
    if (span / spec.window).fract().abs() > 1e-9 {
        bail!(
            "duration minus the {} s warmup must be a multiple of the {} s window",
            spec.warmup,
            spec.window
        );
    }
    Ok(Scene { field, aero, spec })
}

fn load_controllers(
    names: &[String],
    aero: &AeroModel<f64>,
) -> Result<Vec<(String, ControllerConfig<f64>)>> {
    names
        .iter()
        .map(|name| {
            let cfg = config::load_controller::<f64>(name)?.for_aircraft(aero);
            Ok((name.clone(), cfg))
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("failed to write {}", path.display()))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let scene = build_scene(&args.common)?;
    let mut spec = scene.spec;
    spec.record_trajectories = true;
    let cfg = config::load_controller::<f64>(&args.controller)?.for_aircraft(&scene.aero);

    let reference = match args.reference {
        Some(r) => r,
        None => {
            let params = RampFieldParams::standard(args.common.wind_speed);
            let x = params.ramp_start_x + 0.7 * params.horizontal_run();
            let altitude = scene
                .field
                .feasible_band_altitude(&scene.aero, x, 5.0)
                .unwrap_or_else(|| scene.field.terrain_height(x, 0.0) + 1.5);
            Vec3::new(x, 0.0, -altitude)
        }
    };

    let result = montecarlo::run_single(&cfg, reference, &spec, &scene.field, &scene.aero);
    fs::create_dir_all(&args.common.out)
        .with_context(|| format!("failed to create {}", args.common.out.display()))?;
    write(
        &args.common.out.join("trajectory.csv"),
        &montecarlo::trajectory_csv(&result.trajectory),
    )?;
    let mut slim = result.clone();
    slim.trajectory.clear();
    let mut json = serde_json::to_string_pretty(&slim).context("serializing run summary")?;
    json.push('\n');
    write(&args.common.out.join("run_summary.json"), &json)?;
    println!(
        "run at ({}, {}, {}): {}",
        reference.x,
        reference.y,
        reference.z,
        slim.classification.as_str()
    );
    Ok(())
}

fn run_one_batch(
    scene: &Scene,
    controllers: &[(String, ControllerConfig<f64>)],
    out: &Path,
    suffix: &str,
    trajectories: bool,
) -> Result<()> {
    let summary = montecarlo::run_batch(
        controllers,
        &scene.spec,
        &scene.field,
        &scene.aero,
        thread_cap(),
    )?;
    fs::create_dir_all(out).with_context(|| format!("failed to create {}", out.display()))?;
    write(
        &out.join(format!("batch_summary{suffix}.json")),
        &summary.to_json(),
    )?;
    write(&out.join(format!("runs{suffix}.csv")), &summary.runs_csv())?;
    print!("{}", summary.rates_table());

    if trajectories {
        let refs = montecarlo::sample_references(&scene.spec, &scene.field);
        let mut spec = scene.spec.clone();
        spec.record_trajectories = true;
        for (name, cfg) in controllers {
            for (i, reference) in refs.iter().enumerate() {
                let run = montecarlo::run_single(cfg, *reference, &spec, &scene.field, &scene.aero);
                write(
                    &out.join(format!("trajectory{suffix}_{name}_{i:04}.csv")),
                    &montecarlo::trajectory_csv(&run.trajectory),
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> Result<()> {
    let mut scene = build_scene(&args.common)?;
    scene.spec.n_runs = args.refs;
    let controllers = load_controllers(&args.controller, &scene.aero)?;

    match &args.sweep_wind {
        None => run_one_batch(
            &scene,
            &controllers,
            &args.common.out,
            "",
            args.trajectories,
        ),
        Some(sweep) => {
            let parts = parse_range(sweep, 3)?;
            let (lo, hi, step) = (parts[0], parts[1], parts[2]);
            if step <= 0.0 || hi < lo {
                bail!("sweep must be `lo:hi:step` with positive step");
            }
            if Path::new(&args.common.wind).exists() {
                bail!("--sweep-wind requires a wind preset, not a grid file");
            }
            let mut speed = lo;
            while speed <= hi + 1e-9 {
                let common = CommonArgs {
                    wind: args.common.wind.clone(),
                    wind_speed: speed,
                    aircraft: args.common.aircraft.clone(),
                    out: args.common.out.clone(),
                    seed: args.common.seed,
                    duration: args.common.duration,
                };
                let mut scene = build_scene(&common)?;
                scene.spec.n_runs = args.refs;
                println!("wind {speed} m/s:");
                run_one_batch(
                    &scene,
                    &controllers,
                    &args.common.out,
                    &format!("_wind{speed}"),
                    false,
                )?;
                speed += step;
            }
            Ok(())
        }
    }
}

fn cmd_feasibility(args: FeasibilityArgs) -> Result<()> {
    let scene = build_scene(&args.common)?;
    let params = RampFieldParams::standard(args.common.wind_speed);
    let (x_lo, x_hi) = match &args.x_range {
        Some(r) => {
            let parts = parse_range(r, 2)?;
            (parts[0], parts[1])
        }
        None => (
            params.ramp_start_x - params.horizontal_run(),
            params.crest_x() + 2.0 * params.horizontal_run(),
        ),
    };
    if args.nx < 2 || args.nz < 2 {
        bail!("nx and nz must be at least 2");
    }

    let mut csv = String::from("x,z,excess_updraft\n");
    for i in 0..args.nx {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (args.nx - 1) as f64;
        for j in 0..args.nz {
            let altitude = 0.02 + (args.alt_max - 0.02) * j as f64 / (args.nz - 1) as f64;
            let z = -altitude;
            let value = scene
                .field
                .excess_updraft(&scene.aero, Vec3::new(x, 0.0, z));
            match value {
                Some(v) => csv.push_str(&format!("{x},{z},{v}\n")),
                None => csv.push_str(&format!("{x},{z},nan\n")),
            }
        }
    }
    fs::create_dir_all(&args.common.out)
        .with_context(|| format!("failed to create {}", args.common.out.display()))?;
    write(&args.common.out.join("feasibility.csv"), &csv)?;
    println!(
        "feasibility map: {} x {} samples over x in [{x_lo}, {x_hi}]",
        args.nx, args.nz
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Feasibility(args) => cmd_feasibility(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
