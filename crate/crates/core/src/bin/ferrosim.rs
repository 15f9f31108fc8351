//! Command-line front end: simulation runs, state analysis, minimal
//! connections, renormalized energies, defect-position optimization,
//! interface profiles, core energies, and seeded-state generation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};

use ferrosim::config::{ConfigMap, RunConfig};
use ferrosim::potential::potential_constants;
use ferrosim::{diagnostics, fields, flow, geometry, profile1d};
use ferrosim::{Error, Grid};

#[derive(Parser)]
#[command(name = "ferrosim", version, about = "Ferronematic gradient-flow simulator and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable): --set key=value.
    #[arg(long = "set")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Random seed (optimizer starts); overrides the config key.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gradient flow from the winding-k initial condition.
    Simulate(Common),
    /// Analyze a stored field state (energy, defects, jump set).
    Analyze {
        state_file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal connection of a points file (CSV rows `x,y`).
    Minconn { points_file: PathBuf },
    /// Renormalized energy of the canonical map with the given defects.
    Renorm {
        points_file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Minimize the defect-position energy over random starts.
    OptimizeDefects(Common),
    /// Optimal interface profile and its cost.
    Profile(Common),
    /// Ginzburg-Landau core-energy table and extrapolation.
    CoreEnergy(Common),
    /// Build a seeded near-optimal state from a points file.
    SeedState {
        points_file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("FERROSIM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Parse { .. } => 4,
                Error::Io(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn resolve_config(common: &Common) -> ferrosim::Result<RunConfig> {
    let mut map = match &common.config {
        Some(path) => ConfigMap::from_file(path)?,
        None => ConfigMap::default(),
    };
    for s in &common.sets {
        map.apply_override(s)?;
    }
    if let Some(seed) = common.seed {
        map.set("seed", seed.to_string());
    }
    RunConfig::resolve(&map)
}

fn write_json(path: &Path, value: &serde_json::Value) -> ferrosim::Result<()> {
    std::fs::write(path, format!("{value:#}\n"))?;
    Ok(())
}

fn write_state(
    path: &Path,
    state: &ferrosim::FieldState,
    params: &ferrosim::ModelParams,
) -> ferrosim::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    fields::write_field_csv(&mut w, state, params)?;
    Ok(())
}

fn read_state(path: &Path) -> ferrosim::Result<(ferrosim::FieldState, f64, f64)> {
    let r = std::io::BufReader::new(std::fs::File::open(path)?);
    fields::read_field_csv(r)
}

fn read_points(path: &Path) -> ferrosim::Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |field: Option<&str>, col: usize| -> ferrosim::Result<f64> {
            field
                .map(str::trim)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    col,
                    msg: "expected `x,y` with numeric fields".into(),
                })
        };
        let x = parse(cols.next(), 1)?;
        let y = parse(cols.next(), 2)?;
        points.push((x, y));
    }
    Ok(points)
}

fn dispatch(command: Command) -> ferrosim::Result<()> {
    match command {
        Command::Simulate(common) => cmd_simulate(&common),
        Command::Analyze { state_file, common } => cmd_analyze(&state_file, &common),
        Command::Minconn { points_file } => cmd_minconn(&points_file),
        Command::Renorm { points_file, common } => cmd_renorm(&points_file, &common),
        Command::OptimizeDefects(common) => cmd_optimize(&common),
        Command::Profile(common) => cmd_profile(&common),
        Command::CoreEnergy(common) => cmd_core_energy(&common),
        Command::SeedState { points_file, common } => cmd_seed_state(&points_file, &common),
    }
}

fn cmd_simulate(common: &Common) -> ferrosim::Result<()> {
    let cfg = resolve_config(common)?;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join("config_resolved.txt"), cfg.echo())?;

    let consts = potential_constants(&cfg.params)?;
    let grid = Grid::new(cfg.grid_n);
    let initial = fields::initial_condition(grid, cfg.k, &consts);
    let flow_cfg = cfg.flow_config();
    let result = flow::run(&flow_cfg, initial, &consts)?;

    for (t, snap) in &result.snapshots {
        let name = format!("snapshot_t{t}.csv");
        write_state(&common.out.join(name), snap, &cfg.params)?;
    }
    write_state(&common.out.join("final.csv"), &result.final_state, &cfg.params)?;

    let mut report = String::from("time,energy,delta,picard_iters,max_update\n");
    for r in &result.reports {
        report.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{},{:.17e}\n",
            r.time, r.energy_total, r.energy_delta, r.picard_iters, r.max_update
        ));
    }
    std::fs::write(common.out.join("report.csv"), report)?;

    let summary = diagnostics::analyze(&result.final_state, &cfg.params, &consts);
    let mut value = serde_json::to_value(&summary).expect("serializable");
    value["reached_steady"] = serde_json::Value::Bool(result.reached_steady);
    write_json(&common.out.join("analysis.json"), &value)?;
    Ok(())
}

fn cmd_analyze(state_file: &Path, common: &Common) -> ferrosim::Result<()> {
    let (state, beta, eps) = read_state(state_file)?;
    let mut params = ferrosim::ModelParams::new(beta, eps);
    // Config/overrides may adjust the model constants for the analysis.
    let mut map = match &common.config {
        Some(path) => ConfigMap::from_file(path)?,
        None => ConfigMap::default(),
    };
    for s in &common.sets {
        map.apply_override(s)?;
    }
    params.beta = map.get_f64("beta", params.beta)?;
    params.eps = map.get_f64("eps", params.eps)?;
    let consts = potential_constants(&params)?;
    let summary = diagnostics::analyze(&state, &params, &consts);
    let value = serde_json::to_value(&summary).expect("serializable");
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("analysis.json"), &value)?;
    println!("{value:#}");
    Ok(())
}

fn cmd_minconn(points_file: &Path) -> ferrosim::Result<()> {
    let points = read_points(points_file)?;
    let conn = geometry::minimal_connection(&points)?;
    let value = serde_json::json!({
        "pairs": conn.pairing,
        "length": conn.total_length,
    });
    println!("{value:#}");
    Ok(())
}

fn cmd_renorm(points_file: &Path, common: &Common) -> ferrosim::Result<()> {
    let cfg = resolve_config(common)?;
    let points = read_points(points_file)?;
    let grid = Grid::new(cfg.grid_n.max(100));
    let sigmas = geometry::sigma_ladder(&grid);
    let (w, table) = geometry::renormalized_energy(&points, cfg.k, &grid, &sigmas)?;
    let value = serde_json::json!({
        "w": w,
        "table": table,
        "fit_residual": geometry::fit_residual(&table),
    });
    println!("{value:#}");
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("renorm.json"), &value)?;
    Ok(())
}

fn cmd_optimize(common: &Common) -> ferrosim::Result<()> {
    let cfg = resolve_config(common)?;
    let consts = potential_constants(&cfg.params)?;
    let grid = Grid::new(cfg.grid_n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let margin = 4.0 * grid.h();
    let npts = 2 * cfg.k.unsigned_abs() as usize;
    let starts: Vec<Vec<(f64, f64)>> = (0..6)
        .map(|_| {
            (0..npts)
                .map(|_| {
                    (
                        rng.gen_range(2.0 * margin..1.0 - 2.0 * margin),
                        rng.gen_range(2.0 * margin..1.0 - 2.0 * margin),
                    )
                })
                .collect()
        })
        .collect();
    let result = geometry::minimize_w_beta(cfg.k, &consts, &grid, &starts)?;
    let value = serde_json::json!({
        "points": result.points,
        "value": result.value,
        "local_minima": result
            .local_minima
            .iter()
            .map(|(pts, v)| serde_json::json!({"points": pts, "value": v}))
            .collect::<Vec<_>>(),
    });
    println!("{value:#}");
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("optimize.json"), &value)?;
    Ok(())
}

fn cmd_profile(common: &Common) -> ferrosim::Result<()> {
    let cfg = resolve_config(common)?;
    let consts = potential_constants(&cfg.params)?;
    let profile = profile1d::optimal_profile(&cfg.params, profile1d::default_t_max(&consts), 10_000);
    std::fs::create_dir_all(&common.out)?;
    let mut csv = String::from("t,u\n");
    for (t, u) in profile.ts.iter().zip(&profile.us) {
        csv.push_str(&format!("{t:.17e},{u:.17e}\n"));
    }
    std::fs::write(common.out.join("profile.csv"), csv)?;
    let value = serde_json::json!({
        "cost": profile1d::profile_cost(&profile),
        "half_c_beta": 0.5 * consts.c_beta,
        "lambda_star": consts.lambda_star,
    });
    println!("{value:#}");
    write_json(&common.out.join("profile_cost.json"), &value)?;
    Ok(())
}

fn cmd_core_energy(common: &Common) -> ferrosim::Result<()> {
    let mut map = match &common.config {
        Some(path) => ConfigMap::from_file(path)?,
        None => ConfigMap::default(),
    };
    for s in &common.sets {
        map.apply_override(s)?;
    }
    let eps_list = map.get_f64_list("core_eps_list", &[0.2, 0.1, 0.05, 0.025])?;
    let n1d = map.get_usize("core_grid_n", 2000)?;
    let (table, gamma_star) = geometry::core_energy(&eps_list, n1d)?;
    let value = serde_json::json!({
        "table": table,
        "gamma_star": gamma_star,
    });
    println!("{value:#}");
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("core_energy.json"), &value)?;
    Ok(())
}

fn cmd_seed_state(points_file: &Path, common: &Common) -> ferrosim::Result<()> {
    let cfg = resolve_config(common)?;
    let consts = potential_constants(&cfg.params)?;
    let grid = Grid::new(cfg.grid_n);
    let points = read_points(points_file)?;
    let conn = geometry::minimal_connection(&points)?;
    let state = fields::seeded_state(grid, &cfg.params, &consts, &points, &conn)?;
    std::fs::create_dir_all(&common.out)?;
    write_state(&common.out.join("seeded.csv"), &state, &cfg.params)?;
    let value = serde_json::json!({
        "pairs": conn.pairing,
        "length": conn.total_length,
    });
    write_json(&common.out.join("connection.json"), &value)?;
    Ok(())
}
