mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use ttlcache_core::coverage::{utility_poisson_closed_form, CoverageSource};
use ttlcache_core::figures::{run_figure, sweep_values, FigureId};
use ttlcache_core::lp::write_mps;
use ttlcache_core::planner::{
    build_epigraph_program, build_step_choice_program, solve_single_cache_greedy,
};
use ttlcache_core::simulator::{run_replications, summarize};
use ttlcache_core::{
    evaluate_loads, CachingMode, Error as CoreError, Scenario, SolveReport, SolverStatus, StepModel, UpdateMode,
};

use output::{code_table, num, read_policy, write_json, CsvOut, PolicyFile, SolverInfo, VERSION};

const EXIT_INTERNAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_GAP: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "ttlcache", version, about = "Coded TTL caching policies for small-cell networks")]
struct Cli {
    /// Worker threads for sweeps and replications (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct ScenarioArgs {
    /// Scenario TOML file; the reference setup when omitted.
    #[arg(long, short)]
    scenario: Option<PathBuf>,

    /// Override a scenario value, e.g. `--set catalog.zipf_alpha=0`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal policy and write policy.json and loads.csv.
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Sttl)]
        mode: ModeArg,
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
        /// Relative optimality gap for TTL and FTTL.
        #[arg(long)]
        gap_tol: Option<f64>,
        /// Also write the optimization program in MPS format.
        #[arg(long, value_name = "FILE")]
        export_mps: Option<PathBuf>,
    },
    /// Simulate a policy file and write results.csv.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, short)]
        policy: PathBuf,
        #[arg(long, value_enum)]
        update_mode: Option<UpdateArg>,
        /// Seed of the first replication; replication r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Simulated hours including warmup.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
    },
    /// Sweep a parameter and write plot data to <figure>.csv.
    Figure {
        #[arg(value_parser = parse_figure)]
        figure: FigureId,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated sweep values (default: the scenario sweep or the figure's own).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        gap_tol: Option<f64>,
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
    },
    /// Check model properties on a scenario.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also compare a synchronous simulation with the analytical load.
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ttl,
    Fttl,
    Sttl,
    Static,
    /// Single-cache greedy (needs zero update cost).
    Greedy,
}

impl ModeArg {
    fn name(&self) -> &'static str {
        match self {
            Self::Ttl => "ttl",
            Self::Fttl => "fttl",
            Self::Sttl => "sttl",
            Self::Static => "static",
            Self::Greedy => "greedy",
        }
    }

    fn caching_mode(&self) -> CachingMode {
        match self {
            Self::Ttl => CachingMode::Ttl,
            Self::Fttl => CachingMode::Fttl,
            Self::Sttl | Self::Greedy => CachingMode::Sttl,
            Self::Static => CachingMode::Static,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum UpdateArg {
    Sync,
    Async,
}

fn parse_figure(s: &str) -> std::result::Result<FigureId, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

/// Bad input from the user: scenario, policy file or flags.
#[derive(Debug)]
struct ConfigError(String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: impl fmt::Display) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

/// Library errors caused by the input rather than by a solver failure.
fn classify(e: CoreError) -> anyhow::Error {
    match e {
        CoreError::Solver(_) | CoreError::Internal(_) => e.into(),
        other => config_err(other),
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario> {
    let text = match &args.scenario {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| config_err(format!("reading {}: {e}", path.display())))?,
        None => String::new(),
    };
    Scenario::from_toml_with_overrides(&text, &args.overrides).map_err(|e| {
        let origin = args
            .scenario
            .as_ref()
            .map_or("scenario".to_string(), |p| p.display().to_string());
        config_err(format!("{origin}: {e}"))
    })
}

fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

enum Outcome {
    Done,
    GapWarning,
    ValidationFailed,
}

fn solve(scenario: &Scenario, mode: ModeArg) -> Result<SolveReport> {
    let model = scenario.build().map_err(classify)?;
    if mode == ModeArg::Greedy {
        return solve_single_cache_greedy(&model.tables, &model.costs, &model.catalog, model.capacity).map_err(classify);
    }
    let inst = model.instance().map_err(classify)?;
    scenario
        .planner()
        .map_err(classify)?
        .solve(&inst, mode.caching_mode())
        .map_err(classify)
}

fn export_mps(scenario: &Scenario, mode: ModeArg, path: &Path) -> Result<()> {
    let model = scenario.build().map_err(classify)?;
    let inst = model.instance().map_err(classify)?;
    let mode = mode.caching_mode();
    let program = match (mode, scenario.solver.step_model) {
        (CachingMode::Ttl | CachingMode::Fttl, StepModel::Choice) => build_step_choice_program(&inst, mode).program,
        _ => build_epigraph_program(&inst, mode, scenario.solver.formulation).program,
    };
    let mut file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    write_mps(&program, &mut file)?;
    Ok(())
}

fn cmd_optimize(
    mut scenario: Scenario,
    mode: ModeArg,
    output: &Path,
    gap_tol: Option<f64>,
    mps: Option<&Path>,
) -> Result<Outcome> {
    if let Some(g) = gap_tol {
        scenario.solver.gap_tol = g;
        scenario.validate().map_err(config_err)?;
    }
    prepare_output(output)?;
    if let Some(path) = mps {
        export_mps(&scenario, mode, path)?;
    }
    let report = solve(&scenario, mode)?;
    info!("{} solved in {:.3}s, {} nodes", mode.name(), report.solve_time, report.nodes);
    let sizes = vec![scenario.catalog.file_size; scenario.catalog.n_files];
    let sizes = scenario.catalog.sizes.clone().unwrap_or(sizes);
    let file = PolicyFile {
        tool_version: VERSION.to_string(),
        scenario_hash: scenario.hash(),
        mode: mode.name().to_string(),
        code_params: code_table(&report.policy, &scenario, &sizes).map_err(|e| match e.downcast::<CoreError>() {
            Ok(core) => classify(core),
            Err(other) => other,
        })?,
        policy: report.policy,
        loads: report.loads,
        solver: SolverInfo {
            status: report.solver_status,
            objective: report.objective_value,
            nodes: report.nodes,
        },
    };
    write_json(&output.join("policy.json"), &file)?;

    let mut csv = CsvOut::new(&scenario, "none", mode.name());
    csv.record(["mode", "r_sbs", "r_mbs", "r_cache", "w", "w_normalized", "mbs_fraction"])?;
    let l = file.loads;
    csv.record([
        mode.name().to_string(),
        num(l.r_sbs),
        num(l.r_mbs),
        num(l.r_cache),
        num(l.w),
        num(l.w_normalized),
        num(l.mbs_fraction()),
    ])?;
    csv.write_to(&output.join("loads.csv"))?;

    println!("{}: normalized load {:.6}", mode.name(), l.w_normalized);
    if let SolverStatus::Feasible { gap } = file.solver.status {
        warn!("solver stopped with relative gap {gap:.3e}");
        return Ok(Outcome::GapWarning);
    }
    Ok(Outcome::Done)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    mut scenario: Scenario,
    policy_path: &Path,
    update_mode: Option<UpdateArg>,
    seed: Option<u64>,
    replications: Option<usize>,
    horizon: Option<f64>,
    output: &Path,
) -> Result<Outcome> {
    if let Some(u) = update_mode {
        scenario.simulation.update_mode = match u {
            UpdateArg::Sync => UpdateMode::Synchronous,
            UpdateArg::Async => UpdateMode::Asynchronous,
        };
    }
    if let Some(s) = seed {
        scenario.simulation.seed = s;
    }
    if let Some(r) = replications {
        scenario.simulation.replications = r;
    }
    if horizon.is_some() {
        scenario.simulation.horizon = horizon;
    }
    scenario.validate().map_err(config_err)?;
    let file = read_policy(policy_path).map_err(config_err)?;
    let model = scenario.build().map_err(classify)?;
    file.policy
        .validate_structure(model.catalog.n_files(), model.grid.n_slots())
        .map_err(|e| config_err(format!("{}: {e}", policy_path.display())))?;
    let config = scenario.sim_config(&model, file.policy.clone()).map_err(classify)?;
    let seeds = scenario.replication_seeds();
    let runs = run_replications(&config, &seeds).map_err(classify)?;
    let summary = summarize(&runs).context("no replications")?;
    let exact = evaluate_loads(&file.policy, &model.tables, &model.coverage, &model.costs, &model.catalog)
        .map_err(classify)?;
    prepare_output(output)?;

    let seed_list = format!("{}..={}", seeds[0], seeds[seeds.len() - 1]);
    let update = match config.update_mode {
        UpdateMode::Synchronous => "synchronous",
        UpdateMode::Asynchronous => "asynchronous",
    };
    let mut csv = CsvOut::new(&scenario, &seed_list, &file.mode);
    csv.note("update_mode", update);
    csv.note("policy_scenario_hash", file.scenario_hash.clone());
    csv.note("horizon_hours", num(config.horizon));
    csv.note("warmup_hours", num(config.warmup));
    csv.note("w_normalized_hw", "95% half-width: batch means per replication, across replications for the mean row");
    csv.record([
        "kind", "seed", "requests", "r_sbs", "r_mbs", "r_cache", "w", "w_normalized", "w_normalized_hw", "mbs_fraction",
    ])?;
    for r in &runs {
        let l = r.loads;
        csv.record([
            "replication".to_string(),
            r.seed.to_string(),
            r.requests.to_string(),
            num(l.r_sbs),
            num(l.r_mbs),
            num(l.r_cache),
            num(l.w),
            num(l.w_normalized),
            num(r.half_widths.w_normalized),
            num(l.mbs_fraction()),
        ])?;
    }
    let m = summary.mean;
    let total_requests: u64 = runs.iter().map(|r| r.requests).sum();
    csv.record([
        "mean".to_string(),
        String::new(),
        total_requests.to_string(),
        num(m.r_sbs),
        num(m.r_mbs),
        num(m.r_cache),
        num(m.w),
        num(m.w_normalized),
        num(summary.half_widths.w_normalized),
        num(m.mbs_fraction()),
    ])?;
    csv.record([
        "analytical".to_string(),
        String::new(),
        String::new(),
        num(exact.r_sbs),
        num(exact.r_mbs),
        num(exact.r_cache),
        num(exact.w),
        num(exact.w_normalized),
        String::new(),
        num(exact.mbs_fraction()),
    ])?;
    csv.write_to(&output.join("results.csv"))?;
    println!(
        "simulated normalized load {:.6} +- {:.6} ({} replications), analytical {:.6}",
        m.w_normalized,
        summary.half_widths.w_normalized,
        runs.len(),
        exact.w_normalized
    );
    Ok(Outcome::Done)
}

fn cmd_figure(
    mut scenario: Scenario,
    figure: FigureId,
    values: Option<Vec<f64>>,
    seed: Option<u64>,
    gap_tol: Option<f64>,
    output: &Path,
) -> Result<Outcome> {
    if let Some(s) = seed {
        scenario.simulation.seed = s;
    }
    if let Some(g) = gap_tol {
        scenario.solver.gap_tol = g;
    }
    scenario.validate().map_err(config_err)?;
    let mut values = values.unwrap_or_else(|| sweep_values(&scenario, figure));
    values.sort_by(f64::total_cmp);
    values.dedup();
    for &v in &values {
        scenario
            .with_parameter(figure.parameter(), v)
            .and_then(|s| s.build())
            .map_err(config_err)?;
    }
    let data = run_figure(&scenario, figure, &values).map_err(classify)?;
    prepare_output(output)?;

    let simulated = figure.series().iter().any(|s| s.simulate.is_some());
    let seeds = if simulated {
        let s = scenario.replication_seeds();
        format!("{}..={}", s[0], s[s.len() - 1])
    } else {
        "none".to_string()
    };
    let modes: Vec<&str> = figure.series().iter().map(|s| s.mode.name()).collect::<Vec<_>>();
    let mut modes_dedup = modes.clone();
    modes_dedup.dedup();
    let mut csv = CsvOut::new(&scenario, &seeds, &modes_dedup.join(","));
    csv.note("figure", figure.name());
    csv.note("x", data.x_name.clone());
    for s in figure.series() {
        let mut what = format!("normalized load of the optimal {} policy", s.mode.name());
        for (p, v) in &s.overrides {
            what.push_str(&format!(", {} = {v}", p.name()));
        }
        if let Some(u) = s.simulate {
            what.push_str(&format!(
                ", simulated with {} updates (mean of {} replications; `_hw` is the 95% half-width)",
                match u {
                    UpdateMode::Synchronous => "synchronous",
                    UpdateMode::Asynchronous => "asynchronous",
                },
                scenario.simulation.replications
            ));
        }
        csv.note(&format!("column {}", s.name), what);
    }
    let mut head = vec![data.x_name.clone()];
    head.extend(data.columns.iter().cloned());
    csv.record(&head)?;
    for row in &data.rows {
        let mut rec = vec![num(row.x)];
        rec.extend(row.values.iter().map(|v| num(*v)));
        csv.record(&rec)?;
    }
    let path = output.join(format!("{}.csv", figure.name()));
    csv.write_to(&path)?;
    println!("wrote {} ({} points)", path.display(), data.rows.len());
    if data.has_warnings() {
        for w in data.rows.iter().flat_map(|r| &r.warnings) {
            warn!("{w}");
        }
        return Ok(Outcome::GapWarning);
    }
    Ok(Outcome::Done)
}

struct Checks {
    failed: usize,
}

impl Checks {
    fn report(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn cmd_validate(mut scenario: Scenario, simulate: bool, seed: Option<u64>) -> Result<Outcome> {
    if let Some(s) = seed {
        scenario.simulation.seed = s;
    }
    let model = scenario.build().map_err(classify)?;
    let mut checks = Checks { failed: 0 };

    let t = &model.tables;
    let mut f_err: f64 = 0.0;
    let mut a_err: f64 = 0.0;
    for (i, d) in model.catalog.distributions().iter().enumerate() {
        f_err = f_err.max((t.f[i].iter().sum::<f64>() - 1.0).abs());
        a_err = a_err.max((t.a[i].iter().sum::<f64>() - d.mean()).abs() / d.mean());
    }
    checks.report(
        "demand tables",
        f_err < 1e-10 && a_err < 1e-7,
        format!("max |sum F - 1| {f_err:.1e}, max relative |sum A - mean| {a_err:.1e}"),
    );
    checks.report(
        "hazard ratio non-increasing",
        t.hazard_monotone(),
        format!("{} files, {} slots", t.n_files(), t.n_slots()),
    );

    let cov = &model.coverage;
    let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let g: Vec<f64> = grid.iter().map(|&m| cov.utility(m).unwrap_or(f64::NAN)).collect();
    let monotone = g.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let concave = g.windows(3).all(|w| w[1] >= 0.5 * (w[0] + w[2]) - 1e-12);
    checks.report(
        "utility monotone and concave",
        monotone && concave,
        format!("g(1) = {:.6}, mean coverage {:.4}", g[1000], cov.mean()),
    );
    if let CoverageSource::PoissonPpp { lambda, .. } = cov.source() {
        let worst = grid
            .iter()
            .zip(&g)
            .map(|(&m, &gm)| (utility_poisson_closed_form(lambda, m).unwrap_or(f64::NAN) - gm).abs())
            .fold(0.0, f64::max);
        checks.report(
            "Poisson closed form",
            worst < 1e-9,
            format!("lambda {lambda:.4}, max difference {worst:.1e}"),
        );
    }

    let inst = model.instance().map_err(classify)?;
    let planner = scenario.planner().map_err(classify)?;
    let mut w = Vec::new();
    let mut sttl_policy = None;
    for mode in CachingMode::ALL {
        let r = planner.solve(&inst, mode).map_err(classify)?;
        let valid = r.policy.validate(&model.tables, &model.catalog, model.capacity);
        let gap = match r.solver_status {
            SolverStatus::Feasible { gap } => gap,
            _ => 0.0,
        };
        checks.report(
            &format!("{mode} policy"),
            valid.is_ok(),
            format!(
                "normalized load {:.6}, gap {gap:.1e}{}",
                r.loads.w_normalized,
                valid.err().map(|e| format!(", {e}")).unwrap_or_default()
            ),
        );
        if mode == CachingMode::Sttl {
            sttl_policy = Some(r.policy.clone());
        }
        w.push((mode, r.loads.w, gap));
    }
    let get = |m: CachingMode| *w.iter().find(|x| x.0 == m).expect("every mode solved");
    let ordered = |a: CachingMode, b: CachingMode| {
        let (x, y) = (get(a), get(b));
        x.1 <= y.1 + (1e-6 + x.2 + y.2) * y.1.abs().max(1e-12)
    };
    checks.report(
        "mode ordering",
        ordered(CachingMode::Sttl, CachingMode::Fttl)
            && ordered(CachingMode::Fttl, CachingMode::Ttl)
            && ordered(CachingMode::Sttl, CachingMode::Static),
        "sttl <= fttl <= ttl and sttl <= static".into(),
    );

    let sttl_policy = sttl_policy.expect("sttl solved");
    let sizes = scenario
        .catalog
        .sizes
        .clone()
        .unwrap_or_else(|| vec![scenario.catalog.file_size; scenario.catalog.n_files]);
    let codes = code_table(&sttl_policy, &scenario, &sizes)?;
    let cached = codes.iter().filter(|c| c.k > 0).count();
    let max_k = codes.iter().map(|c| c.k).max().unwrap_or(0);
    let counts_ok = codes
        .iter()
        .all(|c| c.per_slot_counts.windows(2).all(|w| w[1] <= w[0]) && c.n == scenario.coverage.n_sbs as u64 * c.per_slot_counts[0]);
    checks.report(
        "code parameters",
        counts_ok,
        format!("{cached} cached files, largest k {max_k}"),
    );

    if simulate {
        let config = scenario.sim_config(&model, sttl_policy).map_err(classify)?;
        let mut config = config;
        config.update_mode = UpdateMode::Synchronous;
        let r = ttlcache_core::simulator::run(&config).map_err(classify)?;
        let exact = get(CachingMode::Sttl).1 / model.catalog.aggregate_rate();
        // three 95% half-widths keep false alarms well below one in a hundred
        let diff = (r.loads.w_normalized - exact).abs();
        checks.report(
            "synchronous simulation",
            diff <= 3.0 * r.half_widths.w_normalized,
            format!(
                "empirical {:.6} +- {:.6}, analytical {exact:.6} ({:.2}% off), {} requests",
                r.loads.w_normalized,
                r.half_widths.w_normalized,
                100.0 * diff / exact.abs().max(1e-12),
                r.requests
            ),
        );
    }

    if checks.failed > 0 {
        println!("{} checks failed", checks.failed);
        return Ok(Outcome::ValidationFailed);
    }
    Ok(Outcome::Done)
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!(ConfigError("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Optimize {
            scenario,
            mode,
            output,
            gap_tol,
            export_mps,
        } => cmd_optimize(load_scenario(&scenario)?, mode, &output, gap_tol, export_mps.as_deref()),
        Command::Simulate {
            scenario,
            policy,
            update_mode,
            seed,
            replications,
            horizon,
            output,
        } => cmd_simulate(
            load_scenario(&scenario)?,
            &policy,
            update_mode,
            seed,
            replications,
            horizon,
            &output,
        ),
        Command::Figure {
            figure,
            scenario,
            values,
            seed,
            gap_tol,
            output,
        } => cmd_figure(load_scenario(&scenario)?, figure, values, seed, gap_tol, &output),
        Command::Validate {
            scenario,
            simulate,
            seed,
        } => cmd_validate(load_scenario(&scenario)?, simulate, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::GapWarning) => ExitCode::from(EXIT_GAP),
        Ok(Outcome::ValidationFailed) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_INTERNAL)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use ttlcache_core::planner::Formulation;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn formulation_names_parse() {
        let s = Scenario::from_toml_str("[solver]\nformulation = \"epigraph\"\n").unwrap();
        assert_eq!(s.solver.formulation, Formulation::Epigraph);
    }
}
