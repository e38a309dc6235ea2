//! Batch front end: every subcommand reads one TOML config and exchanges
//! artifacts through the configured output directory.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hedgepath::analysis::{calibration_sweep, match_in_graph, match_in_ne, pnl, write_sweep_csv};
use hedgepath::escape::{build_empirical_set, write_hull_csv, write_ne_csv};
use hedgepath::graph::{build, export, import, GraphNode, TrajectoryGraph};
use hedgepath::market_data::{
    discount, load_chart, simulate_gbm, windows, write_chart_csv, write_window_csv,
    DiscountedChart, DiscretizationParams,
};
use hedgepath::pruning::{build_tables, write_tables_csv};
use hedgepath::rational::round_to_grid;
use hedgepath::superhedge::{price, write_pricing_csv, Direction, Payoff, PricingResult, Traded};

use config::{LoadedConfig, RunConfig};

#[derive(Parser)]
#[command(name = "hedgepath", version, about = "Trajectory-model price bounds toolchain")]
struct Cli {
    /// TOML run configuration.
    #[arg(short, long, global = true, default_value = "hedgepath.toml")]
    config: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate and normalize the input chart; dump per-window grids.
    Ingest,
    /// Generate a synthetic chart from the [gbm] section.
    SimulateGbm,
    /// Sweep escape thresholds and report rebalance-count ranges.
    Calibrate,
    /// Build the increment set, pruning tables and trajectory graph.
    Build,
    /// Compute both price bounds and per-node hedges on the built graph.
    Price {
        /// Override [price].target (asset1 | asset2 | call | put).
        #[arg(long)]
        target: Option<String>,
        /// Override [price].trade (asset1 | asset2).
        #[arg(long)]
        trade: Option<String>,
        /// Override [price].strike.
        #[arg(long)]
        strike: Option<f64>,
    },
    /// Simulate hedged profit-and-loss over sampled trajectories.
    Pnl,
    /// Replay the most recent chart window through the built graph.
    Match,
    /// Re-emit the built graph as an adjacency JSON document.
    ExportGraph,
    /// Validate the configuration (or print its schema).
    Config {
        /// Print the documented configuration schema and exit.
        #[arg(long)]
        schema: bool,
    },
}

enum CliError {
    /// Exit code 2.
    Validation(String),
    /// Exit code 1.
    Degenerate(String),
}

impl From<String> for CliError {
    fn from(msg: String) -> Self {
        CliError::Validation(msg)
    }
}

fn core_err(e: hedgepath::Error) -> CliError {
    match e {
        hedgepath::Error::DegenerateRoot => CliError::Degenerate(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Degenerate(msg)) => {
            eprintln!("degenerate: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Cmd::Config { schema: true } = cli.cmd {
        print!("{}", config::SCHEMA);
        return Ok(());
    }
    let loaded = config::load(&cli.config)?;
    let ctx = Context::new(&loaded, &cli.cmd)?;
    match &cli.cmd {
        Cmd::Ingest => ingest(&ctx),
        Cmd::SimulateGbm => simulate(&ctx),
        Cmd::Calibrate => calibrate(&ctx),
        Cmd::Build => build_cmd(&ctx),
        Cmd::Price { target, trade, strike } => {
            price_cmd(&ctx, target.as_deref(), trade.as_deref(), *strike)
        }
        Cmd::Pnl => pnl_cmd(&ctx),
        Cmd::Match => match_cmd(&ctx),
        Cmd::ExportGraph => export_graph(&ctx),
        Cmd::Config { .. } => {
            println!("config ok (hash {})", ctx.hash);
            Ok(())
        }
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    hash: &'a str,
    provenance: String,
}

impl<'a> Context<'a> {
    fn new(loaded: &'a LoadedConfig, cmd: &Cmd) -> Result<Self, CliError> {
        let name = match cmd {
            Cmd::Ingest => "ingest",
            Cmd::SimulateGbm => "simulate-gbm",
            Cmd::Calibrate => "calibrate",
            Cmd::Build => "build",
            Cmd::Price { .. } => "price",
            Cmd::Pnl => "pnl",
            Cmd::Match => "match",
            Cmd::ExportGraph => "export-graph",
            Cmd::Config { .. } => "config",
        };
        if loaded.config.input.numeraire > 2 {
            return Err(CliError::Validation("input.numeraire: must be 0, 1 or 2".into()));
        }
        std::fs::create_dir_all(&loaded.config.output.dir)
            .map_err(|e| CliError::Validation(format!("output.dir: {e}")))?;
        Ok(Context {
            cfg: &loaded.config,
            hash: &loaded.hash,
            provenance: format!("config_hash={} cmd={name}", loaded.hash),
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output.dir.join(name)
    }

    fn provenance(&self) -> Option<&str> {
        Some(&self.provenance)
    }

    fn load_discounted(&self) -> Result<DiscountedChart, CliError> {
        let path = &self.cfg.input.chart;
        if !path.exists() {
            return Err(CliError::Validation(format!(
                "missing input file `{}`",
                path.display()
            )));
        }
        let grid = self.cfg.grid()?;
        let chart = load_chart(path, &self.cfg.schema(), &grid).map_err(core_err)?;
        discount(&chart, self.cfg.input.numeraire).map_err(core_err)
    }

    fn load_graph(&self) -> Result<TrajectoryGraph, CliError> {
        let nodes = self.out("nodes.csv");
        let edges = self.out("edges.csv");
        for p in [&nodes, &edges] {
            if !p.exists() {
                return Err(CliError::Validation(format!(
                    "missing input file `{}` (run `build` first)",
                    p.display()
                )));
            }
        }
        import(&nodes, &edges).map_err(core_err)
    }

    fn root_of(&self, chart: &DiscountedChart, disc: &DiscretizationParams) -> (i64, i64) {
        (
            round_to_grid(chart.x1.last().unwrap(), &disc.dhat1),
            round_to_grid(chart.x2.last().unwrap(), &disc.dhat2),
        )
    }
}

fn ingest(ctx: &Context) -> Result<(), CliError> {
    let path = &ctx.cfg.input.chart;
    if !path.exists() {
        return Err(CliError::Validation(format!("missing input file `{}`", path.display())));
    }
    let grid = ctx.cfg.grid()?;
    let disc = ctx.cfg.disc()?;
    let chart = load_chart(path, &ctx.cfg.schema(), &grid).map_err(core_err)?;
    write_chart_csv(&chart, &ctx.out("chart.csv"), ctx.provenance()).map_err(core_err)?;
    let discounted = discount(&chart, ctx.cfg.input.numeraire).map_err(core_err)?;
    let ws = windows(&discounted, &grid, &disc).map_err(core_err)?;
    let windows_dir = ctx.out("windows");
    std::fs::create_dir_all(&windows_dir).map_err(|e| CliError::Validation(e.to_string()))?;
    for (idx, w) in ws.iter().enumerate() {
        write_window_csv(
            w,
            &grid,
            &windows_dir.join(format!("window_{idx:03}.csv")),
            ctx.provenance(),
        )
        .map_err(core_err)?;
    }
    println!("{} samples, {} windows", chart.len(), ws.len());
    Ok(())
}

fn simulate(ctx: &Context) -> Result<(), CliError> {
    let grid = ctx.cfg.grid()?;
    let params = ctx.cfg.gbm_params()?;
    let chart = simulate_gbm(&params, &grid).map_err(core_err)?;
    let path = ctx.out("chart.csv");
    write_chart_csv(&chart, &path, ctx.provenance()).map_err(core_err)?;
    println!("wrote {} samples to {}", chart.len(), path.display());
    Ok(())
}

fn calibrate(ctx: &Context) -> Result<(), CliError> {
    let grid = ctx.cfg.grid()?;
    let disc = ctx.cfg.disc()?;
    let chart = ctx.load_discounted()?;
    let spec = ctx.cfg.sweep_spec()?;
    let cells = calibration_sweep(&chart, &grid, &disc, &spec).map_err(core_err)?;
    write_sweep_csv(&cells, &ctx.out("sweep.csv"), ctx.provenance()).map_err(core_err)?;
    for c in &cells {
        match c.delta1 {
            Some(d1) => println!("delta0={} delta1={d1}: N in [{}, {}]", c.delta0, c.n_lower, c.n_upper),
            None => println!("delta={}: N in [{}, {}]", c.delta0, c.n_lower, c.n_upper),
        }
    }
    Ok(())
}

fn build_cmd(ctx: &Context) -> Result<(), CliError> {
    let grid = ctx.cfg.grid()?;
    let disc = ctx.cfg.disc()?;
    let params = ctx.cfg.escape_params()?;
    let chart = ctx.load_discounted()?;
    let ne = build_empirical_set(&chart, &grid, &params, &disc).map_err(core_err)?;
    write_ne_csv(&ne, &ctx.out("ne.csv"), ctx.provenance()).map_err(core_err)?;
    write_hull_csv(&ne, &ctx.out("hull.csv"), ctx.provenance()).map_err(core_err)?;
    let tables = if ctx.cfg.build.use_tables {
        let tables = build_tables(&chart, &grid, &params, &disc).map_err(core_err)?;
        let dir = ctx.out("tables");
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Validation(e.to_string()))?;
        write_tables_csv(&tables, &dir, ctx.provenance()).map_err(core_err)?;
        Some(tables)
    } else {
        None
    };
    let root = ctx.root_of(&chart, &disc);
    let graph = build(root, &ne, tables.as_ref(), &disc, &ctx.cfg.build_options())
        .map_err(core_err)?;
    export(
        &graph,
        &ctx.out("nodes.csv"),
        &ctx.out("edges.csv"),
        Some(&ctx.out("adjacency.json")),
        ctx.provenance(),
    )
    .map_err(core_err)?;
    println!(
        "increments={} nodes={} edges={} root=({}, {})",
        ne.increments.len(),
        graph.len(),
        graph.edge_count(),
        root.0,
        root.1
    );
    if graph.degenerate {
        return Err(CliError::Degenerate("root has no admissible children".into()));
    }
    Ok(())
}

fn payoff_from(
    target: &str,
    strike: f64,
    disc: &DiscretizationParams,
) -> Result<Payoff, CliError> {
    let step2 = disc.dhat2_f;
    Ok(match target {
        "asset1" => Payoff::Asset1,
        "asset2" => Payoff::Asset2,
        "call" => Payoff::Node(Box::new(move |n: &GraphNode| {
            (n.k2 as f64 * step2 - strike).max(0.0)
        })),
        "put" => Payoff::Node(Box::new(move |n: &GraphNode| {
            (strike - n.k2 as f64 * step2).max(0.0)
        })),
        other => {
            return Err(CliError::Validation(format!(
                "price.target: unknown target `{other}`"
            )))
        }
    })
}

fn traded_from(trade: &str) -> Result<Traded, CliError> {
    match trade {
        "asset1" => Ok(Traded::Asset1),
        "asset2" => Ok(Traded::Asset2),
        other => Err(CliError::Validation(format!("price.trade: unknown asset `{other}`"))),
    }
}

fn price_pair(
    ctx: &Context,
    target: Option<&str>,
    trade: Option<&str>,
    strike: Option<f64>,
) -> Result<(TrajectoryGraph, PricingResult, PricingResult), CliError> {
    let disc = ctx.cfg.disc()?;
    let graph = ctx.load_graph()?;
    let target = target.unwrap_or(&ctx.cfg.price.target);
    let trade = trade.unwrap_or(&ctx.cfg.price.trade);
    let strike = strike.unwrap_or(ctx.cfg.price.strike);
    let traded = traded_from(trade)?;
    let payoff = payoff_from(target, strike, &disc)?;
    let sup = price(&graph, &payoff, &disc, traded, Direction::Super).map_err(core_err)?;
    let sub = price(&graph, &payoff, &disc, traded, Direction::Under).map_err(core_err)?;
    Ok((graph, sup, sub))
}

fn price_cmd(
    ctx: &Context,
    target: Option<&str>,
    trade: Option<&str>,
    strike: Option<f64>,
) -> Result<(), CliError> {
    let disc = ctx.cfg.disc()?;
    let (graph, sup, sub) = price_pair(ctx, target, trade, strike)?;
    write_pricing_csv(&graph, &sup, &sub, &ctx.out("pricing.csv"), ctx.provenance())
        .map_err(core_err)?;
    let root = &graph.nodes[graph.root];
    let bounds = serde_json::json!({
        "config_hash": ctx.hash,
        "root": { "k1": root.k1, "k2": root.k2 },
        "x1_0": root.k1 as f64 * disc.dhat1_f,
        "x2_0": root.k2 as f64 * disc.dhat2_f,
        "upper": sup.root_value,
        "lower": sub.root_value,
    });
    write_json(&ctx.out("bounds.json"), &bounds)?;
    match (sup.root_value, sub.root_value) {
        (Some(hi), Some(lo)) => {
            println!("lower={lo} upper={hi}");
            Ok(())
        }
        _ => Err(CliError::Degenerate("no finite price bound at the root".into())),
    }
}

fn pnl_cmd(ctx: &Context) -> Result<(), CliError> {
    let disc = ctx.cfg.disc()?;
    let (graph, sup, sub) = price_pair(ctx, None, None, None)?;
    let payoff = payoff_from(&ctx.cfg.price.target, ctx.cfg.price.strike, &disc)?;
    let capital = match &ctx.cfg.pnl.capital {
        toml::Value::String(s) if s == "upper" => sup
            .root_value
            .ok_or_else(|| CliError::Degenerate("no upper bound to start from".into()))?,
        toml::Value::String(s) if s == "lower" => sub
            .root_value
            .ok_or_else(|| CliError::Degenerate("no lower bound to start from".into()))?,
        toml::Value::Float(v) => *v,
        toml::Value::Integer(v) => *v as f64,
        other => {
            return Err(CliError::Validation(format!(
                "pnl.capital: expected \"upper\", \"lower\" or a number, got {other}"
            )))
        }
    } + ctx.cfg.pnl.offset;
    let report = pnl(
        &graph,
        &sup,
        &payoff,
        &disc,
        capital,
        ctx.cfg.pnl.samples,
        ctx.cfg.pnl.seed,
        ctx.cfg.pnl.epsilon,
    )
    .map_err(core_err)?;
    let json = serde_json::json!({
        "config_hash": ctx.hash,
        "capital": report.capital,
        "epsilon": report.epsilon,
        "samples": report.samples,
        "excluded_null": report.excluded_null,
        "percent_profitable": report.percent_profitable,
    });
    write_json(&ctx.out("pnl.json"), &json)?;
    let mut hist = String::new();
    hist.push_str(&format!("# {}\n", ctx.provenance));
    hist.push_str("bin_lo,bin_hi,count\n");
    for (j, count) in report.bin_counts.iter().enumerate() {
        hist.push_str(&format!(
            "{},{},{count}\n",
            report.bin_edges[j],
            report.bin_edges[j + 1]
        ));
    }
    std::fs::write(ctx.out("pnl_hist.csv"), hist)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!(
        "capital={} profitable={}% ({} samples, {} null-path exclusions)",
        report.capital, report.percent_profitable, report.samples, report.excluded_null
    );
    Ok(())
}

fn match_cmd(ctx: &Context) -> Result<(), CliError> {
    let grid = ctx.cfg.grid()?;
    let disc = ctx.cfg.disc()?;
    let params = ctx.cfg.escape_params()?;
    let chart = ctx.load_discounted()?;
    let graph = ctx.load_graph()?;
    let ws = windows(&chart, &grid, &disc).map_err(core_err)?;
    let window = ws.last().unwrap();
    let graph_match = match_in_graph(&graph, window, &params).map_err(core_err)?;
    let ne = build_empirical_set(&chart, &grid, &params, &disc).map_err(core_err)?;
    let set_match = match_in_ne(&ne, window, &params).map_err(core_err)?;
    let json = serde_json::json!({
        "config_hash": ctx.hash,
        "graph": {
            "path": graph_match.path,
            "per_step": graph_match.per_step,
            "total": graph_match.total,
        },
        "increment_set": {
            "per_step": set_match.per_step,
            "total": set_match.total,
        },
    });
    write_json(&ctx.out("match.json"), &json)?;
    println!(
        "graph match total={} over {} steps; set match total={}",
        graph_match.total,
        graph_match.per_step.len(),
        set_match.total
    );
    Ok(())
}

fn export_graph(ctx: &Context) -> Result<(), CliError> {
    let graph = ctx.load_graph()?;
    export(
        &graph,
        &ctx.out("nodes.csv"),
        &ctx.out("edges.csv"),
        Some(&ctx.out("adjacency.json")),
        ctx.provenance(),
    )
    .map_err(core_err)?;
    println!("nodes={} edges={}", graph.len(), graph.edge_count());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Validation(e.to_string()))
}
