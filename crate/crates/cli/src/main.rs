//! `seihrd`: run the θ-SEIHRD model from the command line.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seihrd::config::Emit;
use seihrd::ensemble::{curve_probes, histogram, report_probes, run_probes, summarize, Probe};
use seihrd::output;
use seihrd::{
    integrate_deterministic, EnsembleSummary, Error, IndicatorSeries, Model, RateScheme, RunConfig, Trajectory,
    Variable,
};

#[derive(Parser)]
#[command(name = "seihrd", version, about = "Stochastic θ-SEIHRD epidemic simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noise-free run with the constant contact rate.
    Deterministic(Common),
    /// Monte Carlo ensemble summarized at the report days.
    Ensemble(Common),
    /// Indicator series (cases, R_e, hospital load, attribution) of the noise-free run.
    Indicators(Common),
    /// Ensemble mean and quantile bands of the epidemic curves for every day.
    Curves(Common),
    /// Histogram of one variable across the ensemble at one day.
    Histogram {
        #[command(flatten)]
        common: Common,
        /// Variable name, e.g. I, D, cm, Re, Hos.
        #[arg(long, default_value = "I")]
        variable: String,
        #[arg(long, default_value_t = 69)]
        day: u32,
        /// Number of bins; defaults to the configured value.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        bins: Option<u32>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Exact,
    EulerMaruyama,
}

#[derive(Args)]
struct Common {
    /// Configuration file, or `default` for the bundled China parameters.
    #[arg(long, default_value = "default")]
    config: String,
    #[arg(long, env = "SEIHRD_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Volatility of the contact rate.
    #[arg(long)]
    sigma: Option<f64>,
    /// Mean-reversion speed of the contact rate.
    #[arg(long)]
    nu: Option<f64>,
    /// Long-term mean of the contact rate.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Comma-separated days since t0.
    #[arg(long, value_delimiter = ',')]
    report_days: Option<Vec<u32>>,
    /// Worst-case percentile, in (0, 1).
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
}

impl Common {
    fn load(&self) -> seihrd::Result<RunConfig> {
        let mut config = if self.config == "default" {
            RunConfig::bundled_default()
        } else {
            RunConfig::from_path(Path::new(&self.config))?
        };
        if let Some(dir) = &self.output_dir {
            config.output.dir = dir.clone();
        }
        if let Some(v) = self.sigma {
            config.cir.sigma = v;
        }
        if let Some(v) = self.nu {
            config.cir.nu = v;
        }
        if let Some(v) = self.mu {
            config.cir.mu = v;
        }
        if let Some(v) = self.paths {
            config.ensemble.paths = v as usize;
        }
        if let Some(v) = self.seed {
            config.ensemble.seed = v;
        }
        if let Some(v) = self.workers {
            config.ensemble.workers = Some(v as usize);
        }
        if let Some(v) = &self.report_days {
            config.ensemble.report_days = v.clone();
        }
        if let Some(v) = self.percentile {
            config.ensemble.percentile_ws = v;
        }
        if let Some(v) = self.scheme {
            config.ensemble.scheme = match v {
                Scheme::Exact => RateScheme::Exact,
                Scheme::EulerMaruyama => RateScheme::EulerMaruyama,
            };
        }
        config.validate()?;
        Ok(config)
    }
}

struct Run {
    config: RunConfig,
    model: Model,
    dir: PathBuf,
}

impl Run {
    fn start(common: &Common) -> seihrd::Result<Self> {
        let config = common.load()?;
        let model = config.build_model()?;
        let dir = config.output.dir.clone();
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        config.write(&dir.join("config.toml"))?;
        Ok(Run { config, model, dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn deterministic(&self) -> seihrd::Result<(Trajectory, IndicatorSeries)> {
        let grid = self.config.grid(&self.model)?;
        let traj = integrate_deterministic(&self.model, &grid, self.config.tolerances(&self.model))?;
        let ind = IndicatorSeries::compute(&traj, &self.model, &self.config.indicators)?;
        Ok((traj, ind))
    }

    fn write_indicators(&self, traj: &Trajectory, ind: &IndicatorSeries) -> seihrd::Result<()> {
        output::write_indicators(traj, ind, &self.path("indicators.csv"))?;
        output::write_daily(ind, &self.path("daily.csv"))
    }

    fn written(&self, names: &[&str]) {
        for name in names {
            eprintln!("wrote {}", self.path(name).display());
        }
    }
}

/// Writes a report to stdout; a closed pipe is not an error.
fn report(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn deterministic_table(run: &Run, traj: &Trajectory, ind: &IndicatorSeries) -> String {
    let days = &run.config.ensemble.report_days;
    let mut out = format!("{:<10}", "variable");
    for day in days {
        let _ = write!(out, "{:>16}", format!("t={day}"));
    }
    out.push('\n');
    for variable in Variable::table() {
        let _ = write!(out, "{:<10}", variable.name());
        for &day in days {
            let node = traj.grid().node_at(day as f64).expect("report day on grid");
            let value = match variable {
                Variable::Compartment(c) => traj.states()[node].get(c),
                Variable::CumulativeCases => ind.c_m[node],
                Variable::CumulativeDeaths => ind.d_m[node],
                Variable::ReproductionNumber => ind.r_e[node],
                Variable::Hospitalized => ind.hos[node],
                Variable::MaxHospitalized => ind.mhos[node],
                Variable::GammaE => ind.gamma_e[node],
                Variable::GammaIu => ind.gamma_iu[node],
                Variable::GammaH => ind.gamma_h[node],
                _ => f64::NAN,
            };
            let _ = write!(out, "{:>16}", output::format_value(value));
        }
        out.push('\n');
    }
    out
}

fn ensemble_table(summary: &EnsembleSummary, days: &[u32]) -> String {
    let ws = format!("WS({}%)", output::format_value(summary.percentile_ws * 100.0));
    let mut out = format!("{} paths; each cell is mean [q1, q3] {ws}\n", summary.samples);
    for &day in days {
        let _ = writeln!(out, "t={day}");
        for row in summary.rows.iter().filter(|r| r.day == day) {
            let _ = writeln!(
                out,
                "  {:<22}{:>12} [{}, {}] {}",
                row.variable.name(),
                output::format_value(row.mean),
                output::format_value(row.q1),
                output::format_value(row.q3),
                output::format_value(row.p_ws),
            );
        }
    }
    out
}

fn deterministic(run: &Run) -> seihrd::Result<()> {
    let (traj, ind) = run.deterministic()?;
    if run.config.emits(Emit::Trajectory) {
        output::write_trajectory(&traj, &run.path("trajectory.csv"))?;
        run.written(&["trajectory.csv"]);
    }
    if run.config.emits(Emit::Indicators) {
        run.write_indicators(&traj, &ind)?;
        run.written(&["indicators.csv", "daily.csv"]);
    }
    report(&deterministic_table(run, &traj, &ind));
    Ok(())
}

fn indicators(run: &Run) -> seihrd::Result<()> {
    let (traj, ind) = run.deterministic()?;
    run.write_indicators(&traj, &ind)?;
    run.written(&["indicators.csv", "daily.csv"]);
    report(&deterministic_table(run, &traj, &ind));
    Ok(())
}

fn ensemble(run: &Run) -> seihrd::Result<()> {
    let ec = run.config.ensemble_config(&run.model)?;
    let mut probes = report_probes(&ec);
    let reported = probes.len();
    let with_curves = run.config.emits(Emit::Curves);
    if with_curves {
        probes.extend(curve_probes(&ec));
    }
    let samples = run_probes(&run.model, &ec, &probes)?;
    let mut summary = summarize(&samples, ec.percentile_ws)?;
    let curves = summary.rows.split_off(reported);
    if run.config.emits(Emit::Summary) {
        output::write_summary(&summary, &run.path("summary.csv"))?;
        run.written(&["summary.csv"]);
    }
    if with_curves {
        let curves = EnsembleSummary { rows: curves, ..summary.clone() };
        output::write_summary(&curves, &run.path("curves.csv"))?;
        run.written(&["curves.csv"]);
    }
    if run.config.emits(Emit::Histograms) {
        for probe in &probes[..reported] {
            let name = histogram_name(probe);
            let xs = samples.get(probe.variable, probe.day).expect("probe was sampled");
            output::write_histogram(&histogram(xs, run.config.ensemble.histogram_bins)?, &run.path(&name))?;
        }
        eprintln!("wrote {reported} histograms to {}", run.dir.display());
    }
    report(&ensemble_table(&summary, &ec.report_times));
    Ok(())
}

fn curves(run: &Run) -> seihrd::Result<()> {
    let ec = run.config.ensemble_config(&run.model)?;
    let samples = run_probes(&run.model, &ec, &curve_probes(&ec))?;
    let summary = summarize(&samples, ec.percentile_ws)?;
    output::write_summary(&summary, &run.path("curves.csv"))?;
    run.written(&["curves.csv"]);
    let last = ec.grid.t_end().floor() as u32;
    let days: Vec<u32> = ec.report_times.iter().copied().chain([last]).collect();
    report(&ensemble_table(
        &EnsembleSummary {
            rows: summary.rows.iter().filter(|r| days.contains(&r.day)).copied().collect(),
            ..summary.clone()
        },
        &days,
    ));
    Ok(())
}

fn histogram_name(probe: &Probe) -> String {
    format!("histogram_{}_{}.csv", probe.variable.name(), probe.day)
}

fn histogram_command(run: &Run, variable: &str, day: u32, bins: Option<u32>) -> seihrd::Result<()> {
    let variable: Variable = variable.parse()?;
    let mut ec = run.config.ensemble_config(&run.model)?;
    ec.report_times = vec![day];
    ec.validate()?;
    let probe = Probe { variable, day };
    let samples = run_probes(&run.model, &ec, &[probe])?;
    let xs = samples.get(variable, day).expect("probe was sampled");
    let bins = bins.map_or(run.config.ensemble.histogram_bins, |b| b as usize);
    let hist = histogram(xs, bins)?;
    let name = histogram_name(&probe);
    output::write_histogram(&hist, &run.path(&name))?;
    run.written(&[name.as_str()]);
    let summary = summarize(&samples, ec.percentile_ws)?;
    let row = &summary.rows[0];
    let mut out = format!(
        "{}(t={day}) over {} paths: mean {} median {} [q1, q3] = [{}, {}] WS {}\n",
        variable.name(),
        summary.samples,
        output::format_value(row.mean),
        output::format_value(row.median),
        output::format_value(row.q1),
        output::format_value(row.q3),
        output::format_value(row.p_ws),
    );
    for (lo, hi, count) in hist.bins() {
        let _ = writeln!(out, "  [{}, {}] {count}", output::format_value(lo), output::format_value(hi));
    }
    report(&out);
    Ok(())
}

fn execute(command: &Command) -> seihrd::Result<()> {
    match command {
        Command::Deterministic(c) => deterministic(&Run::start(c)?),
        Command::Ensemble(c) => ensemble(&Run::start(c)?),
        Command::Indicators(c) => indicators(&Run::start(c)?),
        Command::Curves(c) => curves(&Run::start(c)?),
        Command::Histogram { common, variable, day, bins } => {
            histogram_command(&Run::start(common)?, variable, *day, *bins)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
