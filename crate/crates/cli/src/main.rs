use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use xitree::bridges::sample_flow;
use xitree::checks::{run_check, xi_config, CheckName, CheckParams};
use xitree::lookdown::{sample_stationary_ultrametric, write_events_csv, write_snapshots_csv, Initial, LookdownPath};
use xitree::rng::{replicate_rng, run_replicates};
use xitree::stats::Header;
use xitree::treespace::{DistanceMatrix, MarkedMatrix};
use xitree::xi::{load_xi, RateTable, Visibility, XiSpec};
use xitree::Error;

/// Simulate and check exchangeable coalescent genealogies.
#[derive(Parser, Debug)]
#[command(name = "xitree", version)]
struct Cli {
    /// Worker threads for replicate-level parallelism (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Measure file (`kingman_mass`, `atoms`).
    #[arg(long)]
    xi: PathBuf,
    /// Seed of the run; required.
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "XITREE_OUT_DIR", default_value = "xitree-out")]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Rho,
    Rv,
}

impl From<ModeArg> for Visibility {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rho => Visibility::Rho,
            ModeArg::Rv => Visibility::Rv,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the partition and semi-partition rate tables on [n].
    Rates {
        #[arg(long)]
        xi: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Sample stationary coalescent ultrametrics.
    Coalescent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Simulate one lookdown path from the all-zero state and dump its events and snapshots.
    Lookdown {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Rho)]
        mode: ModeArg,
        /// Number of equally spaced snapshot times in (0, t].
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
    },
    /// Sample a flow of bridges and dump its events and `F_{0,t}`.
    Bridges {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: f64,
        /// Evaluation points of the dumped bridge.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Run a named experiment and write its report.
    Check {
        /// rates | representation | generator | equilibrium | bridges | exchangeability | dust
        name: String,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n_perm: Option<usize>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        bias_constant: Option<f64>,
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

enum Failure {
    /// Bad input: configuration, arguments or an unsupported measure.
    Input(Error),
    /// A check ran and did not pass.
    Check(PathBuf),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(Error::Io(e))
    }
}

fn header(command: &str, xi: &XiSpec<f64>, mut config: BTreeMap<String, Value>, seed: u64) -> Vec<String> {
    config.insert("command".into(), json!(command));
    config.insert("xi".into(), xi_config(xi));
    Header::new(&config, seed).lines()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn rates(xi_path: &Path, n: usize) -> Result<(), Failure> {
    let xi = load_xi(xi_path)?;
    let table = RateTable::build(&xi, n)?;
    let mut config = BTreeMap::new();
    config.insert("command".into(), json!("rates"));
    config.insert("n".into(), json!(n));
    config.insert("xi".into(), xi_config(&xi));
    let head = Header::new(&config, 0);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "# {} {} config={}", head.tool, head.version, head.config_hash)?;
    writeln!(out, "# partition rates")?;
    writeln!(out, "partition,rate")?;
    for (pi, r) in table.partition_rates() {
        writeln!(out, "\"{pi}\",{r:?}")?;
    }
    writeln!(out, "# semi-partition rates")?;
    writeln!(out, "semipartition,rate")?;
    for (sigma, r) in table.semipartition_rates() {
        let value = r.finite().map_or("inf".to_string(), |x| format!("{x:?}"));
        writeln!(out, "\"{sigma}\",{value}")?;
    }
    Ok(())
}

fn coalescent(c: &Common, n: usize, reps: usize) -> Result<(), Failure> {
    let xi = load_xi(&c.xi)?;
    let mut config = BTreeMap::new();
    config.insert("n".into(), json!(n));
    config.insert("reps".into(), json!(reps));
    let head = header("coalescent", &xi, config, c.seed);
    let trees = run_replicates(c.seed, reps, |_, rng| sample_stationary_ultrametric(&xi, n, rng))
        .into_iter()
        .collect::<xitree::Result<Vec<_>>>()?;
    let path = c.out.join("coalescent.csv");
    let mut out = create(&c.out, "coalescent.csv")?;
    for line in &head {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "replicate,i,j,rho")?;
    for (r, rho) in trees.iter().enumerate() {
        for i in 0..n {
            for j in i + 1..n {
                writeln!(out, "{},{},{},{:?}", r + 1, i + 1, j + 1, rho.get(i, j))?;
            }
        }
    }
    out.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn lookdown(c: &Common, n: usize, t: f64, mode: Visibility, snapshots: usize) -> Result<(), Failure> {
    let xi = load_xi(&c.xi)?;
    let mut config = BTreeMap::new();
    config.insert("n".into(), json!(n));
    config.insert("t".into(), json!(t));
    config.insert("mode".into(), json!(mode));
    config.insert("snapshots".into(), json!(snapshots));
    let head = header("lookdown", &xi, config, c.seed);
    let initial = match mode {
        Visibility::Rho => Initial::Rho(DistanceMatrix::zeros(n)),
        Visibility::Rv => Initial::Rv(MarkedMatrix::new(DistanceMatrix::zeros(n), vec![0.0; n])?),
    };
    let mut rng = replicate_rng(c.seed, 0);
    let path = LookdownPath::simulate(&xi, initial, mode, t, &mut rng)?;
    let times: Vec<f64> = (1..=snapshots).map(|k| t * k as f64 / snapshots as f64).collect();
    let snaps: Vec<(f64, DistanceMatrix<f64>)> = times.iter().copied().zip(path.rho_at_times(&times)?).collect();
    write_events_csv(create(&c.out, "events.csv")?, &head, path.events())?;
    write_snapshots_csv(create(&c.out, "snapshots.csv")?, &head, &snaps)?;
    println!(
        "wrote {} and {} ({} events)",
        c.out.join("events.csv").display(),
        c.out.join("snapshots.csv").display(),
        path.events().len()
    );
    Ok(())
}

fn bridges(c: &Common, t: f64, resolution: usize) -> Result<(), Failure> {
    let xi = load_xi(&c.xi)?;
    let mut config = BTreeMap::new();
    config.insert("t".into(), json!(t));
    config.insert("resolution".into(), json!(resolution));
    let head = header("bridges", &xi, config, c.seed);
    let mut rng = replicate_rng(c.seed, 0);
    let flow = sample_flow(&xi, t, &mut rng)?;
    flow.write_csv(create(&c.out, "flow.csv")?, &head)?;
    let f = flow.bridge::<f64>(0.0, t)?;
    let mut out = create(&c.out, "bridge.csv")?;
    for line in &head {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "u,F")?;
    for (u, v) in f.sample_points(resolution) {
        writeln!(out, "{u:?},{v:?}")?;
    }
    out.flush()?;
    println!(
        "wrote {} and {} ({} events)",
        c.out.join("flow.csv").display(),
        c.out.join("bridge.csv").display(),
        flow.events().len()
    );
    Ok(())
}

fn check(name: &str, c: &Common, params: CheckParams) -> Result<(), Failure> {
    let name: CheckName = name.parse()?;
    let xi = load_xi(&c.xi)?;
    let report = run_check(name, &xi, &params, c.seed)?;
    fs::create_dir_all(&c.out)?;
    let json_path = c.out.join(format!("{name}_report.json"));
    fs::write(&json_path, report.to_json())?;
    report.write_estimates_csv(create(&c.out, &format!("{name}_estimates.csv"))?)?;
    print!("{}", report.summary());
    println!("report: {}", json_path.display());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check(json_path))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Rates { xi, n } => rates(&xi, n),
        Command::Coalescent { common, n, reps } => coalescent(&common, n, reps),
        Command::Lookdown {
            common,
            n,
            t,
            mode,
            snapshots,
        } => lookdown(&common, n, t, mode.into(), snapshots),
        Command::Bridges { common, t, resolution } => bridges(&common, t, resolution),
        Command::Check {
            name,
            common,
            n,
            t,
            reps,
            repetitions,
            alpha,
            n_perm,
            h,
            bias_constant,
            sample_size,
            k,
            mode,
        } => check(
            &name,
            &common,
            CheckParams {
                n,
                t,
                reps,
                repetitions,
                alpha,
                n_perm,
                h,
                bias_constant,
                sample_size,
                k,
                mode: mode.map(Into::into),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Check(path)) => {
            eprintln!("check failed; report at {}", path.display());
            ExitCode::from(1)
        }
    }
}
