use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ris_nulling::config::{key_help, ExperimentConfig};
use ris_nulling::residual_net::{read_dataset_csv, train, write_dataset_csv, ResidualNetwork};
use ris_nulling::resnet_sa::{
    generate_dataset, run_comparison, theoretical_sa, true_pattern_sa, ExperimentResult, MismatchScenario,
};
use ris_nulling::weights::WeightVector;
use ris_nulling::{Error, Result};

/// Sidelobe nulling for a paraboloidal reflector with a reconfigurable rim.
#[derive(Parser, Debug)]
#[command(name = "ris-nulling", version)]
struct Cli {
    /// TOML experiment config; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set sa.seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads; 1 gives the canonical output. 0 uses all cores.
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the element layout.
    Geometry,
    /// Sweep the H-plane gain.
    Pattern {
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
        /// `uniform` or a weights file written by `sa` or `resnet-sa`.
        #[arg(long, default_value = "uniform")]
        weights: String,
    },
    /// Anneal the gain at the target on one pattern.
    Sa {
        #[arg(long, value_enum, default_value_t = Pattern::Theoretical)]
        pattern: Pattern,
    },
    /// Record theoretical-pattern annealing trajectories as training data.
    Dataset,
    /// Train the residual network on a dataset.
    Train {
        /// Defaults to `<output.dir>/dataset.csv`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Compare theoretical SA with ResNet-SA using a trained model.
    ResnetSa {
        /// Defaults to `<output.dir>/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// dataset, train, resnet-sa and pattern sweeps in one run.
    Full,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Which {
    Theoretical,
    True,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Pattern {
    Theoretical,
    True,
}

struct Run {
    config: ExperimentConfig,
    out: PathBuf,
    header: Vec<String>,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn scenario(&self) -> Result<MismatchScenario> {
        let scenario = self.config.scenario()?;
        let target = scenario.target();
        for model in [scenario.theoretical_model(), scenario.true_model()] {
            let change = model.check_convergence(target)?;
            log::info!("quadrature change under 2x refinement at the target: {change:.2e} dB");
        }
        Ok(scenario)
    }

    fn write_weights(&self, name: &str, w: &WeightVector, what: &str) -> Result<()> {
        let mut f = self.create(name)?;
        self.write_header(&mut f)?;
        writeln!(f, "# {what}; one base-M digit per element")?;
        writeln!(f, "{}", w.to_base_m_string())?;
        Ok(f.flush()?)
    }

    fn write_header(&self, f: &mut impl Write) -> Result<()> {
        for line in &self.header {
            writeln!(f, "# {line}")?;
        }
        Ok(())
    }
}

fn read_weights(path: &Path, m_levels: usize) -> Result<WeightVector> {
    let text = std::fs::read_to_string(path)?;
    let (line, digits) = text
        .lines()
        .enumerate()
        .find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: text.lines().count().max(1),
            message: "no weight vector found".into(),
        })?;
    WeightVector::from_base_m_string(digits.trim(), m_levels).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: line + 1,
        message: e.to_string(),
    })
}

fn geometry(run: &Run) -> Result<()> {
    let g = run.config.geometry()?;
    let mut f = run.create("geometry.csv")?;
    run.write_header(&mut f)?;
    writeln!(f, "index,ring,azimuth,x_m,y_m,z_m,area_m2")?;
    for (i, e) in g.elements.iter().enumerate() {
        let p = e.position;
        writeln!(
            f,
            "{i},{},{},{},{},{},{}",
            e.ring_index, e.azimuth_index, p.x, p.y, p.z, e.area_m2
        )?;
    }
    f.flush()?;
    println!(
        "elements {} in rings {:?}; focal length {:.4} m; rim feed angles {:.3}..{:.3} deg; element side {:.4} m",
        g.element_count(),
        g.ring_counts,
        g.focal_length_m,
        g.theta1_rad.to_degrees(),
        g.theta0_rad.to_degrees(),
        g.element_side_m,
    );
    Ok(())
}

fn pattern_files(run: &Run, scenario: &MismatchScenario, w: &WeightVector, label: &str, which: Which) -> Result<()> {
    let grid_deg = run.config.psi_grid_deg();
    let grid: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let phi = run
        .config
        .pattern
        .phi_deg
        .to_radians()
        .rem_euclid(std::f64::consts::TAU);
    let models = [
        (Which::Theoretical, "theoretical", scenario.theoretical_model()),
        (Which::True, "true", scenario.true_model()),
    ];
    for (kind, name, model) in models {
        if which != Which::Both && which != kind {
            continue;
        }
        let sweep = model.pattern_sweep(w, &grid, phi)?;
        let mut f = run.create(&format!("pattern_{name}_{label}.csv"))?;
        run.write_header(&mut f)?;
        writeln!(f, "# q={} weights={label}", model.feed().q_exponent)?;
        writeln!(f, "psi_deg,gain_dbi")?;
        for (psi_deg, (_, gain)) in grid_deg.iter().zip(sweep) {
            writeln!(f, "{psi_deg},{gain}")?;
        }
        f.flush()?;
    }
    Ok(())
}

fn pattern(run: &Run, which: Which, weights: &str) -> Result<()> {
    let scenario = run.config.scenario()?;
    let (w, label) = if weights == "uniform" {
        (
            WeightVector::uniform(scenario.n_elements(), run.config.sa.m_levels)?,
            "uniform".to_string(),
        )
    } else {
        let path = Path::new(weights);
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        (read_weights(path, run.config.sa.m_levels)?, label)
    };
    if w.len() != scenario.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: scenario.n_elements(),
            got: w.len(),
        });
    }
    pattern_files(run, &scenario, &w, &label, which)
}

fn sa(run: &Run, pattern: Pattern) -> Result<()> {
    let scenario = run.scenario()?;
    let cfg = run.config.sa_config();
    let (outcome, name) = match pattern {
        Pattern::Theoretical => (theoretical_sa(&scenario, &cfg)?, "sa"),
        Pattern::True => (true_pattern_sa(&scenario, &cfg)?, "sa_true"),
    };
    let mut f = run.create(&format!("{name}_trajectory.csv"))?;
    outcome.trajectory.write_csv(&mut f, &run.header)?;
    f.flush()?;
    run.write_weights(
        &format!("weights_{name}.txt"),
        &outcome.best,
        "lowest-objective weights",
    )?;
    let depth = scenario.evaluate_null_depth(&outcome.best)?;
    println!(
        "{name}: gain at target {:.3} dBi theoretical, {:.3} dBi true",
        depth.theoretical_db, depth.true_db
    );
    Ok(())
}

fn dataset(run: &Run, scenario: &MismatchScenario) -> Result<usize> {
    let c = &run.config;
    let data = generate_dataset(scenario, &c.dataset_sa_config(), c.dataset.trajectories, &c.noise())?;
    let mut f = run.create("dataset.csv")?;
    write_dataset_csv(&mut f, &data, &run.header)?;
    f.flush()?;
    log::info!("dataset: {} samples", data.len());
    Ok(data.len())
}

fn train_model(run: &Run, dataset_path: &Path) -> Result<(ResidualNetwork, f64, usize)> {
    let c = &run.config;
    let reader = BufReader::new(File::open(dataset_path)?);
    let data = read_dataset_csv(reader, c.sa.m_levels, &dataset_path.display().to_string())?;
    let n = data
        .first()
        .map(|s| s.weights.len())
        .ok_or_else(|| Error::InvalidTraining("empty dataset".into()))?;
    let net = ResidualNetwork::new(n, c.sa.m_levels, c.net_config(), c.net.seed)?;
    let (net, report) = train(net, &data, &c.train_config())?;
    net.save(&run.path("model.json"))?;
    let mut f = run.create("training_history.csv")?;
    run.write_header(&mut f)?;
    writeln!(f, "epoch,learning_rate,train_mse_db2,validation_mse_db2")?;
    for h in &report.history {
        writeln!(
            f,
            "{},{},{},{}",
            h.epoch + 1,
            h.learning_rate,
            h.train_loss,
            h.validation_loss
        )?;
    }
    f.flush()?;
    println!(
        "trained on {} samples, validation MSE {:.4} dB^2 over {} samples",
        report.train_samples, report.final_validation_mse, report.validation_samples
    );
    Ok((net, report.final_validation_mse, data.len()))
}

fn write_comparison(run: &Run, scenario: &MismatchScenario, r: &ExperimentResult) -> Result<()> {
    for (name, trace) in [("sa_gains.csv", &r.sa_trace), ("resnet_sa.csv", &r.resnet_trace)] {
        let mut f = run.create(name)?;
        trace.write_csv(&mut f, &run.header)?;
        f.flush()?;
    }
    run.write_weights("weights_sa.txt", &r.sa_weights, "theoretical SA weights")?;
    run.write_weights("weights_resnet_sa.txt", &r.resnet_weights, "ResNet-SA weights")?;
    let uniform = scenario.evaluate_null_depth(&WeightVector::uniform(scenario.n_elements(), scenario.m_levels())?)?;
    println!(
        "uniform {:.2}/{:.2} dBi, SA {:.2}/{:.2} dBi, ResNet-SA {:.2}/{:.2} dBi (theoretical/true); improvement {:.2} dB",
        uniform.theoretical_db,
        uniform.true_db,
        r.sa_depth.theoretical_db,
        r.sa_depth.true_db,
        r.resnet_depth.theoretical_db,
        r.resnet_depth.true_db,
        r.improvement_db()
    );
    Ok(())
}

fn summary(
    run: &Run,
    scenario: &MismatchScenario,
    r: &ExperimentResult,
    dataset_samples: Option<usize>,
    validation_mse: Option<f64>,
) -> Result<()> {
    let c = &run.config;
    let uniform = scenario.evaluate_null_depth(&WeightVector::uniform(scenario.n_elements(), scenario.m_levels())?)?;
    let value = json!({
        "format": "ris-nulling-summary",
        "version": 1,
        "config_sha256": c.hash(),
        "config": c,
        "seeds": {
            "sa": c.sa.seed,
            "dataset": c.dataset.seed,
            "noise": c.dataset.noise_seed,
            "net": c.net.seed,
        },
        "n_elements": scenario.n_elements(),
        "m_levels": scenario.m_levels(),
        "target": { "psi_deg": scenario.target().psi_deg(), "phi_deg": scenario.target().phi_deg() },
        "dataset_samples": dataset_samples,
        "validation_mse_db2": validation_mse,
        "uniform": uniform,
        "sa": {
            "theoretical_db": r.sa_depth.theoretical_db,
            "true_db": r.sa_depth.true_db,
            "weights": r.sa_weights.to_base_m_string(),
        },
        "resnet_sa": {
            "theoretical_db": r.resnet_depth.theoretical_db,
            "true_db": r.resnet_depth.true_db,
            "weights": r.resnet_weights.to_base_m_string(),
        },
        "degradation_db": r.degradation_db(),
        "improvement_db": r.improvement_db(),
        "tracking_rms_db": r.resnet_trace.final_quartile_rms_db(),
        "iterations": r.resnet_trace.len(),
    });
    let mut f = run.create("summary.json")?;
    serde_json::to_writer_pretty(&mut f, &value)?;
    writeln!(f)?;
    Ok(f.flush()?)
}

fn resnet_sa(run: &Run, model: &Path) -> Result<()> {
    let scenario = run.scenario()?;
    let net = ResidualNetwork::load(model)?;
    if net.n_elements() != scenario.n_elements() || net.m_levels() != scenario.m_levels() {
        return Err(Error::Model(format!(
            "model is for N = {}, M = {}; config gives N = {}, M = {}",
            net.n_elements(),
            net.m_levels(),
            scenario.n_elements(),
            scenario.m_levels()
        )));
    }
    let r = run_comparison(&scenario, &net, &run.config.sa_config())?;
    write_comparison(run, &scenario, &r)?;
    summary(run, &scenario, &r, None, None)
}

fn full(run: &Run) -> Result<()> {
    let stage = |name: &'static str, r: Result<()>| -> Result<()> {
        r.map_err(|e| {
            let note = format!("stage {name} failed: {e}\noutputs in this directory are incomplete\n");
            let _ = std::fs::write(run.path("PARTIAL"), note);
            log::error!("stage {name} failed");
            e
        })
    };
    let _ = std::fs::remove_file(run.path("PARTIAL"));
    let mut scenario = None;
    stage("setup", run.scenario().map(|s| scenario = Some(s)))?;
    let scenario = scenario.expect("set by setup");
    let mut samples = 0;
    stage("dataset", dataset(run, &scenario).map(|n| samples = n))?;
    let mut trained = None;
    stage(
        "train",
        train_model(run, &run.path("dataset.csv")).map(|t| trained = Some(t)),
    )?;
    let (net, mse, _) = trained.expect("set by train");
    let mut result = None;
    stage(
        "resnet-sa",
        run_comparison(&scenario, &net, &run.config.sa_config()).map(|r| result = Some(r)),
    )?;
    let result = result.expect("set by resnet-sa");
    stage("export", write_comparison(run, &scenario, &result))?;
    stage("pattern", {
        let uniform = WeightVector::uniform(scenario.n_elements(), scenario.m_levels())?;
        pattern_files(run, &scenario, &uniform, "uniform", Which::Both)
            .and_then(|_| pattern_files(run, &scenario, &result.sa_weights, "weights_sa", Which::Both))
            .and_then(|_| pattern_files(run, &scenario, &result.resnet_weights, "weights_resnet_sa", Which::Both))
    })?;
    stage("summary", summary(run, &scenario, &result, Some(samples), Some(mse)))
}

fn execute(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path, &cli.overrides)?,
        None => ExperimentConfig::parse_with_overrides("", "<defaults>", &cli.overrides)?,
    };
    let out = PathBuf::from(&config.output.dir);
    std::fs::create_dir_all(&out)?;
    let header = config.provenance();
    let run = Run { config, out, header };
    match cli.command {
        Command::Geometry => geometry(&run),
        Command::Pattern { which, weights } => pattern(&run, which, &weights),
        Command::Sa { pattern } => sa(&run, pattern),
        Command::Dataset => {
            let scenario = run.scenario()?;
            let n = dataset(&run, &scenario)?;
            println!("wrote {n} samples to {}", run.path("dataset.csv").display());
            Ok(())
        }
        Command::Train { dataset } => {
            let path = dataset.unwrap_or_else(|| run.path("dataset.csv"));
            train_model(&run, &path).map(|_| ())
        }
        Command::ResnetSa { model } => {
            let path = model.unwrap_or_else(|| run.path("model.json"));
            resnet_sa(&run, &path)
        }
        Command::Full => full(&run),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = Cli::command().after_long_help(key_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
