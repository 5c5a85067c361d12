use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magbottle_cli::{parse_config, run, write_outputs, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "magbottle", version, about = "Spectra and eigenvalue bounds for magnetic Dirichlet Laplacians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative tolerance for slack checks; overrides `tolerance`.
    #[arg(long = "seed-tolerances")]
    seed_tolerances: Option<f64>,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Configuration file; the flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "B0")]
    b0: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    terms: Option<usize>,
    /// Write constants.csv and report.txt here; otherwise print only.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Disc spectrum from Kummer zeros, cross-checked by finite differences.
    DiscSpectrum(ScenarioArgs),
    /// Li-Yau and Berezin bounds on a constant-field disc.
    Bounds2d(ScenarioArgs),
    /// Berezin bound against the older two-term bound.
    CompareKw13(ScenarioArgs),
    /// Dimension reduction on a magnetic cusp.
    Cusp3d(ScenarioArgs),
    /// Two-dimensional trace bound for a local field perturbation.
    Perturbed2d(ScenarioArgs),
    /// Three-dimensional trace bounds for a local field perturbation.
    Perturbed3d(ScenarioArgs),
    /// Evaluate the constants K, G and J.
    Constants(ConstantsArgs),
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MAGBOTTLE_THREADS") else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().map_err(|_| format!("MAGBOTTLE_THREADS must be a nonnegative integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn load(path: &PathBuf, scenario: Scenario) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let config = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if config.scenario != scenario {
        return Err(format!("{} configures scenario {}, not {scenario}", path.display(), config.scenario));
    }
    Ok(config)
}

fn execute(
    config: RunConfig,
    out: Option<PathBuf>,
    tol_override: Option<f64>,
    write: bool,
) -> Result<ExitCode, String> {
    let tol = match tol_override {
        Some(t) if t > 0.0 && t < 1.0 => t,
        Some(t) => return Err(format!("--seed-tolerances must lie in (0, 1), got {t}")),
        None => config.float("tolerance").unwrap_or(1e-9),
    };
    let outcome = run(&config);
    let status = if write {
        let dir = out.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("magbottle-out"));
        write_outputs(&config, &outcome, &dir, tol).map_err(|e| format!("writing {}: {e}", dir.display()))?
    } else {
        outcome.status(tol)
    };
    print!("{}", outcome.report(&config, tol));
    Ok(ExitCode::from(status.code() as u8))
}

fn constants(args: ConstantsArgs) -> Result<ExitCode, String> {
    if let Some(path) = &args.config {
        let config = load(path, Scenario::Constants)?;
        return execute(config, args.out, None, true);
    }
    let mut text = String::from("[constants]\n");
    let fields = [
        ("beta", args.beta),
        ("gamma", args.gamma),
        ("epsilon", args.epsilon),
        ("sigma", args.sigma),
        ("B0", args.b0),
        ("radius", args.radius),
    ];
    for (k, v) in fields {
        if let Some(v) = v {
            text += &format!("{k} = {v:e}\n");
        }
    }
    if let Some(n) = args.terms {
        text += &format!("terms = {n}\n");
    }
    let config = parse_config(&text).map_err(|e| e.to_string())?;
    let write = args.out.is_some();
    execute(config, args.out, None, write)
}

fn main_inner() -> Result<ExitCode, String> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::from(if e.use_stderr() { 1 } else { 0 }));
        }
    };
    configure_threads()?;
    let (scenario, args) = match cli.command {
        Command::Constants(args) => return constants(args),
        Command::DiscSpectrum(a) => (Scenario::DiscSpectrum, a),
        Command::Bounds2d(a) => (Scenario::Bounds2D, a),
        Command::CompareKw13(a) => (Scenario::CompareKW13, a),
        Command::Cusp3d(a) => (Scenario::Cusp3D, a),
        Command::Perturbed2d(a) => (Scenario::Perturbed2D, a),
        Command::Perturbed3d(a) => (Scenario::Perturbed3D, a),
    };
    let config = load(&args.config, scenario)?;
    execute(config, args.out, args.seed_tolerances, true)
}

fn main() -> ExitCode {
    main_inner().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
