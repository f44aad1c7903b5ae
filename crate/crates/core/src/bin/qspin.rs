use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qspin::ensembles::Law;
use qspin::harness::{
    run_cf_check, run_concentration, run_distance_sweep, run_g_class_sup, run_lipschitz_check, run_moments,
    run_sphere_pipeline, run_spectrum, ExperimentConfig, SweepReport,
};

/// Random-matrix experiments on spin-glass Hamiltonians.
///
/// Each run writes rows.csv, aggregates.csv, fits.json and meta.json into the
/// output directory. Exit status 2 means a built-in assertion failed.
#[derive(Parser)]
#[command(name = "qspin", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON experiment config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Site counts, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of each replica.
    Spectrum,
    /// Distances to the reference laws across n.
    Sweep,
    /// Exceedance frequencies of d_BL above its mean.
    Concentration {
        #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.02,0.04")]
        offsets: Vec<f64>,
    },
    /// Lipschitz dependence of the spectral measure on the couplings.
    Lipschitz {
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 5)]
        f_samples: usize,
    },
    /// Replica-averaged characteristic function against e^{-t²/2}.
    Cf,
    /// Supremum over the finite piecewise-linear test class.
    Gclass {
        #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
        m: Vec<usize>,
        /// Half-width parameter R of [−2R, 2R]; defaults to √n.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Spherical-coupling pipeline (forces law = sphere).
    Sphere,
    /// Empirical spectral moments against the exact Gaussian ones.
    Moments {
        #[arg(long, default_value_t = 4)]
        k_max: usize,
    },
}

fn config(g: &Global) -> qspin::Result<ExperimentConfig> {
    let mut c = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        c.master_seed = s;
    }
    if let Some(o) = &g.out {
        c.output_dir = o.clone();
    }
    if let Some(t) = g.threads {
        c.threads = t;
    }
    if let Some(r) = g.replicas {
        c.replicas = r;
    }
    if let Some(n) = &g.n_list {
        c.n_list = n.clone();
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: &Cli) -> qspin::Result<(SweepReport, ExperimentConfig)> {
    let mut c = config(&cli.global)?;
    let report = match &cli.command {
        Command::Spectrum => run_spectrum(&c)?,
        Command::Sweep => run_distance_sweep(&c)?,
        Command::Concentration { offsets } => run_concentration(&c, offsets)?,
        Command::Lipschitz { pairs, f_samples } => run_lipschitz_check(&c, *pairs, *f_samples)?,
        Command::Cf => run_cf_check(&c)?,
        Command::Gclass { m, radius } => run_g_class_sup(&c, m, *radius)?,
        Command::Sphere => {
            c.law = Law::Sphere;
            run_sphere_pipeline(&c)?
        }
        Command::Moments { k_max } => run_moments(&c, *k_max)?,
    };
    report.write(&c.output_dir, &c)?;
    Ok((report, c))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, c)) => {
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "{}: {} rows ({} failed) -> {}",
                report.experiment,
                report.rows.len(),
                failed,
                c.output_dir.display()
            );
            let mut ok = true;
            for f in &report.fits {
                let verdict = match f.passed {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "-",
                };
                ok &= f.passed != Some(false);
                let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
                println!("  {:<28} C={} c={} residual={} [{verdict}]", f.experiment, show(f.big_c), show(f.c), show(f.residual));
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("qspin: {e}");
            ExitCode::FAILURE
        }
    }
}
