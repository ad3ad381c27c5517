use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nystromite::bounds::ErrorNorm;
use nystromite::data::find_dataset;
use nystromite::sampling::FrontEnd;
use nystromite_bench::experiment::{
    parse_ratios, run_experiment, ExperimentKind, ExperimentSpec, MatrixSource,
};
use nystromite_bench::output::{
    format_summary, log_correlation, ratio_plot, singularity_plot, summarize, write_csv, write_file,
};
use nystromite_bench::BenchError;

#[derive(Parser)]
#[command(name = "bench", about = "Nyström sampler experiments")]
struct Cli {
    #[command(subcommand)]
    experiment: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Samplers on a Gaussian kernel matrix.
    Kernel(Options),
    /// Samplers on synthetic matrices with linear and exponential spectra.
    Synthetic(Options),
    /// Error against sigma_s(A_M) over repeated runs.
    Singularity(Options),
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    Fro,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrontEndArg {
    Exact,
    Linear,
}

#[derive(clap::Args)]
struct Options {
    /// LIBSVM file; a bare name is looked up in NYSTROMITE_DATA_DIR.
    #[arg(long, conflicts_with = "blobs")]
    input: Option<String>,
    /// Gaussian blobs `n,d,k` used when no input file is given.
    #[arg(long)]
    blobs: Option<String>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated: random,lineartime,algorithm1,icd,kmeans,svd.
    #[arg(long, value_delimiter = ',')]
    samplers: Option<Vec<String>>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// Thin decomposition used by algorithm1.
    #[arg(long, value_enum)]
    front_end: Option<FrontEndArg>,
    /// Matrix side for the synthetic and singularity experiments.
    #[arg(long)]
    n: Option<usize>,
    /// Exponential decay rate.
    #[arg(long)]
    rate: Option<f64>,
    /// Truncate synthetic spectra to this rank.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write a Vega-Lite plot description.
    #[arg(long)]
    plot: bool,
}

fn build_spec(kind: ExperimentKind, o: &Options) -> Result<ExperimentSpec, BenchError> {
    let mut spec = ExperimentSpec::defaults(kind);
    if let Some(input) = &o.input {
        let path = PathBuf::from(input);
        let path = if path.exists() {
            path
        } else {
            find_dataset(input).ok_or_else(|| BenchError::Spec(format!("dataset {input:?} not found")))?
        };
        spec.source = MatrixSource::Libsvm(path);
    }
    if let Some(b) = &o.blobs {
        let v: Vec<usize> = b
            .split(',')
            .map(|x| x.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| BenchError::Spec(format!("bad --blobs {b:?}")))?;
        let [n, d, k] = v[..] else {
            return Err(BenchError::Spec(format!("--blobs needs n,d,k, got {b:?}")));
        };
        spec.source = MatrixSource::Blobs { n, d, k };
    }
    if let Some(r) = &o.ratios {
        spec.ratios = parse_ratios(r)?;
    }
    if let Some(t) = o.trials {
        spec.trials = t;
    }
    spec.seed = o.seed;
    if let Some(list) = &o.samplers {
        spec.samplers = list
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?;
    }
    if let Some(norm) = o.norm {
        spec.norm = match norm {
            NormArg::L2 => ErrorNorm::Spectral,
            NormArg::Fro => ErrorNorm::Frobenius,
        };
    }
    if let Some(fe) = o.front_end {
        spec.front_end = match fe {
            FrontEndArg::Exact => FrontEnd::ExactSvd,
            FrontEndArg::Linear => FrontEnd::LinearTimeSvd,
        };
    }
    if let Some(n) = o.n {
        spec.size = n;
    }
    if let Some(rate) = o.rate {
        spec.decay_rate = rate;
    }
    if o.rank.is_some() {
        spec.rank = o.rank;
    }
    spec.validate()?;
    Ok(spec)
}

fn run(kind: ExperimentKind, o: &Options) -> Result<(), BenchError> {
    let spec = build_spec(kind, o)?;
    let rows = run_experiment(&spec)?;
    std::fs::create_dir_all(&o.out).map_err(|e| BenchError::Io(format!("{}: {e}", o.out.display())))?;
    let stem = spec.file_stem();
    let csv_path = o.out.join(format!("{stem}.csv"));
    let file = std::fs::File::create(&csv_path)
        .map_err(|e| BenchError::Io(format!("{}: {e}", csv_path.display())))?;
    write_csv(&rows, file)?;

    let summary = summarize(&rows);
    print!("{}", format_summary(&summary));
    if kind == ExperimentKind::Singularity {
        let c = log_correlation(&rows);
        match c.pearson {
            Some(p) => println!("pearson(log sigma_s(A_M), log error) = {p:.4} over {} runs", c.used),
            None => println!("pearson(log sigma_s(A_M), log error) = n/a over {} runs", c.used),
        }
        if c.excluded > 0 {
            println!("{} runs excluded (failed or zero sigma_s(A_M))", c.excluded);
        }
    }
    println!("wrote {}", csv_path.display());

    if o.plot {
        let plot = match kind {
            ExperimentKind::Singularity => singularity_plot(&rows, &stem),
            ExperimentKind::Kernel => ratio_plot(&summary, &stem, false),
            ExperimentKind::Synthetic => ratio_plot(&summary, &stem, true),
        };
        let plot_path = o.out.join(format!("{stem}.vl.json"));
        let text = serde_json::to_string_pretty(&plot).map_err(|e| BenchError::Io(e.to_string()))?;
        write_file(&plot_path, &text)?;
        println!("wrote {}", plot_path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, opts) = match &cli.experiment {
        Command::Kernel(o) => (ExperimentKind::Kernel, o),
        Command::Synthetic(o) => (ExperimentKind::Synthetic, o),
        Command::Singularity(o) => (ExperimentKind::Singularity, o),
    };
    match run(kind, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
