mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ssh_bench::{
    parameter_sweep, run_accuracy_experiment, run_pruning_experiment, run_timing_experiment,
    tuned_params, write_csv, CsvRow, Method, QueryProtocol, SweepAxis, Workload,
};
use ssh_core::io::{load_series_file, write_recording};
use ssh_core::series::{windows_with_source, Source};
use ssh_core::{
    build_index, generate_random_walk, load_index, query_with, save_index, Dataset, Format,
    QueryOptions, QueryStatus, SshParams, WarpingParams, DEFAULT_BAND,
};

#[derive(Parser)]
#[command(
    name = "ssh-ts",
    version,
    about = "Sketch/shingle/minhash indexing for DTW similarity search",
    args_override_self = true,
    after_help = "--config FILE reads key=value lines as flags of the invoked command; \
                  flags on the command line take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded Gaussian random-walk recording.
    Gen(GenArgs),
    /// Build an index over the length-t windows of a recording (or the rows of a file).
    Build(BuildArgs),
    /// Top-k DTW neighbours of each series in a query file.
    Query(QueryArgs),
    /// Run an experiment and write its CSV table.
    Bench {
        #[command(subcommand)]
        experiment: Experiment,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    length: u64,
    #[arg(long, default_value = "f64le")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Copy)]
struct HashFlags {
    /// Filter length.
    #[arg(long = "W")]
    window: Option<usize>,
    /// Filter step.
    #[arg(long)]
    delta: Option<usize>,
    /// Shingle length.
    #[arg(long = "n")]
    shingle: Option<usize>,
    /// Number of hash tables.
    #[arg(long = "d")]
    tables: Option<usize>,
    /// Minhashes concatenated per table key.
    #[arg(long = "K")]
    per_table: Option<usize>,
}

impl HashFlags {
    fn over(self, base: SshParams) -> SshParams {
        SshParams {
            window: self.window.unwrap_or(base.window),
            delta: self.delta.unwrap_or(base.delta),
            shingle: self.shingle.unwrap_or(base.shingle),
            tables: self.tables.unwrap_or(base.tables),
            per_table: self.per_table.unwrap_or(base.per_table),
            ..base
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    data: PathBuf,
    /// Data file format (default: from the extension, `.csv` or f64le).
    #[arg(long)]
    format: Option<Format>,
    /// Window length; required when the data file holds one recording.
    #[arg(long)]
    t: Option<usize>,
    #[command(flatten)]
    hash: HashFlags,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    band: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    /// File of query series, each of the indexed length.
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    query_format: Option<Format>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Scan the whole dataset when no bucket matches.
    #[arg(long)]
    fallback: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct WorkloadArgs {
    /// Windows per dataset.
    #[arg(long, default_value_t = 50_000)]
    series: usize,
    #[arg(long, default_value_t = 20)]
    queries: usize,
    #[arg(long, default_value = "member")]
    protocol: QueryProtocol,
    /// Random-walk seed; queries use seed + 1.
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    band: f64,
    /// Hash seed (default: the tuned one).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    hash: HashFlags,
    #[arg(long)]
    out: PathBuf,
}

impl WorkloadArgs {
    fn workload(&self) -> Workload {
        Workload {
            series: self.series,
            data_seed: self.data_seed,
            queries: self.queries,
            query_seed: self.data_seed.wrapping_add(1),
            protocol: self.protocol,
            band: self.band,
        }
    }

    fn params(&self, t: usize) -> SshParams {
        let base = tuned_params(t);
        SshParams {
            seed: self.seed.unwrap_or(base.seed),
            band: self.band,
            ..self.hash.over(base)
        }
    }
}

#[derive(Subcommand)]
enum Experiment {
    /// Pruned fractions of the exact cascade and of the index.
    Pruning {
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        w: WorkloadArgs,
    },
    /// Precision and NDCG against brute-force DTW.
    Accuracy {
        #[arg(long, value_delimiter = ',', default_value = "128,512")]
        lengths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
        ks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "ssh,srp")]
        methods: Vec<Method>,
        #[command(flatten)]
        w: WorkloadArgs,
    },
    /// Mean query time of the index and of exact search (one thread unless --threads).
    Timing {
        #[arg(long, value_delimiter = ',', default_value = "128,512,1024,2048")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        w: WorkloadArgs,
    },
    /// Precision and preprocessing time while one parameter varies.
    Sweep {
        /// W, delta or n.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, default_value_t = 128)]
        t: usize,
        #[arg(long, default_value_t = 50)]
        k: usize,
        #[command(flatten)]
        w: WorkloadArgs,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ssh_core::Error> for Failure {
    fn from(e: ssh_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn set_threads(threads: Option<usize>) -> Outcome {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Failure::Usage("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn usage(e: ssh_core::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Bench { experiment } => bench(experiment),
    }
}

fn gen(a: GenArgs) -> Outcome {
    set_threads(a.common.threads)?;
    let walk = generate_random_walk(a.length as usize, a.common.seed)?;
    write_recording(&walk, &a.out, a.format)?;
    eprintln!("wrote {} points to {}", a.length, a.out.display());
    Ok(())
}

fn build(a: BuildArgs) -> Outcome {
    set_threads(a.common.threads)?;
    let params = SshParams {
        seed: a.common.seed,
        band: a.band,
        ..a.hash.over(SshParams::random_walk())
    };
    params.validate().map_err(usage)?;
    WarpingParams::new(a.band).map_err(usage)?;
    let path = fs::canonicalize(&a.data)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", a.data.display())))?;
    let format = a.format.unwrap_or_else(|| Format::from_path(&path));
    let file = load_series_file(&path, format)?;
    let data = select_series(file, a.t, path, format)?;
    params.validate_for_len(data.series_len()).map_err(usage)?;
    let start = Instant::now();
    let index = build_index(&data, params)?;
    save_index(&index, &a.out)?;
    eprintln!(
        "indexed {} series of length {} in {:.3}s -> {}",
        index.len(),
        data.series_len(),
        start.elapsed().as_secs_f64(),
        a.out.display()
    );
    Ok(())
}

/// A single-series file is cut into windows of length `t`; a multi-row file
/// is used row by row. Either way the series are z-normalized.
fn select_series(
    file: Dataset,
    t: Option<usize>,
    path: PathBuf,
    format: Format,
) -> Result<Dataset, Failure> {
    if file.len() == 1 {
        let t = t.ok_or_else(|| {
            Failure::Usage("--t is required when the data file holds a single recording".into())
        })?;
        if t == 0 || t > file.series_len() {
            return Err(Failure::Usage(format!(
                "--t = {t} must be in 1..={} (the recording length)",
                file.series_len()
            )));
        }
        let rec = file.get(0).into_values();
        let data = windows_with_source(rec, t, Source::File { path, format })?;
        return Ok(data.z_normalized());
    }
    if let Some(t) = t {
        if t != file.series_len() {
            return Err(Failure::Usage(format!(
                "--t = {t} but the data file holds rows of length {}",
                file.series_len()
            )));
        }
    }
    Ok(file.z_normalized())
}

fn query(a: QueryArgs) -> Outcome {
    set_threads(a.threads)?;
    let index = load_index(&a.index)?;
    let format = a
        .query_format
        .unwrap_or_else(|| Format::from_path(&a.query));
    let queries = load_series_file(&a.query, format)?;
    let t = index.dataset().series_len();
    if queries.series_len() != t {
        return Err(Failure::Runtime(format!(
            "query series in {} have length {}; the index expects length {t}",
            a.query.display(),
            queries.series_len()
        )));
    }
    let k = a.k as usize;
    if k > index.len() {
        eprintln!(
            "warning: k = {k} exceeds the {} indexed series; returning all of them",
            index.len()
        );
    }
    let options = QueryOptions {
        fallback_to_exact: a.fallback,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "query,rank,id,distance")?;
    let mut empty = 0;
    for (qi, q) in queries.iter().enumerate() {
        let start = Instant::now();
        let q = index.prepare_query(&q)?;
        let res = query_with(&index, &q, k.min(index.len()), options)?;
        let secs = start.elapsed().as_secs_f64();
        if res.status == QueryStatus::NoCandidates {
            empty += 1;
        }
        writeln!(
            out,
            "# query {qi}: status={:?} candidates={}/{} hash_pruned={:.4} total_pruned={:.4} secs={secs:.6}",
            res.status,
            res.candidates,
            res.dataset_len,
            res.hash_pruned_fraction(),
            res.total_pruned_fraction(),
        )?;
        for (rank, n) in res.outcome.neighbors.iter().enumerate() {
            writeln!(out, "{qi},{},{},{}", rank + 1, n.id, n.distance)?;
        }
    }
    if empty > 0 {
        eprintln!(
            "warning: {empty} query(s) matched no bucket; rerun with --fallback to scan everything"
        );
    }
    Ok(())
}

fn emit<T: CsvRow>(rows: &[T], out: &Path) -> Outcome {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    fs::write(out, buf).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn check(w: &WorkloadArgs, lengths: &[usize]) -> Outcome {
    WarpingParams::new(w.band).map_err(usage)?;
    if w.series == 0 || w.queries == 0 {
        return Err(Failure::Usage("--series and --queries must be >= 1".into()));
    }
    if lengths.is_empty() {
        return Err(Failure::Usage("at least one length is required".into()));
    }
    for &t in lengths {
        w.params(t).validate_for_len(t).map_err(usage)?;
    }
    Ok(())
}

fn check_k(k: usize) -> Outcome {
    if k == 0 {
        return Err(Failure::Usage("k must be >= 1".into()));
    }
    Ok(())
}

fn bench(experiment: Experiment) -> Outcome {
    match experiment {
        Experiment::Pruning { lengths, k, w } => {
            set_threads(w.threads)?;
            check(&w, &lengths)?;
            check_k(k)?;
            let rows = run_pruning_experiment(&lengths, &w.workload(), &|t| w.params(t), k)?;
            emit(&rows, &w.out)
        }
        Experiment::Accuracy {
            lengths,
            ks,
            methods,
            w,
        } => {
            set_threads(w.threads)?;
            check(&w, &lengths)?;
            for &k in &ks {
                check_k(k)?;
            }
            if methods.is_empty() {
                return Err(Failure::Usage("--methods must name ssh and/or srp".into()));
            }
            let rows =
                run_accuracy_experiment(&lengths, &ks, &methods, &w.workload(), &|t| w.params(t))?;
            emit(&rows, &w.out)
        }
        Experiment::Timing { lengths, k, w } => {
            set_threads(Some(w.threads.unwrap_or(1)))?;
            check(&w, &lengths)?;
            check_k(k)?;
            let rows = run_timing_experiment(&lengths, &w.workload(), &|t| w.params(t), k)?;
            emit(&rows, &w.out)
        }
        Experiment::Sweep {
            axis,
            values,
            t,
            k,
            w,
        } => {
            set_threads(w.threads)?;
            check(&w, &[t])?;
            check_k(k)?;
            for &v in &values {
                axis.apply(w.params(t), v)
                    .validate_for_len(t)
                    .map_err(usage)?;
            }
            let rows = parameter_sweep(axis, &values, t, &w.workload(), w.params(t), k)?;
            emit(&rows, &w.out)
        }
    }
}
