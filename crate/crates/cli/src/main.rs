//! Command-line entry point: simulation, verification, exact enumeration,
//! continuum sampling and distance-matrix export, all seeded and
//! reproducible. Identical configurations produce byte-identical outputs
//! (parallel replicates use per-index random streams and are merged in
//! index order).

use clap::{Args, Parser, Subcommand, ValueEnum};
use freezetree::builders::{build_coalescent, build_forward, FrozenTree};
use freezetree::continuum::{
    limit_distance_matrix, root_degree_stat, sample_coalescent, FunctionTable,
};
use freezetree::export;
use freezetree::metrics::{height, sample_distance_matrix, DistanceMode};
use freezetree::sequences::{
    excursion_sequence, iid_sequence_surviving, profile_sequence, walk, FreezeSequence,
    HarmonicSums, ProfileShape, ProfileSpec,
};
use freezetree::verify::{self, TestReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "freezetree", version, about)]
struct RunConfig {
    /// Worker threads for replicate-level parallelism (0 = logical cores)
    #[arg(long, global = true, default_value_t = 0, env = "FREEZETREE_THREADS")]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one tree from a profile and export it
    Simulate(SimulateArgs),
    /// Run a statistical or exact verification suite
    Verify(VerifyArgs),
    /// Exact distributions of both constructions for a small sequence
    Enumerate(EnumerateArgs),
    /// Sample the continuous-time coalescent
    Continuum(ContinuumArgs),
    /// Export a sampled distance matrix of one tree
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Csv,
    Json,
    Dot,
    Newick,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builder {
    Forward,
    Coalescent,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of steps (the excursion profile produces 2n + 1 steps)
    #[arg(long)]
    n: usize,
    /// Profile: power:<beta> | excursion | iid | all_plus
    #[arg(long, default_value = "power:0.5")]
    profile: String,
    /// Scaling exponent alpha in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 7, env = "FREEZETREE_SEED")]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TreeFormat::Csv)]
    format: TreeFormat,
    #[arg(long, value_enum, default_value_t = Builder::Forward)]
    builder: Builder,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// Exact distribution equality of the two constructions (length <= 6)
    Exact,
    /// Birth-time law on the worked example plus random sequences
    Birth,
    /// Coalescence-time law on small sequences
    Coal,
    /// Height and two-point regime laws for one (alpha, beta)
    Regime,
    /// Bounded-walk regime (alternating profile)
    Bounded,
    /// Excursion-driven height identity
    Crt,
    /// Graph-vs-coalescent distance equivalence across sizes
    Distance,
    /// Continuum genealogy density (k = 2)
    Density,
    /// Condensation dichotomy of the continuum coalescent
    Condensation,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Tree size (or base size for suites that scan sizes)
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Comma-separated size list for the distance suite
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Replicates (or samples, for the law suites)
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    /// Sampled vertices per distance matrix
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Walk ceiling for the bounded suite
    #[arg(long, default_value_t = 3)]
    bound: usize,
    #[arg(long, default_value_t = 7, env = "FREEZETREE_SEED")]
    seed: u64,
    /// Write JSON-lines reports here (the table always goes to stdout)
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Sign line such as "+-++-"
    #[arg(long)]
    steps: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContinuumStat {
    Realizations,
    Survival,
    Matrix,
}

#[derive(Args)]
struct ContinuumArgs {
    /// Rate shape: power:<beta>
    #[arg(long, default_value = "power:0.25")]
    shape: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 7, env = "FREEZETREE_SEED")]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ContinuumStat::Realizations)]
    stat: ContinuumStat,
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "power:0.5")]
    profile: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 7, env = "FREEZETREE_SEED")]
    seed: u64,
    /// Sampled vertices
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value = "graph")]
    mode: String,
    /// Normalization exponent gamma (entries are raw / n^gamma)
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    format: MatrixFormat,
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

fn emit(output: &Option<std::path::PathBuf>, content: &str) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}

fn make_sequence(
    n: usize,
    profile: &str,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FreezeSequence, String> {
    let shape: ProfileShape = profile.parse().map_err(|e| format!("{e}"))?;
    match shape {
        ProfileShape::Iid => Ok(iid_sequence_surviving(n, rng)),
        ProfileShape::Excursion => Ok(excursion_sequence(n, rng)),
        other => {
            let spec = ProfileSpec::new(alpha, other).map_err(|e| format!("{e}"))?;
            profile_sequence(n, &spec).map_err(|e| format!("{e}"))
        }
    }
}

fn tree_json(tree: &FrozenTree, stalled: bool) -> String {
    let vertices: Vec<serde_json::Value> = (0..tree.vertex_count() as u32)
        .map(|v| {
            serde_json::json!({
                "id": v,
                "parent": tree.parent(v),
                "label": tree.vertex_label(v).to_string(),
                "edge_label": tree.edge_label(v),
                "birth": tree.birth(v),
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "n": tree.n(),
        "vertex_count": tree.vertex_count(),
        "root": tree.root(),
        "stalled": stalled,
        "vertices": vertices,
    }))
    .expect("tree serializes")
}

fn run_simulate(args: &SimulateArgs) -> Result<ExitCode, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let seq = make_sequence(args.n, &args.profile, args.alpha, &mut rng)?;
    let (tree, stalled) = match args.builder {
        Builder::Forward => {
            let out = build_forward(&seq, &mut rng);
            (out.tree, out.stalled)
        }
        Builder::Coalescent => {
            let (tree, _) = build_coalescent(&seq, &mut rng).map_err(|e| format!("{e}"))?;
            (tree, false)
        }
    };
    let content = match args.format {
        TreeFormat::Csv => export::tree_csv(&tree),
        TreeFormat::Dot => export::tree_dot(&tree),
        TreeFormat::Newick => export::tree_newick(&tree),
        TreeFormat::Json => tree_json(&tree, stalled),
    };
    emit(&args.output, &content).map_err(|e| format!("{e}"))?;
    let w = walk(&seq);
    eprintln!(
        "n={} vertices={} height={} actives={} stalled={} max_walk={}",
        tree.n(),
        tree.vertex_count(),
        height(&tree),
        tree.actives().len(),
        stalled,
        w.max_value()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: &VerifyArgs) -> Result<ExitCode, String> {
    let reports: Vec<TestReport> = match args.suite {
        Suite::Exact => vec![verify::distribution_equality_report(6)],
        Suite::Birth => verify::birth_law_suite(args.replicates, args.seed),
        Suite::Coal => verify::coal_density_suite(args.replicates, args.seed),
        Suite::Regime => verify::regime_suite(
            args.alpha,
            args.beta,
            &[args.n],
            args.k,
            args.replicates,
            args.seed,
        ),
        Suite::Bounded => vec![verify::check_bounded_regime(
            args.bound,
            args.n,
            args.replicates,
            args.seed,
        )],
        Suite::Crt => vec![verify::crt_identity_report(args.n, args.replicates, args.seed)],
        Suite::Distance => {
            let sizes = args
                .n_list
                .clone()
                .unwrap_or_else(|| vec![10_000, 100_000, 1_000_000]);
            vec![verify::distance_equivalence_report(
                args.beta,
                &sizes,
                1000,
                args.replicates,
                args.seed,
            )]
        }
        Suite::Density => vec![verify::continuum_density_report(args.replicates, args.seed)],
        Suite::Condensation => {
            vec![verify::condensation_report(args.replicates, args.seed)]
        }
    };
    if let Some(path) = &args.output {
        std::fs::write(path, export::reports_jsonl(&reports)).map_err(|e| format!("{e}"))?;
    }
    print!("{}", export::reports_table(&reports));
    if reports.iter().all(|r| r.pass) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn run_enumerate(args: &EnumerateArgs) -> Result<ExitCode, String> {
    let seq = FreezeSequence::from_signs(&args.steps).map_err(|e| format!("{e}"))?;
    let fwd = verify::enumerate_forward(&seq).map_err(|e| format!("{e}"))?;
    let coal = verify::enumerate_coalescent(&seq).map_err(|e| format!("{e}"))?;
    println!("# outcomes: forward {}, coalescent {}", fwd.len(), coal.len());
    for (tree, p) in fwd.outcomes() {
        println!("{p}\t{tree}");
    }
    let tv = fwd.tv_distance(&coal);
    println!("# total variation forward vs coalescent: {tv}");
    if fwd.identical(&coal) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn run_continuum(args: &ContinuumArgs) -> Result<ExitCode, String> {
    if args.k == 0 {
        return Err("--k must be at least 1".to_string());
    }
    let shape: ProfileShape = args.shape.parse().map_err(|e| format!("{e}"))?;
    let table = match shape {
        ProfileShape::Power(beta) => FunctionTable::power(beta).map_err(|e| format!("{e}"))?,
        other => return Err(format!("continuum sampling needs a power shape, got {other}")),
    };
    let reals: Vec<_> = (0..args.replicates)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            rng.set_stream(i as u64);
            sample_coalescent(&table, args.k, &mut rng)
        })
        .collect();
    let content = match args.stat {
        ContinuumStat::Realizations => {
            let mut out = String::new();
            for r in &reals {
                out.push_str(&export::realization_json(r));
                out.push('\n');
            }
            out
        }
        ContinuumStat::Survival => {
            let stat = root_degree_stat(&reals);
            serde_json::to_string_pretty(&serde_json::json!({
                "shape": args.shape,
                "k": args.k,
                "replicates": args.replicates,
                "surviving_clusters": stat
                    .iter()
                    .map(|(k, f)| serde_json::json!({"clusters": k, "fraction": f}))
                    .collect::<Vec<_>>(),
            }))
            .expect("stat serializes")
        }
        ContinuumStat::Matrix => {
            let mut out = String::new();
            for r in &reals {
                let m = limit_distance_matrix(r, &table);
                let row: Vec<String> = m.iter().map(|x| format!("{x}")).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
    };
    emit(&args.output, &content).map_err(|e| format!("{e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn run_export(args: &ExportArgs) -> Result<ExitCode, String> {
    if args.k < 2 {
        return Err("--k must be at least 2".to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let seq = make_sequence(args.n, &args.profile, args.alpha, &mut rng)?;
    let (tree, gen) = build_coalescent(&seq, &mut rng).map_err(|e| format!("{e}"))?;
    let sums = HarmonicSums::new(&seq);
    let mode: DistanceMode = args.mode.parse()?;
    let sample = sample_distance_matrix(&tree, &gen, &sums, args.k, mode, args.gamma, &mut rng)
        .map_err(|e| format!("{e}"))?;
    let content = match args.format {
        MatrixFormat::Csv => export::matrix_csv(&sample),
        MatrixFormat::Json => export::matrix_json(&sample),
    };
    emit(&args.output, &content).map_err(|e| format!("{e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .ok();
    }
    let result = match &config.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Verify(args) => run_verify(args),
        Command::Enumerate(args) => run_enumerate(args),
        Command::Continuum(args) => run_continuum(args),
        Command::Export(args) => run_export(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
