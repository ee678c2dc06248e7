//! Driver behind the `hypermatch` binary: reads or generates an update
//! stream, applies it batch by batch, prints matching deltas and writes a
//! JSON statistics document.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use hypermatch_core::{
    check_state, BatchReport, Config, DynamicMatching, Generator, StatsReport, StreamFile, WorkloadSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verify {
    None,
    Final,
    EveryBatch,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "hypermatch", version, about = "Batch-dynamic maximal matching on hypergraphs")]
pub struct Cli {
    /// Update stream to replay.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    pub input: Option<PathBuf>,
    /// Workload generator: uniform-mix, sliding-window,
    /// insert-all-then-delete-all or hypergraph-random.
    #[arg(long)]
    pub generate: Option<String>,
    /// Vertex count. Defaults to 100 when generating, to the number of
    /// distinct vertices in the stream otherwise.
    #[arg(long)]
    pub n: Option<u32>,
    /// Maximum hyperedge rank. Defaults to 2 when generating, to the widest
    /// edge in the stream otherwise.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub batches: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.6)]
    pub insert_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Verify::Final)]
    pub verify: Verify,
    /// Write the statistics document here instead of stdout.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    #[arg(long)]
    pub c_sub: Option<f64>,
    /// Subsettle repetitions allowed per settle.
    #[arg(long)]
    pub settle_cap: Option<usize>,
    /// Initial capacity bound on vertices plus updates.
    #[arg(long = "initial-N")]
    pub initial_n: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<hypermatch_core::Error> for CliError {
    fn from(e: hypermatch_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub rank: usize,
    pub alpha: u64,
    pub levels: i32,
    pub capacity: u64,
    pub seed: u64,
    pub c_sub: f64,
    pub settle_repeat_cap: usize,
}

/// The statistics document.
#[derive(Debug, Clone, Serialize)]
pub struct StatsDocument {
    pub source: String,
    pub initial: RunConfig,
    pub final_capacity: u64,
    pub final_levels: i32,
    pub edges: usize,
    pub matching_size: usize,
    pub stats: StatsReport,
}

/// Resolves flags into a stream and a matcher configuration.
pub fn prepare(cli: &Cli) -> Result<(String, StreamFile, Config), CliError> {
    let (source, stream, n, r) = match (&cli.input, &cli.generate) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let stream = StreamFile::parse(&text, cli.r.unwrap_or(usize::MAX)).map_err(|e| CliError::Input(e.to_string()))?;
            let widest = stream
                .batches
                .iter()
                .flat_map(|b| b.insertions.iter().map(|v| v.len()).chain(b.deletions.iter().map(|k| k.rank())))
                .max()
                .unwrap_or(2);
            let r = cli.r.unwrap_or(widest.max(2));
            let n = cli.n.map(u64::from).unwrap_or_else(|| distinct_vertices(&stream));
            (path.display().to_string(), stream, n, r)
        }
        (None, Some(name)) => {
            let generator: Generator = name.parse().map_err(|e: hypermatch_core::WorkloadError| CliError::Input(e.to_string()))?;
            let spec = WorkloadSpec {
                generator,
                n: cli.n.unwrap_or(100),
                r: cli.r.unwrap_or(2),
                batch_count: cli.batches,
                batch_size: cli.batch_size,
                insert_ratio: cli.insert_ratio,
                seed: cli.seed,
            };
            let stream = hypermatch_core::generate(&spec).map_err(|e| CliError::Input(e.to_string()))?;
            (generator.name().to_string(), stream, spec.n as u64, spec.r)
        }
        (None, None) => return Err(CliError::Input("one of --input or --generate is required".into())),
    };

    let mut config = match cli.initial_n {
        Some(cap) => Config::with_capacity(r, cap, cli.seed)?,
        None => Config::new(r, n, cli.seed)?,
    };
    if let Some(c) = cli.c_sub {
        if !(c.is_finite() && c > 0.0) {
            return Err(CliError::Input(format!("--c-sub must be positive, got {c}")));
        }
        config.c_sub = c;
    }
    if let Some(cap) = cli.settle_cap {
        config.settle_repeat_cap = Some(cap);
    }
    Ok((source, stream, config))
}

fn distinct_vertices(stream: &StreamFile) -> u64 {
    let mut vs: Vec<u32> = stream.batches.iter().flat_map(|b| b.insertions.iter().flatten().copied()).collect();
    vs.sort_unstable();
    vs.dedup();
    vs.len() as u64
}

fn write_deltas(out: &mut dyn Write, report: &BatchReport) -> io::Result<()> {
    for key in &report.matched_removed {
        writeln!(out, "[batch {}] unmatched {key}", report.batch)?;
    }
    for m in &report.matched_added {
        writeln!(out, "[batch {}] matched {} @ level {}", report.batch, m.edge, m.level)?;
    }
    Ok(())
}

fn verify(engine: &DynamicMatching) -> Result<(), CliError> {
    let violations = check_state(engine);
    if violations.is_empty() {
        return Ok(());
    }
    let shown: Vec<String> = violations.iter().take(10).map(|v| v.to_string()).collect();
    Err(CliError::Verification(format!(
        "{} violation(s) after batch {}: {}",
        violations.len(),
        engine.batches().saturating_sub(1),
        shown.join("; ")
    )))
}

/// Applies the whole stream, writing deltas (and the statistics document
/// unless `--stats-out` is set) to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<StatsDocument, CliError> {
    let (source, stream, config) = prepare(cli)?;
    let initial = RunConfig {
        rank: config.rank,
        alpha: config.alpha(),
        levels: config.levels(),
        capacity: config.capacity,
        seed: config.seed,
        c_sub: config.c_sub,
        settle_repeat_cap: config.settle_cap(),
    };
    let mut engine = DynamicMatching::new(config);
    for batch in &stream.batches {
        let report = engine.apply_batch(batch)?;
        write_deltas(out, &report)?;
        if cli.verify == Verify::EveryBatch {
            verify(&engine)?;
        }
    }
    if cli.verify == Verify::Final {
        verify(&engine)?;
    }

    let doc = StatsDocument {
        source,
        initial,
        final_capacity: engine.config().capacity,
        final_levels: engine.config().levels(),
        edges: engine.edge_keys().len(),
        matching_size: engine.matching().len(),
        stats: engine.stats(),
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    match &cli.stats_out {
        Some(path) => fs::write(path, json + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => writeln!(out, "{json}")?,
    }
    Ok(doc)
}
