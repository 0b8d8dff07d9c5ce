use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vprofile", version, about = "Labelled Galton-Watson trees and their vertical edge profiles")]
pub struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Manifest path. Defaults to <out>.manifest.json, or a `manifest:` line on stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trees, excursions, size-conditioned trees or quadrangulations.
    Sample(SampleArgs),
    /// Split trees at a level into root component and excursion forest.
    Decompose(DecomposeArgs),
    /// Coefficients of g_ν or the table f_p(q).
    Genfun(GenfunArgs),
    /// Rows of the binary-tree transition kernels, or a simulated chain path.
    Kernel(KernelArgs),
    /// Run an exact oracle suite.
    Verify(VerifyArgs),
    /// Quadrangulations: sample, convert from a tree, back to a tree, ball profile.
    Maps(MapsArgs),
    /// Monte Carlo census of profile transitions and χ² tests.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunOpts {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub vertex_cap: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub rejection_cap: u64,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    Tree,
    Excursion,
    Conditioned,
    Quadrangulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormat {
    Trees,
    Summary,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// builtin:<id> or file:<path>; not used for quadrangulations.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum, default_value = "tree")]
    pub kind: SampleKind,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub root_label: i64,
    #[arg(long, value_enum, default_value = "plus")]
    pub sign: SignArg,
    /// Edge count for --kind conditioned.
    #[arg(long)]
    pub edges: Option<usize>,
    #[arg(long, value_enum, default_value = "trees")]
    pub format: SampleFormat,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// A tree in the text grammar.
    #[arg(long, conflicts_with = "input")]
    pub tree: Option<String>,
    /// File with one tree per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub level: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenfunTable {
    Nu,
    NuMinus,
    F,
}

#[derive(Debug, Args)]
pub struct GenfunArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value = "nu")]
    pub table: GenfunTable,
    #[arg(long, default_value_t = 20)]
    pub order: usize,
    #[arg(long, default_value_t = 4)]
    pub p_max: usize,
    /// Add a floating-point column.
    #[arg(long)]
    pub float: bool,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// p,q for the free kernel or p,q,v with --total.
    #[arg(long)]
    pub from: String,
    #[arg(long, default_value_t = 10)]
    pub smax: usize,
    /// Total edge count V: use the size-conditioned kernel.
    #[arg(long)]
    pub total: Option<usize>,
    /// Simulate this many steps of the free chain instead of printing a row.
    #[arg(long)]
    pub simulate: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    CountingLemma,
    MarkedForests,
    CycleLemma,
    Markov,
    Decompose,
    Schaeffer,
    ProfileCount,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 7)]
    pub max_pq: usize,
    #[arg(long, default_value_t = 3)]
    pub p_max: usize,
    #[arg(long, default_value_t = 4)]
    pub s_max: usize,
    /// Largest V for the markov suite.
    #[arg(long, default_value_t = 8)]
    pub max_total: usize,
    #[arg(long, default_value_t = 5)]
    pub max_edges: usize,
    /// Model for the decompose suite.
    #[arg(long)]
    pub model: Option<String>,
    /// Extra sampled cases for the decompose and schaeffer suites.
    #[arg(long, default_value_t = 0)]
    pub samples: u64,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapsAction {
    Sample,
    Convert,
    ToTree,
    Profile,
}

#[derive(Debug, Args)]
pub struct MapsArgs {
    #[arg(value_enum)]
    pub action: MapsAction,
    /// Tree for `convert`.
    #[arg(long)]
    pub tree: Option<String>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub orientation: bool,
    /// Map CSV for `to-tree` and `profile`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsTest {
    Census,
    Kernel,
    History,
    Forest,
    /// Free-kernel rows on the (X̌⁻, X̌⁺) process below the root.
    Lower,
    /// First-hit cascade offspring against ν₋.
    FirstHits,
    /// One positive excursion given (X⁺, X⁻) = --pq at --level.
    Excursions,
    /// Upper against lower ball process of quadrangulations.
    Balls,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value = "census")]
    pub test: StatsTest,
    #[arg(long, default_value_t = 10_000)]
    pub count: u64,
    #[arg(long, default_value_t = 500)]
    pub min_visits: u64,
    /// Level for the forest and excursions tests.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub level: i64,
    /// p,q for the excursions test.
    #[arg(long, default_value = "1,1")]
    pub pq: String,
    /// Largest excursion listed as its own cell in the excursions test.
    #[arg(long, default_value_t = 4)]
    pub max_edges: usize,
    #[command(flatten)]
    pub run: RunOpts,
}
