use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "alttim", version, about = "Interference networks with alternating connectivity: capacity, simulation, verification and scheme search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form sum capacity, outer bounds, baseline and gain.
    Capacity(CapacityArgs),
    /// Encode, transmit and decode one block of a schedule.
    Simulate(SimulateArgs),
    /// Check decodability of a scheme file or a built-in scheme.
    Verify(VerifyArgs),
    /// Exhaustive search for the best linear zero-error rate.
    Search(SearchArgs),
    /// Search three-user state pairs that gain from joint coding.
    FindExamples(FindExamplesArgs),
    /// Capacity and schedule rates over a grid of state fractions, as CSV.
    Sweep(SweepArgs),
    /// Write a built-in scheme or schedule in the scheme file format.
    ExportScheme(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Print JSON instead of the text summary.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Ic2,
    X2,
    Bc2,
    #[value(name = "ic3-example")]
    #[serde(rename = "ic3-example")]
    Ic3Example,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Ic2 => "ic2",
            Scenario::X2 => "x2",
            Scenario::Bc2 => "bc2",
            Scenario::Ic3Example => "ic3-example",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceMode {
    Quota,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeChoice {
    Worst,
    Generic,
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// State fractions λ_A,λ_B,λ_C,λ_D as exact rationals, e.g. 1/3,1/3,1/3,0.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "ic2")]
    pub scenario: Scenario,
    /// State fractions as exact rationals: four for two-user scenarios, two
    /// for ic3-example.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    /// Block length in channel uses.
    #[arg(long, default_value_t = 1200)]
    pub n: usize,
    /// Field modulus.
    #[arg(long, default_value_t = 5)]
    pub p: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "sequence", value_enum, default_value = "quota")]
    pub sequence_mode: SequenceMode,
    /// Decodability required of searched witnesses (ic3-example).
    #[arg(long, value_enum, default_value = "worst")]
    pub mode: DecodeChoice,
    /// Grid file with the two 3-user states for ic3-example; defaults to the
    /// first shipped example pair.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// Joint A/B/C interference-channel scheme, rate 4/3.
    Fig2,
    /// Joint A/B broadcast scheme, rate 3/2.
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    /// Every realization.
    Worst,
    /// Seeded sample of realizations.
    Generic,
    /// Exact failing fraction over every realization.
    Exact,
    /// The single realization drawn from the seed.
    Single,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Scheme file to check.
    #[arg(conflicts_with = "builtin", required_unless_present = "builtin")]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Re-interpret the scheme over this field.
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long, value_enum, default_value = "worst")]
    pub mode: VerifyMode,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest realization count enumerated by exhaustive modes.
    #[arg(long, default_value_t = alttim_core::topology::DEFAULT_ENUMERATION_GUARD)]
    pub guard: u64,
    #[arg(long, default_value_t = 0)]
    pub shards: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    pub users: usize,
    /// Comma-separated state labels (A-D for two users; S1, S2, ... with --states).
    #[arg(long)]
    pub sequence: String,
    /// Grid file defining states S1, S2, ... for networks other than the two-user one.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, value_enum, default_value = "worst")]
    pub mode: DecodeChoice,
    /// Symbols per transmitter; defaults to the sequence length.
    #[arg(long)]
    pub max_symbols: Option<usize>,
    #[arg(long, default_value_t = alttim_core::oracle::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub shards: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the witness scheme to this file.
    #[arg(long)]
    pub witness_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FindExamplesArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, value_enum, default_value = "worst")]
    pub mode: DecodeChoice,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep every ordered pair instead of one per user relabeling.
    #[arg(long)]
    pub raw: bool,
    /// Write exampleN.grid and exampleN.scheme files here.
    #[arg(long)]
    pub witness_dir: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "ic2")]
    pub scenario: Scenario,
    /// Grid denominator: fractions run over multiples of 1/steps.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    /// Block length of the schedule whose rate is listed next to the formula.
    #[arg(long, default_value_t = 120)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: u32,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum, conflicts_with = "scenario")]
    pub builtin: Option<Builtin>,
    #[arg(long, value_enum, requires = "lambda")]
    pub scenario: Option<Scenario>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long)]
    pub p: Option<u32>,
    /// Destination file; stdout when absent.
    #[arg(long)]
    pub file: Option<PathBuf>,
}
