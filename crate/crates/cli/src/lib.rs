//! Command implementations behind the `alttim` binary.
//!
//! Every command returns an [`Outcome`]: a JSON document with stable key
//! order, a short text summary and an exit status. Wall-clock measurements
//! live under the `timing` key and nothing else in a report depends on time,
//! so reruns with the same arguments produce the same JSON once `timing` is
//! dropped.

pub mod args;
pub mod simulate;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use alttim_core::capacity::{
    baseline_and_gain_ic2, csit_state_mapping, outer_bounds_ic2, theorem1_sum_capacity, theorem2_sum_capacity,
    theorem3_sum_capacity, CapacityError, IC_THEOREM, X_THEOREM, BC_THEOREM,
};
use alttim_core::oracle::{
    find_example_topologies, max_linear_rate, DecodeMode, ExampleSearch, OracleError, SearchResult, SearchSpec,
    QUANTITY_LABEL,
};
use alttim_core::scheme::{
    build_bc2_joint_ab, build_ic2_joint_abc, build_schedule_bc2, build_schedule_ic2, build_schedule_x2, parse_scheme,
    write_scheme, SchemeError,
};
use alttim_core::topology::{
    format_state_blocks, parse_state_blocks, sample_realization, StateAlphabet, RNG_ALGORITHM,
};
use alttim_core::verifier::{
    failure_fraction_report, generic_check, single_check, worst_case_check_sharded, DecodabilityReport, VerifyError,
};
use alttim_core::{Field, LinearScheme, RateValue, StateFractions, StateSequence, TopologyState};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use args::*;
pub use simulate::{simulate, RateReport, SimConfig};

/// First shipped three-user example pair, the ic3-example default.
pub const EXAMPLE_1: &str = include_str!("../data/example1.grid");
/// Second shipped three-user example pair.
pub const EXAMPLE_2: &str = include_str!("../data/example2.grid");

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable input or an unmet precondition.
    #[error("{0}")]
    Usage(String),
    /// A search or enumeration would exceed its budget.
    #[error("{0}")]
    Budget(String),
    /// An invariant of the implementation was violated.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CapacityError> for CliError {
    fn from(e: CapacityError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::GuardExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Budget { .. } => CliError::Budget(e.to_string()),
            OracleError::Verify(v) => v.into(),
            OracleError::WitnessRejected(_) => CliError::Internal(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: Value,
    pub text: String,
    /// 0 on success, 1 when a verification verdict is negative.
    pub exit_code: i32,
}

/// Report body plus the provenance and timing blocks.
fn envelope(command: &str, report: Value, provenance: Value, started: Instant) -> Value {
    json!({
        "command": command,
        "report": report,
        "provenance": provenance,
        "timing": { "seconds": started.elapsed().as_secs_f64() },
    })
}

/// Hex SHA-256 of the canonical JSON of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configurations serialize");
    hex::encode(Sha256::digest(&bytes))
}

fn provenance<T: Serialize>(config: &T, seed: Option<u64>, flags: Value) -> Value {
    json!({
        "seed": seed,
        "config_hash": config_hash(config),
        "mode_flags": flags,
        "rng": RNG_ALGORITHM,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn field(p: u32) -> Result<Field, CliError> {
    Field::new(p).map_err(|e| CliError::Usage(format!("--p {p}: {e}")))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn fractions(s: &str, expected: usize) -> Result<StateFractions, CliError> {
    StateFractions::parse(s, expected).map_err(|e| CliError::Usage(format!("--lambda: {e}")))
}

fn rate_json(r: RateValue) -> Value {
    to_value(&r)
}

/// Parses arguments already split from the command line and runs them.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (outcome, output) = match cli.command {
        Command::Capacity(a) => (cmd_capacity(&a)?, Some(a.output)),
        Command::Simulate(a) => (cmd_simulate(&a)?, Some(a.output)),
        Command::Verify(a) => (cmd_verify(&a)?, Some(a.output)),
        Command::Search(a) => (cmd_search(&a)?, Some(a.output)),
        Command::FindExamples(a) => (cmd_find_examples(&a)?, Some(a.output)),
        Command::Sweep(a) => (cmd_sweep(&a)?, None),
        Command::ExportScheme(a) => (cmd_export(&a)?, None),
    };
    if let Some(out) = output {
        if let Some(path) = &out.out {
            write(path, &format!("{}\n", serde_json::to_string_pretty(&outcome.json).unwrap()))?;
        }
        if out.json {
            return Ok(Outcome {
                text: format!("{}\n", serde_json::to_string_pretty(&outcome.json).unwrap()),
                ..outcome
            });
        }
    }
    Ok(outcome)
}

pub fn cmd_capacity(a: &CapacityArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    if a.scenario == Scenario::Ic3Example {
        return Err(CliError::Usage(
            "no closed-form capacity is known for the three-user examples; use simulate or find-examples".into(),
        ));
    }
    let fr = fractions(&a.lambda, 4)?;
    let (name, capacity) = match a.scenario {
        Scenario::Ic2 => (IC_THEOREM, theorem1_sum_capacity(&fr)?),
        Scenario::X2 => (X_THEOREM, theorem2_sum_capacity(&fr)?),
        _ => (BC_THEOREM, theorem3_sum_capacity(&fr)?),
    };
    let mut report = json!({
        "scenario": a.scenario,
        "fractions": fr.to_strings(),
        "formula": name,
        "capacity": rate_json(capacity),
    });
    let mut text = format!("{}: sum capacity {} ({})\n", a.scenario.name(), capacity, capacity.decimal());
    if matches!(a.scenario, Scenario::Ic2 | Scenario::X2) {
        let bounds = outer_bounds_ic2(&fr)?;
        let (baseline, gain) = baseline_and_gain_ic2(&fr)?;
        report["bounds"] = to_value(&bounds);
        report["baseline"] = rate_json(baseline);
        report["gain"] = rate_json(gain);
        for (k, v) in bounds.entries() {
            let _ = writeln!(text, "  {k:<12} {v}");
        }
        let _ = writeln!(text, "  baseline     {baseline}\n  gain         {gain}");
    } else {
        let table: Vec<Value> = csit_state_mapping()
            .iter()
            .map(|(s, (c1, c2))| json!({ "state": s.label(), "csit": [format!("{c1:?}"), format!("{c2:?}")] }))
            .collect();
        report["csit_mapping"] = Value::Array(table);
        report["field_requirement"] = json!("p > 2");
    }
    let cfg = json!({ "command": "capacity", "scenario": a.scenario, "lambda": fr.to_strings() });
    Ok(Outcome {
        json: envelope("capacity", report, provenance(&cfg, None, json!({})), started),
        text,
        exit_code: 0,
    })
}

/// The configuration a `simulate` invocation describes.
pub fn sim_config(a: &SimulateArgs) -> Result<SimConfig, CliError> {
    let states = if a.scenario == Scenario::Ic3Example {
        let text = match &a.states {
            Some(path) => read(path)?,
            None => EXAMPLE_1.to_string(),
        };
        let blocks = parse_state_blocks(&text).map_err(|e| CliError::Usage(format!("--states: {e}")))?;
        if blocks.len() != 2 {
            return Err(CliError::Usage(format!("--states: expected 2 state blocks, found {}", blocks.len())));
        }
        Some([blocks[0].grid_rows(), blocks[1].grid_rows()])
    } else {
        None
    };
    Ok(SimConfig {
        scenario: a.scenario,
        fractions: a.lambda.split(',').map(|s| s.trim().to_string()).collect(),
        p: a.p,
        n: a.n,
        seed: a.seed,
        sequence_mode: a.sequence_mode,
        decode_mode: a.mode,
        states,
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let cfg = sim_config(a)?;
    let report = simulate(&cfg)?;
    let flags = json!({
        "sequence_mode": cfg.sequence_mode,
        "decode_mode": cfg.decode_mode,
        "scheduling": "offline",
    });
    let mut text = format!(
        "{} n={} p={}: achieved {} ({})",
        cfg.scenario.name(),
        cfg.n,
        cfg.p,
        report.achieved_rate,
        report.achieved_rate.decimal()
    );
    if let (Some(f), Some(g)) = (&report.formula, report.gap) {
        let _ = write!(text, ", formula {} ({}), gap {}", f.value, f.name, g);
    }
    let _ = writeln!(text, ", decode failures {}", report.decode_failures);
    Ok(Outcome {
        json: envelope("simulate", to_value(&report), provenance(&cfg, Some(cfg.seed), flags), started),
        text,
        exit_code: 0,
    })
}

fn load_scheme(file: &Option<std::path::PathBuf>, builtin: Option<Builtin>, p: Option<u32>) -> Result<(LinearScheme, String), CliError> {
    let (scheme, source) = match (file, builtin) {
        (_, Some(Builtin::Fig2)) => (build_ic2_joint_abc(field(p.unwrap_or(3))?), "builtin fig2".to_string()),
        (_, Some(Builtin::Fig3)) => (build_bc2_joint_ab(field(p.unwrap_or(5))?), "builtin fig3".to_string()),
        (Some(path), None) => {
            let text = read(path)?;
            let s = parse_scheme(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            (s, path.display().to_string())
        }
        (None, None) => return Err(CliError::Usage("give a scheme file or --builtin".into())),
    };
    match (p, file) {
        (Some(p), Some(_)) => Ok((scheme.with_field(field(p)?)?, source)),
        _ => Ok((scheme, source)),
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let (scheme, source) = load_scheme(&a.file, a.builtin, a.p)?;
    let shards = if a.shards == 0 { rayon_threads() } else { a.shards };
    let report: DecodabilityReport = match a.mode {
        VerifyMode::Worst => worst_case_check_sharded(&scheme, a.guard, shards)?,
        VerifyMode::Exact => failure_fraction_report(&scheme, a.guard)?,
        VerifyMode::Generic => generic_check(&scheme, a.trials, a.seed)?,
        VerifyMode::Single => single_check(&scheme, &sample_realization(scheme.sequence(), scheme.field(), a.seed))?,
    };
    let mode = format!("{:?}", a.mode).to_lowercase();
    let cfg = json!({
        "command": "verify",
        "scheme": write_scheme(&scheme),
        "mode": mode,
        "trials": a.trials,
        "seed": a.seed,
        "guard": a.guard,
    });
    let seeded = matches!(a.mode, VerifyMode::Generic | VerifyMode::Single);
    let text = format!(
        "{source}: {} over GF({}), rate {}, {} realizations checked, {} failing: {}\n",
        mode,
        report.field,
        report.rate,
        report.realizations_checked,
        report.failures,
        if report.verdict { "PASS" } else { "FAIL" }
    );
    let exit_code = if report.verdict { 0 } else { 1 };
    let mut body = to_value(&report);
    body["source"] = json!(source);
    Ok(Outcome {
        json: envelope(
            "verify",
            body,
            provenance(&cfg, seeded.then_some(a.seed), json!({ "mode": mode })),
            started,
        ),
        text,
        exit_code,
    })
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn decode_mode(choice: DecodeChoice, trials: u64, seed: u64) -> DecodeMode {
    match choice {
        DecodeChoice::Worst => DecodeMode::WorstCase,
        DecodeChoice::Generic => DecodeMode::Generic { trials, seed },
    }
}

/// JSON form of a search result; the witness is given in scheme file form.
pub fn search_json(r: &SearchResult, mode: DecodeMode) -> Value {
    json!({
        "quantity": QUANTITY_LABEL,
        "best_rate": rate_json(r.best_rate),
        "best_symbols": r.best_symbols,
        "allocation": r.allocation,
        "candidates_examined": r.candidates_examined,
        "space_size": r.space_size.to_string(),
        "exhaustive": r.exhaustive,
        "mode": to_value(&mode),
        "witness": r.witness.as_ref().map(write_scheme),
    })
}

pub fn cmd_search(a: &SearchArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let f = field(a.p)?;
    let alphabet = match &a.states {
        Some(path) => {
            let states = parse_state_blocks(&read(path)?).map_err(|e| CliError::Usage(format!("--states: {e}")))?;
            StateAlphabet::numbered(states).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None if a.users == 2 => StateAlphabet::two_user(),
        None => return Err(CliError::Usage(format!("{} users need --states with the state grids", a.users))),
    };
    if alphabet.users() != a.users {
        return Err(CliError::Usage(format!(
            "--users {} but the states have {} users",
            a.users,
            alphabet.users()
        )));
    }
    let seq = StateSequence::parse_labels(alphabet, &a.sequence).map_err(|e| CliError::Usage(format!("--sequence: {e}")))?;
    let mode = decode_mode(a.mode, a.trials, a.seed);
    let spec = SearchSpec::new(seq.clone(), f)
        .with_max_symbols(a.max_symbols.unwrap_or(seq.len()))
        .with_mode(mode)
        .with_budget(a.budget)
        .with_shards(a.shards);
    let result = max_linear_rate(&spec)?;
    if let (Some(path), Some(w)) = (&a.witness_out, &result.witness) {
        write(path, &write_scheme(w))?;
    }
    let labels: Vec<&str> = (0..seq.len()).map(|s| seq.label(s)).collect();
    let mut report = search_json(&result, mode);
    report["sequence"] = json!(labels);
    report["users"] = json!(a.users);
    report["p"] = json!(a.p);
    let cfg = json!({
        "command": "search",
        "users": a.users,
        "sequence": labels,
        "states": (0..seq.alphabet().len()).map(|i| seq.alphabet().state(i).grid_rows()).collect::<Vec<_>>(),
        "p": a.p,
        "mode": to_value(&mode),
        "max_symbols": spec.max_symbols,
        "budget": a.budget,
    });
    let text = format!(
        "{} over GF({}): {} {} (symbols per user {:?}, {} candidates examined, exhaustive: {})\n",
        labels.join(","),
        a.p,
        QUANTITY_LABEL,
        result.best_rate,
        result.allocation,
        result.candidates_examined,
        result.exhaustive
    );
    let seed = matches!(a.mode, DecodeChoice::Generic).then_some(a.seed);
    Ok(Outcome {
        json: envelope("search", report, provenance(&cfg, seed, json!({ "mode": mode.name() })), started),
        text,
        exit_code: 0,
    })
}

fn state_rows(s: &TopologyState) -> Vec<String> {
    s.grid_rows()
}

pub fn cmd_find_examples(a: &FindExamplesArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let f = field(a.p)?;
    let mode = decode_mode(a.mode, a.trials, a.seed);
    eprintln!("searching 4096 ordered pairs of 3-user states over GF({}) ({} mode)", a.p, mode.name());
    let hits = find_example_topologies(&ExampleSearch { field: f, mode, raw: a.raw })?;
    eprintln!("{} pairs pass the example profile", hits.len());
    if let Some(dir) = &a.witness_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        for (i, h) in hits.iter().enumerate() {
            let stem = format!("example{}", i + 1);
            write(&dir.join(format!("{stem}.grid")), &format_state_blocks(&h.profile.states))?;
            write(&dir.join(format!("{stem}.scheme")), &write_scheme(&h.witness))?;
        }
    }
    let examples: Vec<Value> = hits
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let p = &h.profile;
            json!({
                "index": i + 1,
                "states": [state_rows(&p.states[0]), state_rows(&p.states[1])],
                "individual": p.individual.iter().map(|r| r.iter().map(|&x| rate_json(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "joint": rate_json(p.joint),
                "pairwise": to_value(&p.pairwise),
                "pass": p.pass,
                "witness": write_scheme(&h.witness),
            })
        })
        .collect();
    let mut text = format!("{} example pairs over GF({}) ({} mode)\n", hits.len(), a.p, mode.name());
    for (i, h) in hits.iter().enumerate() {
        let _ = writeln!(
            text,
            "  {:>3}  {}  |  {}  joint {}",
            i + 1,
            h.profile.states[0],
            h.profile.states[1],
            h.profile.joint
        );
    }
    let report = json!({
        "p": a.p,
        "mode": to_value(&mode),
        "raw": a.raw,
        "count": hits.len(),
        "examples": examples,
    });
    let cfg = json!({ "command": "find-examples", "p": a.p, "mode": to_value(&mode), "raw": a.raw });
    let seed = matches!(a.mode, DecodeChoice::Generic).then_some(a.seed);
    Ok(Outcome {
        json: envelope("find-examples", report, provenance(&cfg, seed, json!({ "mode": mode.name() })), started),
        text,
        exit_code: 0,
    })
}

/// Four-part compositions of `steps`, as fractions over `steps`.
fn grid(steps: usize, symmetric: bool) -> Vec<[i64; 4]> {
    let s = steps as i64;
    let mut out = Vec::new();
    for a in 0..=s {
        for b in 0..=s - a {
            if symmetric && a != b {
                continue;
            }
            for c in 0..=s - a - b {
                out.push([a, b, c, s - a - b - c]);
            }
        }
    }
    out
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    if a.steps == 0 || a.n == 0 {
        return Err(CliError::Usage("--steps and --n must be positive".into()));
    }
    if a.scenario == Scenario::Ic3Example {
        return Err(CliError::Usage("sweep covers the two-user scenarios".into()));
    }
    let f = field(a.p)?;
    let symmetric = a.scenario != Scenario::Ic2;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "lambda_a", "lambda_b", "lambda_c", "lambda_d", "capacity", "capacity_decimal", "schedule_rate",
        "schedule_rate_decimal", "baseline", "gain", "z_bound", "mac_bound_1", "mac_bound_2",
    ];
    let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    let mut rows = 0;
    for parts in grid(a.steps, symmetric) {
        let fr = StateFractions::new(parts.iter().map(|&x| alttim_core::Rational::new(x, a.steps as i64)).collect())
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let capacity = simulate::formula_for(a.scenario, &fr)
            .ok_or_else(|| CliError::Internal("formula missing on a symmetric grid".into()))?
            .value;
        let scheme = match a.scenario {
            Scenario::Ic2 => build_schedule_ic2(&fr, a.n, f)?,
            Scenario::X2 => build_schedule_x2(&fr, a.n, f)?,
            _ => build_schedule_bc2(&fr, a.n, f)?,
        };
        let mut record: Vec<String> = fr.to_strings();
        record.push(capacity.to_string());
        record.push(capacity.decimal());
        record.push(scheme.rate().to_string());
        record.push(scheme.rate().decimal());
        if a.scenario == Scenario::Bc2 {
            record.extend(std::iter::repeat_n(String::new(), 5));
        } else {
            let (baseline, gain) = baseline_and_gain_ic2(&fr)?;
            let b = outer_bounds_ic2(&fr)?;
            record.extend([baseline, gain, b.z_bound, b.mac_bound_1, b.mac_bound_2].iter().map(|v| v.to_string()));
        }
        w.write_record(&record).map_err(csv_err)?;
        rows += 1;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    let csv_text = String::from_utf8(bytes).expect("csv output is utf-8");
    let text = match &a.csv {
        Some(path) => {
            write(path, &csv_text)?;
            format!("{rows} rows written to {}\n", path.display())
        }
        None => csv_text,
    };
    let cfg = json!({ "command": "sweep", "scenario": a.scenario, "steps": a.steps, "n": a.n, "p": a.p });
    Ok(Outcome {
        json: envelope("sweep", json!({ "rows": rows }), provenance(&cfg, None, json!({})), started),
        text,
        exit_code: 0,
    })
}

pub fn cmd_export(a: &ExportArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let scheme = match (a.builtin, a.scenario) {
        (Some(b), _) => load_scheme(&None, Some(b), a.p)?.0,
        (None, Some(scenario)) => {
            let cfg = SimConfig {
                scenario,
                fractions: a.lambda.clone().unwrap_or_default().split(',').map(|s| s.trim().to_string()).collect(),
                p: a.p.unwrap_or(5),
                n: a.n,
                seed: 0,
                sequence_mode: SequenceMode::Quota,
                decode_mode: DecodeChoice::Worst,
                states: if scenario == Scenario::Ic3Example {
                    let blocks = parse_state_blocks(EXAMPLE_1).map_err(|e| CliError::Internal(e.to_string()))?;
                    Some([blocks[0].grid_rows(), blocks[1].grid_rows()])
                } else {
                    None
                },
            };
            simulate::build_schedule(&cfg)?.0
        }
        (None, None) => return Err(CliError::Usage("give --builtin or --scenario with --lambda".into())),
    };
    let text = write_scheme(&scheme);
    let shown = match &a.file {
        Some(path) => {
            write(path, &text)?;
            format!("scheme with {} slots and {} symbols written to {}\n", scheme.slots(), scheme.symbol_count(), path.display())
        }
        None => text.clone(),
    };
    let cfg = json!({ "command": "export-scheme", "scheme": text });
    Ok(Outcome {
        json: envelope(
            "export-scheme",
            json!({ "slots": scheme.slots(), "symbols": scheme.symbol_count(), "rate": rate_json(scheme.rate()) }),
            provenance(&cfg, None, json!({})),
            started,
        ),
        text: shown,
        exit_code: 0,
    })
}

/// Drops the `timing` block, leaving the part of a report that must be
/// reproducible.
pub fn without_timing(mut v: Value) -> Value {
    if let Some(map) = v.as_object_mut() {
        map.remove("timing");
    }
    v
}
