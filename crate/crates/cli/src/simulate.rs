//! One block of a schedule pushed through encoder, channel and decoders.
//!
//! Randomness comes from three seeded streams: message symbols use `seed`,
//! channel coefficients `seed + 1` and i.i.d. state draws `seed + 2`.
//! Schedules are laid out over the whole realized state sequence, so the
//! i.i.d. mode schedules offline, with hindsight.

use alttim_core::capacity::{outer_bounds_ic2, theorem1_sum_capacity, theorem2_sum_capacity, theorem3_sum_capacity, BoundSet, IC_THEOREM, X_THEOREM, BC_THEOREM};
use alttim_core::oracle::{max_linear_rate, DecodeMode, SearchSpec};
use alttim_core::scheme::{schedule_bc2_on, schedule_ic2_on, schedule_pair_on, schedule_x2_on};
use alttim_core::topology::{iid_sequence, sample_realization, state_quota_sequence, StateAlphabet};
use alttim_core::{Field, LinearScheme, RateValue, StateFractions, StateSequence, TopologyState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{DecodeChoice, Scenario, SequenceMode};
use crate::CliError;

/// Everything that determines a simulation outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub fractions: Vec<String>,
    pub p: u32,
    pub n: usize,
    pub seed: u64,
    pub sequence_mode: SequenceMode,
    pub decode_mode: DecodeChoice,
    /// The two 3-user states of ic3-example, as grid rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<[Vec<String>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaValue {
    pub name: &'static str,
    pub value: RateValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub scenario: Scenario,
    pub fractions: Vec<String>,
    pub n: usize,
    pub p: u32,
    pub achieved_rate: RateValue,
    /// Scheduled symbols over `n`, before any decoding.
    pub scheduled_rate: RateValue,
    pub formula: Option<FormulaValue>,
    pub bounds: Option<BoundSet>,
    pub gap: Option<RateValue>,
    pub symbols_sent: usize,
    pub symbols_decoded: usize,
    pub decode_failures: usize,
    /// Slots per state label in the realized sequence.
    pub state_counts: Vec<(String, usize)>,
    /// Failures are impossible for this schedule, so any failure is a bug.
    pub certified: bool,
}

const PAIR_TARGET: &str = "joint pair coding target 1 + min(λ_1, λ_2)";

fn field(p: u32) -> Result<Field, CliError> {
    Field::new(p).map_err(|e| CliError::Usage(format!("--p {p}: {e}")))
}

fn decode_mode(choice: DecodeChoice, seed: u64) -> DecodeMode {
    match choice {
        DecodeChoice::Worst => DecodeMode::WorstCase,
        DecodeChoice::Generic => DecodeMode::Generic { trials: 1000, seed },
    }
}

/// The formula a scenario is compared against, if one is known for the
/// given fractions.
pub fn formula_for(scenario: Scenario, fr: &StateFractions) -> Option<FormulaValue> {
    match scenario {
        Scenario::Ic2 => theorem1_sum_capacity(fr).ok().map(|value| FormulaValue { name: IC_THEOREM, value }),
        Scenario::X2 => theorem2_sum_capacity(fr).ok().map(|value| FormulaValue { name: X_THEOREM, value }),
        Scenario::Bc2 => theorem3_sum_capacity(fr).ok().map(|value| FormulaValue { name: BC_THEOREM, value }),
        Scenario::Ic3Example => Some(FormulaValue {
            name: PAIR_TARGET,
            value: RateValue::new(fr.get(0).min(fr.get(1))) + RateValue::integer(1),
        }),
    }
}

fn build_sequence(cfg: &SimConfig, alphabet: StateAlphabet, fr: &StateFractions) -> Result<StateSequence, CliError> {
    let seq = match cfg.sequence_mode {
        SequenceMode::Quota => state_quota_sequence(alphabet, fr, cfg.n),
        SequenceMode::Iid => iid_sequence(alphabet, fr, cfg.n, cfg.seed.wrapping_add(2)),
    };
    seq.map_err(|e| CliError::Usage(e.to_string()))
}

/// Finds a joint code for the pair, as the schedule's building block.
pub fn pair_witness(pair: &[TopologyState; 2], f: Field, mode: DecodeMode) -> Result<LinearScheme, CliError> {
    let alphabet = StateAlphabet::numbered(pair.to_vec()).map_err(|e| CliError::Usage(e.to_string()))?;
    let seq = StateSequence::new(alphabet, vec![0, 1]).map_err(|e| CliError::Usage(e.to_string()))?;
    let result = max_linear_rate(&SearchSpec::new(seq, f).with_max_symbols(1).with_mode(mode))?;
    match result.witness {
        Some(w) if result.best_rate >= RateValue::from_ratio(3, 2) => Ok(w),
        _ => Err(CliError::Usage(format!(
            "state pair has no joint code at rate 3/2 over GF({}) (best {})",
            f.modulus(),
            result.best_rate
        ))),
    }
}

/// Builds the scheme a configuration describes, with its sequence.
pub fn build_schedule(cfg: &SimConfig) -> Result<(LinearScheme, StateFractions), CliError> {
    if cfg.n == 0 {
        return Err(CliError::Usage("block length must be at least 1".into()));
    }
    let f = field(cfg.p)?;
    let joined = cfg.fractions.join(",");
    match cfg.scenario {
        Scenario::Ic3Example => {
            let fr = StateFractions::parse(&joined, 2).map_err(|e| CliError::Usage(format!("--lambda: {e}")))?;
            let rows = cfg
                .states
                .as_ref()
                .ok_or_else(|| CliError::Usage("ic3-example needs two 3-user states".into()))?;
            let pair = [
                TopologyState::from_rows(&rows[0]).map_err(|e| CliError::Usage(e.to_string()))?,
                TopologyState::from_rows(&rows[1]).map_err(|e| CliError::Usage(e.to_string()))?,
            ];
            if pair[0].users() != 3 || pair[1].users() != 3 {
                return Err(CliError::Usage("ic3-example states must have three users".into()));
            }
            let witness = pair_witness(&pair, f, decode_mode(cfg.decode_mode, cfg.seed))?;
            let seq = build_sequence(cfg, witness.sequence().alphabet().clone(), &fr)?;
            let scheme = schedule_pair_on(&seq, &witness)?;
            Ok((scheme, fr))
        }
        two_user => {
            let fr = StateFractions::parse(&joined, 4).map_err(|e| CliError::Usage(format!("--lambda: {e}")))?;
            if two_user == Scenario::Bc2 && !f.meets_theorem_preconditions() {
                return Err(CliError::Usage("the broadcast schedule needs a field larger than GF(2)".into()));
            }
            let seq = build_sequence(cfg, StateAlphabet::two_user(), &fr)?;
            let scheme = match two_user {
                Scenario::Ic2 => schedule_ic2_on(&seq, f)?,
                Scenario::X2 => schedule_x2_on(&seq, f)?,
                _ => schedule_bc2_on(&seq, f)?,
            };
            Ok((scheme, fr))
        }
    }
}

/// Runs one block and reports the achieved rate against the formula.
pub fn simulate(cfg: &SimConfig) -> Result<RateReport, CliError> {
    let (scheme, fr) = build_schedule(cfg)?;
    let f = scheme.field();
    let seq = scheme.sequence();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let messages: Vec<u32> = (0..scheme.symbol_count()).map(|_| rng.gen_range(0..f.modulus())).collect();
    let real = sample_realization(seq, f, cfg.seed.wrapping_add(1));
    let y = scheme.receive(&real, &messages)?;
    let mut decoded = 0;
    let mut failures = 0;
    for (r, yr) in y.iter().enumerate() {
        for (j, v) in scheme.decode(&real, r, yr)? {
            if v == Some(messages[j]) {
                decoded += 1;
            } else {
                failures += 1;
            }
        }
    }
    let certified = cfg.scenario != Scenario::Ic3Example || cfg.decode_mode == DecodeChoice::Worst;
    if certified && failures > 0 {
        return Err(CliError::Internal(format!(
            "{failures} desired symbols failed to decode in a schedule that decodes at every realization"
        )));
    }
    let n = cfg.n as i64;
    let achieved = RateValue::from_ratio(decoded as i64, n);
    let formula = formula_for(cfg.scenario, &fr);
    let bounds = match cfg.scenario {
        Scenario::Ic2 | Scenario::X2 => outer_bounds_ic2(&fr).ok(),
        _ => None,
    };
    let alphabet = seq.alphabet();
    Ok(RateReport {
        scenario: cfg.scenario,
        fractions: fr.to_strings(),
        n: cfg.n,
        p: cfg.p,
        achieved_rate: achieved,
        scheduled_rate: scheme.rate(),
        gap: formula.as_ref().map(|fv| fv.value - achieved),
        formula,
        bounds,
        symbols_sent: scheme.symbol_count(),
        symbols_decoded: decoded,
        decode_failures: failures,
        state_counts: (0..alphabet.len())
            .map(|i| (alphabet.label(i).to_string(), seq.count(i)))
            .collect(),
        certified,
    })
}
