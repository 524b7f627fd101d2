//! Exhaustive search for the best one-shot linear scheme on short sequences.
//!
//! The quantity found is the linear zero-error optimum at a fixed block
//! length: the largest `M / n` such that some interference-channel scheme
//! sending `M` symbols is decodable by every receiver.
//!
//! Search space. Transmitter `t` sends `m_t` symbols through an `n x m_t`
//! encoder. Its columns are taken canonical (first nonzero entry 1), sorted
//! and linearly independent. Rescaling a column relabels a symbol and
//! permuting columns reorders symbols, so neither changes decodability. A
//! transmitter whose own columns are dependent can never be decoded by its
//! receiver: the dependency is a null vector of that receiver's matrix
//! touching a desired symbol. No rate is lost by the pruning.
//!
//! Order. Totals `M` go from high to low; within a total, allocations
//! `(m_1, ..., m_K)` go in descending lexicographic order, and within an
//! allocation encoders go in ascending lexicographic order of their
//! flattened entries (transmitter-major, row-major). The first decodable
//! candidate in this order is the witness, so parallel runs agree with
//! sequential ones.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::{Field, Matrix};
use crate::rational::RateValue;
use crate::scheme::{ic_scheme_from_columns, LinearScheme, MessageMode, SchemeError};
use crate::topology::{sample_link_values, StateAlphabet, StateSequence, TopologyState, DEFAULT_ENUMERATION_GUARD};
use crate::verifier::{
    all_realizations_pass_normalized, generic_check, shard_ranges, worst_case_check, CompiledScheme, VerifyError,
};

/// How the quantity is labelled in reports.
pub const QUANTITY_LABEL: &str = "linear zero-error optimum";

/// Default cap on the number of encoder candidates a search may enumerate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search space holds {required} encoder candidates, over the budget of {budget}; raise --budget or shrink the instance")]
    Budget { required: u128, budget: u64 },
    #[error("only the interference-channel message template can be searched, got {0}")]
    UnsupportedTemplate(&'static str),
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("max symbols per transmitter must be at least 1")]
    NoSymbols,
    #[error("expected {expected} users, got {got}")]
    Users { expected: usize, got: usize },
    #[error("witness failed re-verification: {0}")]
    WitnessRejected(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecodeMode {
    /// Decodable at every realization.
    WorstCase,
    /// No failure among `trials` sampled realizations.
    Generic { trials: u64, seed: u64 },
}

impl DecodeMode {
    pub fn name(&self) -> &'static str {
        match self {
            DecodeMode::WorstCase => "worst-case",
            DecodeMode::Generic { .. } => "generic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub sequence: StateSequence,
    pub field: Field,
    pub template: MessageMode,
    pub mode: DecodeMode,
    pub max_symbols: usize,
    pub budget: u64,
    /// Contiguous index ranges per symbol total; 0 means one per thread.
    pub shards: usize,
}

impl SearchSpec {
    /// Worst-case search with at most `n` symbols per transmitter.
    pub fn new(sequence: StateSequence, field: Field) -> Self {
        let n = sequence.len();
        SearchSpec {
            sequence,
            field,
            template: MessageMode::Ic,
            mode: DecodeMode::WorstCase,
            max_symbols: n,
            budget: DEFAULT_BUDGET,
            shards: 0,
        }
    }

    pub fn with_max_symbols(mut self, m: usize) -> Self {
        self.max_symbols = m;
        self
    }

    pub fn with_mode(mut self, mode: DecodeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub best_rate: RateValue,
    pub best_symbols: usize,
    pub allocation: Vec<usize>,
    pub witness: Option<LinearScheme>,
    /// Candidates in search order up to and including the witness.
    pub candidates_examined: u64,
    /// Size of the canonical encoder space counted against the budget.
    pub space_size: u128,
    /// Every higher total was refuted over the whole space at every
    /// realization; only worst-case searches can claim this.
    pub exhaustive: bool,
}

/// Canonical columns of `GF(p)^n` in lexicographic order.
fn canonical_columns(field: Field, n: usize) -> Vec<Vec<u32>> {
    let p = field.modulus();
    let mut out = Vec::new();
    let mut v = vec![0u32; n];
    loop {
        if let Some(first) = v.iter().find(|&&x| x != 0) {
            if *first == 1 {
                out.push(v.clone());
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            v[i] += 1;
            if v[i] < p {
                break;
            }
            v[i] = 0;
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Allocations with each entry in `0..=cap` summing to `total`, in
/// descending lexicographic order.
fn allocations(users: usize, cap: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(users: usize, cap: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == users {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let rest = users - cur.len() - 1;
        for m in (0..=cap.min(left)).rev() {
            if left - m > rest * cap {
                break;
            }
            cur.push(m);
            rec(users, cap, left - m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(users, cap, total, &mut Vec::new(), &mut out);
    out
}

/// Sorted independent `m`-subsets of `cols`, ordered by the row-major
/// flattening of the `n x m` encoder they form.
fn encoder_sets(field: Field, cols: &[Vec<u32>], n: usize, m: usize) -> Vec<Vec<Vec<u32>>> {
    let mut out: Vec<(Vec<u32>, Vec<Vec<u32>>)> = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    if m > cols.len() {
        return Vec::new();
    }
    loop {
        let chosen: Vec<Vec<u32>> = idx.iter().map(|&i| cols[i].clone()).collect();
        let independent = m == 0 || {
            let rows: Vec<Vec<i64>> = chosen.iter().map(|c| c.iter().map(|&x| x as i64).collect()).collect();
            Matrix::from_rows(field, &rows).map(|mat| mat.rank() == m).unwrap_or(false)
        };
        if independent {
            let flat = (0..n).flat_map(|r| chosen.iter().map(move |c| c[r])).collect();
            out.push((flat, chosen));
        }
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                out.sort();
                return out.into_iter().map(|(_, c)| c).collect();
            }
            i -= 1;
            if idx[i] < cols.len() - m + i {
                idx[i] += 1;
                for j in i + 1..m {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

struct Level<'a> {
    allocs: Vec<Vec<usize>>,
    /// Cumulative candidate counts, one entry per allocation plus a leading 0.
    offsets: Vec<u64>,
    sets: &'a [Vec<Vec<Vec<u32>>>],
}

impl Level<'_> {
    fn total(&self) -> u64 {
        *self.offsets.last().unwrap()
    }

    fn candidate(&self, index: u64) -> (usize, Vec<Vec<Vec<u32>>>) {
        let a = self.offsets.partition_point(|&o| o <= index) - 1;
        let alloc = &self.allocs[a];
        let mut rem = index - self.offsets[a];
        let mut cols = vec![Vec::new(); alloc.len()];
        for t in (0..alloc.len()).rev() {
            let list = &self.sets[alloc[t]];
            let base = list.len() as u64;
            cols[t] = list[(rem % base) as usize].clone();
            rem /= base;
        }
        (a, cols)
    }
}

fn candidate_passes(scheme: &LinearScheme, mode: DecodeMode) -> Result<bool, OracleError> {
    let compiled = CompiledScheme::new(scheme);
    match mode {
        DecodeMode::WorstCase => {
            Ok(all_realizations_pass_normalized(&compiled, scheme.sequence(), DEFAULT_ENUMERATION_GUARD)?)
        }
        DecodeMode::Generic { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut scratch = Vec::new();
            for _ in 0..trials {
                let values = sample_link_values(compiled.link_count(), scheme.field(), &mut rng);
                if !compiled.all_ok(&values, &mut scratch) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Re-checks a witness with the verifier's full (unnormalized) checks.
fn reverify(scheme: &LinearScheme, mode: DecodeMode) -> Result<(), OracleError> {
    let report = match mode {
        DecodeMode::WorstCase => worst_case_check(scheme, DEFAULT_ENUMERATION_GUARD)?,
        DecodeMode::Generic { trials, seed } => generic_check(scheme, trials, seed)?,
    };
    if report.verdict {
        Ok(())
    } else {
        Err(OracleError::WitnessRejected(format!(
            "{} of {} realizations fail",
            report.failures, report.realizations_checked
        )))
    }
}

/// Largest decodable symbol total for the search parameters, with its witness.
pub fn max_linear_rate(spec: &SearchSpec) -> Result<SearchResult, OracleError> {
    if spec.template != MessageMode::Ic {
        return Err(OracleError::UnsupportedTemplate(spec.template.as_str()));
    }
    if spec.budget == 0 {
        return Err(OracleError::ZeroBudget);
    }
    if spec.max_symbols == 0 {
        return Err(OracleError::NoSymbols);
    }
    let seq = &spec.sequence;
    let n = seq.len();
    let k = seq.users();
    let cap = spec.max_symbols.min(n);
    let cols = canonical_columns(spec.field, n);

    // per-transmitter choices are counted before independence pruning
    let per_user: u128 = (0..=cap).map(|m| binomial(cols.len() as u128, m as u128)).sum();
    let space_size = (0..k).fold(1u128, |acc, _| acc.saturating_mul(per_user));
    if space_size > spec.budget as u128 {
        return Err(OracleError::Budget {
            required: space_size,
            budget: spec.budget,
        });
    }

    let sets: Vec<Vec<Vec<Vec<u32>>>> = (0..=cap).map(|m| encoder_sets(spec.field, &cols, n, m)).collect();
    let shards = if spec.shards == 0 {
        rayon::current_num_threads()
    } else {
        spec.shards
    };
    let mut examined = 0u64;
    for total in (1..=cap * k).rev() {
        let allocs = allocations(k, cap, total);
        let mut offsets = vec![0u64];
        for a in &allocs {
            let count = a.iter().fold(1u64, |acc, &m| acc * sets[m].len() as u64);
            offsets.push(offsets.last().unwrap() + count);
        }
        let level = Level {
            allocs,
            offsets,
            sets: &sets,
        };
        let best = AtomicU64::new(u64::MAX);
        let first_error: Mutex<Option<(u64, OracleError)>> = Mutex::new(None);
        shard_ranges(level.total(), shards).into_par_iter().for_each(|(a, b)| {
            for idx in a..b {
                if idx >= best.load(Ordering::Relaxed) {
                    return;
                }
                let (_, cols) = level.candidate(idx);
                let outcome = ic_scheme_from_columns(seq, spec.field, &cols)
                    .map_err(OracleError::from)
                    .and_then(|s| candidate_passes(&s, spec.mode));
                match outcome {
                    Ok(true) => {
                        best.fetch_min(idx, Ordering::Relaxed);
                        return;
                    }
                    Ok(false) => {}
                    Err(e) => {
                        let mut slot = first_error.lock().unwrap();
                        if slot.as_ref().is_none_or(|(i, _)| idx < *i) {
                            *slot = Some((idx, e));
                        }
                        best.fetch_min(idx, Ordering::Relaxed);
                        return;
                    }
                }
            }
        });
        let best = best.into_inner();
        if let Some((i, e)) = first_error.into_inner().unwrap() {
            if i <= best {
                return Err(e);
            }
        }
        if best == u64::MAX {
            examined += level.total();
            continue;
        }
        examined += best + 1;
        let (a, cols) = level.candidate(best);
        let witness = ic_scheme_from_columns(seq, spec.field, &cols)?;
        reverify(&witness, spec.mode)?;
        return Ok(SearchResult {
            best_rate: RateValue::from_ratio(total as i64, n as i64),
            best_symbols: total,
            allocation: level.allocs[a].clone(),
            witness: Some(witness),
            candidates_examined: examined,
            space_size,
            exhaustive: spec.mode == DecodeMode::WorstCase,
        });
    }
    Ok(SearchResult {
        best_rate: RateValue::integer(0),
        best_symbols: 0,
        allocation: vec![0; k],
        witness: None,
        candidates_examined: examined,
        space_size,
        exhaustive: spec.mode == DecodeMode::WorstCase,
    })
}

fn pair_sequence(a: &TopologyState, b: &TopologyState) -> StateSequence {
    let alphabet = StateAlphabet::numbered(vec![a.clone(), b.clone()]).expect("states share a user count");
    StateSequence::new(alphabet, vec![0, 1]).expect("two valid slots")
}

fn repeated_sequence(s: &TopologyState, n: usize) -> StateSequence {
    let alphabet = StateAlphabet::numbered(vec![s.clone()]).expect("one state");
    StateSequence::new(alphabet, vec![0; n]).expect("valid slots")
}

fn rate_of(seq: StateSequence, field: Field, cap: usize, mode: DecodeMode) -> Result<SearchResult, OracleError> {
    max_linear_rate(&SearchSpec::new(seq, field).with_max_symbols(cap).with_mode(mode))
}

/// User pairs of a 3-user network, in order.
pub const USER_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairRate {
    /// 1-based users kept after silencing the third transmitter.
    pub users: (usize, usize),
    pub rate: RateValue,
}

/// For each user pair, silences the third transmitter, restricts both
/// states to the pair and finds the best rate over the 2-slot sequence.
pub fn pairwise_bound_check(pair: &[TopologyState; 2], field: Field) -> Result<Vec<PairRate>, OracleError> {
    pairwise_with(pair, field, DecodeMode::WorstCase, &Mutex::new(HashMap::new()))
}

type PairCache = Mutex<HashMap<(TopologyState, TopologyState), RateValue>>;

fn pairwise_with(
    pair: &[TopologyState; 2],
    field: Field,
    mode: DecodeMode,
    cache: &PairCache,
) -> Result<Vec<PairRate>, OracleError> {
    for s in pair {
        if s.users() != 3 {
            return Err(OracleError::Users {
                expected: 3,
                got: s.users(),
            });
        }
    }
    USER_PAIRS
        .iter()
        .map(|&(i, j)| {
            let a = pair[0].restrict(&[i, j]);
            let b = pair[1].restrict(&[i, j]);
            let key = (a.clone(), b.clone());
            if let Some(&rate) = cache.lock().unwrap().get(&key) {
                return Ok(PairRate {
                    users: (i + 1, j + 1),
                    rate,
                });
            }
            let rate = rate_of(pair_sequence(&a, &b), field, 2, mode)?.best_rate;
            cache.lock().unwrap().insert(key, rate);
            Ok(PairRate {
                users: (i + 1, j + 1),
                rate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExampleProfile {
    pub states: [TopologyState; 2],
    /// Per state: best rate over one slot and over two slots of that state.
    pub individual: [[RateValue; 2]; 2],
    /// Best rate on the two-slot sequence with one symbol per user.
    pub joint: RateValue,
    pub pairwise: Vec<PairRate>,
    pub pass: bool,
}

impl ExampleProfile {
    fn evaluate(
        states: [TopologyState; 2],
        individual: [[RateValue; 2]; 2],
        joint: RateValue,
        pairwise: Vec<PairRate>,
    ) -> Self {
        let one = RateValue::integer(1);
        let pass = individual.iter().flatten().all(|&r| r == one)
            && joint >= RateValue::from_ratio(3, 2)
            && pairwise.iter().all(|p| p.rate <= one);
        ExampleProfile {
            states,
            individual,
            joint,
            pairwise,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleHit {
    pub profile: ExampleProfile,
    pub witness: LinearScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleSearch {
    pub field: Field,
    pub mode: DecodeMode,
    /// Keep every ordered pair instead of one per user relabeling class.
    pub raw: bool,
}

impl ExampleSearch {
    pub fn new(field: Field) -> Self {
        ExampleSearch {
            field,
            mode: DecodeMode::WorstCase,
            raw: false,
        }
    }
}

const PERMUTATIONS_3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Smallest cross-mask pair over the six simultaneous user relabelings.
pub fn canonical_pair_key(a: &TopologyState, b: &TopologyState) -> (u64, u64) {
    PERMUTATIONS_3
        .iter()
        .map(|p| (a.permute(p).cross_mask(), b.permute(p).cross_mask()))
        .min()
        .unwrap()
}

/// Profile of one 3-user state pair, computed from scratch.
pub fn example_profile(pair: &[TopologyState; 2], field: Field, mode: DecodeMode) -> Result<(ExampleProfile, Option<LinearScheme>), OracleError> {
    let mut individual = [[RateValue::integer(0); 2]; 2];
    for (i, s) in pair.iter().enumerate() {
        individual[i] = individual_rates(s, field, mode)?;
    }
    let pairwise = pairwise_with(pair, field, mode, &Mutex::new(HashMap::new()))?;
    let joint = rate_of(pair_sequence(&pair[0], &pair[1]), field, 1, mode)?;
    Ok((
        ExampleProfile::evaluate(pair.clone(), individual, joint.best_rate, pairwise),
        joint.witness,
    ))
}

fn individual_rates(s: &TopologyState, field: Field, mode: DecodeMode) -> Result<[RateValue; 2], OracleError> {
    Ok([
        rate_of(repeated_sequence(s, 1), field, 1, mode)?.best_rate,
        rate_of(repeated_sequence(s, 2), field, 2, mode)?.best_rate,
    ])
}

/// Every ordered pair of 3-user states (diagonals present) that passes the
/// example profile, deduplicated by user relabeling unless `raw` is set.
/// Results are ordered by the cross masks of the two states.
pub fn find_example_topologies(search: &ExampleSearch) -> Result<Vec<ExampleHit>, OracleError> {
    let states: Vec<TopologyState> = (0..64u64).map(|m| TopologyState::from_cross_mask(3, m)).collect();
    let individual: Vec<[RateValue; 2]> = states
        .par_iter()
        .map(|s| individual_rates(s, search.field, search.mode))
        .collect::<Result<_, _>>()?;
    let one = RateValue::integer(1);
    let cache: PairCache = Mutex::new(HashMap::new());
    let candidates: Vec<(usize, usize)> = (0..64)
        .flat_map(|a| (0..64).map(move |b| (a, b)))
        .filter(|&(a, b)| individual[a] == [one, one] && individual[b] == [one, one])
        .filter(|&(a, b)| {
            search.raw || canonical_pair_key(&states[a], &states[b]) == (states[a].cross_mask(), states[b].cross_mask())
        })
        .collect();
    let hits: Vec<Option<ExampleHit>> = candidates
        .par_iter()
        .map(|&(a, b)| {
            let pair = [states[a].clone(), states[b].clone()];
            let pairwise = pairwise_with(&pair, search.field, search.mode, &cache)?;
            if pairwise.iter().any(|p| p.rate > one) {
                return Ok(None);
            }
            let joint = rate_of(pair_sequence(&pair[0], &pair[1]), search.field, 1, search.mode)?;
            let profile = ExampleProfile::evaluate(pair, [individual[a], individual[b]], joint.best_rate, pairwise);
            Ok(match (profile.pass, joint.witness) {
                (true, Some(witness)) => Some(ExampleHit { profile, witness }),
                _ => None,
            })
        })
        .collect::<Result<_, OracleError>>()?;
    Ok(hits.into_iter().flatten().collect())
}
