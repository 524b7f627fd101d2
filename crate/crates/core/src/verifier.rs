//! Zero-error decodability of linear schemes.
//!
//! Receiver `r` decodes symbol `j` iff the unit vector `e_j` lies in the row
//! space of its effective matrix `M_r`. Receivers know every coefficient, so
//! this criterion is exact for one-shot linear schemes.
//!
//! Checks come in four flavours: a single realization, every realization
//! (worst case), a seeded sample (generic), and the exact failing fraction.
//! Exhaustive passes may be split into contiguous shards; the reduction
//! (AND of verdicts, sum of counts, minimum failing index) does not depend on
//! shard count or order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::{rref_in_place, unit_in_rowspace, Field, Matrix};
use crate::rational::RateValue;
use crate::scheme::{LinearScheme, SchemeError};
use crate::topology::{
    sample_link_values, ChannelRealization, RealizationSpace, StateSequence, TopologyError, RNG_ALGORITHM,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("{count} realizations exceed the enumeration guard of {guard}; use the sampled generic check instead")]
    GuardExceeded { count: u128, guard: u64 },
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("receiver {0} out of range")]
    NoSuchReceiver(usize),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

impl From<TopologyError> for VerifyError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::TooLargeToEnumerate { count, guard } => VerifyError::GuardExceeded { count, guard },
            other => VerifyError::Scheme(SchemeError::Topology(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    Single,
    WorstCase,
    GenericSampled,
    ExhaustiveFraction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReceiverVerdict {
    /// 1-based receiver index.
    pub receiver: usize,
    pub decodable: bool,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FailureFraction {
    Exact { value: RateValue },
    Estimate { value: f64, std_error: f64, trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// Position in the lexicographic realization order (exhaustive modes) or
    /// trial number (sampled mode).
    pub index: u64,
    pub link_values: Vec<u32>,
    pub realization: ChannelRealization,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodabilityReport {
    pub mode: CheckMode,
    pub field: u32,
    pub slots: usize,
    pub symbols: usize,
    pub rate: RateValue,
    pub verdict: bool,
    pub realizations_checked: u64,
    pub failures: u64,
    pub failure_fraction: FailureFraction,
    pub receivers: Vec<ReceiverVerdict>,
    pub counterexample: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<&'static str>,
}

/// Decides `e_j ∈ rowspace(m)` for every listed column, by rank comparison.
pub fn decodable_from_matrix(m: &Matrix, desired: &[usize]) -> bool {
    desired.iter().all(|&j| {
        let mut e = vec![0; m.cols()];
        e[j] = 1;
        m.rowspace_member(&e).expect("unit vector has the right length")
    })
}

/// Whether receiver `r` recovers every desired symbol at this realization.
pub fn receiver_decodable(scheme: &LinearScheme, real: &ChannelRealization, r: usize) -> Result<bool, VerifyError> {
    if r >= scheme.users() {
        return Err(VerifyError::NoSuchReceiver(r));
    }
    scheme.check_realization(real)?;
    let cfg = scheme.config();
    for comp in scheme.components() {
        let desired: Vec<usize> = comp
            .symbols
            .iter()
            .enumerate()
            .filter(|(_, &j)| cfg.symbols()[j].dest == r)
            .map(|(i, _)| i)
            .collect();
        if desired.is_empty() {
            continue;
        }
        if !decodable_from_matrix(&scheme.component_matrix(real, r, &comp), &desired) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Report for one given realization.
pub fn single_check(scheme: &LinearScheme, real: &ChannelRealization) -> Result<DecodabilityReport, VerifyError> {
    let mut failing = Vec::with_capacity(scheme.users());
    for r in 0..scheme.users() {
        failing.push(!receiver_decodable(scheme, real, r)?);
    }
    let verdict = !failing.iter().any(|&f| f);
    let space = RealizationSpace::new(scheme.sequence(), scheme.field());
    Ok(DecodabilityReport {
        mode: CheckMode::Single,
        field: scheme.field().modulus(),
        slots: scheme.slots(),
        symbols: scheme.symbol_count(),
        rate: scheme.rate(),
        verdict,
        realizations_checked: 1,
        failures: (!verdict) as u64,
        failure_fraction: FailureFraction::Exact {
            value: RateValue::integer((!verdict) as i64),
        },
        receivers: receiver_verdicts(failing.iter().map(|&f| f as u64)),
        counterexample: (!verdict).then(|| Counterexample {
            index: space.index_of(real),
            link_values: real.link_values(scheme.sequence()),
            realization: real.clone(),
        }),
        seed: None,
        rng: None,
    })
}

fn receiver_verdicts(failures: impl Iterator<Item = u64>) -> Vec<ReceiverVerdict> {
    failures
        .enumerate()
        .map(|(r, f)| ReceiverVerdict {
            receiver: r + 1,
            decodable: f == 0,
            failures: f,
        })
        .collect()
}

/// A scheme flattened for repeated evaluation over many realizations.
pub(crate) struct CompiledScheme {
    field: Field,
    k: usize,
    n_links: usize,
    /// `link_of[slot][r * k + t]`: index into the link-value vector.
    link_of: Vec<Vec<Option<usize>>>,
    blocks: Vec<Block>,
}

struct Block {
    slots: Vec<usize>,
    width: usize,
    /// Per transmitter, dense `slots.len() x width` encoder block.
    enc: Vec<Vec<u32>>,
    /// Per receiver, local columns it must recover.
    wanted: Vec<Vec<usize>>,
}

impl CompiledScheme {
    pub(crate) fn new(scheme: &LinearScheme) -> Self {
        let seq = scheme.sequence();
        let k = scheme.users();
        let mut link_of = vec![vec![None; k * k]; seq.len()];
        let links = seq.links();
        for (i, &(slot, r, t)) in links.iter().enumerate() {
            link_of[slot][r * k + t] = Some(i);
        }
        let cfg = scheme.config();
        let blocks = scheme
            .components()
            .into_iter()
            .map(|comp| {
                let width = comp.symbols.len();
                let enc = (0..k)
                    .map(|t| {
                        let mut e = vec![0u32; comp.slots.len() * width];
                        for (i, &slot) in comp.slots.iter().enumerate() {
                            for &(j, c) in &scheme.encoder(t)[slot] {
                                let local = comp.symbols.binary_search(&j).expect("symbol in component");
                                e[i * width + local] = c;
                            }
                        }
                        e
                    })
                    .collect();
                let wanted = (0..k)
                    .map(|r| {
                        comp.symbols
                            .iter()
                            .enumerate()
                            .filter(|(_, &j)| cfg.symbols()[j].dest == r)
                            .map(|(i, _)| i)
                            .collect()
                    })
                    .collect();
                Block {
                    slots: comp.slots,
                    width,
                    enc,
                    wanted,
                }
            })
            .collect();
        CompiledScheme {
            field: scheme.field(),
            k,
            n_links: links.len(),
            link_of,
            blocks,
        }
    }

    pub(crate) fn link_count(&self) -> usize {
        self.n_links
    }

    pub(crate) fn receiver_ok(&self, r: usize, values: &[u32], scratch: &mut Vec<u32>) -> bool {
        let f = self.field;
        let k = self.k;
        for b in &self.blocks {
            if b.wanted[r].is_empty() {
                continue;
            }
            let rows = b.slots.len();
            scratch.clear();
            scratch.resize(rows * b.width, 0);
            for (i, &slot) in b.slots.iter().enumerate() {
                for t in 0..k {
                    let Some(link) = self.link_of[slot][r * k + t] else {
                        continue;
                    };
                    let h = values[link];
                    let src = &b.enc[t][i * b.width..(i + 1) * b.width];
                    let dst = &mut scratch[i * b.width..(i + 1) * b.width];
                    for (d, &e) in dst.iter_mut().zip(src) {
                        if e != 0 {
                            *d = f.add(*d, f.mul(h, e));
                        }
                    }
                }
            }
            let pivots = rref_in_place(f, scratch, rows, b.width);
            if !b.wanted[r].iter().all(|&c| unit_in_rowspace(scratch, b.width, &pivots, c)) {
                return false;
            }
        }
        true
    }

    /// Fills `failing[r]` and returns true if any receiver fails.
    fn evaluate(&self, values: &[u32], failing: &mut [bool], scratch: &mut Vec<u32>) -> bool {
        let mut any = false;
        for (r, fail) in failing.iter_mut().enumerate().take(self.k) {
            *fail = !self.receiver_ok(r, values, scratch);
            any |= *fail;
        }
        any
    }

    pub(crate) fn all_ok(&self, values: &[u32], scratch: &mut Vec<u32>) -> bool {
        (0..self.k).all(|r| self.receiver_ok(r, values, scratch))
    }
}

/// Odometer over link values `1..p`, restricted to a subset of free links;
/// fixed links stay at 1.
pub(crate) struct Odometer {
    base: u64,
    free: Vec<usize>,
    values: Vec<u32>,
}

impl Odometer {
    pub(crate) fn new(field: Field, n_links: usize, free: Vec<usize>, start: u64) -> Self {
        let base = (field.modulus() - 1) as u64;
        let mut values = vec![1u32; n_links];
        let mut idx = start;
        for &l in free.iter().rev() {
            values[l] = (idx % base) as u32 + 1;
            idx /= base;
        }
        Odometer { base, free, values }
    }

    pub(crate) fn values(&self) -> &[u32] {
        &self.values
    }

    pub(crate) fn advance(&mut self) {
        for &l in self.free.iter().rev() {
            if (self.values[l] as u64) < self.base {
                self.values[l] += 1;
                return;
            }
            self.values[l] = 1;
        }
    }

    pub(crate) fn cardinality(field: Field, free: usize) -> u128 {
        let base = (field.modulus() - 1) as u128;
        (0..free).fold(1u128, |acc, _| acc.saturating_mul(base))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ScanOutcome {
    checked: u64,
    failures: u64,
    per_receiver: Vec<u64>,
    first_failure: Option<u64>,
}

impl ScanOutcome {
    fn merge(mut self, other: ScanOutcome) -> ScanOutcome {
        self.checked += other.checked;
        self.failures += other.failures;
        if self.per_receiver.len() < other.per_receiver.len() {
            self.per_receiver.resize(other.per_receiver.len(), 0);
        }
        for (a, b) in self.per_receiver.iter_mut().zip(&other.per_receiver) {
            *a += b;
        }
        self.first_failure = match (self.first_failure, other.first_failure) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

fn scan_range(c: &CompiledScheme, start: u64, end: u64) -> ScanOutcome {
    let free: Vec<usize> = (0..c.n_links).collect();
    let mut odo = Odometer::new(c.field, c.n_links, free, start);
    let mut failing = vec![false; c.k];
    let mut scratch = Vec::new();
    let mut out = ScanOutcome {
        per_receiver: vec![0; c.k],
        ..Default::default()
    };
    for idx in start..end {
        if c.evaluate(odo.values(), &mut failing, &mut scratch) {
            out.failures += 1;
            out.first_failure.get_or_insert(idx);
            for (acc, &f) in out.per_receiver.iter_mut().zip(&failing) {
                *acc += f as u64;
            }
        }
        out.checked += 1;
        odo.advance();
    }
    out
}

/// Splits `[0, total)` into `shards` contiguous ranges.
pub(crate) fn shard_ranges(total: u64, shards: usize) -> Vec<(u64, u64)> {
    let shards = shards.max(1) as u64;
    let chunk = total.div_ceil(shards).max(1);
    (0..shards)
        .map(|s| ((s * chunk).min(total), ((s + 1) * chunk).min(total)))
        .filter(|(a, b)| a < b)
        .collect()
}

fn exhaustive_scan(scheme: &LinearScheme, guard: u64, shards: usize) -> Result<(ScanOutcome, u64), VerifyError> {
    let space = RealizationSpace::new(scheme.sequence(), scheme.field());
    let total = space.check_guard(guard)?;
    let compiled = CompiledScheme::new(scheme);
    let outcome = shard_ranges(total, shards)
        .into_par_iter()
        .map(|(a, b)| scan_range(&compiled, a, b))
        .reduce(ScanOutcome::default, ScanOutcome::merge);
    Ok((outcome, total))
}

fn default_shards() -> usize {
    rayon::current_num_threads()
}

/// Checks every realization of the scheme's sequence.
pub fn worst_case_check(scheme: &LinearScheme, guard: u64) -> Result<DecodabilityReport, VerifyError> {
    worst_case_check_sharded(scheme, guard, default_shards())
}

pub fn worst_case_check_sharded(
    scheme: &LinearScheme,
    guard: u64,
    shards: usize,
) -> Result<DecodabilityReport, VerifyError> {
    exhaustive_report(scheme, guard, shards, CheckMode::WorstCase)
}

fn exhaustive_report(
    scheme: &LinearScheme,
    guard: u64,
    shards: usize,
    mode: CheckMode,
) -> Result<DecodabilityReport, VerifyError> {
    let (outcome, total) = exhaustive_scan(scheme, guard, shards)?;
    let space = RealizationSpace::new(scheme.sequence(), scheme.field());
    let counterexample = outcome.first_failure.map(|index| {
        let realization = space.realization_at(index);
        Counterexample {
            index,
            link_values: space.values_at(index),
            realization,
        }
    });
    Ok(DecodabilityReport {
        mode,
        field: scheme.field().modulus(),
        slots: scheme.slots(),
        symbols: scheme.symbol_count(),
        rate: scheme.rate(),
        verdict: outcome.failures == 0,
        realizations_checked: outcome.checked,
        failures: outcome.failures,
        failure_fraction: FailureFraction::Exact {
            value: RateValue::from_ratio(outcome.failures as i64, total as i64),
        },
        receivers: receiver_verdicts(outcome.per_receiver.into_iter()),
        counterexample,
        seed: None,
        rng: None,
    })
}

/// Exact fraction of realizations at which some receiver fails.
pub fn failure_fraction_exact(scheme: &LinearScheme, guard: u64) -> Result<RateValue, VerifyError> {
    let (outcome, total) = exhaustive_scan(scheme, guard, default_shards())?;
    Ok(RateValue::from_ratio(outcome.failures as i64, total as i64))
}

/// Exhaustive report labelled as a failure-fraction computation.
pub fn failure_fraction_report(scheme: &LinearScheme, guard: u64) -> Result<DecodabilityReport, VerifyError> {
    exhaustive_report(scheme, guard, default_shards(), CheckMode::ExhaustiveFraction)
}

/// Samples `trials` realizations from one seeded stream. Trial 0 is the
/// realization `sample_realization(seq, field, seed)` would return.
pub fn generic_check(scheme: &LinearScheme, trials: u64, seed: u64) -> Result<DecodabilityReport, VerifyError> {
    if trials == 0 {
        return Err(VerifyError::NoTrials);
    }
    let compiled = CompiledScheme::new(scheme);
    let seq: &StateSequence = scheme.sequence();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failing = vec![false; scheme.users()];
    let mut per_receiver = vec![0u64; scheme.users()];
    let mut scratch = Vec::new();
    let mut failures = 0u64;
    let mut counterexample = None;
    for trial in 0..trials {
        let values = sample_link_values(compiled.link_count(), scheme.field(), &mut rng);
        if compiled.evaluate(&values, &mut failing, &mut scratch) {
            failures += 1;
            for (acc, &f) in per_receiver.iter_mut().zip(&failing) {
                *acc += f as u64;
            }
            if counterexample.is_none() {
                let realization = ChannelRealization::from_link_values(seq, scheme.field(), &values)
                    .expect("sampled values respect the support");
                counterexample = Some(Counterexample {
                    index: trial,
                    link_values: values,
                    realization,
                });
            }
        }
    }
    let frac = failures as f64 / trials as f64;
    Ok(DecodabilityReport {
        mode: CheckMode::GenericSampled,
        field: scheme.field().modulus(),
        slots: scheme.slots(),
        symbols: scheme.symbol_count(),
        rate: scheme.rate(),
        verdict: failures == 0,
        realizations_checked: trials,
        failures,
        failure_fraction: FailureFraction::Estimate {
            value: frac,
            std_error: (frac * (1.0 - frac) / trials as f64).sqrt(),
            trials,
        },
        receivers: receiver_verdicts(per_receiver.into_iter()),
        counterexample,
        seed: Some(seed),
        rng: Some(RNG_ALGORITHM),
    })
}

/// Worst-case verdict computed on realizations whose direct links are all 1.
///
/// Scaling receiver `r`'s observation in one slot rescales one row of `M_r`
/// and leaves its row space unchanged, so fixing every direct coefficient to
/// 1 loses no failing pattern. Used by the search, where speed matters.
pub(crate) fn all_realizations_pass_normalized(compiled: &CompiledScheme, seq: &StateSequence, guard: u64) -> Result<bool, VerifyError> {
    let links = seq.links();
    let free: Vec<usize> = links
        .iter()
        .enumerate()
        .filter(|(_, &(_, r, t))| r != t)
        .map(|(i, _)| i)
        .collect();
    let count = Odometer::cardinality(compiled.field, free.len());
    if count > guard as u128 {
        return Err(VerifyError::GuardExceeded { count, guard });
    }
    let mut odo = Odometer::new(compiled.field, compiled.n_links, free, 0);
    let mut scratch = Vec::new();
    for _ in 0..count as u64 {
        if !compiled.all_ok(odo.values(), &mut scratch) {
            return Ok(false);
        }
        odo.advance();
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{build_bc2_joint_ab, build_ic2_joint_abc, MessageConfig, MessageMode, SymbolSpec};
    use crate::topology::{sample_realization, TwoUserState::*, DEFAULT_ENUMERATION_GUARD};

    fn f(p: u32) -> Field {
        Field::new(p).unwrap()
    }

    fn fresh_in_c(p: u32) -> LinearScheme {
        let seq = StateSequence::two_user(&[C]).unwrap();
        let cfg = MessageConfig::new(
            MessageMode::Ic,
            vec![SymbolSpec { source: Some(0), dest: 0 }, SymbolSpec { source: Some(1), dest: 1 }],
            2,
        )
        .unwrap();
        LinearScheme::new(seq, f(p), cfg, vec![vec![vec![(0, 1)]], vec![vec![(1, 1)]]]).unwrap()
    }

    #[test]
    fn fig2_all_ones_decodes() {
        let field = f(3);
        let s = build_ic2_joint_abc(field);
        let real = ChannelRealization::all_ones(s.sequence(), field);
        assert!(receiver_decodable(&s, &real, 0).unwrap());
        assert!(receiver_decodable(&s, &real, 1).unwrap());
        assert!(single_check(&s, &real).unwrap().verdict);
    }

    #[test]
    fn fresh_symbols_in_c_never_decode() {
        let s = fresh_in_c(3);
        let real = sample_realization(s.sequence(), f(3), 0);
        assert!(!receiver_decodable(&s, &real, 0).unwrap());
        assert!(!receiver_decodable(&s, &real, 1).unwrap());
        assert_eq!(failure_fraction_exact(&s, DEFAULT_ENUMERATION_GUARD).unwrap(), RateValue::integer(1));
        let rep = single_check(&s, &real).unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.counterexample.unwrap().realization, real);
    }

    #[test]
    fn worst_case_fig2_and_fig3() {
        let s = build_ic2_joint_abc(f(3));
        let rep = worst_case_check(&s, DEFAULT_ENUMERATION_GUARD).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.realizations_checked, 1024);
        assert!(rep.counterexample.is_none());
        let bc = build_bc2_joint_ab(f(5));
        assert!(worst_case_check(&bc, DEFAULT_ENUMERATION_GUARD).unwrap().verdict);
    }

    #[test]
    fn guard_error_points_to_generic() {
        let s = build_ic2_joint_abc(f(101));
        let e = worst_case_check(&s, 1000).unwrap_err();
        assert!(matches!(e, VerifyError::GuardExceeded { guard: 1000, .. }));
        assert!(e.to_string().contains("generic"));
    }

    #[test]
    fn compiled_and_reference_routes_agree() {
        let field = f(3);
        for s in [build_ic2_joint_abc(field), build_bc2_joint_ab(field), fresh_in_c(3)] {
            let c = CompiledScheme::new(&s);
            let space = RealizationSpace::new(s.sequence(), field);
            let mut scratch = Vec::new();
            for idx in 0..space.cardinality() as u64 {
                let real = space.realization_at(idx);
                let values = space.values_at(idx);
                for r in 0..2 {
                    assert_eq!(
                        c.receiver_ok(r, &values, &mut scratch),
                        receiver_decodable(&s, &real, r).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn shard_ranges_cover_exactly() {
        for total in [0u64, 1, 7, 1024] {
            for shards in 1..9 {
                let r = shard_ranges(total, shards);
                let covered: u64 = r.iter().map(|(a, b)| b - a).sum();
                assert_eq!(covered, total);
                assert!(r.windows(2).all(|w| w[0].1 == w[1].0));
            }
        }
    }

    #[test]
    fn trials_must_be_positive() {
        assert_eq!(generic_check(&fresh_in_c(3), 0, 1).unwrap_err(), VerifyError::NoTrials);
    }
}
