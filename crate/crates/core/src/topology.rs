//! Connectivity states, state fractions, state sequences and channel
//! coefficient realizations.
//!
//! Link grids are indexed `(receiver, transmitter)`. Direct links are always
//! present. Random draws use ChaCha8 seeded through `seed_from_u64`; see
//! [`RNG_ALGORITHM`].

use std::fmt;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Field;
use crate::rational::{format_rational, parse_rational, Rational, RationalError};

/// Identifier recorded in reports for every seeded draw.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64";

/// Default ceiling on the number of realizations an exhaustive pass may visit.
pub const DEFAULT_ENUMERATION_GUARD: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("user count must be at least 1")]
    NoUsers,
    #[error("link grid has {got} entries, expected {expected}")]
    GridSize { expected: usize, got: usize },
    #[error("direct link for user {0} must be present")]
    MissingDirectLink(usize),
    #[error("states disagree on user count: {0} vs {1}")]
    UserCountMismatch(usize, usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Rational(#[from] RationalError),
    #[error("fractions must be nonnegative, got {0}")]
    NegativeFraction(String),
    #[error("fractions sum to {0}, not 1")]
    FractionSum(String),
    #[error("expected {expected} fractions, got {got}")]
    FractionCount { expected: usize, got: usize },
    #[error("block length must be at least 1")]
    EmptyBlock,
    #[error("slot {slot} references unknown state {state}")]
    UnknownState { slot: usize, state: usize },
    #[error("realization covers {got} slots, sequence has {expected}")]
    SlotCount { expected: usize, got: usize },
    #[error("slot {slot}: coefficient h[{r}][{t}] = {value} violates the link pattern")]
    Support { slot: usize, r: usize, t: usize, value: u32 },
    #[error("{count} realizations exceed the enumeration guard of {guard}")]
    TooLargeToEnumerate { count: u128, guard: u64 },
}

/// Which transmitter-to-receiver links exist during one channel use.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopologyState {
    k: usize,
    present: Vec<bool>,
}

impl TopologyState {
    pub fn new(k: usize, present: Vec<bool>) -> Result<Self, TopologyError> {
        if k == 0 {
            return Err(TopologyError::NoUsers);
        }
        if present.len() != k * k {
            return Err(TopologyError::GridSize {
                expected: k * k,
                got: present.len(),
            });
        }
        if let Some(u) = (0..k).find(|&u| !present[u * k + u]) {
            return Err(TopologyError::MissingDirectLink(u));
        }
        Ok(TopologyState { k, present })
    }

    /// Only direct links: the interference-free state.
    pub fn diagonal(k: usize) -> Self {
        let mut present = vec![false; k * k];
        for u in 0..k {
            present[u * k + u] = true;
        }
        TopologyState { k, present }
    }

    pub fn fully_connected(k: usize) -> Self {
        TopologyState {
            k,
            present: vec![true; k * k],
        }
    }

    /// Builds a state from rows of `'1'`/`'0'` characters, one row per receiver.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, TopologyError> {
        let k = rows.len();
        let mut present = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref().trim();
            if row.chars().count() != k {
                return Err(TopologyError::Parse {
                    line: i + 1,
                    msg: format!("row '{row}' has {} cells, expected {k}", row.chars().count()),
                });
            }
            for c in row.chars() {
                present.push(match c {
                    '1' => true,
                    '0' => false,
                    other => {
                        return Err(TopologyError::Parse {
                            line: i + 1,
                            msg: format!("unexpected character '{other}'"),
                        })
                    }
                });
            }
        }
        TopologyState::new(k, present)
    }

    /// Builds a state from a bitmask over the off-diagonal cells, visited in
    /// row-major order (bit 0 is the first off-diagonal cell).
    pub fn from_cross_mask(k: usize, mask: u64) -> Self {
        let mut present = vec![false; k * k];
        let mut bit = 0;
        for r in 0..k {
            for t in 0..k {
                if r == t {
                    present[r * k + t] = true;
                } else {
                    present[r * k + t] = mask >> bit & 1 == 1;
                    bit += 1;
                }
            }
        }
        TopologyState { k, present }
    }

    pub fn cross_mask(&self) -> u64 {
        let mut mask = 0u64;
        let mut bit = 0;
        for r in 0..self.k {
            for t in 0..self.k {
                if r != t {
                    if self.is_present(r, t) {
                        mask |= 1 << bit;
                    }
                    bit += 1;
                }
            }
        }
        mask
    }

    #[inline]
    pub fn users(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn is_present(&self, r: usize, t: usize) -> bool {
        self.present[r * self.k + t]
    }

    pub fn link_count(&self) -> usize {
        self.present.iter().filter(|&&b| b).count()
    }

    /// Present links as `(receiver, transmitter)` pairs in row-major order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.k;
        (0..k * k)
            .filter(move |&i| self.present[i])
            .map(move |i| (i / k, i % k))
    }

    /// The sub-network seen by the listed users (other transmitters and
    /// receivers are dropped).
    pub fn restrict(&self, users: &[usize]) -> TopologyState {
        let k = users.len();
        let mut present = Vec::with_capacity(k * k);
        for &r in users {
            for &t in users {
                present.push(self.is_present(r, t));
            }
        }
        TopologyState { k, present }
    }

    /// Relabels users: user `u` of `self` becomes user `perm[u]`.
    pub fn permute(&self, perm: &[usize]) -> TopologyState {
        let k = self.k;
        let mut present = vec![false; k * k];
        for r in 0..k {
            for t in 0..k {
                present[perm[r] * k + perm[t]] = self.is_present(r, t);
            }
        }
        TopologyState { k, present }
    }

    pub fn grid_rows(&self) -> Vec<String> {
        (0..self.k)
            .map(|r| {
                (0..self.k)
                    .map(|t| if self.is_present(r, t) { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for TopologyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.grid_rows().join("/"))
    }
}

/// The four connectivity states of the two-user network.
///
/// `A`: receiver 1 hears both transmitters, receiver 2 only its own.
/// `B`: the mirror image of `A`. `C`: fully connected. `D`: no cross links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TwoUserState {
    A,
    B,
    C,
    D,
}

impl TwoUserState {
    pub const ALL: [TwoUserState; 4] = [Self::A, Self::B, Self::C, Self::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
            Self::D => "D",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s.trim() {
            "A" | "a" => Some(Self::A),
            "B" | "b" => Some(Self::B),
            "C" | "c" => Some(Self::C),
            "D" | "d" => Some(Self::D),
            _ => None,
        }
    }

    pub fn topology(self) -> TopologyState {
        let (cross_12, cross_21) = match self {
            // (Tx2 -> Rx1, Tx1 -> Rx2)
            Self::A => (true, false),
            Self::B => (false, true),
            Self::C => (true, true),
            Self::D => (false, false),
        };
        TopologyState {
            k: 2,
            present: vec![true, cross_12, cross_21, true],
        }
    }

    /// Identifies a two-user topology.
    pub fn classify(state: &TopologyState) -> Option<Self> {
        Self::ALL.into_iter().find(|s| &s.topology() == state)
    }
}

/// Exact fraction of channel uses spent in each state of an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateFractions(Vec<Rational>);

impl StateFractions {
    pub fn new(values: Vec<Rational>) -> Result<Self, TopologyError> {
        if let Some(neg) = values.iter().find(|v| *v < &Rational::zero()) {
            return Err(TopologyError::NegativeFraction(format_rational(neg)));
        }
        let sum: Rational = values.iter().copied().sum();
        if sum != Rational::from_integer(1) {
            return Err(TopologyError::FractionSum(format_rational(&sum)));
        }
        Ok(StateFractions(values))
    }

    /// `(λ_A, λ_B, λ_C, λ_D)`.
    pub fn two_user(a: Rational, b: Rational, c: Rational, d: Rational) -> Result<Self, TopologyError> {
        Self::new(vec![a, b, c, d])
    }

    /// Parses a comma-separated list of exact rationals (`"1/3,1/3,1/3,0"`).
    pub fn parse(s: &str, expected: usize) -> Result<Self, TopologyError> {
        let values = s
            .split(',')
            .map(parse_rational)
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != expected {
            return Err(TopologyError::FractionCount {
                expected,
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Rational {
        self.0[i]
    }

    /// Fraction of a two-user state; panics if this is not a four-state vector.
    pub fn lambda(&self, s: TwoUserState) -> Rational {
        assert_eq!(self.0.len(), 4, "two-user fractions have four entries");
        self.0[s.index()]
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

/// Named states a sequence may refer to; all share one user count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateAlphabet {
    labels: Vec<String>,
    states: Vec<TopologyState>,
}

impl StateAlphabet {
    pub fn new(labels: Vec<String>, states: Vec<TopologyState>) -> Result<Self, TopologyError> {
        assert_eq!(labels.len(), states.len(), "one label per state");
        if let Some(first) = states.first() {
            if let Some(other) = states.iter().find(|s| s.users() != first.users()) {
                return Err(TopologyError::UserCountMismatch(first.users(), other.users()));
            }
        }
        Ok(StateAlphabet { labels, states })
    }

    /// The alphabet `A, B, C, D` of the two-user network.
    pub fn two_user() -> Self {
        StateAlphabet {
            labels: TwoUserState::ALL.iter().map(|s| s.label().to_string()).collect(),
            states: TwoUserState::ALL.iter().map(|s| s.topology()).collect(),
        }
    }

    /// Labels states `S1, S2, ...`.
    pub fn numbered(states: Vec<TopologyState>) -> Result<Self, TopologyError> {
        let labels = (1..=states.len()).map(|i| format!("S{i}")).collect();
        Self::new(labels, states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn users(&self) -> usize {
        self.states.first().map(|s| s.users()).unwrap_or(0)
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn state(&self, i: usize) -> &TopologyState {
        &self.states[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label.trim())
    }
}

/// The state of every channel use in a block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSequence {
    alphabet: StateAlphabet,
    slots: Vec<usize>,
}

impl StateSequence {
    pub fn new(alphabet: StateAlphabet, slots: Vec<usize>) -> Result<Self, TopologyError> {
        if slots.is_empty() {
            return Err(TopologyError::EmptyBlock);
        }
        if let Some((slot, &state)) = slots.iter().enumerate().find(|(_, &s)| s >= alphabet.len()) {
            return Err(TopologyError::UnknownState { slot, state });
        }
        Ok(StateSequence { alphabet, slots })
    }

    pub fn two_user(states: &[TwoUserState]) -> Result<Self, TopologyError> {
        Self::new(StateAlphabet::two_user(), states.iter().map(|s| s.index()).collect())
    }

    /// Parses comma-separated labels against an alphabet.
    pub fn parse_labels(alphabet: StateAlphabet, s: &str) -> Result<Self, TopologyError> {
        let slots = s
            .split(',')
            .map(|l| {
                alphabet.position(l).ok_or_else(|| TopologyError::Parse {
                    line: 1,
                    msg: format!("unknown state label '{}'", l.trim()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(alphabet, slots)
    }

    pub fn alphabet(&self) -> &StateAlphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn users(&self) -> usize {
        self.alphabet.users()
    }

    pub fn state_id(&self, slot: usize) -> usize {
        self.slots[slot]
    }

    pub fn state(&self, slot: usize) -> &TopologyState {
        self.alphabet.state(self.slots[slot])
    }

    pub fn label(&self, slot: usize) -> &str {
        self.alphabet.label(self.slots[slot])
    }

    pub fn ids(&self) -> &[usize] {
        &self.slots
    }

    pub fn count(&self, state: usize) -> usize {
        self.slots.iter().filter(|&&s| s == state).count()
    }

    /// Slot indices in `state`, in order.
    pub fn slots_in(&self, state: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.slots[i] == state).collect()
    }

    /// Present links across all slots, as `(slot, receiver, transmitter)`
    /// in lexicographic order.
    pub fn links(&self) -> Vec<(usize, usize, usize)> {
        (0..self.len())
            .flat_map(|slot| self.state(slot).links().map(move |(r, t)| (slot, r, t)))
            .collect()
    }

    /// Empirical fraction of each alphabet state in this block.
    pub fn empirical_fractions(&self) -> StateFractions {
        let n = self.len() as i64;
        StateFractions(
            (0..self.alphabet.len())
                .map(|s| Rational::new(self.count(s) as i64, n))
                .collect(),
        )
    }
}

/// Per-state slot counts for a block of `n` uses: `floor(λ n)` each, with the
/// remainder handed out by largest fractional part, ties to the earlier state.
pub fn quota_counts(fractions: &StateFractions, n: usize) -> Vec<usize> {
    let n_r = Rational::from_integer(n as i64);
    let scaled: Vec<Rational> = fractions.values().iter().map(|l| l * n_r).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor().to_integer() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..scaled.len()).collect();
    // stable sort keeps the alphabet order among equal fractional parts
    order.sort_by(|&a, &b| scaled[b].fract().cmp(&scaled[a].fract()));
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Deterministic block realizing `fractions`, states laid out in alphabet
/// order (all slots of the first state, then the second, ...).
pub fn state_quota_sequence(
    alphabet: StateAlphabet,
    fractions: &StateFractions,
    n: usize,
) -> Result<StateSequence, TopologyError> {
    if n == 0 {
        return Err(TopologyError::EmptyBlock);
    }
    if fractions.len() != alphabet.len() {
        return Err(TopologyError::FractionCount {
            expected: alphabet.len(),
            got: fractions.len(),
        });
    }
    let counts = quota_counts(fractions, n);
    let slots = counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat_n(s, c))
        .collect();
    StateSequence::new(alphabet, slots)
}

/// i.i.d. states drawn slot by slot with the given probabilities. The draw is
/// exact: a uniform integer below the common denominator picks the state.
pub fn iid_sequence(
    alphabet: StateAlphabet,
    fractions: &StateFractions,
    n: usize,
    seed: u64,
) -> Result<StateSequence, TopologyError> {
    if n == 0 {
        return Err(TopologyError::EmptyBlock);
    }
    if fractions.len() != alphabet.len() {
        return Err(TopologyError::FractionCount {
            expected: alphabet.len(),
            got: fractions.len(),
        });
    }
    let den = fractions
        .values()
        .iter()
        .fold(1i64, |acc, l| acc.lcm(l.denom()));
    let cumulative: Vec<i64> = fractions
        .values()
        .iter()
        .scan(0i64, |acc, l| {
            *acc += (l * Rational::from_integer(den)).to_integer();
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = (0..n)
        .map(|_| {
            let u = rng.gen_range(0..den);
            cumulative.iter().position(|&c| u < c).expect("cumulative ends at den")
        })
        .collect();
    StateSequence::new(alphabet, slots)
}

/// Channel coefficients for every slot of a block: `h[slot][r * k + t]`.
/// Nonzero exactly on the present links of each slot's state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ChannelRealization {
    field: Field,
    k: usize,
    coeffs: Vec<Vec<u32>>,
}

impl ChannelRealization {
    pub fn new(seq: &StateSequence, field: Field, coeffs: Vec<Vec<u32>>) -> Result<Self, TopologyError> {
        if coeffs.len() != seq.len() {
            return Err(TopologyError::SlotCount {
                expected: seq.len(),
                got: coeffs.len(),
            });
        }
        let k = seq.users();
        for (slot, grid) in coeffs.iter().enumerate() {
            if grid.len() != k * k {
                return Err(TopologyError::GridSize {
                    expected: k * k,
                    got: grid.len(),
                });
            }
            let state = seq.state(slot);
            for r in 0..k {
                for t in 0..k {
                    let v = grid[r * k + t];
                    if v >= field.modulus() || (v != 0) != state.is_present(r, t) {
                        return Err(TopologyError::Support { slot, r, t, value: v });
                    }
                }
            }
        }
        Ok(ChannelRealization { field, k, coeffs })
    }

    /// Builds a realization from one value per present link, in the order of
    /// [`StateSequence::links`].
    pub fn from_link_values(seq: &StateSequence, field: Field, values: &[u32]) -> Result<Self, TopologyError> {
        let k = seq.users();
        let mut coeffs = vec![vec![0u32; k * k]; seq.len()];
        let links = seq.links();
        if links.len() != values.len() {
            return Err(TopologyError::GridSize {
                expected: links.len(),
                got: values.len(),
            });
        }
        for (&(slot, r, t), &v) in links.iter().zip(values) {
            coeffs[slot][r * k + t] = v;
        }
        Self::new(seq, field, coeffs)
    }

    /// Every present link set to 1.
    pub fn all_ones(seq: &StateSequence, field: Field) -> Self {
        let values = vec![1; seq.links().len()];
        Self::from_link_values(seq, field, &values).expect("ones respect the support")
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn coeff(&self, slot: usize, r: usize, t: usize) -> u32 {
        self.coeffs[slot][r * self.k + t]
    }

    pub fn grid(&self, slot: usize) -> &[u32] {
        &self.coeffs[slot]
    }

    /// Checks that this realization fits `seq` (same slots, same support).
    pub fn check_against(&self, seq: &StateSequence) -> Result<(), TopologyError> {
        Self::new(seq, self.field, self.coeffs.clone()).map(|_| ())
    }

    pub fn link_values(&self, seq: &StateSequence) -> Vec<u32> {
        seq.links()
            .into_iter()
            .map(|(slot, r, t)| self.coeff(slot, r, t))
            .collect()
    }
}

/// Draws a realization: each present link gets an independent uniform
/// nonzero coefficient, links visited in [`StateSequence::links`] order.
pub fn sample_realization(seq: &StateSequence, field: Field, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(seq, field, &mut rng)
}

pub(crate) fn sample_link_values<R: Rng>(n_links: usize, field: Field, rng: &mut R) -> Vec<u32> {
    (0..n_links).map(|_| rng.gen_range(1..field.modulus())).collect()
}

pub(crate) fn sample_with<R: Rng>(seq: &StateSequence, field: Field, rng: &mut R) -> ChannelRealization {
    let values = sample_link_values(seq.links().len(), field, rng);
    ChannelRealization::from_link_values(seq, field, &values).expect("sampled values respect the support")
}

/// The set of all realizations of a sequence, indexed lexicographically over
/// link values (last link varies fastest, values `1..p`).
#[derive(Debug, Clone)]
pub struct RealizationSpace {
    seq: StateSequence,
    field: Field,
    n_links: usize,
}

impl RealizationSpace {
    pub fn new(seq: &StateSequence, field: Field) -> Self {
        RealizationSpace {
            n_links: seq.links().len(),
            seq: seq.clone(),
            field,
        }
    }

    pub fn link_count(&self) -> usize {
        self.n_links
    }

    /// Total number of realizations, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        let base = (self.field.modulus() - 1) as u128;
        (0..self.n_links).fold(1u128, |acc, _| acc.saturating_mul(base))
    }

    pub fn check_guard(&self, guard: u64) -> Result<u64, TopologyError> {
        let count = self.cardinality();
        if count > guard as u128 {
            return Err(TopologyError::TooLargeToEnumerate { count, guard });
        }
        Ok(count as u64)
    }

    /// Link values of the realization at `index`.
    pub fn values_at(&self, mut index: u64) -> Vec<u32> {
        let base = (self.field.modulus() - 1) as u64;
        let mut values = vec![1u32; self.n_links];
        for v in values.iter_mut().rev() {
            *v = (index % base) as u32 + 1;
            index /= base;
        }
        values
    }

    pub fn realization_at(&self, index: u64) -> ChannelRealization {
        ChannelRealization::from_link_values(&self.seq, self.field, &self.values_at(index))
            .expect("enumerated values respect the support")
    }

    /// Index of a realization within this space.
    pub fn index_of(&self, real: &ChannelRealization) -> u64 {
        let base = (self.field.modulus() - 1) as u64;
        real.link_values(&self.seq)
            .iter()
            .fold(0u64, |acc, &v| acc * base + (v - 1) as u64)
    }
}

/// Streams every realization exactly once in lexicographic order.
pub struct RealizationIter {
    space: RealizationSpace,
    next: u64,
    end: u64,
}

impl Iterator for RealizationIter {
    type Item = ChannelRealization;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let r = self.space.realization_at(self.next);
        self.next += 1;
        Some(r)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next).to_usize().unwrap_or(usize::MAX);
        (left, Some(left))
    }
}

pub fn enumerate_realizations(
    seq: &StateSequence,
    field: Field,
    guard: u64,
) -> Result<RealizationIter, TopologyError> {
    let space = RealizationSpace::new(seq, field);
    let end = space.check_guard(guard)?;
    Ok(RealizationIter { space, next: 0, end })
}

/// Parses topology grids: one state per block, blocks separated by blank
/// lines, rows are receivers written with `'1'`/`'0'`, `#` starts a comment.
pub fn parse_state_blocks(text: &str) -> Result<Vec<TopologyState>, TopologyError> {
    let mut blocks: Vec<(usize, Vec<String>)> = Vec::new();
    let mut current: Option<(usize, Vec<String>)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            continue;
        }
        current.get_or_insert_with(|| (i + 1, Vec::new())).1.push(line.to_string());
    }
    if let Some(b) = current.take() {
        blocks.push(b);
    }
    let mut states: Vec<TopologyState> = Vec::with_capacity(blocks.len());
    for (start, rows) in blocks {
        let state = TopologyState::from_rows(&rows).map_err(|e| match e {
            TopologyError::Parse { line, msg } => TopologyError::Parse {
                line: start + line - 1,
                msg,
            },
            other => TopologyError::Parse {
                line: start,
                msg: other.to_string(),
            },
        })?;
        if let Some(first) = states.first() {
            if first.users() != state.users() {
                return Err(TopologyError::Parse {
                    line: start,
                    msg: format!("block has {} users, earlier blocks have {}", state.users(), first.users()),
                });
            }
        }
        states.push(state);
    }
    Ok(states)
}

pub fn format_state_blocks(states: &[TopologyState]) -> String {
    states
        .iter()
        .map(|s| s.grid_rows().join("\n") + "\n")
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn quarter() -> StateFractions {
        StateFractions::two_user(r(1, 4), r(1, 4), r(1, 4), r(1, 4)).unwrap()
    }

    #[test]
    fn two_user_patterns() {
        assert_eq!(TwoUserState::A.topology().grid_rows(), vec!["11", "01"]);
        assert_eq!(TwoUserState::B.topology().grid_rows(), vec!["10", "11"]);
        assert_eq!(TwoUserState::C.topology().grid_rows(), vec!["11", "11"]);
        assert_eq!(TwoUserState::D.topology().grid_rows(), vec!["10", "01"]);
        for (i, a) in TwoUserState::ALL.iter().enumerate() {
            for b in &TwoUserState::ALL[i + 1..] {
                assert_ne!(a.topology(), b.topology());
            }
            assert_eq!(TwoUserState::classify(&a.topology()), Some(*a));
        }
    }

    #[test]
    fn state_validation() {
        assert_eq!(
            TopologyState::new(2, vec![true, true, true, false]),
            Err(TopologyError::MissingDirectLink(1))
        );
        assert!(matches!(
            TopologyState::new(2, vec![true; 3]),
            Err(TopologyError::GridSize { .. })
        ));
        assert!(TopologyState::from_rows(&["11", "02"]).is_err());
        assert!(TopologyState::from_rows(&["111", "11"]).is_err());
    }

    #[test]
    fn cross_mask_roundtrip() {
        for mask in 0..64 {
            let s = TopologyState::from_cross_mask(3, mask);
            assert_eq!(s.cross_mask(), mask);
        }
        assert_eq!(TopologyState::from_cross_mask(3, 0), TopologyState::diagonal(3));
        assert_eq!(TopologyState::from_cross_mask(3, 63), TopologyState::fully_connected(3));
    }

    #[test]
    fn restrict_and_permute() {
        let s = TopologyState::from_rows(&["110", "011", "001"]).unwrap();
        assert_eq!(s.restrict(&[0, 1]).grid_rows(), vec!["11", "01"]);
        assert_eq!(s.restrict(&[0, 2]).grid_rows(), vec!["10", "01"]);
        // swap users 0 and 2
        let p = s.permute(&[2, 1, 0]);
        assert_eq!(p.grid_rows(), vec!["100", "110", "011"]);
        assert_eq!(p.permute(&[2, 1, 0]), s);
    }

    #[test]
    fn fractions_validation() {
        assert!(StateFractions::parse("1/3,1/3,1/3,0", 4).is_ok());
        assert!(matches!(
            StateFractions::parse("1/2,1/2,1/2,0", 4),
            Err(TopologyError::FractionSum(_))
        ));
        assert!(matches!(
            StateFractions::parse("0.5,0.5,0,0", 4),
            Err(TopologyError::Rational(_))
        ));
        assert!(matches!(
            StateFractions::parse("3/2,-1/2,0,0", 4),
            Err(TopologyError::NegativeFraction(_))
        ));
        assert!(matches!(
            StateFractions::parse("1/2,1/2", 4),
            Err(TopologyError::FractionCount { .. })
        ));
    }

    #[test]
    fn quota_examples() {
        let abc = StateFractions::two_user(r(1, 3), r(1, 3), r(1, 3), r(0, 1)).unwrap();
        let seq = state_quota_sequence(StateAlphabet::two_user(), &abc, 3).unwrap();
        assert_eq!(seq.ids(), &[0, 1, 2]);

        let all_a = StateFractions::two_user(r(1, 1), r(0, 1), r(0, 1), r(0, 1)).unwrap();
        let seq = state_quota_sequence(StateAlphabet::two_user(), &all_a, 5).unwrap();
        assert_eq!(seq.ids(), &[0; 5]);

        // floor(6/4) = 1 each, two remainder slots with equal fractional
        // parts go to A then B
        assert_eq!(quota_counts(&quarter(), 6), vec![2, 2, 1, 1]);
        assert!(state_quota_sequence(StateAlphabet::two_user(), &quarter(), 0).is_err());
    }

    #[test]
    fn iid_sequence_is_seeded() {
        let a = iid_sequence(StateAlphabet::two_user(), &quarter(), 200, 9).unwrap();
        let b = iid_sequence(StateAlphabet::two_user(), &quarter(), 200, 9).unwrap();
        assert_eq!(a, b);
        for s in 0..4 {
            assert!(a.count(s) > 20, "state {s} drawn {} times", a.count(s));
        }
        let only_d = StateFractions::two_user(r(0, 1), r(0, 1), r(0, 1), r(1, 1)).unwrap();
        let d = iid_sequence(StateAlphabet::two_user(), &only_d, 50, 1).unwrap();
        assert_eq!(d.count(3), 50);
    }

    #[test]
    fn sampled_realizations_respect_support() {
        use TwoUserState::*;
        let seq = StateSequence::two_user(&[A, B, C, D]).unwrap();
        let f = Field::new(5).unwrap();
        let real = sample_realization(&seq, f, 42);
        assert_eq!(real, sample_realization(&seq, f, 42));
        real.check_against(&seq).unwrap();
        assert_eq!(real.coeff(3, 0, 1), 0);
        assert_eq!(real.coeff(3, 1, 0), 0);

        let f2 = Field::new(2).unwrap();
        let ones = sample_realization(&seq, f2, 7);
        assert!(seq.links().iter().all(|&(s, r, t)| ones.coeff(s, r, t) == 1));
    }

    #[test]
    fn realization_rejects_bad_support() {
        let seq = StateSequence::two_user(&[TwoUserState::D]).unwrap();
        let f = Field::new(3).unwrap();
        assert!(matches!(
            ChannelRealization::new(&seq, f, vec![vec![1, 1, 0, 1]]),
            Err(TopologyError::Support { .. })
        ));
        assert!(matches!(
            ChannelRealization::new(&seq, f, vec![vec![1, 0, 0, 0]]),
            Err(TopologyError::Support { .. })
        ));
        assert!(matches!(
            ChannelRealization::new(&seq, f, vec![vec![3, 0, 0, 1]]),
            Err(TopologyError::Support { .. })
        ));
    }

    #[test]
    fn enumeration_counts() {
        use TwoUserState::*;
        let f3 = Field::new(3).unwrap();
        let abc = StateSequence::two_user(&[A, B, C]).unwrap();
        assert_eq!(enumerate_realizations(&abc, f3, DEFAULT_ENUMERATION_GUARD).unwrap().count(), 1024);
        let d = StateSequence::two_user(&[D]).unwrap();
        assert_eq!(enumerate_realizations(&d, f3, DEFAULT_ENUMERATION_GUARD).unwrap().count(), 4);
        let a = StateSequence::two_user(&[A]).unwrap();
        let f2 = Field::new(2).unwrap();
        assert_eq!(enumerate_realizations(&a, f2, DEFAULT_ENUMERATION_GUARD).unwrap().count(), 1);
    }

    #[test]
    fn enumeration_is_lexicographic_and_distinct() {
        use TwoUserState::*;
        let f = Field::new(3).unwrap();
        let seq = StateSequence::two_user(&[A, D]).unwrap();
        let space = RealizationSpace::new(&seq, f);
        let all: Vec<Vec<u32>> = enumerate_realizations(&seq, f, 1000)
            .unwrap()
            .map(|r| r.link_values(&seq))
            .collect();
        assert_eq!(all.len(), 32);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all[0], vec![1; 5]);
        for (i, v) in all.iter().enumerate() {
            let real = ChannelRealization::from_link_values(&seq, f, v).unwrap();
            assert_eq!(space.index_of(&real), i as u64);
        }
    }

    #[test]
    fn enumeration_guard() {
        let seq = StateSequence::two_user(&[TwoUserState::C; 3]).unwrap();
        let f = Field::new(7).unwrap();
        match enumerate_realizations(&seq, f, 1000) {
            Err(TopologyError::TooLargeToEnumerate { count, guard }) => {
                assert_eq!(count, 6u128.pow(12));
                assert_eq!(guard, 1000);
            }
            other => panic!("expected guard error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn grid_file_roundtrip_and_errors() {
        let text = "# pair\n110\n011\n001\n\n100\n110\n011\n";
        let states = parse_state_blocks(text).unwrap();
        assert_eq!(states.len(), 2);
        assert_eq!(parse_state_blocks(&format_state_blocks(&states)).unwrap(), states);

        let err = parse_state_blocks("110\n011\n000\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { line: 1, .. }), "{err}");
        let err = parse_state_blocks("11\n01\n\n110\n011\n001\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { line: 4, .. }), "{err}");
        let err = parse_state_blocks("11\n0x\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { line: 2, .. }), "{err}");
    }
}
