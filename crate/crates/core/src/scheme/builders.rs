//! The joint schemes and the time-sharing schedules built from them.

use serde::Serialize;

use super::{LinearScheme, MessageConfig, MessageMode, SchemeError, SparseEncoder, SymbolSpec};
use crate::field::Field;
use crate::topology::{
    state_quota_sequence, StateAlphabet, StateFractions, StateSequence, TopologyState, TwoUserState,
};

/// Accumulates encoders and symbols while a schedule is laid out.
struct Layout {
    users: usize,
    encoders: Vec<SparseEncoder>,
    symbols: Vec<SymbolSpec>,
}

impl Layout {
    fn new(users: usize, slots: usize) -> Self {
        Layout {
            users,
            encoders: vec![vec![Vec::new(); slots]; users],
            symbols: Vec::new(),
        }
    }

    fn fresh(&mut self, source: Option<usize>, dest: usize) -> usize {
        self.symbols.push(SymbolSpec { source, dest });
        self.symbols.len() - 1
    }

    fn send(&mut self, tx: usize, slot: usize, symbol: usize, coeff: u32) {
        self.encoders[tx][slot].push((symbol, coeff));
    }

    fn finish(self, seq: StateSequence, field: Field, mode: MessageMode) -> Result<LinearScheme, SchemeError> {
        let config = MessageConfig::new(mode, self.symbols, self.users)?;
        LinearScheme::new(seq, field, config, self.encoders)
    }
}

/// Slot bookkeeping of the two-user interference-channel schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ic2Plan {
    /// Number of jointly coded (A, B, C) slot triples.
    pub joint_triples: usize,
    pub d_slots: usize,
    /// A/B/C slots outside any triple, one symbol each.
    pub leftover_slots: usize,
}

impl Ic2Plan {
    pub fn symbols(&self) -> usize {
        4 * self.joint_triples + 2 * self.d_slots + self.leftover_slots
    }
}

pub fn plan_ic2(seq: &StateSequence) -> Ic2Plan {
    let count = |s: TwoUserState| seq.count(s.index());
    let joint = count(TwoUserState::A).min(count(TwoUserState::B)).min(count(TwoUserState::C));
    Ic2Plan {
        joint_triples: joint,
        d_slots: count(TwoUserState::D),
        leftover_slots: count(TwoUserState::A) + count(TwoUserState::B) + count(TwoUserState::C) - 3 * joint,
    }
}

/// Slot bookkeeping of the two-user broadcast schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bc2Plan {
    /// Number of jointly coded (A, B) slot pairs.
    pub joint_pairs: usize,
    pub d_slots: usize,
    /// C slots plus unpaired A/B slots, one symbol each.
    pub single_slots: usize,
}

impl Bc2Plan {
    pub fn symbols(&self) -> usize {
        3 * self.joint_pairs + 2 * self.d_slots + self.single_slots
    }
}

pub fn plan_bc2(seq: &StateSequence) -> Bc2Plan {
    let count = |s: TwoUserState| seq.count(s.index());
    let pairs = count(TwoUserState::A).min(count(TwoUserState::B));
    Bc2Plan {
        joint_pairs: pairs,
        d_slots: count(TwoUserState::D),
        single_slots: seq.len() - count(TwoUserState::D) - 2 * pairs,
    }
}

fn require_two_user(seq: &StateSequence) -> Result<(), SchemeError> {
    if seq.alphabet() != &StateAlphabet::two_user() {
        return Err(SchemeError::Assignment(
            "two-user schedules need a sequence over the A/B/C/D alphabet".into(),
        ));
    }
    Ok(())
}

/// Places the 4-symbol joint code on one (A, B, C) triple. Transmitter 1
/// sends `a1, a2, a2` and transmitter 2 sends `b1, b2, b1`.
fn lay_joint_abc(layout: &mut Layout, slots: [usize; 3]) {
    let [sa, sb, sc] = slots;
    let a1 = layout.fresh(Some(0), 0);
    let a2 = layout.fresh(Some(0), 0);
    let b1 = layout.fresh(Some(1), 1);
    let b2 = layout.fresh(Some(1), 1);
    layout.send(0, sa, a1, 1);
    layout.send(0, sb, a2, 1);
    layout.send(0, sc, a2, 1);
    layout.send(1, sa, b1, 1);
    layout.send(1, sb, b2, 1);
    layout.send(1, sc, b1, 1);
}

fn ic2_like_on(seq: &StateSequence, field: Field, mode: MessageMode) -> Result<LinearScheme, SchemeError> {
    require_two_user(seq)?;
    let plan = plan_ic2(seq);
    let a = seq.slots_in(TwoUserState::A.index());
    let b = seq.slots_in(TwoUserState::B.index());
    let c = seq.slots_in(TwoUserState::C.index());
    let mut layout = Layout::new(2, seq.len());
    let mut used = vec![false; seq.len()];
    for j in 0..plan.joint_triples {
        lay_joint_abc(&mut layout, [a[j], b[j], c[j]]);
        used[a[j]] = true;
        used[b[j]] = true;
        used[c[j]] = true;
    }
    let mut next_tx = 0;
    for slot in (0..seq.len()).filter(|&s| !used[s]) {
        if seq.state_id(slot) == TwoUserState::D.index() {
            for t in 0..2 {
                let s = layout.fresh(Some(t), t);
                layout.send(t, slot, s, 1);
            }
        } else {
            let s = layout.fresh(Some(next_tx), next_tx);
            layout.send(next_tx, slot, s, 1);
            next_tx = 1 - next_tx;
        }
    }
    layout.finish(seq.clone(), field, mode)
}

/// The joint scheme over one slot each of A, B and C: four symbols in three
/// channel uses.
pub fn build_ic2_joint_abc(field: Field) -> LinearScheme {
    use TwoUserState::*;
    let seq = StateSequence::two_user(&[A, B, C]).expect("nonempty");
    let mut layout = Layout::new(2, 3);
    lay_joint_abc(&mut layout, [0, 1, 2]);
    layout.finish(seq, field, MessageMode::Ic).expect("joint scheme is well formed")
}

/// The broadcast scheme over one A slot and one B slot: `a1` for receiver 1,
/// `b1, b2` for receiver 2. Slot A carries `(a1, b1)`, slot B `(b1, b2)`.
pub fn build_bc2_joint_ab(field: Field) -> LinearScheme {
    use TwoUserState::*;
    let seq = StateSequence::two_user(&[A, B]).expect("nonempty");
    let mut layout = Layout::new(2, 2);
    lay_joint_ab(&mut layout, [0, 1]);
    layout.finish(seq, field, MessageMode::Bc).expect("joint scheme is well formed")
}

fn lay_joint_ab(layout: &mut Layout, slots: [usize; 2]) {
    let [sa, sb] = slots;
    let a1 = layout.fresh(None, 0);
    let b1 = layout.fresh(None, 1);
    let b2 = layout.fresh(None, 1);
    layout.send(0, sa, a1, 1);
    layout.send(1, sa, b1, 1);
    layout.send(0, sb, b1, 1);
    layout.send(1, sb, b2, 1);
}

/// Interference-channel schedule over an arbitrary two-user sequence. The
/// i-th A, B and C slots form the i-th joint triple; D slots carry one fresh
/// symbol per user; remaining slots carry one symbol from a single
/// transmitter, alternating starting with transmitter 1.
pub fn schedule_ic2_on(seq: &StateSequence, field: Field) -> Result<LinearScheme, SchemeError> {
    ic2_like_on(seq, field, MessageMode::Ic)
}

/// The same layout with X-channel messages; only `W11` and `W22` carry data.
pub fn schedule_x2_on(seq: &StateSequence, field: Field) -> Result<LinearScheme, SchemeError> {
    ic2_like_on(seq, field, MessageMode::X)
}

/// Broadcast schedule over an arbitrary two-user sequence. The i-th A slot is
/// paired with the i-th B slot. C slots and unpaired A/B slots carry one
/// symbol from transmitter 1 to receiver 1; D slots carry one per user.
pub fn schedule_bc2_on(seq: &StateSequence, field: Field) -> Result<LinearScheme, SchemeError> {
    require_two_user(seq)?;
    let plan = plan_bc2(seq);
    let a = seq.slots_in(TwoUserState::A.index());
    let b = seq.slots_in(TwoUserState::B.index());
    let mut layout = Layout::new(2, seq.len());
    let mut used = vec![false; seq.len()];
    for j in 0..plan.joint_pairs {
        lay_joint_ab(&mut layout, [a[j], b[j]]);
        used[a[j]] = true;
        used[b[j]] = true;
    }
    for slot in (0..seq.len()).filter(|&s| !used[s]) {
        if seq.state_id(slot) == TwoUserState::D.index() {
            for t in 0..2 {
                let s = layout.fresh(None, t);
                layout.send(t, slot, s, 1);
            }
        } else {
            let s = layout.fresh(None, 0);
            layout.send(0, slot, s, 1);
        }
    }
    layout.finish(seq.clone(), field, MessageMode::Bc)
}

fn quota(fractions: &StateFractions, n: usize) -> Result<StateSequence, SchemeError> {
    Ok(state_quota_sequence(StateAlphabet::two_user(), fractions, n)?)
}

pub fn build_schedule_ic2(fractions: &StateFractions, n: usize, field: Field) -> Result<LinearScheme, SchemeError> {
    schedule_ic2_on(&quota(fractions, n)?, field)
}

pub fn build_schedule_x2(fractions: &StateFractions, n: usize, field: Field) -> Result<LinearScheme, SchemeError> {
    schedule_x2_on(&quota(fractions, n)?, field)
}

pub fn build_schedule_bc2(fractions: &StateFractions, n: usize, field: Field) -> Result<LinearScheme, SchemeError> {
    schedule_bc2_on(&quota(fractions, n)?, field)
}

/// Interference-channel scheme given explicit encoder columns: `columns[t]`
/// lists one length-`n` column per symbol of transmitter `t`. Symbols are
/// numbered transmitter by transmitter.
pub fn ic_scheme_from_columns(
    seq: &StateSequence,
    field: Field,
    columns: &[Vec<Vec<u32>>],
) -> Result<LinearScheme, SchemeError> {
    let k = seq.users();
    if columns.len() != k {
        return Err(SchemeError::EncoderCount {
            expected: k,
            got: columns.len(),
        });
    }
    let mut layout = Layout::new(k, seq.len());
    for (t, cols) in columns.iter().enumerate() {
        for col in cols {
            if col.len() != seq.len() {
                return Err(SchemeError::EncoderRows {
                    tx: t,
                    expected: seq.len(),
                    got: col.len(),
                });
            }
            let s = layout.fresh(Some(t), t);
            for (slot, &c) in col.iter().enumerate() {
                let c = c % field.modulus();
                if c != 0 {
                    layout.send(t, slot, s, c);
                }
            }
        }
    }
    layout.finish(seq.clone(), field, MessageMode::Ic)
}

/// Three-user scheme over a pair of states: every transmitter carries one
/// symbol for its own receiver and repeats it in each slot where
/// `assignment[t][slot]` is set.
pub fn build_ic3_candidate(
    pair: [TopologyState; 2],
    assignment: [[bool; 2]; 3],
    field: Field,
) -> Result<LinearScheme, SchemeError> {
    if pair[0].users() != 3 || pair[1].users() != 3 {
        return Err(SchemeError::Assignment("both states must have three users".into()));
    }
    if let Some(t) = assignment.iter().position(|a| !a[0] && !a[1]) {
        return Err(SchemeError::Assignment(format!(
            "transmitter {} never sends its symbol",
            t + 1
        )));
    }
    let seq = StateSequence::new(StateAlphabet::numbered(pair.to_vec())?, vec![0, 1])?;
    let columns: Vec<Vec<Vec<u32>>> = assignment
        .iter()
        .map(|a| vec![a.iter().map(|&on| on as u32).collect()])
        .collect();
    ic_scheme_from_columns(&seq, field, &columns)
}

/// Schedule over a sequence drawn from the two states of `witness`, a
/// scheme on the 2-slot sequence `[state 1, state 2]`. The i-th slot of state
/// 1 is paired with the i-th slot of state 2 and carries a copy of the
/// witness; every unpaired slot carries one symbol from a single
/// transmitter, cycling through transmitters in order.
pub fn schedule_pair_on(seq: &StateSequence, witness: &LinearScheme) -> Result<LinearScheme, SchemeError> {
    let wseq = witness.sequence();
    if wseq.alphabet().len() != 2 || wseq.ids() != [0, 1] {
        return Err(SchemeError::Assignment("witness must span one slot of each of two states".into()));
    }
    let alphabet = seq.alphabet();
    if alphabet.len() != 2 || alphabet.state(0) != wseq.state(0) || alphabet.state(1) != wseq.state(1) {
        return Err(SchemeError::Assignment("sequence states differ from the witness states".into()));
    }
    let k = seq.users();
    let first = seq.slots_in(0);
    let second = seq.slots_in(1);
    let pairs = first.len().min(second.len());
    let mut layout = Layout::new(k, seq.len());
    let mut used = vec![false; seq.len()];
    for i in 0..pairs {
        let slots = [first[i], second[i]];
        let ids: Vec<usize> = witness
            .config()
            .symbols()
            .iter()
            .map(|s| layout.fresh(s.source, s.dest))
            .collect();
        for t in 0..k {
            for (local, &slot) in slots.iter().enumerate() {
                for &(j, c) in &witness.encoder(t)[local] {
                    layout.send(t, slot, ids[j], c);
                }
            }
        }
        used[slots[0]] = true;
        used[slots[1]] = true;
    }
    let mut next_tx = 0;
    for slot in (0..seq.len()).filter(|&s| !used[s]) {
        let s = layout.fresh(Some(next_tx), next_tx);
        layout.send(next_tx, slot, s, 1);
        next_tx = (next_tx + 1) % k;
    }
    layout.finish(seq.clone(), witness.field(), witness.config().mode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{RateValue, Rational};
    use crate::topology::{ChannelRealization, TwoUserState::*};

    fn f(p: u32) -> Field {
        Field::new(p).unwrap()
    }

    fn fr(v: [(i64, i64); 4]) -> StateFractions {
        StateFractions::new(v.iter().map(|&(n, d)| Rational::new(n, d)).collect()).unwrap()
    }

    #[test]
    fn pair_schedule_repeats_the_witness() {
        let pair = [
            TopologyState::from_rows(&["111", "011", "001"]).unwrap(),
            TopologyState::from_rows(&["101", "111", "001"]).unwrap(),
        ];
        let w = build_ic3_candidate(pair.clone(), [[true, true], [true, false], [false, true]], f(3)).unwrap();
        let alphabet = StateAlphabet::numbered(pair.to_vec()).unwrap();
        let seq = StateSequence::new(alphabet, vec![0, 0, 0, 1, 1]).unwrap();
        let s = schedule_pair_on(&seq, &w).unwrap();
        // two copies of three symbols, one leftover slot
        assert_eq!(s.symbol_count(), 7);
        assert_eq!(s.encoder(0)[0], w.encoder(0)[0]);
        assert_eq!(s.encoder(0)[3], w.encoder(0)[1]);
        assert_eq!(s.encoder(0)[2], vec![(6, 1)]);
        let other = StateSequence::two_user(&[A, B]).unwrap();
        assert!(schedule_pair_on(&other, &w).is_err());
    }

    #[test]
    fn joint_abc_layout() {
        let s = build_ic2_joint_abc(f(3));
        assert_eq!(s.rate(), RateValue::from_ratio(4, 3));
        // symbols (a1, a2, b1, b2)
        assert_eq!(s.encoder_matrix(0).as_slice(), &[1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0]);
        assert_eq!(s.encoder_matrix(1).as_slice(), &[0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0]);
        assert_eq!(s.config().desired(0), vec![0, 1]);
        assert_eq!(s.config().desired(1), vec![2, 3]);
        // slot C carries (a2, b1)
        let x = s.encode(&[1, 2, 0, 1]).unwrap();
        assert_eq!(x[2], vec![2, 0]);
    }

    #[test]
    fn joint_abc_decodes_at_all_ones() {
        let field = f(3);
        let s = build_ic2_joint_abc(field);
        let real = ChannelRealization::all_ones(s.sequence(), field);
        let msg = [2, 1, 1, 2];
        let y = s.receive(&real, &msg).unwrap();
        for r in 0..2 {
            for (j, v) in s.decode(&real, r, &y[r]).unwrap() {
                assert_eq!(v, Some(msg[j]));
            }
        }
    }

    #[test]
    fn joint_ab_layout() {
        let s = build_bc2_joint_ab(f(5));
        assert_eq!(s.rate(), RateValue::from_ratio(3, 2));
        assert_eq!(s.config().mode(), MessageMode::Bc);
        assert_eq!(s.config().desired(0), vec![0]);
        assert_eq!(s.config().desired(1), vec![1, 2]);
        assert_eq!(s.encoder_matrix(0).as_slice(), &[1, 0, 0, 0, 1, 0]);
        assert_eq!(s.encoder_matrix(1).as_slice(), &[0, 1, 0, 0, 0, 1]);
    }

    #[test]
    fn ic2_schedule_examples() {
        let field = f(5);
        let s = build_schedule_ic2(&fr([(1, 3), (1, 3), (1, 3), (0, 1)]), 3, field).unwrap();
        assert_eq!(s.rate(), RateValue::from_ratio(4, 3));
        let s = build_schedule_ic2(&fr([(0, 1), (0, 1), (0, 1), (1, 1)]), 4, field).unwrap();
        assert_eq!(s.rate(), RateValue::integer(2));
        // counts (4, 2, 1, 1): one triple, one D slot, four leftovers
        let s = build_schedule_ic2(&fr([(1, 2), (1, 4), (1, 8), (1, 8)]), 8, field).unwrap();
        assert_eq!(
            plan_ic2(s.sequence()),
            Ic2Plan { joint_triples: 1, d_slots: 1, leftover_slots: 4 }
        );
        assert_eq!(s.rate(), RateValue::from_ratio(10, 8));
    }

    #[test]
    fn leftover_slots_alternate_transmitters() {
        let seq = StateSequence::two_user(&[A, A, A]).unwrap();
        let s = schedule_ic2_on(&seq, f(3)).unwrap();
        let sources: Vec<_> = s.config().symbols().iter().map(|x| x.source.unwrap()).collect();
        assert_eq!(sources, vec![0, 1, 0]);
        assert_eq!(s.rate(), RateValue::integer(1));
    }

    #[test]
    fn bc2_schedule_examples() {
        let field = f(5);
        let s = build_schedule_bc2(&fr([(1, 2), (1, 2), (0, 1), (0, 1)]), 2, field).unwrap();
        assert_eq!(s.rate(), RateValue::from_ratio(3, 2));
        let s = build_schedule_bc2(&fr([(0, 1), (0, 1), (1, 1), (0, 1)]), 3, field).unwrap();
        assert_eq!(s.rate(), RateValue::integer(1));
        assert!(s.encoder(1).iter().all(|row| row.is_empty()), "Tx2 silent in C");
        // counts (2,2,2,2): two joint pairs, two C slots, two D slots
        let s = build_schedule_bc2(&fr([(1, 4), (1, 4), (1, 4), (1, 4)]), 8, field).unwrap();
        assert_eq!(plan_bc2(s.sequence()), Bc2Plan { joint_pairs: 2, d_slots: 2, single_slots: 2 });
        assert_eq!(s.rate(), RateValue::from_ratio(3, 2));
    }

    #[test]
    fn x2_schedule_uses_direct_groups_only() {
        let field = f(5);
        let s = build_schedule_x2(&fr([(1, 3), (1, 3), (1, 3), (0, 1)]), 3, field).unwrap();
        assert_eq!(s.rate(), RateValue::from_ratio(4, 3));
        assert_eq!(s.config().mode(), MessageMode::X);
        assert!(s.config().group(0, 1).is_empty());
        assert!(s.config().group(1, 0).is_empty());
        assert_eq!(s.config().group(0, 0).len() + s.config().group(1, 1).len(), 4);
        let s = build_schedule_x2(&fr([(0, 1), (0, 1), (0, 1), (1, 1)]), 5, field).unwrap();
        assert_eq!(s.rate(), RateValue::integer(2));
    }

    #[test]
    fn ic3_candidate_construction() {
        let field = f(3);
        let pair = [TopologyState::fully_connected(3), TopologyState::fully_connected(3)];
        let s = build_ic3_candidate(pair.clone(), [[true, true]; 3], field).unwrap();
        assert_eq!(s.rate(), RateValue::from_ratio(3, 2));
        for t in 0..3 {
            let e = s.encoder_matrix(t);
            assert_eq!((0..2).filter(|&r| e.get(r, t) != 0).count(), 2);
        }
        let err = build_ic3_candidate(pair, [[true, true], [false, false], [true, false]], field);
        assert!(matches!(err, Err(SchemeError::Assignment(_))));
    }

    #[test]
    fn schedules_reject_foreign_alphabets() {
        let seq = StateSequence::new(
            StateAlphabet::numbered(vec![TopologyState::diagonal(2)]).unwrap(),
            vec![0],
        )
        .unwrap();
        assert!(schedule_ic2_on(&seq, f(3)).is_err());
    }
}
