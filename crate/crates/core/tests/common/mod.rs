#![allow(dead_code)]

use alttim_core::scheme::ic_scheme_from_columns;
use alttim_core::{Field, LinearScheme, StateSequence, TwoUserState};
use proptest::prelude::*;

pub fn field(p: u32) -> Field {
    Field::new(p).unwrap()
}

/// A two-user sequence of length 1..=3 and a random interference-channel
/// scheme on it with 1..=2 nonzero columns per transmitter.
pub fn arb_ic2_scheme() -> impl Strategy<Value = LinearScheme> {
    (prop_oneof![Just(3u32), Just(5u32)], proptest::collection::vec(0usize..4, 1..=3))
        .prop_flat_map(|(p, states)| {
            let n = states.len();
            let col = proptest::collection::vec(0..p, n).prop_filter("nonzero", |c| c.iter().any(|&x| x != 0));
            let user = proptest::collection::vec(col, 1..=2);
            (Just(p), Just(states), proptest::collection::vec(user, 2))
        })
        .prop_map(|(p, states, cols)| {
            let seq = StateSequence::two_user(&states.iter().map(|&i| TwoUserState::ALL[i]).collect::<Vec<_>>()).unwrap();
            ic_scheme_from_columns(&seq, field(p), &cols).unwrap()
        })
}

/// Both transmitters repeat one symbol over two state-C slots. Receiver `r`
/// fails exactly when its 2x2 channel matrix over the two slots is singular.
pub fn repeat_in_cc(p: u32) -> LinearScheme {
    use TwoUserState::C;
    let seq = StateSequence::two_user(&[C, C]).unwrap();
    ic_scheme_from_columns(&seq, field(p), &[vec![vec![1, 1]], vec![vec![1, 1]]]).unwrap()
}

/// Joint A/B/C layout plus an extra A slot where both transmitters send a
/// fresh symbol, which receiver 1 can never separate.
pub fn broken_abca(p: u32) -> LinearScheme {
    use TwoUserState::*;
    let seq = StateSequence::two_user(&[A, B, C, A]).unwrap();
    let cols = vec![
        vec![vec![1, 0, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 0, 1]],
        vec![vec![1, 0, 1, 0], vec![0, 1, 0, 0], vec![0, 0, 0, 1]],
    ];
    ic_scheme_from_columns(&seq, field(p), &cols).unwrap()
}

/// Random schemes whose realization space is small enough to enumerate
/// many times per test case.
pub fn arb_small_ic2_scheme() -> impl Strategy<Value = LinearScheme> {
    arb_ic2_scheme().prop_filter("small realization space", |s| {
        alttim_core::topology::RealizationSpace::new(s.sequence(), s.field()).cardinality() <= 4096
    })
}
