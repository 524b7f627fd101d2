//! Statistical checks of realization sampling and sequence generation.

mod common;

use alttim_core::topology::{iid_sequence, quota_counts, sample_realization, StateAlphabet};
use alttim_core::{Rational, StateFractions, StateSequence, TwoUserState};
use common::field;
use proptest::prelude::*;

#[test]
fn sampled_coefficients_are_uniform_on_nonzero_residues() {
    let seq = StateSequence::two_user(&[TwoUserState::C; 4]).unwrap();
    let p = 5;
    let mut counts = [0u64; 5];
    for seed in 0..2000 {
        let real = sample_realization(&seq, field(p), seed);
        for v in real.link_values(&seq) {
            counts[v as usize] += 1;
        }
    }
    assert_eq!(counts[0], 0);
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / 4.0;
    let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 3 degrees of freedom, 0.1% critical value
    assert!(chi2 < 16.27, "chi-square {chi2}");
}

#[test]
fn sampling_is_deterministic() {
    let seq = StateSequence::two_user(&[TwoUserState::A, TwoUserState::C]).unwrap();
    assert_eq!(sample_realization(&seq, field(7), 9), sample_realization(&seq, field(7), 9));
}

fn arb_fractions() -> impl Strategy<Value = StateFractions> {
    (1i64..=24, proptest::collection::vec(0i64..=24, 3)).prop_map(|(den, mut cuts)| {
        cuts.iter_mut().for_each(|c| *c = (*c).min(den));
        cuts.sort_unstable();
        let parts = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], den - cuts[2]];
        StateFractions::new(parts.iter().map(|&p| Rational::new(p, den)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn quota_counts_track_fractions(f in arb_fractions(), n in 1usize..500) {
        let counts = quota_counts(&f, n);
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
        for (i, &c) in counts.iter().enumerate() {
            let target = f.get(i) * Rational::from_integer(n as i64);
            let diff = Rational::from_integer(c as i64) - target;
            prop_assert!(diff < Rational::from_integer(1) && diff > Rational::from_integer(-1));
        }
    }

    #[test]
    fn iid_sequences_only_use_supported_states(f in arb_fractions(), seed in any::<u64>()) {
        let seq = iid_sequence(StateAlphabet::two_user(), &f, 50, seed).unwrap();
        prop_assert_eq!(seq.len(), 50);
        for slot in 0..50 {
            prop_assert!(f.get(seq.state_id(slot)) > Rational::from_integer(0));
        }
    }
}
