//! Closed-form sum capacities, outer bounds and baselines for the two-user
//! networks with alternating connectivity.
//!
//! All values are exact rationals. The X-channel and broadcast formulas are
//! only known for symmetric fractions (`λ_A = λ_B`) and refuse anything else.

use serde::Serialize;
use thiserror::Error;

use crate::rational::{RateValue, Rational};
use crate::topology::{StateFractions, TwoUserState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapacityError {
    #[error("{theorem} requires λ_A = λ_B (got λ_A = {a}, λ_B = {b}); the asymmetric capacity is unknown")]
    Asymmetric {
        theorem: &'static str,
        a: String,
        b: String,
    },
    #[error("expected four two-user state fractions, got {0}")]
    NotTwoUser(usize),
}

/// Names under which formulas are reported.
pub const IC_THEOREM: &str = "two-user interference channel capacity";
pub const X_THEOREM: &str = "symmetric two-user X channel capacity";
pub const BC_THEOREM: &str = "symmetric two-user vector BC capacity";

fn check_two_user(f: &StateFractions) -> Result<(), CapacityError> {
    if f.len() != 4 {
        return Err(CapacityError::NotTwoUser(f.len()));
    }
    Ok(())
}

fn lambdas(f: &StateFractions) -> Result<[Rational; 4], CapacityError> {
    check_two_user(f)?;
    Ok(TwoUserState::ALL.map(|s| f.lambda(s)))
}

fn one() -> Rational {
    Rational::from_integer(1)
}

/// `1 + λ_D + min(λ_A, λ_B, λ_C)`.
pub fn theorem1_sum_capacity(f: &StateFractions) -> Result<RateValue, CapacityError> {
    let [a, b, c, d] = lambdas(f)?;
    Ok(RateValue::new(one() + d + a.min(b).min(c)))
}

/// The three sum-rate outer bounds of the two-user interference channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundSet {
    /// `1 + λ_C + λ_D`, from separability of the two Z states.
    pub z_bound: RateValue,
    /// `1 + λ_B + λ_D`, receiver 1 given receiver 2's B and D outputs.
    pub mac_bound_1: RateValue,
    /// `1 + λ_A + λ_D`, receiver 2 given receiver 1's A and D outputs.
    pub mac_bound_2: RateValue,
}

impl BoundSet {
    pub fn min(&self) -> RateValue {
        self.z_bound.min(self.mac_bound_1).min(self.mac_bound_2)
    }

    pub fn entries(&self) -> [(&'static str, RateValue); 3] {
        [
            ("z_bound", self.z_bound),
            ("mac_bound_1", self.mac_bound_1),
            ("mac_bound_2", self.mac_bound_2),
        ]
    }
}

pub fn outer_bounds_ic2(f: &StateFractions) -> Result<BoundSet, CapacityError> {
    let [a, b, c, d] = lambdas(f)?;
    Ok(BoundSet {
        z_bound: RateValue::new(one() + c + d),
        mac_bound_1: RateValue::new(one() + b + d),
        mac_bound_2: RateValue::new(one() + a + d),
    })
}

/// Best rate when each state is coded on its own (`1 + λ_D`) and the gain of
/// joint coding over it (`min(λ_A, λ_B, λ_C)`).
pub fn baseline_and_gain_ic2(f: &StateFractions) -> Result<(RateValue, RateValue), CapacityError> {
    let [_, _, _, d] = lambdas(f)?;
    let baseline = RateValue::new(one() + d);
    let capacity = theorem1_sum_capacity(f)?;
    Ok((baseline, capacity - baseline))
}

fn require_symmetric(f: &StateFractions, theorem: &'static str) -> Result<[Rational; 4], CapacityError> {
    let l = lambdas(f)?;
    if l[0] != l[1] {
        return Err(CapacityError::Asymmetric {
            theorem,
            a: crate::rational::format_rational(&l[0]),
            b: crate::rational::format_rational(&l[1]),
        });
    }
    Ok(l)
}

/// `1 + λ_D + min(λ_A, λ_C)` for the symmetric X channel.
pub fn theorem2_sum_capacity(f: &StateFractions) -> Result<RateValue, CapacityError> {
    let [a, _, c, d] = require_symmetric(f, X_THEOREM)?;
    Ok(RateValue::new(one() + d + a.min(c)))
}

/// `1 + λ_A + λ_D` for the symmetric vector broadcast channel. Meaningful
/// only over fields larger than GF(2).
pub fn theorem3_sum_capacity(f: &StateFractions) -> Result<RateValue, CapacityError> {
    let [a, _, _, d] = require_symmetric(f, BC_THEOREM)?;
    Ok(RateValue::new(one() + a + d))
}

/// Per-state CSIT of the equivalent alternating-CSIT broadcast model:
/// `P` = perfect, `N` = none, listed for (user 1, user 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CsitLevel {
    P,
    N,
}

pub fn csit_state_mapping() -> [(TwoUserState, (CsitLevel, CsitLevel)); 4] {
    use CsitLevel::*;
    [
        (TwoUserState::A, (N, P)),
        (TwoUserState::B, (P, N)),
        (TwoUserState::C, (N, N)),
        (TwoUserState::D, (P, P)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fr(v: [(i64, i64); 4]) -> StateFractions {
        StateFractions::new(v.iter().map(|&(n, d)| Rational::new(n, d)).collect()).unwrap()
    }

    fn rv(n: i64, d: i64) -> RateValue {
        RateValue::from_ratio(n, d)
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(theorem1_sum_capacity(&fr([(1, 3), (1, 3), (1, 3), (0, 1)])).unwrap(), rv(4, 3));
        assert_eq!(theorem1_sum_capacity(&fr([(0, 1), (0, 1), (0, 1), (1, 1)])).unwrap(), rv(2, 1));
        assert_eq!(theorem1_sum_capacity(&fr([(1, 1), (0, 1), (0, 1), (0, 1)])).unwrap(), rv(1, 1));
    }

    #[test]
    fn bound_examples() {
        let b = outer_bounds_ic2(&fr([(1, 3), (1, 3), (1, 3), (0, 1)])).unwrap();
        assert_eq!([b.z_bound, b.mac_bound_1, b.mac_bound_2], [rv(4, 3); 3]);
        let b = outer_bounds_ic2(&fr([(0, 1), (0, 1), (0, 1), (1, 1)])).unwrap();
        assert_eq!([b.z_bound, b.mac_bound_1, b.mac_bound_2], [rv(2, 1); 3]);
        // distinct entries land in the right slots
        let b = outer_bounds_ic2(&fr([(1, 2), (1, 4), (1, 8), (1, 8)])).unwrap();
        assert_eq!(b.z_bound, rv(5, 4));
        assert_eq!(b.mac_bound_1, rv(11, 8));
        assert_eq!(b.mac_bound_2, rv(13, 8));
    }

    #[test]
    fn baseline_examples() {
        let (base, gain) = baseline_and_gain_ic2(&fr([(1, 3), (1, 3), (1, 3), (0, 1)])).unwrap();
        assert_eq!((base, gain), (rv(1, 1), rv(1, 3)));
        let (base, gain) = baseline_and_gain_ic2(&fr([(1, 2), (1, 2), (0, 1), (0, 1)])).unwrap();
        assert_eq!((base, gain), (rv(1, 1), rv(0, 1)));
    }

    #[test]
    fn theorem2_examples() {
        assert_eq!(theorem2_sum_capacity(&fr([(1, 4); 4])).unwrap(), rv(3, 2));
        assert_eq!(theorem2_sum_capacity(&fr([(1, 3), (1, 3), (1, 3), (0, 1)])).unwrap(), rv(4, 3));
        assert!(matches!(
            theorem2_sum_capacity(&fr([(1, 2), (1, 4), (1, 4), (0, 1)])),
            Err(CapacityError::Asymmetric { theorem: X_THEOREM, .. })
        ));
    }

    #[test]
    fn theorem3_examples() {
        assert_eq!(theorem3_sum_capacity(&fr([(1, 2), (1, 2), (0, 1), (0, 1)])).unwrap(), rv(3, 2));
        assert_eq!(theorem3_sum_capacity(&fr([(0, 1), (0, 1), (0, 1), (1, 1)])).unwrap(), rv(2, 1));
        assert_eq!(theorem3_sum_capacity(&fr([(0, 1), (0, 1), (1, 1), (0, 1)])).unwrap(), rv(1, 1));
        assert!(theorem3_sum_capacity(&fr([(1, 2), (0, 1), (1, 2), (0, 1)])).is_err());
    }

    #[test]
    fn csit_mapping_table() {
        use CsitLevel::*;
        let table = csit_state_mapping();
        assert_eq!(table[0], (TwoUserState::A, (N, P)));
        assert_eq!(table[3], (TwoUserState::D, (P, P)));
        let images: std::collections::HashSet<_> = table.iter().map(|(_, c)| *c).collect();
        assert_eq!(images.len(), 4);
        let states: std::collections::HashSet<_> = table.iter().map(|(s, _)| *s).collect();
        assert_eq!(states.len(), 4);
    }

    fn arb_fractions() -> impl Strategy<Value = StateFractions> {
        (1i64..=60, proptest::collection::vec(0i64..=60, 3)).prop_map(|(den, mut cuts)| {
            cuts.iter_mut().for_each(|c| *c = (*c).min(den));
            cuts.sort_unstable();
            let parts = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], den - cuts[2]];
            StateFractions::new(parts.iter().map(|&p| Rational::new(p, den)).collect()).unwrap()
        })
    }

    fn arb_symmetric() -> impl Strategy<Value = StateFractions> {
        (1i64..=40, 0i64..=40, 0i64..=40).prop_filter_map("fits", |(den, a, c)| {
            let d = 2 * den - 2 * a - c;
            (d >= 0 && 2 * a + c <= 2 * den).then(|| {
                let q = 2 * den;
                StateFractions::new(vec![
                    Rational::new(a, q),
                    Rational::new(a, q),
                    Rational::new(c, q),
                    Rational::new(d, q),
                ])
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn capacity_is_min_of_bounds(f in arb_fractions()) {
            prop_assert_eq!(theorem1_sum_capacity(&f).unwrap(), outer_bounds_ic2(&f).unwrap().min());
        }

        #[test]
        fn capacity_range(f in arb_fractions()) {
            let c = theorem1_sum_capacity(&f).unwrap();
            prop_assert!(c >= RateValue::integer(1) && c <= RateValue::integer(2));
            prop_assert_eq!(c == RateValue::integer(2), f.lambda(TwoUserState::D) == one());
        }

        #[test]
        fn gain_vanishes_without_all_three(f in arb_fractions()) {
            let (base, gain) = baseline_and_gain_ic2(&f).unwrap();
            prop_assert!(theorem1_sum_capacity(&f).unwrap() >= base);
            let zero = [TwoUserState::A, TwoUserState::B, TwoUserState::C]
                .iter()
                .any(|&s| f.lambda(s) == Rational::from_integer(0));
            prop_assert_eq!(gain.is_zero(), zero);
        }

        #[test]
        fn symmetric_identities(f in arb_symmetric()) {
            let c1 = theorem1_sum_capacity(&f).unwrap();
            let c2 = theorem2_sum_capacity(&f).unwrap();
            let c3 = theorem3_sum_capacity(&f).unwrap();
            prop_assert_eq!(c2, c1);
            let a = f.lambda(TwoUserState::A);
            let c = f.lambda(TwoUserState::C);
            prop_assert_eq!((c3 - c1).value(), a - a.min(c));
            prop_assert!(c3 >= c1);
        }
    }
}
