//! Exhaustive field axioms for every prime up to 101.

use alttim_core::Field;

fn primes_to(n: u32) -> Vec<u32> {
    (2..=n).filter(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)).collect()
}

#[test]
fn axioms_hold_exhaustively() {
    let primes = primes_to(101);
    assert_eq!(primes.len(), 26);
    for p in primes {
        let f = Field::new(p).unwrap();
        for a in 0..p {
            assert_eq!(f.add(a, 0), a);
            assert_eq!(f.mul(a, 1), a);
            assert_eq!(f.add(a, f.neg(a)), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "p={p} a={a}");
            }
            for b in 0..p {
                assert_eq!(f.add(a, b), (a + b) % p);
                assert_eq!(f.mul(a, b), (a * b) % p);
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.sub(f.add(a, b), b), a);
                for c in 0..p {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
        assert!(f.inv(0).is_err());
    }
}

#[test]
fn non_primes_are_rejected() {
    for n in [0, 1, 4, 9, 15, 100] {
        assert!(Field::new(n).is_err(), "{n}");
    }
}

#[test]
fn fermat_little_theorem() {
    for p in primes_to(101) {
        let f = Field::new(p).unwrap();
        for a in 1..p {
            assert_eq!(f.pow(a, (p - 1) as u64), 1);
        }
    }
}
