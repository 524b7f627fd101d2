//! Rank, row-space membership and partial solving checked against span
//! enumeration over GF(3).

use alttim_core::{Field, Matrix};
use proptest::prelude::*;

const P: u32 = 3;

fn f3() -> Field {
    Field::new(P).unwrap()
}

/// All vectors in the span of `rows`, by enumerating every combination.
fn span(rows: &[Vec<u32>], cols: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let combos = P.pow(rows.len() as u32);
    for mut code in 0..combos {
        let mut v = vec![0u32; cols];
        for row in rows {
            let c = code % P;
            code /= P;
            for (x, &r) in v.iter_mut().zip(row) {
                *x = (*x + c * r) % P;
            }
        }
        out.push(v);
    }
    out.sort();
    out.dedup();
    out
}

fn brute_rank(rows: &[Vec<u32>], cols: usize) -> usize {
    let size = span(rows, cols).len();
    (0..=cols).find(|&r| P.pow(r as u32) as usize == size).unwrap()
}

fn matrix(rows: &[Vec<u32>], cols: usize) -> Matrix {
    Matrix::from_residues(f3(), rows.len(), cols, rows.concat()).unwrap()
}

fn arb_rows(max_rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    proptest::collection::vec(proptest::collection::vec(0..P, cols), 1..=max_rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rank_matches_span_size(rows in arb_rows(4, 4)) {
        prop_assert_eq!(matrix(&rows, 4).rank(), brute_rank(&rows, 4));
    }

    #[test]
    fn rank_is_transpose_invariant(rows in arb_rows(4, 5)) {
        let m = matrix(&rows, 5);
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn membership_matches_span(rows in arb_rows(4, 4), v in proptest::collection::vec(0..P, 4)) {
        let in_span = span(&rows, 4).binary_search(&v).is_ok();
        prop_assert_eq!(matrix(&rows, 4).rowspace_member(&v).unwrap(), in_span);
    }

    #[test]
    fn solve_for_matches_solution_enumeration(rows in arb_rows(4, 4), x0 in proptest::collection::vec(0..P, 4)) {
        let m = matrix(&rows, 4);
        let y = m.mul_vec(&x0).unwrap();
        let wanted = [0usize, 1, 2, 3];
        let got = m.solve_for(&y, &wanted).unwrap();
        // every x with m x = y
        let mut solutions = Vec::new();
        for code in 0..P.pow(4) {
            let x: Vec<u32> = (0..4).map(|i| code / P.pow(i) % P).collect();
            if m.mul_vec(&x).unwrap() == y {
                solutions.push(x);
            }
        }
        for (i, &j) in wanted.iter().enumerate() {
            let determined = solutions.iter().all(|s| s[j] == solutions[0][j]);
            match got[i] {
                Some(v) => {
                    prop_assert!(determined);
                    prop_assert_eq!(v.value(), x0[j]);
                }
                None => prop_assert!(!determined),
            }
        }
    }
}

#[test]
fn inconsistent_system_is_reported() {
    let m = Matrix::from_rows(f3(), &[[1i64, 1], [1, 1]]).unwrap();
    assert!(m.solve_for(&[0, 1], &[0]).is_err());
}
