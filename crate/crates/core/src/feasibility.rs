//! Exact feasibility of `{ s : As = b, s >= 0 }` by the phase-one simplex
//! method over the rationals, with Bland's rule for termination.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::exact_linalg::IntMatrix;

/// Returns a nonnegative rational solution of `As = b` if one exists.
pub fn nonnegative_solution(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigRational>> {
    let (rows, cols) = (a.rows(), a.cols());
    assert_eq!(b.len(), rows);
    // Columns: structural 0..cols, artificial cols..cols+rows, rhs last.
    let width = cols + rows + 1;
    let mut t: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            let flip = b[i].is_negative();
            let sign = |v: &BigInt| {
                let q = BigRational::from_integer(v.clone());
                if flip {
                    -q
                } else {
                    q
                }
            };
            let mut row = vec![BigRational::zero(); width];
            for (j, slot) in row.iter_mut().take(cols).enumerate() {
                *slot = sign(a.get(i, j));
            }
            row[cols + i] = BigRational::from_integer(1.into());
            row[width - 1] = sign(&b[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    // Objective: minimise the sum of artificials. Reduced costs for the
    // structural columns are minus the column sums.
    let mut cost = vec![BigRational::zero(); width];
    for row in &t {
        for j in 0..cols {
            cost[j] -= &row[j];
        }
        cost[width - 1] -= &row[width - 1];
    }

    while let Some(enter) = (0..cols + rows).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[width - 1] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Phase one is bounded below by zero, so an entering column always has a pivot.
        let (pr, _) = leave.expect("phase-one objective is bounded");
        pivot(&mut t, &mut cost, pr, enter);
        basis[pr] = enter;
    }

    if !cost[width - 1].is_zero() {
        return None;
    }
    let mut s = vec![BigRational::zero(); cols];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < cols {
            s[bv] = t[i][width - 1].clone();
        }
    }
    Some(s)
}

fn pivot(t: &mut [Vec<BigRational>], cost: &mut [BigRational], pr: usize, pc: usize) {
    let inv = t[pr][pc].recip();
    for v in t[pr].iter_mut() {
        *v = &*v * &inv;
    }
    let prow = t[pr].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != pr && !row[pc].is_zero() {
            let f = row[pc].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= &f * p;
            }
        }
    }
    if !cost[pc].is_zero() {
        let f = cost[pc].clone();
        for (v, p) in cost.iter_mut().zip(&prow) {
            *v -= &f * p;
        }
    }
}
