//! Exact linear algebra over Q.

use rug::{Integer, Rational};

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(rows: &mut [Vec<Rational>]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c].cmp0() != std::cmp::Ordering::Equal) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Rational::from(1) / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i == r || rows[i][c].cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let f = rows[i][c].clone();
            for j in c..ncols {
                let t = Rational::from(&f * &rows[r][j]);
                rows[i][j] -= t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Solves x·A = b for a row vector x, where A is given by its rows.
/// Returns one solution (free variables set to zero) or `None`.
pub fn solve_left(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let m = b.len();
    // columns of A become equations: Σ_i x_i A[i][j] = b_j
    let mut sys: Vec<Vec<Rational>> = (0..m)
        .map(|j| {
            let mut row: Vec<Rational> = (0..n).map(|i| a[i][j].clone()).collect();
            row.push(b[j].clone());
            row
        })
        .collect();
    let piv = rref(&mut sys);
    if piv.contains(&n) {
        return None;
    }
    let mut x = vec![Rational::new(); n];
    for (r, &c) in piv.iter().enumerate() {
        x[c] = sys[r][n].clone();
    }
    Some(x)
}

pub fn to_rational_rows(m: &crate::lattice::IntMatrix) -> Vec<Vec<Rational>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|x| Rational::from(x.clone())).collect()).collect()
}

/// Least common multiple of all denominators.
pub fn common_denominator(v: &[Rational]) -> Integer {
    let mut l = Integer::from(1);
    for x in v {
        l.lcm_mut(x.denom());
    }
    l
}

/// Returns the integer vector when every entry is integral.
pub fn as_integers(v: &[Rational]) -> Option<Vec<Integer>> {
    v.iter().map(|x| if *x.denom() == 1 { Some(x.numer().clone()) } else { None }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn solves_consistent_systems() {
        let a = vec![vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(4, 1)]];
        let x = solve_left(&a, &[q(5, 1), q(6, 1)]).unwrap();
        // x0*(1,2) + x1*(3,4) = (5,6)
        assert_eq!(x, vec![q(-1, 1), q(2, 1)]);
        let sing = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert!(solve_left(&sing, &[q(1, 1), q(1, 1)]).is_none());
        assert_eq!(rank(&sing), 1);
        assert_eq!(common_denominator(&[q(1, 2), q(1, 3)]), 6);
        assert!(as_integers(&[q(1, 2)]).is_none());
    }
}
