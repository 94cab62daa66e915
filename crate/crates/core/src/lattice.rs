//! Exact integral LLL reduction (all Gram-Schmidt data kept as integers).

use rug::Integer;

/// Reduces the rows of `basis` in place with parameter `δ = num/den`.
///
/// The rows must be linearly independent. Returns `false` if they are not.
pub fn lll_reduce(basis: &mut [Vec<Integer>], num: u32, den: u32) -> bool {
    let n = basis.len();
    if n <= 1 {
        return true;
    }
    let dot = |a: &[Integer], b: &[Integer]| -> Integer {
        a.iter().zip(b).fold(Integer::new(), |acc, (x, y)| acc + Integer::from(x * y))
    };
    // d[0] = 1, d[i+1] = det of the Gram matrix of the first i+1 rows
    let mut d = vec![Integer::new(); n + 1];
    let mut lam = vec![vec![Integer::new(); n]; n];
    d[0] = Integer::from(1);
    d[1] = dot(&basis[0], &basis[0]);
    if d[1] == 0 {
        return false;
    }
    let mut k = 1usize;
    let mut k_max = 0usize;
    while k < n {
        if k > k_max {
            k_max = k;
            for j in 0..=k {
                let mut u = dot(&basis[k], &basis[j]);
                for i in 0..j {
                    u = (Integer::from(&d[i + 1] * &u) - Integer::from(&lam[k][i] * &lam[j][i])) / &d[i];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u == 0 {
                        return false;
                    }
                    d[k + 1] = u;
                }
            }
        }
        reduce(basis, &mut lam, &d, k, k - 1);
        let lhs = Integer::from(&d[k + 1] * &d[k - 1]) * den;
        let rhs = Integer::from(d[k].square_ref()) * num - Integer::from(lam[k][k - 1].square_ref()) * den;
        if lhs < rhs {
            swap(basis, &mut lam, &mut d, k, k_max);
            k = (k - 1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                reduce(basis, &mut lam, &d, k, l);
            }
            k += 1;
        }
    }
    true
}

fn reduce(basis: &mut [Vec<Integer>], lam: &mut [Vec<Integer>], d: &[Integer], k: usize, l: usize) {
    let twice = Integer::from(&lam[k][l] * 2u32).abs();
    if twice <= d[l + 1] {
        return;
    }
    // nearest integer to lam / d
    let q = {
        let num = Integer::from(&lam[k][l] * 2u32) + &d[l + 1];
        let den = Integer::from(&d[l + 1] * 2u32);
        num.div_rem_floor(den).0
    };
    let (lo, hi) = basis.split_at_mut(k);
    for (x, y) in hi[0].iter_mut().zip(&lo[l]) {
        *x -= Integer::from(&q * y);
    }
    lam[k][l] -= Integer::from(&q * &d[l + 1]);
    for i in 0..l {
        let t = Integer::from(&q * &lam[l][i]);
        lam[k][i] -= t;
    }
}

fn swap(basis: &mut [Vec<Integer>], lam: &mut [Vec<Integer>], d: &mut [Integer], k: usize, k_max: usize) {
    basis.swap(k, k - 1);
    for j in 0..k - 1 {
        let t = std::mem::take(&mut lam[k][j]);
        lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
    }
    let l = lam[k][k - 1].clone();
    let b = (Integer::from(&d[k - 1] * &d[k + 1]) + Integer::from(l.square_ref())) / &d[k];
    for i in k + 1..=k_max {
        let t = lam[i][k].clone();
        lam[i][k] = (Integer::from(&d[k + 1] * &lam[i][k - 1]) - Integer::from(&l * &t)) / &d[k];
        lam[i][k - 1] = (Integer::from(&b * &t) + Integer::from(&l * &lam[i][k])) / &d[k + 1];
    }
    d[k] = b;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<Integer>> {
        rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect()
    }

    #[test]
    fn textbook_example() {
        let mut b = ints(&[&[1, 1, 1], &[-1, 0, 2], &[3, 5, 6]]);
        assert!(lll_reduce(&mut b, 3, 4));
        assert_eq!(b, ints(&[&[0, 1, 0], &[1, 0, 1], &[-1, 0, 2]]));
    }

    #[test]
    fn detects_dependence() {
        let mut b = ints(&[&[1, 2], &[2, 4]]);
        assert!(!lll_reduce(&mut b, 3, 4));
    }

    fn det3(b: &[Vec<Integer>]) -> Integer {
        let m = |i: usize, j: usize| b[i][j].clone();
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    }

    proptest! {
        #[test]
        fn reduction_preserves_lattice_and_shrinks(v in proptest::collection::vec(-1000i64..1000, 9)) {
            let mut b: Vec<Vec<Integer>> = v.chunks(3).map(|c| c.iter().map(|&x| Integer::from(x)).collect()).collect();
            let det = det3(&b).abs();
            prop_assume!(det != 0);
            let before = b.iter().map(|r| r.iter().map(|x| Integer::from(x.square_ref())).sum::<Integer>()).min().unwrap();
            prop_assert!(lll_reduce(&mut b, 99, 100));
            prop_assert_eq!(det3(&b).abs(), det);
            let after = Integer::from(b[0].iter().map(|x| Integer::from(x.square_ref())).sum::<Integer>());
            // |b_1|^2 <= (δ - 1/4)^{-(n-1)} λ_1^2 with δ = 0.99, n = 3
            prop_assert!(after * 10000u32 <= before * 33058u32);
        }
    }
}
