//! Exact rational polynomials, truncated series and matrices.

use rug::{Integer, Rational};

/// Dense polynomial with rational coefficients, lowest degree first.
pub type QPoly = Vec<Rational>;

pub fn poly_trim(p: &mut QPoly) {
    while p.last().is_some_and(|c| *c == 0) {
        p.pop();
    }
}

pub fn poly_mul(a: &[Rational], b: &[Rational]) -> QPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

/// Evaluate at a rational point.
pub fn poly_eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::new();
    for c in p.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

/// Coefficients of `p(x + c)` in powers of `x`.
pub fn poly_shift(p: &[Rational], c: &Rational) -> QPoly {
    let mut q = p.to_vec();
    let n = q.len();
    // repeated synthetic division
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = Rational::from(c * &q[j + 1]);
            q[j] += t;
        }
    }
    q
}

/// Truncated product of two series, keeping `len` terms.
pub fn series_mul(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::new(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

/// Truncated quotient `a / b`; `b[0]` must be nonzero.
pub fn series_div(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    assert!(b.first().is_some_and(|c| *c != 0), "series division by non-unit");
    let inv0 = Rational::from(b[0].recip_ref());
    let mut out: Vec<Rational> = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = a.get(k).cloned().unwrap_or_default();
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            acc -= Rational::from(&b[j] * &out[k - j]);
        }
        out.push(acc * &inv0);
    }
    out
}

/// Square matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Rational::new(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Rational::from(1);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Matrix `M_ij = C(i,j) m_{i-j}` for `j <= i`, zero above the diagonal.
    pub fn pascal(first_column: &[Rational]) -> Self {
        let n = first_column.len();
        Self::from_fn(n, |i, j| {
            if j > i {
                Rational::new()
            } else {
                Rational::from(&first_column[i - j] * crate::numeric::binomial(i as u32, j as u32))
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Self::from_fn(n, |i, j| {
            let mut acc = Rational::new();
            for k in 0..n {
                if self[(i, k)] != 0 && other[(k, j)] != 0 {
                    acc += Rational::from(&self[(i, k)] * &other[(k, j)]);
                }
            }
            acc
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| Rational::from(&self[(i, j)] - &other[(i, j)]))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::identity(self.n);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| *c == 0)
    }

    pub fn to_integer_rows(&self) -> Option<Vec<Vec<Integer>>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let q = &self[(i, j)];
                        (*q.denom() == 1).then(|| q.numer().clone())
                    })
                    .collect()
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = vec![q(1, 1), q(-2, 3), q(5, 7), q(1, 2)];
        let c = q(3, 4);
        let s = poly_shift(&p, &c);
        for x in [q(0, 1), q(1, 1), q(-5, 3)] {
            let direct = poly_eval(&p, &Rational::from(&x + &c));
            assert_eq!(poly_eval(&s, &x), direct);
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = vec![q(1, 1), q(2, 3), q(-1, 5), q(7, 2)];
        let b = vec![q(3, 1), q(1, 1), q(0, 1), q(-4, 9)];
        let prod = series_mul(&a, &b, 4);
        assert_eq!(series_div(&prod, &b, 4), a);
    }

    #[test]
    fn pascal_matrices_commute() {
        let a = QMatrix::pascal(&[q(1, 1), q(2, 3), q(-1, 2), q(5, 1), q(1, 7)]);
        let b = QMatrix::pascal(&[q(1, 1), q(0, 1), q(3, 4), q(-2, 9), q(11, 3)]);
        assert_eq!(a.mul(&b), b.mul(&a));
    }
}
