//! The Picard-Fuchs operator of the Fermat pencil and the local monodromy at
//! the large complex structure point.

use rug::{Integer, Rational};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{poly_eval, poly_mul, QMatrix, QPoly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("the fiber dimension must be a positive integer, got {0}")]
    InvalidDimension(i64),
}

/// `D_n = θ^{n+1} - φ ∏_{k=1}^{n+1} (θ + k/(n+2))` with `θ = φ d/dφ`.
///
/// Held both as a pair of θ-polynomials and in expanded form
/// `Σ_j p_j(φ) (d/dφ)^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuchsianOperator {
    n: u32,
    /// `θ^{n+1}`, coefficients in θ.
    theta_head: QPoly,
    /// `∏ (θ + k/(n+2))`, coefficients in θ.
    theta_tail: QPoly,
    /// `dcoeffs[j][m]` is the coefficient of `φ^m` in `p_j`.
    dcoeffs: Vec<QPoly>,
}

/// Builds `D_n` for the Fermat pencil of Calabi-Yau `n`-folds.
pub fn build_operator(n: i64) -> Result<FuchsianOperator, OperatorError> {
    if n < 1 || n > i64::from(u16::MAX) {
        return Err(OperatorError::InvalidDimension(n));
    }
    let n = n as u32;
    let order = n as usize + 1;
    let mut head = vec![Rational::new(); order + 1];
    head[order] = Rational::from(1);
    let mut tail: QPoly = vec![Rational::from(1)];
    for k in 1..=n + 1 {
        tail = poly_mul(&tail, &[Rational::from((k, n + 2)), Rational::from(1)]);
    }

    // θ^m = Σ_j S(m, j) φ^j D^j  (Stirling numbers of the second kind)
    let stirling = stirling2(order);
    let mut dcoeffs = vec![vec![Rational::new(); n as usize + 3]; order + 1];
    for (m, row) in stirling.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            if *s == 0 {
                continue;
            }
            if head[m] != 0 {
                dcoeffs[j][j] += Rational::from(&head[m] * s);
            }
            if tail[m] != 0 {
                dcoeffs[j][j + 1] -= Rational::from(&tail[m] * s);
            }
        }
    }
    for p in &mut dcoeffs {
        crate::exact::poly_trim(p);
    }
    Ok(FuchsianOperator { n, theta_head: head, theta_tail: tail, dcoeffs })
}

fn stirling2(max: usize) -> Vec<Vec<Integer>> {
    let mut s = vec![vec![Integer::new(); max + 1]; max + 1];
    s[0][0] = Integer::from(1);
    for m in 1..=max {
        for j in 1..=m {
            s[m][j] = Integer::from(&s[m - 1][j] * j as u32) + &s[m - 1][j - 1];
        }
    }
    s
}

impl FuchsianOperator {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Order of the operator, `n + 1`.
    pub fn order(&self) -> usize {
        self.n as usize + 1
    }

    /// Local exponent denominator `n + 2` (also the degree of the pencil).
    pub fn degree(&self) -> u32 {
        self.n + 2
    }

    pub fn theta_head(&self) -> &[Rational] {
        &self.theta_head
    }

    pub fn theta_tail(&self) -> &[Rational] {
        &self.theta_tail
    }

    /// `p_j(φ)` for `j = 0..=n+1`.
    pub fn dcoeffs(&self) -> &[QPoly] {
        &self.dcoeffs
    }

    /// `p_{n+1}(φ)`; vanishes exactly on the finite singular points.
    pub fn leading_coefficient(&self) -> &[Rational] {
        &self.dcoeffs[self.order()]
    }

    /// Applies the θ-form to `φ^m`; returns coefficients in powers of φ.
    pub fn apply_theta_form_to_monomial(&self, m: u32) -> QPoly {
        let mq = Rational::from(m);
        let mut out = vec![Rational::new(); m as usize + 2];
        out[m as usize] = poly_eval(&self.theta_head, &mq);
        out[m as usize + 1] = -poly_eval(&self.theta_tail, &mq);
        out
    }

    /// Applies the expanded `Σ p_j (d/dφ)^j` form to `φ^m`.
    pub fn apply_dcoeff_form_to_monomial(&self, m: u32) -> QPoly {
        let mut out = vec![Rational::new(); m as usize + self.n as usize + 4];
        for (j, p) in self.dcoeffs.iter().enumerate() {
            if j as u32 > m {
                continue;
            }
            let falling = (0..j as u32).fold(Integer::from(1), |acc, t| acc * (m - t));
            for (s, c) in p.iter().enumerate() {
                if *c != 0 {
                    out[m as usize - j + s] += Rational::from(c * &falling);
                }
            }
        }
        crate::exact::poly_trim(&mut out);
        out
    }

    /// Finite points where the leading coefficient vanishes, found by exact
    /// rational root testing of its candidates.
    pub fn finite_singular_points(&self) -> Vec<Rational> {
        let lead = self.leading_coefficient();
        let mut roots = Vec::new();
        if lead.first().is_some_and(|c| *c == 0) {
            roots.push(Rational::new());
        }
        // strip the power of φ, then the remaining factor has integer-scalable coefficients
        let low = lead.iter().position(|c| *c != 0).unwrap_or(0);
        let rest: Vec<Rational> = lead[low..].to_vec();
        let lcm = rest.iter().fold(Integer::from(1), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<Integer> = rest.iter().map(|c| Rational::from(c * &lcm).numer().clone()).collect();
        let (c0, cn) = (ints[0].clone().abs(), ints[ints.len() - 1].clone().abs());
        for p in divisors(&c0) {
            for q in divisors(&cn) {
                for sign in [1i32, -1] {
                    let cand = Rational::from((Integer::from(&p * sign), q.clone()));
                    if poly_eval(&rest, &cand) == 0 && !roots.contains(&cand) {
                        roots.push(cand);
                    }
                }
            }
        }
        roots.sort();
        roots
    }
}

fn divisors(x: &Integer) -> Vec<Integer> {
    let v = x.to_u64().unwrap_or(0);
    (1..=v).filter(|d| v % d == 0).map(Integer::from).collect()
}

/// Local monodromy at φ = 0 on the normalized canonical periods:
/// `T0[i][k] = C(i, k)` for `k <= i`.
pub fn t0_matrix(n: u32) -> QMatrix {
    QMatrix::pascal(&vec![Rational::from(1); n as usize + 1])
}

/// Human-readable θ-form, e.g. `θ^2 - φ(θ+1/3)(θ+2/3)`.
pub fn describe(op: &FuchsianOperator) -> String {
    let n = op.n();
    let factors: String = (1..=n + 1)
        .map(|k| format!("(θ+{})", Rational::from((k, n + 2))))
        .collect();
    format!("θ^{} - φ{}", n + 1, factors)
}

#[derive(Serialize)]
pub struct OperatorSummary {
    pub n: u32,
    pub order: usize,
    pub theta_form: String,
}
