//! Frobenius basis at the large complex structure point as exact rational
//! power series, plus the checks that hold for it exactly: the closed-form
//! oracle, annihilation by the operator and the Wronskian identity.

use std::io::{BufRead, Write};

use rug::ops::Pow;
use rug::{Integer, Rational};
use thiserror::Error;

use crate::exact::{poly_shift, series_div, series_mul};
use crate::numeric::{binomial, factorial};
use crate::operator::FuchsianOperator;

/// Exact coefficients of `h_0 .. h_n` through `φ^K`.
///
/// `h_i = ∂^i h(ε, φ) / ∂ε^i |_{ε=0}` with `h(ε, φ) = Σ a_k(ε) φ^k`, so
/// the canonical periods are `ϖ_i = Σ_k C(i,k) h_k log^{i-k} φ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusSolution {
    n: u32,
    coeffs: Vec<Vec<Rational>>,
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("truncation order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("series does not match operator (n={expected}, got n={found})")]
    OperatorMismatch { expected: u32, found: u32 },
}

impl FrobeniusSolution {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Highest retained power `K`.
    pub fn order(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn coeff(&self, i: usize, k: usize) -> &Rational {
        &self.coeffs[i][k]
    }

    /// Coefficients of `h_i`.
    pub fn row(&self, i: usize) -> &[Rational] {
        &self.coeffs[i]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.coeffs
    }

    /// Continues the recursion up to `φ^k_new`; no-op if already there.
    pub fn extend(&mut self, op: &FuchsianOperator, k_new: usize) -> Result<(), SeriesError> {
        if op.n() != self.n {
            return Err(SeriesError::OperatorMismatch { expected: op.n(), found: self.n });
        }
        let len = self.n as usize + 1;
        let k_old = self.order();
        if k_new <= k_old {
            return Ok(());
        }
        // a_K(ε) as a truncated ε-series, recovered from the stored derivatives
        let mut a: Vec<Rational> = (0..len)
            .map(|i| Rational::from(&self.coeffs[i][k_old] / factorial(i as u32)))
            .collect();
        for row in &mut self.coeffs {
            row.reserve(k_new - k_old);
        }
        let facts: Vec<Integer> = (0..len as u32).map(factorial).collect();
        for k in k_old + 1..=k_new {
            a = recursion_step(op, &a, k, len);
            for (i, c) in a.iter().enumerate() {
                self.coeffs[i].push(Rational::from(c * &facts[i]));
            }
        }
        Ok(())
    }

    /// Builds a solution from a table (used by the series cache).
    pub fn from_table(n: u32, coeffs: Vec<Vec<Rational>>) -> Self {
        assert_eq!(coeffs.len(), n as usize + 1);
        Self { n, coeffs }
    }
}

/// `a_k(ε) = a_{k-1}(ε) B(ε+k-1) / A(ε+k)` for `D = A(θ) - φ B(θ)`.
fn recursion_step(op: &FuchsianOperator, prev: &[Rational], k: usize, len: usize) -> Vec<Rational> {
    let num = poly_shift(op.theta_tail(), &Rational::from(k as u64 - 1));
    let den = poly_shift(op.theta_head(), &Rational::from(k as u64));
    let t = series_mul(prev, &num, len);
    series_div(&t, &den, len)
}

/// Frobenius solutions `h_0..h_n` of `op` through `φ^K`, exactly.
pub fn frobenius_series(op: &FuchsianOperator, k: usize) -> Result<FrobeniusSolution, SeriesError> {
    if k < 1 {
        return Err(SeriesError::InvalidOrder(k));
    }
    let len = op.order();
    let mut coeffs = vec![vec![Rational::new()]; len];
    coeffs[0][0] = Rational::from(1);
    let mut sol = FrobeniusSolution { n: op.n(), coeffs };
    sol.extend(op, k)?;
    Ok(sol)
}

/// Independent closed form for `coeffs[d][k]`: the `d`-th ε-derivative at
/// zero of `a_k(ε) = ∏_{m=1..k} ∏_l (ε+m-1+l/(n+2)) / (ε+m)^{n+1}`,
/// computed through power sums of the logarithmic derivative.
pub fn closed_form_ratio(n: u32, k: u32, derivative_order: u32) -> Rational {
    let d = derivative_order as usize;
    if k == 0 {
        return Rational::from(u32::from(d == 0));
    }
    let deg = n + 2;
    let mut value = Rational::from(1);
    // power sums Σ c^{-j} over numerator roots minus (n+1) Σ m^{-j}
    let mut sums = vec![Rational::new(); d + 1];
    for m in 1..=k {
        for l in 1..=n + 1 {
            let c = Rational::from(((m - 1) * deg + l, deg));
            value *= &c;
            let inv = Rational::from(c.recip_ref());
            let mut p = inv.clone();
            for s in sums.iter_mut().skip(1) {
                *s += &p;
                p *= &inv;
            }
        }
        let mq = Rational::from(m);
        let mut mp = mq.clone();
        for _ in 0..=n {
            value /= &mq;
        }
        for s in sums.iter_mut().skip(1) {
            *s -= Rational::from(&Rational::from(mp.recip_ref()) * (n + 1));
            mp *= &mq;
        }
    }
    // log a_k(ε) - log a_k(0) = Σ_j (-1)^{j+1} sums_j ε^j / j
    let lam: Vec<Rational> = (0..=d)
        .map(|j| {
            if j == 0 {
                Rational::new()
            } else {
                let t = Rational::from(&sums[j] / j as u32);
                if j % 2 == 1 { t } else { -t }
            }
        })
        .collect();
    // E = exp(Λ): E_t = (1/t) Σ_{j=1..t} j Λ_j E_{t-j}
    let mut e = vec![Rational::from(1)];
    for t in 1..=d {
        let mut acc = Rational::new();
        for j in 1..=t {
            acc += Rational::from(&lam[j] * &e[t - j]) * j as u32;
        }
        e.push(acc / t as u32);
    }
    value * &e[d] * factorial(derivative_order)
}

/// A function `Σ_p L^p s_p(φ)` with `L = log φ` kept as a formal symbol;
/// `parts[p]` is the truncated series `s_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogSeries {
    pub parts: Vec<Vec<Rational>>,
}

impl LogSeries {
    /// `ϖ_i = Σ_k C(i,k) h_k L^{i-k}` truncated at `φ^K`.
    pub fn canonical_period(sol: &FrobeniusSolution, i: usize) -> Self {
        let len = sol.order() + 1;
        let mut parts = vec![vec![Rational::new(); len]; i + 1];
        for k in 0..=i {
            let c = binomial(i as u32, k as u32);
            for (t, h) in sol.row(k).iter().enumerate() {
                parts[i - k][t] = Rational::from(h * &c);
            }
        }
        Self { parts }
    }

    /// `θ(s L^p) = (θ s) L^p + p s L^{p-1}`.
    pub fn theta(&self) -> Self {
        let mut parts: Vec<Vec<Rational>> = self
            .parts
            .iter()
            .map(|s| s.iter().enumerate().map(|(t, c)| Rational::from(c * t as u32)).collect())
            .collect();
        for p in 1..self.parts.len() {
            for (t, c) in self.parts[p].iter().enumerate() {
                parts[p - 1][t] += Rational::from(c * p as u32);
            }
        }
        Self { parts }
    }

    fn scaled_add(&mut self, other: &Self, c: &Rational, shift: usize) {
        for (p, s) in other.parts.iter().enumerate() {
            for t in 0..s.len().saturating_sub(shift) {
                self.parts[p][t + shift] += Rational::from(&s[t] * c);
            }
        }
    }

    fn zero_like(&self) -> Self {
        Self { parts: vec![vec![Rational::new(); self.parts[0].len()]; self.parts.len()] }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(|s| s.iter().all(|c| *c == 0))
    }
}

/// Applies `op` in θ-form to a log-series; the result is exact through the
/// retained order.
pub fn apply_operator(op: &FuchsianOperator, f: &LogSeries) -> LogSeries {
    let mut powers = vec![f.clone()];
    for _ in 0..op.order() {
        let next = powers.last().unwrap().theta();
        powers.push(next);
    }
    let mut out = f.zero_like();
    for (m, c) in op.theta_head().iter().enumerate() {
        if *c != 0 {
            out.scaled_add(&powers[m], c, 0);
        }
    }
    for (m, c) in op.theta_tail().iter().enumerate() {
        if *c != 0 {
            out.scaled_add(&powers[m], &Rational::from(-c), 1);
        }
    }
    out
}

/// Series of `det U(φ)`, `U_ij = θ^i ϖ_j / i!`, with the logarithm set to
/// zero (the determinant does not depend on it), through `φ^K`.
pub fn wronskian_series(sol: &FrobeniusSolution) -> Vec<Rational> {
    let size = sol.n() as usize + 1;
    let len = sol.order() + 1;
    // θ^m h_k for all needed m
    // φ = (n+2)^{-(n+2)} ψ leaves θ unchanged and keeps the rationals small
    let scale = Integer::from(Integer::u_pow_u(sol.n() + 2, sol.n() + 2));
    let scale_pows: Vec<Integer> = (0..len as u32).map(|t| Integer::from(Pow::pow(&scale, t))).collect();
    let scaled: Vec<Vec<Rational>> = sol
        .rows()
        .iter()
        .map(|row| row.iter().zip(&scale_pows).map(|(c, s)| Rational::from(c * s)).collect())
        .collect();
    let theta_pow = |k: usize, m: usize| -> Vec<Rational> {
        scaled[k]
            .iter()
            .enumerate()
            .map(|(t, c)| Rational::from(c * Integer::from(Integer::u_pow_u(t as u32, m as u32))))
            .collect()
    };
    let mut u: Vec<Vec<Vec<Rational>>> = vec![vec![vec![Rational::new(); len]; size]; size];
    for (i, row) in u.iter_mut().enumerate() {
        let inv_fact = Rational::from((1, factorial(i as u32)));
        for (j, entry) in row.iter_mut().enumerate() {
            // log-free part of θ^i (h_k L^{j-k}) is C(i,j-k) (j-k)! θ^{i-j+k} h_k
            for k in 0..=j {
                let p = j - k;
                if p > i {
                    continue;
                }
                let coef = Rational::from(binomial(j as u32, k as u32) * binomial(i as u32, p as u32) * factorial(p as u32))
                    * &inv_fact;
                for (t, c) in theta_pow(k, i - p).into_iter().enumerate() {
                    if c != 0 {
                        entry[t] += c * &coef;
                    }
                }
            }
        }
    }
    series_determinant(u, len)
        .into_iter()
        .zip(&scale_pows)
        .map(|(c, s)| c / s)
        .collect()
}

/// Determinant of a matrix of truncated series whose constant term is
/// invertible along the elimination (true for `U(0) = Id`).
fn series_determinant(mut m: Vec<Vec<Vec<Rational>>>, len: usize) -> Vec<Rational> {
    let size = m.len();
    let mut det = vec![Rational::new(); len];
    det[0] = Rational::from(1);
    for col in 0..size {
        let pivot_row = (col..size)
            .find(|&r| m[r][col][0] != 0)
            .expect("series matrix with singular constant term");
        if pivot_row != col {
            m.swap(pivot_row, col);
            for c in det.iter_mut() {
                *c = Rational::from(-&*c);
            }
        }
        let pivot = m[col][col].clone();
        det = series_mul(&det, &pivot, len);
        for r in col + 1..size {
            if m[r][col].iter().all(|c| *c == 0) {
                continue;
            }
            let factor = series_div(&m[r][col], &pivot, len);
            for c in col..size {
                let t = series_mul(&factor, &m[col][c], len);
                for (x, y) in m[r][c].iter_mut().zip(t) {
                    *x -= y;
                }
            }
        }
    }
    det
}

/// Coefficients of `(1-φ)^{-(n+1)/2}` through `φ^K`.
pub fn wronskian_closed_form(n: u32, k: usize) -> Vec<Rational> {
    let alpha = Rational::from((n + 1, 2));
    let mut out = vec![Rational::from(1)];
    for t in 1..=k {
        let next = (&out[t - 1] * Rational::from(&alpha + (t as u32 - 1))) / t as u32;
        out.push(next);
    }
    out
}

/// Checks `det U = (1-φ)^{-(n+1)/2}` through `φ^order`; returns the first
/// mismatching order on failure.
pub fn check_wronskian(sol: &FrobeniusSolution, order: usize) -> Result<(), usize> {
    let truncated = if order < sol.order() {
        FrobeniusSolution::from_table(sol.n(), sol.rows().iter().map(|r| r[..=order].to_vec()).collect())
    } else {
        sol.clone()
    };
    let det = wronskian_series(&truncated);
    let expected = wronskian_closed_form(sol.n(), truncated.order());
    match det.iter().zip(&expected).position(|(a, b)| a != b) {
        Some(t) => Err(t),
        None => Ok(()),
    }
}

#[derive(Debug, Error)]
pub enum CacheFormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header line: {0:?}")]
    Header(String),
    #[error("expected {expected} coefficient lines, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("line {line}: cannot parse {text:?} as numerator/denominator")]
    Coefficient { line: usize, text: String },
    #[error("series content is inconsistent: {0}")]
    Inconsistent(String),
}

pub const CACHE_MAGIC: &str = "pfseries v1";

/// Writes the series cache format: header `pfseries v1 n=<n> K=<K>` then
/// one `numerator/denominator` line per `(i, k)`, `i` major.
pub fn write_series<W: Write>(sol: &FrobeniusSolution, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CACHE_MAGIC} n={} K={}", sol.n(), sol.order())?;
    for row in sol.rows() {
        for c in row {
            writeln!(w, "{}/{}", c.numer(), c.denom())?;
        }
    }
    w.flush()
}

pub fn read_series<R: BufRead>(r: R) -> Result<FrobeniusSolution, CacheFormatError> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let (n, k) = parse_header(&header).ok_or_else(|| CacheFormatError::Header(header.clone()))?;
    let expected = (n as usize + 1) * (k + 1);
    let mut values = Vec::with_capacity(expected);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() && values.len() == expected {
            continue;
        }
        let q = parse_fraction(&line).ok_or_else(|| CacheFormatError::Coefficient { line: idx + 2, text: line.clone() })?;
        values.push(q);
    }
    if values.len() != expected {
        return Err(CacheFormatError::RowCount { expected, found: values.len() });
    }
    let mut it = values.into_iter();
    let coeffs: Vec<Vec<Rational>> = (0..=n).map(|_| it.by_ref().take(k + 1).collect()).collect();
    let sol = FrobeniusSolution { n, coeffs };
    validate_loaded(&sol)?;
    Ok(sol)
}

fn parse_header(h: &str) -> Option<(u32, usize)> {
    let rest = h.strip_prefix(CACHE_MAGIC)?.trim();
    let mut parts = rest.split_whitespace();
    let n = parts.next()?.strip_prefix("n=")?.parse().ok()?;
    let k = parts.next()?.strip_prefix("K=")?.parse().ok()?;
    if parts.next().is_some() || n == 0 {
        return None;
    }
    Some((n, k))
}

fn parse_fraction(s: &str) -> Option<Rational> {
    let (a, b) = s.split_once('/')?;
    let num: Integer = a.parse().ok()?;
    let den: Integer = b.parse().ok()?;
    if den <= 0 {
        return None;
    }
    let q = Rational::from((num.clone(), den.clone()));
    // canonical form only: the writer never emits unreduced fractions
    (*q.numer() == num && *q.denom() == den).then_some(q)
}

/// Boundary conditions plus the exact ratio recursion of `h_0`.
fn validate_loaded(sol: &FrobeniusSolution) -> Result<(), CacheFormatError> {
    if *sol.coeff(0, 0) != 1 || (1..=sol.n() as usize).any(|i| *sol.coeff(i, 0) != 0) {
        return Err(CacheFormatError::Inconsistent("boundary conditions violated".into()));
    }
    let deg = sol.n() + 2;
    for k in 1..=sol.order() {
        let mut ratio = Rational::from(1);
        for l in 1..=sol.n() + 1 {
            ratio *= Rational::from(((k as u32 - 1) * deg + l, deg));
        }
        for _ in 0..=sol.n() {
            ratio /= k as u32;
        }
        if Rational::from(sol.coeff(0, k - 1) * &ratio) != *sol.coeff(0, k) {
            return Err(CacheFormatError::Inconsistent(format!("h_0 recursion fails at order {k}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::build_operator;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn hesse_coefficients() {
        let sol = frobenius_series(&build_operator(1).unwrap(), 5).unwrap();
        let h0: Vec<Rational> = ["1", "2/9", "10/81", "560/6561", "3850/59049", "28028/531441"].iter().map(|s| q(s)).collect();
        let h1: Vec<Rational> = ["0", "5/9", "19/54", "5018/19683", "141355/708588", "522109/3188646"].iter().map(|s| q(s)).collect();
        assert_eq!(sol.row(0), &h0[..]);
        assert_eq!(sol.row(1), &h1[..]);
    }

    #[test]
    fn boundary_conditions() {
        for n in 1..=6 {
            let sol = frobenius_series(&build_operator(n).unwrap(), 3).unwrap();
            for i in 0..=n as usize {
                assert_eq!(*sol.coeff(i, 0), u32::from(i == 0));
            }
        }
    }

    #[test]
    fn rejects_zero_order() {
        assert!(matches!(frobenius_series(&build_operator(2).unwrap(), 0), Err(SeriesError::InvalidOrder(0))));
    }

    #[test]
    fn closed_form_small_cases() {
        assert_eq!(closed_form_ratio(1, 1, 0), q("2/9"));
        assert_eq!(closed_form_ratio(1, 1, 1), q("5/9"));
        for n in 1..5 {
            for d in 0..=n {
                assert_eq!(closed_form_ratio(n, 0, d), u32::from(d == 0));
            }
        }
    }

    #[test]
    fn extension_matches_direct_computation() {
        let op = build_operator(3).unwrap();
        let mut a = frobenius_series(&op, 4).unwrap();
        a.extend(&op, 11).unwrap();
        assert_eq!(a, frobenius_series(&op, 11).unwrap());
    }

    #[test]
    fn operator_annihilates_canonical_periods() {
        for n in 1..=5 {
            let op = build_operator(n).unwrap();
            let sol = frobenius_series(&op, 25).unwrap();
            for i in 0..=n as usize {
                let r = apply_operator(&op, &LogSeries::canonical_period(&sol, i));
                assert!(r.is_zero(), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn perturbed_series_is_not_annihilated() {
        let op = build_operator(2).unwrap();
        let mut sol = frobenius_series(&op, 10).unwrap();
        sol.coeffs[1][4] += Rational::from((1, 1000));
        let r = apply_operator(&op, &LogSeries::canonical_period(&sol, 1));
        assert!(!r.is_zero());
    }

    #[test]
    fn formal_monodromy_is_t0() {
        use std::collections::BTreeMap;
        let n = 4u32;
        let sol = frobenius_series(&build_operator(n as i64).unwrap(), 6).unwrap();
        let t0 = crate::operator::t0_matrix(n);
        // keys are (power of 2πi, power of log φ)
        let add = |m: &mut BTreeMap<(usize, usize), Vec<Rational>>, key, c: &Rational, row: &[Rational]| {
            let e = m.entry(key).or_insert_with(|| vec![Rational::new(); row.len()]);
            for (x, y) in e.iter_mut().zip(row) {
                *x += Rational::from(c * y);
            }
        };
        for j in 0..=n as usize {
            let mut shifted = BTreeMap::new();
            for k in 0..=j {
                for a in 0..=j - k {
                    let c = Rational::from(binomial(j as u32, k as u32) * binomial((j - k) as u32, a as u32));
                    add(&mut shifted, (j - k - a, a), &c, sol.row(k));
                }
            }
            let mut acted = BTreeMap::new();
            for m in 0..=j {
                for k in 0..=m {
                    let c = Rational::from(&t0[(j, m)] * binomial(m as u32, k as u32));
                    add(&mut acted, (j - m, m - k), &c, sol.row(k));
                }
            }
            shifted.retain(|_, v| v.iter().any(|c| *c != 0));
            acted.retain(|_, v| v.iter().any(|c| *c != 0));
            assert_eq!(shifted, acted, "j={j}");
        }
    }

    #[test]
    fn coefficient_growth_matches_unit_radius() {
        for n in 1..=4 {
            let sol = frobenius_series(&build_operator(n).unwrap(), 500).unwrap();
            for k in (200..=500).step_by(50) {
                let root = sol.coeff(0, k).to_f64().abs().powf(1.0 / k as f64);
                assert!(root > 0.9 && root < 1.1, "n={n} k={k} root={root}");
            }
        }
    }

    #[test]
    fn wronskian_small_n() {
        let sol = frobenius_series(&build_operator(1).unwrap(), 20).unwrap();
        let det = wronskian_series(&sol);
        assert!(det.iter().all(|c| *c == 1), "1/(1-φ)");
        let sol4 = frobenius_series(&build_operator(4).unwrap(), 8).unwrap();
        assert_eq!(wronskian_series(&sol4)[1], q("5/2"));
        assert!(check_wronskian(&sol4, 8).is_ok());
    }

    #[test]
    fn cache_roundtrip_and_validation() {
        let sol = frobenius_series(&build_operator(2).unwrap(), 12).unwrap();
        let mut buf = Vec::new();
        write_series(&sol, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pfseries v1 n=2 K=12\n"));
        assert_eq!(read_series(&buf[..]).unwrap(), sol);

        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_series(truncated.as_bytes()), Err(CacheFormatError::RowCount { .. })));
        let bad_header = text.replacen("pfseries v1", "pfseries v2", 1);
        assert!(matches!(read_series(bad_header.as_bytes()), Err(CacheFormatError::Header(_))));
        // corrupt one h_0 coefficient: detected by the recursion check
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[4] = "1/3".into();
        let corrupted = lines.join("\n");
        assert!(matches!(read_series(corrupted.as_bytes()), Err(CacheFormatError::Inconsistent(_))));
    }
}
