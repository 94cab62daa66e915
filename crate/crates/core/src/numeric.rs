//! Multiprecision plumbing shared by the numerical modules: precision
//! bookkeeping, exact points, complex matrices and decimal formatting.

use std::fmt;
use std::str::FromStr;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Assign, Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Target decimal digits plus guard digits.
///
/// Everything numerical runs at `digits + guard` decimal digits; reported
/// values are claimed only to `digits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionContext {
    pub digits: u32,
    pub guard: u32,
}

impl PrecisionContext {
    /// Default guard is `ceil(0.6 * digits)`.
    pub fn new(digits: u32) -> Self {
        Self::with_guard(digits, default_guard(digits))
    }

    pub fn with_guard(digits: u32, guard: u32) -> Self {
        Self { digits, guard }
    }

    pub fn working_digits(&self) -> u32 {
        self.digits + self.guard
    }

    /// Binary precision of the working arithmetic.
    pub fn bits(&self) -> u32 {
        (f64::from(self.working_digits()) * LOG2_10).ceil() as u32 + 16
    }

    /// The context used to re-verify results: fifty more target digits, same guard.
    pub fn refined(&self) -> Self {
        Self::with_guard(self.digits + 50, self.guard)
    }

    /// Digits held back when accepting a recognized relation (`digits / 5`).
    pub fn recognition_guard(&self) -> u32 {
        self.digits / 5
    }

    /// Decimal exponent `e` such that accepted residuals are below `10^e`.
    pub fn recognition_exponent(&self) -> i64 {
        -i64::from(self.digits - self.recognition_guard())
    }

    /// `10^{-(digits - guard)}`, the tolerance used for consistency checks
    /// that compare two independently computed numbers.
    pub fn consistency_exponent(&self) -> i64 {
        -(i64::from(self.digits) - i64::from(self.guard)).max(1)
    }
}

pub fn default_guard(digits: u32) -> u32 {
    (f64::from(digits) * 0.6).ceil() as u32
}

/// `10^e` as a float at `prec` bits.
pub fn pow10(prec: u32, e: i64) -> Float {
    let ten = Float::with_val(prec, 10);
    ten.pow(e as i32)
}

/// Decimal exponent of |x| (`log10 |x|`), `-inf` for zero.
pub fn log10_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let mut l = Float::with_val(64, x.abs_ref());
    l.log10_mut();
    l.to_f64()
}

pub fn abs_c(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

pub fn log10_abs_c(z: &Complex) -> f64 {
    log10_abs(&abs_c(z))
}

/// `2πi` at `prec` bits.
pub fn two_pi_i(prec: u32) -> Complex {
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    Complex::with_val(prec, (0, pi * 2u32))
}

pub fn rational_to_complex(prec: u32, q: &Rational) -> Complex {
    Complex::with_val(prec, (Float::with_val(prec, q), 0))
}

/// An exactly specified point of the complex plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactPoint {
    pub re: Rational,
    pub im: Rational,
}

impl ExactPoint {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn real(re: Rational) -> Self {
        Self { re, im: Rational::new() }
    }

    /// Exact conversion of a double-precision point.
    pub fn from_f64(re: f64, im: f64) -> Self {
        Self {
            re: Rational::from_f64(re).expect("finite"),
            im: Rational::from_f64(im).expect("finite"),
        }
    }

    pub fn to_complex(&self, prec: u32) -> Complex {
        Complex::with_val(
            prec,
            (Float::with_val(prec, &self.re), Float::with_val(prec, &self.im)),
        )
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn abs_f64(&self) -> f64 {
        let (a, b) = self.to_f64();
        a.hypot(b)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse '{0}' as an exact complex point (expected e.g. `1/10`, `0.15+0.1i`, `3/20+1/10i`)")]
pub struct PointParseError(pub String);

fn parse_exact_real(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(q) = Rational::from_str(s) {
        return Some(q);
    }
    // decimal literal such as -0.15 or 1e-2
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num = Integer::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = Integer::from(10);
    let mut q = if scale >= 0 {
        Rational::from(num * ten.pow(scale as u32))
    } else {
        Rational::from((num, ten.pow((-scale) as u32)))
    };
    if neg {
        q = -q;
    }
    Some(q)
}

impl FromStr for ExactPoint {
    type Err = PointParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PointParseError(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(body) = t.strip_suffix('i') {
            // split at the last sign that is not part of an exponent or leading
            let bytes = body.as_bytes();
            let mut split = None;
            for p in (1..bytes.len()).rev() {
                if (bytes[p] == b'+' || bytes[p] == b'-')
                    && !matches!(bytes[p - 1], b'e' | b'E')
                {
                    split = Some(p);
                    break;
                }
            }
            let (re_s, im_s) = match split {
                Some(p) => (&body[..p], &body[p..]),
                None => ("0", body),
            };
            let im_s = match im_s {
                "" | "+" => "1",
                "-" => "-1",
                other => other,
            };
            let re = parse_exact_real(re_s).ok_or_else(err)?;
            let im = parse_exact_real(im_s.strip_prefix('+').unwrap_or(im_s)).ok_or_else(err)?;
            Ok(Self { re, im })
        } else {
            Ok(Self::real(parse_exact_real(&t).ok_or_else(err)?))
        }
    }
}

impl fmt::Display for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0 {
            write!(f, "{}", self.re)
        } else if self.im < 0 {
            write!(f, "{}-{}i", self.re, Rational::from(-&self.im))
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Decimal string with `sig` significant digits, truncated (not rounded)
/// so that a lower-precision rendering of the same value is a prefix of a
/// higher-precision one.
pub fn format_decimal(x: &Float, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let raw = x.to_string_radix_round(10, Some(sig + 12), Round::Zero);
    let (neg, rest) = match raw.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, raw.as_str()),
    };
    let (mant, exp) = match rest.split_once('e') {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (rest, 0),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    let mut digits: String = format!("{ip}{fp}");
    // decimal point sits after `ip.len()` digits
    let mut point = ip.len() as i64 + exp;
    let lead = digits.chars().take_while(|&c| c == '0').count();
    digits.drain(..lead);
    point -= lead as i64;
    digits.truncate(sig);
    while digits.len() < sig {
        digits.push('0');
    }
    let sign = if neg { "-" } else { "" };
    if (-5..=24).contains(&point) {
        if point <= 0 {
            format!("{sign}0.{}{}", "0".repeat((-point) as usize), digits)
        } else if point as usize >= digits.len() {
            format!("{sign}{}{}", digits, "0".repeat(point as usize - digits.len()))
        } else {
            let (a, b) = digits.split_at(point as usize);
            format!("{sign}{a}.{b}")
        }
    } else {
        let (a, b) = digits.split_at(1);
        format!("{sign}{a}.{b}e{}", point - 1)
    }
}

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Complex>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is numerically singular (pivot magnitude 10^{pivot_log10:.1})")]
    Singular { pivot_log10: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        Self {
            rows,
            cols,
            prec,
            data: vec![Complex::new(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, n, prec);
        for i in 0..n {
            m[(i, i)] = Complex::with_val(prec, 1);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, prec: u32, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(Complex::with_val(prec, f(i, j)));
            }
        }
        Self { rows, cols, prec, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn column(&self, j: usize) -> Vec<Complex> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex]) {
        for (i, v) in col.iter().enumerate() {
            self[(i, j)] = Complex::with_val(self.prec, v);
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.prec, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let prec = self.prec.max(other.prec);
        let mut out = Self::zeros(self.rows, other.cols, prec);
        let mut t = Complex::new(prec);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Complex::new(prec);
                for k in 0..self.cols {
                    t.assign(&self[(i, k)] * &other[(k, j)]);
                    acc += &t;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, self.prec, |i, j| {
            Complex::with_val(self.prec, &self[(i, j)] - &other[(i, j)])
        })
    }

    pub fn max_abs(&self) -> Float {
        let mut m = Float::new(self.prec);
        for z in &self.data {
            let a = abs_c(z);
            if a > m {
                m = a;
            }
        }
        m
    }

    /// Max |entry| of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Float {
        self.sub(other).max_abs()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; also
    /// returns `log10` of the condition estimate `||A||_max ||A^-1||_max n`.
    pub fn inverse(&self) -> Result<(Self, f64), MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::Dimension(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let prec = self.prec;
        let mut a = self.clone();
        let mut inv = Self::identity(n, prec);
        let scale = log10_abs(&self.max_abs());
        for col in 0..n {
            let (mut best, mut best_abs) = (col, Float::new(prec));
            for r in col..n {
                let v = abs_c(&a[(r, col)]);
                if v > best_abs {
                    best_abs = v;
                    best = r;
                }
            }
            let pl = log10_abs(&best_abs);
            if best_abs.is_zero() || pl < scale - 0.9 * f64::from(prec) * std::f64::consts::LOG10_2 {
                return Err(MatrixError::Singular { pivot_log10: pl });
            }
            a.swap_rows(col, best);
            inv.swap_rows(col, best);
            let p = Complex::with_val(prec, 1) / &a[(col, col)];
            for j in 0..n {
                a[(col, j)] *= &p;
                inv[(col, j)] *= &p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)].clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = Complex::with_val(prec, &factor * &a[(col, j)]);
                    a[(r, j)] -= t;
                    let t = Complex::with_val(prec, &factor * &inv[(col, j)]);
                    inv[(r, j)] -= t;
                }
            }
        }
        let cond = scale + log10_abs(&inv.max_abs()) + (n as f64).log10();
        Ok((inv, cond))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}



/// Binomial coefficient as an exact integer.
pub fn binomial(n: u32, k: u32) -> Integer {
    if k > n {
        return Integer::new();
    }
    Integer::from(Integer::binomial_u(n, k))
}

pub fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}
