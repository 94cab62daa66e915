//! Transcendental constants at arbitrary precision, cached per precision.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};
use thiserror::Error;

use crate::numeric::{binomial, factorial, two_pi_i, PrecisionContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstantLabel {
    Pi,
    TwoPiI,
    /// `log m`
    Log(u32),
    /// `ζ(k)`
    Zeta(u32),
    /// `ζ(k) / (2πi)^k`
    ZetaNormalized(u32),
    /// `f = -d log d / (2πi)` for the degree `d = n + 2`
    FLog(u32),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstantError {
    #[error("unsupported constant {0:?}")]
    Unsupported(ConstantLabel),
}

type Registry = RwLock<HashMap<(ConstantLabel, u32), Complex>>;

fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(HashMap::new()))
}

pub fn eval_constant(label: ConstantLabel, ctx: &PrecisionContext) -> Result<Complex, ConstantError> {
    eval_constant_bits(label, ctx.bits())
}

/// Value of `label` at `prec` bits, computed once per precision.
pub fn eval_constant_bits(label: ConstantLabel, prec: u32) -> Result<Complex, ConstantError> {
    if let Some(v) = registry().read().unwrap().get(&(label, prec)) {
        return Ok(v.clone());
    }
    let v = compute(label, prec)?;
    registry().write().unwrap().insert((label, prec), v.clone());
    Ok(v)
}

fn real(prec: u32, x: Float) -> Complex {
    Complex::with_val(prec, (x, 0))
}

fn compute(label: ConstantLabel, prec: u32) -> Result<Complex, ConstantError> {
    Ok(match label {
        ConstantLabel::Pi => real(prec, Float::with_val(prec, rug::float::Constant::Pi)),
        ConstantLabel::TwoPiI => two_pi_i(prec),
        ConstantLabel::Log(m) if m >= 1 => real(prec, Float::with_val(prec, m).ln()),
        ConstantLabel::Zeta(k) if k >= 2 => real(prec, zeta_borwein(k, prec)),
        ConstantLabel::ZetaNormalized(k) if k >= 2 => {
            let z = eval_constant_bits(ConstantLabel::Zeta(k), prec)?;
            let t = two_pi_i(prec).pow(k);
            z / t
        }
        ConstantLabel::FLog(d) if d >= 2 => crate::convention::f_log(d, prec),
        _ => return Err(ConstantError::Unsupported(label)),
    })
}

/// `ζ(s)` for integer `s >= 2` by the alternating-series acceleration with
/// weights `d_k = n Σ_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)`; the error is
/// below `3 (3+√8)^{-n}`.
pub fn zeta_borwein(s: u32, prec: u32) -> Float {
    assert!(s >= 2);
    let work = prec + 64;
    let digits = f64::from(work) * std::f64::consts::LOG10_2;
    let n = (digits / (3.0 + 8f64.sqrt()).log10()).ceil() as u32 + 4;
    let mut d = Vec::with_capacity(n as usize + 1);
    let mut term = Rational::from(1); // i = 0 term: n (n-1)! / n! = 1
    let mut acc = term.clone();
    d.push(acc.clone());
    for i in 1..=n {
        term *= Rational::from((4 * (n + i - 1) * (n - i + 1), (2 * i) * (2 * i - 1)));
        acc += &term;
        d.push(acc.clone());
    }
    let dn = Float::with_val(work, &d[n as usize]);
    let mut sum = Float::new(work);
    for k in 0..n {
        let diff = Float::with_val(work, &d[k as usize]) - &dn;
        let denom = Float::with_val(work, k + 1).pow(s);
        let t = diff / denom;
        if k % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    let two = Float::with_val(work, 2);
    let factor = Float::with_val(work, 1) - two.pow(1 - s as i32);
    let z = -sum / (dn * factor);
    Float::with_val(prec, z)
}

/// Bernoulli numbers `B_0 ..= B_m` from `Σ_{k<=m} C(m+1,k) B_k = 0`.
pub fn bernoulli_numbers(m: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = vec![Rational::from(1)];
    for j in 1..=m {
        let mut acc = Rational::new();
        for (k, bk) in b.iter().enumerate() {
            acc += Rational::from(bk * binomial(j as u32 + 1, k as u32));
        }
        b.push(-acc / (j as u32 + 1));
    }
    b
}

/// `ζ(s)` by Euler-Maclaurin summation with exact Bernoulli numbers; an
/// independent check on [`zeta_borwein`].
pub fn zeta_euler_maclaurin(s: u32, prec: u32) -> Float {
    let work = prec + 64;
    let digits = f64::from(work) * std::f64::consts::LOG10_2;
    let big_n = (digits / 1.5).ceil() as u32 + 10;
    let m = big_n as usize;
    let bern = bernoulli_numbers(2 * m);
    let mut sum = Float::new(work);
    for k in 1..big_n {
        sum += Float::with_val(work, k).pow(-(s as i32));
    }
    let nf = Float::with_val(work, big_n);
    sum += Float::with_val(work, nf.clone().pow(1 - s as i32)) / (s - 1);
    sum += Float::with_val(work, nf.clone().pow(-(s as i32))) / 2u32;
    // rising factorial s(s+1)...(s+2j-2) and N^{-s-2j+1}
    let mut rising = Integer::from(s);
    let mut npow = Float::with_val(work, nf.clone().pow(-(s as i32) - 1));
    let n2 = Float::with_val(work, nf.clone() * &nf);
    for j in 1..=m {
        let coef = Rational::from(&bern[2 * j] / factorial(2 * j as u32)) * &rising;
        sum += Float::with_val(work, &coef) * &npow;
        rising *= (s + 2 * j as u32 - 1) * (s + 2 * j as u32);
        npow /= &n2;
    }
    Float::with_val(prec, sum)
}

/// `ζ(2m) / (2πi)^{2m} = -B_{2m} / (2 (2m)!)`.
pub fn even_zeta_normalized(m: u32) -> Rational {
    let b = bernoulli_numbers(2 * m as usize);
    -Rational::from(&b[2 * m as usize] / factorial(2 * m)) / 2u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{format_decimal, log10_abs};

    #[test]
    fn zeta3_digits() {
        let z = zeta_borwein(3, 400);
        assert_eq!(format_decimal(&z, 21), "1.20205690315959428539");
    }

    #[test]
    fn two_methods_agree() {
        for prec in [200, 600] {
            for s in 2..=13 {
                let a = zeta_borwein(s, prec);
                let b = zeta_euler_maclaurin(s, prec);
                let rel = log10_abs(&Float::with_val(prec, &a - &b)) - log10_abs(&a);
                assert!(rel < -(f64::from(prec) * 0.30 - 3.0), "s={s} prec={prec} rel={rel}");
            }
        }
    }

    #[test]
    fn against_mpfr() {
        let prec = 500;
        for s in [3u32, 5, 7, 11] {
            let mine = zeta_borwein(s, prec);
            let theirs = Float::with_val(prec, Float::with_val(prec, s).zeta_ref());
            assert!(log10_abs(&Float::with_val(prec, mine - theirs)) < -145.0);
        }
    }

    #[test]
    fn zeta2_is_pi_squared_over_six() {
        let prec = 400;
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        let e = Float::with_val(prec, &pi * &pi) / 6u32;
        assert!(log10_abs(&Float::with_val(prec, zeta_borwein(2, prec) - e)) < -115.0);
    }

    #[test]
    fn even_zetas_are_rational_multiples() {
        let prec = 400;
        assert_eq!(even_zeta_normalized(1), Rational::from((-1, 24)));
        for m in 1..=6 {
            let z = eval_constant_bits(ConstantLabel::ZetaNormalized(2 * m), prec).unwrap();
            let q = Float::with_val(prec, &even_zeta_normalized(m));
            assert!(log10_abs(&Float::with_val(prec, z.real() - &q)) < -110.0, "m={m}");
            assert!(z.imag().is_zero() || log10_abs(z.imag()) < -110.0);
        }
    }

    #[test]
    fn f_log_is_imaginary_and_cached() {
        let ctx = PrecisionContext::new(60);
        let a = eval_constant(ConstantLabel::FLog(3), &ctx).unwrap();
        let b = eval_constant(ConstantLabel::FLog(3), &ctx).unwrap();
        assert_eq!(a, b);
        assert!(a.real().is_zero() || log10_abs(a.real()) < -60.0);
        assert!(eval_constant(ConstantLabel::Zeta(1), &ctx).is_err());
    }
}
