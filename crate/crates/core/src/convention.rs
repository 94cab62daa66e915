//! The three normalizations of the Frobenius period vector and the linear
//! maps between them.

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::numeric::{binomial, two_pi_i, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodConvention {
    /// `ϖ_j = Σ_k C(j,k) h_k log^{j-k} φ`.
    Canonical,
    /// `ϖ_{R,j} = ϖ_j / (2πi)^j`.
    Normalized,
    /// `ϖ_R` with `log φ` replaced by `log((n+2)^{-(n+2)} φ)`.
    MirrorNormalized,
}

/// `f = -(n+2) log(n+2) / (2πi)`, purely imaginary.
pub fn f_log(degree: u32, prec: u32) -> Complex {
    let d = Float::with_val(prec, degree);
    let mut l = d.clone();
    l.ln_mut();
    let num = Complex::with_val(prec, (-(d * l), 0));
    num / two_pi_i(prec)
}

/// Pascal matrix `M_ij = C(i,j) x^{i-j}` below the diagonal.
pub fn pascal_power_matrix(size: usize, x: &Complex) -> CMatrix {
    let prec = x.prec().0;
    let mut powers = vec![Complex::with_val(prec, 1)];
    for k in 1..size {
        let p = Complex::with_val(prec, &powers[k - 1] * x);
        powers.push(p);
    }
    CMatrix::from_fn(size, size, prec, |i, j| {
        if j > i {
            Complex::new(prec)
        } else {
            Complex::with_val(prec, &powers[i - j] * binomial(i as u32, j as u32))
        }
    })
}

/// `P_log = (C(i,j) f^{i-j})`, so that `ϖ_M = P_log ϖ_R`.
pub fn p_log(n: u32, prec: u32) -> CMatrix {
    pascal_power_matrix(n as usize + 1, &f_log(n + 2, prec))
}

fn to_normalized(n: u32, from: PeriodConvention, prec: u32) -> CMatrix {
    let size = n as usize + 1;
    match from {
        PeriodConvention::Normalized => CMatrix::identity(size, prec),
        PeriodConvention::Canonical => {
            let inv = Complex::with_val(prec, 1) / two_pi_i(prec);
            let mut m = CMatrix::zeros(size, size, prec);
            let mut s = Complex::with_val(prec, 1);
            for j in 0..size {
                m[(j, j)] = s.clone();
                s *= &inv;
            }
            m
        }
        PeriodConvention::MirrorNormalized => {
            let minus_f = Complex::with_val(prec, -f_log(n + 2, prec));
            pascal_power_matrix(size, &minus_f)
        }
    }
}

/// Matrix `M` with `v_to = M v_from` for period column vectors.
pub fn conversion_matrix(n: u32, from: PeriodConvention, to: PeriodConvention, prec: u32) -> CMatrix {
    let into = to_normalized(n, from, prec);
    let out = to_normalized(n, to, prec).inverse().expect("triangular with unit-modulus diagonal").0;
    out.mul(&into)
}
