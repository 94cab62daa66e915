//! Recognition of high-precision numbers as rationals or as rational
//! combinations of known constants.
//!
//! Every number is carried at two precisions (`ctx` and `ctx.refined()`).
//! Candidates are found at the working precision and must survive the
//! refined value before they are reported.

use rug::{Complex, Float, Integer, Rational};
use thiserror::Error;

use crate::lattice::lll_reduce;
use crate::numeric::{abs_c, log10_abs, log10_abs_c, pow10, PrecisionContext};
use crate::symbolic::{odd_sum_partitions, Monomial, ZetaExpr};

/// Default bound on numerators and denominators of recognized coefficients.
pub fn default_height_bound() -> Integer {
    Integer::from(10u64.pow(12))
}

/// A value at the working precision and at the refined precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<T> {
    pub value: T,
    pub refined: T,
}

pub type Measured = Dual<Complex>;

impl Dual<Complex> {
    pub fn exact(q: &Rational, ctx: &PrecisionContext) -> Self {
        Self {
            value: Complex::with_val(ctx.bits(), (Float::with_val(ctx.bits(), q), 0)),
            refined: Complex::with_val(ctx.refined().bits(), (Float::with_val(ctx.refined().bits(), q), 0)),
        }
    }

    pub fn of_expr(e: &ZetaExpr, n: u32, ctx: &PrecisionContext) -> Self {
        Self { value: e.value(n, ctx.bits()), refined: e.value(n, ctx.refined().bits()) }
    }

    pub fn real_part(&self) -> Dual<Float> {
        Dual { value: self.value.real().clone(), refined: self.refined.real().clone() }
    }

    pub fn imag_part(&self) -> Dual<Float> {
        Dual { value: self.value.imag().clone(), refined: self.refined.imag().clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            value: Complex::with_val(self.value.prec().0, &self.value - &other.value),
            refined: Complex::with_val(self.refined.prec().0, &self.refined - &other.refined),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            value: Complex::with_val(self.value.prec().0, &self.value + &other.value),
            refined: Complex::with_val(self.refined.prec().0, &self.refined + &other.refined),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            value: Complex::with_val(self.value.prec().0, &self.value * &other.value),
            refined: Complex::with_val(self.refined.prec().0, &self.refined * &other.refined),
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self {
            value: Complex::with_val(self.value.prec().0, &self.value * q),
            refined: Complex::with_val(self.refined.prec().0, &self.refined * q),
        }
    }

    pub fn log10_abs(&self) -> f64 {
        log10_abs_c(&self.value)
    }
}

/// A basis element: an exact symbolic constant and its value.
#[derive(Clone, Debug)]
pub struct LabeledConstant {
    pub expr: ZetaExpr,
    pub value: Measured,
}

impl LabeledConstant {
    pub fn new(expr: ZetaExpr, n: u32, ctx: &PrecisionContext) -> Self {
        let value = Measured::of_expr(&expr, n, ctx);
        Self { expr, value }
    }

    pub fn monomial(m: Monomial, n: u32, ctx: &PrecisionContext) -> Self {
        Self::new(ZetaExpr::term(m, Rational::from(1)), n, ctx)
    }

    pub fn label(&self) -> String {
        self.expr.to_string()
    }

    /// Weight of the (homogeneous) expression; the unit has weight 0.
    pub fn weight(&self) -> u32 {
        self.expr.terms().map(|(m, _)| m.weight()).max().unwrap_or(0)
    }

    pub fn is_unit(&self) -> bool {
        self.expr.terms().all(|(m, _)| m.is_unit())
    }

    fn is_real(&self) -> bool {
        self.expr.terms().next().map(|(m, _)| m.is_real()).unwrap_or(true)
    }
}

/// The unit and all `f^{j-w} × (odd-zeta monomial of weight w)` with parts in `[3, n]`.
pub fn build_weight_basis(n: u32, j: u32, ctx: &PrecisionContext) -> Vec<LabeledConstant> {
    let mut out = vec![LabeledConstant::monomial(Monomial::unit(), n, ctx)];
    if j == 0 {
        return out;
    }
    for w in 0..=j {
        for p in odd_sum_partitions(w, n) {
            out.push(LabeledConstant::monomial(Monomial::new(j - w, p.flattened()), n, ctx));
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecognitionError {
    #[error("no relation found for the {part} part (insufficient precision or wrong basis)")]
    NoRelation { part: &'static str },
    #[error("relation for the {part} part fails at the refined precision (residual 1e{residual_log10:.1})")]
    VerificationFailed { part: &'static str, residual_log10: f64 },
    #[error("the {part} part is nonzero (1e{magnitude_log10:.1}) but no basis element can match it")]
    EmptyBasis { part: &'static str, magnitude_log10: f64 },
}

#[derive(Clone, Debug)]
pub struct RecognitionResult {
    pub basis: Vec<ZetaExpr>,
    pub coefficients: Vec<Rational>,
    pub residual_log10: f64,
    pub refined_residual_log10: f64,
    /// Acceptance threshold `-(D - G')`.
    pub threshold_log10: f64,
    pub digits: u32,
}

impl RecognitionResult {
    /// `Σ q_i b_i` symbolically.
    pub fn expr(&self) -> ZetaExpr {
        self.basis
            .iter()
            .zip(&self.coefficients)
            .fold(ZetaExpr::zero(), |acc, (b, q)| acc.add(&b.scale(q)))
    }

    /// How many digits the residual sits below the threshold.
    pub fn margin(&self) -> f64 {
        self.threshold_log10 - self.residual_log10
    }

    pub fn coefficient_of(&self, b: &ZetaExpr) -> Rational {
        self.basis.iter().position(|x| x == b).map(|i| self.coefficients[i].clone()).unwrap_or_default()
    }
}

fn scale_of(x: &Float) -> f64 {
    log10_abs(x).max(0.0)
}

fn small(x: &Float, scale: f64, ctx: &PrecisionContext) -> bool {
    x.is_zero() || log10_abs(x) < ctx.recognition_exponent() as f64 + scale
}

/// Continued-fraction reconstruction of `x` with denominator at most
/// `max_den`; `None` if no such rational fits at both precisions.
pub fn recognize_rational(x: &Measured, ctx: &PrecisionContext, max_den: &Integer) -> Option<Rational> {
    let re = x.value.real();
    let scale = scale_of(re);
    if !small(x.value.imag(), scale, ctx) || !small(x.refined.imag(), scale, &ctx.refined()) {
        return None;
    }
    let prec = re.prec();
    let mut rest = re.clone();
    let (mut p0, mut q0) = (Integer::from(1), Integer::new());
    let (mut p1, mut q1) = (Integer::new(), Integer::from(1));
    // convergents p/q of the continued fraction of x
    for _ in 0..(prec as usize) {
        let a = rest.clone().floor();
        let ai = a.to_integer().expect("finite");
        let p = Integer::from(&ai * &p0) + &p1;
        let q = Integer::from(&ai * &q0) + &q1;
        if q > *max_den {
            return None;
        }
        let cand = Rational::from((p.clone(), q.clone()));
        let diff = Float::with_val(prec, re - &cand);
        if small(&diff, scale, ctx) {
            let diff_ref = Float::with_val(x.refined.prec().0, x.refined.real() - &cand);
            return small(&diff_ref, scale, &ctx.refined()).then_some(cand);
        }
        p1 = std::mem::replace(&mut p0, p);
        q1 = std::mem::replace(&mut q0, q);
        let frac = Float::with_val(prec, &rest - &a);
        if frac.is_zero() {
            return None;
        }
        rest = frac.recip();
    }
    None
}

/// LLL-reduced candidate relations among `values`, shortest first.
fn relation_candidates(values: &[Float], ctx: &PrecisionContext) -> Vec<Vec<Integer>> {
    let m = values.len();
    let d_prime = i64::from(ctx.digits - ctx.recognition_guard());
    let scale = pow10(values[0].prec(), d_prime);
    let mut basis: Vec<Vec<Integer>> = (0..m)
        .map(|i| {
            let mut row = vec![Integer::new(); m + 1];
            row[i] = Integer::from(1);
            let s = Float::with_val(values[i].prec(), &values[i] * &scale).round();
            row[m] = s.to_integer().expect("finite");
            row
        })
        .collect();
    if !lll_reduce(&mut basis, 99, 100) {
        return Vec::new();
    }
    basis.into_iter().map(|mut r| {
        r.truncate(m);
        r
    }).collect()
}

fn residual(values: &[Float], rel: &[Integer]) -> Float {
    let prec = values[0].prec();
    let mut acc = Float::new(prec);
    for (v, m) in values.iter().zip(rel) {
        acc += Float::with_val(prec, v * m);
    }
    acc
}

fn max_abs_log10(values: &[Float]) -> f64 {
    values.iter().map(log10_abs).fold(0.0, f64::max)
}

fn verified(rel: &[Integer], values: &[Dual<Float>], ctx: &PrecisionContext) -> bool {
    let lo: Vec<Float> = values.iter().map(|v| v.value.clone()).collect();
    let hi: Vec<Float> = values.iter().map(|v| v.refined.clone()).collect();
    let height = rel.iter().map(|m| m.to_f64().abs()).fold(1.0, f64::max).log10();
    let scale = max_abs_log10(&lo) + height;
    small(&residual(&lo, rel), scale, ctx) && small(&residual(&hi, rel), scale, &ctx.refined())
}

/// A nonzero integer vector `m` with `Σ m_i v_i = 0` at both precisions and
/// `max |m_i| <= height_bound`, normalized so the first nonzero entry is positive.
pub fn find_integer_relation(values: &[Dual<Float>], ctx: &PrecisionContext, height_bound: &Integer) -> Option<Vec<Integer>> {
    if values.is_empty() {
        return None;
    }
    let lo: Vec<Float> = values.iter().map(|v| v.value.clone()).collect();
    for mut rel in relation_candidates(&lo, ctx) {
        if rel.iter().all(|m| *m == 0) || rel.iter().any(|m| m.clone().abs() > *height_bound) {
            continue;
        }
        if !verified(&rel, values, ctx) {
            continue;
        }
        if rel.iter().find(|m| **m != 0).is_some_and(|m| *m < 0) {
            for m in rel.iter_mut() {
                *m = Integer::from(-&*m);
            }
        }
        return Some(rel);
    }
    None
}

/// Solves `t = Σ q_i e_i` over the rationals for one real part.
fn recognize_part(
    part: &'static str,
    target: &Dual<Float>,
    elements: &[Dual<Float>],
    bounds: &[Integer],
    ctx: &PrecisionContext,
) -> Result<Vec<Rational>, RecognitionError> {
    let scale = scale_of(&target.value);
    if elements.is_empty() {
        if small(&target.value, scale, ctx) && small(&target.refined, scale, &ctx.refined()) {
            return Ok(Vec::new());
        }
        return Err(RecognitionError::EmptyBasis { part, magnitude_log10: log10_abs(&target.value) });
    }
    let mut values = vec![target.clone()];
    values.extend(elements.iter().cloned());
    let lo: Vec<Float> = values.iter().map(|v| v.value.clone()).collect();
    let mut failed_refined = None;
    for rel in relation_candidates(&lo, ctx) {
        if rel[0] == 0 {
            continue;
        }
        let coeffs: Vec<Rational> = rel[1..].iter().map(|m| -Rational::from((m.clone(), rel[0].clone()))).collect();
        if coeffs.iter().zip(bounds).any(|(q, h)| q.numer().clone().abs() > *h || *q.denom() > *h) {
            continue;
        }
        let height = rel.iter().map(|m| m.to_f64().abs()).fold(1.0, f64::max).log10();
        let s = max_abs_log10(&lo) + height;
        if !small(&residual(&lo, &rel), s, ctx) {
            continue;
        }
        let hi: Vec<Float> = values.iter().map(|v| v.refined.clone()).collect();
        let r = residual(&hi, &rel);
        if !small(&r, s, &ctx.refined()) {
            failed_refined = Some(log10_abs(&r));
            continue;
        }
        return Ok(coeffs);
    }
    Err(match failed_refined {
        Some(residual_log10) => RecognitionError::VerificationFailed { part, residual_log10 },
        None => RecognitionError::NoRelation { part },
    })
}

/// Rational coefficients of `x` over `basis`. Real and imaginary parts are
/// solved separately: every basis element is either real or imaginary.
///
/// `height_bound` limits the coefficients of the irrational elements; the
/// unit element absorbs an arbitrary rational and is allowed its square.
pub fn recognize_in_basis(
    x: &Measured,
    basis: &[LabeledConstant],
    ctx: &PrecisionContext,
    height_bound: &Integer,
) -> Result<RecognitionResult, RecognitionError> {
    let (re_idx, im_idx): (Vec<usize>, Vec<usize>) = (0..basis.len()).partition(|&i| basis[i].is_real());
    let re_elems: Vec<Dual<Float>> = re_idx.iter().map(|&i| basis[i].value.real_part()).collect();
    let im_elems: Vec<Dual<Float>> = im_idx.iter().map(|&i| basis[i].value.imag_part()).collect();
    let bound = |i: &usize| {
        if basis[*i].is_unit() {
            Integer::from(height_bound.square_ref())
        } else {
            height_bound.clone()
        }
    };
    let re_bounds: Vec<Integer> = re_idx.iter().map(bound).collect();
    let im_bounds: Vec<Integer> = im_idx.iter().map(bound).collect();
    let re = recognize_part("real", &x.real_part(), &re_elems, &re_bounds, ctx)?;
    let im = recognize_part("imaginary", &x.imag_part(), &im_elems, &im_bounds, ctx)?;
    let mut coefficients = vec![Rational::new(); basis.len()];
    for (i, q) in re_idx.iter().zip(re).chain(im_idx.iter().zip(im)) {
        coefficients[*i] = q;
    }
    let mut fit = x.clone();
    for (b, q) in basis.iter().zip(&coefficients) {
        fit = fit.sub(&b.value.scale(q));
    }
    let res = log10_abs(&abs_c(&fit.value));
    let res_ref = log10_abs(&abs_c(&fit.refined));
    Ok(RecognitionResult {
        basis: basis.iter().map(|b| b.expr.clone()).collect(),
        coefficients,
        residual_log10: res,
        refined_residual_log10: res_ref,
        threshold_log10: ctx.recognition_exponent() as f64,
        digits: ctx.digits,
    })
}
