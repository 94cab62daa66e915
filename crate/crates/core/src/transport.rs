//! Numerical analytic continuation of the normalized periods: evaluation of
//! the derivative jet from the series at 0, Taylor-recurrence transport
//! along polygonal paths, and loop monodromy.

use std::f64::consts::{LN_10, PI};

use rayon::prelude::*;
use rug::{Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frobenius::FrobeniusSolution;
use crate::numeric::{binomial, factorial, log10_abs_c, two_pi_i, CMatrix, ExactPoint, MatrixError, PrecisionContext};
use crate::operator::FuchsianOperator;

/// Largest `|φ|` at which the series at 0 is summed directly.
pub const DEFAULT_R_MAX: f64 = 0.2;
/// Default clearance of paths from the singular points.
pub const DEFAULT_MIN_CLEARANCE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("series has {available} terms but {required} are needed at this point and precision")]
    InsufficientTerms { required: usize, available: usize },
    #[error("|φ| = {abs:.4} exceeds the direct-summation radius {r_max}")]
    OutsideSeriesDisc { abs: f64, r_max: f64 },
    #[error("point {0} is singular for the operator")]
    SingularPoint(String),
    #[error("path passes within {distance:.4} of the singular point {point} (minimum clearance {min})")]
    Clearance { point: u8, distance: f64, min: f64 },
    #[error("step size underflow near {0}")]
    StepUnderflow(String),
    #[error("path must start at the jet's base point {expected}, got {found}")]
    WrongStart { expected: String, found: String },
    #[error("fundamental matrix is singular (pivot 1e{pivot_log10:.0})")]
    Singular { pivot_log10: f64 },
    #[error("precision doubling disagrees: max deviation 1e{deviation_log10:.1} exceeds 1e-{digits}")]
    PrecisionMismatch { deviation_log10: f64, digits: u32 },
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
}

impl From<MatrixError> for TransportError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Singular { pivot_log10 } => TransportError::Singular { pivot_log10 },
            MatrixError::Dimension(_) => TransportError::Singular { pivot_log10: f64::NAN },
        }
    }
}

/// Derivative jets of a set of solutions at an exact point.
///
/// `entries[(i, j)] = (d/dφ)^i y_j(base)`. For the fundamental matrix the
/// columns are `ϖ_{R,0..n}`. `log_branch` counts the turns of `log φ`
/// accumulated relative to the principal branch at the base point.
#[derive(Clone, Debug)]
pub struct FundamentalMatrix {
    pub base: ExactPoint,
    pub entries: CMatrix,
    pub log_branch: i64,
}

impl FundamentalMatrix {
    fn from_taylor(base: ExactPoint, taylor: &CMatrix, log_branch: i64) -> Self {
        let mut entries = taylor.clone();
        for i in 1..taylor.rows() {
            let f = factorial(i as u32);
            for j in 0..taylor.cols() {
                entries[(i, j)] *= &f;
            }
        }
        Self { base, entries, log_branch }
    }

    /// Normalized Taylor coefficients `y^{(i)} / i!`.
    fn taylor(&self) -> CMatrix {
        let mut t = self.entries.clone();
        for i in 1..t.rows() {
            let f = factorial(i as u32);
            for j in 0..t.cols() {
                t[(i, j)] /= &f;
            }
        }
        t
    }

    /// `log10` of the condition number estimate of the matrix.
    pub fn condition_log10(&self) -> Result<f64, TransportError> {
        Ok(self.entries.inverse()?.1)
    }
}

/// Growth model `|c_k| <= C r^{-k} (1+k)^n` fitted on the tail of the
/// computed coefficients (natural logarithms).
#[derive(Clone, Copy, Debug)]
pub struct GrowthFit {
    pub ln_c: f64,
    pub ln_r: f64,
}

const TAIL_SAFETY: f64 = 1e3;

pub fn fit_growth(sol: &FrobeniusSolution) -> GrowthFit {
    let k_max = sol.order();
    let n = f64::from(sol.n());
    let lo = (k_max * 4 / 5).max(1).min(k_max);
    let mut pts = Vec::new();
    for k in lo..=k_max {
        let m = sol
            .rows()
            .iter()
            .map(|row| ln_abs_rational(&row[k]))
            .fold(f64::NEG_INFINITY, f64::max);
        if m.is_finite() {
            pts.push((k as f64, m - n * (1.0 + k as f64).ln()));
        }
    }
    if pts.is_empty() {
        return GrowthFit { ln_c: TAIL_SAFETY.ln(), ln_r: 0.0 };
    }
    let ln_r = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        // the radius of convergence is 1, never claim more
        (-sxy / sxx).min(0.0)
    } else {
        0.0
    };
    let ln_c = pts.iter().map(|(k, y)| y + k * ln_r).fold(f64::NEG_INFINITY, f64::max) + TAIL_SAFETY.ln();
    GrowthFit { ln_c, ln_r }
}

fn ln_abs_rational(q: &Rational) -> f64 {
    if *q == 0 {
        return f64::NEG_INFINITY;
    }
    let ln = |z: &Integer| {
        let bits = z.significant_bits();
        if bits < 1000 {
            z.to_f64().abs().ln()
        } else {
            let shift = bits - 60;
            Integer::from(z >> shift).to_f64().abs().ln() + f64::from(shift) * std::f64::consts::LN_2
        }
    };
    ln(q.numer()) - ln(q.denom())
}

/// Natural log of the bound on the neglected part of the jet `W` at `|φ|`
/// when the series is truncated after `φ^k`.
fn ln_tail_bound(fit: &GrowthFit, n: u32, abs_phi: f64, abs_log: f64, k: usize) -> f64 {
    let n = f64::from(n);
    let q = abs_phi.ln() - fit.ln_r;
    let ln_term = |k: f64| fit.ln_c + 2.0 * n * (1.0 + k).ln() + k * q;
    let k1 = k as f64 + 1.0;
    let ratio = (q + 2.0 * n * ((k1 + 1.0) / k1).ln()).exp();
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    // derivative orders bring φ^{-i} and the log powers (1+|L|)^n with binomials 2^n
    ln_term(k1) - (1.0 - ratio).ln() - n * abs_phi.ln() + n * ((1.0 + abs_log).ln() + 2f64.ln())
}

/// Number of series terms the empirical tail bound asks for at `φ` and `ctx`.
pub fn required_terms(sol: &FrobeniusSolution, phi: &ExactPoint, ctx: &PrecisionContext) -> Option<usize> {
    let fit = fit_growth(sol);
    let abs = phi.abs_f64();
    let abs_log = abs.ln().abs() + PI * 4.0;
    let target = -f64::from(ctx.working_digits()) * LN_10;
    let mut k = 1usize;
    while ln_tail_bound(&fit, sol.n(), abs, abs_log, k) >= target {
        k = k.checked_mul(2)?;
        if k > 1 << 24 {
            return None;
        }
    }
    // bisect down to the smallest sufficient order
    let (mut lo, mut hi) = (k / 2, k);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ln_tail_bound(&fit, sol.n(), abs, abs_log, mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Taylor coefficients of `Σ_t c_t φ^t` at `x0` up to order `m`.
fn series_taylor_at(coeffs: &[Rational], x0: &Complex, m: usize, prec: u32) -> Vec<Complex> {
    let mut b = vec![Complex::new(prec); m + 1];
    for c in coeffs.iter().rev() {
        for i in (1..=m).rev() {
            let (lo, hi) = b.split_at_mut(i);
            hi[0] *= x0;
            hi[0] += &lo[i - 1];
        }
        b[0] *= x0;
        if *c != 0 {
            b[0] += Float::with_val(prec, c);
        }
    }
    b
}

fn taylor_mul(a: &[Complex], b: &[Complex], prec: u32) -> Vec<Complex> {
    let len = a.len();
    let mut out = vec![Complex::new(prec); len];
    for i in 0..len {
        for j in 0..len - i {
            out[i + j] += Complex::with_val(prec, &a[i] * &b[j]);
        }
    }
    out
}

/// The fundamental matrix at `φ` from the series at 0, principal branch
/// of `log φ`, with the direct-summation radius `r_max`.
pub fn evaluate_jet_with_radius(
    sol: &FrobeniusSolution,
    phi: &ExactPoint,
    ctx: &PrecisionContext,
    r_max: f64,
) -> Result<FundamentalMatrix, TransportError> {
    let abs = phi.abs_f64();
    if abs > r_max {
        return Err(TransportError::OutsideSeriesDisc { abs, r_max });
    }
    if abs == 0.0 {
        return Err(TransportError::SingularPoint(phi.to_string()));
    }
    let required = required_terms(sol, phi, ctx).ok_or(TransportError::OutsideSeriesDisc { abs, r_max })?;
    if required > sol.order() {
        return Err(TransportError::InsufficientTerms { required, available: sol.order() });
    }
    let prec = ctx.bits();
    let size = sol.n() as usize + 1;
    let x0 = phi.to_complex(prec);
    let h: Vec<Vec<Complex>> =
        sol.rows().par_iter().map(|row| series_taylor_at(&row[..=required], &x0, size - 1, prec)).collect();

    // log(x0 + x) = log x0 + Σ (-1)^{m+1} (x/x0)^m / m
    let mut ell = vec![Complex::with_val(prec, x0.ln_ref())];
    let inv = Complex::with_val(prec, x0.recip_ref());
    let mut p = inv.clone();
    for m in 1..size {
        let mut t = Complex::with_val(prec, &p / m as u32);
        if m % 2 == 0 {
            t = -t;
        }
        ell.push(t);
        p *= &inv;
    }
    let mut ell_pows = vec![{
        let mut one = vec![Complex::new(prec); size];
        one[0] = Complex::with_val(prec, 1);
        one
    }];
    for e in 1..size {
        let next = taylor_mul(&ell_pows[e - 1], &ell, prec);
        ell_pows.push(next);
    }

    let inv_tpi = Complex::with_val(prec, two_pi_i(prec).recip_ref());
    let mut scale = Complex::with_val(prec, 1);
    let mut taylor = CMatrix::zeros(size, size, prec);
    for j in 0..size {
        let mut col = vec![Complex::new(prec); size];
        for k in 0..=j {
            let prod = taylor_mul(&h[k], &ell_pows[j - k], prec);
            let c = binomial(j as u32, k as u32);
            for (x, y) in col.iter_mut().zip(prod) {
                *x += y * &c;
            }
        }
        for (i, v) in col.into_iter().enumerate() {
            taylor[(i, j)] = v * &scale;
        }
        scale *= &inv_tpi;
    }
    Ok(FundamentalMatrix::from_taylor(phi.clone(), &taylor, 0))
}

/// The fundamental matrix `W[i][j] = (d/dφ)^i ϖ_{R,j}(φ)` for `|φ| <= 1/5`.
pub fn evaluate_jet(sol: &FrobeniusSolution, phi: &ExactPoint, ctx: &PrecisionContext) -> Result<FundamentalMatrix, TransportError> {
    evaluate_jet_with_radius(sol, phi, ctx, DEFAULT_R_MAX)
}

/// `det W(φ) = (1-φ)^{-(n+1)/2} ∏ i! · φ^{-n(n+1)/2} (2πi)^{-n(n+1)/2}`,
/// which follows from the Wronskian identity for `det U`.
pub fn expected_jet_determinant(n: u32, phi: &ExactPoint, prec: u32) -> Complex {
    let x = phi.to_complex(prec);
    let one_minus = Complex::with_val(prec, 1 - &x);
    let mut d = one_minus.ln();
    d *= -(f64::from(n) + 1.0) / 2.0;
    let mut d = d.exp();
    for i in 1..=n {
        d *= factorial(i);
    }
    let tri = n * (n + 1) / 2;
    let denom = Complex::with_val(prec, &x * two_pi_i(prec));
    let mut dp = Complex::with_val(prec, 1);
    for _ in 0..tri {
        dp *= &denom;
    }
    d / dp
}

/// Recentered operator data at a nonsingular exact point: `p_{j,s}(c)`, the
/// coefficient of `x^s` in `p_j(c + x)`.
struct LocalOperator {
    n: usize,
    pcoef: Vec<Vec<Complex>>,
}

impl LocalOperator {
    fn new(op: &FuchsianOperator, center: &ExactPoint, prec: u32) -> Result<Self, TransportError> {
        let c = center.to_complex(prec);
        let pcoef: Vec<Vec<Complex>> = op
            .dcoeffs()
            .iter()
            .map(|p| {
                let mut q: Vec<Complex> = p.iter().map(|r| Complex::with_val(prec, (Float::with_val(prec, r), 0))).collect();
                let len = q.len();
                for i in 0..len {
                    for j in (i..len.saturating_sub(1)).rev() {
                        let t = Complex::with_val(prec, &c * &q[j + 1]);
                        q[j] += t;
                    }
                }
                q
            })
            .collect();
        let lead_exact = crate::exact::poly_eval(op.leading_coefficient(), &center.re);
        if center.im == 0 && lead_exact == 0 {
            return Err(TransportError::SingularPoint(center.to_string()));
        }
        Ok(Self { n: op.n() as usize, pcoef })
    }

    /// For each `M`, the coefficients `Q_e(M)` (`e = -(n+2) ..= n`) of
    /// `y_{M+e}` and the normalizer of `y_{M+n+1}`.
    fn shift_table(&self, m_max: usize, prec: u32) -> Vec<(Vec<Complex>, Complex)> {
        let n = self.n as i64;
        (0..m_max)
            .into_par_iter()
            .map(|m| {
                let m = m as i64;
                let mut q = vec![Complex::new(prec); (2 * n + 3) as usize];
                let mut top = Complex::new(prec);
                for (j, p) in self.pcoef.iter().enumerate() {
                    for (s, c) in p.iter().enumerate() {
                        let e = j as i64 - s as i64;
                        let idx = m + e;
                        if idx < j as i64 {
                            continue;
                        }
                        let falling = (0..j as i64).fold(Integer::from(1), |acc, t| acc * (idx - t));
                        let v = Complex::with_val(prec, c * &falling);
                        if e == n + 1 {
                            top += v;
                        } else {
                            q[(e + n + 2) as usize] += v;
                        }
                    }
                }
                (q, top)
            })
            .collect()
    }
}

/// Runs the Taylor recurrence for one solution from its first `n+1`
/// normalized coefficients up to `order`.
fn run_recurrence(table: &[(Vec<Complex>, Complex)], init: &[Complex], order: usize, prec: u32) -> Vec<Complex> {
    let n = init.len() - 1;
    let mut y: Vec<Complex> = init.to_vec();
    y.resize(order.max(n) + 1, Complex::new(prec));
    for (m, (q, top)) in table.iter().enumerate() {
        let target = m + n + 1;
        if target > order {
            break;
        }
        let mut acc = Complex::new(prec);
        for (slot, c) in q.iter().enumerate() {
            let idx = m as i64 + slot as i64 - (n as i64 + 2);
            if idx < 0 || c.is_zero() {
                continue;
            }
            acc += Complex::with_val(prec, c * &y[idx as usize]);
        }
        y[target] = -(acc / top);
    }
    y.truncate(order + 1);
    y
}

/// Taylor coefficients at `center` of the solution with the given jet
/// (`jet[i] = y^{(i)}(center)`), up to `order`, normalized as `y^{(N)}/N!`.
pub fn recenter_recurrence(
    op: &FuchsianOperator,
    center: &ExactPoint,
    jet: &[Complex],
    order: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<Complex>, TransportError> {
    let prec = ctx.bits();
    let local = LocalOperator::new(op, center, prec)?;
    let init: Vec<Complex> = jet
        .iter()
        .enumerate()
        .map(|(i, v)| Complex::with_val(prec, v / factorial(i as u32)))
        .collect();
    let table = local.shift_table(order.saturating_sub(op.n() as usize), prec);
    Ok(run_recurrence(&table, &init, order, prec))
}

/// Smallest `N` with `(h/ρ)^N N^2 C(N, n) < 10^{-(D+G)}`.
fn step_order(ratio: f64, n: u32, ctx: &PrecisionContext) -> usize {
    let target = -f64::from(ctx.working_digits()) * LN_10;
    let lr = ratio.ln();
    let mut big_n = n as usize + 2;
    loop {
        let nn = big_n as f64;
        let ln_binom = ln_binomial(nn, f64::from(n));
        if nn * lr + 2.0 * nn.ln() + ln_binom < target {
            return big_n;
        }
        big_n += 1;
    }
}

fn ln_binomial(nn: f64, k: f64) -> f64 {
    (0..k as u64).map(|t| ((nn - t as f64) / (t as f64 + 1.0)).ln()).sum()
}

fn singular_distance(p: (f64, f64)) -> f64 {
    p.0.hypot(p.1).min((p.0 - 1.0).hypot(p.1))
}

fn segment_distance(a: (f64, f64), b: (f64, f64), s: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((s.0 - a.0) * dx + (s.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    (a.0 + t * dx - s.0).hypot(a.1 + t * dy - s.1)
}

/// A polygonal path through exact points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    vertices: Vec<ExactPoint>,
}

impl Path {
    pub fn polyline(vertices: Vec<ExactPoint>) -> Self {
        assert!(!vertices.is_empty());
        Self { vertices }
    }

    /// The constant path at `p`.
    pub fn null(p: ExactPoint) -> Self {
        Self { vertices: vec![p] }
    }

    /// From `base` straight to the nearest point of the circle `|φ - center| = radius`,
    /// once around it (counterclockwise when `ccw`), and back to `base`.
    pub fn circle_loop(base: &ExactPoint, center: &ExactPoint, radius: &Rational, ccw: bool) -> Result<Self, TransportError> {
        let r = radius.to_f64();
        if r <= 0.0 {
            return Err(TransportError::InvalidLoop("radius must be positive".into()));
        }
        let (bx, by) = base.to_f64();
        let (cx, cy) = center.to_f64();
        let dist = (bx - cx).hypot(by - cy);
        if dist == 0.0 {
            return Err(TransportError::InvalidLoop("base point is the loop center".into()));
        }
        let attach = if base.im == center.im {
            let dir = if base.re > center.re { 1 } else { -1 };
            ExactPoint::new(Rational::from(&center.re + Rational::from(radius * dir)), center.im.clone())
        } else {
            ExactPoint::from_f64(cx + r * (bx - cx) / dist, cy + r * (by - cy) / dist)
        };
        let theta0 = (by - cy).atan2(bx - cx);
        // chords no longer than a quarter of the smallest clearance on the circle
        let clearance = r.min(((cx).hypot(cy) - r).abs()).min(((cx - 1.0).hypot(cy) - r).abs()).max(r * 1e-3);
        let steps = ((2.0 * PI * r) / (clearance / 4.0)).ceil().max(8.0) as usize;
        let sign = if ccw { 1.0 } else { -1.0 };
        let mut vertices = vec![base.clone()];
        if attach != *base {
            vertices.push(attach.clone());
        }
        for k in 1..steps {
            let t = theta0 + sign * 2.0 * PI * k as f64 / steps as f64;
            vertices.push(ExactPoint::from_f64(cx + r * t.cos(), cy + r * t.sin()));
        }
        vertices.push(attach.clone());
        if attach != *base {
            vertices.push(base.clone());
        }
        Ok(Self { vertices })
    }

    pub fn start(&self) -> &ExactPoint {
        &self.vertices[0]
    }

    pub fn end(&self) -> &ExactPoint {
        self.vertices.last().unwrap()
    }

    pub fn vertices(&self) -> &[ExactPoint] {
        &self.vertices
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    pub fn concat(&self, other: &Path) -> Self {
        assert_eq!(self.end(), other.start());
        let mut v = self.vertices.clone();
        v.extend(other.vertices[1..].iter().cloned());
        Self { vertices: v }
    }

    /// Winding numbers (in turns) about 0 and about 1.
    pub fn winding(&self) -> (f64, f64) {
        let mut w = (0.0, 0.0);
        for pair in self.vertices.windows(2) {
            let (a, b) = (pair[0].to_f64(), pair[1].to_f64());
            for (s, acc) in [(0.0, &mut w.0), (1.0, &mut w.1)] {
                let t0 = a.1.atan2(a.0 - s);
                let t1 = b.1.atan2(b.0 - s);
                let mut d = t1 - t0;
                while d > PI {
                    d -= 2.0 * PI;
                }
                while d < -PI {
                    d += 2.0 * PI;
                }
                *acc += d / (2.0 * PI);
            }
        }
        w
    }

    /// Checks clearance and splits every chord into steps no longer than
    /// half the distance from the step's start to `{0, 1}`.
    pub fn plan(&self, min_clearance: f64) -> Result<Vec<ExactPoint>, TransportError> {
        let tol = 1e-12;
        for (pidx, s) in [(0u8, (0.0, 0.0)), (1u8, (1.0, 0.0))] {
            for v in &self.vertices {
                let d = segment_distance(v.to_f64(), v.to_f64(), s);
                if d < min_clearance * (1.0 - tol) {
                    return Err(TransportError::Clearance { point: pidx, distance: d, min: min_clearance });
                }
            }
            for pair in self.vertices.windows(2) {
                let d = segment_distance(pair[0].to_f64(), pair[1].to_f64(), s);
                if d < min_clearance * (1.0 - tol) {
                    return Err(TransportError::Clearance { point: pidx, distance: d, min: min_clearance });
                }
            }
        }
        let mut out = vec![self.vertices[0].clone()];
        for pair in self.vertices.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a == b {
                continue;
            }
            let target = b.to_f64();
            let mut cur = a.to_f64();
            loop {
                let rho = singular_distance(cur);
                let h_max = rho / 2.0;
                let (dx, dy) = (target.0 - cur.0, target.1 - cur.1);
                let rem = dx.hypot(dy);
                if rem <= h_max {
                    out.push(b.clone());
                    break;
                }
                if h_max < 1e-9 {
                    return Err(TransportError::StepUnderflow(format!("{:?}", cur)));
                }
                // a little under ρ/2 so that rounding to the exact point stays inside
                let t = 0.999 * h_max / rem;
                cur = (cur.0 + t * dx, cur.1 + t * dy);
                out.push(ExactPoint::from_f64(cur.0, cur.1));
            }
        }
        Ok(out)
    }
}

/// Continues the jets in `w` along `path`. Columns are independent and run
/// in parallel; each step uses the Taylor recurrence at the current vertex.
pub fn transport(
    op: &FuchsianOperator,
    w: &FundamentalMatrix,
    path: &Path,
    ctx: &PrecisionContext,
    min_clearance: f64,
) -> Result<FundamentalMatrix, TransportError> {
    if *path.start() != w.base {
        return Err(TransportError::WrongStart { expected: w.base.to_string(), found: path.start().to_string() });
    }
    let prec = ctx.bits();
    let n = op.n() as usize;
    let steps = path.plan(min_clearance)?;
    let mut jet = w.taylor();
    for pair in steps.windows(2) {
        let (c, next) = (&pair[0], &pair[1]);
        let hq = ExactPoint::new(Rational::from(&next.re - &c.re), Rational::from(&next.im - &c.im));
        let rho = singular_distance(c.to_f64());
        let ratio = hq.abs_f64() / rho;
        if ratio >= 0.75 {
            return Err(TransportError::StepUnderflow(c.to_string()));
        }
        let order = step_order(ratio, op.n(), ctx);
        let local = LocalOperator::new(op, c, prec)?;
        let table = local.shift_table(order - n, prec);
        let h = hq.to_complex(prec);
        let cols: Vec<Vec<Complex>> = (0..jet.cols())
            .into_par_iter()
            .map(|j| {
                let y = run_recurrence(&table, &jet.column(j), order, prec);
                taylor_shift_low(&y, &h, n, prec)
            })
            .collect();
        for (j, col) in cols.iter().enumerate() {
            jet.set_column(j, col);
        }
    }
    let (w0, _) = path.winding();
    Ok(FundamentalMatrix::from_taylor(path.end().clone(), &jet, w.log_branch + w0.round() as i64))
}

/// Coefficients `0..=m` of `y(x + h)` from those of `y(x)`.
fn taylor_shift_low(y: &[Complex], h: &Complex, m: usize, prec: u32) -> Vec<Complex> {
    let mut b = vec![Complex::new(prec); m + 1];
    for c in y.iter().rev() {
        for i in (1..=m).rev() {
            let (lo, hi) = b.split_at_mut(i);
            hi[0] *= h;
            hi[0] += &lo[i - 1];
        }
        b[0] *= h;
        b[0] += c;
    }
    b
}

/// Geometry of a monodromy loop.
///
/// The default loop about 1 runs clockwise in the φ-plane (counterclockwise
/// in ψ), which gives the expected sign of `T₁ - Id` for n = 1; the counterclockwise
/// loop gives the inverse. Loops about 0 are counterclockwise, so that
/// `log φ ↦ log φ + 2πi` and the result is `T₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    /// `0` or `1`.
    pub singularity: u8,
    pub base: String,
    pub radius: String,
    pub min_clearance: f64,
    pub counterclockwise: bool,
}

impl Default for LoopSpec {
    fn default() -> Self {
        Self {
            singularity: 1,
            base: "1/10".into(),
            radius: "1/2".into(),
            min_clearance: DEFAULT_MIN_CLEARANCE,
            counterclockwise: false,
        }
    }
}

impl LoopSpec {
    pub fn base_point(&self) -> Result<ExactPoint, TransportError> {
        self.base.parse().map_err(|e: crate::numeric::PointParseError| TransportError::InvalidLoop(e.to_string()))
    }

    pub fn radius_value(&self) -> Result<Rational, TransportError> {
        let p: ExactPoint = self.radius.parse().map_err(|e: crate::numeric::PointParseError| TransportError::InvalidLoop(e.to_string()))?;
        if p.im != 0 || p.re <= 0 {
            return Err(TransportError::InvalidLoop(format!("radius must be a positive real, got {}", self.radius)));
        }
        Ok(p.re)
    }

    pub fn path(&self) -> Result<Path, TransportError> {
        if self.singularity > 1 {
            return Err(TransportError::InvalidLoop(format!("no finite singularity at {}", self.singularity)));
        }
        let center = ExactPoint::real(Rational::from(self.singularity));
        let r = self.radius_value()?;
        let other = ExactPoint::real(Rational::from(1 - self.singularity));
        let (ox, _) = other.to_f64();
        let (cx, _) = center.to_f64();
        if ((ox - cx).abs() - r.to_f64()).abs() < self.min_clearance {
            return Err(TransportError::InvalidLoop(format!("circle of radius {} passes too close to {}", self.radius, ox)));
        }
        if (ox - cx).abs() < r.to_f64() {
            return Err(TransportError::InvalidLoop(format!("circle of radius {} also encloses {}", self.radius, ox)));
        }
        Path::circle_loop(&self.base_point()?, &center, &r, self.counterclockwise)
    }
}

/// `T` with `ϖ_R ↦ T ϖ_R` around the loop, at two precisions.
#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub t: CMatrix,
    pub t_refined: CMatrix,
    pub ctx: PrecisionContext,
    /// `log10 |T - T_refined|` per entry.
    pub error_log10: Vec<Vec<f64>>,
    /// `log10` of the largest 2×2 minor of `T - Id`.
    pub rank1_residual_log10: f64,
    pub condition_log10: f64,
    pub winding: (f64, f64),
}

impl MonodromyResult {
    pub fn max_error_log10(&self) -> f64 {
        self.error_log10.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `T - Id` at the refined precision.
    pub fn nilpotent_part(&self) -> CMatrix {
        self.t_refined.sub(&CMatrix::identity(self.t_refined.rows(), self.t_refined.prec()))
    }
}

/// Largest absolute 2×2 minor.
pub fn max_minor_log10(m: &CMatrix) -> f64 {
    let prec = m.prec();
    let mut best = f64::NEG_INFINITY;
    let (r, c) = (m.rows(), m.cols());
    for i1 in 0..r {
        for i2 in i1 + 1..r {
            for j1 in 0..c {
                for j2 in j1 + 1..c {
                    let a = Complex::with_val(prec, &m[(i1, j1)] * &m[(i2, j2)]);
                    let b = Complex::with_val(prec, &m[(i1, j2)] * &m[(i2, j1)]);
                    best = best.max(log10_abs_c(&Complex::with_val(prec, a - b)));
                }
            }
        }
    }
    best
}

fn monodromy_at(
    op: &FuchsianOperator,
    sol: &FrobeniusSolution,
    spec: &LoopSpec,
    path: &Path,
    ctx: &PrecisionContext,
) -> Result<(CMatrix, f64), TransportError> {
    let w = evaluate_jet(sol, path.start(), ctx)?;
    let w_end = transport(op, &w, path, ctx, spec.min_clearance)?;
    let (inv, cond) = w.entries.inverse()?;
    Ok((inv.mul(&w_end.entries).transpose(), cond))
}

/// Monodromy of `ϖ_R` around the loop described by `spec`:
/// `T = (W^{-1} W')^T` with `W'` the continued fundamental matrix, computed
/// at `ctx` and at `ctx.refined()` for the error estimate.
pub fn loop_monodromy(
    op: &FuchsianOperator,
    sol: &FrobeniusSolution,
    spec: &LoopSpec,
    ctx: &PrecisionContext,
) -> Result<MonodromyResult, TransportError> {
    let path = spec.path()?;
    let refined = ctx.refined();
    let (lo, hi) = rayon::join(
        || monodromy_at(op, sol, spec, &path, ctx),
        || monodromy_at(op, sol, spec, &path, &refined),
    );
    let (t, cond) = lo?;
    let (t_refined, _) = hi?;
    let size = t.rows();
    let error_log10: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| log10_abs_c(&Complex::with_val(t.prec(), &t[(i, j)] - &t_refined[(i, j)])))
                .collect()
        })
        .collect();
    let scale = log10_abs_c(&Complex::with_val(64, 1)).max(crate::numeric::log10_abs(&t_refined.max_abs())).max(0.0);
    let worst = error_log10.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if worst > scale - f64::from(ctx.digits) {
        return Err(TransportError::PrecisionMismatch { deviation_log10: worst, digits: ctx.digits });
    }
    let nil = t_refined.sub(&CMatrix::identity(size, t_refined.prec()));
    Ok(MonodromyResult {
        rank1_residual_log10: max_minor_log10(&nil),
        t,
        t_refined,
        ctx: *ctx,
        error_log10,
        condition_log10: cond,
        winding: path.winding(),
    })
}

/// Extends `sol` until direct summation at `base` meets the refined precision.
pub fn ensure_terms(
    op: &FuchsianOperator,
    sol: &mut FrobeniusSolution,
    base: &ExactPoint,
    ctx: &PrecisionContext,
) -> Result<(), TransportError> {
    for _ in 0..8 {
        match required_terms(sol, base, &ctx.refined()) {
            Some(k) if k <= sol.order() => return Ok(()),
            Some(k) => {
                let target = k + k / 10 + 10;
                sol.extend(op, target).map_err(|_| TransportError::InsufficientTerms { required: k, available: sol.order() })?;
            }
            None => return Err(TransportError::OutsideSeriesDisc { abs: base.abs_f64(), r_max: DEFAULT_R_MAX }),
        }
    }
    Err(TransportError::InsufficientTerms { required: sol.order() + 1, available: sol.order() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::frobenius_series;
    use crate::numeric::{format_decimal, log10_abs};
    use crate::operator::build_operator;

    fn setup(n: i64, digits: u32, base: &ExactPoint) -> (FuchsianOperator, FrobeniusSolution, PrecisionContext) {
        let op = build_operator(n).unwrap();
        let mut sol = frobenius_series(&op, 20).unwrap();
        let ctx = PrecisionContext::new(digits);
        ensure_terms(&op, &mut sol, base, &ctx).unwrap();
        (op, sol, ctx)
    }

    fn pt(s: &str) -> ExactPoint {
        s.parse().unwrap()
    }

    #[test]
    fn hesse_value_at_one_tenth() {
        let base = pt("1/10");
        let (_, sol, ctx) = setup(1, 40, &base);
        let w = evaluate_jet(&sol, &base, &ctx).unwrap();
        // 2F1(1/3, 2/3; 1; 1/10)
        assert_eq!(format_decimal(w.entries[(0, 0)].real(), 30), "1.02354923882942307118816968544");
    }

    #[test]
    fn near_zero_the_first_period_is_one() {
        let p = pt("1/1000000000000");
        let (_, sol, ctx) = setup(3, 30, &p);
        let w = evaluate_jet(&sol, &p, &ctx).unwrap();
        let one = Complex::with_val(ctx.bits(), 1);
        assert!(log10_abs_c(&Complex::with_val(ctx.bits(), &w.entries[(0, 0)] - &one)) < -10.0);
    }

    #[test]
    fn insufficient_terms_and_radius_are_reported() {
        let op = build_operator(2).unwrap();
        let sol = frobenius_series(&op, 10).unwrap();
        let ctx = PrecisionContext::new(50);
        assert!(matches!(
            evaluate_jet(&sol, &pt("1/10"), &ctx),
            Err(TransportError::InsufficientTerms { required, available: 10 }) if required > 10
        ));
        assert!(matches!(evaluate_jet(&sol, &pt("1/2"), &ctx), Err(TransportError::OutsideSeriesDisc { .. })));
    }

    #[test]
    fn jet_determinant_matches_wronskian() {
        for n in [1, 3, 6] {
            let base = pt("1/10");
            let (_, sol, ctx) = setup(n, 40, &base);
            let w = evaluate_jet(&sol, &base, &ctx).unwrap();
            let det = determinant(&w.entries);
            let expected = expected_jet_determinant(n as u32, &base, ctx.bits());
            let rel = Complex::with_val(ctx.bits(), &det / &expected) - 1u32;
            assert!(log10_abs_c(&rel) < -40.0, "n={n}");
        }
    }

    fn determinant(m: &CMatrix) -> Complex {
        let prec = m.prec();
        let n = m.rows();
        let mut a = m.clone();
        let mut det = Complex::with_val(prec, 1);
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| log10_abs_c(&a[(x, c)]).total_cmp(&log10_abs_c(&a[(y, c)]))).unwrap();
            if p != c {
                for j in 0..n {
                    let t = a[(p, j)].clone();
                    a[(p, j)] = a[(c, j)].clone();
                    a[(c, j)] = t;
                }
                det = -det;
            }
            det *= &a[(c, c)];
            for r in c + 1..n {
                let f = Complex::with_val(prec, &a[(r, c)] / &a[(c, c)]);
                for j in c..n {
                    let t = Complex::with_val(prec, &f * &a[(c, j)]);
                    a[(r, j)] -= t;
                }
            }
        }
        det
    }

    #[test]
    fn recurrence_returns_the_jet_at_order_n() {
        let op = build_operator(3).unwrap();
        let ctx = PrecisionContext::new(30);
        let prec = ctx.bits();
        let jet: Vec<Complex> = (0..4).map(|i| Complex::with_val(prec, (i as f64 + 0.5, -1.0))).collect();
        let y = recenter_recurrence(&op, &pt("1/3+1/5i"), &jet, 3, &ctx).unwrap();
        for (i, v) in y.iter().enumerate() {
            let back = Complex::with_val(prec, v * factorial(i as u32));
            assert!(log10_abs_c(&Complex::with_val(prec, back - &jet[i])) < -40.0);
        }
        assert!(matches!(
            recenter_recurrence(&op, &pt("1"), &jet, 10, &ctx),
            Err(TransportError::SingularPoint(_))
        ));
    }

    #[test]
    fn recurrence_reproduces_series_solution() {
        // h_0 is itself a solution: its Taylor coefficients at c come from the series directly
        let op = build_operator(2).unwrap();
        let c = pt("1/10");
        let (_, sol, ctx) = setup(2, 40, &c);
        let prec = ctx.bits();
        let x0 = c.to_complex(prec);
        let direct = series_taylor_at(sol.row(0), &x0, 12, prec);
        let jet: Vec<Complex> =
            (0..3).map(|i| Complex::with_val(prec, &direct[i] * factorial(i as u32))).collect();
        let y = recenter_recurrence(&op, &c, &jet, 12, &ctx).unwrap();
        for k in 0..=12 {
            let d = Complex::with_val(prec, &y[k] - &direct[k]);
            assert!(log10_abs_c(&d) - log10_abs_c(&direct[k]) < -35.0, "k={k}");
        }
    }

    #[test]
    fn transport_matches_direct_evaluation() {
        let a = pt("1/10");
        let b = pt("3/20+1/10i");
        let (op, sol, ctx) = setup(3, 40, &b);
        let wa = evaluate_jet(&sol, &a, &ctx).unwrap();
        let wb = evaluate_jet(&sol, &b, &ctx).unwrap();
        let moved = transport(&op, &wa, &Path::polyline(vec![a, b]), &ctx, 0.1).unwrap();
        let rel = log10_abs(&moved.entries.max_abs_diff(&wb.entries)) - log10_abs(&wb.entries.max_abs());
        assert!(rel < -40.0, "rel={rel}");
    }

    #[test]
    fn transport_to_one_half_agrees_with_overlap_summation() {
        let op = build_operator(1).unwrap();
        let ctx = PrecisionContext::with_guard(20, 10);
        let start = pt("1/10");
        let end = pt("9/20");
        let mut sol = frobenius_series(&op, 400).unwrap();
        ensure_terms(&op, &mut sol, &start, &ctx).unwrap();
        let w = evaluate_jet(&sol, &start, &ctx).unwrap();
        let moved = transport(&op, &w, &Path::polyline(vec![start, end.clone()]), &ctx, 0.1).unwrap();
        let direct = evaluate_jet_with_radius(&sol, &end, &ctx, 0.5).unwrap();
        let rel = log10_abs(&moved.entries.max_abs_diff(&direct.entries)) - log10_abs(&direct.entries.max_abs());
        assert!(rel < -20.0, "rel={rel}");
    }

    #[test]
    fn null_and_reversed_paths() {
        let a = pt("1/10");
        let (op, sol, ctx) = setup(2, 40, &a);
        let w = evaluate_jet(&sol, &a, &ctx).unwrap();
        let same = transport(&op, &w, &Path::null(a.clone()), &ctx, 0.1).unwrap();
        assert!(log10_abs(&same.entries.max_abs_diff(&w.entries)) < -40.0);
        let path = Path::polyline(vec![a.clone(), pt("1/2+1/3i"), pt("3/2+1/4i")]);
        let there = transport(&op, &w, &path, &ctx, 0.1).unwrap();
        let back = transport(&op, &there, &path.reversed(), &ctx, 0.1).unwrap();
        let rel = log10_abs(&back.entries.max_abs_diff(&w.entries)) - log10_abs(&w.entries.max_abs());
        assert!(rel < -40.0, "rel={rel}");
    }

    #[test]
    fn paths_respect_clearance() {
        let p = Path::polyline(vec![pt("1/10"), pt("19/20")]);
        assert!(matches!(p.plan(0.1), Err(TransportError::Clearance { point: 1, .. })));
        let p = Path::polyline(vec![pt("1/10+1/10i"), pt("-1/10-1/10i")]);
        assert!(matches!(p.plan(0.1), Err(TransportError::Clearance { point: 0, .. })));
        let loop1 = LoopSpec::default().path().unwrap();
        let steps = loop1.plan(0.1).unwrap();
        for pair in steps.windows(2) {
            let (a, b) = (pair[0].to_f64(), pair[1].to_f64());
            assert!((b.0 - a.0).hypot(b.1 - a.1) <= singular_distance(a) / 2.0);
        }
        let (w0, w1) = loop1.winding();
        assert!(w0.abs() < 1e-9 && (w1 + 1.0).abs() < 1e-9);
        assert_eq!(loop1.start(), loop1.end());
    }

    #[test]
    fn loop_about_zero_gives_t0() {
        for n in [1, 4] {
            let spec = LoopSpec { singularity: 0, base: "1/10".into(), radius: "1/10".into(), min_clearance: 0.05, counterclockwise: true };
            let base = spec.base_point().unwrap();
            let (op, sol, ctx) = setup(n, 40, &base);
            let res = loop_monodromy(&op, &sol, &spec, &ctx).unwrap();
            let t0 = crate::operator::t0_matrix(n as u32);
            let exact = CMatrix::from_fn(n as usize + 1, n as usize + 1, ctx.bits(), |i, j| {
                crate::numeric::rational_to_complex(ctx.bits(), &t0[(i, j)])
            });
            assert!(log10_abs(&res.t.max_abs_diff(&exact)) < -40.0, "n={n}");
            assert!((res.winding.0 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hesse_monodromy_first_digits() {
        let spec = LoopSpec::default();
        let base = spec.base_point().unwrap();
        let (op, sol, ctx) = setup(1, 30, &base);
        let res = loop_monodromy(&op, &sol, &spec, &ctx).unwrap();
        let n1 = res.nilpotent_part();
        // the displayed digits are rounded, the formatter truncates
        assert_eq!(format_decimal(n1[(0, 0)].imag(), 22), "1.573646186547269000988");
        let three = Complex::with_val(ctx.bits(), 3);
        assert!(log10_abs_c(&Complex::with_val(ctx.bits(), &n1[(0, 1)] - &three)) < -30.0);
        assert_eq!(format_decimal(n1[(1, 0)].real(), 21), "0.825454106811587382847");
        assert_eq!(format_decimal(n1[(1, 1)].imag(), 22), "-1.573646186547269000988");
        assert!(res.rank1_residual_log10 < -30.0);

        let ccw = LoopSpec { counterclockwise: true, ..LoopSpec::default() };
        let inv = loop_monodromy(&op, &sol, &ccw, &ctx).unwrap();
        let id = CMatrix::identity(2, ctx.bits());
        assert!(log10_abs(&inv.t.mul(&res.t).max_abs_diff(&id)) < -30.0);
    }
}
