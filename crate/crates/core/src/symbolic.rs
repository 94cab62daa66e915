//! Exact linear combinations of monomials `f^a ∏ ζ(k)/(2πi)^k` and the
//! odd-sum partitions that index them.

use std::collections::BTreeMap;
use std::fmt;

use rug::{Complex, Rational};

use crate::constants::{eval_constant_bits, ConstantLabel};
use crate::numeric::factorial;

/// `f^{f_power} ∏_k Z_k` with `Z_k = ζ(k)/(2πi)^k`; `zetas` is sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub f_power: u32,
    pub zetas: Vec<u32>,
}

impl Monomial {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn f(power: u32) -> Self {
        Self { f_power: power, zetas: Vec::new() }
    }

    pub fn zeta(k: u32) -> Self {
        Self { f_power: 0, zetas: vec![k] }
    }

    pub fn new(f_power: u32, mut zetas: Vec<u32>) -> Self {
        zetas.sort_unstable();
        Self { f_power, zetas }
    }

    pub fn is_unit(&self) -> bool {
        self.f_power == 0 && self.zetas.is_empty()
    }

    /// `f` counts 1, `Z_k` counts `k`.
    pub fn weight(&self) -> u32 {
        self.f_power + self.zetas.iter().sum::<u32>()
    }

    pub fn involves_f(&self) -> bool {
        self.f_power > 0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut zetas = self.zetas.clone();
        zetas.extend_from_slice(&other.zetas);
        Self::new(self.f_power + other.f_power, zetas)
    }

    /// `f` and `Z_k` for odd `k` are imaginary, `Z_k` for even `k` is real.
    pub fn is_real(&self) -> bool {
        let odd = self.zetas.iter().filter(|&&k| k % 2 == 1).count();
        (self.f_power as usize + odd) % 2 == 0
    }

    /// Value for the pencil of degree `n + 2`.
    pub fn value(&self, n: u32, prec: u32) -> Complex {
        let mut v = Complex::with_val(prec, 1);
        if self.f_power > 0 {
            let f = eval_constant_bits(ConstantLabel::FLog(n + 2), prec).expect("f");
            for _ in 0..self.f_power {
                v *= &f;
            }
        }
        for &k in &self.zetas {
            v *= eval_constant_bits(ConstantLabel::ZetaNormalized(k), prec).expect("zeta");
        }
        v
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(out, "1");
        }
        let mut parts = Vec::new();
        match self.f_power {
            0 => {}
            1 => parts.push("f".to_string()),
            p => parts.push(format!("f^{p}")),
        }
        if !self.zetas.is_empty() {
            let mut z = String::new();
            let mut i = 0;
            while i < self.zetas.len() {
                let k = self.zetas[i];
                let mult = self.zetas[i..].iter().take_while(|&&x| x == k).count();
                if mult == 1 {
                    z.push_str(&format!("ζ({k})"));
                } else {
                    z.push_str(&format!("ζ({k})^{mult}"));
                }
                i += mult;
            }
            let w: u32 = self.zetas.iter().sum();
            parts.push(format!("{z}/(2πi)^{w}"));
        }
        write!(out, "{}", parts.join("·"))
    }
}

/// Finite rational combination of monomials.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ZetaExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl ZetaExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(q: Rational) -> Self {
        Self::term(Monomial::unit(), q)
    }

    pub fn term(m: Monomial, q: Rational) -> Self {
        let mut e = Self::zero();
        e.add_term(m, q);
        e
    }

    pub fn add_term(&mut self, m: Monomial, q: Rational) {
        if q == 0 {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_default();
        *entry += q;
        if *entry == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, q) in &other.terms {
            out.add_term(m.clone(), q.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&Rational::from(-1)))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero();
        for (m, q) in &self.terms {
            out.add_term(m.clone(), Rational::from(q * c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                out.add_term(a.mul(b), Rational::from(p * q));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(Rational::from(1)), |acc, _| acc.mul(self))
    }

    /// Without the unit term.
    pub fn without_unit(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&Monomial::unit());
        out
    }

    pub fn involves_f(&self) -> bool {
        self.terms.keys().any(Monomial::involves_f)
    }

    pub fn value(&self, n: u32, prec: u32) -> Complex {
        let mut v = Complex::new(prec);
        for (m, q) in &self.terms {
            v += m.value(n, prec) * q;
        }
        v
    }
}

impl fmt::Display for ZetaExpr {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        let mut first = true;
        for (m, q) in &self.terms {
            let neg = *q < 0;
            let abs = Rational::from(q.abs_ref());
            let sep = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            if m.is_unit() {
                write!(out, "{sep}{abs}")?;
            } else if abs == 1 {
                write!(out, "{sep}{m}")?;
            } else {
                write!(out, "{sep}{abs}·{m}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// A multiset of odd parts `>= 3`, stored as `(part, multiplicity)` with
/// strictly increasing parts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OddSumPartition {
    pub parts: Vec<(u32, u32)>,
}

impl OddSumPartition {
    pub fn total(&self) -> u32 {
        self.parts.iter().map(|(p, l)| p * l).sum()
    }

    pub fn flattened(&self) -> Vec<u32> {
        self.parts.iter().flat_map(|&(p, l)| std::iter::repeat(p).take(l as usize)).collect()
    }

    /// More than one part in total.
    pub fn is_composite(&self) -> bool {
        self.parts.iter().map(|(_, l)| l).sum::<u32>() > 1
    }
}

impl fmt::Display for OddSumPartition {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.flattened().iter().map(u32::to_string).collect();
        write!(out, "{}", s.join("+"))
    }
}

/// All multisets of odd integers in `[3, n]` summing to `j`, in
/// lexicographic order of their sorted part lists.
pub fn odd_sum_partitions(j: u32, n: u32) -> Vec<OddSumPartition> {
    fn rec(rest: u32, min: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        let mut p = min;
        while p <= rest.min(max) {
            cur.push(p);
            rec(rest - p, p, max, cur, out);
            cur.pop();
            p += 2;
        }
    }
    if j == 0 {
        return vec![OddSumPartition { parts: Vec::new() }];
    }
    let mut flat = Vec::new();
    rec(j, 3, n, &mut Vec::new(), &mut flat);
    flat.sort();
    flat.into_iter()
        .map(|parts| {
            let mut grouped: Vec<(u32, u32)> = Vec::new();
            for p in parts {
                match grouped.last_mut() {
                    Some((q, l)) if *q == p => *l += 1,
                    _ => grouped.push((p, 1)),
                }
            }
            OddSumPartition { parts: grouped }
        })
        .collect()
}

/// `j! ∏ τ_p^{l}/l!` for one partition, with `τ` given symbolically.
pub fn partition_term(j: u32, partition: &OddSumPartition, tau: &BTreeMap<u32, ZetaExpr>) -> Option<ZetaExpr> {
    let mut e = ZetaExpr::constant(Rational::from(factorial(j)));
    for &(p, l) in &partition.parts {
        let t = tau.get(&p)?;
        e = e.mul(&t.pow(l)).scale(&Rational::from((1, factorial(l))));
    }
    Some(e)
}
