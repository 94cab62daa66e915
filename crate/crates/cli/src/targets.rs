//! Expected values loaded from the bundled TOML table and their comparison
//! with computed results.

use std::collections::BTreeMap;
use std::path::Path;

use pfperiods_core::numeric::format_decimal;
use pfperiods_core::period::pascal_symbolic;
use pfperiods_core::symbolic::partition_term;
use pfperiods_core::{
    FrobeniusSolution, Monomial, MonodromyResult, OddSumPartition, PeriodMatrix, ZetaExpr, ZetaFactorization,
};
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BUNDLED: &str = include_str!("../data/targets.toml");

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed target table: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("check {label:?}: {message}")]
    Value { label: String, message: String },
}

#[derive(Clone, Debug, Deserialize)]
pub struct TargetFile {
    pub target: Vec<ReproTarget>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ReproTarget {
    pub n: u32,
    #[serde(default)]
    pub check: Vec<Check>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Check {
    pub label: String,
    pub source: String,
    #[serde(flatten)]
    pub expected: Expected,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct TermSpec {
    pub coefficient: String,
    #[serde(default)]
    pub f: u32,
    #[serde(default)]
    pub zetas: Vec<u32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expected {
    /// Leading coefficients of `h_index`.
    Series { index: usize, values: Vec<String> },
    /// Entry of `T1 - Id`, to the number of digits given.
    MonodromyEntry { row: usize, col: usize, re: String, im: String },
    /// Canonical `a_j`.
    PeriodEntry { j: usize, terms: Vec<TermSpec> },
    /// `(P_ζ)_{row,col}`.
    PZetaEntry { row: usize, col: usize, terms: Vec<TermSpec> },
    /// `P T1 P^{-1}`.
    Conjugated { rows: Vec<Vec<String>> },
    /// `τ_{n,k} = -r ζ(k)/(2πi)^k`.
    Tau { k: u32, r: String },
    /// `(P_ζ)_{j,0} = 0` for each listed `j`.
    Vanishing { js: Vec<usize> },
    /// `(P_ζ)_{j,0} = j! Σ ∏ τ^l/l!` over the listed partitions.
    PZetaFormula { j: u32, partitions: Vec<String> },
}

impl TargetFile {
    pub fn parse(text: &str) -> Result<Self, TargetError> {
        Ok(toml::from_str(text)?)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled target table parses")
    }

    pub fn load(path: Option<&Path>) -> Result<Self, TargetError> {
        match path {
            None => Ok(Self::bundled()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| TargetError::Io { path: p.display().to_string(), source })?;
                Self::parse(&text)
            }
        }
    }

    pub fn for_n(&self, n: u32) -> Option<&ReproTarget> {
        self.target.iter().find(|t| t.n == n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The stage this check needs was not run.
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub label: String,
    pub source: String,
    pub expected: String,
    pub computed: String,
    pub status: Status,
}

/// Whatever stages were computed for one `n`.
#[derive(Default)]
pub struct Computed<'a> {
    pub series: Option<&'a FrobeniusSolution>,
    pub monodromy: Option<&'a MonodromyResult>,
    pub period: Option<&'a PeriodMatrix>,
    pub factorization: Option<&'a ZetaFactorization>,
}

fn rational(label: &str, s: &str) -> Result<Rational, TargetError> {
    s.parse().map_err(|_| TargetError::Value { label: label.into(), message: format!("{s:?} is not a rational") })
}

pub fn terms_expr(label: &str, terms: &[TermSpec]) -> Result<ZetaExpr, TargetError> {
    let mut e = ZetaExpr::zero();
    for t in terms {
        e.add_term(Monomial::new(t.f, t.zetas.clone()), rational(label, &t.coefficient)?);
    }
    Ok(e)
}

fn parse_partition(label: &str, s: &str) -> Result<OddSumPartition, TargetError> {
    let mut parts: BTreeMap<u32, u32> = BTreeMap::new();
    for p in s.split('+') {
        let k: u32 = p.trim().parse().map_err(|_| TargetError::Value { label: label.into(), message: format!("bad partition {s:?}") })?;
        *parts.entry(k).or_default() += 1;
    }
    Ok(OddSumPartition { parts: parts.into_iter().collect() })
}

/// `|x - v| <= 1/2` unit in the last displayed digit of `v`.
fn matches_display(x: &Float, shown: &str) -> bool {
    let decimals = shown.split_once('.').map(|(_, b)| b.len()).unwrap_or(0) as u32;
    let Ok(parsed) = Float::parse(shown) else {
        return false;
    };
    let v = Float::with_val(x.prec(), parsed);
    let half_ulp = Float::with_val(x.prec(), Float::u_pow_u(10, decimals)).recip() / 2u32;
    Float::with_val(x.prec(), x - &v).abs() <= half_ulp
}

fn outcome(check: &Check, expected: String, computed: Option<(String, bool)>) -> CheckOutcome {
    let (computed, status) = match computed {
        None => (String::new(), Status::Skipped),
        Some((c, ok)) => (c, if ok { Status::Pass } else { Status::Fail }),
    };
    CheckOutcome { label: check.label.clone(), source: check.source.clone(), expected, computed, status }
}

pub fn evaluate(target: &ReproTarget, got: &Computed<'_>) -> Result<Vec<CheckOutcome>, TargetError> {
    let mut out = Vec::new();
    for c in &target.check {
        let label = c.label.as_str();
        let o = match &c.expected {
            Expected::Series { index, values } => {
                let want: Vec<Rational> = values.iter().map(|v| rational(label, v)).collect::<Result<_, _>>()?;
                let computed = got.series.map(|s| {
                    let have: Vec<Rational> = s.row(*index).iter().take(want.len()).cloned().collect();
                    let text = have.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
                    (text, have == want)
                });
                outcome(c, values.join(", "), computed)
            }
            Expected::MonodromyEntry { row, col, re, im } => {
                let computed = got.monodromy.map(|m| {
                    let z = &m.nilpotent_part()[(*row, *col)];
                    let digits = re.len().max(im.len()) + 2;
                    let text = format!("{} + {}i", format_decimal(z.real(), digits), format_decimal(z.imag(), digits));
                    (text, matches_display(z.real(), re) && matches_display(z.imag(), im))
                });
                outcome(c, format!("{re} + {im}i"), computed)
            }
            Expected::PeriodEntry { j, terms } => {
                let want = terms_expr(label, terms)?;
                let computed = got.period.map(|p| (p.a[*j].to_string(), p.a[*j] == want));
                outcome(c, want.to_string(), computed)
            }
            Expected::PZetaEntry { row, col, terms } => {
                let want = terms_expr(label, terms)?;
                let computed = got.factorization.map(|f| {
                    let e = f.entry(*row, *col);
                    (e.to_string(), e == want)
                });
                outcome(c, want.to_string(), computed)
            }
            Expected::Conjugated { rows } => {
                let want: Vec<Vec<Rational>> =
                    rows.iter().map(|r| r.iter().map(|v| rational(label, v)).collect()).collect::<Result<_, _>>()?;
                let computed = got.period.map(|p| {
                    let m = &p.conjugated;
                    let have: Vec<Vec<Rational>> = (0..m.dim()).map(|i| (0..m.dim()).map(|k| m[(i, k)].clone()).collect()).collect();
                    (format!("{have:?}"), have == want)
                });
                outcome(c, format!("{want:?}"), computed)
            }
            Expected::Tau { k, r } => {
                let want = rational(label, r)?;
                let computed = got.factorization.map(|f| match f.r.get(k) {
                    Some(v) => (v.to_string(), *v == want),
                    None => ("missing".to_string(), false),
                });
                outcome(c, want.to_string(), computed)
            }
            Expected::Vanishing { js } => {
                let computed = got.factorization.map(|f| {
                    let vals: Vec<String> = js.iter().map(|&j| f.column.get(j).map(ToString::to_string).unwrap_or_default()).collect();
                    (vals.join(", "), js.iter().all(|&j| f.column.get(j).is_some_and(ZetaExpr::is_zero)))
                });
                outcome(c, vec!["0"; js.len()].join(", "), computed)
            }
            Expected::PZetaFormula { j, partitions } => {
                let parts: Vec<OddSumPartition> = partitions.iter().map(|p| parse_partition(label, p)).collect::<Result<_, _>>()?;
                let computed = got.factorization.map(|f| {
                    let tau = &f.tau;
                    let predicted = parts
                        .iter()
                        .map(|p| partition_term(*j, p, tau))
                        .try_fold(ZetaExpr::zero(), |acc, t| t.map(|t| acc.add(&t)));
                    let have = &f.column[*j as usize];
                    match predicted {
                        Some(p) => (have.to_string(), *have == p),
                        None => (have.to_string(), false),
                    }
                });
                outcome(c, format!("{j}! Σ over {}", partitions.join(", ")), computed)
            }
        };
        out.push(o);
    }
    Ok(out)
}

/// Symbolic `P_ζ` from its first column.
pub fn p_zeta_symbolic(fac: &ZetaFactorization) -> Vec<Vec<ZetaExpr>> {
    pascal_symbolic(&fac.column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pfperiods_core::{build_operator, frobenius_series};

    #[test]
    fn bundled_table_parses() {
        let t = TargetFile::bundled();
        for n in [1, 4, 5, 6, 7, 8, 9, 10, 11, 12] {
            assert!(t.for_n(n).is_some(), "n={n}");
        }
        let taus = t.target.iter().flat_map(|t| &t.check).filter(|c| matches!(c.expected, Expected::Tau { .. })).count();
        assert_eq!(taus, 1 + 2 + 2 + 3 + 3 + 4 + 4 + 5 + 5);
    }

    #[test]
    fn series_checks_against_exact_coefficients() {
        let t = TargetFile::bundled();
        for n in [1u32, 4] {
            let sol = frobenius_series(&build_operator(n as i64).unwrap(), 8).unwrap();
            let got = Computed { series: Some(&sol), ..Computed::default() };
            let res = evaluate(t.for_n(n).unwrap(), &got).unwrap();
            let series: Vec<_> = res.iter().filter(|o| o.status != Status::Skipped).collect();
            assert_eq!(series.len(), n as usize + 1);
            assert!(series.iter().all(|o| o.status == Status::Pass), "{series:?}");
        }
    }

    #[test]
    fn display_tolerance() {
        let x = Float::with_val(200, Float::parse("1.573646186547269000988").unwrap());
        assert!(matches_display(&x, "1.5736461865472690010"));
        assert!(!matches_display(&x, "1.5736461865472690030"));
    }
}
