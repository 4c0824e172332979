//! Logical depth in both versions, depth curves, gaps and the two-sided
//! bound report relating them.

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::ait::KTable;
use crate::bits::BitString;
use crate::codes::nat_to_string;
use crate::dyadic::DyadicMass;
use crate::error::{Error, Result};

/// Which complexity the significance test `|p| ≤ K(·) + b` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    /// `|p| ≤ K(p) + b`: the program itself is `b`-incompressible.
    #[default]
    ProgramComplexity,
    /// `|p| ≤ K(x) + b`: the program is at most `b` bits longer than `x*`.
    OutputComplexity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Depth {
    pub steps: Option<u64>,
    pub witness: Option<BitString>,
    pub exact: bool,
}

/// `|p| ≤ K(p) + b`, with its exactness. A program no stored program
/// outputs has `K(p) > L ≥ |p|` and passes.
pub fn is_incompressible(table: &KTable<'_>, p: &BitString, b: u64) -> (bool, bool) {
    let pass = match table.k(p) {
        Some(k) => p.len() as u64 <= k as u64 + b,
        None => true,
    };
    (pass, table.k_exact(p))
}

/// `ld²_b(x)`: fewest steps among programs for `x` passing the
/// significance test, with the canonical witness.
pub fn ld2(x: &BitString, b: u64, table: &KTable<'_>) -> Depth {
    ld2_with(x, b, table, Significance::ProgramComplexity)
}

pub fn ld2_with(x: &BitString, b: u64, table: &KTable<'_>, test: Significance) -> Depth {
    let mut exact = true;
    let kx = table.k(x);
    for h in table.hits(x) {
        let (pass, ex) = match test {
            Significance::ProgramComplexity => is_incompressible(table, h.program, b),
            Significance::OutputComplexity => {
                let k = kx.expect("x has a hit");
                (h.program.len() as u64 <= k as u64 + b, table.k_exact(x))
            }
        };
        exact &= ex;
        if pass {
            return Depth {
                steps: Some(h.steps),
                witness: Some(h.program.clone()),
                exact,
            };
        }
    }
    Depth {
        steps: None,
        witness: None,
        exact: exact && table.store().is_complete(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ld1 {
    pub steps: Option<u64>,
    /// False when `Q^D_{≤L}(x)` might still grow, in which case `steps`
    /// is only an upper bound.
    pub exact: bool,
}

/// `ld¹_ε(x)`: least `d` with `Q^d(x) ≥ ε·Q(x)`, `Q(x)` taken at horizon.
pub fn ld1(x: &BitString, eps: &DyadicMass, table: &KTable<'_>) -> Result<Ld1> {
    if eps.is_zero() || *eps > DyadicMass::one() {
        return Err(Error::EpsilonOutOfRange(eps.to_string()));
    }
    let row = table.q_row(x);
    let threshold = eps * &row.q_horizon;
    let steps = if row.q_horizon.is_zero() {
        None
    } else {
        row.qd
            .iter()
            .find(|(_, q)| *q >= threshold)
            .map(|&(d, _)| d)
    };
    Ok(Ld1 {
        steps,
        exact: row.exact,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurvePoint {
    pub b: u64,
    pub ld2: Option<u64>,
    pub witness: Option<BitString>,
    /// Same point under [`Significance::OutputComplexity`]; report only.
    pub ld2_output_test: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DepthCurve {
    pub x: BitString,
    pub k: Option<usize>,
    pub b_max: u64,
    pub points: Vec<CurvePoint>,
    pub exact: bool,
}

impl DepthCurve {
    pub fn at(&self, b: u64) -> Option<u64> {
        self.points.get(b as usize).and_then(|p| p.ld2)
    }
}

/// Significance at which the literal transcription of `x` (`8|x| + 1`
/// bits) is admitted: `(8|x| + 1) − K(x)`, floored at 0.
pub fn b_max(x: &BitString, k: usize) -> u64 {
    (8 * x.len() as u64 + 1).saturating_sub(k as u64)
}

/// `ld²_b(x)` for `b = 0 ..= b_max`. Empty when `x` has no program.
pub fn depth_curve(x: &BitString, table: &KTable<'_>) -> DepthCurve {
    let k = table.k(x);
    let top = k.map_or(0, |k| b_max(x, k));
    let mut exact = true;
    let points = match k {
        None => Vec::new(),
        Some(_) => (0..=top)
            .map(|b| {
                let d = ld2(x, b, table);
                exact &= d.exact;
                CurvePoint {
                    b,
                    ld2: d.steps,
                    witness: d.witness,
                    ld2_output_test: ld2_with(x, b, table, Significance::OutputComplexity).steps,
                }
            })
            .collect(),
    };
    DepthCurve {
        x: x.clone(),
        k,
        b_max: top,
        points,
        exact,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapReport {
    pub x: BitString,
    /// `(b, ld²_b − ld²_{b+1})` wherever both are defined.
    pub gaps: Vec<(u64, i64)>,
    pub i_max: u64,
    pub h: i64,
    pub exact: bool,
}

pub fn gap_report(curve: &DepthCurve) -> GapReport {
    let gaps: Vec<(u64, i64)> = curve
        .points
        .windows(2)
        .filter_map(|w| match (w[0].ld2, w[1].ld2) {
            (Some(a), Some(c)) => Some((w[0].b, a as i64 - c as i64)),
            _ => None,
        })
        .collect();
    // Strict comparison keeps the smallest b on ties.
    let (i_max, h) = gaps.iter().fold(
        (0, 0),
        |(bi, bh), &(b, g)| if g > bh { (b, g) } else { (bi, bh) },
    );
    GapReport {
        x: curve.x.clone(),
        gaps,
        i_max,
        h,
        exact: curve.exact,
    }
}

fn ser_ratio<S: Serializer>(r: &Ratio<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(r)
}

/// Empirical check of `2^{-(b + min(K(b), K(d)) + c)} ≤ Q^d(x)/Q(x) < 2^{-(b+1)}`
/// at `d = ld²_b(x)`. The bounds hold for optimal machines up to additive
/// constants; here they are only reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Theorem1Report {
    pub x: BitString,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub q_d: DyadicMass,
    pub q_horizon: DyadicMass,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Ratio<BigUint>,
    pub right_threshold: DyadicMass,
    /// `K` of `b` and `d` through the integer/string bijection.
    pub k_of_b: Option<usize>,
    pub k_of_d: Option<usize>,
    /// `b + min(K(b), K(d)) + c`; an undefined `K` counts as `L + 1`.
    pub left_exponent: u64,
    pub left_threshold: DyadicMass,
    pub right_holds: bool,
    pub left_holds: bool,
    pub exact: bool,
}

pub fn theorem1_report(
    x: &BitString,
    b: u64,
    c: u64,
    table: &KTable<'_>,
) -> Result<Theorem1Report> {
    let depth = ld2(x, b, table);
    let d = depth
        .steps
        .ok_or_else(|| Error::DepthUndefined { x: x.clone(), b })?;
    let q_d = table.q_bounded(x, d)?;
    let q_horizon = table.q_horizon(x);
    let ratio = q_d.ratio(&q_horizon).expect("a witness contributes mass");

    let k_of_b = table.k(&nat_to_string(b));
    let k_of_d = table.k(&nat_to_string(d));
    let beyond = table.store().max_len() + 1;
    let k_min = k_of_b.unwrap_or(beyond).min(k_of_d.unwrap_or(beyond)) as u64;
    let left_exponent = b + k_min + c;

    let right_threshold = DyadicMass::pow2_neg((b + 1) as u32);
    let left_threshold = DyadicMass::pow2_neg(left_exponent as u32);
    let right_holds = ratio < right_threshold.to_ratio();
    let left_holds = ratio >= left_threshold.to_ratio();
    Ok(Theorem1Report {
        x: x.clone(),
        b,
        c,
        d,
        q_d,
        q_horizon,
        ratio,
        right_threshold,
        k_of_b,
        k_of_d,
        left_exponent,
        left_threshold,
        right_holds,
        left_holds,
        exact: depth.exact && table.store().is_complete(),
    })
}
