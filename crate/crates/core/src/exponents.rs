//! Exact exponent algebra.
//!
//! Hölder and Sobolev conjugates over the rationals extended by two markers:
//! `Infinite` (the exponent ∞) and `AnyFinite` (membership in every `L^p`,
//! `1 ≤ p < ∞`). The regime classifier maps a parameter tuple to the set of
//! integrability results that apply to it. No floating point is used here:
//! the regime boundaries are knife-edge equalities such as `m = d/2`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

pub type Rational = Ratio<i128>;

pub fn rat(numer: i128, denom: i128) -> Rational {
    Ratio::new(numer, denom)
}

pub fn int(value: i128) -> Rational {
    Ratio::from_integer(value)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExponentError {
    #[error("exponent {0} is below 1")]
    BelowOne(String),
    #[error("space dimension {0} is below 3")]
    Dimension(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed fraction {0:?}")]
    Parse(String),
    #[error("regime hypothesis violated: {0}")]
    Regime(String),
    #[error("the 'any finite exponent' marker has no conjugate")]
    AnyFiniteOperand,
}

/// A Lebesgue exponent: a rational, the marker for "every finite exponent",
/// or ∞. Ordered as `Finite(_) < AnyFinite < Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    AnyFinite,
    Infinite,
}

impl Exponent {
    pub fn finite(self) -> Option<Rational> {
        match self {
            Exponent::Finite(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    /// Scales by a positive rational; the two markers are fixed points.
    pub fn scale(self, factor: Rational) -> Exponent {
        debug_assert!(factor.is_positive());
        match self {
            Exponent::Finite(q) => Exponent::Finite(q * factor),
            other => other,
        }
    }

    /// Floating-point view for norm evaluation. `AnyFinite` has none.
    pub fn to_f64(self) -> Option<f64> {
        match self {
            Exponent::Finite(q) => Some(ratio_to_f64(q)),
            Exponent::Infinite => Some(f64::INFINITY),
            Exponent::AnyFinite => None,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Exponent::Finite(_) => 0,
            Exponent::AnyFinite => 1,
            Exponent::Infinite => 2,
        }
    }
}

impl From<Rational> for Exponent {
    fn from(q: Rational) -> Self {
        Exponent::Finite(q)
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::AnyFinite => f.write_str("any"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for Exponent {
    type Err = ExponentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "∞" | "infinity" => Ok(Exponent::Infinite),
            "any" => Ok(Exponent::AnyFinite),
            other => parse_fraction(other).map(Exponent::Finite),
        }
    }
}

pub fn ratio_to_f64(q: Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Parses `"a"` or `"a/b"` with integer `a`, `b` exactly. Decimal notation is
/// rejected.
pub fn parse_fraction(s: &str) -> Result<Rational, ExponentError> {
    let err = || ExponentError::Parse(s.to_string());
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: i128 = num.parse().map_err(|_| err())?;
    let den: i128 = den.parse().map_err(|_| err())?;
    if den == 0 {
        return Err(err());
    }
    Ok(Ratio::new(num, den))
}

/// `p' = p/(p-1)`, with `1' = ∞` and `∞' = 1`.
pub fn holder_conjugate(p: Exponent) -> Result<Exponent, ExponentError> {
    match p {
        Exponent::Infinite => Ok(Exponent::Finite(Rational::one())),
        Exponent::AnyFinite => Err(ExponentError::AnyFiniteOperand),
        Exponent::Finite(q) if q < Rational::one() => Err(ExponentError::BelowOne(q.to_string())),
        Exponent::Finite(q) if q.is_one() => Ok(Exponent::Infinite),
        Exponent::Finite(q) => Ok(Exponent::Finite(q / (q - Rational::one()))),
    }
}

/// `p* = dp/(d-p)` for `p < d`, `AnyFinite` for `p = d`, ∞ for `p > d`.
pub fn sobolev_conjugate(p: Rational, d: u32) -> Result<Exponent, ExponentError> {
    if d < 3 {
        return Err(ExponentError::Dimension(d));
    }
    if p < Rational::one() {
        return Err(ExponentError::BelowOne(p.to_string()));
    }
    let dim = int(d as i128);
    Ok(match p.cmp(&dim) {
        Ordering::Less => Exponent::Finite(dim * p / (dim - p)),
        Ordering::Equal => Exponent::AnyFinite,
        Ordering::Greater => Exponent::Infinite,
    })
}

/// `m** = (m*)*`.
pub fn double_sobolev(m: Rational, d: u32) -> Result<Exponent, ExponentError> {
    match sobolev_conjugate(m, d)? {
        Exponent::Finite(q) => sobolev_conjugate(q, d),
        marker => Ok(marker),
    }
}

// q' for a finite q > 1.
fn conj(q: Rational) -> Rational {
    q / (q - Rational::one())
}

/// The parameter tuple `(d, r, γ, θ, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Params {
    d: u32,
    r: Rational,
    gamma: Rational,
    theta: Rational,
    m: Rational,
}

impl Params {
    pub fn new(
        d: u32,
        r: Rational,
        gamma: Rational,
        theta: Rational,
        m: Rational,
    ) -> Result<Self, ExponentError> {
        if d < 3 {
            return Err(ExponentError::Dimension(d));
        }
        let bad = |what: &str| Err(ExponentError::InvalidParams(what.to_string()));
        if r < int(2) {
            return bad("r must satisfy r >= 2");
        }
        if !(gamma.is_positive() && gamma < Rational::one()) {
            return bad("gamma must lie in (0, 1)");
        }
        if theta.is_negative() || theta >= Rational::one() {
            return bad("theta must lie in [0, 1)");
        }
        if m < Rational::one() {
            return bad("m must satisfy m >= 1");
        }
        Ok(Self {
            d,
            r,
            gamma,
            theta,
            m,
        })
    }

    /// Parses every component from fraction strings.
    pub fn parse(
        d: u32,
        r: &str,
        gamma: &str,
        theta: &str,
        m: &str,
    ) -> Result<Self, ExponentError> {
        Self::new(
            d,
            parse_fraction(r)?,
            parse_fraction(gamma)?,
            parse_fraction(theta)?,
            parse_fraction(m)?,
        )
    }

    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn r(&self) -> Rational {
        self.r
    }
    pub fn gamma(&self) -> Rational {
        self.gamma
    }
    pub fn theta(&self) -> Rational {
        self.theta
    }
    pub fn m(&self) -> Rational {
        self.m
    }

    pub fn with_m(&self, m: Rational) -> Result<Self, ExponentError> {
        Self::new(self.d, self.r, self.gamma, self.theta, m)
    }

    pub fn half_dim(&self) -> Rational {
        rat(self.d as i128, 2)
    }

    /// `2* = 2d/(d-2)`.
    pub fn two_star(&self) -> Rational {
        let d = self.d as i128;
        rat(2 * d, d - 2)
    }

    /// Lower end of the dual-space range, `(2*/(1-γ))'`.
    pub fn dual_threshold(&self) -> Rational {
        conj(self.two_star() / (Rational::one() - self.gamma))
    }

    /// `(r/(1-γ))'`.
    pub fn lr_threshold(&self) -> Rational {
        conj(self.r / (Rational::one() - self.gamma))
    }

    /// `((r+1)/(1-γ))'`.
    pub fn lr1_threshold(&self) -> Rational {
        conj((self.r + Rational::one()) / (Rational::one() - self.gamma))
    }

    /// `(r+γ)'`.
    pub fn higher_integrability_threshold(&self) -> Rational {
        conj(self.r + self.gamma)
    }

    /// Smallest `r` admitted by the higher-integrability result, `d/(d-2) - γ`.
    pub fn higher_integrability_min_r(&self) -> Rational {
        let d = self.d as i128;
        rat(d, d - 2) - self.gamma
    }

    /// `d/(3+γ)`, where the `v` integrability switches to ∞ when `r = 2`.
    pub fn v_bounded_threshold(&self) -> Rational {
        int(self.d as i128) / (int(3) + self.gamma)
    }

    pub fn in_dual_space(&self) -> bool {
        self.dual_threshold() <= self.m && self.m < self.half_dim()
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Params", 5)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("r", &self.r.to_string())?;
        st.serialize_field("gamma", &self.gamma.to_string())?;
        st.serialize_field("theta", &self.theta.to_string())?;
        st.serialize_field("m", &self.m.to_string())?;
        st.end()
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d={} r={} gamma={} theta={} m={}",
            self.d, self.r, self.gamma, self.theta, self.m
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RegimeTag {
    /// `m > d/2`.
    Bounded,
    /// `m = d/2`.
    Borderline,
    /// `(2*/(1-γ))' ≤ m < d/2`.
    DualSpace,
    /// `(r/(1-γ))' ≤ m < (2*/(1-γ))'`, `r > 2*`.
    #[serde(rename = "OutsideDual_Lr")]
    OutsideDualLr,
    /// `((r+1)/(1-γ))' ≤ m < (2*/(1-γ))'`, `r > 2* - 1`, `θ = 0`.
    #[serde(rename = "OutsideDual_Lr1")]
    OutsideDualLr1,
    /// `(r+γ)' ≤ m < d/2`, `r ≥ d/(d-2) - γ`.
    HigherIntegrability,
    None,
}

impl RegimeTag {
    pub fn name(self) -> &'static str {
        match self {
            RegimeTag::Bounded => "Bounded",
            RegimeTag::Borderline => "Borderline",
            RegimeTag::DualSpace => "DualSpace",
            RegimeTag::OutsideDualLr => "OutsideDual_Lr",
            RegimeTag::OutsideDualLr1 => "OutsideDual_Lr1",
            RegimeTag::HigherIntegrability => "HigherIntegrability",
            RegimeTag::None => "None",
        }
    }

    /// One-line statement of the result the regime refers to.
    pub fn explanation(self) -> &'static str {
        match self {
            RegimeTag::Bounded => {
                "m > d/2: weak solution with u and v bounded (Stampacchia regime)"
            }
            RegimeTag::Borderline => {
                "m = d/2: weak solution with u in every L^p, p < inf, and v bounded"
            }
            RegimeTag::DualSpace => {
                "datum in the dual space: finite-energy solution with u in L^(m**(1+gamma)); \
                 for r = 2 also v in L^(s_m)"
            }
            RegimeTag::OutsideDualLr => {
                "datum outside the dual space, r > 2*: finite-energy solution with u in L^r"
            }
            RegimeTag::OutsideDualLr1 => {
                "datum outside the dual space, theta = 0, r > 2*-1: finite-energy solution with u in L^(r+1)"
            }
            RegimeTag::HigherIntegrability => {
                "(r+gamma)' <= m < d/2 and r >= d/(d-2)-gamma: u in L^(r+1+gamma)"
            }
            RegimeTag::None => "m lies below every threshold: no result applies",
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegimeEntry {
    pub tag: RegimeTag,
    /// Predicted integrability of `u`; `None` only for `RegimeTag::None`.
    pub u_space: Option<Exponent>,
    /// Predicted integrability of `v`, when known.
    pub v_space: Option<Exponent>,
}

/// The set of applicable results, sorted by tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Regime {
    pub entries: Vec<RegimeEntry>,
}

impl Regime {
    pub fn tags(&self) -> Vec<RegimeTag> {
        self.entries.iter().map(|e| e.tag).collect()
    }

    pub fn contains(&self, tag: RegimeTag) -> bool {
        self.entries.iter().any(|e| e.tag == tag)
    }

    pub fn get(&self, tag: RegimeTag) -> Option<&RegimeEntry> {
        self.entries.iter().find(|e| e.tag == tag)
    }

    pub fn is_none(&self) -> bool {
        self.contains(RegimeTag::None)
    }

    /// Distinct predicted `u` exponents, ascending.
    pub fn u_exponents(&self) -> Vec<Exponent> {
        let mut out: Vec<Exponent> = self.entries.iter().filter_map(|e| e.u_space).collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Rows of the integrability table for `(u_n)` that apply to `params`.
pub fn p_m(params: &Params) -> Vec<(RegimeTag, Exponent)> {
    let m = params.m;
    let half = params.half_dim();
    let mut out = Vec::new();
    match m.cmp(&half) {
        Ordering::Greater => out.push((RegimeTag::Bounded, Exponent::Infinite)),
        Ordering::Equal => out.push((RegimeTag::Borderline, Exponent::AnyFinite)),
        Ordering::Less => {
            let dual = params.dual_threshold();
            if m >= dual {
                let mss = double_sobolev(m, params.d).expect("m >= 1 and d >= 3");
                out.push((
                    RegimeTag::DualSpace,
                    mss.scale(Rational::one() + params.gamma),
                ));
            } else {
                let two_star = params.two_star();
                if params.r > two_star && m >= params.lr_threshold() {
                    out.push((RegimeTag::OutsideDualLr, Exponent::Finite(params.r)));
                }
                if params.theta.is_zero()
                    && params.r > two_star - Rational::one()
                    && m >= params.lr1_threshold()
                {
                    out.push((
                        RegimeTag::OutsideDualLr1,
                        Exponent::Finite(params.r + Rational::one()),
                    ));
                }
            }
        }
    }
    out
}

/// Integrability exponent `s_m` of `v` when `r = 2` and the datum lies in the
/// dual space.
pub fn s_m(params: &Params) -> Result<Exponent, ExponentError> {
    if params.r != int(2) {
        return Err(ExponentError::Regime(format!(
            "s_m requires r = 2, got r = {}",
            params.r
        )));
    }
    if params.m < params.dual_threshold() {
        return Err(ExponentError::Regime(format!(
            "s_m requires m >= (2*/(1-gamma))' = {}, got m = {}",
            params.dual_threshold(),
            params.m
        )));
    }
    if params.m >= params.half_dim() {
        return Err(ExponentError::Regime(format!(
            "s_m requires m < d/2 = {}, got m = {}",
            params.half_dim(),
            params.m
        )));
    }
    let threshold = params.v_bounded_threshold();
    Ok(match params.m.cmp(&threshold) {
        Ordering::Greater => Exponent::Infinite,
        Ordering::Equal => Exponent::AnyFinite,
        Ordering::Less => {
            let mss = double_sobolev(params.m, params.d)?
                .finite()
                .expect("m < d/2 gives a finite m**");
            let s = mss * (Rational::one() + params.gamma) / int(2);
            double_sobolev(s, params.d)?.scale(Rational::one() + params.theta)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PositivityBranch {
    /// `d ∈ {3, 4, 5}`.
    LowDimension,
    /// `d ≥ 6` and `θ > (d-6)/(d-2)`.
    StrongCoupling,
    /// `d ≥ 6`, `m > (1-θ)d/(2(2-θ+γ))` and `θ ≤ (d-6)/(d-2)`.
    LargeDatum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PositivityVerdict {
    pub holds: bool,
    pub branch: Option<PositivityBranch>,
}

/// Sufficient condition for `u > 0` in the whole domain (meaningful for
/// `r = 2` in the dual-space range). Reports the first branch that fires.
pub fn positivity_condition(params: &Params) -> PositivityVerdict {
    let d = params.d as i128;
    let fired = |branch| PositivityVerdict {
        holds: true,
        branch: Some(branch),
    };
    if (3..=5).contains(&d) {
        return fired(PositivityBranch::LowDimension);
    }
    let theta_cut = rat(d - 6, d - 2);
    if params.theta > theta_cut {
        return fired(PositivityBranch::StrongCoupling);
    }
    let one = Rational::one();
    let m_cut = (one - params.theta) * int(d) / (int(2) * (int(2) - params.theta + params.gamma));
    if params.m > m_cut {
        return fired(PositivityBranch::LargeDatum);
    }
    PositivityVerdict {
        holds: false,
        branch: None,
    }
}

/// Every applicable result for `params`, with predicted exponents.
pub fn classify(params: &Params) -> Regime {
    let mut entries: Vec<RegimeEntry> = p_m(params)
        .into_iter()
        .map(|(tag, exponent)| {
            let v_space = match tag {
                RegimeTag::Bounded | RegimeTag::Borderline => Some(Exponent::Infinite),
                RegimeTag::DualSpace if params.r == int(2) => s_m(params).ok(),
                _ => None,
            };
            RegimeEntry {
                tag,
                u_space: Some(exponent),
                v_space,
            }
        })
        .collect();

    if params.higher_integrability_threshold() <= params.m
        && params.m < params.half_dim()
        && params.r >= params.higher_integrability_min_r()
    {
        entries.push(RegimeEntry {
            tag: RegimeTag::HigherIntegrability,
            u_space: Some(Exponent::Finite(params.r + Rational::one() + params.gamma)),
            v_space: None,
        });
    }

    if entries.is_empty() {
        entries.push(RegimeEntry {
            tag: RegimeTag::None,
            u_space: None,
            v_space: None,
        });
    }
    entries.sort_by_key(|e| e.tag);
    Regime { entries }
}
