//! Shared oracles for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dsslab::experiments::{audit_uniqueness, AuditReport};
use dsslab::exponents::{
    double_sobolev, holder_conjugate, p_m, rat, s_m, sobolev_conjugate, Exponent, Params, Rational,
};
use dsslab::field::{Field, GridSpec};
use dsslab::operator::CoefficientField;
use dsslab::scheme::{IterationControl, ProblemData};

/// Exponent values computed with arbitrary-precision rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Big {
    Finite(BigRational),
    Any,
    Inf,
}

fn big(q: Rational) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn small(q: &BigRational) -> Rational {
    let n: i128 = q.numer().try_into().expect("fits");
    let d: i128 = q.denom().try_into().expect("fits");
    rat(n, d)
}

pub fn lift(e: Exponent) -> Big {
    match e {
        Exponent::Finite(q) => Big::Finite(big(q)),
        Exponent::AnyFinite => Big::Any,
        Exponent::Infinite => Big::Inf,
    }
}

fn one() -> BigRational {
    BigRational::from_integer(BigInt::from(1))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `1/p + 1/p' = 1`.
pub fn holder(p: &Big) -> Big {
    match p {
        Big::Inf => Big::Finite(one()),
        Big::Finite(q) if *q == one() => Big::Inf,
        Big::Finite(q) => Big::Finite((one() - q.recip()).recip()),
        Big::Any => unreachable!(),
    }
}

/// `1/p* = 1/p - 1/d`.
pub fn sobolev(p: &BigRational, d: i64) -> Big {
    let gap = p.recip() - int(d).recip();
    if gap > int(0) {
        Big::Finite(gap.recip())
    } else if gap == int(0) {
        Big::Any
    } else {
        Big::Inf
    }
}

pub fn double(m: &BigRational, d: i64) -> Big {
    match sobolev(m, d) {
        Big::Finite(q) => sobolev(&q, d),
        other => other,
    }
}

fn conj(q: BigRational) -> BigRational {
    match holder(&Big::Finite(q)) {
        Big::Finite(x) => x,
        _ => unreachable!(),
    }
}

fn scale(e: Big, k: &BigRational) -> Big {
    match e {
        Big::Finite(q) => Big::Finite(q * k),
        other => other,
    }
}

pub struct Tuple {
    pub d: i64,
    pub r: BigRational,
    pub gamma: BigRational,
    pub theta: BigRational,
    pub m: BigRational,
}

impl Tuple {
    pub fn params(&self) -> Params {
        Params::new(
            self.d as u32,
            small(&self.r),
            small(&self.gamma),
            small(&self.theta),
            small(&self.m),
        )
        .expect("valid tuple")
    }

    fn two_star(&self) -> BigRational {
        int(2 * self.d) / int(self.d - 2)
    }

    pub fn dual_threshold(&self) -> BigRational {
        conj(self.two_star() / (one() - &self.gamma))
    }

    /// Rows of the `p_m` table, straight from its case list.
    pub fn table(&self) -> Vec<(&'static str, Big)> {
        let half = int(self.d) / int(2);
        let g1 = one() - &self.gamma;
        let dual = self.dual_threshold();
        let mut out = Vec::new();
        if self.m > half {
            out.push(("Bounded", Big::Inf));
        } else if self.m == half {
            out.push(("Borderline", Big::Any));
        } else if self.m >= dual {
            out.push((
                "DualSpace",
                scale(double(&self.m, self.d), &(one() + &self.gamma)),
            ));
        } else {
            if conj(&self.r / &g1) <= self.m {
                out.push(("OutsideDual_Lr", Big::Finite(self.r.clone())));
            }
            if self.theta == int(0) && conj((&self.r + one()) / &g1) <= self.m {
                out.push(("OutsideDual_Lr1", Big::Finite(&self.r + one())));
            }
        }
        out
    }

    pub fn s_m(&self) -> Option<Big> {
        let half = int(self.d) / int(2);
        if self.r != int(2) || self.m < self.dual_threshold() || self.m >= half {
            return None;
        }
        let cut = int(self.d) / (int(3) + &self.gamma);
        Some(if self.m > cut {
            Big::Inf
        } else if self.m == cut {
            Big::Any
        } else {
            let Big::Finite(mss) = double(&self.m, self.d) else {
                unreachable!()
            };
            let inner = mss * (one() + &self.gamma) / int(2);
            scale(double(&inner, self.d), &(one() + &self.theta))
        })
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parameter tuples on a grid that includes every regime boundary as an
/// exact value of `m`.
pub fn tuples() -> Vec<Tuple> {
    let mut out = Vec::new();
    for d in [3, 4, 5, 6, 8] {
        for r in [q(2, 1), q(5, 2), q(3, 1), q(11, 2), q(7, 1), q(11, 1)] {
            for gamma in [q(1, 4), q(1, 2), q(3, 4)] {
                for theta in [q(0, 1), q(1, 2)] {
                    let probe = Tuple {
                        d,
                        r: r.clone(),
                        gamma: gamma.clone(),
                        theta: theta.clone(),
                        m: one(),
                    };
                    let g1 = one() - &gamma;
                    let mut ms: BTreeSet<BigRational> =
                        [q(1, 1), q(6, 5), q(7, 5), q(2, 1), q(3, 1)].into();
                    ms.insert(int(d) / int(2));
                    ms.insert(int(d) / (int(3) + &gamma));
                    ms.insert(probe.dual_threshold());
                    ms.insert(conj(&r / &g1));
                    ms.insert(conj((&r + one()) / &g1));
                    ms.insert(conj(&r + &gamma));
                    for m in ms.into_iter().filter(|m| *m >= one()) {
                        out.push(Tuple {
                            d,
                            r: r.clone(),
                            gamma: gamma.clone(),
                            theta: theta.clone(),
                            m,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Compares the crate's exponent calculus with the oracle on every tuple.
/// Returns the number of tuples and the mismatches.
pub fn exponent_mismatches() -> (usize, Vec<String>) {
    let all = tuples();
    let mut bad = Vec::new();
    for t in &all {
        let p = t.params();
        let d = t.d as u32;
        let mut check = |what: &str, got: Big, want: Big| {
            if got != want {
                bad.push(format!("{what} at {p}: got {got:?}, want {want:?}"));
            }
        };
        check(
            "holder",
            lift(holder_conjugate(Exponent::Finite(p.m())).unwrap()),
            holder(&Big::Finite(t.m.clone())),
        );
        check(
            "sobolev",
            lift(sobolev_conjugate(p.m(), d).unwrap()),
            sobolev(&t.m, t.d),
        );
        check(
            "double_sobolev",
            lift(double_sobolev(p.m(), d).unwrap()),
            double(&t.m, t.d),
        );
        let got: Vec<(String, Big)> = p_m(&p)
            .into_iter()
            .map(|(tag, e)| (tag.name().to_string(), lift(e)))
            .collect();
        let want: Vec<(String, Big)> = t
            .table()
            .into_iter()
            .map(|(tag, e)| (tag.to_string(), e))
            .collect();
        if got != want {
            bad.push(format!("p_m at {p}: got {got:?}, want {want:?}"));
        }
        match (s_m(&p).ok(), t.s_m()) {
            (Some(a), Some(b)) if lift(a) == b => {}
            (None, None) => {}
            (a, b) => bad.push(format!("s_m at {p}: got {a:?}, want {b:?}")),
        }
    }
    (all.len(), bad)
}

/// `(d, r, gamma, theta, m, [(tag, u exponent)])`.
pub type TableRow = (
    u32,
    &'static str,
    &'static str,
    &'static str,
    &'static str,
    &'static [(&'static str, &'static str)],
);

/// Hand-built regime table.
pub const REGIME_TABLE: [TableRow; 20] = [
    (3, "2", "1/2", "1/2", "2", &[("Bounded", "inf")]),
    (3, "2", "1/2", "1/2", "3/2", &[("Borderline", "any")]),
    (3, "2", "1/2", "1/2", "6/5", &[("DualSpace", "9")]),
    (3, "2", "1/2", "1/2", "12/11", &[("DualSpace", "6")]),
    (3, "2", "1/2", "1/2", "1", &[("None", "")]),
    (3, "7", "1/2", "1/2", "14/13", &[("OutsideDual_Lr", "7")]),
    (3, "7", "1/2", "0", "16/15", &[("OutsideDual_Lr1", "8")]),
    (
        3,
        "7",
        "1/2",
        "0",
        "14/13",
        &[("OutsideDual_Lr", "7"), ("OutsideDual_Lr1", "8")],
    ),
    (3, "7", "1/2", "1/2", "16/15", &[("None", "")]),
    (
        3,
        "3",
        "1/2",
        "1/2",
        "7/5",
        &[("DualSpace", "63/2"), ("HigherIntegrability", "9/2")],
    ),
    (4, "2", "1/2", "1/2", "3", &[("Bounded", "inf")]),
    (4, "2", "1/2", "1/2", "2", &[("Borderline", "any")]),
    (4, "2", "1/2", "1/2", "3/2", &[("DualSpace", "9")]),
    (
        5,
        "2",
        "1/4",
        "1/2",
        "2",
        &[("DualSpace", "25/2"), ("HigherIntegrability", "13/4")],
    ),
    (
        6,
        "4",
        "1/2",
        "0",
        "8/7",
        &[("OutsideDual_Lr", "4"), ("OutsideDual_Lr1", "5")],
    ),
    (6, "4", "1/2", "1/2", "10/9", &[("None", "")]),
    (3, "2", "1/4", "1/2", "8/7", &[("DualSpace", "6")]),
    (3, "2", "3/4", "1/2", "5/4", &[("DualSpace", "105/8")]),
    (
        3,
        "7",
        "1/2",
        "0",
        "15/13",
        &[("DualSpace", "15/2"), ("HigherIntegrability", "17/2")],
    ),
    (
        3,
        "11/2",
        "1/2",
        "0",
        "13/12",
        &[("OutsideDual_Lr1", "13/2")],
    ),
];

pub fn regime_table_mismatches() -> Vec<String> {
    let mut bad = Vec::new();
    for (d, r, g, t, m, want) in REGIME_TABLE {
        let p = Params::parse(d, r, g, t, m).unwrap();
        let got: Vec<(String, String)> = dsslab::exponents::classify(&p)
            .entries
            .iter()
            .map(|e| {
                (
                    e.tag.name().to_string(),
                    e.u_space.map(|x| x.to_string()).unwrap_or_default(),
                )
            })
            .collect();
        let want: Vec<(String, String)> = want
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        if got != want {
            bad.push(format!("{p}: got {got:?}, want {want:?}"));
        }
    }
    bad
}

/// Uniqueness audits on `count` random configurations: random exponents,
/// grid dimension, nonnegative datum and frozen `v`.
pub fn uniqueness_battery(seed: u64, count: usize) -> Vec<AuditReport> {
    let mut rng = StdRng::seed_from_u64(seed);
    let it = IterationControl::default();
    (0..count)
        .map(|_| {
            let r = rat(rng.gen_range(4..=10), 2);
            let gamma = rat(rng.gen_range(1..=9), 10);
            let theta = rat(rng.gen_range(0..=9), 10);
            let params = Params::new(3, r, gamma, theta, rat(2, 1)).unwrap();
            let d = rng.gen_range(1..=3);
            let cells = [0, 24, 10, 6][d];
            let g = GridSpec::new(d, cells).unwrap();
            let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..5.0)).collect();
            let f = Field::new(g, values).unwrap();
            let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
            let v = Field::new(g, v).unwrap();
            let n = 1u64 << rng.gen_range(0..7);
            let data =
                ProblemData::new(params, CoefficientField::constant(g, 1.0).unwrap(), f).unwrap();
            audit_uniqueness(&data, &v, n, &it).unwrap()
        })
        .collect()
}
