//! Closed-form expressions over the constants of the library.
//!
//! A [`ClosedExpr`] evaluates to an [`Estimate`] under any context and can be
//! brought to a canonical polynomial form ([`Polynomial`]) in which
//! rational coefficients are compared exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::context::{rounding_error, Estimate, PrecisionContext, ERR_PREC};
use crate::error::{Error, Result};
use crate::special::{
    bernoulli, beta_int, constant, eta_int, hurwitz_zeta, zeta_int, ConstantName,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedExpr {
    Rat(Rational),
    Pi,
    Log2,
    Catalan,
    Zeta(u32),
    Eta(u32),
    Beta(u32),
    Sqrt(Rational),
    /// `sum_{k>=0} 1/(a k + b)^s`.
    HurwitzSum { s: u32, a: u32, b: u32 },
    /// A decimal known only to within `radius`.
    Approx { value: Rational, radius: Rational },
    Add(Vec<ClosedExpr>),
    Mul(Vec<ClosedExpr>),
    Pow(Box<ClosedExpr>, i32),
}

impl ClosedExpr {
    pub fn int(n: i64) -> Self {
        ClosedExpr::Rat(Rational::from(n))
    }

    pub fn rat(n: i64, d: i64) -> Self {
        ClosedExpr::Rat(Rational::from((n, d)))
    }

    pub fn zeta(n: u32) -> Self {
        ClosedExpr::Zeta(n)
    }

    pub fn pi_pow(n: i32) -> Self {
        ClosedExpr::Pi.pow(n)
    }

    pub fn pow(self, n: i32) -> Self {
        ClosedExpr::Pow(Box::new(self), n)
    }

    pub fn sqrt(r: Rational) -> Self {
        ClosedExpr::Sqrt(r)
    }

    /// Decimal literal such as `"0.16227"`, read as the value truncated after
    /// its last printed digit.
    pub fn truncated_decimal(text: &str) -> Result<Self> {
        let (int_part, frac) = text.split_once('.').unwrap_or((text, ""));
        let digits = format!("{int_part}{frac}");
        let n: Integer = digits
            .parse()
            .map_err(|_| Error::Domain(format!("bad decimal `{text}`")))?;
        let scale = Integer::from(10).pow(frac.len() as u32);
        let half_ulp = Rational::from((1, Integer::from(&scale * 2)));
        let low = Rational::from((n, scale));
        Ok(ClosedExpr::Approx {
            value: low + &half_ulp,
            radius: half_ulp,
        })
    }

    pub fn eval(&self, ctx: &PrecisionContext) -> Result<Estimate> {
        let prec = ctx.prec();
        Ok(match self {
            ClosedExpr::Rat(r) => Estimate::rounded(Float::with_val(prec, r)),
            ClosedExpr::Pi => constant(ConstantName::Pi, ctx),
            ClosedExpr::Log2 => constant(ConstantName::Log2, ctx),
            ClosedExpr::Catalan => constant(ConstantName::Catalan, ctx),
            ClosedExpr::Zeta(n) => zeta_int(*n, ctx)?,
            ClosedExpr::Eta(n) => eta_int(*n, ctx)?,
            ClosedExpr::Beta(n) => beta_int(*n, ctx)?,
            ClosedExpr::Sqrt(r) => {
                if *r < 0 {
                    return Err(Error::Domain(format!("sqrt of negative {r}")));
                }
                Estimate::rounded(Float::with_val(prec, r).sqrt())
            }
            ClosedExpr::HurwitzSum { s, a, b } => {
                if *a == 0 || *b == 0 {
                    return Err(Error::Domain("Hurwitz sum needs a, b >= 1".into()));
                }
                let h = hurwitz_zeta(*s, &Rational::from((*b, *a)), ctx)?;
                let scale = Float::with_val(prec, *a).pow(*s);
                let value = Float::with_val(prec, &h.value / &scale);
                let error = Float::with_val(ERR_PREC, &h.error / &scale) + rounding_error(&value);
                Estimate::new(value, error)
            }
            ClosedExpr::Approx { value, radius } => Estimate::new(
                Float::with_val(prec, value),
                Float::with_val(ERR_PREC, radius),
            ),
            ClosedExpr::Add(xs) => {
                let mut acc = Estimate::new(Float::with_val(prec, 0), Float::with_val(ERR_PREC, 0));
                for x in xs {
                    acc = est_add(&acc, &x.eval(ctx)?);
                }
                acc
            }
            ClosedExpr::Mul(xs) => {
                let mut acc = Estimate::new(Float::with_val(prec, 1), Float::with_val(ERR_PREC, 0));
                for x in xs {
                    acc = est_mul(&acc, &x.eval(ctx)?);
                }
                acc
            }
            ClosedExpr::Pow(x, n) => est_pow(&x.eval(ctx)?, *n)?,
        })
    }

    /// Canonical polynomial form, or `None` when the expression contains an
    /// approximate literal.
    pub fn normal_form(&self) -> Option<Polynomial> {
        Some(match self {
            ClosedExpr::Rat(r) => Polynomial::constant(r.clone()),
            ClosedExpr::Pi => Polynomial::atom(Atom::Pi),
            ClosedExpr::Log2 => Polynomial::atom(Atom::Log2),
            ClosedExpr::Catalan => Polynomial::atom(Atom::Catalan),
            ClosedExpr::Zeta(n) => zeta_normal(*n)?,
            ClosedExpr::Eta(1) => Polynomial::atom(Atom::Log2),
            ClosedExpr::Eta(n) => {
                let factor = Rational::from(1) - Rational::from((1, Integer::from(1) << (n - 1)));
                zeta_normal(*n)?.scale(&factor)
            }
            ClosedExpr::Beta(n) => beta_normal(*n)?,
            ClosedExpr::Sqrt(r) => sqrt_normal(r),
            ClosedExpr::HurwitzSum { s, a, b } => {
                Polynomial::atom(Atom::Hurwitz { s: *s, a: *a, b: *b })
            }
            ClosedExpr::Approx { .. } => return None,
            ClosedExpr::Add(xs) => {
                let mut acc = Polynomial::zero();
                for x in xs {
                    acc = acc.add(&x.normal_form()?);
                }
                acc
            }
            ClosedExpr::Mul(xs) => {
                let mut acc = Polynomial::constant(Rational::from(1));
                for x in xs {
                    acc = acc.mul(&x.normal_form()?);
                }
                acc
            }
            ClosedExpr::Pow(x, n) => x.normal_form()?.pow(*n)?,
        })
    }

    /// True when both sides have the same canonical form.
    pub fn same_as(&self, other: &ClosedExpr) -> bool {
        match (self.normal_form(), other.normal_form()) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }
}

fn est_add(a: &Estimate, b: &Estimate) -> Estimate {
    let prec = a.value.prec().max(b.value.prec());
    let value = Float::with_val(prec, &a.value + &b.value);
    let error = Float::with_val(ERR_PREC, &a.error + &b.error) + rounding_error(&value);
    Estimate::new(value, error)
}

fn est_mul(a: &Estimate, b: &Estimate) -> Estimate {
    let prec = a.value.prec().max(b.value.prec());
    let value = Float::with_val(prec, &a.value * &b.value);
    let av = Float::with_val(ERR_PREC, a.value.abs_ref());
    let bv = Float::with_val(ERR_PREC, b.value.abs_ref());
    let mut error = Float::with_val(ERR_PREC, &av * &b.error);
    error += Float::with_val(ERR_PREC, &bv * &a.error);
    error += Float::with_val(ERR_PREC, &a.error * &b.error);
    error += rounding_error(&value);
    Estimate::new(value, error)
}

fn est_pow(x: &Estimate, n: i32) -> Result<Estimate> {
    let prec = x.value.prec();
    if n == 0 {
        return Ok(Estimate::new(Float::with_val(prec, 1), Float::with_val(ERR_PREC, 0)));
    }
    let base = if n < 0 {
        let av = Float::with_val(ERR_PREC, x.value.abs_ref());
        if av <= x.error {
            return Err(Error::Domain("reciprocal of a value not bounded away from 0".into()));
        }
        let value = Float::with_val(prec, x.value.recip_ref());
        let gap = Float::with_val(ERR_PREC, &av - &x.error);
        let error = Float::with_val(ERR_PREC, &x.error / (av * gap)) + rounding_error(&value);
        Estimate::new(value, error)
    } else {
        x.clone()
    };
    let m = n.unsigned_abs();
    let value = Float::with_val(prec, (&base.value).pow(m));
    let av = Float::with_val(ERR_PREC, base.value.abs_ref());
    let hi = Float::with_val(ERR_PREC, &av + &base.error).pow(m);
    let lo = av.pow(m);
    let mut error = Float::with_val(ERR_PREC, &hi - &lo) * 2u32;
    error += rounding_error(&value) * m;
    Ok(Estimate::new(value, error))
}

impl Add for ClosedExpr {
    type Output = ClosedExpr;
    fn add(self, rhs: ClosedExpr) -> ClosedExpr {
        match self {
            ClosedExpr::Add(mut xs) => {
                xs.push(rhs);
                ClosedExpr::Add(xs)
            }
            lhs => ClosedExpr::Add(vec![lhs, rhs]),
        }
    }
}

impl Sub for ClosedExpr {
    type Output = ClosedExpr;
    fn sub(self, rhs: ClosedExpr) -> ClosedExpr {
        self + (-rhs)
    }
}

impl Neg for ClosedExpr {
    type Output = ClosedExpr;
    fn neg(self) -> ClosedExpr {
        match self {
            ClosedExpr::Rat(r) => ClosedExpr::Rat(-r),
            x => ClosedExpr::int(-1) * x,
        }
    }
}

impl Mul for ClosedExpr {
    type Output = ClosedExpr;
    fn mul(self, rhs: ClosedExpr) -> ClosedExpr {
        match self {
            ClosedExpr::Mul(mut xs) => {
                xs.push(rhs);
                ClosedExpr::Mul(xs)
            }
            lhs => ClosedExpr::Mul(vec![lhs, rhs]),
        }
    }
}

impl Div for ClosedExpr {
    type Output = ClosedExpr;
    fn div(self, rhs: ClosedExpr) -> ClosedExpr {
        self * rhs.pow(-1)
    }
}

impl From<Rational> for ClosedExpr {
    fn from(r: Rational) -> Self {
        ClosedExpr::Rat(r)
    }
}

impl fmt::Display for ClosedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedExpr::Rat(r) => write!(f, "{r}"),
            ClosedExpr::Pi => f.write_str("pi"),
            ClosedExpr::Log2 => f.write_str("log(2)"),
            ClosedExpr::Catalan => f.write_str("G"),
            ClosedExpr::Zeta(n) => write!(f, "zeta({n})"),
            ClosedExpr::Eta(n) => write!(f, "eta({n})"),
            ClosedExpr::Beta(n) => write!(f, "beta({n})"),
            ClosedExpr::Sqrt(r) => write!(f, "sqrt({r})"),
            ClosedExpr::HurwitzSum { s, a, b } => write!(f, "sum_k 1/({a}k+{b})^{s}"),
            ClosedExpr::Approx { value, radius } => {
                let v = Float::with_val(64, value);
                let r = Float::with_val(64, radius);
                write!(f, "{}~{}", v.to_f64(), r.to_f64())
            }
            ClosedExpr::Add(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            ClosedExpr::Mul(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            ClosedExpr::Pow(x, n) => match **x {
                ClosedExpr::Add(_) | ClosedExpr::Mul(_) => write!(f, "({x})^{n}"),
                _ => write!(f, "{x}^{n}"),
            },
        }
    }
}

/// Irreducible symbols of the canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    Pi,
    Log2,
    Catalan,
    /// Odd zeta values only; even ones reduce to powers of pi.
    Zeta(u32),
    /// Even beta values above 2.
    Beta(u32),
    Sqrt(Rational),
    Hurwitz { s: u32, a: u32, b: u32 },
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Pi => f.write_str("pi"),
            Atom::Log2 => f.write_str("log(2)"),
            Atom::Catalan => f.write_str("G"),
            Atom::Zeta(n) => write!(f, "zeta({n})"),
            Atom::Beta(n) => write!(f, "beta({n})"),
            Atom::Sqrt(r) => write!(f, "sqrt({r})"),
            Atom::Hurwitz { s, a, b } => write!(f, "sum_k 1/({a}k+{b})^{s}"),
        }
    }
}

pub type Monomial = BTreeMap<Atom, i32>;

/// Rational linear combination of monomials in [`Atom`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(r: Rational) -> Self {
        let mut p = Self::zero();
        if r != 0 {
            p.terms.insert(Monomial::new(), r);
        }
        p
    }

    pub fn atom(a: Atom) -> Self {
        let mut m = Monomial::new();
        m.insert(a, 1);
        let mut p = Self::zero();
        p.terms.insert(m, Rational::from(1));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Coefficient of the monomial with the given atom exponents.
    pub fn coefficient(&self, monomial: &[(Atom, i32)]) -> Rational {
        let key: Monomial = monomial.iter().cloned().collect();
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut out = Self::zero();
        if *r == 0 {
            return out;
        }
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), Rational::from(c * r));
        }
        out
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let entry = out.terms.entry(m.clone()).or_default();
            *entry += c;
            if *entry == 0 {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (atom, e) in mb {
                    let entry = m.entry(atom.clone()).or_insert(0);
                    *entry += e;
                    if *entry == 0 {
                        m.remove(atom);
                    }
                }
                let term = Polynomial {
                    terms: BTreeMap::from([(m, Rational::from(ca * cb))]),
                };
                out = out.add(&term);
            }
        }
        out
    }

    /// Integer power; negative powers exist only for single monomials.
    pub fn pow(&self, n: i32) -> Option<Self> {
        if n >= 0 {
            let mut out = Polynomial::constant(Rational::from(1));
            for _ in 0..n {
                out = out.mul(self);
            }
            return Some(out);
        }
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let k = n.unsigned_abs();
        let inv_c = Rational::from(c.recip_ref()).pow(k);
        let inv_m: Monomial = m.iter().map(|(a, e)| (a.clone(), e * n)).collect();
        Some(Polynomial {
            terms: BTreeMap::from([(inv_m, inv_c)]),
        })
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            for (a, e) in m {
                if *e == 1 {
                    write!(f, "*{a}")?;
                } else {
                    write!(f, "*{a}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

fn pi_monomial(coeff: Rational, power: u32) -> Polynomial {
    let mut m = Monomial::new();
    if power > 0 {
        m.insert(Atom::Pi, power as i32);
    }
    Polynomial {
        terms: BTreeMap::from([(m, coeff)]),
    }
}

fn zeta_normal(n: u32) -> Option<Polynomial> {
    if n < 2 {
        return None;
    }
    if n % 2 == 1 {
        return Some(Polynomial::atom(Atom::Zeta(n)));
    }
    // zeta(2m) = (-1)^{m+1} B_{2m} (2 pi)^{2m} / (2 (2m)!)
    let m = n / 2;
    let b = bernoulli(n as usize);
    let sign = if m % 2 == 1 { 1 } else { -1 };
    let fact = Integer::from(Integer::factorial(n));
    let two_pow = Integer::from(1) << n;
    let c = b * Rational::from((two_pow * sign, fact * 2));
    Some(pi_monomial(c, n))
}

/// Euler numbers `E_0, E_2, E_4, ...` (`E_2 = -1`, `E_4 = 5`, `E_6 = -61`).
pub fn euler_number(k: usize) -> Integer {
    static CACHE: OnceLock<Mutex<Vec<Integer>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![Integer::from(1)]));
    let mut e = cache.lock().unwrap();
    while e.len() <= k {
        let n = e.len() as u32;
        let mut s = Integer::new();
        for (j, ej) in e.iter().enumerate() {
            s += Integer::from(Integer::binomial_u(2 * n, 2 * j as u32)) * ej;
        }
        e.push(-s);
    }
    e[k].clone()
}

fn beta_normal(n: u32) -> Option<Polynomial> {
    match n {
        0 | 1 => None,
        2 => Some(Polynomial::atom(Atom::Catalan)),
        _ if n % 2 == 1 => {
            // beta(2k+1) = (-1)^k E_{2k} pi^{2k+1} / (4^{k+1} (2k)!)
            let k = (n - 1) / 2;
            let mut e = euler_number(k as usize);
            if k % 2 == 1 {
                e = -e;
            }
            let den = (Integer::from(1) << (2 * (k + 1))) * Integer::from(Integer::factorial(2 * k));
            Some(pi_monomial(Rational::from((e, den)), n))
        }
        _ => Some(Polynomial::atom(Atom::Beta(n))),
    }
}

fn sqrt_normal(r: &Rational) -> Polynomial {
    let (num, den) = (r.numer(), r.denom());
    if num.is_perfect_square() && den.is_perfect_square() {
        let s = Rational::from((Integer::from(num.sqrt_ref()), Integer::from(den.sqrt_ref())));
        Polynomial::constant(s)
    } else {
        Polynomial::atom(Atom::Sqrt(r.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::pi;

    fn ctx(d: u32) -> PrecisionContext {
        PrecisionContext::new(d).unwrap()
    }

    #[test]
    fn euler_numbers() {
        let e: Vec<i64> = (0..5).map(|k| euler_number(k).to_i64().unwrap()).collect();
        assert_eq!(e, vec![1, -1, 5, -61, 1385]);
    }

    #[test]
    fn even_zeta_and_odd_beta_reduce_to_pi_powers() {
        let z2 = ClosedExpr::Zeta(2);
        assert!(z2.same_as(&(ClosedExpr::rat(1, 6) * ClosedExpr::pi_pow(2))));
        let z4 = ClosedExpr::Zeta(4);
        assert!(z4.same_as(&(ClosedExpr::rat(1, 90) * ClosedExpr::pi_pow(4))));
        let b5 = ClosedExpr::Beta(5);
        assert!(b5.same_as(&(ClosedExpr::rat(5, 1536) * ClosedExpr::pi_pow(5))));
        let b7 = ClosedExpr::Beta(7);
        assert!(b7.same_as(&(ClosedExpr::rat(61, 184320) * ClosedExpr::pi_pow(7))));
        assert!(ClosedExpr::Eta(1).same_as(&ClosedExpr::Log2));
        assert!(ClosedExpr::Eta(3).same_as(&(ClosedExpr::rat(3, 4) * ClosedExpr::Zeta(3))));
        assert!(!ClosedExpr::Zeta(3).same_as(&ClosedExpr::Zeta(5)));
    }

    #[test]
    fn normal_form_cancels_and_inverts() {
        let e = ClosedExpr::Pi * ClosedExpr::pi_pow(-1) + ClosedExpr::int(2);
        assert!(e.same_as(&ClosedExpr::int(3)));
        let x = ClosedExpr::Zeta(3) - ClosedExpr::Zeta(3);
        assert!(x.normal_form().unwrap().is_zero());
        assert!(ClosedExpr::Sqrt(Rational::from((9, 4))).same_as(&ClosedExpr::rat(3, 2)));
        let inv = (ClosedExpr::Zeta(3) + ClosedExpr::Pi).pow(-1);
        assert!(inv.normal_form().is_none());
        assert!(ClosedExpr::truncated_decimal("0.16227").unwrap().normal_form().is_none());
    }

    #[test]
    fn eval_matches_normal_form_constants() {
        let c = ctx(30);
        let e = ClosedExpr::rat(1, 6) * ClosedExpr::pi_pow(2) - ClosedExpr::Zeta(2);
        let v = e.eval(&c).unwrap();
        assert!(v.value.clone().abs() <= v.error, "{v}");
        assert!(v.error < 1e-35);
        let b = ClosedExpr::Beta(5) - ClosedExpr::rat(5, 1536) * ClosedExpr::pi_pow(5);
        let v = b.eval(&c).unwrap();
        assert!(v.value.clone().abs() <= v.error);
    }

    #[test]
    fn eval_of_quotients_and_roots() {
        let c = ctx(25);
        let v = (ClosedExpr::int(2) / ClosedExpr::Pi).eval(&c).unwrap();
        let expected = Float::with_val(c.prec(), 2) / pi(&c);
        assert!(Float::with_val(c.prec(), &v.value - &expected).abs() <= v.error);
        let v = ClosedExpr::Sqrt(Rational::from(2)).eval(&c).unwrap();
        assert!((v.value.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        let v = ClosedExpr::HurwitzSum { s: 2, a: 2, b: 1 }.eval(&c).unwrap();
        // sum 1/(2k+1)^2 = pi^2/8
        let expected = Float::with_val(c.prec(), pi(&c).square()) / 8u32;
        assert!(Float::with_val(c.prec(), &v.value - &expected).abs() < 1e-30);
    }

    #[test]
    fn truncated_decimal_interval() {
        let c = ctx(10);
        let v = ClosedExpr::truncated_decimal("0.16227").unwrap().eval(&c).unwrap();
        assert!((v.value.to_f64() - 0.162275).abs() < 1e-12);
        assert!((v.error.to_f64() - 0.000005).abs() < 1e-12);
    }

    #[test]
    fn display_is_readable() {
        let e = ClosedExpr::rat(7, 8) * ClosedExpr::Zeta(3) - ClosedExpr::pi_pow(2) * ClosedExpr::Log2;
        assert_eq!(e.to_string(), "(7/8*zeta(3) + -1*pi^2*log(2))");
        let p = e.normal_form().unwrap();
        assert!(p.to_string().contains("7/8*zeta(3)"));
    }
}
