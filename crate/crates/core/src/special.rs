//! Fundamental constants and the integer-argument zeta family.
//!
//! Everything here returns an [`Estimate`]: the value at the context's
//! working precision plus an absolute error bound.
//!
//! * `pi` uses Machin's arctangent formula, `log 2` the series
//!   `2 artanh(1/3)`, and Catalan's constant is `beta(2)`.
//! * `zeta(s)` and the Hurwitz-type sums `sum_{n>=0} (n+a)^-s` use a direct
//!   sum of `N = max(50, digits)` terms followed by an Euler–Maclaurin tail
//!   with as many Bernoulli corrections as needed.
//! * `beta(s)` uses the Cohen–Rodriguez Villegas–Zagier acceleration for
//!   alternating series, whose error decays like `(3 + sqrt 8)^-n`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::context::{rounding_error, Estimate, PrecisionContext, ERR_PREC};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstantName {
    Pi,
    Log2,
    Catalan,
}

impl ConstantName {
    pub const ALL: [ConstantName; 3] = [ConstantName::Pi, ConstantName::Log2, ConstantName::Catalan];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantName::Pi => "pi",
            ConstantName::Log2 => "log2",
            ConstantName::Catalan => "catalan",
        }
    }
}

impl fmt::Display for ConstantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstantName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pi" => Ok(ConstantName::Pi),
            "log2" | "ln2" => Ok(ConstantName::Log2),
            "catalan" | "g" => Ok(ConstantName::Catalan),
            _ => Err(Error::UnknownConstant(s.to_string())),
        }
    }
}

type ConstCache = Mutex<HashMap<(ConstantName, u32), Estimate>>;

fn const_cache() -> &'static ConstCache {
    static CACHE: OnceLock<ConstCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `pi`, `log 2` or Catalan's constant to the context's precision.
pub fn constant(name: ConstantName, ctx: &PrecisionContext) -> Estimate {
    let prec = ctx.prec();
    if let Some(hit) = const_cache().lock().unwrap().get(&(name, prec)) {
        return hit.clone();
    }
    let est = match name {
        ConstantName::Pi => machin_pi(prec),
        ConstantName::Log2 => log2_series(prec),
        ConstantName::Catalan => beta_cvz(2, ctx),
    };
    const_cache()
        .lock()
        .unwrap()
        .insert((name, prec), est.clone());
    est
}

/// Shorthand for the value of `pi` at `ctx`.
pub fn pi(ctx: &PrecisionContext) -> Float {
    constant(ConstantName::Pi, ctx).value
}

/// Shorthand for the value of `log 2` at `ctx`.
pub fn log2(ctx: &PrecisionContext) -> Float {
    constant(ConstantName::Log2, ctx).value
}

// sum_{k>=0} (-1)^k / ((2k+1) m^(2k+1)), at `wp` bits.
fn arctan_inv(m: u32, wp: u32) -> Float {
    let m2 = u64::from(m) * u64::from(m);
    let mut power = Float::with_val(wp, 1) / m;
    let mut sum = power.clone();
    let mut k: u64 = 1;
    loop {
        power /= m2;
        let term = Float::with_val(wp, &power / (2 * k + 1));
        if term.is_zero() || term.get_exp().unwrap_or(i32::MIN) < -(wp as i32) - 4 {
            break;
        }
        if k % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        k += 1;
    }
    sum
}

fn machin_pi(prec: u32) -> Estimate {
    let wp = prec + 32;
    let a = arctan_inv(5, wp) * 16u32;
    let b = arctan_inv(239, wp) * 4u32;
    let value = Float::with_val(prec, a - b);
    Estimate::rounded(value)
}

fn log2_series(prec: u32) -> Estimate {
    // log 2 = 2 artanh(1/3) = 2 sum 1/((2k+1) 3^(2k+1))
    let wp = prec + 32;
    let mut power = Float::with_val(wp, 1) / 3u32;
    let mut sum = power.clone();
    let mut k: u64 = 1;
    loop {
        power /= 9u32;
        let term = Float::with_val(wp, &power / (2 * k + 1));
        if term.get_exp().unwrap_or(i32::MIN) < -(wp as i32) - 4 {
            break;
        }
        sum += &term;
        k += 1;
    }
    Estimate::rounded(Float::with_val(prec, sum * 2u32))
}

fn bernoulli_cache() -> &'static Mutex<Vec<Rational>> {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(vec![Rational::from(1)]))
}

/// Bernoulli number `B_n` (with `B_1 = -1/2`), exact.
pub fn bernoulli(n: usize) -> Rational {
    let mut table = bernoulli_cache().lock().unwrap();
    while table.len() <= n {
        // sum_{k=0}^{m} C(m+1, k) B_k = 0
        let m = table.len();
        let mut acc = Rational::new();
        let mut binom = Integer::from(1);
        for (k, b) in table.iter().enumerate() {
            acc += Rational::from(b * &binom);
            binom *= m + 1 - k;
            binom /= k + 1;
        }
        let bm = -acc / Integer::from(m + 1);
        table.push(bm);
    }
    table[n].clone()
}

/// `sum_{n>=0} (n + a)^-s` for `s >= 2` and rational `a > 0`.
///
/// `N` leading terms are summed directly and the remainder is replaced by
/// the Euler–Maclaurin expansion at `x = N + a`, truncated at the first
/// correction below `10^-(digits+guard)`; that first omitted correction is
/// the reported truncation error.
pub fn hurwitz_zeta(s: u32, a: &Rational, ctx: &PrecisionContext) -> Result<Estimate> {
    if s < 2 {
        return Err(Error::Domain(format!("Hurwitz zeta needs s >= 2, got {s}")));
    }
    if *a <= 0 {
        return Err(Error::Domain(format!("Hurwitz zeta needs a > 0, got {a}")));
    }
    let prec = ctx.prec();
    let wp = prec + 32;
    let n_direct = u32::max(50, ctx.digits());
    let tol = Float::with_val(ERR_PREC, 10).pow(-(ctx.working_digits() as i32));

    let mut sum = Float::with_val(wp, 0);
    for n in 0..n_direct {
        let x = Float::with_val(wp, a + Rational::from(n));
        sum += x.pow(-(s as i32));
    }

    let x = Float::with_val(wp, a + Rational::from(n_direct));
    let x_pow = Float::with_val(wp, (&x).pow(-(s as i32)));
    // integral of t^-s from x to infinity, plus the half end term
    sum += Float::with_val(wp, &x_pow * &x) / (s - 1);
    sum += Float::with_val(wp, &x_pow / 2u32);

    let inv_x2 = Float::with_val(wp, (&x).pow(-2));
    // f_j = (s)_{2j-1} / (2j)! * x^(-s-2j+1); f_1 = s/2 * x^(-s-1)
    let mut f = Float::with_val(wp, &x_pow / &x) * s / 2u32;
    let mut omitted = None;
    for j in 1..=400usize {
        let b = bernoulli(2 * j);
        let term = Float::with_val(wp, &f * &b);
        if Float::with_val(ERR_PREC, term.abs_ref()) < tol {
            omitted = Some(Float::with_val(ERR_PREC, term.abs_ref()));
            break;
        }
        sum += &term;
        let jj = j as u64;
        let s64 = u64::from(s);
        f *= (s64 + 2 * jj - 1) * (s64 + 2 * jj);
        f /= (2 * jj + 1) * (2 * jj + 2);
        f *= &inv_x2;
    }
    let Some(trunc) = omitted else {
        return Err(Error::Divergent(format!(
            "Euler–Maclaurin tail for s={s} did not reach tolerance"
        )));
    };
    let value = Float::with_val(prec, &sum);
    let mut error = rounding_error(&value) * 4u32;
    error += trunc;
    // accumulated rounding of the direct part
    error += rounding_error(&sum) * (n_direct + 64);
    Ok(Estimate::new(value, error))
}

/// Riemann zeta at an integer `s >= 2`.
pub fn zeta_int(s: u32, ctx: &PrecisionContext) -> Result<Estimate> {
    if s < 2 {
        return Err(Error::Domain(format!("zeta(s) needs s >= 2, got {s}")));
    }
    hurwitz_zeta(s, &Rational::from(1), ctx)
}

/// Dirichlet eta: `eta(1) = log 2`, `eta(j) = (1 - 2^(1-j)) zeta(j)`.
pub fn eta_int(j: u32, ctx: &PrecisionContext) -> Result<Estimate> {
    match j {
        0 => Err(Error::Domain("eta(j) needs j >= 1".into())),
        1 => Ok(constant(ConstantName::Log2, ctx)),
        _ => {
            let z = zeta_int(j, ctx)?;
            let factor = Rational::from(1) - Rational::from((1, Integer::from(1) << (j - 1)));
            let value = Float::with_val(ctx.prec(), &z.value * &factor);
            let error = Float::with_val(ERR_PREC, &z.error * &factor) + rounding_error(&value);
            Ok(Estimate::new(value, error))
        }
    }
}

/// Dirichlet beta `sum_{k>=0} (-1)^k / (2k+1)^s` at an integer `s >= 2`.
pub fn beta_int(s: u32, ctx: &PrecisionContext) -> Result<Estimate> {
    if s < 2 {
        return Err(Error::Domain(format!("beta(s) needs s >= 2, got {s}")));
    }
    if s == 2 {
        return Ok(constant(ConstantName::Catalan, ctx));
    }
    Ok(beta_cvz(s, ctx))
}

fn beta_cvz(s: u32, ctx: &PrecisionContext) -> Estimate {
    let prec = ctx.prec();
    let wp = prec + 32;
    let n = cvz_terms(ctx.working_digits());
    let value = alternating_sum(n, wp, |k| {
        Float::with_val(wp, 2 * k + 1).pow(-(s as i32))
    });
    let value = Float::with_val(prec, value);
    let error = cvz_error(n) + rounding_error(&value) * 8u32;
    Estimate::new(value, error)
}

/// Number of CVZ terms needed for `digits` correct decimals.
pub(crate) fn cvz_terms(digits: u32) -> u64 {
    // log(10) / log(3 + sqrt 8) = 1.3062...
    (f64::from(digits) * 1.3063).ceil() as u64 + 2
}

/// The CVZ bound `2 a_0 / (3 + sqrt 8)^n` for `a_0 <= 1`.
pub(crate) fn cvz_error(n: u64) -> Float {
    let base = Float::with_val(ERR_PREC, 8).sqrt() + 3u32;
    Float::with_val(ERR_PREC, 2) / base.pow(n)
}

/// Accelerated `sum_{k>=0} (-1)^k a_k` for a totally monotone `a_k`
/// (Cohen, Rodriguez Villegas, Zagier, Algorithm 1) using `n` terms.
pub fn alternating_sum(n: u64, wp: u32, a: impl Fn(u64) -> Float) -> Float {
    let base = Float::with_val(wp, 8).sqrt() + 3u32;
    let mut d = base.pow(n);
    d = (Float::with_val(wp, &d) + Float::with_val(wp, 1) / &d) / 2u32;
    let mut b = Float::with_val(wp, -1);
    let mut c = Float::with_val(wp, -&d);
    let mut sum = Float::with_val(wp, 0);
    let ni = n as i64;
    for k in 0..n {
        c = Float::with_val(wp, &b - &c);
        sum += Float::with_val(wp, &c * a(k));
        let ki = k as i64;
        // b <- (k+n)(k-n) b / ((k + 1/2)(k + 1))
        b *= (ki + ni) * (ki - ni) * 2;
        b /= (2 * ki + 1) * (ki + 1);
    }
    sum / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::float::Constant;

    fn ctx(d: u32) -> PrecisionContext {
        PrecisionContext::new(d).unwrap()
    }

    fn close(a: &Float, b: &Float, digits: i32) -> bool {
        let diff = Float::with_val(ERR_PREC, a - b).abs();
        diff <= Float::with_val(ERR_PREC, 10).pow(-digits)
    }

    #[test]
    fn pi_and_log2_match_backend_constants() {
        for d in [10, 30, 60, 120] {
            let c = ctx(d);
            let prec = c.prec();
            let pi = constant(ConstantName::Pi, &c);
            let log2 = constant(ConstantName::Log2, &c);
            let catalan = constant(ConstantName::Catalan, &c);
            assert!(close(&pi.value, &Float::with_val(prec, Constant::Pi), d as i32 + 5));
            assert!(close(&log2.value, &Float::with_val(prec, Constant::Log2), d as i32 + 5));
            assert!(close(
                &catalan.value,
                &Float::with_val(prec, Constant::Catalan),
                d as i32 + 5
            ));
        }
    }

    #[test]
    fn constant_examples() {
        let pi = constant(ConstantName::Pi, &ctx(30));
        assert!(pi.value.to_string_radix(10, Some(30)).starts_with("3.14159265358979323846264338328"));
        let log2 = constant(ConstantName::Log2, &ctx(15));
        assert!((log2.to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
        let g = constant(ConstantName::Catalan, &ctx(10));
        assert!((g.to_f64() - 0.915966).abs() < 1e-6);
        assert!("euler".parse::<ConstantName>().is_err());
    }

    #[test]
    fn bernoulli_numbers() {
        assert_eq!(bernoulli(0), 1);
        assert_eq!(bernoulli(1), Rational::from((-1, 2)));
        assert_eq!(bernoulli(2), Rational::from((1, 6)));
        assert_eq!(bernoulli(4), Rational::from((-1, 30)));
        assert_eq!(bernoulli(12), Rational::from((-691, 2730)));
        assert_eq!(bernoulli(13), 0);
    }

    // brute-force partial sum plus the integral tail bracket [N^{1-s}/(s-1) of N+1, of N]
    fn zeta_bracket(s: u32, n: u32) -> (f64, f64) {
        let partial: f64 = (1..=n).rev().map(|k| (k as f64).powi(-(s as i32))).sum();
        let lo = (n as f64 + 1.0).powi(1 - s as i32) / (s as f64 - 1.0);
        let hi = (n as f64).powi(1 - s as i32) / (s as f64 - 1.0);
        (partial + lo, partial + hi)
    }

    #[test]
    fn zeta_lies_in_integral_bracket() {
        for s in 2..=8 {
            let z = zeta_int(s, &ctx(20)).unwrap().to_f64();
            let (lo, hi) = zeta_bracket(s, 2000);
            assert!(lo - 1e-15 <= z && z <= hi + 1e-15, "s={s}: {lo} {z} {hi}");
        }
    }

    #[test]
    fn zeta_examples() {
        let c = ctx(40);
        let prec = c.prec();
        let pi = Float::with_val(prec, Constant::Pi);
        let z2 = zeta_int(2, &c).unwrap();
        let expected = Float::with_val(prec, pi.clone().pow(2u32) / 6u32);
        assert!(close(&z2.value, &expected, 45));
        let z4 = zeta_int(4, &c).unwrap();
        let expected = Float::with_val(prec, pi.clone().pow(4u32) / 90u32);
        assert!(close(&z4.value, &expected, 45));
        let z3 = zeta_int(3, &c).unwrap();
        assert!((z3.to_f64() - 1.202056903159594).abs() < 1e-15);
        assert!(z3.error < Float::with_val(64, 1e-45));
        assert!(zeta_int(1, &c).is_err());
    }

    #[test]
    fn zeta_matches_mpfr_zeta() {
        let c = ctx(50);
        for s in 2..=12u32 {
            let ours = zeta_int(s, &c).unwrap();
            let theirs = Float::with_val(c.prec(), Float::with_val(c.prec(), s).zeta());
            assert!(close(&ours.value, &theirs, 55), "s={s}");
        }
    }

    #[test]
    fn eta_examples_and_alternating_oracle() {
        let c = ctx(30);
        let e1 = eta_int(1, &c).unwrap();
        assert_eq!(e1.value, constant(ConstantName::Log2, &c).value);
        let e2 = eta_int(2, &c).unwrap();
        let z2 = zeta_int(2, &c).unwrap();
        assert!(close(&e2.value, &Float::with_val(c.prec(), &z2.value / 2u32), 35));
        // independent route: accelerated alternating sum over all integers
        for j in 2..=10u32 {
            let wp = c.prec() + 32;
            let alt = alternating_sum(cvz_terms(c.working_digits()), wp, |k| {
                Float::with_val(wp, k + 1).pow(-(j as i32))
            });
            let e = eta_int(j, &c).unwrap();
            assert!(close(&e.value, &alt, 35), "j={j}");
        }
        let e3 = eta_int(3, &c).unwrap();
        assert!((e3.to_f64() - 0.901542677369695).abs() < 1e-15);
        assert!(eta_int(0, &c).is_err());
    }

    #[test]
    fn beta_examples() {
        let c = ctx(40);
        let prec = c.prec();
        let pi = Float::with_val(prec, Constant::Pi);
        let b3 = beta_int(3, &c).unwrap();
        assert!(close(&b3.value, &Float::with_val(prec, pi.clone().pow(3u32) / 32u32), 45));
        let b5 = beta_int(5, &c).unwrap();
        let expected = Float::with_val(prec, pi.clone().pow(5u32) * 5u32 / 1536u32);
        assert!(close(&b5.value, &expected, 45));
        assert!(beta_int(1, &c).is_err());
        assert_eq!(beta_int(2, &c).unwrap(), constant(ConstantName::Catalan, &c));
    }

    #[test]
    fn beta5_against_brute_alternating_sum() {
        // pairwise-summed brute force to 10^6 terms; alternating tail < a_N
        let mut s = 0.0f64;
        let n = 1_000_000u64;
        for k in (0..n).rev() {
            let t = 1.0 / ((2 * k + 1) as f64).powi(5);
            if k % 2 == 0 {
                s += t
            } else {
                s -= t
            }
        }
        let b5 = beta_int(5, &ctx(20)).unwrap().to_f64();
        assert!((s - b5).abs() < 1e-14);
    }

    #[test]
    fn hurwitz_thirds() {
        // sum 1/(3k+1)^2 + 1/(3k+2)^2 = (1 - 1/9) zeta(2)
        let c = ctx(30);
        let a = hurwitz_zeta(2, &Rational::from((1, 3)), &c).unwrap();
        let b = hurwitz_zeta(2, &Rational::from((2, 3)), &c).unwrap();
        let z2 = zeta_int(2, &c).unwrap();
        let lhs = Float::with_val(c.prec(), &a.value + &b.value) / 9u32;
        let rhs = Float::with_val(c.prec(), &z2.value * Rational::from((8, 9)));
        assert!(close(&lhs, &rhs, 35));
    }
}
