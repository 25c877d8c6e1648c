//! Exact-rational Maclaurin coefficient streams.
//!
//! A [`CoefficientStream`] stores the *reduced* coefficient of a parity
//! form rather than the literal Taylor coefficient:
//!
//! | tag              | series represented                                  |
//! |------------------|-----------------------------------------------------|
//! | `OddBinom`       | `sum_k C(2k,k)/4^k * a_{2k+1} * x^(2k+1)`            |
//! | `EvenInvBinom`   | `sum_k 4^k/C(2k,k) * a_{2k} * x^(2k)`                |
//! | `PlainOdd`       | `sum_k a_{2k+1} * x^(2k+1)`                          |
//! | `PlainEven`      | `sum_k a_{2k} * x^(2k)`                              |
//!
//! In the binomial forms the operator `W f(x) = int_0^1 f(xu) du/sqrt(1-u^2)`
//! acts coefficientwise: it divides `a_{2k+1}` by `2k+1` (odd form) or
//! multiplies the whole series by `pi/2` (even form), dropping the
//! binomial weight in both cases.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::context::{rounding_error, Estimate, PrecisionContext, ERR_PREC};
use crate::error::{Error, Result};
use crate::special::pi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormTag {
    OddBinom,
    EvenInvBinom,
    PlainOdd,
    PlainEven,
}

impl FormTag {
    pub fn is_odd(self) -> bool {
        matches!(self, FormTag::OddBinom | FormTag::PlainOdd)
    }

    /// Power of `x` carried by the `k`-th coefficient.
    pub fn exponent(self, k: u64) -> u64 {
        if self.is_odd() {
            2 * k + 1
        } else {
            2 * k
        }
    }
}

impl fmt::Display for FormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormTag::OddBinom => "ODD_BINOM",
            FormTag::EvenInvBinom => "EVEN_INVBINOM",
            FormTag::PlainOdd => "PLAIN_ODD",
            FormTag::PlainEven => "PLAIN_EVEN",
        };
        f.write_str(s)
    }
}

type CoeffFn = dyn Fn(u64) -> Rational + Send + Sync;

/// A lazily generated, memoized stream of exact coefficients.
///
/// Clones share the memo table.
#[derive(Clone)]
pub struct CoefficientStream {
    tag: FormTag,
    pi_power: u32,
    label: String,
    generator: Arc<CoeffFn>,
    memo: Arc<RwLock<Vec<Rational>>>,
}

impl fmt::Debug for CoefficientStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientStream")
            .field("tag", &self.tag)
            .field("pi_power", &self.pi_power)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl CoefficientStream {
    /// Build a stream from a coefficient rule. `f` is only ever called with
    /// consecutive indices starting at 0.
    pub fn from_fn(
        tag: FormTag,
        label: impl Into<String>,
        pi_power: u32,
        f: impl Fn(u64) -> Rational + Send + Sync + 'static,
    ) -> Self {
        Self {
            tag,
            pi_power,
            label: label.into(),
            generator: Arc::new(f),
            memo: Arc::new(RwLock::new(Vec::new())),
        }
    }

    pub fn tag(&self) -> FormTag {
        self.tag
    }

    pub fn pi_power(&self) -> u32 {
        self.pi_power
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Reduced coefficient `a` of the `k`-th term in the tagged form.
    pub fn coeff(&self, k: u64) -> Rational {
        let idx = k as usize;
        {
            let memo = self.memo.read().unwrap();
            if let Some(c) = memo.get(idx) {
                return c.clone();
            }
        }
        let mut memo = self.memo.write().unwrap();
        while memo.len() <= idx {
            let next = memo.len() as u64;
            memo.push((self.generator)(next));
        }
        memo[idx].clone()
    }

    /// First `n` reduced coefficients.
    pub fn coeffs(&self, n: u64) -> Vec<Rational> {
        (0..n).map(|k| self.coeff(k)).collect()
    }

    /// Literal coefficient of `x^exponent(k)`, binomial weight included and
    /// the symbolic `(pi/2)^pi_power` factor excluded.
    pub fn literal(&self, k: u64) -> Rational {
        let a = self.coeff(k);
        match self.tag {
            FormTag::OddBinom => a * central_binomial_ratio(k),
            FormTag::EvenInvBinom => a / central_binomial_ratio(k),
            FormTag::PlainOdd | FormTag::PlainEven => a,
        }
    }

    pub fn exponent(&self, k: u64) -> u64 {
        self.tag.exponent(k)
    }
}

/// `C(2k,k) / 4^k = (2k-1)!! / (2k)!!`, exact.
pub fn central_binomial_ratio(k: u64) -> Rational {
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for j in 1..=k {
        num *= 2 * j - 1;
        den *= 2 * j;
    }
    Rational::from((num, den))
}

/// `int_0^{pi/2} sin^n x dx`: `(pi/2) C(2m,m)/4^m` for `n = 2m`,
/// `(2m)!!/(2m+1)!!` for `n = 2m+1`.
pub fn wallis(n: u32, ctx: &PrecisionContext) -> Estimate {
    let m = u64::from(n / 2);
    let ratio = central_binomial_ratio(m);
    if n.is_multiple_of(2) {
        let value = Float::with_val(ctx.prec(), pi(ctx) * &ratio) / 2u32;
        let mut est = Estimate::rounded(value);
        est.error *= 4u32;
        est
    } else {
        let exact = Rational::from(1) / (ratio * Rational::from(2 * m + 1));
        Estimate::rounded(Float::with_val(ctx.prec(), &exact))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemFunction {
    Arcsin,
    Arcsin2Over2,
    Arcsinh,
    Arctan,
    Arctanh,
}

impl FromStr for ElemFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arcsin" | "asin" => Ok(ElemFunction::Arcsin),
            "arcsin2_over_2" | "arcsin2" => Ok(ElemFunction::Arcsin2Over2),
            "arcsinh" | "asinh" => Ok(ElemFunction::Arcsinh),
            "arctan" | "atan" => Ok(ElemFunction::Arctan),
            "arctanh" | "atanh" => Ok(ElemFunction::Arctanh),
            _ => Err(Error::UnknownStream(s.to_string())),
        }
    }
}

fn odd_reciprocal(k: u64) -> Rational {
    Rational::from((1, 2 * k + 1))
}

fn alternating(k: u64, r: Rational) -> Rational {
    if k % 2 == 1 {
        -r
    } else {
        r
    }
}

/// Maclaurin stream of an elementary function.
pub fn elem_stream(f: ElemFunction) -> CoefficientStream {
    match f {
        ElemFunction::Arcsin => {
            CoefficientStream::from_fn(FormTag::OddBinom, "arcsin", 0, odd_reciprocal)
        }
        ElemFunction::Arcsin2Over2 => {
            CoefficientStream::from_fn(FormTag::EvenInvBinom, "arcsin^2/2!", 0, |k| {
                if k == 0 {
                    Rational::new()
                } else {
                    Rational::from((1, Integer::from(2 * k).square()))
                }
            })
        }
        ElemFunction::Arcsinh => CoefficientStream::from_fn(FormTag::OddBinom, "arcsinh", 0, |k| {
            alternating(k, odd_reciprocal(k))
        }),
        ElemFunction::Arctan => CoefficientStream::from_fn(FormTag::PlainOdd, "arctan", 0, |k| {
            alternating(k, odd_reciprocal(k))
        }),
        ElemFunction::Arctanh => {
            CoefficientStream::from_fn(FormTag::PlainOdd, "arctanh", 0, odd_reciprocal)
        }
    }
}

/// `1/sqrt(1-x^2) = sum_k C(2k,k)/4^k x^(2k)`; at `x^2 = 4y` it is the
/// central binomial generating function `sum C(2k,k) y^k`.
pub fn inv_sqrt_stream() -> CoefficientStream {
    CoefficientStream::from_fn(
        FormTag::PlainEven,
        "1/sqrt(1-x^2)",
        0,
        central_binomial_ratio_incremental(),
    )
}

fn central_binomial_ratio_incremental() -> impl Fn(u64) -> Rational + Send + Sync {
    let state = Mutex::new((0u64, Rational::from(1)));
    move |k| {
        let mut st = state.lock().unwrap();
        if k < st.0 {
            *st = (0, Rational::from(1));
        }
        while st.0 < k {
            let j = st.0;
            st.1 *= Rational::from((2 * j + 1, 2 * j + 2));
            st.0 += 1;
        }
        st.1.clone()
    }
}

// Nested prefix sums for the arcsin-power expansion. For `arcsin^{2m} / (2m)!`
// the entry `sums[j]` holds `sum_{k > m_1 > ... > m_j > 0} prod 1/(2 m_i)^2`;
// for odd powers the inner indices run over `>= 0` with `1/(2 m_i + 1)^2`.
struct NestedPrefix {
    k: u64,
    even: bool,
    sums: Vec<Rational>,
}

impl NestedPrefix {
    fn new(depth: usize, even: bool) -> Self {
        let mut sums = vec![Rational::new(); depth + 1];
        sums[0] = Rational::from(1);
        Self {
            k: u64::from(even),
            even,
            sums,
        }
    }

    fn reset(&mut self) {
        *self = Self::new(self.sums.len() - 1, self.even);
    }

    fn advance_to(&mut self, k: u64) {
        if k < self.k {
            self.reset();
        }
        while self.k < k {
            let base = if self.even { 2 * self.k } else { 2 * self.k + 1 };
            let w = Rational::from((1, Integer::from(base).square()));
            for j in (1..self.sums.len()).rev() {
                let add = Rational::from(&self.sums[j - 1] * &w);
                self.sums[j] += add;
            }
            self.k += 1;
        }
    }

    fn top(&self) -> &Rational {
        self.sums.last().unwrap()
    }
}

/// Stream of `arcsin^n x / n!` (`n >= 1`).
///
/// Even `n = 2m` gives an `EvenInvBinom` stream with
/// `a_{2k} = 1/(2k)^2 * sum_{k>m_1>...>m_{m-1}>0} prod 1/(2m_i)^2`;
/// odd `n = 2m-1` gives an `OddBinom` stream with
/// `a_{2k+1} = 1/(2k+1) * sum_{k>m_1>...>m_{m-1}>=0} prod 1/(2m_i+1)^2`.
/// The nested sums are kept as exact prefix sums and extended on demand.
pub fn arcsin_pow_stream(n: u32) -> Result<CoefficientStream> {
    if n == 0 {
        return Err(Error::Domain("arcsin power stream needs n >= 1".into()));
    }
    let label = format!("arcsin^{n}/{n}!");
    if n.is_multiple_of(2) {
        let depth = (n / 2 - 1) as usize;
        let table = Mutex::new(NestedPrefix::new(depth, true));
        Ok(CoefficientStream::from_fn(FormTag::EvenInvBinom, label, 0, move |k| {
            if k == 0 {
                return Rational::new();
            }
            let mut t = table.lock().unwrap();
            t.advance_to(k);
            Rational::from(t.top() / Integer::from(2 * k).square())
        }))
    } else {
        let depth = (n.div_ceil(2) - 1) as usize;
        let table = Mutex::new(NestedPrefix::new(depth, false));
        Ok(CoefficientStream::from_fn(FormTag::OddBinom, label, 0, move |k| {
            let mut t = table.lock().unwrap();
            t.advance_to(k);
            Rational::from(t.top() / Integer::from(2 * k + 1))
        }))
    }
}

/// Coefficient action of `W`.
pub fn w_transform(s: &CoefficientStream) -> Result<CoefficientStream> {
    let base = s.clone();
    let label = format!("W[{}]", s.label);
    match s.tag {
        FormTag::OddBinom => Ok(CoefficientStream::from_fn(
            FormTag::PlainOdd,
            label,
            s.pi_power,
            move |k| base.coeff(k) / Integer::from(2 * k + 1),
        )),
        FormTag::EvenInvBinom => Ok(CoefficientStream::from_fn(
            FormTag::PlainEven,
            label,
            s.pi_power + 1,
            move |k| base.coeff(k),
        )),
        FormTag::PlainOdd | FormTag::PlainEven => Err(Error::PlainStream(s.label.clone())),
    }
}

/// `int_0^x f(y)/y dy`, termwise: the coefficient of `x^m` is divided by `m`.
pub fn over_x_integrate(s: &CoefficientStream) -> Result<CoefficientStream> {
    if !s.tag.is_odd() && s.coeff(0) != 0 {
        return Err(Error::NonzeroConstantTerm(s.label.clone()));
    }
    let base = s.clone();
    let tag = s.tag;
    Ok(CoefficientStream::from_fn(
        s.tag,
        format!("int {}/x", s.label),
        s.pi_power,
        move |k| {
            let m = tag.exponent(k);
            if m == 0 {
                Rational::new()
            } else {
                base.coeff(k) / Integer::from(m)
            }
        },
    ))
}

/// Truncated value of a stream together with a bound on the omitted tail.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: Float,
    pub tail_bound: Float,
    pub terms_used: u64,
}

impl SeriesValue {
    pub fn to_estimate(&self) -> Estimate {
        Estimate::new(self.value.clone(), self.tail_bound.clone())
    }
}

const MAJORANT_WINDOW: usize = 5;
const MAJORANT_SAFETY: u32 = 4;
const MIN_TERMS: u64 = 8;

/// Estimated power-law decay exponent of the terms at `|x| = 1`, the smallest
/// over three dyadic probes.
fn boundary_decay_exponent(s: &CoefficientStream) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for k in [32u64, 64, 128] {
        let a = Float::with_val(ERR_PREC, &s.literal(k)).abs();
        let b = Float::with_val(ERR_PREC, &s.literal(2 * k)).abs();
        if a.is_zero() && b.is_zero() {
            continue;
        }
        if b.is_zero() {
            continue;
        }
        let p = Float::with_val(ERR_PREC, &a / &b).log2().to_f64();
        worst = Some(match worst {
            Some(w) => w.min(p),
            None => p,
        });
    }
    worst
}

/// Minimum decay exponent accepted for absolute summability at `|x| = 1`.
pub const BOUNDARY_MIN_DECAY: f64 = 1.1;

/// Sum the stream at `x` (`|x| <= 1`).
///
/// Terms are added until a geometric majorant fitted to the last five terms
/// (times a safety factor of 4) drops below `10^-(digits+guard)`, or until
/// `ctx.series_cap` terms. At `|x| = 1` the terms must decay faster than
/// `k^-1.1`, otherwise the call fails instead of returning a partial sum.
pub fn eval_stream(s: &CoefficientStream, x: &Float, ctx: &PrecisionContext) -> Result<SeriesValue> {
    if !x.is_finite() {
        return Err(Error::NonFinite("series argument".into()));
    }
    let abs_x = Float::with_val(ctx.prec(), x.abs_ref());
    if abs_x > 1 {
        return Err(Error::Domain(format!("|x| = {} > 1", abs_x.to_f64())));
    }
    if abs_x == 1 {
        if let Some(p) = boundary_decay_exponent(s) {
            if p < BOUNDARY_MIN_DECAY {
                return Err(Error::Divergent(format!(
                    "{} at |x| = 1: terms decay like k^-{p:.2}",
                    s.label
                )));
            }
        }
    }

    let wp = ctx.prec() + 16;
    let tol = crate::context::pow10(-(ctx.working_digits() as i32));
    let x2 = Float::with_val(wp, x * x);
    let mut xp = if s.tag.is_odd() {
        Float::with_val(wp, x)
    } else {
        Float::with_val(wp, 1)
    };
    let mut weight = Float::with_val(wp, 1);
    let mut sum = Float::with_val(wp, 0);
    let mut window: Vec<Float> = Vec::with_capacity(MAJORANT_WINDOW);
    let mut tail = Float::with_val(ERR_PREC, f64::INFINITY);
    let mut ratio = Float::with_val(ERR_PREC, f64::INFINITY);
    let mut terms_used = 0u64;
    let mut max_abs = Float::with_val(ERR_PREC, 0);

    for k in 0..ctx.series_cap() {
        let a = s.coeff(k);
        let mut term = Float::with_val(wp, &xp * &a);
        match s.tag {
            FormTag::OddBinom => term *= &weight,
            FormTag::EvenInvBinom => term /= &weight,
            _ => {}
        }
        sum += &term;
        terms_used = k + 1;
        let mag = Float::with_val(ERR_PREC, term.abs_ref());
        if window.len() == MAJORANT_WINDOW {
            window.remove(0);
        }
        window.push(mag);
        let abs_sum = Float::with_val(ERR_PREC, sum.abs_ref());
        if abs_sum > max_abs {
            max_abs = abs_sum;
        }

        // advance weight C(2k,k)/4^k and x power
        weight *= 2 * k + 1;
        weight /= 2 * k + 2;
        xp *= &x2;

        if window.len() == MAJORANT_WINDOW {
            let (r, t) = geometric_majorant(&window);
            ratio = r;
            tail = t;
            if terms_used >= MIN_TERMS && tail <= tol {
                break;
            }
        }
    }

    if (ratio.is_nan() || ratio >= 1) && !window.iter().all(|m| m.is_zero()) {
        return Err(Error::Divergent(format!(
            "{}: terms not decreasing after {terms_used} terms",
            s.label
        )));
    }

    let mut tail_bound = tail;
    tail_bound += rounding_error(&Float::with_val(wp, &max_abs)) * (terms_used + 8);
    let mut value = Float::with_val(ctx.prec(), &sum);
    if s.pi_power > 0 {
        let half_pi = Float::with_val(wp, pi(ctx) / 2u32);
        let factor = Float::with_val(wp, half_pi.pow_ref_u(s.pi_power));
        value *= &factor;
        tail_bound *= Float::with_val(ERR_PREC, &factor);
    }
    if tail_bound > Float::with_val(ERR_PREC, value.abs_ref()) && !value.is_zero() {
        return Err(Error::Uncertified(format!(
            "{}: tail bound {} exceeds |value| after {terms_used} terms",
            s.label,
            tail_bound.to_f64()
        )));
    }
    Ok(SeriesValue {
        value,
        tail_bound,
        terms_used,
    })
}

/// Largest consecutive ratio in the window and the scaled geometric tail it
/// implies (`4 |t_last| r / (1 - r)`), infinite when the ratio reaches 1.
fn geometric_majorant(window: &[Float]) -> (Float, Float) {
    let last = window.last().unwrap();
    if window.iter().all(|m| m.is_zero()) {
        return (Float::with_val(ERR_PREC, 0), Float::with_val(ERR_PREC, 0));
    }
    let mut r = Float::with_val(ERR_PREC, 0);
    for pair in window.windows(2) {
        if pair[0].is_zero() {
            if !pair[1].is_zero() {
                r = Float::with_val(ERR_PREC, f64::INFINITY);
            }
            continue;
        }
        let q = Float::with_val(ERR_PREC, &pair[1] / &pair[0]);
        if q > r {
            r = q;
        }
    }
    if r >= 1 {
        return (r, Float::with_val(ERR_PREC, f64::INFINITY));
    }
    let one_minus = Float::with_val(ERR_PREC, 1 - &r);
    let t = Float::with_val(ERR_PREC, last * &r) / one_minus * MAJORANT_SAFETY;
    (r, t)
}

trait PowU {
    fn pow_ref_u(&self, e: u32) -> Float;
}

impl PowU for Float {
    fn pow_ref_u(&self, e: u32) -> Float {
        use rug::ops::Pow;
        Float::with_val(self.prec(), self.pow(e))
    }
}
