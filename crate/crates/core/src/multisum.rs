//! Multi-indices, duality, nested sums and their closed forms.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::context::{pow10, rounding_error, Estimate, PrecisionContext, ERR_PREC};
use crate::error::{Error, Result};
use crate::expr::ClosedExpr;

/// A composition `(i_1, ..., i_k)` of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    parts: Vec<u32>,
}

impl MultiIndex {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parse {
                input: String::new(),
                reason: "empty index".into(),
            });
        }
        if parts.contains(&0) {
            return Err(Error::Parse {
                input: format_parts(&parts),
                reason: "parts must be positive".into(),
            });
        }
        Ok(Self { parts })
    }

    /// `{m}^n`.
    pub fn repeat(m: u32, n: usize) -> Result<Self> {
        Self::new(vec![m; n])
    }

    /// `(head, {m}^n)`.
    pub fn head_repeat(head: u32, m: u32, n: usize) -> Result<Self> {
        let mut parts = vec![head];
        parts.extend(std::iter::repeat_n(m, n));
        Self::new(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn depth(&self) -> usize {
        self.parts.len()
    }

    pub fn is_admissible(&self) -> bool {
        self.parts[0] >= 2
    }
}

fn format_parts(parts: &[u32]) -> String {
    parts
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_parts(&self.parts))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Comma-separated parts; `{m}^n` expands to `n` copies of `m`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = Vec::new();
        for item in s.split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(bad("empty part"));
            }
            if let Some(rest) = item.strip_prefix('{') {
                let (m, n) = rest
                    .split_once("}^")
                    .ok_or_else(|| bad("repetition must look like {m}^n"))?;
                let m: u32 = m.trim().parse().map_err(|_| bad("bad repeated part"))?;
                let n: usize = n.trim().parse().map_err(|_| bad("bad repetition count"))?;
                parts.extend(std::iter::repeat_n(m, n));
            } else {
                parts.push(item.parse().map_err(|_| bad("parts must be positive integers"))?);
            }
        }
        if parts.is_empty() {
            return Err(bad("empty index"));
        }
        if parts.contains(&0) {
            return Err(bad("parts must be positive"));
        }
        Ok(Self { parts })
    }
}

/// Dual index under the iterated-integral involution.
pub fn dual_index(i: &MultiIndex) -> Result<MultiIndex> {
    if !i.is_admissible() {
        return Err(Error::NotAdmissible(i.to_string()));
    }
    // blocks (a, b) from (a+1, {1}^{b-1})
    let mut blocks: Vec<(u32, u32)> = Vec::new();
    for &p in &i.parts {
        if p >= 2 {
            blocks.push((p - 1, 1));
        } else {
            blocks.last_mut().unwrap().1 += 1;
        }
    }
    let mut parts = Vec::with_capacity(i.weight() as usize);
    for &(a, b) in blocks.iter().rev() {
        parts.push(b + 1);
        parts.extend(std::iter::repeat_n(1, (a - 1) as usize));
    }
    MultiIndex::new(parts)
}

/// Every admissible index of weight `2..=max_weight`, ordered by weight then
/// lexicographically.
pub fn admissible_indices(max_weight: u32) -> Vec<MultiIndex> {
    fn compositions(w: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if w == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in 1..=w {
            prefix.push(p);
            compositions(w - p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for w in 2..=max_weight {
        for head in 2..=w {
            let mut rest = Vec::new();
            compositions(w - head, &mut vec![], &mut rest);
            for tail in rest {
                let mut parts = vec![head];
                parts.extend(tail);
                out.push(MultiIndex { parts });
            }
        }
    }
    out.sort_by(|a, b| a.weight().cmp(&b.weight()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SumKind {
    Zeta,
    T,
    Mu,
    MuBar,
}

impl SumKind {
    /// Whether `n` may occupy summation level `level` (0 = outermost, the
    /// largest variable) of a depth-`depth` sum.
    fn allows(self, n: u64, level: usize, depth: usize) -> bool {
        let j = (depth - level) as u64;
        match self {
            SumKind::Zeta => true,
            SumKind::T => n % 2 == 1,
            SumKind::Mu => n % 2 == j % 2,
            SumKind::MuBar => n % 2 == (j + 1) % 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SumKind::Zeta => "zeta",
            SumKind::T => "t",
            SumKind::Mu => "mu",
            SumKind::MuBar => "mubar",
        }
    }
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeta" => Ok(SumKind::Zeta),
            "t" => Ok(SumKind::T),
            "mu" => Ok(SumKind::Mu),
            "mubar" => Ok(SumKind::MuBar),
            _ => Err(Error::Parse {
                input: s.to_string(),
                reason: "sum kind must be zeta, t, mu or mubar".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSumValue {
    pub value: Float,
    pub tail_bound: Float,
    pub n_truncation: u64,
}

impl MultiSumValue {
    pub fn to_estimate(&self) -> Estimate {
        Estimate::new(self.value.clone(), self.tail_bound.clone())
    }

    /// Decimal places covered by the tail bound.
    pub fn certified_digits(&self, cap: u32) -> u32 {
        crate::context::certified_digits(&self.tail_bound, cap)
    }
}

pub const MAX_TRUNCATION: u64 = 100_000;
const TAIL_SAFETY: u32 = 2;

/// Truncation used by [`multisum_eval`].
pub fn default_truncation(ctx: &PrecisionContext) -> u64 {
    ctx.series_cap().min(MAX_TRUNCATION)
}

/// Nested sum of the given kind, truncated at the default `N`.
///
/// For `Mu`/`MuBar` the first listed part sits on the largest variable, as
/// for the other kinds.
pub fn multisum_eval(kind: SumKind, i: &MultiIndex, ctx: &PrecisionContext) -> Result<MultiSumValue> {
    multisum_eval_n(kind, i, default_truncation(ctx), ctx)
}

type CacheKey = (SumKind, Vec<u32>, u64, u32);

fn cache() -> &'static Mutex<HashMap<CacheKey, MultiSumValue>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, MultiSumValue>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nested sum with every variable at most `n`.
pub fn multisum_eval_n(
    kind: SumKind,
    i: &MultiIndex,
    n: u64,
    ctx: &PrecisionContext,
) -> Result<MultiSumValue> {
    if !i.is_admissible() {
        return Err(Error::NotAdmissible(format!("{kind}({i}) diverges")));
    }
    if n < 2 {
        return Err(Error::Domain("truncation must be at least 2".into()));
    }
    let wp = ctx.prec() + 16;
    let key = (kind, i.parts.clone(), n, wp);
    if let Some(v) = cache().lock().unwrap().get(&key) {
        return Ok(v.clone());
    }

    let parts = &i.parts;
    let depth = parts.len();
    let mut exps: Vec<u32> = parts.clone();
    exps.sort_unstable();
    exps.dedup();
    let mut sums: Vec<Float> = vec![Float::with_val(wp, 0); depth];
    let mut inv_pows: Vec<Float> = vec![Float::with_val(wp, 0); exps.len()];
    let mut max_abs = Float::with_val(ERR_PREC, 0);
    for m in 1..=n {
        let inv = Float::with_val(wp, m).recip();
        for (slot, &e) in inv_pows.iter_mut().zip(&exps) {
            *slot = Float::with_val(wp, (&inv).pow(e));
        }
        for level in 0..depth {
            if !kind.allows(m, level, depth) {
                continue;
            }
            let e_idx = exps.binary_search(&parts[level]).unwrap();
            let term = if level + 1 == depth {
                inv_pows[e_idx].clone()
            } else {
                if sums[level + 1].is_zero() {
                    continue;
                }
                Float::with_val(wp, &inv_pows[e_idx] * &sums[level + 1])
            };
            sums[level] += term;
        }
    }
    for s in &sums {
        let a = Float::with_val(ERR_PREC, s.abs_ref());
        if a > max_abs {
            max_abs = a;
        }
    }

    let inner = if depth > 1 {
        Float::with_val(ERR_PREC, &sums[1])
    } else {
        Float::with_val(ERR_PREC, 1)
    };
    let q = parts[1..].iter().filter(|&&p| p == 1).count() as u32;
    let mut tail = outer_tail(parts[0], q, n, &inner);
    tail *= TAIL_SAFETY;
    tail += rounding_error(&Float::with_val(wp, &max_abs)) * (n * depth as u64 + 1);

    let value = Float::with_val(ctx.prec(), &sums[0]);
    if tail > Float::with_val(ERR_PREC, value.abs_ref()) {
        return Err(Error::Uncertified(format!(
            "{kind}({i}) at N = {n}: tail bound {} exceeds the value",
            tail.to_f64()
        )));
    }
    let out = MultiSumValue {
        value,
        tail_bound: tail,
        n_truncation: n,
    };
    cache().lock().unwrap().insert(key, out.clone());
    Ok(out)
}

/// `C * int_N^inf x^-s (1 + log x)^q dx` with `C = inner / (1 + log N)^q`.
fn outer_tail(s: u32, q: u32, n: u64, inner: &Float) -> Float {
    let l = Float::with_val(ERR_PREC, n).ln();
    let one_l = Float::with_val(ERR_PREC, &l + 1u32);
    let s1 = Float::with_val(ERR_PREC, s - 1);
    let mut acc = Float::with_val(ERR_PREC, 0);
    let mut falling = Float::with_val(ERR_PREC, 1);
    for j in 0..=q {
        if j > 0 {
            falling *= q - j + 1;
        }
        let term = Float::with_val(ERR_PREC, (&one_l).pow(q - j)) * &falling
            / Float::with_val(ERR_PREC, (&s1).pow(j + 1));
        acc += term;
    }
    let decay = Float::with_val(ERR_PREC, -(s1 * l)).exp();
    let c = Float::with_val(ERR_PREC, inner / one_l.pow(q));
    acc * decay * c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosedFamily {
    Zeta2Rep,
    T2Rep,
    Zeta4Rep,
    T4Rep,
    Zeta32Rep,
    T32Rep,
}

impl ClosedFamily {
    pub const ALL: [ClosedFamily; 6] = [
        ClosedFamily::Zeta2Rep,
        ClosedFamily::T2Rep,
        ClosedFamily::Zeta4Rep,
        ClosedFamily::T4Rep,
        ClosedFamily::Zeta32Rep,
        ClosedFamily::T32Rep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClosedFamily::Zeta2Rep => "zeta_2rep",
            ClosedFamily::T2Rep => "t_2rep",
            ClosedFamily::Zeta4Rep => "zeta_4rep",
            ClosedFamily::T4Rep => "t_4rep",
            ClosedFamily::Zeta32Rep => "zeta_3_2rep",
            ClosedFamily::T32Rep => "t_3_2rep",
        }
    }

    /// The nested sum the family evaluates.
    pub fn target(self, n: u32) -> Result<(SumKind, MultiIndex)> {
        let n = n as usize;
        Ok(match self {
            ClosedFamily::Zeta2Rep => (SumKind::Zeta, MultiIndex::repeat(2, n)?),
            ClosedFamily::T2Rep => (SumKind::T, MultiIndex::repeat(2, n)?),
            ClosedFamily::Zeta4Rep => (SumKind::Zeta, MultiIndex::repeat(4, n)?),
            ClosedFamily::T4Rep => (SumKind::T, MultiIndex::repeat(4, n)?),
            ClosedFamily::Zeta32Rep => (SumKind::Zeta, MultiIndex::head_repeat(3, 2, n)?),
            ClosedFamily::T32Rep => (SumKind::T, MultiIndex::head_repeat(3, 2, n)?),
        })
    }
}

impl FromStr for ClosedFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClosedFamily::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownIdentity(s.to_string()))
    }
}

impl fmt::Display for ClosedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

fn q(num: impl Into<Integer>, den: impl Into<Integer>) -> ClosedExpr {
    ClosedExpr::Rat(Rational::from((num.into(), den.into())))
}

fn pow2(e: u32) -> Integer {
    Integer::from(1) << e
}

/// Symbolic closed form of a family member.
pub fn closed_form_expr(family: ClosedFamily, n: u32) -> Result<ClosedExpr> {
    let needs_positive = !matches!(family, ClosedFamily::Zeta32Rep | ClosedFamily::T32Rep);
    if needs_positive && n == 0 {
        return Err(Error::Domain(format!("{family} needs n >= 1")));
    }
    Ok(match family {
        // 2^{2n} (pi/2)^{2n} / (2n+1)! = pi^{2n} / (2n+1)!
        ClosedFamily::Zeta2Rep => q(1, factorial(2 * n + 1)) * ClosedExpr::pi_pow(2 * n as i32),
        ClosedFamily::T2Rep => {
            q(1, factorial(2 * n) * pow2(2 * n)) * ClosedExpr::pi_pow(2 * n as i32)
        }
        ClosedFamily::Zeta4Rep => {
            q(pow2(2 * n + 1), factorial(4 * n + 2)) * ClosedExpr::pi_pow(4 * n as i32)
        }
        ClosedFamily::T4Rep => {
            q(1, pow2(2 * n) * factorial(4 * n)) * ClosedExpr::pi_pow(4 * n as i32)
        }
        ClosedFamily::T32Rep => {
            let m = 2 * n + 1;
            q(1, factorial(m))
                * (ClosedExpr::rat(1, 2) * ClosedExpr::Pi * i_closed_expr(m)?
                    - i_closed_expr(m + 1)?)
        }
        ClosedFamily::Zeta32Rep => {
            let m = 2 * n + 2;
            q(pow2(2 * n + 4), factorial(m))
                * ClosedExpr::pi_pow(-1)
                * (ClosedExpr::rat(1, 2) * ClosedExpr::Pi * i_closed_expr(m)?
                    - i_closed_expr(m + 1)?)
        }
    })
}

pub fn closed_form(family: ClosedFamily, n: u32, ctx: &PrecisionContext) -> Result<Estimate> {
    closed_form_expr(family, n)?.eval(ctx)
}

/// `int_0^{pi/2} y^n cot y dy` as a rational combination of
/// `pi^a * eta(odd)` and, for even `n`, `zeta(n+1)`.
pub fn i_closed_expr(n: u32) -> Result<ClosedExpr> {
    if n == 0 {
        return Err(Error::Domain("I(n) needs n >= 1".into()));
    }
    let sign = |j: u32| if j.is_multiple_of(2) { 1 } else { -1 };
    let m = n / 2;
    let top = if n % 2 == 1 { m } else { m - 1 };
    let mut terms = Vec::new();
    for j in 0..=top {
        let p = n - 2 * j;
        terms.push(q(sign(j), factorial(p)) * ClosedExpr::pi_pow(p as i32) * ClosedExpr::Eta(2 * j + 1));
    }
    if n.is_multiple_of(2) {
        // (-1)^m 2 (1 - 2^{-2m-1}) zeta(2m+1) = (-1)^m (2^{n+1} - 1) / 2^n zeta(n+1)
        terms.push(q(sign(m) * (pow2(n + 1) - 1), pow2(n)) * ClosedExpr::Zeta(n + 1));
    }
    Ok(q(factorial(n), pow2(n)) * ClosedExpr::Add(terms))
}

pub fn i_closed(n: u32, ctx: &PrecisionContext) -> Result<Estimate> {
    i_closed_expr(n)?.eval(ctx)
}

/// Budget for comparing two nested sums or a nested sum with a constant.
pub fn combined_budget(bounds: &[&Float], ctx: &PrecisionContext) -> Float {
    let mut b = pow10(-(ctx.digits() as i32));
    for x in bounds {
        b += *x;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{log2, pi, zeta_int};
    use proptest::prelude::*;

    fn ctx(d: u32) -> PrecisionContext {
        PrecisionContext::new(d).unwrap()
    }

    fn idx(s: &str) -> MultiIndex {
        s.parse().unwrap()
    }

    fn diff(a: &Float, b: &Float) -> Float {
        Float::with_val(a.prec().max(b.prec()), a - b).abs()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(idx("3,{2}^4").parts(), &[3, 2, 2, 2, 2]);
        assert_eq!(idx(" 3, 2 ,2").to_string(), "3,2,2");
        assert_eq!(idx("{2}^3").weight(), 6);
        assert_eq!(idx("4,1,1").depth(), 3);
        for bad in ["", "3,,2", "0,1", "a", "{2}3", "3,{x}^2"] {
            assert!(bad.parse::<MultiIndex>().is_err(), "{bad}");
        }
        assert!(!idx("1,2").is_admissible());
    }

    #[test]
    fn dual_examples() {
        assert_eq!(dual_index(&idx("2,1")).unwrap(), idx("3"));
        assert_eq!(dual_index(&idx("3")).unwrap(), idx("2,1"));
        assert_eq!(dual_index(&idx("3,1")).unwrap(), idx("3,1"));
        // (r+2, {1}^n) -> (n+2, {1}^r) with r = 2, n = 3
        assert_eq!(dual_index(&idx("4,1,1,1")).unwrap(), idx("5,1,1"));
        assert!(matches!(dual_index(&idx("1,2")), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn duality_is_an_involution_up_to_weight_10() {
        let all = admissible_indices(10);
        assert_eq!(all.len(), (0..9).map(|k| 1usize << k).sum::<usize>());
        for i in &all {
            let d = dual_index(i).unwrap();
            assert!(d.is_admissible());
            assert_eq!(d.weight(), i.weight());
            assert_eq!(dual_index(&d).unwrap(), *i);
        }
    }

    proptest! {
        #[test]
        fn dual_preserves_weight_and_swaps_depth(tail in proptest::collection::vec(1u32..4, 0..8), head in 2u32..6) {
            let mut parts = vec![head];
            parts.extend(tail);
            let i = MultiIndex::new(parts).unwrap();
            let d = dual_index(&i).unwrap();
            prop_assert_eq!(d.weight(), i.weight());
            // depth + dual depth = weight
            prop_assert_eq!(d.depth() + i.depth(), i.weight() as usize);
            prop_assert_eq!(dual_index(&d).unwrap(), i);
        }
    }

    #[test]
    fn single_sums() {
        let c = ctx(15);
        let z2 = multisum_eval(SumKind::Zeta, &idx("2"), &c).unwrap();
        let exact = Float::with_val(c.prec(), pi(&c).square()) / 6u32;
        assert!(diff(&z2.value, &exact) <= z2.tail_bound);
        assert!(z2.certified_digits(40) >= 4);
        let t3 = multisum_eval(SumKind::T, &idx("3"), &c).unwrap();
        let exact = zeta_int(3, &c).unwrap().value * Rational::from((7, 8));
        assert!(diff(&t3.value, &exact) <= t3.tail_bound);
        let mu3 = multisum_eval(SumKind::Mu, &idx("3"), &c).unwrap();
        assert_eq!(mu3.value, t3.value);
        let mubar3 = multisum_eval(SumKind::MuBar, &idx("3"), &c).unwrap();
        let exact = zeta_int(3, &c).unwrap().value / 8u32;
        assert!(diff(&mubar3.value, &exact) <= mubar3.tail_bound);
    }

    #[test]
    fn mixed_value_examples() {
        let c = ctx(15);
        let g1 = multisum_eval(SumKind::Mu, &idx("3,1"), &c).unwrap();
        assert!((g1.value.to_f64() - 0.16227).abs() < 1e-5, "{}", g1.value);
        let mb = multisum_eval(SumKind::MuBar, &idx("2,1"), &c).unwrap();
        let p = pi(&c);
        let exact = zeta_int(3, &c).unwrap().value * Rational::from((7, 8))
            - Float::with_val(c.prec(), p.square()) * log2(&c) / 8u32;
        assert!(diff(&mb.value, &exact) <= mb.tail_bound);
        assert!((exact.to_f64() - 0.196663732282505).abs() < 1e-12);
    }

    #[test]
    fn divergent_indices_are_rejected() {
        let c = ctx(10);
        assert!(matches!(
            multisum_eval(SumKind::Zeta, &idx("1,2"), &c),
            Err(Error::NotAdmissible(_))
        ));
        assert!(multisum_eval(SumKind::Mu, &idx("1"), &c).is_err());
    }

    #[test]
    fn numerical_duality_up_to_weight_6() {
        let c = ctx(15);
        for i in admissible_indices(6) {
            let d = dual_index(&i).unwrap();
            let a = multisum_eval(SumKind::Zeta, &i, &c).unwrap();
            let b = multisum_eval(SumKind::Zeta, &d, &c).unwrap();
            let budget = Float::with_val(ERR_PREC, &a.tail_bound + &b.tail_bound);
            assert!(diff(&a.value, &b.value) <= budget, "{i} vs {d}");
        }
    }

    #[test]
    fn parity_decomposition() {
        let c = ctx(15);
        for s in ["2,1", "2,2", "3,1", "3,2"] {
            let i = idx(s);
            let z = multisum_eval(SumKind::Zeta, &i, &c).unwrap();
            let t = multisum_eval(SumKind::T, &i, &c).unwrap();
            let mu = multisum_eval(SumKind::Mu, &i, &c).unwrap();
            let mb = multisum_eval(SumKind::MuBar, &i, &c).unwrap();
            let scale = Float::with_val(c.prec(), 2).pow(-(i.weight() as i32));
            let lhs = Float::with_val(c.prec(), &z.value * (1 - scale));
            let rhs = Float::with_val(c.prec(), &t.value + &mu.value) + &mb.value;
            let budget = combined_budget(&[&z.tail_bound, &t.tail_bound, &mu.tail_bound, &mb.tail_bound], &c);
            assert!(diff(&lhs, &rhs) <= budget, "{s}");
        }
    }

    #[test]
    fn repetition_closed_forms_match_direct_sums() {
        let c = ctx(15);
        for n in 1..=3u32 {
            for fam in [ClosedFamily::Zeta2Rep, ClosedFamily::T2Rep] {
                let (kind, i) = fam.target(n).unwrap();
                let direct = multisum_eval(kind, &i, &c).unwrap();
                let closed = closed_form(fam, n, &c).unwrap();
                assert!(diff(&direct.value, &closed.value) <= direct.tail_bound, "{fam} {n}");
            }
        }
        for n in 1..=2u32 {
            for fam in [ClosedFamily::Zeta4Rep, ClosedFamily::T4Rep] {
                let (kind, i) = fam.target(n).unwrap();
                let direct = multisum_eval(kind, &i, &c).unwrap();
                let closed = closed_form(fam, n, &c).unwrap();
                assert!(diff(&direct.value, &closed.value) <= direct.tail_bound, "{fam} {n}");
            }
        }
        assert!(closed_form(ClosedFamily::T2Rep, 0, &c).is_err());
        let t2 = closed_form(ClosedFamily::T2Rep, 1, &c).unwrap();
        let exact = Float::with_val(c.prec(), pi(&c).square()) / 8u32;
        assert!(diff(&t2.value, &exact) < 1e-20);
    }

    #[test]
    fn i_closed_reproduces_printed_values() {
        let pi = || ClosedExpr::Pi;
        let l = || ClosedExpr::Log2;
        let z = ClosedExpr::Zeta;
        let r = ClosedExpr::rat;
        let printed = [
            r(1, 2) * pi() * l(),
            r(1, 4) * pi().pow(2) * l() - r(7, 8) * z(3),
            r(1, 8) * pi().pow(3) * l() - r(9, 16) * pi() * z(3),
            r(1, 16) * pi().pow(4) * l() - r(9, 16) * pi().pow(2) * z(3) + r(93, 32) * z(5),
            r(1, 32) * pi().pow(5) * l() - r(15, 32) * pi().pow(3) * z(3) + r(225, 64) * pi() * z(5),
            r(1, 64) * pi().pow(6) * l() - r(45, 128) * pi().pow(4) * z(3)
                + r(675, 128) * pi().pow(2) * z(5)
                - r(5715, 256) * z(7),
        ];
        for (n, p) in (1..=6u32).zip(printed.iter()) {
            let e = i_closed_expr(n).unwrap();
            assert!(e.same_as(p), "I({n}): {}", e.normal_form().unwrap());
        }
        assert!(i_closed_expr(0).is_err());
    }

    #[test]
    fn three_two_families_match_printed_values() {
        let pi = || ClosedExpr::Pi;
        let z = ClosedExpr::Zeta;
        let r = ClosedExpr::rat;
        let t0 = closed_form_expr(ClosedFamily::T32Rep, 0).unwrap();
        assert!(t0.same_as(&(r(7, 8) * z(3))));
        let z0 = closed_form_expr(ClosedFamily::Zeta32Rep, 0).unwrap();
        assert!(z0.same_as(&z(3)));
        let t1 = closed_form_expr(ClosedFamily::T32Rep, 1).unwrap();
        assert!(t1.same_as(&(r(1, 64) * (r(3, 1) * pi().pow(2) * z(3) - r(31, 1) * z(5)))));
        let z1 = closed_form_expr(ClosedFamily::Zeta32Rep, 1).unwrap();
        assert!(z1.same_as(&(r(1, 2) * (pi().pow(2) * z(3) - r(11, 1) * z(5)))));
        let t2 = closed_form_expr(ClosedFamily::T32Rep, 2).unwrap();
        let printed = r(1, 2048) * (r(2, 1) * pi().pow(4) * z(3) - r(60, 1) * pi().pow(2) * z(5) + r(381, 1) * z(7));
        assert!(t2.same_as(&printed));
    }

    #[test]
    fn three_two_closed_forms_match_direct_sums() {
        let c = ctx(15);
        for n in 0..=2u32 {
            for fam in [ClosedFamily::Zeta32Rep, ClosedFamily::T32Rep] {
                let (kind, i) = fam.target(n).unwrap();
                let direct = multisum_eval(kind, &i, &c).unwrap();
                let closed = closed_form(fam, n, &c).unwrap();
                let budget = combined_budget(&[&direct.tail_bound, &closed.error], &c);
                assert!(diff(&direct.value, &closed.value) <= budget, "{fam} {n}");
            }
        }
    }

    #[test]
    fn mixed_value_duality() {
        // 2^n mu(r+2, {1}^n) = 2^r mu(n+2, {1}^r)
        let c = ctx(15);
        for n in 0..=3usize {
            for r in 0..=3usize {
                let a = multisum_eval(SumKind::Mu, &MultiIndex::head_repeat(r as u32 + 2, 1, n).unwrap(), &c).unwrap();
                let b = multisum_eval(SumKind::Mu, &MultiIndex::head_repeat(n as u32 + 2, 1, r).unwrap(), &c).unwrap();
                let lhs = Float::with_val(c.prec(), &a.value) << n as u32;
                let rhs = Float::with_val(c.prec(), &b.value) << r as u32;
                let budget = Float::with_val(ERR_PREC, &a.tail_bound * (1u64 << n))
                    + Float::with_val(ERR_PREC, &b.tail_bound * (1u64 << r));
                assert!(diff(&lhs, &rhs) <= budget, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn mixed_pair_sums() {
        let c = ctx(15);
        let p = pi(&c);
        let a = multisum_eval(SumKind::Mu, &idx("2,2"), &c).unwrap();
        let b = multisum_eval(SumKind::MuBar, &idx("2,2"), &c).unwrap();
        let t22 = multisum_eval(SumKind::T, &idx("2,2"), &c).unwrap();
        let sum = Float::with_val(c.prec(), &a.value + &b.value);
        let two_t = Float::with_val(c.prec(), &t22.value * 2u32);
        let budget = combined_budget(&[&a.tail_bound, &b.tail_bound, &t22.tail_bound, &t22.tail_bound], &c);
        assert!(diff(&sum, &two_t) <= budget);

        let a = multisum_eval(SumKind::Mu, &idx("4,4"), &c).unwrap();
        let b = multisum_eval(SumKind::MuBar, &idx("4,4"), &c).unwrap();
        let sum = Float::with_val(c.prec(), &a.value + &b.value);
        let exact = Float::with_val(c.prec(), (&p).pow(8u32)) / 138240u32;
        let budget = combined_budget(&[&a.tail_bound, &b.tail_bound], &c);
        assert!(diff(&sum, &exact) <= budget);
    }

    #[test]
    fn tail_bound_soundness_n_vs_4n() {
        let c = ctx(15);
        let cases = [
            (SumKind::Zeta, "2"),
            (SumKind::Zeta, "2,1"),
            (SumKind::Zeta, "2,1,1"),
            (SumKind::T, "2,1"),
            (SumKind::Mu, "3,1"),
            (SumKind::Mu, "2,1,1,1"),
            (SumKind::MuBar, "2,2"),
            (SumKind::Zeta, "3,2,2"),
        ];
        for (kind, s) in cases {
            for n in [500u64, 2000, 8000] {
                let a = multisum_eval_n(kind, &idx(s), n, &c).unwrap();
                let b = multisum_eval_n(kind, &idx(s), 4 * n, &c).unwrap();
                assert!(diff(&a.value, &b.value) <= a.tail_bound, "{kind}({s}) N={n}");
            }
        }
    }

    #[test]
    fn euler_goldbach_certifies_three_digits() {
        let c = ctx(15);
        let v = multisum_eval(SumKind::Zeta, &idx("2,1"), &c).unwrap();
        assert_eq!(v.n_truncation, 100_000);
        assert!(v.certified_digits(40) >= 3);
        let z3 = zeta_int(3, &c).unwrap().value;
        assert!(diff(&v.value, &z3) <= v.tail_bound);
    }
}
