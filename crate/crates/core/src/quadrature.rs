//! Tanh-sinh quadrature and the catalog of named integrals.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::context::{require_finite, rounding_error, Estimate, PrecisionContext, ERR_PREC};
use crate::error::{Error, Result};
use crate::special::pi;

/// A quadrature node on `(a, b)` with both endpoint distances kept exactly,
/// so integrands can avoid cancellation near the ends.
#[derive(Debug, Clone)]
pub struct Abscissa {
    pub x: Float,
    pub dist_a: Float,
    pub dist_b: Float,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult {
    pub value: Float,
    pub error_estimate: Float,
    pub levels_used: u32,
}

impl QuadratureResult {
    pub fn to_estimate(&self) -> Estimate {
        Estimate::new(self.value.clone(), self.error_estimate.clone())
    }
}

const MIN_LEVEL: u32 = 4;

// Nodes for t > 0: weight (pi/2) cosh t / cosh^2(y) and complement
// s = 1 - tanh(y), where y = (pi/2) sinh t.
struct Node {
    weight: Float,
    s: Float,
}

type NodeTable = Arc<Vec<Node>>;

fn node_cache() -> &'static RwLock<HashMap<(u32, u32), NodeTable>> {
    static CACHE: OnceLock<RwLock<HashMap<(u32, u32), NodeTable>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Largest `t` whose node still matters at `prec` bits.
fn t_max(prec: u32) -> f64 {
    let y_max = f64::from(prec) * std::f64::consts::LN_2 + 3.0;
    (2.0 * y_max / std::f64::consts::PI).asinh()
}

fn build_level(prec: u32, level: u32, half_pi: &Float) -> Vec<Node> {
    let tm = t_max(prec);
    let h = 0.5f64.powi(level as i32);
    let (start, step) = if level == 0 { (1u64, 1u64) } else { (1, 2) };
    let mut nodes = Vec::new();
    let mut j = start;
    while (j as f64) * h <= tm {
        let t = Float::with_val(prec, j) >> level;
        let (sh, ch) = t.sinh_cosh(Float::new(prec));
        let y = Float::with_val(prec, half_pi * &sh);
        let e = Float::with_val(prec, &y * 2u32).exp();
        let e1 = Float::with_val(prec, &e + 1u32);
        let s = Float::with_val(prec, 2u32 / &e1);
        let weight = Float::with_val(prec, half_pi * &ch) * 4u32 * &e / e1.square();
        nodes.push(Node { weight, s });
        j += step;
    }
    nodes
}

fn level_nodes(prec: u32, level: u32, half_pi: &Float) -> NodeTable {
    if let Some(t) = node_cache().read().unwrap().get(&(prec, level)) {
        return Arc::clone(t);
    }
    let table = Arc::new(build_level(prec, level, half_pi));
    node_cache()
        .write()
        .unwrap()
        .entry((prec, level))
        .or_insert(table)
        .clone()
}

/// Working precision used for nodes and integrand values.
pub fn working_prec(ctx: &PrecisionContext) -> u32 {
    ctx.prec() + 24
}

fn work_ctx(ctx: &PrecisionContext) -> PrecisionContext {
    ctx.with_digits(ctx.digits() + 8).expect("larger digits stay valid")
}

/// Integrate `f` over `(a, b)`.
///
/// Levels halve the step until two successive estimates agree to
/// `10^-(digits+2)` (relative to `max(1, |I|)`), starting from level 4.
/// The reported error is the last difference plus a rounding floor.
pub fn tanh_sinh<F>(f: F, a: &Float, b: &Float, ctx: &PrecisionContext) -> Result<QuadratureResult>
where
    F: Fn(&Abscissa) -> Float,
{
    let wctx = work_ctx(ctx);
    let prec = wctx.prec();
    let half_pi = Float::with_val(prec, pi(&wctx) / 2u32);
    let width = Float::with_val(prec, b - a);
    if width.is_nan() || width <= 0 {
        return Err(Error::Domain("empty integration interval".into()));
    }
    let half = Float::with_val(prec, &width / 2u32);
    let tol = Float::with_val(ERR_PREC, 10).pow(-(ctx.digits() as i32 + 2));

    let eval = |x: Float, dist_a: Float, dist_b: Float| -> Result<Float> {
        require_finite(f(&Abscissa { x, dist_a, dist_b }), "integrand")
    };

    let mut raw = Float::with_val(prec, 0);
    let mut raw_abs = Float::with_val(ERR_PREC, 0);
    let mut prev: Option<Float> = None;
    let mut last_diff = Float::with_val(ERR_PREC, f64::INFINITY);
    for level in 0..=ctx.quad_max_level() {
        if level == 0 {
            let mid = Float::with_val(prec, a + &half);
            let v = eval(mid, half.clone(), half.clone())?;
            let c = Float::with_val(prec, &v * &half_pi);
            raw_abs += Float::with_val(ERR_PREC, c.abs_ref());
            raw += c;
        }
        for node in level_nodes(prec, level, &half_pi).iter() {
            let d = Float::with_val(prec, &half * &node.s);
            let far = Float::with_val(prec, &width - &d);
            let right = eval(Float::with_val(prec, b - &d), far.clone(), d.clone())?;
            let left = eval(Float::with_val(prec, a + &d), d, far)?;
            let c = Float::with_val(prec, &right + &left) * &node.weight;
            raw_abs += Float::with_val(ERR_PREC, c.abs_ref());
            raw += c;
        }
        let estimate = Float::with_val(prec, &raw * &half) >> level;
        if let Some(p) = &prev {
            last_diff = Float::with_val(ERR_PREC, &estimate - p).abs();
            let scale = Float::with_val(ERR_PREC, estimate.abs_ref()).max(&Float::with_val(ERR_PREC, 1));
            if level >= MIN_LEVEL && last_diff <= Float::with_val(ERR_PREC, &tol * &scale) {
                let floor = Float::with_val(ERR_PREC, &raw_abs * &half) >> (level + prec - 12);
                let value = Float::with_val(ctx.prec(), &estimate);
                let error_estimate =
                    Float::with_val(ERR_PREC, &last_diff + &floor) + rounding_error(&value);
                return Ok(QuadratureResult {
                    value,
                    error_estimate,
                    levels_used: level,
                });
            }
        }
        prev = Some(estimate);
    }
    Err(Error::NoConvergence {
        levels: ctx.quad_max_level(),
        estimate: format!("{:.3e}", last_diff.to_f64()),
    })
}

/// [`tanh_sinh`] for integrands that only need the abscissa.
pub fn tanh_sinh_fn<F>(f: F, a: &Float, b: &Float, ctx: &PrecisionContext) -> Result<QuadratureResult>
where
    F: Fn(&Float) -> Float,
{
    tanh_sinh(|p| f(&p.x), a, b, ctx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substitution {
    None,
    /// `x = sin y`, integrating over `(0, pi/2)`.
    XEqSinY,
}

#[derive(Debug, Clone)]
pub struct IntegrandSpec {
    pub id: &'static str,
    pub params: &'static [&'static str],
    pub description: &'static str,
    pub substitution: Substitution,
    pub endpoint_singularities: &'static str,
}

macro_rules! spec {
    ($id:expr, [$($p:expr),*], $desc:expr, $sub:ident, $sing:expr) => {
        IntegrandSpec {
            id: $id,
            params: &[$($p),*],
            description: $desc,
            substitution: Substitution::$sub,
            endpoint_singularities: $sing,
        }
    };
}

static CATALOG: &[IntegrandSpec] = &[
    spec!("basel_arcsin", [], "int_0^1 arcsin x / sqrt(1-x^2) dx", XEqSinY, "none after substitution"),
    spec!("basel_arcsin2_even", [], "(2/pi) int_0^1 arcsin^2 x / 2! / sqrt(1-x^2) dx", XEqSinY, "none after substitution"),
    spec!("thm1_zeta3_odd", [], "int_0^1 arcsin x arccos x / x dx", None, "sqrt(1-x) at 1"),
    spec!("thm1_zeta3_even", [], "(2/pi) int_0^1 arcsin^2 x / 2! * arccos x / x dx", None, "sqrt(1-x) at 1"),
    spec!("thm2_catalan", [], "int_0^1 arcsinh x / sqrt(1-x^2) dx", XEqSinY, "none after substitution"),
    spec!("thm2_pi3_32", [], "int_0^1 arcsinh x arccos x / x dx", None, "sqrt(1-x) at 1"),
    spec!("thm3_arctan_arccot", [], "int_0^1 arctan x arccot x / x dx", None, "none"),
    spec!("thm3_A1", [], "int_0^1 arctan x / x dx", None, "none"),
    spec!("thm3_A2", [], "int_0^1 arctan^2 x / x dx", None, "none"),
    spec!("thm5_t", ["n"], "int_0^1 arcsin^{2n+1} x / (2n+1)! * arccos x / x dx", XEqSinY, "none after substitution"),
    spec!("thm5_zeta", ["n"], "(2/pi) int_0^1 arcsin^{2n+2} x / (2n+2)! * arccos x / x dx", XEqSinY, "none after substitution"),
    spec!("I_n", ["n"], "int_0^1 arcsin^n x / x dx = int_0^{pi/2} y^n cot y dy", XEqSinY, "none after substitution"),
    spec!("log_sine", ["n"], "-n int_0^{pi/2} y^{n-1} log(sin y) dy", None, "log y at 0"),
    spec!("wallis", ["n"], "int_0^{pi/2} sin^n y dy", None, "none"),
    spec!("w_moment_odd", ["k"], "int_0^1 u^{2k+1} / sqrt(1-u^2) du", None, "(1-u)^{-1/2} at 1"),
    spec!("w_moment_even", ["k"], "int_0^1 u^{2k} / sqrt(1-u^2) du", None, "(1-u)^{-1/2} at 1"),
    spec!("logpow_xn", ["n", "r"], "int_0^1 x^n log^r x / (r! x) dx", None, "log^r x at 0"),
    spec!("arctanh_logr", ["r"], "int_0^1 arctanh x log^r x / (r! x) dx", None, "log at 0 and 1"),
    spec!("arctan_logr", ["r"], "int_0^1 arctan x log^r x / (r! x) dx", None, "log^r x at 0"),
    spec!("mu_iterated", ["n"], "int_0^1 arctanh^{n+1} x / (n+1)! dx / x", None, "log^{n+1} at 1"),
    spec!("mu_general", ["r", "n"], "(-1)^r int_0^1 arctanh^{n+1} x / (n+1)! * log^r x / (r! x) dx", None, "log powers at 0 and 1"),
    spec!("arcsin_log1", [], "-int_0^1 arcsin x log x / x dx", None, "log x at 0"),
    spec!("arcsin_log2_conjecture", [], "int_0^1 arcsin x log^2 x / (2! x) dx", None, "log^2 x at 0"),
    spec!("ablinger_logr", ["r"], "2 int_0^{1/2} arcsin z log^r(1/(2z)) / (r! z) dz", None, "log^r z at 0"),
];

pub fn catalog() -> &'static [IntegrandSpec] {
    CATALOG
}

pub fn spec(id: &str) -> Option<&'static IntegrandSpec> {
    CATALOG.iter().find(|s| s.id == id)
}

// Helpers for integrands on (0, 1) that stay accurate next to x = 1.
fn acos01(p: &Abscissa) -> Float {
    let prec = p.x.prec();
    let half = Float::with_val(prec, &p.dist_b / 2u32);
    Float::with_val(prec, half.sqrt().asin()) * 2u32
}

fn asin01(p: &Abscissa, half_pi: &Float) -> Float {
    if p.x < 0.5 {
        Float::with_val(p.x.prec(), p.x.asin_ref())
    } else {
        Float::with_val(p.x.prec(), half_pi - acos01(p))
    }
}

fn atanh01(p: &Abscissa) -> Float {
    let prec = p.x.prec();
    if p.x < 0.5 {
        Float::with_val(prec, p.x.atanh_ref())
    } else {
        let r = Float::with_val(prec, 1 + &p.x) / &p.dist_b;
        r.ln() / 2u32
    }
}

fn ln01(p: &Abscissa) -> Float {
    let prec = p.x.prec();
    if p.x < 0.5 {
        Float::with_val(prec, p.x.ln_ref())
    } else {
        Float::with_val(prec, -&p.dist_b).ln_1p()
    }
}

// Helpers on (0, pi/2).
fn cot_half_pi(p: &Abscissa) -> Float {
    let prec = p.x.prec();
    let c = Float::with_val(prec, p.dist_b.sin_ref());
    let s = if p.dist_a < 0.5 {
        Float::with_val(prec, p.dist_a.sin_ref())
    } else {
        Float::with_val(prec, p.dist_b.cos_ref())
    };
    c / s
}

fn ln_sin_half_pi(p: &Abscissa) -> Float {
    let prec = p.x.prec();
    if p.dist_a < 0.5 {
        Float::with_val(prec, p.dist_a.sin_ref()).ln()
    } else {
        let h = Float::with_val(prec, &p.dist_b / 2u32).sin();
        Float::with_val(prec, -(h.square() * 2u32)).ln_1p()
    }
}

fn fact(n: u32, prec: u32) -> Float {
    Float::with_val(prec, Integer::from(Integer::factorial(n)))
}

fn check_params(id: &str, params: &[u32], arity: usize) -> Result<()> {
    if params.len() != arity {
        return Err(Error::BadParams {
            id: id.to_string(),
            reason: format!("expected {arity} parameter(s), got {}", params.len()),
        });
    }
    Ok(())
}

fn bad(id: &str, reason: &str) -> Error {
    Error::BadParams {
        id: id.to_string(),
        reason: reason.to_string(),
    }
}

/// Evaluate a catalog integral.
pub fn integral_by_id(id: &str, params: &[u32], ctx: &PrecisionContext) -> Result<QuadratureResult> {
    let spec = spec(id).ok_or_else(|| Error::UnknownIntegral(id.to_string()))?;
    check_params(id, params, spec.params.len())?;
    let wctx = work_ctx(ctx);
    let prec = wctx.prec();
    let pi_w = pi(&wctx);
    let half_pi = Float::with_val(prec, &pi_w / 2u32);
    let two_over_pi = Float::with_val(prec, 2u32 / &pi_w);
    let zero = Float::with_val(prec, 0);
    let one = Float::with_val(prec, 1);
    let p0 = params.first().copied().unwrap_or(0);
    let p1 = params.get(1).copied().unwrap_or(0);

    let unit = |f: &dyn Fn(&Abscissa) -> Float| tanh_sinh(f, &zero, &one, ctx);
    let quarter = |f: &dyn Fn(&Abscissa) -> Float| tanh_sinh(f, &zero, &half_pi, ctx);

    match id {
        "basel_arcsin" => quarter(&|p| p.x.clone()),
        "basel_arcsin2_even" => quarter(&|p| Float::with_val(prec, p.x.square_ref()) * &two_over_pi / 2u32),
        "thm1_zeta3_odd" => unit(&|p| asin01(p, &half_pi) * acos01(p) / &p.x),
        "thm1_zeta3_even" => unit(&|p| {
            asin01(p, &half_pi).square() / 2u32 * acos01(p) / &p.x * &two_over_pi
        }),
        "thm2_catalan" => quarter(&|p| Float::with_val(prec, p.x.sin_ref()).asinh()),
        "thm2_pi3_32" => unit(&|p| Float::with_val(prec, p.x.asinh_ref()) * acos01(p) / &p.x),
        "thm3_arctan_arccot" => unit(&|p| {
            let at = Float::with_val(prec, p.x.atan_ref());
            let acot = Float::with_val(prec, &half_pi - &at);
            at * acot / &p.x
        }),
        "thm3_A1" => unit(&|p| Float::with_val(prec, p.x.atan_ref()) / &p.x),
        "thm3_A2" => unit(&|p| Float::with_val(prec, p.x.atan_ref()).square() / &p.x),
        "thm5_t" | "thm5_zeta" => {
            let m = if id == "thm5_t" { 2 * p0 + 1 } else { 2 * p0 + 2 };
            let scale = if id == "thm5_t" {
                Float::with_val(prec, 1) / fact(m, prec)
            } else {
                Float::with_val(prec, &two_over_pi / fact(m, prec))
            };
            quarter(&|p| {
                Float::with_val(prec, (&p.x).pow(m)) * &p.dist_b * cot_half_pi(p) * &scale
            })
        }
        "I_n" => {
            if p0 == 0 {
                return Err(bad(id, "n >= 1"));
            }
            quarter(&|p| Float::with_val(prec, (&p.x).pow(p0)) * cot_half_pi(p))
        }
        "log_sine" => {
            if p0 == 0 {
                return Err(bad(id, "n >= 1"));
            }
            quarter(&|p| {
                -(Float::with_val(prec, (&p.x).pow(p0 - 1)) * ln_sin_half_pi(p) * p0)
            })
        }
        "wallis" => quarter(&|p| Float::with_val(prec, p.x.sin_ref()).pow(p0)),
        "w_moment_odd" | "w_moment_even" => {
            let e = if id == "w_moment_odd" { 2 * p0 + 1 } else { 2 * p0 };
            unit(&|p| {
                let root = Float::with_val(prec, &p.dist_b * Float::with_val(prec, 1 + &p.x)).sqrt();
                Float::with_val(prec, (&p.x).pow(e)) / root
            })
        }
        "logpow_xn" => {
            if p0 == 0 {
                return Err(bad(id, "n >= 1"));
            }
            let rf = fact(p1, prec);
            unit(&|p| Float::with_val(prec, (&p.x).pow(p0 - 1)) * ln01(p).pow(p1) / &rf)
        }
        "arctanh_logr" => {
            let rf = fact(p0, prec);
            unit(&|p| atanh01(p) * ln01(p).pow(p0) / &rf / &p.x)
        }
        "arctan_logr" => {
            let rf = fact(p0, prec);
            unit(&|p| Float::with_val(prec, p.x.atan_ref()) * ln01(p).pow(p0) / &rf / &p.x)
        }
        "mu_iterated" => {
            let nf = fact(p0 + 1, prec);
            unit(&|p| atanh01(p).pow(p0 + 1) / &nf / &p.x)
        }
        "mu_general" => {
            let (r, n) = (p0, p1);
            let mut scale = Float::with_val(prec, 1) / (fact(n + 1, prec) * fact(r, prec));
            if r % 2 == 1 {
                scale = -scale;
            }
            unit(&|p| atanh01(p).pow(n + 1) * ln01(p).pow(r) * &scale / &p.x)
        }
        "arcsin_log1" => unit(&|p| -(asin01(p, &half_pi) * ln01(p) / &p.x)),
        "arcsin_log2_conjecture" => unit(&|p| asin01(p, &half_pi) * ln01(p).square() / 2u32 / &p.x),
        "ablinger_logr" => {
            let r = p0;
            let rf = fact(r, prec);
            let upper = Float::with_val(prec, 0.5);
            tanh_sinh(
                |p| {
                    // log(1/(2z)) = -log(1 - 2 dist_b) near the upper end
                    let l = if p.dist_b < 0.25 {
                        -Float::with_val(prec, -(Float::with_val(prec, &p.dist_b * 2u32))).ln_1p()
                    } else {
                        -Float::with_val(prec, &p.x * 2u32).ln()
                    };
                    Float::with_val(prec, p.x.asin_ref()) * l.pow(r) * 2u32 / &rf / &p.x
                },
                &zero,
                &upper,
                ctx,
            )
        }
        _ => Err(Error::UnknownIntegral(id.to_string())),
    }
}

/// `-n int_0^{pi/2} y^{n-1} log(sin y) dy`, the log-sine form of `I(n)`.
pub fn log_sine_check(n: u32, ctx: &PrecisionContext) -> Result<QuadratureResult> {
    integral_by_id("log_sine", &[n], ctx)
}
