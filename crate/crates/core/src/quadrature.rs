//! Numerical integration tolerant of integrable endpoint singularities, and
//! bisection root finding.
//!
//! Two 1D rules are available: tanh-sinh (double exponential) and adaptive
//! Gauss–Kronrod 7/15 with the QUADPACK error heuristic. Endpoints flagged as
//! singular are first removed by a cosine change of variables, which turns an
//! inverse-square-root blow-up into a smooth integrand; the Auto method then
//! uses Gauss–Kronrod on it. Iterated integrals over ordered-limit regions
//! apply the same 1D machinery level by level.
//!
//! Everything is sequential with a fixed summation order, so results are
//! bit-identical between runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{Interval, NestedRegion, RegionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMethod {
    DoubleExponential,
    AdaptiveSubdivision,
    /// Cosine substitution plus Gauss–Kronrod when an endpoint is flagged,
    /// double exponential otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub method: QuadratureMethod,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Refinement levels for the double-exponential rule (step 2^-level).
    pub max_levels: u32,
    /// Subinterval budget of the adaptive Gauss–Kronrod rule, per 1D call.
    pub max_subintervals: usize,
    /// Absolute amount trimmed from each end before integrating.
    pub endpoint_inset: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::one_dim()
    }
}

impl QuadratureConfig {
    pub fn one_dim() -> Self {
        Self {
            method: QuadratureMethod::Auto,
            rel_tol: 1e-9,
            abs_tol: 1e-15,
            max_levels: 12,
            max_subintervals: 2000,
            endpoint_inset: 0.0,
        }
    }

    pub fn multi_dim() -> Self {
        Self {
            rel_tol: 1e-6,
            ..Self::one_dim()
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_method(mut self, method: QuadratureMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Usage(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.abs_tol < 0.0 {
            return Err(Error::Usage("abs_tol must be non-negative".into()));
        }
        if self.max_levels < 3 {
            return Err(Error::Usage(format!("max_levels must be at least 3, got {}", self.max_levels)));
        }
        if self.max_subintervals == 0 {
            return Err(Error::Usage("max_subintervals must be positive".into()));
        }
        if self.endpoint_inset < 0.0 {
            return Err(Error::Usage("endpoint_inset must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub err_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl IntegralResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            err_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Sum of results over disjoint pieces.
    pub fn combine(parts: &[IntegralResult]) -> Self {
        parts.iter().fold(Self::zero(), |acc, p| Self {
            value: acc.value + p.value,
            err_estimate: acc.err_estimate + p.err_estimate,
            evaluations: acc.evaluations + p.evaluations,
            converged: acc.converged && p.converged,
        })
    }

    pub fn scaled(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            err_estimate: self.err_estimate * s.abs(),
            ..self
        }
    }
}

#[derive(Debug, Default)]
struct Stats {
    evaluations: u64,
    converged: bool,
}

/// A value together with an error already incurred in producing it (inner
/// levels of an iterated integral). Carried errors are integrated alongside.
type Carried = (f64, f64);

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    carried: f64,
}

fn check_finite(v: Carried, x: f64) -> Result<Carried> {
    if v.0.is_finite() && v.1.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("integrand is not finite at {x:e}")))
    }
}

fn qk15(
    f: &mut dyn FnMut(f64) -> Result<Carried>,
    a: f64,
    b: f64,
    stats: &mut Stats,
) -> Result<Segment> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<Carried> {
        stats.evaluations += 1;
        check_finite(f(x)?, x)
    };
    let (fc, cc) = eval(centr)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut carried = cc * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let (f1, c1) = eval(centr - absc)?;
        let (f2, c2) = eval(centr + absc)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
        carried += WGK[jtw] * (c1 + c2);
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let (f1, c1) = eval(centr - absc)?;
        let (f2, c2) = eval(centr + absc)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
        carried += WGK[jtwm1] * (c1 + c2);
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let h = hlgth.abs();
    let value = resk * hlgth;
    resabs *= h;
    resasc *= h;
    let mut err = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment {
        a,
        b,
        value,
        err,
        carried: carried.abs() * h,
    })
}

fn gauss_kronrod_adaptive(
    f: &mut dyn FnMut(f64) -> Result<Carried>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
    stats: &mut Stats,
) -> Result<Carried> {
    let mut segs = vec![qk15(f, a, b, stats)?];
    // roundoff counters: bisection that no longer changes the value or shrinks the error
    let (mut stalled, mut grew) = (0, 0);
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let carried: f64 = segs.iter().map(|s| s.carried).sum();
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok((total, err + carried));
        }
        let worst = segs
            .iter()
            .enumerate()
            .fold(0, |best, (i, s)| if s.err > segs[best].err { i } else { best });
        let (sa, sb) = (segs[worst].a, segs[worst].b);
        let mid = 0.5 * (sa + sb);
        if segs.len() >= cfg.max_subintervals || mid <= sa || mid >= sb || stalled >= 6 || grew >= 20 {
            stats.converged = false;
            return Ok((total, err + carried));
        }
        let left = qk15(f, sa, mid, stats)?;
        let right = qk15(f, mid, sb, stats)?;
        let (parent_value, parent_err) = (segs[worst].value, segs[worst].err);
        let (value12, err12) = (left.value + right.value, left.err + right.err);
        if (parent_value - value12).abs() <= 1e-5 * value12.abs() && err12 >= 0.99 * parent_err {
            stalled += 1;
        }
        if segs.len() > 10 && err12 > parent_err {
            grew += 1;
        }
        segs[worst] = left;
        segs.insert(worst + 1, right);
    }
}

/// tanh-sinh on [a, b]. Nodes near an endpoint are formed from their distance
/// to that endpoint so the abscissae keep full relative precision.
fn double_exponential(
    f: &mut dyn FnMut(f64, f64) -> Result<Carried>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
    stats: &mut Stats,
) -> Result<Carried> {
    use std::f64::consts::FRAC_PI_2;
    const T_MAX: f64 = 4.0;
    let hw = 0.5 * (b - a);

    let mut node_sum = |t: f64, stats: &mut Stats| -> Result<Carried> {
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        let w = hw * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        if w == 0.0 {
            return Ok((0.0, 0.0));
        }
        // distance to the nearer endpoint: hw(1 − tanh|u|) = 2hw/(e^{2|u|}+1)
        let delta = 2.0 * hw / ((2.0 * u.abs()).exp() + 1.0);
        let x = if u >= 0.0 { b - delta } else { a + delta };
        if x <= a || x >= b {
            return Ok((0.0, 0.0));
        }
        stats.evaluations += 1;
        // weight relative to its mean over t ∈ [−T_MAX, T_MAX]
        let rel_w = w * 2.0 * T_MAX / (b - a);
        let (v, cv) = check_finite(f(x, rel_w)?, x)?;
        Ok((w * v, w * cv.abs()))
    };

    let mut h = 1.0;
    let (v0, c0) = node_sum(0.0, stats)?;
    let mut sum = v0;
    let mut carried = c0;
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        let (p, pc) = node_sum(t, stats)?;
        let (m, mc) = node_sum(-t, stats)?;
        sum += p + m;
        carried += pc + mc;
        k += 1;
    }
    let mut estimate = sum * h;
    let mut prev_err = f64::INFINITY;
    // deeper levels can be worse once nodes crowd an endpoint, so keep the best
    let mut best = (estimate, f64::INFINITY);
    for level in 1..=cfg.max_levels {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            let (p, pc) = node_sum(t, stats)?;
            let (m, mc) = node_sum(-t, stats)?;
            sum += p + m;
            carried += pc + mc;
            k += 2;
        }
        let next = sum * h;
        let err = (next - estimate).abs();
        estimate = next;
        if level >= 3 && err <= cfg.abs_tol.max(cfg.rel_tol * estimate.abs()) {
            return Ok((estimate, err + carried * h));
        }
        if err + carried * h < best.1 {
            best = (estimate, err + carried * h);
        }
        // refinement no longer helps: the integrand is noisy at this scale
        if level >= 5 && err > 0.5 * prev_err {
            break;
        }
        prev_err = err;
    }
    stats.converged = false;
    Ok(best)
}

/// Integrates over an interval, removing flagged endpoint singularities by a
/// cosine change of variables (1 − cos φ is evaluated as 2 sin²(φ/2)).
///
/// `f` receives the node and its quadrature weight relative to the mean
/// weight, so nested callers can relax tolerances where the weight is small.
fn integrate_interval_carried(
    f: &mut dyn FnMut(f64, f64) -> Result<Carried>,
    iv: &Interval,
    cfg: &QuadratureConfig,
    stats: &mut Stats,
) -> Result<Carried> {
    let a = iv.lo + cfg.endpoint_inset;
    let b = iv.hi - cfg.endpoint_inset;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Usage(format!("interval {iv} must be finite")));
    }
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let flagged = iv.lo_singular || iv.hi_singular;
    match cfg.method {
        QuadratureMethod::DoubleExponential => double_exponential(f, a, b, cfg, stats),
        QuadratureMethod::AdaptiveSubdivision if !flagged => gauss_kronrod_adaptive(&mut |x| f(x, 1.0), a, b, cfg, stats),
        QuadratureMethod::Auto if !flagged => double_exponential(f, a, b, cfg, stats),
        _ => {
            let len = b - a;
            let (lo_s, hi_s) = (iv.lo_singular, iv.hi_singular);
            let mut g = |phi: f64| -> Result<Carried> {
                let s2 = {
                    let s = (0.5 * phi).sin();
                    2.0 * s * s
                };
                let (x, jac) = if lo_s && hi_s {
                    let hw = 0.5 * len;
                    let x = if phi <= std::f64::consts::FRAC_PI_2 {
                        a + hw * s2
                    } else {
                        let s = (0.5 * (std::f64::consts::PI - phi)).sin();
                        b - hw * 2.0 * s * s
                    };
                    (x, hw * phi.sin())
                } else if lo_s {
                    (a + len * s2, len * phi.sin())
                } else {
                    (b - len * s2, len * phi.sin())
                };
                if jac == 0.0 || (x <= a && lo_s) || (x >= b && hi_s) {
                    return Ok((0.0, 0.0));
                }
                // sin φ averages 2/π over either substituted range
                let (v, c) = f(x, phi.sin() * std::f64::consts::FRAC_PI_2)?;
                Ok((v * jac, c * jac))
            };
            let upper = if lo_s && hi_s {
                std::f64::consts::PI
            } else {
                std::f64::consts::FRAC_PI_2
            };
            gauss_kronrod_adaptive(&mut g, 0.0, upper, cfg, stats)
        }
    }
}

fn finish(value: Carried, stats: Stats) -> IntegralResult {
    IntegralResult {
        value: value.0,
        err_estimate: value.1.abs(),
        evaluations: stats.evaluations,
        converged: stats.converged,
    }
}

/// ∫_a^b f with no endpoint information; integrable endpoint singularities
/// are tolerated by the double-exponential rule.
pub fn integrate_1d(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if !(a < b) {
        return Err(Error::Usage(format!("integration limits must satisfy a < b (got {a}, {b})")));
    }
    let mut stats = Stats {
        converged: true,
        ..Default::default()
    };
    let mut g = |x: f64, _: f64| Ok((f(x), 0.0));
    let v = integrate_interval_carried(&mut g, &Interval::new(a, b), cfg, &mut stats)?;
    Ok(finish(v, stats))
}

/// ∫ over an interval honouring its singular-endpoint flags.
pub fn integrate_interval(
    mut f: impl FnMut(f64) -> f64,
    iv: &Interval,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if !(iv.lo < iv.hi) {
        return Err(Error::Usage(format!("empty or reversed interval {iv}")));
    }
    let mut stats = Stats {
        converged: true,
        ..Default::default()
    };
    let mut g = |x: f64, _: f64| Ok((f(x), 0.0));
    let v = integrate_interval_carried(&mut g, iv, cfg, &mut stats)?;
    Ok(finish(v, stats))
}

/// Per-level settings of an iterated integral.
struct NestedPlan {
    /// Levels below this index are not integrated (the integrand is called there).
    depth: usize,
    cfgs: Vec<QuadratureConfig>,
}

fn nested_level(
    region: &NestedRegion,
    plan: &NestedPlan,
    level: usize,
    outermost: bool,
    weight: f64,
    vars: &mut Vec<f64>,
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    stats: &mut Stats,
) -> Result<Carried> {
    if level == plan.depth {
        stats.evaluations += 1;
        if plan.depth < region.dim() {
            return Ok((f(vars)?, 0.0));
        }
        let theta = region.to_params(vars);
        return Ok((f(&theta)?, 0.0));
    }
    let iv = region.levels[level].interval(vars);
    if !(iv.lo.is_finite() && iv.hi.is_finite()) {
        return Err(Error::Numerical(format!(
            "limit of `{}` is not finite",
            region.levels[level].name
        )));
    }
    if iv.hi <= iv.lo {
        return Ok((0.0, 0.0));
    }
    let mut inner_stats = Stats {
        converged: true,
        ..Default::default()
    };
    let mut g = |x: f64, w: f64| -> Result<Carried> {
        vars.push(x);
        let r = nested_level(region, plan, level + 1, false, weight * w, vars, f, &mut inner_stats);
        vars.pop();
        r
    };
    // Evaluations of this level's 1D rule are counted through the innermost calls.
    let mut own = Stats {
        converged: true,
        ..Default::default()
    };
    // an inner integral's error enters the total scaled by the outer weights
    let mut cfg = plan.cfgs[level];
    if !outermost && weight < 1.0 {
        let w = weight.max(f64::MIN_POSITIVE);
        cfg.abs_tol /= w;
        cfg.rel_tol = cfg.rel_tol.max((cfg.rel_tol / w).min(1e-2));
    }
    let v = integrate_interval_carried(&mut g, &iv, &cfg, &mut own)?;
    stats.evaluations += inner_stats.evaluations;
    // inner shortfalls are carried into the outer error and judged there
    if outermost {
        stats.converged &= own.converged;
    }
    Ok(v)
}

/// One 15-point rule per level on the substituted intervals: a rough value
/// used only to scale tolerances.
fn probe_cfg(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig {
        method: QuadratureMethod::AdaptiveSubdivision,
        max_subintervals: 1,
        ..*cfg
    }
}

/// Tolerances for levels `first..dim`. An inner level gets the absolute
/// tolerance ½·rel·|I₀|/M, where I₀ is a probe of the whole integral and M the
/// probed measure of the levels outside it, so inner errors integrate to at
/// most half the requested relative error.
fn plan_tolerances(
    region: &NestedRegion,
    first: usize,
    fixed: &[f64],
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    cfg: &QuadratureConfig,
) -> Result<NestedPlan> {
    let dim = region.dim();
    let probe = NestedPlan {
        depth: dim,
        cfgs: vec![probe_cfg(cfg); dim],
    };
    let mut stats = Stats::default();
    let mut vars = fixed.to_vec();
    let total = nested_level(region, &probe, first, true, 1.0, &mut vars, f, &mut stats)?.0.abs();
    let mut cfgs = vec![*cfg; dim];
    for level in first + 1..dim {
        let outer = NestedPlan {
            depth: level,
            cfgs: vec![probe_cfg(cfg); dim],
        };
        let mut vars = fixed.to_vec();
        let measure = nested_level(region, &outer, first, true, 1.0, &mut vars, &mut |_| Ok(1.0), &mut stats)?.0;
        if measure > 0.0 && total.is_finite() {
            cfgs[level].abs_tol = cfg.abs_tol.max(0.5 * cfg.rel_tol * total / measure);
        }
    }
    Ok(NestedPlan { depth: dim, cfgs })
}

/// Outer rule converged and total error (own plus carried) within twice the tolerance.
fn nested_finish(v: Carried, stats: Stats, cfg: &QuadratureConfig) -> IntegralResult {
    let ok = v.1.abs() <= 2.0 * cfg.abs_tol.max(cfg.rel_tol * v.0.abs());
    let mut r = finish(v, stats);
    r.converged &= ok;
    r
}

/// Iterated integral over an ordered-limit region, innermost variable first.
/// `f` receives family parameters (after the region's transform); the
/// constant Jacobian is applied to the result.
pub fn integrate_nested(
    mut f: impl FnMut(&[f64]) -> f64,
    region: &NestedRegion,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    try_integrate_nested(|t| Ok(f(t)), region, cfg)
}

pub fn try_integrate_nested(
    f: impl FnMut(&[f64]) -> Result<f64>,
    region: &NestedRegion,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    nested_from(f, region, &[], cfg)
}

/// Inner iterated integral with the leading `fixed.len()` integration
/// variables held at `fixed`; the region's Jacobian is applied.
pub fn try_integrate_nested_from(
    f: impl FnMut(&[f64]) -> Result<f64>,
    region: &NestedRegion,
    fixed: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    if fixed.is_empty() || fixed.len() >= region.dim() {
        return Err(Error::Usage(format!(
            "need between 1 and {} fixed variables, got {}",
            region.dim() - 1,
            fixed.len()
        )));
    }
    nested_from(f, region, fixed, cfg)
}

fn nested_from(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    region: &NestedRegion,
    fixed: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    let plan = plan_tolerances(region, fixed.len(), fixed, &mut f, cfg)?;
    let mut stats = Stats {
        converged: true,
        ..Default::default()
    };
    let mut vars = fixed.to_vec();
    let v = nested_level(region, &plan, fixed.len(), true, 1.0, &mut vars, &mut f, &mut stats)?;
    let outer = plan.cfgs[fixed.len()];
    Ok(nested_finish(v, stats, &outer).scaled(region.jacobian.abs()))
}

/// ∫ over any region; `f` receives family parameters.
pub fn integrate_region(
    mut f: impl FnMut(&[f64]) -> f64,
    region: &RegionSpec,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    try_integrate_region(&mut |t: &[f64]| Ok(f(t)), region, cfg)
}

pub fn try_integrate_region(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    region: &RegionSpec,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    match region {
        RegionSpec::Interval(iv) => {
            cfg.validate()?;
            let mut stats = Stats {
                converged: true,
                ..Default::default()
            };
            let mut g = |x: f64, _: f64| Ok((f(&[x])?, 0.0));
            let v = integrate_interval_carried(&mut g, iv, cfg, &mut stats)?;
            Ok(finish(v, stats))
        }
        RegionSpec::Nested(n) => try_integrate_nested(|t| f(t), n, cfg),
        RegionSpec::Union(parts) => {
            let results = parts
                .iter()
                .map(|p| try_integrate_region(f, p, cfg))
                .collect::<Result<Vec<_>>>()?;
            Ok(IntegralResult::combine(&results))
        }
        RegionSpec::Empty => Ok(IntegralResult::zero()),
        RegionSpec::Unspecified(why) => Err(Error::Usage(format!("cannot integrate: {why}"))),
    }
}

/// Bisection for a sign change of `g` in [a, b], stopping once the bracket is
/// no wider than `tol`.
pub fn find_root_bisect(mut g: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) || !(tol > 0.0) {
        return Err(Error::Usage(format!("bad bracket [{a}, {b}] or tolerance {tol}")));
    }
    let (mut lo, mut hi) = (a, b);
    let mut glo = g(lo);
    let ghi = g(hi);
    if !(glo.is_finite() && ghi.is_finite()) {
        return Err(Error::Numerical("function is not finite at the bracket ends".into()));
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::Usage(format!(
            "no sign change on [{a}, {b}] (g = {glo:e}, {ghi:e})"
        )));
    }
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if !gm.is_finite() {
            return Err(Error::Numerical(format!("function is not finite at {mid}")));
        }
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(lo + 0.5 * (hi - lo))
}

struct BracketWidth(f64);

impl roots::Convergency<f64> for BracketWidth {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() < self.0
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= 200
    }
}

/// Brent's method on a sign-changing bracket; fewer evaluations than bisection
/// for smooth `g`.
pub fn find_root_brent(mut g: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) || !(tol > 0.0) {
        return Err(Error::Usage(format!("bad bracket [{a}, {b}] or tolerance {tol}")));
    }
    let mut bad = None;
    let root = roots::find_root_brent(
        a,
        b,
        |x| {
            let v = g(x);
            if !v.is_finite() {
                bad.get_or_insert(x);
            }
            v
        },
        &mut BracketWidth(tol),
    );
    if let Some(x) = bad {
        return Err(Error::Numerical(format!("function is not finite at {x}")));
    }
    root.map_err(|e| match e {
        roots::SearchError::NoBracketing => Error::Usage(format!("no sign change on [{a}, {b}]")),
        other => Error::Numerical(format!("root search failed: {other:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{Level, RegionKind};
    use std::f64::consts::PI;

    #[test]
    fn inverse_sqrt_at_zero() {
        let r = integrate_1d(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadratureConfig::one_dim()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{r:?}");
        assert!(r.converged);
    }

    #[test]
    fn both_rules_agree_on_arcsine_density() {
        let f = |x: f64| 1.0 / (1.0 - x * x).sqrt();
        let cfg = QuadratureConfig::one_dim();
        let flagged = integrate_interval(f, &Interval::singular(-1.0, 1.0), &cfg).unwrap();
        assert!((flagged.value - PI).abs() < 1e-13, "{flagged:?}");
        let de = integrate_1d(f, -1.0, 1.0, &cfg.with_method(QuadratureMethod::DoubleExponential)).unwrap();
        assert!((de.value - PI).abs() < 1e-7, "{de:?}");
    }

    #[test]
    fn one_sided_substitutions() {
        let cfg = QuadratureConfig::one_dim();
        // ∫_0^1 (1−x)^{-1/2} = 2, singular only at the top
        let r = integrate_interval(|x| 1.0 / (1.0 - x).sqrt(), &Interval::with_flags(0.0, 1.0, false, true), &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate_interval(|x| 1.0 / (x - 3.0).sqrt(), &Interval::with_flags(3.0, 4.0, true, false), &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn polynomials_up_to_degree_ten() {
        let cfg = QuadratureConfig::one_dim();
        for deg in 0..=10 {
            let r = integrate_1d(|x| (deg as f64 + 1.0) * x.powi(deg), 0.0, 1.0, &cfg).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12, "degree {deg}: {}", r.value);
            let g = integrate_1d(|x| (deg as f64 + 1.0) * x.powi(deg), 0.0, 1.0, &cfg.with_method(QuadratureMethod::AdaptiveSubdivision)).unwrap();
            assert!((g.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_limits_rejected() {
        let e = integrate_1d(|x| x, 1.0, 0.0, &QuadratureConfig::one_dim()).unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = QuadratureConfig::one_dim();
        cfg.max_levels = 2;
        assert!(integrate_1d(|x| x, 0.0, 1.0, &cfg).is_err());
        cfg = QuadratureConfig::one_dim().with_rel_tol(0.0);
        assert!(integrate_1d(|x| x, 0.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let e = integrate_1d(|_| f64::NAN, 0.0, 1.0, &QuadratureConfig::one_dim()).unwrap_err();
        assert!(matches!(e, Error::Numerical(_)));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let mut cfg = QuadratureConfig::one_dim().with_method(QuadratureMethod::AdaptiveSubdivision);
        cfg.max_subintervals = 2;
        cfg.rel_tol = 1e-14;
        let r = integrate_1d(|x| (50.0 * x).sin().abs(), 0.0, 1.0, &cfg).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn nested_unit_disk_area() {
        let disk = NestedRegion::new(
            RegionKind::NestedLimits,
            vec![
                Level::constant("x", -1.0, 1.0),
                Level::new("y", |o| -(1.0 - o[0] * o[0]).max(0.0).sqrt(), |o| (1.0 - o[0] * o[0]).max(0.0).sqrt()),
            ],
        );
        let r = integrate_nested(|_| 1.0, &disk, &QuadratureConfig::multi_dim().with_rel_tol(1e-11)).unwrap();
        assert!((r.value - PI).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn nested_transform_and_jacobian() {
        // u ∈ [0,1]², θ = 2u, jacobian 4: ∫∫_{[0,2]²} θ₀θ₁ = 4
        let sq = NestedRegion::new(
            RegionKind::Product,
            vec![Level::constant("a", 0.0, 1.0), Level::constant("b", 0.0, 1.0)],
        )
        .with_transform(4.0, |u| vec![2.0 * u[0], 2.0 * u[1]]);
        let r = integrate_nested(|t| t[0] * t[1], &sq, &QuadratureConfig::multi_dim()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_examples() {
        let r = find_root_bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(find_root_bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10), Err(Error::Usage(_))));
        assert_eq!(find_root_bisect(|x| x, 0.0, 1.0, 1e-10).unwrap(), 0.0);
    }
}
