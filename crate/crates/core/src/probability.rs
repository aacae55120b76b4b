//! Normalization masses, separability probabilities, marginals and
//! EoF-weighted averages per scenario, compared against reference values.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bures::{
    bures_distance_sq, conditioned_metric_rhoq, metric_dittmann2, metric_dittmann3, metric_spectral, prior_value,
    printed, volume_element, MetricTensor,
};
use crate::error::{Error, Result};
use crate::families::{self, feasibility_root, DensityFamily, PriorMode, FAMILY_IDS};
use crate::linalg::{DensityMatrix, Dims};
use crate::priors::{self, catalog_entry, ClosedFormPrior, PriorKind};
use crate::quadrature::{
    integrate_interval, try_integrate_nested_from, try_integrate_region, IntegralResult, QuadratureConfig,
};
use crate::region::{Interval, RegionSpec};
use crate::separability::{eof, ppt_arc_fraction, separable_interval, separable_region, unitary_arcsin_bound};

/// Scenarios defined only by a closed-form prior.
pub const CLOSED_FORM_SCENARIOS: [&str; 3] = ["tsallis_q1", "tsallis_qhalf", "rains_smolin"];

pub fn scenario_ids() -> Vec<&'static str> {
    FAMILY_IDS.iter().chain(CLOSED_FORM_SCENARIOS.iter()).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TolKind {
    Abs,
    Rel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub name: String,
    pub paper: f64,
    pub computed: Option<f64>,
    pub abs_diff: Option<f64>,
    pub tol: f64,
    pub tol_kind: TolKind,
    pub pass: bool,
}

impl TargetRow {
    pub fn new(name: &str, paper: f64, computed: Option<f64>, tol: f64, tol_kind: TolKind) -> Self {
        let abs_diff = computed.map(|c| (c - paper).abs());
        let bound = match tol_kind {
            TolKind::Abs => tol,
            TolKind::Rel => tol * paper.abs(),
        };
        let pass = abs_diff.is_some_and(|d| d.is_finite() && d <= bound);
        Self {
            name: name.to_string(),
            paper,
            computed,
            abs_diff,
            tol,
            tol_kind,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub family: String,
    #[serde(rename = "Z")]
    pub z: Option<f64>,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub p_sep: Option<f64>,
    pub improper: bool,
    /// Propagated quadrature error estimate of p_sep (of S when p_sep is absent).
    pub err: f64,
    pub prior: String,
    pub converged: bool,
    pub quantities: BTreeMap<String, f64>,
    pub targets: Vec<TargetRow>,
}

impl ScenarioResult {
    pub fn pass(&self) -> bool {
        self.targets.iter().all(|t| t.pass)
    }

    pub fn target(&self, name: &str) -> Option<&TargetRow> {
        self.targets.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PriorChoice {
    /// The family's declared prior mode.
    #[default]
    Default,
    Engine,
    Catalog(String),
}

impl std::str::FromStr for PriorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "engine" => Ok(Self::Engine),
            other => match other.strip_prefix("catalog:") {
                Some(id) => {
                    catalog_entry(id)?;
                    Ok(Self::Catalog(id.to_string()))
                }
                None => Err(Error::Usage(format!(
                    "prior must be default, engine or catalog:<id>, got {other}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub quad_1d: QuadratureConfig,
    pub quad_multi: QuadratureConfig,
    /// Used where the integrand is piecewise smooth and targets are loose.
    pub quad_coarse: QuadratureConfig,
    pub prior: PriorChoice,
    /// "scenario.target" → tolerance.
    pub tolerances: BTreeMap<String, f64>,
    /// "scenario.target" → reference value.
    pub references: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            quad_1d: QuadratureConfig::one_dim(),
            quad_multi: QuadratureConfig::multi_dim(),
            quad_coarse: QuadratureConfig::multi_dim().with_rel_tol(3e-3),
            prior: PriorChoice::Default,
            tolerances: BTreeMap::new(),
            references: BTreeMap::new(),
            seed: 20_011_005,
        }
    }
}

impl RunOptions {
    /// Flat `key=value` settings: `tol.<scenario>.<target>`, `ref.<scenario>.<target>`,
    /// `quad.rel_tol_1d`, `quad.rel_tol_multi`, `quad.rel_tol_coarse`, `seed`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("{key}: `{value}` is not a number")))
        };
        if let Some(k) = key.strip_prefix("tol.") {
            self.tolerances.insert(k.to_string(), num()?);
        } else if let Some(k) = key.strip_prefix("ref.") {
            self.references.insert(k.to_string(), num()?);
        } else {
            match key {
                "quad.rel_tol_1d" => self.quad_1d.rel_tol = num()?,
                "quad.rel_tol_multi" => self.quad_multi.rel_tol = num()?,
                "quad.rel_tol_coarse" => self.quad_coarse.rel_tol = num()?,
                "seed" => {
                    self.seed = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Usage(format!("seed: `{value}` is not an integer")))?
                }
                "prior" => self.prior = value.trim().parse()?,
                _ => return Err(Error::Usage(format!("unknown setting `{key}`"))),
            }
        }
        self.quad_1d.validate()?;
        self.quad_multi.validate()?;
        self.quad_coarse.validate()
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("config line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }
}

/// Where prior values come from.
#[derive(Clone)]
pub enum PriorSource {
    Engine(DensityFamily),
    Catalog(ClosedFormPrior),
}

impl PriorSource {
    pub fn for_family(fam: &DensityFamily, choice: &PriorChoice) -> Result<Self> {
        Ok(match choice {
            PriorChoice::Engine => Self::Engine(fam.clone()),
            PriorChoice::Catalog(id) => {
                let p = catalog_entry(id)?;
                if p.arity() != fam.k() {
                    return Err(Error::Usage(format!(
                        "{} takes {} arguments but {} has {} parameters",
                        p.id,
                        p.arity(),
                        fam.id,
                        fam.k()
                    )));
                }
                Self::Catalog(p)
            }
            PriorChoice::Default => match fam.prior_mode {
                PriorMode::MetricEngine => Self::Engine(fam.clone()),
                PriorMode::ClosedForm(id) => Self::Catalog(catalog_entry(id)?),
            },
        })
    }

    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        match self {
            Self::Engine(f) => prior_value(f, theta),
            Self::Catalog(p) => Ok(p.eval_raw(theta)),
        }
    }

    pub fn improper(&self) -> bool {
        matches!(self, Self::Catalog(p) if p.kind == PriorKind::Improper)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Engine(_) => "metric-engine".into(),
            Self::Catalog(p) => format!("closed-form:{}", p.id),
        }
    }
}

fn split_region(region: &RegionSpec, breaks: &[f64]) -> RegionSpec {
    match region {
        RegionSpec::Interval(iv) if !breaks.is_empty() => {
            RegionSpec::Union(iv.split_at(breaks).into_iter().map(RegionSpec::from).collect())
        }
        other => other.clone(),
    }
}

/// ∫ prior over a region (1D regions split at the family's breakpoints).
pub fn mass(prior: &PriorSource, region: &RegionSpec, breaks: &[f64], cfg: &QuadratureConfig) -> Result<IntegralResult> {
    let r = split_region(region, breaks);
    try_integrate_region(&mut |t: &[f64]| prior.eval(t), &r, cfg)
}

fn quad_for(fam_k: usize, opts: &RunOptions) -> QuadratureConfig {
    if fam_k == 1 {
        opts.quad_1d
    } else {
        opts.quad_multi
    }
}

/// Marginal density of the outermost integration variable at each grid point.
pub fn marginal(fam: &DensityFamily, grid: &[f64], opts: &RunOptions) -> Result<Vec<(f64, f64)>> {
    let RegionSpec::Nested(region) = &fam.feasible else {
        return Err(Error::Usage(format!("{} has no nested feasible region", fam.id)));
    };
    let prior = PriorSource::for_family(fam, &opts.prior)?;
    let cfg = opts.quad_multi;
    let z = mass(&prior, &fam.feasible, &fam.breakpoints, &cfg)?.value;
    grid.iter()
        .map(|&x| {
            let inner = try_integrate_nested_from(|t| prior.eval(t), region, &[x], &cfg)?;
            Ok((x, inner.value / z))
        })
        .collect()
}

/// ∫ EoF(ρ(θ)) · normalized prior over the feasible region.
pub fn eof_weighted(fam: &DensityFamily, opts: &RunOptions) -> Result<IntegralResult> {
    if fam.dims != Dims::Bipartite(2, 2) {
        return Err(Error::Usage(format!("{} is not a two-qubit family", fam.id)));
    }
    let prior = PriorSource::for_family(fam, &opts.prior)?;
    if prior.improper() {
        return Err(Error::Usage(format!("{} has an improper prior", fam.id)));
    }
    let cfg = quad_for(fam.k(), opts);
    let mut breaks = fam.breakpoints.clone();
    if fam.k() == 1 {
        if let Ok(iv) = separable_interval(fam) {
            breaks.extend([iv.lo, iv.hi]);
        }
    }
    let z = mass(&prior, &fam.feasible, &breaks, &cfg)?;
    let r = split_region(&fam.feasible, &breaks);
    let num = try_integrate_region(
        &mut |t: &[f64]| {
            let p = prior.eval(t)?;
            if p == 0.0 {
                return Ok(0.0);
            }
            Ok(p * eof(&fam.rho(t)?)?)
        },
        &r,
        &cfg,
    )?;
    Ok(IntegralResult {
        value: num.value / z.value,
        err_estimate: num.err_estimate / z.value + num.value * z.err_estimate / (z.value * z.value),
        evaluations: num.evaluations + z.evaluations,
        converged: num.converged && z.converged,
    })
}

/// Points strictly inside a region, deterministic in `seed`.
pub fn interior_points(region: &RegionSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if let RegionSpec::Interval(iv) = region {
        return Ok((0..n)
            .map(|i| vec![iv.lo + iv.width() * (0.05 + 0.9 * i as f64 / (n.max(2) - 1) as f64)])
            .collect());
    }
    let dim = region
        .dim()
        .ok_or_else(|| Error::Usage(format!("cannot sample a {} region", region.kind_label())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut u: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..0.95)).collect();
            if matches!(region, RegionSpec::Union(_)) {
                u[0] = rng.random_range(0.0..1.0);
            }
            region.sample(&u)
        })
        .collect()
}

/// max over points of |scale·engine − closed form| / |closed form|.
fn oracle_rel(fam: &DensityFamily, cat: &ClosedFormPrior, points: &[Vec<f64>], scale: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let e = scale * prior_value(fam, p)?;
        let c = cat.eval(p)?;
        worst = worst.max((e - c).abs() / c.abs());
    }
    Ok(worst)
}

/// Entrywise comparison with a floor of 1e-3 of the largest entry.
fn metric_rel(a: &MetricTensor, b: &MetricTensor) -> f64 {
    let scale = b.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.max_rel_diff(b, 1e-3 * scale)
}

struct Builder<'a> {
    id: &'static str,
    opts: &'a RunOptions,
    result: ScenarioResult,
}

impl<'a> Builder<'a> {
    fn new(id: &'static str, opts: &'a RunOptions, prior: &str) -> Self {
        Self {
            id,
            opts,
            result: ScenarioResult {
                family: id.to_string(),
                z: None,
                s: None,
                p_sep: None,
                improper: false,
                err: 0.0,
                prior: prior.to_string(),
                converged: true,
                quantities: BTreeMap::new(),
                targets: vec![],
            },
        }
    }

    fn target(&mut self, name: &str, paper: f64, computed: Option<f64>, tol: f64, kind: TolKind) {
        let key = format!("{}.{}", self.id, name);
        let tol = self.opts.tolerances.get(&key).copied().unwrap_or(tol);
        let paper = self.opts.references.get(&key).copied().unwrap_or(paper);
        self.result.targets.push(TargetRow::new(name, paper, computed, tol, kind));
    }

    fn quantity(&mut self, name: &str, v: f64) {
        self.result.quantities.insert(name.to_string(), v);
    }

    fn track(&mut self, r: &IntegralResult) -> f64 {
        self.result.converged &= r.converged;
        r.value
    }

    /// Z, S and p_sep from the same integrand.
    fn masses(&mut self, z: &IntegralResult, s: &IntegralResult) {
        let (zv, sv) = (self.track(z), self.track(s));
        self.result.z = Some(zv);
        self.result.s = Some(sv);
        let p = sv / zv;
        self.result.p_sep = Some(p);
        self.result.err = p * (s.err_estimate / sv.abs().max(f64::MIN_POSITIVE) + z.err_estimate / zv.abs());
    }

    fn finish(self) -> ScenarioResult {
        self.result
    }
}

/// Z and S for a family with a declared or PPT-computed separable region.
fn standard_masses(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    let cfg = quad_for(fam.k(), b.opts);
    let sep = separable_region(fam)?;
    let s = mass(prior, &sep, &fam.breakpoints, &cfg)?;
    if prior.improper() {
        b.result.improper = true;
        b.result.s = Some(b.track(&s));
        b.result.err = s.err_estimate;
        return Ok(());
    }
    let z = mass(prior, &fam.feasible, &fam.breakpoints, &cfg)?;
    b.masses(&z, &s);
    Ok(())
}

pub fn run_scenario(id: &str, opts: &RunOptions) -> Result<ScenarioResult> {
    match id {
        "tsallis_q1" => return run_tsallis(opts, "tsallis_q1", "tsallis_q1_density", priors::tsallis_q1_separable()),
        "tsallis_qhalf" => return run_tsallis(opts, "tsallis_qhalf", "tsallis_qhalf_prior", priors::tsallis_qhalf_separable()),
        "rains_smolin" => return run_rains_smolin(opts),
        _ => {}
    }
    let fam = families::family(id)?;
    let prior = PriorSource::for_family(&fam, &opts.prior)?;
    let mut b = Builder::new(fam.id, opts, &prior.label());
    match fam.id {
        "s1_equal_intra" => s1(&mut b, &fam, &prior)?,
        "s2_two_pos_one_neg" => one_param_density(&mut b, &fam, &prior, 0.5, 1e-8, "s2_density")?,
        "s3_equal_inter" => one_param_density(&mut b, &fam, &prior, 0.5 + (1.0f64 / 3.0).asin() / PI, 1e-8, "s3_density")?,
        "s4_intra_vs_inter" => {
            standard_masses(&mut b, &fam, &prior)?;
            b.target("p_sep", 0.702675, b.result.p_sep, 1e-5, TolKind::Abs);
            let pts = interior_points(&fam.feasible, 10, opts.seed)?;
            let v = oracle_rel(&fam, &catalog_entry("s4_volume")?, &pts, 1.0)?;
            b.quantity("engine_vs_s4_volume", v);
        }
        "s5_all_nine" | "s7_antisym_inter" => {
            standard_masses(&mut b, &fam, &prior)?;
            b.target("p_sep", 1.0, b.result.p_sep, 1e-9, TolKind::Abs);
            if fam.id == "s5_all_nine" {
                let pts = interior_points(&fam.feasible, 10, opts.seed)?;
                let z = b.result.z.unwrap_or(f64::NAN);
                let v = oracle_rel(&fam, &catalog_entry("s5_density")?, &pts, 1.0 / z)?;
                b.quantity("engine_vs_s5_density", v);
            }
        }
        "s6_all_fifteen" => {
            standard_masses(&mut b, &fam, &prior)?;
            b.target("p_sep", 1.0, b.result.p_sep, 1e-9, TolKind::Abs);
            let pts = interior_points(&fam.feasible, 10, opts.seed)?;
            let cat = catalog_entry("s6_volume")?;
            let ratios: Vec<f64> = pts
                .iter()
                .map(|p| Ok(prior_value(&fam, p)? / cat.eval(p)?))
                .collect::<Result<_>>()?;
            let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r / ratios[0] - 1.0).abs()));
            b.quantity("engine_over_s6_volume_spread", spread);
        }
        "werner_qq" => werner_qq(&mut b, &fam, &prior)?,
        "twoparam_intra" => twoparam(&mut b, &fam, &prior)?,
        "threeparam_intra" => threeparam(&mut b, &fam, &prior)?,
        "diag4" => diag4(&mut b, &fam, &prior)?,
        "diag4_unitary" => unitary(&mut b, &fam, &prior)?,
        "werner_qutrit" => werner_ratio(&mut b, &fam, &prior, "werner_qutrit_ratio")?,
        "werner_qubit_qutrit" => {
            werner_ratio(&mut b, &fam, &prior, "werner_qubit_qutrit_ratio")?;
            let iv = separable_interval(&fam)?;
            b.target("ppt_boundary", 0.25, Some(iv.hi), 1e-8, TolKind::Abs);
        }
        "sixlevel_s1" => sixlevel(&mut b, &fam, &prior)?,
        "rho_q" => rho_q(&mut b)?,
        "rho_p" => rho_p(&mut b, &fam, &prior)?,
        "bloch2" => bloch2(&mut b, &fam, &prior)?,
        "twoqubit_general" => twoqubit_general(&mut b, &fam)?,
        other => return Err(Error::UnknownId(other.to_string())),
    }
    Ok(b.finish())
}

fn s1(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    standard_masses(b, fam, prior)?;
    b.target("p_sep", 0.5, b.result.p_sep, 1e-8, TolKind::Abs);
    b.target("Z", PI / 2.0, b.result.z, 1e-9, TolKind::Rel);
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let v = oracle_rel(fam, &catalog_entry("s1_volume")?, &pts, 1.0)?;
    b.target("engine_vs_s1_volume", 0.0, Some(v), 1e-7, TolKind::Abs);
    // restricting after the metric: the full fifteen-parameter tensor at ζᵢᵢ = ζ
    let general = families::family_twoqubit_general();
    let after = catalog_entry("s1_nullify_after")?;
    let mut worst: f64 = 0.0;
    for p in &pts {
        let mut theta = [0.0; 15];
        theta[6] = p[0];
        theta[10] = p[0];
        theta[14] = p[0];
        let v = volume_element(&metric_spectral(&general, &theta)?).magnitude;
        let c = after.eval(p)?;
        worst = worst.max((v - c).abs() / c);
    }
    b.target("full_metric_vs_s1_nullify_after", 0.0, Some(worst), 1e-7, TolKind::Abs);
    let e = eof_weighted(fam, b.opts)?;
    let ev = b.track(&e);
    b.target("eof_weighted", 0.0441763, Some(ev), 1e-4, TolKind::Abs);
    Ok(())
}

fn one_param_density(
    b: &mut Builder,
    fam: &DensityFamily,
    prior: &PriorSource,
    paper: f64,
    tol: f64,
    density: &str,
) -> Result<()> {
    standard_masses(b, fam, prior)?;
    b.target("p_sep", paper, b.result.p_sep, tol, TolKind::Abs);
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let z = b.result.z.unwrap_or(f64::NAN);
    let v = oracle_rel(fam, &catalog_entry(density)?, &pts, 1.0 / z)?;
    b.target(&format!("engine_vs_{density}"), 0.0, Some(v), 1e-7, TolKind::Abs);
    Ok(())
}

fn werner_qq(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    one_param_density(b, fam, prior, 0.25, 1e-8, "werner_qq_density")?;
    let e = eof_weighted(fam, b.opts)?;
    let ev = b.track(&e);
    b.quantity("eof_weighted", ev);
    Ok(())
}

fn twoparam(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    standard_masses(b, fam, prior)?;
    let z = b.result.z.unwrap_or(f64::NAN);
    b.target("p_sep", SQRT_2 - 1.0, b.result.p_sep, 1e-6, TolKind::Abs);
    let cfg = b.opts.quad_multi;
    for (name, paper) in [("separable_eta_pos", 1.0 - 1.0 / SQRT_2), ("separable_eta_neg", 3.0 / SQRT_2 - 2.0)] {
        let region = fam.extra_region(name).ok_or_else(|| Error::Numerical(format!("missing region {name}")))?;
        let s = mass(prior, region, &[], &cfg)?;
        let v = b.track(&s) / z;
        b.target(&format!("p_{name}"), paper, Some(v), 1e-6, TolKind::Abs);
    }
    let grid: Vec<f64> = (0..9).map(|i| -0.2 + 0.05 * i as f64).collect();
    let m = marginal(fam, &grid, b.opts)?;
    let dev = m
        .iter()
        .fold(0.0f64, |w, &(x, d)| w.max((d - priors::twoparam_eta_marginal(x)).abs()));
    b.target("eta_marginal_max_dev", 0.0, Some(dev), 1e-6, TolKind::Abs);
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let v = oracle_rel(fam, &catalog_entry("twoparam_density")?, &pts, 1.0 / z)?;
    b.target("engine_vs_twoparam_density", 0.0, Some(v), 1e-7, TolKind::Abs);
    Ok(())
}

fn threeparam(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    standard_masses(b, fam, prior)?;
    let z = b.result.z.unwrap_or(f64::NAN);
    b.target("Z", PI * PI / 8.0, b.result.z, 1e-6, TolKind::Rel);
    b.target("p_sep", 2.0 / PI - 0.5, b.result.p_sep, 1e-5, TolKind::Abs);
    let printed_limits = fam
        .extra_region("printed_separable_limits")
        .ok_or_else(|| Error::Numerical("missing printed limits".into()))?;
    let s = mass(prior, printed_limits, &[], &b.opts.quad_multi)?;
    let v = b.track(&s) / z;
    b.quantity("p_sep_printed_limits", v);
    let grid: Vec<f64> = (0..9).map(|i| -0.2 + 0.05 * i as f64).collect();
    let m = marginal(fam, &grid, b.opts)?;
    let dev = m.iter().fold(0.0f64, |w, &(_, d)| w.max((d - 2.0).abs()));
    b.target("zeta_marginal_max_dev", 0.0, Some(dev), 1e-5, TolKind::Abs);
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let v = oracle_rel(fam, &catalog_entry("threeparam_volume")?, &pts, 1.0)?;
    b.quantity("engine_vs_threeparam_volume", v);
    Ok(())
}

fn diag4(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    standard_masses(b, fam, prior)?;
    let z = b.result.z.unwrap_or(f64::NAN);
    b.target("p_sep", 1.0, b.result.p_sep, 1e-9, TolKind::Abs);
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let dir = catalog_entry("dirichlet")?;
    let v = oracle_rel(fam, &dir, &pts, 1.0 / z)?;
    b.target("normalized_vs_dirichlet", 0.0, Some(v), 1e-6, TolKind::Abs);
    // the constant c in c/√(xyz(1−x−y−z)) implied by the normalized engine prior
    let p = &pts[0];
    let t = 1.0 - p[0] - p[1] - p[2];
    let c = prior_value(fam, p)? / z * (p[0] * p[1] * p[2] * t).sqrt();
    b.target("dirichlet_constant", 1.0 / (PI * PI), Some(c), 1e-6, TolKind::Rel);
    Ok(())
}

fn unitary(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    let RegionSpec::Nested(full) = &fam.feasible else {
        return Err(Error::Numerical("unitary family region is not nested".into()));
    };
    // the prior does not depend on w: integrate the simplex at w = 0
    let mut simplex = full.clone();
    simplex.levels.truncate(3);
    let simplex: RegionSpec = simplex.into();
    let at = |t: &[f64]| [t[0], t[1], t[2], 0.0];
    let cfg = b.opts.quad_coarse;
    let z3 = try_integrate_region(&mut |t: &[f64]| prior.eval(&at(t)), &simplex, &cfg)?;
    let sa = try_integrate_region(
        &mut |t: &[f64]| {
            let p = prior.eval(&at(t))?;
            if p == 0.0 {
                return Ok(0.0);
            }
            Ok(p * ppt_arc_fraction(t[0], t[1], t[2], 1e-10)?)
        },
        &simplex,
        &cfg,
    )?;
    let sb = try_integrate_region(
        &mut |t: &[f64]| Ok(prior.eval(&at(t))? * 2.0 * unitary_arcsin_bound(t[0], t[1], t[2]) / (2.0 * PI)),
        &simplex,
        &cfg,
    )?;
    let two_pi = 2.0 * PI;
    b.masses(&z3.scaled(two_pi), &sa.scaled(two_pi));
    let pb = b.track(&sb) / z3.value;
    b.quantity("p_sep_arcsin_route", pb);
    b.target("p_sep", 0.112, b.result.p_sep, 2e-3, TolKind::Abs);
    b.target("p_sep_arcsin_route", 0.112, Some(pb), 2e-3, TolKind::Abs);
    let pa = b.result.p_sep.unwrap_or(f64::NAN);
    b.target("route_difference", 0.0, Some((pa - pb).abs()), 2e-3, TolKind::Abs);
    let pts = interior_points(&simplex, 10, b.opts.seed)?;
    let mut wvar: f64 = 0.0;
    for p in pts.iter().take(5) {
        let base = prior_value(fam, &at(p))?;
        for k in 1..16 {
            let w = two_pi * k as f64 / 16.0;
            let v = prior_value(fam, &[p[0], p[1], p[2], w])?;
            wvar = wvar.max((v - base).abs() / base);
        }
    }
    b.target("w_variation", 0.0, Some(wvar), 1e-8, TolKind::Abs);
    let cat = catalog_entry("unitary_volume")?;
    let mut rng = ChaCha8Rng::seed_from_u64(b.opts.seed);
    let with_w: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0], p[1], p[2], rng.random_range(0.0..two_pi)]).collect();
    let v = oracle_rel(fam, &cat, &with_w, 1.0)?;
    b.target("engine_vs_unitary_volume", 0.0, Some(v), 1e-6, TolKind::Abs);
    b.quantity("Z_times_3_over_pi2", b.result.z.unwrap_or(f64::NAN) * 3.0 / (PI * PI));
    Ok(())
}

fn werner_ratio(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource, ratio_id: &str) -> Result<()> {
    standard_masses(b, fam, prior)?;
    let cat = catalog_entry(ratio_id)?;
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let v = oracle_rel(fam, &cat, &pts, 1.0)?;
    b.target(&format!("engine_vs_{ratio_id}"), 0.0, Some(v), 1e-6, TolKind::Abs);
    if ratio_id == "werner_qutrit_ratio" {
        let cfg = b.opts.quad_1d;
        let f = |e: f64| cat.eval_raw(&[e]);
        let sep = integrate_interval(f, &Interval::new(0.0, 0.25), &cfg)?;
        let cut = integrate_interval(f, &Interval::new(0.0, 0.999999), &cfg)?;
        let (sv, cv) = (b.track(&sep), b.track(&cut));
        b.target("printed_integral_separable", 1.05879, Some(sv), 1e-3, TolKind::Rel);
        b.target("printed_integral_cutoff", 9.62137e9, Some(cv), 1e-3, TolKind::Rel);
    }
    Ok(())
}

fn sixlevel(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    let lo = feasibility_root(fam, -0.1, 0.0, 1e-12)?;
    let hi = feasibility_root(fam, 0.0, 0.2, 1e-12)?;
    b.target("feasible_lo", -0.0546647, Some(lo), 1e-6, TolKind::Abs);
    b.target("feasible_hi", 0.10277, Some(hi), 1e-6, TolKind::Abs);
    let sep = separable_interval(fam)?;
    b.quantity("separable_hi", sep.hi);
    standard_masses(b, fam, prior)?;
    b.target("p_sep", 0.607921, b.result.p_sep, 1e-4, TolKind::Abs);
    Ok(())
}

fn rho_q(b: &mut Builder) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(b.opts.seed);
    let (mut block, mut vol, mut comp, mut pairs): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let eq3 = catalog_entry("rhoq_conditioned_volume")?;
    let fct = catalog_entry("complement_factor")?;
    let mut pts = Vec::new();
    while pts.len() < 10 {
        let v: f64 = rng.random_range(0.05..0.95);
        let (x, y, z): (f64, f64, f64) = (rng.random_range(-v..v), rng.random_range(-v..v), rng.random_range(-v..v));
        if x * x + y * y + z * z < 0.9 * v * v {
            pts.push([v, x, y, z]);
        }
    }
    for p in &pts {
        let g = conditioned_metric_rhoq(p[0], p[1], p[2], p[3])?;
        block = block.max(g.submatrix(&[0, 1, 2, 3]).max_abs_diff(&printed::rhop_block(p[0], p[1], p[2], p[3])));
        let c = eq3.eval(p)?;
        vol = vol.max((volume_element(&g).magnitude - c).abs() / c);
        let f = fct.eval(p)?;
        comp = comp.max((volume_element(&g.submatrix(&[4, 5, 6, 7])).magnitude - f).abs() / f);
        let r = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
        let e = crate::bures::eigen_pairs_check(p[0], r)?;
        for (a, q) in e.computed.iter().zip(&e.printed) {
            pairs = pairs.max((a - q).abs() / q.abs());
        }
    }
    b.target("submatrix_vs_printed_block", 0.0, Some(block), 1e-9, TolKind::Abs);
    b.target("volume_vs_printed", 0.0, Some(vol), 1e-8, TolKind::Abs);
    b.target("complement_vs_factor", 0.0, Some(comp), 1e-8, TolKind::Abs);
    b.target("eigenvalue_pairs", 0.0, Some(pairs), 1e-8, TolKind::Abs);
    let mut dets: f64 = 0.0;
    for p in &pts {
        let a = printed::rhop_block(p[0], p[1], p[2], p[3]).determinant();
        let c = printed::rhop_block_negated_diagonal(p[0], p[1], p[2], p[3]).determinant();
        dets = dets.max((a - c).abs() / a.abs());
    }
    b.target("printed_block_determinants", 0.0, Some(dets), 1e-9, TolKind::Abs);
    // spectral vs the 3×3 closed form at random full-rank states
    let fam = families::family_rho_q();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 20 {
        let theta: Vec<f64> = (0..8).map(|_| rng.random_range(-0.6..0.6)).collect();
        let mut theta = theta;
        theta[0] = rng.random_range(0.05..0.95);
        if fam.min_eigenvalue(&theta)? < 1e-3 {
            continue;
        }
        worst = worst.max(metric_rel(&metric_dittmann3(&fam, &theta)?, &metric_spectral(&fam, &theta)?));
        n += 1;
    }
    b.target("spectral_vs_dittmann3", 0.0, Some(worst), 1e-8, TolKind::Abs);
    Ok(())
}

/// Golden-section minimum of −q(v) on (0, 1).
pub fn neg_q_argmin() -> f64 {
    let f = |v: f64| -priors::rhop_v_marginal_signed(v);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut c) = (0.3, 0.9);
    let mut x1 = c - g * (c - a);
    let mut x2 = a + g * (c - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while c - a > 1e-12 {
        if f1 < f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - g * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (c - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + c)
}

fn rho_p(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    b.result.p_sep = None;
    let z = mass(prior, &fam.feasible, &[], &b.opts.quad_multi)?;
    let zv = b.track(&z);
    b.result.z = Some(zv);
    b.quantity("Z_times_12_over_pi2", zv * 12.0 / (PI * PI));
    let eq5 = catalog_entry("rhop_restricted_volume")?;
    let pts = interior_points(&fam.feasible, 10, b.opts.seed)?;
    let v = oracle_rel(fam, &eq5, &pts, 1.0)?;
    b.target("restricted_volume_vs_printed", 0.0, Some(v), 1e-8, TolKind::Abs);
    let mut d3: f64 = 0.0;
    for p in &pts {
        let e = volume_element(&metric_dittmann3(fam, p)?).magnitude;
        d3 = d3.max((e - eq5.eval(p)?).abs() / eq5.eval(p)?);
    }
    b.target("dittmann3_volume_vs_printed", 0.0, Some(d3), 1e-8, TolKind::Abs);
    b.target("neg_q_argmin", 0.618035, Some(neg_q_argmin()), 5e-6, TolKind::Abs);
    let pv = integrate_interval(priors::rhop_v_marginal, &Interval::with_flags(0.0, 1.0, false, true), &b.opts.quad_1d)?;
    let pvv = b.track(&pv);
    b.target("v_marginal_integral", 1.0, Some(pvv), 1e-9, TolKind::Rel);
    let grid: Vec<f64> = (1..10).map(|i| 0.1 * i as f64).collect();
    let m = marginal(fam, &grid, b.opts)?;
    let dev = m.iter().fold(0.0f64, |w, &(x, d)| w.max((d - priors::rhop_v_marginal(x)).abs()));
    b.target("v_marginal_max_dev", 0.0, Some(dev), 1e-6, TolKind::Abs);
    Ok(())
}

/// Observed order of |d²(ρ, ρ + hX) − h² G(X, X)| as h halves.
pub fn fidelity_residual_order(rho: &DensityMatrix, x: &crate::linalg::HermitianMatrix, hs: &[f64]) -> Result<f64> {
    let g = crate::bures::metric_from_derivatives(rho.hermitian(), std::slice::from_ref(x), &Default::default())?;
    let gxx = g.get(0, 0);
    let res = |h: f64| -> Result<f64> {
        let sigma = DensityMatrix::boundary_tolerant(rho.matrix().add(&x.matrix().scale_real(h)), rho.dims(), &Default::default())?;
        Ok((bures_distance_sq(rho, &sigma)? - h * h * gxx).abs())
    };
    let r: Vec<f64> = hs.iter().map(|&h| res(h)).collect::<Result<_>>()?;
    let orders: Vec<f64> = r
        .windows(2)
        .zip(hs.windows(2))
        .map(|(rr, hh)| (rr[0] / rr[1]).ln() / (hh[0] / hh[1]).ln())
        .collect();
    Ok(orders.iter().sum::<f64>() / orders.len() as f64)
}

fn bloch2(b: &mut Builder, fam: &DensityFamily, prior: &PriorSource) -> Result<()> {
    let z = mass(prior, &fam.feasible, &[], &b.opts.quad_multi)?;
    let zv = b.track(&z);
    b.result.z = Some(zv);
    b.quantity("Z_times_8_over_pi2", zv * 8.0 / (PI * PI));
    let mut rng = ChaCha8Rng::seed_from_u64(b.opts.seed);
    let (mut d2, mut pm): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    while n < 20 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p.iter().map(|c| c * c).sum::<f64>() > 0.95 {
            continue;
        }
        let s = metric_spectral(fam, &p)?;
        d2 = d2.max(metric_rel(&metric_dittmann2(fam, &p)?, &s));
        pm = pm.max(s.max_abs_diff(&printed::bloch_metric(p[0], p[1], p[2])));
        n += 1;
    }
    b.target("spectral_vs_dittmann2", 0.0, Some(d2), 1e-8, TolKind::Abs);
    b.target("spectral_vs_printed_bloch", 0.0, Some(pm), 1e-10, TolKind::Abs);
    // a full-rank qutrit state and a random traceless direction
    let q = families::family_rho_q();
    let theta = [0.6, 0.1, -0.2, 0.15, 0.1, 0.05, -0.1, 0.2];
    let rho = q.rho_checked(&theta, &Default::default())?;
    let dirs = q.drho(&theta)?;
    let mut x = dirs[0].matrix().clone();
    for (k, d) in dirs.iter().enumerate().skip(1) {
        x.axpy(0.3 + 0.1 * k as f64, d.matrix());
    }
    let order = fidelity_residual_order(&rho, &crate::linalg::HermitianMatrix::new(x)?, &[2e-3, 1e-3, 5e-4])?;
    b.target("fidelity_residual_order", 3.0, Some(order), 0.3, TolKind::Abs);
    Ok(())
}

fn twoqubit_general(b: &mut Builder, fam: &DensityFamily) -> Result<()> {
    let v = prior_value(fam, &[0.0; 15])?;
    b.quantity("volume_at_maximally_mixed", v);
    Ok(())
}

fn run_tsallis(opts: &RunOptions, id: &'static str, density: &str, sep: RegionSpec) -> Result<ScenarioResult> {
    let p = match &opts.prior {
        PriorChoice::Catalog(c) => catalog_entry(c)?,
        _ => catalog_entry(density)?,
    };
    let src = PriorSource::Catalog(p);
    let mut b = Builder::new(id, opts, &src.label());
    let z = mass(&src, &priors::tsallis_feasible(), &[], &opts.quad_multi)?;
    let s = mass(&src, &sep, &[], &opts.quad_multi)?;
    b.masses(&z, &s);
    b.target("Z", 1.0, b.result.z, 1e-6, TolKind::Abs);
    b.target("p_sep", SQRT_2 - 1.0, b.result.p_sep, 1e-6, TolKind::Abs);
    Ok(b.finish())
}

fn run_rains_smolin(opts: &RunOptions) -> Result<ScenarioResult> {
    let src = PriorSource::Catalog(catalog_entry("rains_smolin")?);
    let mut b = Builder::new("rains_smolin", opts, &src.label());
    let u = priors::rains_smolin_half_width();
    let z = mass(&src, &Interval::singular(-u, u).into(), &[], &opts.quad_1d)?;
    // no member of the family is separable
    b.masses(&z, &IntegralResult::zero());
    b.target("Z", 1.0, b.result.z, 1e-9, TolKind::Rel);
    b.target("half_width", 5.13523, Some(u), 1e-5, TolKind::Abs);
    b.target("p_sep", 0.0, b.result.p_sep, 1e-12, TolKind::Abs);
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_rows() {
        let t = TargetRow::new("a", 1.0, Some(1.0 + 1e-10), 1e-9, TolKind::Abs);
        assert!(t.pass);
        let t = TargetRow::new("a", 100.0, Some(100.05), 1e-3, TolKind::Rel);
        assert!(t.pass);
        assert!(!TargetRow::new("a", 1.0, None, 1.0, TolKind::Abs).pass);
        assert!(!TargetRow::new("a", 1.0, Some(f64::NAN), 1.0, TolKind::Abs).pass);
    }

    #[test]
    fn options_parse() {
        let mut o = RunOptions::default();
        o.apply_config_text("# comment\ntol.s1_equal_intra.p_sep = 1e-3\nref.s1_equal_intra.Z=2\nprior=engine\n")
            .unwrap();
        assert_eq!(o.tolerances["s1_equal_intra.p_sep"], 1e-3);
        assert_eq!(o.references["s1_equal_intra.Z"], 2.0);
        assert_eq!(o.prior, PriorChoice::Engine);
        assert!(o.set("bogus", "1").is_err());
        assert!(o.set("quad.rel_tol_1d", "-1").is_err());
    }

    #[test]
    fn scenario_one_masses() {
        let r = run_scenario("s1_equal_intra", &RunOptions::default()).unwrap();
        assert!(r.target("p_sep").unwrap().pass, "{:?}", r.target("p_sep"));
        assert!(r.target("Z").unwrap().pass, "{:?}", r.target("Z"));
        assert!(r.target("full_metric_vs_s1_nullify_after").unwrap().pass);
    }

    #[test]
    fn neg_q_minimum() {
        let v = neg_q_argmin();
        assert!((0.61803..=0.61804).contains(&v), "{v}");
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(run_scenario("nope", &RunOptions::default()), Err(Error::UnknownId(_))));
    }
}
