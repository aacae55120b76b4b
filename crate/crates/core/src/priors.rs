//! Closed-form priors, densities and marginals, each with its domain.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::s6_lower_endpoint;
use crate::region::{Interval, Level, NestedRegion, RegionKind, RegionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// Integrates to one over its domain.
    Normalized,
    /// Finite mass other than one.
    Unnormalized,
    /// Mass diverges.
    Improper,
}

#[derive(Clone)]
pub struct ClosedFormPrior {
    pub id: &'static str,
    pub params: &'static [&'static str],
    pub formula: &'static str,
    pub kind: PriorKind,
    /// Mass over the domain where one is known (1 for normalized entries).
    pub normalization: Option<f64>,
    /// The printed expression is negative (or signed) on the domain and |·| is returned.
    pub abs_applied: bool,
    pub domain_text: &'static str,
    eval: fn(&[f64]) -> f64,
    domain: fn(&[f64]) -> bool,
    region: Option<fn() -> RegionSpec>,
}

impl std::fmt::Debug for ClosedFormPrior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedFormPrior")
            .field("id", &self.id)
            .field("formula", &self.formula)
            .finish_non_exhaustive()
    }
}

impl ClosedFormPrior {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.arity() && theta.iter().all(|t| t.is_finite()) && (self.domain)(theta)
    }

    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.arity() {
            return Err(Error::Usage(format!(
                "{} takes {} arguments, got {}",
                self.id,
                self.arity(),
                theta.len()
            )));
        }
        if !self.in_domain(theta) {
            return Err(Error::Domain(format!("{} is outside the domain of {} ({})", fmt_point(theta), self.id, self.domain_text)));
        }
        let v = (self.eval)(theta);
        if v.is_nan() {
            return Err(Error::Domain(format!("{} is undefined at {}", self.id, fmt_point(theta))));
        }
        Ok(v)
    }

    /// No domain check; NaN outside.
    pub fn eval_raw(&self, theta: &[f64]) -> f64 {
        (self.eval)(theta)
    }

    /// Integration region of the domain, if one is declared.
    pub fn region(&self) -> Option<RegionSpec> {
        self.region.map(|f| f())
    }

    pub fn export(&self) -> CatalogEntry {
        CatalogEntry {
            id: self.id.to_string(),
            arity: self.arity(),
            params: self.params.iter().map(|s| s.to_string()).collect(),
            formula: self.formula.to_string(),
            kind: self.kind,
            normalization: self.normalization,
            abs_applied: self.abs_applied,
            domain: self.domain_text.to_string(),
        }
    }
}

fn fmt_point(theta: &[f64]) -> String {
    let parts: Vec<String> = theta.iter().map(|t| format!("{t}")).collect();
    format!("({})", parts.join(", "))
}

/// Serializable description of one catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub arity: usize,
    pub params: Vec<String>,
    pub formula: String,
    pub kind: PriorKind,
    pub normalization: Option<f64>,
    pub abs_applied: bool,
    pub domain: String,
}

// ---------------------------------------------------------------- 3×3 family

fn r2(t: &[f64]) -> f64 {
    t[1] * t[1] + t[2] * t[2] + t[3] * t[3]
}

fn rhop_interior(t: &[f64]) -> bool {
    t[0] > 0.0 && t[0] < 1.0 && r2(t) < t[0] * t[0]
}

fn rhoq_conditioned_volume(t: &[f64]) -> f64 {
    let v = t[0];
    let q = r2(t);
    (1.0 / (64.0 * v * (1.0 - v).sqrt() * (v * v - q).sqrt() * (q - (v - 2.0).powi(2)))).abs()
}

fn rhop_restricted_volume(t: &[f64]) -> f64 {
    let v = t[0];
    1.0 / (16.0 * v * (1.0 - v).sqrt() * (v * v - r2(t)).sqrt())
}

fn complement_factor(t: &[f64]) -> f64 {
    (1.0 / (4.0 * (r2(t) - (t[0] - 2.0).powi(2)))).abs()
}

fn rhop_spherical_density(t: &[f64]) -> f64 {
    let (v, r, th) = (t[0], t[1], t[2]);
    3.0 * r * r * th.sin() / (4.0 * PI * PI * v * (1.0 - v).sqrt() * (v * v - r * r).sqrt())
}

/// q(v) as printed; negative on (0, 1).
pub fn rhop_v_marginal_signed(v: f64) -> f64 {
    PI * PI / (64.0 * v) * (-1.0 - 2.0 / (1.0 - v).sqrt() + 1.0 / (-1.0 + v))
}

pub fn rhop_v_marginal(v: f64) -> f64 {
    3.0 * v / (4.0 * (1.0 - v).sqrt())
}

fn rhop_region() -> RegionSpec {
    crate::families::family_rho_p().feasible
}

// ---------------------------------------------------------- one-parameter 2⊗2

fn open(lo: f64, hi: f64) -> impl Fn(f64) -> bool {
    move |x| x > lo && x < hi
}

fn s1_nullify_after(t: &[f64]) -> f64 {
    let z = t[0];
    32768.0 / ((1.0 - 4.0 * z).powi(3) * (1.0 + 4.0 * z).powf(4.5) * (1.0 - 12.0 * z).sqrt())
}

pub fn s1_volume(z: f64) -> f64 {
    2.0 * 3f64.sqrt() / (1.0 - 8.0 * z - 48.0 * z * z).sqrt()
}

fn s2_density(t: &[f64]) -> f64 {
    let z = t[0];
    4.0 * 3f64.sqrt() / (PI * (1.0 + 8.0 * z - 48.0 * z * z).sqrt())
}

fn s3_density(t: &[f64]) -> f64 {
    let z = t[0];
    8.0 * SQRT_2 / (PI * (1.0 - 8.0 * z - 128.0 * z * z).sqrt())
}

/// The printed quantity under the square root for the intra-vs-inter scenario.
pub fn s4_volume_squared(z: f64) -> f64 {
    12.0 * (3.0 - 20.0 * z) / ((4.0 * z - 1.0) * (12.0 * z - 1.0) * (1.0 + 20.0 * z))
}

fn s5_density(t: &[f64]) -> f64 {
    12.0 / (PI * (1.0 - 144.0 * t[0] * t[0]).sqrt())
}

fn s6_volume(t: &[f64]) -> f64 {
    let z = t[0];
    2.0 * (3.0 - 20.0 * z).sqrt() / (1.0 + 12.0 * z - 336.0 * z * z + 576.0 * z * z * z).sqrt()
}

/// Half-width of the Rains–Smolin feasible range, √807599/175.
pub fn rains_smolin_half_width() -> f64 {
    807599f64.sqrt() / 175.0
}

pub fn rains_smolin_density(x: f64) -> f64 {
    175.0 / (PI * (807599.0 - 30625.0 * x * x).sqrt())
}

pub fn werner_qq_density(e: f64) -> f64 {
    3.0 * 3f64.sqrt() / (PI * (4.0 + 8.0 * e - 12.0 * e * e).sqrt())
}

// ---------------------------------------------------------- two-parameter 2⊗2

pub fn twoparam_density(zeta: f64, eta: f64) -> f64 {
    8.0 * SQRT_2 / (PI * ((1.0 + 4.0 * eta) * ((1.0 - 4.0 * eta).powi(2) - 64.0 * zeta * zeta)).sqrt())
}

pub fn twoparam_eta_marginal(eta: f64) -> f64 {
    SQRT_2 / (1.0 + 4.0 * eta).sqrt()
}

fn twoparam_region() -> RegionSpec {
    crate::families::family_twoparam_intra().feasible
}

/// Upper end of the Tsallis b range, 2√2.
pub const TSALLIS_B_MAX: f64 = 2.0 * SQRT_2;

/// Printed q = 1 form (radicand σ² − 8b⁴).
pub fn tsallis_q1_prior(b: f64, s2: f64) -> Result<f64> {
    catalog_entry("tsallis_q1_prior")?.eval(&[b, s2])
}

/// q = 1 density with radicand σ⁴ − 8b².
pub fn tsallis_q1_density(b: f64, s2: f64) -> f64 {
    1.0 / (PI * (8.0 - s2).sqrt() * (s2 * s2 - 8.0 * b * b).sqrt())
}

pub fn tsallis_qhalf_prior(b: f64, s2: f64) -> Result<f64> {
    catalog_entry("tsallis_qhalf_prior")?.eval(&[b, s2])
}

fn tsallis_qhalf_raw(b: f64, s2: f64) -> f64 {
    32.0 / (PI * (32.0 + 4.0 * b * b + (s2 - 8.0) * s2).powf(1.5))
}

fn tsallis_pre(t: &[f64]) -> bool {
    let (b, s2) = (t[0], t[1]);
    (0.0..=TSALLIS_B_MAX).contains(&b) && s2 >= TSALLIS_B_MAX * b && s2 <= 8.0
}

/// 0 ≤ b ≤ 2√2, 2√2·b ≤ σ² ≤ 8; b outer.
pub fn tsallis_feasible() -> RegionSpec {
    NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("b", 0.0, TSALLIS_B_MAX),
            Level::new("s2", |o| TSALLIS_B_MAX * o[0], |_| 8.0),
        ],
    )
    .into()
}

/// σ² ≤ 8 − 2√2·b and b ≤ √2 inside the feasible set.
pub fn tsallis_q1_separable() -> RegionSpec {
    NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("b", 0.0, SQRT_2).flags(true, false),
            Level::new("s2", |o| TSALLIS_B_MAX * o[0], |o| 8.0 - TSALLIS_B_MAX * o[0]),
        ],
    )
    .into()
}

/// Upper σ² limit of the q = 1/2 separable set.
pub fn tsallis_qhalf_sep_upper(b: f64) -> f64 {
    8.0 + TSALLIS_B_MAX * b - TSALLIS_B_MAX * (b * (4.0 * SQRT_2 + b)).max(0.0).sqrt()
}

/// σ² ≤ 8 + 2√2 b − 2√2 √(b(4√2 + b)) and b ≤ 4 − 2√2.
pub fn tsallis_qhalf_separable() -> RegionSpec {
    NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("b", 0.0, 4.0 - TSALLIS_B_MAX).flags(true, false),
            Level::new("s2", |o| TSALLIS_B_MAX * o[0], |o| tsallis_qhalf_sep_upper(o[0])),
        ],
    )
    .into()
}

// -------------------------------------------------------- three-parameter 2⊗2

/// The four signed factors under the root, each positive on the feasible set.
fn threeparam_factors(t: &[f64]) -> [f64; 4] {
    let (z, e, k) = (4.0 * t[0], 4.0 * t[1], 4.0 * t[2]);
    [-(-1.0 + z - e - k), 1.0 + z + e - k, 1.0 + z - e + k, -(-1.0 + z + e + k)]
}

fn threeparam_volume(t: &[f64]) -> f64 {
    let (z, e, k) = (4.0 * t[0], 4.0 * t[1], 4.0 * t[2]);
    8.0 / ((-1.0 + z - e - k) * (1.0 + z + e - k) * (1.0 + z - e + k) * (-1.0 + z + e + k)).sqrt()
}

fn dirichlet(t: &[f64]) -> f64 {
    let (x, y, z) = (t[0], t[1], t[2]);
    1.0 / (PI * PI * (x * y * z * (1.0 - x - y - z)).sqrt())
}

fn simplex_interior(t: &[f64]) -> bool {
    t[0] > 0.0 && t[1] > 0.0 && t[2] > 0.0 && t[0] + t[1] + t[2] < 1.0
}

pub fn unitary_volume(x: f64, y: f64, z: f64) -> f64 {
    ((y - z) * (y - z)).sqrt() / (8.0 * (x * y * z * (y + z) * (1.0 - x - y - z)).sqrt())
}

// ------------------------------------------------------------------- Werner

/// Numerator and denominator of the two-qutrit ratio.
pub fn werner_qutrit_parts(e: f64) -> (f64, f64) {
    let poly = [
        496.0, 14384.0, 179472.0, 1269568.0, 5676488.0, 16753596.0, 31419646.0, 31863023.0, 14859999.0,
    ];
    let num = -16.0 * (2.0 + 7.0 * e) * horner(&poly, e);
    let den = 3.0
        * (-1.0 + e).powi(5)
        * (1.0 + 8.0 * e)
        * (31.0 + 161.0 * e)
        * horner(&[31.0, 603.0, 3993.0, 8981.0], e);
    (num, den)
}

/// Numerator and denominator of the qubit-qutrit ratio.
pub fn werner_qubit_qutrit_parts(e: f64) -> (f64, f64) {
    let num = 10.0 * (1.0 + 2.0 * e) * horner(&[26.0, 286.0, 1236.0, 2506.0, 2021.0], e);
    let den = (-1.0 + e).powi(2)
        * (1.0 + 5.0 * e)
        * (13.0 + 32.0 * e)
        * horner(&[13.0, 126.0, 429.0, 512.0], e);
    (num, den)
}

/// Σ c_i x^i, coefficients lowest degree first.
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn sqrt_ratio(p: (f64, f64)) -> f64 {
    (p.0 / p.1).sqrt()
}

pub fn werner_qutrit_ratio(e: f64) -> f64 {
    sqrt_ratio(werner_qutrit_parts(e))
}

pub fn werner_qubit_qutrit_ratio(e: f64) -> f64 {
    sqrt_ratio(werner_qubit_qutrit_parts(e))
}

// ------------------------------------------------------------------ catalog

fn interval_region(lo: f64, hi: f64) -> RegionSpec {
    Interval::singular(lo, hi).into()
}

fn simplex_region() -> RegionSpec {
    crate::region::simplex3(["x", "y", "z"]).into()
}

fn threeparam_region() -> RegionSpec {
    crate::families::family_threeparam_intra().feasible
}

pub fn catalog() -> Vec<ClosedFormPrior> {
    use PriorKind::*;
    vec![
        ClosedFormPrior {
            id: "rhoq_conditioned_volume",
            params: &["v", "x", "y", "z"],
            formula: "|1/(64 v (1-v)^(1/2) (v^2-x^2-y^2-z^2)^(1/2) (x^2+y^2+z^2-(v-2)^2))|",
            kind: Improper,
            normalization: None,
            abs_applied: true,
            domain_text: "0 < v < 1, x^2+y^2+z^2 < v^2",
            eval: rhoq_conditioned_volume,
            domain: rhop_interior,
            region: Some(rhop_region),
        },
        ClosedFormPrior {
            id: "rhop_restricted_volume",
            params: &["v", "x", "y", "z"],
            formula: "1/(16 v (1-v)^(1/2) (v^2-x^2-y^2-z^2)^(1/2))",
            kind: Unnormalized,
            normalization: Some(PI * PI / 12.0),
            abs_applied: false,
            domain_text: "0 < v < 1, x^2+y^2+z^2 < v^2",
            eval: rhop_restricted_volume,
            domain: rhop_interior,
            region: Some(rhop_region),
        },
        ClosedFormPrior {
            id: "complement_factor",
            params: &["v", "x", "y", "z"],
            formula: "|1/(4 (x^2+y^2+z^2-(v-2)^2))|",
            kind: Unnormalized,
            normalization: None,
            abs_applied: true,
            domain_text: "0 < v < 1, x^2+y^2+z^2 < v^2",
            eval: complement_factor,
            domain: rhop_interior,
            region: None,
        },
        ClosedFormPrior {
            id: "rhop_spherical_density",
            params: &["v", "r", "theta", "phi"],
            formula: "3 r^2 sin(theta)/(4 pi^2 v (1-v)^(1/2) (v^2-r^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "0 < v < 1, 0 <= r < v, 0 <= theta <= pi, 0 <= phi <= 2 pi",
            eval: rhop_spherical_density,
            domain: |t| t[0] > 0.0 && t[0] < 1.0 && t[1] >= 0.0 && t[1] < t[0] && (0.0..=PI).contains(&t[2]) && (0.0..=2.0 * PI).contains(&t[3]),
            region: None,
        },
        ClosedFormPrior {
            id: "rhop_v_marginal_nullify_after",
            params: &["v"],
            formula: "|pi^2/(64 v) (-1 - 2/(1-v)^(1/2) + 1/(-1+v))|",
            kind: Improper,
            normalization: None,
            abs_applied: true,
            domain_text: "0 < v < 1",
            eval: |t| rhop_v_marginal_signed(t[0]).abs(),
            domain: |t| open(0.0, 1.0)(t[0]),
            region: Some(|| Interval::singular(0.0, 1.0).into()),
        },
        ClosedFormPrior {
            id: "rhop_v_marginal",
            params: &["v"],
            formula: "3 v/(4 (1-v)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "0 <= v < 1",
            eval: |t| rhop_v_marginal(t[0]),
            domain: |t| t[0] >= 0.0 && t[0] < 1.0,
            region: Some(|| Interval::with_flags(0.0, 1.0, false, true).into()),
        },
        ClosedFormPrior {
            id: "s1_nullify_after",
            params: &["zeta"],
            formula: "32768/((1-4 zeta)^3 (1+4 zeta)^(9/2) (1-12 zeta)^(1/2))",
            kind: Improper,
            normalization: None,
            abs_applied: false,
            domain_text: "-1/4 < zeta < 1/12",
            eval: s1_nullify_after,
            domain: |t| open(-0.25, 1.0 / 12.0)(t[0]),
            region: Some(|| interval_region(-0.25, 1.0 / 12.0)),
        },
        ClosedFormPrior {
            id: "s1_volume",
            params: &["zeta"],
            formula: "2 sqrt(3)/(1-8 zeta-48 zeta^2)^(1/2)",
            kind: Unnormalized,
            normalization: Some(PI / 2.0),
            abs_applied: false,
            domain_text: "-1/4 < zeta < 1/12",
            eval: |t| s1_volume(t[0]),
            domain: |t| open(-0.25, 1.0 / 12.0)(t[0]),
            region: Some(|| interval_region(-0.25, 1.0 / 12.0)),
        },
        ClosedFormPrior {
            id: "s2_density",
            params: &["zeta"],
            formula: "4 sqrt(3)/(pi (1+8 zeta-48 zeta^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "-1/12 < zeta < 1/4",
            eval: s2_density,
            domain: |t| open(-1.0 / 12.0, 0.25)(t[0]),
            region: Some(|| interval_region(-1.0 / 12.0, 0.25)),
        },
        ClosedFormPrior {
            id: "s3_density",
            params: &["zeta"],
            formula: "8 sqrt(2)/(pi (1-8 zeta-128 zeta^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "-1/8 < zeta < 1/16",
            eval: s3_density,
            domain: |t| open(-0.125, 0.0625)(t[0]),
            region: Some(|| interval_region(-0.125, 0.0625)),
        },
        ClosedFormPrior {
            id: "s4_volume",
            params: &["zeta"],
            formula: "(12 (3-20 zeta)/((4 zeta-1)(12 zeta-1)(1+20 zeta)))^(1/2)",
            kind: Unnormalized,
            normalization: None,
            abs_applied: false,
            domain_text: "-1/20 < zeta < 1/12",
            eval: |t| s4_volume_squared(t[0]).sqrt(),
            domain: |t| open(-0.05, 1.0 / 12.0)(t[0]),
            region: Some(|| interval_region(-0.05, 1.0 / 12.0)),
        },
        ClosedFormPrior {
            id: "s5_density",
            params: &["zeta"],
            formula: "12/(pi (1-144 zeta^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "-1/12 < zeta < 1/12",
            eval: s5_density,
            domain: |t| open(-1.0 / 12.0, 1.0 / 12.0)(t[0]),
            region: Some(|| interval_region(-1.0 / 12.0, 1.0 / 12.0)),
        },
        ClosedFormPrior {
            id: "s6_volume",
            params: &["zeta"],
            formula: "2 (3-20 zeta)^(1/2)/(1+12 zeta-336 zeta^2+576 zeta^3)^(1/2)",
            kind: Unnormalized,
            normalization: None,
            abs_applied: false,
            domain_text: "-1/(4(3+2 sqrt 3)) < zeta < 1/12",
            eval: s6_volume,
            domain: |t| open(s6_lower_endpoint(), 1.0 / 12.0)(t[0]),
            region: Some(|| interval_region(s6_lower_endpoint(), 1.0 / 12.0)),
        },
        ClosedFormPrior {
            id: "rains_smolin",
            params: &["x"],
            formula: "175/(pi (807599-30625 x^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "|x| < sqrt(807599)/175",
            eval: |t| rains_smolin_density(t[0]),
            domain: |t| t[0].abs() < rains_smolin_half_width(),
            region: Some(|| {
                let u = rains_smolin_half_width();
                interval_region(-u, u)
            }),
        },
        ClosedFormPrior {
            id: "werner_qq_density",
            params: &["eps"],
            formula: "3 sqrt(3)/(pi (4+8 eps-12 eps^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "0 <= eps < 1",
            eval: |t| werner_qq_density(t[0]),
            domain: |t| t[0] >= 0.0 && t[0] < 1.0,
            region: Some(|| Interval::with_flags(0.0, 1.0, false, true).into()),
        },
        ClosedFormPrior {
            id: "twoparam_density",
            params: &["zeta", "eta"],
            formula: "8 sqrt(2)/(pi ((1+4 eta)((1-4 eta)^2-64 zeta^2))^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "-1/4 < eta < 1/4, |zeta| < (1-4 eta)/8",
            eval: |t| twoparam_density(t[0], t[1]),
            domain: |t| open(-0.25, 0.25)(t[1]) && t[0].abs() < (1.0 - 4.0 * t[1]) / 8.0,
            region: Some(twoparam_region),
        },
        ClosedFormPrior {
            id: "twoparam_eta_marginal",
            params: &["eta"],
            formula: "sqrt(2)/(1+4 eta)^(1/2)",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "-1/4 < eta <= 1/4",
            eval: |t| twoparam_eta_marginal(t[0]),
            domain: |t| t[0] > -0.25 && t[0] <= 0.25,
            region: Some(|| Interval::with_flags(-0.25, 0.25, true, false).into()),
        },
        ClosedFormPrior {
            id: "tsallis_q1_prior",
            params: &["b", "s2"],
            formula: "1/(pi (8-s2)^(1/2) (s2-8 b^4)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "0 <= b <= 2 sqrt 2, 2 sqrt 2 b <= s2 < 8, s2 > 8 b^4",
            eval: |t| 1.0 / (PI * (8.0 - t[1]).sqrt() * (t[1] - 8.0 * t[0].powi(4)).sqrt()),
            domain: |t| tsallis_pre(t) && t[1] < 8.0 && t[1] > 8.0 * t[0].powi(4),
            region: Some(tsallis_feasible),
        },
        ClosedFormPrior {
            id: "tsallis_q1_density",
            params: &["b", "s2"],
            formula: "1/(pi (8-s2)^(1/2) (s2^2-8 b^2)^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "0 <= b <= 2 sqrt 2, 2 sqrt 2 b < s2 < 8",
            eval: |t| tsallis_q1_density(t[0], t[1]),
            domain: |t| tsallis_pre(t) && t[1] < 8.0 && t[1] > TSALLIS_B_MAX * t[0],
            region: Some(tsallis_feasible),
        },
        ClosedFormPrior {
            id: "tsallis_qhalf_prior",
            params: &["b", "s2"],
            formula: "32/(pi (32+4 b^2+(s2-8) s2)^(3/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "0 <= b <= 2 sqrt 2, 2 sqrt 2 b <= s2 <= 8",
            eval: |t| tsallis_qhalf_raw(t[0], t[1]),
            domain: tsallis_pre,
            region: Some(tsallis_feasible),
        },
        ClosedFormPrior {
            id: "threeparam_volume",
            params: &["zeta", "eta", "kappa"],
            formula: "8/((-1+4z-4e-4k)(1+4z+4e-4k)(1+4z-4e+4k)(-1+4z+4e+4k))^(1/2)",
            kind: Unnormalized,
            normalization: Some(PI * PI / 8.0),
            abs_applied: false,
            domain_text: "all four Bell weights positive",
            eval: threeparam_volume,
            domain: |t| threeparam_factors(t).iter().all(|&f| f > 0.0),
            region: Some(threeparam_region),
        },
        ClosedFormPrior {
            id: "dirichlet",
            params: &["x", "y", "z"],
            formula: "1/(pi^2 (x y z (1-x-y-z))^(1/2))",
            kind: Normalized,
            normalization: Some(1.0),
            abs_applied: false,
            domain_text: "x, y, z > 0, x+y+z < 1",
            eval: dirichlet,
            domain: simplex_interior,
            region: Some(simplex_region),
        },
        ClosedFormPrior {
            id: "unitary_volume",
            params: &["x", "y", "z", "w"],
            formula: "((y-z)^2)^(1/2)/(8 (x y z (y+z)(1-x-y-z))^(1/2))",
            kind: Unnormalized,
            normalization: Some(PI * PI / 3.0),
            abs_applied: false,
            domain_text: "x, y, z > 0, x+y+z < 1, 0 <= w <= 2 pi",
            eval: |t| unitary_volume(t[0], t[1], t[2]),
            domain: |t| simplex_interior(t) && (0.0..=2.0 * PI).contains(&t[3]),
            region: Some(|| crate::families::family_diag4_unitary().feasible),
        },
        ClosedFormPrior {
            id: "werner_qutrit_ratio",
            params: &["eps"],
            formula: "(-16 (2+7e)(496+14384e+179472e^2+1269568e^3+5676488e^4+16753596e^5+31419646e^6+31863023e^7+14859999e^8) / (3 (-1+e)^5 (1+8e)(31+161e)(31+603e+3993e^2+8981e^3)))^(1/2)",
            kind: Improper,
            normalization: None,
            abs_applied: false,
            domain_text: "0 <= eps < 1",
            eval: |t| werner_qutrit_ratio(t[0]),
            domain: |t| t[0] >= 0.0 && t[0] < 1.0,
            region: Some(|| Interval::with_flags(0.0, 1.0, false, true).into()),
        },
        ClosedFormPrior {
            id: "werner_qubit_qutrit_ratio",
            params: &["eps"],
            formula: "(10 (1+2e)(26+286e+1236e^2+2506e^3+2021e^4) / ((-1+e)^2 (1+5e)(13+32e)(13+126e+429e^2+512e^3)))^(1/2)",
            kind: Improper,
            normalization: None,
            abs_applied: false,
            domain_text: "0 <= eps < 1",
            eval: |t| werner_qubit_qutrit_ratio(t[0]),
            domain: |t| t[0] >= 0.0 && t[0] < 1.0,
            region: Some(|| Interval::with_flags(0.0, 1.0, false, true).into()),
        },
    ]
}

pub fn catalog_entry(id: &str) -> Result<ClosedFormPrior> {
    catalog()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))
}

/// The univariate marginals.
pub fn marginals() -> Vec<ClosedFormPrior> {
    const IDS: [&str; 3] = ["rhop_v_marginal", "rhop_v_marginal_nullify_after", "twoparam_eta_marginal"];
    catalog().into_iter().filter(|p| IDS.contains(&p.id)).collect()
}

pub fn export_catalog() -> Vec<CatalogEntry> {
    catalog().iter().map(ClosedFormPrior::export).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_1d, integrate_interval, integrate_region, QuadratureConfig};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn ids_are_unique() {
        let mut ids: Vec<_> = catalog().iter().map(|p| p.id).collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn hand_evaluations() {
        assert!(close(s1_volume(0.0), 2.0 * 3f64.sqrt(), 1e-15));
        // 1 - 8(0.05) - 48(0.0025) = 0.48
        assert!(close(s1_volume(0.05), 2.0 * 3f64.sqrt() / 0.48f64.sqrt(), 1e-14));
        let d = catalog_entry("dirichlet").unwrap().eval(&[0.25, 0.25, 0.25]).unwrap();
        assert!(close(d, 16.0 / (PI * PI), 1e-14));
        assert!(close(werner_qq_density(0.0), 3.0 * 3f64.sqrt() / (2.0 * PI), 1e-15));
        // 4 + 4 - 3 = 5
        assert!(close(werner_qq_density(0.5), 3.0 * 3f64.sqrt() / (PI * 5f64.sqrt()), 1e-15));
        assert!(close(s4_volume_squared(0.0), 36.0, 1e-15));
        assert!(close(catalog_entry("s6_volume").unwrap().eval(&[0.0]).unwrap(), 2.0 * 3f64.sqrt(), 1e-15));
        let t = catalog_entry("threeparam_volume").unwrap();
        assert!(close(t.eval(&[0.0, 0.0, 0.0]).unwrap(), 8.0, 1e-15));
        assert!(close(unitary_volume(0.1, 0.3, 0.2), 0.1 / (8.0 * (0.1 * 0.3 * 0.2 * 0.5 * 0.4f64).sqrt()), 1e-14));
    }

    #[test]
    fn qutrit_ratio_parts_at_zero() {
        let (num, den) = werner_qutrit_parts(0.0);
        assert_eq!(num, -16.0 * 2.0 * 496.0);
        assert_eq!(den, -3.0 * 31.0 * 31.0);
        assert!(close(werner_qutrit_ratio(0.0), (16.0 * 2.0 * 496.0 / (3.0 * 961.0f64)).sqrt(), 1e-15));
        let (n2, d2) = werner_qubit_qutrit_parts(0.0);
        assert_eq!((n2, d2), (260.0, 169.0));
    }

    #[test]
    fn qutrit_ratio_horner_matches_direct_sum() {
        let e: f64 = 0.37;
        let c = [496.0, 14384.0, 179472.0, 1269568.0, 5676488.0, 16753596.0, 31419646.0, 31863023.0, 14859999.0];
        let direct: f64 = c.iter().enumerate().map(|(i, a)| a * e.powi(i as i32)).sum();
        let (num, _) = werner_qutrit_parts(e);
        assert!(close(num, -16.0 * (2.0 + 7.0 * e) * direct, 1e-13));
    }

    #[test]
    fn tsallis_examples() {
        assert!(matches!(tsallis_q1_prior(1.0, 4.0), Err(Error::Domain(_))));
        assert!(close(tsallis_q1_prior(0.5, 4.0).unwrap(), 1.0 / (2.0 * PI * 3.5f64.sqrt()), 1e-14));
        assert!(close(tsallis_qhalf_prior(0.0, 8.0).unwrap(), 32.0 / (PI * 32f64.powf(1.5)), 1e-14));
        assert!(matches!(tsallis_qhalf_prior(3.0, 8.0), Err(Error::Domain(_))));
        assert!(close(tsallis_qhalf_sep_upper(4.0 - TSALLIS_B_MAX), TSALLIS_B_MAX * (4.0 - TSALLIS_B_MAX), 1e-12));
    }

    #[test]
    fn domain_and_arity_errors() {
        let p = catalog_entry("s1_volume").unwrap();
        assert!(matches!(p.eval(&[0.2]), Err(Error::Domain(_))));
        assert!(matches!(p.eval(&[0.0, 1.0]), Err(Error::Usage(_))));
        assert!(matches!(catalog_entry("nope"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn normalized_one_dimensional_entries_integrate_to_one() {
        let cfg = QuadratureConfig::one_dim();
        for p in catalog() {
            if p.arity() != 1 || p.kind == PriorKind::Improper {
                continue;
            }
            let Some(RegionSpec::Interval(iv)) = p.region() else { continue };
            let Some(norm) = p.normalization else { continue };
            let r = integrate_interval(&|x| p.eval_raw(&[x]), &iv, &cfg).unwrap();
            assert!(close(r.value, norm, 1e-9), "{}: {} vs {}", p.id, r.value, norm);
        }
    }

    #[test]
    fn rains_smolin_normalized() {
        let u = rains_smolin_half_width();
        assert!(close(u, 5.13523, 1e-5));
        let r = integrate_interval(&rains_smolin_density, &Interval::singular(-u, u), &QuadratureConfig::one_dim()).unwrap();
        assert!(close(r.value, 1.0, 1e-9));
    }

    #[test]
    fn v_marginals() {
        let cfg = QuadratureConfig::one_dim();
        let r = integrate_interval(&rhop_v_marginal, &Interval::with_flags(0.0, 1.0, false, true), &cfg).unwrap();
        assert!(close(r.value, 1.0, 1e-9));
        let mut last = 0.0;
        for k in 2..7 {
            let hi = 1.0 - 10f64.powi(-k);
            let m = integrate_1d(&|v| rhop_v_marginal_signed(v).abs(), 1e-3, hi, &cfg).unwrap().value;
            assert!(m > last + 0.3);
            last = m;
        }
    }

    #[test]
    fn two_dimensional_normalizations() {
        let cfg = QuadratureConfig::multi_dim();
        for id in ["twoparam_density", "tsallis_q1_density", "tsallis_qhalf_prior"] {
            let p = catalog_entry(id).unwrap();
            let r = integrate_region(&|t: &[f64]| p.eval_raw(t), &p.region().unwrap(), &cfg).unwrap();
            assert!(close(r.value, 1.0, 1e-6), "{id}: {}", r.value);
        }
    }

    #[test]
    fn export_round_trips() {
        let entries = export_catalog();
        let s = serde_json::to_string(&entries).unwrap();
        let back: Vec<CatalogEntry> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, entries);
    }
}
