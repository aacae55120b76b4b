//! Registry of parameterized density-matrix families.
//!
//! Every family is a map θ ↦ ρ(θ) with analytic derivatives, a feasible
//! region for integration and a description of its separable part.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    c, pauli_two_qubit, re, ComplexSquareMatrix, DensityMatrix, Dims, HermitianMatrix, Tolerances, I, ONE, ZERO,
};
use crate::quadrature::find_root_bisect;
use crate::region::{simplex3, Interval, Level, NestedRegion, RegionKind, RegionSpec};

/// θ ↦ ρ(θ) together with ∂ρ/∂θᵢ.
pub trait ParamMap: Send + Sync {
    fn dim(&self) -> usize;
    fn nparams(&self) -> usize;
    fn rho(&self, theta: &[f64]) -> ComplexSquareMatrix;
    fn drho(&self, theta: &[f64]) -> Vec<ComplexSquareMatrix>;
    fn is_affine(&self) -> bool {
        false
    }
}

/// ρ(θ) = B₀ + Σ θᵢ Bᵢ.
#[derive(Debug, Clone)]
pub struct AffineMap {
    base: ComplexSquareMatrix,
    basis: Vec<ComplexSquareMatrix>,
}

impl AffineMap {
    pub fn new(base: ComplexSquareMatrix, basis: Vec<ComplexSquareMatrix>) -> Self {
        assert!(basis.iter().all(|b| b.dim() == base.dim()));
        Self { base, basis }
    }

    /// Builds the map from an evaluator that is affine in θ, probing it at
    /// the origin and at the unit vectors.
    pub fn probe(k: usize, f: impl Fn(&[f64]) -> ComplexSquareMatrix) -> Self {
        let zero = vec![0.0; k];
        let base = f(&zero);
        let basis = (0..k)
            .map(|i| {
                let mut e = zero.clone();
                e[i] = 1.0;
                f(&e).sub(&base)
            })
            .collect();
        Self { base, basis }
    }
}

impl ParamMap for AffineMap {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn nparams(&self) -> usize {
        self.basis.len()
    }
    fn rho(&self, theta: &[f64]) -> ComplexSquareMatrix {
        let mut m = self.base.clone();
        for (t, b) in theta.iter().zip(&self.basis) {
            if *t != 0.0 {
                m.axpy(*t, b);
            }
        }
        m
    }
    fn drho(&self, _theta: &[f64]) -> Vec<ComplexSquareMatrix> {
        self.basis.clone()
    }
    fn is_affine(&self) -> bool {
        true
    }
}

/// U(w) diag(x, y, z, 1−x−y−z) U(w)†, with U(w) a rotation by w in the
/// plane of the second and third basis vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct RotatedDiagonalMap;

impl RotatedDiagonalMap {
    pub fn rotation(w: f64) -> ComplexSquareMatrix {
        let (s, co) = w.sin_cos();
        ComplexSquareMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, co, s, 0.0],
            &[0.0, -s, co, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ])
    }

    fn rotation_derivative(w: f64) -> ComplexSquareMatrix {
        let (s, co) = w.sin_cos();
        ComplexSquareMatrix::from_real_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, -s, co, 0.0],
            &[0.0, -co, -s, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ])
    }

    fn diag(theta: &[f64]) -> ComplexSquareMatrix {
        let (x, y, z) = (theta[0], theta[1], theta[2]);
        ComplexSquareMatrix::diag(&[x, y, z, 1.0 - x - y - z])
    }
}

impl ParamMap for RotatedDiagonalMap {
    fn dim(&self) -> usize {
        4
    }
    fn nparams(&self) -> usize {
        4
    }
    fn rho(&self, theta: &[f64]) -> ComplexSquareMatrix {
        let u = Self::rotation(theta[3]);
        u.matmul(&Self::diag(theta)).matmul(&u.adjoint())
    }
    fn drho(&self, theta: &[f64]) -> Vec<ComplexSquareMatrix> {
        let u = Self::rotation(theta[3]);
        let ud = u.adjoint();
        let mut out: Vec<ComplexSquareMatrix> = (0..3)
            .map(|i| {
                let mut d = [0.0; 4];
                d[i] = 1.0;
                d[3] = -1.0;
                u.matmul(&ComplexSquareMatrix::diag(&d)).matmul(&ud)
            })
            .collect();
        let du = Self::rotation_derivative(theta[3]);
        let dm = Self::diag(theta);
        let a = du.matmul(&dm).matmul(&ud);
        out.push(a.add(&a.adjoint()));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    MetricEngine,
    /// A printed closed form (catalog id) is the default prior.
    ClosedForm(&'static str),
}

#[derive(Debug, Clone)]
pub enum SeparableSpec {
    /// Closed-form separable region; for 2⊗2 and 2⊗3 it coincides with the PPT region.
    Region(RegionSpec),
    /// No closed region; PPT is decisive and is evaluated pointwise.
    PptPointwise,
    /// Range taken from the literature because PPT is not decisive.
    External { region: RegionSpec, source: &'static str },
    NotApplicable(&'static str),
}

#[derive(Clone)]
pub struct DensityFamily {
    pub id: &'static str,
    pub description: &'static str,
    pub dims: Dims,
    pub param_names: Vec<&'static str>,
    map: Arc<dyn ParamMap>,
    pub feasible: RegionSpec,
    pub separable: SeparableSpec,
    /// Further named regions (sub-masses, alternative limits).
    pub extra_regions: Vec<(&'static str, RegionSpec)>,
    pub prior_mode: PriorMode,
    /// Interior points where the 1D integrand is not smooth.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for DensityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFamily")
            .field("id", &self.id)
            .field("dims", &self.dims)
            .field("params", &self.param_names)
            .finish_non_exhaustive()
    }
}

impl DensityFamily {
    pub fn k(&self) -> usize {
        self.param_names.len()
    }

    pub fn is_affine(&self) -> bool {
        self.map.is_affine()
    }

    fn check_arity(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.k() {
            return Err(Error::Usage(format!(
                "family {} takes {} parameters, got {}",
                self.id,
                self.k(),
                theta.len()
            )));
        }
        Ok(())
    }

    /// ρ(θ) without a positivity check (the map is Hermitian with unit trace by construction).
    pub fn rho(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_arity(theta)?;
        Ok(DensityMatrix::new_unchecked(self.map.rho(theta), self.dims))
    }

    /// ρ(θ) validated as a feasible state.
    pub fn rho_checked(&self, theta: &[f64], tol: &Tolerances) -> Result<DensityMatrix> {
        self.check_arity(theta)?;
        DensityMatrix::with_tolerances(self.map.rho(theta), self.dims, tol)
    }

    pub fn drho(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        self.check_arity(theta)?;
        Ok(self
            .map
            .drho(theta)
            .into_iter()
            .map(HermitianMatrix::new_unchecked)
            .collect())
    }

    pub fn min_eigenvalue(&self, theta: &[f64]) -> Result<f64> {
        self.rho(theta)?.min_eigenvalue()
    }

    pub fn is_feasible(&self, theta: &[f64], tol: &Tolerances) -> Result<bool> {
        Ok(self.min_eigenvalue(theta)? >= -tol.psd)
    }

    pub fn feasible_interval(&self) -> Option<Interval> {
        self.feasible.as_interval()
    }

    pub fn extra_region(&self, name: &str) -> Option<&RegionSpec> {
        self.extra_regions.iter().find(|(n, _)| *n == name).map(|(_, r)| r)
    }
}

fn one_param(
    id: &'static str,
    description: &'static str,
    name: &'static str,
    dims: Dims,
    map: AffineMap,
    feasible: Interval,
    separable: SeparableSpec,
) -> DensityFamily {
    DensityFamily {
        id,
        description,
        dims,
        param_names: vec![name],
        map: Arc::new(map),
        feasible: feasible.into(),
        separable,
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

fn correlations(
    id: &'static str,
    description: &'static str,
    pattern: fn(f64) -> ([f64; 3], [f64; 3], [[f64; 3]; 3]),
    feasible: (f64, f64),
    separable: (f64, f64),
) -> DensityFamily {
    let map = AffineMap::probe(1, |t| {
        let (a, b, z) = pattern(t[0]);
        pauli_two_qubit(a, b, z).matrix().clone()
    });
    one_param(
        id,
        description,
        "zeta",
        Dims::Bipartite(2, 2),
        map,
        Interval::singular(feasible.0, feasible.1),
        SeparableSpec::Region(Interval::singular(separable.0, separable.1).into()),
    )
}

const NO_LOCAL: [f64; 3] = [0.0; 3];

pub fn family_s1_equal_intra() -> DensityFamily {
    correlations(
        "s1_equal_intra",
        "two qubits, equal intra-directional correlations zeta",
        |z| (NO_LOCAL, NO_LOCAL, [[z, 0.0, 0.0], [0.0, z, 0.0], [0.0, 0.0, z]]),
        (-0.25, 1.0 / 12.0),
        (-1.0 / 12.0, 1.0 / 12.0),
    )
}

pub fn family_s2_two_pos_one_neg() -> DensityFamily {
    correlations(
        "s2_two_pos_one_neg",
        "two qubits, xx = yy = zeta, zz = -zeta",
        |z| (NO_LOCAL, NO_LOCAL, [[z, 0.0, 0.0], [0.0, z, 0.0], [0.0, 0.0, -z]]),
        (-1.0 / 12.0, 0.25),
        (-1.0 / 12.0, 1.0 / 12.0),
    )
}

pub fn family_s3_equal_inter() -> DensityFamily {
    correlations(
        "s3_equal_inter",
        "two qubits, all six inter-directional correlations zeta",
        |z| (NO_LOCAL, NO_LOCAL, [[0.0, z, z], [z, 0.0, z], [z, z, 0.0]]),
        (-0.125, 0.0625),
        (-0.0625, 0.0625),
    )
}

pub fn family_s4_intra_vs_inter() -> DensityFamily {
    correlations(
        "s4_intra_vs_inter",
        "two qubits, intra-directional zeta, inter-directional -zeta",
        |z| (NO_LOCAL, NO_LOCAL, [[z, -z, -z], [-z, z, -z], [-z, -z, z]]),
        (-0.05, 1.0 / 12.0),
        (-0.05, 0.05),
    )
}

pub fn family_s5_all_nine() -> DensityFamily {
    correlations(
        "s5_all_nine",
        "two qubits, all nine correlations zeta",
        |z| (NO_LOCAL, NO_LOCAL, [[z; 3]; 3]),
        (-1.0 / 12.0, 1.0 / 12.0),
        (-1.0 / 12.0, 1.0 / 12.0),
    )
}

/// Lower feasible endpoint of the all-fifteen family, −1/(4(3+2√3)).
pub fn s6_lower_endpoint() -> f64 {
    -1.0 / (4.0 * (3.0 + 2.0 * 3f64.sqrt()))
}

pub fn family_s6_all_fifteen() -> DensityFamily {
    let lo = s6_lower_endpoint();
    correlations(
        "s6_all_fifteen",
        "two qubits, all fifteen Pauli coefficients zeta",
        |z| ([z; 3], [z; 3], [[z; 3]; 3]),
        (lo, 1.0 / 12.0),
        (lo, 1.0 / 12.0),
    )
}

/// Feasible half-width of the antisymmetric family, 1/(8√3).
pub fn s7_half_width() -> f64 {
    1.0 / (8.0 * 3f64.sqrt())
}

pub fn family_s7_antisym_inter() -> DensityFamily {
    let h = s7_half_width();
    correlations(
        "s7_antisym_inter",
        "two qubits, inter-directional correlations zeta_ij = zeta = -zeta_ji (i<j)",
        |z| (NO_LOCAL, NO_LOCAL, [[0.0, z, z], [-z, 0.0, z], [-z, -z, 0.0]]),
        (-h, h),
        (-h, h),
    )
}

/// (1−ε) I/d + ε |ψ⟩⟨ψ| for a unit vector ψ.
fn werner_map(psi: &[C], d: usize) -> AffineMap {
    let proj = ComplexSquareMatrix::from_fn(d, |i, j| psi[i] * psi[j].conj());
    let mixed = ComplexSquareMatrix::identity(d).scale_real(1.0 / d as f64);
    AffineMap::new(mixed.clone(), vec![proj.sub(&mixed)])
}

type C = crate::linalg::C64;

fn basis_vector(d: usize, entries: &[(usize, f64)]) -> Vec<C> {
    let mut v = vec![ZERO; d];
    for &(i, a) in entries {
        v[i] = re(a);
    }
    v
}

/// Singlet (|01⟩ − |10⟩)/√2.
pub fn singlet_vector() -> Vec<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    basis_vector(4, &[(1, s), (2, -s)])
}

pub fn family_werner_qq() -> DensityFamily {
    one_param(
        "werner_qq",
        "two-qubit Werner states (1-eps) I/4 + eps |psi-><psi-|",
        "eps",
        Dims::Bipartite(2, 2),
        werner_map(&singlet_vector(), 4),
        Interval::with_flags(0.0, 1.0, false, true),
        SeparableSpec::Region(Interval::new(0.0, 1.0 / 3.0).into()),
    )
}

pub fn family_werner_qutrit() -> DensityFamily {
    let s = 1.0 / 3f64.sqrt();
    let psi = basis_vector(9, &[(0, s), (4, s), (8, s)]);
    let mut f = one_param(
        "werner_qutrit",
        "two-qutrit Werner states (1-eps) I/9 + eps |Phi><Phi|, Phi = sum |ii>/sqrt(3)",
        "eps",
        Dims::Bipartite(3, 3),
        werner_map(&psi, 9),
        Interval::with_flags(0.0, 1.0, false, true),
        SeparableSpec::External {
            region: Interval::new(0.0, 0.25).into(),
            source: "literature separability range for two-qutrit Werner states",
        },
    );
    f.prior_mode = PriorMode::ClosedForm("werner_qutrit_ratio");
    f
}

pub fn family_werner_qubit_qutrit() -> DensityFamily {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // |00> and |11> in the qubit-first 2x3 ordering (index 3a + b)
    let psi = basis_vector(6, &[(0, s), (4, s)]);
    let mut f = one_param(
        "werner_qubit_qutrit",
        "qubit-qutrit Werner states (1-eps) I/6 + eps |psi><psi|, psi = (|00>+|11>)/sqrt(2)",
        "eps",
        Dims::Bipartite(2, 3),
        werner_map(&psi, 6),
        Interval::with_flags(0.0, 1.0, false, true),
        SeparableSpec::Region(Interval::new(0.0, 0.25).into()),
    );
    f.prior_mode = PriorMode::ClosedForm("werner_qubit_qutrit_ratio");
    f
}

/// The explicit six-level matrix, qubit ⊗ qutrit.
pub fn sixlevel_matrix(nu: f64) -> ComplexSquareMatrix {
    let r3 = 3f64.sqrt();
    let a = 1.0 + 2.0 * r3 * nu;
    let b = 1.0 - 4.0 * r3 * nu;
    let cc = 1.0 - 2.0 * r3 * nu;
    let d = 1.0 + 4.0 * r3 * nu;
    let n6 = re(6.0 * nu);
    let i12 = c(0.0, 12.0 * nu);
    let z = ZERO;
    let rows = [
        [re(a), z, n6, z, z, z],
        [z, re(a), z, z, z, -i12],
        [n6, z, re(b), z, z, z],
        [z, z, z, re(cc), z, -n6],
        [z, z, z, z, re(cc), z],
        [z, i12, z, -n6, z, re(d)],
    ];
    let flat: Vec<C> = rows.iter().flatten().copied().collect();
    ComplexSquareMatrix::from_row_slice(6, &flat).scale_real(1.0 / 6.0)
}

/// Feasible endpoints of the six-level family (roots of the minimum eigenvalue).
pub const SIXLEVEL_FEASIBLE: (f64, f64) = (-0.054_664_676_468_525_075, 0.102_770_497_214_820_62);

/// Upper separable endpoint of the six-level family (root of the minimum PT eigenvalue).
pub const SIXLEVEL_SEPARABLE_HI: f64 = 0.054_664_676_468_525_075;

pub fn family_sixlevel() -> DensityFamily {
    let (lo, hi) = SIXLEVEL_FEASIBLE;
    let mut f = one_param(
        "sixlevel_s1",
        "one-parameter six-level (qubit x qutrit) family with fully mixed reductions",
        "nu",
        Dims::Bipartite(2, 3),
        AffineMap::probe(1, |t| sixlevel_matrix(t[0])),
        Interval::singular(lo, hi),
        SeparableSpec::Region(Interval::with_flags(lo, SIXLEVEL_SEPARABLE_HI, true, false).into()),
    );
    f.breakpoints = vec![0.0];
    f
}

pub fn family_twoparam_intra() -> DensityFamily {
    let map = AffineMap::probe(2, |t| {
        let (z, e) = (t[0], t[1]);
        pauli_two_qubit(NO_LOCAL, NO_LOCAL, [[z, 0.0, 0.0], [0.0, z, 0.0], [0.0, 0.0, e]])
            .matrix()
            .clone()
    });
    // integration order: eta outer, zeta inner
    let swap = |u: &[f64]| vec![u[1], u[0]];
    let feasible = NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("eta", -0.25, 0.25),
            Level::new("zeta", |o| (-1.0 + 4.0 * o[0]) / 8.0, |o| (1.0 - 4.0 * o[0]) / 8.0),
        ],
    )
    .with_transform(1.0, swap);
    let eta_pos = NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("eta", 0.0, 0.25).flags(false, true),
            Level::new("zeta", |o| (-1.0 + 4.0 * o[0]) / 8.0, |o| (1.0 - 4.0 * o[0]) / 8.0),
        ],
    )
    .with_transform(1.0, swap);
    let eta_neg = NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("eta", -0.25, 0.0).flags(true, false),
            Level::new("zeta", |o| -(1.0 + 4.0 * o[0]) / 8.0, |o| (1.0 + 4.0 * o[0]) / 8.0).flags(false, false),
        ],
    )
    .with_transform(1.0, swap);
    DensityFamily {
        id: "twoparam_intra",
        description: "two qubits, xx = yy = zeta, zz = eta",
        dims: Dims::Bipartite(2, 2),
        param_names: vec!["zeta", "eta"],
        map: Arc::new(map),
        feasible: feasible.into(),
        separable: SeparableSpec::Region(RegionSpec::Union(vec![eta_pos.clone().into(), eta_neg.clone().into()])),
        extra_regions: vec![("separable_eta_pos", eta_pos.into()), ("separable_eta_neg", eta_neg.into())],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

/// κ from the substitution υ = −1 + 4ζ − 4η − 4κ.
fn kappa_of(zeta: f64, upsilon: f64, eta: f64) -> f64 {
    -0.25 + zeta - eta - upsilon / 4.0
}

fn threeparam_region(zeta: (f64, f64), eta_lo: fn(&[f64]) -> f64, eta_hi: fn(&[f64]) -> f64, mirror: bool) -> NestedRegion {
    NestedRegion::new(
        RegionKind::NestedLimits,
        vec![
            Level::constant("zeta", zeta.0, zeta.1),
            Level::new("upsilon", |o| 2.0 * (-1.0 + 4.0 * o[0]), |_| 0.0),
            Level::new("eta", eta_lo, eta_hi),
        ],
    )
    .with_transform(0.25, move |u| {
        let (z, ups, e) = (u[0], u[1], u[2]);
        let k = kappa_of(z, ups, e);
        if mirror {
            vec![-z, -e, k]
        } else {
            vec![z, e, k]
        }
    })
}

pub fn family_threeparam_intra() -> DensityFamily {
    let map = AffineMap::probe(3, |t| {
        pauli_two_qubit(NO_LOCAL, NO_LOCAL, [[t[0], 0.0, 0.0], [0.0, t[1], 0.0], [0.0, 0.0, t[2]]])
            .matrix()
            .clone()
    });
    let feasible = threeparam_region((-0.25, 0.25), |o| (-2.0 - o[1]) / 8.0, |o| (8.0 * o[0] - o[1]) / 8.0, false);
    let printed_sep = threeparam_region((0.0, 0.25), |o| (-2.0 + 8.0 * o[0] - o[1]) / 8.0, |o| -o[1] / 8.0, false);
    // (ζ, η, κ) → (−ζ, −η, κ) swaps the Bell weights pairwise and leaves PPT invariant
    let mirrored = threeparam_region((0.0, 0.25), |o| (-2.0 + 8.0 * o[0] - o[1]) / 8.0, |o| -o[1] / 8.0, true);
    DensityFamily {
        id: "threeparam_intra",
        description: "two qubits, independent intra-directional correlations zeta, eta, kappa",
        dims: Dims::Bipartite(2, 2),
        param_names: vec!["zeta", "eta", "kappa"],
        map: Arc::new(map),
        feasible: feasible.into(),
        separable: SeparableSpec::Region(RegionSpec::Union(vec![printed_sep.clone().into(), mirrored.into()])),
        extra_regions: vec![("printed_separable_limits", printed_sep.into())],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

pub fn family_diag4() -> DensityFamily {
    let map = AffineMap::probe(3, |t| ComplexSquareMatrix::diag(&[t[0], t[1], t[2], 1.0 - t[0] - t[1] - t[2]]));
    let simplex = simplex3(["x", "y", "z"]);
    DensityFamily {
        id: "diag4",
        description: "diagonal two-qubit states diag(x, y, z, 1-x-y-z)",
        dims: Dims::Bipartite(2, 2),
        param_names: vec!["x", "y", "z"],
        map: Arc::new(map),
        feasible: simplex.clone().into(),
        separable: SeparableSpec::Region(simplex.into()),
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

pub fn family_diag4_unitary() -> DensityFamily {
    let mut levels = simplex3(["x", "y", "z"]).levels;
    levels.push(Level::constant("w", 0.0, 2.0 * PI).flags(false, false));
    DensityFamily {
        id: "diag4_unitary",
        description: "diagonal two-qubit states rotated by a one-parameter unitary U(w)",
        dims: Dims::Bipartite(2, 2),
        param_names: vec!["x", "y", "z", "w"],
        map: Arc::new(RotatedDiagonalMap),
        feasible: NestedRegion::new(RegionKind::Product, levels).into(),
        separable: SeparableSpec::PptPointwise,
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

/// The Hermitian basis of the eight-parameter 3×3 parameterization, order v, x, y, z, s, t, u, w.
fn rho_q_map() -> AffineMap {
    let h = 0.5;
    let mut basis = Vec::with_capacity(8);
    let mut m = |entries: &[(usize, usize, C)]| {
        let mut a = ComplexSquareMatrix::zeros(3);
        for &(i, j, v) in entries {
            a.set(i, j, v);
        }
        basis.push(a);
    };
    m(&[(0, 0, re(h)), (1, 1, re(-1.0)), (2, 2, re(h))]); // v
    m(&[(0, 2, re(h)), (2, 0, re(h))]); // x
    m(&[(0, 2, -I * h), (2, 0, I * h)]); // y
    m(&[(0, 0, re(h)), (2, 2, re(-h))]); // z
    m(&[(1, 2, re(h)), (2, 1, re(h))]); // s
    m(&[(1, 2, -I * h), (2, 1, I * h)]); // t
    m(&[(0, 1, re(h)), (1, 0, re(h))]); // u
    m(&[(0, 1, -I * h), (1, 0, I * h)]); // w
    let mut base = ComplexSquareMatrix::zeros(3);
    base.set(1, 1, ONE);
    AffineMap::new(base, basis)
}

pub fn family_rho_q() -> DensityFamily {
    DensityFamily {
        id: "rho_q",
        description: "eight-parameter 3x3 density matrices (v, x, y, z, s, t, u, w)",
        dims: Dims::Single(3),
        param_names: vec!["v", "x", "y", "z", "s", "t", "u", "w"],
        map: Arc::new(rho_q_map()),
        feasible: RegionSpec::Unspecified("eight-dimensional integration is not performed".into()),
        separable: SeparableSpec::NotApplicable("single system"),
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

type RadiusFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Cartesian coordinates inside a ball whose radius depends on the outer
/// variables; `depth` is the number of variables preceding the ball.
fn ball_levels(radius: RadiusFn, names: [&str; 3], depth: usize) -> Vec<Level> {
    let half = |r: RadiusFn, used: usize, sign: f64| {
        move |o: &[f64]| {
            let rest: f64 = o[depth..depth + used].iter().map(|c| c * c).sum();
            sign * (r(o).powi(2) - rest).max(0.0).sqrt()
        }
    };
    (0..3)
        .map(|used| Level::new(names[used], half(radius.clone(), used, -1.0), half(radius.clone(), used, 1.0)))
        .collect()
}

pub fn family_rho_p() -> DensityFamily {
    let map = AffineMap::probe(4, |t| {
        let mut full = [0.0; 8];
        full[..4].copy_from_slice(t);
        rho_q_map().rho(&full)
    });
    let mut levels = vec![Level::constant("v", 0.0, 1.0)];
    levels.extend(ball_levels(Arc::new(|o: &[f64]| o[0]), ["x", "y", "z"], 1));
    DensityFamily {
        id: "rho_p",
        description: "four-parameter 3x3 restriction (v, x, y, z) with s = t = u = w = 0",
        dims: Dims::Single(3),
        param_names: vec!["v", "x", "y", "z"],
        map: Arc::new(map),
        feasible: NestedRegion::new(RegionKind::NestedLimits, levels).into(),
        separable: SeparableSpec::NotApplicable("single system"),
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

pub fn family_bloch2() -> DensityFamily {
    let map = AffineMap::probe(3, |t| {
        use crate::linalg::pauli;
        let mut m = pauli(0).scale_real(0.5);
        for i in 0..3 {
            m.axpy(0.5 * t[i], &pauli(i + 1));
        }
        m
    });
    DensityFamily {
        id: "bloch2",
        description: "single qubit in Bloch coordinates (x, y, z)",
        dims: Dims::Single(2),
        param_names: vec!["x", "y", "z"],
        map: Arc::new(map),
        feasible: NestedRegion::new(RegionKind::NestedLimits, ball_levels(Arc::new(|_: &[f64]| 1.0), ["x", "y", "z"], 0)).into(),
        separable: SeparableSpec::NotApplicable("single system"),
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

/// All fifteen Pauli coefficients: a₁..a₃, b₁..b₃, then ζ row-major.
pub fn family_twoqubit_general() -> DensityFamily {
    let map = AffineMap::probe(15, |t| {
        let a = [t[0], t[1], t[2]];
        let b = [t[3], t[4], t[5]];
        let z = [[t[6], t[7], t[8]], [t[9], t[10], t[11]], [t[12], t[13], t[14]]];
        pauli_two_qubit(a, b, z).matrix().clone()
    });
    DensityFamily {
        id: "twoqubit_general",
        description: "general two-qubit state in the Pauli basis (15 parameters)",
        dims: Dims::Bipartite(2, 2),
        param_names: vec![
            "a1", "a2", "a3", "b1", "b2", "b3", "zxx", "zxy", "zxz", "zyx", "zyy", "zyz", "zzx", "zzy", "zzz",
        ],
        map: Arc::new(map),
        feasible: RegionSpec::Unspecified("fifteen-dimensional integration is not performed".into()),
        separable: SeparableSpec::PptPointwise,
        extra_regions: vec![],
        prior_mode: PriorMode::MetricEngine,
        breakpoints: vec![],
    }
}

pub const FAMILY_IDS: [&str; 19] = [
    "s1_equal_intra",
    "s2_two_pos_one_neg",
    "s3_equal_inter",
    "s4_intra_vs_inter",
    "s5_all_nine",
    "s6_all_fifteen",
    "s7_antisym_inter",
    "werner_qq",
    "twoparam_intra",
    "threeparam_intra",
    "diag4",
    "diag4_unitary",
    "werner_qutrit",
    "sixlevel_s1",
    "werner_qubit_qutrit",
    "rho_q",
    "rho_p",
    "bloch2",
    "twoqubit_general",
];

pub fn family(id: &str) -> Result<DensityFamily> {
    Ok(match id {
        "s1_equal_intra" => family_s1_equal_intra(),
        "s2_two_pos_one_neg" => family_s2_two_pos_one_neg(),
        "s3_equal_inter" => family_s3_equal_inter(),
        "s4_intra_vs_inter" => family_s4_intra_vs_inter(),
        "s5_all_nine" => family_s5_all_nine(),
        "s6_all_fifteen" => family_s6_all_fifteen(),
        "s7_antisym_inter" => family_s7_antisym_inter(),
        "werner_qq" => family_werner_qq(),
        "twoparam_intra" => family_twoparam_intra(),
        "threeparam_intra" => family_threeparam_intra(),
        "diag4" => family_diag4(),
        "diag4_unitary" => family_diag4_unitary(),
        "werner_qutrit" => family_werner_qutrit(),
        "sixlevel_s1" => family_sixlevel(),
        "werner_qubit_qutrit" => family_werner_qubit_qutrit(),
        "rho_q" => family_rho_q(),
        "rho_p" => family_rho_p(),
        "bloch2" => family_bloch2(),
        "twoqubit_general" => family_twoqubit_general(),
        other => return Err(Error::UnknownId(other.to_string())),
    })
}

pub fn all_families() -> Vec<DensityFamily> {
    FAMILY_IDS.iter().map(|id| family(id).expect("registered id")).collect()
}

/// Root of the minimum eigenvalue of a one-parameter family inside [a, b].
pub fn feasibility_root(fam: &DensityFamily, a: f64, b: f64, tol: f64) -> Result<f64> {
    let g = |t: f64| fam.min_eigenvalue(&[t]).unwrap_or(f64::NAN);
    find_root_bisect(g, a, b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev(a: &ComplexSquareMatrix, b: &ComplexSquareMatrix) -> f64 {
        a.max_abs_diff(b)
    }

    #[test]
    fn registry_is_complete_and_unique() {
        let fams = all_families();
        assert_eq!(fams.len(), FAMILY_IDS.len());
        for (f, id) in fams.iter().zip(FAMILY_IDS) {
            assert_eq!(f.id, id);
        }
        assert!(matches!(family("nope"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn every_family_has_unit_trace_and_is_hermitian() {
        for f in all_families() {
            let theta: Vec<f64> = (0..f.k()).map(|i| 0.01 * (i as f64 + 1.0)).collect();
            let m = f.rho(&theta).unwrap();
            let tr = m.matrix().trace();
            assert!((tr.re - 1.0).abs() < 1e-14 && tr.im.abs() < 1e-15, "{}", f.id);
            assert!(m.matrix().hermitian_defect() < 1e-15, "{}", f.id);
        }
    }

    #[test]
    fn s1_special_points() {
        let f = family_s1_equal_intra();
        let mixed = ComplexSquareMatrix::identity(4).scale_real(0.25);
        assert!(max_dev(f.rho(&[0.0]).unwrap().matrix(), &mixed) < 1e-16);
        let ev = f.rho(&[1.0 / 12.0]).unwrap().eig().unwrap().eigenvalues;
        for (got, want) in ev.iter().zip([0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let singlet = ComplexSquareMatrix::from_fn(4, |i, j| {
            let v = singlet_vector();
            v[i] * v[j].conj()
        });
        assert!(max_dev(f.rho(&[-0.25]).unwrap().matrix(), &singlet) < 1e-15);
    }

    #[test]
    fn werner_qq_matches_pauli_convention() {
        let w = family_werner_qq();
        for &e in &[0.0, 0.3, 1.0] {
            let q = -e / 4.0;
            let p = pauli_two_qubit(NO_LOCAL, NO_LOCAL, [[q, 0.0, 0.0], [0.0, q, 0.0], [0.0, 0.0, q]]);
            assert!(max_dev(w.rho(&[e]).unwrap().matrix(), p.matrix()) < 1e-15);
        }
    }

    #[test]
    fn one_parameter_feasible_endpoints_by_bisection() {
        for id in [
            "s1_equal_intra",
            "s2_two_pos_one_neg",
            "s3_equal_inter",
            "s4_intra_vs_inter",
            "s5_all_nine",
            "s6_all_fifteen",
            "s7_antisym_inter",
            "sixlevel_s1",
        ] {
            let f = family(id).unwrap();
            let iv = f.feasible_interval().unwrap();
            let w = iv.width();
            let lo = feasibility_root(&f, iv.lo - 0.3 * w, iv.lo + 0.3 * w, 1e-13).unwrap();
            let hi = feasibility_root(&f, iv.hi - 0.3 * w, iv.hi + 0.3 * w, 1e-13).unwrap();
            assert!((lo - iv.lo).abs() < 1e-10, "{id} lo {lo} vs {}", iv.lo);
            assert!((hi - iv.hi).abs() < 1e-10, "{id} hi {hi} vs {}", iv.hi);
        }
    }

    #[test]
    fn sixlevel_reductions_fully_mixed() {
        let f = family_sixlevel();
        let rho = f.rho(&[0.05]).unwrap();
        use crate::linalg::{partial_trace, Subsystem};
        let a = partial_trace(&rho, Subsystem::B).unwrap();
        let b = partial_trace(&rho, Subsystem::A).unwrap();
        assert!(a.max_abs_diff(&ComplexSquareMatrix::identity(2).scale_real(0.5)) < 1e-15);
        assert!(b.max_abs_diff(&ComplexSquareMatrix::identity(3).scale_real(1.0 / 3.0)) < 1e-15);
        assert!(f.rho(&[0.0]).unwrap().matrix().max_abs_diff(&ComplexSquareMatrix::identity(6).scale_real(1.0 / 6.0)) < 1e-16);
    }

    #[test]
    fn rotated_diagonal_special_angles() {
        let f = family_diag4_unitary();
        let d = family_diag4();
        let (x, y, z) = (0.1, 0.2, 0.3);
        assert!(max_dev(f.rho(&[x, y, z, 0.0]).unwrap().matrix(), d.rho(&[x, y, z]).unwrap().matrix()) < 1e-16);
        // w = π swaps nothing but signs: cos π = −1 gives the same diagonal
        assert!(max_dev(f.rho(&[x, y, z, PI]).unwrap().matrix(), d.rho(&[x, y, z]).unwrap().matrix()) < 1e-15);
        // w = π/2 exchanges y and z
        assert!(max_dev(f.rho(&[x, y, z, PI / 2.0]).unwrap().matrix(), d.rho(&[x, z, y]).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn rho_p_is_rho_q_with_nullified_parameters() {
        let p = family_rho_p();
        let q = family_rho_q();
        let t = [0.8, 0.1, 0.2, 0.3];
        let full = [0.8, 0.1, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0];
        assert!(max_dev(p.rho(&t).unwrap().matrix(), q.rho(&full).unwrap().matrix()) < 1e-16);
        let corner = p.rho(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(corner.matrix().max_abs_diff(&ComplexSquareMatrix::diag(&[0.5, 0.0, 0.5])) < 1e-16);
    }

    #[test]
    fn rho_p_positivity_matches_block_eigenvalues() {
        let p = family_rho_p();
        let tol = Tolerances::default();
        for &(v, x, y, z) in &[(0.8, 0.1, 0.2, 0.3), (0.5, 0.4, 0.2, 0.2), (0.9, 0.5, 0.5, 0.5), (0.3, 0.0, 0.0, 0.29)] {
            let expected = x * x + y * y + z * z <= v * v && v <= 1.0;
            assert_eq!(p.is_feasible(&[v, x, y, z], &tol).unwrap(), expected, "({v},{x},{y},{z})");
        }
    }

    #[test]
    fn werner_qubit_qutrit_reduced_qutrit_spectrum() {
        use crate::linalg::{partial_trace, HermitianMatrix, Subsystem};
        let f = family_werner_qubit_qutrit();
        let pure = f.rho(&[1.0]).unwrap();
        let red = partial_trace(&pure, Subsystem::A).unwrap();
        let ev = HermitianMatrix::new(red).unwrap().eig().unwrap().eigenvalues;
        for (g, w) in ev.iter().zip([0.0, 0.5, 0.5]) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(family_s1_equal_intra().rho(&[0.0, 1.0]), Err(Error::Usage(_))));
    }
}
