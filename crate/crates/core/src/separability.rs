//! PPT verdicts, separable intervals of one-parameter families, and
//! two-qubit concurrence / entanglement of formation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{DensityFamily, RotatedDiagonalMap, SeparableSpec};
use crate::linalg::{
    herm_eig, kron, partial_transpose, pauli, sqrt_psd, DensityMatrix,
    Dims, HermitianMatrix, Subsystem, Tolerances,
};
use crate::quadrature::{find_root_bisect, find_root_brent};
use nalgebra::{Matrix4, Vector4};
use crate::region::{Interval, RegionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// PPT is necessary and sufficient (d_A·d_B ≤ 6).
    Exact,
    /// PPT is only necessary.
    NecessaryOnly,
    /// The separable range comes from the literature.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityVerdict {
    pub ppt_min_eigenvalue: f64,
    pub is_ppt: bool,
    pub criterion: Criterion,
}

impl SeparabilityVerdict {
    /// Separable when PPT is decisive; `None` when it is not.
    pub fn separable(&self) -> Option<bool> {
        match self.criterion {
            Criterion::Exact => Some(self.is_ppt),
            // an NPT state is entangled whatever the dimension
            _ if !self.is_ppt => Some(false),
            _ => None,
        }
    }
}

pub fn ppt_is_decisive(dims: Dims) -> bool {
    matches!(dims, Dims::Bipartite(a, b) if a * b <= 6)
}

pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    partial_transpose(rho, Subsystem::B)?.min_eigenvalue()
}

pub fn is_separable(rho: &DensityMatrix) -> Result<SeparabilityVerdict> {
    is_separable_with(rho, &Tolerances::default())
}

pub fn is_separable_with(rho: &DensityMatrix, tol: &Tolerances) -> Result<SeparabilityVerdict> {
    let m = ppt_min_eigenvalue(rho)?;
    Ok(SeparabilityVerdict {
        ppt_min_eigenvalue: m,
        is_ppt: m >= -tol.ppt,
        criterion: if ppt_is_decisive(rho.dims()) {
            Criterion::Exact
        } else {
            Criterion::NecessaryOnly
        },
    })
}

/// Minimum PT eigenvalue of a family member.
pub fn family_ppt_min(fam: &DensityFamily, theta: &[f64]) -> Result<f64> {
    ppt_min_eigenvalue(&fam.rho(theta)?)
}

/// Separable range of a one-parameter family: the PPT set located by a
/// grid scan and bisection when PPT is decisive, the declared range otherwise.
pub fn separable_interval(fam: &DensityFamily) -> Result<Interval> {
    separable_interval_tol(fam, 1e-13)
}

pub fn separable_interval_tol(fam: &DensityFamily, tol: f64) -> Result<Interval> {
    if fam.k() != 1 {
        return Err(Error::Usage(format!("{} has {} parameters; a separable interval needs one", fam.id, fam.k())));
    }
    if let SeparableSpec::External { region, .. } = &fam.separable {
        return region
            .as_interval()
            .ok_or_else(|| Error::Usage(format!("declared range of {} is not an interval", fam.id)));
    }
    if !ppt_is_decisive(fam.dims) {
        return Err(Error::Usage(format!(
            "PPT is not sufficient for {} ({}) and no separable range is declared",
            fam.id, fam.dims
        )));
    }
    let feas = fam
        .feasible_interval()
        .ok_or_else(|| Error::Usage(format!("{} has no feasible interval", fam.id)))?;
    let g = |t: f64| family_ppt_min(fam, &[t]).unwrap_or(f64::NAN);
    const N: usize = 200;
    let xs: Vec<f64> = (0..=N).map(|i| feas.lo + feas.width() * i as f64 / N as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let (best, &best_val) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Numerical("empty scan".into()))?;
    if best_val < 0.0 {
        return Ok(Interval::new(xs[best], xs[best]));
    }
    // the PPT set of an affine family is convex: walk out from the maximum
    let lo = match (0..best).rev().find(|&i| vals[i] < 0.0) {
        Some(i) => find_root_bisect(g, xs[i], xs[i + 1], tol)?,
        None => feas.lo,
    };
    let hi = match (best + 1..=N).find(|&i| vals[i] < 0.0) {
        Some(i) => find_root_bisect(g, xs[i - 1], xs[i], tol)?,
        None => feas.hi,
    };
    Ok(Interval::with_flags(lo, hi, lo == feas.lo && feas.lo_singular, hi == feas.hi && feas.hi_singular))
}

/// Declared or computed separable region of any family, for integration.
pub fn separable_region(fam: &DensityFamily) -> Result<RegionSpec> {
    match &fam.separable {
        SeparableSpec::Region(r) => Ok(r.clone()),
        SeparableSpec::External { region, .. } => Ok(region.clone()),
        SeparableSpec::PptPointwise if fam.k() == 1 => Ok(separable_interval(fam)?.into()),
        SeparableSpec::PptPointwise => Err(Error::Usage(format!(
            "{} has no closed separable region; PPT is evaluated pointwise",
            fam.id
        ))),
        SeparableSpec::NotApplicable(why) => Err(Error::Usage(format!("{}: {why}", fam.id))),
    }
}

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    match rho.dims() {
        Dims::Bipartite(2, 2) => Ok(()),
        d => Err(Error::Usage(format!("concurrence needs a two-qubit state, got {d}"))),
    }
}

/// Wootters concurrence from the spectrum of √ρ ρ̃ √ρ, ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y).
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho)?;
    let yy = kron(&pauli(2), &pauli(2));
    let tilde = yy.matmul(&rho.matrix().conj()).matmul(&yy);
    let s = sqrt_psd(rho.hermitian())?;
    let r = s.matmul(&tilde).matmul(&s);
    let herm = HermitianMatrix::new_unchecked(r.add(&r.adjoint()).scale_real(0.5));
    let mut l: Vec<f64> = herm_eig(&herm)?.eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// h(x) = −x log₂ x − (1−x) log₂(1−x), with h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).sqrt()))
}

pub fn eof(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

/// Half-width u of the printed w-interval [−u, u] for the rotated diagonal
/// family: ½ Re arcsin(2√(x − x² − xy − xz)/|y − z|).
pub fn unitary_arcsin_bound(x: f64, y: f64, z: f64) -> f64 {
    let arg = 2.0 * (x - x * x - x * y - x * z).max(0.0).sqrt() / (y - z).abs();
    // Re arcsin saturates at π/2 for arguments above one
    0.5 * if arg >= 1.0 { PI / 2.0 } else { arg.asin() }
}

/// Fraction of w ∈ [0, 2π) at which the rotated diagonal state is PPT,
/// from the PT spectrum directly.
pub fn ppt_arc_fraction(x: f64, y: f64, z: f64, tol: f64) -> Result<f64> {
    // U(w) is real, so the state and its partial transpose are real 4×4
    let d = Matrix4::from_diagonal(&Vector4::new(x, y, z, 1.0 - x - y - z));
    // a two-qubit partial transpose has at most one negative eigenvalue, so
    // its determinant carries the sign of the smallest one and is smooth in w
    let g = |w: f64| {
        let uc = RotatedDiagonalMap::rotation(w);
        let u = Matrix4::from_fn(|i, j| uc.get(i, j).re);
        let rho = u * d * u.transpose();
        // |a b⟩⟨c e| → |a e⟩⟨c b|
        let pt = Matrix4::from_fn(|r, c| rho[(2 * (r / 2) + c % 2, 2 * (c / 2) + r % 2)]);
        pt.determinant()
    };
    // multiples of π/8 include the centers of every PPT and NPT arc
    const N: usize = 16;
    let step = 2.0 * PI / N as f64;
    let vals: Vec<f64> = (0..=N).map(|i| g(i as f64 * step)).collect();
    let mut ppt = 0.0;
    for i in 0..N {
        let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
        let (ga, gb) = (vals[i], vals[i + 1]);
        match (ga >= 0.0, gb >= 0.0) {
            (true, true) => ppt += step,
            (false, false) => {}
            (true, false) => ppt += find_root_brent(g, a, b, tol)? - a,
            (false, true) => ppt += b - find_root_brent(g, a, b, tol)?,
        }
    }
    Ok(ppt / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::*;
    use crate::linalg::ComplexSquareMatrix;

    #[test]
    fn maximally_mixed_is_separable() {
        let rho = DensityMatrix::new(ComplexSquareMatrix::identity(4).scale_real(0.25), Dims::Bipartite(2, 2)).unwrap();
        let v = is_separable(&rho).unwrap();
        assert!(v.is_ppt && v.criterion == Criterion::Exact);
        assert!((v.ppt_min_eigenvalue - 0.25).abs() < 1e-15);
        assert_eq!(concurrence(&rho).unwrap(), 0.0);
    }

    #[test]
    fn werner_half_is_entangled() {
        let rho = family_werner_qq().rho(&[0.5]).unwrap();
        assert_eq!(is_separable(&rho).unwrap().separable(), Some(false));
        assert!((concurrence(&rho).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn singlet_concurrence_and_eof() {
        let rho = family_werner_qq().rho(&[1.0]).unwrap();
        assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-7);
        assert!((eof_from_concurrence(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(eof_from_concurrence(0.0), 0.0);
    }

    #[test]
    fn scenario_three_separable_ends() {
        let f = family_s3_equal_inter();
        assert!(family_ppt_min(&f, &[-1.0 / 16.0]).unwrap().abs() < 1e-10);
        // the upper end is the feasibility boundary, not a PT root
        assert!(f.min_eigenvalue(&[1.0 / 16.0]).unwrap().abs() < 1e-10);
        assert!((family_ppt_min(&f, &[1.0 / 16.0]).unwrap() - 0.125).abs() < 1e-10);
    }

    #[test]
    fn separable_intervals() {
        let cases: [(fn() -> DensityFamily, f64, f64); 4] = [
            (family_s1_equal_intra, -1.0 / 12.0, 1.0 / 12.0),
            (family_s4_intra_vs_inter, -0.05, 0.05),
            (family_werner_qubit_qutrit, 0.0, 0.25),
            (family_werner_qq, 0.0, 1.0 / 3.0),
        ];
        for (f, lo, hi) in cases {
            let iv = separable_interval(&f()).unwrap();
            assert!((iv.lo - lo).abs() < 1e-12 && (iv.hi - hi).abs() < 1e-12, "{iv}");
        }
        let six = separable_interval(&family_sixlevel()).unwrap();
        assert!((six.hi - SIXLEVEL_SEPARABLE_HI).abs() < 1e-12);
        assert_eq!(six.lo, SIXLEVEL_FEASIBLE.0);
    }

    #[test]
    fn qutrit_werner_uses_declared_range() {
        let f = family_werner_qutrit();
        assert_eq!(separable_interval(&f).unwrap(), Interval::new(0.0, 0.25));
        let v = is_separable(&f.rho(&[0.2]).unwrap()).unwrap();
        assert_eq!(v.criterion, Criterion::NecessaryOnly);
        assert_eq!(v.separable(), None);
    }

    #[test]
    fn refuses_without_decisive_test() {
        let mut f = family_werner_qutrit();
        f.separable = SeparableSpec::PptPointwise;
        assert!(matches!(separable_interval(&f), Err(Error::Usage(_))));
    }

    #[test]
    fn arc_fraction_against_closed_form() {
        // PPT ⇔ |sin 2w| ≤ 2√(x t)/|y − z|, t = 1 − x − y − z
        let (x, y, z): (f64, f64, f64) = (0.1, 0.5, 0.1);
        let k: f64 = 2.0 * (x * (1.0 - x - y - z)).sqrt() / (y - z);
        let want = 4.0 * k.asin() / (2.0 * PI);
        let got = ppt_arc_fraction(x, y, z, 1e-12).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!((unitary_arcsin_bound(x, y, z) - 0.5 * k.asin()).abs() < 1e-15);
        assert!((ppt_arc_fraction(0.25, 0.25, 0.25, 1e-12).unwrap() - 1.0).abs() < 1e-14);
    }
}
