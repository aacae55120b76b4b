//! Bures metric tensors and volume elements.
//!
//! Three engines: the general spectral formula, and the eigenvalue-free
//! quadratic forms for 2×2 and 3×3 density matrices (G is recovered from
//! those by polarization).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{family_rho_q, DensityFamily};
use crate::linalg::{herm_eig, sqrt_psd, ComplexSquareMatrix, DensityMatrix, HermitianMatrix, Tolerances};

/// k×k real symmetric metric, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    pub k: usize,
    pub entries: Vec<f64>,
}

impl MetricTensor {
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                entries.push(f(i, j));
            }
        }
        Self { k, entries }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let k = rows.len();
        Self::from_fn(k, |i, j| rows[i][j])
    }

    pub fn identity(k: usize) -> Self {
        Self::from_fn(k, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.k, &self.entries)
    }

    pub fn determinant(&self) -> f64 {
        match self.k {
            0 => 1.0,
            1 => self.entries[0],
            _ => self.to_dmatrix().lu().determinant(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::real_symmetric_eigenvalues(self.k, &self.entries)
    }

    /// Rows and columns `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> MetricTensor {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// max |G_ij − G_ji| / max |G_ij|
    pub fn asymmetry(&self) -> f64 {
        let scale = self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Mᵀ G M for a k×m matrix M (row-major).
    pub fn pullback(&self, m: &[f64], cols: usize) -> MetricTensor {
        assert_eq!(m.len(), self.k * cols);
        let mm = DMatrix::from_row_slice(self.k, cols, m);
        let out = mm.transpose() * self.to_dmatrix() * &mm;
        Self::from_fn(cols, |i, j| out[(i, j)])
    }

    /// max_ij |a_ij − b_ij| / max(|b_ij|, floor)
    pub fn max_rel_diff(&self, other: &MetricTensor, floor: f64) -> f64 {
        assert_eq!(self.k, other.k);
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs() / b.abs().max(floor)))
    }

    pub fn max_abs_diff(&self, other: &MetricTensor) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeElementValue {
    pub magnitude: f64,
    pub det_sign: i8,
}

pub fn volume_element(g: &MetricTensor) -> VolumeElementValue {
    let det = g.determinant();
    VolumeElementValue {
        magnitude: det.abs().sqrt(),
        det_sign: if det > 0.0 {
            1
        } else if det < 0.0 {
            -1
        } else {
            0
        },
    }
}

/// G_ij = ½ Σ_{λa+λb > cut} Re[⟨a|∂ᵢρ|b⟩⟨b|∂ⱼρ|a⟩]/(λa+λb).
pub fn metric_from_derivatives(
    rho: &HermitianMatrix,
    drho: &[HermitianMatrix],
    tol: &Tolerances,
) -> Result<MetricTensor> {
    let spec = herm_eig(rho)?;
    if spec.eigenvalues[0] < -tol.psd {
        return Err(Error::Domain(format!(
            "state is not positive semidefinite (min eigenvalue {:e})",
            spec.eigenvalues[0]
        )));
    }
    let n = rho.dim();
    let v = &spec.eigenvectors;
    let vd = v.adjoint();
    let rotated: Vec<ComplexSquareMatrix> = drho.iter().map(|d| vd.matmul(d.matrix()).matmul(v)).collect();
    let lam = &spec.eigenvalues;
    let k = drho.len();
    let mut g = vec![0.0; k * k];
    for a in 0..n {
        for b in 0..n {
            let s = lam[a] + lam[b];
            if s <= tol.zero_mode {
                continue;
            }
            for i in 0..k {
                let xi = rotated[i].get(a, b);
                for j in i..k {
                    // ⟨b|∂ⱼρ|a⟩ = conj⟨a|∂ⱼρ|b⟩
                    let xj = rotated[j].get(a, b);
                    g[i * k + j] += 0.5 * (xi.re * xj.re + xi.im * xj.im) / s;
                }
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[i * k + j] = g[j * k + i];
        }
    }
    Ok(MetricTensor { k, entries: g })
}

pub fn metric_spectral(fam: &DensityFamily, theta: &[f64]) -> Result<MetricTensor> {
    metric_spectral_with(fam, theta, &Tolerances::default())
}

pub fn metric_spectral_with(fam: &DensityFamily, theta: &[f64], tol: &Tolerances) -> Result<MetricTensor> {
    let rho = fam.rho(theta)?;
    let d = fam.drho(theta)?;
    metric_from_derivatives(rho.hermitian(), &d, tol)
}

/// sqrt|det G| from the spectral engine: the unnormalized prior.
pub fn prior_value(fam: &DensityFamily, theta: &[f64]) -> Result<f64> {
    Ok(volume_element(&metric_spectral(fam, theta)?).magnitude)
}

/// Recovers G from a quadratic form Q(dρ) by G_ij = [Q(eᵢ+eⱼ) − Q(eᵢ) − Q(eⱼ)]/2.
pub fn metric_by_polarization(
    drho: &[HermitianMatrix],
    q: impl Fn(&ComplexSquareMatrix) -> f64,
) -> MetricTensor {
    let k = drho.len();
    let diag: Vec<f64> = drho.iter().map(|d| q(d.matrix())).collect();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        g[i * k + i] = diag[i];
        for j in 0..i {
            let both = q(&drho[i].matrix().add(drho[j].matrix()));
            let v = 0.5 * (both - diag[i] - diag[j]);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    MetricTensor { k, entries: g }
}

/// ¼ Tr{dρ dρ + (1/|ρ|)(dρ − ρ dρ)(dρ − ρ dρ)} for 2×2 ρ.
pub fn quadratic_form_2x2(rho: &ComplexSquareMatrix, d: &ComplexSquareMatrix) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::Usage(format!("2x2 formula needs dimension 2, got {}", rho.dim())));
    }
    let det = rho.determinant().re;
    if det.abs() < 1e-300 {
        return Err(Error::Domain("singular density matrix".into()));
    }
    let a = d.sub(&rho.matmul(d));
    Ok(0.25 * (d.trace_product(d).re + a.trace_product(&a).re / det))
}

/// ¼ Tr{dρdρ + 3/(1−Trρ³)(dρ−ρdρ)² + 3|ρ|/(1−Trρ³)(dρ−ρ⁻¹dρ)²} for 3×3 ρ.
pub fn quadratic_form_3x3(rho: &ComplexSquareMatrix, d: &ComplexSquareMatrix) -> Result<f64> {
    if rho.dim() != 3 {
        return Err(Error::Usage(format!("3x3 formula needs dimension 3, got {}", rho.dim())));
    }
    let rho2 = rho.matmul(rho);
    let denom = 1.0 - rho2.trace_product(rho).re;
    if denom.abs() < 1e-14 {
        return Err(Error::Domain("pure state: 1 - Tr rho^3 vanishes".into()));
    }
    let det = rho.determinant().re;
    let inv = rho
        .try_inverse()
        .filter(|_| det.abs() > 1e-300)
        .ok_or_else(|| Error::Domain("singular density matrix".into()))?;
    let a = d.sub(&rho.matmul(d));
    let b = d.sub(&inv.matmul(d));
    Ok(0.25
        * (d.trace_product(d).re
            + 3.0 / denom * a.trace_product(&a).re
            + 3.0 * det / denom * b.trace_product(&b).re))
}

pub fn metric_dittmann2(fam: &DensityFamily, theta: &[f64]) -> Result<MetricTensor> {
    let rho = fam.rho(theta)?;
    let d = fam.drho(theta)?;
    quadratic_form_2x2(rho.matrix(), d[0].matrix())?;
    Ok(metric_by_polarization(&d, |x| quadratic_form_2x2(rho.matrix(), x).unwrap_or(f64::NAN)))
}

pub fn metric_dittmann3(fam: &DensityFamily, theta: &[f64]) -> Result<MetricTensor> {
    let rho = fam.rho(theta)?;
    let d = fam.drho(theta)?;
    quadratic_form_3x3(rho.matrix(), d[0].matrix())?;
    Ok(metric_by_polarization(&d, |x| quadratic_form_3x3(rho.matrix(), x).unwrap_or(f64::NAN)))
}

/// Full 8×8 metric of the eight-parameter 3×3 family at (v, x, y, z, 0, 0, 0, 0).
pub fn conditioned_metric_rhoq(v: f64, x: f64, y: f64, z: f64) -> Result<MetricTensor> {
    let r2 = x * x + y * y + z * z;
    if !(v > 0.0 && v < 1.0 && r2 < v * v) {
        return Err(Error::Domain(format!(
            "(v, x, y, z) = ({v}, {x}, {y}, {z}) is not interior to the feasible set"
        )));
    }
    metric_spectral(&family_rho_q(), &[v, x, y, z, 0.0, 0.0, 0.0, 0.0])
}

/// Computed and printed eigenvalues of the conditioned 8×8 metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairs {
    /// Ascending.
    pub computed: Vec<f64>,
    /// λ₁,₂ λ₃,₄ λ₅,₆ λ₇ λ₈ as printed (λ₇,₈ with the ± read as two roots), ascending.
    pub printed: Vec<f64>,
    pub det: f64,
}

/// Compares the eight eigenvalues of the conditioned metric at radius r
/// (direction along x) with the printed pair formulas.
pub fn eigen_pairs_check(v: f64, r: f64) -> Result<EigenPairs> {
    let g = conditioned_metric_rhoq(v, r, 0.0, 0.0)?;
    let mut printed = printed::rhoq_conditioned_eigenvalues(v, r).to_vec();
    printed.sort_by(f64::total_cmp);
    Ok(EigenPairs {
        computed: g.eigenvalues(),
        printed,
        det: g.determinant(),
    })
}

/// Fidelity (Tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Usage("fidelity needs equal dimensions".into()));
    }
    let sr = sqrt_psd(rho.hermitian())?;
    let m = sr.matmul(sigma.matrix()).matmul(&sr);
    let herm = HermitianMatrix::new_unchecked(m.add(&m.adjoint()).scale_real(0.5));
    let s: f64 = herm_eig(&herm)?.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(s * s)
}

/// d² = 2(1 − √F).
pub fn bures_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(2.0 * (1.0 - fidelity(rho, sigma)?.sqrt()))
}

/// Metric matrices and eigenvalue expressions in their printed closed forms.
pub mod printed {
    use super::MetricTensor;

    /// 2×2 Bloch metric (1/(4(1−r²)))·[[1−y²−z², xy, xz], ...].
    pub fn bloch_metric(x: f64, y: f64, z: f64) -> MetricTensor {
        let s = 1.0 / (4.0 * (1.0 - x * x - y * y - z * z));
        MetricTensor::from_rows(&[
            vec![s * (1.0 - y * y - z * z), s * x * y, s * x * z],
            vec![s * x * y, s * (1.0 - x * x - z * z), s * y * z],
            vec![s * x * z, s * y * z, s * (1.0 - x * x - y * y)],
        ])
    }

    /// The {v, x, y, z} block of the conditioned metric.
    pub fn rhop_block(v: f64, x: f64, y: f64, z: f64) -> MetricTensor {
        let q = v * v - x * x - y * y - z * z;
        let s = 1.0 / (4.0 * q);
        MetricTensor::from_rows(&[
            vec![s * (v - x * x - y * y - z * z) / (1.0 - v), -s * x, -s * y, -s * z],
            vec![-s * x, s * (v * v - y * y - z * z) / v, s * x * y / v, s * x * z / v],
            vec![-s * y, s * x * y / v, s * (v * v - x * x - z * z) / v, s * y * z / v],
            vec![-s * z, s * x * z / v, s * y * z / v, s * (v * v - x * x - y * y) / v],
        ])
    }

    /// Same as `rhop_block` with the last three diagonal entries negated
    /// (a variant with the same determinant).
    pub fn rhop_block_negated_diagonal(v: f64, x: f64, y: f64, z: f64) -> MetricTensor {
        let mut m = rhop_block(v, x, y, z);
        for i in 1..4 {
            m.entries[i * 4 + i] = -m.entries[i * 4 + i];
        }
        m
    }

    /// λ₁..λ₈ of the conditioned 8×8 metric at (v, r).
    pub fn rhoq_conditioned_eigenvalues(v: f64, r: f64) -> [f64; 8] {
        let l12 = 1.0 / (4.0 * v);
        let l34 = 1.0 / (4.0 + 2.0 * r - 2.0 * v);
        let l56 = -1.0 / (2.0 * (r + v - 2.0));
        let a = -2.0 * (r * r + (v - 2.0) * v);
        let root = 2.0 * (r.powi(4) + v.powi(4) + 2.0 * r * r * (2.0 + (v - 4.0) * v)).sqrt();
        [l12, l12, l34, l34, l56, l56, 1.0 / (a + root), 1.0 / (a - root)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{family_bloch2, family_rho_p, family_s1_equal_intra, family_s4_intra_vs_inter};

    #[test]
    fn bloch_origin_is_quarter_identity() {
        let f = family_bloch2();
        let g = metric_spectral(&f, &[0.0, 0.0, 0.0]).unwrap();
        assert!(g.max_abs_diff(&MetricTensor::from_fn(3, |i, j| if i == j { 0.25 } else { 0.0 })) < 1e-15);
        let g2 = metric_dittmann2(&f, &[0.0, 0.0, 0.0]).unwrap();
        assert!(g2.max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn bloch_metric_matches_printed_matrix() {
        let f = family_bloch2();
        let (x, y, z) = (0.2, 0.1, 0.3);
        let want = printed::bloch_metric(x, y, z);
        for g in [metric_spectral(&f, &[x, y, z]).unwrap(), metric_dittmann2(&f, &[x, y, z]).unwrap()] {
            assert!(g.max_abs_diff(&want) < 1e-10);
        }
    }

    #[test]
    fn scenario_one_volume_at_origin() {
        let v = prior_value(&family_s1_equal_intra(), &[0.0]).unwrap();
        assert!((v - 2.0 * 3f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn scenario_four_volume_at_origin() {
        let v = prior_value(&family_s4_intra_vs_inter(), &[0.0]).unwrap();
        assert!((v - 6.0).abs() < 1e-13);
    }

    #[test]
    fn volume_element_identity_and_sign() {
        assert_eq!(volume_element(&MetricTensor::identity(3)), VolumeElementValue { magnitude: 1.0, det_sign: 1 });
        let neg = MetricTensor::from_rows(&[vec![-4.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(volume_element(&neg), VolumeElementValue { magnitude: 2.0, det_sign: -1 });
    }

    #[test]
    fn rho_p_restricted_volume() {
        let (v, x, y, z): (f64, f64, f64, f64) = (0.8, 0.1, 0.2, 0.3);
        let printed = 1.0 / (16.0 * v * (1.0 - v).sqrt() * (v * v - x * x - y * y - z * z).sqrt());
        let f = family_rho_p();
        for g in [metric_spectral(&f, &[v, x, y, z]).unwrap(), metric_dittmann3(&f, &[v, x, y, z]).unwrap()] {
            let m = volume_element(&g).magnitude;
            assert!((m / printed - 1.0).abs() < 1e-8, "{m} vs {printed}");
        }
    }

    #[test]
    fn conditioned_metric_blocks() {
        let (v, x, y, z): (f64, f64, f64, f64) = (0.8, 0.1, 0.2, 0.3);
        let g = conditioned_metric_rhoq(v, x, y, z).unwrap();
        let r2 = x * x + y * y + z * z;
        let eq3 = 1.0 / (64.0 * v * (1.0 - v).sqrt() * (v * v - r2).sqrt() * (r2 - (v - 2.0).powi(2)));
        assert!((volume_element(&g).magnitude / eq3.abs() - 1.0).abs() < 1e-8);
        let block = g.submatrix(&[0, 1, 2, 3]);
        assert!(block.max_abs_diff(&printed::rhop_block(v, x, y, z)) < 1e-9);
        let comp = g.submatrix(&[4, 5, 6, 7]);
        let f = 1.0 / (4.0 * (r2 - (v - 2.0).powi(2)));
        assert!((volume_element(&comp).magnitude / f.abs() - 1.0).abs() < 1e-8);
        for i in 0..4 {
            for j in 4..8 {
                assert!(g.get(i, j).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn conditioned_metric_rejects_boundary() {
        assert!(matches!(conditioned_metric_rhoq(0.5, 0.5, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn printed_eigenvalue_pairs() {
        let e = eigen_pairs_check(0.9, 0.3).unwrap();
        let p = printed::rhoq_conditioned_eigenvalues(0.9, 0.3);
        assert!((p[0] - 1.0 / 3.6).abs() < 1e-15);
        assert!((p[4] - 0.625).abs() < 1e-15);
        for (a, b) in e.computed.iter().zip(&e.printed) {
            assert!((a / b - 1.0).abs() < 1e-9, "{:?} vs {:?}", e.computed, e.printed);
        }
        let prod: f64 = e.printed.iter().product();
        assert!((prod / e.det - 1.0).abs() < 1e-7);
    }

    #[test]
    fn printed_blocks_agree_in_magnitude_on_the_axis() {
        let a = printed::rhop_block(0.7, 0.0, 0.0, 0.0).determinant();
        let b = printed::rhop_block_negated_diagonal(0.7, 0.0, 0.0, 0.0).determinant();
        assert!((a.abs() / b.abs() - 1.0).abs() < 1e-12);
        let off = printed::rhop_block(0.7, 0.2, -0.1, 0.3).determinant();
        let off_neg = printed::rhop_block_negated_diagonal(0.7, 0.2, -0.1, 0.3).determinant();
        assert!((off.abs() / off_neg.abs() - 1.0).abs() > 1e-3);
    }

    #[test]
    fn fidelity_of_identical_and_orthogonal_states() {
        let f = family_bloch2();
        let a = f.rho(&[0.0, 0.0, 1.0]).unwrap();
        let b = f.rho(&[0.0, 0.0, -1.0]).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&a, &b).unwrap().abs() < 1e-12);
        assert!((bures_distance_sq(&a, &b).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_form_rejects_singular_state() {
        let f = family_bloch2();
        assert!(matches!(metric_dittmann2(&f, &[0.0, 0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(metric_dittmann3(&f, &[0.0, 0.0, 0.0]), Err(Error::Usage(_))));
    }
}
