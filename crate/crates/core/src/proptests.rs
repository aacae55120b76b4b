use crate::bures::{metric_from_derivatives, metric_spectral};
use crate::families::{self, FAMILY_IDS};
use crate::linalg::{
    c, partial_transpose_matrix, ComplexSquareMatrix, DensityMatrix, Dims, HermitianMatrix, Subsystem, Tolerances,
};
use crate::probability::interior_points;
use crate::quadrature::{integrate_1d, integrate_nested, QuadratureConfig, QuadratureMethod};
use crate::region::{Level, NestedRegion, RegionKind, RegionSpec};
use crate::separability::{concurrence, eof, is_separable};
use proptest::prelude::*;

fn complex_matrix(n: usize) -> impl Strategy<Value = ComplexSquareMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| ComplexSquareMatrix::from_fn(n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
}

/// A A† / tr(A A†), full rank with probability one.
fn random_state(n: usize) -> impl Strategy<Value = ComplexSquareMatrix> {
    complex_matrix(n).prop_filter_map("degenerate", |a| {
        let m = a.matmul(&a.adjoint());
        let t = m.trace().re;
        (t > 1e-6).then(|| m.scale_real(1.0 / t))
    })
}

fn affine_families() -> Vec<families::DensityFamily> {
    FAMILY_IDS
        .iter()
        .map(|id| families::family(id).unwrap())
        .filter(|f| f.is_affine())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_an_involution(m in complex_matrix(6), b_side in any::<bool>()) {
        let which = if b_side { Subsystem::B } else { Subsystem::A };
        let twice = partial_transpose_matrix(&partial_transpose_matrix(&m, 2, 3, which), 2, 3, which);
        prop_assert!(twice.max_abs_diff(&m) == 0.0);
    }

    #[test]
    fn partial_transpose_keeps_trace_and_hermiticity(rho in random_state(4)) {
        let pt = partial_transpose_matrix(&rho, 2, 2, Subsystem::B);
        prop_assert!((pt.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(pt.hermitian_defect() < 1e-14);
    }

    #[test]
    fn affine_families_respect_midpoints(u in prop::collection::vec(0.0f64..1.0, 8), v in prop::collection::vec(0.0f64..1.0, 8)) {
        for fam in affine_families() {
            let k = fam.k();
            let a: Vec<f64> = u[..k.min(8)].iter().cycle().take(k).map(|x| x - 0.5).collect();
            let b: Vec<f64> = v[..k.min(8)].iter().cycle().take(k).map(|x| x - 0.5).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let lhs = fam.rho(&mid).unwrap();
            let rhs = fam.rho(&a).unwrap().matrix().add(fam.rho(&b).unwrap().matrix()).scale_real(0.5);
            prop_assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-14, "{}", fam.id);
        }
    }

    #[test]
    fn derivatives_match_central_differences(u in prop::collection::vec(0.05f64..0.95, 4)) {
        for fam in [families::family("diag4_unitary").unwrap(), families::family("rho_p").unwrap(), families::family("bloch2").unwrap()] {
            let theta = match &fam.feasible {
                RegionSpec::Nested(r) => r.to_params(&r.sample_vars(&u[..r.dim()])),
                _ => unreachable!(),
            };
            let d = fam.drho(&theta).unwrap();
            let h = 1e-6;
            for (i, di) in d.iter().enumerate() {
                let mut p = theta.clone();
                let mut m = theta.clone();
                p[i] += h;
                m[i] -= h;
                let fd = fam.rho(&p).unwrap().matrix().sub(fam.rho(&m).unwrap().matrix()).scale_real(0.5 / h);
                prop_assert!(fd.max_abs_diff(di.matrix()) < 1e-8, "{} d{}", fam.id, i);
            }
        }
    }

    #[test]
    fn metric_transforms_covariantly(u in prop::collection::vec(0.1f64..0.9, 3), a in prop::collection::vec(-1.0f64..1.0, 9)) {
        let fam = families::family("bloch2").unwrap();
        let RegionSpec::Nested(r) = &fam.feasible else { unreachable!() };
        let theta = r.sample_vars(&u);
        let g = metric_spectral(&fam, &theta).unwrap();
        let d = fam.drho(&theta).unwrap();
        // θ = A φ, so ∂ρ/∂φⱼ = Σᵢ Aᵢⱼ ∂ρ/∂θᵢ
        let dphi: Vec<HermitianMatrix> = (0..3)
            .map(|j| {
                let mut m = ComplexSquareMatrix::zeros(2);
                for i in 0..3 {
                    m.axpy(a[i * 3 + j], d[i].matrix());
                }
                HermitianMatrix::new_unchecked(m)
            })
            .collect();
        let rho = fam.rho(&theta).unwrap();
        let gphi = metric_from_derivatives(rho.hermitian(), &dphi, &Tolerances::default()).unwrap();
        let pulled = g.pullback(&a, 3);
        let scale = pulled.entries.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(gphi.max_abs_diff(&pulled) < 1e-11 * scale);
    }

    #[test]
    fn nested_product_integrals_factor(p in 0u32..5, q in 0u32..5, lo in -1.0f64..0.0, hi in 0.1f64..2.0) {
        let region = NestedRegion::new(
            RegionKind::Product,
            vec![Level::constant("x", lo, hi).flags(false, false), Level::constant("y", 0.0, 1.0).flags(false, false)],
        );
        let cfg = QuadratureConfig::multi_dim().with_rel_tol(1e-10);
        let both = integrate_nested(|t| t[0].powi(p as i32) * (1.0 + t[1]).powi(q as i32), &region, &cfg).unwrap();
        let fx = integrate_1d(|x| x.powi(p as i32), lo, hi, &cfg).unwrap().value;
        let fy = integrate_1d(|y| (1.0 + y).powi(q as i32), 0.0, 1.0, &cfg).unwrap().value;
        prop_assert!((both.value - fx * fy).abs() <= 1e-9 * (fx * fy).abs().max(1e-3));
    }

    #[test]
    fn sampled_points_are_feasible(seed in any::<u64>()) {
        for id in FAMILY_IDS {
            let fam = families::family(id).unwrap();
            if matches!(fam.feasible, RegionSpec::Unspecified(_) | RegionSpec::Empty) {
                continue;
            }
            for p in interior_points(&fam.feasible, 5, seed).unwrap() {
                prop_assert!(fam.min_eigenvalue(&p).unwrap() > -1e-12, "{id} at {p:?}");
            }
        }
    }

    #[test]
    fn entanglement_of_formation_vanishes_exactly_on_ppt_states(rho in random_state(4), mix in 0.0f64..1.0) {
        // pull toward the maximally mixed state so both verdicts occur
        let m = rho.scale_real(mix).add(&ComplexSquareMatrix::identity(4).scale_real(0.25 * (1.0 - mix)));
        let state = DensityMatrix::new(m, Dims::Bipartite(2, 2)).unwrap();
        let v = is_separable(&state).unwrap();
        prop_assume!(v.ppt_min_eigenvalue.abs() > 1e-9);
        let e = eof(&state).unwrap();
        prop_assert_eq!(v.is_ppt, e == 0.0, "ppt min {} concurrence {}", v.ppt_min_eigenvalue, concurrence(&state).unwrap());
    }

    #[test]
    fn doubling_levels_never_loosens_the_error(a in -0.9f64..2.0, b in -0.9f64..2.0, levels in 3u32..7) {
        let f = |x: f64| x.powf(a) * (1.0 - x).powf(b);
        let mut cfg = QuadratureConfig::one_dim().with_method(QuadratureMethod::DoubleExponential).with_rel_tol(1e-14);
        cfg.max_levels = levels;
        let coarse = integrate_1d(f, 0.0, 1.0, &cfg).unwrap();
        cfg.max_levels = 2 * levels;
        let fine = integrate_1d(f, 0.0, 1.0, &cfg).unwrap();
        prop_assert!(fine.err_estimate <= coarse.err_estimate, "{} > {}", fine.err_estimate, coarse.err_estimate);
    }

    #[test]
    fn integration_is_bit_reproducible(a in -0.9f64..2.0, lo in -1.0f64..0.0) {
        let region = NestedRegion::new(
            RegionKind::Product,
            vec![Level::constant("x", lo, 1.0), Level::constant("y", 0.0, 1.0)],
        );
        let f = |t: &[f64]| (t[0] - lo).powf(a) * (1.0 - t[1] * t[1]).sqrt();
        let cfg = QuadratureConfig::multi_dim();
        let first = integrate_nested(f, &region, &cfg).unwrap();
        let second = integrate_nested(f, &region, &cfg).unwrap();
        prop_assert_eq!(first.value.to_bits(), second.value.to_bits());
        prop_assert_eq!(first.err_estimate.to_bits(), second.err_estimate.to_bits());
    }
}
