use hodgecurl_core::curlcurl::*;
use hodgecurl_core::forms::curl_curl_direct;
use hodgecurl_core::meshgen;
use hodgecurl_core::spectral::{
    restricted_operator, BoundaryConditionSpec, BoundaryData, Formulation, SpectrumOptions, TraceClass,
};
use hodgecurl_core::symplectic::PartitionSpec;
use hodgecurl_core::{OrientedComplex3, SpectralError};

fn ball_n(n: usize) -> OrientedComplex3 {
    meshgen::ball(n, 1.0).complex().unwrap()
}

fn torus() -> OrientedComplex3 {
    meshgen::solid_torus(2.0, 1.0, 8, 8, 1).complex().unwrap()
}

/// Lowest `x` with `(x j1(x))' = 0`, i.e. `cos x / x - sin x / x² + sin x = 0`,
/// by bisection on `(2, 3)`.
fn cavity_root() -> f64 {
    let f = |x: f64| x.cos() / x - x.sin() / (x * x) + x.sin();
    let (mut a, mut b) = (2.0f64, 3.0f64);
    assert!(f(a) * f(b) < 0.0);
    while b - a > 1e-14 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn gradients_are_in_the_kernel_and_k_is_symmetric() {
    for c in [ball_n(4), torus()] {
        for bc in [CurlCurlBc::Dirichlet, CurlCurlBc::Neumann] {
            let op = assemble_curlcurl(&c, bc);
            assert_eq!(op.k.axpby(1.0, &op.k.transpose(), -1.0).max_abs(), 0.0);
            // D1 applied to the gradients vanishes exactly.
            let d1 = c.d1.to_f64().select_cols(&op.edges);
            assert!(d1.matmul(&op.gradients).max_abs() == 0.0);
            let kg = op.k.matmul(&op.gradients);
            assert!(kg.max_abs() <= 1e-12 * op.k.max_abs());
        }
    }
}

#[test]
fn stiffness_matches_elementwise_assembly() {
    let c = ball_n(4);
    let op = assemble_curlcurl(&c, CurlCurlBc::Neumann);
    let direct = curl_curl_direct(&c);
    let diff = op.k.axpby(1.0, &direct, -1.0).max_abs();
    assert!(diff <= 1e-12 * direct.max_abs(), "{diff:e}");
}

#[test]
fn dirichlet_ball_spectrum() {
    let c = ball_n(4);
    let op = assemble_curlcurl(&c, CurlCurlBc::Dirichlet);
    let sp = curlcurl_spectrum(&op, 6, 1e-8, 5000, 0).unwrap();
    assert!(sp.min_relative.unwrap() >= -1e-10);
    assert!(sp.values[0] > 0.0);
    // The potentials vanish on the sphere, so every interior hat function
    // contributes one kernel direction.
    assert_eq!(sp.zero_mode_count, c.interior_vertices().len());
    assert_eq!(op.gradients.ncols(), c.interior_vertices().len());
}

#[test]
fn neumann_kernel_is_all_gradients_on_the_ball() {
    let c = ball_n(4);
    let op = assemble_curlcurl(&c, CurlCurlBc::Neumann);
    let sp = curlcurl_spectrum(&op, 6, 1e-8, 5000, 0).unwrap();
    assert_eq!(sp.zero_mode_count, c.n_vertices() - 1);
    assert!(sp.min_relative.unwrap() >= -1e-10);
}

#[test]
fn dense_and_lanczos_agree() {
    let c = ball_n(4);
    for bc in [CurlCurlBc::Dirichlet, CurlCurlBc::Neumann] {
        let op = assemble_curlcurl(&c, bc);
        let dense = curlcurl_spectrum(&op, 6, 1e-8, 5000, 0).unwrap();
        let it = curlcurl_spectrum(&op, 6, 1e-8, 0, 0).unwrap();
        assert!(!it.zero_modes_counted);
        for (a, b) in dense.values.iter().zip(&it.values) {
            assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
        }
    }
}

#[test]
fn dirichlet_ball_converges_to_the_cavity_eigenvalue() {
    let want = cavity_root().powi(2);
    let mut prev = f64::INFINITY;
    for n in [4, 8] {
        let op = assemble_curlcurl(&ball_n(n), CurlCurlBc::Dirichlet);
        let sp = curlcurl_spectrum(&op, 3, 1e-8, 0, 0).unwrap();
        // Lowest mode is threefold.
        assert!((sp.values[2] - sp.values[0]).abs() <= 1e-8 * sp.values[0]);
        let err = (sp.values[0] - want).abs() / want;
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 0.05, "{prev}");
}

#[test]
fn squared_curl_spectrum_is_the_square_on_the_torus() {
    let c = torus();
    let bd = BoundaryData::new(&c).unwrap();
    for trace in [TraceClass::Closed, TraceClass::Coclosed] {
        let spec = BoundaryConditionSpec::partition(trace, PartitionSpec::from_i(1, vec![1]).unwrap());
        let op = restricted_operator(&c, &bd, &spec, false).unwrap();
        let sc = square_check(&op, 1e-6).unwrap();
        assert_eq!(sc.zero_lambda, sc.zero_squared, "{trace:?}");
        assert!(sc.max_rel_mismatch <= 1e-7, "{trace:?}: {:e}", sc.max_rel_mismatch);
        assert!(!sc.squared.is_empty());
    }
}

#[test]
fn squared_spectrum_doubles_paired_eigenvalues() {
    let c = ball_n(4);
    let bd = BoundaryData::new(&c).unwrap();
    let spec = BoundaryConditionSpec::partition(TraceClass::Closed, PartitionSpec::from_i(0, vec![]).unwrap());
    let op = restricted_operator(&c, &bd, &spec, false).unwrap();
    let sc = square_check(&op, 1e-6).unwrap();
    let lowest = sc.squared[0];
    let copies = sc.squared.iter().filter(|v| (*v - lowest).abs() <= 1e-8 * lowest).count();
    assert!(copies >= 2, "{copies}");
}

#[test]
fn hausdorff_examples() {
    assert_eq!(hausdorff(&[], &[]), 0.0);
    assert_eq!(hausdorff(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    assert_eq!(hausdorff(&[1.0], &[1.0, 4.0]), 3.0);
    assert_eq!(hausdorff(&[1.0, 4.0], &[1.0]), 3.0);
}

#[test]
fn mismatch_demo_reports_both_lists_with_error_bars() {
    let levels = [ball_n(2), ball_n(4), ball_n(6)];
    let opts = SpectrumOptions { k: 4, formulation: Formulation::Inverse, ..Default::default() };
    let rep = dirichlet_mismatch_demo(&levels, &opts).unwrap();
    assert_eq!(rep.note, MISMATCH_NOTE);
    assert!(rep.note.contains("not a proof"));
    let names: Vec<&str> = rep.series.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["dirichlet", "neumann", "closed", "coclosed"]);
    for s in &rep.series {
        assert_eq!(s.values.len(), 3);
        assert_eq!(s.finest().len(), 4);
        assert!(s.error_bars.iter().all(|b| b.is_finite()));
        assert_eq!(s.error_bars[0], (s.values[2][0] - s.values[1][0]).abs());
    }
    assert_eq!(rep.comparisons.len(), 4);
    for cmp in &rep.comparisons {
        let a = rep.series.iter().find(|s| s.name == cmp.curlcurl).unwrap().finest();
        let b = rep.series.iter().find(|s| s.name == cmp.curl).unwrap().finest();
        assert_eq!(cmp.hausdorff, hausdorff(a, b));
        assert_eq!(cmp.separated, cmp.lowest_gap.abs() > cmp.combined_error_bar);
    }
    assert_eq!(rep.tets.len(), 3);
}

#[test]
fn mismatch_demo_needs_genus_zero() {
    let opts = SpectrumOptions { k: 2, ..Default::default() };
    assert!(matches!(dirichlet_mismatch_demo(&[torus()], &opts), Err(SpectralError::Unsupported(_))));
    assert!(matches!(dirichlet_mismatch_demo(&[], &opts), Err(SpectralError::Unsupported(_))));
}
