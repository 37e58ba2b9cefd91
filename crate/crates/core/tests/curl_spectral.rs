use faer::Mat;
use hodgecurl_core::error::{SpectralError, SymplecticError};
use hodgecurl_core::linalg::col;
use hodgecurl_core::meshgen;
use hodgecurl_core::spectral::*;
use hodgecurl_core::sparse::dot;
use hodgecurl_core::symplectic::{LagrangianVerdict, PartitionSpec};
use hodgecurl_core::OrientedComplex3;
use proptest::prelude::*;

fn ball(r: usize) -> OrientedComplex3 {
    meshgen::ball(meshgen::ball_cells_for_refine(r), 1.0).complex().unwrap()
}

fn torus() -> OrientedComplex3 {
    meshgen::solid_torus(2.0, 1.0, 8, 8, 1).complex().unwrap()
}

fn genus2() -> OrientedComplex3 {
    meshgen::genus2_slab(1).complex().unwrap()
}

fn cases() -> Vec<(&'static str, OrientedComplex3)> {
    vec![("ball", ball(1)), ("torus", torus()), ("genus2", genus2())]
}

/// Smallest positive root of `tan x = x` by bisection on `sin x - x cos x`
/// over `(π, 3π/2)`.
fn tan_root() -> f64 {
    let f = |x: f64| x.sin() - x * x.cos();
    let (mut a, mut b) = (std::f64::consts::PI, 1.5 * std::f64::consts::PI);
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
fn ball_constant_matches_bisection() {
    assert!((BALL_BELTRAMI - tan_root()).abs() < 1e-12);
}

#[test]
fn closed_traces_give_symmetric_operators_for_every_partition() {
    for (name, c) in cases() {
        let bd = BoundaryData::new(&c).unwrap();
        for p in PartitionSpec::all(bd.genus()) {
            let spec = BoundaryConditionSpec::partition(TraceClass::Closed, p.clone());
            let op = restricted_operator(&c, &bd, &spec, false).unwrap();
            assert!(op.asymmetry <= 1e-10, "{name} {p:?}: asymmetry {:e}", op.asymmetry);
            assert!(op.space.residual <= 1e-11, "{name}: constraint residual {:e}", op.space.residual);
            assert_eq!(op.constraints.n_symplectic_rows(), bd.genus());
        }
    }
}

#[test]
fn coclosed_constraints_are_satisfied() {
    for (name, c) in cases() {
        let bd = BoundaryData::new(&c).unwrap();
        for p in PartitionSpec::all(bd.genus()) {
            let spec = BoundaryConditionSpec::partition(TraceClass::Coclosed, p);
            let op = restricted_operator(&c, &bd, &spec, false).unwrap();
            assert!(op.space.residual <= 1e-11, "{name}: constraint residual {:e}", op.space.residual);
            assert!(op.dim() > c.interior_edges().len(), "{name}");
        }
    }
}

#[test]
fn dropping_a_symplectic_row_breaks_symmetry() {
    for c in [torus(), genus2()] {
        let bd = BoundaryData::new(&c).unwrap();
        let spec = BoundaryConditionSpec::partition(TraceClass::Closed, PartitionSpec::from_i(bd.genus(), vec![1]).unwrap());
        let op = restricted_operator(&c, &bd, &spec, true).unwrap();
        assert_eq!(op.constraints.n_symplectic_rows(), bd.genus() - 1);
        assert!(op.asymmetry >= 1e-3, "asymmetry {:e}", op.asymmetry);
    }
}

#[test]
fn dropping_a_row_needs_a_handle() {
    let c = ball(1);
    let bd = BoundaryData::new(&c).unwrap();
    let spec = BoundaryConditionSpec::partition(TraceClass::Closed, PartitionSpec::from_i(0, vec![]).unwrap());
    assert!(restricted_operator(&c, &bd, &spec, true).is_err());
}

/// Columns `k` of the symplectic harmonic basis, with signs.
fn fields(bd: &BoundaryData, cols: &[(usize, f64)]) -> Mat<f64> {
    let f = &bd.basis.fields;
    Mat::from_fn(f.nrows(), cols.len(), |i, j| cols[j].1 * f[(i, cols[j].0)])
}

#[test]
fn explicit_selections_are_classified() {
    let c = torus();
    let bd = BoundaryData::new(&c).unwrap();
    let (v, asym) = validate_gkn(&c, &bd, TraceClass::Closed, &HarmonicSelection::Explicit(fields(&bd, &[(0, 1.0)]))).unwrap();
    assert_eq!(v, LagrangianVerdict::CompleteLagrangian);
    assert!(asym <= 1e-10);
    // The zero subspace is isotropic but not maximal; its orthogonal is the
    // whole harmonic space, so only exact traces remain.
    let (v, asym) = validate_gkn(&c, &bd, TraceClass::Closed, &HarmonicSelection::Explicit(fields(&bd, &[]))).unwrap();
    assert_eq!(v, LagrangianVerdict::Lagrangian);
    assert!(asym <= 1e-10);

    let c = genus2();
    let bd = BoundaryData::new(&c).unwrap();
    let sel = HarmonicSelection::Explicit(fields(&bd, &[(0, 1.0), (2, 1.0)]));
    let (v, asym) = validate_gkn(&c, &bd, TraceClass::Closed, &sel).unwrap();
    assert_eq!(v, LagrangianVerdict::No);
    assert!(asym >= 1e-3, "asymmetry {asym:e}");
    let spec = BoundaryConditionSpec { trace: TraceClass::Closed, harmonic: sel };
    assert!(matches!(
        restricted_operator(&c, &bd, &spec, false),
        Err(SpectralError::Symplectic(SymplecticError::InvalidLagrangian(_)))
    ));
}

#[test]
fn bad_selections_are_rejected() {
    let c = genus2();
    let bd = BoundaryData::new(&c).unwrap();
    let spec = BoundaryConditionSpec::partition(TraceClass::Closed, PartitionSpec::from_i(1, vec![1]).unwrap());
    assert!(matches!(
        restricted_operator(&c, &bd, &spec, false),
        Err(SpectralError::Symplectic(SymplecticError::BadPartition(_)))
    ));
    // A cochain that is not harmonic.
    let nb = bd.forms.n_edges();
    let junk = Mat::from_fn(nb, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let spec = BoundaryConditionSpec { trace: TraceClass::Closed, harmonic: HarmonicSelection::Explicit(junk) };
    assert!(matches!(
        restricted_operator(&c, &bd, &spec, false),
        Err(SpectralError::Symplectic(SymplecticError::InvalidLagrangian(_)))
    ));
    // Wrong number of rows.
    let spec = BoundaryConditionSpec {
        trace: TraceClass::Closed,
        harmonic: HarmonicSelection::Explicit(Mat::zeros(nb + 1, 1)),
    };
    assert!(restricted_operator(&c, &bd, &spec, false).is_err());
}

fn closed_op(c: &OrientedComplex3, bd: &BoundaryData) -> RestrictedOperator {
    let spec = BoundaryConditionSpec::partition(TraceClass::Closed, PartitionSpec::from_i(bd.genus(), vec![]).unwrap());
    restricted_operator(c, bd, &spec, false).unwrap()
}

#[test]
fn dense_spectrum_is_clean() {
    for (name, c) in [("ball", ball(1)), ("torus", torus())] {
        let bd = BoundaryData::new(&c).unwrap();
        let op = closed_op(&c, &bd);
        let rep = solve_spectrum(&c, &op, &SpectrumOptions { k: 8, ..Default::default() }).unwrap();
        assert_eq!(rep.method, SolverMethod::Dense);
        assert_eq!(rep.eigenvalues.len(), 8);
        for r in &rep.residuals {
            assert!(*r <= 1e-8, "{name}: residual {r:e}");
        }
        assert!(rep.gram_error <= 1e-8, "{name}: gram {:e}", rep.gram_error);
        assert!(rep.zero_mode_count >= op.space.gradients, "{name}");
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn symmetric_ball_spectrum_pairs_up() {
    let c = ball(1);
    let bd = BoundaryData::new(&c).unwrap();
    let rep = solve_spectrum(&c, &closed_op(&c, &bd), &SpectrumOptions { k: 12, ..Default::default() }).unwrap();
    assert!(pm_pairing_defect(&rep.eigenvalues) <= 1e-6);
}

#[test]
fn iterative_galerkin_finds_the_eigenvalues_nearest_the_shifts() {
    let c = ball(1);
    let bd = BoundaryData::new(&c).unwrap();
    let op = closed_op(&c, &bd);
    let full = hodgecurl_core::eigen::dense_pencil(&op.symmetric(), &op.m).unwrap().values;
    let shift = 3.7;
    let nearest = |sigma: f64, k: usize| {
        let mut v = full.clone();
        v.sort_by(|a, b| (a - sigma).abs().total_cmp(&(b - sigma).abs()));
        v.truncate(k);
        v
    };
    let mut want = nearest(shift, 3);
    want.extend(nearest(-shift, 3));
    want.sort_by(f64::total_cmp);
    let opts = SpectrumOptions { k: 6, dense_threshold: 0, shift: Some(shift), ..Default::default() };
    let it = solve_spectrum(&c, &op, &opts).unwrap();
    assert_eq!(it.method, SolverMethod::ShiftInvert { shift });
    assert_eq!(it.eigenvalues.len(), 6);
    for (a, b) in it.eigenvalues.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
    }
    assert!(it.gram_error <= 1e-8);
    assert!(!it.zero_modes_counted);
}

/// On the ball the Galerkin pencil carries eigenvalues below the continuum
/// one whose fields are far from curl-consistent:
/// `‖curl u‖² / (λ² ‖u‖²) ≫ 1`.
#[test]
fn galerkin_pencil_has_spurious_modes_on_the_ball() {
    let c = ball(1);
    let bd = BoundaryData::new(&c).unwrap();
    let op = closed_op(&c, &bd);
    let rep = solve_spectrum(&c, &op, &SpectrumOptions { k: 6, ..Default::default() }).unwrap();
    let lowest = rep.eigenvalues.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    assert!(lowest < 0.8 * BALL_BELTRAMI, "lowest {lowest}");
    for j in 0..rep.eigenvalues.len() {
        let x = col(rep.eigenvectors.as_ref(), j);
        let ratio = dot(&x, &op.k.mul_vec(&x)) / (rep.eigenvalues[j].powi(2) * dot(&x, &op.m.mul_vec(&x)));
        assert!(ratio > 5.0, "curl ratio {ratio}");
    }
}

#[test]
fn inverse_formulation_converges_on_the_ball() {
    let oracle = tan_root();
    let mut prev = f64::INFINITY;
    for r in [1, 2] {
        let c = ball(r);
        let bd = BoundaryData::new(&c).unwrap();
        let op = closed_op(&c, &bd);
        let opts = SpectrumOptions { k: 6, dense_threshold: 0, formulation: Formulation::Inverse, ..Default::default() };
        let rep = solve_spectrum(&c, &op, &opts).unwrap();
        assert_eq!(rep.method, SolverMethod::Lanczos);
        assert_eq!(rep.eigenvalues.len(), 6);
        // One triple at -λ and one at +λ.
        let lam = rep.eigenvalues[5];
        for (i, v) in rep.eigenvalues.iter().enumerate() {
            let want = if i < 3 { -lam } else { lam };
            assert!((v - want).abs() <= 1e-8 * lam, "{:?}", rep.eigenvalues);
        }
        for res in &rep.residuals {
            assert!(*res <= 1e-8);
        }
        let err = (lam - oracle).abs() / oracle;
        assert!(err < prev, "error {err} did not decrease from {prev}");
        prev = err;
    }
    assert!(prev < 0.07);
}

#[test]
fn inverse_dense_and_lanczos_agree() {
    let c = ball(1);
    let bd = BoundaryData::new(&c).unwrap();
    let op = closed_op(&c, &bd);
    let base = SpectrumOptions { k: 6, formulation: Formulation::Inverse, ..Default::default() };
    let dense = solve_spectrum(&c, &op, &base).unwrap();
    let it = solve_spectrum(&c, &op, &SpectrumOptions { dense_threshold: 0, ..base }).unwrap();
    assert_eq!(dense.method, SolverMethod::Dense);
    assert_eq!(dense.zero_mode_count, c.n_vertices() - 1);
    for (a, b) in dense.eigenvalues.iter().zip(&it.eigenvalues) {
        assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
    }
    // Eigenvectors of one eigenvalue are M-orthonormal.
    for rep in [&dense, &it] {
        let x = &rep.eigenvectors;
        let g = x.transpose() * op.m.mul_dense(x.as_ref());
        for blk in [0..3, 3..6] {
            for i in blk.clone() {
                for j in blk.clone() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - want).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn spectrum_is_deterministic() {
    let c = ball(1);
    let bd = BoundaryData::new(&c).unwrap();
    let op = closed_op(&c, &bd);
    let opts = SpectrumOptions { k: 4, dense_threshold: 0, seed: 11, ..Default::default() };
    let a = solve_spectrum(&c, &op, &opts).unwrap();
    let b = solve_spectrum(&c, &op, &opts).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
}

#[test]
fn pairing_defect_examples() {
    assert_eq!(pm_pairing_defect(&[-2.0, -1.0, 1.0, 2.0]), 0.0);
    assert!((pm_pairing_defect(&[-1.1, 1.0]) - 0.1).abs() < 1e-12);
    assert_eq!(pm_pairing_defect(&[1.0, 2.0]), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Graphs `[I; S]` of symmetric `S` are complete Lagrangians and give
    /// symmetric closed-trace operators.
    #[test]
    fn lagrangian_graphs_give_symmetric_operators(s in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let c = genus2();
        let bd = BoundaryData::new(&c).unwrap();
        let sym = [[s[0], s[1]], [s[1], s[2]]];
        let coords = Mat::from_fn(4, 2, |i, j| if i < 2 { (i == j) as u8 as f64 } else { sym[i - 2][j] });
        let sel = HarmonicSelection::Explicit(&bd.basis.fields * &coords);
        let (v, asym) = validate_gkn(&c, &bd, TraceClass::Closed, &sel).unwrap();
        prop_assert_eq!(v, LagrangianVerdict::CompleteLagrangian);
        prop_assert!(asym <= 1e-10, "asymmetry {:e}", asym);
    }
}
