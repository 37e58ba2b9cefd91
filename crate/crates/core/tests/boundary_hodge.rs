
use faer::Mat;
use hodgecurl_core::hodge::*;
use hodgecurl_core::homology::{betti, canonical_dual_pairs, VolumeCohomology};
use hodgecurl_core::linalg::{col, max_principal_angle, null_space};
use hodgecurl_core::meshgen;
use hodgecurl_core::sparse::CsrF;
use hodgecurl_core::OrientedComplex3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn torus(nu: usize, nv: usize, nw: usize) -> OrientedComplex3 {
    meshgen::solid_torus(2.0, 1.0, nu, nv, nw).complex().unwrap()
}

fn cases() -> Vec<(&'static str, OrientedComplex3, usize)> {
    vec![
        ("ball", meshgen::ball(4, 1.0).complex().unwrap(), 0),
        ("torus", torus(8, 8, 1), 1),
        ("genus2", meshgen::genus2_slab(1).complex().unwrap(), 2),
    ]
}

/// Null space of the stacked harmonic conditions `[d1; d0ᵀ M1]`, computed
/// densely by SVD.
fn dense_harmonic_oracle(c: &OrientedComplex3, forms: &BoundaryForms) -> Mat<f64> {
    let s = &c.boundary;
    let d1 = s.d1.to_f64();
    let div = s.d0.to_f64().transpose().matmul(&forms.m1);
    let stacked = CsrF::vstack(&[&d1, &div]).to_dense();
    null_space(stacked.as_ref(), 1e-10)
}

#[test]
fn harmonic_dimension_matches_betti_and_dense_oracle() {
    for (name, c, g) in cases() {
        let s = &c.boundary;
        let forms = BoundaryForms::new(s).unwrap();
        let h = harmonic_space(s, &forms).unwrap();
        assert_eq!(h.dim(), 2 * g, "{name}");
        assert_eq!(h.dim(), betti(s).b1, "{name}");
        let oracle = dense_harmonic_oracle(&c, &forms);
        assert_eq!(oracle.ncols(), 2 * g, "{name}: dense oracle dimension");
        if g > 0 {
            let angle = max_principal_angle(h.basis.as_ref(), oracle.as_ref());
            assert!(angle < 1e-8, "{name}: principal angle {angle:e}");
        }
        assert!(harmonic_residual(&forms, &h) < 1e-10, "{name}");
        let gram = h.basis.transpose() * forms.m1.mul_dense(h.basis.as_ref());
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn harmonic_basis_periods_and_gram_are_canonical() {
    for (name, c, g) in cases() {
        if g == 0 {
            continue;
        }
        let s = &c.boundary;
        let forms = BoundaryForms::new(s).unwrap();
        let h = harmonic_space(s, &forms).unwrap();
        let vc = VolumeCohomology::new(&c);
        let cycles = canonical_dual_pairs(&c, &vc).unwrap();
        let kb = symplectic_harmonic_basis(&forms, &h, &cycles).unwrap();
        for i in 0..2 * g {
            for j in 0..2 * g {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((kb.periods[(i, j)] - id).abs() < 1e-10, "{name}: period ({i},{j})");
                let jj = if i < g && j == i + g {
                    1.0
                } else if i >= g && j + g == i {
                    -1.0
                } else {
                    0.0
                };
                assert!((kb.gram[(i, j)] - jj).abs() < 1e-10, "{name}: gram ({i},{j}) = {}", kb.gram[(i, j)]);
            }
        }
    }
}

/// The pairing of closed cochains depends only on their periods:
/// `[α, β] = Σ_i (α(A_i) β(B_i) - α(B_i) β(A_i))` for a canonical basis.
#[test]
fn pairing_of_closed_cochains_follows_the_bilinear_relation() {
    let c = meshgen::genus2_slab(1).complex().unwrap();
    let s = &c.boundary;
    let forms = BoundaryForms::new(s).unwrap();
    let h = harmonic_space(s, &forms).unwrap();
    let vc = VolumeCohomology::new(&c);
    let basis = canonical_dual_pairs(&c, &vc).unwrap();
    let g = basis.genus;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let closed = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let p: Vec<f64> = (0..s.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut v = forms.grad(&p);
            for k in 0..h.dim() {
                let a: f64 = rng.gen_range(-2.0..2.0);
                for (x, y) in v.iter_mut().zip(col(h.basis.as_ref(), k)) {
                    *x += a * y;
                }
            }
            v
        };
        let a = closed(&mut rng);
        let b = closed(&mut rng);
        let period = |v: &[f64], k: usize| -> f64 {
            basis.cycles[k].iter().zip(v).map(|(&x, y)| x as f64 * y).sum()
        };
        let mut want = 0.0;
        for i in 0..g {
            want += period(&a, i) * period(&b, g + i) - period(&a, g + i) * period(&b, i);
        }
        let got = forms.pairing(&a, &b);
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }
}

fn random_cochain(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn hodge_split_reconstructs_and_satisfies_gauges() {
    for (name, c, _) in cases() {
        let s = &c.boundary;
        let forms = BoundaryForms::new(s).unwrap();
        let h = harmonic_space(s, &forms).unwrap();
        for seed in 0..5 {
            let w = random_cochain(s.n_edges(), seed);
            let sp = hodge_decompose(s, &forms, &h, &w).unwrap();
            let err = sp.reconstruction_error(&w);
            assert!(err < 1e-9, "{name}: reconstruction {err:e}");
            // Harmonic part is closed and co-closed.
            assert!(hodgecurl_core::sparse::max_abs(&forms.curl(&sp.harmonic)) < 1e-10);
            // Exact part is M1-orthogonal to coexact and harmonic parts.
            let ne = forms.norm(&sp.exact).max(1e-300);
            assert!(forms.inner(&sp.exact, &sp.coexact).abs() < 1e-9 * ne * forms.norm(&sp.coexact).max(1.0));
            assert!(forms.inner(&sp.exact, &sp.harmonic).abs() < 1e-9 * ne * forms.norm(&sp.harmonic).max(1.0));
            // Coexact part is M1-orthogonal to all closed cochains.
            assert!(hodgecurl_core::sparse::max_abs(&forms.codiff(&sp.coexact)) < 1e-9);
            // Gauges.
            let total_beta: f64 = sp.beta.iter().sum();
            assert!(total_beta.abs() < 1e-10 * sp.beta.iter().map(|x| x.abs()).sum::<f64>().max(1.0));
            let mean_alpha: f64 = forms.m0.mul_vec(&sp.alpha).iter().sum();
            assert!(mean_alpha.abs() < 1e-10 * max_abs_vec(&sp.alpha).max(1.0));
        }
    }
}

fn max_abs_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn hodge_rejects_wrong_length() {
    let c = meshgen::ball(2, 1.0).complex().unwrap();
    let forms = BoundaryForms::new(&c.boundary).unwrap();
    let h = harmonic_space(&c.boundary, &forms).unwrap();
    assert!(matches!(
        hodge_decompose(&c.boundary, &forms, &h, &[1.0]),
        Err(hodgecurl_core::HodgeError::SizeMismatch { .. })
    ));
}

#[test]
fn exact_cochains_are_isotropic() {
    for (name, c, _) in cases() {
        let s = &c.boundary;
        let forms = BoundaryForms::new(s).unwrap();
        let h = harmonic_space(s, &forms).unwrap();
        for seed in 0..5 {
            let a = hodge_decompose(s, &forms, &h, &random_cochain(s.n_edges(), seed)).unwrap();
            let b = hodge_decompose(s, &forms, &h, &random_cochain(s.n_edges(), 100 + seed)).unwrap();
            let p = forms.normalized_pairing(&a.exact, &b.exact);
            assert!(p.abs() <= 1e-12, "{name}: [exact, exact] = {p:e}");
            if h.dim() > 0 {
                let p = forms.normalized_pairing(&a.exact, &b.harmonic);
                assert!(p.abs() <= 1e-12, "{name}: [exact, harmonic] = {p:e}");
            }
        }
    }
}

/// The rotated harmonic fields approach the harmonic space under refinement.
#[test]
fn rotation_defect_decreases_with_refinement() {
    let mut prev = f64::INFINITY;
    for n in [4, 8, 16] {
        let c = torus(n, n, 1);
        let forms = BoundaryForms::new(&c.boundary).unwrap();
        let h = harmonic_space(&c.boundary, &forms).unwrap();
        let d = rotation_defect(&forms, &h);
        assert!(d < prev, "defect {d:e} did not decrease from {prev:e}");
        prev = d;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hodge_split_is_linear(seed in 0u64..1000, a in -3.0f64..3.0) {
        let c = torus(6, 4, 1);
        let s = &c.boundary;
        let forms = BoundaryForms::new(s).unwrap();
        let h = harmonic_space(s, &forms).unwrap();
        let u = random_cochain(s.n_edges(), seed);
        let v = random_cochain(s.n_edges(), seed + 1);
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let (su, sv, sw) = (
            hodge_decompose(s, &forms, &h, &u).unwrap(),
            hodge_decompose(s, &forms, &h, &v).unwrap(),
            hodge_decompose(s, &forms, &h, &w).unwrap(),
        );
        for i in 0..s.n_edges() {
            prop_assert!((sw.harmonic[i] - a * su.harmonic[i] - sv.harmonic[i]).abs() < 1e-10);
            prop_assert!((sw.exact[i] - a * su.exact[i] - sv.exact[i]).abs() < 1e-9);
        }
    }
}
