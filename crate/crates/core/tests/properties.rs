use mdisp::linalg::{max_abs, spectral_norm};
use mdisp::linrel::{
    adjoint_relation, cayley, classify_relation, inverse_cayley, ContractionOp, LinearRelation,
    PivotSpace,
};
use mdisp::maxwell1d::{build_generator, evolve_cn, BoundarySpec, Maxwell1D};
use mdisp::morder::{MOrderWeights, Side, Signature};
use mdisp::sampling::{complex_gaussian, random_contraction, random_psd, rng_from_seed};
use mdisp::scalar::{CMat, C};
use nalgebra::DVector;
use proptest::prelude::*;

fn weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| mdisp::sampling::gaussian::<f64, _>(&mut rng).exp())
        .collect()
}

/// Graph of `H - iP` on a random subspace, `H` Hermitian and `P ≥ 0`.
fn dissipative_relation(n: usize, d: usize, seed: u64) -> LinearRelation<f64> {
    let mut rng = rng_from_seed(seed);
    let g = complex_gaussian::<f64>(n, n, &mut rng);
    let h = (&g + g.adjoint()) * C::new(0.5, 0.0);
    let p = random_psd::<f64>(n, 1 + (seed as usize % n), &mut rng);
    let a = h - p * C::new(0.0, 1.0);
    let dom = complex_gaussian::<f64>(n, d, &mut rng);
    LinearRelation::graph_on(PivotSpace::new(n), &a, &dom).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_is_an_involution(n in 1usize..6, r in 0usize..12, seed in any::<u64>()) {
        let r = r.min(2 * n);
        let mut rng = rng_from_seed(seed);
        let f = complex_gaussian::<f64>(n, r, &mut rng);
        let fp = complex_gaussian::<f64>(n, r, &mut rng);
        let space = PivotSpace::weighted(weights(n, seed ^ 1)).unwrap();
        let rel = LinearRelation::from_pairs(space, &f, &fp).unwrap();
        let back = adjoint_relation(&adjoint_relation(&rel));
        prop_assert!(back.distance(&rel) < 1e-9);
        prop_assert_eq!(adjoint_relation(&rel).rank(), 2 * n - rel.rank());
    }

    #[test]
    fn cayley_of_dissipative_is_contractive(n in 1usize..7, d in 1usize..7, seed in any::<u64>()) {
        let rel = dissipative_relation(n, d.min(n), seed);
        let c = cayley(&rel).unwrap();
        prop_assert!(spectral_norm(c.matrix()) <= 1.0 + 1e-12);
    }

    #[test]
    fn maximality_routes_agree(n in 1usize..7, d in 1usize..7, seed in any::<u64>()) {
        let rel = dissipative_relation(n, d.min(n), seed);
        let v = classify_relation(&rel, 0);
        let c = cayley(&rel).unwrap();
        prop_assert!(v.dissipative);
        prop_assert_eq!(v.maximal_dissipative, rel.rank() == n);
        prop_assert_eq!(v.maximal_dissipative, c.is_total());
    }

    #[test]
    fn cayley_round_trip(n in 1usize..9, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let space = PivotSpace::weighted(weights(n, seed ^ 2)).unwrap();
        let k = ContractionOp::new(space.clone(), space.operator_from_iso(&random_contraction::<f64>(n, &mut rng))).unwrap();
        let rel = inverse_cayley(&k);
        prop_assert!(classify_relation(&rel, 0).maximal_dissipative);
        let k2 = cayley(&rel).unwrap();
        prop_assert!(max_abs(&(k2.matrix() - k.matrix())) < 1e-12);
        let rel2 = inverse_cayley(&k2.into_contraction().unwrap());
        prop_assert!(rel2.distance(&rel) < 1e-12);
    }

    #[test]
    fn sharp_adjoint_is_an_involution(n in 1usize..8, seed in any::<u64>()) {
        let w = MOrderWeights::new(weights(n, seed)).unwrap();
        let t = complex_gaussian::<f64>(n, n, &mut rng_from_seed(seed ^ 3));
        for sig in Signature::ALL {
            let back = w.sharp_adjoint(&w.sharp_adjoint(&t, sig).unwrap(), sig).unwrap();
            prop_assert!(max_abs(&(back - &t)) < 1e-12 * max_abs(&t).max(1.0));
        }
        let (a, b) = w.sharp_norms(&t, Signature::A1).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn dual_norm_matches_closed_form(n in 1usize..10, seed in any::<u64>()) {
        let w = MOrderWeights::new(weights(n, seed)).unwrap();
        let h = complex_gaussian::<f64>(n, 1, &mut rng_from_seed(seed ^ 4)).column(0).into_owned();
        for side in [Side::MinusPlus, Side::PlusMinus, Side::Pivot] {
            let closed = w.norm(&h, side);
            prop_assert!((w.dual_norm(&h, side) - closed).abs() <= 1e-10 * closed);
        }
        let u = w.unitary_maps();
        let there = mdisp::morder::UnitaryMaps::apply(&u.to_minus_plus, &h);
        let back = mdisp::morder::UnitaryMaps::apply_inverse(&u.to_minus_plus, &there);
        prop_assert!((back - &h).norm() <= 1e-14 * h.norm());
        prop_assert!((w.norm(&there, Side::MinusPlus) - h.norm()).abs() <= 1e-12 * h.norm());
    }

    #[test]
    fn discrete_energy_never_grows(seed in any::<u64>(), z0 in 0.0f64..5.0, z1 in 0.0f64..5.0) {
        let m = Maxwell1D::<f64>::constant(1.0 + (seed % 3) as f64, 1.0).unwrap();
        let mut rng = rng_from_seed(seed);
        let bcs = [
            BoundarySpec::impedance(z0, z1),
            BoundarySpec::contraction(random_contraction::<f64>(2, &mut rng)).unwrap(),
        ];
        for bc in &bcs {
            let g = build_generator(&m, bc, 24).unwrap();
            let psi0: DVector<C<f64>> = complex_gaussian::<f64>(g.dim(), 1, &mut rng).column(0).into_owned();
            let tr = evolve_cn(&g, &psi0, 2e-2, 40).unwrap();
            prop_assert!(tr.max_energy_increase() <= 1e-12);
            for r in &tr.records {
                prop_assert!(r.boundary_flux <= 1e-10 * r.energy.max(1.0) * 48.0);
            }
        }
    }

    #[test]
    fn impedance_assembly_matches_contraction(z0 in 0.0f64..50.0, z1 in 0.0f64..50.0) {
        let m = Maxwell1D::<f64>::vacuum();
        let bz = BoundarySpec::impedance(z0, z1);
        let gz = build_generator(&m, &bz, 20).unwrap();
        let gk = build_generator(&m, &BoundarySpec::contraction(bz.k_matrix().unwrap()).unwrap(), 20).unwrap();
        prop_assert!(max_abs(&(&gz.matrix - &gk.matrix)) <= 1e-12 * max_abs(&gk.matrix));
    }
}

#[test]
fn single_precision_cayley_round_trip() {
    let mut rng = rng_from_seed(9);
    let k = ContractionOp::<f32>::unweighted(random_contraction::<f32>(4, &mut rng)).unwrap();
    let back = cayley(&inverse_cayley(&k)).unwrap();
    assert!(max_abs(&(back.matrix() - k.matrix())) < 1e-4);
}

#[test]
fn single_precision_generator_is_dissipative() {
    let g = build_generator(
        &Maxwell1D::<f32>::vacuum(),
        &BoundarySpec::impedance(1.0f32, 0.5),
        32,
    )
    .unwrap();
    let psi: Vec<C<f32>> = (0..g.dim())
        .map(|k| C::new((k as f32 * 0.37).sin(), (k as f32 * 0.11).cos()))
        .collect();
    let mut out = vec![C::new(0.0f32, 0.0); g.dim()];
    g.apply(&psi, &mut out);
    assert!(g.inner(&out, &psi).im <= 1e-3);
    let _ = CMat::<f32>::zeros(1, 1);
}
