use bec_sweep::exact::*;
use bec_sweep::sector::*;
use bec_sweep::tdse::*;
use bec_sweep::Error;

fn single(n: u32, lambda: f64) -> (SectorSpec, SectorBasis, AffineHamiltonian) {
    let spec = SectorSpec::single_channel(n, 0, lambda.sqrt(), 1.0).unwrap();
    let basis = enumerate_basis(&spec).unwrap();
    let h = build_hamiltonian(&spec, &basis).unwrap();
    (spec, basis, h)
}

#[test]
fn gauges_agree_on_probabilities() {
    let spec = SectorSpec::new(2, vec![1, 0], 0.6, 1.0, 0.5, vec![0.0, 1.0]).unwrap();
    let basis = enumerate_basis(&spec).unwrap();
    let init = basis.all_atoms();
    let plain = IntegrationPlan::new(-20.0, 20.0, 2e-4, Gauge::Plain).unwrap().with_projection(Projection::Diabatic);
    let inter = IntegrationPlan::new(-20.0, 20.0, 2e-4, Gauge::Interaction).unwrap().with_projection(Projection::Diabatic);
    let a = transition_probabilities(&spec, &init, &plain).unwrap();
    let b = transition_probabilities(&spec, &init, &inter).unwrap();
    for (x, y) in a.probs.iter().zip(&b.probs) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn two_level_probability_and_phase() {
    let (spec, basis, h) = single(1, 0.4);
    let plan = IntegrationPlan::symmetric(&h, 400.0, 0.1).unwrap();
    let r = transition_probabilities(&spec, &basis.all_atoms(), &plan).unwrap();
    let (p, phi) = lz_reference(spec.g, spec.beta).unwrap();
    assert!((r.prob_of(&basis.all_molecules()) - p).abs() < 1e-4);
    assert!(r.norm_drift < NORM_DRIFT_LIMIT);
    let ph = extract_scattering_phase(&spec, &basis.all_atoms(), &basis.all_molecules(), &plan, &PhaseCalibration::none()).unwrap();
    assert!(phase_distance(ph.phase, phi).abs() < 1e-2);
}

#[test]
fn reverse_two_level_matches_closed_form() {
    let spec = SectorSpec::single_channel(2, 1, 0.5, -1.0).unwrap();
    let basis = enumerate_basis(&spec).unwrap();
    let h = build_hamiltonian(&spec, &basis).unwrap();
    let plan = IntegrationPlan::symmetric(&h, 300.0, 0.05).unwrap();
    let r = transition_probabilities(&spec, &basis.all_molecules(), &plan).unwrap();
    let exact = reverse_distribution(2, 1, &SweepParams::new(0.5, 1.0).unwrap());
    // TDSE marginal is in molecules n, the closed form in pairs m = N − n.
    for n in 0..=2i64 {
        assert!((r.molecule_marginal().prob(n) - exact.prob(2 - n)).abs() < 1e-4);
    }
}

#[test]
fn window_convergence_passes_when_wide() {
    let (spec, basis, h) = single(1, 0.5);
    let plan = IntegrationPlan::symmetric(&h, 200.0, 0.1).unwrap();
    let change = check_window_convergence(&spec, &basis.all_atoms(), &plan).unwrap();
    assert!(change < WINDOW_CONVERGENCE_LIMIT);
}

#[test]
fn truncated_window_is_flagged() {
    let (spec, basis, _) = single(1, 0.5);
    let plan = IntegrationPlan::new(-5.0, 5.0, 1e-3, Gauge::Interaction).unwrap();
    assert!(matches!(check_window_convergence(&spec, &basis.all_atoms(), &plan), Err(Error::Convergence(_))));
}

#[test]
fn oversized_step_is_rejected() {
    let (spec, basis, _) = single(3, 0.5);
    let plan = IntegrationPlan::new(-100.0, 100.0, 5.0, Gauge::Plain).unwrap();
    assert!(matches!(transition_probabilities(&spec, &basis.all_atoms(), &plan), Err(Error::StepSize { .. })));
}

#[test]
fn uncoupled_sector_does_not_move() {
    let spec = SectorSpec::relaxed(2, vec![0, 0], 0.0, 1.0, 1.0, vec![0.5, 0.5]).unwrap();
    let basis = enumerate_basis(&spec).unwrap();
    let plan = IntegrationPlan::new(-50.0, 50.0, 1e-2, Gauge::Interaction).unwrap().with_projection(Projection::Diabatic);
    let r = transition_probabilities(&spec, &basis.all_atoms(), &plan).unwrap();
    assert!((r.prob_of(&basis.all_atoms()) - 1.0).abs() < 1e-14);
    let err = extract_scattering_phase(&spec, &basis.all_atoms(), &basis.all_molecules(), &plan, &PhaseCalibration::none());
    assert!(matches!(err, Err(Error::NoTransition(_))));
}

#[test]
fn forward_three_pairs_against_closed_form() {
    let (spec, basis, h) = single(3, 0.3);
    let plan = IntegrationPlan::symmetric(&h, 200.0, 0.05).unwrap();
    let r = transition_probabilities(&spec, &basis.all_atoms(), &plan).unwrap();
    let exact = forward_distribution(3, 0, &SweepParams::from_lambda(0.3).unwrap()).unwrap();
    assert!(r.molecule_marginal().max_abs_diff(&exact) < 1e-4);
}
