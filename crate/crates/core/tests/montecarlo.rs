use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use psi6::montecarlo::{
    estimate_correlation, estimate_probabilities, sample_counts, sample_three_bases, witness_from_counts, ErrorModel,
    EventBudget, EXPERIMENT_HOURS_PER_SETTING, EXPERIMENT_RATE_PER_HOUR,
};
use psi6::optics::NamedBasis;
use psi6::qstate::{add_white_noise, outcome_distribution, parse_basis_label, reference_state, DensityOperator, RefState, SettingVector};
use psi6::witness::{expectation, psi6_reduced_witness};

const P_EXP: f64 = 0.859;

fn rho() -> DensityOperator {
    add_white_noise(&reference_state(RefState::Psi6Plus), P_EXP).unwrap()
}

fn hv() -> SettingVector {
    SettingVector::named(NamedBasis::HV, 6)
}

#[test]
fn large_sample_frequencies() {
    let t = sample_counts(&reference_state(RefState::Psi6Plus), &hv(), EventBudget::Fixed(1_000_000), 21).unwrap();
    let p = estimate_probabilities(&t, ErrorModel::Multinomial).unwrap();
    assert_abs_diff_eq!(p[parse_basis_label("HHHVVV").unwrap()].value, 0.25, epsilon = 0.002);
    let truth = outcome_distribution(&reference_state(RefState::Psi6Plus), &hv()).unwrap();
    for (e, t) in p.iter().zip(truth) {
        assert!((e.value - t).abs() <= 3.0 * e.standard_error + 1e-15, "{} vs {t}", e.value);
    }
}

#[test]
fn uniform_state_bins() {
    let t = sample_counts(&DensityOperator::maximally_mixed(6), &hv(), EventBudget::Fixed(640_000), 2).unwrap();
    for e in estimate_probabilities(&t, ErrorModel::PoissonPerBin).unwrap() {
        assert_abs_diff_eq!(e.value, 1.0 / 64.0, epsilon = 5.0 * e.standard_error);
    }
}

#[test]
fn poisson_budget_matches_acquisition_time() {
    let budget = EventBudget::Poisson { duration_hours: EXPERIMENT_HOURS_PER_SETTING, rate_per_hour: EXPERIMENT_RATE_PER_HOUR };
    let totals: Vec<u64> = (0..400).map(|s| sample_counts(&rho(), &hv(), budget, s).unwrap().total()).collect();
    let mean = totals.iter().sum::<u64>() as f64 / totals.len() as f64;
    // Poisson(319.6): SE of the mean over 400 runs is about 0.9
    assert!((mean - 319.6).abs() < 4.0, "mean {mean}");
}

#[test]
fn correlation_calibration_at_experimental_size() {
    let truth = -P_EXP;
    let mut within_3se = 0;
    for seed in 0..1000 {
        let e = estimate_correlation(&sample_counts(&rho(), &hv(), EventBudget::Fixed(320), seed).unwrap()).unwrap();
        if (e.value - truth).abs() <= 3.0 * e.standard_error {
            within_3se += 1;
        }
    }
    assert!(within_3se >= 990, "{within_3se}/1000");
}

#[test]
fn one_se_coverage() {
    let mut covered = 0;
    for seed in 0..2000 {
        let e = estimate_correlation(&sample_counts(&rho(), &hv(), EventBudget::Fixed(320), 10_000 + seed).unwrap()).unwrap();
        if (e.value + P_EXP).abs() <= e.standard_error {
            covered += 1;
        }
    }
    let frac = covered as f64 / 2000.0;
    assert!((frac - 0.68).abs() <= 0.03, "coverage {frac}");
}

#[test]
fn large_sample_convergence() {
    for (basis, ideal) in [(NamedBasis::HV, -1.0), (NamedBasis::DA, 1.0), (NamedBasis::LR, 1.0)] {
        let t = sample_counts(&rho(), &SettingVector::named(basis, 6), EventBudget::Fixed(1_000_000), 77).unwrap();
        let e = estimate_correlation(&t).unwrap();
        assert!(e.standard_error < 0.002);
        assert!((e.value - P_EXP * ideal).abs() <= 5.0 * e.standard_error);
    }
}

#[test]
fn witness_from_samples() {
    let w = psi6_reduced_witness(&reference_state(RefState::Psi6Plus)).unwrap();
    let exact = expectation(&w, &rho()).unwrap();

    let tables = sample_three_bases(&rho(), EventBudget::Fixed(2_000_000), 5).unwrap();
    let big = witness_from_counts(&w, &tables).unwrap();
    assert!((big.value - exact).abs() <= 5.0 * big.standard_error);

    let mut negative = 0;
    for seed in 0..500 {
        let tables = sample_three_bases(&rho(), EventBudget::Fixed(320), seed).unwrap();
        if witness_from_counts(&w, &tables).unwrap().value < 0.0 {
            negative += 1;
        }
    }
    assert!(negative > 250, "{negative}/500");
}

#[test]
fn witness_needs_matching_tables() {
    let w = psi6_reduced_witness(&reference_state(RefState::Psi6Plus)).unwrap();
    let only_z = sample_counts(&rho(), &hv(), EventBudget::Fixed(10), 1).unwrap();
    assert!(witness_from_counts(&w, &[only_z]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn seeded_sampling_is_deterministic(seed in any::<u64>(), n in 0u64..2000) {
        let a = sample_counts(&rho(), &hv(), EventBudget::Fixed(n), seed).unwrap();
        let b = sample_counts(&rho(), &hv(), EventBudget::Fixed(n), seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total(), n);
        if n > 0 {
            let sum: f64 = estimate_probabilities(&a, ErrorModel::Multinomial).unwrap().iter().map(|e| e.value).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
