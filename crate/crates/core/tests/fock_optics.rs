use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use psi6::fock::{
    apply_network, pdc_term, postselect_filtered, postselect_one_per_spatial_mode, FockPolynomial, ModeRegister, Occupation,
    PdcSource,
};
use psi6::optics::{experiment_network, LinearNetwork, NamedBasis, NetworkPreset};
use psi6::qstate::{add_white_noise, outcome_distribution, reference_state, RefState, SettingVector};
use psi6::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    fn rec(m: &DMatrix<Complex64>, row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == m.nrows() {
            return Complex64::ONE;
        }
        let mut acc = Complex64::ZERO;
        for c in 0..m.ncols() {
            if !used[c] {
                used[c] = true;
                acc += m[(row, c)] * rec(m, row + 1, used);
                used[c] = false;
            }
        }
        acc
    }
    rec(m, 0, &mut vec![false; m.ncols()])
}

fn expand(occ: &[u8]) -> Vec<usize> {
    occ.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect()
}

/// `⟨t|Û|s⟩ = Per(U[t, s]) / √(Π s! Π t!)` summed over the input terms.
fn oracle(state: &FockPolynomial, u: &DMatrix<Complex64>, outputs: &[Occupation]) -> BTreeMap<Occupation, Complex64> {
    outputs
        .iter()
        .map(|t| {
            let rows = expand(t);
            let amp: Complex64 = state
                .terms()
                .filter(|(s, _)| expand(s).len() == rows.len())
                .map(|(s, _)| {
                    let cols = expand(s);
                    let sub = DMatrix::from_fn(rows.len(), cols.len(), |r, c| u[(rows[r], cols[c])]);
                    let norm = (s.iter().chain(t.iter()).map(|&k| factorial(k)).product::<f64>()).sqrt();
                    state.fock_amplitude(s) * permanent(&sub) / norm
                })
                .sum();
            (t.clone(), amp)
        })
        .collect()
}

fn all_occupations(modes: usize, photons: u8) -> Vec<Occupation> {
    if modes == 1 {
        return vec![vec![photons]];
    }
    (0..=photons)
        .flat_map(|k| {
            all_occupations(modes - 1, photons - k).into_iter().map(move |mut rest| {
                rest.insert(0, k);
                rest
            })
        })
        .collect()
}

fn random_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution is Haar
    let phases = DMatrix::from_fn(dim, dim, |i, j| if i == j { r[(i, i)] / r[(i, i)].norm() } else { Complex64::ZERO });
    q * phases
}

fn random_state(register: &ModeRegister, max_photons: u8, rng: &mut impl Rng) -> FockPolynomial {
    let m = register.len();
    let terms: Vec<(Occupation, Complex64)> = (0..3)
        .map(|_| {
            let photons = rng.random_range(1..=max_photons);
            let occs = all_occupations(m, photons);
            (occs[rng.random_range(0..occs.len())].clone(), Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .collect();
    FockPolynomial::from_terms(register.clone(), terms).unwrap()
}

fn register(spatial: usize) -> ModeRegister {
    ModeRegister::polarized(&["p", "q", "r"][..spatial]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn apply_network_matches_permanent_oracle(spatial in 1usize..=3, photons in 1u8..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = register(spatial);
        let u = random_unitary(reg.len(), &mut rng);
        let net = LinearNetwork::new(reg.clone(), reg.clone(), u.clone()).unwrap();
        let state = random_state(&reg, photons, &mut rng);
        let out = apply_network(&state, &net).unwrap();
        let outputs: Vec<Occupation> = (1..=photons).flat_map(|k| all_occupations(reg.len(), k)).collect();
        for (t, amp) in oracle(&state, &u, &outputs) {
            prop_assert!((out.fock_amplitude(&t) - amp).norm() < 1e-10, "{t:?}");
        }
        prop_assert!((out.norm_sqr() - state.norm_sqr()).abs() < 1e-10 * state.norm_sqr().max(1.0));
    }

    #[test]
    fn apply_network_is_linear(seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = register(2);
        let net = LinearNetwork::new(reg.clone(), reg.clone(), random_unitary(reg.len(), &mut rng)).unwrap();
        let (a, b) = (random_state(&reg, 3, &mut rng), random_state(&reg, 3, &mut rng));
        let z = Complex64::new(re, im);
        let lhs = apply_network(&a.scale(z).add(&b).unwrap(), &net).unwrap();
        let rhs = apply_network(&a, &net).unwrap().scale(z).add(&apply_network(&b, &net).unwrap()).unwrap();
        let keys: Vec<Occupation> = lhs.terms().chain(rhs.terms()).map(|(o, _)| o.clone()).collect();
        for k in keys {
            prop_assert!((lhs.coefficient(&k) - rhs.coefficient(&k)).norm() < 1e-9);
        }
    }

    #[test]
    fn postselection_is_monotone(alpha in 0.05f64..0.5, phase in 0.0f64..std::f64::consts::TAU, keep in any::<u64>()) {
        let source = PdcSource::new(Complex64::new(alpha, 0.0), phase).unwrap();
        let out = apply_network(&pdc_term(&source, 3), &experiment_network()).unwrap();
        let modes = ["a", "b", "c", "d", "e", "f"];
        let all = postselect_one_per_spatial_mode(&out, &modes).unwrap();
        let some = postselect_filtered(&out, &modes, |k| keep >> k & 1 == 1).unwrap();
        prop_assert!(some.success_probability <= all.success_probability + 1e-15);
        prop_assert!(all.success_probability <= 1.0);
    }

    #[test]
    fn outcome_distributions_sum_to_one(p in 0.0f64..=1.0, basis in 0usize..3) {
        let rho = add_white_noise(&reference_state(RefState::Psi6Plus), p).unwrap();
        let dist = outcome_distribution(&rho, &SettingVector::named(NamedBasis::ALL[basis], 6)).unwrap();
        prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(dist.iter().all(|&x| x >= -1e-15));
    }
}

#[test]
fn presets_are_isometries() {
    for preset in [NetworkPreset::Experiment, NetworkPreset::FourMode, NetworkPreset::Pair] {
        assert!(preset.network().isometry_error() < 1e-12);
    }
}

#[test]
fn order_three_success_probability_is_independent_of_alpha() {
    for alpha in [0.01, 0.1, 0.3] {
        let source = PdcSource::new(Complex64::new(alpha, 0.0), 0.0).unwrap();
        let out = apply_network(&pdc_term(&source, 3), &experiment_network()).unwrap();
        let sel = postselect_one_per_spatial_mode(&out, &["a", "b", "c", "d", "e", "f"]).unwrap();
        assert_abs_diff_eq!(sel.success_probability, 9.0 / 256.0, epsilon = 1e-12);
    }
}
