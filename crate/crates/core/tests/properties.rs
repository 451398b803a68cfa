use fas_core::channel::{rx_field_vector, sample_paths, tx_field_matrix, tx_field_vector, PathSet, PhaseModel, PortDictionary};
use fas_core::geometry::{port_offset, tx_offset, validate_selection};
use fas_core::metrics::{effective_gain, log2_det_paths, log2_det_ports, Covariance};
use fas_core::portopt::{random_selection, PortGainContext, PortSearch};
use fas_core::txopt::dinkelbach;
use fas_core::{PortSelection, Scenario};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn paths(seed: u64, count: usize) -> PathSet {
    sample_paths(&mut ChaCha8Rng::seed_from_u64(seed), count, [1.0, 10.0]).unwrap()
}

fn model() -> impl Strategy<Value = PhaseModel> {
    prop_oneof![Just(PhaseModel::Approx), Just(PhaseModel::Exact), Just(PhaseModel::Taylor)]
}

fn selection(m_ports: usize, m_active: usize) -> impl Strategy<Value = PortSelection> {
    proptest::sample::subsequence((1..=m_ports).collect::<Vec<_>>(), m_active)
        .prop_map(move |v| PortSelection::new(v, m_ports).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_entries_unit_modulus(seed in any::<u64>(), n in 1usize..=20, r in 1usize..=21, m in model()) {
        let sc = Scenario::default();
        let p = paths(seed, 3);
        for z in tx_field_vector(n, &p, &sc, m).unwrap().iter().chain(rx_field_vector(r, &p, &sc, m).unwrap().iter()) {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn offsets_mirror_about_centre(n_tx in 1usize..40, m_ports in 1usize..40) {
        let sc = Scenario { n_tx, m_ports, m_active: 1, ..Scenario::default() };
        for n in 1..=n_tx {
            let a = tx_offset(n, &sc).unwrap();
            let b = tx_offset(n_tx + 1 - n, &sc).unwrap();
            prop_assert!((a + b).abs() < 1e-15);
        }
        for r in 1..=m_ports {
            prop_assert!((port_offset(r, &sc).unwrap() + port_offset(m_ports + 1 - r, &sc).unwrap()).abs() < 1e-15);
        }
        prop_assert!(tx_offset(0, &sc).is_err());
        prop_assert!(tx_offset(n_tx + 1, &sc).is_err());
    }

    #[test]
    fn zero_elevation_paths_are_symmetric_in_n(seed in any::<u64>()) {
        // With θ = 0 only the even curvature term remains.
        let p = paths(seed, 3);
        let flat = PathSet::new(vec![0.0; 3], p.azimuths().to_vec(), p.distances().to_vec()).unwrap();
        let sc = Scenario::default();
        let a = tx_field_matrix(&flat, &sc, PhaseModel::Approx);
        for n in 0..sc.n_tx {
            for l in 0..3 {
                prop_assert!((a[(l, n)] - a[(l, sc.n_tx - 1 - n)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sylvester_and_rank_one_split(seed in any::<u64>(), sel in selection(21, 4), slot in 1usize..=4, power in 0.0f64..1.0) {
        let sc = Scenario { m_active: 4, ..Scenario::default() };
        let dict = PortDictionary::new(&paths(seed, 3), &sc, PhaseModel::Approx);
        let a = tx_field_matrix(&paths(seed ^ 1, 3), &sc, PhaseModel::Approx);
        let q = Covariance::uniform(sc.n_tx, sc.p_max * power);
        let beta = effective_gain(&a, &q, &sc).unwrap();
        let b = dict.select(&sel);
        let full = log2_det_ports(beta, &b);
        prop_assert!((log2_det_paths(beta, &b) - full).abs() <= 1e-9 * full.abs().max(1.0));
        let ctx = PortGainContext::for_slot(beta, &dict, &sel, slot);
        prop_assert!((ctx.rate_with(&dict.port(sel.slot(slot))) - full).abs() <= 1e-9 * full.abs().max(1.0));
        prop_assert!(ctx.gain_imaginary_part(&dict.port(sel.slot(slot))).abs() < 1e-9);
    }

    #[test]
    fn coordinate_steps_never_lose_rate(seed in any::<u64>(), sel in selection(21, 3), m in 1usize..=3) {
        let sc = Scenario::default();
        let dict = PortDictionary::new(&paths(seed, 3), &sc, PhaseModel::Approx);
        let search = PortSearch::new(sc.gain_to_noise() * 60.0, &dict, 3);
        let before = search.rate(&sel);
        let step = search.coordinate_update(m, &sel);
        validate_selection(&step, &sc).unwrap();
        prop_assert!(search.rate(&step) >= before - 1e-12);
        let swept = search.sweep(&sel);
        validate_selection(&swept, &sc).unwrap();
        prop_assert!(search.rate(&swept) >= before - 1e-12);
    }

    #[test]
    fn dinkelbach_beats_uniform_power(seed in any::<u64>(), snr in -5.0f64..25.0) {
        let sc = Scenario::default().with_snr_db(snr);
        let a = tx_field_matrix(&paths(seed, 3), &sc, PhaseModel::Approx);
        let dict = PortDictionary::new(&paths(seed ^ 7, 3), &sc, PhaseModel::Approx);
        let sel = random_selection(&mut ChaCha8Rng::seed_from_u64(seed), &sc);
        let b = dict.select(&sel);
        let q0 = Covariance::uniform(sc.n_tx, sc.p_max);
        let out = dinkelbach(&a, &b, &sc, &q0).unwrap();
        out.q.check(sc.p_max).unwrap();
        let eta0 = out.trace.etas[0];
        prop_assert!(out.eta >= eta0 - 1e-12);
        prop_assert!(out.power <= sc.p_max * (1.0 + 1e-12));
    }

    #[test]
    fn random_selection_is_valid(seed in any::<u64>(), m_ports in 1usize..30, frac in 0.0f64..1.0) {
        let m_active = 1 + ((m_ports - 1) as f64 * frac) as usize;
        let sc = Scenario { m_ports, m_active, ..Scenario::default() };
        let sel = random_selection(&mut ChaCha8Rng::seed_from_u64(seed), &sc);
        prop_assert!(validate_selection(&sel, &sc).is_ok());
    }

    #[test]
    fn unsorted_selection_rejected(a in 1usize..=21, b in 1usize..=21) {
        prop_assume!(a >= b);
        prop_assert!(PortSelection::new(vec![a, b], 21).is_err());
    }
}
