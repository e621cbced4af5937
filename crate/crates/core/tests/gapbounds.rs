mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfgap::apps::{build_num, dsm_table, num_gap_report, num_table, DsmInstance, Utility};
use sfgap::gapbounds::{
    bound_classic, bound_report, bound_udell, closed_form_dsm, closed_form_num_log, closed_form_num_throughput, solve_allocation,
};
use sfgap::nonconvexity::{Certainty, RhoRow, RhoTable};
use sfgap::Settings;

fn table(rows: &[Vec<f64>]) -> RhoTable {
    RhoTable::new(
        rows.iter()
            .enumerate()
            .map(|(i, r)| RhoRow { label: format!("f{i}"), values: r.clone(), flags: vec![Certainty::Exact; r.len()] })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn allocation_matches_brute_force(seed in any::<u64>(), n in 1usize..=5, m in 0usize..=5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let extra = r.gen_range(0..=2);
        let rows = common::random_rho_rows(&mut r, n, m + 1 + extra);
        let t = table(&rows);
        let a = solve_allocation(&t, m).unwrap();
        let want = common::allocation_brute_force(&rows, m);
        prop_assert!((a.value - want).abs() <= 1e-12, "{} vs {}", a.value, want);
        prop_assert!(a.k.iter().all(|&k| (1..=m + 1).contains(&k)));
        prop_assert!(a.k.iter().sum::<usize>() <= m + n);
        let realized: f64 = a.k.iter().enumerate().map(|(i, &k)| rows[i][k - 1]).sum();
        prop_assert_eq!(realized, a.value);
    }

    #[test]
    fn bounds_are_ordered(seed in any::<u64>(), n in 1usize..=6, m in 0usize..=6) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rows = common::random_rho_rows(&mut r, n, m + 1);
        let rep = bound_report(&table(&rows), m).unwrap();
        prop_assert!(rep.ordering_holds);
        prop_assert!(rep.b <= rep.bound_udell + 1e-12);
        prop_assert!(rep.bound_udell <= rep.bound_classic + 1e-12);
    }

    #[test]
    fn uniform_rows_give_min_m_n_times_rho(n in 1usize..=6, m in 0usize..=6, rho in 0.0..3.0f64) {
        let mut row = vec![rho; m + 1];
        row[0] = 0.0;
        let t = table(&vec![row; n]);
        let a = solve_allocation(&t, m).unwrap();
        prop_assert_eq!(a.value, (0..m.min(n)).map(|_| rho).sum::<f64>());
    }
}

#[test]
fn classic_bounds_by_hand() {
    let rhos = [0.5, 2.0, 1.0];
    assert_eq!(bound_classic(&rhos, 1).unwrap(), 4.0);
    assert_eq!(bound_classic(&rhos, 5).unwrap(), 6.0);
    assert_eq!(bound_udell(&rhos, 2).unwrap(), 3.0);
    assert_eq!(bound_udell(&rhos, 0).unwrap(), 0.0);
}

#[test]
fn square_networks_reproduce_closed_forms() {
    for l in 1..=4usize {
        let t = closed_form_num_throughput(l, l, 1.0).unwrap();
        assert_eq!(t.refined, l as f64 / 2.0);
        let g = closed_form_num_log(l, l).unwrap();
        assert_eq!(g.refined, l as f64 * 2f64.ln());
        assert!(t.refined <= t.previous && g.refined <= g.previous);
    }
}

#[test]
fn application_tables_attain_closed_forms() {
    let s = Settings::default();
    for l in 1..=3usize {
        for utility in [Utility::Throughput, Utility::Log] {
            let inst = build_num(50 + l as u64, l, l, l + 1, utility).unwrap();
            let t = num_table(&inst).unwrap();
            let rep = bound_report(&t, l).unwrap();
            let want = match utility {
                Utility::Throughput => closed_form_num_throughput(l, l, inst.rate_cap()).unwrap().refined,
                Utility::Log => closed_form_num_log(l, l).unwrap().refined,
            };
            assert!((rep.b - want).abs() <= 1e-12, "L = {l}: {} vs {want}", rep.b);
            let report = num_gap_report(&inst, &s).unwrap();
            assert!(report.closed_form_applies);
            assert!(report.verdicts.b_le_udell && report.verdicts.udell_le_classic);
        }
    }
}

#[test]
fn spectrum_bound_decays_like_one_over_n() {
    let mut scaled = Vec::new();
    for tones in [2usize, 4, 8, 16] {
        let inst = DsmInstance::uniform(2, tones, 0.5, 1.0).unwrap();
        let rep = bound_report(&dsm_table(&inst).unwrap(), 2).unwrap();
        assert!((rep.b - closed_form_dsm(tones, 2, 0.5).unwrap().refined).abs() <= 1e-12);
        assert_eq!(rep.b_flag, Certainty::UpperBound);
        scaled.push(rep.b * tones as f64);
    }
    assert!(scaled.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12), "{scaled:?}");
}

#[test]
fn random_application_tables_keep_the_ordering() {
    let mut r = common::rng(3);
    for _ in 0..30 {
        let links = r.gen_range(1..=3);
        let users = r.gen_range(1..=4);
        let utility = if r.gen_bool(0.5) { Utility::Throughput } else { Utility::Log };
        let inst = build_num(r.gen(), links, users, r.gen_range(1..=4), utility).unwrap();
        assert!(bound_report(&num_table(&inst).unwrap(), links).unwrap().ordering_holds);
    }
}
