mod common;

use hotspot::simcore::{run_simulation, Compartment, EpidemicParams, EventKind, SeedCounts, SimConfig};

fn config(days: f64) -> SimConfig {
    let mut c = SimConfig::new(EpidemicParams::default().with_shared_beta(0.6), days * 24.0);
    c.params.xi = 0.3;
    c.seeds = SeedCounts {
        symptomatic: 3,
        asymptomatic: 2,
        exposed: 10,
    };
    c
}

#[test]
fn smoke_epidemic_grows_and_is_consistent() {
    let world = common::town(2000, [5, 20, 8, 10, 6], 40.0, 1);
    let cfg = config(40.0);
    let out = run_simulation(&world, &cfg, 7).unwrap();
    let exposures = out.log.of_kind(EventKind::Exposure).count();
    assert!(exposures > 10, "only {exposures} exposures");
    assert!(out.states.iter().all(|s| s.is_consistent()));
    let times: Vec<f64> = out.log.events.iter().map(|e| e.time).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let again = run_simulation(&world, &cfg, 7).unwrap();
    assert_eq!(again.log, out.log);
    assert!(out.states.iter().any(|s| s.compartment == Compartment::Recovered));
}

#[test]
fn seeded_symptomatic_case_transmits() {
    use hotspot::simcore::{run_with_initial, InitialCase};
    use hotspot::synthpop::{AgeGroup, SiteCategory, World};

    let people = vec![
        common::person(0, 0, AgeGroup::Age35To59),
        common::person(1, 1, AgeGroup::Age35To59),
    ];
    let sites = vec![common::site(0, SiteCategory::Social)];
    let visits = vec![common::visit(0, 0, 1.0, 20.0), common::visit(1, 0, 1.0, 20.0)];
    let world = World::from_visits(people, sites, visits, 24.0).unwrap();
    let cfg = SimConfig::new(EpidemicParams::default().with_shared_beta(5.0), 24.0);
    let index = [InitialCase {
        individual: 0,
        compartment: Compartment::Symptomatic,
        transmits: true,
    }];
    let out = run_with_initial(&world, &cfg, &index, 1).unwrap();
    let exposure = out
        .log
        .of_kind(EventKind::Exposure)
        .next()
        .expect("the contact is exposed");
    assert_eq!(
        (exposure.subject, exposure.infector, exposure.site),
        (1, Some(0), Some(0))
    );

    let silent = [InitialCase {
        transmits: false,
        ..index[0]
    }];
    let out = run_with_initial(&world, &cfg, &silent, 1).unwrap();
    assert_eq!(out.log.of_kind(EventKind::Exposure).count(), 0);
}

#[test]
fn test_records_are_ordered_in_time() {
    use hotspot::testtrace::TestConfig;

    let world = common::town(2000, [5, 20, 8, 10, 6], 30.0, 2);
    let mut cfg = config(30.0);
    cfg.testing = Some(TestConfig::default());
    let out = run_simulation(&world, &cfg, 3).unwrap();
    assert!(!out.tests.is_empty());
    for r in &out.tests {
        assert!(r.t_enqueue <= r.t_sample && r.t_sample <= r.t_outcome, "{r:?}");
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

    #[test]
    fn daily_counts_partition_the_population(
        beta in 0.0..1.0f64,
        xi in 0.0..1.0f64,
        exposed in 1usize..20,
        seed in 0u64..1000,
    ) {
        let world = common::town(500, [2, 10, 5, 4, 3], 21.0, seed % 7);
        let mut cfg = SimConfig::new(EpidemicParams::default().with_shared_beta(beta), 21.0 * 24.0);
        cfg.params.xi = xi;
        cfg.seeds = SeedCounts { symptomatic: 1, asymptomatic: 1, exposed };
        let out = run_simulation(&world, &cfg, seed).unwrap();
        let daily = out.log.daily_summary(world.len(), 21);
        for d in &daily {
            let total = d.susceptible + d.exposed + d.infectious_asym + d.infectious_presym
                + d.infectious_sym + d.recovered + d.dead;
            proptest::prop_assert_eq!(total, world.len() as u64);
            proptest::prop_assert!(d.hospitalized <= d.infectious_sym);
        }
        proptest::prop_assert!(daily.windows(2).all(|w| w[1].susceptible <= w[0].susceptible));
        proptest::prop_assert!(out.states.iter().all(|s| s.is_consistent()));
    }
}
