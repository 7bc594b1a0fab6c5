use std::f64::consts::PI;

use gscreen_core::simgen::CohortSpec;
use gscreen_core::{
    generate_cohort, read_matrix, screen, simulate, Estimate, NoiseFamily, NullTailMethod,
    ReadOptions, SimulationConfig,
};

fn null_spec(seed: u64) -> CohortSpec {
    CohortSpec {
        genes: 1000,
        n: 20,
        periodic_count: 0,
        beta: 0.0,
        omega: 2.0 * PI / 10.0,
        noise: NoiseFamily::Normal01,
        seed,
    }
}

#[test]
fn all_null_fdp_is_controlled() {
    // With no true periodic genes, FDP is 1 whenever anything is selected.
    let fdp: Vec<f64> = (0..100)
        .map(|seed| {
            let cohort = generate_cohort(&null_spec(seed)).unwrap();
            let r = screen(&cohort.matrix, 0.05, NullTailMethod::FisherExact).unwrap();
            assert!(r.summary.total_rejected <= 10);
            (r.summary.total_rejected > 0) as u8 as f64
        })
        .collect();
    let e = Estimate::from_samples(&fdp);
    assert!(e.mean <= 0.05 + 3.0 * e.stderr, "{e:?}");
}

#[test]
fn screen_matches_simulation_on_first_replicate() {
    let config = SimulationConfig {
        replicates: 1,
        thetas: vec![0.15],
        ..SimulationConfig::reference(50, NoiseFamily::Normal01, 5)
    };
    let sim = simulate(&config).unwrap();
    let cohort = generate_cohort(&config.cohort).unwrap();
    let r = screen(&cohort.matrix, 0.15, NullTailMethod::FisherExact).unwrap();
    let m = sim.per_replicate[0][0];
    assert_eq!(r.summary.total_rejected, m.tot);
    let pos = r
        .genes
        .iter()
        .zip(&cohort.truth)
        .filter(|(g, &t)| g.rejected && t)
        .count();
    assert_eq!(pos, m.pos);
}

#[test]
fn exported_matrix_screens_identically() {
    let spec = CohortSpec {
        genes: 150,
        periodic_count: 15,
        ..CohortSpec::reference_design(20, NoiseFamily::ScaledT5, 9)
    };
    let cohort = generate_cohort(&spec).unwrap();
    let mut buf = Vec::new();
    cohort.matrix.write_csv(&mut buf).unwrap();
    let back = read_matrix(buf.as_slice(), ReadOptions::default()).unwrap();
    assert_eq!(back, cohort.matrix);
    let a = screen(&cohort.matrix, 0.05, NullTailMethod::Gumbel).unwrap();
    let b = screen(&back, 0.05, NullTailMethod::Gumbel).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
}
