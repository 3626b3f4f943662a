use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustmd_core::ambiguity::{AmbiguitySet, LinearSet};
use robustmd_core::guarantee::{radius_sweep, variational_value, worst_case, worst_case_ball};
use robustmd_core::measures::{expectation, DiscretePrior, Grid, ValueFunction};
use robustmd_core::mechanisms::{bs_optimal_cdf, cdf_value, Objective};

fn random_value(rng: &mut ChaCha8Rng, grid: &Grid) -> ValueFunction {
    ValueFunction::new(
        grid,
        (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn base_sets(grid: &Grid) -> Vec<AmbiguitySet> {
    vec![
        AmbiguitySet::Support { a: 0.3, b: 0.7 },
        AmbiguitySet::Linear(LinearSet::mean(grid, 0.45).unwrap()),
        AmbiguitySet::median(0.5),
        AmbiguitySet::Intersection(vec![
            AmbiguitySet::Support { a: 0.2, b: 0.8 },
            AmbiguitySet::Linear(LinearSet::mean(grid, 0.6).unwrap()),
        ]),
    ]
}

#[test]
fn worst_case_lower_bounds_members() {
    let g = Grid::uniform(0.0, 1.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for set in base_sets(&g) {
        let v = random_value(&mut rng, &g);
        let rep = worst_case(&v, &set).unwrap();
        assert!((expectation(&v, &rep.worst_prior).unwrap() - rep.value).abs() <= 1e-7);
        assert!(set.contains(&rep.worst_prior, 1e-7).unwrap());
        // Members: random mixtures of worst priors of other objectives.
        let vertices: Vec<DiscretePrior> = (0..6)
            .map(|_| {
                worst_case(&random_value(&mut rng, &g), &set)
                    .unwrap()
                    .worst_prior
            })
            .collect();
        for _ in 0..100 {
            let (i, j) = (rng.gen_range(0..6), rng.gen_range(0..6));
            let member = vertices[i].mix(&vertices[j], rng.gen()).unwrap();
            assert!(set.contains(&member, 1e-7).unwrap());
            assert!(rep.value <= expectation(&v, &member).unwrap() + 1e-9);
        }
    }
}

#[test]
fn ball_value_nonincreasing_and_convex_in_radius() {
    let g = Grid::uniform(0.0, 1.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for base in base_sets(&g) {
        for _ in 0..3 {
            let v = random_value(&mut rng, &g);
            let r0 = rng.gen_range(0.01..0.1);
            let r1 = r0 + rng.gen_range(0.01..0.1);
            let vals: Vec<f64> = [r0, 0.5 * (r0 + r1), r1]
                .iter()
                .map(|&r| worst_case_ball(&v, &base, r).unwrap().value)
                .collect();
            assert!(
                vals[1] <= vals[0] + 1e-9 && vals[2] <= vals[1] + 1e-9,
                "{vals:?}"
            );
            assert!(vals[1] <= 0.5 * (vals[0] + vals[2]) + 1e-7, "{vals:?}");
        }
    }
}

#[test]
fn variational_value_weak_duality() {
    let g = Grid::uniform(0.0, 1.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for base in base_sets(&g) {
        let v = random_value(&mut rng, &g);
        for _ in 0..5 {
            let lambda = rng.gen_range(0.0..20.0);
            let r = rng.gen_range(0.005..0.2);
            let var = variational_value(&v, &base, lambda).unwrap();
            let ball = worst_case_ball(&v, &base, r).unwrap().value;
            assert!(
                var <= ball + lambda * r + 1e-7,
                "{var} > {ball} + {lambda}·{r}"
            );
            assert!(var <= worst_case(&v, &base).unwrap().value + 1e-9);
        }
    }
}

#[test]
fn redundant_rows_leave_value_unchanged() {
    let g = Grid::uniform(0.0, 1.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for set in base_sets(&g) {
        let v = random_value(&mut rng, &g);
        let plain = worst_case(&v, &set).unwrap().value;
        let padded = AmbiguitySet::Intersection(vec![
            set.clone(),
            AmbiguitySet::Support {
                a: g.lo(),
                b: g.hi(),
            },
            set.clone(),
        ]);
        assert!((worst_case(&v, &padded).unwrap().value - plain).abs() <= 1e-7);
    }
}

#[test]
fn fixed_low_mechanism_sweep_has_unit_slope() {
    let g = Grid::with_points(0.0, 1.5, 1.0 / 400.0, &[0.2, 1.0]).unwrap();
    let v = cdf_value(&bs_optimal_cdf(0.2, &g).unwrap(), Objective::NegRegret).unwrap();
    let base = AmbiguitySet::Support { a: 0.2, b: 1.0 };
    let radii = [0.001, 0.002, 0.004];
    let sweep = radius_sweep(&v, &base, &radii).unwrap();
    assert!(sweep.equicontinuity_violations.is_empty() && sweep.monotonicity_violations.is_empty());
    for w in sweep.points.windows(2) {
        let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        assert!((slope + 1.0).abs() < 1e-2, "slope {slope}");
    }
    let top = sweep.points[0].1;
    assert!(
        (top + 1.0 / std::f64::consts::E + 0.001).abs() < 2.0 / 400.0,
        "{top}"
    );
}

#[test]
fn random_sweeps_respect_equicontinuity() {
    let g = Grid::uniform(0.0, 1.0, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = AmbiguitySet::Support { a: 0.4, b: 0.6 };
    for _ in 0..20 {
        let v = random_value(&mut rng, &g);
        let radii: Vec<f64> = (1..=10).map(|k| 0.01 * k as f64).collect();
        let sweep = radius_sweep(&v, &base, &radii).unwrap();
        assert!(sweep.equicontinuity_violations.is_empty());
        assert!(sweep.monotonicity_violations.is_empty());
    }
}
