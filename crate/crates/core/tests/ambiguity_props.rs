use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustmd_core::ambiguity::{
    rich_project_ball, rich_project_moment, AmbiguitySet, LinearSet, MomentRow,
};
use robustmd_core::guarantee::worst_case;
use robustmd_core::measures::{push_mass, tv_distance, DiscretePrior, Grid, ValueFunction};
use robustmd_core::optim::{solve_lp, LinearProgram, LpStatus, Relation};

fn grid() -> Grid {
    Grid::with_points(0.0, 1.0, 0.05, &[]).unwrap()
}

fn random_prior(rng: &mut ChaCha8Rng, grid: &Grid) -> DiscretePrior {
    let k = rng.gen_range(1..=4);
    let mut w = vec![0.0; grid.len()];
    for _ in 0..k {
        w[rng.gen_range(0..grid.len())] += rng.gen::<f64>() + 0.05;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    DiscretePrior::new(grid, w).unwrap()
}

fn random_value(rng: &mut ChaCha8Rng, grid: &Grid) -> ValueFunction {
    ValueFunction::new(
        grid,
        (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn sets(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<AmbiguitySet> {
    let mean = rng.gen_range(0.2..0.8);
    let second = ValueFunction::from_fn(grid, |t| t * t).unwrap();
    let two_moments = AmbiguitySet::Linear(LinearSet::new(
        vec![
            MomentRow::equal(ValueFunction::from_fn(grid, |t| t).unwrap(), 0.5),
            MomentRow {
                g: second,
                lo: Some(0.28),
                hi: Some(0.32),
            },
        ],
        true,
    ));
    let lam = grid.point(rng.gen_range(4..grid.len() - 4));
    vec![
        AmbiguitySet::Linear(LinearSet::mean(grid, mean).unwrap()),
        two_moments,
        AmbiguitySet::Support { a: 0.25, b: 0.7 },
        AmbiguitySet::median(lam),
        AmbiguitySet::Quantile {
            pairs: vec![(0.3, 0.25), (0.6, 0.75)],
        },
        AmbiguitySet::HalfSpace {
            v: random_value(rng, grid),
            level: -0.1,
        },
        AmbiguitySet::Singleton(random_prior(rng, grid)),
        AmbiguitySet::Intersection(vec![
            AmbiguitySet::Support { a: 0.1, b: 0.9 },
            AmbiguitySet::Linear(LinearSet::mean(grid, 0.45).unwrap()),
        ]),
        AmbiguitySet::ball(AmbiguitySet::Support { a: 0.4, b: 0.6 }, 0.08).unwrap(),
        AmbiguitySet::ball(
            AmbiguitySet::Linear(LinearSet::mean(grid, 0.5).unwrap()),
            0.05,
        )
        .unwrap(),
    ]
}

fn feasible_with_prior_fixed(set: &AmbiguitySet, prior: &DiscretePrior) -> bool {
    let sys = set.to_constraints(prior.grid()).unwrap();
    let mut lp = LinearProgram::new(vec![0.0; sys.n_vars]);
    lp.constraints = sys.rows.clone();
    lp.constraints.extend(sys.fix_prior(prior).unwrap());
    solve_lp(&lp).unwrap().status == LpStatus::Optimal
}

#[test]
fn membership_agrees_with_constraint_feasibility() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut inside, mut outside) = (0, 0);
    for _ in 0..15 {
        for set in sets(&g, &mut rng) {
            // Random priors are mostly outside; worst priors are members.
            let mut candidates = vec![random_prior(&mut rng, &g), random_prior(&mut rng, &g)];
            if let Ok(rep) = worst_case(&random_value(&mut rng, &g), &set) {
                candidates.push(rep.worst_prior);
            }
            for p in candidates {
                let member = set.contains(&p, 1e-8).unwrap();
                assert_eq!(member, feasible_with_prior_fixed(&set, &p), "{set:?}");
                if member {
                    inside += 1;
                } else {
                    outside += 1;
                }
                if !set.is_ball() {
                    let d = set.distance_to(&p);
                    match d {
                        Ok(d) => assert_eq!(d <= 1e-8, member, "distance {d} for {set:?}"),
                        Err(e) => assert!(!member, "{e}"),
                    }
                }
            }
        }
    }
    assert!(
        inside > 100 && outside > 100,
        "{inside} inside, {outside} outside"
    );
}

#[test]
fn ball_projection_is_member_within_alpha() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = AmbiguitySet::Support { a: 0.4, b: 0.6 };
    let ball = AmbiguitySet::ball(base.clone(), 0.05).unwrap();
    for _ in 0..100 {
        let p = random_prior(&mut rng, &g);
        let zeta = worst_case(&random_value(&mut rng, &g), &base)
            .unwrap()
            .worst_prior;
        let proj = rich_project_ball(&ball, &p, &zeta).unwrap();
        assert!(ball.contains(&proj.prior, 1e-9).unwrap());
        assert!(tv_distance(&proj.prior, &p).unwrap() <= proj.alpha + 1e-12);
    }
}

#[test]
fn projections_of_converging_sequences_converge() {
    let g = Grid::with_points(0.0, 1.0, 0.01, &[]).unwrap();
    let mean_set = AmbiguitySet::Linear(LinearSet::mean(&g, 0.4).unwrap());
    let base = DiscretePrior::from_atoms(&g, &[(0.2, 0.5), (0.6, 0.5)]).unwrap();
    assert!(mean_set.contains(&base, 1e-12).unwrap());
    let ball = AmbiguitySet::ball(AmbiguitySet::Support { a: 0.2, b: 0.6 }, 0.02).unwrap();
    // The limit lies in the support set, so it serves as the auxiliary prior.
    let zeta = base.clone();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for k in [8usize, 4, 2, 1] {
        // Shift the top atom past the boundary by k cells.
        let from = g.index_of(0.6).unwrap();
        let pn = push_mass(&base, from, from + k, 0.5).unwrap();
        let m = rich_project_moment(&mean_set, &pn).unwrap();
        assert!(mean_set.contains(&m.prior, 1e-9).unwrap());
        let tm = tv_distance(&m.prior, &pn).unwrap();
        // Push the whole prior beyond the ball as well.
        let far = push_mass(
            &pn,
            g.index_of(0.2).unwrap(),
            g.index_of(0.2).unwrap() - 2 * k,
            0.5,
        )
        .unwrap();
        let b = rich_project_ball(&ball, &far, &zeta).unwrap();
        assert!(ball.contains(&b.prior, 1e-9).unwrap());
        let tb = tv_distance(&b.prior, &far).unwrap();
        assert!(tm < last.0 && tb <= last.1, "k={k}: {tm} {tb}");
        last = (tm, tb);
    }
    assert!(last.0 < 0.02 && last.1 < 0.02, "{last:?}");
}

/// `min_{p ∈ Π} ‖p − q‖_TV` as an LP in `(p, t)` with `t ≥ |p − q|`.
fn tv_to_set(set: &AmbiguitySet, q: &DiscretePrior) -> f64 {
    let g = q.grid();
    let n = g.len();
    let sys = set.to_constraints(g).unwrap();
    let mut obj = vec![0.0; n];
    obj.extend(vec![0.5; n]);
    let mut lp = LinearProgram::new(obj);
    for row in &sys.rows {
        let mut c = row.coeffs.clone();
        c.extend(vec![0.0; n]);
        lp.add(c, row.relation, row.rhs);
    }
    for i in 0..n {
        let mut up = vec![0.0; 2 * n];
        up[i] = 1.0;
        up[n + i] = -1.0;
        lp.add(up, Relation::Le, q.weight(i));
        let mut down = vec![0.0; 2 * n];
        down[i] = -1.0;
        down[n + i] = -1.0;
        lp.add(down, Relation::Le, -q.weight(i));
    }
    let sol = solve_lp(&lp).unwrap();
    assert!(sol.is_optimal());
    sol.value
}

#[test]
fn median_set_is_not_rich() {
    let g = Grid::with_points(0.0, 1.0, 0.01, &[0.4]).unwrap();
    let set = AmbiguitySet::median(0.4);
    let lam = g.index_of(0.4).unwrap();
    let pi = DiscretePrior::from_atoms(&g, &[(0.0, 0.5), (0.4, 0.5)]).unwrap();
    for k in [16, 8, 4, 2, 1] {
        let pn = push_mass(&pi, lam, lam - k, 0.5).unwrap();
        let d = tv_to_set(&set, &pn);
        assert!(d >= 0.5 - 1e-9, "k={k}: {d}");
    }
    // Whereas the mean set absorbs the same perturbation with vanishing mass.
    let mean = AmbiguitySet::Linear(LinearSet::mean(&g, 0.2).unwrap());
    let pn = push_mass(&pi, lam, lam - 1, 0.5).unwrap();
    assert!(tv_to_set(&mean, &pn) < 0.02);
}
