use skillgeom::mdp::enumerate_policy_occupancies;
use skillgeom::polytope::{DEDUPE_TOL, HULL_TOL};
use skillgeom::wdsl::{
    maximize_awd, maximize_wsep, placements_are_extreme, pwsep_project, pwsep_run, SearchMode, PWSEP_TOL,
};
use skillgeom::{extreme_points, fixtures, hull_membership, CostMatrix, OccupancyKind, OccupancyMeasure, Polytope};

fn candidates(seed: u64, kind: OccupancyKind) -> Vec<OccupancyMeasure> {
    let mdp = fixtures::random_mdp_sized(seed, 4, 4, kind);
    enumerate_policy_occupancies(&mdp, 1_000_000)
        .unwrap()
        .into_iter()
        .map(|(_, o)| o)
        .collect()
}

#[test]
fn pwsep_discovers_exactly_the_vertices() {
    for kind in [OccupancyKind::Discounted, OccupancyKind::Stationary] {
        for seed in 0..60 {
            let cands = candidates(seed, kind);
            let poly = extreme_points(&cands, DEDUPE_TOL);
            let c = CostMatrix::unit(poly.dim());
            let state = pwsep_run(&cands, &c, PWSEP_TOL, seed).unwrap();
            assert_eq!(state.iteration, poly.len(), "{kind:?} seed {seed}");
            for v in &poly.vertices {
                assert!(state.discovered.iter().any(|d| d.linf(v) <= 1e-6), "{kind:?} seed {seed}");
            }
            // coverage only grows: each discovery stays inside the final hull
            let basis: Vec<&[f64]> = state.discovered.iter().map(|d| &**d).collect();
            for d in &state.discovered {
                let h = hull_membership(d, &basis, HULL_TOL);
                assert!(h.inside && h.distance < 1e-12);
            }
            let distances: Vec<f64> = state.history.iter().skip(1).map(|s| s.distance).collect();
            assert!(distances.iter().all(|&d| d > PWSEP_TOL));
        }
    }
}

#[test]
fn pwsep_is_seed_independent_as_a_set() {
    let cands = candidates(3, OccupancyKind::Discounted);
    let c = CostMatrix::unit(cands[0].len());
    let a = pwsep_run(&cands, &c, PWSEP_TOL, 0).unwrap();
    for seed in 1..10 {
        let b = pwsep_run(&cands, &c, PWSEP_TOL, seed).unwrap();
        assert_eq!(a.iteration, b.iteration);
        assert!(b.discovered.iter().all(|d| a.discovered.iter().any(|e| e.linf(d) < 1e-9)));
    }
}

#[test]
fn projection_zero_iff_inside_hull() {
    let mut r = fixtures::rng(17);
    let mut agree = 0;
    for q in 0..300u64 {
        let poly = fixtures::random_polytope(q, 3 + (q % 2) as usize, 5);
        let basis: Vec<&[f64]> = poly.vertices.iter().take(3).map(|v| &**v).collect();
        let dim = poly.dim();
        // alternate points drawn from the hull and from the whole simplex
        let p = if q % 2 == 0 {
            let w = fixtures::random_simplex_point(&mut r, basis.len());
            (0..dim).map(|s| basis.iter().zip(&w).map(|(b, wi)| wi * b[s]).sum()).collect()
        } else {
            fixtures::random_simplex_point(&mut r, dim)
        };
        let d = pwsep_project(&p, &basis, &CostMatrix::unit(dim)).unwrap().distance;
        let h = hull_membership(&p, &basis, 1e-6);
        assert_eq!(d <= 1e-7, h.inside, "query {q}: projection {d:e}, hull distance {:e}", h.distance);
        agree += 1;
    }
    assert_eq!(agree, 300);
}

#[test]
fn wsep_placements_are_vertices() {
    for seed in 0..30 {
        let poly = Polytope::from_mdp(&fixtures::random_mdp_sized(seed, 3, 3, OccupancyKind::Discounted), 10_000).unwrap();
        let c = CostMatrix::unit(poly.dim());
        for k in 1..=4 {
            let best = maximize_wsep(&poly, &c, k, SearchMode::Exhaustive).unwrap();
            assert!(placements_are_extreme(&poly, &best), "seed {seed} k {k}");
            let greedy = maximize_wsep(&poly, &c, k, SearchMode::Greedy).unwrap();
            assert!(greedy.value <= best.value + 1e-12);
        }
    }
}

#[test]
fn awd_maximum_grows_with_skill_budget() {
    let poly = fixtures::random_polytope(4, 3, 7);
    let c = CostMatrix::unit(3);
    let two = maximize_awd(&poly, &c, 2).unwrap();
    let three = maximize_awd(&poly, &c, 3).unwrap();
    assert!(three.value >= two.value - 1e-9);
    assert!(two.heuristic);
}

#[test]
fn spwd_prefers_sparse_sets_on_dense_circles() {
    let pts = fixtures::circle_points(200, 0.3);
    let c = CostMatrix::unit(3);
    let all = skillgeom::SkillSet::uniform(fixtures::measures(&pts)).unwrap();
    let two = skillgeom::SkillSet::uniform(fixtures::measures(&[pts[0].clone(), pts[100].clone()])).unwrap();
    let (s_all, s_two) = (skillgeom::wdsl::spwd(&all, &c).unwrap(), skillgeom::wdsl::spwd(&two, &c).unwrap());
    assert!(s_two > s_all);
    let w = skillgeom::transport::wasserstein_distance(&pts[0], &pts[100], &c).unwrap();
    assert!((s_two - 2.0 * w).abs() < 1e-9);
}
