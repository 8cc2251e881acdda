//! Embedded example configurations and seeded random instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::divergences::SkillSet;
use crate::mdp::{MdpSpec, OccupancyKind, OccupancyMeasure, TabularMdp};
use crate::polytope::{extreme_points, Polytope, DEDUPE_TOL};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Three-state MDP whose next-state distribution depends only on the action.
pub fn c6_mdp() -> TabularMdp {
    let v = c6_vertices();
    TabularMdp::new(MdpSpec {
        num_states: 3,
        num_actions: 3,
        transitions: v.iter().map(|row| vec![row.clone(); 3]).collect(),
        initial: vec![1.0 / 3.0; 3],
        gamma: 0.9,
        occupancy: OccupancyKind::Stationary,
    })
    .expect("embedded MDP is valid")
}

pub fn c6_mdp_json() -> String {
    serde_json::to_string_pretty(&c6_mdp().to_spec()).expect("spec serializes")
}

pub fn c6_vertices() -> Vec<Vec<f64>> {
    vec![vec![0.2, 0.7, 0.1], vec![0.2, 0.1, 0.7], vec![0.4, 0.3, 0.3]]
}

pub fn measures(points: &[Vec<f64>]) -> Vec<OccupancyMeasure> {
    points
        .iter()
        .map(|p| OccupancyMeasure::new(p.clone()).expect("fixture point is a distribution"))
        .collect()
}

pub fn c6_polytope() -> Polytope {
    Polytope::from_vertices(measures(&c6_vertices()))
}

/// The two-skill solution `{v1, v2}` with equal weights.
pub fn c6_solution() -> SkillSet {
    let v = c6_vertices();
    SkillSet::from_raw(&v[..2], &[0.5, 0.5]).expect("valid skill set")
}

/// `{v1, v1, v4, v4}` with uniform weights; `v4` is the second vertex of the worked example.
pub fn duplicated_skill_fixture() -> SkillSet {
    let v = c6_vertices();
    let skills = vec![v[0].clone(), v[0].clone(), v[1].clone(), v[1].clone()];
    SkillSet::from_raw(&skills, &[0.25; 4]).expect("valid skill set")
}

/// Four affinely independent vertices where `{a, c}` is the unique most
/// distant pair under unit cost but `{a, d}` covers the rest better.
pub fn c5_vertices() -> Vec<Vec<f64>> {
    vec![
        vec![0.01, 0.39, 0.11, 0.49],
        vec![0.33, 0.23, 0.04, 0.40],
        vec![0.36, 0.01, 0.44, 0.19],
        vec![0.41, 0.11, 0.02, 0.46],
    ]
}

/// Four vertices with a close pair (`v2`, `v4`); maximizing WSEP over four
/// placements duplicates `v1` instead of covering `v4`.
pub fn c3_vertices() -> Vec<Vec<f64>> {
    vec![
        vec![0.85, 0.05, 0.05, 0.05],
        vec![0.05, 0.60, 0.30, 0.05],
        vec![0.05, 0.30, 0.60, 0.05],
        vec![0.05, 0.55, 0.30, 0.10],
    ]
}

/// All six permutations of `base`: equidistant from the uniform center.
pub fn hexagon_vertices(base: [f64; 3]) -> Vec<Vec<f64>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
    PERMS
        .iter()
        .map(|p| p.iter().map(|&i| base[i]).collect())
        .collect()
}

/// The cyclic triple of [`hexagon_vertices`] with uniform weights.
pub fn hexagon_cyclic_solution(base: [f64; 3]) -> SkillSet {
    let v = hexagon_vertices(base);
    SkillSet::from_raw(&v[..3], &[1.0 / 3.0; 3]).expect("valid skill set")
}

/// `n` points on a circle of `radius` (Euclidean) around the uniform point of the 2-simplex.
pub fn circle_points(n: usize, radius: f64) -> Vec<Vec<f64>> {
    let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let e2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let mut p: Vec<f64> = (0..3)
                .map(|s| 1.0 / 3.0 + radius * (t.cos() * e1[s] + t.sin() * e2[s]))
                .collect();
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
            p
        })
        .collect()
}

pub fn random_simplex_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// A simplex point with every entry at least `floor`.
pub fn random_full_support<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let v = random_simplex_point(rng, n);
    let f = floor.min(0.5 / n as f64);
    v.iter().map(|x| f + (1.0 - n as f64 * f) * x).collect()
}

/// Random MDP with Dirichlet(1) transition rows and initial distribution.
pub fn random_mdp(seed: u64, num_states: usize, num_actions: usize, kind: OccupancyKind) -> TabularMdp {
    let mut r = rng(seed);
    let transitions = (0..num_actions)
        .map(|_| (0..num_states).map(|_| random_simplex_point(&mut r, num_states)).collect())
        .collect();
    let initial = random_simplex_point(&mut r, num_states);
    TabularMdp::new(MdpSpec {
        num_states,
        num_actions,
        transitions,
        initial,
        gamma: 0.9,
        occupancy: kind,
    })
    .expect("random MDP is valid")
}

/// Random MDP with `|S|` and `|A|` drawn from `2..=max_states` / `2..=max_actions`.
pub fn random_mdp_sized(seed: u64, max_states: usize, max_actions: usize, kind: OccupancyKind) -> TabularMdp {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let ns = r.random_range(2..=max_states);
    let na = r.random_range(2..=max_actions);
    random_mdp(seed, ns, na, kind)
}

/// Extreme points of `count` random simplex points in dimension `dim`.
pub fn random_polytope(seed: u64, dim: usize, count: usize) -> Polytope {
    let mut r = rng(seed);
    let pts: Vec<OccupancyMeasure> = (0..count)
        .map(|_| OccupancyMeasure::normalized(random_simplex_point(&mut r, dim)).expect("valid point"))
        .collect();
    extreme_points(&pts, DEDUPE_TOL)
}

/// Random full-support skill set with random weights.
pub fn random_skillset<R: Rng>(rng: &mut R, dim: usize, skills: usize) -> SkillSet {
    let sk: Vec<Vec<f64>> = (0..skills).map(|_| random_full_support(rng, dim, 1e-3)).collect();
    let w = random_full_support(rng, skills, 1e-3);
    SkillSet::from_raw(&sk, &w).expect("valid skill set")
}

/// Two-skill sets over `num_states` states whose exact LSEPIN grows with the
/// fixture index: both skills share a random base measure and tilt toward
/// opposite halves of the state space by an increasing amount.
pub fn estimator_fixtures(seed: u64, count: usize, num_states: usize) -> Vec<SkillSet> {
    let mut r = rng(seed);
    let half = num_states / 2;
    (0..count)
        .map(|i| {
            let t = 0.05 + 0.65 * i as f64 / (count.max(2) - 1) as f64;
            let base: Vec<f64> = {
                let raw: Vec<f64> = (0..num_states).map(|_| rand_distr::Gamma::new(5.0, 1.0).unwrap().sample(&mut r)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|x| x / total).collect()
            };
            let tilt = |lo: usize, hi: usize| -> Vec<f64> {
                (0..num_states)
                    .map(|s| (1.0 - t) * base[s] + if (lo..hi).contains(&s) { t / (hi - lo) as f64 } else { 0.0 })
                    .collect()
            };
            SkillSet::from_raw(&[tilt(0, half), tilt(half, num_states)], &[0.5, 0.5]).expect("valid skill set")
        })
        .collect()
}
