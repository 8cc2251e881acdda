//! Wasserstein skill learning: AWD and WSEP maximization over vertex
//! placements, exact projected-Wasserstein vertex discovery, and the KLSEP
//! counterexample.

use rand::Rng;
use serde::Serialize;

use crate::divergences::{klsep, SkillSet};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::lp::LinearProgram;
use crate::mdp::{linf, OccupancyMeasure};
use crate::polytope::{hull_membership, Polytope, DEDUPE_TOL, HULL_TOL};
use crate::transport::{pairwise, wasserstein_distance, wsep, CostMatrix, TransportPlan};

pub const PLACEMENT_CAP: u128 = 100_000;
pub const PWSEP_TOL: f64 = 1e-7;
const TIE_TOL: f64 = 1e-9;
const AWD_RESTARTS: usize = 8;
const AWD_STEPS: usize = 400;

/// `Σ_z p(z) W(p(S|z), p(S))`.
pub fn awd(ss: &SkillSet, c: &CostMatrix) -> Result<f64> {
    let mut total = 0.0;
    for z in ss.learned() {
        total += ss.weights()[z] * wasserstein_distance(&ss.skills()[z], ss.mixture(), c)?;
    }
    Ok(total)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Advances `idx` to the next `k`-combination of `0..n`; `false` when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Advances a non-decreasing multiset index vector over `0..n`.
fn next_multiset(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] + 1 < n {
            let v = idx[i] + 1;
            for slot in idx.iter_mut().skip(i) {
                *slot = v;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Serialize)]
pub struct Placement {
    /// Vertex index of every placed skill.
    pub vertices: Vec<usize>,
    pub weights: Vec<f64>,
    pub value: f64,
    /// `true` when the value comes from local search rather than exhaustive search.
    pub heuristic: bool,
}

impl Placement {
    pub fn skillset(&self, polytope: &Polytope) -> Result<SkillSet> {
        let skills = self.vertices.iter().map(|&i| polytope.vertices[i].clone()).collect();
        SkillSet::new(skills, self.weights.clone())
    }
}

fn awd_weighted(points: &[&[f64]], w: &[f64], c: &CostMatrix) -> Result<f64> {
    let dim = points[0].len();
    let mut m = vec![0.0; dim];
    for (p, &wi) in points.iter().zip(w) {
        for s in 0..dim {
            m[s] += wi * p[s];
        }
    }
    let mut total = 0.0;
    for (p, &wi) in points.iter().zip(w) {
        if wi > 0.0 {
            total += wi * wasserstein_distance(p, &m, c)?;
        }
    }
    Ok(total)
}

/// Exponentiated-gradient ascent on AWD in the weights, from uniform plus seeded restarts.
fn best_awd_weights(points: &[&[f64]], c: &CostMatrix, seed: u64) -> Result<(Vec<f64>, f64)> {
    let n = points.len();
    if n == 1 {
        return Ok((vec![1.0], 0.0));
    }
    let mut rng = fixtures::rng(seed);
    let mut best = (vec![1.0 / n as f64; n], f64::NEG_INFINITY);
    for restart in 0..AWD_RESTARTS {
        let mut w = if restart == 0 {
            vec![1.0 / n as f64; n]
        } else {
            fixtures::random_full_support(&mut rng, n, 0.01)
        };
        let mut value = awd_weighted(points, &w, c)?;
        let mut step = 1.0;
        for _ in 0..AWD_STEPS {
            // central differences along each coordinate, holding the sum fixed by renormalizing
            let h = 1e-6;
            let mut grad = vec![0.0; n];
            for i in 0..n {
                let mut up = w.clone();
                up[i] += h;
                let tu: f64 = up.iter().sum();
                up.iter_mut().for_each(|x| *x /= tu);
                let mut dn = w.clone();
                dn[i] = (dn[i] - h).max(0.0);
                let td: f64 = dn.iter().sum();
                dn.iter_mut().for_each(|x| *x /= td);
                grad[i] = (awd_weighted(points, &up, c)? - awd_weighted(points, &dn, c)?) / (2.0 * h);
            }
            let mut cand: Vec<f64> = w.iter().zip(&grad).map(|(x, g)| x * (step * g).exp()).collect();
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|x| *x /= total);
            let v = awd_weighted(points, &cand, c)?;
            if v > value {
                w = cand;
                value = v;
                step = (step * 1.2).min(50.0);
            } else {
                step *= 0.5;
                if step < 1e-10 {
                    break;
                }
            }
        }
        if value > best.1 + 1e-12 {
            best = (w, value);
        }
    }
    Ok(best)
}

/// Best AWD over vertex subsets of size at most `k`, weights by local search.
pub fn maximize_awd(polytope: &Polytope, c: &CostMatrix, k: usize) -> Result<Placement> {
    assert!(k >= 1);
    let n = polytope.len();
    let k = k.min(n);
    let count: u128 = (1..=k).map(|s| binomial(n as u128, s as u128)).sum();
    if count > PLACEMENT_CAP {
        return Err(Error::TooLarge {
            what: "vertex subsets".into(),
            size: count,
            cap: PLACEMENT_CAP,
        });
    }
    let mut best = Placement {
        vertices: vec![0],
        weights: vec![1.0],
        value: 0.0,
        heuristic: true,
    };
    for size in 2..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let pts: Vec<&[f64]> = idx.iter().map(|&i| &*polytope.vertices[i]).collect();
            let (w, v) = best_awd_weights(&pts, c, size as u64)?;
            if v > best.value + 1e-9 {
                best = Placement {
                    vertices: idx.clone(),
                    weights: w,
                    value: v,
                    heuristic: true,
                };
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

/// Placement of `k` uniform-weight skills at vertices (repeats allowed) maximizing WSEP.
pub fn maximize_wsep(polytope: &Polytope, c: &CostMatrix, k: usize, mode: SearchMode) -> Result<Placement> {
    assert!(k >= 1);
    let n = polytope.len();
    let pts: Vec<&[f64]> = polytope.vertices.iter().map(|v| &**v).collect();
    let score = |idx: &[usize], d: &[Vec<f64>]| -> f64 {
        let mut t = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                if a != b {
                    t += d[i][j];
                }
            }
        }
        t
    };
    let vertices = match mode {
        SearchMode::Exhaustive => {
            let count = binomial((n + k - 1) as u128, k as u128);
            if count > PLACEMENT_CAP {
                return Err(Error::TooLarge {
                    what: "vertex multisets".into(),
                    size: count,
                    cap: PLACEMENT_CAP,
                });
            }
            let d = pairwise(&pts, c)?;
            let mut idx = vec![0; k];
            let mut best = (idx.clone(), score(&idx, &d));
            while next_multiset(&mut idx, n) {
                let v = score(&idx, &d);
                if v > best.1 + 1e-12 {
                    best = (idx.clone(), v);
                }
            }
            best.0
        }
        SearchMode::Greedy => {
            let d = pairwise(&pts, c)?;
            let mut idx = vec![0];
            while idx.len() < k {
                let gain = |v: usize| idx.iter().map(|&j| d[v][j] + d[j][v]).sum::<f64>();
                let mut pick = 0;
                for v in 1..n {
                    if gain(v) > gain(pick) + 1e-12 {
                        pick = v;
                    }
                }
                idx.push(pick);
            }
            idx
        }
    };
    let weights = vec![1.0 / k as f64; k];
    let ss = SkillSet::new(vertices.iter().map(|&i| polytope.vertices[i].clone()).collect(), weights.clone())?;
    Ok(Placement {
        value: wsep(&ss, c)?,
        vertices,
        weights,
        heuristic: mode == SearchMode::Greedy,
    })
}

/// Whether every placed vertex lies outside the hull of the other polytope vertices.
pub fn placements_are_extreme(polytope: &Polytope, placement: &Placement) -> bool {
    placement.vertices.iter().all(|&i| {
        let others: Vec<&[f64]> = (0..polytope.len())
            .filter(|&j| j != i)
            .map(|j| &*polytope.vertices[j])
            .collect();
        others.is_empty() || !hull_membership(&polytope.vertices[i], &others, HULL_TOL).inside
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub distance: f64,
    pub lambda: Vec<f64>,
    pub plan: TransportPlan,
}

/// `min_λ W(p, Σ_j λ_j basis_j)` as a single LP over the plan and the weights.
pub fn pwsep_project(p: &[f64], basis: &[&[f64]], c: &CostMatrix) -> Result<Projection> {
    assert!(!basis.is_empty());
    let n = p.len();
    let m = basis.len();
    let src: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();
    let ns = src.len();
    // columns: T[a][j] for source a (supported states of p) and every target j, then λ
    let t_cols = ns * n;
    let mut lp = LinearProgram::new(t_cols + m);
    for (a, &i) in src.iter().enumerate() {
        for j in 0..n {
            lp.set_objective(a * n + j, c.get(i, j));
        }
    }
    for (a, &i) in src.iter().enumerate() {
        lp.add_row(&(0..n).map(|j| (a * n + j, 1.0)).collect::<Vec<_>>(), p[i]);
    }
    for j in 0..n {
        let mut row: Vec<(usize, f64)> = (0..ns).map(|a| (a * n + j, 1.0)).collect();
        row.extend((0..m).map(|k| (t_cols + k, -basis[k][j])));
        lp.add_row(&row, 0.0);
    }
    lp.add_row(&(0..m).map(|k| (t_cols + k, 1.0)).collect::<Vec<_>>(), 1.0);
    let sol = lp.solve()?;
    let mut plan = vec![vec![0.0; n]; n];
    for (a, &i) in src.iter().enumerate() {
        for j in 0..n {
            plan[i][j] = sol.x[a * n + j];
        }
    }
    let distance = sol.objective.max(0.0);
    Ok(Projection {
        distance,
        lambda: sol.x[t_cols..].to_vec(),
        plan: TransportPlan { plan, cost: distance },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PwsepStep {
    pub iter: usize,
    pub candidate: usize,
    pub distance: f64,
    pub lambda: Vec<f64>,
    /// Number of candidates within the tie tolerance of the maximum.
    pub tied: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PwsepState {
    pub discovered: Vec<OccupancyMeasure>,
    pub iteration: usize,
    pub last_projected_distance: f64,
    pub history: Vec<PwsepStep>,
}

/// Lowest-index member of `tied` lying outside the hull of the other tied
/// points together with `discovered`; falls back to the lowest index.
fn break_tie(points: &[&[f64]], tied: &[usize], discovered: &[usize]) -> usize {
    if tied.len() == 1 {
        return tied[0];
    }
    for &t in tied {
        let others: Vec<&[f64]> = tied
            .iter()
            .chain(discovered)
            .filter(|&&o| o != t)
            .map(|&o| points[o])
            .collect();
        if !hull_membership(points[t], &others, HULL_TOL).inside {
            return t;
        }
    }
    tied[0]
}

/// Discovers polytope vertices by repeatedly picking the candidate farthest
/// (in projected Wasserstein distance) from the hull of those already found.
pub fn pwsep_run(candidates: &[OccupancyMeasure], c: &CostMatrix, tol: f64, seed: u64) -> Result<PwsepState> {
    assert!(!candidates.is_empty());
    // distinct candidates, remembered by their first index
    let mut uniq: Vec<usize> = Vec::new();
    for (i, p) in candidates.iter().enumerate() {
        if !uniq.iter().any(|&u| linf(&candidates[u], p) < DEDUPE_TOL) {
            uniq.push(i);
        }
    }
    let pts: Vec<&[f64]> = uniq.iter().map(|&i| &*candidates[i]).collect();
    let n = pts.len();

    let mut rng = fixtures::rng(seed);
    let anchor = rng.random_range(0..n);
    let first: Vec<f64> = pts
        .iter()
        .map(|p| wasserstein_distance(p, pts[anchor], c))
        .collect::<Result<_>>()?;
    let top = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..n).filter(|&j| first[j] >= top - TIE_TOL).collect();
    let pick = break_tie(&pts, &tied, &[]);

    let mut discovered = vec![pick];
    let mut history = vec![PwsepStep {
        iter: 0,
        candidate: uniq[pick],
        distance: top,
        lambda: Vec::new(),
        tied: tied.len(),
    }];
    // upper bounds on each candidate's distance to the current hull
    let mut bound: Vec<f64> = vec![f64::INFINITY; n];
    let mut alive: Vec<bool> = vec![true; n];
    alive[pick] = false;
    let last;
    loop {
        let basis: Vec<&[f64]> = discovered.iter().map(|&d| pts[d]).collect();
        let mut exact: Vec<Option<Projection>> = (0..n).map(|_| None).collect();
        let mut order: Vec<usize> = (0..n).filter(|&j| alive[j]).collect();
        order.sort_by(|&a, &b| bound[b].partial_cmp(&bound[a]).unwrap().then(a.cmp(&b)));
        let mut best = f64::NEG_INFINITY;
        for &j in &order {
            if bound[j] < best - TIE_TOL {
                break;
            }
            let proj = pwsep_project(pts[j], &basis, c)?;
            bound[j] = proj.distance;
            best = best.max(proj.distance);
            exact[j] = Some(proj);
        }
        for &j in &order {
            if bound[j] <= tol {
                alive[j] = false;
            }
        }
        if best <= tol || order.is_empty() {
            last = best.max(0.0);
            break;
        }
        let tied: Vec<usize> = (0..n)
            .filter(|&j| exact[j].as_ref().is_some_and(|p| p.distance >= best - TIE_TOL))
            .collect();
        let pick = break_tie(&pts, &tied, &discovered);
        let proj = exact[pick].take().expect("tied candidates were evaluated");
        history.push(PwsepStep {
            iter: discovered.len(),
            candidate: uniq[pick],
            distance: proj.distance,
            lambda: proj.lambda,
            tied: tied.len(),
        });
        discovered.push(pick);
        alive[pick] = false;
    }

    Ok(PwsepState {
        iteration: discovered.len(),
        discovered: discovered.iter().map(|&d| candidates[uniq[d]].clone()).collect(),
        last_projected_distance: last,
        history,
    })
}

/// `Σ_m min_λ W(p_m, Σ_{j≠m} λ_j p_j)` over distinct skills.
pub fn spwd(ss: &SkillSet, c: &CostMatrix) -> Result<f64> {
    let skills = ss.skills();
    let mut total = 0.0;
    for m in 0..skills.len() {
        let mut basis: Vec<&[f64]> = Vec::new();
        for (j, s) in skills.iter().enumerate() {
            if j != m && !basis.iter().any(|b| linf(b, s) < DEDUPE_TOL) {
                basis.push(s);
            }
        }
        if basis.is_empty() {
            continue;
        }
        total += pwsep_project(&skills[m], &basis, c)?.distance;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct PathologyReport {
    pub epsilon: f64,
    pub delta: f64,
    pub pair: Vec<Vec<f64>>,
    pub near: Vec<f64>,
    pub far: Vec<f64>,
    pub klsep_near: f64,
    pub klsep_far: f64,
    pub wsep_near: f64,
    pub wsep_far: f64,
    /// KLSEP prefers the near third skill while WSEP prefers the far one.
    pub holds: bool,
}

/// Three-state configuration where KLSEP rewards adding a skill next to an
/// existing one over adding a distant one, while WSEP does the opposite.
///
/// Returns `None` for fewer than three skills.
pub fn klsep_pathology_demo(c: &CostMatrix, num_skills: usize) -> Result<Option<PathologyReport>> {
    if num_skills < 3 {
        return Ok(None);
    }
    if c.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: c.len() });
    }
    let eps = 0.1;
    let pi = vec![1.0 - 2.0 * eps, eps, eps];
    let pj = vec![eps, 1.0 - 2.0 * eps, eps];
    let far = vec![eps, eps, 1.0 - 2.0 * eps];
    let spread = SkillSet::uniform(fixtures::measures(&[pi.clone(), pj.clone(), far.clone()]))?;
    let klsep_far = klsep(&spread);
    let wsep_far = wsep(&spread, c)?;
    let mut delta = eps / 2.0;
    let mut last = None;
    while delta > 1e-12 {
        let near = vec![delta, 1.0 - eps - delta, eps];
        let cfg = SkillSet::uniform(fixtures::measures(&[pi.clone(), pj.clone(), near.clone()]))?;
        let (kn, wn) = (klsep(&cfg), wsep(&cfg, c)?);
        let holds = kn > klsep_far && wn < wsep_far;
        let report = PathologyReport {
            epsilon: eps,
            delta,
            pair: vec![pi.clone(), pj.clone()],
            near,
            far: far.clone(),
            klsep_near: kn,
            klsep_far,
            wsep_near: wn,
            wsep_far,
            holds,
        };
        if holds {
            return Ok(Some(report));
        }
        last = Some(report);
        delta /= 10.0;
    }
    Ok(last)
}
