//! Exact MISL at desk scale: the minimax-KL center of a polytope, weights that
//! realize it, and LSEPIN tie-breaking among feasible weightings.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::divergences::{indicator_mi_at, kl, SkillSet, WEIGHT_EPS};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::lp::LinearProgram;
use crate::mdp::{linf, OccupancyMeasure};
use crate::polytope::{hull_membership, Polytope};

pub const CENTER_TOL: f64 = 1e-7;
pub const ACTIVE_TOL: f64 = 1e-4;
const MAX_ITERS: usize = 1_000_000;
const WARM_START_TEMPERATURES: [f64; 5] = [10.0, 30.0, 100.0, 300.0, 1000.0];
const WARM_START_STEPS: usize = 60;

#[derive(Debug, Clone, Serialize)]
pub struct MislSolution {
    pub center: OccupancyMeasure,
    pub radius: f64,
    pub active: Vec<usize>,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

impl MislSolution {
    /// The skill set placing `weights` on the active vertices of `polytope`.
    pub fn skillset(&self, polytope: &Polytope) -> Result<SkillSet> {
        let skills = self.active.iter().map(|&i| polytope.vertices[i].clone()).collect();
        SkillSet::new(skills, self.weights.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CenterOptions {
    pub tol: f64,
    pub active_tol: f64,
    pub max_iters: usize,
}

impl Default for CenterOptions {
    fn default() -> Self {
        Self {
            tol: CENTER_TOL,
            active_tol: ACTIVE_TOL,
            max_iters: MAX_ITERS,
        }
    }
}

fn mix(points: &[&[f64]], mu: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; points[0].len()];
    for (p, &m) in points.iter().zip(mu) {
        if m == 0.0 {
            continue;
        }
        for (qs, &ps) in q.iter_mut().zip(p.iter()) {
            *qs += m * ps;
        }
    }
    q
}

fn softmax_in_place(logits: &mut [f64]) {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - top).exp();
        total += *l;
    }
    logits.iter_mut().for_each(|l| *l /= total);
}

/// Minimizes the softened max of `kl(p_v, q_μ)` by entropic mirror descent on μ.
fn warm_start(points: &[&[f64]], mu: &mut [f64]) {
    let n = points.len();
    let dim = points[0].len();
    for &temp in &WARM_START_TEMPERATURES {
        for _ in 0..WARM_START_STEPS {
            let q = mix(points, mu);
            let mut pi: Vec<f64> = points.iter().map(|p| temp * kl(p, &q)).collect();
            if pi.iter().any(|v| !v.is_finite()) {
                // some vertex is uncovered; the smoothed max is its indicator
                pi.iter_mut().for_each(|v| *v = if v.is_finite() { f64::NEG_INFINITY } else { 0.0 });
            }
            softmax_in_place(&mut pi);
            // ∂/∂q_s of Σ_v π_v kl(p_v, q) is −Σ_v π_v p_v(s)/q_s
            let mut dq = vec![0.0; dim];
            for (p, &w) in points.iter().zip(&pi) {
                for s in 0..dim {
                    if p[s] > 0.0 {
                        dq[s] -= w * p[s] / q[s].max(1e-300);
                    }
                }
            }
            let mut logits: Vec<f64> = (0..n)
                .map(|v| {
                    let g: f64 = (0..dim).map(|s| dq[s] * points[v][s]).sum();
                    mu[v].max(1e-300).ln() - g
                })
                .collect();
            softmax_in_place(&mut logits);
            mu.copy_from_slice(&logits);
        }
    }
}

struct DualState {
    mu: Vec<f64>,
    divergences: Vec<f64>,
    value: f64,
    centre: Vec<f64>,
}

fn evaluate(points: &[&[f64]], mu: Vec<f64>) -> DualState {
    let centre = mix(points, &mu);
    let divergences: Vec<f64> = points.iter().map(|p| kl(p, &centre)).collect();
    let value = mu
        .iter()
        .zip(&divergences)
        .filter(|(&m, _)| m > 0.0)
        .map(|(m, d)| m * d)
        .sum();
    DualState {
        mu,
        divergences,
        value,
        centre,
    }
}

/// Minimax-KL center of an explicit point list, starting from mixture weights `mu0`.
///
/// The dual problem `max_μ Σ μ_v kl(p_v, q_μ)` is solved by multiplicative
/// updates `μ_v ∝ μ_v exp(η kl(p_v, q_μ))` with a backtracked step `η`; the
/// duality gap `max_v kl(p_v, q_μ) − Σ μ_v kl(p_v, q_μ)` bounds the suboptimality.
pub fn misl_center_from(points: &[&[f64]], mu0: &[f64], opts: CenterOptions) -> Result<MislSolution> {
    let n = points.len();
    assert!(n > 0 && mu0.len() == n);
    let mut mu = mu0.to_vec();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= total);
    warm_start(points, &mut mu);
    // keep every vertex reachable by the multiplicative updates
    let floor = 1e-12 / n as f64;
    mu.iter_mut().for_each(|m| *m = (*m + floor) / (1.0 + floor * n as f64));

    let mut state = evaluate(points, mu);
    let mut eta = 1.0f64;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < opts.max_iters {
        let top = state.divergences.iter().copied().fold(0.0, f64::max);
        gap = top - state.value;
        if gap <= opts.tol {
            break;
        }
        iterations += 1;
        loop {
            let mut logits: Vec<f64> = state
                .mu
                .iter()
                .zip(&state.divergences)
                .map(|(&m, &d)| if m > 0.0 { m.ln() + eta * d } else { f64::NEG_INFINITY })
                .collect();
            softmax_in_place(&mut logits);
            let next = evaluate(points, logits);
            if next.value >= state.value - 1e-15 || eta <= 1.0 {
                let improved = next.value > state.value;
                state = next;
                eta = if improved { (eta * 1.5).min(1e3) } else { 1.0 };
                break;
            }
            eta = (eta * 0.5).max(1.0);
        }
    }
    if gap > opts.tol {
        return Err(Error::NonConvergent {
            what: "minimax-KL center".into(),
            iterations,
            residual: gap,
        });
    }

    let center = OccupancyMeasure::normalized(state.centre.clone())?;
    let radius = state.divergences.iter().copied().fold(0.0, f64::max);
    let active: Vec<usize> = (0..n)
        .filter(|&v| (state.divergences[v] - radius).abs() <= opts.active_tol)
        .collect();
    let active_pts: Vec<&[f64]> = active.iter().map(|&v| points[v]).collect();
    let weights = misl_weights(&active_pts, &center)?;
    Ok(MislSolution {
        center,
        radius,
        active,
        weights,
        iterations,
        gap,
    })
}

pub fn misl_center_with(polytope: &Polytope, opts: CenterOptions) -> Result<MislSolution> {
    let pts: Vec<&[f64]> = polytope.vertices.iter().map(|v| &**v).collect();
    let n = pts.len();
    misl_center_from(&pts, &vec![1.0 / n as f64; n], opts)
}

/// The unique center of the smallest KL ball (in the first argument) containing the polytope.
pub fn misl_center(polytope: &Polytope, tol: f64) -> Result<MislSolution> {
    misl_center_with(
        polytope,
        CenterOptions {
            tol,
            ..CenterOptions::default()
        },
    )
}

/// Mixture weights over `active` reproducing `center`, by an L1-residual LP.
pub fn misl_weights(active: &[&[f64]], center: &[f64]) -> Result<Vec<f64>> {
    let (lambda, residual) = l1_fit(active, center)?;
    if residual > 1e-6 {
        return Err(Error::Infeasible(format!(
            "center is {residual:e} (L1) away from the hull of the active vertices"
        )));
    }
    Ok(lambda)
}

/// `min ‖Σ λ_v p_v − c‖₁` over the simplex; returns `(λ, residual)`.
fn l1_fit(points: &[&[f64]], center: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = points.len();
    let dim = center.len();
    // columns: λ (n), e⁺ (dim), e⁻ (dim)
    let mut lp = LinearProgram::new(n + 2 * dim);
    for s in 0..2 * dim {
        lp.set_objective(n + s, 1.0);
    }
    for s in 0..dim {
        let mut row: Vec<(usize, f64)> = (0..n).map(|v| (v, points[v][s])).collect();
        row.push((n + s, 1.0));
        row.push((n + dim + s, -1.0));
        lp.add_row(&row, center[s]);
    }
    lp.add_row(&(0..n).map(|v| (v, 1.0)).collect::<Vec<_>>(), 1.0);
    let sol = lp.solve()?;
    let mut lambda = sol.x[..n].to_vec();
    let total: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= total);
    Ok((lambda, sol.objective))
}

#[derive(Debug, Clone, Serialize)]
pub struct TieBreak {
    pub weights: Vec<f64>,
    pub lsepin: f64,
    /// Weights maximizing the smallest entry, for comparison.
    pub max_min_weights: Vec<f64>,
    pub max_min_lsepin: f64,
    pub seeds: usize,
}

/// LSEPIN of weights `lambda` over `points` whose mixture is `center`.
fn lsepin_of(points: &[&[f64]], center: &[f64], lambda: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (z, (&p, &w)) in points.iter().zip(lambda).enumerate() {
        if w <= WEIGHT_EPS {
            continue;
        }
        match indicator_mi_at(p, center, w, z) {
            Ok(v) => best = best.min(v),
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    best
}

/// Solves `max cᵀλ` over the feasible-weight polytope `{λ ≥ 0, Pλ = c, Σλ = 1}`.
fn weight_lp_vertex(points: &[&[f64]], center: &[f64], objective: &[f64]) -> Result<Vec<f64>> {
    let n = points.len();
    let dim = center.len();
    let mut lp = LinearProgram::new(n);
    for (v, &c) in objective.iter().enumerate() {
        lp.set_objective(v, -c);
    }
    for s in 0..dim {
        lp.add_row(&(0..n).map(|v| (v, points[v][s])).collect::<Vec<_>>(), center[s]);
    }
    lp.add_row(&(0..n).map(|v| (v, 1.0)).collect::<Vec<_>>(), 1.0);
    Ok(lp.solve()?.x)
}

/// `max t` subject to `λ_v ≥ t` on the feasible-weight polytope.
fn max_min_weights(points: &[&[f64]], center: &[f64]) -> Result<Vec<f64>> {
    let n = points.len();
    let dim = center.len();
    // columns: t, λ, slack_v with λ_v − t − slack_v = 0
    let mut lp = LinearProgram::new(1 + 2 * n);
    lp.set_objective(0, -1.0);
    for s in 0..dim {
        lp.add_row(&(0..n).map(|v| (1 + v, points[v][s])).collect::<Vec<_>>(), center[s]);
    }
    lp.add_row(&(0..n).map(|v| (1 + v, 1.0)).collect::<Vec<_>>(), 1.0);
    for v in 0..n {
        lp.add_row(&[(1 + v, 1.0), (0, -1.0), (1 + n + v, -1.0)], 0.0);
    }
    Ok(lp.solve()?.x[1..1 + n].to_vec())
}

/// Orthonormal basis of the null space of `[P; 1ᵀ]` restricted to `free` coordinates.
fn null_space(points: &[&[f64]], free: &[usize]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let m = free.len();
    if m == 0 {
        return Vec::new();
    }
    let a = DMatrix::from_fn(dim + 1, m, |i, j| if i < dim { points[free[j]][i] } else { 1.0 });
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |mx, v| mx.max(v.abs())).max(1.0);
    let mut out = Vec::new();
    for (k, &val) in eig.eigenvalues.iter().enumerate() {
        if val.abs() <= 1e-10 * scale {
            let col = eig.eigenvectors.column(k);
            let mut full = vec![0.0; points.len()];
            for (j, &f) in free.iter().enumerate() {
                full[f] = col[j];
            }
            out.push(full);
        }
    }
    out
}

/// Maximizer of `Σ log λ_v` on the relative interior, by damped Newton steps in the null space.
fn analytic_center(points: &[&[f64]], start: &[f64], free: &[usize]) -> Vec<f64> {
    let basis = null_space(points, free);
    let mut lambda = start.to_vec();
    if basis.is_empty() {
        return lambda;
    }
    let d = basis.len();
    for _ in 0..100 {
        let grad = DVector::from_fn(d, |k, _| free.iter().map(|&v| basis[k][v] / lambda[v]).sum());
        let hess = DMatrix::from_fn(d, d, |k, l| {
            free.iter()
                .map(|&v| basis[k][v] * basis[l][v] / (lambda[v] * lambda[v]))
                .sum()
        });
        let Some(step) = hess.lu().solve(&grad) else { break };
        let dir: Vec<f64> = (0..lambda.len())
            .map(|v| (0..d).map(|k| step[k] * basis[k][v]).sum())
            .collect();
        let decrement: f64 = grad.dot(&step);
        let mut t = 1.0;
        while free.iter().any(|&v| lambda[v] + t * dir[v] <= 0.0) {
            t *= 0.5;
        }
        for v in 0..lambda.len() {
            lambda[v] += t * dir[v];
        }
        if decrement < 1e-20 {
            break;
        }
    }
    lambda
}

/// Compass search in the feasible slice starting from `start`, accepting only
/// strict LSEPIN improvements.
fn local_search(points: &[&[f64]], center: &[f64], basis: &[Vec<f64>], start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut lambda = start;
    let mut value = lsepin_of(points, center, &lambda);
    let mut h = 0.25f64;
    while h > 1e-9 {
        let mut improved = false;
        for dir in basis {
            for sign in [1.0f64, -1.0] {
                // largest feasible multiple of the direction, capped at h
                let mut t = h;
                for (l, d) in lambda.iter().zip(dir) {
                    let step = sign * d;
                    if step < 0.0 {
                        t = t.min(l / -step);
                    }
                }
                if t <= 0.0 {
                    continue;
                }
                let cand: Vec<f64> = lambda
                    .iter()
                    .zip(dir)
                    .map(|(l, d)| (l + sign * t * d).max(0.0))
                    .map(|x| if x < 1e-13 { 0.0 } else { x })
                    .collect();
                let total: f64 = cand.iter().sum();
                let cand: Vec<f64> = cand.iter().map(|x| x / total).collect();
                let v = lsepin_of(points, center, &cand);
                if v > value + 1e-14 {
                    lambda = cand;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (lambda, value)
}

/// Feasible weights on `active` maximizing LSEPIN, by multi-start local search.
///
/// Seeds are LP vertices of the feasible-weight polytope (for coordinate and
/// seeded random objectives) and its analytic center. The max-min-weight LP
/// solution is reported alongside.
pub fn lsepin_tiebreak(active: &[&[f64]], center: &[f64], seed: u64) -> Result<TieBreak> {
    let n = active.len();
    let (lambda0, residual) = l1_fit(active, center)?;
    if residual > 1e-6 {
        return Err(Error::Infeasible(format!("center is {residual:e} (L1) outside the hull")));
    }
    // reproject the center so the slice is exactly feasible
    let c: Vec<f64> = mix(active, &lambda0);

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let push = |seeds: &mut Vec<Vec<f64>>, s: Vec<f64>| {
        if !seeds.iter().any(|t| linf(t, &s) < 1e-9) {
            seeds.push(s);
        }
    };
    for v in 0..n.min(15) {
        let mut obj = vec![0.0; n];
        obj[v] = 1.0;
        push(&mut seeds, weight_lp_vertex(active, &c, &obj)?);
    }
    let mut rng = fixtures::rng(seed);
    for _ in 0..30 {
        if seeds.len() >= 15 {
            break;
        }
        let obj: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        push(&mut seeds, weight_lp_vertex(active, &c, &obj)?);
    }
    let free: Vec<usize> = (0..n).filter(|&v| seeds.iter().any(|s| s[v] > 1e-10)).collect();
    let mean: Vec<f64> = (0..n)
        .map(|v| seeds.iter().map(|s| s[v]).sum::<f64>() / seeds.len() as f64)
        .collect();
    seeds.push(analytic_center(active, &mean, &free));

    let basis = null_space(active, &free);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &seeds {
        let (l, v) = local_search(active, &c, &basis, s.clone());
        if best.as_ref().is_none_or(|(_, bv)| v > *bv + 1e-12) {
            best = Some((l, v));
        }
    }
    let (weights, value) = best.expect("at least one seed");
    let mm = max_min_weights(active, &c)?;
    let mm_value = lsepin_of(active, &c, &mm);
    Ok(TieBreak {
        weights,
        lsepin: value,
        max_min_weights: mm,
        max_min_lsepin: mm_value,
        seeds: seeds.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub passed: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessaryConditions {
    pub same_mixture: ConditionCheck,
    pub equal_divergence: ConditionCheck,
    pub shared_skill: ConditionCheck,
}

impl NecessaryConditions {
    pub fn all_passed(&self) -> bool {
        self.same_mixture.passed && self.equal_divergence.passed && self.shared_skill.passed
    }
}

/// Checks that the sets share a mixture, that every learned skill sits at the
/// same KL distance from it, and that the designated skill coincides across sets.
pub fn check_necessary_conditions(sets: &[SkillSet], shared: &[usize], tol: f64) -> NecessaryConditions {
    assert!(sets.len() >= 2 && shared.len() == sets.len());
    let base = sets[0].mixture();
    let mix_worst = sets.iter().map(|s| s.mixture().linf(base)).fold(0.0, f64::max);

    let divs: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.learned().into_iter().map(move |z| kl(&s.skills()[z], s.mixture())))
        .collect();
    let lo = divs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = divs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let div_worst = hi - lo;

    let anchor = &sets[0].skills()[shared[0]];
    let shared_worst = sets
        .iter()
        .zip(shared)
        .map(|(s, &z)| s.skills()[z].linf(anchor))
        .fold(0.0, f64::max);

    let check = |worst: f64| ConditionCheck {
        passed: worst <= tol,
        worst,
    };
    NecessaryConditions {
        same_mixture: check(mix_worst),
        equal_divergence: check(div_worst),
        shared_skill: check(shared_worst),
    }
}

/// Membership of `center` in the hull of `active`, as used before weight recovery.
pub fn center_in_hull(active: &[&[f64]], center: &[f64]) -> bool {
    hull_membership(center, active, 1e-6).inside
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|x| x.as_slice()).collect()
    }

    #[test]
    fn worked_example_center() {
        let sol = misl_center(&fixtures::c6_polytope(), CENTER_TOL).unwrap();
        assert!(sol.center.linf(&[0.2, 0.4, 0.4]) < 1e-4, "{:?}", sol.center);
        assert!((sol.radius - 0.253102).abs() < 1e-5);
        assert_eq!(sol.active, vec![0, 1]);
        assert!(linf(&sol.weights, &[0.5, 0.5]) < 1e-4);
        assert!(sol.gap <= CENTER_TOL);
    }

    #[test]
    fn singleton_center() {
        let poly = Polytope::from_vertices(fixtures::measures(&[vec![0.1, 0.9]]));
        let sol = misl_center(&poly, CENTER_TOL).unwrap();
        assert_eq!(sol.radius, 0.0);
        assert_eq!(sol.active, vec![0]);
        assert_eq!(sol.weights, vec![1.0]);
        assert!(sol.center.linf(&[0.1, 0.9]) < 1e-15);
    }

    #[test]
    fn segment_center_matches_scan() {
        let seg = vec![vec![0.7, 0.3], vec![0.3, 0.7]];
        let poly = Polytope::from_vertices(fixtures::measures(&seg));
        let sol = misl_center(&poly, CENTER_TOL).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=10_000 {
            let t = k as f64 * 1e-4;
            let q = [0.7 * t + 0.3 * (1.0 - t), 0.3 * t + 0.7 * (1.0 - t)];
            let f = kl(&seg[0], &q).max(kl(&seg[1], &q));
            if f < best.0 {
                best = (f, q[0]);
            }
        }
        assert!((sol.center[0] - best.1).abs() < 1e-4);
        assert!((sol.center[0] - 0.5).abs() < 1e-4);
        assert_eq!(sol.active, vec![0, 1]);
    }

    #[test]
    fn weights_for_worked_example() {
        let v = fixtures::c6_vertices();
        let w = misl_weights(&pts(&v[..2]), &[0.2, 0.4, 0.4]).unwrap();
        assert!(linf(&w, &[0.5, 0.5]) < 1e-12);
        let w = misl_weights(&pts(&v[..1]), &v[0]).unwrap();
        assert_eq!(w, vec![1.0]);
        assert!(misl_weights(&pts(&v[..2]), &v[2]).is_err());
    }

    #[test]
    fn tiebreak_singleton_slice() {
        let v = fixtures::c6_vertices();
        let t = lsepin_tiebreak(&pts(&v[..2]), &[0.2, 0.4, 0.4], 0).unwrap();
        assert!(linf(&t.weights, &[0.5, 0.5]) < 1e-9);
    }

    #[test]
    fn tiebreak_vertex_center() {
        let v = fixtures::c6_vertices();
        let t = lsepin_tiebreak(&pts(&v), &v[2], 0).unwrap();
        assert!(linf(&t.weights, &[0.0, 0.0, 1.0]) < 1e-9);
        assert_eq!(t.lsepin, 0.0);
    }

    #[test]
    fn tiebreak_duplicated_pair() {
        let d = fixtures::duplicated_skill_fixture();
        let skills: Vec<&[f64]> = d.skills().iter().map(|s| &**s).collect();
        let center = [0.2, 0.4, 0.4];
        let t = lsepin_tiebreak(&skills, &center, 7).unwrap();
        assert!((t.weights[0] + t.weights[1] - 0.5).abs() <= 1e-6);
        let uniform = lsepin_of(&skills, &center, &[0.25; 4]);
        assert!(t.lsepin >= uniform);
        // grid over λ1 ∈ [0, 0.5], λ3 ∈ [0, 0.5]
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=500 {
            for j in 0..=500 {
                let (a, b) = (i as f64 * 1e-3, j as f64 * 1e-3);
                let l = [a, 0.5 - a, b, 0.5 - b];
                grid_best = grid_best.max(lsepin_of(&skills, &center, &l));
            }
        }
        assert!(t.lsepin >= grid_best - 1e-9, "{} vs grid {}", t.lsepin, grid_best);
        assert!(t.max_min_lsepin <= t.lsepin + 1e-12);
    }

    #[test]
    fn necessary_conditions() {
        let a = fixtures::c6_solution();
        let r = check_necessary_conditions(&[a.clone(), a.clone()], &[0, 0], 1e-9);
        assert!(r.all_passed());
        assert_eq!(r.same_mixture.worst, 0.0);

        let v = fixtures::c6_vertices();
        let d1 = fixtures::duplicated_skill_fixture();
        let d2 = SkillSet::from_raw(&[v[0].clone(), v[1].clone(), v[1].clone(), v[0].clone()], &[0.25; 4]).unwrap();
        assert!(check_necessary_conditions(&[d1, d2], &[0, 0], 1e-9).all_passed());

        let b = SkillSet::from_raw(&[v[0].clone(), v[2].clone()], &[0.5, 0.5]).unwrap();
        let r = check_necessary_conditions(&[a, b], &[0, 0], 1e-9);
        assert!(!r.equal_divergence.passed);
        assert!(r.shared_skill.passed);
    }

    #[test]
    fn third_vertex_gets_no_weight() {
        let v = fixtures::c6_vertices();
        let sol = misl_center(&fixtures::c6_polytope(), CENTER_TOL).unwrap();
        assert!(!sol.active.contains(&2));
        assert!(kl(&v[2], &sol.center) < sol.radius - 0.1);
        // the largest weight v3 can take in any representation of the center
        let w = weight_lp_vertex(&pts(&v), &[0.2, 0.4, 0.4], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(w[2], 0.0);
    }
}
