//! Extreme points of finite point sets on the simplex and convex-hull membership.
//!
//! Hull membership is answered with Wolfe's minimum-norm-point algorithm. It
//! shares no code with the simplex solver in [`crate::lp`], so the two can
//! cross-check each other.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::mdp::{enumerate_policy_occupancies, linf, OccupancyMeasure, Policy, TabularMdp};

pub const DEDUPE_TOL: f64 = 1e-8;
pub const HULL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct Polytope {
    pub vertices: Vec<OccupancyMeasure>,
    pub provenance: Vec<Option<Policy>>,
}

impl Polytope {
    /// Vertices of the feasible state-distribution set of `mdp`, each tagged
    /// with the lowest-index deterministic policy that realizes it.
    pub fn from_mdp(mdp: &TabularMdp, cap: u128) -> Result<Self> {
        let entries = enumerate_policy_occupancies(mdp, cap)?;
        let points: Vec<OccupancyMeasure> = entries.iter().map(|(_, o)| o.clone()).collect();
        let keep = extreme_point_indices(&points, DEDUPE_TOL, HULL_TOL);
        Ok(Self {
            vertices: keep.iter().map(|&i| points[i].clone()).collect(),
            provenance: keep.iter().map(|&i| Some(entries[i].0.clone())).collect(),
        })
    }

    /// Wraps a vertex list verbatim, without extreme-point filtering.
    pub fn from_vertices(vertices: Vec<OccupancyMeasure>) -> Self {
        let provenance = vec![None; vertices.len()];
        Self {
            vertices,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    /// Index of the vertex matching `p` within `tol` in L∞.
    pub fn position(&self, p: &[f64], tol: f64) -> Option<usize> {
        self.vertices.iter().position(|v| v.linf(p) <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullResult {
    pub inside: bool,
    pub coefficients: Option<Vec<f64>>,
    /// Euclidean distance from `point` to the hull.
    pub distance: f64,
}

/// Tests whether `point` is a convex combination of `basis` up to `tol`.
pub fn hull_membership(point: &[f64], basis: &[&[f64]], tol: f64) -> HullResult {
    assert!(!basis.is_empty(), "hull basis must be nonempty");
    let shifted: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| b.iter().zip(point).map(|(x, p)| x - p).collect())
        .collect();
    let (lambda, distance) = min_norm_point(&shifted);
    let inside = distance <= tol;
    HullResult {
        inside,
        coefficients: inside.then_some(lambda),
        distance,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine minimizer of `‖Σ α_i y_i‖` subject to `Σ α_i = 1` over `support`.
fn affine_min_norm(y: &[Vec<f64>], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            m[(a, b)] = dot(&y[i], &y[j]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| m.svd(true, true).solve(&rhs, 1e-14).expect("svd with both factors computed"));
    sol.rows(0, k).iter().copied().collect()
}

/// Wolfe's minimum-norm-point algorithm on `conv(y)`: convex weights and the norm.
fn min_norm_point(y: &[Vec<f64>]) -> (Vec<f64>, f64) {
    const Z1: f64 = 1e-12;
    const Z2: f64 = 1e-10;
    let n = y.len();
    let norms: Vec<f64> = y.iter().map(|v| dot(v, v)).collect();
    let max_norm = norms.iter().fold(0.0f64, |m, &v| m.max(v));
    let start = (0..n).min_by(|&a, &b| norms[a].total_cmp(&norms[b])).unwrap();
    let mut support = vec![start];
    let mut w = vec![1.0];
    let mut x = y[start].clone();
    let point = |support: &[usize], w: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; y[0].len()];
        for (&i, &wi) in support.iter().zip(w) {
            for (xs, ys) in x.iter_mut().zip(&y[i]) {
                *xs += wi * ys;
            }
        }
        x
    };
    for _ in 0..(50 * n + 100) {
        let xx = dot(&x, &x);
        let (j, xy) = (0..n)
            .map(|j| (j, dot(&x, &y[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xy > xx - Z1 * max_norm || support.contains(&j) {
            break;
        }
        support.push(j);
        w.push(0.0);
        loop {
            let alpha = affine_min_norm(y, &support);
            if alpha.iter().all(|&a| a > Z2) {
                w = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (&wi, &ai) in w.iter().zip(&alpha) {
                if ai <= Z2 && wi - ai > 0.0 {
                    theta = theta.min(wi / (wi - ai));
                }
            }
            for (wi, &ai) in w.iter_mut().zip(&alpha) {
                *wi = theta * ai + (1.0 - theta) * *wi;
            }
            let mut k = 0;
            while k < support.len() {
                if w[k] <= Z2 {
                    support.remove(k);
                    w.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            if support.len() == 1 {
                w = vec![1.0];
                break;
            }
        }
        x = point(&support, &w);
    }
    let mut lambda = vec![0.0; n];
    for (&i, &wi) in support.iter().zip(&w) {
        lambda[i] = wi;
    }
    (lambda, dot(&x, &x).sqrt())
}

/// Indices (into `points`) of the extreme points, in input order.
///
/// Points closer than `dedupe_tol` in L∞ to an earlier point are dropped first.
/// Every remaining point that lies in the hull of the others (within `hull_tol`)
/// is then removed one at a time.
pub fn extreme_point_indices(points: &[OccupancyMeasure], dedupe_tol: f64, hull_tol: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !kept.iter().any(|&k| linf(&points[k], p) < dedupe_tol) {
            kept.push(i);
        }
    }
    let mut pos = 0;
    while pos < kept.len() && kept.len() > 1 {
        let others: Vec<&[f64]> = kept
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != pos)
            .map(|(_, &i)| &*points[i])
            .collect();
        if hull_membership(&points[kept[pos]], &others, hull_tol).inside {
            kept.remove(pos);
        } else {
            pos += 1;
        }
    }
    kept
}

pub fn extreme_points(points: &[OccupancyMeasure], dedupe_tol: f64) -> Polytope {
    let keep = extreme_point_indices(points, dedupe_tol, HULL_TOL);
    Polytope::from_vertices(keep.into_iter().map(|i| points[i].clone()).collect())
}

/// Vertex maximizing `⟨p_v, reward⟩`; the lowest index wins ties.
pub fn optimal_vertex(polytope: &Polytope, reward: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in polytope.vertices.iter().enumerate() {
        let value: f64 = v.iter().zip(reward).map(|(p, r)| p * r).sum();
        if value > best.1 {
            best = (i, value);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn om(v: &[f64]) -> OccupancyMeasure {
        OccupancyMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_example_has_three_vertices() {
        let poly = Polytope::from_mdp(&fixtures::c6_mdp(), 1000).unwrap();
        assert_eq!(poly.len(), 3);
        for (v, expect) in poly.vertices.iter().zip(fixtures::c6_vertices()) {
            assert!(v.linf(&expect) < 1e-12);
        }
        assert_eq!(poly.provenance[0], Some(Policy::Deterministic(vec![0, 0, 0])));
    }

    #[test]
    fn duplicates_collapse() {
        let p = om(&[0.3, 0.7]);
        let poly = extreme_points(&[p.clone(), p.clone(), p.clone()], DEDUPE_TOL);
        assert_eq!(poly.vertices, vec![p]);
    }

    #[test]
    fn midpoint_is_removed() {
        let pts = [om(&[1.0, 0.0]), om(&[0.0, 1.0]), om(&[0.5, 0.5])];
        let poly = extreme_points(&pts, DEDUPE_TOL);
        assert_eq!(poly.vertices, pts[..2].to_vec());
    }

    #[test]
    fn idempotent() {
        let mdp = fixtures::random_mdp(3, 3, 3, crate::mdp::OccupancyKind::Discounted);
        let pts: Vec<_> = enumerate_policy_occupancies(&mdp, 100)
            .unwrap()
            .into_iter()
            .map(|(_, o)| o)
            .collect();
        let once = extreme_points(&pts, DEDUPE_TOL);
        let twice = extreme_points(&once.vertices, DEDUPE_TOL);
        assert_eq!(once.vertices, twice.vertices);
    }

    #[test]
    fn membership_of_basis_element() {
        let v = fixtures::c6_vertices();
        let basis: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        let r = hull_membership(&v[1], &basis, HULL_TOL);
        assert!(r.inside);
        let c = r.coefficients.unwrap();
        assert!((c[1] - 1.0).abs() < 1e-9 && c[0].abs() < 1e-9 && c[2].abs() < 1e-9);
    }

    #[test]
    fn membership_of_mean() {
        let v = fixtures::c6_vertices();
        let mean: Vec<f64> = (0..3).map(|s| v.iter().map(|x| x[s]).sum::<f64>() / 3.0).collect();
        let basis: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        let r = hull_membership(&mean, &basis, HULL_TOL);
        assert!(r.inside);
        let c = r.coefficients.unwrap();
        for cj in &c {
            assert!((cj - 1.0 / 3.0).abs() < 1e-9);
        }
        let fit: Vec<f64> = (0..3).map(|s| (0..3).map(|j| c[j] * v[j][s]).sum()).collect();
        assert!(linf(&fit, &mean) < 1e-7);
    }

    #[test]
    fn corner_is_outside() {
        let v = fixtures::c6_vertices();
        let basis: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        let r = hull_membership(&[1.0, 0.0, 0.0], &basis, HULL_TOL);
        assert!(!r.inside);
        assert!(r.coefficients.is_none());
        // nearest mixture has first coordinate 0.4, the rest must absorb the gap
        assert!(r.distance > 0.6);
    }

    #[test]
    fn optimal_vertex_scan() {
        let poly = Polytope::from_vertices(fixtures::c6_vertices().into_iter().map(|v| om(&v)).collect());
        let (i, val) = optimal_vertex(&poly, &[0.0, 1.0, 0.0]);
        assert_eq!(i, 0);
        assert!((val - 0.7).abs() < 1e-12);
        assert_eq!(optimal_vertex(&poly, &[0.0; 3]), (0, 0.0));
        let (i, val) = optimal_vertex(&poly, &[0.0, 0.0, 1.0]);
        assert_eq!(i, 1);
        assert!((val - 0.7).abs() < 1e-12);
    }
}
