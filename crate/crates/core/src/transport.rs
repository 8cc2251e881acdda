//! Exact discrete optimal transport between state distributions.

use serde::{Deserialize, Serialize};

use crate::divergences::SkillSet;
use crate::error::{Error, Result};
use crate::lp::LinearProgram;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix {
    costs: Vec<Vec<f64>>,
    symmetric: bool,
    metric: bool,
    unit: bool,
}

/// The on-disk cost document: the string `"unit"` or an explicit matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSpec {
    Named(String),
    Explicit {
        costs: Vec<Vec<f64>>,
        #[serde(default)]
        symmetric: bool,
        #[serde(default)]
        metric: bool,
    },
}

impl CostSpec {
    pub fn resolve(self, num_states: usize) -> Result<CostMatrix> {
        match self {
            CostSpec::Named(name) if name == "unit" => Ok(CostMatrix::unit(num_states)),
            CostSpec::Named(name) => Err(Error::MalformedSpec(format!("unknown cost \"{name}\""))),
            CostSpec::Explicit {
                costs,
                symmetric,
                metric,
            } => {
                let c = CostMatrix::new(costs, symmetric, metric)?;
                if c.len() != num_states {
                    return Err(Error::DimensionMismatch {
                        expected: num_states,
                        got: c.len(),
                    });
                }
                Ok(c)
            }
        }
    }
}

impl CostMatrix {
    /// Validates the matrix and, when flagged, symmetry and the triangle inequality.
    pub fn new(costs: Vec<Vec<f64>>, symmetric: bool, metric: bool) -> Result<Self> {
        let n = costs.len();
        if n == 0 || costs.iter().any(|r| r.len() != n) {
            return Err(Error::MalformedSpec("cost matrix must be square and nonempty".into()));
        }
        for (i, row) in costs.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::MalformedSpec(format!("cost diagonal entry {i} is {}", row[i])));
            }
            if row.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::MalformedSpec(format!("cost row {i} has a negative entry")));
            }
        }
        if symmetric || metric {
            for i in 0..n {
                for j in 0..i {
                    if (costs[i][j] - costs[j][i]).abs() > 1e-12 {
                        return Err(Error::MalformedSpec(format!("cost matrix not symmetric at ({i},{j})")));
                    }
                }
            }
        }
        if metric {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if costs[i][k] > costs[i][j] + costs[j][k] + 1e-9 {
                            return Err(Error::MalformedSpec(format!(
                                "triangle inequality fails for ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        let unit = (0..n).all(|i| (0..n).all(|j| costs[i][j] == if i == j { 0.0 } else { 1.0 }));
        Ok(Self {
            costs,
            symmetric: symmetric || metric,
            metric,
            unit,
        })
    }

    /// Cost 1 between every pair of distinct states.
    pub fn unit(n: usize) -> Self {
        let costs = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self {
            costs,
            symmetric: true,
            metric: true,
            unit: true,
        }
    }

    /// Euclidean distance between one-hot embeddings: `√2` off the diagonal.
    pub fn euclidean_one_hot(n: usize) -> Self {
        let mut c = Self::unit(n);
        c.costs.iter_mut().flatten().for_each(|v| *v *= 2f64.sqrt());
        c.unit = false;
        c
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_metric(&self) -> bool {
        self.metric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub plan: Vec<Vec<f64>>,
    pub cost: f64,
}

/// Optimal transport plan from `p` to `q` under `c`, by the transportation LP.
pub fn wasserstein(p: &[f64], q: &[f64], c: &CostMatrix) -> Result<TransportPlan> {
    let n = p.len();
    if q.len() != n || c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if q.len() != n { q.len() } else { c.len() },
        });
    }
    // only states carrying mass enter the program
    let src: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();
    let dst: Vec<usize> = (0..n).filter(|&j| q[j] > 0.0).collect();
    let m = dst.len();
    let mut lp = LinearProgram::new(src.len() * m);
    for (a, &i) in src.iter().enumerate() {
        for (b, &j) in dst.iter().enumerate() {
            lp.set_objective(a * m + b, c.get(i, j));
        }
    }
    for (a, &i) in src.iter().enumerate() {
        let row: Vec<(usize, f64)> = (0..m).map(|b| (a * m + b, 1.0)).collect();
        lp.add_row(&row, p[i]);
    }
    for (b, &j) in dst.iter().enumerate() {
        let col: Vec<(usize, f64)> = (0..src.len()).map(|a| (a * m + b, 1.0)).collect();
        lp.add_row(&col, q[j]);
    }
    let sol = lp.solve()?;
    let mut plan = vec![vec![0.0; n]; n];
    for (a, &i) in src.iter().enumerate() {
        for (b, &j) in dst.iter().enumerate() {
            plan[i][j] = sol.x[a * m + b];
        }
    }
    Ok(TransportPlan {
        plan,
        cost: sol.objective.max(0.0),
    })
}

/// Transport cost only. Unit costs take the total-variation closed form.
pub fn wasserstein_distance(p: &[f64], q: &[f64], c: &CostMatrix) -> Result<f64> {
    if c.is_unit() && p.len() == c.len() && q.len() == c.len() {
        return Ok(total_variation(p, q));
    }
    Ok(wasserstein(p, q, c)?.cost)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pairwise distance matrix between the given distributions.
pub fn pairwise(points: &[&[f64]], c: &CostMatrix) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[i][j] = wasserstein_distance(points[i], points[j], c)?;
            }
        }
    }
    Ok(out)
}

/// Σ over ordered pairs `i ≠ j` of learned skills of `W(p(S|z_i), p(S|z_j))`.
///
/// Each unordered pair is counted twice.
pub fn wsep(ss: &SkillSet, c: &CostMatrix) -> Result<f64> {
    let learned = ss.learned();
    let mut total = 0.0;
    for &i in &learned {
        for &j in &learned {
            if i != j {
                total += wasserstein_distance(&ss.skills()[i], &ss.skills()[j], c)?;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pairwise_values_on_worked_example() {
        let v = fixtures::c6_vertices();
        let c = CostMatrix::unit(3);
        let w12 = wasserstein(&v[0], &v[1], &c).unwrap();
        assert!((w12.cost - 0.6).abs() < 1e-12);
        assert!((wasserstein(&v[0], &v[2], &c).unwrap().cost - 0.4).abs() < 1e-12);
        assert!((wasserstein(&v[1], &v[2], &c).unwrap().cost - 0.4).abs() < 1e-12);
        for i in 0..3 {
            let row: f64 = w12.plan[i].iter().sum();
            let col: f64 = (0..3).map(|k| w12.plan[k][i]).sum();
            assert!((row - v[0][i]).abs() < 1e-8 && (col - v[1][i]).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_distributions_stay_put() {
        let p = [0.2, 0.5, 0.3];
        let t = wasserstein(&p, &p, &CostMatrix::unit(3)).unwrap();
        assert_eq!(t.cost, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { p[i] } else { 0.0 };
                assert!((t.plan[i][j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wsep_values() {
        let v = fixtures::c6_vertices();
        let c = CostMatrix::unit(3);
        let all = SkillSet::from_raw(&v, &[1.0 / 3.0; 3]).unwrap();
        assert!((wsep(&all, &c).unwrap() - 2.8).abs() < 1e-12);
        let dup = SkillSet::from_raw(&[v[0].clone(), v[0].clone(), v[1].clone()], &[1.0 / 3.0; 3]).unwrap();
        assert!((wsep(&dup, &c).unwrap() - 2.4).abs() < 1e-12);
        let one = SkillSet::from_raw(&v[..1], &[1.0]).unwrap();
        assert_eq!(wsep(&one, &c).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_costs() {
        assert!(CostMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.5]], false, false).is_err());
        assert!(CostMatrix::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]], false, false).is_err());
        let no_triangle = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(CostMatrix::new(no_triangle.clone(), true, true).is_err());
        assert!(CostMatrix::new(no_triangle, true, false).is_ok());
    }

    #[test]
    fn cost_spec_parsing() {
        let unit: CostSpec = serde_json::from_str("\"unit\"").unwrap();
        assert!(unit.resolve(4).unwrap().is_unit());
        let explicit: CostSpec =
            serde_json::from_str(r#"{"costs":[[0,2],[2,0]],"symmetric":true,"metric":true}"#).unwrap();
        let c = explicit.resolve(2).unwrap();
        assert_eq!(c.get(0, 1), 2.0);
        assert!(!c.is_unit());
    }

    #[test]
    fn asymmetric_costs_are_direction_dependent() {
        let c = CostMatrix::new(vec![vec![0.0, 1.0], vec![3.0, 0.0]], false, false).unwrap();
        let forward = wasserstein(&[1.0, 0.0], &[0.0, 1.0], &c).unwrap().cost;
        let back = wasserstein(&[0.0, 1.0], &[1.0, 0.0], &c).unwrap().cost;
        assert_eq!((forward, back), (1.0, 3.0));
    }
}
