//! Tabular MDPs, policies and their state occupancy measures.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;
const STATIONARY_RESIDUAL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;
const PLAIN_POWER_BUDGET: usize = 20_000;
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// A point on the probability simplex over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OccupancyMeasure(Vec<f64>);

impl OccupancyMeasure {
    /// Validates a probability vector. Entries down to `-1e-9` are clamped to
    /// zero; the total must be within `1e-9` of one.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (s, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -1e-9 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {s} is {p}"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Like [`OccupancyMeasure::new`] but rescales the clamped vector to sum to one.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 && *p >= -1e-9 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if sum > 0.0 && (sum - 1.0).abs() <= 1e-6 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Self::new(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, state: usize) -> Self {
        let mut v = vec![0.0; n];
        v[state] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn linf(&self, other: &[f64]) -> f64 {
        linf(&self.0, other)
    }
}

impl Deref for OccupancyMeasure {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for OccupancyMeasure {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<OccupancyMeasure> for Vec<f64> {
    fn from(o: OccupancyMeasure) -> Self {
        o.0
    }
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OccupancyKind {
    /// `(1−γ) Σ_t γ^t P(s_t = s)`
    #[default]
    Discounted,
    /// Limiting state distribution of the policy-induced chain started at `p0`.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "actions")]
pub enum Policy {
    Deterministic(Vec<usize>),
    Stochastic(Vec<Vec<f64>>),
}

impl Policy {
    /// The deterministic policy whose digits (base `num_actions`, state 0
    /// least significant) spell `index`.
    pub fn from_index(index: u128, num_states: usize, num_actions: usize) -> Self {
        let mut rest = index;
        let base = num_actions as u128;
        let actions = (0..num_states)
            .map(|_| {
                let a = (rest % base) as usize;
                rest /= base;
                a
            })
            .collect();
        Policy::Deterministic(actions)
    }

    fn prob(&self, state: usize, action: usize) -> f64 {
        match self {
            Policy::Deterministic(a) => {
                if a[state] == action {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::Stochastic(m) => m[state][action],
        }
    }

    fn validate(&self, num_states: usize, num_actions: usize) -> Result<()> {
        match self {
            Policy::Deterministic(a) => {
                if a.len() != num_states {
                    return Err(Error::DimensionMismatch {
                        expected: num_states,
                        got: a.len(),
                    });
                }
                if let Some(&bad) = a.iter().find(|&&x| x >= num_actions) {
                    return Err(Error::InvalidDistribution(format!(
                        "action index {bad} out of range"
                    )));
                }
            }
            Policy::Stochastic(m) => {
                if m.len() != num_states {
                    return Err(Error::DimensionMismatch {
                        expected: num_states,
                        got: m.len(),
                    });
                }
                for (s, row) in m.iter().enumerate() {
                    if row.len() != num_actions {
                        return Err(Error::DimensionMismatch {
                            expected: num_actions,
                            got: row.len(),
                        });
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                        return Err(Error::StochasticityViolation {
                            what: format!("policy row {s}"),
                            sum,
                            tol: 1e-9,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The on-disk MDP document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    /// `[action][state][next_state]`
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
    pub gamma: f64,
    #[serde(default)]
    pub occupancy: OccupancyKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<Vec<Vec<f64>>>,
    initial: Vec<f64>,
    gamma: f64,
    occupancy_kind: OccupancyKind,
}

fn check_distribution(what: String, row: &mut [f64]) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::StochasticityViolation {
            what: format!("{what} has a negative or non-finite entry"),
            sum: row.iter().sum(),
            tol: ROW_SUM_TOL,
        });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::StochasticityViolation {
            what,
            sum,
            tol: ROW_SUM_TOL,
        });
    }
    if (sum - 1.0).abs() > 1e-12 {
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

impl TabularMdp {
    pub fn new(spec: MdpSpec) -> Result<Self> {
        let MdpSpec {
            num_states: ns,
            num_actions: na,
            mut transitions,
            mut initial,
            gamma,
            occupancy,
        } = spec;
        if ns == 0 || na == 0 {
            return Err(Error::MalformedSpec(
                "num_states and num_actions must be positive".into(),
            ));
        }
        if transitions.len() != na {
            return Err(Error::MalformedSpec(format!(
                "expected {na} transition matrices, found {}",
                transitions.len()
            )));
        }
        for (a, m) in transitions.iter_mut().enumerate() {
            if m.len() != ns || m.iter().any(|r| r.len() != ns) {
                return Err(Error::MalformedSpec(format!(
                    "transition matrix for action {a} is not {ns}x{ns}"
                )));
            }
            for (s, row) in m.iter_mut().enumerate() {
                check_distribution(format!("transitions[{a}][{s}]"), row)?;
            }
        }
        if initial.len() != ns {
            return Err(Error::MalformedSpec(format!(
                "initial distribution has length {}, expected {ns}",
                initial.len()
            )));
        }
        check_distribution("initial".into(), &mut initial)?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::MalformedSpec(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        Ok(Self {
            num_states: ns,
            num_actions: na,
            transitions,
            initial,
            gamma,
            occupancy_kind: occupancy,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self, action: usize, state: usize) -> &[f64] {
        &self.transitions[action][state]
    }

    pub fn occupancy_kind(&self) -> OccupancyKind {
        self.occupancy_kind
    }

    pub fn with_occupancy_kind(mut self, kind: OccupancyKind) -> Self {
        self.occupancy_kind = kind;
        self
    }

    pub fn to_spec(&self) -> MdpSpec {
        MdpSpec {
            num_states: self.num_states,
            num_actions: self.num_actions,
            transitions: self.transitions.clone(),
            initial: self.initial.clone(),
            gamma: self.gamma,
            occupancy: self.occupancy_kind,
        }
    }

    /// Row-stochastic state-to-state matrix induced by `policy`.
    fn induced_chain(&self, policy: &Policy) -> Vec<Vec<f64>> {
        let n = self.num_states;
        let mut chain = vec![vec![0.0; n]; n];
        for (s, row) in chain.iter_mut().enumerate() {
            for a in 0..self.num_actions {
                let w = policy.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                for (dst, &p) in row.iter_mut().zip(&self.transitions[a][s]) {
                    *dst += w * p;
                }
            }
        }
        chain
    }
}

/// Parses and validates an MDP JSON document.
pub fn load_mdp(json: &str) -> Result<TabularMdp> {
    let spec: MdpSpec =
        serde_json::from_str(json).map_err(|e| Error::MalformedSpec(e.to_string()))?;
    TabularMdp::new(spec)
}

/// State occupancy measure of `policy` under the MDP's occupancy mode.
pub fn occupancy(mdp: &TabularMdp, policy: &Policy) -> Result<OccupancyMeasure> {
    policy.validate(mdp.num_states, mdp.num_actions)?;
    let chain = mdp.induced_chain(policy);
    let probs = match mdp.occupancy_kind {
        OccupancyKind::Discounted => discounted_occupancy(&chain, &mdp.initial, mdp.gamma)?,
        OccupancyKind::Stationary => stationary_distribution(&chain, &mdp.initial)?,
    };
    OccupancyMeasure::normalized(probs)
}

fn discounted_occupancy(chain: &[Vec<f64>], initial: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let n = initial.len();
    // (I − γ Mᵀ) p = (1 − γ) p0
    let system = DMatrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye - gamma * chain[j][i]
    });
    let rhs = DVector::from_iterator(n, initial.iter().map(|p| (1.0 - gamma) * p));
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Infeasible("singular flow system".into()))?;
    Ok(sol.iter().copied().collect())
}

fn step(chain: &[Vec<f64>], p: &[f64], lazy: bool) -> Vec<f64> {
    let n = p.len();
    let mut next = vec![0.0; n];
    for (s, &mass) in p.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (dst, &t) in next.iter_mut().zip(&chain[s]) {
            *dst += mass * t;
        }
    }
    if lazy {
        for (x, &old) in next.iter_mut().zip(p) {
            *x = 0.5 * (*x + old);
        }
    }
    next
}

/// Power iteration from `initial`. Chains that oscillate are handed to the lazy
/// chain `(I + M)/2`, whose limit from `initial` is the Cesàro limit of `M`.
fn stationary_distribution(chain: &[Vec<f64>], initial: &[f64]) -> Result<Vec<f64>> {
    let mut p = initial.to_vec();
    let mut residual = f64::INFINITY;
    for it in 0..STATIONARY_MAX_ITERS {
        let lazy = it >= PLAIN_POWER_BUDGET;
        if it == PLAIN_POWER_BUDGET {
            p = initial.to_vec();
        }
        let next = step(chain, &p, lazy);
        residual = linf(&next, &p);
        p = next;
        if residual <= STATIONARY_RESIDUAL {
            return Ok(p);
        }
    }
    Err(Error::NonConvergent {
        what: "stationary power iteration".into(),
        iterations: STATIONARY_MAX_ITERS,
        residual,
    })
}

/// Occupancy of every deterministic policy, in policy-index order.
pub fn enumerate_policy_occupancies(
    mdp: &TabularMdp,
    cap: u128,
) -> Result<Vec<(Policy, OccupancyMeasure)>> {
    let count = (mdp.num_actions as u128)
        .checked_pow(mdp.num_states as u32)
        .unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::TooLarge {
            what: "deterministic policy count".into(),
            size: count,
            cap,
        });
    }
    (0..count)
        .map(|i| {
            let policy = Policy::from_index(i, mdp.num_states, mdp.num_actions);
            let occ = occupancy(mdp, &policy)?;
            Ok((policy, occ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn self_loop() -> TabularMdp {
        load_mdp(
            r#"{"num_states":1,"num_actions":1,"transitions":[[[1.0]]],
                "initial":[1.0],"gamma":0.9,"occupancy":"discounted"}"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_worked_example() {
        let mdp = fixtures::c6_mdp();
        assert_eq!(mdp.num_states(), 3);
        assert_eq!(mdp.num_actions(), 3);
        assert_eq!(mdp.occupancy_kind(), OccupancyKind::Stationary);
        assert_eq!(mdp.transition(0, 2), &[0.2, 0.7, 0.1]);
    }

    #[test]
    fn loads_self_loop() {
        let mdp = self_loop();
        assert_eq!(mdp.transition(0, 0), &[1.0]);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = load_mdp(
            r#"{"num_states":2,"num_actions":1,"transitions":[[[0.5,0.4],[0.5,0.5]]],
                "initial":[1.0,0.0],"gamma":0.5}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::StochasticityViolation { .. }), "{err}");
    }

    #[test]
    fn rejects_missing_field() {
        let err = load_mdp(r#"{"num_states":1,"num_actions":1,"initial":[1.0],"gamma":0.5}"#)
            .unwrap_err();
        assert!(matches!(err, Error::MalformedSpec(_)));
    }

    #[test]
    fn rejects_gamma_one() {
        let err = load_mdp(
            r#"{"num_states":1,"num_actions":1,"transitions":[[[1.0]]],"initial":[1.0],"gamma":1.0}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MalformedSpec(_)));
    }

    #[test]
    fn stationary_always_a1() {
        let mdp = fixtures::c6_mdp();
        let occ = occupancy(&mdp, &Policy::Deterministic(vec![0, 0, 0])).unwrap();
        assert!(occ.linf(&[0.2, 0.7, 0.1]) < 1e-12);
    }

    #[test]
    fn gamma_zero_returns_initial() {
        let mut spec = fixtures::c6_mdp().to_spec();
        spec.gamma = 0.0;
        spec.occupancy = OccupancyKind::Discounted;
        spec.initial = vec![0.5, 0.25, 0.25];
        let mdp = TabularMdp::new(spec).unwrap();
        let occ = occupancy(&mdp, &Policy::Deterministic(vec![1, 2, 0])).unwrap();
        assert!(occ.linf(&[0.5, 0.25, 0.25]) < 1e-15);
    }

    #[test]
    fn discounted_always_a3_is_near_v3() {
        let mut spec = fixtures::c6_mdp().to_spec();
        spec.gamma = 0.99;
        spec.occupancy = OccupancyKind::Discounted;
        spec.initial = vec![1.0 / 3.0; 3];
        let mdp = TabularMdp::new(spec).unwrap();
        let occ = occupancy(&mdp, &Policy::Deterministic(vec![2, 2, 2])).unwrap();
        // direct solve: p = (1−γ) p0 + γ v3, since every row of the chain is v3
        let expected: Vec<f64> = [0.4, 0.3, 0.3]
            .iter()
            .map(|v| 0.01 / 3.0 + 0.99 * v)
            .collect();
        assert!(occ.linf(&expected) < 1e-12);
        assert!(occ.linf(&[0.4, 0.3, 0.3]) < 5e-3);
    }

    #[test]
    fn periodic_chain_uses_cesaro_limit() {
        let mdp = load_mdp(
            r#"{"num_states":2,"num_actions":1,"transitions":[[[0.0,1.0],[1.0,0.0]]],
                "initial":[1.0,0.0],"gamma":0.5,"occupancy":"stationary"}"#,
        )
        .unwrap();
        let occ = occupancy(&mdp, &Policy::Deterministic(vec![0, 0])).unwrap();
        assert!(occ.linf(&[0.5, 0.5]) < 1e-10);
    }

    #[test]
    fn enumeration_counts() {
        let mdp = fixtures::c6_mdp();
        let all = enumerate_policy_occupancies(&mdp, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all.len(), 27);
        // state-dependent action choices land strictly inside the triangle
        let mut distinct: Vec<&OccupancyMeasure> = Vec::new();
        for (_, o) in &all {
            if !distinct.iter().any(|d| d.linf(o) < 1e-8) {
                distinct.push(o);
            }
        }
        assert_eq!(distinct.len(), 24);
        let v = fixtures::c6_vertices();
        for a in 0..3 {
            assert!(all[a * 13].1.linf(&v[a]) < 1e-12);
        }

        let one = enumerate_policy_occupancies(&self_loop(), 10).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(&*one[0].1, &[1.0]);

        let mdp23 = fixtures::random_mdp(7, 2, 3, OccupancyKind::Discounted);
        assert_eq!(enumerate_policy_occupancies(&mdp23, 100).unwrap().len(), 9);
    }

    #[test]
    fn enumeration_cap() {
        let mdp = fixtures::c6_mdp();
        assert!(matches!(
            enumerate_policy_occupancies(&mdp, 26),
            Err(Error::TooLarge { size: 27, .. })
        ));
    }

    #[test]
    fn flow_conservation_on_random_mdps() {
        for seed in 0..20 {
            let mdp = fixtures::random_mdp(seed, 4, 3, OccupancyKind::Discounted);
            let policy = Policy::from_index(seed as u128 % 81, 4, 3);
            let p = occupancy(&mdp, &policy).unwrap();
            let chain = mdp.induced_chain(&policy);
            for s in 0..4 {
                let inflow: f64 = (0..4).map(|u| chain[u][s] * p[u]).sum();
                let rhs = (1.0 - mdp.gamma()) * mdp.initial()[s] + mdp.gamma() * inflow;
                assert!((p[s] - rhs).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn action_marginal_determines_state_distribution() {
        let mdp = fixtures::c6_mdp();
        let v = fixtures::c6_vertices();
        for q in [[0.2, 0.5, 0.3], [1.0 / 3.0; 3], [0.05, 0.05, 0.9]] {
            let policy = Policy::Stochastic(vec![q.to_vec(); 3]);
            let occ = occupancy(&mdp, &policy).unwrap();
            for s in 0..3 {
                let expect = q[0] * v[0][s] + q[1] * v[1][s] + q[2] * v[2][s];
                assert!((occ[s] - expect).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn occupancy_rejects_bad_policy() {
        let mdp = fixtures::c6_mdp();
        assert!(occupancy(&mdp, &Policy::Deterministic(vec![0, 3, 0])).is_err());
        assert!(occupancy(&mdp, &Policy::Deterministic(vec![0, 0])).is_err());
    }

    #[test]
    fn clamps_tiny_negatives() {
        let o = OccupancyMeasure::new(vec![-1e-12, 1.0]).unwrap();
        assert_eq!(&*o, &[0.0, 1.0]);
        assert!(OccupancyMeasure::new(vec![-1e-6, 1.0 + 1e-6]).is_err());
    }
}
