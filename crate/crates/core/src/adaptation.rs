//! Adaptation costs of a skill set against a downstream task family, and
//! numerical checks of the bounds relating them to LSEPIN and WSEP.

use serde::Serialize;

use crate::divergences::{kl, skill_mutual_information, SkillSet};
use crate::error::{Error, Result};
use crate::geometry::{misl_center, CENTER_TOL};
use crate::mdp::OccupancyMeasure;
use crate::polytope::{optimal_vertex, Polytope};
use crate::transport::{wasserstein_distance, wsep, CostMatrix};

pub const SKILL_MATCH_TOL: f64 = 1e-6;
pub const TIE_TOL: f64 = 1e-9;
pub const ASSUMPTION_TOL: f64 = 1e-6;
const SATISFIED_TOL: f64 = 1e-7;
const MISL_CHECK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetProvenance {
    PolytopeVertex(usize),
    ExplicitReward(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskFamily {
    pub targets: Vec<OccupancyMeasure>,
    pub provenance: Vec<TargetProvenance>,
}

impl TaskFamily {
    /// Appends the optimal vertex of `reward`.
    pub fn add_reward(&mut self, polytope: &Polytope, reward: &[f64]) {
        let (i, _) = optimal_vertex(polytope, reward);
        self.targets.push(polytope.vertices[i].clone());
        self.provenance.push(TargetProvenance::ExplicitReward(reward.to_vec()));
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Every vertex of `polytope`: each is optimal for some linear reward.
pub fn task_targets(polytope: &Polytope) -> TaskFamily {
    TaskFamily {
        targets: polytope.vertices.clone(),
        provenance: (0..polytope.len()).map(TargetProvenance::PolytopeVertex).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub variant: String,
    pub bound: f64,
    pub measured: f64,
    pub satisfied: bool,
    pub slack: f64,
    pub witness: Option<usize>,
    pub tags: Vec<String>,
}

impl BoundReport {
    fn new(variant: &str, bound: f64, measured: f64, witness: Option<usize>) -> Self {
        let slack = if bound == f64::INFINITY && measured == f64::INFINITY {
            0.0
        } else {
            bound - measured
        };
        Self {
            variant: variant.into(),
            bound,
            measured,
            satisfied: measured <= bound + SATISFIED_TOL,
            slack,
            witness,
            tags: Vec::new(),
        }
    }
}

/// `max_t min_z kl(p(S|z), p_t)` over learned skills, with the worst target.
pub fn wac(ss: &SkillSet, tf: &TaskFamily) -> (f64, usize) {
    let learned = ss.learned();
    let mut worst = (f64::NEG_INFINITY, 0);
    for (t, target) in tf.targets.iter().enumerate() {
        let cost = learned
            .iter()
            .map(|&z| kl(&ss.skills()[z], target))
            .fold(f64::INFINITY, f64::min);
        if cost > worst.0 {
            worst = (cost, t);
        }
    }
    worst
}

/// Polytope vertices not matched (L∞ ≤ 1e-6) by any learned skill.
pub fn undiscovered(ss: &SkillSet, polytope: &Polytope) -> Vec<usize> {
    let learned = ss.learned();
    (0..polytope.len())
        .filter(|&v| {
            !learned
                .iter()
                .any(|&z| ss.skills()[z].linf(&polytope.vertices[v]) <= SKILL_MATCH_TOL)
        })
        .collect()
}

/// Mean over undiscovered vertices of the distance to the nearest learned skill.
pub fn mac(ss: &SkillSet, polytope: &Polytope, c: &CostMatrix) -> Result<f64> {
    let missing = undiscovered(ss, polytope);
    if missing.is_empty() {
        return Err(Error::AllDiscovered);
    }
    let learned = ss.learned();
    let mut total = 0.0;
    for &v in &missing {
        let mut best = f64::INFINITY;
        for &z in &learned {
            best = best.min(wasserstein_distance(&ss.skills()[z], &polytope.vertices[v], c)?);
        }
        total += best;
    }
    Ok(total / missing.len() as f64)
}

/// `(C_z, D_z)` with `C_z = I(S;Z) + kl(p(S), t)` and `D_z = kl(p(S|z), t)`.
pub fn cz_dz(ss: &SkillSet, z: usize, target: &[f64]) -> (f64, f64) {
    let c = skill_mutual_information(ss) + kl(ss.mixture(), target);
    (c, kl(&ss.skills()[z], target))
}

/// How argmax ties decide membership of a target in `R_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// `z` must be the unique argmax.
    Strict,
    /// `z` only needs to attain the max.
    Inclusive,
}

/// Targets `t` for which skill `z` maximizes `kl(p(S|z'), t)` among learned skills.
pub fn r_z(ss: &SkillSet, z: usize, tf: &TaskFamily, rule: TieRule) -> Vec<usize> {
    let learned = ss.learned();
    (0..tf.len())
        .filter(|&t| {
            let target = &tf.targets[t];
            let dz = kl(&ss.skills()[z], target);
            learned.iter().filter(|&&o| o != z).all(|&o| {
                let d = kl(&ss.skills()[o], target);
                match rule {
                    TieRule::Strict => dz > d + TIE_TOL || dz == f64::INFINITY && d < f64::INFINITY,
                    TieRule::Inclusive => dz >= d - TIE_TOL,
                }
            })
        })
        .collect()
}

fn ic_expression(c: f64, d: f64, pz: f64) -> f64 {
    if c == f64::INFINITY {
        return f64::INFINITY;
    }
    (c - pz * d) / (1.0 - pz)
}

/// `max_{t ∈ R_z} (C_z(t) − p(z) D_z(t)) / (1 − p(z))` with its witness, or
/// `None` when `R_z` is empty.
pub fn ic_z_with(ss: &SkillSet, z: usize, tf: &TaskFamily, rule: TieRule) -> Result<Option<(f64, usize)>> {
    let pz = ss.weights()[z];
    if pz >= 1.0 - 1e-12 {
        return Err(Error::DegenerateWeight(z));
    }
    let mut best: Option<(f64, usize)> = None;
    for t in r_z(ss, z, tf, rule) {
        let (c, d) = cz_dz(ss, z, &tf.targets[t]);
        let v = ic_expression(c, d, pz);
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, t));
        }
    }
    Ok(best)
}

pub fn ic_z(ss: &SkillSet, z: usize, tf: &TaskFamily) -> Result<Option<(f64, usize)>> {
    ic_z_with(ss, z, tf, TieRule::Strict)
}

/// `|Σ_z p(z) kl(p(S|z), t) − I(S;Z) − kl(p(S), t)|`.
pub fn mixture_kl_identity_residual(ss: &SkillSet, target: &[f64]) -> f64 {
    let weighted: f64 = ss
        .learned()
        .into_iter()
        .map(|z| ss.weights()[z] * kl(&ss.skills()[z], target))
        .sum();
    (weighted - skill_mutual_information(ss) - kl(ss.mixture(), target)).abs()
}

/// Confirms `ss` attains the minimax-KL radius of the task family's hull.
pub fn verify_misl_solution(ss: &SkillSet, tf: &TaskFamily) -> Result<()> {
    let poly = Polytope::from_vertices(tf.targets.clone());
    let sol = misl_center(&poly, CENTER_TOL)?;
    let info = skill_mutual_information(ss);
    if (info - sol.radius).abs() > MISL_CHECK_TOL {
        return Err(Error::NotMislSolution(format!(
            "I(S;Z) = {info:.6} but the minimax radius is {:.6}",
            sol.radius
        )));
    }
    for z in ss.learned() {
        let d = kl(&ss.skills()[z], ss.mixture());
        if (d - sol.radius).abs() > MISL_CHECK_TOL {
            return Err(Error::NotMislSolution(format!(
                "skill {z} is at divergence {d:.6} from the mixture, radius {:.6}",
                sol.radius
            )));
        }
    }
    Ok(())
}

/// WAC against `max_z IC_z`, with the given `R_z` tie rule.
pub fn wac_bound_corollary_with(ss: &SkillSet, tf: &TaskFamily, rule: TieRule) -> Result<BoundReport> {
    verify_misl_solution(ss, tf)?;
    let (measured, worst) = wac(ss, tf);
    let mut bound = f64::NEG_INFINITY;
    let mut witness = None;
    let mut empty = 0;
    for z in ss.learned() {
        if ss.weights()[z] >= 1.0 - 1e-12 {
            continue;
        }
        match ic_z_with(ss, z, tf, rule)? {
            Some((v, _)) if v > bound => {
                bound = v;
                witness = Some(z);
            }
            Some(_) => {}
            None => empty += 1,
        }
    }
    let variant = match rule {
        TieRule::Inclusive => "corollary",
        TieRule::Strict => "corollary_strict_ties",
    };
    let degenerate = witness.is_none();
    if degenerate {
        // a single learned skill: every target's cost is that skill's divergence
        bound = measured;
    }
    let mut report = BoundReport::new(variant, bound, measured, witness);
    report.tags.push(format!("worst_target={worst}"));
    if empty > 0 {
        report.tags.push(format!("empty_families={empty}"));
    }
    if degenerate {
        report.tags.push("degenerate".into());
    }
    Ok(report)
}

/// Corollary bound with ties admitted to `R_z`.
pub fn wac_bound_corollary(ss: &SkillSet, tf: &TaskFamily) -> Result<BoundReport> {
    wac_bound_corollary_with(ss, tf, TieRule::Inclusive)
}

/// The three forms of the MAC upper bound, each against the measured MAC.
pub fn mac_bounds(ss: &SkillSet, polytope: &Polytope, c: &CostMatrix) -> Result<Vec<BoundReport>> {
    let measured = mac(ss, polytope, c)?;
    let missing = undiscovered(ss, polytope).len() as f64;
    let learned = ss.learned();
    let k = learned.len() as f64;
    let separation = wsep(ss, c)?;

    let mut sum_l = 0.0;
    for &z in &learned {
        for v in &polytope.vertices {
            sum_l += wasserstein_distance(&ss.skills()[z], v, c)?;
        }
    }
    let mut l_max = f64::NEG_INFINITY;
    for w in &polytope.vertices {
        let mut row = 0.0;
        for v in &polytope.vertices {
            row += wasserstein_distance(v, w, c)?;
        }
        l_max = l_max.max(row);
    }
    let denom = missing * k;
    Ok(vec![
        BoundReport::new("stated_tight", (sum_l - (k - 1.0) * separation) / denom, measured, None),
        BoundReport::new("stated_relaxed", (k * l_max - (k - 1.0) * separation) / denom, measured, None),
        BoundReport::new("proof_derived", (sum_l - separation) / denom, measured, None),
    ])
}

/// WAC against `max_z (C_m − p(z) D_m)/(1 − p(z))` with `C_m = I(S;Z) + max_t kl(p(S), t)`
/// and `D_m` the smallest `kl(p(S|z), t)` over `t ∈ R_z`.
pub fn lemma_b1_bound(ss: &SkillSet, tf: &TaskFamily) -> BoundReport {
    let (measured, _) = wac(ss, tf);
    let centre_div: Vec<f64> = tf.targets.iter().map(|t| kl(ss.mixture(), t)).collect();
    let c_hi = centre_div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_lo = centre_div.iter().copied().fold(f64::INFINITY, f64::min);

    let learned = ss.learned();
    let mut d_values = Vec::new();
    for &z in &learned {
        for t in r_z(ss, z, tf, TieRule::Inclusive) {
            d_values.push((z, kl(&ss.skills()[z], &tf.targets[t])));
        }
    }
    // D_m per skill is min over R_z; the lemma assumes it is the same for all z
    let per_skill: Vec<f64> = learned
        .iter()
        .filter_map(|&z| {
            d_values
                .iter()
                .filter(|(w, _)| *w == z)
                .map(|(_, d)| *d)
                .reduce(f64::min)
        })
        .collect();
    let d_m = per_skill.iter().copied().fold(f64::INFINITY, f64::min);
    let d_spread = per_skill.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d_m;

    let c_m = skill_mutual_information(ss) + c_hi;
    let mut bound = f64::NEG_INFINITY;
    let mut witness = None;
    for &z in &learned {
        let pz = ss.weights()[z];
        if pz >= 1.0 - 1e-12 || !d_values.iter().any(|(w, _)| *w == z) {
            continue;
        }
        let v = ic_expression(c_m, d_m, pz);
        if v > bound {
            bound = v;
            witness = Some(z);
        }
    }
    let degenerate = witness.is_none();
    if degenerate {
        bound = measured;
    }
    let mut report = BoundReport::new("lemma_b1", bound, measured, witness);
    if c_hi - c_lo > ASSUMPTION_TOL || d_spread > ASSUMPTION_TOL {
        report.tags.push("assumptions_unmet".into());
    }
    if degenerate {
        report.tags.push("degenerate".into());
    }
    report
}
