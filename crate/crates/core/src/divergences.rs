//! KL divergence, entropy and the mutual-information quantities of a skill set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::OccupancyMeasure;

/// Skills with weight at or below this are treated as not learned.
pub const WEIGHT_EPS: f64 = 1e-9;

/// `Σ p ln(p/q)` in nats, `+∞` when `q` misses part of the support of `p`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&ps, &qs) in p.iter().zip(q) {
        if ps <= 0.0 {
            continue;
        }
        if qs <= 0.0 {
            return f64::INFINITY;
        }
        total += ps * (ps / qs).ln();
    }
    total.max(0.0)
}

/// `kl` after mixing both arguments with the uniform distribution at weight `eps`.
pub fn kl_smoothed(p: &[f64], q: &[f64], eps: f64) -> f64 {
    kl(&smooth(p, eps), &smooth(q, eps))
}

pub fn smooth(p: &[f64], eps: f64) -> Vec<f64> {
    let u = 1.0 / p.len() as f64;
    p.iter().map(|x| (1.0 - eps) * x + eps * u).collect()
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkillSetDoc", into = "SkillSetDoc")]
pub struct SkillSet {
    skills: Vec<OccupancyMeasure>,
    weights: Vec<f64>,
    mixture: OccupancyMeasure,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkillSetDoc {
    skills: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<SkillSetDoc> for SkillSet {
    type Error = Error;
    fn try_from(doc: SkillSetDoc) -> Result<Self> {
        let skills = doc
            .skills
            .into_iter()
            .map(OccupancyMeasure::new)
            .collect::<Result<Vec<_>>>()?;
        SkillSet::new(skills, doc.weights)
    }
}

impl From<SkillSet> for SkillSetDoc {
    fn from(ss: SkillSet) -> Self {
        SkillSetDoc {
            skills: ss.skills.into_iter().map(Into::into).collect(),
            weights: ss.weights,
        }
    }
}

impl SkillSet {
    pub fn new(skills: Vec<OccupancyMeasure>, weights: Vec<f64>) -> Result<Self> {
        if skills.is_empty() {
            return Err(Error::InvalidDistribution("skill set is empty".into()));
        }
        if weights.len() != skills.len() {
            return Err(Error::DimensionMismatch {
                expected: skills.len(),
                got: weights.len(),
            });
        }
        let dim = skills[0].len();
        if let Some(bad) = skills.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("negative skill weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("skill weights sum to {total}")));
        }
        if !weights.iter().any(|&w| w > WEIGHT_EPS) {
            return Err(Error::InvalidDistribution("no skill has positive weight".into()));
        }
        let mut mix = vec![0.0; dim];
        for (s, &w) in skills.iter().zip(&weights) {
            for (m, &p) in mix.iter_mut().zip(s.iter()) {
                *m += w * p;
            }
        }
        let mixture = OccupancyMeasure::normalized(mix)?;
        Ok(Self {
            skills,
            weights,
            mixture,
        })
    }

    pub fn uniform(skills: Vec<OccupancyMeasure>) -> Result<Self> {
        let n = skills.len();
        Self::new(skills, vec![1.0 / n as f64; n])
    }

    /// Builds from raw vectors; convenient for fixtures.
    pub fn from_raw(skills: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        let skills = skills
            .iter()
            .map(|s| OccupancyMeasure::new(s.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(skills, weights.to_vec())
    }

    pub fn skills(&self) -> &[OccupancyMeasure] {
        &self.skills
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mixture(&self) -> &OccupancyMeasure {
        &self.mixture
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.mixture.len()
    }

    /// Indices of skills with weight above [`WEIGHT_EPS`].
    pub fn learned(&self) -> Vec<usize> {
        (0..self.len()).filter(|&z| self.weights[z] > WEIGHT_EPS).collect()
    }
}

/// `I(S;Z) = Σ_z p(z) kl(p(S|z), p(S))`.
pub fn skill_mutual_information(ss: &SkillSet) -> f64 {
    ss.learned()
        .into_iter()
        .map(|z| ss.weights[z] * kl(&ss.skills[z], &ss.mixture))
        .sum()
}

/// `I(S;1_z)` for a skill `skill` with weight `pz` inside the mixture `mixture`.
pub fn indicator_mi_at(skill: &[f64], mixture: &[f64], pz: f64, index: usize) -> Result<f64> {
    if pz >= 1.0 - 1e-12 {
        return Ok(0.0);
    }
    let complement = complement(skill, mixture, pz, index)?;
    Ok(pz * kl(skill, mixture) + (1.0 - pz) * kl(&complement, mixture))
}

/// `p(S|Z≠z) = (p(S) − p(z) p(S|z)) / (1 − p(z))`.
pub fn complement(skill: &[f64], mixture: &[f64], pz: f64, index: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(skill.len());
    for (&m, &s) in mixture.iter().zip(skill) {
        let v = (m - pz * s) / (1.0 - pz);
        if v < -1e-9 {
            return Err(Error::DegenerateComplement {
                skill: index,
                value: v,
            });
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}

pub fn indicator_mi(ss: &SkillSet, z: usize) -> Result<f64> {
    indicator_mi_at(&ss.skills[z], &ss.mixture, ss.weights[z], z)
}

/// Minimum of `I(S;1_z)` over learned skills, with the lowest index on ties.
pub fn lsepin(ss: &SkillSet) -> Result<(f64, usize)> {
    let mut best = (f64::INFINITY, usize::MAX);
    for z in ss.learned() {
        let v = indicator_mi(ss, z)?;
        if v < best.0 {
            best = (v, z);
        }
    }
    Ok(best)
}

/// Ordered double sum of pairwise KL divergences between learned skills.
pub fn klsep(ss: &SkillSet) -> f64 {
    let learned = ss.learned();
    let mut total = 0.0;
    for &i in &learned {
        for &j in &learned {
            if i != j {
                total += kl(&ss.skills[i], &ss.skills[j]);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn c6(skills: &[usize], weights: &[f64]) -> SkillSet {
        let v = fixtures::c6_vertices();
        let sk: Vec<Vec<f64>> = skills.iter().map(|&i| v[i].clone()).collect();
        SkillSet::from_raw(&sk, weights).unwrap()
    }

    #[test]
    fn kl_values() {
        let v = fixtures::c6_vertices();
        assert!((kl(&v[0], &[0.2, 0.4, 0.4]) - 0.253102).abs() < 1e-5);
        assert_eq!(kl(&v[0], &v[0]), 0.0);
        assert!((kl(&v[2], &[0.2, 0.4, 0.4]) - 0.104650).abs() < 1e-5);
        assert!((kl(&v[0], &v[1]) - 1.167546).abs() < 1e-5);
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        assert_eq!(kl(&[1.0, 0.0], &[0.5, 0.5]), 2f64.ln());
    }

    #[test]
    fn smoothing_removes_infinity() {
        let k = kl_smoothed(&[1.0, 0.0], &[0.0, 1.0], 0.01);
        assert!(k.is_finite() && k > 0.0);
    }

    #[test]
    fn entropy_values() {
        assert!((entropy(&[1.0 / 3.0; 3]) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy(&[0.2, 0.4, 0.4]) - 1.054920).abs() < 1e-5);
    }

    #[test]
    fn mutual_information_values() {
        assert!((skill_mutual_information(&c6(&[0, 1], &[0.5, 0.5])) - 0.253102).abs() < 1e-5);
        assert_eq!(skill_mutual_information(&c6(&[2], &[1.0])), 0.0);
        let three = c6(&[0, 1, 2], &[0.45, 0.45, 0.1]);
        assert!((skill_mutual_information(&three) - 0.237036).abs() < 1e-5);
    }

    #[test]
    fn indicator_values() {
        assert_eq!(indicator_mi(&c6(&[0], &[1.0]), 0).unwrap(), 0.0);
        let d = fixtures::duplicated_skill_fixture();
        let c = complement(&d.skills()[0], d.mixture(), 0.25, 0).unwrap();
        assert!(crate::mdp::linf(&c, &[0.2, 0.3, 0.5]) < 1e-12);
        assert!((indicator_mi(&d, 0).unwrap() - 0.082226).abs() < 1e-5);
        let pair = c6(&[0, 1], &[0.5, 0.5]);
        for z in 0..2 {
            assert!((indicator_mi(&pair, z).unwrap() - 0.253102).abs() < 1e-5);
        }
    }

    #[test]
    fn lsepin_values() {
        let (v, i) = lsepin(&c6(&[0, 1], &[0.5, 0.5])).unwrap();
        assert!((v - 0.253102).abs() < 1e-5);
        assert_eq!(i, 0);
        let (v, _) = lsepin(&fixtures::duplicated_skill_fixture()).unwrap();
        assert!((v - 0.082226).abs() < 1e-5);
        let (v, _) = lsepin(&c6(&[0, 1], &[1.0, 0.0])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn klsep_values() {
        assert!((klsep(&c6(&[0, 1], &[0.5, 0.5])) - 2.335092).abs() < 1e-5);
        assert_eq!(klsep(&c6(&[1], &[1.0])), 0.0);
        let hot = SkillSet::from_raw(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(klsep(&hot), f64::INFINITY);
    }

    #[test]
    fn inconsistent_complement_is_reported() {
        let err = indicator_mi_at(&[1.0, 0.0], &[0.1, 0.9], 0.5, 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateComplement { skill: 3, .. }));
    }

    #[test]
    fn rejects_bad_weights() {
        let v = fixtures::c6_vertices();
        assert!(SkillSet::from_raw(&v[..2], &[0.5, 0.6]).is_err());
        assert!(SkillSet::from_raw(&v[..2], &[0.5]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ss: SkillSet =
            serde_json::from_str(r#"{"skills":[[0.2,0.7,0.1],[0.2,0.1,0.7]],"weights":[0.5,0.5]}"#).unwrap();
        assert!(ss.mixture().linf(&[0.2, 0.4, 0.4]) < 1e-15);
        let back: SkillSet = serde_json::from_str(&serde_json::to_string(&ss).unwrap()).unwrap();
        assert_eq!(back, ss);
    }
}
