//! End-to-end runs of the worked examples with their asserted relations.

use serde::Serialize;
use serde_json::json;

use crate::adaptation::mac;
use crate::divergences::{kl, lsepin, skill_mutual_information, SkillSet};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::geometry::{misl_center, CENTER_TOL};
use crate::polytope::Polytope;
use crate::transport::{wasserstein_distance, wsep, CostMatrix};
use crate::wdsl::{klsep_pathology_demo, spwd};

pub const SCENARIOS: [&str; 5] = ["c5", "c6", "c7", "d", "spwd"];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    /// Golden value, or the other side of an inequality.
    pub reference: f64,
    pub relation: &'static str,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn near(label: &str, value: f64, reference: f64, tol: f64) -> Self {
        Check {
            label: label.into(),
            value,
            reference,
            relation: "==",
            tol,
            passed: (value - reference).abs() <= tol,
        }
    }

    fn greater(label: &str, value: f64, reference: f64) -> Self {
        Check {
            label: label.into(),
            value,
            reference,
            relation: ">",
            tol: 0.0,
            passed: value > reference,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub scenario: String,
    pub ok: bool,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

impl ReproReport {
    fn new(scenario: &str, checks: Vec<Check>, details: serde_json::Value) -> Self {
        ReproReport {
            scenario: scenario.into(),
            ok: checks.iter().all(|c| c.passed),
            checks,
            details,
        }
    }
}

pub fn run(name: &str) -> Result<ReproReport> {
    match name {
        "c5" => c5(),
        "c6" => c6(),
        "c7" => c7(),
        "d" => duplicated_skills(),
        "spwd" => spwd_demo(),
        other => Err(Error::MalformedSpec(format!(
            "unknown scenario {other:?}; expected one of {}",
            SCENARIOS.join(", ")
        ))),
    }
}

fn pair(poly: &Polytope, i: usize, j: usize) -> Result<SkillSet> {
    SkillSet::uniform(vec![poly.vertices[i].clone(), poly.vertices[j].clone()])
}

fn c5() -> Result<ReproReport> {
    let poly = Polytope::from_vertices(fixtures::measures(&fixtures::c5_vertices()));
    let c = CostMatrix::unit(4);
    let ac = pair(&poly, 0, 2)?;
    let ad = pair(&poly, 0, 3)?;
    let (wsep_ac, wsep_ad) = (wsep(&ac, &c)?, wsep(&ad, &c)?);
    let (mac_ac, mac_ad) = (mac(&ac, &poly, &c)?, mac(&ad, &poly, &c)?);
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            let v = wsep(&pair(&poly, i, j)?, &c)?;
            if v > best.0 {
                best = (v, (i, j));
            }
        }
    }
    let checks = vec![
        Check::near("wsep-optimal pair is {a,c}", (best.1 == (0, 2)) as u8 as f64, 1.0, 0.0),
        Check::greater("WSEP{a,c} > WSEP{a,d}", wsep_ac, wsep_ad),
        Check::greater("MAC{a,c} > MAC{a,d}", mac_ac, mac_ad),
    ];
    Ok(ReproReport::new(
        "c5",
        checks,
        json!({
            "vertices": fixtures::c5_vertices(),
            "wsep": {"ac": wsep_ac, "ad": wsep_ad},
            "mac": {"ac": mac_ac, "ad": mac_ad},
        }),
    ))
}

fn c6() -> Result<ReproReport> {
    let poly = Polytope::from_mdp(&fixtures::c6_mdp(), 1000)?;
    if poly.len() != 3 {
        return Err(Error::MalformedSpec(format!("expected 3 vertices, found {}", poly.len())));
    }
    let sol = misl_center(&poly, CENTER_TOL)?;
    let v = fixtures::c6_vertices();
    let c = CostMatrix::unit(3);
    let all = SkillSet::uniform(fixtures::measures(&v))?;
    let doubled = SkillSet::uniform(fixtures::measures(&[v[0].clone(), v[0].clone(), v[1].clone()]))?;
    let checks = vec![
        Check::near("center L∞ from [0.2,0.4,0.4]", sol.center.linf(&[0.2, 0.4, 0.4]), 0.0, 1e-3),
        Check::near("radius", sol.radius, 0.2531, 1e-3),
        Check::near("kl(v3, center)", kl(&v[2], &sol.center), 0.1046, 1e-3),
        Check::near("W(v1,v2)", wasserstein_distance(&v[0], &v[1], &c)?, 0.6, 1e-12),
        Check::near("W(v1,v3)", wasserstein_distance(&v[0], &v[2], &c)?, 0.4, 1e-12),
        Check::near("WSEP{v1,v2,v3}", wsep(&all, &c)?, 2.8, 1e-12),
        Check::near("WSEP{v1,v1,v2}", wsep(&doubled, &c)?, 2.4, 1e-12),
    ];
    Ok(ReproReport::new(
        "c6",
        checks,
        json!({"vertices": poly.vertices, "center": sol.center, "radius": sol.radius, "active": sol.active}),
    ))
}

fn c7() -> Result<ReproReport> {
    let r = klsep_pathology_demo(&CostMatrix::unit(3), 3)?.expect("three skills requested");
    let checks = vec![
        Check::greater("KLSEP near > KLSEP far", r.klsep_near, r.klsep_far),
        Check::greater("WSEP far > WSEP near", r.wsep_far, r.wsep_near),
    ];
    Ok(ReproReport::new("c7", checks, serde_json::to_value(&r).expect("serializable")))
}

fn duplicated_skills() -> Result<ReproReport> {
    let dup = fixtures::duplicated_skill_fixture();
    let sol = fixtures::c6_solution();
    let mi = skill_mutual_information(&dup);
    let (l_dup, _) = lsepin(&dup)?;
    let (l_sol, _) = lsepin(&sol)?;
    let radius = misl_center(&fixtures::c6_polytope(), CENTER_TOL)?.radius;
    let checks = vec![
        Check::near("I(S;Z) duplicated set", mi, 0.2531, 1e-3),
        Check::near("I(S;Z) equals the radius", mi, radius, 1e-6),
        Check::near("LSEPIN duplicated set", l_dup, 0.0823, 1e-3),
        Check::greater("LSEPIN two-skill solution > duplicated", l_sol, l_dup),
    ];
    Ok(ReproReport::new(
        "d",
        checks,
        json!({"mutual_information": mi, "lsepin_duplicated": l_dup, "lsepin_solution": l_sol}),
    ))
}

fn spwd_demo() -> Result<ReproReport> {
    let n = 1000;
    let pts = fixtures::circle_points(n, 0.3);
    let c = CostMatrix::unit(3);
    let all = SkillSet::uniform(fixtures::measures(&pts))?;
    let two = SkillSet::uniform(fixtures::measures(&[pts[0].clone(), pts[n / 2].clone()]))?;
    let (s_all, s_two) = (spwd(&all, &c)?, spwd(&two, &c)?);
    let checks = vec![Check::greater("SPWD two-point set > SPWD all vertices", s_two, s_all)];
    Ok(ReproReport::new(
        "spwd",
        checks,
        json!({"vertices": n, "spwd_all": s_all, "spwd_two": s_two, "wsep_two": wsep(&two, &c)?}),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_passes() {
        for name in SCENARIOS {
            let r = run(name).unwrap();
            assert!(r.ok, "{name}: {:?}", r.checks);
        }
        assert!(run("c9").is_err());
    }
}
