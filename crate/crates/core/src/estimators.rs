//! Sample-based estimators: particle entropy, kNN indicator mutual
//! information and the sliced 1-Wasserstein distance.

use std::cmp::Ordering;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::divergences::SkillSet;
use crate::error::{Error, Result};
use crate::fixtures::stream_rng;

/// Particles, with optional skill labels aligned to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    points: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
    seed: u64,
}

impl SampleBatch {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>, seed: u64) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.len();
            if let Some(bad) = points.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
            }
            if points.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDistribution("non-finite sample coordinate".into()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: l.len(),
                });
            }
        }
        Ok(SampleBatch { points, labels, seed })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Points whose label satisfies `keep`.
    fn subset(&self, keep: impl Fn(usize) -> bool) -> Vec<&[f64]> {
        let labels = self.labels.as_ref().expect("caller checked labels");
        self.points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| keep(l))
            .map(|(p, _)| p.as_slice())
            .collect()
    }

    /// CSV with columns `dim_0..dim_{d-1}` and, when labelled, `skill`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.dim()).map(|i| format!("dim_{i}")).collect();
        if self.labels.is_some() {
            header.push("skill".into());
        }
        out.write_record(&header).map_err(csv_err)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
            if let Some(l) = &self.labels {
                row.push(l[i].to_string());
            }
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, seed: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let labelled = header.iter().next_back() == Some("skill");
        let dim = header.len() - usize::from(labelled);
        for (i, name) in header.iter().take(dim).enumerate() {
            if name != format!("dim_{i}") {
                return Err(Error::MalformedSpec(format!("unexpected CSV column {name:?}")));
            }
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let p = rec
                .iter()
                .take(dim)
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::MalformedSpec(e.to_string()))?;
            points.push(p);
            if labelled {
                labels.push(rec[dim].trim().parse().map_err(|e: std::num::ParseIntError| Error::MalformedSpec(e.to_string()))?);
            }
        }
        SampleBatch::new(points, labelled.then_some(labels), seed)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::MalformedSpec(format!("CSV: {e}"))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn particle_entropy_of(points: &[&[f64]], k: usize, c_stab: f64) -> Result<f64> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::TooFewSamples {
            what: "particle batch".into(),
            have: n,
            need: k,
        });
    }
    // identical particles share their neighbourhood
    let mut sorted: Vec<&[f64]> = points.to_vec();
    sorted.sort_by(|a, b| lex(a, b));
    let mut groups: Vec<(&[f64], usize)> = Vec::new();
    for p in sorted {
        match groups.last_mut() {
            Some((q, m)) if lex(q, p).is_eq() => *m += 1,
            _ => groups.push((p, 1)),
        }
    }
    let mut total = 0.0;
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(groups.len());
    for (g, &(p, m)) in groups.iter().enumerate() {
        let mut need = k.saturating_sub(m - 1);
        let mut sum = 0.0;
        if need > 0 {
            dists.clear();
            dists.extend(groups.iter().enumerate().filter(|&(h, _)| h != g).map(|(_, &(q, mq))| (euclid(p, q), mq)));
            dists.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(d, mq) in &dists {
                let take = need.min(mq);
                sum += d * take as f64;
                need -= take;
                if need == 0 {
                    break;
                }
            }
        }
        total += m as f64 * (c_stab + sum / k as f64).ln();
    }
    Ok(total)
}

/// `Σ_i ln(c_stab + mean distance from s_i to its k nearest neighbours)`.
pub fn particle_entropy(batch: &SampleBatch, k: usize, c_stab: f64) -> Result<f64> {
    assert!(c_stab >= 0.0);
    let pts: Vec<&[f64]> = batch.points.iter().map(Vec::as_slice).collect();
    particle_entropy_of(&pts, k, c_stab)
}

/// `Ĥ(S) − [Ĥ(S | Z = z) + Ĥ(S | Z ≠ z)]`, each term a particle entropy.
pub fn knn_indicator_mi(batch: &SampleBatch, z: usize, k: usize, c_stab: f64) -> Result<f64> {
    if batch.labels.is_none() {
        return Err(Error::MalformedSpec("indicator MI needs skill labels".into()));
    }
    let inside = batch.subset(|l| l == z);
    let outside = batch.subset(|l| l != z);
    for (what, part) in [("skill subset", &inside), ("complement subset", &outside)] {
        if part.len() <= k {
            return Err(Error::TooFewSamples {
                what: what.into(),
                have: part.len(),
                need: k,
            });
        }
    }
    let all: Vec<&[f64]> = batch.points.iter().map(Vec::as_slice).collect();
    Ok(particle_entropy_of(&all, k, c_stab)?
        - particle_entropy_of(&inside, k, c_stab)?
        - particle_entropy_of(&outside, k, c_stab)?)
}

/// `min_z` of [`knn_indicator_mi`] over the labels present in the batch.
pub fn knn_lsepin(batch: &SampleBatch, k: usize, c_stab: f64) -> Result<f64> {
    let mut labels: Vec<usize> = batch.labels().unwrap_or_default().to_vec();
    labels.sort_unstable();
    labels.dedup();
    let mut best = f64::INFINITY;
    for z in labels {
        best = best.min(knn_indicator_mi(batch, z, k, c_stab)?);
    }
    Ok(best)
}

fn w1_sorted(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// `E|θ_1|` for `θ` uniform on the unit sphere in `R^d`.
fn sphere_abs_mean(d: usize) -> f64 {
    let (mut c, mut k) = if d % 2 == 1 { (1.0, 1) } else { (2.0 / std::f64::consts::PI, 2) };
    while k < d {
        c *= k as f64 / (k + 1) as f64;
        k += 2;
    }
    c
}

/// Unit directions in `R^d`, grouped into orthonormal frames of Gaussian QR factors.
fn directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut frame = 0u64;
    while out.len() < count {
        let mut r = stream_rng(seed, frame);
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| r.sample(StandardNormal));
        let q = g.qr().q();
        for j in 0..d {
            if out.len() == count {
                break;
            }
            out.push(q.column(j).iter().copied().collect());
        }
        frame += 1;
    }
    out
}

/// Mean 1-D W1 between the projections of `a` and `b` over random unit directions.
pub fn sliced_w1_raw(a: &SampleBatch, b: &SampleBatch, n_projections: usize, seed: u64) -> Result<f64> {
    assert!(n_projections >= 1);
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples {
            what: "sliced W1 batch".into(),
            have: 0,
            need: 0,
        });
    }
    let d = a.dim();
    // the smaller batch is bootstrapped up to the larger size
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let small_pts: Vec<&[f64]> = if small.len() == large.len() {
        small.points.iter().map(Vec::as_slice).collect()
    } else {
        let mut r = stream_rng(seed, u64::MAX);
        (0..large.len())
            .map(|_| small.points[r.random_range(0..small.len())].as_slice())
            .collect()
    };
    let dot = |p: &[f64], t: &[f64]| p.iter().zip(t).map(|(x, y)| x * y).sum::<f64>();
    let mut total = 0.0;
    let mut xs = vec![0.0; large.len()];
    let mut ys = vec![0.0; large.len()];
    for theta in directions(d, n_projections, seed) {
        for (x, p) in xs.iter_mut().zip(&small_pts) {
            *x = dot(p, &theta);
        }
        for (y, p) in ys.iter_mut().zip(&large.points) {
            *y = dot(p, &theta);
        }
        total += w1_sorted(&mut xs, &mut ys);
    }
    Ok(total / n_projections as f64)
}

/// [`sliced_w1_raw`] rescaled by `1 / E|θ_1|`, which puts it on the scale of
/// the Euclidean W1 distance (exact in one dimension).
pub fn sliced_w1(a: &SampleBatch, b: &SampleBatch, n_projections: usize, seed: u64) -> Result<f64> {
    Ok(sliced_w1_raw(a, b, n_projections, seed)? / sphere_abs_mean(a.dim()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    OneHot,
    /// One vector per state.
    Custom(Vec<Vec<f64>>),
}

impl Embedding {
    fn validate(&self, num_states: usize) -> Result<()> {
        if let Embedding::Custom(rows) = self {
            if rows.len() != num_states {
                return Err(Error::DimensionMismatch {
                    expected: num_states,
                    got: rows.len(),
                });
            }
        }
        Ok(())
    }

    fn embed(&self, state: usize, num_states: usize) -> Vec<f64> {
        match self {
            Embedding::OneHot => {
                let mut v = vec![0.0; num_states];
                v[state] = 1.0;
                v
            }
            Embedding::Custom(rows) => rows[state].clone(),
        }
    }
}

/// `n_per_skill` i.i.d. states from every weight-positive skill, labelled by skill index.
/// Skill `z` draws from sub-stream `z` of `seed`.
pub fn sample_skillset(ss: &SkillSet, n_per_skill: usize, seed: u64, embedding: &Embedding) -> Result<SampleBatch> {
    assert!(n_per_skill >= 1);
    let ns = ss.dim();
    embedding.validate(ns)?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for z in ss.learned() {
        let dist = WeightedIndex::new(ss.skills()[z].iter().copied())
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let mut r = stream_rng(seed, z as u64);
        for _ in 0..n_per_skill {
            points.push(embedding.embed(dist.sample(&mut r), ns));
            labels.push(z);
        }
    }
    SampleBatch::new(points, Some(labels), seed)
}

/// Samples `ss` and returns the kNN LSEPIN estimate.
pub fn estimate_lsepin(ss: &SkillSet, n_per_skill: usize, k: usize, c_stab: f64, seed: u64) -> Result<f64> {
    let batch = sample_skillset(ss, n_per_skill, seed, &Embedding::OneHot)?;
    knn_lsepin(&batch, k, c_stab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn batch(points: Vec<Vec<f64>>) -> SampleBatch {
        SampleBatch::new(points, None, 0).unwrap()
    }

    #[test]
    fn identical_points_have_zero_entropy() {
        let b = batch(vec![vec![0.3, 1.0]; 20]);
        assert_eq!(particle_entropy(&b, 5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn clusters_ignored_at_small_k() {
        let mut pts = vec![vec![0.0, 0.0]; 10];
        pts.extend(vec![vec![3.0, 4.0]; 10]);
        assert_eq!(particle_entropy(&batch(pts.clone()), 9, 1.0).unwrap(), 0.0);
        // k = 10 reaches one particle of the other cluster at distance 5
        let v = particle_entropy(&batch(pts), 10, 1.0).unwrap();
        assert!((v - 20.0 * 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn brute_force_knn_agrees() {
        let mut r = fixtures::rng(3);
        let mut pts: Vec<Vec<f64>> = (0..60).map(|_| vec![r.random_range(0..4) as f64, r.random::<f64>()]).collect();
        pts.extend(vec![vec![1.0, 0.5]; 5]);
        let k = 7;
        let mut expect = 0.0;
        for (i, p) in pts.iter().enumerate() {
            let mut d: Vec<f64> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| euclid(p, q)).collect();
            d.sort_by(f64::total_cmp);
            expect += (0.5 + d[..k].iter().sum::<f64>() / k as f64).ln();
        }
        let got = particle_entropy(&batch(pts), k, 0.5).unwrap();
        assert!((got - expect).abs() < 1e-9);
    }

    #[test]
    fn one_hot_snapshot() {
        let ss = SkillSet::from_raw(&[vec![0.2, 0.4, 0.4]], &[1.0]).unwrap();
        let b = sample_skillset(&ss, 1000, 11, &Embedding::OneHot).unwrap();
        // every state is drawn far more than k + 1 times
        assert_eq!(particle_entropy(&b, 50, 1.0).unwrap(), 0.0);
        assert!(particle_entropy(&b, 1000, 1.0).is_err());
    }

    #[test]
    fn permutation_invariant() {
        let mut r = fixtures::rng(5);
        let mut pts: Vec<Vec<f64>> = (0..80).map(|_| vec![r.random(), r.random(), r.random()]).collect();
        let a = particle_entropy(&batch(pts.clone()), 4, 1.0).unwrap();
        pts.reverse();
        pts.swap(3, 40);
        assert_eq!(a, particle_entropy(&batch(pts), 4, 1.0).unwrap());
    }

    #[test]
    fn indicator_mi_separation() {
        let k = 10;
        // forty states per skill keeps per-state counts below k
        let half = |lo: usize| (0..80).map(|s| if (lo..lo + 40).contains(&s) { 1.0 / 40.0 } else { 0.0 }).collect::<Vec<f64>>();
        let sep = SkillSet::from_raw(&[half(0), half(40)], &[0.5, 0.5]).unwrap();
        let b = sample_skillset(&sep, 300, 1, &Embedding::OneHot).unwrap();
        let separated = knn_indicator_mi(&b, 0, k, 1.0).unwrap();
        let mut pts = b.points().to_vec();
        let mut r = fixtures::stream_rng(9, 0);
        for i in (1..pts.len()).rev() {
            pts.swap(i, r.random_range(0..=i));
        }
        let shuffled = SampleBatch::new(pts, b.labels().map(<[usize]>::to_vec), 1).unwrap();
        let independent = knn_indicator_mi(&shuffled, 0, k, 1.0).unwrap();
        assert!(independent < separated);
        assert!(separated.abs() < 1e-12);
        let single = sample_skillset(&SkillSet::from_raw(&[vec![0.5, 0.5]], &[1.0]).unwrap(), 50, 0, &Embedding::OneHot).unwrap();
        assert!(matches!(knn_indicator_mi(&single, 0, 5, 1.0), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn sliced_basic() {
        let b = batch(vec![vec![0.1, 0.2], vec![0.5, 0.3], vec![0.0, 1.0]]);
        assert_eq!(sliced_w1(&b, &b, 16, 0).unwrap(), 0.0);
        let x = batch(vec![vec![0.0], vec![1.0], vec![5.0]]);
        let y = batch(vec![vec![2.0], vec![0.5], vec![3.0]]);
        // sorted: (0,1,5) vs (0.5,2,3) -> (0.5 + 1 + 2) / 3
        for n in [1, 7] {
            assert!((sliced_w1(&x, &y, n, 4).unwrap() - 3.5 / 3.0).abs() < 1e-9);
        }
        assert!(matches!(sliced_w1(&b, &x, 4, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sliced_symmetric_with_bootstrap() {
        let mut r = fixtures::rng(2);
        let a = batch((0..50).map(|_| vec![r.random(), r.random()]).collect());
        let b = batch((0..80).map(|_| vec![r.random::<f64>() + 0.5, r.random()]).collect());
        let ab = sliced_w1(&a, &b, 32, 7).unwrap();
        let ba = sliced_w1(&b, &a, 32, 7).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn sphere_constants() {
        assert_eq!(sphere_abs_mean(1), 1.0);
        assert!((sphere_abs_mean(2) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((sphere_abs_mean(3) - 0.5).abs() < 1e-15);
        assert!((sphere_abs_mean(4) - 4.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn sampling() {
        let one = SkillSet::from_raw(&[vec![0.0, 1.0, 0.0]], &[1.0]).unwrap();
        let b = sample_skillset(&one, 1, 0, &Embedding::OneHot).unwrap();
        assert_eq!(b.points(), &[vec![0.0, 1.0, 0.0]]);
        let ss = fixtures::c6_solution();
        let b = sample_skillset(&ss, 10_000, 42, &Embedding::OneHot).unwrap();
        for z in 0..2 {
            let mut freq = [0.0; 3];
            for (p, &l) in b.points().iter().zip(b.labels().unwrap()) {
                if l == z {
                    for s in 0..3 {
                        freq[s] += p[s] / 10_000.0;
                    }
                }
            }
            assert!(ss.skills()[z].linf(&freq) < 0.02);
        }
        assert_eq!(b, sample_skillset(&ss, 10_000, 42, &Embedding::OneHot).unwrap());
        let bad = Embedding::Custom(vec![vec![0.0]; 2]);
        assert!(matches!(sample_skillset(&ss, 5, 0, &bad), Err(Error::DimensionMismatch { .. })));
        let ragged = Embedding::Custom(vec![vec![0.0], vec![1.0, 2.0], vec![3.0]]);
        assert!(sample_skillset(&ss, 20, 0, &ragged).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let b = sample_skillset(&fixtures::c6_solution(), 7, 3, &Embedding::OneHot).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dim_0,dim_1,dim_2,skill\n"));
        assert_eq!(SampleBatch::read_csv(&buf[..], 3).unwrap(), b);
        let unlabelled = batch(vec![vec![0.25, -1.5]]);
        let mut buf = Vec::new();
        unlabelled.write_csv(&mut buf).unwrap();
        assert_eq!(SampleBatch::read_csv(&buf[..], 0).unwrap(), unlabelled);
        assert!(SampleBatch::read_csv("x,y\n1,2\n".as_bytes(), 0).is_err());
    }
}
