//! Search over small preference profiles for instances whose optimal
//! distortion reaches a threshold.
//!
//! Candidate profiles are multisets of rankings with per-entry weights, so a
//! ranking drawn twice merges into one heavier group. Every candidate is
//! coalesced and brought to a canonical facility labelling before
//! deduplication, so isomorphic instances are solved once.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::AdversaryValue;
use crate::optimal::optimal_scf;
use crate::profile::{PreferenceProfile, ProfileDoc};

/// Canonical relabelling is attempted up to this many facilities; larger
/// profiles are only coalesced.
pub const MAX_CANONICAL_M: usize = 7;
/// A hit's optimal lottery must reproduce its gamma within this.
pub const REVALIDATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search specification: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Every multiset of rankings in order of size.
    Exhaustive,
    /// Random multisets drawn from a seeded generator.
    Sample { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub m: usize,
    pub mode: SearchMode,
    pub max_groups: usize,
    pub weight_cap: u64,
    pub threshold: f64,
    /// Maximum number of distinct profiles evaluated, seeds included.
    pub budget: usize,
    /// Profiles evaluated before any generated one.
    pub include: Vec<PreferenceProfile>,
}

impl SearchSpec {
    pub fn validate(&self) -> Result<(), SearchError> {
        let fail = |msg: &str| Err(SearchError::InvalidSpec(msg.to_string()));
        if self.m == 0 {
            return fail("m must be at least 1");
        }
        if self.max_groups == 0 {
            return fail("max_groups must be at least 1");
        }
        if self.weight_cap == 0 {
            return fail("weight_cap must be at least 1");
        }
        if self.budget == 0 {
            return fail("budget must be at least 1");
        }
        if self.threshold.is_nan() || self.threshold < 1.0 {
            return fail("threshold must be at least 1");
        }
        Ok(())
    }
}

/// Default facility labels: `a`..`z`, then `f27`, `f28`, ...
pub fn facility_labels(m: usize) -> Vec<String> {
    (0..m)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("f{}", i + 1)
            }
        })
        .collect()
}

type Encoding = Vec<(Vec<usize>, u64)>;

fn encode(groups: &[(u64, Vec<usize>)], perm: &[usize]) -> Encoding {
    let mut enc: Encoding = groups
        .iter()
        .map(|(w, r)| (r.iter().map(|&f| perm[f]).collect(), *w))
        .collect();
    enc.sort();
    enc
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    permute(&mut current, 0, &mut out);
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Coalesce, then relabel facility indices so the sorted list of
/// (ranking, weight) pairs is lexicographically smallest. Facility labels
/// keep their positions; only the rankings change. Profiles with more than
/// [`MAX_CANONICAL_M`] facilities are only coalesced.
pub fn canonical_form(profile: &PreferenceProfile) -> PreferenceProfile {
    let coalesced = profile.coalesce();
    let m = coalesced.m();
    if m > MAX_CANONICAL_M {
        return coalesced;
    }
    let groups: Vec<(u64, Vec<usize>)> = coalesced
        .groups()
        .iter()
        .map(|g| (g.weight(), g.ranking().to_vec()))
        .collect();
    let best = permutations(m)
        .into_iter()
        .map(|perm| encode(&groups, &perm))
        .min()
        .expect("at least one permutation");
    PreferenceProfile::from_indices(
        coalesced.facilities().to_vec(),
        best.into_iter().map(|(r, w)| (w, r)).collect(),
    )
    .expect("relabelling keeps the profile valid")
}

fn canonical_key(profile: &PreferenceProfile) -> (Vec<String>, Encoding) {
    let c = canonical_form(profile);
    let enc = c.groups().iter().map(|g| (g.ranking().to_vec(), g.weight())).collect();
    (c.facilities().to_vec(), enc)
}

/// Multisets of rankings with weights, in order of size, then ranking
/// indices, then weights.
struct Exhaustive {
    rankings: Vec<Vec<usize>>,
    cap: u64,
    max_groups: usize,
    idx: Vec<usize>,
    weights: Vec<u64>,
    done: bool,
}

impl Exhaustive {
    fn new(m: usize, max_groups: usize, cap: u64) -> Self {
        let mut rankings = permutations(m);
        rankings.sort();
        Self {
            rankings,
            cap,
            max_groups,
            idx: vec![0],
            weights: vec![1],
            done: false,
        }
    }

    fn advance(&mut self) {
        for w in self.weights.iter_mut().rev() {
            if *w < self.cap {
                *w += 1;
                return;
            }
            *w = 1;
        }
        // Next nondecreasing index sequence of the same length.
        let r = self.rankings.len();
        let k = self.idx.len();
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if self.idx[pos] + 1 < r {
                let v = self.idx[pos] + 1;
                for slot in &mut self.idx[pos..] {
                    *slot = v;
                }
                return;
            }
        }
        if k == self.max_groups {
            self.done = true;
        } else {
            self.idx = vec![0; k + 1];
            self.weights = vec![1; k + 1];
        }
    }
}

impl Iterator for Exhaustive {
    type Item = Vec<(u64, Vec<usize>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self
            .idx
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| (w, self.rankings[i].clone()))
            .collect();
        self.advance();
        Some(item)
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    m: usize,
    cap: u64,
    max_groups: usize,
}

impl Iterator for Sampler {
    type Item = Vec<(u64, Vec<usize>)>;

    fn next(&mut self) -> Option<Self::Item> {
        let k = self.rng.gen_range(1..=self.max_groups);
        let mut groups = Vec::with_capacity(k);
        for _ in 0..k {
            let mut ranking: Vec<usize> = (0..self.m).collect();
            ranking.shuffle(&mut self.rng);
            groups.push((self.rng.gen_range(1..=self.cap), ranking));
        }
        Some(groups)
    }
}

/// Distinct canonical profiles for `spec`, seeds first, at most `budget` in
/// total. Deterministic for a fixed spec and seed. Sampling stops after
/// `50 * budget` draws even if fewer distinct profiles were found.
pub fn enumerate_profiles(spec: &SearchSpec) -> Result<Vec<PreferenceProfile>, SearchError> {
    spec.validate()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in &spec.include {
        if out.len() == spec.budget {
            return Ok(out);
        }
        if seen.insert(canonical_key(p)) {
            out.push(p.coalesce());
        }
    }
    let labels = facility_labels(spec.m);
    let source: Box<dyn Iterator<Item = Vec<(u64, Vec<usize>)>>> = match spec.mode {
        SearchMode::Exhaustive => Box::new(Exhaustive::new(spec.m, spec.max_groups, spec.weight_cap)),
        SearchMode::Sample { seed } => Box::new(
            Sampler {
                rng: ChaCha8Rng::seed_from_u64(seed),
                m: spec.m,
                cap: spec.weight_cap,
                max_groups: spec.max_groups,
            }
            .take(spec.budget.saturating_mul(50)),
        ),
    };
    for groups in source {
        if out.len() == spec.budget {
            break;
        }
        let profile = PreferenceProfile::from_indices(labels.clone(), groups).expect("generated profiles are valid");
        let canonical = canonical_form(&profile);
        if seen.insert(canonical_key(&canonical)) {
            out.push(canonical);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SearchHit {
    pub profile: PreferenceProfile,
    pub gamma: f64,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SearchFailure {
    pub profile: PreferenceProfile,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SearchReport {
    /// Profiles with gamma at or above the threshold, best first.
    pub hits: Vec<SearchHit>,
    pub evaluated: usize,
    /// Best gamma over all evaluated profiles.
    pub best: Option<SearchHit>,
    pub failures: Vec<SearchFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HitDoc {
    pub gamma: f64,
    pub profile: ProfileDoc,
    pub q: BTreeMap<String, f64>,
}

impl SearchHit {
    pub fn to_doc(&self) -> HitDoc {
        HitDoc {
            gamma: self.gamma,
            profile: self.profile.to_doc(),
            q: self
                .q
                .iter()
                .enumerate()
                .map(|(f, p)| (self.profile.facility_label(f).to_string(), *p))
                .collect(),
        }
    }
}

fn evaluate(profile: &PreferenceProfile) -> Result<SearchHit, String> {
    let result = optimal_scf::<f64>(profile).map_err(|e| e.to_string())?;
    let worst = result
        .adversary_values
        .iter()
        .map(AdversaryValue::to_f64)
        .fold(f64::NEG_INFINITY, f64::max);
    if (worst - result.gamma).abs() > REVALIDATION_TOLERANCE {
        return Err(format!(
            "optimal lottery has distortion {worst}, LP value {}",
            result.gamma
        ));
    }
    Ok(SearchHit {
        profile: profile.clone(),
        gamma: result.gamma,
        q: result.q.probs().to_vec(),
    })
}

/// Solve every enumerated profile (in parallel, merged in enumeration
/// order) and keep those reaching the threshold. Each gamma is revalidated
/// by the distortion of its own optimal lottery; failures are collected,
/// not fatal.
pub fn search_instances(spec: &SearchSpec) -> Result<SearchReport, SearchError> {
    let profiles = enumerate_profiles(spec)?;
    let outcomes: Vec<Result<SearchHit, String>> = profiles.par_iter().map(evaluate).collect();
    let mut report = SearchReport {
        evaluated: profiles.len(),
        ..Default::default()
    };
    for (profile, outcome) in profiles.into_iter().zip(outcomes) {
        match outcome {
            Ok(hit) => {
                if report.best.as_ref().is_none_or(|b| hit.gamma > b.gamma) {
                    report.best = Some(hit.clone());
                }
                if hit.gamma >= spec.threshold {
                    report.hits.push(hit);
                }
            }
            Err(error) => report.failures.push(SearchFailure { profile, error }),
        }
    }
    report
        .hits
        .sort_by(|a, b| b.gamma.partial_cmp(&a.gamma).expect("finite gamma"));
    Ok(report)
}
