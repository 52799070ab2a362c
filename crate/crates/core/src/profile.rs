//! Preference profiles: facilities plus weighted groups of clients that share
//! a strict, complete ranking.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("profile has no facilities")]
    NoFacilities,
    #[error("profile has no client groups")]
    NoGroups,
    #[error("facility `{0}` declared twice")]
    DuplicateCandidate(String),
    #[error("group {group}: facility `{facility}` ranked twice")]
    DuplicateInRanking { group: usize, facility: String },
    #[error("group {group}: ranking is missing facility `{facility}`")]
    MissingInRanking { group: usize, facility: String },
    #[error("group {group}: unknown facility `{facility}`")]
    UnknownFacility { group: usize, facility: String },
    #[error("group {group}: weight must be a positive integer")]
    ZeroWeight { group: usize },
    #[error("rank {rank} out of range 1..={m}")]
    RankOutOfRange { rank: usize, m: usize },
    #[error("group index {0} out of range")]
    GroupOutOfRange(usize),
    #[error("no facility named `{0}`")]
    NoSuchFacility(String),
    #[error("invalid JSON profile: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("expected `candidates: <id> ...` before any group line")]
    MissingCandidates,
    #[error("`candidates:` line appears twice")]
    RepeatedCandidates,
    #[error("facility `{0}` declared twice")]
    DuplicateCandidate(String),
    #[error("duplicate facility `{0}` in ranking")]
    DuplicateFacility(String),
    #[error("ranking is missing facility `{0}`")]
    MissingFacility(String),
    #[error("unknown facility `{0}`")]
    UnknownFacility(String),
    #[error("weight `{0}` is not a positive integer")]
    BadWeight(String),
    #[error("weight must be at least 1")]
    ZeroWeight,
    #[error("expected `<weight> : <id> ...`")]
    Malformed,
    #[error("no client groups")]
    NoGroups,
}

/// Clients that share one ranking; `weight` counts colocated voters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClientGroup {
    ranking: Vec<usize>,
    weight: u64,
}

impl ClientGroup {
    /// Facility indices, most preferred first.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    /// Position (0-based) of `facility` in this ranking.
    pub fn position(&self, facility: usize) -> Option<usize> {
        self.ranking.iter().position(|&f| f == facility)
    }
}

/// Validated, immutable preference profile.
///
/// Facility indices are fixed at construction and every downstream LP names
/// its rows and columns from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    facilities: Vec<String>,
    groups: Vec<ClientGroup>,
    lookup: HashMap<String, usize>,
}

impl PreferenceProfile {
    /// Build from facility labels and `(weight, ranking-by-label)` pairs.
    pub fn new<S: AsRef<str>>(facilities: &[S], groups: &[(u64, Vec<S>)]) -> Result<Self, ProfileError> {
        let facilities: Vec<String> = facilities.iter().map(|f| f.as_ref().to_string()).collect();
        let lookup = build_lookup(&facilities)?;
        let mut indexed = Vec::with_capacity(groups.len());
        for (g, (weight, ranking)) in groups.iter().enumerate() {
            let mut idx = Vec::with_capacity(ranking.len());
            for label in ranking {
                let label = label.as_ref();
                match lookup.get(label) {
                    Some(&i) => idx.push(i),
                    None => {
                        return Err(ProfileError::UnknownFacility {
                            group: g,
                            facility: label.to_string(),
                        })
                    }
                }
            }
            indexed.push((*weight, idx));
        }
        Self::from_indices(facilities, indexed)
    }

    /// Build from facility labels and rankings given as facility indices.
    pub fn from_indices(facilities: Vec<String>, groups: Vec<(u64, Vec<usize>)>) -> Result<Self, ProfileError> {
        let lookup = build_lookup(&facilities)?;
        if groups.is_empty() {
            return Err(ProfileError::NoGroups);
        }
        let m = facilities.len();
        let mut out = Vec::with_capacity(groups.len());
        for (g, (weight, ranking)) in groups.into_iter().enumerate() {
            if weight == 0 {
                return Err(ProfileError::ZeroWeight { group: g });
            }
            let mut seen = vec![false; m];
            for &f in &ranking {
                if f >= m {
                    return Err(ProfileError::UnknownFacility {
                        group: g,
                        facility: format!("#{f}"),
                    });
                }
                if seen[f] {
                    return Err(ProfileError::DuplicateInRanking {
                        group: g,
                        facility: facilities[f].clone(),
                    });
                }
                seen[f] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(ProfileError::MissingInRanking {
                    group: g,
                    facility: facilities[missing].clone(),
                });
            }
            out.push(ClientGroup { ranking, weight });
        }
        Ok(Self {
            facilities,
            groups: out,
            lookup,
        })
    }

    pub fn facilities(&self) -> &[String] {
        &self.facilities
    }

    pub fn groups(&self) -> &[ClientGroup] {
        &self.groups
    }

    /// Number of facilities.
    pub fn m(&self) -> usize {
        self.facilities.len()
    }

    /// Total number of clients (sum of group weights).
    pub fn n(&self) -> u64 {
        self.groups.iter().map(|g| g.weight).sum()
    }

    pub fn facility_index(&self, label: &str) -> Result<usize, ProfileError> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| ProfileError::NoSuchFacility(label.to_string()))
    }

    pub fn facility_label(&self, index: usize) -> &str {
        &self.facilities[index]
    }

    /// The `rank`-th (1-based) most preferred facility of `group`.
    pub fn alt(&self, group: usize, rank: usize) -> Result<usize, ProfileError> {
        let g = self.groups.get(group).ok_or(ProfileError::GroupOutOfRange(group))?;
        if rank == 0 || rank > self.m() {
            return Err(ProfileError::RankOutOfRange { rank, m: self.m() });
        }
        Ok(g.ranking[rank - 1])
    }

    /// Merge groups with identical rankings; groups come out sorted
    /// lexicographically by ranking (as facility indices).
    pub fn coalesce(&self) -> Self {
        let mut merged: BTreeMap<&[usize], u64> = BTreeMap::new();
        for g in &self.groups {
            *merged.entry(g.ranking.as_slice()).or_default() += g.weight;
        }
        let groups = merged
            .into_iter()
            .map(|(ranking, weight)| ClientGroup {
                ranking: ranking.to_vec(),
                weight,
            })
            .collect();
        Self {
            facilities: self.facilities.clone(),
            groups,
            lookup: self.lookup.clone(),
        }
    }

    /// One weight-1 group per client, in group order.
    pub fn expand(&self) -> Self {
        let groups = self
            .groups
            .iter()
            .flat_map(|g| {
                std::iter::repeat_n(
                    ClientGroup {
                        ranking: g.ranking.clone(),
                        weight: 1,
                    },
                    g.weight as usize,
                )
            })
            .collect();
        Self {
            facilities: self.facilities.clone(),
            groups,
            lookup: self.lookup.clone(),
        }
    }

    /// Reorder the facility list so that old facility `i` sits at index
    /// `perm[i]`. Labels travel with their facility.
    pub fn permute_facilities(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.m(), "permutation length must equal m");
        let mut facilities = vec![String::new(); self.m()];
        for (old, &new) in perm.iter().enumerate() {
            facilities[new] = self.facilities[old].clone();
        }
        let groups = self
            .groups
            .iter()
            .map(|g| (g.weight, g.ranking.iter().map(|&f| perm[f]).collect()))
            .collect();
        Self::from_indices(facilities, groups).expect("permuting a valid profile keeps it valid")
    }

    /// Facilities that some group ranks first, with their total weight.
    pub fn top_choice_weights(&self) -> Vec<u64> {
        let mut tops = vec![0u64; self.m()];
        for g in &self.groups {
            tops[g.ranking[0]] += g.weight;
        }
        tops
    }

    pub fn to_doc(&self) -> ProfileDoc {
        ProfileDoc {
            facilities: self.facilities.clone(),
            clients: self
                .groups
                .iter()
                .map(|g| GroupDoc {
                    ranking: g.ranking.iter().map(|&f| self.facilities[f].clone()).collect(),
                    weight: g.weight,
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &ProfileDoc) -> Result<Self, ProfileError> {
        if doc.facilities.is_empty() {
            return Err(ProfileError::NoFacilities);
        }
        let groups: Vec<(u64, Vec<String>)> = doc.clients.iter().map(|g| (g.weight, g.ranking.clone())).collect();
        Self::new(&doc.facilities, &groups)
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let doc: ProfileDoc = serde_json::from_str(text).map_err(|e| ProfileError::Json(e.to_string()))?;
        Self::from_doc(&doc)
    }
}

fn build_lookup(facilities: &[String]) -> Result<HashMap<String, usize>, ProfileError> {
    if facilities.is_empty() {
        return Err(ProfileError::NoFacilities);
    }
    let mut lookup = HashMap::with_capacity(facilities.len());
    for (i, f) in facilities.iter().enumerate() {
        if lookup.insert(f.clone(), i).is_some() {
            return Err(ProfileError::DuplicateCandidate(f.clone()));
        }
    }
    Ok(lookup)
}

/// JSON mirror of the text format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub facilities: Vec<String>,
    pub clients: Vec<GroupDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDoc {
    pub ranking: Vec<String>,
    pub weight: u64,
}

/// Parse the line-oriented profile format:
///
/// ```text
/// # comment
/// candidates: a b c
/// 2 : a b c
/// 1 : c b a
/// ```
pub fn parse_profile(text: &str) -> Result<PreferenceProfile, ProfileError> {
    let err = |line: usize, kind| ProfileError::Parse { line, kind };
    let mut facilities: Option<(Vec<String>, HashMap<String, usize>)> = None;
    let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
    let mut last_line = 0;
    let mut any_content = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        any_content = true;
        if let Some(rest) = line.strip_prefix("candidates:") {
            if facilities.is_some() {
                return Err(err(line_no, ParseErrorKind::RepeatedCandidates));
            }
            let ids: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            let mut lookup = HashMap::new();
            for (k, id) in ids.iter().enumerate() {
                if lookup.insert(id.clone(), k).is_some() {
                    return Err(err(line_no, ParseErrorKind::DuplicateCandidate(id.clone())));
                }
            }
            if ids.is_empty() {
                return Err(err(line_no, ParseErrorKind::MissingCandidates));
            }
            facilities = Some((ids, lookup));
            continue;
        }
        let Some((ids, lookup)) = facilities.as_ref() else {
            return Err(err(line_no, ParseErrorKind::MissingCandidates));
        };
        let Some((weight_text, ranking_text)) = line.split_once(':') else {
            return Err(err(line_no, ParseErrorKind::Malformed));
        };
        let weight_text = weight_text.trim();
        let weight: u64 = match weight_text.parse::<i64>() {
            Ok(w) if w >= 1 => w as u64,
            Ok(_) => return Err(err(line_no, ParseErrorKind::ZeroWeight)),
            Err(_) => return Err(err(line_no, ParseErrorKind::BadWeight(weight_text.to_string()))),
        };
        let mut seen = vec![false; ids.len()];
        let mut ranking = Vec::with_capacity(ids.len());
        for token in ranking_text.split_whitespace() {
            let Some(&f) = lookup.get(token) else {
                return Err(err(line_no, ParseErrorKind::UnknownFacility(token.to_string())));
            };
            if seen[f] {
                return Err(err(line_no, ParseErrorKind::DuplicateFacility(token.to_string())));
            }
            seen[f] = true;
            ranking.push(f);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(err(line_no, ParseErrorKind::MissingFacility(ids[missing].clone())));
        }
        groups.push((weight, ranking));
    }

    if !any_content {
        return Err(err(last_line.max(1), ParseErrorKind::Empty));
    }
    let Some((ids, _)) = facilities else {
        return Err(err(last_line, ParseErrorKind::MissingCandidates));
    };
    if groups.is_empty() {
        return Err(err(last_line, ParseErrorKind::NoGroups));
    }
    PreferenceProfile::from_indices(ids, groups)
}

/// Render a profile in the text format accepted by [`parse_profile`].
pub fn format_profile(profile: &PreferenceProfile) -> String {
    profile.to_string()
}

impl fmt::Display for PreferenceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "candidates: {}", self.facilities.join(" "))?;
        for g in &self.groups {
            let names: Vec<&str> = g.ranking.iter().map(|&i| self.facilities[i].as_str()).collect();
            writeln!(f, "{} : {}", g.weight, names.join(" "))?;
        }
        Ok(())
    }
}
