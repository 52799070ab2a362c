//! Lower-bound certificates: one metric per reference facility, jointly
//! feasible for the dual of the min-max LP. Their bound is
//! `phi = min_i sum_o sum_j w_j d^o(i, j)`, which no lottery can beat.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{
    check_consistency, check_triangle, metric_closure, social_cost, ConsistencyReport, Metric, MetricDoc, MetricError,
    MetricGraph, MetricGraphDoc, PointSpace, TriangleReport,
};
use crate::profile::{PreferenceProfile, ProfileDoc, ProfileError};
use crate::scalar::{sum, Scalar};

/// Verification tolerance for certificates built from 6-decimal printed data.
pub const PRINTED_TOLERANCE: f64 = 5e-4;
/// Verification tolerance for internally generated certificates.
pub const INTERNAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("no metric given for facility `{0}`")]
    MissingFacility(String),
    #[error("two metrics given for facility `{0}`")]
    DuplicateFacility(String),
    #[error("entry for `{0}` must have exactly one of `graph` and `metric`")]
    AmbiguousEntry(String),
    #[error("invalid certificate JSON: {0}")]
    Json(String),
}

/// How the metric of one reference facility is given.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateEntry<T = f64> {
    Graph(MetricGraph<T>),
    Metric(Metric<T>),
}

impl<T: Scalar> CertificateEntry<T> {
    pub fn to_metric(&self) -> Result<Metric<T>, MetricError> {
        match self {
            Self::Graph(g) => metric_closure(g),
            Self::Metric(m) => Ok(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T = f64> {
    pub profile: PreferenceProfile,
    /// One entry per facility, in facility order.
    pub entries: Vec<CertificateEntry<T>>,
    pub claimed_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub profile: ProfileDoc,
    pub metrics: Vec<EntryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub o: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<MetricGraphDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricDoc>,
}

impl<T: Scalar> Certificate<T> {
    /// Wrap computed metrics (e.g. from the dual LP) as a certificate.
    pub fn from_metrics(profile: PreferenceProfile, metrics: Vec<Metric<T>>, claimed_phi: Option<f64>) -> Self {
        Self {
            profile,
            entries: metrics.into_iter().map(CertificateEntry::Metric).collect(),
            claimed_phi,
        }
    }

    pub fn from_doc(doc: &CertificateDoc) -> Result<Self, CertificateError> {
        let profile = PreferenceProfile::from_doc(&doc.profile)?;
        let space = PointSpace::from_profile(&profile)?;
        let mut slots: Vec<Option<CertificateEntry<T>>> = vec![None; profile.m()];
        for entry in &doc.metrics {
            let o = profile
                .facility_index(&entry.o)
                .map_err(|_| MetricError::NotAFacility(entry.o.clone()))?;
            if slots[o].is_some() {
                return Err(CertificateError::DuplicateFacility(entry.o.clone()));
            }
            slots[o] = Some(match (&entry.graph, &entry.metric) {
                (Some(g), None) => CertificateEntry::Graph(MetricGraph::from_doc_in(g, &space)?),
                (None, Some(m)) => CertificateEntry::Metric(Metric::from_doc_in(m, &space)?),
                _ => return Err(CertificateError::AmbiguousEntry(entry.o.clone())),
            });
        }
        let entries = slots
            .into_iter()
            .enumerate()
            .map(|(o, e)| e.ok_or_else(|| CertificateError::MissingFacility(profile.facility_label(o).to_string())))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            profile,
            entries,
            claimed_phi: doc.claimed_phi,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CertificateError> {
        let doc: CertificateDoc = serde_json::from_str(text).map_err(|e| CertificateError::Json(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> CertificateDoc {
        CertificateDoc {
            profile: self.profile.to_doc(),
            metrics: self
                .entries
                .iter()
                .enumerate()
                .map(|(o, e)| {
                    let o = self.profile.facility_label(o).to_string();
                    match e {
                        CertificateEntry::Graph(g) => EntryDoc {
                            o,
                            graph: Some(g.to_doc()),
                            metric: None,
                        },
                        CertificateEntry::Metric(m) => EntryDoc {
                            o,
                            graph: None,
                            metric: Some(m.to_doc()),
                        },
                    }
                })
                .collect(),
            claimed_phi: self.claimed_phi,
        }
    }

    /// Multiply every distance by `factor`.
    pub fn scaled(&self, factor: &T) -> Self {
        Self {
            profile: self.profile.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| match e {
                    CertificateEntry::Graph(g) => CertificateEntry::Graph(g.scaled(factor)),
                    CertificateEntry::Metric(m) => CertificateEntry::Metric(m.scaled(factor)),
                })
                .collect(),
            claimed_phi: self.claimed_phi,
        }
    }
}

/// Checks for the metric of one reference facility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacilityCheck {
    pub o: String,
    /// `sum_j w_j d^o(o, j)`, this facility's share of the normalization.
    pub own_cost: f64,
    pub consistency: ConsistencyReport,
    /// Smallest `d(alt(g,r+1), g) - d(alt(g,r), g)`; negative when violated.
    pub consistency_min_slack: Option<f64>,
    pub triangle: TriangleReport,
    /// Smallest `d(x,z) + d(z,y) - d(x,y)`; negative when violated.
    pub triangle_min_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport<T = f64> {
    pub feasible: bool,
    /// Implied lower bound; `None` when the certificate is infeasible.
    pub phi: Option<T>,
    /// `sum_o sum_j w_j d^o(o, j)`.
    pub normalization: T,
    /// `1 - normalization`; negative when violated.
    pub normalization_slack: T,
    /// `sum_o sum_j w_j d^o(i, j)` for every facility `i`.
    pub facility_totals: Vec<T>,
    pub per_o: Vec<FacilityCheck>,
    pub claimed_phi: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReportDoc {
    pub feasible: bool,
    pub phi: Option<f64>,
    pub normalization: f64,
    pub normalization_slack: f64,
    pub facility_totals: BTreeMap<String, f64>,
    pub claimed_phi: Option<f64>,
    /// `phi - claimed_phi` when both are known.
    pub claimed_gap: Option<f64>,
    pub tolerance: f64,
    pub per_o: Vec<FacilityCheck>,
}

impl<T: Scalar> CertificateReport<T> {
    pub fn to_doc(&self, profile: &PreferenceProfile) -> CertificateReportDoc {
        let phi = self.phi.as_ref().map(Scalar::to_f64);
        CertificateReportDoc {
            feasible: self.feasible,
            phi,
            normalization: self.normalization.to_f64(),
            normalization_slack: self.normalization_slack.to_f64(),
            facility_totals: self
                .facility_totals
                .iter()
                .enumerate()
                .map(|(i, t)| (profile.facility_label(i).to_string(), t.to_f64()))
                .collect(),
            claimed_phi: self.claimed_phi,
            claimed_gap: phi.zip(self.claimed_phi).map(|(p, c)| p - c),
            tolerance: self.tolerance,
            per_o: self.per_o.clone(),
        }
    }
}

/// `min_i sum_o sum_j w_j d^o(i, j)`: the best `phi` the metrics support.
pub fn implied_phi<T: Scalar>(profile: &PreferenceProfile, metrics: &[Metric<T>]) -> Result<T, MetricError> {
    let totals = facility_totals(profile, metrics)?;
    Ok(totals
        .into_iter()
        .reduce(|a, b| if b < a { b } else { a })
        .expect("at least one facility"))
}

fn facility_totals<T: Scalar>(profile: &PreferenceProfile, metrics: &[Metric<T>]) -> Result<Vec<T>, MetricError> {
    (0..profile.m())
        .map(|i| {
            let costs = metrics
                .iter()
                .map(|d| social_cost(d, profile, i))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(sum(costs))
        })
        .collect()
}

fn consistency_min_slack<T: Scalar>(metric: &Metric<T>, profile: &PreferenceProfile) -> Option<f64> {
    let space = metric.space();
    let mut best: Option<T> = None;
    for (g, group) in profile.groups().iter().enumerate() {
        for pair in group.ranking().windows(2) {
            let slack = metric.dist(space.facility(pair[1]), space.client(g)).clone()
                - metric.dist(space.facility(pair[0]), space.client(g)).clone();
            if best.as_ref().is_none_or(|b| slack < *b) {
                best = Some(slack);
            }
        }
    }
    best.map(|b| b.to_f64())
}

fn triangle_min_slack<T: Scalar>(metric: &Metric<T>) -> Option<f64> {
    let n = metric.space().len();
    let mut best: Option<T> = None;
    for x in 0..n {
        for y in x + 1..n {
            for z in (0..n).filter(|&z| z != x && z != y) {
                let slack = metric.dist(x, z).clone() + metric.dist(z, y).clone() - metric.dist(x, y).clone();
                if best.as_ref().is_none_or(|b| slack < *b) {
                    best = Some(slack);
                }
            }
        }
    }
    best.map(|b| b.to_f64())
}

/// Close every graph, check each metric against the profile and the triangle
/// inequality, check the joint normalization `<= 1 + tol`, and compute the
/// implied bound. Exact scalars with `tol = 0` give an exact verdict.
pub fn verify_certificate<T: Scalar>(cert: &Certificate<T>, tol: &T) -> Result<CertificateReport<T>, CertificateError> {
    let profile = &cert.profile;
    if cert.entries.len() != profile.m() {
        let missing = profile.facility_label(cert.entries.len().min(profile.m().saturating_sub(1)));
        return Err(CertificateError::MissingFacility(missing.to_string()));
    }
    let metrics: Vec<Metric<T>> = cert
        .entries
        .par_iter()
        .map(CertificateEntry::to_metric)
        .collect::<Result<_, _>>()?;
    let expected = PointSpace::from_profile(profile)?;
    if metrics.iter().any(|m| m.space().labels() != expected.labels()) {
        return Err(MetricError::SpaceMismatch.into());
    }

    let per_o: Vec<(FacilityCheck, T)> = metrics
        .par_iter()
        .enumerate()
        .map(|(o, d)| {
            let own = social_cost(d, profile, o)?;
            let check = FacilityCheck {
                o: profile.facility_label(o).to_string(),
                own_cost: own.to_f64(),
                consistency: check_consistency(d, profile, tol)?,
                consistency_min_slack: consistency_min_slack(d, profile),
                triangle: check_triangle(d, tol),
                triangle_min_slack: triangle_min_slack(d),
            };
            Ok((check, own))
        })
        .collect::<Result<_, MetricError>>()?;

    let normalization = sum(per_o.iter().map(|(_, own)| own.clone()));
    let normalization_slack = T::one() - normalization.clone();
    let rows_ok = per_o.iter().all(|(c, _)| c.consistency.passed() && c.triangle.passed());
    let feasible = rows_ok && normalization <= T::one() + tol.clone();
    let totals = facility_totals(profile, &metrics)?;
    let phi = feasible.then(|| {
        totals
            .iter()
            .cloned()
            .reduce(|a, b| if b < a { b } else { a })
            .expect("at least one facility")
    });
    Ok(CertificateReport {
        feasible,
        phi,
        normalization,
        normalization_slack,
        facility_totals: totals,
        per_o: per_o.into_iter().map(|(c, _)| c).collect(),
        claimed_phi: cert.claimed_phi,
        tolerance: tol.to_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;

    fn opposed() -> PreferenceProfile {
        parse_profile("candidates: a b\n1 : a b\n1 : b a\n").unwrap()
    }

    #[test]
    fn zero_metrics_are_vacuous() {
        let p = opposed();
        let space = PointSpace::from_profile(&p).unwrap();
        let cert = Certificate::from_metrics(p, vec![Metric::<f64>::zero(space.clone()), Metric::zero(space)], None);
        let report = verify_certificate(&cert, &0.0).unwrap();
        assert!(report.feasible);
        assert_eq!(report.phi, Some(0.0));
    }

    #[test]
    fn opposed_pair_certificate() {
        // d^a: C1 sits on a, C2 halfway between a and b at distance 1/2 from
        // each. Own cost 1/2, cost of b is 3/2. d^b mirrors it, so both
        // facility totals are 2 under a normalization of exactly 1.
        let p = opposed();
        let space = PointSpace::from_profile(&p).unwrap();
        let mut ga = MetricGraph::<f64>::new(space.clone());
        ga.colocate(&["C1", "a"]).unwrap();
        ga.add_edge("C2", "a", 0.5).unwrap();
        ga.add_edge("C2", "b", 0.5).unwrap();
        let mut gb = MetricGraph::<f64>::new(space);
        gb.colocate(&["C2", "b"]).unwrap();
        gb.add_edge("C1", "a", 0.5).unwrap();
        gb.add_edge("C1", "b", 0.5).unwrap();
        let cert = Certificate {
            profile: p,
            entries: vec![CertificateEntry::Graph(ga), CertificateEntry::Graph(gb)],
            claimed_phi: Some(2.0),
        };
        let report = verify_certificate(&cert, &0.0).unwrap();
        assert!(report.feasible);
        assert_eq!(report.normalization, 1.0);
        assert_eq!(report.phi, Some(2.0));

        let doubled = verify_certificate(&cert.scaled(&2.0), &1e-9).unwrap();
        assert!(!doubled.feasible);
        assert_eq!(doubled.phi, None);
        assert_eq!(doubled.normalization_slack, -1.0);
    }

    #[test]
    fn doc_round_trip_and_missing_entries() {
        let p = opposed();
        let space = PointSpace::from_profile(&p).unwrap();
        let cert = Certificate::from_metrics(
            p,
            vec![Metric::<f64>::zero(space.clone()), Metric::zero(space)],
            Some(0.0),
        );
        let doc = cert.to_doc();
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(Certificate::<f64>::from_json(&text).unwrap(), cert);
        let mut short = doc.clone();
        short.metrics.pop();
        assert!(matches!(
            Certificate::<f64>::from_doc(&short),
            Err(CertificateError::MissingFacility(_))
        ));
    }
}
