//! Lotteries computable from the rankings alone, evaluated by the adversary
//! LP next to the instance-optimal lottery.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::adversary::{distortion_of, AdversaryValue, Lottery};
use crate::optimal::{optimal_scf, OptimalError};
use crate::profile::PreferenceProfile;
use crate::scalar::Scalar;

/// Probability of each facility equals the share of clients ranking it first.
pub fn random_dictatorship<T: Scalar>(profile: &PreferenceProfile) -> Lottery<T> {
    let n = profile.n() as i64;
    let probs = profile
        .top_choice_weights()
        .into_iter()
        .map(|w| T::from_ratio(w as i64, n))
        .collect();
    Lottery::new(probs).expect("top-choice shares sum to one")
}

pub fn uniform_lottery<T: Scalar>(profile: &PreferenceProfile) -> Lottery<T> {
    Lottery::uniform(profile.m())
}

#[derive(Debug, Clone)]
pub struct BaselineRow<T = f64> {
    pub name: &'static str,
    pub lottery: Lottery<T>,
    pub distortion: AdversaryValue<T>,
    pub o_star: usize,
}

pub const RANDOM_DICTATORSHIP: &str = "random-dictatorship";
pub const UNIFORM: &str = "uniform";
pub const OPTIMAL: &str = "optimal";

/// Distortion of every baseline, followed by the instance-optimal lottery.
pub fn evaluate_baselines<T: Scalar>(profile: &PreferenceProfile) -> Result<Vec<BaselineRow<T>>, OptimalError> {
    let mut rows = Vec::with_capacity(3);
    for (name, lottery) in [
        (RANDOM_DICTATORSHIP, random_dictatorship::<T>(profile)),
        (UNIFORM, uniform_lottery::<T>(profile)),
    ] {
        let d = distortion_of(profile, &lottery)?;
        rows.push(BaselineRow {
            name,
            lottery,
            distortion: d.value,
            o_star: d.o_star,
        });
    }
    let optimal = optimal_scf::<T>(profile)?;
    let mut o_star = 0;
    for (o, v) in optimal.adversary_values.iter().enumerate() {
        if *v > optimal.adversary_values[o_star] {
            o_star = o;
        }
    }
    rows.push(BaselineRow {
        name: OPTIMAL,
        lottery: optimal.q,
        distortion: optimal.adversary_values[o_star].clone(),
        o_star,
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineDoc {
    pub name: String,
    pub distortion: Option<f64>,
    pub unbounded: bool,
    pub o_star: String,
    pub q: BTreeMap<String, f64>,
}

impl<T: Scalar> BaselineRow<T> {
    pub fn to_doc(&self, profile: &PreferenceProfile) -> BaselineDoc {
        BaselineDoc {
            name: self.name.to_string(),
            distortion: self.distortion.finite().map(Scalar::to_f64),
            unbounded: self.distortion.is_unbounded(),
            o_star: profile.facility_label(self.o_star).to_string(),
            q: self.lottery.to_labels(profile),
        }
    }
}

/// Plain-text table with one row per lottery.
pub fn format_table<T: Scalar>(rows: &[BaselineRow<T>], profile: &PreferenceProfile, precision: usize) -> String {
    let width = rows
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(0)
        .max("lottery".len());
    let mut out = String::new();
    let _ = write!(out, "{:<width$}  {:>12}  o*", "lottery", "distortion");
    for f in profile.facilities() {
        let _ = write!(out, "  {:>w$}", f, w = precision + 2);
    }
    out.push('\n');
    for row in rows {
        let value = match &row.distortion {
            AdversaryValue::Finite(v) => format!("{:.*}", precision, v.to_f64()),
            AdversaryValue::Unbounded => "inf".to_string(),
        };
        let _ = write!(
            out,
            "{:<width$}  {:>12}  {:<2}",
            row.name,
            value,
            profile.facility_label(row.o_star)
        );
        for p in row.lottery.probs() {
            let _ = write!(out, "  {:.*}", precision, p.to_f64());
        }
        out.push('\n');
    }
    out
}
