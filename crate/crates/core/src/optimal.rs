//! Instance-optimal lotteries.
//!
//! The min-max LP is assembled by dualizing each adversary LP and replacing
//! its fixed objective by the symbolic lottery `q`. Its dual, with one
//! distance family per reference facility, is built directly and solved as
//! an independent check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    add_distance_family, add_metric_rows, build_adversary_with_rows, distortion_of, facility_cost_terms,
    metric_from_values, revalidate_metric, witness_tolerance, AdversaryError, AdversaryRow, AdversaryValue, Lottery,
    LotteryError,
};
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, Sense, VarId, VarKind};
use crate::metric::{Metric, MetricDoc, MetricError, PointSpace};
use crate::profile::PreferenceProfile;
use crate::scalar::{sum, Scalar};

/// `|value - gamma|` at or below this marks a reference facility as tight.
pub const TIGHT_TOLERANCE: f64 = 1e-6;
/// Allowed deviation of the optimal lottery's mass from one.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Negative lottery entries down to this are solver noise.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimalError {
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error("LP finished with status {0:?}")]
    NotOptimal(LpStatus),
    #[error("optimal lottery has mass {sum}, expected 1")]
    Mass { sum: f64 },
    #[error("optimal lottery reaches distortion {achieved}, above the LP value {gamma}")]
    NotAchieved { gamma: f64, achieved: f64 },
    #[error("optimal lottery entry for `{facility}` is {value}")]
    NegativeMass { facility: String, value: f64 },
    #[error("dual metric for `{o}` failed revalidation: {detail}")]
    DualMetricRejected { o: String, detail: String },
}

/// Which adversary row a multiplier belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierFamily {
    Normalization,
    Consistency,
    /// Triangle row whose triple contains this many facilities.
    Triangle {
        facilities: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier<T = f64> {
    pub o: usize,
    pub family: MultiplierFamily,
    /// Adversary row name, e.g. `tri[C1,a|b]`.
    pub row: String,
    pub value: T,
}

/// The min-max LP together with the variable layout needed to read it back.
#[derive(Debug, Clone)]
pub struct BestDistModel<T = f64> {
    pub lp: LinearProgram<T>,
    pub q: Vec<VarId>,
    pub gamma: VarId,
    /// Per reference facility: multiplier variable, role, adversary row name.
    pub blocks: Vec<Vec<(VarId, AdversaryRow, String)>>,
}

/// Name of the min-max LP variable multiplying adversary row `row` of
/// reference facility `o`.
pub fn multiplier_var_name(o_label: &str, row: &str) -> String {
    format!("{o_label}:y[{row}]")
}

pub fn lottery_var_name(facility: &str) -> String {
    format!("q[{facility}]")
}

pub const GAMMA_VAR: &str = "gamma";
pub const MASS_ROW: &str = "mass";

/// Assemble the min-max LP mechanically.
///
/// For every reference facility `o` the adversary LP is dualized; each dual
/// row `sum_r A[r][v] y[r] >= c_v` has its constant `c_v` replaced by the
/// symbolic `sum_i q_i c^(i)_v`, where `c^(i)` is the adversary objective for
/// the point mass on `i`. The dual objective `b . y` is bounded by `gamma`.
/// Rows and multipliers are prefixed with the label of `o`.
pub fn build_best_dist_model<T: Scalar>(profile: &PreferenceProfile) -> Result<BestDistModel<T>, OptimalError> {
    let m = profile.m();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let q: Vec<VarId> = profile
        .facilities()
        .iter()
        .map(|f| lp.add_variable(lottery_var_name(f), VarKind::NonNegative))
        .collect::<Result<_, _>>()?;
    let gamma = lp.add_variable(GAMMA_VAR, VarKind::NonNegative)?;
    lp.set_objective(vec![(gamma, T::one())])?;

    // Objective coefficients of the adversary LP for each point mass.
    let mut point_costs: Vec<Vec<T>> = Vec::with_capacity(m);
    for i in 0..m {
        let (adv, _) = build_adversary_with_rows(profile, &Lottery::<T>::point_mass(m, i), 0)?;
        let mut dense = vec![T::zero(); adv.variables().len()];
        for (v, c) in adv.objective() {
            dense[v.index()] = c.clone();
        }
        point_costs.push(dense);
    }

    let mut blocks = Vec::with_capacity(m);
    for o in 0..m {
        let label = profile.facility_label(o);
        let (adv, kinds) = build_adversary_with_rows(profile, &Lottery::<T>::point_mass(m, o), o)?;
        let dual = adv.dualize();
        let mut remap = Vec::with_capacity(dual.variables().len());
        let mut block = Vec::with_capacity(dual.variables().len());
        for ((var, kind), row) in dual.variables().iter().zip(&kinds).zip(adv.constraints()) {
            let id = lp.add_variable(format!("{label}:{}", var.name), var.kind)?;
            remap.push(id);
            block.push((id, *kind, row.name.clone()));
        }
        for (k, row) in dual.constraints().iter().enumerate() {
            let mut terms: Vec<(VarId, T)> = row.terms.iter().map(|(v, c)| (remap[v.index()], c.clone())).collect();
            for (i, costs) in point_costs.iter().enumerate() {
                if !costs[k].is_zero() {
                    terms.push((q[i], -costs[k].clone()));
                }
            }
            lp.add_constraint(format!("{label}:{}", row.name), terms, row.relation, T::zero())?;
        }
        let mut bound: Vec<(VarId, T)> = dual
            .objective()
            .iter()
            .map(|(v, c)| (remap[v.index()], c.clone()))
            .collect();
        bound.push((gamma, -T::one()));
        lp.add_constraint(format!("{label}:value"), bound, Relation::Le, T::zero())?;
        blocks.push(block);
    }
    lp.add_constraint(
        MASS_ROW,
        q.iter().map(|&v| (v, T::one())).collect(),
        Relation::Ge,
        T::one(),
    )?;
    Ok(BestDistModel { lp, q, gamma, blocks })
}

pub fn build_best_dist<T: Scalar>(profile: &PreferenceProfile) -> Result<LinearProgram<T>, OptimalError> {
    build_best_dist_model(profile).map(|model| model.lp)
}

/// The dual of the min-max LP, with variables `phi` and one distance family
/// `o:d[x,y]` per reference facility `o`. Rows: `norm`, `phi[i]` per
/// facility, then the prefixed consistency and triangle rows of each family.
#[derive(Debug, Clone)]
pub struct BestDistDualModel<T = f64> {
    pub lp: LinearProgram<T>,
    pub phi: VarId,
    pub families: Vec<Vec<VarId>>,
}

pub const PHI_VAR: &str = "phi";

pub fn build_best_dist_dual_model<T: Scalar>(
    profile: &PreferenceProfile,
) -> Result<BestDistDualModel<T>, OptimalError> {
    let m = profile.m();
    let space = PointSpace::from_profile(profile)?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let phi = lp.add_variable(PHI_VAR, VarKind::NonNegative)?;
    lp.set_objective(vec![(phi, T::one())])?;
    let families: Vec<Vec<VarId>> = (0..m)
        .map(|o| add_distance_family(&mut lp, &space, &format!("{}:", profile.facility_label(o))))
        .collect();

    let mut norm = Vec::new();
    for (o, vars) in families.iter().enumerate() {
        norm.extend(facility_cost_terms::<T>(profile, &space, vars, o));
    }
    lp.add_constraint("norm", norm, Relation::Le, T::one())?;
    for i in 0..m {
        let mut terms = vec![(phi, T::one())];
        for vars in &families {
            terms.extend(
                facility_cost_terms::<T>(profile, &space, vars, i)
                    .into_iter()
                    .map(|(v, w)| (v, -w)),
            );
        }
        lp.add_constraint(
            format!("phi[{}]", profile.facility_label(i)),
            terms,
            Relation::Le,
            T::zero(),
        )?;
    }
    for (o, vars) in families.iter().enumerate() {
        add_metric_rows(
            &mut lp,
            profile,
            &space,
            vars,
            &format!("{}:", profile.facility_label(o)),
        );
    }
    Ok(BestDistDualModel { lp, phi, families })
}

pub fn build_best_dist_dual<T: Scalar>(profile: &PreferenceProfile) -> Result<LinearProgram<T>, OptimalError> {
    build_best_dist_dual_model(profile).map(|model| model.lp)
}

#[derive(Debug, Clone)]
pub struct OptimalResult<T = f64> {
    pub gamma: T,
    pub q: Lottery<T>,
    /// Facilities whose adversary value against `q` is within
    /// [`TIGHT_TOLERANCE`] of `gamma`.
    pub tight_os: Vec<usize>,
    /// Adversary value of `q` for every reference facility.
    pub adversary_values: Vec<AdversaryValue<T>>,
    /// Nonzero multipliers of the adversary rows at the optimum.
    pub multipliers: Vec<Multiplier<T>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalDoc {
    pub gamma: f64,
    pub q: BTreeMap<String, f64>,
    pub tight_os: Vec<String>,
    pub dual_phi: Option<f64>,
}

impl<T: Scalar> OptimalResult<T> {
    pub fn to_doc(&self, profile: &PreferenceProfile, dual_phi: Option<f64>) -> OptimalDoc {
        OptimalDoc {
            gamma: self.gamma.to_f64(),
            q: self.q.to_labels(profile),
            tight_os: self
                .tight_os
                .iter()
                .map(|&o| profile.facility_label(o).to_string())
                .collect(),
            dual_phi,
        }
    }
}

/// Solve the min-max LP and read off the optimal lottery.
pub fn optimal_scf<T: Scalar>(profile: &PreferenceProfile) -> Result<OptimalResult<T>, OptimalError> {
    let model = build_best_dist_model::<T>(profile)?;
    let solution = lp::solve(&model.lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(OptimalError::NotOptimal(solution.status));
    }
    let gamma = solution.value(model.gamma).clone();

    let clamp = if T::is_exact() {
        T::zero()
    } else {
        T::from_f64(CLAMP_TOLERANCE)
    };
    let mut probs = Vec::with_capacity(model.q.len());
    for (i, &v) in model.q.iter().enumerate() {
        let p = solution.value(v).clone();
        if p < -clamp.clone() {
            return Err(OptimalError::NegativeMass {
                facility: profile.facility_label(i).to_string(),
                value: p.to_f64(),
            });
        }
        probs.push(if p < T::zero() { T::zero() } else { p });
    }
    // Surplus mass is an alternative optimum: scaling q down only lowers the
    // adversary objective. A deficit means the mass row was violated.
    let mass = sum(probs.iter().cloned());
    if (T::one() - mass.clone()).to_f64() > MASS_TOLERANCE {
        return Err(OptimalError::Mass { sum: mass.to_f64() });
    }
    let probs = probs.into_iter().map(|p| p / mass.clone()).collect();
    let q = Lottery::normalized(probs, MASS_TOLERANCE)?;

    let mut multipliers = Vec::new();
    for (o, block) in model.blocks.iter().enumerate() {
        let space = PointSpace::from_profile(profile)?;
        for (var, kind, row) in block {
            let value = solution.value(*var).clone();
            if value.is_zero() {
                continue;
            }
            let family = match kind {
                AdversaryRow::Normalization => MultiplierFamily::Normalization,
                AdversaryRow::Consistency { .. } => MultiplierFamily::Consistency,
                AdversaryRow::Triangle { .. } => MultiplierFamily::Triangle {
                    facilities: kind.facility_count(&space).expect("triangle row"),
                },
            };
            multipliers.push(Multiplier {
                o,
                family,
                row: row.clone(),
                value,
            });
        }
    }

    let distortion = distortion_of(profile, &q)?;
    let tight = T::from_f64(TIGHT_TOLERANCE);
    if distortion.value > AdversaryValue::Finite(gamma.clone() + tight.clone()) {
        return Err(OptimalError::NotAchieved {
            gamma: gamma.to_f64(),
            achieved: distortion.value.to_f64(),
        });
    }
    let tight_os = distortion
        .per_o
        .iter()
        .enumerate()
        .filter(|(_, v)| match v {
            AdversaryValue::Finite(v) => (v.clone() - gamma.clone()).abs() <= tight,
            AdversaryValue::Unbounded => false,
        })
        .map(|(o, _)| o)
        .collect();

    Ok(OptimalResult {
        gamma,
        q,
        tight_os,
        adversary_values: distortion.per_o,
        multipliers,
        iterations: solution.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct DualMetricsResult<T = f64> {
    pub phi: T,
    /// One metric per reference facility, in facility order.
    pub metrics: Vec<Metric<T>>,
    /// `sum_o sum_j w_j d^o(o, j)`.
    pub normalization: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualMetricsDoc {
    pub phi: f64,
    pub normalization: f64,
    pub metrics: BTreeMap<String, MetricDoc>,
}

impl<T: Scalar> DualMetricsResult<T> {
    pub fn to_doc(&self, profile: &PreferenceProfile) -> DualMetricsDoc {
        DualMetricsDoc {
            phi: self.phi.to_f64(),
            normalization: self.normalization.to_f64(),
            metrics: self
                .metrics
                .iter()
                .enumerate()
                .map(|(o, d)| (profile.facility_label(o).to_string(), d.to_doc()))
                .collect(),
        }
    }
}

/// Solve the dual LP and package each distance family as a metric. Every
/// metric is revalidated, as are the normalization and `phi` rows.
pub fn optimal_dual_metrics<T: Scalar>(profile: &PreferenceProfile) -> Result<DualMetricsResult<T>, OptimalError> {
    let model = build_best_dist_dual_model::<T>(profile)?;
    let solution = lp::solve(&model.lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(OptimalError::NotOptimal(solution.status));
    }
    let space = PointSpace::from_profile(profile)?;
    let tol = witness_tolerance::<T>();
    let metrics: Vec<Metric<T>> = model
        .families
        .iter()
        .map(|vars| metric_from_values(&space, vars, &solution.primal))
        .collect();
    for (o, metric) in metrics.iter().enumerate() {
        revalidate_metric(profile, metric, &tol).map_err(|detail| OptimalError::DualMetricRejected {
            o: profile.facility_label(o).to_string(),
            detail,
        })?;
    }
    let normalization = sum(metrics
        .iter()
        .enumerate()
        .map(|(o, d)| crate::metric::social_cost(d, profile, o))
        .collect::<Result<Vec<_>, _>>()?);
    if normalization > T::one() + tol.clone() {
        return Err(OptimalError::DualMetricRejected {
            o: "*".into(),
            detail: format!("normalization is {}", normalization.to_f64()),
        });
    }
    let phi = solution.value(model.phi).clone();
    let bound = crate::certificate::implied_phi(profile, &metrics)?;
    if phi > bound + tol {
        return Err(OptimalError::DualMetricRejected {
            o: "*".into(),
            detail: "phi exceeds the bound implied by the metrics".into(),
        });
    }
    Ok(DualMetricsResult {
        phi,
        metrics,
        normalization,
        iterations: solution.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;

    #[test]
    fn value_rows_have_one_multiplier() {
        let p = parse_profile("candidates: a b c\n1 : a b c\n2 : c b a\n").unwrap();
        let lp = build_best_dist::<f64>(&p).unwrap();
        for o in ["a", "b", "c"] {
            let row = &lp.constraints()[lp.row_index(&format!("{o}:value")).unwrap()];
            assert_eq!(row.terms.len(), 2, "{row:?}");
            let names: Vec<&str> = row
                .terms
                .iter()
                .map(|(v, _)| lp.variables()[v.index()].name.as_str())
                .collect();
            assert_eq!(names, vec!["gamma".to_string(), multiplier_var_name(o, "norm")]);
        }
    }

    #[test]
    fn single_facility() {
        let p = parse_profile("candidates: a\n2 : a\n").unwrap();
        let r = optimal_scf::<f64>(&p).unwrap();
        assert!((r.gamma - 1.0).abs() < 1e-9);
        assert_eq!(r.q.probs(), &[1.0]);
        let d = optimal_dual_metrics::<f64>(&p).unwrap();
        assert!((d.phi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn opposed_pair() {
        let p = parse_profile("candidates: a b\n1 : a b\n1 : b a\n").unwrap();
        let r = optimal_scf::<f64>(&p).unwrap();
        assert!((r.gamma - 2.0).abs() < 1e-9);
        assert!((r.q.probs()[0] - 0.5).abs() < 1e-9);
        assert_eq!(r.tight_os, vec![0, 1]);
        let d = optimal_dual_metrics::<f64>(&p).unwrap();
        assert!((d.phi - 2.0).abs() < 1e-9);
    }
}
