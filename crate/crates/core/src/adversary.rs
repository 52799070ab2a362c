//! The adversary LP: given a lottery `q` and a reference facility `o`, find a
//! metric consistent with the profile that maximizes the expected cost of `q`
//! while keeping the cost of `o` at most one.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, Sense, VarId, VarKind};
use crate::metric::{check_consistency, check_triangle, social_cost, Metric, MetricDoc, MetricError, PointSpace};
use crate::profile::{PreferenceProfile, ProfileError};
use crate::scalar::{sum, Scalar};

/// Slack allowed when revalidating solver output.
pub const WITNESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LotteryError {
    #[error("lottery has {got} entries but the profile has {expected} facilities")]
    Length { expected: usize, got: usize },
    #[error("probability of facility #{0} is negative")]
    Negative(usize),
    #[error("probabilities sum to {sum}, not 1")]
    Sum { sum: f64 },
    #[error("unknown facility `{0}` in lottery")]
    UnknownFacility(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("facility #{0} is out of range")]
    NotAFacility(usize),
    #[error("adversary LP for `{o}` reported infeasible; the zero metric is always feasible")]
    UnexpectedInfeasible { o: String },
    #[error("witness metric for `{o}` failed revalidation: {detail}")]
    WitnessRejected { o: String, detail: String },
}

/// Probability distribution over the facilities of a profile, in facility
/// index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lottery<T = f64> {
    probs: Vec<T>,
}

impl<T: Scalar> Lottery<T> {
    /// Strict constructor: entries nonnegative and summing to one within 1e-9
    /// (exactly, for exact scalars).
    pub fn new(probs: Vec<T>) -> Result<Self, LotteryError> {
        let tol = if T::is_exact() { T::zero() } else { T::from_f64(1e-9) };
        Self::check(&probs, &tol)?;
        Ok(Self { probs })
    }

    /// Accept entries summing to one within `tol` and rescale them to sum to
    /// one. Used for lotteries printed with rounding.
    pub fn normalized(probs: Vec<T>, tol: f64) -> Result<Self, LotteryError> {
        Self::check(&probs, &T::from_f64(tol))?;
        let total = sum(probs.iter().cloned());
        Ok(Self {
            probs: probs.into_iter().map(|p| p / total.clone()).collect(),
        })
    }

    fn check(probs: &[T], tol: &T) -> Result<(), LotteryError> {
        if let Some(i) = probs.iter().position(|p| *p < T::zero()) {
            return Err(LotteryError::Negative(i));
        }
        let total = sum(probs.iter().cloned());
        if (total.clone() - T::one()).abs() > *tol {
            return Err(LotteryError::Sum { sum: total.to_f64() });
        }
        Ok(())
    }

    pub fn point_mass(m: usize, facility: usize) -> Self {
        assert!(facility < m);
        let mut probs = vec![T::zero(); m];
        probs[facility] = T::one();
        Self { probs }
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m > 0);
        let p = T::from_ratio(1, m as i64);
        Self { probs: vec![p; m] }
    }

    /// Build from facility labels; facilities not mentioned get zero.
    pub fn from_labels(
        profile: &PreferenceProfile,
        entries: &BTreeMap<String, f64>,
        tol: f64,
    ) -> Result<Self, LotteryError> {
        let mut probs = vec![T::zero(); profile.m()];
        for (label, p) in entries {
            let i = profile
                .facility_index(label)
                .map_err(|_| LotteryError::UnknownFacility(label.clone()))?;
            probs[i] = T::from_f64(*p);
        }
        Self::normalized(probs, tol)
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, facility: usize) -> &T {
        &self.probs[facility]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn to_labels(&self, profile: &PreferenceProfile) -> BTreeMap<String, f64> {
        profile
            .facilities()
            .iter()
            .cloned()
            .zip(self.probs.iter().map(Scalar::to_f64))
            .collect()
    }

    pub fn to_f64(&self) -> Lottery<f64> {
        Lottery {
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Optimal value of an adversary LP; `Unbounded` means distortion +inf.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryValue<T = f64> {
    Finite(T),
    Unbounded,
}

impl<T: Scalar> AdversaryValue<T> {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Self::Unbounded)
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Unbounded => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(v) => v.to_f64(),
            Self::Unbounded => f64::INFINITY,
        }
    }
}

impl<T: Scalar> PartialOrd for AdversaryValue<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Self::Unbounded, Self::Unbounded) => Some(Ordering::Equal),
            (Self::Unbounded, _) => Some(Ordering::Greater),
            (_, Self::Unbounded) => Some(Ordering::Less),
            (Self::Finite(a), Self::Finite(b)) => a.partial_cmp(b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdversaryOutcome<T = f64> {
    /// Reference facility index.
    pub o: usize,
    pub value: AdversaryValue<T>,
    /// Worst-case metric, revalidated; `None` when unbounded.
    pub witness: Option<Metric<T>>,
    pub iterations: usize,
}

/// Worst case over all reference facilities.
#[derive(Debug, Clone)]
pub struct Distortion<T = f64> {
    pub value: AdversaryValue<T>,
    /// First facility attaining the maximum.
    pub o_star: usize,
    pub witness: Option<Metric<T>>,
    /// Per reference facility, in facility order.
    pub per_o: Vec<AdversaryValue<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionDoc {
    pub value: Option<f64>,
    pub o_star: String,
    pub witness: Option<MetricDoc>,
    pub unbounded: bool,
    pub per_o: BTreeMap<String, Option<f64>>,
}

impl<T: Scalar> Distortion<T> {
    pub fn to_doc(&self, profile: &PreferenceProfile) -> DistortionDoc {
        DistortionDoc {
            value: self.value.finite().map(Scalar::to_f64),
            o_star: profile.facility_label(self.o_star).to_string(),
            witness: self.witness.as_ref().map(Metric::to_doc),
            unbounded: self.value.is_unbounded(),
            per_o: self
                .per_o
                .iter()
                .enumerate()
                .map(|(o, v)| (profile.facility_label(o).to_string(), v.finite().map(Scalar::to_f64)))
                .collect(),
        }
    }
}

/// Position of the unordered pair `{i, j}` (i != j) among all pairs of `n`
/// points, enumerated as (0,1), (0,2), ..., (1,2), ...
pub(crate) fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

pub fn distance_var_name(space: &PointSpace, x: usize, y: usize) -> String {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    format!("d[{},{}]", space.label(a), space.label(b))
}

/// Row `d(alt(g,r), g) <= d(alt(g,r+1), g)` for group `g` (0-based) and rank
/// `r` (1-based).
pub fn consistency_row_name(space: &PointSpace, g: usize, r: usize) -> String {
    format!("cons[{},{}]", space.label(space.client(g)), r)
}

/// Row `d(x,y) <= d(x,via) + d(via,y)`; the order of `x` and `y` is irrelevant.
pub fn triangle_row_name(space: &PointSpace, x: usize, y: usize, via: usize) -> String {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    format!("tri[{},{}|{}]", space.label(a), space.label(b), space.label(via))
}

pub const NORMALIZATION_ROW: &str = "norm";

/// Role of one adversary LP row. Point indices refer to [`PointSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryRow {
    Normalization,
    Consistency { group: usize, rank: usize },
    Triangle { x: usize, y: usize, via: usize },
}

impl AdversaryRow {
    /// Number of facilities among the points of a triangle row.
    pub fn facility_count(&self, space: &PointSpace) -> Option<usize> {
        match *self {
            Self::Triangle { x, y, via } => Some([x, y, via].iter().filter(|&&p| space.is_facility(p)).count()),
            _ => None,
        }
    }
}

/// Add one distance variable per unordered pair, named `{prefix}d[x,y]`.
pub(crate) fn add_distance_family<T: Scalar>(
    lp: &mut LinearProgram<T>,
    space: &PointSpace,
    prefix: &str,
) -> Vec<VarId> {
    let n = space.len();
    let mut vars = Vec::with_capacity(pair_count(n));
    for x in 0..n {
        for y in x + 1..n {
            let name = format!("{prefix}{}", distance_var_name(space, x, y));
            vars.push(lp.add_variable(name, VarKind::NonNegative).expect("fresh name"));
        }
    }
    vars
}

/// Consistency rows for every group and rank, then three triangle rows per
/// unordered triple, all over the distance family `vars`.
pub(crate) fn add_metric_rows<T: Scalar>(
    lp: &mut LinearProgram<T>,
    profile: &PreferenceProfile,
    space: &PointSpace,
    vars: &[VarId],
    prefix: &str,
) -> Vec<AdversaryRow> {
    let mut kinds = Vec::new();
    let n = space.len();
    let d = |x: usize, y: usize| vars[pair_slot(n, x, y)];
    for (g, group) in profile.groups().iter().enumerate() {
        let client = space.client(g);
        for (r, pair) in group.ranking().windows(2).enumerate() {
            let near = d(space.facility(pair[0]), client);
            let far = d(space.facility(pair[1]), client);
            lp.add_constraint(
                format!("{prefix}{}", consistency_row_name(space, g, r + 1)),
                vec![(near, T::one()), (far, -T::one())],
                Relation::Le,
                T::zero(),
            )
            .expect("fresh row");
            kinds.push(AdversaryRow::Consistency { group: g, rank: r + 1 });
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            for z in y + 1..n {
                for (a, b, via) in [(x, y, z), (x, z, y), (y, z, x)] {
                    lp.add_constraint(
                        format!("{prefix}{}", triangle_row_name(space, a, b, via)),
                        vec![(d(a, b), T::one()), (d(a, via), -T::one()), (d(via, b), -T::one())],
                        Relation::Le,
                        T::zero(),
                    )
                    .expect("fresh row");
                    kinds.push(AdversaryRow::Triangle { x: a, y: b, via });
                }
            }
        }
    }
    kinds
}

/// Terms of `sum_j w_j d(i, j)` over client groups for facility `i`.
pub(crate) fn facility_cost_terms<T: Scalar>(
    profile: &PreferenceProfile,
    space: &PointSpace,
    vars: &[VarId],
    facility: usize,
) -> Vec<(VarId, T)> {
    let n = space.len();
    let f = space.facility(facility);
    profile
        .groups()
        .iter()
        .enumerate()
        .map(|(g, group)| {
            (
                vars[pair_slot(n, f, space.client(g))],
                T::from_i64(group.weight() as i64),
            )
        })
        .collect()
}

/// Build the adversary LP for lottery `q` and reference facility `o`.
///
/// Variables are one distance per unordered pair of points, named
/// `d[x,y]`. Rows are `norm`, then `cons[Cg,r]` for every group and rank
/// below `m`, then `tri[x,y|z]` for each of the three rotations of every
/// unordered triple.
pub fn build_adversary_lp<T: Scalar>(
    profile: &PreferenceProfile,
    q: &Lottery<T>,
    o: usize,
) -> Result<LinearProgram<T>, AdversaryError> {
    build_adversary_with_rows(profile, q, o).map(|(lp, _)| lp)
}

/// As [`build_adversary_lp`], also returning the role of each row.
pub(crate) fn build_adversary_with_rows<T: Scalar>(
    profile: &PreferenceProfile,
    q: &Lottery<T>,
    o: usize,
) -> Result<(LinearProgram<T>, Vec<AdversaryRow>), AdversaryError> {
    if o >= profile.m() {
        return Err(AdversaryError::NotAFacility(o));
    }
    if q.len() != profile.m() {
        return Err(LotteryError::Length {
            expected: profile.m(),
            got: q.len(),
        }
        .into());
    }
    let space = PointSpace::from_profile(profile)?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let vars = add_distance_family(&mut lp, &space, "");

    let mut objective = Vec::new();
    for (i, qi) in q.probs().iter().enumerate() {
        if qi.is_zero() {
            continue;
        }
        for (v, w) in facility_cost_terms::<T>(profile, &space, &vars, i) {
            objective.push((v, qi.clone() * w));
        }
    }
    lp.set_objective(objective)?;
    lp.add_constraint(
        NORMALIZATION_ROW,
        facility_cost_terms(profile, &space, &vars, o),
        Relation::Le,
        T::one(),
    )?;
    let mut rows = vec![AdversaryRow::Normalization];
    rows.extend(add_metric_rows(&mut lp, profile, &space, &vars, ""));
    Ok((lp, rows))
}

/// Read a distance family out of a primal vector.
pub(crate) fn metric_from_values<T: Scalar>(space: &PointSpace, vars: &[VarId], values: &[T]) -> Metric<T> {
    let n = space.len();
    Metric::from_pair_fn(space.clone(), |x, y| {
        let v = values[vars[pair_slot(n, x, y)].index()].clone();
        if v < T::zero() {
            T::zero()
        } else {
            v
        }
    })
}

/// Check a witness metric: consistent, triangle inequality, and cost of `o`
/// at most one, all within `tol`.
pub fn revalidate_witness<T: Scalar>(
    profile: &PreferenceProfile,
    metric: &Metric<T>,
    o: usize,
    tol: &T,
) -> Result<(), String> {
    revalidate_metric(profile, metric, tol)?;
    let cost = social_cost(metric, profile, o).map_err(|e| e.to_string())?;
    if cost > T::one() + tol.clone() {
        return Err(format!("normalization is {}", cost.to_f64()));
    }
    Ok(())
}

/// Check consistency with the profile and the triangle inequality within `tol`.
pub fn revalidate_metric<T: Scalar>(profile: &PreferenceProfile, metric: &Metric<T>, tol: &T) -> Result<(), String> {
    let consistency = check_consistency(metric, profile, tol).map_err(|e| e.to_string())?;
    if let Some(v) = consistency.violations.first() {
        return Err(format!(
            "consistency violated for {} at rank {} by {:e}",
            metric.space().label(v.group),
            v.rank,
            v.excess
        ));
    }
    let triangle = check_triangle(metric, tol);
    if let Some(v) = triangle.violations.first() {
        return Err(format!(
            "triangle {}-{} via {} violated by {:e}",
            v.x, v.y, v.via, v.excess
        ));
    }
    Ok(())
}

pub(crate) fn witness_tolerance<T: Scalar>() -> T {
    if T::is_exact() {
        T::zero()
    } else {
        T::from_f64(WITNESS_TOLERANCE)
    }
}

/// Solve the adversary LP for `(q, o)`. An unbounded LP yields
/// [`AdversaryValue::Unbounded`]; a finite optimum comes with a revalidated
/// witness metric.
pub fn solve_adversary<T: Scalar>(
    profile: &PreferenceProfile,
    q: &Lottery<T>,
    o: usize,
) -> Result<AdversaryOutcome<T>, AdversaryError> {
    let lp = build_adversary_lp(profile, q, o)?;
    let solution = lp::solve(&lp)?;
    match solution.status {
        LpStatus::Unbounded => Ok(AdversaryOutcome {
            o,
            value: AdversaryValue::Unbounded,
            witness: None,
            iterations: solution.iterations,
        }),
        LpStatus::Infeasible => Err(AdversaryError::UnexpectedInfeasible {
            o: profile.facility_label(o).to_string(),
        }),
        LpStatus::Optimal => {
            let space = PointSpace::from_profile(profile)?;
            // The distance family occupies the first variables of the LP.
            let vars: Vec<VarId> = (0..pair_count(space.len())).map(VarId::from_index).collect();
            let witness = metric_from_values(&space, &vars, &solution.primal);
            revalidate_witness(profile, &witness, o, &witness_tolerance()).map_err(|detail| {
                AdversaryError::WitnessRejected {
                    o: profile.facility_label(o).to_string(),
                    detail,
                }
            })?;
            let value = solution.objective.expect("optimal");
            Ok(AdversaryOutcome {
                o,
                value: AdversaryValue::Finite(value),
                witness: Some(witness),
                iterations: solution.iterations,
            })
        }
    }
}

/// Distortion of lottery `q`: the maximum adversary value over all reference
/// facilities. The per-facility solves run in parallel; ties pick the lowest
/// facility index.
pub fn distortion_of<T: Scalar>(profile: &PreferenceProfile, q: &Lottery<T>) -> Result<Distortion<T>, AdversaryError> {
    let outcomes: Vec<AdversaryOutcome<T>> = (0..profile.m())
        .into_par_iter()
        .map(|o| solve_adversary(profile, q, o))
        .collect::<Result<_, _>>()?;
    let mut best = 0;
    for (o, outcome) in outcomes.iter().enumerate() {
        if outcome.value > outcomes[best].value {
            best = o;
        }
    }
    let per_o = outcomes.iter().map(|x| x.value.clone()).collect();
    let winner = outcomes.into_iter().nth(best).expect("m >= 1");
    Ok(Distortion {
        value: winner.value,
        o_star: best,
        witness: winner.witness,
        per_o,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;

    fn reference() -> PreferenceProfile {
        parse_profile("candidates: a b c d e f g\n3 : c e b a f g d\n3 : d g f a e b c\n1 : b a f g e c d\n").unwrap()
    }

    #[test]
    fn pair_slots_are_a_bijection() {
        let n = 6;
        let mut seen = vec![false; pair_count(n)];
        for i in 0..n {
            for j in i + 1..n {
                let s = pair_slot(n, i, j);
                assert_eq!(s, pair_slot(n, j, i));
                assert!(!seen[s]);
                seen[s] = true;
            }
        }
        assert!(seen.into_iter().all(|x| x));
    }

    #[test]
    fn reference_lp_shape() {
        let p = reference();
        let lp = build_adversary_lp(&p, &Lottery::<f64>::uniform(7), 0).unwrap();
        assert_eq!(lp.variables().len(), 45);
        let rows = lp.constraints();
        assert_eq!(rows.len(), 1 + 18 + 360);
        assert_eq!(rows[0].name, "norm");
        assert_eq!(rows.iter().filter(|r| r.name.starts_with("cons[")).count(), 18);
        assert_eq!(rows.iter().filter(|r| r.name.starts_with("tri[")).count(), 360);
        assert!(rows.iter().skip(1).all(|r| r.rhs == 0.0));
    }

    #[test]
    fn single_facility() {
        let p = parse_profile("candidates: a\n1 : a\n").unwrap();
        let d = distortion_of(&p, &Lottery::<f64>::point_mass(1, 0)).unwrap();
        assert_eq!(d.value, AdversaryValue::Finite(1.0));
    }

    #[test]
    fn unanimous_profile() {
        let p = parse_profile("candidates: a b\n2 : a b\n1 : a b\n").unwrap();
        let d = distortion_of(&p, &Lottery::<f64>::point_mass(2, 0)).unwrap();
        assert!((d.value.to_f64() - 1.0).abs() < 1e-9);
        let bad = Lottery::new(vec![0.9, 0.1]).unwrap();
        let out = solve_adversary(&p, &bad, 0).unwrap();
        assert!(out.value.is_unbounded());
        assert!(out.witness.is_none());
    }

    #[test]
    fn opposed_pair_is_two() {
        let p = parse_profile("candidates: a b\n1 : a b\n1 : b a\n").unwrap();
        let d = distortion_of(&p, &Lottery::<f64>::uniform(2)).unwrap();
        assert!((d.value.to_f64() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lottery_validation() {
        assert!(Lottery::new(vec![0.5, 0.6]).is_err());
        assert!(matches!(Lottery::new(vec![1.5, -0.5]), Err(LotteryError::Negative(1))));
        let l = Lottery::normalized(vec![0.5, 0.500001], 1e-4).unwrap();
        assert!((l.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_reference_facility() {
        let p = reference();
        assert!(matches!(
            build_adversary_lp(&p, &Lottery::<f64>::uniform(7), 7),
            Err(AdversaryError::NotAFacility(7))
        ));
    }
}
