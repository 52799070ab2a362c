//! Metrics over clients and facilities, shortest-path closures of weighted
//! graphs, and the metric/consistency checks applied to every LP output.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::PreferenceProfile;
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("point label `{0}` used twice")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("edge {a}-{b} has a negative weight")]
    NegativeWeight { a: String, b: String },
    #[error("graph is disconnected: no path between `{a}` and `{b}`")]
    Disconnected { a: String, b: String },
    #[error("distance matrix must be {expected}x{expected}")]
    Dimension { expected: usize },
    #[error("distance matrix is not symmetric at ({a}, {b})")]
    NotSymmetric { a: String, b: String },
    #[error("negative distance at ({a}, {b})")]
    Negative { a: String, b: String },
    #[error("nonzero self-distance at `{0}`")]
    NonzeroDiagonal(String),
    #[error("metric space does not match the profile's clients and facilities")]
    SpaceMismatch,
    #[error("`{0}` is not a facility of the profile")]
    NotAFacility(String),
}

/// Ordered point set: one point per client group (`C1`, `C2`, ...), then one
/// per facility in profile order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSpace {
    labels: Vec<String>,
    clients: usize,
    lookup: HashMap<String, usize>,
}

impl PointSpace {
    pub fn new(labels: Vec<String>, clients: usize) -> Result<Self, MetricError> {
        assert!(clients <= labels.len());
        let mut lookup = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return Err(MetricError::DuplicatePoint(l.clone()));
            }
        }
        Ok(Self {
            labels,
            clients,
            lookup,
        })
    }

    /// Client groups are labelled `C1..Ck` in profile order.
    pub fn from_profile(profile: &PreferenceProfile) -> Result<Self, MetricError> {
        let mut labels: Vec<String> = (1..=profile.groups().len()).map(client_label).collect();
        labels.extend(profile.facilities().iter().cloned());
        Self::new(labels, profile.groups().len())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, point: usize) -> &str {
        &self.labels[point]
    }

    pub fn index(&self, label: &str) -> Result<usize, MetricError> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| MetricError::UnknownPoint(label.to_string()))
    }

    pub fn client_count(&self) -> usize {
        self.clients
    }

    /// Point index of client group `g`.
    pub fn client(&self, g: usize) -> usize {
        debug_assert!(g < self.clients);
        g
    }

    /// Point index of facility `f`.
    pub fn facility(&self, f: usize) -> usize {
        self.clients + f
    }

    pub fn is_facility(&self, point: usize) -> bool {
        point >= self.clients
    }
}

pub fn client_label(one_based: usize) -> String {
    format!("C{one_based}")
}

/// Symmetric nonnegative distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric<T = f64> {
    space: PointSpace,
    dist: Vec<T>,
}

impl<T: Scalar> Metric<T> {
    pub fn zero(space: PointSpace) -> Self {
        let n = space.len();
        Self {
            space,
            dist: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(space: PointSpace, rows: Vec<Vec<T>>) -> Result<Self, MetricError> {
        let n = space.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MetricError::Dimension { expected: n });
        }
        let dist: Vec<T> = rows.into_iter().flatten().collect();
        let metric = Self { space, dist };
        metric.validate()?;
        Ok(metric)
    }

    /// Build from a function of unordered pairs; the diagonal is zero.
    pub fn from_pair_fn(space: PointSpace, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let n = space.len();
        let mut dist = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                dist[i * n + j] = v.clone();
                dist[j * n + i] = v;
            }
        }
        Self { space, dist }
    }

    fn validate(&self) -> Result<(), MetricError> {
        let n = self.space.len();
        for i in 0..n {
            if !self.dist[i * n + i].is_zero() {
                return Err(MetricError::NonzeroDiagonal(self.space.label(i).to_string()));
            }
            for j in 0..n {
                let v = &self.dist[i * n + j];
                if *v < T::zero() {
                    return Err(MetricError::Negative {
                        a: self.space.label(i).to_string(),
                        b: self.space.label(j).to_string(),
                    });
                }
                if *v != self.dist[j * n + i] {
                    return Err(MetricError::NotSymmetric {
                        a: self.space.label(i).to_string(),
                        b: self.space.label(j).to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &PointSpace {
        &self.space
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> &T {
        &self.dist[i * self.space.len() + j]
    }

    pub fn dist_by_label(&self, a: &str, b: &str) -> Result<&T, MetricError> {
        Ok(self.dist(self.space.index(a)?, self.space.index(b)?))
    }

    /// Rows of the full matrix.
    pub fn rows(&self) -> Vec<Vec<T>> {
        self.dist.chunks(self.space.len()).map(|r| r.to_vec()).collect()
    }

    /// Multiply every distance by `factor`.
    pub fn scaled(&self, factor: &T) -> Self {
        Self {
            space: self.space.clone(),
            dist: self.dist.iter().map(|d| d.clone() * factor.clone()).collect(),
        }
    }

    pub fn to_doc(&self) -> MetricDoc {
        MetricDoc {
            points: self.space.labels().to_vec(),
            dist: self
                .rows()
                .into_iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
        }
    }

    pub fn from_doc(doc: &MetricDoc) -> Result<Self, MetricError> {
        let space = PointSpace::new(doc.points.clone(), 0)?;
        Self::from_doc_in(doc, &space)
    }

    /// Read a metric document and reorder it onto `space`. The document must
    /// name exactly the points of `space`.
    pub fn from_doc_in(doc: &MetricDoc, space: &PointSpace) -> Result<Self, MetricError> {
        let n = space.len();
        if doc.points.len() != n || doc.dist.len() != n || doc.dist.iter().any(|r| r.len() != n) {
            return Err(MetricError::Dimension { expected: n });
        }
        let mut order = Vec::with_capacity(n);
        for label in &doc.points {
            order.push(space.index(label)?);
        }
        let mut rows = vec![vec![T::zero(); n]; n];
        for (a, row) in doc.dist.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                rows[order[a]][order[b]] = T::from_f64(*v);
            }
        }
        Self::from_rows(space.clone(), rows)
    }
}

/// Weighted graph whose shortest-path closure defines a metric. Points in
/// one colocation group sit at mutual distance zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph<T = f64> {
    space: PointSpace,
    edges: Vec<(usize, usize, T)>,
    colocate: Vec<Vec<usize>>,
}

impl<T: Scalar> MetricGraph<T> {
    pub fn new(space: PointSpace) -> Self {
        Self {
            space,
            edges: Vec::new(),
            colocate: Vec::new(),
        }
    }

    pub fn space(&self) -> &PointSpace {
        &self.space
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn colocations(&self) -> &[Vec<usize>] {
        &self.colocate
    }

    pub fn add_edge(&mut self, a: &str, b: &str, weight: T) -> Result<(), MetricError> {
        let (i, j) = (self.space.index(a)?, self.space.index(b)?);
        if weight < T::zero() {
            return Err(MetricError::NegativeWeight {
                a: a.to_string(),
                b: b.to_string(),
            });
        }
        self.edges.push((i, j, weight));
        Ok(())
    }

    pub fn colocate<S: AsRef<str>>(&mut self, labels: &[S]) -> Result<(), MetricError> {
        let group = labels
            .iter()
            .map(|l| self.space.index(l.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        self.colocate.push(group);
        Ok(())
    }

    /// Same graph with every edge weight multiplied by `factor`.
    pub fn scaled(&self, factor: &T) -> Self {
        Self {
            space: self.space.clone(),
            edges: self
                .edges
                .iter()
                .map(|(a, b, w)| (*a, *b, w.clone() * factor.clone()))
                .collect(),
            colocate: self.colocate.clone(),
        }
    }

    /// Complete graph on the points of an existing metric.
    pub fn complete(metric: &Metric<T>) -> Self {
        let n = metric.space().len();
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, metric.dist(i, j).clone()));
            }
        }
        Self {
            space: metric.space().clone(),
            edges,
            colocate: Vec::new(),
        }
    }

    pub fn to_doc(&self) -> MetricGraphDoc {
        MetricGraphDoc {
            points: self.space.labels().to_vec(),
            colocate: self
                .colocate
                .iter()
                .map(|g| g.iter().map(|&p| self.space.label(p).to_string()).collect())
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(a, b, w)| {
                    (
                        self.space.label(*a).to_string(),
                        self.space.label(*b).to_string(),
                        w.to_f64(),
                    )
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &MetricGraphDoc) -> Result<Self, MetricError> {
        let space = PointSpace::new(doc.points.clone(), 0)?;
        Self::from_doc_in(doc, &space)
    }

    /// Read a graph document onto `space`; its point list must be a
    /// permutation of the space's labels.
    pub fn from_doc_in(doc: &MetricGraphDoc, space: &PointSpace) -> Result<Self, MetricError> {
        if doc.points.len() != space.len() {
            return Err(MetricError::Dimension { expected: space.len() });
        }
        let listed = PointSpace::new(doc.points.clone(), 0)?;
        for label in space.labels() {
            listed.index(label)?;
        }
        let mut graph = Self::new(space.clone());
        for group in &doc.colocate {
            graph.colocate(group)?;
        }
        for (a, b, w) in &doc.edges {
            graph.add_edge(a, b, T::from_f64(*w))?;
        }
        Ok(graph)
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// All-pairs shortest-path closure.
///
/// Colocation groups are merged into single nodes first. The Floyd-Warshall
/// sweep is repeated until nothing changes, so floating-point output satisfies
/// `d(x,y) <= d(x,z) + d(z,y)` with no slack.
pub fn metric_closure<T: Scalar>(graph: &MetricGraph<T>) -> Result<Metric<T>, MetricError> {
    let space = graph.space();
    let n = space.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for group in graph.colocations() {
        if let Some((&first, rest)) = group.split_first() {
            for &p in rest {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, p));
                if ra != rb {
                    parent[rb.max(ra)] = ra.min(rb);
                }
            }
        }
    }
    let mut reps: Vec<usize> = Vec::new();
    let mut rep_node: HashMap<usize, usize> = HashMap::new();
    let node_of: Vec<usize> = (0..n)
        .map(|p| {
            let r = find(&mut parent, p);
            *rep_node.entry(r).or_insert_with(|| {
                reps.push(r);
                reps.len() - 1
            })
        })
        .collect();
    let k = reps.len();
    let mut d: Vec<Option<T>> = vec![None; k * k];
    for v in 0..k {
        d[v * k + v] = Some(T::zero());
    }
    for (a, b, w) in graph.edges() {
        let (u, v) = (node_of[*a], node_of[*b]);
        if u == v {
            continue;
        }
        for (x, y) in [(u, v), (v, u)] {
            let slot = &mut d[x * k + y];
            match slot {
                Some(cur) if *cur <= *w => {}
                _ => *slot = Some(w.clone()),
            }
        }
    }
    loop {
        let mut changed = false;
        for via in 0..k {
            for i in 0..k {
                let Some(left) = d[i * k + via].clone() else { continue };
                for j in 0..k {
                    let Some(right) = d[via * k + j].as_ref() else { continue };
                    let candidate = left.clone() + right.clone();
                    let slot = &mut d[i * k + j];
                    let better = match slot {
                        Some(cur) => candidate < *cur,
                        None => true,
                    };
                    if better {
                        *slot = Some(candidate);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            if d[i * k + j].is_none() {
                return Err(MetricError::Disconnected {
                    a: space.label(reps[i]).to_string(),
                    b: space.label(reps[j]).to_string(),
                });
            }
        }
    }
    Ok(Metric::from_pair_fn(space.clone(), |x, y| {
        let (u, v) = (node_of[x], node_of[y]);
        d[u * k + v].clone().expect("connected")
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyViolation {
    pub group: usize,
    pub rank: usize,
    pub preferred: String,
    pub next: String,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConsistencyReport {
    pub checked: usize,
    pub violations: Vec<ConsistencyViolation>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `d(alt(g,r), g) <= d(alt(g,r+1), g) + tol` for every group and rank.
pub fn check_consistency<T: Scalar>(
    metric: &Metric<T>,
    profile: &PreferenceProfile,
    tol: &T,
) -> Result<ConsistencyReport, MetricError> {
    let space = metric.space();
    let expected = PointSpace::from_profile(profile)?;
    if space.labels() != expected.labels() {
        return Err(MetricError::SpaceMismatch);
    }
    let mut report = ConsistencyReport::default();
    for (g, group) in profile.groups().iter().enumerate() {
        let client = space.client(g);
        for (r, pair) in group.ranking().windows(2).enumerate() {
            report.checked += 1;
            let near = metric.dist(space.facility(pair[0]), client);
            let far = metric.dist(space.facility(pair[1]), client);
            if *near > far.clone() + tol.clone() {
                report.violations.push(ConsistencyViolation {
                    group: g,
                    rank: r + 1,
                    preferred: profile.facility_label(pair[0]).to_string(),
                    next: profile.facility_label(pair[1]).to_string(),
                    excess: (near.clone() - far.clone()).to_f64(),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub x: String,
    pub y: String,
    pub via: String,
    /// `d(x,y) - d(x,via) - d(via,y)`
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TriangleReport {
    pub checked: usize,
    pub violations: Vec<TriangleViolation>,
}

impl TriangleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every triangle inequality `d(x,y) <= d(x,z) + d(z,y) + tol`.
pub fn check_triangle<T: Scalar>(metric: &Metric<T>, tol: &T) -> TriangleReport {
    let space = metric.space();
    let n = space.len();
    let mut report = TriangleReport::default();
    for x in 0..n {
        for y in x + 1..n {
            let direct = metric.dist(x, y);
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                report.checked += 1;
                let detour = metric.dist(x, z).clone() + metric.dist(z, y).clone();
                if *direct > detour.clone() + tol.clone() {
                    report.violations.push(TriangleViolation {
                        x: space.label(x).to_string(),
                        y: space.label(y).to_string(),
                        via: space.label(z).to_string(),
                        excess: (direct.clone() - detour).to_f64(),
                    });
                }
            }
        }
    }
    report
}

/// Total weighted distance from `facility` to every client group.
pub fn social_cost<T: Scalar>(
    metric: &Metric<T>,
    profile: &PreferenceProfile,
    facility: usize,
) -> Result<T, MetricError> {
    let space = metric.space();
    if facility >= profile.m() {
        return Err(MetricError::NotAFacility(format!("#{facility}")));
    }
    if space.len() != profile.groups().len() + profile.m() {
        return Err(MetricError::SpaceMismatch);
    }
    let f = space.facility(facility);
    Ok(sum(profile.groups().iter().enumerate().map(|(g, group)| {
        T::from_i64(group.weight() as i64) * metric.dist(f, space.client(g)).clone()
    })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDoc {
    pub points: Vec<String>,
    pub dist: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGraphDoc {
    pub points: Vec<String>,
    #[serde(default)]
    pub colocate: Vec<Vec<String>>,
    pub edges: Vec<(String, String, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;
    use crate::scalar::Rational;

    fn space(labels: &[&str]) -> PointSpace {
        PointSpace::new(labels.iter().map(|s| s.to_string()).collect(), 0).unwrap()
    }

    #[test]
    fn single_edge() {
        let mut g = MetricGraph::new(space(&["u", "v"]));
        g.add_edge("u", "v", 2.5).unwrap();
        let m = metric_closure(&g).unwrap();
        assert_eq!(*m.dist_by_label("u", "v").unwrap(), 2.5);
    }

    #[test]
    fn two_hop_path() {
        let mut g = MetricGraph::new(space(&["u", "v", "w"]));
        g.add_edge("u", "v", 1.0).unwrap();
        g.add_edge("v", "w", 1.0).unwrap();
        let m = metric_closure(&g).unwrap();
        assert_eq!(*m.dist_by_label("u", "w").unwrap(), 2.0);
    }

    #[test]
    fn colocated_points_are_at_zero() {
        let mut g = MetricGraph::new(space(&["a", "b", "c"]));
        g.colocate(&["a", "b"]).unwrap();
        g.add_edge("b", "c", 3.0).unwrap();
        let m = metric_closure(&g).unwrap();
        assert_eq!(*m.dist_by_label("a", "b").unwrap(), 0.0);
        assert_eq!(*m.dist_by_label("a", "c").unwrap(), 3.0);
    }

    #[test]
    fn disconnected_graph_names_pair() {
        let mut g = MetricGraph::new(space(&["a", "b", "c"]));
        g.add_edge("a", "b", 1.0).unwrap();
        let err = metric_closure(&g).unwrap_err();
        assert!(matches!(err, MetricError::Disconnected { .. }));
        assert!(err.to_string().contains("`c`"));
    }

    #[test]
    fn negative_edges_rejected() {
        let mut g = MetricGraph::new(space(&["a", "b"]));
        assert!(g.add_edge("a", "b", -1.0).is_err());
        assert!(g.add_edge("a", "zz", 1.0).is_err());
    }

    #[test]
    fn triangle_violation_reported() {
        let m = Metric::from_rows(
            space(&["a", "b", "c"]),
            vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        )
        .unwrap();
        let report = check_triangle(&m, &0.0);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!((v.x.as_str(), v.y.as_str(), v.via.as_str()), ("a", "b", "c"));
        assert_eq!(v.excess, 1.0);
    }

    #[test]
    fn matrix_validation() {
        let s = space(&["a", "b"]);
        assert!(matches!(
            Metric::from_rows(s.clone(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(MetricError::NotSymmetric { .. })
        ));
        assert!(matches!(
            Metric::from_rows(s.clone(), vec![vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(MetricError::Negative { .. })
        ));
        assert!(matches!(
            Metric::from_rows(s.clone(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]),
            Err(MetricError::NonzeroDiagonal(_))
        ));
        assert!(matches!(
            Metric::from_rows(s, vec![vec![0.0]]),
            Err(MetricError::Dimension { expected: 2 })
        ));
    }

    #[test]
    fn reversed_order_is_inconsistent() {
        let p = parse_profile("candidates: a b\n1 : a b\n").unwrap();
        let s = PointSpace::from_profile(&p).unwrap();
        let mut g = MetricGraph::new(s);
        g.add_edge("a", "C1", 2.0).unwrap();
        g.add_edge("b", "C1", 1.0).unwrap();
        let m = metric_closure(&g).unwrap();
        let report = check_consistency(&m, &p, &1e-9).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rank, 1);
        assert_eq!(report.violations[0].group, 0);
    }

    #[test]
    fn zero_metric_is_consistent_and_costless() {
        let p = parse_profile("candidates: a b c\n2 : a b c\n1 : c b a\n").unwrap();
        let m = Metric::<f64>::zero(PointSpace::from_profile(&p).unwrap());
        assert!(check_consistency(&m, &p, &0.0).unwrap().passed());
        for f in 0..3 {
            assert_eq!(social_cost(&m, &p, f).unwrap(), 0.0);
        }
        assert!(social_cost(&m, &p, 3).is_err());
    }

    #[test]
    fn single_client_cost() {
        let p = parse_profile("candidates: a\n1 : a\n").unwrap();
        let mut g = MetricGraph::new(PointSpace::from_profile(&p).unwrap());
        g.add_edge("a", "C1", 1.0).unwrap();
        let m = metric_closure(&g).unwrap();
        assert_eq!(social_cost(&m, &p, 0).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_space_rejected() {
        let p = parse_profile("candidates: a b\n1 : a b\n").unwrap();
        let m = Metric::<f64>::zero(space(&["x", "y", "z"]));
        assert_eq!(check_consistency(&m, &p, &0.0), Err(MetricError::SpaceMismatch));
    }

    #[test]
    fn facility_label_colliding_with_client_label() {
        let p = parse_profile("candidates: C1 b\n1 : C1 b\n").unwrap();
        assert!(matches!(
            PointSpace::from_profile(&p),
            Err(MetricError::DuplicatePoint(_))
        ));
    }

    #[test]
    fn exact_closure() {
        let mut g = MetricGraph::<Rational>::new(space(&["u", "v", "w"]));
        g.add_edge("u", "v", <Rational as Scalar>::from_f64(0.1)).unwrap();
        g.add_edge("v", "w", <Rational as Scalar>::from_f64(0.2)).unwrap();
        let m = metric_closure(&g).unwrap();
        assert_eq!(*m.dist_by_label("u", "w").unwrap(), <Rational as Scalar>::from_f64(0.3));
    }

    #[test]
    fn json_roundtrip_reorders_points() {
        let doc = MetricGraphDoc {
            points: vec!["b".into(), "a".into()],
            colocate: vec![],
            edges: vec![("a".into(), "b".into(), 0.5)],
        };
        let target = space(&["a", "b"]);
        let g = MetricGraph::<f64>::from_doc_in(&doc, &target).unwrap();
        let m = metric_closure(&g).unwrap();
        let back = Metric::<f64>::from_doc_in(&m.to_doc(), &target).unwrap();
        assert_eq!(back, m);
        let wrong = space(&["a", "c"]);
        assert!(MetricGraph::<f64>::from_doc_in(&doc, &wrong).is_err());
    }
}
