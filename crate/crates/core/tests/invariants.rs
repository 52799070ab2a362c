mod common;

use common::{labels, profiles};
use metric_distortion::adversary::{distortion_of, revalidate_witness, solve_adversary, Lottery};
use metric_distortion::baselines::evaluate_baselines;
use metric_distortion::certificate::{verify_certificate, Certificate, INTERNAL_TOLERANCE};
use metric_distortion::metric::{check_triangle, metric_closure, social_cost, Metric, MetricGraph, PointSpace};
use metric_distortion::optimal::{optimal_dual_metrics, optimal_scf};
use metric_distortion::profile::{format_profile, parse_profile, PreferenceProfile};
use metric_distortion::search::{search_instances, SearchMode, SearchSpec};
use metric_distortion::{Rational, Scalar};
use proptest::prelude::*;

fn lottery(m: usize) -> impl Strategy<Value = Lottery<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0f64..1.0], m).prop_map(|mut w| {
        w[0] += 1e-3;
        let total: f64 = w.iter().sum();
        Lottery::normalized(w.into_iter().map(|x| x / total).collect(), 1e-9).unwrap()
    })
}

fn profile_and_lottery() -> impl Strategy<Value = (PreferenceProfile, Lottery<f64>)> {
    profiles(4, 4, 3).prop_flat_map(|p| {
        let m = p.m();
        (Just(p), lottery(m))
    })
}

fn profile_and_permutation() -> impl Strategy<Value = (PreferenceProfile, Vec<usize>)> {
    profiles(4, 4, 3).prop_flat_map(|p| {
        let m = p.m();
        (Just(p), Just((0..m).collect::<Vec<_>>()).prop_shuffle())
    })
}

/// Graphs on a `points`-point space with random positive edges, connected
/// through a spanning path.
fn graphs(points: usize) -> impl Strategy<Value = MetricGraph<Rational>> {
    let pairs = points * (points - 1) / 2;
    (
        prop::collection::vec(1i64..=20, points - 1),
        prop::collection::vec(prop::option::of(1i64..=20), pairs),
    )
        .prop_map(move |(path, extra)| {
            let space = PointSpace::new(labels(points), 0).unwrap();
            let name = |i: usize| labels(points)[i].clone();
            let mut g = MetricGraph::new(space);
            for (i, w) in path.into_iter().enumerate() {
                g.add_edge(&name(i), &name(i + 1), Rational::from_i64(w)).unwrap();
            }
            let mut k = 0;
            for i in 0..points {
                for j in i + 1..points {
                    if let Some(w) = extra[k] {
                        g.add_edge(&name(i), &name(j), Rational::from_ratio(w, 3)).unwrap();
                    }
                    k += 1;
                }
            }
            g
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimum_is_sandwiched_and_dual_agrees(p in profiles(4, 4, 3)) {
        let result = optimal_scf::<f64>(&p).unwrap();
        prop_assert!(result.gamma >= 1.0 - 1e-9 && result.gamma <= 3.0 + 1e-6, "gamma {}", result.gamma);
        let sum: f64 = result.q.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        let achieved = distortion_of(&p, &result.q).unwrap().value.to_f64();
        prop_assert!((achieved - result.gamma).abs() <= 1e-6);

        let dual = optimal_dual_metrics::<f64>(&p).unwrap();
        prop_assert!((dual.phi - result.gamma).abs() <= 1e-6, "gamma {} phi {}", result.gamma, dual.phi);

        // The dual metrics form a certificate reproducing phi.
        let cert = Certificate::from_metrics(p.clone(), dual.metrics.clone(), Some(dual.phi));
        let report = verify_certificate(&cert, &INTERNAL_TOLERANCE).unwrap();
        prop_assert!(report.feasible);
        prop_assert!((report.phi.unwrap() - dual.phi).abs() <= 1e-6);
        prop_assert!(report.phi.unwrap() <= result.gamma + 1e-6);
    }

    #[test]
    fn coalescing_does_not_change_the_optimum(p in profiles(4, 3, 2)) {
        let coalesced = optimal_scf::<f64>(&p.coalesce()).unwrap().gamma;
        let expanded = optimal_scf::<f64>(&p.expand()).unwrap().gamma;
        prop_assert!((coalesced - expanded).abs() <= 1e-8, "{coalesced} vs {expanded}");
    }

    #[test]
    fn relabelling_facilities_is_equivariant((p, perm) in profile_and_permutation()) {
        let base = optimal_scf::<f64>(&p).unwrap();
        let permuted = p.permute_facilities(&perm);
        let moved = optimal_scf::<f64>(&permuted).unwrap();
        prop_assert!((base.gamma - moved.gamma).abs() <= 1e-8, "{} vs {}", base.gamma, moved.gamma);
        // The relabelled lottery is optimal for the relabelled profile.
        let mut q = vec![0.0; p.m()];
        for (old, &new) in perm.iter().enumerate() {
            q[new] = *base.q.prob(old);
        }
        let carried = distortion_of(&permuted, &Lottery::new(q).unwrap()).unwrap().value.to_f64();
        prop_assert!((carried - base.gamma).abs() <= 1e-8);
    }

    #[test]
    fn witnesses_revalidate((p, q) in profile_and_lottery()) {
        let d = distortion_of(&p, &q).unwrap();
        for o in 0..p.m() {
            let outcome = solve_adversary(&p, &q, o).unwrap();
            prop_assert!(outcome.value <= d.value);
            match (&outcome.value.finite(), &outcome.witness) {
                (Some(v), Some(w)) => {
                    prop_assert!(**v >= 1.0 - 1e-9);
                    prop_assert!(revalidate_witness(&p, w, o, &1e-9).is_ok());
                }
                (None, None) => {}
                _ => prop_assert!(false, "witness present iff finite"),
            }
        }
    }

    #[test]
    fn expanded_profiles_have_the_same_distortion((p, q) in profile_and_lottery()) {
        let a = distortion_of(&p, &q).unwrap().value;
        let b = distortion_of(&p.expand(), &q).unwrap().value;
        prop_assert_eq!(a.is_unbounded(), b.is_unbounded());
        if !a.is_unbounded() {
            prop_assert!((a.to_f64() - b.to_f64()).abs() <= 1e-8);
        }
    }

    #[test]
    fn baselines_never_beat_the_optimum(p in profiles(4, 4, 3)) {
        let rows = evaluate_baselines::<f64>(&p).unwrap();
        let gamma = rows.last().unwrap().distortion.to_f64();
        for row in &rows {
            prop_assert!(row.distortion.to_f64() >= gamma - 1e-6, "{}", row.name);
        }
        prop_assert!(rows[0].distortion.to_f64() < 3.0);
    }

    #[test]
    fn text_format_round_trips(p in profiles(6, 5, 9)) {
        let text = format_profile(&p);
        prop_assert_eq!(parse_profile(&text).unwrap(), p.clone());
        let json = serde_json::to_string(&p.to_doc()).unwrap();
        prop_assert_eq!(PreferenceProfile::from_json(&json).unwrap(), p.clone());
        prop_assert_eq!(p.coalesce().coalesce(), p.coalesce());
        prop_assert_eq!(p.expand().coalesce(), p.coalesce());
        prop_assert_eq!(p.coalesce().n(), p.n());
    }

    #[test]
    fn closure_is_an_idempotent_exact_metric(g in (2usize..=7).prop_flat_map(graphs)) {
        let d = metric_closure(&g).unwrap();
        prop_assert!(check_triangle(&d, &Rational::from_i64(0)).passed());
        for (a, b, w) in g.edges() {
            prop_assert!(d.dist(*a, *b) <= w);
        }
        let again = metric_closure(&MetricGraph::complete(&d)).unwrap();
        prop_assert_eq!(again, d);
    }

    #[test]
    fn closure_commutes_with_scaling(g in (2usize..=6).prop_flat_map(graphs), k in 1i64..=9) {
        let k = Rational::from_ratio(k, 4);
        let scaled_first = metric_closure(&g.scaled(&k)).unwrap();
        let closed_first = metric_closure(&g).unwrap().scaled(&k);
        prop_assert_eq!(scaled_first, closed_first);
    }

    #[test]
    fn costs_and_certificates_scale_linearly(p in profiles(3, 3, 3), k in 1i64..=5) {
        let dual = optimal_dual_metrics::<Rational>(&p).unwrap();
        let k = Rational::from_i64(k);
        for (o, d) in dual.metrics.iter().enumerate() {
            let scaled = d.scaled(&k);
            prop_assert_eq!(social_cost(&scaled, &p, o).unwrap(), social_cost(d, &p, o).unwrap() * k.clone());
        }
        let cert = Certificate::from_metrics(p.clone(), dual.metrics.clone(), None);
        let base = verify_certificate(&cert, &Rational::from_i64(0)).unwrap();
        let scaled = verify_certificate(&cert.scaled(&k), &Rational::from_i64(0)).unwrap();
        prop_assert!(base.feasible);
        prop_assert_eq!(base.phi.clone(), Some(dual.phi.clone()));
        prop_assert_eq!(scaled.normalization, base.normalization * k.clone());
        let cert_ok = k <= Rational::from_i64(1) || dual.normalization == Rational::from_i64(0);
        prop_assert_eq!(scaled.feasible, cert_ok);
    }

    #[test]
    fn exact_and_float_optima_agree(p in profiles(3, 2, 3)) {
        let exact = optimal_scf::<Rational>(&p).unwrap();
        let float = optimal_scf::<f64>(&p).unwrap();
        prop_assert!((exact.gamma.to_f64() - float.gamma).abs() <= 1e-9);
        prop_assert_eq!(exact.q.probs().iter().cloned().fold(Rational::from_i64(0), |a, b| a + b), Rational::from_i64(1));
        let dual = optimal_dual_metrics::<Rational>(&p).unwrap();
        prop_assert_eq!(dual.phi, exact.gamma);
    }
}

#[test]
fn seeded_search_is_deterministic_and_revalidates() {
    let spec = SearchSpec {
        m: 3,
        mode: SearchMode::Sample { seed: 17 },
        max_groups: 3,
        weight_cap: 2,
        threshold: 1.0,
        budget: 25,
        include: Vec::new(),
    };
    let first = search_instances(&spec).unwrap();
    let second = search_instances(&spec).unwrap();
    let key = |r: &metric_distortion::search::SearchReport| {
        r.hits
            .iter()
            .map(|h| (h.profile.clone(), h.gamma.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&first), key(&second));
    assert!(first.failures.is_empty());
    for hit in &first.hits {
        assert!(hit.gamma >= 1.0 - 1e-9 && hit.gamma <= 3.0 + 1e-6);
        let q = Lottery::new(hit.q.clone()).unwrap();
        let achieved = distortion_of(&hit.profile, &q).unwrap().value.to_f64();
        assert!((achieved - hit.gamma).abs() <= 1e-6);
    }
    assert!(first.hits.windows(2).all(|w| w[0].gamma >= w[1].gamma));
}

#[test]
fn verification_does_not_mutate_and_is_deterministic() {
    let p = parse_profile("candidates: a b c\n2 : a b c\n1 : c b a\n").unwrap();
    let dual = optimal_dual_metrics::<f64>(&p).unwrap();
    let cert = Certificate::from_metrics(p, dual.metrics, None);
    let before = cert.clone();
    let a = verify_certificate(&cert, &INTERNAL_TOLERANCE).unwrap();
    let b = verify_certificate(&cert, &INTERNAL_TOLERANCE).unwrap();
    assert_eq!(cert, before);
    assert_eq!(a, b);
}

#[test]
fn zero_metric_has_no_cost() {
    let p = parse_profile("candidates: a b\n1 : a b\n").unwrap();
    let space = PointSpace::from_profile(&p).unwrap();
    let zero = Metric::<f64>::zero(space);
    assert_eq!(social_cost(&zero, &p, 1).unwrap(), 0.0);
}
