mod common;

use std::collections::BTreeSet;

use num_traits::Zero;
use proptest::prelude::*;
use qiso_core::metric::{lipschitz_constant, random_metric_space, sublevel_set, FiniteMetricSpace, MetricModel};
use qiso_core::transport::{
    enumerate_boxed_dual_vertices, enumerate_dual_vertices, enumerate_lipschitz_vertices, kantorovich_w1,
    solve_transport, wasserstein_inf, wasserstein_p, wasserstein_p_cost, ProbVector, BOXED_GUARD, VERTEX_GUARD,
};
use qiso_core::Rational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{active_set_vertices, random_prob, ratio, spanning_trees, transport_vertices};

fn space(n: usize, seed: u64, graph: bool) -> FiniteMetricSpace<Rational> {
    let model = if graph { MetricModel::ShortestPathGraph } else { MetricModel::EuclideanSample };
    random_metric_space(n, seed, model).unwrap()
}

fn as_set(vs: Vec<Vec<Rational>>) -> BTreeSet<Vec<Rational>> {
    vs.into_iter().collect()
}

fn small_prob(weights: &[u8]) -> ProbVector<Rational> {
    let total: i64 = weights.iter().map(|&w| w as i64).sum::<i64>().max(1);
    let mut mass: Vec<Rational> = weights.iter().map(|&w| ratio(w as i64, total)).collect();
    if weights.iter().all(|&w| w == 0) {
        mass[0] = ratio(1, 1);
    }
    ProbVector::new(mass, 0.0).unwrap()
}

#[test]
fn lipschitz_vertices_of_the_worked_three_point_space() {
    let s = qiso_core::metric::validate_metric(
        vec![
            vec![ratio(0, 1), ratio(1, 1), ratio(2, 1)],
            vec![ratio(1, 1), ratio(0, 1), ratio(2, 1)],
            vec![ratio(2, 1), ratio(2, 1), ratio(0, 1)],
        ],
        0.0,
    )
    .unwrap();
    let bfs = as_set(enumerate_lipschitz_vertices(&s, VERTEX_GUARD).unwrap());
    let mut arcs = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                arcs.push((i, j, s.d(i, j).clone()));
            }
        }
    }
    assert_eq!(bfs, as_set(active_set_vertices(3, 2, &arcs)));
    for f in &bfs {
        assert!(lipschitz_constant(&s, f).unwrap() <= ratio(1, 1));
    }
}

#[test]
fn two_point_dual_vertices_match_the_oracle() {
    let s = space(2, 3, true);
    let boxed = enumerate_boxed_dual_vertices(&s, 1.0, BOXED_GUARD).unwrap();
    let cost = s.cost_matrix(1.0);
    let c = s.max_distance();
    let bound = c.clone() + c;
    let mut arcs = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            arcs.push((i, 2 + j, cost[i][j].clone()));
        }
    }
    for v in 0..4 {
        arcs.push((v, 4, bound.clone()));
        arcs.push((4, v, bound.clone()));
    }
    let oracle: BTreeSet<Vec<Rational>> = active_set_vertices(5, 4, &arcs)
        .into_iter()
        .map(|z| z[..2].iter().cloned().chain(z[2..4].iter().map(|h| -h.clone())).collect())
        .collect();
    let got: BTreeSet<Vec<Rational>> = boxed.into_iter().map(|d| d.f.into_iter().chain(d.g).collect()).collect();
    assert_eq!(got, oracle);
}

#[test]
fn network_simplex_matches_tree_enumeration_on_rectangular_grid() {
    // n = 3 with every marginal pair on the thirds grid and a fixed asymmetric cost
    let trees = spanning_trees(3);
    let cost = [[0i64, 5, 2], [3, 0, 7], [1, 4, 0]];
    let cost_q: Vec<Vec<Rational>> = cost.iter().map(|r| r.iter().map(|&c| ratio(c, 1)).collect()).collect();
    for mu in common::grid(3, &[3]) {
        for nu in common::grid(3, &[3]) {
            let a: Vec<i64> = mu.iter().map(|x| (x * ratio(3, 1)).to_integer().try_into().unwrap()).collect();
            let b: Vec<i64> = nu.iter().map(|x| (x * ratio(3, 1)).to_integer().try_into().unwrap()).collect();
            let best = transport_vertices(3, &trees, &a, &b)
                .iter()
                .map(|v| (0..9).map(|k| v[k] * cost[k / 3][k % 3]).sum::<i64>())
                .min()
                .unwrap();
            let res = solve_transport(
                &ProbVector::new(mu.clone(), 0.0).unwrap(),
                &ProbVector::new(nu.clone(), 0.0).unwrap(),
                &cost_q,
                0.0,
            )
            .unwrap();
            assert_eq!(res.value, ratio(best, 3));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lipschitz_bfs_equals_active_set_enumeration(n in 2usize..=4, seed in any::<u64>(), graph in any::<bool>()) {
        let s = space(n, seed, graph);
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    arcs.push((i, j, s.d(i, j).clone()));
                }
            }
        }
        let bfs = as_set(enumerate_lipschitz_vertices(&s, VERTEX_GUARD).unwrap());
        prop_assert_eq!(bfs, as_set(active_set_vertices(n, n - 1, &arcs)));
    }

    #[test]
    fn dual_bfs_equals_active_set_enumeration(n in 2usize..=3, seed in any::<u64>(), p in 1u32..=3) {
        let s = space(n, seed, true);
        let cost = s.cost_matrix(p as f64);
        let got: BTreeSet<Vec<Rational>> = enumerate_dual_vertices(&cost, VERTEX_GUARD, 0.0)
            .unwrap()
            .into_iter()
            .map(|d| d.f.into_iter().chain(d.g.into_iter().map(|g| -g)).collect())
            .collect();
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                arcs.push((i, n + j, cost[i][j].clone()));
            }
        }
        prop_assert_eq!(got, as_set(active_set_vertices(2 * n, 2 * n - 1, &arcs)));
    }

    #[test]
    fn boxed_and_unboxed_duals_both_attain_the_transport_value(
        n in 2usize..=3,
        seed in any::<u64>(),
        p in 1u32..=2,
        wa in proptest::collection::vec(0u8..5, 3),
        wb in proptest::collection::vec(0u8..5, 3),
    ) {
        let s = space(n, seed, true);
        let mu = small_prob(&wa[..n]);
        let nu = small_prob(&wb[..n]);
        let primal = wasserstein_p_cost(&s, &mu, &nu, p as f64).unwrap().value;
        let best = |vs: Vec<qiso_core::transport::DualPotentials<Rational>>| {
            vs.iter().map(|d| d.evaluate(&mu, &nu)).max().unwrap()
        };
        let unboxed = best(enumerate_dual_vertices(&s.cost_matrix(p as f64), VERTEX_GUARD, 0.0).unwrap());
        let boxed = best(enumerate_boxed_dual_vertices(&s, p as f64, BOXED_GUARD).unwrap());
        prop_assert_eq!(&primal, &unboxed);
        prop_assert_eq!(&primal, &boxed);
    }

    #[test]
    fn optimal_plans_satisfy_complementary_slackness(
        n in 2usize..=6,
        seed in any::<u64>(),
        wa in proptest::collection::vec(0u8..7, 6),
        wb in proptest::collection::vec(0u8..7, 6),
    ) {
        let s = space(n, seed, seed % 2 == 0);
        let mu = small_prob(&wa[..n]);
        let nu = small_prob(&wb[..n]);
        let cost = s.cost_matrix(1.0);
        let res = solve_transport(&mu, &nu, &cost, 0.0).unwrap();
        prop_assert!(res.duals.is_feasible(&cost, 0.0));
        prop_assert_eq!(res.plan.mu(), mu.mass());
        prop_assert_eq!(res.plan.nu(), nu.mass());
        for i in 0..n {
            for j in 0..n {
                if !res.plan.plan()[i][j].is_zero() {
                    prop_assert_eq!(&res.duals.f[i] + &res.duals.g[j], cost[i][j].clone());
                }
            }
        }
        prop_assert_eq!(res.duals.objective.clone().unwrap(), res.value.clone());
        let (kr, witness) = kantorovich_w1(&s, &mu, &nu).unwrap();
        prop_assert_eq!(kr, res.value);
        prop_assert!(lipschitz_constant(&s, &witness).unwrap() <= ratio(1, 1));
    }

    #[test]
    fn w1_is_a_metric_on_measures(
        n in 2usize..=5,
        seed in any::<u64>(),
        w in proptest::collection::vec(0u8..5, 15),
    ) {
        let s = space(n, seed, true);
        let a = small_prob(&w[..n]);
        let b = small_prob(&w[5..5 + n]);
        let c = small_prob(&w[10..10 + n]);
        let w1 = |x: &ProbVector<Rational>, y: &ProbVector<Rational>| wasserstein_p_cost(&s, x, y, 1.0).unwrap().value;
        prop_assert!(w1(&a, &a).is_zero());
        prop_assert_eq!(w1(&a, &b), w1(&b, &a));
        prop_assert!(w1(&a, &c) <= w1(&a, &b) + w1(&b, &c));
    }

    #[test]
    fn bottleneck_is_a_realized_distance_with_a_certificate_below(
        n in 2usize..=6,
        seed in any::<u64>(),
        wa in proptest::collection::vec(0u8..5, 6),
        wb in proptest::collection::vec(0u8..5, 6),
    ) {
        let s = space(n, seed, false);
        let mu = small_prob(&wa[..n]);
        let nu = small_prob(&wb[..n]);
        let res = wasserstein_inf(&s, &mu, &nu).unwrap();
        prop_assert!(s.realized_distances().contains(&res.r));
        prop_assert!(res.plan.is_supported_on(&sublevel_set(&s, &res.r), 0.0));
        if let Some(v) = res.below {
            prop_assert!(v.nu_of_neighborhood < v.mu_of_subset);
        } else {
            prop_assert!(res.r.is_zero());
        }
        let w2 = wasserstein_p(&s, &mu, &nu, 2.0).unwrap();
        prop_assert!(w2 <= qiso_core::Scalar::to_f64(&res.r) + 1e-12);
    }
}

#[test]
fn random_instances_agree_with_tree_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trees = spanning_trees(3);
    for _ in 0..200 {
        let mu = random_prob(&mut rng, 3);
        let nu = random_prob(&mut rng, 3);
        let cost: Vec<Vec<i64>> =
            (0..3).map(|_| (0..3).map(|_| rand::Rng::random_range(&mut rng, 0..10)).collect()).collect();
        // random_prob totals are at most 18, so every denominator divides lcm(1..=18)
        let scale = ratio(12_252_240, 1);
        let ints = |v: &ProbVector<Rational>| -> Vec<i64> {
            v.mass().iter().map(|x| (x * &scale).to_integer().try_into().unwrap()).collect()
        };
        let best = transport_vertices(3, &trees, &ints(&mu), &ints(&nu))
            .iter()
            .map(|v| (0..9).map(|k| v[k] * cost[k / 3][k % 3]).sum::<i64>())
            .min()
            .unwrap();
        let cq: Vec<Vec<Rational>> = cost.iter().map(|r| r.iter().map(|&c| ratio(c, 1)).collect()).collect();
        let got = solve_transport(&mu, &nu, &cq, 0.0).unwrap().value;
        assert_eq!(got, Rational::from_integer(best.into()) / scale);
    }
}
