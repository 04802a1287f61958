mod common;

use adwords_core::gen::{gen_random_adwords, RandomAdwordsParams};
use adwords_core::lp::{
    solve, solve_offline_adwords, solve_sampled_plp, StandardLp,
};
use adwords_core::model::{AdwordsInstance, Agent, AgentOption, Bid, Bidder, PlpInstance, Query, Resource};
use adwords_core::online::{
    check_alpha_consistency, certify, msvv_score, run, scaled_bid, EngineOptions, Policy, K,
};
use adwords_core::plp::{
    adwords_gain_rule, gain, max_dual_violation, run_with_prices, solve_sampled_dual, Warmup,
};
use proptest::prelude::*;

fn adwords_strategy() -> impl Strategy<Value = AdwordsInstance> {
    (1usize..4, 1usize..12).prop_flat_map(|(nb, nq)| {
        let budgets = prop::collection::vec(0.5f64..2.0, nb);
        let bids = prop::collection::vec(prop::collection::vec(prop::option::of(0.01f64..0.6), nb), nq);
        (budgets, bids).prop_map(|(budgets, bids)| {
            let bidders = budgets
                .iter()
                .enumerate()
                .map(|(u, &budget)| Bidder { id: format!("u{u}"), budget })
                .collect();
            let queries = bids
                .into_iter()
                .enumerate()
                .map(|(v, row)| {
                    let b = row
                        .into_iter()
                        .enumerate()
                        .filter_map(|(u, w)| w.map(|amount| Bid { bidder: u, amount }))
                        .collect();
                    Query::new(format!("v{v}"), b)
                })
                .collect();
            AdwordsInstance::new(bidders, queries)
        })
    })
}

fn plp_strategy() -> impl Strategy<Value = PlpInstance> {
    (1usize..3, 2usize..10, 1usize..4).prop_flat_map(|(m, n, q)| {
        let caps = prop::collection::vec(0.5f64..3.0, m);
        let options =
            prop::collection::vec(prop::collection::vec((0.1f64..1.5, prop::collection::vec(0.05f64..1.0, m)), 1..=q), n);
        (caps, options).prop_map(|(caps, agents)| {
            let resources =
                caps.iter().enumerate().map(|(j, &capacity)| Resource { id: format!("r{j}"), capacity }).collect();
            let agents = agents
                .into_iter()
                .enumerate()
                .map(|(i, opts)| Agent {
                    id: format!("a{i}"),
                    options: opts
                        .into_iter()
                        .map(|(v, cons)| AgentOption::new(v, cons.into_iter().enumerate().collect()))
                        .collect(),
                })
                .collect();
            PlpInstance::new(resources, agents)
        })
    })
}

fn tie_argmax(scores: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (u, s) in scores {
        if best.is_none_or(|(_, b)| s > b + 1e-12 * b.abs()) {
            best = Some((u, s));
        }
    }
    best.map(|(u, _)| u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_lps_match_vertex_enumeration(seed in any::<u64>(), vars in 1usize..6, rows in 1usize..6) {
        let mut rng = adwords_core::gen::Stream::new(seed);
        let (c, a, b) = common::random_lp(&mut rng, vars, rows);
        let lp = StandardLp::from_dense(&c, &a, &b).unwrap();
        let sol = solve(&lp).unwrap();
        let oracle = common::vertex_enumeration(&c, &a, &b).unwrap();
        prop_assert!((sol.objective - oracle).abs() <= 1e-7);
        // weak duality against a scaled-down feasible point
        let x: Vec<f64> = sol.primal.iter().map(|v| 0.5 * v).collect();
        prop_assert!(lp.primal_value(&x) <= sol.dual_objective + 1e-6 * (1.0 + sol.dual_objective.abs()));
    }

    #[test]
    fn to_plp_preserves_value_and_bid_ratio(inst in adwords_strategy(), picks in prop::collection::vec(any::<prop::sample::Index>(), 12)) {
        let plp = inst.to_plp();
        let queries = inst.plp_agent_queries();
        let mut spent = vec![0.0; inst.num_bidders()];
        let mut used = vec![0.0; plp.m()];
        let (mut ad_value, mut plp_value) = (0.0, 0.0);
        for (i, &v) in queries.iter().enumerate() {
            let bids: Vec<&Bid> = inst.queries()[v].positive_bids().collect();
            let k = picks[i].index(bids.len());
            let b = bids[k];
            if spent[b.bidder] + b.amount > inst.budget(b.bidder) {
                continue;
            }
            spent[b.bidder] += b.amount;
            ad_value += b.amount;
            let opt = &plp.agents()[i].options[k];
            for &(j, a) in opt.consumption() {
                used[j] += a;
            }
            plp_value += opt.value;
        }
        prop_assert_eq!(ad_value, plp_value);
        prop_assert!(used.iter().enumerate().all(|(j, &u)| u <= plp.capacity(j)));
        prop_assert_eq!(inst.small_bid_ratio(), plp.max_normalized_consumption());
    }

    #[test]
    fn online_runs_are_budget_safe_and_certified(inst in adwords_strategy(), truncate in any::<bool>()) {
        for policy in [Policy::Greedy, Policy::Msvv] {
            let t = run(&inst, policy, EngineOptions { truncate }).unwrap();
            for u in 0..inst.num_bidders() {
                prop_assert!(t.state.spent[u] <= inst.budget(u) * (1.0 + 1e-9));
            }
            prop_assert_eq!(&run(&inst, policy, EngineOptions { truncate }).unwrap(), &t);
            prop_assert!(t.replay(&inst).is_ok());
            let cert = certify(&t, &inst).unwrap();
            if !truncate {
                prop_assert!(cert.dual_feasible, "{:?}", cert);
            }
            let opt = solve_offline_adwords(&inst).unwrap().objective;
            prop_assert!(t.state.primal <= opt * (1.0 + 1e-6) + 1e-9);
        }
    }

    #[test]
    fn greedy_dual_bound_holds_at_every_step(inst in adwords_strategy()) {
        let t = run(&inst, Policy::Greedy, EngineOptions::default()).unwrap();
        let mut spent = vec![0.0; inst.num_bidders()];
        let mut alpha = vec![0.0; inst.num_bidders()];
        let max_bid = inst.queries().iter().flat_map(|q| q.positive_bids()).map(|b| b.amount).fold(0.0, f64::max);
        for d in &t.decisions {
            if let Some(u) = d.bidder {
                spent[u] += d.earned;
            }
            for up in &d.alpha_updates {
                alpha[up.bidder] = up.alpha;
            }
            let exhausted: Vec<usize> = (0..spent.len()).filter(|&u| alpha[u] >= 1.0).collect();
            let correction: f64 = exhausted.iter().map(|&u| inst.budget(u) - spent[u]).sum();
            prop_assert!(d.dual <= 2.0 * d.primal + correction + 1e-9);
            prop_assert!(correction <= exhausted.len() as f64 * max_bid + 1e-9);
        }
    }

    #[test]
    fn msvv_accounting_sandwich_and_argmax_equivalence(inst in adwords_strategy()) {
        let t = run(&inst, Policy::Msvv, EngineOptions::default()).unwrap();
        prop_assert!(check_alpha_consistency(&t).is_ok());
        let mut spent = vec![0.0; inst.num_bidders()];
        let (mut p0, mut d0) = (0.0, 0.0);
        for (v, d) in t.decisions.iter().enumerate() {
            prop_assert!(((d.dual - d0) - K * (d.primal - p0)).abs() <= 1e-9);
            let available = || inst.queries()[v].positive_bids().filter(|b| {
                inst.budget(b.bidder) - spent[b.bidder] >= b.amount - 1e-9 * inst.budget(b.bidder)
            });
            let x = |u: usize| (spent[u] / inst.budget(u)).clamp(0.0, 1.0);
            let a = tie_argmax(available().map(|b| (b.bidder, msvv_score(x(b.bidder), b.amount))));
            let s = tie_argmax(available().map(|b| (b.bidder, scaled_bid(x(b.bidder), b.amount))));
            prop_assert_eq!(a, s);
            prop_assert_eq!(a, d.bidder);
            if let Some(u) = d.bidder {
                spent[u] += d.earned;
            }
            p0 = d.primal;
            d0 = d.dual;
        }
    }

    #[test]
    fn training_is_capacity_safe_and_dual_feasible(inst in plp_strategy(), alpha in prop::collection::vec(0.0f64..2.0, 2), greedy in any::<bool>()) {
        let alpha = &alpha[..inst.m()];
        let warmup = if greedy { Warmup::Greedy } else { Warmup::Skip };
        let t = run_with_prices(&inst, alpha, 0..1, warmup);
        for (j, &u) in t.used.iter().enumerate() {
            prop_assert!(u <= inst.capacity(j) * (1.0 + 1e-9));
        }
        prop_assert!(max_dual_violation(&inst, &t) <= 1e-9);
        prop_assert_eq!(&run_with_prices(&inst, alpha, 0..1, warmup), &t);
    }

    #[test]
    fn prices_are_monotone(inst in plp_strategy(), bump in 0.0f64..1.0, j in 0usize..2) {
        let j = j % inst.m();
        let caps = inst.capacities();
        let base = vec![0.3; inst.m()];
        let mut raised = base.clone();
        raised[j] += bump;
        for opt in inst.agents().iter().flat_map(|a| &a.options) {
            prop_assert!(gain(opt, &caps, &raised) <= gain(opt, &caps, &base));
        }
    }

    #[test]
    fn aggregation_does_not_change_the_sampled_optimum(inst in plp_strategy(), eps in 0.2f64..1.0) {
        let agg = solve_sampled_plp(&inst, 0..inst.n(), eps, true).unwrap();
        let plain = solve_sampled_plp(&inst, 0..inst.n(), eps, false).unwrap();
        prop_assert!((agg.objective - plain.objective).abs() <= 1e-7 * (1.0 + plain.objective));
    }
}

#[test]
fn reduction_rule_matches_plp_selections_on_small_instances() {
    for seed in 0..30 {
        let inst = gen_random_adwords(&RandomAdwordsParams {
            seed,
            bidders: 3,
            types: 4,
            queries: 60,
            max_bid_ratio: 0.2,
        })
        .unwrap();
        let plp = inst.to_plp();
        let s = 12;
        let dual = solve_sampled_dual(&plp, 0..s, 0.2).unwrap();
        let trace = run_with_prices(&plp, &dual.alpha_star, 0..s, Warmup::Skip);
        let via_plp: Vec<Option<usize>> = trace
            .decisions
            .iter()
            .map(|d| d.option.map(|o| plp.agents()[d.agent].options[o].consumption()[0].0))
            .collect();
        assert_eq!(via_plp, adwords_gain_rule(&inst, &dual.alpha_star, s), "seed {seed}");
    }
}
