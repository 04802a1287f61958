mod common;

use adwords_core::gen::{gen_greedy_worstcase, gen_msvv_worstcase, Stream};
use adwords_core::lp::{
    build_offline_adwords_lp, check_slackness, solve, solve_offline_adwords, LpStatus, RowLabel,
    StandardLp,
};
use adwords_core::model::{AdwordsInstance, Bid, Bidder, Query};
use approx::assert_abs_diff_eq;
use common::{best_integral_assignment, random_lp, vertex_enumeration};

#[test]
fn oracle_agrees_with_hand_solved_lps() {
    // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6 → (1.6, 1.2), value 2.8
    let v = vertex_enumeration(&[1.0, 1.0], &[vec![1.0, 2.0], vec![3.0, 1.0]], &[4.0, 6.0]);
    assert_abs_diff_eq!(v.unwrap(), 2.8, epsilon = 1e-12);
    assert_eq!(vertex_enumeration(&[1.0], &[vec![1.0]], &[-1.0]), None);
}

#[test]
fn simplex_matches_vertex_enumeration_on_random_6x6() {
    let mut rng = Stream::new(66);
    for _ in 0..40 {
        let (c, a, b) = random_lp(&mut rng, 6, 6);
        let lp = StandardLp::from_dense(&c, &a, &b).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let oracle = vertex_enumeration(&c, &a, &b).unwrap();
        assert_abs_diff_eq!(sol.objective, oracle, epsilon = 1e-7);
        assert!(sol.duality_gap().abs() <= 1e-6 * (1.0 + sol.objective.abs()));
    }
}

fn single_bidder(bids: &[f64]) -> AdwordsInstance {
    AdwordsInstance::new(
        vec![Bidder { id: "u".into(), budget: 1.0 }],
        bids.iter()
            .enumerate()
            .map(|(k, &w)| Query::new(format!("v{k}"), vec![Bid { bidder: 0, amount: w }]))
            .collect(),
    )
}

#[test]
fn three_half_bids_fill_one_budget() {
    let inst = single_bidder(&[0.5, 0.5, 0.5]);
    let lp = build_offline_adwords_lp(&inst).unwrap();
    let dense = lp.dense_matrix();
    let oracle = vertex_enumeration(lp.objective(), &dense, lp.rhs()).unwrap();
    assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-12);
    let opt = solve_offline_adwords(&inst).unwrap();
    assert_abs_diff_eq!(opt.objective, 1.0, epsilon = 1e-7);
    let matched: f64 = opt.allocation.iter().flatten().map(|&(_, x)| x).sum();
    assert_abs_diff_eq!(matched, 2.0, epsilon = 1e-7);
}

#[test]
fn greedy_worst_case_optimum_is_two() {
    let inst = gen_greedy_worstcase(0.25).unwrap();
    let integral = best_integral_assignment(&inst);
    assert_abs_diff_eq!(integral, 2.0, epsilon = 1e-12);
    // Dual witness α = (1, 1), β = 0 bounds every solution by B1 + B2 = 2.
    let lp = build_offline_adwords_lp(&inst).unwrap();
    let y: Vec<f64> = lp
        .row_labels()
        .iter()
        .map(|l| if matches!(l, RowLabel::Budget(_)) { 1.0 } else { 0.0 })
        .collect();
    assert!(lp.dual_residual(&y) <= 1e-12);
    assert_abs_diff_eq!(lp.dual_value(&y), 2.0);
    let opt = solve_offline_adwords(&inst).unwrap();
    assert_abs_diff_eq!(opt.objective, 2.0, epsilon = 1e-7);
}

#[test]
fn greedy_worst_case_dual_prices_the_binding_budget() {
    let inst = gen_greedy_worstcase(0.25).unwrap();
    let opt = solve_offline_adwords(&inst).unwrap();
    let (lp, sol) = opt.expanded(&inst).unwrap();
    let report = check_slackness(&lp, &sol, 1e-6);
    assert!(report.is_empty(), "{report:?}");
    // Both budgets are exhausted at every optimum, so by Eq. (3) any bidder
    // with a positive price is exhausted; u1 is priced at every optimal dual
    // because phase-two queries only reach it.
    assert!(opt.alpha[0] > 1e-6);
    let inst = &inst;
    for (u, &a) in opt.alpha.iter().enumerate() {
        if a > 1e-6 {
            let spent: f64 = opt
                .allocation
                .iter()
                .enumerate()
                .flat_map(|(v, alloc)| {
                    alloc.iter().filter(|&&(b, _)| b == u).map(move |&(_, x)| x * inst.queries()[v].bid_for(u))
                })
                .sum();
            assert_abs_diff_eq!(spent, 1.0, epsilon = 1e-7);
        }
    }
}

#[test]
fn msvv_worst_case_optimum_is_n() {
    for n in [2, 5, 10] {
        let opt = solve_offline_adwords(&gen_msvv_worstcase(n, 0.1).unwrap()).unwrap();
        assert_abs_diff_eq!(opt.objective, n as f64, epsilon = 1e-7);
    }
    let inst = gen_msvv_worstcase(2, 0.5).unwrap();
    assert_abs_diff_eq!(best_integral_assignment(&inst), 2.0);
}

#[test]
fn aggregated_and_expanded_optima_agree_with_oracle() {
    let inst = AdwordsInstance::new(
        vec![Bidder { id: "a".into(), budget: 1.0 }, Bidder { id: "b".into(), budget: 0.7 }],
        vec![
            Query::new("q0", vec![Bid { bidder: 0, amount: 0.4 }, Bid { bidder: 1, amount: 0.3 }]),
            Query::new("q1", vec![Bid { bidder: 0, amount: 0.4 }, Bid { bidder: 1, amount: 0.3 }]),
            Query::new("q2", vec![Bid { bidder: 1, amount: 0.5 }]),
            Query::new("q3", vec![Bid { bidder: 0, amount: 0.4 }, Bid { bidder: 1, amount: 0.3 }]),
        ],
    );
    let lp = build_offline_adwords_lp(&inst).unwrap();
    let oracle = vertex_enumeration(lp.objective(), &lp.dense_matrix(), lp.rhs()).unwrap();
    let opt = solve_offline_adwords(&inst).unwrap();
    assert_abs_diff_eq!(opt.objective, oracle, epsilon = 1e-7);
    let (lp, sol) = opt.expanded(&inst).unwrap();
    assert!(sol.primal_residual <= 1e-7 && sol.dual_residual <= 1e-7);
    assert_abs_diff_eq!(lp.primal_value(&sol.primal), oracle, epsilon = 1e-7);
    assert!(check_slackness(&lp, &sol, 1e-6).is_empty());
}
