//! Cross-checks the simplex-based oracle against the independent
//! vertex-enumeration reference from the testkit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairmab_core::env::{availability_pmf, ArmSet, AvailabilityModel, EnvironmentConfig, RewardModel};
use fairmab_core::metrics::stability_constant;
use fairmab_core::oracle::{evaluate_policy, feasibility_margin, solve_offline_lp, LpSolution};
use fairmab_core::policy::{AOnlyPolicy, SuperArmDistribution};
use fairmab_testkit::{reference_margin, reference_solve};

fn pmf_pairs(config: &EnvironmentConfig) -> Vec<(u64, f64)> {
    availability_pmf(&config.availability, config.n_arms)
        .unwrap()
        .into_iter()
        .map(|(z, p)| (z.mask(), p))
        .collect()
}

fn random_config(rng: &mut ChaCha8Rng, n: usize, m: usize, tight: bool) -> EnvironmentConfig {
    let availability = if rng.gen_bool(0.5) {
        AvailabilityModel::IndependentBernoulli {
            p: (0..n).map(|_| rng.gen_range(0.05..1.0)).collect(),
        }
    } else {
        // Random categorical over all subsets.
        let mut probs: Vec<f64> = (0..(1u64 << n)).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        AvailabilityModel::Categorical {
            entries: probs
                .into_iter()
                .enumerate()
                .map(|(mask, p)| (ArmSet::from_mask(mask as u64), p))
                .collect(),
        }
    };
    let fraction_cap = if tight { 0.95 } else { 0.2 };
    EnvironmentConfig {
        n_arms: n,
        max_plays: m,
        means: (0..n).map(|_| rng.gen::<f64>()).collect(),
        weights: (0..n).map(|_| rng.gen_range(0.1..3.0)).collect(),
        min_fractions: (0..n).map(|_| rng.gen_range(0.001..fraction_cap)).collect(),
        availability,
        reward_model: RewardModel::Bernoulli,
    }
}

#[test]
fn matches_reference_on_small_battery() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_817);
    let mut feasible_seen = 0;
    let mut infeasible_seen = 0;
    for case in 0..400 {
        let n = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=n);
        // Half the battery uses aggressive fractions so infeasible and
        // near-boundary instances show up.
        let config = random_config(&mut rng, n, m, case % 2 == 0);
        let pmf = pmf_pairs(&config);
        let reference = reference_solve(
            &pmf,
            m,
            &config.means,
            &config.weights,
            &config.min_fractions,
        );
        let solution = solve_offline_lp(&config).unwrap();
        match (solution, reference) {
            (LpSolution::Optimal { optimal_reward, .. }, Some(want)) => {
                feasible_seen += 1;
                assert!(
                    (optimal_reward - want).abs() < 1e-6,
                    "case {}: solver {} vs reference {} ({:?})",
                    case,
                    optimal_reward,
                    want,
                    config
                );
            }
            (LpSolution::Infeasible, None) => infeasible_seen += 1,
            (got, want) => panic!(
                "case {}: feasibility disagreement (solver optimal: {}, reference: {:?}) for {:?}",
                case,
                matches!(got, LpSolution::Optimal { .. }),
                want.is_some(),
                config
            ),
        }

        let margin = feasibility_margin(&config).unwrap().epsilon;
        let want_margin = reference_margin(&pmf, m, &config.min_fractions);
        assert!(
            (margin - want_margin).abs() < 1e-6,
            "case {}: margin {} vs reference {}",
            case,
            margin,
            want_margin
        );
    }
    assert!(feasible_seen >= 100, "battery too easy: {}", feasible_seen);
    assert!(infeasible_seen >= 20, "battery never infeasible");
}

fn benchmark_config() -> EnvironmentConfig {
    EnvironmentConfig {
        n_arms: 3,
        max_plays: 2,
        means: vec![0.4, 0.5, 0.7],
        weights: vec![1.0, 1.0, 1.0],
        min_fractions: vec![0.5, 0.6, 0.4],
        availability: AvailabilityModel::IndependentBernoulli {
            p: vec![0.9, 0.8, 0.7],
        },
        reward_model: RewardModel::Bernoulli,
    }
}

#[test]
fn benchmark_scenario_oracle_values() {
    let config = benchmark_config();
    let pmf = pmf_pairs(&config);

    let solution = solve_offline_lp(&config).unwrap();
    let r_star = solution.optimal_reward().expect("feasible scenario");
    let reference = reference_solve(
        &pmf,
        2,
        &config.means,
        &config.weights,
        &config.min_fractions,
    )
    .expect("feasible scenario");
    assert!((r_star - reference).abs() < 1e-9);
    assert!((r_star - 1.038).abs() < 1e-9, "R* = {}", r_star);

    let margin = feasibility_margin(&config).unwrap().epsilon;
    let ref_margin = reference_margin(&pmf, 2, &config.min_fractions);
    assert!((margin - ref_margin).abs() < 1e-9);
    assert!((margin - 0.132).abs() < 1e-9, "epsilon = {}", margin);

    // The stability bound composes to a finite positive value.
    let b = stability_constant(3, 2, 100.0, 1.0);
    assert!(b / margin > 0.0 && (b / margin).is_finite());
    assert!((b / margin - 201.5 / 0.132).abs() < 1e-6);

    // q* meets the fraction requirement within tolerance.
    let eval = evaluate_policy(&config, solution.policy().unwrap()).unwrap();
    for (i, &f) in eval.expected_fractions.iter().enumerate() {
        assert!(
            f >= config.min_fractions[i] - 1e-9,
            "arm {}: fraction {} below {}",
            i,
            f,
            config.min_fractions[i]
        );
    }
    assert!((eval.expected_reward - r_star).abs() < 1e-9);
}

/// Draws a random policy over the full availability support.
fn random_policy(rng: &mut ChaCha8Rng, config: &EnvironmentConfig) -> AOnlyPolicy {
    let pmf = availability_pmf(&config.availability, config.n_arms).unwrap();
    let mut policy = AOnlyPolicy::new();
    for (z, _) in pmf {
        let mut arms = Vec::new();
        let mut sub = 0u64;
        loop {
            if (sub.count_ones() as usize) <= config.max_plays {
                arms.push(ArmSet::from_mask(sub));
            }
            if sub == z.mask() {
                break;
            }
            sub = sub.wrapping_sub(z.mask()) & z.mask();
        }
        let mut probs: Vec<f64> = arms.iter().map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        // Kill float drift so the distribution validates exactly.
        let sum: f64 = probs.iter().sum();
        let last = probs.len() - 1;
        probs[last] += 1.0 - sum;
        policy
            .insert(z, SuperArmDistribution::new(arms, probs).unwrap())
            .unwrap();
    }
    policy
}

#[test]
fn optimum_dominates_random_feasible_policies() {
    let mut rng = ChaCha8Rng::seed_from_u64(7_771);
    for _ in 0..5 {
        let n = rng.gen_range(2..=3);
        let m = rng.gen_range(1..=n);
        // Loose fractions so random policies are usually feasible.
        let mut config = random_config(&mut rng, n, m, false);
        for r in &mut config.min_fractions {
            *r = (*r).min(0.02);
        }
        let r_star = solve_offline_lp(&config)
            .unwrap()
            .optimal_reward()
            .expect("loose fractions are feasible");

        let mut feasible = 0;
        let mut attempts = 0;
        while feasible < 100 && attempts < 2000 {
            attempts += 1;
            let policy = random_policy(&mut rng, &config);
            let eval = evaluate_policy(&config, &policy).unwrap();
            let ok = eval
                .expected_fractions
                .iter()
                .zip(&config.min_fractions)
                .all(|(&f, &r)| f >= r);
            if !ok {
                continue;
            }
            feasible += 1;
            assert!(
                eval.expected_reward <= r_star + 1e-9,
                "random feasible policy beat the optimum: {} > {}",
                eval.expected_reward,
                r_star
            );
        }
        assert!(feasible >= 100, "only {} feasible policies found", feasible);
    }
}

#[test]
fn full_play_reward_when_unconstrained() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let mut config = random_config(&mut rng, n, n, false);
        config.availability = AvailabilityModel::IndependentBernoulli { p: vec![1.0; n] };
        let r_star = solve_offline_lp(&config)
            .unwrap()
            .optimal_reward()
            .expect("always-available full-play instance is feasible");
        let expected: f64 = config
            .means
            .iter()
            .zip(&config.weights)
            .map(|(&mu, &w)| w * mu)
            .sum();
        assert!((r_star - expected).abs() < 1e-9);
    }
}
