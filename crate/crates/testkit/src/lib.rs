//! Reference oracles for the fairmab test suites.
//!
//! Everything here is deliberately independent of the main crates: plain
//! slices and bitmasks in, numbers out, computed by routes different from
//! the production code (exhaustive enumeration and polytope vertex
//! enumeration instead of greedy selection and simplex).

/// Exhaustively maximizes `sum_{i in S} values[i]` over all subsets `S` of
/// `available_mask` with `|S| <= m`. Returns the best mask and its value;
/// among equal-value sets the one with the smallest mask wins.
pub fn exhaustive_best_super_arm(values: &[f64], available_mask: u64, m: usize) -> (u64, f64) {
    let mut best_mask = 0u64;
    let mut best_value = 0.0f64;
    // Iterate every submask of available_mask, including the empty set.
    let mut sub = available_mask;
    loop {
        if (sub.count_ones() as usize) <= m {
            let mut value = 0.0;
            let mut bits = sub;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                value += values[i];
                bits &= bits - 1;
            }
            if value > best_value || (value == best_value && sub < best_mask) {
                best_value = value;
                best_mask = sub;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & available_mask;
    }
    (best_mask, best_value)
}

/// Rank of arm subset `t_mask` in the play-fraction polytope:
/// `rho(T) = sum_Z P(Z) * min(m, |Z intersect T|)`.
fn rank(pmf: &[(u64, f64)], m: usize, t_mask: u64) -> f64 {
    pmf.iter()
        .map(|&(z, p)| p * ((z & t_mask).count_ones() as usize).min(m) as f64)
        .sum()
}

/// A linear inequality `coeffs . x <= rhs`.
struct Constraint {
    coeffs: Vec<f64>,
    rhs: f64,
}

/// Constraints describing the achievable long-run play-fraction vectors
/// `f` of availability-only policies.
///
/// The reduction: for one availability set `Z`, the marginals of
/// distributions over super arms `S subseteq Z, |S| <= m` are exactly
/// `{ g : 0 <= g_i <= 1 on Z, g_i = 0 off Z, sum g <= m }` (the vertices of
/// that polytope are the super-arm indicators). Mixing over `Z` with weights
/// `P(Z)` Minkowski-sums these polytopes, which sums their rank functions,
/// so the achievable region is `{ f >= 0 : sum_{i in T} f_i <= rho(T) }`
/// with `rho` as in [`rank`]. Rewards and fairness depend on the policy only
/// through `f` because the compound reward is linear.
fn fraction_polytope(pmf: &[(u64, f64)], m: usize, n_arms: usize) -> Vec<Constraint> {
    let mut constraints = Vec::new();
    for t_mask in 1u64..(1 << n_arms) {
        let coeffs = (0..n_arms)
            .map(|i| if t_mask & (1 << i) != 0 { 1.0 } else { 0.0 })
            .collect();
        constraints.push(Constraint {
            coeffs,
            rhs: rank(pmf, m, t_mask),
        });
    }
    for i in 0..n_arms {
        let mut coeffs = vec![0.0; n_arms];
        coeffs[i] = -1.0;
        constraints.push(Constraint { coeffs, rhs: 0.0 });
    }
    constraints
}

/// Solves `max objective . x` subject to `constraints` by enumerating all
/// candidate vertices (intersections of `dim` constraints). Returns `None`
/// when no feasible vertex exists, which for these bounded systems means
/// the program is infeasible.
fn vertex_enumeration_max(constraints: &[Constraint], objective: &[f64]) -> Option<f64> {
    let dim = objective.len();
    let mut chosen = vec![0usize; dim];
    let mut best: Option<f64> = None;

    fn recurse(
        constraints: &[Constraint],
        objective: &[f64],
        chosen: &mut Vec<usize>,
        depth: usize,
        start: usize,
        best: &mut Option<f64>,
    ) {
        let dim = objective.len();
        if depth == dim {
            if let Some(x) = solve_square(constraints, chosen, dim) {
                const FEAS_TOL: f64 = 1e-8;
                let feasible = constraints.iter().all(|c| {
                    let lhs: f64 = c.coeffs.iter().zip(&x).map(|(a, v)| a * v).sum();
                    lhs <= c.rhs + FEAS_TOL
                });
                if feasible {
                    let value: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    if best.map_or(true, |b| value > b) {
                        *best = Some(value);
                    }
                }
            }
            return;
        }
        for i in start..constraints.len() {
            chosen[depth] = i;
            recurse(constraints, objective, chosen, depth + 1, i + 1, best);
        }
    }

    recurse(constraints, objective, &mut chosen, 0, 0, &mut best);
    best
}

/// Solves the square system formed by the chosen constraints (as equalities)
/// with Gaussian elimination; `None` if singular.
fn solve_square(constraints: &[Constraint], chosen: &[usize], dim: usize) -> Option<Vec<f64>> {
    let mut a = vec![vec![0.0f64; dim + 1]; dim];
    for (row, &ci) in chosen.iter().enumerate() {
        a[row][..dim].copy_from_slice(&constraints[ci].coeffs);
        a[row][dim] = constraints[ci].rhs;
    }
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..dim {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=dim {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Some((0..dim).map(|i| a[i][dim] / a[i][i]).collect())
}

/// Reference value of the offline fairness LP: the maximum expected
/// per-round weighted reward over availability-only policies meeting the
/// minimum selection fractions. `None` means infeasible.
///
/// `pmf` lists the availability distribution as (bitmask, probability).
pub fn reference_solve(
    pmf: &[(u64, f64)],
    m: usize,
    means: &[f64],
    weights: &[f64],
    min_fractions: &[f64],
) -> Option<f64> {
    let n_arms = means.len();
    let mut constraints = fraction_polytope(pmf, m, n_arms);
    for i in 0..n_arms {
        let mut coeffs = vec![0.0; n_arms];
        coeffs[i] = -1.0;
        constraints.push(Constraint {
            coeffs,
            rhs: -min_fractions[i],
        });
    }
    let objective: Vec<f64> = means.iter().zip(weights).map(|(&mu, &w)| w * mu).collect();
    vertex_enumeration_max(&constraints, &objective)
}

/// Reference feasibility margin: the largest uniform slack `eps` such that
/// `min_fractions + eps` is still an achievable fraction vector. Negative
/// when the requirement itself is infeasible.
pub fn reference_margin(pmf: &[(u64, f64)], m: usize, min_fractions: &[f64]) -> f64 {
    let n_arms = min_fractions.len();
    // Variables (f_1..f_n, eps); fairness rows become -f_i + eps <= -r_i.
    let mut constraints: Vec<Constraint> = fraction_polytope(pmf, m, n_arms)
        .into_iter()
        .map(|c| {
            let mut coeffs = c.coeffs;
            coeffs.push(0.0);
            Constraint { coeffs, rhs: c.rhs }
        })
        .collect();
    for i in 0..n_arms {
        let mut coeffs = vec![0.0; n_arms + 1];
        coeffs[i] = -1.0;
        coeffs[n_arms] = 1.0;
        constraints.push(Constraint {
            coeffs,
            rhs: -min_fractions[i],
        });
    }
    let mut objective = vec![0.0; n_arms + 1];
    objective[n_arms] = 1.0;
    vertex_enumeration_max(&constraints, &objective)
        .expect("margin program is always feasible")
}
