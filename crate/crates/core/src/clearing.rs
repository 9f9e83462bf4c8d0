//! Clearing payment vectors with proportional recovery.
//!
//! A defaulted node pays `r (C x)_i + r_a a_i`, where `x` holds the actual
//! payments of defaulted counterparties and full payment `l` for solvent
//! ones; a solvent node pays `l_i`. The clearing vector is a fixed point of
//! that map. Three routes compute it:
//!
//! * [`solve_given_defaults`]: for a frozen default set, solve the linear
//!   system restricted to the defaulted block;
//! * [`fictitious_default_sequence`]: start from full payment, re-solve
//!   with the enlarged default set until it stops changing;
//! * [`picard_clearing_oracle`]: plain repeated application of the map,
//!   used as ground truth.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ClearingParams, DefaultIndicator, FinancialSystem};

pub const ORACLE_MAX_ITER: usize = 1_000_000;
pub const ORACLE_STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingSolution {
    /// Clearing payments `p`. The sink entry is computed but meaningless.
    pub payments: DVector<f64>,
    pub defaults: DefaultIndicator,
    /// Default set used at each outer iteration.
    pub default_history: Vec<DefaultIndicator>,
    pub iterations: usize,
    /// Max-norm of `f(p) - p` over banks.
    pub residual: f64,
    /// Whether every node had positive external assets, the sufficient
    /// condition for uniqueness.
    pub uniqueness_condition_met: bool,
}

impl ClearingSolution {
    pub fn bank_payments(&self) -> &[f64] {
        let n = self.payments.len().saturating_sub(1);
        &self.payments.as_slice()[..n]
    }
}

/// One application of the clearing map to `p`.
pub fn apply_clearing_map(
    system: &FinancialSystem,
    params: &ClearingParams,
    p: &DVector<f64>,
) -> DVector<f64> {
    let d = system.default_indicator(p);
    map_with_defaults(system, params, &d, p)
}

/// The clearing map with the default set frozen at `d`.
pub fn map_with_defaults(
    system: &FinancialSystem,
    params: &ClearingParams,
    d: &DefaultIndicator,
    p: &DVector<f64>,
) -> DVector<f64> {
    let l = system.total_liabilities();
    let n = system.node_count();
    let mixed = DVector::from_fn(n, |j, _| if d.is_defaulted(j) { p[j] } else { l[j] });
    let value = system.relative_claims().matrix() * mixed;
    let a = system.external_assets();
    DVector::from_fn(n, |i, _| {
        if d.is_defaulted(i) {
            params.recovery.at(i) * value[i] + params.external_recovery * a[i]
        } else {
            l[i]
        }
    })
}

/// Fixed point of the clearing map for a frozen default set `D`:
/// `f = (I - r D C D)^{-1} D (r_a a + r C l - l) + l`.
///
/// Only the defaulted rows and columns enter the linear solve; solvent
/// nodes pay `l` directly.
pub fn solve_given_defaults(
    system: &FinancialSystem,
    params: &ClearingParams,
    defaults: &DefaultIndicator,
) -> Result<DVector<f64>> {
    let l = system.total_liabilities();
    let idx = defaults.defaulted();
    let c = system.relative_claims().matrix();
    let cl = system.claims_at_par();
    let a = system.external_assets();

    let block = linalg::submatrix(c, &idx);
    let k = idx.len();
    let lhs = DMatrix::from_fn(k, k, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - params.recovery.at(idx[i]) * block[(i, j)]
    });
    let rhs = DVector::from_fn(k, |i, _| {
        let node = idx[i];
        params.external_recovery * a[node] + params.recovery.at(node) * cl[node] - l[node]
    });
    let shortfall = linalg::solve(lhs, &rhs)?;

    let mut f = l.clone();
    for (i, &node) in idx.iter().enumerate() {
        f[node] += shortfall[i];
    }
    Ok(f)
}

/// Fictitious default sequence started from full payment. Terminates when
/// the default set is stable, after at most `N` outer iterations.
pub fn fictitious_default_sequence(
    system: &FinancialSystem,
    params: &ClearingParams,
) -> Result<ClearingSolution> {
    params.validate(system.node_count())?;
    let n = system.node_count();
    let mut defaults = system.fundamental_defaults();
    let mut history = Vec::new();

    for iteration in 1..=n + 1 {
        let f = solve_given_defaults(system, params, &defaults)?;
        history.push(defaults.clone());
        let next = system.default_indicator(&f);
        if next == defaults {
            let residual = bank_residual(system, params, &f);
            return Ok(ClearingSolution {
                payments: f,
                defaults,
                default_history: history,
                iterations: iteration,
                residual,
                uniqueness_condition_met: system.has_positive_assets(),
            });
        }
        defaults = next;
    }
    Err(Error::NoConvergence { iterations: n + 1 })
}

/// Repeated application of the clearing map from `p0` (default: `l`) until
/// the step falls below `1e-12 * max(1, max l)`.
pub fn picard_clearing_oracle(
    system: &FinancialSystem,
    params: &ClearingParams,
    p0: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let l = system.total_liabilities();
    let banks = system.bank_count();
    let tol = ORACLE_STEP_TOL * l.amax().max(1.0);
    let mut p = p0.cloned().unwrap_or_else(|| l.clone());
    let mut step = f64::INFINITY;
    for _ in 0..ORACLE_MAX_ITER {
        let next = apply_clearing_map(system, params, &p);
        step = linalg::max_gap(&next, &p, banks);
        p = next;
        if step <= tol {
            return Ok(p);
        }
    }
    Err(Error::OracleNoConvergence {
        iterations: ORACLE_MAX_ITER,
        step,
    })
}

fn bank_residual(system: &FinancialSystem, params: &ClearingParams, p: &DVector<f64>) -> f64 {
    let f = apply_clearing_map(system, params, p);
    linalg::max_gap(&f, p, system.bank_count())
}

/// Systemic loss `σ = l - p`; the sink entry is reported as 0.
pub fn systemic_loss(solution: &ClearingSolution, l: &DVector<f64>) -> DVector<f64> {
    let mut sigma = l - &solution.payments;
    if let Some(last) = sigma.as_mut_slice().last_mut() {
        *last = 0.0;
    }
    sigma
}

/// `σ_i · s_i / (o_i + (C l)_i)` on banks, with `s = a - o` taken from the
/// system the solution was computed on. Sink entry 0.
pub fn capitalization_adjusted_loss(
    solution: &ClearingSolution,
    system: &FinancialSystem,
) -> Result<DVector<f64>> {
    let sigma = systemic_loss(solution, system.total_liabilities());
    let s = system.shock();
    let o = system.pre_shock_assets();
    let cl = system.claims_at_par();
    let mut out = DVector::zeros(system.node_count());
    for i in 0..system.bank_count() {
        let denom = o[i] + cl[i];
        if denom == 0.0 {
            return Err(Error::DivisionByZero { index: i });
        }
        out[i] = sigma[i] * s[i] / denom;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    // frozen from an independent numpy run of the Picard iteration
    const SYS_A_FULL: [f64; 2] = [4.63810316139767, 4.742096505823628];
    const SYS_A_SIGMA: [f64; 2] = [5.36189683860233, 5.257903494176372];

    #[test]
    fn map_is_identity_at_full_payment_without_defaults() {
        let s = sys_a();
        let l = s.total_liabilities().clone();
        let f = apply_clearing_map(&s, &ClearingParams::new(0.8), &l);
        assert_eq!(&f.as_slice()[..2], &l.as_slice()[..2]);
    }

    #[test]
    fn map_on_sys_0() {
        let s = sys_0();
        let l = s.total_liabilities().clone();
        let f = apply_clearing_map(&s, &ClearingParams::new(0.5), &l);
        assert_eq!(f[0], 10.0);
        assert_eq!(f[1], 4.0);
    }

    #[test]
    fn map_on_empty_network() {
        let s = FinancialSystem::new(DMatrix::zeros(3, 3), v(&[1., 2., 1.]), None).unwrap();
        let f = apply_clearing_map(&s, &ClearingParams::new(0.5), &v(&[0., 0., 0.]));
        assert_eq!(&f.as_slice()[..2], &[0.0, 0.0]);
    }

    #[test]
    fn solve_with_sink_only_defaults_is_l() {
        let s = sys_a();
        let p = solve_given_defaults(
            &s,
            &ClearingParams::new(0.8),
            &DefaultIndicator::sink_only(3),
        )
        .unwrap();
        assert_eq!(&p.as_slice()[..2], &[10.0, 10.0]);
    }

    #[test]
    fn solve_with_all_defaults_on_shocked_sys_a() {
        let s = sys_a_shocked();
        let p =
            solve_given_defaults(&s, &ClearingParams::new(0.8), &DefaultIndicator::all(3)).unwrap();
        assert!((p[0] - SYS_A_FULL[0]).abs() < 1e-12);
        assert!((p[1] - SYS_A_FULL[1]).abs() < 1e-12);
    }

    #[test]
    fn solve_on_sys_0_single_default() {
        let s = sys_0();
        let params = ClearingParams::new(0.5);
        let d = DefaultIndicator::new(vec![false, true, true]);
        let p = solve_given_defaults(&s, &params, &d).unwrap();
        assert_eq!(p[0], 10.0);
        assert!((p[1] - 4.0).abs() < 1e-14);
        let oracle = picard_clearing_oracle(&s, &params, None).unwrap();
        assert!((p[1] - oracle[1]).abs() < 1e-12);
    }

    #[test]
    fn frozen_solution_is_fixed_point_of_frozen_map() {
        let s = sys_a_shocked();
        let params = ClearingParams::new(0.8);
        for flags in [[true, false, true], [false, true, true], [true, true, true]] {
            let d = DefaultIndicator::new(flags.to_vec());
            let p = solve_given_defaults(&s, &params, &d).unwrap();
            let f = map_with_defaults(&s, &params, &d, &p);
            assert!(linalg::max_gap(&f, &p, 3) < 1e-10);
        }
    }

    #[test]
    fn sequence_without_defaults() {
        let sol = fictitious_default_sequence(&sys_a(), &ClearingParams::new(0.8)).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.defaults.flags(), &[false, false, true]);
        assert_eq!(sol.bank_payments(), &[10.0, 10.0]);
        assert!(sol.uniqueness_condition_met);
    }

    #[test]
    fn sequence_under_full_default() {
        let s = sys_a_shocked();
        let params = ClearingParams::new(0.8);
        let sol = fictitious_default_sequence(&s, &params).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.defaults.is_all());
        assert!((sol.payments[0] - SYS_A_FULL[0]).abs() < 1e-12);
        assert!((sol.payments[1] - SYS_A_FULL[1]).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
        let oracle = picard_clearing_oracle(&s, &params, None).unwrap();
        assert!(linalg::max_gap(&oracle, &sol.payments, 2) < 1e-8);
    }

    #[test]
    fn sequence_on_sys_0() {
        let sol = fictitious_default_sequence(&sys_0(), &ClearingParams::new(0.5)).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.defaults.flags(), &[false, true, true]);
        assert_eq!(sol.payments[0], 10.0);
        assert!((sol.payments[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn contagion_takes_two_rounds() {
        // bank 0 fundamentally defaults; bank 1 only fails once 0 underpays
        let l = DMatrix::from_row_slice(3, 3, &[0., 6., 4., 0., 0., 10., 0., 0., 0.]);
        let s = FinancialSystem::new(l, v(&[2., 5., 1.]), None).unwrap();
        let params = ClearingParams::new(0.9);
        let sol = fictitious_default_sequence(&s, &params).unwrap();
        assert_eq!(sol.iterations, 2);
        assert!(sol.defaults.is_all());
        assert!(sol.default_history[0].is_subset_of(&sol.default_history[1]));
        let oracle = picard_clearing_oracle(&s, &params, None).unwrap();
        assert!(linalg::max_gap(&oracle, &sol.payments, 2) < 1e-10);
    }

    #[test]
    fn oracle_cases() {
        let s = sys_a();
        let p = picard_clearing_oracle(&s, &ClearingParams::new(0.8), None).unwrap();
        assert_eq!(&p.as_slice()[..2], &[10.0, 10.0]);
        let z = FinancialSystem::new(DMatrix::zeros(3, 3), v(&[1., 1., 1.]), None).unwrap();
        let p = picard_clearing_oracle(&z, &ClearingParams::new(0.8), None).unwrap();
        assert_eq!(&p.as_slice()[..2], &[0.0, 0.0]);
    }

    #[test]
    fn loss_cases() {
        let s = sys_a();
        let sol = fictitious_default_sequence(&s, &ClearingParams::new(0.8)).unwrap();
        assert_eq!(systemic_loss(&sol, s.total_liabilities()), v(&[0., 0., 0.]));

        let shocked = sys_a_shocked();
        let sol = fictitious_default_sequence(&shocked, &ClearingParams::new(0.8)).unwrap();
        let sigma = systemic_loss(&sol, shocked.total_liabilities());
        assert!((sigma[0] - SYS_A_SIGMA[0]).abs() < 1e-12);
        assert!((sigma[1] - SYS_A_SIGMA[1]).abs() < 1e-12);
        assert_eq!(sigma[2], 0.0);

        let s0 = sys_0();
        let sol = fictitious_default_sequence(&s0, &ClearingParams::new(0.5)).unwrap();
        let sigma = systemic_loss(&sol, s0.total_liabilities());
        assert!((sigma - v(&[0., 4., 0.])).amax() < 1e-14);
    }

    #[test]
    fn capitalization_adjustment() {
        let s = sys_a();
        let sol = fictitious_default_sequence(&s, &ClearingParams::new(0.8)).unwrap();
        assert_eq!(
            capitalization_adjusted_loss(&sol, &s).unwrap(),
            v(&[0., 0., 0.])
        );

        let shocked = sys_a_shocked();
        let sol = fictitious_default_sequence(&shocked, &ClearingParams::new(0.8)).unwrap();
        let adj = capitalization_adjusted_loss(&sol, &shocked).unwrap();
        assert!((adj[0] - SYS_A_SIGMA[0] * -4.5 / 11.0).abs() < 1e-12);
        assert!((adj[1] - SYS_A_SIGMA[1] * -5.0 / 11.0).abs() < 1e-12);

        // single bank, s = -o/2
        let one = FinancialSystem::new(
            DMatrix::from_row_slice(2, 2, &[0., 10., 0., 0.]),
            v(&[6., 1.]),
            Some(v(&[3., 1.])),
        )
        .unwrap();
        let sol = fictitious_default_sequence(&one, &ClearingParams::new(0.5)).unwrap();
        let adj = capitalization_adjusted_loss(&sol, &one).unwrap();
        let sigma1 = 10.0 - sol.payments[0];
        assert!((adj[0] - sigma1 * -0.5).abs() < 1e-12);

        let zero_o = FinancialSystem::new(
            DMatrix::from_row_slice(2, 2, &[0., 10., 0., 0.]),
            v(&[0., 1.]),
            None,
        )
        .unwrap();
        let sol = fictitious_default_sequence(&zero_o, &ClearingParams::new(0.5)).unwrap();
        assert!(!sol.uniqueness_condition_met);
        assert!(matches!(
            capitalization_adjusted_loss(&sol, &zero_o),
            Err(Error::DivisionByZero { index: 0 })
        ));
    }

    #[test]
    fn invalid_recovery_is_rejected() {
        assert!(matches!(
            fictitious_default_sequence(&sys_a(), &ClearingParams::new(1.5)),
            Err(Error::InvalidRate { .. })
        ));
    }

    #[test]
    fn per_node_recovery_matches_oracle() {
        let s = sys_a_shocked();
        let params = ClearingParams::new(crate::model::Rate::PerNode(vec![0.3, 0.9, 1.0]));
        let sol = fictitious_default_sequence(&s, &params).unwrap();
        let oracle = picard_clearing_oracle(&s, &params, None).unwrap();
        assert!(linalg::max_gap(&oracle, &sol.payments, 2) < 1e-10);
    }
}
