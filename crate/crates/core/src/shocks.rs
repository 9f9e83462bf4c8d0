//! System-wide shock scenarios.
//!
//! A shock `s` lowers pre-shock assets to `a = o + s`. The full-default
//! shock puts every bank in fundamental default while keeping `a > 0`. The
//! relaxed shocks only require every bank to be in default once contagion
//! has played out, which needs a smaller shock.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::centrality;
use crate::clearing::{self, ClearingSolution};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ClearingParams, FinancialSystem, Rate};

/// Default number of steps for the relaxed search.
pub const DEFAULT_MAX_STEPS: usize = 1000;
/// Agreement required between the clearing vector and the relaxed
/// candidate, relative to `max(1, max l)`.
pub const SELF_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockKind {
    FullDefault,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockScenario {
    pub kind: ShockKind,
    /// Shock per node; the sink entry is 0.
    pub shock: DVector<f64>,
    pub interpolation: Option<Rate>,
    pub post_shock_assets: DVector<f64>,
    /// Step `k` accepted by the relaxed search.
    pub search_steps: Option<usize>,
    pub max_steps: Option<usize>,
    /// The input system with `a = o + s`.
    pub system: FinancialSystem,
}

fn require_claims_below_liabilities(system: &FinancialSystem) -> Result<DVector<f64>> {
    let l = system.total_liabilities();
    let cl = system.claims_at_par();
    for bank in 0..system.bank_count() {
        if !(cl[bank] < l[bank]) {
            return Err(Error::PreconditionViolated {
                bank,
                claims: cl[bank],
                liabilities: l[bank],
            });
        }
    }
    Ok(cl)
}

fn apply_shock(
    system: &FinancialSystem,
    shock: &DVector<f64>,
) -> Result<(DVector<f64>, FinancialSystem)> {
    let a = system.pre_shock_assets() + shock;
    let shocked = system.with_external_assets(a.clone())?;
    Ok((a, shocked))
}

/// `s_i = m l_i - m (C l)_i - o_i`: every bank ends in fundamental default
/// with `a_i = m (l_i - (C l)_i) > 0`.
pub fn full_default_shock(system: &FinancialSystem, m: &Rate) -> Result<ShockScenario> {
    m.validate_interpolation(system.node_count())?;
    let cl = require_claims_below_liabilities(system)?;
    let l = system.total_liabilities();
    let o = system.pre_shock_assets();

    let mut shock = DVector::zeros(system.node_count());
    for i in 0..system.bank_count() {
        let mi = m.at(i);
        shock[i] = mi * l[i] - mi * cl[i] - o[i];
        // s_i must lie in (-o_i, -o_i + l_i - (Cl)_i)
        if !(shock[i] > -o[i] && shock[i] < -o[i] + l[i] - cl[i]) {
            return Err(Error::PreconditionViolated {
                bank: i,
                claims: cl[i],
                liabilities: l[i],
            });
        }
    }
    let (post_shock_assets, shocked) = apply_shock(system, &shock)?;
    Ok(ShockScenario {
        kind: ShockKind::FullDefault,
        shock,
        interpolation: Some(m.clone()),
        post_shock_assets,
        search_steps: None,
        max_steps: None,
        system: shocked,
    })
}

/// Where the relaxed search starts at `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchOrigin {
    /// `s_i(k) = (-o_i + l_i - (Cl)_i) - (k / max_steps) (l_i - (Cl)_i)`.
    /// Every `k >= 1` already leaves all banks in fundamental default, so
    /// this origin always stops at `k = 1`.
    #[default]
    FundamentalBoundary,
    /// `s_i(k) = -(k / max_steps) (l_i - (Cl)_i)`: the same step, starting
    /// from the unshocked system.
    Unshocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    Linear,
    /// Bisection over `k`; valid because a larger `k` is a larger shock and
    /// defaults are monotone in assets.
    Bisect,
}

struct Probe {
    shock: DVector<f64>,
    solution: Option<ClearingSolution>,
    system: Option<FinancialSystem>,
}

impl Probe {
    fn valid(&self) -> bool {
        self.solution.is_some()
    }

    fn all_defaulted(&self) -> bool {
        self.solution.as_ref().is_some_and(|s| s.defaults.is_all())
    }
}

struct RelaxedSearch<'a> {
    system: &'a FinancialSystem,
    params: &'a ClearingParams,
    origin: SearchOrigin,
    max_steps: usize,
    cl: DVector<f64>,
}

impl RelaxedSearch<'_> {
    fn shock_at(&self, k: usize) -> DVector<f64> {
        let l = self.system.total_liabilities();
        let o = self.system.pre_shock_assets();
        let frac = k as f64 / self.max_steps as f64;
        let mut s = DVector::zeros(self.system.node_count());
        for i in 0..self.system.bank_count() {
            let width = l[i] - self.cl[i];
            let start = match self.origin {
                SearchOrigin::FundamentalBoundary => -o[i] + width,
                SearchOrigin::Unshocked => 0.0,
            };
            s[i] = start - frac * width;
        }
        s
    }

    /// Clears the system under `s(k)`; shocks that wipe out a bank's
    /// assets are invalid and left unsolved.
    fn probe(&self, k: usize) -> Result<Probe> {
        let shock = self.shock_at(k);
        let a = self.system.pre_shock_assets() + &shock;
        if (0..self.system.bank_count()).any(|i| !(a[i] > 0.0)) {
            return Ok(Probe {
                shock,
                solution: None,
                system: None,
            });
        }
        let shocked = self.system.with_external_assets(a)?;
        let solution = clearing::fictitious_default_sequence(&shocked, self.params)?;
        Ok(Probe {
            shock,
            solution: Some(solution),
            system: Some(shocked),
        })
    }

    fn accept(&self, k: usize, probe: Probe) -> ShockScenario {
        let system = probe.system.expect("accepted probe is valid");
        ShockScenario {
            kind: ShockKind::Relaxed,
            post_shock_assets: system.external_assets().clone(),
            shock: probe.shock,
            interpolation: None,
            search_steps: Some(k),
            max_steps: Some(self.max_steps),
            system,
        }
    }

    fn exhausted(&self, last_valid: Option<Probe>) -> Error {
        let solvent = last_valid
            .and_then(|p| p.solution)
            .map(|s| s.defaults.solvent())
            .unwrap_or_else(|| (0..self.system.bank_count()).collect());
        Error::SearchExhausted {
            max_steps: self.max_steps,
            solvent,
        }
    }

    fn linear(&self) -> Result<ShockScenario> {
        let mut last_valid = None;
        for k in 1..=self.max_steps {
            let probe = self.probe(k)?;
            if !probe.valid() {
                break;
            }
            if probe.all_defaulted() {
                return Ok(self.accept(k, probe));
            }
            last_valid = Some(probe);
        }
        Err(self.exhausted(last_valid))
    }

    fn bisect(&self) -> Result<ShockScenario> {
        // largest k whose shock keeps every bank's assets positive
        let first = self.probe(1)?;
        if !first.valid() {
            return Err(self.exhausted(None));
        }
        let (mut lo, mut hi) = (1, self.max_steps);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.probe(mid)?.valid() {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let last = lo;
        let top = self.probe(last)?;
        if !top.all_defaulted() {
            return Err(self.exhausted(Some(top)));
        }
        let (mut lo, mut hi) = (1, last);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.probe(mid)?.all_defaulted() {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let probe = self.probe(lo)?;
        Ok(self.accept(lo, probe))
    }
}

/// Smallest `k` in `1..=max_steps` whose shock leaves every node defaulted
/// after clearing.
pub fn relaxed_shock_search(
    system: &FinancialSystem,
    params: &ClearingParams,
    max_steps: usize,
    origin: SearchOrigin,
    strategy: SearchStrategy,
) -> Result<ShockScenario> {
    if max_steps == 0 {
        return Err(Error::Validation("max_steps must be at least 1".into()));
    }
    params.validate(system.node_count())?;
    let cl = require_claims_below_liabilities(system)?;
    let search = RelaxedSearch {
        system,
        params,
        origin,
        max_steps,
        cl,
    };
    match strategy {
        SearchStrategy::Linear => search.linear(),
        SearchStrategy::Bisect => search.bisect(),
    }
}

/// The relaxed interpolated shock together with its certification.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedConstruction {
    pub scenario: ShockScenario,
    /// `q = m (I - (r - m) C)^{-1} l`, sink entry 0.
    pub candidate: DVector<f64>,
    pub clearing: ClearingSolution,
    /// Max-norm over banks of `p - q`.
    pub candidate_gap: f64,
    pub printed_form: DVector<f64>,
    /// Max-norm over banks of `p` minus the printed closed form.
    pub printed_form_gap: f64,
    pub tolerance: f64,
}

/// Builds the relaxed shock and clears it without judging the outcome.
pub(crate) fn construct_relaxed(
    system: &FinancialSystem,
    params: &ClearingParams,
    m: &Rate,
) -> Result<RelaxedConstruction> {
    let n = system.node_count();
    let banks = system.bank_count();
    m.validate_interpolation(n)?;
    params.validate(n)?;
    let r = &params.recovery;
    let q = centrality::relaxed_candidate(system, r, m)?;
    let cq = system.relative_claims().matrix() * &q;
    let l = system.total_liabilities();
    let o = system.pre_shock_assets();

    let mut shock = DVector::zeros(n);
    for i in 0..banks {
        let a = m.at(i) * (l[i] - cq[i]);
        if !(a > 0.0) {
            return Err(Error::PreconditionViolated {
                bank: i,
                claims: cq[i],
                liabilities: l[i],
            });
        }
        shock[i] = a - o[i];
    }
    let (post_shock_assets, shocked) = apply_shock(system, &shock)?;
    let clearing = clearing::fictitious_default_sequence(&shocked, params)?;
    let printed_form = centrality::printed_relaxed_closed_form(system, r, m)?;

    Ok(RelaxedConstruction {
        candidate_gap: linalg::max_gap(&clearing.payments, &q, banks),
        printed_form_gap: linalg::max_gap(&clearing.payments, &printed_form, banks),
        tolerance: SELF_CONSISTENCY_TOL * l.amax().max(1.0),
        scenario: ShockScenario {
            kind: ShockKind::Relaxed,
            shock,
            interpolation: Some(m.clone()),
            post_shock_assets,
            search_steps: None,
            max_steps: None,
            system: shocked,
        },
        candidate: q,
        clearing,
        printed_form,
    })
}

/// Resolves `s_i = m l_i - m (C p)_i - o_i` through the candidate `q`, then
/// certifies it: clearing under the resulting shock must return `q` with
/// every node in default.
pub fn relaxed_interpolated_shock(
    system: &FinancialSystem,
    params: &ClearingParams,
    m: &Rate,
) -> Result<RelaxedConstruction> {
    let built = construct_relaxed(system, params, m)?;
    if !built.clearing.defaults.is_all() {
        return Err(Error::NotAllDefaulted {
            solvent: built.clearing.defaults.solvent(),
        });
    }
    if !(built.candidate_gap <= built.tolerance) {
        return Err(Error::SelfConsistencyFailed {
            gap: built.candidate_gap,
        });
    }
    Ok(built)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use nalgebra::DMatrix;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn full_shock_on_sys_a() {
        let sc = full_default_shock(&sys_a(), &0.5.into()).unwrap();
        assert!((sc.shock.clone() - v(&[-4.5, -5., 0.])).amax() < 1e-14);
        assert!((sc.post_shock_assets.clone() - v(&[3.5, 4., 1.])).amax() < 1e-14);
        assert!(sc.system.fundamental_defaults().is_all());
        assert_eq!(sc.kind, ShockKind::FullDefault);
    }

    #[test]
    fn full_shock_assets_are_interpolated() {
        let s = sys_a();
        for m in [0.01, 0.3, 0.99] {
            let sc = full_default_shock(&s, &m.into()).unwrap();
            for (i, w) in [7.0, 8.0].iter().enumerate() {
                assert!((sc.post_shock_assets[i] - m * w).abs() < 1e-12);
                assert!(sc.post_shock_assets[i] > 0.0 && sc.post_shock_assets[i] < *w);
            }
        }
    }

    #[test]
    fn full_shock_on_sys_0() {
        let sc = full_default_shock(&sys_0(), &0.5.into()).unwrap();
        assert!((sc.post_shock_assets.clone() - v(&[5., 4., 1.])).amax() < 1e-14);
        assert!(sc.system.fundamental_defaults().is_all());
    }

    #[test]
    fn full_shock_guards() {
        assert!(matches!(
            full_default_shock(&sys_a(), &1.0.into()),
            Err(Error::InvalidInterpolation { .. })
        ));
        assert!(matches!(
            full_default_shock(&sys_a(), &0.0.into()),
            Err(Error::InvalidInterpolation { .. })
        ));
        // bank 0 is owed more than it owes
        let l = DMatrix::from_row_slice(3, 3, &[0., 1., 1., 5., 0., 5., 0., 0., 0.]);
        let s = FinancialSystem::new(l, v(&[1., 1., 1.]), None).unwrap();
        assert!(matches!(
            full_default_shock(&s, &0.5.into()),
            Err(Error::PreconditionViolated { bank: 0, .. })
        ));
    }

    #[test]
    fn boundary_origin_always_stops_at_first_step() {
        let params = ClearingParams::new(0.8);
        for steps in [1, 10, 1000] {
            let sc = relaxed_shock_search(
                &sys_a(),
                &params,
                steps,
                SearchOrigin::FundamentalBoundary,
                SearchStrategy::Linear,
            );
            // with a single step the shock wipes assets out entirely
            if steps == 1 {
                assert!(matches!(sc, Err(Error::SearchExhausted { .. })));
                continue;
            }
            let sc = sc.unwrap();
            assert_eq!(sc.search_steps, Some(1));
            assert!(sc.system.fundamental_defaults().is_all());
        }
    }

    #[test]
    fn unshocked_origin_finds_minimal_step() {
        let params = ClearingParams::new(0.8);
        let s = sys_a();
        let linear = relaxed_shock_search(
            &s,
            &params,
            1000,
            SearchOrigin::Unshocked,
            SearchStrategy::Linear,
        )
        .unwrap();
        let bisect = relaxed_shock_search(
            &s,
            &params,
            1000,
            SearchOrigin::Unshocked,
            SearchStrategy::Bisect,
        )
        .unwrap();
        let k = linear.search_steps.unwrap();
        assert_eq!(bisect.search_steps, Some(k));
        assert!(k > 1);
        let sol = clearing::fictitious_default_sequence(&linear.system, &params).unwrap();
        assert!(sol.defaults.is_all());
        // one step less leaves someone solvent
        let before = s
            .with_external_assets(
                s.pre_shock_assets() - v(&[7., 8., 0.]) * ((k - 1) as f64 / 1000.),
            )
            .unwrap();
        let sol = clearing::fictitious_default_sequence(&before, &params).unwrap();
        assert!(!sol.defaults.is_all());
    }

    #[test]
    fn single_bank_without_claims() {
        // Cp = Cl = 0, so relaxed and full-default interpolation coincide
        let s = FinancialSystem::new(
            DMatrix::from_row_slice(2, 2, &[0., 10., 0., 0.]),
            v(&[10.5, 1.]),
            None,
        )
        .unwrap();
        let params = ClearingParams::new(0.5);
        let full = full_default_shock(&s, &0.4.into()).unwrap();
        let relaxed = relaxed_interpolated_shock(&s, &params, &0.4.into()).unwrap();
        assert!((full.shock - relaxed.scenario.shock).amax() < 1e-14);
        let sc = relaxed_shock_search(
            &s,
            &params,
            1,
            SearchOrigin::Unshocked,
            SearchStrategy::Linear,
        )
        .unwrap();
        assert_eq!(sc.search_steps, Some(1));
    }

    #[test]
    fn over_capitalised_bank_exhausts_search() {
        let s = FinancialSystem::new(
            DMatrix::from_row_slice(2, 2, &[0., 10., 0., 0.]),
            v(&[50., 1.]),
            None,
        )
        .unwrap();
        let params = ClearingParams::new(0.5);
        for strategy in [SearchStrategy::Linear, SearchStrategy::Bisect] {
            let err = relaxed_shock_search(&s, &params, 100, SearchOrigin::Unshocked, strategy)
                .unwrap_err();
            match err {
                Error::SearchExhausted { max_steps, solvent } => {
                    assert_eq!(max_steps, 100);
                    assert_eq!(solvent, vec![0]);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn relaxed_interpolation_on_sys_a() {
        let params = ClearingParams::new(0.5);
        let built = relaxed_interpolated_shock(&sys_a(), &params, &0.5.into()).unwrap();
        assert!((built.candidate.clone() - v(&[5., 5., 0.])).amax() < 1e-14);
        assert!((built.scenario.post_shock_assets.rows(0, 2) - v(&[4.25, 4.5])).amax() < 1e-14);
        assert!(built.candidate_gap < 1e-8);
        assert!((built.printed_form_gap - 0.75).abs() < 1e-12);
        assert!(built.clearing.defaults.is_all());
    }

    #[test]
    fn relaxed_interpolation_with_distinct_rates() {
        let s = sys_a();
        let params = ClearingParams::new(0.8);
        let built = relaxed_interpolated_shock(&s, &params, &0.5.into()).unwrap();
        assert!((built.candidate[0] - 5.479589784838126).abs() < 1e-12);
        assert!((built.candidate[1] - 5.328775387090287).abs() < 1e-12);
        let oracle =
            clearing::picard_clearing_oracle(&built.scenario.system, &params, None).unwrap();
        assert!(linalg::max_gap(&oracle, &built.candidate, 2) < 1e-8);
        // p = m l + (r - m) C p
        let p = &built.clearing.payments;
        let cp = s.relative_claims().matrix() * p;
        for i in 0..2 {
            assert!((p[i] - (0.5 * 10.0 + 0.3 * cp[i])).abs() < 1e-8);
        }
    }

    #[test]
    fn relaxed_interpolation_without_interbank_claims() {
        let built =
            relaxed_interpolated_shock(&sys_0(), &ClearingParams::new(0.7), &0.5.into()).unwrap();
        assert!((built.candidate.clone() - v(&[5., 4., 0.])).amax() < 1e-14);
        assert!((built.scenario.post_shock_assets.rows(0, 2) - v(&[5., 4.])).amax() < 1e-14);
        assert!(built.printed_form_gap < 1e-12);
    }
}
