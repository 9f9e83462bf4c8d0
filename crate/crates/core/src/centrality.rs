//! Generalized Katz centrality `σ = (I - rC)^{-1} β` and the closed-form
//! clearing expressions that reduce to it.
//!
//! Every inverse is applied through a linear solve. System-level results
//! are computed on the bank block of `C`; the sink column of `C` is zero,
//! so bank entries never depend on the sink, and the sink entry is
//! reported as 0.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ClearingParams, FinancialSystem, Rate};
use crate::spectral;

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityResult {
    pub sigma: DVector<f64>,
    pub beta: DVector<f64>,
    pub r: Rate,
    pub m: Option<Rate>,
    /// Max-norm of `(I - rC) σ - β` over the solved rows.
    pub residual: f64,
}

/// `β_i = (1 - m_i) l_i - (r_i - m_i) (C l)_i` on banks; sink entry 0.
pub fn beta_vector(system: &FinancialSystem, r: &Rate, m: &Rate) -> DVector<f64> {
    let l = system.total_liabilities();
    let cl = system.claims_at_par();
    let mut beta = DVector::zeros(system.node_count());
    for i in 0..system.bank_count() {
        let (ri, mi) = (r.at(i), m.at(i));
        beta[i] = (1.0 - mi) * l[i] - (ri - mi) * cl[i];
    }
    beta
}

/// `I - diag(r) C`.
fn attenuated(c: &DMatrix<f64>, r: &Rate) -> DMatrix<f64> {
    let n = c.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - r.at(i) * c[(i, j)]
    })
}

/// Solves `(I - diag(r) C) x = rhs` with no spectral pre-check.
pub fn attenuated_solve(c: &DMatrix<f64>, r: &Rate, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    linalg::solve(attenuated(c, r), rhs)
}

/// `σ = (I - rC)^{-1} β`, after checking `max(r) ρ(C) < 1`.
pub fn generalized_katz(
    c: &DMatrix<f64>,
    r: &Rate,
    beta: &DVector<f64>,
) -> Result<CentralityResult> {
    let n = c.nrows();
    if beta.len() != n {
        return Err(Error::DimensionMismatch {
            what: "beta",
            expected: n,
            found: beta.len(),
        });
    }
    let radius = spectral::spectral_radius(c, spectral::DEFAULT_TOL, spectral::DEFAULT_MAX_ITER)?;
    let rate = r.max().max(0.0);
    if rate * radius >= 1.0 - spectral::INVERTIBILITY_MARGIN {
        return Err(Error::SpectralCondition { rate, radius });
    }
    let lhs = attenuated(c, r);
    let sigma = linalg::solve(lhs.clone(), beta)?;
    let residual = (lhs * &sigma - beta).amax();
    Ok(CentralityResult {
        sigma,
        beta: beta.clone(),
        r: r.clone(),
        m: None,
        residual,
    })
}

/// The generalized Katz measure of a system under the full-default shock:
/// `β` from [`beta_vector`], solved on the bank block.
pub fn system_katz(system: &FinancialSystem, r: &Rate, m: &Rate) -> Result<CentralityResult> {
    let banks = system.bank_count();
    let beta = beta_vector(system, r, m);
    let block = system.relative_claims().bank_block();
    let inner = generalized_katz(
        &block,
        &r.truncated(banks),
        &beta.rows(0, banks).into_owned(),
    )?;
    let mut sigma = DVector::zeros(system.node_count());
    sigma.rows_mut(0, banks).copy_from(&inner.sigma);
    Ok(CentralityResult {
        sigma,
        beta,
        r: r.clone(),
        m: Some(m.clone()),
        residual: inner.residual,
    })
}

/// Textbook Katz centrality `(I - αA)^{-1} 1`.
pub fn standard_katz(adjacency: &DMatrix<f64>, alpha: f64) -> Result<DVector<f64>> {
    let ones = DVector::from_element(adjacency.nrows(), 1.0);
    generalized_katz(adjacency, &Rate::Uniform(alpha), &ones).map(|res| res.sigma)
}

/// Truncated walk sum `Σ_{k=0}^{terms} (rC)^k β`.
pub fn neumann_katz(c: &DMatrix<f64>, r: &Rate, beta: &DVector<f64>, terms: usize) -> DVector<f64> {
    let n = c.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, j| r.at(i) * c[(i, j)]);
    let mut term = beta.clone();
    let mut sum = beta.clone();
    for _ in 0..terms {
        term = &scaled * term;
        sum += &term;
    }
    sum
}

fn bank_vector(v: &DVector<f64>, banks: usize) -> DVector<f64> {
    v.rows(0, banks).into_owned()
}

fn pad_sink(bank_values: DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    out.rows_mut(0, bank_values.len()).copy_from(&bank_values);
    out
}

/// Clearing vector under the full-default shock:
/// `p = (I - rC)^{-1} ((r - m) C l - (1 - m) l) + l`. Sink entry 0.
pub fn closed_form_full_shock(
    system: &FinancialSystem,
    params: &ClearingParams,
    m: &Rate,
) -> Result<DVector<f64>> {
    let banks = system.bank_count();
    let r = params.recovery.truncated(banks);
    let l = bank_vector(system.total_liabilities(), banks);
    let cl = bank_vector(&system.claims_at_par(), banks);
    let rhs = DVector::from_fn(banks, |i, _| {
        (r.at(i) - m.at(i)) * cl[i] - (1.0 - m.at(i)) * l[i]
    });
    let block = system.relative_claims().bank_block();
    let p = attenuated_solve(&block, &r, &rhs)? + l;
    Ok(pad_sink(p, system.node_count()))
}

/// The self-consistent clearing candidate of the relaxed shock,
/// `q = (I - (r - m) C)^{-1} m l`. Sink entry 0.
pub fn relaxed_candidate(system: &FinancialSystem, r: &Rate, m: &Rate) -> Result<DVector<f64>> {
    let banks = system.bank_count();
    let l = bank_vector(system.total_liabilities(), banks);
    let rhs = DVector::from_fn(banks, |i, _| m.at(i) * l[i]);
    let block = system.relative_claims().bank_block();
    let q = attenuated_solve(&block, &r.minus(m, banks), &rhs)?;
    Ok(pad_sink(q, system.node_count()))
}

/// The relaxed-shock closed form as printed,
/// `p = (I - (r - m) C)^{-1} m (l + r C l)`. Sink entry 0.
pub fn printed_relaxed_closed_form(
    system: &FinancialSystem,
    r: &Rate,
    m: &Rate,
) -> Result<DVector<f64>> {
    let banks = system.bank_count();
    let l = bank_vector(system.total_liabilities(), banks);
    let cl = bank_vector(&system.claims_at_par(), banks);
    let rhs = DVector::from_fn(banks, |i, _| m.at(i) * (l[i] + r.at(i) * cl[i]));
    let block = system.relative_claims().bank_block();
    let p = attenuated_solve(&block, &r.minus(m, banks), &rhs)?;
    Ok(pad_sink(p, system.node_count()))
}
