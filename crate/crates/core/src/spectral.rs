//! Spectral radius of nonnegative matrices and the invertibility of
//! `I - rC`.
//!
//! The Perron root is found per strongly connected component: an
//! irreducible block `A` is shifted to `A + I`, which is primitive, and
//! power-iterated as a row vector (`x ← x (A + I)`). At each step the
//! ratios `(x(A + I))_i / x_i` bracket `ρ(A) + 1` from both sides
//! (Collatz–Wielandt), so convergence is declared on the bracket width
//! rather than on a Rayleigh-quotient delta. Single-node components without
//! a self loop contribute 0.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::DefaultIndicator;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200_000;
/// Margin below 1 required for `r ρ(C)` to count as invertible.
pub const INVERTIBILITY_MARGIN: f64 = 1e-12;

/// `g(x, C) = min over {i : x_i != 0} of (x C)_i / x_i`, a lower bound on
/// `ρ(C)` for any nonnegative nonzero `x`.
pub fn collatz_wielandt_value(c: &DMatrix<f64>, x: &DVector<f64>) -> Result<f64> {
    if let Some(index) = x.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeTestVector { index });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let xc = c.tr_mul(x);
    Ok((0..x.len())
        .filter(|&i| x[i] != 0.0)
        .map(|i| xc[i] / x[i])
        .fold(f64::INFINITY, f64::min))
}

/// Perron root estimate with its enclosing bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronEstimate {
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    /// Approximate left Perron vector of the dominant component, zero
    /// elsewhere.
    pub left_vector: DVector<f64>,
    pub iterations: usize,
}

/// Perron root of a nonnegative square matrix to absolute tolerance `tol`.
pub fn perron_root(c: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<PerronEstimate> {
    let n = c.nrows();
    for i in 0..n {
        for j in 0..n {
            if c[(i, j)] < 0.0 {
                return Err(Error::NegativeMatrix { row: i, col: j });
            }
        }
    }
    let mut best = PerronEstimate {
        radius: 0.0,
        lower: 0.0,
        upper: 0.0,
        left_vector: DVector::zeros(n),
        iterations: 0,
    };
    if n == 0 {
        return Ok(best);
    }
    best.left_vector[0] = 1.0;

    let mut graph = DiGraph::<usize, ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|i| graph.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if c[(i, j)] > 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }

    let mut total_iterations = 0;
    for component in tarjan_scc(&graph) {
        let idx: Vec<usize> = component.iter().map(|&node| graph[node]).collect();
        let est = if idx.len() == 1 {
            let v = c[(idx[0], idx[0])];
            let mut x = DVector::zeros(n);
            x[idx[0]] = 1.0;
            PerronEstimate {
                radius: v,
                lower: v,
                upper: v,
                left_vector: x,
                iterations: 0,
            }
        } else {
            irreducible_root(c, &idx, tol, max_iter)?
        };
        total_iterations += est.iterations;
        if est.radius > best.radius {
            best = est;
        }
    }
    best.iterations = total_iterations;
    Ok(best)
}

fn irreducible_root(
    c: &DMatrix<f64>,
    idx: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<PerronEstimate> {
    let block = linalg::submatrix(c, idx);
    let k = idx.len();
    let mut x = DVector::from_element(k, 1.0 / k as f64);
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;

    for it in 1..=max_iter {
        let y = block.tr_mul(&x) + &x;
        let (lo, hi) = (0..k).fold((f64::INFINITY, 0.0_f64), |(lo, hi), i| {
            let q = y[i] / x[i];
            (lo.min(q), hi.max(q))
        });
        lower = f64::max(lower, lo - 1.0);
        upper = f64::min(upper, hi - 1.0);
        x = &y / y.sum();
        if upper - lower <= tol {
            let mut full = DVector::zeros(c.nrows());
            for (i, &node) in idx.iter().enumerate() {
                full[node] = x[i];
            }
            return Ok(PerronEstimate {
                radius: 0.5 * (lower + upper),
                lower,
                upper,
                left_vector: full,
                iterations: it,
            });
        }
    }
    Err(Error::PowerIterationStall {
        iterations: max_iter,
        width: upper - lower,
    })
}

/// `ρ(C)` to absolute tolerance `tol`.
pub fn spectral_radius(c: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    perron_root(c, tol, max_iter).map(|e| e.radius)
}

/// Range of `r` for which invertibility of `I - rC` is guaranteed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RInterval {
    pub lower: f64,
    pub upper: f64,
    pub upper_inclusive: bool,
}

impl RInterval {
    pub fn for_sink(has_sink: bool) -> Self {
        Self {
            lower: 0.0,
            upper: 1.0,
            upper_inclusive: has_sink,
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lower && (r < self.upper || (self.upper_inclusive && r == self.upper))
    }
}

impl std::fmt::Display for RInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let close = if self.upper_inclusive { ']' } else { ')' };
        write!(f, "[{}, {}{}", self.lower, self.upper, close)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub radius_estimate: f64,
    pub radius_upper_bound: f64,
    /// Best Collatz–Wielandt value over the sampled test vectors.
    pub collatz_wielandt_lower: f64,
    pub invertible_for_r: RInterval,
    pub iterations: usize,
}

impl SpectralReport {
    pub fn compute(c: &DMatrix<f64>, has_sink: bool) -> Result<Self> {
        let est = perron_root(c, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let mut cw = collatz_wielandt_value(c, &est.left_vector).unwrap_or(0.0);
        if c.nrows() > 0 {
            let ones = DVector::from_element(c.nrows(), 1.0);
            cw = cw.max(collatz_wielandt_value(c, &ones)?);
        }
        Ok(Self {
            radius_estimate: est.radius,
            radius_upper_bound: est.upper,
            collatz_wielandt_lower: cw,
            invertible_for_r: RInterval::for_sink(has_sink),
            iterations: est.iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvertibilityCheck {
    pub invertible: bool,
    pub r: f64,
    pub report: SpectralReport,
}

/// `I - rC` is invertible when `r ρ(C) < 1 - 1e-12`.
pub fn check_invertibility(c: &DMatrix<f64>, r: f64, has_sink: bool) -> Result<InvertibilityCheck> {
    let report = SpectralReport::compute(c, has_sink)?;
    Ok(InvertibilityCheck {
        invertible: r * report.radius_estimate < 1.0 - INVERTIBILITY_MARGIN,
        r,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusComparison {
    pub masked: f64,
    pub full: f64,
    pub holds: bool,
}

/// Compares `ρ(DCD)` with `ρ(C)`.
pub fn corollary_radius_bound(
    c: &DMatrix<f64>,
    defaults: &DefaultIndicator,
) -> Result<RadiusComparison> {
    let d = defaults.as_matrix();
    let masked = &d * c * &d;
    let masked = spectral_radius(&masked, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let full = spectral_radius(c, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(RadiusComparison {
        masked,
        full,
        holds: masked <= full + 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn m(n: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, x)
    }

    #[test]
    fn collatz_wielandt_cases() {
        let block = m(2, &[0., 0.3, 0.2, 0.]);
        let ones = DVector::from_element(2, 1.0);
        assert!((collatz_wielandt_value(&block, &ones).unwrap() - 0.2).abs() < 1e-15);

        let zero = DMatrix::zeros(3, 3);
        let x = DVector::from_vec(vec![1., 2., 3.]);
        assert_eq!(collatz_wielandt_value(&zero, &x).unwrap(), 0.0);

        // zero coordinate excluded from the min
        let c = m(2, &[0.5, 0., 0., 0.1]);
        let x = DVector::from_vec(vec![1., 0.]);
        assert_eq!(collatz_wielandt_value(&c, &x).unwrap(), 0.5);

        assert!(matches!(
            collatz_wielandt_value(&c, &DVector::zeros(2)),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            collatz_wielandt_value(&c, &DVector::from_vec(vec![1., -1.])),
            Err(Error::NegativeTestVector { index: 1 })
        ));
    }

    #[test]
    fn radius_cases() {
        let c = sys_a().relative_claims().matrix().clone();
        let rho = spectral_radius(&c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        // bank block [[0, .3], [.2, 0]] has eigenvalues ±sqrt(0.06)
        assert!((rho - 0.06f64.sqrt()).abs() < 1e-10);
        assert!(rho < 1.0);

        let perm = m(2, &[0., 1., 1., 0.]);
        let rho = spectral_radius(&perm, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);

        assert_eq!(
            spectral_radius(&DMatrix::zeros(4, 4), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap(),
            0.0
        );
    }

    #[test]
    fn nilpotent_and_reducible_matrices() {
        // strictly upper triangular chain: ρ = 0
        let chain = m(3, &[0., 1., 0., 0., 0., 1., 0., 0., 0.]);
        assert_eq!(spectral_radius(&chain, 1e-12, 1000).unwrap(), 0.0);
        // two cycles of different weight joined one way
        let c = m(
            4,
            &[
                0., 0.5, 0., 0., 0.5, 0., 1., 0., 0., 0., 0., 0.9, 0., 0., 0.9, 0.,
            ],
        );
        assert!((spectral_radius(&c, 1e-12, 100_000).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn stalls_are_reported() {
        let c = m(2, &[0., 1., 0.25, 0.]);
        assert!(matches!(
            perron_root(&c, 0.0, 3),
            Err(Error::PowerIterationStall { .. })
        ));
    }

    #[test]
    fn rejects_negative_matrix() {
        assert!(matches!(
            spectral_radius(&m(2, &[0., -1., 0., 0.]), 1e-10, 10),
            Err(Error::NegativeMatrix { row: 0, col: 1 })
        ));
    }

    #[test]
    fn invertibility_cases() {
        let c = sys_a().relative_claims().matrix().clone();
        let check = check_invertibility(&c, 1.0, true).unwrap();
        assert!(check.invertible);
        assert_eq!(check.report.invertible_for_r.to_string(), "[0, 1]");
        assert!(check.report.collatz_wielandt_lower <= check.report.radius_estimate + 1e-8);

        let stochastic = m(3, &[0., 0.5, 0.2, 0.4, 0., 0.8, 0.6, 0.5, 0.]);
        let check = check_invertibility(&stochastic, 1.0, false).unwrap();
        assert!(!check.invertible);
        assert!(!check.report.invertible_for_r.contains(1.0));
        assert!(
            check_invertibility(&stochastic, 0.0, false)
                .unwrap()
                .invertible
        );
        assert!(
            check_invertibility(&stochastic, 0.99, false)
                .unwrap()
                .invertible
        );
    }

    #[test]
    fn masked_radius_cases() {
        let c = sys_a().relative_claims().matrix().clone();
        let all = corollary_radius_bound(&c, &DefaultIndicator::all(3)).unwrap();
        assert!(all.holds);
        assert_eq!(all.masked, all.full);
        let sink = corollary_radius_bound(&c, &DefaultIndicator::sink_only(3)).unwrap();
        assert_eq!(sink.masked, 0.0);
        assert!(sink.holds);
    }
}
