//! Financial-system data model: liabilities, assets, relative claims and
//! default classification.
//!
//! Nodes are indexed `0..N`; the last index is the sink, which collects all
//! obligations to the outside world, owes nothing inside the system and is
//! treated as defaulted by convention.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative band on the solvency boundary: a node defaults only when its
/// equity is below `-DEFAULT_BAND * max(1, l_i)`.
pub const DEFAULT_BAND: f64 = 1e-12;

/// A rate that is either shared by every node or given per node. Per-node
/// values act as a diagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Rate {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Rate::Uniform(v) => *v,
            Rate::PerNode(v) => v[i],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Rate::Uniform(v) => *v,
            Rate::PerNode(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// The first `n` entries; uniform rates are unchanged.
    pub fn truncated(&self, n: usize) -> Rate {
        match self {
            Rate::Uniform(v) => Rate::Uniform(*v),
            Rate::PerNode(v) => Rate::PerNode(v[..n].to_vec()),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Rate::Uniform(_))
    }

    /// Entry-wise difference, used for the `(r - m)` attenuation.
    pub fn minus(&self, other: &Rate, n: usize) -> Rate {
        match (self, other) {
            (Rate::Uniform(a), Rate::Uniform(b)) => Rate::Uniform(a - b),
            _ => Rate::PerNode((0..n).map(|i| self.at(i) - other.at(i)).collect()),
        }
    }

    fn check_len(&self, what: &'static str, n: usize) -> Result<()> {
        if let Rate::PerNode(v) = self {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    fn values(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.at(i)).collect()
    }

    /// Checks every entry lies in the closed unit interval.
    pub fn validate_unit(&self, what: &'static str, n: usize) -> Result<()> {
        self.check_len(what, n)?;
        for (index, value) in self.values(n).into_iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidRate {
                    what,
                    index,
                    value,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    /// Checks every bank entry lies strictly inside (0, 1). The sink entry,
    /// when given, is ignored.
    pub fn validate_interpolation(&self, n: usize) -> Result<()> {
        self.check_len("interpolation", n)?;
        for (index, value) in self.values(n.saturating_sub(1)).into_iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidInterpolation { index, value });
            }
        }
        Ok(())
    }
}

impl From<f64> for Rate {
    fn from(v: f64) -> Self {
        Rate::Uniform(v)
    }
}

/// Recovery rates of the clearing model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingParams {
    /// Interbank recovery rate `r`.
    pub recovery: Rate,
    /// Recovery rate on external assets `r_a`.
    pub external_recovery: f64,
}

impl ClearingParams {
    pub fn new(recovery: impl Into<Rate>) -> Self {
        Self {
            recovery: recovery.into(),
            external_recovery: 1.0,
        }
    }

    pub fn with_external_recovery(mut self, r_a: f64) -> Self {
        self.external_recovery = r_a;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.recovery.validate_unit("recovery rate", n)?;
        Rate::Uniform(self.external_recovery).validate_unit("external recovery rate", 1)
    }
}

impl Default for ClearingParams {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// Column-normalised claims: `C[i][j] = L[j][i] / l[j]` when `l[j] > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeClaims {
    matrix: DMatrix<f64>,
}

impl RelativeClaims {
    /// Builds `C` from any square liability matrix. No sink convention is
    /// assumed, so this also covers closed systems.
    pub fn from_liabilities(liabilities: &DMatrix<f64>) -> Self {
        let n = liabilities.nrows();
        let totals: Vec<f64> = liabilities.row_iter().map(|row| row.sum()).collect();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if totals[j] > 0.0 {
                liabilities[(j, i)] / totals[j]
            } else {
                0.0
            }
        });
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The leading `(N-1) x (N-1)` block, i.e. claims among banks only.
    pub fn bank_block(&self) -> DMatrix<f64> {
        let n = self.dim().saturating_sub(1);
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.matrix.column_iter().map(|c| c.sum()).collect()
    }
}

/// Default flags, one per node. Read as the diagonal 0/1 matrix `D`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefaultIndicator {
    flags: Vec<bool>,
}

impl DefaultIndicator {
    /// Forces the sink (last) flag on.
    pub fn new(mut flags: Vec<bool>) -> Self {
        if let Some(last) = flags.last_mut() {
            *last = true;
        }
        Self { flags }
    }

    pub fn sink_only(n: usize) -> Self {
        Self::new(vec![false; n])
    }

    pub fn all(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_defaulted(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    /// Every node, sink included, is flagged: `D = I`.
    pub fn is_all(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }

    pub fn defaulted(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.flags[i]).collect()
    }

    pub fn solvent(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.flags[i]).collect()
    }

    /// True when every node flagged here is also flagged in `other`.
    pub fn is_subset_of(&self, other: &DefaultIndicator) -> bool {
        self.flags.iter().zip(&other.flags).all(|(&a, &b)| !a || b)
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            self.flags.iter().map(|&f| if f { 1.0 } else { 0.0 }),
        ))
    }
}

/// A validated obligation network with its sink node stored last.
#[derive(Debug, Clone, PartialEq)]
pub struct FinancialSystem {
    liabilities: DMatrix<f64>,
    external_assets: DVector<f64>,
    pre_shock_assets: DVector<f64>,
    totals: DVector<f64>,
    claims: RelativeClaims,
}

impl FinancialSystem {
    /// Validates a system whose liability matrix already contains the sink
    /// as its last row and column. `external_assets` defaults to the
    /// pre-shock assets.
    pub fn new(
        liabilities: DMatrix<f64>,
        pre_shock_assets: DVector<f64>,
        external_assets: Option<DVector<f64>>,
    ) -> Result<Self> {
        let (rows, cols) = liabilities.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        for (k, v) in liabilities.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "liabilities",
                    index: k,
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = liabilities[(i, j)];
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        for i in 0..n {
            if liabilities[(i, i)] != 0.0 {
                return Err(Error::NonzeroDiagonal { index: i });
            }
        }
        for j in 0..n {
            let v = liabilities[(n - 1, j)];
            if v != 0.0 {
                return Err(Error::NonzeroSinkRow { col: j, value: v });
            }
        }

        check_assets("pre_shock_assets", &pre_shock_assets, n)?;
        if !(pre_shock_assets[n - 1] > 0.0) {
            return Err(Error::NonPositiveSinkAssets(pre_shock_assets[n - 1]));
        }
        let external_assets = match external_assets {
            Some(a) => {
                check_assets("external_assets", &a, n)?;
                a
            }
            None => pre_shock_assets.clone(),
        };

        let totals = DVector::from_iterator(n, liabilities.row_iter().map(|r| r.sum()));
        let claims = RelativeClaims::from_liabilities(&liabilities);
        Ok(Self {
            liabilities,
            external_assets,
            pre_shock_assets,
            totals,
            claims,
        })
    }

    /// Builds a system from the bank-to-bank block and each bank's
    /// liabilities to the outside world; the sink row and column are
    /// appended. `pre_shock_assets` includes the sink entry.
    pub fn from_bank_block(
        bank_liabilities: &DMatrix<f64>,
        external_liabilities: &DVector<f64>,
        pre_shock_assets: DVector<f64>,
        external_assets: Option<DVector<f64>>,
    ) -> Result<Self> {
        let (rows, cols) = bank_liabilities.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if external_liabilities.len() != rows {
            return Err(Error::DimensionMismatch {
                what: "external liabilities",
                expected: rows,
                found: external_liabilities.len(),
            });
        }
        let n = rows + 1;
        let mut full = DMatrix::zeros(n, n);
        full.view_mut((0, 0), (rows, rows))
            .copy_from(bank_liabilities);
        for i in 0..rows {
            full[(i, n - 1)] = external_liabilities[i];
        }
        Self::new(full, pre_shock_assets, external_assets)
    }

    /// Same network with different external assets `a`.
    pub fn with_external_assets(&self, external_assets: DVector<f64>) -> Result<Self> {
        check_assets("external_assets", &external_assets, self.node_count())?;
        Ok(Self {
            external_assets,
            ..self.clone()
        })
    }

    /// Every currency quantity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            &self.liabilities * factor,
            &self.pre_shock_assets * factor,
            Some(&self.external_assets * factor),
        )
    }

    pub fn node_count(&self) -> usize {
        self.liabilities.nrows()
    }

    pub fn bank_count(&self) -> usize {
        self.node_count() - 1
    }

    pub fn sink(&self) -> usize {
        self.node_count() - 1
    }

    pub fn liabilities(&self) -> &DMatrix<f64> {
        &self.liabilities
    }

    pub fn external_assets(&self) -> &DVector<f64> {
        &self.external_assets
    }

    pub fn pre_shock_assets(&self) -> &DVector<f64> {
        &self.pre_shock_assets
    }

    /// Row sums `l` of the liability matrix; zero for the sink.
    pub fn total_liabilities(&self) -> &DVector<f64> {
        &self.totals
    }

    pub fn relative_claims(&self) -> &RelativeClaims {
        &self.claims
    }

    /// `C l`: value of interbank claims if everyone pays in full.
    pub fn claims_at_par(&self) -> DVector<f64> {
        self.claims.matrix() * &self.totals
    }

    /// Balance-sheet equity `a + C x - l`.
    pub fn equity(&self, payments: &DVector<f64>) -> DVector<f64> {
        &self.external_assets + self.claims.matrix() * payments - &self.totals
    }

    /// `D(x)`: node `i` defaults when `a_i + (C x)_i < l_i` (outside the
    /// tolerance band); the sink is always flagged.
    pub fn default_indicator(&self, payments: &DVector<f64>) -> DefaultIndicator {
        let equity = self.equity(payments);
        let flags = (0..self.node_count())
            .map(|i| equity[i] < -DEFAULT_BAND * self.totals[i].max(1.0))
            .collect();
        DefaultIndicator::new(flags)
    }

    /// Banks insolvent even when every other bank pays in full.
    pub fn fundamental_defaults(&self) -> DefaultIndicator {
        self.default_indicator(&self.totals)
    }

    /// `a_i > 0` for every node, the sufficient condition for a unique
    /// clearing vector.
    pub fn has_positive_assets(&self) -> bool {
        self.external_assets.iter().all(|&a| a > 0.0)
    }

    /// Shock implied by the current assets, `s = a - o`.
    pub fn shock(&self) -> DVector<f64> {
        &self.external_assets - &self.pre_shock_assets
    }
}

fn check_assets(what: &'static str, v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            what,
            expected: n,
            found: v.len(),
        });
    }
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { what, index });
        }
        if value < 0.0 {
            return Err(Error::NegativeAssets { what, index, value });
        }
    }
    Ok(())
}
