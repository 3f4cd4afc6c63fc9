use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

use super::system::{column_of, SteadyStateSystem, Variable};
use crate::error::{Error, Result};

/// Relative rank tolerance for the floating-point reduction.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Scalar types the row reduction runs over.
pub trait PivotScalar: Clone + Num + Signed + PartialOrd {
    /// Whether `self` counts as zero next to the largest pivot magnitude seen.
    fn negligible(&self, scale: &Self) -> bool;
}

impl PivotScalar for f64 {
    fn negligible(&self, scale: &f64) -> bool {
        self.abs() <= RANK_TOLERANCE * scale
    }
}

impl PivotScalar for BigRational {
    fn negligible(&self, _scale: &BigRational) -> bool {
        self.is_zero()
    }
}

/// Reduces augmented `rows` (last column = right-hand side) to reduced row
/// echelon form with partial pivoting. Only the first `ncols` columns are
/// eligible as pivots. Returns the pivot columns in row order.
pub fn rref_in_place<T: PivotScalar>(rows: &mut [Vec<T>], ncols: usize) -> Vec<usize> {
    let mut scale = rows
        .iter()
        .flat_map(|r| r[..ncols].iter())
        .map(|v| v.abs())
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let mut pivots = Vec::new();
    let mut lead = 0;
    for c in 0..ncols {
        if lead >= rows.len() {
            break;
        }
        let (best, mag) = (lead..rows.len())
            .map(|i| (i, rows[i][c].abs()))
            .fold((lead, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag.negligible(&scale) {
            for row in rows[lead..].iter_mut() {
                row[c] = T::zero();
            }
            continue;
        }
        if mag > scale {
            scale = mag;
        }
        rows.swap(lead, best);
        let pivot = rows[lead][c].clone();
        for v in rows[lead].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        rows[lead][c] = T::one();
        let pivot_row = rows[lead].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == lead || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v = v.clone() - factor.clone() * p.clone();
                }
            }
            row[c] = T::zero();
        }
        pivots.push(c);
        lead += 1;
    }
    pivots
}

/// The single constraint left on household deposits after reduction,
/// `sum_i coefficients[i] * M_i = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSumRow {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// Augmented reduced row echelon form; rows past the rank are zero.
    pub rref: Vec<Vec<f64>>,
    pub pivot_columns: Vec<usize>,
    pub free_columns: Vec<usize>,
    pub constant_sum_row: ConstantSumRow,
    pub labels: Vec<Variable>,
    pub nw: usize,
    pub(crate) source: SteadyStateSystem,
}

impl ReducedSystem {
    pub fn rank(&self) -> usize {
        self.pivot_columns.len()
    }

    pub fn solution_dimension(&self) -> usize {
        self.free_columns.len()
    }

    pub fn system(&self) -> &SteadyStateSystem {
        &self.source
    }
}

pub fn reduce(system: &SteadyStateSystem) -> Result<ReducedSystem> {
    let n = system.unknowns();
    let nw = system.nw;
    let mut rows = system.augmented();
    let pivots = rref_in_place(&mut rows, n);

    let expected = n - (nw - 1);
    if pivots.len() != expected {
        return Err(Error::ReductionAnomaly { expected, observed: pivots.len() });
    }
    let rhs_scale = rows.iter().map(|r| r[n].abs()).fold(1.0, f64::max);
    if rows[pivots.len()..].iter().any(|r| r[n].abs() > RANK_TOLERANCE * rhs_scale) {
        return Err(Error::ReductionAnomaly { expected, observed: pivots.len() + 1 });
    }
    for r in rows[pivots.len()..].iter_mut() {
        r.iter_mut().for_each(|v| *v = 0.0);
    }

    let free_columns: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let m_cols: Vec<usize> = (0..nw).map(|i| column_of(Variable::Deposits(i), nw)).collect();
    if free_columns.iter().any(|c| !m_cols.contains(c)) {
        return Err(Error::ReductionPattern(format!(
            "free columns {:?} are not all household deposits",
            free_columns.iter().map(|&c| system.labels[c].to_string()).collect::<Vec<_>>()
        )));
    }

    let m1 = m_cols[0];
    let row_idx = pivots
        .iter()
        .position(|&c| c == m1)
        .ok_or_else(|| Error::ReductionPattern("M_1 is not a pivot".into()))?;
    let row = &rows[row_idx];
    let coefficients: Vec<f64> = m_cols.iter().map(|&c| row[c]).collect();
    let off_pattern = (0..n).filter(|c| !m_cols.contains(c)).any(|c| row[c].abs() > 1e-9);
    if off_pattern || coefficients.iter().any(|v| (v - 1.0).abs() > 1e-9) {
        return Err(Error::ReductionPattern("the M_1 row is not a plain sum over deposits".into()));
    }
    let constant_sum_row = ConstantSumRow { coefficients, rhs: row[n] };

    Ok(ReducedSystem {
        rref: rows,
        pivot_columns: pivots,
        free_columns,
        constant_sum_row,
        labels: system.labels.clone(),
        nw,
        source: system.clone(),
    })
}

/// Exact rational reduction of the same system.
#[derive(Debug, Clone)]
pub struct ExactReduction {
    pub rref: Vec<Vec<BigRational>>,
    pub pivot_columns: Vec<usize>,
}

pub fn reduce_exact(system: &SteadyStateSystem) -> ExactReduction {
    let mut rows = system.exact_augmented();
    let pivot_columns = rref_in_place(&mut rows, system.unknowns());
    ExactReduction { rref: rows, pivot_columns }
}

impl ExactReduction {
    /// Largest absolute entrywise gap to a floating-point reduction.
    pub fn max_deviation(&self, reduced: &ReducedSystem) -> f64 {
        self.rref
            .iter()
            .zip(&reduced.rref)
            .flat_map(|(e, f)| e.iter().zip(f).map(|(a, b)| (a.to_f64().unwrap_or(f64::NAN) - b).abs()))
            .fold(0.0, f64::max)
    }
}
