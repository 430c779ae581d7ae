use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use crate::LpError;

/// Direction of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    /// Single-letter code used by the MPS ROWS section.
    pub fn mps_code(self) -> char {
        match self {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
    /// Sorted by column index, no duplicates, no zeros.
    pub terms: Vec<(usize, f64)>,
}

/// A minimization LP with bounded columns and sparse rows.
///
/// Columns may have infinite bounds on either side. Row terms are merged on
/// insertion so a (row, column) pair is stored at most once.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub name: String,
    columns: Vec<Column>,
    rows: Vec<Row>,
    /// Constant added to the objective value.
    pub objective_offset: f64,
}

impl LpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn add_col(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> Result<usize, LpError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(LpError::InvalidBounds { name, lower, upper });
        }
        if lower > upper {
            return Err(LpError::InvalidBounds { name, lower, upper });
        }
        if !cost.is_finite() {
            return Err(LpError::NonFinite(format!("cost of column {name}")));
        }
        self.columns.push(Column {
            name,
            lower,
            upper,
            cost,
        });
        Ok(self.columns.len() - 1)
    }

    /// Adds a row, summing repeated column entries and dropping exact zeros.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, LpError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(LpError::NonFinite(format!("rhs of row {name}")));
        }
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (col, value) in terms {
            if col >= self.columns.len() {
                return Err(LpError::UnknownColumn { row: name, col });
            }
            if !value.is_finite() {
                return Err(LpError::NonFinite(format!("coefficient in row {name}")));
            }
            merged.push((col, value));
        }
        merged.sort_by_key(|&(c, _)| c);
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
        for (col, value) in merged {
            match terms.last_mut() {
                Some(last) if last.0 == col => last.1 += value,
                _ => terms.push((col, value)),
            }
        }
        terms.retain(|&(_, v)| v != 0.0);
        self.rows.push(Row {
            name,
            sense,
            rhs,
            terms,
        });
        Ok(self.rows.len() - 1)
    }

    pub fn set_cost(&mut self, col: usize, cost: f64) {
        self.columns[col].cost = cost;
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.columns[col].lower = lower;
        self.columns[col].upper = upper;
    }

    pub fn set_rhs(&mut self, row: usize, rhs: f64) {
        self.rows[row].rhs = rhs;
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.name == name)
    }

    /// Objective value (including the offset) at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .columns
                .iter()
                .zip(x)
                .map(|(c, v)| c.cost * v)
                .sum::<f64>()
    }

    /// Row activities `a_i · x`.
    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.terms.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Column-major copy of the constraint matrix: for each column the list
    /// of `(row, value)` pairs in increasing row order.
    pub fn column_entries(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.columns.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in &row.terms {
                cols[c].push((i, v));
            }
        }
        cols
    }

    /// Checks structural invariants: finite data, ordered bounds, unique names.
    pub fn validate(&self) -> Result<(), LpError> {
        for c in &self.columns {
            if c.lower > c.upper || c.lower.is_nan() || c.upper.is_nan() {
                return Err(LpError::InvalidBounds {
                    name: c.name.clone(),
                    lower: c.lower,
                    upper: c.upper,
                });
            }
        }
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for c in &self.columns {
            if seen.insert(c.name.as_str(), 0).is_some() {
                return Err(LpError::DuplicateName(c.name.clone()));
            }
        }
        seen.clear();
        for r in &self.rows {
            if seen.insert(r.name.as_str(), 0).is_some() {
                return Err(LpError::DuplicateName(r.name.clone()));
            }
        }
        Ok(())
    }

    /// Human-readable dump: one line per row with name, terms, sense and rhs,
    /// followed by the objective and column bounds.
    pub fn write_dump<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "* problem {}", self.name)?;
        writeln!(
            out,
            "* {} rows, {} columns, {} nonzeros",
            self.num_rows(),
            self.num_cols(),
            self.num_nonzeros()
        )?;
        write!(out, "minimize:")?;
        for c in self.columns.iter().filter(|c| c.cost != 0.0) {
            write!(out, " {:+} {}", c.cost, c.name)?;
        }
        if self.objective_offset != 0.0 {
            write!(out, " {:+}", self.objective_offset)?;
        }
        writeln!(out)?;
        writeln!(out, "subject to:")?;
        for r in &self.rows {
            write!(out, "{}:", r.name)?;
            for &(c, v) in &r.terms {
                write!(out, " {:+} {}", v, self.columns[c].name)?;
            }
            writeln!(out, " {} {}", r.sense, r.rhs)?;
        }
        writeln!(out, "bounds:")?;
        for c in &self.columns {
            writeln!(out, "{} <= {} <= {}", c.lower, c.name, c.upper)?;
        }
        Ok(())
    }
}
