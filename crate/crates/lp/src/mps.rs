//! Fixed-format MPS writer.

use std::collections::HashMap;
use std::io::Write;

use crate::problem::LpProblem;
use crate::LpError;

const OBJ_ROW: &str = "COST";

/// Fixed-format name: printable non-space ASCII, at most 8 characters.
pub fn mps_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_graphic() { c } else { '_' })
        .take(8)
        .collect()
}

/// At most 12 significant digits, reduced until the number fits the
/// 12-character field; exponent form only when the plain form is too wide.
fn fmt_num(v: f64) -> String {
    for digits in (1..=12).rev() {
        let rounded: f64 = format!("{v:.*e}", digits - 1).parse().unwrap_or(v);
        let plain = rounded.to_string();
        if plain.len() <= 12 {
            return plain;
        }
        let exp = format!("{rounded:e}");
        if exp.len() <= 12 {
            return exp;
        }
    }
    format!("{v:.0e}")
}

fn mangle<'a>(names: impl Iterator<Item = &'a str>, reserved: &[&str]) -> Result<Vec<String>, LpError> {
    let mut seen: HashMap<String, &str> = HashMap::new();
    let mut out = Vec::new();
    let mut clashes = Vec::new();
    for r in reserved {
        seen.insert(r.to_string(), r);
    }
    for name in names {
        let short = mps_name(name);
        if short.is_empty() {
            clashes.push(format!("<empty> ({name:?})"));
        } else if let Some(prev) = seen.get(&short) {
            clashes.push(format!("{prev} / {name} -> {short}"));
        } else {
            seen.insert(short.clone(), name);
        }
        out.push(short);
    }
    if clashes.is_empty() {
        Ok(out)
    } else {
        Err(LpError::NameCollision(clashes))
    }
}

fn line<W: Write>(out: &mut W, code: &str, a: &str, b: &str, v: Option<f64>) -> std::io::Result<()> {
    let mut s = format!(" {code:<2} {a:<8}  {b:<8}");
    if let Some(v) = v {
        s.push_str(&format!("  {:>12}", fmt_num(v)));
    }
    writeln!(out, "{}", s.trim_end())
}

/// Writes `problem` in fixed-format MPS with a `COST` objective row. Fails
/// with [`LpError::NameCollision`] if two names coincide after truncation.
pub fn export_mps<W: Write>(problem: &LpProblem, out: &mut W) -> Result<(), LpError> {
    let col_names = mangle(problem.columns().iter().map(|c| c.name.as_str()), &[])?;
    let row_names = mangle(problem.rows().iter().map(|r| r.name.as_str()), &[OBJ_ROW])?;

    let pname = mps_name(&problem.name);
    writeln!(out, "NAME          {}", if pname.is_empty() { "LP" } else { &pname })?;
    if problem.objective_offset != 0.0 {
        writeln!(out, "* objective offset {}", fmt_num(problem.objective_offset))?;
    }
    writeln!(out, "ROWS")?;
    writeln!(out, " N  {OBJ_ROW}")?;
    for (row, name) in problem.rows().iter().zip(&row_names) {
        writeln!(out, " {}  {}", row.sense.mps_code(), name)?;
    }

    writeln!(out, "COLUMNS")?;
    let entries = problem.column_entries();
    for (j, col) in problem.columns().iter().enumerate() {
        let name = &col_names[j];
        if col.cost != 0.0 || entries[j].is_empty() {
            line(out, "", name, OBJ_ROW, Some(col.cost))?;
        }
        for &(i, v) in &entries[j] {
            line(out, "", name, &row_names[i], Some(v))?;
        }
    }

    writeln!(out, "RHS")?;
    for (row, name) in problem.rows().iter().zip(&row_names) {
        if row.rhs != 0.0 {
            line(out, "", "RHS", name, Some(row.rhs))?;
        }
    }
    writeln!(out, "RANGES")?;

    writeln!(out, "BOUNDS")?;
    for (col, name) in problem.columns().iter().zip(&col_names) {
        let (lo, up) = (col.lower, col.upper);
        if lo == up {
            line(out, "FX", "BND", name, Some(lo))?;
            continue;
        }
        match (lo.is_finite(), up.is_finite()) {
            (false, false) => line(out, "FR", "BND", name, None)?,
            (false, true) => {
                line(out, "MI", "BND", name, None)?;
                line(out, "UP", "BND", name, Some(up))?;
            }
            (true, _) => {
                if lo != 0.0 {
                    line(out, "LO", "BND", name, Some(lo))?;
                }
                if up.is_finite() {
                    line(out, "UP", "BND", name, Some(up))?;
                }
            }
        }
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_fit_the_field() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0015), "-0.0015");
        assert_eq!(fmt_num(110000.0), "110000");
        assert_eq!(fmt_num(1.0 / 3.0), "0.3333333333");
        assert_eq!(fmt_num(-2.0 / 3.0), "-0.666666667");
        assert_eq!(fmt_num(1e-20), "1e-20");
        assert_eq!(fmt_num(123456789012345.0), "1.2345679e14");
        assert!(fmt_num(1e-20).len() <= 12);
    }

    #[test]
    fn names_are_sanitized_and_truncated() {
        assert_eq!(mps_name("a b\tc"), "a_b_c");
        assert_eq!(mps_name("ABCDEFGHIJ"), "ABCDEFGH");
    }
}
