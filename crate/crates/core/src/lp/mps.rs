//! Free-format MPS export.
//!
//! Layout (one record per line, fields separated by single spaces):
//!
//! ```text
//! NAME <program name>
//! ROWS
//!  N  COST
//!  L|G|E <row name>
//! COLUMNS
//!  [MARKER INTORG / MARKER INTEND around integer columns]
//!  <column> <row> <value>          (COST entries included)
//! RHS
//!  RHS <row> <value>               (non-zero right-hand sides; objective
//!                                   offset as RHS of COST, negated)
//! BOUNDS
//!  FR|MI|PL|UP|LO|FX|BV BND <column> [<value>]
//! ENDATA
//! ```
//!
//! Names containing whitespace have it replaced by `_`.

use std::io::{self, Write};

use super::{Program, RowKind};

fn clean(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

pub fn write_mps<W: Write>(program: &Program, out: &mut W) -> io::Result<()> {
    let name = if program.name.is_empty() {
        "PROGRAM".to_string()
    } else {
        clean(&program.name)
    };
    writeln!(out, "NAME {name}")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N COST")?;
    for row in &program.rows {
        let tag = match row.kind {
            RowKind::Le => "L",
            RowKind::Ge => "G",
            RowKind::Eq => "E",
        };
        writeln!(out, " {tag} {}", clean(&row.name))?;
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); program.vars.len()];
    for (ri, row) in program.rows.iter().enumerate() {
        for &(j, v) in &row.terms {
            columns[j].push((ri, v));
        }
    }
    writeln!(out, "COLUMNS")?;
    let mut in_int = false;
    let mut marker = 0;
    for (j, var) in program.vars.iter().enumerate() {
        if var.integer != in_int {
            let kind = if var.integer { "INTORG" } else { "INTEND" };
            writeln!(out, " MARKER{marker} 'MARKER' '{kind}'")?;
            marker += 1;
            in_int = var.integer;
        }
        let col = clean(&var.name);
        if var.cost != 0.0 || columns[j].is_empty() {
            writeln!(out, " {col} COST {:e}", var.cost)?;
        }
        for &(ri, v) in &columns[j] {
            writeln!(out, " {col} {} {v:e}", clean(&program.rows[ri].name))?;
        }
    }
    if in_int {
        writeln!(out, " MARKER{marker} 'MARKER' 'INTEND'")?;
    }

    writeln!(out, "RHS")?;
    if program.objective_offset != 0.0 {
        writeln!(out, " RHS COST {:e}", -program.objective_offset)?;
    }
    for row in &program.rows {
        if row.rhs != 0.0 {
            writeln!(out, " RHS {} {:e}", clean(&row.name), row.rhs)?;
        }
    }

    writeln!(out, "BOUNDS")?;
    for var in &program.vars {
        let col = clean(&var.name);
        let (l, u) = (var.lower, var.upper);
        if var.integer && l == 0.0 && u == 1.0 {
            writeln!(out, " BV BND {col}")?;
            continue;
        }
        if l == u {
            writeln!(out, " FX BND {col} {l:e}")?;
            continue;
        }
        match (l.is_finite(), u.is_finite()) {
            (false, false) => writeln!(out, " FR BND {col}")?,
            (false, true) => {
                writeln!(out, " MI BND {col}")?;
                writeln!(out, " UP BND {col} {u:e}")?;
            }
            (true, false) => {
                if l != 0.0 {
                    writeln!(out, " LO BND {col} {l:e}")?;
                }
            }
            (true, true) => {
                if l != 0.0 {
                    writeln!(out, " LO BND {col} {l:e}")?;
                }
                writeln!(out, " UP BND {col} {u:e}")?;
            }
        }
    }
    writeln!(out, "ENDATA")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowKind;

    #[test]
    fn writes_all_sections() {
        let mut p = Program::new("toy lp");
        let x = p.add_var("x", 0.0, 1.0, -1.0);
        let b = p.add_binary("b", 0.5);
        let z = p.add_var("z", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        p.add_row("cap", vec![(x, 2.0), (b, 1.0)], RowKind::Le, 3.0);
        p.add_row("link", vec![(z, 1.0), (x, -1.0)], RowKind::Eq, 0.0);
        p.objective_offset = 4.0;
        let mut buf = Vec::new();
        write_mps(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("NAME toy_lp\nROWS\n N COST\n L cap\n E link\nCOLUMNS\n"));
        assert!(text.contains(" x cap 2e0\n"));
        assert!(text.contains("'MARKER' 'INTORG'"));
        assert!(text.contains(" BV BND b\n"));
        assert!(text.contains(" FR BND z\n"));
        assert!(text.contains(" UP BND x 1e0\n"));
        assert!(text.contains(" RHS COST -4e0\n"));
        assert!(text.ends_with("ENDATA\n"));
    }
}
