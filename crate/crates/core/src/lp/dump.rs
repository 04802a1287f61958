use std::io::{self, Write};

use super::StandardLp;

/// Writes `lp` in free-format MPS with an `OBJSENSE MAX` section, readable by
/// most external LP solvers.
pub fn write_mps(lp: &StandardLp, name: &str, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "NAME {name}")?;
    writeln!(out, "OBJSENSE")?;
    writeln!(out, "    MAX")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  obj")?;
    for label in lp.row_labels() {
        writeln!(out, " L  {label}")?;
    }
    writeln!(out, "COLUMNS")?;
    for (j, label) in lp.var_labels().iter().enumerate() {
        let c = lp.objective()[j];
        if c != 0.0 {
            writeln!(out, "    {label}  obj  {c:e}")?;
        }
        for &(i, a) in lp.column(j) {
            writeln!(out, "    {label}  {}  {a:e}", lp.row_labels()[i])?;
        }
    }
    writeln!(out, "RHS")?;
    for (label, b) in lp.row_labels().iter().zip(lp.rhs()) {
        if *b != 0.0 {
            writeln!(out, "    rhs  {label}  {b:e}")?;
        }
    }
    writeln!(out, "ENDATA")
}
