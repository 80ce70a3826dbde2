use std::io::Write;
use std::path::Path;

use hela::real::RealMatrix;

use crate::CliError;

/// Comma-separated reals, one matrix row per line; `#` starts a comment.
pub fn read_matrix(path: &Path) -> Result<RealMatrix, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| CliError::Config(format!("{}: {f:?}: {e}", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config(format!("{}: expected a non-empty rectangular matrix", path.display())));
    }
    Ok(RealMatrix::new(rows.len(), cols, rows.concat())?)
}

pub fn write_matrix(out: Option<&Path>, m: &RealMatrix) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    for i in 0..m.rows() {
        w.write_record((0..m.cols()).map(|j| format!("{}", m.get(i, j))))?;
    }
    w.flush()?;
    Ok(())
}
