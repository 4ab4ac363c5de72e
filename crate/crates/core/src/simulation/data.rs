use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::SimulationError;

/// Measured input/output record `D_N = {U(k), Y(k)}`, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    name: String,
    u: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl DataSet {
    pub fn new(name: impl Into<String>, u: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self, SimulationError> {
        if u.nrows() != y.nrows() {
            return Err(SimulationError::Data(format!(
                "input has {} rows, output has {}",
                u.nrows(),
                y.nrows()
            )));
        }
        if y.nrows() == 0 {
            return Err(SimulationError::Data("data set is empty".into()));
        }
        if y.ncols() == 0 {
            return Err(SimulationError::Data("data set has no output channel".into()));
        }
        if u.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(SimulationError::Data("non-finite sample".into()));
        }
        Ok(DataSet { name: name.into(), u, y })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.nrows() == 0
    }

    pub fn inputs(&self) -> usize {
        self.u.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.y.ncols()
    }

    /// Rows `start..end` as a new set.
    pub fn slice(&self, start: usize, end: usize, name: impl Into<String>) -> Result<Self, SimulationError> {
        if start >= end || end > self.len() {
            return Err(SimulationError::Data(format!("bad slice {start}..{end} of {}", self.len())));
        }
        DataSet::new(
            name,
            self.u.rows(start, end - start).into_owned(),
            self.y.rows(start, end - start).into_owned(),
        )
    }

    /// Parses CSV with header `u1,..,u{r_u},y1,..,y{r_y}`.
    pub fn read_csv<R: Read>(reader: R, name: impl Into<String>) -> Result<Self, SimulationError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let mut u_cols = Vec::new();
        let mut y_cols = Vec::new();
        for (i, h) in header.iter().enumerate() {
            let (kind, idx) = h.split_at(1.min(h.len()));
            let idx: usize = idx
                .parse()
                .map_err(|_| SimulationError::Data(format!("unexpected column `{h}`")))?;
            match kind {
                "u" => u_cols.push((idx, i)),
                "y" => y_cols.push((idx, i)),
                _ => return Err(SimulationError::Data(format!("unexpected column `{h}`"))),
            }
        }
        for cols in [&mut u_cols, &mut y_cols] {
            cols.sort();
            if cols.iter().enumerate().any(|(n, &(idx, _))| idx != n + 1) {
                return Err(SimulationError::Data("channel columns must be numbered 1..r".into()));
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SimulationError::Data(format!("line {}: {e}", rows.len() + 2)))?;
            rows.push(row);
        }
        let n = rows.len();
        let u = DMatrix::from_fn(n, u_cols.len(), |k, c| rows[k][u_cols[c].1]);
        let y = DMatrix::from_fn(n, y_cols.len(), |k, c| rows[k][y_cols[c].1]);
        DataSet::new(name, u, y)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, SimulationError> {
        let file = std::fs::File::open(path)
            .map_err(|e| SimulationError::Data(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
        DataSet::read_csv(file, name)
    }

    /// Writes the CSV form; values use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimulationError> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.inputs())
            .map(|i| format!("u{i}"))
            .chain((1..=self.outputs()).map(|i| format!("y{i}")))
            .collect();
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..self.len() {
            let row: Vec<String> = self
                .u
                .row(k)
                .iter()
                .chain(self.y.row(k).iter())
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| SimulationError::Data(e.to_string()))
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<(), SimulationError> {
        let file = std::fs::File::create(path)
            .map_err(|e| SimulationError::Data(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn csv_err(e: csv::Error) -> SimulationError {
    SimulationError::Data(e.to_string())
}
