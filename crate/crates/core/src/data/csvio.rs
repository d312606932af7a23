use std::path::Path;

use super::dataset::PartyDataset;
use super::matrix::Matrix;
use super::schema::FeatureInfo;
use crate::error::{Error, Result};

pub const ID_COLUMN: &str = "well_id";
pub const LABEL_COLUMN: &str = "label";

fn cell_error(path: &Path, row: usize, column: &str, reason: impl Into<String>) -> Error {
    Error::Cell {
        path: path.display().to_string(),
        row,
        column: column.to_string(),
        reason: reason.into(),
    }
}

/// Reads a well CSV. The header must contain `well_id`, optionally `label`,
/// and a subset of `schema` symbols; feature columns keep the schema order.
/// Row numbers in diagnostics are 1-based data rows (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, schema: &[FeatureInfo]) -> Result<PartyDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }

    let mut id_col = None;
    let mut label_col = None;
    let mut features: Vec<(usize, usize)> = Vec::new();
    for (c, name) in header.iter().enumerate() {
        match name.as_str() {
            ID_COLUMN => id_col = Some(c),
            LABEL_COLUMN => label_col = Some(c),
            sym => match schema.iter().position(|f| f.symbol == sym) {
                Some(k) => features.push((k, c)),
                None => return Err(cell_error(path, 0, sym, "unknown column")),
            },
        }
    }
    let id_col = id_col.ok_or_else(|| cell_error(path, 0, ID_COLUMN, "missing id column"))?;
    if features.is_empty() {
        return Err(Error::Data(format!("{}: no feature columns", path.display())));
    }
    features.sort_unstable();
    if features.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Data(format!("{}: duplicate feature column", path.display())));
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Data(format!("{}: row {row}: {e}", path.display())))?;
        let get = |c: usize| record.get(c).unwrap_or("");
        let id = get(id_col);
        if id.is_empty() {
            return Err(cell_error(path, row, ID_COLUMN, "blank cell"));
        }
        ids.push(id.to_string());
        for &(_, c) in &features {
            let cell = get(c);
            if cell.is_empty() {
                return Err(cell_error(path, row, &header[c], "blank cell"));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| cell_error(path, row, &header[c], format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(cell_error(path, row, &header[c], "non-finite value"));
            }
            values.push(v);
        }
        if let (Some(c), Some(acc)) = (label_col, labels.as_mut()) {
            match get(c) {
                "0" => acc.push(0),
                "1" => acc.push(1),
                "" => return Err(cell_error(path, row, LABEL_COLUMN, "blank cell")),
                other => return Err(cell_error(path, row, LABEL_COLUMN, format!("label must be 0 or 1, got {other:?}"))),
            }
        }
    }
    if ids.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let party = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "party".into());
    let matrix = Matrix::new(ids.len(), features.len(), values)?;
    let info = features.iter().map(|&(k, _)| schema[k].clone()).collect();
    PartyDataset::new(party, ids, matrix, info, labels)
}

/// Writes a dataset as CSV. Values use the shortest decimal text that reads
/// back to the identical `f64`.
pub fn write_csv(path: impl AsRef<Path>, data: &PartyDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(data.feature_info.iter().map(|f| f.symbol.clone()));
    if data.labels.is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header).map_err(io)?;
    for (i, row) in data.features.rows().enumerate() {
        let mut rec = vec![data.ids[i].clone()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        if let Some(l) = &data.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
