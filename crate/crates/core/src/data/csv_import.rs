use super::FieldDataset;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

/// Column layout of a point-per-row CSV export: `K` condition columns, one
/// integer point-index column, `D` coordinate columns, then one column per
/// field channel. A header row is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvLayout {
    pub cond_columns: usize,
    pub coord_columns: usize,
}

struct Group {
    cond: Vec<f32>,
    rows: Vec<(usize, Vec<f32>, Vec<f32>)>,
}

fn parse_f32(field: &str, line: u64, col: usize) -> Result<f32> {
    field
        .trim()
        .parse::<f32>()
        .map_err(|_| Error::Format(format!("line {line}, column {}: {field:?} is not a number", col + 1)))
}

/// Rows are grouped by their exact condition values in order of first
/// appearance; every group must list each point index `0..N` once.
pub fn import_csv_reader(reader: impl Read, layout: CsvLayout) -> Result<FieldDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let width = rdr.headers()?.len();
    let (k, d) = (layout.cond_columns, layout.coord_columns);
    if width <= k + 1 + d {
        return Err(Error::Format(format!(
            "header has {width} columns; {k} condition, 1 index and {d} coordinate columns leave no field channel"
        )));
    }
    let channels = width - k - 1 - d;
    let mut groups: Vec<Group> = Vec::new();
    let mut lookup: HashMap<Vec<u32>, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let vals = rec
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(j, f)| parse_f32(f, line, j))
            .collect::<Result<Vec<f32>>>()?;
        let index: usize = rec[k]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: point index {:?} is not a non-negative integer", &rec[k])))?;
        let cond = vals[..k].to_vec();
        let key: Vec<u32> = cond.iter().map(|v| v.to_bits()).collect();
        let g = *lookup.entry(key).or_insert_with(|| {
            groups.push(Group { cond, rows: Vec::new() });
            groups.len() - 1
        });
        groups[g].rows.push((index, vals[k..k + d].to_vec(), vals[k + d..].to_vec()));
    }
    let points = groups
        .first()
        .map(|g| g.rows.len())
        .ok_or_else(|| Error::Format("CSV holds no data rows".into()))?;
    let mut conditions = Vec::with_capacity(groups.len() * k);
    let mut fields = Vec::with_capacity(groups.len() * channels * points);
    let mut coords: Option<Vec<f32>> = None;
    for (gi, g) in groups.iter_mut().enumerate() {
        if g.rows.len() != points {
            return Err(Error::Format(format!(
                "condition {gi} has {} points, the first condition has {points}",
                g.rows.len()
            )));
        }
        g.rows.sort_by_key(|r| r.0);
        if let Some(pos) = g.rows.iter().enumerate().position(|(i, r)| r.0 != i) {
            return Err(Error::Format(format!(
                "condition {gi}: point indices must cover 0..{points} exactly once (problem at index {pos})"
            )));
        }
        let these: Vec<f32> = g.rows.iter().flat_map(|r| r.1.iter().copied()).collect();
        match &coords {
            None => coords = Some(these),
            Some(c) if *c != these => {
                return Err(Error::Format(format!("condition {gi} lists different point coordinates")));
            }
            Some(_) => {}
        }
        conditions.extend_from_slice(&g.cond);
        for ch in 0..channels {
            fields.extend(g.rows.iter().map(|r| r.2[ch]));
        }
    }
    let coords = coords.filter(|_| d > 0).map(|c| (c, d));
    FieldDataset::new(channels, points, k, conditions, fields, coords)
}

pub fn import_csv(path: impl AsRef<Path>, layout: CsvLayout) -> Result<FieldDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    import_csv_reader(std::io::BufReader::new(file), layout)
}
