//! CSV and JSON ingestion, CSV export.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Ambient, MetricSpace};

/// JSON form of a space: coordinates for Euclidean and Heisenberg ambients, a
/// distance matrix for the abstract one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceRecord {
    pub ambient: Ambient,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub label: String,
}

fn one() -> f64 {
    1.0
}

impl SpaceRecord {
    pub fn into_space(self) -> Result<MetricSpace> {
        let space = match (self.ambient, self.points, self.matrix) {
            (Ambient::Abstract, _, Some(m)) => MetricSpace::from_matrix(&m, self.weights, self.s)?,
            (Ambient::Abstract, _, None) => return Err(Error::Parse("abstract spaces need a `matrix`".into())),
            (a, Some(p), _) => MetricSpace::from_coords(&p, a, self.weights, self.s)?,
            (a, None, _) => return Err(Error::Parse(format!("{a} spaces need `points`"))),
        };
        Ok(space.with_label(self.label))
    }
}

pub fn read_json(reader: impl Read) -> Result<MetricSpace> {
    let rec: SpaceRecord = serde_json::from_reader(reader)?;
    rec.into_space()
}

/// Rows of `x1..xd[,weight]` (a square distance matrix for the abstract
/// ambient). A non-numeric first row is taken as a header.
pub fn read_csv(reader: impl Read, ambient: Ambient, s: f64) -> Result<MetricSpace> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    match ambient.coord_len() {
        None => MetricSpace::from_matrix(&rows, None, s),
        Some(d) => {
            let with_w = rows[0].len() == d + 1;
            if rows[0].len() != d && !with_w {
                return Err(Error::Parse(format!("{ambient} expects {d} or {} columns, got {}", d + 1, rows[0].len())));
            }
            let mut pts = Vec::with_capacity(rows.len());
            let mut ws = Vec::with_capacity(rows.len());
            for (i, mut r) in rows.into_iter().enumerate() {
                if r.len() != rows_len(d, with_w) {
                    return Err(Error::Parse(format!("row {} has {} columns", i + 1, r.len())));
                }
                if with_w {
                    ws.push(r.pop().unwrap());
                }
                pts.push(r);
            }
            MetricSpace::from_coords(&pts, ambient, with_w.then_some(ws), s)
        }
    }
}

fn rows_len(d: usize, with_w: bool) -> usize {
    d + usize::from(with_w)
}

/// Loads `.json` files as [`SpaceRecord`]s and anything else as CSV.
pub fn load(path: &Path, ambient: Ambient, s: f64) -> Result<MetricSpace> {
    let file = std::fs::File::open(path)?;
    let label = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let space = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        read_json(std::io::BufReader::new(file))?
    } else {
        read_csv(std::io::BufReader::new(file), ambient, s)?.with_label(label)
    };
    Ok(space)
}

/// Writes coordinates (or matrix rows) followed by a weight column.
pub fn write_csv(space: &MetricSpace, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = space.len();
    match space.ambient().coord_len() {
        Some(d) => {
            let mut header: Vec<String> = match space.ambient() {
                Ambient::Heisenberg { .. } => (1..d).map(|i| format!("x{i}")).chain(["t".to_string()]).collect(),
                _ => (1..=d).map(|i| format!("x{i}")).collect(),
            };
            header.push("weight".into());
            w.write_record(&header)?;
            for i in 0..n {
                let mut rec: Vec<String> = space.point(i).iter().map(|v| format!("{v:?}")).collect();
                rec.push(format!("{:?}", space.weight(i)));
                w.write_record(&rec)?;
            }
        }
        None => {
            for i in 0..n {
                w.write_record((0..n).map(|j| format!("{:?}", space.dist(i, j))))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header_and_weights() {
        let data = "x1,x2,weight\n0,0,0.5\n1,0,0.5\n";
        let sp = read_csv(data.as_bytes(), Ambient::Euclidean { dim: 2 }, 1.0).unwrap();
        assert_eq!(sp.len(), 2);
        assert_eq!(sp.weight(1), 0.5);
        assert_eq!(sp.dist(0, 1), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let data = "0,0,0\n1,2,0.25\n-1,0.5,3\n";
        let sp = read_csv(data.as_bytes(), Ambient::Heisenberg { n: 1 }, 1.0).unwrap();
        let mut out = Vec::new();
        write_csv(&sp, &mut out).unwrap();
        let back = read_csv(&out[..], Ambient::Heisenberg { n: 1 }, 1.0).unwrap();
        for i in 0..3 {
            assert_eq!(sp.point(i), back.point(i));
            assert_eq!(sp.weight(i), back.weight(i));
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(read_csv("0,0\n1\n".as_bytes(), Ambient::Euclidean { dim: 2 }, 1.0), Err(Error::Parse(_))));
        assert!(matches!(read_csv("0,0,0,0\n".as_bytes(), Ambient::Euclidean { dim: 2 }, 1.0), Err(Error::Parse(_))));
        assert!(matches!(read_csv("0,5\n5,x\n".as_bytes(), Ambient::Abstract, 1.0), Err(Error::Parse(_))));
    }

    #[test]
    fn json_records() {
        let j = r#"{"ambient":{"kind":"abstract"},"matrix":[[0,1],[1,0]],"label":"pair"}"#;
        let sp = read_json(j.as_bytes()).unwrap();
        assert_eq!(sp.label(), "pair");
        let j = r#"{"ambient":{"kind":"euclidean","dim":1},"points":[[0],[1],[3]],"weights":[1,1,1]}"#;
        assert_eq!(read_json(j.as_bytes()).unwrap().dist(0, 2), 3.0);
        let j = r#"{"ambient":{"kind":"euclidean","dim":1}}"#;
        assert!(read_json(j.as_bytes()).is_err());
    }
}
