//! Config files, CSV paths and snapshots, JSON with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{DensityField, SpaceTimePath};
use crate::grid::SpaceGrid;
use crate::model::{ModelParams, TransportCoeffs};

/// Parsed `key = value` config. Unknown keys are kept in `extra`.
#[derive(Debug, Clone)]
pub struct Config {
    pub params: ModelParams,
    pub m: usize,
    pub coeffs: String,
    pub steps: Option<usize>,
    pub extra: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut take = |key: &str| {
            map.remove(key)
                .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
        };
        let n = parse_num::<usize>("N", &take("N")?)?;
        let e = parse_num::<f64>("E", &take("E")?)?;
        let rho_minus = parse_num::<f64>("rho_minus", &take("rho_minus")?)?;
        let rho_plus = parse_num::<f64>("rho_plus", &take("rho_plus")?)?;
        let t = parse_num::<f64>("T", &take("T")?)?;
        let m = parse_num::<usize>("M", &take("M")?)?;
        let coeffs = map.remove("coeffs").unwrap_or_else(|| "wasep".into());
        let steps = map
            .remove("steps")
            .map(|s| parse_num::<usize>("steps", &s))
            .transpose()?;
        if m < 2 {
            return Err(Error::Config("M must be at least 2".into()));
        }
        TransportCoeffs::preset(&coeffs)?;
        Ok(Config {
            params: ModelParams::new(n, e, rho_minus, rho_plus, t)?,
            m,
            coeffs,
            steps,
            extra: map,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                Error::Config(format!("config file {} not found", path.display()))
            } else {
                Error::Io(e)
            }
        })?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> SpaceGrid {
        SpaceGrid::new(self.m)
    }

    pub fn transport(&self) -> TransportCoeffs {
        TransportCoeffs::preset(&self.coeffs).expect("preset checked at parse time")
    }

    /// Time steps over [0, T]; defaults to 200.
    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(200)
    }

    pub fn extra_f64(&self, key: &str) -> Result<Option<f64>> {
        self.extra.get(key).map(|s| parse_num(key, s)).transpose()
    }

    /// Comma separated list under `key`.
    pub fn extra_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.extra
            .get(key)
            .map(|s| s.split(',').map(|v| parse_num(key, v.trim())).collect())
            .transpose()
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = '{s}'")))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_path_csv<W: Write>(path: &SpaceTimePath, mut w: W) -> Result<()> {
    writeln!(w, "t,u,value")?;
    let nodes = path.grid().nodes();
    for (n, &t) in path.times().iter().enumerate() {
        for (u, v) in nodes.iter().zip(path.slice(n)) {
            writeln!(w, "{},{},{}", fmt_f64(t), fmt_f64(*u), fmt_f64(*v))?;
        }
    }
    Ok(())
}

/// Reads `t,u,value` rows grouped by time. Row numbers in errors count the
/// header as row 1.
pub fn read_path_csv<R: Read>(r: R) -> Result<SpaceTimePath> {
    let mut lines = BufReader::new(r).lines();
    match lines.next() {
        None => return Ok(SpaceTimePath::empty()),
        Some(h) => {
            let h = h?;
            if h.trim() != "t,u,value" {
                return Err(Error::Parse {
                    row: 1,
                    msg: format!("expected header 't,u,value', found '{}'", h.trim()),
                });
            }
        }
    }
    let mut times: Vec<f64> = vec![];
    let mut first_row: Vec<usize> = vec![];
    let mut nodes: Vec<f64> = vec![];
    let mut data = vec![];
    let mut col = 0usize;
    for (k, line) in lines.enumerate() {
        let row = k + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(Error::Parse {
                row,
                msg: format!("expected 3 columns, found {}", cells.len()),
            });
        }
        let mut vals = [0.0; 3];
        for (v, c) in vals.iter_mut().zip(&cells) {
            *v = c.trim().parse().map_err(|_| Error::Parse {
                row,
                msg: format!("not a number: '{}'", c.trim()),
            })?;
        }
        let [t, u, v] = vals;
        if times.last() != Some(&t) {
            if !times.is_empty() && col != nodes.len() {
                return Err(Error::Parse {
                    row,
                    msg: format!("time slice has {col} nodes, expected {}", nodes.len()),
                });
            }
            times.push(t);
            first_row.push(row);
            col = 0;
        }
        if times.len() == 1 {
            nodes.push(u);
        } else if col >= nodes.len() || nodes[col] != u {
            return Err(Error::Parse {
                row,
                msg: "space column differs from the first time slice".into(),
            });
        }
        data.push(v);
        col += 1;
    }
    if times.is_empty() {
        return Ok(SpaceTimePath::empty());
    }
    if col != nodes.len() {
        return Err(Error::Parse {
            row: first_row[first_row.len() - 1],
            msg: format!("last time slice has {col} nodes, expected {}", nodes.len()),
        });
    }
    if nodes.len() < 3 {
        return Err(Error::Parse {
            row: 2,
            msg: "need at least 3 space nodes".into(),
        });
    }
    let grid = SpaceGrid::new(nodes.len() - 1);
    for (i, &u) in nodes.iter().enumerate() {
        if (u - grid.node(i)).abs() > 1e-12 {
            return Err(Error::Parse {
                row: 2 + i,
                msg: format!("space node {u} is not on the uniform grid of [-1, 1]"),
            });
        }
    }
    SpaceTimePath::new(times, grid, data).map_err(|e| match e {
        Error::Parse { row, msg } => Error::Parse {
            row: first_row[row],
            msg,
        },
        other => other,
    })
}

pub fn write_field_csv<W: Write>(field: &DensityField, mut w: W) -> Result<()> {
    writeln!(w, "u,value")?;
    for (u, v) in field.grid().nodes().iter().zip(field.values()) {
        writeln!(w, "{},{}", fmt_f64(*u), fmt_f64(*v))?;
    }
    Ok(())
}

/// Reads `u,value` rows (the stationary output format) into a field.
pub fn read_field_csv<R: Read>(r: R) -> Result<DensityField> {
    let mut vals = vec![];
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let v = line
            .rsplit(',')
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Parse {
                row: k + 1,
                msg: "malformed row".into(),
            })?;
        vals.push(v);
    }
    if vals.len() < 3 {
        return Err(Error::Parse {
            row: 1,
            msg: "need at least 3 nodes".into(),
        });
    }
    DensityField::new(SpaceGrid::new(vals.len() - 1), vals)
}

/// One row per snapshot: `t,u_0,...,u_M`.
pub fn write_snapshots_csv<W: Write>(times: &[f64], fields: &[DensityField], mut w: W) -> Result<()> {
    let m = fields.first().map(|f| f.values().len()).unwrap_or(0);
    let header: Vec<String> = (0..m).map(|i| format!("u_{i}")).collect();
    writeln!(w, "t,{}", header.join(","))?;
    for (t, f) in times.iter().zip(fields) {
        let row: Vec<String> = f.values().iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{},{}", fmt_f64(*t), row.join(","))?;
    }
    Ok(())
}

/// serde_json formatter that writes every f64 with 17 significant digits.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{}", fmt_f64(value))
        } else {
            w.write_all(b"null")
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = to_json(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_keys() {
        let c = Config::parse(
            "# demo\nN = 64\nE = 1.5\nrho_minus = 0.2\nrho_plus = 0.8\nT = 0.5\nM = 32\nsizes = 8, 16\n",
        )
        .unwrap();
        assert_eq!(c.params.n, 64);
        assert_eq!(c.coeffs, "wasep");
        assert_eq!(c.extra_list::<usize>("sizes").unwrap(), Some(vec![8, 16]));
        assert!(Config::parse("N = 64\n").is_err());
        assert!(Config::parse("N = x\nE=0\nrho_minus=0.5\nrho_plus=0.5\nT=1\nM=4").is_err());
    }

    #[test]
    fn header_only_for_empty_path() {
        let mut buf = vec![];
        write_path_csv(&SpaceTimePath::empty(), &mut buf).unwrap();
        assert_eq!(buf, b"t,u,value\n");
        assert!(read_path_csv(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let s = to_json(&serde_json::json!({"x": 0.1, "bad": f64::NAN})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("null"));
    }

    #[test]
    fn mismatched_space_column_rejected() {
        let text = "t,u,value\n0,-1,0.5\n0,0,0.5\n0,1,0.5\n1,-1,0.5\n1,0.25,0.5\n1,1,0.5\n";
        match read_path_csv(text.as_bytes()).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
