//! CSV dataset format.
//!
//! ```text
//! series_id,t,<feature_0>,...,<feature_{D-1}>[,label]
//! ```
//!
//! One row per `(series, timestep)`, sorted by `(series_id, t)`, `t` counting
//! from 0. Values are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64` exactly.
//!
//! Static labels are written as integers; temporal labels as floats. On
//! read, a label column containing any float token, or integer tokens that
//! vary within a series, is temporal; otherwise it is static.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::{Error, Labels, Result, TimeSeriesDataset};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(ds: &TimeSeriesDataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let (n, t, d) = ds.dim();
    let mut header: Vec<String> = vec!["series_id".into(), "t".into()];
    header.extend(ds.feature_names().iter().cloned());
    if !ds.labels().is_none() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..n {
        let series = ds.series(i);
        for step in 0..t {
            rec.clear();
            rec.push(i.to_string());
            rec.push(step.to_string());
            rec.extend((0..d).map(|j| fmt_f64(series[[step, j]])));
            match ds.labels() {
                Labels::None => {}
                Labels::Static(v) => rec.push(v[i].to_string()),
                Labels::Temporal(a) => rec.push(fmt_f64(a[[i, step]])),
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_path(ds: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(ds, std::io::BufWriter::new(f))
}

pub fn to_csv_string(ds: &TimeSeriesDataset) -> String {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf8")
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse {tok:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value {tok:?}")));
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: {what} {tok:?} is not a non-negative integer")))
}

fn is_integer_token(tok: &str) -> bool {
    let tok = tok.trim();
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Groups rows by series id, checking order and contiguity of `t`.
struct Grouped {
    n: usize,
    t: usize,
    /// Full records in file order.
    rows: Vec<csv::StringRecord>,
}

fn group_rows<R: Read>(input: R, min_fields: usize) -> Result<(csv::StringRecord, Grouped)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < min_fields || &header[0] != "series_id" || &header[1] != "t" {
        return Err(Error::Parse(format!(
            "header must start with series_id,t and have at least {min_fields} columns, got {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    let mut ids: Vec<usize> = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    let mut t_len: Option<usize> = None;
    let mut cur_len = 0usize;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields, got {}", header.len(), rec.len())));
        }
        let sid = parse_usize(&rec[0], line, "series_id")?;
        let step = parse_usize(&rec[1], line, "t")?;
        match prev {
            Some((ps, pt)) if ps == sid => {
                if step != pt + 1 {
                    return Err(Error::Parse(format!("line {line}: t jumps from {pt} to {step} in series {sid}")));
                }
                cur_len += 1;
            }
            Some((ps, _)) => {
                if sid <= ps {
                    return Err(Error::Parse(format!("line {line}: series_id {sid} after {ps}, rows must be sorted")));
                }
                check_len(&mut t_len, cur_len, ps)?;
                if step != 0 {
                    return Err(Error::Parse(format!("line {line}: series {sid} starts at t={step}")));
                }
                ids.push(sid);
                cur_len = 1;
            }
            None => {
                if step != 0 {
                    return Err(Error::Parse(format!("line {line}: series {sid} starts at t={step}")));
                }
                ids.push(sid);
                cur_len = 1;
            }
        }
        prev = Some((sid, step));
        rows.push(rec);
    }
    let Some((last, _)) = prev else {
        return Err(Error::Parse("no data rows".into()));
    };
    check_len(&mut t_len, cur_len, last)?;
    Ok((header, Grouped { n: ids.len(), t: t_len.unwrap_or(0), rows }))
}

fn check_len(t_len: &mut Option<usize>, cur: usize, sid: usize) -> Result<()> {
    match *t_len {
        None => *t_len = Some(cur),
        Some(t) if t != cur => {
            return Err(Error::Parse(format!("series {sid} has {cur} timesteps, expected {t}")));
        }
        _ => {}
    }
    Ok(())
}

fn infer_labels(tokens: &[&str], n: usize, t: usize) -> Result<Labels> {
    let all_int = tokens.iter().all(|s| is_integer_token(s));
    let constant = (0..n).all(|i| tokens[i * t..(i + 1) * t].iter().all(|s| s.trim() == tokens[i * t].trim()));
    if all_int && constant {
        let v = (0..n)
            .map(|i| {
                tokens[i * t]
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("label {:?} out of range", tokens[i * t])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Labels::Static(v))
    } else {
        let v = tokens
            .iter()
            .enumerate()
            .map(|(k, s)| parse_f64(s, k + 2))
            .collect::<Result<Vec<_>>>()?;
        Ok(Labels::Temporal(Array2::from_shape_vec((n, t), v).expect("n*t labels")))
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<TimeSeriesDataset> {
    let (header, g) = group_rows(input, 3)?;
    let has_label = header.get(header.len() - 1) == Some("label");
    let d = header.len() - 2 - usize::from(has_label);
    if d == 0 {
        return Err(Error::Parse("no feature columns".into()));
    }
    let names: Vec<String> = header.iter().skip(2).take(d).map(str::to_string).collect();
    let mut values = Vec::with_capacity(g.n * g.t * d);
    for (k, rec) in g.rows.iter().enumerate() {
        for j in 0..d {
            values.push(parse_f64(&rec[2 + j], k + 2)?);
        }
    }
    let data = Array3::from_shape_vec((g.n, g.t, d), values).expect("grouped shape");
    let mut ds = TimeSeriesDataset::new(data)?.with_feature_names(names)?;
    if has_label {
        let tokens: Vec<&str> = g.rows.iter().map(|r| &r[2 + d]).collect();
        ds = ds.with_labels(infer_labels(&tokens, g.n, g.t)?)?;
    }
    Ok(ds)
}

pub fn read_csv_path(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Parse(format!("cannot open {}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(f))
}

/// Reads a standalone label file: `series_id,label` (static, one row per
/// series) or `series_id,t,label` (temporal).
pub fn read_labels_csv<R: Read>(mut input: R, n: usize, t: usize) -> Result<Labels> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or("").trim();
    let labels = if first.replace(' ', "") == "series_id,label" {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let v = rdr
            .records()
            .enumerate()
            .map(|(k, r)| {
                let r = r?;
                r[1].parse::<i64>().map_err(|_| {
                    Error::Parse(format!("line {}: static label {:?} is not an integer", k + 2, &r[1]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Labels::Static(v)
    } else {
        let (header, g) = group_rows(text.as_bytes(), 3)?;
        if header.len() != 3 || &header[2] != "label" {
            return Err(Error::Parse(format!("unrecognised label header {first:?}")));
        }
        let tokens: Vec<&str> = g.rows.iter().map(|r| &r[2]).collect();
        if (g.n, g.t) != (n, t) {
            return Err(Error::Dimension(format!("label file covers [{}, {}], data is [{n}, {t}]", g.n, g.t)));
        }
        let v = tokens.iter().enumerate().map(|(k, s)| parse_f64(s, k + 2)).collect::<Result<Vec<_>>>()?;
        Labels::Temporal(Array2::from_shape_vec((n, t), v).expect("n*t labels"))
    };
    if let Labels::Static(v) = &labels {
        if v.len() != n {
            return Err(Error::Dimension(format!("{} label rows for {n} series", v.len())));
        }
    }
    Ok(labels)
}

pub fn read_labels_csv_path(path: impl AsRef<Path>, n: usize, t: usize) -> Result<Labels> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Parse(format!("cannot open {}: {e}", path.display())))?;
    read_labels_csv(std::io::BufReader::new(f), n, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_float_format() {
        let ds = TimeSeriesDataset::from_flat(1, 2, 1, vec![0.1, -2.0]).unwrap();
        let s = to_csv_string(&ds);
        assert_eq!(s, "series_id,t,feature_0\n0,0,1.0000000000000001e-1\n0,1,-2.0000000000000000e0\n");
    }

    #[test]
    fn roundtrip_static_and_temporal() {
        let ds = TimeSeriesDataset::from_flat(2, 3, 2, (0..12).map(|v| v as f64 / 7.0).collect()).unwrap();
        let st = ds.clone().with_static_labels(vec![4, -1]).unwrap();
        assert_eq!(read_csv(to_csv_string(&st).as_bytes()).unwrap(), st);
        let temporal = Array2::from_shape_vec((2, 3), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let tl = ds.with_temporal_labels(temporal).unwrap();
        // constant 0/1 paths are still temporal because they are written as floats
        assert_eq!(read_csv(to_csv_string(&tl).as_bytes()).unwrap(), tl);
    }

    #[test]
    fn label_files() {
        let st = read_labels_csv("series_id,label\n0,1\n1,0\n".as_bytes(), 2, 5).unwrap();
        assert_eq!(st, Labels::Static(vec![1, 0]));
        let tl = read_labels_csv("series_id,t,label\n0,0,1\n0,1,0\n".as_bytes(), 1, 2).unwrap();
        assert_eq!(tl, Labels::Temporal(Array2::from_shape_vec((1, 2), vec![1.0, 0.0]).unwrap()));
        assert!(read_labels_csv("series_id,label\n0,1\n".as_bytes(), 2, 5).is_err());
    }

    #[test]
    fn varying_integer_labels_are_temporal() {
        let src = "series_id,t,x,label\n0,0,1,0\n0,1,2,1\n";
        let ds = read_csv(src.as_bytes()).unwrap();
        assert!(matches!(ds.labels(), Labels::Temporal(_)));
    }

    #[test]
    fn rejects_unsorted_and_ragged() {
        assert!(read_csv("series_id,t,x\n1,0,1\n0,0,1\n".as_bytes()).is_err());
        assert!(read_csv("series_id,t,x\n0,0,1\n0,2,1\n".as_bytes()).is_err());
        assert!(read_csv("series_id,t,x\n0,0,1\n0,1,1\n1,0,1\n".as_bytes()).is_err());
        assert!(read_csv("series_id,t,x\n0,0,nan\n".as_bytes()).is_err());
        assert!(read_csv("id,t,x\n0,0,1\n".as_bytes()).is_err());
    }
}
