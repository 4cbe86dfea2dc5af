use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::info;

use super::{CategoricalTable, Gas, GasTable, GAS_COUNT};
use crate::{Error, Result};

/// A loaded table together with the number of incomplete rows dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadReport {
    pub table: GasTable,
    pub dropped: usize,
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let report = read_csv(file)?;
    if report.dropped > 0 {
        info!(
            "{}: dropped {} incomplete row(s), kept {}",
            path.display(),
            report.dropped,
            report.table.len()
        );
    }
    Ok(report)
}

fn check_header(header: &csv::StringRecord) -> Result<()> {
    let expected: Vec<&str> = Gas::ALL
        .iter()
        .map(|g| g.name())
        .chain(std::iter::once("decision"))
        .collect();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    let matches = found.len() == expected.len()
        && found
            .iter()
            .zip(&expected)
            .all(|(f, e)| f.eq_ignore_ascii_case(e));
    if !matches {
        return Err(Error::Schema(format!(
            "header must be `{}`, found `{}`",
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses a gas table from CSV text.
///
/// Rows with an empty or non-numeric cell (or too few cells) are dropped and
/// counted. A negative concentration or a decision outside `{0, 1}` is an
/// error naming the 1-based data row.
pub fn read_csv<R: Read>(reader: R) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::Schema("missing header row".into())),
    };
    check_header(&header)?;

    let mut rows = Vec::new();
    let mut decisions = Vec::new();
    let mut dropped = 0;
    for (i, record) in records.enumerate() {
        let record = record?;
        let line = i + 1;
        if record.len() > GAS_COUNT + 1 {
            return Err(Error::Validation {
                row: line,
                message: format!("{} cells, expected {}", record.len(), GAS_COUNT + 1),
            });
        }
        let parsed: Option<Vec<f64>> = if record.len() == GAS_COUNT + 1 {
            record.iter().map(parse_cell).collect()
        } else {
            None
        };
        let Some(values) = parsed else {
            dropped += 1;
            continue;
        };
        let mut row = [0.0; GAS_COUNT];
        row.copy_from_slice(&values[..GAS_COUNT]);
        if let Some(g) = row.iter().position(|&v| v < 0.0) {
            return Err(Error::Validation {
                row: line,
                message: format!("negative {} concentration {}", Gas::ALL[g], row[g]),
            });
        }
        let d = values[GAS_COUNT];
        if d != 0.0 && d != 1.0 {
            return Err(Error::Validation {
                row: line,
                message: format!("decision {d} is not 0 or 1"),
            });
        }
        rows.push(row);
        decisions.push(d as u8);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(LoadReport {
        table: GasTable::new(rows, decisions)?,
        dropped,
    })
}

/// Formats `x` rounded to nine significant digits, without exponent
/// notation or trailing zeros.
pub fn format_sig9(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn header_line() -> String {
    let mut names: Vec<&str> = Gas::ALL.iter().map(|g| g.name()).collect();
    names.push("decision");
    names.join(",")
}

pub fn write_csv<W: Write>(table: &GasTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", header_line())?;
    for (row, d) in table.rows().iter().zip(table.decisions()) {
        let cells: Vec<String> = row.iter().map(|&v| format_sig9(v)).collect();
        writeln!(out, "{},{}", cells.join(","), d)?;
    }
    Ok(())
}

pub fn write_categorical_csv<W: Write>(table: &CategoricalTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{},decision", table.attributes().join(","))?;
    for (row, d) in table.rows().iter().zip(table.decisions()) {
        let cells: Vec<String> = row.iter().map(u8::to_string).collect();
        writeln!(out, "{},{}", cells.join(","), d)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str =
        "acetylene,carbon_dioxide,carbon_monoxide,ethane,ethylene,hydrogen,methane,nitrogen,oxygen,tcg,decision";

    #[test]
    fn parses_first_table_row() {
        let text = format!("{HEADER}\n43,242,57,294,2055,1175,1882,12233,4060,5506,0\n");
        let report = read_csv(text.as_bytes()).unwrap();
        assert_eq!(report.dropped, 0);
        assert_eq!(report.table.len(), 1);
        assert_eq!(report.table.decisions(), &[0]);
        assert_eq!(report.table.value(0, Gas::Nitrogen), 12233.0);
        assert_eq!(report.table.value(0, Gas::Tcg), 5506.0);
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let err = read_csv(format!("{HEADER}\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn blank_cell_row_is_dropped() {
        let text = format!(
            "{HEADER}\n\
             10,2040,207,14,95,25,38,51405,17312,389,1\n\
             13,2336,252,,204,56,88,56213,18532,641,1\n\
             8,1848,213,20,141,29,52,48833,16483,463,1\n"
        );
        let report = read_csv(text.as_bytes()).unwrap();
        assert_eq!(report.table.len(), 2);
        assert_eq!(report.dropped, 1);
    }

    #[test]
    fn header_is_case_insensitive_but_ordered() {
        let upper = format!("{}\n1,1,1,1,1,1,1,1,1,1,1\n", HEADER.to_uppercase());
        assert!(read_csv(upper.as_bytes()).is_ok());

        let swapped = HEADER.replacen("acetylene,carbon_dioxide", "carbon_dioxide,acetylene", 1);
        let err = read_csv(format!("{swapped}\n1,1,1,1,1,1,1,1,1,1,1\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));

        let extra = format!("{HEADER},argon\n");
        assert!(matches!(read_csv(extra.as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn negative_value_names_row() {
        let text = format!("{HEADER}\n1,1,1,1,1,1,1,1,1,1,1\n1,1,-5,1,1,1,1,1,1,1,0\n");
        match read_csv(text.as_bytes()) {
            Err(Error::Validation { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("carbon_monoxide"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(1175.0), "1175");
        assert_eq!(format_sig9(12.7), "12.7");
        assert_eq!(format_sig9(1618224.7), "1618224.7");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
    }

    fn sig9(x: f64) -> f64 {
        format_sig9(x).parse().unwrap()
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in prop::collection::vec(
                (prop::array::uniform10(0.0f64..2.0e6), 0u8..2), 1..20)
        ) {
            let table = GasTable::new(
                rows.iter().map(|(r, _)| r.map(sig9)).collect(),
                rows.iter().map(|(_, d)| *d).collect(),
            ).unwrap();
            let mut buf = Vec::new();
            write_csv(&table, &mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.dropped, 0);
            prop_assert_eq!(back.table, table);
        }
    }
}
