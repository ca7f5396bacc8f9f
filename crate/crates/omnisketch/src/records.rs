//! CSV record streams.
//!
//! The header is `rid,a1,...,ak` or, without record ids, `a1,...,ak`.
//! Attribute columns may also carry the schema's attribute names. When the
//! `rid` column is absent, records are numbered by arrival starting at 0.

use std::io::{Read, Write};

use omnisketch_core::{Record, RecordId};

use crate::error::{Error, Result};
use crate::schema::{AttributeKind, Dictionaries, SchemaConfig};

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads every record of `input`, encoding categorical values through
/// `dicts`, and hands each one to `sink`. Returns the number of records.
pub fn read_records<R, F>(
    input: R,
    schema: &SchemaConfig,
    dicts: &mut Dictionaries,
    mut sink: F,
) -> Result<u64>
where
    R: Read,
    F: FnMut(Record) -> Result<()>,
{
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .clone();
    let has_rid = header.get(0).is_some_and(|h| h.eq_ignore_ascii_case("rid"));
    let columns: Vec<&str> = header.iter().skip(has_rid as usize).collect();
    if columns.len() != schema.attribute_count() {
        return Err(omnisketch_core::Error::SchemaMismatch {
            expected: schema.attribute_count(),
            found: columns.len(),
        }
        .into());
    }
    for (i, (col, attr)) in columns.iter().zip(&schema.attributes).enumerate() {
        if *col != attr.name && *col != format!("a{}", i + 1) {
            return Err(Error::Schema(format!(
                "CSV column {} is `{col}`, expected `{}`",
                i + 1 + has_rid as usize,
                attr.name
            )));
        }
    }
    let sketch_schema = schema.sketch_schema();

    let mut row = csv::StringRecord::new();
    let mut arrivals = 0u64;
    loop {
        let more = reader.read_record(&mut row).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = row.position().map_or(0, |p| p.line());
        let mut fields = row.iter();
        let rid = if has_rid {
            let raw = fields.next().unwrap_or_default();
            raw.parse::<u64>()
                .map_err(|_| parse_error(line, format!("invalid rid `{raw}`")))?
        } else {
            arrivals
        };
        let mut values = Vec::with_capacity(columns.len());
        for (a, raw) in fields.enumerate() {
            let attr = &schema.attributes[a];
            let v = match attr.kind {
                AttributeKind::Categorical => dicts.encode(a, raw),
                AttributeKind::Numeric => raw.parse::<u64>().map_err(|_| {
                    parse_error(
                        line,
                        format!("`{raw}` is not an integer value for `{}`", attr.name),
                    )
                })?,
            };
            if !sketch_schema.in_domain(a, v) {
                return Err(parse_error(
                    line,
                    format!("value {v} is outside the domain of `{}`", attr.name),
                ));
            }
            values.push(v);
        }
        sink(Record::new(RecordId(rid), values))?;
        arrivals += 1;
    }
    Ok(arrivals)
}

/// Writes records with a `rid,a1,...,ak` header.
pub fn write_records<W: Write>(output: W, records: &[Record]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(output);
    let k = records.first().map_or(0, |r| r.values.len());
    let mut header = vec!["rid".to_string()];
    header.extend((1..=k).map(|i| format!("a{i}")));
    writer.write_record(&header).map_err(csv_io)?;
    for r in records {
        let mut fields = vec![r.rid.0.to_string()];
        fields.extend(r.values.iter().map(u64::to_string));
        writer.write_record(&fields).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Snapshot(format!("{other:?}")),
    }
}
