//! Streaming parser and writer for CIDDS-001-format CSV files.
//!
//! The reader holds one record at a time, so memory stays bounded no matter
//! how large the file is. Malformed rows are counted and skipped by default;
//! strict mode aborts on the first one with its row number and reason.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use crate::flow::{validate, AttackTypeLabel, ClassLabel, RawFlow, TIMESTAMP_FORMAT};

/// Column order shared by ingestion and the traffic generator. This exact
/// header is the format contract.
pub const CIDDS_HEADER: [&str; 16] = [
    "Date first seen",
    "Duration",
    "Proto",
    "Src IP Addr",
    "Src Pt",
    "Dst IP Addr",
    "Dst Pt",
    "Packets",
    "Bytes",
    "Flows",
    "Flags",
    "Tos",
    "class",
    "attackType",
    "attackID",
    "attackDescription",
];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: io::Error },
    #[error("unrecognized header in {path}: expected CIDDS-001 columns, found {found:?}")]
    BadHeader { path: String, found: Vec<String> },
    #[error("row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ingest options; `strict` aborts on the first malformed row instead of
/// skipping and counting it.
#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub strict: bool,
}

/// Counters accumulated while reading one file.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_accepted: u64,
    pub rows_rejected: u64,
    pub rejection_reasons: BTreeMap<String, u64>,
}

impl IngestReport {
    fn reject(&mut self, reason: &str) {
        self.rows_rejected += 1;
        *self.rejection_reasons.entry(reason.to_string()).or_insert(0) += 1;
    }
}

/// Normalizes a Bytes token: a decimal number optionally followed by
/// whitespace and a `K` or `M` suffix (decimal multipliers 10^3 / 10^6).
/// Fractional results round half-up. Arithmetic is exact decimal, so the
/// mapping is monotone in the token's numeric value.
pub fn parse_bytes(token: &str) -> Result<u64, String> {
    let trimmed = token.trim();
    if trimmed.is_empty() {
        return Err("empty bytes token".to_string());
    }
    if trimmed.starts_with('-') {
        return Err(format!("negative bytes value: {trimmed:?}"));
    }
    let (number, exp) = match trimmed.strip_suffix(['K', 'M']) {
        Some(rest) => {
            let exp = if trimmed.ends_with('M') { 6u32 } else { 3u32 };
            (rest.trim_end(), exp)
        }
        None => (trimmed, 0u32),
    };
    let (int_part, frac_part) = match number.split_once('.') {
        Some((i, f)) => (i, f),
        None => (number, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("unparseable bytes token: {token:?}"));
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(format!("unparseable bytes token: {token:?}"));
    }
    if int_part.len() + frac_part.len() > 30 {
        return Err(format!("bytes value too large: {token:?}"));
    }
    let digits: u128 = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| format!("unparseable bytes token: {token:?}"))?;
    let frac_len = frac_part.len() as u32;
    let value = if exp >= frac_len {
        digits.checked_mul(10u128.pow(exp - frac_len))
    } else {
        let divisor = 10u128.pow(frac_len - exp);
        let quotient = digits / divisor;
        let remainder = digits % divisor;
        // half-up: .5 and above rounds away from zero
        Some(quotient + u128::from(remainder * 2 >= divisor))
    };
    match value {
        Some(v) if v <= u64::MAX as u128 => Ok(v as u64),
        _ => Err(format!("bytes value too large: {token:?}")),
    }
}

/// Parses a `YYYY-MM-DD HH:MM:SS.fff` timestamp. String order of well-formed
/// tokens matches chronological order, since the format is fixed-width.
pub fn parse_timestamp(token: &str) -> Result<NaiveDateTime, String> {
    // chrono treats the fraction as optional when parsing, so pin the
    // fixed-width shape first
    let bytes = token.as_bytes();
    let shape_ok = bytes.len() == 23
        && bytes[4] == b'-'
        && bytes[7] == b'-'
        && bytes[10] == b' '
        && bytes[13] == b':'
        && bytes[16] == b':'
        && bytes[19] == b'.';
    if !shape_ok {
        return Err(format!("bad timestamp {token:?}: expected YYYY-MM-DD HH:MM:SS.fff"));
    }
    NaiveDateTime::parse_from_str(token, TIMESTAMP_FORMAT)
        .map_err(|e| format!("bad timestamp {token:?}: {e}"))
}

pub fn render_timestamp(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

fn parse_port(token: &str) -> Result<u32, String> {
    let trimmed = token.trim();
    if let Ok(v) = trimmed.parse::<i64>() {
        if v < 0 {
            return Err("port out of range".to_string());
        }
        return u32::try_from(v).map_err(|_| "port out of range".to_string());
    }
    // ICMP rows print the type/code as a decimal like "3.0"
    match trimmed.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => Ok(v as u32),
        _ => Err(format!("bad port: {trimmed:?}")),
    }
}

fn parse_row(record: &csv::StringRecord) -> Result<RawFlow, String> {
    if record.len() != CIDDS_HEADER.len() {
        return Err(format!(
            "bad field count: expected {}, got {}",
            CIDDS_HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let date_first_seen = parse_timestamp(field(0))?;
    let duration: f64 = field(1)
        .parse()
        .map_err(|_| format!("bad duration: {:?}", field(1)))?;
    let src_port = parse_port(field(4))?;
    let dst_port = parse_port(field(6))?;
    let packets: u64 = field(7)
        .parse()
        .map_err(|_| format!("bad packets count: {:?}", field(7)))?;
    let bytes = parse_bytes(field(8))?;
    let flows: i64 = field(9)
        .parse()
        .map_err(|_| format!("bad flows count: {:?}", field(9)))?;
    let tos: i64 = field(11)
        .parse()
        .map_err(|_| format!("bad tos: {:?}", field(11)))?;
    let class_label = ClassLabel::parse(field(12)).map_err(|_| "unknown class label".to_string())?;
    let attack_type =
        AttackTypeLabel::parse(field(13)).map_err(|_| "unknown attack type".to_string())?;
    let flow = RawFlow {
        date_first_seen,
        duration,
        proto: field(2).to_string(),
        src_ip: field(3).to_string(),
        src_port,
        dst_ip: field(5).to_string(),
        dst_port,
        packets,
        bytes,
        flows,
        flags: field(10).to_string(),
        tos,
        class_label,
        attack_type,
        attack_id: field(14).to_string(),
        attack_description: field(15).to_string(),
    };
    let violations = validate(&flow);
    if let Some(first) = violations.into_iter().next() {
        return Err(first);
    }
    Ok(flow)
}

/// Streaming reader over one CIDDS-001 CSV file. Iterate to get flows in
/// file order; rows with equal timestamps keep file order. Call
/// [`FlowReader::report`] when done for the ingest counters.
pub struct FlowReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    options: IngestOptions,
    report: IngestReport,
    failed: bool,
}

impl FlowReader<File> {
    pub fn open(path: &Path, options: IngestOptions) -> Result<Self, IngestError> {
        let file = File::open(path).map_err(|source| IngestError::Open {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file, options, &path.display().to_string())
    }
}

impl<R: Read> FlowReader<R> {
    pub fn from_reader(reader: R, options: IngestOptions, name: &str) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::None)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers != CIDDS_HEADER {
            return Err(IngestError::BadHeader {
                path: name.to_string(),
                found: headers,
            });
        }
        Ok(FlowReader {
            records: rdr.into_records(),
            options,
            report: IngestReport::default(),
            failed: false,
        })
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }
}

impl<R: Read> Iterator for FlowReader<R> {
    type Item = Result<RawFlow, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let record = match self.records.next()? {
                Ok(r) => r,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(IngestError::Csv(e)));
                }
            };
            self.report.rows_read += 1;
            match parse_row(&record) {
                Ok(flow) => {
                    self.report.rows_accepted += 1;
                    return Some(Ok(flow));
                }
                Err(reason) => {
                    if self.options.strict {
                        self.failed = true;
                        self.report.reject(&reason);
                        return Some(Err(IngestError::MalformedRow {
                            row: self.report.rows_read,
                            reason,
                        }));
                    }
                    self.report.reject(&reason);
                }
            }
        }
    }
}

/// Reads a whole file into memory. Convenience for desk-scale inputs.
pub fn read_flows(path: &Path, options: IngestOptions) -> Result<(Vec<RawFlow>, IngestReport), IngestError> {
    let mut reader = FlowReader::open(path, options)?;
    let mut flows = Vec::new();
    for item in reader.by_ref() {
        flows.push(item?);
    }
    Ok((flows, reader.into_report()))
}

/// Renders one flow back to its 16 CSV fields, in header order.
pub fn csv_record(flow: &RawFlow) -> [String; 16] {
    [
        render_timestamp(flow.date_first_seen),
        format!("{:.3}", flow.duration),
        flow.proto.clone(),
        flow.src_ip.clone(),
        flow.src_port.to_string(),
        flow.dst_ip.clone(),
        flow.dst_port.to_string(),
        flow.packets.to_string(),
        flow.bytes.to_string(),
        flow.flows.to_string(),
        flow.flags.clone(),
        flow.tos.to_string(),
        flow.class_label.as_str().to_string(),
        flow.attack_type.as_str().to_string(),
        flow.attack_id.clone(),
        flow.attack_description.clone(),
    ]
}

/// CSV writer honouring the header contract.
pub struct FlowWriter<W: Write> {
    writer: csv::Writer<W>,
}

impl FlowWriter<File> {
    pub fn create(path: &Path) -> Result<Self, IngestError> {
        let file = File::create(path).map_err(|source| IngestError::Open {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_writer(file)
    }
}

impl<W: Write> FlowWriter<W> {
    pub fn from_writer(writer: W) -> Result<Self, IngestError> {
        let mut writer = csv::Writer::from_writer(writer);
        writer.write_record(CIDDS_HEADER)?;
        Ok(FlowWriter { writer })
    }

    pub fn write(&mut self, flow: &RawFlow) -> Result<(), IngestError> {
        self.writer.write_record(csv_record(flow))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), IngestError> {
        self.writer.flush()?;
        Ok(())
    }
}
