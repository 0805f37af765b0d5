//! Line-delimited canonical annotation format.
//!
//! The first line is a fixed header; every following line is one
//! [`FrameRecord`] as a JSON object. Floats use shortest round-trip
//! formatting, so `parse_canonical(write_canonical(r)) == r`.

use std::io::{BufRead, Write};

use super::{DatasetError, FrameKeys, FrameRecord};

pub const CANONICAL_HEADER: &str = r#"{"format":"roadkit-frames","version":1}"#;

/// Streaming reader. Validates the header, every record, and key uniqueness.
pub struct CanonicalReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    keys: FrameKeys,
    header_seen: bool,
}

impl<R: BufRead> CanonicalReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            keys: FrameKeys::default(),
            header_seen: false,
        }
    }

    /// Line number of the most recently read line (1-based).
    pub fn line_no(&self) -> usize {
        self.line_no
    }

    fn next_line(&mut self) -> Option<Result<String, DatasetError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Some(Ok(line));
            }
        }
    }

    fn read_header(&mut self) -> Result<(), DatasetError> {
        self.header_seen = true;
        match self.next_line() {
            Some(Ok(line)) if line.trim() == CANONICAL_HEADER => Ok(()),
            Some(Err(e)) => Err(e),
            _ => Err(DatasetError::Header { expected: CANONICAL_HEADER.to_string() }),
        }
    }

    fn parse_record(&mut self, line: &str) -> Result<FrameRecord, DatasetError> {
        let record: FrameRecord = serde_json::from_str(line).map_err(|e| DatasetError::Syntax {
            line: self.line_no,
            column: e.column(),
            message: e.to_string(),
        })?;
        self.keys.insert(&record.sequence_id, record.frame_index)?;
        record.validate()?;
        Ok(record)
    }
}

impl<R: BufRead> Iterator for CanonicalReader<R> {
    type Item = Result<FrameRecord, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if !self.header_seen {
            if let Err(e) = self.read_header() {
                return Some(Err(e));
            }
        }
        let line = match self.next_line()? {
            Ok(l) => l,
            Err(e) => return Some(Err(e)),
        };
        Some(self.parse_record(&line).map_err(|e| e.at_line(self.line_no)))
    }
}

/// Streaming writer; emits the header on construction.
pub struct CanonicalWriter<W: Write> {
    out: W,
}

impl<W: Write> CanonicalWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{CANONICAL_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write(&mut self, record: &FrameRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn parse_canonical(contents: &str) -> Result<Vec<FrameRecord>, DatasetError> {
    CanonicalReader::new(contents.as_bytes()).collect()
}

pub fn write_canonical(records: &[FrameRecord]) -> String {
    let mut w = CanonicalWriter::new(Vec::new()).expect("writing to memory");
    for r in records {
        w.write(r).expect("writing to memory");
    }
    String::from_utf8(w.finish().expect("writing to memory")).expect("serde_json emits UTF-8")
}
