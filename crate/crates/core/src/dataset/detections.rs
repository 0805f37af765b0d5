//! Line-delimited detection files: one frame per line,
//! `{"sequence_id", "frame_index", "detections": [{"category", "bbox", "score"}]}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DatasetError, FrameKeys};
use crate::geometry::ScoredBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub sequence_id: String,
    pub frame_index: u64,
    pub detections: Vec<ScoredBox>,
}

pub struct DetectionReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    keys: FrameKeys,
}

impl<R: BufRead> DetectionReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            keys: FrameKeys::default(),
        }
    }

    /// Line number of the most recently read line (1-based).
    pub fn line_no(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for DetectionReader<R> {
    type Item = Result<DetectionFrame, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<DetectionFrame>(&line).map_err(|e| DatasetError::Syntax {
                line: self.line_no,
                column: e.column(),
                message: e.to_string(),
            });
            return Some(parsed.and_then(|frame| {
                self.keys
                    .insert(&frame.sequence_id, frame.frame_index)
                    .map_err(|e| e.at_line(self.line_no))?;
                Ok(frame)
            }));
        }
    }
}

pub fn parse_detections(contents: &str) -> Result<Vec<DetectionFrame>, DatasetError> {
    DetectionReader::new(contents.as_bytes()).collect()
}

pub fn write_detections(frames: &[DetectionFrame]) -> String {
    let mut out = Vec::new();
    for f in frames {
        serde_json::to_writer(&mut out, f).expect("writing to memory");
        out.write_all(b"\n").expect("writing to memory");
    }
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    #[test]
    fn roundtrip_and_layout() {
        let frames = vec![DetectionFrame {
            sequence_id: "s".into(),
            frame_index: 2,
            detections: vec![ScoredBox::new("vehicle", BBox::new(1.0, 2.0, 3.5, 4.0).unwrap(), 0.25).unwrap()],
        }];
        let text = write_detections(&frames);
        assert_eq!(
            text,
            "{\"sequence_id\":\"s\",\"frame_index\":2,\"detections\":[{\"category\":\"vehicle\",\"bbox\":[1.0,2.0,3.5,4.0],\"score\":0.25}]}\n"
        );
        assert_eq!(parse_detections(&text).unwrap(), frames);
        assert!(parse_detections("").unwrap().is_empty());
    }

    #[test]
    fn rejects_duplicates_and_bad_boxes() {
        let line = r#"{"sequence_id":"s","frame_index":0,"detections":[]}"#;
        let err = parse_detections(&format!("{line}\n{line}\n")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let bad = r#"{"sequence_id":"s","frame_index":0,"detections":[{"category":"v","bbox":[5,0,1,1],"score":0.5}]}"#;
        assert!(matches!(parse_detections(bad), Err(DatasetError::Syntax { line: 1, .. })));
    }
}
