//! Keep one frame in N per sequence, in memory and as a two-pass stream.
//!
//! cargo run --example frame_sampling

use roadkit::dataset::{sample_sequences, CanonicalReader, FrameRecord, SamplePlan, TimeOfDay};

fn clip(seq: &str, frames: u64) -> Vec<FrameRecord> {
    (0..frames)
        .map(|i| FrameRecord {
            sequence_id: seq.into(),
            frame_index: i,
            image_width: 1920,
            image_height: 1080,
            timeofday: TimeOfDay::Daytime,
            objects: vec![],
        })
        .collect()
}

fn main() {
    let mut records = clip("a", 100);
    records.extend(clip("b", 25));

    for n in [1, 10, 20, 30] {
        let kept = sample_sequences(records.clone(), n).unwrap();
        let a: Vec<u64> = kept.iter().filter(|r| r.sequence_id == "a").map(|r| r.frame_index).collect();
        println!("1/{n:<2}: {:>3} frames; a keeps {:?}", kept.len(), &a[..a.len().min(6)]);
    }

    // Large files: collect keys on a first pass, filter on a second.
    let file = roadkit::dataset::write_canonical(&records);
    let keys: Vec<(String, u64)> = CanonicalReader::new(file.as_bytes())
        .map(|r| r.map(|r| (r.sequence_id, r.frame_index)).unwrap())
        .collect();
    let plan = SamplePlan::from_keys(keys.iter().map(|(s, i)| (s.as_str(), *i)), 10).unwrap();
    let kept = CanonicalReader::new(file.as_bytes())
        .filter(|r| r.as_ref().map(|r| plan.keeps(&r.sequence_id, r.frame_index)).unwrap())
        .count();
    println!("streamed 1/10: {kept} frames");
}
