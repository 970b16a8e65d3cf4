//! Turns labeled tracks into an annotation dataset: `items.jsonl` plus one
//! glyph-sequence media file per item.

use valence_core::classify::FrameClassifier;
use valence_core::{Emotion, LabeledTrackSet, Sign, Split};

use super::store::ItemSpec;

pub const CHOICES: [&str; 2] = ["good", "bad"];
pub const MEDIA_FPS: u32 = 2;

pub fn glyph(e: Emotion) -> &'static str {
    match e {
        Emotion::Anger => "\u{1F620}",
        Emotion::Disgust => "\u{1F922}",
        Emotion::Fear => "\u{1F628}",
        Emotion::Happiness => "\u{1F600}",
        Emotion::Sadness => "\u{1F622}",
        Emotion::Surprise => "\u{1F62E}",
        Emotion::Neutral => "\u{1F610}",
    }
}

pub struct AnnotationDataset {
    pub items: Vec<ItemSpec>,
    /// `(file name, JSON body)` for each item, stored under `media/`.
    pub media: Vec<(String, String)>,
}

impl AnnotationDataset {
    pub fn items_jsonl(&self) -> String {
        self.items.iter().map(|i| serde_json::to_string(i).expect("items serialize") + "\n").collect()
    }
}

/// Items from one split. Frames show the generator's emotions when the track
/// carries them, otherwise the classifier's reading of each frame.
pub fn build_dataset(
    name: &str,
    tracks: &LabeledTrackSet,
    split: Split,
    classifier: &dyn FrameClassifier,
) -> AnnotationDataset {
    let mut items = Vec::new();
    let mut media = Vec::new();
    for t in tracks.split(split) {
        let id = format!("{}-r{:02}", t.event_ref.episode, t.event_ref.round);
        let emotions = match &t.true_emotions {
            Some(es) => es.clone(),
            None => (0..t.frames.rows()).map(|r| classifier.classify(t.frames.row(r))).collect(),
        };
        let frames: Vec<_> =
            emotions.iter().map(|&e| serde_json::json!({ "emotion": e.name(), "glyph": glyph(e) })).collect();
        let file = format!("{id}.json");
        let body = serde_json::json!({ "item_id": id, "fps": MEDIA_FPS, "frames": frames });
        media.push((file.clone(), serde_json::to_string(&body).expect("media serializes") + "\n"));
        items.push(ItemSpec {
            item_id: id,
            media_ref: format!("/media/{name}/media/{file}"),
            choices: CHOICES.iter().map(|c| c.to_string()).collect(),
            ground_truth: match t.label {
                Sign::Plus => CHOICES[0],
                Sign::Minus => CHOICES[1],
            }
            .into(),
        });
    }
    AnnotationDataset { items, media }
}
