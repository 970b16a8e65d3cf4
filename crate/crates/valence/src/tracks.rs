//! Text formats for track datasets and trained models.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which round-trips
//! every finite `f64` exactly.
//!
//! Track dataset:
//!
//! ```text
//! TRACKS feature_dim=64 frames=7 train=1260 val=420 test=420
//! TRACK <episode> <round> <split> <+1|-1> <emotions|-> <frames*feature_dim reals>
//! ```
//!
//! `emotions` is a comma-separated list of emotion indices. Model:
//!
//! ```text
//! MODEL feature_dim=64 pooling=average normalize=l1
//! BIAS <real>
//! W <real>        (feature_dim lines)
//! ```

use std::fmt::Write as _;

use thiserror::Error;
use valence_core::dataset::LabeledTrack;
use valence_core::matrix::Matrix;
use valence_core::{
    Emotion, EventRef, FaceTrack, LabeledTrackSet, LinearTrackModel, Normalization, PoolingMode, Sign, Split,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

fn push_real(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

fn parse_real(s: &str, line: usize) -> Result<f64, FormatError> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(err(line, format!("invalid real `{s}`"))),
    }
}

/// Parses `key=value` header fields in the given order.
fn header_fields<'a>(line: &'a str, tag: &str, keys: &[&str], lineno: usize) -> Result<Vec<&'a str>, FormatError> {
    let mut parts = line.split(' ');
    if parts.next() != Some(tag) {
        return Err(err(lineno, format!("expected `{tag}` header")));
    }
    let mut values = Vec::with_capacity(keys.len());
    for key in keys {
        let part = parts.next().ok_or_else(|| err(lineno, format!("missing `{key}`")))?;
        let value = part
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| err(lineno, format!("expected `{key}=`, found `{part}`")))?;
        values.push(value);
    }
    if parts.next().is_some() {
        return Err(err(lineno, "unexpected header field"));
    }
    Ok(values)
}

fn parse_count(s: &str, line: usize) -> Result<usize, FormatError> {
    s.parse().map_err(|_| err(line, format!("invalid count `{s}`")))
}

pub fn write_track_set(set: &LabeledTrackSet) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "TRACKS feature_dim={} frames={} train={} val={} test={}",
        set.feature_dim,
        set.frames_per_track,
        set.count(Split::Train),
        set.count(Split::Val),
        set.count(Split::Test)
    );
    for lt in &set.tracks {
        let t = &lt.track;
        let label = match t.label {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        };
        let _ = write!(out, "TRACK {} {} {} {label} ", t.event_ref.episode, t.event_ref.round, lt.split);
        match &t.true_emotions {
            Some(es) => {
                let idx: Vec<String> = es.iter().map(|e| e.index().to_string()).collect();
                out.push_str(&idx.join(","));
            }
            None => out.push('-'),
        }
        for x in t.frames.as_slice() {
            out.push(' ');
            push_real(&mut out, *x);
        }
        out.push('\n');
    }
    out
}

pub fn read_track_set(text: &str) -> Result<LabeledTrackSet, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let h = header_fields(header, "TRACKS", &["feature_dim", "frames", "train", "val", "test"], 1)?;
    let dim = parse_count(h[0], 1)?;
    let frames = parse_count(h[1], 1)?;
    let expected = [parse_count(h[2], 1)?, parse_count(h[3], 1)?, parse_count(h[4], 1)?];

    let mut tracks = Vec::new();
    for (no, line) in lines {
        let mut f = line.split(' ');
        if f.next() != Some("TRACK") {
            return Err(err(no, "expected `TRACK` record"));
        }
        let mut next = |what: &str| f.next().ok_or_else(|| err(no, format!("missing {what}")));
        let episode = next("episode")?.to_string();
        let round = next("round")?.parse().map_err(|_| err(no, "invalid round"))?;
        let split = Split::from_name(next("split")?).ok_or_else(|| err(no, "invalid split"))?;
        let label = match next("label")? {
            "+1" => Sign::Plus,
            "-1" => Sign::Minus,
            other => return Err(err(no, format!("invalid label `{other}`"))),
        };
        let true_emotions = match next("emotions")? {
            "-" => None,
            list => Some(
                list.split(',')
                    .map(|s| s.parse().ok().and_then(Emotion::from_index))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err(no, "invalid emotion list"))?,
            ),
        };
        let data = f.map(|s| parse_real(s, no)).collect::<Result<Vec<_>, _>>()?;
        if data.len() != frames * dim {
            return Err(err(no, format!("expected {} reals, found {}", frames * dim, data.len())));
        }
        if true_emotions.as_ref().is_some_and(|e| e.len() != frames) {
            return Err(err(no, "emotion list length differs from frame count"));
        }
        tracks.push(LabeledTrack {
            track: FaceTrack {
                event_ref: EventRef { episode, round },
                frames: Matrix::from_vec(frames, dim, data).expect("length checked"),
                true_emotions,
                label,
            },
            split,
        });
    }
    let set = LabeledTrackSet { feature_dim: dim, frames_per_track: frames, tracks };
    let found = [set.count(Split::Train), set.count(Split::Val), set.count(Split::Test)];
    if found != expected {
        return Err(err(1, format!("header counts {expected:?} differ from records {found:?}")));
    }
    Ok(set)
}

pub fn write_model(model: &LinearTrackModel) -> String {
    let mut out =
        format!("MODEL feature_dim={} pooling={} normalize={}\nBIAS ", model.dim(), model.pooling, model.normalize);
    push_real(&mut out, model.bias);
    out.push('\n');
    for w in &model.weights {
        out.push_str("W ");
        push_real(&mut out, *w);
        out.push('\n');
    }
    out
}

pub fn read_model(text: &str) -> Result<LinearTrackModel, FormatError> {
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.first().ok_or_else(|| err(1, "empty file"))?;
    let h = header_fields(header, "MODEL", &["feature_dim", "pooling", "normalize"], 1)?;
    let dim = parse_count(h[0], 1)?;
    let pooling = PoolingMode::from_name(h[1]).ok_or_else(|| err(1, "invalid pooling"))?;
    let normalize = Normalization::from_name(h[2]).ok_or_else(|| err(1, "invalid normalization"))?;
    let bias = lines
        .get(1)
        .and_then(|l| l.strip_prefix("BIAS "))
        .ok_or_else(|| err(2, "expected `BIAS` line"))
        .and_then(|s| parse_real(s, 2))?;
    if lines.len() != dim + 2 {
        return Err(err(lines.len(), format!("expected {dim} weight lines, found {}", lines.len().saturating_sub(2))));
    }
    let weights = lines[2..]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.strip_prefix("W ").ok_or_else(|| err(i + 3, "expected `W` line")).and_then(|s| parse_real(s, i + 3))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LinearTrackModel { weights, bias, pooling, normalize })
}
