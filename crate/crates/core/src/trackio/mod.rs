//! Track files, activity annotations and model files.
//!
//! Tracks are plain CSV, one minimum bounding box per line:
//!
//! ```text
//! # frame,person,x,y,w,h
//! 0,1,10.0,20.0,4.0,9.0
//! ```
//!
//! `(x, y)` is the box center, `w`/`h` its size, all in pixels. Lines starting
//! with `#` and blank lines are ignored; LF and CRLF endings are accepted.

mod annotations;
mod model_file;

pub use annotations::{
    parse_annotations, parse_annotations_with, write_annotations, AnnotationError,
    AnnotationRecord, AnnotationSet, GroupRecord, RelationRecord, TruthFrame, TruthGroup,
    TruthRelation,
};
pub use model_file::{load_model, save_model, ModelFileError, MODEL_FORMAT_VERSION};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

pub type PersonId = u32;
pub type Frame = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbbSample {
    pub frame: Frame,
    pub person: PersonId,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate sample for frame {frame}, person {person}")]
    Duplicate {
        line: usize,
        frame: Frame,
        person: PersonId,
    },
    #[error("line {line}: box size must be positive (w={w}, h={h})")]
    NonPositiveBox { line: usize, w: f64, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first bad line.
    #[default]
    Strict,
    /// Skip bad lines and report them alongside the result.
    Lenient,
}

/// Per-person box samples, each person's samples sorted by frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    tracks: BTreeMap<PersonId, Vec<MbbSample>>,
}

impl TrackSet {
    /// Builds a track set, rejecting duplicates and degenerate boxes.
    pub fn from_samples(samples: impl IntoIterator<Item = MbbSample>) -> Result<Self, TrackError> {
        let mut set = TrackSet::default();
        for (idx, s) in samples.into_iter().enumerate() {
            set.insert(s, idx + 1)?;
        }
        Ok(set)
    }

    fn insert(&mut self, s: MbbSample, line: usize) -> Result<(), TrackError> {
        if !(s.w > 0.0 && s.h > 0.0) {
            return Err(TrackError::NonPositiveBox { line, w: s.w, h: s.h });
        }
        let track = self.tracks.entry(s.person).or_default();
        match track.binary_search_by_key(&s.frame, |x| x.frame) {
            Ok(_) => Err(TrackError::Duplicate {
                line,
                frame: s.frame,
                person: s.person,
            }),
            Err(pos) => {
                track.insert(pos, s);
                Ok(())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.tracks.values().map(Vec::len).sum()
    }

    pub fn persons(&self) -> impl Iterator<Item = PersonId> + '_ {
        self.tracks.keys().copied()
    }

    pub fn track(&self, person: PersonId) -> Option<&[MbbSample]> {
        self.tracks.get(&person).map(Vec::as_slice)
    }

    pub fn sample(&self, frame: Frame, person: PersonId) -> Option<&MbbSample> {
        let track = self.tracks.get(&person)?;
        track
            .binary_search_by_key(&frame, |s| s.frame)
            .ok()
            .map(|i| &track[i])
    }

    /// Inclusive `[t_min, t_max]`, or `None` when empty.
    pub fn frame_range(&self) -> Option<(Frame, Frame)> {
        let lo = self.tracks.values().filter_map(|t| t.first()).map(|s| s.frame).min()?;
        let hi = self.tracks.values().filter_map(|t| t.last()).map(|s| s.frame).max()?;
        Some((lo, hi))
    }

    /// Persons with a sample at `frame`, ascending.
    pub fn present_at(&self, frame: Frame) -> Vec<PersonId> {
        self.tracks
            .iter()
            .filter(|(_, t)| t.binary_search_by_key(&frame, |s| s.frame).is_ok())
            .map(|(p, _)| *p)
            .collect()
    }

    /// Missing frame spans `[from, to]` between a person's first and last sample.
    pub fn gaps(&self, person: PersonId) -> Vec<(Frame, Frame)> {
        let Some(track) = self.tracks.get(&person) else {
            return Vec::new();
        };
        track
            .windows(2)
            .filter(|w| w[1].frame > w[0].frame + 1)
            .map(|w| (w[0].frame + 1, w[1].frame - 1))
            .collect()
    }

    pub fn samples(&self) -> impl Iterator<Item = &MbbSample> {
        self.tracks.values().flatten()
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<MbbSample, TrackError> {
    let bad = |reason: String| TrackError::Malformed { line: lineno, reason };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(bad(format!("expected 6 fields, found {}", fields.len())));
    }
    let frame = fields[0]
        .parse::<Frame>()
        .map_err(|e| bad(format!("frame `{}`: {e}", fields[0])))?;
    let person = fields[1]
        .parse::<PersonId>()
        .map_err(|e| bad(format!("person `{}`: {e}", fields[1])))?;
    let mut nums = [0.0; 4];
    for (slot, raw) in nums.iter_mut().zip(&fields[2..]) {
        let v = raw
            .parse::<f64>()
            .map_err(|e| bad(format!("number `{raw}`: {e}")))?;
        if !v.is_finite() {
            return Err(bad(format!("non-finite number `{raw}`")));
        }
        *slot = v;
    }
    Ok(MbbSample {
        frame,
        person,
        x: nums[0],
        y: nums[1],
        w: nums[2],
        h: nums[3],
    })
}

/// Parses a track CSV in strict mode.
pub fn parse_tracks(text: &str) -> Result<TrackSet, TrackError> {
    parse_tracks_with(text, ParseMode::Strict).map(|(set, _)| set)
}

/// Parses a track CSV. In lenient mode bad lines are skipped and returned;
/// every non-comment line ends up either in the set or in the error list.
pub fn parse_tracks_with(
    text: &str,
    mode: ParseMode,
) -> Result<(TrackSet, Vec<TrackError>), TrackError> {
    let mut set = TrackSet::default();
    let mut errors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let result = parse_line(line, lineno).and_then(|s| set.insert(s, lineno));
        if let Err(e) = result {
            match mode {
                ParseMode::Strict => return Err(e),
                ParseMode::Lenient => errors.push(e),
            }
        }
    }
    Ok((set, errors))
}

/// Serializes tracks as CSV ordered by (frame, person). Floats use the
/// shortest representation that parses back to the same value.
pub fn write_tracks(tracks: &TrackSet) -> String {
    let mut rows: Vec<&MbbSample> = tracks.samples().collect();
    rows.sort_by_key(|s| (s.frame, s.person));
    let mut out = String::from("# frame,person,x,y,w,h\n");
    for s in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", s.frame, s.person, s.x, s.y, s.w, s.h);
    }
    out
}
