//! JSON-lines recording files.
//!
//! One frame pair per line:
//!
//! ```text
//! {"t":1,"scope":{"pos":[[x,y,z],...],"dir":[[x,y,z],...],"len":812.5},"colon":{"markers":[[x,y,z],...]}}
//! ```
//!
//! A sidecar `<stem>.meta.json` next to `<stem>.jsonl` carries the recording id
//! and sample rate. Without it the id is the file stem and the rate is 6 Hz.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::frame::{ColonFrame, ColonoscopeFrame, InsertionRecording, Vec3, DEFAULT_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScopeRecord {
    pos: Vec<Vec3>,
    dir: Vec<Vec3>,
    len: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColonRecord {
    markers: Vec<Vec3>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    t: usize,
    scope: ScopeRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    colon: Option<ColonRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingMeta {
    pub id: String,
    pub sample_rate: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

impl FrameRecord {
    fn into_frames(self) -> (ColonoscopeFrame, Option<ColonFrame>) {
        let scope = ColonoscopeFrame {
            t: self.t,
            positions: self.scope.pos,
            directions: self.scope.dir,
            insertion_length: self.scope.len,
        };
        let colon = self.colon.map(|c| ColonFrame {
            t: self.t,
            markers: c.markers,
        });
        (scope, colon)
    }
}

/// Parses and validates one line of a scope stream. The `colon` field is
/// optional here.
pub fn parse_scope_line(line: &str) -> std::result::Result<ColonoscopeFrame, String> {
    let record: FrameRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let (scope, _) = record.into_frames();
    scope.check().map_err(|m| format!("frame {}: {m}", scope.t))?;
    Ok(scope)
}

/// Serializes one frame pair as a JSONL line (no trailing newline).
pub fn frame_line(scope: &ColonoscopeFrame, colon: Option<&ColonFrame>) -> Result<String> {
    let record = FrameRecord {
        t: scope.t,
        scope: ScopeRecord {
            pos: scope.positions.clone(),
            dir: scope.directions.clone(),
            len: scope.insertion_length,
        },
        colon: colon.map(|c| ColonRecord {
            markers: c.markers.clone(),
        }),
    };
    Ok(serde_json::to_string(&record)?)
}

pub fn load_recording(path: &Path) -> Result<InsertionRecording> {
    let file = fs::File::open(path)?;
    let mut frames: Vec<(ColonoscopeFrame, ColonFrame)> = Vec::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameRecord = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let t = record.t;
        let (scope, colon) = record.into_frames();
        let colon = colon.ok_or_else(|| parse_err(lineno, "missing field `colon`".into()))?;
        scope.check().map_err(|message| Error::InvalidFrame {
            path: path.to_path_buf(),
            frame: t,
            message,
        })?;
        if colon.markers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(parse_err(lineno, "non-finite value in field `markers`".into()));
        }
        if let Some((prev_scope, prev_colon)) = frames.last() {
            if t != prev_scope.t + 1 {
                return Err(parse_err(
                    lineno,
                    format!(
                        "field `t`: expected {} after {}, found {t}",
                        prev_scope.t + 1,
                        prev_scope.t
                    ),
                ));
            }
            if scope.sensors() != prev_scope.sensors() {
                return Err(parse_err(
                    lineno,
                    format!(
                        "field `pos`: {} sensors, earlier frames have {}",
                        scope.sensors(),
                        prev_scope.sensors()
                    ),
                ));
            }
            if colon.markers.len() != prev_colon.markers.len() {
                return Err(parse_err(
                    lineno,
                    format!(
                        "field `markers`: {} markers, earlier frames have {}",
                        colon.markers.len(),
                        prev_colon.markers.len()
                    ),
                ));
            }
        }
        frames.push((scope, colon));
    }
    if frames.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }

    let sidecar = sidecar_path(path);
    let meta = if sidecar.exists() {
        serde_json::from_str::<RecordingMeta>(&fs::read_to_string(&sidecar)?).map_err(|e| Error::Parse {
            path: sidecar.clone(),
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        RecordingMeta {
            id: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sample_rate: DEFAULT_SAMPLE_RATE_HZ,
        }
    };
    Ok(InsertionRecording {
        id: meta.id,
        sample_rate: meta.sample_rate,
        frames,
    })
}

/// Writes the recording as JSONL plus its metadata sidecar.
pub fn save_recording(rec: &InsertionRecording, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for (scope, colon) in &rec.frames {
        out.extend_from_slice(frame_line(scope, Some(colon))?.as_bytes());
        out.push(b'\n');
    }
    write_atomic(path, &out)?;
    let meta = RecordingMeta {
        id: rec.id.clone(),
        sample_rate: rec.sample_rate,
    };
    let mut meta_json = serde_json::to_vec_pretty(&meta)?;
    meta_json.push(b'\n');
    write_atomic(&sidecar_path(path), &meta_json)
}

/// Loads every `*.jsonl` recording in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<InsertionRecording>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_recording(p)).collect()
}

/// Writes via a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
