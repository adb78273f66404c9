use serde::{Deserialize, Serialize};

use crate::data::{make_window_samples, ColonFrame, InsertionRecording, WindowSample};
use crate::error::Result;
use crate::model::Model;
use crate::train::{med, MedReport, Summary};

/// Estimates for every window of one recording, compared with its markers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingEval {
    pub recording: String,
    pub t_c: Vec<usize>,
    pub med: MedReport,
    /// Input values clamped into `[0, 1]` by the model's statistics.
    pub clamped_inputs: usize,
}

/// Runs `model` over all windows of `samples` in batches.
pub fn estimate_samples(model: &Model, samples: &[WindowSample]) -> Result<Vec<ColonFrame>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(256) {
        let members: Vec<&WindowSample> = chunk.iter().collect();
        for shape in model.estimate_batch(&members)? {
            out.push(ColonFrame {
                t: shape.t_c,
                markers: shape.markers,
            });
        }
    }
    Ok(out)
}

pub fn evaluate_recording(model: &Model, rec: &InsertionRecording) -> Result<RecordingEval> {
    let set = make_window_samples(rec, model.config.window_spec(), &model.stats)?;
    let estimates = estimate_samples(model, &set.samples)?;
    let truths: Vec<ColonFrame> = set.samples.iter().map(|s| s.target.clone()).collect();
    Ok(RecordingEval {
        recording: rec.id.clone(),
        t_c: set.samples.iter().map(|s| s.t_c).collect(),
        med: med(&estimates, &truths)?,
        clamped_inputs: set.clamped,
    })
}

/// A trained model evaluated on recordings it was not trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub recordings: Vec<RecordingEval>,
    /// Across recordings.
    pub summary: Summary,
}

pub fn evaluate_model(model: &Model, recordings: &[InsertionRecording]) -> Result<HoldoutReport> {
    let recordings = recordings
        .iter()
        .filter(|r| r.len() >= model.config.tau)
        .map(|r| evaluate_recording(model, r))
        .collect::<Result<Vec<_>>>()?;
    let meds: Vec<f64> = recordings.iter().map(|r| r.med.med).collect();
    Ok(HoldoutReport {
        summary: Summary::of(&meds),
        recordings,
    })
}
