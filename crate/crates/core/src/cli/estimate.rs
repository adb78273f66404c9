use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::time::Instant;

use serde::Serialize;

use crate::data::io::parse_scope_line;
use crate::data::{window_input, ColonoscopeFrame, Vec3};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Serialize)]
struct EstimateLine<'a> {
    t_c: usize,
    markers: &'a [Vec3],
    latency_ms: f64,
}

#[derive(Debug, Serialize)]
struct ErrorLine<'a> {
    line: usize,
    error: &'a str,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StreamSummary {
    pub frames: usize,
    pub estimates: usize,
    pub errors: usize,
}

/// Reads scope frames as JSON lines and writes one estimate per frame once
/// `τ` frames are buffered. Bad lines are reported on `diag` and skipped.
pub fn stream_estimates<R: BufRead, W: Write, D: Write>(
    model: &Model,
    input: R,
    mut out: W,
    mut diag: D,
) -> Result<StreamSummary> {
    let cfg = &model.config;
    let mut ring: VecDeque<ColonoscopeFrame> = VecDeque::with_capacity(cfg.tau);
    let mut summary = StreamSummary::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut report = |msg: &str| -> Result<()> {
            serde_json::to_writer(
                &mut diag,
                &ErrorLine {
                    line: i + 1,
                    error: msg,
                },
            )?;
            writeln!(diag)?;
            Ok(())
        };
        let frame = match parse_scope_line(&line) {
            Ok(f) if f.sensors() != cfg.sensors => {
                summary.errors += 1;
                report(&format!("{} sensors, model expects {}", f.sensors(), cfg.sensors))?;
                continue;
            }
            Ok(f) => f,
            Err(msg) => {
                summary.errors += 1;
                report(&msg)?;
                continue;
            }
        };
        summary.frames += 1;
        if ring.len() == cfg.tau {
            ring.pop_front();
        }
        ring.push_back(frame);
        if ring.len() < cfg.tau {
            continue;
        }
        let start = Instant::now();
        let window: Vec<&ColonoscopeFrame> = ring.iter().collect();
        let estimate = window_input(&window, cfg.window_spec(), &model.stats).and_then(|w| model.estimate_input(&w));
        let latency_ms = start.elapsed().as_secs_f64() * 1e3;
        match estimate {
            Ok(shape) => {
                serde_json::to_writer(
                    &mut out,
                    &EstimateLine {
                        t_c: shape.t_c,
                        markers: &shape.markers,
                        latency_ms,
                    },
                )?;
                writeln!(out)?;
                out.flush()?;
                summary.estimates += 1;
            }
            Err(e @ Error::Io(_)) => return Err(e),
            Err(e) => {
                summary.errors += 1;
                report(&e.to_string())?;
            }
        }
    }
    Ok(summary)
}
