//! Versioned interchange formats. Every JSON artifact carries
//! `format_version`.

use std::collections::BTreeMap;
use std::path::Path;

use reanchor::anchors::{Anchor, AnchorSource, PromptSchedule};
use reanchor::featurepool::{MatchScore, TargetFeaturePool};
use reanchor::maskmedia::{D4Transform, RleMask};
use reanchor::metrics::{DatasetReport, VideoMetrics};
use reanchor::tracker::{FrameTag, TrackResult};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::io;

pub const FORMAT_VERSION: u32 = 1;

/// Name of the boundary measure reported in the `F` column.
pub const F_MEASURE: &str = "F (dilated-boundary)";

fn check_version(found: u32, what: &str) -> CliResult<()> {
    if found != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "{what}: unsupported format_version {found} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRecord {
    pub frame: usize,
    pub score: f64,
    pub source: AnchorSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub rle: RleMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub format_version: u32,
    pub video: String,
    pub anchors: Vec<AnchorRecord>,
}

impl ScheduleFile {
    pub fn from_schedule(s: &PromptSchedule<f64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            video: s.video_id.clone(),
            anchors: s
                .anchors
                .iter()
                .map(|a| AnchorRecord {
                    frame: a.frame_idx,
                    score: a.score,
                    source: a.source,
                    id: a.instance_id.clone(),
                    rle: a.mask.clone(),
                })
                .collect(),
        }
    }

    pub fn into_schedule(self) -> CliResult<PromptSchedule<f64>> {
        check_version(self.format_version, "schedule")?;
        let mut anchors = Vec::with_capacity(self.anchors.len());
        for a in self.anchors {
            a.rle
                .validate()
                .map_err(|e| CliError::Data(format!("schedule anchor at frame {}: {e}", a.frame)))?;
            anchors.push(Anchor {
                frame_idx: a.frame,
                mask: a.rle,
                score: a.score,
                source: a.source,
                instance_id: a.id,
            });
        }
        Ok(PromptSchedule::new(&self.video, anchors)?)
    }

    pub fn load(path: &Path) -> CliResult<PromptSchedule<f64>> {
        let file: ScheduleFile = serde_json::from_str(&io::read_to_string(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        file.into_schedule()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntryRecord {
    pub transform: D4Transform,
    pub vec: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFile {
    pub format_version: u32,
    pub source_frame: usize,
    pub patch_side: u32,
    pub entries: Vec<PoolEntryRecord>,
}

impl PoolFile {
    pub fn from_pool(pool: &TargetFeaturePool<f64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            source_frame: pool.source_frame,
            patch_side: pool.patch_side,
            entries: pool
                .entries
                .iter()
                .map(|e| PoolEntryRecord {
                    transform: e.transform,
                    vec: e.vector.values().to_vec(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFrameRecord {
    pub frame: usize,
    pub tag: FrameTag,
    pub score: Option<f64>,
    pub instance_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFile {
    pub format_version: u32,
    pub video: String,
    pub frames: Vec<TrackFrameRecord>,
}

impl TrackFile {
    pub fn from_result(video: &str, r: &TrackResult<f64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            video: video.to_string(),
            frames: r
                .frames
                .iter()
                .enumerate()
                .map(|(i, t)| TrackFrameRecord {
                    frame: i,
                    tag: t.tag,
                    score: t.score,
                    instance_id: t.instance_id.clone(),
                })
                .collect(),
        }
    }
}

/// Audit table of every scored candidate.
pub fn write_scores_csv(path: &Path, scores: &[MatchScore<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["frame", "id", "score", "best_transform"])?;
    for s in scores {
        w.write_record([
            s.candidate.frame_idx.to_string(),
            s.candidate.instance_id.clone(),
            s.score.to_string(),
            s.best_transform.name().to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, e))?;
    io::write_atomic(path, &bytes)
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub video: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "J&F")]
    pub jf: f64,
    #[serde(rename = "J&F_d")]
    pub jf_d: Option<f64>,
    #[serde(rename = "J&F_r")]
    pub jf_r: Option<f64>,
    pub n_frames: usize,
    pub n_disappear: usize,
    pub n_reappear: usize,
}

/// Label of the dataset summary rows.
pub const SUMMARY: &str = "ALL";

impl ReportRow {
    pub fn video(video: &str, object: &str, mode: Option<&str>, m: &VideoMetrics<f64>) -> Self {
        Self {
            video: video.to_string(),
            object: object.to_string(),
            mode: mode.map(str::to_string),
            j: m.j_mean,
            f: m.f_mean,
            jf: m.jf,
            jf_d: m.jf_d,
            jf_r: m.jf_r,
            n_frames: m.n_frames,
            n_disappear: m.n_disappear,
            n_reappear: m.n_reappear,
        }
    }

    pub fn summary(mode: Option<&str>, d: &DatasetReport<f64>) -> Self {
        Self {
            video: SUMMARY.to_string(),
            object: SUMMARY.to_string(),
            mode: mode.map(str::to_string),
            j: d.j_mean,
            f: d.f_mean,
            jf: d.jf,
            jf_d: d.jf_d,
            jf_r: d.jf_r,
            n_frames: d.n_frames,
            n_disappear: d.n_disappear,
            n_reappear: d.n_reappear,
        }
    }
}

/// Per-(video, object) rows followed by the summary rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub f_measure: String,
    /// Pixels, or `"auto"` when videos of different sizes used their own
    /// default.
    pub boundary_tol: serde_json::Value,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(tolerances: &[u32], rows: Vec<ReportRow>) -> Self {
        let boundary_tol = match tolerances.split_first() {
            Some((first, rest)) if rest.iter().all(|t| t == first) => (*first).into(),
            _ => "auto".into(),
        };
        Self {
            format_version: FORMAT_VERSION,
            f_measure: F_MEASURE.to_string(),
            boundary_tol,
            rows,
        }
    }

    fn has_mode(&self) -> bool {
        self.rows.iter().any(|r| r.mode.is_some())
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let with_mode = self.has_mode();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["video", "object"];
        if with_mode {
            header.push("mode");
        }
        header.extend(["J", "F", "J&F", "J&F_d", "J&F_r", "n_frames", "n_disappear", "n_reappear"]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.video.clone(), r.object.clone()];
            if with_mode {
                rec.push(r.mode.clone().unwrap_or_default());
            }
            rec.extend([
                r.j.to_string(),
                r.f.to_string(),
                r.jf.to_string(),
                opt(r.jf_d),
                opt(r.jf_r),
                r.n_frames.to_string(),
                r.n_disappear.to_string(),
                r.n_reappear.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| CliError::Data(e.to_string()))
    }

    /// Rejects report paths that are neither `.json` nor `.csv`.
    pub fn check_path(path: &Path) -> CliResult<bool> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(true),
            Some("csv") => Ok(false),
            _ => Err(CliError::Usage(format!(
                "{}: report must end in .json or .csv",
                path.display()
            ))),
        }
    }

    /// Writes JSON or CSV depending on the extension of `path`.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        if Self::check_path(path)? {
            io::write_json(path, self)
        } else {
            io::write_atomic(path, &self.to_csv()?)
        }
    }
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub config: PipelineConfig,
    pub inputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn new(command: &str, args: &[String], config: &PipelineConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: args.to_vec(),
            config: config.clone(),
            inputs: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let m: RunManifest = serde_json::from_str(&io::read_to_string(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        check_version(m.format_version, "manifest")?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use reanchor::maskmedia::{rle_encode, BinaryMask};

    fn rle(w: u32, h: u32, on: &[(u32, u32)]) -> RleMask {
        let mut m = BinaryMask::new(w, h).unwrap();
        for &(r, c) in on {
            m.set(r, c, true);
        }
        rle_encode(&m)
    }

    #[test]
    fn schedule_roundtrip() {
        let mut mined = Anchor::first_frame(rle(4, 3, &[(1, 1)]));
        mined.frame_idx = 7;
        mined.score = 0.75;
        mined.source = AnchorSource::Mined;
        mined.instance_id = Some("d1".into());
        let s = PromptSchedule::new("v", vec![mined, Anchor::first_frame(rle(4, 3, &[(0, 0)]))]).unwrap();
        let text = serde_json::to_string(&ScheduleFile::from_schedule(&s)).unwrap();
        assert!(text.contains("\"source\":\"first_frame\""));
        assert!(text.contains("\"size\":[3,4]"));
        let back: ScheduleFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_schedule().unwrap(), s);
    }

    #[test]
    fn schedule_rejects_bad_input() {
        let s = PromptSchedule::<f64>::first_frame_only("v", rle(2, 2, &[(0, 0)]));
        let mut f = ScheduleFile::from_schedule(&s);
        f.format_version = 9;
        assert!(matches!(f.into_schedule(), Err(CliError::Data(_))));

        let mut f = ScheduleFile::from_schedule(&s);
        f.anchors[0].frame = 3;
        assert!(f.into_schedule().is_err());

        let text = r#"{"format_version":1,"video":"v","anchors":[{"frame":0,"score":1,"source":"first_frame","rle":{"size":[2,2],"counts":[1,1]}}]}"#;
        let f: ScheduleFile = serde_json::from_str(text).unwrap();
        assert!(matches!(f.into_schedule(), Err(CliError::Data(_))));
    }

    #[test]
    fn report_csv_layout() {
        let row = ReportRow {
            video: "a".into(),
            object: "target".into(),
            mode: None,
            j: 0.5,
            f: 1.0,
            jf: 0.75,
            jf_d: None,
            jf_r: Some(0.25),
            n_frames: 3,
            n_disappear: 0,
            n_reappear: 1,
        };
        let csv = String::from_utf8(Report::new(&[2], vec![row.clone()]).to_csv().unwrap()).unwrap();
        assert_eq!(
            csv,
            "video,object,J,F,J&F,J&F_d,J&F_r,n_frames,n_disappear,n_reappear\na,target,0.5,1,0.75,,0.25,3,0,1\n"
        );
        let moded = ReportRow {
            mode: Some("mined".into()),
            ..row
        };
        let csv = String::from_utf8(Report::new(&[2], vec![moded]).to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("video,object,mode,J,"));
        assert_eq!(Report::new(&[2, 3], vec![]).boundary_tol, "auto");
        assert_eq!(Report::new(&[2, 2], vec![]).boundary_tol, 2);
    }
}
