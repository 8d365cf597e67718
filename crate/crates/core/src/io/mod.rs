//! File formats and run bookkeeping.
//!
//! Meshes are OFF (closed triangle meshes) or a small JSON format for
//! planar curves; both print coordinates with 17 significant digits so a
//! write–read round trip reproduces every bit. Sweep outputs are a CSV with
//! one row per sample and a JSON document holding the config, the records,
//! the fits and the verdicts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{SampleStatus, SweepConfig, SweepResult};
use crate::generators::GeneratorConfig;
use crate::mesh::{AmbientDim, BoundaryMesh, Cells, Vec3};

/// Environment variable overriding config seeds; an explicit flag wins.
pub const SEED_ENV: &str = "ISOPERIM_SEED";
pub const SAMPLES_CSV: &str = "samples.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// 17 significant digits: enough to reproduce any `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        // keep the sign of zero; non-finite values are not valid JSON or OFF
        return if x.is_nan() { "nan".into() } else { format!("{x:?}") };
    }
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads an OFF file. Polygonal faces are fan-triangulated.
pub fn parse_off(text: &str) -> Result<BoundaryMesh> {
    // (line number, tokens) of non-empty, non-comment lines
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l))
    });
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file; expected OFF header"))?;
    let mut tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&"OFF") {
        return Err(parse_err(hline, format!("expected header \"OFF\", found {:?}", tokens.first().unwrap_or(&""))));
    }
    tokens.remove(0);
    let (cline, counts) = if tokens.is_empty() {
        lines.next().ok_or_else(|| parse_err(hline + 1, "missing vertex/face counts"))?
    } else {
        (hline, header.trim_start_matches("OFF").trim())
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(cline, format!("invalid count {t:?}"))))
        .collect::<Result<_>>()?;
    if nums.len() < 2 {
        return Err(parse_err(cline, "expected vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(cline, format!("file ends before vertex {k}")))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(ln, format!("vertex {k}: invalid coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(ln, format!("vertex {k}: expected 3 finite coordinates")));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut tris = Vec::with_capacity(nf);
    for k in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(cline, format!("file ends before face {k}")))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("face {k}: invalid index {t:?}"))))
            .collect::<Result<_>>()?;
        let Some((&m, rest)) = idx.split_first() else {
            return Err(parse_err(ln, format!("face {k}: empty line")));
        };
        if m < 3 || rest.len() < m {
            return Err(parse_err(ln, format!("face {k}: expected {m} >= 3 vertex indices")));
        }
        if let Some(v) = rest[..m].iter().find(|v| **v >= nv) {
            return Err(parse_err(ln, format!("face {k}: vertex index {v} out of range (mesh has {nv} vertices)")));
        }
        for j in 1..m - 1 {
            tris.push([rest[0], rest[j], rest[j + 1]]);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected data after the last face"));
    }
    Ok(BoundaryMesh::triangles(vertices, tris))
}

pub fn write_off(mesh: &BoundaryMesh) -> Result<String> {
    let Cells::Triangles(tris) = mesh.cells() else {
        return Err(Error::invalid("OFF holds triangle meshes; write planar curves as JSON"));
    };
    let mut out = String::new();
    let _ = writeln!(out, "OFF\n{} {} 0", mesh.vertices().len(), tris.len());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z));
    }
    for t in tris {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    Ok(out)
}

/// Planar curve file: `{"vertices": [[x, y], ...], "segments": [[i, j], ...]}`,
/// or `{"loops": [[[x, y], ...], ...]}` with implicit closing segments.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    #[serde(default)]
    vertices: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    segments: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    loops: Option<Vec<Vec<[f64; 2]>>>,
}

pub fn parse_curve_json(text: &str) -> Result<BoundaryMesh> {
    let f: CurveFile = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    match (f.vertices, f.segments, f.loops) {
        (Some(v), Some(s), None) => {
            if let Some((k, seg)) = s.iter().enumerate().find(|(_, s)| s.iter().any(|i| *i >= v.len())) {
                return Err(parse_err(1, format!("segment {k} {seg:?} references a missing vertex")));
            }
            Ok(BoundaryMesh::curve(v.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect(), s))
        }
        (None, None, Some(loops)) => Ok(BoundaryMesh::from_loops(&loops)),
        _ => Err(parse_err(1, "expected either \"vertices\" and \"segments\", or \"loops\"")),
    }
}

pub fn write_curve_json(mesh: &BoundaryMesh) -> Result<String> {
    let Cells::Segments(segs) = mesh.cells() else {
        return Err(Error::invalid("curve JSON holds planar curves; write triangle meshes as OFF"));
    };
    let verts: Vec<String> =
        mesh.vertices().iter().map(|v| format!("[{}, {}]", fmt_f64(v.x), fmt_f64(v.y))).collect();
    let segs: Vec<String> = segs.iter().map(|s| format!("[{}, {}]", s[0], s[1])).collect();
    Ok(format!("{{\n  \"vertices\": [{}],\n  \"segments\": [{}]\n}}\n", verts.join(", "), segs.join(", ")))
}

/// Reads `.off` or `.json` by extension.
pub fn read_mesh(path: &Path) -> Result<BoundaryMesh> {
    let text = fs::read_to_string(path)?;
    match extension(path).as_str() {
        "off" => parse_off(&text),
        "json" => parse_curve_json(&text),
        other => Err(Error::invalid(format!("unknown mesh extension {other:?} (expected .off or .json)"))),
    }
}

pub fn write_mesh(path: &Path, mesh: &BoundaryMesh) -> Result<()> {
    let text = match (mesh.dim(), extension(path).as_str()) {
        (AmbientDim::Three, "off") => write_off(mesh)?,
        (AmbientDim::Two, "json") => write_curve_json(mesh)?,
        (AmbientDim::Three, _) => return Err(Error::invalid("triangle meshes are written as .off")),
        (AmbientDim::Two, _) => return Err(Error::invalid("planar curves are written as .json")),
    };
    fs::write(path, text)?;
    Ok(())
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn json_error(e: serde_json::Error) -> Error {
    parse_err(e.line(), e.to_string())
}

pub fn read_generator_config(path: &Path) -> Result<GeneratorConfig> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(json_error)
}

pub fn read_sweep_config(path: &Path) -> Result<(SweepConfig, String)> {
    let text = fs::read_to_string(path)?;
    let cfg = serde_json::from_str(&text).map_err(json_error)?;
    Ok((cfg, text))
}

/// Seed resolution: explicit flag, then `ISOPERIM_SEED`, then the config.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(config),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Where a run came from. `started` honours `SOURCE_DATE_EPOCH`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: Option<usize>,
    /// Unix seconds.
    pub started: u64,
    pub finished: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

pub fn now_unix() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config_bytes: &[u8], seed: Option<u64>, threads: Option<usize>) -> Self {
        RunManifest {
            command: command.into(),
            config_hash: sha256_hex(config_bytes),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            threads,
            started: now_unix(),
            finished: 0,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// The fields that determine the output bytes; timestamps excluded.
    pub fn identity(&self) -> ManifestIdentity {
        ManifestIdentity {
            command: self.command.clone(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            tool_version: self.tool_version.clone(),
            threads: self.threads,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestIdentity {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: Option<usize>,
}

/// Stored sweep: enough to recompute every verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub manifest: ManifestIdentity,
    pub config: SweepConfig,
    pub result: SweepResult,
}

/// CSV with one row per sample; columns follow the config's declaration order.
pub fn sweep_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index".to_string(), "status".to_string()];
    header.extend(result.columns.iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for s in &result.samples {
        let mut row = vec![s.index.to_string(), status_name(s.status).to_string()];
        row.extend(result.columns.iter().map(|c| s.values.get(&c.name).map(|v| fmt_f64(*v)).unwrap_or_default()));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn status_name(s: SampleStatus) -> &'static str {
    match s {
        SampleStatus::Ok => "ok",
        SampleStatus::Discarded => "discarded",
        SampleStatus::Failed => "failed",
    }
}

/// Writes `samples.csv`, `results.json` and `manifest.json` into `dir`.
/// The first two depend only on the manifest identity, not on the clock.
pub fn write_sweep(dir: &Path, config: &SweepConfig, result: &SweepResult, manifest: &mut RunManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(SAMPLES_CSV);
    let json_path = dir.join(RESULTS_JSON);
    fs::write(&csv_path, sweep_csv(result)?)?;
    let doc = SweepDocument { manifest: manifest.identity(), config: config.clone(), result: result.clone() };
    fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    manifest.outputs = vec![csv_path, json_path];
    manifest.finished = now_unix().max(manifest.started);
    fs::write(dir.join(MANIFEST_JSON), serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(())
}

pub fn read_sweep(dir: &Path) -> Result<SweepDocument> {
    let path = if dir.is_dir() { dir.join(RESULTS_JSON) } else { dir.to_path_buf() };
    serde_json::from_str(&fs::read_to_string(&path)?).map_err(json_error)
}

/// Reads a `samples.csv` back as name → column values (empty cells skipped).
pub fn read_sweep_csv(text: &str) -> Result<HashMap<String, Vec<f64>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut out: HashMap<String, Vec<f64>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for (h, cell) in header.iter().zip(rec.iter()) {
            if cell.is_empty() || h == "status" {
                continue;
            }
            let v = cell
                .parse::<f64>()
                .map_err(|_| parse_err(row + 2, format!("column {h}: invalid number {cell:?}")))?;
            out.get_mut(h).expect("header column").push(v);
        }
    }
    Ok(out)
}
