//! File formats: mesh text files, impedance maps, scene and run configs, and the
//! CSV/JSON/WAV/binary outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use roombem::response::{FrequencyGrid, ImpulseResponse, ResponseMetadata, TransferFunction};
use roombem::scene::{make_plate, make_shoebox, TriangleSpec, SHOEBOX_FACES};
use roombem::{BoundaryMesh, CMatrix, Complex, Impedance, Medium, Point3, Scene};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exit::{CliError, ExitKind};

/// `v x y z` / `f i j k group` text mesh, 1-based indices, `#` comments.
pub fn parse_mesh(text: &str, impedances: &ImpedanceMap) -> Result<BoundaryMesh, CliError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let bad =
            |msg: &str| CliError::new(ExitKind::Geometry, format!("line {}: {msg}", lineno + 1));
        match tokens[0] {
            "v" => {
                if tokens.len() != 4 {
                    return Err(bad("vertex needs three coordinates"));
                }
                let c: Vec<f64> = tokens[1..]
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("invalid vertex coordinate"))?;
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            "f" => {
                if tokens.len() != 5 {
                    return Err(bad("faces must be triangles: `f i j k group`"));
                }
                let mut idx = [0usize; 3];
                for (slot, t) in idx.iter_mut().zip(&tokens[1..4]) {
                    let i: usize = t.parse().map_err(|_| bad("invalid vertex index"))?;
                    if i == 0 {
                        return Err(bad("vertex indices are 1-based"));
                    }
                    *slot = i - 1;
                }
                let group = tokens[4].to_string();
                let impedance = impedances.lookup(&group).map_err(|e| bad(&e.to_string()))?;
                faces.push(TriangleSpec {
                    vertices: idx,
                    impedance,
                    group,
                });
            }
            other => return Err(bad(&format!("unknown record `{other}`"))),
        }
    }
    Ok(BoundaryMesh::new(vertices, faces)?)
}

pub fn write_mesh(path: &Path, mesh: &BoundaryMesh) -> anyhow::Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# {} vertices, {} triangles\n",
        mesh.vertices().len(),
        mesh.len()
    ));
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for e in mesh.elements() {
        let [a, b, c] = e.vertices;
        out.push_str(&format!("f {} {} {} {}\n", a + 1, b + 1, c + 1, e.group));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Impedance value in JSON: a number in Pa·s/m or the string "rigid".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImpedanceSpec {
    Value(f64),
    Keyword(Keyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Rigid,
}

impl ImpedanceSpec {
    pub fn resolve(&self) -> roombem::Result<Impedance> {
        match self {
            ImpedanceSpec::Value(z) => Impedance::finite(*z),
            ImpedanceSpec::Keyword(Keyword::Rigid) => Ok(Impedance::Rigid),
        }
    }
}

/// Group name to impedance; groups missing from the map are an error unless a
/// `default` entry exists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImpedanceMap(pub BTreeMap<String, ImpedanceSpec>);

impl ImpedanceMap {
    pub fn lookup(&self, group: &str) -> anyhow::Result<Impedance> {
        let spec = self
            .0
            .get(group)
            .or_else(|| self.0.get("default"))
            .with_context(|| format!("no impedance given for group `{group}`"))?;
        Ok(spec.resolve()?)
    }
}

/// Impedance for all six shoebox walls, or per wall by face name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WallImpedances {
    Uniform(ImpedanceSpec),
    PerWall(BTreeMap<String, ImpedanceSpec>),
}

impl WallImpedances {
    pub fn resolve(&self) -> anyhow::Result<[Impedance; 6]> {
        let mut out = [Impedance::Rigid; 6];
        for (slot, name) in out.iter_mut().zip(SHOEBOX_FACES) {
            *slot = match self {
                WallImpedances::Uniform(spec) => spec.resolve()?,
                WallImpedances::PerWall(map) => map
                    .get(name)
                    .with_context(|| format!("no impedance for wall `{name}`"))?
                    .resolve()?,
            };
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Shoebox {
        lengths: [f64; 3],
        edge: f64,
        impedance: WallImpedances,
    },
    Plate {
        size: [f64; 2],
        #[serde(default)]
        height: f64,
        edge: f64,
        impedance: ImpedanceSpec,
    },
    Mesh {
        path: PathBuf,
        impedances: ImpedanceMap,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub c: f64,
    pub rho: f64,
}

impl Default for MediumSpec {
    fn default() -> Self {
        let m = Medium::default();
        Self {
            c: m.sound_speed,
            rho: m.density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default)]
    pub medium: MediumSpec,
    pub geometry: Geometry,
    pub source: [f64; 3],
    pub receivers: Vec<[f64; 3]>,
}

pub fn point(p: [f64; 3]) -> Point3 {
    Point3::new(p[0], p[1], p[2])
}

impl SceneFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading scene {}", path.display()))?;
        let mut scene: SceneFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing scene {}", path.display()))?;
        if let Geometry::Mesh {
            path: mesh_path, ..
        } = &mut scene.geometry
        {
            if mesh_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh_path = dir.join(&*mesh_path);
                }
            }
        }
        Ok(scene)
    }

    pub fn medium(&self) -> roombem::Result<Medium> {
        Medium::new(self.medium.c, self.medium.rho)
    }

    pub fn build_mesh(&self) -> Result<BoundaryMesh, CliError> {
        let config = |e: anyhow::Error| CliError::new(ExitKind::Usage, format!("{e:#}"));
        match &self.geometry {
            Geometry::Shoebox {
                lengths,
                edge,
                impedance,
            } => Ok(make_shoebox(
                *lengths,
                *edge,
                impedance.resolve().map_err(config)?,
            )?),
            Geometry::Plate {
                size,
                height,
                edge,
                impedance,
            } => Ok(make_plate(*size, *height, *edge, impedance.resolve()?)?),
            Geometry::Mesh { path, impedances } => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::new(ExitKind::Usage, format!("reading {}: {e}", path.display()))
                })?;
                parse_mesh(&text, impedances)
            }
        }
    }

    pub fn build(&self) -> Result<Scene, CliError> {
        let mesh = self.build_mesh()?;
        Ok(Scene::new(
            mesh,
            self.medium()?,
            point(self.source),
            self.receivers.iter().copied().map(point).collect(),
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub fs: f64,
    pub nfft: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Direct,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub method: MethodSpec,
    #[serde(rename = "K")]
    pub order: usize,
    pub quadrature_order: usize,
    pub near_field_threshold: f64,
    pub near_field_levels: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            method: MethodSpec::Direct,
            order: roombem::solver::DEFAULT_NEUMANN_ORDER,
            quadrature_order: 6,
            near_field_threshold: 2.0,
            near_field_levels: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Wav,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    None,
    #[default]
    RaisedCosine,
}

fn default_rolloff() -> f64 {
    0.2
}

/// Everything a run depends on. Echoed into every output sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scene: PathBuf,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub band_limit_hz: Option<f64>,
    /// Explicit frequency list; sweeps use it instead of the grid.
    #[serde(default)]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default)]
    pub allow_coarse_mesh: bool,
    /// Overrides the scene's source.
    #[serde(default)]
    pub source: Option<[f64; 3]>,
    /// Overrides the scene's receivers.
    #[serde(default)]
    pub receivers: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub window: WindowKind,
    #[serde(default = "default_rolloff")]
    pub rolloff: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: PathBuf::new(),
            grid: None,
            solver: SolverSpec::default(),
            outputs: OutputSpec::default(),
            band_limit_hz: None,
            frequencies: None,
            allow_coarse_mesh: false,
            source: None,
            receivers: None,
            window: WindowKind::default(),
            rolloff: default_rolloff(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if !cfg.scene.as_os_str().is_empty() && cfg.scene.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.scene = dir.join(&cfg.scene);
            }
        }
        Ok(cfg)
    }
}

pub fn parse_point(text: &str) -> anyhow::Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("invalid point `{text}`"))?;
    match parts[..] {
        [x, y, z] => Ok([x, y, z]),
        _ => bail!("point `{text}` needs three comma-separated coordinates"),
    }
}

pub fn parse_points(text: &str) -> anyhow::Result<Vec<[f64; 3]>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(parse_point)
        .collect()
}

/// Provenance block stored in every sidecar.
pub fn provenance(config: &Value, scene: &Scene) -> Value {
    json!({
        "run_config": config,
        "mesh_hash": roombem::response::mesh_hash(&scene.mesh),
        "scene_hash": roombem::response::scene_hash(scene),
        "elements": scene.mesh.len(),
    })
}

pub fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Columns `freq_hz, r0_re, r0_im, r1_re, ...`.
pub fn write_response_csv(
    path: &Path,
    frequencies: &[f64],
    values: &CMatrix,
) -> anyhow::Result<()> {
    let mut out = String::from("freq_hz");
    for r in 0..values.nrows() {
        out.push_str(&format!(",r{r}_re,r{r}_im"));
    }
    out.push('\n');
    for (k, f) in frequencies.iter().enumerate() {
        out.push_str(&f.to_string());
        for r in 0..values.nrows() {
            let v = values[(r, k)];
            out.push_str(&format!(",{},{}", v.re, v.im));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_transfer_function(
    path: &Path,
    tf: &TransferFunction,
    provenance: &Value,
) -> anyhow::Result<()> {
    write_response_csv(path, &tf.grid.frequencies(), &tf.values)?;
    let mut meta = json!({
        "kind": "transfer_function",
        "grid": {"fs": tf.grid.sample_rate(), "nfft": tf.grid.nfft()},
        "method": tf.metadata.method,
        "dc_frequency_hz": tf.metadata.dc_frequency_hz,
        "band_limit_hz": tf.metadata.band_limit_hz,
        "receivers": tf.receivers(),
    });
    merge(&mut meta, provenance);
    write_json(&sidecar_path(path), &meta)
}

/// Reads a transfer function CSV and its sidecar.
pub fn read_transfer_function(path: &Path) -> anyhow::Result<TransferFunction> {
    let meta: Value = serde_json::from_str(
        &fs::read_to_string(sidecar_path(path))
            .with_context(|| format!("reading sidecar of {}", path.display()))?,
    )?;
    let fs_hz = meta["grid"]["fs"]
        .as_f64()
        .context("sidecar lacks grid.fs")?;
    let nfft = meta["grid"]["nfft"]
        .as_u64()
        .context("sidecar lacks grid.nfft")? as usize;
    let grid = FrequencyGrid::new(fs_hz, nfft)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = text.lines().filter(|l| !l.trim().is_empty());
    let header = rows.next().context("empty transfer function file")?;
    let receivers = (header.split(',').count() - 1) / 2;
    let mut values = CMatrix::zeros(receivers, grid.bins());
    let mut count = 0;
    for (k, line) in rows.enumerate() {
        if k >= grid.bins() {
            bail!("transfer function has more rows than the grid has bins");
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("row {}", k + 2))?;
        if cols.len() != 1 + 2 * receivers {
            bail!(
                "row {} has {} columns, expected {}",
                k + 2,
                cols.len(),
                1 + 2 * receivers
            );
        }
        for r in 0..receivers {
            values[(r, k)] = Complex::new(cols[1 + 2 * r], cols[2 + 2 * r]);
        }
        count += 1;
    }
    if count != grid.bins() {
        bail!(
            "transfer function has {count} rows, grid needs {}",
            grid.bins()
        );
    }
    let metadata = ResponseMetadata {
        scene_hash: meta["scene_hash"].as_str().unwrap_or_default().to_string(),
        method: meta["method"].as_str().unwrap_or_default().to_string(),
        dc_frequency_hz: meta["dc_frequency_hz"].as_f64(),
        band_limit_hz: meta["band_limit_hz"].as_f64(),
    };
    Ok(TransferFunction::new(grid, values, metadata)?)
}

/// `sample_index, r0, r1, ...`.
pub fn write_impulse_response_csv(path: &Path, ir: &ImpulseResponse) -> anyhow::Result<()> {
    let mut out = String::from("sample_index");
    for r in 0..ir.samples.len() {
        out.push_str(&format!(",r{r}"));
    }
    out.push('\n');
    for i in 0..ir.len() {
        out.push_str(&i.to_string());
        for row in &ir.samples {
            out.push_str(&format!(",{}", row[i]));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// One 32-bit float WAV per receiver.
pub fn write_impulse_response_wav(
    dir: &Path,
    stem: &str,
    ir: &ImpulseResponse,
) -> anyhow::Result<Vec<PathBuf>> {
    let rate = ir.sample_rate.round();
    if (rate - ir.sample_rate).abs() > 0.0 || rate < 1.0 || rate > u32::MAX as f64 {
        bail!("WAV needs an integer sample rate, got {}", ir.sample_rate);
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut paths = Vec::new();
    for (r, row) in ir.samples.iter().enumerate() {
        let path = dir.join(format!("{stem}_r{r}.wav"));
        let mut writer = hound::WavWriter::create(&path, spec)
            .with_context(|| format!("creating {}", path.display()))?;
        for &v in row {
            writer.write_sample(v as f32)?;
        }
        writer.finalize()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Row-major complex matrix as CSV, `re,im` pairs per column.
pub fn write_matrix_csv(path: &Path, m: &CMatrix) -> anyhow::Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Row-major little-endian interleaved re/im doubles.
pub fn write_matrix_binary(path: &Path, m: &CMatrix) -> anyhow::Result<()> {
    let mut bytes = Vec::with_capacity(16 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            bytes.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            bytes.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_values_csv(path: &Path, header: &str, values: &[f64]) -> anyhow::Result<()> {
    let mut out = format!("{header}\n");
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    write_text(path, &out)
}

pub fn write_rows_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Shallow merge of `extra`'s top-level keys into `target`.
pub fn merge(target: &mut Value, extra: &Value) {
    if let (Some(t), Some(e)) = (target.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            t.insert(k.clone(), v.clone());
        }
    }
}
