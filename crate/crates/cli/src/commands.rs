use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use roombem::assembly::Assembler;
use roombem::kernels::LaplacePoint;
use roombem::oracle::{mirror_plane_first_order, Arrival, Plane, ShoeboxIsm};
use roombem::response::{
    self, sweep, sweep_frequencies, to_impulse_response, BinDiagnostics, FrequencyGrid,
    ImpulseResponse, ResponseMetadata, SpectralWindow, SweepOptions, TransferFunction,
};
use roombem::scene::ValidationOptions;
use roombem::solver::{self, SolveMethod};
use roombem::{CMatrix, Complex, Impedance, QuadratureRule, Scene};
use serde_json::{json, Value};

use crate::exit::{CliError, ExitKind};
use crate::formats::{self, *};

pub type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::new(ExitKind::Usage, msg)
}

fn io<T>(r: anyhow::Result<T>) -> CliResult<T> {
    r.map_err(|e| usage(format!("{e:#}")))
}

/// Report printed by `mesh`.
pub fn mesh_report(mesh: &roombem::BoundaryMesh) -> CliResult<String> {
    let mut sizes: Vec<f64> = mesh.elements().iter().map(|e| e.diameter).collect();
    sizes.sort_by(f64::total_cmp);
    let median = mesh.median_element_size();
    let mut lines = vec![
        format!("N={}, area={:.4}", mesh.len(), mesh.total_area()),
        format!("vertices={}", mesh.vertices().len()),
        format!(
            "element size min={:.4} median={:.4} max={:.4}",
            sizes.first().copied().unwrap_or(0.0),
            median,
            sizes.last().copied().unwrap_or(0.0)
        ),
        format!("closed={}", mesh.is_closed()),
    ];
    if mesh.is_closed() {
        mesh.check_orientation()?;
        lines.push(format!(
            "orientation=inward, volume={:.4}",
            -mesh.signed_volume()
        ));
    } else {
        lines.push("orientation=not checked (open mesh)".into());
    }
    Ok(lines.join("\n"))
}

pub struct MeshRequest {
    pub shoebox: Option<[f64; 3]>,
    pub edge: Option<f64>,
    pub impedance: ImpedanceSpec,
    pub inspect: Option<PathBuf>,
    pub impedance_map: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn cmd_mesh(req: &MeshRequest) -> CliResult<()> {
    match (&req.shoebox, &req.inspect) {
        (Some(lengths), None) => {
            let edge = req.edge.ok_or_else(|| usage("--shoebox needs --edge"))?;
            let z = req.impedance.resolve()?;
            let mesh = roombem::scene::make_shoebox(*lengths, edge, [z; 6])?;
            io(write_mesh(&req.out, &mesh))?;
            println!("{}", mesh_report(&mesh)?);
            println!("wrote {}", req.out.display());
            Ok(())
        }
        (None, Some(path)) => {
            let map = match &req.impedance_map {
                Some(p) => io(fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))
                    .and_then(|t| Ok(serde_json::from_str::<ImpedanceMap>(&t)?)))?,
                None => ImpedanceMap(
                    [(
                        "default".to_string(),
                        ImpedanceSpec::Keyword(Keyword::Rigid),
                    )]
                    .into_iter()
                    .collect(),
                ),
            };
            let text = io(
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
            )?;
            let mesh = parse_mesh(&text, &map)?;
            println!("{}", mesh_report(&mesh)?);
            Ok(())
        }
        _ => Err(usage("give exactly one of --shoebox or --inspect")),
    }
}

/// Scene, effective config and its JSON echo for one run.
pub struct Run {
    pub config: RunConfig,
    pub scene_file: SceneFile,
    pub scene: Scene,
    pub echo: Value,
}

impl Run {
    pub fn prepare(config: RunConfig) -> CliResult<Self> {
        if config.scene.as_os_str().is_empty() {
            return Err(usage(
                "no scene given (use --scene or the config's `scene` field)",
            ));
        }
        let mut scene_file = io(SceneFile::load(&config.scene))?;
        if let Some(src) = config.source {
            scene_file.source = src;
        }
        if let Some(rcv) = &config.receivers {
            scene_file.receivers = rcv.clone();
        }
        let scene = scene_file.build()?;
        let echo = serde_json::to_value(&config).expect("config serializes");
        Ok(Self {
            config,
            scene_file,
            scene,
            echo,
        })
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        let dir = &self.config.outputs.directory;
        io(fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())))?;
        Ok(dir)
    }

    pub fn provenance(&self) -> Value {
        provenance(&self.echo, &self.scene)
    }

    pub fn grid(&self) -> CliResult<FrequencyGrid> {
        let g = self.config.grid.ok_or_else(|| {
            usage("no frequency grid given (use --fs/--nfft or the config's `grid`)")
        })?;
        Ok(FrequencyGrid::new(g.fs, g.nfft)?)
    }

    pub fn method(&self) -> SolveMethod {
        match self.config.solver.method {
            MethodSpec::Direct => SolveMethod::Direct,
            MethodSpec::Neumann => SolveMethod::Neumann(self.config.solver.order),
        }
    }

    pub fn quadrature(&self) -> CliResult<QuadratureRule> {
        let s = &self.config.solver;
        Ok(QuadratureRule::new(
            s.quadrature_order,
            s.near_field_threshold,
            s.near_field_levels,
            (16, 16),
        )?)
    }

    pub fn sweep_options(&self) -> CliResult<SweepOptions> {
        Ok(SweepOptions {
            method: self.method(),
            quadrature: self.quadrature()?,
            band_limit_hz: self.config.band_limit_hz,
            spectral_radius: true,
            min_singular_value: true,
            allow_low_resolution: self.config.allow_coarse_mesh,
            validation: ValidationOptions::default(),
            ..Default::default()
        })
    }

    pub fn window(&self) -> SpectralWindow {
        match self.config.window {
            WindowKind::None => SpectralWindow::None,
            WindowKind::RaisedCosine => SpectralWindow::RaisedCosine {
                rolloff: self.config.rolloff,
            },
        }
    }
}

fn write_diagnostics(
    path: &Path,
    diagnostics: &[BinDiagnostics],
    provenance: &Value,
) -> CliResult<()> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let rows: Vec<Vec<String>> = diagnostics
        .iter()
        .map(|d| {
            vec![
                d.frequency_hz.to_string(),
                opt(d.condition),
                d.near_singular.to_string(),
                opt(d.spectral_radius),
                d.spectral_radius_converged
                    .map_or(String::new(), |b| b.to_string()),
                opt(d.min_singular_value),
                d.residual_norm.to_string(),
            ]
        })
        .collect();
    io(write_rows_csv(
        path,
        &[
            "freq_hz",
            "condition",
            "near_singular",
            "spectral_radius",
            "spectral_radius_converged",
            "sigma_min",
            "residual",
        ],
        &rows,
    ))?;
    let mut meta = json!({"kind": "bin_diagnostics"});
    merge(&mut meta, provenance);
    io(write_json(&sidecar_path(path), &meta))
}

pub fn cmd_sweep(run: &Run) -> CliResult<()> {
    let options = run.sweep_options()?;
    let dir = run.out_dir()?.to_path_buf();
    let prov = run.provenance();
    if let Some(freqs) = &run.config.frequencies {
        let result = sweep_frequencies(&run.scene, freqs, &options)?;
        let path = dir.join("response.csv");
        io(write_response_csv(
            &path,
            &result.frequencies,
            &result.values,
        ))?;
        let mut meta = json!({"kind": "frequency_response", "method": run.method().to_string()});
        merge(&mut meta, &prov);
        io(write_json(&sidecar_path(&path), &meta))?;
        write_diagnostics(&dir.join("diagnostics.csv"), &result.diagnostics, &prov)?;
        print_summary(&result.diagnostics);
        println!("wrote {} and diagnostics.csv", path.display());
    } else {
        let grid = run.grid()?;
        let result = sweep(&run.scene, &grid, &options)?;
        let path = dir.join("tf.csv");
        io(write_transfer_function(&path, &result.transfer, &prov))?;
        write_diagnostics(&dir.join("diagnostics.csv"), &result.diagnostics, &prov)?;
        print_summary(&result.diagnostics);
        println!("wrote {} and diagnostics.csv", path.display());
    }
    Ok(())
}

fn print_summary(diagnostics: &[BinDiagnostics]) {
    let max_rho = diagnostics
        .iter()
        .filter_map(|d| d.spectral_radius)
        .fold(0.0, f64::max);
    let near = diagnostics.iter().filter(|d| d.near_singular).count();
    if let Some(d) = diagnostics
        .iter()
        .filter(|d| d.min_singular_value.is_some())
        .min_by(|a, b| {
            a.min_singular_value
                .unwrap()
                .total_cmp(&b.min_singular_value.unwrap())
        })
    {
        println!(
            "bins={} max spectral radius={max_rho:.4} near-singular bins={near} smallest sigma_min={:.4e} at {} Hz",
            diagnostics.len(),
            d.min_singular_value.unwrap(),
            d.frequency_hz
        );
    }
}

pub fn write_impulse_response(
    run_dir: &Path,
    stem: &str,
    ir: &ImpulseResponse,
    formats_: &[OutputFormat],
    provenance: &Value,
) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut meta = json!({
        "kind": "impulse_response",
        "fs": ir.sample_rate,
        "samples": ir.len(),
        "imaginary_ratio": ir.imaginary_ratio,
    });
    merge(&mut meta, provenance);
    for format in formats_ {
        match format {
            OutputFormat::Csv => {
                let path = run_dir.join(format!("{stem}.csv"));
                io(write_impulse_response_csv(&path, ir))?;
                io(write_json(&sidecar_path(&path), &meta))?;
                written.push(path);
            }
            OutputFormat::Wav => {
                for path in io(write_impulse_response_wav(run_dir, stem, ir))? {
                    io(write_json(&sidecar_path(&path), &meta))?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

pub fn cmd_rir(run: Option<&Run>, transfer: Option<&Path>, fallback: &RunConfig) -> CliResult<()> {
    let (tf, prov, config) = match (run, transfer) {
        (_, Some(path)) => {
            let tf = io(formats::read_transfer_function(path))?;
            let prov = json!({"run_config": serde_json::to_value(fallback).expect("config serializes"),
                              "transfer_function": path.display().to_string()});
            (tf, prov, fallback.clone())
        }
        (Some(run), None) => {
            let grid = run.grid()?;
            let result = sweep(&run.scene, &grid, &run.sweep_options()?)?;
            (result.transfer, run.provenance(), run.config.clone())
        }
        (None, None) => return Err(usage("rir needs a scene or --transfer")),
    };
    let window = match config.window {
        WindowKind::None => SpectralWindow::None,
        WindowKind::RaisedCosine => SpectralWindow::RaisedCosine {
            rolloff: config.rolloff,
        },
    };
    let ir = to_impulse_response(&tf, window)?;
    let dir = &config.outputs.directory;
    io(fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())))?;
    let written = write_impulse_response(dir, "rir", &ir, &config.outputs.formats, &prov)?;
    for r in 0..ir.samples.len() {
        let (idx, value) = ir.peak(r);
        println!(
            "receiver {r}: peak {value:.6} at sample {idx} ({:.5} s)",
            idx as f64 / ir.sample_rate
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Terms {
    /// D x: the direct path alone.
    Direct,
    /// C B x: one boundary interaction, compared with first-order images.
    First,
    /// The full solution, compared with all images up to the requested order.
    Full,
}

pub struct CompareRequest {
    pub orders: usize,
    pub terms: Terms,
    pub reflection: Option<f64>,
}

fn setup(msg: impl Into<String>) -> CliError {
    CliError::new(ExitKind::ComparisonSetup, msg)
}

enum Reference {
    Shoebox(ShoeboxIsm),
    Plate(Plane),
}

fn uniform_reflection(impedances: &[Impedance], rho_c: f64) -> CliResult<f64> {
    let first = impedances
        .first()
        .copied()
        .ok_or_else(|| setup("empty mesh"))?;
    if impedances.iter().any(|z| *z != first) {
        return Err(setup("image sources need one impedance on every wall"));
    }
    Ok(match first {
        Impedance::Rigid => 1.0,
        Impedance::Finite(z) => (z - rho_c) / (z + rho_c),
    })
}

fn bem_terms(run: &Run, grid: &FrequencyGrid, terms: Terms) -> CliResult<TransferFunction> {
    let options = run.sweep_options()?;
    if terms == Terms::Full {
        return Ok(sweep(&run.scene, grid, &options)?.transfer);
    }
    let top = options
        .band_limit_hz
        .unwrap_or(grid.nyquist())
        .min(grid.nyquist());
    let assembler = Assembler::new(&run.scene, options.quadrature.clone())?;
    let bins: Vec<usize> = (0..grid.bins())
        .filter(|&k| grid.frequency(k) <= top)
        .collect();
    let columns: Vec<roombem::Result<Vec<Complex>>> = bins
        .par_iter()
        .map(|&k| {
            let f = if k == 0 {
                grid.dc_substitute()
            } else {
                grid.frequency(k)
            };
            let s = LaplacePoint::from_frequency(f);
            let v = match terms {
                Terms::Direct => assembler.assemble_d(s)?,
                _ => assembler.assemble_c(s) * assembler.assemble_b(s)?,
            };
            Ok(v.iter().copied().collect())
        })
        .collect();
    let mut values = CMatrix::zeros(run.scene.receivers.len(), grid.bins());
    for (&k, col) in bins.iter().zip(columns) {
        for (r, v) in col?.into_iter().enumerate() {
            values[(r, k)] = v;
        }
    }
    let metadata = ResponseMetadata {
        scene_hash: response::scene_hash(&run.scene),
        method: format!("{terms:?}").to_lowercase(),
        dc_frequency_hz: Some(grid.dc_substitute()),
        band_limit_hz: options.band_limit_hz,
    };
    let mut tf = TransferFunction::new(*grid, values, metadata)?;
    tf.enforce_real_edges();
    Ok(tf)
}

fn wanted(order: usize, terms: Terms, max_order: usize) -> bool {
    match terms {
        Terms::Direct => order == 0,
        Terms::First => order == 1,
        Terms::Full => order <= max_order,
    }
}

pub fn cmd_compare_ism(run: &Run, req: &CompareRequest) -> CliResult<()> {
    let grid = run.grid()?;
    let medium = run.scene.medium;
    let rho_c = medium.characteristic_impedance();
    let reference = match &run.scene_file.geometry {
        Geometry::Shoebox { lengths, .. } => {
            let z: Vec<Impedance> = run
                .scene
                .mesh
                .elements()
                .iter()
                .map(|e| e.impedance)
                .collect();
            let r = match req.reflection {
                Some(r) => r,
                None => uniform_reflection(&z, rho_c)?,
            };
            Reference::Shoebox(
                ShoeboxIsm::new(*lengths, run.scene.source, [r; 6], medium)
                    .map_err(|e| setup(e.to_string()))?,
            )
        }
        Geometry::Plate {
            height, impedance, ..
        } => {
            if req.orders > 1 {
                return Err(setup("a single plate only has a first-order image"));
            }
            if impedance.resolve()? != Impedance::Rigid || req.reflection.is_some_and(|r| r != 1.0)
            {
                return Err(setup("plate comparison assumes a rigid plate"));
            }
            Reference::Plate(Plane::axis(2, *height))
        }
        Geometry::Mesh { .. } => {
            return Err(setup(
                "image sources need a shoebox or plate scene, not a mesh file",
            ))
        }
    };
    if req.terms == Terms::Full && matches!(reference, Reference::Plate(_)) && req.orders < 1 {
        return Err(setup("full plate comparison needs --orders 1"));
    }

    // Arrivals per receiver from the reference model.
    let mut arrivals: Vec<Vec<Arrival>> = Vec::new();
    for receiver in &run.scene.receivers {
        let list = match &reference {
            Reference::Shoebox(room) => room
                .arrivals(receiver, req.orders.max(1))
                .map_err(|e| setup(e.to_string()))?,
            Reference::Plate(plane) => {
                let direct = (receiver - run.scene.source).norm();
                let mirror = mirror_plane_first_order(
                    &run.scene.source,
                    receiver,
                    plane,
                    LaplacePoint::new(0.0, 0.0),
                    &medium,
                )
                .map_err(|e| setup(e.to_string()))?;
                vec![
                    Arrival {
                        distance: direct,
                        delay: direct / medium.sound_speed,
                        amplitude: 1.0 / direct,
                        order: 0,
                    },
                    Arrival {
                        distance: mirror.path_length,
                        delay: mirror.path_length / medium.sound_speed,
                        amplitude: 1.0 / mirror.path_length,
                        order: 1,
                    },
                ]
            }
        };
        arrivals.push(
            list.into_iter()
                .filter(|a| wanted(a.order, req.terms, req.orders))
                .collect(),
        );
    }

    let bem = bem_terms(run, &grid, req.terms)?;
    let top = run
        .config
        .band_limit_hz
        .unwrap_or(grid.nyquist())
        .min(grid.nyquist());
    let mut ism_values = CMatrix::zeros(run.scene.receivers.len(), grid.bins());
    for (r, list) in arrivals.iter().enumerate() {
        for k in 0..grid.bins() {
            let f = grid.frequency(k);
            if f <= top {
                let s = LaplacePoint::from_frequency(f);
                ism_values[(r, k)] = list
                    .iter()
                    .map(|a| (-s.value() * a.delay).exp() * a.amplitude)
                    .sum();
            }
        }
    }
    let mut ism = TransferFunction::new(
        grid,
        ism_values,
        ResponseMetadata {
            scene_hash: String::new(),
            method: "ism".into(),
            dc_frequency_hz: None,
            band_limit_hz: run.config.band_limit_hz,
        },
    )?;
    ism.enforce_real_edges();

    let dir = run.out_dir()?.to_path_buf();
    let prov = run.provenance();
    let mut rows = Vec::new();
    let mut worst_mag = 0.0f64;
    let mut worst_phase = 0.0f64;
    let mut worst_rel = 0.0f64;
    for k in 1..grid.bins() {
        let f = grid.frequency(k);
        if f > top {
            break;
        }
        for r in 0..run.scene.receivers.len() {
            let b = bem.values[(r, k)];
            let i = ism.values[(r, k)];
            let rel = (b - i).norm() / i.norm();
            let mag = (b.norm() / i.norm() - 1.0).abs();
            let phase = (b / i).arg().abs();
            worst_rel = worst_rel.max(rel);
            worst_mag = worst_mag.max(mag);
            worst_phase = worst_phase.max(phase);
            rows.push(vec![
                f.to_string(),
                r.to_string(),
                b.re.to_string(),
                b.im.to_string(),
                i.re.to_string(),
                i.im.to_string(),
                rel.to_string(),
                mag.to_string(),
                phase.to_string(),
            ]);
        }
    }
    let path = dir.join("compare_frequency.csv");
    io(write_rows_csv(
        &path,
        &[
            "freq_hz",
            "receiver",
            "bem_re",
            "bem_im",
            "ism_re",
            "ism_im",
            "rel_error",
            "mag_error",
            "phase_error",
        ],
        &rows,
    ))?;
    let mut meta = json!({"kind": "ism_comparison", "orders": req.orders, "terms": format!("{:?}", req.terms).to_lowercase(),
                          "method": "ism"});
    merge(&mut meta, &prov);
    io(write_json(&sidecar_path(&path), &meta))?;

    let window = run.window();
    let bem_ir = to_impulse_response(&bem, window)?;
    let ism_ir = to_impulse_response(&ism, window)?;
    let fs_hz = grid.sample_rate();
    let mut arrival_rows = Vec::new();
    for (r, list) in arrivals.iter().enumerate() {
        for a in list {
            let expected = (a.delay * fs_hz).round() as usize;
            if expected >= bem_ir.len() {
                continue;
            }
            let peak = |row: &[f64]| {
                (expected.saturating_sub(4)..=(expected + 4).min(row.len() - 1))
                    .map(|i| (i, row[i]))
                    .fold((expected, 0.0f64), |b, (i, v)| {
                        if v.abs() > b.1.abs() {
                            (i, v)
                        } else {
                            b
                        }
                    })
            };
            let (bi, bv) = peak(&bem_ir.samples[r]);
            let (ii, iv) = peak(&ism_ir.samples[r]);
            arrival_rows.push(vec![
                r.to_string(),
                a.order.to_string(),
                a.delay.to_string(),
                expected.to_string(),
                bi.to_string(),
                ii.to_string(),
                (bi as i64 - ii as i64).to_string(),
                bv.to_string(),
                iv.to_string(),
                (bv / iv).to_string(),
            ]);
        }
    }
    let arrivals_path = dir.join("compare_arrivals.csv");
    io(write_rows_csv(
        &arrivals_path,
        &[
            "receiver",
            "order",
            "delay_s",
            "expected_sample",
            "bem_peak_sample",
            "ism_peak_sample",
            "sample_delta",
            "bem_amplitude",
            "ism_amplitude",
            "amplitude_ratio",
        ],
        &arrival_rows,
    ))?;
    io(write_json(&sidecar_path(&arrivals_path), &meta))?;
    println!(
        "max relative error={:.4}% max magnitude error={:.4}% max phase error={worst_phase:.4} rad",
        100.0 * worst_rel,
        100.0 * worst_mag
    );
    println!("wrote {} and {}", path.display(), arrivals_path.display());
    Ok(())
}

pub struct DiagnosticsRequest {
    pub frequencies: Vec<f64>,
    pub blocks: Option<usize>,
    pub binary: bool,
}

fn dump_matrix(dir: &Path, name: &str, m: &CMatrix, header: &Value, binary: bool) -> CliResult<()> {
    let mut meta = json!({"rows": m.nrows(), "cols": m.ncols(), "layout": "row-major"});
    merge(&mut meta, header);
    let path = dir.join(format!("{name}.csv"));
    io(write_matrix_csv(&path, m))?;
    io(write_json(&sidecar_path(&path), &meta))?;
    if binary {
        let path = dir.join(format!("{name}.bin"));
        io(write_matrix_binary(&path, m))?;
        io(write_json(&sidecar_path(&path), &meta))?;
    }
    Ok(())
}

fn check_line(label: &str, ok: bool, detail: String) -> bool {
    println!("{} {label} ({detail})", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn cmd_diagnostics(run: &Run, req: &DiagnosticsRequest) -> CliResult<()> {
    if req.frequencies.is_empty() {
        return Err(usage("diagnostics needs at least one frequency (--freqs)"));
    }
    let assembler = Assembler::new(&run.scene, run.quadrature()?)?;
    let n = assembler.n();
    let blocks = req
        .blocks
        .unwrap_or_else(|| solver::default_diagnostic_order(n));
    let root = run.out_dir()?.to_path_buf();
    let prov = run.provenance();
    let mut all_ok = true;
    for &f in &req.frequencies {
        let s = LaplacePoint::from_frequency(f);
        let ops = assembler
            .assemble(s)
            .map_err(|e| CliError::new(ExitKind::Solve, e.to_string()))?;
        let dir = root.join(format!("diag_{f}Hz"));
        io(fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())))?;
        let mut header = json!({
            "s": {"sigma": s.sigma, "omega": s.omega},
            "N": ops.n(),
            "M": ops.m(),
            "K": blocks,
            "method": run.method().to_string(),
        });
        merge(&mut header, &prov);

        let markov = solver::markov_parameters(&ops, blocks)?;
        let (obs, obs_rank) = solver::observability_matrix(&ops, blocks)?;
        let (ctl, ctl_rank) = solver::controllability_matrix(&ops, blocks)?;
        let markov_m = CMatrix::from_fn(blocks, ops.m(), |k, r| markov[k][r]);
        dump_matrix(&dir, "markov", &markov_m, &header, req.binary)?;
        dump_matrix(&dir, "observability", &obs, &header, req.binary)?;
        dump_matrix(&dir, "controllability", &ctl, &header, req.binary)?;
        dump_matrix(&dir, "c", &ops.c, &header, req.binary)?;
        dump_matrix(
            &dir,
            "b",
            &CMatrix::from_column_slice(ops.n(), 1, ops.b.as_slice()),
            &header,
            req.binary,
        )?;
        io(write_values_csv(
            &dir.join("observability_sv.csv"),
            "singular_value",
            &obs_rank.singular_values,
        ))?;
        io(write_values_csv(
            &dir.join("controllability_sv.csv"),
            "singular_value",
            &ctl_rank.singular_values,
        ))?;
        io(write_json(&dir.join("summary.json"), &{
            let mut v = json!({
                "observability_rank": obs_rank.rank,
                "controllability_rank": ctl_rank.rank,
            });
            merge(&mut v, &header);
            v
        }))?;

        let (rho, converged) = solver::spectral_radius(&ops.a, 1e-6, 500);
        let solution = solver::solve(&ops, Complex::new(1.0, 0.0), run.method());
        if let Ok(sol) = &solution {
            let q = CMatrix::from_column_slice(sol.q.len(), 1, sol.q.as_slice());
            let p = CMatrix::from_column_slice(sol.p.len(), 1, sol.p.as_slice());
            dump_matrix(&dir, "q", &q, &header, req.binary)?;
            dump_matrix(&dir, "p", &p, &header, req.binary)?;
        }

        println!(
            "{f} Hz: N={} M={} K={blocks} spectral radius={rho:.4} (converged: {converged})",
            ops.n(),
            ops.m()
        );
        let cb = &ops.c * &ops.b;
        all_ok &= check_line("Markov_0 == C B", markov[0] == cb, "bitwise".into());
        let m = ops.m();
        let mut worst_obs = 0.0f64;
        let mut worst_ctl = 0.0f64;
        for (k, mk) in markov.iter().enumerate() {
            let scale = mk.norm().max(f64::MIN_POSITIVE);
            worst_obs = worst_obs.max((obs.rows(k * m, m) * &ops.b - mk).norm() / scale);
            worst_ctl = worst_ctl.max((&ops.c * ctl.column(k) - mk).norm() / scale);
        }
        all_ok &= check_line(
            "observability block k * B == Markov_k",
            worst_obs <= 1e-13,
            format!("max rel {worst_obs:.1e}"),
        );
        all_ok &= check_line(
            "C * controllability column k == Markov_k",
            worst_ctl <= 1e-13,
            format!("max rel {worst_ctl:.1e}"),
        );
        println!(
            "observability rank {} of {}",
            obs_rank.rank,
            obs.nrows().min(obs.ncols())
        );
        println!(
            "controllability rank {} of {}",
            ctl_rank.rank,
            ctl.nrows().min(ctl.ncols())
        );
        if let Err(e) = solution {
            println!("solve skipped: {e}");
        }
    }
    if !all_ok {
        return Err(CliError::new(
            ExitKind::Solve,
            "state-space identity check failed",
        ));
    }
    Ok(())
}
