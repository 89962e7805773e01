//! Frequency sweeps on the `s = jω` axis and impulse-response synthesis.

use rayon::prelude::*;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::assembly::{Assembler, DEFAULT_CACHE_BYTES};
use crate::error::{Error, Result};
use crate::kernels::LaplacePoint;
use crate::quadrature::QuadratureRule;
use crate::scene::{
    validate_scene, BoundaryMesh, Impedance, Scene, SceneDiagnostics, ValidationOptions,
};
use crate::solver::{self, SolveMethod};
use crate::{CMatrix, Complex};

/// Imaginary-to-real energy ratio above which an inverse DFT is rejected.
pub const REALNESS_TOLERANCE: f64 = 1e-8;

/// Operators larger than this are swept one bin at a time to bound memory.
const PARALLEL_BIN_LIMIT: usize = 1500;

/// Linear grid `f_k = k fs / nfft`, `k = 0..=nfft/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    sample_rate: f64,
    nfft: usize,
}

impl FrequencyGrid {
    pub fn new(sample_rate: f64, nfft: usize) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if nfft == 0 || !nfft.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "nfft must be even and positive, got {nfft}"
            )));
        }
        Ok(Self { sample_rate, nfft })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    /// Number of non-negative frequency bins, `nfft/2 + 1`.
    pub fn bins(&self) -> usize {
        self.nfft / 2 + 1
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate / self.nfft as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.bins()).map(|k| self.frequency(k)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    /// Frequency substituted for the DC bin.
    pub fn dc_substitute(&self) -> f64 {
        self.sample_rate / (10.0 * self.nfft as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResponseMetadata {
    pub scene_hash: String,
    pub method: String,
    /// Frequency actually solved for bin 0, if it was substituted.
    pub dc_frequency_hz: Option<f64>,
    /// Bins above this were left at zero.
    pub band_limit_hz: Option<f64>,
}

/// Receiver responses on a [`FrequencyGrid`], `M x (nfft/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub grid: FrequencyGrid,
    pub values: CMatrix,
    pub metadata: ResponseMetadata,
}

impl TransferFunction {
    pub fn new(grid: FrequencyGrid, values: CMatrix, metadata: ResponseMetadata) -> Result<Self> {
        if values.ncols() != grid.bins() {
            return Err(Error::Dimension(format!(
                "transfer function has {} bins, grid needs {}",
                values.ncols(),
                grid.bins()
            )));
        }
        Ok(Self {
            grid,
            values,
            metadata,
        })
    }

    pub fn receivers(&self) -> usize {
        self.values.nrows()
    }

    /// Makes bin 0 and the Nyquist bin real. DC keeps its real part; Nyquist keeps its
    /// magnitude with the sign of its real part.
    pub fn enforce_real_edges(&mut self) {
        let last = self.grid.bins() - 1;
        for r in 0..self.values.nrows() {
            let dc = self.values[(r, 0)];
            self.values[(r, 0)] = Complex::new(dc.re, 0.0);
            let ny = self.values[(r, last)];
            let sign = if ny.re < 0.0 { -1.0 } else { 1.0 };
            self.values[(r, last)] = Complex::new(sign * ny.norm(), 0.0);
        }
    }
}

/// Real time-domain responses, one row of `nfft` samples per receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub sample_rate: f64,
    pub samples: Vec<Vec<f64>>,
    /// Largest imaginary-to-real energy ratio seen in the inverse DFT.
    pub imaginary_ratio: f64,
}

impl ImpulseResponse {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index and value of the largest-magnitude sample of a receiver.
    pub fn peak(&self, receiver: usize) -> (usize, f64) {
        self.samples[receiver]
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, 0.0),
                |best, (i, v)| if v.abs() > best.1.abs() { (i, v) } else { best },
            )
    }

    /// Energy in consecutive windows of `window` samples, per receiver.
    pub fn window_energies(&self, window: usize) -> Vec<Vec<f64>> {
        assert!(window > 0, "window length must be positive");
        self.samples
            .iter()
            .map(|row| {
                row.chunks(window)
                    .map(|c| c.iter().map(|v| v * v).sum())
                    .collect()
            })
            .collect()
    }
}

/// Spectral taper applied before the inverse DFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralWindow {
    None,
    /// Raised-cosine roll-off over the top `rolloff` fraction of the band.
    RaisedCosine {
        rolloff: f64,
    },
}

impl Default for SpectralWindow {
    fn default() -> Self {
        SpectralWindow::RaisedCosine { rolloff: 0.2 }
    }
}

impl SpectralWindow {
    /// Weight at `f` for a band ending at `top`.
    pub fn weight(&self, f: f64, top: f64) -> f64 {
        if f > top {
            return 0.0;
        }
        match *self {
            SpectralWindow::None => 1.0,
            SpectralWindow::RaisedCosine { rolloff } => {
                let start = top * (1.0 - rolloff);
                if f <= start || rolloff <= 0.0 {
                    1.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (f - start) / (top - start)).cos())
                }
            }
        }
    }
}

/// Hermitian inverse DFT of each receiver row. Output is scaled by the mean weight
/// of the applied window, so an integer-sample pure delay `e^{-jωτ}/R` peaks at `1/R`.
pub fn to_impulse_response(
    tf: &TransferFunction,
    window: SpectralWindow,
) -> Result<ImpulseResponse> {
    let grid = tf.grid;
    let nfft = grid.nfft();
    let bins = grid.bins();
    let top = tf
        .metadata
        .band_limit_hz
        .unwrap_or(grid.nyquist())
        .min(grid.nyquist());
    let weights: Vec<f64> = (0..bins)
        .map(|k| window.weight(grid.frequency(k), top))
        .collect();
    let gain = (weights[0] + weights[bins - 1] + 2.0 * weights[1..bins - 1].iter().sum::<f64>())
        / nfft as f64;
    if !(gain > 0.0) {
        return Err(Error::InvalidParameter(
            "spectral window removes every bin".into(),
        ));
    }
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(nfft);
    let mut samples = Vec::with_capacity(tf.receivers());
    let mut worst = 0.0f64;
    for r in 0..tf.receivers() {
        let mut spectrum = vec![Complex::new(0.0, 0.0); nfft];
        for k in 0..bins {
            spectrum[k] = tf.values[(r, k)] * weights[k];
        }
        for k in 1..nfft / 2 {
            spectrum[nfft - k] = spectrum[k].conj();
        }
        ifft.process(&mut spectrum);
        let scale = 1.0 / (nfft as f64 * gain);
        let real: f64 = spectrum.iter().map(|v| v.re * v.re).sum();
        let imag: f64 = spectrum.iter().map(|v| v.im * v.im).sum();
        let ratio = if real > 0.0 {
            imag / real
        } else if imag > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > REALNESS_TOLERANCE {
            return Err(Error::NotReal { ratio });
        }
        worst = worst.max(ratio);
        let row: Vec<f64> = spectrum.iter().map(|v| v.re * scale).collect();
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "impulse response contains non-finite samples".into(),
            ));
        }
        samples.push(row);
    }
    Ok(ImpulseResponse {
        sample_rate: grid.sample_rate(),
        samples,
        imaginary_ratio: worst,
    })
}

/// Energy per receiver, restricted to `band = (lo, hi)` in Hz when given. Computed
/// from the spectrum, so the full-band value equals the time-domain sum of squares.
pub fn band_energy(ir: &ImpulseResponse, band: Option<(f64, f64)>) -> Vec<f64> {
    let n = ir.len();
    if n == 0 {
        return vec![0.0; ir.samples.len()];
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    ir.samples
        .iter()
        .map(|row| {
            let mut spectrum: Vec<Complex> = row.iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft.process(&mut spectrum);
            let total: f64 = spectrum
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    band.is_none_or(|(lo, hi)| {
                        let bin = (*k).min(n - k);
                        let f = bin as f64 * ir.sample_rate / n as f64;
                        f >= lo && f <= hi
                    })
                })
                .map(|(_, v)| v.norm_sqr())
                .sum();
            total / n as f64
        })
        .collect()
}

/// Per-frequency solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BinDiagnostics {
    pub frequency_hz: f64,
    pub condition: Option<f64>,
    pub near_singular: bool,
    pub spectral_radius: Option<f64>,
    pub spectral_radius_converged: Option<bool>,
    pub min_singular_value: Option<f64>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub method: SolveMethod,
    pub quadrature: QuadratureRule,
    /// Bins above this frequency are not solved and stay zero.
    pub band_limit_hz: Option<f64>,
    pub spectral_radius: bool,
    pub min_singular_value: bool,
    pub cache_bytes: usize,
    /// Proceed even if the mesh is coarser than the validation threshold.
    pub allow_low_resolution: bool,
    pub validation: ValidationOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            quadrature: QuadratureRule::default(),
            band_limit_hz: None,
            spectral_radius: false,
            min_singular_value: false,
            cache_bytes: DEFAULT_CACHE_BYTES,
            allow_low_resolution: false,
            validation: ValidationOptions::default(),
        }
    }
}

/// Responses at an arbitrary list of frequencies, `M x F`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub frequencies: Vec<f64>,
    pub values: CMatrix,
    pub diagnostics: Vec<BinDiagnostics>,
    pub scene: SceneDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub transfer: TransferFunction,
    pub diagnostics: Vec<BinDiagnostics>,
    pub scene: SceneDiagnostics,
}

fn check_scene(
    scene: &Scene,
    max_frequency: f64,
    options: &SweepOptions,
) -> Result<SceneDiagnostics> {
    let diag = validate_scene(scene, max_frequency, &options.validation)?;
    if !options.allow_low_resolution
        && diag.elements_per_wavelength < options.validation.min_elements_per_wavelength
    {
        return Err(Error::Validation(format!(
            "mesh resolution {:.2} elements per wavelength at {max_frequency} Hz is below {}",
            diag.elements_per_wavelength, options.validation.min_elements_per_wavelength
        )));
    }
    Ok(diag)
}

fn solve_bin(
    assembler: &Assembler<'_>,
    f: f64,
    options: &SweepOptions,
) -> Result<(Vec<Complex>, BinDiagnostics)> {
    let s = LaplacePoint::from_frequency(f);
    let fail = |e: Error| match e {
        Error::Solve { .. } => e,
        other => Error::Solve {
            frequency_hz: f,
            reason: other.to_string(),
        },
    };
    let ops = assembler.assemble(s)?;
    let x = Complex::new(1.0, 0.0);
    let (sol, sigma) = match options.method {
        SolveMethod::Direct => {
            let (sol, fact) = solver::solve_direct_factored(&ops, x).map_err(fail)?;
            let sigma = options
                .min_singular_value
                .then(|| fact.min_singular_value(1e-10, 500));
            (sol, sigma)
        }
        SolveMethod::Neumann(k) => {
            let (sol, _) = solver::solve_neumann(&ops, x, k).map_err(fail)?;
            let sigma = options
                .min_singular_value
                .then(|| solver::Factorization::new(&ops.a).min_singular_value(1e-10, 500));
            (sol, sigma)
        }
    };
    let (rho, converged) = if options.spectral_radius {
        let (r, c) = solver::spectral_radius(&ops.a, 1e-6, 500);
        (Some(r), Some(c))
    } else {
        (None, None)
    };
    if sol.p.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Solve {
            frequency_hz: f,
            reason: "non-finite receiver pressure".into(),
        });
    }
    let diag = BinDiagnostics {
        frequency_hz: f,
        condition: sol.condition,
        near_singular: sol.near_singular,
        spectral_radius: rho,
        spectral_radius_converged: converged,
        min_singular_value: sigma,
        residual_norm: sol.residual_norm,
    };
    Ok((sol.p.iter().copied().collect(), diag))
}

fn solve_many(
    scene: &Scene,
    frequencies: &[f64],
    options: &SweepOptions,
) -> Result<(CMatrix, Vec<BinDiagnostics>)> {
    let mut assembler = Assembler::new(scene, options.quadrature.clone())?;
    assembler.enable_cache(options.cache_bytes);
    let job = |&f: &f64| solve_bin(&assembler, f, options);
    let results: Vec<Result<(Vec<Complex>, BinDiagnostics)>> = if assembler.n() > PARALLEL_BIN_LIMIT
    {
        frequencies.iter().map(job).collect()
    } else {
        frequencies.par_iter().map(job).collect()
    };
    let m = scene.receivers.len();
    let mut values = CMatrix::zeros(m, frequencies.len());
    let mut diagnostics = Vec::with_capacity(frequencies.len());
    for (col, result) in results.into_iter().enumerate() {
        let (p, diag) = result?;
        for (r, v) in p.into_iter().enumerate() {
            values[(r, col)] = v;
        }
        diagnostics.push(diag);
    }
    Ok((values, diagnostics))
}

/// Solves at each listed frequency (Hz, all positive).
pub fn sweep_frequencies(
    scene: &Scene,
    frequencies: &[f64],
    options: &SweepOptions,
) -> Result<FrequencyResponse> {
    if let Some(&f) = frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "sweep frequency must be positive, got {f}"
        )));
    }
    let max = frequencies.iter().copied().fold(0.0, f64::max);
    let scene_diag = if max > 0.0 {
        check_scene(scene, max, options)?
    } else {
        return Err(Error::InvalidParameter("empty frequency list".into()));
    };
    let (values, diagnostics) = solve_many(scene, frequencies, options)?;
    Ok(FrequencyResponse {
        frequencies: frequencies.to_vec(),
        values,
        diagnostics,
        scene: scene_diag,
    })
}

/// Transfer function of `scene` on `grid` with unit excitation. Bin 0 is solved at
/// [`FrequencyGrid::dc_substitute`] and keeps its real part.
pub fn sweep(scene: &Scene, grid: &FrequencyGrid, options: &SweepOptions) -> Result<SweepResult> {
    let top = options
        .band_limit_hz
        .unwrap_or(grid.nyquist())
        .min(grid.nyquist());
    if !(top > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "band limit must be positive, got {top}"
        )));
    }
    let scene_diag = check_scene(scene, top, options)?;
    let dc = grid.dc_substitute();
    let solved: Vec<usize> = (0..grid.bins())
        .filter(|&k| grid.frequency(k) <= top)
        .collect();
    let frequencies: Vec<f64> = solved
        .iter()
        .map(|&k| if k == 0 { dc } else { grid.frequency(k) })
        .collect();
    let (values, bin_diagnostics) = solve_many(scene, &frequencies, options)?;
    let mut full = CMatrix::zeros(scene.receivers.len(), grid.bins());
    for (col, &k) in solved.iter().enumerate() {
        full.set_column(k, &values.column(col));
    }
    let metadata = ResponseMetadata {
        scene_hash: scene_hash(scene),
        method: options.method.to_string(),
        dc_frequency_hz: Some(dc),
        band_limit_hz: options.band_limit_hz,
    };
    let mut transfer = TransferFunction::new(*grid, full, metadata)?;
    transfer.enforce_real_edges();
    Ok(SweepResult {
        transfer,
        diagnostics: bin_diagnostics,
        scene: scene_diag,
    })
}

fn hash_f64(h: &mut Sha256, v: f64) {
    h.update(v.to_le_bytes());
}

fn hash_mesh_into(h: &mut Sha256, mesh: &BoundaryMesh) {
    h.update((mesh.vertices().len() as u64).to_le_bytes());
    for v in mesh.vertices() {
        v.iter().for_each(|&c| hash_f64(h, c));
    }
    h.update((mesh.len() as u64).to_le_bytes());
    for e in mesh.elements() {
        for &i in &e.vertices {
            h.update((i as u64).to_le_bytes());
        }
        match e.impedance {
            Impedance::Rigid => h.update([0u8]),
            Impedance::Finite(z) => {
                h.update([1u8]);
                hash_f64(h, z);
            }
        }
        h.update((e.group.len() as u64).to_le_bytes());
        h.update(e.group.as_bytes());
    }
}

/// SHA-256 of vertices, connectivity, impedances and groups, as hex.
pub fn mesh_hash(mesh: &BoundaryMesh) -> String {
    let mut h = Sha256::new();
    hash_mesh_into(&mut h, mesh);
    format!("{:x}", h.finalize())
}

/// SHA-256 of the mesh plus medium, source and receivers, as hex.
pub fn scene_hash(scene: &Scene) -> String {
    let mut h = Sha256::new();
    hash_mesh_into(&mut h, &scene.mesh);
    hash_f64(&mut h, scene.medium.sound_speed);
    hash_f64(&mut h, scene.medium.density);
    scene.source.iter().for_each(|&c| hash_f64(&mut h, c));
    for r in &scene.receivers {
        r.iter().for_each(|&c| hash_f64(&mut h, c));
    }
    format!("{:x}", h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::incident_receiver;
    use crate::scene::{make_plate, make_shoebox, Medium};
    use crate::Point3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn delay_tf(
        grid: FrequencyGrid,
        tau: f64,
        amplitude: f64,
        band: Option<f64>,
    ) -> TransferFunction {
        let values = CMatrix::from_fn(1, grid.bins(), |_, k| {
            let f = grid.frequency(k);
            if band.is_some_and(|b| f > b) {
                return Complex::new(0.0, 0.0);
            }
            Complex::from_polar(amplitude, -2.0 * std::f64::consts::PI * f * tau)
        });
        let mut tf = TransferFunction::new(
            grid,
            values,
            ResponseMetadata {
                band_limit_hz: band,
                ..Default::default()
            },
        )
        .unwrap();
        tf.enforce_real_edges();
        tf
    }

    #[test]
    fn grid_shape() {
        let g = FrequencyGrid::new(2000.0, 4096).unwrap();
        assert_eq!(g.bins(), 2049);
        assert_eq!(g.frequency(2048), 1000.0);
        assert!(FrequencyGrid::new(2000.0, 15).is_err());
        assert!(FrequencyGrid::new(0.0, 16).is_err());
    }

    #[test]
    fn pure_delay_is_an_impulse() {
        let grid = FrequencyGrid::new(1000.0, 256).unwrap();
        let tf = delay_tf(grid, 64.0 / 1000.0, 1.0, None);
        let ir = to_impulse_response(&tf, SpectralWindow::None).unwrap();
        let (idx, peak) = ir.peak(0);
        assert_eq!(idx, 64);
        assert!((peak - 1.0).abs() < 1e-12);
        for (i, v) in ir.samples[0].iter().enumerate() {
            if i != 64 {
                assert!(v.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn flat_spectrum_is_delta() {
        let grid = FrequencyGrid::new(1000.0, 128).unwrap();
        let tf = delay_tf(grid, 0.0, 1.0, None);
        let ir = to_impulse_response(&tf, SpectralWindow::None).unwrap();
        assert!((ir.samples[0][0] - 1.0).abs() < 1e-14);
        assert!(ir.samples[0][1..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn windowed_delay_keeps_peak() {
        let grid = FrequencyGrid::new(2000.0, 1024).unwrap();
        let r = 1.715;
        let tf = delay_tf(grid, r / 343.0, 1.0 / r, Some(500.0));
        let ir = to_impulse_response(&tf, SpectralWindow::default()).unwrap();
        let (idx, peak) = ir.peak(0);
        assert_eq!(idx, 10);
        assert!((peak * r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn imaginary_dc_is_rejected() {
        let grid = FrequencyGrid::new(1000.0, 64).unwrap();
        let mut tf = delay_tf(grid, 0.0, 1.0, None);
        tf.values[(0, 0)] = Complex::new(1.0, 0.5);
        assert!(matches!(
            to_impulse_response(&tf, SpectralWindow::None),
            Err(Error::NotReal { .. })
        ));
    }

    #[test]
    fn nyquist_keeps_magnitude() {
        let grid = FrequencyGrid::new(1000.0, 8).unwrap();
        let mut tf = delay_tf(grid, 0.0, 1.0, None);
        tf.values[(0, 4)] = Complex::new(-0.6, 0.8);
        tf.values[(0, 0)] = Complex::new(0.3, 0.2);
        tf.enforce_real_edges();
        assert_eq!(tf.values[(0, 4)], Complex::new(-1.0, 0.0));
        assert_eq!(tf.values[(0, 0)], Complex::new(0.3, 0.0));
    }

    #[test]
    fn band_energy_edge_cases() {
        let ir = ImpulseResponse {
            sample_rate: 1000.0,
            samples: vec![vec![0.0; 64]],
            imaginary_ratio: 0.0,
        };
        assert_eq!(band_energy(&ir, None), vec![0.0]);
        let mut delayed = vec![0.0; 64];
        delayed[17] = 1.0;
        let ir = ImpulseResponse {
            sample_rate: 1000.0,
            samples: vec![delayed],
            imaginary_ratio: 0.0,
        };
        assert!((band_energy(&ir, None)[0] - 1.0).abs() < 1e-12);
        // a delta spreads evenly: the lower half band [0, 250] holds 33 of 64 bins
        let half = band_energy(&ir, Some((0.0, 250.0)))[0];
        assert!((half - 33.0 / 64.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn parseval(seed in any::<u64>(), half in 4usize..64) {
            let n = 2 * half;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = FrequencyGrid::new(1000.0, n).unwrap();
            let values = CMatrix::from_fn(2, grid.bins(), |_, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let mut tf = TransferFunction::new(grid, values, ResponseMetadata::default()).unwrap();
            tf.enforce_real_edges();
            let ir = to_impulse_response(&tf, SpectralWindow::None).unwrap();
            let spectral = band_energy(&ir, None);
            for (row, e) in ir.samples.iter().zip(spectral) {
                let time: f64 = row.iter().map(|v| v * v).sum();
                prop_assert!((time - e).abs() <= 1e-10 * time.max(1e-300));
            }
        }
    }

    fn far_plate_scene(receiver: Point3) -> Scene {
        let plate = make_plate([1.0, 1.0], 0.0, 1.0, Impedance::Rigid).unwrap();
        let shift = Point3::new(0.0, 0.0, 150.0);
        Scene::new(plate, Medium::default(), shift, vec![shift + receiver]).unwrap()
    }

    #[test]
    fn direct_path_sweep_matches_free_field() {
        let scene = far_plate_scene(Point3::new(1.715, 0.0, 0.0));
        let grid = FrequencyGrid::new(2000.0, 256).unwrap();
        let options = SweepOptions {
            allow_low_resolution: true,
            band_limit_hz: Some(500.0),
            ..Default::default()
        };
        let result = sweep(&scene, &grid, &options).unwrap();
        let medium = Medium::default();
        for k in 1..grid.bins() {
            let f = grid.frequency(k);
            let v = result.transfer.values[(0, k)];
            if f > 500.0 {
                assert_eq!(v, Complex::new(0.0, 0.0));
                continue;
            }
            let d = incident_receiver(
                &scene.receivers[0],
                &scene.source,
                LaplacePoint::from_frequency(f),
                &medium,
            )
            .unwrap();
            // plate scattering ~ area / (150 m)^2 relative to the direct path
            assert!((v - d).norm() < 1e-3 * d.norm(), "bin {k}");
            assert!((v.norm() - 1.0 / 1.715).abs() < 1e-3);
        }
        assert_eq!(result.transfer.values[(0, 0)].im, 0.0);
        let ir = to_impulse_response(&result.transfer, SpectralWindow::default()).unwrap();
        let (idx, peak) = ir.peak(0);
        assert_eq!(idx, 10);
        assert!((peak * 1.715 - 1.0).abs() < 0.02);
    }

    #[test]
    fn low_resolution_is_refused_without_override() {
        let scene = far_plate_scene(Point3::new(1.0, 0.0, 0.0));
        let grid = FrequencyGrid::new(2000.0, 64).unwrap();
        assert!(matches!(
            sweep(&scene, &grid, &SweepOptions::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn sweep_is_conjugate_symmetric_and_deterministic() {
        let mesh = make_shoebox(
            [1.0, 1.0, 1.0],
            0.5,
            [Impedance::finite(415.03).unwrap(); 6],
        )
        .unwrap();
        let scene = Scene::new(
            mesh,
            Medium::default(),
            Point3::new(0.3, 0.4, 0.5),
            vec![Point3::new(0.7, 0.6, 0.45)],
        )
        .unwrap();
        let assembler = Assembler::new(&scene, QuadratureRule::default()).unwrap();
        for f in [40.0, 120.0] {
            let s = LaplacePoint::from_frequency(f);
            let plus =
                solver::solve_direct(&assembler.assemble(s).unwrap(), Complex::new(1.0, 0.0))
                    .unwrap();
            let minus = solver::solve_direct(
                &assembler.assemble(s.conj()).unwrap(),
                Complex::new(1.0, 0.0),
            )
            .unwrap();
            let diff = (plus.p.map(|v| v.conj()) - &minus.p).norm();
            assert!(diff <= 1e-12 * plus.p.norm(), "{diff}");
        }
        let options = SweepOptions {
            allow_low_resolution: true,
            spectral_radius: true,
            min_singular_value: true,
            ..Default::default()
        };
        let a = sweep_frequencies(&scene, &[40.0, 80.0, 120.0], &options).unwrap();
        let b = sweep_frequencies(&scene, &[40.0, 80.0, 120.0], &options).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a
            .diagnostics
            .iter()
            .all(|d| d.min_singular_value.unwrap() > 0.0));
        // closed rooms keep an eigenvalue near 1 from the static constant-pressure mode
        assert!(a
            .diagnostics
            .iter()
            .all(|d| d.spectral_radius.unwrap() > 0.99));
    }

    #[test]
    fn hashes_track_content() {
        let a = far_plate_scene(Point3::new(1.0, 0.0, 0.0));
        let b = far_plate_scene(Point3::new(1.0, 0.0, 0.1));
        assert_eq!(mesh_hash(&a.mesh), mesh_hash(&b.mesh));
        assert_ne!(scene_hash(&a), scene_hash(&b));
        assert_eq!(scene_hash(&a), scene_hash(&a.clone()));
        assert_eq!(mesh_hash(&a.mesh).len(), 64);
    }
}
