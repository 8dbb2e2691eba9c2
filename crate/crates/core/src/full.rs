//! Brute-force waveguide model: the continuum of propagating modes in the two
//! bands around `±k₀` is replaced by discrete pseudo-modes, and the single
//! excitation sector (field modes plus resonators) is propagated exactly.
//!
//! Everything runs in the frame rotating at the carrier frequency `ck₀`, so
//! the field diagonal is `c(|k| − k₀)` and the resonator diagonal is `Δn`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{AmplitudeVector, Frame, SystemParams};
use crate::quadrature::gauss_legendre;
use crate::trajectory::{validate_increasing, Trajectory};

pub const MIN_MODES_PER_BAND: usize = 8;

/// Largest dimension propagated by dense eigendecomposition under
/// [`Propagation::Auto`].
pub const DENSE_LIMIT: usize = 1200;

const UNIT_NORM_TOLERANCE: f64 = 1e-8;
const MIN_POINTS_PER_OSCILLATION: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Forward,
    Backward,
}

/// Quadrature rule used inside each band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandRule {
    /// Equal panels sampled at their centers.
    #[default]
    Midpoint,
    /// Equal panels with `order` Gauss–Legendre nodes each.
    GaussLegendre { order: usize },
}

/// Discrete waveguide modes. Forward modes come first, each sorted by `k`;
/// backward mode `j` is the mirror image of forward mode `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideGrid {
    wavenumbers: Vec<f64>,
    weights: Vec<f64>,
    branches: Vec<Branch>,
    carrier_wavenumber: f64,
}

impl WaveguideGrid {
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn carrier_wavenumber(&self) -> f64 {
        self.carrier_wavenumber
    }

    pub fn len(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavenumbers.is_empty()
    }

    pub fn modes_per_band(&self) -> usize {
        self.len() / 2
    }

    /// Offset from the carrier, `|k| − k₀`.
    pub fn detuning(&self, j: usize) -> f64 {
        self.wavenumbers[j].abs() - self.carrier_wavenumber
    }

    /// Index of the mode of `branch` closest to the band center.
    pub fn center_mode(&self, branch: Branch) -> usize {
        (0..self.len())
            .filter(|&j| self.branches[j] == branch)
            .min_by(|&a, &b| self.detuning(a).abs().total_cmp(&self.detuning(b).abs()))
            .expect("grid has modes in both branches")
    }
}

/// Midpoint discretization with `modes_per_band` samples in each band.
pub fn discretize_waveguide(params: &SystemParams, modes_per_band: usize) -> Result<WaveguideGrid> {
    discretize_waveguide_with(params, modes_per_band, BandRule::Midpoint)
}

pub fn discretize_waveguide_with(
    params: &SystemParams,
    modes_per_band: usize,
    rule: BandRule,
) -> Result<WaveguideGrid> {
    if modes_per_band < MIN_MODES_PER_BAND {
        return Err(Error::TooFewModes {
            got: modes_per_band,
            min: MIN_MODES_PER_BAND,
        });
    }
    let half = params.band_halfwidth();
    // Offsets q in [−δ₀, δ₀] and their weights.
    let (offsets, weights): (Vec<f64>, Vec<f64>) = match rule {
        BandRule::Midpoint => {
            let h = 2.0 * half / modes_per_band as f64;
            (0..modes_per_band)
                .map(|i| (-half + (i as f64 + 0.5) * h, h))
                .unzip()
        }
        BandRule::GaussLegendre { order } => {
            if order == 0 || !modes_per_band.is_multiple_of(order) {
                return Err(Error::InvalidParameter {
                    name: "order",
                    reason: format!(
                        "{modes_per_band} modes cannot be split into panels of {order}"
                    ),
                });
            }
            let panels = modes_per_band / order;
            let width = 2.0 * half / panels as f64;
            let (x, w) = gauss_legendre(order);
            (0..panels)
                .flat_map(|p| {
                    let mid = -half + (p as f64 + 0.5) * width;
                    x.iter()
                        .zip(&w)
                        .map(move |(x, w)| (mid + 0.5 * width * x, 0.5 * width * w))
                })
                .unzip()
        }
    };
    let k0 = params.carrier_wavenumber();
    let mut wavenumbers: Vec<f64> = offsets.iter().map(|q| k0 + q).collect();
    wavenumbers.extend(offsets.iter().map(|q| -(k0 + q)));
    let mut all_weights = weights.clone();
    all_weights.extend_from_slice(&weights);
    let mut branches = vec![Branch::Forward; modes_per_band];
    branches.extend(std::iter::repeat_n(Branch::Backward, modes_per_band));
    Ok(WaveguideGrid {
        wavenumbers,
        weights: all_weights,
        branches,
        carrier_wavenumber: k0,
    })
}

/// How the waveguide coupling is shared among the two propagation branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingNormalization {
    /// Per-mode coupling `g√(w_j/2)`: the two branches together give the
    /// reduced decay rate `πg²/c`.
    #[default]
    MatchReduced,
    /// Per-mode coupling `g√w_j`: every branch contributes `πg²/c`, total
    /// decay rate `2πg²/c`.
    Literal,
}

impl CouplingNormalization {
    fn factor(self) -> f64 {
        match self {
            Self::MatchReduced => std::f64::consts::FRAC_1_SQRT_2,
            Self::Literal => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Dense below [`DENSE_LIMIT`], Chebyshev above.
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FullModelOptions {
    pub normalization: CouplingNormalization,
    pub propagation: Propagation,
}

/// Single-excitation state: field pseudo-mode amplitudes `f(k_j)√w_j` and
/// resonator amplitudes, both in the rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    field: Vec<Complex64>,
    resonators: AmplitudeVector,
    time: f64,
}

impl FullState {
    /// Empty waveguide, resonators holding `init`, `t = 0`.
    pub fn from_resonators(init: &AmplitudeVector, grid: &WaveguideGrid) -> Result<Self> {
        let norm = init.norm_sqr();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::InvalidParameter {
                name: "init",
                reason: format!("initial state must be normalized, norm is {norm}"),
            });
        }
        Ok(Self {
            field: vec![Complex64::new(0.0, 0.0); grid.len()],
            // Rotating and lab frames coincide at t = 0.
            resonators: AmplitudeVector::new(init.values().to_vec(), Frame::Rotating),
            time: 0.0,
        })
    }

    pub fn field(&self) -> &[Complex64] {
        &self.field
    }

    pub fn resonators(&self) -> &AmplitudeVector {
        &self.resonators
    }

    /// Resonator amplitudes `α_n` in the lab frame.
    pub fn lab_resonators(&self, params: &SystemParams) -> AmplitudeVector {
        self.resonators.to_frame(
            Frame::Lab,
            params.light_speed() * params.carrier_wavenumber(),
            self.time,
        )
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn field_norm(&self) -> f64 {
        self.field.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn total_norm(&self) -> f64 {
        self.field_norm() + self.resonators.norm_sqr()
    }

    fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.field.len() + self.resonators.len(),
            self.field.iter().chain(self.resonators.values()).copied(),
        )
    }

    fn from_vector(v: &DVector<Complex64>, n_field: usize, time: f64) -> Result<Self> {
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("full-model propagation"));
        }
        Ok(Self {
            field: v.as_slice()[..n_field].to_vec(),
            resonators: AmplitudeVector::new(v.as_slice()[n_field..].to_vec(), Frame::Rotating),
            time,
        })
    }
}

fn coupling_block(
    grid: &WaveguideGrid,
    params: &SystemParams,
    normalization: CouplingNormalization,
) -> DMatrix<Complex64> {
    let g = params.coupling() * normalization.factor();
    let z = params.spacing();
    let idx: Vec<f64> = params.indices().map(|n| n.value() as f64).collect();
    DMatrix::from_fn(grid.len(), idx.len(), |j, m| {
        let k = grid.wavenumbers[j];
        Complex64::from_polar(g * grid.weights[j].sqrt(), -k * z * idx[m])
    })
}

/// Rotating-frame single-excitation Hamiltonian `H`, field modes first.
pub fn assemble_hamiltonian(
    grid: &WaveguideGrid,
    params: &SystemParams,
    normalization: CouplingNormalization,
) -> DMatrix<Complex64> {
    let m = grid.len();
    let n = params.n_resonators();
    let c = params.light_speed();
    let mut h = DMatrix::zeros(m + n, m + n);
    for j in 0..m {
        h[(j, j)] = Complex64::new(c * grid.detuning(j), 0.0);
    }
    for (i, d) in params.detunings().into_iter().enumerate() {
        h[(m + i, m + i)] = Complex64::new(d, 0.0);
    }
    let block = coupling_block(grid, params, normalization);
    h.view_mut((0, m), (m, n)).copy_from(&block);
    h.view_mut((m, 0), (n, m)).copy_from(&block.adjoint());
    h
}

/// Anti-Hermitian generator `G = −iH` (default coupling normalization).
pub fn assemble_full_generator(grid: &WaveguideGrid, params: &SystemParams) -> DMatrix<Complex64> {
    assemble_hamiltonian(grid, params, CouplingNormalization::default()) * Complex64::new(0.0, -1.0)
}

/// Hermitian operator with diagonal field and resonator blocks joined by a
/// dense coupling block; applied in `O(MN)`.
#[derive(Debug, Clone)]
struct ArrowheadOperator {
    field_diag: Vec<f64>,
    res_diag: Vec<f64>,
    coupling: DMatrix<Complex64>,
}

impl ArrowheadOperator {
    fn dim(&self) -> usize {
        self.field_diag.len() + self.res_diag.len()
    }

    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let m = self.field_diag.len();
        let vf = v.rows(0, m);
        let vr = v.rows(m, self.res_diag.len());
        let mut out = DVector::zeros(self.dim());
        let top = &self.coupling * vr;
        let bottom = self.coupling.ad_mul(&vf);
        for j in 0..m {
            out[j] = v[j] * self.field_diag[j] + top[j];
        }
        for i in 0..self.res_diag.len() {
            out[m + i] = v[m + i] * self.res_diag[i] + bottom[i];
        }
        out
    }

    /// Gershgorin enclosure of the spectrum.
    fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (j, d) in self.field_diag.iter().enumerate() {
            let r: f64 = self.coupling.row(j).iter().map(|z| z.norm()).sum();
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        for (i, d) in self.res_diag.iter().enumerate() {
            let r: f64 = self.coupling.column(i).iter().map(|z| z.norm()).sum();
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    /// `exp(−iHt) v` by Chebyshev expansion with Bessel coefficients.
    fn propagate(&self, v: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        if t == 0.0 {
            return v.clone();
        }
        let (lo, hi) = self.spectral_bounds();
        let center = 0.5 * (hi + lo);
        let radius = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
        let x = radius * t;
        let bessel = bessel_series(x);
        let scaled = |u: &DVector<Complex64>| {
            (self.apply(u) - u * Complex64::new(center, 0.0)) * Complex64::new(1.0 / radius, 0.0)
        };

        let mut prev = v.clone();
        let mut acc = &prev * Complex64::new(bessel[0], 0.0);
        if bessel.len() > 1 {
            let mut cur = scaled(&prev);
            let mut phase = Complex64::new(0.0, -1.0);
            acc += &cur * (phase * 2.0 * bessel[1]);
            for &jk in &bessel[2..] {
                let next = scaled(&cur) * Complex64::new(2.0, 0.0) - &prev;
                phase *= Complex64::new(0.0, -1.0);
                acc += &next * (phase * 2.0 * jk);
                prev = cur;
                cur = next;
            }
        }
        acc * Complex64::from_polar(1.0, -center * t)
    }
}

/// `J_0(x) .. J_K(x)` with `K` past the point where the series is negligible,
/// by Miller's backward recurrence normalized with `J₀ + 2ΣJ_{2k} = 1`.
fn bessel_series(x: f64) -> Vec<f64> {
    let x = x.abs();
    if x < 1e-300 {
        return vec![1.0];
    }
    let terms = (x + 10.0 * x.cbrt() + 30.0).ceil() as usize;
    let start = terms + 30 + (x.sqrt() as usize);
    let mut values = vec![0.0; start + 2];
    values[start] = 1e-300;
    for k in (1..=start).rev() {
        let v = 2.0 * k as f64 / x * values[k] - values[k + 1];
        values[k - 1] = v;
        if v.abs() > 1e250 {
            for w in values[k - 1..=start].iter_mut() {
                *w *= 1e-250;
            }
        }
    }
    let norm = values[0] + 2.0 * values.iter().skip(2).step_by(2).sum::<f64>();
    let mut out: Vec<f64> = values[..=terms].iter().map(|v| v / norm).collect();
    while out.len() > 1 && out.last().is_some_and(|v| v.abs() < 1e-18) {
        out.pop();
    }
    out
}

#[derive(Debug, Clone)]
enum Backend {
    Dense {
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<Complex64>,
    },
    Chebyshev(ArrowheadOperator),
}

/// Discretized waveguide plus resonators, ready to propagate.
#[derive(Debug, Clone)]
pub struct FullModel {
    grid: WaveguideGrid,
    params: SystemParams,
    options: FullModelOptions,
    backend: Backend,
}

impl FullModel {
    pub fn new(
        grid: WaveguideGrid,
        params: SystemParams,
        options: FullModelOptions,
    ) -> Result<Self> {
        let dim = grid.len() + params.n_resonators();
        let dense = match options.propagation {
            Propagation::Auto => dim <= DENSE_LIMIT,
            Propagation::Dense => true,
            Propagation::Chebyshev => false,
        };
        let backend = if dense {
            let h = assemble_hamiltonian(&grid, &params, options.normalization);
            let eig = h.symmetric_eigen();
            Backend::Dense {
                eigenvalues: eig.eigenvalues,
                eigenvectors: eig.eigenvectors,
            }
        } else {
            let c = params.light_speed();
            Backend::Chebyshev(ArrowheadOperator {
                field_diag: (0..grid.len()).map(|j| c * grid.detuning(j)).collect(),
                res_diag: params.detunings(),
                coupling: coupling_block(&grid, &params, options.normalization),
            })
        };
        Ok(Self {
            grid,
            params,
            options,
            backend,
        })
    }

    pub fn with_defaults(params: &SystemParams, modes_per_band: usize) -> Result<Self> {
        let grid = discretize_waveguide(params, modes_per_band)?;
        Self::new(grid, *params, FullModelOptions::default())
    }

    pub fn grid(&self) -> &WaveguideGrid {
        &self.grid
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn options(&self) -> FullModelOptions {
        self.options
    }

    pub fn dim(&self) -> usize {
        self.grid.len() + self.params.n_resonators()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.backend, Backend::Dense { .. })
    }

    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        assemble_hamiltonian(&self.grid, &self.params, self.options.normalization)
    }

    fn check_state(&self, state: &FullState) -> Result<()> {
        if state.field.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: state.field.len(),
            });
        }
        if state.resonators.len() != self.params.n_resonators() {
            return Err(Error::LengthMismatch {
                expected: self.params.n_resonators(),
                got: state.resonators.len(),
            });
        }
        Ok(())
    }

    fn step(&self, v: &DVector<Complex64>, dt: f64) -> DVector<Complex64> {
        match &self.backend {
            Backend::Dense {
                eigenvalues,
                eigenvectors,
            } => {
                let mut coeffs = eigenvectors.ad_mul(v);
                for (c, l) in coeffs.iter_mut().zip(eigenvalues.iter()) {
                    *c *= Complex64::from_polar(1.0, -l * dt);
                }
                eigenvectors * coeffs
            }
            Backend::Chebyshev(op) => op.propagate(v, dt),
        }
    }

    /// Propagates `state` forward by `dt`.
    pub fn evolve(&self, state: &FullState, dt: f64) -> Result<FullState> {
        if dt < 0.0 || dt.is_nan() {
            return Err(Error::NegativeTime(dt));
        }
        self.check_state(state)?;
        if dt == 0.0 {
            return Ok(state.clone());
        }
        let v = self.step(&state.to_vector(), dt);
        FullState::from_vector(&v, self.grid.len(), state.time + dt)
    }

    /// States at the absolute times `times` (all `≥ state.time()`).
    pub fn trajectory(&self, state: &FullState, times: &[f64]) -> Result<Vec<FullState>> {
        validate_increasing(times)?;
        self.check_state(state)?;
        if times[0] < state.time {
            return Err(Error::NegativeTime(times[0] - state.time));
        }
        let mut out = Vec::with_capacity(times.len());
        match &self.backend {
            Backend::Dense {
                eigenvalues,
                eigenvectors,
            } => {
                let coeffs = eigenvectors.ad_mul(&state.to_vector());
                for &t in times {
                    let dt = t - state.time;
                    let phased = DVector::from_iterator(
                        coeffs.len(),
                        coeffs
                            .iter()
                            .zip(eigenvalues.iter())
                            .map(|(c, l)| c * Complex64::from_polar(1.0, -l * dt)),
                    );
                    let v = eigenvectors * phased;
                    out.push(FullState::from_vector(&v, self.grid.len(), t)?);
                }
            }
            Backend::Chebyshev(_) => {
                let mut current = state.clone();
                for &t in times {
                    current = self.evolve(&current, t - current.time)?;
                    current.time = t;
                    out.push(current.clone());
                }
            }
        }
        Ok(out)
    }

    /// Rotating-frame resonator amplitudes on `times`, starting from an
    /// empty waveguide at `t = 0`.
    pub fn resonator_trajectory(
        &self,
        init: &AmplitudeVector,
        times: &[f64],
    ) -> Result<Trajectory> {
        let start = FullState::from_resonators(init, &self.grid)?;
        let states = self.trajectory(&start, times)?;
        Trajectory::new(
            times.to_vec(),
            states.into_iter().map(|s| s.resonators).collect(),
            self.params,
        )
    }
}

/// `exp(G t)` applied to `init` with default options.
pub fn evolve_full(
    init: &FullState,
    t: f64,
    grid: &WaveguideGrid,
    params: &SystemParams,
) -> Result<FullState> {
    FullModel::new(grid.clone(), *params, FullModelOptions::default())?.evolve(init, t)
}

/// Emitted field amplitude `f_k(t)` (lab frame, per unit `√k`) from the
/// retarded integral over a resonator trajectory, by the trapezoid rule.
pub fn output_field_direct(
    trajectory: &Trajectory,
    k: f64,
    t: f64,
    params: &SystemParams,
) -> Result<Complex64> {
    output_field_direct_with(trajectory, k, t, params, CouplingNormalization::default())
}

pub fn output_field_direct_with(
    trajectory: &Trajectory,
    k: f64,
    t: f64,
    params: &SystemParams,
    normalization: CouplingNormalization,
) -> Result<Complex64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let times = trajectory.times();
    if times[0] != 0.0 {
        return Err(Error::InvalidGrid("trajectory must start at t = 0".into()));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let last = *times.last().expect("trajectory is non-empty");
    if t > last {
        return Err(Error::InvalidGrid(format!(
            "trajectory ends at {last}, field requested at {t}"
        )));
    }
    let c = params.light_speed();
    let k0 = params.carrier_wavenumber();
    let q = k.abs() - k0;
    let max_det = params
        .detunings()
        .iter()
        .fold(0.0f64, |a, d| a.max(d.abs()));
    let omega = (c * q).abs() + max_det + params.decay_rate();
    let h_max = times
        .windows(2)
        .take_while(|w| w[0] < t)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if omega > 0.0 && h_max * omega * MIN_POINTS_PER_OSCILLATION > 2.0 * std::f64::consts::PI {
        return Err(Error::Undersampled(format!(
            "step {h_max} gives fewer than {MIN_POINTS_PER_OSCILLATION} points per period {}",
            2.0 * std::f64::consts::PI / omega
        )));
    }

    let z = params.spacing();
    let idx: Vec<f64> = params.indices().map(|n| n.value() as f64).collect();
    let phases: Vec<Complex64> = idx
        .iter()
        .map(|&m| Complex64::from_polar(1.0, -k * z * m))
        .collect();
    let integrand = |tau: f64, beta: &[Complex64]| -> Complex64 {
        let s: Complex64 = beta.iter().zip(&phases).map(|(b, p)| b * p).sum();
        s * Complex64::from_polar(1.0, -q * c * (t - tau))
    };

    let mut acc = Complex64::new(0.0, 0.0);
    let states = trajectory.states();
    let mut prev = (times[0], integrand(times[0], states[0].values()));
    for i in 1..times.len() {
        let (tau, value) = if times[i] <= t {
            (times[i], integrand(times[i], states[i].values()))
        } else {
            // Linear interpolation of β at the requested end point.
            let s = (t - times[i - 1]) / (times[i] - times[i - 1]);
            let beta: Vec<Complex64> = states[i - 1]
                .values()
                .iter()
                .zip(states[i].values())
                .map(|(a, b)| a * (1.0 - s) + b * s)
                .collect();
            (t, integrand(t, &beta))
        };
        acc += (value + prev.1) * (0.5 * (tau - prev.0));
        prev = (tau, value);
        if tau >= t {
            break;
        }
    }
    let g = params.coupling() * normalization.factor();
    Ok(Complex64::new(0.0, -g) * Complex64::from_polar(1.0, -c * k0 * t) * acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub wavenumber: f64,
    pub density: f64,
}

/// Emitted power per branch and the densities `|f(k)|²` behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSpectra {
    pub forward: Vec<SpectralPoint>,
    pub backward: Vec<SpectralPoint>,
    pub forward_power: f64,
    pub backward_power: f64,
    /// `(P_fwd − P_bwd)/(P_fwd + P_bwd)`, zero when nothing was emitted.
    pub asymmetry: f64,
}

pub fn emission_spectra(state: &FullState, grid: &WaveguideGrid) -> Result<EmissionSpectra> {
    if state.field.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: state.field.len(),
        });
    }
    let mut forward = Vec::with_capacity(grid.modes_per_band());
    let mut backward = Vec::with_capacity(grid.modes_per_band());
    let (mut pf, mut pb) = (0.0, 0.0);
    for j in 0..grid.len() {
        let power = state.field[j].norm_sqr();
        let point = SpectralPoint {
            wavenumber: grid.wavenumbers[j],
            density: power / grid.weights[j],
        };
        match grid.branches[j] {
            Branch::Forward => {
                pf += power;
                forward.push(point);
            }
            Branch::Backward => {
                pb += power;
                backward.push(point);
            }
        }
    }
    forward.sort_by(|a, b| a.wavenumber.total_cmp(&b.wavenumber));
    backward.sort_by(|a, b| a.wavenumber.total_cmp(&b.wavenumber));
    let total = pf + pb;
    let asymmetry = if total > 0.0 { (pf - pb) / total } else { 0.0 };
    Ok(EmissionSpectra {
        forward,
        backward,
        forward_power: pf,
        backward_power: pb,
        asymmetry,
    })
}
