//! System parameters, resonator indexing and initial conditions.
//!
//! Resonators carry signed indices centered on zero: `{-(N-1)/2, ..., (N-1)/2}`
//! for odd `N` and `{-N/2, ..., N/2 - 1}` for even `N`. Resonator `n` sits at
//! detuning `comb_spacing * n` from the carrier. Shifting every detuning by a
//! constant only multiplies the rotating-frame amplitudes by a global phase.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical configuration of the resonator comb and the waveguide.
///
/// Units are arbitrary but consistent: `comb_spacing` is an angular frequency,
/// `light_speed * wavenumber` is an angular frequency, and the collective
/// rate `pi * coupling^2 / light_speed` is an angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    n_resonators: usize,
    comb_spacing: f64,
    coupling: f64,
    light_speed: f64,
    carrier_wavenumber: f64,
    band_halfwidth: f64,
    spacing: f64,
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        });
    }
    Ok(())
}

fn require_coupling(value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidParameter {
            name: "coupling",
            reason: format!("must be finite and >= 0, got {value}"),
        });
    }
    Ok(())
}

impl SystemParams {
    /// Validates raw inputs. The resonator spacing defaults to one carrier
    /// wavelength, `2*pi / carrier_wavenumber`.
    pub fn new(
        n_resonators: usize,
        comb_spacing: f64,
        coupling: f64,
        light_speed: f64,
        carrier_wavenumber: f64,
        band_halfwidth: f64,
    ) -> Result<Self> {
        if n_resonators == 0 {
            return Err(Error::InvalidParameter {
                name: "n_resonators",
                reason: "must be at least 1".into(),
            });
        }
        require_positive("comb_spacing", comb_spacing)?;
        require_coupling(coupling)?;
        require_positive("light_speed", light_speed)?;
        require_positive("carrier_wavenumber", carrier_wavenumber)?;
        require_positive("band_halfwidth", band_halfwidth)?;
        if band_halfwidth >= carrier_wavenumber {
            return Err(Error::InvalidParameter {
                name: "band_halfwidth",
                reason: format!(
                    "must be below carrier_wavenumber ({carrier_wavenumber}), got {band_halfwidth}"
                ),
            });
        }
        let comb = n_resonators as f64 * comb_spacing / light_speed;
        let band = 2.0 * band_halfwidth;
        if comb >= band {
            return Err(Error::CombExceedsBand { comb, band });
        }
        Ok(Self {
            n_resonators,
            comb_spacing,
            coupling,
            light_speed,
            carrier_wavenumber,
            band_halfwidth,
            spacing: 2.0 * PI / carrier_wavenumber,
        })
    }

    /// Same configuration with a different resonator spacing `z`.
    pub fn with_spacing(self, spacing: f64) -> Result<Self> {
        require_positive("spacing", spacing)?;
        Ok(Self { spacing, ..self })
    }

    /// Same configuration with a different coupling constant `g`.
    pub fn with_coupling(self, coupling: f64) -> Result<Self> {
        require_coupling(coupling)?;
        Ok(Self { coupling, ..self })
    }

    pub fn n_resonators(&self) -> usize {
        self.n_resonators
    }

    pub fn comb_spacing(&self) -> f64 {
        self.comb_spacing
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn carrier_wavenumber(&self) -> f64 {
        self.carrier_wavenumber
    }

    pub fn band_halfwidth(&self) -> f64 {
        self.band_halfwidth
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Collective decay rate `pi * g^2 / c` of the bright mode.
    pub fn decay_rate(&self) -> f64 {
        PI * self.coupling * self.coupling / self.light_speed
    }

    /// Rephasing (echo) time `2*pi / comb_spacing`.
    pub fn echo_time(&self) -> f64 {
        2.0 * PI / self.comb_spacing
    }

    /// Duration `2*pi / (N * comb_spacing)` of a pulse spanning the comb.
    pub fn pulse_duration(&self) -> f64 {
        self.echo_time() / self.n_resonators as f64
    }

    pub fn min_index(&self) -> i64 {
        -(self.n_resonators as i64 / 2)
    }

    pub fn max_index(&self) -> i64 {
        self.min_index() + self.n_resonators as i64 - 1
    }

    /// Resonator indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = ResonatorIndex> + Clone {
        (self.min_index()..=self.max_index()).map(ResonatorIndex)
    }

    /// Storage position of resonator `n`.
    pub fn position(&self, n: ResonatorIndex) -> Result<usize> {
        if n.0 < self.min_index() || n.0 > self.max_index() {
            return Err(Error::IndexOutOfRange {
                index: n.0,
                min: self.min_index(),
                max: self.max_index(),
            });
        }
        Ok((n.0 - self.min_index()) as usize)
    }

    /// Rotating-frame detunings `comb_spacing * n` in storage order.
    pub fn detunings(&self) -> Vec<f64> {
        self.indices()
            .map(|n| self.comb_spacing * n.value() as f64)
            .collect()
    }
}

/// Signed resonator number on the centered comb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResonatorIndex(pub i64);

impl ResonatorIndex {
    pub fn value(self) -> i64 {
        self.0
    }
}

impl fmt::Display for ResonatorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Rotating-frame detuning of resonator `n` relative to the carrier.
pub fn detuning_of(n: ResonatorIndex, params: &SystemParams) -> Result<f64> {
    params.position(n)?;
    Ok(params.comb_spacing * n.0 as f64)
}

/// Whether amplitudes are lab-frame `alpha_n` or carrier-removed `beta_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

/// Complex resonator amplitudes in storage order (see [`SystemParams::indices`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    values: Vec<Complex64>,
    frame: Frame,
}

impl AmplitudeVector {
    pub fn new(values: Vec<Complex64>, frame: Frame) -> Self {
        Self { values, frame }
    }

    /// Rotating-frame vector checked against the comb size.
    pub fn for_params(values: Vec<Complex64>, params: &SystemParams) -> Result<Self> {
        if values.len() != params.n_resonators() {
            return Err(Error::LengthMismatch {
                expected: params.n_resonators(),
                got: values.len(),
            });
        }
        Ok(Self::new(values, Frame::Rotating))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total resonator energy `sum_n |a_n|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Collective (bright-mode) amplitude `sum_n a_n`.
    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// Converts between frames given the carrier angular frequency `c*k0`.
    /// `alpha_n(t) = exp(-i c k0 t) beta_n(t)`.
    pub fn to_frame(&self, frame: Frame, carrier_frequency: f64, t: f64) -> Self {
        let phase = match (self.frame, frame) {
            (Frame::Rotating, Frame::Lab) => -carrier_frequency * t,
            (Frame::Lab, Frame::Rotating) => carrier_frequency * t,
            _ => return self.clone(),
        };
        let rot = Complex64::from_polar(1.0, phase);
        Self::new(self.values.iter().map(|v| v * rot).collect(), frame)
    }
}

/// Rescales `values` to unit total energy, preserving relative phases.
pub fn normalize(values: &[Complex64]) -> Result<AmplitudeVector> {
    let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite("normalize"));
    }
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(AmplitudeVector::new(
        values.iter().map(|v| v / norm).collect(),
        Frame::Rotating,
    ))
}

fn alternating_sign(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Short rectangular pulse: `c_n = (-1)^n / sqrt(N)`.
pub fn rect_comb_init(params: &SystemParams) -> AmplitudeVector {
    let amp = 1.0 / (params.n_resonators() as f64).sqrt();
    AmplitudeVector::new(
        params
            .indices()
            .map(|n| Complex64::new(alternating_sign(n.0) * amp, 0.0))
            .collect(),
        Frame::Rotating,
    )
}

/// Alternating-sign pulse with a Gaussian envelope of `width` resonators,
/// `c_n ∝ (-1)^n exp(-n^2 / (2 width^2))`. Its spectrum stays away from the
/// comb edges, unlike [`rect_comb_init`].
pub fn windowed_comb_init(params: &SystemParams, width: f64) -> Result<AmplitudeVector> {
    require_positive("width", width)?;
    let values: Vec<Complex64> = params
        .indices()
        .map(|n| {
            let x = n.0 as f64 / width;
            Complex64::new(alternating_sign(n.0) * (-0.5 * x * x).exp(), 0.0)
        })
        .collect();
    normalize(&values)
}

/// Excitation concentrated around resonator `focus` (Gaussian envelope of
/// `width` resonators) carrying a linear phase ramp `exp(i * phase_step * n)`.
pub fn phased_spot_init(
    params: &SystemParams,
    phase_step: f64,
    focus: ResonatorIndex,
    width: f64,
) -> Result<AmplitudeVector> {
    params.position(focus)?;
    require_positive("width", width)?;
    let values: Vec<Complex64> = params
        .indices()
        .map(|n| {
            let x = (n.0 - focus.0) as f64 / width;
            Complex64::from_polar((-0.5 * x * x).exp(), phase_step * n.0 as f64)
        })
        .collect();
    normalize(&values)
}

/// Uniform-amplitude linear phase ramp `c_n = exp(i * phase_step * n) / sqrt(N)`.
pub fn phase_ramp_init(params: &SystemParams, phase_step: f64) -> AmplitudeVector {
    let amp = 1.0 / (params.n_resonators() as f64).sqrt();
    AmplitudeVector::new(
        params
            .indices()
            .map(|n| Complex64::from_polar(amp, phase_step * n.0 as f64))
            .collect(),
        Frame::Rotating,
    )
}
