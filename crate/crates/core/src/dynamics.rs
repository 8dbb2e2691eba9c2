//! Observables derived from resonator trajectories: efficiency, relative
//! energy difference of a resonator pair, bright-mode amplitude, peak
//! detection and coupling sweeps.

use rayon::prelude::*;

use crate::analytic::eta0;
use crate::error::{Error, Result};
use crate::params::{AmplitudeVector, ResonatorIndex, SystemParams};
use crate::reduced::evolve_expm;
use crate::trajectory::{validate_increasing, Trajectory};

/// Below this `E₁ + E₂` the energy difference is reported as 0 and flagged.
pub const ENERGY_FLOOR: f64 = 1e-30;

pub const DEFAULT_PROMINENCE: f64 = 0.25;

/// Minimum samples per feature scale accepted by [`detect_peaks`].
pub const MIN_SAMPLES_PER_FEATURE: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    times: Vec<f64>,
    values: Vec<f64>,
    label: String,
}

impl Series {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        validate_increasing(&times)?;
        Ok(Self {
            times,
            values,
            label: label.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

fn series_from(traj: &Trajectory, label: &str, f: impl Fn(&AmplitudeVector) -> f64) -> Series {
    Series {
        times: traj.times().to_vec(),
        values: traj.states().iter().map(f).collect(),
        label: label.to_owned(),
    }
}

/// `η(t) = 1 − Σ|β_n(t)|²`.
pub fn efficiency_curve(traj: &Trajectory) -> Series {
    series_from(traj, "efficiency", |s| 1.0 - s.norm_sqr())
}

/// Bright-mode amplitude `|Σ_n β_n(t)|`.
pub fn collective_amplitude(traj: &Trajectory) -> Series {
    series_from(traj, "collective", |s| s.sum().norm())
}

/// `e₁₂(t)` together with a mask that is false where `E₁ + E₂` fell below
/// [`ENERGY_FLOOR`] (the value there is set to 0).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDifference {
    pub series: Series,
    pub valid: Vec<bool>,
}

pub fn energy_difference(
    traj: &Trajectory,
    n1: ResonatorIndex,
    n2: ResonatorIndex,
) -> Result<EnergyDifference> {
    if n1 == n2 {
        return Err(Error::IdenticalIndices(n1.value()));
    }
    let i1 = traj.params().position(n1)?;
    let i2 = traj.params().position(n2)?;
    let mut values = Vec::with_capacity(traj.len());
    let mut valid = Vec::with_capacity(traj.len());
    for s in traj.states() {
        let e1 = s.values()[i1].norm_sqr();
        let e2 = s.values()[i2].norm_sqr();
        let total = e1 + e2;
        if total < ENERGY_FLOOR {
            values.push(0.0);
            valid.push(false);
        } else {
            values.push(((e1 - e2) / total).clamp(-1.0, 1.0));
            valid.push(true);
        }
    }
    Ok(EnergyDifference {
        series: Series {
            times: traj.times().to_vec(),
            values,
            label: format!("e12({n1},{n2})"),
        },
        valid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub time: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn max_width(&self) -> Option<f64> {
        self.peaks.iter().map(|p| p.width).reduce(f64::max)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Peak> {
        self.peaks.iter()
    }
}

fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < x.len() {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < x.len() && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                // Plateaus report their middle sample.
                out.push((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        i += 1;
    }
    out
}

fn prominence(x: &[f64], peak: usize) -> (f64, usize, usize) {
    let h = x[peak];
    let mut left_base = peak;
    let mut left_min = h;
    let mut i = peak;
    while i > 0 {
        i -= 1;
        if x[i] > h {
            break;
        }
        if x[i] < left_min {
            left_min = x[i];
            left_base = i;
        }
    }
    let mut right_base = peak;
    let mut right_min = h;
    let mut i = peak;
    while i + 1 < x.len() {
        i += 1;
        if x[i] > h {
            break;
        }
        if x[i] < right_min {
            right_min = x[i];
            right_base = i;
        }
    }
    (h - left_min.max(right_min), left_base, right_base)
}

fn crossing_time(times: &[f64], x: &[f64], lo: usize, hi: usize, level: f64) -> f64 {
    // x[lo] <= level < x[hi], adjacent samples.
    let frac = if x[hi] != x[lo] {
        (level - x[lo]) / (x[hi] - x[lo])
    } else {
        0.0
    };
    times[lo] + frac * (times[hi] - times[lo])
}

/// Local maxima of `|values|` whose prominence reaches `prominence_floor`,
/// with widths taken at half prominence.
///
/// `feature_scale` is the narrowest time scale of interest; the series must
/// carry at least 64 samples per `feature_scale`.
pub fn detect_peaks(series: &Series, prominence_floor: f64, feature_scale: f64) -> Result<PeakSet> {
    if feature_scale.is_nan() || feature_scale <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "feature_scale",
            reason: format!("must be positive, got {feature_scale}"),
        });
    }
    let times = series.times();
    let h_max = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if h_max * MIN_SAMPLES_PER_FEATURE > feature_scale * (1.0 + 1e-9) {
        return Err(Error::Undersampled(format!(
            "largest step {h_max} exceeds {feature_scale}/{MIN_SAMPLES_PER_FEATURE}"
        )));
    }
    let x: Vec<f64> = series.values().iter().map(|v| v.abs()).collect();
    let mut peaks = Vec::new();
    for p in local_maxima(&x) {
        let (prom, left_base, right_base) = prominence(&x, p);
        if prom < prominence_floor || prom <= 0.0 {
            continue;
        }
        let level = x[p] - 0.5 * prom;
        let mut i = p;
        while i > left_base && x[i] > level {
            i -= 1;
        }
        let left = if x[i] < level {
            crossing_time(times, &x, i, i + 1, level)
        } else {
            times[i]
        };
        let mut i = p;
        while i < right_base && x[i] > level {
            i += 1;
        }
        let right = if x[i] < level {
            crossing_time(times, &x, i, i - 1, level)
        } else {
            times[i]
        };
        peaks.push(Peak {
            time: times[p],
            height: x[p],
            prominence: prom,
            width: right - left,
        });
    }
    Ok(PeakSet { peaks })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub coupling: f64,
    /// `1 − Σ|β_n|²` of the reduced model at the echo time.
    pub eta_echo: f64,
    pub eta0_analytic: f64,
}

/// Reduced-model efficiency at the echo time for every coupling in
/// `g_values` (evaluated in parallel, returned in input order).
pub fn sweep_coupling(
    params: &SystemParams,
    g_values: &[f64],
    init: &AmplitudeVector,
) -> Result<Vec<SweepPoint>> {
    if let Some(g) = g_values.iter().find(|g| **g <= 0.0 || !g.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "g_values",
            reason: format!("couplings must be positive and finite, got {g}"),
        });
    }
    if g_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "g_values",
            reason: "couplings must be strictly increasing".into(),
        });
    }
    g_values
        .par_iter()
        .map(|&g| {
            let p = params.with_coupling(g)?;
            let end = evolve_expm(init, p.echo_time(), &p)?;
            Ok(SweepPoint {
                coupling: g,
                eta_echo: 1.0 - end.norm_sqr(),
                eta0_analytic: eta0(g, &p),
            })
        })
        .collect()
}

/// Index of the largest `eta_echo` in a sweep.
pub fn sweep_argmax(points: &[SweepPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.eta_echo.total_cmp(&b.1.eta_echo))
        .map(|(i, _)| i)
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("need 0 < lo < hi and count >= 2 (got {lo}, {hi}, {count})"),
        });
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| lo * (step * i as f64).exp()).collect();
    grid[count - 1] = hi;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::optimal_coupling;
    use crate::params::{rect_comb_init, windowed_comb_init, Frame};
    use crate::reduced::trajectory_expm;
    use crate::trajectory::uniform_grid;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn params(n: usize, g: f64) -> SystemParams {
        SystemParams::new(n, 1.0, g, 1.0, 1.0e4, 100.0).unwrap()
    }

    fn at_optimum(n: usize) -> SystemParams {
        let p = params(n, 0.0);
        p.with_coupling(optimal_coupling(&p)).unwrap()
    }

    fn rect_trajectory(p: &SystemParams, samples: usize) -> Trajectory {
        let times = uniform_grid(p.echo_time(), samples).unwrap();
        trajectory_expm(&rect_comb_init(p), &times, p).unwrap()
    }

    fn triangle(center: f64, half: f64, height: f64, n: usize) -> Series {
        let times = uniform_grid(10.0, n).unwrap();
        let values = times
            .iter()
            .map(|t| (height * (1.0 - (t - center).abs() / half)).max(0.0))
            .collect();
        Series::new(times, values, "triangle").unwrap()
    }

    #[test]
    fn series_validation() {
        assert!(Series::new(vec![0.0, 1.0], vec![1.0], "x").is_err());
        assert!(Series::new(vec![0.0, 0.0], vec![1.0, 2.0], "x").is_err());
        assert_eq!(Series::new(vec![0.0], vec![1.0], "x").unwrap().label(), "x");
    }

    #[test]
    fn efficiency_examples() {
        let p = at_optimum(6);
        let eff = efficiency_curve(&rect_trajectory(&p, 257));
        assert_abs_diff_eq!(eff.values()[0], 0.0, epsilon = 1e-15);
        assert!(eff.values().windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(eff
            .values()
            .iter()
            .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        // Finite-comb leakage keeps the echo efficiency at 0.9555.
        assert_abs_diff_eq!(*eff.values().last().unwrap(), 0.955450, epsilon = 1e-5);

        let silent = params(6, 0.0);
        let eff = efficiency_curve(&rect_trajectory(&silent, 65));
        assert!(eff.values().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn energy_difference_examples() {
        let p = at_optimum(5);
        let mk = |v: Vec<f64>| {
            let states = vec![AmplitudeVector::new(
                v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
                Frame::Rotating,
            )];
            Trajectory::new(vec![0.0], states, p).unwrap()
        };
        let eq = mk(vec![0.0, 0.5, 0.5, 0.0, 0.0]);
        let e = energy_difference(&eq, ResonatorIndex(-1), ResonatorIndex(0)).unwrap();
        assert_eq!(e.series.values(), &[0.0]);
        let one = mk(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let e = energy_difference(&one, ResonatorIndex(0), ResonatorIndex(1)).unwrap();
        assert_eq!(e.series.values(), &[1.0]);
        let none = mk(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let e = energy_difference(&none, ResonatorIndex(0), ResonatorIndex(1)).unwrap();
        assert_eq!((e.series.values()[0], e.valid[0]), (0.0, false));

        let traj = rect_trajectory(&p, 65);
        let e = energy_difference(&traj, ResonatorIndex(0), ResonatorIndex(1)).unwrap();
        assert_abs_diff_eq!(e.series.values()[0], 0.0, epsilon = 1e-15);
        assert!(matches!(
            energy_difference(&traj, ResonatorIndex(1), ResonatorIndex(1)),
            Err(Error::IdenticalIndices(1))
        ));
        assert!(energy_difference(&traj, ResonatorIndex(0), ResonatorIndex(7)).is_err());
    }

    #[test]
    fn energy_difference_antisymmetric_and_bounded() {
        let p = at_optimum(7);
        let traj = rect_trajectory(&p, 513);
        let a = energy_difference(&traj, ResonatorIndex(0), ResonatorIndex(2)).unwrap();
        let b = energy_difference(&traj, ResonatorIndex(2), ResonatorIndex(0)).unwrap();
        for (x, y) in a.series.values().iter().zip(b.series.values()) {
            assert_eq!(*x, -*y);
            assert!(x.abs() <= 1.0);
        }
    }

    #[test]
    fn mirror_pair_stays_balanced() {
        for n in [5, 7] {
            let p = at_optimum(n);
            let traj = rect_trajectory(&p, 1025);
            for k in 1..=(n as i64 / 2) {
                let e = energy_difference(&traj, ResonatorIndex(-k), ResonatorIndex(k)).unwrap();
                assert!(e.series.values().iter().all(|v| v.abs() <= 1e-10));
            }
        }
    }

    #[test]
    fn collective_amplitude_examples() {
        let p = at_optimum(5);
        let traj = rect_trajectory(&p, 129);
        let col = collective_amplitude(&traj);
        assert_abs_diff_eq!(col.values()[0], 1.0 / 5f64.sqrt(), epsilon = 1e-15);
        let even = at_optimum(6);
        assert_abs_diff_eq!(
            collective_amplitude(&rect_trajectory(&even, 9)).values()[0],
            0.0
        );

        let silent = params(4, 0.0);
        let col = collective_amplitude(&rect_trajectory(&silent, 129));
        assert!(col.values().iter().all(|v| *v <= 2.0 + 1e-12));
        assert!(col.values().iter().any(|v| *v > 0.5));
    }

    #[test]
    fn dissipation_identity_by_finite_differences() {
        let p = at_optimum(6);
        let init = windowed_comb_init(&p, 1.5).unwrap();
        let times = uniform_grid(p.echo_time(), 4097).unwrap();
        let traj = trajectory_expm(&init, &times, &p).unwrap();
        let norm: Vec<f64> = traj.states().iter().map(|s| s.norm_sqr()).collect();
        let col = collective_amplitude(&traj);
        let h = times[1] - times[0];
        for i in 2..times.len() - 2 {
            let d =
                (-norm[i + 2] + 8.0 * norm[i + 1] - 8.0 * norm[i - 1] + norm[i - 2]) / (12.0 * h);
            let rate = 2.0 * p.decay_rate() * col.values()[i].powi(2);
            if rate > 1e-3 {
                assert!((-d - rate).abs() <= 1e-4 * rate, "t={}", times[i]);
            }
        }
    }

    #[test]
    fn peaks_trivial_cases() {
        let times = uniform_grid(10.0, 1001).unwrap();
        let flat = Series::new(times.clone(), vec![0.3; 1001], "flat").unwrap();
        assert!(detect_peaks(&flat, 0.0, 1.0).unwrap().is_empty());

        let tri = triangle(4.0, 1.0, 1.0, 1001);
        let peaks = detect_peaks(&tri, 0.25, 1.0).unwrap();
        assert_eq!(peaks.len(), 1);
        let pk = peaks.peaks[0];
        assert_abs_diff_eq!(pk.time, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pk.prominence, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pk.width, 1.0, epsilon = 1e-9);

        assert!(matches!(
            detect_peaks(&tri, 0.25, 0.5),
            Err(Error::Undersampled(_))
        ));
    }

    #[test]
    fn plateau_reports_middle() {
        let times: Vec<f64> = (0..9).map(f64::from).collect();
        let s = Series::new(
            times,
            vec![0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0, 0.0, 0.0],
            "p",
        )
        .unwrap();
        let peaks = detect_peaks(&s, 0.5, 64.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks.peaks[0].time, 3.0);
    }

    #[test]
    fn peaks_shift_and_scale_invariant() {
        let tri = triangle(4.0, 0.7, 0.8, 2001);
        let base = detect_peaks(&tri, 0.2, 1.0).unwrap();
        let shifted = Series::new(
            tri.times().iter().map(|t| t + 3.25).collect(),
            tri.values().to_vec(),
            "shifted",
        )
        .unwrap();
        let s = detect_peaks(&shifted, 0.2, 1.0).unwrap();
        assert_eq!(s.len(), base.len());
        for (a, b) in s.iter().zip(base.iter()) {
            assert_abs_diff_eq!(a.time - 3.25, b.time, epsilon = 1e-12);
            assert_abs_diff_eq!(a.width, b.width, epsilon = 1e-9);
        }
        let scaled = Series::new(
            tri.times().to_vec(),
            tri.values().iter().map(|v| 2.5 * v).collect(),
            "scaled",
        )
        .unwrap();
        let s = detect_peaks(&scaled, 0.5, 1.0).unwrap();
        assert_eq!(s.len(), base.len());
        for (a, b) in s.iter().zip(base.iter()) {
            assert_eq!(a.time, b.time);
            assert_abs_diff_eq!(a.width, b.width, epsilon = 1e-12);
            assert_abs_diff_eq!(a.height, 2.5 * b.height, epsilon = 1e-12);
        }
    }

    #[test]
    fn seven_resonator_energy_difference_features() {
        // Regression lock for the central pair of the N = 7 comb on 4096
        // samples; values agree with an independent scipy peak analysis.
        let p = at_optimum(7);
        let traj = rect_trajectory(&p, 4096);
        let e = energy_difference(&traj, ResonatorIndex(0), ResonatorIndex(1)).unwrap();
        let all = detect_peaks(&e.series, 0.1, p.pulse_duration()).unwrap();
        let expected = [
            (0.346_764_317_319_312_95, 0.113_874_726, 0.521_287_450),
            (3.637_956_621_080_048_7, 0.999_526_063, 0.263_145_484),
            (3.983_186_583_012_993, 0.279_960_074, 0.254_258_864),
            (4.475_714_662_037_327, 0.165_756_474, 0.261_173_840),
            (5.379_449_984_608_456, 0.369_609_890, 1.277_717_965),
        ];
        assert_eq!(all.len(), expected.len());
        for (pk, (t, prom, w)) in all.iter().zip(expected) {
            assert_abs_diff_eq!(pk.time, t, epsilon = 1e-12);
            assert_abs_diff_eq!(pk.prominence, prom, epsilon = 1e-6);
            assert_abs_diff_eq!(pk.width, w, epsilon = 1e-6);
        }
        let strong = detect_peaks(&e.series, 0.5, p.pulse_duration()).unwrap();
        assert_eq!(strong.len(), 1);
        // |e12| touches 1 at three instants.
        let touches: Vec<f64> = all
            .iter()
            .filter(|pk| pk.height > 0.9999)
            .map(|pk| pk.time)
            .collect();
        assert_eq!(touches.len(), 3);
    }

    #[test]
    fn sweep_examples() {
        let p = at_optimum(9);
        let init = windowed_comb_init(&p, 9.0 / 8.0).unwrap();
        let gs = log_grid(
            optimal_coupling(&p) / 10.0,
            10.0 * optimal_coupling(&p),
            201,
        )
        .unwrap();
        let table = sweep_coupling(&p, &gs, &init).unwrap();
        assert_eq!(table.len(), 201);
        let best = sweep_argmax(&table).unwrap();
        assert!((best as i64 - 100).abs() <= 1, "argmax at {best}");
        assert!(table[0].eta_echo < 0.05);
        assert_abs_diff_eq!(table[100].eta0_analytic, 1.0, epsilon = 1e-12);
        for (a, b) in table.iter().zip(table.iter().rev()) {
            assert_abs_diff_eq!(a.eta0_analytic, b.eta0_analytic, epsilon = 1e-9);
        }

        assert!(sweep_coupling(&p, &[0.2, 0.1], &init).is_err());
        assert!(sweep_coupling(&p, &[0.0, 0.1], &init).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.1, 10.0, 3).unwrap();
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-15);
        assert_eq!((g[0], g[2]), (0.1, 10.0));
        assert!(log_grid(1.0, 1.0, 3).is_err());
        let _ = PI;
    }
}
