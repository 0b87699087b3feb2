//! Late-time classification of averaged trajectories by an ordinary least
//! squares fit of `y = a - b log10(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::TrajectoryRecord;
use crate::quantifiers::Quantity;

pub const MIN_FIT_POINTS: usize = 5;

/// Relative slack when matching window edges against grid times.
const EDGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Saturated,
    /// Quantity decreases linearly in `log10 t` (`b > 0`).
    LogDecay,
    /// Quantity increases linearly in `log10 t` (`b < 0`).
    LogGrowth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_low: f64,
    pub t_high: f64,
}

impl FitWindow {
    pub fn new(t_low: f64, t_high: f64) -> Result<Self> {
        if !(t_low.is_finite() && t_high.is_finite() && t_low < t_high) {
            return Err(Error::arg(format!(
                "fit window needs t_low < t_high, got [{t_low}, {t_high}]"
            )));
        }
        Ok(FitWindow { t_low, t_high })
    }

    /// `[t_max / 10, t_max]` of the given times.
    pub fn last_decade(times: &[f64]) -> Result<Self> {
        let t_max = *times
            .last()
            .ok_or_else(|| Error::arg("empty time series"))?;
        Self::new(t_max / 10.0, t_max)
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.t_low * (1.0 - EDGE_TOL) && t <= self.t_high * (1.0 + EDGE_TOL)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSettings {
    /// Slopes with `|b|` (per decade of time) below this count as flat.
    pub abs_tol: f64,
    /// Slopes within `significance * b_stderr` of zero count as flat.
    pub significance: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings {
            abs_tol: 1e-3,
            significance: 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    /// Coefficient of `-log10 t`: change per decade of time.
    pub b: f64,
    pub b_stderr: f64,
    pub rms_residual: f64,
    pub n_points: usize,
    pub label: Label,
}

pub fn classify(fit: &FitResult, abs_tol: f64, significance: f64) -> Label {
    classify_slope(fit.b, fit.b_stderr, abs_tol, significance)
}

fn classify_slope(b: f64, b_stderr: f64, abs_tol: f64, significance: f64) -> Label {
    if b.abs() < abs_tol || b.abs() < significance * b_stderr {
        Label::Saturated
    } else if b > 0.0 {
        Label::LogDecay
    } else {
        Label::LogGrowth
    }
}

/// Fits `values ~ a - b log10(times)` over the points inside `window`.
pub fn fit_series(
    times: &[f64],
    values: &[f64],
    window: FitWindow,
    settings: &ClassifierSettings,
) -> Result<FitResult> {
    if times.len() != values.len() {
        return Err(Error::arg(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let (first, last) = match (times.first(), times.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::arg("empty time series")),
    };
    if window.t_low < first * (1.0 - EDGE_TOL) || window.t_high > last * (1.0 + EDGE_TOL) {
        return Err(Error::arg(format!(
            "fit window [{}, {}] leaves the trajectory range [{first}, {last}]",
            window.t_low, window.t_high
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| window.contains(**t))
        .map(|(t, y)| (-t.log10(), *y))
        .unzip();
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::arg(format!(
            "fit window [{}, {}] holds {n} points, need at least {MIN_FIT_POINTS}",
            window.t_low, window.t_high
        )));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Numeric("non-finite value inside the fit window".into()));
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let b = sxy / sxx;
    let a = y_mean - b * x_mean;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (a + b * x);
            r * r
        })
        .sum();
    let b_stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(FitResult {
        a,
        b,
        b_stderr,
        rms_residual: (ssr / nf).sqrt(),
        n_points: n,
        label: classify_slope(b, b_stderr, settings.abs_tol, settings.significance),
    })
}

/// Fits the disorder-averaged mean of `quantity` with default classifier
/// settings.
pub fn fit_log(traj: &TrajectoryRecord, quantity: Quantity, window: FitWindow) -> Result<FitResult> {
    fit_log_with(traj, quantity, window, &ClassifierSettings::default())
}

pub fn fit_log_with(
    traj: &TrajectoryRecord,
    quantity: Quantity,
    window: FitWindow,
    settings: &ClassifierSettings,
) -> Result<FitResult> {
    fit_series(&traj.times, &traj.means(quantity), window, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::default_time_grid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid() -> Vec<f64> {
        default_time_grid(0.1, 1000.0, 61).unwrap().times().to_vec()
    }

    fn last_decade() -> FitWindow {
        FitWindow::last_decade(&grid()).unwrap()
    }

    #[test]
    fn exact_log_recovery() {
        let t = grid();
        let y: Vec<f64> = t.iter().map(|t| 0.7 - 0.03 * t.log10()).collect();
        let fit = fit_series(&t, &y, last_decade(), &ClassifierSettings::default()).unwrap();
        assert!((fit.a - 0.7).abs() < 1e-10);
        assert!((fit.b - 0.03).abs() < 1e-10);
        assert_eq!(fit.n_points, 16);
        assert_eq!(fit.label, Label::LogDecay);
    }

    #[test]
    fn constant_is_saturated() {
        let t = grid();
        let y = vec![0.5; t.len()];
        let fit = fit_series(&t, &y, last_decade(), &ClassifierSettings::default()).unwrap();
        assert!(fit.b.abs() < 1e-12);
        assert_eq!(fit.label, Label::Saturated);
    }

    #[test]
    fn growth_is_labelled() {
        let t = grid();
        let y: Vec<f64> = t.iter().map(|t| 0.1 + 0.02 * t.log10()).collect();
        let fit = fit_series(&t, &y, last_decade(), &ClassifierSettings::default()).unwrap();
        assert_eq!(fit.label, Label::LogGrowth);
    }

    #[test]
    fn noisy_slope_within_three_stderr() {
        let t = grid();
        let noise = Normal::new(0.0, 1e-3).unwrap();
        let mut covered = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = t
                .iter()
                .map(|t| 0.7 - 0.03 * t.log10() + noise.sample(&mut rng))
                .collect();
            let fit = fit_series(&t, &y, last_decade(), &ClassifierSettings::default()).unwrap();
            if (fit.b - 0.03).abs() <= 3.0 * fit.b_stderr {
                covered += 1;
            }
        }
        // a 3-sigma interval covers ~99.7% of draws (t-distribution with 14 dof: ~99%)
        assert!(covered >= 190, "covered {covered}/200");
    }

    #[test]
    fn classification_rule() {
        let fit = |b, b_stderr| FitResult {
            a: 0.0,
            b,
            b_stderr,
            rms_residual: 0.0,
            n_points: 10,
            label: Label::Saturated,
        };
        assert_eq!(classify(&fit(1e-6, 0.0), 1e-4, 3.0), Label::Saturated);
        assert_eq!(classify(&fit(0.02, 0.001), 1e-4, 3.0), Label::LogDecay);
        assert_eq!(classify(&fit(-0.02, 0.001), 1e-4, 3.0), Label::LogGrowth);
        assert_eq!(classify(&fit(0.02, 0.01), 1e-4, 3.0), Label::Saturated);
    }

    #[test]
    fn window_errors() {
        let t = grid();
        let y = vec![0.0; t.len()];
        let s = ClassifierSettings::default();
        assert!(FitWindow::new(10.0, 1.0).is_err());
        // [900, 1000] holds only two grid points
        assert!(fit_series(&t, &y, FitWindow::new(900.0, 1000.0).unwrap(), &s).is_err());
        assert!(fit_series(&t, &y, FitWindow::new(100.0, 2000.0).unwrap(), &s).is_err());
        assert!(fit_series(&t, &y[1..], last_decade(), &s).is_err());
    }

    proptest! {
        #[test]
        fn fit_is_scale_equivariant(
            a in -1.0f64..1.0, b in -0.1f64..0.1, seed in any::<u64>(), exp in -3i32..3,
        ) {
            let t = grid();
            let noise = Normal::new(0.0, 1e-3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = t.iter().map(|t| a - b * t.log10() + noise.sample(&mut rng)).collect();
            let s = ClassifierSettings::default();
            let base = fit_series(&t, &y, last_decade(), &s).unwrap();

            // powers of two scale every floating-point operation exactly
            let c = 2f64.powi(exp);
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            let fit = fit_series(&t, &scaled, last_decade(), &ClassifierSettings {
                abs_tol: s.abs_tol * c,
                ..s
            }).unwrap();
            prop_assert_eq!(fit.a, base.a * c);
            prop_assert_eq!(fit.b, base.b * c);
            prop_assert_eq!(fit.b_stderr, base.b_stderr * c);
            prop_assert_eq!(fit.label, base.label);

            let c = 3.7;
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            let fit = fit_series(&t, &scaled, last_decade(), &s).unwrap();
            prop_assert!((fit.b - base.b * c).abs() <= 1e-12 * (1.0 + base.b.abs() * c));
            prop_assert!((fit.b_stderr - base.b_stderr * c).abs() <= 1e-9 * base.b_stderr * c);
        }
    }
}
