//! Distance series between paired trajectories and their decay laws,
//!
//! ```text
//! power law     d_t ∝ t^(-c_a)   (straight in log-log)
//! exponential   d_t ∝ c_b^t      (straight in semi-log)
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::format;

/// Distances below this are treated as floating-point floor.
pub const DISTANCE_FLOOR: f64 = 1e-13;
/// Steps dropped from the start of an automatic window.
pub const TRANSIENT_STEPS: u64 = 10;
pub const MIN_FIT_POINTS: usize = 30;
/// Required `r²` advantage for a classification.
pub const R2_MARGIN: f64 = 0.02;
/// Grid density of the curvature diagnostic.
pub const CURVATURE_POINTS_PER_DECADE: f64 = 10.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceSeries {
    points: Vec<(u64, f64)>,
    /// Step at which the distance became exactly zero.
    pub truncated_at: Option<u64>,
}

impl DistanceSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics if `t` does not increase or `d` is negative or NaN.
    pub fn push(&mut self, t: u64, d: f64) {
        assert!(d >= 0.0, "distance {d} must be non-negative");
        if let Some(&(last, _)) = self.points.last() {
            assert!(t > last, "t must increase ({t} after {last})");
        }
        self.points.push((t, d));
    }

    /// Builds a series from `(t, d)` pairs, recording the first exact zero.
    pub fn from_points(points: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut s = Self::new();
        for (t, d) in points {
            s.push(t, d);
            if d == 0.0 && s.truncated_at.is_none() {
                s.truncated_at = Some(t);
            }
        }
        s
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance at step `t`, if recorded.
    pub fn at(&self, t: u64) -> Option<f64> {
        self.points
            .binary_search_by_key(&t, |&(s, _)| s)
            .ok()
            .map(|i| self.points[i].1)
    }

    /// CSV with header `t,d`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,d\n");
        for &(t, d) in &self.points {
            out.push_str(&format!("{t},{}\n", format::float(d)));
        }
        out
    }

    fn usable(&self, window: (u64, u64)) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .filter(move |&&(t, d)| t >= window.0 && t <= window.1 && t > 0 && d > DISTANCE_FLOOR)
            .map(|&(t, d)| (t as f64, d.ln()))
    }
}

struct Line {
    slope: f64,
    r2: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Line { slope, r2 }
}

fn collect(
    series: &DistanceSeries,
    window: (u64, u64),
    log_t: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .usable(window)
        .map(|(t, ld)| (if log_t { t.ln() } else { t }, ld))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            need: MIN_FIT_POINTS,
            got: xs.len(),
        });
    }
    Ok((xs, ys))
}

/// Least squares of `ln d` on `ln t` over `window` (inclusive); returns
/// `(c_a, r²)` with `c_a` the negated slope.
pub fn fit_power_law(series: &DistanceSeries, window: (u64, u64)) -> Result<(f64, f64)> {
    let (xs, ys) = collect(series, window, true)?;
    let line = ols(&xs, &ys);
    Ok((-line.slope, line.r2))
}

/// Least squares of `ln d` on `t` over `window` (inclusive); returns
/// `(c_b, r²)` with `c_b = exp(slope)`.
pub fn fit_exponential(series: &DistanceSeries, window: (u64, u64)) -> Result<(f64, f64)> {
    let (xs, ys) = collect(series, window, false)?;
    let line = ols(&xs, &ys);
    Ok((line.slope.exp(), line.r2))
}

/// Mean change of the log-log slope between consecutive points of a
/// geometric grid (10 per decade) over `window`. Negative means the log-log
/// curve bends down. Needs at least three distinct grid steps.
pub fn loglog_curvature(series: &DistanceSeries, window: (u64, u64)) -> Option<f64> {
    let lo = window.0.max(1);
    let hi = window.1;
    if hi <= lo {
        return None;
    }
    let mut grid: Vec<(f64, f64)> = Vec::new();
    let decades = (hi as f64 / lo as f64).log10();
    let count = (decades * CURVATURE_POINTS_PER_DECADE).floor() as u32;
    for j in 0..=count {
        let t = (lo as f64 * 10f64.powf(j as f64 / CURVATURE_POINTS_PER_DECADE)).round() as u64;
        let t = t.min(hi);
        if grid
            .last()
            .is_some_and(|&(prev, _)| prev == (t as f64).ln())
        {
            continue;
        }
        if let Some(d) = series.at(t).filter(|&d| d > DISTANCE_FLOOR) {
            grid.push(((t as f64).ln(), d.ln()));
        }
    }
    let slopes: Vec<f64> = grid
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    if slopes.len() < 3 {
        return None;
    }
    Some((slopes[slopes.len() - 1] - slopes[0]) / (slopes.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayLaw {
    PowerLaw,
    Exponential,
    Inconclusive,
}

impl fmt::Display for DecayLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayLaw::PowerLaw => "power-law",
            DecayLaw::Exponential => "exponential",
            DecayLaw::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub law: DecayLaw,
    /// Power-law exponent, present only for `PowerLaw`.
    pub c_a: Option<f64>,
    /// Exponential base per step, present only for `Exponential`.
    pub c_b: Option<f64>,
    pub r2_loglog: f64,
    pub r2_semilog: f64,
    pub window: (u64, u64),
    pub truncated_at: Option<u64>,
    pub loglog_curvature: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(format::float).unwrap_or_default()
}

impl DecayFit {
    pub const CSV_HEADER: &'static str =
        "law,c_a,c_b,r2_loglog,r2_semilog,t_lo,t_hi,truncated_at,loglog_curvature";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.law,
            opt(self.c_a),
            opt(self.c_b),
            format::float(self.r2_loglog),
            format::float(self.r2_semilog),
            self.window.0,
            self.window.1,
            self.truncated_at.map(|t| t.to_string()).unwrap_or_default(),
            opt(self.loglog_curvature)
        )
    }

    pub fn report(&self) -> String {
        let none = || "-".to_string();
        let mut out = String::new();
        out.push_str(&format!("law               {}\n", self.law));
        out.push_str(&format!(
            "c_a               {}\n",
            self.c_a.map(format::float).unwrap_or_else(none)
        ));
        out.push_str(&format!(
            "c_b               {}\n",
            self.c_b.map(format::float).unwrap_or_else(none)
        ));
        out.push_str(&format!(
            "r2_loglog         {}\n",
            format::float(self.r2_loglog)
        ));
        out.push_str(&format!(
            "r2_semilog        {}\n",
            format::float(self.r2_semilog)
        ));
        out.push_str(&format!(
            "window            {}..{}\n",
            self.window.0, self.window.1
        ));
        out.push_str(&format!(
            "truncated_at      {}\n",
            self.truncated_at
                .map(|t| t.to_string())
                .unwrap_or_else(none)
        ));
        out.push_str(&format!(
            "loglog_curvature  {}\n",
            self.loglog_curvature
                .map(format::float)
                .unwrap_or_else(none)
        ));
        out
    }
}

/// Automatic window: steps from 10 on whose distance is at least 1e-13.
pub fn auto_window(series: &DistanceSeries) -> Option<(u64, u64)> {
    let mut kept = series
        .points()
        .iter()
        .filter(|&&(t, d)| t >= TRANSIENT_STEPS && d >= DISTANCE_FLOOR)
        .map(|&(t, _)| t);
    let first = kept.next()?;
    Some((first, kept.next_back().unwrap_or(first)))
}

/// Fits both laws on the automatic window and keeps the one whose `r²` is
/// higher by more than 0.02.
pub fn classify_decay(series: &DistanceSeries) -> DecayFit {
    let mut fit = DecayFit {
        law: DecayLaw::Inconclusive,
        c_a: None,
        c_b: None,
        r2_loglog: 0.0,
        r2_semilog: 0.0,
        window: (0, 0),
        truncated_at: series.truncated_at,
        loglog_curvature: None,
    };
    let Some(window) = auto_window(series) else {
        return fit;
    };
    fit.window = window;
    fit.loglog_curvature = loglog_curvature(series, window);
    let (Ok((c_a, r2_ll)), Ok((c_b, r2_sl))) = (
        fit_power_law(series, window),
        fit_exponential(series, window),
    ) else {
        return fit;
    };
    fit.r2_loglog = r2_ll;
    fit.r2_semilog = r2_sl;
    if r2_ll > r2_sl + R2_MARGIN {
        fit.law = DecayLaw::PowerLaw;
        fit.c_a = Some(c_a);
    } else if r2_sl > r2_ll + R2_MARGIN {
        fit.law = DecayLaw::Exponential;
        fit.c_b = Some(c_b);
    }
    fit
}
