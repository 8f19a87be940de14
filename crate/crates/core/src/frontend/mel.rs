use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::FrontendConfig;
use crate::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Triangular filters with `n_mels + 2` breakpoints equally spaced in mel
/// between `f_min` and `f_max`. Filter `m` rises from breakpoint `m`, peaks
/// at `m + 1` and falls to zero at `m + 2`. Weights are unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_mels: usize,
    n_bins: usize,
    weights: Vec<f64>,
    breakpoints_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(cfg: &FrontendConfig, n_bins: usize) -> Result<Self> {
        let nyquist = cfg.target_rate as f64 / 2.0;
        if cfg.f_max > nyquist {
            return Err(Error::Config(format!(
                "f_max {} Hz exceeds Nyquist {nyquist} Hz",
                cfg.f_max
            )));
        }
        if !(cfg.f_min >= 0.0 && cfg.f_min < cfg.f_max) || cfg.n_mels == 0 || n_bins < 2 {
            return Err(Error::Config(format!(
                "bad filterbank request: f_min={} f_max={} n_mels={} n_bins={n_bins}",
                cfg.f_min, cfg.f_max, cfg.n_mels
            )));
        }
        let n_fft = 2 * (n_bins - 1);
        let bin_hz = cfg.target_rate as f64 / n_fft as f64;
        let (lo, hi) = (hz_to_mel(cfg.f_min), hz_to_mel(cfg.f_max));
        let step = (hi - lo) / (cfg.n_mels + 1) as f64;
        let breakpoints_hz: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| mel_to_hz(lo + step * i as f64))
            .collect();

        let mut weights = vec![0.0; cfg.n_mels * n_bins];
        for m in 0..cfg.n_mels {
            let (left, center, right) = (breakpoints_hz[m], breakpoints_hz[m + 1], breakpoints_hz[m + 2]);
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let rise = (f - left) / (center - left);
                let fall = (right - f) / (right - center);
                weights[m * n_bins + k] = rise.min(fall).max(0.0);
            }
        }
        Ok(Self {
            n_mels: cfg.n_mels,
            n_bins,
            weights,
            breakpoints_hz,
        })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.breakpoints_hz[1..=self.n_mels]
    }

    pub fn breakpoints_hz(&self) -> &[f64] {
        &self.breakpoints_hz
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.n_mels)
            .map(|m| self.row(m).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}
