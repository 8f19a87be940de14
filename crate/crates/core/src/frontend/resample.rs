use alloc::vec::Vec;

use super::{FrontendConfig, Waveform};
use crate::{Error, Result};

/// Linear-interpolation resampling to `cfg.target_rate`.
///
/// Output sample `j` sits at input position `j * src / dst`; the output
/// length is `floor((n - 1) * dst / src) + 1`, so duration is preserved to
/// within one output sample. No anti-alias filter is applied.
pub fn resample(w: &Waveform, cfg: &FrontendConfig) -> Result<Waveform> {
    if w.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let (src, dst) = (w.sample_rate() as u64, cfg.target_rate as u64);
    if dst == 0 {
        return Err(Error::Config("target_rate must be positive".into()));
    }
    if src == dst {
        return Ok(w.clone());
    }
    let x = w.samples();
    let n = x.len() as u64;
    let out_len = (n - 1) * dst / src + 1;
    let out: Vec<f64> = (0..out_len)
        .map(|j| {
            // exact integer position avoids drift on long signals
            let num = j * src;
            let i = (num / dst) as usize;
            let frac = (num % dst) as f64 / dst as f64;
            let a = x[i];
            let b = x.get(i + 1).copied().unwrap_or(a);
            a + (b - a) * frac
        })
        .collect();
    Waveform::new(out, cfg.target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn identity_at_target_rate() {
        let w = Waveform::new(vec![0.1, -0.2, 0.3], 16_000).unwrap();
        assert_eq!(resample(&w, &FrontendConfig::default()).unwrap(), w);
    }

    #[test]
    fn decimation_length() {
        for n in [1usize, 2, 1000, 4801] {
            let w = Waveform::new(vec![0.0; 2 * n], 32_000).unwrap();
            let out = resample(&w, &FrontendConfig::default()).unwrap();
            assert!(out.len().abs_diff(n) <= 1, "{n} -> {}", out.len());
        }
    }

    #[test]
    fn empty_input() {
        let w = Waveform::new(vec![], 8_000).unwrap();
        assert_eq!(resample(&w, &FrontendConfig::default()), Err(Error::EmptyAudio));
    }

    #[test]
    fn tone_keeps_its_frequency() {
        let n = 4000;
        let s = (0..n).map(|i| libm::sin(2.0 * PI * 440.0 * i as f64 / 8000.0)).collect();
        let out = resample(&Waveform::new(s, 8_000).unwrap(), &FrontendConfig::default()).unwrap();
        let y = out.samples();
        let m = y.len();
        // naive DFT magnitude over bins up to 1 kHz
        let bin_hz = 16_000.0 / m as f64;
        let max_bin = (1000.0 / bin_hz) as usize;
        let mag = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in y.iter().enumerate() {
                let ph = 2.0 * PI * (k * i) as f64 / m as f64;
                re += v * libm::cos(ph);
                im -= v * libm::sin(ph);
            }
            re * re + im * im
        };
        let best = (1..max_bin).max_by(|&a, &b| mag(a).total_cmp(&mag(b))).unwrap();
        let expect = 440.0 / bin_hz;
        assert!((best as f64 - expect).abs() <= 1.0, "bin {best} vs {expect}");
    }
}
