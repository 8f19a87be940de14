//! Raw audio to 0.96 s log-mel segment patches.
//!
//! Pipeline: linear-interpolation resampling to the target rate, a Hamming
//! windowed STFT (FFT size is the next power of two above the window), a
//! triangular mel filterbank on the `2595 * log10(1 + f / 700)` scale,
//! `ln(energy + log_offset)`, then non-overlapping patches of
//! `segment_frames` frames with a zero-padded tail.

mod mel;
mod resample;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use mel::{hz_to_mel, mel_to_hz, MelFilterbank};
pub use resample::resample;

use crate::{Error, Result};

/// Mono audio signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data(format!("non-finite audio sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FrontendConfig {
    pub target_rate: u32,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub segment_frames: usize,
    pub log_offset: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            target_rate: 16_000,
            window_ms: 25.0,
            hop_ms: 10.0,
            n_mels: 64,
            f_min: 125.0,
            f_max: 7500.0,
            segment_frames: 96,
            log_offset: 0.01,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::Config(m));
        if self.target_rate == 0 {
            return bad("target_rate must be positive".into());
        }
        let nyquist = self.target_rate as f64 / 2.0;
        if !(self.f_min >= 0.0 && self.f_min < self.f_max && self.f_max <= nyquist) {
            return bad(format!(
                "need 0 <= f_min < f_max <= {nyquist} Hz, got f_min={} f_max={}",
                self.f_min, self.f_max
            ));
        }
        if !(self.hop_ms > 0.0 && self.window_ms > self.hop_ms) {
            return bad(format!(
                "need window_ms > hop_ms > 0, got {} and {}",
                self.window_ms, self.hop_ms
            ));
        }
        let expected = libm::round(960.0 / self.hop_ms) as usize;
        if self.segment_frames != expected {
            return bad(format!(
                "segment_frames must be round(0.96 s / hop) = {expected}, got {}",
                self.segment_frames
            ));
        }
        if self.n_mels == 0 {
            return bad("n_mels must be positive".into());
        }
        if !(self.log_offset > 0.0) {
            return bad("log_offset must be positive".into());
        }
        if self.win_samples() == 0 || self.hop_samples() == 0 {
            return bad("window and hop must span at least one sample".into());
        }
        Ok(())
    }

    pub fn win_samples(&self) -> usize {
        libm::round(self.target_rate as f64 * self.window_ms / 1000.0) as usize
    }

    pub fn hop_samples(&self) -> usize {
        libm::round(self.target_rate as f64 * self.hop_ms / 1000.0) as usize
    }

    pub fn n_fft(&self) -> usize {
        self.win_samples().next_power_of_two()
    }

    pub fn n_fft_bins(&self) -> usize {
        self.n_fft() / 2 + 1
    }

    /// Number of STFT frames for a signal of `len` samples (`len` shorter
    /// than one window is padded to a single frame).
    pub fn frame_count(&self, len: usize) -> usize {
        let win = self.win_samples();
        if len <= win {
            1
        } else {
            1 + (len - win) / self.hop_samples()
        }
    }

    pub fn patch_len(&self) -> usize {
        self.segment_frames * self.n_mels
    }
}

/// `T x n_mels` log mel energies, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelFrames {
    data: Vec<f64>,
    n_mels: usize,
    hop_secs: f64,
}

impl LogMelFrames {
    pub fn new(data: Vec<f64>, n_mels: usize, hop_secs: f64) -> Result<Self> {
        if n_mels == 0 || !data.len().is_multiple_of(n_mels) {
            return Err(Error::Dim {
                expected: n_mels,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite log-mel value".into()));
        }
        Ok(Self {
            data,
            n_mels,
            hop_secs,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / self.n_mels
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn hop_secs(&self) -> f64 {
        self.hop_secs
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_mels..(t + 1) * self.n_mels]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// One `segment_frames x n_mels` log-mel patch, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPatch {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SegmentPatch {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dim {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.54 - 0.46 * libm::cos(2.0 * core::f64::consts::PI * i as f64 / denom))
        .collect()
}

fn sq(x: f32) -> f64 {
    let x = x as f64;
    x * x
}

macro_rules! rfft_dispatch {
    ($frame:expr, $n:expr, $($size:literal => $f:ident),* $(,)?) => {
        match $n {
            $($size => {
                let mut buf = [0f32; $size];
                for (b, &x) in buf.iter_mut().zip($frame) {
                    *b = x as f32;
                }
                let spec = microfft::real::$f(&mut buf);
                let mut power = vec![0.0; $size / 2 + 1];
                // bin 0 packs DC in re and Nyquist in im
                power[0] = sq(spec[0].re);
                power[$size / 2] = sq(spec[0].im);
                for k in 1..$size / 2 {
                    let c = spec[k];
                    power[k] = sq(c.re) + sq(c.im);
                }
                Ok(power)
            })*
            other => Err(Error::Config(format!("unsupported FFT size {other} (64..=4096)"))),
        }
    };
}

/// `|FFT|^2` of a zero-padded frame, `n_fft / 2 + 1` bins.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Result<Vec<f64>> {
    if frame.len() > n_fft {
        return Err(Error::Dim {
            expected: n_fft,
            found: frame.len(),
        });
    }
    rfft_dispatch!(frame, n_fft,
        64 => rfft_64, 128 => rfft_128, 256 => rfft_256, 512 => rfft_512,
        1024 => rfft_1024, 2048 => rfft_2048, 4096 => rfft_4096,
    )
}

/// Log-mel frames of a waveform already at `cfg.target_rate`.
pub fn compute_log_mel(w: &Waveform, cfg: &FrontendConfig) -> Result<LogMelFrames> {
    cfg.validate()?;
    if w.sample_rate() != cfg.target_rate {
        return Err(Error::Config(format!(
            "waveform at {} Hz, frontend expects {} Hz; resample first",
            w.sample_rate(),
            cfg.target_rate
        )));
    }
    let fb = MelFilterbank::new(cfg, cfg.n_fft_bins())?;
    let (win, hop, n_fft) = (cfg.win_samples(), cfg.hop_samples(), cfg.n_fft());
    let window = hamming(win);

    let padded: Vec<f64>;
    let samples = if w.len() < win {
        padded = w.samples().iter().copied().chain(core::iter::repeat(0.0)).take(win).collect();
        &padded[..]
    } else {
        w.samples()
    };
    let frames = cfg.frame_count(samples.len());
    let mut data = Vec::with_capacity(frames * cfg.n_mels);
    let mut frame = vec![0.0; win];
    for t in 0..frames {
        let start = t * hop;
        for ((f, &x), &h) in frame.iter_mut().zip(&samples[start..start + win]).zip(&window) {
            *f = x * h;
        }
        let power = power_spectrum(&frame, n_fft)?;
        data.extend(fb.apply(&power).into_iter().map(|e| libm::log(e + cfg.log_offset)));
    }
    LogMelFrames::new(data, cfg.n_mels, cfg.hop_ms / 1000.0)
}

/// Cuts frames into non-overlapping patches, zero-padding the last one.
/// Zero frames still yield one all-zero patch.
pub fn segment_patches(lm: &LogMelFrames, cfg: &FrontendConfig) -> Result<Vec<SegmentPatch>> {
    if lm.n_mels() != cfg.n_mels {
        return Err(Error::Dim {
            expected: cfg.n_mels,
            found: lm.n_mels(),
        });
    }
    let rows = cfg.segment_frames;
    let cols = cfg.n_mels;
    if lm.num_frames() == 0 {
        return Ok(vec![SegmentPatch::zeros(rows, cols)]);
    }
    Ok(lm
        .data()
        .chunks(rows * cols)
        .map(|chunk| {
            let mut data = chunk.to_vec();
            data.resize(rows * cols, 0.0);
            SegmentPatch { rows, cols, data }
        })
        .collect())
}

/// Resample, log-mel and segment in one call.
pub fn extract_patches(w: &Waveform, cfg: &FrontendConfig) -> Result<Vec<SegmentPatch>> {
    let at_rate = resample(w, cfg)?;
    let lm = compute_log_mel(&at_rate, cfg)?;
    segment_patches(&lm, cfg)
}
