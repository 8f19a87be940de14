//! WAV decoding into mono [`Waveform`]s.

use std::path::Path;

use convo_affect_core::frontend::Waveform;
use hound::{SampleFormat, WavReader};

use crate::error::{Error, Result};

/// Reads integer PCM (scaled to `[-1, 1)`) or float WAV, averaging channels.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let fmt_err = |e: hound::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut reader = WavReader::open(path).map_err(fmt_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(fmt_err)?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(fmt_err)?
        }
    };
    let mono = interleaved
        .chunks(channels)
        .map(|c| c.iter().sum::<f64>() / channels as f64)
        .collect();
    Ok(Waveform::new(mono, spec.sample_rate)?)
}

pub fn write_wav_i16(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let fmt_err = |e: hound::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut w = hound::WavWriter::create(path, spec).map_err(fmt_err)?;
    for &s in samples {
        w.write_sample((s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16)
            .map_err(fmt_err)?;
    }
    w.finalize().map_err(fmt_err)
}
