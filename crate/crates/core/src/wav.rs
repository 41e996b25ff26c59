//! Mono 16-bit PCM WAV at 16 kHz. Samples are scaled by 1/32768 on read.

use std::path::Path;

use crate::error::{with_path, Error, Result};
use crate::SAMPLE_RATE;

#[derive(Debug, Clone, PartialEq)]
pub struct WavAudio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl WavAudio {
    pub fn new(samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: SAMPLE_RATE,
        }
    }
}

fn format_err(e: hound::Error) -> Error {
    match e {
        // hound reports short reads as plain io errors
        hound::Error::IoError(io)
            if matches!(io.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            Error::Format(format!("truncated wav file: {io}"))
        }
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Format(format!("invalid wav: {other}")),
    }
}

pub fn pcm16_to_float(v: i16) -> f64 {
    v as f64 / 32768.0
}

/// Round to the nearest PCM16 code, saturating at full scale.
pub fn float_to_pcm16(v: f64) -> i16 {
    (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn check_spec(spec: &hound::WavSpec) -> Result<()> {
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Format(format!(
            "expected 16-bit integer PCM, got {}-bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    if spec.channels != 1 {
        return Err(Error::Format(format!(
            "expected mono audio, got {} channels",
            spec.channels
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(Error::Format(format!(
            "unsupported sample rate {} Hz, expected {SAMPLE_RATE} Hz",
            spec.sample_rate
        )));
    }
    Ok(())
}

pub fn read_wav_from<R: std::io::Read>(reader: R) -> Result<WavAudio> {
    let reader = hound::WavReader::new(reader).map_err(format_err)?;
    let spec = reader.spec();
    check_spec(&spec)?;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(pcm16_to_float).map_err(format_err))
        .collect::<Result<Vec<_>>>()?;
    Ok(WavAudio {
        samples,
        sample_rate: spec.sample_rate,
    })
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavAudio> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| with_path(e, path))?;
    read_wav_from(std::io::BufReader::new(file))
}

pub fn write_wav(path: impl AsRef<Path>, audio: &WavAudio) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    check_spec(&spec)?;
    let mut writer = hound::WavWriter::create(path, spec).map_err(format_err)?;
    for &s in &audio.samples {
        writer.write_sample(float_to_pcm16(s)).map_err(format_err)?;
    }
    writer.finalize().map_err(format_err)
}
