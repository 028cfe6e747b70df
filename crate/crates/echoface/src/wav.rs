//! Mono 16-bit PCM WAV files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use echoface_core::chirp::{dequantize_pcm16, quantize_pcm16, Pcm16Buffer, SampleBuffer};

/// Scale applied to simulated recordings before quantization. Leaves room
/// for the peaks of 0 dB ambient noise on top of the echoes.
pub const RECORDING_GAIN: f64 = 0.25;

fn spec(sample_rate: u32) -> hound::WavSpec {
    hound::WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int }
}

pub fn write_pcm16(path: &Path, pcm: &Pcm16Buffer) -> Result<()> {
    let mut w = hound::WavWriter::create(path, spec(pcm.sample_rate))
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut i16_writer = w.get_i16_writer(pcm.codes.len() as u32);
    for &c in &pcm.codes {
        i16_writer.write_sample(c);
    }
    i16_writer.flush()?;
    w.finalize().with_context(|| format!("cannot finish {}", path.display()))?;
    Ok(())
}

/// Quantizes and writes `buf`, returning the number of clipped samples.
pub fn write_samples(path: &Path, buf: &SampleBuffer) -> Result<usize> {
    let pcm = quantize_pcm16(buf);
    if pcm.clipped > 0 {
        log::warn!("{}: {} samples clipped to full scale", path.display(), pcm.clipped);
    }
    write_pcm16(path, &pcm)?;
    Ok(pcm.clipped)
}

pub fn read_pcm16(path: &Path) -> Result<Pcm16Buffer> {
    let mut r = hound::WavReader::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let s = r.spec();
    if s.channels != 1 || s.bits_per_sample != 16 || s.sample_format != hound::SampleFormat::Int {
        bail!(
            "{}: expected mono 16-bit PCM, found {} channel(s), {} bits, {:?}",
            path.display(),
            s.channels,
            s.bits_per_sample,
            s.sample_format
        );
    }
    let codes = r
        .samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("{}: truncated sample data", path.display()))?;
    Ok(Pcm16Buffer { codes, sample_rate: s.sample_rate, clipped: 0 })
}

pub fn read_samples(path: &Path) -> Result<SampleBuffer> {
    Ok(dequantize_pcm16(&read_pcm16(path)?))
}

/// Scales by [`RECORDING_GAIN`] and passes through 16-bit quantization, as a
/// recording written to and read back from disk would be.
pub fn as_recorded(buf: &SampleBuffer) -> SampleBuffer {
    let scaled = SampleBuffer::new(buf.samples.iter().map(|s| s * RECORDING_GAIN).collect(), buf.sample_rate);
    let pcm = quantize_pcm16(&scaled);
    if pcm.clipped > 0 {
        log::warn!("recording clipped at {} samples", pcm.clipped);
    }
    dequantize_pcm16(&pcm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let pcm = Pcm16Buffer { codes: vec![0, 1, -1, i16::MAX, -i16::MAX, 1234], sample_rate: 44_100, clipped: 0 };
        write_pcm16(&path, &pcm).unwrap();
        assert_eq!(read_pcm16(&path).unwrap(), pcm);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"RIFF");
        assert_eq!(&bytes[8..12], b"WAVE");
        assert_eq!(bytes.len(), 44 + 2 * pcm.codes.len());
    }

    #[test]
    fn stereo_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = hound::WavSpec { channels: 2, ..spec(44_100) };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(read_pcm16(&path).is_err());
    }

    #[test]
    fn clipping_is_counted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        let clipped = write_samples(&path, &SampleBuffer::new(vec![0.5, 1.5, -2.0], 44_100.0)).unwrap();
        assert_eq!(clipped, 2);
        assert_eq!(read_pcm16(&path).unwrap().codes, vec![16384, 32767, -32767]);
    }
}
