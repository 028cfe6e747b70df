//! Subject-free template spectra and their subtraction.

use alloc::vec::Vec;

use super::receiver::Receiver;
use super::spectrum::FrameSpectrum;
use super::DspError;
use crate::channel::Scene;
use crate::Complex;

/// Per-bin mean spectrum of frames recorded without the subject present.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Template {
    pub mean_spectrum: Vec<Complex>,
    pub frames_averaged: usize,
    pub bin_resolution: f64,
}

impl Template {
    pub fn from_spectra(frames: &[FrameSpectrum]) -> Result<Self, DspError> {
        let first = frames.first().ok_or(DspError::EmptyTemplate)?;
        let bins = first.len();
        let mut acc = alloc::vec![Complex::new(0.0, 0.0); bins];
        for f in frames {
            if f.len() != bins {
                return Err(DspError::LengthMismatch { left: f.len(), right: bins });
            }
            acc.iter_mut().zip(&f.bins).for_each(|(a, b)| *a += b);
        }
        let scale = 1.0 / frames.len() as f64;
        acc.iter_mut().for_each(|a| *a *= scale);
        Ok(Self {
            mean_spectrum: acc,
            frames_averaged: frames.len(),
            bin_resolution: first.bin_resolution,
        })
    }

    pub fn len(&self) -> usize {
        self.mean_spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_spectrum.is_empty()
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.frames_averaged == 0 {
            return Err(DspError::EmptyTemplate);
        }
        if self.mean_spectrum.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(DspError::NonFinite);
        }
        Ok(())
    }
}

/// Residual = frame − template, bin by bin.
pub fn cancel_static(frame: &FrameSpectrum, template: &Template) -> Result<FrameSpectrum, DspError> {
    if frame.len() != template.len() {
        return Err(DspError::LengthMismatch { left: frame.len(), right: template.len() });
    }
    Ok(FrameSpectrum {
        bins: frame.bins.iter().zip(&template.mean_spectrum).map(|(f, t)| f - t).collect(),
        bin_resolution: frame.bin_resolution,
        frame_index: frame.frame_index,
    })
}

/// Transmits `n_frames` chirps into a scene without the subject and averages
/// the resulting spectra.
pub fn capture_template(
    scene_without_subject: &Scene,
    receiver: &Receiver,
    n_frames: usize,
) -> Result<Template, DspError> {
    if n_frames == 0 {
        return Err(DspError::EmptyTemplate);
    }
    let tx = receiver.config().chirp.synthesize_frames(n_frames)?;
    let rx = scene_without_subject.propagate(&tx)?;
    let spectra = receiver.spectra(&rx)?;
    Template::from_spectra(&spectra.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(values: &[(f64, f64)], idx: usize) -> FrameSpectrum {
        FrameSpectrum {
            bins: values.iter().map(|&(a, b)| Complex::new(a, b)).collect(),
            bin_resolution: 10.0,
            frame_index: idx,
        }
    }

    #[test]
    fn single_frame_template_is_that_frame() {
        let f = frame(&[(1.0, 2.0), (-3.0, 0.5)], 0);
        let t = Template::from_spectra(core::slice::from_ref(&f)).unwrap();
        assert_eq!(t.mean_spectrum, f.bins);
        assert_eq!(t.frames_averaged, 1);
    }

    #[test]
    fn frame_minus_itself_is_zero() {
        let f = frame(&[(1.0, 2.0), (-3.0, 0.5), (0.0, 9.0)], 4);
        let t = Template::from_spectra(core::slice::from_ref(&f)).unwrap();
        let r = cancel_static(&f, &t).unwrap();
        assert!(r.bins.iter().all(|z| z.norm() == 0.0));
        assert_eq!(r.frame_index, 4);
    }

    #[test]
    fn cancellation_is_linear() {
        let f1 = frame(&[(1.0, 2.0), (-3.0, 0.5)], 0);
        let f2 = frame(&[(0.25, -1.0), (4.0, 1.5)], 0);
        let t = Template::from_spectra(&[frame(&[(0.5, 0.5), (1.0, -2.0)], 0)]).unwrap();
        let sum = frame(&[(1.25, 1.0), (1.0, 2.0)], 0);
        let t2 = Template {
            mean_spectrum: t.mean_spectrum.iter().map(|z| z * 2.0).collect(),
            ..t.clone()
        };
        let lhs = cancel_static(&sum, &t2).unwrap();
        let r1 = cancel_static(&f1, &t).unwrap();
        let r2 = cancel_static(&f2, &t).unwrap();
        for k in 0..2 {
            assert!((lhs.bins[k] - (r1.bins[k] + r2.bins[k])).norm() < 1e-15);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(Template::from_spectra(&[]), Err(DspError::EmptyTemplate));
        let t = Template::from_spectra(&[frame(&[(1.0, 0.0)], 0)]).unwrap();
        assert!(matches!(
            cancel_static(&frame(&[(1.0, 0.0), (2.0, 0.0)], 0), &t),
            Err(DspError::LengthMismatch { .. })
        ));
    }
}
