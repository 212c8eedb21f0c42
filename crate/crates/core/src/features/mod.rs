//! Per-frame acoustic features: 23-dim log-Mel filterbank energies
//! (primary) and 13-dim MFCCs (comparison).
//!
//! Frame geometry follows HTK defaults (25 ms Hamming frames, 10 ms hop,
//! 0.97 pre-emphasis, HTK mel scale `2595*log10(1 + f/700)`). Individual
//! stages are exact `f64`; only the assembled [`FeatureSequence`] is
//! rounded through `f32` so that in-memory extraction and the 32-bit disk
//! cache yield identical values.

mod fft;
pub mod cache;

use crate::corpus::{self, CorpusError, TrimConfig, Utterance};
use crate::tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("buffer of {len} samples is shorter than one frame ({frame_len})")]
    TooShort { len: usize, frame_len: usize },
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("invalid feature configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("feature cache i/o on {path}: {detail}")]
    Cache { path: std::path::PathBuf, detail: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Lmfb,
    Mfcc,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Lmfb => "lmfb",
            FeatureKind::Mfcc => "mfcc",
        }
    }

    pub fn from_name(name: &str) -> Option<FeatureKind> {
        match name {
            "lmfb" => Some(FeatureKind::Lmfb),
            "mfcc" => Some(FeatureKind::Mfcc),
            _ => None,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            FeatureKind::Lmfb => 0,
            FeatureKind::Mfcc => 1,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<FeatureKind> {
        match code {
            0 => Some(FeatureKind::Lmfb),
            1 => Some(FeatureKind::Mfcc),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeatureConfig {
    pub frame_length_s: f64,
    pub frame_hop_s: f64,
    /// FFT size; `None` picks the next power of two >= frame length.
    pub n_fft: Option<usize>,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub low_freq_hz: f64,
    /// `None` means the Nyquist frequency.
    pub high_freq_hz: Option<f64>,
    pub log_floor: f64,
    /// Pre-emphasis coefficient applied before framing; `None` disables.
    pub pre_emphasis: Option<f64>,
    /// Silence trimming ahead of framing; `None` disables.
    pub trim: Option<TrimConfig>,
    pub kind: FeatureKind,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame_length_s: 0.025,
            frame_hop_s: 0.010,
            n_fft: None,
            n_mels: 23,
            n_ceps: 13,
            low_freq_hz: 0.0,
            high_freq_hz: None,
            log_floor: 1e-10,
            pre_emphasis: Some(0.97),
            trim: Some(TrimConfig::default()),
            kind: FeatureKind::Lmfb,
        }
    }
}

impl FeatureConfig {
    /// Feature dimension produced by [`extract_features`].
    pub fn dim(&self) -> usize {
        match self.kind {
            FeatureKind::Lmfb => self.n_mels,
            FeatureKind::Mfcc => self.n_ceps,
        }
    }

    pub fn frame_len_samples(&self, sample_rate: u32) -> usize {
        (self.frame_length_s * sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.frame_hop_s * sample_rate as f64).round() as usize
    }

    pub fn fft_size(&self, sample_rate: u32) -> usize {
        self.n_fft
            .unwrap_or_else(|| self.frame_len_samples(sample_rate).next_power_of_two())
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), FeatureError> {
        if sample_rate == 0 {
            return Err(FeatureError::Config("sample rate must be > 0".into()));
        }
        if !(self.frame_hop_s > 0.0 && self.frame_hop_s <= self.frame_length_s) {
            return Err(FeatureError::Config(format!(
                "need 0 < hop <= frame length, got hop {} / frame {}",
                self.frame_hop_s, self.frame_length_s
            )));
        }
        if self.n_mels < 1 {
            return Err(FeatureError::Config("n_mels must be >= 1".into()));
        }
        if self.n_ceps > self.n_mels {
            return Err(FeatureError::Config(format!(
                "n_ceps {} exceeds n_mels {}",
                self.n_ceps, self.n_mels
            )));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let high = self.high_freq_hz.unwrap_or(nyquist);
        if !(self.low_freq_hz >= 0.0 && self.low_freq_hz < high && high <= nyquist) {
            return Err(FeatureError::Config(format!(
                "need 0 <= low < high <= nyquist, got {} / {high} (nyquist {nyquist})",
                self.low_freq_hz
            )));
        }
        if self.log_floor <= 0.0 {
            return Err(FeatureError::Config("log floor must be positive".into()));
        }
        let fft = self.fft_size(sample_rate);
        if !fft.is_power_of_two() || fft < self.frame_len_samples(sample_rate) {
            return Err(FeatureError::Config(format!(
                "FFT size {fft} must be a power of two >= frame length"
            )));
        }
        Ok(())
    }
}

/// A T x D matrix of per-frame features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub frames: Tensor,
    pub frame_rate_hz: f64,
    pub kind: FeatureKind,
}

impl FeatureSequence {
    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// Slice a signal into overlapping frames. The frame count is exactly
/// `1 + floor((len - frame_len) / hop)`.
pub fn frame_signal(
    samples: &[f64],
    frame_len: usize,
    hop: usize,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    if frame_len == 0 || hop == 0 {
        return Err(FeatureError::BadArgument(
            "frame length and hop must be positive".into(),
        ));
    }
    if samples.len() < frame_len {
        return Err(FeatureError::TooShort {
            len: samples.len(),
            frame_len,
        });
    }
    let count = 1 + (samples.len() - frame_len) / hop;
    Ok((0..count)
        .map(|i| samples[i * hop..i * hop + frame_len].to_vec())
        .collect())
}

/// Hamming window: `w[k] = 0.54 - 0.46 cos(2 pi k / (n-1))`.
pub fn hamming_window(n: usize) -> Result<Vec<f64>, FeatureError> {
    if n < 2 {
        return Err(FeatureError::BadArgument(format!(
            "window length {n} must be >= 2"
        )));
    }
    Ok((0..n)
        .map(|k| 0.54 - 0.46 * (std::f64::consts::TAU * k as f64 / (n - 1) as f64).cos())
        .collect())
}

/// `y[0] = (1-k) x[0]`, `y[n] = x[n] - k x[n-1]`.
pub fn pre_emphasis(samples: &[f64], coefficient: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = 0.0;
    for &s in samples {
        out.push(s - coefficient * prev);
        prev = s;
    }
    if let Some(first) = out.first_mut() {
        *first = samples[0] * (1.0 - coefficient);
    }
    out
}

/// |FFT|^2 of a (windowed) frame zero-padded to `n_fft`, bins 0..n_fft/2
/// inclusive. `n_fft` must be a power of two.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Result<Vec<f64>, FeatureError> {
    if !n_fft.is_power_of_two() {
        return Err(FeatureError::BadArgument(format!(
            "FFT size {n_fft} is not a power of two (radix-2 implementation)"
        )));
    }
    if frame.len() > n_fft {
        return Err(FeatureError::BadArgument(format!(
            "frame of {} samples exceeds FFT size {n_fft}",
            frame.len()
        )));
    }
    let mut re = vec![0.0; n_fft];
    re[..frame.len()].copy_from_slice(frame);
    let mut im = vec![0.0; n_fft];
    fft::fft_in_place(&mut re, &mut im);
    Ok((0..=n_fft / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect())
}

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank: `n_mels x (n_fft/2 + 1)`, filter centers
/// equally spaced on the mel scale between the configured edge
/// frequencies. Errors if any filter is too narrow to cover an FFT bin.
pub fn mel_filterbank_matrix(
    config: &FeatureConfig,
    sample_rate: u32,
) -> Result<Tensor, FeatureError> {
    config.validate(sample_rate)?;
    let n_fft = config.fft_size(sample_rate);
    let n_bins = n_fft / 2 + 1;
    let high = config.high_freq_hz.unwrap_or(sample_rate as f64 / 2.0);
    let mel_low = hz_to_mel(config.low_freq_hz);
    let mel_high = hz_to_mel(high);
    let corners: Vec<f64> = (0..config.n_mels + 2)
        .map(|i| mel_to_hz(mel_low + (mel_high - mel_low) * i as f64 / (config.n_mels + 1) as f64))
        .collect();

    let bin_hz = sample_rate as f64 / n_fft as f64;
    let mut data = vec![0.0; config.n_mels * n_bins];
    for m in 0..config.n_mels {
        let (left, center, right) = (corners[m], corners[m + 1], corners[m + 2]);
        let row = &mut data[m * n_bins..(m + 1) * n_bins];
        let mut any = false;
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            let v = if f >= left && f <= center && center > left {
                (f - left) / (center - left)
            } else if f > center && f <= right && right > center {
                (right - f) / (right - center)
            } else {
                0.0
            };
            if v > 0.0 {
                any = true;
            }
            *w = v;
        }
        if !any {
            return Err(FeatureError::Config(format!(
                "mel filter {m} covers no FFT bin; reduce n_mels or raise n_fft"
            )));
        }
    }
    Ok(Tensor::matrix(config.n_mels, n_bins, data).expect("sized above"))
}

/// `ln(max(fbank . spectrum, log_floor))` per filter.
pub fn log_mel(
    spectrum: &[f64],
    fbank: &Tensor,
    log_floor: f64,
) -> Result<Vec<f64>, FeatureError> {
    if fbank.cols() != spectrum.len() {
        return Err(FeatureError::DimMismatch(format!(
            "filterbank expects {} bins, spectrum has {}",
            fbank.cols(),
            spectrum.len()
        )));
    }
    Ok((0..fbank.rows())
        .map(|m| {
            let e: f64 = fbank
                .row(m)
                .iter()
                .zip(spectrum)
                .map(|(w, s)| w * s)
                .sum();
            e.max(log_floor).ln()
        })
        .collect())
}

/// Orthonormal DCT-II of the log-mel vector, coefficients 0..n_ceps-1
/// (c0 included as the first coefficient).
pub fn mfcc(log_mel_vec: &[f64], n_ceps: usize) -> Result<Vec<f64>, FeatureError> {
    let n = log_mel_vec.len();
    if n_ceps > n {
        return Err(FeatureError::BadArgument(format!(
            "n_ceps {n_ceps} exceeds input length {n}"
        )));
    }
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    Ok((0..n_ceps)
        .map(|k| {
            let scale = if k == 0 { norm0 } else { norm };
            let sum: f64 = log_mel_vec
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    x * (std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / n as f64).cos()
                })
                .sum();
            scale * sum
        })
        .collect())
}

/// Full pipeline: trim, pre-emphasize, frame, window, power spectrum,
/// log-mel (and DCT for MFCC). Output values are rounded through `f32`
/// so they match the disk cache exactly.
pub fn extract_features(
    utterance: &Utterance,
    config: &FeatureConfig,
) -> Result<FeatureSequence, FeatureError> {
    let (samples, sample_rate) = corpus::load_audio(utterance)?;
    extract_from_samples(&samples, sample_rate, config)
}

/// [`extract_features`] on raw samples.
pub fn extract_from_samples(
    samples: &[f64],
    sample_rate: u32,
    config: &FeatureConfig,
) -> Result<FeatureSequence, FeatureError> {
    config.validate(sample_rate)?;
    let frame_len = config.frame_len_samples(sample_rate);

    let trimmed = match &config.trim {
        Some(trim) => match corpus::trim_silence(samples, sample_rate, trim) {
            Ok(t) => t,
            Err(CorpusError::EmptyAfterTrim) => {
                return Err(FeatureError::TooShort { len: 0, frame_len })
            }
            Err(e) => return Err(e.into()),
        },
        None => samples.to_vec(),
    };
    let emphasized = match config.pre_emphasis {
        Some(k) => pre_emphasis(&trimmed, k),
        None => trimmed,
    };

    let hop = config.hop_samples(sample_rate);
    let frames = frame_signal(&emphasized, frame_len, hop)?;
    let window = hamming_window(frame_len)?;
    let n_fft = config.fft_size(sample_rate);
    let fbank = mel_filterbank_matrix(config, sample_rate)?;

    let dim = config.dim();
    let mut data = Vec::with_capacity(frames.len() * dim);
    let mut windowed = vec![0.0; frame_len];
    for frame in &frames {
        for ((w, x), out) in window.iter().zip(frame).zip(windowed.iter_mut()) {
            *out = w * x;
        }
        let spectrum = power_spectrum(&windowed, n_fft)?;
        let lm = log_mel(&spectrum, &fbank, config.log_floor)?;
        match config.kind {
            FeatureKind::Lmfb => data.extend_from_slice(&lm),
            FeatureKind::Mfcc => data.extend_from_slice(&mfcc(&lm, config.n_ceps)?),
        }
    }

    let mut frames_tensor =
        Tensor::matrix(frames.len(), dim, data).expect("row count times dim");
    frames_tensor.quantize_f32();
    Ok(FeatureSequence {
        frames: frames_tensor,
        frame_rate_hz: sample_rate as f64 / hop as f64,
        kind: config.kind,
    })
}
