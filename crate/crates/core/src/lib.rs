//! Adaptive time-frequency analysis and resynthesis of audio signals.
//!
//! Nonstationary Gabor frames in the painless case, Rényi-entropy driven
//! selection of the analysis window per time segment and frequency band, and
//! multi-band weighted reconstruction from several differently adapted
//! analyses.

pub mod adaptation;
pub mod bands;
pub mod coeff_io;
pub mod entropy;
pub mod experiments;
pub mod gabor;
pub mod recon;
pub mod signal;
pub mod window;

pub use rustfft::num_complex::Complex64;
