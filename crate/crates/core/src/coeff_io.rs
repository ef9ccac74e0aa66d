//! Binary serialization of a plan together with its coefficient grid.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! header   magic      8 bytes  "NSGFCOEF"
//!          version    u32      1
//!          sample_rate f64
//!          signal_len u64
//!          elements   u64
//! element  position   u64
//!          channels   u64      M_k
//!          family     u8       0 hann, 1 hamming, 2 blackman, 3 rect
//!          win_len    u64      L_k
//!          win_gain   f64      amplitude factor on the family closed form
//!          coeffs     M_k x (re f64, im f64)
//! ```

use std::io::{self, Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::gabor::{CoefficientGrid, FrameElement, GaborError, NsgfPlan};
use crate::window::{Window, WindowFamily};

pub const MAGIC: &[u8; 8] = b"NSGFCOEF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CoeffIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a coefficient file (bad magic)")]
    BadMagic,
    #[error("unsupported coefficient file version {0}")]
    BadVersion(u32),
    #[error("corrupt coefficient file: {0}")]
    Corrupt(String),
    #[error("grid does not belong to the given plan")]
    PlanMismatch,
    #[error(transparent)]
    Plan(#[from] GaborError),
}

pub fn write_grid<W: Write>(
    mut w: W,
    plan: &NsgfPlan,
    grid: &CoefficientGrid,
) -> Result<(), CoeffIoError> {
    if !grid.belongs_to(plan) {
        return Err(CoeffIoError::PlanMismatch);
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&plan.sample_rate().to_le_bytes())?;
    w.write_all(&(plan.signal_length() as u64).to_le_bytes())?;
    w.write_all(&(plan.len() as u64).to_le_bytes())?;
    for (e, row) in plan.elements().iter().zip(grid.rows()) {
        w.write_all(&(e.position() as u64).to_le_bytes())?;
        w.write_all(&(e.channels() as u64).to_le_bytes())?;
        w.write_all(&[e.window().family().code()])?;
        w.write_all(&(e.len() as u64).to_le_bytes())?;
        w.write_all(&e.window().gain().to_le_bytes())?;
        for c in row {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn to_usize(v: u64, what: &str) -> Result<usize, CoeffIoError> {
    usize::try_from(v).map_err(|_| CoeffIoError::Corrupt(format!("{what} {v} out of range")))
}

pub fn read_grid<R: Read>(mut r: R) -> Result<(NsgfPlan, CoefficientGrid), CoeffIoError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoeffIoError::BadMagic);
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(CoeffIoError::BadVersion(version));
    }
    let sample_rate = read_f64(&mut r)?;
    let signal_length = to_usize(read_u64(&mut r)?, "signal length")?;
    let count = to_usize(read_u64(&mut r)?, "element count")?;
    if count > signal_length {
        return Err(CoeffIoError::Corrupt(format!(
            "{count} elements for {signal_length} samples"
        )));
    }
    let mut elements = Vec::with_capacity(count);
    let mut rows = Vec::with_capacity(count);
    let mut last_window: Option<Arc<Window>> = None;
    for _ in 0..count {
        let position = to_usize(read_u64(&mut r)?, "position")?;
        let channels = to_usize(read_u64(&mut r)?, "channels")?;
        let mut fam = [0u8; 1];
        r.read_exact(&mut fam)?;
        let family = WindowFamily::from_code(fam[0])
            .ok_or_else(|| CoeffIoError::Corrupt(format!("window family code {}", fam[0])))?;
        let win_len = to_usize(read_u64(&mut r)?, "window length")?;
        let gain = read_f64(&mut r)?;
        if win_len > signal_length || channels > signal_length.max(win_len) * 64 {
            return Err(CoeffIoError::Corrupt(format!(
                "implausible frame ({win_len} samples, {channels} channels)"
            )));
        }
        let window = match &last_window {
            Some(w) if w.family() == family && w.len() == win_len && w.gain() == gain => w.clone(),
            _ => {
                let w = Arc::new(
                    Window::with_gain(family, win_len, gain)
                        .map_err(|e| CoeffIoError::Corrupt(e.to_string()))?,
                );
                last_window = Some(w.clone());
                w
            }
        };
        elements.push(FrameElement::new(window, position, channels)?);
        let mut row = Vec::with_capacity(channels);
        for _ in 0..channels {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            row.push(Complex64::new(re, im));
        }
        rows.push(row);
    }
    let plan = NsgfPlan::new(elements, signal_length, sample_rate)?;
    let grid = CoefficientGrid::new(rows, &plan)?;
    Ok((plan, grid))
}
