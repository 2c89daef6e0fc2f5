//! Two-dimensional FFT helpers over row-major complex grids.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place 2-D DFT of a `rows × cols` row-major grid.
///
/// Forward uses the `exp(-i2πmk/N)` kernel. Neither direction normalizes;
/// a forward/inverse round trip scales by `rows * cols`.
pub fn fft2(data: &mut [Complex64], rows: usize, cols: usize, direction: FftDirection) {
    assert_eq!(data.len(), rows * cols, "grid size mismatch");
    let mut planner = FftPlanner::<f64>::new();

    let row_fft = planner.plan_fft(cols, direction);
    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(cols) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let col_fft = planner.plan_fft(rows, direction);
    let mut scratch = vec![Complex64::default(); col_fft.get_inplace_scratch_len()];
    let mut column = vec![Complex64::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

pub fn forward(data: &mut [Complex64], rows: usize, cols: usize) {
    fft2(data, rows, cols, FftDirection::Forward);
}

/// Inverse transform including the `1 / (rows * cols)` normalization.
pub fn inverse(data: &mut [Complex64], rows: usize, cols: usize) {
    fft2(data, rows, cols, FftDirection::Inverse);
    let scale = 1.0 / (rows * cols) as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Circular roll: output `[r][c] = input[(r - dy) mod rows][(c - dx) mod cols]`,
/// i.e. content moves by `(+dy, +dx)`.
pub fn roll<T: Copy>(data: &[T], rows: usize, cols: usize, dy: i64, dx: i64) -> Vec<T> {
    assert_eq!(data.len(), rows * cols);
    let sy = dy.rem_euclid(rows as i64) as usize;
    let sx = dx.rem_euclid(cols as i64) as usize;
    let mut out = Vec::with_capacity(data.len());
    for r in 0..rows {
        let src_r = (r + rows - sy) % rows;
        let row = &data[src_r * cols..(src_r + 1) * cols];
        out.extend_from_slice(&row[cols - sx..]);
        out.extend_from_slice(&row[..cols - sx]);
    }
    out
}

/// Moves the zero-frequency sample to `(rows / 2, cols / 2)`.
pub fn fftshift<T: Copy>(data: &[T], rows: usize, cols: usize) -> Vec<T> {
    roll(data, rows, cols, (rows / 2) as i64, (cols / 2) as i64)
}

/// Inverse of [`fftshift`], also correct for odd sizes.
pub fn ifftshift<T: Copy>(data: &[T], rows: usize, cols: usize) -> Vec<T> {
    roll(data, rows, cols, -((rows / 2) as i64), -((cols / 2) as i64))
}

/// Signed DFT bin index for position `k` of an unshifted length-`n` axis.
pub fn signed_bin(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
