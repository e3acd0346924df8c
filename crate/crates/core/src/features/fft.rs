//! In-place iterative radix-2 FFT over interleaved `(re, im)` pairs.

use std::f64::consts::PI;

/// Forward DFT, `X_j = sum_n x_n exp(-2 pi i j n / N)`. `N` must be a power of two.
pub fn fft_in_place(buf: &mut [(f64, f64)]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // Twiddles are evaluated directly per index; a recurrence would
                // drift by a few ulps at larger N.
                let (s, c) = (step * k as f64).sin_cos();
                let (ar, ai) = buf[start + k];
                let (br, bi) = buf[start + k + half];
                let tr = br * c - bi * s;
                let ti = br * s + bi * c;
                buf[start + k] = (ar + tr, ai + ti);
                buf[start + k + half] = (ar - tr, ai - ti);
            }
        }
        len <<= 1;
    }
}

pub fn real_fft(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut buf: Vec<(f64, f64)> = samples.iter().map(|&x| (x, 0.0)).collect();
    fft_in_place(&mut buf);
    buf
}
