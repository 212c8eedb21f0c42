//! Iterative radix-2 FFT, enough for power spectra of windowed frames.

/// In-place decimation-in-time FFT over `re`/`im`. Lengths must match and
/// be a power of two (checked by the caller).
pub(crate) fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert_eq!(n, im.len());
    debug_assert!(n.is_power_of_two());
    if n < 2 {
        return;
    }

    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let step = -std::f64::consts::TAU / size as f64;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let angle = step * k as f64;
                let (wr, wi) = (angle.cos(), angle.sin());
                let (er, ei) = (re[start + k], im[start + k]);
                let (or_, oi) = (re[start + k + half], im[start + k + half]);
                let tr = wr * or_ - wi * oi;
                let ti = wr * oi + wi * or_;
                re[start + k] = er + tr;
                im[start + k] = ei + ti;
                re[start + k + half] = er - tr;
                im[start + k + half] = ei - ti;
            }
        }
        size *= 2;
    }
}
