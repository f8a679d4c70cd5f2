//! In-place amplitude kernels. Callers validate qubit indices; these assume
//! `amps.len()` is a power of two and every index is in range.

use num_complex::Complex64 as C64;

pub(crate) type Mat2 = [[C64; 2]; 2];

#[inline]
fn pair_loop(len: usize, target: usize, mut f: impl FnMut(usize, usize)) {
    let stride = 1usize << target;
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            f(i, i + stride);
        }
        base += stride << 1;
    }
}

#[inline]
fn mul2(m: &Mat2, a: C64, b: C64) -> (C64, C64) {
    (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b)
}

pub(crate) fn apply_1q(amps: &mut [C64], target: usize, m: &Mat2) {
    let len = amps.len();
    pair_loop(len, target, |i, j| {
        let (a, b) = mul2(m, amps[i], amps[j]);
        amps[i] = a;
        amps[j] = b;
    });
}

pub(crate) fn apply_1q_controlled(
    amps: &mut [C64],
    control: usize,
    control_value: bool,
    target: usize,
    m: &Mat2,
) {
    let cmask = 1usize << control;
    let want = if control_value { cmask } else { 0 };
    let len = amps.len();
    pair_loop(len, target, |i, j| {
        if i & cmask == want {
            let (a, b) = mul2(m, amps[i], amps[j]);
            amps[i] = a;
            amps[j] = b;
        }
    });
}

pub(crate) fn apply_h(amps: &mut [C64], target: usize) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let len = amps.len();
    pair_loop(len, target, |i, j| {
        let (a, b) = (amps[i], amps[j]);
        amps[i] = (a + b) * r;
        amps[j] = (a - b) * r;
    });
}

pub(crate) fn apply_rx(amps: &mut [C64], target: usize, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let len = amps.len();
    pair_loop(len, target, |i, j| {
        let (a, b) = (amps[i], amps[j]);
        // [[c, -is], [-is, c]]
        amps[i] = C64::new(c * a.re + s * b.im, c * a.im - s * b.re);
        amps[j] = C64::new(c * b.re + s * a.im, c * b.im - s * a.re);
    });
}

pub(crate) fn apply_rz(amps: &mut [C64], target: usize, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let lo = C64::new(c, -s);
    let hi = C64::new(c, s);
    let mask = 1usize << target;
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & mask == 0 { lo } else { hi };
    }
}

pub(crate) fn apply_cz(amps: &mut [C64], a: usize, b: usize) {
    let mask = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

pub(crate) fn apply_rzz(amps: &mut [C64], a: usize, b: usize, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let even = C64::new(c, -s);
    let odd = C64::new(c, s);
    for (i, amp) in amps.iter_mut().enumerate() {
        let parity = ((i >> a) ^ (i >> b)) & 1;
        *amp *= if parity == 0 { even } else { odd };
    }
}

pub(crate) fn apply_rx_controlled(
    amps: &mut [C64],
    control: usize,
    control_value: bool,
    target: usize,
    theta: f64,
) {
    let (s, c) = (0.5 * theta).sin_cos();
    let cmask = 1usize << control;
    let want = if control_value { cmask } else { 0 };
    let len = amps.len();
    pair_loop(len, target, |i, j| {
        if i & cmask == want {
            let (a, b) = (amps[i], amps[j]);
            amps[i] = C64::new(c * a.re + s * b.im, c * a.im - s * b.re);
            amps[j] = C64::new(c * b.re + s * a.im, c * b.im - s * a.re);
        }
    });
}

pub(crate) fn apply_rz_controlled(
    amps: &mut [C64],
    control: usize,
    control_value: bool,
    target: usize,
    theta: f64,
) {
    let (s, c) = (0.5 * theta).sin_cos();
    let lo = C64::new(c, -s);
    let hi = C64::new(c, s);
    let cmask = 1usize << control;
    let want = if control_value { cmask } else { 0 };
    let tmask = 1usize << target;
    for (i, a) in amps.iter_mut().enumerate() {
        if i & cmask == want {
            *a *= if i & tmask == 0 { lo } else { hi };
        }
    }
}

/// Dense `2^k x 2^k` row-major matrix on `targets` (targets[0] is the least
/// significant bit of the local index).
pub(crate) fn apply_dense(amps: &mut [C64], targets: &[usize], matrix: &[C64]) {
    let k = targets.len();
    let dim = 1usize << k;
    let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|r| {
            targets
                .iter()
                .enumerate()
                .filter(|(bit, _)| r >> bit & 1 == 1)
                .map(|(_, &t)| 1usize << t)
                .sum()
        })
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (slot, &off) in buf.iter_mut().zip(&offsets) {
            *slot = amps[base + off];
        }
        for (row, &off) in offsets.iter().enumerate() {
            let coeffs = &matrix[row * dim..(row + 1) * dim];
            amps[base + off] = coeffs.iter().zip(&buf).map(|(m, v)| m * v).sum();
        }
    }
}

// Generator overlaps: each returns Im<lambda|G|psi> for a Pauli-type generator G.

pub(crate) fn im_overlap_x(lambda: &[C64], psi: &[C64], target: usize) -> f64 {
    let mut acc = 0.0;
    pair_loop(psi.len(), target, |i, j| {
        acc += (lambda[i].conj() * psi[j] + lambda[j].conj() * psi[i]).im;
    });
    acc
}

pub(crate) fn im_overlap_z(lambda: &[C64], psi: &[C64], target: usize) -> f64 {
    let mask = 1usize << target;
    lambda
        .iter()
        .zip(psi)
        .enumerate()
        .map(|(i, (l, p))| {
            let v = (l.conj() * p).im;
            if i & mask == 0 {
                v
            } else {
                -v
            }
        })
        .sum()
}

pub(crate) fn im_overlap_zz(lambda: &[C64], psi: &[C64], a: usize, b: usize) -> f64 {
    lambda
        .iter()
        .zip(psi)
        .enumerate()
        .map(|(i, (l, p))| {
            let v = (l.conj() * p).im;
            if ((i >> a) ^ (i >> b)) & 1 == 0 {
                v
            } else {
                -v
            }
        })
        .sum()
}

pub(crate) fn im_overlap_x_controlled(
    lambda: &[C64],
    psi: &[C64],
    control: usize,
    control_value: bool,
    target: usize,
) -> f64 {
    let cmask = 1usize << control;
    let want = if control_value { cmask } else { 0 };
    let mut acc = 0.0;
    pair_loop(psi.len(), target, |i, j| {
        if i & cmask == want {
            acc += (lambda[i].conj() * psi[j] + lambda[j].conj() * psi[i]).im;
        }
    });
    acc
}

pub(crate) fn im_overlap_z_controlled(
    lambda: &[C64],
    psi: &[C64],
    control: usize,
    control_value: bool,
    target: usize,
) -> f64 {
    let cmask = 1usize << control;
    let want = if control_value { cmask } else { 0 };
    let tmask = 1usize << target;
    let mut acc = 0.0;
    for (i, (l, p)) in lambda.iter().zip(psi).enumerate() {
        if i & cmask == want {
            let v = (l.conj() * p).im;
            acc += if i & tmask == 0 { v } else { -v };
        }
    }
    acc
}
