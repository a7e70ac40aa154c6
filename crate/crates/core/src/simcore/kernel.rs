//! In-place stride kernels. A local matrix acting on `targets` uses the
//! convention that bit `j` of the local index is the value of `targets[j]`.

use num_complex::Complex64;

/// Expands a compressed index `k` (with `sorted` bit positions removed) into a
/// full basis index whose bits at `sorted` positions are zero.
#[inline]
pub(crate) fn deposit(mut k: usize, sorted: &[usize]) -> usize {
    for &pos in sorted {
        let low = k & ((1usize << pos) - 1);
        k = ((k >> pos) << (pos + 1)) | low;
    }
    k
}

fn offsets(targets: &[usize]) -> Vec<usize> {
    (0..1usize << targets.len())
        .map(|local| {
            targets
                .iter()
                .enumerate()
                .filter(|(j, _)| local >> j & 1 == 1)
                .fold(0, |acc, (_, &q)| acc | 1 << q)
        })
        .collect()
}

/// `amps <- (M (x) I) amps` for a `2^k x 2^k` row-major matrix `m`.
pub(crate) fn apply_matrix(amps: &mut [Complex64], m: &[Complex64], targets: &[usize]) {
    if targets.len() == 1 {
        apply_single(amps, [m[0], m[1], m[2], m[3]], targets[0]);
        return;
    }
    let dim = 1usize << targets.len();
    let offs = offsets(targets);
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    let mut local = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..amps.len() >> targets.len() {
        let base = deposit(k, &sorted);
        for (slot, off) in local.iter_mut().zip(&offs) {
            *slot = amps[base | off];
        }
        for (r, off) in offs.iter().enumerate() {
            let row = &m[r * dim..(r + 1) * dim];
            amps[base | off] = row.iter().zip(&local).map(|(a, b)| a * b).sum();
        }
    }
}

fn apply_single(amps: &mut [Complex64], m: [Complex64; 4], target: usize) {
    let stride = 1usize << target;
    for block in amps.chunks_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = m[0] * x0 + m[1] * x1;
            *a1 = m[2] * x0 + m[3] * x1;
        }
    }
}

/// `dst += scale * (M (x) I) src`, for applying non-unitary local terms.
pub(crate) fn accumulate_matrix(
    src: &[Complex64],
    dst: &mut [Complex64],
    m: &[Complex64],
    targets: &[usize],
    scale: Complex64,
) {
    let dim = 1usize << targets.len();
    let offs = offsets(targets);
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    for k in 0..src.len() >> targets.len() {
        let base = deposit(k, &sorted);
        for (r, off) in offs.iter().enumerate() {
            let row = &m[r * dim..(r + 1) * dim];
            let v: Complex64 = row
                .iter()
                .zip(&offs)
                .map(|(a, o)| a * src[base | o])
                .sum();
            dst[base | off] += scale * v;
        }
    }
}
