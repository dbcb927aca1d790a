//! Column lowering for volumetric convolution.

use crate::Scalar;
use ndarray::{Array2, Array4};

/// Output extents of a convolution over `(T, H, W)` input extents.
pub fn conv_out_dims(dims: [usize; 3], k: [usize; 3], stride: [usize; 3], pad: [usize; 3]) -> [usize; 3] {
    let mut out = [0; 3];
    for i in 0..3 {
        debug_assert!(dims[i] + 2 * pad[i] >= k[i], "kernel larger than padded input");
        out[i] = (dims[i] + 2 * pad[i] - k[i]) / stride[i] + 1;
    }
    out
}

/// Lowers `(C, T, H, W)` input into a `(C·kt·kh·kw, To·Ho·Wo)` matrix so a
/// convolution becomes one GEMM. Out-of-bounds taps contribute zeros.
pub fn im2col3<S: Scalar>(
    x: &Array4<S>,
    k: [usize; 3],
    stride: [usize; 3],
    pad: [usize; 3],
) -> Array2<S> {
    let (c_in, t_in, h_in, w_in) = x.dim();
    let [to, ho, wo] = conv_out_dims([t_in, h_in, w_in], k, stride, pad);
    let n = to * ho * wo;
    let mut col = Array2::<S>::zeros((c_in * k[0] * k[1] * k[2], n));
    let xs = x.as_slice().expect("input must be contiguous");
    let cs = col.as_slice_mut().unwrap();
    let [st, sh, sw] = stride;
    let [pt, ph, pw] = pad;

    let mut row = 0usize;
    for c in 0..c_in {
        for dt in 0..k[0] {
            for dy in 0..k[1] {
                for dx in 0..k[2] {
                    let base = row * n;
                    row += 1;
                    // valid ox range: 0 <= ox*sw + dx - pw < w_in
                    let ox0 = if dx >= pw { 0 } else { (pw - dx + sw - 1) / sw };
                    let ox1 = if w_in + pw > dx {
                        ((w_in + pw - dx - 1) / sw + 1).min(wo)
                    } else {
                        0
                    };
                    for ot in 0..to {
                        let t = (ot * st + dt) as isize - pt as isize;
                        if t < 0 || t >= t_in as isize {
                            continue;
                        }
                        let t = t as usize;
                        for oy in 0..ho {
                            let y = (oy * sh + dy) as isize - ph as isize;
                            if y < 0 || y >= h_in as isize {
                                continue;
                            }
                            let y = y as usize;
                            let src_row = ((c * t_in + t) * h_in + y) * w_in;
                            let dst_row = base + (ot * ho + oy) * wo;
                            if sw == 1 && ox1 > ox0 {
                                let xx0 = ox0 + dx - pw;
                                cs[dst_row + ox0..dst_row + ox1]
                                    .copy_from_slice(&xs[src_row + xx0..src_row + xx0 + (ox1 - ox0)]);
                            } else {
                                for ox in ox0..ox1 {
                                    let xx = ox * sw + dx - pw;
                                    cs[dst_row + ox] = xs[src_row + xx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col3`]: scatter-adds a column matrix back into a
/// `(C, T, H, W)` image. Also the core of transposed convolution.
pub fn col2im3<S: Scalar>(
    col: &Array2<S>,
    c_img: usize,
    dims: [usize; 3],
    k: [usize; 3],
    stride: [usize; 3],
    pad: [usize; 3],
) -> Array4<S> {
    let [t_in, h_in, w_in] = dims;
    let [to, ho, wo] = conv_out_dims(dims, k, stride, pad);
    let n = to * ho * wo;
    debug_assert_eq!(col.dim(), (c_img * k[0] * k[1] * k[2], n));
    let mut img = Array4::<S>::zeros((c_img, t_in, h_in, w_in));
    let cs = col.as_slice().expect("column matrix must be contiguous");
    let im = img.as_slice_mut().unwrap();
    let [st, sh, sw] = stride;
    let [pt, ph, pw] = pad;

    let mut row = 0usize;
    for c in 0..c_img {
        for dt in 0..k[0] {
            for dy in 0..k[1] {
                for dx in 0..k[2] {
                    let base = row * n;
                    row += 1;
                    let ox0 = if dx >= pw { 0 } else { (pw - dx + sw - 1) / sw };
                    let ox1 = if w_in + pw > dx {
                        ((w_in + pw - dx - 1) / sw + 1).min(wo)
                    } else {
                        0
                    };
                    for ot in 0..to {
                        let t = (ot * st + dt) as isize - pt as isize;
                        if t < 0 || t >= t_in as isize {
                            continue;
                        }
                        let t = t as usize;
                        for oy in 0..ho {
                            let y = (oy * sh + dy) as isize - ph as isize;
                            if y < 0 || y >= h_in as isize {
                                continue;
                            }
                            let y = y as usize;
                            let dst_row = ((c * t_in + t) * h_in + y) * w_in;
                            let src_row = base + (ot * ho + oy) * wo;
                            for ox in ox0..ox1 {
                                let xx = ox * sw + dx - pw;
                                im[dst_row + xx] = im[dst_row + xx] + cs[src_row + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    img
}
