//! Eighth-order central finite differences on a periodic grid.
//!
//! Nine-point symmetric stencils. The first derivative is evaluated as
//! `Σ w_k (f[j+k] - f[j-k])` and the second as
//! `Σ c_k ((f[j+k] - f[j]) + (f[j-k] - f[j]))`, so constants differentiate to
//! exactly zero.

use thiserror::Error;

use crate::geometry::Vec3;

/// Stencil reach on each side of the centre node.
pub const HALF_WIDTH: usize = 4;
/// Minimum number of samples a periodic stencil can be applied to.
pub const MIN_LEN: usize = 2 * HALF_WIDTH + 1;

const FIRST: [f64; HALF_WIDTH] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const SECOND_CENTER: f64 = -205.0 / 72.0;
const SECOND: [f64; HALF_WIDTH] = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StencilError {
    #[error("periodic stencil needs at least {MIN_LEN} samples, got {0}")]
    GridTooSmall(usize),
    #[error("output buffer has length {got}, expected {expected}")]
    BufferLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DerivativeOrder {
    First,
    Second,
}

impl DerivativeOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

impl TryFrom<u32> for DerivativeOrder {
    type Error = u32;
    fn try_from(v: u32) -> Result<Self, u32> {
        match v {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            other => Err(other),
        }
    }
}

/// Periodic eighth-order derivative operator of a fixed order and spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffOperator {
    order: DerivativeOrder,
    h: f64,
}

impl DiffOperator {
    pub const ACCURACY: u32 = 8;

    pub fn new(order: DerivativeOrder, h: f64) -> Self {
        Self { order, h }
    }

    pub fn order(&self) -> DerivativeOrder {
        self.order
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Unscaled weights for offsets `-4..=4`.
    pub fn weights(&self) -> [f64; MIN_LEN] {
        let mut w = [0.0; MIN_LEN];
        match self.order {
            DerivativeOrder::First => {
                for k in 0..HALF_WIDTH {
                    w[HALF_WIDTH + k + 1] = FIRST[k];
                    w[HALF_WIDTH - k - 1] = -FIRST[k];
                }
            }
            DerivativeOrder::Second => {
                w[HALF_WIDTH] = SECOND_CENTER;
                for k in 0..HALF_WIDTH {
                    w[HALF_WIDTH + k + 1] = SECOND[k];
                    w[HALF_WIDTH - k - 1] = SECOND[k];
                }
            }
        }
        w
    }

    /// Fourier symbol `Σ w_k e^{i k θ}` for `θ = k h`, divided by `h^order`.
    ///
    /// Real for the second derivative; the first derivative symbol is `i`
    /// times the returned value.
    pub fn symbol(&self, theta: f64) -> f64 {
        match self.order {
            DerivativeOrder::First => {
                2.0 * FIRST.iter().enumerate().map(|(k, w)| w * ((k + 1) as f64 * theta).sin()).sum::<f64>() / self.h
            }
            DerivativeOrder::Second => {
                (SECOND_CENTER
                    + 2.0 * SECOND.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * theta).cos()).sum::<f64>())
                    / (self.h * self.h)
            }
        }
    }

    pub fn apply_scalar(&self, values: &[f64], out: &mut [f64]) -> Result<(), StencilError> {
        check(values.len(), out.len())?;
        match self.order {
            DerivativeOrder::First => periodic_pass(values, out, 1, |f, j, n| first_at(f, j, n, 1) / self.h),
            DerivativeOrder::Second => {
                let inv = 1.0 / (self.h * self.h);
                periodic_pass(values, out, 1, |f, j, n| second_at(f, j, n, 1) * inv)
            }
        }
        Ok(())
    }

    pub fn apply(&self, values: &[Vec3]) -> Result<Vec<Vec3>, StencilError> {
        let flat: Vec<f64> = values.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
        let mut out = vec![0.0; flat.len()];
        let n = values.len();
        if n < MIN_LEN {
            return Err(StencilError::GridTooSmall(n));
        }
        match self.order {
            DerivativeOrder::First => periodic_pass(&flat, &mut out, 3, |f, j, n| first_at(f, j, n, 3) / self.h),
            DerivativeOrder::Second => {
                let inv = 1.0 / (self.h * self.h);
                periodic_pass(&flat, &mut out, 3, |f, j, n| second_at(f, j, n, 3) * inv)
            }
        }
        Ok(out.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }
}

/// Componentwise periodic derivative of a sampled 3-vector field.
pub fn differentiate(values: &[Vec3], order: DerivativeOrder, h: f64) -> Result<Vec<Vec3>, StencilError> {
    DiffOperator::new(order, h).apply(values)
}

/// Periodic derivative of a scalar sequence.
pub fn differentiate_scalar(values: &[f64], order: DerivativeOrder, h: f64) -> Result<Vec<f64>, StencilError> {
    let mut out = vec![0.0; values.len()];
    DiffOperator::new(order, h).apply_scalar(values, &mut out)?;
    Ok(out)
}

/// First and second derivatives of an interleaved `[x, y, z, x, y, z, ..]`
/// field in one sweep. Used by the right-hand side hot loop.
pub fn first_and_second_interleaved(
    values: &[f64],
    h: f64,
    d1: &mut [f64],
    d2: &mut [f64],
) -> Result<(), StencilError> {
    let n = values.len() / 3;
    if n < MIN_LEN {
        return Err(StencilError::GridTooSmall(n));
    }
    for buf in [&*d1, &*d2] {
        if buf.len() != values.len() {
            return Err(StencilError::BufferLength { expected: values.len(), got: buf.len() });
        }
    }
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;
    let len = values.len();
    let mut node = |j: usize, idx: &dyn Fn(usize, isize) -> usize| {
        for c in 0..3 {
            let i = 3 * j + c;
            let f0 = values[i];
            let mut a = 0.0;
            let mut b = 0.0;
            for k in 0..HALF_WIDTH {
                let off = (k + 1) as isize;
                let fp = values[idx(i, off)];
                let fm = values[idx(i, -off)];
                a += FIRST[k] * (fp - fm);
                b += SECOND[k] * ((fp - f0) + (fm - f0));
            }
            d1[i] = a * inv_h;
            d2[i] = b * inv_h2;
        }
    };
    let wrap = |i: usize, off: isize| -> usize { ((i as isize + 3 * off).rem_euclid(len as isize)) as usize };
    let direct = |i: usize, off: isize| -> usize { (i as isize + 3 * off) as usize };
    for j in 0..HALF_WIDTH {
        node(j, &wrap);
    }
    for j in HALF_WIDTH..n - HALF_WIDTH {
        node(j, &direct);
    }
    for j in n - HALF_WIDTH..n {
        node(j, &wrap);
    }
    Ok(())
}

fn check(len: usize, out: usize) -> Result<(), StencilError> {
    if len < MIN_LEN {
        return Err(StencilError::GridTooSmall(len));
    }
    if out != len {
        return Err(StencilError::BufferLength { expected: len, got: out });
    }
    Ok(())
}

#[inline]
fn at(f: &[f64], i: usize, off: isize, stride: usize) -> f64 {
    let len = f.len() as isize;
    f[((i as isize + off * stride as isize).rem_euclid(len)) as usize]
}

#[inline]
fn first_at(f: &[f64], i: usize, _n: usize, stride: usize) -> f64 {
    let mut a = 0.0;
    for k in 0..HALF_WIDTH {
        let off = (k + 1) as isize;
        a += FIRST[k] * (at(f, i, off, stride) - at(f, i, -off, stride));
    }
    a
}

#[inline]
fn second_at(f: &[f64], i: usize, _n: usize, stride: usize) -> f64 {
    let f0 = f[i];
    let mut b = 0.0;
    for k in 0..HALF_WIDTH {
        let off = (k + 1) as isize;
        b += SECOND[k] * ((at(f, i, off, stride) - f0) + (at(f, i, -off, stride) - f0));
    }
    b
}

fn periodic_pass(f: &[f64], out: &mut [f64], stride: usize, op: impl Fn(&[f64], usize, usize) -> f64) {
    let n = f.len() / stride;
    for (i, o) in out.iter_mut().enumerate() {
        *o = op(f, i, n);
    }
}
