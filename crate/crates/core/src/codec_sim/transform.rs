//! Separable orthonormal 2-D DCT-II.

use crate::error::{Error, Result};

/// Row-major `size×size` DCT-II basis, `basis[k * size + n] = s_k·cos(π(2n+1)k / 2size)`.
fn basis(size: usize) -> Vec<f64> {
    let n = size as f64;
    let mut m = Vec::with_capacity(size * size);
    for k in 0..size {
        let scale = if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        };
        for i in 0..size {
            let angle = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n);
            m.push(scale * angle.cos());
        }
    }
    m
}

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    let ok = |n: usize| n >= 4 && n.is_power_of_two();
    if ok(width) && ok(height) && len == width * height {
        Ok(())
    } else {
        Err(Error::BadBlockShape { width, height })
    }
}

/// Caches the basis matrices for one block shape.
#[derive(Debug, Clone)]
pub struct Dct2d {
    width: usize,
    height: usize,
    row_basis: Vec<f64>,
    col_basis: Vec<f64>,
}

impl Dct2d {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_shape(width, height, width * height)?;
        Ok(Dct2d {
            width,
            height,
            row_basis: basis(width),
            col_basis: basis(height),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forward(&self, block: &[f64]) -> Result<Vec<f64>> {
        check_shape(self.width, self.height, block.len())?;
        let (w, h) = (self.width, self.height);
        // rows: tmp[y][k] = Σ_x B_w[k][x] · block[y][x]
        let mut tmp = vec![0.0; w * h];
        for y in 0..h {
            let row = &block[y * w..(y + 1) * w];
            for k in 0..w {
                let b = &self.row_basis[k * w..(k + 1) * w];
                tmp[y * w + k] = b.iter().zip(row).map(|(a, x)| a * x).sum();
            }
        }
        // columns: out[v][k] = Σ_y B_h[v][y] · tmp[y][k]
        let mut out = vec![0.0; w * h];
        for v in 0..h {
            let b = &self.col_basis[v * h..(v + 1) * h];
            let dst = &mut out[v * w..(v + 1) * w];
            for (y, &coef) in b.iter().enumerate() {
                for (d, t) in dst.iter_mut().zip(&tmp[y * w..(y + 1) * w]) {
                    *d += coef * t;
                }
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_shape(self.width, self.height, coeffs.len())?;
        let (w, h) = (self.width, self.height);
        // columns: tmp[y][k] = Σ_v B_h[v][y] · coeffs[v][k]
        let mut tmp = vec![0.0; w * h];
        for v in 0..h {
            let b = &self.col_basis[v * h..(v + 1) * h];
            let src = &coeffs[v * w..(v + 1) * w];
            for (y, &coef) in b.iter().enumerate() {
                for (d, c) in tmp[y * w..(y + 1) * w].iter_mut().zip(src) {
                    *d += coef * c;
                }
            }
        }
        // rows: out[y][x] = Σ_k B_w[k][x] · tmp[y][k]
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            let src = &tmp[y * w..(y + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (k, &c) in src.iter().enumerate() {
                let b = &self.row_basis[k * w..(k + 1) * w];
                for (d, a) in dst.iter_mut().zip(b) {
                    *d += c * a;
                }
            }
        }
        Ok(out)
    }
}

pub fn forward_transform(block: &[f64], width: usize, height: usize) -> Result<Vec<f64>> {
    Dct2d::new(width, height)?.forward(block)
}

pub fn inverse_transform(coeffs: &[f64], width: usize, height: usize) -> Result<Vec<f64>> {
    Dct2d::new(width, height)?.inverse(coeffs)
}
