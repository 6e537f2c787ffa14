use crate::error::{Error, Result};
use num_complex::Complex64;

/// Equalized layers and their post-equalization noise variance
/// `sigma^2 [W W^H]_ii`, `W = (H^H H + sigma^2 I)^-1 H^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseOutput {
    pub symbols: Vec<Complex64>,
    pub noise_var: Vec<f64>,
}

/// `s = (H^H H + sigma^2 I)^-1 H^H y` for one resource element.
///
/// `h` is row-major `n_rx x n_layers`; `y` holds one sample per receive
/// antenna. Unit average symbol energy is assumed, so the regularizer is the
/// noise variance itself. With `sigma^2 = 0` this is the least-squares
/// (zero-forcing) solution and fails on rank-deficient `h`.
pub fn equalize_mmse(y: &[Complex64], h: &[Complex64], n_layers: usize, noise_var: f64) -> Result<MmseOutput> {
    let n_rx = y.len();
    if n_layers == 0 || h.len() != n_rx * n_layers {
        return Err(Error::LengthMismatch(h.len(), n_rx * n_layers));
    }
    if noise_var.is_nan() || noise_var < 0.0 || h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Config(
            "MMSE needs finite h and non-negative noise variance".into(),
        ));
    }
    let hh = |r: usize, c: usize| h[r * n_layers + c];
    let nl = n_layers;

    // Gram matrix A = H^H H + sigma^2 I, right-hand sides [H^H y | H^H]
    let width = 1 + n_rx;
    let mut a = vec![Complex64::new(0.0, 0.0); nl * nl];
    let mut rhs = vec![Complex64::new(0.0, 0.0); nl * width];
    for i in 0..nl {
        for j in 0..nl {
            a[i * nl + j] = (0..n_rx).map(|r| hh(r, i).conj() * hh(r, j)).sum();
        }
        a[i * nl + i] += noise_var;
        rhs[i * width] = (0..n_rx).map(|r| hh(r, i).conj() * y[r]).sum();
        for r in 0..n_rx {
            rhs[i * width + 1 + r] = hh(r, i).conj();
        }
    }
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    solve_in_place(&mut a, &mut rhs, nl, width, scale)?;

    let symbols = (0..nl).map(|i| rhs[i * width]).collect();
    let noise_var = (0..nl)
        .map(|i| noise_var * (0..n_rx).map(|r| rhs[i * width + 1 + r].norm_sqr()).sum::<f64>())
        .collect();
    Ok(MmseOutput { symbols, noise_var })
}

/// Gauss-Jordan elimination with partial pivoting; `rhs` is overwritten with
/// `A^-1 rhs`.
fn solve_in_place(a: &mut [Complex64], rhs: &mut [Complex64], n: usize, width: usize, scale: f64) -> Result<()> {
    let tol = scale.max(f64::MIN_POSITIVE) * 1e-13;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm()))
            .expect("non-empty range");
        if a[piv * n + col].norm() <= tol {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            for j in 0..width {
                rhs.swap(piv * width + j, col * width + j);
            }
        }
        let inv = a[col * n + col].inv();
        for j in 0..n {
            a[col * n + j] *= inv;
        }
        for j in 0..width {
            rhs[col * width + j] *= inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            for j in 0..width {
                let v = rhs[col * width + j];
                rhs[r * width + j] -= f * v;
            }
        }
    }
    Ok(())
}

/// One-layer case without allocation: `h^H y / (|h|^2 + sigma^2)`, plus the
/// post-equalization noise variance.
#[inline]
pub fn equalize_single_layer(y: &[Complex64], h: &[Complex64], noise_var: f64) -> Result<(Complex64, f64)> {
    let (mut num, mut g) = (Complex64::new(0.0, 0.0), 0.0);
    for (yy, hh) in y.iter().zip(h) {
        num += hh.conj() * yy;
        g += hh.norm_sqr();
    }
    let den = g + noise_var;
    if den <= 0.0 {
        return Err(Error::Singular);
    }
    Ok((num / den, noise_var * g / (den * den)))
}
