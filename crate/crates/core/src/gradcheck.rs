//! Central finite differences for verifying autodiff gradients in tests.

use candle_core::Tensor;
use rand::Rng;

use crate::error::Result;

/// Central finite-difference derivative of `f` at `x` for the given flat
/// indices. `f` must be a pure function of `x`.
pub fn finite_diff<F>(mut f: F, x: &Tensor, indices: &[usize], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    let shape = x.dims().to_vec();
    let base = x.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1::<f64>()?;
    let mut out = Vec::with_capacity(indices.len());
    for &idx in indices {
        let mut plus = base.clone();
        plus[idx] += step;
        let xp = Tensor::from_vec(plus, shape.as_slice(), x.device())?.to_dtype(x.dtype())?;
        let mut minus = base.clone();
        minus[idx] -= step;
        let xm = Tensor::from_vec(minus, shape.as_slice(), x.device())?.to_dtype(x.dtype())?;
        out.push((f(&xp)? - f(&xm)?) / (2.0 * step));
    }
    Ok(out)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Sample `count` distinct flat indices into a tensor of `len` elements.
pub fn sample_indices(rng: &mut impl Rng, len: usize, count: usize) -> Vec<usize> {
    let count = count.min(len);
    let mut picked = std::collections::BTreeSet::new();
    while picked.len() < count {
        picked.insert(rng.random_range(0..len));
    }
    picked.into_iter().collect()
}

/// Assert that autodiff gradients match central differences on a sample of
/// entries. `auto_grad` is the full gradient tensor for `x`; tolerance is
/// relative.
pub fn check_grads<F>(
    f: F,
    x: &Tensor,
    auto_grad: &Tensor,
    indices: &[usize],
    step: f64,
    tol: f64,
    label: &str,
) -> Result<()>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    let fd = finite_diff(f, x, indices, step)?;
    let ad = auto_grad.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1::<f64>()?;
    for (k, &idx) in indices.iter().enumerate() {
        let rel = relative_error(fd[k], ad[idx]);
        assert!(
            rel < tol,
            "{label}: grad mismatch at {idx}: fd={} ad={} rel={rel:.3e}",
            fd[k],
            ad[idx]
        );
    }
    Ok(())
}
