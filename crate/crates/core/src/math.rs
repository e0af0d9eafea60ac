//! Float helpers that work without `std`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Logistic sigmoid, evaluated without overflow for large |z|.
#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))`.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    let a = if z > 0.0 { z } else { 0.0 };
    a + libm::log1p(exp(-z.abs()))
}

#[inline]
pub(crate) fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}
