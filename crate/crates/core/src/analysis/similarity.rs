use crate::error::{spec_err, Result};

/// Overlap of two non-negative distributions,
/// `S = (sum sqrt(a b))^2 / (sum a * sum b)`.
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(spec_err(format!(
            "distributions differ in support: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|&x| !(x >= 0.0)) {
        return Err(spec_err("distributions must be non-negative"));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if sa == 0.0 || sb == 0.0 {
        return Err(spec_err("distribution has zero total mass"));
    }
    let overlap: f64 = a.iter().zip(b).map(|(x, y)| (x * y).sqrt()).sum();
    Ok((overlap * overlap / (sa * sb)).min(1.0))
}
