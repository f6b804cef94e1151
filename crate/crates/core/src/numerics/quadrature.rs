use alloc::format;
use alloc::vec::Vec;

use super::{GridFunction, GridStyle};
use crate::{Error, Result};

/// Composite quadrature over the whole grid: Simpson on node grids (even
/// cell count required), the midpoint rule on midpoint grids.
pub fn integrate(f: &GridFunction) -> Result<f64> {
    let grid = f.grid();
    let h = grid.step();
    let v = f.values();
    match grid.style() {
        GridStyle::Midpoints => Ok(h * v.iter().sum::<f64>()),
        GridStyle::Nodes => {
            let n = grid.cells();
            if n % 2 != 0 {
                return Err(Error::Config(format!(
                    "Simpson's rule needs an even cell count, got {n}"
                )));
            }
            let mut odd = 0.0;
            let mut even = 0.0;
            for j in 1..n {
                if j % 2 == 1 {
                    odd += v[j];
                } else {
                    even += v[j];
                }
            }
            Ok(h / 3.0 * (v[0] + 4.0 * odd + 2.0 * even + v[n]))
        }
    }
}

/// Running integral `F(t_j) ≈ ∫_a^{t_j} f`.
///
/// On node grids even-indexed entries are Simpson partial sums and odd
/// entries add a quadratic-exact half panel, so every entry is exact for
/// quadratics. On midpoint grids `F(t_j) = h (Σ_{i<j} f_i + f_j / 2)`.
pub fn cumulative_integral(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let h = grid.step();
    let v = f.values();
    let mut out = Vec::with_capacity(v.len());
    match grid.style() {
        GridStyle::Midpoints => {
            let mut acc = 0.0;
            for &fj in v {
                out.push(h * (acc + 0.5 * fj));
                acc += fj;
            }
        }
        GridStyle::Nodes => {
            let n = grid.cells();
            out.push(0.0);
            for j in 1..=n {
                let next = if j % 2 == 0 {
                    out[j - 2] + h / 3.0 * (v[j - 2] + 4.0 * v[j - 1] + v[j])
                } else if j < n {
                    out[j - 1] + h / 12.0 * (5.0 * v[j - 1] + 8.0 * v[j] - v[j + 1])
                } else {
                    // last node of an odd grid: backward half panel
                    out[j - 1] + h / 12.0 * (-v[j - 2] + 8.0 * v[j - 1] + 5.0 * v[j])
                };
                out.push(next);
            }
        }
    }
    GridFunction::new(grid, out).expect("partial sums of finite samples are finite")
}

pub fn sup_norm(f: &GridFunction) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn l2_norm(f: &GridFunction) -> Result<f64> {
    let sq = f.map(|v| v * v)?;
    Ok(libm::sqrt(integrate(&sq)?))
}
