//! Shared numeric substrate: grids, quadrature, norms, bisection and
//! special functions. All reals are `f64`; tolerances are always explicit.

mod grid;
mod quadrature;
mod roots;
mod special;

pub use grid::{Grid, GridFunction, GridStyle};
pub use quadrature::{cumulative_integral, integrate, l2_norm, sup_norm};
pub use roots::bracket_root;
pub use special::{gamma, mittag_leffler};
