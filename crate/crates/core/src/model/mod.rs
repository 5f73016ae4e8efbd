//! Grid, fields, scenario description and initial data shared by the solvers.

mod grid;
mod initial;
mod scenario;
mod trajectory;

pub use grid::{Grid1D, ScalarField, MIN_CELLS};
pub use initial::{sample_initial_data, InitialData};
pub use scenario::{
    Hole, Regime, Scenario, BOUNDARY_CLEARANCE_CELLS, DEFAULT_CFL_SIGMA, DEFAULT_EPSILON,
    DEFAULT_FRAMES,
};
pub use trajectory::{FrameDiagnostics, SolverState, Trajectory, WindowStatus};

/// Relative floor (times `max u`) below which a cell counts as empty.
pub const SUPPORT_FLOOR: f64 = 1e-10;

pub fn build_grid(x_min: f64, x_max: f64, n_cells: usize) -> crate::Result<Grid1D> {
    Grid1D::new(x_min, x_max, n_cells)
}
