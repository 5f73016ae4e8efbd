//! Shared fixtures for the criterion benches.

use ksfp_core::{Grid1D, InitialData, Scenario, SolverState};

/// Two-bump scenario on `n_cells` cells with the drift switched on.
pub fn two_bumps(n_cells: usize) -> Scenario {
    Scenario {
        m: 2.0,
        gamma: 1.0,
        q: 4.0,
        epsilon: 0.05,
        drift_enabled: true,
        grid: Grid1D::new(-6.4, 6.4, n_cells).expect("valid grid"),
        u0: InitialData::TwoBumps {
            left_center: -1.5,
            right_center: 1.5,
            width: 1.0,
            height: 1.0,
        },
        t_end: 0.012,
        cfl_sigma: 0.4,
        hole: None,
        n_frames: 10,
    }
}

pub fn initial(scenario: &Scenario) -> SolverState {
    ksfp_core::stepper::initial_state(scenario).expect("valid initial state")
}
