//! Measuring in a generalized orthonormal basis.
//!
//! Position detection is the special case of projecting the signal on delta
//! functions; any orthonormal basis works the same way, with one virtual
//! detector per element fed the coefficient energy `|<phi, e_j>|^2`. A
//! Hadamard pair splits a fully localized state 50/50, and the delta basis
//! reproduces the position pipeline click for click.
//!
//! ```bash
//! cargo run --release --example basis_measurement
//! ```

use std::sync::Arc;

use pcsft::{
    run_basis_measurement, run_detection, DetectorConfig, DriverMode, ExperimentConfig,
    FieldState, Grid, ProcessParams, Threshold,
};

fn main() -> pcsft::Result<()> {
    let grid = Grid::line(0.0, 1.0, 2)?;
    let psi = FieldState::from_real(Arc::clone(&grid), &[1.0, 0.0])?;
    let process = ProcessParams {
        seed: 8,
        ..ProcessParams::default()
    };
    let cfg = ExperimentConfig {
        psi,
        detectors: vec![
            DetectorConfig::new("cell0", vec![0]),
            DetectorConfig::new("cell1", vec![1]),
        ],
        threshold: Threshold::Calibration(0.0005),
        duration: 1e4 * process.tau_pq,
        coincidence_window: 10.0 * process.dt,
        process,
        replicas: 1,
        driver_mode: DriverMode::Stochastic,
    };

    println!("psi = (1, 0): fully localized on cell 0\n");

    let s = 1.0 / (2.0 * grid.cell_volume()).sqrt();
    let hadamard = vec![
        FieldState::from_real(Arc::clone(&grid), &[s, s])?,
        FieldState::from_real(Arc::clone(&grid), &[s, -s])?,
    ];
    let had = run_basis_measurement(&cfg, &hadamard)?;
    println!("hadamard basis {{(1,1), (1,-1)}}/sqrt(2 dV):");
    for det in &had.detectors {
        println!(
            "  {}:  P = {:.4}  (|<Psi, e>|^2 = {:.4},  {} clicks)",
            det.id, det.probability, det.oracle_probability, det.clicks
        );
    }

    let position = run_detection(&cfg)?;
    let delta = run_basis_measurement(&cfg, &grid.delta_basis())?;
    println!("\ndelta basis vs position pipeline (same seed):");
    for (p, d) in position.detectors.iter().zip(&delta.detectors) {
        println!(
            "  {} -> {}: clicks {} vs {}, P {:.6} vs {:.6}",
            p.id, d.id, p.clicks, d.clicks, p.probability, d.probability
        );
    }
    println!(
        "  click logs identical: {}",
        position.clicks == delta.clicks
    );
    Ok(())
}
