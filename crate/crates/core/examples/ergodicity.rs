//! Ergodicity: one long trajectory vs many independent draws.
//!
//! A detector only ever sees a single time-dependent realization, yet the
//! theory's averages are over a measure on field space. This example checks
//! the bridge for the energy density and prints how the time-average error
//! shrinks as the window grows (like sqrt(tau / Delta)), plus the underlying
//! energy identities of the ensemble.
//!
//! ```bash
//! cargo run --release --example ergodicity
//! ```

use pcsft::numerics::linear_fit;
use pcsft::{
    ensemble_average, ergodicity_report, position_density, sample_ensemble, time_average,
    FieldState, Grid, ProcessParams, SignalDriver,
};

fn main() -> pcsft::Result<()> {
    let grid = Grid::line(0.0, 0.2, 4)?;
    let psi = FieldState::from_real(grid, &[0.4, 1.3, -0.7, 0.2])?;
    let params = ProcessParams {
        seed: 11,
        ..ProcessParams::default()
    };
    let cell = 1;

    // ensemble identities: mean |phi(x0)|^2 and mean ||phi||^2
    let samples = sample_ensemble(&psi, 100_000, 99);
    let density = ensemble_average(|phi| position_density(phi, cell), &samples)?;
    let energy = ensemble_average(|phi| phi.norm_squared(), &samples)?;
    println!("ensemble over {} draws:", samples.len());
    println!(
        "  mean |phi(x0)|^2 = {:.6} +- {:.1e}   (analytic {:.6})",
        density.mean,
        density.std_error,
        position_density(&psi, cell)
    );
    println!(
        "  mean ||phi||^2   = {:.6} +- {:.1e}   (analytic {:.6})",
        energy.mean,
        energy.std_error,
        psi.norm_squared()
    );

    // the bridge at Delta = 1e4 tau, n = 1e4
    let report = ergodicity_report(
        |phi| position_density(phi, cell),
        &psi,
        &params,
        1e4 * params.tau_pq,
        10_000,
    )?;
    println!("\ntime vs ensemble for |phi(x0)|^2 at Delta = 1e4 tau:");
    println!(
        "  time avg     = {:.6} +- {:.1e}",
        report.time_average, report.time_std_error
    );
    println!(
        "  ensemble avg = {:.6} +- {:.1e}",
        report.ensemble_average, report.ensemble_std_error
    );
    println!(
        "  difference   = {:+.2e} (3 sigma = {:.2e}) -> converged: {}",
        report.difference,
        3.0 * report.combined_std_error,
        report.converged
    );

    // window sweep: RMS error over independent trajectories per window
    println!("\ntime-average RMS error vs window (expect ~ sqrt(tau / Delta)):");
    let expected = position_density(&psi, cell);
    let mut ln_delta = Vec::new();
    let mut ln_rms = Vec::new();
    for (i, mult) in [100.0, 1_000.0, 10_000.0].iter().enumerate() {
        let delta = mult * params.tau_pq;
        let reps = 48u64;
        let mut sq = 0.0;
        for rep in 0..reps {
            let p = ProcessParams {
                seed: 1000 + 100 * i as u64 + rep,
                ..params
            };
            let mut driver = SignalDriver::new(&p)?;
            let avg = time_average(|phi| position_density(phi, cell), &mut driver, &psi, delta)?;
            sq += (avg - expected) * (avg - expected);
        }
        let rms = (sq / reps as f64).sqrt();
        println!("  Delta = {:>8} tau   rms = {:.4e}", mult, rms);
        ln_delta.push(delta.ln());
        ln_rms.push(rms.ln());
    }
    let (slope, _) = linear_fit(&ln_delta, &ln_rms);
    println!("  log-log slope = {slope:.3} (sqrt law -> -0.5)");
    Ok(())
}
