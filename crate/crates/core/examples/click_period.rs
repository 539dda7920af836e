//! Deterministic click period of a calibrated detector.
//!
//! With the driver frozen at `eta = 1` the signal carries constant power, so
//! a detector with threshold `eps` watching a cell with energy density
//! `|psi(x0)|^2` over volume `dV` clicks with the exact period
//!
//! ```text
//! period = eps * gamma / (|psi(x0)|^2 dV)
//! ```
//!
//! ```bash
//! cargo run --release --example click_period
//! ```

use pcsft::{
    run_detection, DetectorConfig, DriverMode, ExperimentConfig, FieldState, Grid,
    ProcessParams, Threshold,
};

fn main() -> pcsft::Result<()> {
    let dv = 0.1;
    let grid = Grid::line(0.0, dv, 1)?;
    let psi = FieldState::from_real(grid, &[1.0])?;
    let epsilon = 0.5;
    let process = ProcessParams::default();

    let cfg = ExperimentConfig {
        psi,
        detectors: vec![DetectorConfig::new("D", vec![0])],
        threshold: Threshold::Epsilon(epsilon),
        duration: 97.0,
        coincidence_window: 10.0 * process.dt,
        process,
        replicas: 1,
        driver_mode: DriverMode::FrozenUnit,
    };

    let expected = epsilon * cfg.process.gamma / (1.0 * dv);
    println!(
        "eps = {epsilon}, |psi(x0)|^2 = 1, dV = {dv}  ->  period = {expected} s, lambda -> {} clicks/s",
        1.0 / expected
    );

    let stats = run_detection(&cfg)?;
    println!(
        "simulated: {} clicks over {} s = floor(T / period); lambda = {:.4} clicks/s\n",
        stats.total_clicks, cfg.duration, stats.detectors[0].frequency
    );

    println!("first clicks and intervals:");
    for pair in stats.clicks.windows(2).take(8) {
        println!(
            "  t = {:>6.3} s   interval = {:.3} s",
            pair[1].time,
            pair[1].time - pair[0].time
        );
    }
    println!("\n(every interval is the analytic period, up to one step of {} s)", cfg.process.dt);
    Ok(())
}
