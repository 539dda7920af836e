//! Born weights from click counting.
//!
//! Runs the `two_peak` preset: a signal shape with a 1:4 energy split across
//! two detectors. The detectors know nothing about probabilities; they just
//! integrate energy and click at a threshold. The fraction of clicks each
//! one collects still converges to the Born weight `|Psi|^2 dV` of the
//! normalized shape.
//!
//! ```bash
//! cargo run --release --example born_rule
//! ```

use pcsft::{run_detection, Scenario};

fn main() -> pcsft::Result<()> {
    let resolved = Scenario::preset("two_peak")?.resolve()?;
    let cfg = &resolved.config;
    println!(
        "two_peak: T = {} s, dt = {} s, seed = {}",
        cfg.duration, cfg.process.dt, cfg.process.seed
    );

    let stats = run_detection(cfg)?;
    println!(
        "\n{:<10} {:>8} {:>12} {:>12} {:>12}",
        "detector", "clicks", "P", "P_oracle", "|P - oracle|"
    );
    for det in &stats.detectors {
        println!(
            "{:<10} {:>8} {:>12.6} {:>12.6} {:>12.2e}",
            det.id,
            det.clicks,
            det.probability,
            det.oracle_probability,
            (det.probability - det.oracle_probability).abs()
        );
    }

    let band = |p: f64| 3.0 * (p * (1.0 - p) / stats.total_clicks as f64).sqrt();
    println!(
        "\ntotal clicks = {}; 3-sigma binomial band at P = 0.2 is {:.4}",
        stats.total_clicks,
        band(0.2)
    );
    for det in &stats.detectors {
        let dev = (det.probability - det.oracle_probability).abs();
        println!(
            "{}: deviation {:.2e} {} band {:.2e}",
            det.id,
            dev,
            if dev <= band(det.oracle_probability) { "<=" } else { ">" },
            band(det.oracle_probability)
        );
    }
    Ok(())
}
