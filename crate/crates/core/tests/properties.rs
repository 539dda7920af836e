//! Property-based tests for the field, observable and coincidence layers.

use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

use pcsft::{count_coincidences, ClickRecord, FieldState, Grid, QuadraticObservable};

fn arb_amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n)
        .prop_map(|pairs| pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn nonzero_field(grid: Arc<Grid>, amplitudes: Vec<Complex64>) -> Option<FieldState> {
    let field = FieldState::new(grid, amplitudes).unwrap();
    if field.norm_squared() > 1e-9 {
        Some(field)
    } else {
        None
    }
}

proptest! {
    /// Born probabilities over any partition of the grid sum to 1.
    #[test]
    fn born_probability_partitions_to_unity(
        amplitudes in arb_amplitudes(12),
        split_a in 1usize..11,
        dv in 0.01f64..10.0,
    ) {
        let grid = Grid::line(0.0, dv, 12).unwrap();
        let Some(psi) = nonzero_field(grid, amplitudes) else {
            return Ok(());
        };
        let wf = psi.normalize().unwrap();
        let split_b = (split_a + 5).min(11);
        let parts: [Vec<usize>; 3] = [
            (0..split_a).collect(),
            (split_a..split_b).collect(),
            (split_b..12).collect(),
        ];
        let mut total = 0.0;
        for part in parts.iter().filter(|p| !p.is_empty()) {
            total += wf.born_probability(part).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-12, "partition sum = {total}");
    }

    /// Detection probabilities ignore global phase and scale of psi.
    #[test]
    fn born_probability_is_gauge_invariant(
        amplitudes in arb_amplitudes(8),
        scale in 0.05f64..20.0,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let grid = Grid::line(0.0, 0.3, 8).unwrap();
        let Some(psi) = nonzero_field(grid, amplitudes) else {
            return Ok(());
        };
        let factor = Complex64::from_polar(scale, phase);
        let region = [1usize, 4, 6];
        let p = psi.normalize().unwrap().born_probability(&region).unwrap();
        let p_scaled = psi
            .scaled(factor)
            .normalize()
            .unwrap()
            .born_probability(&region)
            .unwrap();
        prop_assert!((p - p_scaled).abs() < 1e-12, "{p} vs {p_scaled}");
    }

    /// normalize is idempotent.
    #[test]
    fn normalize_is_idempotent(amplitudes in arb_amplitudes(6)) {
        let grid = Grid::line(0.0, 0.7, 6).unwrap();
        let Some(psi) = nonzero_field(grid, amplitudes) else {
            return Ok(());
        };
        let once = psi.normalize().unwrap();
        let twice = once.as_field().normalize().unwrap();
        for (a, b) in once.amplitudes().iter().zip(twice.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    /// Quadratic functionals are additive and real-valued on any field.
    #[test]
    fn quadratic_functionals_add(
        amplitudes in arb_amplitudes(4),
        diag in prop::collection::vec(-5.0f64..5.0, 4),
        cell in 0usize..4,
    ) {
        let grid = Grid::line(0.0, 0.5, 4).unwrap();
        let phi = FieldState::new(Arc::clone(&grid), amplitudes).unwrap();
        let mut matrix = vec![Complex64::ZERO; 16];
        for (i, &d) in diag.iter().enumerate() {
            matrix[i * 4 + i] = Complex64::new(d, 0.0);
        }
        let a = QuadraticObservable::new(Arc::clone(&grid), matrix).unwrap();
        let b = QuadraticObservable::position_projector(Arc::clone(&grid), cell).unwrap();
        let lhs = a.add(&b).unwrap().evaluate(&phi).unwrap();
        let rhs = a.evaluate(&phi).unwrap() + b.evaluate(&phi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    /// Coincidence counting never pairs a click twice, never pairs within one
    /// detector, and is invariant under time translation.
    #[test]
    fn coincidence_count_respects_structure(
        times in prop::collection::vec(0.0f64..100.0, 2..60),
        detectors in prop::collection::vec(0usize..3, 60),
        window in 0.001f64..5.0,
        shift in -50.0f64..50.0,
    ) {
        let mut sorted = times;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let clicks: Vec<ClickRecord> = sorted
            .iter()
            .zip(&detectors)
            .map(|(&time, &detector)| ClickRecord { detector, time, replica: 0 })
            .collect();

        let pairs = count_coincidences(&clicks, window);
        prop_assert!(pairs <= clicks.len() as u64 / 2);

        // every pair uses at most one click of any single detector, so the
        // majority detector caps the count
        let mut counts = [0u64; 3];
        for c in &clicks {
            counts[c.detector] += 1;
        }
        let max_det = *counts.iter().max().unwrap();
        let total: u64 = counts.iter().sum();
        prop_assert!(pairs <= total - max_det);

        let shifted: Vec<ClickRecord> = clicks
            .iter()
            .map(|c| ClickRecord { time: c.time + shift, ..*c })
            .collect();
        prop_assert_eq!(pairs, count_coincidences(&shifted, window));
    }

    /// Wider windows never lose coincidences.
    #[test]
    fn coincidence_count_is_monotone_in_window(
        times in prop::collection::vec(0.0f64..20.0, 2..40),
        detectors in prop::collection::vec(0usize..2, 40),
        w_small in 0.001f64..1.0,
        factor in 1.0f64..10.0,
    ) {
        let mut sorted = times;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let clicks: Vec<ClickRecord> = sorted
            .iter()
            .zip(&detectors)
            .map(|(&time, &detector)| ClickRecord { detector, time, replica: 0 })
            .collect();
        let narrow = count_coincidences(&clicks, w_small);
        let wide = count_coincidences(&clicks, w_small * factor);
        prop_assert!(narrow <= wide, "narrow {narrow} > wide {wide}");
    }
}
