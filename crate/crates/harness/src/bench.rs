//! Timing of the consistency-region construction as the number of points
//! grows.

use std::io::Write;
use std::time::Instant;

use shape_core::estimator::location_region;

use crate::experiment::{trial_scene, ExperimentConfig, ExperimentError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub m: usize,
    pub median_ms: f64,
    /// Largest intermediate polygon seen while clipping.
    pub max_vertices: usize,
}

impl BenchRow {
    pub fn ms_per_point(&self) -> f64 {
        self.median_ms / self.m as f64
    }
}

/// Number of timed samples per M; each sample repeats the construction
/// enough times to last at least `MIN_SAMPLE_MS`.
const SAMPLES: usize = 21;
const MIN_SAMPLE_MS: f64 = 2.0;

/// Median wall-clock of one `location_region` call for each M in `m_values`
/// (ascending), at the true orientation of a generated scene.
pub fn bench(config: &ExperimentConfig, m_values: &[usize]) -> Result<Vec<BenchRow>, ExperimentError> {
    if m_values.windows(2).any(|w| w[0] >= w[1]) || m_values.first() == Some(&0) {
        return Err(ExperimentError::Invalid("M list must be positive and strictly ascending".into()));
    }
    let world = config.settings.world()?;
    let mut rows = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let scene = trial_scene(&config.scene, m, 0)?;
        let theta = scene.true_pose.expect("generated scene").theta();
        let run = || {
            location_region(&scene.camera, theta, &scene.points, &scene.observations, &world)
                .map_err(|e| ExperimentError::Estimator(e.to_string()))
        };
        let slice = run()?;

        // calibrate the repetition count
        let mut reps = 1usize;
        loop {
            let start = Instant::now();
            for _ in 0..reps {
                std::hint::black_box(run()?);
            }
            if start.elapsed().as_secs_f64() * 1e3 >= MIN_SAMPLE_MS || reps >= 1 << 20 {
                break;
            }
            reps *= 2;
        }
        let mut samples: Vec<f64> = (0..SAMPLES)
            .map(|_| {
                let start = Instant::now();
                for _ in 0..reps {
                    std::hint::black_box(run()?);
                }
                Ok(start.elapsed().as_secs_f64() * 1e3 / reps as f64)
            })
            .collect::<Result<_, ExperimentError>>()?;
        samples.sort_by(f64::total_cmp);
        rows.push(BenchRow { m, median_ms: samples[SAMPLES / 2], max_vertices: slice.stats.max_vertices });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["M", "median_ms", "ms_per_point", "max_vertices"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            format!("{:.6}", r.median_ms),
            format!("{:.9}", r.ms_per_point()),
            r.max_vertices.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
