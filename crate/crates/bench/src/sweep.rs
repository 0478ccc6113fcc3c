//! Convenience sweep over the mismatch weight C and the auxiliary-sample
//! factor, producing the data for a quality-vs-hyperparameter curve.

use std::path::Path;

use bamoes::data::Series;

use crate::config::{MethodSpec, UeSpec};
use crate::report::ReportError;
use crate::runner::{run_benchmark, Metric};

pub const SWEEP_C_VALUES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const SWEEP_DOE_FACTORS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

pub const SWEEP_HEADER: &str = "weight_c,doe_factor,mean_miscal_area,series_used";

/// One sweep cell: the template method re-run with a (C, L-factor) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub weight_c: f64,
    pub doe_factor: f64,
    pub mean_miscal_area: f64,
    pub series_used: usize,
}

/// Run the grid for every (C, factor) combination using `template` (a
/// bamoes-style surrogate method) on all series.
pub fn run_sweep(
    series: &[Series<f64>],
    template: &MethodSpec,
    seed: u64,
    jobs: usize,
) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    for &weight_c in &SWEEP_C_VALUES {
        for &doe_factor in &SWEEP_DOE_FACTORS {
            let mut method = template.clone();
            if let UeSpec::Surrogate {
                weight_c: c,
                doe_factor: f,
                doe_count,
                ..
            } = &mut method.ue
            {
                *c = weight_c;
                *f = doe_factor;
                *doe_count = None;
            }
            method.name = format!("{}-c{:.1}-l{:.2}", template.name, weight_c, doe_factor);
            let table = run_benchmark(series, &[method], seed, jobs);
            let values: Vec<f64> = table
                .cells
                .values()
                .filter_map(|c| c.metrics())
                .map(|m| m.get(Metric::MiscalArea))
                .collect();
            let mean = if values.is_empty() {
                f64::NAN
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            };
            points.push(SweepPoint {
                weight_c,
                doe_factor,
                mean_miscal_area: mean,
                series_used: values.len(),
            });
        }
    }
    points
}

pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.weight_c, p.doe_factor, p.mean_miscal_area, p.series_used
        ));
    }
    std::fs::write(path, out).map_err(|e| ReportError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BaseModelSpec;
    use crate::synth;
    use bamoes::kernel::KernelFamily;
    use bamoes::surrogate::SurrogateVariant;

    #[test]
    fn sweep_covers_the_grid() {
        // tiny: one short series, few epochs, restricted to a subset by
        // running the full 9x4 grid but with a very cheap template
        let series = synth::standard_suite(1, 40, 4, 2, 3);
        let template = MethodSpec {
            name: "bam".into(),
            base: BaseModelSpec::Ols,
            ue: UeSpec::Surrogate {
                variant: SurrogateVariant::Bamoes,
                weight_c: 0.7,
                doe_count: None,
                doe_factor: 1.0,
                epochs: 2,
                learning_rate: 0.05,
                kernel: KernelFamily::Rbf,
            },
        };
        let points = run_sweep(&series, &template, 5, 2);
        assert_eq!(points.len(), SWEEP_C_VALUES.len() * SWEEP_DOE_FACTORS.len());
        assert!(points.iter().all(|p| p.series_used == 1));
        assert!(points.iter().all(|p| p.mean_miscal_area.is_finite()));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_sweep_csv(&points, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(SWEEP_HEADER));
        assert_eq!(text.lines().count(), 1 + points.len());
    }
}
