//! Plot-ready artifacts: the Pareto front as CSV, the run stats as
//! JSON, and a per-evaluation scatter CSV. Everything emitted here is
//! numeric-with-header so the dataset module's own reader can load it
//! back.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::evolve::{Candidate, FitnessVector, Objective, ObjectiveSpec, ParetoFront, RunStats};

/// Structural columns shared by both CSVs.
const CANDIDATE_COLUMNS: [&str; 9] = [
    "id",
    "layers",
    "neurons",
    "rows",
    "cols",
    "vec_width",
    "interleave_rows",
    "interleave_cols",
    "batch_m",
];

fn candidate_fields(c: &Candidate) -> Vec<String> {
    vec![
        c.id.to_string(),
        c.genome.hidden_layers.len().to_string(),
        c.genome.neuron_count().to_string(),
        c.grid.rows.to_string(),
        c.grid.cols.to_string(),
        c.grid.vec_width.to_string(),
        c.grid.interleave_rows.to_string(),
        c.grid.interleave_cols.to_string(),
        c.batch_m.to_string(),
    ]
}

/// Front CSV: structural columns plus one column per run objective, one
/// row per front member, in front order.
pub fn write_pareto_csv<W: Write>(
    out: W,
    front: &ParetoFront,
    spec: &ObjectiveSpec,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        CANDIDATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(spec.objectives().map(|o| o.name().to_string()));
    w.write_record(&header)?;
    for (candidate, fitness) in &front.members {
        let mut row = candidate_fields(candidate);
        for objective in spec.objectives() {
            let value = fitness
                .get(objective)
                .expect("front members carry the run schema");
            row.push(value.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The Table III row, serialized with exactly its three field names.
pub fn write_stats_json<W: Write>(mut out: W, stats: &RunStats) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, stats)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Row counts for the scatter CSV; written alongside it as a sidecar so
/// the CSV itself stays purely tabular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub rows: usize,
    pub failed_excluded: usize,
    /// Ok evaluations lacking one of the scatter columns (for example a
    /// run that never measured efficiency).
    pub incomplete_excluded: usize,
}

/// A fitness value, falling back to the hardware model payload for
/// metrics the run did not declare as objectives.
fn measured(fitness: &FitnessVector, objective: Objective) -> Option<f64> {
    fitness.get(objective).or_else(|| {
        fitness
            .payloads
            .get("hardware_db")
            .and_then(|p| p.get(objective.name()))
            .and_then(|v| v.as_f64())
    })
}

/// Scatter CSV with the columns needed to redraw the paper-style
/// figures: accuracy vs throughput, efficiency, and model size.
pub fn write_report_csv<W: Write>(
    out: W,
    archive: &[(Candidate, FitnessVector)],
) -> io::Result<ReportMeta> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        CANDIDATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(
        ["accuracy", "outputs_per_s", "efficiency", "neuron_count"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    let mut meta = ReportMeta { rows: 0, failed_excluded: 0, incomplete_excluded: 0 };
    for (candidate, fitness) in archive {
        if !fitness.status.is_ok() {
            meta.failed_excluded += 1;
            continue;
        }
        let accuracy = measured(fitness, Objective::Accuracy);
        let outputs = measured(fitness, Objective::OutputsPerS);
        let efficiency = measured(fitness, Objective::Efficiency);
        let (Some(accuracy), Some(outputs), Some(efficiency)) =
            (accuracy, outputs, efficiency)
        else {
            meta.incomplete_excluded += 1;
            continue;
        };
        let mut row = candidate_fields(candidate);
        row.push(accuracy.to_string());
        row.push(outputs.to_string());
        row.push(efficiency.to_string());
        row.push(candidate.genome.neuron_count().to_string());
        w.write_record(&row)?;
        meta.rows += 1;
    }
    w.flush()?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_csv, LabelColumn};
    use crate::evolve::{dominates, pareto_front, EvalStatus, ObjectiveValue, Orientation};
    use crate::hw::{model_run, GridConfig, HardwareTarget};
    use crate::mlp::{Activation, LayerGene, MlpGenome};

    fn candidate(id: u64, neurons: usize) -> Candidate {
        Candidate {
            id,
            parent_id: None,
            genome: MlpGenome {
                input_size: 8,
                output_size: 2,
                hidden_layers: vec![LayerGene {
                    neurons,
                    activation: Activation::Relu,
                    has_bias: true,
                }],
            },
            grid: GridConfig::new(4, 4, 2, 2, 2),
            batch_m: 16,
        }
    }

    /// Archive over the real model so payload fields are authentic.
    fn model_archive(n: usize) -> Vec<(Candidate, FitnessVector)> {
        let target = HardwareTarget::arria10_like();
        let spec = ObjectiveSpec::accuracy_vs_throughput();
        (0..n)
            .map(|i| {
                let c = candidate(i as u64, 8 + 8 * i);
                let report =
                    model_run(&c.genome, &c.grid, &target, c.batch_m, 512).unwrap();
                let mut fv = FitnessVector::from_values(
                    &spec,
                    &[
                        (Objective::Accuracy, 0.6 + 0.03 * i as f64),
                        (Objective::OutputsPerS, report.outputs_per_s),
                    ],
                );
                fv.payloads.insert(
                    "hardware_db".to_string(),
                    serde_json::to_value(&report).unwrap(),
                );
                (c, fv)
            })
            .collect()
    }

    #[test]
    fn pareto_csv_rows_are_mutually_non_dominated_and_loadable() {
        let spec = ObjectiveSpec::accuracy_vs_throughput();
        let archive = model_archive(6);
        let front = pareto_front(&archive);
        assert!(front.len() >= 2, "test needs a non-trivial front");
        let mut buf = Vec::new();
        write_pareto_csv(&mut buf, &front, &spec).unwrap();

        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.ends_with("accuracy,outputs_per_s"));
        assert_eq!(lines.count(), front.len());

        for (_, a) in &front.members {
            for (_, b) in &front.members {
                assert!(!dominates(a, b).unwrap() || a == b);
            }
        }

        // self-consistency: our own reader loads it
        let ds = read_csv(
            buf.as_slice(),
            "pareto",
            &LabelColumn::Name("id".to_string()),
            true,
        )
        .unwrap();
        assert_eq!(ds.n_rows(), front.len());
        assert_eq!(ds.n_features, CANDIDATE_COLUMNS.len() - 1 + 2);
    }

    #[test]
    fn stats_json_has_exactly_the_table_fields() {
        let stats = RunStats { models_evaluated: 412, avg_eval_s: 1.25, total_eval_s: 515.0 };
        let mut buf = Vec::new();
        write_stats_json(&mut buf, &stats).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(keys, vec!["avg_eval_s", "models_evaluated", "total_eval_s"]);
        assert_eq!(obj["models_evaluated"], 412);
    }

    #[test]
    fn report_csv_excludes_failures_and_counts_them() {
        let mut archive = model_archive(4);
        archive.push((candidate(99, 16), FitnessVector::failed("worker crashed")));
        // an ok record with no efficiency anywhere
        archive.push((
            candidate(100, 16),
            FitnessVector {
                values: vec![ObjectiveValue {
                    objective: Objective::Accuracy,
                    orientation: Orientation::Maximize,
                    value: 0.5,
                }],
                status: EvalStatus::Ok,
                payloads: serde_json::Map::new(),
            },
        ));
        let mut buf = Vec::new();
        let meta = write_report_csv(&mut buf, &archive).unwrap();
        assert_eq!(meta, ReportMeta { rows: 4, failed_excluded: 1, incomplete_excluded: 1 });

        let ds = read_csv(
            buf.as_slice(),
            "report",
            &LabelColumn::Name("id".to_string()),
            true,
        )
        .unwrap();
        assert_eq!(ds.n_rows(), 4);
        // efficiency column pulled from the payload, inside (0, 1]
        let eff_col = ds.n_features - 2; // last two: efficiency, neuron_count
        for row in ds.features.rows() {
            assert!(row[eff_col] > 0.0 && row[eff_col] <= 1.0);
        }
    }
}
