//! Report serialization: a machine-readable CSV and a rendered table.

use super::metrics::{ClassReport, MetricsReport, PartitionReport};
use super::HarnessError;

/// Emits the 4-column CSV (`partition,metric,value,support`). Per-class
/// rows use `partition/class` in the partition column. Values print in
/// round-trip `f64` form so `parse_csv(emit_csv(r)) == r`.
pub fn emit_csv(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str("# zsic report v1\n");
    out.push_str("# accuracy = support-weighted recall (equals correct/total)\n");
    out.push_str("# f1 = support-weighted macro F1\n");
    out.push_str("partition,metric,value,support\n");
    for p in &report.partitions {
        out.push_str(&format!("{},accuracy,{},{}\n", p.name, p.accuracy, p.support));
        out.push_str(&format!("{},f1,{},{}\n", p.name, p.f1, p.support));
        for c in &p.per_class {
            out.push_str(&format!(
                "{}/{},recall,{},{}\n",
                p.name, c.name, c.recall, c.support
            ));
            out.push_str(&format!(
                "{}/{},f1,{},{}\n",
                p.name, c.name, c.f1, c.support
            ));
        }
    }
    out
}

pub fn parse_csv(text: &str) -> Result<MetricsReport, HarnessError> {
    let mut report = MetricsReport::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "partition,metric,value,support" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Usage(format!(
                "report line {}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| HarnessError::Usage(format!("report line {}: bad value", lineno + 1)))?;
        let support: usize = fields[3]
            .parse()
            .map_err(|_| HarnessError::Usage(format!("report line {}: bad support", lineno + 1)))?;
        match fields[0].split_once('/') {
            None => {
                let partition = fields[0];
                if report.partition(partition).is_none() {
                    report.partitions.push(PartitionReport {
                        name: partition.to_string(),
                        accuracy: 0.0,
                        f1: 0.0,
                        support,
                        per_class: Vec::new(),
                    });
                }
                let p = report
                    .partitions
                    .iter_mut()
                    .find(|p| p.name == partition)
                    .unwrap();
                match fields[1] {
                    "accuracy" => p.accuracy = value,
                    "f1" => p.f1 = value,
                    other => {
                        return Err(HarnessError::Usage(format!(
                            "report line {}: unknown metric `{other}`",
                            lineno + 1
                        )))
                    }
                }
            }
            Some((partition, class)) => {
                let p = report
                    .partitions
                    .iter_mut()
                    .find(|p| p.name == partition)
                    .ok_or_else(|| {
                        HarnessError::Usage(format!(
                            "report line {}: class row before its partition",
                            lineno + 1
                        ))
                    })?;
                if p.per_class.last().map(|c| c.name.as_str()) != Some(class) {
                    p.per_class.push(ClassReport {
                        name: class.to_string(),
                        recall: 0.0,
                        f1: 0.0,
                        support,
                    });
                }
                let c = p.per_class.last_mut().unwrap();
                match fields[1] {
                    "recall" => c.recall = value,
                    "f1" => c.f1 = value,
                    other => {
                        return Err(HarnessError::Usage(format!(
                            "report line {}: unknown metric `{other}`",
                            lineno + 1
                        )))
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Human-readable table with one row per partition.
pub fn render_table(report: &MetricsReport, title: &str) -> String {
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>8}\n",
        "partition", "acc", "f1", "support"
    ));
    for p in &report.partitions {
        out.push_str(&format!(
            "{:<10} {:>8.4} {:>8.4} {:>8}\n",
            p.name, p.accuracy, p.f1, p.support
        ));
    }
    out.push('\n');
    for p in &report.partitions {
        if p.per_class.is_empty() {
            continue;
        }
        out.push_str(&format!("[{}] per class\n", p.name));
        out.push_str(&format!(
            "  {:<20} {:>8} {:>8} {:>8}\n",
            "class", "recall", "f1", "support"
        ));
        for c in &p.per_class {
            out.push_str(&format!(
                "  {:<20} {:>8.4} {:>8.4} {:>8}\n",
                c.name, c.recall, c.f1, c.support
            ));
        }
    }
    out
}
