use std::io::Write;

use serde::Serialize;

use super::{MetricsReport, SweepRow};
use crate::error::Result;

/// Metric/score table: accuracy and error rates as percentages, the rest to
/// four decimals.
pub fn metrics_table(m: &MetricsReport) -> String {
    let mut rows = vec![
        ("Accuracy", format!("{:.2}%", m.accuracy * 100.0)),
        ("F1 Score", format!("{:.4}", m.f1)),
        ("Precision", format!("{:.4}", m.precision)),
        ("Recall (Sensitivity)", format!("{:.4}", m.recall)),
    ];
    if let Some(auc) = m.roc_auc {
        rows.push(("ROC-AUC", format!("{auc:.4}")));
    }
    rows.push(("False Negative Rate", format!("{:.2}%", m.fnr * 100.0)));
    rows.push(("False Positive Rate", format!("{:.2}%", m.fpr * 100.0)));

    let mut out = String::new();
    if let Some(t) = m.threshold {
        out.push_str(&format!("Metrics at threshold {t:.2}\n"));
    }
    out.push_str(&format!("{:<22}{:>10}\n", "Metric", "Score"));
    for (name, value) in rows {
        out.push_str(&format!("{name:<22}{value:>10}\n"));
    }
    let cm = &m.confusion;
    out.push_str(&format!(
        "\n{:<16}{:>16}{:>20}\n{:<16}{:>16}{:>20}\n{:<16}{:>16}{:>20}\n",
        "", "Predicted Safe", "Predicted Malicious", "Actual Safe", cm.tn, cm.fp, "Actual Malicious", cm.fn_, cm.tp
    ));
    out
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:>6}{:>9}{:>11}{:>9}{:>9}{:>9}\n",
        "tau", "F1", "Precision", "Recall", "FNR", "FPR"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>6.2}{:>9.4}{:>11.4}{:>9.4}{:>8.2}%{:>8.2}%\n",
            r.tau,
            r.f1,
            r.precision,
            r.recall,
            r.fnr * 100.0,
            r.fpr * 100.0
        ));
    }
    out
}

/// One JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{metrics_from_cm, ConfusionMatrix};

    #[test]
    fn metrics_table_layout() {
        let mut m = metrics_from_cm(&ConfusionMatrix::new(646, 1, 7, 293));
        m.threshold = Some(0.2);
        let t = metrics_table(&m);
        assert!(t.contains("Accuracy"));
        assert!(t.contains("99.16%"));
        assert!(t.contains("0.9865"));
        assert!(t.contains("2.33%"));
        assert!(t.contains("0.15%"));
        assert!(!t.contains("ROC-AUC"));
    }

    #[test]
    fn jsonl_lines() {
        let m = metrics_from_cm(&ConfusionMatrix::new(1, 0, 0, 1));
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[m.clone(), m]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: MetricsReport = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back.f1, 1.0);
    }
}
