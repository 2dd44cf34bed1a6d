use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub entities: usize,
    pub facts: usize,
    /// Facts carrying a temporal validity.
    pub temporal_anchors: usize,
    pub synonymy_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub metric: String,
    pub values: Vec<f64>,
    pub average: f64,
}

/// Metrics as rows, one column per partition plus an average column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub columns: Vec<String>,
    pub rows: Vec<StatsRow>,
}

fn group_thousands(v: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, v.abs());
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (s, None),
    };
    let mut out = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if let Some(f) = frac {
        out.push('.');
        out.push_str(&f);
    }
    if v < 0.0 {
        out.insert(0, '-');
    }
    out
}

impl StatsTable {
    /// Columns `h1..hN` plus `Average` over per-partition graph stats.
    pub fn graph(partitions: &[GraphStats]) -> Self {
        let mut columns: Vec<String> = (1..=partitions.len()).map(|i| format!("h{i}")).collect();
        columns.push("Average".into());
        let metric = |name: &str, f: fn(&GraphStats) -> usize| {
            let values: Vec<f64> = partitions.iter().map(|s| f(s) as f64).collect();
            let average = if values.is_empty() {
                0.0
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            };
            StatsRow {
                metric: name.into(),
                values,
                average,
            }
        };
        Self {
            columns,
            rows: vec![
                metric("Entities", |s| s.entities),
                metric("Facts", |s| s.facts),
                metric("Temporal Anchors", |s| s.temporal_anchors),
                metric("Synonymy Edges", |s| s.synonymy_edges),
            ],
        }
    }

    pub fn render(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["Metric".to_string()];
        header.extend(self.columns.iter().cloned());
        cells.push(header);
        for r in &self.rows {
            let mut line = vec![r.metric.clone()];
            line.extend(r.values.iter().map(|v| group_thousands(*v, 0)));
            line.push(group_thousands(r.average, 1));
            cells.push(line);
        }
        let width: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|row| row.get(c).map_or(0, String::len)).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for row in &cells {
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(s, "{cell:<w$}", w = width[c]);
                } else {
                    let _ = write!(s, "  {cell:>w$}", w = width[c]);
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands() {
        assert_eq!(group_thousands(1525.8, 1), "1,525.8");
        assert_eq!(group_thousands(13652.4, 1), "13,652.4");
        assert_eq!(group_thousands(902.0, 0), "902");
        assert_eq!(group_thousands(1_000_000.0, 0), "1,000,000");
    }

    #[test]
    fn table_shape() {
        let t = StatsTable::graph(&[
            GraphStats { entities: 1, facts: 2, temporal_anchors: 1, synonymy_edges: 0 },
            GraphStats { entities: 3, facts: 4, temporal_anchors: 2, synonymy_edges: 1 },
        ]);
        assert_eq!(t.columns, vec!["h1", "h2", "Average"]);
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.rows[0].average, 2.0);
        let text = t.render();
        assert!(text.lines().next().unwrap().starts_with("Metric"));
        assert_eq!(text.lines().count(), 5);
    }
}
