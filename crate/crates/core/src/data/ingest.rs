//! Expression matrix + labels + interaction graph ingestion.
//!
//! Expected files:
//! - expression CSV: header `sample_id,<gene>,<gene>,...`, one row per sample;
//! - labels CSV: `sample_id,label`;
//! - edge list TSV: `<gene_a>\t<gene_b>\t<weight>`;
//! - optional survival CSV: `sample_id,time_days,event` with event in {0, 1}.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use super::{Dataset, SurvivalRecord};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    /// Edge-list genes absent from the expression matrix.
    pub dropped_genes: Vec<String>,
    /// Labelled samples without an expression row.
    pub dropped_samples: Vec<String>,
    /// Expression genes with no incident edge; kept as isolated vertices.
    pub isolated_genes: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RealData {
    pub dataset: Dataset,
    pub graph: WeightedGraph,
    pub report: IngestReport,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column: 0,
        message: e.to_string(),
    }
}

fn parse_err(path: &Path, line: u64, column: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        column,
        message,
    }
}

fn read_records(path: &Path, min_fields: usize) -> Result<(csv::StringRecord, Vec<(u64, csv::StringRecord)>)> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < min_fields {
        return Err(parse_err(path, 1, header.len() + 1, format!("expected at least {min_fields} columns")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn sort_label_names(names: &mut [String]) {
    if names.iter().all(|n| n.parse::<u64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<u64>().unwrap());
    } else {
        names.sort();
    }
}

/// Reads a numeric matrix CSV with header `sample_id,<col>,<col>,...`.
/// Returns the row ids, column names and values.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let (header, rows) = read_records(path, 2)?;
    if &header[0] != "sample_id" {
        return Err(parse_err(path, 1, 1, format!("first column must be `sample_id`, found `{}`", &header[0])));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    {
        let mut seen = HashSet::new();
        for (c, g) in columns.iter().enumerate() {
            if !seen.insert(g.as_str()) {
                return Err(parse_err(path, 1, c + 2, format!("duplicate column `{g}`")));
            }
        }
    }
    let mut sample_ids = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * columns.len());
    let mut seen_samples = HashSet::new();
    for (line, rec) in &rows {
        if rec.len() != columns.len() + 1 {
            return Err(parse_err(path, *line, rec.len().min(columns.len() + 1) + 1,
                format!("expected {} fields, found {}", columns.len() + 1, rec.len())));
        }
        let id = rec[0].to_string();
        if !seen_samples.insert(id.clone()) {
            return Err(Error::Join(format!("duplicate sample id `{id}` in {}", path.display())));
        }
        for (c, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, *line, c + 1, format!("invalid number `{field}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, *line, c + 1, format!("non-finite value `{field}`")));
            }
            values.push(v);
        }
        sample_ids.push(id);
    }
    let x = Array2::from_shape_vec((sample_ids.len(), columns.len()), values).expect("row lengths checked");
    Ok((sample_ids, columns, x))
}

/// Reads a survival CSV (`sample_id,time_days,event`, event in {0, 1}) in
/// file order. Duplicate ids are a join error.
pub fn read_survival_csv(path: &Path) -> Result<Vec<(String, SurvivalRecord)>> {
    let (header, rows) = read_records(path, 3)?;
    if header.iter().collect::<Vec<_>>() != ["sample_id", "time_days", "event"] {
        return Err(parse_err(path, 1, 1, "header must be `sample_id,time_days,event`".into()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        if rec.len() != 3 {
            return Err(parse_err(path, *line, rec.len().min(3) + 1, format!("expected 3 fields, found {}", rec.len())));
        }
        let time: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(path, *line, 2, format!("invalid time `{}`", &rec[1])))?;
        if !(time >= 0.0 && time.is_finite()) {
            return Err(parse_err(path, *line, 2, format!("time must be finite and >= 0, got {time}")));
        }
        let event = match &rec[2] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(path, *line, 3, format!("event must be 0 or 1, got `{other}`"))),
        };
        if !seen.insert(rec[0].to_string()) {
            return Err(Error::Join(format!("duplicate sample id `{}` in {}", &rec[0], path.display())));
        }
        out.push((rec[0].to_string(), SurvivalRecord { time, event }));
    }
    Ok(out)
}

/// Loads and joins the expression, label, edge and optional survival files.
///
/// Vertices follow the expression column order. Every expression sample must
/// have exactly one label; labels for unknown samples are dropped and
/// reported.
pub fn load_real_dataset(
    expression: &Path,
    labels: &Path,
    edges: &Path,
    survival: Option<&Path>,
) -> Result<RealData> {
    let mut report = IngestReport::default();

    let (sample_ids, genes, x) = read_matrix_csv(expression)?;
    let seen_samples: HashSet<String> = sample_ids.iter().cloned().collect();

    let (_, label_rows) = read_records(labels, 2)?;
    let mut label_of: HashMap<String, String> = HashMap::new();
    let mut label_order: Vec<String> = Vec::new();
    for (line, rec) in &label_rows {
        if rec.len() != 2 {
            return Err(parse_err(labels, *line, rec.len().min(2) + 1, format!("expected 2 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        if label_of.insert(id.clone(), rec[1].to_string()).is_some() {
            return Err(Error::Join(format!("duplicate sample id `{id}` in {}", labels.display())));
        }
        label_order.push(id);
    }
    for id in &sample_ids {
        if !label_of.contains_key(id) {
            return Err(Error::Join(format!("sample `{id}` has no label in {}", labels.display())));
        }
    }
    report.dropped_samples = label_order
        .into_iter()
        .filter(|id| !seen_samples.contains(id))
        .collect();

    let mut class_names: Vec<String> = sample_ids
        .iter()
        .map(|id| label_of[id].clone())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    sort_label_names(&mut class_names);
    let class_id: HashMap<&str, usize> = class_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let y: Vec<usize> = sample_ids.iter().map(|id| class_id[label_of[id].as_str()]).collect();

    let (edge_names, edge_graph) = WeightedGraph::read_edge_list(edges)?;
    let gene_idx: HashMap<&str, usize> = genes.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let edge_to_gene: Vec<Option<usize>> = edge_names.iter().map(|n| gene_idx.get(n.as_str()).copied()).collect();
    report.dropped_genes = edge_names
        .iter()
        .zip(&edge_to_gene)
        .filter(|(_, m)| m.is_none())
        .map(|(n, _)| n.clone())
        .collect();
    if edge_to_gene.iter().all(Option::is_none) {
        return Err(Error::EmptyIntersection);
    }
    let mut kept: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in edge_graph.edges() {
        if let (Some(a), Some(b)) = (edge_to_gene[e.a], edge_to_gene[e.b]) {
            kept.insert((a.min(b), a.max(b)), e.weight);
        }
    }
    let graph = WeightedGraph::new(genes.len(), kept.into_iter().map(|((a, b), w)| (a, b, w)))?;
    let mut has_edge = vec![false; genes.len()];
    for e in graph.edges() {
        has_edge[e.a] = true;
        has_edge[e.b] = true;
    }
    for (g, _) in genes.iter().zip(&has_edge).filter(|(_, h)| !**h) {
        report.isolated_genes.push(g.clone());
        report.warnings.push(format!("gene `{g}` has no edges; kept as an isolated vertex"));
    }
    if !report.dropped_genes.is_empty() {
        report.warnings.push(format!(
            "{} edge-list genes not in the expression matrix were dropped",
            report.dropped_genes.len()
        ));
    }

    let mut dataset = Dataset::new(x, y, sample_ids, genes, class_names)?;

    if let Some(path) = survival {
        let by_id: HashMap<String, SurvivalRecord> = read_survival_csv(path)?.into_iter().collect();
        let records = dataset
            .sample_ids
            .iter()
            .map(|id| {
                by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Join(format!("sample `{id}` has no survival record")))
            })
            .collect::<Result<Vec<_>>>()?;
        dataset = dataset.with_survival(records)?;
    }

    Ok(RealData {
        dataset,
        graph,
        report,
    })
}
