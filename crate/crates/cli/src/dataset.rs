//! CSV datasets, one column per node.
//!
//! ```text
//! # dass-dataset v1
//! # units: degC
//! roof,north,south
//! 12.5,11.0,13.1
//! ...
//! ```
//!
//! Both comment lines are optional. Rows are consecutive samples; empty
//! cells are missing and get filled by linear interpolation along the
//! column. Values are written in the shortest form that parses back to the
//! same number.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dass_core::FieldBlock;

pub const DATASET_FORMAT_HEADER: &str = "# dass-dataset v1";
const HEADER_PREFIX: &str = "# dass-dataset";
pub const DEFAULT_BLOCK_LENGTH: usize = 144;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub units: String,
    pub nodes: Vec<String>,
    /// Samples per node per block (one day by default).
    pub block_length: usize,
    /// `series[node][t]`, a whole number of blocks long.
    pub series: Vec<Vec<f64>>,
}

/// What ingestion had to repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestNotes {
    /// Rows of an incomplete trailing block that were discarded.
    pub dropped_rows: usize,
    pub interpolated_cells: usize,
}

impl IngestNotes {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dropped_rows > 0 {
            out.push(format!("{} rows dropped (incomplete trailing block)", self.dropped_rows));
        }
        if self.interpolated_cells > 0 {
            out.push(format!("{} missing cells interpolated", self.interpolated_cells));
        }
        out
    }
}

impl Dataset {
    pub fn block_count(&self) -> usize {
        self.series.first().map_or(0, |s| s.len() / self.block_length)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Blocks with the nodes concatenated node-major.
    pub fn blocks(&self) -> Result<Vec<FieldBlock>> {
        let n = self.block_length;
        (0..self.block_count())
            .map(|b| {
                let mut values = Vec::with_capacity(n * self.nodes.len());
                for s in &self.series {
                    values.extend_from_slice(&s[b * n..(b + 1) * n]);
                }
                Ok(FieldBlock::new(values, b, self.nodes.len())?)
            })
            .collect()
    }

    pub fn from_blocks(name: &str, units: &str, nodes: Vec<String>, blocks: &[FieldBlock]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| anyhow!("no blocks"))?;
        if first.node_count() != nodes.len() {
            bail!("{} node names for {} nodes", nodes.len(), first.node_count());
        }
        let n = first.per_node_length();
        let mut series = vec![Vec::with_capacity(n * blocks.len()); nodes.len()];
        for blk in blocks {
            if blk.node_count() != nodes.len() || blk.per_node_length() != n {
                bail!("block {} has a different shape", blk.block_index());
            }
            for (node, s) in series.iter_mut().enumerate() {
                s.extend_from_slice(blk.node(node));
            }
        }
        Ok(Self {
            name: name.to_string(),
            units: units.to_string(),
            nodes,
            block_length: n,
            series,
        })
    }
}

pub fn ingest_csv(path: &Path, block_length: usize) -> Result<(Dataset, IngestNotes)> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let name = path
        .file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    read_csv(file, &name, block_length).with_context(|| format!("reading {}", path.display()))
}

pub fn read_csv<R: Read>(mut input: R, name: &str, block_length: usize) -> Result<(Dataset, IngestNotes)> {
    if block_length == 0 {
        bail!("block length must be >= 1");
    }
    let mut text = String::new();
    input.read_to_string(&mut text)?;

    let mut units = String::new();
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('#')) {
        if line.starts_with(HEADER_PREFIX) && line != DATASET_FORMAT_HEADER {
            bail!("unsupported dataset format {line:?} (expected {DATASET_FORMAT_HEADER:?})");
        }
        if let Some(u) = line.trim_start_matches('#').trim().strip_prefix("units:") {
            units = u.trim().to_string();
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let nodes: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if nodes.is_empty() || nodes.iter().any(String::is_empty) {
        bail!("header row must name every node column");
    }

    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); nodes.len()];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, field) in record.iter().enumerate() {
            let value = if field.is_empty() {
                None
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    anyhow!(
                        "line {line}, column {} ({}): non-numeric value {field:?}",
                        col + 1,
                        nodes[col]
                    )
                })?;
                if !v.is_finite() {
                    bail!("line {line}, column {} ({}): non-finite value {field:?}", col + 1, nodes[col]);
                }
                Some(v)
            };
            cells[col].push(value);
        }
    }

    let rows = cells[0].len();
    let blocks = rows / block_length;
    if blocks < 2 {
        bail!("{rows} rows hold {blocks} complete block(s) of {block_length}; at least 2 are needed");
    }
    let kept = blocks * block_length;
    let mut notes = IngestNotes {
        dropped_rows: rows - kept,
        interpolated_cells: 0,
    };
    let mut series = Vec::with_capacity(nodes.len());
    for (col, mut column) in cells.into_iter().enumerate() {
        column.truncate(kept);
        let (filled, missing) =
            fill_missing(&column).ok_or_else(|| anyhow!("column {} ({}) has no values", col + 1, nodes[col]))?;
        notes.interpolated_cells += missing;
        series.push(filled);
    }
    Ok((
        Dataset {
            name: name.to_string(),
            units,
            nodes,
            block_length,
            series,
        },
        notes,
    ))
}

/// Linear interpolation between known neighbours, constant beyond the
/// first and last known value. `None` if nothing is known.
fn fill_missing(column: &[Option<f64>]) -> Option<(Vec<f64>, usize)> {
    let known: Vec<(usize, f64)> = column
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let (first, last) = (*known.first()?, *known.last()?);
    let mut out = vec![0.0; column.len()];
    out[..=first.0].fill(first.1);
    out[last.0..].fill(last.1);
    for w in known.windows(2) {
        let ((a, va), (b, vb)) = (w[0], w[1]);
        out[a] = va;
        for (i, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            *slot = va + (vb - va) * (i - a) as f64 / (b - a) as f64;
        }
    }
    out[last.0] = last.1;
    Some((out, column.len() - known.len()))
}

pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "{DATASET_FORMAT_HEADER}")?;
    if !dataset.units.is_empty() {
        writeln!(out, "# units: {}", dataset.units)?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&dataset.nodes)?;
    let rows = dataset.series.first().map_or(0, Vec::len);
    for t in 0..rows {
        writer.write_record(dataset.series.iter().map(|s| s[t].to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_csv(rows: usize) -> String {
        let mut s = String::from("a\n");
        for i in 0..rows {
            s.push_str(&format!("{}\n", i as f64 * 0.5));
        }
        s
    }

    #[test]
    fn chunking_and_truncation() {
        let (d, notes) = read_csv(column_csv(288).as_bytes(), "x", 144).unwrap();
        assert_eq!(d.block_count(), 2);
        assert_eq!(notes, IngestNotes::default());

        let (d, notes) = read_csv(column_csv(300).as_bytes(), "x", 144).unwrap();
        assert_eq!(d.block_count(), 2);
        assert_eq!(notes.dropped_rows, 12);
        assert_eq!(notes.warnings(), vec!["12 rows dropped (incomplete trailing block)"]);
    }

    #[test]
    fn too_few_blocks() {
        let err = read_csv(column_csv(200).as_bytes(), "x", 144).unwrap_err();
        assert!(err.to_string().contains("at least 2"), "{err}");
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let text = "# dass-dataset v1\na,b\n1,2\n3,oops\n";
        let err = read_csv(text.as_bytes(), "x", 1).unwrap_err().to_string();
        assert!(err.contains("line 4, column 2 (b)"), "{err}");
    }

    #[test]
    fn future_format_rejected() {
        assert!(read_csv("# dass-dataset v9\na\n1\n2\n".as_bytes(), "x", 1).is_err());
    }

    #[test]
    fn missing_cells_interpolated() {
        let text = "# units: W/m2\na,b\n,1\n2,\n4,5\n6,7\n";
        let (d, notes) = read_csv(text.as_bytes(), "x", 2).unwrap();
        assert_eq!(notes.interpolated_cells, 2);
        assert_eq!(d.units, "W/m2");
        assert_eq!(d.series[0], vec![2.0, 2.0, 4.0, 6.0]);
        assert_eq!(d.series[1], vec![1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn blocks_are_node_major() {
        let text = "a,b\n1,10\n2,20\n3,30\n4,40\n";
        let (d, _) = read_csv(text.as_bytes(), "x", 2).unwrap();
        let blocks = d.blocks().unwrap();
        assert_eq!(blocks[1].values(), &[3.0, 4.0, 30.0, 40.0]);
        let back = Dataset::from_blocks("x", "", d.nodes.clone(), &blocks).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn write_then_read_is_exact() {
        let d = Dataset {
            name: "x".into(),
            units: "degC".into(),
            nodes: vec!["n0".into(), "n1".into()],
            block_length: 3,
            series: vec![
                vec![0.1, 1.0 / 3.0, -2.5e-12, 7.0, 8.0, 1e300],
                vec![f64::MIN_POSITIVE, 2.0, 3.0, 4.0, 5.0, 6.0],
            ],
        };
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let (back, notes) = read_csv(buf.as_slice(), "x", 3).unwrap();
        assert_eq!(notes, IngestNotes::default());
        assert_eq!(back, d);
    }
}
