//! Text container for field samples.
//!
//! One file per observed field: `#`-prefixed header lines carrying the
//! provenance and grid spec, then a CSV of point coordinates and values.
//! Plain UTF-8, diff-able, language-neutral; floats print in shortest
//! round-trip form so a re-run with the same seed is byte-identical.

use super::{AxisSpec, Dataset, FieldSample, Provenance, SamplingGrid};
use crate::error::CoreError;
use std::fmt::Write as _;
use std::path::Path;

pub fn render_field_sample(
    sample: &FieldSample,
    prov: &Provenance,
    sample_index: usize,
) -> String {
    let mut out = String::new();
    writeln!(out, "# equation: {}", prov.equation).unwrap();
    let theta: Vec<String> = prov.theta.iter().map(|t| t.to_string()).collect();
    writeln!(out, "# theta: {}", theta.join(" ")).unwrap();
    writeln!(out, "# sigma_r: {}", prov.sigma_r).unwrap();
    writeln!(out, "# seed: {}", prov.seed).unwrap();
    writeln!(out, "# sample: {sample_index}").unwrap();
    for axis in &sample.grid.axes {
        writeln!(out, "# axis: {} {} {}", axis.start, axis.step, axis.count).unwrap();
    }
    writeln!(out, "# components: {}", sample.components()).unwrap();
    let mut header: Vec<String> = (1..=sample.grid.dim()).map(|d| format!("x{d}")).collect();
    header.extend((1..=sample.components()).map(|j| format!("u{j}")));
    writeln!(out, "{}", header.join(",")).unwrap();
    for flat in 0..sample.grid.len() {
        let mut row: Vec<String> = sample
            .grid
            .point(flat)
            .iter()
            .map(|v| v.to_string())
            .collect();
        for comp in &sample.values {
            row.push(comp[flat].to_string());
        }
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

pub fn parse_field_sample(text: &str) -> Result<(FieldSample, Provenance, usize), CoreError> {
    let mut equation = None;
    let mut theta = Vec::new();
    let mut sigma_r = None;
    let mut seed = None;
    let mut sample_index = 0usize;
    let mut axes = Vec::new();
    let mut components = None;
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        let rest = rest.trim();
        let (key, value) = rest
            .split_once(':')
            .ok_or_else(|| CoreError::Parse(format!("bad header line '{line}'")))?;
        let value = value.trim();
        match key.trim() {
            "equation" => equation = Some(value.to_string()),
            "theta" => {
                theta = value
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CoreError::Parse("bad theta header".into()))?;
            }
            "sigma_r" => {
                sigma_r = Some(
                    value
                        .parse::<f64>()
                        .map_err(|_| CoreError::Parse("bad sigma_r header".into()))?,
                )
            }
            "seed" => {
                seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| CoreError::Parse("bad seed header".into()))?,
                )
            }
            "sample" => {
                sample_index = value
                    .parse::<usize>()
                    .map_err(|_| CoreError::Parse("bad sample header".into()))?;
            }
            "axis" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(CoreError::Parse("axis header needs start step count".into()));
                }
                let start: f64 = parts[0]
                    .parse()
                    .map_err(|_| CoreError::Parse("bad axis start".into()))?;
                let step: f64 = parts[1]
                    .parse()
                    .map_err(|_| CoreError::Parse("bad axis step".into()))?;
                let count: usize = parts[2]
                    .parse()
                    .map_err(|_| CoreError::Parse("bad axis count".into()))?;
                axes.push(AxisSpec::new(start, step, count)?);
            }
            "components" => {
                components = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| CoreError::Parse("bad components header".into()))?,
                )
            }
            other => return Err(CoreError::Parse(format!("unknown header key '{other}'"))),
        }
        lines.next();
    }
    let grid = SamplingGrid::new(axes)?;
    let n_comp = components.ok_or_else(|| CoreError::Parse("missing components header".into()))?;
    // skip the CSV column header
    lines
        .next()
        .ok_or_else(|| CoreError::Parse("missing CSV header".into()))?;
    let mut values = vec![Vec::with_capacity(grid.len()); n_comp];
    let dim = grid.dim();
    let mut rows = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dim + n_comp {
            return Err(CoreError::Parse(format!(
                "row has {} cells, expected {}",
                cells.len(),
                dim + n_comp
            )));
        }
        for (j, cell) in cells[dim..].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| CoreError::Parse(format!("bad value '{cell}'")))?;
            values[j].push(v);
        }
        rows += 1;
    }
    if rows != grid.len() {
        return Err(CoreError::Parse(format!(
            "expected {} rows, found {rows}",
            grid.len()
        )));
    }
    let prov = Provenance {
        equation: equation.ok_or_else(|| CoreError::Parse("missing equation header".into()))?,
        theta,
        sigma_r: sigma_r.ok_or_else(|| CoreError::Parse("missing sigma_r header".into()))?,
        seed: seed.ok_or_else(|| CoreError::Parse("missing seed header".into()))?,
    };
    Ok((FieldSample::new(grid, values)?, prov, sample_index))
}

/// Write one file per sample (`sample_000.csv`, ...) into `dir`.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<Vec<std::path::PathBuf>, CoreError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CoreError::invalid(format!("cannot create {}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for (d, sample) in dataset.samples.iter().enumerate() {
        let path = dir.join(format!("sample_{d:03}.csv"));
        let text = render_field_sample(sample, &dataset.provenance, d);
        std::fs::write(&path, text)
            .map_err(|e| CoreError::invalid(format!("cannot write {}: {e}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Read every `sample_*.csv` in `dir` (sorted by name) into a dataset.
pub fn read_dataset(dir: &Path) -> Result<Dataset, CoreError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CoreError::invalid(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("sample_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(CoreError::invalid(format!(
            "no sample_*.csv files in {}",
            dir.display()
        )));
    }
    let mut samples = Vec::new();
    let mut prov = None;
    for path in entries {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CoreError::invalid(format!("cannot read {}: {e}", path.display())))?;
        let (sample, p, _) = parse_field_sample(&text)?;
        prov.get_or_insert(p);
        samples.push(sample);
    }
    Dataset::new(samples, prov.expect("at least one sample"))
}
