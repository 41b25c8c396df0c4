//! Python/matplotlib scripts that render run records. The tool itself
//! draws nothing.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::output::{parse_record, ReadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Histogram,
    Census,
    PhaseSolve,
    GameHistogram,
    GameDistribution,
    Wavepacket,
    Convergence,
    Roughness,
}

const SCHEMAS: &[(Schema, &[&str])] = &[
    (Schema::Histogram, &["outcome", "label", "bare", "effective", "empirical"]),
    (Schema::Census, &["l", "raw", "reduced"]),
    (Schema::PhaseSolve, &["rank", "path", "phase"]),
    (Schema::GameHistogram, &["x", "count", "frequency"]),
    (Schema::GameDistribution, &["x", "probability"]),
    (Schema::Wavepacket, &["step", "t", "x", "re", "im", "abs2"]),
    (Schema::Convergence, &["eps", "steps", "l2_error"]),
    (Schema::Roughness, &["eps", "mean_sq", "std_err", "statistic", "samples"]),
];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no plot is defined for columns [{0}]")]
    UnknownSchema(String),
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn detect_schema(header: &[String]) -> Result<Schema, PlotError> {
    SCHEMAS
        .iter()
        .find(|(_, cols)| cols.len() == header.len() && cols.iter().zip(header).all(|(a, b)| a == b))
        .map(|(s, _)| *s)
        .ok_or_else(|| PlotError::UnknownSchema(header.join(",")))
}

fn body(schema: Schema) -> &'static str {
    match schema {
        Schema::Histogram => {
            "x = range(len(df))
w = 0.4
ax.bar([i - w / 2 for i in x], df['bare'], w, label='bare P')
ax.bar([i + w / 2 for i in x], df['effective'], w, label='effective p')
if df['empirical'].notna().any():
    ax.plot(x, df['empirical'], 'k.', label='sampled')
ax.set_xticks(list(x))
ax.set_xticklabels(df['label'])
ax.set_xlabel('outcome')
ax.set_ylabel('probability')
ax.legend()
"
        }
        Schema::Census => {
            "ax.bar(df['l'] - 0.2, df['raw'].astype(float), 0.4, label='raw')
ax.bar(df['l'] + 0.2, df['reduced'].astype(float), 0.4, label='twin-reduced')
ax.set_yscale('log')
ax.set_xlabel('non-classical factors l')
ax.set_ylabel('terms')
ax.legend()
"
        }
        Schema::PhaseSolve => {
            "ax.stem(df['rank'], df['phase'])
ax.set_xticks(df['rank'])
ax.set_xticklabels(df['path'], rotation=90)
ax.set_xlabel('classical path')
ax.set_ylabel('phase [rad]')
"
        }
        Schema::GameHistogram => {
            "ax.bar(df['x'], df['frequency'], width=0.8)
ax.set_xlabel('final state')
ax.set_ylabel('frequency')
"
        }
        Schema::GameDistribution => {
            "ax.bar(df['x'], df['probability'], width=0.8)
ax.set_xlabel('state')
ax.set_ylabel('probability')
"
        }
        Schema::Wavepacket => {
            "for step, snap in df.groupby('step'):
    ax.plot(snap['x'], snap['abs2'], label=f\"t = {snap['t'].iloc[0]:g}\")
ax.set_xlabel('x')
ax.set_ylabel('|psi|^2')
ax.legend()
"
        }
        Schema::Convergence => {
            "ax.loglog(df['eps'], df['l2_error'], 'o-', label='L2 error')
ref = df['l2_error'].iloc[-1] * df['eps'] / df['eps'].iloc[-1]
ax.loglog(df['eps'], ref, 'k--', label='slope 1')
ax.set_xlabel('time step')
ax.set_ylabel('L2 error')
ax.legend()
"
        }
        Schema::Roughness => {
            "ax.errorbar(df['eps'], df['mean_sq'], yerr=df['std_err'], fmt='o-')
ax.set_xscale('log')
ax.set_yscale('log')
ax.set_xlabel('time step')
ax.set_ylabel('mean squared increment')
"
        }
    }
}

pub fn script(schema: Schema, csv_path: &str) -> String {
    let png = Path::new(csv_path).with_extension("png");
    format!(
        "import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv({csv:?}, comment='#')
fig, ax = plt.subplots(figsize=(7, 4.5))
{body}fig.tight_layout()
fig.savefig({png:?}, dpi=150)
",
        csv = csv_path,
        body = body(schema),
        png = png.to_string_lossy(),
    )
}

/// Write a plotting script for the record at `csv_path` to `script_path`.
pub fn emit_plot_script(csv_path: &Path, script_path: &Path) -> Result<Schema, PlotError> {
    let record = parse_record(&fs::read_to_string(csv_path)?)?;
    let schema = detect_schema(&record.header)?;
    fs::write(script_path, script(schema, &csv_path.to_string_lossy()))?;
    Ok(schema)
}
