//! Output files. Every CSV opens with a `#schema:<name>-v1` line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::run::Outcome;
use crate::error::Result;
use crate::forecasting::{write_bias_csv, BiasRow};

pub fn schema_line<W: Write>(mut out: W, name: &str) -> Result<W> {
    writeln!(out, "#schema:{name}-v1")?;
    Ok(out)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rows of the realized run of repetition 0.
pub fn write_transcript<W: Write>(outcome: &Outcome, out: W) -> Result<()> {
    let game = outcome.prepared.game();
    let stream = &outcome.stream;
    let mut w = csv::Writer::from_writer(schema_line(out, "transcript")?);
    let mut header = vec!["t".to_string()];
    header.extend(game.states().labels().iter().map(|l| format!("pi_{l}")));
    header.extend(["p", "r", "a", "y", "U", "V"].map(String::from));
    w.write_record(&header)?;
    let labels = game.states().labels();
    for (i, &a) in outcome.realized_actions().iter().enumerate() {
        let t = i + 1;
        let e = stream.entry(t);
        let y = stream.rounds[i].1;
        let tab = stream.book.table(e.policy_id);
        let mut rec = vec![t.to_string()];
        rec.extend(e.forecast.probs().iter().map(|p| p.to_string()));
        rec.push(stream.book.policy(e.policy_id).label());
        rec.push(game.action_label(e.decision.recommendation));
        rec.push(game.action_label(a));
        rec.push(labels[y].clone());
        rec.push(tab.u(a, y).to_string());
        rec.push(tab.v(a, y).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bias<W: Write>(rows: &[BiasRow], out: W) -> Result<()> {
    write_bias_csv(rows, schema_line(out, "bias")?)
}

/// `report.json` and `transcript.csv` under `dir`.
pub fn write_run(outcome: &Outcome, dir: &Path) -> Result<()> {
    write_json(&dir.join("report.json"), &outcome.report)?;
    let mut w = create(&dir.join("transcript.csv"))?;
    write_transcript(outcome, &mut w)?;
    w.flush()?;
    Ok(())
}
