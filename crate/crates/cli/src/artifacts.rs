//! Artifact files stamped with the hash of the configuration that produced them.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

const HASH_PREFIX: &str = "# config-sha256: ";

/// SHA-256 of the value's JSON encoding, hex encoded.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes to JSON");
    hex::encode(Sha256::digest(&bytes))
}

/// JSON document whose first field records the configuration hash.
#[derive(Debug, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    #[serde(flatten)]
    pub body: T,
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write { path: path.to_path_buf(), source }
}

fn read_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::MissingArtifact { path: path.to_path_buf(), source }
}

fn malformed(path: &Path, message: impl ToString) -> CliError {
    CliError::BadArtifact { path: path.to_path_buf(), message: message.to_string() }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(write_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(write_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, hash: &str, body: &T) -> Result<(), CliError> {
    let doc = Stamped { config_hash: hash.to_string(), body };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| malformed(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// Plain JSON without a stamp, used for the resolved configuration itself.
pub fn write_plain_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| malformed(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Stamped<T>, CliError> {
    let text = fs::read_to_string(path).map_err(read_err(path))?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e))
}

/// CSV with a leading `# config-sha256:` comment line.
pub fn write_csv<T: Serialize>(path: &Path, hash: &str, rows: &[T]) -> Result<(), CliError> {
    let mut buf = format!("{HASH_PREFIX}{hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(|e| malformed(path, e))?;
        }
        w.flush().map_err(write_err(path))?;
    }
    fs::File::create(path).and_then(|mut f| f.write_all(&buf)).map_err(write_err(path))
}

/// Rows of a CSV written by [`write_csv`], with the recorded hash.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<(Option<String>, Vec<T>), CliError> {
    let file = fs::File::open(path).map_err(read_err(path))?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first).map_err(read_err(path))?;
    let hash = first.trim_end().strip_prefix(HASH_PREFIX).map(str::to_string);
    let file = fs::File::open(path).map_err(read_err(path))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let rows = reader.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| malformed(path, e))?;
    Ok((hash, rows))
}

/// Hash recorded on the first line of a text artifact, if any.
pub fn read_text_hash(path: &Path) -> Result<Option<String>, CliError> {
    let text = fs::read_to_string(path).map_err(read_err(path))?;
    Ok(text.lines().next().and_then(|l| l.strip_prefix(HASH_PREFIX)).map(str::to_string))
}

pub fn hash_line(hash: &str) -> String {
    format!("{HASH_PREFIX}{hash}")
}

/// File names produced by `race` and consumed by `plot`.
pub struct RunFiles {
    pub config: PathBuf,
    pub events: PathBuf,
    pub metrics: PathBuf,
    pub timing: PathBuf,
    pub trajectory: PathBuf,
    pub observations: PathBuf,
    pub gp: PathBuf,
    pub gp_plot: PathBuf,
    pub track_plot: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            config: dir.join("config.json"),
            events: dir.join("events.json"),
            metrics: dir.join("metrics.json"),
            timing: dir.join("timing.json"),
            trajectory: dir.join("trajectory.csv"),
            observations: dir.join("observations.csv"),
            gp: dir.join("gp.json"),
            gp_plot: dir.join("gp.svg"),
            track_plot: dir.join("track.svg"),
        }
    }
}
