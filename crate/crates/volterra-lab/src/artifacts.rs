//! Artifact emission: CSV bodies with fixed 17-significant-digit floats,
//! JSON reports, the run manifest, and the binary increment dump.

use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Fixed decimal rendering: 17 significant digits, locale-free, so equal
/// configs produce byte-identical CSV bodies.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut body = String::with_capacity(rows.len() * 24 + header.len() + 2);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        body.push_str(&line.join(","));
        body.push('\n');
    }
    fs::write(path, body)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let body = serde_json::to_string_pretty(value).expect("report serialization");
    fs::write(path, body)
}

/// Run manifest: configuration echo, build identity, wall time and seeds.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub build: &'a str,
    pub wall_time_s: f64,
    pub seed_list: Vec<u64>,
}

pub fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    build: &str,
    wall_time_s: f64,
    seed_list: Vec<u64>,
) -> std::io::Result<()> {
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            command,
            config,
            build,
            wall_time_s,
            seed_list,
        },
    )
}

pub const INCREMENT_MAGIC: u16 = 0x4742;

/// Binary path dump: 8-byte header `{magic: u16, level: u16, n_steps: u32}`
/// followed by little-endian f64 increments.
pub fn write_increments(path: &Path, level: u32, increments: &[f64]) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    out.write_all(&INCREMENT_MAGIC.to_le_bytes())?;
    out.write_all(&(level as u16).to_le_bytes())?;
    out.write_all(&(increments.len() as u32).to_le_bytes())?;
    for &v in increments {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read back a binary path dump (header check included).
#[cfg_attr(not(test), allow(dead_code))]
pub fn read_increments(path: &Path) -> std::io::Result<(u16, u32, Vec<f64>)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "increment dump shorter than its header",
        ));
    }
    let magic = u16::from_le_bytes([bytes[0], bytes[1]]);
    if magic != INCREMENT_MAGIC {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "bad magic in increment dump",
        ));
    }
    let level = u16::from_le_bytes([bytes[2], bytes[3]]);
    let n = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    if bytes.len() != 8 + 8 * n {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "increment dump length does not match its header",
        ));
    }
    let values = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((level, n as u32, values))
}

pub fn ensure_dir(dir: &PathBuf) -> std::io::Result<()> {
    fs::create_dir_all(dir)
}
