//! On-disk store layout.
//!
//! A store directory holds three files:
//!
//! * `samples.log` — append-only primary log of fixed-width records:
//!   timestamp as 8-byte little-endian signed integer, followed by one
//!   IEEE-754 64-bit little-endian value per dimension.
//! * `index.bin` — the secondary index: `(code: u64 LE, t: i64 LE)`
//!   records sorted by `(code, t)`.
//! * `manifest.txt` — human-readable `key = value` lines carrying the
//!   format version, quantization config, entry count and time range.
//!
//! Writing the same store twice produces byte-identical files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use zebra_core::quant::{DimSpec, QuantizationConfig};
use zebra_core::store::{Manifest, Store, FORMAT_VERSION};

pub const SAMPLES_FILE: &str = "samples.log";
pub const INDEX_FILE: &str = "index.bin";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {what}")]
    Manifest {
        path: PathBuf,
        line: usize,
        what: String,
    },
    #[error("{path}: file size {size} is not a multiple of the {record} byte record width")]
    Truncated {
        path: PathBuf,
        size: u64,
        record: usize,
    },
    #[error("{path}: holds {got} records but the manifest says {want}")]
    CountMismatch { path: PathBuf, got: usize, want: u64 },
    #[error("invalid quantization config in manifest: {0}")]
    BadConfig(#[from] zebra_core::quant::ConfigError),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Handle to a store directory on disk.
#[derive(Debug, Clone)]
pub struct StoreDir {
    root: PathBuf,
}

impl StoreDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn samples_path(&self) -> PathBuf {
        self.root.join(SAMPLES_FILE)
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    /// Persist a built store, creating the directory if needed.
    pub fn write(root: impl Into<PathBuf>, store: &Store) -> Result<Self, FormatError> {
        let dir = Self::new(root);
        fs::create_dir_all(&dir.root).map_err(io_err(&dir.root))?;

        let path = dir.samples_path();
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::with_capacity(1 << 20, file);
        for sample in store.samples() {
            w.write_all(&sample.t_ms.to_le_bytes()).map_err(io_err(&path))?;
            for &v in sample.values {
                w.write_all(&v.to_le_bytes()).map_err(io_err(&path))?;
            }
        }
        w.flush().map_err(io_err(&path))?;

        let path = dir.index_path();
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::with_capacity(1 << 20, file);
        for &(code, t) in store.raw_index() {
            w.write_all(&code.to_le_bytes()).map_err(io_err(&path))?;
            w.write_all(&t.to_le_bytes()).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;

        let path = dir.manifest_path();
        fs::write(&path, render_manifest(&store.manifest())).map_err(io_err(&path))?;
        Ok(dir)
    }

    /// Load the whole store into memory.
    pub fn open(&self) -> Result<Store, FormatError> {
        let manifest = self.read_manifest()?;
        let config = manifest.config.clone();
        let dims = config.dims();
        let n = manifest.entry_count as usize;

        let path = self.samples_path();
        let record = 8 + 8 * dims;
        let mut ts = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * dims);
        {
            let file = File::open(&path).map_err(io_err(&path))?;
            let size = file.metadata().map_err(io_err(&path))?.len();
            if size % record as u64 != 0 {
                return Err(FormatError::Truncated { path, size, record });
            }
            let mut r = BufReader::with_capacity(1 << 20, file);
            let mut buf = vec![0u8; record];
            loop {
                match read_record(&mut r, &mut buf) {
                    Ok(true) => {
                        ts.push(i64::from_le_bytes(buf[..8].try_into().unwrap()));
                        for d in 0..dims {
                            let o = 8 + d * 8;
                            values.push(f64::from_le_bytes(buf[o..o + 8].try_into().unwrap()));
                        }
                    }
                    Ok(false) => break,
                    Err(e) => return Err(io_err(&path)(e)),
                }
            }
        }
        if ts.len() != n {
            return Err(FormatError::CountMismatch {
                path,
                got: ts.len(),
                want: manifest.entry_count,
            });
        }

        let path = self.index_path();
        let mut index = Vec::with_capacity(n);
        {
            let file = File::open(&path).map_err(io_err(&path))?;
            let size = file.metadata().map_err(io_err(&path))?.len();
            if size % 16 != 0 {
                return Err(FormatError::Truncated { path, size, record: 16 });
            }
            let mut r = BufReader::with_capacity(1 << 20, file);
            let mut buf = [0u8; 16];
            loop {
                match read_record(&mut r, &mut buf) {
                    Ok(true) => index.push((
                        u64::from_le_bytes(buf[..8].try_into().unwrap()),
                        i64::from_le_bytes(buf[8..].try_into().unwrap()),
                    )),
                    Ok(false) => break,
                    Err(e) => return Err(io_err(&path)(e)),
                }
            }
        }
        if index.len() != n {
            return Err(FormatError::CountMismatch {
                path,
                got: index.len(),
                want: manifest.entry_count,
            });
        }

        Ok(Store::from_parts(config, ts, values, index))
    }

    pub fn read_manifest(&self) -> Result<Manifest, FormatError> {
        let path = self.manifest_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        parse_manifest(&text, &path)
    }
}

fn read_record<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(false);
            }
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "partial record at end of file",
            ));
        }
        filled += n;
    }
    Ok(true)
}

pub fn render_manifest(m: &Manifest) -> String {
    let mut out = String::new();
    out.push_str(&format!("format_version = {}\n", m.format_version));
    out.push_str(&format!("dims = {}\n", m.config.dims()));
    for (d, spec) in m.config.dim_specs().iter().enumerate() {
        out.push_str(&format!("dim{d}_min = {}\n", spec.min));
        out.push_str(&format!("dim{d}_max = {}\n", spec.max));
        out.push_str(&format!("dim{d}_bits = {}\n", spec.bits));
    }
    out.push_str(&format!("entry_count = {}\n", m.entry_count));
    out.push_str(&format!("t_min = {}\n", m.t_min_ms));
    out.push_str(&format!("t_max = {}\n", m.t_max_ms));
    out
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Manifest, FormatError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| FormatError::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            what: "expected `key = value`".into(),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }

    let lookup = |key: &str| -> Result<(String, usize), FormatError> {
        pairs
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.clone(), *l))
            .ok_or_else(|| FormatError::Manifest {
                path: path.to_path_buf(),
                line: 0,
                what: format!("missing key `{key}`"),
            })
    };
    fn parsed<T: std::str::FromStr>(
        (v, line): (String, usize),
        key: &str,
        path: &Path,
    ) -> Result<T, FormatError> {
        v.parse().map_err(|_| FormatError::Manifest {
            path: path.to_path_buf(),
            line,
            what: format!("bad value for `{key}`: `{v}`"),
        })
    }

    let version: u32 = parsed(lookup("format_version")?, "format_version", path)?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let dims: usize = parsed(lookup("dims")?, "dims", path)?;
    let mut specs = Vec::with_capacity(dims);
    for d in 0..dims {
        let min: f64 = parsed(lookup(&format!("dim{d}_min"))?, "min", path)?;
        let max: f64 = parsed(lookup(&format!("dim{d}_max"))?, "max", path)?;
        let bits: u32 = parsed(lookup(&format!("dim{d}_bits"))?, "bits", path)?;
        specs.push(DimSpec::new(min, max, bits));
    }
    let config = QuantizationConfig::new(specs)?;
    Ok(Manifest {
        format_version: version,
        config,
        entry_count: parsed(lookup("entry_count")?, "entry_count", path)?,
        t_min_ms: parsed(lookup("t_min")?, "t_min", path)?,
        t_max_ms: parsed(lookup("t_max")?, "t_max", path)?,
    })
}
