//! Input files and atomic output.

use std::io::Write;
use std::path::{Path, PathBuf};

use enrob_core::{DensityMatrix, Error, Ket, Result, StateFamily};
use serde::Deserialize;

/// A state file holds either a density matrix
/// `{"dim", "re", "im", "dims"}` (row-major) or a ket `{"dims", "re", "im"}`.
#[derive(Debug, Clone)]
pub struct LoadedState {
    pub rho: DensityMatrix,
    pub ket: Option<Ket>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Density(DensityMatrix),
    Pure(Ket),
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn parse_state(text: &str, origin: &str) -> Result<LoadedState> {
    let parsed: StateFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidState(format!("{origin}: not a density matrix or ket ({e})")))?;
    Ok(match parsed {
        StateFile::Density(rho) => LoadedState { rho, ket: None },
        StateFile::Pure(k) => LoadedState {
            rho: k.density(),
            ket: Some(k),
        },
    })
}

pub fn load_state(path: &Path) -> Result<LoadedState> {
    parse_state(&read(path)?, &path.display().to_string())
}

#[derive(Deserialize)]
struct FamilyFile {
    name: Option<String>,
    points: Vec<FamilyPoint>,
}

#[derive(Deserialize)]
struct FamilyPoint {
    q: f64,
    state: serde_json::Value,
}

/// A built-in family name, or a JSON file
/// `{"name": ..., "points": [{"q": ..., "state": <state>}, ...]}` whose
/// states are linearly interpolated in q.
pub fn load_family(spec: &str) -> Result<StateFamily> {
    if let Some(f) = StateFamily::builtin(spec) {
        return Ok(f);
    }
    let path = PathBuf::from(spec);
    if !path.is_file() {
        return Err(Error::InvalidArgument(format!(
            "unknown family {spec:?} (built-in: ghz-w, werner, constant-mixed; or a JSON file)"
        )));
    }
    let file: FamilyFile = serde_json::from_str(&read(&path)?)
        .map_err(|e| Error::InvalidArgument(format!("{}: malformed family file ({e})", path.display())))?;
    let points = file
        .points
        .into_iter()
        .map(|p| {
            Ok((
                p.q,
                parse_state(&p.state.to_string(), &format!("{} at q = {}", path.display(), p.q))?.rho,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let name = file.name.unwrap_or_else(|| {
        path.file_stem()
            .map_or("family".into(), |s| s.to_string_lossy().into_owned())
    });
    StateFamily::tabulated(name, points)
}

/// Fails early when `path` cannot be created.
pub fn check_writable(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Error::InvalidArgument(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    if path.is_dir() {
        return Err(Error::InvalidArgument(format!(
            "output path {} is a directory",
            path.display()
        )));
    }
    Ok(())
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    check_writable(path)?;
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
