use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nlid_core::corpus::read_id_table;
use nlid_core::{Error, Result};
use tempfile::NamedTempFile;

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes to `path` atomically, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `(id, label)` rows: the first two columns of a predictions or gold file.
pub fn read_labels(path: &Path) -> Result<Vec<(String, String)>> {
    read_id_table(path)?
        .into_iter()
        .map(|(id, rest)| {
            let label = rest.split('\t').next().unwrap_or("").trim().to_owned();
            if label.is_empty() {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: 0,
                    message: format!("id `{id}` has an empty label"),
                });
            }
            Ok((id, label))
        })
        .collect()
}

/// Predicted labels reordered to follow `gold`; every id must appear in both.
pub fn align(gold: &[(String, String)], pred: Vec<(String, String)>, pred_name: &str) -> Result<Vec<String>> {
    let mut by_id: HashMap<String, String> = pred.into_iter().collect();
    let mut out = Vec::with_capacity(gold.len());
    for (id, _) in gold {
        let label = by_id.remove(id).ok_or_else(|| Error::ViewMismatch {
            id: id.clone(),
            view: pred_name.to_owned(),
        })?;
        out.push(label);
    }
    if let Some(extra) = by_id.into_keys().min() {
        return Err(Error::ViewMismatch {
            id: extra,
            view: "gold".into(),
        });
    }
    Ok(out)
}
