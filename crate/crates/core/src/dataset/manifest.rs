use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result, CLASS_NAMES, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::BadInput(format!("unknown split `{other}`"))),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub class_id: usize,
    pub class_name: String,
    pub split: Option<Split>,
    pub source_volume: Option<String>,
    pub plane_indices: Option<[usize; 3]>,
}

impl ManifestEntry {
    pub fn new(path: impl Into<String>, class_id: usize) -> ManifestEntry {
        ManifestEntry {
            path: path.into(),
            class_id,
            class_name: CLASS_NAMES.get(class_id).copied().unwrap_or("?").to_string(),
            split: None,
            source_volume: None,
            plane_indices: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.class_id >= NUM_CLASSES {
                return Err(Error::ClassOutOfRange(e.class_id));
            }
            if !seen.insert(e.path.as_str()) {
                return Err(Error::BadInput(format!("duplicate manifest path {}", e.path)));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == Some(split))
    }

    /// Number of entries per class id.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for e in &self.entries {
            counts[e.class_id] += 1;
        }
        counts
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Manifest> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
        let m = Manifest { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        Manifest::from_jsonl(&text).map_err(|e| e.at(path))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::harness::write_atomic(path, self.to_jsonl().as_bytes())
    }
}

/// One unassigned entry per regular file, classes in id order and files in
/// lexicographic order within each class.
pub fn build_manifest(class_dirs: &BTreeMap<usize, PathBuf>) -> Result<Manifest> {
    let mut entries = Vec::new();
    for (&class, dir) in class_dirs {
        if class >= NUM_CLASSES {
            return Err(Error::ClassOutOfRange(class));
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::from(e).at(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        if files.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        files.sort();
        entries.extend(
            files
                .into_iter()
                .map(|p| ManifestEntry::new(p.to_string_lossy().into_owned(), class)),
        );
    }
    let m = Manifest { entries };
    m.validate()?;
    Ok(m)
}

/// Number of training entries for a class of `n`: `floor(fraction * n)`,
/// with a small tolerance so that e.g. `0.7 * 10` is 7 despite rounding.
pub(crate) fn train_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Balances classes by seeded undersampling to the smallest class, then
/// assigns `floor(train_fraction * n)` entries of each class to train and
/// the rest to test. Entries dropped by undersampling stay in the manifest
/// with no split. Entries keep their manifest order.
pub fn split_balance(m: &Manifest, train_fraction: f64, seed: u64) -> Result<Manifest> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    m.validate()?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in m.entries.iter().enumerate() {
        by_class.entry(e.class_id).or_default().push(i);
    }
    if let Some(missing) = (0..NUM_CLASSES).find(|c| !by_class.contains_key(c)) {
        return Err(Error::EmptyClass(missing));
    }
    let n = by_class.values().map(Vec::len).min().unwrap_or(0);
    let n_train = train_count(train_fraction, n);
    let mut assigned: Vec<Option<Split>> = vec![None; m.entries.len()];
    for (&class, idx) in &by_class {
        let mut perm = idx.clone();
        perm.shuffle(&mut rng::stream(seed, &[class as u64]));
        for (rank, &i) in perm.iter().take(n).enumerate() {
            assigned[i] = Some(if rank < n_train { Split::Train } else { Split::Test });
        }
    }
    let entries = m
        .entries
        .iter()
        .zip(assigned)
        .map(|(e, split)| ManifestEntry { split, ..e.clone() })
        .collect();
    Ok(Manifest { entries })
}
